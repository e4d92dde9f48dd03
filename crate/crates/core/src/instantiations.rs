//! Factories for the classic design families expressed as triangular
//! systems, and the decomposition of Lai-Massey rounds into triangular
//! and affine stages.

use crate::cipher::{pipeline_apply, AffineLayer, RoundSpec, Stage};
use crate::error::{check_domain, Error, Result};
use crate::field::{gcd, inv_mod, Fe, FieldCtx};
use crate::gtds::{Branch, Coupling, Gtds, Layout};
use crate::poly::{has_no_zeros_uni, is_permutation_polynomial, MultiPoly, UniPoly, ZeroCheck};
use crate::space::{check_arity, domain_size, Space};

/// Largest domain on which pipelines are compared with their direct maps.
pub const EQUIVALENCE_LIMIT: u64 = 1 << 16;

/// Exponents offered for the high-degree Arion branch.
pub const ARION_D2_CHOICES: [u64; 6] = [121, 123, 125, 129, 161, 257];

fn require_permutation(ctx: &FieldCtx, p: &UniPoly, branch: Option<usize>) -> Result<()> {
    if is_permutation_polynomial(ctx, p)? {
        Ok(())
    } else {
        Err(Error::NotAPermutation { branch })
    }
}

/// Unbalanced Feistel round with an expanding round function:
/// `f_i = x_i + f(x_n)` for `i < n`, `f_n = x_n`, then the cyclic shift
/// `(x_1, ..., x_n) -> (x_n, x_1, ..., x_(n-1))`.
pub fn make_feistel_unbalanced(ctx: &FieldCtx, f: &UniPoly, n: usize) -> Result<RoundSpec> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("Feistel needs n > 1, got {n}")));
    }
    let h = f.lift(n, n - 1);
    let branches = (1..n)
        .map(|_| Branch::new(UniPoly::x(), MultiPoly::one(n), h.clone()))
        .collect();
    let core = Gtds::new(ctx, branches, UniPoly::x())?;
    let perm: Vec<usize> = (0..n).map(|i| (i + n - 1) % n).collect();
    RoundSpec::new(vec![core.into()], AffineLayer::permutation(ctx, &perm))
}

/// Substitution-permutation round: `S` on every branch, then `mix`.
pub fn make_spn(ctx: &FieldCtx, s: &UniPoly, n: usize, mix: AffineLayer) -> Result<RoundSpec> {
    let active: Vec<usize> = (0..n).collect();
    make_partial_spn(ctx, s, n, &active, mix)
}

/// SPN round where `S` is only applied on the 0-based `active` branches.
pub fn make_partial_spn(
    ctx: &FieldCtx,
    s: &UniPoly,
    n: usize,
    active: &[usize],
    mix: AffineLayer,
) -> Result<RoundSpec> {
    if n == 0 {
        return Err(Error::InvalidParameter("SPN needs n > 0".into()));
    }
    if let Some(&i) = active.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidParameter(format!(
            "active index {i} out of range for n = {n}"
        )));
    }
    if !active.is_empty() {
        require_permutation(ctx, s, None)?;
    }
    let p = |i: usize| {
        if active.contains(&i) {
            s.clone()
        } else {
            UniPoly::x()
        }
    };
    let branches = (0..n - 1).map(|i| Branch::plain(p(i), n)).collect();
    let core = Gtds::new(ctx, branches, p(n - 1))?;
    RoundSpec::new(vec![core.into()], mix)
}

/// The three triangular systems `F_1 = (x - y, y)`, `F_2 = (x, y + g(x))`
/// and `F_3 = (x + y, y)` whose composition is the two-branch Lai-Massey
/// round.
pub fn make_lai_massey_2(ctx: &FieldCtx, g: &UniPoly) -> Result<Vec<Stage>> {
    let minus_one = ctx.from_int(-1);
    let f1 = Gtds::new(
        ctx,
        vec![Branch::new(
            UniPoly::x(),
            MultiPoly::one(2),
            MultiPoly::var(2, 1).scale(ctx, minus_one),
        )],
        UniPoly::x(),
    )?;
    let f2 = Gtds::new(
        ctx,
        vec![Branch::new(UniPoly::x(), MultiPoly::one(2), g.lift(2, 1))],
        UniPoly::x(),
    )?
    .with_layout(Layout::Reversed);
    let f3 = Gtds::new(
        ctx,
        vec![Branch::new(UniPoly::x(), MultiPoly::one(2), MultiPoly::var(2, 1))],
        UniPoly::x(),
    )?;
    Ok(vec![f1.into(), f2.into(), f3.into()])
}

/// `(x + g(x - y), y + g(x - y))`.
pub fn lai_massey_2_direct(ctx: &FieldCtx, g: &UniPoly, x: &[Fe]) -> Result<Vec<Fe>> {
    check_arity(2, x.len())?;
    let t = g.eval(ctx, ctx.sub(x[0], x[1]));
    Ok(vec![ctx.add(x[0], t), ctx.add(x[1], t)])
}

/// Parameters of a generalized Lai-Massey permutation on `F_q^n`.
///
/// `g` has `1 + n - m` variables: the weighted-sum slot followed by
/// `x_(m+1), ..., x_n`, where `m` is the last index with a nonzero weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaiMasseyParams {
    pub weights: Vec<Fe>,
    pub perms: Vec<UniPoly>,
    pub g: MultiPoly,
}

impl LaiMasseyParams {
    /// 1-based index of the last nonzero weight.
    pub fn m(&self) -> Option<usize> {
        self.weights.iter().rposition(|w| !w.is_zero()).map(|i| i + 1)
    }
}

/// A validated generalized Lai-Massey permutation with its five-stage
/// decomposition.
#[derive(Clone, Debug)]
pub struct GeneralizedLaiMassey {
    ctx: FieldCtx,
    params: LaiMasseyParams,
    m: usize,
    stages: Vec<Stage>,
}

impl GeneralizedLaiMassey {
    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    pub fn n(&self) -> usize {
        self.params.weights.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn params(&self) -> &LaiMasseyParams {
        &self.params
    }

    /// `F_1, ..., F_5` in application order.
    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// `f_i = p_i(x_i) + g(sum_j w_j p_j(x_j), x_(m+1..n))` for `i <= m`,
    /// `f_i = p_i(x_i)` otherwise.
    pub fn eval_direct(&self, x: &[Fe]) -> Result<Vec<Fe>> {
        check_arity(self.n(), x.len())?;
        let ctx = &self.ctx;
        let px: Vec<Fe> = self
            .params
            .perms
            .iter()
            .zip(x)
            .map(|(p, &v)| p.eval(ctx, v))
            .collect();
        let s = px
            .iter()
            .zip(&self.params.weights)
            .fold(Fe::ZERO, |acc, (&v, &w)| ctx.add(acc, ctx.mul(v, w)));
        let mut args = Vec::with_capacity(1 + self.n() - self.m);
        args.push(s);
        args.extend_from_slice(&x[self.m..]);
        let t = self.params.g.eval_unchecked(ctx, &args);
        Ok(px
            .iter()
            .enumerate()
            .map(|(i, &v)| if i < self.m { ctx.add(v, t) } else { v })
            .collect())
    }

    pub fn eval_pipeline(&self, x: &[Fe]) -> Result<Vec<Fe>> {
        pipeline_apply(&self.stages, x)
    }
}

/// Validates `params` and builds the direct map together with the
/// decomposition `F_5 . F_4 . F_3 . F_2 . F_1`.
pub fn make_generalized_lai_massey(
    ctx: &FieldCtx,
    params: LaiMasseyParams,
) -> Result<GeneralizedLaiMassey> {
    let n = params.weights.len();
    check_arity(n, params.perms.len())?;
    let sum = params
        .weights
        .iter()
        .fold(Fe::ZERO, |acc, &w| ctx.add(acc, w));
    if !sum.is_zero() {
        return Err(Error::WeightSumNonzero);
    }
    let m = match params.m() {
        Some(m) if m >= 2 => m,
        _ => return Err(Error::BadM),
    };
    check_arity(1 + n - m, params.g.nvars())?;
    for (i, p) in params.perms.iter().enumerate() {
        require_permutation(ctx, p, Some(i + 1))?;
    }
    let w = &params.weights;

    let first = |i: usize| if i < m { params.perms[i].clone() } else { UniPoly::x() };
    let f1 = Gtds::new(
        ctx,
        (0..n - 1).map(|i| Branch::plain(first(i), n)).collect(),
        first(n - 1),
    )?;

    let mut a2 = vec![vec![Fe::ZERO; n]; n];
    for i in 0..n {
        if i < m - 1 {
            a2[i][i] = if w[i].is_zero() { Fe::ONE } else { w[i] };
        } else if i == m - 1 {
            a2[i][..m].copy_from_slice(&w[..m]);
        } else {
            a2[i][i] = Fe::ONE;
        }
    }
    let f2 = AffineLayer::linear(ctx, a2)?;

    // The weighted sum sits in slot m - 1; the remaining arguments of g are
    // the untouched tail.
    let slots: Vec<usize> = (m - 1..n).collect();
    let g_full = params.g.remap(n, &slots);
    let f3 = Gtds::new(
        ctx,
        (0..n - 1)
            .map(|i| {
                if i < m - 1 {
                    let c = if w[i].is_zero() { Fe::ONE } else { w[i] };
                    Branch::new(UniPoly::x(), MultiPoly::one(n), g_full.scale(ctx, c))
                } else {
                    Branch::plain(UniPoly::x(), n)
                }
            })
            .collect(),
        UniPoly::x(),
    )?;

    let wm_inv = ctx.inv(w[m - 1])?;
    let mut a4 = vec![vec![Fe::ZERO; n]; n];
    for i in 0..n {
        if i < m - 1 {
            a4[i][i] = if w[i].is_zero() { Fe::ONE } else { ctx.inv(w[i])? };
        } else if i == m - 1 {
            a4[i][i] = wm_inv;
            for j in 0..m - 1 {
                if !w[j].is_zero() {
                    a4[i][j] = ctx.neg(wm_inv);
                }
            }
        } else {
            a4[i][i] = Fe::ONE;
        }
    }
    let f4 = AffineLayer::linear(ctx, a4)?;

    let last = |i: usize| if i >= m { params.perms[i].clone() } else { UniPoly::x() };
    let f5 = Gtds::new(
        ctx,
        (0..n - 1).map(|i| Branch::plain(last(i), n)).collect(),
        last(n - 1),
    )?;

    Ok(GeneralizedLaiMassey {
        ctx: ctx.clone(),
        params,
        m,
        stages: vec![f1.into(), f2.into(), f3.into(), f4.into(), f5.into()],
    })
}

/// Whether `stages` agrees with `direct` on every point of `F_q^n`
/// (`q^n <= 2^16`).
pub fn pipeline_matches<F>(ctx: &FieldCtx, n: usize, stages: &[Stage], direct: F) -> Result<bool>
where
    F: Fn(&[Fe]) -> Result<Vec<Fe>> + Sync,
{
    use rayon::prelude::*;
    check_domain(domain_size(ctx, n), EQUIVALENCE_LIMIT)?;
    let space = Space::new(ctx, n, EQUIVALENCE_LIMIT)?;
    (0..space.size()).into_par_iter().try_fold(
        || true,
        |ok, idx| {
            let x = space.decode(idx);
            Ok::<_, Error>(ok && pipeline_apply(stages, &x)? == direct(&x)?)
        },
    )
    .try_reduce(|| true, |a, b| Ok(a && b))
}

/// Exhaustive check that the five-stage decomposition reproduces the
/// direct generalized Lai-Massey map.
pub fn lai_massey_equivalence_check(glm: &GeneralizedLaiMassey) -> Result<bool> {
    pipeline_matches(glm.ctx(), glm.n(), glm.stages(), |x| glm.eval_direct(x))
}

/// Horst-type system: `f_i = x_i * g_i + h_i`, `f_n = x_n`, where `g_i`,
/// `h_i` are polynomials in all `n` variables using only `x_(i+1..n)`.
pub fn make_horst(ctx: &FieldCtx, g_list: Vec<MultiPoly>, h_list: Vec<MultiPoly>) -> Result<Gtds> {
    check_arity(g_list.len(), h_list.len())?;
    let branches = g_list
        .into_iter()
        .zip(h_list)
        .map(|(g, h)| Branch::new(UniPoly::x(), g, h))
        .collect();
    Gtds::new(ctx, branches, UniPoly::x())
}

/// The Bricks permutation of `F_p^3`:
/// `(x_1^d, x_2 (x_1^2 + a_1 x_1 + b_1), x_3 (x_2^2 + a_2 x_2 + b_2))`.
pub fn make_bricks(ctx: &FieldCtx, d: u64, alphas: [Fe; 2], betas: [Fe; 2]) -> Result<Gtds> {
    if !ctx.is_prime_field() || ctx.characteristic() == 2 {
        return Err(Error::OddPrimeRequired);
    }
    let p = ctx.characteristic();
    if d == 0 || gcd(d, p - 1) != 1 {
        return Err(Error::BadExponent(format!("gcd({d}, {}) != 1", p - 1)));
    }
    for i in 0..2 {
        let disc = ctx.sub(
            ctx.mul(alphas[i], alphas[i]),
            ctx.mul(ctx.from_int(4), betas[i]),
        );
        if disc.is_zero() || ctx.is_quadratic_residue(disc)? {
            return Err(Error::DiscriminantResidue(i + 1));
        }
    }
    // Branch order is (x_3, x_2, x_1): each multiplier depends on the
    // following slot.
    let quad = |var: usize, i: usize| {
        MultiPoly::from_terms(
            ctx,
            3,
            [
                (exps(var, 2), Fe::ONE),
                (exps(var, 1), alphas[i]),
                (vec![0, 0, 0], betas[i]),
            ],
        )
    };
    let branches = vec![
        Branch::new(UniPoly::x(), quad(1, 1)?, MultiPoly::zero(3)),
        Branch::new(UniPoly::x(), quad(2, 0)?, MultiPoly::zero(3)),
    ];
    Ok(Gtds::new(ctx, branches, UniPoly::monomial(Fe::ONE, d))?.with_layout(Layout::Reversed))
}

fn exps(var: usize, e: u64) -> Vec<u64> {
    let mut v = vec![0; 3];
    v[var] = e;
    v
}

/// Parameters of an Arion-style system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArionParams {
    pub d1: u64,
    pub d2: u64,
    pub e: u64,
    /// Multipliers `g_1, ..., g_(n-1)`, applied to the feed-forward sum.
    pub g_list: Vec<UniPoly>,
    pub h_list: Vec<UniPoly>,
}

impl ArionParams {
    /// Picks the smallest `d1 > 1` coprime to `p - 1` and `e = d2^-1`
    /// modulo `p - 1`.
    pub fn for_prime(p: u64, d2: u64, g_list: Vec<UniPoly>, h_list: Vec<UniPoly>) -> Result<Self> {
        if p < 3 || gcd(d2, p - 1) != 1 {
            return Err(Error::BadExponent(format!("d2 = {d2} is not invertible mod {}", p.saturating_sub(1))));
        }
        let d1 = (2..p).find(|&d| gcd(d, p - 1) == 1).ok_or_else(|| {
            Error::BadExponent(format!("no d1 > 1 coprime to {}", p - 1))
        })?;
        Ok(ArionParams {
            d1,
            d2,
            e: inv_mod(d2 % (p - 1), p - 1),
            g_list,
            h_list,
        })
    }
}

/// `f_n = x_n^e` and `f_i = x_i^d1 * g_i(s) + h_i(s)` with the feed-forward
/// sum `s = sum_(j > i) (x_j + f_j)`.
pub fn make_arion_gtds(ctx: &FieldCtx, params: &ArionParams, n: usize) -> Result<Gtds> {
    if !ctx.is_prime_field() {
        return Err(Error::InvalidField("Arion is defined over prime fields".into()));
    }
    let p = ctx.characteristic();
    if p < 3 {
        return Err(Error::OddPrimeRequired);
    }
    let pm1 = p - 1;
    if gcd(params.d1, pm1) != 1 {
        return Err(Error::BadExponent(format!("gcd(d1 = {}, {pm1}) != 1", params.d1)));
    }
    if (params.e as u128 * params.d2 as u128) % pm1 as u128 != 1 % pm1 as u128 {
        return Err(Error::BadExponent(format!(
            "e * d2 = {} * {} is not 1 mod {pm1}",
            params.e, params.d2
        )));
    }
    if n < 1 {
        return Err(Error::InvalidParameter("Arion needs n > 0".into()));
    }
    check_arity(n - 1, params.g_list.len())?;
    check_arity(n - 1, params.h_list.len())?;
    for (i, g) in params.g_list.iter().enumerate() {
        if let ZeroCheck::Zero(_) = has_no_zeros_uni(ctx, g)? {
            return Err(Error::GiHasZero(i + 1));
        }
    }
    let branches = params
        .g_list
        .iter()
        .zip(&params.h_list)
        .map(|(g, h)| {
            Branch::new(
                UniPoly::monomial(Fe::ONE, params.d1),
                Coupling::FeedForward(g.clone()),
                Coupling::FeedForward(h.clone()),
            )
        })
        .collect();
    Gtds::new(ctx, branches, UniPoly::monomial(Fe::ONE, params.e))
}
