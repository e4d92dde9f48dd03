//! Exhaustive differential and linear analysis, and checkers for the
//! triangular-system bounds on both.
//!
//! Maps are first tabulated into a [`LookupTable`]; the sweeps then work on
//! packed vector indices only.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cipher::{AffineLayer, CipherSpec, RoundKeys};
use crate::error::{check_domain, Error, Result};
use crate::field::{root_of_unity, Fe, FieldCtx};
use crate::gtds::{Gtds, Layout};
use crate::poly::{permutation_certificate, UniPoly};
use crate::space::{check_arity, domain_size, tabulate, weight, Space, MAX_DOMAIN};

/// Default cap on `q^n` for full `(input, output)` sweeps.
pub const FULL_SWEEP_LIMIT: u64 = 1 << 10;
/// Default cap on `q^n` for a single correlation or DDT row.
pub const SINGLE_PAIR_LIMIT: u64 = 1 << 16;
/// Largest field on which univariate differential uniformity is computed.
pub const UNIVARIATE_DDT_LIMIT: u64 = 1 << 12;
/// Slack for comparing floating-point quantities with bounds.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Below this modulus a correlation counts as zero.
pub const ZERO_TOLERANCE: f64 = 1e-9;

/// A map `F_q^n -> F_q^n` stored as packed output indices.
#[derive(Clone, Debug)]
pub struct LookupTable {
    ctx: FieldCtx,
    n: usize,
    table: Vec<u32>,
}

impl LookupTable {
    pub fn from_fn<F>(ctx: &FieldCtx, n: usize, limit: u64, f: F) -> Result<Self>
    where
        F: Fn(&[Fe], &mut [Fe]) + Sync,
    {
        let space = Space::new(ctx, n, limit)?;
        Ok(LookupTable {
            ctx: ctx.clone(),
            n,
            table: tabulate(&space, f),
        })
    }

    pub fn from_gtds(f: &Gtds, limit: u64) -> Result<Self> {
        LookupTable::from_fn(f.ctx(), f.n(), limit, |x, y| f.eval_into(x, y))
    }

    pub fn from_uni(ctx: &FieldCtx, f: &UniPoly) -> Result<Self> {
        LookupTable::from_fn(ctx, 1, MAX_DOMAIN, |x, y| y[0] = f.eval(ctx, x[0]))
    }

    pub fn from_cipher(c: &CipherSpec, keys: &RoundKeys, limit: u64) -> Result<Self> {
        Ok(LookupTable {
            ctx: c.ctx().clone(),
            n: c.n(),
            table: c.table(keys, limit)?,
        })
    }

    pub fn from_table(ctx: &FieldCtx, n: usize, table: Vec<u32>) -> Result<Self> {
        let size = domain_size(ctx, n);
        if size != table.len() as u128 || table.iter().any(|&y| y as u128 >= size) {
            return Err(Error::InvalidParameter(format!(
                "lookup table does not describe a map on a domain of size {size}"
            )));
        }
        Ok(LookupTable {
            ctx: ctx.clone(),
            n,
            table,
        })
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.table.len()
    }

    pub fn values(&self) -> &[u32] {
        &self.table
    }

    fn space(&self) -> Space<'_> {
        Space::new(&self.ctx, self.n, MAX_DOMAIN).expect("table sizes are bounded")
    }
}

/// Digit-wise vector arithmetic on packed indices.
struct Digits {
    q: usize,
    n: usize,
    digits: Vec<u32>,
}

impl Digits {
    fn new(space: &Space<'_>) -> Self {
        let n = space.dim();
        let mut digits = vec![0u32; space.size() * n];
        let mut buf = vec![Fe::ZERO; n];
        for idx in 0..space.size() {
            space.decode_into(idx, &mut buf);
            for (k, v) in buf.iter().enumerate() {
                digits[idx * n + k] = v.value() as u32;
            }
        }
        Digits {
            q: space.ctx().order() as usize,
            n,
            digits,
        }
    }

    #[inline]
    fn combine(&self, ctx: &FieldCtx, a: usize, b: usize, sub: bool) -> usize {
        let (da, db) = (&self.digits[a * self.n..], &self.digits[b * self.n..]);
        let mut out = 0usize;
        for k in (0..self.n).rev() {
            let (x, y) = (Fe::from_raw(da[k] as u64), Fe::from_raw(db[k] as u64));
            let z = if sub { ctx.sub(x, y) } else { ctx.add(x, y) };
            out = out * self.q + z.value() as usize;
        }
        out
    }
}

/// Exhaustive DDT with optional bound comparisons.
#[derive(Clone, Debug)]
pub struct DdtReport {
    pub q: u64,
    pub n: usize,
    /// Counts indexed by `dx * q^n + dy` over packed vectors.
    pub table: Vec<u32>,
    /// Maximum count over `dx != 0`.
    pub delta_uniformity: u32,
    /// Per-entry product bound for triangular systems.
    pub bound_table: Option<Vec<u128>>,
    /// Per-`dx` weight bound `q^(n - wt) d^wt`, when its hypotheses hold.
    pub weight_bounds: Option<Vec<u128>>,
    pub violations: Vec<DdtViolation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    Product,
    Weight,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DdtViolation {
    pub dx: usize,
    pub dy: usize,
    pub count: u32,
    pub bound: u128,
    pub kind: BoundKind,
}

impl DdtReport {
    /// `q^n`.
    pub fn size(&self) -> usize {
        (self.q as usize).pow(self.n as u32)
    }

    pub fn entry(&self, dx: usize, dy: usize) -> u32 {
        self.table[dx * self.size() + dy]
    }

    pub fn row_sum(&self, dx: usize) -> u64 {
        let s = self.size();
        self.table[dx * s..(dx + 1) * s].iter().map(|&c| c as u64).sum()
    }

    /// The bound attached to an entry, the tighter of both when present.
    pub fn bound(&self, dx: usize, dy: usize) -> Option<u128> {
        let s = self.size();
        let a = self.bound_table.as_ref().map(|t| t[dx * s + dy]);
        let b = self.weight_bounds.as_ref().map(|t| t[dx]);
        match (a, b) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

/// Full difference distribution table of `f`; `q^n` must not exceed
/// `limit`.
pub fn ddt(f: &LookupTable, limit: u64) -> Result<DdtReport> {
    check_domain(f.size() as u128, limit)?;
    let space = f.space();
    let digits = Digits::new(&space);
    let size = f.size();
    let ctx = f.ctx();
    let mut table = vec![0u32; size * size];
    table
        .par_chunks_mut(size)
        .enumerate()
        .for_each(|(dx, row)| {
            for x in 0..size {
                let shifted = digits.combine(ctx, x, dx, false);
                let dy = digits.combine(
                    ctx,
                    f.table[shifted] as usize,
                    f.table[x] as usize,
                    true,
                );
                row[dy] += 1;
            }
        });
    let delta_uniformity = table[size..].iter().copied().max().unwrap_or(0);
    Ok(DdtReport {
        q: ctx.order(),
        n: f.n(),
        table,
        delta_uniformity,
        bound_table: None,
        weight_bounds: None,
        violations: Vec::new(),
    })
}

/// Exact univariate differential uniformity and the degree comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UniDifferential {
    pub delta: u64,
    pub degree: i64,
    /// `Some(delta < deg f)` when `delta < q`, `None` otherwise.
    pub below_degree: Option<bool>,
}

/// `delta(f) = max_{a != 0, b} |{x : f(x + a) - f(x) = b}|` for `q <= 2^12`.
pub fn differential_uniformity_uni(ctx: &FieldCtx, f: &UniPoly) -> Result<UniDifferential> {
    check_domain(ctx.order() as u128, UNIVARIATE_DDT_LIMIT)?;
    let q = ctx.order() as usize;
    let values: Vec<Fe> = ctx.elements().map(|x| f.eval(ctx, x)).collect();
    let delta = (1..q)
        .into_par_iter()
        .map_init(
            || vec![0u32; q],
            |counts, a| {
                counts.fill(0);
                let a = Fe::from_raw(a as u64);
                for x in ctx.elements() {
                    let b = ctx.sub(values[ctx.add(x, a).value() as usize], values[x.value() as usize]);
                    counts[b.value() as usize] += 1;
                }
                counts.iter().copied().max().unwrap_or(0)
            },
        )
        .max()
        .unwrap_or(0) as u64;
    let degree = f.reduce(ctx).degree();
    Ok(UniDifferential {
        delta,
        degree,
        below_degree: (delta < ctx.order()).then_some((delta as i64) < degree),
    })
}

/// Which sufficient condition shows that `f(x + a) - f(x)` is nonconstant
/// for every `a != 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DifferenceCriterion {
    /// The field is prime.
    PrimeField,
    /// `C(d, k)` is nonzero mod `p` for this `k` in `[d', d - 1]`.
    Binomial(u64),
    Inconclusive,
}

/// `C(n, k) mod p != 0`, by Lucas' theorem.
fn binomial_nonzero_mod(mut n: u64, mut k: u64, p: u64) -> bool {
    while k > 0 {
        if k % p > n % p {
            return false;
        }
        n /= p;
        k /= p;
    }
    true
}

pub fn difference_nonconstant_criteria(ctx: &FieldCtx, f: &UniPoly) -> Result<DifferenceCriterion> {
    let f = f.reduce(ctx);
    let d = f.degree();
    if d <= 1 {
        return Err(Error::DegreeTooLow);
    }
    if ctx.is_prime_field() {
        return Ok(DifferenceCriterion::PrimeField);
    }
    let d = d as u64;
    let tail = f.terms().filter(|&(e, _)| e != d).map(|(e, _)| e).max();
    let d_low = tail.unwrap_or(0).max(1);
    let p = ctx.characteristic();
    Ok((d_low..d)
        .rev()
        .find(|&k| binomial_nonzero_mod(d, k, p))
        .map_or(DifferenceCriterion::Inconclusive, DifferenceCriterion::Binomial))
}

/// Whether `f` satisfies `deg f = 1` or (`deg f >= 2` and `delta(f) < q`),
/// using the criteria first and exhaustive `delta` as a fallback.
fn difference_hypothesis(ctx: &FieldCtx, f: &UniPoly) -> Result<bool> {
    if f.degree() <= 1 {
        return Ok(true);
    }
    if difference_nonconstant_criteria(ctx, f)? != DifferenceCriterion::Inconclusive {
        return Ok(true);
    }
    if ctx.order() <= UNIVARIATE_DDT_LIMIT {
        return Ok(differential_uniformity_uni(ctx, f)?.delta < ctx.order());
    }
    Ok(false)
}

/// Everything the differential bounds need from a system, in branch order.
struct DifferentialModel {
    q: u128,
    n: usize,
    reversed: bool,
    degrees: Vec<i64>,
    delta_last: u128,
}

impl DifferentialModel {
    fn new(f: &Gtds) -> Result<Self> {
        let ctx = f.ctx();
        let n = f.n();
        let q = ctx.order() as u128;
        let mut degrees = Vec::with_capacity(n);
        for i in 0..n {
            let p = f.perm_poly(i);
            if !difference_hypothesis(ctx, p)? {
                return Err(Error::HypothesisUnverified(Some(i + 1)));
            }
            degrees.push(p.degree());
        }
        let last = f.perm_poly(n - 1);
        let delta_last = if ctx.order() <= UNIVARIATE_DDT_LIMIT {
            differential_uniformity_uni(ctx, last)?.delta as u128
        } else if degrees[n - 1] > 1 {
            (degrees[n - 1] - 1) as u128
        } else {
            q
        };
        Ok(DifferentialModel {
            q,
            n,
            reversed: f.layout() == Layout::Reversed,
            degrees,
            delta_last,
        })
    }

    fn branch(&self, v: &[Fe], i: usize) -> Fe {
        if self.reversed {
            v[self.n - 1 - i]
        } else {
            v[i]
        }
    }

    fn prefix(&self, dx: &[Fe]) -> u128 {
        (0..self.n - 1).fold(1u128, |acc, i| {
            let factor = if !self.branch(dx, i).is_zero() && self.degrees[i] > 1 {
                self.degrees[i] as u128
            } else {
                self.q
            };
            acc.saturating_mul(factor)
        })
    }

    fn last(&self, dx_n: Fe, dy_n: Fe) -> u128 {
        match (dx_n.is_zero(), dy_n.is_zero()) {
            (false, _) => self.delta_last,
            (true, true) => self.q,
            (true, false) => 0,
        }
    }

    fn bound(&self, dx: &[Fe], dy: &[Fe]) -> u128 {
        let n = self.n;
        self.prefix(dx)
            .saturating_mul(self.last(self.branch(dx, n - 1), self.branch(dy, n - 1)))
    }
}

/// The product bound on `delta_F(dx, dy)` for a triangular system.
///
/// Each `p_i` must have degree one or a differential uniformity below `q`;
/// otherwise `HypothesisUnverified(i)` names the first offending branch.
pub fn gtds_ddt_bound(f: &Gtds, dx: &[Fe], dy: &[Fe]) -> Result<u128> {
    check_arity(f.n(), dx.len())?;
    check_arity(f.n(), dy.len())?;
    Ok(DifferentialModel::new(f)?.bound(dx, dy))
}

/// Weight form of the differential bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightBound {
    /// `q^(n - wt) d^wt`, saturating.
    pub count: u128,
    /// `(d / q)^wt`.
    pub probability: f64,
    pub d: u64,
    pub weight: usize,
}

/// Largest `deg p_i`, provided every `p_i` has `1 < deg p_i` and
/// `delta(p_i) < q`.
fn weight_bound_degree(f: &Gtds) -> Result<u64> {
    let ctx = f.ctx();
    let mut d = 0;
    for i in 0..f.n() {
        let p = f.perm_poly(i);
        if p.degree() <= 1 || !difference_hypothesis(ctx, p)? {
            return Err(Error::HypothesisUnverified(Some(i + 1)));
        }
        d = d.max(p.degree() as u64);
    }
    Ok(d)
}

fn weight_bound(q: u64, n: usize, d: u64, wt: usize) -> WeightBound {
    let count = (q as u128)
        .saturating_pow((n - wt) as u32)
        .saturating_mul((d as u128).saturating_pow(wt as u32));
    WeightBound {
        count,
        probability: (d as f64 / q as f64).powi(wt as i32),
        d,
        weight: wt,
    }
}

pub fn gtds_ddt_bound_simple(f: &Gtds, dx: &[Fe]) -> Result<WeightBound> {
    check_arity(f.n(), dx.len())?;
    let d = weight_bound_degree(f)?;
    Ok(weight_bound(f.ctx().order(), f.n(), d, weight(dx)))
}

/// Full DDT of `f` compared entrywise with the product bound and, when its
/// hypotheses hold, the weight bound.
pub fn check_ddt_against_bounds(f: &Gtds, limit: u64) -> Result<DdtReport> {
    let lookup = LookupTable::from_gtds(f, limit)?;
    let mut report = ddt(&lookup, limit)?;
    let model = DifferentialModel::new(f)?;
    let space = lookup.space();
    let size = space.size();
    let vectors: Vec<Vec<Fe>> = space.vectors().collect();

    let bounds: Vec<u128> = (0..size * size)
        .into_par_iter()
        .map(|i| model.bound(&vectors[i / size], &vectors[i % size]))
        .collect();
    let weight_bounds = weight_bound_degree(f).ok().map(|d| {
        vectors
            .iter()
            .map(|v| weight_bound(f.ctx().order(), f.n(), d, weight(v)).count)
            .collect::<Vec<_>>()
    });

    let mut violations = Vec::new();
    for dx in 1..size {
        for dy in 0..size {
            let count = report.table[dx * size + dy];
            let bound = bounds[dx * size + dy];
            if count as u128 > bound {
                violations.push(DdtViolation { dx, dy, count, bound, kind: BoundKind::Product });
            }
            if let Some(w) = &weight_bounds {
                if count as u128 > w[dx] {
                    violations.push(DdtViolation {
                        dx,
                        dy,
                        count,
                        bound: w[dx],
                        kind: BoundKind::Weight,
                    });
                }
            }
        }
    }
    report.bound_table = Some(bounds);
    report.weight_bounds = weight_bounds;
    report.violations = violations;
    Ok(report)
}

/// `Tr(<mask, x>)` for every packed `x`, as integers mod `p`.
fn trace_form(space: &Space<'_>, mask: &[Fe]) -> Vec<u32> {
    let ctx = space.ctx();
    let q = ctx.order() as usize;
    let p = ctx.characteristic() as u32;
    let mut out = vec![0u32];
    out.reserve(space.size());
    for &m in mask {
        let coord: Vec<u32> = ctx
            .elements()
            .map(|v| ctx.trace(ctx.mul(m, v)).value() as u32)
            .collect();
        let prev = std::mem::take(&mut out);
        out = Vec::with_capacity(prev.len() * q);
        for &c in &coord {
            out.extend(prev.iter().map(|&t| (t + c) % p));
        }
    }
    out
}

fn roots(p: u64) -> Vec<Complex64> {
    (0..p).map(|k| root_of_unity(p, k)).collect()
}

/// `(1 / q^n) sum_x chi(t_a(F(x)) + t_b(x))` from precomputed trace forms.
fn correlation_from_forms(
    table: &[u32],
    out_form: &[u32],
    in_form: &[u32],
    p: u32,
    roots: &[Complex64],
    counts: &mut [u32],
) -> Complex64 {
    counts.fill(0);
    for (x, &y) in table.iter().enumerate() {
        let t = out_form[y as usize] + in_form[x];
        counts[(if t >= p { t - p } else { t }) as usize] += 1;
    }
    let sum: Complex64 = counts
        .iter()
        .zip(roots)
        .filter(|(&c, _)| c != 0)
        .map(|(&c, &w)| w * c as f64)
        .sum();
    sum / table.len() as f64
}

/// `CORR_F(a, b) = (1 / q^n) sum_x chi(<a, F(x)> + <b, x>)` with the
/// canonical additive character; `a` masks the output, `b` the input.
pub fn correlation(f: &LookupTable, a: &[Fe], b: &[Fe]) -> Result<Complex64> {
    check_domain(f.size() as u128, SINGLE_PAIR_LIMIT)?;
    check_arity(f.n(), a.len())?;
    check_arity(f.n(), b.len())?;
    let space = f.space();
    let p = f.ctx().characteristic();
    let mut counts = vec![0u32; p as usize];
    Ok(correlation_from_forms(
        &f.table,
        &trace_form(&space, a),
        &trace_form(&space, b),
        p as u32,
        &roots(p),
        &mut counts,
    ))
}

/// Full correlation sweep with optional bound comparisons.
#[derive(Clone, Debug)]
pub struct CorrReport {
    pub q: u64,
    pub n: usize,
    /// Indexed by `a * q^n + b` over packed masks.
    pub corr: Vec<Complex64>,
    pub lp: Vec<f64>,
    /// Per-entry bound on `LP`, the square of the correlation bound.
    pub bound: Option<Vec<f64>>,
    pub violations: Vec<CorrViolation>,
    /// Largest `LP` over `(a, b) != (0, 0)`.
    pub max_lp: f64,
    /// `sum_{a, b} LP(a, b)`.
    pub parseval_sum: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrViolation {
    pub a: usize,
    pub b: usize,
    pub lp: f64,
    pub bound: f64,
}

impl CorrReport {
    /// `q^n`.
    pub fn size(&self) -> usize {
        (self.q as usize).pow(self.n as u32)
    }

    pub fn entry(&self, a: usize, b: usize) -> Complex64 {
        self.corr[a * self.size() + b]
    }
}

/// Correlations of `f` for every mask pair; `q^n` must not exceed `limit`.
pub fn correlation_table(f: &LookupTable, limit: u64) -> Result<CorrReport> {
    check_domain(f.size() as u128, limit)?;
    let space = f.space();
    let size = f.size();
    let p = f.ctx().characteristic();
    let forms: Vec<Vec<u32>> = (0..size)
        .into_par_iter()
        .map(|m| trace_form(&space, &space.decode(m)))
        .collect();
    let roots = roots(p);
    let mut corr = vec![Complex64::new(0.0, 0.0); size * size];
    corr.par_chunks_mut(size).enumerate().for_each_init(
        || vec![0u32; p as usize],
        |counts, (a, row)| {
            for (b, slot) in row.iter_mut().enumerate() {
                *slot = correlation_from_forms(&f.table, &forms[a], &forms[b], p as u32, &roots, counts);
            }
        },
    );
    let lp: Vec<f64> = corr.iter().map(|c| c.norm_sqr()).collect();
    let max_lp = lp[1..].iter().copied().fold(0.0, f64::max);
    let parseval_sum = lp.iter().sum();
    Ok(CorrReport {
        q: f.ctx().order(),
        n: f.n(),
        corr,
        lp,
        bound: None,
        violations: Vec::new(),
        max_lp,
        parseval_sum,
    })
}

/// Result of a single character-sum check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeilCheck {
    /// `|sum_x chi(a f(x) + b x)|`.
    pub lhs: f64,
    /// `(min(deg f, deg f^-1) - 1) sqrt(q)`.
    pub bound: f64,
    pub ok: bool,
}

/// Compares the character sum of a permutation polynomial with its
/// degree bound. Needs `deg f > 1`, `p` coprime to both `deg f` and
/// `deg f^-1`, and `a, b != 0`.
pub fn weil_sum_check(ctx: &FieldCtx, f: &UniPoly, a: Fe, b: Fe, tolerance: f64) -> Result<WeilCheck> {
    check_domain(ctx.order() as u128, MAX_DOMAIN)?;
    if a.is_zero() || b.is_zero() {
        return Err(Error::HypothesisUnverified(None));
    }
    let f = f.reduce(ctx);
    let cert = permutation_certificate(ctx, &f)?;
    let p = ctx.characteristic();
    let deg_inv = cert.deg_finv.ok_or(Error::HypothesisUnverified(None))?;
    if cert.deg_f <= 1 || (cert.deg_f as u64).is_multiple_of(p) || (deg_inv as u64).is_multiple_of(p) {
        return Err(Error::HypothesisUnverified(None));
    }
    let sum: Complex64 = ctx
        .elements()
        .map(|x| ctx.character(ctx.add(ctx.mul(a, f.eval(ctx, x)), ctx.mul(b, x))))
        .sum();
    let lhs = sum.norm();
    let bound = (cert.deg_f.min(deg_inv) - 1) as f64 * (ctx.order() as f64).sqrt();
    Ok(WeilCheck {
        lhs,
        bound,
        ok: lhs <= bound + tolerance,
    })
}

/// Degree data for the correlation bound, in branch order.
struct CorrelationModel {
    q: f64,
    n: usize,
    reversed: bool,
    degrees: Vec<(i64, i64)>,
}

impl CorrelationModel {
    fn new(f: &Gtds) -> Result<Self> {
        let p = f.ctx().characteristic();
        let mut degrees = Vec::with_capacity(f.n());
        for i in 0..f.n() {
            let d = f.perm_poly(i).degree();
            let d_inv = f
                .inverse_degree(i)
                .ok_or(Error::HypothesisUnverified(Some(i + 1)))?;
            if (d as u64).is_multiple_of(p) || (d_inv as u64).is_multiple_of(p) {
                return Err(Error::HypothesisUnverified(Some(i + 1)));
            }
            degrees.push((d, d_inv));
        }
        Ok(CorrelationModel {
            q: f.ctx().order() as f64,
            n: f.n(),
            reversed: f.layout() == Layout::Reversed,
            degrees,
        })
    }

    fn bound(&self, a: &[Fe], b: &[Fe]) -> f64 {
        let order = |v: &[Fe]| -> Vec<Fe> {
            if self.reversed {
                v.iter().rev().copied().collect()
            } else {
                v.to_vec()
            }
        };
        let (a, b) = (order(a), order(b));
        let b_zero = b.iter().all(|x| x.is_zero());
        let Some(j) = a.iter().position(|x| !x.is_zero()) else {
            return if b_zero { 1.0 } else { 0.0 };
        };
        if b_zero || b[j].is_zero() {
            return 0.0;
        }
        let (d, d_inv) = self.degrees[j];
        if d == 1 {
            1.0
        } else {
            (d.min(d_inv) - 1) as f64 / self.q.sqrt()
        }
    }
}

/// Bound on `|CORR_F(a, b)|` from the first nonzero output-mask coordinate.
///
/// Requires `p` coprime to `deg p_i` and `deg p_i^-1` for every branch.
pub fn gtds_correlation_bound(f: &Gtds, a: &[Fe], b: &[Fe]) -> Result<f64> {
    check_arity(f.n(), a.len())?;
    check_arity(f.n(), b.len())?;
    let model = CorrelationModel::new(f)?;
    debug_assert_eq!(model.n, a.len());
    Ok(model.bound(a, b))
}

/// Full correlation sweep of `f` with every `LP` compared against the
/// squared correlation bound.
pub fn check_correlation_against_bounds(f: &Gtds, limit: u64, tolerance: f64) -> Result<CorrReport> {
    let model = CorrelationModel::new(f)?;
    let lookup = LookupTable::from_gtds(f, limit)?;
    let mut report = correlation_table(&lookup, limit)?;
    let space = lookup.space();
    let size = space.size();
    let vectors: Vec<Vec<Fe>> = space.vectors().collect();
    let bounds: Vec<f64> = (0..size * size)
        .into_par_iter()
        .map(|i| model.bound(&vectors[i / size], &vectors[i % size]).powi(2))
        .collect();
    report.violations = bounds
        .iter()
        .zip(&report.lp)
        .enumerate()
        .filter(|(_, (&bound, &lp))| lp > bound + tolerance)
        .map(|(i, (&bound, &lp))| CorrViolation {
            a: i / size,
            b: i % size,
            lp,
            bound,
        })
        .collect();
    report.bound = Some(bounds);
    Ok(report)
}

/// Masks `w_0, ..., w_r` for an `r`-round cipher.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearTrail {
    pub masks: Vec<Vec<Fe>>,
}

/// `prod_i LP_{R_i}(w_(i-1), w_i)` with round `i` keyed by `k_i`, treating
/// rounds as independent.
pub fn trail_lp(c: &CipherSpec, keys: &RoundKeys, trail: &LinearTrail, limit: u64) -> Result<f64> {
    check_arity(c.num_rounds() + 1, trail.masks.len())?;
    for m in &trail.masks {
        check_arity(c.n(), m.len())?;
    }
    keys.check_shape(c.n(), c.num_rounds())?;
    let limit = limit.min(SINGLE_PAIR_LIMIT);
    let mut lp = 1.0;
    for (i, round) in c.rounds().iter().enumerate() {
        let k = keys.column(i + 1);
        let lookup = LookupTable::from_fn(c.ctx(), c.n(), limit, |x, y| {
            y.copy_from_slice(&round.apply(k, x).expect("shapes checked"))
        })?;
        lp *= correlation(&lookup, &trail.masks[i], &trail.masks[i + 1])?.norm_sqr();
    }
    Ok(lp)
}

/// Moves the output mask of `L(F(x))` onto `F`: `(a, b) -> (A^T a, b)`.
pub fn affine_mask_transport(l: &AffineLayer, a: &[Fe], b: &[Fe]) -> Result<(Vec<Fe>, Vec<Fe>)> {
    check_arity(l.n(), b.len())?;
    Ok((l.transpose_apply(a)?, b.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gtds::Branch;
    use crate::poly::MultiPoly;

    fn fe(v: u64) -> Fe {
        Fe::from_raw(v)
    }

    fn mono(ctx: &FieldCtx, e: u64) -> UniPoly {
        UniPoly::monomial(ctx.from_int(1), e)
    }

    #[test]
    fn ddt_of_identity_and_cube() {
        let k = FieldCtx::prime(5).unwrap();
        let id = ddt(&LookupTable::from_uni(&k, &UniPoly::x()).unwrap(), 1 << 10).unwrap();
        for a in 0..5 {
            for b in 0..5 {
                assert_eq!(id.entry(a, b), if a == b { 5 } else { 0 });
            }
        }
        assert_eq!(id.delta_uniformity, 5);
        let cube = ddt(&LookupTable::from_uni(&k, &mono(&k, 3)).unwrap(), 1 << 10).unwrap();
        assert_eq!(cube.delta_uniformity, 2);
        assert!((0..5).all(|a| cube.row_sum(a) == 5));
    }

    #[test]
    fn univariate_uniformity() {
        let k5 = FieldCtx::prime(5).unwrap();
        let r = differential_uniformity_uni(&k5, &mono(&k5, 3)).unwrap();
        assert_eq!((r.delta, r.below_degree), (2, Some(true)));
        let k7 = FieldCtx::prime(7).unwrap();
        let r = differential_uniformity_uni(&k7, &UniPoly::x()).unwrap();
        assert_eq!((r.delta, r.below_degree), (7, None));
        let r = differential_uniformity_uni(&k7, &mono(&k7, 5)).unwrap();
        assert!(r.delta <= 4);
        assert_eq!(r.below_degree, Some(true));
    }

    #[test]
    fn criteria() {
        let k = FieldCtx::prime(11).unwrap();
        let f = UniPoly::from_terms(&k, [(4, fe(3)), (1, fe(1))]);
        assert_eq!(difference_nonconstant_criteria(&k, &f).unwrap(), DifferenceCriterion::PrimeField);
        assert_eq!(
            difference_nonconstant_criteria(&k, &UniPoly::x()).unwrap_err(),
            Error::DegreeTooLow
        );
        let f8 = FieldCtx::extension(2, vec![1, 1, 0, 1]).unwrap();
        assert_eq!(
            difference_nonconstant_criteria(&f8, &mono(&f8, 6)).unwrap(),
            DifferenceCriterion::Binomial(4)
        );
        let f4 = FieldCtx::extension(2, vec![1, 1, 1]).unwrap();
        assert_eq!(
            difference_nonconstant_criteria(&f4, &mono(&f4, 2)).unwrap(),
            DifferenceCriterion::Inconclusive
        );
        assert!(binomial_nonzero_mod(6, 4, 2));
        assert!(!binomial_nonzero_mod(6, 5, 2));
    }

    fn cube_system() -> (FieldCtx, Gtds) {
        let k = FieldCtx::prime(11).unwrap();
        let g = MultiPoly::from_terms(&k, 2, [(vec![0, 2], fe(1)), (vec![0, 0], fe(1))]).unwrap();
        let sys = Gtds::new(
            &k,
            vec![Branch::new(mono(&k, 3), g, MultiPoly::var(2, 1))],
            mono(&k, 3),
        )
        .unwrap();
        (k, sys)
    }

    #[test]
    fn product_bound_cases() {
        let (k, sys) = cube_system();
        let delta = differential_uniformity_uni(&k, &mono(&k, 3)).unwrap().delta as u128;
        assert_eq!(gtds_ddt_bound(&sys, &[fe(1), fe(1)], &[fe(4), fe(9)]).unwrap(), 3 * delta);
        assert_eq!(gtds_ddt_bound(&sys, &[fe(1), fe(0)], &[fe(4), fe(9)]).unwrap(), 0);
        assert_eq!(gtds_ddt_bound(&sys, &[fe(1), fe(0)], &[fe(4), fe(0)]).unwrap(), 3 * 11);
        let id = Gtds::identity(&k, 2);
        assert_eq!(gtds_ddt_bound(&id, &[fe(1), fe(1)], &[fe(1), fe(1)]).unwrap(), 11 * 11);
    }

    #[test]
    fn weight_bound() {
        let (_, sys) = cube_system();
        let w = gtds_ddt_bound_simple(&sys, &[fe(2), fe(5)]).unwrap();
        assert!((w.probability - (3.0f64 / 11.0).powi(2)).abs() < 1e-15);
        assert_eq!(w.count, 9);
        let w = gtds_ddt_bound_simple(&sys, &[fe(0), fe(5)]).unwrap();
        assert!((w.probability - 3.0 / 11.0).abs() < 1e-15);
        let k = FieldCtx::prime(7).unwrap();
        assert_eq!(
            gtds_ddt_bound_simple(&Gtds::identity(&k, 2), &[fe(1), fe(0)]).unwrap_err(),
            Error::HypothesisUnverified(Some(1))
        );
    }

    #[test]
    fn ddt_sweep_has_no_violations() {
        let (_, sys) = cube_system();
        let r = check_ddt_against_bounds(&sys, 1 << 10).unwrap();
        assert!(r.violations.is_empty());
        assert!(r.weight_bounds.is_some());
        assert!((0..121).all(|dx| r.row_sum(dx) == 121));
        let id = Gtds::identity(&FieldCtx::prime(5).unwrap(), 2);
        let r = check_ddt_against_bounds(&id, 1 << 10).unwrap();
        assert!(r.violations.is_empty() && r.weight_bounds.is_none());
    }

    #[test]
    fn hypothesis_failure_names_branch() {
        let f4 = FieldCtx::extension(2, vec![1, 1, 1]).unwrap();
        let sys = Gtds::new(&f4, vec![Branch::plain(UniPoly::x(), 2)], mono(&f4, 2)).unwrap();
        assert_eq!(
            gtds_ddt_bound(&sys, &[Fe::ONE, Fe::ONE], &[Fe::ONE, Fe::ONE]).unwrap_err(),
            Error::HypothesisUnverified(Some(2))
        );
    }

    #[test]
    fn correlation_cases() {
        let k = FieldCtx::prime(5).unwrap();
        let id = LookupTable::from_uni(&k, &UniPoly::x()).unwrap();
        assert!((correlation(&id, &[fe(1)], &[fe(4)]).unwrap() - 1.0).norm() < 1e-12);
        assert!(correlation(&id, &[fe(1)], &[fe(3)]).unwrap().norm() < 1e-12);
        let (_, sys) = cube_system();
        let t = LookupTable::from_gtds(&sys, 1 << 16).unwrap();
        let c = correlation(&t, &[fe(0), fe(0)], &[fe(0), fe(0)]).unwrap();
        assert!((c - 1.0).norm() < 1e-12);
        assert!(correlation(&t, &[fe(0), fe(0)], &[fe(3), fe(0)]).unwrap().norm() < 1e-9);
    }

    #[test]
    fn correlation_over_extension_field() {
        let f9 = FieldCtx::extension(3, vec![1, 0, 1]).unwrap();
        let t = LookupTable::from_uni(&f9, &mono(&f9, 5)).unwrap();
        let r = correlation_table(&t, 1 << 10).unwrap();
        for a in f9.elements() {
            for b in f9.elements() {
                let direct: Complex64 = f9
                    .elements()
                    .map(|x| f9.character(f9.add(f9.mul(a, f9.pow(x, 5)), f9.mul(b, x))))
                    .sum::<Complex64>()
                    / 9.0;
                let c = r.entry(a.value() as usize, b.value() as usize);
                assert!((c - direct).norm() < 1e-9);
            }
        }
        assert!((r.parseval_sum - 9.0).abs() < 1e-9);
    }

    #[test]
    fn correlation_bound_cases() {
        let (_, sys) = cube_system();
        let z = [fe(0), fe(0)];
        assert_eq!(gtds_correlation_bound(&sys, &z, &z).unwrap(), 1.0);
        assert_eq!(gtds_correlation_bound(&sys, &z, &[fe(1), fe(0)]).unwrap(), 0.0);
        assert_eq!(gtds_correlation_bound(&sys, &[fe(1), fe(0)], &z).unwrap(), 0.0);
        assert_eq!(gtds_correlation_bound(&sys, &[fe(1), fe(0)], &[fe(0), fe(2)]).unwrap(), 0.0);
        let b = gtds_correlation_bound(&sys, &[fe(1), fe(3)], &[fe(2), fe(0)]).unwrap();
        assert!((b - 2.0 / 11f64.sqrt()).abs() < 1e-15);
        let id = Gtds::identity(&FieldCtx::prime(11).unwrap(), 2);
        assert_eq!(gtds_correlation_bound(&id, &[fe(0), fe(1)], &[fe(0), fe(1)]).unwrap(), 1.0);
    }

    #[test]
    fn correlation_sweep_has_no_violations() {
        let (_, sys) = cube_system();
        let r = check_correlation_against_bounds(&sys, 1 << 10, DEFAULT_TOLERANCE).unwrap();
        assert!(r.violations.is_empty());
        assert!((r.parseval_sum - 121.0).abs() < 1e-6);
        assert!((r.entry(0, 0) - 1.0).norm() < 1e-12);
    }

    #[test]
    fn weil() {
        let k = FieldCtx::prime(5).unwrap();
        for a in k.nonzero_elements() {
            for b in k.nonzero_elements() {
                let w = weil_sum_check(&k, &mono(&k, 3), a, b, DEFAULT_TOLERANCE).unwrap();
                assert!(w.ok);
                assert!((w.bound - 2.0 * 5f64.sqrt()).abs() < 1e-12);
            }
        }
        let k7 = FieldCtx::prime(7).unwrap();
        let w = weil_sum_check(&k7, &mono(&k7, 5), fe(1), fe(1), DEFAULT_TOLERANCE).unwrap();
        assert!((w.bound - 4.0 * 7f64.sqrt()).abs() < 1e-12 && w.ok);
        assert_eq!(
            weil_sum_check(&k7, &UniPoly::x(), fe(1), fe(1), DEFAULT_TOLERANCE).unwrap_err(),
            Error::HypothesisUnverified(None)
        );
    }

    #[test]
    fn mask_transport() {
        let k = FieldCtx::prime(5).unwrap();
        let l = AffineLayer::linear(&k, vec![vec![fe(1), fe(1)], vec![fe(0), fe(1)]]).unwrap();
        let (a, b) = affine_mask_transport(&l, &[fe(1), fe(0)], &[fe(2), fe(3)]).unwrap();
        assert_eq!(a, vec![fe(1), fe(1)]);
        assert_eq!(b, vec![fe(2), fe(3)]);
        let id = AffineLayer::identity(&k, 2);
        assert_eq!(affine_mask_transport(&id, &[fe(4), fe(2)], &[fe(0), fe(0)]).unwrap().0, vec![fe(4), fe(2)]);
    }
}
