//! Generalized triangular dynamical systems.
//!
//! A system on `F_q^n` is an ordered tuple of branches
//!
//! ```text
//! f_i = p_i(x_i) * g_i(x_{i+1}, ..., x_n) + h_i(x_{i+1}, ..., x_n),  i < n
//! f_n = p_n(x_n)
//! ```
//!
//! with permutation polynomials `p_i` and zero-free `g_i`. Such a system is
//! always a permutation of `F_q^n`, inverted bottom-up by peeling off `h_i`,
//! dividing by `g_i` and inverting `p_i`.

use crate::error::{Error, Result};
use crate::field::{Fe, FieldCtx};
use crate::poly::{
    has_no_zeros, has_no_zeros_uni, is_bijective_exhaustive, is_permutation_polynomial,
    permutation_certificate, CertKind, MultiPoly, UniPoly, ZeroCheck,
};
use crate::space::{check_arity, table_is_bijective, tabulate, Space, MAX_DOMAIN};

/// Fields up to this order get lookup tables for every `p_i` and `p_i^-1`.
const TABLE_ORDER: u64 = 1 << 16;

/// The multiplier `g_i` or offset `h_i` of a branch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coupling {
    /// A polynomial in all `n` variables that only uses `x_{i+1..n}`.
    Poly(MultiPoly),
    /// A univariate polynomial applied to the feed-forward sum
    /// `sigma_{i+1,n} = sum_{j > i} (x_j + f_j)`.
    FeedForward(UniPoly),
}

impl Coupling {
    pub fn one(n: usize) -> Self {
        Coupling::Poly(MultiPoly::one(n))
    }

    pub fn zero(n: usize) -> Self {
        Coupling::Poly(MultiPoly::zero(n))
    }

    #[inline]
    fn eval(&self, ctx: &FieldCtx, x: &[Fe], sigma: Fe) -> Fe {
        match self {
            Coupling::Poly(p) => p.eval_unchecked(ctx, x),
            Coupling::FeedForward(u) => u.eval(ctx, sigma),
        }
    }
}

impl From<MultiPoly> for Coupling {
    fn from(p: MultiPoly) -> Self {
        Coupling::Poly(p)
    }
}

/// Branch `i < n`: the triple `(p_i, g_i, h_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub p: UniPoly,
    pub g: Coupling,
    pub h: Coupling,
}

impl Branch {
    pub fn new(p: UniPoly, g: impl Into<Coupling>, h: impl Into<Coupling>) -> Self {
        Branch {
            p,
            g: g.into(),
            h: h.into(),
        }
    }

    /// `p(x_i)` with `g = 1`, `h = 0`.
    pub fn plain(p: UniPoly, n: usize) -> Self {
        Branch::new(p, Coupling::one(n), Coupling::zero(n))
    }
}

/// Coordinate order in which the triangular structure is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Layout {
    #[default]
    Natural,
    /// Branch `i` depends on the variables *before* it; the system is
    /// evaluated on the reversed vector and the result reversed back.
    Reversed,
}

/// How `g_i(...)^-1` is computed during inversion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InversionMode {
    #[default]
    ExtendedGcd,
    /// The literal `g_i(...)^(q-2)`.
    LiteralPower,
}

/// A univariate permutation with cached evaluation data.
#[derive(Clone, Debug)]
struct PermMap {
    poly: UniPoly,
    forward: Option<Vec<Fe>>,
    inverse_poly: Option<UniPoly>,
    inverse_table: Option<Vec<Fe>>,
    kind: Option<CertKind>,
}

impl PermMap {
    fn new(ctx: &FieldCtx, p: &UniPoly, checked: bool) -> Result<Self> {
        let poly = p.reduce(ctx);
        let q = ctx.order();
        let forward =
            (q <= TABLE_ORDER).then(|| ctx.elements().map(|x| poly.eval(ctx, x)).collect::<Vec<_>>());
        let cert = if checked {
            Some(permutation_certificate(ctx, &poly)?)
        } else if is_permutation_polynomial(ctx, &poly).unwrap_or(false) {
            permutation_certificate(ctx, &poly).ok()
        } else {
            None
        };
        let (inverse_poly, kind) = match cert {
            Some(c) => (c.inverse, Some(c.kind)),
            None => (None, None),
        };
        let needs_table = kind.is_some() && (q <= TABLE_ORDER || inverse_poly.is_none());
        let inverse_table = if needs_table && q <= MAX_DOMAIN {
            let mut inv = vec![Fe::ZERO; q as usize];
            for x in ctx.elements() {
                let y = match &forward {
                    Some(t) => t[x.value() as usize],
                    None => poly.eval(ctx, x),
                };
                inv[y.value() as usize] = x;
            }
            Some(inv)
        } else {
            None
        };
        if kind.is_some() && inverse_poly.is_none() && inverse_table.is_none() {
            return Err(Error::DomainTooLarge {
                size: q as u128,
                limit: MAX_DOMAIN,
            });
        }
        Ok(PermMap {
            poly,
            forward,
            inverse_poly,
            inverse_table,
            kind,
        })
    }

    #[inline]
    fn apply(&self, ctx: &FieldCtx, x: Fe) -> Fe {
        match &self.forward {
            Some(t) => t[x.value() as usize],
            None => self.poly.eval(ctx, x),
        }
    }

    #[inline]
    fn unapply(&self, ctx: &FieldCtx, y: Fe) -> Option<Fe> {
        if let Some(t) = &self.inverse_table {
            return Some(t[y.value() as usize]);
        }
        self.inverse_poly.as_ref().map(|p| p.eval(ctx, y))
    }
}

/// A generalized triangular dynamical system on `F_q^n`.
#[derive(Clone, Debug)]
pub struct Gtds {
    ctx: FieldCtx,
    branches: Vec<Branch>,
    last: UniPoly,
    layout: Layout,
    perms: Vec<PermMap>,
    validated: bool,
}

impl Gtds {
    /// Builds and validates a system from branches `1..n-1` and `p_n`.
    ///
    /// Every `p_i` must permute `F_q`, every `g_i` must be zero-free and
    /// `g_i`, `h_i` may only reference `x_{i+1}, ..., x_n`.
    pub fn new(ctx: &FieldCtx, branches: Vec<Branch>, last: UniPoly) -> Result<Self> {
        Gtds::build(ctx, branches, last, true)
    }

    /// Skips the permutation and zero-freeness checks (arity and variable
    /// scope are still enforced). Inversion of such a system may fail.
    pub fn new_unchecked(ctx: &FieldCtx, branches: Vec<Branch>, last: UniPoly) -> Result<Self> {
        Gtds::build(ctx, branches, last, false)
    }

    /// The identity system on `F_q^n`.
    pub fn identity(ctx: &FieldCtx, n: usize) -> Self {
        let branches = (1..n).map(|_| Branch::plain(UniPoly::x(), n)).collect();
        Gtds::new(ctx, branches, UniPoly::x()).expect("identity system is valid")
    }

    fn build(ctx: &FieldCtx, branches: Vec<Branch>, last: UniPoly, checked: bool) -> Result<Self> {
        let n = branches.len() + 1;
        for (i, b) in branches.iter().enumerate() {
            for c in [&b.g, &b.h] {
                if let Coupling::Poly(poly) = c {
                    check_arity(n, poly.nvars())?;
                    if poly.used_vars().iter().any(|&v| v <= i) {
                        return Err(Error::VariableOutOfScope(i + 1));
                    }
                }
            }
        }
        let mut perms = Vec::with_capacity(n);
        for (i, p) in branches.iter().map(|b| &b.p).chain([&last]).enumerate() {
            let map = PermMap::new(ctx, p, checked).map_err(|e| match e {
                Error::NotAPermutation { .. } => Error::NotAPermutation { branch: Some(i + 1) },
                other => other,
            })?;
            perms.push(map);
        }
        if checked {
            for (i, b) in branches.iter().enumerate() {
                let check = match &b.g {
                    Coupling::Poly(g) => has_no_zeros(ctx, g)?,
                    Coupling::FeedForward(g) => has_no_zeros_uni(ctx, g)?,
                };
                if let ZeroCheck::Zero(_) = check {
                    return Err(Error::GiHasZero(i + 1));
                }
            }
        }
        Ok(Gtds {
            ctx: ctx.clone(),
            branches,
            last,
            layout: Layout::Natural,
            perms,
            validated: checked,
        })
    }

    pub fn with_layout(mut self, layout: Layout) -> Self {
        self.layout = layout;
        self
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    /// Number of branches `n`.
    pub fn n(&self) -> usize {
        self.perms.len()
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn is_validated(&self) -> bool {
        self.validated
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn last(&self) -> &UniPoly {
        &self.last
    }

    /// Reduced `p_i` for 0-based branch `i` (in branch order).
    pub fn perm_poly(&self, i: usize) -> &UniPoly {
        &self.perms[i].poly
    }

    /// Reduced degree of `p_i^-1`, when the inverse polynomial is known.
    pub fn inverse_degree(&self, i: usize) -> Option<i64> {
        self.perms[i].inverse_poly.as_ref().map(UniPoly::degree)
    }

    /// How `p_i` was certified as a permutation (`None` for unchecked
    /// systems whose `p_i` is not one).
    pub fn perm_kind(&self, i: usize) -> Option<CertKind> {
        self.perms[i].kind
    }

    pub fn inverse_poly(&self, i: usize) -> Option<&UniPoly> {
        self.perms[i].inverse_poly.as_ref()
    }

    /// Converts a vector between user coordinates and branch order. The
    /// map is an involution.
    pub fn to_branch_order(&self, v: &[Fe]) -> Vec<Fe> {
        let mut out = v.to_vec();
        if self.layout == Layout::Reversed {
            out.reverse();
        }
        out
    }

    pub fn eval(&self, x: &[Fe]) -> Result<Vec<Fe>> {
        check_arity(self.n(), x.len())?;
        let mut y = vec![Fe::ZERO; x.len()];
        self.eval_into(x, &mut y);
        Ok(y)
    }

    /// Evaluation into a caller buffer; both slices must have length `n`.
    pub fn eval_into(&self, x: &[Fe], y: &mut [Fe]) {
        match self.layout {
            Layout::Natural => self.eval_branch_order(x, y),
            Layout::Reversed => {
                let xr: Vec<Fe> = x.iter().rev().copied().collect();
                self.eval_branch_order(&xr, y);
                y.reverse();
            }
        }
    }

    fn eval_branch_order(&self, x: &[Fe], y: &mut [Fe]) {
        let ctx = &self.ctx;
        let n = self.n();
        y[n - 1] = self.perms[n - 1].apply(ctx, x[n - 1]);
        let mut sigma = ctx.add(x[n - 1], y[n - 1]);
        for i in (0..n - 1).rev() {
            let b = &self.branches[i];
            let g = b.g.eval(ctx, x, sigma);
            let h = b.h.eval(ctx, x, sigma);
            y[i] = ctx.add(ctx.mul(self.perms[i].apply(ctx, x[i]), g), h);
            sigma = ctx.add(sigma, ctx.add(x[i], y[i]));
        }
    }

    pub fn invert(&self, y: &[Fe]) -> Result<Vec<Fe>> {
        self.invert_with(y, InversionMode::ExtendedGcd)
    }

    /// Bottom-up inversion: `x_n = p_n^-1(y_n)`, then
    /// `x_i = p_i^-1((y_i - h_i) * g_i^-1)`.
    pub fn invert_with(&self, y: &[Fe], mode: InversionMode) -> Result<Vec<Fe>> {
        check_arity(self.n(), y.len())?;
        match self.layout {
            Layout::Natural => self.invert_branch_order(y, mode),
            Layout::Reversed => {
                let yr: Vec<Fe> = y.iter().rev().copied().collect();
                let mut x = self.invert_branch_order(&yr, mode)?;
                x.reverse();
                Ok(x)
            }
        }
    }

    fn invert_branch_order(&self, y: &[Fe], mode: InversionMode) -> Result<Vec<Fe>> {
        let ctx = &self.ctx;
        let n = self.n();
        let unapply = |i: usize, v: Fe| {
            self.perms[i]
                .unapply(ctx, v)
                .ok_or(Error::NotAPermutation { branch: Some(i + 1) })
        };
        let mut x = vec![Fe::ZERO; n];
        x[n - 1] = unapply(n - 1, y[n - 1])?;
        let mut sigma = ctx.add(x[n - 1], y[n - 1]);
        for i in (0..n - 1).rev() {
            let b = &self.branches[i];
            let g = b.g.eval(ctx, &x, sigma);
            let h = b.h.eval(ctx, &x, sigma);
            let g_inv = match mode {
                InversionMode::ExtendedGcd => ctx.inv(g).map_err(|_| Error::GiHasZero(i + 1))?,
                InversionMode::LiteralPower => {
                    if g.is_zero() {
                        return Err(Error::GiHasZero(i + 1));
                    }
                    ctx.pow(g, ctx.order() - 2)
                }
            };
            x[i] = unapply(i, ctx.mul(ctx.sub(y[i], h), g_inv))?;
            sigma = ctx.add(sigma, ctx.add(x[i], y[i]));
        }
        Ok(x)
    }

    /// Tabulates the system over all of `F_q^n` (at most `limit` points).
    pub fn table(&self, limit: u64) -> Result<Vec<u32>> {
        let space = Space::new(&self.ctx, self.n(), limit)?;
        Ok(tabulate(&space, |x, y| self.eval_into(x, y)))
    }

    /// Exhaustive bijectivity check on `F_q^n`; requires `q^n <= 2^20`.
    pub fn is_orthogonal_exhaustive(&self) -> Result<bool> {
        Ok(table_is_bijective(&self.table(MAX_DOMAIN)?))
    }

    /// Whether every `p_i` is bijective on `F_q`, by full image check.
    pub fn perms_are_bijective(&self) -> Result<bool> {
        for p in &self.perms {
            if !is_bijective_exhaustive(&self.ctx, &p.poly)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Space;

    fn fe(v: u64) -> Fe {
        Fe::from_raw(v)
    }

    fn f5_example() -> (FieldCtx, Gtds) {
        let k = FieldCtx::prime(5).unwrap();
        let x3 = UniPoly::monomial(Fe::ONE, 3);
        let g = MultiPoly::from_terms(&k, 2, [(vec![0, 2], fe(1)), (vec![0, 0], fe(3))]).unwrap();
        let h = MultiPoly::var(2, 1);
        let sys = Gtds::new(&k, vec![Branch::new(x3.clone(), g, h)], x3).unwrap();
        (k, sys)
    }

    #[test]
    fn identity_system() {
        let k = FieldCtx::prime(7).unwrap();
        let id = Gtds::identity(&k, 3);
        let x = vec![fe(1), fe(5), fe(6)];
        assert_eq!(id.eval(&x).unwrap(), x);
        assert_eq!(id.invert(&x).unwrap(), x);
        assert!(id.is_orthogonal_exhaustive().unwrap());
    }

    #[test]
    fn worked_example_over_f5() {
        let (_, sys) = f5_example();
        assert_eq!(sys.eval(&[fe(1), fe(2)]).unwrap(), vec![fe(4), fe(3)]);
        assert_eq!(sys.invert(&[fe(4), fe(3)]).unwrap(), vec![fe(1), fe(2)]);
        assert!(sys.is_orthogonal_exhaustive().unwrap());
    }

    #[test]
    fn worked_example_matches_formula_oracle() {
        let (k, sys) = f5_example();
        for x1 in k.elements() {
            for x2 in k.elements() {
                let cube = |v: Fe| k.pow(v, 3);
                let g = k.add(k.mul(x2, x2), fe(3));
                let expect = vec![k.add(k.mul(cube(x1), g), x2), cube(x2)];
                assert_eq!(sys.eval(&[x1, x2]).unwrap(), expect);
            }
        }
    }

    #[test]
    fn rejects_invalid_branches() {
        let k = FieldCtx::prime(5).unwrap();
        let x = UniPoly::x();
        let err = Gtds::new(
            &k,
            vec![Branch::new(x.clone(), MultiPoly::var(2, 1), MultiPoly::zero(2))],
            x.clone(),
        )
        .unwrap_err();
        assert_eq!(err, Error::GiHasZero(1));
        assert_eq!(err.to_string(), "GiHasZero(1)");

        let err = Gtds::new(
            &k,
            vec![Branch::plain(UniPoly::monomial(Fe::ONE, 2), 2)],
            x.clone(),
        )
        .unwrap_err();
        assert_eq!(err, Error::NotAPermutation { branch: Some(1) });

        let err = Gtds::new(
            &k,
            vec![Branch::new(x.clone(), MultiPoly::one(2), MultiPoly::var(2, 0))],
            x.clone(),
        )
        .unwrap_err();
        assert_eq!(err, Error::VariableOutOfScope(1));

        let err = Gtds::new(
            &k,
            vec![Branch::plain(x.clone(), 2)],
            UniPoly::monomial(Fe::ONE, 4),
        )
        .unwrap_err();
        assert_eq!(err, Error::NotAPermutation { branch: Some(2) });

        let err = Gtds::new(
            &k,
            vec![Branch::new(x.clone(), MultiPoly::one(3), MultiPoly::zero(2))],
            x,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ArityMismatch { .. }));
    }

    #[test]
    fn unchecked_system_with_vanishing_multiplier() {
        let k = FieldCtx::prime(5).unwrap();
        let raw = Gtds::new_unchecked(
            &k,
            vec![Branch::new(UniPoly::x(), MultiPoly::var(2, 1), MultiPoly::zero(2))],
            UniPoly::x(),
        )
        .unwrap();
        assert!(!raw.is_orthogonal_exhaustive().unwrap());
        assert_eq!(raw.invert(&[fe(1), fe(0)]), Err(Error::GiHasZero(1)));
    }

    #[test]
    fn literal_power_agrees() {
        let (k, sys) = f5_example();
        let space = Space::new(&k, 2, 1 << 10).unwrap();
        for y in space.vectors() {
            assert_eq!(
                sys.invert(&y).unwrap(),
                sys.invert_with(&y, InversionMode::LiteralPower).unwrap()
            );
        }
    }

    #[test]
    fn reversed_layout() {
        let k = FieldCtx::prime(7).unwrap();
        // branch order (z1, z2) = (x2, x1): z1 * (z2^2 + 1)
        let g = UniPoly::from_terms(&k, [(2, Fe::ONE), (0, Fe::ONE)]).lift(2, 1);
        let sys = Gtds::new(&k, vec![Branch::new(UniPoly::x(), g, MultiPoly::zero(2))], UniPoly::x())
            .unwrap()
            .with_layout(Layout::Reversed);
        let y = sys.eval(&[fe(3), fe(2)]).unwrap();
        assert_eq!(y, vec![fe(3), k.mul(fe(2), fe(10 % 7))]);
        assert_eq!(sys.invert(&y).unwrap(), vec![fe(3), fe(2)]);
        assert!(sys.is_orthogonal_exhaustive().unwrap());
    }

    #[test]
    fn arity_checked() {
        let (_, sys) = f5_example();
        assert!(matches!(sys.eval(&[fe(1)]), Err(Error::ArityMismatch { .. })));
        assert!(matches!(sys.invert(&[fe(1), fe(2), fe(3)]), Err(Error::ArityMismatch { .. })));
    }

    #[test]
    fn single_branch_system() {
        let k = FieldCtx::prime(11).unwrap();
        let sys = Gtds::new(&k, vec![], UniPoly::monomial(Fe::ONE, 3)).unwrap();
        assert_eq!(sys.n(), 1);
        assert_eq!(sys.eval(&[fe(2)]).unwrap(), vec![fe(8)]);
        assert_eq!(sys.invert(&[fe(8)]).unwrap(), vec![fe(2)]);
        assert_eq!(sys.inverse_degree(0), Some(7));
    }
}
