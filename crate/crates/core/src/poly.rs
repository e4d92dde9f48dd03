//! Sparse univariate and multivariate polynomials over `F_q`.
//!
//! Polynomials do not carry their field; every operation takes the
//! [`FieldCtx`] explicitly. Arithmetization-oriented maps are few-term and
//! high-degree, so terms live in exponent-keyed maps and dense vectors only
//! appear inside interpolation.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use rayon::prelude::*;

use crate::error::{check_domain, Error, Result};
use crate::field::{gcd, inv_mod, Fe, FieldCtx};
use crate::space::{check_arity, domain_size, MAX_DOMAIN};

/// Largest field for which general inverses are computed by interpolation.
pub const MAX_INTERPOLATION_ORDER: u64 = 1 << 12;

/// Canonical exponent modulo `x^q - x`.
#[inline]
fn reduce_exponent(e: u64, q: u64) -> u64 {
    if e == 0 {
        0
    } else {
        (e - 1) % (q - 1) + 1
    }
}

/// Univariate polynomial as a map exponent -> nonzero coefficient.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct UniPoly {
    terms: BTreeMap<u64, Fe>,
}

impl UniPoly {
    pub fn zero() -> Self {
        UniPoly::default()
    }

    pub fn constant(c: Fe) -> Self {
        UniPoly::monomial(c, 0)
    }

    /// The identity polynomial `x`.
    pub fn x() -> Self {
        UniPoly::monomial(Fe::ONE, 1)
    }

    pub fn monomial(c: Fe, e: u64) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(e, c);
        }
        UniPoly { terms }
    }

    /// Sums repeated exponents and drops zero coefficients.
    pub fn from_terms(ctx: &FieldCtx, terms: impl IntoIterator<Item = (u64, Fe)>) -> Self {
        let mut out = BTreeMap::new();
        for (e, c) in terms {
            let entry = out.entry(e).or_insert(Fe::ZERO);
            *entry = ctx.add(*entry, c);
        }
        out.retain(|_, c| !c.is_zero());
        UniPoly { terms: out }
    }

    /// Dense coefficients, index = exponent.
    pub fn from_dense(coeffs: &[Fe]) -> Self {
        UniPoly {
            terms: coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(e, &c)| (e as u64, c))
                .collect(),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, Fe)> + '_ {
        self.terms.iter().map(|(&e, &c)| (e, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, e: u64) -> Fe {
        self.terms.get(&e).copied().unwrap_or(Fe::ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Degree, with `deg 0 = -1`.
    pub fn degree(&self) -> i64 {
        self.terms.keys().next_back().map_or(-1, |&e| e as i64)
    }

    pub fn leading_coeff(&self) -> Fe {
        self.terms.values().next_back().copied().unwrap_or(Fe::ZERO)
    }

    /// `Some((c, d))` if the polynomial is the single term `c x^d`.
    pub fn as_monomial(&self) -> Option<(Fe, u64)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(&e, &c)| (c, e))
        } else {
            None
        }
    }

    pub fn eval(&self, ctx: &FieldCtx, x: Fe) -> Fe {
        self.terms.iter().fold(Fe::ZERO, |acc, (&e, &c)| {
            ctx.add(acc, ctx.mul(c, ctx.pow(x, e)))
        })
    }

    /// Representative modulo `x^q - x`: every positive exponent `e` becomes
    /// `((e - 1) mod (q - 1)) + 1`.
    pub fn reduce(&self, ctx: &FieldCtx) -> UniPoly {
        let q = ctx.order();
        UniPoly::from_terms(ctx, self.terms().map(|(e, c)| (reduce_exponent(e, q), c)))
    }

    pub fn add(&self, ctx: &FieldCtx, other: &UniPoly) -> UniPoly {
        UniPoly::from_terms(ctx, self.terms().chain(other.terms()))
    }

    pub fn scale(&self, ctx: &FieldCtx, c: Fe) -> UniPoly {
        UniPoly::from_terms(ctx, self.terms().map(|(e, a)| (e, ctx.mul(a, c))))
    }

    pub fn mul(&self, ctx: &FieldCtx, other: &UniPoly) -> UniPoly {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ea, ca) in self.terms() {
            for (eb, cb) in other.terms() {
                terms.push((ea + eb, ctx.mul(ca, cb)));
            }
        }
        UniPoly::from_terms(ctx, terms)
    }

    /// Lifts into `nvars` variables, placing `x` at position `var`.
    pub fn lift(&self, nvars: usize, var: usize) -> MultiPoly {
        assert!(var < nvars, "variable {var} out of range for {nvars} variables");
        let terms = self
            .terms()
            .map(|(e, c)| {
                let mut exps = vec![0u64; nvars];
                exps[var] = e;
                (exps, c)
            })
            .collect();
        MultiPoly { nvars, terms }
    }
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(&e, &c)| match (e, c.value()) {
                (0, _) => format!("{c}"),
                (1, 1) => "x".to_string(),
                (1, _) => format!("{c}*x"),
                (_, 1) => format!("x^{e}"),
                _ => format!("{c}*x^{e}"),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Multivariate polynomial in `nvars` variables, exponent vector -> nonzero
/// coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u64>, Fe>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Fe) -> Self {
        let mut p = MultiPoly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn one(nvars: usize) -> Self {
        MultiPoly::constant(nvars, Fe::ONE)
    }

    /// The variable `x_var` (0-based).
    pub fn var(nvars: usize, var: usize) -> Self {
        UniPoly::x().lift(nvars, var)
    }

    pub fn from_terms(
        ctx: &FieldCtx,
        nvars: usize,
        terms: impl IntoIterator<Item = (Vec<u64>, Fe)>,
    ) -> Result<Self> {
        let mut out: BTreeMap<Vec<u64>, Fe> = BTreeMap::new();
        for (exps, c) in terms {
            check_arity(nvars, exps.len())?;
            let entry = out.entry(exps).or_insert(Fe::ZERO);
            *entry = ctx.add(*entry, c);
        }
        out.retain(|_, c| !c.is_zero());
        Ok(MultiPoly { nvars, terms: out })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u64], Fe)> + '_ {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant value, if no variable appears.
    pub fn as_constant(&self) -> Option<Fe> {
        match self.terms.len() {
            0 => Some(Fe::ZERO),
            1 => self
                .terms
                .iter()
                .next()
                .filter(|(e, _)| e.iter().all(|&x| x == 0))
                .map(|(_, &c)| c),
            _ => None,
        }
    }

    /// Indices of variables with a positive exponent in some term.
    pub fn used_vars(&self) -> BTreeSet<usize> {
        self.terms
            .keys()
            .flat_map(|e| e.iter().enumerate().filter(|(_, &x)| x > 0).map(|(i, _)| i))
            .collect()
    }

    pub fn eval(&self, ctx: &FieldCtx, x: &[Fe]) -> Result<Fe> {
        check_arity(self.nvars, x.len())?;
        Ok(self.eval_unchecked(ctx, x))
    }

    /// Evaluation without the arity check; `x` must have `nvars` entries.
    #[inline]
    pub fn eval_unchecked(&self, ctx: &FieldCtx, x: &[Fe]) -> Fe {
        let mut acc = Fe::ZERO;
        for (exps, &c) in &self.terms {
            let mut t = c;
            for (&xi, &e) in x.iter().zip(exps) {
                if e > 0 {
                    t = ctx.mul(t, ctx.pow(xi, e));
                }
            }
            acc = ctx.add(acc, t);
        }
        acc
    }

    pub fn reduce(&self, ctx: &FieldCtx) -> MultiPoly {
        let q = ctx.order();
        MultiPoly::from_terms(
            ctx,
            self.nvars,
            self.terms().map(|(e, c)| {
                (e.iter().map(|&x| reduce_exponent(x, q)).collect(), c)
            }),
        )
        .expect("exponent vectors keep their arity")
    }

    pub fn add(&self, ctx: &FieldCtx, other: &MultiPoly) -> Result<MultiPoly> {
        check_arity(self.nvars, other.nvars)?;
        MultiPoly::from_terms(
            ctx,
            self.nvars,
            self.terms()
                .chain(other.terms())
                .map(|(e, c)| (e.to_vec(), c)),
        )
    }

    pub fn scale(&self, ctx: &FieldCtx, c: Fe) -> MultiPoly {
        MultiPoly::from_terms(
            ctx,
            self.nvars,
            self.terms().map(|(e, a)| (e.to_vec(), ctx.mul(a, c))),
        )
        .expect("exponent vectors keep their arity")
    }

    /// Re-indexes into `nvars` variables: variable `k` becomes `map[k]`.
    pub fn remap(&self, nvars: usize, map: &[usize]) -> MultiPoly {
        assert_eq!(map.len(), self.nvars);
        let terms = self
            .terms
            .iter()
            .map(|(e, &c)| {
                let mut exps = vec![0u64; nvars];
                for (k, &x) in e.iter().enumerate() {
                    exps[map[k]] += x;
                }
                (exps, c)
            })
            .collect();
        MultiPoly { nvars, terms }
    }

    /// The univariate polynomial in `x_var`, if no other variable appears.
    pub fn as_univariate_in(&self, var: usize) -> Option<UniPoly> {
        let mut terms = BTreeMap::new();
        for (e, &c) in &self.terms {
            if e.iter().enumerate().any(|(i, &x)| i != var && x > 0) {
                return None;
            }
            terms.insert(e[var], c);
        }
        Some(UniPoly { terms })
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut s = c.to_string();
                for (i, &x) in e.iter().enumerate() {
                    match x {
                        0 => {}
                        1 => s.push_str(&format!("*x{}", i + 1)),
                        _ => s.push_str(&format!("*x{}^{}", i + 1, x)),
                    }
                }
                s
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// How a permutation property was established.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertKind {
    /// Degree one: `a x + b` with `a != 0`.
    Affine,
    /// `c x^d` with `gcd(d, q - 1) = 1`.
    MonomialGcd,
    /// Exhaustive image check.
    Exhaustive,
}

/// Evidence that a univariate polynomial permutes `F_q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermPolyCert {
    pub kind: CertKind,
    /// Compositional inverse modulo `x^q - x`, when computable.
    pub inverse: Option<UniPoly>,
    /// Degree of the reduced polynomial.
    pub deg_f: i64,
    pub deg_finv: Option<i64>,
}

fn affine_parts(f: &UniPoly) -> Option<(Fe, Fe)> {
    if f.degree() == 1 {
        Some((f.coeff(1), f.coeff(0)))
    } else {
        None
    }
}

/// Whether `x -> f(x)` is a bijection of `F_q`.
///
/// Affine and monomial inputs are decided structurally; anything else is
/// checked on all `q` points, which requires `q <= 2^20`.
pub fn is_permutation_polynomial(ctx: &FieldCtx, f: &UniPoly) -> Result<bool> {
    let f = f.reduce(ctx);
    if f.degree() <= 0 {
        return Ok(false);
    }
    if affine_parts(&f).is_some() {
        return Ok(true);
    }
    if let Some((_, d)) = f.as_monomial() {
        return Ok(gcd(d, ctx.order() - 1) == 1);
    }
    is_bijective_exhaustive(ctx, &f)
}

pub(crate) fn is_bijective_exhaustive(ctx: &FieldCtx, f: &UniPoly) -> Result<bool> {
    check_domain(ctx.order() as u128, MAX_DOMAIN)?;
    let q = ctx.order() as usize;
    let image: Vec<u64> = ctx
        .elements()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&x| f.eval(ctx, x).value())
        .collect();
    let mut seen = vec![false; q];
    for y in image {
        if std::mem::replace(&mut seen[y as usize], true) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Classifies `f` and, where feasible, computes its inverse.
pub fn permutation_certificate(ctx: &FieldCtx, f: &UniPoly) -> Result<PermPolyCert> {
    let f = f.reduce(ctx);
    if !is_permutation_polynomial(ctx, &f)? {
        return Err(Error::NotAPermutation { branch: None });
    }
    let deg_f = f.degree();
    let (kind, inverse) = if let Some((a, b)) = affine_parts(&f) {
        let a_inv = ctx.inv(a)?;
        let inv = UniPoly::from_terms(
            ctx,
            [(1, a_inv), (0, ctx.neg(ctx.mul(a_inv, b)))],
        );
        (CertKind::Affine, Some(inv))
    } else if let Some((c, d)) = f.as_monomial() {
        let e = inv_mod(d, ctx.order() - 1);
        let coeff = ctx.pow(ctx.inv(c)?, e);
        (CertKind::MonomialGcd, Some(UniPoly::monomial(coeff, e)))
    } else if ctx.order() <= MAX_INTERPOLATION_ORDER {
        (CertKind::Exhaustive, Some(interpolate_inverse(ctx, &f)?))
    } else {
        (CertKind::Exhaustive, None)
    };
    let deg_finv = inverse.as_ref().map(UniPoly::degree);
    Ok(PermPolyCert {
        kind,
        inverse,
        deg_f,
        deg_finv,
    })
}

/// Compositional inverse with `f^-1(f(x)) = x` on all of `F_q`.
pub fn invert_permutation_polynomial(ctx: &FieldCtx, f: &UniPoly) -> Result<UniPoly> {
    let cert = permutation_certificate(ctx, f)?;
    cert.inverse.ok_or(Error::DomainTooLarge {
        size: ctx.order() as u128,
        limit: MAX_INTERPOLATION_ORDER,
    })
}

fn interpolate_inverse(ctx: &FieldCtx, f: &UniPoly) -> Result<UniPoly> {
    let points: Vec<(Fe, Fe)> = ctx.elements().map(|x| (f.eval(ctx, x), x)).collect();
    interpolate(ctx, &points)
}

/// Lagrange interpolation: the unique polynomial of degree `< points.len()`
/// through all points.
pub fn interpolate(ctx: &FieldCtx, points: &[(Fe, Fe)]) -> Result<UniPoly> {
    let mut seen = HashSet::with_capacity(points.len());
    if !points.iter().all(|(x, _)| seen.insert(*x)) {
        return Err(Error::DuplicateAbscissa);
    }
    let n = points.len();
    if n == 0 {
        return Ok(UniPoly::zero());
    }
    // master = prod (x - x_i), dense low-to-high, degree n
    let mut master = vec![Fe::ONE];
    for &(xi, _) in points {
        let mut next = vec![Fe::ZERO; master.len() + 1];
        for (k, &c) in master.iter().enumerate() {
            next[k + 1] = ctx.add(next[k + 1], c);
            next[k] = ctx.sub(next[k], ctx.mul(c, xi));
        }
        master = next;
    }
    let mut acc = vec![Fe::ZERO; n];
    let mut quotient = vec![Fe::ZERO; n];
    for &(xi, yi) in points {
        if yi.is_zero() {
            continue;
        }
        // synthetic division master / (x - xi)
        let mut carry = Fe::ZERO;
        for k in (0..n).rev() {
            carry = ctx.add(master[k + 1], ctx.mul(carry, xi));
            quotient[k] = carry;
        }
        let denom = quotient
            .iter()
            .rev()
            .fold(Fe::ZERO, |a, &c| ctx.add(ctx.mul(a, xi), c));
        let w = ctx.div(yi, denom)?;
        for (a, &c) in acc.iter_mut().zip(&quotient) {
            *a = ctx.add(*a, ctx.mul(w, c));
        }
    }
    Ok(UniPoly::from_dense(&acc))
}

/// Outcome of a zero-freeness test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ZeroCheck {
    /// Zero-free by a structural argument (nonzero constant, or an
    /// irreducible quadratic over an odd prime field).
    Certified,
    /// Zero-free by exhaustive scan.
    Scanned,
    /// Vanishes at the given point.
    Zero(Vec<Fe>),
}

impl ZeroCheck {
    pub fn is_zero_free(&self) -> bool {
        !matches!(self, ZeroCheck::Zero(_))
    }
}

/// Decides whether `g` vanishes somewhere on `F_q^nvars`.
///
/// Only the variables that actually occur are scanned; the scanned domain
/// must stay within `2^20` points.
pub fn has_no_zeros(ctx: &FieldCtx, g: &MultiPoly) -> Result<ZeroCheck> {
    let g = g.reduce(ctx);
    let nvars = g.nvars();
    if let Some(c) = g.as_constant() {
        return Ok(if c.is_zero() {
            ZeroCheck::Zero(vec![Fe::ZERO; nvars])
        } else {
            ZeroCheck::Certified
        });
    }
    let used: Vec<usize> = g.used_vars().into_iter().collect();
    if used.len() == 1 && ctx.is_prime_field() && ctx.characteristic() > 2 {
        let u = g.as_univariate_in(used[0]).expect("single variable");
        if u.degree() == 2 {
            let (a, b, c) = (u.coeff(2), u.coeff(1), u.coeff(0));
            let four_ac = ctx.mul(ctx.from_int(4), ctx.mul(a, c));
            let disc = ctx.sub(ctx.mul(b, b), four_ac);
            if !ctx.is_quadratic_residue(disc)? {
                return Ok(ZeroCheck::Certified);
            }
        }
    }
    let size = domain_size(ctx, used.len());
    check_domain(size, MAX_DOMAIN)?;
    let q = ctx.order();
    let hit = (0..size as u64).into_par_iter().find_first(|&idx| {
        let mut point = vec![Fe::ZERO; nvars];
        let mut v = idx;
        for &var in &used {
            point[var] = Fe::from_raw(v % q);
            v /= q;
        }
        g.eval_unchecked(ctx, &point).is_zero()
    });
    Ok(match hit {
        Some(mut v) => {
            let mut point = vec![Fe::ZERO; nvars];
            for &var in &used {
                point[var] = Fe::from_raw(v % q);
                v /= q;
            }
            ZeroCheck::Zero(point)
        }
        None => ZeroCheck::Scanned,
    })
}

/// [`has_no_zeros`] for a univariate polynomial.
pub fn has_no_zeros_uni(ctx: &FieldCtx, g: &UniPoly) -> Result<ZeroCheck> {
    has_no_zeros(ctx, &g.lift(1, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(p: u64) -> FieldCtx {
        FieldCtx::prime(p).unwrap()
    }

    fn fe(v: u64) -> Fe {
        Fe::from_raw(v)
    }

    fn uni(ctx: &FieldCtx, terms: &[(u64, u64)]) -> UniPoly {
        UniPoly::from_terms(ctx, terms.iter().map(|&(e, c)| (e, fe(c))))
    }

    #[test]
    fn eval_uni_examples() {
        let k = fp(5);
        assert_eq!(uni(&k, &[(2, 1), (0, 1)]).eval(&k, fe(3)), fe(0));
        assert_eq!(UniPoly::zero().eval(&k, fe(4)), fe(0));
        assert_eq!(UniPoly::x().eval(&k, fe(4)), fe(4));
    }

    #[test]
    fn eval_multi_examples() {
        let k = fp(5);
        let xy = MultiPoly::from_terms(&k, 2, [(vec![1, 1], fe(1))]).unwrap();
        assert_eq!(xy.eval(&k, &[fe(2), fe(3)]).unwrap(), fe(1));
        let g = MultiPoly::from_terms(&k, 2, [(vec![0, 2], fe(1)), (vec![0, 0], fe(3))]).unwrap();
        for a in k.elements() {
            assert_eq!(g.eval(&k, &[a, fe(1)]).unwrap(), fe(4));
        }
        let c = MultiPoly::constant(3, fe(2));
        assert_eq!(c.eval(&k, &[fe(1), fe(4), fe(0)]).unwrap(), fe(2));
        assert_eq!(
            xy.eval(&k, &[fe(1)]),
            Err(Error::ArityMismatch { expected: 2, found: 1 })
        );
    }

    #[test]
    fn reduce_examples() {
        let k = fp(5);
        assert_eq!(uni(&k, &[(5, 1)]).reduce(&k), UniPoly::x());
        let x8 = uni(&k, &[(8, 1)]);
        let r = x8.reduce(&k);
        assert_eq!(r, uni(&k, &[(4, 1)]));
        for a in k.elements() {
            assert_eq!(x8.eval(&k, a), r.eval(&k, a));
        }
        let c = UniPoly::constant(fe(3));
        assert_eq!(c.reduce(&k), c);
        // x^4 + x^8 collapses to 2 x^4
        assert_eq!(uni(&k, &[(4, 1), (8, 1)]).reduce(&k), uni(&k, &[(4, 2)]));
    }

    #[test]
    fn multi_reduce_preserves_values() {
        let k = fp(3);
        let g = MultiPoly::from_terms(
            &k,
            2,
            [(vec![7, 3], fe(2)), (vec![0, 5], fe(1)), (vec![4, 0], fe(1))],
        )
        .unwrap();
        let r = g.reduce(&k);
        for a in k.elements() {
            for b in k.elements() {
                assert_eq!(g.eval(&k, &[a, b]).unwrap(), r.eval(&k, &[a, b]).unwrap());
            }
        }
    }

    #[test]
    fn permutation_examples() {
        assert!(is_permutation_polynomial(&fp(5), &uni(&fp(5), &[(3, 1)])).unwrap());
        assert!(!is_permutation_polynomial(&fp(7), &uni(&fp(7), &[(3, 1)])).unwrap());
        for c in 0..5 {
            let f = uni(&fp(5), &[(1, 1), (0, c)]);
            assert!(is_permutation_polynomial(&fp(5), &f).unwrap());
        }
        assert!(!is_permutation_polynomial(&fp(5), &UniPoly::constant(fe(2))).unwrap());
        assert!(!is_permutation_polynomial(&fp(5), &UniPoly::zero()).unwrap());
        // Dickson-type x^3 + x over F_7 is not a permutation; x^5 + 3x over F_7? check exhaustively
        let k = fp(7);
        let f = uni(&k, &[(3, 1), (1, 1)]);
        let image: BTreeSet<Fe> = k.elements().map(|x| f.eval(&k, x)).collect();
        assert_eq!(is_permutation_polynomial(&k, &f).unwrap(), image.len() == 7);
    }

    #[test]
    fn monomial_criterion_matches_exhaustive() {
        for p in [5u64, 7, 11, 13] {
            let k = fp(p);
            for d in 1..p - 1 {
                let f = UniPoly::monomial(Fe::ONE, d);
                assert_eq!(
                    is_permutation_polynomial(&k, &f).unwrap(),
                    is_bijective_exhaustive(&k, &f).unwrap(),
                    "p={p} d={d}"
                );
            }
        }
    }

    #[test]
    fn inverse_examples() {
        let k5 = fp(5);
        assert_eq!(
            invert_permutation_polynomial(&k5, &uni(&k5, &[(3, 1)])).unwrap(),
            uni(&k5, &[(3, 1)])
        );
        let k7 = fp(7);
        assert_eq!(
            invert_permutation_polynomial(&k7, &uni(&k7, &[(5, 1)])).unwrap(),
            uni(&k7, &[(5, 1)])
        );
        assert_eq!(
            invert_permutation_polynomial(&k5, &uni(&k5, &[(1, 1), (0, 2)])).unwrap(),
            uni(&k5, &[(1, 1), (0, 3)])
        );
        assert_eq!(
            invert_permutation_polynomial(&k7, &uni(&k7, &[(3, 1)])),
            Err(Error::NotAPermutation { branch: None })
        );
    }

    #[test]
    fn inverse_general_path_roundtrip() {
        // x^3 + 2x over F_... pick any non-monomial permutation by search
        for p in [5u64, 7, 11, 13] {
            let k = fp(p);
            for a in 0..p {
                for b in 1..p {
                    let f = uni(&k, &[(3, 1), (2, a), (1, b)]);
                    if !is_permutation_polynomial(&k, &f).unwrap() {
                        continue;
                    }
                    let g = invert_permutation_polynomial(&k, &f).unwrap();
                    for x in k.elements() {
                        assert_eq!(g.eval(&k, f.eval(&k, x)), x);
                        assert_eq!(f.eval(&k, g.eval(&k, x)), x);
                    }
                }
            }
        }
    }

    #[test]
    fn scaled_monomial_inverse() {
        let k = fp(11);
        let f = UniPoly::monomial(fe(4), 3);
        let g = invert_permutation_polynomial(&k, &f).unwrap();
        assert_eq!(g.degree(), 7);
        for x in k.elements() {
            assert_eq!(g.eval(&k, f.eval(&k, x)), x);
        }
    }

    #[test]
    fn interpolation_examples() {
        let k = fp(5);
        let id: Vec<_> = k.elements().map(|x| (x, x)).collect();
        assert_eq!(interpolate(&k, &id).unwrap(), UniPoly::x());
        let sq = uni(&k, &[(2, 1)]);
        let pts: Vec<_> = k.elements().map(|x| (x, sq.eval(&k, x))).collect();
        assert_eq!(interpolate(&k, &pts).unwrap(), sq);
        assert_eq!(
            interpolate(&k, &[(fe(2), fe(4))]).unwrap(),
            UniPoly::constant(fe(4))
        );
        assert_eq!(
            interpolate(&k, &[(fe(2), fe(4)), (fe(2), fe(1))]),
            Err(Error::DuplicateAbscissa)
        );
    }

    #[test]
    fn interpolation_in_extension_field() {
        let k = FieldCtx::extension(2, vec![1, 1, 0, 1]).unwrap();
        // x^6 is the inversion map on F_8^*; it is its own inverse
        let f = UniPoly::monomial(Fe::ONE, 6);
        let pts: Vec<_> = k.elements().map(|x| (f.eval(&k, x), x)).collect();
        assert_eq!(interpolate(&k, &pts).unwrap(), f);
    }

    #[test]
    fn zero_checks() {
        let k = fp(5);
        let g = uni(&k, &[(2, 1), (0, 3)]).lift(2, 1);
        assert_eq!(has_no_zeros(&k, &g).unwrap(), ZeroCheck::Certified);
        assert_eq!(
            has_no_zeros(&k, &MultiPoly::one(2)).unwrap(),
            ZeroCheck::Certified
        );
        let x2 = MultiPoly::var(2, 1);
        assert_eq!(
            has_no_zeros(&k, &x2).unwrap(),
            ZeroCheck::Zero(vec![fe(0), fe(0)])
        );
        // x1 * x2 + 1 vanishes at (1, 4)
        let h = MultiPoly::from_terms(&k, 2, [(vec![1, 1], fe(1)), (vec![0, 0], fe(1))]).unwrap();
        match has_no_zeros(&k, &h).unwrap() {
            ZeroCheck::Zero(pt) => assert!(h.eval(&k, &pt).unwrap().is_zero()),
            other => panic!("expected a zero, got {other:?}"),
        }
        // x^4 + 1 has no zeros over F_5 (x^4 = 1 for x != 0), found by scan
        let s = uni(&k, &[(4, 1), (0, 1)]).lift(1, 0);
        assert_eq!(has_no_zeros(&k, &s).unwrap(), ZeroCheck::Scanned);
    }

    #[test]
    fn quadratic_certificate_matches_scan() {
        for p in [5u64, 7, 11] {
            let k = fp(p);
            for a in 0..p {
                for b in 0..p {
                    let g = uni(&k, &[(2, 1), (1, a), (0, b)]);
                    let scan = k.elements().all(|x| !g.eval(&k, x).is_zero());
                    assert_eq!(
                        has_no_zeros_uni(&k, &g).unwrap().is_zero_free(),
                        scan,
                        "p={p} a={a} b={b}"
                    );
                }
            }
        }
    }

    #[test]
    fn degree_conventions() {
        assert_eq!(UniPoly::zero().degree(), -1);
        assert_eq!(UniPoly::constant(fe(1)).degree(), 0);
    }
}
