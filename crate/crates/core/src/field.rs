//! Exact arithmetic in `F_p` and small extension fields `F_{p^m}`.
//!
//! Elements are plain packed integers: an element of `F_{p^m}` with
//! polynomial-basis coordinates `c_0 + c_1 t + ... + c_{m-1} t^{m-1}` is stored
//! as `c_0 + c_1 p + ... + c_{m-1} p^{m-1}`. All arithmetic goes through the
//! [`FieldCtx`], which owns the characteristic and the reduction polynomial.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest characteristic accepted for single-word residues.
pub const MAX_CHARACTERISTIC: u64 = 1 << 31;

/// Largest cardinality accepted for proper extension fields.
pub const MAX_EXTENSION_ORDER: u64 = 1 << 20;

/// An element of some [`FieldCtx`], in packed canonical form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fe(u64);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    /// Packed integer value; for prime fields this is the residue itself.
    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub(crate) fn from_raw(v: u64) -> Fe {
        Fe(v)
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// JSON description of a field: `{"p": 2, "m": 3, "modulus": [1, 1, 0, 1]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDesc {
    pub p: u64,
    #[serde(default = "one")]
    pub m: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<Vec<u64>>,
}

fn one() -> u32 {
    1
}

/// The field `F_q`, `q = p^m`, with its reduction polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldCtx {
    p: u64,
    m: u32,
    /// Monic modulus, low-to-high, length `m + 1`. Empty for prime fields.
    modulus: Vec<u64>,
    q: u64,
}

impl FieldCtx {
    /// The prime field `F_p`.
    pub fn prime(p: u64) -> Result<Self> {
        if p >= MAX_CHARACTERISTIC {
            return Err(Error::InvalidField(format!(
                "characteristic {p} exceeds 2^31"
            )));
        }
        if !is_prime(p) {
            return Err(Error::InvalidField(format!("{p} is not prime")));
        }
        Ok(FieldCtx {
            p,
            m: 1,
            modulus: Vec::new(),
            q: p,
        })
    }

    /// `F_p[t] / (modulus)`. The modulus is given low-to-high, must be monic
    /// and irreducible. A linear modulus yields the prime field.
    pub fn extension(p: u64, modulus: Vec<u64>) -> Result<Self> {
        let base = FieldCtx::prime(p)?;
        if modulus.len() < 2 {
            return Err(Error::InvalidField("modulus must have degree >= 1".into()));
        }
        if modulus.iter().any(|&c| c >= p) {
            return Err(Error::InvalidField(format!(
                "modulus coefficients must lie in [0, {p})"
            )));
        }
        if *modulus.last().unwrap() != 1 {
            return Err(Error::InvalidField("modulus must be monic".into()));
        }
        let m = (modulus.len() - 1) as u32;
        if m == 1 {
            return Ok(base);
        }
        let q = (p as u128).pow(m);
        if q > MAX_EXTENSION_ORDER as u128 {
            return Err(Error::InvalidField(format!(
                "extension field of order {q} exceeds 2^20"
            )));
        }
        if !dense::is_irreducible(&modulus, p) {
            return Err(Error::InvalidField(format!(
                "modulus {modulus:?} is reducible over F_{p}"
            )));
        }
        Ok(FieldCtx {
            p,
            m,
            modulus,
            q: q as u64,
        })
    }

    pub fn from_desc(desc: &FieldDesc) -> Result<Self> {
        match (&desc.modulus, desc.m) {
            (None, 1) => FieldCtx::prime(desc.p),
            (Some(modulus), m) => {
                if modulus.len() != m as usize + 1 {
                    return Err(Error::InvalidField(format!(
                        "modulus has {} coefficients, expected m + 1 = {}",
                        modulus.len(),
                        m + 1
                    )));
                }
                FieldCtx::extension(desc.p, modulus.clone())
            }
            (None, m) => Err(Error::InvalidField(format!(
                "extension degree {m} needs an explicit modulus"
            ))),
        }
    }

    pub fn desc(&self) -> FieldDesc {
        FieldDesc {
            p: self.p,
            m: self.m,
            modulus: if self.m == 1 {
                None
            } else {
                Some(self.modulus.clone())
            },
        }
    }

    #[inline]
    pub fn characteristic(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn degree(&self) -> u32 {
        self.m
    }

    #[inline]
    pub fn order(&self) -> u64 {
        self.q
    }

    #[inline]
    pub fn is_prime_field(&self) -> bool {
        self.m == 1
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    /// Checked conversion from a packed value.
    pub fn element(&self, v: u64) -> Result<Fe> {
        if v < self.q {
            Ok(Fe(v))
        } else {
            Err(Error::OutOfRange { value: v, q: self.q })
        }
    }

    /// The image of an integer in the prime subfield.
    pub fn from_int(&self, v: i64) -> Fe {
        Fe(v.rem_euclid(self.p as i64) as u64)
    }

    /// Element with the given polynomial-basis coordinates (low-to-high).
    pub fn from_coeffs(&self, coeffs: &[u64]) -> Result<Fe> {
        if coeffs.len() > self.m as usize {
            return Err(Error::InvalidField(format!(
                "{} coordinates given for a degree-{} field",
                coeffs.len(),
                self.m
            )));
        }
        let mut v = 0u64;
        for &c in coeffs.iter().rev() {
            if c >= self.p {
                return Err(Error::OutOfRange { value: c, q: self.p });
            }
            v = v * self.p + c;
        }
        Ok(Fe(v))
    }

    pub fn coeffs(&self, a: Fe) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.m as usize);
        let mut v = a.0;
        for _ in 0..self.m {
            out.push(v % self.p);
            v /= self.p;
        }
        out
    }

    pub fn elements(&self) -> impl Iterator<Item = Fe> + Clone {
        (0..self.q).map(Fe)
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = Fe> + Clone {
        (1..self.q).map(Fe)
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        if self.m == 1 {
            let s = a.0 + b.0;
            Fe(if s >= self.p { s - self.p } else { s })
        } else {
            self.digitwise(a, b, |x, y| (x + y) % self.p)
        }
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        if self.m == 1 {
            Fe(if a.0 >= b.0 { a.0 - b.0 } else { a.0 + self.p - b.0 })
        } else {
            self.digitwise(a, b, |x, y| (x + self.p - y) % self.p)
        }
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        self.sub(Fe::ZERO, a)
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if self.m == 1 {
            Fe(a.0 * b.0 % self.p)
        } else {
            self.ext_mul(a, b)
        }
    }

    /// Multiplicative inverse: extended Euclid in `F_p`, `a^(q-2)` in
    /// extensions.
    pub fn inv(&self, a: Fe) -> Result<Fe> {
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.m == 1 {
            Ok(Fe(inv_mod(a.0, self.p)))
        } else {
            Ok(self.pow(a, self.q - 2))
        }
    }

    pub fn div(&self, a: Fe, b: Fe) -> Result<Fe> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Square-and-multiply; `0^0 = 1`.
    pub fn pow(&self, a: Fe, mut e: u64) -> Fe {
        let mut base = a;
        let mut acc = Fe::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Absolute trace `a + a^p + ... + a^(p^(m-1))`, an element of `F_p`.
    pub fn trace(&self, a: Fe) -> Fe {
        if self.m == 1 {
            return a;
        }
        let mut acc = Fe::ZERO;
        let mut conj = a;
        for _ in 0..self.m {
            acc = self.add(acc, conj);
            conj = self.pow(conj, self.p);
        }
        debug_assert!(acc.0 < self.p);
        acc
    }

    /// The canonical additive character `exp(2 pi i Tr(a) / p)`.
    pub fn character(&self, a: Fe) -> Complex64 {
        root_of_unity(self.p, self.trace(a).0)
    }

    /// Euler's criterion in an odd prime field; zero counts as a square.
    pub fn is_quadratic_residue(&self, a: Fe) -> Result<bool> {
        if self.m != 1 || self.p == 2 {
            return Err(Error::OddPrimeRequired);
        }
        Ok(a.is_zero() || self.pow(a, (self.p - 1) / 2) == Fe::ONE)
    }

    fn digitwise(&self, a: Fe, b: Fe, op: impl Fn(u64, u64) -> u64) -> Fe {
        let (mut x, mut y) = (a.0, b.0);
        let mut out = 0u64;
        let mut scale = 1u64;
        for _ in 0..self.m {
            out += op(x % self.p, y % self.p) * scale;
            x /= self.p;
            y /= self.p;
            scale *= self.p;
        }
        Fe(out)
    }

    fn ext_mul(&self, a: Fe, b: Fe) -> Fe {
        let m = self.m as usize;
        let p = self.p;
        let ca = self.coeffs(a);
        let cb = self.coeffs(b);
        let mut prod = vec![0u64; 2 * m - 1];
        for (i, &x) in ca.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in cb.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % p;
            }
        }
        // t^m = -(c_0 + ... + c_{m-1} t^{m-1})
        for k in (m..prod.len()).rev() {
            let top = prod[k];
            if top == 0 {
                continue;
            }
            prod[k] = 0;
            for (j, &c) in self.modulus[..m].iter().enumerate() {
                let idx = k - m + j;
                prod[idx] = (prod[idx] + p - top * c % p) % p;
            }
        }
        let mut v = 0u64;
        for &c in prod[..m].iter().rev() {
            v = v * p + c;
        }
        Fe(v)
    }
}

impl fmt::Display for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.m == 1 {
            write!(f, "F_{}", self.p)
        } else {
            write!(f, "F_{}^{} mod {:?}", self.p, self.m, self.modulus)
        }
    }
}

/// `exp(2 pi i k / p)`.
#[inline]
pub fn root_of_unity(p: u64, k: u64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * (k % p) as f64 / p as f64)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of `a` modulo `n` for coprime `a`, `n`.
pub fn inv_mod(a: u64, n: u64) -> u64 {
    let (mut r0, mut r1) = (n as i128, (a % n) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let quot = r0 / r1;
        (r0, r1) = (r1, r0 - quot * r1);
        (t0, t1) = (t1, t0 - quot * t1);
    }
    debug_assert_eq!(r0, 1, "inv_mod on non-coprime input");
    t0.rem_euclid(n as i128) as u64
}

/// Dense polynomials over `F_p` used for modulus validation.
mod dense {
    fn trim(v: &mut Vec<u64>) {
        while v.len() > 1 && *v.last().unwrap() == 0 {
            v.pop();
        }
    }

    /// Remainder of `a` modulo the monic polynomial `b`.
    fn rem_monic(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut r = a.to_vec();
        let db = b.len() - 1;
        while r.len() > db {
            let top = *r.last().unwrap();
            let shift = r.len() - 1 - db;
            if top != 0 {
                for (j, &c) in b.iter().enumerate() {
                    r[shift + j] = (r[shift + j] + p - top * c % p) % p;
                }
            }
            r.pop();
        }
        if r.is_empty() {
            r.push(0);
        }
        trim(&mut r);
        r
    }

    /// Trial division by every monic polynomial of degree `1..=deg/2`.
    pub(super) fn is_irreducible(f: &[u64], p: u64) -> bool {
        let deg = f.len() - 1;
        for d in 1..=deg / 2 {
            let count = p.pow(d as u32);
            for idx in 0..count {
                let mut g = Vec::with_capacity(d + 1);
                let mut v = idx;
                for _ in 0..d {
                    g.push(v % p);
                    v /= p;
                }
                g.push(1);
                let r = rem_monic(f, &g, p);
                if r.len() == 1 && r[0] == 0 {
                    return false;
                }
            }
        }
        true
    }

}
