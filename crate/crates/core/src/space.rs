//! The vector space `F_q^n`: enumeration, packed indices and componentwise
//! helpers shared by the exhaustive checks.

use crate::error::{check_domain, Error, Result};
use crate::field::{Fe, FieldCtx};

/// Hard cap on any exhaustively enumerated domain.
pub const MAX_DOMAIN: u64 = 1 << 20;

/// `F_q^n` with vectors packed as `x_1 + x_2 q + ... + x_n q^(n-1)`.
#[derive(Clone, Copy, Debug)]
pub struct Space<'a> {
    ctx: &'a FieldCtx,
    n: usize,
    size: usize,
}

impl<'a> Space<'a> {
    /// Fails with `DomainTooLarge` when `q^n > limit`.
    pub fn new(ctx: &'a FieldCtx, n: usize, limit: u64) -> Result<Self> {
        let size = domain_size(ctx, n);
        check_domain(size, limit.min(MAX_DOMAIN))?;
        Ok(Space {
            ctx,
            n,
            size: size as usize,
        })
    }

    #[inline]
    pub fn ctx(&self) -> &'a FieldCtx {
        self.ctx
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn encode(&self, x: &[Fe]) -> usize {
        let q = self.ctx.order() as usize;
        x.iter().rev().fold(0usize, |acc, v| acc * q + v.value() as usize)
    }

    #[inline]
    pub fn decode_into(&self, mut idx: usize, out: &mut [Fe]) {
        let q = self.ctx.order() as usize;
        for slot in out.iter_mut() {
            *slot = Fe::from_raw((idx % q) as u64);
            idx /= q;
        }
    }

    pub fn decode(&self, idx: usize) -> Vec<Fe> {
        let mut out = vec![Fe::ZERO; self.n];
        self.decode_into(idx, &mut out);
        out
    }

    /// All vectors in index order.
    pub fn vectors(&self) -> impl Iterator<Item = Vec<Fe>> + '_ {
        (0..self.size).map(move |i| self.decode(i))
    }
}

/// `q^n` as a wide integer.
pub fn domain_size(ctx: &FieldCtx, n: usize) -> u128 {
    (ctx.order() as u128).checked_pow(n as u32).unwrap_or(u128::MAX)
}

pub(crate) fn check_arity(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::ArityMismatch { expected, found })
    }
}

pub fn add_vec(ctx: &FieldCtx, a: &[Fe], b: &[Fe]) -> Vec<Fe> {
    a.iter().zip(b).map(|(&x, &y)| ctx.add(x, y)).collect()
}

pub fn sub_vec(ctx: &FieldCtx, a: &[Fe], b: &[Fe]) -> Vec<Fe> {
    a.iter().zip(b).map(|(&x, &y)| ctx.sub(x, y)).collect()
}

pub fn neg_vec(ctx: &FieldCtx, a: &[Fe]) -> Vec<Fe> {
    a.iter().map(|&x| ctx.neg(x)).collect()
}

/// `<a, b> = sum a_i b_i`.
pub fn dot(ctx: &FieldCtx, a: &[Fe], b: &[Fe]) -> Fe {
    a.iter()
        .zip(b)
        .fold(Fe::ZERO, |acc, (&x, &y)| ctx.add(acc, ctx.mul(x, y)))
}

/// Evaluates `f` on every vector of `space`, returning packed outputs in
/// input-index order. `f` writes its image into the provided buffer.
pub fn tabulate<F>(space: &Space<'_>, f: F) -> Vec<u32>
where
    F: Fn(&[Fe], &mut [Fe]) + Sync,
{
    use rayon::prelude::*;
    let n = space.dim();
    (0..space.size())
        .into_par_iter()
        .map_init(
            || (vec![Fe::ZERO; n], vec![Fe::ZERO; n]),
            |(x, y), idx| {
                space.decode_into(idx, x);
                f(x, y);
                space.encode(y) as u32
            },
        )
        .collect()
}

/// Whether a tabulated map is a bijection of its index set.
pub fn table_is_bijective(table: &[u32]) -> bool {
    let mut seen = vec![false; table.len()];
    table.iter().all(|&y| {
        (y as usize) < seen.len() && !std::mem::replace(&mut seen[y as usize], true)
    })
}

/// Number of nonzero coordinates.
pub fn weight(v: &[Fe]) -> usize {
    v.iter().filter(|x| !x.is_zero()).count()
}
