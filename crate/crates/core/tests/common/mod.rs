//! Fixtures shared by the integration suites.

#![allow(dead_code)]

use gtds::field::gcd;
use gtds::instantiations::{
    make_arion_gtds, make_bricks, make_feistel_unbalanced, make_generalized_lai_massey, make_horst,
    make_lai_massey_2, make_partial_spn, make_spn, ArionParams, LaiMasseyParams,
};
use gtds::{AffineLayer, Branch, Fe, FieldCtx, Gtds, MultiPoly, RoundSpec, UniPoly};

pub fn field(p: u64) -> FieldCtx {
    FieldCtx::prime(p).unwrap()
}

pub fn el(ctx: &FieldCtx, v: i64) -> Fe {
    ctx.from_int(v)
}

pub fn uni(ctx: &FieldCtx, terms: &[(u64, i64)]) -> UniPoly {
    UniPoly::from_terms(ctx, terms.iter().map(|&(e, c)| (e, ctx.from_int(c))))
}

pub fn multi(ctx: &FieldCtx, nvars: usize, terms: &[(&[u64], i64)]) -> MultiPoly {
    MultiPoly::from_terms(ctx, nvars, terms.iter().map(|&(e, c)| (e.to_vec(), ctx.from_int(c))))
        .unwrap()
}

/// Smallest exponent `d > 1` with `gcd(d, q - 1) = 1`.
pub fn perm_exponent(ctx: &FieldCtx) -> u64 {
    (2..).find(|&d| gcd(d, ctx.order() - 1) == 1).unwrap()
}

/// Smallest `c` for which `x^2 + c` has no root.
pub fn quadratic_offset(ctx: &FieldCtx) -> i64 {
    (1..ctx.order() as i64)
        .find(|&c| ctx.is_quadratic_residue(ctx.from_int(-c)) == Ok(false))
        .unwrap()
}

pub fn mixing(ctx: &FieldCtx, n: usize) -> AffineLayer {
    let rows: Vec<Vec<Fe>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match (j + n - i) % n {
                    0 => el(ctx, 2),
                    1 => el(ctx, 1),
                    _ => Fe::ZERO,
                })
                .collect()
        })
        .collect();
    AffineLayer::new(ctx, rows, (0..n).map(|i| el(ctx, i as i64)).collect()).unwrap()
}

/// The two-branch system `(x1^3 (x2^2 + c) + x2, x2^3)` over `F_11`.
pub fn cube_system() -> Gtds {
    let k = field(11);
    let g = multi(&k, 2, &[(&[0, 2], 1), (&[0, 0], 1)]);
    Gtds::new(
        &k,
        vec![Branch::new(uni(&k, &[(3, 1)]), g, MultiPoly::var(2, 1))],
        uni(&k, &[(3, 1)]),
    )
    .unwrap()
}

/// Horst system on `F_p^n` with zero-free quadratic multipliers.
pub fn horst(ctx: &FieldCtx, n: usize) -> Gtds {
    let c = quadratic_offset(ctx);
    let last = n - 1;
    let mut sq = vec![0u64; n];
    sq[last] = 2;
    let mut cube = vec![0u64; n];
    cube[last] = 3;
    let g: Vec<MultiPoly> = (0..n - 1)
        .map(|_| multi(ctx, n, &[(&sq, 1), (&vec![0; n], c)]))
        .collect();
    let h: Vec<MultiPoly> = (0..n - 1)
        .map(|i| {
            let mut e = vec![0u64; n];
            e[i + 1] = 1;
            e[last] += 1;
            multi(ctx, n, &[(&e, 1), (&cube, 2)])
        })
        .collect();
    make_horst(ctx, g, h).unwrap()
}

pub fn bricks(ctx: &FieldCtx) -> Gtds {
    let c = quadratic_offset(ctx);
    // x^2 + x + b is irreducible iff 1 - 4b is a non-residue.
    let b = (0..ctx.order() as i64)
        .find(|&b| {
            let disc = ctx.from_int(1 - 4 * b);
            !disc.is_zero() && ctx.is_quadratic_residue(disc) == Ok(false)
        })
        .unwrap();
    make_bricks(
        ctx,
        perm_exponent(ctx),
        [Fe::ZERO, Fe::ONE],
        [el(ctx, c), el(ctx, b)],
    )
    .unwrap()
}

pub fn arion(ctx: &FieldCtx, n: usize) -> Gtds {
    let c = quadratic_offset(ctx);
    let g = vec![uni(ctx, &[(2, 1), (0, c)]); n - 1];
    let h = vec![uni(ctx, &[(2, 1), (1, 1)]); n - 1];
    let params = ArionParams::for_prime(ctx.characteristic(), perm_exponent(ctx), g, h).unwrap();
    make_arion_gtds(ctx, &params, n).unwrap()
}

/// Weights `(1, ..., 1, -(n - 1))`, permutations alternating `x^d` and
/// `2x + 1`, and `g(s) = s^2 + 1`.
pub fn generalized_lai_massey(ctx: &FieldCtx, n: usize) -> LaiMasseyParams {
    let d = perm_exponent(ctx);
    let mut weights = vec![Fe::ONE; n];
    weights[n - 1] = el(ctx, -(n as i64 - 1));
    let perms = (0..n)
        .map(|i| {
            if i % 2 == 0 {
                uni(ctx, &[(d, 1)])
            } else {
                uni(ctx, &[(1, 2), (0, 1)])
            }
        })
        .collect();
    LaiMasseyParams {
        weights,
        perms,
        g: multi(ctx, 1, &[(&[2], 1), (&[0], 1)]),
    }
}

/// One round from every family that exists on `F_p^n`.
pub fn family_rounds(ctx: &FieldCtx, n: usize) -> Vec<(String, RoundSpec)> {
    let d = perm_exponent(ctx);
    let s = uni(ctx, &[(d, 1)]);
    let mut out = Vec::new();
    let f = uni(ctx, &[(2, 1), (1, 3), (0, 1)]);
    out.push(("feistel".into(), make_feistel_unbalanced(ctx, &f, n).unwrap()));
    out.push(("spn".into(), make_spn(ctx, &s, n, mixing(ctx, n)).unwrap()));
    out.push(("pspn".into(), make_partial_spn(ctx, &s, n, &[0], mixing(ctx, n)).unwrap()));
    if n == 2 {
        let stages = make_lai_massey_2(ctx, &uni(ctx, &[(2, 1), (1, 1)])).unwrap();
        out.push(("lai-massey".into(), RoundSpec::new(stages, mixing(ctx, 2)).unwrap()));
    }
    let glm = make_generalized_lai_massey(ctx, generalized_lai_massey(ctx, n)).unwrap();
    out.push((
        "generalized-lai-massey".into(),
        RoundSpec::new(glm.stages().to_vec(), mixing(ctx, n)).unwrap(),
    ));
    out.push(("horst".into(), RoundSpec::from_gtds(horst(ctx, n))));
    if n == 3 {
        out.push(("bricks".into(), RoundSpec::from_gtds(bricks(ctx))));
    }
    out.push(("arion".into(), RoundSpec::from_gtds(arion(ctx, n))));
    out
}
