//! Round functions `R_k = K_k . L . F` and the iterated keyed permutation
//! `C_r(x, K) = R_{k_r} . ... . R_{k_1}(x + k_0)`.
//!
//! Round keys are supplied explicitly as the columns of an `n x (r + 1)`
//! matrix; there is no key schedule.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{check_domain, Error, Result};
use crate::field::{Fe, FieldCtx};
use crate::gtds::Gtds;
use crate::space::{add_vec, check_arity, domain_size, sub_vec, table_is_bijective, tabulate, Space};

/// Exhaustive keyed-permutation checks stay within `q^n <= 2^16`.
pub const KEYED_CHECK_LIMIT: u64 = 1 << 16;

/// Square matrix inverse by Gauss-Jordan elimination; `None` if singular.
pub fn invert_matrix(ctx: &FieldCtx, a: &[Vec<Fe>]) -> Option<Vec<Vec<Fe>>> {
    let n = a.len();
    let mut m: Vec<Vec<Fe>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Fe::ONE } else { Fe::ZERO }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let inv = ctx.inv(m[col][col]).ok()?;
        for v in m[col].iter_mut() {
            *v = ctx.mul(*v, inv);
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col];
            for c in 0..2 * n {
                let t = ctx.mul(factor, m[col][c]);
                m[r][c] = ctx.sub(m[r][c], t);
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn mat_vec(ctx: &FieldCtx, a: &[Vec<Fe>], x: &[Fe]) -> Vec<Fe> {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(x)
                .fold(Fe::ZERO, |acc, (&m, &v)| ctx.add(acc, ctx.mul(m, v)))
        })
        .collect()
}

/// The affine permutation `x -> A x + b` with invertible `A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineLayer {
    ctx: FieldCtx,
    a: Vec<Vec<Fe>>,
    b: Vec<Fe>,
    a_inv: Vec<Vec<Fe>>,
}

impl AffineLayer {
    pub fn new(ctx: &FieldCtx, a: Vec<Vec<Fe>>, b: Vec<Fe>) -> Result<Self> {
        let n = a.len();
        for row in &a {
            check_arity(n, row.len())?;
        }
        check_arity(n, b.len())?;
        let a_inv = invert_matrix(ctx, &a).ok_or(Error::SingularMatrix)?;
        Ok(AffineLayer {
            ctx: ctx.clone(),
            a,
            b,
            a_inv,
        })
    }

    pub fn linear(ctx: &FieldCtx, a: Vec<Vec<Fe>>) -> Result<Self> {
        let n = a.len();
        AffineLayer::new(ctx, a, vec![Fe::ZERO; n])
    }

    pub fn identity(ctx: &FieldCtx, n: usize) -> Self {
        AffineLayer::permutation(ctx, &(0..n).collect::<Vec<_>>())
    }

    /// Coordinate shuffle `y_i = x_{perm[i]}`.
    pub fn permutation(ctx: &FieldCtx, perm: &[usize]) -> Self {
        let n = perm.len();
        let a = perm
            .iter()
            .map(|&src| (0..n).map(|j| if j == src { Fe::ONE } else { Fe::ZERO }).collect())
            .collect();
        AffineLayer::linear(ctx, a).expect("permutation matrices are invertible")
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    pub fn matrix(&self) -> &[Vec<Fe>] {
        &self.a
    }

    pub fn offset(&self) -> &[Fe] {
        &self.b
    }

    pub fn apply(&self, x: &[Fe]) -> Result<Vec<Fe>> {
        check_arity(self.n(), x.len())?;
        Ok(add_vec(&self.ctx, &mat_vec(&self.ctx, &self.a, x), &self.b))
    }

    /// Solves `A x = y - b`.
    pub fn invert(&self, y: &[Fe]) -> Result<Vec<Fe>> {
        check_arity(self.n(), y.len())?;
        Ok(mat_vec(&self.ctx, &self.a_inv, &sub_vec(&self.ctx, y, &self.b)))
    }

    /// `A^T a`: moves an output mask of `A F + b` onto the output of `F`.
    pub fn transpose_apply(&self, mask: &[Fe]) -> Result<Vec<Fe>> {
        let n = self.n();
        check_arity(n, mask.len())?;
        Ok((0..n)
            .map(|j| {
                (0..n).fold(Fe::ZERO, |acc, i| {
                    self.ctx.add(acc, self.ctx.mul(self.a[i][j], mask[i]))
                })
            })
            .collect())
    }
}

/// `x + k`, componentwise.
pub fn key_add(ctx: &FieldCtx, x: &[Fe], k: &[Fe]) -> Result<Vec<Fe>> {
    check_arity(x.len(), k.len())?;
    Ok(add_vec(ctx, x, k))
}

/// One stage of a round's nonlinear core.
#[derive(Clone, Debug)]
pub enum Stage {
    Gtds(Gtds),
    Affine(AffineLayer),
}

impl Stage {
    pub fn ctx(&self) -> &FieldCtx {
        match self {
            Stage::Gtds(g) => g.ctx(),
            Stage::Affine(a) => a.ctx(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Stage::Gtds(g) => g.n(),
            Stage::Affine(a) => a.n(),
        }
    }

    pub fn apply(&self, x: &[Fe]) -> Result<Vec<Fe>> {
        match self {
            Stage::Gtds(g) => g.eval(x),
            Stage::Affine(a) => a.apply(x),
        }
    }

    pub fn invert(&self, y: &[Fe]) -> Result<Vec<Fe>> {
        match self {
            Stage::Gtds(g) => g.invert(y),
            Stage::Affine(a) => a.invert(y),
        }
    }
}

impl From<Gtds> for Stage {
    fn from(g: Gtds) -> Self {
        Stage::Gtds(g)
    }
}

impl From<AffineLayer> for Stage {
    fn from(a: AffineLayer) -> Self {
        Stage::Affine(a)
    }
}

fn check_stages<'a>(
    ctx: &FieldCtx,
    n: usize,
    stages: impl IntoIterator<Item = (&'a FieldCtx, usize)>,
) -> Result<()> {
    for (c, width) in stages {
        if c != ctx {
            return Err(Error::MixedFields);
        }
        check_arity(n, width)?;
    }
    Ok(())
}

/// Applies stages left to right.
pub fn pipeline_apply(stages: &[Stage], x: &[Fe]) -> Result<Vec<Fe>> {
    stages.iter().try_fold(x.to_vec(), |v, s| s.apply(&v))
}

pub fn pipeline_invert(stages: &[Stage], y: &[Fe]) -> Result<Vec<Fe>> {
    stages.iter().rev().try_fold(y.to_vec(), |v, s| s.invert(&v))
}

/// Round structure: a nonempty core pipeline followed by the mixing layer.
#[derive(Clone, Debug)]
pub struct RoundSpec {
    core: Vec<Stage>,
    mix: AffineLayer,
}

impl RoundSpec {
    pub fn new(core: Vec<Stage>, mix: AffineLayer) -> Result<Self> {
        if core.is_empty() {
            return Err(Error::EmptyPipeline);
        }
        check_stages(mix.ctx(), mix.n(), core.iter().map(|s| (s.ctx(), s.n())))?;
        Ok(RoundSpec { core, mix })
    }

    /// A single system followed by the identity mixing layer.
    pub fn from_gtds(gtds: Gtds) -> Self {
        let mix = AffineLayer::identity(gtds.ctx(), gtds.n());
        RoundSpec {
            core: vec![Stage::Gtds(gtds)],
            mix,
        }
    }

    pub fn core(&self) -> &[Stage] {
        &self.core
    }

    pub fn mix(&self) -> &AffineLayer {
        &self.mix
    }

    pub fn ctx(&self) -> &FieldCtx {
        self.mix.ctx()
    }

    pub fn n(&self) -> usize {
        self.mix.n()
    }

    /// `L(F(x))` without key addition.
    pub fn apply_unkeyed(&self, x: &[Fe]) -> Result<Vec<Fe>> {
        self.mix.apply(&pipeline_apply(&self.core, x)?)
    }

    /// `K_k(L(F(x)))`.
    pub fn apply(&self, k: &[Fe], x: &[Fe]) -> Result<Vec<Fe>> {
        key_add(self.ctx(), &self.apply_unkeyed(x)?, k)
    }

    pub fn invert(&self, k: &[Fe], y: &[Fe]) -> Result<Vec<Fe>> {
        check_arity(self.n(), k.len())?;
        let unkeyed = sub_vec(self.ctx(), y, k);
        pipeline_invert(&self.core, &self.mix.invert(&unkeyed)?)
    }
}

/// The round-key matrix `K`, stored by columns `k_0, ..., k_r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundKeys {
    columns: Vec<Vec<Fe>>,
}

impl RoundKeys {
    pub fn from_columns(columns: Vec<Vec<Fe>>) -> Self {
        RoundKeys { columns }
    }

    pub fn zero(n: usize, rounds: usize) -> Self {
        RoundKeys {
            columns: vec![vec![Fe::ZERO; n]; rounds + 1],
        }
    }

    pub fn random<R: Rng>(ctx: &FieldCtx, n: usize, rounds: usize, rng: &mut R) -> Self {
        let q = ctx.order();
        RoundKeys {
            columns: (0..=rounds)
                .map(|_| (0..n).map(|_| Fe::from_raw(rng.gen_range(0..q))).collect())
                .collect(),
        }
    }

    pub fn columns(&self) -> &[Vec<Fe>] {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &[Fe] {
        &self.columns[i]
    }

    pub(crate) fn check_shape(&self, n: usize, rounds: usize) -> Result<()> {
        let found_rows = self.columns.first().map_or(0, Vec::len);
        let ragged = self.columns.iter().any(|c| c.len() != found_rows);
        if self.columns.len() != rounds + 1 || found_rows != n || ragged {
            return Err(Error::KeyShapeMismatch {
                rows: n,
                cols: rounds + 1,
                found_rows,
                found_cols: self.columns.len(),
            });
        }
        Ok(())
    }
}

/// An `r`-round keyed permutation of `F_q^n`.
#[derive(Clone, Debug)]
pub struct CipherSpec {
    ctx: FieldCtx,
    n: usize,
    rounds: Vec<RoundSpec>,
}

impl CipherSpec {
    pub fn new(ctx: &FieldCtx, n: usize, rounds: Vec<RoundSpec>) -> Result<Self> {
        check_stages(ctx, n, rounds.iter().map(|r| (r.ctx(), r.n())))?;
        Ok(CipherSpec {
            ctx: ctx.clone(),
            n,
            rounds,
        })
    }

    /// `rounds` copies of the same round.
    pub fn iterate(round: RoundSpec, rounds: usize) -> Self {
        CipherSpec {
            ctx: round.ctx().clone(),
            n: round.n(),
            rounds: vec![round; rounds],
        }
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rounds(&self) -> &[RoundSpec] {
        &self.rounds
    }

    pub fn num_rounds(&self) -> usize {
        self.rounds.len()
    }

    /// Whitening with `k_0`, then rounds `1..r` keyed by `k_1..k_r`.
    pub fn encrypt(&self, keys: &RoundKeys, x: &[Fe]) -> Result<Vec<Fe>> {
        keys.check_shape(self.n, self.rounds.len())?;
        check_arity(self.n, x.len())?;
        let mut state = add_vec(&self.ctx, x, keys.column(0));
        for (i, round) in self.rounds.iter().enumerate() {
            state = round.apply(keys.column(i + 1), &state)?;
        }
        Ok(state)
    }

    pub fn decrypt(&self, keys: &RoundKeys, y: &[Fe]) -> Result<Vec<Fe>> {
        keys.check_shape(self.n, self.rounds.len())?;
        check_arity(self.n, y.len())?;
        let mut state = y.to_vec();
        for (i, round) in self.rounds.iter().enumerate().rev() {
            state = round.invert(keys.column(i + 1), &state)?;
        }
        Ok(sub_vec(&self.ctx, &state, keys.column(0)))
    }

    /// Encryption under `keys` tabulated over `F_q^n`.
    pub fn table(&self, keys: &RoundKeys, limit: u64) -> Result<Vec<u32>> {
        keys.check_shape(self.n, self.rounds.len())?;
        let space = Space::new(&self.ctx, self.n, limit)?;
        Ok(tabulate(&space, |x, y| {
            let out = self.encrypt(keys, x).expect("shapes checked");
            y.copy_from_slice(&out);
        }))
    }
}

/// Outcome of [`keyed_orthogonality_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyedOrthogonalityReport {
    pub keys_tested: usize,
    /// Indices of sampled key matrices for which encryption was not a
    /// bijection.
    pub failures: Vec<usize>,
}

impl KeyedOrthogonalityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Samples `sample_keys` random key matrices (ChaCha20 seeded with `seed`)
/// and checks that encryption under each is a bijection of `F_q^n`.
pub fn keyed_orthogonality_check(
    cipher: &CipherSpec,
    sample_keys: usize,
    seed: u64,
) -> Result<KeyedOrthogonalityReport> {
    check_domain(domain_size(cipher.ctx(), cipher.n()), KEYED_CHECK_LIMIT)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for i in 0..sample_keys {
        let keys = RoundKeys::random(cipher.ctx(), cipher.n(), cipher.num_rounds(), &mut rng);
        if !table_is_bijective(&cipher.table(&keys, KEYED_CHECK_LIMIT)?) {
            failures.push(i);
        }
    }
    Ok(KeyedOrthogonalityReport {
        keys_tested: sample_keys,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gtds::Branch;
    use crate::poly::{MultiPoly, UniPoly};

    fn fe(v: u64) -> Fe {
        Fe::from_raw(v)
    }

    fn mat(rows: &[&[u64]]) -> Vec<Vec<Fe>> {
        rows.iter().map(|r| r.iter().map(|&v| fe(v)).collect()).collect()
    }

    fn k5() -> FieldCtx {
        FieldCtx::prime(5).unwrap()
    }

    #[test]
    fn affine_examples() {
        let k = k5();
        let id = AffineLayer::identity(&k, 2);
        assert_eq!(id.apply(&[fe(3), fe(1)]).unwrap(), vec![fe(3), fe(1)]);
        let l = AffineLayer::new(&k, mat(&[&[2, 0], &[0, 3]]), vec![fe(1), fe(1)]).unwrap();
        assert_eq!(l.apply(&[fe(1), fe(1)]).unwrap(), vec![fe(3), fe(4)]);
        assert_eq!(l.invert(&[fe(3), fe(4)]).unwrap(), vec![fe(1), fe(1)]);
    }

    #[test]
    fn affine_rejects_singular() {
        let k = k5();
        assert_eq!(
            AffineLayer::linear(&k, mat(&[&[1, 2], &[2, 4]])),
            Err(Error::SingularMatrix)
        );
        assert!(matches!(
            AffineLayer::new(&k, mat(&[&[1, 0], &[0, 1]]), vec![fe(0)]),
            Err(Error::ArityMismatch { .. })
        ));
    }

    #[test]
    fn matrix_inverse_oracle() {
        let k = FieldCtx::prime(7).unwrap();
        let a = mat(&[&[1, 2, 3], &[0, 1, 4], &[5, 6, 0]]);
        let inv = invert_matrix(&k, &a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v = (0..3).fold(Fe::ZERO, |acc, t| k.add(acc, k.mul(a[i][t], inv[t][j])));
                assert_eq!(v, if i == j { Fe::ONE } else { Fe::ZERO });
            }
        }
    }

    #[test]
    fn transpose_mask() {
        let k = k5();
        let l = AffineLayer::linear(&k, mat(&[&[1, 1], &[0, 1]])).unwrap();
        assert_eq!(l.transpose_apply(&[fe(1), fe(0)]).unwrap(), vec![fe(1), fe(1)]);
        let id = AffineLayer::identity(&k, 2);
        assert_eq!(id.transpose_apply(&[fe(2), fe(4)]).unwrap(), vec![fe(2), fe(4)]);
    }

    #[test]
    fn key_addition() {
        let k = k5();
        let x = [fe(1), fe(2)];
        assert_eq!(key_add(&k, &x, &[fe(0), fe(0)]).unwrap(), x.to_vec());
        assert_eq!(key_add(&k, &x, &[fe(4), fe(4)]).unwrap(), vec![fe(0), fe(1)]);
        let kk = [fe(3), fe(2)];
        let neg: Vec<Fe> = kk.iter().map(|&v| k.neg(v)).collect();
        assert_eq!(key_add(&k, &key_add(&k, &x, &kk).unwrap(), &neg).unwrap(), x.to_vec());
        assert!(key_add(&k, &x, &[fe(1)]).is_err());
    }

    #[test]
    fn identity_cipher_collapses_to_key_sum() {
        let k = FieldCtx::prime(7).unwrap();
        let cipher = CipherSpec::iterate(RoundSpec::from_gtds(Gtds::identity(&k, 2)), 4);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let keys = RoundKeys::random(&k, 2, 4, &mut rng);
        let x = vec![fe(5), fe(1)];
        let expect = keys.columns().iter().fold(x.clone(), |acc, c| add_vec(&k, &acc, c));
        assert_eq!(cipher.encrypt(&keys, &x).unwrap(), expect);
        assert_eq!(cipher.decrypt(&keys, &expect).unwrap(), x);
    }

    #[test]
    fn key_shape_mismatch() {
        let k = k5();
        let cipher = CipherSpec::iterate(RoundSpec::from_gtds(Gtds::identity(&k, 2)), 2);
        let keys = RoundKeys::zero(2, 3);
        assert!(matches!(
            cipher.encrypt(&keys, &[fe(0), fe(0)]),
            Err(Error::KeyShapeMismatch { rows: 2, cols: 3, found_rows: 2, found_cols: 4 })
        ));
        let keys = RoundKeys::zero(3, 2);
        assert!(cipher.decrypt(&keys, &[fe(0), fe(0)]).is_err());
    }

    #[test]
    fn mixed_fields_rejected() {
        let k = k5();
        let k7 = FieldCtx::prime(7).unwrap();
        let core = vec![Stage::Gtds(Gtds::identity(&k7, 2))];
        assert_eq!(
            RoundSpec::new(core, AffineLayer::identity(&k, 2)).unwrap_err(),
            Error::MixedFields
        );
        let r7 = RoundSpec::from_gtds(Gtds::identity(&k7, 2));
        assert_eq!(CipherSpec::new(&k, 2, vec![r7]).unwrap_err(), Error::MixedFields);
    }

    fn sample_round(k: &FieldCtx) -> RoundSpec {
        let x3 = UniPoly::monomial(Fe::ONE, 3);
        let g = MultiPoly::from_terms(k, 2, [(vec![0, 2], fe(1)), (vec![0, 0], fe(3))]).unwrap();
        let sys = Gtds::new(k, vec![Branch::new(x3.clone(), g, MultiPoly::var(2, 1))], x3).unwrap();
        let mix = AffineLayer::new(k, mat(&[&[1, 1], &[0, 1]]), vec![fe(2), fe(0)]).unwrap();
        RoundSpec::new(vec![Stage::Gtds(sys)], mix).unwrap()
    }

    #[test]
    fn round_roundtrip_exhaustive() {
        let k = k5();
        let round = sample_round(&k);
        let key = [fe(4), fe(1)];
        let space = Space::new(&k, 2, 1 << 10).unwrap();
        for x in space.vectors() {
            let y = round.apply(&key, &x).unwrap();
            assert_eq!(round.invert(&key, &y).unwrap(), x);
        }
    }

    #[test]
    fn pipeline_composes_left_to_right() {
        let k = k5();
        let first = match &sample_round(&k).core()[0] {
            Stage::Gtds(g) => g.clone(),
            _ => unreachable!(),
        };
        let affine = AffineLayer::new(&k, mat(&[&[0, 1], &[1, 0]]), vec![fe(1), fe(2)]).unwrap();
        let second = Gtds::new(
            &k,
            vec![Branch::new(UniPoly::x(), MultiPoly::one(2), MultiPoly::var(2, 1))],
            UniPoly::monomial(Fe::ONE, 3),
        )
        .unwrap();
        let stages = vec![
            Stage::Gtds(first.clone()),
            Stage::Affine(affine.clone()),
            Stage::Gtds(second.clone()),
        ];
        let space = Space::new(&k, 2, 1 << 10).unwrap();
        for x in space.vectors() {
            let manual = second
                .eval(&affine.apply(&first.eval(&x).unwrap()).unwrap())
                .unwrap();
            assert_eq!(pipeline_apply(&stages, &x).unwrap(), manual);
            assert_eq!(pipeline_invert(&stages, &manual).unwrap(), x);
        }
    }

    #[test]
    fn encrypt_decrypt_exhaustive() {
        let k = k5();
        let cipher = CipherSpec::iterate(sample_round(&k), 3);
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let keys = RoundKeys::random(&k, 2, 3, &mut rng);
        let space = Space::new(&k, 2, 1 << 10).unwrap();
        for x in space.vectors() {
            let y = cipher.encrypt(&keys, &x).unwrap();
            assert_eq!(cipher.decrypt(&keys, &y).unwrap(), x);
        }
    }

    #[test]
    fn whitening_key_shift() {
        let k = k5();
        let cipher = CipherSpec::iterate(sample_round(&k), 2);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let keys = RoundKeys::random(&k, 2, 2, &mut rng);
        let mut alt = keys.columns().to_vec();
        alt[0] = vec![fe(2), fe(3)];
        let alt = RoundKeys::from_columns(alt);
        let shift = sub_vec(&k, keys.column(0), alt.column(0));
        let space = Space::new(&k, 2, 1 << 10).unwrap();
        for x in space.vectors() {
            assert_eq!(
                cipher.encrypt(&keys, &x).unwrap(),
                cipher.encrypt(&alt, &add_vec(&k, &x, &shift)).unwrap()
            );
        }
    }

    #[test]
    fn keyed_orthogonality() {
        let k = k5();
        let id = CipherSpec::iterate(RoundSpec::from_gtds(Gtds::identity(&k, 2)), 2);
        assert!(keyed_orthogonality_check(&id, 5, 0).unwrap().passed());
        let cipher = CipherSpec::iterate(sample_round(&k), 3);
        let report = keyed_orthogonality_check(&cipher, 10, 0).unwrap();
        assert_eq!(report.keys_tested, 10);
        assert!(report.passed());
        let big = CipherSpec::iterate(RoundSpec::from_gtds(Gtds::identity(&FieldCtx::prime(11).unwrap(), 5)), 1);
        assert!(matches!(
            keyed_orthogonality_check(&big, 1, 0),
            Err(Error::DomainTooLarge { .. })
        ));
    }
}
