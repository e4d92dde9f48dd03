//! JSON encodings for polynomials, systems, ciphers, keys, trails and
//! factory parameters.
//!
//! Field elements are written as integers (the packed value, or a residue
//! mod `p` when negative) or as coordinate arrays low-to-high.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analysis::LinearTrail;
use crate::cipher::{AffineLayer, CipherSpec, RoundKeys, RoundSpec, Stage};
use crate::error::{Error, Result};
use crate::field::{Fe, FieldCtx, FieldDesc};
use crate::gtds::{Branch, Coupling, Gtds, Layout};
use crate::instantiations::{
    make_arion_gtds, make_bricks, make_feistel_unbalanced, make_generalized_lai_massey, make_horst,
    make_lai_massey_2, make_partial_spn, make_spn, ArionParams, LaiMasseyParams,
};
use crate::poly::{MultiPoly, UniPoly};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ElemJson {
    Int(i64),
    Coords(Vec<u64>),
}

impl ElemJson {
    pub fn to_fe(&self, ctx: &FieldCtx) -> Result<Fe> {
        match self {
            ElemJson::Int(v) if *v < 0 => Ok(ctx.from_int(*v)),
            ElemJson::Int(v) => ctx.element(*v as u64),
            ElemJson::Coords(c) => ctx.from_coeffs(c),
        }
    }

    pub fn from_fe(x: Fe) -> Self {
        ElemJson::Int(x.value() as i64)
    }
}

pub fn vec_to_fe(ctx: &FieldCtx, v: &[ElemJson]) -> Result<Vec<Fe>> {
    v.iter().map(|e| e.to_fe(ctx)).collect()
}

fn vec_from_fe(v: &[Fe]) -> Vec<ElemJson> {
    v.iter().map(|&x| ElemJson::from_fe(x)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub exps: Vec<u64>,
    pub coeff: ElemJson,
}

/// `{"uni": {"3": 2}}`, `{"multi": [{"exps": [0, 2], "coeff": 1}]}`, or
/// `{"sigma": {...}}` for a univariate polynomial in the feed-forward sum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum PolyJson {
    Uni(BTreeMap<String, ElemJson>),
    Multi(Vec<TermJson>),
    Sigma(BTreeMap<String, ElemJson>),
}

fn uni_terms(ctx: &FieldCtx, map: &BTreeMap<String, ElemJson>) -> Result<UniPoly> {
    let terms = map
        .iter()
        .map(|(e, c)| {
            let e: u64 = e
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("invalid exponent {e:?}")))?;
            Ok((e, c.to_fe(ctx)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UniPoly::from_terms(ctx, terms))
}

fn uni_map(p: &UniPoly) -> BTreeMap<String, ElemJson> {
    p.terms().map(|(e, c)| (e.to_string(), ElemJson::from_fe(c))).collect()
}

impl PolyJson {
    pub fn to_uni(&self, ctx: &FieldCtx) -> Result<UniPoly> {
        match self {
            PolyJson::Uni(m) => uni_terms(ctx, m),
            _ => Err(Error::Parse("expected a univariate polynomial".into())),
        }
    }

    /// A polynomial in `nvars` variables. A univariate polynomial is only
    /// accepted when `nvars == 1` or it is constant.
    pub fn to_multi(&self, ctx: &FieldCtx, nvars: usize) -> Result<MultiPoly> {
        match self {
            PolyJson::Multi(terms) => MultiPoly::from_terms(
                ctx,
                nvars,
                terms
                    .iter()
                    .map(|t| Ok((t.exps.clone(), t.coeff.to_fe(ctx)?)))
                    .collect::<Result<Vec<_>>>()?,
            ),
            PolyJson::Uni(m) => {
                let u = uni_terms(ctx, m)?;
                if nvars == 1 {
                    Ok(u.lift(1, 0))
                } else if u.degree() <= 0 {
                    Ok(MultiPoly::constant(nvars, u.coeff(0)))
                } else {
                    Err(Error::Parse(format!(
                        "a univariate polynomial cannot stand for one in {nvars} variables"
                    )))
                }
            }
            PolyJson::Sigma(_) => Err(Error::Parse("feed-forward polynomial not allowed here".into())),
        }
    }

    fn to_coupling(&self, ctx: &FieldCtx, n: usize) -> Result<Coupling> {
        match self {
            PolyJson::Sigma(m) => Ok(Coupling::FeedForward(uni_terms(ctx, m)?)),
            other => Ok(Coupling::Poly(other.to_multi(ctx, n)?)),
        }
    }

    pub fn from_uni(p: &UniPoly) -> Self {
        PolyJson::Uni(uni_map(p))
    }

    pub fn from_multi(p: &MultiPoly) -> Self {
        PolyJson::Multi(
            p.terms()
                .map(|(e, c)| TermJson {
                    exps: e.to_vec(),
                    coeff: ElemJson::from_fe(c),
                })
                .collect(),
        )
    }

    fn from_coupling(c: &Coupling) -> Self {
        match c {
            Coupling::Poly(p) => PolyJson::from_multi(p),
            Coupling::FeedForward(u) => PolyJson::Sigma(uni_map(u)),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutJson {
    #[default]
    Natural,
    Reversed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchJson {
    pub p: PolyJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<PolyJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<PolyJson>,
}

/// `{"field": .., "n": .., "branches": [{"p", "g", "h"}], "p_last": ..}`.
///
/// Inside a cipher stage `field` and `n` may be omitted and are inherited.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtdsJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub branches: Vec<BranchJson>,
    pub p_last: PolyJson,
    #[serde(default, skip_serializing_if = "is_natural")]
    pub layout: LayoutJson,
}

fn is_natural(l: &LayoutJson) -> bool {
    *l == LayoutJson::Natural
}

impl GtdsJson {
    pub fn field(&self) -> Result<FieldCtx> {
        let desc = self
            .field
            .as_ref()
            .ok_or_else(|| Error::Parse("missing \"field\"".into()))?;
        FieldCtx::from_desc(desc)
    }

    /// Builds and validates the system.
    pub fn build(&self, ctx: &FieldCtx) -> Result<Gtds> {
        let n = self.branches.len() + 1;
        if let Some(declared) = self.n {
            if declared != n {
                return Err(Error::ArityMismatch {
                    expected: declared,
                    found: n,
                });
            }
        }
        let branches = self
            .branches
            .iter()
            .map(|b| {
                let g = match &b.g {
                    Some(g) => g.to_coupling(ctx, n)?,
                    None => Coupling::one(n),
                };
                let h = match &b.h {
                    Some(h) => h.to_coupling(ctx, n)?,
                    None => Coupling::zero(n),
                };
                Ok(Branch::new(b.p.to_uni(ctx)?, g, h))
            })
            .collect::<Result<Vec<_>>>()?;
        let layout = match self.layout {
            LayoutJson::Natural => Layout::Natural,
            LayoutJson::Reversed => Layout::Reversed,
        };
        Ok(Gtds::new(ctx, branches, self.p_last.to_uni(ctx)?)?.with_layout(layout))
    }

    pub fn from_gtds(f: &Gtds, with_field: bool) -> Self {
        GtdsJson {
            field: with_field.then(|| f.ctx().desc()),
            n: with_field.then(|| f.n()),
            branches: f
                .branches()
                .iter()
                .map(|b| BranchJson {
                    p: PolyJson::from_uni(&b.p),
                    g: Some(PolyJson::from_coupling(&b.g)),
                    h: Some(PolyJson::from_coupling(&b.h)),
                })
                .collect(),
            p_last: PolyJson::from_uni(f.last()),
            layout: match f.layout() {
                Layout::Natural => LayoutJson::Natural,
                Layout::Reversed => LayoutJson::Reversed,
            },
        }
    }
}

/// `{"A": [[..]], "b": [..]}`; `b` defaults to zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineJson {
    #[serde(rename = "A")]
    pub a: Vec<Vec<ElemJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<ElemJson>>,
}

impl AffineJson {
    pub fn build(&self, ctx: &FieldCtx) -> Result<AffineLayer> {
        let a = self
            .a
            .iter()
            .map(|row| vec_to_fe(ctx, row))
            .collect::<Result<Vec<_>>>()?;
        let b = match &self.b {
            Some(b) => vec_to_fe(ctx, b)?,
            None => vec![Fe::ZERO; a.len()],
        };
        AffineLayer::new(ctx, a, b)
    }

    pub fn from_layer(l: &AffineLayer) -> Self {
        AffineJson {
            a: l.matrix().iter().map(|r| vec_from_fe(r)).collect(),
            b: Some(vec_from_fe(l.offset())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum StageJson {
    Gtds(GtdsJson),
    Affine(AffineJson),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundJson {
    pub core: Vec<StageJson>,
    pub mix: AffineJson,
}

/// `{"field": .., "n": .., "rounds": [{"core": [..], "mix": {..}}]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CipherJson {
    pub field: FieldDesc,
    pub n: usize,
    pub rounds: Vec<RoundJson>,
}

impl CipherJson {
    pub fn build(&self) -> Result<CipherSpec> {
        let ctx = FieldCtx::from_desc(&self.field)?;
        let rounds = self
            .rounds
            .iter()
            .map(|r| {
                let core = r
                    .core
                    .iter()
                    .map(|s| match s {
                        StageJson::Gtds(g) => {
                            let stage_ctx = match &g.field {
                                Some(d) => FieldCtx::from_desc(d)?,
                                None => ctx.clone(),
                            };
                            Ok(Stage::Gtds(g.build(&stage_ctx)?))
                        }
                        StageJson::Affine(a) => Ok(Stage::Affine(a.build(&ctx)?)),
                    })
                    .collect::<Result<Vec<_>>>()?;
                RoundSpec::new(core, r.mix.build(&ctx)?)
            })
            .collect::<Result<Vec<_>>>()?;
        CipherSpec::new(&ctx, self.n, rounds)
    }

    pub fn from_cipher(c: &CipherSpec) -> Self {
        CipherJson {
            field: c.ctx().desc(),
            n: c.n(),
            rounds: c
                .rounds()
                .iter()
                .map(|r| RoundJson {
                    core: r
                        .core()
                        .iter()
                        .map(|s| match s {
                            Stage::Gtds(g) => StageJson::Gtds(GtdsJson::from_gtds(g, false)),
                            Stage::Affine(a) => StageJson::Affine(AffineJson::from_layer(a)),
                        })
                        .collect(),
                    mix: AffineJson::from_layer(r.mix()),
                })
                .collect(),
        }
    }
}

/// Either kind of specification file.
#[derive(Clone, Debug)]
pub enum SpecFile {
    Gtds(Gtds),
    Cipher(CipherSpec),
}

impl SpecFile {
    pub fn ctx(&self) -> &FieldCtx {
        match self {
            SpecFile::Gtds(g) => g.ctx(),
            SpecFile::Cipher(c) => c.ctx(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            SpecFile::Gtds(g) => g.n(),
            SpecFile::Cipher(c) => c.n(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            SpecFile::Gtds(g) => serde_json::to_value(GtdsJson::from_gtds(g, true)),
            SpecFile::Cipher(c) => serde_json::to_value(CipherJson::from_cipher(c)),
        }
        .expect("specs serialize")
    }
}

fn from_value<T: for<'de> Deserialize<'de>>(v: serde_json::Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()))
}

pub fn parse_json(text: &str) -> Result<serde_json::Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Parses and validates a system or cipher specification. Objects with a
/// `rounds` key are ciphers.
pub fn parse_spec(text: &str) -> Result<SpecFile> {
    let value = parse_json(text)?;
    if value.get("rounds").is_some() {
        let c: CipherJson = from_value(value)?;
        Ok(SpecFile::Cipher(c.build()?))
    } else {
        let g: GtdsJson = from_value(value)?;
        let ctx = g.field()?;
        Ok(SpecFile::Gtds(g.build(&ctx)?))
    }
}

/// `{"K": [[col0], [col1], ..]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeysJson {
    #[serde(rename = "K")]
    pub k: Vec<Vec<ElemJson>>,
}

pub fn parse_keys(ctx: &FieldCtx, text: &str) -> Result<RoundKeys> {
    let k: KeysJson = from_value(parse_json(text)?)?;
    Ok(RoundKeys::from_columns(
        k.k.iter().map(|c| vec_to_fe(ctx, c)).collect::<Result<_>>()?,
    ))
}

pub fn keys_to_json(keys: &RoundKeys) -> serde_json::Value {
    serde_json::to_value(KeysJson {
        k: keys.columns().iter().map(|c| vec_from_fe(c)).collect(),
    })
    .expect("keys serialize")
}

/// `{"masks": [[..], ..]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrailJson {
    pub masks: Vec<Vec<ElemJson>>,
}

pub fn parse_trail(ctx: &FieldCtx, text: &str) -> Result<LinearTrail> {
    let t: TrailJson = from_value(parse_json(text)?)?;
    Ok(LinearTrail {
        masks: t.masks.iter().map(|m| vec_to_fe(ctx, m)).collect::<Result<_>>()?,
    })
}

/// A univariate polynomial file: `{"field": .., "f": {"uni": ..}}`, or a
/// bare polynomial when the field comes from elsewhere.
pub fn parse_uni_file(text: &str, field: Option<&FieldCtx>) -> Result<(FieldCtx, UniPoly)> {
    let value = parse_json(text)?;
    if let Some(f) = value.get("f") {
        let ctx = match (field, value.get("field")) {
            (Some(ctx), _) => ctx.clone(),
            (None, Some(d)) => FieldCtx::from_desc(&from_value(d.clone())?)?,
            (None, None) => return Err(Error::Parse("missing \"field\"".into())),
        };
        let poly: PolyJson = from_value(f.clone())?;
        let u = poly.to_uni(&ctx)?;
        return Ok((ctx, u));
    }
    let ctx = field
        .cloned()
        .ok_or_else(|| Error::Parse("missing field: pass --field or use {\"field\", \"f\"}".into()))?;
    let poly: PolyJson = from_value(value)?;
    let u = poly.to_uni(&ctx)?;
    Ok((ctx, u))
}

/// Design families understood by [`instantiate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Feistel,
    Spn,
    PartialSpn,
    LaiMassey,
    GeneralizedLaiMassey,
    Horst,
    Bricks,
    Arion,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "feistel" => Family::Feistel,
            "spn" => Family::Spn,
            "pspn" => Family::PartialSpn,
            "laimassey" => Family::LaiMassey,
            "glm" => Family::GeneralizedLaiMassey,
            "horst" => Family::Horst,
            "bricks" => Family::Bricks,
            "arion" => Family::Arion,
            other => return Err(Error::Parse(format!("unknown family {other:?}"))),
        })
    }
}

/// Parameter file shared by all families; each family reads the keys it
/// needs.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyParams {
    pub field: Option<FieldDesc>,
    pub n: Option<usize>,
    /// Round count; single-system families emit a system spec when absent.
    pub rounds: Option<usize>,
    /// Feistel round function.
    pub f: Option<PolyJson>,
    pub sbox: Option<PolyJson>,
    pub mix: Option<AffineJson>,
    /// 0-based branches carrying the S-box.
    pub active: Option<Vec<usize>>,
    /// Lai-Massey `g`, or per-branch Horst / Arion multipliers.
    pub g: Option<serde_json::Value>,
    pub h: Option<Vec<PolyJson>>,
    pub weights: Option<Vec<ElemJson>>,
    pub perms: Option<Vec<PolyJson>>,
    pub d: Option<u64>,
    pub alphas: Option<Vec<ElemJson>>,
    pub betas: Option<Vec<ElemJson>>,
    pub d1: Option<u64>,
    pub d2: Option<u64>,
    pub e: Option<u64>,
}

fn need<T: Clone>(v: &Option<T>, key: &str) -> Result<T> {
    v.clone().ok_or_else(|| Error::Parse(format!("missing parameter {key:?}")))
}

fn pair(ctx: &FieldCtx, v: &Option<Vec<ElemJson>>, key: &str) -> Result<[Fe; 2]> {
    let v = vec_to_fe(ctx, &need(v, key)?)?;
    <[Fe; 2]>::try_from(v).map_err(|_| Error::Parse(format!("{key:?} needs exactly two entries")))
}

/// Builds a family instance from its parameter file.
pub fn instantiate(family: Family, params_text: &str) -> Result<SpecFile> {
    let params: FamilyParams = from_value(parse_json(params_text)?)?;
    let ctx = FieldCtx::from_desc(&need(&params.field, "field")?)?;
    let uni = |p: &Option<PolyJson>, key: &str| need(p, key)?.to_uni(&ctx);
    let g_list = |key: &str| -> Result<Vec<PolyJson>> { from_value(need(&params.g, key)?) };
    let repeat_round = |round: RoundSpec| {
        SpecFile::Cipher(CipherSpec::iterate(round, params.rounds.unwrap_or(1)))
    };
    let system = |g: Gtds| match params.rounds {
        Some(r) => SpecFile::Cipher(CipherSpec::iterate(RoundSpec::from_gtds(g), r)),
        None => SpecFile::Gtds(g),
    };
    Ok(match family {
        Family::Feistel => {
            let n = need(&params.n, "n")?;
            repeat_round(make_feistel_unbalanced(&ctx, &uni(&params.f, "f")?, n)?)
        }
        Family::Spn | Family::PartialSpn => {
            let n = need(&params.n, "n")?;
            let mix = match &params.mix {
                Some(m) => m.build(&ctx)?,
                None => AffineLayer::identity(&ctx, n),
            };
            let s = uni(&params.sbox, "sbox")?;
            let round = if family == Family::Spn {
                make_spn(&ctx, &s, n, mix)?
            } else {
                make_partial_spn(&ctx, &s, n, &need(&params.active, "active")?, mix)?
            };
            repeat_round(round)
        }
        Family::LaiMassey => {
            let g: PolyJson = from_value(need(&params.g, "g")?)?;
            let stages = make_lai_massey_2(&ctx, &g.to_uni(&ctx)?)?;
            repeat_round(RoundSpec::new(stages, AffineLayer::identity(&ctx, 2))?)
        }
        Family::GeneralizedLaiMassey => {
            let weights = vec_to_fe(&ctx, &need(&params.weights, "weights")?)?;
            let perms = need(&params.perms, "perms")?
                .iter()
                .map(|p| p.to_uni(&ctx))
                .collect::<Result<Vec<_>>>()?;
            let n = weights.len();
            let m = weights.iter().rposition(|w| !w.is_zero()).map_or(0, |i| i + 1);
            let g: PolyJson = from_value(need(&params.g, "g")?)?;
            let g = g.to_multi(&ctx, 1 + n - m.min(n))?;
            let glm = make_generalized_lai_massey(&ctx, LaiMasseyParams { weights, perms, g })?;
            repeat_round(RoundSpec::new(glm.stages().to_vec(), AffineLayer::identity(&ctx, n))?)
        }
        Family::Horst => {
            let g = g_list("g")?;
            let n = g.len() + 1;
            let h = need(&params.h, "h")?;
            let to_multi = |ps: &[PolyJson]| {
                ps.iter().map(|p| p.to_multi(&ctx, n)).collect::<Result<Vec<_>>>()
            };
            system(make_horst(&ctx, to_multi(&g)?, to_multi(&h)?)?)
        }
        Family::Bricks => {
            let d = need(&params.d, "d")?;
            let sys = make_bricks(
                &ctx,
                d,
                pair(&ctx, &params.alphas, "alphas")?,
                pair(&ctx, &params.betas, "betas")?,
            )?;
            system(sys)
        }
        Family::Arion => {
            let g = g_list("g")?
                .iter()
                .map(|p| p.to_uni(&ctx))
                .collect::<Result<Vec<_>>>()?;
            let h = need(&params.h, "h")?
                .iter()
                .map(|p| p.to_uni(&ctx))
                .collect::<Result<Vec<_>>>()?;
            let n = params.n.unwrap_or(g.len() + 1);
            let d2 = need(&params.d2, "d2")?;
            let mut arion = ArionParams::for_prime(ctx.characteristic(), d2, g, h)?;
            if let Some(d1) = params.d1 {
                arion.d1 = d1;
            }
            if let Some(e) = params.e {
                arion.e = e;
            }
            system(make_arion_gtds(&ctx, &arion, n)?)
        }
    })
}
