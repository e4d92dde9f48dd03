use std::fmt::Write as _;
use std::io::{self, BufRead, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use gtds::analysis::{
    check_correlation_against_bounds, check_ddt_against_bounds, correlation_table, ddt, trail_lp,
    weil_sum_check, BoundKind, CorrReport, DdtReport, LookupTable, FULL_SWEEP_LIMIT,
};
use gtds::cipher::keyed_orthogonality_check;
use gtds::format::{instantiate, parse_keys, parse_spec, parse_trail, parse_uni_file, Family, SpecFile};
use gtds::poly::permutation_certificate;
use gtds::space::{domain_size, Space, MAX_DOMAIN};
use gtds::{CipherSpec, Error, Fe, FieldCtx, FieldDesc, RoundKeys, RoundSpec};

#[derive(Parser, Debug)]
#[command(name = "gtds", version, about = "Triangular-system permutations over finite fields: build, run and analyse")]
struct Cli {
    /// Field as inline JSON or a path to a JSON file, for inputs that lack one.
    #[arg(long, global = true)]
    field: Option<String>,
    /// Cap on q^n for exhaustive sweeps (at most 2^20).
    #[arg(long, global = true)]
    max_domain: Option<u64>,
    /// Slack for floating-point bound comparisons.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tolerance: f64,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the JSON summary here instead of stderr.
    #[arg(long, global = true)]
    summary: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build and validate a system or cipher specification.
    Validate {
        spec: PathBuf,
        /// Random key matrices checked for bijectivity (ciphers only).
        #[arg(long, default_value_t = 10)]
        samples: usize,
    },
    /// Generate a specification for a design family.
    Instantiate {
        #[arg(long, value_parser = parse_family)]
        family: Family,
        #[arg(long)]
        params: PathBuf,
    },
    /// Encrypt vectors, one decimal comma-separated vector per line.
    Encrypt {
        spec: PathBuf,
        #[arg(long)]
        keys: Option<PathBuf>,
        /// Input vectors (stdin when absent).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Decrypt vectors, one decimal comma-separated vector per line.
    Decrypt {
        spec: PathBuf,
        #[arg(long)]
        keys: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Full difference distribution table, with bounds for systems.
    Ddt {
        spec: PathBuf,
        #[arg(long)]
        keys: Option<PathBuf>,
    },
    /// Full correlation table, with bounds for systems.
    Corr {
        spec: PathBuf,
        #[arg(long)]
        keys: Option<PathBuf>,
    },
    /// Check a system against the differential and correlation bounds.
    Bounds { spec: PathBuf },
    /// Character-sum check for a permutation polynomial over all nonzero masks.
    Weil { poly: PathBuf },
    /// Linear probability of a trail through a cipher.
    TrailLp {
        spec: PathBuf,
        #[arg(long)]
        keys: Option<PathBuf>,
        #[arg(long)]
        trail: PathBuf,
    },
    /// Decide whether a univariate polynomial permutes the field.
    Permcheck { poly: PathBuf },
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Lib(Error),
    Usage(String),
    /// Analysis completed but found problems; already reported.
    Findings,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn io_err(path: &Path, e: io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

struct Ctx {
    cli: Cli,
}

impl Ctx {
    fn limit(&self, default: u64) -> u64 {
        self.cli.max_domain.unwrap_or(default)
    }

    fn field(&self) -> CliResult<Option<FieldCtx>> {
        let Some(f) = &self.cli.field else { return Ok(None) };
        let text = if f.trim_start().starts_with('{') {
            f.clone()
        } else {
            read(Path::new(f))?
        };
        let desc: FieldDesc =
            serde_json::from_str(&text).map_err(|e| Failure::Lib(Error::Parse(e.to_string())))?;
        Ok(Some(FieldCtx::from_desc(&desc)?))
    }

    fn emit(&self, text: &str) -> CliResult<()> {
        match &self.cli.out {
            Some(path) => std::fs::write(path, text).map_err(|e| io_err(path, e)),
            None => io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Usage(e.to_string())),
        }
    }

    fn emit_summary(&self, value: serde_json::Value) -> CliResult<()> {
        let text = format!("{}\n", serde_json::to_string(&value).expect("summary serializes"));
        match &self.cli.summary {
            Some(path) => std::fs::write(path, text).map_err(|e| io_err(path, e)),
            None => {
                eprint!("{text}");
                Ok(())
            }
        }
    }
}

fn fmt_vec(v: &[Fe], sep: &str) -> String {
    v.iter().map(|x| x.value().to_string()).collect::<Vec<_>>().join(sep)
}

fn fmt_f64(x: f64) -> String {
    let s = format!("{x:.12}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0.000000000000".to_string()
    } else {
        s
    }
}

fn parse_vector(ctx: &FieldCtx, line: &str) -> CliResult<Vec<Fe>> {
    line.split(',')
        .map(|t| {
            let v: i64 = t
                .trim()
                .parse()
                .map_err(|_| Failure::Lib(Error::Parse(format!("invalid element {t:?}"))))?;
            if v < 0 {
                Ok(ctx.from_int(v))
            } else {
                Ok(ctx.element(v as u64)?)
            }
        })
        .collect()
}

fn load_spec(path: &Path) -> CliResult<SpecFile> {
    Ok(parse_spec(&read(path)?)?)
}

/// Keys for `spec`: read from `path`, or all zero when absent.
fn load_keys(spec: &SpecFile, path: Option<&Path>) -> CliResult<(CipherSpec, RoundKeys)> {
    let cipher = match spec {
        SpecFile::Cipher(c) => c.clone(),
        SpecFile::Gtds(g) => CipherSpec::iterate(RoundSpec::from_gtds(g.clone()), 1),
    };
    let keys = match path {
        Some(p) => parse_keys(cipher.ctx(), &read(p)?)?,
        None => RoundKeys::zero(cipher.n(), cipher.num_rounds()),
    };
    Ok((cipher, keys))
}

fn cmd_validate(cx: &Ctx, spec: &Path, samples: usize) -> CliResult<()> {
    let spec = load_spec(spec)?;
    let mut out = String::new();
    match &spec {
        SpecFile::Gtds(g) => {
            writeln!(out, "valid: system with n = {} over {}", g.n(), g.ctx()).unwrap();
            if domain_size(g.ctx(), g.n()) <= cx.limit(MAX_DOMAIN) as u128 {
                if !g.is_orthogonal_exhaustive()? {
                    return Err(Error::NotAPermutation { branch: None }.into());
                }
                writeln!(out, "bijective: true").unwrap();
            }
        }
        SpecFile::Cipher(c) => {
            writeln!(
                out,
                "valid: cipher with {} rounds, n = {} over {}",
                c.num_rounds(),
                c.n(),
                c.ctx()
            )
            .unwrap();
            if domain_size(c.ctx(), c.n()) <= cx.limit(1 << 16).min(1 << 16) as u128 {
                let report = keyed_orthogonality_check(c, samples, cx.cli.seed)?;
                writeln!(out, "keyed bijective: {} of {} sampled keys", samples - report.failures.len(), samples)
                    .unwrap();
                if !report.passed() {
                    cx.emit(&out)?;
                    return Err(Failure::Findings);
                }
            }
        }
    }
    cx.emit(&out)
}

fn cmd_crypt(cx: &Ctx, spec: &Path, keys: Option<&Path>, input: Option<&Path>, decrypt: bool) -> CliResult<()> {
    let spec = load_spec(spec)?;
    if matches!(spec, SpecFile::Cipher(_)) && keys.is_none() {
        return Err(Failure::Usage("ciphers need --keys".into()));
    }
    let (cipher, keys) = load_keys(&spec, keys)?;
    let text = match input {
        Some(p) => read(p)?,
        None => {
            let mut s = String::new();
            io::stdin()
                .lock()
                .read_to_string(&mut s)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            s
        }
    };
    let mut out = String::new();
    for line in text.as_bytes().lines() {
        let line = line.map_err(|e| Failure::Usage(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let x = parse_vector(cipher.ctx(), &line)?;
        let y = if decrypt {
            cipher.decrypt(&keys, &x)?
        } else {
            cipher.encrypt(&keys, &x)?
        };
        writeln!(out, "{}", fmt_vec(&y, ",")).unwrap();
    }
    cx.emit(&out)
}

fn ddt_csv(report: &DdtReport, space: &Space<'_>) -> String {
    let size = report.size();
    let vectors: Vec<String> = (0..size).map(|i| fmt_vec(&space.decode(i), ";")).collect();
    let mut out = String::from("dx,dy,count,bound,ok\n");
    for dx in 0..size {
        for dy in 0..size {
            let count = report.entry(dx, dy);
            let (bound, ok) = match report.bound(dx, dy) {
                Some(b) if dx != 0 => (b.to_string(), count as u128 <= b),
                _ => (String::new(), true),
            };
            writeln!(out, "{},{},{},{},{}", vectors[dx], vectors[dy], count, bound, ok).unwrap();
        }
    }
    out
}

fn corr_csv(report: &CorrReport, space: &Space<'_>, tolerance: f64) -> String {
    let size = report.size();
    let vectors: Vec<String> = (0..size).map(|i| fmt_vec(&space.decode(i), ";")).collect();
    let mut out = String::from("a,b,re,im,lp,bound,ok\n");
    for a in 0..size {
        for b in 0..size {
            let i = a * size + b;
            let c = report.corr[i];
            let (bound, ok) = match &report.bound {
                Some(bs) => (fmt_f64(bs[i]), report.lp[i] <= bs[i] + tolerance),
                None => (String::new(), true),
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                vectors[a],
                vectors[b],
                fmt_f64(c.re),
                fmt_f64(c.im),
                fmt_f64(report.lp[i]),
                bound,
                ok
            )
            .unwrap();
        }
    }
    out
}

fn cmd_ddt(cx: &Ctx, spec: &Path, keys: Option<&Path>) -> CliResult<()> {
    let spec = load_spec(spec)?;
    let limit = cx.limit(FULL_SWEEP_LIMIT);
    let report = match &spec {
        SpecFile::Gtds(g) => match check_ddt_against_bounds(g, limit) {
            Err(Error::HypothesisUnverified(i)) => {
                eprintln!("note: bounds skipped, {}", Error::HypothesisUnverified(i));
                ddt(&LookupTable::from_gtds(g, limit)?, limit)?
            }
            other => other?,
        },
        SpecFile::Cipher(_) => {
            let (cipher, keys) = load_keys(&spec, keys)?;
            ddt(&LookupTable::from_cipher(&cipher, &keys, limit)?, limit)?
        }
    };
    let space = Space::new(spec.ctx(), spec.n(), MAX_DOMAIN)?;
    cx.emit(&ddt_csv(&report, &space))?;
    cx.emit_summary(json!({
        "delta_uniformity": report.delta_uniformity,
        "max_lp": null,
        "violations": report.violations.len(),
    }))?;
    if report.violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Findings)
    }
}

fn cmd_corr(cx: &Ctx, spec: &Path, keys: Option<&Path>) -> CliResult<()> {
    let spec = load_spec(spec)?;
    let limit = cx.limit(FULL_SWEEP_LIMIT);
    let report = match &spec {
        SpecFile::Gtds(g) => match check_correlation_against_bounds(g, limit, cx.cli.tolerance) {
            Err(Error::HypothesisUnverified(i)) => {
                eprintln!("note: bounds skipped, {}", Error::HypothesisUnverified(i));
                correlation_table(&LookupTable::from_gtds(g, limit)?, limit)?
            }
            other => other?,
        },
        SpecFile::Cipher(_) => {
            let (cipher, keys) = load_keys(&spec, keys)?;
            correlation_table(&LookupTable::from_cipher(&cipher, &keys, limit)?, limit)?
        }
    };
    let space = Space::new(spec.ctx(), spec.n(), MAX_DOMAIN)?;
    cx.emit(&corr_csv(&report, &space, cx.cli.tolerance))?;
    cx.emit_summary(json!({
        "delta_uniformity": null,
        "max_lp": report.max_lp,
        "parseval_sum": report.parseval_sum,
        "violations": report.violations.len(),
    }))?;
    if report.violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Findings)
    }
}

fn cmd_bounds(cx: &Ctx, spec: &Path) -> CliResult<()> {
    let SpecFile::Gtds(g) = load_spec(spec)? else {
        return Err(Failure::Usage("bounds needs a system specification".into()));
    };
    let limit = cx.limit(FULL_SWEEP_LIMIT);
    let d = check_ddt_against_bounds(&g, limit)?;
    let c = check_correlation_against_bounds(&g, limit, cx.cli.tolerance)?;
    let space = Space::new(g.ctx(), g.n(), MAX_DOMAIN)?;
    let mut out = String::from("kind,input,output,value,bound\n");
    for v in &d.violations {
        let kind = match v.kind {
            BoundKind::Product => "ddt-product",
            BoundKind::Weight => "ddt-weight",
        };
        writeln!(
            out,
            "{kind},{},{},{},{}",
            fmt_vec(&space.decode(v.dx), ";"),
            fmt_vec(&space.decode(v.dy), ";"),
            v.count,
            v.bound
        )
        .unwrap();
    }
    for v in &c.violations {
        writeln!(
            out,
            "lp,{},{},{},{}",
            fmt_vec(&space.decode(v.a), ";"),
            fmt_vec(&space.decode(v.b), ";"),
            fmt_f64(v.lp),
            fmt_f64(v.bound)
        )
        .unwrap();
    }
    cx.emit(&out)?;
    let violations = d.violations.len() + c.violations.len();
    cx.emit_summary(json!({
        "delta_uniformity": d.delta_uniformity,
        "max_lp": c.max_lp,
        "violations": violations,
    }))?;
    if violations == 0 {
        Ok(())
    } else {
        Err(Failure::Findings)
    }
}

fn cmd_weil(cx: &Ctx, poly: &Path) -> CliResult<()> {
    let field = cx.field()?;
    let (ctx, f) = parse_uni_file(&read(poly)?, field.as_ref())?;
    let mut out = String::from("a,b,lhs,bound,ok\n");
    let mut violations = 0;
    for a in ctx.nonzero_elements() {
        for b in ctx.nonzero_elements() {
            let w = weil_sum_check(&ctx, &f, a, b, cx.cli.tolerance)?;
            violations += usize::from(!w.ok);
            writeln!(out, "{a},{b},{},{},{}", fmt_f64(w.lhs), fmt_f64(w.bound), w.ok).unwrap();
        }
    }
    cx.emit(&out)?;
    cx.emit_summary(json!({
        "delta_uniformity": null,
        "max_lp": null,
        "violations": violations,
    }))?;
    if violations == 0 {
        Ok(())
    } else {
        Err(Failure::Findings)
    }
}

fn cmd_trail(cx: &Ctx, spec: &Path, keys: Option<&Path>, trail: &Path) -> CliResult<()> {
    let spec = load_spec(spec)?;
    let (cipher, keys) = load_keys(&spec, keys)?;
    let trail = parse_trail(cipher.ctx(), &read(trail)?)?;
    let lp = trail_lp(&cipher, &keys, &trail, cx.limit(1 << 16))?;
    cx.emit(&format!("lp,{}\n", fmt_f64(lp)))
}

fn cmd_permcheck(cx: &Ctx, poly: &Path) -> CliResult<()> {
    let field = cx.field()?;
    let (ctx, f) = parse_uni_file(&read(poly)?, field.as_ref())?;
    match permutation_certificate(&ctx, &f) {
        Ok(cert) => {
            let mut out = String::new();
            writeln!(out, "permutation: true").unwrap();
            writeln!(out, "certificate: {:?}", cert.kind).unwrap();
            writeln!(out, "degree: {}", cert.deg_f).unwrap();
            if let Some(inv) = &cert.inverse {
                writeln!(out, "inverse_degree: {}", inv.degree()).unwrap();
                writeln!(out, "inverse: {inv}").unwrap();
            }
            cx.emit(&out)
        }
        Err(Error::NotAPermutation { .. }) => {
            cx.emit("permutation: false\n")?;
            Err(Failure::Findings)
        }
        Err(e) => Err(e.into()),
    }
}

fn run(cx: &Ctx) -> CliResult<()> {
    if let Some(m) = cx.cli.max_domain {
        if m == 0 || m > MAX_DOMAIN {
            return Err(Failure::Usage(format!("--max-domain must lie in [1, {MAX_DOMAIN}]")));
        }
    }
    if cx.cli.tolerance.is_nan() || cx.cli.tolerance <= 0.0 {
        return Err(Failure::Usage("--tolerance must be positive".into()));
    }
    match &cx.cli.command {
        Command::Validate { spec, samples } => cmd_validate(cx, spec, *samples),
        Command::Instantiate { family, params } => {
            let spec = instantiate(*family, &read(params)?)?;
            let text = serde_json::to_string_pretty(&spec.to_json()).expect("specs serialize");
            cx.emit(&format!("{text}\n"))
        }
        Command::Encrypt { spec, keys, input } => {
            cmd_crypt(cx, spec, keys.as_deref(), input.as_deref(), false)
        }
        Command::Decrypt { spec, keys, input } => {
            cmd_crypt(cx, spec, keys.as_deref(), input.as_deref(), true)
        }
        Command::Ddt { spec, keys } => cmd_ddt(cx, spec, keys.as_deref()),
        Command::Corr { spec, keys } => cmd_corr(cx, spec, keys.as_deref()),
        Command::Bounds { spec } => cmd_bounds(cx, spec),
        Command::Weil { poly } => cmd_weil(cx, poly),
        Command::TrailLp { spec, keys, trail } => cmd_trail(cx, spec, keys.as_deref(), trail),
        Command::Permcheck { poly } => cmd_permcheck(cx, poly),
    }
}

fn main() -> ExitCode {
    let cx = Ctx { cli: Cli::parse() };
    match run(&cx) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Findings) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Parse(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
