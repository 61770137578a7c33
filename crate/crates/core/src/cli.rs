//! Command-line driver: one subcommand per experiment.
//!
//! Exit codes: 0 when every check passed or a verdict was produced, 1 when an
//! identity check failed, 2 for usage, configuration and runtime errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{read_set, ExperimentConfig};
use crate::error::{Error, Result};
use crate::group::{GroupContext, GroupElement, GroupKind};
use crate::inflate::{fredholm_proxy_compare, ProxyOptions, DEFAULT_POOL_LIMIT};
use crate::limits::{
    commutative_geodesic_extraction, free_prefix_stabilization, periodic_paths, stability_certificate,
    GeodesicPath, SectionFamily,
};
use crate::operator::{
    band_section, norm_isometry_scan, projection_section, quasicommutator, quasicommutator_via_ambient,
    verify_boundary_factorization, verify_interior_product, verify_qlp_identity, verify_telescoping, BandOperator,
    IdentityCheck, C64,
};
use crate::sets::{omega_boundary, omega_interior, BallCache, FiniteSubset};
use crate::spectral::{self, fmt_f64, CSV_HEADER};

#[derive(Parser, Debug)]
#[command(name = "fsm", version, about = "Finite sections of band operators on finitely generated groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for report files; reports go to stdout otherwise.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the section matrix in coordinate form.
    #[arg(long, global = true)]
    pub dump_matrix: Option<PathBuf>,
    /// Write the computed set, one element per line.
    #[arg(long, global = true)]
    pub dump_set: Option<PathBuf>,
    /// Inflate the enlarged sets (Y ∪ Ω_n)(Y ∪ Ω_n)⁻¹(Y ∪ Ω_n).
    #[arg(long, global = true)]
    pub enlarged: bool,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Window radius for certificates, stabilization and inflation.
    #[arg(long, global = true)]
    pub window: Option<usize>,
    /// Largest section index or ball radius.
    #[arg(long, global = true)]
    pub nmax: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Dump the ball Ω_n.
    Ball,
    /// Interior and boundary of a set.
    Boundary,
    /// One finite section P_Y A P_Y.
    Section,
    /// Exact matrix identities.
    Identities,
    /// Stability scan over the section sequence.
    Scan,
    /// Limit-operator stability certificate.
    Certify,
    /// Geodesic extraction or prefix stabilization.
    Extract,
    /// Inflating sequence and finite-window proxy comparison.
    Inflate,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Ball => "ball",
            Command::Boundary => "boundary",
            Command::Section => "section",
            Command::Identities => "identities",
            Command::Scan => "scan",
            Command::Certify => "certify",
            Command::Extract => "extract",
            Command::Inflate => "inflate",
        }
    }
}

struct Output {
    ext: &'static str,
    body: String,
    failed: bool,
}

impl Output {
    fn ok(ext: &'static str, body: String) -> Self {
        Output { ext, body, failed: false }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(false) => 0,
        Ok(true) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Runs the command; `Ok(true)` signals a failed identity check.
pub fn execute(cli: &Cli) -> Result<bool> {
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let ctx = cfg.context()?;
    let out = match cli.command {
        Command::Ball => cmd_ball(cli, &cfg, &ctx)?,
        Command::Boundary => cmd_boundary(cli, &cfg, &ctx)?,
        Command::Section => cmd_section(cli, &cfg, &ctx)?,
        Command::Identities => cmd_identities(cli, &cfg, &ctx)?,
        Command::Scan => cmd_scan(cli, &cfg, &ctx)?,
        Command::Certify => cmd_certify(cli, &cfg, &ctx)?,
        Command::Extract => cmd_extract(cli, &cfg, &ctx)?,
        Command::Inflate => cmd_inflate(cli, &cfg, &ctx)?,
    };
    emit(cli.out.as_deref(), cli.command.name(), &out)?;
    Ok(out.failed)
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Resource(format!("{}: {e}", path.display()))
}

fn emit(dir: Option<&Path>, name: &str, out: &Output) -> Result<()> {
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            let path = dir.join(format!("{name}.{}", out.ext));
            std::fs::write(&path, &out.body).map_err(|e| io_err(&path, e))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(out.body.as_bytes())
                .map_err(|e| Error::Resource(format!("stdout: {e}")))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Resource(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn dump_set(cli: &Cli, set: &FiniteSubset) -> Result<()> {
    if let Some(path) = &cli.dump_set {
        std::fs::write(path, set.to_text()).map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

fn names(set: &FiniteSubset) -> Vec<String> {
    set.iter().map(|x| x.to_string()).collect()
}

fn set_output(cli: &Cli, fields: serde_json::Value, set: &FiniteSubset, ctx: &Arc<GroupContext>) -> Result<Output> {
    match cli.format {
        None => Ok(Output::ok("txt", set.to_text())),
        Some(Format::Json) => Ok(Output::ok("json", to_json(&fields)?)),
        Some(Format::Csv) => {
            let mut body = String::from("index,element,length\n");
            for (i, x) in set.iter().enumerate() {
                let _ = writeln!(body, "{i},\"{x}\",{}", ctx.word_length(x)?);
            }
            Ok(Output::ok("csv", body))
        }
    }
}

fn cmd_ball(cli: &Cli, cfg: &ExperimentConfig, ctx: &Arc<GroupContext>) -> Result<Output> {
    let radius = cli.nmax.or(cfg.ball.radius).unwrap_or(2);
    let ball = BallCache::new(ctx).ball(radius)?.clone();
    dump_set(cli, &ball)?;
    let fields = json!({ "group": ctx.kind().to_string(), "radius": radius, "size": ball.len(), "elements": names(&ball) });
    set_output(cli, fields, &ball, ctx)
}

fn cmd_boundary(cli: &Cli, cfg: &ExperimentConfig, ctx: &Arc<GroupContext>) -> Result<Output> {
    let set = match &cfg.boundary.set_file {
        Some(path) => read_set(ctx, path)?,
        None => BallCache::new(ctx).ball(cli.nmax.or(cfg.boundary.radius).unwrap_or(2))?.clone(),
    };
    let interior = omega_interior(&set, ctx.generators());
    let boundary = omega_boundary(&set, ctx.generators());
    dump_set(cli, &boundary)?;
    let fields = json!({
        "size": set.len(),
        "interior": names(&interior),
        "boundary": names(&boundary),
    });
    set_output(cli, fields, &boundary, ctx)
}

fn section_record_csv(n: usize, dim: usize, norm: f64, sigma: f64, verdict: &str) -> String {
    let cond = if sigma > 0.0 { norm / sigma } else { f64::INFINITY };
    format!("{CSV_HEADER}\n{n},{dim},{},{},{},{verdict}\n", fmt_f64(norm), fmt_f64(sigma), fmt_f64(cond))
}

fn cmd_section(cli: &Cli, cfg: &ExperimentConfig, ctx: &Arc<GroupContext>) -> Result<Output> {
    let op = cfg.operator(ctx)?;
    let sections = cfg.section_list(ctx, cli.nmax)?;
    let (n, y) = sections.last().ok_or_else(|| Error::Argument("no sections configured".into()))?;
    let th = cfg.thresholds()?;
    if y.len() > th.max_dim {
        return Err(Error::Resource(format!("section of dimension {} exceeds max_dim {}", y.len(), th.max_dim)));
    }
    let m = band_section(&op, y)?;
    if let Some(path) = &cli.dump_matrix {
        let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
        m.write_coordinate(std::io::BufWriter::new(file)).map_err(|e| io_err(path, e))?;
    }
    dump_set(cli, y)?;
    let norm = spectral::operator_norm(m.entries())?;
    let sigma = spectral::sigma_min(&m)?;
    let verdict = spectral::Verdict::from(spectral::classify(sigma, th.tau_stab)?);
    match cli.format {
        Some(Format::Json) => Ok(Output::ok(
            "json",
            to_json(&json!({ "n": n, "dim": m.dim(), "norm": norm, "sigma_min": sigma, "verdict": verdict }))?,
        )),
        _ => Ok(Output::ok("csv", section_record_csv(*n, m.dim(), norm, sigma, verdict.as_str()))),
    }
}

#[derive(Serialize)]
struct CheckRow {
    check: &'static str,
    argument: String,
    holds: bool,
    residual: f64,
    dim: usize,
}

impl CheckRow {
    fn new(check: &'static str, argument: String, c: IdentityCheck) -> Self {
        CheckRow { check, argument, holds: c.holds, residual: c.residual, dim: c.dim }
    }
}

fn random_band(rng: &mut ChaCha8Rng, shifts: &[GroupElement]) -> BandOperator {
    let k = rng.random_range(1..=3);
    BandOperator::from_constants((0..k).map(|_| {
        let t = shifts.choose(rng).expect("nonempty shift set").clone();
        (t, C64::new(rng.random_range(-3..=3) as f64, rng.random_range(-2..=2) as f64))
    }))
}

fn cmd_identities(cli: &Cli, cfg: &ExperimentConfig, ctx: &Arc<GroupContext>) -> Result<Output> {
    let gens = ctx.generators();
    let mut balls = BallCache::new(ctx);
    let a = match &cfg.identities.set_file {
        Some(path) => read_set(ctx, path)?,
        None => balls.ball(cli.nmax.or(cfg.identities.radius).unwrap_or(3))?.clone(),
    };
    let mut ambient = a.clone();
    for w in gens.elements() {
        ambient = ambient.union(&a.translate_left(w));
    }
    let mut rows = Vec::new();
    for w in gens.elements() {
        rows.push(CheckRow::new("qlp", w.to_string(), verify_qlp_identity(w, &a, &ambient)?));
        rows.push(CheckRow::new("boundary_factorization", w.to_string(), verify_boundary_factorization(w, &a, gens)?));
    }
    rows.push(CheckRow::new("interior_product", format!("|A|={}", a.len()), verify_interior_product(&a, gens)?));

    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed.unwrap_or(cfg.seed()));
    let shifts: Vec<GroupElement> = gens.elements().to_vec();
    let small = balls.ball(1)?.clone();
    for i in 0..cfg.identities.instances.unwrap_or(5) {
        let a1 = random_band(&mut rng, &shifts);
        let a2 = random_band(&mut rng, &shifts);
        let check = IdentityCheck::compare(&quasicommutator(&a1, &a2, &a)?, &quasicommutator_via_ambient(&a1, &a2, &a)?);
        rows.push(CheckRow::new("quasicommutator", format!("instance {i}"), check));
        let m = rng.random_range(2..=4);
        let ops: Vec<BandOperator> = (0..m).map(|_| random_band(&mut rng, &shifts)).collect();
        rows.push(CheckRow::new("telescoping", format!("instance {i}, m={m}"), verify_telescoping(&ops, &small)?));
    }
    if cfg.identities.inject_fault {
        // deliberately false: P_A = P_{A minus its first element}
        let lhs = projection_section(&a, &a);
        let rhs = projection_section(&a.filter(|x| Some(x) != a.elements().first()), &a);
        rows.push(CheckRow::new("injected_fault", String::new(), IdentityCheck::compare(&lhs, &rhs)));
    }
    let failed = rows.iter().any(|r| !r.holds);
    let body = match cli.format {
        Some(Format::Json) => to_json(&json!({ "checks": rows, "all_hold": !failed }))?,
        _ => {
            let mut s = String::from("check,argument,holds,residual,dim\n");
            for r in &rows {
                let _ = writeln!(s, "{},\"{}\",{},{},{}", r.check, r.argument, r.holds, fmt_f64(r.residual), r.dim);
            }
            s
        }
    };
    let ext = if cli.format == Some(Format::Json) { "json" } else { "csv" };
    Ok(Output { ext, body, failed })
}

fn cmd_scan(cli: &Cli, cfg: &ExperimentConfig, ctx: &Arc<GroupContext>) -> Result<Output> {
    let op = cfg.operator(ctx)?;
    let th = cfg.thresholds()?;
    let sections = cfg.section_list(ctx, cli.nmax)?;
    let report = spectral::stability_scan(&op, &sections, &th)?;
    match cli.format {
        Some(Format::Json) => {
            let norms = match cfg.ball_sections()? {
                Some(_) => {
                    let n_max = sections.last().map_or(0, |(n, _)| *n);
                    Some(norm_isometry_scan(&op, &mut BallCache::new(ctx), n_max, cfg.scan.reference_norm)?)
                }
                None => None,
            };
            Ok(Output::ok("json", to_json(&json!({ "scan": report, "norm_scan": norms }))?))
        }
        _ => Ok(Output::ok("csv", report.to_csv())),
    }
}

fn cmd_certify(cli: &Cli, cfg: &ExperimentConfig, ctx: &Arc<GroupContext>) -> Result<Output> {
    let op = cfg.operator(ctx)?;
    let gens = ctx.generators();
    let radius = cli.window.or(cfg.certify.window).unwrap_or(10);
    let max_dim = cfg.thresholds()?.max_dim;
    let window_size = BallCache::new(ctx).ball(radius)?.len();
    if window_size > max_dim {
        return Err(Error::Resource(format!("window Ω_{radius} has {window_size} sites, exceeds max_dim {max_dim}")));
    }
    let family = match cfg.ball_sections()? {
        Some(_) => SectionFamily::Balls,
        None => SectionFamily::Explicit(cfg.section_list(ctx, cli.nmax)?.into_iter().map(|(_, y)| y).collect()),
    };
    let paths = match &cfg.certify.paths {
        Some(list) => list
            .iter()
            .map(|p| {
                let pattern = p.geodesic.iter().map(|s| ctx.parse_element(s)).collect::<Result<Vec<_>>>()?;
                let m = match p.repeat {
                    Some(k) => k * pattern.len(),
                    None => (2 * radius).max(pattern.len()),
                };
                GeodesicPath::periodic(ctx, &pattern, m, gens)
            })
            .collect::<Result<Vec<_>>>()?,
        None => periodic_paths(ctx, gens, cfg.certify.period.unwrap_or(2), (2 * radius).max(1))?,
    };
    let tau = match cfg.certify.tau {
        Some(t) => t,
        None => cfg.thresholds()?.tau_stab,
    };
    let report = stability_certificate(&op, gens, &family, &paths, radius, tau)?;
    match cli.format {
        Some(Format::Csv) => {
            let mut s = String::from("pattern,window_size,sigma_min,verdict\n");
            for p in &report.paths {
                let _ = writeln!(s, "\"{}\",{},{},{}", p.pattern.join(" "), p.window_size, fmt_f64(p.sigma_min), p.verdict.as_str());
            }
            let _ = writeln!(s, "\"whole_space\",{},{},{}", report.whole_space.dim, fmt_f64(report.whole_space.sigma_min), report.whole_space.verdict.as_str());
            let _ = writeln!(s, "\"overall\",,,{}", report.overall.as_str());
            Ok(Output::ok("csv", s))
        }
        _ => Ok(Output::ok("json", to_json(&report)?)),
    }
}

fn cmd_extract(cli: &Cli, cfg: &ExperimentConfig, ctx: &Arc<GroupContext>) -> Result<Output> {
    let seq = cfg
        .extract
        .sequence
        .as_ref()
        .ok_or_else(|| Error::Argument("extract.sequence is required".into()))?
        .iter()
        .map(|s| ctx.parse_element(s))
        .collect::<Result<Vec<_>>>()?;
    let default_mode = match ctx.kind() {
        GroupKind::Free(_) => "free",
        _ => "commutative",
    };
    let value = match cfg.extract.mode.as_deref().unwrap_or(default_mode) {
        "commutative" => {
            let ex = commutative_geodesic_extraction(ctx, &seq, ctx.generators())?;
            json!({
                "mode": "commutative",
                "path": ex.path.describe(),
                "selected": ex.selected,
                "selected_terms": ex.selected.iter().map(|&i| seq[i].to_string()).collect::<Vec<_>>(),
            })
        }
        "free" => {
            let terms = seq
                .iter()
                .map(|eta| Ok((ctx.word_length(eta)?, eta.clone())))
                .collect::<Result<Vec<_>>>()?;
            let horizon_default = terms.iter().map(|(k, _)| *k).max().unwrap_or(1).saturating_sub(1).max(1);
            let horizon = cfg.extract.horizon.unwrap_or(horizon_default);
            let radius = cli.window.or(cfg.extract.window).unwrap_or(horizon / 2);
            let st = free_prefix_stabilization(ctx, &terms, horizon, radius)?;
            json!({
                "mode": "free",
                "path": st.path.describe(),
                "window_radius": radius,
                "limit_window": names(&st.window.realized),
                "terms_limsup": names(&st.terms.limsup),
                "terms_liminf": names(&st.terms.liminf),
                "included": st.included,
                "equal": st.equal,
            })
        }
        other => return Err(Error::Argument(format!("unknown extract mode `{other}`"))),
    };
    Ok(Output::ok("json", to_json(&value)?))
}

fn cmd_inflate(cli: &Cli, cfg: &ExperimentConfig, ctx: &Arc<GroupContext>) -> Result<Output> {
    let op = cfg.operator(ctx)?;
    let sections = cfg.section_list(ctx, cli.nmax)?;
    let window = match cli.window.or(cfg.inflate.window) {
        Some(r) => {
            let mut balls = BallCache::new(ctx).with_cap(r);
            Some(balls.ball(r)?.clone())
        }
        None => None,
    };
    let opts = ProxyOptions {
        blocks: cfg.inflate.blocks.unwrap_or(sections.len()),
        enlarged: cli.enlarged || cfg.inflate.enlarged,
        pool_limit: cfg.inflate.pool_limit.unwrap_or(DEFAULT_POOL_LIMIT),
        thresholds: cfg.thresholds()?,
        window,
    };
    let report = fredholm_proxy_compare(&op, &sections, &opts)?;
    Ok(Output::ok("json", to_json(&report)?))
}
