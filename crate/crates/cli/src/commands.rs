//! Command-line front end: argument definitions, command handlers and exit codes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, ensure, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ptqgt_core::dynamics::{adiabatic_phase, evolve, recommended_steps, PathSpec};
use ptqgt_core::family::EigenSource;
use ptqgt_core::geometry::{
    berry_phase_loop, classify_interval, curvature_flux, default_step, qgt, LoopSpec, Rectangle,
};
use ptqgt_core::xy_chain::{critical_set, XYParams};
use ptqgt_core::Error as CoreError;
use serde::Serialize;

use crate::config::{parse_real, ConfigError, Entry, ModelKind, ScanConfig, ScanSettings};
use crate::model_file::{ModelError, ModelFamily};
use crate::scan::scan_to_files;
use crate::verify::{run_suite, Suite};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DEGENERATE: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "ptqgt", version, about = "Extended quantum geometric tensor for PT-symmetric Hamiltonians")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Metric-intensity map of the XY chain (or a two-parameter model file) over an (h, eta) grid.
    Scan(ScanArgs),
    /// Critical radii, eta_c and the transition locus of an XY parameter set.
    Critical(CriticalArgs),
    /// Extended QGT of one level of a model file at a point.
    Qgt(QgtArgs),
    /// Berry phase around a loop: line integral, curvature flux and simulated dynamics.
    Berry(BerryArgs),
    /// W-unitary evolution along a path, written as a CSV trajectory.
    Evolve(EvolveArgs),
    /// Cross-identity self-checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// JSON configuration; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// XY couplings J,Js,Gamma,Gammas (ratios such as 1/3 allowed).
    #[arg(long, allow_hyphen_values = true)]
    pub params: Option<String>,
    /// Scan a two-parameter model file instead of the XY chain.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    /// Level of the model file.
    #[arg(long)]
    pub level: Option<usize>,
    /// min,max,count
    #[arg(long, allow_hyphen_values = true)]
    pub h_range: Option<String>,
    /// min,max,count
    #[arg(long, allow_hyphen_values = true)]
    pub eta_range: Option<String>,
    #[arg(long)]
    pub n_quad: Option<usize>,
    /// Comma-separated subset of g11,g12,g22.
    #[arg(long)]
    pub outputs: Option<String>,
    /// Output CSV; a gnuplot script is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    Anisotropic,
    PseudoIsotropic,
}

#[derive(Debug, Args)]
pub struct CriticalArgs {
    /// J,Js,Gamma,Gammas (ratios such as 1/3 allowed).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "preset", required_unless_present = "preset")]
    pub params: Option<String>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct QgtArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Comma-separated parameter values.
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    #[arg(long, default_value_t = 0)]
    pub level: usize,
    /// Finite-difference step; defaults to a step scaled to the point.
    #[arg(long)]
    pub step: Option<f64>,
}

/// A loop or path: a rectangle (`--lo`, `--hi`), a circle (`--center`, `--radius`) or a polygon
/// (`--vertices`).
#[derive(Debug, Args)]
pub struct PathArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub level: usize,
    /// Values of all parameters off the loop plane; defaults to zeros.
    #[arg(long, allow_hyphen_values = true)]
    pub base: Option<String>,
    /// 1-based indices of the two parameters spanning the loop plane.
    #[arg(long, default_value = "1,2")]
    pub plane: String,
    #[arg(long, allow_hyphen_values = true, requires = "hi")]
    pub lo: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires = "lo")]
    pub hi: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires = "radius")]
    pub center: Option<String>,
    #[arg(long, requires = "center")]
    pub radius: Option<f64>,
    /// Full parameter points separated by ';'; the polygon is closed automatically.
    #[arg(long, allow_hyphen_values = true)]
    pub vertices: Option<String>,
    /// Segments per rectangle side; four times this many for a circle.
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    /// Duration of the traversal.
    #[arg(long, default_value_t = 100.0)]
    pub tau: f64,
    /// RK4 steps; defaults to an accuracy-based estimate.
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BerryArgs {
    #[command(flatten)]
    pub path: PathArgs,
    /// Skip the dynamical simulation.
    #[arg(long)]
    pub no_sim: bool,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub path: PathArgs,
    /// Trajectory CSV; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SuiteArg {
    Fast,
    Full,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "fast")]
    pub suite: SuiteArg,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

/// A failed self-check: not a usage error and not a critical signal.
#[derive(Debug, thiserror::Error)]
#[error("{failed} of {total} checks failed")]
pub struct VerifyFailed {
    pub failed: usize,
    pub total: usize,
}

/// Exit code for an error chain: critical signals are 2, numerical failures and failed
/// self-checks 3, everything else (bad input, unreadable files) 1.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                e if e.is_critical_signal() => EXIT_DEGENERATE,
                CoreError::NonFinite
                | CoreError::NotPositiveDefinite(_)
                | CoreError::MetricSingular
                | CoreError::StepTooLarge(_)
                | CoreError::NotAdiabatic { .. }
                | CoreError::QuadratureUnconverged(_) => EXIT_INTERNAL,
                _ => EXIT_USAGE,
            };
        }
        if cause.is::<VerifyFailed>() {
            return EXIT_INTERNAL;
        }
        if cause.is::<ConfigError>() || cause.is::<ModelError>() {
            return EXIT_USAGE;
        }
    }
    EXIT_USAGE
}

/// Entry point shared by the binary: parse, dispatch, report.
pub fn main_with_args(args: impl IntoIterator<Item = std::ffi::OsString>) -> ExitCode {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            let code = exit_code(&e);
            if code == EXIT_DEGENERATE {
                eprintln!("Degenerate: {e:#}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(code)
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Scan(a) => cmd_scan(a),
        Command::Critical(a) => cmd_critical(a),
        Command::Qgt(a) => cmd_qgt(a),
        Command::Berry(a) => cmd_berry(a),
        Command::Evolve(a) => cmd_evolve(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

/// Comma-separated reals; each item may be a ratio `a/b`.
pub fn parse_list(s: &str, what: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|t| parse_real(t.trim()).ok_or_else(|| anyhow!("{what}: '{}' is not a finite number", t.trim())))
        .collect()
}

fn parse_fixed<const N: usize>(s: &str, what: &str) -> anyhow::Result<[f64; N]> {
    let v = parse_list(s, what)?;
    v.try_into().map_err(|v: Vec<f64>| anyhow!("{what}: expected {N} values, got {}", v.len()))
}

fn parse_range(s: &str, what: &str) -> anyhow::Result<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [min, max, count] = parts[..] else { bail!("{what}: expected min,max,count") };
    let real = |t: &str| parse_real(t).ok_or_else(|| anyhow!("{what}: '{t}' is not a finite number"));
    let count = count.parse().map_err(|_| anyhow!("{what}: count '{count}' is not a non-negative integer"))?;
    Ok((real(min)?, real(max)?, count))
}

fn xy_params(s: &str) -> anyhow::Result<XYParams> {
    let [j, js, g, gs] = parse_fixed::<4>(s, "params")?;
    Ok(XYParams::new(j, js, g, gs)?)
}

fn cmd_scan(a: ScanArgs) -> anyhow::Result<()> {
    let (mut settings, lines) = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            ScanSettings::from_json(&text, path.parent())
                .with_context(|| format!("invalid config {}", path.display()))?
        }
        None => (ScanSettings::default(), Default::default()),
    };
    if let Some(p) = &a.params {
        let [j, js, g, gs] = parse_fixed::<4>(p, "params")?;
        settings.params = Some([Some(j), Some(js), Some(g), Some(gs)]);
        settings.model = Some(ModelKind::XyChain);
        settings.model_file = None;
    }
    if let Some(f) = a.model_file {
        settings.model_file = Some(f);
        settings.model = Some(ModelKind::MatrixFile);
        settings.params = None;
    }
    if let Some(l) = a.level {
        settings.level = Some(l);
    }
    if let Some(r) = &a.h_range {
        settings.h_range = Some(parse_range(r, "h-range")?);
    }
    if let Some(r) = &a.eta_range {
        settings.eta_range = Some(parse_range(r, "eta-range")?);
    }
    if let Some(n) = a.n_quad {
        settings.n_quad = Some(n);
    }
    if let Some(o) = &a.outputs {
        let entries = o
            .split(',')
            .map(|t| Entry::parse(t.trim()).ok_or_else(|| anyhow!("outputs: unknown entry '{}'", t.trim())))
            .collect::<anyhow::Result<Vec<_>>>()?;
        settings.outputs = Some(entries);
    }
    if let Some(o) = a.out {
        settings.out_path = Some(o);
    }
    if let Some(w) = a.workers {
        settings.workers = Some(w);
    }
    let config: ScanConfig = settings.validate(&lines)?;
    let start = std::time::Instant::now();
    let result = scan_to_files(&config)?;
    let count = |s: crate::scan::Status| result.records.iter().filter(|r| r.status == s).count();
    println!(
        "wrote {} ({} points: {} ok, {} degenerate, {} broken) and {} in {:.2?}",
        config.out_path.display(),
        result.records.len(),
        count(crate::scan::Status::Ok),
        count(crate::scan::Status::Degenerate),
        count(crate::scan::Status::Broken),
        crate::scan::script_path(&config.out_path).display(),
        start.elapsed()
    );
    Ok(())
}

#[derive(Serialize)]
struct CriticalJson {
    #[serde(rename = "J")]
    j: f64,
    #[serde(rename = "Js")]
    js: f64,
    #[serde(rename = "Gamma")]
    gamma: f64,
    #[serde(rename = "Gammas")]
    gammas: f64,
    case: &'static str,
    r_c1: f64,
    r_c2: f64,
    eta_c: f64,
    qpt_locus: String,
}

fn cmd_critical(a: CriticalArgs) -> anyhow::Result<()> {
    let p = match (a.preset, &a.params) {
        (Some(Preset::Anisotropic), _) => XYParams::anisotropic_reference(),
        (Some(Preset::PseudoIsotropic), _) => XYParams::pseudo_isotropic_reference(),
        (None, Some(s)) => xy_params(s)?,
        (None, None) => bail!("give --params or --preset"),
    };
    let cs = critical_set(&p)?;
    if a.json {
        let out = CriticalJson {
            j: p.j,
            js: p.js,
            gamma: p.gamma,
            gammas: p.gammas,
            case: cs.case.name(),
            r_c1: cs.r_c1,
            r_c2: cs.r_c2,
            eta_c: cs.eta_c,
            qpt_locus: cs.qpt.describe(),
        };
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!("J = {}, Js = {}, Gamma = {}, Gammas = {}", p.j, p.js, p.gamma, p.gammas);
        println!("case:  {}", cs.case.name());
        println!("r_c1 = {}", cs.r_c1);
        println!("r_c2 = {}", cs.r_c2);
        println!("eta_c = {}", cs.eta_c);
        println!("QPT locus: {}", cs.qpt.describe());
    }
    Ok(())
}

fn load_model(path: &Path, level: usize) -> anyhow::Result<ModelFamily> {
    let m = ModelFamily::load(path)?;
    ensure!(level < m.dim, "level {level} out of range: the model has dimension {}", m.dim);
    Ok(m)
}

fn format_matrix<T>(rows: usize, cols: usize, at: impl Fn(usize, usize) -> T, cell: impl Fn(T) -> String) -> String {
    let mut s = String::new();
    for r in 0..rows {
        let cells: Vec<String> = (0..cols).map(|c| cell(at(r, c))).collect();
        writeln!(s, "  [ {} ]", cells.join("  ")).expect("write to String");
    }
    s
}

fn cmd_qgt(a: QgtArgs) -> anyhow::Result<()> {
    let m = load_model(&a.model, a.level)?;
    let point = parse_list(&a.point, "point")?;
    ensure!(
        point.len() == m.n_params,
        "point has {} values but the model declares {} parameter(s)",
        point.len(),
        m.n_params
    );
    let eig = m.eigensystem(&point)?;
    let step = a.step.unwrap_or_else(|| default_step(&point));
    let q = qgt(&m, &point, a.level, step)?;
    let (omega, g) = (q.curvature(), q.metric());
    let d = m.n_params;
    println!("model: {} (dimension {}, {} parameter(s))", a.model.display(), m.dim, d);
    println!("point: {point:?}, level {}", a.level);
    let energies: Vec<String> = eig.energies.iter().map(|e| format!("{:.10}{:+.3e}i", e.re, e.im)).collect();
    println!("energies: {}", energies.join(", "));
    println!("spectrum: {}", if eig.unbroken { "real (PT unbroken)" } else { "complex (PT broken)" });
    print!("Q:\n{}", format_matrix(d, d, |r, c| q.q[(r, c)], |z| format!("{:+.10e}{:+.10e}i", z.re, z.im)));
    print!("Omega = Im Q:\n{}", format_matrix(d, d, |r, c| omega[(r, c)], |x| format!("{x:+.10e}")));
    print!("g = Re Q:\n{}", format_matrix(d, d, |r, c| g[(r, c)], |x| format!("{x:+.10e}")));
    let mut ev: Vec<f64> = g.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let ev: Vec<String> = ev.iter().map(|x| format!("{x:+.6e}")).collect();
    println!("eigenvalues of g: {}", ev.join(", "));
    println!("unit displacements:");
    for mu in 0..d {
        let mut dl = vec![0.0; d];
        dl[mu] = 1.0;
        let iv = classify_interval(&g, &dl)?;
        println!("  e{}: ds2 = {:+.6e}, {:?}", mu + 1, iv.ds2, iv.class);
    }
    Ok(())
}

/// A validated loop: its polygon for the line integral, an optional rectangle for the flux,
/// and a closed path for the dynamics.
struct Loop {
    polygon: LoopSpec,
    rectangle: Option<Rectangle>,
    path: PathSpec,
}

fn build_loop(a: &PathArgs, n_params: usize) -> anyhow::Result<Loop> {
    let base = match &a.base {
        Some(b) => parse_list(b, "base")?,
        None => vec![0.0; n_params],
    };
    ensure!(base.len() == n_params, "base has {} values but the model declares {n_params} parameter(s)", base.len());
    let plane: Vec<usize> = a
        .plane
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| anyhow!("plane: '{}' is not an index", t.trim())))
        .collect::<anyhow::Result<_>>()?;
    let [mu, nu] = plane[..] else { bail!("plane: expected two indices") };
    ensure!(
        (1..=n_params).contains(&mu) && (1..=n_params).contains(&nu) && mu != nu,
        "plane: indices must be distinct and within 1..={n_params}"
    );
    let plane = (mu - 1, nu - 1);
    ensure!(a.resolution >= 1, "resolution must be at least 1");
    ensure!(a.tau.is_finite() && a.tau > 0.0, "tau must be positive");
    let shapes = [a.lo.is_some(), a.center.is_some(), a.vertices.is_some()].iter().filter(|&&x| x).count();
    ensure!(shapes == 1, "give exactly one loop: --lo/--hi, --center/--radius or --vertices");
    let level = a.level;
    if let (Some(lo), Some(hi)) = (&a.lo, &a.hi) {
        let rect = Rectangle {
            base,
            plane,
            lo: parse_fixed::<2>(lo, "lo")?,
            hi: parse_fixed::<2>(hi, "hi")?,
            resolution: a.resolution,
        };
        let polygon = rect.boundary_loop(level);
        let r = rect.resolution;
        let corners = (0..=4).map(|i| polygon.vertices[i * r].clone()).collect();
        let path = eased_polygon(corners, a.tau)?;
        return Ok(Loop { polygon, rectangle: Some(rect), path });
    }
    if let (Some(center), Some(radius)) = (&a.center, a.radius) {
        let center = parse_fixed::<2>(center, "center")?;
        ensure!(radius.is_finite() && radius > 0.0, "radius must be positive");
        let m = 4 * a.resolution;
        let vertices = (0..=m)
            .map(|i| {
                let t = std::f64::consts::TAU * (i % m) as f64 / m as f64;
                let mut p = base.clone();
                p[plane.0] = center[0] + radius * t.cos();
                p[plane.1] = center[1] + radius * t.sin();
                p
            })
            .collect();
        let path = PathSpec::circle(base, plane, center, radius, a.tau, false)?;
        return Ok(Loop { polygon: LoopSpec::new(vertices, level), rectangle: None, path });
    }
    let text = a.vertices.as_deref().expect("one shape is present");
    let vertices: Vec<Vec<f64>> = text.split(';').map(|v| parse_list(v, "vertices")).collect::<anyhow::Result<_>>()?;
    ensure!(vertices.iter().all(|v| v.len() == n_params), "every vertex needs {n_params} value(s)");
    let polygon = LoopSpec::closed(vertices, level);
    let path = eased_polygon(polygon.vertices.clone(), a.tau)?;
    Ok(Loop { polygon, rectangle: None, path })
}

/// Closed polygon traversed with equal time per edge and `u − sin(2πu)/2π` easing on each
/// edge, so the velocity is continuous and vanishes at every vertex. Constant-speed corners
/// would put kicks into the gauge field `K`.
fn eased_polygon(vertices: Vec<Vec<f64>>, tau: f64) -> anyhow::Result<PathSpec> {
    let edges = vertices.len().saturating_sub(1);
    ensure!(edges >= 1, "a loop needs at least two vertices");
    let path = PathSpec::parametric(tau, true, move |t| {
        let x = (t / tau).clamp(0.0, 1.0) * edges as f64;
        let i = (x.floor() as usize).min(edges - 1);
        let u = x - i as f64;
        let s = u - (std::f64::consts::TAU * u).sin() / std::f64::consts::TAU;
        vertices[i].iter().zip(&vertices[i + 1]).map(|(a, b)| a + (b - a) * s).collect()
    })?;
    Ok(path)
}

fn steps_for(a: &PathArgs, m: &ModelFamily, start: &[f64]) -> anyhow::Result<usize> {
    match a.steps {
        Some(0) => bail!("steps must be at least 1"),
        Some(n) => Ok(n),
        None => Ok(recommended_steps(a.tau, m.eigensystem(start)?.spectral_radius())),
    }
}

fn cmd_berry(a: BerryArgs) -> anyhow::Result<()> {
    let p = &a.path;
    let m = load_model(&p.model, p.level)?;
    let lp = build_loop(p, m.n_params)?;
    let gamma_line = berry_phase_loop(&m, &lp.polygon)?;
    println!("gamma_line = {gamma_line:+.12}");
    if let Some(rect) = &lp.rectangle {
        let flux = curvature_flux(&m, rect, p.level, None)?;
        println!("flux       = {flux:+.12}");
        println!("|gamma_line + flux| = {:.3e}", (gamma_line + flux).abs());
    }
    if !a.no_sim {
        let steps = steps_for(p, &m, &lp.polygon.vertices[0])?;
        let r = adiabatic_phase(&m, &lp.path, p.level, steps)?;
        println!("gamma_sim  = {:+.12} (tau = {}, {steps} steps)", r.gamma_sim, p.tau);
        println!("|gamma_sim - gamma_line| = {:.3e}", (r.gamma_sim - r.gamma_line).abs());
        println!("max W-norm drift = {:.3e}", r.evolution.max_norm_drift());
    }
    Ok(())
}

fn cmd_evolve(a: EvolveArgs) -> anyhow::Result<()> {
    let p = &a.path;
    let m = load_model(&p.model, p.level)?;
    let lp = build_loop(p, m.n_params)?;
    let start = lp.path.point(0.0);
    let steps = steps_for(p, &m, &start)?;
    let psi0 = m.eigensystem(&start)?.psi(p.level).into_owned();
    let r = evolve(&m, &lp.path, &psi0, steps)?;
    let mut csv = String::from("t");
    for i in 1..=m.dim {
        write!(csv, ",re_psi_{i},im_psi_{i}").expect("write to String");
    }
    csv.push_str(",w_norm\n");
    for ((t, psi), w) in r.times.iter().zip(&r.states).zip(&r.w_norms) {
        write!(csv, "{t:.12e}").expect("write to String");
        for z in psi.iter() {
            write!(csv, ",{:.12e},{:.12e}", z.re, z.im).expect("write to String");
        }
        writeln!(csv, ",{w:.15e}").expect("write to String");
    }
    match &a.out {
        Some(path) => {
            std::fs::write(path, csv).with_context(|| format!("cannot write {}", path.display()))?;
            println!("wrote {} ({} steps, max W-norm drift {:.3e})", path.display(), steps, r.max_norm_drift());
        }
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> anyhow::Result<()> {
    let suite = match a.suite {
        SuiteArg::Fast => Suite::Fast,
        SuiteArg::Full => Suite::Full,
    };
    println!("verify suite {:?}, seed {}", suite, a.seed);
    let checks = run_suite(suite, a.seed, |c| println!("{c}"));
    let failed = checks.iter().filter(|c| !c.passed()).count();
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        return Err(VerifyFailed { failed, total: checks.len() }.into());
    }
    Ok(())
}
