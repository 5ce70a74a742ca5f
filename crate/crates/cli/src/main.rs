//! Command-line surface for the projection library: quadrature projection,
//! exact Maclaurin tables, measurement-protocol simulation, phase-scan
//! reconstruction, truncation-error analysis, and source comparison.
//!
//! Exit codes: 0 success, 2 invalid flags or unparseable function, 3
//! configuration violation, 4 Fock cutoff overflow (message carries a
//! suggested dim), 5 comparison tolerance exceeded, 1 anything else.

mod svg;

use std::path::{Path, PathBuf};

use bargmann::coefficients::Basis;
use bargmann::protocol::{
    run_magnitude_protocol, run_reconstruction, CoefficientLoading, EstimationMode,
    PhaseObjective, ProtocolConfig,
};
use bargmann::quadrature::{self, radial_truncation_factor, Method, QuadratureConfig};
use bargmann::scalar::factorial;
use bargmann::{Error as LibError, FunctionSpec64, C64};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "bargmann",
    version,
    about = "Projection coefficients of entire functions, by Gaussian quadrature and by \
             simulated photon-number measurement"
)]
struct Cli {
    /// Suppress wall-clock metadata in SVG output so plots are
    /// byte-identical across reruns.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Project a function onto the Gaussian-weighted monomial basis by
    /// numerical quadrature over a finite disk.
    Project(ProjectArgs),
    /// Print the exact Maclaurin coefficient table.
    Exact(ExactArgs),
    /// Simulate the photon-number magnitude-estimation stage.
    Simulate(SimulateArgs),
    /// Run the full reconstruction: magnitude stage plus interferometric
    /// phase scans.
    PhaseScan(PhaseScanArgs),
    /// Tabulate per-degree norm terms and cumulative truncation error.
    Truncation(TruncationArgs),
    /// Compare two coefficient sources and gate on a deviation tolerance.
    Compare(CompareArgs),
}

/// Function selector: a builtin name (exp, expi, sin, cos),
/// `coherent:RE[,IM]`, `series:RE[,IM];RE[,IM];...`, inline JSON
/// (`{"kind":...}`), or `@path` to a JSON file.
#[derive(Args)]
struct FunctionArg {
    /// Builtin name (exp, expi, sin, cos), `coherent:RE[,IM]`,
    /// `series:RE[,IM];...`, inline JSON, or `@path` to a JSON file.
    #[arg(long)]
    function: String,
    /// Highest degree N; defaults to the function's natural degree
    /// (series length minus one, 10 for builtins).
    #[arg(long)]
    max_degree: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Riemann,
    Gauss,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    /// Least-squares fit of scan probabilities.
    Ls,
    /// Maximum-likelihood fit of scan counts.
    Ml,
}

#[derive(Clone, Copy, ValueEnum)]
enum LoadingArg {
    /// Load Maclaurin values directly as Fock amplitudes.
    Direct,
    /// Convert to the orthonormal expansion before loading.
    Fock,
}

#[derive(Args)]
struct ProjectArgs {
    #[command(flatten)]
    function: FunctionArg,
    #[arg(long, value_enum, default_value = "gauss")]
    method: MethodArg,
    /// Integration disk radius R.
    #[arg(long, default_value_t = 6.0)]
    radius: f64,
    #[arg(long, default_value_t = 160)]
    radial_nodes: usize,
    #[arg(long, default_value_t = 64)]
    angular_nodes: usize,
    /// Primary output path; sibling outputs (plots, reports) derive from it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also emit a bar chart of |c_n| and a semilog decay plot.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    function: FunctionArg,
    /// Primary output path; sibling outputs (plots, reports) derive from it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    function: FunctionArg,
    /// Shots M for the magnitude stage.
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    /// Fock cutoff; defaults to max(N + 8, 16).
    #[arg(long)]
    dim: Option<usize>,
    /// PRNG seed; every sample drawn by the run derives from it.
    #[arg(long)]
    seed: u64,
    /// Detector efficiency in (0, 1].
    #[arg(long)]
    efficiency: Option<f64>,
    #[arg(long, value_enum, default_value = "direct")]
    loading: LoadingArg,
    /// Primary output path; sibling outputs (plots, reports) derive from it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also emit an overlay of exact bars and estimates with 3-sigma
    /// whiskers.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct PhaseScanArgs {
    #[command(flatten)]
    function: FunctionArg,
    /// Scan points J per degree.
    #[arg(long, default_value_t = 32)]
    scan_points: usize,
    #[arg(long, default_value_t = 100_000)]
    shots_per_point: u64,
    /// Ancilla displacement magnitude r.
    #[arg(long, default_value_t = 0.8)]
    r: f64,
    /// PRNG seed; every sample drawn by the run derives from it.
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "ls")]
    objective: ObjectiveArg,
    /// Shots for the magnitude stage.
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    /// Fock cutoff; defaults to max(N + ceil(4r) + 4, 16).
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, value_enum, default_value = "direct")]
    loading: LoadingArg,
    /// Magnitude threshold tau below which phases are not scanned;
    /// defaults to 1e-3 sqrt(norm_sq).
    #[arg(long)]
    threshold: Option<f64>,
    /// Primary output path; sibling outputs (plots, reports) derive from it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also emit a polar plot of the reconstructed coefficients.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct TruncationArgs {
    #[command(flatten)]
    function: FunctionArg,
    /// Extra degrees summed past N when estimating the tail.
    #[arg(long, default_value_t = 10)]
    tail: usize,
    /// Primary output path; sibling outputs (plots, reports) derive from it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also emit a twin semilog plot of term and cumulative series.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    function: FunctionArg,
    /// Exactly two of: exact, quadrature, simulated (comma separated).
    #[arg(long, value_delimiter = ',')]
    sources: Vec<String>,
    /// Gate: exit 5 when the deviation exceeds this. Interpreted as an
    /// absolute bound for deterministic pairs and in sigma units when a
    /// simulated source is present.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_enum, default_value = "gauss")]
    method: MethodArg,
    #[arg(long, default_value_t = 6.0)]
    radius: f64,
    #[arg(long, default_value_t = 160)]
    radial_nodes: usize,
    #[arg(long, default_value_t = 64)]
    angular_nodes: usize,
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    /// Required when a simulated source is requested.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dim: Option<usize>,
    /// Primary output path; sibling outputs (plots, reports) derive from it.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }
}

impl From<LibError> for CliError {
    fn from(err: LibError) -> Self {
        let code = match &err {
            LibError::CutoffOverflow { .. } => 4,
            LibError::InvalidFunction(_) | LibError::Json(_) => 2,
            _ => 3,
        };
        CliError::new(code, err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::new(1, format!("io: {err}"))
    }
}

fn main() {
    let cli = Cli::parse();
    let deterministic = cli.deterministic;
    let result = match cli.command {
        Command::Project(args) => cmd_project(args, deterministic),
        Command::Exact(args) => cmd_exact(args),
        Command::Simulate(args) => cmd_simulate(args, deterministic),
        Command::PhaseScan(args) => cmd_phase_scan(args, deterministic),
        Command::Truncation(args) => cmd_truncation(args, deterministic),
        Command::Compare(args) => cmd_compare(args),
    };
    match result {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {}", err.message);
            std::process::exit(err.code);
        }
    }
}

/// Resolves `--function` into a spec; any parse failure is a usage error.
fn parse_function(raw: &str) -> Result<FunctionSpec64, CliError> {
    let usage = |msg: String| CliError::new(2, msg);
    let lower = raw.to_ascii_lowercase();
    match lower.as_str() {
        "exp" => return Ok(FunctionSpec64::Exp),
        "expi" => return Ok(FunctionSpec64::ExpI),
        "sin" => return Ok(FunctionSpec64::Sin),
        "cos" => return Ok(FunctionSpec64::Cos),
        _ => {}
    }
    if let Some(rest) = lower.strip_prefix("coherent:") {
        let alpha = parse_complex(rest)
            .ok_or_else(|| usage(format!("cannot parse coherent amplitude from '{rest}'")))?;
        return FunctionSpec64::coherent(alpha).map_err(|e| usage(e.to_string()));
    }
    if let Some(rest) = lower.strip_prefix("series:") {
        let mut coeffs = Vec::new();
        for item in rest.split(';') {
            let v = parse_complex(item)
                .ok_or_else(|| usage(format!("cannot parse series entry '{item}'")))?;
            coeffs.push(v);
        }
        return FunctionSpec64::series(coeffs).map_err(|e| usage(e.to_string()));
    }
    if raw.trim_start().starts_with('{') {
        return FunctionSpec64::from_json(raw).map_err(|e| usage(e.to_string()));
    }
    if let Some(path) = raw.strip_prefix('@') {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read function file '{path}': {e}")))?;
        return FunctionSpec64::from_json(&text).map_err(|e| usage(e.to_string()));
    }
    Err(usage(format!(
        "unknown function '{raw}'; expected exp, expi, sin, cos, coherent:RE[,IM], \
         series:..., inline JSON, or @file"
    )))
}

/// `RE` or `RE,IM` into a complex number.
fn parse_complex(s: &str) -> Option<C64> {
    let mut parts = s.split(',');
    let re: f64 = parts.next()?.trim().parse().ok()?;
    let im: f64 = match parts.next() {
        Some(p) => p.trim().parse().ok()?,
        None => 0.0,
    };
    if parts.next().is_some() {
        return None;
    }
    Some(C64::new(re, im))
}

/// Output directory: BARGMANN_OUT_DIR or the working directory.
fn out_dir() -> PathBuf {
    std::env::var_os("BARGMANN_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn default_out(command: &str, label: &str) -> PathBuf {
    out_dir().join(format!("{command}_{label}.csv"))
}

/// Filename-safe tag for default output paths.
fn slug(f: &FunctionSpec64) -> &'static str {
    match f {
        FunctionSpec64::Exp => "exp",
        FunctionSpec64::ExpI => "expi",
        FunctionSpec64::Sin => "sin",
        FunctionSpec64::Cos => "cos",
        FunctionSpec64::Coherent(_) => "coherent",
        FunctionSpec64::Series(_) => "series",
    }
}

/// Sibling path with the stem extended and extension replaced.
fn sibling(primary: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = primary.file_stem().unwrap_or_default().to_string_lossy();
    primary.with_file_name(format!("{stem}{suffix}.{ext}"))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents)?;
    Ok(())
}

/// 15 significant digits; `nan` spelled lowercase for undefined entries.
fn sig(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.14e}")
    }
}

/// Writes the run manifest next to the primary output and returns its
/// path. Every written file, the manifest included, is listed.
fn write_manifest(
    primary: &Path,
    command: &str,
    config: serde_json::Value,
    function: &FunctionSpec64,
    mut outputs: Vec<PathBuf>,
    seed: Option<u64>,
) -> Result<PathBuf, CliError> {
    let path = sibling(primary, "_manifest", "json");
    outputs.push(path.clone());
    let function_echo: serde_json::Value = serde_json::from_str(&function.to_json())
        .map_err(|e| CliError::new(1, format!("function echo: {e}")))?;
    let manifest = json!({
        "command": command,
        "config": config,
        "input_function": function_echo,
        "outputs": outputs
            .iter()
            .map(|p| p.to_string_lossy().into_owned())
            .collect::<Vec<_>>(),
        "seed": seed,
        "tool_version": env!("CARGO_PKG_VERSION"),
    });
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::new(1, format!("manifest serialization: {e}")))?;
    text.push('\n');
    write_file(&path, &text)?;
    Ok(path)
}

fn resolve(function: &FunctionArg) -> Result<(FunctionSpec64, usize), CliError> {
    let f = parse_function(&function.function)?;
    let n = function.max_degree.unwrap_or_else(|| f.default_max_degree());
    Ok((f, n))
}

fn method_of(arg: MethodArg) -> Method {
    match arg {
        MethodArg::Riemann => Method::RiemannPolar,
        MethodArg::Gauss => Method::GaussRadial,
    }
}

fn cmd_project(args: ProjectArgs, deterministic: bool) -> Result<(), CliError> {
    let (f, n_max) = resolve(&args.function)?;
    let method = method_of(args.method);
    let cfg = QuadratureConfig::new(method, args.radius, args.radial_nodes, args.angular_nodes)?;
    let result = quadrature::project(&f, n_max, &cfg)?;
    let out = args.out.unwrap_or_else(|| default_out("project", slug(&f)));
    write_file(&out, &result.to_csv())?;
    let mut outputs = vec![out.clone()];
    if args.plot {
        let abs: Vec<f64> = result
            .coefficients
            .values()
            .iter()
            .map(|c| c.norm())
            .collect();
        let bars = sibling(&out, "", "svg");
        write_file(
            &bars,
            &svg::bar_chart(&format!("|c_n| of {}", f.label()), &abs, deterministic),
        )?;
        let decay = sibling(&out, "_decay", "svg");
        write_file(
            &decay,
            &svg::semilog_chart(&format!("decay of |c_n|, {}", f.label()), &abs, deterministic),
        )?;
        outputs.push(bars);
        outputs.push(decay);
    }
    write_manifest(
        &out,
        "project",
        json!({
            "max_degree": n_max,
            "method": match method { Method::RiemannPolar => "riemann", Method::GaussRadial => "gauss" },
            "radius": args.radius,
            "radial_nodes": args.radial_nodes,
            "angular_nodes": args.angular_nodes,
        }),
        &f,
        outputs,
        None,
    )?;
    Ok(())
}

fn cmd_exact(args: ExactArgs) -> Result<(), CliError> {
    let (f, n_max) = resolve(&args.function)?;
    let coeffs = f.exact_coefficients(n_max);
    let mut csv = String::from("n,re,im,abs\n");
    for (n, c) in coeffs.values().iter().enumerate() {
        csv.push_str(&format!("{n},{},{},{}\n", sig(c.re), sig(c.im), sig(c.norm())));
    }
    let out = args.out.unwrap_or_else(|| default_out("exact", slug(&f)));
    write_file(&out, &csv)?;
    write_manifest(
        &out,
        "exact",
        json!({ "max_degree": n_max }),
        &f,
        vec![out.clone()],
        None,
    )?;
    Ok(())
}

fn loading_of(arg: LoadingArg) -> CoefficientLoading {
    match arg {
        LoadingArg::Direct => CoefficientLoading::MaclaurinDirect,
        LoadingArg::Fock => CoefficientLoading::FockConverted,
    }
}

fn cmd_simulate(args: SimulateArgs, deterministic: bool) -> Result<(), CliError> {
    let (f, n_max) = resolve(&args.function)?;
    let mut cfg = ProtocolConfig::new(n_max, args.seed);
    cfg.shots_magnitude = args.shots;
    cfg.loading = loading_of(args.loading);
    cfg.efficiency = args.efficiency;
    if let Some(dim) = args.dim {
        cfg.dim = dim;
    }
    let stage = run_magnitude_protocol(&f, &cfg)?;
    let mut csv = String::from("n,abs,stderr\n");
    for est in &stage.estimates {
        csv.push_str(&format!("{},{},{}\n", est.n, sig(est.abs_c), sig(est.stderr)));
    }
    let out = args.out.unwrap_or_else(|| default_out("simulate", slug(&f)));
    write_file(&out, &csv)?;
    let mut outputs = vec![out.clone()];
    if args.plot {
        let exact = match cfg.loading {
            CoefficientLoading::MaclaurinDirect => f.exact_coefficients(n_max),
            CoefficientLoading::FockConverted => f
                .exact_coefficients(n_max)
                .to_basis(Basis::FockOrthonormal)?,
        };
        let exact_abs: Vec<f64> = exact.values().iter().map(|c| c.norm()).collect();
        let ests: Vec<(f64, f64)> = stage.estimates.iter().map(|e| (e.abs_c, e.stderr)).collect();
        let plot = sibling(&out, "_overlay", "svg");
        write_file(
            &plot,
            &svg::overlay_chart(
                &format!("simulated |c_n| vs exact, {}", f.label()),
                &exact_abs,
                &ests,
                deterministic,
            ),
        )?;
        outputs.push(plot);
    }
    write_manifest(
        &out,
        "simulate",
        json!({
            "max_degree": n_max,
            "shots": args.shots,
            "dim": cfg.dim,
            "efficiency": args.efficiency,
            "loading": match cfg.loading {
                CoefficientLoading::MaclaurinDirect => "direct",
                CoefficientLoading::FockConverted => "fock",
            },
        }),
        &f,
        outputs,
        Some(args.seed),
    )?;
    Ok(())
}

fn cmd_phase_scan(args: PhaseScanArgs, deterministic: bool) -> Result<(), CliError> {
    let (f, n_max) = resolve(&args.function)?;
    let mut cfg = ProtocolConfig::new(n_max, args.seed);
    cfg.scan_points = args.scan_points;
    cfg.shots_per_point = args.shots_per_point;
    cfg.shots_magnitude = args.shots;
    cfg.displacement_radius = args.r;
    cfg.loading = loading_of(args.loading);
    cfg.magnitude_threshold = args.threshold;
    cfg.objective = match args.objective {
        ObjectiveArg::Ls => PhaseObjective::LeastSquares,
        ObjectiveArg::Ml => PhaseObjective::MaxLikelihood,
    };
    cfg.dim = args.dim.unwrap_or_else(|| cfg.phase_headroom().max(16));
    let recon = run_reconstruction(&f, &cfg)?;
    eprintln!(
        "stage timings: magnitude {:?}, phase {:?}",
        recon.magnitude_elapsed, recon.phase_elapsed
    );

    let mut csv = String::from("n,re,im,abs,phase,stderr_abs,residual,below_threshold\n");
    for est in &recon.magnitudes.estimates {
        let n = est.n;
        let value = recon.coefficients.get(n);
        let scan = recon.scans.iter().find(|s| s.n == n);
        let below = recon.below_threshold[n];
        let phase = if below {
            f64::NAN
        } else if n == recon.reference_index {
            0.0
        } else {
            scan.and_then(|s| s.phase).unwrap_or(f64::NAN)
        };
        let residual = if n == recon.reference_index {
            0.0
        } else {
            scan.map(|s| s.residual).unwrap_or(f64::NAN)
        };
        csv.push_str(&format!(
            "{n},{},{},{},{},{},{},{}\n",
            sig(value.re),
            sig(value.im),
            sig(est.abs_c),
            sig(phase),
            sig(est.stderr),
            sig(residual),
            u8::from(below)
        ));
    }
    let out = args.out.unwrap_or_else(|| default_out("phase_scan", slug(&f)));
    write_file(&out, &csv)?;
    let report_path = sibling(&out, "_report", "json");
    let mut report = serde_json::to_string_pretty(&recon.to_json())
        .map_err(|e| CliError::new(1, format!("report serialization: {e}")))?;
    report.push('\n');
    write_file(&report_path, &report)?;
    let mut outputs = vec![out.clone(), report_path];
    if args.plot {
        let points: Vec<(f64, Option<f64>)> = recon
            .coefficients
            .values()
            .iter()
            .zip(&recon.below_threshold)
            .map(|(c, &below)| (c.norm(), (!below).then(|| c.arg())))
            .collect();
        let plot = sibling(&out, "_polar", "svg");
        write_file(
            &plot,
            &svg::polar_plot(&format!("reconstructed c_n, {}", f.label()), &points, deterministic),
        )?;
        outputs.push(plot);
    }
    write_manifest(
        &out,
        "phase-scan",
        json!({
            "max_degree": n_max,
            "scan_points": args.scan_points,
            "shots_per_point": args.shots_per_point,
            "shots": args.shots,
            "r": args.r,
            "dim": cfg.dim,
            "objective": match cfg.objective {
                PhaseObjective::LeastSquares => "ls",
                PhaseObjective::MaxLikelihood => "ml",
            },
            "loading": match cfg.loading {
                CoefficientLoading::MaclaurinDirect => "direct",
                CoefficientLoading::FockConverted => "fock",
            },
            "threshold": args.threshold,
        }),
        &f,
        outputs,
        Some(args.seed),
    )?;
    Ok(())
}

fn cmd_truncation(args: TruncationArgs, deterministic: bool) -> Result<(), CliError> {
    let (f, n_max) = resolve(&args.function)?;
    let top = n_max + args.tail;
    let coeffs = f.exact_coefficients(top);
    // term_k = |c_k|^2 k! for every degree up to the tail horizon; the
    // factorial guard turns an over-long tail into a config violation.
    let mut terms = Vec::with_capacity(top + 1);
    for (k, c) in coeffs.values().iter().enumerate() {
        terms.push(c.norm_sqr() * factorial::<f64>(k)?);
    }
    let mut csv = String::from("n,series_term,truncation_error\n");
    let mut rows = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        // Tail summed smallest-first so the cumulative error is stable.
        let tail_sum: f64 = terms[n + 1..].iter().rev().sum();
        let err = std::f64::consts::PI * tail_sum;
        rows.push((terms[n], err));
        csv.push_str(&format!("{n},{},{}\n", sig(terms[n]), sig(err)));
    }
    let out = args.out.unwrap_or_else(|| default_out("truncation", slug(&f)));
    write_file(&out, &csv)?;
    let mut outputs = vec![out.clone()];
    if args.plot {
        let series: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let cumulative: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let plot = sibling(&out, "_twin", "svg");
        write_file(
            &plot,
            &svg::twin_semilog(
                &format!("truncation analysis, {}", f.label()),
                "|c_n|^2 n!",
                &series,
                "cumulative error",
                &cumulative,
                deterministic,
            ),
        )?;
        outputs.push(plot);
    }
    write_manifest(
        &out,
        "truncation",
        json!({ "max_degree": n_max, "tail": args.tail }),
        &f,
        outputs,
        None,
    )?;
    Ok(())
}

/// One comparison side: per-degree complex values when available, always
/// per-degree magnitudes, and sigma widths on the simulated source.
struct Side {
    name: String,
    values: Option<Vec<C64>>,
    abs: Vec<f64>,
    sigma: Option<Vec<f64>>,
}

fn build_side(name: &str, f: &FunctionSpec64, n_max: usize, args: &CompareArgs) -> Result<Side, CliError> {
    match name {
        "exact" => {
            let c = f.exact_coefficients(n_max);
            Ok(Side {
                name: name.into(),
                abs: c.values().iter().map(|v| v.norm()).collect(),
                values: Some(c.values().to_vec()),
                sigma: None,
            })
        }
        "quadrature" => {
            let cfg = QuadratureConfig::new(
                method_of(args.method),
                args.radius,
                args.radial_nodes,
                args.angular_nodes,
            )?;
            let r = quadrature::project(f, n_max, &cfg)?;
            Ok(Side {
                name: name.into(),
                abs: r.coefficients.values().iter().map(|v| v.norm()).collect(),
                values: Some(r.coefficients.values().to_vec()),
                sigma: None,
            })
        }
        "simulated" => {
            let seed = args
                .seed
                .ok_or_else(|| CliError::new(2, "--seed is required for a simulated source"))?;
            let mut cfg = ProtocolConfig::new(n_max, seed);
            cfg.shots_magnitude = args.shots;
            if let Some(dim) = args.dim {
                cfg.dim = dim;
            }
            cfg.mode = EstimationMode::Sampled;
            let stage = run_magnitude_protocol(f, &cfg)?;
            Ok(Side {
                name: name.into(),
                values: None,
                abs: stage.estimates.iter().map(|e| e.abs_c).collect(),
                sigma: Some(stage.estimates.iter().map(|e| e.stderr).collect()),
            })
        }
        other => Err(CliError::new(
            2,
            format!("unknown source '{other}'; expected exact, quadrature, or simulated"),
        )),
    }
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let (f, n_max) = resolve(&args.function)?;
    if args.sources.len() != 2 {
        return Err(CliError::new(
            2,
            format!("--sources needs exactly two entries, got {}", args.sources.len()),
        ));
    }
    let mut left = build_side(&args.sources[0], &f, n_max, &args)?;
    let mut right = build_side(&args.sources[1], &f, n_max, &args)?;
    if left.abs.len() != right.abs.len() {
        return Err(CliError::new(
            2,
            format!(
                "source lengths differ: {} has {}, {} has {}",
                left.name,
                left.abs.len(),
                right.name,
                right.abs.len()
            ),
        ));
    }

    // A finite integration disk attenuates degree n by the truncation
    // factor, so the analytic side is scaled before an exact-vs-quadrature
    // comparison is meaningful.
    let pair = (left.name.as_str(), right.name.as_str());
    if pair == ("exact", "quadrature") || pair == ("quadrature", "exact") {
        let scale_side = if left.name == "exact" { &mut left } else { &mut right };
        if let Some(values) = scale_side.values.as_mut() {
            for (n, v) in values.iter_mut().enumerate() {
                *v *= radial_truncation_factor(n, args.radius);
            }
        }
        scale_side.abs = scale_side
            .values
            .as_ref()
            .expect("exact side carries values")
            .iter()
            .map(|v| v.norm())
            .collect();
    }

    let sigma_scaled = left.sigma.is_some() || right.sigma.is_some();
    let mut csv = String::from("n,left,right,abs_dev,scaled_dev\n");
    let mut max_abs = 0.0f64;
    let mut max_scaled = 0.0f64;
    for n in 0..left.abs.len() {
        let abs_dev = match (&left.values, &right.values) {
            (Some(l), Some(r)) if !sigma_scaled => (l[n] - r[n]).norm(),
            _ => (left.abs[n] - right.abs[n]).abs(),
        };
        let scaled_dev = if sigma_scaled {
            let s = left
                .sigma
                .as_ref()
                .or(right.sigma.as_ref())
                .map(|v| v[n])
                .unwrap_or(0.0);
            if abs_dev == 0.0 {
                0.0
            } else if s == 0.0 {
                f64::INFINITY
            } else {
                abs_dev / s
            }
        } else {
            let base = left.abs[n].max(f64::MIN_POSITIVE);
            abs_dev / base
        };
        max_abs = max_abs.max(abs_dev);
        max_scaled = max_scaled.max(scaled_dev);
        csv.push_str(&format!(
            "{n},{},{},{},{}\n",
            sig(left.abs[n]),
            sig(right.abs[n]),
            sig(abs_dev),
            if scaled_dev.is_infinite() { "inf".to_string() } else { sig(scaled_dev) }
        ));
    }
    let gate = if sigma_scaled { max_scaled } else { max_abs };
    let verdict = match args.tolerance {
        Some(tol) if gate > tol => "fail",
        Some(_) => "pass",
        None => "none",
    };
    csv.push_str(&format!(
        "# max_abs_dev={} max_scaled_dev={} scale={} tolerance={} verdict={}\n",
        sig(max_abs),
        if max_scaled.is_infinite() { "inf".to_string() } else { sig(max_scaled) },
        if sigma_scaled { "sigma" } else { "relative" },
        args.tolerance.map(sig).unwrap_or_else(|| "none".to_string()),
        verdict
    ));
    let out = args.out.clone().unwrap_or_else(|| default_out("compare", slug(&f)));
    write_file(&out, &csv)?;
    write_manifest(
        &out,
        "compare",
        json!({
            "max_degree": n_max,
            "sources": args.sources,
            "tolerance": args.tolerance,
            "method": match args.method { MethodArg::Riemann => "riemann", MethodArg::Gauss => "gauss" },
            "radius": args.radius,
            "radial_nodes": args.radial_nodes,
            "angular_nodes": args.angular_nodes,
            "shots": args.shots,
            "dim": args.dim,
        }),
        &f,
        vec![out.clone()],
        args.seed,
    )?;
    if verdict == "fail" {
        return Err(CliError::new(
            5,
            format!(
                "comparison deviation {} exceeds tolerance {} ({} scale)",
                sig(gate),
                sig(args.tolerance.unwrap_or(f64::NAN)),
                if sigma_scaled { "sigma" } else { "absolute" }
            ),
        ));
    }
    println!("max_abs_dev={} max_scaled_dev={}", sig(max_abs), sig(max_scaled));
    Ok(())
}
