//! `moebiuskit` command-line front end.
//!
//! Exit codes: 0 success, 1 property failure, 2 usage, 3 I/O, 4 search not
//! found, 5 validation failure.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use moebiuskit::asymptotic::{trace_asymptotic, AsymptoticError, HeightGrid, Preset, SurfacePatch};
use moebiuskit::bound::{lower_bound, t0};
use moebiuskit::constructions::{
    limit_study, pl_to_obj, smooth_family_with, strip_to_obj, triangular_band, triangular_strip, ConstructionError,
    SmoothingOptions, CSV_HEADER,
};
use moebiuskit::format::sig17;
use moebiuskit::strip_model::{strip_from_json, strip_to_json, validate_foliation_with, FoliationTolerances};
use moebiuskit::t_pattern::{find_t_pattern_with, SearchError, SearchOptions};
use moebiuskit::verify::{self, Suite};
use moebiuskit::Exec;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "moebiuskit", version, about = "Paper Moebius band toolkit")]
struct Cli {
    /// Run every data-parallel loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Aspect-ratio lower bound tools.
    Bound {
        #[command(subcommand)]
        command: BoundCommand,
    },
    /// Search a strip for an embedded T-pattern.
    Tpattern {
        /// Strip JSON file.
        #[arg(long)]
        strip: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Report file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the triangular band or a smoothed member of its family.
    Construct {
        #[arg(value_enum)]
        kind: Kind,
        /// Smoothing parameter in (0, 0.25]; required for `smoothed`.
        #[arg(long)]
        eps: Option<f64>,
        /// Number of bends of a smoothed strip.
        #[arg(long, default_value_t = 512)]
        samples: usize,
        /// OBJ mesh output.
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// Strip JSON output.
        #[arg(long)]
        strip: Option<PathBuf>,
    },
    /// Run the seeded property suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report file in addition to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure smoothed bands against the triangular band.
    LimitStudy {
        /// Strictly decreasing comma-separated list in (0, 0.25].
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        /// CSV output; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trace an asymptotic curve on a height-field patch.
    Trace {
        /// Analytic preset: plane, parabolic-cylinder, cylinder, cone, sphere.
        #[arg(long, conflicts_with = "grid")]
        preset: Option<String>,
        /// Grid CSV with `x,y,z` rows.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Patch radius for presets.
        #[arg(long, default_value_t = 0.8)]
        radius: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        x: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        y: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long, default_value_t = 1.0)]
        max_len: f64,
        /// CSV output; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BoundCommand {
    /// Tabulate alpha, beta and the lower bound over a range of t.
    Sweep {
        #[arg(long, allow_negative_numbers = true)]
        t_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        t_max: f64,
        #[arg(long)]
        steps: usize,
        /// CSV output; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Triangular,
    Smoothed,
}

enum Failure {
    Property(String),
    Usage(String),
    Io(String),
    NotFound(String),
    Validation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Property(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
            Failure::NotFound(_) => 4,
            Failure::Validation(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Property(m) | Failure::Usage(m) | Failure::Io(m) | Failure::NotFound(m) | Failure::Validation(m) => m,
        }
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
fn write_atomic(path: &Path, contents: &str) -> Outcome {
    let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", path.display()));
    let name = path
        .file_name()
        .ok_or_else(|| Failure::Io(format!("{}: not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(contents.as_bytes()).and_then(|_| f.sync_all()))
        .and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

fn emit(out: Option<&Path>, contents: &str) -> Outcome {
    match out {
        Some(p) => write_atomic(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn bound_sweep(t_min: f64, t_max: f64, steps: usize, out: Option<&Path>) -> Outcome {
    if steps < 2 {
        return Err(usage(format!("--steps must be at least 2, got {steps}")));
    }
    if !(t_min.is_finite() && t_max.is_finite() && t_min < t_max) {
        return Err(usage(format!("need finite t-min < t-max, got [{t_min}, {t_max}]")));
    }
    let mut ts: Vec<f64> = (0..steps)
        .map(|i| {
            if i + 1 == steps {
                t_max
            } else {
                t_min + (t_max - t_min) * i as f64 / (steps - 1) as f64
            }
        })
        .collect();
    let opt = t0();
    if (t_min..=t_max).contains(&opt) && !ts.contains(&opt) {
        let at = ts.partition_point(|&t| t < opt);
        ts.insert(at, opt);
    }
    let mut csv = String::from("t,alpha,beta,lower_bound,branch\n");
    for t in ts {
        let r = lower_bound(t);
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            sig17(t),
            sig17(r.alpha),
            sig17(r.beta),
            sig17(r.lower_bound),
            r.active_branch.as_str()
        );
    }
    emit(out, &csv)
}

fn fmt_vec(v: moebiuskit::Vec3) -> String {
    format!("{} {} {}", sig17(v.x), sig17(v.y), sig17(v.z))
}

fn tpattern(strip_path: &Path, tol: f64, out: Option<&Path>, exec: Exec) -> Outcome {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(usage(format!("--tol must be positive, got {tol}")));
    }
    let text = read_file(strip_path)?;
    let strip = strip_from_json(&text).map_err(|e| usage(format!("{}: {e}", strip_path.display())))?;
    let report = validate_foliation_with(&strip, &FoliationTolerances::default(), exec)
        .map_err(|e| Failure::Validation(e.to_string()))?;
    if !report.is_valid() {
        let first = report
            .violations
            .iter()
            .take(3)
            .map(|v| format!("{v:?}"))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Failure::Validation(format!(
            "strip fails foliation validation ({} violations): {first}",
            report.violations.len()
        )));
    }
    let opts = SearchOptions {
        tol,
        exec,
        ..SearchOptions::default()
    };
    let p = find_t_pattern_with(&strip, &opts).map_err(|e| match e {
        SearchError::NotFound => Failure::NotFound("no T-pattern certified at this resolution".into()),
        other => Failure::NotFound(other.to_string()),
    })?;
    let mut r = String::new();
    let _ = writeln!(r, "# moebiuskit {VERSION} tpattern tol={tol:e}");
    let _ = writeln!(r, "strip = {}", strip_path.display());
    let _ = writeln!(r, "samples = {}", strip.len());
    let _ = writeln!(r, "lambda = {}", sig17(strip.lambda));
    let _ = writeln!(r, "pair = {} {}", sig17(p.source.x0), sig17(p.source.x1));
    let _ = writeln!(r, "sphere = {} {}", sig17(p.theta), sig17(p.phi));
    for (i, b) in p.bends.iter().enumerate() {
        let _ = writeln!(r, "bend{i} = {} -> {}", fmt_vec(b.start), fmt_vec(b.end));
    }
    let _ = writeln!(r, "residual_g = {}", sig17(p.residual_g));
    let _ = writeln!(r, "residual_h = {}", sig17(p.residual_h));
    let _ = writeln!(r, "min_distance = {}", sig17(p.min_distance));
    let _ = writeln!(r, "cell_winding = {}", p.cell_winding);
    let _ = writeln!(r, "meridian_winding = {}", sig17(p.certificate.w));
    emit(out, &r)
}

fn construct(kind: Kind, eps: Option<f64>, samples: usize, mesh: Option<&Path>, strip_out: Option<&Path>) -> Outcome {
    let (obj, strip) = match (kind, eps) {
        (Kind::Triangular, Some(_)) => return Err(usage("--eps applies only to `smoothed`")),
        (Kind::Triangular, None) => (pl_to_obj(&triangular_band()), triangular_strip(32)),
        (Kind::Smoothed, None) => return Err(usage("`smoothed` requires --eps")),
        (Kind::Smoothed, Some(e)) => {
            let opts = SmoothingOptions {
                samples,
                ..SmoothingOptions::default()
            };
            let strip = smooth_family_with(e, &opts).map_err(|err| match err {
                ConstructionError::BadEpsilon(_) | ConstructionError::BadSampleCount(_) => usage(err.to_string()),
                other => Failure::Validation(other.to_string()),
            })?;
            (strip_to_obj(&strip), strip)
        }
    };
    if let Some(p) = mesh {
        write_atomic(p, &obj)?;
    }
    if let Some(p) = strip_out {
        write_atomic(p, &strip_to_json(&strip))?;
    }
    println!(
        "constructed {} band: lambda = {}, {} bends",
        match kind {
            Kind::Triangular => "triangular",
            Kind::Smoothed => "smoothed",
        },
        sig17(strip.lambda),
        strip.len()
    );
    Ok(())
}

fn run_verify(suite: &str, seed: u64, out: Option<&Path>, exec: Exec) -> Outcome {
    let suite = Suite::from_name(suite)
        .ok_or_else(|| usage(format!("unknown suite `{suite}`; expected one of {}", Suite::NAMES.join(", "))))?;
    let report = verify::run(suite, seed, exec);
    let text = report.render();
    print!("{text}");
    if let Some(p) = out {
        write_atomic(p, &text)?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Property("some properties failed".into()))
    }
}

fn run_limit_study(eps: &[f64], out: Option<&Path>, exec: Exec) -> Outcome {
    if eps.is_empty() {
        return Err(usage("--eps needs at least one value"));
    }
    if let Some(bad) = eps.iter().find(|e| !(**e > 0.0 && **e <= 0.25)) {
        return Err(usage(format!("eps values must lie in (0, 0.25], got {bad}")));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(usage("eps values must be strictly decreasing"));
    }
    let recs = limit_study(eps, exec).map_err(|e| match e {
        ConstructionError::Search(s) => Failure::NotFound(s.to_string()),
        other => Failure::Validation(other.to_string()),
    })?;
    let mut csv = format!("{CSV_HEADER}\n");
    for r in &recs {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    emit(out, &csv)
}

#[allow(clippy::too_many_arguments)]
fn trace(
    preset: Option<&str>,
    grid: Option<&Path>,
    radius: f64,
    x: f64,
    y: f64,
    step: f64,
    max_len: f64,
    out: Option<&Path>,
) -> Outcome {
    let h = 1e-4;
    let patch: SurfacePatch = match (preset, grid) {
        (Some(name), None) => {
            let p = Preset::from_name(name).ok_or_else(|| {
                usage(format!("unknown preset `{name}`; expected one of {}", Preset::NAMES.join(", ")))
            })?;
            p.patch(radius, h).map_err(|e| usage(e.to_string()))?
        }
        (None, Some(path)) => {
            let text = read_file(path)?;
            let g = HeightGrid::from_csv(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            SurfacePatch::from_grid(g).map_err(|e| usage(e.to_string()))?
        }
        _ => return Err(usage("give exactly one of --preset or --grid")),
    };
    let tr = trace_asymptotic(&patch, [x, y], step, max_len).map_err(|e| match e {
        AsymptoticError::FlatPointReached { .. } => Failure::NotFound(e.to_string()),
        other => usage(other.to_string()),
    })?;
    let mut csv = String::from("x,y,z,nx,ny,nz\n");
    for (p, n) in tr.points.iter().zip(&tr.normals) {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            sig17(p.x),
            sig17(p.y),
            sig17(p.z),
            sig17(n.x),
            sig17(n.y),
            sig17(n.z)
        );
    }
    eprintln!(
        "trace: {} points, length {}, chord deviation {:.3e}, stop {:?}",
        tr.points.len(),
        sig17(tr.length),
        tr.chord_deviation(),
        tr.stop
    );
    emit(out, &csv)
}

/// Reads `MOEBIUSKIT_THREADS` and sizes the rayon pool. Sequential builds
/// validate the value and ignore it.
fn configure_threads() -> Outcome {
    if let Ok(v) = std::env::var("MOEBIUSKIT_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| usage(format!("MOEBIUSKIT_THREADS must be a positive integer, got `{v}`")))?;
        #[cfg(feature = "parallel")]
        {
            // Fails only if a pool already exists, which cannot happen this early.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        #[cfg(not(feature = "parallel"))]
        let _ = n;
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    configure_threads()?;
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match cli.command {
        Command::Bound {
            command: BoundCommand::Sweep { t_min, t_max, steps, out },
        } => bound_sweep(t_min, t_max, steps, out.as_deref()),
        Command::Tpattern { strip, tol, out } => tpattern(&strip, tol, out.as_deref(), exec),
        Command::Construct {
            kind,
            eps,
            samples,
            mesh,
            strip,
        } => construct(kind, eps, samples, mesh.as_deref(), strip.as_deref()),
        Command::Verify { suite, seed, out } => run_verify(&suite, seed, out.as_deref(), exec),
        Command::LimitStudy { eps, out } => run_limit_study(&eps, out.as_deref(), exec),
        Command::Trace {
            preset,
            grid,
            radius,
            x,
            y,
            step,
            max_len,
            out,
        } => trace(preset.as_deref(), grid.as_deref(), radius, x, y, step, max_len, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
