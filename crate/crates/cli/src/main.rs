//! `ncd`: construct explicit NCDs, lift them to manifolds, verify the level
//! structure of `x1`, classify single slices and draw plane sections.
//!
//! Exit codes: 0 success or pass, 1 verification failure, 2 invalid input,
//! 3 internal error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ncd_core::arrangement::{Arrangement, NcdBudget};
use ncd_core::construct::{build, ConstructionInput, Variant};
use ncd_core::lift::{lift, load_manifold_or_arrangement, min_m, LiftedManifold};
use ncd_core::plot::{render_svg, PlotConfig};
use ncd_core::poly::parse_rational;
use ncd_core::verify::{classify_slice_with, run_suite, SliceBudget, VerifyConfig};
use ncd_core::{Error, Rational};

#[derive(Parser, Debug)]
#[command(
    name = "ncd",
    version,
    about = "Explicit normal-and-convenient domains and their lifted manifolds"
)]
struct Cli {
    /// Seed for every sampler.
    #[arg(long, global = true, env = "NCD_SEED", default_value_t = 42)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Build the arrangement for given t-values and labels.
    Construct(ConstructArgs),
    /// Lift an arrangement to the manifold `f_j(x) = |y_j|^2`.
    Lift(LiftArgs),
    /// Run the verification suite and write the report.
    Verify(VerifyArgs),
    /// Classify the slice `x1 = t` of the domain.
    Slice(SliceArgs),
    /// Draw the arrangement on a coordinate 2-plane as SVG.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct ConstructArgs {
    /// Strictly increasing t-values, comma separated (decimals and a/b allowed).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    t: Vec<String>,
    /// One label in {0,1} per interval.
    #[arg(long, value_delimiter = ',', required = true)]
    labels: Vec<u8>,
    #[arg(long)]
    variant: Variant,
    /// Arrangement JSON destination (stdout when absent).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LiftArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Ambient y-dimension total; defaults to n + l.
    #[arg(long)]
    m: Option<usize>,
    /// Manifold JSON destination (stdout when absent).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Plain equation list, one per line (defaults to `<out>.txt`).
    #[arg(long)]
    text: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Arrangement or manifold JSON.
    #[arg(long = "in")]
    input: PathBuf,
    /// Lift an arrangement at this m instead of n + l.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 5)]
    slices_per_interval: usize,
    /// Grid step of the closure checks.
    #[arg(long)]
    grid_step: Option<f64>,
    /// Skip the domain conditions and check only the manifold.
    #[arg(long)]
    skip_ncd: bool,
    /// Record wall time per check (reports then differ between runs).
    #[arg(long)]
    timings: bool,
    /// Report JSON destination (stdout when absent).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SliceArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    t: String,
    /// Print the full classification as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct PlotArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Two 1-based axes, horizontal first.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    plane: Vec<usize>,
    /// h_min,h_max,v_min,v_max
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    viewport: Option<Vec<f64>>,
    /// Marching-squares grid step.
    #[arg(long)]
    step: Option<f64>,
    /// Values of all n coordinates; the plotted ones are ignored.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    at: Option<Vec<f64>>,
    #[arg(long, default_value_t = 640)]
    width: u32,
    #[arg(long, default_value_t = 480)]
    height: u32,
    /// SVG destination (stdout when absent).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

enum Failure {
    Verification(String),
    Invalid(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Construction(_) => Failure::Internal(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn with_path(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| match Failure::from(e) {
        Failure::Invalid(m) => Failure::Invalid(format!("{}: {m}", path.display())),
        f => f,
    }
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Internal(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path, m: Option<usize>) -> Result<LiftedManifold, Failure> {
    let text = read(path)?;
    let lm = load_manifold_or_arrangement(&text).map_err(with_path(path))?;
    match m {
        Some(m) if m != lm.m => lift(&lm.arrangement, m).map_err(Failure::from),
        _ => Ok(lm),
    }
}

fn load_arrangement(path: &Path) -> Result<Arrangement, Failure> {
    Ok(load(path, None)?.arrangement)
}

fn rationals(v: &[String]) -> Result<Vec<Rational>, Failure> {
    v.iter().map(|s| parse_rational(s).map_err(Failure::from)).collect()
}

fn construct(a: &ConstructArgs) -> Outcome {
    let input = ConstructionInput::new(rationals(&a.t)?, a.labels.clone(), a.variant)?;
    let arr = build(&input)?;
    emit(a.out.as_deref(), &arr.to_json_string())?;
    let mut table = format!("{} n={} l={}\n", arr.provenance, arr.n, arr.l());
    for (j, p) in arr.primitives.iter().enumerate() {
        table.push_str(&format!("f{:<3} {:<28} {}\n", j + 1, p.kind_tag(), p.f));
    }
    if a.out.is_some() {
        print!("{table}");
    } else {
        eprint!("{table}");
    }
    Ok(())
}

fn cmd_lift(a: &LiftArgs) -> Outcome {
    let arr = load_arrangement(&a.input)?;
    let lm = lift(&arr, a.m.unwrap_or_else(|| min_m(&arr)))?;
    emit(a.out.as_deref(), &lm.to_json_string())?;
    let text = a
        .text
        .clone()
        .or_else(|| a.out.as_ref().map(|p| p.with_extension("txt")));
    if let Some(p) = &text {
        emit(Some(p), &lm.equations_text())?;
    }
    let msg = format!("{} equations, ambient dim {}", lm.equations.len(), lm.ambient_dim());
    if a.out.is_some() {
        println!("{msg}");
    } else {
        eprintln!("{msg}");
    }
    Ok(())
}

fn cmd_verify(a: &VerifyArgs, seed: u64) -> Outcome {
    let lm = load(&a.input, a.m)?;
    let mut ncd = NcdBudget::default();
    if let Some(s) = a.grid_step {
        if !(s > 0.0) {
            return Err(Failure::Invalid("--grid-step must be positive".into()));
        }
        ncd.grid_step = s;
    }
    let cfg = VerifyConfig {
        samples: a.samples,
        ncd,
        slices_per_interval: a.slices_per_interval,
        run_ncd: !a.skip_ncd,
        timings: a.timings,
        ..VerifyConfig::default()
    };
    let report = run_suite(&lm, &cfg, seed);
    emit(a.out.as_deref(), &report.to_json())?;
    for c in &report.checks {
        eprintln!("{:<28} {:?}", c.id, c.verdict);
    }
    if let Some(sv) = report.check("verify.singular_values") {
        if let Some(found) = sv.details.get("found") {
            eprintln!("singular values {found}");
        }
    }
    if report.passed() {
        eprintln!("pass");
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "verification failed for {}",
            report.subject
        )))
    }
}

fn cmd_slice(a: &SliceArgs, seed: u64) -> Outcome {
    let arr = load_arrangement(&a.input)?;
    let t = parse_rational(&a.t)?;
    let c = classify_slice_with(&arr, &t, &[], SliceBudget::default(), seed)?;
    if a.json {
        let s = serde_json::to_string_pretty(&c).map_err(|e| Failure::Internal(e.to_string()))?;
        println!("{s}");
    } else {
        println!("{}", c.summary());
    }
    Ok(())
}

fn cmd_plot(a: &PlotArgs) -> Outcome {
    let arr = load_arrangement(&a.input)?;
    let [h, v] = a.plane[..] else {
        return Err(Failure::Invalid(format!(
            "--plane needs exactly two axes, got {}",
            a.plane.len()
        )));
    };
    if h == 0 || v == 0 {
        return Err(Failure::Invalid("--plane axes are 1-based".into()));
    }
    let viewport = match &a.viewport {
        None => None,
        Some(vp) => Some(
            <[f64; 4]>::try_from(vp.as_slice())
                .map_err(|_| Failure::Invalid("--viewport needs four numbers".into()))?,
        ),
    };
    let cfg = PlotConfig {
        axes: (h - 1, v - 1),
        viewport,
        step: a.step,
        at: a.at.clone(),
        width: a.width,
        height: a.height,
    };
    emit(a.out.as_deref(), &render_svg(&arr, &cfg)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.cmd {
        Cmd::Construct(a) => construct(a),
        Cmd::Lift(a) => cmd_lift(a),
        Cmd::Verify(a) => cmd_verify(a, cli.seed),
        Cmd::Slice(a) => cmd_slice(a, cli.seed),
        Cmd::Plot(a) => cmd_plot(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(m)) => {
            eprintln!("{m}");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
    }
}
