use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wob::estimators::{EstimatorConfig, Formulation, Quantity, SamplingMode, Technique};
use wob::harness::output::{convergence_csv, efficiency_csv, write_text};
use wob::harness::{self, load_scene, with_threads, HarnessError, RangeMode, Scene};

#[derive(Parser)]
#[command(name = "wob", version, about = "Walk-on-Boundary Monte Carlo solvers for Laplace and Poisson problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the solution on a scene's evaluation grid.
    Solve(SolveArgs),
    /// RMSE against the reference at a schedule of sample counts.
    Converge(ConvergeArgs),
    /// Compare WoB path lengths with WoS shell widths on a Dirichlet scene.
    CompareWos(CompareArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    formulation: Option<Formulation>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quantity: Option<Quantity>,
    #[arg(long)]
    technique: Option<Technique>,
    #[arg(long = "sampling-mode")]
    sampling_mode: Option<SamplingMode>,
    /// Grid resolution `WxH` (window grids only).
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long, value_enum, default_value_t = Range::Symmetric)]
    range: Range,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "N-schedule", value_delimiter = ',', required = true)]
    n_schedule: Vec<u64>,
    #[arg(long = "M-list", value_delimiter = ',', required = true)]
    m_list: Vec<usize>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "eps-list", value_delimiter = ',', required = true)]
    eps_list: Vec<f64>,
    #[arg(long = "M-list", value_delimiter = ',', default_values_t = [2usize, 3, 4, 5, 6, 7])]
    m_list: Vec<usize>,
    #[arg(long = "N")]
    n: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Range {
    Symmetric,
    Extrema,
}

fn parse_grid(s: &str) -> Result<(usize, usize), HarnessError> {
    let bad = || HarnessError::Validation(format!("--grid expects WxH, got {s:?}"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?))
}

/// Loads the scene and applies command-line overrides to its settings.
fn prepare(c: &Common) -> Result<(Scene, EstimatorConfig), HarnessError> {
    let mut scene = load_scene(&c.scene)?;
    if let Some(g) = &c.grid {
        let (w, h) = parse_grid(g)?;
        scene.set_resolution(w, h)?;
    }
    let mut cfg = scene.estimator.clone();
    if let Some(f) = c.formulation {
        cfg.formulation = f;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(q) = c.quantity {
        cfg.quantity = q;
    }
    if let Some(t) = c.technique {
        cfg.technique = t;
    }
    if let Some(m) = c.sampling_mode {
        if m == SamplingMode::ConvexHemisphere && !scene.declared_convex {
            return Err(HarnessError::Validation("convex-hemisphere sampling needs a scene declared convex".into()));
        }
        cfg.sampling_mode = m;
    }
    Ok((scene, cfg))
}

fn solve(a: &SolveArgs) -> Result<(), HarnessError> {
    let (scene, mut cfg) = prepare(&a.common)?;
    if let Some(m) = a.m {
        cfg.path_length = m;
    }
    if let Some(n) = a.n {
        cfg.samples = n;
    }
    eprintln!(
        "{}: {} points, formulation {:?}, M = {}, N = {}",
        scene.name,
        scene.points.len(),
        cfg.formulation,
        cfg.path_length,
        cfg.samples
    );
    let grid = with_threads(a.common.threads, || harness::run::run_field_with_progress(&scene, &cfg, true))??;
    let mode = match a.range {
        Range::Symmetric => RangeMode::Symmetric,
        Range::Extrema => RangeMode::Extrema,
    };
    let files = harness::write_field(&grid, &a.common.out, &scene.name, mode)?;
    println!("M = {}", cfg.path_length);
    println!("wall_time = {:.3} s, rays = {}", grid.wall_time, grid.rays_cast);
    if let Some(r) = grid.rmse() {
        println!("rmse = {r:e}");
    }
    if grid.reference_offset != 0.0 {
        println!("reference offset = {:e}", grid.reference_offset);
    }
    println!("wrote {}", files.csv.display());
    Ok(())
}

fn converge(a: &ConvergeArgs) -> Result<(), HarnessError> {
    let (scene, cfg) = prepare(&a.common)?;
    let rows = with_threads(a.common.threads, || {
        harness::convergence_study(&scene, &cfg, &a.n_schedule, &a.m_list)
    })??;
    for r in &rows {
        println!("M = {} N = {} rmse = {:e} noise = {:e}", r.m, r.n, r.rmse, r.noise);
    }
    let path = a.common.out.join(format!("{}_convergence.csv", scene.name));
    write_text(&path, &convergence_csv(&rows))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn compare(a: &CompareArgs) -> Result<(), HarnessError> {
    let (scene, mut cfg) = prepare(&a.common)?;
    if let Some(n) = a.n {
        cfg.samples = n;
    }
    let wcfg = wob::wos::WosConfig {
        seed: cfg.seed,
        ..scene.wos.clone()
    };
    let (rows, _) = with_threads(a.common.threads, || {
        harness::compare_wos(&scene, &cfg, &wcfg, &a.m_list, &a.eps_list)
    })??;
    for r in &rows {
        println!("{} {} rmse = {:e} time = {:.3} s work = {}", r.method, r.param, r.rmse, r.wall_time, r.work);
    }
    let path = a.common.out.join(format!("{}_efficiency.csv", scene.name));
    write_text(&path, &efficiency_csv(&rows))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Converge(a) => converge(a),
        Command::CompareWos(a) => compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
