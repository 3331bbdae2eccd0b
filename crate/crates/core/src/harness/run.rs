//! Parallel evaluation over a scene's points, convergence studies and the
//! WoS/WoB efficiency comparison.
//!
//! Randomness: every point owns the ChaCha8 stream `(seed, point index)`;
//! reused forward paths use one stream per fixed-size chunk. Results are
//! therefore independent of the thread count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::scene::{Scene, SceneError, ScenePoint};
use super::stats::{Checkpoint, Welford};
use crate::estimators::{
    EstimatorConfig, EstimatorError, EvalPoint, ForwardField, Formulation, Quantity, Solver, WalkSample,
};
use crate::math::Vec3;
use crate::problem::{BcKind, Side};
use crate::wos::{WosConfig, WosSolver};

/// Fraction of failed samples above which a run is aborted.
pub const MAX_ERROR_FRACTION: f64 = 0.01;
/// Paths per independent stream in forward reuse mode.
pub const REUSE_CHUNK: u64 = 1024;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("invalid run: {0}")]
    Validation(String),
    #[error("{errors} of {samples} samples failed (limit {limit}%): {first}", limit = MAX_ERROR_FRACTION * 100.0)]
    TooManyErrors { errors: u64, samples: u64, first: String },
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Image(String),
}

impl HarnessError {
    /// True for problems with the inputs rather than failures while running.
    pub fn is_validation(&self) -> bool {
        match self {
            HarnessError::Scene(_) | HarnessError::Validation(_) => true,
            HarnessError::Estimator(e) => !matches!(e, EstimatorError::Kernel(_) | EstimatorError::NoTechnique(_)),
            _ => false,
        }
    }
}

/// Per-point accumulated statistics.
#[derive(Clone, Debug, Default)]
pub struct Accum {
    pub value: Welford,
    pub gradient: Option<[Welford; 3]>,
    pub rays: u64,
    pub steps: u64,
    pub errors: u64,
    pub diverged: u64,
    pub truncated: u64,
    pub seconds: f64,
    pub first_error: Option<String>,
}

impl Accum {
    fn push(&mut self, r: Result<WalkSample, EstimatorError>) {
        match r {
            Ok(s) => {
                self.value.push(s.value);
                if let Some(g) = s.gradient {
                    let acc = self.gradient.get_or_insert_with(Default::default);
                    for k in 0..3 {
                        acc[k].push(g[k]);
                    }
                }
                self.rays += s.rays_cast;
                self.steps += s.path_length_used as u64;
                self.diverged += s.diverged as u64;
                self.truncated += s.truncated as u64;
            }
            Err(e) => {
                self.errors += 1;
                if self.first_error.is_none() {
                    self.first_error = Some(e.to_string());
                }
            }
        }
    }

    pub fn gradient_mean(&self) -> Option<Vec3> {
        self.gradient.map(|g| Vec3::new(g[0].mean(), g[1].mean(), g[2].mean()))
    }
}

#[derive(Clone, Debug)]
pub struct PointEstimate {
    pub point: ScenePoint,
    pub stats: Accum,
    pub reference: Option<f64>,
    pub reference_gradient: Option<Vec3>,
}

impl PointEstimate {
    pub fn position(&self) -> Vec3 {
        self.point.eval.position()
    }

    pub fn mean(&self) -> f64 {
        self.stats.value.mean()
    }

    pub fn abs_err(&self) -> Option<f64> {
        self.reference.map(|r| (self.mean() - r).abs())
    }
}

/// Estimates over all points of a scene.
#[derive(Clone, Debug)]
pub struct FieldGrid {
    pub points: Vec<PointEstimate>,
    pub image: Option<(usize, usize)>,
    pub config: EstimatorConfig,
    pub wall_time: f64,
    pub rays_cast: u64,
    /// Constant added to the reference for problems whose solution is only
    /// defined up to a constant (interior pure Neumann).
    pub reference_offset: f64,
}

impl FieldGrid {
    /// Root mean square of `mean − ref` over points with a reference.
    pub fn rmse(&self) -> Option<f64> {
        rms(self.points.iter().filter_map(|p| p.abs_err()))
    }

    /// Root mean square of `|∇ estimate − ∇ ref|`.
    pub fn gradient_rmse(&self) -> Option<f64> {
        rms(self
            .points
            .iter()
            .filter_map(|p| Some((p.stats.gradient_mean()? - p.reference_gradient?).norm())))
    }

    pub fn samples(&self) -> u64 {
        self.points.iter().map(|p| p.stats.value.n() + p.stats.errors).sum()
    }

    pub fn errors(&self) -> u64 {
        self.points.iter().map(|p| p.stats.errors).sum()
    }
}

fn rms(it: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = it.fold((0usize, 0.0), |(n, s), e| (n + 1, s + e * e));
    (n > 0).then(|| (s / n as f64).sqrt())
}

fn point_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Whether the scene's solution on `side` is only fixed up to a constant.
fn floating_constant(scene: &Scene, side: Side, quantity: Quantity) -> bool {
    side == Side::Interior
        && scene.problem(side).all_of(&scene.boundary, BcKind::Neumann)
        && matches!(quantity, Quantity::Solution | Quantity::BoundarySolution)
}

fn references(scene: &Scene, quantity: Quantity, p: &ScenePoint) -> (Option<f64>, Option<Vec3>) {
    let Some(r) = scene.reference else { return (None, None) };
    let x = p.eval.position();
    match (quantity, p.eval) {
        (Quantity::NormalDerivative, EvalPoint::OnBoundary(b)) => (Some(r.gradient(&x).dot(&b.normal)), None),
        (Quantity::Gradient, _) => (Some(r.value(&x)), Some(r.gradient(&x))),
        _ => (Some(r.value(&x)), None),
    }
}

fn validate_run(cfg: &EstimatorConfig) -> Result<(), HarnessError> {
    if cfg.samples == 0 {
        return Err(HarnessError::Validation("sample count N must be at least 1".into()));
    }
    Ok(())
}

fn check_errors(acc: &[Accum]) -> Result<(), HarnessError> {
    let errors: u64 = acc.iter().map(|a| a.errors).sum();
    let samples: u64 = acc.iter().map(|a| a.value.n() + a.errors).sum();
    if errors as f64 > MAX_ERROR_FRACTION * samples as f64 {
        let first = acc.iter().find_map(|a| a.first_error.clone()).unwrap_or_default();
        return Err(HarnessError::TooManyErrors { errors, samples, first });
    }
    Ok(())
}

/// Progress printer on stderr, at most every 10%.
struct Progress {
    total: usize,
    done: AtomicUsize,
    enabled: bool,
}

impl Progress {
    fn new(total: usize, enabled: bool) -> Progress {
        Progress {
            total,
            done: AtomicUsize::new(0),
            enabled,
        }
    }

    fn tick(&self) {
        let d = self.done.fetch_add(1, Ordering::Relaxed) + 1;
        if self.enabled && self.total >= 10 && d % (self.total / 10) == 0 {
            eprintln!("  {}% ({d}/{} points)", 100 * d / self.total, self.total);
        }
    }
}

/// Runs `sample` for every point up to each checkpoint in `schedule`,
/// returning one snapshot per (point, checkpoint). `streams[i]` keys the
/// random stream of `points[i]`.
fn run_points<F>(
    points: &[ScenePoint],
    streams: &[u64],
    schedule: &[u64],
    seed: u64,
    progress: bool,
    sample: F,
) -> Vec<Vec<Accum>>
where
    F: Fn(&ScenePoint, &mut ChaCha8Rng) -> Result<WalkSample, EstimatorError> + Sync,
{
    let pr = Progress::new(points.len(), progress);
    points
        .par_iter()
        .zip(streams.par_iter())
        .map(|(p, &stream)| {
            let mut rng = point_rng(seed, stream);
            let mut acc = Accum::default();
            let mut out = Vec::with_capacity(schedule.len());
            let mut done = 0;
            for &n in schedule {
                let t = Instant::now();
                while done < n {
                    acc.push(sample(p, &mut rng));
                    done += 1;
                }
                acc.seconds += t.elapsed().as_secs_f64();
                out.push(acc.clone());
            }
            pr.tick();
            out
        })
        .collect()
}

/// Forward reuse: every path contributes to all points of one side.
fn run_reuse(solver: &Solver, points: &[ScenePoint], schedule: &[u64], seed: u64) -> Result<Vec<Vec<Accum>>, EstimatorError> {
    let evals: Vec<EvalPoint> = points.iter().map(|p| p.eval).collect();
    let want_grad = solver.config().quantity == Quantity::Gradient;
    let mut total = ForwardField::new(evals.len());
    let mut seconds = 0.0;
    let mut done = 0u64;
    let mut snapshots: Vec<Vec<Accum>> = vec![Vec::with_capacity(schedule.len()); evals.len()];
    // Chunk c always covers paths [c·REUSE_CHUNK, (c+1)·REUSE_CHUNK) on
    // stream c; a chunk split by a checkpoint resumes its own generator.
    let mut pending: Option<(u64, ChaCha8Rng)> = None;
    for &n in schedule {
        let t = Instant::now();
        let mut jobs: Vec<(u64, u64, ChaCha8Rng)> = Vec::new();
        let mut at = done;
        while at < n {
            let c = at / REUSE_CHUNK;
            let hi = ((c + 1) * REUSE_CHUNK).min(n);
            let rng = match pending.take() {
                Some((pc, rng)) if pc == c => rng,
                _ => point_rng(seed, c),
            };
            jobs.push((c, hi - at, rng));
            at = hi;
        }
        let parts: Vec<(u64, ForwardField, ChaCha8Rng)> = jobs
            .into_par_iter()
            .map(|(c, count, mut rng)| Ok((c, solver.forward_field(&evals, count as usize, &mut rng)?, rng)))
            .collect::<Result<_, EstimatorError>>()?;
        for (c, part, rng) in parts {
            total.merge(&part);
            if n % REUSE_CHUNK != 0 && c == n / REUSE_CHUNK {
                pending = Some((c, rng));
            }
        }
        done = n;
        seconds += t.elapsed().as_secs_f64();
        for (i, snap) in snapshots.iter_mut().enumerate() {
            let mut acc = Accum {
                value: Welford::from_sums(total.paths, total.sum[i], total.sum2[i]),
                rays: total.rays,
                diverged: total.diverged,
                seconds,
                ..Default::default()
            };
            if want_grad {
                acc.gradient = Some(std::array::from_fn(|k| {
                    Welford::from_sums(total.paths, total.grad_sum[i][k], total.grad_sum2[i][k])
                }));
            }
            snap.push(acc);
        }
    }
    Ok(snapshots)
}

/// Per side, builds the solver and runs that side's points. Streams are
/// keyed by the point's index in the scene.
fn run_schedule(
    scene: &Scene,
    cfg: &EstimatorConfig,
    schedule: &[u64],
    progress: bool,
) -> Result<Vec<Vec<Accum>>, HarnessError> {
    let mut result: Vec<Vec<Accum>> = vec![Vec::new(); scene.points.len()];
    for spec in &scene.problems {
        let idx: Vec<usize> = (0..scene.points.len()).filter(|&i| scene.points[i].side == spec.side).collect();
        if idx.is_empty() {
            continue;
        }
        let solver = Solver::new(&scene.boundary, spec, cfg)?;
        let pts: Vec<ScenePoint> = idx.iter().map(|&i| scene.points[i]).collect();
        let snaps = if cfg.formulation == Formulation::NeumannSingleLayerForward && cfg.forward_reuse {
            let side_seed = cfg.seed.wrapping_add((spec.side == Side::Exterior) as u64);
            run_reuse(&solver, &pts, schedule, side_seed)?
        } else {
            let streams: Vec<u64> = idx.iter().map(|&i| i as u64).collect();
            run_points(&pts, &streams, schedule, cfg.seed, progress, |p, rng| solver.sample(&p.eval, rng))
        };
        for (k, &i) in idx.iter().enumerate() {
            result[i] = snaps[k].clone();
        }
    }
    Ok(result)
}

fn wall_seconds(acc: &[&Accum], reuse: bool) -> f64 {
    if reuse {
        acc.iter().map(|a| a.seconds).fold(0.0, f64::max)
    } else {
        acc.iter().map(|a| a.seconds).sum::<f64>() / rayon::current_num_threads() as f64
    }
}

/// Builds estimates for one checkpoint, applying the reference offset for
/// solutions defined up to a constant.
fn assemble(scene: &Scene, cfg: &EstimatorConfig, stats: Vec<Accum>) -> (Vec<PointEstimate>, f64) {
    let mut points: Vec<PointEstimate> = scene
        .points
        .iter()
        .zip(stats)
        .map(|(p, s)| {
            let (reference, reference_gradient) = references(scene, cfg.quantity, p);
            PointEstimate {
                point: *p,
                stats: s,
                reference,
                reference_gradient,
            }
        })
        .collect();
    let floating: Vec<usize> = (0..points.len())
        .filter(|&i| points[i].reference.is_some() && floating_constant(scene, points[i].point.side, cfg.quantity))
        .collect();
    let mut offset = 0.0;
    if !floating.is_empty() {
        offset = floating
            .iter()
            .map(|&i| points[i].mean() - points[i].reference.unwrap())
            .sum::<f64>()
            / floating.len() as f64;
        for &i in &floating {
            *points[i].reference.as_mut().unwrap() += offset;
        }
    }
    (points, offset)
}

/// Estimates the scene's points with `cfg.samples` samples each.
pub fn run_field(scene: &Scene, cfg: &EstimatorConfig) -> Result<FieldGrid, HarnessError> {
    run_field_with_progress(scene, cfg, false)
}

pub fn run_field_with_progress(scene: &Scene, cfg: &EstimatorConfig, progress: bool) -> Result<FieldGrid, HarnessError> {
    validate_run(cfg)?;
    let t = Instant::now();
    let snaps = run_schedule(scene, cfg, &[cfg.samples as u64], progress)?;
    let wall_time = t.elapsed().as_secs_f64();
    let stats: Vec<Accum> = snaps.into_iter().map(|mut s| s.pop().expect("one checkpoint")).collect();
    check_errors(&stats)?;
    let reuse = cfg.formulation == Formulation::NeumannSingleLayerForward && cfg.forward_reuse;
    let rays_cast = if reuse {
        // Shared paths: count each side's rays once.
        let mut seen = std::collections::HashSet::new();
        scene
            .points
            .iter()
            .zip(&stats)
            .filter(|(p, _)| seen.insert(p.side))
            .map(|(_, s)| s.rays)
            .sum()
    } else {
        stats.iter().map(|s| s.rays).sum()
    };
    let (points, reference_offset) = assemble(scene, cfg, stats);
    Ok(FieldGrid {
        points,
        image: scene.image,
        config: cfg.clone(),
        wall_time,
        rays_cast,
        reference_offset,
    })
}

/// One row of a convergence table.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub formulation: Formulation,
    pub m: usize,
    pub n: u64,
    pub rmse: f64,
    /// `sqrt(mean_i s_i² / N)`, the noise-only RMSE prediction.
    pub noise: f64,
    /// Estimated wall-clock seconds up to this checkpoint.
    pub wall_time: f64,
    pub rays: u64,
}

impl ConvergenceRow {
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            n: self.n,
            rmse: self.rmse,
            noise: self.noise,
        }
    }
}

/// RMSE against the scene reference at every checkpoint of `schedule`, for
/// every path length in `m_list`.
pub fn convergence_study(
    scene: &Scene,
    cfg: &EstimatorConfig,
    schedule: &[u64],
    m_list: &[usize],
) -> Result<Vec<ConvergenceRow>, HarnessError> {
    if schedule.is_empty() {
        return Err(HarnessError::Validation("N schedule is empty".into()));
    }
    if m_list.is_empty() {
        return Err(HarnessError::Validation("M list is empty".into()));
    }
    if schedule.contains(&0) || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HarnessError::Validation("N schedule must be positive and strictly increasing".into()));
    }
    if scene.reference.is_none() {
        return Err(HarnessError::Validation(format!("scene {:?} has no reference solution", scene.name)));
    }
    let reuse = cfg.formulation == Formulation::NeumannSingleLayerForward && cfg.forward_reuse;
    let mut rows = Vec::new();
    for &m in m_list {
        let cfg = EstimatorConfig {
            path_length: m,
            samples: *schedule.last().unwrap() as usize,
            ..cfg.clone()
        };
        let snaps = run_schedule(scene, &cfg, schedule, false)?;
        for (k, &n) in schedule.iter().enumerate() {
            let stats: Vec<Accum> = snaps.iter().map(|s| s[k].clone()).collect();
            check_errors(&stats)?;
            let refs: Vec<&Accum> = stats.iter().collect();
            let wall_time = wall_seconds(&refs, reuse);
            let rays = stats.iter().map(|s| s.rays).sum();
            let (points, _) = assemble(scene, &cfg, stats);
            let vars: Vec<f64> = points.iter().map(|p| p.stats.value.variance()).collect();
            let noise = (vars.iter().sum::<f64>() / vars.len() as f64 / n as f64).sqrt();
            let rmse = rms(points.iter().filter_map(|p| p.abs_err())).unwrap_or(f64::NAN);
            rows.push(ConvergenceRow {
                formulation: cfg.formulation,
                m,
                n,
                rmse,
                noise,
                wall_time,
                rays,
            });
        }
    }
    Ok(rows)
}

/// One row of the WoS/WoB efficiency report.
#[derive(Clone, Debug, PartialEq)]
pub struct EfficiencyRow {
    /// `"wob"` or `"wos"`.
    pub method: &'static str,
    /// `M` for WoB, `ε` for WoS.
    pub param: f64,
    pub n: u64,
    pub rmse: f64,
    pub wall_time: f64,
    /// Rays cast (WoB) or sphere steps taken (WoS).
    pub work: u64,
}

/// Walk-on-Spheres estimates on the scene's points.
pub fn run_wos(scene: &Scene, wcfg: &WosConfig, samples: usize) -> Result<FieldGrid, HarnessError> {
    if samples == 0 {
        return Err(HarnessError::Validation("sample count N must be at least 1".into()));
    }
    let spec = scene.problem(Side::Interior);
    if scene.problems.len() != 1 {
        return Err(HarnessError::Validation("walk on spheres runs interior scenes only".into()));
    }
    let solver = WosSolver::new(&scene.boundary, spec, wcfg)?;
    let t = Instant::now();
    let streams: Vec<u64> = (0..scene.points.len() as u64).collect();
    let snaps = run_points(&scene.points, &streams, &[samples as u64], wcfg.seed, false, |p, rng| {
        solver.sample(&p.eval.position(), rng)
    });
    let wall_time = t.elapsed().as_secs_f64();
    let stats: Vec<Accum> = snaps.into_iter().map(|mut s| s.pop().expect("one checkpoint")).collect();
    check_errors(&stats)?;
    let cfg = EstimatorConfig {
        samples,
        seed: wcfg.seed,
        ..Default::default()
    };
    let (points, reference_offset) = assemble(scene, &cfg, stats);
    Ok(FieldGrid {
        points,
        image: scene.image,
        config: cfg,
        wall_time,
        rays_cast: 0,
        reference_offset,
    })
}

/// Runs WoB for each `M` and WoS for each `ε` at `cfg.samples` per point.
/// Returns the report rows and the grids in the same order.
pub fn compare_wos(
    scene: &Scene,
    cfg: &EstimatorConfig,
    wcfg: &WosConfig,
    m_list: &[usize],
    eps_list: &[f64],
) -> Result<(Vec<EfficiencyRow>, Vec<FieldGrid>), HarnessError> {
    validate_run(cfg)?;
    if eps_list.is_empty() && m_list.is_empty() {
        return Err(HarnessError::Validation("nothing to compare: empty M and ε lists".into()));
    }
    let mut rows = Vec::new();
    let mut grids = Vec::new();
    for &m in m_list {
        let c = EstimatorConfig {
            path_length: m,
            ..cfg.clone()
        };
        let g = run_field(scene, &c)?;
        rows.push(EfficiencyRow {
            method: "wob",
            param: m as f64,
            n: cfg.samples as u64,
            rmse: g.rmse().unwrap_or(f64::NAN),
            wall_time: g.wall_time,
            work: g.rays_cast,
        });
        grids.push(g);
    }
    for &eps in eps_list {
        let w = WosConfig {
            epsilon: eps,
            ..wcfg.clone()
        };
        let g = run_wos(scene, &w, cfg.samples)?;
        rows.push(EfficiencyRow {
            method: "wos",
            param: eps,
            n: cfg.samples as u64,
            rmse: g.rmse().unwrap_or(f64::NAN),
            wall_time: g.wall_time,
            work: g.points.iter().map(|p| p.stats.steps).sum(),
        });
        grids.push(g);
    }
    Ok((rows, grids))
}

/// Runs `f` on a pool with `threads` workers (`None`: rayon's default).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(HarnessError::Validation("thread count must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Validation(e.to_string()))
            .map(|pool| pool.install(f)),
    }
}
