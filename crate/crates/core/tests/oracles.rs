//! Reference values with independent derivations: closed forms, brute-force
//! sweeps and a dense collocation solve. The frozen numbers come from the
//! formula quoted next to each.

mod common;

use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wob::estimators::{EstimatorConfig, EvalPoint, ForwardStart, Formulation, Solver};
use wob::geometry::{Boundary, ElementSampler};
use wob::harness::stats::Welford;
use wob::harness::{run_field, GridCfg, Scene};
use wob::kernels::Green;
use wob::math::{Dim, Vec3};
use wob::problem::BoundaryCondition;
use wob::sampling::{next_point_hemisphere, ris_uniform, sample_sphere_direction};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn scene(text: &str) -> Scene {
    Scene::from_toml_str(text, Path::new(".")).unwrap()
}

fn estimate(solver: &Solver, x: EvalPoint, n: usize, seed: u64) -> Welford {
    let mut rng = rng(seed);
    let mut w = Welford::default();
    for _ in 0..n {
        w.push(solver.sample(&x, &mut rng).unwrap().value);
    }
    w
}

fn assert_within_3_sigma(w: &Welford, want: f64, what: &str) {
    let z = (w.mean() - want) / w.std_error();
    assert!(z.abs() <= 3.0, "{what}: {} ± {} vs {want} (z = {z:.2})", w.mean(), w.std_error());
}

#[test]
fn second_derivative_kernel_on_axis() {
    // ∂/∂x_z [−r·n / 4π|r|³] at x = 0, y = n = e_z: −(1/4π)(3 − 1) = −1/2π.
    let g = Green::new(Dim::Three, 1.0);
    let z = Vec3::new(0.0, 0.0, 1.0);
    let d = g.grad_x_dg_dny(&Vec3::zeros(), &z, &z).unwrap();
    assert!((d.z + 1.0 / (2.0 * PI)).abs() < 1e-14);
    assert!(d.x.abs() < 1e-14 && d.y.abs() < 1e-14);
}

#[test]
fn sphere_direction_moments() {
    let n = 1_000_000;
    let mut r = rng(1);
    let mut sum = Vec3::zeros();
    for _ in 0..n {
        sum += sample_sphere_direction(Dim::Two, &mut r);
    }
    // CLT bound 3/√N on the mean vector.
    assert!((sum / n as f64).norm() < 0.005);

    let mut sq = Vec3::zeros();
    for _ in 0..n {
        let d = sample_sphere_direction(Dim::Three, &mut r);
        sq += d.component_mul(&d);
    }
    // Second moment of a uniform unit vector: 1/3 per axis.
    for k in 0..3 {
        assert!((sq[k] / n as f64 - 1.0 / 3.0).abs() < 0.01 / 3.0, "axis {k}");
    }
}

#[test]
fn star_crossing_count_matches_direction_sweep() {
    let b = Boundary::star(Vec3::zeros(), 5, 0.45, 1.0, 32).unwrap();
    // A point deep in one prong; rays leaving it sideways cross neighbours.
    let o = (0..360)
        .map(|k| {
            let a = k as f64 * PI / 180.0;
            Vec3::new(0.75 * a.cos(), 0.75 * a.sin(), 0.0)
        })
        .find(|p| b.is_inside(p))
        .unwrap();
    let sweep = 200_000;
    let dense: f64 = (0..sweep)
        .map(|k| {
            let a = 2.0 * PI * (k as f64 + 0.5) / sweep as f64;
            b.all_hits_brute_force(&o, &Vec3::new(a.cos(), a.sin(), 0.0), None).len() as f64
        })
        .sum::<f64>()
        / sweep as f64;
    let mut r = rng(2);
    let n = 200_000;
    let mc: f64 =
        (0..n).map(|_| b.all_hits(&o, &sample_sphere_direction(Dim::Two, &mut r), None).len() as f64).sum::<f64>() / n as f64;
    assert!((mc / dense - 1.0).abs() < 0.01, "{mc} vs {dense}");
    assert!(dense > 1.0, "some directions cross three times");
}

#[test]
fn hemisphere_hits_follow_the_kernel_density() {
    // From a point on the unit circle, hemisphere sampling lands with area
    // density 2|∂G/∂n_y| = cos/(π r) = 1/(2π), uniform in angle.
    let b = Boundary::circle(Vec3::zeros(), 1.0, 512).unwrap();
    let from = b.point_on(100, b.centroid(100));
    let bins = 32;
    let n = 1_000_000;
    let mut hist = vec![0usize; bins];
    let mut r = rng(3);
    for _ in 0..n {
        let p = next_point_hemisphere(&b, &from, &mut r).unwrap().point.position;
        let a = p.y.atan2(p.x).rem_euclid(2.0 * PI);
        hist[((a / (2.0 * PI) * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let expect = n as f64 / bins as f64;
    let chi2: f64 = hist.iter().map(|&h| (h as f64 - expect).powi(2) / expect).sum();
    // 31 degrees of freedom; 0.1% tail is about 61.
    assert!(chi2 < 61.0, "chi2 {chi2}: {hist:?}");
}

#[test]
fn weighted_element_sampling_histogram() {
    let s = Scene::from_toml_str(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes/six_spots.toml")).unwrap(),
        Path::new("."),
    )
    .unwrap();
    let b = &s.boundary;
    let spec = &s.problems[0];
    let weights: Vec<f64> = (0..b.len())
        .map(|e| match spec.condition(b, e) {
            BoundaryCondition::Neumann(q) => q(&b.centroid(e), &b.element(e).normal).abs(),
            _ => unreachable!(),
        })
        .collect();
    let sampler = ElementSampler::new(b, &weights).unwrap();
    let n = 100_000;
    let mut counts = vec![0usize; b.len()];
    let mut r = rng(4);
    for _ in 0..n {
        counts[b.sample_with(&sampler, &mut r).element] += 1;
    }
    // Pool elements into 64 bins of 8 neighbours so expected counts are large.
    let total: f64 = weights.iter().zip(b.elements()).map(|(w, e)| w * e.area).sum();
    let (mut chi2, mut dof) = (0.0, 0usize);
    for chunk in 0..b.len() / 8 {
        let range = chunk * 8..chunk * 8 + 8;
        let p: f64 = range.clone().map(|e| weights[e] * b.element(e).area).sum::<f64>() / total;
        let c: usize = range.map(|e| counts[e]).sum();
        if p * n as f64 >= 5.0 {
            chi2 += (c as f64 - p * n as f64).powi(2) / (p * n as f64);
            dof += 1;
        } else {
            assert!(c as f64 <= 20.0 + p * n as f64);
        }
    }
    let bound = dof as f64 + 5.0 * (2.0 * dof as f64).sqrt();
    assert!(chi2 < bound, "chi2 {chi2} with {dof} bins");
}

#[test]
fn ris_estimates_boundary_integrals() {
    let b = Boundary::circle(Vec3::zeros(), 1.0, 512).unwrap();
    let mut r = rng(5);

    // Constant target: plain importance sampling of ∫_Γ 1 dA.
    let mut per = Welford::default();
    for _ in 0..100_000 {
        let s = ris_uniform(&b, 16, |_| 1.0, &mut r);
        per.push(s.weight);
    }
    assert!((per.mean() / b.total_area() - 1.0).abs() < 0.01);

    // Target |kernel|: ∫ 2 ∂G/∂n_y dA from an interior point is −2.
    let g = Green::new(Dim::Two, b.diameter());
    let x = Vec3::new(0.4, -0.3, 0.0);
    let mut gauss = Welford::default();
    for _ in 0..1_000_000 {
        let s = ris_uniform(&b, 16, |y| g.dg_dny(&x, &y.position, &y.normal).unwrap_or(0.0), &mut r);
        gauss.push(2.0 * g.dg_dny(&x, &s.point.position, &s.point.normal).unwrap() * s.weight);
    }
    assert_within_3_sigma(&gauss, -2.0, "RIS Gauss integral");
}

const DISK_LINEAR: &str = r#"
[geometry]
shape = { kind = "circle", radius = 1.0 }
[problem]
side = "interior"
reference = "linear-x"
[[problem.conditions]]
kind = "dirichlet"
"#;

const EXTERIOR_DIPOLE: &str = r#"
[geometry]
shape = { kind = "circle", radius = 1.0 }
[problem]
side = "exterior"
reference = "dipole2"
[[problem.conditions]]
kind = "dirichlet"
[grid]
kind = "points"
points = [[2.0, 0.0, 0.0]]
"#;

#[test]
fn dirichlet_interior_and_exterior_harmonic_values() {
    let cfg = EstimatorConfig {
        path_length: 4,
        ..Default::default()
    };
    let inside = scene(DISK_LINEAR);
    let solver = Solver::new(&inside.boundary, &inside.problems[0], &cfg).unwrap();
    // Harmonic extension of x is x.
    assert_within_3_sigma(&estimate(&solver, EvalPoint::Domain(Vec3::new(0.5, 0.0, 0.0)), 1_000_000, 6), 0.5, "interior");

    // Exterior extension of cos θ decaying at infinity is x / r²: 0.5 at (2, 0).
    let outside = scene(EXTERIOR_DIPOLE);
    let solver = Solver::new(&outside.boundary, &outside.problems[0], &cfg).unwrap();
    assert_within_3_sigma(&estimate(&solver, EvalPoint::Domain(Vec3::new(2.0, 0.0, 0.0)), 1_000_000, 7), 0.5, "exterior");
}

#[test]
fn neumann_saddle_inside_and_on_the_boundary() {
    let s = scene(
        r#"
[geometry]
shape = { kind = "circle", radius = 1.0 }
[problem]
side = "interior"
reference = "saddle"
[[problem.conditions]]
kind = "neumann"
"#,
    );
    let b = &s.boundary;
    let cfg = EstimatorConfig {
        formulation: Formulation::NeumannDirect,
        path_length: 6,
        ..Default::default()
    };
    let solver = Solver::new(b, &s.problems[0], &cfg).unwrap();
    let saddle = |p: &Vec3| p.x * p.x - p.y * p.y;

    // Offset: mean difference over a 4×4 test grid inside the disk.
    let mut offset = 0.0;
    let mut offset_var = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let p = Vec3::new(-0.6 + 0.4 * i as f64, -0.6 + 0.4 * j as f64, 0.0);
            let w = estimate(&solver, EvalPoint::Domain(p), 100_000, 10 + 4 * i + j);
            offset += (w.mean() - saddle(&p)) / 16.0;
            offset_var += w.std_error().powi(2) / 256.0;
        }
    }

    // u = x² − y² at (0.3, 0.2) is 0.05.
    let x = Vec3::new(0.3, 0.2, 0.0);
    let w = estimate(&solver, EvalPoint::Domain(x), 1_000_000, 8);
    let se = (w.std_error().powi(2) + offset_var).sqrt();
    assert!((w.mean() - offset - 0.05).abs() <= 3.0 * se, "{} - {offset} vs 0.05 ± {se}", w.mean());

    // Trace on Γ near (1, 0): cos 2θ ≈ 1.
    let y = b.snap_to_boundary(&Vec3::new(1.0, 0.0, 0.0));
    let on = EstimatorConfig {
        quantity: wob::estimators::Quantity::BoundarySolution,
        ..cfg
    };
    let solver = Solver::new(b, &s.problems[0], &on).unwrap();
    let w = estimate(&solver, EvalPoint::OnBoundary(y), 1_000_000, 9);
    let se = (w.std_error().powi(2) + offset_var).sqrt();
    let want = saddle(&y.position);
    assert!((want - 1.0).abs() < 1e-3);
    assert!((w.mean() - offset - want).abs() <= 3.0 * se, "{} - {offset} vs {want} ± {se}", w.mean());
}

/// Relative L2 gap between Monte Carlo densities and the expected value of
/// the truncated series, and that series' own gap to the collocation
/// solution at path length `m_far`.
fn density_checks(s: &Scene, m: usize, n: usize, m_far: usize) -> (usize, f64) {
    let b = &s.boundary;
    let spec = &s.problems[0];
    let cfg = EstimatorConfig {
        formulation: Formulation::SingleLayerMixed,
        path_length: m,
        ..Default::default()
    };
    let solver = Solver::new(b, spec, &cfg).unwrap();
    let series = common::truncated_density(b, spec, cfg.k, m);
    let mut over = 0;
    for k in 0..16 {
        let e = k * 32 + 11;
        let y = b.point_on(e, b.centroid(e));
        let mut r = rng(k as u64);
        let mut w = Welford::default();
        for _ in 0..n {
            w.push(solver.sample_density(&y, &mut r).unwrap());
        }
        over += ((w.mean() - series[e]).abs() > 3.0 * w.std_error()) as usize;
    }
    let bem = common::BemSolution::solve(b, spec);
    let far = common::truncated_density(b, spec, cfg.k, m_far);
    (over, common::relative_l2(&far, &bem.mu))
}

#[test]
fn pure_dirichlet_density_against_collocation() {
    // Radius 0.5: on the unit circle the single-layer operator annihilates
    // constants, so the first-kind Dirichlet equation for ū_D ≡ 1 has no
    // solution there.
    let s = scene(
        r#"
[geometry]
shape = { kind = "circle", radius = 0.5 }
[problem]
side = "interior"
[[problem.conditions]]
kind = "dirichlet"
data = { type = "constant", value = 1.0 }
"#,
    );
    let (over, far) = density_checks(&s, 3, 100_000, 8);
    assert!(over <= 1, "{over}/16 elements beyond 3σ of the truncated series");
    assert!(far < 0.02, "truncated series at M = 8 is {far} from collocation");
    // Constant data on a circle: μ = 1 / (−R ln R).
    let bem = common::BemSolution::solve(&s.boundary, &s.problems[0]);
    let exact = 1.0 / (-0.5 * 0.5f64.ln());
    assert!(bem.mu.iter().all(|m| (m / exact - 1.0).abs() < 1e-3));
}

#[test]
fn dirichlet_robin_density_against_collocation() {
    let s = scene(
        r#"
[geometry]
shape = { kind = "circle", radius = 0.8 }
[problem]
side = "interior"
reference = "linear-x"
assignment = { mode = "split", axis = 1, at = 0.0 }
[[problem.conditions]]
kind = "dirichlet"
[[problem.conditions]]
kind = "robin"
alpha = 1.0
"#,
    );
    let (over, far) = density_checks(&s, 3, 100_000, 8);
    assert!(over <= 1, "{over}/16 elements beyond 3σ of the truncated series");
    assert!(far < 0.03, "truncated series at M = 8 is {far} from collocation");
}

#[test]
fn mixed_interior_value() {
    let s = Scene::from_toml_str(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes/mixed_interior.toml")).unwrap(),
        Path::new("."),
    )
    .unwrap();
    let solver = Solver::new(&s.boundary, &s.problems[0], &s.estimator).unwrap();
    // x² − y² at (0.4, 0.1).
    assert_within_3_sigma(&estimate(&solver, EvalPoint::Domain(Vec3::new(0.4, 0.1, 0.0)), 1_000_000, 12), 0.15, "mixed");
}

#[test]
fn source_weighted_forward_starts_reduce_variance() {
    let mut s = Scene::from_toml_str(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes/six_spots.toml")).unwrap(),
        Path::new("."),
    )
    .unwrap();
    s.set_resolution(8, 8).unwrap();
    let var = |start: ForwardStart| {
        let cfg = EstimatorConfig {
            formulation: Formulation::NeumannSingleLayerForward,
            forward_start: start,
            samples: 10_000,
            ..s.estimator.clone()
        };
        let g = run_field(&s, &cfg).unwrap();
        g.points.iter().map(|p| p.stats.value.variance()).sum::<f64>()
    };
    let ratio = var(ForwardStart::Uniform) / var(ForwardStart::SourceWeighted);
    assert!(ratio > 1.5, "variance ratio {ratio}");
}

#[test]
fn poisson_dirichlet_center_value() {
    let mut s = Scene::from_toml_str(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes/poisson_dirichlet.toml")).unwrap(),
        Path::new("."),
    )
    .unwrap();
    s.set_grid(GridCfg::Points {
        points: vec![[0.0, 0.0, 0.0]],
    })
    .unwrap();
    let g = run_field(&s, &EstimatorConfig { samples: 100_000, ..s.estimator.clone() }).unwrap();
    // v = (x² + y²)/4 vanishes at the centre.
    let p = &g.points[0];
    assert_eq!(p.reference, Some(0.0));
    assert_within_3_sigma(&p.stats.value, 0.0, "Poisson centre");
}
