//! Acceptance criteria 1-8. Runs without the libtest harness so that every
//! criterion prints one PASS/FAIL line; exits nonzero if any fails.

use std::path::{Path, PathBuf};
use std::time::Instant;

use global_array::demo::{
    constant_acceleration, demo_scenarios, orbit_demo, planar_sway_demo, rectilinear_demo,
    run_demo, Pipeline, DEFAULT_SEED,
};
use global_array::detector::{detect, DetectorConfig, Verdict};
use global_array::generators::{
    generate, make_playback, sway3d_suite, ScenarioConfig, ScenarioKind,
};
use global_array::invariants::{slope_invariant, Equation};
use global_array::kinematics::{differentiate, KinematicTrack, TimeGrid};
use global_array::observables::{
    default_gravity, project_inertial, replay_optics, OpticalStream, ProjectionConfig,
    SupportStream,
};
use global_array::{ScenePoint, Vec3};

const TOL: f64 = 0.05;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn run(cfg: &ScenarioConfig, track: KinematicTrack) -> Pipeline {
    Pipeline::run(
        track,
        &cfg.object,
        &ProjectionConfig::default(),
        default_gravity(),
    )
    .unwrap()
}

/// Distance straight from positions, independent of the library's truth column.
fn truth(track: &KinematicTrack, object: &ScenePoint) -> Vec<f64> {
    track
        .position()
        .iter()
        .map(|p| {
            let r = p - object.position;
            (r.x * r.x + r.y * r.y + r.z * r.z).sqrt()
        })
        .collect()
}

fn canonical() -> Vec<(&'static str, ScenarioConfig)> {
    vec![
        ("rectilinear", rectilinear_demo()),
        ("planar_sway", planar_sway_demo()),
        ("sway3d", ScenarioConfig::sway3d_default()),
        ("tangential_orbit", orbit_demo()),
    ]
}

fn eq3_accurate_fraction(p: &Pipeline, d: &[f64]) -> (usize, f64) {
    let errs: Vec<f64> = p
        .estimates
        .d_eq3
        .iter()
        .zip(d)
        .filter_map(|(e, t)| e.map(|e| (e - t).abs() / t))
        .collect();
    let ok = errs.iter().filter(|e| **e <= TOL).count();
    (errs.len(), ok as f64 / errs.len() as f64)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut scenarios = canonical();
    scenarios.extend(
        sway3d_suite(DEFAULT_SEED, 10, 10.0)
            .into_iter()
            .map(|c| ("sway3d_suite", c)),
    );
    let mut worst_exact = 0.0f64;
    let mut min_valid = 1.0f64;
    let mut worst_fd = 1.0f64;
    let mut failures = Vec::new();
    for (name, cfg) in &scenarios {
        let track = generate(cfg).unwrap();
        let d = truth(&track, &cfg.object);
        let p = run(cfg, track.clone());
        let valid = p.estimates.d_eq3.iter().flatten().count();
        min_valid = min_valid.min(valid as f64 / d.len() as f64);
        for (e, t) in p.estimates.d_eq3.iter().zip(&d) {
            if let Some(e) = e {
                worst_exact = worst_exact.max((e - t).abs() / t);
            }
        }
        let fd = run(cfg, track.rederived().unwrap());
        let (_, frac) = eq3_accurate_fraction(&fd, &d);
        if frac < 1.0 {
            failures.push(format!("{name} fd {frac:.4}"));
        }
        worst_fd = worst_fd.min(frac);
    }
    let elapsed = start.elapsed().as_secs_f64();

    // Diagnostic only: how often a 2nd-order stencil misses a near-grazing
    // sample on planar sway as the object moves around.
    let mut misses = 0;
    let mut placements = 0;
    for ox in [-0.2, -0.1, 0.0, 0.1, 0.2] {
        for oy in [0.4, 0.6, 0.8, 1.0, 1.5] {
            let mut cfg = planar_sway_demo();
            cfg.object.position = Vec3::new(ox, oy, 0.0);
            let track = generate(&cfg).unwrap();
            let d = truth(&track, &cfg.object);
            let (_, frac) = eq3_accurate_fraction(&run(&cfg, track.rederived().unwrap()), &d);
            placements += 1;
            misses += usize::from(frac < 1.0);
        }
    }
    println!("    note: planar placements with a near-grazing finite-difference miss: {misses}/{placements} (not asserted)");

    outcome(
        worst_exact < 1e-6 && worst_fd == 1.0 && min_valid > 0.99 && elapsed < 5.0,
        format!(
            "{} scenarios; analytic max rel err {worst_exact:.2e}; 100 Hz differentiated min accurate fraction {worst_fd}{}; min valid fraction {min_valid:.4}; {elapsed:.2} s",
            scenarios.len(),
            if failures.is_empty() { String::new() } else { format!(" ({})", failures.join(", ")) }
        ),
    )
}

fn criterion_2() -> Outcome {
    let suite = sway3d_suite(DEFAULT_SEED, 10, 10.0);
    let mut eq1 = Vec::new();
    let mut eq3_ok = true;
    for cfg in &suite {
        let r = run(cfg, generate(cfg).unwrap())
            .accuracy(TOL, "suite")
            .unwrap();
        eq1.push(r.accurate_fraction(Equation::Eq1).unwrap_or(0.0));
        eq3_ok &= r.accurate_fraction(Equation::Eq3) == Some(1.0);
    }
    let max = eq1.iter().copied().fold(0.0, f64::max);
    let mean = eq1.iter().sum::<f64>() / eq1.len() as f64;
    outcome(
        suite.len() >= 10 && max < 0.20 && eq3_ok,
        format!("{} scenarios; eq1 accurate fraction mean {mean:.4}, max {max:.4}; eq3 = 1.0 everywhere: {eq3_ok}", suite.len()),
    )
}

fn max_rel(a: &[Option<f64>], b: &[Option<f64>]) -> (f64, usize) {
    let mut worst = 0.0f64;
    let mut both = 0;
    for (x, y) in a.iter().zip(b) {
        if let (Some(x), Some(y)) = (x, y) {
            worst = worst.max((x - y).abs() / y.abs());
            both += 1;
        }
    }
    (worst, both)
}

fn criterion_3() -> Outcome {
    let rect_cfg = rectilinear_demo();
    let rect = run(&rect_cfg, generate(&rect_cfg).unwrap()).estimates;
    let planar_cfg = planar_sway_demo();
    let planar = run(&planar_cfg, generate(&planar_cfg).unwrap()).estimates;
    let orbit_cfg = orbit_demo();
    let orbit = run(&orbit_cfg, generate(&orbit_cfg).unwrap()).estimates;
    let checks = [
        (
            "rectilinear eq1/eq3",
            max_rel(&rect.d_eq1, &rect.d_eq3),
            rect.len(),
        ),
        (
            "rectilinear eq2/eq3",
            max_rel(&rect.d_eq2, &rect.d_eq3),
            rect.len(),
        ),
        (
            "planar eq2/eq3",
            max_rel(&planar.d_eq2, &planar.d_eq3),
            planar.len() / 2,
        ),
        (
            "orbit eq5/eq3",
            max_rel(&orbit.d_eq5, &orbit.d_eq3),
            orbit.len(),
        ),
    ];
    let passed = checks
        .iter()
        .all(|(_, (worst, both), need)| *worst < 1e-6 && both >= need);
    let detail = checks
        .iter()
        .map(|(name, (worst, both), _)| format!("{name} {worst:.1e} over {both}"))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(passed, detail)
}

fn optic_fields_close(a: &OpticalStream, b: &OpticalStream) -> f64 {
    let opt = |x: Option<f64>, y: Option<f64>| match (x, y) {
        (Some(x), Some(y)) => (x - y).abs(),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    let mut worst = match (a.plane_normal, b.plane_normal) {
        (Some(x), Some(y)) => (x - y).norm(),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    for k in 0..a.q_norm.len() {
        worst = [
            worst,
            (a.bearing[k] - b.bearing[k]).norm(),
            (a.omega[k] - b.omega[k]).norm(),
            (a.q_norm[k] - b.q_norm[k]).abs(),
            opt(a.alpha[k], b.alpha[k]),
            opt(a.alpha_dot[k], b.alpha_dot[k]),
            opt(a.theta_dot[k], b.theta_dot[k]),
        ]
        .into_iter()
        .fold(0.0, f64::max);
    }
    worst
}

fn criterion_4() -> Outcome {
    let mut optic_worst = 0.0f64;
    let mut scale_worst = 0.0f64;
    for (_, cfg) in canonical() {
        let base = run(&cfg, generate(&cfg).unwrap());
        for k in [0.5, 2.0, 10.0] {
            let scaled_cfg = cfg.scaled(k);
            let s = run(&scaled_cfg, generate(&scaled_cfg).unwrap());
            optic_worst = optic_worst.max(optic_fields_close(&base.optics, &s.optics));
            for j in 0..base.estimates.len() {
                let t = (s.estimates.d_truth[j] - k * base.estimates.d_truth[j]).abs()
                    / (k * base.estimates.d_truth[j]);
                let e = match (base.estimates.d_eq3[j], s.estimates.d_eq3[j]) {
                    (Some(x), Some(y)) => (y - k * x).abs() / (k * x),
                    (None, None) => 0.0,
                    _ => f64::INFINITY,
                };
                scale_worst = scale_worst.max(t).max(e);
            }
        }
    }
    outcome(
        optic_worst <= 1e-12 && scale_worst <= 1e-12,
        format!("k in {{0.5, 2, 10}}: optic field max deviation {optic_worst:.1e}; d_truth and eq3 scale error {scale_worst:.1e}"),
    )
}

fn criterion_5() -> Outcome {
    let grid = TimeGrid::new(100.0, 50, 0.0).unwrap();
    let g = 9.81;
    let slope = |acc: Vec3, support: SupportStream| {
        let inertial = project_inertial(
            &constant_acceleration(grid, acc).unwrap(),
            default_gravity(),
        );
        let est = slope_invariant(&inertial, &support).unwrap();
        est.slope_angle
            .iter()
            .map(|s| s.unwrap())
            .collect::<Vec<f64>>()
    };
    let worst = |values: &[f64], expected: f64| {
        values
            .iter()
            .map(|v| (v - expected).abs())
            .fold(0.0, f64::max)
    };
    let level = slope(Vec3::zeros(), SupportStream::level(grid));
    let ramp = slope(
        Vec3::zeros(),
        SupportStream::tilted_about_y(grid, 10f64.to_radians()).unwrap(),
    );
    let accel = slope(Vec3::new(2.0, 0.0, 0.0), SupportStream::level(grid));
    // The specific force leans back by atan(horizontal / vertical).
    let oracle = (2.0f64 / g).atan();
    let (e0, e1, e2) = (
        worst(&level, 0.0),
        worst(&ramp, std::f64::consts::PI / 18.0),
        worst(&accel, oracle),
    );
    outcome(
        e0 <= 1e-9 && e1 <= 1e-9 && e2 <= 1e-6,
        format!(
            "level {:.9} rad; 10 deg ramp {:.9} rad; 2 m/s^2 {:.9} rad (arctangent oracle {oracle:.9})",
            level[0], ramp[0], accel[0]
        ),
    )
}

fn criterion_6() -> Outcome {
    let detector = DetectorConfig::default();
    let projection = ProjectionConfig::default();
    let (mut live, mut playback, mut indeterminate, mut n) = (0, 0, 0, 0);
    let scenarios = demo_scenarios(DEFAULT_SEED);
    for (_, cfg) in &scenarios {
        let track = generate(cfg).unwrap();
        let p = run(cfg, track.clone());
        let l = p.detect(&detector).unwrap().verdict;
        for hold in [track.position()[0], Vec3::new(0.5, -0.3, 0.2)] {
            let pair = make_playback(&track, hold).unwrap();
            let (op, inertial) =
                replay_optics(&pair, &cfg.object, &projection, default_gravity()).unwrap();
            let v = detect(&op, &inertial, &detector).unwrap().verdict;
            playback += usize::from(v == Verdict::Simulated);
            indeterminate += usize::from(v == Verdict::Indeterminate);
        }
        live += usize::from(l == Verdict::Live);
        indeterminate += usize::from(l == Verdict::Indeterminate);
        n += 1;
    }
    outcome(
        live == n && playback == 2 * n && indeterminate == 0,
        format!(
            "live {live}/{n}; playback simulated {playback}/{}; indeterminate {indeterminate}",
            2 * n
        ),
    )
}

fn criterion_7() -> Outcome {
    let cfg = ScenarioConfig::sway3d_default();
    let ScenarioKind::Sway3d(params) = &cfg.kind else {
        unreachable!()
    };
    let tau = std::f64::consts::TAU;
    let errors = |rate: f64| {
        let grid = TimeGrid::covering(rate, 4.0, 0.0).unwrap();
        // Closed-form sinusoid and its derivatives, evaluated here.
        let x: Vec<Vec3> = grid
            .times()
            .map(|t| {
                Vec3::from_fn(|j, _| {
                    params.amplitude[j] * (tau * params.frequency[j] * t + params.phase[j]).sin()
                })
            })
            .collect();
        let v = differentiate(&x, &grid).unwrap();
        let track = KinematicTrack::from_positions(grid, x).unwrap();
        let a = track.acceleration();
        let mut ev = 0.0f64;
        let mut ea = 0.0f64;
        for (k, t) in grid.times().enumerate() {
            let w = Vec3::from_fn(|j, _| tau * params.frequency[j]);
            let ph = Vec3::from_fn(|j, _| tau * params.frequency[j] * t + params.phase[j]);
            let vt = Vec3::from_fn(|j, _| params.amplitude[j] * w[j] * ph[j].cos());
            let at = Vec3::from_fn(|j, _| -params.amplitude[j] * w[j] * w[j] * ph[j].sin());
            ev = ev.max((v[k] - vt).norm());
            ea = ea.max((a[k] - at).norm());
        }
        (ev, ea)
    };
    let e = [50.0, 100.0, 200.0].map(errors);
    let ratios = [
        e[0].0 / e[1].0,
        e[1].0 / e[2].0,
        e[0].1 / e[1].1,
        e[1].1 / e[2].1,
    ];
    outcome(
        ratios.iter().all(|r| *r >= 3.5),
        format!(
            "velocity error ratios {:.3}, {:.3}; acceleration error ratios {:.3}, {:.3}",
            ratios[0], ratios[1], ratios[2], ratios[3]
        ),
    )
}

fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

fn criterion_8() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_demo(a.path(), DEFAULT_SEED).unwrap();
    let rb = run_demo(b.path(), DEFAULT_SEED).unwrap();
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    let bytes: usize = ta.iter().map(|(_, c)| c.len()).sum();
    outcome(
        ta == tb && ra == rb && !ta.is_empty(),
        format!("{} files, {bytes} bytes, identical: {}", ta.len(), ta == tb),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("eq3 exactness", criterion_1),
        ("eq1 fails on 3d motion", criterion_2),
        ("regime collapse", criterion_3),
        ("optic scale ambiguity", criterion_4),
        ("slope invariant", criterion_5),
        ("simulation detection", criterion_6),
        ("second-order differentiation", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        let mark = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {} {mark}  {name}: {}", i + 1, o.detail);
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
