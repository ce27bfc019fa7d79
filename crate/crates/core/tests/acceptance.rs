//! Acceptance criteria, one test each. Tests run one at a time so the
//! reported runtimes are not inflated by each other, and each prints a
//! single PASS/FAIL line straight to stderr (bypassing output capture).

use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use opinion_core::axial::oracle::{brute_force_axials, compare, Verdict};
use opinion_core::axial::{catalog, check_record, quadratic_equivariant, Mode};
use opinion_core::group::{act, GroupElement};
use opinion_core::linalg::Subspace;
use opinion_core::model::{drift, ModelInstance, ModelParams};
use opinion_core::presets::{self, fig4_fixed, fig5_sequence, fig6_checks, Figure, PresetOptions, Side};
use opinion_core::spectral::{bisect_crossing, critical_lambdas, BifurcationKind};
use opinion_core::state::{project_dissensus, DeviationState};

static SERIAL: Mutex<()> = Mutex::new(());

fn report(n: u32, passed: bool, secs: f64, limit: Option<f64>, detail: &str) {
    let within = limit.is_none_or(|l| secs < l);
    let verdict = if passed && within { "PASS" } else { "FAIL" };
    let budget = limit.map_or(String::new(), |l| format!(" (budget {l} s)"));
    let _ = writeln!(std::io::stderr(), "criterion {n}: {verdict} [{secs:.1} s{budget}] {detail}");
    assert!(passed, "criterion {n}: {detail}");
    assert!(within, "criterion {n}: took {secs:.1} s, budget {limit:?} s");
}

fn random_tangent(na: usize, no: usize, rng: &mut ChaCha8Rng) -> DeviationState {
    let data = (0..na * no).map(|_| rng.random_range(-1.0..1.0)).collect();
    DeviationState::centered(na, no, data).unwrap()
}

#[test]
fn criterion_1_equivariance() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let na = rng.random_range(1..=10);
        let no = rng.random_range(2..=5);
        let mut gain = || rng.random_range(-2.0..=2.0);
        let (alpha, beta, gamma, delta) = (gain(), gain(), gain(), gain());
        let b = rng.random_range(-2.0..=2.0);
        let lambda = rng.random_range(0.0..=3.0);
        let m = ModelInstance::homogeneous_with(
            na,
            no,
            ModelParams { alpha, beta, gamma, delta, lambda, k_hto: 0.5, bias: vec![b; na * no] },
        )
        .unwrap();
        let g = GroupElement::random(na, no, &mut rng);
        let z = random_tangent(na, no, &mut rng);
        let lhs = act(&g, &drift(&z, &m).unwrap()).unwrap();
        let rhs = drift(&act(&g, &z).unwrap(), &m).unwrap();
        worst = worst.max(lhs.sub(&rhs).norm_inf());
    }
    report(1, worst <= 1e-10, t.elapsed().as_secs_f64(), Some(5.0), &format!("max violation {worst:e} over 50 (g, z)"));
}

#[test]
fn criterion_2_critical_lambda() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 20 {
        let na = rng.random_range(2..=10);
        let no = rng.random_range(2..=5);
        let alpha: f64 = rng.random_range(-2.0..=2.0);
        let beta: f64 = rng.random_range(-2.0..=2.0);
        let gamma: f64 = rng.random_range(-2.0..=2.0);
        let delta: f64 = rng.random_range(-2.0..=2.0);
        if alpha - beta <= 0.0 || (gamma - delta).abs() < 1e-3 {
            continue;
        }
        let p = critical_lambdas(alpha, beta, gamma, delta, na).unwrap();
        let lc = p.critical_lambda.unwrap();
        let which = if p.kind == BifurcationKind::Consensus { Subspace::Consensus } else { Subspace::Dissensus };
        let m = ModelInstance::homogeneous(na, no, alpha, beta, gamma, delta, lc).unwrap();
        let found = bisect_crossing(&m, which, 0.0, 2.0 * lc, 1e-12).unwrap();
        worst = worst.max((found - lc).abs() / lc);
        done += 1;
    }
    let fig4_a = critical_lambdas(0.0, -1.5, 0.2, 0.1, 17).unwrap().critical_lambda.unwrap();
    let fig4_d = critical_lambdas(0.0, -0.5, 0.1, 0.2, 17).unwrap().critical_lambda.unwrap();
    let fig_ok = (fig4_a - 0.322581).abs() <= 1e-6 && (fig4_d - 1.666667).abs() <= 1e-6;
    report(
        2,
        worst <= 1e-6 && fig_ok,
        t.elapsed().as_secs_f64(),
        Some(10.0),
        &format!("max relative error {worst:e} over 20 sets; consensus {fig4_a:.6}, dissensus {fig4_d:.6}"),
    );
}

#[test]
fn criterion_3_outcomes() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let theta = 0.05;
    let mut failures = Vec::new();
    for seed in 1..=10u64 {
        let opts = PresetOptions { seed, ..PresetOptions::default() };
        for mode in [Mode::Consensus, Mode::Dissensus] {
            for side in [Side::Below, Side::Above] {
                let (s, _) = fig4_fixed(mode, side, &opts).unwrap();
                let ok = match (mode, side) {
                    (_, Side::Below) => s.final_norm <= theta,
                    (Mode::Consensus, Side::Above) => s.final_class == "consensus",
                    (Mode::Dissensus, Side::Above) => s.final_class.starts_with("dissensus") && s.final_mean_norm <= theta,
                };
                if !ok {
                    failures.push(format!(
                        "seed {seed} {}: {} |z|={:.4} |mean|={:.4}",
                        s.name, s.final_class, s.final_norm, s.final_mean_norm
                    ));
                }
            }
        }
    }
    let detail = if failures.is_empty() {
        "40/40 runs as predicted".to_string()
    } else {
        format!("{}/40 runs off: {}", failures.len(), failures.join("; "))
    };
    report(3, failures.is_empty(), t.elapsed().as_secs_f64(), Some(60.0), &detail);
}

#[test]
fn criterion_4_axial_records() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let (mut total, mut via_reynolds) = (0, 0);
    let mut bad = Vec::new();
    for n in 1..=12 {
        for k in 2..=6 {
            for mode in [Mode::Consensus, Mode::Dissensus] {
                for r in catalog(n, k, mode) {
                    let c = check_record(&r).unwrap();
                    total += 1;
                    via_reynolds += usize::from(c.reynolds);
                    if !c.passes() {
                        bad.push(format!("({n},{k}) {}", c.label));
                    }
                }
            }
        }
    }
    report(
        4,
        bad.is_empty(),
        t.elapsed().as_secs_f64(),
        Some(30.0),
        &format!("{total} records, {via_reynolds} by group averaging, rest by orbit partition; failing: {bad:?}"),
    );
}

#[test]
fn criterion_5_oracle() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, k) in [(3, 2), (2, 3), (3, 3), (4, 2), (2, 4)] {
        let o = brute_force_axials(n, k, Mode::Dissensus).unwrap();
        let c = compare(&catalog(n, k, Mode::Dissensus), &o);
        ok &= c.verdict == Verdict::Match;
        if (n, k) == (3, 3) {
            ok &= c.oracle_classes == 2;
        }
        parts.push(format!("({n},{k}) {:?} {}", c.verdict, c.oracle_classes));
    }
    report(5, ok, t.elapsed().as_secs_f64(), Some(300.0), &parts.join(", "));
}

#[test]
fn criterion_6_quadratic_equivariant() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut equiv: f64 = 0.0;
    for _ in 0..200 {
        let na = rng.random_range(1..=8);
        let no = rng.random_range(2..=5);
        let g = GroupElement::random(na, no, &mut rng);
        let z = random_tangent(na, no, &mut rng);
        let lhs = act(&g, &quadratic_equivariant(&z)).unwrap();
        let rhs = quadratic_equivariant(&act(&g, &z).unwrap());
        equiv = equiv.max(lhs.sub(&rhs).norm_inf());
    }
    // Largest ‖Fq(z)‖ over unit vectors of W_d: random samples plus the
    // catalog lines.
    let mut witness = |na: usize, no: usize| {
        let mut best: f64 = 0.0;
        let unit = |z: DeviationState| z.scale(1.0 / z.norm());
        for _ in 0..200 {
            let z = unit(project_dissensus(&random_tangent(na, no, &mut rng)));
            best = best.max(quadratic_equivariant(&z).norm());
        }
        for r in catalog(na, no, Mode::Dissensus) {
            best = best.max(quadratic_equivariant(&r.fix_generator).norm());
        }
        best
    };
    let (w3, w4) = (witness(3, 3), witness(4, 4));
    let mut vanish: f64 = 0.0;
    for na in 1..=8 {
        for _ in 0..100 {
            let z = project_dissensus(&random_tangent(na, 2, &mut rng));
            vanish = vanish.max(quadratic_equivariant(&z).norm_inf());
        }
    }
    let ok = equiv <= 1e-12 && w3 > 0.1 && w4 > 0.1 && vanish <= 1e-12;
    report(
        6,
        ok,
        t.elapsed().as_secs_f64(),
        None,
        &format!("equivariance {equiv:e}; witness (3,3) {w3:.3}, (4,4) {w4:.3}; No=2 max {vanish:e}"),
    );
}

#[test]
fn criterion_7_switchiness() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let out = presets::run(Figure::Fig6, &PresetOptions::default()).unwrap();
    let checks = fig6_checks(&out.summary.runs);
    let ok = checks.iter().all(|c| c.passed);
    let detail: Vec<String> = checks.iter().map(|c| format!("{} {}: {}", if c.passed { "ok" } else { "off" }, c.name, c.detail)).collect();
    report(7, ok, t.elapsed().as_secs_f64(), Some(120.0), &detail.join("; "));
}

#[test]
fn criterion_8_fig5_sequence() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let out = presets::run(Figure::Fig5, &PresetOptions::default()).unwrap();
    let run = &out.summary.runs[0];
    let seq = fig5_sequence(&run.timeline);
    let phases: Vec<String> = run.timeline.iter().map(|p| format!("{}@{}", p.class, p.start)).collect();
    let me = &run.moderate_extremist;
    report(
        8,
        seq.passed,
        t.elapsed().as_secs_f64(),
        Some(120.0),
        &format!("timeline {}; moderate/extremist detected: {} (nearest {:?})", phases.join(" > "), me.detected, me.nearest_axial),
    );
}

#[test]
fn criterion_9_determinism() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let opts = PresetOptions { seed: 7, ..PresetOptions::default() };
    let mut diffs = Vec::new();
    let mut count = 0;
    for f in [Figure::Fig4, Figure::Fig5, Figure::Fig6] {
        let a = presets::run(f, &opts).unwrap().files;
        let b = presets::run(f, &opts).unwrap().files;
        count += a.len();
        if a.len() != b.len() {
            diffs.push(format!("{f}: file count"));
        }
        for ((na, ba), (nb, bb)) in a.iter().zip(&b) {
            if na != nb || ba != bb {
                diffs.push(format!("{f}/{na}"));
            }
        }
    }
    report(9, diffs.is_empty(), t.elapsed().as_secs_f64(), None, &format!("{count} files compared; differing: {diffs:?}"));
}
