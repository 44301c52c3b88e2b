//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use renorm_core::cascade::{accumulation_point, alpha_estimate, delta_estimate, BracketConfig, CascadeTable};
use renorm_core::hakim::samples::{petal_map, random_admissible_map, random_conjugation, toy_map};
use renorm_core::hakim::*;
use renorm_core::renorm::*;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: String) -> Self {
        Self { passed, detail }
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

struct Cascade {
    delta: f64,
    alpha: f64,
    c_inf: f64,
    elapsed: Duration,
}

fn cascade() -> Cascade {
    let t0 = Instant::now();
    let table = CascadeTable::compute(9, &BracketConfig::default()).unwrap();
    let delta = delta_estimate(&table).unwrap().value;
    let alpha = alpha_estimate(&table).unwrap().value;
    Cascade {
        delta,
        alpha,
        c_inf: accumulation_point(&table, delta),
        elapsed: t0.elapsed(),
    }
}

fn solve(op: &OperatorConfig, c_inf: f64, order: usize) -> Result<FixedPointSolution, RenormError> {
    solve_fixed_point(op, &initial_guess(op, c_inf, order, 1.0, 3)?, 1e-10)
}

fn fixed_point(op: &OperatorConfig, cas: &Cascade) -> (Verdict, Option<FixedPointSolution>) {
    let t0 = Instant::now();
    let (coarse, fine) = match (solve(op, cas.c_inf, 40), solve(op, cas.c_inf, 80)) {
        (Ok(c), Ok(f)) => (c, f),
        (a, b) => return (Verdict::new(false, format!("solver failed: {:?} / {:?}", a.err(), b.err())), None),
    };
    let elapsed = t0.elapsed();
    let drift = [2, 4]
        .iter()
        .map(|&k| (coarse.germ.series().coeff(k) - fine.germ.series().coeff(k)).norm())
        .fold(0.0, f64::max);
    let passed = fine.residual <= 1e-10 && drift <= 1e-8 && elapsed < Duration::from_secs(30);
    let detail = format!(
        "fixed point at N = 80: residual {:.2e} <= 1e-10, c2/c4 drift from N = 40 {:.2e} <= 1e-8, {:.2} s < 30 s",
        fine.residual,
        drift,
        secs(elapsed)
    );
    (Verdict::new(passed, detail), Some(fine))
}

struct Spectral {
    solution: FixedPointSolution,
    jacobian: nalgebra::DMatrix<Complex64>,
    report: SpectrumReport,
    elapsed: Duration,
}

fn spectral(op: &OperatorConfig, cas: &Cascade) -> Result<Spectral, RenormError> {
    let t0 = Instant::now();
    let solution = solve(op, cas.c_inf, 60)?;
    let jacobian = jacobian(op, &solution.germ)?;
    let report = eigen_spectrum(&jacobian, 60)?;
    Ok(Spectral {
        solution,
        jacobian,
        report,
        elapsed: t0.elapsed(),
    })
}

fn hyperbolicity(sp: &Spectral) -> Verdict {
    let r = &sp.report;
    let expanding = r.eigenvalues.iter().filter(|z| z.norm() > 1.0).count();
    let band = r.eigenvalues.iter().skip(1).filter(|z| (0.95..=1.05).contains(&z.norm())).count();
    let passed = expanding == 1
        && band == 0
        && !r.top_tie
        && r.conjugation_defect <= 1e-9
        && sp.elapsed < Duration::from_secs(120);
    Verdict::new(
        passed,
        format!(
            "hyperbolic spectrum at N = 60: {expanding} eigenvalue(s) outside the unit circle (need 1), \
             {band} in the band [0.95, 1.05] (need 0), conjugation defect {:.2e} <= 1e-9, {:.2} s < 120 s",
            r.conjugation_defect,
            secs(sp.elapsed)
        ),
    )
}

fn delta_match(sp: &Spectral, cas: &Cascade) -> Verdict {
    let delta = sp.report.delta.norm();
    let rel = (delta - cas.delta).abs() / cas.delta;
    let elapsed = sp.elapsed + cas.elapsed;
    Verdict::new(
        rel <= 1e-5 && elapsed < Duration::from_secs(60),
        format!(
            "expanding eigenvalue {delta:.10} vs cascade {:.10}: relative gap {rel:.2e} <= 1e-5, {:.2} s < 60 s",
            cas.delta,
            secs(elapsed)
        ),
    )
}

fn beta_match(op: &OperatorConfig, fstar: &Germ, cas: &Cascade) -> Verdict {
    match find_beta(op, fstar.series()) {
        Ok(beta) => {
            let gap = (beta + 1.0 / cas.alpha).norm();
            Verdict::new(
                gap <= 1e-5,
                format!("rescale factor {:.10} vs -1/alpha = {:.10}: gap {gap:.2e} <= 1e-5", beta.re, -1.0 / cas.alpha),
            )
        }
        Err(e) => Verdict::new(false, format!("rescale factor failed: {e}")),
    }
}

fn eq1(op: &OperatorConfig, fstar: &Germ) -> Verdict {
    match eq1_check(op, fstar, 1e-6) {
        Ok(r) => {
            let worst = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
            let first = worst(&r.first_iterate);
            let detail = match &r.second_iterate {
                None => format!("horizontal-vector identity, first iterate: worst residual {first:.2e} <= 1e-6 over 5 fields"),
                Some(s) => format!(
                    "horizontal-vector identity: first iterate plateaus at {first:.2e}, second iterate {:.2e} <= 1e-6 (flagged)",
                    worst(s)
                ),
            };
            Verdict::new(r.passed, detail)
        }
        Err(e) => Verdict::new(false, format!("horizontal-vector identity failed: {e}")),
    }
}

fn tower(fstar: &FixedPointSolution) -> Verdict {
    match tower_check(&fstar.germ, fstar.beta, 5) {
        Ok(levels) => {
            let worst = levels.iter().map(|l| l.residual).fold(0.0, f64::max);
            let radii: Vec<String> = levels.iter().map(|l| format!("{:.3}", l.radius)).collect();
            Verdict::new(
                worst <= 1e-9 && levels.len() == 5,
                format!("tower law for levels 1..5 on radii [{}]: worst {worst:.2e} <= 1e-9", radii.join(", ")),
            )
        }
        Err(e) => Verdict::new(false, format!("tower check failed: {e}")),
    }
}

fn contraction(op: &OperatorConfig, sp: &Spectral, cas: &Cascade) -> Verdict {
    let run = || -> Result<(ContractionTrace, f64), RenormError> {
        let proj = UnstableProjection::new(&sp.jacobian, sp.report.delta, &sp.solution.germ)?;
        let f0 = Germ::normalized_quadratic(cas.c_inf, 60, 1.0)?;
        Ok((contraction_trace(op, &f0, &sp.solution.germ, 15, Some(&proj))?, sp.report.stable_radius.ln()))
    };
    match run() {
        Ok((trace, target)) => {
            let rel = (trace.slope - target).abs() / target.abs();
            Verdict::new(
                trace.failure.is_none() && trace.slope < 0.0 && rel <= 0.10,
                format!(
                    "contraction over 15 steps: slope {:.4} vs log(stable radius) {target:.4}, relative gap {rel:.3} <= 0.10",
                    trace.slope
                ),
            )
        }
        Err(e) => Verdict::new(false, format!("contraction trace failed: {e}")),
    }
}

fn petal_rates() -> Verdict {
    let t0 = Instant::now();
    let window = FitWindow { start: 1_000, end: 100_000 };
    let mut worst_rel: f64 = 0.0;
    let mut worst_c: f64 = 0.0;
    let mut worst_spread: f64 = 1.0;
    let mut failures = Vec::new();
    for k in 1..=3u8 {
        for coupled in [false, true] {
            let t = petal_map(k, coupled, 8).unwrap();
            let seeds: [Complex64; 3] = if coupled {
                [Complex64::new(0.02, 0.0), Complex64::new(0.03, 0.01), Complex64::new(0.025, -0.005)]
            } else {
                [Complex64::new(0.1, 0.0), Complex64::new(0.05, 0.02), Complex64::new(0.03, -0.01)]
            };
            let mut cs = Vec::new();
            for w in seeds {
                let seed = (petal_seed_x(&t, w).unwrap(), vec![Complex64::new(0.01, 0.0)]);
                match iterate_petal(&t, seed, 100_000, &PetalConfig::default(), Some(window)) {
                    Ok(o) => {
                        let target = -1.0 / k as f64;
                        worst_rel = worst_rel.max((o.fitted_exponent - target).abs() / target.abs());
                        cs.push(o.sandwich_constant);
                    }
                    Err(e) => failures.push(format!("k = {k}, coupled = {coupled}: {e}")),
                }
            }
            let (lo, hi) = cs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
            worst_c = worst_c.max(hi);
            worst_spread = worst_spread.max(hi / lo);
        }
    }
    let elapsed = t0.elapsed();
    let passed = failures.is_empty() && worst_rel <= 0.03 && worst_c.is_finite() && worst_c < 10.0;
    let mut detail = format!(
        "petal rates for k = 1, 2, 3 with and without coupling: worst exponent error {:.2}% <= 3%, \
         sandwich constants <= {worst_c:.3} < 10 (max/min across seeds {worst_spread:.3}), {:.2} s",
        100.0 * worst_rel,
        secs(elapsed)
    );
    if !failures.is_empty() {
        detail.push_str(&format!("; {}", failures.join("; ")));
    }
    Verdict::new(passed, detail)
}

fn invariance() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut held = 0;
    let mut total = 0;
    let mut errors = Vec::new();
    for n in [3, 4] {
        let t = toy_map(n, 10).unwrap();
        for _ in 0..20 {
            total += 1;
            let v = random_conjugation(&mut rng, t.nvars(), 10);
            let k = rng.gen_range(2..=3);
            match multiplicity_invariance(&t, &v, k) {
                Ok(r) if r.holds() => held += 1,
                Ok(r) => errors.push(format!("{r:?}")),
                Err(e) => errors.push(e.to_string()),
            }
        }
    }
    let mut detail = format!(
        "multiplicity invariance: {held}/{total} random conjugations of multiplicity-3 and -4 maps preserve \
         multiplicity with constant zero counts over the lambda sweep"
    );
    if let Some(e) = errors.first() {
        detail.push_str(&format!("; first failure: {e}"));
    }
    Verdict::new(held == total, detail)
}

fn normal_forms() -> Verdict {
    const CAP: u32 = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut stable, mut linear, mut ydep, mut replay) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut errors = Vec::new();
    let mut count = 0;
    for m in 0..=2 {
        for _ in 0..10 {
            count += 1;
            let mut run = || -> Result<(f64, f64, f64, f64), HakimError> {
                let t = random_admissible_map(&mut rng, m, CAP)?;
                let log = reduce(&t, CAP - 2)?;
                let r = &log.result;
                Ok((
                    stable_manifold_defect(r),
                    linear_defect(r),
                    y_dependence_defect(r, 2, (CAP - 2) as u8),
                    log.replay_residual()?.max(log.stage_round_trip_residual()?),
                ))
            };
            match run() {
                Ok((a, b, c, d)) => {
                    stable = stable.max(a);
                    linear = linear.max(b);
                    ydep = ydep.max(c);
                    replay = replay.max(d);
                }
                Err(e) => errors.push(e.to_string()),
            }
        }
    }
    let passed = errors.is_empty() && stable <= 1e-10 && linear <= 1e-10 && ydep <= 1e-10 && replay <= 1e-9;
    let mut detail = format!(
        "normal forms of {count} random maps (m <= 2, D = 10): F(0, y) {stable:.1e}, a1 - 1 {linear:.1e}, \
         y-dependence of a2..a8 {ydep:.1e} (each <= 1e-10), round trip {replay:.1e} <= 1e-9"
    );
    if let Some(e) = errors.first() {
        detail.push_str(&format!("; first failure: {e}"));
    }
    Verdict::new(passed, detail)
}

fn series_laws() -> Verdict {
    use common::laws::*;
    const TRIALS: u32 = 1000;
    const TOL: f64 = 1e-12;
    let strategy = (
        common::series_triple(),
        common::inner_triple(),
        common::eval_case(),
        common::scale_factor(),
        common::scale_factor(),
        0.0..1.0f64,
    );
    let mut runner = TestRunner::new_with_rng(
        Config::with_cases(TRIALS),
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    let mut worst: f64 = 0.0;
    let mut failed = 0;
    for _ in 0..TRIALS {
        let ((f, g, h), (p, q, s), (e, u, z), a, b, r) = strategy.new_tree(&mut runner).unwrap().current();
        let defects = [
            add_commutes(&f, &g),
            add_associates(&f, &g, &h),
            additive_inverse(&f),
            mul_commutes(&f, &g),
            mul_associates(&f, &g, &h),
            distributes(&f, &g, &h),
            unit_is_neutral(&f),
            norm_subadditive(&f, &g, r),
            norm_submultiplicative(&f, &g, r),
            compose_associates(&p, &q, &s),
            conjugation_group_law(&p, a, b),
            conjugation_respects_composition(&p, &q, a),
            eval_compose_consistent(&e, &u, z),
            eval_multiply_consistent(&e, &u, z),
        ];
        let m = defects.iter().copied().fold(0.0, f64::max);
        worst = worst.max(m);
        if !(m <= TOL) {
            failed += 1;
        }
    }
    Verdict::new(
        failed == 0,
        format!(
            "series kernel laws: {}/{TRIALS} randomized trials within {TOL:e}, worst defect {worst:.2e}",
            TRIALS - failed
        ),
    )
}

fn main() -> ExitCode {
    let op = OperatorConfig::default();
    let cas = cascade();
    let mut verdicts: Vec<(u32, Verdict)> = Vec::new();
    let (v1, fine) = fixed_point(&op, &cas);
    verdicts.push((1, v1));
    let sp = spectral(&op, &cas);
    match &sp {
        Ok(sp) => {
            verdicts.push((2, hyperbolicity(sp)));
            verdicts.push((3, delta_match(sp, &cas)));
        }
        Err(e) => {
            verdicts.push((2, Verdict::new(false, format!("spectrum at N = 60 failed: {e}"))));
            verdicts.push((3, Verdict::new(false, "no spectrum to compare".into())));
        }
    }
    match &fine {
        Some(f) => {
            verdicts.push((4, beta_match(&op, &f.germ, &cas)));
            verdicts.push((5, eq1(&op, &f.germ)));
            verdicts.push((6, tower(f)));
        }
        None => {
            for n in 4..=6 {
                verdicts.push((n, Verdict::new(false, "no fixed point at N = 80".into())));
            }
        }
    }
    verdicts.push((
        7,
        match &sp {
            Ok(sp) => contraction(&op, sp, &cas),
            Err(_) => Verdict::new(false, "no spectrum at N = 60".into()),
        },
    ));
    verdicts.push((8, petal_rates()));
    verdicts.push((9, invariance()));
    verdicts.push((10, normal_forms()));
    verdicts.push((11, series_laws()));
    let mut all = true;
    for (n, v) in &verdicts {
        println!("{} [{n:>2}] {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
        all &= v.passed;
    }
    let passed = verdicts.iter().filter(|(_, v)| v.passed).count();
    println!("acceptance: {passed}/{} criteria passed", verdicts.len());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
