use std::error::Error;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use renorm_core::cascade::{accumulation_point, alpha_estimate, delta_estimate, BracketConfig, CascadeTable};
use renorm_core::hakim::samples::{petal_map, random_admissible_map, random_conjugation, toy_map};
use renorm_core::hakim::{
    iterate_petal, linear_defect, multiplicity_invariance, petal_seed_x, reduce, stable_manifold_defect,
    y_dependence_defect, FitWindow, Multiplicity, PetalConfig,
};
use renorm_core::renorm::{
    contraction_trace, eigen_spectrum, eq1_check, initial_guess, jacobian, solve_fixed_point, tower_check,
    FixedPointSolution, Germ, OperatorConfig, UnstableProjection,
};

use crate::config::{Experiment, ExperimentConfig};
use crate::report::{Report, Table, Verdict};

type Outcome = Result<(), Box<dyn Error>>;

/// Runs the configured experiment. Module errors do not escape: they are
/// recorded in the report's error chain.
pub fn run(config: &ExperimentConfig) -> Report {
    let mut report = Report::new(config.experiment.name());
    report.inputs = config.values.clone();
    report.tolerances = config.tolerances.clone();
    let outcome = match config.experiment {
        Experiment::Cascade => cascade(config, &mut report),
        Experiment::FixedPoint => fixed_point(config, &mut report),
        Experiment::Spectrum => spectrum(config, &mut report),
        Experiment::Eq1Check => eq1(config, &mut report),
        Experiment::TowerCheck => tower(config, &mut report),
        Experiment::Contraction => contraction(config, &mut report),
        Experiment::HakimNormalform => normal_form(config, &mut report),
        Experiment::Petal => petal(config, &mut report),
        Experiment::MultiplicityInvariance => invariance(config, &mut report),
    };
    if let Err(e) = outcome {
        report.fail_with(e.as_ref());
    }
    report.finish();
    report
}

fn complex(report: &mut Report, key: &str, z: Complex64) {
    report.scalar(&format!("{key}_re"), z.re);
    report.scalar(&format!("{key}_im"), z.im);
}

struct Constants {
    delta: f64,
    alpha: f64,
    c_inf: f64,
}

/// Cascade estimates of the universal constants and the accumulation point.
fn constants(depth: usize) -> Result<Constants, Box<dyn Error>> {
    let table = CascadeTable::compute(depth, &BracketConfig::default())?;
    let delta = delta_estimate(&table)?.value;
    Ok(Constants {
        delta,
        alpha: alpha_estimate(&table)?.value,
        c_inf: accumulation_point(&table, delta),
    })
}

fn operator(config: &ExperimentConfig) -> OperatorConfig {
    OperatorConfig {
        norm_radius: config.real("norm_radius"),
        ..OperatorConfig::default()
    }
}

fn solve(op: &OperatorConfig, c_inf: f64, order: usize, tol: f64) -> Result<FixedPointSolution, Box<dyn Error>> {
    let guess = initial_guess(op, c_inf, order, 1.0, 3)?;
    Ok(solve_fixed_point(op, &guess, tol)?)
}

fn cascade(config: &ExperimentConfig, report: &mut Report) -> Outcome {
    let bracket = BracketConfig {
        far: config.real("bracket_far"),
        near: config.real("bracket_near"),
        initial_ratio: config.real("initial_ratio"),
    };
    let table = CascadeTable::compute(config.count("cascade_depth"), &bracket)?;
    for (n, c) in table.superstable_params.iter().enumerate() {
        report.scalar(&format!("c_{n}"), *c);
    }
    let delta = delta_estimate(&table)?;
    let alpha = alpha_estimate(&table)?;
    report.scalar("delta", delta.value);
    report.scalar("delta_raw_last", delta.raw_last);
    report.scalar("alpha", alpha.value);
    report.scalar("alpha_raw_last", alpha.raw_last);
    report.scalar("c_inf", accumulation_point(&table, delta.value));
    if delta.warning {
        report.notes.push("delta tail is not geometric; extrapolation flagged".into());
    }
    if alpha.warning {
        report.notes.push("alpha tail is not geometric; extrapolation flagged".into());
    }
    if !alpha.alternating {
        report.notes.push("closest returns do not alternate in sign".into());
    }
    let mut rows = Table::new(&["n", "c_n", "residual", "delta_ratio", "d_n", "alpha_ratio"]);
    for (n, c) in table.superstable_params.iter().enumerate() {
        let back = |shift: usize, v: &[f64]| n.checked_sub(shift).and_then(|i| v.get(i)).copied();
        rows.push(vec![
            Some(n as f64),
            Some(*c),
            table.residuals.get(n).copied(),
            back(2, &table.delta_ratios),
            back(1, &table.closest_returns),
            back(1, &table.alpha_ratios),
        ]);
    }
    report.tables.insert("cascade".into(), rows);
    let worst = table.residuals.iter().copied().fold(0.0, f64::max);
    report.verdict(Verdict::at_most("max_residual", worst, config.tolerance("residual")));
    Ok(())
}

fn coefficients(germ: &Germ) -> Table {
    let mut t = Table::new(&["index", "re_c", "im_c"]);
    for i in 0..=germ.order() {
        let c = germ.series().coeff(i);
        t.push_full(&[i as f64, c.re, c.im]);
    }
    t
}

fn fixed_point(config: &ExperimentConfig, report: &mut Report) -> Outcome {
    let op = operator(config);
    let k = constants(config.count("cascade_depth"))?;
    let tol = config.tolerance("residual");
    let sol = solve(&op, k.c_inf, config.count("truncation_order"), tol)?;
    report.scalar("residual", sol.residual);
    report.scalar("newton_steps", sol.steps as f64);
    report.scalar("cascade_alpha", k.alpha);
    complex(report, "beta", sol.beta);
    report.tables.insert("coefficients".into(), coefficients(&sol.germ));
    let mut hist = Table::new(&["step", "residual"]);
    for (i, r) in sol.residual_history.iter().enumerate() {
        hist.push_full(&[i as f64, *r]);
    }
    report.tables.insert("newton".into(), hist);
    report.verdict(Verdict::at_most("residual", sol.residual, tol));
    Ok(())
}

fn spectrum(config: &ExperimentConfig, report: &mut Report) -> Outcome {
    let op = operator(config);
    let k = constants(config.count("cascade_depth"))?;
    let order = config.count("truncation_order");
    let sol = solve(&op, k.c_inf, order, 1e-10)?;
    let eig = eigen_spectrum(&jacobian(&op, &sol.germ)?, order)?;
    complex(report, "delta", eig.delta);
    report.scalar("delta", eig.delta.norm());
    report.scalar("cascade_delta", k.delta);
    report.scalar("stable_radius", eig.stable_radius);
    report.scalar("fixed_point_residual", sol.residual);
    let mut t = Table::new(&["index", "re_lambda", "im_lambda", "modulus"]);
    for (i, z) in eig.eigenvalues.iter().enumerate() {
        t.push_full(&[i as f64, z.re, z.im, z.norm()]);
    }
    report.tables.insert("spectrum".into(), t);
    if eig.top_tie {
        report.notes.push("two eigenvalues share the top modulus; spectrum is not hyperbolic".into());
    }
    let band = config.tolerance("unit_band");
    let in_band = eig
        .eigenvalues
        .iter()
        .skip(1)
        .filter(|z| (z.norm() - 1.0).abs() <= band)
        .count();
    let rel = (eig.delta.norm() - k.delta).abs() / k.delta;
    report.verdict(Verdict::equals("expanding_count", eig.expanding_count as f64, 1.0));
    report.verdict(Verdict::equals("top_tie", f64::from(u8::from(eig.top_tie)), 0.0));
    report.verdict(Verdict::equals("unit_band_count", in_band as f64, 0.0));
    report.verdict(Verdict::at_most("conjugation_defect", eig.conjugation_defect, config.tolerance("conjugation")));
    report.verdict(Verdict::at_most("delta_relative_gap", rel, config.tolerance("delta")));
    Ok(())
}

fn eq1(config: &ExperimentConfig, report: &mut Report) -> Outcome {
    let op = operator(config);
    let k = constants(config.count("cascade_depth"))?;
    let sol = solve(&op, k.c_inf, config.count("truncation_order"), 1e-10)?;
    let tol = config.tolerance("eq1");
    let r = eq1_check(&op, &sol.germ, tol)?;
    report.scalar("iterate", r.iterate as f64);
    let decisive = r.second_iterate.as_ref().unwrap_or(&r.first_iterate);
    let mut t = Table::new(&["field", "first_iterate", "second_iterate"]);
    for (i, name) in r.names.iter().enumerate() {
        report.notes.push(format!("field {i}: {name}"));
        let second = r.second_iterate.as_ref().map(|s| s[i]);
        t.push(vec![Some(i as f64), Some(r.first_iterate[i]), second]);
    }
    report.tables.insert("eq1".into(), t);
    if r.iterate > 1 {
        report
            .notes
            .push(format!("single-step residuals plateau above {tol:e}; verdict uses iterate {}", r.iterate));
    }
    let worst = decisive.iter().copied().fold(0.0, f64::max);
    report.scalar("max_residual", worst);
    report.verdict(Verdict::at_most("max_residual", worst, tol));
    Ok(())
}

fn tower(config: &ExperimentConfig, report: &mut Report) -> Outcome {
    let op = operator(config);
    let k = constants(config.count("cascade_depth"))?;
    let sol = solve(&op, k.c_inf, config.count("truncation_order"), 1e-10)?;
    let levels = tower_check(&sol.germ, sol.beta, config.count("levels") as u32)?;
    let mut t = Table::new(&["level", "radius", "residual"]);
    for l in &levels {
        t.push_full(&[l.level as f64, l.radius, l.residual]);
    }
    report.tables.insert("tower".into(), t);
    let worst = levels.iter().map(|l| l.residual).fold(0.0, f64::max);
    report.scalar("max_residual", worst);
    report.verdict(Verdict::at_most("max_residual", worst, config.tolerance("tower")));
    Ok(())
}

fn contraction(config: &ExperimentConfig, report: &mut Report) -> Outcome {
    let op = operator(config);
    let k = constants(config.count("cascade_depth"))?;
    let order = config.count("truncation_order");
    let sol = solve(&op, k.c_inf, order, 1e-10)?;
    let j = jacobian(&op, &sol.germ)?;
    let eig = eigen_spectrum(&j, order)?;
    let proj = match config.flag("project") {
        true => Some(UnstableProjection::new(&j, eig.delta, &sol.germ)?),
        false => None,
    };
    let f0 = Germ::normalized_quadratic(k.c_inf, order, 1.0)?;
    let trace = contraction_trace(&op, &f0, &sol.germ, config.count("steps"), proj.as_ref())?;
    let mut t = Table::new(&["n", "distance"]);
    for (n, d) in trace.distances.iter().enumerate() {
        t.push_full(&[n as f64, *d]);
    }
    report.tables.insert("contraction".into(), t);
    if let Some((n, e)) = &trace.failure {
        report.notes.push(format!("step {n} could not be renormalized: {e}"));
    }
    let target = eig.stable_radius.ln();
    let rel = (trace.slope - target).abs() / target.abs();
    report.scalar("slope", trace.slope);
    report.scalar("log_stable_radius", target);
    report.verdict(Verdict::below("slope", trace.slope, 0.0));
    report.verdict(Verdict::at_most("slope_relative_gap", rel, config.tolerance("slope")));
    Ok(())
}

fn normal_form(config: &ExperimentConfig, report: &mut Report) -> Outcome {
    let cap = config.count("degree_cap") as u32;
    let up_to = config.count("up_to") as u32;
    let m = config.count("nvars") - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed());
    let mut t = Table::new(&["trial", "stable_manifold", "linear", "y_dependence", "replay", "round_trip"]);
    let mut worst_defect: f64 = 0.0;
    let mut worst_replay: f64 = 0.0;
    for trial in 0..config.count("trials") {
        let map = random_admissible_map(&mut rng, m, cap)?;
        let log = reduce(&map, up_to)?;
        if trial == 0 {
            report.notes.extend(log.stages.iter().map(|s| format!("stage {}", s.stage.tag())));
        }
        let r = &log.result;
        let defects = [
            stable_manifold_defect(r),
            linear_defect(r),
            y_dependence_defect(r, 2, up_to.min(u8::MAX as u32) as u8),
        ];
        let replay = [log.replay_residual()?, log.stage_round_trip_residual()?];
        t.push_full(&[trial as f64, defects[0], defects[1], defects[2], replay[0], replay[1]]);
        worst_defect = defects.iter().copied().fold(worst_defect, f64::max);
        worst_replay = replay.iter().copied().fold(worst_replay, f64::max);
    }
    report.tables.insert("normal_form".into(), t);
    report.scalar("max_defect", worst_defect);
    report.scalar("max_replay", worst_replay);
    report.verdict(Verdict::at_most("max_defect", worst_defect, config.tolerance("defect")));
    report.verdict(Verdict::at_most("max_replay", worst_replay, config.tolerance("replay")));
    Ok(())
}

fn petal(config: &ExperimentConfig, report: &mut Report) -> Outcome {
    let k = config.count("k");
    let k = u8::try_from(k).map_err(|_| format!("petal exponent {k} is too large"))?;
    let map = petal_map(k, config.flag("coupled"), config.count("degree_cap") as u32)?;
    let x0 = petal_seed_x(&map, Complex64::new(config.real("seed_w"), 0.0))?;
    let y0 = vec![Complex64::new(config.real("y0"), 0.0); map.m()];
    let steps = config.count("steps");
    let window = FitWindow {
        start: config.count("window_start"),
        end: steps,
    };
    let petal = PetalConfig {
        radius: config.real("petal_radius"),
        rho: config.real("petal_rho"),
        ..PetalConfig::default()
    };
    let orbit = iterate_petal(&map, (x0, y0), steps, &petal, Some(window))?;
    let target = -1.0 / orbit.k as f64;
    let rel = (orbit.fitted_exponent - target).abs() / target.abs();
    complex(report, "seed_x", x0);
    report.scalar("fitted_exponent", orbit.fitted_exponent);
    report.scalar("target_exponent", target);
    report.scalar("sandwich_constant", orbit.sandwich_constant);
    report.scalar("y_monotone_from", orbit.y_monotone_from as f64);
    let e = 1.0 / orbit.k as f64;
    let mut t = Table::new(&["n", "re_x", "im_x", "|y|", "|x|*n^{1/k}"]);
    let y = orbit.y_norms();
    for (n, (x, _)) in orbit.points.iter().enumerate().step_by(config.count("stride")) {
        t.push_full(&[n as f64, x.re, x.im, y[n], x.norm() * (n as f64).powf(e)]);
    }
    report.tables.insert("orbit".into(), t);
    report.verdict(Verdict::at_most("exponent_relative_gap", rel, config.tolerance("exponent")));
    report.verdict(Verdict::below("sandwich_constant", orbit.sandwich_constant, config.tolerance("sandwich")));
    Ok(())
}

fn multiplicity_value(m: Multiplicity) -> Option<f64> {
    match m {
        Multiplicity::Finite(n) => Some(n as f64),
        Multiplicity::Infinite => None,
    }
}

fn invariance(config: &ExperimentConfig, report: &mut Report) -> Outcome {
    let map = toy_map(config.count("multiplicity") as u32, config.count("degree_cap") as u32)?;
    let ks = config.counts("k_values");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed());
    let mut t = Table::new(&["trial", "k", "original", "conjugated", "min_count", "max_count"]);
    let mut failures = 0;
    for trial in 0..config.count("trials") {
        let v = random_conjugation(&mut rng, map.nvars(), map.degree_cap());
        let k = ks[rng.gen_range(0..ks.len())];
        let r = multiplicity_invariance(&map, &v, k as u32)?;
        let counts = r.sweep.iter().map(|&(_, c)| c as f64);
        let lo = counts.clone().fold(f64::INFINITY, f64::min);
        let hi = counts.fold(f64::NEG_INFINITY, f64::max);
        t.push(vec![
            Some(trial as f64),
            Some(k as f64),
            multiplicity_value(r.original),
            multiplicity_value(r.conjugated),
            Some(lo),
            Some(hi),
        ]);
        failures += usize::from(!r.holds());
    }
    report.tables.insert("invariance".into(), t);
    report.verdict(Verdict::equals("failed_trials", failures as f64, 0.0));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_text(text: &str) -> Report {
        run(&ExperimentConfig::parse(text).unwrap())
    }

    #[test]
    fn cascade_echoes_analytic_roots() {
        let r = run_text("experiment = cascade\ncascade_depth = 5\n");
        assert!(r.passed, "{r:?}");
        assert_eq!(r.scalars["c_0"], 0.0);
        assert_eq!(r.scalars["c_1"], -1.0);
        assert_eq!(r.tables["cascade"].rows.len(), 6);
        assert_eq!(r.inputs["cascade_depth"], "5");
    }

    #[test]
    fn module_errors_become_the_error_chain() {
        let r = run_text("experiment = cascade\ncascade_depth = 3\n");
        assert!(!r.passed);
        assert!(!r.errors.is_empty());
        assert_eq!(r.status(), crate::Status::NumericalFailure);
    }

    #[test]
    fn tight_tolerance_fails_the_verdict() {
        let r = run_text("experiment = petal\nk = 1\nsteps = 20000\nstride = 5000\ntol.exponent = 1e-9\n");
        assert!(r.errors.is_empty(), "{:?}", r.errors);
        assert_eq!(r.status(), crate::Status::VerdictFailure);
        assert_eq!(r.tables["orbit"].rows.len(), 5);
    }

    #[test]
    fn randomized_experiments_follow_the_seed() {
        let text = "experiment = multiplicity-invariance\ntrials = 3\nseed = 5\n";
        let a = run_text(text);
        assert!(a.passed, "{a:?}");
        assert_eq!(a, run_text(text));
        let b = run(&ExperimentConfig::parse(text).unwrap().with_seed(6));
        assert_eq!(b.inputs["seed"], "6");
    }

    #[test]
    fn normal_form_reduces_random_maps() {
        let r = run_text("experiment = hakim-normalform\ntrials = 3\nnvars = 3\n");
        assert!(r.passed, "{r:?}");
        assert_eq!(r.tables["normal_form"].rows.len(), 3);
        assert!(r.notes.iter().any(|n| n.contains("normalize-a1")));
    }
}
