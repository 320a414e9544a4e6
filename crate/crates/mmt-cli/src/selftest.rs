//! Fast built-in invariant suite: a handful of exactness and consistency
//! checks over every module, designed to finish in a few seconds. Prints one
//! line per suite; any failed check maps to exit code 3.

use crate::CliError;
use mmt_lab::bench::{h_range_check, is_dyadic, DyadicConfig};
use mmt_lab::dynamics::{
    integrate, mass, nonlinearity, plane_wave_solution, IntegratorConfig, Scheme,
};
use mmt_lab::probe::{build_counterexample, resonance_lower_bound_check, support_disjointness_check, FamilyTag};
use mmt_lab::thresholds::{classify, critical_index, lwp_threshold, rescale_data, Classification};
use mmt_lab::{generators, GridSpec, ModelParams};

struct Suite {
    name: &'static str,
    passed: usize,
    failed: usize,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Self { name, passed: 0, failed: 0 }
    }

    fn check(&mut self, label: &str, ok: bool) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            eprintln!("    failed check: {} / {}", self.name, label);
        }
    }

    fn report(self) -> usize {
        let verdict = if self.failed == 0 { "ok" } else { "FAILED" };
        println!(
            "selftest {:<22} {:>2} passed {:>2} failed  {}",
            self.name, self.passed, self.failed, verdict
        );
        self.failed
    }
}

fn spectral_suite() -> usize {
    let mut s = Suite::new("spectral");
    let grid = GridSpec::new(256, 2.0 * std::f64::consts::PI).unwrap();
    let u = generators::random_bandlimited(grid, 60, 7, 1.0);

    let values = u.to_grid_values();
    let back = mmt_lab::SpectralField::from_grid_values(grid, &values).unwrap();
    let err: f64 = u
        .modes()
        .iter()
        .zip(back.modes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    s.check("transform round-trip", err < 1e-12);

    let dx = grid.grid_spacing();
    let physical_l2 = (values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx).sqrt();
    s.check("norm identity", (physical_l2 - u.l2_norm()).abs() < 1e-10);

    let d2 = u.fractional_derivative(1.0).fractional_derivative(1.0);
    let d_two = u.fractional_derivative(2.0);
    let derr: f64 = d2
        .modes()
        .iter()
        .zip(d_two.modes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    s.check("derivative composition", derr < 1e-9);
    s.report()
}

fn dynamics_suite() -> usize {
    let mut s = Suite::new("dynamics");
    let grid = GridSpec::new(128, 2.0 * std::f64::consts::PI).unwrap();
    let params = ModelParams::new(1.5, 0.25, 0.0).unwrap();

    let u0 = generators::plane_wave(grid, 0.4, 3);
    let cfg = IntegratorConfig::new(1e-3, 0.25, Scheme::EtdRk4);
    let rec = integrate(&u0, &params, &cfg).unwrap();
    let exact = plane_wave_solution(grid, 0.4, 3, &params, 0.25);
    let final_mass = *rec.mass_series.last().unwrap();
    s.check("mass conservation", (final_mass - mass(&u0)).abs() < 1e-10);
    let e0 = rec.energy_series[0];
    let e1 = *rec.energy_series.last().unwrap();
    s.check("energy conservation", (e1 - e0).abs() < 1e-8 * e0.abs().max(1.0));
    // compare against the closed-form single-mode solution
    let k_idx = grid.index_of(3).unwrap();
    let cfg_snap = IntegratorConfig {
        record_snapshots: true,
        record_stride: usize::MAX / 2,
        ..cfg
    };
    let rec2 = integrate(&u0, &params, &cfg_snap).unwrap();
    let last = rec2.snapshots.as_ref().unwrap().last().unwrap();
    let err = (last.modes()[k_idx] - exact.modes()[k_idx]).norm();
    s.check("single-mode exactness", err < 1e-8);

    let n = nonlinearity(&u0, params.beta, 2.0);
    let xi_abs = mmt_lab::spectral::abs_pow(3.0, 4.0 * params.beta);
    let expected = u0.modes()[k_idx] * (0.4 * 0.4 * xi_abs);
    s.check(
        "cubic term on one mode",
        (n.modes()[k_idx] - expected).norm() < 1e-10,
    );
    s.report()
}

fn thresholds_suite() -> usize {
    let mut s = Suite::new("thresholds");
    s.check("critical index", (critical_index(2.0, 0.5) - 0.5).abs() < 1e-15);

    // branch junctions are continuous
    for &alpha in &[1.05, 1.1] {
        let b = 7.0 / 8.0 - alpha;
        let (lo, _) = lwp_threshold(alpha, b - 1e-9, 0.0).unwrap();
        let (hi, _) = lwp_threshold(alpha, b + 1e-9, 0.0).unwrap();
        s.check("junction b1/b2", (lo - hi).abs() < 1e-7);
    }
    for &alpha in &[1.1, 1.3] {
        let b = 1.0 / 8.0 - alpha / 4.0;
        let (lo, _) = lwp_threshold(alpha, b - 1e-9, 0.0).unwrap();
        let (hi, _) = lwp_threshold(alpha, b + 1e-9, 0.0).unwrap();
        s.check("junction b2/b3", (lo - hi).abs() < 1e-7);
    }

    let cell = classify(2.0, 0.25, 1.0, 0.0).unwrap();
    s.check("well-posed sample", cell.classification == Classification::WellPosed);
    let cell = classify(2.0, 0.25, 0.4, 0.0).unwrap();
    s.check("smoothness-failure sample", cell.classification == Classification::IllPosedC3);

    // dilating twice by 2 equals dilating once by 4
    let grid = GridSpec::new(64, 2.0 * std::f64::consts::PI).unwrap();
    let params = ModelParams::new(1.5, 0.3, 0.0).unwrap();
    let u = generators::random_bandlimited(grid, 20, 11, 1.0);
    let twice = rescale_data(&rescale_data(&u, 2.0, &params).unwrap(), 2.0, &params).unwrap();
    let once = rescale_data(&u, 4.0, &params).unwrap();
    let err: f64 = twice
        .modes()
        .iter()
        .zip(once.modes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    s.check("dilation composes", err < 1e-12 && twice.grid() == once.grid());
    s.report()
}

fn probe_suite() -> usize {
    let mut s = Suite::new("probe");
    let rep = resonance_lower_bound_check(2000, 2.0, 5);
    s.check("quadratic phase identity", rep.identity_deviation.is_some_and(|d| d < 1e-10));
    s.check("phase lower bound", rep.pass && rep.min_ratio > 0.99);

    let params = ModelParams::new(2.0, 0.5, 0.5).unwrap();
    for &n in &[256.0, 1024.0] {
        let ce = build_counterexample(FamilyTag::Hhh, n, 0.01, &params).unwrap();
        s.check("separated supports", support_disjointness_check(&ce));
    }
    s.report()
}

fn bench_suite() -> usize {
    let mut s = Suite::new("bench");
    s.check("dyadic predicate", is_dyadic(64.0) && !is_dyadic(48.0) && is_dyadic(0.25));
    let cfg = DyadicConfig {
        n1: 64.0,
        n2: 64.0,
        n3: 8.0,
        n4: None,
        l_levels: vec![],
        alpha: 2.0,
    };
    let rep = h_range_check(&cfg, 4000, 17).unwrap();
    s.check("combined-phase band", rep.pass);
    s.report()
}

pub fn cmd_selftest() -> Result<(), CliError> {
    let failures = spectral_suite()
        + dynamics_suite()
        + thresholds_suite()
        + probe_suite()
        + bench_suite();
    if failures > 0 {
        Err(CliError::Assertion(format!("{failures} selftest check(s) failed")))
    } else {
        println!("selftest: all suites passed");
        Ok(())
    }
}
