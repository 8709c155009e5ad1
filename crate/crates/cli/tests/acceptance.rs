//! Acceptance suite: one pass/fail line per criterion, tolerances pinned here.
//!
//! Runs as a plain binary (`harness = false`) and exits non-zero when any
//! criterion fails.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ris_crb::experiments::{
    log_log_slope, run, run_crb_vs_n, run_crb_vs_r, run_spectrum, sample_moments, target_rows, ExperimentConfig, ExperimentKind,
    SpectrumRowKind,
};
use ris_crb::fim::{crb_from_fim, fim_exact, fim_expected, fim_expected_with_covariance, sample_covariance, trial_omegas, RisMode};
use ris_crb::model::wrap_angle;
use ris_crb::scaling::cosine_sum_leading;
use ris_crb::spectrum::crb::{asymptotic_crb_total, empirical_crb};
use ris_crb::spectrum::empirical::{empirical_spectrum_draw, spectral_scenario};
use ris_crb::spectrum::stieltjes::{quadratic_residual, rational_residual, stieltjes, QUADRATIC_TOL, RATIONAL_TOL};
use ris_crb::{Complex64, OutputFormat, RisDistribution, RisSpectralModel, Scenario, SignalModel, SpectralModel};
use ris_crb_cli::render;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn criterion_1() -> Outcome {
    let mut config = ExperimentConfig::preset(ExperimentKind::CrbVsN);
    config.n_sweep = vec![128, 256, 512, 1024];
    config.n_trials = 200;
    let rows = match run_crb_vs_n(&config) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let fit = |t: usize| {
        let r = target_rows(&rows, t);
        let x: Vec<f64> = r.iter().map(|r| r.n as f64).collect();
        let y: Vec<f64> = r.iter().map(|r| r.crb_exact_mean).collect();
        (log_log_slope(&x, &y), r[r.len() - 1].crb_exact_mean / r[r.len() - 1].crb_asymptotic.unwrap_or(f64::NAN) - 1.0)
    };
    let (s1, e1) = fit(0);
    let (s2, e2) = fit(1);
    let passed = (-4.15..=-3.85).contains(&s1) && (-3.15..=-2.85).contains(&s2) && e1.abs() <= 0.10 && e2.abs() <= 0.10;
    outcome(
        passed,
        format!("slope CRB11 {s1:.3} in [-4.15,-3.85], CRB22 {s2:.3} in [-3.15,-2.85]; N=1024 rel. gap {e1:+.3}, {e2:+.3} (|.|<=0.10)"),
    )
}

fn criterion_2() -> Outcome {
    let mut config = ExperimentConfig::preset(ExperimentKind::CrbVsR);
    config.n_sweep = vec![512];
    config.r_sweep = vec![5, 10];
    config.n_trials = 200;
    let rows = match run_crb_vs_r(&config) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let t0 = target_rows(&rows, 0);
    let ratio = t0[0].crb_exact_mean / t0[1].crb_exact_mean;
    outcome((ratio - 2.0).abs() <= 0.3, format!("CRB11(R=5)/CRB11(R=10) at N=512 = {ratio:.4} (2 ± 15%)"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spaced = |rng: &mut ChaCha8Rng, count: usize| {
        let mut v: Vec<f64> = Vec::new();
        while v.len() < count {
            let a = wrap_angle(rng.random_range(-PI..PI));
            if v.iter().all(|&b| wrap_angle(a - b).abs() > 0.3) {
                v.push(a);
            }
        }
        v
    };
    let s = Scenario {
        thetas: spaced(&mut rng, 3),
        phis: spaced(&mut rng, 5),
        n_elements: 64,
        n_slots: 1,
        powers: vec![1.0, 0.7, 1.4],
        noise_power: 1.0,
        signal_model: SignalModel::UncorrelatedDiagonal,
        ris: RisDistribution::uniform_phase(0.0, PI),
    };
    let signals = s.signals(3);
    let draws = 10_000u64;
    let mut acc = DMatrix::<f64>::zeros(3, 3);
    for t in 0..draws {
        acc += fim_exact(&s, &trial_omegas(&s, 3, t, RisMode::PerSlot), &signals).expect("valid scenario").entries;
    }
    acc /= draws as f64;
    let expected = fim_expected_with_covariance(&s, &sample_covariance(&signals)).expect("valid scenario").entries;
    let rel = (&acc - &expected).norm() / expected.norm();
    outcome(rel <= 0.01, format!("relative Frobenius gap over 1e4 draws = {rel:.2e} (<= 1e-2)"))
}

fn criterion_4() -> Outcome {
    let config = ExperimentConfig::preset(ExperimentKind::Spectrum);
    let rows = match run_spectrum(&config) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let mut passed = true;
    let mut parts = Vec::new();
    for r in rows.iter().filter(|r| r.kind == SpectrumRowKind::Summary) {
        let l1 = r.l1.unwrap_or(f64::INFINITY);
        let mass = r.mass.unwrap_or(f64::NAN);
        passed &= l1 < 0.05 && (mass - 1.0).abs() <= 5e-3;
        parts.push(format!("{}: L1 {l1:.4}, mass {mass:.6}", r.model));
    }
    outcome(passed, format!("{} (L1 < 0.05, |mass-1| <= 5e-3)", parts.join("; ")))
}

fn criterion_5() -> Outcome {
    let n = 1000;
    let mut passed = true;
    let mut parts = Vec::new();
    for (label, model) in [
        ("constant-modulus", SpectralModel::constant_modulus(0.3, 0.35)),
        ("discrete-amplitude", SpectralModel::discrete_amplitude(0.3, 0.35, 1.0, 3.0, 0.5)),
    ] {
        let result = (|| -> ris_crb::Result<(f64, f64)> {
            let s = spectral_scenario(&model, n)?;
            let eig = empirical_spectrum_draw(&s, 2024, 0, 2.0)?;
            let theory = asymptotic_crb_total(&model, 1.0, 1, n, s.n_targets())?;
            let empirical = empirical_crb(&eig, 1.0, 1, n)?;
            Ok((theory.per_target, empirical.per_target))
        })();
        match result {
            Ok((t, e)) => {
                let rel = t / e - 1.0;
                passed &= rel.abs() <= 0.05;
                parts.push(format!("{label}: {t:.4e} vs empirical {e:.4e}, rel. gap {rel:+.3}"));
            }
            Err(e) => {
                passed = false;
                parts.push(format!("{label}: error: {e}"));
            }
        }
    }
    outcome(passed, format!("per-target CRB {} (|.| <= 0.05)", parts.join("; ")))
}

/// Noise-free received samples for the finite-difference oracle.
fn mean_signal(s: &Scenario, thetas: &[f64], omegas: &[DVector<Complex64>], x: &[DVector<Complex64>]) -> Vec<Complex64> {
    let mut out = Vec::new();
    for (w, xt) in omegas.iter().zip(x) {
        for &phi in &s.phis {
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..s.n_elements {
                let incident: Complex64 =
                    thetas.iter().zip(xt.iter()).map(|(&th, &xk)| Complex64::from_polar(1.0, n as f64 * th) * xk).sum();
                acc += Complex64::from_polar(1.0, n as f64 * phi) * w[n] * incident;
            }
            out.push(acc);
        }
    }
    out
}

fn fd_gap(s: &Scenario, seed: u64) -> f64 {
    let omegas = trial_omegas(s, seed, 0, RisMode::PerSlot);
    let x = s.signals(seed);
    let k = s.n_targets();
    let base = mean_signal(s, &s.thetas, &omegas, &x);
    let g = |d: &[f64]| {
        let th: Vec<f64> = s.thetas.iter().zip(d).map(|(a, b)| a + b).collect();
        mean_signal(s, &th, &omegas, &x).iter().zip(&base).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / s.noise_power
    };
    let h = 1e-4;
    let oracle = DMatrix::from_fn(k, k, |i, j| {
        let shift = |si: f64, sj: f64| {
            let mut d = vec![0.0; k];
            d[i] += si * h;
            d[j] += sj * h;
            g(&d)
        };
        (shift(1.0, 1.0) - shift(1.0, -1.0) - shift(-1.0, 1.0) + shift(-1.0, -1.0)) / (4.0 * h * h)
    });
    let f = fim_exact(s, &omegas, &x).expect("valid scenario").entries;
    (&f - &oracle).norm() / oracle.norm()
}

fn random_instance(rng: &mut ChaCha8Rng) -> Scenario {
    let k = rng.random_range(1..=3);
    let r = rng.random_range(k..=5);
    let mut spaced = |count: usize| {
        let mut v: Vec<f64> = Vec::new();
        while v.len() < count {
            let a = wrap_angle(rng.random_range(-PI..PI));
            if v.iter().all(|&b| wrap_angle(a - b).abs() > 0.3) {
                v.push(a);
            }
        }
        v
    };
    let thetas = spaced(k);
    let phis = spaced(r);
    let lo = rng.random_range(0.0..PI);
    let hi = (lo + rng.random_range(0.5..TAU)).min(TAU);
    Scenario {
        powers: (0..k).map(|i| 0.5 + 0.4 * i as f64).collect(),
        thetas,
        phis,
        n_elements: rng.random_range(8..64),
        n_slots: rng.random_range(1..20),
        noise_power: 1.0,
        signal_model: SignalModel::UncorrelatedDiagonal,
        ris: RisDistribution::uniform_phase(lo, hi),
    }
}

fn criterion_6() -> Outcome {
    let mut notes = Vec::new();
    let mut passed = true;

    // Herglotz and residuals
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut herglotz_bad = 0;
    let (mut q_res, mut r_res) = (0.0f64, 0.0f64);
    for model in [SpectralModel::constant_modulus(0.3, 0.35), SpectralModel::discrete_amplitude(0.3, 0.35, 1.0, 3.0, 0.5)] {
        let scale = 3.0 * model.mean_eigenvalue();
        for _ in 0..1000 {
            let z = Complex64::new(rng.random_range(-0.5..3.0) * scale, scale * 10f64.powf(rng.random_range(-6.0..1.0)));
            match stieltjes(z, &model) {
                Ok(v) if v.m.im > 0.0 => match model.ris {
                    RisSpectralModel::ConstantModulus => q_res = q_res.max(quadratic_residual(&model, z, v.m)),
                    _ => r_res = r_res.max(rational_residual(&model, z, v.m)),
                },
                _ => herglotz_bad += 1,
            }
        }
    }
    passed &= herglotz_bad == 0 && q_res <= QUADRATIC_TOL && r_res <= RATIONAL_TOL;
    notes.push(format!("herglotz fails {herglotz_bad}/2000, residuals {q_res:.1e}/{r_res:.1e}"));

    // monotonicity in T and N
    let mut violations = 0;
    for _ in 0..100 {
        let s = random_instance(&mut rng);
        let crb = |s: &Scenario| crb_from_fim(&fim_expected(s).expect("valid")).map(|c| c.diag);
        let (Ok(base), Ok(t), Ok(n)) =
            (crb(&s), crb(&Scenario { n_slots: s.n_slots + 1, ..s.clone() }), crb(&s.with_elements(s.n_elements + 1)))
        else {
            violations += 1;
            continue;
        };
        violations += (0..base.len()).filter(|&i| t[i].is_nan() || t[i] >= base[i] || n[i] > base[i] * (1.0 + 1e-12)).count();
    }
    passed &= violations == 0;
    notes.push(format!("monotonicity violations {violations}/100"));

    // finite-difference likelihood oracle
    let mut fd = 0.0f64;
    for k in 1..=2 {
        for n in 2..=4 {
            let s = Scenario {
                thetas: [0.7, -1.2][..k].to_vec(),
                phis: vec![0.3, -2.1, 1.4],
                n_elements: n,
                n_slots: 3,
                powers: [1.3, 0.6][..k].to_vec(),
                noise_power: 0.9,
                signal_model: SignalModel::UncorrelatedDiagonal,
                ris: RisDistribution::uniform_phase(0.0, PI),
            };
            fd = fd.max(fd_gap(&s, (k * 10 + n) as u64));
        }
    }
    passed &= fd <= 1e-4;
    notes.push(format!("FD oracle gap {fd:.1e}"));

    // cosine sum closed form, O(1/N)
    let n = 5000;
    let mut worst = 0.0f64;
    for psi in [0.5, 1.0, PI] {
        let brute: f64 = (1..n).map(|k| Complex64::from_polar(k as f64, k as f64 * psi)).sum::<Complex64>().norm_sqr();
        let rel = (cosine_sum_leading(psi, n).expect("psi != 0") / brute - 1.0).abs();
        worst = worst.max(rel * n as f64 * (0.5 * psi).sin().abs());
    }
    passed &= worst <= 3.0;
    notes.push(format!("cosine sum N|sin|·rel {worst:.2} (<= 3)"));

    // E2 against 1e6-sample means
    let mut moments_ok = true;
    for (i, (dist, e2)) in [(RisDistribution::uniform_phase(0.0, TAU), 0.0), (RisDistribution::uniform_phase(0.0, PI), 4.0 / (PI * PI))]
        .into_iter()
        .enumerate()
    {
        let row = sample_moments(&dist, 1_000_000, 6, i as u64);
        moments_ok &= (row.e2_analytic - e2).abs() < 1e-15 && row.within(3.0);
    }
    passed &= moments_ok;
    notes.push(format!("E2 sampling {}", if moments_ok { "ok" } else { "off" }));

    outcome(passed, notes.join("; "))
}

fn criterion_7() -> Outcome {
    let mut configs = Vec::new();
    let mut c = ExperimentConfig::preset(ExperimentKind::CrbVsN);
    c.n_sweep = vec![64, 128];
    c.n_trials = 20;
    configs.push(c);
    let mut c = ExperimentConfig::preset(ExperimentKind::CrbVsR);
    c.n_sweep = vec![64];
    c.n_trials = 20;
    configs.push(c);
    let mut c = ExperimentConfig::preset(ExperimentKind::Spectrum);
    c.n_elements = 200;
    c.draws = 2;
    configs.push(c);
    let mut c = ExperimentConfig::preset(ExperimentKind::Moments);
    c.moment_samples = 10_000;
    configs.push(c);
    configs.push(ExperimentConfig::preset(ExperimentKind::Validate));

    let mut mismatches = Vec::new();
    for base in configs {
        for format in [OutputFormat::Csv, OutputFormat::Json] {
            let mut outputs = Vec::new();
            for workers in [Some(1), Some(4), Some(4)] {
                let mut config = base.clone();
                config.workers = workers;
                config.output_format = format;
                let bytes = run(&config).map_err(|e| e.to_string()).and_then(|rows| {
                    // the worker count is part of the echoed config; compare with it fixed
                    let mut echo = config.clone();
                    echo.workers = None;
                    render(&echo, &rows, format).map_err(|e| e.to_string())
                });
                outputs.push(bytes);
            }
            if outputs.iter().any(|o| o.is_err()) || outputs.windows(2).any(|w| w[0] != w[1]) {
                mismatches.push(format!("{}/{format:?}", base.experiment.name()));
            }
        }
    }
    outcome(mismatches.is_empty(), format!("byte-identical across reruns and 1/4 workers; mismatches: {mismatches:?}"))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("scaling-law reproduction", criterion_1),
        ("sensor-count law", criterion_2),
        ("expected-FIM oracle", criterion_3),
        ("spectral density match", criterion_4),
        ("spectral CRB consistency", criterion_5),
        ("property suites", criterion_6),
        ("determinism", criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        failed += usize::from(!o.passed);
        println!(
            "criterion {} [{}] {name}: {} ({:.1} s)",
            i + 1,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
