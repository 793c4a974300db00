//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qmoire::analysis::{
    envelope_model, expected_beat_period, fit_envelope_cos2, fit_product_cos2, large_peak_spacing, product_model,
    BeatPeriod, EnvelopeInit, FitParameters, ProductInit, ScanRecord,
};
use qmoire::classical::classical_scan;
use qmoire::engine::{klyshko_fresnel, run_scan, ExperimentConfig, ScanSchedule, SetupKind};
use qmoire::harness::{fit_scan, preset, run_preset, ExperimentRun, PresetName, RunMode, RunPreset, LARGE_PEAK_FRACTION};
use qmoire::optics::{make_grating, Aperture, Profile, TransmissionMask};
use qmoire::photocount::{run_counting_scan, CountingPlan};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn experiment(name: PresetName) -> ExperimentRun {
    match preset(name) {
        Some(RunPreset::Experiment(run)) => run,
        _ => unreachable!("{name} is an experiment preset"),
    }
}

fn analytic(name: PresetName) -> ScanRecord {
    let run = experiment(name);
    run_scan(&run.config, run.schedule()).expect("analytic scan")
}

fn beat_arithmetic() -> Outcome {
    let check = |p1, p2, want: f64| match expected_beat_period(p1, p2) {
        Ok(BeatPeriod::Finite(p)) => (rel(p, want) <= 1e-12, p),
        _ => (false, f64::NAN),
    };
    let (a, pa) = check(1.2, 1.6, 4.8);
    let (b, pb) = check(0.8, 0.9, 7.2);
    outcome(a && b, format!("(1.2, 1.6) → {pa:.15} mm, (0.8, 0.9) → {pb:.15} mm"))
}

fn fig3a_reproduction() -> Outcome {
    let rec = analytic(PresetName::Fig3a);
    let fit = match fit_scan(&rec, experiment(PresetName::Fig3a).fit) {
        Ok(f) => f,
        Err(e) => return outcome(false, format!("fit failed: {e}")),
    };
    let p = fit.periods();
    let spacing = large_peak_spacing(&rec, LARGE_PEAK_FRACTION).unwrap_or(f64::NAN);
    let pass = fit.converged && rel(p[0], 1.2) < 1e-3 && rel(p[1], 1.6) < 1e-3 && rel(spacing, 4.8) <= 0.02;
    outcome(
        pass,
        format!(
            "p1 = {:.6} ({:.2e}), p2 = {:.6} ({:.2e}), large-peak spacing = {spacing:.4} mm",
            p[0],
            rel(p[0], 1.2),
            p[1],
            rel(p[1], 1.6)
        ),
    )
}

fn envelope_reproduction() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for name in [PresetName::Fig3b, PresetName::Fig5b] {
        let rec = analytic(name);
        match fit_scan(&rec, experiment(name).fit) {
            Ok(fit) => {
                let p = fit.periods()[0];
                pass &= fit.converged && rel(p, 7.2) <= 0.02;
                detail.push(format!("{name}: P = {p:.4} mm ({:.2}%)", 100.0 * rel(p, 7.2)));
            }
            Err(e) => {
                pass = false;
                detail.push(format!("{name}: fit failed: {e}"));
            }
        }
    }
    outcome(pass, detail.join(", "))
}

fn setup_equivalence() -> Outcome {
    let a = analytic(PresetName::Fig3a);
    let b = analytic(PresetName::Fig5a);
    let worst = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| rel(*y, *x))
        .fold(0.0, f64::max);
    let same_x = a.positions() == b.positions();
    outcome(same_x && worst <= 1e-9, format!("max relative difference {worst:.2e} over {} steps", a.len()))
}

fn random_mask(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> TransmissionMask {
    let period = rng.random_range(lo..hi);
    let phase = rng.random_range(-1.0..1.0);
    let contrast = rng.random_range(0.3..=1.0);
    let profile = if rng.random_bool(0.5) {
        Profile::CosineSquared
    } else {
        Profile::Binary {
            duty_cycle: rng.random_range(0.2..0.8),
        }
    };
    make_grating(period, phase, profile, contrast).expect("random grating")
}

fn random_config(rng: &mut ChaCha8Rng) -> (ExperimentConfig, ScanSchedule) {
    let kind = if rng.random_bool(0.5) {
        SetupKind::PumpIdler
    } else {
        SetupKind::SignalIdler
    };
    let g1 = match kind {
        SetupKind::PumpIdler => random_mask(rng, 0.2, 1.2),
        SetupKind::SignalIdler => random_mask(rng, 0.4, 2.4),
    };
    let mut c = ExperimentConfig::new(kind, g1, random_mask(rng, 0.4, 2.4));
    c.transfer_scale = rng.random_range(1.5..2.5);
    c.relay_inverts = rng.random_bool(0.7);
    let d = rng.random_range(0.2..1.5);
    c.pinhole_idler = Aperture::new(d, rng.random_range(-0.3..0.3)).unwrap();
    c.pinhole_signal = Aperture::new(d, rng.random_range(-0.3..0.3)).unwrap();
    c.coincidence_halfwidth = rng.random_range(0.6..2.0);
    let mut s = ScanSchedule::new(60, rng.random_range(-0.3..0.3), rng.random_range(0.02..0.3));
    s.start_g1 = rng.random_range(-1.0..1.0);
    s.start_g2 = rng.random_range(-1.0..1.0);
    (c, s)
}

fn quantum_classical_oracle() -> Outcome {
    let mut cases: Vec<(String, ExperimentConfig, ScanSchedule)> = [
        PresetName::Fig3a,
        PresetName::Fig3b,
        PresetName::Fig5a,
        PresetName::Fig5b,
    ]
    .into_iter()
    .map(|n| {
        let run = experiment(n);
        (n.to_string(), run.config.clone(), *run.schedule())
    })
    .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for i in 0..20 {
        let (c, s) = random_config(&mut rng);
        cases.push((format!("random #{i}"), c, s));
    }
    let mut worst = (0.0f64, String::new());
    for (label, c, s) in &cases {
        let quantum = match run_scan(c, s) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("{label}: engine failed: {e}")),
        };
        let classical = match classical_scan(c, s) {
            Ok(v) => v,
            Err(e) => return outcome(false, format!("{label}: oracle failed: {e}")),
        };
        for (q, o) in quantum.values().iter().zip(&classical) {
            // Relative to the oracle, with a floor for exactly dark steps.
            let err = (q - o).abs() / o.abs().max(1e-6);
            if err > worst.0 {
                worst = (err, label.clone());
            }
        }
    }
    outcome(
        worst.0 <= 1e-9,
        format!("{} configurations, worst relative difference {:.2e} ({})", cases.len(), worst.0, worst.1),
    )
}

fn monte_carlo_consistency() -> Outcome {
    let run = experiment(PresetName::Fig3a);
    let (mut chi2, mut dof) = (0.0, 0usize);
    let mut worst_period = 0.0f64;
    let mut per_seed = (f64::INFINITY, f64::NEG_INFINITY);
    for seed in 0..100u64 {
        let plan = CountingPlan {
            seed,
            mean_pairs_per_step: 1e4,
            ..run.plan
        };
        let counts = match run_counting_scan(&run.config, &plan) {
            Ok(c) => c,
            Err(e) => return outcome(false, format!("seed {seed}: {e}")),
        };
        let r = counts.reduced_chi_square();
        per_seed = (per_seed.0.min(r), per_seed.1.max(r));
        chi2 += r * counts.len() as f64;
        dof += counts.len();
        let norm = counts.normalized().expect("normalised counts");
        let fit = fit_scan(&norm, run.fit);
        match fit {
            Ok(f) if f.converged => {
                let p = f.periods();
                worst_period = worst_period.max(rel(p[0], 1.2)).max(rel(p[1], 1.6));
            }
            Ok(_) => return outcome(false, format!("seed {seed}: fit did not converge")),
            Err(e) => return outcome(false, format!("seed {seed}: fit failed: {e}")),
        }
    }
    let pooled = chi2 / dof as f64;
    outcome(
        (0.8..=1.2).contains(&pooled) && worst_period <= 5e-3,
        format!(
            "pooled reduced χ² = {pooled:.4} (per seed {:.3}..{:.3}), worst period error {:.3}%",
            per_seed.0,
            per_seed.1,
            100.0 * worst_period
        ),
    )
}

fn phase_err(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d) / period
}

fn fit_closure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x: Vec<f64> = (0..480).map(|k| 0.05 * k as f64).collect();
    let mut worst = (0.0f64, String::new());
    let mut track = |err: f64, what: String| {
        if err > worst.0 || err.is_nan() {
            worst = (err, what);
        }
    };
    for i in 0..100 {
        let a = rng.random_range(0.5..2.0);
        let b = rng.random_range(0.0..0.5);
        if i % 2 == 0 {
            let p1 = rng.random_range(0.8..1.4);
            let p2 = p1 * rng.random_range(1.15..1.6);
            let f1 = rng.random_range(0.0..p1);
            let f2 = rng.random_range(0.0..p2);
            let theta = [a, b, p1, p2, f1, f2];
            let y = x.iter().map(|&x| product_model(x, &theta)).collect();
            let rec = ScanRecord::analytic(x.clone(), y).unwrap();
            let init = ProductInit::periods(p1 * rng.random_range(0.97..1.03), p2 * rng.random_range(0.97..1.03));
            match fit_product_cos2(&rec, &init) {
                Ok(fit) => {
                    let FitParameters::Product { amplitude, offset, period_1, period_2, phase_1, phase_2 } = fit.parameters else {
                        unreachable!()
                    };
                    let errs = [
                        rel(amplitude, a),
                        (offset - b).abs() / a,
                        rel(period_1, p1),
                        rel(period_2, p2),
                        phase_err(phase_1, f1, p1),
                        phase_err(phase_2, f2, p2),
                    ];
                    let e = errs.iter().cloned().fold(if fit.converged { 0.0 } else { f64::INFINITY }, f64::max);
                    track(e, format!("product #{i}"));
                }
                Err(e) => track(f64::INFINITY, format!("product #{i}: {e}")),
            }
        } else {
            let p = rng.random_range(3.0..9.0);
            let f = rng.random_range(0.0..p);
            let theta = [a, b, p, f];
            let y = x.iter().map(|&x| envelope_model(x, &theta)).collect();
            let rec = ScanRecord::analytic(x.clone(), y).unwrap();
            match fit_envelope_cos2(&rec, &EnvelopeInit::period(p * rng.random_range(0.9..1.1))) {
                Ok(fit) => {
                    let FitParameters::Envelope { amplitude, offset, period, phase } = fit.parameters else {
                        unreachable!()
                    };
                    let errs = [rel(amplitude, a), (offset - b).abs() / a, rel(period, p), phase_err(phase, f, p)];
                    let e = errs.iter().cloned().fold(if fit.converged { 0.0 } else { f64::INFINITY }, f64::max);
                    track(e, format!("envelope #{i}"));
                }
                Err(e) => track(f64::INFINITY, format!("envelope #{i}: {e}")),
            }
        }
    }
    outcome(
        worst.0 <= 1e-5,
        format!("100 instances (50 product, 50 envelope), worst relative error {:.2e} ({})", worst.0, worst.1),
    )
}

fn fresnel_mode() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for name in [PresetName::Fig5a, PresetName::Fig5b] {
        match klyshko_fresnel(&experiment(name).config) {
            Ok(r) => {
                pass &= r.correlation > 0.999 && r.max_energy_drift <= 1e-10;
                detail.push(format!(
                    "{name}: correlation {:.9}, energy drift {:.1e}",
                    r.correlation, r.max_energy_drift
                ));
            }
            Err(e) => {
                pass = false;
                detail.push(format!("{name}: {e}"));
            }
        }
    }
    outcome(pass, detail.join(", "))
}

fn determinism() -> Outcome {
    let mut reference: Vec<Vec<u8>> = Vec::new();
    for (i, workers) in [1usize, 2, 8, 1].into_iter().enumerate() {
        let mut files = Vec::new();
        for name in [PresetName::Fig3a, PresetName::Fig5b] {
            let dir = tempfile::tempdir().expect("temporary directory");
            let bundle = match run_preset(&preset(name).unwrap(), RunMode::MonteCarlo, dir.path(), Some(workers)) {
                Ok(b) => b,
                Err(e) => return outcome(false, format!("{name} with {workers} workers: {e}")),
            };
            files.push(std::fs::read(&bundle.data[0]).expect("csv"));
        }
        if i == 0 {
            reference = files;
        } else if files != reference {
            return outcome(false, format!("CSV differs with {workers} workers"));
        }
    }
    outcome(true, "fig3a and fig5b CSV byte-identical for 1, 2 and 8 workers and on repeat")
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 9] = [
        ("1 beat arithmetic", beat_arithmetic, Duration::from_millis(100)),
        ("2 fig3a reproduction", fig3a_reproduction, Duration::from_secs(1)),
        ("3 fig3b/fig5b envelope", envelope_reproduction, Duration::from_secs(2)),
        ("4 setup equivalence", setup_equivalence, Duration::from_secs(1)),
        ("5 quantum-classical oracle", quantum_classical_oracle, Duration::from_secs(10)),
        ("6 monte carlo consistency", monte_carlo_consistency, Duration::from_secs(30)),
        ("7 fit oracle closure", fit_closure, Duration::from_secs(10)),
        ("8 fresnel mode", fresnel_mode, Duration::from_secs(5)),
        ("9 determinism", determinism, Duration::from_secs(30)),
    ];
    let mut failures = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = result.pass && in_time;
        if !pass {
            failures += 1;
        }
        let timing = if in_time {
            format!("{:.2} s", elapsed.as_secs_f64())
        } else {
            format!("{:.2} s, over the {:.0} s budget", elapsed.as_secs_f64(), budget.as_secs_f64())
        };
        println!("{} {name}: {} [{timing}]", if pass { "PASS" } else { "FAIL" }, result.detail);
    }
    if failures > 0 {
        println!("{failures} criterion/criteria failed");
        std::process::exit(1);
    }
}
