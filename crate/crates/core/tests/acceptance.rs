//! Acceptance criteria, one pass/fail line each. Runs as a plain binary
//! (`cargo test --test acceptance`) and exits nonzero on any failure.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use qpc_noise::bloch::{evolve, EvolutionSpec};
use qpc_noise::current::zero_charge_limit;
use qpc_noise::harness::{run, ExperimentConfig, Mode, RunOptions, Summary};
use qpc_noise::rng::stream_rng;
use qpc_noise::statistics::{brute_force_variance, mixture_pmf, relative_spread, variance_short};
use qpc_noise::trajectory::{ensemble_coherence_decay, unconditioned_probe, KrausPair, SimPlan};
use qpc_noise::{
    density_to_polarization, BarrierPair, DensityMatrix2, HamiltonianVector, PolarizationVector,
    Regime,
};
use rand::Rng;

type Outcome = Result<String, String>;

fn harness(mode: Mode, json: &str, dir: &Path) -> Result<Summary, String> {
    let cfg = ExperimentConfig::from_json(json).map_err(|e| e.to_string())?;
    let opts = RunOptions {
        seed: None,
        out: Some(dir.to_path_buf()),
    };
    run(mode, &cfg, &opts).map(|o| o.summary).map_err(|e| e.to_string())
}

fn failed_checks(s: &Summary) -> String {
    s.checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{} = {:e} (limit {:e})", c.name, c.value, c.threshold))
        .collect::<Vec<_>>()
        .join("; ")
}

fn judge(s: Summary, detail: String) -> Outcome {
    if s.pass {
        Ok(detail)
    } else {
        Err(failed_checks(&s))
    }
}

fn check(s: &Summary, name: &str) -> f64 {
    s.checks.iter().find(|c| c.name == name).map_or(f64::NAN, |c| c.value)
}

fn oracle(tmp: &Path) -> Outcome {
    let start = Instant::now();
    let s = harness(
        Mode::VerifyOracle,
        r#"{"barriers": {"p_l": 0.8, "p_r": 0.2}, "master_seed": 2024,
            "oracle": {"draws": 200, "max_n": 12}}"#,
        &tmp.join("oracle"),
    )?;
    let secs = start.elapsed().as_secs_f64();
    if secs >= 30.0 {
        return Err(format!("took {secs:.1} s"));
    }
    let detail = format!(
        "201 cases x n = 1..12, max rel err {:.1e} (variance) {:.1e} (pmf), {secs:.2} s",
        check(&s, "max_var_rel_err"),
        check(&s, "max_pmf_rel_err")
    );
    judge(s, detail)
}

fn worked_value() -> Outcome {
    let b = BarrierPair::from_probabilities(0.8, 0.2).map_err(|e| e.to_string())?;
    let rho = DensityMatrix2::relaxed();
    let v = variance_short(&rho, &b, 10).map_err(|e| e.to_string())?;
    let bf = brute_force_variance(&rho, &b, 10).map_err(|e| e.to_string())?.report;
    let ok = |x: f64, want: f64| (x - want).abs() <= 1e-12 * want;
    let all = ok(v.var_total, 10.6)
        && ok(v.var_partition, 1.6)
        && ok(v.var_measurement, 9.0)
        && ok(bf.var_total, 10.6)
        && ok(bf.var_partition, 1.6)
        && ok(bf.var_measurement, 9.0);
    let detail = format!(
        "V = {} (partition {}, measurement {}); enumeration {} / {} / {}",
        v.var_total, v.var_partition, v.var_measurement, bf.var_total, bf.var_partition, bf.var_measurement
    );
    if all {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn decoherence_rate() -> Outcome {
    let start = Instant::now();
    let plan = SimPlan {
        n: 400,
        ensemble: 10_000,
        barriers: BarrierPair::new(0.45, 0.35).map_err(|e| e.to_string())?,
        initial: DensityMatrix2::new(0.5, 0.5, Complex64::new(0.5, 0.0)).map_err(|e| e.to_string())?,
        v: HamiltonianVector::zero(),
        flux: 1.0,
        master_seed: 31,
        record_states: false,
    };
    let d = ensemble_coherence_decay(&plan).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let rel = (d.fitted_rate - d.predicted_rate).abs() / d.predicted_rate;
    let dt4 = 0.1f64.powi(4);
    let continuum_gap = (d.predicted_rate - d.damping_rate).abs();
    let detail = format!(
        "fitted {:.6e} vs -ln cos 0.1 = {:.6e} ({:.2}%), 1 - cos 0.1 = {:.6e}, {secs:.1} s",
        d.fitted_rate,
        d.predicted_rate,
        100.0 * rel,
        d.damping_rate
    );
    if rel <= 0.02 && continuum_gap <= dt4 && secs < 60.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn relation(tmp: &Path) -> Outcome {
    let s = harness(
        Mode::VerifyRelation,
        r#"{"barriers": {"p_l": 0.5, "p_r": 0.5}, "detector": {"flux": 1.0, "n_max": 100},
            "master_seed": 1,
            "relation": {"delta_thetas": [0.01, 0.02, 0.05, 0.1], "ns": [10, 100, 1000]}}"#,
        &tmp.join("relation"),
    )?;
    let detail = format!(
        "n spread {:.1e}, delta-theta drift {:.3}%, long substitution {:.1e}",
        check(&s, "n_invariance"),
        100.0 * check(&s, "delta_theta_drift"),
        check(&s, "long_substitution_rel_err")
    );
    judge(s, detail)
}

fn regime_scaling(tmp: &Path) -> Outcome {
    let s = harness(
        Mode::NoiseCurve,
        r#"{"barriers": {"p_l": 0.8, "p_r": 0.2}, "detector": {"flux": 1.0, "n_max": 50},
            "ensemble": 10000, "master_seed": 5,
            "noise_curve": {"points_per_decade": 4, "span": 100}}"#,
        &tmp.join("noise"),
    )?;
    let detail = format!(
        "flat spread {:.1e}, flat max |z| {:.2}, tail slope {:.4} (exact) {:.4} (MC)",
        check(&s, "flat_region_spread"),
        check(&s, "flat_region_mc_z"),
        s.metrics.get("tail_slope_exact").copied().unwrap_or(f64::NAN),
        s.metrics.get("tail_slope_mc").copied().unwrap_or(f64::NAN)
    );
    judge(s, detail)
}

fn telegraph(tmp: &Path) -> Outcome {
    let mut n_max = Vec::new();
    let mut p_values = Vec::new();
    for seed in 0..4 {
        let json = format!(
            r#"{{"barriers": {{"p_l": 0.95, "p_r": 0.05}}, "detector": {{"flux": 1.0}},
                "initial": {{"rho_ll": 0.5}}, "hamiltonian": {{"vx": 0.05, "vy": 0.0, "vz": 0.0}},
                "n": 4000, "ensemble": 1000, "master_seed": {seed}, "telegraph": {{"window": 11}}}}"#
        );
        let s = harness(Mode::Simulate, &json, &tmp.join(format!("telegraph{seed}")))?;
        if !s.pass {
            return Err(format!("seed {seed}: {}", failed_checks(&s)));
        }
        n_max.push(s.empirical_n_max.ok_or("no empirical N_max")?);
        p_values.push(check(&s, "geometric_p_value"));
    }
    let spread = relative_spread(&n_max);
    let detail = format!(
        "geometric p = {}, N_max = {} (spread {:.1}%)",
        p_values.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join("/"),
        n_max.iter().map(|n| format!("{n:.0}")).collect::<Vec<_>>().join("/"),
        100.0 * spread
    );
    if spread <= 0.10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn zero_charge() -> Outcome {
    let b = BarrierPair::from_probabilities(0.8, 0.2).map_err(|e| e.to_string())?;
    let mut worst_factor = 0.0f64;
    let mut worst_drift = 0.0f64;
    for (regime, delta_t, t_rel) in [(Regime::Short, 10.0, None), (Regime::Long, 1000.0, Some(50.0))] {
        let r = zero_charge_limit(&b, 1.0, delta_t, regime, t_rel, 10).map_err(|e| e.to_string())?;
        for w in r.points.windows(2) {
            let f = w[0].var_partition_part / w[1].var_partition_part;
            worst_factor = worst_factor.max((f - 2.0).abs() / 2.0);
        }
        worst_drift = worst_drift.max(r.measurement_drift);
    }
    let detail = format!("partition factor error {worst_factor:.1e}, measurement drift {worst_drift:.1e}");
    if worst_factor <= 1e-9 && worst_drift <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn conservation() -> Outcome {
    let mut rng = stream_rng(77, 0);
    let mut kraus = 0.0f64;
    let mut pz = 0.0f64;
    for _ in 0..2000 {
        let b = BarrierPair::new(
            rng.random::<f64>() * std::f64::consts::FRAC_PI_2,
            rng.random::<f64>() * std::f64::consts::FRAC_PI_2,
        )
        .map_err(|e| e.to_string())?;
        let k = KrausPair::from_barriers(&b);
        kraus = kraus.max(k.completeness_deviation());
        let rho_ll: f64 = rng.random();
        let r = (rho_ll * (1.0 - rho_ll)).sqrt() * rng.random::<f64>();
        let phase = rng.random::<f64>() * std::f64::consts::TAU;
        let rho = DensityMatrix2::new(rho_ll, 1.0 - rho_ll, Complex64::from_polar(r, phase))
            .map_err(|e| e.to_string())?;
        let after = unconditioned_probe(&rho, &k);
        let (p0, p1) = (
            density_to_polarization(rho).map_err(|e| e.to_string())?,
            density_to_polarization(after).map_err(|e| e.to_string())?,
        );
        pz = pz.max((p0.pz - p1.pz).abs());
    }

    let mut growth = 0.0f64;
    for _ in 0..5 {
        let v = HamiltonianVector::new(rng.random(), rng.random(), rng.random());
        let spec = EvolutionSpec {
            v,
            d: 0.5 * rng.random::<f64>(),
            t_final: 100.0,
            dt: 0.01,
        };
        let traj = evolve(PolarizationVector::new(0.6, 0.0, 0.8), &spec).map_err(|e| e.to_string())?;
        if traj.len() < 10_001 {
            return Err(format!("only {} Bloch samples", traj.len()));
        }
        for w in traj.windows(2) {
            growth = growth.max(w[1].p.norm() - w[0].p.norm());
        }
    }

    let b = BarrierPair::from_probabilities(0.7, 0.1).map_err(|e| e.to_string())?;
    let mut norm = 0.0f64;
    for n in [1, 10, 1000, 10_000, 100_000, 1_000_000] {
        let pmf = mixture_pmf(&DensityMatrix2::diagonal(0.3).map_err(|e| e.to_string())?, &b, n)
            .map_err(|e| e.to_string())?;
        norm = norm.max((pmf.total() - 1.0).abs());
    }
    let detail = format!(
        "Kraus {kraus:.1e}, P_z {pz:.1e}, max |P| step increase {growth:.1e}, pmf normalization {norm:.1e}"
    );
    if kraus <= 1e-12 && pz <= 1e-12 && growth <= 1e-15 && norm <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .into_iter()
        .flatten()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().to_string(), std::fs::read(&p).unwrap())
        })
        .collect()
}

fn determinism(tmp: &Path) -> Outcome {
    let cases = [
        (
            Mode::Simulate,
            r#"{"barriers": {"p_l": 0.95, "p_r": 0.05}, "initial": {"rho_ll": 0.5},
                "hamiltonian": {"vx": 0.05, "vy": 0.0, "vz": 0.0}, "n": 2000, "ensemble": 300,
                "master_seed": 9, "telegraph": {"window": 11}}"#,
        ),
        (
            Mode::VerifyOracle,
            r#"{"barriers": {"p_l": 0.8, "p_r": 0.2}, "master_seed": 3,
                "oracle": {"draws": 30, "max_n": 10}}"#,
        ),
        (
            Mode::NoiseCurve,
            r#"{"barriers": {"p_l": 0.8, "p_r": 0.2}, "detector": {"n_max": 20}, "ensemble": 2000,
                "master_seed": 8, "noise_curve": {"points_per_decade": 3, "span": 30}}"#,
        ),
    ];
    let mut files = 0;
    for (i, (mode, json)) in cases.iter().enumerate() {
        let mut reference = None;
        for (tag, workers) in [("a", None), ("b", None), ("w1", Some(1)), ("w4", Some(4))] {
            let mut cfg = ExperimentConfig::from_json(json).map_err(|e| e.to_string())?;
            cfg.workers = workers;
            let dir = tmp.join(format!("det{i}{tag}"));
            let opts = RunOptions {
                seed: None,
                out: Some(dir.clone()),
            };
            run(*mode, &cfg, &opts).map_err(|e| e.to_string())?;
            let snap = snapshot(&dir);
            match &reference {
                None => {
                    files += snap.len();
                    reference = Some(snap);
                }
                Some(r) if *r == snap => {}
                Some(_) => return Err(format!("{mode}: run '{tag}' differs")),
            }
        }
    }
    Ok(format!("{files} files identical across repeat runs and 1/4 workers"))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let t = tmp.path();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("oracle equivalence", Box::new(|| oracle(t))),
        ("worked variance value", Box::new(worked_value)),
        ("decoherence rate from trajectories", Box::new(decoherence_rate)),
        ("decoherence-fluctuation proportionality", Box::new(|| relation(t))),
        ("regime scaling of current noise", Box::new(|| regime_scaling(t))),
        ("telegraph regime", Box::new(|| telegraph(t))),
        ("zero-charge limit", Box::new(zero_charge)),
        ("conservation and positivity", Box::new(conservation)),
        ("determinism", Box::new(|| determinism(t))),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
