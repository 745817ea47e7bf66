//! Acceptance checks, one line per criterion. Exits non-zero on any failure.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};
use serde_json::Value;

use qsl_core::composite::{compose, frame_adjusted_count};
use qsl_core::evolution::{self, approximate_tolerance, lemma_margin, reim_gap, OrthogonalitySearch};
use qsl_core::latticegas::{LatticeGas, EAST};
use qsl_core::optimizer::{minimize_tau, SearchConfig};
use qsl_core::sequences::{self, cycle_energy_floor, exact_cycle_check, gram, LadderWeights};
use qsl_core::state::PureState;
use qsl_core::Spectrum;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_secs, || {
        format!("took {:.2}s, limit {limit_secs}s", elapsed.as_secs_f64())
    })
}

fn qsl(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qsl"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn two_level_saturation() -> Result<String, String> {
    let start = Instant::now();
    let (code, stdout) = qsl(&["first-zero", "--state", "two-level:E=1", "--delta", "1e-9"]);
    let elapsed = start.elapsed();
    ensure(code == 0, || format!("exit code {code}"))?;
    let v: Value = serde_json::from_str(stdout.trim()).map_err(|e| e.to_string())?;
    let tau = v["tau"].as_f64().ok_or("no tau")?;
    let (ml, mt) = (v["ml_time"].as_f64().unwrap(), v["mt_time"].as_f64().unwrap());
    ensure((tau - 0.25).abs() <= 1e-9, || format!("tau = {tau}"))?;
    ensure(ml == 0.25 && mt == 0.25, || format!("bounds {ml}, {mt}"))?;
    within(elapsed, 1.0)?;
    Ok(format!("tau = {tau:.12}, ml = mt = 0.25, {:.3}s", elapsed.as_secs_f64()))
}

fn bound_soundness() -> Result<String, String> {
    let start = Instant::now();
    let spectrum = Spectrum::harmonic(16, 1.0).unwrap();
    let energy = 4.0;
    let t_max = OrthogonalitySearch::default_t_max(energy);
    let (mut crossings, mut coarse_crossings, mut worst) = (0, 0, f64::INFINITY);
    for seed in 0..1000u64 {
        let state = PureState::sample_fixed_energy(&spectrum, energy, seed).map_err(|e| e.to_string())?;
        let report = evolution::bounds(&state, None).unwrap();
        let (ml, mt) = (report.ml_time.unwrap(), report.mt_time.unwrap());
        if let Some(tau) = evolution::first_orthogonality_time(&state, 1e-6, t_max).unwrap() {
            crossings += 1;
            ensure(tau >= ml - 1e-6 && tau >= mt - 1e-6, || {
                format!("seed {seed}: tau {tau} vs ml {ml} mt {mt}")
            })?;
        }
        // A looser threshold reaches many states; check the bound with its
        // first-order slack.
        let delta = 0.1;
        if let Some(tau) = evolution::first_orthogonality_time(&state, delta, t_max).unwrap() {
            coarse_crossings += 1;
            let bound = report.strongest().unwrap();
            let margin = tau - (bound - approximate_tolerance(delta, bound));
            worst = worst.min(margin);
            ensure(margin >= 0.0, || format!("seed {seed}: delta {delta} tau {tau} bound {bound}"))?;
        }
    }
    within(start.elapsed(), 30.0)?;
    Ok(format!(
        "1000 states: {crossings} reach |S| <= 1e-6, {coarse_crossings} reach 0.1, min slack {worst:.4}, {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn inequality_lemma() -> Result<String, String> {
    let n = 1_000_000;
    let worst = (0..n)
        .map(|i| lemma_margin(1000.0 * i as f64 / (n - 1) as f64))
        .fold(f64::INFINITY, f64::min);
    ensure(worst >= -1e-12, || format!("min margin {worst}"))?;
    Ok(format!("min margin {worst:e} over {n} points"))
}

fn reim_inequality() -> Result<String, String> {
    let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(4);
    let spectrum = Spectrum::harmonic(12, 1.0).unwrap();
    let mut worst = f64::INFINITY;
    for seed in 0..1000u64 {
        let energy = rng.random_range(0.2..10.8);
        let state = PureState::sample_fixed_energy(&spectrum, energy, seed).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let t = rng.random_range(0.0..10.0);
            worst = worst.min(reim_gap(&state, t).unwrap());
        }
    }
    ensure(worst >= -1e-12, || format!("min gap {worst}"))?;
    Ok(format!("min gap {worst:.3e} over 100000 (state, t) pairs"))
}

fn exact_cycle() -> Result<String, String> {
    let start = Instant::now();
    let state = PureState::uniform_cycle(8, 1.0).unwrap();
    let g = gram(&state, 0.125, 8).unwrap();
    let mean = state.energy_stats().mean;
    let cycle = evolution::bounds(&state, Some(8)).unwrap().cycle_time.ok_or("no cycle bound")?;
    ensure(g.is_identity(1e-12), || format!("deviation {}", g.identity_deviation()))?;
    ensure(mean == 3.5, || format!("mean {mean}"))?;
    ensure(cycle == 0.125, || format!("cycle bound {cycle}"))?;
    within(start.elapsed(), 1.0)?;
    Ok(format!("Gram deviation {:.1e}, mean 3.5, cycle bound 0.125", g.identity_deviation()))
}

fn big_delta_counterexample() -> Result<String, String> {
    let mut spreads = Vec::new();
    let mut last_mt = 0.0;
    for n in [10usize, 40, 160, 640] {
        let state = PureState::big_delta(1.0, 1.0, n).map_err(|e| e.to_string())?;
        let tau = evolution::first_orthogonality_time(&state, 1e-6, 12.5)
            .unwrap()
            .ok_or(format!("n = {n}: no orthogonality"))?;
        ensure((tau - 0.5).abs() <= 1e-6, || format!("n = {n}: tau {tau}"))?;
        let report = evolution::bounds(&state, None).unwrap();
        ensure(tau >= report.ml_time.unwrap(), || format!("n = {n}: below ml bound"))?;
        spreads.push((n, state.energy_stats().stddev));
        last_mt = report.mt_time.unwrap();
    }
    let fit = sequences::fit_power_law(&spreads).ok_or("fit failed")?;
    ensure((fit.slope - 0.5).abs() <= 0.1, || format!("spread slope {}", fit.slope))?;
    ensure(last_mt < 0.05, || format!("mt at 640 = {last_mt}"))?;
    Ok(format!("tau = 0.5 for all n, spread slope {:.3}, mt(640) = {last_mt:.4}", fit.slope))
}

fn macroscopic_construction() -> Result<String, String> {
    let start = Instant::now();
    let n_list = [50usize, 100, 200, 400, 800];
    let overlap = sequences::residual_scaling(0.5, 1, &n_list).map_err(|e| e.to_string())?;
    let dsq = sequences::delta_sq_scaling(0.5, &n_list).map_err(|e| e.to_string())?;
    let (s1, s2) = (overlap.exponent_fit.ok_or("no fit")?, dsq.exponent_fit.ok_or("no fit")?);
    ensure((s1 + 1.0).abs() <= 0.2, || format!("overlap slope {s1}"))?;
    ensure((s2 + 1.0).abs() <= 0.2, || format!("delta^2 slope {s2}"))?;
    let mut worst = 0.0f64;
    for &n in &n_list {
        let spectrum = Spectrum::power_law(n + 1, 0.5, 1.0).unwrap();
        let state = PureState::interval_weighted(&spectrum, n).unwrap();
        let s = sequences::sum_delta_sq(&spectrum, n).unwrap();
        worst = worst.max((state.energy_stats().mean - spectrum.max_energy() / 2.0 * (1.0 - s)).abs());
    }
    ensure(worst <= 1e-12, || format!("identity off by {worst}"))?;
    within(start.elapsed(), 60.0)?;
    Ok(format!("overlap slope {s1:.3}, delta^2 slope {s2:.3}, identity error {worst:.1e}"))
}

fn cycle_characterization() -> Result<String, String> {
    let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(8);
    let (mut cycles, mut equalities) = (0, 0);
    for trial in 0..200 {
        let n = rng.random_range(2..10usize);
        let folds = rng.random_range(1..4usize);
        let raw: Vec<f64> = (0..n * folds).map(|_| rng.random_range(0.05..1.0)).collect();
        let weights: Vec<f64> = match trial % 3 {
            // Each residue class carries exactly 1/N, split at random.
            0 | 1 => (0..n * folds)
                .map(|i| {
                    let share: f64 = (0..folds).map(|l| raw[i % n + l * n]).sum();
                    raw[i] / share / n as f64
                })
                .collect(),
            _ => {
                let total: f64 = raw.iter().sum();
                raw.iter().map(|w| w / total).collect()
            }
        };
        let ladder = LadderWeights::new(1.0, weights.clone()).map_err(|e| e.to_string())?;
        let check = exact_cycle_check(&weights, n).unwrap();
        let g = gram(&ladder.to_state().unwrap(), 1.0 / n as f64, n).unwrap();
        ensure(check.is_cycle == g.is_identity(1e-12), || format!("trial {trial}: check and Gram disagree"))?;
        if check.is_cycle {
            cycles += 1;
            let floor = cycle_energy_floor(&ladder, n).unwrap();
            ensure(floor.holds, || format!("trial {trial}: mean {} < floor {}", floor.mean, floor.floor))?;
            let uniform = weights.iter().take(n).all(|w| (w - 1.0 / n as f64).abs() < 1e-12)
                && weights[n..].iter().all(|&w| w == 0.0);
            ensure(floor.equality == uniform, || format!("trial {trial}: equality without uniform weights"))?;
            equalities += usize::from(floor.equality);
        }
    }
    Ok(format!("200 splittings: {cycles} exact cycles, {equalities} on the floor (all uniform)"))
}

fn additivity() -> Result<String, String> {
    let a = PureState::interval_weighted(&Spectrum::power_law(41, 0.5, 1.0).unwrap(), 40).unwrap();
    let b = PureState::interval_weighted(&Spectrum::power_law(31, 0.8, 2.0).unwrap(), 30).unwrap();
    let sum = a.energy_stats().mean + b.energy_stats().mean;
    let product = compose(vec![a, b]).map_err(|e| e.to_string())?;
    let total = product.combined.energy_stats().mean;
    let parts: f64 = product.part_rate_bounds().iter().sum();
    ensure((total - sum).abs() <= 1e-12, || format!("mean {total} vs {sum}"))?;
    ensure((product.rate_bound() - parts).abs() <= 2e-12, || {
        format!("rate {} vs {parts}", product.rate_bound())
    })?;
    Ok(format!("E_tot = {total:.12}, rate bound {:.12}", product.rate_bound()))
}

fn frame_count() -> Result<String, String> {
    let moving = frame_adjusted_count(1.0, 1.0, 1.0, 0.5);
    let rest = frame_adjusted_count(1.0, 1.0, 0.0, 0.0);
    ensure(moving == 1.0 && rest == 2.0, || format!("{moving}, {rest}"))?;
    let (code, stdout) = qsl(&["frame-count", "--energy", "1", "--time", "1", "--momentum", "1", "--displacement", "0.5"]);
    ensure(code == 0 && stdout.trim() == r#"{"count":1}"#, || format!("cli: {code} {stdout}"))?;
    Ok("counts 1 and 2".into())
}

fn lattice_gas() -> Result<String, String> {
    let start = Instant::now();
    let mut lines = Vec::new();
    for collisions in [false, true] {
        let mut gas = LatticeGas::init_random(16, 16, 0.25, 2024).unwrap();
        let mut every_step = true;
        let s = gas
            .run(10_000, collisions, |_, r| every_step &= r.changes <= r.bound)
            .unwrap();
        ensure(every_step && s.bound_held && s.conserved, || format!("collisions={collisions}: {s:?}"))?;
        lines.push(format!("mean utilization {:.3} (collisions {collisions})", s.mean_utilization));
    }
    let mut single = LatticeGas::empty(16, 16).unwrap();
    single.insert(3, 5, EAST).unwrap();
    let mut saturated = true;
    single.run(10_000, true, |_, r| saturated &= r.utilization == 1.0).unwrap();
    ensure(saturated, || "single particle below saturation".into())?;
    within(start.elapsed(), 10.0)?;
    Ok(format!("{}; single particle saturates", lines.join(", ")))
}

fn optimizer_bound() -> Result<String, String> {
    let start = Instant::now();
    let spectra = [
        Spectrum::from_list(&[0.0, 2.0]).unwrap(),
        Spectrum::harmonic(9, 0.25).unwrap(),
        Spectrum::harmonic(16, 0.5).unwrap(),
        Spectrum::power_law(12, 0.5, 1.0).unwrap(),
        Spectrum::from_list(&[0.0, 0.7, 1.3, 3.1, 4.4]).unwrap(),
    ];
    let (mut min_tau, mut hit) = (f64::INFINITY, 0);
    for spectrum in &spectra {
        let has_two = spectrum.energies().iter().any(|&e| (e - 2.0).abs() < 1e-12);
        for seed in 0..10 {
            let config = SearchConfig { seed, ..SearchConfig::default() };
            let r = minimize_tau(spectrum, 1.0, &config).map_err(|e| e.to_string())?;
            if let Some(tau) = r.best_tau {
                ensure(tau >= 0.25 - 1e-6, || format!("{}: seed {seed} tau {tau}", spectrum.label()))?;
                min_tau = min_tau.min(tau);
                let on_pair: f64 = r
                    .best_state
                    .support()
                    .filter(|(e, _)| *e == 0.0 || (e - 2.0).abs() < 1e-12)
                    .map(|(_, w)| w)
                    .sum();
                if has_two && tau <= 0.255 && on_pair >= 0.95 {
                    hit += 1;
                }
            }
        }
    }
    ensure(hit > 0, || "no run reached the two-level optimum".into())?;
    within(start.elapsed(), 300.0)?;
    Ok(format!(
        "50 runs, min best_tau {min_tau:.8}, {hit} runs at the {{0, 2}} optimum, {:.1}s",
        start.elapsed().as_secs_f64()
    ))
}

fn main() {
    let checks: [(&str, Check); 12] = [
        ("two-level saturation", two_level_saturation),
        ("bound soundness stress", bound_soundness),
        ("inequality lemma", inequality_lemma),
        ("real/imaginary inequality", reim_inequality),
        ("exact cycle", exact_cycle),
        ("large-spread counterexample", big_delta_counterexample),
        ("macroscopic construction", macroscopic_construction),
        ("cycle characterization", cycle_characterization),
        ("additivity", additivity),
        ("frame count", frame_count),
        ("lattice gas", lattice_gas),
        ("optimizer vs bound", optimizer_bound),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        match check() {
            Ok(detail) => println!("AC{:<2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("AC{:<2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
