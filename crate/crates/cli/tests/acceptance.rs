//! Acceptance suite. One PASS/FAIL line per criterion; exits nonzero if any
//! criterion fails.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use dlr_core::dataset::{chronological_split, fit_normalizer, make_windows, read_csv, write_csv, Case, FEATURES};
use dlr_core::evaluation::{mae, mse, r_squared};
use dlr_core::forecaster::{load_model, network_gradient_error};
use dlr_core::nn::{attention_gradient_error, lstm_gradient_error, Matrix};
use dlr_core::rng::SplitMix64;
use dlr_core::synth::{generate, GenConfig};
use dlr_core::thermal::{balance_residual, solve_ampacity, solve_conductor_temp};
use dlr_core::{ConductorSpec, MetricsReport, TimeSeries, WeatherPoint};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dlr(dir: &Path, args: &[&str]) -> Result<Output, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dlr"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| format!("spawning dlr: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "dlr {} exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).lines().last().unwrap_or("")
        ));
    }
    Ok(out)
}

fn read(path: impl AsRef<Path>) -> Result<Vec<u8>, String> {
    std::fs::read(path.as_ref()).map_err(|e| format!("{}: {e}", path.as_ref().display()))
}

fn ok<T>(r: dlr_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn tempdir() -> Result<tempfile::TempDir, String> {
    tempfile::tempdir().map_err(|e| e.to_string())
}

fn report(path: PathBuf) -> Result<MetricsReport, String> {
    let text = String::from_utf8(read(path)?).map_err(|e| e.to_string())?;
    MetricsReport::from_text(&text).map_err(|e| e.to_string())
}

/// Default dataset, default flags, both cases, through the binary.
fn directional_reproduction() -> Outcome {
    let dir = tempdir()?;
    let d = dir.path();
    let start = Instant::now();
    dlr(d, &["gen", "--days", "30", "--seed", "42", "--out", "data.csv"])?;
    for case in ["1", "2"] {
        let model = format!("case{case}.json");
        dlr(d, &["train", "--data", "data.csv", "--case", case, "--out", &model])?;
        dlr(d, &["eval", "--model", &model, "--data", "data.csv", "--report", &format!("case{case}.txt")])?;
    }
    let cmp = dlr(d, &["compare", "--case1", "case1.txt", "--case2", "case2.txt", "--out", "compare.txt"])?;
    let elapsed = start.elapsed();
    let r1 = report(d.join("case1.txt"))?;
    let r2 = report(d.join("case2.txt"))?;
    let summary = format!(
        "case1 mse {:.4} mae {:.4} r2 {:.5} | case2 mse {:.4} mae {:.4} r2 {:.5} | {:.0} s",
        r1.mse,
        r1.mae,
        r1.r_squared,
        r2.mse,
        r2.mae,
        r2.r_squared,
        elapsed.as_secs_f64()
    );
    let doc = String::from_utf8_lossy(&cmp.stdout);
    ensure(r2.r_squared >= r1.r_squared, || format!("case 2 R² below case 1: {summary}"))?;
    ensure(r2.mse <= r1.mse, || format!("case 2 MSE above case 1: {summary}"))?;
    ensure(r2.r_squared >= 0.90, || format!("case 2 R² under 0.90: {summary}"))?;
    ensure(doc.contains("case2_r_squared_ge_case1=true"), || format!("comparison disagrees: {doc}"))?;
    ensure(elapsed < Duration::from_secs(300), || format!("too slow: {summary}"))?;
    Ok(summary)
}

fn small_shapes(seed: u64) -> (usize, usize, usize) {
    let mut rng = SplitMix64::new(seed ^ 0xA5A5);
    (1 + rng.below(5), 1 + rng.below(4), 1 + rng.below(6))
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut weakest_mutant = f64::INFINITY;
    for seed in 0..24u64 {
        let (n, h, d) = small_shapes(seed);
        let n2 = n.max(2);
        let probes = [
            ("lstm", ok(lstm_gradient_error(seed, n, d, h, 1.0))?, ok(lstm_gradient_error(seed, n, d, h, 1.01))?),
            (
                "attention",
                ok(attention_gradient_error(seed, n2, h, 1.0))?,
                ok(attention_gradient_error(seed, n2, h, 1.01))?,
            ),
            (
                "case 1 network",
                ok(network_gradient_error(seed, Case::Univariate, n2, h, 1.0))?,
                ok(network_gradient_error(seed, Case::Univariate, n2, h, 1.01))?,
            ),
            (
                "case 2 network",
                ok(network_gradient_error(seed, Case::Multivariate, n2, h, 1.0))?,
                ok(network_gradient_error(seed, Case::Multivariate, n2, h, 1.01))?,
            ),
        ];
        for (name, clean, mutant) in probes {
            ensure(clean < 1e-4, || format!("{name} seed {seed} (n {n}, H {h}, d {d}): rel err {clean:e}"))?;
            ensure(mutant > 5e-3, || format!("{name} seed {seed}: x1.01 corruption undetected ({mutant:e})"))?;
            worst = worst.max(clean);
            weakest_mutant = weakest_mutant.min(mutant);
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "24 seeds x 4 probes, worst rel err {worst:.2e}, weakest mutant {weakest_mutant:.2e}, {:.2} s",
        elapsed.as_secs_f64()
    ))
}

fn random_spec(rng: &mut SplitMix64) -> ConductorSpec {
    ConductorSpec {
        diameter_m: rng.uniform(0.004, 0.04),
        resistance_ref_ohm_per_m: rng.uniform(1e-4, 2e-3),
        ref_temp_c: 20.0,
        alpha_per_c: rng.uniform(0.002, 0.005),
        emissivity: rng.uniform(0.2, 1.0),
        absorptivity: rng.uniform(0.2, 1.0),
        max_conductor_temp_c: rng.uniform(50.0, 150.0),
        lambda_nat: rng.uniform(0.1, 3.0),
        lambda_forced: rng.uniform(0.1, 8.0),
    }
}

fn random_weather(rng: &mut SplitMix64) -> WeatherPoint {
    WeatherPoint {
        ambient_temp_c: rng.uniform(-20.0, 45.0),
        wind_speed_ms: rng.uniform(0.0, 15.0),
        humidity_pct: rng.uniform(0.0, 100.0),
        irradiance_wm2: rng.uniform(0.0, 1200.0),
    }
}

fn thermal_soundness() -> Outcome {
    let start = Instant::now();
    let mut rng = SplitMix64::new(738);
    let (mut worst_res, mut worst_trip) = (0.0f64, 0.0f64);
    for k in 0..1000 {
        let spec = random_spec(&mut rng);
        let w = random_weather(&mut rng);
        let i = ok(solve_ampacity(&spec, &w))?;
        ensure(i >= 0.0, || format!("input {k}: negative ampacity {i}"))?;
        if i > 0.0 {
            let r = balance_residual(&spec, &w, spec.max_conductor_temp_c, i).abs();
            ensure(r < 1e-6, || format!("input {k}: residual {r:e} W/m"))?;
            let t = ok(solve_conductor_temp(&spec, &w, i))?;
            let trip = (t - spec.max_conductor_temp_c).abs();
            ensure(trip < 1e-6, || format!("input {k}: round trip off by {trip:e} °C"))?;
            worst_res = worst_res.max(r);
            worst_trip = worst_trip.max(trip);
        }

        let windier = WeatherPoint {
            wind_speed_ms: w.wind_speed_ms + rng.uniform(0.0, 10.0),
            ..w
        };
        let hotter = WeatherPoint {
            ambient_temp_c: w.ambient_temp_c + rng.uniform(0.0, 15.0),
            ..w
        };
        let sunnier = WeatherPoint {
            irradiance_wm2: w.irradiance_wm2 + rng.uniform(0.0, 500.0),
            ..w
        };
        ensure(ok(solve_ampacity(&spec, &windier))? >= i, || format!("input {k}: more wind lowered ampacity"))?;
        ensure(ok(solve_ampacity(&spec, &hotter))? <= i, || format!("input {k}: warmer air raised ampacity"))?;
        ensure(ok(solve_ampacity(&spec, &sunnier))? <= i, || format!("input {k}: more sun raised ampacity"))?;

        let humid = WeatherPoint {
            humidity_pct: rng.uniform(0.0, 100.0),
            ..w
        };
        let ih = ok(solve_ampacity(&spec, &humid))?;
        ensure(ih.to_bits() == i.to_bits(), || format!("input {k}: humidity changed ampacity"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "1000 inputs, worst residual {worst_res:.1e} W/m, worst round trip {worst_trip:.1e} °C, {:.2} s",
        elapsed.as_secs_f64()
    ))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn metric_oracles() -> Outcome {
    let mut rng = SplitMix64::new(2024);
    let actual: Vec<f64> = (0..100_000).map(|_| 150.0 + 40.0 * rng.normal()).collect();
    let pred: Vec<f64> = actual.iter().map(|a| a + 5.0 * rng.normal()).collect();

    // Plain loops as the oracle.
    let n = actual.len() as f64;
    let (mut se, mut ae, mut sa) = (0.0, 0.0, 0.0);
    for (p, a) in pred.iter().zip(&actual) {
        se += (p - a) * (p - a);
        ae += (p - a).abs();
        sa += a;
    }
    let mean = sa / n;
    let tot: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    let worst = [
        rel(ok(mse(&pred, &actual))?, se / n),
        rel(ok(mae(&pred, &actual))?, ae / n),
        rel(ok(r_squared(&pred, &actual))?, 1.0 - se / tot),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    ensure(worst < 1e-12, || format!("brute force disagrees by {worst:e}"))?;

    let perfect = ok(r_squared(&actual, &actual))?;
    ensure((perfect - 1.0).abs() < 1e-12, || format!("perfect predictor R² {perfect}"))?;
    let flat = vec![mean; actual.len()];
    let r_mean = ok(r_squared(&flat, &actual))?;
    ensure(r_mean.abs() < 1e-12, || format!("mean predictor R² {r_mean}"))?;

    for k in 0..2000 {
        let len = 2 + rng.below(200);
        let a: Vec<f64> = (0..len).map(|_| rng.uniform(-1e3, 1e3)).collect();
        let p: Vec<f64> = (0..len).map(|_| rng.uniform(-1e3, 1e3)).collect();
        let (m, ab) = (ok(mse(&p, &a))?, ok(mae(&p, &a))?);
        ensure(ab * ab <= m * (1.0 + 1e-14), || format!("pair {k}: mae² {} > mse {m}", ab * ab))?;
        let r = MetricsReport::from_predictions(Case::Multivariate, &p, &a).map_err(|e| e.to_string())?;
        ensure(r.accuracy_pct == 100.0 * r.r_squared, || format!("pair {k}: accuracy_pct not 100·R²"))?;
    }
    Ok(format!("1e5 values within {worst:.1e}, 2000 random pairs"))
}

fn generated(days: u32, seed: u64) -> Result<TimeSeries, String> {
    let cfg = GenConfig {
        days,
        seed,
        ..GenConfig::default()
    };
    generate(&cfg, &ConductorSpec::default()).map_err(|e| e.to_string())
}

fn protocol_fidelity() -> Outcome {
    let ts = generated(2, 1)?;
    let hundred = ok(TimeSeries::new(ts.records()[..100].to_vec()))?;
    let (train, test) = ok(chronological_split(&hundred, 0.8))?;
    ensure((train.len(), test.len()) == (80, 20), || format!("split {} / {}", train.len(), test.len()))?;
    let last_train = train.records().last().map(|r| r.timestamp);
    ensure(
        test.records().iter().all(|r| Some(r.timestamp) > last_train),
        || "a test record precedes the last train record".into(),
    )?;

    ensure(
        FEATURES == ["dlr_a", "ambient_temp_c", "wind_speed_ms", "humidity_pct", "cable_temp_c", "irradiance_wm2"],
        || format!("feature order {FEATURES:?}"),
    )?;
    let norm = ok(fit_normalizer(&train))?;
    let c1 = ok(make_windows(&train, &norm, Case::Univariate, 16))?;
    let c2 = ok(make_windows(&train, &norm, Case::Multivariate, 16))?;
    ensure(c1.inputs.iter().all(|w| w.shape() == (16, 1)), || "case 1 window not n x 1".into())?;
    ensure(c2.inputs.iter().all(|w| w.shape() == (16, 6)), || "case 2 window not n x 6".into())?;
    let r = &train.records()[3];
    let raw = [r.dlr_a, r.ambient_temp_c, r.wind_speed_ms, r.humidity_pct, r.cable_temp_c, r.irradiance_wm2];
    let row = c2.inputs[0].row(3);
    ensure(
        (0..6).all(|j| row[j] == norm.transform(j, raw[j])),
        || "case 2 columns out of order".into(),
    )?;

    // Same statistics with the test rows absent, and with them rewritten.
    let alone = ok(fit_normalizer(&ok(TimeSeries::new(train.records().to_vec()))?))?;
    let mut edited = hundred.records().to_vec();
    for r in &mut edited[80..] {
        r.dlr_a *= 3.0;
        r.ambient_temp_c += 40.0;
        r.wind_speed_ms += 9.0;
        r.irradiance_wm2 = 0.0;
    }
    let (train2, _) = ok(chronological_split(&ok(TimeSeries::new(edited))?, 0.8))?;
    let rewritten = ok(fit_normalizer(&train2))?;
    ensure(norm == alone && norm == rewritten, || "normalizer depends on test rows".into())?;
    Ok(format!("80/20 split, {} windows per case, train-only statistics", c1.len()))
}

fn small_run(dir: &Path, data: &str) -> Result<(), String> {
    for case in ["1", "2"] {
        let model = format!("m{case}.json");
        dlr(
            dir,
            &["train", "--data", data, "--case", case, "--out", &model, "--epochs", "4", "--hidden", "8", "--window", "8"],
        )?;
        dlr(dir, &["eval", "--model", &model, "--data", data, "--report", &format!("r{case}.txt")])?;
        dlr(dir, &["forecast", "--model", &model, "--data", data, "--out", &format!("f{case}.csv")])?;
    }
    dlr(dir, &["plot", "--actual", data, "--pred", "f1.csv", "--pred2", "f2.csv", "--out", "plot.svg"])?;
    Ok(())
}

fn determinism_and_persistence() -> Outcome {
    let (a, b) = (tempdir()?, tempdir()?);
    for dir in [a.path(), b.path()] {
        dlr(dir, &["gen", "--days", "4", "--seed", "42", "--out", "data.csv"])?;
        small_run(dir, "data.csv")?;
    }
    let artifacts = ["data.csv", "m1.json", "m2.json", "r1.txt", "r2.txt", "f1.csv", "f2.csv", "plot.svg"];
    for name in artifacts {
        ensure(read(a.path().join(name))? == read(b.path().join(name))?, || format!("{name} differs between runs"))?;
    }

    // Reload and predict on 100 random windows.
    let mut rng = SplitMix64::new(100);
    for name in ["m1.json", "m2.json"] {
        let path = a.path().join(name);
        let m = load_model(&path).map_err(|e| e.to_string())?;
        let copy = a.path().join(format!("copy-{name}"));
        dlr_core::forecaster::save_model(&m, &copy).map_err(|e| e.to_string())?;
        ensure(read(&copy)? == read(&path)?, || format!("{name} changes on re-save"))?;
        let back = load_model(&copy).map_err(|e| e.to_string())?;
        let d = m.case().input_dim();
        for k in 0..100 {
            let w = Matrix::from_vec(8, d, (0..8 * d).map(|_| 2.0 * rng.normal()).collect());
            let (p, q) = (m.predict(&w), back.predict(&w));
            let (p, q) = (p.map_err(|e| e.to_string())?, q.map_err(|e| e.to_string())?);
            ensure(p.to_bits() == q.to_bits(), || format!("{name} window {k}: {p} vs {q}"))?;
        }
    }

    // Scramble the five weather columns; case 1 must not notice.
    let ts = read_csv(a.path().join("data.csv")).map_err(|e| e.to_string())?;
    let mut records = ts.into_records();
    for r in &mut records {
        r.ambient_temp_c = rng.uniform(-10.0, 45.0);
        r.cable_temp_c = rng.uniform(-10.0, 90.0);
        r.wind_speed_ms = rng.uniform(0.0, 20.0);
        r.humidity_pct = rng.uniform(0.0, 100.0);
        r.irradiance_wm2 = rng.uniform(0.0, 1200.0);
    }
    let c = tempdir()?;
    write_csv(c.path().join("data.csv"), &records).map_err(|e| e.to_string())?;
    small_run(c.path(), "data.csv")?;
    let (m_a, m_c) = (ok(load_model(a.path().join("m1.json")))?, ok(load_model(c.path().join("m1.json")))?);
    ensure(m_a.network == m_c.network, || "case 1 weights changed under weather edits".into())?;
    for name in ["f1.csv", "r1.txt"] {
        ensure(read(a.path().join(name))? == read(c.path().join(name))?, || {
            format!("case 1 {name} changed under weather edits")
        })?;
    }
    ensure(read(a.path().join("f2.csv"))? != read(c.path().join("f2.csv"))?, || {
        "case 2 forecasts ignored the weather edits".into()
    })?;
    Ok(format!("{} artifacts bitwise equal, 2 x 100 reloaded predictions, case 1 weather-blind", artifacts.len()))
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn synthetic_structure() -> Outcome {
    use chrono::Timelike;
    let dir = tempdir()?;
    dlr(dir.path(), &["gen", "--days", "7", "--seed", "42", "--out", "week.csv"])?;
    let ts = read_csv(dir.path().join("week.csv")).map_err(|e| e.to_string())?;
    ensure(ts.len() == 7 * 96, || format!("{} records", ts.len()))?;
    ensure(ts.step() == chrono::Duration::minutes(15), || format!("step {:?}", ts.step()))?;
    let col = |f: fn(&dlr_core::Measurement) -> f64| ts.records().iter().map(f).collect::<Vec<f64>>();
    let irr = col(|r| r.irradiance_wm2);
    let cable = pearson(&irr, &col(|r| r.cable_temp_c));
    let ambient = pearson(&irr, &col(|r| r.ambient_temp_c));
    let humidity = pearson(&irr, &col(|r| r.humidity_pct));
    ensure(cable > 0.3, || format!("corr(irradiance, cable) {cable}"))?;
    ensure(ambient > 0.3, || format!("corr(irradiance, ambient) {ambient}"))?;
    ensure(humidity < -0.3, || format!("corr(irradiance, humidity) {humidity}"))?;
    let night = ts.records().iter().filter(|r| {
        let h = r.timestamp.hour();
        !(6..18).contains(&h)
    });
    let mut nights = 0;
    for r in night {
        ensure(r.irradiance_wm2 == 0.0, || format!("{} irradiance {}", r.timestamp, r.irradiance_wm2))?;
        nights += 1;
    }
    Ok(format!(
        "672 records, corr cable {cable:.3} ambient {ambient:.3} humidity {humidity:.3}, {nights} dark steps"
    ))
}

fn main() {
    let criteria: [(&str, Check); 7] = [
        ("directional reproduction, case 2 beats case 1", directional_reproduction),
        ("gradient correctness", gradient_correctness),
        ("thermal solver soundness", thermal_soundness),
        ("metric oracles", metric_oracles),
        ("protocol fidelity", protocol_fidelity),
        ("determinism and persistence", determinism_and_persistence),
        ("synthetic data structure", synthetic_structure),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
