use std::fmt::Display;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use dlr_core::dataset::{chronological_split, fit_normalizer, format_timestamp, make_windows, read_csv, write_csv};
use dlr_core::evaluation::{comparison_text, evaluate};
use dlr_core::forecaster::{build_model, load_model, save_model, train as fit};
use dlr_core::synth::generate;
use dlr_core::{Case, ConductorSpec, GenConfig, MetricsReport, ModelConfig};

use crate::plot::{read_series, render_svg};
use crate::{CompareArgs, EvalArgs, ForecastArgs, GenArgs, PlotArgs, RateArgs, TrainArgs};

/// Echoes the resolved settings, defaults included, to stderr.
fn print_config(command: &str, entries: &[(&str, &dyn Display)]) {
    eprintln!("dlr {command}:");
    for (key, value) in entries {
        eprintln!("  {key} = {value}");
    }
}

fn load_spec(path: Option<&Path>) -> Result<ConductorSpec> {
    match path {
        Some(p) => ConductorSpec::from_file(p).with_context(|| format!("conductor file {}", p.display())),
        None => Ok(ConductorSpec::default()),
    }
}

fn print_spec(spec: &ConductorSpec, path: Option<&Path>) {
    let source = path.map_or("<default>".to_string(), |p| p.display().to_string());
    eprintln!("  spec = {source}");
    for line in spec.to_kv().lines() {
        eprintln!("    {line}");
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub(crate) fn gen(a: &GenArgs) -> Result<()> {
    let spec = load_spec(a.spec.as_deref())?;
    let cfg = GenConfig {
        days: a.days,
        seed: a.seed,
        step_minutes: a.step_min,
        ..GenConfig::default()
    };
    print_config(
        "gen",
        &[
            ("days", &cfg.days),
            ("seed", &cfg.seed),
            ("step_min", &cfg.step_minutes),
            ("out", &a.out.display()),
            ("base_ambient_c", &cfg.base_ambient_c),
            ("ambient_swing_c", &cfg.ambient_swing_c),
            ("ambient_noise_c", &cfg.ambient_noise_c),
            ("humidity_noise_pct", &cfg.humidity_noise_pct),
            ("irradiance_peak_wm2", &cfg.irradiance_peak_wm2),
            ("cloud_noise", &cfg.cloud_noise),
            ("wind_mean_ms", &cfg.wind_mean_ms),
            ("wind_ar_coeff", &cfg.wind_ar_coeff),
            ("wind_std_ms", &cfg.wind_std_ms),
            ("load_base_a", &cfg.load_base_a),
            ("load_swing_a", &cfg.load_swing_a),
            ("noise_scale", &cfg.noise_scale),
        ],
    );
    print_spec(&spec, a.spec.as_deref());
    let ts = generate(&cfg, &spec)?;
    write_csv(&a.out, ts.records())?;
    eprintln!("wrote {} records to {}", ts.len(), a.out.display());
    Ok(())
}

pub(crate) fn rate(a: &RateArgs) -> Result<()> {
    let spec = load_spec(a.spec.as_deref())?;
    print_config("rate", &[("in", &a.input.display()), ("out", &a.out.display())]);
    print_spec(&spec, a.spec.as_deref());
    let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let rated = crate::rate::rate_csv(&text, &spec).with_context(|| format!("rating {}", a.input.display()))?;
    write(&a.out, &rated.text)?;
    eprintln!("rated {} rows into {}", rated.rows, a.out.display());
    Ok(())
}

pub(crate) fn train(a: &TrainArgs) -> Result<()> {
    let case = Case::from_tag(a.case)?;
    let cfg = ModelConfig {
        case,
        window_len: a.window,
        hidden_dim: a.hidden,
        epochs: a.epochs,
        learning_rate: a.lr,
        batch_size: a.batch,
        seed: a.seed,
        early_stop_patience: a.patience,
        train_frac: a.train_frac,
        shuffle: a.shuffle,
    };
    print_config(
        "train",
        &[
            ("data", &a.data.display()),
            ("case", &case),
            ("out", &a.out.display()),
            ("window", &cfg.window_len),
            ("hidden", &cfg.hidden_dim),
            ("epochs", &cfg.epochs),
            ("lr", &cfg.learning_rate),
            ("batch", &cfg.batch_size),
            ("seed", &cfg.seed),
            ("patience", &cfg.early_stop_patience),
            ("train_frac", &cfg.train_frac),
            ("shuffle", &cfg.shuffle),
        ],
    );
    let model = build_model(&cfg)?;
    let ts = read_csv(&a.data)?;
    let (train_ts, _) = chronological_split(&ts, cfg.train_frac)?;
    let norm = fit_normalizer(&train_ts)?;
    let ds = make_windows(&train_ts, &norm, case, cfg.window_len)?;
    let (model, report) = fit(model, &ds).context("training")?;
    save_model(&model, &a.out)?;
    eprintln!(
        "trained case {case}: {} epochs, best epoch {} (val mse {:.6}), {:.1} s; saved {}",
        report.epochs_run,
        report.best_epoch,
        report.best_val_mse,
        report.wall_time_s,
        a.out.display()
    );
    Ok(())
}

pub(crate) fn eval(a: &EvalArgs) -> Result<()> {
    let report_path = a.report.as_ref().map_or("<stdout only>".to_string(), |p| p.display().to_string());
    print_config(
        "eval",
        &[("model", &a.model.display()), ("data", &a.data.display()), ("report", &report_path)],
    );
    let model = load_model(&a.model)?;
    let ts = read_csv(&a.data)?;
    let (_, test) = chronological_split(&ts, model.config.train_frac)?;
    let report = evaluate(&model, &test)?;
    let text = report.to_text();
    print!("{text}");
    if let Some(path) = &a.report {
        write(path, &text)?;
    }
    Ok(())
}

pub(crate) fn forecast(a: &ForecastArgs) -> Result<()> {
    print_config(
        "forecast",
        &[("model", &a.model.display()), ("data", &a.data.display()), ("out", &a.out.display())],
    );
    let model = load_model(&a.model)?;
    let ts = read_csv(&a.data)?;
    let rows = model.forecast_series(&ts)?;
    let mut out = String::from("timestamp,predicted_dlr_a\n");
    for (at, value) in &rows {
        out.push_str(&format!("{},{}\n", format_timestamp(at), value));
    }
    write(&a.out, &out)?;
    eprintln!("wrote {} forecasts to {}", rows.len(), a.out.display());
    Ok(())
}

pub(crate) fn plot(a: &PlotArgs) -> Result<()> {
    let pred2 = a.pred2.as_ref().map_or("<none>".to_string(), |p| p.display().to_string());
    print_config(
        "plot",
        &[
            ("actual", &a.actual.display()),
            ("pred", &a.pred.display()),
            ("pred2", &pred2),
            ("out", &a.out.display()),
        ],
    );
    let actual = read_series(&a.actual, "Actual")?;
    let mut series = vec![actual];
    for path in std::iter::once(&a.pred).chain(a.pred2.as_ref()) {
        let label = path.file_stem().map_or("Predicted".to_string(), |s| s.to_string_lossy().into_owned());
        series.push(read_series(path, &label)?);
    }
    let svg = render_svg(&series)?;
    write(&a.out, &svg)?;
    eprintln!("wrote {} series to {}", series.len(), a.out.display());
    Ok(())
}

fn read_report(path: &Path) -> Result<MetricsReport> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    MetricsReport::from_text(&text).with_context(|| format!("report {}", path.display()))
}

pub(crate) fn compare(a: &CompareArgs) -> Result<()> {
    let out = a.out.as_ref().map_or("<stdout only>".to_string(), |p| p.display().to_string());
    print_config(
        "compare",
        &[("case1", &a.case1.display()), ("case2", &a.case2.display()), ("out", &out)],
    );
    let r1 = read_report(&a.case1)?;
    let r2 = read_report(&a.case2)?;
    if r1.case != Case::Univariate || r2.case != Case::Multivariate {
        bail!(dlr_core::Error::InvalidInput(format!(
            "expected a case 1 and a case 2 report, got case {} and case {}",
            r1.case, r2.case
        )));
    }
    let text = comparison_text(&r1, &r2);
    print!("{text}");
    if let Some(path) = &a.out {
        write(path, &text)?;
    }
    Ok(())
}
