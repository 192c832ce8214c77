//! Static SVG line chart of actual and predicted DLR.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use chrono::{DateTime, Utc};
use dlr_core::dataset::{format_timestamp, parse_timestamp};
use dlr_core::Error;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 72.0;
const COLORS: [&str; 3] = ["#222222", "#1f77b4", "#d62728"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(DateTime<Utc>, f64)>,
}

/// Reads `timestamp` plus `predicted_dlr_a` (or, failing that, `dlr_a`).
pub(crate) fn read_series(path: &Path, label: &str) -> Result<Series> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_series(&text, label).with_context(|| format!("series {}", path.display()))
}

fn parse_series(text: &str, label: &str) -> Result<Series, Error> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Header(e.to_string()))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let ts_col = find("timestamp").ok_or_else(|| Error::Header("missing column timestamp".into()))?;
    let val_col = find("predicted_dlr_a")
        .or_else(|| find("dlr_a"))
        .ok_or_else(|| Error::Header("missing column predicted_dlr_a or dlr_a".into()))?;

    let mut points: Vec<(DateTime<Utc>, f64)> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |msg: String| Error::Parse { line, msg };
        let ts = parse_timestamp(&row[ts_col])
            .ok_or_else(|| bad(format!("`{}` is not an ISO-8601 UTC timestamp", &row[ts_col])))?;
        let v: f64 = row[val_col]
            .parse()
            .map_err(|_| bad(format!("`{}` is not a number", &row[val_col])))?;
        if !v.is_finite() {
            return Err(bad(format!("non-finite value `{}`", &row[val_col])));
        }
        if let Some((prev, _)) = points.last() {
            if ts <= *prev {
                return Err(Error::Ordering {
                    line,
                    timestamp: format_timestamp(&ts),
                });
            }
        }
        points.push((ts, v));
    }
    if points.is_empty() {
        return Err(Error::InvalidInput("series has no rows".into()));
    }
    Ok(Series {
        label: label.to_string(),
        points,
    })
}

/// Every predicted timestamp must be an actual timestamp or the single
/// step past the last one (the out-of-sample forecast).
fn check_alignment(actual: &Series, pred: &Series) -> Result<(), Error> {
    let grid: Vec<DateTime<Utc>> = actual.points.iter().map(|p| p.0).collect();
    if grid.len() < 2 {
        return Err(Error::InvalidInput("actual series needs at least 2 rows".into()));
    }
    let next = grid[grid.len() - 1] + (grid[1] - grid[0]);
    for (i, (t, _)) in pred.points.iter().enumerate() {
        if *t != next && grid.binary_search(t).is_err() {
            return Err(Error::InvalidInput(format!(
                "timestamp misalignment: `{}` row {} at {} is not on the actual series grid",
                pred.label,
                i + 1,
                format_timestamp(t)
            )));
        }
    }
    Ok(())
}

/// 1, 2 or 5 times a power of ten, at least `raw`.
fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders the first series as the actual DLR and the rest (one or two) as
/// predictions. Output depends only on the inputs.
pub fn render_svg(series: &[Series]) -> Result<String, Error> {
    if !(2..=3).contains(&series.len()) {
        return Err(Error::InvalidInput(format!(
            "plot takes actual plus one or two predicted series, got {} series",
            series.len()
        )));
    }
    for pred in &series[1..] {
        check_alignment(&series[0], pred)?;
    }

    let all = || series.iter().flat_map(|s| s.points.iter());
    let t0 = all().map(|p| p.0).min().expect("non-empty");
    let t1 = all().map(|p| p.0).max().expect("non-empty");
    let mut lo = all().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let mut hi = all().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let step = nice_step((hi - lo) / 5.0);
    let y_lo = (lo / step).floor() * step;
    let y_hi = (hi / step).ceil() * step;
    let span_s = ((t1 - t0).num_seconds() as f64).max(1.0);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x_of = |t: DateTime<Utc>| LEFT + plot_w * (t - t0).num_seconds() as f64 / span_s;
    let y_of = |v: f64| TOP + plot_h * (1.0 - (v - y_lo) / (y_hi - y_lo));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="16">Actual vs predicted DLR</text>"#,
        LEFT + plot_w / 2.0
    );

    // Grid and y ticks.
    let n_y = ((y_hi - y_lo) / step).round() as usize;
    for k in 0..=n_y {
        let v = y_lo + k as f64 * step;
        let y = y_of(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            format_tick(v, step)
        );
    }
    // x ticks.
    let n_x = 6;
    for k in 0..=n_x {
        let secs = (span_s * k as f64 / n_x as f64).round() as i64;
        let t = t0 + chrono::Duration::seconds(secs);
        let x = x_of(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#888888"/>"##,
            TOP + plot_h,
            TOP + plot_h + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            t.format("%m-%d %H:%M")
        );
    }
    // Axes and labels.
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#444444"/>"##
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Time (UTC)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 18.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">DLR (A)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|(t, v)| format!("{:.2},{:.2}", x_of(*t), y_of(*v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            COLORS[i],
            pts.join(" ")
        );
    }

    // Legend.
    let lx = LEFT + plot_w - 180.0;
    for (i, ser) in series.iter().enumerate() {
        let ly = TOP + 16.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="3"/>"#,
            lx + 24.0,
            COLORS[i]
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn format_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
    let v = if v.abs() < step * 1e-9 { 0.0 } else { v };
    format!("{v:.decimals$}")
}
