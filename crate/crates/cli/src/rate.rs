//! Filling `dlr_a` from weather columns.
//!
//! Input columns are found by header name, so any CSV carrying
//! `timestamp`, `ambient_temp_c`, `wind_speed_ms`, `humidity_pct` and
//! `irradiance_wm2` works. Other columns pass through untouched. An existing
//! `dlr_a` column is overwritten in place; otherwise one is appended.

use dlr_core::dataset::parse_timestamp;
use dlr_core::thermal::solve_ampacity;
use dlr_core::{ConductorSpec, Error, WeatherPoint};

const WEATHER_COLUMNS: [&str; 4] = ["ambient_temp_c", "wind_speed_ms", "humidity_pct", "irradiance_wm2"];

pub(crate) struct Rated {
    pub text: String,
    pub rows: usize,
}

pub(crate) fn rate_csv(text: &str, spec: &ConductorSpec) -> Result<Rated, Error> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let mut headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Header(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let missing: Vec<&str> = std::iter::once("timestamp")
        .chain(WEATHER_COLUMNS)
        .filter(|c| find(c).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Header(format!("missing column(s) {}", missing.join(", "))));
    }
    let ts_col = find("timestamp").expect("checked");
    let cols: Vec<usize> = WEATHER_COLUMNS.iter().map(|c| find(c).expect("checked")).collect();
    let dlr_col = match find("dlr_a") {
        Some(i) => i,
        None => {
            headers.push("dlr_a".into());
            headers.len() - 1
        }
    };

    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidInput(format!("csv output: {e}"));
    writer.write_record(&headers).map_err(csv_err)?;

    let mut rows = 0;
    for (index, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |msg: String| Error::Parse { line, msg };
        if parse_timestamp(&row[ts_col]).is_none() {
            return Err(bad(format!("`{}` is not an ISO-8601 UTC timestamp", &row[ts_col])));
        }
        let mut v = [0.0; 4];
        for (slot, &c) in v.iter_mut().zip(&cols) {
            *slot = row[c]
                .parse()
                .map_err(|_| bad(format!("column {}: `{}` is not a number", headers[c], &row[c])))?;
        }
        let w = WeatherPoint {
            ambient_temp_c: v[0],
            wind_speed_ms: v[1],
            humidity_pct: v[2],
            irradiance_wm2: v[3],
        };
        w.validate().map_err(|e| bad(e.to_string()))?;
        let amps = solve_ampacity(spec, &w).map_err(|e| Error::Timestep {
            index,
            source: Box::new(e),
        })?;
        let mut out: Vec<String> = row.iter().map(str::to_string).collect();
        let value = amps.to_string();
        if dlr_col < out.len() {
            out[dlr_col] = value;
        } else {
            out.push(value);
        }
        writer.write_record(&out).map_err(csv_err)?;
        rows += 1;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv output: {e}")))?;
    Ok(Rated {
        text: String::from_utf8(bytes).expect("csv writer emits the utf-8 it was given"),
        rows,
    })
}
