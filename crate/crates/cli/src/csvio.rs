// Copyright 2026 bgl-sff Contributors
// SPDX-License-Identifier: Apache-2.0

//! CSV formats: curve, metrics and trajectory files.
//!
//! Every file starts with a `#` preamble. `# config key = value` lines are the
//! resolved configuration (feeding them back through `--config` reproduces
//! the file); `# meta key = value` lines are provenance. Floats are written
//! with 17 significant digits so files round-trip exactly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bgl_sff::{RampMetrics, SffCurve, TrajectoryRow};

use crate::config::Echo;
use crate::CliError;

pub const CURVE_HEADER: [&str; 4] = ["t", "f_mean", "f_stderr", "n_ok"];
pub const METRICS_HEADER: [&str; 8] = ["parameter", "value", "t_d", "f_d", "t_p", "f_p", "ratio", "warnings"];
pub const TRAJECTORY_HEADER: [&str; 5] = ["t", "fidelity", "purity", "mean_energy", "trace_drift"];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn parse_err(path: &Path, line: Option<u64>, msg: impl std::fmt::Display) -> CliError {
    match line {
        Some(l) => CliError::Parse(format!("{}:{l}: {msg}", path.display())),
        None => CliError::Parse(format!("{}: {msg}", path.display())),
    }
}

/// Writes through a sibling temporary file and renames it into place, so a
/// failed run never leaves a truncated output.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| CliError::Usage(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(path, e));
    }
    Ok(())
}

/// Tracks files written by one command so they can be removed on failure.
#[derive(Debug, Default)]
pub struct OutputSet {
    written: Vec<PathBuf>,
}

impl OutputSet {
    pub fn write(&mut self, path: &Path, contents: &[u8]) -> Result<(), CliError> {
        write_atomic(path, contents)?;
        self.written.push(path.to_path_buf());
        Ok(())
    }

    pub fn rollback(&mut self) {
        for p in self.written.drain(..) {
            let _ = fs::remove_file(p);
        }
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.written
    }
}

fn preamble(kind: &str, config: &Echo, meta: &[(String, String)]) -> String {
    let mut s = format!("# bglsff {kind}\n");
    for (k, v) in config {
        s.push_str(&format!("# config {k} = {v}\n"));
    }
    for (k, v) in meta {
        s.push_str(&format!("# meta {k} = {v}\n"));
    }
    s
}

fn csv_body<R: IntoIterator<Item = Vec<String>>>(header: &[&str], rows: R) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| CliError::Io(format!("csv encoding: {e}"));
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(&r).map_err(wrap)?;
    }
    w.into_inner().map_err(|e| CliError::Io(format!("csv encoding: {e}")))
}

pub fn curve_bytes(curve: &SffCurve<f64>, config: &Echo) -> Result<Vec<u8>, CliError> {
    let mut meta = curve.metadata.clone();
    for (i, msg) in &curve.failures {
        meta.push(("failure".into(), format!("realization {i}: {msg}")));
    }
    let mut out = preamble("curve", config, &meta).into_bytes();
    let rows = (0..curve.len()).map(|i| {
        vec![fmt_f64(curve.times[i]), fmt_f64(curve.mean[i]), fmt_f64(curve.stderr[i]), curve.n_ok.to_string()]
    });
    out.extend(csv_body(&CURVE_HEADER, rows)?);
    Ok(out)
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// One metrics row; `metrics = None` writes empty numeric fields and the error.
#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub parameter: String,
    pub value: Option<f64>,
    pub metrics: Option<RampMetrics<f64>>,
    pub error: Option<String>,
}

impl MetricsRow {
    fn fields(&self) -> Vec<String> {
        let m = self.metrics.as_ref();
        let mut warnings: Vec<String> = m.map(|m| m.warnings.clone()).unwrap_or_default();
        if let Some(e) = &self.error {
            warnings.push(format!("error: {e}"));
        }
        vec![
            self.parameter.clone(),
            opt(self.value),
            opt(m.map(|m| m.t_d)),
            opt(m.map(|m| m.f_d)),
            opt(m.map(|m| m.t_p)),
            opt(m.map(|m| m.f_p)),
            opt(m.map(|m| m.ratio)),
            warnings.join(";"),
        ]
    }
}

pub fn metrics_bytes(rows: &[MetricsRow], config: &Echo, meta: &[(String, String)]) -> Result<Vec<u8>, CliError> {
    let mut out = preamble("metrics", config, meta).into_bytes();
    out.extend(csv_body(&METRICS_HEADER, rows.iter().map(MetricsRow::fields))?);
    Ok(out)
}

pub fn trajectory_bytes(
    rows: &[TrajectoryRow<f64>],
    config: &Echo,
    meta: &[(String, String)],
) -> Result<Vec<u8>, CliError> {
    let mut out = preamble("trajectory", config, meta).into_bytes();
    let rows = rows.iter().map(|r| {
        vec![fmt_f64(r.t), fmt_f64(r.fidelity), fmt_f64(r.purity), fmt_f64(r.mean_energy), fmt_f64(r.trace_drift)]
    });
    out.extend(csv_body(&TRAJECTORY_HEADER, rows)?);
    Ok(out)
}

/// Parsed preamble of any bglsff file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Preamble {
    pub kind: Option<String>,
    pub config: Echo,
    pub meta: Vec<(String, String)>,
}

impl Preamble {
    /// Config lines in config-file syntax, ready for `--config`.
    pub fn config_text(&self) -> String {
        self.config.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn parse_preamble(text: &str) -> Preamble {
    let mut p = Preamble::default();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let body = line[1..].trim();
        if let Some(kind) = body.strip_prefix("bglsff ") {
            p.kind = Some(kind.trim().to_string());
        } else if let Some(rest) = body.strip_prefix("config ") {
            if let Some((k, v)) = rest.split_once('=') {
                p.config.push((k.trim().to_string(), v.trim().to_string()));
            }
        } else if let Some(rest) = body.strip_prefix("meta ") {
            if let Some((k, v)) = rest.split_once('=') {
                p.meta.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
    }
    p
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

type Records = Vec<(Option<u64>, csv::StringRecord)>;

fn read_records(path: &Path, text: &str, header: &[&str]) -> Result<Records, CliError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let got = r.headers().map_err(|e| parse_err(path, e.position().map(|p| p.line()), e))?.clone();
    if got.iter().collect::<Vec<_>>() != header {
        return Err(parse_err(
            path,
            None,
            format!("expected header {:?}, found {:?}", header.join(","), got.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| parse_err(path, e.position().map(|p| p.line()), e))?;
        out.push((rec.position().map(|p| p.line()), rec));
    }
    Ok(out)
}

fn field_f64(path: &Path, line: Option<u64>, rec: &csv::StringRecord, i: usize, name: &str) -> Result<f64, CliError> {
    let s = rec.get(i).ok_or_else(|| parse_err(path, line, format!("missing column {name}")))?;
    s.parse::<f64>().map_err(|_| parse_err(path, line, format!("column {name}: cannot parse {s:?} as a number")))
}

fn field_opt(
    path: &Path,
    line: Option<u64>,
    rec: &csv::StringRecord,
    i: usize,
    name: &str,
) -> Result<Option<f64>, CliError> {
    match rec.get(i) {
        Some("") | None => Ok(None),
        Some(_) => field_f64(path, line, rec, i, name).map(Some),
    }
}

/// Reads a curve file. Times must be strictly increasing.
pub fn read_curve(path: &Path) -> Result<(SffCurve<f64>, Preamble), CliError> {
    let text = read_text(path)?;
    let pre = parse_preamble(&text);
    let recs = read_records(path, &text, &CURVE_HEADER)?;
    if recs.is_empty() {
        return Err(parse_err(path, None, "no data rows"));
    }
    let (mut times, mut mean, mut stderr) = (Vec::new(), Vec::new(), Vec::new());
    let mut n_ok = 0usize;
    for (line, rec) in &recs {
        let t = field_f64(path, *line, rec, 0, "t")?;
        let f = field_f64(path, *line, rec, 1, "f_mean")?;
        let se = field_f64(path, *line, rec, 2, "f_stderr")?;
        let n = rec
            .get(3)
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| parse_err(path, *line, "column n_ok: expected a non-negative integer"))?;
        if !t.is_finite() || !f.is_finite() {
            return Err(parse_err(path, *line, "non-finite t or f_mean"));
        }
        if times.last().is_some_and(|&prev| t <= prev) {
            return Err(parse_err(path, *line, "times must be strictly increasing"));
        }
        times.push(t);
        mean.push(f);
        stderr.push(se);
        n_ok = n;
    }
    let mut curve = SffCurve::from_values(times, mean).map_err(|e| parse_err(path, None, e))?;
    curve.stderr = stderr;
    curve.n_ok = n_ok;
    curve.n_failed = pre.meta.iter().filter(|(k, _)| k == "failure").count();
    curve.metadata = pre.meta.iter().filter(|(k, _)| k != "failure").cloned().collect();
    Ok((curve, pre))
}

pub fn read_metrics(path: &Path) -> Result<(Vec<MetricsRow>, Preamble), CliError> {
    let text = read_text(path)?;
    let pre = parse_preamble(&text);
    let recs = read_records(path, &text, &METRICS_HEADER)?;
    let mut rows = Vec::with_capacity(recs.len());
    for (line, rec) in &recs {
        let ratio = field_opt(path, *line, rec, 6, "ratio")?;
        let warnings: Vec<String> =
            rec.get(7).unwrap_or("").split(';').filter(|s| !s.is_empty()).map(String::from).collect();
        let error = warnings.iter().find_map(|w| w.strip_prefix("error: ").map(String::from));
        let metrics = match ratio {
            Some(ratio) => Some(RampMetrics {
                t_d: field_f64(path, *line, rec, 2, "t_d")?,
                f_d: field_f64(path, *line, rec, 3, "f_d")?,
                t_p: field_f64(path, *line, rec, 4, "t_p")?,
                f_p: field_f64(path, *line, rec, 5, "f_p")?,
                ratio,
                dip_index: 0,
                plateau_index: 0,
                window_decades: f64::NAN,
                epsilon: f64::NAN,
                plateau_source: String::new(),
                warnings: warnings.iter().filter(|w| !w.starts_with("error: ")).cloned().collect(),
            }),
            None => None,
        };
        rows.push(MetricsRow {
            parameter: rec.get(0).unwrap_or("").to_string(),
            value: field_opt(path, *line, rec, 1, "value")?,
            metrics,
            error,
        });
    }
    Ok((rows, pre))
}

/// Header line of the first non-comment row, used to tell file kinds apart.
pub fn sniff_header(path: &Path) -> Result<String, CliError> {
    let text = read_text(path)?;
    text.lines()
        .find(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.trim().to_string())
        .ok_or_else(|| parse_err(path, None, "no header line"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let times = vec![0.1, 0.2, 1.0 / 3.0];
        let mut c = SffCurve::from_values(times, vec![0.9, std::f64::consts::PI / 10.0, 1e-300]).unwrap();
        c.stderr = vec![0.0, 1e-3, 2.5e-17];
        c.n_ok = 7;
        c.metadata = vec![("version".into(), "0.1.0".into())];
        let echo = vec![("beta".to_string(), "5".to_string())];
        write_atomic(&path, &curve_bytes(&c, &echo).unwrap()).unwrap();
        let (back, pre) = read_curve(&path).unwrap();
        assert_eq!(back.times, c.times);
        assert_eq!(back.mean, c.mean);
        assert_eq!(back.stderr, c.stderr);
        assert_eq!(back.n_ok, 7);
        assert_eq!(pre.config, echo);
        assert_eq!(pre.kind.as_deref(), Some("curve"));
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "# bglsff curve\nt,f_mean,f_stderr,n_ok\n0.1,0.5,0,1\n0.2,abc,0,1\n").unwrap();
        let err = read_curve(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains(":4:"), "{err}");
    }

    #[test]
    fn decreasing_times_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "t,f_mean,f_stderr,n_ok\n0.2,0.5,0,1\n0.1,0.4,0,1\n").unwrap();
        assert!(read_curve(&path).is_err());
    }

    #[test]
    fn metrics_round_trip_keeps_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = RampMetrics {
            t_d: 2.0,
            f_d: 0.01,
            t_p: 40.0,
            f_p: 0.03,
            ratio: 20.0,
            dip_index: 3,
            plateau_index: 9,
            window_decades: 0.5,
            epsilon: 0.1,
            plateau_source: "tail".into(),
            warnings: vec!["no_ramp".into()],
        };
        let rows = vec![
            MetricsRow { parameter: "gamma".into(), value: Some(0.0), metrics: Some(m), error: None },
            MetricsRow { parameter: "gamma".into(), value: Some(1.0), metrics: None, error: Some("boom, bad".into()) },
        ];
        write_atomic(&path, &metrics_bytes(&rows, &Echo::new(), &[]).unwrap()).unwrap();
        let (back, _) = read_metrics(&path).unwrap();
        assert_eq!(back[0].metrics.as_ref().unwrap().ratio, 20.0);
        assert_eq!(back[0].metrics.as_ref().unwrap().warnings, vec!["no_ramp".to_string()]);
        assert!(back[1].metrics.is_none());
        assert_eq!(back[1].error.as_deref(), Some("boom, bad"));
    }
}
