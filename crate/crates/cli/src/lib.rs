//! Orchestration and output formatting behind the `tcue` binary. Every
//! number comes from a `tcue_core` call; this crate only schedules the calls
//! and renders their results.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use tcue_core::asymptotics::LemmaCheckReport;
use tcue_core::distances::{ks_distance, w1_between_laws, w1_distance, DistanceReport, Metric};
use tcue_core::exact_law::{ExactLaw, Law, Threshold};
use tcue_core::scaling::{derive_constants, EnsembleParams};
use tcue_core::Error;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    ValidationFailure = 1,
    InvalidArguments = 2,
    NumericalFailure = 3,
}

/// A failure carrying its exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub exit: Exit,
    pub message: String,
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            exit: Exit::InvalidArguments,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            exit: Exit::ValidationFailure,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let exit = match e {
            Error::InvalidParams(_) | Error::Domain { .. } => Exit::InvalidArguments,
            _ => Exit::NumericalFailure,
        };
        Self {
            exit,
            message: e.to_string(),
        }
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

/// One line of `exact-cdf` output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfRecord {
    pub n: u64,
    pub p: u64,
    pub law: Law,
    pub x: f64,
    /// β_n(x) for W, (A_n + B_n x)² for X; clamped to [0, 1].
    pub threshold: f64,
    pub log_cdf: f64,
    pub cdf: f64,
}

pub fn exact_cdf(params: EnsembleParams, law: Law, x: f64) -> Outcome<CdfRecord> {
    let exact = ExactLaw::new(params, law)?;
    let threshold = match exact.threshold(x) {
        Threshold::Below => 0.0,
        Threshold::Inside(t) => t,
        Threshold::Above => 1.0,
    };
    Ok(CdfRecord {
        n: params.n(),
        p: params.p(),
        law,
        x,
        threshold,
        log_cdf: exact.log_cdf(x)?,
        cdf: exact.cdf(x)?,
    })
}

/// Distance between the exact law and the Gumbel law, or between the X and
/// W laws for [`Metric::W1_XW`] (where `law` is ignored).
pub fn distance(params: EnsembleParams, metric: Metric, law: Law) -> Outcome<DistanceReport> {
    let report = match metric {
        Metric::KS => ks_distance(&ExactLaw::new(params, law)?)?,
        Metric::W1 => w1_distance(&ExactLaw::new(params, law)?)?,
        Metric::W1_XW => {
            let w = ExactLaw::new(params, Law::W)?;
            w1_between_laws(&w.with_law(Law::X), &w)?
        }
    };
    Ok(report)
}

pub fn metric_name(metric: Metric) -> &'static str {
    match metric {
        Metric::KS => "ks",
        Metric::W1 => "w1",
        Metric::W1_XW => "w1-xw",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n_list: Vec<u64>,
    pub ratio_list: Vec<f64>,
    pub metrics: Vec<Metric>,
    pub law: Law,
    /// Record wall-clock times; without it the column is `NA` and the output
    /// is reproducible byte for byte.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: u64,
    pub p: u64,
    pub ratio: f64,
    pub metric: Metric,
    pub s_n: f64,
    pub ell2: f64,
    pub value: f64,
    pub leading_refined: f64,
    pub leading_headline: f64,
    pub ratio_refined: f64,
    pub ratio_headline: f64,
    pub wall_time_ms: Option<f64>,
    /// `None` on success, otherwise the error message.
    pub error: Option<String>,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    /// sha256 of the CSV body (header and rows).
    pub sha256: String,
}

/// The fixed columns, then `metric` and `status` appended after them.
pub const SWEEP_COLUMNS: [&str; 12] = [
    "n",
    "p",
    "s_n",
    "ell2",
    "value",
    "leading_refined",
    "leading_headline",
    "ratio_refined",
    "ratio_headline",
    "wall_time_ms",
    "metric",
    "status",
];

/// p = round(c·n), checked to satisfy 1 ≤ p < n.
pub fn derived_p(n: u64, c: f64) -> Outcome<u64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Failure::invalid(format!("ratio must lie in (0, 1), got {c}")));
    }
    let p = (c * n as f64).round() as u64;
    if p == 0 || p >= n {
        return Err(Failure::invalid(format!(
            "ratio {c} gives p = {p} outside [1, n) at n = {n}"
        )));
    }
    Ok(p)
}

fn validate_sweep(config: &SweepConfig) -> Outcome<Vec<(u64, f64, u64)>> {
    if config.n_list.is_empty() {
        return Err(Failure::invalid("empty n list"));
    }
    if config.ratio_list.is_empty() {
        return Err(Failure::invalid("empty ratio list"));
    }
    if config.metrics.is_empty() {
        return Err(Failure::invalid("empty metric list"));
    }
    let mut cells = Vec::new();
    for &n in &config.n_list {
        for &c in &config.ratio_list {
            cells.push((n, c, derived_p(n, c)?));
        }
    }
    Ok(cells)
}

fn sweep_cell(n: u64, c: f64, p: u64, config: &SweepConfig) -> Vec<SweepRow> {
    let params = EnsembleParams::new(n, p);
    let constants = params.as_ref().ok().map(derive_constants);
    config
        .metrics
        .iter()
        .map(|&metric| {
            let start = Instant::now();
            let result = params
                .clone()
                .map_err(Failure::from)
                .and_then(|params| distance(params, metric, config.law));
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            let mut row = SweepRow {
                n,
                p,
                ratio: c,
                metric,
                s_n: f64::NAN,
                ell2: f64::NAN,
                value: f64::NAN,
                leading_refined: f64::NAN,
                leading_headline: f64::NAN,
                ratio_refined: f64::NAN,
                ratio_headline: f64::NAN,
                wall_time_ms: config.timing.then_some(elapsed),
                error: None,
            };
            if let Some(Ok(k)) = &constants {
                row.s_n = k.s_n;
                row.ell2 = k.ell2;
            }
            match result {
                Ok(r) => {
                    row.value = r.value;
                    row.leading_refined = r.leading_refined;
                    row.leading_headline = r.leading_headline;
                    row.ratio_refined = r.ratio_refined;
                    row.ratio_headline = r.ratio_headline;
                }
                Err(e) => row.error = Some(e.message),
            }
            row
        })
        .collect()
}

/// Every (n, c, metric) cell, in parallel over (n, c), ordered by (n, c, metric)
/// as listed in the configuration.
pub fn run_sweep(config: &SweepConfig) -> Outcome<Vec<SweepRow>> {
    let cells = validate_sweep(config)?;
    let rows: Vec<Vec<SweepRow>> = cells.par_iter().map(|&(n, c, p)| sweep_cell(n, c, p, config)).collect();
    Ok(rows.into_iter().flatten().collect())
}

fn csv_field(v: f64) -> String {
    if v.is_nan() {
        "NA".into()
    } else {
        format!("{v}")
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Header, one line per row, then `# sha256 <hex>` over everything before it.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = SWEEP_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let status = match &r.error {
            None => "ok".to_string(),
            Some(msg) => format!("\"error: {}\"", msg.replace('"', "'")),
        };
        let fields = [
            r.n.to_string(),
            r.p.to_string(),
            csv_field(r.s_n),
            csv_field(r.ell2),
            csv_field(r.value),
            csv_field(r.leading_refined),
            csv_field(r.leading_headline),
            csv_field(r.ratio_refined),
            csv_field(r.ratio_headline),
            r.wall_time_ms.map_or("NA".into(), csv_field),
            metric_name(r.metric).to_string(),
            status,
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    let digest = sha256_hex(out.as_bytes());
    let _ = writeln!(out, "# sha256 {digest}");
    out
}

pub fn sweep_output(rows: Vec<SweepRow>) -> SweepOutput {
    let csv = sweep_csv(&rows);
    let body = &csv[..csv.rfind("# sha256").unwrap_or(csv.len())];
    SweepOutput {
        sha256: sha256_hex(body.as_bytes()),
        rows,
    }
}

/// Per-point table and verdict for a lemma check.
pub fn render_report(report: &LemmaCheckReport, show_regime: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "lemma: {:?}", report.lemma_id);
    if let Some(p) = report.params {
        let _ = writeln!(out, "n: {}\np: {}", p.n(), p.p());
    }
    for pt in &report.points {
        let coords: Vec<String> = pt.coords.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = write!(
            out,
            "{}  exact={:e} approx={:e} rel_err={:e} band={:e} {}",
            coords.join(" "),
            pt.exact,
            pt.approx,
            pt.relative_error,
            pt.tolerance_band,
            if pt.passes() { "ok" } else { "FAIL" }
        );
        if show_regime {
            let _ = write!(out, " in_regime={}", pt.in_regime);
        }
        out.push('\n');
    }
    let _ = writeln!(out, "verdict: {}", if report.pass { "pass" } else { "fail" });
    out
}

/// Key-value text for any serializable record, one field per line.
pub fn render_fields<T: Serialize>(record: &T) -> String {
    let value = serde_json::to_value(record).expect("records serialize");
    let mut out = String::new();
    if let serde_json::Value::Object(map) = value {
        for (k, v) in map {
            let text = match v {
                serde_json::Value::String(s) => s,
                serde_json::Value::Null => "NA".into(),
                other => other.to_string(),
            };
            let _ = writeln!(out, "{k}: {text}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_p_bounds() {
        assert_eq!(derived_p(1000, 0.5).unwrap(), 500);
        assert!(derived_p(10, 0.01).is_err());
        assert!(derived_p(10, 0.99).is_err());
        assert!(derived_p(10, 1.0).is_err());
    }

    #[test]
    fn empty_lists_rejected() {
        let config = SweepConfig {
            n_list: vec![],
            ratio_list: vec![0.5],
            metrics: vec![Metric::KS],
            law: Law::W,
            timing: false,
        };
        assert_eq!(run_sweep(&config).unwrap_err().exit, Exit::InvalidArguments);
    }

    #[test]
    fn checksum_covers_body() {
        let csv = sweep_csv(&[]);
        let (body, tail) = csv.split_at(csv.rfind('#').unwrap());
        assert_eq!(tail.trim_end(), format!("# sha256 {}", sha256_hex(body.as_bytes())));
    }
}
