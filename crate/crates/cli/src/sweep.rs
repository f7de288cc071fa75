//! Grid evaluation and CSV emission.
//!
//! One sweep produces one table per sensing duration; each table holds one
//! row per grid value per mode, in deterministic (grid, mode) order. A row
//! that fails numerically carries the error message in its last column and
//! leaves the unavailable values empty — the sweep always continues.

use std::io::Write;

use cogcap::effective_capacity::effective_capacity;
use cogcap::sensing::{characterize, SensingParams};
use cogcap::{LinkParams, Mode};

use crate::config::{SweepSpec, SweptParam};

pub const CSV_HEADER: [&str; 11] = [
    "swept",
    "mode",
    "pf",
    "pd",
    "gamma1",
    "gamma2",
    "term_busy",
    "term_idle",
    "term_outage",
    "effcap_bits_s_hz",
    "error",
];

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub swept: f64,
    pub mode: Mode,
    pub pf: Option<f64>,
    pub pd: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub term_busy: Option<f64>,
    pub term_idle: Option<f64>,
    pub term_outage: Option<f64>,
    pub effcap_bits_s_hz: Option<f64>,
    pub error: Option<String>,
}

/// Rows of one sensing duration.
#[derive(Debug, Clone)]
pub struct SweepTable {
    /// Sensing duration of this table; `None` when the sweep iterates over
    /// the sensing duration itself.
    pub sensing_s: Option<f64>,
    pub rows: Vec<SweepRow>,
}

/// Evaluate the whole sweep.
pub fn run_sweep(spec: &SweepSpec) -> Vec<SweepTable> {
    let families: Vec<Option<f64>> = match spec.swept {
        SweptParam::SensingDuration => vec![None],
        _ => spec.sensing_values.iter().copied().map(Some).collect(),
    };
    families
        .into_iter()
        .map(|family| {
            let mut rows = Vec::with_capacity(spec.grid.len() * spec.modes.len());
            for &value in &spec.grid {
                for &mode in &spec.modes {
                    rows.push(evaluate_point(spec, family, value, mode));
                }
            }
            SweepTable {
                sensing_s: family,
                rows,
            }
        })
        .collect()
}

fn evaluate_point(spec: &SweepSpec, family: Option<f64>, value: f64, mode: Mode) -> SweepRow {
    let mut p: LinkParams = spec.base;
    let threshold = match spec.swept {
        SweptParam::Threshold => {
            p.sense_s = family.expect("threshold sweeps carry a sensing family");
            value
        }
        SweptParam::Theta => {
            p.sense_s = family.expect("theta sweeps carry a sensing family");
            p.qos_exponent = value;
            spec.threshold
        }
        SweptParam::SensingDuration => {
            p.sense_s = value;
            spec.threshold
        }
    };

    let mut row = SweepRow {
        swept: value,
        mode,
        pf: None,
        pd: None,
        gamma1: None,
        gamma2: None,
        term_busy: None,
        term_idle: None,
        term_outage: None,
        effcap_bits_s_hz: None,
        error: None,
    };

    let sc = match characterize(&SensingParams::from_link(&p, threshold)) {
        Ok(sc) => sc,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.pf = Some(sc.p_false_alarm);
    row.pd = Some(sc.p_detect);

    match effective_capacity(&p, &sc, mode) {
        Ok(result) => {
            row.gamma1 = result.policy.gamma1();
            row.gamma2 = result.policy.gamma2();
            row.term_busy = Some(result.terms.busy);
            row.term_idle = Some(result.terms.idle);
            row.term_outage = Some(result.terms.outage);
            row.effcap_bits_s_hz = Some(result.r_e);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// 17 significant decimal digits: every `f64` round-trips exactly.
fn format_value(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.16e}"),
        None => String::new(),
    }
}

/// Write one table as an RFC-4180 CSV with the fixed column set.
pub fn write_csv<W: Write>(writer: W, table: &SweepTable) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(CSV_HEADER)?;
    for row in &table.rows {
        out.write_record([
            format_value(Some(row.swept)),
            row.mode.to_string(),
            format_value(row.pf),
            format_value(row.pd),
            format_value(row.gamma1),
            format_value(row.gamma2),
            format_value(row.term_busy),
            format_value(row.term_idle),
            format_value(row.term_outage),
            format_value(row.effcap_bits_s_hz),
            row.error.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Parse a CSV produced by [`write_csv`] back into rows.
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>, String> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect::<Vec<_>>();
    if header != CSV_HEADER {
        return Err(format!("unexpected header: {header:?}"));
    }
    let field = |s: &str| -> Result<Option<f64>, String> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse::<f64>().map(Some).map_err(|e| format!("{s}: {e}"))
        }
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record.map_err(|e| e.to_string())?;
        rows.push(SweepRow {
            swept: field(&r[0])?.ok_or("missing swept value")?,
            mode: match &r[1] {
                "optimal" => Mode::Optimal,
                "fixed" => Mode::Fixed,
                other => return Err(format!("unknown mode '{other}'")),
            },
            pf: field(&r[2])?,
            pd: field(&r[3])?,
            gamma1: field(&r[4])?,
            gamma2: field(&r[5])?,
            term_busy: field(&r[6])?,
            term_idle: field(&r[7])?,
            term_outage: field(&r[8])?,
            effcap_bits_s_hz: field(&r[9])?,
            error: if r[10].is_empty() {
                None
            } else {
                Some(r[10].to_string())
            },
        });
    }
    Ok(rows)
}
