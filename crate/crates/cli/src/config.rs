//! Key = value sweep configuration.
//!
//! A configuration is UTF-8 text with one `key = value` pair per line and
//! `#` comments. Every key has a documented default, so the empty string is
//! a valid configuration; unknown or duplicate keys are rejected, and every
//! constraint violation names the offending key and value. SNR inputs are
//! in dB and converted to linear power budgets here — the core library is
//! strictly linear scale.

use std::collections::HashMap;
use std::path::PathBuf;

use cogcap::{LinkParams, Mode};

/// Which link parameter the sweep iterates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptParam {
    Threshold,
    Theta,
    SensingDuration,
}

impl std::fmt::Display for SweptParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweptParam::Threshold => write!(f, "threshold"),
            SweptParam::Theta => write!(f, "theta"),
            SweptParam::SensingDuration => write!(f, "sensing_duration"),
        }
    }
}

/// A fully validated sweep description.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub swept: SweptParam,
    /// Strictly increasing grid of swept values.
    pub grid: Vec<f64>,
    /// Link parameters at the first sensing duration; per-point overrides
    /// are applied by the sweep engine.
    pub base: LinkParams,
    /// Detection threshold used when `swept` is not the threshold.
    pub threshold: f64,
    /// Sensing durations, one output table each (single entry unless the
    /// sweep iterates over something else).
    pub sensing_values: Vec<f64>,
    pub modes: Vec<Mode>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value', got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("unknown key '{key}'")]
    UnknownKey { key: String },
    #[error("duplicate key '{key}'")]
    DuplicateKey { key: String },
    #[error("key '{key}' = '{value}': {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("{0}")]
    Constraint(String),
}

const KNOWN_KEYS: &[&str] = &[
    "sweep",
    "grid",
    "modes",
    "sensing_s",
    "threshold",
    "theta",
    "bandwidth_hz",
    "frame_s",
    "prior_busy",
    "noise_power",
    "primary_power",
    "fading_mean",
    "snr1_db",
    "snr4_db",
    "power_busy_w",
    "power_idle_w",
    "out",
];

fn invalid(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.into(),
        value: value.into(),
        reason: reason.into(),
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| invalid(key, value, "not a finite number"))
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|part| parse_f64(key, part.trim()))
        .collect()
}

/// Grid syntaxes: `lin:lo:hi:n`, `log:lo:hi:n`, or a comma-separated list.
fn parse_grid(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    let ranged = |parts: &[&str], log: bool| -> Result<Vec<f64>, ConfigError> {
        if parts.len() != 3 {
            return Err(invalid(key, value, "expected lo:hi:count"));
        }
        let lo = parse_f64(key, parts[0])?;
        let hi = parse_f64(key, parts[1])?;
        let n: usize = parts[2]
            .parse()
            .ok()
            .filter(|&n| n >= 2)
            .ok_or_else(|| invalid(key, value, "count must be an integer >= 2"))?;
        if !(lo < hi) {
            return Err(invalid(key, value, "lo must be smaller than hi"));
        }
        if log && !(lo > 0.0) {
            return Err(invalid(key, value, "log grids need lo > 0"));
        }
        Ok((0..n)
            .map(|i| {
                let f = i as f64 / (n - 1) as f64;
                if log {
                    lo * (hi / lo).powf(f)
                } else {
                    lo + (hi - lo) * f
                }
            })
            .collect())
    };
    let grid = if let Some(rest) = value.strip_prefix("lin:") {
        ranged(&rest.split(':').collect::<Vec<_>>(), false)?
    } else if let Some(rest) = value.strip_prefix("log:") {
        ranged(&rest.split(':').collect::<Vec<_>>(), true)?
    } else {
        parse_f64_list(key, value)?
    };
    if grid.is_empty() {
        return Err(invalid(key, value, "grid must not be empty"));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(invalid(key, value, "grid must be strictly increasing"));
    }
    Ok(grid)
}

/// Parse and validate a configuration.
pub fn parse_config(text: &str) -> Result<SweepSpec, ConfigError> {
    let mut entries: HashMap<String, String> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: idx + 1,
                text: line.to_string(),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { key });
        }
        if entries.insert(key.clone(), value).is_some() {
            return Err(ConfigError::DuplicateKey { key });
        }
    }
    build_spec(&entries)
}

fn build_spec(entries: &HashMap<String, String>) -> Result<SweepSpec, ConfigError> {
    let get = |key: &str| entries.get(key).map(String::as_str);

    let swept = match get("sweep").unwrap_or("threshold") {
        "threshold" => SweptParam::Threshold,
        "theta" => SweptParam::Theta,
        "sensing_duration" => SweptParam::SensingDuration,
        other => {
            return Err(invalid(
                "sweep",
                other,
                "expected threshold, theta or sensing_duration",
            ))
        }
    };
    let grid = parse_grid("grid", get("grid").unwrap_or("lin:0.5:3.0:26"))?;

    let mut modes = Vec::new();
    for part in get("modes").unwrap_or("optimal").split(',') {
        let mode = match part.trim() {
            "optimal" => Mode::Optimal,
            "fixed" => Mode::Fixed,
            other => return Err(invalid("modes", other, "expected optimal or fixed")),
        };
        if modes.contains(&mode) {
            return Err(invalid("modes", part.trim(), "listed twice"));
        }
        modes.push(mode);
    }

    let bandwidth_hz = parse_f64("bandwidth_hz", get("bandwidth_hz").unwrap_or("1e4"))?;
    let frame_s = parse_f64("frame_s", get("frame_s").unwrap_or("0.1"))?;
    let prior_busy = parse_f64("prior_busy", get("prior_busy").unwrap_or("0.1"))?;
    let noise_power = parse_f64("noise_power", get("noise_power").unwrap_or("1.0"))?;
    let primary_power = parse_f64("primary_power", get("primary_power").unwrap_or("1.0"))?;
    let fading_mean = parse_f64("fading_mean", get("fading_mean").unwrap_or("1.0"))?;
    let theta = parse_f64("theta", get("theta").unwrap_or("0.01"))?;
    let threshold = parse_f64("threshold", get("threshold").unwrap_or("1.4"))?;
    let sensing_values = parse_f64_list("sensing_s", get("sensing_s").unwrap_or("0.01"))?;

    for (key, value) in [
        ("bandwidth_hz", bandwidth_hz),
        ("frame_s", frame_s),
        ("noise_power", noise_power),
        ("fading_mean", fading_mean),
        ("theta", theta),
    ] {
        if !(value > 0.0) {
            return Err(invalid(key, &value.to_string(), "must be positive"));
        }
    }
    if !(0.0..=1.0).contains(&prior_busy) {
        return Err(invalid(
            "prior_busy",
            &prior_busy.to_string(),
            "must lie in [0, 1]",
        ));
    }
    if primary_power < 0.0 {
        return Err(invalid(
            "primary_power",
            &primary_power.to_string(),
            "must be nonnegative",
        ));
    }
    if threshold < 0.0 {
        return Err(invalid(
            "threshold",
            &threshold.to_string(),
            "must be nonnegative",
        ));
    }

    // power budgets, either via the dB operating points or directly
    let avg_power_busy = match (get("snr1_db"), get("power_busy_w")) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::Constraint(
                "snr1_db and power_busy_w are mutually exclusive".into(),
            ))
        }
        (None, Some(v)) => parse_f64("power_busy_w", v)?,
        (snr_db, None) => {
            let db = parse_f64("snr1_db", snr_db.unwrap_or("0"))?;
            10f64.powf(db / 10.0) * bandwidth_hz * (noise_power + primary_power)
        }
    };
    let avg_power_idle = match (get("snr4_db"), get("power_idle_w")) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::Constraint(
                "snr4_db and power_idle_w are mutually exclusive".into(),
            ))
        }
        (None, Some(v)) => parse_f64("power_idle_w", v)?,
        (snr_db, None) => {
            let db = parse_f64("snr4_db", snr_db.unwrap_or("10"))?;
            10f64.powf(db / 10.0) * bandwidth_hz * noise_power
        }
    };
    if avg_power_busy > avg_power_idle {
        return Err(ConfigError::Constraint(format!(
            "busy-state budget ({avg_power_busy} W) must not exceed the idle-state budget \
             ({avg_power_idle} W); check snr1_db/snr4_db or power_busy_w/power_idle_w"
        )));
    }

    // sensing durations against the frame, naming the keys involved
    if sensing_values.is_empty() {
        return Err(invalid("sensing_s", "", "needs at least one duration"));
    }
    if swept == SweptParam::SensingDuration {
        if get("sensing_s").is_some() {
            return Err(ConfigError::Constraint(
                "sensing_s must not be set when sweep = sensing_duration; the grid provides it"
                    .into(),
            ));
        }
        for &v in &grid {
            if !(v > 0.0 && v < frame_s) {
                return Err(ConfigError::Constraint(format!(
                    "grid value {v} violates 0 < sensing_s < frame_s (frame_s = {frame_s})"
                )));
            }
        }
    } else {
        for &n in &sensing_values {
            if !(n > 0.0 && n < frame_s) {
                return Err(ConfigError::Constraint(format!(
                    "sensing_s = {n} violates 0 < sensing_s < frame_s (frame_s = {frame_s})"
                )));
            }
        }
    }
    if swept == SweptParam::Theta && grid[0] <= 0.0 {
        return Err(ConfigError::Constraint(
            "theta grid values must be positive".into(),
        ));
    }
    if swept == SweptParam::Threshold && grid[0] < 0.0 {
        return Err(ConfigError::Constraint(
            "threshold grid values must be nonnegative".into(),
        ));
    }

    let base = LinkParams {
        bandwidth_hz,
        frame_s,
        sense_s: sensing_values[0],
        prior_busy,
        noise_power,
        primary_power,
        fading_mean,
        avg_power_busy,
        avg_power_idle,
        qos_exponent: theta,
    };
    if swept != SweptParam::SensingDuration {
        base.validate()
            .map_err(|e| ConfigError::Constraint(e.to_string()))?;
    }

    Ok(SweepSpec {
        swept,
        grid,
        base,
        threshold,
        sensing_values,
        modes,
        output: get("out").map(PathBuf::from),
    })
}
