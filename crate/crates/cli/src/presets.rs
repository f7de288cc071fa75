//! Built-in sweep presets, compiled in from the `presets/` directory at the
//! repository root.

use crate::config::{parse_config, ConfigError, SweepSpec};

pub const PRESET_NAMES: [&str; 3] = ["fig2", "fig3", "fig4"];

/// Raw configuration text of a preset.
pub fn preset_text(name: &str) -> Option<&'static str> {
    match name {
        "fig2" => Some(include_str!("../../../presets/fig2.conf")),
        "fig3" => Some(include_str!("../../../presets/fig3.conf")),
        "fig4" => Some(include_str!("../../../presets/fig4.conf")),
        _ => None,
    }
}

/// Parse a preset into a validated sweep.
pub fn load_preset(name: &str) -> Result<SweepSpec, ConfigError> {
    let text = preset_text(name).ok_or_else(|| {
        ConfigError::Constraint(format!(
            "unknown preset '{name}', expected one of {PRESET_NAMES:?}"
        ))
    })?;
    parse_config(text)
}
