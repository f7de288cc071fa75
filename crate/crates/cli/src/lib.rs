//! Sweep engine behind the `cogcap` binary: configuration parsing, built-in
//! presets, grid evaluation and CSV emission.

// validation guards are written `!(x > 0.0)` on purpose: the negation also
// rejects NaN, which `x <= 0.0` would let through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod presets;
pub mod sweep;

pub use config::{parse_config, ConfigError, SweepSpec, SweptParam};
pub use presets::{load_preset, preset_text, PRESET_NAMES};
pub use sweep::{parse_csv, run_sweep, write_csv, SweepRow, SweepTable, CSV_HEADER};
