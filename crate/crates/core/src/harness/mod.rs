//! Script language, runner and workload generators.

pub mod families;
pub mod gen;
pub mod run;
pub mod script;
pub mod stats;

pub use families::{poly_script, swap_script, Family};
pub use gen::{gen_random_script, GenParams};
pub use run::{run, run_mode, RunError, RunMode, RunOptions, RunReport};
pub use script::{parse_script, parse_term, Command, ParseError, Script};
pub use stats::{emit_stats_csv, StatsRow, CSV_HEADER};
