mod gen_synth;
mod optimize;
mod report;
mod simulate;
mod verify;

pub use gen_synth::gen_synth;
pub use optimize::{optimize, OptimizeRow};
pub use report::{report, ReportRow};
pub use simulate::{simulate, write_summary, SummaryRow};
pub use verify::{verify, CheckLine, VerifyParams};
