//! Session records, the two-group comparison report and the live score feed.

mod comparison;
mod export;
mod live;
mod session;

pub use comparison::{
    build_comparison, compare_timings, Cell, ComCells, ComSummary, ComparisonConfig, ComparisonReport, DegenerateGroup,
    GroupCells, GroupLabels, SectionArea, TableRow, TimingCells, TimingComparison, TlxComparison, REPORT_FORMAT,
    REPORT_VERSION,
};
pub use export::{read_timing_csv, read_tlx_csv, write_table_csv, write_timing_boxplots, write_tlx_table, TlxSheet};
pub use live::{live_scores, LiveScales, LiveScorer, PanelEntry, ScoreEvent};
pub use session::{
    session_aggregates, summarize_tlx, MeanStd, NasaTlxRecord, SessionTiming, TlxSummary, TIMING_TOL, TLX_SCALES,
};

/// JSON Schema of [`ComparisonReport`].
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");
