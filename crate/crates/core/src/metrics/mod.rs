//! Reward statistics and report assembly.

mod report;
mod stats;

pub use report::{build_report, ComparisonRow, ReportError, ReportOptions, ReportSummary};
pub use stats::{
    mean, min_max_normalize, nearest_rank, normalized_diff_of_means, pearson, pearson_leave_one_out,
    running_average, std_dev, winsor_bounds, winsorize, StatsError,
};
