//! Campaign generation, lockstep execution against fault-free twins, metrics
//! and reports.

pub mod config;
pub mod generate;
pub mod metrics;
pub mod report;
pub mod run;

pub use config::{default_library, CampaignConfig, CampaignSection, GuidedContext, LibraryEntry, VisionMode};
pub use generate::{filter_experiments, generate_campaign, per_scenario_counts, Experiment};
pub use metrics::{compare_guided_random, compute_metrics, rate, CampaignMetrics, ComparisonReport, RateSummary};
pub use report::{emit_reports, load_events, parse_events};
pub use run::{run_campaign, run_experiment, run_twin, RunLog, RunRecord, TickRecord, TwinTrace};
