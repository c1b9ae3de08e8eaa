//! Scenario files, closed-loop runs, batch suites, logs and metrics.

mod log;
mod metrics;
mod run;
mod scenario;
mod suites;
mod trajectory;

pub use log::{read_csv, write_csv, LogRow, CSV_COLUMNS};
pub use metrics::{
    aggregate, aggregate_by_method, summary_csv, summary_table, ImpactMetrics, MetricsReport, RunFlags, SolveSummary,
    Stat, SummaryRow, SUMMARY_COLUMNS,
};
pub use run::{run_scenario, run_suite, PLANNER_PERIOD, RECOVERY_BAND, SIM_STEP};
pub use scenario::{InitialState, LoadError, LocalStep, PlantBlock, ReferenceBlock, ScenarioSpec, SuccessThresholds};
pub use suites::{
    arm_failure_waypoints, expand_scenarios, generate_arm_failure_suite, generate_control_payload_suite,
    generate_impact_suite, generate_static_pose_suite, generate_trajectory_suite, Suite, SuiteOptions, PAYLOAD_MASSES,
    PAYLOAD_STEPS,
};
pub use trajectory::{generate_reference_trajectory, TrajectoryKind, TrajectoryParams};
