use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Planner timing and convergence over one run. Times are informational.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveSummary {
    pub ticks: usize,
    pub mean_iterations: f64,
    pub nonconverged: usize,
    pub clamped: usize,
    pub mean_time_ms: f64,
    pub max_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunFlags {
    /// Controller steps with at least one clipped joint torque.
    pub saturated_steps: usize,
    pub workspace_violation: bool,
    pub adaptation_capped: bool,
    /// Error that stopped the run early.
    pub error: Option<String>,
}

/// Response to an impulse on θ1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpactMetrics {
    /// Start and end of the pulse, s.
    pub window: [f64; 2],
    /// Largest |e_θ1| after the pulse starts, rad.
    pub peak: f64,
    /// Largest error past the reference on the far side, rad.
    pub overshoot: f64,
    /// Time from the end of the pulse until |e_θ1| stays below the band, s.
    pub recovery_time: Option<f64>,
}

/// Outcome of one scenario.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub name: String,
    pub planner: Option<String>,
    pub controller: Option<String>,
    pub success: bool,
    /// Final cart error in the reference frame, mm, mm, degrees.
    pub e_x_mm: f64,
    pub e_y_mm: f64,
    pub e_theta_deg: f64,
    /// RMS of the per-step tracking error.
    pub rmse: f64,
    pub max_error: f64,
    /// Per-channel RMS error of `(θ1, θ2, R)`.
    pub local_rmse: [f64; 3],
    /// Per-channel mean |error| over the steady windows.
    pub local_steady: [f64; 3],
    pub impact: Option<ImpactMetrics>,
    pub steps: usize,
    /// Per-step tracking error: cart position error in m with a planner,
    /// |e_θ1| in rad without.
    pub error_series: Vec<f64>,
    pub solve: SolveSummary,
    pub flags: RunFlags,
}

impl MetricsReport {
    /// Variant label: planner, controller or both.
    pub fn label(&self) -> String {
        match (&self.planner, &self.controller) {
            (Some(p), Some(c)) => format!("{p}+{c}"),
            (Some(p), None) => p.clone(),
            (None, Some(c)) => c.clone(),
            (None, None) => String::new(),
        }
    }

    /// Copy without the per-step series, for compact reports.
    pub fn without_series(&self) -> Self {
        Self {
            error_series: Vec::new(),
            ..self.clone()
        }
    }
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

/// One row of the comparison table; errors are absolute values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub runs: usize,
    pub success_pct: f64,
    pub e_x_mm: Stat,
    pub e_y_mm: Stat,
    pub e_theta_deg: Stat,
    pub rmse: Stat,
    pub max_error: Stat,
}

pub const SUMMARY_COLUMNS: [&str; 13] = [
    "method",
    "runs",
    "success_pct",
    "e_x_mean_mm",
    "e_x_std_mm",
    "e_y_mean_mm",
    "e_y_std_mm",
    "e_theta_mean_deg",
    "e_theta_std_deg",
    "rmse_mean",
    "rmse_std",
    "max_error_mean",
    "max_error_std",
];

/// Summarizes reports of one method. Returns `None` for an empty slice.
pub fn aggregate(reports: &[MetricsReport]) -> Option<SummaryRow> {
    let first = reports.first()?;
    let col = |f: fn(&MetricsReport) -> f64| Stat::of(&reports.iter().map(f).collect::<Vec<_>>());
    let wins = reports.iter().filter(|r| r.success).count();
    Some(SummaryRow {
        method: first.label(),
        runs: reports.len(),
        success_pct: 100.0 * wins as f64 / reports.len() as f64,
        e_x_mm: col(|r| r.e_x_mm.abs()),
        e_y_mm: col(|r| r.e_y_mm.abs()),
        e_theta_deg: col(|r| r.e_theta_deg.abs()),
        rmse: col(|r| r.rmse),
        max_error: col(|r| r.max_error),
    })
}

/// Groups reports by [`MetricsReport::label`] in first-seen order and
/// aggregates each group.
pub fn aggregate_by_method(reports: &[MetricsReport]) -> Vec<SummaryRow> {
    let mut labels: Vec<String> = Vec::new();
    for r in reports {
        let l = r.label();
        if !labels.contains(&l) {
            labels.push(l);
        }
    }
    labels
        .iter()
        .filter_map(|l| {
            let group: Vec<MetricsReport> = reports.iter().filter(|r| &r.label() == l).cloned().collect();
            aggregate(&group)
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = SUMMARY_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.runs,
            r.success_pct,
            r.e_x_mm.mean,
            r.e_x_mm.std,
            r.e_y_mm.mean,
            r.e_y_mm.std,
            r.e_theta_deg.mean,
            r.e_theta_deg.std,
            r.rmse.mean,
            r.rmse.std,
            r.max_error.mean,
            r.max_error.std
        );
    }
    out
}

/// Fixed-width comparison table for terminals.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<12} {:>5} {:>10} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
        "method", "runs", "success%", "e_x av", "e_x std", "e_y av", "e_y std", "e_th av", "e_th std", "rmse"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<12} {:>5} {:>10.1} {:>9.2} {:>9.2} {:>9.2} {:>9.2} {:>9.2} {:>9.2} {:>9.4}",
            r.method,
            r.runs,
            r.success_pct,
            r.e_x_mm.mean,
            r.e_x_mm.std,
            r.e_y_mm.mean,
            r.e_y_mm.std,
            r.e_theta_deg.mean,
            r.e_theta_deg.std,
            r.rmse.mean
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn report(success: bool, e_y: f64) -> MetricsReport {
        MetricsReport {
            planner: Some("lf".into()),
            success,
            e_y_mm: e_y,
            ..Default::default()
        }
    }

    #[test]
    fn single_success_is_full_rate_with_zero_spread() {
        let row = aggregate(&[report(true, 12.0)]).unwrap();
        assert_eq!(row.success_pct, 100.0);
        assert_eq!(row.e_y_mm, Stat { mean: 12.0, std: 0.0 });
        assert!(aggregate(&[]).is_none());
    }

    #[test]
    fn pair_statistics_by_hand() {
        // |10|, |-30| → mean 20, population std 10
        let row = aggregate(&[report(true, 10.0), report(false, -30.0)]).unwrap();
        assert_eq!(row.success_pct, 50.0);
        assert_abs_diff_eq!(row.e_y_mm.mean, 20.0, epsilon = 1e-12);
        assert_abs_diff_eq!(row.e_y_mm.std, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn grouping_keeps_first_seen_order() {
        let mut b = report(true, 1.0);
        b.planner = Some("nmpc".into());
        let rows = aggregate_by_method(&[report(true, 1.0), b, report(false, 3.0)]);
        assert_eq!(
            rows.iter().map(|r| r.method.as_str()).collect::<Vec<_>>(),
            ["lf", "nmpc"]
        );
        assert_eq!(rows[0].runs, 2);
    }

    #[test]
    fn table_shaped_outputs() {
        let rows = aggregate_by_method(&[report(true, 1.0)]);
        let csv = summary_csv(&rows);
        assert_eq!(csv.lines().next().unwrap(), SUMMARY_COLUMNS.join(","));
        assert_eq!(csv.lines().count(), 2);
        let table = summary_table(&rows);
        assert!(table.starts_with("method"));
        assert!(table.contains("100.0"));
    }
}
