//! RFC-4180 CSV output for experiment results.

use std::io::Write;
use std::path::Path;

use super::ResultRow;
use crate::error::Result;
use crate::util::fmt_sig;

/// Header order is part of the file format; `wall_time_ms` is reserved and
/// always empty so that reruns of the same config are byte-identical.
pub const CSV_COLUMNS: [&str; 17] = [
    "env_name",
    "env_seed",
    "planner",
    "antireward_kind",
    "observer",
    "threshold_frac",
    "e_min",
    "achieved_return",
    "achieved_entropy_or_antireturn",
    "lambda_star",
    "irl_rollout_return",
    "irl_rollout_ratio",
    "pearson",
    "epic",
    "ordering_consistency",
    "wall_time_ms",
    "error",
];

const FLOAT_DIGITS: usize = 10;

fn escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') || field.contains('\r') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| fmt_sig(v, FLOAT_DIGITS)).unwrap_or_default()
}

pub fn results_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    out.push_str(&CSV_COLUMNS.join(","));
    out.push('\n');
    for r in rows {
        let fields = [
            escape(&r.env_name),
            r.env_seed.to_string(),
            escape(&r.planner),
            escape(&r.antireward_kind),
            escape(&r.observer),
            fmt_sig(r.threshold_frac, FLOAT_DIGITS),
            opt(r.e_min),
            opt(r.achieved_return),
            opt(r.achieved_entropy_or_antireturn),
            opt(r.lambda_star),
            opt(r.irl_rollout_return),
            opt(r.irl_rollout_ratio),
            opt(r.pearson),
            opt(r.epic),
            opt(r.ordering_consistency),
            String::new(),
            escape(r.error.as_deref().unwrap_or("")),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_results(rows: &[ResultRow], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(results_to_csv(rows).as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ResultRow {
        ResultRow {
            env_name: "random_mdp".into(),
            env_seed: 3,
            planner: "mm".into(),
            antireward_kind: "forward_kl".into(),
            observer: "mce_true".into(),
            threshold_frac: 0.5,
            e_min: Some(1.25),
            achieved_return: Some(1.25),
            achieved_entropy_or_antireturn: Some(-0.5),
            lambda_star: Some(12.0),
            irl_rollout_return: Some(1.9),
            irl_rollout_ratio: Some(0.95),
            pearson: Some(0.875),
            epic: Some(0.25),
            ordering_consistency: Some(0.99),
            error: None,
        }
    }

    #[test]
    fn header_and_field_count_are_fixed() {
        let text = results_to_csv(&[row()]);
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert_eq!(header.split(',').count(), 17);
        assert!(header.starts_with("env_name,env_seed,planner"));
        assert!(header.ends_with("wall_time_ms,error"));
        let body = lines.next().unwrap();
        assert_eq!(body.split(',').count(), 17);
        // wall_time_ms stays empty.
        assert!(body.ends_with(",,"));
    }

    #[test]
    fn error_messages_with_commas_are_quoted() {
        let mut r = row();
        r.error = Some("planning failed: a, b, and \"c\"".into());
        let text = results_to_csv(&[r]);
        assert!(text.contains("\"planning failed: a, b, and \"\"c\"\"\""));
    }

    #[test]
    fn missing_metrics_are_empty_fields() {
        let mut r = row();
        r.pearson = None;
        r.epic = None;
        let text = results_to_csv(&[r]);
        let body = text.lines().nth(1).unwrap();
        let fields: Vec<&str> = body.split(',').collect();
        assert_eq!(fields[12], "");
        assert_eq!(fields[13], "");
    }
}
