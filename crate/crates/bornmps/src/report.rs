//! Comma-separated report tables.
//!
//! Every float is rendered with [`fmt_sig12`] (12 significant digits,
//! scientific notation), which keeps output bit-exact across runs.

use crate::explain::FeatureImportanceTable;
use crate::pipeline::{DetectionMetrics, RowExplanation, ThresholdSweepResult};
use crate::tensor::DenseTensor;

/// Fixed 12-significant-digit decimal rendering.
pub fn fmt_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().from_writer(Vec::new())
}

fn into_string(writer: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// `feature,name,entropy` per feature.
pub fn entropy_profile_csv(names: &[String], profile: &[f64]) -> String {
    let mut w = csv_writer();
    w.write_record(["feature", "name", "entropy"]).unwrap();
    for (i, (name, s)) in names.iter().zip(profile).enumerate() {
        w.write_record([i.to_string(), name.clone(), fmt_sig12(*s)])
            .unwrap();
    }
    into_string(w)
}

/// Bare N×N grid, one row per line.
pub fn mi_matrix_csv(mi: &DenseTensor) -> String {
    let n = mi.shape()[0];
    let mut w = csv_writer();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| fmt_sig12(mi.at(&[i, j]))).collect();
        w.write_record(&row).unwrap();
    }
    into_string(w)
}

/// `value,empirical,mps` per value of one feature.
pub fn distribution_comparison_csv(
    value_names: &[String],
    empirical: &[f64],
    model: &[f64],
) -> String {
    let mut w = csv_writer();
    w.write_record(["value", "empirical", "mps"]).unwrap();
    for ((name, e), m) in value_names.iter().zip(empirical).zip(model) {
        w.write_record([name.clone(), fmt_sig12(*e), fmt_sig12(*m)])
            .unwrap();
    }
    into_string(w)
}

/// `feature,name,entropy,discrepancy` per feature.
pub fn discrepancy_entropy_csv(names: &[String], entropy: &[f64], discrepancy: &[f64]) -> String {
    let mut w = csv_writer();
    w.write_record(["feature", "name", "entropy", "discrepancy"])
        .unwrap();
    for (i, ((name, s), h)) in names.iter().zip(entropy).zip(discrepancy).enumerate() {
        w.write_record([i.to_string(), name.clone(), fmt_sig12(*s), fmt_sig12(*h)])
            .unwrap();
    }
    into_string(w)
}

/// `feature,name,benign_mean,attack_mean` rows plus a trailing `total` row
/// with the per-class products.
pub fn feature_importance_csv(names: &[String], table: &FeatureImportanceTable) -> String {
    let mut w = csv_writer();
    w.write_record(["feature", "name", "benign_mean", "attack_mean"])
        .unwrap();
    for (i, name) in names.iter().enumerate() {
        w.write_record([
            i.to_string(),
            name.clone(),
            fmt_sig12(table.benign_mean[i]),
            fmt_sig12(table.attack_mean[i]),
        ])
        .unwrap();
    }
    w.write_record([
        "total".to_string(),
        String::new(),
        fmt_sig12(table.benign_total),
        fmt_sig12(table.attack_total),
    ])
    .unwrap();
    into_string(w)
}

/// `row_index,nll[,label]` per row.
pub fn scores_csv(order: &[usize], scores: &[f64], labels: Option<&[bool]>) -> String {
    let mut w = csv_writer();
    match labels {
        Some(_) => w.write_record(["row_index", "nll", "label"]).unwrap(),
        None => w.write_record(["row_index", "nll"]).unwrap(),
    }
    for (i, (&idx, &s)) in order.iter().zip(scores).enumerate() {
        match labels {
            Some(l) => w
                .write_record([
                    idx.to_string(),
                    fmt_sig12(s),
                    (if l[i] { "1" } else { "0" }).to_string(),
                ])
                .unwrap(),
            None => w.write_record([idx.to_string(), fmt_sig12(s)]).unwrap(),
        }
    }
    into_string(w)
}

/// `threshold,anomalies,attacks` per swept threshold.
pub fn sweep_csv(sweep: &ThresholdSweepResult) -> String {
    let mut w = csv_writer();
    w.write_record(["threshold", "anomalies", "attacks"]).unwrap();
    for point in &sweep.points {
        w.write_record([
            fmt_sig12(point.threshold),
            point.anomalies_detected.to_string(),
            point.attacks_among_anomalies.to_string(),
        ])
        .unwrap();
    }
    into_string(w)
}

/// `threshold,detection_rate,false_positive_rate,precision` per threshold.
pub fn metrics_csv(points: &[(f64, DetectionMetrics)]) -> String {
    let mut w = csv_writer();
    w.write_record([
        "threshold",
        "detection_rate",
        "false_positive_rate",
        "precision",
    ])
    .unwrap();
    for (t, m) in points {
        w.write_record([
            fmt_sig12(*t),
            fmt_sig12(m.detection_rate),
            fmt_sig12(m.false_positive_rate),
            fmt_sig12(m.precision),
        ])
        .unwrap();
    }
    into_string(w)
}

/// Per-row summary: `row_index,joint_nll,marginal_nll,marginal_product`.
pub fn explanation_rows_csv(rows: &[(usize, RowExplanation)]) -> String {
    let mut w = csv_writer();
    w.write_record(["row_index", "joint_nll", "marginal_nll", "marginal_product"])
        .unwrap();
    for (idx, ex) in rows {
        w.write_record([
            idx.to_string(),
            fmt_sig12(ex.joint_nll),
            fmt_sig12(ex.marginal_nll),
            fmt_sig12(ex.marginal_product),
        ])
        .unwrap();
    }
    into_string(w)
}

/// Ranked per-feature breakdown:
/// `row_index,rank,feature,name,value,probability`, one block per explained
/// row, lowest-probability features first.
pub fn explanation_features_csv(
    rows: &[(usize, RowExplanation)],
    feature_names: &[String],
    value_name: impl Fn(usize, usize) -> String,
) -> String {
    let mut w = csv_writer();
    w.write_record(["row_index", "rank", "feature", "name", "value", "probability"])
        .unwrap();
    for (idx, ex) in rows {
        for (rank, &feature) in ex.ranking.iter().enumerate() {
            let (_, value, p) = ex.feature_probs[feature];
            w.write_record([
                idx.to_string(),
                rank.to_string(),
                feature.to_string(),
                feature_names[feature].clone(),
                value_name(feature, value),
                fmt_sig12(p),
            ])
            .unwrap();
        }
    }
    into_string(w)
}

/// `sweep,nll,max_bond,seconds` per sweep of a training run.
pub fn train_report_csv(report: &crate::trainer::TrainReport) -> String {
    let mut w = csv_writer();
    w.write_record(["sweep", "nll", "max_bond", "seconds"]).unwrap();
    for (i, nll) in report.nll_per_sweep.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            fmt_sig12(*nll),
            report.max_bond_per_sweep[i].to_string(),
            fmt_sig12(report.seconds_per_sweep[i]),
        ])
        .unwrap();
    }
    into_string(w)
}

/// `method,threshold` for the two suggested starting points.
pub fn threshold_suggestions_csv(s: &crate::pipeline::ThresholdSuggestion) -> String {
    let mut w = csv_writer();
    w.write_record(["method", "threshold"]).unwrap();
    w.write_record(["mean_plus_3sd", &fmt_sig12(s.mean_plus_3sd)])
        .unwrap();
    w.write_record(["median_plus_3mad", &fmt_sig12(s.median_plus_3mad)])
        .unwrap();
    into_string(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig12(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(fmt_sig12(0.5), "5.00000000000e-1");
        assert_eq!(fmt_sig12(0.0), "0.00000000000e0");
        assert_eq!(fmt_sig12(-12345.678), "-1.23456780000e4");
    }

    #[test]
    fn entropy_profile_layout() {
        let names = vec!["alpha".to_string(), "beta,with,commas".to_string()];
        let text = entropy_profile_csv(&names, &[0.0, 2.0f64.ln()]);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("feature,name,entropy"));
        assert_eq!(lines.next(), Some("0,alpha,0.00000000000e0"));
        // the comma-bearing name is quoted so the table still parses
        assert!(lines.next().unwrap().starts_with("1,\"beta,with,commas\","));
    }

    #[test]
    fn mi_matrix_is_a_bare_grid() {
        let mi = DenseTensor::new(vec![2, 2], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let text = mi_matrix_csv(&mi);
        assert_eq!(
            text,
            "0.00000000000e0,1.00000000000e0\n1.00000000000e0,0.00000000000e0\n"
        );
    }

    #[test]
    fn scores_include_labels_when_present() {
        let text = scores_csv(&[0, 1], &[1.5, 2.5], Some(&[false, true]));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "row_index,nll,label");
        assert!(lines[2].ends_with(",1"));
        let unlabeled = scores_csv(&[0], &[1.5], None);
        assert_eq!(unlabeled.lines().next(), Some("row_index,nll"));
    }
}
