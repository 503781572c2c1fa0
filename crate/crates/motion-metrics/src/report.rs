//! Aggregated metric reports and their CSV form.

#[derive(Debug, Clone)]
pub struct ClipMetrics {
    pub clip_id: String,
    pub length: usize,
    pub keyframe_interval: usize,
    pub k_fid: f64,
    pub k_diversity: f64,
    pub k_error_cm: f64,
}

#[derive(Debug, Clone, Default)]
pub struct MetricsReport {
    pub per_clip: Vec<ClipMetrics>,
    /// Set-level K-FID over all frames of all clips.
    pub set_k_fid: f64,
    pub mean_k_diversity: f64,
    pub mean_k_error_cm: f64,
}

impl MetricsReport {
    pub fn from_clips(per_clip: Vec<ClipMetrics>, set_k_fid: f64) -> Self {
        let n = per_clip.len().max(1) as f64;
        let mean_k_diversity = per_clip.iter().map(|c| c.k_diversity).sum::<f64>() / n;
        let mean_k_error_cm = per_clip.iter().map(|c| c.k_error_cm).sum::<f64>() / n;
        MetricsReport {
            per_clip,
            set_k_fid,
            mean_k_diversity,
            mean_k_error_cm,
        }
    }
}

/// CSV: one row per clip plus an `ALL` summary row carrying the set-level
/// K-FID.
pub fn metrics_csv(report: &MetricsReport) -> String {
    let mut out = String::from("clip_id,length,keyframe_interval,k_fid,k_diversity,k_error_cm\n");
    for c in &report.per_clip {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6},{:.6}\n",
            c.clip_id, c.length, c.keyframe_interval, c.k_fid, c.k_diversity, c.k_error_cm
        ));
    }
    out.push_str(&format!(
        "ALL,,,{:.6},{:.6},{:.6}\n",
        report.set_k_fid, report.mean_k_diversity, report.mean_k_error_cm
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_shape() {
        let report = MetricsReport::from_clips(
            vec![ClipMetrics {
                clip_id: "clip0".into(),
                length: 61,
                keyframe_interval: 30,
                k_fid: 1.5,
                k_diversity: 2.0,
                k_error_cm: 0.1,
            }],
            1.25,
        );
        let csv = metrics_csv(&report);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().last().unwrap().starts_with("ALL"));
    }
}
