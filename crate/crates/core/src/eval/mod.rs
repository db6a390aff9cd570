//! Detection metrics and the measured applicability report: AUROC/AUPR per
//! (scorer × corner-case level), bootstrap intervals, and a rank test.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::substream;
use crate::score::ScoreSeries;
use crate::sim::dataset::{entry_path, DatasetManifest, Split};
use crate::sim::{hex_digest, Level, SimError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("metric undefined: {0}")]
    Undefined(String),
    #[error("provenance mismatch: {0}")]
    Provenance(String),
    #[error("missing scores: {0}")]
    Missing(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Probability that a random positive outranks a random negative, ties
/// credited one half. Rank-based, O(n log n).
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::Undefined(format!(
            "need both classes, got {n_pos} positives and {n_neg} negatives"
        )));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    // average ranks over tie groups (1-based)
    let mut rank_pos_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg_rank = (i + j + 2) as f64 / 2.0;
        for &k in &idx[i..=j] {
            if labels[k] {
                rank_pos_sum += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_pos_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Brute-force cross-checks for the fast metrics.
pub mod oracle {
    use super::EvalError;

    /// O(n²) pairwise win/tie count.
    pub fn auroc_pairwise(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
        let pos: Vec<f64> = scores
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l)
            .map(|(&s, _)| s)
            .collect();
        let neg: Vec<f64> = scores
            .iter()
            .zip(labels)
            .filter(|(_, &l)| !l)
            .map(|(&s, _)| s)
            .collect();
        if pos.is_empty() || neg.is_empty() {
            return Err(EvalError::Undefined("single-class labels".into()));
        }
        let mut credit = 0.0;
        for &p in &pos {
            for &n in &neg {
                if p > n {
                    credit += 1.0;
                } else if p == n {
                    credit += 0.5;
                }
            }
        }
        Ok(credit / (pos.len() * neg.len()) as f64)
    }
}

/// Average precision over the descending-score ranking; tie groups are
/// processed atomically so the value does not depend on input order.
pub fn aupr(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&l| l).count() as f64;
    if n_pos == 0.0 || n_pos as usize == labels.len() {
        return Err(EvalError::Undefined("single-class labels".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let group_tp = idx[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        let group_fp = (j - i + 1) as f64 - group_tp;
        tp += group_tp;
        fp += group_fp;
        if group_tp > 0.0 {
            ap += (group_tp / n_pos) * (tp / (tp + fp));
        }
        i = j + 1;
    }
    Ok(ap)
}

/// Percentile bootstrap confidence interval for AUROC, resampling frames
/// with replacement; resamples that lose a class are redrawn.
pub fn bootstrap_auroc_ci(
    scores: &[f64],
    labels: &[bool],
    n_boot: usize,
    confidence: f64,
    seed: u64,
) -> Result<(f64, f64), EvalError> {
    auroc(scores, labels)?;
    let n = scores.len();
    let mut stats = Vec::with_capacity(n_boot);
    let mut rng = substream(seed, "bootstrap", 0);
    while stats.len() < n_boot {
        let mut s = Vec::with_capacity(n);
        let mut l = Vec::with_capacity(n);
        for _ in 0..n {
            let k = rng.gen_range(0..n);
            s.push(scores[k]);
            l.push(labels[k]);
        }
        if let Ok(a) = auroc(&s, &l) {
            stats.push(a);
        }
    }
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let alpha = (1.0 - confidence) / 2.0;
    let lo_i = ((n_boot as f64 * alpha).floor() as usize).min(n_boot - 1);
    let hi_i = ((n_boot as f64 * (1.0 - alpha)).ceil() as usize).min(n_boot) - 1;
    Ok((stats[lo_i], stats[hi_i]))
}

fn phi(z: f64) -> f64 {
    // Abramowitz & Stegun 26.2.17 via erf approximation
    let t = 1.0 / (1.0 + 0.2316419 * z.abs());
    let poly = t * (0.319381530
        + t * (-0.356563782 + t * (1.781477937 + t * (-1.821255978 + t * 1.330274429))));
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let tail = pdf * poly;
    if z >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// One-sided Mann–Whitney rank test that `pos` scores stochastically exceed
/// `neg` scores; normal approximation with tie correction.
pub fn mann_whitney_p(pos: &[f64], neg: &[f64]) -> Result<f64, EvalError> {
    let (np, nn) = (pos.len(), neg.len());
    if np == 0 || nn == 0 {
        return Err(EvalError::Undefined("empty sample".into()));
    }
    let scores: Vec<f64> = pos.iter().chain(neg).copied().collect();
    let labels: Vec<bool> = (0..np + nn).map(|i| i < np).collect();
    let a = auroc(&scores, &labels)?;
    let u = a * np as f64 * nn as f64;
    let n = (np + nn) as f64;
    // tie correction over shared value groups
    let mut sorted = scores.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let mu = np as f64 * nn as f64 / 2.0;
    let var = np as f64 * nn as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        // every value tied: no evidence either way
        return Ok(0.5);
    }
    let z = (u - mu) / var.sqrt();
    Ok(1.0 - phi(z))
}

/// Table rows in presentation order.
pub const SCORERS: &[&str] = &[
    "reconstructive",
    "generative",
    "predictive",
    "confidence",
    "feature",
];

/// Corner-case levels each scorer family is claimed to apply to; the other
/// cells are still measured but rendered separately.
pub fn claimed_applicable(scorer: &str, level: Level) -> bool {
    match scorer {
        "reconstructive" | "generative" => {
            matches!(level, Level::Domain | Level::Object | Level::Scene)
        }
        "predictive" => matches!(level, Level::Scenario),
        "confidence" | "feature" => matches!(level, Level::Domain),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub auroc: f64,
    pub aupr: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub scorer: String,
    pub level: Level,
    pub applicable: bool,
    pub metrics: Option<CellMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerSummary {
    /// Anomalous (any level) vs normal frames.
    pub auroc: f64,
    pub mean_anomalous: f64,
    pub mean_normal: f64,
    /// One-sided rank-test p-value that anomalous frames score higher.
    pub p_value: f64,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub min: f64,
    pub max: f64,
    pub counts: Vec<usize>,
}

fn histogram(values: &[f64], bins: usize) -> Histogram {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut counts = vec![0usize; bins];
    let span = (max - min).max(1e-12);
    for &v in values {
        let b = (((v - min) / span) * bins as f64) as usize;
        counts[b.min(bins - 1)] += 1;
    }
    Histogram { min, max, counts }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub manifest_digest: String,
    pub n_eval_episodes: usize,
    pub cells: Vec<Cell>,
    pub summaries: BTreeMap<String, ScorerSummary>,
}

/// Evaluation tuning knobs.
#[derive(Debug, Clone, Copy)]
pub struct EvalConfig {
    /// Bootstrap resamples per applicable cell (0 disables intervals).
    pub n_boot: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            n_boot: 200,
            confidence: 0.95,
            seed: 0,
        }
    }
}

/// Compute the measured applicability matrix over the manifest's eval split.
///
/// Positives of a level cell are valid-scored frames tagged with that level;
/// negatives are all valid-scored normal frames of the eval split.
/// `claimed_manifest_digest` is the provenance recorded when the scores were
/// produced and must match the manifest.
pub fn evaluate(
    manifest_dir: &Path,
    manifest: &DatasetManifest,
    series: &[ScoreSeries],
    claimed_manifest_digest: &str,
    cfg: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    let manifest_digest = hex_digest(&serde_json::to_vec(manifest).expect("manifest serializes"));
    if claimed_manifest_digest != manifest_digest {
        return Err(EvalError::Provenance(format!(
            "scores were produced against manifest {claimed_manifest_digest} but evaluating {manifest_digest}"
        )));
    }

    // per-episode frame labels from the episode files, digest-checked
    let mut labels: BTreeMap<&str, Vec<Option<Level>>> = BTreeMap::new();
    let mut n_eval = 0;
    for e in manifest.entries_for(Split::Eval) {
        n_eval += 1;
        let path = entry_path(manifest_dir, e);
        let bytes = std::fs::read(&path).map_err(SimError::Io)?;
        if hex_digest(&bytes) != e.digest {
            return Err(EvalError::Provenance(format!(
                "episode file {} does not match its manifest digest",
                path.display()
            )));
        }
        let c = crate::container::Container::from_bytes(&bytes).map_err(SimError::Container)?;
        let (rec, _, _) = crate::sim::dataset::decode_episode(&c)?;
        labels.insert(&e.id, rec.labels.iter().map(|l| l.level).collect());
    }

    // group series per scorer and check coverage
    let mut by_scorer: BTreeMap<&str, BTreeMap<&str, &ScoreSeries>> = BTreeMap::new();
    for s in series {
        by_scorer
            .entry(&s.scorer)
            .or_default()
            .insert(&s.episode_id, s);
    }
    for (scorer, eps) in &by_scorer {
        for e in manifest.entries_for(Split::Eval) {
            let s = eps.get(e.id.as_str()).ok_or_else(|| {
                EvalError::Missing(format!("scorer {scorer} has no scores for episode {}", e.id))
            })?;
            let want = labels[e.id.as_str()].len();
            if s.scores.len() != want {
                return Err(EvalError::Missing(format!(
                    "scorer {scorer}, episode {}: {} scores for {want} frames",
                    e.id,
                    s.scores.len()
                )));
            }
        }
    }

    let mut cells = Vec::new();
    let mut summaries = BTreeMap::new();
    for (scorer, eps) in &by_scorer {
        // flatten valid frames
        let mut scores = Vec::new();
        let mut frame_levels = Vec::new();
        for (id, lv) in &labels {
            let s = eps[id];
            for (t, level) in lv.iter().enumerate() {
                if s.valid[t] {
                    scores.push(s.scores[t]);
                    frame_levels.push(*level);
                }
            }
        }
        for level in Level::ALL {
            let mask: Vec<bool> = frame_levels.iter().map(|l| *l == Some(level)).collect();
            let keep: Vec<usize> = (0..scores.len())
                .filter(|&i| mask[i] || frame_levels[i].is_none())
                .collect();
            let cell_scores: Vec<f64> = keep.iter().map(|&i| scores[i]).collect();
            let cell_labels: Vec<bool> = keep.iter().map(|&i| mask[i]).collect();
            let n_pos = cell_labels.iter().filter(|&&l| l).count();
            let n_neg = cell_labels.len() - n_pos;
            let applicable = claimed_applicable(scorer, level);
            let metrics = if n_pos > 0 && n_neg > 0 {
                let a = auroc(&cell_scores, &cell_labels)?;
                let pr = aupr(&cell_scores, &cell_labels)?;
                let (lo, hi) = if applicable && cfg.n_boot > 0 {
                    let (lo, hi) = bootstrap_auroc_ci(
                        &cell_scores,
                        &cell_labels,
                        cfg.n_boot,
                        cfg.confidence,
                        cfg.seed,
                    )?;
                    (Some(lo), Some(hi))
                } else {
                    (None, None)
                };
                Some(CellMetrics {
                    auroc: a,
                    aupr: pr,
                    n_pos,
                    n_neg,
                    ci_low: lo,
                    ci_high: hi,
                })
            } else {
                None
            };
            cells.push(Cell {
                scorer: scorer.to_string(),
                level,
                applicable,
                metrics,
            });
        }

        let pos: Vec<f64> = scores
            .iter()
            .zip(&frame_levels)
            .filter(|(_, l)| l.is_some())
            .map(|(&s, _)| s)
            .collect();
        let neg: Vec<f64> = scores
            .iter()
            .zip(&frame_levels)
            .filter(|(_, l)| l.is_none())
            .map(|(&s, _)| s)
            .collect();
        if !pos.is_empty() && !neg.is_empty() {
            let all_labels: Vec<bool> = frame_levels.iter().map(|l| l.is_some()).collect();
            summaries.insert(
                scorer.to_string(),
                ScorerSummary {
                    auroc: auroc(&scores, &all_labels)?,
                    mean_anomalous: pos.iter().sum::<f64>() / pos.len() as f64,
                    mean_normal: neg.iter().sum::<f64>() / neg.len() as f64,
                    p_value: mann_whitney_p(&pos, &neg)?,
                    histogram: histogram(&scores, 20),
                },
            );
        }
    }

    Ok(EvalReport {
        manifest_digest,
        n_eval_episodes: n_eval,
        cells,
        summaries,
    })
}

/// Plain-text rendering of the measured matrix. Applicable cells carry `*`;
/// the rest are measured but reported as outside the claimed scope.
pub fn render_report(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str("measured applicability matrix (frame-level AUROC; * = claimed applicable)\n\n");
    out.push_str(&format!("{:<16}", "scorer"));
    for level in Level::ALL {
        out.push_str(&format!("{:>20}", level.name()));
    }
    out.push('\n');
    for scorer in SCORERS {
        let row: Vec<&Cell> = report.cells.iter().filter(|c| c.scorer == *scorer).collect();
        if row.is_empty() {
            continue;
        }
        out.push_str(&format!("{scorer:<16}"));
        for level in Level::ALL {
            let cell = row.iter().find(|c| c.level == level);
            let text = match cell {
                Some(c) => {
                    let mark = if c.applicable { "*" } else { " " };
                    match &c.metrics {
                        Some(m) => format!("{:.3}{mark} ({}/{})", m.auroc, m.n_pos, m.n_neg),
                        None => format!("n/a{mark}"),
                    }
                }
                None => "n/a".to_string(),
            };
            out.push_str(&format!("{text:>20}"));
        }
        out.push('\n');
    }
    out.push('\n');
    for (scorer, s) in &report.summaries {
        out.push_str(&format!(
            "{scorer}: anomalous-vs-normal AUROC {:.3}, mean scores {:.4} vs {:.4}, rank-test p {:.2e}\n",
            s.auroc, s.mean_anomalous, s.mean_normal, s.p_value
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn auroc_closed_forms() {
        assert_eq!(auroc(&[1.0, 2.0, 3.0], &[false, false, true]).unwrap(), 1.0);
        assert_eq!(auroc(&[1.0, 1.0], &[false, true]).unwrap(), 0.5);
        assert!(matches!(
            auroc(&[1.0, 2.0], &[true, true]),
            Err(EvalError::Undefined(_))
        ));
    }

    #[test]
    fn auroc_equals_pairwise_oracle_on_random_instances() {
        for trial in 0..200u64 {
            let mut rng = substream(trial, "auroc", 0);
            let n = rng.gen_range(2..=500);
            // coarse scores force plenty of ties
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..20) as f64 / 4.0).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
            labels[0] = true;
            labels[n - 1] = false;
            let fast = auroc(&scores, &labels).unwrap();
            let slow = oracle::auroc_pairwise(&scores, &labels).unwrap();
            assert_eq!(fast, slow, "trial {trial}");
        }
    }

    #[test]
    fn auroc_invariant_under_increasing_transforms() {
        let mut rng = substream(3, "transform", 0);
        let scores: Vec<f64> = (0..300).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let labels: Vec<bool> = (0..300).map(|i| i % 3 == 0).collect();
        let base = auroc(&scores, &labels).unwrap();
        let exp: Vec<f64> = scores.iter().map(|&s| s.exp()).collect();
        let affine: Vec<f64> = scores.iter().map(|&s| 7.0 * s + 11.0).collect();
        assert!((auroc(&exp, &labels).unwrap() - base).abs() < 1e-12);
        assert!((auroc(&affine, &labels).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn aupr_perfect_ranking_is_one() {
        let scores = [0.1, 0.2, 0.9, 0.8];
        let labels = [false, false, true, true];
        assert!((aupr(&scores, &labels).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aupr_is_order_invariant_with_ties() {
        let scores = [1.0, 1.0, 1.0, 0.0, 2.0, 1.0];
        let labels = [true, false, true, false, true, false];
        let a = aupr(&scores, &labels).unwrap();
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        idx.reverse();
        let s2: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
        let l2: Vec<bool> = idx.iter().map(|&i| labels[i]).collect();
        assert_eq!(a, aupr(&s2, &l2).unwrap());
    }

    #[test]
    fn rank_test_behaves() {
        let pos: Vec<f64> = (0..60).map(|i| 1.0 + i as f64 * 0.01).collect();
        let neg: Vec<f64> = (0..60).map(|i| i as f64 * 0.01).collect();
        assert!(mann_whitney_p(&pos, &neg).unwrap() < 1e-6);
        // identical distributions give no one-sided evidence
        let p = mann_whitney_p(&neg, &neg.clone()).unwrap();
        assert!((p - 0.5).abs() < 0.05, "p = {p}");
        // all tied values
        assert_eq!(mann_whitney_p(&[1.0; 5], &[1.0; 5]).unwrap(), 0.5);
    }

    #[test]
    fn bootstrap_interval_brackets_the_point_estimate() {
        let mut rng = substream(9, "ci", 0);
        let scores: Vec<f64> = (0..400)
            .map(|i| if i % 4 == 0 { rng.gen::<f64>() + 0.8 } else { rng.gen() })
            .collect();
        let labels: Vec<bool> = (0..400).map(|i| i % 4 == 0).collect();
        let point = auroc(&scores, &labels).unwrap();
        let (lo, hi) = bootstrap_auroc_ci(&scores, &labels, 300, 0.95, 7).unwrap();
        assert!(lo <= point && point <= hi, "{lo} <= {point} <= {hi}");
        assert!(lo > 0.5, "separated data should exclude 0.5, got {lo}");
        let again = bootstrap_auroc_ci(&scores, &labels, 300, 0.95, 7).unwrap();
        assert_eq!((lo, hi), again);
    }

    use crate::score::ScoreSeries;
    use crate::sim::dataset::{build_dataset, read_episode, DatasetSpec};
    use tempfile::tempdir;

    /// Tiny on-disk dataset plus synthetic score series: an oracle scorer
    /// under the reconstructive name and a constant scorer under the
    /// generative name.
    fn fixture() -> (tempfile::TempDir, DatasetManifest, String, Vec<ScoreSeries>) {
        let spec = DatasetSpec {
            n_train: 1,
            n_eval_normal: 1,
            n_eval_per_level: 1,
            seed: 31,
            ..DatasetSpec::default()
        };
        let dir = tempdir().unwrap();
        let manifest = build_dataset(&spec, dir.path()).unwrap();
        let digest = hex_digest(&serde_json::to_vec(&manifest).unwrap());
        let mut series = Vec::new();
        for e in manifest.entries_for(Split::Eval) {
            let (rec, _, _) = read_episode(&entry_path(dir.path(), e)).unwrap();
            let truth: Vec<f64> = rec
                .labels
                .iter()
                .map(|l| if l.level.is_some() { 1.0 } else { 0.0 })
                .collect();
            let n = truth.len();
            series.push(ScoreSeries {
                episode_id: e.id.clone(),
                scorer: "reconstructive".into(),
                cfg_digest: "test".into(),
                scores: truth,
                valid: vec![true; n],
            });
            series.push(ScoreSeries {
                episode_id: e.id.clone(),
                scorer: "generative".into(),
                cfg_digest: "test".into(),
                scores: vec![0.25; n],
                valid: vec![true; n],
            });
        }
        (dir, manifest, digest, series)
    }

    #[test]
    fn oracle_scorer_scores_one_and_constant_scorer_half() {
        let (dir, manifest, digest, series) = fixture();
        let cfg = EvalConfig {
            n_boot: 50,
            ..EvalConfig::default()
        };
        let report = evaluate(dir.path(), &manifest, &series, &digest, &cfg).unwrap();
        for cell in &report.cells {
            let Some(m) = &cell.metrics else { continue };
            match cell.scorer.as_str() {
                "reconstructive" => assert_eq!(m.auroc, 1.0, "{:?}", cell.level),
                "generative" => assert_eq!(m.auroc, 0.5, "{:?}", cell.level),
                other => panic!("unexpected scorer {other}"),
            }
            if cell.applicable {
                assert!(m.ci_low.is_some() && m.ci_high.is_some());
            }
        }
        // every level produced a measurable reconstructive cell
        for level in Level::ALL {
            assert!(
                report
                    .cells
                    .iter()
                    .any(|c| c.scorer == "reconstructive"
                        && c.level == level
                        && c.metrics.is_some()),
                "level {level:?}"
            );
        }
        let s = &report.summaries["reconstructive"];
        assert_eq!(s.auroc, 1.0);
        assert!(s.p_value < 1e-6);
        assert_eq!(report.summaries["generative"].p_value, 0.5);

        let text = render_report(&report);
        assert!(text.contains("reconstructive"));
        assert!(text.contains("domain"));
        assert!(text.contains("scenario"));
        assert!(text.contains('*'));
    }

    #[test]
    fn evaluate_is_deterministic() {
        let (dir, manifest, digest, series) = fixture();
        let cfg = EvalConfig::default();
        let a = evaluate(dir.path(), &manifest, &series, &digest, &cfg).unwrap();
        let b = evaluate(dir.path(), &manifest, &series, &digest, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn provenance_and_coverage_are_enforced() {
        let (dir, manifest, digest, mut series) = fixture();
        let cfg = EvalConfig::default();
        assert!(matches!(
            evaluate(dir.path(), &manifest, &series, "deadbeef", &cfg),
            Err(EvalError::Provenance(_))
        ));
        let dropped = series.pop().unwrap();
        let err = evaluate(dir.path(), &manifest, &series, &digest, &cfg).unwrap_err();
        match err {
            EvalError::Missing(msg) => assert!(
                msg.contains(&dropped.episode_id),
                "error should name {}: {msg}",
                dropped.episode_id
            ),
            other => panic!("expected Missing, got {other:?}"),
        }
    }

    #[test]
    fn normal_cdf_is_sane() {
        assert!((phi(0.0) - 0.5).abs() < 1e-7);
        assert!((phi(1.96) - 0.975).abs() < 1e-4);
        assert!((phi(-1.96) - 0.025).abs() < 1e-4);
    }
}
