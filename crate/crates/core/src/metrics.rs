//! Explanation and classification metrics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("empty input")]
    Empty,
    #[error("length mismatch ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("non-finite score")]
    NonFinite,
    #[error("degenerate mask: all elements belong to one class")]
    DegenerateMask,
    #[error("no nonzero differences")]
    NoNonzeroDifferences,
    #[error("too few nonzero differences ({got}, need {needed})")]
    TooFewDifferences { got: usize, needed: usize },
    #[error("fence multiplier must be positive")]
    BadMultiplier,
}

/// Quantile interpolation between order statistics, named as in numpy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum QuartileRule {
    /// Hyndman-Fan type 7: `h = (n - 1) p`, linear between neighbours.
    #[default]
    Linear,
    Lower,
    Higher,
    Midpoint,
    Nearest,
}

impl QuartileRule {
    pub const ALL: [QuartileRule; 5] = [
        QuartileRule::Linear,
        QuartileRule::Lower,
        QuartileRule::Higher,
        QuartileRule::Midpoint,
        QuartileRule::Nearest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QuartileRule::Linear => "linear",
            QuartileRule::Lower => "lower",
            QuartileRule::Higher => "higher",
            QuartileRule::Midpoint => "midpoint",
            QuartileRule::Nearest => "nearest",
        }
    }
}

impl std::str::FromStr for QuartileRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.to_ascii_lowercase();
        if s == "type7" {
            return Ok(QuartileRule::Linear);
        }
        QuartileRule::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown quartile rule '{s}'"))
    }
}

/// Quantile `p` of already sorted values.
pub fn quantile_sorted(sorted: &[f64], p: f64, rule: QuartileRule) -> f64 {
    let n = sorted.len();
    assert!(n > 0);
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    match rule {
        QuartileRule::Linear => sorted[lo] + frac * (sorted[hi] - sorted[lo]),
        QuartileRule::Lower => sorted[lo],
        QuartileRule::Higher => sorted[hi],
        QuartileRule::Midpoint => (sorted[lo] + sorted[hi]) / 2.0,
        // round half to even, as numpy does
        QuartileRule::Nearest => {
            let k = if frac > 0.5 || (frac == 0.5 && lo % 2 == 1) {
                hi
            } else {
                lo
            };
            sorted[k]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeConfig {
    pub k: f64,
    pub quartile_rule: QuartileRule,
}

impl Default for NeConfig {
    fn default() -> Self {
        NeConfig {
            k: 1.5,
            quartile_rule: QuartileRule::Linear,
        }
    }
}

fn check_finite(v: &[f64]) -> Result<(), MetricError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(MetricError::NonFinite)
    }
}

/// 1 when no value lies outside `[Q1 - k IQR, Q3 + k IQR]`, else 0.
pub fn ne_score(scores: &[f64], cfg: &NeConfig) -> Result<u8, MetricError> {
    if scores.is_empty() {
        return Err(MetricError::Empty);
    }
    if cfg.k.is_nan() || cfg.k <= 0.0 {
        return Err(MetricError::BadMultiplier);
    }
    check_finite(scores)?;
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25, cfg.quartile_rule);
    let q3 = quantile_sorted(&sorted, 0.75, cfg.quartile_rule);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - cfg.k * iqr, q3 + cfg.k * iqr);
    let inside = sorted[0] >= lo && sorted[sorted.len() - 1] <= hi;
    Ok(u8::from(inside))
}

fn check_pair(scores: &[f64], mask: &[bool]) -> Result<(usize, usize), MetricError> {
    if scores.len() != mask.len() {
        return Err(MetricError::LengthMismatch(scores.len(), mask.len()));
    }
    check_finite(scores)?;
    let pos = mask.iter().filter(|&&m| m).count();
    let neg = mask.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricError::DegenerateMask);
    }
    Ok((pos, neg))
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Computed from exact integer pair counts.
pub fn auroc(scores: &[f64], mask: &[bool]) -> Result<f64, MetricError> {
    let (pos, neg) = check_pair(scores, mask)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the concordant count plus the tied count
    let mut twice: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let group_pos = order[i..j].iter().filter(|&&k| mask[k]).count() as u128;
        let group_neg = (j - i) as u128 - group_pos;
        twice += group_pos * (2 * neg_below + group_neg);
        neg_below += group_neg;
        i = j;
    }
    Ok(twice as f64 / (2.0 * pos as f64 * neg as f64))
}

/// Mean precision at the rank of each positive, ranking by descending score
/// with ties kept in index order.
pub fn average_precision(scores: &[f64], mask: &[bool]) -> Result<f64, MetricError> {
    let (pos, _) = check_pair(scores, mask)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &k) in order.iter().enumerate() {
        if mask[k] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / pos as f64)
}

/// `2 TP / (2 TP + FP + FN)`, 0 when the denominator is 0.
pub fn f1_score(labels: &[bool], preds: &[bool]) -> Result<f64, MetricError> {
    if labels.len() != preds.len() {
        return Err(MetricError::LengthMismatch(labels.len(), preds.len()));
    }
    if labels.is_empty() {
        return Err(MetricError::Empty);
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&l, &p) in labels.iter().zip(preds) {
        match (l, p) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fneg += 1,
            (false, false) => {}
        }
    }
    let denom = 2 * tp + fp + fneg;
    Ok(if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    })
}

pub const WILCOXON_MIN_N: usize = 5;
pub const WILCOXON_EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of positive differences.
    pub statistic: f64,
    /// Number of nonzero differences.
    pub n: usize,
    pub p_value: f64,
    pub method: WilcoxonMethod,
}

/// Average ranks (1-based) of `values`, ties sharing the mean rank, returned
/// doubled so they stay integral.
pub fn doubled_ranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j averaged, doubled
        let doubled = (i + 1 + j) as u64;
        for &k in &order[i..j] {
            ranks[k] = doubled;
        }
        i = j;
    }
    ranks
}

/// `P(W+ >= observed)` under the sign-flip null, by dynamic programming over
/// the attainable doubled rank sums.
pub fn exact_upper_tail(doubled: &[u64], observed_doubled: u64) -> f64 {
    let total: u64 = doubled.iter().sum();
    let mut counts = vec![0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in doubled {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let tail: f64 = counts[observed_doubled as usize..].iter().sum();
    tail / 2f64.powi(doubled.len() as i32)
}

/// One-sided signed-rank test of `median(x - y) > 0`. Zero differences are
/// dropped; exact null distribution up to 25 pairs, normal approximation
/// with tie and continuity correction above.
pub fn wilcoxon_one_sided(x: &[f64], y: &[f64]) -> Result<WilcoxonResult, MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch(x.len(), y.len()));
    }
    check_finite(x)?;
    check_finite(y)?;
    let d: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|&v| v != 0.0)
        .collect();
    let n = d.len();
    if n == 0 {
        return Err(MetricError::NoNonzeroDifferences);
    }
    if n < WILCOXON_MIN_N {
        return Err(MetricError::TooFewDifferences {
            got: n,
            needed: WILCOXON_MIN_N,
        });
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks = doubled_ranks(&abs);
    let w2: u64 = ranks
        .iter()
        .zip(&d)
        .filter(|(_, &v)| v > 0.0)
        .map(|(r, _)| r)
        .sum();
    let statistic = w2 as f64 / 2.0;
    if n <= WILCOXON_EXACT_MAX_N {
        return Ok(WilcoxonResult {
            statistic,
            n,
            p_value: exact_upper_tail(&ranks, w2),
            method: WilcoxonMethod::Exact,
        });
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = ranks.clone();
    sorted.sort_unstable();
    for g in sorted.chunk_by(|a, b| a == b) {
        let t = g.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = (statistic - mean - 0.5) / var.sqrt();
    let p = Normal::standard().sf(z);
    Ok(WilcoxonResult {
        statistic,
        n,
        p_value: p.clamp(0.0, 1.0),
        method: WilcoxonMethod::Normal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: NeConfig = NeConfig {
        k: 1.5,
        quartile_rule: QuartileRule::Linear,
    };

    #[test]
    fn ne_examples() {
        assert_eq!(ne_score(&[4.5; 4], &CFG), Ok(1));
        assert_eq!(ne_score(&[1.0, 1.0, 1.0, 1.0, 10.0], &CFG), Ok(0));
        assert_eq!(ne_score(&[1.0, 2.0, 3.0, 4.0, 100.0], &CFG), Ok(0));
        assert_eq!(ne_score(&[1.0, 2.0, 3.0, 4.0, 7.0], &CFG), Ok(1));
        assert_eq!(ne_score(&[], &CFG), Err(MetricError::Empty));
        assert_eq!(ne_score(&[f64::NAN], &CFG), Err(MetricError::NonFinite));
    }

    #[test]
    fn quartiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 100.0];
        assert_eq!(quantile_sorted(&v, 0.25, QuartileRule::Linear), 2.0);
        assert_eq!(quantile_sorted(&v, 0.75, QuartileRule::Linear), 4.0);
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.25, QuartileRule::Linear), 1.75);
        assert_eq!(quantile_sorted(&v, 0.25, QuartileRule::Lower), 1.0);
        assert_eq!(quantile_sorted(&v, 0.25, QuartileRule::Higher), 2.0);
        assert_eq!(quantile_sorted(&v, 0.25, QuartileRule::Midpoint), 1.5);
        assert_eq!(quantile_sorted(&v, 0.25, QuartileRule::Nearest), 2.0);
        assert_eq!("type7".parse::<QuartileRule>(), Ok(QuartileRule::Linear));
    }

    #[test]
    fn auroc_examples() {
        let s = [0.9, 0.8, 0.1, 0.2];
        assert_eq!(auroc(&s, &[true, true, false, false]), Ok(1.0));
        assert_eq!(auroc(&s, &[true, false, true, false]), Ok(0.5));
        assert_eq!(auroc(&[0.5, 0.5], &[true, false]), Ok(0.5));
        assert_eq!(auroc(&s, &[true; 4]), Err(MetricError::DegenerateMask));
        assert_eq!(auroc(&s, &[false; 4]), Err(MetricError::DegenerateMask));
    }

    #[test]
    fn ap_examples() {
        let s = [0.9, 0.8, 0.1, 0.2];
        assert_eq!(average_precision(&s, &[true, true, false, false]), Ok(1.0));
        assert_eq!(average_precision(&s, &[true, false, true, false]), Ok(0.75));
        assert_eq!(
            average_precision(&[4.0, 3.0, 2.0, 1.0], &[false, false, false, true]),
            Ok(0.25)
        );
    }

    #[test]
    fn f1_examples() {
        let l = [true, true, true, false, false];
        assert_eq!(f1_score(&l, &l), Ok(1.0));
        let p = [true, true, false, true, false];
        assert!((f1_score(&l, &p).unwrap() - 2.0 / 3.0).abs() < 1e-9);
        assert_eq!(f1_score(&l, &[false; 5]), Ok(0.0));
        assert_eq!(f1_score(&[false; 3], &[false; 3]), Ok(0.0));
        assert!(f1_score(&l, &p[..4]).is_err());
    }

    #[test]
    fn wilcoxon_examples() {
        let x = [2.0, 3.0, 4.0, 5.0, 6.0];
        let y = [1.0, 1.5, 1.0, 0.0, 0.5];
        let r = wilcoxon_one_sided(&x, &y).unwrap();
        assert_eq!(r.p_value, 0.03125);
        assert_eq!(r.method, WilcoxonMethod::Exact);
        assert_eq!(
            wilcoxon_one_sided(&x, &x),
            Err(MetricError::NoNonzeroDifferences)
        );
        assert!(matches!(
            wilcoxon_one_sided(&x[..3], &y[..3]),
            Err(MetricError::TooFewDifferences { got: 3, .. })
        ));
    }

    #[test]
    fn wilcoxon_normal_branch() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.1 + 1.0).collect();
        let y: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let r = wilcoxon_one_sided(&x, &y).unwrap();
        assert_eq!(r.method, WilcoxonMethod::Normal);
        assert!(r.p_value < 1e-6);
        let r = wilcoxon_one_sided(&y, &x).unwrap();
        assert!(r.p_value > 0.999);
    }

    #[test]
    fn doubled_ranks_average_ties() {
        assert_eq!(doubled_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![7, 2, 7, 4]);
    }
}
