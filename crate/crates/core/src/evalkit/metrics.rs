use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("empty label list")]
    Empty,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("k = {k} exceeds the {len} available labels")]
    KExceedsLength { k: usize, len: usize },
    #[error("grade {0} outside 1..=3")]
    BadGrade(u8),
    #[error("label sequences differ in length: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
}

/// Fraction of accurate labels among the first `k`.
pub fn precision_at_k(labels: &[bool], k: usize) -> Result<f64, MetricError> {
    if k == 0 {
        return Err(MetricError::ZeroK);
    }
    if k > labels.len() {
        return Err(MetricError::KExceedsLength { k, len: labels.len() });
    }
    let hits = labels[..k].iter().filter(|&&a| a).count();
    Ok(hits as f64 / k as f64)
}

/// Gain applied to a grade before discounting.
///
/// `Exponential` (`2^g - 1`) is the default. `Linear` uses the grade itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gain {
    #[default]
    Exponential,
    Linear,
}

impl Gain {
    pub fn of(self, grade: u8) -> f64 {
        match self {
            Gain::Exponential => f64::from(grade).exp2() - 1.0,
            Gain::Linear => f64::from(grade),
        }
    }
}

fn check_grades(grades: &[u8]) -> Result<(), MetricError> {
    if grades.is_empty() {
        return Err(MetricError::Empty);
    }
    match grades.iter().find(|g| !(1..=3).contains(*g)) {
        Some(&g) => Err(MetricError::BadGrade(g)),
        None => Ok(()),
    }
}

/// Discounted cumulative gain over the first `k` ranks (fewer if the list is shorter).
/// Rank `r` (1-based) is discounted by `1 / log2(r + 1)`.
pub fn dcg_at_k(grades: &[u8], k: usize, gain: Gain) -> Result<f64, MetricError> {
    if k == 0 {
        return Err(MetricError::ZeroK);
    }
    check_grades(grades)?;
    Ok(grades
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain.of(g) / ((i + 2) as f64).log2())
        .sum())
}

/// DCG@k of `grades` (in ranked order) over DCG@k of the ideal ordering.
///
/// Grades are 1..=3, so the ideal DCG is always positive.
pub fn ndcg_at_k(grades: &[u8], k: usize, gain: Gain) -> Result<f64, MetricError> {
    let dcg = dcg_at_k(grades, k, gain)?;
    let mut ideal = grades.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg_at_k(&ideal, k, gain)?;
    Ok((dcg / idcg).min(1.0))
}

/// Chance-corrected agreement between two annotators.
///
/// Returns 1.0 when expected agreement is 1 (both annotators used a single
/// shared category throughout).
pub fn cohens_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<f64, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch { a: a.len(), b: b.len() });
    }
    if a.is_empty() {
        return Err(MetricError::Empty);
    }
    let n = a.len() as f64;
    let mut marg: BTreeMap<&T, (usize, usize)> = BTreeMap::new();
    let mut agree = 0usize;
    for (x, y) in a.iter().zip(b) {
        marg.entry(x).or_default().0 += 1;
        marg.entry(y).or_default().1 += 1;
        if x == y {
            agree += 1;
        }
    }
    let p_o = agree as f64 / n;
    let p_e: f64 = marg.values().map(|&(ca, cb)| (ca as f64 / n) * (cb as f64 / n)).sum();
    if (1.0 - p_e).abs() < 1e-15 {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precision_examples() {
        assert_eq!(precision_at_k(&[true, true, false], 2).unwrap(), 1.0);
        assert_eq!(precision_at_k(&[false, false, false], 3).unwrap(), 0.0);
        assert_eq!(precision_at_k(&[true, false, true], 3).unwrap(), 2.0 / 3.0);
        assert_eq!(precision_at_k(&[true], 2), Err(MetricError::KExceedsLength { k: 2, len: 1 }));
        assert_eq!(precision_at_k(&[true], 0), Err(MetricError::ZeroK));
    }

    #[test]
    fn ndcg_two_item_by_hand() {
        let l3 = 3f64.log2();
        let want = (1.0 + 7.0 / l3) / (7.0 + 1.0 / l3);
        let got = ndcg_at_k(&[1, 3], 2, Gain::Exponential).unwrap();
        assert!((got - want).abs() < 1e-15);
        assert_eq!(ndcg_at_k(&[3, 1], 2, Gain::Exponential).unwrap(), 1.0);
        let lin = (1.0 + 3.0 / l3) / (3.0 + 1.0 / l3);
        assert!((ndcg_at_k(&[1, 3], 2, Gain::Linear).unwrap() - lin).abs() < 1e-15);
    }

    #[test]
    fn ndcg_edge_cases() {
        assert_eq!(ndcg_at_k(&[2, 2, 2], 2, Gain::Exponential).unwrap(), 1.0);
        assert_eq!(ndcg_at_k(&[3, 2, 1], 10, Gain::Exponential).unwrap(), 1.0);
        assert_eq!(ndcg_at_k(&[], 1, Gain::Exponential), Err(MetricError::Empty));
        assert_eq!(ndcg_at_k(&[0, 1], 1, Gain::Exponential), Err(MetricError::BadGrade(0)));
        assert_eq!(ndcg_at_k(&[1], 0, Gain::Exponential), Err(MetricError::ZeroK));
    }

    #[test]
    fn kappa_confusion_matrix() {
        // rows: annotator a, cols: annotator b; [[20,5],[10,15]]
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (x, y, n) in [(0, 0, 20), (0, 1, 5), (1, 0, 10), (1, 1, 15)] {
            for _ in 0..n {
                a.push(x);
                b.push(y);
            }
        }
        // p_o = 35/50; a marginals 25/25, b marginals 30/20; p_e = .5*.6 + .5*.4 = .5
        let got = cohens_kappa(&a, &b).unwrap();
        assert!((got - 0.4).abs() < 1e-12);
    }

    #[test]
    fn kappa_special_cases() {
        assert_eq!(cohens_kappa(&["x", "y", "z", "x"], &["x", "y", "z", "x"]).unwrap(), 1.0);
        assert_eq!(cohens_kappa(&[true, true], &[true, true]).unwrap(), 1.0);
        assert!(matches!(cohens_kappa(&[1], &[1, 2]), Err(MetricError::LengthMismatch { .. })));
        assert_eq!(cohens_kappa::<u8>(&[], &[]), Err(MetricError::Empty));
    }
}
