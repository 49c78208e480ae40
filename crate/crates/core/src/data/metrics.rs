use serde::Serialize;

use crate::error::{Error, Result};

/// 2×2 confusion matrix at threshold 0.5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Confusion {
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tp: u64,
}

impl Confusion {
    pub fn from_scores(scores: &[f64], labels: &[u8]) -> Self {
        let mut c = Confusion::default();
        for (&s, &l) in scores.iter().zip(labels) {
            match (s >= 0.5, l == 1) {
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (true, true) => c.tp += 1,
            }
        }
        c
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.tn + self.fp + self.fn_ + self.tp;
        (self.tn + self.tp) as f64 / total as f64
    }

    /// `tn,fp,fn,tp`.
    pub fn to_csv_row(&self) -> String {
        format!("{},{},{},{}", self.tn, self.fp, self.fn_, self.tp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub acc: f64,
    pub auc: f64,
    pub confusion: Confusion,
}

/// Area under the ROC curve from the rank-sum statistic; tied scores count ½.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut k = 0;
    while k < order.len() {
        let mut end = k + 1;
        while end < order.len() && scores[order[end]] == scores[order[k]] {
            end += 1;
        }
        // average 1-based rank of the tie block
        let rank = (k + 1 + end) as f64 / 2.0;
        rank_sum += rank * order[k..end].iter().filter(|&&i| labels[i] == 1).count() as f64;
        k = end;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// ACC at 0.5, AUC and the confusion matrix of probability scores.
pub fn evaluate(scores: &[f64], labels: &[u8]) -> Result<Metrics> {
    let auc = auc(scores, labels)?;
    let confusion = Confusion::from_scores(scores, labels);
    Ok(Metrics { acc: confusion.accuracy(), auc, confusion })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(scores: &[f64], labels: &[u8]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li == 1 && lj == 0 {
                    den += 1.0;
                    if scores[i] > scores[j] {
                        num += 1.0;
                    } else if scores[i] == scores[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    #[test]
    fn worked_examples() {
        let m = evaluate(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap();
        assert_eq!((m.acc, m.auc), (1.0, 1.0));
        assert_eq!(auc(&[0.9, 0.8, 0.2, 0.1], &[0, 0, 1, 1]).unwrap(), 0.0);
        assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
        assert_eq!(brute_force(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]), 0.75);
        assert!(matches!(auc(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClass)));
    }

    #[test]
    fn matches_brute_force_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in 2..=50 {
            for _ in 0..20 {
                let labels: Vec<u8> = (0..m).map(|_| rng.random_range(0..2)).collect();
                if labels.iter().all(|&l| l == labels[0]) {
                    continue;
                }
                let scores: Vec<f64> = (0..m).map(|_| rng.random_range(0..6) as f64 / 5.0).collect();
                assert!((auc(&scores, &labels).unwrap() - brute_force(&scores, &labels)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn confusion_counts() {
        let c = Confusion::from_scores(&[0.2, 0.7, 0.4, 0.9, 0.5], &[0, 0, 1, 1, 1]);
        assert_eq!(c, Confusion { tn: 1, fp: 1, fn_: 1, tp: 2 });
        assert_eq!(c.to_csv_row(), "1,1,1,2");
        assert!((c.accuracy() - 0.6).abs() < 1e-15);
    }
}
