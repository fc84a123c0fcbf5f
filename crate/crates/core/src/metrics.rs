//! Point-wise detection metrics and threshold sweeps.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

/// A ratio metric; `degenerate` marks a zero denominator, in which case
/// `value` is 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metric {
    pub value: f64,
    pub degenerate: bool,
}

impl Metric {
    fn ratio(num: f64, den: f64) -> Metric {
        if den == 0.0 {
            Metric {
                value: 0.0,
                degenerate: true,
            }
        } else {
            Metric {
                value: num / den,
                degenerate: false,
            }
        }
    }
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// `TP / (TP + FP)`.
    pub fn precision(&self) -> Metric {
        Metric::ratio(self.tp as f64, (self.tp + self.fp) as f64)
    }

    /// `TP / (TP + FN)`.
    pub fn recall(&self) -> Metric {
        Metric::ratio(self.tp as f64, (self.tp + self.fn_) as f64)
    }

    /// `2·Pre·Rec / (Pre + Rec)`.
    pub fn f1(&self) -> Metric {
        let (p, r) = (self.precision(), self.recall());
        let m = Metric::ratio(2.0 * p.value * r.value, p.value + r.value);
        Metric {
            degenerate: m.degenerate || p.degenerate || r.degenerate,
            ..m
        }
    }
}

/// Counts per timestep. When `mask` is given, only positions where it is
/// `true` are counted.
pub fn confusion(predicted: &[u8], truth: &[u8], mask: Option<&[bool]>) -> Result<ConfusionCounts> {
    if predicted.len() != truth.len() {
        return Err(Error::shape("confusion", truth.len(), predicted.len()));
    }
    if let Some(m) = mask {
        if m.len() != truth.len() {
            return Err(Error::shape("confusion mask", truth.len(), m.len()));
        }
    }
    let mut c = ConfusionCounts::default();
    for (t, (&p, &l)) in predicted.iter().zip(truth).enumerate() {
        if mask.is_some_and(|m| !m[t]) {
            continue;
        }
        match (p != 0, l != 0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub quantile: f64,
    pub tau: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub best_precision: usize,
    pub best_recall: usize,
    pub best_f1: usize,
}

impl SweepResult {
    pub fn best_f1_row(&self) -> &SweepRow {
        &self.rows[self.best_f1]
    }

    pub fn best_precision_row(&self) -> &SweepRow {
        &self.rows[self.best_precision]
    }

    pub fn best_recall_row(&self) -> &SweepRow {
        &self.rows[self.best_recall]
    }
}

/// `n + 1` evenly spaced quantiles from 0 to 1.
pub fn quantile_grid(n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

/// Linearly interpolated quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Evaluates `score > τ` at the given quantiles of the covered scores and
/// reports the full table plus the best row for each metric (first on ties).
pub fn sweep_tau(
    scores: &[f64],
    covered: &[bool],
    truth: &[u8],
    grid: &[f64],
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::invalid("threshold grid is empty"));
    }
    if scores.len() != truth.len() || covered.len() != truth.len() {
        return Err(Error::shape(
            "sweep_tau",
            truth.len(),
            (scores.len(), covered.len()),
        ));
    }
    let mut sorted: Vec<f64> = scores
        .iter()
        .zip(covered)
        .filter(|(_, &c)| c)
        .map(|(&s, _)| s)
        .collect();
    if sorted.is_empty() {
        return Err(Error::invalid("no covered timesteps to evaluate"));
    }
    sorted.sort_by(f64::total_cmp);
    let rows: Vec<SweepRow> = grid
        .iter()
        .map(|&q| {
            let tau = quantile_sorted(&sorted, q);
            let pred: Vec<u8> = scores.iter().map(|&s| u8::from(s > tau)).collect();
            let counts = confusion(&pred, truth, Some(covered)).expect("lengths checked");
            SweepRow {
                quantile: q,
                tau,
                precision: counts.precision().value,
                recall: counts.recall().value,
                f1: counts.f1().value,
                counts,
            }
        })
        .collect();
    let argmax = |f: fn(&SweepRow) -> f64| {
        let mut best = 0;
        for (i, r) in rows.iter().enumerate() {
            if f(r) > f(&rows[best]) {
                best = i;
            }
        }
        best
    };
    Ok(SweepResult {
        best_precision: argmax(|r| r.precision),
        best_recall: argmax(|r| r.recall),
        best_f1: argmax(|r| r.f1),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;
    use proptest::prelude::*;

    #[test]
    fn confusion_example() {
        let c = confusion(&[1, 0, 1, 0], &[1, 0, 0, 0], None).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 1,
                fp: 1,
                tn: 2,
                fn_: 0
            }
        );
        let c = confusion(&[1, 0, 1, 1], &[1, 0, 1, 1], None).unwrap();
        assert_eq!((c.fp, c.fn_), (0, 0));
        assert!(confusion(&[1], &[1, 0], None).is_err());
        let c = confusion(&[1, 1, 0], &[1, 0, 1], Some(&[true, false, true])).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 1,
                fp: 0,
                tn: 0,
                fn_: 1
            }
        );
    }

    #[test]
    fn ratio_examples() {
        let c = ConfusionCounts {
            tp: 99,
            fp: 1,
            tn: 0,
            fn_: 0,
        };
        assert!((c.precision().value - 0.99).abs() < 1e-15);
        let c = ConfusionCounts {
            tp: 0,
            fp: 3,
            tn: 5,
            fn_: 0,
        };
        assert_eq!(
            c.recall(),
            Metric {
                value: 0.0,
                degenerate: true
            }
        );
        let c = ConfusionCounts {
            tp: 1,
            fp: 1,
            tn: 0,
            fn_: 1,
        };
        assert_eq!(c.precision().value, 0.5);
        assert_eq!(c.recall().value, 0.5);
        assert_eq!(c.f1().value, 0.5);
    }

    #[test]
    fn sweep_contracts() {
        let mut rng = SeededRng::new(12);
        let n = 500;
        let truth: Vec<u8> = (0..n)
            .map(|_| u8::from(rng.uniform(0.0, 1.0) < 0.2))
            .collect();
        let scores: Vec<f64> = truth.iter().map(|&l| l as f64 + rng.normal()).collect();
        let covered = vec![true; n];
        let one = sweep_tau(&scores, &covered, &truth, &[0.5]).unwrap();
        assert_eq!(one.rows.len(), 1);
        let s = sweep_tau(&scores, &covered, &truth, &quantile_grid(100)).unwrap();
        assert!(s
            .rows
            .iter()
            .all(|r| r.recall <= s.best_recall_row().recall));
        assert!(s
            .rows
            .iter()
            .all(|r| r.precision <= s.best_precision_row().precision));
        for &tau in &[-1.0, 0.0, 0.5, 1.0] {
            let pred: Vec<u8> = scores.iter().map(|&v| u8::from(v > tau)).collect();
            let f = confusion(&pred, &truth, None).unwrap().f1().value;
            // The grid is finite; the best row beats any of these fixed τ up to grid resolution.
            assert!(
                s.best_f1_row().f1 >= f - 0.02,
                "{} < {f}",
                s.best_f1_row().f1
            );
        }
        assert!(sweep_tau(&scores, &covered, &truth, &[]).is_err());
    }

    #[test]
    fn quantiles() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 1.0), 5.0);
        assert_eq!(quantile_sorted(&s, 0.5), 3.0);
        assert_eq!(quantile_sorted(&s, 0.125), 1.5);
        assert_eq!(quantile_grid(4), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    proptest! {
        #[test]
        fn permutation_invariance_and_harmonic_bounds(
            pairs in prop::collection::vec((0u8..2, 0u8..2), 1..200),
            seed in 0u64..1000,
        ) {
            let (pred, truth): (Vec<u8>, Vec<u8>) = pairs.iter().copied().unzip();
            let c = confusion(&pred, &truth, None).unwrap();
            prop_assert_eq!(c.total(), pred.len());
            let mut idx: Vec<usize> = (0..pred.len()).collect();
            SeededRng::new(seed).shuffle(&mut idx);
            let pp: Vec<u8> = idx.iter().map(|&i| pred[i]).collect();
            let tt: Vec<u8> = idx.iter().map(|&i| truth[i]).collect();
            prop_assert_eq!(confusion(&pp, &tt, None).unwrap(), c);
            let (p, r, f) = (c.precision().value, c.recall().value, c.f1().value);
            prop_assert!(f <= (2.0 * p).min(2.0 * r) + 1e-12);
            prop_assert!(f <= p.max(r) + 1e-12);
        }
    }
}
