//! Per-timestep baseline detectors. They see one row at a time and so
//! cannot use temporal context; pass data already scaled the same way for
//! train and test.

use crate::dataset::{fit_pca, MultivariateSeries};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineMethod {
    Pca { components: usize },
    Knn { neighbours: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineScore {
    pub scores: Vec<f64>,
    pub method: BaselineMethod,
}

fn check_vars(train: &MultivariateSeries, test: &MultivariateSeries) -> Result<()> {
    if train.num_vars() != test.num_vars() {
        return Err(Error::shape(
            "baseline test variables",
            train.num_vars(),
            test.num_vars(),
        ));
    }
    Ok(())
}

/// Squared reconstruction error of each test row under a `k`-component PCA
/// fitted on `train`.
pub fn pca_detector(
    train: &MultivariateSeries,
    test: &MultivariateSeries,
    k: usize,
) -> Result<BaselineScore> {
    check_vars(train, test)?;
    let pca = fit_pca(train, k)?;
    let recon = pca.reconstruct(&pca.project(test)?)?;
    let scores = test
        .values()
        .chunks(test.num_vars())
        .zip(recon.values().chunks(test.num_vars()))
        .map(|(x, r)| x.iter().zip(r).map(|(a, b)| (a - b) * (a - b)).sum())
        .collect();
    Ok(BaselineScore {
        scores,
        method: BaselineMethod::Pca { components: k },
    })
}

/// Mean Euclidean distance from each test row to its `k` nearest training
/// rows. Exact search.
pub fn knn_detector(
    train: &MultivariateSeries,
    test: &MultivariateSeries,
    k: usize,
) -> Result<BaselineScore> {
    check_vars(train, test)?;
    if k == 0 || k > train.len() {
        return Err(Error::invalid(format!(
            "k must lie in 1..={}, got {k}",
            train.len()
        )));
    }
    let mut dist = vec![0.0; train.len()];
    let scores = test
        .rows()
        .map(|x| {
            for (d, y) in dist.iter_mut().zip(train.rows()) {
                *d = x
                    .iter()
                    .zip(y)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
            }
            if k < dist.len() {
                dist.select_nth_unstable_by(k - 1, f64::total_cmp);
            }
            dist[..k].iter().sum::<f64>() / k as f64
        })
        .collect();
    Ok(BaselineScore {
        scores,
        method: BaselineMethod::Knn { neighbours: k },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;
    use proptest::prelude::*;

    fn random_series(rng: &mut SeededRng, len: usize, vars: usize) -> MultivariateSeries {
        let v = (0..len * vars).map(|_| rng.normal()).collect();
        MultivariateSeries::from_values(v, vars).unwrap()
    }

    #[test]
    fn pca_scores_in_and_off_subspace() {
        // Training data on the line y = 2x (plus a tiny second direction).
        let mut rng = SeededRng::new(3);
        let mut v = Vec::new();
        for _ in 0..100 {
            let t = rng.normal();
            v.extend([t, 2.0 * t]);
        }
        let train = MultivariateSeries::from_values(v, 2).unwrap();
        let mean = [
            train.column(0).iter().sum::<f64>() / 100.0,
            train.column(1).iter().sum::<f64>() / 100.0,
        ];
        let on = [mean[0] + 0.7, mean[1] + 1.4];
        // Orthogonal to (1, 2) with length δ = 0.3.
        let n = 0.3 / 5f64.sqrt();
        let off = [on[0] + 2.0 * n, on[1] - n];
        let test = MultivariateSeries::from_values([on, off].concat(), 2).unwrap();
        let s = pca_detector(&train, &test, 1).unwrap();
        assert!(s.scores[0] < 1e-20);
        assert!((s.scores[1] - 0.09).abs() < 1e-12, "{}", s.scores[1]);
    }

    #[test]
    fn pca_matches_direct_recomputation() {
        let mut rng = SeededRng::new(8);
        let train = random_series(&mut rng, 80, 4);
        let test = random_series(&mut rng, 20, 4);
        let s = pca_detector(&train, &test, 2).unwrap();
        let pca = fit_pca(&train, 2).unwrap();
        for (t, x) in test.rows().enumerate() {
            let centred: Vec<f64> = x.iter().zip(&pca.mean).map(|(a, m)| a - m).collect();
            let mut recon = pca.mean.clone();
            for c in 0..2 {
                let axis = pca.component(c);
                let coef: f64 = centred.iter().zip(axis).map(|(a, b)| a * b).sum();
                for (r, a) in recon.iter_mut().zip(axis) {
                    *r += coef * a;
                }
            }
            let e: f64 = x.iter().zip(&recon).map(|(a, b)| (a - b).powi(2)).sum();
            assert!((s.scores[t] - e).abs() < 1e-12);
        }
    }

    fn brute_knn(train: &MultivariateSeries, x: &[f64], k: usize) -> f64 {
        let mut d: Vec<f64> = train
            .rows()
            .map(|y| {
                x.iter()
                    .zip(y)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        d.sort_by(f64::total_cmp);
        d[..k].iter().sum::<f64>() / k as f64
    }

    #[test]
    fn knn_matches_sorted_oracle() {
        let mut rng = SeededRng::new(21);
        let train = random_series(&mut rng, 60, 3);
        let test = random_series(&mut rng, 15, 3);
        for k in [1, 5, 60] {
            let s = knn_detector(&train, &test, k).unwrap();
            for (t, x) in test.rows().enumerate() {
                assert!((s.scores[t] - brute_knn(&train, x, k)).abs() < 1e-12);
            }
        }
        let s = knn_detector(&train, &train.slice(4, 5).unwrap(), 1).unwrap();
        assert_eq!(s.scores, vec![0.0]);
        assert!(knn_detector(&train, &test, 0).is_err());
        assert!(knn_detector(&train, &test, 61).is_err());
    }

    proptest! {
        #[test]
        fn knn_is_translation_invariant(seed in 0u64..500, shift in prop::array::uniform2(-50.0f64..50.0), k in 1usize..10) {
            let mut rng = SeededRng::new(seed);
            let train = random_series(&mut rng, 30, 2);
            let test = random_series(&mut rng, 10, 2);
            let moved = |s: &MultivariateSeries| {
                let v = s.values().chunks(2).flat_map(|r| [r[0] + shift[0], r[1] + shift[1]]).collect();
                MultivariateSeries::from_values(v, 2).unwrap()
            };
            let a = knn_detector(&train, &test, k).unwrap();
            let b = knn_detector(&moved(&train), &moved(&test), k).unwrap();
            for (x, y) in a.scores.iter().zip(&b.scores) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
