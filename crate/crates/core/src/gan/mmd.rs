//! Unbiased squared maximum mean discrepancy with a Gaussian RBF kernel on
//! flattened windows.

use crate::error::{Error, Result};
use crate::lstm::SequenceBatch;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bandwidth {
    /// Median pairwise distance of the pooled sample.
    Median,
    Fixed(f64),
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median of all pairwise Euclidean distances in `a ∪ b`.
pub fn median_bandwidth(a: &SequenceBatch, b: &SequenceBatch) -> f64 {
    let pooled: Vec<&[f64]> = (0..a.batch())
        .map(|i| a.sample(i))
        .chain((0..b.batch()).map(|i| b.sample(i)))
        .collect();
    let mut d = Vec::with_capacity(pooled.len() * pooled.len() / 2);
    for i in 0..pooled.len() {
        for j in i + 1..pooled.len() {
            d.push(sq_dist(pooled[i], pooled[j]));
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    let mid = d.len() / 2;
    let (_, m, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    m.sqrt()
}

/// `1/(n(n−1)) Σ_{i≠j} K(aᵢ,aⱼ) − 2/(nm) Σ K(aᵢ,bⱼ) + 1/(m(m−1)) Σ_{i≠j} K(bᵢ,bⱼ)`
/// with `K(x, y) = exp(−‖x − y‖² / 2σ²)`.
pub fn mmd2(a: &SequenceBatch, b: &SequenceBatch, bandwidth: Bandwidth) -> Result<f64> {
    let (n, m) = (a.batch(), b.batch());
    if n < 2 || m < 2 {
        return Err(Error::invalid(format!(
            "mmd2 needs at least 2 samples per side, got {n} and {m}"
        )));
    }
    if a.steps() * a.dim() != b.steps() * b.dim() {
        return Err(Error::shape(
            "mmd2 window size",
            a.steps() * a.dim(),
            b.steps() * b.dim(),
        ));
    }
    let sigma = match bandwidth {
        Bandwidth::Median => median_bandwidth(a, b),
        Bandwidth::Fixed(s) => s,
    };
    // A degenerate pooled sample (all windows identical) has zero median.
    let sigma = if sigma > 0.0 { sigma } else { 1.0 };
    let gamma = 1.0 / (2.0 * sigma * sigma);
    let k = |x: &[f64], y: &[f64]| (-gamma * sq_dist(x, y)).exp();

    let within = |s: &SequenceBatch| {
        let c = s.batch();
        let mut acc = 0.0;
        for i in 0..c {
            for j in i + 1..c {
                acc += k(s.sample(i), s.sample(j));
            }
        }
        2.0 * acc / (c * (c - 1)) as f64
    };
    let mut cross = 0.0;
    for i in 0..n {
        for j in 0..m {
            cross += k(a.sample(i), b.sample(j));
        }
    }
    Ok(within(a) - 2.0 * cross / (n * m) as f64 + within(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;

    /// Direct transcription of the three double sums.
    fn mmd2_oracle(a: &[Vec<f64>], b: &[Vec<f64>], sigma: f64) -> f64 {
        let k = |x: &Vec<f64>, y: &Vec<f64>| {
            let d: f64 = x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum();
            (-d / (2.0 * sigma * sigma)).exp()
        };
        let (n, m) = (a.len() as f64, b.len() as f64);
        let mut t1 = 0.0;
        for i in 0..a.len() {
            for j in 0..a.len() {
                if i != j {
                    t1 += k(&a[i], &a[j]);
                }
            }
        }
        let mut t2 = 0.0;
        for x in a {
            for y in b {
                t2 += k(x, y);
            }
        }
        let mut t3 = 0.0;
        for i in 0..b.len() {
            for j in 0..b.len() {
                if i != j {
                    t3 += k(&b[i], &b[j]);
                }
            }
        }
        t1 / (n * (n - 1.0)) - 2.0 * t2 / (n * m) + t3 / (m * (m - 1.0))
    }

    fn draw(rng: &mut SeededRng, n: usize, shift: f64) -> (SequenceBatch, Vec<Vec<f64>>) {
        let mut b = SequenceBatch::zeros(n, 4, 2);
        rng.fill_normal(b.data_mut());
        b.data_mut().iter_mut().for_each(|v| *v += shift);
        let rows = (0..n).map(|i| b.sample(i).to_vec()).collect();
        (b, rows)
    }

    #[test]
    fn matches_oracle_on_identical_and_distinct_samples() {
        let mut rng = SeededRng::new(2);
        let (a, ra) = draw(&mut rng, 30, 0.0);
        let (b, rb) = draw(&mut rng, 25, 0.5);
        let sigma = 1.7;
        let got = mmd2(&a, &b, Bandwidth::Fixed(sigma)).unwrap();
        assert!((got - mmd2_oracle(&ra, &rb, sigma)).abs() < 1e-12);
        let same = mmd2(&a, &a, Bandwidth::Fixed(sigma)).unwrap();
        assert!((same - mmd2_oracle(&ra, &ra, sigma)).abs() < 1e-12);
        assert!(same <= 1e-9);
    }

    #[test]
    fn symmetric() {
        let mut rng = SeededRng::new(8);
        let (a, _) = draw(&mut rng, 20, 0.0);
        let (b, _) = draw(&mut rng, 31, 1.0);
        let ab = mmd2(&a, &b, Bandwidth::Median).unwrap();
        let ba = mmd2(&b, &a, Bandwidth::Median).unwrap();
        assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn median_bandwidth_matches_sorted_distances() {
        let mut rng = SeededRng::new(4);
        let (a, ra) = draw(&mut rng, 7, 0.0);
        let (b, rb) = draw(&mut rng, 6, 0.0);
        let pooled: Vec<Vec<f64>> = ra.into_iter().chain(rb).collect();
        let mut d = Vec::new();
        for i in 0..pooled.len() {
            for j in i + 1..pooled.len() {
                d.push(
                    pooled[i]
                        .iter()
                        .zip(&pooled[j])
                        .map(|(p, q)| (p - q).powi(2))
                        .sum::<f64>()
                        .sqrt(),
                );
            }
        }
        d.sort_by(f64::total_cmp);
        assert!((median_bandwidth(&a, &b) - d[d.len() / 2]).abs() < 1e-12);
    }

    #[test]
    fn too_few_samples() {
        let a = SequenceBatch::zeros(1, 2, 1);
        let b = SequenceBatch::zeros(3, 2, 1);
        assert!(mmd2(&a, &b, Bandwidth::Median).is_err());
        assert!(mmd2(&b, &SequenceBatch::zeros(3, 3, 1), Bandwidth::Median).is_err());
    }
}
