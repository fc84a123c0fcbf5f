//! Adversarial losses over per-window discriminator probabilities.

/// Probabilities are clamped to `[EPS, 1 − EPS]` before taking logs.
pub const EPS: f64 = 1e-7;

#[inline]
pub(crate) fn clamp(p: f64) -> f64 {
    p.clamp(EPS, 1.0 - EPS)
}

/// Discriminator loss: mean cross-entropy with real windows labelled 1 and
/// generated windows labelled 0, `mean(−ln D(x)) + mean(−ln(1 − D(G(z))))`.
/// With equally sized batches this is the per-pair sum averaged over pairs.
pub fn d_loss(real_scores: &[f64], fake_scores: &[f64]) -> f64 {
    let real = mean(real_scores.iter().map(|&p| -clamp(p).ln()));
    let fake = mean(fake_scores.iter().map(|&p| -(1.0 - clamp(p)).ln()));
    real + fake
}

/// Non-saturating generator loss `mean(−ln D(G(z)))`.
pub fn g_loss(fake_scores: &[f64]) -> f64 {
    mean(fake_scores.iter().map(|&p| -clamp(p).ln()))
}

/// dLoss/dScore for the real half of [`d_loss`].
pub(crate) fn d_loss_real_grad(p: f64, n: usize) -> f64 {
    -1.0 / (n as f64 * clamp(p))
}

/// dLoss/dScore for the generated half of [`d_loss`].
pub(crate) fn d_loss_fake_grad(p: f64, n: usize) -> f64 {
    1.0 / (n as f64 * (1.0 - clamp(p)))
}

/// dLoss/dScore for [`g_loss`].
pub(crate) fn g_loss_grad(p: f64, n: usize) -> f64 {
    -1.0 / (n as f64 * clamp(p))
}

fn mean(it: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = it.len();
    if n == 0 {
        0.0
    } else {
        it.sum::<f64>() / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uninformative_discriminator() {
        assert!((d_loss(&[0.5], &[0.5]) - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!((d_loss(&[0.5], &[0.5]) - 1.3863).abs() < 1e-4);
        assert!((g_loss(&[0.5]) - std::f64::consts::LN_2).abs() < 1e-6);
    }

    #[test]
    fn perfect_discriminator() {
        assert!(d_loss(&[1.0 - EPS], &[EPS]) < 1e-6);
        assert!(d_loss(&[1.0], &[0.0]) < 1e-6);
        assert!(g_loss(&[1.0]) < 1e-6);
    }

    #[test]
    fn mixed_batch_sizes() {
        // (−ln 0.9 − ln 0.8)/2 + (−ln 0.9)/1, evaluated term by term.
        let expected =
            (0.105_360_515_657_826_3 + 0.223_143_551_314_209_7) / 2.0 + 0.105_360_515_657_826_3;
        assert!((d_loss(&[0.9, 0.8], &[0.1]) - expected).abs() < 1e-12);
        assert!((d_loss(&[0.9, 0.8], &[0.1]) - 0.2697).abs() < 1e-4);
    }

    #[test]
    fn losses_non_negative_and_g_monotone() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        for &p in &grid {
            for &q in &grid {
                assert!(d_loss(&[p], &[q]) >= 0.0);
            }
            assert!(g_loss(&[p]) >= 0.0);
        }
        for w in grid.windows(2) {
            assert!(g_loss(&[w[1]]) <= g_loss(&[w[0]]));
        }
        assert!(g_loss(&[0.3]) > g_loss(&[0.31]));
    }

    #[test]
    fn analytic_grads_match_difference_quotients() {
        for &p in &[0.1, 0.5, 0.93] {
            let h = 1e-6;
            let fd = |f: &dyn Fn(f64) -> f64| (f(p + h) - f(p - h)) / (2.0 * h);
            assert!((d_loss_real_grad(p, 1) - fd(&|x| d_loss(&[x], &[]))).abs() < 1e-6);
            assert!((d_loss_fake_grad(p, 1) - fd(&|x| d_loss(&[], &[x]))).abs() < 1e-6);
            assert!((g_loss_grad(p, 1) - fd(&|x| g_loss(&[x]))).abs() < 1e-6);
        }
    }
}
