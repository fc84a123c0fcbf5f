//! Central-difference gradients, used as the oracle for every analytic
//! backward pass in the crate.

use crate::error::{Error, Result};

/// `(f(p + h·eᵢ) − f(p − h·eᵢ)) / 2h` for every coordinate `i`.
pub fn finite_diff_grad<F>(mut f: F, params: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut p = params.to_vec();
    let mut grad = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + h;
        let up = f(&p);
        p[i] = orig - h;
        let down = f(&p);
        p[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite(format!(
                "finite_diff_grad: f is not finite near coordinate {i}"
            )));
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// `|a − b| / max(|a|, |b|, floor)`; the floor keeps near-zero pairs from
/// producing meaningless ratios.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square() {
        let g = finite_diff_grad(|p| p[0] * p[0], &[3.0], 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn product() {
        let g = finite_diff_grad(|p| p[0] * p[1], &[2.0, 3.0], 1e-5).unwrap();
        assert!((g[0] - 3.0).abs() < 1e-6 && (g[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn non_finite_is_error() {
        assert!(finite_diff_grad(|p| 1.0 / p[0], &[0.0], 1e-5).is_ok());
        assert!(finite_diff_grad(|p| (p[0] - 1e-5).ln(), &[0.0], 1e-5).is_err());
    }
}
