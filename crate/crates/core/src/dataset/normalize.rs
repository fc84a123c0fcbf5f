use super::MultivariateSeries;
use crate::error::{Error, Result};

/// Per-variable extrema used for min–max scaling into `[−1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizationState {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationState {
    pub fn fit(series: &MultivariateSeries) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::invalid("cannot fit normalizer on an empty series"));
        }
        let t = series.num_vars();
        let mut min = vec![f64::INFINITY; t];
        let mut max = vec![f64::NEG_INFINITY; t];
        for row in series.rows() {
            for j in 0..t {
                min[j] = min[j].min(row[j]);
                max[j] = max[j].max(row[j]);
            }
        }
        Ok(NormalizationState { min, max })
    }

    pub fn num_vars(&self) -> usize {
        self.min.len()
    }

    /// `2·(x − min)/(max − min) − 1`; constant variables map to 0. Values
    /// outside the fitted range land outside `[−1, 1]`.
    pub fn normalize(&self, series: &MultivariateSeries) -> Result<MultivariateSeries> {
        self.check(series)?;
        let values = series
            .rows()
            .flat_map(|row| {
                row.iter().enumerate().map(|(j, &x)| {
                    let span = self.max[j] - self.min[j];
                    if span > 0.0 {
                        2.0 * (x - self.min[j]) / span - 1.0
                    } else {
                        0.0
                    }
                })
            })
            .collect();
        series.with_values(values, series.num_vars())
    }

    /// Inverse of [`normalize`](Self::normalize); constant variables return
    /// their fitted value.
    pub fn denormalize(&self, series: &MultivariateSeries) -> Result<MultivariateSeries> {
        self.check(series)?;
        let values = series
            .rows()
            .flat_map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, &y)| self.min[j] + (y + 1.0) * 0.5 * (self.max[j] - self.min[j]))
            })
            .collect();
        series.with_values(values, series.num_vars())
    }

    fn check(&self, series: &MultivariateSeries) -> Result<()> {
        if series.num_vars() != self.num_vars() {
            return Err(Error::shape(
                "normalization variable count",
                self.num_vars(),
                series.num_vars(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(values: Vec<f64>, t: usize) -> MultivariateSeries {
        MultivariateSeries::from_values(values, t).unwrap()
    }

    #[test]
    fn fit_examples() {
        let s = series(vec![1.0, 2.0, 3.0, 2.0, 5.0, 2.0], 2);
        let n = NormalizationState::fit(&s).unwrap();
        assert_eq!(n.min, vec![1.0, 2.0]);
        assert_eq!(n.max, vec![5.0, 2.0]);
        let y = n.normalize(&s).unwrap();
        assert_eq!(y.column(0), vec![-1.0, 0.0, 1.0]);
        assert_eq!(y.column(1), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn independent_extrema_and_mismatch() {
        let s = series(vec![3.0, -1.0, -4.0, 10.0], 2);
        let n = NormalizationState::fit(&s).unwrap();
        assert_eq!(
            (n.min.clone(), n.max.clone()),
            (vec![-4.0, -1.0], vec![3.0, 10.0])
        );
        assert!(n.normalize(&series(vec![1.0; 3], 3)).is_err());
    }

    #[test]
    fn test_values_may_leave_range() {
        let n = NormalizationState::fit(&series(vec![0.0, 1.0], 1)).unwrap();
        let y = n.normalize(&series(vec![2.0], 1)).unwrap();
        assert_eq!(y.values(), &[3.0]);
    }

    proptest! {
        #[test]
        fn round_trip_and_range(values in prop::collection::vec(-1e6f64..1e6, 3..60)) {
            let t = 3;
            let m = values.len() / t;
            let s = series(values[..m * t].to_vec(), t);
            let n = NormalizationState::fit(&s).unwrap();
            let y = n.normalize(&s).unwrap();
            prop_assert!(y.values().iter().all(|v| (-1.0..=1.0).contains(v)));
            let back = n.denormalize(&y).unwrap();
            for (a, b) in back.values().iter().zip(s.values()) {
                prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
            }
        }
    }
}
