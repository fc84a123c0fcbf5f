//! Dense, row-major, 64-bit tensors.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::shape("Tensor::from_vec", n, data.len()));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Builds a 2-D tensor from nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::shape("Tensor::from_rows", cols, (i, row.len())));
            }
            data.extend_from_slice(row);
        }
        Tensor::from_vec(&[rows.len(), cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Self> {
        Tensor::from_vec(shape, self.data)
    }

    /// Contiguous slice along the leading axis.
    pub fn outer(&self, i: usize) -> &[f64] {
        let stride: usize = self.shape[1..].iter().product();
        &self.data[i * stride..(i + 1) * stride]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Matrix product of two 2-D tensors.
    pub fn matmul(&self, rhs: &Tensor) -> Result<Tensor> {
        let (&[n, k], &[k2, m]) = (self.shape.as_slice(), rhs.shape.as_slice()) else {
            return Err(Error::shape(
                "matmul",
                "2-D operands",
                (&self.shape, &rhs.shape),
            ));
        };
        if k != k2 {
            return Err(Error::shape("matmul", k, k2));
        }
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let row = &self.data[i * k..(i + 1) * k];
            let acc = &mut out[i * m..(i + 1) * m];
            for (p, &a) in row.iter().enumerate() {
                let rrow = &rhs.data[p * m..(p + 1) * m];
                for (o, &b) in acc.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        Tensor::from_vec(&[n, m], out)
    }

    pub fn add(&self, rhs: &Tensor) -> Result<Tensor> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn mul(&self, rhs: &Tensor) -> Result<Tensor> {
        self.zip_with(rhs, "mul", |a, b| a * b)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn tanh(&self) -> Tensor {
        self.map(f64::tanh)
    }

    pub fn sigmoid(&self) -> Tensor {
        self.map(sigmoid)
    }

    fn zip_with(
        &self,
        rhs: &Tensor,
        context: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor> {
        if self.shape != rhs.shape {
            return Err(Error::shape(context, &self.shape, &rhs.shape));
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

/// Logistic function, evaluated without overflow for large |x|.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn activations_at_zero() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(0.0f64.tanh(), 0.0);
    }

    #[test]
    fn activation_ranges() {
        for &x in &[-800.0, -30.0, -1.0, 0.3, 25.0, 800.0] {
            let s = sigmoid(x);
            assert!((0.0..=1.0).contains(&s) && s.is_finite());
            let t = f64::tanh(x);
            assert!((-1.0..=1.0).contains(&t));
        }
        assert!(sigmoid(-10.0) > 0.0 && sigmoid(10.0) < 1.0);
    }

    #[test]
    fn matmul_identity() {
        let a = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let id = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(a.matmul(&id).unwrap(), a);
    }

    #[test]
    fn matmul_rectangular() {
        let a = Tensor::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        let b = Tensor::from_rows(&[vec![1.0], vec![0.5], vec![-1.0]]).unwrap();
        assert_eq!(a.matmul(&b).unwrap().data(), &[-1.0]);
        assert!(b.matmul(&b).is_err());
    }

    #[test]
    fn elementwise_shape_checks() {
        let a = Tensor::zeros(&[2, 3]);
        let b = Tensor::zeros(&[3, 2]);
        assert!(a.add(&b).is_err());
        assert!(a.mul(&b).is_err());
        let c = Tensor::from_vec(&[2], vec![1.0, -2.0]).unwrap();
        let d = Tensor::from_vec(&[2], vec![3.0, 4.0]).unwrap();
        assert_eq!(c.add(&d).unwrap().data(), &[4.0, 2.0]);
        assert_eq!(c.mul(&d).unwrap().data(), &[3.0, -8.0]);
        assert!(Tensor::from_vec(&[2, 2], vec![0.0; 3]).is_err());
    }
}
