//! Flat dense tensor used as the carrier type for all model quantities.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape mismatch for `{name}`: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("data length {len} does not match shape {shape:?}")]
    LengthMismatch { len: usize, shape: Vec<usize> },
}

/// Dense row-major tensor over f64.
///
/// Storage on disk is f32; all in-memory arithmetic runs in f64 so the
/// finite-difference checks have enough headroom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        let numel: usize = shape.iter().product();
        if data.len() != numel {
            return Err(TensorError::LengthMismatch {
                len: data.len(),
                shape,
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; numel],
        }
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        let numel = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; numel],
        }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![value],
        }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.numel(), 1);
        self.data[0]
    }

    /// Rows/cols view of a rank-2 tensor.
    pub fn dims2(&self) -> (usize, usize) {
        debug_assert_eq!(self.shape.len(), 2);
        (self.shape[0], self.shape[1])
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Reshape without copying. Element count must match.
    pub fn reshaped(mut self, shape: Vec<usize>) -> Result<Self, TensorError> {
        let numel: usize = shape.iter().product();
        if numel != self.data.len() {
            return Err(TensorError::LengthMismatch {
                len: self.data.len(),
                shape,
            });
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sq_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// X[m,k] @ Y[k,n] -> [m,n]
pub fn matmul(x: &Tensor, y: &Tensor) -> Tensor {
    let (m, k) = x.dims2();
    let (k2, n) = y.dims2();
    debug_assert_eq!(k, k2);
    let mut out = Tensor::zeros(&[m, n]);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            x.data.as_ptr(),
            k as isize,
            1,
            y.data.as_ptr(),
            n as isize,
            1,
            0.0,
            out.data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    out
}

/// X[m,k] @ Y[n,k]^T -> [m,n]
pub fn matmul_nt(x: &Tensor, y: &Tensor) -> Tensor {
    let (m, k) = x.dims2();
    let (n, k2) = y.dims2();
    debug_assert_eq!(k, k2);
    let mut out = Tensor::zeros(&[m, n]);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            x.data.as_ptr(),
            k as isize,
            1,
            y.data.as_ptr(),
            1,
            k as isize,
            0.0,
            out.data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    out
}

/// X[k,m]^T @ Y[k,n] -> [m,n]
pub fn matmul_tn(x: &Tensor, y: &Tensor) -> Tensor {
    let (k, m) = x.dims2();
    let (k2, n) = y.dims2();
    debug_assert_eq!(k, k2);
    let mut out = Tensor::zeros(&[m, n]);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            x.data.as_ptr(),
            1,
            m as isize,
            y.data.as_ptr(),
            n as isize,
            1,
            0.0,
            out.data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    out
}
