use std::fmt;

use crate::error::{Error, Result};
use crate::numtensor::Rng;

/// Shape of a rank-4 tensor in `(batch, rows, cols, channels)` order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dims {
    pub n: usize,
    pub h: usize,
    pub w: usize,
    pub c: usize,
}

impl Dims {
    pub fn new(n: usize, h: usize, w: usize, c: usize) -> Result<Self> {
        let dims = Dims { n, h, w, c };
        dims.checked_len()?;
        Ok(dims)
    }

    /// Number of elements, rejecting zero extents and `usize` overflow.
    pub fn checked_len(&self) -> Result<usize> {
        if self.n == 0 || self.h == 0 || self.w == 0 || self.c == 0 {
            return Err(Error::Size(format!("zero extent in {self}")));
        }
        self.n
            .checked_mul(self.h)
            .and_then(|v| v.checked_mul(self.w))
            .and_then(|v| v.checked_mul(self.c))
            .ok_or_else(|| Error::Size(format!("element count of {self} overflows")))
    }

    pub fn len(&self) -> usize {
        self.n * self.h * self.w * self.c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Elements in one batch item.
    pub fn item_len(&self) -> usize {
        self.h * self.w * self.c
    }

    pub fn with_batch(self, n: usize) -> Self {
        Dims { n, ..self }
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.n, self.h, self.w, self.c)
    }
}

/// Dense row-major `(n, h, w, c)` array of `f64` with an optional gradient plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    dims: Dims,
    values: Vec<f64>,
    grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn new(dims: Dims, fill: f64) -> Result<Self> {
        let len = dims.checked_len()?;
        Ok(Tensor {
            dims,
            values: vec![fill; len],
            grad: None,
        })
    }

    pub fn zeros(dims: Dims) -> Result<Self> {
        Self::new(dims, 0.0)
    }

    /// Independent N(0, std²) entries.
    pub fn randn(dims: Dims, std: f64, rng: &mut Rng) -> Result<Self> {
        let mut t = Self::zeros(dims)?;
        for v in t.values_mut() {
            *v = std * rng.standard_normal();
        }
        Ok(t)
    }

    pub fn from_vec(dims: Dims, values: Vec<f64>) -> Result<Self> {
        let len = dims.checked_len()?;
        if values.len() != len {
            return Err(Error::Shape(format!(
                "{} values supplied for dims {dims} ({len} expected)",
                values.len()
            )));
        }
        Ok(Tensor {
            dims,
            values,
            grad: None,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    pub fn set_grad(&mut self, grad: Vec<f64>) -> Result<()> {
        if grad.len() != self.values.len() {
            return Err(Error::Shape(format!(
                "gradient of length {} for tensor {}",
                grad.len(),
                self.dims
            )));
        }
        self.grad = Some(grad);
        Ok(())
    }

    pub fn clear_grad(&mut self) {
        self.grad = None;
    }

    #[inline]
    pub fn index(&self, n: usize, y: usize, x: usize, c: usize) -> usize {
        let d = self.dims;
        ((n * d.h + y) * d.w + x) * d.c + c
    }

    #[inline]
    pub fn at(&self, n: usize, y: usize, x: usize, c: usize) -> f64 {
        self.values[self.index(n, y, x, c)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, y: usize, x: usize, c: usize, v: f64) {
        let i = self.index(n, y, x, c);
        self.values[i] = v;
    }

    /// Values of batch item `n`.
    pub fn item(&self, n: usize) -> &[f64] {
        let len = self.dims.item_len();
        &self.values[n * len..(n + 1) * len]
    }

    /// Copy of batch item `n` as a single-item tensor.
    pub fn item_tensor(&self, n: usize) -> Tensor {
        Tensor {
            dims: self.dims.with_batch(1),
            values: self.item(n).to_vec(),
            grad: None,
        }
    }

    /// Stack single- or multi-item tensors of equal item shape along the batch axis.
    pub fn stack(items: &[Tensor]) -> Result<Tensor> {
        let first = items
            .first()
            .ok_or_else(|| Error::Shape("cannot stack zero tensors".into()))?;
        let item_dims = first.dims;
        let mut n = 0;
        let mut values = Vec::new();
        for t in items {
            let d = t.dims;
            if (d.h, d.w, d.c) != (item_dims.h, item_dims.w, item_dims.c) {
                return Err(Error::Shape(format!("cannot stack {d} with {item_dims}")));
            }
            n += d.n;
            values.extend_from_slice(&t.values);
        }
        Tensor::from_vec(item_dims.with_batch(n), values)
    }

    pub fn same_dims(&self, other: &Tensor, what: &str) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::Shape(format!(
                "{what}: dims {} and {} differ",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    pub fn dot(&self, other: &Tensor) -> Result<f64> {
        self.same_dims(other, "dot")?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> Result<f64> {
        self.same_dims(other, "max_abs_diff")?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}
