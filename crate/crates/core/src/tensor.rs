use std::ops::{Index, IndexMut};

use serde::{Serialize, Serializer};

/// Dense row-major array of rank `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<const R: usize> {
    shape: [usize; R],
    data: Vec<f64>,
}

pub type Tensor3 = Tensor<3>;
pub type Tensor4 = Tensor<4>;

impl<const R: usize> Tensor<R> {
    pub fn zeros(shape: [usize; R]) -> Self {
        Tensor {
            shape,
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_fn(shape: [usize; R], mut f: impl FnMut([usize; R]) -> f64) -> Self {
        let mut t = Self::zeros(shape);
        for flat in 0..t.data.len() {
            let idx = t.unflatten(flat);
            t.data[flat] = f(idx);
        }
        t
    }

    pub fn from_vec(shape: [usize; R], data: Vec<f64>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor { shape, data }
    }

    pub fn shape(&self) -> [usize; R] {
        self.shape
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn flatten(&self, idx: [usize; R]) -> usize {
        let mut flat = 0;
        for d in 0..R {
            debug_assert!(
                idx[d] < self.shape[d],
                "index {idx:?} out of shape {:?}",
                self.shape
            );
            flat = flat * self.shape[d] + idx[d];
        }
        flat
    }

    fn unflatten(&self, mut flat: usize) -> [usize; R] {
        let mut idx = [0; R];
        for d in (0..R).rev() {
            idx[d] = flat % self.shape[d];
            flat /= self.shape[d];
        }
        idx
    }

    /// Nested `Vec` representation, outermost index first.
    pub fn to_nested(&self) -> serde_json::Value {
        fn nest(data: &[f64], shape: &[usize]) -> serde_json::Value {
            if shape.is_empty() {
                return serde_json::json!(data[0]);
            }
            let stride: usize = shape[1..].iter().product();
            serde_json::Value::Array(
                (0..shape[0])
                    .map(|i| nest(&data[i * stride..(i + 1) * stride], &shape[1..]))
                    .collect(),
            )
        }
        if self.data.is_empty() {
            return serde_json::Value::Array(vec![]);
        }
        nest(&self.data, &self.shape)
    }
}

impl<const R: usize> Index<[usize; R]> for Tensor<R> {
    type Output = f64;
    fn index(&self, idx: [usize; R]) -> &f64 {
        &self.data[self.flatten(idx)]
    }
}

impl<const R: usize> IndexMut<[usize; R]> for Tensor<R> {
    fn index_mut(&mut self, idx: [usize; R]) -> &mut f64 {
        let flat = self.flatten(idx);
        &mut self.data[flat]
    }
}

impl<const R: usize> Serialize for Tensor<R> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_nested().serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_row_major() {
        let t = Tensor::from_fn([2, 3, 4], |[i, j, k]| (100 * i + 10 * j + k) as f64);
        assert_eq!(t[[1, 2, 3]], 123.0);
        assert_eq!(t.as_slice()[4], 10.0);
        let nested = t.to_nested();
        assert_eq!(nested[1][2][3], 123.0);
    }
}
