//! Dense row-major n-dimensional grid container.
//!
//! Every raster in the crate (landscape fields, fire masks, accumulators,
//! loss gradients) is a [`Grid`]. The last axis varies fastest.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T> Grid<T> {
    /// Wraps `data` with `shape`. Fails if the element count disagrees.
    pub fn from_vec(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::LengthMismatch {
                left: n,
                right: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn from_fn2(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self {
            shape: vec![height, width],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Height and width of a rank-2 (or higher) grid.
    pub fn dims2(&self) -> (usize, usize) {
        match self.shape.as_slice() {
            [h, w, ..] => (*h, *w),
            [n] => (1, *n),
            [] => (0, 0),
        }
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            shape: self.shape.clone(),
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn ensure_shape(&self, expected: &[usize]) -> Result<()> {
        if self.shape != expected {
            return Err(Error::ShapeMismatch {
                expected: expected.to_vec(),
                actual: self.shape.clone(),
            });
        }
        Ok(())
    }
}

impl<T: Clone> Grid<T> {
    pub fn filled(shape: Vec<usize>, value: T) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![value; n],
        }
    }
}

impl<T: Copy> Grid<T> {
    #[inline]
    pub fn get2(&self, row: usize, col: usize) -> T {
        self.data[row * self.shape[1] + col]
    }

    #[inline]
    pub fn set2(&mut self, row: usize, col: usize, value: T) {
        let w = self.shape[1];
        self.data[row * w + col] = value;
    }
}

impl Grid<bool> {
    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

impl Grid<f64> {
    pub fn zeros(shape: Vec<usize>) -> Self {
        Self::filled(shape, 0.0)
    }

    /// Narrows to single precision, as stored in grid files.
    pub fn to_f32(&self) -> Grid<f32> {
        self.map(|&v| v as f32)
    }
}

impl Grid<f32> {
    pub fn to_f64(&self) -> Grid<f64> {
        self.map(|&v| f64::from(v))
    }
}
