//! Flat sample vectors with shape metadata.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::ConfigError;

/// Logical layout of a [`StateVector`]'s entries.
///
/// `Grid` frames are stored frame-major, each frame row-major:
/// `index = frame * (height * width) + row * width + col`.
/// `Path` waypoints are stored as consecutive `(x, y)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeTag {
    Flat,
    Grid {
        height: usize,
        width: usize,
        frames: usize,
    },
    Path {
        n_points: usize,
    },
}

impl ShapeTag {
    /// Number of entries the shape describes, if it pins one down.
    /// `Flat` matches any length.
    pub fn expected_len(&self) -> Option<usize> {
        match *self {
            ShapeTag::Flat => None,
            ShapeTag::Grid {
                height,
                width,
                frames,
            } => Some(height * width * frames),
            ShapeTag::Path { n_points } => Some(n_points * 2),
        }
    }
}

/// A sample: a flat vector of 64-bit reals plus shape metadata.
///
/// Invariants enforced at construction: the data length matches the shape
/// product and every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    data: Vec<f64>,
    shape: ShapeTag,
}

impl StateVector {
    pub fn new(data: Vec<f64>, shape: ShapeTag) -> Result<Self, ConfigError> {
        if let Some(expected) = shape.expected_len() {
            if expected != data.len() {
                return Err(ConfigError::ShapeMismatch {
                    expected,
                    actual: data.len(),
                });
            }
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(ConfigError::NonFiniteEntry { index });
        }
        Ok(Self { data, shape })
    }

    pub fn flat(data: Vec<f64>) -> Result<Self, ConfigError> {
        Self::new(data, ShapeTag::Flat)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: vec![0.0; dim],
            shape: ShapeTag::Flat,
        }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn shape(&self) -> ShapeTag {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Same shape, new entries. Checks the replacement like `new` does.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self, ConfigError> {
        Self::new(data, self.shape)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_product_must_match() {
        let err = StateVector::new(
            vec![0.0; 5],
            ShapeTag::Grid {
                height: 2,
                width: 2,
                frames: 2,
            },
        )
        .unwrap_err();
        assert_eq!(
            err,
            ConfigError::ShapeMismatch {
                expected: 8,
                actual: 5
            }
        );
    }

    #[test]
    fn rejects_non_finite_entries() {
        let err = StateVector::flat(vec![0.0, f64::NAN]).unwrap_err();
        assert_eq!(err, ConfigError::NonFiniteEntry { index: 1 });
        let err = StateVector::flat(vec![f64::INFINITY]).unwrap_err();
        assert_eq!(err, ConfigError::NonFiniteEntry { index: 0 });
    }

    #[test]
    fn path_shape_counts_pairs() {
        let path = StateVector::new(vec![0.0; 6], ShapeTag::Path { n_points: 3 }).unwrap();
        assert_eq!(path.dim(), 6);
        assert_eq!(path.shape().expected_len(), Some(6));
    }

    #[test]
    fn flat_accepts_any_length() {
        assert!(StateVector::flat(vec![1.0, 2.0, 3.0]).is_ok());
        assert!(StateVector::flat(Vec::new()).is_ok());
    }
}
