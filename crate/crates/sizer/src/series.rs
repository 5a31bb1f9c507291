//! Equally spaced time series with an implicit unit time index.

use crate::error::{Result, SizerError};

/// An equally spaced, real-valued series. The design points are the positions
/// `0..n` (time index with unit spacing); calendar information is out of scope.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    /// Minimum length accepted anywhere in the pipeline.
    pub const MIN_LEN: usize = 12;

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < Self::MIN_LEN {
            return Err(SizerError::SeriesTooShort {
                n: values.len(),
                min: Self::MIN_LEN,
            });
        }
        for (index, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(SizerError::NonFinite { index });
            }
        }
        Ok(Self { values })
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

    /// The series with time running backwards.
    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { values }
    }
}
