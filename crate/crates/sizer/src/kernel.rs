//! Kernel weight functions for the local fits.
//!
//! Weights are relative: `weight(0) == 1` for both shapes, and the `1/h`
//! density normalization is omitted because it cancels in every ratio this
//! crate computes (normal equations, effective sample size, sandwich
//! variance).

/// Kernel shape. The Gaussian is the scale-space convention; the uniform
/// kernel is kept because it makes the effective sample size an exact point
/// count, which several diagnostics rely on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelShape {
    Gaussian,
    Uniform,
}

/// A symmetric kernel with compact support after truncation.
///
/// `truncation_radius` is a multiple of the bandwidth: weights are exactly
/// zero for `|i - i0| > truncation_radius * h`. The Gaussian default radius 5
/// drops relative weights below 3.8e-6 and bounds the per-pixel cost of the
/// covariance-weighted sums by the window size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    shape: KernelShape,
    truncation_radius: f64,
}

impl Kernel {
    pub fn gaussian() -> Self {
        Self {
            shape: KernelShape::Gaussian,
            truncation_radius: 5.0,
        }
    }

    pub fn uniform() -> Self {
        Self {
            shape: KernelShape::Uniform,
            truncation_radius: 1.0,
        }
    }

    pub fn with_radius(shape: KernelShape, truncation_radius: f64) -> Self {
        assert!(
            truncation_radius > 0.0 && truncation_radius.is_finite(),
            "truncation radius must be positive and finite"
        );
        Self {
            shape,
            truncation_radius,
        }
    }

    pub fn shape(&self) -> KernelShape {
        self.shape
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    /// Relative weight at scaled offset `u = (i - i0) / h`. Exactly zero
    /// beyond the truncation radius; the boundary itself is kept.
    pub fn weight(&self, u: f64) -> f64 {
        if u.abs() > self.truncation_radius {
            return 0.0;
        }
        match self.shape {
            KernelShape::Gaussian => (-0.5 * u * u).exp(),
            KernelShape::Uniform => 1.0,
        }
    }

    /// Relative weight at integer offset `d = i - i0` for bandwidth `h`.
    pub fn weight_at(&self, d: f64, h: f64) -> f64 {
        self.weight(d / h)
    }

    /// Inclusive 0-based index range `[lo, hi]` of design points with
    /// nonzero weight around `i0`, clipped to `0..n`.
    pub fn window(&self, i0: usize, h: f64, n: usize) -> (usize, usize) {
        let radius = self.truncation_radius * h;
        let lo = ((i0 as f64) - radius).ceil().max(0.0) as usize;
        let hi = (((i0 as f64) + radius).floor() as usize).min(n - 1);
        (lo, hi)
    }
}
