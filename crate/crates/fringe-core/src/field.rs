//! Shared grid types: complex fields and phase maps.
//!
//! Both are dense row-major grids indexed as `(x, y)` with `y` the slow axis.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

/// Wrap a phase value into the principal interval `(-pi, pi]`.
#[inline]
pub fn wrap_phase(v: f64) -> f64 {
    let mut w = v.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

/// 2D grid of complex samples, row-major.
///
/// Carries the analytic fringe signal and every spectral intermediate.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    width: usize,
    height: usize,
    samples: Vec<Complex64>,
}

impl ComplexField {
    /// Zero-filled field. Panics if either dimension is zero.
    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width >= 1 && height >= 1, "field dimensions must be >= 1");
        Self {
            width,
            height,
            samples: vec![Complex64::new(0.0, 0.0); width * height],
        }
    }

    pub fn from_samples(width: usize, height: usize, samples: Vec<Complex64>) -> Self {
        assert_eq!(samples.len(), width * height);
        Self {
            width,
            height,
            samples,
        }
    }

    /// Build a field by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self::from_samples(width, height, samples)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.samples[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: Complex64) {
        self.samples[y * self.width + x] = v;
    }

    #[inline]
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    #[inline]
    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Sum of `|v|^2` over all samples.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Tag distinguishing wrapped (principal-value) from unwrapped phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseKind {
    Wrapped,
    Unwrapped,
}

/// 2D grid of real phase values in radians, row-major.
///
/// A `Wrapped` map keeps every value in `(-pi, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    kind: PhaseKind,
}

impl PhaseMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>, kind: PhaseKind) -> Self {
        assert_eq!(values.len(), width * height);
        Self {
            width,
            height,
            values,
            kind,
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        kind: PhaseKind,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, values, kind)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn kind(&self) -> PhaseKind {
        self.kind
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise wrap into `(-pi, pi]`, retagging as wrapped.
    pub fn wrapped(&self) -> PhaseMap {
        PhaseMap {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| wrap_phase(v)).collect(),
            kind: PhaseKind::Wrapped,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_phase_principal_interval() {
        assert_eq!(wrap_phase(0.0), 0.0);
        assert!((wrap_phase(PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
        assert!((wrap_phase(-PI - 0.1) - (PI - 0.1)).abs() < 1e-12);
        // -pi maps to the closed end +pi
        assert!((wrap_phase(-PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(7.0 * TAU + 1.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn field_indexing_row_major() {
        let f = ComplexField::from_fn(3, 2, |x, y| Complex64::new(x as f64, y as f64));
        assert_eq!(f.get(2, 1), Complex64::new(2.0, 1.0));
        assert_eq!(f.samples()[5], Complex64::new(2.0, 1.0));
    }
}
