//! Fourier preprocessing: convert a real carrier-fringe intensity image into
//! the analytic complex fringe signal by bandpass filtering and carrier
//! removal.
//!
//! The bandpass is a circular hard mask around the +1 carrier lobe. Carrier
//! removal is an integer-bin spectrum shift when the carrier aligns to DFT
//! bins, otherwise a pointwise multiplication by the conjugate carrier before
//! filtering.

use crate::field::ComplexField;
use crate::raster::IntensityImage;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("carrier spec invalid: {0}")]
    InvalidCarrier(String),
    #[error("bandpass mask of radius {radius} around ({fx}, {fy}) touches the DC bin")]
    CarrierOverlapsDC { fx: f64, fy: f64, radius: f64 },
    #[error("carrier lobe ({fx}, {fy}) with radius {radius} exceeds the Nyquist square")]
    CarrierOutOfBand { fx: f64, fy: f64, radius: f64 },
}

/// Spatial-carrier parameters: carrier frequency in cycles/pixel and the
/// bandpass half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierSpec {
    pub fx: f64,
    pub fy: f64,
    pub radius: f64,
}

impl CarrierSpec {
    pub fn new(fx: f64, fy: f64, radius: f64) -> Result<Self, SpectralError> {
        let spec = Self { fx, fy, radius };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        if !(self.fx.is_finite() && self.fy.is_finite() && self.radius.is_finite()) {
            return Err(SpectralError::InvalidCarrier("non-finite parameter".into()));
        }
        if self.fx == 0.0 && self.fy == 0.0 {
            return Err(SpectralError::InvalidCarrier(
                "carrier frequency must be nonzero".into(),
            ));
        }
        if self.radius <= 0.0 || self.radius >= self.fx.abs().max(self.fy.abs()) {
            return Err(SpectralError::InvalidCarrier(format!(
                "radius must satisfy 0 < radius < max(|fx|, |fy|), got {}",
                self.radius
            )));
        }
        Ok(())
    }
}

/// Unnormalized forward 2D FFT (row-column decomposition).
pub fn fft2(field: &ComplexField) -> ComplexField {
    transform2(field, rustfft::FftDirection::Forward, 1.0)
}

/// Inverse 2D FFT scaled by `1 / (width * height)`.
pub fn ifft2(field: &ComplexField) -> ComplexField {
    let scale = 1.0 / (field.width() * field.height()) as f64;
    transform2(field, rustfft::FftDirection::Inverse, scale)
}

fn transform2(
    field: &ComplexField,
    direction: rustfft::FftDirection,
    scale: f64,
) -> ComplexField {
    let w = field.width();
    let h = field.height();
    let mut planner = FftPlanner::<f64>::new();
    let row_fft = planner.plan_fft(w, direction);
    let col_fft = planner.plan_fft(h, direction);

    let mut data = field.samples().to_vec();
    for row in data.chunks_exact_mut(w) {
        row_fft.process(row);
    }

    let mut column = vec![Complex64::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            column[y] = data[y * w + x];
        }
        col_fft.process(&mut column);
        for y in 0..h {
            data[y * w + x] = column[y];
        }
    }

    if scale != 1.0 {
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
    ComplexField::from_samples(w, h, data)
}

/// Signed DFT bin frequency in cycles/pixel, in `[-0.5, 0.5)`.
#[inline]
fn bin_frequency(k: usize, n: usize) -> f64 {
    let f = k as f64 / n as f64;
    if f >= 0.5 {
        f - 1.0
    } else {
        f
    }
}

/// Shortest wrapped distance between two normalized frequencies.
#[inline]
fn freq_delta(a: f64, b: f64) -> f64 {
    let mut d = a - b;
    d -= d.round();
    d
}

/// True when the carrier lands exactly on DFT bins for a `w` x `h` image, in
/// which case demodulation uses the integer-bin spectrum shift path.
pub fn carrier_aligns_to_bins(carrier: &CarrierSpec, w: usize, h: usize) -> bool {
    let sx = carrier.fx * w as f64;
    let sy = carrier.fy * h as f64;
    (sx - sx.round()).abs() < 1e-9 && (sy - sy.round()).abs() < 1e-9
}

/// Demodulate a real fringe image into the analytic complex fringe signal:
/// isolate the +1 carrier lobe with a circular hard mask, translate it to
/// baseband, and inverse transform. Intensity is normalized to `[0, 1]`.
pub fn demodulate_to_analytic(
    img: &IntensityImage,
    carrier: &CarrierSpec,
) -> Result<ComplexField, SpectralError> {
    carrier.validate()?;
    let (fx, fy, r) = (carrier.fx, carrier.fy, carrier.radius);
    if fx.abs() + r > 0.5 || fy.abs() + r > 0.5 {
        return Err(SpectralError::CarrierOutOfBand { fx, fy, radius: r });
    }
    if (fx * fx + fy * fy).sqrt() <= r {
        return Err(SpectralError::CarrierOverlapsDC { fx, fy, radius: r });
    }

    let w = img.width;
    let h = img.height;
    let normalized = ComplexField::from_fn(w, h, |x, y| {
        Complex64::new(img.get(x, y) as f64 / 255.0, 0.0)
    });

    if carrier_aligns_to_bins(carrier, w, h) {
        let spectrum = fft2(&normalized);
        let mut masked = ComplexField::zeros(w, h);
        for ky in 0..h {
            let v = bin_frequency(ky, h);
            for kx in 0..w {
                let u = bin_frequency(kx, w);
                let du = freq_delta(u, fx);
                let dv = freq_delta(v, fy);
                if du * du + dv * dv <= r * r {
                    masked.set(kx, ky, spectrum.get(kx, ky));
                }
            }
        }
        // Shift the lobe to DC: out[k] = masked[k + s].
        let sx = (fx * w as f64).round() as i64;
        let sy = (fy * h as f64).round() as i64;
        let mut shifted = ComplexField::zeros(w, h);
        for ky in 0..h {
            let src_y = (ky as i64 + sy).rem_euclid(h as i64) as usize;
            for kx in 0..w {
                let src_x = (kx as i64 + sx).rem_euclid(w as i64) as usize;
                shifted.set(kx, ky, masked.get(src_x, src_y));
            }
        }
        Ok(ifft2(&shifted))
    } else {
        // Pre-multiply by the conjugate carrier, which moves the +1 lobe to
        // baseband; then mask around DC.
        let modulated = ComplexField::from_fn(w, h, |x, y| {
            let phase = -TAU * (fx * x as f64 + fy * y as f64);
            normalized.get(x, y) * Complex64::from_polar(1.0, phase)
        });
        let spectrum = fft2(&modulated);
        let mut masked = ComplexField::zeros(w, h);
        for ky in 0..h {
            let v = bin_frequency(ky, h);
            for kx in 0..w {
                let u = bin_frequency(kx, w);
                if u * u + v * v <= r * r {
                    masked.set(kx, ky, spectrum.get(kx, ky));
                }
            }
        }
        Ok(ifft2(&masked))
    }
}
