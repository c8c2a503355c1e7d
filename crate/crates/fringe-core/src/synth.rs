//! Ground-truthed synthetic data: noisy analytic fringe fields at a given
//! SNR and diffusion-profile phase phantoms.
//!
//! SNR convention: the field is `e^{j phi} + eta` with unit amplitude and
//! `eta` circular complex white Gaussian noise of total variance
//! `sigma^2 = 10^(-snr_db/10)` per sample, so `SNR_dB = 10 log10(1/sigma^2)`.

use crate::field::{ComplexField, PhaseKind, PhaseMap};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid phantom spec: {0}")]
    InvalidSpec(String),
}

/// Free-diffusion step parameters (two liquids initially separated at x=0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionSpec {
    /// Diffusion coefficient, m^2/s.
    pub d: f64,
    /// Time since the step initial condition, s.
    pub t: f64,
    /// Initial concentration step, mol/l.
    pub c0: f64,
    /// Physical length of one pixel along the diffusion axis, m.
    pub x_scale: f64,
}

impl DiffusionSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.d > 0.0 && self.t > 0.0) {
            return Err(SynthError::InvalidSpec(
                "diffusion coefficient and time must be positive".into(),
            ));
        }
        if !(self.c0.is_finite() && self.x_scale > 0.0) {
            return Err(SynthError::InvalidSpec("c0/x_scale invalid".into()));
        }
        Ok(())
    }
}

/// Phase surface family of a phantom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhantomKind {
    /// Three Gaussian-enveloped lobes (the classic multi-peak demo surface),
    /// normalized to `amplitude` peak-to-valley.
    GaussianPeaks,
    /// Linear phase `slope_x * x + slope_y * y`.
    Plane { slope_x: f64, slope_y: f64 },
    /// Diffusion-gradient profile along the row axis: the phase is
    /// proportional to the concentration derivative of the free-diffusion
    /// step solution, peaking at `amplitude` radians.
    FickProfile { diffusion: DiffusionSpec },
}

/// Everything needed to synthesize one ground-truthed fringe field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    /// Peak-to-valley amplitude in radians (ignored by `Plane`).
    pub amplitude: f64,
    /// Square field edge, pixels.
    pub size: usize,
    pub seed: u64,
    /// Noise level; `None` means noiseless.
    pub snr_db: Option<f64>,
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.size < 16 {
            return Err(SynthError::InvalidSpec(format!(
                "size must be >= 16, got {}",
                self.size
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(SynthError::InvalidSpec("amplitude must be finite".into()));
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(SynthError::InvalidSpec("snr_db must be finite".into()));
            }
        }
        if let PhantomKind::FickProfile { diffusion } = &self.kind {
            diffusion.validate()?;
        }
        Ok(())
    }
}

/// Synthesize the ground-truth phase map and the (optionally noisy) analytic
/// fringe field `e^{j phi} + eta`. Reproducible for a given seed.
pub fn make_phantom(spec: &PhantomSpec) -> Result<(PhaseMap, ComplexField), SynthError> {
    spec.validate()?;
    let n = spec.size;
    let truth = match spec.kind {
        PhantomKind::Plane { slope_x, slope_y } => {
            PhaseMap::from_fn(n, n, PhaseKind::Unwrapped, |x, y| {
                slope_x * x as f64 + slope_y * y as f64
            })
        }
        PhantomKind::GaussianPeaks => gaussian_peaks(n, spec.amplitude),
        PhantomKind::FickProfile { diffusion } => fick_phase(n, spec.amplitude, &diffusion),
    };

    let mut field = ComplexField::from_fn(n, n, |x, y| {
        Complex64::from_polar(1.0, truth.get(x, y))
    });
    if let Some(snr_db) = spec.snr_db {
        let sigma = 10f64.powf(-snr_db / 20.0);
        let s = sigma / 2f64.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for v in field.samples_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *v += Complex64::new(s * re, s * im);
        }
    }
    Ok((truth, field))
}

/// The classic three-lobe demo surface on [-3,3]^2, rescaled so the
/// peak-to-valley range equals `amplitude` and centered around zero.
fn gaussian_peaks(n: usize, amplitude: f64) -> PhaseMap {
    let raw = |x: f64, y: f64| -> f64 {
        3.0 * (1.0 - x).powi(2) * (-x * x - (y + 1.0) * (y + 1.0)).exp()
            - 10.0 * (x / 5.0 - x.powi(3) - y.powi(5)) * (-x * x - y * y).exp()
            - (1.0 / 3.0) * (-(x + 1.0) * (x + 1.0) - y * y).exp()
    };
    let coord = |i: usize| 6.0 * i as f64 / (n - 1) as f64 - 3.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut vals = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            let v = raw(coord(x), coord(y));
            lo = lo.min(v);
            hi = hi.max(v);
            vals.push(v);
        }
    }
    let scale = amplitude / (hi - lo);
    let mid = 0.5 * (hi + lo);
    for v in vals.iter_mut() {
        *v = (*v - mid) * scale;
    }
    PhaseMap::new(n, n, vals, PhaseKind::Unwrapped)
}

/// Phase proportional to the concentration gradient of the step solution,
/// varying along the row axis: `-amplitude * exp(-x^2 / (4 D t))`.
fn fick_phase(n: usize, amplitude: f64, spec: &DiffusionSpec) -> PhaseMap {
    let mid = (n - 1) as f64 / 2.0;
    PhaseMap::from_fn(n, n, PhaseKind::Unwrapped, |_x, y| {
        let xm = (y as f64 - mid) * spec.x_scale;
        -amplitude * (-xm * xm / (4.0 * spec.d * spec.t)).exp()
    })
}

/// Step-initial-condition solution of the 1D diffusion equation:
/// `c(x, t) = (c0 / 2) erfc(x / (2 sqrt(D t)))`.
pub fn fick_concentration(spec: &DiffusionSpec, xs: &[f64]) -> Vec<f64> {
    let denom = 2.0 * (spec.d * spec.t).sqrt();
    xs.iter()
        .map(|&x| 0.5 * spec.c0 * libm::erfc(x / denom))
        .collect()
}

/// Analytic spatial derivative of [`fick_concentration`].
pub fn fick_gradient(spec: &DiffusionSpec, xs: &[f64]) -> Vec<f64> {
    let dt4 = 4.0 * spec.d * spec.t;
    let scale = -spec.c0 / (std::f64::consts::PI * dt4).sqrt() * 2.0 / 2.0;
    xs.iter()
        .map(|&x| scale * (-x * x / dt4).exp())
        .collect()
}
