//! Bit-exact file formats: binary PGM input, the `FR1` float32 raster
//! container, and CSV tables.
//!
//! `FR1` layout: one ASCII header line `FR1 <width> <height> <channels>\n`
//! followed by `width*height*channels` little-endian f32 values, row-major.
//! Channels is 1 (real) or 2 (complex, interleaved re,im).

use crate::field::{ComplexField, PhaseKind, PhaseMap};
use num_complex::Complex64;
use std::fs;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {0} (only 255 is accepted)")]
    UnsupportedMaxval(u32),
    #[error("truncated data: expected {expected} bytes, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("row arity {found} does not match header arity {expected}")]
    ArityMismatch { expected: usize, found: usize },
}

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntensityImage {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<u8>,
}

impl IntensityImage {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Self {
        assert!(width >= 1 && height >= 1);
        assert_eq!(samples.len(), width * height);
        Self {
            width,
            height,
            samples,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }
}

/// Float32 raster with 1 (real) or 2 (complex interleaved) channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRaster {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub samples: Vec<f32>,
}

impl FieldRaster {
    pub fn new(width: usize, height: usize, channels: usize, samples: Vec<f32>) -> Self {
        assert!(channels == 1 || channels == 2);
        assert_eq!(samples.len(), width * height * channels);
        Self {
            width,
            height,
            channels,
            samples,
        }
    }

    pub fn from_phase_map(map: &PhaseMap) -> Self {
        Self::new(
            map.width(),
            map.height(),
            1,
            map.values().iter().map(|&v| v as f32).collect(),
        )
    }

    pub fn from_complex_field(field: &ComplexField) -> Self {
        let mut samples = Vec::with_capacity(field.width() * field.height() * 2);
        for c in field.samples() {
            samples.push(c.re as f32);
            samples.push(c.im as f32);
        }
        Self::new(field.width(), field.height(), 2, samples)
    }

    pub fn to_phase_map(&self, kind: PhaseKind) -> Option<PhaseMap> {
        if self.channels != 1 {
            return None;
        }
        Some(PhaseMap::new(
            self.width,
            self.height,
            self.samples.iter().map(|&v| v as f64).collect(),
            kind,
        ))
    }

    pub fn to_complex_field(&self) -> Option<ComplexField> {
        if self.channels != 2 {
            return None;
        }
        let samples = self
            .samples
            .chunks_exact(2)
            .map(|p| Complex64::new(p[0] as f64, p[1] as f64))
            .collect();
        Some(ComplexField::from_samples(self.width, self.height, samples))
    }
}

/// Read a binary PGM ("P5", maxval 255). Pixel values are copied verbatim.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<IntensityImage, RasterError> {
    let bytes = fs::read(path)?;
    let mut pos = 0usize;

    let magic = next_token(&bytes, &mut pos)
        .ok_or_else(|| RasterError::MalformedHeader("missing magic number".into()))?;
    if magic != b"P5" {
        return Err(RasterError::MalformedHeader(format!(
            "expected magic P5, found {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = parse_dim(&bytes, &mut pos, "width")?;
    let height = parse_dim(&bytes, &mut pos, "height")?;
    let maxval = parse_dim(&bytes, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(RasterError::UnsupportedMaxval(maxval as u32));
    }
    // Exactly one whitespace byte separates the header from the data.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(RasterError::MalformedHeader(
            "missing whitespace before pixel data".into(),
        ));
    }
    pos += 1;

    let expected = width * height;
    let data = &bytes[pos..];
    if data.len() < expected {
        return Err(RasterError::TruncatedData {
            expected,
            found: data.len(),
        });
    }
    Ok(IntensityImage::new(width, height, data[..expected].to_vec()))
}

/// Write a binary PGM (maxval 255).
pub fn write_pgm(path: impl AsRef<Path>, img: &IntensityImage) -> Result<(), RasterError> {
    let mut out = Vec::with_capacity(img.samples.len() + 32);
    write!(out, "P5\n{} {}\n255\n", img.width, img.height)?;
    out.extend_from_slice(&img.samples);
    fs::write(path, out)?;
    Ok(())
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    // Skip whitespace and '#' comments (to end of line).
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    if *pos >= bytes.len() {
        return None;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    Some(&bytes[start..*pos])
}

fn parse_dim(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize, RasterError> {
    let tok = next_token(bytes, pos)
        .ok_or_else(|| RasterError::MalformedHeader(format!("missing {what}")))?;
    let s = std::str::from_utf8(tok)
        .map_err(|_| RasterError::MalformedHeader(format!("non-ASCII {what}")))?;
    let v: usize = s
        .parse()
        .map_err(|_| RasterError::MalformedHeader(format!("invalid {what} {s:?}")))?;
    if v == 0 {
        return Err(RasterError::MalformedHeader(format!("{what} must be >= 1")));
    }
    Ok(v)
}

/// Write an `FR1` raster. All samples must be finite.
pub fn write_field(path: impl AsRef<Path>, field: &FieldRaster) -> Result<(), RasterError> {
    if let Some(i) = field.samples.iter().position(|v| !v.is_finite()) {
        return Err(RasterError::NonFiniteSample(i));
    }
    let mut out = Vec::with_capacity(field.samples.len() * 4 + 32);
    write!(out, "FR1 {} {} {}\n", field.width, field.height, field.channels)?;
    for v in &field.samples {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read an `FR1` raster, validating header, length and finiteness.
pub fn read_field(path: impl AsRef<Path>) -> Result<FieldRaster, RasterError> {
    let bytes = fs::read(path)?;
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| RasterError::MalformedHeader("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| RasterError::MalformedHeader("non-ASCII header".into()))?;
    let mut parts = header.split_ascii_whitespace();
    if parts.next() != Some("FR1") {
        return Err(RasterError::MalformedHeader(format!(
            "expected FR1 magic, found {header:?}"
        )));
    }
    let mut dim = |what: &str| -> Result<usize, RasterError> {
        parts
            .next()
            .ok_or_else(|| RasterError::MalformedHeader(format!("missing {what}")))?
            .parse()
            .map_err(|_| RasterError::MalformedHeader(format!("invalid {what}")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let channels = dim("channels")?;
    if parts.next().is_some() {
        return Err(RasterError::MalformedHeader("trailing header fields".into()));
    }
    if width == 0 || height == 0 || !(channels == 1 || channels == 2) {
        return Err(RasterError::MalformedHeader(format!(
            "bad dimensions {width}x{height}x{channels}"
        )));
    }

    let data = &bytes[nl + 1..];
    let count = width * height * channels;
    if data.len() < count * 4 {
        return Err(RasterError::TruncatedData {
            expected: count * 4,
            found: data.len(),
        });
    }
    let samples: Vec<f32> = data[..count * 4]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(RasterError::NonFiniteSample(i));
    }
    Ok(FieldRaster::new(width, height, channels, samples))
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum CsvValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl CsvValue {
    fn render(&self) -> String {
        match self {
            CsvValue::Int(v) => v.to_string(),
            CsvValue::Float(v) => format_sig6(*v),
            CsvValue::Text(s) => escape_csv(s),
        }
    }
}

/// Format a float with 6 significant digits, trimming trailing zeros.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn escape_csv(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Write a CSV table with a header row. Every row must match the header arity.
pub fn write_csv(
    path: impl AsRef<Path>,
    header: &[&str],
    rows: &[Vec<CsvValue>],
) -> Result<(), RasterError> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        if row.len() != header.len() {
            return Err(RasterError::ArityMismatch {
                expected: header.len(),
                found: row.len(),
            });
        }
        let cells: Vec<String> = row.iter().map(|c| c.render()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
