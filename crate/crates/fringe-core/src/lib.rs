pub mod field;
pub mod raster;
pub mod smallmat;
pub mod rootmusic;
pub mod spectral;
pub mod synth;
pub mod unwrap2d;

pub use field::{wrap_phase, ComplexField, PhaseKind, PhaseMap};
pub use raster::{FieldRaster, IntensityImage};
pub use rootmusic::{BorderPolicy, EstimatorConfig, LocalEstimate};
pub use spectral::CarrierSpec;
