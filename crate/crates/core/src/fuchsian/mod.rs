//! Cocompact surface groups: generators, ball enumeration, conjugacy classes
//! and the closed-geodesic length spectrum.

mod cache;
mod domain;
mod enumerate;
mod spectrum;
mod surface;
mod words;

pub use cache::{load_spectrum, save_spectrum, spectrum_paths, CacheFiles};
pub use domain::{DirichletDomain, REDUCE_BUDGET};
pub use enumerate::{enumerate_ball, enumerate_ball_with, BallEnumeration, EnumerateOptions, GroupElement, PruneRule};
pub use spectrum::{
    build_spectrum, build_spectrum_with, nearest_lift, AxisLift, GeodesicClass, SpectrumGroup, SpectrumMeta,
    SpectrumOptions, SpectrumTable,
};
pub use surface::{
    eval_word, format_word, inverse_letter, inverse_word, load_surface, parse_word, Letter, SurfaceConfig, SurfaceModel,
};
pub use words::{canonical_class, cyclic_reduce, free_reduce, least_rotation, Canonicalizer};

use crate::hypgeom::GeomError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FuchsianError {
    #[error("bad surface: {0}")]
    BadSurface(String),
    #[error("radius {radius} exceeds the hard cap {cap}")]
    RadiusTooLarge { radius: f64, cap: f64 },
    #[error("node budget of {budget} exceeded; enumeration complete up to radius {completed_radius}")]
    MemoryBudget { budget: usize, completed_radius: f64 },
    #[error("canonicalization failed for {word}: {reason}")]
    Canonicalization { word: String, reason: String },
    #[error("spectrum inconsistency: {0}")]
    SpectrumInconsistency(String),
    #[error("query at {t} beyond table cutoff {cutoff}")]
    OutOfRange { t: f64, cutoff: f64 },
    #[error("axis walk failed: {0}")]
    Walk(String),
    #[error("cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}
