//! Closed-geodesic counting on compact hyperbolic surfaces: Fuchsian group
//! enumeration, Patterson–Sullivan densities, the measure of maximal entropy,
//! quotient dynamics and the rank dichotomy on conformal metrics.

pub mod density;
pub mod dynlab;
pub mod fuchsian;
pub mod hypgeom;
pub mod jacobi;
pub mod kv;
pub mod mme;
pub mod quant;
pub mod scalar;

pub use scalar::Real;

pub type DiskPoint = hypgeom::DiskPoint<f64>;
pub type BoundaryPoint = hypgeom::BoundaryPoint<f64>;
pub type PhasePoint = hypgeom::PhasePoint<f64>;
pub type Isometry = hypgeom::Isometry<f64>;
pub type GeodesicState = jacobi::GeodesicState<f64>;

pub type DiskPointF32 = hypgeom::DiskPoint<f32>;
pub type BoundaryPointF32 = hypgeom::BoundaryPoint<f32>;
pub type PhasePointF32 = hypgeom::PhasePoint<f32>;
pub type IsometryF32 = hypgeom::Isometry<f32>;
pub type GeodesicStateF32 = jacobi::GeodesicState<f32>;
