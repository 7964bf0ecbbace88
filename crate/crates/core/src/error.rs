use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate basis: |det| = {det:.3e} is too close to zero")]
    DegenerateBasis { det: f64 },
    #[error("basis is not unimodular: det = {det} (|det - 1| must be <= 1e-9)")]
    NotUnimodular { det: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported dimension {dim} for {operation}")]
    UnsupportedDimension { dim: usize, operation: &'static str },
    #[error("invalid shell: need 0 <= c < 1 and T > 0, got c = {c}, t = {t}")]
    InvalidShell { c: f64, t: f64 },
    #[error("invalid region: {reason}")]
    InvalidRegion { reason: String },
    #[error("enumeration capacity exceeded: {needed} candidates > cap {cap}")]
    CapacityExceeded { needed: u128, cap: u64 },
    #[error("scatterer radius {rho} violates the bound rho <= {bound} (0.45 * lattice minimum distance)")]
    RadiusTooLarge { rho: f64, bound: f64 },
    #[error("ray start is inside a scatterer: distance {dist} to center {center:?} is <= rho = {rho}")]
    StartInsideScatterer { dist: f64, rho: f64, center: Vec<f64> },
    #[error("direction is not a unit vector: |v| = {norm}")]
    NotUnitVector { norm: f64 },
    #[error("disc volume {volume} exceeds the full sphere measure {total}")]
    DiscTooLarge { volume: f64, total: f64 },
    #[error("denominator q = {q} exceeds the congruence-group enumeration cap 50")]
    CongruenceLevelTooLarge { q: i64 },
    #[error("offset function violates the standing assumption at v = {v:?}: the ray beta(v) + t v meets the unit ball")]
    OffsetHitsUnitBall { v: Vec<f64> },
    #[error("transition density is singular at v1 = v0")]
    CoincidentVelocities,
    #[error("invalid parameter: {reason}")]
    InvalidParameter { reason: String },
    #[error("failed to parse lattice file: {reason}")]
    ParseError { reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
