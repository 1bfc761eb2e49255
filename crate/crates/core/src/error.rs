use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("infinite area: region has an unbounded outer radius")]
    InfiniteArea,
    #[error("nearest distance undefined (almost surely infinite) for zero eavesdropper density")]
    NearestDistanceUndefined,
    #[error("infinite mean degree: eavesdropper density is zero")]
    InfiniteMeanDegree,
    #[error("zero-length link")]
    ZeroLengthLink,
    #[error("origin missing: realization has no typical node")]
    OriginMissing,
    #[error("self-loop requested for vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
    #[error("point at distance {x_norm} lies inside the neutralization radius {rho}")]
    InsideNeutralizedDisk { x_norm: f64, rho: f64 },
    #[error("mismatched PMF supports ({0} vs {1} entries)")]
    SupportMismatch(usize, usize),
    #[error("mismatched experiment identity")]
    IdentityMismatch,
    #[error("sector offsets not realized: expected one frame per legitimate node ({expected}), got {got}")]
    FramesMissing { expected: usize, got: usize },
    #[error("window expansion exceeded cap at radius {radius} after {doublings} doublings")]
    WindowCap { radius: f64, doublings: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
