use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension {0} is outside the supported range 1..=6")]
    DimensionOutOfRange(usize),

    #[error("vertices do not span a full-dimensional polytope (affine rank {rank} < {dim})")]
    NotFullDimensional { rank: usize, dim: usize },

    #[error("point {0:?} is not a vertex of the convex hull")]
    RedundantVertex(Vec<i64>),

    #[error("origin is not an interior point (facet {normal:?} passes through or beyond it)")]
    OriginNotInterior { normal: Vec<i64> },

    #[error("not reflexive: facet with normal {normal:?} lies at lattice distance {distance} from the origin")]
    NotReflexive { normal: Vec<i64>, distance: String },

    #[error("not Delzant at vertex {vertex:?}: {reason}")]
    NotDelzant { vertex: Vec<i64>, reason: String },

    #[error("matrix is not unimodular (determinant {0})")]
    NotUnimodular(String),

    #[error("moment matrix is singular")]
    SingularMoments,

    #[error("input data is not convex: {0}")]
    NonConvexInput(String),

    #[error("wedge support leaves the vertex corner for every step up to {steps}")]
    DegenerateWedge { steps: usize },

    #[error("point lies on or outside the polytope boundary (facet slack {slack:e})")]
    BoundaryPoint { slack: f64 },

    #[error("Legendre inversion did not converge (residual {residual:e})")]
    LegendreNoConvergence { residual: f64 },

    #[error("tail bound {bound:e} exceeds the allowed {allowed:e}; enlarge the quadrature box")]
    TailBoundViolated { bound: f64, allowed: f64 },

    #[error("density integrates to {mass}, not 1")]
    NonNormalizedDensity { mass: f64 },

    #[error("test family is degenerate: {0}")]
    DegenerateFamily(String),

    #[error("polytope is not uniformly relatively Ding stable (alpha = {alpha} >= 1); no generalized Kähler-Einstein metric exists")]
    UnstablePolytope { alpha: String },

    #[error("density is not strictly positive on the interval")]
    NonPositiveDensity,

    #[error("density has barycenter {barycenter:e}; a solution needs it at the origin")]
    NonZeroBarycenter { barycenter: f64 },

    #[error("fixed-point iteration did not converge after {sweeps} sweeps (last update {last_update:e})")]
    NoConvergence { sweeps: usize, last_update: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for the errors that mean "the polytope itself is invalid".
    pub fn is_invalid_polytope(&self) -> bool {
        matches!(
            self,
            Error::DimensionOutOfRange(_)
                | Error::NotFullDimensional { .. }
                | Error::RedundantVertex(_)
                | Error::OriginNotInterior { .. }
                | Error::NotReflexive { .. }
                | Error::NotDelzant { .. }
                | Error::InvalidInput(_)
                | Error::Json(_)
        )
    }
}
