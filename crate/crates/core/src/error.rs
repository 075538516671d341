use thiserror::Error;

/// Errors across the lab. Input-shaped problems (bad parameters, malformed
/// files, points outside the domain) are distinguished from verification
/// failures, which are reported through verdict structs, not errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain has an empty interior")]
    EmptyInterior,

    #[error("domain interior is not connected ({components} components)")]
    Disconnected { components: usize },

    #[error("point ({x}, {y}) has no interior cell center within one grid spacing")]
    PointOutsideDomain { x: f64, y: f64 },

    #[error("space-time point is outside the open cylinder: {0}")]
    OutsideCylinder(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rectangle rejected: sigma-dilate leaves the cylinder")]
    RectangleRejected,

    #[error("box intersects no lattice cell")]
    EmptyBox,

    #[error("set intersects no lattice cell")]
    EmptySet,

    #[error("no quasihyperbolic boundary constant K <= {k_max} satisfies the inequality")]
    QhbcFitFailed { k_max: f64 },

    #[error("tail too short to fit: {positive} positive samples, need at least {required}")]
    TailTooShort { positive: usize, required: usize },

    #[error("no admissible rectangle: cylinder too small for sigma = {sigma}")]
    NoAdmissibleRectangle { sigma: f64 },

    #[error("chain exited the cylinder bottom at t = {t}; increase delta or decrease eta")]
    ChainExitedBottom { t: f64 },

    #[error("quasihyperbolic geodesic unavailable from cell ({ix}, {iy})")]
    GeodesicUnavailable { ix: usize, iy: usize },

    #[error("solver lost positivity at t = {t} after step rejection down to tau = {tau}")]
    PositivityLoss { t: f64, tau: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
