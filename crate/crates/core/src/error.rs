use thiserror::Error;

/// Errors raised by the geometry, solver and frame layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("signature mismatch: p={left} vs p={right}")]
    Signature { left: u8, right: u8 },

    #[error("signature p={0} is not supported by this operation")]
    UnsupportedSignature(u8),

    #[error("scalar eps mismatch: {left} vs {right}")]
    EpsMismatch { left: i8, right: i8 },

    #[error("invalid sign {0}, expected +1 or -1")]
    InvalidSign(i64),

    #[error("division by a zero divisor ({re} + i{im}, eps={eps})")]
    ZeroDivisor { re: f64, im: f64, eps: i8 },

    #[error("point is off the quadric: <x,x> - 1 = {0:e}")]
    OffQuadric(f64),

    #[error("vector is not tangent: <x,v> = {0:e}")]
    Tangency(f64),

    #[error("tangent vectors live over different base points")]
    BaseMismatch,

    #[error("index ({i}, {j}) has no full stencil on a {nx}x{ny} grid")]
    Boundary { i: usize, j: usize, nx: usize, ny: usize },

    #[error("degenerate induced metric at ({i}, {j}): G(F_x,F_x) = {gxx:e}")]
    DegenerateMetric { i: usize, j: usize, gxx: f64 },

    #[error("negative definite induced metric at ({i}, {j})")]
    NegativeDefinite { i: usize, j: usize },

    #[error("timelike first coordinate at ({i}, {j}): G(F_x,F_x) < 0 < G(F_y,F_y)")]
    TimelikeCoordinate { i: usize, j: usize },

    #[error("surface is not minimal at ({i}, {j}): |H|^2 = {hnorm2:e}")]
    NonMinimal { i: usize, j: usize, hnorm2: f64 },

    #[error("no interior points satisfy the stencil and mask requirements")]
    EmptyInterior,

    #[error("identity is not applicable: {0}")]
    NotApplicable(&'static str),

    #[error("Newton iteration did not converge: residual {residual:e} after {iterations} iterations")]
    NewtonDivergence { residual: f64, iterations: usize },

    #[error("CFL violation: hy = {hy} exceeds hx = {hx}")]
    CflViolation { hx: f64, hy: f64 },

    #[error("branch mismatch: {0}")]
    BranchMismatch(&'static str),

    #[error("region mask is empty")]
    EmptyMask,

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("equation kind {found} does not match family {family} (needs {expected})")]
    KindMismatch { family: &'static str, expected: &'static str, found: &'static str },

    #[error("fundamental data violates the compatibility equations: {name} = {value:e} > {tol:e}")]
    CompatViolation { name: String, value: f64, tol: f64 },

    #[error("constraint drift {drift:e} exceeds {tol:e}; use a smaller step")]
    DriftExceeded { drift: f64, tol: f64 },

    #[error("no adapted frame realizes C1={c1}, C2={c2} at the base point")]
    NoAdaptedFrame { c1: f64, c2: f64 },

    #[error("target phase of {0} is not reachable by a boost in the para-complex case")]
    FrameUnreachable(&'static str),

    #[error("singular matrix at pivot {0}")]
    Singular(usize),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_sign(s: i64) -> Result<i8> {
    match s {
        1 => Ok(1),
        -1 => Ok(-1),
        _ => Err(Error::InvalidSign(s)),
    }
}
