use thiserror::Error;

/// Errors raised by the geometry, kinematics, planning and control layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("inconsistent grasp: {0}")]
    InconsistentGrasp(String),

    #[error("target unreachable for {arm} arm (wrist distance {distance:.4} m)")]
    Unreachable { arm: &'static str, distance: f64 },

    #[error("degenerate offset distance {0:.3e} m")]
    DegenerateOffset(f64),

    #[error("steering angle {0:.4} rad too close to the tan singularity")]
    SteerSingular(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("jacobian near singular (condition number {0:.3e})")]
    SingularJacobian(f64),

    #[error("local coordinates left the workspace: {0}")]
    WorkspaceViolation(String),

    #[error("unknown kind `{0}`")]
    UnknownKind(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
