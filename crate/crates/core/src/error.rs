//! Error types, one enum per subsystem.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum LinAlgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {offdiag:.3e})")]
    EigNonConvergence { sweeps: usize, offdiag: f64 },
    #[error("family members {i} and {j} do not commute (commutator norm {norm:.3e})")]
    CommutatorTooLarge { i: usize, j: usize, norm: f64 },
    #[error("joint diagonalization residual too large (off-diagonal norm {offdiag:.3e})")]
    JointDiagonalizationResidual { offdiag: f64 },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
}

#[derive(Debug, Clone, Error)]
pub enum SpaceError {
    #[error("duplicate point label {0:?}")]
    DuplicateLabel(String),
    #[error("point coordinates have inconsistent lengths")]
    CoordLengthMismatch,
    #[error("basis tables are linearly dependent at rank tolerance")]
    DependentBasis,
    #[error("basis table count does not match the space")]
    BasisShapeMismatch,
    #[error("unit element fails e(x) ⪰ εI at point {0:?}")]
    UnitNotPositive(String),
    #[error("the constant 1 is not in the span (residual {0:.3e})")]
    OneNotInSpan(f64),
    #[error("unknown point label {0:?}")]
    UnknownPoint(String),
    #[error("coefficient length {got} does not match basis size {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("functional domain is not a lifted scalar space")]
    NotALift,
    #[error("measure does not represent the functional (relative error {0:.3e})")]
    NotRepresenting(f64),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

#[derive(Debug, Clone, Error)]
pub enum HankelError {
    #[error("moment sequence degree {have} is insufficient (need {need})")]
    InsufficientDegree { have: usize, need: usize },
    #[error("moment sequence is missing the index {0:?}")]
    MissingMoment(Vec<usize>),
    #[error("coefficient vector shape mismatch")]
    ShapeMismatch,
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

#[derive(Debug, Clone, Error)]
pub enum ExtractError {
    #[error("Hankel matrix H_{0} is not positive semidefinite")]
    NotPositive(usize),
    #[error("moment sequence is not flat at level {m} (ranks {rank_lo} vs {rank_hi})")]
    NotFlat {
        m: usize,
        rank_lo: usize,
        rank_hi: usize,
    },
    #[error("shift matrices do not commute (worst pair norm {norm:.3e}, tolerance {tol:.3e})")]
    NonCommutingShifts { norm: f64, tol: f64 },
    #[error("joint eigenvalues stay degenerate after {retries} random combinations")]
    DegenerateEigenvalues { retries: usize },
    #[error("reconstructed moments mismatch (relative residual {residual:.3e})")]
    ResidualTooLarge { residual: f64 },
    #[error("atom {0:?} has no coordinates")]
    MissingCoordinates(String),
    #[error(transparent)]
    Hankel(#[from] HankelError),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

#[derive(Debug, Clone, Error)]
pub enum SpectraError {
    #[error("space has no unit element; mass-set queries require one")]
    MissingUnit,
    #[error("target length {got} does not match basis size {want}")]
    TargetMismatch { got: usize, want: usize },
    #[error("unknown point label {0:?}")]
    UnknownPoint(String),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

#[derive(Debug, Clone, Error)]
pub enum MassError {
    #[error("candidate matrix is the zero matrix")]
    ZeroMatrix,
    #[error("functional is (numerically) zero")]
    ZeroFunctional,
    #[error("point {0:?} is not in the core set")]
    NotInCoreSet(String),
    #[error("construction exceeded the dim-of-space bound of {0} atoms")]
    IterationBoundExceeded(usize),
    #[error("functional is not representable (infeasible at zero shift)")]
    NotRepresentable,
    #[error("greedy mass augmentation failed to settle after {0} rounds")]
    AugmentationStalled(usize),
    #[error("fixture hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

#[derive(Debug, Clone, Error)]
pub enum TransportError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("map failed the positivity sanity check")]
    NotPositive,
}

#[derive(Debug, Clone, Error)]
pub enum ApolarError {
    #[error("polynomials have different shape (d, m, q)")]
    ShapeMismatch,
    #[error("index {0:?} is not in the homogeneous index set")]
    BadIndex(Vec<usize>),
    #[error("operator degree {n} exceeds polynomial degree {m}")]
    DegreeMismatch { n: usize, m: usize },
    #[error("no representing measure provided")]
    NoMeasureProvided,
    #[error("computation paths disagree (max deviation {0:.3e})")]
    CrossCheckFailed(f64),
    #[error("measure does not represent the functional (residual {0:.3e})")]
    NotRepresenting(f64),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("json: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("schema: {0}")]
    Schema(String),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}
