use thiserror::Error;

/// Errors raised by the models and optimizers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the formula.
    #[error("domain error: {0}")]
    Domain(&'static str),
    /// The antenna count cannot support the requested cluster layout.
    #[error("infeasible geometry: M = {antennas} cannot serve N = {clusters} clusters of K = {users_per_cluster} users (needs M >= (N-1)K + 1)")]
    InfeasibleGeometry {
        antennas: usize,
        clusters: usize,
        users_per_cluster: usize,
    },
    /// The null space used for zero forcing collapsed.
    #[error("degenerate geometry: {0}")]
    Geometry(&'static str),
    /// The pilot length is too short for pairwise orthogonal pilots.
    #[error("pilot length tau = {tau} must exceed the user count {users}")]
    PilotOrthogonality { tau: usize, users: usize },
    /// A per-user table does not match the declared (N, K) shape.
    #[error("shape mismatch: expected {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },
    /// A large-scale gain table is not sorted in descending order inside a cluster.
    #[error("alpha values in cluster {cluster} are not in descending order")]
    Ordering { cluster: usize },
    /// The requested scheme only exists for a different cluster size.
    #[error("unsupported mode: {0}")]
    UnsupportedMode(&'static str),
    /// No transmission mode satisfies the feasibility constraint.
    #[error("no feasible transmission mode")]
    NoFeasibleMode,
    /// Two mixture scales coincide and the pairwise Erlang weights diverge.
    #[error("coincident mixture scales; use ErlangMixture::from_scales")]
    CoincidentScales,
}

pub type Result<T> = core::result::Result<T, Error>;
