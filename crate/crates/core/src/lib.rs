//! Consensus dynamics for networks of agents pinned to a virtual source.
//!
//! The crate builds the pinned Laplacian of a communication graph, bounds
//! the stable update gain from its spectrum, simulates the standard and the
//! accelerated (delayed self reinforcement) consensus laws, and measures
//! settling time, transition synchronization and formation drift.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*F64` aliases below name the double-precision instantiations used by the
//! scenario runner.

pub mod dynamics;
pub mod graph;
pub mod matrix;
pub mod metrics;
pub mod scalar;
pub mod spectral;

pub use dynamics::{
    laplacian_potential, potential_gradient, simulate, source_value, step_accelerated_matrix,
    step_dsr_per_agent, step_standard, DynamicsError, SimConfig, SourceKind, SourceProfile,
    Trajectory, UpdateLaw,
};
pub use graph::{build_pinned_system, load_graph, Edge, GraphError, GraphSpec, Node, PinnedSystem};
pub use matrix::Matrix;
pub use metrics::{
    deviation, integrate_positions, normalized_deviation, settling_time, FormationState,
    MetricsError, MetricsRecord, Settling,
};
pub use num_complex::Complex;
pub use scalar::Scalar;
pub use spectral::{
    eigenvalues, eigenvector, gain_bound, perron_spectrum, PerronSpectrum, SpectralError,
    SpectralSummary,
};

pub type GraphSpecF64 = GraphSpec<f64>;
pub type PinnedSystemF64 = PinnedSystem<f64>;
pub type SimConfigF64 = SimConfig<f64>;
pub type SourceProfileF64 = SourceProfile<f64>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type MetricsRecordF64 = MetricsRecord<f64>;
pub type SpectralSummaryF64 = SpectralSummary<f64>;
pub type MatrixF64 = Matrix<f64>;

pub type GraphSpecF32 = GraphSpec<f32>;
pub type PinnedSystemF32 = PinnedSystem<f32>;
pub type TrajectoryF32 = Trajectory<f32>;
