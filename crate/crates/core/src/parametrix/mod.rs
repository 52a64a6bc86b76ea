//! Levi parametrix construction of the heat kernel in one dimension.

pub mod kernels;
pub mod mesh;

pub use kernels::{KernelFactory, KernelSlice, Wanted};
pub use mesh::{panels, Panel, TimeMesh};
pub mod run;

pub use run::{build, ConvergenceLog, LogEntry, ParametrixConfig, ParametrixRun};
pub mod checks;

pub use checks::{
    chapman_kolmogorov_residual, check_chapman_kolmogorov, check_collapse, check_gradient_bound,
    check_heat_kernel_bounds, check_mass, check_phi_envelope, PairSet,
};
