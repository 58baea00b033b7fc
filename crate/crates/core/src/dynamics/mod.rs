//! Reduced time-dependent quantum mechanics of the system.

pub mod amplitudes;
pub mod conditional;
pub mod emergence;
pub mod tdse;

pub use amplitudes::{
    basis_energies, compare_amplitudes_vs_grid, profile_matrix, propagate_amplitudes, propagate_amplitudes_with, AmplitudeSet, RouteComparison,
};
pub use conditional::{conditional_from_composite, tdse_residual_of_conditional, ConditionalResidual, ConditionalTrajectory};
pub use tdse::{propagate_complex_time, propagate_tdse, ComplexTimeTrajectory, TdseSystem, WavefunctionTrajectory};
pub use emergence::{emergence_scan, EmergencePoint, EmergenceReport, EmergenceScan};
