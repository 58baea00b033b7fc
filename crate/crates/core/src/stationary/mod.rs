//! Timeless quantum mechanics of the composite: the grid Hamiltonian, its
//! eigenpairs, the exact single-product factorization and channel expansions.

pub mod channels;
pub mod entanglement;
pub mod factorize;
pub mod hamiltonian;
pub mod lanczos;
pub mod marching;
pub mod system;

pub use hamiltonian::{assemble_tise, Hamiltonian2D, Stencil};
pub use lanczos::{lanczos_nearest, minres, solve_eigenpairs, solve_eigenpairs_with, EigenOptions, EigenPair, SymmetricOperator};
pub use system::SystemOperator;
pub use factorize::{
    compute_u_s, factorize_prescribed, factorize_selfconsistent, marginal_amplitude, residual_psidef, retained_window, FactorMode, FactorizedState,
    PsidefResidual,
};
pub use channels::{
    bo_sweep, channel_project, close_coupled_residual, hermiticity_defect, solve_bo_states, system_eigenbasis, BoSweep, ChannelBasis, ChannelDecomposition,
    ChannelEnergies, CloseCoupledResidual, EffectiveCoupling,
};
pub use entanglement::{entanglement_spectrum, SchmidtSpectrum};
pub use marching::{directed_state, DirectedState};
