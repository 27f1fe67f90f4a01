//! Momentum-lattice simulation of the ultraviolet-cutoff Bogoliubov-Dirac-Fock
//! equation coupled to classical Gaussian nuclei.
//!
//! The one-particle space is discretized on a cubic momentum grid inside the
//! ball `|p| ≤ Λ`; operators are dense `4N × 4N` kernels, densities live on
//! the lattice of momentum differences, and the Coulomb kernel is replaced by
//! exact cell integrals of `1/|k|²`.

pub mod checkpoint;
pub mod coulomb;
pub mod dynamics;
pub mod error;
pub mod geom;
pub mod lattice;
pub mod meanfield;
pub mod newton;
pub mod opspace;
pub mod quadrature;
pub mod space;
pub mod spinor;

pub use coulomb::{
    coulomb_inner, coulomb_norm, fourier_gaussian, gaussian_density, translate_density, ChargeDensity,
    GaussianShape,
};
pub use dynamics::{
    build_initial_state, estimate_constants, lipschitz_divergence_probe, picard_schauder, rk4_step, simulate,
    total_energy, ConstantReport, InitialKind, SimulationOptions, SystemState, Trajectory,
};
pub use error::{BdfError, Result};
pub use geom::Vec3;
pub use lattice::{build_difference_lattice, build_lattice, DifferenceLattice, MomentumLattice};
pub use meanfield::{
    assemble_mean_field, assemble_v, bdf_rhs, direct_potential_op, exchange_op, nuclear_potential_op,
    PotentialOperator,
};
pub use newton::{newton_rhs, nuclear_force, potential_energy_u, NucleusState};
pub use opspace::{
    charge_tr_q3, commutator, density_of, hs_norm, p0_split_trace, projector_residual, random_hs_sample,
    retract_to_projector, KernelOperator,
};
pub use space::MomentumSpace;
pub use spinor::{d0_symbol, dirac_matrices, p0_symbol, SpinorMatrix};
