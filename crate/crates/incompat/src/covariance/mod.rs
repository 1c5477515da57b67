//! Symmetry reductions: Weyl covariance on `C^d`, the unitary twirl, the
//! Eggeling–Werner algebra for fully covariant joint channels, and
//! covariant-instrument parametrisations.

pub mod ew;
pub mod structure;
pub mod twirl;
pub mod weyl;

pub use ew::{
    cloner, ew_basis, ew_joint_channel, ew_project, ew_tetrahedron_point, perm_op, EwBasis,
};
pub use structure::{
    covariant_channel_from_kernel, covariant_obs_from_c, fourier_average,
    fourier_invariant_optimum, fourier_projections, instrument_from_alpha, kernel_fourier,
    kernel_fourier_positivity, kernel_of_channel, reduce_alpha, w0, w1_w2, AlphaInstrument,
    CovariantChannelKernel, FourierOptimum, FourierPositivity, ReducedAlpha,
};
pub use twirl::{
    covariant_mixture, entanglement_fidelity, self_compatible_covariant_interval,
    unitary_twirl_channel,
};
pub use weyl::{
    convolve, covariant_pair_jm_oracle, covariantize_channel, covariantize_instrument,
    covariantize_joint, covariantize_obs_pair, joint_from_state, root_of_unity,
    state_distributions, weyl_rep, weyl_witness_dilation, weyl_witness_state, CovariantObsPair,
    WeylRep,
};
