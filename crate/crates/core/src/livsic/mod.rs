//! Constructive Livšic theory: transfer functions from backward orbits,
//! obstructions and regularity checks.

pub mod obstruction;
pub mod reconstruct;
pub mod regularity;

pub use obstruction::{periodic_obstruction, ObstructionReport, ObstructionRow, OrbitSelection, Verdict, MAX_OBSTRUCTION_PERIOD};
pub use reconstruct::{
    coboundary_residual, interpolate, reconstruct_coboundary_on_grid, reconstruct_on_grid_with_anchor, reconstruct_transfer,
    sample_anchor, GridReconstruction, ReconstructionOptions, ReconstructionResult, Residual,
};
pub use regularity::{
    alpha_tilde, borel_cantelli_avoidance, dyadic_block_test, DyadicBlocks, holder_exponent_estimate, martingale_density_check, mp_regularity_gate, ph_check,
    ph_check_tower, singular_effective_exponent, singular_effective_exponent_with, BorelCantelliReport, HolderEstimate,
    LimsupWindow, MartingaleCheck, Partition, PhCheck,
};
