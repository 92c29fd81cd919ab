//! One-dimensional Markov maps and the objects built on top of them.

pub mod analysis;
mod builtin;
pub mod cylinder;
pub mod density;
pub mod map;
pub mod orbit;
pub mod periodic;

pub use analysis::{
    contraction_check, distortion_ratio, jacobian_distortion_bound, lyapunov_exponent, mean_log_derivative,
    ContractionCheck, JacobianReference,
};
pub use cylinder::{cylinder, cylinder_from_word, enumerate_cylinders, itinerary, CylinderSet};
pub use density::{estimate_density, Density, DensityEstimate, Histogram};
pub use map::{Branch, Builtin, Interval, MapSpec, PiecewiseMap, RealFn};
pub use orbit::{sample_backward_orbit, sample_backward_orbit_with, BackwardOrbit};
pub use periodic::{periodic_orbits_up_to, periodic_points, PeriodicOrbit};
