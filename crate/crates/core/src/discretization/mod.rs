//! Radial and Cartesian discretizations and the Riesz potential.

pub mod cartesian;
mod radial;

pub use radial::{
    build_radial_grid, dilate, radial_laplacian, rescale_field, GridKind, RadialField, RadialGrid,
    Rescaled, ELEMENT_ORDER,
};

pub mod riesz;

pub use cartesian::{
    fourier_riesz_multiplier, radial_tail_fraction, BoxRiesz, CartesianField, CartesianGrid3,
};
pub use riesz::{build_riesz_kernel, riesz_convolve, RieszKernel};
