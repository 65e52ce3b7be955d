//! Fast hyperbolic Radon transform via FFT convolution in log-polar
//! coordinates, with a direct-summation oracle and iterative
//! soft-thresholding drivers for sparse inversion, missing-trace
//! interpolation, and multiple attenuation on CMP gathers.

pub mod error;
pub mod fft;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod lattice;
pub mod operator;
pub mod sparse;
pub mod spline;
pub mod synth;

pub use error::Error;
pub use geometry::{build_geometry, SectorGeometry};
pub use grid::{rescale_to_unit, CmpGather, RadonImage, RegularGrid2, ScaleRecord};
pub use kernel::{precompute_zeta_hat, KernelSpectrum};
pub use lattice::{choose_lattice, LatticeSpec, SpectralWindow};
pub use operator::{
    direct_adjoint, direct_forward, estimate_norm, ApplyStats, OperatorPlan, PlanOptions,
};
pub use sparse::{ista, ista_masked, mute_and_split, soft_threshold, IstaConfig, IstaTrace};
pub use synth::{make_mask, synth_gather, EventSpec, MaskPattern, MaskSpec, Wavelet};

pub type Result<T> = std::result::Result<T, Error>;
