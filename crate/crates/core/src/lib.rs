//! Volterra-type stochastic clocks: kernels, resolvents, clock simulation,
//! limit laws and path topologies.

pub mod brownian;
pub mod cadlag;
pub mod clock;
pub mod convolution;
pub mod curves;
pub mod error;
pub mod experiments;
pub mod kernels;
pub mod limit;
pub mod mittag_leffler;
pub mod quad;
pub mod resolvent;
pub mod special;
pub mod stats;
pub mod timechange;

pub use error::{Error, Result};
pub use kernels::{discretize, KernelGrid, KernelSpec, TabulatedKernel};
