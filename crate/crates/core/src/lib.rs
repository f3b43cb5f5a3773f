//! Bifocusing imaging of small penetrable inhomogeneities from
//! single-frequency bistatic scattering data.
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`]: Bessel/Hankel functions and the 2-D Helmholtz Green's function,
//! * [`scene`]: acquisition geometry and ground-truth targets,
//! * [`forward`]: Born-approximation synthesis and noise injection,
//! * [`fresnel`]: reader for multistatic experimental tables,
//! * [`theory`]: the Bessel-series structure kernel and its quadrature check,
//! * [`imaging`]: indicator maps, peaks, scoring and raster export,
//! * [`cli`]: the JSON-driven command line front end.

// `!(x >= lo)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod forward;
pub mod fresnel;
pub mod imaging;
pub mod scene;
pub mod specfun;
pub mod sum;
pub mod theory;

pub use error::{Error, Result};
pub use specfun::{ComplexScalar, Point2};
