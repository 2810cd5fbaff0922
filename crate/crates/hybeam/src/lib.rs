//! Link-level simulator for hybrid analog/digital precoding on mmWave
//! multi-user 3D-MIMO downlinks.
//!
//! The transmitter is a base station with an `N_y × N_z` uniform planar
//! array, `M_t` RF chains and one data stream bundle per user; each of the
//! `K` users has a smaller planar array with `M_r` RF chains and `N_s`
//! streams. The simulated transmit chain is
//!
//! ```text
//! x  →  W (digital, M_t × K·N_s)  →  F (analog, N_t × M_t)  →  H_k  →
//!       M_k^H (analog, M_r × N_r)  →  V_k^H (digital, N_s × M_r)  →  x̂_k
//! ```
//!
//! * [`channel`] draws clustered multipath channels between planar arrays.
//! * [`codebook`] builds over-sampled, phase-quantized beam codebooks.
//! * [`analog`] greedily selects the analog precoder/combiner columns
//!   jointly across users from those codebooks.
//! * [`digital`] computes the closed-form sum-MSE-optimal digital precoder
//!   and per-user combiners for a fixed analog stage.
//! * [`evaluation`] measures spectral efficiency, empirical MSE and coded-free
//!   16-QAM bit error rates over the composed link.
//! * [`config`] and [`harness`] wire the stages into reproducible Monte
//!   Carlo experiments with CSV output.
//!
//! All numeric kernels are generic over the real scalar type through
//! [`Scalar`]; `f64` is the default precision used by the experiment harness
//! and the CLI, with aliases below.

pub mod analog;
pub mod channel;
pub mod codebook;
pub mod config;
pub mod digital;
mod error;
pub mod evaluation;
pub mod harness;
mod linalg;

pub use error::Error;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar types the simulator kernels are generic over.
///
/// Beam selection accumulates its objective tables in `f64` regardless of
/// `T` (see [`analog::japc`]); everything else runs natively in `T`.
pub trait Scalar: RealField + FromPrimitive + ToPrimitive + Copy {}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Complex number over a simulator scalar.
pub type Cplx<T> = nalgebra::Complex<T>;
/// Dynamically sized complex matrix.
pub type CMatrix<T> = nalgebra::DMatrix<Cplx<T>>;
/// Dynamically sized complex column vector.
pub type CVector<T> = nalgebra::DVector<Cplx<T>>;

/// Default real precision of the harness and CLI.
pub type Real = f64;
/// `Cplx<Real>`.
pub type C64 = Cplx<f64>;
/// `CMatrix<Real>`.
pub type CMat64 = CMatrix<f64>;
/// `CVector<Real>`.
pub type CVec64 = CVector<f64>;
/// Single precision complex matrix.
pub type CMat32 = CMatrix<f32>;
/// Single precision complex vector.
pub type CVec32 = CVector<f32>;

/// Shorthand for fallible simulator operations.
pub type Result<V> = std::result::Result<V, Error>;

pub(crate) fn from_f64<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant representable in scalar type")
}
