//! Forward models and inverse analysis for the center-of-mass rotation of the
//! silicon G center: tight-binding rotor states, numerical ring-potential
//! eigensolver, three-dipole polarization optics, uniaxial-strain site offsets,
//! a stochastic hopping emitter and the matching inverse tools (diagram and
//! multi-peak fitting, site-assignment inference).
//!
//! The crate is `no_std`-compatible (`alloc` required); disable the default
//! `std` feature for embedded or wasm targets.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dipole;
pub mod error;
pub mod fitting;
pub mod pes;
pub mod rotor;
pub mod roulette;
pub mod sites;
pub mod spectra;
pub mod strain;
pub mod units;

pub use error::{Error, Result};
pub use sites::SiteSet;

// public API exposes nalgebra vector/matrix types
pub use nalgebra;

/// Euclidean remainder in [0, m); f64::rem_euclid is std-only.
pub(crate) fn wrap(x: f64, m: f64) -> f64 {
    #[allow(unused_imports)]
    use num_traits::Float;
    let r = x - m * (x / m).floor();
    if r >= m {
        0.0
    } else {
        r
    }
}
