//! Hitting probabilities and killed-particle distributions for critical
//! branching Brownian motion with absorption at the origin.
//!
//! Every quantity is available along more than one route so the routes can
//! check each other:
//!
//! * [`elliptic`] evaluates Weierstrass ℘ on lattices with `g₂ = 0, g₃ < 0`
//!   and solves for the period that matches a boundary condition; this gives
//!   the double-or-nothing hitting probability in closed form.
//! * [`hitting`] solves `u'' = h(u)` by shooting for arbitrary offspring laws,
//!   brackets the solution between rescaled ℘-functions, and computes the
//!   power-law constants.
//! * [`killed`] handles the number of particles absorbed at 0: exact
//!   coefficient formulas, generating functions, Cauchy-integral coefficient
//!   extraction and tail constants.
//! * [`simulate`] is a Monte Carlo engine built on a discretised Brownian
//!   snake with bridge-corrected absorption.
//!
//! The numerical core is generic over the scalar type (`f32`, `f64`, or the
//! double-double [`Dd`]); the aliases below fix it to `f64` for everyday use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod elliptic;
pub mod error;
pub mod hitting;
pub mod killed;
pub mod ode;
pub mod offspring;
pub mod poly;
pub mod quad;
pub mod real;
pub mod rng;
pub mod simulate;
pub mod verify;

pub use error::{Error, Result};
pub use real::Real;

/// Double-double scalar (≈106-bit significand) used where cancellation eats
/// ordinary `f64` precision.
pub type Dd = twofloat::TwoFloat;

pub type Complex<T = f64> = num_complex::Complex<T>;

/// Provenance of a computed number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactMoranian,
    Elliptic,
    Shooting,
    Series,
    Asymptotic,
    Mc,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ExactMoranian => "exact_moranian",
            Method::Elliptic => "elliptic",
            Method::Shooting => "shooting",
            Method::Series => "series",
            Method::Asymptotic => "asymptotic",
            Method::Mc => "mc",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub type Offspring = offspring::OffspringDistribution<f64>;
pub type HypothesisReport = offspring::HypothesisReport<f64>;
pub type Lattice = elliptic::AehLattice<f64>;
pub type Period = elliptic::PeriodSolution<f64>;
pub type HitProfile = hitting::HitProfile<f64>;
pub type PinchBounds = hitting::PinchBounds<f64>;
pub type AsymptoticConstants = hitting::AsymptoticConstants<f64>;
pub type KilledTail = killed::KilledTail<f64>;
pub type KilledConstants = killed::KilledConstants<f64>;
