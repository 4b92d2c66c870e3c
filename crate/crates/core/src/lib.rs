//! Information-theoretic machinery for reward alignment of sampling policies.
//!
//! Everything here is exact on finite alphabets: best-of-n selection laws,
//! exponentially tilted (KL-penalized) policies, f- and Rényi divergences,
//! sub-Gaussian / sub-Gamma transportation bounds and the proxy-to-golden
//! reward transfer bounds. Continuous reference laws (Gaussian, exponential,
//! Gamma and the maximum of `n` unit exponentials) are handled in closed form
//! or by adaptive quadrature.
//!
//! The crate is `no_std` and only needs `alloc`. Enable the `std` feature to
//! get `std::error::Error` impls through the host `std`.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`dist`] | finite laws, reward maps, pushforwards, quantiles, TVAR, sampling |
//! | [`continuous`] | closed-form continuous laws |
//! | [`divergence`] | f-divergences, Rényi divergences, variational lower bound |
//! | [`bestofn`] | exact best-of-n laws and the divergence bound catalog |
//! | [`tilt`] | exponential tilting and the KL-constrained Lagrangian solver |
//! | [`transport`] | tail certificates and transportation inequalities |
//! | [`goodhart`] | proxy vs golden reward transfer bounds and curves |

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod math;

pub mod bestofn;
pub mod continuous;
pub mod dist;
pub mod divergence;
pub mod error;
pub mod goodhart;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod special;
pub mod tilt;
pub mod transport;

pub use bestofn::{bestofn_exact, bestofn_kl, BestOfNPolicy};
pub use continuous::{ContinuousLaw, ExpMax, Exponential, Gamma, Gaussian};
pub use dist::{FiniteDist, RewardLaw, RewardMap};
pub use divergence::{DivergenceKind, DivergenceValue, FGenerator};
pub use error::{Error, Result};
pub use report::BoundReport;
pub use rng::RngSeed;
pub use tilt::{tilt, TiltedPolicy};
pub use transport::{TailCertificate, TailModel};
