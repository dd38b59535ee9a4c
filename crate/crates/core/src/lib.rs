//! Physics engine for a pulsed-laser-ablation ion trap loading simulator.
//!
//! The crate models the full chain from a nanosecond ablation pulse on a
//! metal target to a trapped, fluorescing ion crystal: pulse energetics and
//! surface heating ([`ablation`]), geometric skimming and effusive
//! kinematics of the atom beam ([`beam`]), resonance-enhanced two-photon
//! photoionization plus a Rydberg autoionization side channel
//! ([`photoionization`]), RF trap stability and capture ([`trap`]), and
//! fluorescence / pressure diagnostics ([`diagnostics`]). Everything is
//! deterministic under a single seed; see [`rng`].

pub mod ablation;
pub mod beam;
pub mod config;
pub mod constants;
pub mod diagnostics;
pub mod error;
pub mod photoionization;
pub mod rng;
pub mod trap;
