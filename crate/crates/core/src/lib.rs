//! Decay of a discrete level coupled to a continuum: survival amplitudes,
//! resonance poles, bound states and the late-time power-law tail.

pub mod cli;
pub mod error;
pub mod oracle;
pub mod poly;
pub mod profiles;
pub mod pvcalc;
pub mod quad;
pub mod spectral;
pub mod survival;
pub mod tailfit;
pub mod tolerance;
