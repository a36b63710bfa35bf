//! Simulator and diagnostics for pulse-level quantum Fourier models.
//!
//! A quantum Fourier model interleaves trainable blocks with data-encoding
//! rotations, so its Z expectation is a truncated Fourier series in the input.
//! Trainable gates can be realised exactly (gate mode), as basis-gate products
//! with per-sub-gate scales (decomposed mode), or through an effective
//! pulse-area model in which every rotation sub-gate angle is multiplied by a
//! pulse-area factor λ (pulse mode).

pub mod diffgeo;
pub mod gates;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod pulse;
pub mod seed;
pub mod spectral;
pub mod train;

#[cfg(any(test, feature = "oracles"))]
pub mod oracles;
