//! Superposed analog video multicast to near and far users sharing one
//! channel through power-domain NOMA.
//!
//! A GOP is 3D-DCT transformed and cut into chunks; the most important
//! chunks form a base layer for everyone and the next ones an enhancement
//! layer for near users. BL and EL chunks are paired by a stable matching,
//! power is split in two stages, and each user reconstructs with LLSE
//! decoding.

pub mod channel;
pub mod config;
pub mod error;
pub mod layering;
pub mod matching;
pub mod pipeline;
pub mod power;
pub mod report;
pub mod rng;
pub mod transform;
pub mod verify;
pub mod video_io;

pub use error::{Error, Result};
