//! Link-level simulation of multiple beamforming with perfect space-time
//! block codes (PCMB/GCMB), its bit-interleaved coded variant, and the
//! comparison baselines (raw PSTBC over the channel, fully precoded
//! multiple beamforming).

pub mod baselines;
pub mod bicmb;
pub mod channel;
pub mod error;
pub mod harness;
pub mod modulation;
pub mod numerics;
pub mod oracle;
pub mod pcmb_decoder;
pub mod pstbc;
pub mod spheredec;

pub use error::{Error, Result};
