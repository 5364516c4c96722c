//! Bit-interleaved coded multiple beamforming.

pub mod conv;
pub mod interleave;
pub mod link;
pub mod metric;

pub use conv::{conv_encode, viterbi_decode, CodeRate, ConvCode};
pub use interleave::Interleaver;
pub use link::{BicmbLink, CodedScheme, FrameOutcome};
pub use metric::{bit_metric, bit_metric_split, bit_metric_unsplit, group_bit_metrics, BitLocation, GroupLattice};
