//! Small-dimension complex linear algebra and multiplication accounting.

mod matrix;
pub mod opcount;
pub mod ops;
mod qr;
mod svd;

pub use matrix::CMatrix;
pub use opcount::{counted_context, CountScope, OpCounter};
pub use qr::{qr, QrFactors};
pub use svd::{svd, SvdFactors};

pub use num_complex::Complex64;
