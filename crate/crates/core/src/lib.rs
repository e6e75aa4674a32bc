//! Generalized inverses of third-order tensors under the M-product.
//!
//! The M-product `A *_M B` of tensors is defined by an invertible matrix `M`:
//! both operands are transformed along the third mode, their frontal slices
//! are multiplied pairwise, and the result is transformed back. On top of
//! this algebra the crate computes outer inverses with prescribed range and
//! null space, and the Moore-Penrose, Drazin and group inverses as special
//! cases, along two independent routes:
//!
//! * [`outer`]: a column-pivoted M-QR factorization ([`mqr`]) of the
//!   range/kernel tensor `W`;
//! * [`hyperpower`]: factorized hyperpower iterations of order 9 and 19.
//!
//! [`oracle`] holds slow block-diagonal reference implementations used to
//! cross-check both routes.

pub mod algebra;
pub mod error;
pub mod generators;
pub mod hyperpower;
pub mod mqr;
pub mod oracle;
pub mod outer;
pub mod tensor;
pub mod transform;

pub use algebra::MContext;
pub use error::{Error, Result};
pub use tensor::Tensor3;
pub use transform::{TransformKind, TransformSpec};

/// Complex double-precision scalar.
pub type C64 = nalgebra::Complex<f64>;

/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
