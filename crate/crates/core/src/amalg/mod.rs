//! Exact angular-momentum algebra: Clebsch-Gordan coefficients, ladder
//! matrix elements, and the Gamma / hypergeometric functions used by the
//! closed-form success probabilities.

mod cg;
mod halfint;
pub(crate) mod radical;
mod special;

pub use cg::{cg, lowering_element, raising_element};
pub use halfint::HalfInt;
pub use radical::ExactRadical;
pub use special::{hyp2f1_terminating, log_gamma, reciprocal_gamma, LogGamma};
