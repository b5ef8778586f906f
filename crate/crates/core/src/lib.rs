//! Combinatorial dimensions and metric entropy on finite instances: scaled VC
//! dimension, fat-shattering dimension, packing and covering numbers, cube and
//! coordinate extraction, Gaussian mean width, Dudley integrals and
//! ℓ₁-subsystem extraction, plus a seeded harness that fits the unnamed
//! absolute constants of the corresponding inequalities.

pub mod bitset;
pub mod budget;
pub(crate) mod cubes;
pub mod convex;
pub mod coverings;
pub mod dimensions;
pub mod empirical;
pub mod error;
pub mod extraction;
pub mod harness;
pub mod lp;
pub mod rng;
pub mod spaces;

pub use budget::Budget;
pub use error::{Result, VceError};
