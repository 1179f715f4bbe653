pub mod cf;
pub mod circle;
pub mod construction;
mod decimal;
pub mod error;
pub mod metric;
pub mod nn;
pub mod orbit;
pub mod rational;
pub mod truncation;
pub mod verify;

pub use error::{Error, Result};
pub use num_bigint::BigUint;
pub use rational::ExactRational;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/continued-fractions.md")]
    mod continued_fractions {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/nearest-neighbors.md")]
    mod nearest_neighbors {}
    #[doc = include_str!("../../../book/src/constructions.md")]
    mod constructions {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
