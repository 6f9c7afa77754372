//! Group-invariance diagnostics for causal generative models.
//!
//! The crate is organized around the pipeline: sample or enumerate a
//! generic group ([`groups`]), evaluate a cause-mechanism contrast
//! ([`contrasts`]), compare the observed contrast to its expectation under
//! generic transformations ([`genericity`]), and apply the machinery to
//! concrete model families: linear and spectral cause-effect pairs
//! ([`pairwise`]), factorization and clustering models ([`latent`]), and
//! the polygonal occlusion demo ([`scenes`]).

pub mod contrasts;
pub mod error;
pub mod genericity;
pub mod groups;
pub mod latent;
pub mod pairwise;
pub mod scenes;

pub use error::{Error, Result};
