//! Fitted learning with competitive overcomplete output layers (COOL).
//!
//! The crate bundles a small dense-network engine ([`nn`]), the COOL head
//! ([`cool`]), dataset generators and loaders ([`datasets`]), and the
//! experiment drivers built on top: fooling attacks ([`fooling`]), separable
//! concept learning ([`scl`]), one-class networks ([`oneclass`]), and
//! activation maps ([`vizmap`]).

pub mod cool;
pub mod datasets;
pub mod error;
pub mod nn;

pub use cool::{AggregateConfig, AggregateOp};
pub use datasets::LabeledSet;
pub use error::{Error, Result};
pub use nn::{Activation, Head, HeadKind, InitScheme, NetSpec, Network, SgdConfig};
pub mod fooling;
pub mod vizmap;
pub mod scl;
pub mod oneclass;
