//! Runs the book's examples as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/bits.md")]
pub mod bits {}

#[doc = include_str!("../../../book/src/dyadics.md")]
pub mod dyadics {}

#[doc = include_str!("../../../book/src/martingales.md")]
pub mod martingales {}

#[doc = include_str!("../../../book/src/block-codec.md")]
pub mod block_codec {}

#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}

#[doc = include_str!("../../../book/src/transducers.md")]
pub mod transducers {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
