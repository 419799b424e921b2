#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Bound-state spectra and eigenfunctions of the trigonometric
//! Pöschl-Teller potential `V = α²(g_s/sin²αx + g_c/cos²αx)` over its whole
//! coupling plane, including the renormalized strongly attractive regimes.

pub mod cli;
pub mod connection;
pub mod doublewell;
pub mod eigenfn;
pub mod error;
pub mod model;
pub mod oracle;
pub mod specfun;
pub mod spectra;

pub use error::{Error, Result};
