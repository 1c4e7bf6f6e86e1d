// SPDX-License-Identifier: Apache-2.0

//! Shortcut-to-adiabaticity quench control for free-fermion spin chains.
//!
//! Momentum-decoupled chains (nearest-neighbour and long-range Kitaev)
//! reduce to independent two-level systems. Quench schedules are
//! inverse engineered for the slowest mode and applied to every mode,
//! to disordered chains in real space, and to a non-integrable
//! long-range Ising chain by exact diagonalization.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod control;
pub mod disorder;
pub mod error;
pub mod exact_diag;
pub mod ode;
pub mod quench;
pub mod spectral;

pub use error::{Error, Result};
