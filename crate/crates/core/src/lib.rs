//! Knowledge-spillover competition game.
//!
//! * [`market`]: knowledge accumulation through a spillover matrix,
//!   attraction-model market shares, the cost-function family and profits.
//! * [`costmin`]: priced cost minimization under a production constraint,
//!   its first-order conditions and the equilibrium price triple.
//! * [`equilibrium`]: best-response dynamics for the effort game and a
//!   deviation-search Nash check.
//! * [`subsidy`]: supplier/buyer split, inverse supply and the subsidized
//!   profit under a negative knowledge price.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod costmin;
pub mod equilibrium;
mod error;
pub mod market;
pub mod numeric;
pub mod subsidy;

pub use error::{ModelError, Result};
