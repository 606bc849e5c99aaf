//! Exact auction mechanisms with incentive-compatibility diagnostics.
//!
//! Position and per-bidder-curve ("ad types") auctions, priced by minimal
//! competitive-equilibrium duals, generalized second price, first price, or
//! greedy rules, together with envy / regret measurements of how far each
//! mechanism is from truthful.

pub mod assignment;
pub mod error;
pub mod harness;
pub mod instance;
pub mod metrics;
pub mod money;
pub mod position;
pub mod pricing;

pub use error::{Error, Result};
pub use instance::{
    discounted_value, utility, AdTypesInstance, DiscountCurve, InstanceFile, Outcome,
    PositionInstance, SlotAssignment,
};
pub use money::Money;
