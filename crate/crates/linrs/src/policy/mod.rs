//! Contextual policies: LinRS (satisficing), LinUCB and LinTS baselines.
//! All three keep disjoint per-arm linear models and buffer their reward
//! statistics in arrival order, flushing every `batch_size` observations.

mod lints;
mod linrs;
mod linucb;

pub use lints::{LinTs, LinTsParams};
pub use linrs::{reliability_loss_and_grad, LinRs, LinRsParams};
pub use linucb::LinUcb;
