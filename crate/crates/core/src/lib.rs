//! Energy Valley Optimizer wrapper feature selection for network intrusion
//! detection on NSL-KDD.

pub mod classifiers;
pub mod data;
pub mod evo;
pub mod feature_selection;
pub mod harness;
pub mod metrics;
pub mod synthetic;
