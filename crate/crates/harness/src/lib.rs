//! Experiment driver for RCMAES: seeded campaigns, scoring, convergence
//! curves and timing. The `rcmaes` binary is a thin CLI over these modules.

pub mod campaign;
pub mod config;
pub mod convergence;
pub mod error;
pub mod score;
pub mod timing;

pub use campaign::{Campaign, CampaignProblem, CampaignSummary};
pub use config::Config;
pub use error::{HarnessError, Result};
