//! Truncated and weighted Fisher (TFisher) combination of p-values: exact
//! null distributions, an omnibus test over parameter grids, power under
//! sparse Gaussian mixtures, efficiency-optimal parameters, simulation
//! tools and a grouped association pipeline.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod altdist;
pub mod assoc;
pub mod cli;
pub mod efficiency;
pub mod error;
pub mod montecarlo;
pub mod nulldist;
pub mod numerics;
pub mod omnibus;
mod output;
pub mod statistic;

pub use altdist::{alt_survival, power, SignalModel};
pub use efficiency::{optimize, EfficiencyConfig, EfficiencyKind, EfficiencySurface, GridSpec};
pub use error::{Error, Result};
pub use montecarlo::{artp_pvalue, rtp_statistic, simulate_null_survival, simulate_power, Method, SimulationPlan};
pub use nulldist::{critical_value, null_moments, null_pvalue, null_survival, NullDistribution, NullMoments};
pub use omnibus::{
    mvn_rectangle, omnibus_null_model, omnibus_pvalue, omnibus_statistic, OmnibusNullModel, OmnibusTest, TauGrid,
};
pub use statistic::{soft_statistic, statistic, PValues, TFisherParams};
