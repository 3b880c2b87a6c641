//! Link-budget simulation of intelligent reflecting surfaces under practical
//! control constraints.
//!
//! A single-antenna AP serves a single-antenna UE over a direct LOS path and
//! through a passive `n_cols x n_rows` reflecting surface. The crate computes
//! the received SNR for four control regimes:
//!
//! * element-wise continuous phase (co-phasing optimum),
//! * element-wise 1-bit phase,
//! * column-wise continuous phase (topmost element drives the column),
//! * column-wise 1-bit phase,
//!
//! and reports the SNR gain over the direct path alone across a map of UE
//! positions.
//!
//! ```
//! use irs_sim::prelude::*;
//!
//! let scenario = ScenarioConfig::preset(1)?;
//! let geom = scenario.irs()?;
//! let params = ChannelParams::from_scenario(&scenario)?;
//! let link = LinkParams::new(scenario.tx_power, scenario.noise_power)?;
//!
//! let ue = Point3::new(6.0, 8.0, scenario.ue_height);
//! let ch = compute_channels(&geom, &scenario.ap_pos, &ue, &params)?;
//! let ideal = configure(&ch, &geom, Scheme::ElementContinuous)?;
//! let cheap = configure(&ch, &geom, Scheme::ColumnBinary)?;
//! assert!(snr_gain_db(&ch, &ideal, &link)? >= snr_gain_db(&ch, &cheap, &link)?);
//! # Ok::<(), irs_sim::SimError>(())
//! ```

pub mod channel;
pub mod cli;
mod error;
pub mod experiments;
pub mod geometry;
pub mod link_metrics;
pub mod phase_control;

pub use error::{Result, SimError};

pub mod prelude {
    pub use crate::channel::{compute_channels, los_gain, ChannelParams, ChannelSet};
    pub use crate::experiments::{
        cdf, fraction_at_or_below, phase_histogram, phase_profile, random_ue_average,
        reflection_profile, sweep, CdfSeries, Method, SweepResult,
    };
    pub use crate::geometry::{IrsGeometry, Point3, ScenarioConfig};
    pub use crate::link_metrics::{effective_gain, snr_db, snr_gain_db, LinkParams};
    pub use crate::phase_control::{
        binarize, column_aggregate, column_group, configure, coordinate_ascent_column_binary,
        exhaustive_column_binary, optimal_continuous, PhaseVector, ReflectionConfig, Scheme,
    };
    pub use crate::{Result, SimError};
}

// Keeps the guide's code listings compiling as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/geometry.md")]
    struct Geometry;
    #[doc = include_str!("../../../book/src/channel.md")]
    struct Channel;
    #[doc = include_str!("../../../book/src/phase-control.md")]
    struct PhaseControl;
    #[doc = include_str!("../../../book/src/link-metrics.md")]
    struct LinkMetrics;
    #[doc = include_str!("../../../book/src/experiments.md")]
    struct Experiments;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
