//! Simulation and learning toolkit for mmWave beam profiling.
//!
//! The crate models directional beam gain and link quality for two testbed
//! profiles, synthesizes beam-profiling datasets over a virtual measurement
//! map, and trains a feed-forward predictor (plus classical baselines) that
//! maps a beam direction, spot angle and distance to the measured link
//! metric.
//!
//! Modules:
//!
//! * [`beam`] — codebooks, array geometry and Fejér-kernel beam patterns.
//! * [`channel`] — path loss, small-scale fading, received power and rate.
//! * [`profiler`] — the virtual map, sweep harness, datasets and profiles.
//! * [`learner`] — the MLP predictor, classical baselines and metrics.

pub mod beam;
pub mod channel;
pub mod learner;
pub mod profiler;

pub use beam::{fejer_kernel, make_interdigital_codebook, make_ni_codebook, Codebook};
pub use channel::{ChannelParams, FadingSample, RateParams};
pub use profiler::{Dataset, MetricKind, TestbedProfile};
