//! Generation and analysis of synthetic human-mobility contact traces in
//! which movement is driven by regularly re-occurring group meetings.
//!
//! The crate is organized as a pipeline:
//!
//! * [`social`]: the static social network that defines who can form a
//!   group together (synthetic generators or an edge-list file).
//! * [`groups`]: group construction (membership via snowball sampling,
//!   per-group regularity factor and inter-meeting period) and the full
//!   meeting schedule for the simulation horizon.
//! * [`mobility`]: the spatial layer: uniform homes on a square-cell
//!   grid, distance-decayed meeting-place selection, and per-node
//!   itineraries between home and meetings.
//! * [`trace`]: pairwise contact extraction and the external trace
//!   formats (ONE movement / connection events, contact CSV).
//! * [`analysis`]: inter-contact time and contact duration statistics,
//!   group detection in contact traces, re-meeting histograms, clique
//!   percolation communities, and automatic parameter extraction.
//! * [`forwarding`]: trace replay under Flooding, Bubble Rap and a
//!   group-path protocol, with delivery/overhead metrics over a TTL sweep.
//! * [`stats`]: the shared seeded random source, truncated-power-law
//!   sampling and maximum-likelihood fitting used throughout.
//! * [`config`]: the scenario parameter set with defaults, validation
//!   and unit-suffixed durations.
//! * [`pipeline`]: glue running social, groups, mobility, trace.
//!
//! Everything is deterministic for a fixed seed: the random source is a
//! ChaCha8 stream keyed by a 64-bit seed, and all iteration in the
//! generation path is over ordered structures.

pub mod analysis;
pub mod config;
pub mod forwarding;
pub mod groups;
pub mod mobility;
pub mod pipeline;
pub mod social;
pub mod stats;
pub mod trace;

pub use stats::RandomSource;
