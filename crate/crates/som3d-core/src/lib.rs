//! Core algorithms for 3D spectrum-occupancy mapping (SOM).
//!
//! A cubic region containing licensed radio networks is discretized into an
//! `n x n x n` voxel grid. Each voxel carries a *radio parameter*: a bitmask
//! over the networks detectable inside it. This crate provides
//!
//! - [`geometry`]: scenes of spherical coverage volumes and point-wise radio
//!   parameter evaluation, plus a Monte Carlo estimator for the total
//!   boundary surface area inside the region;
//! - [`grid`]: voxelization, ground-truth labels by volume majority, and the
//!   discretization error (RPE) of a grid;
//! - [`planecut`]: the plane-cube cut machinery behind the error scaling
//!   laws — cut areas, small-side volumes, their expectations under given
//!   parameter distributions, and the resulting RPE prediction;
//! - [`som`]: the adaptive interval-halving measurement algorithm, the
//!   snake-traversal baseline, and the measurement-count bound;
//! - [`aco`]: ant-colony tour planning over per-round waypoint sets, with
//!   nearest-neighbor and exact brute-force baselines.
//!
//! All operations are deterministic given their inputs and seeds; Monte
//! Carlo estimators use seeded substreams reduced in a fixed order, so
//! results do not depend on thread count.

pub mod aco;
pub mod geometry;
pub mod grid;
pub mod planecut;
pub mod rng;
pub mod som;

pub use aco::{AcoParams, Tour, WaypointSet};
pub use geometry::{LicensedNetwork, Point3, RadioParameter, Scene};
pub use grid::{CubeIndex, GridSpec, OccupancyMap, Provenance};
pub use planecut::{CutGeometry, ParameterDistributions, PlaneCutParams};
pub use som::{
    MeasurementLog, MeasurementRound, PositionMode, Reconstruction, SomConfig, Theorem3Bound,
    TourPlanner,
};
