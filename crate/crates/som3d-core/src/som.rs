//! Adaptive interval-halving measurement of the voxel grid.
//!
//! Round 1 measures the lattice of cubes at interval `d0`. Each lattice
//! cell (side `d`, corners measured) is then checked: if all eight corner
//! labels agree, every unlabeled cube of the cell is inferred to carry that
//! label; otherwise the cell's half-interval sub-lattice (face centers,
//! edge midpoints, body center) is scheduled for the next round and the
//! cell splits into eight sub-cells. The interval halves each round until
//! `d = 1`, after which every cube of a disagreeing cell has been measured
//! directly. Cubes are labeled exactly once and never measured twice.
//!
//! Each round's waypoints are routed into a flight tour; round `r + 1`
//! starts where round `r` ended, round 1 at the region origin corner.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::aco::{self, AcoParams, Tour, WaypointSet};
use crate::geometry::{radio_parameter_at, Point3, RadioParameter, Scene};
use crate::grid::{cube_center, CubeIndex, GridSpec, OccupancyMap, Provenance};
use crate::rng::{rng_from_seed, substream};

use rand::Rng;

#[derive(Debug, Error, PartialEq)]
pub enum SomError {
    #[error("interval d0 = {d0} must be a power of two")]
    IntervalNotPowerOfTwo { d0: usize },
    #[error("grid with n = {n} is incompatible with d0 = {d0}: (n - 1) must be divisible by d0")]
    IntervalGridMismatch { n: usize, d0: usize },
    #[error("reconstruction and truth grids differ")]
    GridMismatch,
    #[error("tour planning failed: {0}")]
    Tour(#[from] aco::AcoError),
}

/// Where the measurement is taken inside a cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositionMode {
    Center,
    RandomInCube,
}

/// Configuration of one adaptive run.
#[derive(Debug, Clone, Copy)]
pub struct SomConfig {
    pub d0: usize,
    pub position_mode: PositionMode,
    pub rng_seed: u64,
}

impl SomConfig {
    pub fn validate(&self, grid: GridSpec) -> Result<(), SomError> {
        if self.d0 == 0 || !self.d0.is_power_of_two() {
            return Err(SomError::IntervalNotPowerOfTwo { d0: self.d0 });
        }
        let n = grid.n();
        if n > 1 && (n - 1) % self.d0 != 0 {
            return Err(SomError::IntervalGridMismatch { n, d0: self.d0 });
        }
        Ok(())
    }
}

/// One measurement round: iteration index `r` (1-based), interval `d`, the
/// scheduled waypoint set `D_r` and the measured labels.
#[derive(Debug, Clone)]
pub struct MeasurementRound {
    pub r: usize,
    pub d: usize,
    pub waypoints: Vec<CubeIndex>,
    pub results: BTreeMap<CubeIndex, RadioParameter>,
}

/// Flight record of one round.
#[derive(Debug, Clone)]
pub struct RoundFlight {
    pub r: usize,
    pub d: usize,
    /// Visit order over the round's waypoints (indices into `waypoints`).
    pub tour: Option<Tour>,
    pub tour_length: f64,
    pub cumulative_measurements: usize,
}

/// Per-round tours, lengths and cumulative counts.
#[derive(Debug, Clone, Default)]
pub struct MeasurementLog {
    pub rounds: Vec<RoundFlight>,
}

impl MeasurementLog {
    pub fn total_flight_distance(&self) -> f64 {
        self.rounds.iter().map(|r| r.tour_length).sum()
    }
}

/// Result of an adaptive run: the reconstructed map plus the round history.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub map: OccupancyMap,
    pub rounds: Vec<MeasurementRound>,
    pub total_measurements: usize,
}

/// How each round's waypoints are turned into a tour.
#[derive(Debug, Clone)]
pub enum TourPlanner {
    Aco(AcoParams),
    NearestNeighbor,
    /// Visit in index order; useful when only counts matter.
    IndexOrder,
}

/// Lattice points at interval `d`: every index component in
/// `{0, d, 2d, ..., n-1}`.
pub fn initial_lattice(grid: GridSpec, d: usize) -> Result<Vec<CubeIndex>, SomError> {
    if d == 0 || !d.is_power_of_two() {
        return Err(SomError::IntervalNotPowerOfTwo { d0: d });
    }
    let n = grid.n();
    if n > 1 && (n - 1) % d != 0 {
        return Err(SomError::IntervalGridMismatch { n, d0: d });
    }
    let axis: Vec<usize> = (0..n).step_by(d).collect();
    let mut out = Vec::with_capacity(axis.len().pow(3));
    for &k in &axis {
        for &j in &axis {
            for &i in &axis {
                out.push(CubeIndex::new(i, j, k));
            }
        }
    }
    Ok(out)
}

/// Measurement position inside a cube for the given mode.
///
/// Random positions are derived per cube from `(seed, linear index)`, so a
/// cube's position does not depend on when it is measured.
pub fn measurement_position(
    scene: &Scene,
    grid: GridSpec,
    idx: CubeIndex,
    mode: PositionMode,
    seed: u64,
) -> Point3 {
    let center = cube_center(grid, idx, scene.region_origin()).expect("index in range");
    match mode {
        PositionMode::Center => center,
        PositionMode::RandomInCube => {
            let mut rng = rng_from_seed(substream(seed, idx.linear(grid.n()) as u64));
            let e = grid.edge();
            Point3::new(
                center.x + e * (rng.random_range(0.0..1.0) - 0.5),
                center.y + e * (rng.random_range(0.0..1.0) - 0.5),
                center.z + e * (rng.random_range(0.0..1.0) - 0.5),
            )
        }
    }
}

/// Noiseless measurement of one cube: the radio parameter at the cube's
/// measurement position.
pub fn measure(
    scene: &Scene,
    grid: GridSpec,
    idx: CubeIndex,
    mode: PositionMode,
    seed: u64,
) -> RadioParameter {
    radio_parameter_at(scene, &measurement_position(scene, grid, idx, mode, seed))
}

/// A lattice cell: corner at `base`, side `d` in index units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct LatticeCell {
    pub base: CubeIndex,
    pub d: usize,
}

impl LatticeCell {
    fn corners(&self) -> [CubeIndex; 8] {
        let (b, d) = (self.base, self.d);
        core::array::from_fn(|m| {
            CubeIndex::new(
                b.i + d * (m & 1),
                b.j + d * ((m >> 1) & 1),
                b.k + d * ((m >> 2) & 1),
            )
        })
    }
}

/// Cells of side `d0` tiling the whole grid.
fn root_cells(grid: GridSpec, d0: usize) -> Vec<LatticeCell> {
    let n = grid.n();
    if n < 2 {
        return Vec::new();
    }
    let mut cells = Vec::new();
    for k in (0..n - 1).step_by(d0) {
        for j in (0..n - 1).step_by(d0) {
            for i in (0..n - 1).step_by(d0) {
                cells.push(LatticeCell {
                    base: CubeIndex::new(i, j, k),
                    d: d0,
                });
            }
        }
    }
    cells
}

/// One refinement step over the given cells (all of side `d`, all corners
/// labeled).
///
/// Homogeneous cells fill their unlabeled cubes as inferred, in cell order
/// (first fill wins on shared faces). Disagreeing cells contribute their
/// unlabeled half-interval sub-lattice points to `D_{r+1}` and split into
/// eight sub-cells. Cells of side 1 cannot refine and return nothing.
pub fn refine(
    map: &mut OccupancyMap,
    cells: &[LatticeCell],
) -> (Vec<CubeIndex>, Vec<LatticeCell>) {
    // classify against the labels known at round end; fills below only touch
    // non-corner cubes, so classification does not depend on cell order
    let mut split: Vec<&LatticeCell> = Vec::new();
    let mut homogeneous: Vec<(&LatticeCell, RadioParameter)> = Vec::new();
    for cell in cells {
        let corners = cell.corners();
        let first = map.label(corners[0]);
        if corners[1..].iter().all(|&c| map.label(c) == first) {
            homogeneous.push((cell, first));
        } else {
            split.push(cell);
        }
    }
    for (cell, label) in homogeneous {
        let (b, d) = (cell.base, cell.d);
        for k in b.k..=b.k + d {
            for j in b.j..=b.j + d {
                for i in b.i..=b.i + d {
                    let idx = CubeIndex::new(i, j, k);
                    if !map.is_labeled(idx) {
                        map.set(idx, label, Provenance::Inferred);
                    }
                }
            }
        }
    }
    let mut next_points = BTreeSet::new();
    let mut next_cells = Vec::new();
    for cell in split {
        if cell.d == 1 {
            continue;
        }
        let h = cell.d / 2;
        let b = cell.base;
        for k in (b.k..=b.k + cell.d).step_by(h) {
            for j in (b.j..=b.j + cell.d).step_by(h) {
                for i in (b.i..=b.i + cell.d).step_by(h) {
                    let idx = CubeIndex::new(i, j, k);
                    if !map.is_labeled(idx) {
                        next_points.insert(idx);
                    }
                }
            }
        }
        for m in 0..8 {
            next_cells.push(LatticeCell {
                base: CubeIndex::new(
                    b.i + h * (m & 1),
                    b.j + h * ((m >> 1) & 1),
                    b.k + h * ((m >> 2) & 1),
                ),
                d: h,
            });
        }
    }
    (next_points.into_iter().collect(), next_cells)
}

/// Full adaptive run over the scene.
///
/// Deterministic for fixed `(scene, grid, config, planner)` inputs; tours
/// never influence labels or counts.
pub fn run_som(
    scene: &Scene,
    grid: GridSpec,
    config: &SomConfig,
    planner: &TourPlanner,
) -> Result<(Reconstruction, MeasurementLog), SomError> {
    config.validate(grid)?;
    let mut map = OccupancyMap::new_unknown(grid);
    let mut rounds = Vec::new();
    let mut log = MeasurementLog::default();
    let mut total = 0usize;
    let origin = scene.region_origin();
    let mut uav_position = origin;

    let mut waypoints = initial_lattice(grid, config.d0)?;
    let mut cells = root_cells(grid, config.d0);
    let mut d = config.d0;
    let mut r = 1;

    loop {
        if !waypoints.is_empty() {
            let mut results = BTreeMap::new();
            for &idx in &waypoints {
                debug_assert!(!map.is_labeled(idx), "cube measured twice");
                let label = measure(scene, grid, idx, config.position_mode, config.rng_seed);
                map.set(idx, label, Provenance::Measured);
                results.insert(idx, label);
            }
            total += waypoints.len();
            let tour = plan_round_tour(
                scene,
                grid,
                &waypoints,
                config,
                planner,
                uav_position,
                r as u64,
            )?;
            if let Some((ref t, ref ws)) = tour {
                uav_position = t.endpoint(ws);
            }
            log.rounds.push(RoundFlight {
                r,
                d,
                tour: tour.as_ref().map(|(t, _)| t.clone()),
                tour_length: tour.as_ref().map_or(0.0, |(t, _)| t.length),
                cumulative_measurements: total,
            });
            rounds.push(MeasurementRound {
                r,
                d,
                waypoints: std::mem::take(&mut waypoints),
                results,
            });
        }
        if cells.is_empty() {
            break;
        }
        let (next_points, next_cells) = refine(&mut map, &cells);
        waypoints = next_points;
        cells = next_cells;
        if waypoints.is_empty() && cells.is_empty() {
            break;
        }
        d /= 2;
        r += 1;
    }

    // safety sweep: measure anything still unknown directly
    let unknown: Vec<CubeIndex> = grid.indices().filter(|&i| !map.is_labeled(i)).collect();
    if !unknown.is_empty() {
        let mut results = BTreeMap::new();
        for &idx in &unknown {
            let label = measure(scene, grid, idx, config.position_mode, config.rng_seed);
            map.set(idx, label, Provenance::Measured);
            results.insert(idx, label);
        }
        total += unknown.len();
        rounds.push(MeasurementRound {
            r: r + 1,
            d: 1,
            waypoints: unknown,
            results,
        });
    }

    debug_assert_eq!(map.count_with(Provenance::Unknown), 0);
    debug_assert_eq!(
        total,
        rounds.iter().map(|rd| rd.waypoints.len()).sum::<usize>()
    );
    Ok((
        Reconstruction {
            map,
            rounds,
            total_measurements: total,
        },
        log,
    ))
}

#[allow(clippy::type_complexity)]
fn plan_round_tour(
    scene: &Scene,
    grid: GridSpec,
    waypoints: &[CubeIndex],
    config: &SomConfig,
    planner: &TourPlanner,
    start: Point3,
    round_tag: u64,
) -> Result<Option<(Tour, WaypointSet)>, SomError> {
    let points: Vec<Point3> = waypoints
        .iter()
        .map(|&idx| measurement_position(scene, grid, idx, config.position_mode, config.rng_seed))
        .collect();
    let ws = WaypointSet::new(points, start)?;
    let tour = match planner {
        TourPlanner::Aco(params) => {
            let mut p = *params;
            p.seed = substream(p.seed ^ config.rng_seed, round_tag);
            aco::plan_tour(&ws, &p)?
        }
        TourPlanner::NearestNeighbor => aco::nearest_neighbor_tour(&ws)?,
        TourPlanner::IndexOrder => {
            let order: Vec<usize> = (0..ws.len()).collect();
            let length = aco::tour_length(&order, &ws)?;
            Tour { order, length }
        }
    };
    Ok(Some((tour, ws)))
}

/// Boustrophedon visit of every cube: `x` fastest with alternating
/// direction, then `y` alternating, then `z`. Consecutive cubes are always
/// grid-adjacent.
pub fn snake_traversal(grid: GridSpec) -> Vec<CubeIndex> {
    let n = grid.n();
    let mut order = Vec::with_capacity(grid.cube_count());
    let mut row = 0usize;
    for k in 0..n {
        let js: Vec<usize> = if k % 2 == 0 {
            (0..n).collect()
        } else {
            (0..n).rev().collect()
        };
        for j in js {
            if row % 2 == 0 {
                for i in 0..n {
                    order.push(CubeIndex::new(i, j, k));
                }
            } else {
                for i in (0..n).rev() {
                    order.push(CubeIndex::new(i, j, k));
                }
            }
            row += 1;
        }
    }
    order
}

/// Measurement-count bound for interval `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem3Bound {
    /// `M/d^3` first term (asymptotic lattice count).
    pub paper: f64,
    /// First term replaced by the exact lattice count `((n-1)/d + 1)^3`.
    pub exact_lattice: f64,
}

/// Upper bound on the total number of measurements:
/// `M/d^3 + (2 sqrt(3) S / (3 L^2)) (1 - 1/d^2) M^(2/3)`.
///
/// The refinement term sums the per-round impure-cell estimates; it
/// equals `2 sqrt(3) S (1 - 1/d^2) / (3 eps^2)`.
pub fn theorem3_bound(m: f64, d: usize, s: f64, eps: f64, l: f64) -> Theorem3Bound {
    assert!(m > 0.0 && d >= 1 && s >= 0.0 && eps > 0.0 && l > 0.0);
    let d_f = d as f64;
    let refinement =
        2.0 * 3f64.sqrt() * s / (3.0 * l * l) * (1.0 - 1.0 / (d_f * d_f)) * m.powf(2.0 / 3.0);
    let n = (l / eps).round() as usize;
    let lattice = (((n - 1) / d) + 1).pow(3) as f64;
    Theorem3Bound {
        paper: m / (d_f * d_f * d_f) + refinement,
        exact_lattice: lattice + refinement,
    }
}

/// Fraction of cubes whose reconstructed label differs from the truth.
pub fn reconstruction_error(rec: &Reconstruction, truth: &OccupancyMap) -> Result<f64, SomError> {
    if rec.map.grid() != truth.grid() {
        return Err(SomError::GridMismatch);
    }
    let total = rec.map.grid().cube_count();
    let wrong = rec
        .map
        .labels()
        .iter()
        .zip(truth.labels())
        .filter(|(a, b)| a != b)
        .count();
    Ok(wrong as f64 / total as f64)
}
