//! Voxel grid over the region: ground-truth labels and discretization error.
//!
//! The region is divided into `M = n^3` cubes of side `eps = L/n`. A cube's
//! ground-truth label is the radio parameter occupying the largest volume
//! fraction of the cube (ties break toward the smallest parameter value).
//! The *radio parameter error* (RPE) of a cube is one minus that largest
//! fraction; the grid RPE is the volume-weighted mean, `1/M` per cube on a
//! uniform grid.
//!
//! Volume fractions are estimated on a stratified `s x s x s` lattice inside
//! each cube: deterministic, reproducible, and O(1/s) accurate for
//! plane-like boundaries.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{radio_parameter_at, Point3, RadioParameter, Scene};

/// Uniform grid geometry: `n` cubes per axis, each of side `edge`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    edge: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid must have n >= 1 and a positive edge")]
    BadSpec,
    #[error("cube index ({i}, {j}, {k}) out of range for n = {n}")]
    IndexOutOfRange { i: usize, j: usize, k: usize, n: usize },
    #[error("volume fraction map is empty")]
    EmptyFractions,
    #[error("grids differ: {0} vs {1} cubes per axis")]
    GridMismatch(usize, usize),
}

impl GridSpec {
    pub fn new(n: usize, edge: f64) -> Result<Self, GridError> {
        if n == 0 || !edge.is_finite() || edge <= 0.0 {
            return Err(GridError::BadSpec);
        }
        Ok(Self { n, edge })
    }

    /// Grid covering a region of edge `region_edge` with `n` cubes per axis.
    pub fn for_region(n: usize, region_edge: f64) -> Result<Self, GridError> {
        Self::new(n, region_edge / n as f64)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Cube side `eps`.
    pub fn edge(&self) -> f64 {
        self.edge
    }

    /// Total cube count `M = n^3`.
    pub fn cube_count(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn contains(&self, idx: CubeIndex) -> bool {
        idx.i < self.n && idx.j < self.n && idx.k < self.n
    }

    /// Iterates all cube indices in linear order (`i` fastest).
    pub fn indices(&self) -> impl Iterator<Item = CubeIndex> + '_ {
        let n = self.n;
        (0..n).flat_map(move |k| {
            (0..n).flat_map(move |j| (0..n).map(move |i| CubeIndex { i, j, k }))
        })
    }
}

/// Index of one cube, each component in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CubeIndex {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl CubeIndex {
    pub const fn new(i: usize, j: usize, k: usize) -> Self {
        Self { i, j, k }
    }

    /// Linear index with `i` fastest.
    pub fn linear(&self, n: usize) -> usize {
        self.i + n * (self.j + n * self.k)
    }

    pub fn from_linear(lin: usize, n: usize) -> Self {
        Self {
            i: lin % n,
            j: (lin / n) % n,
            k: lin / (n * n),
        }
    }
}

/// How a cube's label was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Measured,
    Inferred,
    Unknown,
}

/// Per-cube labels over a grid, with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMap {
    grid: GridSpec,
    labels: Vec<RadioParameter>,
    provenance: Vec<Provenance>,
}

impl OccupancyMap {
    /// All cubes unknown.
    pub fn new_unknown(grid: GridSpec) -> Self {
        let m = grid.cube_count();
        Self {
            grid,
            labels: vec![RadioParameter::EMPTY; m],
            provenance: vec![Provenance::Unknown; m],
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn label(&self, idx: CubeIndex) -> RadioParameter {
        self.labels[idx.linear(self.grid.n)]
    }

    pub fn provenance(&self, idx: CubeIndex) -> Provenance {
        self.provenance[idx.linear(self.grid.n)]
    }

    /// Sets a label once; panics if the cube is already labeled.
    pub fn set(&mut self, idx: CubeIndex, label: RadioParameter, prov: Provenance) {
        let lin = idx.linear(self.grid.n);
        assert!(
            matches!(self.provenance[lin], Provenance::Unknown),
            "cube {idx:?} labeled twice"
        );
        self.labels[lin] = label;
        self.provenance[lin] = prov;
    }

    pub fn is_labeled(&self, idx: CubeIndex) -> bool {
        !matches!(self.provenance(idx), Provenance::Unknown)
    }

    pub fn count_with(&self, prov: Provenance) -> usize {
        self.provenance.iter().filter(|&&p| p == prov).count()
    }

    pub fn labels(&self) -> &[RadioParameter] {
        &self.labels
    }
}

/// Center of cube `idx`: `origin + eps * (idx + 1/2)` per axis.
pub fn cube_center(grid: GridSpec, idx: CubeIndex, origin: Point3) -> Result<Point3, GridError> {
    if !grid.contains(idx) {
        return Err(GridError::IndexOutOfRange {
            i: idx.i,
            j: idx.j,
            k: idx.k,
            n: grid.n,
        });
    }
    let e = grid.edge;
    Ok(Point3::new(
        origin.x + e * (idx.i as f64 + 0.5),
        origin.y + e * (idx.j as f64 + 0.5),
        origin.z + e * (idx.k as f64 + 0.5),
    ))
}

/// Per-label counts over the stratified `s^3` lattice of one cube.
///
/// Lattice points sit at offsets `(m + 1/2) / s * eps`, so no point lies on
/// a cube face.
fn lattice_counts(scene: &Scene, grid: GridSpec, idx: CubeIndex, s: usize) -> Vec<(u64, u32)> {
    let origin = scene.region_origin();
    let e = grid.edge;
    let base = Point3::new(
        origin.x + e * idx.i as f64,
        origin.y + e * idx.j as f64,
        origin.z + e * idx.k as f64,
    );
    let mut counts: Vec<(u64, u32)> = Vec::with_capacity(4);
    for a in 0..s {
        let x = base.x + e * (a as f64 + 0.5) / s as f64;
        for b in 0..s {
            let y = base.y + e * (b as f64 + 0.5) / s as f64;
            for c in 0..s {
                let z = base.z + e * (c as f64 + 0.5) / s as f64;
                let label = radio_parameter_at(scene, &Point3::new(x, y, z)).0;
                match counts.iter_mut().find(|(l, _)| *l == label) {
                    Some((_, cnt)) => *cnt += 1,
                    None => counts.push((label, 1)),
                }
            }
        }
    }
    counts
}

/// Volume fraction of each radio parameter inside cube `idx`, estimated on
/// an `s^3` stratified lattice. Fractions sum to 1.
pub fn cube_volume_fractions(
    scene: &Scene,
    grid: GridSpec,
    idx: CubeIndex,
    s: usize,
) -> Result<BTreeMap<RadioParameter, f64>, GridError> {
    assert!(s >= 1, "subsample count must be at least 1");
    if !grid.contains(idx) {
        return Err(GridError::IndexOutOfRange {
            i: idx.i,
            j: idx.j,
            k: idx.k,
            n: grid.n,
        });
    }
    let total = (s * s * s) as f64;
    Ok(lattice_counts(scene, grid, idx, s)
        .into_iter()
        .map(|(label, cnt)| (RadioParameter(label), cnt as f64 / total))
        .collect())
}

/// Majority label; ties break toward the numerically smallest parameter.
pub fn ground_truth_label(
    fractions: &BTreeMap<RadioParameter, f64>,
) -> Result<RadioParameter, GridError> {
    let mut best: Option<(RadioParameter, f64)> = None;
    for (&label, &frac) in fractions {
        match best {
            Some((_, bf)) if frac <= bf => {}
            _ => best = Some((label, frac)),
        }
    }
    best.map(|(l, _)| l).ok_or(GridError::EmptyFractions)
}

/// RPE of one cube: `1 - max_j p_ij`.
pub fn cube_rpe(fractions: &BTreeMap<RadioParameter, f64>) -> Result<f64, GridError> {
    let max = fractions
        .values()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if max.is_finite() {
        Ok(1.0 - max)
    } else {
        Err(GridError::EmptyFractions)
    }
}

/// Grid RPE: `(1/M) * sum_i cube_rpe(i)` over all cubes.
///
/// Cubes are evaluated in parallel; the sum runs in linear-index order so
/// the result is independent of thread count.
pub fn discretization_rpe(scene: &Scene, grid: GridSpec, s: usize) -> f64 {
    assert!(s >= 1, "subsample count must be at least 1");
    let n = grid.n;
    let total = (s * s * s) as u32;
    let per_cube: Vec<f64> = (0..grid.cube_count())
        .into_par_iter()
        .map(|lin| {
            let idx = CubeIndex::from_linear(lin, n);
            let counts = lattice_counts(scene, grid, idx, s);
            let max = counts.iter().map(|&(_, c)| c).max().unwrap_or(0);
            1.0 - max as f64 / total as f64
        })
        .collect();
    per_cube.iter().sum::<f64>() / grid.cube_count() as f64
}

/// Ground-truth occupancy map: every cube gets its volume-majority label.
pub fn ground_truth_map(scene: &Scene, grid: GridSpec, s: usize) -> OccupancyMap {
    assert!(s >= 1, "subsample count must be at least 1");
    let n = grid.n;
    let labels: Vec<RadioParameter> = (0..grid.cube_count())
        .into_par_iter()
        .map(|lin| {
            let idx = CubeIndex::from_linear(lin, n);
            let counts = lattice_counts(scene, grid, idx, s);
            // argmax with smallest-label tie-break
            let mut best: Option<(u64, u32)> = None;
            for &(label, cnt) in &counts {
                match best {
                    Some((bl, bc)) if cnt < bc || (cnt == bc && label > bl) => {}
                    _ => best = Some((label, cnt)),
                }
            }
            RadioParameter(best.map(|(l, _)| l).unwrap_or_default())
        })
        .collect();
    let m = grid.cube_count();
    OccupancyMap {
        grid,
        labels,
        provenance: vec![Provenance::Measured; m],
    }
}
