//! Tour planning over measurement waypoints.
//!
//! Each measurement round visits a set of waypoints starting from the
//! current UAV position. Tours are open Hamiltonian paths (no return leg);
//! the next round picks up where the previous one ended.
//!
//! [`plan_tour`] runs an Ant System: ants build paths city by city with
//! probability proportional to `tau^alpha * (1/dist)^beta`, pheromone
//! evaporates each iteration and the iteration-best path deposits
//! `deposit / length` on its edges. [`nearest_neighbor_tour`] and
//! [`brute_force_tour`] provide the greedy baseline and the exact optimum
//! for small instances.

use rand::Rng;
use thiserror::Error;

use crate::geometry::Point3;
use crate::rng::rng_from_seed;

#[derive(Debug, Error, PartialEq)]
pub enum AcoError {
    #[error("waypoint set is empty")]
    EmptyWaypointSet,
    #[error("waypoints must be distinct (duplicate at index {0})")]
    DuplicateWaypoint(usize),
    #[error("brute force is limited to 10 waypoints, got {0}")]
    TooManyWaypoints(usize),
    #[error("order is not a permutation of the waypoints")]
    InvalidPermutation,
    #[error("invalid parameters: {0}")]
    BadParams(&'static str),
}

/// Waypoints to visit plus the tour origin.
#[derive(Debug, Clone)]
pub struct WaypointSet {
    points: Vec<Point3>,
    start: Point3,
}

impl WaypointSet {
    pub fn new(points: Vec<Point3>, start: Point3) -> Result<Self, AcoError> {
        if points.is_empty() {
            return Err(AcoError::EmptyWaypointSet);
        }
        for i in 1..points.len() {
            if points[..i].iter().any(|p| p == &points[i]) {
                return Err(AcoError::DuplicateWaypoint(i));
            }
        }
        Ok(Self { points, start })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn start(&self) -> Point3 {
        self.start
    }
}

/// Ant System parameters.
#[derive(Debug, Clone, Copy)]
pub struct AcoParams {
    pub n_ants: usize,
    pub alpha_pher: f64,
    pub beta_heur: f64,
    pub rho: f64,
    pub deposit: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for AcoParams {
    fn default() -> Self {
        Self {
            n_ants: 20,
            alpha_pher: 1.0,
            beta_heur: 3.0,
            rho: 0.1,
            deposit: 1.0,
            iterations: 200,
            seed: 0,
        }
    }
}

impl AcoParams {
    fn validate(&self) -> Result<(), AcoError> {
        if self.n_ants == 0 || self.iterations == 0 {
            return Err(AcoError::BadParams("n_ants and iterations must be >= 1"));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(AcoError::BadParams("rho must lie in (0, 1)"));
        }
        if self.alpha_pher <= 0.0 || self.beta_heur <= 0.0 || self.deposit <= 0.0 {
            return Err(AcoError::BadParams("weights must be positive"));
        }
        Ok(())
    }
}

/// An open path over all waypoints of a set.
#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    pub order: Vec<usize>,
    pub length: f64,
}

impl Tour {
    /// Last visited point; the start of the next round's tour.
    pub fn endpoint(&self, ws: &WaypointSet) -> Point3 {
        ws.points[*self.order.last().expect("tour is never empty")]
    }
}

/// Path length of `order` through `ws`, including the `start -> first` leg.
pub fn tour_length(order: &[usize], ws: &WaypointSet) -> Result<f64, AcoError> {
    let n = ws.len();
    if order.len() != n {
        return Err(AcoError::InvalidPermutation);
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || seen[i] {
            return Err(AcoError::InvalidPermutation);
        }
        seen[i] = true;
    }
    let mut len = ws.start.dist(&ws.points[order[0]]);
    for w in order.windows(2) {
        len += ws.points[w[0]].dist(&ws.points[w[1]]);
    }
    Ok(len)
}

/// Greedy next-closest tour from the start. Ties break toward the lowest
/// index.
pub fn nearest_neighbor_tour(ws: &WaypointSet) -> Result<Tour, AcoError> {
    if ws.is_empty() {
        return Err(AcoError::EmptyWaypointSet);
    }
    let n = ws.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut current = ws.start;
    let mut length = 0.0;
    for _ in 0..n {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (i, p) in ws.points.iter().enumerate() {
            if !visited[i] {
                let d = current.dist(p);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
        }
        visited[best] = true;
        order.push(best);
        length += best_d;
        current = ws.points[best];
    }
    Ok(Tour { order, length })
}

/// Exact optimal open path by exhaustive search with partial-length
/// pruning. Limited to 10 waypoints.
pub fn brute_force_tour(ws: &WaypointSet) -> Result<Tour, AcoError> {
    if ws.is_empty() {
        return Err(AcoError::EmptyWaypointSet);
    }
    let n = ws.len();
    if n > 10 {
        return Err(AcoError::TooManyWaypoints(n));
    }
    let dist = DistanceTable::new(ws);
    // seed the bound with the greedy tour
    let nn = nearest_neighbor_tour(ws)?;
    let mut best = nn.clone();

    fn search(
        dist: &DistanceTable,
        path: &mut Vec<usize>,
        used: &mut [bool],
        len: f64,
        best: &mut Tour,
    ) {
        if len >= best.length {
            return;
        }
        if path.len() == used.len() {
            best.order = path.clone();
            best.length = len;
            return;
        }
        let from = path.last().copied();
        for next in 0..used.len() {
            if !used[next] {
                used[next] = true;
                path.push(next);
                search(dist, path, used, len + dist.leg(from, next), best);
                path.pop();
                used[next] = false;
            }
        }
    }

    let mut path = Vec::with_capacity(n);
    let mut used = vec![false; n];
    search(&dist, &mut path, &mut used, 0.0, &mut best);
    Ok(best)
}

struct DistanceTable {
    n: usize,
    from_start: Vec<f64>,
    pairwise: Vec<f64>,
}

impl DistanceTable {
    fn new(ws: &WaypointSet) -> Self {
        let n = ws.len();
        let from_start = ws.points.iter().map(|p| ws.start.dist(p)).collect();
        let mut pairwise = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                pairwise[i * n + j] = ws.points[i].dist(&ws.points[j]);
            }
        }
        Self {
            n,
            from_start,
            pairwise,
        }
    }

    fn leg(&self, from: Option<usize>, to: usize) -> f64 {
        match from {
            None => self.from_start[to],
            Some(i) => self.pairwise[i * self.n + to],
        }
    }
}

/// Ant-colony tour over the waypoint set. Deterministic for a fixed
/// `(ws, params, seed)`.
pub fn plan_tour(ws: &WaypointSet, params: &AcoParams) -> Result<Tour, AcoError> {
    if ws.is_empty() {
        return Err(AcoError::EmptyWaypointSet);
    }
    params.validate()?;
    let n = ws.len();
    if n == 1 {
        return Ok(Tour {
            order: vec![0],
            length: ws.start.dist(&ws.points[0]),
        });
    }
    let dist = DistanceTable::new(ws);
    let nn = nearest_neighbor_tour(ws)?;
    // scale-free pheromone init; the floor keeps degenerate instances
    // (all points coincident with start legs of zero) finite
    let tau0 = 1.0 / (n as f64 * nn.length.max(1e-12));
    // slot 0 holds the start->city edge, slot i+1 the city i->city j edges
    let mut tau = vec![tau0; (n + 1) * n];
    let dist_floor = 1e-12 * (nn.length.max(1.0));

    let mut rng = rng_from_seed(params.seed);
    let mut best = nn;
    let mut weights = vec![0.0; n];
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];

    for _ in 0..params.iterations {
        let mut iter_best: Option<Tour> = None;
        for _ in 0..params.n_ants {
            order.clear();
            visited.iter_mut().for_each(|v| *v = false);
            let mut length = 0.0;
            let mut from: Option<usize> = None;
            for _step in 0..n {
                let row = from.map_or(0, |i| i + 1);
                let mut total = 0.0;
                for (next, w) in weights.iter_mut().enumerate() {
                    *w = 0.0;
                    if !visited[next] {
                        let d = dist.leg(from, next).max(dist_floor);
                        let weight = tau[row * n + next].powf(params.alpha_pher)
                            * (1.0 / d).powf(params.beta_heur);
                        if weight.is_finite() {
                            *w = weight;
                            total += weight;
                        }
                    }
                }
                let next = if total > 0.0 && total.is_finite() {
                    let mut pick = rng.random_range(0.0..total);
                    let mut chosen = None;
                    for (i, &w) in weights.iter().enumerate() {
                        if w > 0.0 {
                            pick -= w;
                            if pick <= 0.0 {
                                chosen = Some(i);
                                break;
                            }
                        }
                    }
                    // fp slack: fall back to the last feasible city
                    chosen.unwrap_or_else(|| {
                        weights.iter().rposition(|&w| w > 0.0).expect("feasible city")
                    })
                } else {
                    // underflow fallback: nearest unvisited
                    (0..n)
                        .filter(|&i| !visited[i])
                        .min_by(|&a, &b| dist.leg(from, a).total_cmp(&dist.leg(from, b)))
                        .expect("unvisited city")
                };
                visited[next] = true;
                length += dist.leg(from, next);
                order.push(next);
                from = Some(next);
            }
            if iter_best.as_ref().is_none_or(|t| length < t.length) {
                iter_best = Some(Tour {
                    order: order.clone(),
                    length,
                });
            }
        }
        let iter_best = iter_best.expect("at least one ant");
        // evaporation, then iteration-best deposit
        for t in tau.iter_mut() {
            *t *= 1.0 - params.rho;
        }
        let gain = params.deposit / iter_best.length.max(1e-12);
        let mut row = 0;
        for &city in &iter_best.order {
            tau[row * n + city] += gain;
            row = city + 1;
        }
        if iter_best.length < best.length {
            best = iter_best;
        }
    }
    debug_assert!(is_permutation(&best.order, n));
    Ok(best)
}

fn is_permutation(order: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    order.len() == n
        && order.iter().all(|&i| {
            if i < n && !seen[i] {
                seen[i] = true;
                true
            } else {
                false
            }
        })
}
