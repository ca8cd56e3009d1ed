//! Scenes of licensed networks and point-wise radio parameter evaluation.
//!
//! A [`Scene`] is an axis-aligned cubic region of edge `L` containing `T`
//! licensed networks, each covering a sphere. The *radio parameter* at a
//! point is the bitmask of networks whose coverage contains it: bit `k-1`
//! is set iff network `k` is detected there. Shadowing and fading are not
//! modeled; detection is purely geometric.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::rng::{rng_from_seed, substream};

/// A point in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Squared Euclidean distance to `other`.
    pub fn dist2(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }

    pub fn dist(&self, other: &Point3) -> f64 {
        self.dist2(other).sqrt()
    }
}

/// Spherical coverage volume of one licensed network.
///
/// Ids are 1-based and contiguous: network `k` owns bit `k-1` of the radio
/// parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LicensedNetwork {
    pub id: usize,
    pub center: Point3,
    pub radius: f64,
}

/// Bitmask over licensed networks; the spectrum-occupancy label of a point
/// or cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct RadioParameter(pub u64);

impl RadioParameter {
    pub const EMPTY: RadioParameter = RadioParameter(0);

    /// True iff network `k` (1-based) is detected.
    pub fn has_network(&self, k: usize) -> bool {
        debug_assert!(k >= 1);
        self.0 & (1u64 << (k - 1)) != 0
    }
}

impl std::fmt::Display for RadioParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("region edge must be positive and finite, got {0}")]
    BadRegionEdge(f64),
    #[error("region origin must have finite coordinates")]
    BadRegionOrigin,
    #[error("network {id}: radius must be positive and finite, got {radius}")]
    BadRadius { id: usize, radius: f64 },
    #[error("network {id}: center must have finite coordinates")]
    BadCenter { id: usize },
    #[error("network ids must be contiguous from 1; expected {expected}, got {got}")]
    NonContiguousIds { expected: usize, got: usize },
    #[error("at most 63 networks are supported, got {0}")]
    TooManyNetworks(usize),
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("unknown network id {id} (scene has {count} networks)")]
    UnknownNetwork { id: usize, count: usize },
    #[error("sample count must be at least 1")]
    ZeroSamples,
}

/// A cubic region of edge `L` with `T` licensed networks inside.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    region_origin: Point3,
    region_edge: f64,
    networks: Vec<LicensedNetwork>,
}

impl Scene {
    /// Builds a scene, validating radii, finiteness and id contiguity.
    pub fn new(
        region_origin: Point3,
        region_edge: f64,
        networks: Vec<LicensedNetwork>,
    ) -> Result<Self, SceneError> {
        if !region_edge.is_finite() || region_edge <= 0.0 {
            return Err(SceneError::BadRegionEdge(region_edge));
        }
        if !region_origin.is_finite() {
            return Err(SceneError::BadRegionOrigin);
        }
        if networks.len() > 63 {
            return Err(SceneError::TooManyNetworks(networks.len()));
        }
        for (i, nw) in networks.iter().enumerate() {
            if nw.id != i + 1 {
                return Err(SceneError::NonContiguousIds {
                    expected: i + 1,
                    got: nw.id,
                });
            }
            if !nw.radius.is_finite() || nw.radius <= 0.0 {
                return Err(SceneError::BadRadius {
                    id: nw.id,
                    radius: nw.radius,
                });
            }
            if !nw.center.is_finite() {
                return Err(SceneError::BadCenter { id: nw.id });
            }
        }
        Ok(Self {
            region_origin,
            region_edge,
            networks,
        })
    }

    /// Convenience constructor assigning contiguous ids from the list order.
    pub fn from_spheres(
        region_origin: Point3,
        region_edge: f64,
        spheres: &[(Point3, f64)],
    ) -> Result<Self, SceneError> {
        let networks = spheres
            .iter()
            .enumerate()
            .map(|(i, &(center, radius))| LicensedNetwork {
                id: i + 1,
                center,
                radius,
            })
            .collect();
        Self::new(region_origin, region_edge, networks)
    }

    pub fn region_origin(&self) -> Point3 {
        self.region_origin
    }

    pub fn region_edge(&self) -> f64 {
        self.region_edge
    }

    pub fn networks(&self) -> &[LicensedNetwork] {
        &self.networks
    }

    /// Number of licensed networks `T`.
    pub fn network_count(&self) -> usize {
        self.networks.len()
    }

    /// True iff `p` lies in the closed region box.
    pub fn contains(&self, p: &Point3) -> bool {
        let o = self.region_origin;
        let l = self.region_edge;
        p.x >= o.x
            && p.x <= o.x + l
            && p.y >= o.y
            && p.y <= o.y + l
            && p.z >= o.z
            && p.z <= o.z + l
    }
}

/// Whether network `k` (1-based) is detected at `p`.
///
/// Points on the sphere surface count as detected; the tie-break is
/// inclusive so evaluation is deterministic.
pub fn detect(scene: &Scene, k: usize, p: &Point3) -> Result<bool, GeometryError> {
    let nw = scene
        .networks
        .get(k.wrapping_sub(1))
        .ok_or(GeometryError::UnknownNetwork {
            id: k,
            count: scene.networks.len(),
        })?;
    Ok(p.dist2(&nw.center) <= nw.radius * nw.radius)
}

/// Radio parameter at a point: bit `k-1` set iff network `k` detected.
pub fn radio_parameter_at(scene: &Scene, p: &Point3) -> RadioParameter {
    let mut value = 0u64;
    for nw in &scene.networks {
        if p.dist2(&nw.center) <= nw.radius * nw.radius {
            value |= 1u64 << (nw.id - 1);
        }
    }
    RadioParameter(value)
}

/// Monte Carlo estimate of the total boundary surface area `S` inside the
/// region.
///
/// Each network's sphere surface is sampled uniformly and its full area
/// `4*pi*r^2` is scaled by the fraction of samples falling inside the region
/// box. Patches buried inside other spheres still count: crossing any
/// surface flips one bit of the radio parameter. Deterministic given `seed`;
/// per-network substreams are reduced in network order.
pub fn boundary_surface_area(scene: &Scene, samples: u64, seed: u64) -> Result<f64, GeometryError> {
    if samples == 0 {
        return Err(GeometryError::ZeroSamples);
    }
    let areas: Vec<f64> = scene
        .networks
        .par_iter()
        .map(|nw| {
            let mut rng = rng_from_seed(substream(seed, nw.id as u64));
            let mut inside = 0u64;
            for _ in 0..samples {
                // area-preserving parametrization of the sphere surface
                let z: f64 = rng.random_range(-1.0..=1.0);
                let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let r_xy = (1.0 - z * z).max(0.0).sqrt();
                let p = Point3::new(
                    nw.center.x + nw.radius * r_xy * phi.cos(),
                    nw.center.y + nw.radius * r_xy * phi.sin(),
                    nw.center.z + nw.radius * z,
                );
                if scene.contains(&p) {
                    inside += 1;
                }
            }
            let full = 4.0 * std::f64::consts::PI * nw.radius * nw.radius;
            full * inside as f64 / samples as f64
        })
        .collect();
    Ok(areas.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn simple_scene() -> Scene {
        // two disjoint spheres well inside a 100 m box
        Scene::from_spheres(
            Point3::new(0.0, 0.0, 0.0),
            100.0,
            &[
                (Point3::new(25.0, 25.0, 25.0), 10.0),
                (Point3::new(75.0, 75.0, 75.0), 12.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn detect_center_inside() {
        let scene = simple_scene();
        assert!(detect(&scene, 1, &Point3::new(25.0, 25.0, 25.0)).unwrap());
    }

    #[test]
    fn detect_far_outside() {
        let scene = simple_scene();
        // distance 2r from the center
        assert!(!detect(&scene, 1, &Point3::new(45.0, 25.0, 25.0)).unwrap());
    }

    #[test]
    fn detect_surface_is_inclusive() {
        let scene = simple_scene();
        assert!(detect(&scene, 1, &Point3::new(35.0, 25.0, 25.0)).unwrap());
    }

    #[test]
    fn detect_unknown_id_errors() {
        let scene = simple_scene();
        assert_eq!(
            detect(&scene, 3, &Point3::new(0.0, 0.0, 0.0)),
            Err(GeometryError::UnknownNetwork { id: 3, count: 2 })
        );
        assert!(detect(&scene, 0, &Point3::new(0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn radio_parameter_bitmask() {
        let scene = Scene::from_spheres(
            Point3::new(0.0, 0.0, 0.0),
            100.0,
            &[
                (Point3::new(10.0, 10.0, 10.0), 8.0),
                (Point3::new(90.0, 90.0, 90.0), 8.0),
                (Point3::new(12.0, 10.0, 10.0), 7.0),
            ],
        )
        .unwrap();
        // outside all networks
        assert_eq!(
            radio_parameter_at(&scene, &Point3::new(50.0, 50.0, 50.0)),
            RadioParameter(0)
        );
        // inside network 1 only
        assert_eq!(
            radio_parameter_at(&scene, &Point3::new(3.0, 10.0, 10.0)),
            RadioParameter(1)
        );
        // inside networks 1 and 3 only
        assert_eq!(
            radio_parameter_at(&scene, &Point3::new(11.0, 10.0, 10.0)),
            RadioParameter(5)
        );
    }

    #[test]
    fn scene_rejects_bad_inputs() {
        let o = Point3::new(0.0, 0.0, 0.0);
        assert!(Scene::from_spheres(o, 0.0, &[]).is_err());
        assert!(Scene::from_spheres(o, 10.0, &[(o, -1.0)]).is_err());
        assert_eq!(
            Scene::new(
                o,
                10.0,
                vec![LicensedNetwork {
                    id: 2,
                    center: o,
                    radius: 1.0
                }]
            ),
            Err(SceneError::NonContiguousIds {
                expected: 1,
                got: 2
            })
        );
    }

    #[test]
    fn surface_area_full_sphere() {
        // sphere fully inside the region: estimate is exactly 4*pi*r^2
        let scene = Scene::from_spheres(
            Point3::new(0.0, 0.0, 0.0),
            100.0,
            &[(Point3::new(50.0, 50.0, 50.0), 10.0)],
        )
        .unwrap();
        let s = boundary_surface_area(&scene, 10_000, 7).unwrap();
        let exact = 4.0 * std::f64::consts::PI * 100.0;
        assert!((s - exact).abs() < 1e-9, "{s} vs {exact}");
    }

    #[test]
    fn surface_area_corner_octant() {
        // sphere centered at a region corner, well within the octant extent
        let scene = Scene::from_spheres(
            Point3::new(0.0, 0.0, 0.0),
            100.0,
            &[(Point3::new(0.0, 0.0, 0.0), 20.0)],
        )
        .unwrap();
        let s = boundary_surface_area(&scene, 4_000_000, 11).unwrap();
        let exact = 4.0 * std::f64::consts::PI * 400.0 / 8.0;
        // fraction estimator sigma ~ sqrt(p(1-p)/N) * 4 pi r^2
        let sigma = (0.125f64 * 0.875 / 4e6).sqrt() * 4.0 * std::f64::consts::PI * 400.0;
        assert!((s - exact).abs() < 4.0 * sigma, "{s} vs {exact}");
    }

    #[test]
    fn surface_area_zero_samples_errors() {
        let scene = simple_scene();
        assert_eq!(
            boundary_surface_area(&scene, 0, 1),
            Err(GeometryError::ZeroSamples)
        );
    }

    #[test]
    fn surface_area_disjoint_spheres_additive() {
        let scene = simple_scene();
        let both = boundary_surface_area(&scene, 2_000_000, 3).unwrap();
        let exact = 4.0 * std::f64::consts::PI * (100.0 + 144.0);
        // both spheres are fully inside, so the sum is exact up to fp error
        assert!((both - exact).abs() < 1e-6, "{both} vs {exact}");
    }

    #[test]
    fn surface_area_deterministic() {
        let scene = simple_scene();
        let a = boundary_surface_area(&scene, 100_000, 5).unwrap();
        let b = boundary_surface_area(&scene, 100_000, 5).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        // evaluation is pure: same scene and point give the same value
        #[test]
        fn radio_parameter_pure(x in -10.0f64..110.0, y in -10.0f64..110.0, z in -10.0f64..110.0) {
            let scene = simple_scene();
            let p = Point3::new(x, y, z);
            prop_assert_eq!(radio_parameter_at(&scene, &p), radio_parameter_at(&scene, &p));
        }

        // appending a network never changes the bits of existing networks
        #[test]
        fn extension_preserves_low_bits(
            x in 0.0f64..100.0, y in 0.0f64..100.0, z in 0.0f64..100.0,
            cx in 0.0f64..100.0, cy in 0.0f64..100.0, cz in 0.0f64..100.0,
            r in 0.1f64..60.0,
        ) {
            let base = simple_scene();
            let mut spheres: Vec<(Point3, f64)> = base
                .networks()
                .iter()
                .map(|nw| (nw.center, nw.radius))
                .collect();
            spheres.push((Point3::new(cx, cy, cz), r));
            let extended = Scene::from_spheres(base.region_origin(), base.region_edge(), &spheres).unwrap();
            let p = Point3::new(x, y, z);
            let lo = radio_parameter_at(&base, &p).0;
            let hi = radio_parameter_at(&extended, &p).0;
            prop_assert_eq!(hi & 0b11, lo);
        }

        // crossing network k's surface flips the parameter by exactly 2^(k-1)
        #[test]
        fn surface_crossing_flips_one_bit(k in 1usize..=2) {
            let scene = simple_scene();
            let nw = scene.networks()[k - 1];
            let just_in = Point3::new(nw.center.x + nw.radius * 0.999, nw.center.y, nw.center.z);
            let just_out = Point3::new(nw.center.x + nw.radius * 1.001, nw.center.y, nw.center.z);
            let a = radio_parameter_at(&scene, &just_in).0;
            let b = radio_parameter_at(&scene, &just_out).0;
            prop_assert_eq!(a ^ b, 1u64 << (k - 1));
        }
    }
}
