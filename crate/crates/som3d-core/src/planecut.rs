//! Plane-cube cut analysis: areas, small-side volumes, and their
//! expectations.
//!
//! A network boundary surface crossing a small cube is approximated by a
//! plane. With the cube of side `eps` anchored at vertex `O`, the cut is
//! parametrized by
//!
//! - `x`: distance from `O` to the line where the plane meets the cube
//!   bottom,
//! - `theta`: angle of that line against a bottom edge, in `[0, pi/4]`,
//! - `alpha`: tilt of the plane, so the top-face trace is offset by
//!   `eps * tan(alpha)` toward `O` and the plane sits at distance
//!   `x * cos(alpha)` from `O`.
//!
//! As `x` grows the cut polygon passes through triangle, trapezoid,
//! pentagon and parallelogram shapes; which sequence applies depends on how
//! `a = eps*tan(alpha)/2` compares with `x2` and `2a` with `x1`. The four
//! case families are evaluated in closed form. The small-side volume
//! accumulates the cut area along the plane offset, stage by stage; each
//! stage's area is polynomial in the offset, so fixed-order Gauss quadrature
//! per stage is exact and the composition is continuous across every stage
//! boundary by construction.
//!
//! Expectations over `(x, theta, alpha)` route each `(theta, alpha)` point
//! to its case family by the branch conditions (`tan(alpha)` vs
//! `sin(theta)` and `cos(theta) - sin(theta)`), not by nominal support
//! boxes.

use std::f64::consts::FRAC_PI_4;

use rand::Rng;
use thiserror::Error;

use crate::rng::rng_from_seed;

/// Below this tilt the `1/sin(alpha)` branch forms are numerically unusable;
/// the plane is treated as vertical (constant cross-section along height).
const ALPHA_VERTICAL: f64 = 1e-6;

/// Relative slack accepted on the upper `x` bound.
const X_SLACK: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum PlaneCutError {
    #[error("x = {x} outside [0, {max}]")]
    XOutOfRange { x: f64, max: f64 },
    #[error("theta = {0} outside [0, pi/4]")]
    ThetaOutOfRange(f64),
    #[error("alpha = {0} outside [0, pi/4]")]
    AlphaOutOfRange(f64),
    #[error("cube side must be positive and finite, got {0}")]
    BadEps(f64),
    #[error("frustum inputs must be non-negative")]
    NegativeFrustumInput,
    #[error("density `{0}` does not integrate to 1 (got {1})")]
    NonNormalizedDensity(&'static str, f64),
    #[error("inputs must be positive")]
    NonPositiveInput,
}

/// Parameters of one plane cut: offset `x`, line angle `theta`, tilt
/// `alpha`, cube side `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneCutParams {
    x: f64,
    theta: f64,
    alpha: f64,
    eps: f64,
}

impl PlaneCutParams {
    pub fn new(x: f64, theta: f64, alpha: f64, eps: f64) -> Result<Self, PlaneCutError> {
        if !eps.is_finite() || eps <= 0.0 {
            return Err(PlaneCutError::BadEps(eps));
        }
        if !(0.0..=FRAC_PI_4 + 1e-12).contains(&theta) {
            return Err(PlaneCutError::ThetaOutOfRange(theta));
        }
        if !(0.0..=FRAC_PI_4 + 1e-12).contains(&alpha) {
            return Err(PlaneCutError::AlphaOutOfRange(alpha));
        }
        let max = x_max(theta, alpha, eps);
        if !x.is_finite() || x < 0.0 || x > max * (1.0 + X_SLACK) {
            return Err(PlaneCutError::XOutOfRange { x, max });
        }
        Ok(Self {
            x: x.min(max),
            theta,
            alpha,
            eps,
        })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn x_max(&self) -> f64 {
        x_max(self.theta, self.alpha, self.eps)
    }
}

/// Largest admissible `x`: the plane through the cube center,
/// `x1 + x2 + a`.
pub fn x_max(theta: f64, alpha: f64, eps: f64) -> f64 {
    let g = CutGeometry::new(theta, alpha, eps);
    g.x1 + g.x2 + g.a
}

/// Derived lengths of the cut construction.
///
/// `x1` is the offset at which the bottom trace first reaches a bottom
/// vertex, `x2` half the extra span to the second vertex (positive part),
/// `a` half the top-vs-bottom trace offset, and `h` the distance from `O`
/// to the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutGeometry {
    pub x1: f64,
    pub x2: f64,
    pub a: f64,
    pub h: f64,
}

impl CutGeometry {
    fn new(theta: f64, alpha: f64, eps: f64) -> Self {
        let x1 = eps * theta.sin();
        let x2 = ((2f64.sqrt() / 2.0) * eps * (theta + FRAC_PI_4).sin() - x1).max(0.0);
        Self {
            x1,
            x2,
            a: eps * alpha.tan() / 2.0,
            h: 0.0,
        }
    }

    pub fn from_params(p: &PlaneCutParams) -> Self {
        let mut g = Self::new(p.theta, p.alpha, p.eps);
        g.h = p.x * p.alpha.cos();
        g
    }
}

/// Trigonometric quantities shared by all branch formulas.
struct Trig {
    sin_a: f64,
    cos_a: f64,
    /// `tan(theta) + cot(theta) = 1 / (sin(theta) cos(theta))`
    big_c: f64,
    /// full chord `eps / cos(theta)`
    ecost: f64,
    /// slant height `eps / cos(alpha)`
    ecosa: f64,
}

impl Trig {
    fn new(theta: f64, alpha: f64, eps: f64) -> Self {
        let (sin_t, cos_t) = theta.sin_cos();
        let (sin_a, cos_a) = alpha.sin_cos();
        Self {
            sin_a,
            cos_a,
            big_c: 1.0 / (sin_t * cos_t),
            ecost: eps / cos_t,
            ecosa: eps / cos_a,
        }
    }
}

/// Chord cut by the bottom trace at offset `t`, covering the full span
/// including the shrinking regime past the far vertex.
fn chord_full(t: f64, g: &CutGeometry, tr: &Trig) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let span = 2.0 * (g.x1 + g.x2);
    if t <= g.x1 {
        t * tr.big_c
    } else if t <= g.x1 + 2.0 * g.x2 {
        tr.ecost
    } else {
        (span - t).max(0.0) * tr.big_c
    }
}

/// Cut area at offset `x` for the given geometry. Exact on the whole
/// parameter domain.
fn area_raw(x: f64, alpha: f64, eps: f64, g: &CutGeometry, tr: &Trig) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if alpha < ALPHA_VERTICAL {
        // vertical plane: rectangle of chord x height
        return chord_full(x, g, tr) * eps;
    }
    let two_a = 2.0 * g.a;
    let triangle = |x: f64| x * x * tr.big_c / (2.0 * tr.sin_a);
    let trapezoid = |x: f64| (x - g.a) * tr.big_c * eps / tr.cos_a;
    // bottom trace past the first vertex while the top trace still exits the
    // near walls
    let wall = |x: f64| triangle(g.x1) + tr.ecost * (x - g.x1) / tr.sin_a;
    // same, once the bottom trace also passed the far vertex
    let wall_ext = |x: f64| {
        let far = g.x1 + 2.0 * g.x2;
        if x <= far {
            wall(x)
        } else {
            let m = 2.0 * (g.x1 + g.x2) - x;
            wall(far) + tr.big_c * (g.x1 * g.x1 - m * m) / (2.0 * tr.sin_a)
        }
    };
    let pentagon = |x: f64| {
        let a_len = (g.x1 - (x - two_a)) / tr.sin_a;
        let b_len = ((x - (g.x1 + 2.0 * g.x2)) / tr.sin_a).max(0.0);
        let mirrored = 2.0 * (g.x1 + g.x2) - x;
        ((x - two_a) * tr.big_c + tr.ecost) / 2.0 * a_len
            + (mirrored * tr.big_c + tr.ecost) / 2.0 * b_len
            + tr.ecost * (tr.ecosa - a_len - b_len)
    };
    let full = tr.ecost * tr.ecosa;

    match (two_a <= g.x1, g.a <= g.x2) {
        // triangle, trapezoid, pentagon, parallelogram
        (true, true) => {
            if x <= two_a {
                triangle(x)
            } else if x <= g.x1 {
                trapezoid(x)
            } else if x <= g.x1 + two_a {
                pentagon(x)
            } else {
                full
            }
        }
        // triangle, wall-clipped quad, pentagon, parallelogram
        (false, true) => {
            if x <= g.x1 {
                triangle(x)
            } else if x <= two_a {
                wall(x)
            } else if x <= g.x1 + two_a {
                pentagon(x)
            } else {
                full
            }
        }
        // triangle, trapezoid, pentagon to the end
        (true, false) => {
            if x <= two_a {
                triangle(x)
            } else if x <= g.x1 {
                trapezoid(x)
            } else {
                pentagon(x)
            }
        }
        // triangle, wall-clipped quad (possibly past the far vertex),
        // pentagon to the end
        (false, false) => {
            if x <= g.x1 {
                triangle(x)
            } else if x <= two_a {
                wall_ext(x)
            } else {
                pentagon(x)
            }
        }
    }
}

/// Offsets at which the cut polygon changes shape, clipped to `(0, x)`.
fn stage_bounds(x: f64, g: &CutGeometry) -> Vec<f64> {
    let mut b: Vec<f64> = [
        2.0 * g.a,
        g.x1,
        g.x1 + 2.0 * g.a,
        g.x1 + 2.0 * g.x2,
    ]
    .into_iter()
    .filter(|&v| v > 0.0 && v < x)
    .collect();
    b.sort_by(f64::total_cmp);
    b.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    b
}

const GAUSS3: [(f64, f64); 3] = [
    (-0.774596669241483377, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774596669241483377, 5.0 / 9.0),
];

/// `integral of area_raw(t) dt` over `[0, x]`, split at stage bounds.
/// The area is polynomial of degree <= 2 within each stage, so three-point
/// Gauss per segment is exact.
fn area_integral(x: f64, alpha: f64, eps: f64, g: &CutGeometry, tr: &Trig) -> f64 {
    let mut cuts = stage_bounds(x, g);
    cuts.push(x);
    let mut total = 0.0;
    let mut lo = 0.0;
    for hi in cuts {
        let half = (hi - lo) / 2.0;
        let mid = (hi + lo) / 2.0;
        for (node, w) in GAUSS3 {
            total += w * half * area_raw(mid + half * node, alpha, eps, g, tr);
        }
        lo = hi;
    }
    total
}

/// Length of the intersection line between the plane and the cube bottom.
pub fn chord_length(p: &PlaneCutParams) -> Result<f64, PlaneCutError> {
    let g = CutGeometry::from_params(p);
    let max = g.x1 + g.x2;
    if p.x > max * (1.0 + X_SLACK) {
        return Err(PlaneCutError::XOutOfRange { x: p.x, max });
    }
    let tr = Trig::new(p.theta, p.alpha, p.eps);
    Ok(chord_full(p.x.min(max), &g, &tr))
}

/// Area of the cut polygon (the boundary-surface patch inside the cube).
pub fn cut_area(p: &PlaneCutParams) -> f64 {
    let g = CutGeometry::from_params(p);
    let tr = Trig::new(p.theta, p.alpha, p.eps);
    area_raw(p.x, p.alpha, p.eps, &g, &tr)
}

/// Volume of the prismatic table between parallel faces of areas `s_a`,
/// `s_b` at distance `h`: `(h/3) (s_a + s_b + sqrt(s_a s_b))`.
pub fn frustum_volume(s_a: f64, s_b: f64, h: f64) -> Result<f64, PlaneCutError> {
    if s_a < 0.0 || s_b < 0.0 || h < 0.0 {
        return Err(PlaneCutError::NegativeFrustumInput);
    }
    Ok(h / 3.0 * (s_a + s_b + (s_a * s_b).sqrt()))
}

/// Volume on the vertex-`O` side of the plane, accumulated across the
/// shape stages as the offset sweeps `[0, x]`.
pub fn small_side_volume(p: &PlaneCutParams) -> f64 {
    let g = CutGeometry::from_params(p);
    let tr = Trig::new(p.theta, p.alpha, p.eps);
    p.alpha.cos() * area_integral(p.x, p.alpha, p.eps, &g, &tr)
}

/// RPE contribution of the cut: small-side volume over `eps^3`.
///
/// Values are in `[0, 1/2]`; anything above can only come from numerical
/// error and trips a debug assertion.
pub fn cut_rpe(p: &PlaneCutParams) -> f64 {
    let v = small_side_volume(p) / (p.eps * p.eps * p.eps);
    debug_assert!(v <= 0.5 + 1e-9, "small-side fraction {v} above 1/2");
    v
}

// ---------------------------------------------------------------------------
// Expectations over (x, theta, alpha)
// ---------------------------------------------------------------------------

/// One-dimensional density on a closed support.
#[derive(Debug, Clone, Copy)]
pub enum Density {
    Uniform { lo: f64, hi: f64 },
    Custom { lo: f64, hi: f64, pdf: fn(f64) -> f64 },
}

impl Density {
    fn support(&self) -> (f64, f64) {
        match *self {
            Density::Uniform { lo, hi } | Density::Custom { lo, hi, .. } => (lo, hi),
        }
    }

    fn pdf(&self, v: f64) -> f64 {
        match *self {
            Density::Uniform { lo, hi } => 1.0 / (hi - lo),
            Density::Custom { pdf, .. } => pdf(v),
        }
    }

    fn check_normalized(&self, name: &'static str) -> Result<(), PlaneCutError> {
        if let Density::Custom { lo, hi, pdf } = *self {
            let mass = adaptive_simpson(&|v| pdf(v), lo, hi, 1e-8);
            if (mass - 1.0).abs() > 1e-3 {
                return Err(PlaneCutError::NonNormalizedDensity(name, mass));
            }
        }
        Ok(())
    }
}

/// Density of the offset `x`, whose support `[0, x1 + x2]` depends on
/// `theta`.
#[derive(Debug, Clone, Copy)]
pub enum XDensity {
    /// Uniform on the full support for each `theta`.
    Uniform,
    /// `pdf(x, theta)`; must integrate to 1 over `[0, x1 + x2]` per theta.
    Custom(fn(f64, f64) -> f64),
}

/// Joint distribution of the cut parameters; components independent except
/// for the `theta`-dependent support of `x`.
#[derive(Debug, Clone, Copy)]
pub struct ParameterDistributions {
    pub x: XDensity,
    pub theta: Density,
    pub alpha: Density,
}

impl ParameterDistributions {
    /// The uniform case: `theta` and `alpha` uniform on `[0, pi/4]`, `x`
    /// uniform on its support.
    pub fn uniform() -> Self {
        Self {
            x: XDensity::Uniform,
            theta: Density::Uniform {
                lo: 0.0,
                hi: FRAC_PI_4,
            },
            alpha: Density::Uniform {
                lo: 0.0,
                hi: FRAC_PI_4,
            },
        }
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = (a + b) / 2.0;
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
        }
    }
    if hi <= lo {
        return 0.0;
    }
    let fa = f(lo);
    let fb = f(hi);
    let (m, fm, whole) = simpson(f, lo, fa, hi, fb);
    recurse(f, lo, fa, hi, fb, m, fm, whole, tol, 40)
}

/// Inner expectations over `x` at fixed `(theta, alpha)`: returns
/// `(E[S | theta, alpha], E[P | theta, alpha])`.
fn inner_x_expectation(
    dists: &ParameterDistributions,
    theta: f64,
    alpha: f64,
    eps: f64,
) -> (f64, f64) {
    let g = CutGeometry::new(theta, alpha, eps);
    let tr = Trig::new(theta, alpha, eps);
    let sup = g.x1 + g.x2;
    if sup <= 0.0 {
        return (0.0, 0.0);
    }
    let eps3 = eps * eps * eps;
    let cos_a = alpha.cos();
    match dists.x {
        XDensity::Uniform => {
            // the integrands are polynomial within each stage: five-point
            // Gauss per segment integrates both area (deg 2) and volume
            // (deg 3) exactly
            const GAUSS5: [(f64, f64); 5] = [
                (-0.906179845938663993, 0.236926885056189088),
                (-0.538469310105683091, 0.478628670499366468),
                (0.0, 0.568888888888888889),
                (0.538469310105683091, 0.478628670499366468),
                (0.906179845938663993, 0.236926885056189089),
            ];
            let mut cuts = stage_bounds(sup, &g);
            cuts.push(sup);
            let mut e_s = 0.0;
            let mut e_p = 0.0;
            let mut running = 0.0; // integral of area over [0, lo]
            let mut lo = 0.0;
            for hi in cuts {
                let half = (hi - lo) / 2.0;
                let mid = (hi + lo) / 2.0;
                let mut seg_area_int = 0.0;
                for (node, w) in GAUSS5 {
                    let t = mid + half * node;
                    let s = area_raw(t, alpha, eps, &g, &tr);
                    e_s += w * half * s;
                    // volume at t = cos(alpha) * (running + int_{lo}^{t} S)
                    let inner = gauss3_integral(lo, t, |u| area_raw(u, alpha, eps, &g, &tr));
                    e_p += w * half * cos_a * (running + inner) / eps3;
                    seg_area_int += w * half * s;
                }
                running += seg_area_int;
                lo = hi;
            }
            (e_s / sup, e_p / sup)
        }
        XDensity::Custom(pdf) => {
            let e_s = adaptive_simpson(
                &|x| area_raw(x, alpha, eps, &g, &tr) * pdf(x, theta),
                0.0,
                sup,
                1e-7 * eps * eps,
            );
            let e_p = adaptive_simpson(
                &|x| {
                    let v = cos_a * area_integral(x, alpha, eps, &g, &tr) / eps3;
                    v * pdf(x, theta)
                },
                0.0,
                sup,
                1e-9,
            );
            (e_s, e_p)
        }
    }
}

fn gauss3_integral(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = (hi - lo) / 2.0;
    let mid = (hi + lo) / 2.0;
    GAUSS3
        .iter()
        .map(|&(node, w)| w * half * f(mid + half * node))
        .sum()
}

/// Expected cut area `E[S_i]` and expected cut RPE `E[P_i]` under the given
/// parameter distributions.
///
/// The `(theta, alpha)` integration routes every point to its case family
/// via the branch conditions; the inner `x` integral is split at the stage
/// boundaries. Nested adaptive quadrature, relative tolerance 1e-4 or
/// better.
pub fn expected_cut_quantities(
    dists: &ParameterDistributions,
    eps: f64,
) -> Result<(f64, f64), PlaneCutError> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(PlaneCutError::BadEps(eps));
    }
    dists.theta.check_normalized("theta")?;
    dists.alpha.check_normalized("alpha")?;
    if let XDensity::Custom(pdf) = dists.x {
        // spot-check normalization on a few theta values
        for &theta in &[0.1, 0.4, 0.7] {
            let sup = {
                let g = CutGeometry::new(theta, 0.0, eps);
                g.x1 + g.x2
            };
            let mass = adaptive_simpson(&|x| pdf(x, theta), 0.0, sup, 1e-8);
            if (mass - 1.0).abs() > 1e-3 {
                return Err(PlaneCutError::NonNormalizedDensity("x", mass));
            }
        }
    }
    let (t_lo, t_hi) = dists.theta.support();
    let (a_lo, a_hi) = dists.alpha.support();
    let tol = 1e-6;
    let integral = |pick: fn((f64, f64)) -> f64| -> f64 {
        adaptive_simpson(
            &|alpha: f64| {
                let w_a = dists.alpha.pdf(alpha);
                adaptive_simpson(
                    &|theta: f64| {
                        pick(inner_x_expectation(dists, theta, alpha, eps))
                            * dists.theta.pdf(theta)
                    },
                    t_lo,
                    t_hi,
                    tol / 8.0,
                ) * w_a
            },
            a_lo,
            a_hi,
            tol,
        )
    };
    let e_s = integral(|p| p.0);
    let e_p = integral(|p| p.1);
    Ok((e_s, e_p))
}

/// The dimensionless error-scaling constant `Q = eps^2 * E[P] / E[S]` under
/// uniform parameter distributions, for a cube of side `eps`.
pub fn theorem2_constant_for_edge(eps: f64) -> f64 {
    let (e_s, e_p) =
        expected_cut_quantities(&ParameterDistributions::uniform(), eps).expect("uniform dists");
    eps * eps * e_p / e_s
}

/// The dimensionless error-scaling constant under uniform distributions.
pub fn theorem2_constant() -> f64 {
    theorem2_constant_for_edge(1.0)
}

/// Monte Carlo estimate of `(E[S], E[P], Q)` with standard errors.
#[derive(Debug, Clone, Copy)]
pub struct Theorem2McEstimate {
    pub e_s: f64,
    pub e_p: f64,
    pub q: f64,
    pub se_s: f64,
    pub se_p: f64,
    /// Delta-method standard error of the ratio `Q`.
    pub se_q: f64,
    pub draws: u64,
}

/// Samples `(x, theta, alpha)` from the uniform distributions and averages
/// the closed-form cut area and cut RPE.
pub fn theorem2_constant_mc(draws: u64, seed: u64, eps: f64) -> Theorem2McEstimate {
    assert!(draws >= 2, "need at least two draws");
    let mut rng = rng_from_seed(seed);
    let mut sum_s = 0.0;
    let mut sum_p = 0.0;
    let mut sum_ss = 0.0;
    let mut sum_pp = 0.0;
    let mut sum_sp = 0.0;
    for _ in 0..draws {
        let theta = rng.random_range(0.0..FRAC_PI_4);
        let alpha = rng.random_range(0.0..FRAC_PI_4);
        let g = CutGeometry::new(theta, alpha, eps);
        let x = rng.random_range(0.0..(g.x1 + g.x2));
        let p = PlaneCutParams::new(x, theta, alpha, eps).expect("sampled in range");
        let s = cut_area(&p);
        let v = cut_rpe(&p);
        sum_s += s;
        sum_p += v;
        sum_ss += s * s;
        sum_pp += v * v;
        sum_sp += s * v;
    }
    let n = draws as f64;
    let e_s = sum_s / n;
    let e_p = sum_p / n;
    let var_s = (sum_ss / n - e_s * e_s) / (n - 1.0);
    let var_p = (sum_pp / n - e_p * e_p) / (n - 1.0);
    let cov = (sum_sp / n - e_s * e_p) / (n - 1.0);
    let q = eps * eps * e_p / e_s;
    // delta method for the ratio
    let se_q = (eps * eps / e_s)
        * (var_p + e_p * e_p / (e_s * e_s) * var_s - 2.0 * e_p / e_s * cov)
            .max(0.0)
            .sqrt();
    Theorem2McEstimate {
        e_s,
        e_p,
        q,
        se_s: var_s.max(0.0).sqrt(),
        se_p: var_p.max(0.0).sqrt(),
        se_q,
        draws,
    }
}

/// Predicted grid RPE from the scaling law: `Q * (S / L^2) * M^(-1/3)`.
pub fn predicted_rpe(s: f64, l: f64, m: f64, q: f64) -> Result<f64, PlaneCutError> {
    if s <= 0.0 || l <= 0.0 || m <= 0.0 || q <= 0.0 {
        return Err(PlaneCutError::NonPositiveInput);
    }
    Ok(q * (s / (l * l)) * m.powf(-1.0 / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact clipped-cube volume and cross-section area from the vertex sum
    /// of the half space `{n . p <= c}` over the unit-cube corners. Test
    /// oracle on an independent algebraic route.
    fn vertex_sum_vol_area(x: f64, theta: f64, alpha: f64, eps: f64) -> (f64, f64) {
        let n = [
            alpha.cos() * theta.cos(),
            alpha.cos() * theta.sin(),
            alpha.sin(),
        ];
        let c = x * alpha.cos();
        let mut s3 = 0.0;
        let mut s2 = 0.0;
        for v in 0..8u32 {
            let dot = (0..3)
                .map(|i| if v >> i & 1 == 1 { eps * n[i] } else { 0.0 })
                .sum::<f64>();
            let d: f64 = c - dot;
            if d > 0.0 {
                let sign = if v.count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                s3 += sign * d * d * d;
                s2 += sign * d * d;
            }
        }
        let den = n[0] * n[1] * n[2];
        (s3 / (6.0 * den), s2 / (2.0 * den))
    }

    #[test]
    fn chord_examples() {
        // theta = pi/4: tan + cot = 2, so chord = 0.6 eps at x = 0.3 eps
        let p = PlaneCutParams::new(0.3, FRAC_PI_4, 0.1, 1.0).unwrap();
        assert!((chord_length(&p).unwrap() - 0.6).abs() < 1e-12);
        // theta -> 0: chord parallel to a side, length eps
        let p = PlaneCutParams::new(0.3, 1e-9, 0.1, 1.0).unwrap();
        assert!((chord_length(&p).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn chord_thin_band_oracle() {
        // measure the line length inside the bottom square by sampling a
        // thin band around it
        let theta: f64 = 30f64.to_radians();
        let x = 0.2;
        let p = PlaneCutParams::new(x, theta, 0.0, 1.0).unwrap();
        let expected = chord_length(&p).unwrap();
        let (ux, uy) = (theta.cos(), theta.sin());
        let band = 5e-4;
        let mut rng = rng_from_seed(9);
        let mut hits = 0u64;
        let n = 4_000_000u64;
        for _ in 0..n {
            let px: f64 = rng.random_range(0.0..1.0);
            let py: f64 = rng.random_range(0.0..1.0);
            if (px * ux + py * uy - x).abs() < band {
                hits += 1;
            }
        }
        let est = hits as f64 / n as f64 / (2.0 * band);
        let sigma = (est / (n as f64 * 2.0 * band)).sqrt().max(1e-3);
        assert!(
            (est - expected).abs() < 5.0 * sigma,
            "chord {est} vs {expected}"
        );
    }

    #[test]
    fn chord_out_of_range() {
        let p = PlaneCutParams::new(0.9, 0.3, 0.5, 1.0).unwrap();
        // x beyond x1 + x2 is valid for the cut but not for the bottom chord
        assert!(matches!(
            chord_length(&p),
            Err(PlaneCutError::XOutOfRange { .. })
        ));
    }

    #[test]
    fn params_validation() {
        assert!(PlaneCutParams::new(0.1, 0.2, 0.1, 0.0).is_err());
        assert!(PlaneCutParams::new(-0.1, 0.2, 0.1, 1.0).is_err());
        assert!(PlaneCutParams::new(0.1, 1.0, 0.1, 1.0).is_err());
        assert!(PlaneCutParams::new(0.1, 0.2, 1.0, 1.0).is_err());
        assert!(PlaneCutParams::new(5.0, 0.2, 0.1, 1.0).is_err());
    }

    #[test]
    fn area_triangle_branch_matches_closed_form() {
        let (theta, alpha) = (30f64.to_radians(), 20f64.to_radians());
        let x = 0.05;
        let p = PlaneCutParams::new(x, theta, alpha, 1.0).unwrap();
        let expected = x * x * (theta.tan() + 1.0 / theta.tan()) / (2.0 * alpha.sin());
        assert!((cut_area(&p) - expected).abs() < 1e-14);
    }

    #[test]
    fn area_central_cross_section() {
        let (theta, alpha) = (25f64.to_radians(), 10f64.to_radians());
        let eps = 2.0;
        let x = x_max(theta, alpha, eps);
        let p = PlaneCutParams::new(x, theta, alpha, eps).unwrap();
        let expected = eps / theta.cos() * (eps / alpha.cos());
        assert!((cut_area(&p) - expected).abs() < 1e-12 * eps * eps);
    }

    #[test]
    fn area_matches_vertex_sum_across_domain() {
        // dense randomized cross-check of every branch against the
        // independent vertex-sum route
        let mut rng = rng_from_seed(1234);
        for trial in 0..200_000 {
            let theta = rng.random_range(1e-4..FRAC_PI_4);
            let alpha = rng.random_range(1e-4..FRAC_PI_4);
            let eps = rng.random_range(0.5..3.0);
            let x = rng.random_range(0.0..x_max(theta, alpha, eps));
            let p = PlaneCutParams::new(x, theta, alpha, eps).unwrap();
            let (vol, area) = vertex_sum_vol_area(x, theta, alpha, eps);
            let got_area = cut_area(&p);
            let got_vol = small_side_volume(&p);
            assert!(
                (got_area - area).abs() <= 1e-9 * eps * eps,
                "area mismatch at trial {trial}: ({x}, {theta}, {alpha}, {eps}): {got_area} vs {area}"
            );
            assert!(
                (got_vol - vol).abs() <= 1e-9 * eps * eps * eps,
                "volume mismatch at trial {trial}: ({x}, {theta}, {alpha}, {eps}): {got_vol} vs {vol}"
            );
        }
    }

    #[test]
    fn frustum_examples() {
        // prism
        assert!((frustum_volume(2.0, 2.0, 3.0).unwrap() - 6.0).abs() < 1e-12);
        // pyramid
        assert!((frustum_volume(0.0, 6.0, 3.0).unwrap() - 6.0).abs() < 1e-12);
        // (3/3)(1 + 4 + 2) = 7
        assert!((frustum_volume(1.0, 4.0, 3.0).unwrap() - 7.0).abs() < 1e-12);
        assert!(frustum_volume(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn volume_limits() {
        let (theta, alpha) = (20f64.to_radians(), 15f64.to_radians());
        let p = PlaneCutParams::new(0.0, theta, alpha, 1.0).unwrap();
        assert_eq!(small_side_volume(&p), 0.0);
        // plane through the cube center halves it exactly
        let x = x_max(theta, alpha, 1.0);
        let p = PlaneCutParams::new(x, theta, alpha, 1.0).unwrap();
        assert!((small_side_volume(&p) - 0.5).abs() < 1e-12);
        assert!((cut_rpe(&p) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn volume_monotone_in_x() {
        let mut rng = rng_from_seed(5);
        for _ in 0..200 {
            let theta = rng.random_range(0.0..FRAC_PI_4);
            let alpha = rng.random_range(0.0..FRAC_PI_4);
            let xm = x_max(theta, alpha, 1.0);
            let mut prev = 0.0;
            for i in 0..=40 {
                let x = xm * i as f64 / 40.0;
                let p = PlaneCutParams::new(x, theta, alpha, 1.0).unwrap();
                let v = small_side_volume(&p);
                assert!(v + 1e-12 >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn continuity_at_stage_boundaries() {
        // evaluate just below and just above every stage boundary
        let mut rng = rng_from_seed(77);
        for _ in 0..2_000 {
            let theta = rng.random_range(1e-3..FRAC_PI_4);
            let alpha = rng.random_range(1e-3..FRAC_PI_4);
            let eps = rng.random_range(0.5..2.0);
            let g = CutGeometry::new(theta, alpha, eps);
            let xm = g.x1 + g.x2 + g.a;
            for b in [2.0 * g.a, g.x1, g.x1 + 2.0 * g.a, g.x1 + 2.0 * g.x2] {
                if b <= 0.0 || b >= xm {
                    continue;
                }
                let lo = PlaneCutParams::new(b.next_down(), theta, alpha, eps).unwrap();
                let hi = PlaneCutParams::new(b.next_up(), theta, alpha, eps).unwrap();
                assert!(
                    (cut_area(&lo) - cut_area(&hi)).abs() <= 1e-9 * eps * eps,
                    "area jump at boundary {b} ({theta}, {alpha})"
                );
                assert!(
                    (small_side_volume(&lo) - small_side_volume(&hi)).abs()
                        <= 1e-9 * eps * eps * eps,
                    "volume jump at boundary {b} ({theta}, {alpha})"
                );
            }
        }
    }

    #[test]
    fn expectation_dirac_like_density_recovers_point_values() {
        // narrow boxes around a fixed (x0, theta0, alpha0)
        const THETA0: f64 = 0.5;
        const ALPHA0: f64 = 0.3;
        const DELTA: f64 = 1e-5;
        fn x_pdf(x: f64, _theta: f64) -> f64 {
            // narrow box around X0 = 0.4
            if (x - 0.4).abs() <= DELTA {
                1.0 / (2.0 * DELTA)
            } else {
                0.0
            }
        }
        let dists = ParameterDistributions {
            x: XDensity::Custom(x_pdf),
            theta: Density::Uniform {
                lo: THETA0 - DELTA,
                hi: THETA0 + DELTA,
            },
            alpha: Density::Uniform {
                lo: ALPHA0 - DELTA,
                hi: ALPHA0 + DELTA,
            },
        };
        let (e_s, e_p) = expected_cut_quantities(&dists, 1.0).unwrap();
        let p = PlaneCutParams::new(0.4, THETA0, ALPHA0, 1.0).unwrap();
        assert!((e_s - cut_area(&p)).abs() < 1e-3, "{e_s} vs {}", cut_area(&p));
        assert!((e_p - cut_rpe(&p)).abs() < 1e-3, "{e_p} vs {}", cut_rpe(&p));
    }

    #[test]
    fn expectation_scaling_in_eps() {
        // E[S] scales as eps^2, E[P] is eps-free
        let u = ParameterDistributions::uniform();
        let (s1, p1) = expected_cut_quantities(&u, 1.0).unwrap();
        let (s3, p3) = expected_cut_quantities(&u, 3.0).unwrap();
        assert!((s3 / s1 - 9.0).abs() < 1e-3);
        assert!((p3 - p1).abs() < 1e-6);
    }

    #[test]
    fn expectation_vs_halfspace_sampling_oracle() {
        // sample the distributions and evaluate through the independent
        // vertex-sum route
        let mut rng = rng_from_seed(2024);
        let draws = 200_000u64;
        let mut sum_s = 0.0;
        let mut sum_p = 0.0;
        let mut sum_ss = 0.0;
        let mut sum_pp = 0.0;
        for _ in 0..draws {
            let theta = rng.random_range(0.0..FRAC_PI_4);
            let alpha = rng.random_range(0.0..FRAC_PI_4);
            let g = CutGeometry::new(theta, alpha, 1.0);
            let x = rng.random_range(0.0..(g.x1 + g.x2));
            let (vol, area) = vertex_sum_vol_area(x, theta, alpha.max(1e-9), 1.0);
            sum_s += area;
            sum_p += vol;
            sum_ss += area * area;
            sum_pp += vol * vol;
        }
        let n = draws as f64;
        let (mc_s, mc_p) = (sum_s / n, sum_p / n);
        let se_s = ((sum_ss / n - mc_s * mc_s) / n).sqrt();
        let se_p = ((sum_pp / n - mc_p * mc_p) / n).sqrt();
        let (e_s, e_p) = expected_cut_quantities(&ParameterDistributions::uniform(), 1.0).unwrap();
        assert!((e_s - mc_s).abs() < 3.0 * se_s, "{e_s} vs {mc_s} +- {se_s}");
        assert!((e_p - mc_p).abs() < 3.0 * se_p, "{e_p} vs {mc_p} +- {se_p}");
    }

    #[test]
    fn theorem2_scale_invariant() {
        let q1 = theorem2_constant_for_edge(1.0);
        let q7 = theorem2_constant_for_edge(7.0);
        assert!((q1 - q7).abs() < 1e-9, "{q1} vs {q7}");
    }

    #[test]
    fn theorem2_quadrature_vs_mc() {
        let q = theorem2_constant();
        let mc = theorem2_constant_mc(1_000_000, 9, 1.0);
        assert!(
            (q - mc.q).abs() < 3.0 * mc.se_q,
            "quadrature {q} vs mc {} +- {}",
            mc.q,
            mc.se_q
        );
    }

    #[test]
    fn predicted_rpe_examples() {
        assert!((predicted_rpe(1.0, 1.0, 1.0, 0.1649).unwrap() - 0.1649).abs() < 1e-12);
        let base = predicted_rpe(2.0, 10.0, 1000.0, 0.2).unwrap();
        let refined = predicted_rpe(2.0, 10.0, 8000.0, 0.2).unwrap();
        assert!((base / refined - 2.0).abs() < 1e-9);
        assert!(predicted_rpe(0.0, 1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn non_normalized_density_rejected() {
        fn bad(_v: f64) -> f64 {
            2.0
        }
        let dists = ParameterDistributions {
            x: XDensity::Uniform,
            theta: Density::Custom {
                lo: 0.0,
                hi: FRAC_PI_4,
                pdf: bad,
            },
            alpha: Density::Uniform {
                lo: 0.0,
                hi: FRAC_PI_4,
            },
        };
        assert!(matches!(
            expected_cut_quantities(&dists, 1.0),
            Err(PlaneCutError::NonNormalizedDensity("theta", _))
        ));
    }
}
