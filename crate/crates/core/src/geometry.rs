//! Closed polygonal curves, their turning angles and Whitney index.
//!
//! Sign convention: a counterclockwise turn is positive, so a counterclockwise
//! circle has index `+1` and its mirror image `-1`.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{ElasticaError, Result};

/// Smallest vertex count accepted for a [`PolyCurve`].
pub const MIN_VERTICES: usize = 8;

/// Tolerance used when snapping the total turning to a multiple of `2*pi`.
pub const ANGLE_SUM_TOL: f64 = 0.1;

/// A turning angle this close to `pi` is treated as a cusp.
pub const CUSP_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector with the given heading.
    #[inline]
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Vec2 { x: c, y: s }
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Counterclockwise rotation by 90 degrees.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    #[inline]
    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    #[inline]
    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(p: [f64; 2]) -> Self {
        Vec2::new(p[0], p[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

/// Signed angle turning from direction `a` to direction `b`, in `(-pi, pi]`.
#[inline]
pub fn signed_angle(a: Vec2, b: Vec2) -> f64 {
    a.cross(b).atan2(a.dot(b))
}

/// A closed polygon `v_0 .. v_{N-1}` with per-edge rest lengths.
///
/// Edge `i` runs from `v_i` to `v_{i+1}` (indices wrap) and its rest length is
/// `rest_lengths[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurve", into = "RawCurve")]
pub struct PolyCurve {
    vertices: Vec<Vec2>,
    rest_lengths: Vec<f64>,
}

impl PolyCurve {
    pub fn new(vertices: Vec<Vec2>, rest_lengths: Vec<f64>) -> Result<Self> {
        let n = vertices.len();
        if n < MIN_VERTICES {
            return Err(ElasticaError::InvalidCurve(format!(
                "{n} vertices, at least {MIN_VERTICES} required"
            )));
        }
        if rest_lengths.len() != n {
            return Err(ElasticaError::InvalidCurve(format!(
                "{} rest lengths for {n} vertices",
                rest_lengths.len()
            )));
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(ElasticaError::InvalidCurve(format!(
                "vertex {i} is not finite"
            )));
        }
        if let Some(i) = rest_lengths.iter().position(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(ElasticaError::InvalidCurve(format!(
                "rest length {i} is not positive"
            )));
        }
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(ElasticaError::InvalidCurve(format!(
                    "edge {i} has zero length"
                )));
            }
        }
        Ok(PolyCurve {
            vertices,
            rest_lengths,
        })
    }

    /// Builds a curve whose rest lengths are its current edge lengths.
    pub fn from_vertices(vertices: Vec<Vec2>) -> Result<Self> {
        let n = vertices.len();
        let rest = (0..n)
            .map(|i| vertices[i].distance(vertices[(i + 1) % n]))
            .collect();
        PolyCurve::new(vertices, rest)
    }

    /// Same rest lengths, new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Vec2>) -> Result<Self> {
        PolyCurve::new(vertices, self.rest_lengths.clone())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    #[inline]
    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    #[inline]
    pub fn rest_lengths(&self) -> &[f64] {
        &self.rest_lengths
    }

    pub fn into_vertices(self) -> Vec<Vec2> {
        self.vertices
    }

    /// Edge vector `v_{i+1} - v_i`.
    #[inline]
    pub fn edge(&self, i: usize) -> Vec2 {
        let n = self.len();
        self.vertices[(i + 1) % n] - self.vertices[i % n]
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.edge(i).norm()).collect()
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.len()).map(|i| self.edge(i).norm()).sum()
    }

    pub fn mean_edge(&self) -> f64 {
        self.perimeter() / self.len() as f64
    }

    pub fn mean_rest_length(&self) -> f64 {
        self.rest_lengths.iter().sum::<f64>() / self.len() as f64
    }

    pub fn centroid(&self) -> Vec2 {
        let sum = self
            .vertices
            .iter()
            .fold(Vec2::ZERO, |acc, &v| acc + v);
        sum / self.len() as f64
    }

    /// Applies `f` to every vertex and scales rest lengths by `scale`.
    ///
    /// Intended for similarity transforms; `scale` must be the map's
    /// dilation factor.
    pub fn transformed(&self, scale: f64, f: impl Fn(Vec2) -> Vec2) -> Result<Self> {
        let vertices = self.vertices.iter().map(|&v| f(v)).collect();
        let rest = self.rest_lengths.iter().map(|d| d * scale.abs()).collect();
        PolyCurve::new(vertices, rest)
    }

    /// Same point set traversed backwards. Edge `i` of the result is edge
    /// `N-2-i` of `self` (mod N), so rest lengths are permuted accordingly.
    pub fn reversed(&self) -> PolyCurve {
        let n = self.len();
        let vertices: Vec<Vec2> = self.vertices.iter().rev().copied().collect();
        let rest = (0..n)
            .map(|i| self.rest_lengths[(2 * n - 2 - i) % n])
            .collect();
        PolyCurve {
            vertices,
            rest_lengths: rest,
        }
    }
}

/// Signed exterior angles, one per vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurningProfile {
    pub angles: Vec<f64>,
}

impl TurningProfile {
    pub fn total(&self) -> f64 {
        self.angles.iter().sum()
    }

    /// Rounds the total turning to whole turns, rejecting totals further
    /// than `tol` from a multiple of `2*pi`.
    pub fn whitney_index_with_tol(&self, tol: f64) -> Result<i64> {
        let total = self.total();
        let k = (total / TAU).round();
        if (total - TAU * k).abs() > tol {
            return Err(ElasticaError::NonIntegralTurning { total });
        }
        Ok(k as i64)
    }

    pub fn whitney_index(&self) -> Result<i64> {
        self.whitney_index_with_tol(ANGLE_SUM_TOL)
    }
}

/// Angle at vertex `i` from the incoming edge `v_i - v_{i-1}` to the outgoing
/// edge `v_{i+1} - v_i`. No cusp check.
#[inline]
pub fn vertex_angle(prev: Vec2, cur: Vec2, next: Vec2) -> f64 {
    signed_angle(cur - prev, next - cur)
}

pub fn turning_profile(curve: &PolyCurve) -> Result<TurningProfile> {
    let v = curve.vertices();
    let n = v.len();
    let mut angles = Vec::with_capacity(n);
    for i in 0..n {
        let a = vertex_angle(v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
        if !a.is_finite() || a.abs() >= PI - CUSP_MARGIN {
            return Err(ElasticaError::CuspDetected {
                vertex: i,
                angle: a,
            });
        }
        angles.push(a);
    }
    Ok(TurningProfile { angles })
}

/// Degree of the tangent map, i.e. the number of signed full turns.
pub fn whitney_index(curve: &PolyCurve) -> Result<i64> {
    turning_profile(curve)?.whitney_index()
}

/// Serialized form of [`PolyCurve`]; missing rest lengths default to the
/// edge lengths.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawCurve {
    points: Vec<Vec2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rest_lengths: Option<Vec<f64>>,
}

impl TryFrom<RawCurve> for PolyCurve {
    type Error = ElasticaError;

    fn try_from(raw: RawCurve) -> Result<Self> {
        match raw.rest_lengths {
            Some(rest) => PolyCurve::new(raw.points, rest),
            None => PolyCurve::from_vertices(raw.points),
        }
    }
}

impl From<PolyCurve> for RawCurve {
    fn from(c: PolyCurve) -> Self {
        RawCurve {
            points: c.vertices,
            rest_lengths: Some(c.rest_lengths),
        }
    }
}

/// Discrete closure sums `sum cos(theta_i) l_i`, `sum sin(theta_i) l_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureReport {
    pub cos_integral: f64,
    pub sin_integral: f64,
    pub gap_norm: f64,
}

impl ClosureReport {
    /// Sums over segments with headings `theta_i` and lengths `l_i`; the gap
    /// is the distance between the start and end of the resulting chain.
    pub fn from_headings(headings: &[f64], lengths: &[f64]) -> ClosureReport {
        debug_assert_eq!(headings.len(), lengths.len());
        let (mut c, mut s) = (0.0, 0.0);
        for (&theta, &l) in headings.iter().zip(lengths) {
            c += theta.cos() * l;
            s += theta.sin() * l;
        }
        ClosureReport {
            cos_integral: c,
            sin_integral: s,
            gap_norm: c.hypot(s),
        }
    }

    /// Closure of an open chain of points (first to last).
    pub fn of_chain(points: &[Vec2]) -> ClosureReport {
        let (mut c, mut s) = (0.0, 0.0);
        for w in points.windows(2) {
            let e = w[1] - w[0];
            let l = e.norm();
            if l > 0.0 {
                let theta = e.angle();
                c += theta.cos() * l;
                s += theta.sin() * l;
            }
        }
        let gap = match (points.first(), points.last()) {
            (Some(a), Some(b)) => a.distance(*b),
            _ => 0.0,
        };
        ClosureReport {
            cos_integral: c,
            sin_integral: s,
            gap_norm: gap,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.cos_integral.abs().max(self.sin_integral.abs())
    }
}

/// Closure sums over all N edges of a stored closed curve; gap is 0.
pub fn closure_report(curve: &PolyCurve) -> ClosureReport {
    let (mut c, mut s) = (0.0, 0.0);
    for i in 0..curve.len() {
        let e = curve.edge(i);
        let l = e.norm();
        let theta = e.angle();
        c += theta.cos() * l;
        s += theta.sin() * l;
    }
    ClosureReport {
        cos_integral: c,
        sin_integral: s,
        gap_norm: 0.0,
    }
}

/// Closed polyline parametrized by arclength from its first point.
struct ClosedPath<'a> {
    pts: &'a [Vec2],
    // cumulative arclength at the start of each segment, plus the perimeter
    cum: Vec<f64>,
}

impl<'a> ClosedPath<'a> {
    /// First arclength after `u` whose point is `c` away from the point at
    /// `u`, or `None` if the path ends first. `u` must lie in `[0, perimeter)`.
    fn exit(&self, u: f64, c: f64) -> Option<f64> {
        let m = self.pts.len();
        let (p, _) = self.at(u);
        let first = self.cum[..m].partition_point(|&s| s <= u).max(1) - 1;
        for j in first..m {
            let b = self.pts[(j + 1) % m];
            if b.distance(p) < c {
                continue;
            }
            let s0 = u.max(self.cum[j]);
            let a = self.pts[j] + self.dir(j) * (s0 - self.cum[j]);
            // |a + t d - p| = c with |d| = 1, larger root
            let d = self.dir(j);
            let w = a - p;
            let half_b = w.dot(d);
            let disc = half_b * half_b - (w.norm_sq() - c * c);
            let t = -half_b + disc.max(0.0).sqrt();
            return Some((s0 + t).min(self.cum[j + 1]));
        }
        None
    }

    fn new(pts: &'a [Vec2]) -> Self {
        let m = pts.len();
        let mut cum = Vec::with_capacity(m + 1);
        let mut s = 0.0;
        cum.push(0.0);
        for j in 0..m {
            s += pts[j].distance(pts[(j + 1) % m]);
            cum.push(s);
        }
        ClosedPath { pts, cum }
    }

    fn perimeter(&self) -> f64 {
        self.cum[self.pts.len()]
    }

    fn dir(&self, j: usize) -> Vec2 {
        let m = self.pts.len();
        let (a, b) = (self.pts[j % m], self.pts[(j + 1) % m]);
        (b - a) / a.distance(b)
    }

    /// Point and unit tangent at arclength `u` (wrapped). Exactly at a corner
    /// the tangent is the bisector of the two segments.
    fn at(&self, u: f64) -> (Vec2, Vec2) {
        let m = self.pts.len();
        let u = u.rem_euclid(self.perimeter());
        match self.cum[..m].binary_search_by(|c| c.total_cmp(&u)) {
            Ok(j) => {
                let t = self.dir(j + m - 1) + self.dir(j);
                let len = t.norm();
                let t = if len > 1e-12 { t / len } else { self.dir(j) };
                (self.pts[j], t)
            }
            Err(j) => {
                let j = j - 1;
                let dir = self.dir(j);
                (self.pts[j] + dir * (u - self.cum[j]), dir)
            }
        }
    }
}

/// Resamples a closed piecewise-linear curve into an `n`-gon with equal edges.
///
/// The vertices lie in order on the input polyline (closed back to its first
/// point) and consecutive vertices are one chord length apart, to 1e-11
/// relative, whenever the polyline is resolved finer than that chord. With
/// spikes about a chord wide the edges are only as equal as the solver gets
/// them. Rest lengths are set to the achieved edge lengths.
pub fn ingest(points: &[Vec2], n: usize) -> Result<PolyCurve> {
    if n < MIN_VERTICES {
        return Err(ElasticaError::InvalidParams(format!(
            "N = {n}, at least {MIN_VERTICES} required"
        )));
    }
    if let Some(i) = points.iter().position(|p| !p.is_finite()) {
        return Err(ElasticaError::DegenerateInput(format!(
            "point {i} is not finite"
        )));
    }
    let mut pts: Vec<Vec2> = Vec::with_capacity(points.len());
    for &p in points {
        if pts.last() != Some(&p) {
            pts.push(p);
        }
    }
    while pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    if pts.len() < 3 {
        return Err(ElasticaError::DegenerateInput(format!(
            "{} distinct points, at least 3 required",
            pts.len()
        )));
    }
    check_not_collinear(&pts)?;

    let path = ClosedPath::new(&pts);
    let perimeter = path.perimeter();
    if !(perimeter > 0.0) {
        return Err(ElasticaError::DegenerateInput("zero perimeter".into()));
    }
    let vertices = equal_chords(&path, n).ok_or_else(|| {
        ElasticaError::DegenerateInput("equal-chord resampling did not converge".into())
    })?;
    PolyCurve::from_vertices(vertices)
}

/// Vertices at equal chords when Newton reaches them, from uniform
/// arclength spacing or from the chord found by shooting. Paths with spikes
/// about one chord wide may have no reachable solution; then the most
/// uniform ordered candidate is returned.
fn equal_chords(path: &ClosedPath<'_>, n: usize) -> Option<Vec<Vec2>> {
    let perimeter = path.perimeter();
    let uniform: Vec<f64> = (0..n).map(|i| perimeter * i as f64 / n as f64).collect();
    let first = newton_chords(path, uniform)?;
    if first.1 <= CHORD_TOL {
        return Some(first.0);
    }
    let second = shoot_chords(path, n).and_then(|u| newton_chords(path, u));
    match second {
        Some(s) if s.1 < first.1 => Some(s.0),
        _ => Some(first.0),
    }
}

// accepted relative chord spread
const CHORD_TOL: f64 = 1e-11;

/// Walks forward from `u_0 = 0` taking chords of length `c`, each to the
/// first point of the path at that distance, and bisects on `c` until the
/// last chord closes on the start.
fn shoot_chords(path: &ClosedPath<'_>, n: usize) -> Option<Vec<f64>> {
    let perimeter = path.perimeter();
    let start = path.pts[0];
    // Some(u) after n - 1 chords, or None when the walk runs off the end.
    let walk = |c: f64| -> Option<Vec<f64>> {
        let mut u = vec![0.0; n];
        for i in 1..n {
            u[i] = path.exit(u[i - 1], c)?;
        }
        Some(u)
    };
    // closing residual: positive while the chords are too short
    let residual = |c: f64| match walk(c) {
        Some(u) => (path.at(u[n - 1]).0.distance(start) - c, Some(u)),
        None => (-1.0, None),
    };
    let (mut lo, mut hi) = (perimeter / n as f64 * 1e-3, perimeter / (n - 1) as f64 * (1.0 + 1e-9));
    if residual(lo).0 <= 0.0 || residual(hi).0 >= 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid).0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    residual(lo).1
}

/// Newton iteration for arclength positions `u_1 .. u_{n-1}` (with `u_0 = 0`)
/// and a chord `c` such that every consecutive pair, including the closing
/// one, is exactly `c` apart. Returns the best ordered iterate and its
/// relative chord spread, or `None` if even the start is out of order.
fn newton_chords(path: &ClosedPath<'_>, mut u: Vec<f64>) -> Option<(Vec<Vec2>, f64)> {
    let n = u.len();
    let perimeter = path.perimeter();
    let chord_at = |u: &[f64]| -> Vec<(Vec2, Vec2, Vec2, Vec2)> {
        // (point_i, tangent_i, point_{i+1}, tangent_{i+1})
        (0..n)
            .map(|i| {
                let (p, tp) = path.at(u[i]);
                let (q, tq) = path.at(if i + 1 == n { perimeter } else { u[i + 1] });
                (p, tp, q, tq)
            })
            .collect()
    };
    let measure = |legs: &[(Vec2, Vec2, Vec2, Vec2)]| -> (Vec<f64>, f64, f64) {
        let lens: Vec<f64> = legs.iter().map(|(p, _, q, _)| p.distance(*q)).collect();
        let c = lens.iter().sum::<f64>() / n as f64;
        let sq = lens.iter().map(|l| (l - c) * (l - c)).sum::<f64>();
        (lens, c, sq)
    };
    let spread = |lens: &[f64], c: f64| lens.iter().map(|l| (l - c).abs()).fold(0.0, f64::max) / c;
    let ordered = |u: &[f64]| u.windows(2).all(|w| w[0] < w[1]) && u[n - 1] < perimeter;
    if !ordered(&u) {
        return None;
    }
    let mut legs = chord_at(&u);
    let (mut lens, mut c, mut sq) = measure(&legs);
    let done = |legs: &[(Vec2, Vec2, Vec2, Vec2)], lens: &[f64], c: f64| {
        Some((legs.iter().map(|l| l.0).collect(), spread(lens, c)))
    };
    for _ in 0..100 {
        if spread(&lens, c) <= 1e-13 {
            break;
        }
        // chord_i(u_i, u_{i+1}) - c = 0, linearized:
        // a_i du_i + b_i du_{i+1} - dc = c - chord_i with du_0 = du_n = 0.
        // Forward substitution keeps du_i = p_i + q_i dc.
        let (mut p, mut q) = (0.0, 0.0);
        let mut coef = Vec::with_capacity(n + 1);
        coef.push((0.0, 0.0));
        for i in 0..n {
            let (a_pt, ta, b_pt, tb) = legs[i];
            let e = (b_pt - a_pt) / lens[i];
            let a = -e.dot(ta);
            let b = e.dot(tb);
            if b.abs() < 1e-12 {
                return done(&legs, &lens, c);
            }
            let r = c - lens[i];
            p = (r - a * p) / b;
            q = (1.0 - a * q) / b;
            coef.push((p, q));
        }
        let (pn, qn) = coef[n];
        if qn.abs() < 1e-300 {
            return done(&legs, &lens, c);
        }
        let dc = -pn / qn;
        let du: Vec<f64> = (0..n)
            .map(|i| if i == 0 { 0.0 } else { coef[i].0 + coef[i].1 * dc })
            .collect();
        // Kinks in the polyline make the system only piecewise smooth, so a
        // full step can overshoot; halve it until the residual shrinks.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(x, d)| x + t * d).collect();
            if trial.iter().all(|x| x.is_finite()) && ordered(&trial) {
                let trial_legs = chord_at(&trial);
                let (l2, c2, sq2) = measure(&trial_legs);
                if sq2 < sq {
                    u = trial;
                    legs = trial_legs;
                    (lens, c, sq) = (l2, c2, sq2);
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    done(&legs, &lens, c)
}

fn check_not_collinear(pts: &[Vec2]) -> Result<()> {
    let p0 = pts[0];
    let far = pts
        .iter()
        .copied()
        .max_by(|a, b| a.distance(p0).total_cmp(&b.distance(p0)))
        .unwrap_or(p0);
    let extent = far.distance(p0);
    if extent == 0.0 {
        return Err(ElasticaError::DegenerateInput("zero perimeter".into()));
    }
    let u = (far - p0) / extent;
    let off_axis = pts
        .iter()
        .map(|&p| u.cross(p - p0).abs())
        .fold(0.0, f64::max);
    if off_axis <= 1e-12 * extent.max(1.0) {
        return Err(ElasticaError::DegenerateInput(
            "points are collinear".into(),
        ));
    }
    Ok(())
}

/// Regular polygon of `n` vertices winding `k` times, perimeter `perimeter`.
/// Counterclockwise for `k > 0`.
pub fn regular_polygon(n: usize, k: i64, perimeter: f64) -> Vec<Vec2> {
    let step = TAU * k as f64 / n as f64;
    let chord_unit = 2.0 * (step / 2.0).sin().abs();
    let r = perimeter / (n as f64 * chord_unit);
    (0..n)
        .map(|i| Vec2::from_angle(step * i as f64) * r)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Vec2> {
        vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ]
    }

    #[test]
    fn ingest_square_gives_equal_edges() {
        let c = ingest(&square(), 100).unwrap();
        assert_eq!(c.len(), 100);
        assert!((c.perimeter() - 4.0).abs() < 1e-9);
        for l in c.edge_lengths() {
            assert!((l - 0.04).abs() < 1e-9 * 0.04, "edge {l}");
        }
        for d in c.rest_lengths() {
            assert!((d - 0.04).abs() < 1e-9);
        }
    }

    #[test]
    fn ingest_is_idempotent() {
        let blob: Vec<Vec2> = (0..37)
            .map(|i| {
                let t = TAU * i as f64 / 37.0;
                Vec2::new(2.0 * t.cos() + 0.3 * (3.0 * t).sin(), t.sin())
            })
            .collect();
        let once = ingest(&blob, 8).unwrap();
        let twice = ingest(once.vertices(), 8).unwrap();
        for (a, b) in once.vertices().iter().zip(twice.vertices()) {
            assert!(a.distance(*b) < 1e-9, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn ingest_rejects_collinear_and_short_input() {
        let line = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(2.0, 2.0)];
        assert!(matches!(
            ingest(&line, 16),
            Err(ElasticaError::DegenerateInput(_))
        ));
        let two = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 0.0)];
        assert!(matches!(
            ingest(&two, 16),
            Err(ElasticaError::DegenerateInput(_))
        ));
        assert!(matches!(
            ingest(&square(), 4),
            Err(ElasticaError::InvalidParams(_))
        ));
    }

    #[test]
    fn regular_polygon_angles() {
        let ccw = PolyCurve::from_vertices(regular_polygon(100, 1, 1.0)).unwrap();
        let prof = turning_profile(&ccw).unwrap();
        for a in &prof.angles {
            assert!((a - TAU / 100.0).abs() < 1e-12);
        }
        let cw = PolyCurve::from_vertices(regular_polygon(100, -1, 1.0)).unwrap();
        for a in &turning_profile(&cw).unwrap().angles {
            assert!((a + TAU / 100.0).abs() < 1e-12);
        }
        assert_eq!(whitney_index(&ccw).unwrap(), 1);
        assert_eq!(whitney_index(&cw).unwrap(), -1);
        let double = PolyCurve::from_vertices(regular_polygon(100, 2, 1.0)).unwrap();
        assert_eq!(whitney_index(&double).unwrap(), 2);
    }

    #[test]
    fn backtracking_vertex_is_a_cusp() {
        let mut v = regular_polygon(16, 1, 1.0);
        // v[5] sits on the segment v[4] -> v[6] reversed: a hairpin at v[5]
        v[5] = v[4] + (v[4] - v[3]) * 1.0;
        v[6] = v[4] + (v[4] - v[3]) * 0.5;
        let c = PolyCurve::from_vertices(v).unwrap();
        assert!(matches!(
            turning_profile(&c),
            Err(ElasticaError::CuspDetected { vertex: 5, .. })
        ));
    }

    #[test]
    fn closure_of_half_circle_chain() {
        let pts: Vec<Vec2> = (0..=2000)
            .map(|i| Vec2::from_angle(PI * i as f64 / 2000.0))
            .collect();
        let r = ClosureReport::of_chain(&pts);
        assert!((r.gap_norm - 2.0).abs() < 1e-12);
        assert!((r.cos_integral + 2.0).abs() < 1e-12);
        assert!(r.sin_integral.abs() < 1e-12);
    }

    #[test]
    fn closed_curve_closure_vanishes() {
        let c = ingest(&square(), 64).unwrap();
        let r = closure_report(&c);
        assert!(r.max_abs() < 1e-9 * c.perimeter());
        assert_eq!(r.gap_norm, 0.0);
    }

    #[test]
    fn non_integral_turning_is_rejected() {
        let prof = TurningProfile {
            angles: vec![0.5; 10],
        };
        assert!(matches!(
            prof.whitney_index(),
            Err(ElasticaError::NonIntegralTurning { .. })
        ));
    }

    #[test]
    fn reversed_keeps_rest_lengths_on_their_edges() {
        let v: Vec<Vec2> = regular_polygon(12, 1, 1.0)
            .into_iter()
            .map(|p| Vec2::new(2.0 * p.x, p.y))
            .collect();
        let rest: Vec<f64> = (0..12).map(|i| 1.0 + i as f64).collect();
        let c = PolyCurve::new(v, rest).unwrap();
        let r = c.reversed();
        for i in 0..12 {
            let j = (2 * 12 - 2 - i) % 12;
            assert!((r.edge(i).norm() - c.edge(j).norm()).abs() < 1e-15);
            assert_eq!(r.rest_lengths()[i], c.rest_lengths()[j]);
        }
    }
}
