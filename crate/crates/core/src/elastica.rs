//! Pendulum solutions, the figure-eight elastica and curves sampled from them.
//!
//! Everything is normalized to `omega = 1`, so the Gauss map satisfies
//! `alpha'' = -sin(alpha)` and `alpha'^2 = 2 cos(alpha) + C`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{ElasticaError, Result};
use crate::geometry::{regular_polygon, PolyCurve, Vec2};

/// Target spacing of the shooting integrator.
const SHOOTING_DT: f64 = 5e-4;
/// Grid points per period in the cached figure-eight table.
const TABLE_STEPS: usize = 1 << 15;
/// Upper end of the amplitude search interval.
const AMPLITUDE_HI: f64 = PI - 1e-3;

/// `K(m) = integral_0^{pi/2} (1 - m sin^2 t)^{-1/2} dt` via the AGM.
pub fn complete_elliptic_k(m: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&m) {
        return Err(ElasticaError::InvalidParams(format!(
            "elliptic parameter {m} outside [0, 1)"
        )));
    }
    let mut a = 1.0_f64;
    let mut b = (1.0 - m).sqrt();
    for _ in 0..64 {
        if (a - b).abs() <= 1e-15 * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    Ok(PI / (a + b))
}

fn check_amplitude(amplitude: f64) -> Result<()> {
    if amplitude > 0.0 && amplitude < PI {
        Ok(())
    } else {
        Err(ElasticaError::AmplitudeOutOfRange(amplitude))
    }
}

/// `T = 4 K(sin^2(a/2))`.
pub fn pendulum_period(amplitude: f64) -> Result<f64> {
    check_amplitude(amplitude)?;
    let s = (0.5 * amplitude).sin();
    Ok(4.0 * complete_elliptic_k(s * s)?)
}

/// State `(alpha, alpha', x, y)` of the pendulum together with the plane curve
/// whose Gauss map it is.
type State = [f64; 4];

fn deriv(s: &State) -> State {
    let (sin, cos) = s[0].sin_cos();
    [s[1], -sin, cos, sin]
}

fn rk4(s: &State, dt: f64) -> State {
    let add = |a: &State, k: &State, h: f64| -> State {
        [a[0] + h * k[0], a[1] + h * k[1], a[2] + h * k[2], a[3] + h * k[3]]
    };
    let k1 = deriv(s);
    let k2 = deriv(&add(s, &k1, 0.5 * dt));
    let k3 = deriv(&add(s, &k2, 0.5 * dt));
    let k4 = deriv(&add(s, &k3, dt));
    let mut out = *s;
    for i in 0..4 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PendulumSample {
    pub t: f64,
    pub alpha: f64,
    pub alpha_dot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PendulumSolution {
    pub amplitude: f64,
    /// `C` in `alpha'^2 = 2 cos(alpha) + C`.
    pub energy_constant: f64,
    pub period: f64,
    pub samples: Vec<PendulumSample>,
}

impl PendulumSolution {
    /// Largest `|alpha'^2 - 2 cos(alpha) - C|` over the samples.
    pub fn energy_residual(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| (s.alpha_dot * s.alpha_dot - 2.0 * s.alpha.cos() - self.energy_constant).abs())
            .fold(0.0, f64::max)
    }
}

/// One period of `alpha'' = -sin(alpha)` from `(amplitude, 0)` with `steps`
/// fixed RK4 steps.
pub fn integrate_pendulum(amplitude: f64, steps: usize) -> Result<PendulumSolution> {
    check_amplitude(amplitude)?;
    if steps < 1000 {
        return Err(ElasticaError::InvalidParams(format!(
            "{steps} steps, at least 1000 required"
        )));
    }
    let period = pendulum_period(amplitude)?;
    let dt = period / steps as f64;
    let mut s: State = [amplitude, 0.0, 0.0, 0.0];
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(PendulumSample {
        t: 0.0,
        alpha: s[0],
        alpha_dot: s[1],
    });
    for i in 1..=steps {
        s = rk4(&s, dt);
        samples.push(PendulumSample {
            t: i as f64 * dt,
            alpha: s[0],
            alpha_dot: s[1],
        });
    }
    Ok(PendulumSolution {
        amplitude,
        energy_constant: -2.0 * amplitude.cos(),
        period,
        samples,
    })
}

fn shoot(amplitude: f64, period: f64) -> State {
    let steps = ((period / SHOOTING_DT).ceil() as usize).max(1000);
    let dt = period / steps as f64;
    let mut s: State = [amplitude, 0.0, 0.0, 0.0];
    for _ in 0..steps {
        s = rk4(&s, dt);
    }
    s
}

/// `F(a) = integral_0^T cos(alpha(t)) dt`, the drift of the curve along its
/// axis over one period. Its root in `(pi/2, pi)` closes the figure eight.
pub fn closure_functional(amplitude: f64) -> Result<f64> {
    let period = pendulum_period(amplitude)?;
    Ok(shoot(amplitude, period)[2])
}

fn bisect_amplitude() -> Result<f64> {
    let (mut lo, mut hi) = (FRAC_PI_2, AMPLITUDE_HI);
    let mut f_lo = closure_functional(lo)?;
    let f_hi = closure_functional(hi)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(ElasticaError::RootNotBracketed { lo, hi });
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        let f_mid = closure_functional(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Amplitude of the closed figure-eight elastica (about 2.2813 rad).
pub fn find_figure_eight_amplitude() -> Result<f64> {
    static AMPLITUDE: OnceLock<Result<f64>> = OnceLock::new();
    AMPLITUDE.get_or_init(bisect_amplitude).clone()
}

/// Dense RK4 table of the figure eight over one period, starting at the
/// crossing with heading `amplitude`.
struct EightTable {
    amplitude: f64,
    period: f64,
    dt: f64,
    states: Vec<State>,
}

impl EightTable {
    fn build() -> Result<EightTable> {
        let amplitude = find_figure_eight_amplitude()?;
        let period = pendulum_period(amplitude)?;
        let dt = period / TABLE_STEPS as f64;
        let mut states = Vec::with_capacity(TABLE_STEPS + 1);
        let mut s: State = [amplitude, 0.0, 0.0, 0.0];
        states.push(s);
        for _ in 0..TABLE_STEPS {
            s = rk4(&s, dt);
            states.push(s);
        }
        Ok(EightTable {
            amplitude,
            period,
            dt,
            states,
        })
    }

    fn get() -> Result<&'static EightTable> {
        static TABLE: OnceLock<Result<EightTable>> = OnceLock::new();
        TABLE.get_or_init(EightTable::build).as_ref().map_err(Clone::clone)
    }

    /// State at `t` in `[0, period]`, a partial RK4 step from the nearest
    /// grid point below.
    fn eval(&self, t: f64) -> State {
        let t = t.clamp(0.0, self.period);
        let i = ((t / self.dt).floor() as usize).min(TABLE_STEPS - 1);
        let rem = t - i as f64 * self.dt;
        if rem == 0.0 {
            self.states[i]
        } else {
            rk4(&self.states[i], rem)
        }
    }

    /// State at any `t`, wrapping by whole periods. The plane position is
    /// periodic too since the curve closes.
    fn eval_wrapped(&self, t: f64) -> State {
        self.eval(t.rem_euclid(self.period))
    }

    fn point(&self, t: f64) -> Vec2 {
        let s = self.eval_wrapped(t);
        Vec2::new(s[2], s[3])
    }
}

/// Period of the figure-eight pendulum solution.
pub fn figure_eight_period() -> Result<f64> {
    Ok(EightTable::get()?.period)
}

/// `alpha'(t)` of the figure eight, i.e. its curvature at arclength `t` for
/// the unit-speed curve of length one period. `t = 0` is the crossing.
pub fn figure_eight_curvature(t: f64) -> Result<f64> {
    Ok(EightTable::get()?.eval_wrapped(t)[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum CriticalKind {
    Circle { k: i64 },
    FigureEight { m: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CriticalCurveSample {
    pub kind: CriticalKind,
    pub curve: PolyCurve,
    /// Signed curvature at each vertex.
    pub arc_length_curvature: Vec<f64>,
    /// Distance between the ends of the integrated chain before closing.
    pub closure_gap: f64,
}

fn check_length(total_length: f64) -> Result<()> {
    if total_length.is_finite() && total_length > 0.0 {
        Ok(())
    } else {
        Err(ElasticaError::InvalidParams(format!(
            "total length {total_length} must be positive"
        )))
    }
}

/// Regular `n`-gon traversed `|k|` times, orientation `sign(k)`.
pub fn sample_circle(k: i64, n: usize, total_length: f64) -> Result<CriticalCurveSample> {
    if k == 0 {
        return Err(ElasticaError::InvalidParams("k must be nonzero".into()));
    }
    check_length(total_length)?;
    if k.rem_euclid(n as i64) == 0 {
        return Err(ElasticaError::InvalidParams(format!(
            "{n} vertices cannot carry a {k}-fold circle"
        )));
    }
    let curve = PolyCurve::from_vertices(regular_polygon(n, k, total_length))?;
    let kappa = TAU * k as f64 / total_length;
    Ok(CriticalCurveSample {
        kind: CriticalKind::Circle { k },
        curve,
        arc_length_curvature: vec![kappa; n],
        closure_gap: 0.0,
    })
}

/// The figure eight traversed `m` times with `n` vertices, uniform in
/// arclength, scaled to `total_length`. The crossing is at the origin and the
/// symmetry axis along `x`.
pub fn sample_figure_eight(m: u32, n: usize, total_length: f64) -> Result<CriticalCurveSample> {
    if m == 0 {
        return Err(ElasticaError::InvalidParams("m must be at least 1".into()));
    }
    if n < 64 || !n.is_multiple_of(2 * m as usize) {
        return Err(ElasticaError::InvalidParams(format!(
            "{n} vertices: need at least 64 and a multiple of {}",
            2 * m
        )));
    }
    check_length(total_length)?;
    let table = EightTable::get()?;
    let per = n / m as usize;
    let h = table.period / per as f64;

    // March vertex to vertex with a few substeps each, so the positions do
    // not depend on the table spacing.
    let sub = (h / SHOOTING_DT).ceil().max(1.0) as usize;
    let dt = h / sub as f64;
    let mut s: State = [table.amplitude, 0.0, 0.0, 0.0];
    let mut states = Vec::with_capacity(per + 1);
    states.push(s);
    for _ in 0..per {
        for _ in 0..sub {
            s = rk4(&s, dt);
        }
        states.push(s);
    }
    let gap = Vec2::new(s[2], s[3]);
    let scale = total_length / (m as f64 * table.period);

    let mut points = Vec::with_capacity(per);
    let mut kappa = Vec::with_capacity(per);
    for (j, st) in states.iter().take(per).enumerate() {
        let p = Vec2::new(st[2], st[3]) - gap * (j as f64 / per as f64);
        // quarter turn so the loops sit left and right of the crossing
        points.push(p.rotate(-FRAC_PI_2) * scale);
        kappa.push(st[1] / scale);
    }
    let vertices: Vec<Vec2> = (0..n).map(|i| points[i % per]).collect();
    let arc_length_curvature = (0..n).map(|i| kappa[i % per]).collect();
    Ok(CriticalCurveSample {
        kind: CriticalKind::FigureEight { m },
        curve: PolyCurve::from_vertices(vertices)?,
        arc_length_curvature,
        closure_gap: gap.norm() * scale,
    })
}

/// Piece of the deformed double eight: either a straight segment or a stretch
/// of the unit-speed eight mapped by `p -> offset + sign * p`, run forward or
/// backward in time.
enum Piece {
    Segment { from: Vec2, to: Vec2 },
    Arc { offset: Vec2, sign: f64, mirror: bool, t0: f64, t1: f64 },
}

impl Piece {
    fn length(&self) -> f64 {
        match self {
            Piece::Segment { from, to } => from.distance(*to),
            Piece::Arc { t0, t1, .. } => (t1 - t0).abs(),
        }
    }

    fn at(&self, table: &EightTable, s: f64) -> Vec2 {
        match self {
            Piece::Segment { from, to } => {
                let len = from.distance(*to);
                *from + (*to - *from) * (s / len)
            }
            Piece::Arc {
                offset,
                sign,
                mirror,
                t0,
                t1,
            } => {
                let t = if t1 >= t0 { t0 + s } else { t0 - s };
                let mut p = table.point(t) * *sign;
                if *mirror {
                    p = Vec2::new(-p.x, p.y);
                }
                *offset + p
            }
        }
    }
}

/// Time after the crossing at which the upper lobe reaches `x = -half_width`.
fn tangency_time(table: &EightTable, half_width: f64) -> Result<f64> {
    // x decreases until the heading passes pi/2
    let (mut lo, mut hi) = (0.0, table.period / 4.0);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if table.eval(mid)[0] > FRAC_PI_2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_turn = lo;
    if table.eval(t_turn)[2] > -half_width {
        return Err(ElasticaError::TangencyNotFound(format!(
            "no tangency point at x = {}",
            -half_width
        )));
    }
    let (mut lo, mut hi) = (0.0, t_turn);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if table.eval(mid)[2] > -half_width {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Full width of one lobe of the unit-speed eight.
fn lobe_width(table: &EightTable) -> f64 {
    let n = 4096;
    let half = table.period / 2.0;
    let xs = (0..=n).map(|i| table.eval(half * i as f64 / n as f64)[2]);
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    });
    hi - lo
}

/// Lower-energy deformation of the doubly traversed figure eight.
///
/// Works on the unit-speed eight with the crossing `O1` at the origin and the
/// axis along `y`. A copy of the upper lobe, reflected through the point `A`
/// of that lobe with `x = -epsilon/2`, touches it at `A` and is centered at
/// `O2 = 2A`; the mirror picture gives `O4`. The tangent line at `O2` meets the
/// axis at `O3`, where a further lobe is placed. The two short S-shaped arcs
/// `O1 A O2` and `O1 B O4` are replaced by the straight segments `O3 O2` and
/// `O4 O3`, which are shorter and carry no curvature. The result is resampled
/// to `n` vertices uniform in arclength and scaled to `total_length`, with the
/// symmetry axis along `x` like [`sample_figure_eight`].
pub fn construct_gamma_epsilon(epsilon: f64, n: usize, total_length: f64) -> Result<PolyCurve> {
    check_length(total_length)?;
    if n < 64 {
        return Err(ElasticaError::InvalidParams(format!(
            "{n} vertices, at least 64 required"
        )));
    }
    let table = EightTable::get()?;
    if !(epsilon > 0.0 && epsilon < lobe_width(table) / 4.0) {
        return Err(ElasticaError::TangencyNotFound(format!(
            "epsilon {epsilon} outside (0, lobe width / 4)"
        )));
    }
    let half = table.period / 2.0;
    let t_a = tangency_time(table, epsilon / 2.0)?;
    let a = table.point(t_a);
    let o2 = a * 2.0;
    let o4 = Vec2::new(-o2.x, o2.y);
    // tangent direction at the crossing with positive slope
    let up = Vec2::from_angle(PI - table.amplitude);
    let o3 = o2 + up * (-o2.x / up.x);

    let pieces = [
        Piece::Segment { from: o3, to: o2 },
        Piece::Arc {
            offset: o2,
            sign: -1.0,
            mirror: false,
            t0: half,
            t1: t_a,
        },
        Piece::Arc {
            offset: Vec2::ZERO,
            sign: 1.0,
            mirror: false,
            t0: t_a,
            t1: half - t_a,
        },
        Piece::Arc {
            offset: o4,
            sign: -1.0,
            mirror: true,
            t0: t_a,
            t1: half,
        },
        Piece::Segment { from: o4, to: o3 },
        Piece::Arc {
            offset: o3,
            sign: 1.0,
            mirror: false,
            t0: 0.0,
            t1: half,
        },
    ];
    let lengths: Vec<f64> = pieces.iter().map(Piece::length).collect();
    let total: f64 = lengths.iter().sum();
    let scale = total_length / total;
    let mut vertices = Vec::with_capacity(n);
    let mut k = 0;
    let mut start = 0.0;
    for i in 0..n {
        let s = total * i as f64 / n as f64;
        while k + 1 < pieces.len() && s >= start + lengths[k] {
            start += lengths[k];
            k += 1;
        }
        let p = pieces[k].at(table, (s - start).min(lengths[k]));
        vertices.push(p.rotate(-FRAC_PI_2) * scale);
    }
    PolyCurve::from_vertices(vertices)
}

/// Symmetric Hausdorff distance between two point sets.
pub fn hausdorff_distance(a: &[Vec2], b: &[Vec2]) -> f64 {
    let directed = |p: &[Vec2], q: &[Vec2]| {
        p.iter()
            .map(|x| q.iter().map(|y| x.distance(*y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}
