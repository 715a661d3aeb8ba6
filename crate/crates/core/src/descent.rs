//! Discrete gradient descent: every vertex moves by `s_i + r_i` until the
//! curve stops moving, then the limit is classified.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::elastica::{figure_eight_curvature, figure_eight_period};
use crate::energy::{energy_from_profile, fd_gradient, resilience_force_with, EnergyBreakdown};
use crate::error::{ElasticaError, Result};
use crate::geometry::{turning_profile, PolyCurve, TurningProfile, Vec2};

/// Parameters of a descent run.
///
/// `c1` and `c2` are dimensionless: a step applies `c1 * h^2` to the energy
/// gradient and `c2 / h` to the edge tension, `h` being the mean rest length,
/// so the same constants work for curves of any size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct DescentParams {
    pub n: usize,
    pub c1: f64,
    pub c2: f64,
    pub fd_step: f64,
    /// Largest vertex displacement per step, relative to the mean edge, that
    /// still counts as quiet.
    pub quiescence_tol: f64,
    pub quiescence_runs: u32,
    pub max_iters: u64,
    pub snapshot_every: u64,
    /// Global multiplier on the displacement.
    pub step_scale: f64,
    pub circle_tol: f64,
    pub eight_tol: f64,
}

impl Default for DescentParams {
    fn default() -> Self {
        DescentParams {
            n: 100,
            c1: 0.2,
            c2: 0.2,
            fd_step: 1e-4,
            quiescence_tol: 1e-6,
            quiescence_runs: 50,
            max_iters: 2_000_000,
            snapshot_every: 100,
            step_scale: 1.0,
            circle_tol: 0.05,
            eight_tol: 0.99,
        }
    }
}

impl DescentParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c1", self.c1),
            ("c2", self.c2),
            ("fdStep", self.fd_step),
            ("quiescenceTol", self.quiescence_tol),
            ("stepScale", self.step_scale),
            ("circleTol", self.circle_tol),
            ("eightTol", self.eight_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ElasticaError::InvalidParams(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.n < crate::geometry::MIN_VERTICES {
            return Err(ElasticaError::InvalidParams(format!(
                "n must be at least {}",
                crate::geometry::MIN_VERTICES
            )));
        }
        if self.quiescence_runs == 0 || self.max_iters == 0 || self.snapshot_every == 0 {
            return Err(ElasticaError::InvalidParams(
                "quiescenceRuns, maxIters and snapshotEvery must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn tolerances(&self) -> ClassifyTolerances {
        ClassifyTolerances {
            circle_tol: self.circle_tol,
            eight_tol: self.eight_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DescentStep {
    pub iteration: u64,
    pub curve: PolyCurve,
    pub energy: EnergyBreakdown,
    pub index: i64,
    pub max_displacement: f64,
}

/// Per-step record kept for the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrajectoryRecord {
    pub iteration: u64,
    pub energy: f64,
    pub index: i64,
    pub max_displacement: f64,
    pub perimeter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunSummary {
    /// Record 0 is the initial curve.
    pub records: Vec<TrajectoryRecord>,
    pub quiescent: bool,
    /// The observer asked to stop before quiescence.
    pub stopped: bool,
    pub last: DescentStep,
}

impl RunSummary {
    pub fn iterations(&self) -> u64 {
        self.last.iteration
    }

    /// Largest relative perimeter change from the start.
    pub fn length_drift(&self) -> f64 {
        let p0 = self.records[0].perimeter;
        self.records
            .iter()
            .map(|r| (r.perimeter - p0).abs() / p0)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub class: NormalFormClass,
}

/// A failed run together with the last state that passed every check.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{source} (last good iteration {})", last_good.iteration)]
pub struct RunError {
    pub source: ElasticaError,
    pub last_good: Box<DescentStep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassifyTolerances {
    pub circle_tol: f64,
    pub eight_tol: f64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        DescentParams::default().tolerances()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ClassTag {
    Circle { k: i64 },
    FigureEight,
    Unconverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitDiagnostics {
    pub curvature_cv: f64,
    pub template_correlation: Option<f64>,
    pub radius_estimate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NormalFormClass {
    pub tag: ClassTag,
    pub diagnostics: FitDiagnostics,
}

/// Displacement `s_i + r_i` with the scale-free coefficients. The caller has
/// already checked `curve` for cusps.
fn displacement(curve: &PolyCurve, params: &DescentParams) -> Vec<Vec2> {
    let h = curve.mean_rest_length();
    let c1 = params.c1 * h * h;
    let g = fd_gradient(curve, params.fd_step * curve.mean_edge());
    let r = resilience_force_with(curve, params.c2 / h);
    g.iter()
        .zip(&r)
        .map(|(g, r)| (*r - *g * c1) * params.step_scale)
        .collect()
}

/// Moves every vertex once. Fails on a cusp or when the index changes.
fn advance(
    curve: &PolyCurve,
    index: i64,
    iteration: u64,
    params: &DescentParams,
) -> Result<(DescentStep, TurningProfile)> {
    let d = displacement(curve, params);
    let mean = curve.mean_edge();
    let max_displacement = d.iter().map(|v| v.norm()).fold(0.0, f64::max) / mean;
    let moved: Vec<Vec2> = curve.vertices().iter().zip(&d).map(|(v, dv)| *v + *dv).collect();
    let next = curve.with_vertices(moved)?;
    let profile = turning_profile(&next)?;
    let found = profile.whitney_index()?;
    if found != index {
        return Err(ElasticaError::IndexBroken {
            expected: index,
            found,
            iteration,
        });
    }
    let energy = energy_from_profile(&next, &profile);
    Ok((
        DescentStep {
            iteration,
            curve: next,
            energy,
            index,
            max_displacement,
        },
        profile,
    ))
}

/// State of `curve` before any step.
pub fn initial_step(curve: &PolyCurve) -> Result<DescentStep> {
    let profile = turning_profile(curve)?;
    let index = profile.whitney_index()?;
    Ok(DescentStep {
        iteration: 0,
        curve: curve.clone(),
        energy: energy_from_profile(curve, &profile),
        index,
        max_displacement: 0.0,
    })
}

/// One descent step: `v_i' = v_i + s_i + r_i`, rest lengths unchanged.
pub fn step(curve: &PolyCurve, params: &DescentParams) -> Result<DescentStep> {
    let index = turning_profile(curve)?.whitney_index()?;
    Ok(advance(curve, index, 1, params)?.0)
}

/// Continues a descent from `prev`, numbering the result `prev.iteration + 1`.
pub fn step_from(prev: &DescentStep, params: &DescentParams) -> Result<DescentStep> {
    Ok(advance(&prev.curve, prev.index, prev.iteration + 1, params)?.0)
}

/// Relative size of the jitter applied by [`perturb`].
pub const PERTURB_MAGNITUDE: f64 = 1e-3;

/// Moves each vertex by a seeded uniform offset of up to
/// `PERTURB_MAGNITUDE` times the curve's RMS radius per coordinate. Rest
/// lengths are kept. Same seed, same curve.
pub fn perturb(curve: &PolyCurve, seed: u64) -> Result<PolyCurve> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let c = curve.centroid();
    let n = curve.len() as f64;
    let radius = (curve.vertices().iter().map(|v| (*v - c).norm_sq()).sum::<f64>() / n).sqrt();
    let amp = PERTURB_MAGNITUDE * radius;
    let moved = curve
        .vertices()
        .iter()
        .map(|v| *v + Vec2::new(rng.gen_range(-amp..=amp), rng.gen_range(-amp..=amp)))
        .collect();
    curve.with_vertices(moved)
}

fn record(s: &DescentStep) -> TrajectoryRecord {
    TrajectoryRecord {
        iteration: s.iteration,
        energy: s.energy.discrete,
        index: s.index,
        max_displacement: s.max_displacement,
        perimeter: s.curve.perimeter(),
    }
}

/// Iterates until the curve is quiet for `quiescence_runs` steps in a row or
/// `max_iters` is reached. The observer sees the initial state and every
/// `snapshot_every`-th step, plus the final one, and may stop the run.
pub fn run<F>(curve: &PolyCurve, params: &DescentParams, mut observer: F) -> Result<RunOutcome, RunError>
where
    F: FnMut(&DescentStep) -> ControlFlow<()>,
{
    let fail_early = |e: ElasticaError| -> RunError {
        let last_good = DescentStep {
            iteration: 0,
            curve: curve.clone(),
            energy: EnergyBreakdown::default(),
            index: 0,
            max_displacement: 0.0,
        };
        RunError {
            source: e,
            last_good: Box::new(last_good),
        }
    };
    params.validate().map_err(fail_early)?;
    let mut current = initial_step(curve).map_err(fail_early)?;
    let mut records = vec![record(&current)];
    let mut stopped = observer(&current).is_break();
    let mut quiet = 0u32;
    let mut quiescent = false;
    while !stopped && current.iteration < params.max_iters {
        let next = match step_from(&current, params) {
            Ok(s) => s,
            Err(source) => {
                return Err(RunError {
                    source,
                    last_good: Box::new(current),
                })
            }
        };
        current = next;
        records.push(record(&current));
        if current.max_displacement < params.quiescence_tol {
            quiet += 1;
        } else {
            quiet = 0;
        }
        quiescent = quiet >= params.quiescence_runs;
        let done = quiescent || current.iteration >= params.max_iters;
        if done || current.iteration % params.snapshot_every == 0 {
            stopped = observer(&current).is_break() && !done;
        }
        if quiescent {
            break;
        }
    }
    let class = if quiescent {
        classify(&current.curve, &params.tolerances()).map_err(|source| RunError {
            source,
            last_good: Box::new(current.clone()),
        })?
    } else {
        unconverged(&current.curve)
    };
    Ok(RunOutcome {
        summary: RunSummary {
            records,
            quiescent,
            stopped,
            last: current,
        },
        class,
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn curvature_cv(angles: &[f64]) -> f64 {
    let (mean, std) = mean_std(angles);
    if mean == 0.0 {
        f64::INFINITY
    } else {
        std / mean.abs()
    }
}

fn unconverged(curve: &PolyCurve) -> NormalFormClass {
    let cv = turning_profile(curve)
        .map(|p| curvature_cv(&p.angles))
        .unwrap_or(f64::INFINITY);
    NormalFormClass {
        tag: ClassTag::Unconverged,
        diagnostics: FitDiagnostics {
            curvature_cv: cv,
            template_correlation: None,
            radius_estimate: None,
        },
    }
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, sa) = mean_std(a);
    let (mb, sb) = mean_std(b);
    if sa == 0.0 || sb == 0.0 {
        return 0.0;
    }
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / a.len() as f64;
    cov / (sa * sb)
}

/// Best correlation of the vertex curvatures with the figure-eight template,
/// over every starting vertex and both traversal directions. Vertex `i` is
/// placed at its normalized arclength position along the curve.
pub fn figure_eight_correlation(curve: &PolyCurve, profile: &TurningProfile) -> Result<f64> {
    let n = curve.len();
    let period = figure_eight_period()?;
    let lengths = curve.edge_lengths();
    let perimeter: f64 = lengths.iter().sum();
    let kappa: Vec<f64> = (0..n)
        .map(|i| 2.0 * profile.angles[i] / (lengths[i] + lengths[(i + n - 1) % n]))
        .collect();
    let mut best = f64::NEG_INFINITY;
    for reverse in [false, true] {
        // vertex order and arclength positions for this direction
        let order: Vec<usize> = if reverse {
            (0..n).map(|i| (n - i) % n).collect()
        } else {
            (0..n).collect()
        };
        let mut pos = Vec::with_capacity(n);
        let mut s = 0.0;
        for j in 0..n {
            pos.push(s);
            let a = order[j];
            let b = order[(j + 1) % n];
            s += curve.vertices()[a].distance(curve.vertices()[b]);
        }
        let k: Vec<f64> = order.iter().map(|&i| kappa[i]).collect();
        let mut template = vec![0.0; n];
        for start in 0..n {
            for j in 0..n {
                let jj = (j + start) % n;
                let mut u = pos[jj] - pos[start];
                if u < 0.0 {
                    u += perimeter;
                }
                template[j] = figure_eight_curvature(u / perimeter * period)?;
            }
            let rotated: Vec<f64> = (0..n).map(|j| k[(j + start) % n]).collect();
            let r = pearson(&rotated, &template).abs();
            if r > best {
                best = r;
            }
        }
    }
    Ok(best)
}

/// Normal-form fit of a (presumably converged) curve.
pub fn classify(curve: &PolyCurve, tol: &ClassifyTolerances) -> Result<NormalFormClass> {
    let profile = turning_profile(curve)?;
    let index = profile.whitney_index()?;
    let cv = curvature_cv(&profile.angles);
    if cv < tol.circle_tol {
        if index == 0 {
            return Err(ElasticaError::ContradictoryFit);
        }
        return Ok(NormalFormClass {
            tag: ClassTag::Circle { k: index },
            diagnostics: FitDiagnostics {
                curvature_cv: cv,
                template_correlation: None,
                radius_estimate: Some(curve.perimeter() / (std::f64::consts::TAU * index.abs() as f64)),
            },
        });
    }
    if index == 0 {
        let r = figure_eight_correlation(curve, &profile)?;
        let tag = if r > tol.eight_tol {
            ClassTag::FigureEight
        } else {
            ClassTag::Unconverged
        };
        return Ok(NormalFormClass {
            tag,
            diagnostics: FitDiagnostics {
                curvature_cv: cv,
                template_correlation: Some(r),
                radius_estimate: None,
            },
        });
    }
    Ok(NormalFormClass {
        tag: ClassTag::Unconverged,
        diagnostics: FitDiagnostics {
            curvature_cv: cv,
            template_correlation: None,
            radius_estimate: None,
        },
    })
}
