//! Completeness verdicts.
//!
//! [`classify_analytic`] reads the verdict off the impulse `P = A·B²`
//! (complete iff `0 < P ≤ 2`, null geodesics always complete).
//! [`classify_numeric`] continues the geodesic along the real axis in both
//! time directions, flanking real-time singularities through complex time,
//! and calls it complete when both directions reach the horizon with
//! isolated exceptional times and real values in between.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{
    continue_real_with_detours, ContinuationOptions, ContinuationTrace, TraceStatus,
};
use crate::error::{ClassifyError, ModelError};
use crate::model::{impulse, GeodesicField, RealIC};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Complete,
    Incomplete,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Complete => "complete",
            Decision::Incomplete => "incomplete",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Analytic,
    Numeric,
}

/// What one time direction of a numeric run found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSummary {
    /// Signed target time.
    pub horizon: f64,
    /// Last real time reached.
    pub reached: f64,
    pub status: TraceStatus,
    pub exceptional_times: Vec<f64>,
    pub isolated: bool,
    /// Every real-axis sample was real within the realness tolerance.
    pub real: bool,
    /// Set when the run ended early by escaping or stalling.
    pub escape_time: Option<f64>,
    pub samples: usize,
}

impl DirectionSummary {
    fn from_trace(trace: &ContinuationTrace, horizon: f64, opts: &ContinuationOptions) -> Self {
        let last = trace.final_sample();
        let reached = last.t.re;
        let real = trace.samples.iter().filter(|s| s.t.im == 0.0).all(|s| {
            s.state
                .iter()
                .all(|z| z.im.abs() <= opts.realness_tolerance * z.norm().max(1.0))
        });
        let escape_time = match trace.status {
            TraceStatus::Escaped | TraceStatus::Stalled => Some(reached),
            _ => None,
        };
        DirectionSummary {
            horizon,
            reached,
            status: trace.status.clone(),
            exceptional_times: trace.exceptional_real_times.clone(),
            isolated: trace.exceptional_times_isolated(opts.min_spacing),
            real,
            escape_time,
            samples: trace.samples.len(),
        }
    }

    pub fn complete(&self) -> bool {
        self.status == TraceStatus::ReachedEnd && self.isolated && self.real
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericEvidence {
    pub forward: DirectionSummary,
    pub backward: DirectionSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub decision: Decision,
    pub basis: Basis,
    /// `None` for null geodesics, where the impulse is undefined.
    pub impulse: Option<f64>,
    pub evidence: Option<NumericEvidence>,
}

fn check_ic(ic: &RealIC) -> Result<(), ModelError> {
    ic.validate()?;
    if ic.x == 0.0 && ic.y == 0.0 {
        return Err(ModelError::Stationary);
    }
    Ok(())
}

fn nonnull_impulse(ic: &RealIC) -> Result<Option<f64>, ModelError> {
    if ic.is_null() {
        Ok(None)
    } else {
        impulse(ic).map(Some)
    }
}

/// Complete iff null or `0 < P ≤ 2`.
pub fn classify_analytic(ic: &RealIC) -> Result<Verdict, ClassifyError> {
    check_ic(ic)?;
    let p = nonnull_impulse(ic)?;
    let decision = match p {
        None => Decision::Complete,
        Some(p) if p > 0.0 && p <= 2.0 => Decision::Complete,
        Some(_) => Decision::Incomplete,
    };
    Ok(Verdict {
        decision,
        basis: Basis::Analytic,
        impulse: p,
        evidence: None,
    })
}

/// Continue the geodesic to `±horizon` with detours around real-time
/// singularities.
///
/// The flow commutes with doubling, so real-axis states are always
/// renormalized into the fundamental annulus (the run takes place on the
/// torus) whatever `opts.renormalize` says. A trace that ends in an engine
/// error is returned as [`ClassifyError::Continuation`].
pub fn classify_numeric(
    ic: &RealIC,
    horizon: f64,
    opts: &ContinuationOptions,
) -> Result<Verdict, ClassifyError> {
    check_ic(ic)?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(ClassifyError::InvalidHorizon(horizon));
    }
    let p = nonnull_impulse(ic)?;
    let opts = ContinuationOptions {
        renormalize: true,
        ..opts.clone()
    };
    let x0 = ic.state().to_vec();
    let run = |t_end: f64| -> Result<DirectionSummary, ClassifyError> {
        let trace = continue_real_with_detours(&GeodesicField, &x0, t_end, &opts)?;
        if let TraceStatus::Error(msg) = &trace.status {
            return Err(ClassifyError::Continuation {
                t: trace.final_sample().t.re,
                message: msg.clone(),
            });
        }
        Ok(DirectionSummary::from_trace(&trace, t_end, &opts))
    };
    let forward = run(horizon)?;
    let backward = run(-horizon)?;
    let decision = if forward.complete() && backward.complete() {
        Decision::Complete
    } else {
        Decision::Incomplete
    };
    Ok(Verdict {
        decision,
        basis: Basis::Numeric,
        impulse: p,
        evidence: Some(NumericEvidence { forward, backward }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    Alpha,
    Beta,
    X,
    Y,
}

impl Var {
    pub fn parse(name: &str) -> Option<Var> {
        match name {
            "alpha" | "a" => Some(Var::Alpha),
            "beta" | "b" => Some(Var::Beta),
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            _ => None,
        }
    }

    fn index(self) -> usize {
        match self {
            Var::Alpha => 0,
            Var::Beta => 1,
            Var::X => 2,
            Var::Y => 3,
        }
    }
}

/// `count` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        n => (0..n)
            .map(|i| {
                if i == n - 1 {
                    stop
                } else {
                    start + (stop - start) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub var: Var,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Grid {
    /// Cartesian product of the axes over a base point; the first axis
    /// varies slowest. Variables without an axis keep their base value.
    Product {
        base: [f64; 4],
        axes: Vec<GridAxis>,
    },
    List(Vec<RealIC>),
}

impl Grid {
    pub fn points(&self) -> Vec<[f64; 4]> {
        match self {
            Grid::List(ics) => ics
                .iter()
                .map(|ic| [ic.alpha, ic.beta, ic.x, ic.y])
                .collect(),
            Grid::Product { base, axes } => {
                let mut points = vec![*base];
                for axis in axes {
                    points = points
                        .iter()
                        .flat_map(|p| {
                            axis.values.iter().map(move |&v| {
                                let mut q = *p;
                                q[axis.var.index()] = v;
                                q
                            })
                        })
                        .collect();
                }
                points
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Numeric runs are skipped when `|P|` or `|P − 2|` is below this.
    pub boundary_margin: f64,
    pub horizon: f64,
    pub numeric: bool,
    pub continuation: ContinuationOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            boundary_margin: 0.05,
            horizon: 10.0,
            numeric: true,
            continuation: ContinuationOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum NumericOutcome {
    Decided(Decision),
    Skipped,
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub ic: RealIC,
    pub impulse: Option<f64>,
    pub analytic: Decision,
    pub numeric: NumericOutcome,
    /// `None` when the numeric run was skipped; a numeric error counts as
    /// disagreement.
    pub agree: Option<bool>,
}

fn in_boundary_band(p: Option<f64>, margin: f64) -> bool {
    p.is_some_and(|p| p.abs() < margin || (p - 2.0).abs() < margin)
}

fn sweep_row(index: usize, ic: RealIC, opts: &SweepOptions) -> Result<SweepRow, ClassifyError> {
    let analytic = classify_analytic(&ic).map_err(|e| match e {
        ClassifyError::Model(source) => ClassifyError::InvalidGridPoint { index, source },
        other => other,
    })?;
    let numeric = if !opts.numeric || in_boundary_band(analytic.impulse, opts.boundary_margin) {
        NumericOutcome::Skipped
    } else {
        match classify_numeric(&ic, opts.horizon, &opts.continuation) {
            Ok(v) => NumericOutcome::Decided(v.decision),
            Err(e) => NumericOutcome::Error(e.to_string()),
        }
    };
    let agree = match &numeric {
        NumericOutcome::Decided(d) => Some(*d == analytic.decision),
        NumericOutcome::Skipped => None,
        NumericOutcome::Error(_) => Some(false),
    };
    Ok(SweepRow {
        index,
        ic,
        impulse: analytic.impulse,
        analytic: analytic.decision,
        numeric,
        agree,
    })
}

/// Classify every grid point; rows come back in grid order.
pub fn sweep(grid: &Grid, opts: &SweepOptions) -> Result<Vec<SweepRow>, ClassifyError> {
    if !(opts.horizon.is_finite() && opts.horizon > 0.0) {
        return Err(ClassifyError::InvalidHorizon(opts.horizon));
    }
    opts.continuation.validate()?;
    let points = grid.points();
    if points.is_empty() {
        return Err(ClassifyError::EmptyGrid);
    }
    let ics = points
        .iter()
        .enumerate()
        .map(|(index, p)| {
            RealIC::new(p[0], p[1], p[2], p[3])
                .map_err(|source| ClassifyError::InvalidGridPoint { index, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    ics.into_par_iter()
        .enumerate()
        .map(|(index, ic)| sweep_row(index, ic, opts))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub total: usize,
    /// Rows with a numeric outcome.
    pub compared: usize,
    pub agree: usize,
    pub disagree: usize,
    pub disagreements: Vec<SweepRow>,
    /// False when no row carries a numeric outcome.
    pub applicable: bool,
}

pub fn validate(rows: &[SweepRow]) -> ValidationReport {
    let compared: Vec<&SweepRow> = rows.iter().filter(|r| r.agree.is_some()).collect();
    let disagreements: Vec<SweepRow> = compared
        .iter()
        .filter(|r| r.agree == Some(false))
        .map(|r| (*r).clone())
        .collect();
    ValidationReport {
        total: rows.len(),
        compared: compared.len(),
        agree: compared.len() - disagreements.len(),
        disagree: disagreements.len(),
        disagreements,
        applicable: !compared.is_empty(),
    }
}
