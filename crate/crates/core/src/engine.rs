//! Complex-time continuation of ODE solutions by local Taylor elements.
//!
//! A solution is carried along a polyline in the complex `t`-plane. At each
//! accepted point the engine expands the solution into a [`TaylorElement`],
//! estimates its radius of convergence from the coefficient tail and steps a
//! fraction of that radius. When marching the real axis,
//! [`continue_real_with_detours`] watches the radius shrink towards a real
//! singularity and passes it on a semicircle in the complex plane
//! ([`flank`]), accepting the detour only if the solution comes back real.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{EngineError, SeriesError};
use crate::series::Series;

/// A (possibly time-dependent) vector field `x' = f(t, x)` evaluated on
/// truncated power series.
///
/// Implementations must be built from [`Series`] arithmetic so that feeding
/// series of length `k + 1` returns the first `k + 1` coefficients of
/// `f(t(τ), x(τ))`.
pub trait VectorField {
    fn eval_series(&self, t: &Series, x: &[Series]) -> Result<Vec<Series>, SeriesError>;

    /// Map `x` in place to an equivalent state under a scaling symmetry
    /// `x ↦ 2^-k·x` of the field and return `k`. Fields without such a
    /// symmetry leave `x` alone and return 0.
    fn renormalize(&self, _x: &mut [Complex64]) -> i32 {
        0
    }
}

impl<F> VectorField for F
where
    F: Fn(&Series, &[Series]) -> Result<Vec<Series>, SeriesError>,
{
    fn eval_series(&self, t: &Series, x: &[Series]) -> Result<Vec<Series>, SeriesError> {
        self(t, x)
    }
}

/// Bounds certifying a holomorphic right-hand side on the polydisc
/// `|t - t₀| ≤ a`, `|w_j - w₀_j| ≤ b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolydiscBounds {
    /// Time-disc radius.
    pub a: f64,
    /// State-disc radius.
    pub b: f64,
    /// Sup norm of the right-hand side on the polydisc.
    pub m: f64,
    /// Sup norm of each state partial of the right-hand side.
    pub k: f64,
}

impl PolydiscBounds {
    pub fn new(a: f64, b: f64, m: f64, k: f64) -> Result<Self, EngineError> {
        let bounds = PolydiscBounds { a, b, m, k };
        bounds.validate()?;
        Ok(bounds)
    }

    fn validate(&self) -> Result<(), EngineError> {
        let ok = [self.a, self.b, self.m, self.k]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(EngineError::InvalidBounds)
        }
    }
}

/// Radius on which the local solution provably exists and stays in the
/// state disc: `safety · min(a, b/M, 1/K)`.
pub fn guaranteed_step_radius(bounds: &PolydiscBounds, safety: f64) -> Result<f64, EngineError> {
    bounds.validate()?;
    if !(safety > 0.0 && safety < 1.0) {
        return Err(EngineError::InvalidSafety(safety));
    }
    Ok(safety * bounds.a.min(bounds.b / bounds.m).min(1.0 / bounds.k))
}

/// Local power-series solution at a complex time.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorElement {
    pub center: Complex64,
    /// One series per state component, each of length `order + 1`.
    pub coeffs: Vec<Series>,
    pub order: usize,
    pub estimated_radius: Option<f64>,
}

impl TaylorElement {
    pub fn state(&self) -> Vec<Complex64> {
        self.coeffs.iter().map(Series::value).collect()
    }

    /// Max-norm over components of the `k`-th coefficient.
    pub fn coeff_norm(&self, k: usize) -> f64 {
        self.coeffs
            .iter()
            .map(|s| s.coeff(k).norm())
            .fold(0.0, f64::max)
    }

    /// Largest step whose truncation term stays below `tolerance` relative
    /// to the state magnitude. `None` when the last two coefficients vanish.
    pub fn tolerance_step(&self, tolerance: f64) -> Option<f64> {
        let scale = self
            .coeffs
            .iter()
            .map(|s| s.value().norm())
            .fold(1.0, f64::max);
        let n = self.order;
        let mut step: Option<f64> = None;
        for k in [n.saturating_sub(1), n] {
            if k == 0 {
                continue;
            }
            let c = self.coeff_norm(k);
            if c > 0.0 {
                let h = (tolerance * scale / c).powf(1.0 / k as f64);
                step = Some(step.map_or(h, |s| s.min(h)));
            }
        }
        step
    }
}

/// Tuning of [`estimate_radius`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusOptions {
    /// Minimum expansion order the estimator will look at.
    pub min_terms: usize,
    /// Estimates above this are reported as unknown.
    pub cap: f64,
    /// Coefficient magnitudes at or below this are treated as zero.
    pub floor: f64,
}

impl Default for RadiusOptions {
    fn default() -> Self {
        RadiusOptions {
            min_terms: 8,
            cap: 4.0,
            floor: 1e-290,
        }
    }
}

/// Expand the solution of `x' = rhs(t, x)`, `x(center) = state`, to the
/// given order. The radius is estimated with default [`RadiusOptions`].
pub fn taylor_expand<F: VectorField + ?Sized>(
    rhs: &F,
    state: &[Complex64],
    center: Complex64,
    order: usize,
) -> Result<TaylorElement, EngineError> {
    expand_with(rhs, state, center, order, &RadiusOptions::default())
}

pub(crate) fn expand_with<F: VectorField + ?Sized>(
    rhs: &F,
    state: &[Complex64],
    center: Complex64,
    order: usize,
    radius_opts: &RadiusOptions,
) -> Result<TaylorElement, EngineError> {
    if order == 0 {
        return Err(EngineError::InvalidOrder);
    }
    if state.is_empty() || state.iter().any(|c| !c.is_finite()) {
        return Err(EngineError::InvalidState);
    }
    let mut coeffs: Vec<Series> = state.iter().map(|&c| Series::constant(c, 1)).collect();
    // With x known to degree k, f(t, x) is known to degree k, which fixes
    // x_{k+1} = f_k / (k + 1).
    for k in 0..order {
        let t = Series::variable(center, k + 1);
        let f = rhs
            .eval_series(&t, &coeffs)
            .map_err(|_| EngineError::SingularExpansion(center))?;
        if f.len() != coeffs.len() {
            return Err(EngineError::InvalidOptions(format!(
                "vector field returned {} components for a {}-dimensional state",
                f.len(),
                coeffs.len()
            )));
        }
        for (x, fi) in coeffs.iter_mut().zip(&f) {
            let next = fi.coeff(k) / (k + 1) as f64;
            if !next.is_finite() {
                return Err(EngineError::SingularExpansion(center));
            }
            x.push(next);
        }
    }
    let mut element = TaylorElement {
        center,
        coeffs,
        order,
        estimated_radius: None,
    };
    element.estimated_radius = estimate_radius(&element, radius_opts);
    Ok(element)
}

/// Root-test estimate of the convergence radius.
///
/// Fits `log |c_k| ≈ a − k·log R` by least squares over the upper half of
/// the coefficients. `|c_k|` is the max over components, smoothed by a
/// three-term running max so that sign changes of oscillating tails do not
/// drag the fit. Entire-looking tails (vanishing or above the cap) give
/// `None`.
pub fn estimate_radius(element: &TaylorElement, opts: &RadiusOptions) -> Option<f64> {
    let n = element.order;
    if n < opts.min_terms.max(2) {
        return None;
    }
    let norms: Vec<f64> = (0..=n).map(|k| element.coeff_norm(k)).collect();
    let lo = n.div_ceil(2).max(1);
    let mut points: Vec<(f64, f64)> = Vec::new();
    for k in lo..=n {
        let env = norms[k - 1]
            .max(norms[k])
            .max(if k < n { norms[k + 1] } else { 0.0 });
        if env > opts.floor && env.is_finite() {
            points.push((k as f64, env.ln()));
        }
    }
    if points.len() < 2 {
        return None;
    }
    let len = points.len() as f64;
    let mean_k = points.iter().map(|p| p.0).sum::<f64>() / len;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_k).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_k) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let radius = (-slope).exp();
    if radius.is_finite() && radius > 0.0 && radius <= opts.cap {
        Some(radius)
    } else {
        None
    }
}

/// Evaluate the element at `center + dt`. When a radius is known, `|dt|`
/// may not exceed `step_fraction` of it.
pub fn advance(
    element: &TaylorElement,
    dt: Complex64,
    step_fraction: f64,
) -> Result<Vec<Complex64>, EngineError> {
    if let Some(r) = element.estimated_radius {
        let limit = step_fraction * r;
        if dt.norm() > limit * (1.0 + 1e-12) {
            return Err(EngineError::StepTooLarge {
                step: dt.norm(),
                limit,
            });
        }
    }
    Ok(element.coeffs.iter().map(|s| s.eval(dt)).collect())
}

/// Polyline in the complex time plane starting on the real axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationPath {
    waypoints: Vec<Complex64>,
}

impl ContinuationPath {
    pub fn new(waypoints: Vec<Complex64>) -> Result<Self, EngineError> {
        let first = *waypoints.first().ok_or(EngineError::EmptyPath)?;
        if first.im != 0.0 {
            return Err(EngineError::NonRealStart(first));
        }
        if let Some(i) = waypoints.windows(2).position(|w| w[0] == w[1]) {
            return Err(EngineError::RepeatedWaypoint(i + 1));
        }
        Ok(ContinuationPath { waypoints })
    }

    pub fn segment(from: f64, to: f64) -> Result<Self, EngineError> {
        ContinuationPath::new(vec![Complex64::new(from, 0.0), Complex64::new(to, 0.0)])
    }

    pub fn waypoints(&self) -> &[Complex64] {
        &self.waypoints
    }

    pub fn start(&self) -> Complex64 {
        self.waypoints[0]
    }

    pub fn end(&self) -> Complex64 {
        *self.waypoints.last().unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    #[default]
    Upper,
    Lower,
}

impl Orientation {
    pub fn flip(self) -> Self {
        match self {
            Orientation::Upper => Orientation::Lower,
            Orientation::Lower => Orientation::Upper,
        }
    }
}

/// Semicircle of radius `detour_radius` around the real point `t_singular`,
/// from `t_singular - r` to `t_singular + r` through the chosen half-plane.
pub fn flank(
    t_singular: f64,
    detour_radius: f64,
    orientation: Orientation,
    arc_points: usize,
) -> Result<ContinuationPath, EngineError> {
    if !(detour_radius > 0.0 && detour_radius.is_finite()) {
        return Err(EngineError::InvalidRadius(detour_radius));
    }
    if arc_points < 3 {
        return Err(EngineError::TooFewArcPoints(arc_points));
    }
    let side = match orientation {
        Orientation::Upper => 1.0,
        Orientation::Lower => -1.0,
    };
    let last = arc_points - 1;
    let waypoints = (0..arc_points)
        .map(|j| {
            if j == 0 {
                return Complex64::new(t_singular - detour_radius, 0.0);
            }
            if j == last {
                return Complex64::new(t_singular + detour_radius, 0.0);
            }
            let theta = std::f64::consts::PI * (1.0 - j as f64 / last as f64);
            Complex64::new(
                t_singular + detour_radius * theta.cos(),
                side * detour_radius * theta.sin(),
            )
        })
        .collect();
    ContinuationPath::new(waypoints)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    /// Taylor order of every element.
    pub order: usize,
    /// Per-step truncation tolerance, relative to the state magnitude.
    pub tolerance: f64,
    /// Accepted steps never exceed this fraction of the estimated radius.
    pub step_fraction: f64,
    pub max_steps: usize,
    /// A state component larger than this in modulus ends the run as escaped.
    pub escape_threshold: f64,
    /// An estimated radius below this is a collapse: the run stalls.
    pub collapse_radius: f64,
    pub radius: RadiusOptions,
    /// Flank real singularities when marching the real axis.
    pub detours: bool,
    /// A radius below this while approaching triggers a flank.
    pub singular_radius: f64,
    /// Detour radii as multiples of the distance to the located singularity,
    /// tried in order.
    pub detour_factors: Vec<f64>,
    pub max_detours: usize,
    pub orientation: Orientation,
    pub arc_points: usize,
    /// Relative imaginary part tolerated when re-entering the real axis.
    pub realness_tolerance: f64,
    /// Exceptional real times closer than this are not isolated.
    pub min_spacing: f64,
    /// Apply [`VectorField::renormalize`] to real-axis states.
    pub renormalize: bool,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            order: 16,
            tolerance: 1e-16,
            step_fraction: 0.5,
            max_steps: 200_000,
            escape_threshold: 1e12,
            collapse_radius: 1e-7,
            radius: RadiusOptions::default(),
            detours: true,
            singular_radius: 1e-2,
            detour_factors: vec![0.05, 0.1, 0.2],
            max_detours: 3,
            orientation: Orientation::Upper,
            arc_points: 9,
            realness_tolerance: 1e-9,
            min_spacing: 1e-3,
            renormalize: false,
        }
    }
}

impl ContinuationOptions {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |what: &str| Err(EngineError::InvalidOptions(what.to_string()));
        if self.order == 0 {
            return Err(EngineError::InvalidOrder);
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return bad("tolerance must be positive");
        }
        if !(self.step_fraction > 0.0 && self.step_fraction <= 1.0) {
            return bad("step_fraction must lie in (0, 1]");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1");
        }
        if self.escape_threshold.is_nan() || self.escape_threshold <= 0.0 {
            return bad("escape_threshold must be positive");
        }
        if self.collapse_radius.is_nan() || self.collapse_radius < 0.0 {
            return bad("collapse_radius must be nonnegative");
        }
        if self.realness_tolerance.is_nan() || self.realness_tolerance <= 0.0 {
            return bad("realness_tolerance must be positive");
        }
        if self.detour_factors.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return bad("detour factors must lie in (0, 1)");
        }
        if self.arc_points < 3 {
            return Err(EngineError::TooFewArcPoints(self.arc_points));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: Complex64,
    pub state: Vec<Complex64>,
    /// Step that produced this sample (zero for the initial sample).
    pub dt: Complex64,
    /// Radius estimate of the element the step was taken from.
    pub radius: Option<f64>,
    /// The true state is `2^log2_scale · state` when renormalizing.
    #[serde(default)]
    pub log2_scale: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityEstimate {
    pub t: Complex64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "message")]
pub enum TraceStatus {
    ReachedEnd,
    Escaped,
    Stalled,
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationTrace {
    pub samples: Vec<Sample>,
    pub singularities: Vec<SingularityEstimate>,
    pub exceptional_real_times: Vec<f64>,
    pub status: TraceStatus,
}

impl ContinuationTrace {
    pub fn final_sample(&self) -> &Sample {
        self.samples
            .last()
            .expect("a trace always holds its initial sample")
    }

    pub fn final_state(&self) -> &[Complex64] {
        &self.final_sample().state
    }

    /// Every pair of consecutive exceptional times is at least `spacing` apart.
    pub fn exceptional_times_isolated(&self, spacing: f64) -> bool {
        self.exceptional_real_times
            .windows(2)
            .all(|w| (w[1] - w[0]).abs() >= spacing)
    }
}

fn max_modulus(state: &[Complex64]) -> f64 {
    state.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

struct PathRun {
    samples: Vec<Sample>,
    singularities: Vec<SingularityEstimate>,
    status: TraceStatus,
    steps: usize,
}

fn march<F: VectorField + ?Sized>(
    rhs: &F,
    initial: &[Complex64],
    path: &ContinuationPath,
    opts: &ContinuationOptions,
    step_budget: usize,
) -> PathRun {
    let mut t = path.start();
    let mut x = initial.to_vec();
    let mut run = PathRun {
        samples: vec![Sample {
            t,
            state: x.clone(),
            dt: Complex64::new(0.0, 0.0),
            radius: None,
            log2_scale: 0,
        }],
        singularities: Vec::new(),
        status: TraceStatus::ReachedEnd,
        steps: 0,
    };
    for &target in &path.waypoints()[1..] {
        while t != target {
            if run.steps >= step_budget {
                run.status = TraceStatus::Stalled;
                return run;
            }
            let element = match expand_with(rhs, &x, t, opts.order, &opts.radius) {
                Ok(e) => e,
                Err(e) => {
                    run.status = TraceStatus::Error(e.to_string());
                    return run;
                }
            };
            let towards = target - t;
            let remaining = towards.norm();
            let direction = towards / remaining;
            if let Some(r) = element.estimated_radius {
                if r < opts.collapse_radius {
                    run.singularities.push(SingularityEstimate {
                        t: t + direction * r,
                        radius: r,
                    });
                    run.status = TraceStatus::Stalled;
                    return run;
                }
            }
            let mut h = remaining;
            if let Some(r) = element.estimated_radius {
                h = h.min(opts.step_fraction * r);
            }
            if let Some(ht) = element.tolerance_step(opts.tolerance) {
                h = h.min(ht);
            }
            let dt = if h >= remaining {
                towards
            } else {
                direction * h
            };
            let next = match advance(&element, dt, opts.step_fraction) {
                Ok(v) => v,
                Err(e) => {
                    run.status = TraceStatus::Error(e.to_string());
                    return run;
                }
            };
            t = if h >= remaining { target } else { t + dt };
            x = next;
            run.steps += 1;
            run.samples.push(Sample {
                t,
                state: x.clone(),
                dt,
                radius: element.estimated_radius,
                log2_scale: 0,
            });
            if x.iter().any(|c| !c.is_finite()) {
                run.status = TraceStatus::Error("non-finite state".into());
                return run;
            }
            if max_modulus(&x) > opts.escape_threshold {
                run.status = TraceStatus::Escaped;
                return run;
            }
        }
    }
    run
}

/// March Taylor elements from waypoint to waypoint.
pub fn continue_along_path<F: VectorField + ?Sized>(
    rhs: &F,
    initial: &[Complex64],
    path: &ContinuationPath,
    opts: &ContinuationOptions,
) -> Result<ContinuationTrace, EngineError> {
    opts.validate()?;
    if initial.is_empty() || initial.iter().any(|c| !c.is_finite()) {
        return Err(EngineError::InvalidState);
    }
    let run = march(rhs, initial, path, opts, opts.max_steps);
    Ok(ContinuationTrace {
        samples: run.samples,
        singularities: run.singularities,
        exceptional_real_times: Vec::new(),
        status: run.status,
    })
}

fn is_real_within(state: &[Complex64], tolerance: f64) -> bool {
    state
        .iter()
        .all(|c| c.im.abs() <= tolerance * c.re.abs().max(1.0))
}

/// Locate the singularity ahead from two consecutive real-axis radius
/// estimates, assuming the radius shrinks linearly with the distance.
fn locate_ahead(prev: Option<(f64, f64)>, t: f64, radius: f64) -> f64 {
    if let Some((t_prev, r_prev)) = prev {
        let moved = (t - t_prev).abs();
        let shrink = r_prev - radius;
        if moved > 0.0 && shrink > 0.0 {
            let scale = moved / shrink;
            if (0.5..=2.0).contains(&scale) {
                return radius * scale;
            }
        }
    }
    radius
}

/// Integrate along the real axis from `t = 0` to `t_end`, flanking real
/// singularities with semicircular detours of growing radius.
///
/// A detour is accepted when the state at its exit point is real within
/// `realness_tolerance` (the imaginary part is then dropped) and the exit
/// is clear of the flanked singularity; its exit time is recorded as an
/// exceptional real time. When every detour radius fails the run ends as
/// escaped.
pub fn continue_real_with_detours<F: VectorField + ?Sized>(
    rhs: &F,
    initial: &[Complex64],
    t_end: f64,
    opts: &ContinuationOptions,
) -> Result<ContinuationTrace, EngineError> {
    opts.validate()?;
    if initial.is_empty() || initial.iter().any(|c| !c.is_finite()) {
        return Err(EngineError::InvalidState);
    }
    if !t_end.is_finite() {
        return Err(EngineError::InvalidOptions("t_end must be finite".into()));
    }
    let sign = if t_end < 0.0 { -1.0 } else { 1.0 };
    let mut t = 0.0_f64;
    let mut x: Vec<Complex64> = initial.iter().map(|c| Complex64::new(c.re, c.im)).collect();
    let mut trace = ContinuationTrace {
        samples: vec![Sample {
            t: Complex64::new(0.0, 0.0),
            state: x.clone(),
            dt: Complex64::new(0.0, 0.0),
            radius: None,
            log2_scale: 0,
        }],
        singularities: Vec::new(),
        exceptional_real_times: Vec::new(),
        status: TraceStatus::ReachedEnd,
    };
    let mut steps = 0usize;
    let mut prev: Option<(f64, f64)> = None;
    let mut log2_scale = 0i32;

    while t != t_end {
        if steps >= opts.max_steps {
            trace.status = TraceStatus::Stalled;
            return Ok(trace);
        }
        let element = match expand_with(rhs, &x, Complex64::new(t, 0.0), opts.order, &opts.radius) {
            Ok(e) => e,
            Err(e) => {
                trace.status = TraceStatus::Error(e.to_string());
                return Ok(trace);
            }
        };
        let remaining = (t_end - t).abs();
        let radius = element.estimated_radius;

        if let Some(r) = radius {
            let approaching = prev.is_some_and(|(_, rp)| r < rp);
            if opts.detours && r < opts.singular_radius && approaching && r < remaining {
                let distance = locate_ahead(prev, t, r);
                let t_singular = t + sign * distance;
                trace.singularities.push(SingularityEstimate {
                    t: Complex64::new(t + sign * r, 0.0),
                    radius: r,
                });
                match flank_from(rhs, &x, t, t_singular, distance, sign, opts, &mut steps) {
                    Some((samples, t_exit, x_exit)) => {
                        trace.samples.extend(samples.into_iter().map(|mut s| {
                            s.log2_scale = log2_scale;
                            s
                        }));
                        t = t_exit;
                        x = x_exit;
                        if opts.renormalize {
                            log2_scale += rhs.renormalize(&mut x);
                        }
                        trace.exceptional_real_times.push(t);
                        if let Some(last) = trace.samples.last_mut() {
                            last.t = Complex64::new(t, 0.0);
                            last.state = x.clone();
                            last.log2_scale = log2_scale;
                        }
                        prev = None;
                        continue;
                    }
                    None => {
                        trace.status = TraceStatus::Escaped;
                        return Ok(trace);
                    }
                }
            }
            if r < opts.collapse_radius {
                trace.singularities.push(SingularityEstimate {
                    t: Complex64::new(t + sign * r, 0.0),
                    radius: r,
                });
                trace.status = TraceStatus::Stalled;
                return Ok(trace);
            }
        }

        let mut h = remaining;
        if let Some(r) = radius {
            h = h.min(opts.step_fraction * r);
        }
        if let Some(ht) = element.tolerance_step(opts.tolerance) {
            h = h.min(ht);
        }
        let last_step = h >= remaining;
        let dt = if last_step { t_end - t } else { sign * h };
        let next = match advance(&element, Complex64::new(dt, 0.0), opts.step_fraction) {
            Ok(v) => v,
            Err(e) => {
                trace.status = TraceStatus::Error(e.to_string());
                return Ok(trace);
            }
        };
        prev = radius.map(|r| (t, r));
        t = if last_step { t_end } else { t + dt };
        x = next;
        steps += 1;
        if opts.renormalize {
            log2_scale += rhs.renormalize(&mut x);
        }
        trace.samples.push(Sample {
            t: Complex64::new(t, 0.0),
            state: x.clone(),
            dt: Complex64::new(dt, 0.0),
            radius,
            log2_scale,
        });
        if x.iter().any(|c| !c.is_finite()) {
            trace.status = TraceStatus::Error("non-finite state".into());
            return Ok(trace);
        }
        if max_modulus(&x) > opts.escape_threshold {
            trace.status = TraceStatus::Escaped;
            return Ok(trace);
        }
    }
    Ok(trace)
}

/// Try the detour schedule around `t_singular`. On success returns the
/// detour samples (without the starting sample), the real exit time and the
/// real exit state.
#[allow(clippy::too_many_arguments)]
fn flank_from<F: VectorField + ?Sized>(
    rhs: &F,
    x: &[Complex64],
    t: f64,
    t_singular: f64,
    distance: f64,
    sign: f64,
    opts: &ContinuationOptions,
    steps: &mut usize,
) -> Option<(Vec<Sample>, f64, Vec<Complex64>)> {
    for &factor in opts.detour_factors.iter().take(opts.max_detours) {
        let rho = factor * distance;
        let Ok(arc) = flank(t_singular, rho, opts.orientation, opts.arc_points) else {
            continue;
        };
        let mut waypoints = arc.waypoints().to_vec();
        if sign < 0.0 {
            waypoints.reverse();
        }
        let start = Complex64::new(t, 0.0);
        if waypoints[0] != start {
            waypoints.insert(0, start);
        }
        let Ok(path) = ContinuationPath::new(waypoints) else {
            continue;
        };
        let budget = opts.max_steps.saturating_sub(*steps);
        let run = march(rhs, x, &path, opts, budget);
        *steps += run.steps;
        if run.status != TraceStatus::ReachedEnd {
            continue;
        }
        let exit = run.samples.last().unwrap();
        if !is_real_within(&exit.state, opts.realness_tolerance) {
            continue;
        }
        let x_exit: Vec<Complex64> = exit
            .state
            .iter()
            .map(|c| Complex64::new(c.re, 0.0))
            .collect();
        let t_exit = exit.t.re;
        // A singularity still just ahead means the arc grazed rather than
        // enclosed it.
        if let Ok(e) = expand_with(rhs, &x_exit, exit.t, opts.order, &opts.radius) {
            if e.estimated_radius.is_some_and(|r| r < 0.5 * rho) {
                continue;
            }
        }
        let samples = run.samples.into_iter().skip(1).collect();
        return Some((samples, t_exit, x_exit));
    }
    None
}
