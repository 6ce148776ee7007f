//! The Clifton–Pohl metric `du·dv / (u² + v²)` on the punctured plane and
//! its holomorphic extension to `ℂ² ∖ {u² + v² = 0}`.
//!
//! Geodesics satisfy
//!
//! ```text
//! ü = 2u·u̇² / (u² + v²),    v̈ = 2v·v̇² / (u² + v²)
//! ```
//!
//! and carry two first integrals, the energy `A = u̇v̇ / (u² + v²)` and
//! `B = u/u̇ + v/v̇`. Their combination `P = A·B²` is the impulse.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::VectorField;
use crate::error::{ModelError, SeriesError};
use crate::series::Series;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Position and velocity of a (complex) geodesic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicState {
    pub u: Complex64,
    pub v: Complex64,
    pub du: Complex64,
    pub dv: Complex64,
}

impl GeodesicState {
    pub fn new(u: Complex64, v: Complex64, du: Complex64, dv: Complex64) -> Self {
        GeodesicState { u, v, du, dv }
    }

    pub fn real(u: f64, v: f64, du: f64, dv: f64) -> Self {
        GeodesicState {
            u: Complex64::new(u, 0.0),
            v: Complex64::new(v, 0.0),
            du: Complex64::new(du, 0.0),
            dv: Complex64::new(dv, 0.0),
        }
    }

    /// Layout used by the engine: `[u, v, u̇, v̇]`.
    pub fn to_vec(&self) -> Vec<Complex64> {
        vec![self.u, self.v, self.du, self.dv]
    }

    pub fn from_slice(x: &[Complex64]) -> Self {
        GeodesicState {
            u: x[0],
            v: x[1],
            du: x[2],
            dv: x[3],
        }
    }

    /// `u² + v²`, the conformal factor's denominator.
    pub fn conformal(&self) -> Complex64 {
        self.u * self.u + self.v * self.v
    }

    /// Energy `u̇v̇ / (u² + v²)`.
    pub fn energy(&self) -> Result<Complex64, ModelError> {
        metric_eval(self.u, self.v, (self.du, self.dv), (self.du, self.dv))
    }

    /// `u/u̇ + v/v̇`.
    pub fn second_integral(&self) -> Option<Complex64> {
        if self.du == ZERO || self.dv == ZERO {
            return None;
        }
        Some(self.u / self.du + self.v / self.dv)
    }
}

/// Real initial condition: position `(alpha, beta)`, velocity `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealIC {
    pub alpha: f64,
    pub beta: f64,
    pub x: f64,
    pub y: f64,
}

impl RealIC {
    pub fn new(alpha: f64, beta: f64, x: f64, y: f64) -> Result<Self, ModelError> {
        let ic = RealIC { alpha, beta, x, y };
        ic.validate()?;
        Ok(ic)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if ![self.alpha, self.beta, self.x, self.y]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(ModelError::NonFinite);
        }
        if self.alpha == 0.0 && self.beta == 0.0 {
            return Err(ModelError::Origin);
        }
        Ok(())
    }

    pub fn is_null(&self) -> bool {
        self.x * self.y == 0.0
    }

    pub fn state(&self) -> GeodesicState {
        GeodesicState::real(self.alpha, self.beta, self.x, self.y)
    }

    /// Image under the deck transformation `p ↦ 2p`.
    pub fn doubled(&self) -> RealIC {
        RealIC {
            alpha: 2.0 * self.alpha,
            beta: 2.0 * self.beta,
            x: 2.0 * self.x,
            y: 2.0 * self.y,
        }
    }

    /// Exchange the roles of `u` and `v`.
    pub fn swapped(&self) -> RealIC {
        RealIC {
            alpha: self.beta,
            beta: self.alpha,
            x: self.y,
            y: self.x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstIntegrals {
    pub a: f64,
    pub b: f64,
    /// Impulse, `a · b²`.
    pub p: f64,
}

/// `g(V, W)` at `(u, v)` with `g(V, V) = V_u·V_v / (u² + v²)`.
pub fn metric_eval(
    u: Complex64,
    v: Complex64,
    vel: (Complex64, Complex64),
    wel: (Complex64, Complex64),
) -> Result<Complex64, ModelError> {
    let s = u * u + v * v;
    if s == ZERO {
        return Err(ModelError::SingularLocus);
    }
    Ok((vel.0 * wel.1 + wel.0 * vel.1) / (2.0 * s))
}

/// Derivative of `(u, v, u̇, v̇)` along the geodesic flow.
pub fn geodesic_rhs(state: &GeodesicState) -> Result<GeodesicState, ModelError> {
    let s = state.conformal();
    if s == ZERO {
        return Err(ModelError::SingularLocus);
    }
    Ok(GeodesicState {
        u: state.du,
        v: state.dv,
        du: 2.0 * state.u * state.du * state.du / s,
        dv: 2.0 * state.v * state.dv * state.dv / s,
    })
}

/// The geodesic flow as a [`VectorField`] on `[u, v, u̇, v̇]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GeodesicField;

impl VectorField for GeodesicField {
    fn eval_series(&self, _t: &Series, x: &[Series]) -> Result<Vec<Series>, SeriesError> {
        let (u, v, du, dv) = (&x[0], &x[1], &x[2], &x[3]);
        let s = &(u * u) + &(v * v);
        let ddu = (&(u * du) * du).scale_re(2.0).try_div(&s)?;
        let ddv = (&(v * dv) * dv).scale_re(2.0).try_div(&s)?;
        Ok(vec![du.clone(), dv.clone(), ddu, ddv])
    }

    /// The flow commutes with `(u, v, u̇, v̇) ↦ 2·(u, v, u̇, v̇)`; bring the
    /// position back into the fundamental annulus once it drifts far out.
    fn renormalize(&self, x: &mut [Complex64]) -> i32 {
        let norm = x[0].norm().hypot(x[1].norm());
        if !(norm.is_finite() && norm > 0.0) || (1.0 / 16.0..=16.0).contains(&norm) {
            return 0;
        }
        let k = norm.log2().floor() as i32;
        let f = 2f64.powi(-k);
        for z in x.iter_mut() {
            *z *= f;
        }
        k
    }
}

/// `A = xy/(α² + β²)`, `B = α/x + β/y`, `P = A·B²`.
pub fn first_integrals(ic: &RealIC) -> Result<FirstIntegrals, ModelError> {
    ic.validate()?;
    if ic.is_null() {
        return Err(ModelError::NullGeodesic);
    }
    let a = ic.x * ic.y / (ic.alpha * ic.alpha + ic.beta * ic.beta);
    let b = ic.alpha / ic.x + ic.beta / ic.y;
    Ok(FirstIntegrals { a, b, p: a * b * b })
}

/// The impulse `P = A·B²` of a nonnull initial condition.
pub fn impulse(ic: &RealIC) -> Result<f64, ModelError> {
    first_integrals(ic).map(|fi| fi.p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coordinate {
    U,
    V,
}

/// Closed-form null geodesic: one coordinate is constant, the other is
/// either a hyperbola (`const = 0`) or a scaled tangent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NullGeodesic {
    /// `moving(t) = p² / (p − ṗ·t)`, the other coordinate ≡ 0.
    Hyperbola { moving: Coordinate, p: f64, dp: f64 },
    /// `moving(t) = level·tan(rate·t + phase)`, the other coordinate ≡ level.
    Tangent {
        moving: Coordinate,
        level: f64,
        rate: f64,
        phase: f64,
    },
}

impl NullGeodesic {
    pub fn moving(&self) -> Coordinate {
        match *self {
            NullGeodesic::Hyperbola { moving, .. } | NullGeodesic::Tangent { moving, .. } => moving,
        }
    }

    fn constant_level(&self) -> f64 {
        match *self {
            NullGeodesic::Hyperbola { .. } => 0.0,
            NullGeodesic::Tangent { level, .. } => level,
        }
    }

    /// Value and derivative of the moving coordinate at complex `t`.
    fn moving_at(&self, t: Complex64) -> (Complex64, Complex64) {
        match *self {
            NullGeodesic::Hyperbola { p, dp, .. } => {
                let d = p - dp * t;
                (p * p / d, p * p * dp / (d * d))
            }
            NullGeodesic::Tangent {
                level, rate, phase, ..
            } => {
                let arg = rate * t + phase;
                let c = arg.cos();
                (level * arg.tan(), level * rate / (c * c))
            }
        }
    }

    /// Full state at complex time `t`.
    pub fn state_at(&self, t: Complex64) -> GeodesicState {
        let (m, dm) = self.moving_at(t);
        let k = Complex64::new(self.constant_level(), 0.0);
        match self.moving() {
            Coordinate::U => GeodesicState::new(m, k, dm, ZERO),
            Coordinate::V => GeodesicState::new(k, m, ZERO, dm),
        }
    }

    /// Real poles of the moving coordinate in `[t_min, t_max]`, ascending.
    pub fn real_poles(&self, t_min: f64, t_max: f64) -> Vec<f64> {
        match *self {
            NullGeodesic::Hyperbola { p, dp, .. } => {
                let t = p / dp;
                if (t_min..=t_max).contains(&t) {
                    vec![t]
                } else {
                    vec![]
                }
            }
            NullGeodesic::Tangent { rate, phase, .. } => {
                // rate·t + phase = π/2 + jπ
                let period = std::f64::consts::PI / rate.abs();
                let first = (FRAC_PI_2 - phase) / rate;
                let j_lo = ((t_min - first) / period).ceil() as i64;
                let j_hi = ((t_max - first) / period).floor() as i64;
                (j_lo..=j_hi).map(|j| first + j as f64 * period).collect()
            }
        }
    }

    /// Human-readable formula of the moving coordinate.
    pub fn formula(&self) -> String {
        let name = |c: Coordinate| match c {
            Coordinate::U => ("u", "v"),
            Coordinate::V => ("v", "u"),
        };
        match *self {
            NullGeodesic::Hyperbola { moving, p, dp } => {
                let (m, o) = name(moving);
                format!("{m}(t) = {}/({p} - {dp}*t), {o}(t) = 0", p * p)
            }
            NullGeodesic::Tangent {
                moving,
                level,
                rate,
                phase,
            } => {
                let (m, o) = name(moving);
                format!("{m}(t) = {level}*tan({rate}*t + {phase}), {o}(t) = {level}")
            }
        }
    }
}

/// Closed form of the null geodesic through `ic` (`xy = 0`).
pub fn null_closed_form(ic: &RealIC) -> Result<NullGeodesic, ModelError> {
    ic.validate()?;
    let (moving, p, dp, level) = match (ic.x == 0.0, ic.y == 0.0) {
        (true, true) => return Err(ModelError::Stationary),
        (false, false) => return Err(ModelError::NotNull),
        (false, true) => (Coordinate::U, ic.alpha, ic.x, ic.beta),
        (true, false) => (Coordinate::V, ic.beta, ic.y, ic.alpha),
    };
    if level == 0.0 {
        return Ok(NullGeodesic::Hyperbola { moving, p, dp });
    }
    // level·tan(phase) = p, level·rate·sec²(phase) = dp
    let phase = (p / level).atan();
    let c = phase.cos();
    let rate = dp * c * c / level;
    Ok(NullGeodesic::Tangent {
        moving,
        level,
        rate,
        phase,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Logarithmic chart `u = s_u·e^ω`, `v = s_v·e^η` on one octant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogState {
    pub omega: Complex64,
    pub eta: Complex64,
    pub s_u: Sign,
    pub s_v: Sign,
}

impl LogState {
    /// `φ = ω − η`.
    pub fn phi(&self) -> Complex64 {
        self.omega - self.eta
    }

    /// Energy as seen in this chart: `ω̇η̇ = 2·(s_u s_v A)·Ch φ`.
    pub fn chart_energy(&self, a: f64) -> f64 {
        self.s_u.value() * self.s_v.value() * a
    }
}

pub fn to_log(u: Complex64, v: Complex64) -> Result<LogState, ModelError> {
    if u == ZERO || v == ZERO {
        return Err(ModelError::OnAxis);
    }
    let s_u = Sign::of(u.re);
    let s_v = Sign::of(v.re);
    Ok(LogState {
        omega: (u * s_u.value()).ln(),
        eta: (v * s_v.value()).ln(),
        s_u,
        s_v,
    })
}

pub fn from_log(state: &LogState) -> (Complex64, Complex64) {
    (
        state.s_u.value() * state.omega.exp(),
        state.s_v.value() * state.eta.exp(),
    )
}

/// `s = branch · √(B² − 2/(A·Ch φ))` with the principal square root.
fn reduced_root(phi: Complex64, a: f64, b: f64, branch: Sign) -> Result<Complex64, ModelError> {
    let ach = a * phi.cosh();
    if ach == ZERO || !ach.is_finite() {
        return Err(ModelError::SingularReduction);
    }
    Ok(branch.value() * (b * b - 2.0 / ach).sqrt())
}

/// Log-chart velocities `(ω̇, η̇) = (2/(B − s), 2/(B + s))`.
pub fn omega_eta_rhs(
    omega: Complex64,
    eta: Complex64,
    a: f64,
    b: f64,
    branch: Sign,
) -> Result<(Complex64, Complex64), ModelError> {
    let s = reduced_root(omega - eta, a, b, branch)?;
    let (minus, plus) = (b - s, b + s);
    if minus == ZERO || plus == ZERO {
        return Err(ModelError::BranchDegeneracy);
    }
    Ok((2.0 / minus, 2.0 / plus))
}

/// `φ̇ = 2A·Ch φ·s`, the difference `ω̇ − η̇` written without quotients.
pub fn phi_rhs(phi: Complex64, a: f64, b: f64, branch: Sign) -> Result<Complex64, ModelError> {
    let s = reduced_root(phi, a, b, branch)?;
    if b - s == ZERO || b + s == ZERO {
        return Err(ModelError::BranchDegeneracy);
    }
    Ok(2.0 * a * phi.cosh() * s)
}

/// Branch of the reduced root matching the velocities of `state`, so that
/// `omega_eta_rhs` reproduces `(u̇/u, v̇/v)`.
pub fn initial_branch(state: &GeodesicState, a: f64, b: f64) -> Result<Sign, ModelError> {
    let log = to_log(state.u, state.v)?;
    let chart_a = log.chart_energy(a);
    let omega_dot = state.du / state.u;
    if omega_dot == ZERO {
        return Err(ModelError::BranchDegeneracy);
    }
    // ω̇ = 2/(B − s)  ⇒  s = B − 2/ω̇
    let s = b - 2.0 / omega_dot;
    let principal = reduced_root(log.phi(), chart_a, b, Sign::Plus)?;
    if (s - principal).norm() <= (s + principal).norm() {
        Ok(Sign::Plus)
    } else {
        Ok(Sign::Minus)
    }
}

/// The log-chart flow `(ω, η)` as a [`VectorField`], for a fixed chart
/// energy `a`, integral `b` and root branch.
#[derive(Debug, Clone, Copy)]
pub struct LogChartField {
    pub a: f64,
    pub b: f64,
    pub branch: Sign,
}

impl VectorField for LogChartField {
    fn eval_series(&self, _t: &Series, x: &[Series]) -> Result<Vec<Series>, SeriesError> {
        let phi = &x[0] - &x[1];
        let ach = phi.cosh().scale_re(self.a);
        let b = Complex64::new(self.b, 0.0);
        let b2 = Series::constant(b * b, phi.len());
        let two = Series::constant(Complex64::new(2.0, 0.0), phi.len());
        let s = (&b2 - &two.try_div(&ach)?)
            .try_sqrt()?
            .scale_re(self.branch.value());
        let bs = Series::constant(b, phi.len());
        Ok(vec![two.try_div(&(&bs - &s))?, two.try_div(&(&bs + &s))?])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisCrossing {
    /// The coordinate that vanishes at the crossing.
    pub axis: Coordinate,
    pub before: (Sign, Sign),
    pub after: (Sign, Sign),
    /// The state at the crossing; position and velocity are continuous.
    pub state: GeodesicState,
}

/// Octant bookkeeping for a real geodesic passing through `u = 0` or `v = 0`.
pub fn axis_crossing(state: &GeodesicState) -> Result<AxisCrossing, ModelError> {
    let (u, v, du, dv) = (state.u.re, state.v.re, state.du.re, state.dv.re);
    let (axis, rate, other) = match (u == 0.0, v == 0.0) {
        (true, true) => return Err(ModelError::Origin),
        (false, false) => return Err(ModelError::OffAxis),
        (true, false) => (Coordinate::U, du, v),
        (false, true) => (Coordinate::V, dv, u),
    };
    if rate == 0.0 {
        return Err(ModelError::DegenerateCrossing);
    }
    let crossing = Sign::of(rate);
    let fixed = Sign::of(other);
    let (before, after) = match axis {
        Coordinate::U => ((crossing.flip(), fixed), (crossing, fixed)),
        Coordinate::V => ((fixed, crossing.flip()), (fixed, crossing)),
    };
    Ok(AxisCrossing {
        axis,
        before,
        after,
        state: *state,
    })
}

/// Fundamental-domain representative under `p ↦ 2p`: returns
/// `(2^-k·u, 2^-k·v, k)` with Euclidean norm in `[1, 2)`.
pub fn quotient_project(u: f64, v: f64) -> Result<(f64, f64, i32), ModelError> {
    if !(u.is_finite() && v.is_finite()) {
        return Err(ModelError::NonFinite);
    }
    if u == 0.0 && v == 0.0 {
        return Err(ModelError::Origin);
    }
    let norm = u.hypot(v);
    let mut k = norm.log2().floor() as i32;
    // log2 may round across an integer; settle k on the exact scaled norm.
    loop {
        let scaled = norm * 2f64.powi(-k);
        if scaled >= 2.0 {
            k += 1;
        } else if scaled < 1.0 {
            k -= 1;
        } else {
            break;
        }
    }
    let f = 2f64.powi(-k);
    Ok((u * f, v * f, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn r(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn metric_examples() {
        assert_relative_eq!(
            metric_eval(r(1.0), r(0.0), (r(1.0), r(1.0)), (r(1.0), r(1.0)))
                .unwrap()
                .re,
            1.0
        );
        assert_eq!(
            metric_eval(r(1.0), r(1.0), (r(1.0), r(0.0)), (r(1.0), r(0.0))).unwrap(),
            r(0.0)
        );
        assert_eq!(
            metric_eval(r(1.0), c(0.0, 1.0), (r(1.0), r(1.0)), (r(1.0), r(1.0))),
            Err(ModelError::SingularLocus)
        );
    }

    #[test]
    fn metric_is_symmetric_bilinear() {
        let (u, v) = (c(0.3, 0.1), c(-1.2, 0.4));
        let a = (c(1.0, 2.0), c(-0.5, 0.0));
        let b = (c(0.0, 1.0), c(2.0, -1.0));
        let ab = metric_eval(u, v, a, b).unwrap();
        let ba = metric_eval(u, v, b, a).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn rhs_examples() {
        let d = geodesic_rhs(&GeodesicState::real(1.0, 0.0, 1.0, 0.0)).unwrap();
        assert_eq!((d.du, d.dv), (r(2.0), r(0.0)));
        let d = geodesic_rhs(&GeodesicState::real(0.0, 1.0, 0.0, 1.0)).unwrap();
        assert_eq!((d.du, d.dv), (r(0.0), r(2.0)));
        let d = geodesic_rhs(&GeodesicState::real(1.0, 1.0, 0.0, 0.0)).unwrap();
        assert_eq!((d.du, d.dv), (r(0.0), r(0.0)));
        assert_eq!(
            geodesic_rhs(&GeodesicState::new(r(1.0), c(0.0, -1.0), r(1.0), r(1.0))),
            Err(ModelError::SingularLocus)
        );
    }

    #[test]
    fn series_field_agrees_with_pointwise_rhs() {
        let st = GeodesicState::new(c(0.7, 0.2), c(-0.4, 0.1), c(1.1, -0.3), c(0.2, 0.5));
        let x: Vec<Series> = st
            .to_vec()
            .into_iter()
            .map(|z| Series::constant(z, 1))
            .collect();
        let f = GeodesicField
            .eval_series(&Series::constant(r(0.0), 1), &x)
            .unwrap();
        let g = geodesic_rhs(&st).unwrap().to_vec();
        for (a, b) in f.iter().zip(&g) {
            assert_relative_eq!((a.value() - b).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn first_integral_examples() {
        let fi = first_integrals(&RealIC::new(1.0, 1.0, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!((fi.a, fi.b, fi.p), (0.5, 2.0, 2.0));
        let fi = first_integrals(&RealIC::new(1.0, 0.0, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!((fi.a, fi.b, fi.p), (1.0, 1.0, 1.0));
        let fi = first_integrals(&RealIC::new(1.0, 1.0, 1.0, -1.0).unwrap()).unwrap();
        assert_eq!((fi.a, fi.b, fi.p), (-0.5, 0.0, 0.0));
        assert_eq!(
            first_integrals(&RealIC::new(1.0, 1.0, 0.0, 1.0).unwrap()),
            Err(ModelError::NullGeodesic)
        );
    }

    #[test]
    fn impulse_examples() {
        let p = |a, b, x, y| impulse(&RealIC::new(a, b, x, y).unwrap()).unwrap();
        assert_eq!(p(1.0, 1.0, 1.0, 1.0), 2.0);
        assert_eq!(p(2.0, 2.0, 2.0, 2.0), 2.0);
        assert_eq!(p(1.0, 1.0, 1.0, -1.0), 0.0);
    }

    #[test]
    fn ic_rejects_origin() {
        assert_eq!(RealIC::new(0.0, 0.0, 1.0, 1.0), Err(ModelError::Origin));
    }

    #[test]
    fn null_closed_form_examples() {
        let g = null_closed_form(&RealIC::new(1.0, 0.0, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!(
            g,
            NullGeodesic::Hyperbola {
                moving: Coordinate::U,
                p: 1.0,
                dp: 1.0
            }
        );
        let s = g.state_at(r(0.5));
        assert_relative_eq!(s.u.re, 2.0);
        assert_eq!(s.v, r(0.0));
        assert_eq!(g.real_poles(-5.0, 5.0), vec![1.0]);

        let g = null_closed_form(&RealIC::new(1.0, 1.0, 2.0, 0.0).unwrap()).unwrap();
        let NullGeodesic::Tangent {
            level, rate, phase, ..
        } = g
        else {
            panic!("expected tangent form");
        };
        assert_eq!(level, 1.0);
        assert_relative_eq!(rate, 1.0, epsilon = 1e-15);
        assert_relative_eq!(phase, std::f64::consts::FRAC_PI_4, epsilon = 1e-15);
        let t = 0.3;
        assert_relative_eq!(
            g.state_at(r(t)).u.re,
            (t + std::f64::consts::FRAC_PI_4).tan(),
            epsilon = 1e-14
        );

        let g = null_closed_form(&RealIC::new(0.0, 1.0, 0.0, 3.0).unwrap()).unwrap();
        let s = g.state_at(r(0.1));
        assert_eq!(s.u, r(0.0));
        assert_relative_eq!(s.v.re, 1.0 / (1.0 - 0.3), epsilon = 1e-15);
        assert_relative_eq!(g.real_poles(0.0, 1.0)[0], 1.0 / 3.0);
    }

    #[test]
    fn null_closed_form_errors() {
        assert_eq!(
            null_closed_form(&RealIC::new(1.0, 1.0, 0.0, 0.0).unwrap()),
            Err(ModelError::Stationary)
        );
        assert_eq!(
            null_closed_form(&RealIC::new(1.0, 1.0, 1.0, 1.0).unwrap()),
            Err(ModelError::NotNull)
        );
    }

    #[test]
    fn tangent_poles_are_periodic() {
        let g = null_closed_form(&RealIC::new(1.0, 1.0, 2.0, 0.0).unwrap()).unwrap();
        let poles = g.real_poles(-4.0, 4.0);
        let pi = std::f64::consts::PI;
        let expected = [-3.0 * pi / 4.0, pi / 4.0, 5.0 * pi / 4.0];
        assert_eq!(poles.len(), expected.len());
        for (p, e) in poles.iter().zip(expected) {
            assert_relative_eq!(*p, e, epsilon = 1e-14);
        }
    }

    #[test]
    fn log_chart_examples() {
        let l = to_log(r(1.0), r(1.0)).unwrap();
        assert_eq!(
            (l.omega, l.eta, l.s_u, l.s_v),
            (r(0.0), r(0.0), Sign::Plus, Sign::Plus)
        );
        let l = to_log(r(std::f64::consts::E), r(-1.0)).unwrap();
        assert_relative_eq!(l.omega.re, 1.0, epsilon = 1e-15);
        assert_eq!(l.eta, r(0.0));
        assert_eq!((l.s_u, l.s_v), (Sign::Plus, Sign::Minus));
        let back = from_log(&LogState {
            omega: r(0.0),
            eta: r(0.0),
            s_u: Sign::Minus,
            s_v: Sign::Minus,
        });
        assert_eq!(back, (r(-1.0), r(-1.0)));
        assert_eq!(to_log(r(0.0), r(1.0)), Err(ModelError::OnAxis));
    }

    #[test]
    fn omega_eta_examples() {
        let (wo, we) = omega_eta_rhs(r(0.0), r(0.0), 1.0, 2.0, Sign::Plus).unwrap();
        let s2 = 2f64.sqrt();
        assert_relative_eq!(wo.re, 2.0 / (2.0 - s2), epsilon = 1e-14);
        assert_relative_eq!(we.re, 2.0 / (2.0 + s2), epsilon = 1e-14);

        let (om, et) = (c(0.3, 0.1), c(-0.2, 0.05));
        let (a1, b1) = omega_eta_rhs(om, et, 0.8, 1.7, Sign::Plus).unwrap();
        let (a2, b2) = omega_eta_rhs(et, om, 0.8, 1.7, Sign::Minus).unwrap();
        assert_relative_eq!((a1 - b2).norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!((b1 - a2).norm(), 0.0, epsilon = 1e-14);

        let (wo, we) = omega_eta_rhs(r(0.0), r(0.0), 0.5, 2.0, Sign::Plus).unwrap();
        assert_eq!((wo, we), (r(1.0), r(1.0)));
    }

    #[test]
    fn omega_eta_errors() {
        assert_eq!(
            omega_eta_rhs(r(0.0), r(0.0), 0.0, 1.0, Sign::Plus),
            Err(ModelError::SingularReduction)
        );
        // B ∓ s only vanishes once 2/(A·Ch φ) underflows against B².
        assert_eq!(
            omega_eta_rhs(r(700.0), r(0.0), 1.0, 1.0, Sign::Plus),
            Err(ModelError::BranchDegeneracy)
        );
    }

    #[test]
    fn phi_examples() {
        let p = phi_rhs(r(0.0), 1.0, 2.0, Sign::Plus).unwrap();
        assert_relative_eq!(p.re, 2.0 * 2f64.sqrt(), epsilon = 1e-14);
        assert_eq!(phi_rhs(r(0.0), 0.5, 2.0, Sign::Plus).unwrap(), r(0.0));
    }

    #[test]
    fn axis_crossing_examples() {
        let x = axis_crossing(&GeodesicState::real(0.0, 1.0, 1.0, 1.0)).unwrap();
        assert_eq!(x.axis, Coordinate::U);
        assert_eq!(x.before.0, Sign::Minus);
        assert_eq!(x.after.0, Sign::Plus);
        assert_eq!(x.after.1, Sign::Plus);

        let x = axis_crossing(&GeodesicState::real(1.0, 0.0, 1.0, -1.0)).unwrap();
        assert_eq!(x.axis, Coordinate::V);
        assert_eq!((x.before.1, x.after.1), (Sign::Plus, Sign::Minus));

        assert_eq!(
            axis_crossing(&GeodesicState::real(0.0, 1.0, 0.0, 1.0)),
            Err(ModelError::DegenerateCrossing)
        );
        assert_eq!(
            axis_crossing(&GeodesicState::real(1.0, 1.0, 0.0, 1.0)),
            Err(ModelError::OffAxis)
        );
    }

    #[test]
    fn quotient_examples() {
        assert_eq!(quotient_project(3.0, 0.0).unwrap(), (1.5, 0.0, 1));
        assert_eq!(quotient_project(1.0, 1.0).unwrap(), (1.0, 1.0, 0));
        let (u, v, k) = quotient_project(0.2, 0.1).unwrap();
        assert_relative_eq!(u, 1.6, epsilon = 1e-15);
        assert_relative_eq!(v, 0.8, epsilon = 1e-15);
        assert_eq!(k, -3);
        assert_eq!(quotient_project(0.0, 0.0), Err(ModelError::Origin));
        assert_eq!(quotient_project(2.0, 0.0).unwrap(), (1.0, 0.0, 1));
        assert_eq!(quotient_project(1.0, 0.0).unwrap(), (1.0, 0.0, 0));
    }
}
