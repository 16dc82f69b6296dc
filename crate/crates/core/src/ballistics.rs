//! Ball flight prediction: drag/Magnus ODE, fixed-step RK4 integration and
//! polynomial initial-state estimation from noisy 3D observations.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::geometry::{Point3, Vec3};

/// Parameters of the flight ODE `a = g - beta0*|v|*v - beta1*(spin x v)`.
///
/// `beta0` carries units of 1/m so that `|v|*v` in m^2/s^2 maps to m/s^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightModel {
    pub gravity: Vec3,
    pub beta0: f64,
    pub beta1: f64,
    /// Spin vector in rad/s; zero by default (spin is ignored).
    pub spin: Vec3,
}

impl Default for FlightModel {
    fn default() -> Self {
        FlightModel {
            gravity: Vec3::new(0.0, 0.0, -9.81),
            beta0: 0.15,
            beta1: 0.012,
            spin: Vec3::zeros(),
        }
    }
}

/// Position+velocity state of the ball at a point in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallState {
    pub t: f64,
    pub position: Point3,
    pub velocity: Vec3,
}

/// Noisy 3D ball position with a timestamp, as produced by fusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedObservation {
    pub t: f64,
    pub position: Point3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BallisticsError {
    TooFewObservations { needed: usize, got: usize },
    NonMonotonicTimes,
    /// Normal equations are rank deficient (duplicate times).
    RankDeficient,
    InvalidOrder { order: usize },
    InvalidStep,
    /// Integration blew up to a non-finite state at this step.
    NonFinite { step: usize },
    GridMismatch,
}

impl fmt::Display for BallisticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BallisticsError::TooFewObservations { needed, got } => {
                write!(f, "need at least {needed} observations, got {got}")
            }
            BallisticsError::NonMonotonicTimes => {
                write!(f, "observation times must be strictly increasing")
            }
            BallisticsError::RankDeficient => write!(f, "rank-deficient polynomial design"),
            BallisticsError::InvalidOrder { order } => {
                write!(f, "polynomial order must be 2, 3 or 4, got {order}")
            }
            BallisticsError::InvalidStep => write!(f, "integration step must be positive"),
            BallisticsError::NonFinite { step } => {
                write!(f, "integration diverged to non-finite state at step {step}")
            }
            BallisticsError::GridMismatch => write!(f, "trajectory time grids do not match"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for BallisticsError {}

/// Acceleration of the ball: gravity minus air drag minus the Magnus term.
pub fn accel(state: &BallState, model: &FlightModel) -> Vec3 {
    let v = state.velocity;
    model.gravity - model.beta0 * v.norm() * v - model.beta1 * model.spin.cross(&v)
}

/// Classical 4th-order Runge-Kutta with fixed step `dt` from `s0.t` to
/// `s0.t + horizon` inclusive; the final partial step is shortened to land
/// exactly on the horizon. Returns all states including `s0`.
pub fn integrate(
    s0: &BallState,
    model: &FlightModel,
    dt: f64,
    horizon: f64,
) -> Result<Vec<BallState>, BallisticsError> {
    if dt.is_nan() || dt <= 0.0 || horizon.is_nan() || horizon < 0.0 {
        return Err(BallisticsError::InvalidStep);
    }
    let mut out = Vec::with_capacity((horizon / dt) as usize + 2);
    out.push(*s0);
    let mut cur = *s0;
    let mut elapsed = 0.0;
    let mut step = 0usize;
    while elapsed < horizon - 1e-12 {
        let h = if horizon - elapsed < dt {
            horizon - elapsed
        } else {
            dt
        };
        cur = rk4_step(&cur, model, h);
        step += 1;
        elapsed += h;
        // Land exactly on the grid to keep downstream time matching exact.
        cur.t = s0.t + elapsed;
        if !state_finite(&cur) {
            return Err(BallisticsError::NonFinite { step });
        }
        out.push(cur);
    }
    Ok(out)
}

fn state_finite(s: &BallState) -> bool {
    s.position.coords.iter().all(|c| c.is_finite()) && s.velocity.iter().all(|c| c.is_finite())
}

fn rk4_step(s: &BallState, model: &FlightModel, h: f64) -> BallState {
    let deriv = |pos_v: Vec3| {
        let st = BallState {
            t: s.t,
            position: s.position, // accel does not depend on position
            velocity: pos_v,
        };
        accel(&st, model)
    };
    let v1 = s.velocity;
    let a1 = deriv(v1);
    let v2 = s.velocity + 0.5 * h * a1;
    let a2 = deriv(v2);
    let v3 = s.velocity + 0.5 * h * a2;
    let a3 = deriv(v3);
    let v4 = s.velocity + h * a3;
    let a4 = deriv(v4);
    BallState {
        t: s.t + h,
        position: s.position + (h / 6.0) * (v1 + 2.0 * v2 + 2.0 * v3 + v4),
        velocity: s.velocity + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
    }
}

/// Least-squares polynomial fit of the given order in `(t - t_last)`,
/// independently per axis; returns the state at the last observation time
/// (polynomial value and first-derivative coefficient at zero).
pub fn fit_initial_state(
    obs: &[TimedObservation],
    order: usize,
) -> Result<BallState, BallisticsError> {
    if !(2..=4).contains(&order) {
        return Err(BallisticsError::InvalidOrder { order });
    }
    if obs.len() < order + 1 {
        return Err(BallisticsError::TooFewObservations {
            needed: order + 1,
            got: obs.len(),
        });
    }
    if obs.windows(2).any(|w| w[1].t <= w[0].t) {
        return Err(BallisticsError::NonMonotonicTimes);
    }
    let k = order + 1;
    let t_last = obs[obs.len() - 1].t;
    let mut ata = DMatrix::<f64>::zeros(k, k);
    let mut atb = DMatrix::<f64>::zeros(k, 3);
    let mut powers = Vec::with_capacity(k);
    for o in obs {
        let tau = o.t - t_last;
        powers.clear();
        let mut p = 1.0;
        for _ in 0..k {
            powers.push(p);
            p *= tau;
        }
        for i in 0..k {
            for j in 0..k {
                ata[(i, j)] += powers[i] * powers[j];
            }
            for axis in 0..3 {
                atb[(i, axis)] += powers[i] * o.position[axis];
            }
        }
    }
    let chol = ata.cholesky().ok_or(BallisticsError::RankDeficient)?;
    let coeffs = chol.solve(&atb);
    Ok(BallState {
        t: t_last,
        position: Point3::new(coeffs[(0, 0)], coeffs[(0, 1)], coeffs[(0, 2)]),
        velocity: Vec3::new(coeffs[(1, 0)], coeffs[(1, 1)], coeffs[(1, 2)]),
    })
}

/// Fits the initial state from observations and integrates the flight
/// model forward.
pub fn predict(
    obs: &[TimedObservation],
    order: usize,
    model: &FlightModel,
    horizon: f64,
    dt: f64,
) -> Result<Vec<BallState>, BallisticsError> {
    let s0 = fit_initial_state(obs, order)?;
    integrate(&s0, model, dt, horizon)
}

/// Mean Euclidean distance between two trajectories on the same time grid,
/// in centimeters.
pub fn prediction_error(pred: &[BallState], truth: &[BallState]) -> Result<f64, BallisticsError> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(BallisticsError::GridMismatch);
    }
    let mut total = 0.0;
    for (p, t) in pred.iter().zip(truth.iter()) {
        if libm::fabs(p.t - t.t) > 1e-9 {
            return Err(BallisticsError::GridMismatch);
        }
        total += (p.position - t.position).norm();
    }
    Ok(total / pred.len() as f64 * 100.0)
}
