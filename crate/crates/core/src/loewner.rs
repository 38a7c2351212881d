//! Forward Loewner flow and trace reconstruction by slit-map composition.
//!
//! The driving function is held piecewise constant over each step, which
//! makes every elementary map an exact vertical-slit map
//! `u -> w + sqrt((u - w)^2 + 4 dt)` with the square root taken in the
//! closed upper half-plane. Forward composition gives g_t; composing the
//! inverse maps in reverse order evaluates the trace, at O(n) cost per
//! point and O(n^2) for a full trace.

use crate::constants::WeightVector;
use crate::driving::DrivingPath;
use num_complex::Complex64;
use thiserror::Error;

/// Height above the real axis at which trace points are evaluated.
pub const EPS_LIFT: f64 = 1e-6;
/// Gap threshold below which a tracked point counts as swallowed.
pub const EPS_SWALLOW: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum LoewnerError {
    #[error("requested time {t} beyond driving horizon {horizon}")]
    OutOfRange { t: f64, horizon: f64 },
    #[error("point must lie in the closed upper half-plane")]
    LowerHalfPlane,
}

/// Square root with non-negative imaginary part.
#[inline]
fn upper_sqrt(v: Complex64) -> Complex64 {
    let s = v.sqrt();
    if s.im < 0.0 {
        -s
    } else {
        s
    }
}

/// One forward slit step for an interior point. The branch keeps the image
/// in the closed upper half-plane and preserves the side of points near the
/// real axis.
#[inline]
fn forward_step(u: Complex64, w: f64, dt4: f64) -> Complex64 {
    let d = u - w;
    if d.im == 0.0 {
        // boundary points move by the signed real slit map
        let shifted = d.re.signum() * (d.re * d.re + dt4).sqrt();
        return Complex64::new(w + shifted, 0.0);
    }
    w + upper_sqrt(d * d + dt4)
}

/// One inverse slit step (trace direction).
#[inline]
fn inverse_step(u: Complex64, w: f64, dt4: f64) -> Complex64 {
    let d = u - w;
    w + upper_sqrt(d * d - dt4)
}

/// Outcome of a forward-map evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapOutcome {
    Value(Complex64),
    Swallowed,
}

/// Evaluates g_t(z) by composing the forward slit maps, reporting
/// `Swallowed` when the image collapses onto the driving value. Boundary
/// points (Im z = 0) are legal and evolve along the real axis.
///
/// Swallowing is detected when the gap to the driving value falls below
/// `EPS_SWALLOW` mid-flow, or below a dt-scaled resolution threshold at the
/// final time (grid-aligned collisions land within rounding of zero).
pub fn forward_map(driving: &DrivingPath, z: Complex64, t: f64) -> Result<MapOutcome, LoewnerError> {
    if z.im < 0.0 {
        return Err(LoewnerError::LowerHalfPlane);
    }
    let steps = driving.steps();
    let n = (t / driving.dt).round() as usize;
    if t > driving.horizon + driving.dt * 0.5 || n > steps {
        return Err(LoewnerError::OutOfRange { t, horizon: driving.horizon });
    }
    let dt4 = 4.0 * driving.dt;
    let mut u = z;
    if z.im == 0.0 {
        // real dynamics with jump-over detection
        let side = (z.re - driving.w[0]).signum();
        for k in 0..n {
            let wk = driving.w[k];
            if (u.re - wk).signum() != side && (u.re - wk) != 0.0 {
                return Ok(MapOutcome::Swallowed);
            }
            u = forward_step(u, wk, dt4);
        }
        if (u.re - driving.w[n]).signum() != side {
            return Ok(MapOutcome::Swallowed);
        }
        return Ok(MapOutcome::Value(u));
    }
    for k in 0..n {
        let wk = driving.w[k];
        if (u - wk).norm() < EPS_SWALLOW {
            return Ok(MapOutcome::Swallowed);
        }
        u = forward_step(u, wk, dt4);
    }
    let final_gap = (u - driving.w[n]).norm();
    if final_gap < swallow_resolution(driving.dt) {
        return Ok(MapOutcome::Swallowed);
    }
    Ok(MapOutcome::Value(u))
}

/// Numerical resolution of swallow detection at the query time: roundoff in
/// the iterated slit maps keeps an exactly-swallowed image at a small but
/// nonzero gap, well below the slit height 2*sqrt(dt).
#[inline]
pub fn swallow_resolution(dt: f64) -> f64 {
    (1e-3 * dt.sqrt()).max(EPS_SWALLOW)
}

/// Discretized trace with capacity-time stamps.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePath {
    pub points: Vec<Complex64>,
    pub times: Vec<f64>,
    pub dt: f64,
    pub kappa_process: f64,
    pub weights: WeightVector,
    pub seed: u64,
}

impl TracePath {
    /// Builds a synthetic trace from raw points (fixtures and tests).
    pub fn synthetic(points: Vec<Complex64>, dt: f64) -> Self {
        let times = (0..points.len()).map(|k| k as f64 * dt).collect();
        Self { points, times, dt, kappa_process: 0.0, weights: WeightVector::none(), seed: 0 }
    }

    pub fn start(&self) -> Complex64 {
        self.points[0]
    }

    pub fn end(&self) -> Complex64 {
        *self.points.last().unwrap()
    }
}

/// Evaluates the trace point at step `k` for the given driving values:
/// gamma(t_k) = S_0^{-1} o ... o S_{k-1}^{-1} (W_{t_k} + i*eps_lift).
pub fn trace_point(w: &[f64], dt: f64, k: usize) -> Complex64 {
    let dt4 = 4.0 * dt;
    let mut u = Complex64::new(w[k], EPS_LIFT);
    for j in (0..k).rev() {
        u = inverse_step(u, w[j], dt4);
    }
    if u.im < 0.0 {
        u.im = 0.0;
    }
    u
}

/// Full trace at every step; O(n^2) in the number of steps.
pub fn compute_trace(driving: &DrivingPath) -> TracePath {
    let n = driving.steps();
    let points: Vec<Complex64> = (0..=n).map(|k| trace_point(&driving.w, driving.dt, k)).collect();
    let times = (0..=n).map(|k| k as f64 * driving.dt).collect();
    TracePath {
        points,
        times,
        dt: driving.dt,
        kappa_process: driving.kappa_process,
        weights: driving.weights.clone(),
        seed: driving.seed,
    }
}

/// Trace evaluated only at the given (sorted or unsorted) step indices.
pub fn trace_points_at(driving: &DrivingPath, indices: &[usize]) -> TracePath {
    let points = indices.iter().map(|&k| trace_point(&driving.w, driving.dt, k)).collect();
    let times = indices.iter().map(|&k| k as f64 * driving.dt).collect();
    TracePath {
        points,
        times,
        dt: driving.dt,
        kappa_process: driving.kappa_process,
        weights: driving.weights.clone(),
        seed: driving.seed,
    }
}

/// Step indices spaced uniformly in sqrt(t), which roughly equalizes the
/// spatial increments of the growing curve. Always includes 0 and `last`.
pub fn sqrt_spaced_indices(last: usize, count: usize) -> Vec<usize> {
    if count == 0 || last == 0 {
        return vec![0, last.max(1)];
    }
    let mut out = Vec::with_capacity(count + 1);
    let mut prev = usize::MAX;
    for j in 0..=count {
        let f = j as f64 / count as f64;
        let k = ((f * f) * last as f64).round() as usize;
        let k = k.min(last);
        if k != prev {
            out.push(k);
            prev = k;
        }
    }
    if *out.last().unwrap() != last {
        out.push(last);
    }
    out
}

/// Fate of a point tracked through the flow until it is swallowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrackOutcome {
    /// Still unswallowed at the last step; carries the current image and the
    /// sign of Re(image) - W at that time.
    Alive { image: Complex64, side: f64 },
    /// Swallowed at step `step` (capacity time step*dt); `side` is the sign
    /// of Re(image) - W when the pinch closed: -1 left of the curve, +1
    /// right of the curve.
    Swallowed { step: usize, side: f64 },
}

/// Tracks an interior point under the forward flow, stopping at swallowing.
/// Swallowing here means the image is pinched against the driving value
/// (gap or height below `eps`), which freezes which side of the curve the
/// point ends on.
pub fn track_point(w: &[f64], dt: f64, z: Complex64, eps: f64) -> TrackOutcome {
    let dt4 = 4.0 * dt;
    let n = w.len() - 1;
    let mut u = z;
    for k in 0..n {
        let wk = w[k];
        let gap = u - wk;
        if gap.norm() < eps || u.im < eps {
            return TrackOutcome::Swallowed { step: k, side: sign_or(gap.re, 1.0) };
        }
        u = forward_step(u, wk, dt4);
    }
    let side = sign_or(u.re - w[n], 1.0);
    if u.im < eps || (u - w[n]).norm() < eps {
        return TrackOutcome::Swallowed { step: n, side };
    }
    TrackOutcome::Alive { image: u, side }
}

/// Tracks a boundary point x != 0 under the real Loewner flow; returns the
/// step at which the driving jumped over it, if any.
pub fn track_real(w: &[f64], dt: f64, x: f64) -> Option<usize> {
    let dt4 = 4.0 * dt;
    let n = w.len() - 1;
    let side = (x - w[0]).signum();
    let mut u = x;
    for k in 0..n {
        if (u - w[k]).signum() != side {
            return Some(k);
        }
        u = w[k] + (u - w[k]).signum() * ((u - w[k]) * (u - w[k]) + dt4).sqrt();
    }
    if (u - w[n]).signum() != side {
        return Some(n);
    }
    None
}

#[inline]
fn sign_or(x: f64, default: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        default
    }
}
