//! Scalar parameters and conversion formulas of the imaginary-geometry
//! bookkeeping: kappa <-> kappa', the coupling constants lambda, lambda',
//! chi, boundary-data arithmetic, flow-line angle weights, and the
//! classification of boundary interaction by cumulative weight.

use std::f64::consts::PI;
use thiserror::Error;

/// Angle whose flow line traces the left hull boundary of a counterflow line.
pub const THETA_LEFT: f64 = PI / 2.0;
/// Angle whose flow line traces the right hull boundary of a counterflow line.
pub const THETA_RIGHT: f64 = -PI / 2.0;

#[derive(Debug, Error, PartialEq)]
pub enum ConstantsError {
    #[error("kappa must lie strictly in (0, 4), got {0}")]
    InvalidKappa(f64),
    #[error("force-point index {index} out of range for side with {len} weights")]
    IndexError { index: usize, len: usize },
    #[error("force-point positions must be ordered away from the seed")]
    UnorderedPositions,
}

/// The full constant pack for a flow-line parameter kappa in (0, 4).
///
/// `kappa_prime = 16/kappa`, `lambda = pi/sqrt(kappa)`,
/// `lambda_prime = pi*sqrt(kappa)/4`, `chi = 2/sqrt(kappa) - sqrt(kappa)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SleConstants {
    pub kappa: f64,
    pub kappa_prime: f64,
    pub lambda: f64,
    pub lambda_prime: f64,
    pub chi: f64,
    pub theta_left: f64,
    pub theta_right: f64,
}

/// Derives every coupling constant from kappa.
pub fn derive_constants(kappa: f64) -> Result<SleConstants, ConstantsError> {
    if !kappa.is_finite() || kappa <= 0.0 || kappa >= 4.0 {
        return Err(ConstantsError::InvalidKappa(kappa));
    }
    let sqrt_kappa = kappa.sqrt();
    Ok(SleConstants {
        kappa,
        kappa_prime: 16.0 / kappa,
        lambda: PI / sqrt_kappa,
        lambda_prime: PI * sqrt_kappa / 4.0,
        chi: 2.0 / sqrt_kappa - sqrt_kappa / 2.0,
        theta_left: THETA_LEFT,
        theta_right: THETA_RIGHT,
    })
}

/// Force-point weights and positions for one driving configuration.
///
/// Left positions are non-increasing and <= 0 (0 stands for the seed's left
/// side 0-), right positions non-decreasing and >= 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightVector {
    pub rho_left: Vec<f64>,
    pub rho_right: Vec<f64>,
    pub x_left: Vec<f64>,
    pub x_right: Vec<f64>,
}

impl WeightVector {
    pub fn new(
        rho_left: Vec<f64>,
        rho_right: Vec<f64>,
        x_left: Vec<f64>,
        x_right: Vec<f64>,
    ) -> Result<Self, ConstantsError> {
        if rho_left.len() != x_left.len() || rho_right.len() != x_right.len() {
            return Err(ConstantsError::UnorderedPositions);
        }
        let left_ok =
            x_left.iter().all(|&x| x <= 0.0) && x_left.windows(2).all(|w| w[0] >= w[1]);
        let right_ok =
            x_right.iter().all(|&x| x >= 0.0) && x_right.windows(2).all(|w| w[0] <= w[1]);
        if !left_ok || !right_ok {
            return Err(ConstantsError::UnorderedPositions);
        }
        Ok(Self { rho_left, rho_right, x_left, x_right })
    }

    /// No force points at all (plain SLE_kappa driving).
    pub fn none() -> Self {
        Self::default()
    }

    /// One weight per side, both force points immediately at the seed (0-, 0+).
    pub fn pair_at_seed(rho_left: f64, rho_right: f64) -> Self {
        Self {
            rho_left: vec![rho_left],
            rho_right: vec![rho_right],
            x_left: vec![0.0],
            x_right: vec![0.0],
        }
    }

    /// A single left force point.
    pub fn single_left(rho: f64, x: f64) -> Result<Self, ConstantsError> {
        Self::new(vec![rho], vec![], vec![x], vec![])
    }

    /// A single right force point.
    pub fn single_right(rho: f64, x: f64) -> Result<Self, ConstantsError> {
        Self::new(vec![], vec![rho], vec![], vec![x])
    }

    /// True when every partial weight sum exceeds -2 on both sides, so the
    /// driving SDE has a solution for all time (no continuation threshold).
    pub fn solvable_for_all_time(&self) -> bool {
        let ok = |rhos: &[f64]| {
            let mut sum = 0.0;
            rhos.iter().all(|r| {
                sum += r;
                sum > -2.0
            })
        };
        ok(&self.rho_left) && ok(&self.rho_right)
    }

    /// Partial sum of the first `j` weights on a side.
    pub fn cumulative(&self, side: Side, j: usize) -> f64 {
        let rhos = match side {
            Side::Left => &self.rho_left,
            Side::Right => &self.rho_right,
        };
        rhos[..j].iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Boundary value of the coupled field on the j-th interval away from the
/// seed: -lambda*(1 + sum of the first j left weights) on the left side,
/// +lambda*(1 + sum of the first j right weights) on the right. `j = 0` is
/// the interval adjacent to the seed and gives -lambda / +lambda.
pub fn boundary_value(
    constants: &SleConstants,
    weights: &WeightVector,
    side: Side,
    j: usize,
) -> Result<f64, ConstantsError> {
    let len = match side {
        Side::Left => weights.rho_left.len(),
        Side::Right => weights.rho_right.len(),
    };
    if j > len {
        return Err(ConstantsError::IndexError { index: j, len });
    }
    let sum = weights.cumulative(side, j);
    Ok(match side {
        Side::Left => -constants.lambda * (1.0 + sum),
        Side::Right => constants.lambda * (1.0 + sum),
    })
}

/// Weight pair of the flow line with angle `theta` started on a boundary
/// segment carrying field value `a` to its left and `b` to its right:
/// `(-(a + theta*chi)/lambda - 1, (b + theta*chi)/lambda - 1)`.
pub fn flow_line_weights(constants: &SleConstants, a: f64, b: f64, theta: f64) -> (f64, f64) {
    let shift = theta * constants.chi;
    (
        -(a + shift) / constants.lambda - 1.0,
        (b + shift) / constants.lambda - 1.0,
    )
}

/// How a curve with parameter `kappa_process` interacts with a boundary
/// interval whose cumulative weight is `cumulative_rho`. Ordered so that
/// more boundary contact compares smaller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BoundaryContact {
    /// Cumulative weight <= -2: the continuation threshold is immediately
    /// reachable on this interval.
    Invalid,
    /// kappa > 4 and cumulative weight in (-2, kappa/2 - 4]: the curve
    /// almost surely visits every point of the interval.
    Fills,
    /// Cumulative weight in (max(-2, kappa/2 - 4), kappa/2 - 2): the curve
    /// hits the interval but does not fill it.
    HitsNotFills,
    /// Cumulative weight >= kappa/2 - 2: the curve almost surely avoids the
    /// interval.
    Avoids,
}

/// Classifies boundary interaction. Uses the process's own kappa, so
/// counterflow lines pass kappa' here.
pub fn classify_boundary_interval(kappa_process: f64, cumulative_rho: f64) -> BoundaryContact {
    debug_assert!(kappa_process > 0.0);
    let avoid_at = kappa_process / 2.0 - 2.0;
    let fill_at = kappa_process / 2.0 - 4.0;
    if cumulative_rho <= -2.0 {
        BoundaryContact::Invalid
    } else if cumulative_rho >= avoid_at {
        BoundaryContact::Avoids
    } else if kappa_process > 4.0 && cumulative_rho <= fill_at {
        BoundaryContact::Fills
    } else {
        BoundaryContact::HitsNotFills
    }
}
