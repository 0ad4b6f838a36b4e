//! Design-depth calculator: circuit depth after which the moment operator is
//! within epsilon of the Haar projector.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ConvergenceBound {
    /// ceil(gap^{-1} (ln(1/eps) + n t ln 2)): the headline bound, from
    /// ||M^k - P|| <= 2^{nt} lambda1^k with lambda1 <= exp(-gap).
    pub headline: u64,
    /// ceil((ln(1/eps) + n t ln 2) / (-ln(1 - gap))): the same argument with
    /// the exact logarithm, always at most the headline value.
    pub sharper: u64,
    /// ln(1/eps) contribution to the numerator.
    pub epsilon_term: f64,
    /// n t ln 2 contribution to the numerator.
    pub dimension_term: f64,
}

/// Depth bound for reaching an epsilon-approximate t-design on n qubits with
/// spectral gap `gap`.
pub fn convergence_time_bound(gap: f64, n: usize, t: usize, epsilon: f64) -> Result<ConvergenceBound> {
    if !(gap > 0.0 && gap <= 1.0) {
        return Err(Error::InvalidInput(format!("gap {gap} outside (0, 1]")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon {epsilon} outside (0, 1)")));
    }
    if n == 0 || t == 0 {
        return Err(Error::InvalidInput("need n >= 1, t >= 1".into()));
    }
    let epsilon_term = (1.0 / epsilon).ln();
    let dimension_term = (n * t) as f64 * std::f64::consts::LN_2;
    let numerator = epsilon_term + dimension_term;
    let headline = (numerator / gap).ceil() as u64;
    let sharper = if gap >= 1.0 {
        // lambda1 = 0: a single averaging step already projects onto V_t
        1
    } else {
        (numerator / -(1.0 - gap).ln()).ceil() as u64
    };
    Ok(ConvergenceBound { headline, sharper, epsilon_term, dimension_term })
}
