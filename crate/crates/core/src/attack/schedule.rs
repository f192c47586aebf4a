//! Per-iteration hyperparameters and small geometric helpers.

use super::AttackError;

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Coordinatewise clamp into `[lo, hi]`.
pub fn clip(x: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    x.iter().map(|v| v.clamp(lo, hi)).collect()
}

/// ⌊m0 · (t+1)^(1/5)⌋, evaluated exactly in integers when it fits.
pub fn schedule_m(t: usize, m0: usize) -> usize {
    let estimate = (m0 as f64 * ((t + 1) as f64).powf(0.2)).floor() as u128;
    let Some(target) = (m0 as u128)
        .checked_pow(5)
        .and_then(|v| v.checked_mul(t as u128 + 1))
    else {
        return estimate as usize;
    };
    let fits = |k: u128| k.checked_pow(5).is_some_and(|p| p <= target);
    let mut k = estimate;
    while k > 0 && !fits(k) {
        k -= 1;
    }
    while fits(k + 1) {
        k += 1;
    }
    k as usize
}

fn checked_distance(x_prev: &[f64], original: &[f64]) -> Result<f64, AttackError> {
    let d = distance(x_prev, original);
    if d > 0.0 {
        Ok(d)
    } else {
        Err(AttackError::Domain("current point coincides with the original".into()))
    }
}

/// Probe radius ‖x_prev − x*‖₂ / m.
pub fn schedule_delta(x_prev: &[f64], original: &[f64], m: usize) -> Result<f64, AttackError> {
    Ok(checked_distance(x_prev, original)? / m as f64)
}

/// Step length ‖x_prev − x*‖₂ / √t.
pub fn schedule_epsilon(t: usize, x_prev: &[f64], original: &[f64]) -> Result<f64, AttackError> {
    if t == 0 {
        return Err(AttackError::Domain("epsilon schedule starts at t = 1".into()));
    }
    Ok(checked_distance(x_prev, original)? / (t as f64).sqrt())
}

/// Default bisection threshold m^(-3/2), capped at 1/2 so it stays a
/// proper fraction for m = 1.
pub fn default_theta(m: usize) -> f64 {
    (m as f64).powf(-1.5).min(0.5)
}

/// Number of halvings until the α-interval is no wider than `theta`,
/// i.e. ⌈log₂(1/θ)⌉.
pub fn bisection_steps(theta: f64) -> u32 {
    let mut width = 1.0f64;
    let mut steps = 0;
    while width > theta {
        width *= 0.5;
        steps += 1;
    }
    steps
}
