//! Oracles with closed-form boundaries, used as ground truth.

use super::{check_dim, Decision, DecisionOracle, OracleError};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Adversarial iff `w·x + b > 0`. Points on the plane are benign.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    normal: Vec<f64>,
    offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self, OracleError> {
        if normal.is_empty() || normal.iter().all(|&v| v == 0.0) || normal.iter().any(|v| !v.is_finite()) {
            return Err(OracleError::Domain("halfspace normal must be finite and nonzero".into()));
        }
        if !offset.is_finite() {
            return Err(OracleError::Domain("halfspace offset must be finite".into()));
        }
        Ok(Self { normal, offset })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// w·x + b.
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.offset
    }
}

impl DecisionOracle for Halfspace {
    fn dim(&self) -> usize {
        self.normal.len()
    }

    fn answer(&self, x: &[f64]) -> Result<Decision, OracleError> {
        check_dim(self.dim(), x.len())?;
        Ok(Decision::from_adversarial(self.margin(x) > 0.0))
    }

    fn true_gradient(&self, x: &[f64]) -> Result<Vec<f64>, OracleError> {
        check_dim(self.dim(), x.len())?;
        let n = norm(&self.normal);
        Ok(self.normal.iter().map(|w| w / n).collect())
    }
}

/// Adversarial iff `‖x − center‖₂ > radius`; the center is the original.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypersphere {
    center: Vec<f64>,
    radius: f64,
}

impl Hypersphere {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self, OracleError> {
        if center.is_empty() {
            return Err(OracleError::Domain("hypersphere center must be non-empty".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(OracleError::Domain(format!("hypersphere radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn distance(&self, x: &[f64]) -> f64 {
        self.center
            .iter()
            .zip(x)
            .map(|(c, v)| (v - c) * (v - c))
            .sum::<f64>()
            .sqrt()
    }
}

impl DecisionOracle for Hypersphere {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn answer(&self, x: &[f64]) -> Result<Decision, OracleError> {
        check_dim(self.dim(), x.len())?;
        Ok(Decision::from_adversarial(self.distance(x) > self.radius))
    }

    fn true_gradient(&self, x: &[f64]) -> Result<Vec<f64>, OracleError> {
        check_dim(self.dim(), x.len())?;
        let d = self.distance(x);
        if d == 0.0 {
            return Err(OracleError::Domain("gradient is undefined at the hypersphere center".into()));
        }
        Ok(x.iter().zip(&self.center).map(|(v, c)| (v - c) / d).collect())
    }
}
