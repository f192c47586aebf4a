//! Textual oracle descriptions, shared by the CLI and experiment configs.
//!
//! ```text
//! halfspace:m=<m>[,axis=<j>][,b=<offset>]     w = e_j (default j = 0, b = -0.5)
//! halfspace:w=<w0;w1;...>[,b=<offset>]
//! hypersphere:m=<m>,r=<radius>                 centered on the original
//! mlp:path=<weights file>[,target=<class>]     untargeted unless a target is given
//! external:<program> [args...]                 line-protocol subprocess
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use super::{
    load_mlp, DecisionOracle, ExternalOracle, Halfspace, Hypersphere, MlpModel, MlpOracle, Mode, OracleError,
    DEFAULT_TIMEOUT,
};

#[derive(Debug, Clone)]
pub enum OracleKind {
    Halfspace { normal: Vec<f64>, offset: f64 },
    Hypersphere { dim: usize, radius: f64 },
    Mlp { path: PathBuf, model: Arc<MlpModel> },
    External { command: String, timeout: Duration },
}

/// A parsed oracle description. Building it against an original point
/// yields a ready-to-query oracle.
#[derive(Debug, Clone)]
pub struct OracleSpec {
    pub kind: OracleKind,
    pub mode: Mode,
    text: String,
}

fn bad(text: &str, why: impl fmt::Display) -> OracleError {
    OracleError::Domain(format!("invalid oracle `{text}`: {why}"))
}

fn params<'a>(text: &str, body: &'a str, allowed: &[&str]) -> Result<Vec<(&'a str, &'a str)>, OracleError> {
    let mut out = Vec::new();
    for part in body.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| bad(text, format!("expected key=value, found `{part}`")))?;
        if !allowed.contains(&k) {
            return Err(bad(text, format!("unknown key `{k}` (expected one of {})", allowed.join(", "))));
        }
        if out.iter().any(|(seen, _)| *seen == k) {
            return Err(bad(text, format!("duplicate key `{k}`")));
        }
        out.push((k, v));
    }
    Ok(out)
}

fn get<'a>(ps: &[(&str, &'a str)], key: &str) -> Option<&'a str> {
    ps.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
}

fn num<T: FromStr>(text: &str, key: &str, v: &str) -> Result<T, OracleError> {
    v.parse().map_err(|_| bad(text, format!("`{key}` has invalid value `{v}`")))
}

impl OracleSpec {
    pub fn parse(text: &str) -> Result<Self, OracleError> {
        let (name, body) = text.split_once(':').unwrap_or((text, ""));
        let (kind, mode) = match name {
            "halfspace" => {
                let ps = params(text, body, &["m", "axis", "w", "b"])?;
                let offset = get(&ps, "b").map_or(Ok(-0.5), |v| num(text, "b", v))?;
                let normal = match (get(&ps, "w"), get(&ps, "m")) {
                    (Some(w), None) => {
                        if get(&ps, "axis").is_some() {
                            return Err(bad(text, "`axis` and `w` are exclusive"));
                        }
                        w.split(';').map(|t| num::<f64>(text, "w", t)).collect::<Result<Vec<_>, _>>()?
                    }
                    (None, Some(m)) => {
                        let m: usize = num(text, "m", m)?;
                        let axis: usize = get(&ps, "axis").map_or(Ok(0), |v| num(text, "axis", v))?;
                        if axis >= m {
                            return Err(bad(text, format!("axis {axis} out of range for m={m}")));
                        }
                        let mut w = vec![0.0; m];
                        w[axis] = 1.0;
                        w
                    }
                    _ => return Err(bad(text, "give exactly one of `m` or `w`")),
                };
                Halfspace::new(normal.clone(), offset).map_err(|e| bad(text, e))?;
                (OracleKind::Halfspace { normal, offset }, Mode::Untargeted)
            }
            "hypersphere" => {
                let ps = params(text, body, &["m", "r"])?;
                let dim: usize = num(text, "m", get(&ps, "m").ok_or_else(|| bad(text, "missing `m`"))?)?;
                let radius: f64 = num(text, "r", get(&ps, "r").ok_or_else(|| bad(text, "missing `r`"))?)?;
                if dim == 0 {
                    return Err(bad(text, "`m` must be positive"));
                }
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(bad(text, "`r` must be positive"));
                }
                (OracleKind::Hypersphere { dim, radius }, Mode::Untargeted)
            }
            "mlp" => {
                let ps = params(text, body, &["path", "target"])?;
                let path = PathBuf::from(get(&ps, "path").ok_or_else(|| bad(text, "missing `path`"))?);
                let model = Arc::new(load_mlp(&path)?);
                let mode = match get(&ps, "target") {
                    Some(t) => Mode::Targeted {
                        target: num(text, "target", t)?,
                    },
                    None => Mode::Untargeted,
                };
                (OracleKind::Mlp { path, model }, mode)
            }
            "external" => {
                if body.trim().is_empty() {
                    return Err(bad(text, "missing command"));
                }
                (
                    OracleKind::External {
                        command: body.trim().to_owned(),
                        timeout: DEFAULT_TIMEOUT,
                    },
                    Mode::Untargeted,
                )
            }
            other => return Err(bad(text, format!("unknown oracle kind `{other}`"))),
        };
        Ok(Self {
            kind,
            mode,
            text: text.to_owned(),
        })
    }

    /// Overrides the reply timeout of an external oracle; no-op otherwise.
    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        if let OracleKind::External { timeout: t, .. } = &mut self.kind {
            *t = timeout;
        }
        self
    }

    pub fn name(&self) -> &str {
        &self.text
    }

    /// Input dimension if it is known without a point.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            OracleKind::Halfspace { normal, .. } => Some(normal.len()),
            OracleKind::Hypersphere { dim, .. } => Some(*dim),
            OracleKind::Mlp { model, .. } => Some(model.input_dim()),
            OracleKind::External { .. } => None,
        }
    }

    /// A natural non-adversarial original for the analytic oracles: the
    /// box center for a sphere, the constant 0.25 image for a halfspace
    /// when that point is on the benign side.
    pub fn default_original(&self) -> Option<Vec<f64>> {
        match &self.kind {
            OracleKind::Hypersphere { dim, .. } => Some(vec![0.5; *dim]),
            OracleKind::Halfspace { normal, offset } => {
                let x = vec![0.25; normal.len()];
                let margin: f64 = normal.iter().map(|w| w * 0.25).sum::<f64>() + offset;
                (margin <= 0.0).then_some(x)
            }
            _ => None,
        }
    }

    pub fn build(&self, original: &[f64]) -> Result<Box<dyn DecisionOracle>, OracleError> {
        if let Some(d) = self.dim() {
            super::check_dim(d, original.len())?;
        }
        Ok(match &self.kind {
            OracleKind::Halfspace { normal, offset } => Box::new(Halfspace::new(normal.clone(), *offset)?),
            OracleKind::Hypersphere { radius, .. } => Box::new(Hypersphere::new(original.to_vec(), *radius)?),
            OracleKind::Mlp { model, .. } => Box::new(MlpOracle::new(Arc::clone(model), original, self.mode)?),
            OracleKind::External { command, timeout } => {
                Box::new(ExternalOracle::from_command_line(command, original.len(), *timeout)?)
            }
        })
    }
}

impl fmt::Display for OracleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl FromStr for OracleSpec {
    type Err = OracleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}
