//! Fully connected classifier used as a stand-in victim model.
//!
//! Weights file grammar (whitespace separated, blank lines and `#` comments
//! ignored):
//!
//! ```text
//! mlp k=<classes> layers=<L>
//! layer <rows> <cols> <relu|identity>     (repeated L times)
//! <rows lines of cols floats>
//! <one line of rows floats: the bias>
//! ```

use std::fmt::{self, Write as _};
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use super::{check_dim, Decision, DecisionOracle, Mode, OracleError};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct LoadError {
    pub line: usize,
    pub message: String,
}

fn load_err(line: usize, message: impl Into<String>) -> LoadError {
    LoadError {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        })
    }
}

/// Affine map `W x + b` followed by an activation. `W` is row-major,
/// `rows × cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>, activation: Activation) -> Result<Self, OracleError> {
        let rows = weights.len();
        let cols = weights.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || weights.iter().any(|r| r.len() != cols) {
            return Err(OracleError::Domain("layer weights must be a non-empty rectangular matrix".into()));
        }
        check_dim(rows, bias.len())?;
        Ok(Self {
            rows,
            cols,
            weights: weights.concat(),
            bias,
            activation,
        })
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.cols)
            .zip(&self.bias)
            .map(|(row, b)| {
                let z = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b;
                match self.activation {
                    Activation::Relu => z.max(0.0),
                    Activation::Identity => z,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Layer>,
}

impl MlpModel {
    pub fn new(layers: Vec<Layer>) -> Result<Self, OracleError> {
        if layers.is_empty() {
            return Err(OracleError::Domain("model needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[1].cols != pair[0].rows {
                return Err(OracleError::Domain(format!(
                    "layer shapes do not chain: {} outputs feed {} inputs",
                    pair[0].rows, pair[1].cols
                )));
            }
        }
        let model = Self { layers };
        if model.class_count() < 2 {
            return Err(OracleError::Domain("model needs at least two classes".into()));
        }
        Ok(model)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn class_count(&self) -> usize {
        self.layers.last().map_or(0, |l| l.rows)
    }

    /// Class scores F(x).
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, OracleError> {
        check_dim(self.input_dim(), x.len())?;
        let mut h = self.layers[0].apply(x);
        for layer in &self.layers[1..] {
            h = layer.apply(&h);
        }
        Ok(h)
    }

    /// Top-1 class; ties go to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize, OracleError> {
        let scores = self.forward(x)?;
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = c;
            }
        }
        Ok(best)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mlp k={} layers={}", self.class_count(), self.layers.len());
        for layer in &self.layers {
            let _ = writeln!(out, "layer {} {} {}", layer.rows, layer.cols, layer.activation);
            for row in layer.weights.chunks_exact(layer.cols) {
                out.push_str(&join(row));
                out.push('\n');
            }
            out.push_str(&join(&layer.bias));
            out.push('\n');
        }
        out
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ")
}

fn key_value(token: &str, key: &str, line: usize) -> Result<usize, LoadError> {
    token
        .strip_prefix(key)
        .and_then(|v| v.strip_prefix('='))
        .ok_or_else(|| load_err(line, format!("expected `{key}=<n>`, found `{token}`")))?
        .parse()
        .map_err(|_| load_err(line, format!("`{key}` must be a non-negative integer")))
}

fn floats(text: &str, expected: usize, line: usize, what: &str) -> Result<Vec<f64>, LoadError> {
    let values = text
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| load_err(line, format!("`{t}` is not a finite number")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != expected {
        return Err(load_err(
            line,
            format!("{what} has {} values, expected {expected}", values.len()),
        ));
    }
    Ok(values)
}

/// Parses the weights text format.
pub fn parse_mlp(text: &str) -> Result<MlpModel, LoadError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let eof = text.lines().count() + 1;
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| load_err(eof, format!("unexpected end of file, expected {what}")))
    };

    let (hl, header) = next("header")?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 3 || tokens[0] != "mlp" {
        return Err(load_err(hl, "header must read `mlp k=<classes> layers=<L>`"));
    }
    let classes = key_value(tokens[1], "k", hl)?;
    let layer_count = key_value(tokens[2], "layers", hl)?;
    if layer_count == 0 {
        return Err(load_err(hl, "layers must be at least 1"));
    }

    let mut layers = Vec::with_capacity(layer_count);
    for index in 0..layer_count {
        let (ll, spec) = next("layer header")?;
        let tokens: Vec<&str> = spec.split_whitespace().collect();
        if tokens.len() != 4 || tokens[0] != "layer" {
            return Err(load_err(ll, "layer header must read `layer <rows> <cols> <activation>`"));
        }
        let parse_dim = |t: &str| {
            t.parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| load_err(ll, format!("`{t}` is not a positive layer dimension")))
        };
        let rows = parse_dim(tokens[1])?;
        let cols = parse_dim(tokens[2])?;
        let activation = match tokens[3].to_ascii_lowercase().as_str() {
            "relu" => Activation::Relu,
            "identity" | "linear" => Activation::Identity,
            other => return Err(load_err(ll, format!("unknown activation `{other}`"))),
        };
        if let Some(prev) = layers.last() {
            let prev: &Layer = prev;
            if prev.rows != cols {
                return Err(load_err(
                    ll,
                    format!("layer {index} takes {cols} inputs but the previous layer emits {}", prev.rows),
                ));
            }
        }
        let mut weights = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let (wl, text) = next("weight row")?;
            weights.extend(floats(text, cols, wl, &format!("weight row {r} of layer {index}"))?);
        }
        let (bl, text) = next("bias line")?;
        let bias = floats(text, rows, bl, &format!("bias of layer {index}"))?;
        layers.push(Layer {
            rows,
            cols,
            weights,
            bias,
            activation,
        });
    }
    if let Some((extra, _)) = lines.next() {
        return Err(load_err(extra, "trailing content after the last layer"));
    }
    let out = layers.last().map_or(0, |l| l.rows);
    if out != classes {
        return Err(load_err(hl, format!("header declares k={classes} but the last layer has {out} outputs")));
    }
    MlpModel::new(layers).map_err(|e| load_err(hl, e.to_string()))
}

pub fn load_mlp(path: impl AsRef<Path>) -> Result<MlpModel, OracleError> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_mlp(&text)?)
}

pub fn save_mlp(model: &MlpModel, path: impl AsRef<Path>) -> Result<(), OracleError> {
    std::fs::write(path, model.to_text())?;
    Ok(())
}

/// Hard-label wrapper around an [`MlpModel`].
///
/// Untargeted: adversarial iff the top class differs from the original's.
/// Targeted: adversarial iff the top class is the target.
#[derive(Debug, Clone)]
pub struct MlpOracle {
    model: Arc<MlpModel>,
    original_class: usize,
    mode: Mode,
}

impl MlpOracle {
    /// Labels the original with the model's own prediction.
    pub fn new(model: Arc<MlpModel>, original: &[f64], mode: Mode) -> Result<Self, OracleError> {
        let class = model.predict(original)?;
        Self::with_class(model, class, mode)
    }

    pub fn with_class(model: Arc<MlpModel>, original_class: usize, mode: Mode) -> Result<Self, OracleError> {
        let k = model.class_count();
        if original_class >= k {
            return Err(OracleError::Domain(format!("class {original_class} out of range for k={k}")));
        }
        if let Mode::Targeted { target } = mode {
            if target >= k {
                return Err(OracleError::Domain(format!("target class {target} out of range for k={k}")));
            }
        }
        Ok(Self {
            model,
            original_class,
            mode,
        })
    }

    pub fn model(&self) -> &MlpModel {
        &self.model
    }

    pub fn original_class(&self) -> usize {
        self.original_class
    }
}

impl DecisionOracle for MlpOracle {
    fn dim(&self) -> usize {
        self.model.input_dim()
    }

    fn answer(&self, x: &[f64]) -> Result<Decision, OracleError> {
        let top = self.model.predict(x)?;
        Ok(Decision::from_adversarial(match self.mode {
            Mode::Untargeted => top != self.original_class,
            Mode::Targeted { target } => top == target,
        }))
    }
}
