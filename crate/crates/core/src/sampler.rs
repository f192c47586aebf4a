//! Standard-normal noise batches drawn by Latin Hypercube Sampling or by
//! simple random sampling, plus the diagnostics used to compare the two.
//!
//! Both samplers push uniforms through the same [`inverse_normal_cdf`], so
//! any difference between them comes from stratification alone.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SeedStream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("probability {0} is outside the open interval (0, 1)")]
    InvalidProbability(f64),
    #[error("sample shape must be non-empty, got {count}x{dim}")]
    EmptyShape { count: usize, dim: usize },
    #[error("row {row} of the sample batch is the zero vector")]
    DegenerateSample { row: usize },
    #[error("discrepancy needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Lhs,
    Srs,
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplerKind::Lhs => "lhs",
            SamplerKind::Srs => "srs",
        })
    }
}

impl FromStr for SamplerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lhs" => Ok(SamplerKind::Lhs),
            "srs" => Ok(SamplerKind::Srs),
            other => Err(format!("unknown sampler `{other}` (expected lhs or srs)")),
        }
    }
}

/// `count` noise vectors of dimension `dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    values: Vec<f64>,
    count: usize,
    dim: usize,
    kind: SamplerKind,
    seed: u64,
    strata: Option<Vec<u32>>,
}

impl SampleBatch {
    /// Builds a batch from explicit rows. Used for hand-constructed probes.
    pub fn from_rows(rows: &[Vec<f64>], kind: SamplerKind, seed: u64) -> Result<Self, SamplerError> {
        let count = rows.len();
        let dim = rows.first().map_or(0, Vec::len);
        if count == 0 || dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(SamplerError::EmptyShape { count, dim });
        }
        Ok(Self {
            values: rows.concat(),
            count,
            dim,
            kind,
            seed,
            strata: None,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dim + j]
    }

    /// Stratum of cell (i, j); `None` for SRS batches.
    pub fn stratum(&self, i: usize, j: usize) -> Option<u32> {
        self.strata.as_ref().map(|s| s[i * self.dim + j])
    }

    /// Values of dimension `j` across all samples.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i, j)).collect()
    }
}

/// Standard normal CDF, Φ(z).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Φ⁻¹(p): Acklam's rational approximation followed by one Halley step
/// against the erfc-based CDF.
pub fn inverse_normal_cdf(p: f64) -> Result<f64, SamplerError> {
    if p > 0.0 && p < 1.0 {
        Ok(quantile(p))
    } else {
        Err(SamplerError::InvalidProbability(p))
    }
}

const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const P_LOW: f64 = 0.024_25;

fn tail(q: f64) -> f64 {
    (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
        / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
}

fn quantile(p: f64) -> f64 {
    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - P_LOW {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    // Halley refinement; the rational form alone is good to ~1e-9 relative.
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

fn check_shape(count: usize, dim: usize) -> Result<(), SamplerError> {
    if count == 0 || dim == 0 {
        Err(SamplerError::EmptyShape { count, dim })
    } else {
        Ok(())
    }
}

/// Latin Hypercube sample of `count` standard-normal vectors in `dim`
/// dimensions. Dimension `j` draws its permutation and within-stratum
/// offsets from `stream.child(j)`.
pub fn lhs_normal(count: usize, dim: usize, stream: SeedStream) -> Result<SampleBatch, SamplerError> {
    check_shape(count, dim)?;
    let n = count as f64;
    // Quantile images of the stratum edges; the extremes are ±∞.
    let edges: Vec<f64> = (0..=count)
        .map(|k| match k {
            0 => f64::NEG_INFINITY,
            k if k == count => f64::INFINITY,
            k => quantile(k as f64 / n),
        })
        .collect();

    let mut values = vec![0.0; count * dim];
    let mut strata = vec![0u32; count * dim];
    let mut perm: Vec<u32> = (0..count as u32).collect();
    for j in 0..dim {
        let mut rng = stream.child(j as u64).rng();
        perm.shuffle(&mut rng);
        for (i, &k) in perm.iter().enumerate() {
            let (lo, hi) = (edges[k as usize], edges[k as usize + 1]);
            let z = loop {
                let u: f64 = rng.sample(Open01);
                let p = (k as f64 + u) / n;
                if p > 0.0 && p < 1.0 {
                    let z = quantile(p);
                    // Rounding can land exactly on an edge; redraw.
                    if z > lo && z < hi {
                        break z;
                    }
                }
            };
            values[i * dim + j] = z;
            strata[i * dim + j] = k;
        }
    }
    Ok(SampleBatch {
        values,
        count,
        dim,
        kind: SamplerKind::Lhs,
        seed: stream.key(),
        strata: Some(strata),
    })
}

/// `count` i.i.d. standard-normal vectors, generated column by column from
/// the same substreams as [`lhs_normal`].
pub fn srs_normal(count: usize, dim: usize, stream: SeedStream) -> Result<SampleBatch, SamplerError> {
    check_shape(count, dim)?;
    let mut values = vec![0.0; count * dim];
    for j in 0..dim {
        let mut rng = stream.child(j as u64).rng();
        for i in 0..count {
            let u: f64 = rng.sample(Open01);
            values[i * dim + j] = quantile(u);
        }
    }
    Ok(SampleBatch {
        values,
        count,
        dim,
        kind: SamplerKind::Srs,
        seed: stream.key(),
        strata: None,
    })
}

pub fn draw(kind: SamplerKind, count: usize, dim: usize, stream: SeedStream) -> Result<SampleBatch, SamplerError> {
    match kind {
        SamplerKind::Lhs => lhs_normal(count, dim, stream),
        SamplerKind::Srs => srs_normal(count, dim, stream),
    }
}

/// Scales every row to unit Euclidean norm.
pub fn normalize_rows(mut batch: SampleBatch) -> Result<SampleBatch, SamplerError> {
    let dim = batch.dim;
    for (i, row) in batch.values.chunks_exact_mut(dim).enumerate() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(SamplerError::DegenerateSample { row: i });
        }
        row.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(batch)
}

/// Largest Kolmogorov–Smirnov distance between any dimension's empirical
/// marginal and Φ.
pub fn batch_discrepancy(batch: &SampleBatch) -> Result<f64, SamplerError> {
    if batch.count < 2 {
        return Err(SamplerError::TooFewSamples(batch.count));
    }
    let n = batch.count as f64;
    let mut worst = 0.0f64;
    for j in 0..batch.dim {
        let mut col = batch.column(j);
        col.sort_by(f64::total_cmp);
        for (i, &v) in col.iter().enumerate() {
            let f = normal_cdf(v);
            let d = ((i + 1) as f64 / n - f).max(f - i as f64 / n);
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

/// Mean over dimensions of |per-coordinate sample mean|.
pub fn mean_abs_coordinate_mean(batch: &SampleBatch) -> f64 {
    let n = batch.count as f64;
    let total: f64 = (0..batch.dim)
        .map(|j| (0..batch.count).map(|i| batch.value(i, j)).sum::<f64>().abs() / n)
        .sum();
    total / batch.dim as f64
}
