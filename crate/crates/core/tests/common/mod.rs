#![allow(dead_code)]

use lhs_attack::attack::{AttackTrace, Status, TraceRow};
use lhs_attack::sampler::SamplerKind;

/// erf via the positive-term series
/// erf(x) = 2/√π · e^(−x²) · Σ 2ⁿ x^(2n+1) / (1·3·…·(2n+1)),
/// independent of the library's erfc.
pub fn erf_series(x: f64) -> f64 {
    let sign = x.signum();
    let x = x.abs();
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term > sum * 1e-17 {
        n += 1.0;
        term *= 2.0 * x * x / (2.0 * n + 1.0);
        sum += term;
    }
    sign * 2.0 / std::f64::consts::PI.sqrt() * (-x * x).exp() * sum
}

pub fn phi(z: f64) -> f64 {
    0.5 * (1.0 + erf_series(z / std::f64::consts::SQRT_2))
}

/// Φ⁻¹ by bisection on the series CDF.
pub fn quantile_bisection(p: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0f64, 10.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (norm(a) * norm(b))
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Reads a trace CSV back. Sampler and seed are not part of the file and
/// are passed through.
pub fn parse_trace_csv(text: &str, sampler: SamplerKind, seed: u64) -> AttackTrace {
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,M_t,delta_t,epsilon_t,queries,distortion,agree_count,step_retries,binsearch_steps"
    );
    let mut trace = AttackTrace::new(sampler, seed);
    for line in lines {
        if let Some(status) = line.strip_prefix("# status=") {
            trace.status = Status::parse(status).expect("known status");
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 9, "{line}");
        trace.rows.push(TraceRow {
            t: f[0].parse().unwrap(),
            samples: f[1].parse().unwrap(),
            delta: f[2].parse().unwrap(),
            epsilon: f[3].parse().unwrap(),
            queries: f[4].parse().unwrap(),
            distortion: f[5].parse().unwrap(),
            agree_count: f[6].parse().unwrap(),
            step_retries: f[7].parse().unwrap(),
            binsearch_steps: f[8].parse().unwrap(),
        });
    }
    trace
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_lhs-attack")
}
