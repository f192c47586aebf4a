mod common;

use std::sync::Arc;
use std::time::Duration;

use common::{bin, fixture};
use lhs_attack::harness::read_points;
use lhs_attack::oracle::{
    load_mlp, save_mlp, Activation, Decision, DecisionOracle, ExternalOracle, Halfspace, Layer, MlpModel, MlpOracle,
    Mode, OracleError, OracleSpec,
};
use lhs_attack::{decide, Phase, QueryLedger};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.random::<f64>()).collect()
}

fn random_mlp(rng: &mut ChaCha8Rng, sizes: &[usize]) -> MlpModel {
    let mut layers = Vec::new();
    for (i, pair) in sizes.windows(2).enumerate() {
        let w = (0..pair[1])
            .map(|_| (0..pair[0]).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let b = (0..pair[1]).map(|_| rng.random_range(-0.5..0.5)).collect();
        let act = if i + 2 == sizes.len() { Activation::Identity } else { Activation::Relu };
        layers.push(Layer::new(w, b, act).unwrap());
    }
    MlpModel::new(layers).unwrap()
}

#[test]
fn halfspace_flips_across_the_plane() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let w: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let o = Halfspace::new(w.clone(), rng.random_range(-0.5..0.5)).unwrap();
        let mut x = random_point(&mut rng, 10);
        // Move x onto the plane along the unit normal.
        let n = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let shift = o.margin(&x) / n;
        x.iter_mut().zip(&w).for_each(|(xi, wi)| *xi -= shift * wi / n);
        let probe = |s: f64| -> Vec<f64> { x.iter().zip(&w).map(|(xi, wi)| xi + s * wi / n).collect() };
        assert_eq!(o.answer(&probe(1e-6)).unwrap(), Decision::Adversarial);
        assert_eq!(o.answer(&probe(-1e-6)).unwrap(), Decision::Benign);
    }
}

#[test]
fn ledger_counts_only_valid_queries() {
    let o = Halfspace::new(vec![1.0, 0.0], 0.0).unwrap();
    let mut ledger = QueryLedger::new();
    decide(&o, &[0.5, 0.5], &mut ledger, Phase::Init).unwrap();
    decide(&o, &[0.5, 0.5], &mut ledger, Phase::Step).unwrap();
    assert!(matches!(
        decide(&o, &[0.5], &mut ledger, Phase::Step),
        Err(OracleError::DimensionMismatch { .. })
    ));
    assert_eq!(ledger.total(), 2);
    assert_eq!(ledger.phase(Phase::Init), 1);
    assert_eq!(ledger.phase(Phase::Step), 1);
}

#[test]
fn mlp_save_load_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let model = random_mlp(&mut rng, &[6, 16, 16, 3]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.txt");
    save_mlp(&model, &path).unwrap();
    let loaded = load_mlp(&path).unwrap();
    for _ in 0..100 {
        let x = random_point(&mut rng, 6);
        assert_eq!(model.forward(&x).unwrap(), loaded.forward(&x).unwrap());
        assert_eq!(model.predict(&x).unwrap(), loaded.predict(&x).unwrap());
    }
}

#[test]
fn two_class_targeted_equals_untargeted() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let model = Arc::new(random_mlp(&mut rng, &[5, 8, 2]));
    for class in 0..2 {
        let untargeted = MlpOracle::with_class(model.clone(), class, Mode::Untargeted).unwrap();
        let targeted = MlpOracle::with_class(model.clone(), class, Mode::Targeted { target: 1 - class }).unwrap();
        for _ in 0..200 {
            let x = random_point(&mut rng, 5);
            assert_eq!(untargeted.answer(&x).unwrap(), targeted.answer(&x).unwrap());
        }
    }
}

#[test]
fn digits_fixture_classifies_its_originals() {
    let model = load_mlp(fixture("digits01_mlp.txt")).unwrap();
    assert_eq!(model.input_dim(), 64);
    assert_eq!(model.class_count(), 2);
    assert_eq!(model.layers().len(), 3);
    let points = read_points(fixture("digits01_points.txt")).unwrap();
    assert_eq!(points.len(), 20);
    for (i, p) in points.iter().enumerate() {
        assert_eq!(model.predict(p).unwrap(), usize::from(i >= 10), "point {i}");
    }
}

#[test]
fn truncated_model_file_reports_line() {
    let text = std::fs::read_to_string(fixture("digits01_mlp.txt")).unwrap();
    let cut: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
    let err = lhs_attack::oracle::parse_mlp(&cut).unwrap_err();
    assert_eq!(err.line, 6, "{err}");
}

#[test]
fn served_halfspace_matches_in_process() {
    let spec = "halfspace:w=0.3;-0.2;0.5;0.1,b=-0.2";
    let local = OracleSpec::parse(spec).unwrap().build(&[0.0; 4]).unwrap();
    let remote = ExternalOracle::spawn(
        bin(),
        &["oracle-serve".to_owned(), spec.to_owned()],
        4,
        Duration::from_secs(10),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..1000 {
        let x = random_point(&mut rng, 4);
        assert_eq!(local.answer(&x).unwrap(), remote.answer(&x).unwrap());
    }
}

#[test]
fn external_spec_dimension_mismatch_is_refused() {
    let spec = format!("{} oracle-serve halfspace:m=3", bin());
    let result = ExternalOracle::from_command_line(&spec, 4, Duration::from_secs(10));
    assert!(result.is_err());
}
