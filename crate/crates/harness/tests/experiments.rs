//! Experiments under parameter changes.

use std::collections::BTreeMap;

use magrelax_harness::{run_experiment, ExperimentName, ExperimentSpec};

fn run(name: ExperimentName, overrides: &[(&str, f64)]) -> serde_json::Value {
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec {
        name,
        overrides: overrides.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>(),
        output_dir: dir.path().to_path_buf(),
    };
    run_experiment(&spec).unwrap().summary
}

#[test]
fn blowup_time_stable_under_refinement() {
    let coarse = run(ExperimentName::BlowupFig4, &[]);
    let fine = run(ExperimentName::BlowupFig4, &[("dx", 1.25e-3), ("dt", 1.5625e-7)]);
    let t = |s: &serde_json::Value| s["report"]["t_detect"].as_f64().unwrap();
    let shift = (t(&fine) - t(&coarse)).abs() / t(&coarse);
    assert!(shift < 0.15, "{} vs {}", t(&coarse), t(&fine));
}

/// Constant modulus: the relaxed state is the datum itself, so the
/// full system must follow the angle equation on the slow clock. The
/// remaining gap shrinks like ε over the squared modulus, hence the strong
/// field.
#[test]
fn constant_modulus_follows_angle_equation() {
    let s = run(ExperimentName::TwoTimescale, &[("contrast", 0.0), ("amplitude", 8.0), ("angle", 0.5)]);
    let dist = s["sup_distances"].as_array().unwrap();
    let scale = s["discretization_scales"].as_array().unwrap();
    for (d, c) in dist.iter().zip(scale) {
        let d = d[1].as_f64().unwrap();
        assert!(d <= c.as_f64().unwrap(), "{d:e} > {c}");
    }
}
