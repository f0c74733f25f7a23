use liushrink_web::{chi_square_json, risk_curves_json, shrinkage_demo_json};
use serde_json::Value;

#[test]
fn risk_curves_have_one_series_per_estimator() {
    let v: Value = serde_json::from_str(&risk_curves_json(3, 5, 0.3, 1.0, 0.05, 20.0, 11, false).unwrap()).unwrap();
    assert_eq!(v["noncentrality"].as_array().unwrap().len(), 11);
    let series = v["series"].as_array().unwrap();
    assert_eq!(series.len(), 5);
    // Full-model risk does not move with the noncentrality at d = 1.
    let lfm: Vec<f64> = series[0]["risk"].as_array().unwrap().iter().map(|r| r.as_f64().unwrap()).collect();
    assert!(lfm.iter().all(|r| (r - lfm[0]).abs() < 1e-12));
}

#[test]
fn stein_series_dropped_for_small_nuisance_block() {
    let v: Value = serde_json::from_str(&risk_curves_json(3, 2, 0.3, 1.0, 0.05, 20.0, 3, true).unwrap()).unwrap();
    assert_eq!(v["series"].as_array().unwrap().len(), 3);
}

#[test]
fn chi_square_curve_is_a_distribution() {
    let v: Value = serde_json::from_str(&chi_square_json(4, 2.0, 60.0, 301, 0.05).unwrap()).unwrap();
    let cdf = v["cdf"].as_array().unwrap();
    assert_eq!(cdf[0].as_f64().unwrap(), 0.0);
    assert!(cdf.last().unwrap().as_f64().unwrap() > 0.999_999);
    assert!((v["critical"].as_f64().unwrap() - 9.487_729).abs() < 1e-5);
    assert!(chi_square_json(4, 2.0, 0.0, 10, 0.05).is_err());
}

#[test]
fn demo_is_seeded() {
    let a = shrinkage_demo_json(60, 3, 6, 0.5, 1.0, 9).unwrap();
    assert_eq!(a, shrinkage_demo_json(60, 3, 6, 0.5, 1.0, 9).unwrap());
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["fits"].as_array().unwrap().len(), 7);
    assert!(shrinkage_demo_json(8, 3, 6, 0.5, 1.0, 9).is_err());
}
