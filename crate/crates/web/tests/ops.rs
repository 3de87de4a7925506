use eventjet_web::{cubic_order_sweep, decay_trigger_time, series_radii};
use serde_json::Value;

#[test]
fn decay_trigger_time_matches_the_logarithm() {
    let v: Value = serde_json::from_str(&decay_trigger_time(2.0, 1.0, 6).unwrap()).unwrap();
    assert!(v["max_error"].as_f64().unwrap() < 1e-12);
    assert!((v["t_nom"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);
    assert!(decay_trigger_time(1.0, 2.0, 4).is_err());
}

#[test]
fn cubic_sweep_has_one_row_per_order() {
    let rows: Vec<Value> = serde_json::from_str(&cubic_order_sweep(0.3, 4).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    // first order: the trigger time (e - 1)/(2 x0²) has slope -(e - 1)
    let std_t = rows[0]["std"][1].as_f64().unwrap();
    let want = (std::f64::consts::E - 1.0) * 0.3 / 3f64.sqrt();
    assert!((std_t - want).abs() < 1e-8, "{std_t} vs {want}");
    assert!(cubic_order_sweep(1.5, 2).is_err());
}

#[test]
fn series_radii_for_exp_grow_like_factorial_roots() {
    let v: Value = serde_json::from_str(&series_radii("exp", 0.0, 8).unwrap()).unwrap();
    let r8 = v["ch"][7].as_f64().unwrap();
    assert!((r8 - 40320f64.powf(0.125)).abs() < 1e-9);
    assert!(series_radii("gamma", 0.0, 4).is_err());
}
