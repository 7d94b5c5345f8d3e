use altproj_demo::{numerical_range_json, random_trace_json, two_lines_json};
use serde_json::Value;

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn two_lines_norms_follow_the_law() {
    let v: Value = serde_json::from_str(&two_lines_json(0.7, 30).unwrap()).unwrap();
    let norms = floats(&v["norms"]);
    let law = floats(&v["law"]);
    assert_eq!(norms.len(), 31);
    for (n, (a, b)) in norms.iter().zip(&law).enumerate() {
        assert!((a - b).abs() < 1e-12, "n={n}: {a} vs {b}");
    }
    assert!((v["c"].as_f64().unwrap() - 0.7f64.cos()).abs() < 1e-12);
}

#[test]
fn random_trace_stays_under_both_bounds() {
    let v: Value = serde_json::from_str(&random_trace_json(10, "7 8 6", 1, 100).unwrap()).unwrap();
    let e = floats(&v["errors"]);
    let bc = floats(&v["bound_c"]);
    let bi = floats(&v["bound_iota2"]);
    for n in 0..e.len() {
        assert!(e[n] <= bc[n] + 1e-12 && e[n] <= bi[n] + 1e-12, "n={n}");
    }
    assert_eq!(v["n"].as_u64(), Some(3));
}

#[test]
fn numerical_range_is_contained() {
    let v: Value = serde_json::from_str(&numerical_range_json(6, "4,3,5", 3, 128).unwrap()).unwrap();
    assert_eq!(v["passed"], Value::Bool(true));
    assert_eq!(v["violations"].as_u64(), Some(0));
    assert_eq!(v["boundary"].as_array().unwrap().len(), 128);
}

#[test]
fn bad_dims_are_reported() {
    assert!(random_trace_json(5, "2 x", 0, 10).unwrap_err().contains("`x`"));
    assert!(numerical_range_json(3, "4 1", 0, 16).is_err());
}
