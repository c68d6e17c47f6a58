use hiertrain::arch::Arch;
use hiertrain::profiles::{load_profile, save_profile};
use hiertrain::{CostProfile, Error};
use serde_json::Value;

fn t3_json() -> Value {
    serde_json::from_str(&Arch::T3.profile().to_json().unwrap()).unwrap()
}

fn parse(v: &Value) -> hiertrain::Result<CostProfile> {
    CostProfile::from_json(&v.to_string())
}

#[test]
fn every_builtin_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    for arch in [Arch::T3, Arch::LeNet5, Arch::AlexNet] {
        let path = dir.path().join(format!("{arch}.json"));
        let profile = arch.profile();
        save_profile(&profile, &path).unwrap();
        let back = load_profile(&path).unwrap();
        assert_eq!(back, profile);
        for (a, b) in back.times(hiertrain::Worker::Edge).forward.iter().zip(&profile.times(hiertrain::Worker::Edge).forward) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn short_time_row_is_a_dimension_error() {
    let mut v = t3_json();
    v["times"]["edge"]["backward"].as_array_mut().unwrap().pop();
    match parse(&v) {
        Err(Error::Dimension { field, expected: 3, found: 2 }) => assert_eq!(field, "times.edge.backward"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn negative_time_is_rejected_with_its_position() {
    let mut v = t3_json();
    v["times"]["cloud"]["forward"][1] = Value::from(-1.0);
    let err = parse(&v).unwrap_err().to_string();
    assert!(err.contains("times.cloud.forward[1]"), "{err}");
}

#[test]
fn missing_and_unknown_fields_fail_to_parse() {
    let mut v = t3_json();
    v["model"].as_object_mut().unwrap().remove("sample_bytes");
    assert!(matches!(parse(&v), Err(Error::Parse(_))));

    let mut v = t3_json();
    v["times"].as_object_mut().unwrap().remove("device");
    assert!(matches!(parse(&v), Err(Error::Dimension { expected: 3, found: 2, .. })));

    let mut v = t3_json();
    v["extra"] = Value::from(1);
    assert!(matches!(parse(&v), Err(Error::Parse(_))));

    let mut v = t3_json();
    let edge = v["times"]["edge"].clone();
    v["times"].as_object_mut().unwrap().remove("edge");
    v["times"]["gpu"] = edge;
    assert!(parse(&v).unwrap_err().to_string().contains("times.gpu"));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_profile(dir.path().join("absent.json")), Err(Error::Io(_))));
}
