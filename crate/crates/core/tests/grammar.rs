use std::fs;
use std::path::PathBuf;

use condbayes::spec::{parse_spec, SpecError};

fn fixtures(kind: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/grammar").join(kind);
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn valid_fixtures_parse_and_round_trip() {
    let valid = fixtures("valid");
    assert_eq!(valid.len(), 20);
    for (name, text) in valid {
        let spec = parse_spec(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = parse_spec(&spec.render()).unwrap_or_else(|e| panic!("{name} rendered: {e}"));
        assert_eq!(again, spec, "{name}");
    }
}

#[test]
fn invalid_fixtures_fail() {
    let invalid = fixtures("invalid");
    assert_eq!(invalid.len(), 20);
    for (name, text) in invalid {
        match parse_spec(&text) {
            Err(SpecError::Syntax { line, column, .. }) => assert!(line >= 1 && column >= 1, "{name}"),
            Err(SpecError::Validation(_)) => {}
            Ok(_) => panic!("{name} was accepted"),
        }
    }
}
