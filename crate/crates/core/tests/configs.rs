use std::path::PathBuf;

use lrcluster::harness::ExperimentConfig;

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}

#[test]
fn unknown_fields_are_rejected() {
    let text = lrcluster::harness::DEFAULT_CONFIG_JSON.replacen("\"seed\"", "\"sede\": 1, \"seed\"", 1);
    assert!(ExperimentConfig::from_json(&text).is_err());
}
