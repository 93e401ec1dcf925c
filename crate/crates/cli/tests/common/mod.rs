#![allow(dead_code)]

use std::path::{Path, PathBuf};

use serde_json::Value;

pub fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

pub fn config_path(name: &str) -> PathBuf {
    configs_dir().join(format!("{name}.toml"))
}

pub fn schema_for(json_file: &Path) -> Value {
    let name = match json_file.file_name().unwrap().to_str().unwrap() {
        "conditions.json" => "check",
        other => other.trim_end_matches(".json"),
    };
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Validates every `.json` file among `files` against its shipped schema.
pub fn validate_json(files: &[PathBuf]) -> usize {
    let mut n = 0;
    for f in files.iter().filter(|f| f.extension().is_some_and(|e| e == "json")) {
        let instance: Value = serde_json::from_str(&std::fs::read_to_string(f).unwrap()).unwrap();
        let schema = schema_for(f);
        let validator = jsonschema::validator_for(&schema).unwrap();
        let errors: Vec<String> = validator.iter_errors(&instance).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{}: {errors:?}", f.display());
        n += 1;
    }
    n
}
