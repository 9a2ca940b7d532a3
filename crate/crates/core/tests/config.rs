use std::path::PathBuf;

use biocurate_core::pipeline::{validate_config, validate_str};

fn demo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/demo/demo.toml")
}

#[test]
fn demo_config_round_trips() {
    let v = validate_config(&demo()).unwrap();
    assert_eq!(v.config.merge.seed, Some(7));
    assert_eq!(v.config.ontology.sources.as_ref().map(Vec::len), Some(2));
    let dumped = v.config.to_toml().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("resolved.toml");
    std::fs::write(&path, &dumped).unwrap();
    let again = validate_config(&path).unwrap();
    assert_eq!(again.config, v.config);
    assert!(again.defaults_applied.is_empty());
}

#[test]
fn validation_names_the_problem() {
    let base = demo().parent().unwrap().to_path_buf();
    let cases = [
        ("[input]\ntrain = \"train\"\ntest = \"test\"\n[score]\nmod = \"exact\"\n", "mod"),
        ("[input]\ntrain = \"train\"\ntest = \"test\"\n[merge]\ntype_map = \"nope.tsv\"\n", "merge.type_map"),
        ("[input]\ntrain = \"train\"\ntest = \"test\"\n[merge]\nholdout = 1.5\n", "merge.holdout"),
        ("[input]\ntrain = \"train\"\ntest = \"test\"\n[merge]\nseed = \"seven\"\n", "seed"),
        ("[input]\ntest = \"test\"\n", "input.train"),
        ("[input]\ntrain = \"train\"\ntest = \"test\"\n[ontology]\nsources = [{ prefix = \"MESH:\" }]\n", "MESH:"),
        ("[inptu]\n", "inptu"),
    ];
    for (text, needle) in cases {
        let err = validate_str(text, &base).unwrap_err().to_string();
        assert!(err.contains(needle), "{needle}: {err}");
    }
}
