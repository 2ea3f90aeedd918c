use std::path::PathBuf;

use limitlens_core::analytics::Lexicon;
use limitlens_core::{CountingConfig, FilterConfig};

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn counting_files_equal_builtins() {
    for name in ["pre2017", "post2017"] {
        let path = configs_dir().join(format!("{name}.conf"));
        let loaded = CountingConfig::load(path.to_str().unwrap()).unwrap();
        assert_eq!(loaded, CountingConfig::builtin(name).unwrap(), "{name}");
    }
}

#[test]
fn filter_file_equals_default() {
    let loaded = FilterConfig::load(&configs_dir().join("filter.toml")).unwrap();
    assert_eq!(loaded, FilterConfig::default());
    assert_eq!(loaded.languages().count(), 23);
}

#[test]
fn example_lexicon_parses() {
    let lexicon = Lexicon::load(&configs_dir().join("lexicon.txt")).unwrap();
    let names: Vec<&str> = lexicon.categories.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["Work", "Affect", "Social"]);
}
