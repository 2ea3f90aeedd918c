use limitlens_core::charcount::{normalize_text, weighted_length};
use limitlens_core::CountingConfig;

const GOLDEN: &str = include_str!("data/golden_lengths.tsv");

#[test]
fn golden_vectors_match() {
    let mut checked = 0;
    for line in GOLDEN.lines().filter(|l| !l.starts_with('#') && !l.is_empty()) {
        let cols: Vec<&str> = line.split('\t').collect();
        assert_eq!(cols.len(), 4, "malformed row {line:?}");
        let config = CountingConfig::builtin(cols[1]).expect("known config");
        let text: String = serde_json::from_str(cols[2]).expect("json string");
        let expected: usize = cols[3].parse().expect("integer");
        let normalized = normalize_text(text.as_bytes(), config.normalization_form).unwrap();
        assert_eq!(
            weighted_length(&normalized, &config).0,
            expected,
            "{} under {}",
            cols[0],
            cols[1]
        );
        checked += 1;
    }
    assert_eq!(checked, 50);
}
