mod common;

use common::golden_run;

#[test]
fn golden_run_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = golden_run(a.path(), 42).unwrap();
    let second = golden_run(b.path(), 42).unwrap();
    assert_eq!(first.keys().collect::<Vec<_>>(), second.keys().collect::<Vec<_>>());
    for (path, bytes) in &first {
        assert!(bytes == &second[path], "{path} differs between runs");
    }
    for v in ["hindi", "english", "crosslingual"] {
        for part in ["train", "val", "test"] {
            assert!(first.contains_key(&format!("export/{v}/{part}.jsonl")));
        }
    }
    // One split shared by every variant.
    let ids = |v: &str| -> Vec<String> {
        String::from_utf8_lossy(&first[&format!("export/{v}/test.jsonl")])
            .lines()
            .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["id"].as_str().unwrap().to_string())
            .collect()
    };
    assert_eq!(ids("hindi"), ids("crosslingual"));
    assert_eq!(ids("hindi"), ids("english"));
    assert_eq!(ids("hindi").len(), 20);
}

#[test]
fn seed_changes_the_split() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = golden_run(a.path(), 1).unwrap();
    let second = golden_run(b.path(), 2).unwrap();
    assert_ne!(first["export/hindi/split.json"], second["export/hindi/split.json"]);
}
