#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_codemix");

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn codemix(workdir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .arg("--workdir")
        .arg(workdir)
        .args(args)
        .env_remove("RUST_LOG")
        .env_remove("CSF_PROVIDER_KEY")
        .output()
        .expect("binary runs")
}

pub fn run_ok(workdir: &Path, args: &[&str]) -> Result<String, String> {
    let out = codemix(workdir, args);
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

/// ingest, identifier train and tag, all three conversions (dictionary
/// mock for translation), export on one shared split, then linear
/// train and eval per variant. Returns every non-manifest file by path.
pub fn golden_run(workdir: &Path, seed: u64) -> Result<BTreeMap<String, Vec<u8>>, String> {
    for name in ["golden_corpus.tsv", "golden_dictionary.tsv"] {
        std::fs::copy(fixture(name), workdir.join(name)).map_err(|e| e.to_string())?;
    }
    let seed = seed.to_string();
    let go = |args: &[&str]| -> Result<String, String> {
        let mut full = vec!["--seed", seed.as_str()];
        full.extend_from_slice(args);
        run_ok(workdir, &full)
    };
    go(&["ingest", "--input", "golden_corpus.tsv", "--format", "columns", "--output", "corpus.jsonl"])?;
    go(&["lid", "train", "--corpus", "corpus.jsonl", "--output", "lid.bin"])?;
    go(&["lid", "tag", "--corpus", "corpus.jsonl", "--model", "lid.bin", "--output", "tagged.jsonl"])?;
    for v in ["hindi", "crosslingual"] {
        go(&["convert", "--corpus", "tagged.jsonl", "--variant", v, "--output", &format!("{v}.json")])?;
    }
    go(&[
        "convert",
        "--corpus",
        "tagged.jsonl",
        "--variant",
        "english",
        "--provider",
        "mock-dictionary",
        "--dictionary",
        "golden_dictionary.tsv",
        "--output",
        "english.json",
    ])?;
    go(&["export", "--converted", "hindi.json", "--corpus", "tagged.jsonl", "--output-dir", "export/hindi"])?;
    for v in ["english", "crosslingual"] {
        go(&[
            "export",
            "--converted",
            &format!("{v}.json"),
            "--split",
            "export/hindi/split.json",
            "--output-dir",
            &format!("export/{v}"),
        ])?;
    }
    for v in ["hindi", "english", "crosslingual"] {
        let model = format!("linear-{v}.bin");
        go(&["train", "--model", "linear", "--data", &format!("export/{v}"), "--output", &model])?;
        go(&["eval", "--model", &model, "--data", &format!("export/{v}"), "--output", &format!("report-{v}.jsonl")])?;
    }
    collect_files(workdir)
}

fn collect_files(root: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            let rel = path.strip_prefix(root).expect("under root").to_string_lossy().into_owned();
            if rel.starts_with("manifests") {
                continue;
            }
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(rel, std::fs::read(&path).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(out)
}
