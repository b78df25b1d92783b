//! End-to-end runs of `probe run` on the bundled mini corpus.

mod common;

use std::fs;

use common::{copy_dir, fixture_copy, probe, snapshot};
use segprobe_core::probe::parse_metadata;

const REPORTS: [&str; 4] = ["alpha/high", "alpha/low", "beta/high", "beta/low"];

#[test]
fn mini_corpus_runs_reproducibly_and_isolates_failures() {
    let dir = fixture_copy();
    let config = dir.path().join("run.toml");
    let config = config.to_str().unwrap();
    let out = dir.path().join("out");

    let first = probe(&["run", config]);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let tree = snapshot(&out);
    for report in REPORTS {
        for file in ["smooths.tsv", "differences.tsv", "metadata.tsv", "model_spec.txt", "smooths.svg", "differences.svg", "figure.svg"] {
            assert!(tree.contains_key(&format!("reports/{report}/{file}")), "{report}/{file}");
        }
    }
    for file in ["tokens.tsv", "sample.tsv", "exclusions.tsv", "overlap.tsv", "failures.tsv", "manifest.tsv"] {
        assert!(tree.contains_key(file), "{file}");
    }

    // figures carry exactly the intervals of the metadata files
    for report in REPORTS {
        let meta = parse_metadata(std::str::from_utf8(&tree[&format!("reports/{report}/metadata.tsv")]).unwrap()).unwrap();
        let svg = String::from_utf8(tree[&format!("reports/{report}/differences.svg")].clone()).unwrap();
        for pair in ["voiced-sonorant", "voiceless-sonorant", "voiceless-voiced"] {
            let title = format!("<title>significant: {}</title>", meta[&format!("significant:{pair}")]);
            assert!(svg.contains(&title), "{report} {pair}");
        }
    }
    // the effect is encoded in alpha only
    let alpha = parse_metadata(std::str::from_utf8(&tree["reports/alpha/high/metadata.tsv"]).unwrap()).unwrap();
    assert!(alpha["significant:voiceless-sonorant"].starts_with("0-"));

    let second = probe(&["run", config]);
    assert_eq!(second.status.code(), Some(0));
    assert!(snapshot(&out) == tree, "second run differs");

    // a third source with an unreadable annotation file
    let gamma = dir.path().join("gamma");
    copy_dir(&dir.path().join("beta"), &gamma);
    let victim = fs::read_dir(gamma.join("textgrids")).unwrap().next().unwrap().unwrap().path();
    fs::write(&victim, "not a textgrid\n").unwrap();
    let mut text = fs::read_to_string(dir.path().join("run.toml")).unwrap();
    text.push_str("\n[[source]]\nname = \"gamma\"\ntextgrids = \"gamma/textgrids\"\ncontours = \"gamma/contours\"\n");
    let three = dir.path().join("three.toml");
    fs::write(&three, text).unwrap();
    let partial = probe(&["run", three.to_str().unwrap()]);
    assert_eq!(partial.status.code(), Some(2), "{}", String::from_utf8_lossy(&partial.stderr));
    let after = snapshot(&out);
    for (path, bytes) in &tree {
        if path.starts_with("reports/") {
            assert!(after.get(path) == Some(bytes), "{path} changed");
        }
    }
    assert!(!after.keys().any(|k| k.starts_with("reports/gamma")));
    let failures = String::from_utf8(after["failures.tsv"].clone()).unwrap();
    assert!(failures.lines().any(|l| l.starts_with("gamma\t")), "{failures}");
}

#[test]
fn missing_textgrid_directory_is_fatal_and_named() {
    let dir = fixture_copy();
    fs::remove_dir_all(dir.path().join("beta/textgrids")).unwrap();
    let r = probe(&["run", dir.path().join("run.toml").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&r.stderr);
    assert!(stderr.contains(&dir.path().join("beta/textgrids").display().to_string()), "{stderr}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn foreign_output_directory_is_not_overwritten() {
    let dir = fixture_copy();
    fs::create_dir(dir.path().join("out")).unwrap();
    fs::write(dir.path().join("out/notes.txt"), "keep me").unwrap();
    let r = probe(&["run", dir.path().join("run.toml").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    assert_eq!(fs::read_to_string(dir.path().join("out/notes.txt")).unwrap(), "keep me");
}

#[test]
fn unknown_config_key_is_fatal() {
    let dir = fixture_copy();
    let path = dir.path().join("bad.toml");
    fs::write(&path, fs::read_to_string(dir.path().join("run.toml")).unwrap().replace("[mode]", "[mode]\nbogus = 1")).unwrap();
    let r = probe(&["run", path.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
}
