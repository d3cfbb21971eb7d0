use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use statelaw_core::analytics::{write_tagged, Provenance, TaggedDocument, TaggedSpan};
use statelaw_core::corpus::{load_corpus, DiscourseLabel, DiscourseSpan};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn run(home: Option<&Path>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_statelaw"));
    cmd.args(args).env_remove("STATUTE_HOME");
    if let Some(h) = home {
        cmd.env("STATUTE_HOME", h);
    }
    cmd.output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Ingests the fixture manifest into `$home/corpus.jsonl`.
fn ingest(home: &Path) {
    let out = run(
        Some(home),
        &["ingest", "--manifest", s(&fixtures().join("manifest.jsonl")), "--no-fetch"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(None, &["--help"])), 0);
    assert_eq!(code(&run(None, &[])), 1);
    assert_eq!(code(&run(None, &["frobnicate"])), 1);
    // nothing to resolve --in against
    let out = run(None, &["index"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--corpus"));

    let missing = dir.path().join("absent.jsonl");
    assert_eq!(
        code(&run(None, &["index", "--in", s(&missing), "--out", s(&dir.path().join("i"))])),
        2
    );
    let garbage = dir.path().join("garbage.jsonl");
    std::fs::write(&garbage, "{\"not\": \"a law\"}\n").unwrap();
    assert_eq!(
        code(&run(None, &["index", "--in", s(&garbage), "--out", s(&dir.path().join("i"))])),
        2
    );

    ingest(dir.path());
    assert_eq!(
        code(&run(Some(dir.path()), &["aggregate", "--in", s(&garbage), "--label", "NOPE"])),
        1
    );
    assert_eq!(
        code(&run(
            Some(dir.path()),
            &["export-amt", "--paragraph-id", "no-hash", "--out", "x.html"]
        )),
        1
    );
    assert_eq!(
        code(&run(
            Some(dir.path()),
            &["export-amt", "--paragraph-id", "XX:none#0", "--out", "x.html"]
        )),
        2
    );
    assert_eq!(code(&run(Some(dir.path()), &["serve"])), 1);
}

#[test]
fn home_and_config_resolution() {
    let home = tempfile::tempdir().unwrap();
    ingest(home.path());
    assert!(home.path().join("corpus.jsonl").exists());
    assert_eq!(code(&run(Some(home.path()), &["filter-census"])), 0);
    let census = load_corpus(home.path().join("census.jsonl")).unwrap();
    assert!(!census.is_empty() && census.iter().all(|d| d.is_census_related()));

    // config paths override the home defaults
    let other = tempfile::tempdir().unwrap();
    let config = other.path().join("statelaw.toml");
    std::fs::write(&config, format!("index_path = {:?}\n", s(&other.path().join("custom.sidx")))).unwrap();
    assert_eq!(code(&run(Some(home.path()), &["--config", s(&config), "index"])), 0);
    assert!(other.path().join("custom.sidx").exists());
    assert!(!home.path().join("index.sidx").exists());

    std::fs::write(&config, "no_such_key = 1\n").unwrap();
    assert_eq!(code(&run(Some(home.path()), &["--config", s(&config), "index"])), 1);
}

#[test]
fn threshold_report_on_fixture() {
    let home = tempfile::tempdir().unwrap();
    ingest(home.path());
    // hand-tagged TEST spans over the two bounded TN thresholds
    let corpus = load_corpus(home.path().join("corpus.jsonl")).unwrap();
    let tagged: Vec<TaggedDocument> = corpus
        .into_iter()
        .map(|law| {
            let mut doc = TaggedDocument::untagged(law);
            if doc.law.state == "TN" {
                let text = doc.law.paragraphs[0].text.clone();
                if let Some(byte) = text.find("having a population") {
                    let start = text[..byte].chars().count();
                    let end = text.find("census").map(|b| text[..b].chars().count() + 6).unwrap();
                    let span = DiscourseSpan::from_text(&text, start, end, DiscourseLabel::Test);
                    doc.spans.push(TaggedSpan::new(0, span, Provenance::Human));
                }
            }
            doc
        })
        .collect();
    write_tagged(home.path().join("tagged.jsonl"), &tagged).unwrap();

    let out = run(
        Some(home.path()),
        &["report-thresholds", "--state", "tn", "--format", "json", "--list"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let intervals: Vec<(u64, u64)> = v["intervals"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| (i["lower"].as_u64().unwrap(), i["upper"].as_u64().unwrap()))
        .collect();
    assert_eq!(intervals, vec![(335_000, 336_000), (8_000, 8_400)]);
    assert_eq!(v["total_with_bounded_interval"], 2);
    assert_eq!(v["frac_width_lt"]["500"], 0.5);
    assert_eq!(v["frac_width_lt"]["100"], 0.0);

    let table = run(Some(home.path()), &["report-thresholds", "--state", "TN"]);
    assert!(String::from_utf8_lossy(&table.stdout).contains("0.5000"));
}

#[test]
fn tasks_and_pages() {
    let home = tempfile::tempdir().unwrap();
    ingest(home.path());
    let create = |extra: &[&str]| {
        let mut args = vec!["tasks", "create"];
        args.extend_from_slice(extra);
        let out = run(Some(home.path()), &args);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    let census_paragraphs: usize = load_corpus(home.path().join("corpus.jsonl"))
        .unwrap()
        .iter()
        .map(|d| d.paragraphs.iter().filter(|p| p.census_related).count())
        .sum();
    assert!(census_paragraphs > 0);
    let first = create(&["--census-only"]);
    assert!(
        first.starts_with(&format!("{census_paragraphs} tasks ({census_paragraphs} new)")),
        "{first}"
    );
    let again = create(&["--census-only"]);
    assert!(again.contains("(0 new)"), "{again}");
    let one = create(&["--paragraph", "NY:§ 10-1-1#0"]);
    assert!(one.starts_with("1 tasks"), "{one}");
    assert_eq!(code(&run(Some(home.path()), &["tasks", "create", "--required", "0"])), 1);

    let a = home.path().join("a.html");
    let b = home.path().join("b.html");
    for p in [&a, &b] {
        assert_eq!(
            code(&run(
                Some(home.path()),
                &["export-amt", "--paragraph-id", "TN:§ 36-5-402#0", "--out", s(p)]
            )),
            0
        );
    }
    let html = std::fs::read(&a).unwrap();
    assert_eq!(html, std::fs::read(&b).unwrap());
    let html = String::from_utf8(html).unwrap();
    assert!(html.contains("three hundred thirty-five thousand"));
}
