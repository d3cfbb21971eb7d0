use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use statelaw_core::analytics::{
    aggregate_spans, law_thresholds, load_tagged, tag_corpus, threshold_width_report, write_tagged, TaggedDocument,
};
use statelaw_core::annotation::{compile_static_task_page, create_tasks, FileStore, TaskPage, TaskStore, UiConfig};
use statelaw_core::corpus::{
    load_corpus, snap_spans_to_tokens, spans_to_bio, tokenize, validate_spans, write_corpus, DiscourseLabel, DiscourseSpan, LawDocument,
};
use statelaw_core::crf::{token_accuracy, train_with, FeatureExtractor, Gazetteer, TrainConfig, TrainExample};
use statelaw_core::ingest::{filter_census as keep_census, ingest_records, CensusKeywords, FetchPolicy, Fetcher, RawStatute};
use statelaw_core::search::Index;
use statelaw_core::CrfModel;
use statelaw_server::{AppState, Auth};

use crate::config::{Paths, Slot};
use crate::{data, CliError, Format, ServeArgs, TrainArgs};

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let body = std::fs::read_to_string(path).map_err(data(path.display()))?;
    toml::from_str(&body).map_err(data(path.display()))
}

fn keywords(paths: &Paths, flag: Option<PathBuf>) -> Result<CensusKeywords, CliError> {
    match paths.optional(flag, &paths.config().keyword_config, "keywords.toml") {
        Some(p) => read_toml(&p),
        None => Ok(CensusKeywords::default()),
    }
}

fn ui_config(paths: &Paths, flag: Option<PathBuf>) -> Result<UiConfig, CliError> {
    match paths.optional(flag, &paths.config().ui_config, "ui.toml") {
        Some(p) => read_toml(&p),
        None => Ok(UiConfig::default()),
    }
}

fn corpus_at(path: &Path) -> Result<Vec<LawDocument>, CliError> {
    load_corpus(path).map_err(data(path.display()))
}

fn tagged_at(path: &Path) -> Result<Vec<TaggedDocument>, CliError> {
    load_tagged(path).map_err(data(path.display()))
}

/// Writes to `out`, or stdout when absent.
fn emit(out: Option<&Path>, body: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, body).map_err(data(p.display())),
        None => io::stdout().write_all(body.as_bytes()).map_err(data("stdout")),
    }
}

fn json_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(usize, T)>, CliError> {
    let file = File::open(path).map_err(data(path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(data(path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(&line).map_err(data(format!("{}:{}", path.display(), i + 1)))?;
        out.push((i + 1, v));
    }
    Ok(out)
}

pub fn ingest(
    paths: &Paths,
    manifest: &Path,
    out: Option<PathBuf>,
    keywords_flag: Option<PathBuf>,
    policy: Option<PathBuf>,
    no_fetch: bool,
) -> Result<(), CliError> {
    let out = paths.resolve(out, Slot::Corpus)?;
    let kw = keywords(paths, keywords_flag)?;
    let records: Vec<RawStatute> = json_lines(manifest)?.into_iter().map(|(_, r)| r).collect();
    let needs_fetch = records.iter().any(|r| r.text.is_none());
    let fetcher = if needs_fetch && !no_fetch {
        let policy: FetchPolicy = match policy {
            Some(p) => read_toml(&p)?,
            None => FetchPolicy::default(),
        };
        Some(Fetcher::new(policy).map_err(|e| CliError::Usage(e.to_string()))?)
    } else {
        None
    };
    let docs = ingest_records(&records, fetcher.as_ref(), &kw).map_err(data(manifest.display()))?;
    write_corpus(&out, &docs).map_err(data(out.display()))?;
    println!("ingested {} documents into {}", docs.len(), out.display());
    Ok(())
}

pub fn filter_census(paths: &Paths, input: Option<PathBuf>, out: Option<PathBuf>, kw: Option<PathBuf>) -> Result<(), CliError> {
    let input = paths.resolve(input, Slot::Corpus)?;
    let out = paths.resolve(out, Slot::Census)?;
    let kw = keywords(paths, kw)?;
    let docs = corpus_at(&input)?;
    let total = docs.len();
    let kept = keep_census(docs, &kw);
    write_corpus(&out, &kept).map_err(data(out.display()))?;
    println!("kept {} of {} documents in {}", kept.len(), total, out.display());
    Ok(())
}

pub fn index(paths: &Paths, input: Option<PathBuf>, out: Option<PathBuf>) -> Result<(), CliError> {
    let input = paths.resolve(input, Slot::Corpus)?;
    let out = paths.resolve(out, Slot::Index)?;
    let docs = corpus_at(&input)?;
    let idx = Index::build(&docs).map_err(data(input.display()))?;
    idx.save(&out).map_err(data(out.display()))?;
    println!(
        "indexed {} documents, {} terms into {}",
        idx.doc_count(),
        idx.terms().count(),
        out.display()
    );
    Ok(())
}

#[derive(Deserialize)]
struct AnnotatedParagraph {
    text: String,
    spans: Vec<DiscourseSpan>,
}

/// Training line formats: `{"text", "spans"}` or a tagged document, whose
/// paragraphs all become examples.
#[derive(Deserialize)]
#[serde(untagged)]
enum TrainingLine {
    Tagged(TaggedDocument),
    Paragraph(AnnotatedParagraph),
}

fn example(text: &str, spans: &[DiscourseSpan], at: &str) -> Result<Option<TrainExample>, CliError> {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Ok(None);
    }
    let spans = validate_spans(text, spans).map_err(data(at))?;
    let (snapped, _) = snap_spans_to_tokens(text, &tokens, &spans);
    let tags = spans_to_bio(&tokens, &snapped).map_err(data(at))?;
    Ok(Some((tokens, tags)))
}

fn training_set(path: &Path) -> Result<Vec<TrainExample>, CliError> {
    let mut out = Vec::new();
    for (line_no, line) in json_lines::<TrainingLine>(path)? {
        let at = format!("{}:{line_no}", path.display());
        match line {
            TrainingLine::Paragraph(p) => out.extend(example(&p.text, &p.spans, &at)?),
            TrainingLine::Tagged(doc) => {
                for p in &doc.law.paragraphs {
                    let spans: Vec<DiscourseSpan> = doc.spans_in(p.index).map(|s| s.span.clone()).collect();
                    out.extend(example(&p.text, &spans, &at)?);
                }
            }
        }
    }
    Ok(out)
}

pub fn train(paths: &Paths, args: TrainArgs) -> Result<(), CliError> {
    let out = paths.resolve(args.out, Slot::Model)?;
    let config = TrainConfig {
        l2_lambda: args.l2,
        learning_rate: args.learning_rate,
        epochs: args.epochs,
        seed: args.seed,
        forbid_invalid_bio: true,
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let gazetteer = match args.gazetteer {
        Some(p) => read_toml(&p)?,
        None => Gazetteer::default(),
    };
    let dataset = training_set(&args.train)?;
    let (model, report): (CrfModel, _) =
        train_with(FeatureExtractor::new(gazetteer), &dataset, &config).map_err(data(args.train.display()))?;
    model.save(&out).map_err(data(out.display()))?;
    println!(
        "trained on {} paragraphs, {} features; objective {:.6}; training accuracy {:.4}; saved {}",
        dataset.len(),
        model.vocab().len(),
        report.objective.last().copied().unwrap_or(f64::NAN),
        token_accuracy(&model, &dataset),
        out.display()
    );
    Ok(())
}

pub fn tag(paths: &Paths, model: Option<PathBuf>, input: Option<PathBuf>, out: Option<PathBuf>) -> Result<(), CliError> {
    let model_path = paths.resolve(model, Slot::Model)?;
    let input = paths.resolve(input, Slot::Corpus)?;
    let out = paths.resolve(out, Slot::Tagged)?;
    let model = CrfModel::load(&model_path).map_err(data(model_path.display()))?;
    let docs = corpus_at(&input)?;
    let tagged = tag_corpus(&model, &docs);
    write_tagged(&out, &tagged).map_err(data(out.display()))?;
    let spans: usize = tagged.iter().map(|d| d.spans.len()).sum();
    println!("tagged {} documents, {} spans into {}", tagged.len(), spans, out.display());
    Ok(())
}

fn label(s: &str) -> Result<DiscourseLabel, CliError> {
    s.parse()
        .map_err(|_| CliError::Usage(format!("unknown label `{s}` (SUBJECT, CONSEQUENCE, OBJECT, PROBE, TEST)")))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn aggregate(paths: &Paths, input: Option<PathBuf>, label_name: &str, format: Format, out: Option<PathBuf>) -> Result<(), CliError> {
    let label = label(label_name)?;
    let input = paths.resolve(input, Slot::Tagged)?;
    let groups = aggregate_spans(&tagged_at(&input)?, label);
    let body = match format {
        Format::Json => to_json(&groups),
        Format::Table => {
            let mut s = format!("{:>6} {:>5}  {}\n", "count", "laws", "text");
            for g in &groups {
                s.push_str(&format!("{:>6} {:>5}  {}\n", g.count, g.law_ids.len(), g.normalized_text));
            }
            s
        }
    };
    emit(out.as_deref(), &body)
}

pub fn report_thresholds(paths: &Paths, input: Option<PathBuf>, state: Option<&str>, format: Format, list: bool) -> Result<(), CliError> {
    let input = paths.resolve(input, Slot::Tagged)?;
    let corpus = tagged_at(&input)?;
    let report = threshold_width_report(&corpus, state);
    let intervals: Vec<_> = corpus
        .iter()
        .filter(|d| state.is_none_or(|s| d.law.state.eq_ignore_ascii_case(s)))
        .flat_map(|d| law_thresholds(d).into_iter().map(move |i| (d.law.id.clone(), i)))
        .collect();
    let body = match format {
        Format::Json => {
            let listed: Vec<_> = intervals
                .iter()
                .map(|(id, i)| serde_json::json!({"law_id": id, "lower": i.lower, "upper": i.upper, "width": i.width()}))
                .collect();
            let mut v = serde_json::to_value(&report).expect("serializable");
            if list {
                v["intervals"] = serde_json::Value::Array(listed);
            }
            to_json(&v)
        }
        Format::Table => {
            let mut s = report.to_table();
            if list {
                let show = |b: Option<u64>| b.map_or("-".to_string(), |v| v.to_string());
                s.push('\n');
                for (id, i) in &intervals {
                    s.push_str(&format!("{id}\t{}\t{}\t{}\n", show(i.lower), show(i.upper), show(i.width())));
                }
            }
            s
        }
    };
    emit(None, &body)
}

fn parse_ref(s: &str) -> Result<(String, usize), CliError> {
    let bad = || CliError::Usage(format!("paragraph ref `{s}` must look like DOC_ID#INDEX"));
    let (doc, idx) = s.rsplit_once('#').ok_or_else(bad)?;
    Ok((doc.to_string(), idx.parse().map_err(|_| bad())?))
}

pub fn tasks_create(
    paths: &Paths,
    corpus: Option<PathBuf>,
    store: Option<PathBuf>,
    required: u32,
    census_only: bool,
    paragraphs: &[String],
) -> Result<(), CliError> {
    if required == 0 {
        return Err(CliError::Usage("--required must be at least 1".into()));
    }
    let corpus_path = paths.resolve(corpus, Slot::Corpus)?;
    let store_path = paths.resolve(store, Slot::Store)?;
    let docs = corpus_at(&corpus_path)?;
    let refs: Vec<(String, usize)> = if paragraphs.is_empty() {
        docs.iter()
            .flat_map(|d| {
                d.paragraphs
                    .iter()
                    .filter(|p| !census_only || p.census_related)
                    .map(|p| (d.id.clone(), p.index))
            })
            .collect()
    } else {
        paragraphs.iter().map(|s| parse_ref(s)).collect::<Result<_, _>>()?
    };
    let store = FileStore::open(&store_path).map_err(data(store_path.display()))?;
    let before = store.snapshot().map_err(data(store_path.display()))?.version;
    let tasks = create_tasks(&store, &docs, &refs, required).map_err(data(store_path.display()))?;
    let after = store.snapshot().map_err(data(store_path.display()))?.version;
    println!("{} tasks ({} new) in {}", tasks.len(), after - before, store_path.display());
    Ok(())
}

pub fn export_amt(
    paths: &Paths,
    corpus: Option<PathBuf>,
    paragraph_id: &str,
    out: &Path,
    task_id: u64,
    ui_flag: Option<PathBuf>,
    tagged: Option<PathBuf>,
) -> Result<(), CliError> {
    let (doc_id, index) = parse_ref(paragraph_id)?;
    let corpus_path = paths.resolve(corpus, Slot::Corpus)?;
    let docs = corpus_at(&corpus_path)?;
    let text = docs
        .iter()
        .find(|d| d.id == doc_id)
        .and_then(|d| d.paragraph(index))
        .map(|p| p.text.clone())
        .ok_or_else(|| CliError::Data(format!("no paragraph {paragraph_id} in {}", corpus_path.display())))?;
    let config = ui_config(paths, ui_flag)?;
    let pretags = match (config.pretag, tagged) {
        (true, Some(p)) => tagged_at(&p)?
            .iter()
            .find(|d| d.law.id == doc_id)
            .map(|d| d.spans_in(index).map(|s| s.span.clone()).collect())
            .unwrap_or_default(),
        _ => Vec::new(),
    };
    let page = TaskPage {
        task_id,
        doc_id,
        paragraph_index: index,
        text,
        pretags,
    };
    let html = compile_static_task_page(&page, &config).map_err(|e| CliError::Usage(e.to_string()))?;
    std::fs::write(out, html).map_err(data(out.display()))?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn serve(paths: &Paths, args: ServeArgs) -> Result<(), CliError> {
    let index_path = paths.resolve(args.index, Slot::Index)?;
    let tagged_path = paths.resolve(args.tagged, Slot::Tagged)?;
    let store_path = paths.resolve(args.store, Slot::Store)?;
    let listen = args
        .listen
        .or_else(|| paths.config().listen_addr.clone())
        .unwrap_or_else(|| "127.0.0.1:8080".into());
    let addr = listen
        .parse()
        .map_err(|_| CliError::Usage(format!("bad listen address `{listen}`")))?;
    let auth = match (
        args.open_auth,
        paths.optional(args.tokens, &paths.config().tokens_path, "tokens.toml"),
    ) {
        (true, _) => Auth::Open,
        (false, Some(p)) => Auth::load_registry(&p).map_err(CliError::Data)?,
        (false, None) => return Err(CliError::Usage("serve needs --tokens or --open-auth".into())),
    };
    let state = AppState {
        index: Index::load(&index_path).map_err(data(index_path.display()))?,
        tagged: tagged_at(&tagged_path)?,
        store: Arc::new(FileStore::open(&store_path).map_err(data(store_path.display()))?),
        auth,
        ui_config: ui_config(paths, args.ui_config)?,
        static_dir: paths.optional(args.static_dir, &paths.config().static_dir, "app"),
    };
    let runtime = tokio::runtime::Runtime::new().map_err(data("runtime"))?;
    runtime
        .block_on(statelaw_server::serve(addr, state))
        .map_err(data(format!("serve {listen}")))
}
