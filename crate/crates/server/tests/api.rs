use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use statelaw_core::analytics::{Provenance, TaggedDocument, TaggedSpan};
use statelaw_core::annotation::{create_tasks, MemoryStore, UiConfig};
use statelaw_core::corpus::{DiscourseLabel, DiscourseSpan, LawDocument};
use statelaw_core::ingest::parse_statute;
use statelaw_core::search::Index;
use statelaw_server::{router, AppState, Auth};

fn laws() -> Vec<LawDocument> {
    vec![
        parse_statute("No liquor shall be sold within the county.", "TN", "§ 57-3-1").unwrap(),
        parse_statute("Alcohol permits are issued by the board.", "TN", "§ 57-3-2").unwrap(),
        parse_statute("The trial court judge shall appoint a clerk.", "NY", "§ 10-1-1").unwrap(),
        parse_statute("The trial court judge may hold hearings.", "NY", "§ 9-1-1").unwrap(),
    ]
}

fn span(doc: &LawDocument, needle: &str, label: DiscourseLabel) -> TaggedSpan {
    let text = &doc.paragraphs[0].text;
    let start = text[..text.find(needle).unwrap()].chars().count();
    TaggedSpan::new(
        0,
        DiscourseSpan::from_text(text, start, start + needle.chars().count(), label),
        Provenance::Model,
    )
}

fn app_with(auth: Auth) -> Router {
    let laws = laws();
    let tagged: Vec<TaggedDocument> = laws
        .iter()
        .map(|d| {
            let mut t = TaggedDocument::untagged(d.clone());
            if d.paragraphs[0].text.starts_with("The trial court judge") {
                t.spans.push(span(d, "The trial court judge", DiscourseLabel::Subject));
            }
            t
        })
        .collect();
    let store = Arc::new(MemoryStore::new());
    let refs = vec![(laws[2].id.clone(), 0)];
    create_tasks(&*store, &laws, &refs, 2).unwrap();
    router(AppState {
        index: Index::build(&laws).unwrap(),
        tagged,
        store,
        auth,
        ui_config: UiConfig {
            pretag: true,
            ..UiConfig::default()
        },
        static_dir: None,
    })
}

fn app() -> Router {
    app_with(Auth::Open)
}

async fn call(app: &Router, method: &str, uri: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header(header::AUTHORIZATION, format!("Bearer {t}"));
    }
    let req = match body {
        Some(b) => req.header(header::CONTENT_TYPE, "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

fn ids(v: &Value) -> Vec<String> {
    let mut ids: Vec<String> = v["hits"]
        .as_array()
        .unwrap()
        .iter()
        .map(|h| h["doc_id"].as_str().unwrap().to_string())
        .collect();
    ids.sort();
    ids
}

#[tokio::test]
async fn search_endpoint() {
    let app = app();
    let (s, v) = call(&app, "GET", "/api/search?q=alcohol%20OR%20liquor%20OR%20beverage", None, None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(ids(&v), vec!["TN:§ 57-3-1", "TN:§ 57-3-2"]);
    assert_eq!(v["facet_counts"]["state"]["TN"], 2);

    let (_, v) = call(&app, "GET", "/api/search?q=the&state=NY&page_size=1", None, None).await;
    assert_eq!(v["total"], 2);
    assert_eq!(v["hits"].as_array().unwrap().len(), 1);
    let (_, v) = call(&app, "GET", "/api/search?q=the&page_size=1000", None, None).await;
    assert_eq!(v["page_size"], 100);

    let (s, v) = call(&app, "GET", "/api/search?q=(", None, None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::BAD_REQUEST, Some("syntax_error")));
    let (s, v) = call(&app, "GET", "/api/search?q=", None, None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::BAD_REQUEST, Some("empty_query")));
    let (s, _) = call(&app, "GET", "/api/search?q=x&page=two", None, None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn law_and_span_endpoints() {
    let app = app();
    let (s, v) = call(&app, "GET", "/api/laws/NY:%C2%A7%2010-1-1", None, None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["law"]["citation"]["raw"], "§ 10-1-1");
    assert!(v["spans"].as_array().unwrap().iter().all(|s| s["provenance"].is_string()));
    let (s, v) = call(&app, "GET", "/api/laws/XX:nothing", None, None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::NOT_FOUND, Some("not_found")));

    let (s, v) = call(&app, "GET", "/api/spans?label=SUBJECT", None, None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["groups"][0]["normalized_text"], "the trial court judge");
    assert_eq!(v["groups"][0]["count"], 2);
    let (s, v) = call(&app, "GET", "/api/spans?label=FOO", None, None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::BAD_REQUEST, Some("bad_label")));

    let (s, v) = call(&app, "GET", "/api/spans/subject/the%20trial%20court%20judge/laws", None, None).await;
    assert_eq!(s, StatusCode::OK);
    let cites: Vec<&str> = v["laws"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l["citation"].as_str().unwrap())
        .collect();
    assert_eq!(cites, vec!["§ 9-1-1", "§ 10-1-1"]);
    let (s, v) = call(&app, "GET", "/api/spans/SUBJECT/nobody/laws", None, None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_group")));
}

#[tokio::test]
async fn annotation_flow() {
    let app = app();
    let (s, v) = call(&app, "GET", "/api/stats", None, None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::UNAUTHORIZED, Some("unauthorized")));
    let (_, v) = call(&app, "GET", "/api/stats", Some("alice"), None).await;
    assert_eq!(v["tasks_completed"], 0);

    let (s, next) = call(&app, "POST", "/api/tasks/next", Some("alice"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(next["task"]["task_id"], 1);
    assert_eq!(next["pretags"].as_array().unwrap().len(), 1);
    let text = next["paragraph"]["text"].as_str().unwrap();
    assert!(text.starts_with("The trial court judge"));

    // only one task exists and alice already has it
    let (s, v) = call(&app, "POST", "/api/tasks/next", Some("alice"), None).await;
    assert_eq!((s, v), (StatusCode::NO_CONTENT, Value::Null));

    let bad = json!({"task_id": 1, "spans": [{"start": 0, "end": 3, "label": "SUBJECT", "text": "nope"}]});
    let (s, v) = call(&app, "POST", "/api/annotations", Some("alice"), Some(bad)).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::BAD_REQUEST, Some("invalid_spans")));

    let good =
        json!({"task_id": 1, "spans": [{"start": 0, "end": 21, "label": "SUBJECT", "text": "The trial court judge"}], "relations": []});
    let (s, v) = call(&app, "POST", "/api/annotations", Some("alice"), Some(good.clone())).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["completed"], 1);
    let (s, v) = call(&app, "POST", "/api/annotations", Some("alice"), Some(good.clone())).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::CONFLICT, Some("duplicate_submission")));
    let (s, v) = call(&app, "POST", "/api/annotations", Some("bob"), Some(good)).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::CONFLICT, Some("not_assigned")));

    let (_, v) = call(&app, "GET", "/api/stats", Some("alice"), None).await;
    assert_eq!(v["tasks_completed"], 1);

    let (_, law) = call(&app, "GET", "/api/laws/NY:%C2%A7%2010-1-1", None, None).await;
    let provs: Vec<&str> = law["spans"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["provenance"].as_str().unwrap())
        .collect();
    assert_eq!(provs, vec!["model", "human"]);
}

#[tokio::test]
async fn registry_auth_rejects_unknown_tokens() {
    let mut map = std::collections::HashMap::new();
    map.insert("secret-1".to_string(), "helper-1".to_string());
    let app = app_with(Auth::Registry(map));
    let (s, _) = call(&app, "GET", "/api/stats", Some("guess"), None).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    let (s, v) = call(&app, "GET", "/api/stats", Some("secret-1"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["helper_id"], "helper-1");
    let (s, _) = call(&app, "GET", "/api/nothing", None, None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}
