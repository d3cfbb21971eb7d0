//! Self-contained HTML task pages for crowdsourcing marketplaces.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DiscourseLabel, DiscourseSpan};

const SCRIPT: &str = include_str!("../../assets/annotator.js");
const STYLE: &str = include_str!("../../assets/annotator.css");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ButtonConfig {
    pub label: DiscourseLabel,
    pub color: String,
}

/// Annotator configuration shared by the static pages and the web UI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct UiConfig {
    pub page_height: u32,
    pub buttons: Vec<ButtonConfig>,
    pub relations: Vec<String>,
    /// Show model spans for correction.
    pub pretag: bool,
    /// API base path, or `"static"` for marketplace pages.
    pub endpoint: String,
}

impl Default for UiConfig {
    fn default() -> Self {
        let button = |label, color: &str| ButtonConfig {
            label,
            color: color.to_string(),
        };
        UiConfig {
            page_height: 400,
            buttons: vec![
                button(DiscourseLabel::Subject, "#9be29b"),
                button(DiscourseLabel::Consequence, "#c9a6e8"),
                button(DiscourseLabel::Object, "#8fe3ea"),
                button(DiscourseLabel::Probe, "#f5a9c9"),
                button(DiscourseLabel::Test, "#f4e77a"),
            ],
            relations: vec!["relates".into()],
            pretag: false,
            endpoint: "static".into(),
        }
    }
}

impl UiConfig {
    pub fn validate(&self) -> Result<(), PageError> {
        if self.buttons.is_empty() {
            return Err(PageError::InvalidConfig("no label buttons".into()));
        }
        let mut colors = HashSet::new();
        for b in &self.buttons {
            if !colors.insert(b.color.to_lowercase()) {
                return Err(PageError::InvalidConfig(format!("color {} used twice", b.color)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PageError {
    #[error("paragraph text is empty")]
    EmptyParagraph,
    #[error("ui config: {0}")]
    InvalidConfig(String),
}

/// The paragraph a page is built for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskPage {
    pub task_id: u64,
    pub doc_id: String,
    pub paragraph_index: usize,
    pub text: String,
    #[serde(default)]
    pub pretags: Vec<DiscourseSpan>,
}

fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            // keeps URLs in statute text from reading as references
            '/' => out.push_str("&#47;"),
            c => out.push(c),
        }
    }
    out
}

/// Compiles one HTML document with the script, style, paragraph text and
/// configuration inlined. Answers are posted in the form field
/// `annotations` as `{"task_id", "spans", "relations"}` JSON. The output
/// references nothing outside itself and depends only on the inputs.
pub fn compile_static_task_page(page: &TaskPage, config: &UiConfig) -> Result<String, PageError> {
    if page.text.trim().is_empty() {
        return Err(PageError::EmptyParagraph);
    }
    config.validate()?;
    let data = serde_json::json!({
        "task_id": page.task_id,
        "doc_id": page.doc_id,
        "paragraph_index": page.paragraph_index,
        "text": page.text,
        "pretags": page.pretags,
        "config": config,
    });
    // these only occur inside JSON strings, where the escapes are valid; no
    // tag, comment or scheme-qualified URL can appear in the blob
    let blob = data
        .to_string()
        .replace('/', "\\/")
        .replace('<', "\\u003c")
        .replace('>', "\\u003e")
        .replace('&', "\\u0026");
    let title = escape_html(&format!("Annotate {} paragraph {}", page.doc_id, page.paragraph_index));

    let mut html = String::new();
    html.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    html.push_str(&format!("<title>{title}</title>\n"));
    html.push_str(&format!("<style>\n{STYLE}</style>\n</head>\n<body>\n"));
    html.push_str(&format!("<h1>{title}</h1>\n"));
    html.push_str("<p>Highlight a phrase, then press a label. Right-click two highlights to relate them; alt-click removes one.</p>\n");
    html.push_str("<div id=\"buttons\"></div>\n");
    html.push_str(&format!("<div id=\"paragraph\">{}</div>\n", escape_html(&page.text)));
    html.push_str("<div id=\"relations\"></div>\n<div id=\"status\"></div>\n");
    html.push_str("<form id=\"answer-form\" method=\"post\">\n");
    html.push_str("<input type=\"hidden\" name=\"assignmentId\" value=\"\">\n");
    html.push_str(&format!("<input type=\"hidden\" name=\"task_id\" value=\"{}\">\n", page.task_id));
    html.push_str("<input type=\"hidden\" name=\"annotations\" value=\"\">\n");
    html.push_str("<button id=\"submit\" type=\"submit\">Submit</button>\n</form>\n");
    html.push_str(&format!("<script type=\"application/json\" id=\"task-data\">{blob}</script>\n"));
    html.push_str(&format!("<script>\n{SCRIPT}</script>\n</body>\n</html>\n"));
    Ok(html)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn page(text: &str) -> TaskPage {
        TaskPage {
            task_id: 7,
            doc_id: "TN:§ 36-5-402".into(),
            paragraph_index: 0,
            text: text.into(),
            pretags: vec![],
        }
    }

    #[test]
    fn self_contained_and_deterministic() {
        let p = page("Counties <over> 10,000 & see https://example.org/x </script>");
        let a = compile_static_task_page(&p, &UiConfig::default()).unwrap();
        let b = compile_static_task_page(&p, &UiConfig::default()).unwrap();
        assert_eq!(a, b);
        assert!(!a.contains("http://") && !a.contains("https://"));
        assert_eq!(a.matches("</script>").count(), 2);
        assert!(!a.contains(" src=") && !a.contains(" href="));
        assert!(a.contains("name=\"annotations\""));
        assert!(a.contains("Counties &lt;over&gt; 10,000 &amp; see"));
    }

    #[test]
    fn embedded_text_round_trips() {
        let text = "Population \"above\" 10,000 — naïve / ok <!-- <script> & more";
        let html = compile_static_task_page(&page(text), &UiConfig::default()).unwrap();
        let start = html.find("id=\"task-data\">").unwrap() + "id=\"task-data\">".len();
        let end = start + html[start..].find("</script>").unwrap();
        let v: serde_json::Value = serde_json::from_str(&html[start..end]).unwrap();
        assert_eq!(v["text"], text);
        assert_eq!(html.matches("<script").count(), 2);
        assert_eq!(v["config"]["buttons"][4]["label"], "TEST");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            compile_static_task_page(&page("  "), &UiConfig::default()),
            Err(PageError::EmptyParagraph)
        ));
        let mut cfg = UiConfig::default();
        cfg.buttons[1].color = cfg.buttons[0].color.to_uppercase();
        assert!(matches!(
            compile_static_task_page(&page("x"), &cfg),
            Err(PageError::InvalidConfig(_))
        ));
    }
}
