//! Query language: bare terms, `"quoted phrases"`, `name:value` facet
//! filters, parentheses, `AND` and `OR` (case-insensitive). Adjacent items
//! are ANDed; AND binds tighter than OR.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::tokenize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueryAst {
    Term(String),
    Phrase(Vec<String>),
    And(Vec<QueryAst>),
    Or(Vec<QueryAst>),
    FacetFilter { name: String, value: String },
}

impl QueryAst {
    pub fn facet(name: &str, value: &str) -> Self {
        QueryAst::FacetFilter {
            name: name.to_string(),
            value: value.to_string(),
        }
    }

    /// Words that contribute to ranking, in first-seen order, deduplicated.
    pub fn scoring_terms(&self) -> Vec<String> {
        fn walk(q: &QueryAst, out: &mut Vec<String>) {
            match q {
                QueryAst::Term(t) => push(out, t),
                QueryAst::Phrase(ws) => ws.iter().for_each(|w| push(out, w)),
                QueryAst::And(cs) | QueryAst::Or(cs) => cs.iter().for_each(|c| walk(c, out)),
                QueryAst::FacetFilter { .. } => {}
            }
        }
        fn push(out: &mut Vec<String>, t: &str) {
            if !out.iter().any(|x| x == t) {
                out.push(t.to_string());
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// AND of two queries, flattening nested ANDs.
    pub fn and(self, other: QueryAst) -> QueryAst {
        let mut children = Vec::new();
        for q in [self, other] {
            match q {
                QueryAst::And(cs) => children.extend(cs),
                q => children.push(q),
            }
        }
        QueryAst::And(children)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("empty query")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
enum Lexeme {
    Open,
    Close,
    And,
    Or,
    Quoted(String),
    Word(String),
}

fn syntax(position: usize, message: impl Into<String>) -> QueryError {
    QueryError::Syntax {
        position,
        message: message.into(),
    }
}

fn lex(q: &str) -> Result<Vec<(usize, Lexeme)>, QueryError> {
    let chars: Vec<char> = q.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '(' {
            out.push((i, Lexeme::Open));
            i += 1;
        } else if c == ')' {
            out.push((i, Lexeme::Close));
            i += 1;
        } else if c == '"' {
            let start = i;
            i += 1;
            let mut s = String::new();
            while i < chars.len() && chars[i] != '"' {
                s.push(chars[i]);
                i += 1;
            }
            if i == chars.len() {
                return Err(syntax(start, "unterminated quote"));
            }
            i += 1;
            out.push((start, Lexeme::Quoted(s)));
        } else {
            let start = i;
            let mut s = String::new();
            while i < chars.len() && !chars[i].is_whitespace() && !matches!(chars[i], '(' | ')' | '"') {
                s.push(chars[i]);
                i += 1;
            }
            let lexeme = if s.eq_ignore_ascii_case("and") {
                Lexeme::And
            } else if s.eq_ignore_ascii_case("or") {
                Lexeme::Or
            } else {
                Lexeme::Word(s)
            };
            out.push((start, lexeme));
        }
    }
    Ok(out)
}

struct Parser {
    lexemes: Vec<(usize, Lexeme)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Lexeme> {
        self.lexemes.get(self.pos).map(|(_, l)| l)
    }

    fn here(&self) -> usize {
        self.lexemes.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn or_expr(&mut self) -> Result<QueryAst, QueryError> {
        let mut children = vec![self.and_expr()?];
        while self.peek() == Some(&Lexeme::Or) {
            self.pos += 1;
            children.push(self.and_expr()?);
        }
        Ok(collapse(children, QueryAst::Or))
    }

    fn and_expr(&mut self) -> Result<QueryAst, QueryError> {
        let mut children = vec![self.primary()?];
        loop {
            match self.peek() {
                Some(Lexeme::And) => {
                    self.pos += 1;
                    children.push(self.primary()?);
                }
                Some(Lexeme::Open | Lexeme::Quoted(_) | Lexeme::Word(_)) => children.push(self.primary()?),
                _ => break,
            }
        }
        Ok(collapse(children, QueryAst::And))
    }

    fn primary(&mut self) -> Result<QueryAst, QueryError> {
        let at = self.here();
        let Some((_, lexeme)) = self.lexemes.get(self.pos).cloned() else {
            return Err(syntax(at, "expected a term"));
        };
        self.pos += 1;
        match lexeme {
            Lexeme::Open => {
                let inner = self.or_expr()?;
                if self.peek() != Some(&Lexeme::Close) {
                    return Err(syntax(self.here(), "expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Lexeme::Quoted(s) => {
                let words = words_of(&s);
                match words.len() {
                    0 => Err(syntax(at, "empty phrase")),
                    1 => Ok(QueryAst::Term(words.into_iter().next().unwrap_or_default())),
                    _ => Ok(QueryAst::Phrase(words)),
                }
            }
            Lexeme::Word(w) => {
                if let Some((name, value)) = w.split_once(':') {
                    if !name.is_empty() && !value.is_empty() {
                        return Ok(QueryAst::facet(&name.to_lowercase(), value));
                    }
                }
                let words = words_of(&w);
                match words.len() {
                    1 => Ok(QueryAst::Term(words.into_iter().next().unwrap_or_default())),
                    _ => Ok(QueryAst::Phrase(words)),
                }
            }
            Lexeme::Close => Err(syntax(at, "unexpected `)`")),
            Lexeme::And | Lexeme::Or => Err(syntax(at, "operator without a left operand")),
        }
    }
}

fn words_of(s: &str) -> Vec<String> {
    tokenize(s).into_iter().map(|t| t.surface.to_lowercase()).collect()
}

fn collapse(mut children: Vec<QueryAst>, make: fn(Vec<QueryAst>) -> QueryAst) -> QueryAst {
    if children.len() == 1 {
        return children.pop().expect("one child");
    }
    let mut flat = Vec::with_capacity(children.len());
    for c in children {
        match (make(Vec::new()), c) {
            (QueryAst::And(_), QueryAst::And(cs)) | (QueryAst::Or(_), QueryAst::Or(cs)) => flat.extend(cs),
            (_, c) => flat.push(c),
        }
    }
    make(flat)
}

pub fn parse_query(q: &str) -> Result<QueryAst, QueryError> {
    let lexemes = lex(q)?;
    if lexemes.is_empty() {
        return Err(QueryError::Empty);
    }
    let mut p = Parser {
        lexemes,
        pos: 0,
        end: q.chars().count(),
    };
    let ast = p.or_expr()?;
    if p.pos < p.lexemes.len() {
        return Err(syntax(p.here(), "unexpected input"));
    }
    Ok(ast)
}

#[cfg(test)]
mod tests {
    use super::*;
    use QueryAst::*;

    fn term(s: &str) -> QueryAst {
        Term(s.into())
    }

    #[test]
    fn or_of_three_terms() {
        assert_eq!(
            parse_query("alcohol OR liquor OR beverage").unwrap(),
            Or(vec![term("alcohol"), term("liquor"), term("beverage")])
        );
    }

    #[test]
    fn phrase_and_facet() {
        assert_eq!(
            parse_query("\"federal census\" state:TN").unwrap(),
            And(vec![
                Phrase(vec!["federal".into(), "census".into()]),
                QueryAst::facet("state", "TN")
            ])
        );
    }

    #[test]
    fn precedence_and_grouping() {
        assert_eq!(
            parse_query("a b or c").unwrap(),
            Or(vec![And(vec![term("a"), term("b")]), term("c")])
        );
        assert_eq!(
            parse_query("a AND (b OR c)").unwrap(),
            And(vec![term("a"), Or(vec![term("b"), term("c")])])
        );
        assert_eq!(parse_query("((Liquor))").unwrap(), term("liquor"));
        assert_eq!(parse_query("(a b) c").unwrap(), And(vec![term("a"), term("b"), term("c")]));
    }

    #[test]
    fn punctuated_words_become_phrases() {
        assert_eq!(parse_query("10,000").unwrap(), Phrase(vec!["10".into(), ",".into(), "000".into()]));
        assert_eq!(parse_query("\"judge\"").unwrap(), term("judge"));
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(parse_query("(a OR"), Err(QueryError::Syntax { .. })));
        assert!(matches!(parse_query("("), Err(QueryError::Syntax { position: 1, .. })));
        assert!(matches!(parse_query("a)"), Err(QueryError::Syntax { position: 1, .. })));
        assert!(matches!(parse_query("\"open"), Err(QueryError::Syntax { position: 0, .. })));
        assert!(matches!(parse_query("OR a"), Err(QueryError::Syntax { .. })));
        assert!(matches!(parse_query("a OR"), Err(QueryError::Syntax { .. })));
        assert!(matches!(parse_query("\"  \""), Err(QueryError::Syntax { .. })));
        assert_eq!(parse_query("   "), Err(QueryError::Empty));
    }

    #[test]
    fn scoring_terms_skip_facets() {
        let q = parse_query("\"federal census\" census state:TN").unwrap();
        assert_eq!(q.scoring_terms(), vec!["federal".to_string(), "census".to_string()]);
    }
}
