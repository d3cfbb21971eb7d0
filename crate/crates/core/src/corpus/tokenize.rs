use super::Token;

/// Splits `text` into maximal alphanumeric runs and single punctuation or
/// symbol characters. Whitespace separates tokens and is never part of one.
/// Offsets are char indices.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut run: Option<(usize, String)> = None;

    for (i, c) in text.chars().enumerate() {
        if c.is_alphanumeric() {
            match run.as_mut() {
                Some((_, s)) => s.push(c),
                None => run = Some((i, c.to_string())),
            }
            continue;
        }
        if let Some((start, surface)) = run.take() {
            tokens.push(Token { start, end: i, surface });
        }
        if !c.is_whitespace() {
            tokens.push(Token {
                start: i,
                end: i + 1,
                surface: c.to_string(),
            });
        }
    }
    if let Some((start, surface)) = run {
        let end = start + surface.chars().count();
        tokens.push(Token { start, end, surface });
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triples(text: &str) -> Vec<(&'static str, usize, usize)> {
        tokenize(text)
            .into_iter()
            .map(|t| (&*Box::leak(t.surface.into_boxed_str()), t.start, t.end))
            .collect()
    }

    #[test]
    fn empty_text() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \n\t ").is_empty());
    }

    #[test]
    fn population_phrase_offsets() {
        // offsets counted by hand
        assert_eq!(
            triples("counties having a population above 10,000"),
            vec![
                ("counties", 0, 8),
                ("having", 9, 15),
                ("a", 16, 17),
                ("population", 18, 28),
                ("above", 29, 34),
                ("10", 35, 37),
                (",", 37, 38),
                ("000", 38, 41),
            ]
        );
    }

    #[test]
    fn section_sign_citation() {
        let surfaces: Vec<_> = tokenize("§ 36-5-402").into_iter().map(|t| t.surface).collect();
        assert_eq!(surfaces, vec!["§", "36", "-", "5", "-", "402"]);
    }

    #[test]
    fn offsets_are_chars_not_bytes() {
        let toks = tokenize("é § naïve");
        assert_eq!(toks[2].surface, "naïve");
        assert_eq!((toks[2].start, toks[2].end), (4, 9));
    }
}
