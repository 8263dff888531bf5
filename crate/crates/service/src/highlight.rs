//! Sentence segmentation and query-sentence highlighting.
//!
//! A sentence ends at `.`, `?` or `!` followed by whitespace (or the end of
//! the text). Fragments of fewer than three tokens are merged into the
//! following sentence; a short trailing fragment joins the one before it.
//! Each sentence is scored by embedding its tokens in the context of the
//! whole passage (a mean over that token sub-range) and taking the cosine
//! with the query embedding.

use std::ops::Range;

use finembed::corpus::Passage;
use finembed::encoder::{Embedding, EncoderModel, Role};
use finembed::text::{count_tokens, token_spans};
use finembed::Scalar;
use serde::{Deserialize, Serialize};

pub const MIN_SENTENCE_TOKENS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Highlight {
    /// Offsets in characters (Unicode scalar values) into the passage body.
    pub char_start: usize,
    pub char_end: usize,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HighlightParams {
    pub top_n: usize,
    pub min_score: f64,
}

impl Default for HighlightParams {
    fn default() -> Self {
        Self { top_n: 3, min_score: 0.0 }
    }
}

/// Byte ranges of the sentences of `text`, trimmed of surrounding whitespace.
pub fn sentences(text: &str) -> Vec<Range<usize>> {
    let mut raw = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '?' | '!') {
            let end = i + c.len_utf8();
            if chars.peek().is_none_or(|(_, n)| n.is_whitespace()) {
                raw.push(start..end);
                start = end;
            }
        }
    }
    if start < text.len() {
        raw.push(start..text.len());
    }

    let trim = |r: Range<usize>| -> Option<Range<usize>> {
        let s = &text[r.clone()];
        let lead = s.len() - s.trim_start().len();
        let t = s.trim();
        (!t.is_empty()).then(|| r.start + lead..r.start + lead + t.len())
    };

    let mut out: Vec<Range<usize>> = Vec::new();
    let mut pending: Option<usize> = None;
    for r in raw.into_iter().filter_map(trim) {
        let start = pending.take().unwrap_or(r.start);
        if count_tokens(&text[start..r.end]) < MIN_SENTENCE_TOKENS {
            pending = Some(start);
        } else {
            out.push(start..r.end);
        }
    }
    if let Some(start) = pending {
        match out.last_mut() {
            Some(last) => last.end = trim(start..text.len()).map_or(last.end, |t| t.end),
            None => out.extend(trim(start..text.len())),
        }
    }
    out
}

fn char_offset(text: &str, byte: usize) -> usize {
    text[..byte].chars().count()
}

/// Up to `top_n` sentences of `passage.body` scoring at least `min_score`
/// against `query`, as character spans in position order.
pub fn highlight<T: Scalar>(
    model: &EncoderModel<T>,
    query: &Embedding<T>,
    passage: &Passage,
    params: HighlightParams,
) -> Vec<Highlight> {
    let text = passage.embedding_text();
    let body_offset = model.prefix_len(Role::Passage) + count_tokens(&passage.context_line);
    let body_tokens = token_spans(&passage.body);

    let mut scored: Vec<(f64, Range<usize>)> = sentences(&passage.body)
        .into_iter()
        .filter_map(|s| {
            let first = body_tokens.iter().position(|t| t.start >= s.start)?;
            let count = body_tokens[first..].iter().take_while(|t| t.end <= s.end).count();
            if count == 0 {
                return None;
            }
            let span = model
                .encode_span(&text, body_offset + first..body_offset + first + count)
                .ok()?;
            Some((span.similarity(query).to_f64_lossy(), s))
        })
        .filter(|(score, _)| *score >= params.min_score)
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.start.cmp(&b.1.start)));
    scored.truncate(params.top_n);
    scored.sort_by_key(|(_, r)| r.start);
    scored
        .into_iter()
        .map(|(score, r)| Highlight {
            char_start: char_offset(&passage.body, r.start),
            char_end: char_offset(&passage.body, r.end),
            score,
        })
        .collect()
}
