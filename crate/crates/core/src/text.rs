//! Word-level tokenization shared by passage splitting, the encoder vocabulary
//! and the lexical analyzer.
//!
//! A token is a maximal run of alphanumeric characters, lowercased. Everything
//! else separates tokens, so `price-to-earnings` is three tokens and `FY24`
//! is one.

use std::ops::Range;

/// Byte ranges of the tokens in `text`, in order.
pub fn token_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            spans.push(s..i);
        }
    }
    if let Some(s) = start {
        spans.push(s..text.len());
    }
    spans
}

/// Lowercased token strings.
pub fn words(text: &str) -> Vec<String> {
    token_spans(text)
        .into_iter()
        .map(|r| text[r].to_lowercase())
        .collect()
}

/// Number of tokens without allocating the strings.
pub fn count_tokens(text: &str) -> usize {
    let mut n = 0;
    let mut in_token = false;
    for c in text.chars() {
        let alnum = c.is_alphanumeric();
        if alnum && !in_token {
            n += 1;
        }
        in_token = alnum;
    }
    n
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Seeded FNV-1a. Stable across platforms and releases, unlike `DefaultHasher`.
pub fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET ^ seed.wrapping_mul(FNV_PRIME);
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    // final avalanche so that nearby seeds give unrelated buckets
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h
}

/// Maps tokens to hash buckets of a fixed-size vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tokenizer {
    pub vocab_size: usize,
    pub seed: u64,
}

impl Tokenizer {
    pub fn new(vocab_size: usize, seed: u64) -> Self {
        assert!(vocab_size > 0, "vocabulary must be non-empty");
        Self { vocab_size, seed }
    }

    pub fn bucket(&self, word: &str) -> u32 {
        (fnv1a(self.seed, word.as_bytes()) % self.vocab_size as u64) as u32
    }

    /// Token ids of `text`. Empty for whitespace-only or punctuation-only text.
    pub fn tokenize(&self, text: &str) -> Vec<u32> {
        token_spans(text)
            .into_iter()
            .map(|r| self.bucket(&text[r].to_lowercase()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyphenated_words_split() {
        assert_eq!(words("price-to-earnings"), vec!["price", "to", "earnings"]);
    }

    #[test]
    fn digit_runs_are_kept() {
        assert_eq!(words("EPS of $1.42, FY24"), vec!["eps", "of", "1", "42", "fy24"]);
    }

    #[test]
    fn case_insensitive_ids() {
        let t = Tokenizer::new(32768, 7);
        assert_eq!(t.tokenize("EPS"), t.tokenize("eps"));
        let a = t.tokenize("Acme EPS");
        assert_eq!(a.len(), 2);
        assert_eq!(a, Tokenizer::new(32768, 7).tokenize("Acme EPS"));
    }

    #[test]
    fn whitespace_only_is_empty() {
        let t = Tokenizer::new(100, 0);
        assert!(t.tokenize("  \n\t ").is_empty());
        assert_eq!(count_tokens(" -- "), 0);
    }

    #[test]
    fn count_matches_spans() {
        let s = "Q3: revenue grew 12% (ACME) — résumé naïve";
        assert_eq!(count_tokens(s), token_spans(s).len());
    }

    #[test]
    fn seeds_are_independent() {
        assert_ne!(fnv1a(0, b"eps"), fnv1a(1, b"eps"));
        assert_ne!(fnv1a(0, b"eps"), fnv1a(0, b"ebit"));
    }
}
