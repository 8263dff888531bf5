//! Document ingestion, boilerplate removal and passage splitting.
//!
//! Input is plain text (one JSON document per line). Each document body is
//! cleaned, split into passages bounded by a token budget, and every passage
//! carries a one-line context header built by [`make_context_line`]. The same
//! header is used when generating queries, training and serving, through
//! [`Passage::embedding_text`].

use std::collections::HashSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{count_tokens, token_spans};

pub const DEFAULT_MAX_PASSAGE_TOKENS: usize = 512;
pub const MIN_PASSAGE_TOKENS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocType {
    Transcript,
    CompanyReport,
    BrokerResearch,
    News,
    Other,
}

impl DocType {
    pub const ALL: [DocType; 5] = [
        DocType::Transcript,
        DocType::CompanyReport,
        DocType::BrokerResearch,
        DocType::News,
        DocType::Other,
    ];

    /// Snake-case identifier, also used as a filter tag.
    pub fn as_str(self) -> &'static str {
        match self {
            DocType::Transcript => "transcript",
            DocType::CompanyReport => "company_report",
            DocType::BrokerResearch => "broker_research",
            DocType::News => "news",
            DocType::Other => "other",
        }
    }

    /// Human-readable label used in context lines.
    pub fn label(self) -> &'static str {
        match self {
            DocType::Transcript => "transcript",
            DocType::CompanyReport => "company report",
            DocType::BrokerResearch => "broker research",
            DocType::News => "news",
            DocType::Other => "other",
        }
    }
}

impl fmt::Display for DocType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DocType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        DocType::ALL
            .into_iter()
            .find(|t| t.as_str() == norm)
            .ok_or_else(|| Error::InvalidField {
                field: "doc_type",
                reason: format!("unknown document type {s:?}"),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub doc_type: DocType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub company_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ticker: Option<String>,
    pub date: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<String>,
    pub filename: String,
    pub body: String,
}

/// A document record as it appears in the input JSONL, before validation.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: Option<String>,
    pub doc_type: Option<String>,
    pub company_name: Option<String>,
    pub ticker: Option<String>,
    pub date: Option<String>,
    pub event: Option<String>,
    pub filename: Option<String>,
    pub body: Option<String>,
}

impl From<&Document> for RawDocument {
    fn from(d: &Document) -> Self {
        RawDocument {
            id: Some(d.id.clone()),
            doc_type: Some(d.doc_type.as_str().to_owned()),
            company_name: d.company_name.clone(),
            ticker: d.ticker.clone(),
            date: Some(d.date.format("%Y-%m-%d").to_string()),
            event: d.event.clone(),
            filename: Some(d.filename.clone()),
            body: Some(d.body.clone()),
        }
    }
}

/// Unifies line endings and drops control characters other than `\n`/`\t`.
pub fn normalize_text(text: &str) -> String {
    text.replace("\r\n", "\n")
        .replace('\r', "\n")
        .chars()
        .filter(|c| !c.is_control() || *c == '\n' || *c == '\t')
        .collect()
}

fn non_empty(v: Option<String>) -> Option<String> {
    v.map(|s| s.trim().to_owned()).filter(|s| !s.is_empty())
}

/// Validates and normalizes a single record.
pub fn ingest(record: RawDocument) -> Result<Document> {
    let id = non_empty(record.id).ok_or(Error::MissingField("id"))?;
    let date_raw = non_empty(record.date).ok_or(Error::MissingField("date"))?;
    let body = record.body.ok_or(Error::MissingField("body"))?;
    let doc_type: DocType = non_empty(record.doc_type)
        .ok_or(Error::MissingField("doc_type"))?
        .parse()?;
    let date = NaiveDate::parse_from_str(&date_raw, "%Y-%m-%d").map_err(|e| Error::InvalidField {
        field: "date",
        reason: format!("{date_raw:?}: {e}"),
    })?;
    let filename = non_empty(record.filename).unwrap_or_else(|| id.clone());
    Ok(Document {
        id,
        doc_type,
        company_name: non_empty(record.company_name),
        ticker: non_empty(record.ticker),
        date,
        event: non_empty(record.event),
        filename,
        body: normalize_text(&body),
    })
}

/// Collection of ingested documents with unique ids.
#[derive(Debug, Default, Clone)]
pub struct Corpus {
    docs: Vec<Document>,
    ids: HashSet<String>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ingest(&mut self, record: RawDocument) -> Result<&Document> {
        let doc = ingest(record)?;
        if !self.ids.insert(doc.id.clone()) {
            return Err(Error::DuplicateId(doc.id));
        }
        self.docs.push(doc);
        Ok(self.docs.last().expect("just pushed"))
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn into_documents(self) -> Vec<Document> {
        self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoilerplateAction {
    /// Remove the matching line only.
    DropLine,
    /// Remove the matching line and every following line up to the next blank line.
    DropBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoilerplateRuleSpec {
    pub pattern: String,
    pub action: BoilerplateAction,
}

/// Lines are treated as table rows when more than `min_ratio` of their
/// non-whitespace characters are digits or table punctuation, and are dropped
/// when at least `min_run` such lines are consecutive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableHeuristic {
    pub min_ratio: f64,
    pub min_run: usize,
}

impl Default for TableHeuristic {
    fn default() -> Self {
        Self {
            min_ratio: 0.6,
            min_run: 3,
        }
    }
}

impl TableHeuristic {
    pub fn is_table_line(&self, line: &str) -> bool {
        let mut total = 0usize;
        let mut tabular = 0usize;
        for c in line.chars().filter(|c| !c.is_whitespace()) {
            total += 1;
            if c.is_ascii_digit() || matches!(c, '|' | '\t' | '%' | '$') {
                tabular += 1;
            }
        }
        total > 0 && tabular as f64 > self.min_ratio * total as f64
    }
}

/// Compiled, ordered boilerplate rules.
#[derive(Debug, Clone)]
pub struct BoilerplateRules {
    rules: Vec<(Regex, BoilerplateAction)>,
    table: Option<TableHeuristic>,
}

impl BoilerplateRules {
    pub fn compile(specs: &[BoilerplateRuleSpec], table: Option<TableHeuristic>) -> Result<Self> {
        let rules = specs
            .iter()
            .map(|s| {
                Regex::new(&s.pattern)
                    .map(|re| (re, s.action))
                    .map_err(|e| Error::Config(format!("bad boilerplate pattern {:?}: {e}", s.pattern)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rules, table })
    }

    /// No rules and no table heuristic.
    pub fn none() -> Self {
        Self {
            rules: Vec::new(),
            table: None,
        }
    }

    pub fn default_specs() -> Vec<BoilerplateRuleSpec> {
        use BoilerplateAction::*;
        [
            (r"(?i)^\s*(important|legal|required)\s+disclosures?\b", DropBlock),
            (r"(?i)^\s*(disclaimer|analyst certification)\b", DropBlock),
            (r"(?i)^\s*page\s+\d+\s+of\s+\d+\s*$", DropLine),
            (r"(?i)all rights reserved", DropLine),
            (r"(?i)^\s*this (report|document) (is|has been) (prepared|provided) (solely )?for information", DropLine),
        ]
        .into_iter()
        .map(|(p, a)| BoilerplateRuleSpec {
            pattern: p.to_owned(),
            action: a,
        })
        .collect()
    }

    pub fn strip(&self, text: &str) -> String {
        strip_boilerplate(text, self)
    }
}

impl Default for BoilerplateRules {
    fn default() -> Self {
        Self::compile(&Self::default_specs(), Some(TableHeuristic::default()))
            .expect("built-in patterns compile")
    }
}

/// Removes lines and blocks matched by `rules`, then table-like runs.
/// Idempotent: `strip(strip(x)) == strip(x)`.
pub fn strip_boilerplate(text: &str, rules: &BoilerplateRules) -> String {
    let mut kept: Vec<&str> = Vec::new();
    let mut in_block = false;
    for line in text.split('\n') {
        if in_block {
            if line.trim().is_empty() {
                in_block = false;
                kept.push(line);
            }
            continue;
        }
        match rules.rules.iter().find(|(re, _)| re.is_match(line)) {
            Some((_, BoilerplateAction::DropLine)) => {}
            Some((_, BoilerplateAction::DropBlock)) => in_block = true,
            None => kept.push(line),
        }
    }

    if let Some(table) = rules.table {
        let flags: Vec<bool> = kept.iter().map(|l| table.is_table_line(l)).collect();
        let mut drop = vec![false; kept.len()];
        let mut i = 0;
        while i < flags.len() {
            if !flags[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i < flags.len() && flags[i] {
                i += 1;
            }
            if i - start >= table.min_run {
                drop[start..i].iter_mut().for_each(|d| *d = true);
            }
        }
        kept = kept
            .into_iter()
            .zip(drop)
            .filter_map(|(l, d)| (!d).then_some(l))
            .collect();
    }
    kept.join("\n")
}

/// One line of document context prepended to every passage.
///
/// Transcripts: `<company> (<ticker>) | <event> | <date>`. Other types:
/// `<type label> | <company or filename> | <date>`. Missing fields are
/// omitted together with their delimiter.
pub fn make_context_line(doc: &Document) -> String {
    let one_line = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
    let date = doc.date.format("%Y-%m-%d").to_string();
    let company = doc.company_name.as_deref().map(one_line);
    let ticker = doc.ticker.as_deref().map(one_line);
    let mut parts: Vec<String> = Vec::with_capacity(3);
    match doc.doc_type {
        DocType::Transcript => {
            match (company, ticker) {
                (Some(c), Some(t)) => parts.push(format!("{c} ({t})")),
                (Some(c), None) => parts.push(c),
                (None, Some(t)) => parts.push(format!("({t})")),
                (None, None) => {}
            }
            if let Some(e) = doc.event.as_deref() {
                parts.push(one_line(e));
            }
        }
        other => {
            parts.push(other.label().to_owned());
            let who = company.unwrap_or_else(|| one_line(&doc.filename));
            if !who.is_empty() {
                parts.push(who);
            }
        }
    }
    parts.push(date);
    parts.retain(|p| !p.is_empty());
    parts.join(" | ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    pub doc_id: String,
    pub ordinal: usize,
    pub context_line: String,
    pub body: String,
    pub token_count: usize,
}

impl Passage {
    /// Text that is embedded, indexed and shown to the query generator.
    pub fn embedding_text(&self) -> String {
        format!("{}\n{}", self.context_line, self.body)
    }

    pub fn passage_id(doc_id: &str, ordinal: usize) -> String {
        format!("{doc_id}#{ordinal}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub max_tokens: usize,
    pub separators: Vec<String>,
    /// Keep a transcript line ending in `?` together with the following segment.
    pub bind_questions: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            max_tokens: DEFAULT_MAX_PASSAGE_TOKENS,
            separators: ["\n\n", "\n", ". ", " "].map(String::from).to_vec(),
            bind_questions: true,
        }
    }
}

impl SplitConfig {
    pub fn with_max_tokens(max_tokens: usize) -> Self {
        Self {
            max_tokens,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_tokens < MIN_PASSAGE_TOKENS {
            return Err(Error::Config(format!(
                "max_tokens must be at least {MIN_PASSAGE_TOKENS}, got {}",
                self.max_tokens
            )));
        }
        if let Some(bad) = self
            .separators
            .iter()
            .find(|s| s.is_empty() || s.chars().any(char::is_alphanumeric))
        {
            return Err(Error::Config(format!(
                "separator {bad:?} must be non-empty and contain no alphanumeric characters"
            )));
        }
        Ok(())
    }
}

/// Recorded when a segment without any separator had to be cut mid-stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitWarning {
    pub doc_id: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitOutput {
    pub passages: Vec<Passage>,
    pub warnings: Vec<SplitWarning>,
}

struct Piece {
    range: Range<usize>,
    tokens: usize,
    question: bool,
}

/// Splits `doc.body` into passages of at most `cfg.max_tokens` tokens,
/// counting both the context line and the body.
pub fn split_passages(doc: &Document, cfg: &SplitConfig) -> Result<SplitOutput> {
    cfg.validate()?;
    let context_line = make_context_line(doc);
    let context_tokens = count_tokens(&context_line);
    let budget = cfg.max_tokens.checked_sub(context_tokens).filter(|b| *b > 0).ok_or_else(|| {
        Error::Config(format!(
            "context line of {} uses {context_tokens} tokens, leaving no room under max_tokens={}",
            doc.id, cfg.max_tokens
        ))
    })?;

    let body = doc.body.as_str();
    let mut warnings = Vec::new();
    let mut ranges = Vec::new();
    split_range(body, 0..body.len(), &cfg.separators, budget, &mut ranges, &mut |msg| {
        warnings.push(SplitWarning {
            doc_id: doc.id.clone(),
            message: msg,
        })
    });

    let is_transcript = doc.doc_type == DocType::Transcript;
    let pieces: Vec<Piece> = ranges
        .into_iter()
        .map(|range| {
            let text = &body[range.clone()];
            Piece {
                tokens: count_tokens(text),
                question: cfg.bind_questions && is_transcript && text.trim_end().ends_with('?'),
                range,
            }
        })
        .collect();

    let mut chunks: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut current_tokens = 0usize;
    for (i, piece) in pieces.iter().enumerate() {
        if current.is_empty() || current_tokens + piece.tokens <= budget {
            current.push(i);
            current_tokens += piece.tokens;
            continue;
        }
        let last = *current.last().expect("non-empty");
        if current.len() > 1 && pieces[last].question && pieces[last].tokens + piece.tokens <= budget {
            current.pop();
            chunks.push(std::mem::take(&mut current));
            current = vec![last, i];
            current_tokens = pieces[last].tokens + piece.tokens;
        } else {
            chunks.push(std::mem::take(&mut current));
            current.push(i);
            current_tokens = piece.tokens;
        }
    }
    if !current.is_empty() {
        chunks.push(current);
    }

    let passages = chunks
        .into_iter()
        .map(|idx| {
            let start = pieces[idx[0]].range.start;
            let end = pieces[*idx.last().expect("non-empty")].range.end;
            body[start..end].trim().to_owned()
        })
        .filter(|b| !b.is_empty())
        .enumerate()
        .map(|(ordinal, b)| Passage {
            id: Passage::passage_id(&doc.id, ordinal),
            doc_id: doc.id.clone(),
            ordinal,
            token_count: context_tokens + count_tokens(&b),
            context_line: context_line.clone(),
            body: b,
        })
        .collect();
    Ok(SplitOutput { passages, warnings })
}

fn split_range(
    text: &str,
    range: Range<usize>,
    separators: &[String],
    budget: usize,
    out: &mut Vec<Range<usize>>,
    warn: &mut dyn FnMut(String),
) {
    let slice = &text[range.clone()];
    if slice.trim().is_empty() {
        return;
    }
    if count_tokens(slice) <= budget {
        out.push(range);
        return;
    }
    let Some(pos) = separators.iter().position(|s| slice.contains(s.as_str())) else {
        hard_truncate(text, range, budget, out, warn);
        return;
    };
    let sep = separators[pos].as_str();
    let rest = &separators[pos + 1..];
    let mut start = range.start;
    for (off, _) in slice.match_indices(sep) {
        let end = range.start + off;
        split_range(text, start..end, rest, budget, out, warn);
        start = end + sep.len();
    }
    split_range(text, start..range.end, rest, budget, out, warn);
}

fn hard_truncate(
    text: &str,
    range: Range<usize>,
    budget: usize,
    out: &mut Vec<Range<usize>>,
    warn: &mut dyn FnMut(String),
) {
    let spans = token_spans(&text[range.clone()]);
    warn(format!(
        "segment at bytes {}..{} has {} tokens and no separator; cut into {}-token windows",
        range.start,
        range.end,
        spans.len(),
        budget
    ));
    for window in spans.chunks(budget) {
        let s = range.start + window[0].start;
        let e = range.start + window[window.len() - 1].end;
        out.push(s..e);
    }
}

/// Cleans and splits every document. Order of the output follows the input.
pub fn build_passages(
    docs: &[Document],
    rules: &BoilerplateRules,
    cfg: &SplitConfig,
) -> Result<SplitOutput> {
    let per_doc: Vec<Result<SplitOutput>> = docs
        .par_iter()
        .map(|d| {
            let cleaned = Document {
                body: strip_boilerplate(&d.body, rules),
                ..d.clone()
            };
            split_passages(&cleaned, cfg)
        })
        .collect();
    let mut out = SplitOutput::default();
    for r in per_doc {
        let r = r?;
        out.passages.extend(r.passages);
        out.warnings.extend(r.warnings);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(doc_type: DocType, body: &str) -> Document {
        Document {
            id: "d1".into(),
            doc_type,
            company_name: Some("Acme Corp".into()),
            ticker: Some("ACME".into()),
            date: NaiveDate::from_ymd_opt(2023, 5, 1).unwrap(),
            event: Some("FY23 earnings call".into()),
            filename: "acme_fy23.txt".into(),
            body: body.into(),
        }
    }

    fn raw(id: &str) -> RawDocument {
        RawDocument {
            id: Some(id.into()),
            doc_type: Some("transcript".into()),
            date: Some("2023-05-01".into()),
            body: Some("hello".into()),
            ..Default::default()
        }
    }

    fn words_n(prefix: &str, n: usize) -> String {
        (0..n).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn ingest_normalizes_line_endings() {
        let mut r = raw("a");
        r.body = Some("line one\r\nline two\rthree\u{7}".into());
        let d = ingest(r).unwrap();
        assert_eq!(d.body, "line one\nline two\nthree");
        assert_eq!(d.filename, "a");
    }

    #[test]
    fn ingest_reports_missing_date() {
        let mut r = raw("a");
        r.date = None;
        assert_eq!(ingest(r).unwrap_err().to_string(), "missing field: date");
    }

    #[test]
    fn ingest_rejects_duplicate_id() {
        let mut c = Corpus::new();
        c.ingest(raw("a")).unwrap();
        let err = c.ingest(raw("a")).unwrap_err();
        assert!(err.to_string().starts_with("duplicate id"), "{err}");
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn ingest_rejects_bad_date_and_type() {
        let mut r = raw("a");
        r.date = Some("01/05/2023".into());
        assert!(matches!(ingest(r), Err(Error::InvalidField { field: "date", .. })));
        let mut r = raw("a");
        r.doc_type = Some("tweet".into());
        assert!(matches!(ingest(r), Err(Error::InvalidField { field: "doc_type", .. })));
    }

    #[test]
    fn context_line_transcript() {
        let d = doc(DocType::Transcript, "");
        assert_eq!(make_context_line(&d), "Acme Corp (ACME) | FY23 earnings call | 2023-05-01");
        let d = Document { ticker: None, ..d };
        assert_eq!(make_context_line(&d), "Acme Corp | FY23 earnings call | 2023-05-01");
    }

    #[test]
    fn context_line_fallback_to_filename() {
        let d = Document {
            doc_type: DocType::News,
            company_name: None,
            ticker: None,
            event: None,
            filename: "report_2023q2.txt".into(),
            date: NaiveDate::from_ymd_opt(2023, 7, 14).unwrap(),
            ..doc(DocType::News, "")
        };
        assert_eq!(make_context_line(&d), "news | report_2023q2.txt | 2023-07-14");
    }

    #[test]
    fn context_line_has_no_newline() {
        let mut d = doc(DocType::Transcript, "");
        d.event = Some("Q4\nupdate".into());
        assert!(!make_context_line(&d).contains('\n'));
    }

    #[test]
    fn disclosure_block_removed() {
        let text = "Revenue rose.\n\nIMPORTANT DISCLOSURES: see below\nThe analyst owns no shares.\nMore legal text.\n\nOutlook is strong.";
        let out = BoilerplateRules::default().strip(text);
        assert!(!out.contains("IMPORTANT DISCLOSURES"));
        assert!(!out.contains("analyst owns"));
        assert!(!out.contains("More legal text"));
        assert!(out.contains("Revenue rose."));
        assert!(out.contains("Outlook is strong."));
    }

    #[test]
    fn no_matching_rule_is_noop() {
        let text = "Margins expanded 120bp.\nGuidance unchanged.";
        assert_eq!(BoilerplateRules::default().strip(text), text);
    }

    #[test]
    fn ascii_table_dropped() {
        let text = "Segment results below.\n| 2022 | 2023 |\n| 1,204 | 1,311 |\n| 12% | 9% |\n| $45 | $52 |\nManagement commentary follows.";
        let out = BoilerplateRules::default().strip(text);
        assert_eq!(out, "Segment results below.\nManagement commentary follows.");
    }

    #[test]
    fn short_numeric_run_is_kept() {
        let text = "Intro\n2023 12%\n2024 14%\nOutro";
        assert_eq!(BoilerplateRules::default().strip(text), text);
    }

    #[test]
    fn malformed_rule_is_config_error() {
        let spec = BoilerplateRuleSpec {
            pattern: "(unclosed".into(),
            action: BoilerplateAction::DropLine,
        };
        assert!(matches!(BoilerplateRules::compile(&[spec], None), Err(Error::Config(_))));
    }

    #[test]
    fn small_doc_is_one_passage() {
        let body = format!("{}\n\n{}\n\n{}", words_n("a", 100), words_n("b", 100), words_n("c", 100));
        let out = split_passages(&doc(DocType::News, &body), &SplitConfig::default()).unwrap();
        assert_eq!(out.passages.len(), 1);
        assert_eq!(out.passages[0].body, body);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn splits_at_paragraph_boundary() {
        let p1 = words_n("a", 400);
        let p2 = words_n("b", 400);
        let d = doc(DocType::News, &format!("{p1}\n\n{p2}"));
        let out = split_passages(&d, &SplitConfig::default()).unwrap();
        assert_eq!(out.passages.len(), 2);
        assert_eq!(out.passages[0].body, p1);
        assert_eq!(out.passages[1].body, p2);
        let ctx = count_tokens(&make_context_line(&d));
        assert_eq!(out.passages[0].token_count, ctx + 400);
        assert_eq!(out.passages[1].ordinal, 1);
        assert_eq!(out.passages[1].id, "d1#1");
    }

    #[test]
    fn question_and_answer_stay_together() {
        let q = format!("Q: {}?", words_n("q", 29));
        let a = format!("A: {}", words_n("a", 39));
        let d = doc(DocType::Transcript, &format!("{q}\n{a}"));
        let out = split_passages(&d, &SplitConfig::default()).unwrap();
        assert_eq!(out.passages.len(), 1);
        assert!(out.passages[0].body.contains('?'));
    }

    #[test]
    fn question_moves_to_answer_passage() {
        // filler + question fill the first passage; the answer does not fit,
        // so the question is carried over into the answer's passage.
        let cfg = SplitConfig::with_max_tokens(64);
        let filler = words_n("f", 30);
        let q = format!("Q: {}?", words_n("q", 9));
        let a = format!("A: {}", words_n("a", 29));
        let d = doc(DocType::Transcript, &format!("{filler}\n{q}\n{a}"));
        let out = split_passages(&d, &cfg).unwrap();
        assert_eq!(out.passages.len(), 2);
        assert_eq!(out.passages[0].body, filler);
        assert!(out.passages[1].body.starts_with("Q:"));
        assert!(out.passages[1].body.ends_with("a28"));
    }

    #[test]
    fn unsplittable_segment_is_truncated_with_warning() {
        let body = (0..100).map(|i| format!("w{i}")).collect::<Vec<_>>().join("-");
        let out = split_passages(&doc(DocType::News, &body), &SplitConfig::with_max_tokens(40)).unwrap();
        assert!(!out.warnings.is_empty());
        assert!(out.passages.iter().all(|p| p.token_count <= 40));
        let total: usize = out.passages.iter().map(|p| count_tokens(&p.body)).sum();
        assert_eq!(total, 100);
    }

    #[test]
    fn rejects_tiny_budget_and_alnum_separator() {
        let d = doc(DocType::News, "x");
        assert!(split_passages(&d, &SplitConfig::with_max_tokens(16)).is_err());
        let cfg = SplitConfig {
            separators: vec!["and".into()],
            ..SplitConfig::default()
        };
        assert!(split_passages(&d, &cfg).is_err());
    }

    fn arb_body() -> impl Strategy<Value = String> {
        let word = prop_oneof![
            "[a-zA-Z]{1,8}",
            "[0-9]{1,4}",
            Just("?".to_string()),
            Just(".".to_string()),
            Just("\n".to_string()),
            Just("\n\n".to_string()),
            Just("a-b-c-d-e-f".to_string()),
        ];
        prop::collection::vec(word, 0..600).prop_map(|w| w.join(" "))
    }

    fn arb_lines() -> impl Strategy<Value = String> {
        let line = prop_oneof![
            Just("| 1 | 2 |".to_string()),
            Just("12% 13% 14%".to_string()),
            Just(String::new()),
            Just("IMPORTANT DISCLOSURES apply".to_string()),
            Just("Page 3 of 9".to_string()),
            "[a-z ]{0,20}",
            "[0-9|$% ]{0,12}",
        ];
        prop::collection::vec(line, 0..40).prop_map(|l| l.join("\n"))
    }

    proptest! {
        #[test]
        fn passages_respect_budget(body in arb_body(), max in 32usize..200, transcript in any::<bool>()) {
            let t = if transcript { DocType::Transcript } else { DocType::News };
            let d = doc(t, &body);
            let cfg = SplitConfig::with_max_tokens(max);
            let out = split_passages(&d, &cfg).unwrap();
            for (i, p) in out.passages.iter().enumerate() {
                prop_assert!(p.token_count <= max);
                prop_assert_eq!(p.ordinal, i);
                prop_assert_eq!(p.token_count, count_tokens(&p.context_line) + count_tokens(&p.body));
            }
            // every body token is covered exactly once, in order
            let covered: Vec<String> = out.passages.iter().flat_map(|p| crate::text::words(&p.body)).collect();
            prop_assert_eq!(covered, crate::text::words(&body));
            prop_assert_eq!(split_passages(&d, &cfg).unwrap(), out);
        }

        #[test]
        fn strip_is_idempotent(text in arb_lines()) {
            let rules = BoilerplateRules::default();
            let once = rules.strip(&text);
            prop_assert_eq!(rules.strip(&once), once.clone());
        }
    }
}
