//! Few-shot prompt for synthetic query generation.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::DocType;
use crate::error::{Error, Result};

use super::FewShotExample;

/// The generation prompt. Placeholders are substituted in a single pass by
/// [`build_prompt`].
pub const PROMPT_TEMPLATE: &str = "\
You are a highly trained investment analyst, and an expert in business and financial markets. \
You are helping construct a dataset to train a world class financial search engine. \
You will be given a text snippet from <DOCUMENT_TYPE>. \
Your task is to generate a query derived from the provided text snippet.

Detailed Instructions:
1. The query should be a question, or a set of keywords or phrases, such that the text snippet should be returned as a top search result for that query.
2. A good query is closely related to at least some, but not necessarily all, of the content in the text snippet. Do not create queries containing many unrelated concepts.
3. Broad queries about entire industries, sectors, regions, or macro trends are okay, as long as the text snippet contains specific information that is relevant to the query.
4. You will be penalized if your query contains too many words and phrases copied directly from the text snippet. Use paraphrasing, synonyms, summarization, and your knowledge of appropriate abbreviations, acronyms and specialized terminology to construct queries. For example, if the text snippet contains the phrase \"earnings per share\", the query could instead include the acronym \"EPS\". If the text snippet mentions \"earnings guidance for 2020-2024\", the query could be for \"long-term profit outlook\".
5. Do not include 10k or 10q references in your queries.

Formatting Instructions:
1. Always reply with the query only, on a single line. Do not provide any additional context, note, or explanation of any kind. Do not put the query in quotation marks (\",'). Do not include html tags in the query.
2. Queries can contain a maximum of 10 words.
3. If the text snippet is very short, difficult to understand, not written in English, or if it contains only boilerplate investment risk disclosures or disclaimers, you must begin your response with the special output \"SKIP\".

Text Snippet:
<EXAMPLE_PASSAGE_1>

Query:
<EXAMPLE_QUERY_1>

Text Snippet:
<EXAMPLE_PASSAGE_2>

Query:
<EXAMPLE_QUERY_2>

Text Snippet:
<SAMPLED_PASSAGE>

Query:
";

/// Marker preceding each passage in the rendered prompt.
pub const SNIPPET_MARKER: &str = "Text Snippet:\n";
/// Marker following each passage in the rendered prompt.
pub const QUERY_MARKER: &str = "\n\nQuery:";

const PLACEHOLDERS: [&str; 6] = [
    "<DOCUMENT_TYPE>",
    "<EXAMPLE_PASSAGE_1>",
    "<EXAMPLE_QUERY_1>",
    "<EXAMPLE_PASSAGE_2>",
    "<EXAMPLE_QUERY_2>",
    "<SAMPLED_PASSAGE>",
];

/// Phrase substituted for `<DOCUMENT_TYPE>`, per document type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocTypeLabels(pub BTreeMap<DocType, String>);

impl Default for DocTypeLabels {
    fn default() -> Self {
        let pairs = [
            (DocType::Transcript, "transcript of a company presentation"),
            (DocType::CompanyReport, "a company report"),
            (DocType::BrokerResearch, "a broker research report"),
            (DocType::News, "a financial news article"),
            (DocType::Other, "a financial document"),
        ];
        Self(pairs.into_iter().map(|(k, v)| (k, v.to_owned())).collect())
    }
}

impl DocTypeLabels {
    pub fn label(&self, doc_type: DocType) -> &str {
        self.0.get(&doc_type).map(String::as_str).unwrap_or("a financial document")
    }
}

/// Draws two distinct examples uniformly from the pool.
pub fn sample_examples<'a, R: Rng + ?Sized>(
    pool: &'a [FewShotExample],
    rng: &mut R,
) -> Result<[&'a FewShotExample; 2]> {
    if pool.len() < 2 {
        return Err(Error::Config(format!(
            "few-shot pool needs at least 2 examples, found {}",
            pool.len()
        )));
    }
    let idx = sample(rng, pool.len(), 2);
    Ok([&pool[idx.index(0)], &pool[idx.index(1)]])
}

/// Renders the prompt. Substituted text is never re-scanned for placeholders.
pub fn build_prompt(passage_text: &str, examples: [&FewShotExample; 2], doc_type_label: &str) -> String {
    let values = [
        doc_type_label,
        examples[0].passage_text.as_str(),
        examples[0].query.as_str(),
        examples[1].passage_text.as_str(),
        examples[1].query.as_str(),
        passage_text,
    ];
    let mut out = String::with_capacity(PROMPT_TEMPLATE.len() + values.iter().map(|v| v.len()).sum::<usize>());
    let mut rest = PROMPT_TEMPLATE;
    while let Some((pos, which)) = PLACEHOLDERS
        .iter()
        .enumerate()
        .filter_map(|(i, p)| rest.find(p).map(|pos| (pos, i)))
        .min()
    {
        out.push_str(&rest[..pos]);
        out.push_str(values[which]);
        rest = &rest[pos + PLACEHOLDERS[which].len()..];
    }
    out.push_str(rest);
    out
}

/// Recovers the passage under generation from a rendered prompt.
pub fn sampled_passage(prompt: &str) -> Option<&str> {
    let start = prompt.rfind(SNIPPET_MARKER)? + SNIPPET_MARKER.len();
    let tail = &prompt[start..];
    let end = tail.rfind(QUERY_MARKER)?;
    Some(&tail[..end])
}
