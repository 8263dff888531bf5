use std::sync::LazyLock;

use regex::Regex;

use crate::error::Result;
use crate::index::RankedHit;
use crate::querygen::LlmClient;
use crate::store::PassageStore;

/// Prompt given to the optional rewriter; the question follows it.
pub const REWRITE_PROMPT: &str = "Rewrite the question below as a search query for a document index. \
Keep every company name, metric, period and figure it mentions. Remove any instructions about how the \
answer should be formatted, rounded or worded. Reply with the rewritten question only.\n\nQuestion: ";

const INSTRUCTION_VERBS: &[&str] = &[
    "answer", "respond", "reply", "give", "provide", "round", "express", "report", "use", "show", "format",
    "list", "keep", "state", "return", "write", "include", "present", "please", "be", "do", "only",
];

static BRACKETED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\s*[\(\[]([^\)\]]*)[\)\]]").expect("valid regex"));
static SENTENCE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[^.?!]+[.?!]*").expect("valid regex"));

fn starts_with_instruction(s: &str) -> bool {
    s.split(|c: char| !c.is_alphanumeric())
        .find(|w| !w.is_empty())
        .is_some_and(|w| INSTRUCTION_VERBS.contains(&w.to_lowercase().as_str()))
}

/// Rule-based cleanup: drops bracketed clauses that start with an
/// instruction verb, then trailing sentences that do. The first sentence is
/// always kept.
pub fn strip_instructions(question: &str) -> String {
    let without_brackets = BRACKETED.replace_all(question, |c: &regex::Captures<'_>| {
        if starts_with_instruction(&c[1]) {
            String::new()
        } else {
            c[0].to_owned()
        }
    });
    let mut sentences: Vec<&str> = SENTENCE
        .find_iter(&without_brackets)
        .map(|m| m.as_str().trim())
        .filter(|s| !s.is_empty())
        .collect();
    while sentences.len() > 1 && sentences.last().is_some_and(|s| starts_with_instruction(s)) {
        sentences.pop();
    }
    sentences.join(" ")
}

/// Question text to send to retrieval. With a rewriter, one rewrite call;
/// an error or empty reply falls back to [`strip_instructions`].
pub fn rag_prepare(question: &str, rewriter: Option<&dyn LlmClient>) -> String {
    if let Some(client) = rewriter {
        match client.complete(&format!("{REWRITE_PROMPT}{question}")) {
            Ok(r) if !r.trim().is_empty() => return r.trim().to_owned(),
            Ok(_) => log::warn!("rewriter returned an empty reply; using rule-based cleanup"),
            Err(e) => log::warn!("rewriter failed ({e}); using rule-based cleanup"),
        }
    }
    strip_instructions(question)
}

/// One `filename / context line / body` block per hit, in rank order,
/// separated by blank lines.
pub fn rag_context(hits: &[RankedHit], store: &PassageStore) -> Result<String> {
    let blocks = hits
        .iter()
        .map(|h| {
            let p = store.require(&h.passage_id)?;
            let filename = store.document(&p.doc_id).map_or(p.doc_id.as_str(), |d| d.filename.as_str());
            Ok(format!("{filename}\n{}\n{}", p.context_line, p.body))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(blocks.join("\n\n"))
}

/// Answer prompt asking for the shortest sufficient answer.
pub fn concise_answer_prompt(question: &str, context: &str) -> String {
    format!(
        "You are given excerpts from financial documents, each headed by its file name.\n\n\
         {context}\n\n\
         Using only these excerpts, answer the question. Reply with the figure or short phrase that \
         answers it and nothing else; do not explain or restate the question. If the excerpts do not \
         contain the answer, reply \"not found\".\n\n\
         Question: {question}\nAnswer:"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::querygen::FixedClient;

    #[test]
    fn trailing_instruction_removed() {
        assert_eq!(
            strip_instructions("What was X's FY22 capex? Answer in millions, to one decimal."),
            "What was X's FY22 capex?"
        );
        assert_eq!(
            strip_instructions("What was the FY2019 dividend per share (round to two decimals)?"),
            "What was the FY2019 dividend per share?"
        );
    }

    #[test]
    fn plain_question_unchanged() {
        let q = "How did Acme's margin change in 2023?";
        assert_eq!(rag_prepare(q, None), q);
        assert_eq!(strip_instructions("Give me Acme revenue."), "Give me Acme revenue.");
        assert_eq!(strip_instructions("Revenue (in USD) for FY21?"), "Revenue (in USD) for FY21?");
    }

    #[test]
    fn rewriter_reply_is_used() {
        let c = FixedClient("acme fy22 capital expenditure".into());
        assert_eq!(rag_prepare("What was it? Answer briefly.", Some(&c)), "acme fy22 capital expenditure");
    }

    struct Broken;
    impl LlmClient for Broken {
        fn complete(&self, _: &str) -> Result<String> {
            Err(Error::Transport("down".into()))
        }
    }

    #[test]
    fn rewriter_failure_falls_back() {
        assert_eq!(rag_prepare("What was capex? Use millions.", Some(&Broken)), "What was capex?");
    }

    #[test]
    fn prompt_contains_context_and_question() {
        let p = concise_answer_prompt("Q?", "file.txt\nctx\nbody");
        assert!(p.contains("file.txt\nctx\nbody") && p.ends_with("Question: Q?\nAnswer:"));
    }
}
