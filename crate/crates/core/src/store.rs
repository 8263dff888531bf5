//! In-memory passage/metadata store and JSONL helpers.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::{DocType, Document, Passage};
use crate::error::{Error, Result};

/// Filterable fields of a passage, inherited from its document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassageMeta {
    pub doc_id: String,
    pub date: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ticker: Option<String>,
    pub tags: BTreeSet<String>,
}

impl PassageMeta {
    /// Tags are the document type and, when present, the event name.
    pub fn from_document(doc: &Document) -> Self {
        let mut tags = BTreeSet::new();
        tags.insert(doc.doc_type.as_str().to_owned());
        if let Some(e) = &doc.event {
            tags.insert(e.clone());
        }
        Self {
            doc_id: doc.id.clone(),
            date: doc.date,
            ticker: doc.ticker.clone(),
            tags,
        }
    }
}

/// Documents without their bodies, keyed by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentInfo {
    pub id: String,
    pub doc_type: DocType,
    pub company_name: Option<String>,
    pub ticker: Option<String>,
    pub date: NaiveDate,
    pub event: Option<String>,
    pub filename: String,
}

impl From<&Document> for DocumentInfo {
    fn from(d: &Document) -> Self {
        Self {
            id: d.id.clone(),
            doc_type: d.doc_type,
            company_name: d.company_name.clone(),
            ticker: d.ticker.clone(),
            date: d.date,
            event: d.event.clone(),
            filename: d.filename.clone(),
        }
    }
}

/// Key-value lookup of passages and their document metadata.
#[derive(Debug, Clone, Default)]
pub struct PassageStore {
    passages: Vec<Passage>,
    by_id: HashMap<String, usize>,
    docs: HashMap<String, DocumentInfo>,
}

impl PassageStore {
    pub fn new(passages: Vec<Passage>, documents: &[Document]) -> Result<Self> {
        let docs = documents
            .iter()
            .map(|d| (d.id.clone(), DocumentInfo::from(d)))
            .collect();
        Self::from_infos(passages, docs)
    }

    pub fn from_infos(passages: Vec<Passage>, docs: HashMap<String, DocumentInfo>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(passages.len());
        for (i, p) in passages.iter().enumerate() {
            if !docs.contains_key(&p.doc_id) {
                return Err(Error::Data(format!(
                    "passage {} refers to unknown document {}",
                    p.id, p.doc_id
                )));
            }
            if by_id.insert(p.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(p.id.clone()));
            }
        }
        Ok(Self { passages, by_id, docs })
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn get(&self, id: &str) -> Option<&Passage> {
        self.by_id.get(id).map(|&i| &self.passages[i])
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn require(&self, id: &str) -> Result<&Passage> {
        self.get(id).ok_or_else(|| Error::UnknownPassage(id.to_owned()))
    }

    pub fn document(&self, doc_id: &str) -> Option<&DocumentInfo> {
        self.docs.get(doc_id)
    }

    pub fn document_of(&self, passage_id: &str) -> Option<&DocumentInfo> {
        self.get(passage_id).and_then(|p| self.docs.get(&p.doc_id))
    }

    pub fn meta(&self, passage_id: &str) -> Option<PassageMeta> {
        let p = self.get(passage_id)?;
        let d = self.docs.get(&p.doc_id)?;
        let mut tags = BTreeSet::new();
        tags.insert(d.doc_type.as_str().to_owned());
        if let Some(e) = &d.event {
            tags.insert(e.clone());
        }
        Some(PassageMeta {
            doc_id: d.id.clone(),
            date: d.date,
            ticker: d.ticker.clone(),
            tags,
        })
    }

    pub fn documents(&self) -> impl Iterator<Item = &DocumentInfo> {
        self.docs.values()
    }
}

pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| {
            Error::Data(format!("{}:{}: {e}", path.display(), n + 1))
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
