//! Seeded synthetic financial corpus for offline experiments and tests.
//!
//! Each document belongs to one company and one fiscal quarter and holds a
//! fixed number of paragraphs. A paragraph discusses one metric for one named
//! business segment (a three-word capitalized name such as
//! `Orion Cloud Segment`) and is padded with generic commentary to a target
//! length, so that every paragraph becomes exactly one passage.
//!
//! The module also builds a paraphrase benchmark: queries assembled from
//! company aliases, metric synonyms and modifiers, none of which occur
//! anywhere in the corpus.

use std::collections::{BTreeMap, HashSet};

use chrono::{Datelike, Duration, NaiveDate};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{build_passages, BoilerplateRules, DocType, Document, SplitConfig, SplitWarning};
use crate::error::{Error, Result};
use crate::querygen::{
    build_dataset, run_generation, FewShotExample, GenerationConfig, GenerationOutcome, QueryPair, Split,
    SplitRatios, StubClient,
};
use crate::store::PassageStore;
use crate::text::{count_tokens, words};

const COMPANY_PREFIX: &[&str] = &[
    "Acme", "Globex", "Initech", "Umbrella", "Hooli", "Vandelay", "Soylent", "Cyberdyne", "Tyrell", "Wayne",
    "Stark", "Wonka", "Oscorp", "Gringotts", "Monarch", "Virtucon", "Nakatomi", "Sterling", "Dunder", "Bluth",
    "Krusty", "Prestige", "Massive", "Duff", "Zorg", "Rekall", "Abstergo", "Aperture", "Mesa", "Kaiju",
    "Lacuna", "Yoyodyne", "Spacely", "Cogswell", "Gekko", "Encom", "Dinoco", "Tessier", "Weyland", "Omni",
    "Paragon", "Halcyon", "Brightline", "Copperfield", "Driftwood", "Everpeak", "Foxglove", "Goldcrest",
];

const COMPANY_SUFFIX: &[&str] = &[
    "Holdings", "Industries", "Systems", "Group", "Corporation", "Partners", "Technologies", "Resources",
    "Motors", "Pharma", "Networks", "Brands",
];

/// First alias word per company (same index as the prefix).
const ALIAS_A: &[&str] = &[
    "roadrunner", "bluebird", "ironclad", "moonbeam", "quicksilver", "thunderbolt", "riverbend", "stonewall",
    "wildfire", "nightingale", "goldfinch", "silverback", "starling", "tumbleweed", "whirlwind", "brambleton",
    "cliffside", "dewdrop", "elmstead", "fernhill", "gullwing", "hazelnut", "inkwell", "jackdaw",
    "kingfisher", "lamplight", "marigold", "nettlefield", "oakhollow", "pebblebrook", "quailridge", "rosebay",
    "sandpiper", "thistledown", "upland", "velvetine", "waterlily", "yarrow", "zinnia", "amberwood",
    "birchmont", "cinderella", "dovecote", "eaglecrest", "fireweed", "gooseberry", "hollyhock", "ivyleaf",
];

const ALIAS_B: &[&str] = &[
    "outfit", "crew", "shop", "firm", "house", "camp", "posse", "clan", "guild", "lodge", "circle", "troupe",
];

/// Metric topics: the word used in the corpus, extra corpus words that go
/// with it, and synonym phrases reserved for paraphrase queries.
struct Topic {
    metric: &'static str,
    sentences: &'static [&'static str],
    synonyms: &'static [&'static str],
}

const TOPICS: &[Topic] = &[
    Topic {
        metric: "revenue",
        sentences: &[
            "Reported revenue reached {num} million, {dir} {pct} percent year over year.",
            "Recurring contracts made up roughly {pct} percent of revenue in the period.",
        ],
        synonyms: &["turnover", "topline", "takings"],
    },
    Topic {
        metric: "margin",
        sentences: &[
            "Operating margin came in at {pct} percent as mix shifted toward higher value work.",
            "The gross margin bridge showed {pct} basis points of benefit from efficiency work.",
        ],
        synonyms: &["profitability", "markup", "spread"],
    },
    Topic {
        metric: "capex",
        sentences: &[
            "Full year capex is planned at about {num} million with most of it going to new sites.",
            "The capex envelope includes {num} million of maintenance work on existing lines.",
        ],
        synonyms: &["outlays", "buildout", "reinvestment"],
    },
    Topic {
        metric: "dividend",
        sentences: &[
            "The board lifted the quarterly dividend by {pct} percent to {num} cents per share.",
            "Management reaffirmed its progressive dividend policy for the coming years.",
        ],
        synonyms: &["payout", "disbursement", "yield"],
    },
    Topic {
        metric: "buyback",
        sentences: &[
            "A new buyback authorization of {num} million was approved during the quarter.",
            "The buyback retired about {pct} percent of the share count since inception.",
        ],
        synonyms: &["repurchase", "repurchases", "retirement"],
    },
    Topic {
        metric: "guidance",
        sentences: &[
            "Full year guidance was {dir3} to a range centred on {num} million.",
            "The guidance assumes no change in the macro picture through year end.",
        ],
        synonyms: &["forecast", "projections", "foresight"],
    },
    Topic {
        metric: "debt",
        sentences: &[
            "Net debt stood at {num} million after a bond was refinanced at a lower coupon.",
            "The company intends to reduce debt by {num} million over the next two years.",
        ],
        synonyms: &["borrowings", "indebtedness", "liabilities"],
    },
    Topic {
        metric: "headcount",
        sentences: &[
            "Headcount rose by {num} people, mostly engineers and field staff.",
            "The headcount plan for next year is roughly flat outside of new sites.",
        ],
        synonyms: &["workforce", "staffing", "personnel"],
    },
    Topic {
        metric: "inventory",
        sentences: &[
            "Inventory days fell to {num} as the supply chain normalised.",
            "Channel inventory is now at what management called healthy levels.",
        ],
        synonyms: &["stockpile", "stockpiles", "warehousing"],
    },
    Topic {
        metric: "pricing",
        sentences: &[
            "Pricing actions contributed about {pct} percent to reported sales.",
            "The pricing environment stayed rational with few signs of discounting.",
        ],
        synonyms: &["tariffs", "ratecard", "surcharges"],
    },
    Topic {
        metric: "backlog",
        sentences: &[
            "Backlog ended the quarter at {num} million, a record for the business.",
            "Conversion of backlog into sales should accelerate in the second half.",
        ],
        synonyms: &["pipeline", "orderbook", "unbilled"],
    },
    Topic {
        metric: "churn",
        sentences: &[
            "Monthly churn improved to {pct} tenths of a percent on better onboarding.",
            "Churn among small customers remains the main area of focus.",
        ],
        synonyms: &["attrition", "defections", "cancellations"],
    },
];

const ENTITY_A: &[&str] = &[
    "Orion", "Atlas", "Nimbus", "Vega", "Helix", "Apex", "Zenith", "Polaris", "Titan", "Aurora", "Nova",
    "Summit", "Quantum", "Vertex", "Horizon", "Pinnacle", "Falcon", "Phoenix", "Sierra", "Cobalt", "Crimson",
    "Emerald", "Granite", "Harbor", "Indigo", "Juniper", "Keystone", "Lumen", "Meridian", "Northstar", "Onyx",
    "Pioneer", "Radiant", "Sapphire", "Trident", "Unity", "Vanguard", "Willow", "Zephyr", "Beacon", "Cascade",
    "Echo", "Frontier", "Glacier", "Ironwood", "Jade", "Kestrel", "Lynx", "Magnolia", "Obsidian",
];

const ENTITY_B: &[&str] = &[
    "Cloud", "Retail", "Marine", "Logistics", "Mobile", "Payments", "Analytics", "Security", "Health",
    "Aviation", "Mining", "Chemicals", "Media", "Gaming", "Robotics", "Semiconductor", "Software", "Wireless",
    "Insurance", "Lending", "Travel", "Apparel", "Beverage", "Solar", "Battery", "Fiber", "Storage",
    "Pharmacy", "Dental", "Freight",
];

const ENTITY_C: &[&str] = &[
    "Segment", "Division", "Unit", "Platform", "Program", "Business", "Franchise", "Venture", "Portfolio",
    "Brand",
];

const OPENERS: &[&str] = &[
    "{e} reported {m} of {num} million in {q} {y}, {dir} {pct} percent from a year earlier.",
    "{e} saw {m} {dir2} to {num} million during {q} {y}.",
    "{e} was the main swing factor for {m} in {q} {y}, according to the prepared remarks.",
    "{e} delivered {m} ahead of plan in {q} {y} at {num} million.",
];

const COMPANY_LINES: &[&str] = &[
    "According to {c} ({t}), the move in {m} reflected {reason}.",
    "Executives at {c} ({t}) linked the {m} trend to {reason}.",
    "Speaking for {c} ({t}), the finance chief pointed to {reason}.",
];

const REASONS: &[&str] = &[
    "better execution in the field", "a stronger product mix", "timing of large contracts",
    "currency effects", "the integration of a newly closed acquisition", "weather related disruption",
    "an easier comparison base", "new customer wins in the region", "higher input prices",
    "a one time settlement",
];

const FILLER: &[&str] = &[
    "The team said the operating environment remained {adj} across most {noun}.",
    "Several participants asked about {noun} and the timing of {noun2}.",
    "Management described conditions in {noun} as {adj} but improving.",
    "There was a lengthy discussion of {noun} and how it interacts with {noun2}.",
    "The company expects {noun} to stay {adj} through the rest of the year.",
    "Leaders highlighted {noun} as a priority and flagged {noun2} as a watch item.",
    "On the call the tone around {noun} was {adj} and measured.",
    "It was noted that {noun} had been {adj} in prior periods as well.",
    "Questions also covered {noun}, {noun2} and the broader agenda.",
    "Progress on {noun} was described as {adj} relative to internal targets.",
    "The plan for {noun} is unchanged and {noun2} remains on schedule.",
    "Commentary on {noun} was brief and mostly {adj}.",
];

const FILLER_ADJ: &[&str] = &[
    "stable", "mixed", "resilient", "uneven", "steady", "challenging", "supportive", "constructive",
    "cautious", "encouraging", "competitive", "fragmented", "orderly", "busy", "quiet", "solid",
];

const FILLER_NOUN: &[&str] = &[
    "regulation", "hiring plans", "the product roadmap", "customer onboarding", "site consolidation",
    "procurement", "the partner network", "digital channels", "the sales organisation", "compliance work",
    "logistics networks", "the core franchise", "field service", "training programmes", "integration work",
    "the distribution footprint", "supplier relationships", "quality control", "the service backbone",
    "regional expansion", "brand awareness", "the contract portfolio", "tooling upgrades", "data systems",
];

/// Words used only in paraphrase queries; never generated into the corpus.
const MODIFIERS: &[&str] = &["latest", "recent", "snapshot", "trajectory", "lately", "details", "briefing", "recap"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub companies: usize,
    pub documents: usize,
    pub paragraphs_per_doc: usize,
    pub min_paragraph_tokens: usize,
    pub max_paragraph_tokens: usize,
    pub first_year: i32,
    pub years: i32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            companies: 40,
            documents: 500,
            paragraphs_per_doc: 10,
            min_paragraph_tokens: 270,
            max_paragraph_tokens: 400,
            first_year: 2019,
            years: 5,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.companies == 0 || self.companies > COMPANY_PREFIX.len() {
            return Err(Error::Config(format!("companies must be in 1..={}", COMPANY_PREFIX.len())));
        }
        if self.paragraphs_per_doc == 0 || self.paragraphs_per_doc > TOPICS.len() {
            return Err(Error::Config(format!("paragraphs_per_doc must be in 1..={}", TOPICS.len())));
        }
        if self.min_paragraph_tokens > self.max_paragraph_tokens || self.max_paragraph_tokens > 460 {
            return Err(Error::Config("paragraph token range must satisfy min <= max <= 460".into()));
        }
        if self.years < 1 {
            return Err(Error::Config("years must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Company {
    pub name: String,
    pub ticker: String,
    pub alias: [String; 2],
}

/// What a generated paragraph is about.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParagraphInfo {
    pub company: usize,
    pub topic: usize,
    pub entity: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCorpus {
    pub companies: Vec<Company>,
    pub documents: Vec<Document>,
    /// Per document id, one entry per paragraph in order.
    pub paragraphs: BTreeMap<String, Vec<ParagraphInfo>>,
}

fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = template.to_owned();
    for (k, v) in slots {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

fn companies(n: usize, rng: &mut ChaCha8Rng) -> Vec<Company> {
    let mut used = HashSet::new();
    (0..n)
        .map(|i| {
            let prefix = COMPANY_PREFIX[i];
            let suffix = COMPANY_SUFFIX.choose(rng).expect("non-empty");
            let letters: Vec<char> = prefix.to_ascii_uppercase().chars().collect();
            let mut ticker: String = letters.iter().take(4).collect();
            let mut k = 4;
            while !used.insert(ticker.clone()) {
                // swap the last letter for a later one from the name, then for A..Z
                let c = letters.get(k).copied().unwrap_or((b'A' + (k % 26) as u8) as char);
                ticker.pop();
                ticker.push(c);
                k += 1;
            }
            Company {
                name: format!("{prefix} {suffix}"),
                ticker,
                alias: [ALIAS_A[i].to_owned(), ALIAS_B[i % ALIAS_B.len()].to_owned()],
            }
        })
        .collect()
}

fn paragraph(
    rng: &mut ChaCha8Rng,
    company: &Company,
    topic: &Topic,
    entity: &str,
    quarter: u32,
    year: i32,
    target: usize,
) -> String {
    let num = rng.random_range(12..980).to_string();
    let pct = rng.random_range(2..40).to_string();
    let q = format!("Q{quarter}");
    let y = year.to_string();
    let reason = *REASONS.choose(rng).expect("non-empty");
    let dir = if rng.random_bool(0.5) { "up" } else { "down" };
    let dir2 = if dir == "up" { "climb" } else { "slip" };
    let dir3 = if dir == "up" { "raised" } else { "lowered" };
    let slots = [
        ("e", entity),
        ("m", topic.metric),
        ("c", company.name.as_str()),
        ("t", company.ticker.as_str()),
        ("q", q.as_str()),
        ("y", y.as_str()),
        ("num", num.as_str()),
        ("pct", pct.as_str()),
        ("dir", dir),
        ("dir2", dir2),
        ("dir3", dir3),
        ("reason", reason),
    ];
    let mut sentences = vec![
        fill(OPENERS.choose(rng).expect("non-empty"), &slots),
        fill(COMPANY_LINES.choose(rng).expect("non-empty"), &slots),
    ];
    for s in topic.sentences {
        sentences.push(fill(s, &slots));
    }
    let mut body = sentences.join(" ");
    let mut tokens = count_tokens(&body);
    let mut filler = Vec::new();
    while tokens < target {
        let n1 = *FILLER_NOUN.choose(rng).expect("non-empty");
        let mut n2 = *FILLER_NOUN.choose(rng).expect("non-empty");
        if n2 == n1 {
            n2 = FILLER_NOUN[(FILLER_NOUN.iter().position(|x| *x == n1).unwrap_or(0) + 1) % FILLER_NOUN.len()];
        }
        let s = fill(
            FILLER.choose(rng).expect("non-empty"),
            &[("adj", FILLER_ADJ.choose(rng).expect("non-empty")), ("noun", n1), ("noun2", n2)],
        );
        tokens += count_tokens(&s);
        filler.push(s);
    }
    // commentary goes between the opening facts and the topic detail
    let split = rng.random_range(0..=filler.len());
    let (before, after) = filler.split_at(split);
    body = [sentences[..2].join(" "), before.join(" "), sentences[2..].join(" "), after.join(" ")]
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    body
}

/// Deterministic corpus for a given configuration.
pub fn generate_corpus(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let companies = companies(cfg.companies, &mut rng);
    let mut documents = Vec::with_capacity(cfg.documents);
    let mut paragraphs = BTreeMap::new();
    let doc_types = [
        (DocType::Transcript, 0.5),
        (DocType::CompanyReport, 0.2),
        (DocType::BrokerResearch, 0.15),
        (DocType::News, 0.15),
    ];
    for i in 0..cfg.documents {
        let ci = i % cfg.companies;
        let company = &companies[ci];
        let year = cfg.first_year + rng.random_range(0..cfg.years);
        let quarter = rng.random_range(1..=4u32);
        let doc_type = doc_types.choose_weighted(&mut rng, |d| d.1).expect("weights valid").0;
        let quarter_end = NaiveDate::from_ymd_opt(year, quarter * 3, 1)
            .and_then(|d| d.checked_add_signed(Duration::days(30)))
            .expect("valid quarter");
        let date = quarter_end + Duration::days(rng.random_range(5..40));
        let event = match doc_type {
            DocType::Transcript => Some(format!("Q{quarter} {year} earnings call")),
            DocType::CompanyReport => Some(format!("Q{quarter} {year} quarterly report")),
            _ => None,
        };
        let mut topic_ids: Vec<usize> = (0..TOPICS.len()).collect();
        topic_ids.shuffle(&mut rng);
        topic_ids.truncate(cfg.paragraphs_per_doc);
        let mut infos = Vec::with_capacity(topic_ids.len());
        let mut texts = Vec::with_capacity(topic_ids.len());
        for &t in &topic_ids {
            let entity = format!(
                "{} {} {}",
                ENTITY_A.choose(&mut rng).expect("non-empty"),
                ENTITY_B.choose(&mut rng).expect("non-empty"),
                ENTITY_C.choose(&mut rng).expect("non-empty")
            );
            let target = rng.random_range(cfg.min_paragraph_tokens..=cfg.max_paragraph_tokens);
            texts.push(paragraph(&mut rng, company, &TOPICS[t], &entity, quarter, year, target));
            infos.push(ParagraphInfo {
                company: ci,
                topic: t,
                entity,
            });
        }
        let id = format!("syn-{i:04}");
        documents.push(Document {
            id: id.clone(),
            doc_type,
            company_name: Some(company.name.clone()),
            ticker: Some(company.ticker.clone()),
            date,
            event,
            filename: format!("{}_{year}Q{quarter}_{}.txt", company.ticker, doc_type.as_str()),
            body: texts.join("\n\n"),
        });
        paragraphs.insert(id, infos);
    }
    Ok(SynthCorpus {
        companies,
        documents,
        paragraphs,
    })
}

/// A handful of hand-written example pairs for the generation prompt.
pub fn few_shot_pool() -> Vec<FewShotExample> {
    let ex = |p: &str, q: &str| FewShotExample {
        passage_text: p.to_owned(),
        query: q.to_owned(),
    };
    vec![
        ex(
            "Northwind Traders (NWT) | Q2 2021 earnings call | 2021-08-04\nOur Harbor Freight Division grew revenue 14 percent on new contracts in the Gulf.",
            "Northwind Harbor Freight revenue growth",
        ),
        ex(
            "broker research | Contoso Pharma | 2022-03-10\nWe expect Contoso to raise its dividend again as free cash flow improves.",
            "Contoso Pharma dividend outlook",
        ),
        ex(
            "news | Fabrikam Motors | 2020-11-19\nFabrikam said battery supply constraints would limit shipments until the spring.",
            "Fabrikam battery supply shipments",
        ),
        ex(
            "company report | Litware Systems | 2023-02-01\nNet debt fell to 410 million after the sale of the legacy hosting unit.",
            "Litware net debt reduction",
        ),
    ]
}

/// Every word the generator can emit into a document body or context line.
pub fn corpus_vocabulary(corpus: &SynthCorpus) -> HashSet<String> {
    let mut v = HashSet::new();
    for d in &corpus.documents {
        v.extend(words(&d.body));
        v.extend(words(&crate::corpus::make_context_line(d)));
    }
    v
}

/// Query words used by [`paraphrase_pairs`], across all companies and topics.
pub fn paraphrase_vocabulary() -> HashSet<String> {
    ALIAS_A
        .iter()
        .chain(ALIAS_B)
        .chain(MODIFIERS)
        .chain(TOPICS.iter().flat_map(|t| t.synonyms))
        .flat_map(|w| words(w))
        .collect()
}

/// One paraphrase query per passage whose document maps cleanly onto its
/// paragraphs. Queries have 2–6 words drawn from the company alias, a metric
/// synonym and modifiers; any query sharing a token with its gold passage
/// text is discarded. Split labels are copied from `splits` (by passage id)
/// when present.
pub fn paraphrase_pairs(
    corpus: &SynthCorpus,
    store: &PassageStore,
    splits: &BTreeMap<String, Split>,
    seed: u64,
) -> Vec<QueryPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7061_7261);
    let mut out = Vec::new();
    for doc in &corpus.documents {
        let infos = &corpus.paragraphs[&doc.id];
        let passages: Vec<_> = store.passages().iter().filter(|p| p.doc_id == doc.id).collect();
        if passages.len() != infos.len() {
            continue;
        }
        for (p, info) in passages.iter().zip(infos) {
            let company = &corpus.companies[info.company];
            let topic = &TOPICS[info.topic];
            let len = rng.random_range(2..=6usize);
            let mut q: Vec<&str> = vec![company.alias[0].as_str()];
            q.push(topic.synonyms.choose(&mut rng).expect("non-empty"));
            if len >= 3 {
                q.push(company.alias[1].as_str());
            }
            let mut mods: Vec<&str> = MODIFIERS.to_vec();
            mods.shuffle(&mut rng);
            q.extend(mods.into_iter().take(len.saturating_sub(q.len())));
            q.truncate(len);
            let query = q.join(" ");
            let gold: HashSet<String> = words(&p.embedding_text()).into_iter().collect();
            if words(&query).iter().any(|w| gold.contains(w)) {
                continue;
            }
            let mut pair = QueryPair::new(format!("pq:{}", p.id), query, p.id.clone());
            if let Some(s) = splits.get(&p.id) {
                pair.split = *s;
            } else {
                pair.split = crate::querygen::split_for_document(&doc.id, SplitRatios::default(), seed);
            }
            out.push(pair);
        }
    }
    out
}

/// Corpus, passages, generated dataset and paraphrase queries in one bundle.
#[derive(Debug, Clone)]
pub struct SynthBenchmark {
    pub corpus: SynthCorpus,
    pub store: PassageStore,
    pub split_warnings: Vec<SplitWarning>,
    pub outcomes: Vec<GenerationOutcome>,
    pub pairs: Vec<QueryPair>,
    pub paraphrase: Vec<QueryPair>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub corpus: SynthConfig,
    pub ratios: SplitRatios,
    pub split_seed: u64,
    pub generation_seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            corpus: SynthConfig::default(),
            // desk-scale held-out splits need more than the production proportions
            ratios: SplitRatios {
                train: 0.8,
                val: 0.1,
                test: 0.1,
            },
            split_seed: 1,
            generation_seed: 3,
        }
    }
}

impl SynthBenchmark {
    pub fn build(cfg: &BenchmarkConfig) -> Result<Self> {
        let corpus = generate_corpus(&cfg.corpus)?;
        let split = build_passages(&corpus.documents, &BoilerplateRules::none(), &SplitConfig::default())?;
        let store = PassageStore::new(split.passages, &corpus.documents)?;
        let outcomes = run_generation(
            &StubClient::new(cfg.generation_seed),
            &store,
            &few_shot_pool(),
            cfg.generation_seed,
            &GenerationConfig::default(),
        )?;
        let pairs = build_dataset(&outcomes, &store, cfg.ratios, cfg.split_seed)?;
        let splits: BTreeMap<String, Split> = store
            .passages()
            .iter()
            .map(|p| {
                (
                    p.id.clone(),
                    crate::querygen::split_for_document(&p.doc_id, cfg.ratios, cfg.split_seed),
                )
            })
            .collect();
        let paraphrase = paraphrase_pairs(&corpus, &store, &splits, cfg.split_seed);
        Ok(Self {
            corpus,
            store,
            split_warnings: split.warnings,
            outcomes,
            pairs,
            paraphrase,
        })
    }

    pub fn split(&self, split: Split) -> Vec<QueryPair> {
        self.pairs.iter().filter(|p| p.split == split).cloned().collect()
    }

    pub fn paraphrase_split(&self, split: Split) -> Vec<QueryPair> {
        self.paraphrase.iter().filter(|p| p.split == split).cloned().collect()
    }
}

/// Calendar quarter of a date, for report labels.
pub fn quarter_of(date: NaiveDate) -> (i32, u32) {
    (date.year(), (date.month() - 1) / 3 + 1)
}
