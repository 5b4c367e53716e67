//! A constructed retrieval fixture with hallucination-style clue noise.
//!
//! For every query there are four passages:
//!
//! * the gold passage, stating the true opening year;
//! * a distractor passage with the same description but six wrong years;
//! * two background passages about the same place and engineer.
//!
//! Each query has ten clues: the correct statement (most likely), six
//! corruptions of it that change one digit of the year (each naming a year
//! that only the distractor contains), and three unrelated-looking but
//! correct paraphrases.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::json;

pub const QUERIES: usize = 50;
pub const PASSAGES_PER_QUERY: usize = 4;
pub const CLUES_PER_QUERY: usize = 10;
pub const CORRUPTIONS_PER_QUERY: usize = 6;

#[derive(Debug, Clone)]
pub struct FixturePassage {
    pub id: String,
    pub title: String,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct FixtureClue {
    pub text: String,
    pub logprob: f64,
    pub corrupted: bool,
}

#[derive(Debug, Clone)]
pub struct FixtureQuery {
    pub qid: String,
    pub question: String,
    pub answer: String,
    pub gold_passage: String,
    pub distractor_passage: String,
    pub clues: Vec<FixtureClue>,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub passages: Vec<FixturePassage>,
    pub queries: Vec<FixtureQuery>,
}

/// Paths of a fixture written to disk.
#[derive(Debug, Clone)]
pub struct FixtureFiles {
    pub corpus: PathBuf,
    pub queries: PathBuf,
    pub clues: PathBuf,
}

const SYLLABLES: &[&str] = &[
    "ka", "lo", "mi", "ren", "tas", "vo", "bel", "dri", "qua", "nor", "sel", "tum", "gar", "fin",
    "hol", "zan", "pe", "ric", "mor", "ulf",
];

fn word(rng: &mut impl Rng, used: &mut HashSet<String>) -> String {
    loop {
        let n = rng.random_range(3..=4);
        let w: String = (0..n).map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())]).collect();
        if used.insert(w.clone()) {
            return w;
        }
    }
}

/// Replaces the digit at `pos` of a four-digit year.
fn with_digit(year: u32, pos: usize, digit: u32) -> u32 {
    let mut digits: Vec<u32> = year.to_string().chars().map(|c| c.to_digit(10).expect("digit")).collect();
    digits[pos] = digit;
    digits.iter().fold(0, |acc, d| acc * 10 + d)
}

pub fn build(seed: u64) -> Fixture {
    let mut rng = crate::rng(seed);
    let mut used = HashSet::new();
    let mut passages = Vec::new();
    let mut queries = Vec::new();

    for q in 0..QUERIES {
        let entity = word(&mut rng, &mut used);
        let place = word(&mut rng, &mut used);
        let engineer = word(&mut rng, &mut used);
        let river = word(&mut rng, &mut used);
        let year: u32 = 1810 + rng.random_range(0..80) * 2;

        // Six distinct wrong years, each one digit away from the true year.
        let mut wrong = Vec::new();
        let last = year % 10;
        for d in 0..10 {
            if d != last && wrong.len() < CORRUPTIONS_PER_QUERY {
                wrong.push(with_digit(year, 3, d));
            }
        }
        wrong.shuffle(&mut rng);

        let qid = format!("q{q:03}");
        let gold = format!("p{q:03}g");
        let distractor = format!("p{q:03}d");
        passages.push(FixturePassage {
            id: gold.clone(),
            title: format!("{entity} bridge"),
            text: format!(
                "the {entity} bridge in {place} was opened to traffic in {year} after {engineer} finished the stone arches over the {river}"
            ),
        });
        passages.push(FixturePassage {
            id: distractor.clone(),
            title: format!("{entity} bridge proposals"),
            text: format!(
                "plans for the {entity} bridge in {place} were opened to debate in {} {} {} {} {} and {}",
                wrong[0], wrong[1], wrong[2], wrong[3], wrong[4], wrong[5]
            ),
        });
        passages.push(FixturePassage {
            id: format!("p{q:03}a"),
            title: place.clone(),
            text: format!("{place} is a market town on the {river} known for its harbor and wool trade"),
        });
        passages.push(FixturePassage {
            id: format!("p{q:03}b"),
            title: engineer.clone(),
            text: format!("{engineer} was an engineer who trained masons and surveyed roads near {place}"),
        });

        let mut clues = vec![FixtureClue {
            text: format!("the {entity} bridge in {place} was opened to traffic in {year}"),
            logprob: -0.5,
            corrupted: false,
        }];
        for (i, w) in wrong.iter().enumerate() {
            clues.push(FixtureClue {
                text: format!("the {entity} bridge in {place} was opened to traffic in {w}"),
                logprob: -0.8 - 0.1 * i as f64,
                corrupted: true,
            });
        }
        clues.push(FixtureClue {
            text: format!("{engineer} finished the stone arches over the {river}"),
            logprob: -2.0,
            corrupted: false,
        });
        clues.push(FixtureClue {
            text: format!("traffic crossed the {river} at {place} once the arches stood"),
            logprob: -2.2,
            corrupted: false,
        });
        clues.push(FixtureClue {
            text: format!("{entity} crossing built by {engineer}"),
            logprob: -2.4,
            corrupted: false,
        });
        clues.shuffle(&mut rng);

        queries.push(FixtureQuery {
            qid,
            question: format!("when was the {entity} bridge in {place} opened"),
            answer: year.to_string(),
            gold_passage: gold,
            distractor_passage: distractor,
            clues,
        });
    }

    Fixture { passages, queries }
}

impl Fixture {
    pub fn corpus_jsonl(&self) -> String {
        self.passages
            .iter()
            .map(|p| json!({"id": p.id, "title": p.title, "text": p.text}).to_string() + "\n")
            .collect()
    }

    pub fn queries_jsonl(&self) -> String {
        self.queries
            .iter()
            .map(|q| json!({"qid": q.qid, "question": q.question, "answers": [q.answer]}).to_string() + "\n")
            .collect()
    }

    pub fn clues_jsonl(&self) -> String {
        self.queries
            .iter()
            .map(|q| {
                let clues: Vec<_> = q
                    .clues
                    .iter()
                    .map(|c| json!({"text": c.text, "logprob": c.logprob, "source_tag": "context"}))
                    .collect();
                json!({"qid": q.qid, "clues": clues}).to_string() + "\n"
            })
            .collect()
    }

    pub fn write_to(&self, dir: &Path) -> io::Result<FixtureFiles> {
        let files = FixtureFiles {
            corpus: dir.join("corpus.jsonl"),
            queries: dir.join("queries.jsonl"),
            clues: dir.join("clues.jsonl"),
        };
        fs::write(&files.corpus, self.corpus_jsonl())?;
        fs::write(&files.queries, self.queries_jsonl())?;
        fs::write(&files.clues, self.clues_jsonl())?;
        Ok(files)
    }
}
