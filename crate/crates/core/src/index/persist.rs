//! Binary index container.
//!
//! Layout (all integers little-endian, `varint` is unsigned LEB128):
//!
//! ```text
//! "CFIX"            magic
//! u32               format version
//! section*          tag: u8, byte length: u64, payload
//! ```
//!
//! Sections appear exactly once, in this order:
//!
//! | tag | payload |
//! |-----|---------|
//! | 1 params    | k1: f64 bits, b: f64 bits, lowercase: u8, stemming: u8, stopwords: u8 |
//! | 2 vocabulary| count: varint, then per term: byte length varint + UTF-8 |
//! | 3 postings  | per term (vocabulary order): count varint, then (doc delta varint, tf varint)* |
//! | 4 doc lengths | count varint, then one varint per document |
//! | 5 doc ids   | count varint, then per document: byte length varint + UTF-8 |
//!
//! Doc deltas are relative to the previous posting of the same term; the first
//! delta is the ordinal itself. `avgdl` is recomputed on load.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use super::{Bm25Params, InvertedIndex, Posting, Stemming, TokenizerConfig};

pub const MAGIC: &[u8; 4] = b"CFIX";
pub const FORMAT_VERSION: u32 = 1;

const TAG_PARAMS: u8 = 1;
const TAG_VOCAB: u8 = 2;
const TAG_POSTINGS: u8 = 3;
const TAG_DOC_LENGTHS: u8 = 4;
const TAG_DOC_IDS: u8 = 5;

#[derive(Debug, thiserror::Error)]
pub enum PersistError {
    #[error("index I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt index file: {0}")]
    Corrupt(String),
    #[error("unsupported index format version {found} (this build reads version {expected})")]
    VersionMismatch { found: u32, expected: u32 },
}

fn corrupt<T>(msg: impl Into<String>) -> Result<T, PersistError> {
    Err(PersistError::Corrupt(msg.into()))
}

fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_varint(out, s.len() as u64);
    out.extend_from_slice(s.as_bytes());
}

fn put_section(out: &mut Vec<u8>, tag: u8, payload: &[u8]) {
    out.push(tag);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
}

/// Serializes `index` into the versioned container format.
pub fn encode_index(index: &InvertedIndex) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());

    let mut buf = Vec::new();
    buf.extend_from_slice(&index.params.k1.to_bits().to_le_bytes());
    buf.extend_from_slice(&index.params.b.to_bits().to_le_bytes());
    buf.push(u8::from(index.tokenizer.lowercase));
    buf.push(match index.tokenizer.stemming {
        Stemming::None => 0,
        Stemming::Porter => 1,
    });
    buf.push(u8::from(index.tokenizer.stopword_removal));
    put_section(&mut out, TAG_PARAMS, &buf);

    buf.clear();
    put_varint(&mut buf, index.terms.len() as u64);
    for term in &index.terms {
        put_str(&mut buf, term);
    }
    put_section(&mut out, TAG_VOCAB, &buf);

    buf.clear();
    for list in &index.postings {
        put_varint(&mut buf, list.len() as u64);
        let mut prev = 0u32;
        for p in list {
            put_varint(&mut buf, u64::from(p.doc - prev));
            put_varint(&mut buf, u64::from(p.tf));
            prev = p.doc;
        }
    }
    put_section(&mut out, TAG_POSTINGS, &buf);

    buf.clear();
    put_varint(&mut buf, index.doc_lengths.len() as u64);
    for &len in &index.doc_lengths {
        put_varint(&mut buf, u64::from(len));
    }
    put_section(&mut out, TAG_DOC_LENGTHS, &buf);

    buf.clear();
    put_varint(&mut buf, index.doc_ids.len() as u64);
    for id in &index.doc_ids {
        put_str(&mut buf, id);
    }
    put_section(&mut out, TAG_DOC_IDS, &buf);

    out
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8], what: &'static str) -> Self {
        Self { data, pos: 0, what }
    }

    fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8], PersistError> {
        if self.remaining() < n {
            return corrupt(format!("truncated {} section", self.what));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, PersistError> {
        Ok(self.bytes(1)?[0])
    }

    fn u64_le(&mut self) -> Result<u64, PersistError> {
        let b = self.bytes(8)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    fn varint(&mut self) -> Result<u64, PersistError> {
        let mut v = 0u64;
        for shift in (0..64).step_by(7) {
            let byte = self.u8()?;
            let bits = u64::from(byte & 0x7f);
            if shift == 63 && bits > 1 {
                return corrupt(format!("varint overflow in {} section", self.what));
            }
            v |= bits << shift;
            if byte & 0x80 == 0 {
                return Ok(v);
            }
        }
        corrupt(format!("varint overflow in {} section", self.what))
    }

    fn varint_u32(&mut self) -> Result<u32, PersistError> {
        let v = self.varint()?;
        u32::try_from(v).or_else(|_| corrupt(format!("value {v} out of range in {} section", self.what)))
    }

    /// Reads an element count, bounded by the bytes left (every element
    /// takes at least `min_size` bytes).
    fn count(&mut self, min_size: usize) -> Result<usize, PersistError> {
        let n = self.varint()?;
        if n > (self.remaining() / min_size.max(1)) as u64 {
            return corrupt(format!("count {n} exceeds {} section size", self.what));
        }
        Ok(n as usize)
    }

    fn string(&mut self) -> Result<String, PersistError> {
        let len = self.count(1)?;
        let raw = self.bytes(len)?;
        match std::str::from_utf8(raw) {
            Ok(s) => Ok(s.to_string()),
            Err(_) => corrupt(format!("invalid UTF-8 in {} section", self.what)),
        }
    }

    fn finish(&self) -> Result<(), PersistError> {
        if self.remaining() != 0 {
            return corrupt(format!("{} trailing bytes in {} section", self.remaining(), self.what));
        }
        Ok(())
    }
}

fn section<'a>(file: &mut Reader<'a>, tag: u8, what: &'static str) -> Result<Reader<'a>, PersistError> {
    if file.remaining() == 0 {
        return corrupt(format!("missing {what} section"));
    }
    let found = file.u8()?;
    if found != tag {
        return corrupt(format!("expected {what} section (tag {tag}), found tag {found}"));
    }
    let len = file.u64_le()?;
    if len > file.remaining() as u64 {
        return corrupt(format!("truncated {what} section"));
    }
    Ok(Reader::new(file.bytes(len as usize)?, what))
}

/// Parses and validates an index container.
pub fn decode_index(data: &[u8]) -> Result<InvertedIndex, PersistError> {
    if data.len() < 8 || &data[..4] != MAGIC {
        return corrupt("bad magic bytes");
    }
    let version = u32::from_le_bytes(data[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(PersistError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let mut file = Reader::new(&data[8..], "file");

    let mut r = section(&mut file, TAG_PARAMS, "params")?;
    let k1 = f64::from_bits(r.u64_le()?);
    let b = f64::from_bits(r.u64_le()?);
    let lowercase = match r.u8()? {
        0 => false,
        1 => true,
        v => return corrupt(format!("bad lowercase flag {v}")),
    };
    let stemming = match r.u8()? {
        0 => Stemming::None,
        1 => Stemming::Porter,
        v => return corrupt(format!("unknown stemming code {v}")),
    };
    let stopword_removal = match r.u8()? {
        0 => false,
        1 => true,
        v => return corrupt(format!("bad stopword flag {v}")),
    };
    r.finish()?;
    let params = Bm25Params { k1, b };
    if super::validate_params(&params).is_err() {
        return corrupt(format!("invalid BM25 parameters k1={k1}, b={b}"));
    }
    let tokenizer = TokenizerConfig {
        lowercase,
        stemming,
        stopword_removal,
    };

    let mut r = section(&mut file, TAG_VOCAB, "vocabulary")?;
    let n_terms = r.count(1)?;
    let mut terms = Vec::with_capacity(n_terms);
    let mut vocabulary = HashMap::with_capacity(n_terms);
    for id in 0..n_terms {
        let term = r.string()?;
        if term.is_empty() {
            return corrupt("empty vocabulary term");
        }
        if vocabulary.insert(term.clone(), id as u32).is_some() {
            return corrupt(format!("duplicate vocabulary term {term:?}"));
        }
        terms.push(term);
    }
    r.finish()?;

    let mut r = section(&mut file, TAG_POSTINGS, "postings")?;
    let mut postings = Vec::with_capacity(n_terms);
    for _ in 0..n_terms {
        let n = r.count(2)?;
        if n == 0 {
            return corrupt("term with empty posting list");
        }
        let mut list = Vec::with_capacity(n);
        let mut prev: Option<u32> = None;
        for _ in 0..n {
            let delta = r.varint_u32()?;
            let doc = match prev {
                None => delta,
                Some(_) if delta == 0 => return corrupt("posting ordinals not strictly ascending"),
                Some(p) => p
                    .checked_add(delta)
                    .map_or_else(|| corrupt("posting ordinal overflow"), Ok)?,
            };
            let tf = r.varint_u32()?;
            if tf == 0 {
                return corrupt("zero term frequency");
            }
            list.push(Posting { doc, tf });
            prev = Some(doc);
        }
        postings.push(list);
    }
    r.finish()?;

    let mut r = section(&mut file, TAG_DOC_LENGTHS, "doc lengths")?;
    let n_docs = r.count(1)?;
    if n_docs == 0 {
        return corrupt("index has no documents");
    }
    let mut doc_lengths = Vec::with_capacity(n_docs);
    for _ in 0..n_docs {
        doc_lengths.push(r.varint_u32()?);
    }
    r.finish()?;

    let mut r = section(&mut file, TAG_DOC_IDS, "doc ids")?;
    if r.count(1)? != n_docs {
        return corrupt("doc id table size differs from doc length table");
    }
    let mut doc_ids = Vec::with_capacity(n_docs);
    let mut seen = HashSet::with_capacity(n_docs);
    for _ in 0..n_docs {
        let id = r.string()?;
        if !seen.insert(id.clone()) {
            return corrupt(format!("duplicate doc id {id:?}"));
        }
        doc_ids.push(id);
    }
    r.finish()?;
    file.finish()?;

    // Every ordinal must exist and per-document term frequencies must add up
    // to the stored lengths.
    let mut totals = vec![0u64; n_docs];
    for list in &postings {
        for p in list {
            match totals.get_mut(p.doc as usize) {
                Some(t) => *t += u64::from(p.tf),
                None => return corrupt(format!("posting references unknown document {}", p.doc)),
            }
        }
    }
    if totals.iter().zip(&doc_lengths).any(|(&t, &l)| t != u64::from(l)) {
        return corrupt("document lengths disagree with postings");
    }

    Ok(InvertedIndex::assemble(
        vocabulary,
        terms,
        postings,
        doc_lengths,
        doc_ids,
        params,
        tokenizer,
    ))
}

pub fn save_index(index: &InvertedIndex, path: &Path) -> Result<(), PersistError> {
    fs::write(path, encode_index(index))?;
    Ok(())
}

pub fn load_index(path: &Path) -> Result<InvertedIndex, PersistError> {
    let data = fs::read(path)?;
    decode_index(&data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Passage;
    use crate::index::{build_index, DocOrdinal};

    fn toy() -> InvertedIndex {
        build_index(
            vec![
                Passage::new("d1", "", "cat sat"),
                Passage::new("d2", "", "dog ran"),
                Passage::new("d3", "Cats", "cat cat dog"),
            ],
            TokenizerConfig::default(),
            Bm25Params::default(),
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let idx = toy();
        let back = decode_index(&encode_index(&idx)).unwrap();
        assert_eq!(back, idx);
        assert_eq!(back.search("q", "cat", 10), idx.search("q", "cat", 10));
        let q = vec!["cat".to_string(), "dog".to_string()];
        for d in 0..3 {
            let a = idx.bm25_score(&q, DocOrdinal(d)).unwrap();
            let b = back.bm25_score(&q, DocOrdinal(d)).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.cfix");
        let idx = toy();
        save_index(&idx, &path).unwrap();
        assert_eq!(load_index(&path).unwrap(), idx);
    }

    #[test]
    fn wrong_magic_is_corrupt() {
        let mut data = encode_index(&toy());
        data[0] = b'X';
        assert!(matches!(decode_index(&data), Err(PersistError::Corrupt(_))));
    }

    #[test]
    fn future_version_is_rejected() {
        let mut data = encode_index(&toy());
        data[4..8].copy_from_slice(&99u32.to_le_bytes());
        let err = decode_index(&data).unwrap_err();
        assert!(matches!(err, PersistError::VersionMismatch { found: 99, expected: 1 }));
        let msg = err.to_string();
        assert!(msg.contains("99") && msg.contains('1'));
    }

    #[test]
    fn every_truncation_is_corrupt() {
        let data = encode_index(&toy());
        for len in 0..data.len() {
            assert!(
                matches!(decode_index(&data[..len]), Err(PersistError::Corrupt(_))),
                "prefix of length {len} accepted"
            );
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_index(Path::new("/nonexistent/x.cfix")).unwrap_err();
        assert!(matches!(err, PersistError::Io(_)));
    }

    #[test]
    fn varint_round_trip() {
        for v in [0u64, 1, 127, 128, 300, u32::MAX as u64, u64::MAX] {
            let mut buf = Vec::new();
            put_varint(&mut buf, v);
            let mut r = Reader::new(&buf, "test");
            assert_eq!(r.varint().unwrap(), v);
            r.finish().unwrap();
        }
    }
}
