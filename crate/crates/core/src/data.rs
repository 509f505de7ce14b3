//! Corpus ingestion, the token-embedding store, and triple construction.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One description/code pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusItem {
    pub id: String,
    pub description: String,
    pub code: String,
    pub lang: String,
}

/// Reads a JSON-lines corpus with keys `id`, `description`, `code`, `lang`.
/// Blank lines are skipped.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusItem>> {
    let reader = BufReader::new(fs::File::open(path)?);
    parse_corpus(reader)
}

pub fn parse_corpus(reader: impl BufRead) -> Result<Vec<CorpusItem>> {
    let mut items = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let item: CorpusItem = serde_json::from_str(&line).map_err(|e| Error::CorpusLine {
            line: line_no,
            reason: e.to_string(),
        })?;
        if item.description.is_empty() || item.code.is_empty() {
            return Err(Error::CorpusLine {
                line: line_no,
                reason: "description and code must be nonempty".into(),
            });
        }
        if !seen.insert(item.id.clone()) {
            return Err(Error::DuplicateId(item.id));
        }
        items.push(item);
    }
    Ok(items)
}

pub fn write_corpus(items: &[CorpusItem], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Token-embedding matrix of one item, `rows x n` float32.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenMatrix {
    rows: usize,
    data: Vec<f32>,
}

impl TokenMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

pub const STORE_MAGIC: &[u8; 6] = b"HYCQE1";

/// Static per-token embeddings keyed by item id, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    n: usize,
    entries: IndexMap<String, TokenMatrix>,
}

impl EmbeddingStore {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig(
                "embedding dimension must be positive".into(),
            ));
        }
        Ok(Self {
            n,
            entries: IndexMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, id: impl Into<String>, data: Vec<f32>) -> Result<()> {
        let id = id.into();
        if data.is_empty() {
            return Err(Error::Empty("token matrix"));
        }
        if !data.len().is_multiple_of(self.n) {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: data.len() % self.n,
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("token matrix"));
        }
        if self.entries.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        let rows = data.len() / self.n;
        self.entries.insert(id, TokenMatrix { rows, data });
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&TokenMatrix> {
        self.entries.get(id)
    }

    pub fn require(&self, id: &str) -> Result<&TokenMatrix> {
        self.get(id).ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &TokenMatrix)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Serializes to the `HYCQE1` layout:
    /// magic, u32 n, u64 count, then per item u32 id length, id bytes,
    /// u32 M and `M x n` f32 row-major. All little-endian.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let n = u32::try_from(self.n).map_err(|_| Error::InvalidConfig("n exceeds u32".into()))?;
        let mut out = Vec::new();
        out.extend_from_slice(STORE_MAGIC);
        out.extend_from_slice(&n.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for (id, m) in &self.entries {
            let id_len = u32::try_from(id.len())
                .map_err(|_| Error::InvalidConfig("id longer than u32::MAX bytes".into()))?;
            let rows = u32::try_from(m.rows)
                .map_err(|_| Error::InvalidConfig("too many token rows".into()))?;
            out.extend_from_slice(&id_len.to_le_bytes());
            out.extend_from_slice(id.as_bytes());
            out.extend_from_slice(&rows.to_le_bytes());
            for v in &m.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(6)? != STORE_MAGIC {
            return Err(store_err("bad magic"));
        }
        let n = r.u32()? as usize;
        if n == 0 {
            return Err(store_err("zero embedding dimension"));
        }
        let count = r.u64()?;
        let mut store = Self::new(n)?;
        for _ in 0..count {
            let id_len = r.u32()? as usize;
            let id = std::str::from_utf8(r.take(id_len)?)
                .map_err(|_| store_err("id is not UTF-8"))?
                .to_string();
            let rows = r.u32()? as usize;
            if rows == 0 {
                return Err(store_err(&format!("item `{id}` has no token rows")));
            }
            let len = rows
                .checked_mul(n)
                .and_then(|v| v.checked_mul(4))
                .ok_or_else(|| store_err("row count overflows"))?;
            let raw = r.take(len)?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            store.insert(id, data).map_err(|e| match e {
                Error::DuplicateId(id) => store_err(&format!("duplicate id `{id}`")),
                Error::NonFinite(_) => store_err("non-finite embedding value"),
                other => other,
            })?;
        }
        if r.pos != bytes.len() {
            return Err(store_err("trailing bytes after last item"));
        }
        Ok(store)
    }
}

pub fn write_embeddings(store: &EmbeddingStore, path: impl AsRef<Path>) -> Result<()> {
    let bytes = store.to_bytes()?;
    let mut f = BufWriter::new(fs::File::create(path)?);
    f.write_all(&bytes)?;
    f.flush()?;
    Ok(())
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingStore> {
    EmbeddingStore::from_bytes(&fs::read(path)?)
}

fn store_err(reason: &str) -> Error {
    Error::Format {
        what: "embedding store",
        reason: reason.to_string(),
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .ok_or_else(|| store_err("truncated"))?;
        let s = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| store_err("truncated"))?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

/// `<description, positive code, negative code>` by item id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triple {
    pub qid: String,
    pub pos_id: String,
    pub neg_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleDataset {
    pub split: Split,
    pub triples: Vec<Triple>,
}

impl TripleDataset {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Query ids in dataset order.
    pub fn qids(&self) -> impl Iterator<Item = &str> {
        self.triples.iter().map(|t| t.qid.as_str())
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        for t in &self.triples {
            serde_json::to_writer(&mut w, t)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_jsonl(path: impl AsRef<Path>, split: Split) -> Result<Self> {
        let reader = BufReader::new(fs::File::open(path)?);
        let mut triples = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let t: Triple = serde_json::from_str(&line).map_err(|e| Error::Format {
                what: "triples",
                reason: format!("line {}: {e}", i + 1),
            })?;
            if t.pos_id == t.neg_id {
                return Err(Error::Format {
                    what: "triples",
                    reason: format!("line {}: positive and negative ids coincide", i + 1),
                });
            }
            triples.push(t);
        }
        Ok(Self { split, triples })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            valid: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, valid: f64, test: f64) -> Result<Self> {
        let r = Self { train, valid, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.valid, self.test];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0)
            || (all.iter().sum::<f64>() - 1.0).abs() > 1e-6
        {
            return Err(Error::InvalidConfig(format!(
                "split ratios must be nonnegative and sum to 1, got {all:?}"
            )));
        }
        Ok(())
    }

    /// Item counts per split; train and valid are rounded, test takes the rest.
    pub fn sizes(&self, total: usize) -> [usize; 3] {
        let train = ((total as f64) * self.train).round() as usize;
        let train = train.min(total);
        let valid = (((total as f64) * self.valid).round() as usize).min(total - train);
        [train, valid, total - train - valid]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitTriples {
    pub train: TripleDataset,
    pub valid: TripleDataset,
    pub test: TripleDataset,
}

/// Uniform draw from `0..pool` excluding `exclude`, by rejection.
pub(crate) fn sample_negative(rng: &mut impl Rng, pool: usize, exclude: usize) -> usize {
    debug_assert!(pool >= 2);
    loop {
        let j = rng.random_range(0..pool);
        if j != exclude {
            return j;
        }
    }
}

/// Splits the corpus by a seeded shuffle and pairs each item with a negative
/// code drawn uniformly from the other items of the same split.
///
/// Empty splits are allowed (ratio 0); a split holding a single item is an
/// error because it has no candidate negative.
pub fn make_triples(corpus: &[CorpusItem], ratios: SplitRatios, seed: u64) -> Result<SplitTriples> {
    ratios.validate()?;
    if corpus.len() < 2 {
        return Err(Error::SplitTooSmall {
            split: "corpus",
            size: corpus.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut rng);

    let [n_train, n_valid, _] = ratios.sizes(corpus.len());
    let mut parts = [
        order[..n_train].to_vec(),
        order[n_train..n_train + n_valid].to_vec(),
        order[n_train + n_valid..].to_vec(),
    ];
    let splits = [Split::Train, Split::Valid, Split::Test];
    let mut out = Vec::with_capacity(3);
    for (members, split) in parts.iter_mut().zip(splits) {
        members.sort_unstable();
        if members.len() == 1 {
            return Err(Error::SplitTooSmall {
                split: split.name(),
                size: 1,
            });
        }
        let triples = (0..members.len())
            .map(|i| {
                let j = sample_negative(&mut rng, members.len(), i);
                let item = &corpus[members[i]];
                Triple {
                    qid: item.id.clone(),
                    pos_id: item.id.clone(),
                    neg_id: corpus[members[j]].id.clone(),
                }
            })
            .collect();
        out.push(TripleDataset { split, triples });
    }
    let test = out.pop().unwrap();
    let valid = out.pop().unwrap();
    let train = out.pop().unwrap();
    Ok(SplitTriples { train, valid, test })
}

/// Lowercased tokens split on whitespace and punctuation.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Norm of every pseudo token vector.
pub const PSEUDO_TOKEN_NORM: f64 = 0.1;

fn pseudo_token_vector(token: &str, n: usize, seed: u64) -> Vec<f64> {
    let mut h = Sha256::new();
    h.update(b"hypermatch/pseudo-token\0");
    h.update(seed.to_le_bytes());
    h.update(token.as_bytes());
    let key: [u8; 32] = h.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(key);
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v
                .into_iter()
                .map(|x| x / norm * PSEUDO_TOKEN_NORM)
                .collect();
        }
    }
}

/// Deterministic stand-in for a frozen encoder: one row per token, each a
/// keyed-hash-seeded Gaussian direction of norm [`PSEUDO_TOKEN_NORM`].
/// Returns the `M x n` matrix row-major.
pub fn pseudo_embed(text: &str, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidConfig(
            "embedding dimension must be positive".into(),
        ));
    }
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(Error::Empty("token list"));
    }
    let mut out = Vec::with_capacity(tokens.len() * n);
    for t in &tokens {
        out.extend(pseudo_token_vector(t, n, seed));
    }
    Ok(out)
}

/// Pseudo-embeds every description and code of a corpus into two stores.
pub fn embed_corpus(
    corpus: &[CorpusItem],
    n: usize,
    seed: u64,
) -> Result<(EmbeddingStore, EmbeddingStore)> {
    let mut desc = EmbeddingStore::new(n)?;
    let mut code = EmbeddingStore::new(n)?;
    for item in corpus {
        let to_f32 = |v: Vec<f64>| v.into_iter().map(|x| x as f32).collect::<Vec<_>>();
        desc.insert(&item.id, to_f32(pseudo_embed(&item.description, n, seed)?))?;
        code.insert(&item.id, to_f32(pseudo_embed(&item.code, n, seed)?))?;
    }
    Ok((desc, code))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;
    use std::io::Cursor;

    fn item(id: &str) -> CorpusItem {
        CorpusItem {
            id: id.into(),
            description: format!("describe {id}"),
            code: format!("fn {id}() {{}}"),
            lang: "rust".into(),
        }
    }

    #[test]
    fn corpus_happy_path() {
        let text = r#"{"id":"a","description":"add","code":"a+b","lang":"py"}
{"id":"b","description":"sub","code":"a-b","lang":"py"}

{"id":"c","description":"mul","code":"a*b","lang":"go"}
"#;
        let items = parse_corpus(Cursor::new(text)).unwrap();
        let ids: Vec<_> = items.iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }

    #[test]
    fn corpus_missing_key_names_line() {
        let text = r#"{"id":"a","description":"add","code":"a+b","lang":"py"}
{"id":"b","description":"sub","lang":"py"}"#;
        match parse_corpus(Cursor::new(text)) {
            Err(Error::CorpusLine { line, reason }) => {
                assert_eq!(line, 2);
                assert!(reason.contains("code"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn corpus_duplicate_id() {
        let text = r#"{"id":"a","description":"x","code":"y","lang":"py"}
{"id":"a","description":"z","code":"w","lang":"py"}"#;
        assert!(matches!(
            parse_corpus(Cursor::new(text)),
            Err(Error::DuplicateId(id)) if id == "a"
        ));
    }

    #[test]
    fn store_round_trip_and_layout() {
        let mut store = EmbeddingStore::new(4).unwrap();
        store.insert("x", vec![1.0, -2.0, 0.5, 3.25]).unwrap();
        store
            .insert("yy", (0..8).map(|v| v as f32 * 0.1).collect())
            .unwrap();
        let bytes = store.to_bytes().unwrap();
        assert_eq!(&bytes[..6], b"HYCQE1");
        assert_eq!(u32::from_le_bytes(bytes[6..10].try_into().unwrap()), 4);
        assert_eq!(u64::from_le_bytes(bytes[10..18].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[18..22].try_into().unwrap()), 1);
        assert_eq!(bytes[22], b'x');
        assert_eq!(u32::from_le_bytes(bytes[23..27].try_into().unwrap()), 1);
        let back = EmbeddingStore::from_bytes(&bytes).unwrap();
        assert_eq!(back, store);
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn empty_store_round_trips() {
        let store = EmbeddingStore::new(3).unwrap();
        let bytes = store.to_bytes().unwrap();
        assert_eq!(bytes.len(), 18);
        assert_eq!(EmbeddingStore::from_bytes(&bytes).unwrap(), store);
    }

    #[test]
    fn store_validation() {
        let mut store = EmbeddingStore::new(2).unwrap();
        store.insert("a", vec![1.0, 2.0]).unwrap();
        let bytes = store.to_bytes().unwrap();

        let mut bad = bytes.clone();
        bad[..6].copy_from_slice(b"HYCQE2");
        assert!(matches!(
            EmbeddingStore::from_bytes(&bad),
            Err(Error::Format { .. })
        ));
        assert!(EmbeddingStore::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut trailing = bytes.clone();
        trailing.push(7);
        assert!(EmbeddingStore::from_bytes(&trailing).is_err());
        // count says two items but only one is present
        let mut count = bytes;
        count[10] = 2;
        assert!(EmbeddingStore::from_bytes(&count).is_err());

        assert!(matches!(
            store.insert("b", vec![1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(store.insert("a", vec![1.0, 2.0]).is_err());
        assert!(store.insert("c", vec![]).is_err());
        assert!(store.insert("d", vec![f32::NAN, 0.0]).is_err());
    }

    #[test]
    fn two_item_split_forces_negative() {
        let corpus = vec![item("a"), item("b")];
        let ratios = SplitRatios::new(1.0, 0.0, 0.0).unwrap();
        let st = make_triples(&corpus, ratios, 5).unwrap();
        assert!(st.valid.is_empty() && st.test.is_empty());
        for t in &st.train.triples {
            let other = if t.qid == "a" { "b" } else { "a" };
            assert_eq!(t.neg_id, other);
            assert_eq!(t.pos_id, t.qid);
        }
    }

    #[test]
    fn singleton_split_is_rejected() {
        let corpus: Vec<_> = (0..3).map(|i| item(&format!("i{i}"))).collect();
        let ratios = SplitRatios::new(2.0 / 3.0, 0.0, 1.0 / 3.0).unwrap();
        assert!(matches!(
            make_triples(&corpus, ratios, 0),
            Err(Error::SplitTooSmall {
                split: "test",
                size: 1
            })
        ));
        assert!(make_triples(&corpus[..1], SplitRatios::default(), 0).is_err());
    }

    #[test]
    fn splits_partition_the_corpus() {
        let corpus: Vec<_> = (0..103).map(|i| item(&format!("i{i}"))).collect();
        let st = make_triples(&corpus, SplitRatios::default(), 42).unwrap();
        assert_eq!(st.train.len(), 82);
        assert_eq!(st.valid.len(), 10);
        assert_eq!(st.test.len(), 11);
        let mut all = HashSet::new();
        for ds in [&st.train, &st.valid, &st.test] {
            let members: HashSet<_> = ds.qids().collect();
            for t in &ds.triples {
                assert_ne!(t.pos_id, t.neg_id);
                assert!(members.contains(t.neg_id.as_str()));
                assert!(all.insert(t.qid.clone()));
            }
        }
        assert_eq!(all.len(), corpus.len());
        assert_eq!(
            st,
            make_triples(&corpus, SplitRatios::default(), 42).unwrap()
        );
        assert_ne!(
            st,
            make_triples(&corpus, SplitRatios::default(), 43).unwrap()
        );
    }

    #[test]
    fn bad_ratios_rejected() {
        assert!(SplitRatios::new(0.5, 0.5, 0.5).is_err());
        assert!(SplitRatios::new(-0.1, 0.6, 0.5).is_err());
    }

    #[test]
    fn tokenizer_splits_punctuation() {
        assert_eq!(
            tokenize("Add two_numbers(a, b) -> Sum!"),
            ["add", "two", "numbers", "a", "b", "sum"]
        );
        assert!(tokenize(" ,;. ").is_empty());
    }

    #[test]
    fn pseudo_embed_examples() {
        let m = pseudo_embed("add two numbers", 16, 1).unwrap();
        assert_eq!(m.len(), 3 * 16);
        for row in m.chunks(16) {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 0.1).abs() < 1e-9);
        }
        let twice = pseudo_embed("sort then Sort", 16, 1).unwrap();
        assert_eq!(&twice[..16], &twice[32..]);
        assert_ne!(&twice[..16], &twice[16..32]);
        assert_ne!(pseudo_embed("add two numbers", 16, 2).unwrap(), m);
        assert_eq!(pseudo_embed("add two numbers", 16, 1).unwrap(), m);
        assert!(matches!(pseudo_embed("!!", 16, 1), Err(Error::Empty(_))));
    }

    #[test]
    fn embed_corpus_counts() {
        let corpus = vec![item("a"), item("b"), item("c")];
        let (d, c) = embed_corpus(&corpus, 8, 3).unwrap();
        assert_eq!((d.len(), c.len()), (3, 3));
        assert_eq!(d.get("b").unwrap().rows(), 2);
    }

    proptest! {
        #[test]
        fn store_round_trip_is_bitwise(
            n in 1usize..6,
            items in proptest::collection::vec((1usize..4, any::<u32>()), 0..5),
        ) {
            let mut store = EmbeddingStore::new(n).unwrap();
            for (k, (rows, seed)) in items.iter().enumerate() {
                let data = (0..rows * n)
                    .map(|i| f32::from_bits((seed.wrapping_add(i as u32 * 7919)) & 0x3fff_ffff))
                    .collect();
                store.insert(format!("id-{k}"), data).unwrap();
            }
            let bytes = store.to_bytes().unwrap();
            let back = EmbeddingStore::from_bytes(&bytes).unwrap();
            prop_assert_eq!(back.to_bytes().unwrap(), bytes);
        }
    }
}
