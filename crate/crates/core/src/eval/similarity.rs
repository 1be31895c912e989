use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use crate::error::EvalError;
use crate::remote::{HttpModelClient, RemoteConfig};
use crate::text::normalize_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityKind {
    RemoteEmbedding,
    Lexical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Embedding {
    Dense(Vec<f64>),
    /// Coordinates keyed by feature name; absent features are zero.
    Sparse(BTreeMap<String, f64>),
}

impl Embedding {
    pub fn scaled(&self, k: f64) -> Self {
        match self {
            Embedding::Dense(v) => Embedding::Dense(v.iter().map(|x| x * k).collect()),
            Embedding::Sparse(m) => Embedding::Sparse(m.iter().map(|(f, x)| (f.clone(), x * k)).collect()),
        }
    }

    fn norm(&self) -> f64 {
        let sq: f64 = match self {
            Embedding::Dense(v) => v.iter().map(|x| x * x).sum(),
            Embedding::Sparse(m) => m.values().map(|x| x * x).sum(),
        };
        sq.sqrt()
    }
}

/// Cosine similarity; a zero vector has similarity 0 with everything.
pub fn cosine(a: &Embedding, b: &Embedding) -> f64 {
    let dot = match (a, b) {
        (Embedding::Dense(x), Embedding::Dense(y)) => x.iter().zip(y).map(|(p, q)| p * q).sum(),
        (Embedding::Sparse(x), Embedding::Sparse(y)) => {
            x.iter().filter_map(|(f, p)| y.get(f).map(|q| p * q)).sum()
        }
        _ => 0.0,
    };
    let n = a.norm() * b.norm();
    if n == 0.0 {
        0.0
    } else {
        dot / n
    }
}

pub trait SimilarityBackend: Send + Sync {
    fn kind(&self) -> SimilarityKind;

    fn embed(&self, text: &str) -> Result<Embedding, EvalError>;
}

/// Character-trigram count vectors over the lowercased, normalized string.
/// Strings shorter than three characters count as a single feature.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalSimilarity;

pub fn trigrams(text: &str) -> BTreeMap<String, f64> {
    let chars: Vec<char> = normalize_text(text).to_lowercase().chars().collect();
    let mut counts = BTreeMap::new();
    if chars.is_empty() {
        return counts;
    }
    if chars.len() < 3 {
        counts.insert(chars.iter().collect(), 1.0);
        return counts;
    }
    for w in chars.windows(3) {
        *counts.entry(w.iter().collect()).or_insert(0.0) += 1.0;
    }
    counts
}

impl SimilarityBackend for LexicalSimilarity {
    fn kind(&self) -> SimilarityKind {
        SimilarityKind::Lexical
    }

    fn embed(&self, text: &str) -> Result<Embedding, EvalError> {
        Ok(Embedding::Sparse(trigrams(text)))
    }
}

/// Embeddings from a remote `/embeddings` endpoint.
#[derive(Debug)]
pub struct RemoteSimilarity {
    client: HttpModelClient,
    dimension: Mutex<Option<usize>>,
}

impl RemoteSimilarity {
    pub fn new(config: RemoteConfig) -> Result<Self, EvalError> {
        Ok(RemoteSimilarity {
            client: HttpModelClient::new(config).map_err(|e| EvalError::Embedding(e.to_string()))?,
            dimension: Mutex::new(None),
        })
    }
}

impl SimilarityBackend for RemoteSimilarity {
    fn kind(&self) -> SimilarityKind {
        SimilarityKind::RemoteEmbedding
    }

    fn embed(&self, text: &str) -> Result<Embedding, EvalError> {
        let v = self
            .client
            .embed(text)
            .map_err(|e| EvalError::Embedding(e.to_string()))?;
        let mut dim = self.dimension.lock().expect("dimension lock");
        match *dim {
            Some(d) if d != v.len() => {
                return Err(EvalError::Embedding(format!(
                    "dimension changed from {d} to {}",
                    v.len()
                )))
            }
            None => *dim = Some(v.len()),
            _ => {}
        }
        Ok(Embedding::Dense(v))
    }
}

fn check_threshold(threshold: f64) -> Result<(), EvalError> {
    if (0.0..=1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(EvalError::Threshold(threshold.to_string()))
    }
}

fn argmax(sims: impl IntoIterator<Item = f64>) -> Option<(usize, f64)> {
    // strict `>` keeps the earliest label on ties
    sims.into_iter().enumerate().fold(None, |best, (i, s)| match best {
        Some((_, b)) if s <= b => best,
        _ => Some((i, s)),
    })
}

/// Maps a free-form relation onto the closest vocabulary label, or `None`
/// when the best cosine is below `threshold`.
pub fn semantic_map(
    relation: &str,
    vocabulary: &[String],
    backend: &dyn SimilarityBackend,
    threshold: f64,
) -> Result<Option<String>, EvalError> {
    if vocabulary.is_empty() {
        return Err(EvalError::EmptyVocabulary);
    }
    check_threshold(threshold)?;
    let r = backend.embed(relation)?;
    let sims = vocabulary
        .iter()
        .map(|l| backend.embed(l).map(|e| cosine(&r, &e)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(argmax(sims)
        .filter(|&(_, s)| s >= threshold)
        .map(|(i, _)| vocabulary[i].clone()))
}

/// [`semantic_map`] with cached vocabulary embeddings and memoized answers.
pub struct SemanticMapper<'a> {
    backend: &'a dyn SimilarityBackend,
    vocabulary: Vec<String>,
    vocab_embeddings: Vec<Embedding>,
    threshold: f64,
    cache: Mutex<HashMap<String, Option<String>>>,
}

impl<'a> SemanticMapper<'a> {
    pub fn new(
        backend: &'a dyn SimilarityBackend,
        vocabulary: Vec<String>,
        threshold: f64,
    ) -> Result<Self, EvalError> {
        if vocabulary.is_empty() {
            return Err(EvalError::EmptyVocabulary);
        }
        check_threshold(threshold)?;
        let vocab_embeddings = vocabulary
            .iter()
            .map(|l| backend.embed(l))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SemanticMapper {
            backend,
            vocabulary,
            vocab_embeddings,
            threshold,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Best label and its cosine, ignoring the threshold.
    pub fn best(&self, relation: &str) -> Result<(String, f64), EvalError> {
        let r = self.backend.embed(relation)?;
        let (i, s) = argmax(self.vocab_embeddings.iter().map(|e| cosine(&r, e)))
            .expect("vocabulary is nonempty");
        Ok((self.vocabulary[i].clone(), s))
    }

    pub fn map(&self, relation: &str) -> Result<Option<String>, EvalError> {
        if let Some(hit) = self.cache.lock().expect("cache lock").get(relation) {
            return Ok(hit.clone());
        }
        let (label, s) = self.best(relation)?;
        let out = (s >= self.threshold).then_some(label);
        self.cache
            .lock()
            .expect("cache lock")
            .insert(relation.to_owned(), out.clone());
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(ls: &[&str]) -> Vec<String> {
        ls.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn trigram_features() {
        let t = trigrams("hasLocation");
        assert_eq!(t.len(), 9);
        assert!(t.contains_key("loc"));
        assert_eq!(trigrams("ab").len(), 1);
        assert!(trigrams("").is_empty());
        assert_eq!(trigrams("aaaa")["aaa"], 2.0);
    }

    #[test]
    fn identity_maps_to_itself() {
        let v = vocab(&["hasLocation", "bornIn"]);
        for l in &v {
            assert_eq!(semantic_map(l, &v, &LexicalSimilarity, 1.0).unwrap().as_deref(), Some(l.as_str()));
        }
    }

    #[test]
    fn paraphrase_cosine_matches_hand_count() {
        // "is located in" has 11 distinct trigrams, "haslocation" 9; they share
        // loc, oca, cat. bornin shares none.
        let expected = 3.0 / (11.0f64.sqrt() * 3.0);
        let a = LexicalSimilarity.embed("is located in").unwrap();
        let b = LexicalSimilarity.embed("hasLocation").unwrap();
        assert!((cosine(&a, &b) - expected).abs() < 1e-12);
        let c = LexicalSimilarity.embed("bornIn").unwrap();
        assert_eq!(cosine(&a, &c), 0.0);
        let v = vocab(&["hasLocation", "bornIn"]);
        assert_eq!(
            semantic_map("is located in", &v, &LexicalSimilarity, expected).unwrap().as_deref(),
            Some("hasLocation")
        );
        assert_eq!(semantic_map("is located in", &v, &LexicalSimilarity, expected + 1e-9).unwrap(), None);
    }

    #[test]
    fn errors_and_zero_vectors() {
        assert_eq!(
            semantic_map("x", &[], &LexicalSimilarity, 0.5),
            Err(EvalError::EmptyVocabulary)
        );
        assert!(matches!(
            semantic_map("x", &vocab(&["a"]), &LexicalSimilarity, 1.5),
            Err(EvalError::Threshold(_))
        ));
        let zero = Embedding::Dense(vec![0.0, 0.0]);
        assert_eq!(cosine(&zero, &Embedding::Dense(vec![1.0, 0.0])), 0.0);
        // zero similarity still maps at threshold 0, to the first label
        assert_eq!(
            semantic_map("", &vocab(&["a", "b"]), &LexicalSimilarity, 0.0).unwrap().as_deref(),
            Some("a")
        );
    }

    #[test]
    fn mapper_agrees_with_function() {
        let v = vocab(&["hasLocation", "bornIn", "locatedIn"]);
        let m = SemanticMapper::new(&LexicalSimilarity, v.clone(), 0.2).unwrap();
        for r in ["is located in", "was born in", "xyz", "located"] {
            assert_eq!(m.map(r).unwrap(), semantic_map(r, &v, &LexicalSimilarity, 0.2).unwrap());
            assert_eq!(m.map(r).unwrap(), semantic_map(r, &v, &LexicalSimilarity, 0.2).unwrap());
        }
    }

    struct Scaled(f64);

    impl SimilarityBackend for Scaled {
        fn kind(&self) -> SimilarityKind {
            SimilarityKind::Lexical
        }

        fn embed(&self, text: &str) -> Result<Embedding, EvalError> {
            Ok(LexicalSimilarity.embed(text)?.scaled(self.0))
        }
    }

    #[test]
    fn argmax_is_scale_invariant() {
        let v = vocab(&["hasLocation", "bornIn", "locatedIn", "partOf"]);
        for r in ["is located in", "was born in", "is part of", "qq"] {
            let base = semantic_map(r, &v, &LexicalSimilarity, 0.0).unwrap();
            for k in [1e-6, 0.5, 3.0, 1e6] {
                assert_eq!(semantic_map(r, &v, &Scaled(k), 0.0).unwrap(), base, "{r} k={k}");
            }
        }
    }
}
