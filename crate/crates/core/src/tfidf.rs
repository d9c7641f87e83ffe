//! TF-IDF document vectors over the most frequent training n-grams.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenize::{basic_tokenize, ngrams, remove_stopwords, StopWords};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TfidfConfig {
    pub max_features: usize,
    pub ngram: usize,
    pub stopword_removal: bool,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        Self {
            max_features: 300,
            ngram: 1,
            stopword_removal: true,
        }
    }
}

/// Fitted vocabulary (sorted lexicographically) and smoothed IDF weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub terms: Vec<String>,
    pub idf: Vec<f64>,
    pub config: TfidfConfig,
}

/// Lowercased word tokens, optionally stop-word filtered, turned into n-grams.
pub fn analyze(text: &str, config: &TfidfConfig, stopwords: &StopWords) -> Result<Vec<String>> {
    let mut seq = basic_tokenize(text, true);
    if config.stopword_removal {
        seq = remove_stopwords(&seq, stopwords);
    }
    Ok(ngrams(&seq, config.ngram)?.tokens)
}

impl TfidfModel {
    /// Keeps the `max_features` terms with the highest raw count across `train` (ties go to
    /// the lexicographically smaller term); `idf(t) = ln((1 + N) / (1 + df(t))) + 1`.
    pub fn fit<'a, I>(train: I, config: TfidfConfig) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if config.max_features == 0 {
            return Err(Error::InvalidArgument("max_features must be positive".into()));
        }
        if !(1..=2).contains(&config.ngram) {
            return Err(Error::InvalidArgument(format!("ngram must be 1 or 2, got {}", config.ngram)));
        }
        let stopwords = StopWords::english();
        // term -> (corpus count, document frequency)
        let mut stats: HashMap<String, (usize, usize)> = HashMap::new();
        let mut n_docs = 0usize;
        for text in train {
            n_docs += 1;
            let mut local: HashMap<String, usize> = HashMap::new();
            for term in analyze(text, &config, &stopwords)? {
                *local.entry(term).or_insert(0) += 1;
            }
            for (term, count) in local {
                let entry = stats.entry(term).or_insert((0, 0));
                entry.0 += count;
                entry.1 += 1;
            }
        }
        if n_docs == 0 {
            return Err(Error::InvalidArgument("cannot fit TF-IDF on an empty corpus".into()));
        }
        if stats.is_empty() {
            return Err(Error::InvalidArgument("TF-IDF vocabulary is empty after filtering".into()));
        }

        let mut ranked: Vec<(String, usize, usize)> =
            stats.into_iter().map(|(t, (c, df))| (t, c, df)).collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(config.max_features);
        ranked.sort_unstable_by(|a, b| a.0.cmp(&b.0));

        let n = n_docs as f64;
        let idf = ranked
            .iter()
            .map(|&(_, _, df)| ((1.0 + n) / (1.0 + df as f64)).ln() + 1.0)
            .collect();
        Ok(Self {
            terms: ranked.into_iter().map(|(t, _, _)| t).collect(),
            idf,
            config,
        })
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    /// Raw term counts times IDF, L2-normalized; all-zero vectors stay zero.
    pub fn transform(&self, text: &str) -> Vec<f64> {
        let stopwords = StopWords::english();
        self.transform_with(text, &stopwords)
    }

    fn transform_with(&self, text: &str, stopwords: &StopWords) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        // the config was validated at fit time, so analysis cannot fail here
        let terms = analyze(text, &self.config, stopwords).unwrap_or_default();
        for term in terms {
            if let Some(i) = self.index_of(&term) {
                v[i] += 1.0;
            }
        }
        for (x, idf) in v.iter_mut().zip(&self.idf) {
            *x *= idf;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }

    /// Order-preserving parallel [`transform`](Self::transform).
    pub fn transform_batch(&self, texts: &[&str]) -> Vec<Vec<f64>> {
        let stopwords = StopWords::english();
        texts
            .par_iter()
            .map(|t| self.transform_with(t, &stopwords))
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, serde_json::to_vec_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let model: Self = serde_json::from_slice(&bytes)?;
        if model.terms.len() != model.idf.len() || !model.terms.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Format(format!(
                "{}: terms must be sorted, unique and aligned with idf",
                path.display()
            )));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;

    fn unigram(k: usize) -> TfidfConfig {
        TfidfConfig {
            max_features: k,
            ngram: 1,
            stopword_removal: false,
        }
    }

    #[test]
    fn two_doc_fixture() {
        let m = TfidfModel::fit(["a b a", "b c"], unigram(3)).unwrap();
        assert_eq!(m.terms, ["a", "b", "c"]);
        let expect = [(1.5f64).ln() + 1.0, 1.0, (1.5f64).ln() + 1.0];
        for (got, want) in m.idf.iter().zip(expect) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }

        let v = m.transform("a a b");
        let raw = [2.0 * expect[0], expect[1], 0.0];
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (got, want) in v.iter().zip(raw) {
            assert_abs_diff_eq!(*got, want / norm, epsilon = 1e-15);
        }
    }

    #[test]
    fn frequency_selection_and_ties() {
        // counts: a=3, b=2, c=2, d=1; K=2 keeps a and the tie winner b
        let m = TfidfModel::fit(["a a b c", "a b c d"], unigram(2)).unwrap();
        assert_eq!(m.terms, ["a", "b"]);
        let all = TfidfModel::fit(["a a b c", "a b c d"], unigram(100)).unwrap();
        assert_eq!(all.terms, ["a", "b", "c", "d"]);
    }

    #[test]
    fn identical_documents_have_unit_idf() {
        let m = TfidfModel::fit(["x y", "x y", "x y"], unigram(10)).unwrap();
        assert!(m.idf.iter().all(|&w| w == 1.0));
    }

    #[test]
    fn out_of_vocabulary_is_zero() {
        let m = TfidfModel::fit(["a b"], unigram(10)).unwrap();
        assert!(m.transform("zzz qqq").iter().all(|&x| x == 0.0));
    }

    #[test]
    fn bigrams_with_stopwords_removed() {
        let cfg = TfidfConfig {
            max_features: 10,
            ngram: 2,
            stopword_removal: true,
        };
        let m = TfidfModel::fit(["The senate passed the bill", "senate passed"], cfg).unwrap();
        assert_eq!(m.terms, ["passed bill", "senate passed"]);
    }

    #[test]
    fn fit_errors() {
        assert!(TfidfModel::fit(std::iter::empty::<&str>(), unigram(3)).is_err());
        let cfg = TfidfConfig {
            stopword_removal: true,
            ..unigram(3)
        };
        assert!(TfidfModel::fit(["the and of"], cfg).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = TfidfModel::fit(["a b a", "b c"], unigram(3)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tfidf.json");
        m.save(&path).unwrap();
        assert_eq!(TfidfModel::load(&path).unwrap(), m);
    }

    proptest! {
        #[test]
        fn nonzero_vectors_are_unit(docs in proptest::collection::vec("[a-e ]{1,30}", 1..10), probe in "[a-e ]{0,30}") {
            let texts: Vec<&str> = docs.iter().map(String::as_str).collect();
            if let Ok(m) = TfidfModel::fit(texts, unigram(4)) {
                let v = m.transform(&probe);
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!(norm == 0.0 || (norm - 1.0).abs() <= 1e-9);
            }
        }

        #[test]
        fn doubling_counts_is_invisible(docs in proptest::collection::vec("[a-e ]{1,30}", 1..10), probe in "[a-e ]{1,30}") {
            let texts: Vec<&str> = docs.iter().map(String::as_str).collect();
            if let Ok(m) = TfidfModel::fit(texts, unigram(5)) {
                let once = m.transform(&probe);
                let twice = m.transform(&format!("{probe} {probe}"));
                for (a, b) in once.iter().zip(&twice) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }
        }
    }
}
