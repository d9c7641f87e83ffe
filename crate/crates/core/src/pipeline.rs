//! Text-to-representation backends: TF-IDF vectors, pooled static word vectors, and pooled
//! contextual vectors from the frozen encoder.

use log::info;
use rayon::prelude::*;

use crate::classifier::{argmax, LinearHead};
use crate::encoder::{content_mask, forward, EncoderWeights};
use crate::error::{Error, Result};
use crate::interpret::{cam, highlight, CamReport};
use crate::static_embed::{embed_sequence, gap_pool, EmbeddingTable, TokenMatrix};
use crate::tfidf::TfidfModel;
use crate::tokenize::{basic_tokenize, encode, wordpiece_tokenize, TokenSequence, WordPieceVocab};

#[derive(Clone, Debug)]
pub enum WordTokenizer {
    Basic { lowercase: bool },
    WordPiece(WordPieceVocab),
}

impl WordTokenizer {
    pub fn tokenize(&self, text: &str) -> TokenSequence {
        match self {
            WordTokenizer::Basic { lowercase } => basic_tokenize(text, *lowercase),
            WordTokenizer::WordPiece(vocab) => wordpiece_tokenize(text, vocab),
        }
    }
}

/// Pre-pooling token vectors for one document.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenView {
    /// Aligned with `matrix` rows.
    pub tokens: TokenSequence,
    /// Masked in on content tokens only.
    pub matrix: TokenMatrix,
    /// Tokens dropped because the table had no vector for them.
    pub skipped: usize,
    /// Tokens cut off by the encoder's maximum length.
    pub truncated: usize,
}

#[derive(Clone, Debug)]
pub struct StaticBackend {
    pub table: EmbeddingTable,
    pub tokenizer: WordTokenizer,
}

impl StaticBackend {
    pub fn token_view(&self, text: &str) -> TokenView {
        let embedded = embed_sequence(&self.tokenizer.tokenize(text), &self.table);
        TokenView {
            tokens: embedded.tokens,
            matrix: embedded.matrix,
            skipped: embedded.skipped,
            truncated: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EncoderBackend {
    pub weights: EncoderWeights,
    pub vocab: WordPieceVocab,
    pub max_length: usize,
}

impl EncoderBackend {
    pub fn new(weights: EncoderWeights, vocab: WordPieceVocab, max_length: usize) -> Result<Self> {
        if vocab.len() > weights.config.vocab_size {
            return Err(Error::InvalidArgument(format!(
                "vocabulary has {} tokens but the encoder embeds only {}",
                vocab.len(),
                weights.config.vocab_size
            )));
        }
        if max_length > weights.config.max_positions || max_length < 3 {
            return Err(Error::InvalidArgument(format!(
                "max_length {max_length} must lie in 3..={}",
                weights.config.max_positions
            )));
        }
        Ok(Self {
            weights,
            vocab,
            max_length,
        })
    }

    /// WordPiece tokens, `[CLS] … [SEP]` encoding, encoder forward pass; the returned
    /// matrix covers every position but masks in only content tokens.
    pub fn token_view(&self, text: &str) -> Result<TokenView> {
        let pieces = wordpiece_tokenize(text, &self.vocab);
        let ids = encode(&pieces, &self.vocab, self.max_length, None)?;
        let out = forward(&ids, &self.weights)?;
        let tokens: Vec<String> = ids
            .input_ids
            .iter()
            .map(|&id| self.vocab.token(id).unwrap_or(crate::tokenize::UNK).to_string())
            .collect();
        Ok(TokenView {
            tokens: tokens.into(),
            matrix: TokenMatrix::new(out.rows, content_mask(&ids, &self.vocab))?,
            skipped: 0,
            truncated: pieces.len().saturating_sub(self.max_length - 2),
        })
    }

    /// Rows of the word-embedding table for the content tokens of `text`, i.e. the static
    /// counterpart of [`token_view`](Self::token_view) restricted to content positions.
    pub fn static_view(&self, text: &str) -> Result<TokenView> {
        let pieces = wordpiece_tokenize(text, &self.vocab);
        let ids = encode(&pieces, &self.vocab, self.max_length, None)?;
        let mask = content_mask(&ids, &self.vocab);
        let kept: Vec<u32> = ids.input_ids.iter().zip(&mask).filter(|(_, &m)| m).map(|(&i, _)| i).collect();
        let rows = self.weights.word_embedding.select(ndarray::Axis(0), &kept.iter().map(|&i| i as usize).collect::<Vec<_>>());
        let tokens: Vec<String> = kept
            .iter()
            .map(|&id| self.vocab.token(id).unwrap_or(crate::tokenize::UNK).to_string())
            .collect();
        Ok(TokenView {
            tokens: tokens.into(),
            matrix: TokenMatrix::dense(rows),
            skipped: 0,
            truncated: pieces.len().saturating_sub(self.max_length - 2),
        })
    }
}

// one backend lives per run, so the encoder variant is not boxed
#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug)]
pub enum Backend {
    Tfidf(TfidfModel),
    Static(StaticBackend),
    Encoder(EncoderBackend),
}

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RepresentationStats {
    pub documents: usize,
    /// Documents whose pooled vector is all zeros because no token was usable.
    pub empty_documents: usize,
    pub skipped_tokens: usize,
    pub truncated_documents: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Representations {
    pub features: Vec<Vec<f64>>,
    pub stats: RepresentationStats,
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Tfidf(_) => "tfidf",
            Backend::Static(_) => "static",
            Backend::Encoder(_) => "bert",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Backend::Tfidf(m) => m.dim(),
            Backend::Static(s) => s.table.dim(),
            Backend::Encoder(e) => e.weights.config.hidden,
        }
    }

    /// Pre-pooling token vectors; TF-IDF has none.
    pub fn token_view(&self, text: &str) -> Result<TokenView> {
        match self {
            Backend::Tfidf(_) => Err(Error::InvalidArgument(
                "the tfidf backend has no per-token representation".into(),
            )),
            Backend::Static(s) => Ok(s.token_view(text)),
            Backend::Encoder(e) => e.token_view(text),
        }
    }

    /// What the CAM highlight fraction is counted over.
    pub fn count_basis(&self) -> &'static str {
        match self {
            Backend::Encoder(_) => "wordpiece content tokens",
            Backend::Static(StaticBackend {
                tokenizer: WordTokenizer::WordPiece(_),
                ..
            }) => "wordpiece tokens with a vector",
            _ => "words with a vector",
        }
    }

    /// CAM explanation of `text`: scores for `class`, or for the predicted class when
    /// `None`, with the top `fraction` of tokens flagged.
    pub fn explain(&self, head: &LinearHead, text: &str, class: Option<usize>, fraction: f64) -> Result<CamReport> {
        let view = self.token_view(text)?;
        let logits = head.logits(&gap_pool(&view.matrix).vector)?;
        let (class, source) = match class {
            Some(c) => (c, "given"),
            None => (argmax(&logits), "predicted"),
        };
        let annotated = highlight(&cam(&view.matrix, &view.tokens, head, class)?, fraction)?;
        Ok(CamReport::new(&annotated, class, source, logits, fraction, self.count_basis()))
    }

    /// One pooled vector per text, computed in parallel, returned in input order.
    pub fn represent(&self, texts: &[&str]) -> Result<Representations> {
        if let Backend::Tfidf(model) = self {
            let features = model.transform_batch(texts);
            let empty = features.iter().filter(|v| v.iter().all(|&x| x == 0.0)).count();
            return Ok(Representations {
                features,
                stats: RepresentationStats {
                    documents: texts.len(),
                    empty_documents: empty,
                    ..Default::default()
                },
            });
        }
        let views = texts
            .par_iter()
            .map(|t| {
                let view = self.token_view(t)?;
                let pooled = gap_pool(&view.matrix);
                Ok((pooled, view.skipped, view.truncated))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut stats = RepresentationStats {
            documents: texts.len(),
            ..Default::default()
        };
        let features = views
            .into_iter()
            .map(|(pooled, skipped, truncated)| {
                stats.skipped_tokens += skipped;
                stats.empty_documents += usize::from(pooled.empty);
                stats.truncated_documents += usize::from(truncated > 0);
                pooled.vector
            })
            .collect();
        if stats.empty_documents > 0 {
            info!("{} documents had no usable tokens and pool to zero", stats.empty_documents);
        }
        Ok(Representations { features, stats })
    }
}
