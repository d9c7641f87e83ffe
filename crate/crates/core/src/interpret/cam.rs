//! Token-level class activation maps and their top-fraction highlighting.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifier::LinearHead;
use crate::error::{check_dim, Error, Result};
use crate::static_embed::TokenMatrix;
use crate::tokenize::{TokenSequence, CLS, PAD, SEP};

/// Per-token CAM scores `M_c(l) = Σ_k W[c,k] · f[l,k]` over the masked-in positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CamScores {
    pub scores: Vec<f64>,
    pub class_index: usize,
    pub tokens: TokenSequence,
    /// Row index in the source matrix of each score.
    pub positions: Vec<usize>,
}

impl CamScores {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// `tokens` must align with the rows of `f`; masked-out rows are dropped from the output.
pub fn cam(f: &TokenMatrix, tokens: &TokenSequence, head: &LinearHead, class: usize) -> Result<CamScores> {
    check_dim(head.dim(), f.dim())?;
    check_dim(f.len(), tokens.len())?;
    if class >= head.classes() {
        return Err(Error::InvalidArgument(format!(
            "class {class} out of range for a {}-class head",
            head.classes()
        )));
    }
    let w = head.weight.row(class);
    let positions: Vec<usize> = f.active_indices().collect();
    let scores = positions
        .iter()
        .map(|&l| f.rows.row(l).dot(&w))
        .collect();
    Ok(CamScores {
        scores,
        class_index: class,
        tokens: positions.iter().map(|&l| tokens.tokens[l].clone()).collect::<Vec<_>>().into(),
        positions,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedToken {
    pub text: String,
    pub score: f64,
    pub flagged: bool,
}

fn is_special(token: &str) -> bool {
    token == CLS || token == SEP || token == PAD
}

/// `ceil(fraction · n)`, with products within 1e-9 of an integer taken as that integer.
pub fn highlight_count(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    let k = if (x - x.round()).abs() <= 1e-9 { x.round() } else { x.ceil() };
    (k as usize).min(n)
}

/// Flags the `ceil(fraction · L)` highest-scoring content tokens, preferring earlier
/// tokens on ties. Special tokens are neither counted nor flagged.
pub fn highlight(scores: &CamScores, fraction: f64) -> Result<Vec<AnnotatedToken>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("highlight fraction {fraction} not in (0, 1]")));
    }
    let mut content: Vec<usize> = (0..scores.len())
        .filter(|&i| !is_special(&scores.tokens.tokens[i]))
        .collect();
    let k = highlight_count(fraction, content.len());
    // stable sort keeps index order among equal scores
    content.sort_by(|&a, &b| scores.scores[b].total_cmp(&scores.scores[a]));
    let mut flags = vec![false; scores.len()];
    for &i in &content[..k] {
        flags[i] = true;
    }
    Ok(scores
        .tokens
        .iter()
        .zip(&scores.scores)
        .zip(flags)
        .map(|((text, &score), flagged)| AnnotatedToken {
            text: text.to_string(),
            score,
            flagged,
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderFormat {
    Ansi,
    Html,
}

impl FromStr for RenderFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ansi" => Ok(Self::Ansi),
            "html" => Ok(Self::Html),
            other => Err(Error::InvalidArgument(format!(
                "unsupported render format {other:?} (expected ansi or html)"
            ))),
        }
    }
}

const ANSI_RED: &str = "\x1b[31m";
const ANSI_RESET: &str = "\x1b[0m";

fn escape_html(s: &str, out: &mut String) {
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
}

/// Space-joined tokens with flagged ones in red (ANSI) or wrapped in
/// `<span class="cam-hot">` (HTML).
pub fn render(tokens: &[AnnotatedToken], format: RenderFormat) -> String {
    let mut out = String::new();
    if format == RenderFormat::Html {
        out.push_str("<p class=\"cam\">");
    }
    for (i, tok) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        match (format, tok.flagged) {
            (RenderFormat::Ansi, true) => {
                let _ = write!(out, "{ANSI_RED}{}{ANSI_RESET}", tok.text);
            }
            (RenderFormat::Ansi, false) => out.push_str(&tok.text),
            (RenderFormat::Html, true) => {
                out.push_str("<span class=\"cam-hot\">");
                escape_html(&tok.text, &mut out);
                out.push_str("</span>");
            }
            (RenderFormat::Html, false) => escape_html(&tok.text, &mut out),
        }
    }
    if format == RenderFormat::Html {
        out.push_str("</p>");
    }
    out
}

/// JSON export of one CAM explanation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CamReport {
    pub tokens: Vec<String>,
    pub scores: Vec<f64>,
    pub flags: Vec<bool>,
    pub class: usize,
    /// `"predicted"` or `"given"`.
    pub class_source: String,
    pub logits: Vec<f64>,
    pub fraction: f64,
    /// What the highlight fraction is counted over.
    pub count_basis: String,
}

impl CamReport {
    pub fn new(
        annotated: &[AnnotatedToken],
        class: usize,
        class_source: &str,
        logits: Vec<f64>,
        fraction: f64,
        count_basis: &str,
    ) -> Self {
        Self {
            tokens: annotated.iter().map(|t| t.text.clone()).collect(),
            scores: annotated.iter().map(|t| t.score).collect(),
            flags: annotated.iter().map(|t| t.flagged).collect(),
            class,
            class_source: class_source.to_string(),
            logits,
            fraction,
            count_basis: count_basis.to_string(),
        }
    }

    pub fn annotated(&self) -> Vec<AnnotatedToken> {
        self.tokens
            .iter()
            .zip(&self.scores)
            .zip(&self.flags)
            .map(|((text, &score), &flagged)| AnnotatedToken {
                text: text.clone(),
                score,
                flagged,
            })
            .collect()
    }
}
