use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Pearson correlations between token rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub entries: Vec<Vec<f64>>,
    pub tokens: Vec<String>,
}

/// `entries[i][j]` is the Pearson correlation of rows `i` and `j` across columns. A row
/// with zero variance correlates 0 with every other row and 1 with itself.
pub fn correlation_matrix(f: &Array2<f64>, tokens: &[String]) -> Result<CorrelationMatrix> {
    let n = f.nrows();
    check_dim(n, tokens.len())?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("correlation needs at least 2 rows, got {n}")));
    }
    let d = f.ncols() as f64;
    let centered: Vec<Vec<f64>> = f
        .rows()
        .into_iter()
        .map(|r| {
            let mean = r.sum() / d;
            r.iter().map(|x| x - mean).collect()
        })
        .collect();
    // squared centered norms, 0 for constant rows
    let norms: Vec<f64> = f
        .rows()
        .into_iter()
        .zip(&centered)
        .map(|(raw, c)| {
            let ss = c.iter().map(|x| x * x).sum::<f64>();
            let magnitude = raw.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            // constant rows leave only rounding residue after centering
            if ss.sqrt() <= 1e-12 * magnitude.max(f64::MIN_POSITIVE) * d.sqrt() {
                0.0
            } else {
                ss
            }
        })
        .collect();

    let mut entries = vec![vec![0.0; n]; n];
    for i in 0..n {
        entries[i][i] = 1.0;
        for j in i + 1..n {
            let r = if norms[i] == 0.0 || norms[j] == 0.0 {
                0.0
            } else {
                let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                (dot / (norms[i] * norms[j]).sqrt()).clamp(-1.0, 1.0)
            };
            entries[i][j] = r;
            entries[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        entries,
        tokens: tokens.to_vec(),
    })
}

impl CorrelationMatrix {
    /// CSV with the tokens as header row and first column.
    pub fn to_csv(&self) -> Result<String> {
        let csv_err = |e: csv::Error| Error::Format(e.to_string());
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = std::iter::once(String::new()).chain(self.tokens.iter().cloned());
        w.write_record(header).map_err(csv_err)?;
        for (tok, row) in self.tokens.iter().zip(&self.entries) {
            let record = std::iter::once(tok.clone()).chain(row.iter().map(f64::to_string));
            w.write_record(record).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }
}
