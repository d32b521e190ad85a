use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization of the per-pair discordance weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauVariant {
    /// `2·(max(w_ij, w_ji) − 0.5)`: spans 1.0 at w = 0.5 down to τ at w = 1.
    #[default]
    Scaled,
    /// `max(w_ij, w_ji) − 0.5` as written in the original formula.
    Literal,
}

/// Pairwise preference weights: `w[i][j]` is the share of samples ranking label `i` before `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefWeights {
    pub labels: Vec<String>,
    pub w: Vec<Vec<f64>>,
}

impl PrefWeights {
    /// All off-diagonal entries 0.5.
    pub fn uninformative(labels: &[String]) -> Self {
        let n = labels.len();
        Self {
            labels: labels.to_vec(),
            w: vec![vec![0.5; n]; n],
        }
    }

    pub fn from_matrix(labels: &[String], w: Vec<Vec<f64>>) -> Result<Self> {
        let p = Self {
            labels: labels.to_vec(),
            w,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i][j]
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        if self.w.len() != n || self.w.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidWeights(format!("matrix is not {n}x{n}")));
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let v = self.w[i][j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidWeights(format!("w[{i}][{j}] = {v} outside [0, 1]")));
                }
                if (v + self.w[j][i] - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidWeights(format!(
                        "w[{i}][{j}] + w[{j}][{i}] = {}",
                        v + self.w[j][i]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Element-wise mean of matrices over the same labels.
    pub fn mean(parts: &[PrefWeights]) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptyInput("preference weights"))?;
        let n = first.labels.len();
        let mut w = vec![vec![0.0; n]; n];
        for p in parts {
            if p.labels != first.labels {
                return Err(Error::LabelMismatch(format!("{:?} vs {:?}", p.labels, first.labels)));
            }
            for i in 0..n {
                for j in 0..n {
                    w[i][j] += p.w[i][j] / parts.len() as f64;
                }
            }
        }
        // restore exact complements lost to rounding
        for i in 0..n {
            w[i][i] = 0.5;
            for j in i + 1..n {
                w[j][i] = 1.0 - w[i][j];
            }
        }
        Self::from_matrix(&first.labels, w)
    }
}

fn positions<'a>(pi: &'a [String], other: &[String]) -> Result<HashMap<&'a str, usize>> {
    let pos: HashMap<&str, usize> = pi.iter().enumerate().map(|(k, l)| (l.as_str(), k)).collect();
    if pos.len() != pi.len() || pi.len() != other.len() || other.iter().any(|l| !pos.contains_key(l.as_str())) {
        return Err(Error::LabelMismatch(format!("{pi:?} vs {other:?}")));
    }
    Ok(pos)
}

/// Label pairs ranked in opposite order by the two permutations.
pub fn discordant_pairs<'a>(pi: &'a [String], other: &[String]) -> Result<Vec<(&'a str, &'a str)>> {
    let pos = positions(other, pi)?;
    let mut out = Vec::new();
    for a in 0..pi.len() {
        for b in a + 1..pi.len() {
            if pos[pi[a].as_str()] > pos[pi[b].as_str()] {
                out.push((pi[a].as_str(), pi[b].as_str()));
            }
        }
    }
    Ok(out)
}

pub fn kendall_tau(pi: &[String], other: &[String]) -> Result<f64> {
    let n = pi.len();
    if n < 2 {
        return Err(Error::InvalidConfig("tau needs at least two labels".into()));
    }
    let l = discordant_pairs(pi, other)?.len() as f64;
    Ok(1.0 - 4.0 * l / (n * (n - 1)) as f64)
}

pub fn weighted_kendall_tau(pi: &[String], other: &[String], w: &PrefWeights, variant: TauVariant) -> Result<f64> {
    let n = pi.len();
    if n < 2 {
        return Err(Error::InvalidConfig("tau needs at least two labels".into()));
    }
    w.validate()?;
    let scale = match variant {
        TauVariant::Scaled => 2.0,
        TauVariant::Literal => 1.0,
    };
    let mut lw = 0.0;
    for (a, b) in discordant_pairs(pi, other)? {
        let (i, j) = match (w.index(a), w.index(b)) {
            (Some(i), Some(j)) => (i, j),
            _ => return Err(Error::LabelMismatch(format!("{a} or {b} missing from weights"))),
        };
        lw += scale * (w.get(i, j).max(w.get(j, i)) - 0.5);
    }
    Ok(1.0 - 4.0 * lw / (n * (n - 1)) as f64)
}
