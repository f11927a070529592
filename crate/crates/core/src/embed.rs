//! Word vectors, bag-of-words sentence averages and cosine similarity.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What an out-of-vocabulary token contributes to a sentence average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OovPolicy {
    /// Zero vector, still counted in the denominator.
    #[default]
    Zero,
    /// Ignored entirely.
    Skip,
}

impl std::str::FromStr for OovPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(OovPolicy::Zero),
            "skip" => Ok(OovPolicy::Skip),
            other => Err(Error::argument(format!("unknown oov policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    /// Lines dropped during loading because of a wrong value count or an
    /// unparseable number.
    pub skipped_lines: usize,
    pub oov: OovPolicy,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: HashMap::new(),
            skipped_lines: 0,
            oov: OovPolicy::Zero,
        }
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::argument(format!(
                "vector of length {} in a table of dimension {}",
                vector.len(),
                self.dim
            )));
        }
        self.vectors.insert(token.into(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub fn with_oov(mut self, oov: OovPolicy) -> Self {
        self.oov = oov;
        self
    }

    /// Reads the whitespace text format `token v1 ... v_dim`, one entry per
    /// line. Lines with the wrong arity are skipped and counted.
    pub fn load(path: &Path, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::argument("embedding dimension must be positive"));
        }
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut table = EmbeddingTable::new(dim);
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else {
                continue;
            };
            let values: std::result::Result<Vec<f64>, _> = fields.map(str::parse::<f64>).collect();
            match values {
                Ok(v) if v.len() == dim => {
                    table.vectors.insert(token.to_string(), v);
                }
                _ => table.skipped_lines += 1,
            }
        }
        if table.vectors.is_empty() {
            return Err(Error::Format(format!(
                "{}: no valid {dim}-dimensional vectors",
                path.display()
            )));
        }
        Ok(table)
    }

    /// Writes the table in the same text format, tokens sorted.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut tokens: Vec<&String> = self.vectors.keys().collect();
        tokens.sort();
        let mut out = String::new();
        for t in tokens {
            out.push_str(t);
            for v in &self.vectors[t] {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Average of the token vectors; the zero vector for an empty input.
pub fn embed_text<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable) -> Vec<f64> {
    let mut sum = vec![0.0; table.dim];
    let mut count = 0usize;
    for t in tokens {
        match table.get(t.as_ref()) {
            Some(v) => {
                for (s, x) in sum.iter_mut().zip(v) {
                    *s += x;
                }
                count += 1;
            }
            None if table.oov == OovPolicy::Zero => count += 1,
            None => {}
        }
    }
    if count > 0 {
        let n = count as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    sum
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::argument(format!("cosine of lengths {} and {}", a.len(), b.len())));
    }
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(2);
        t.insert("a", vec![1.0, 0.0]).unwrap();
        t.insert("b", vec![0.0, 1.0]).unwrap();
        t
    }

    #[test]
    fn loads_well_formed_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vec.txt");
        let line = |t: &str, n: usize| format!("{t} {}\n", vec!["0.5"; n].join(" "));
        std::fs::write(&path, [line("x", 50), line("y", 50), line("z", 50)].concat()).unwrap();
        let t = EmbeddingTable::load(&path, 50).unwrap();
        assert_eq!((t.len(), t.skipped_lines), (3, 0));

        std::fs::write(&path, [line("x", 50), line("short", 49)].concat()).unwrap();
        let t = EmbeddingTable::load(&path, 50).unwrap();
        assert_eq!((t.len(), t.skipped_lines), (1, 1));
        assert!(t.get("short").is_none());

        std::fs::write(&path, "").unwrap();
        assert!(matches!(EmbeddingTable::load(&path, 50), Err(Error::Format(_))));
        assert!(matches!(
            EmbeddingTable::load(&dir.path().join("missing"), 50),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn averages() {
        let t = table();
        assert_eq!(embed_text(&["a"], &t), vec![1.0, 0.0]);
        assert_eq!(embed_text(&["a", "b"], &t), vec![0.5, 0.5]);
        assert_eq!(embed_text::<&str>(&[], &t), vec![0.0, 0.0]);
    }

    #[test]
    fn oov_policies() {
        let t = table();
        assert_eq!(embed_text(&["a", "zzz"], &t), vec![0.5, 0.0]);
        let t = t.with_oov(OovPolicy::Skip);
        assert_eq!(embed_text(&["a", "zzz"], &t), vec![1.0, 0.0]);
        assert_eq!(embed_text(&["zzz"], &t), vec![0.0, 0.0]);
    }

    #[test]
    fn cosine_cases() {
        assert_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert!(cosine(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn save_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        let t = table();
        t.save(&path).unwrap();
        assert_eq!(EmbeddingTable::load(&path, 2).unwrap(), t);
    }
}
