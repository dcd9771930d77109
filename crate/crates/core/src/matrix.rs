//! Per-paper vectors and the embedding file format.
//!
//! ```text
//! dim=3 method=deepwalk
//! A<TAB>0.1 0.2 0.3
//! B<TAB>0.5 -1 2e-3
//! ```
//!
//! Sparse files add `format=sparse` to the header and store rows as
//! `<id><TAB><index>:<value> ...`. Values are written in Rust's shortest
//! round-trip float notation, so write → read → write is byte-identical.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::corpus::Corpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Rows {
    /// Row-major, `ids.len() * dim` values.
    Dense(Vec<f64>),
    /// Entries sorted by index.
    Sparse(Vec<Vec<(u32, f64)>>),
}

#[derive(Debug, Clone, Copy)]
pub enum Row<'a> {
    Dense(&'a [f64]),
    Sparse(&'a [(u32, f64)]),
}

impl Row<'_> {
    pub fn norm(&self) -> f64 {
        match self {
            Row::Dense(v) => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Row::Sparse(v) => v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt(),
        }
    }

    pub fn dot(&self, other: &Row<'_>) -> f64 {
        match (self, other) {
            (Row::Dense(a), Row::Dense(b)) => a.iter().zip(*b).map(|(x, y)| x * y).sum(),
            (Row::Dense(d), Row::Sparse(s)) | (Row::Sparse(s), Row::Dense(d)) => {
                s.iter().map(|&(i, x)| x * d[i as usize]).sum()
            }
            (Row::Sparse(a), Row::Sparse(b)) => {
                let (mut i, mut j, mut acc) = (0, 0, 0.0);
                while i < a.len() && j < b.len() {
                    match a[i].0.cmp(&b[j].0) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            acc += a[i].1 * b[j].1;
                            i += 1;
                            j += 1;
                        }
                    }
                }
                acc
            }
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        match self {
            Row::Dense(v) => v.to_vec(),
            Row::Sparse(s) => {
                let mut out = vec![0.0; dim];
                for &(i, x) in *s {
                    out[i as usize] = x;
                }
                out
            }
        }
    }
}

/// Cosine similarity of two rows. Callers guarantee nonzero rows.
pub fn cosine(a: &Row<'_>, b: &Row<'_>) -> f64 {
    a.dot(b) / (a.norm() * b.norm())
}

/// A named method's vector per paper.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    method: String,
    dim: usize,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    rows: Rows,
}

fn index_ids(ids: &[String]) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if index.insert(id.clone(), i).is_some() {
            return Err(Error::Invalid(format!("duplicate embedding row {id:?}")));
        }
    }
    Ok(index)
}

impl EmbeddingMatrix {
    pub fn dense(
        method: impl Into<String>,
        dim: usize,
        ids: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != ids.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: ids.len() * dim,
                found: values.len(),
                context: "dense matrix storage".into(),
            });
        }
        for (i, id) in ids.iter().enumerate() {
            let row = &values[i * dim..(i + 1) * dim];
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("embedding row {id:?}")));
            }
            if row.iter().all(|&x| x == 0.0) {
                return Err(Error::ZeroRow(id.clone()));
            }
        }
        Ok(Self {
            method: method.into(),
            dim,
            index: index_ids(&ids)?,
            ids,
            rows: Rows::Dense(values),
        })
    }

    pub fn sparse(
        method: impl Into<String>,
        dim: usize,
        ids: Vec<String>,
        mut rows: Vec<Vec<(u32, f64)>>,
    ) -> Result<Self> {
        if rows.len() != ids.len() {
            return Err(Error::DimensionMismatch {
                expected: ids.len(),
                found: rows.len(),
                context: "sparse row count".into(),
            });
        }
        for (id, row) in ids.iter().zip(rows.iter_mut()) {
            row.retain(|&(_, x)| x != 0.0);
            row.sort_unstable_by_key(|&(i, _)| i);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Invalid(format!("row {id:?} repeats an index")));
            }
            if let Some(&(i, _)) = row.iter().find(|&&(i, _)| i as usize >= dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: i as usize + 1,
                    context: format!("sparse index in row {id:?}"),
                });
            }
            if row.iter().any(|(_, x)| !x.is_finite()) {
                return Err(Error::NonFinite(format!("embedding row {id:?}")));
            }
            if row.is_empty() {
                return Err(Error::ZeroRow(id.clone()));
            }
        }
        Ok(Self {
            method: method.into(),
            dim,
            index: index_ids(&ids)?,
            ids,
            rows: Rows::Sparse(rows),
        })
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn with_method(mut self, method: impl Into<String>) -> Self {
        self.method = method.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.rows, Rows::Sparse(_))
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn row(&self, i: usize) -> Row<'_> {
        match &self.rows {
            Rows::Dense(v) => Row::Dense(&v[i * self.dim..(i + 1) * self.dim]),
            Rows::Sparse(v) => Row::Sparse(&v[i]),
        }
    }

    pub fn row_by_id(&self, id: &str) -> Option<Row<'_>> {
        self.index_of(id).map(|i| self.row(i))
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        self.row(i).to_dense(self.dim)
    }

    /// Ids that appear in `wanted` but have no row.
    pub fn missing<'a>(&self, wanted: impl IntoIterator<Item = &'a str>) -> Vec<String> {
        wanted
            .into_iter()
            .filter(|id| !self.contains(id))
            .map(str::to_string)
            .collect()
    }

    /// Rows for `ids`, in that order.
    pub fn select(&self, ids: &[String]) -> Result<Self> {
        let missing = self.missing(ids.iter().map(String::as_str));
        if let Some(id) = missing.first() {
            return Err(Error::UnknownId(id.clone()));
        }
        match &self.rows {
            Rows::Dense(_) => {
                let mut values = Vec::with_capacity(ids.len() * self.dim);
                for id in ids {
                    if let Row::Dense(r) = self.row(self.index[id]) {
                        values.extend_from_slice(r);
                    }
                }
                Self::dense(self.method.clone(), self.dim, ids.to_vec(), values)
            }
            Rows::Sparse(rows) => Self::sparse(
                self.method.clone(),
                self.dim,
                ids.to_vec(),
                ids.iter().map(|id| rows[self.index[id]].clone()).collect(),
            ),
        }
    }

    /// Concatenates two matrices with disjoint ids.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim || self.is_sparse() != other.is_sparse() {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
                context: "merging embedding matrices".into(),
            });
        }
        let mut ids = self.ids.clone();
        ids.extend(other.ids.iter().cloned());
        match (&self.rows, &other.rows) {
            (Rows::Dense(a), Rows::Dense(b)) => {
                let mut v = a.clone();
                v.extend_from_slice(b);
                Self::dense(self.method.clone(), self.dim, ids, v)
            }
            (Rows::Sparse(a), Rows::Sparse(b)) => {
                let mut v = a.clone();
                v.extend(b.iter().cloned());
                Self::sparse(self.method.clone(), self.dim, ids, v)
            }
            _ => unreachable!("storage kinds checked above"),
        }
    }

    pub fn cosine(&self, a: usize, b: usize) -> f64 {
        cosine(&self.row(a), &self.row(b))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        let mut header = format!("dim={}", self.dim);
        if self.is_sparse() {
            header.push_str(" format=sparse");
        }
        if !self.method.is_empty() {
            write!(header, " method={}", self.method).unwrap();
        }
        writeln!(w, "{header}").map_err(io)?;
        let mut line = String::new();
        for (i, id) in self.ids.iter().enumerate() {
            line.clear();
            line.push_str(id);
            line.push('\t');
            match self.row(i) {
                Row::Dense(r) => {
                    for (j, x) in r.iter().enumerate() {
                        if j > 0 {
                            line.push(' ');
                        }
                        write!(line, "{x}").unwrap();
                    }
                }
                Row::Sparse(r) => {
                    for (j, (k, x)) in r.iter().enumerate() {
                        if j > 0 {
                            line.push(' ');
                        }
                        write!(line, "{k}:{x}").unwrap();
                    }
                }
            }
            writeln!(w, "{line}").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Reads an embedding file. With `corpus` given, every row id must name a
/// corpus paper.
pub fn load_embedding_matrix(
    path: impl AsRef<Path>,
    corpus: Option<&Corpus>,
) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = BufReader::new(file).lines().enumerate();

    let header = match lines.next() {
        Some((_, l)) => l.map_err(|e| Error::io(path, e))?,
        None => return Err(parse_err(1, "empty embedding file".into())),
    };
    let mut dim = None;
    let mut sparse = false;
    let mut method = String::new();
    for tok in header.split_whitespace() {
        match tok.split_once('=') {
            Some(("dim", v)) => {
                dim = Some(
                    v.parse::<usize>()
                        .map_err(|e| parse_err(1, format!("bad dim {v:?}: {e}")))?,
                )
            }
            Some(("format", "sparse")) => sparse = true,
            Some(("format", "dense")) => sparse = false,
            Some(("method", m)) => method = m.to_string(),
            _ => return Err(parse_err(1, format!("unrecognized header token {tok:?}"))),
        }
    }
    let dim = dim.ok_or_else(|| parse_err(1, "header lacks dim=<d>".into()))?;
    if dim == 0 {
        return Err(parse_err(1, "dim must be positive".into()));
    }

    let mut ids = Vec::new();
    let mut dense = Vec::new();
    let mut sparse_rows = Vec::new();
    for (n, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (id, body) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(lineno, "expected <id><TAB><values>".into()))?;
        if let Some(c) = corpus {
            if c.get(id).is_none() {
                return Err(Error::UnknownId(id.to_string()));
            }
        }
        if sparse {
            let mut row = Vec::new();
            for tok in body.split_whitespace() {
                let (i, x) = tok
                    .split_once(':')
                    .ok_or_else(|| parse_err(lineno, format!("bad sparse entry {tok:?}")))?;
                let i: u32 = i
                    .parse()
                    .map_err(|e| parse_err(lineno, format!("bad index {i:?}: {e}")))?;
                let x: f64 = x
                    .parse()
                    .map_err(|e| parse_err(lineno, format!("bad value {x:?}: {e}")))?;
                row.push((i, x));
            }
            sparse_rows.push(row);
        } else {
            let before = dense.len();
            for tok in body.split_whitespace() {
                dense.push(
                    tok.parse::<f64>()
                        .map_err(|e| parse_err(lineno, format!("bad value {tok:?}: {e}")))?,
                );
            }
            let found = dense.len() - before;
            if found != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found,
                    context: format!("{}:{lineno} row {id:?}", path.display()),
                });
            }
        }
        ids.push(id.to_string());
    }
    if sparse {
        EmbeddingMatrix::sparse(method, dim, ids, sparse_rows)
    } else {
        EmbeddingMatrix::dense(method, dim, ids, dense)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_dense() {
        let f = file("dim=3\nA\t1 0 0\nB\t0.5 0.5 -1\n");
        let m = load_embedding_matrix(f.path(), None).unwrap();
        assert_eq!(m.dim(), 3);
        assert_eq!(m.ids(), &["A".to_string(), "B".to_string()]);
        assert!(!m.is_sparse());
    }

    #[test]
    fn zero_row_rejected() {
        let f = file("dim=3\nA\t1 0 0\nB\t0 0 0\n");
        assert!(matches!(
            load_embedding_matrix(f.path(), None),
            Err(Error::ZeroRow(id)) if id == "B"
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let f = file("dim=3\nA\t1 0 0\nB\t1 2 3 4\n");
        assert!(matches!(
            load_embedding_matrix(f.path(), None),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 4,
                ..
            })
        ));
    }

    #[test]
    fn sparse_and_validation() {
        let f = file("dim=5 format=sparse method=tfidf\nA\t0:1 4:0.5\nB\t2:3\n");
        let m = load_embedding_matrix(f.path(), None).unwrap();
        assert!(m.is_sparse());
        assert_eq!(m.method(), "tfidf");
        assert_eq!(m.dense_row(0), vec![1.0, 0.0, 0.0, 0.0, 0.5]);

        let corpus = Corpus::from_papers(vec![crate::corpus::paper("A", 2000, &[])]).unwrap();
        assert!(matches!(
            load_embedding_matrix(f.path(), Some(&corpus)),
            Err(Error::UnknownId(id)) if id == "B"
        ));

        let bad = file("dim=2 format=sparse\nA\t5:1\n");
        assert!(load_embedding_matrix(bad.path(), None).is_err());
    }

    #[test]
    fn write_round_trip_is_byte_identical() {
        let m = EmbeddingMatrix::dense(
            "x",
            2,
            vec!["a".into(), "b".into()],
            vec![0.1, 1.0 / 3.0, -2.5e-9, 7.0],
        )
        .unwrap();
        let f1 = tempfile::NamedTempFile::new().unwrap();
        m.write(f1.path()).unwrap();
        let back = load_embedding_matrix(f1.path(), None).unwrap();
        assert_eq!(back, m);
        let f2 = tempfile::NamedTempFile::new().unwrap();
        back.write(f2.path()).unwrap();
        assert_eq!(
            std::fs::read(f1.path()).unwrap(),
            std::fs::read(f2.path()).unwrap()
        );
    }

    #[test]
    fn mixed_dot_products_agree() {
        let d = [1.0, 2.0, 0.0, -1.0];
        let s = [(0u32, 3.0), (3, 2.0)];
        let s2 = [(1u32, 1.0), (3, 1.0)];
        assert_eq!(Row::Dense(&d).dot(&Row::Sparse(&s)), 1.0);
        assert_eq!(Row::Sparse(&s).dot(&Row::Sparse(&s2)), 2.0);
        assert_eq!(
            Row::Sparse(&s).dot(&Row::Dense(&Row::Sparse(&s2).to_dense(4))),
            2.0
        );
    }
}
