//! Corpus ingestion and temporal snapshots.
//!
//! A corpus file holds one JSON object per line:
//!
//! ```text
//! {"id":"A","title":"...","abstract":"...","year":2015,"references":["B"]}
//! ```
//!
//! References to ids that are not in the file are kept on the [`Paper`] but
//! never become graph edges or co-citation pairs.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphSnapshot;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paper {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    pub year: i32,
    #[serde(default)]
    pub references: Vec<String>,
}

impl Paper {
    /// Title and abstract joined by a space.
    pub fn text(&self) -> String {
        if self.abstract_text.is_empty() {
            self.title.clone()
        } else {
            format!("{} {}", self.title, self.abstract_text)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub min_year: i32,
    pub max_year: i32,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            min_year: 1850,
            max_year: 2100,
        }
    }
}

/// Counts reported by `ingest-check`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub papers: usize,
    pub edges: usize,
    pub dangling_references: usize,
    pub year_anomalies: usize,
    pub self_citations: usize,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    papers: Vec<Paper>,
    index: HashMap<String, usize>,
    /// Resolved outgoing references per paper, sorted by paper index.
    cites: Vec<Vec<u32>>,
    stats: CorpusStats,
}

impl Corpus {
    /// Builds a corpus from in-memory records. Self-citations and repeated
    /// references are dropped; positions in duplicate-id errors are 1-based
    /// record numbers.
    pub fn from_papers(papers: Vec<Paper>) -> Result<Self> {
        Self::build(papers, None, &LoadOptions::default())
    }

    fn build(
        mut papers: Vec<Paper>,
        lines: Option<(&Path, &[usize])>,
        opts: &LoadOptions,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(papers.len());
        let mut stats = CorpusStats::default();
        let line_of = |i: usize| lines.map_or(i + 1, |(_, l)| l[i]);
        let path_buf = || lines.map_or_else(PathBuf::new, |(p, _)| p.to_path_buf());

        for (i, p) in papers.iter_mut().enumerate() {
            if p.id.is_empty() {
                return Err(Error::Parse {
                    path: path_buf(),
                    line: line_of(i),
                    msg: "empty paper id".into(),
                });
            }
            if p.year < opts.min_year || p.year > opts.max_year {
                return Err(Error::Parse {
                    path: path_buf(),
                    line: line_of(i),
                    msg: format!(
                        "year {} outside [{}, {}]",
                        p.year, opts.min_year, opts.max_year
                    ),
                });
            }
            if let Some(&first) = index.get(&p.id) {
                return Err(Error::DuplicateId {
                    path: path_buf(),
                    line: line_of(i),
                    first: line_of(first),
                    id: p.id.clone(),
                });
            }
            index.insert(p.id.clone(), i);

            let before = p.references.len();
            p.references.retain(|r| r != &p.id);
            stats.self_citations += before - p.references.len();
            let mut seen = std::collections::HashSet::new();
            p.references.retain(|r| seen.insert(r.clone()));
        }

        let mut cites = vec![Vec::new(); papers.len()];
        for (i, p) in papers.iter().enumerate() {
            for r in &p.references {
                match index.get(r) {
                    Some(&j) => {
                        cites[i].push(j as u32);
                        if papers[j].year > p.year {
                            stats.year_anomalies += 1;
                        }
                    }
                    None => stats.dangling_references += 1,
                }
            }
            cites[i].sort_unstable();
            stats.edges += cites[i].len();
        }
        stats.papers = papers.len();
        if stats.dangling_references > 0 {
            warn!(
                "{} references point outside the corpus and were dropped from the graph",
                stats.dangling_references
            );
        }
        if stats.year_anomalies > 0 {
            warn!(
                "{} citation edges point forward in time",
                stats.year_anomalies
            );
        }

        Ok(Self {
            papers,
            index,
            cites,
            stats,
        })
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn papers(&self) -> &[Paper] {
        &self.papers
    }

    pub fn paper(&self, idx: usize) -> &Paper {
        &self.papers[idx]
    }

    pub fn get(&self, id: &str) -> Option<&Paper> {
        self.index.get(id).map(|&i| &self.papers[i])
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn stats(&self) -> CorpusStats {
        self.stats
    }

    /// Resolved references of a paper, as sorted paper indices.
    pub fn cited_by_index(&self, idx: usize) -> &[u32] {
        &self.cites[idx]
    }

    /// Whether paper `a` cites paper `b` (both resolved indices).
    pub fn cites(&self, a: usize, b: usize) -> bool {
        self.cites[a].binary_search(&(b as u32)).is_ok()
    }

    /// All resolvable (citing, cited) edges, by paper index.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cites
            .iter()
            .enumerate()
            .flat_map(|(i, cs)| cs.iter().map(move |&j| (i, j as usize)))
    }

    /// Earliest and latest publication year.
    pub fn year_range(&self) -> Option<(i32, i32)> {
        let min = self.papers.iter().map(|p| p.year).min()?;
        let max = self.papers.iter().map(|p| p.year).max()?;
        Some((min, max))
    }

    /// Citation graph restricted to papers published in or before `year`.
    pub fn snapshot(&self, year: i32) -> GraphSnapshot {
        let keep: Vec<usize> = (0..self.papers.len())
            .filter(|&i| self.papers[i].year <= year)
            .collect();
        let ids = keep.iter().map(|&i| self.papers[i].id.clone());
        let edges = keep.iter().flat_map(|&i| {
            self.cites[i]
                .iter()
                .filter(|&&j| self.papers[j as usize].year <= year)
                .map(move |&j| (i, j as usize))
        });
        GraphSnapshot::from_index_edges(
            Some(year),
            ids,
            edges.map(|(a, b)| (self.papers[a].id.as_str(), self.papers[b].id.as_str())),
        )
    }

    /// Graph over every paper in the corpus.
    pub fn full_graph(&self) -> GraphSnapshot {
        let year = self.year_range().map_or(i32::MIN, |(_, max)| max);
        self.snapshot(year)
    }
}

/// Reads a line-delimited corpus file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    load_corpus_with(path, &LoadOptions::default())
}

pub fn load_corpus_with(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut papers = Vec::new();
    let mut lines = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let paper: Paper = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            msg: e.to_string(),
        })?;
        papers.push(paper);
        lines.push(n + 1);
    }
    Corpus::build(papers, Some((path, &lines)), opts)
}

pub fn write_corpus(path: impl AsRef<Path>, papers: &[Paper]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for p in papers {
        let line = serde_json::to_string(p).expect("paper serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
pub(crate) fn paper(id: &str, year: i32, refs: &[&str]) -> Paper {
    Paper {
        id: id.into(),
        title: format!("title {id}"),
        abstract_text: String::new(),
        year,
        references: refs.iter().map(|r| r.to_string()).collect(),
    }
}
