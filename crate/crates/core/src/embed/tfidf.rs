//! Sparse TF-IDF document vectors over title + abstract.
//!
//! Terms are lowercase alphanumeric runs of length ≥ 2 that are not
//! stopwords. Weights are raw counts times `ln((1 + N) / (1 + df)) + 1`,
//! fitted on the papers of one snapshot, then L2-normalized. A document with
//! no vocabulary terms gets a single "empty document" feature, stored in the
//! last column, so no row is ever zero.

use std::collections::{BTreeMap, HashMap};

use crate::corpus::{Corpus, Paper};
use crate::error::{Error, Result};
use crate::graph::GraphSnapshot;
use crate::matrix::EmbeddingMatrix;

pub const STOPWORDS: &[&str] = &[
    "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "him", "his",
    "how", "if", "in", "into", "is", "it", "its", "itself", "just", "may", "me", "more", "most",
    "my", "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "our",
    "ours", "out", "over", "own", "same", "she", "should", "so", "some", "such", "than", "that",
    "the", "their", "theirs", "them", "then", "there", "these", "they", "this", "those", "through",
    "to", "too", "under", "until", "up", "us", "very", "via", "was", "we", "were", "what", "when",
    "where", "which", "while", "who", "whom", "why", "will", "with", "would", "you", "your",
    "yours",
];

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
        .filter(|t| STOPWORDS.binary_search(&t.as_str()).is_err())
        .collect()
}

/// Vocabulary and idf weights fitted on one set of documents.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfModel {
    terms: Vec<String>,
    index: HashMap<String, u32>,
    idf: Vec<f64>,
}

impl TfIdfModel {
    /// Fits on the papers of `g`; keeps the `vocab_cap` terms with the highest
    /// document frequency (ties by term).
    pub fn fit(corpus: &Corpus, g: &GraphSnapshot, vocab_cap: usize) -> Result<Self> {
        let mut docs = Vec::with_capacity(g.node_count());
        for id in g.ids() {
            docs.push(corpus.get(id).ok_or_else(|| Error::UnknownId(id.clone()))?);
        }
        Ok(Self::fit_papers(&docs, vocab_cap))
    }

    pub fn fit_papers(docs: &[&Paper], vocab_cap: usize) -> Self {
        let n = docs.len() as f64;
        let mut df: HashMap<String, usize> = HashMap::new();
        for p in docs {
            let mut terms = tokenize(&p.text());
            terms.sort_unstable();
            terms.dedup();
            for t in terms {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> = df.into_iter().collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(vocab_cap);
        ranked.sort_unstable_by(|a, b| a.0.cmp(&b.0));

        let idf = ranked
            .iter()
            .map(|(_, d)| ((1.0 + n) / (1.0 + *d as f64)).ln() + 1.0)
            .collect();
        let terms: Vec<String> = ranked.into_iter().map(|(t, _)| t).collect();
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self { terms, index, idf }
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.terms
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.index.get(term).map(|&i| self.idf[i as usize])
    }

    /// Vocabulary size plus the empty-document column.
    pub fn dim(&self) -> usize {
        self.terms.len() + 1
    }

    /// Unit-norm sparse row for one document.
    pub fn transform(&self, paper: &Paper) -> Vec<(u32, f64)> {
        let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
        for t in tokenize(&paper.text()) {
            if let Some(&i) = self.index.get(&t) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        if counts.is_empty() {
            return vec![(self.terms.len() as u32, 1.0)];
        }
        let mut row: Vec<(u32, f64)> = counts
            .into_iter()
            .map(|(i, tf)| (i, tf * self.idf[i as usize]))
            .collect();
        let norm = row.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        for (_, x) in &mut row {
            *x /= norm;
        }
        row
    }

    pub fn embed(&self, corpus: &Corpus, ids: &[String]) -> Result<EmbeddingMatrix> {
        let mut rows = Vec::with_capacity(ids.len());
        for id in ids {
            let p = corpus.get(id).ok_or_else(|| Error::UnknownId(id.clone()))?;
            rows.push(self.transform(p));
        }
        EmbeddingMatrix::sparse("tfidf", self.dim(), ids.to_vec(), rows)
    }
}

/// Fits on the snapshot's papers and embeds each of them.
pub fn tfidf_embed(
    corpus: &Corpus,
    g: &GraphSnapshot,
    vocab_cap: usize,
) -> Result<EmbeddingMatrix> {
    TfIdfModel::fit(corpus, g, vocab_cap)?.embed(corpus, g.ids())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Paper;

    fn doc(id: &str, text: &str) -> Paper {
        Paper {
            id: id.into(),
            title: text.into(),
            abstract_text: String::new(),
            year: 2000,
            references: vec![],
        }
    }

    fn setup(docs: Vec<Paper>) -> (Corpus, GraphSnapshot) {
        let ids: Vec<String> = docs.iter().map(|p| p.id.clone()).collect();
        let c = Corpus::from_papers(docs).unwrap();
        let g = GraphSnapshot::from_edges(None, ids, std::iter::empty()).unwrap();
        (c, g)
    }

    #[test]
    fn stopwords_are_sorted() {
        assert!(STOPWORDS.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn tokenizer_rules() {
        assert_eq!(
            tokenize("The GNN-based model, a x2 of Graphs!"),
            vec!["gnn", "based", "model", "x2", "graphs"]
        );
    }

    #[test]
    fn ubiquitous_term_has_unit_idf() {
        let (c, g) = setup(vec![
            doc("a", "graph alpha"),
            doc("b", "graph beta"),
            doc("c", "graph"),
        ]);
        let m = TfIdfModel::fit(&c, &g, 100).unwrap();
        assert_eq!(m.idf("graph"), Some(1.0));
    }

    #[test]
    fn identical_documents_identical_rows() {
        let (c, g) = setup(vec![
            doc("a", "neural graph graph"),
            doc("b", "graph neural graph"),
            doc("c", "other words"),
        ]);
        let e = tfidf_embed(&c, &g, 100).unwrap();
        assert_eq!(e.row(0).to_dense(e.dim()), e.row(1).to_dense(e.dim()));
        assert!((1.0 - e.cosine(0, 1)).abs() < 1e-15);
    }

    #[test]
    fn hand_computed_weight() {
        // docs: "alpha alpha beta", "beta gamma", "gamma delta"
        let (c, g) = setup(vec![
            doc("d1", "alpha alpha beta"),
            doc("d2", "beta gamma"),
            doc("d3", "gamma delta"),
        ]);
        let e = tfidf_embed(&c, &g, 100).unwrap();
        let model = TfIdfModel::fit(&c, &g, 100).unwrap();
        assert_eq!(model.vocabulary(), &["alpha", "beta", "delta", "gamma"]);
        // idf(alpha) = ln(4/2) + 1, idf(beta) = ln(4/3) + 1
        let w_alpha = 2.0 * (2f64.ln() + 1.0);
        let w_beta = (4f64 / 3.0).ln() + 1.0;
        let norm = (w_alpha * w_alpha + w_beta * w_beta).sqrt();
        let row = e.dense_row(0);
        assert!((row[0] - w_alpha / norm).abs() < 1e-12);
        assert!((row[1] - w_beta / norm).abs() < 1e-12);
        assert_eq!(row[2], 0.0);
    }

    #[test]
    fn vocabulary_cap_and_empty_docs() {
        let (c, g) = setup(vec![
            doc("a", "common rare"),
            doc("b", "common"),
            doc("c", "the of"),
        ]);
        let m = TfIdfModel::fit(&c, &g, 1).unwrap();
        assert_eq!(m.vocabulary(), &["common"]);
        let e = m.embed(&c, g.ids()).unwrap();
        assert_eq!(e.dim(), 2);
        assert_eq!(e.dense_row(2), vec![0.0, 1.0]);
        for i in 0..3 {
            assert!((e.row(i).norm() - 1.0).abs() < 1e-15);
        }
    }
}
