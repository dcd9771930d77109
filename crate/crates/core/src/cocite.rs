//! Co-citation ground truth and per-query relevant sets.

use std::collections::{BTreeSet, HashMap};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Two papers cited together by some third paper.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoCitation {
    pub a: String,
    pub b: String,
    /// Earliest publication year of a paper citing both.
    pub first_year: i32,
}

/// All co-cited pairs of a corpus, keyed by unordered paper-index pairs.
#[derive(Debug, Clone, Default)]
pub struct CoCitations {
    first_year: HashMap<(u32, u32), i32>,
    /// Partner lists per paper index, sorted by partner.
    partners: Vec<Vec<(u32, i32)>>,
}

fn key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl CoCitations {
    pub fn len(&self) -> usize {
        self.first_year.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_year.is_empty()
    }

    /// First co-citation year of two papers, in either order.
    pub fn first_year_by_index(&self, a: usize, b: usize) -> Option<i32> {
        self.first_year.get(&key(a as u32, b as u32)).copied()
    }

    pub fn get(&self, corpus: &Corpus, a: &str, b: &str) -> Option<CoCitation> {
        let ia = corpus.index_of(a)?;
        let ib = corpus.index_of(b)?;
        self.first_year_by_index(ia, ib)
            .map(|first_year| CoCitation {
                a: a.to_string(),
                b: b.to_string(),
                first_year,
            })
    }

    /// Co-citation partners of a paper with their first co-citation years.
    pub fn partners(&self, idx: usize) -> &[(u32, i32)] {
        self.partners.get(idx).map_or(&[], |v| v.as_slice())
    }

    /// Unordered index pairs `(a, b)` with `a < b`, sorted.
    pub fn pairs(&self) -> Vec<((u32, u32), i32)> {
        let mut v: Vec<_> = self.first_year.iter().map(|(&k, &y)| (k, y)).collect();
        v.sort_unstable();
        v
    }

    /// Pairs as id records, ordered by paper index.
    pub fn records(&self, corpus: &Corpus) -> Vec<CoCitation> {
        self.pairs()
            .into_iter()
            .map(|((a, b), first_year)| {
                let (a, b) = (&corpus.paper(a as usize).id, &corpus.paper(b as usize).id);
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                CoCitation {
                    a: a.clone(),
                    b: b.clone(),
                    first_year,
                }
            })
            .collect()
    }
}

/// Every pair of in-corpus papers that share a citing paper, with the
/// earliest citing year.
pub fn extract_cocitations(corpus: &Corpus) -> CoCitations {
    let mut first_year: HashMap<(u32, u32), i32> = HashMap::new();
    for (citing, p) in corpus.papers().iter().enumerate() {
        let refs = corpus.cited_by_index(citing);
        for (i, &a) in refs.iter().enumerate() {
            for &b in &refs[i + 1..] {
                first_year
                    .entry(key(a, b))
                    .and_modify(|y| *y = (*y).min(p.year))
                    .or_insert(p.year);
            }
        }
    }
    let mut partners = vec![Vec::new(); corpus.len()];
    for (&(a, b), &y) in &first_year {
        partners[a as usize].push((b, y));
        partners[b as usize].push((a, y));
    }
    for list in &mut partners {
        list.sort_unstable();
    }
    CoCitations {
        first_year,
        partners,
    }
}

/// Papers co-cited with `q` strictly after `start_year`, excluding papers
/// with a direct citation to or from `q`. Returned as corpus indices.
pub fn relevant_indices(
    corpus: &Corpus,
    cocites: &CoCitations,
    q: usize,
    start_year: i32,
) -> Vec<usize> {
    cocites
        .partners(q)
        .iter()
        .filter(|&&(_, y)| y > start_year)
        .map(|&(p, _)| p as usize)
        .filter(|&p| !corpus.cites(q, p) && !corpus.cites(p, q))
        .collect()
}

pub fn relevant_set(
    corpus: &Corpus,
    cocites: &CoCitations,
    q: &str,
    start_year: i32,
) -> Result<BTreeSet<String>> {
    let qi = corpus
        .index_of(q)
        .ok_or_else(|| Error::UnknownId(q.to_string()))?;
    Ok(relevant_indices(corpus, cocites, qi, start_year)
        .into_iter()
        .map(|p| corpus.paper(p).id.clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::paper;

    fn corpus(papers: Vec<crate::corpus::Paper>) -> Corpus {
        Corpus::from_papers(papers).unwrap()
    }

    #[test]
    fn single_citing_paper() {
        let c = corpus(vec![
            paper("A", 2010, &[]),
            paper("B", 2011, &[]),
            paper("X", 2020, &["A", "B"]),
        ]);
        let cc = extract_cocitations(&c);
        assert_eq!(cc.len(), 1);
        assert_eq!(cc.get(&c, "A", "B").unwrap().first_year, 2020);
        assert_eq!(cc.get(&c, "B", "A").unwrap().first_year, 2020);
    }

    #[test]
    fn earliest_year_wins() {
        let c = corpus(vec![
            paper("A", 2010, &[]),
            paper("B", 2011, &[]),
            paper("X", 2020, &["A", "B"]),
            paper("Y", 2018, &["B", "A"]),
        ]);
        let cc = extract_cocitations(&c);
        assert_eq!(cc.get(&c, "A", "B").unwrap().first_year, 2018);
    }

    #[test]
    fn four_references_six_pairs() {
        let c = corpus(vec![
            paper("A", 2010, &[]),
            paper("B", 2010, &[]),
            paper("C", 2010, &[]),
            paper("D", 2010, &[]),
            paper("X", 2012, &["A", "B", "C", "D", "Z"]),
        ]);
        let cc = extract_cocitations(&c);
        assert_eq!(cc.len(), 6);
        assert!(cc.get(&c, "A", "Z").is_none());
    }

    fn relevance_fixture() -> Corpus {
        corpus(vec![
            paper("q", 2017, &["B"]),
            paper("A", 2014, &[]),
            paper("B", 2014, &[]),
            paper("C", 2014, &[]),
            paper("x1", 2019, &["q", "A"]),
            paper("x2", 2019, &["q", "B"]),
            paper("x3", 2016, &["q", "C"]),
        ])
    }

    #[test]
    fn relevant_set_rules() {
        let c = relevance_fixture();
        let cc = extract_cocitations(&c);
        let r = relevant_set(&c, &cc, "q", 2017).unwrap();
        // A: co-cited 2019; B: excluded by q's citation; C: co-cited too early
        assert_eq!(r.into_iter().collect::<Vec<_>>(), vec!["A".to_string()]);
        assert!(relevant_set(&c, &cc, "nope", 2017).is_err());
    }

    #[test]
    fn exclusion_is_symmetric() {
        let c = corpus(vec![
            paper("q", 2010, &[]),
            paper("P", 2012, &["q"]),
            paper("x", 2019, &["q", "P"]),
        ]);
        let cc = extract_cocitations(&c);
        assert!(relevant_set(&c, &cc, "q", 2017).unwrap().is_empty());
        assert!(relevant_set(&c, &cc, "P", 2017).unwrap().is_empty());
    }

    #[test]
    fn horizon_is_strict() {
        let c = corpus(vec![
            paper("q", 2010, &[]),
            paper("A", 2010, &[]),
            paper("x", 2017, &["q", "A"]),
        ]);
        let cc = extract_cocitations(&c);
        assert!(relevant_set(&c, &cc, "q", 2017).unwrap().is_empty());
        assert_eq!(relevant_set(&c, &cc, "q", 2016).unwrap().len(), 1);
    }
}
