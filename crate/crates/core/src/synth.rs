//! Block-structured, time-stamped synthetic citation corpora.
//!
//! Papers are created year by year. Each one belongs to a block (a
//! discipline) and cites every strictly earlier paper independently, with
//! probability `p_intra` inside its block and `p_inter` outside. Bridge
//! papers pick one secondary block that they cite at `p_intra` as well, and
//! draw their words from both blocks' vocabularies.
//!
//! Block labels go to a `.truth` sidecar only; ids and text carry no label.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{write_corpus, Paper};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub blocks: usize,
    pub papers_per_block_per_year: usize,
    pub first_year: i32,
    pub years: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    pub bridge_fraction: f64,
    /// Expected reference count; rescales both probabilities per paper.
    pub references_per_paper: Option<f64>,
    /// Distinct words per block.
    pub vocab_per_block: usize,
    /// Fraction of each block's words taken from a pool shared by all blocks.
    pub vocab_overlap: f64,
    pub title_words: usize,
    pub abstract_words: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            blocks: 4,
            papers_per_block_per_year: 50,
            first_year: 2008,
            years: 10,
            p_intra: 0.05,
            p_inter: 0.002,
            bridge_fraction: 0.1,
            references_per_paper: Some(20.0),
            vocab_per_block: 300,
            vocab_overlap: 0.2,
            title_words: 8,
            abstract_words: 60,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn last_year(&self) -> i32 {
        self.first_year + self.years as i32 - 1
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {p} is not a probability")))
            }
        };
        prob("p_intra", self.p_intra)?;
        prob("p_inter", self.p_inter)?;
        prob("bridge_fraction", self.bridge_fraction)?;
        prob("vocab_overlap", self.vocab_overlap)?;
        if self.blocks == 0 || self.years == 0 || self.papers_per_block_per_year == 0 {
            return Err(Error::Config("configuration yields zero papers".into()));
        }
        if self.vocab_per_block == 0 {
            return Err(Error::Config("vocab_per_block must be positive".into()));
        }
        if let Some(r) = self.references_per_paper {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::Config(format!(
                    "references_per_paper = {r} must be non-negative"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truth {
    pub id: String,
    pub block: usize,
    pub is_bridge: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub papers: Vec<Paper>,
    pub truth: Vec<Truth>,
}

const SYLLABLES: &[&str] = &[
    "ba", "ce", "di", "fo", "gu", "ha", "je", "ki", "lo", "mu", "na", "pe", "qui", "ro", "su",
    "ta", "ve", "wi", "xo", "yu", "za", "bre", "cla", "dro", "fli", "gra", "pho", "sti", "tru",
    "vex",
];

/// Distinct pseudo-word for each index.
fn word(mut i: usize) -> String {
    let n = SYLLABLES.len();
    let mut w = String::new();
    for _ in 0..3 {
        w.push_str(SYLLABLES[i % n]);
        i /= n;
    }
    while i > 0 {
        w.push_str(SYLLABLES[i % n]);
        i /= n;
    }
    w
}

fn vocabularies(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<String>> {
    let shared_n = (cfg.vocab_per_block as f64 * cfg.vocab_overlap).round() as usize;
    let own_n = cfg.vocab_per_block - shared_n;
    // the shared pool is twice the per-block share, so blocks overlap partially
    let shared: Vec<usize> = (0..2 * shared_n).collect();
    let mut next = shared.len();
    (0..cfg.blocks)
        .map(|_| {
            let mut v: Vec<String> = shared
                .choose_multiple(rng, shared_n)
                .map(|&i| word(i))
                .collect();
            v.extend((next..next + own_n).map(word));
            next += own_n;
            v
        })
        .collect()
}

struct Draft {
    year: i32,
    block: usize,
    secondary: Option<usize>,
}

pub fn generate_corpus(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let mut rng = seed::rng(seed::derive(cfg.seed, "synth"));
    let vocab = vocabularies(cfg, &mut rng);

    let mut drafts: Vec<Draft> = Vec::new();
    for y in 0..cfg.years {
        let year = cfg.first_year + y as i32;
        let mut this_year: Vec<Draft> = (0..cfg.blocks)
            .flat_map(|b| (0..cfg.papers_per_block_per_year).map(move |_| b))
            .map(|block| {
                let secondary = (cfg.blocks > 1 && rng.gen_bool(cfg.bridge_fraction)).then(|| {
                    let s = rng.gen_range(0..cfg.blocks - 1);
                    if s >= block {
                        s + 1
                    } else {
                        s
                    }
                });
                Draft {
                    year,
                    block,
                    secondary,
                }
            })
            .collect();
        this_year.shuffle(&mut rng);
        drafts.extend(this_year);
    }

    let ids: Vec<String> = (0..drafts.len()).map(|i| format!("S{i:06}")).collect();
    let mut papers = Vec::with_capacity(drafts.len());
    let mut earlier_end = 0;
    for (i, d) in drafts.iter().enumerate() {
        while drafts[earlier_end].year < d.year {
            earlier_end += 1;
        }
        let prob = |c: &Draft| {
            if c.block == d.block || Some(c.block) == d.secondary {
                cfg.p_intra
            } else {
                cfg.p_inter
            }
        };
        let earlier = &drafts[..earlier_end];
        let scale = match cfg.references_per_paper {
            Some(target) => {
                let expected: f64 = earlier.iter().map(prob).sum();
                if expected > 0.0 {
                    target / expected
                } else {
                    0.0
                }
            }
            None => 1.0,
        };
        let mut references = Vec::new();
        for (j, c) in earlier.iter().enumerate() {
            if rng.gen_bool((prob(c) * scale).min(1.0)) {
                references.push(ids[j].clone());
            }
        }

        let pick = |rng: &mut ChaCha8Rng| -> &str {
            let b = match d.secondary {
                Some(s) if rng.gen_bool(0.5) => s,
                _ => d.block,
            };
            vocab[b].choose(rng).unwrap()
        };
        let title: Vec<&str> = (0..cfg.title_words).map(|_| pick(&mut rng)).collect();
        let abstract_text: Vec<&str> = (0..cfg.abstract_words).map(|_| pick(&mut rng)).collect();
        papers.push(Paper {
            id: ids[i].clone(),
            title: title.join(" "),
            abstract_text: abstract_text.join(" "),
            year: d.year,
            references,
        });
    }
    let truth = drafts
        .iter()
        .zip(&ids)
        .map(|(d, id)| Truth {
            id: id.clone(),
            block: d.block,
            is_bridge: d.secondary.is_some(),
        })
        .collect();
    Ok(SynthCorpus { papers, truth })
}

/// Sidecar path for a corpus file: same stem, `.truth` extension.
pub fn truth_path(corpus_path: &Path) -> PathBuf {
    corpus_path.with_extension("truth")
}

pub fn format_truth(truth: &[Truth]) -> String {
    let mut out = String::new();
    for t in truth {
        writeln!(out, "{}\t{}\t{}", t.id, t.block, t.is_bridge).unwrap();
    }
    out
}

pub fn read_truth(path: &Path) -> Result<Vec<Truth>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(n, line)| {
            let bad = |msg: &str| Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                msg: msg.to_string(),
            };
            let mut f = line.split('\t');
            let id = f.next().ok_or_else(|| bad("missing id"))?.to_string();
            let block = f
                .next()
                .and_then(|b| b.parse().ok())
                .ok_or_else(|| bad("bad block"))?;
            let is_bridge = f
                .next()
                .and_then(|b| b.parse().ok())
                .ok_or_else(|| bad("bad is_bridge"))?;
            Ok(Truth {
                id,
                block,
                is_bridge,
            })
        })
        .collect()
}

/// Writes the corpus file and its `.truth` sidecar.
pub fn write_synth(corpus_path: &Path, synth: &SynthCorpus) -> Result<()> {
    write_corpus(corpus_path, &synth.papers)?;
    let t = truth_path(corpus_path);
    std::fs::write(&t, format_truth(&synth.truth)).map_err(|e| Error::io(&t, e))
}
