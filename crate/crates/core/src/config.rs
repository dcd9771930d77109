//! Experiment configuration: a flat `key = value` file.
//!
//! ```text
//! # comments run to the end of the line
//! corpus.path = data/corpus.jsonl
//! split.embed_cutoff = 2016
//! methods = tfidf, deepwalk, sage-mean, combsage
//! embed.method.combsage.dim = 128
//! ```
//!
//! Unknown keys and repeated keys are errors. Relative paths are resolved
//! against the directory of the configuration file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::embed::gnn::{Architecture, GnnSpec, GnnTrainConfig};
use crate::embed::DeepWalkConfig;
use crate::error::{Error, Result};
use crate::recommend::ScorerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    TfIdf,
    DeepWalk,
    Gnn(Architecture),
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::TfIdf,
        Method::DeepWalk,
        Method::Gnn(Architecture::SageMean),
        Method::Gnn(Architecture::CombSage),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::TfIdf => "tfidf",
            Method::DeepWalk => "deepwalk",
            Method::Gnn(a) => a.name(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method {s:?} (expected tfidf, deepwalk, sage-mean or combsage)"
                ))
            })
    }
}

/// Where a dense content matrix comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContentSource {
    /// Random projection of term counts, see [`crate::embed::content`].
    Synthetic,
    /// A matrix named under `content.<name>.path`.
    External(String),
}

impl ContentSource {
    fn parse(s: &str) -> Self {
        match s {
            "synthetic" => ContentSource::Synthetic,
            name => ContentSource::External(name.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnSettings {
    pub spec: GnnSpec,
    pub train: GnnTrainConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub corpus_path: PathBuf,
    pub content_paths: BTreeMap<String, PathBuf>,
    pub embed_cutoff: i32,
    pub scorer_cutoff: i32,
    pub query_year: i32,
    pub relevance_start: i32,
    pub ks: Vec<usize>,
    pub methods: Vec<Method>,
    pub tfidf_vocab_cap: usize,
    pub deepwalk: DeepWalkConfig,
    pub gnn: BTreeMap<Architecture, GnnSettings>,
    /// GNN input features.
    pub features: ContentSource,
    /// Width of synthetic content vectors.
    pub features_dim: usize,
    pub scorer: ScorerConfig,
    /// Snapshot year of the graph reference space; `None` = whole corpus.
    pub reference_graph_year: Option<i32>,
    pub reference_content: Option<ContentSource>,
    pub bootstrap: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let gnn = [Architecture::SageMean, Architecture::CombSage]
            .into_iter()
            .map(|a| {
                (
                    a,
                    GnnSettings {
                        spec: GnnSpec::new(a),
                        train: GnnTrainConfig::default(),
                    },
                )
            })
            .collect();
        Self {
            corpus_path: PathBuf::new(),
            content_paths: BTreeMap::new(),
            embed_cutoff: 2016,
            scorer_cutoff: 2017,
            query_year: 2017,
            relevance_start: 2017,
            ks: vec![10, 20, 30],
            methods: Method::ALL.to_vec(),
            tfidf_vocab_cap: 20_000,
            deepwalk: DeepWalkConfig::default(),
            gnn,
            features: ContentSource::Synthetic,
            features_dim: 128,
            scorer: ScorerConfig {
                max_positives: Some(200_000),
                ..ScorerConfig::default()
            },
            reference_graph_year: None,
            reference_content: None,
            bootstrap: 1000,
            seed: 0,
            out: PathBuf::from("out"),
            workers: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(|t| parse(key, t.trim())).collect()
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected true or false, got {v:?}"
        ))),
    }
}

/// `key = value` pairs in file order; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", n + 1)));
        }
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(Error::Config(format!("line {}: {k} given twice", n + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::default();
        for (k, v) in parse_pairs(&text)? {
            cfg.set(&k, &v)?;
        }
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in parse_pairs(text)? {
            cfg.set(&k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus_path);
        fix(&mut self.out);
        self.content_paths.values_mut().for_each(fix);
    }

    /// Applies one setting.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let parts: Vec<&str> = key.split('.').collect();
        match parts.as_slice() {
            ["corpus", "path"] => self.corpus_path = PathBuf::from(v),
            ["content", name, "path"] => {
                self.content_paths
                    .insert(name.to_string(), PathBuf::from(v));
            }
            ["split", "embed_cutoff"] => self.embed_cutoff = parse(key, v)?,
            ["split", "scorer_cutoff"] => self.scorer_cutoff = parse(key, v)?,
            ["split", "query_year"] => self.query_year = parse(key, v)?,
            ["split", "relevance_start"] => self.relevance_start = parse(key, v)?,
            ["eval", "k"] => self.ks = list(key, v)?,
            ["eval", "bootstrap"] => self.bootstrap = parse(key, v)?,
            ["methods"] => self.methods = list(key, v)?,
            ["seed"] => self.seed = parse(key, v)?,
            ["out"] => self.out = PathBuf::from(v),
            ["workers"] => self.workers = Some(parse(key, v)?),
            ["features", "source"] => self.features = ContentSource::parse(v),
            ["features", "dim"] => self.features_dim = parse(key, v)?,
            ["reference", "graph_year"] => {
                self.reference_graph_year = if v == "full" {
                    None
                } else {
                    Some(parse(key, v)?)
                }
            }
            ["reference", "content"] => {
                self.reference_content = if v == "none" {
                    None
                } else {
                    Some(ContentSource::parse(v))
                }
            }
            ["embed", "method", "tfidf", "vocab_cap"] => self.tfidf_vocab_cap = parse(key, v)?,
            ["embed", "method", "deepwalk", p] => self.set_deepwalk(key, p, v)?,
            ["embed", "method", m, p] => {
                let arch = match *m {
                    "sage-mean" => Architecture::SageMean,
                    "combsage" => Architecture::CombSage,
                    _ => return Err(Error::Config(format!("unknown key {key}"))),
                };
                self.set_gnn(key, arch, p, v)?;
            }
            ["scorer", p] => self.set_scorer(key, p, v)?,
            _ => return Err(Error::Config(format!("unknown key {key}"))),
        }
        Ok(())
    }

    fn set_deepwalk(&mut self, key: &str, p: &str, v: &str) -> Result<()> {
        let d = &mut self.deepwalk;
        match p {
            "dim" => d.dim = parse(key, v)?,
            "walks_per_node" => d.walks_per_node = parse(key, v)?,
            "walk_length" => d.walk_length = parse(key, v)?,
            "window" => d.window = parse(key, v)?,
            "negatives" => d.negative_samples = parse(key, v)?,
            "epochs" => d.epochs = parse(key, v)?,
            "learning_rate" => d.learning_rate = parse(key, v)?,
            "fold_in_epochs" => d.fold_in_epochs = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown key {key}"))),
        }
        Ok(())
    }

    fn set_gnn(&mut self, key: &str, arch: Architecture, p: &str, v: &str) -> Result<()> {
        let g = self
            .gnn
            .get_mut(&arch)
            .expect("both architectures configured");
        match p {
            "dim" => {
                let d: usize = parse(key, v)?;
                g.spec.dims.iter_mut().for_each(|x| *x = d);
            }
            "depth" => {
                let depth: usize = parse(key, v)?;
                let d = g.spec.dims[0];
                g.spec.dims = vec![d; depth];
            }
            "samples" => g.spec.samples = list(key, v)?,
            "activation" => g.spec.activation = parse_with(key, v)?,
            "combine" => g.spec.combine = parse_with(key, v)?,
            "normalize" => g.spec.normalize = boolean(key, v)?,
            "epochs" => g.train.epochs = parse(key, v)?,
            "batch_size" => g.train.batch_size = parse(key, v)?,
            "negatives" => g.train.negatives = parse(key, v)?,
            "learning_rate" => g.train.learning_rate = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown key {key}"))),
        }
        Ok(())
    }

    fn set_scorer(&mut self, key: &str, p: &str, v: &str) -> Result<()> {
        let s = &mut self.scorer;
        match p {
            "hidden" => s.hidden = parse(key, v)?,
            "hidden_activation" => s.hidden_activation = parse_with(key, v)?,
            "epochs" => s.epochs = parse(key, v)?,
            "batch_size" => s.batch_size = parse(key, v)?,
            "learning_rate" => s.learning_rate = parse(key, v)?,
            "negatives" => s.negatives = parse(key, v)?,
            "max_positives" => {
                s.max_positives = if v == "none" {
                    None
                } else {
                    Some(parse(key, v)?)
                }
            }
            _ => return Err(Error::Config(format!("unknown key {key}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.corpus_path.as_os_str().is_empty() {
            return bad("corpus.path is required".into());
        }
        if self.embed_cutoff > self.scorer_cutoff {
            return bad("split.embed_cutoff must not exceed split.scorer_cutoff".into());
        }
        if self.query_year <= self.embed_cutoff {
            return bad("split.query_year must be after split.embed_cutoff".into());
        }
        if self.ks.is_empty() || self.ks[0] == 0 || self.ks.windows(2).any(|w| w[0] >= w[1]) {
            return bad("eval.k must be positive and strictly ascending".into());
        }
        if self.methods.is_empty() {
            return bad("methods must name at least one method".into());
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return bad("methods lists a method twice".into());
        }
        if self.bootstrap < 100 {
            return bad("eval.bootstrap must be at least 100".into());
        }
        if self.features_dim == 0 {
            return bad("features.dim must be positive".into());
        }
        for src in [Some(&self.features), self.reference_content.as_ref()]
            .into_iter()
            .flatten()
        {
            if let ContentSource::External(name) = src {
                if !self.content_paths.contains_key(name) {
                    return bad(format!("content.{name}.path is not set"));
                }
            }
        }
        for (arch, g) in &self.gnn {
            if g.spec.samples.len() != g.spec.dims.len() {
                return bad(format!(
                    "embed.method.{}.samples needs {} entries, one per layer",
                    arch.name(),
                    g.spec.dims.len()
                ));
            }
        }
        Ok(())
    }

    /// Highest k, the length of exported recommendation lists.
    pub fn max_k(&self) -> usize {
        *self.ks.last().unwrap()
    }
}

fn parse_with<T: FromStr<Err = Error>>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|e: Error| Error::Config(format!("{key}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::Combine;
    use crate::nn::Activation;

    #[test]
    fn parses_full_example() {
        let cfg = ExperimentConfig::from_text(
            "# experiment\n\
             corpus.path = c.jsonl\n\
             content.scibert.path = s.emb   # external\n\
             split.embed_cutoff = 2015\n\
             split.scorer_cutoff = 2016\n\
             split.query_year = 2016\n\
             split.relevance_start = 2016\n\
             eval.k = 5, 10\n\
             methods = combsage, tfidf\n\
             reference.content = scibert\n\
             reference.graph_year = 2016\n\
             embed.method.combsage.dim = 32\n\
             embed.method.combsage.depth = 3\n\
             embed.method.combsage.samples = 5,4,3\n\
             embed.method.combsage.combine = max\n\
             embed.method.deepwalk.window = 3\n\
             scorer.hidden_activation = relu\n\
             scorer.max_positives = none\n",
        )
        .unwrap();
        assert_eq!(cfg.ks, vec![5, 10]);
        assert_eq!(
            cfg.methods,
            vec![Method::Gnn(Architecture::CombSage), Method::TfIdf]
        );
        let g = &cfg.gnn[&Architecture::CombSage];
        assert_eq!(g.spec.dims, vec![32, 32, 32]);
        assert_eq!(g.spec.combine, Combine::Max);
        assert_eq!(cfg.deepwalk.window, 3);
        assert_eq!(cfg.scorer.hidden_activation, Activation::Relu);
        assert_eq!(cfg.scorer.max_positives, None);
        assert_eq!(
            cfg.reference_content,
            Some(ContentSource::External("scibert".into()))
        );
        assert_eq!(cfg.reference_graph_year, Some(2016));
    }

    #[test]
    fn rejects_bad_configs() {
        let base = "corpus.path = c.jsonl\n";
        for extra in [
            "nonsense = 1\n",
            "split.query_year = 2016\n",
            "eval.k = 10, 5\n",
            "methods = tfidf, tfidf\n",
            "methods = bm25\n",
            "seed = x\n",
            "reference.content = scibert\n",
            "embed.method.sage-mean.depth = 3\n",
            "seed = 1\nseed = 2\n",
            "just words\n",
        ] {
            let err = ExperimentConfig::from_text(&format!("{base}{extra}")).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{extra}: {err}");
        }
        assert!(ExperimentConfig::from_text("seed = 1\n").is_err());
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.conf");
        std::fs::write(&path, "corpus.path = data/c.jsonl\nout = /abs/out\n").unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.corpus_path, dir.path().join("data/c.jsonl"));
        assert_eq!(cfg.out, PathBuf::from("/abs/out"));
    }
}
