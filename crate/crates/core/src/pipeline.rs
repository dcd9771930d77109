//! End-to-end experiment: embed → train scorer → recommend → evaluate →
//! report, with every stage reading and writing artifacts under `out/`.
//!
//! ```text
//! out/embeddings/<method>.candidates.emb   papers up to the embedding cutoff
//! out/embeddings/<method>.queries.emb      papers of the query year
//! out/models/<method>.gnn                  GNN weights (GNN methods only)
//! out/models/<method>.scorer               pairwise scorer
//! out/recommendations/<method>.tsv         top-k lists
//! out/references/{graph,content}.emb       novelty/diversity spaces
//! out/eval/<method>.queries.json           per-query metrics
//! out/report.txt
//! ```
//!
//! Every random step seeds from the global seed and a fixed label, so a
//! rerun with the same configuration reproduces every file byte for byte.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::cocite::{extract_cocitations, relevant_indices, CoCitations};
use crate::config::{ContentSource, ExperimentConfig, Method};
use crate::corpus::{load_corpus, Corpus};
use crate::embed::content::content_vectors;
use crate::embed::deepwalk::{DeepWalkConfig, DeepWalkModel};
use crate::embed::gnn::{gnn_infer, gnn_train, GnnModel};
use crate::embed::tfidf::TfIdfModel;
use crate::error::{Error, Result};
use crate::graph::GraphSnapshot;
use crate::matrix::{load_embedding_matrix, EmbeddingMatrix};
use crate::metrics::{
    auc, diversity, first_relevant_rank, hop_summary, ndcg_at_k, novelty, precision_recall_at_k,
    reciprocal_rank,
};
use crate::recommend::{
    build_training_pairs, format_recommendations, train_scorer, LabeledPair, ScorerModel,
};
use crate::report::{EvalReport, MethodEval, QueryEval, FIRST_RANK};
use crate::seed;

/// Artifact locations under the output directory.
#[derive(Debug, Clone)]
pub struct Paths {
    pub root: PathBuf,
}

impl Paths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    fn file(&self, dir: &str, name: String) -> PathBuf {
        self.root.join(dir).join(name)
    }

    pub fn candidates(&self, m: Method) -> PathBuf {
        self.file("embeddings", format!("{m}.candidates.emb"))
    }

    pub fn queries(&self, m: Method) -> PathBuf {
        self.file("embeddings", format!("{m}.queries.emb"))
    }

    pub fn gnn(&self, m: Method) -> PathBuf {
        self.file("models", format!("{m}.gnn"))
    }

    pub fn scorer(&self, m: Method) -> PathBuf {
        self.file("models", format!("{m}.scorer"))
    }

    pub fn recommendations(&self, m: Method) -> PathBuf {
        self.file("recommendations", format!("{m}.tsv"))
    }

    pub fn reference(&self, name: &str) -> PathBuf {
        self.file("references", format!("{name}.emb"))
    }

    pub fn eval(&self, m: Method) -> PathBuf {
        self.file("eval", format!("{m}.queries.json"))
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.txt")
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn require(path: &Path, hint: impl Into<String>) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingArtifact {
            path: path.to_path_buf(),
            hint: hint.into(),
        })
    }
}

/// Fails unless every node and edge of `g` dates from `cutoff` or earlier.
pub fn assert_graph_cutoff(
    corpus: &Corpus,
    g: &GraphSnapshot,
    cutoff: i32,
    what: &str,
) -> Result<()> {
    for id in g.ids() {
        let year = corpus
            .get(id)
            .ok_or_else(|| Error::UnknownId(id.clone()))?
            .year;
        if year > cutoff {
            return Err(Error::Leakage(format!(
                "{what} contains {id} from {year}, after {cutoff}"
            )));
        }
    }
    Ok(())
}

/// Fails if a positive pair's co-citation is first seen after `cutoff`.
pub fn assert_pairs_cutoff(
    corpus: &Corpus,
    cocites: &CoCitations,
    pairs: &[LabeledPair],
    cutoff: i32,
) -> Result<()> {
    for p in pairs.iter().filter(|p| p.label) {
        let first = cocites.get(corpus, &p.q, &p.i).map(|c| c.first_year);
        match first {
            Some(y) if y <= cutoff => {}
            _ => {
                return Err(Error::Leakage(format!(
                    "training pair ({}, {}) is co-cited only after {cutoff} ({first:?})",
                    p.q, p.i
                )))
            }
        }
    }
    Ok(())
}

struct References {
    graph: EmbeddingMatrix,
    graph_snapshot: GraphSnapshot,
    content: Option<EmbeddingMatrix>,
}

/// A loaded corpus plus configuration; stages run against it.
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub corpus: Corpus,
    pub paths: Paths,
    cocites: OnceLock<CoCitations>,
    features: OnceLock<EmbeddingMatrix>,
    references: OnceLock<References>,
    /// Reuse reference spaces already on disk instead of recomputing them.
    reuse_references: bool,
}

impl Experiment {
    pub fn open(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let corpus = load_corpus(&cfg.corpus_path).map_err(|e| e.in_stage("ingest"))?;
        let paths = Paths::new(&cfg.out);
        Ok(Self {
            cfg,
            corpus,
            paths,
            cocites: OnceLock::new(),
            features: OnceLock::new(),
            references: OnceLock::new(),
            reuse_references: true,
        })
    }

    fn seed(&self, label: &str) -> u64 {
        seed::derive(self.cfg.seed, label)
    }

    pub fn cocites(&self) -> &CoCitations {
        self.cocites
            .get_or_init(|| extract_cocitations(&self.corpus))
    }

    /// Papers up to the embedding cutoff, ascending id.
    pub fn candidates(&self) -> Vec<String> {
        self.corpus.snapshot(self.cfg.embed_cutoff).ids().to_vec()
    }

    /// Papers published in the query year, ascending id.
    pub fn queries(&self) -> Vec<String> {
        let mut q: Vec<String> = self
            .corpus
            .papers()
            .iter()
            .filter(|p| p.year == self.cfg.query_year)
            .map(|p| p.id.clone())
            .collect();
        q.sort_unstable();
        q
    }

    fn content_matrix(&self, src: &ContentSource) -> Result<EmbeddingMatrix> {
        match src {
            ContentSource::Synthetic => {
                let ids: Vec<String> = self.corpus.papers().iter().map(|p| p.id.clone()).collect();
                content_vectors(
                    &self.corpus,
                    &ids,
                    self.cfg.features_dim,
                    self.seed("content"),
                )
            }
            ContentSource::External(name) => {
                let path = &self.cfg.content_paths[name];
                load_embedding_matrix(path, Some(&self.corpus))
            }
        }
    }

    fn features(&self) -> Result<&EmbeddingMatrix> {
        if let Some(f) = self.features.get() {
            return Ok(f);
        }
        let f = self.content_matrix(&self.cfg.features)?;
        Ok(self.features.get_or_init(|| f))
    }

    fn deepwalk_config(&self, label: &str) -> DeepWalkConfig {
        DeepWalkConfig {
            seed: self.seed(label),
            ..self.cfg.deepwalk.clone()
        }
    }

    /// Embeds candidates and queries with one method.
    pub fn embed(&self, m: Method) -> Result<()> {
        self.embed_inner(m).map_err(|e| e.in_stage("embed"))
    }

    fn embed_inner(&self, m: Method) -> Result<()> {
        let cut = self.cfg.embed_cutoff;
        let g_cut = self.corpus.snapshot(cut);
        assert_graph_cutoff(&self.corpus, &g_cut, cut, "embedding training graph")?;
        let g_query = self.corpus.snapshot(self.cfg.query_year);
        assert_graph_cutoff(&self.corpus, &g_query, self.cfg.query_year, "query graph")?;
        let candidates = g_cut.ids().to_vec();
        let queries = self.queries();
        log::info!(
            "embed {m}: {} candidates, {} queries, {} training edges",
            candidates.len(),
            queries.len(),
            g_cut.edge_count()
        );
        let (cand, qry) = match m {
            Method::TfIdf => {
                let model = TfIdfModel::fit(&self.corpus, &g_cut, self.cfg.tfidf_vocab_cap)?;
                (
                    model.embed(&self.corpus, &candidates)?,
                    model.embed(&self.corpus, &queries)?,
                )
            }
            Method::DeepWalk => {
                let cfg = self.deepwalk_config("deepwalk");
                let model = DeepWalkModel::train(&g_cut, &cfg)?;
                let new_ids: Vec<String> = g_query
                    .ids()
                    .iter()
                    .filter(|id| !g_cut.contains(id))
                    .cloned()
                    .collect();
                let folded = model.fold_in(&g_query, &new_ids, &cfg)?;
                (model.embeddings()?, folded.select(&queries)?)
            }
            Method::Gnn(arch) => {
                let settings = &self.cfg.gnn[&arch];
                let train = crate::embed::GnnTrainConfig {
                    seed: self.seed(&format!("gnn/{arch}")),
                    ..settings.train.clone()
                };
                let features = self.features()?;
                let (model, report) = gnn_train(&g_cut, features, &settings.spec, &train)?;
                log::info!("{arch} losses per epoch: {:?}", report.epoch_losses);
                write_text(&self.paths.gnn(m), &model.to_checkpoint())?;
                (
                    gnn_infer(&model, &g_cut, features, &candidates)?,
                    gnn_infer(&model, &g_query, features, &queries)?,
                )
            }
        };
        for (mat, path) in [
            (cand, self.paths.candidates(m)),
            (qry, self.paths.queries(m)),
        ] {
            ensure_parent(&path)?;
            mat.with_method(m.name()).write(&path)?;
        }
        Ok(())
    }

    fn load_embeddings(&self, m: Method) -> Result<(EmbeddingMatrix, EmbeddingMatrix)> {
        let hint = format!("run the embed stage for {m} first");
        let (c, q) = (self.paths.candidates(m), self.paths.queries(m));
        require(&c, hint.clone())?;
        require(&q, hint)?;
        Ok((
            load_embedding_matrix(&c, Some(&self.corpus))?,
            load_embedding_matrix(&q, Some(&self.corpus))?,
        ))
    }

    fn load_scorer(&self, m: Method) -> Result<ScorerModel> {
        let path = self.paths.scorer(m);
        require(&path, format!("run the train-scorer stage for {m} first"))?;
        let model = ScorerModel::load(&path)?;
        if model.method != m.name() {
            return Err(Error::Invalid(format!(
                "{} was trained on {} embeddings, not {m}",
                path.display(),
                model.method
            )));
        }
        Ok(model)
    }

    pub fn train_scorer(&self, m: Method) -> Result<()> {
        self.train_scorer_inner(m)
            .map_err(|e| e.in_stage("train-scorer"))
    }

    fn train_scorer_inner(&self, m: Method) -> Result<()> {
        let (cand, _) = self.load_embeddings(m)?;
        let pool: BTreeSet<String> = self.candidates().into_iter().collect();
        let s = &self.cfg.scorer;
        let pairs = build_training_pairs(
            self.cocites(),
            &self.corpus,
            self.cfg.scorer_cutoff,
            &pool,
            s.negatives,
            s.max_positives,
            self.seed("pairs"),
        )?;
        assert_pairs_cutoff(&self.corpus, self.cocites(), &pairs, self.cfg.scorer_cutoff)?;
        let cfg = crate::recommend::ScorerConfig {
            seed: self.seed(&format!("scorer/{m}")),
            ..s.clone()
        };
        let (model, report) = train_scorer(&cand, &pairs, &cfg)?;
        log::info!(
            "scorer {m}: {} pairs, losses per epoch {:?}",
            pairs.len(),
            report.epoch_losses
        );
        write_text(&self.paths.scorer(m), &model.to_checkpoint())
    }

    /// Full rankings of the candidate pool for every query.
    fn rankings(&self, m: Method) -> Result<Vec<crate::recommend::RecommendationList>> {
        let scorer = self.load_scorer(m)?;
        let (cand, qry) = self.load_embeddings(m)?;
        let index = scorer.index_candidates(&cand, &self.candidates())?;
        self.queries()
            .iter()
            .map(|q| {
                let hq = qry
                    .row_by_id(q)
                    .ok_or_else(|| Error::Invalid(format!("query {q} has no {m} embedding")))?;
                scorer.rank(q, hq, &index)
            })
            .collect()
    }

    pub fn recommend(&self, m: Method) -> Result<()> {
        let run = || -> Result<()> {
            let lists = self.rankings(m)?;
            write_text(
                &self.paths.recommendations(m),
                &format_recommendations(&lists, self.cfg.max_k()),
            )
        };
        run().map_err(|e| e.in_stage("recommend"))
    }

    fn references(&self) -> Result<&References> {
        if let Some(r) = self.references.get() {
            return Ok(r);
        }
        let graph_snapshot = match self.cfg.reference_graph_year {
            Some(y) => self.corpus.snapshot(y),
            None => self.corpus.full_graph(),
        };
        let gpath = self.paths.reference("graph");
        let graph = if self.reuse_references && gpath.exists() {
            load_embedding_matrix(&gpath, Some(&self.corpus))?
        } else {
            let model =
                DeepWalkModel::train(&graph_snapshot, &self.deepwalk_config("reference/graph"))?;
            let e = model.embeddings()?.with_method("graph-reference");
            ensure_parent(&gpath)?;
            e.write(&gpath)?;
            e
        };
        let content = match &self.cfg.reference_content {
            None => {
                log::warn!("no content reference space configured; content novelty/diversity will be absent");
                None
            }
            Some(src) => {
                let cpath = self.paths.reference("content");
                let e = if self.reuse_references && cpath.exists() {
                    load_embedding_matrix(&cpath, Some(&self.corpus))?
                } else {
                    let e = self.content_matrix(src)?.with_method("content-reference");
                    ensure_parent(&cpath)?;
                    e.write(&cpath)?;
                    e
                };
                Some(e)
            }
        };
        Ok(self.references.get_or_init(|| References {
            graph,
            graph_snapshot,
            content,
        }))
    }

    pub fn evaluate(&self, m: Method) -> Result<MethodEval> {
        self.evaluate_inner(m).map_err(|e| e.in_stage("evaluate"))
    }

    fn evaluate_inner(&self, m: Method) -> Result<MethodEval> {
        let lists = self.rankings(m)?;
        let refs = self.references()?;
        let pool: HashSet<&str> = lists.first().map(|l| l.ids().collect()).unwrap_or_default();
        let queries: Vec<QueryEval> = lists
            .par_iter()
            .map(|list| self.evaluate_query(list, refs, &pool))
            .collect::<Result<_>>()?;
        let eval = MethodEval {
            method: m.name().to_string(),
            queries,
        };
        let path = self.paths.eval(m);
        ensure_parent(&path)?;
        eval.write_json(&path)?;
        Ok(eval)
    }

    fn evaluate_query(
        &self,
        list: &crate::recommend::RecommendationList,
        refs: &References,
        pool: &HashSet<&str>,
    ) -> Result<QueryEval> {
        let q = list.query.as_str();
        let qi = self
            .corpus
            .index_of(q)
            .ok_or_else(|| Error::UnknownId(q.to_string()))?;
        let ranking: Vec<&str> = list.ids().collect();
        let relevant: HashSet<&str> =
            relevant_indices(&self.corpus, self.cocites(), qi, self.cfg.relevance_start)
                .into_iter()
                .map(|i| self.corpus.paper(i).id.as_str())
                .filter(|id| pool.contains(id) || ranking.contains(id))
                .collect();

        let mut metrics: HashMap<String, Option<f64>> = HashMap::new();
        metrics.insert("auc".into(), auc(&ranking, &relevant));
        metrics.insert("ndcg".into(), ndcg_at_k(&ranking, &relevant, ranking.len()));
        metrics.insert("mrr".into(), reciprocal_rank(&ranking, &relevant));
        metrics.insert(
            FIRST_RANK.into(),
            first_relevant_rank(&ranking, &relevant).map(|r| r as f64),
        );

        let graph_dist = refs
            .graph_snapshot
            .index_of(q)
            .map(|i| refs.graph_snapshot.hop_distances(i));
        let spaces = [
            ("graph", Some(&refs.graph)),
            ("content", refs.content.as_ref()),
        ];
        for &k in &self.cfg.ks {
            let (p, r) = precision_recall_at_k(&ranking, &relevant, k);
            metrics.insert(format!("precision@{k}"), Some(p));
            metrics.insert(format!("recall@{k}"), r);
            metrics.insert(format!("ndcg@{k}"), ndcg_at_k(&ranking, &relevant, k));
            let top: Vec<&str> = ranking.iter().take(k).copied().collect();
            let top_rel: Vec<&str> = top
                .iter()
                .filter(|x| relevant.contains(*x))
                .copied()
                .collect();
            for (space, matrix) in spaces {
                for (suffix, recs) in [("", &top), ("_rel", &top_rel)] {
                    let (nov, div) = match matrix {
                        Some(mat) if mat.contains(q) && !recs.is_empty() => {
                            (Some(novelty(mat, q, recs)?), diversity(mat, recs)?)
                        }
                        _ => (None, None),
                    };
                    metrics.insert(format!("novelty_{space}{suffix}@{k}"), nov);
                    metrics.insert(format!("diversity_{space}{suffix}@{k}"), div);
                }
            }
            for (suffix, recs) in [("", &top), ("_rel", &top_rel)] {
                let hops = match &graph_dist {
                    Some(d) if !recs.is_empty() => hop_summary(&refs.graph_snapshot, d, recs)?.mean,
                    _ => None,
                };
                metrics.insert(format!("hops{suffix}@{k}"), hops);
            }
        }
        Ok(QueryEval {
            query: q.to_string(),
            n_relevant: relevant.len(),
            metrics: metrics.into_iter().collect(),
        })
    }

    /// Merges the per-query files of the configured methods.
    pub fn report(&self) -> Result<EvalReport> {
        let run = || -> Result<EvalReport> {
            let mut evals = Vec::new();
            for &m in &self.cfg.methods {
                let path = self.paths.eval(m);
                require(&path, format!("run the evaluate stage for {m} first"))?;
                evals.push(MethodEval::read_json(&path)?);
            }
            let report = EvalReport::new(self.cfg.seed, self.cfg.bootstrap, evals)?;
            let path = self.paths.report();
            ensure_parent(&path)?;
            report.write(&path)?;
            Ok(report)
        };
        run().map_err(|e| e.in_stage("report"))
    }
}

/// Runs every stage for every configured method and writes the report.
/// Reference spaces are recomputed rather than reused.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<EvalReport> {
    let mut exp = Experiment::open(cfg.clone())?;
    exp.reuse_references = false;
    if exp.queries().is_empty() {
        return Err(Error::Invalid(format!(
            "no papers published in the query year {}",
            cfg.query_year
        ))
        .in_stage("ingest"));
    }
    for &m in &cfg.methods {
        exp.embed(m)?;
        exp.train_scorer(m)?;
        exp.recommend(m)?;
        exp.evaluate(m)?;
    }
    exp.report()
}

/// Loads a GNN checkpoint written by the embed stage.
pub fn load_gnn(path: &Path) -> Result<GnnModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    GnnModel::from_checkpoint(&text)
}

/// Sizes the global worker pool. Only the first call takes effect.
pub fn set_workers(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))
}
