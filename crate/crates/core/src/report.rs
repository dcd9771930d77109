//! Per-query evaluation records and the aggregated text report.
//!
//! Per-query values are kept in JSON (`<method>.queries.json`) so that runs
//! of different methods can be merged later. The text report is derived from
//! them alone: every aggregate can be recomputed from the JSON files and the
//! recorded seed.
//!
//! ```text
//! report seed=0 bootstrap=1000
//! [method combsage]
//! precision@10 mean=0.105 bootstrap_std=0.0061 n_queries=200 n_absent=0
//! ...
//! mrr_alt value=0.08 n_queries=180
//! [comparison combsage vs sage-mean]
//! precision@10 cohens_d=0.031 n_a=200 n_b=200
//! novelty_content@10 cohens_d=absent reason=too-few-values
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{bootstrap, cohens_d, mean};
use crate::seed;

/// Rank of the first relevant item; feeds `mrr_alt`, not reported itself.
pub const FIRST_RANK: &str = "first_rank";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEval {
    pub query: String,
    pub n_relevant: usize,
    /// Metric name → value; `None` where undefined for this query.
    pub metrics: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodEval {
    pub method: String,
    pub queries: Vec<QueryEval>,
}

impl MethodEval {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("evaluation serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })
    }

    /// Names of every metric recorded for any query.
    pub fn metric_names(&self) -> BTreeSet<&str> {
        self.queries
            .iter()
            .flat_map(|q| q.metrics.keys().map(String::as_str))
            .collect()
    }

    /// Defined values of a metric, in query order.
    pub fn values(&self, metric: &str) -> Vec<f64> {
        self.queries
            .iter()
            .filter_map(|q| q.metrics.get(metric).copied().flatten())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mean: Option<f64>,
    pub bootstrap_std: Option<f64>,
    pub n_queries: usize,
    pub n_absent: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub seed: u64,
    pub bootstrap: usize,
    pub methods: Vec<MethodEval>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "absent".to_string(), |x| x.to_string())
}

/// Metrics ordered by family, then by k.
fn metric_order(a: &str, b: &str) -> std::cmp::Ordering {
    let split = |m: &str| -> (String, usize) {
        match m.rsplit_once('@') {
            Some((base, k)) => (base.to_string(), k.parse().unwrap_or(usize::MAX)),
            None => (m.to_string(), 0),
        }
    };
    split(a).cmp(&split(b))
}

impl EvalReport {
    pub fn new(seed: u64, bootstrap: usize, mut methods: Vec<MethodEval>) -> Result<Self> {
        methods.sort_by(|a, b| a.method.cmp(&b.method));
        if methods.windows(2).any(|w| w[0].method == w[1].method) {
            return Err(Error::Invalid("report merges the same method twice".into()));
        }
        Ok(Self {
            seed,
            bootstrap,
            methods,
        })
    }

    fn bootstrap_seed(&self, method: &str, metric: &str) -> u64 {
        seed::derive(
            seed::derive(self.seed, "bootstrap"),
            &format!("{method}/{metric}"),
        )
    }

    pub fn aggregate(&self, method: &MethodEval, metric: &str) -> Result<Aggregate> {
        let values = method.values(metric);
        let n_absent = method.queries.len() - values.len();
        if values.is_empty() {
            return Ok(Aggregate {
                mean: None,
                bootstrap_std: None,
                n_queries: 0,
                n_absent,
            });
        }
        let (m, sd) = bootstrap(
            &values,
            self.bootstrap,
            self.bootstrap_seed(&method.method, metric),
        )?;
        Ok(Aggregate {
            mean: Some(m),
            bootstrap_std: Some(sd),
            n_queries: values.len(),
            n_absent,
        })
    }

    pub fn method(&self, name: &str) -> Option<&MethodEval> {
        self.methods.iter().find(|m| m.method == name)
    }

    /// `1 / mean(first relevant rank)`: the literal reading of "reciprocal
    /// of the average position".
    pub fn mrr_alt(method: &MethodEval) -> (Option<f64>, usize) {
        let ranks = method.values(FIRST_RANK);
        if ranks.is_empty() {
            return (None, 0);
        }
        (Some(1.0 / mean(&ranks)), ranks.len())
    }

    pub fn to_text(&self) -> Result<String> {
        let mut out = format!("report seed={} bootstrap={}\n", self.seed, self.bootstrap);
        for m in &self.methods {
            writeln!(out, "[method {}]", m.method).unwrap();
            writeln!(out, "queries {}", m.queries.len()).unwrap();
            let mut names: Vec<&str> = m
                .metric_names()
                .into_iter()
                .filter(|n| *n != FIRST_RANK)
                .collect();
            names.sort_by(|a, b| metric_order(a, b));
            for name in names {
                let a = self.aggregate(m, name)?;
                writeln!(
                    out,
                    "{name} mean={} bootstrap_std={} n_queries={} n_absent={}",
                    fmt_opt(a.mean),
                    fmt_opt(a.bootstrap_std),
                    a.n_queries,
                    a.n_absent
                )
                .unwrap();
            }
            let (alt, n) = Self::mrr_alt(m);
            writeln!(out, "mrr_alt value={} n_queries={n}", fmt_opt(alt)).unwrap();
        }
        for (i, a) in self.methods.iter().enumerate() {
            for b in &self.methods[i + 1..] {
                writeln!(out, "[comparison {} vs {}]", a.method, b.method).unwrap();
                let mut names: Vec<&str> = a
                    .metric_names()
                    .union(&b.metric_names())
                    .copied()
                    .filter(|n| *n != FIRST_RANK)
                    .collect();
                names.sort_by(|x, y| metric_order(x, y));
                for name in names {
                    let (va, vb) = (a.values(name), b.values(name));
                    let line = if va.len() < 2 || vb.len() < 2 {
                        "cohens_d=absent reason=too-few-values".to_string()
                    } else {
                        match cohens_d(&va, &vb)? {
                            Some(d) => format!("cohens_d={d} n_a={} n_b={}", va.len(), vb.len()),
                            None => "cohens_d=absent reason=zero-pooled-sd".to_string(),
                        }
                    };
                    writeln!(out, "{name} {line}").unwrap();
                }
            }
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = self.to_text()?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Looks up `metric`'s mean in a text report, for tests and tooling.
pub fn report_value(text: &str, method: &str, metric: &str, field: &str) -> Option<f64> {
    let header = format!("[method {method}]");
    let mut lines = text.lines().skip_while(|l| *l != header).skip(1);
    lines
        .by_ref()
        .take_while(|l| !l.starts_with('['))
        .find(|l| l.split(' ').next() == Some(metric))
        .and_then(|l| {
            l.split(' ')
                .find_map(|t| t.strip_prefix(&format!("{field}=")).map(str::to_string))
        })
        .and_then(|v| v.parse().ok())
}
