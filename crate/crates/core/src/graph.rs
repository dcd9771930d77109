//! Citation graph snapshots and the graph primitives used by the embedding
//! methods and the hop-distance metric.
//!
//! Nodes are stored in ascending id order, so every node index order is also
//! an id order and all neighbor lists come out deterministically sorted.

use std::collections::{HashMap, VecDeque};

use rand::seq::index;

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Papers cited by the node.
    Out,
    /// Papers citing the node.
    In,
    Undirected,
}

#[derive(Debug, Clone)]
pub struct GraphSnapshot {
    year: Option<i32>,
    ids: Vec<String>,
    index: HashMap<String, u32>,
    out: Vec<Vec<u32>>,
    inc: Vec<Vec<u32>>,
    und: Vec<Vec<u32>>,
    edges: usize,
}

/// Grouping of a node's neighbors into the connected components of the
/// subgraph they induce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborPartition {
    pub center: String,
    pub components: Vec<Vec<String>>,
}

impl GraphSnapshot {
    /// Builds a snapshot from node ids and directed (citing, cited) edges.
    /// Edges touching unknown ids are an error; self-loops and repeats are dropped.
    pub fn from_edges<'a>(
        year: Option<i32>,
        ids: impl IntoIterator<Item = String>,
        edges: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        let mut g = Self::with_nodes(year, ids);
        let mut pairs = Vec::new();
        for (a, b) in edges {
            let ia = g.idx(a)?;
            let ib = g.idx(b)?;
            pairs.push((ia, ib));
        }
        g.set_edges(pairs);
        Ok(g)
    }

    /// Like [`from_edges`](Self::from_edges) for callers that have already
    /// guaranteed every endpoint is a node.
    pub(crate) fn from_index_edges<'a>(
        year: Option<i32>,
        ids: impl IntoIterator<Item = String>,
        edges: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Self {
        Self::from_edges(year, ids, edges).expect("edge endpoints are snapshot nodes")
    }

    fn with_nodes(year: Option<i32>, ids: impl IntoIterator<Item = String>) -> Self {
        let mut ids: Vec<String> = ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        let n = ids.len();
        Self {
            year,
            ids,
            index,
            out: vec![Vec::new(); n],
            inc: vec![Vec::new(); n],
            und: vec![Vec::new(); n],
            edges: 0,
        }
    }

    fn set_edges(&mut self, mut pairs: Vec<(u32, u32)>) {
        pairs.retain(|(a, b)| a != b);
        pairs.sort_unstable();
        pairs.dedup();
        for &(a, b) in &pairs {
            self.out[a as usize].push(b);
            self.inc[b as usize].push(a);
            self.und[a as usize].push(b);
            self.und[b as usize].push(a);
        }
        for list in self.inc.iter_mut().chain(self.und.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        self.edges = pairs.len();
    }

    pub fn year(&self) -> Option<i32> {
        self.year
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, idx: usize) -> &str {
        &self.ids[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).map(|&i| i as usize)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    fn idx(&self, id: &str) -> Result<u32> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    pub fn has_edge(&self, citing: &str, cited: &str) -> bool {
        match (self.index.get(citing), self.index.get(cited)) {
            (Some(&a), Some(&b)) => self.out[a as usize].binary_search(&b).is_ok(),
            _ => false,
        }
    }

    /// Directed (citing, cited) edges in ascending index order.
    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(a, bs)| bs.iter().map(move |&b| (a, b as usize)))
    }

    /// Undirected edges `(a, b)` with `a < b`, each listed once.
    pub fn undirected_edges(&self) -> Vec<(u32, u32)> {
        self.und
            .iter()
            .enumerate()
            .flat_map(|(a, bs)| {
                bs.iter()
                    .filter(move |&&b| (a as u32) < b)
                    .map(move |&b| (a as u32, b))
            })
            .collect()
    }

    /// Sorted undirected neighbor indices.
    pub fn adjacent(&self, idx: usize) -> &[u32] {
        &self.und[idx]
    }

    pub fn degree(&self, idx: usize) -> usize {
        self.und[idx].len()
    }

    pub fn adjacent_to(&self, a: u32, b: u32) -> bool {
        let (x, y) = if self.und[a as usize].len() <= self.und[b as usize].len() {
            (a, b)
        } else {
            (b, a)
        };
        self.und[x as usize].binary_search(&y).is_ok()
    }

    pub fn neighbors(&self, id: &str, direction: Direction) -> Result<Vec<String>> {
        let v = self.idx(id)? as usize;
        let list = match direction {
            Direction::Out => &self.out[v],
            Direction::In => &self.inc[v],
            Direction::Undirected => &self.und[v],
        };
        Ok(list.iter().map(|&j| self.ids[j as usize].clone()).collect())
    }

    /// Up to `size` undirected neighbors drawn uniformly without replacement,
    /// returned in ascending order. The draw depends only on `seed` and the
    /// node id.
    pub fn sample_adjacent(&self, idx: usize, size: usize, seed: u64) -> Vec<u32> {
        let all = &self.und[idx];
        if all.len() <= size {
            return all.clone();
        }
        let mut rng = seed::rng(seed::derive(seed, &self.ids[idx]));
        let mut picked: Vec<u32> = index::sample(&mut rng, all.len(), size)
            .into_iter()
            .map(|i| all[i])
            .collect();
        picked.sort_unstable();
        picked
    }

    pub fn sample_neighbors(&self, id: &str, size: usize, seed: u64) -> Result<Vec<String>> {
        if size == 0 {
            return Err(Error::Invalid("sample size must be at least 1".into()));
        }
        let v = self.idx(id)? as usize;
        Ok(self
            .sample_adjacent(v, size, seed)
            .into_iter()
            .map(|j| self.ids[j as usize].clone())
            .collect())
    }

    /// Connected components of the subgraph induced on `members` (which must
    /// be sorted and distinct). Each component is sorted; components are
    /// ordered by their smallest member.
    pub fn induced_components(&self, members: &[u32]) -> Vec<Vec<u32>> {
        let n = members.len();
        let mut dsu = DisjointSets::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if self.adjacent_to(members[i], members[j]) {
                    dsu.union(i, j);
                }
            }
        }
        let mut groups: Vec<Vec<u32>> = Vec::new();
        let mut slot: HashMap<usize, usize> = HashMap::new();
        for (i, &m) in members.iter().enumerate() {
            let root = dsu.find(i);
            let g = *slot.entry(root).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(m);
        }
        groups
    }

    pub fn neighborhood_components(&self, id: &str) -> Result<NeighborPartition> {
        let v = self.idx(id)? as usize;
        let comps = self.induced_components(&self.und[v]);
        Ok(NeighborPartition {
            center: id.to_string(),
            components: comps
                .into_iter()
                .map(|c| {
                    c.into_iter()
                        .map(|j| self.ids[j as usize].clone())
                        .collect()
                })
                .collect(),
        })
    }

    /// Breadth-first hop counts from `src` on the undirected view.
    pub fn hop_distances(&self, src: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.ids.len()];
        let mut queue = VecDeque::new();
        dist[src] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap() + 1;
            for &w in &self.und[u] {
                if dist[w as usize].is_none() {
                    dist[w as usize] = Some(d);
                    queue.push_back(w as usize);
                }
            }
        }
        dist
    }

    /// Hop count between two papers; `None` when disconnected.
    pub fn shortest_path_length(&self, u: &str, v: &str) -> Result<Option<u32>> {
        let a = self.idx(u)? as usize;
        let b = self.idx(v)? as usize;
        if a == b {
            return Ok(Some(0));
        }
        Ok(self.hop_distances(a)[b])
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so roots are stable
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}
