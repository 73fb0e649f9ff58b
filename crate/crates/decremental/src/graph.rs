//! The decremental input graph `G`, the graph `G*` that keeps every deletion
//! which would disconnect `G`, and per-vertex component representatives.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type VertexId = usize;
pub type Dist = u64;

/// Distance of an unreachable vertex.
pub const INF: Dist = u64::MAX;

/// Undirected edge stored as `(min, max)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
}

impl Edge {
    pub fn new(a: VertexId, b: VertexId) -> Edge {
        if a <= b {
            Edge { u: a, v: b }
        } else {
            Edge { u: b, v: a }
        }
    }

    pub fn other(&self, x: VertexId) -> VertexId {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {0} is out of range")]
    VertexOutOfRange(VertexId),
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("parallel edge ({0}, {1})")]
    ParallelEdge(VertexId, VertexId),
    #[error("input graph is not connected")]
    Disconnected,
    #[error("edge ({0}, {1}) is not in the graph")]
    MissingEdge(VertexId, VertexId),
}

/// Outcome of removing one edge from a connectivity structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Split {
    Connected,
    /// The component fell apart; `smaller` lists the smaller side, sorted.
    Split { smaller: Vec<VertexId> },
}

/// Decremental connectivity: remove an edge, learn whether its component split.
pub trait ConnectivityBackend: Send + Sync {
    fn delete_edge(&mut self, u: VertexId, v: VertexId) -> Split;
}

/// Answers each deletion with a bidirectional search from both endpoints.
pub struct SearchConnectivity {
    adj: Vec<BTreeSet<VertexId>>,
}

impl SearchConnectivity {
    pub fn new(n: usize, edges: &[Edge]) -> SearchConnectivity {
        let mut adj = vec![BTreeSet::new(); n];
        for e in edges {
            adj[e.u].insert(e.v);
            adj[e.v].insert(e.u);
        }
        SearchConnectivity { adj }
    }
}

impl ConnectivityBackend for SearchConnectivity {
    fn delete_edge(&mut self, u: VertexId, v: VertexId) -> Split {
        self.adj[u].remove(&v);
        self.adj[v].remove(&u);
        let adj = &self.adj;
        split_search(u, v, |x| adj[x].iter().copied().collect::<Vec<_>>())
    }
}

/// Decides whether `u` and `v` are still connected by growing two searches in
/// lockstep. When one search runs dry it has enumerated a whole component; the
/// other side is then grown just far enough to know which side is smaller.
/// Equal sizes go to the side holding the smaller endpoint index.
pub fn split_search<F, I>(u: VertexId, v: VertexId, mut neighbors: F) -> Split
where
    F: FnMut(VertexId) -> I,
    I: IntoIterator<Item = VertexId>,
{
    if u == v {
        return Split::Connected;
    }
    let mut side: HashMap<VertexId, usize> = HashMap::new();
    side.insert(u, 0);
    side.insert(v, 1);
    let mut queues = [VecDeque::from([u]), VecDeque::from([v])];
    let mut found = [vec![u], vec![v]];
    let done = loop {
        let mut exhausted = None;
        for s in 0..2 {
            match queues[s].pop_front() {
                None => {
                    exhausted = Some(s);
                    break;
                }
                Some(x) => {
                    for y in neighbors(x) {
                        match side.get(&y) {
                            Some(&t) if t != s => return Split::Connected,
                            Some(_) => {}
                            None => {
                                side.insert(y, s);
                                found[s].push(y);
                                queues[s].push_back(y);
                            }
                        }
                    }
                }
            }
        }
        if let Some(s) = exhausted {
            break s;
        }
    };
    let o = 1 - done;
    let a = found[done].len();
    while found[o].len() <= a {
        let Some(x) = queues[o].pop_front() else { break };
        for y in neighbors(x) {
            if !side.contains_key(&y) {
                side.insert(y, o);
                found[o].push(y);
                queues[o].push_back(y);
            }
        }
    }
    let b = found[o].len();
    let smaller_side = if b > a {
        done
    } else if queues[o].is_empty() && b == a {
        // side 0 always holds `u`
        if u < v {
            0
        } else {
            1
        }
    } else if b < a {
        o
    } else {
        done
    };
    let mut smaller = std::mem::take(&mut found[smaller_side]);
    smaller.sort_unstable();
    Split::Split { smaller }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeletionReport {
    pub edge: Edge,
    pub stage: u64,
    /// The edge was removed from `G*` as well.
    pub applied_to_star: bool,
    /// The edge disconnected `G` and stays in `G*`.
    pub skipped: bool,
    pub smaller_side: Option<Vec<VertexId>>,
}

pub struct DecrementalGraph {
    n: usize,
    edges: Vec<Edge>,
    index: HashMap<Edge, usize>,
    adj: Vec<Vec<(VertexId, usize)>>,
    in_g: Vec<bool>,
    in_star: Vec<bool>,
    g_edges: usize,
    star_edges: usize,
    skipped: BTreeSet<Edge>,
    rep: Vec<usize>,
    next_label: usize,
    stage: u64,
    rep_changes: u64,
    backend: Box<dyn ConnectivityBackend>,
}

impl std::fmt::Debug for DecrementalGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DecrementalGraph")
            .field("n", &self.n)
            .field("g_edges", &self.g_edges)
            .field("star_edges", &self.star_edges)
            .field("stage", &self.stage)
            .finish()
    }
}

impl DecrementalGraph {
    pub fn new(n: usize, edges: &[Edge]) -> Result<DecrementalGraph, GraphError> {
        let canonical: Vec<Edge> = edges.iter().map(|e| Edge::new(e.u, e.v)).collect();
        let backend = Box::new(SearchConnectivity::new(
            n,
            &canonical
                .iter()
                .copied()
                .filter(|e| e.u < n && e.v < n)
                .collect::<Vec<_>>(),
        ));
        Self::with_backend(n, edges, backend)
    }

    pub fn with_backend(
        n: usize,
        edges: &[Edge],
        backend: Box<dyn ConnectivityBackend>,
    ) -> Result<DecrementalGraph, GraphError> {
        let mut index = HashMap::new();
        let mut list = Vec::with_capacity(edges.len());
        let mut adj = vec![Vec::new(); n];
        for e in edges {
            let e = Edge::new(e.u, e.v);
            if e.v >= n {
                return Err(GraphError::VertexOutOfRange(e.v));
            }
            if e.u == e.v {
                return Err(GraphError::SelfLoop(e.u));
            }
            if index.contains_key(&e) {
                return Err(GraphError::ParallelEdge(e.u, e.v));
            }
            let id = list.len();
            index.insert(e, id);
            list.push(e);
            adj[e.u].push((e.v, id));
            adj[e.v].push((e.u, id));
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
        }
        let m = list.len();
        let g = DecrementalGraph {
            n,
            edges: list,
            index,
            adj,
            in_g: vec![true; m],
            in_star: vec![true; m],
            g_edges: m,
            star_edges: m,
            skipped: BTreeSet::new(),
            rep: vec![0; n],
            next_label: 1,
            stage: 0,
            rep_changes: 0,
            backend,
        };
        if n > 0 && g.star_bfs(0).contains(&INF) {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stage(&self) -> u64 {
        self.stage
    }

    /// Edge count of `G`.
    pub fn m(&self) -> usize {
        self.g_edges
    }

    /// Edge count of `G*`.
    pub fn m_star(&self) -> usize {
        self.star_edges
    }

    pub fn initial_m(&self) -> usize {
        self.edges.len()
    }

    pub fn skipped(&self) -> &BTreeSet<Edge> {
        &self.skipped
    }

    /// Component label of `v`; equal labels mean connected in `G`.
    pub fn rep(&self, v: VertexId) -> usize {
        self.rep[v]
    }

    /// Total number of representative reassignments so far.
    pub fn rep_changes(&self) -> u64 {
        self.rep_changes
    }

    pub fn conn(&self, u: VertexId, v: VertexId) -> bool {
        self.rep[u] == self.rep[v]
    }

    pub fn edge_id(&self, e: Edge) -> Option<usize> {
        self.index.get(&Edge::new(e.u, e.v)).copied()
    }

    pub fn edge(&self, id: usize) -> Edge {
        self.edges[id]
    }

    pub fn in_g(&self, e: Edge) -> bool {
        self.edge_id(e).is_some_and(|id| self.in_g[id])
    }

    pub fn in_star(&self, e: Edge) -> bool {
        self.edge_id(e).is_some_and(|id| self.in_star[id])
    }

    pub fn star_alive(&self, id: usize) -> bool {
        self.in_star[id]
    }

    /// All original incident edges of `v` as `(neighbor, edge id)`, sorted by
    /// neighbor. Positions are stable, which scan cursors rely on.
    pub fn adjacency(&self, v: VertexId) -> &[(VertexId, usize)] {
        &self.adj[v]
    }

    pub fn star_neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.adj[v]
            .iter()
            .filter(|&&(_, id)| self.in_star[id])
            .map(|&(w, _)| w)
    }

    pub fn g_neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.adj[v]
            .iter()
            .filter(|&&(_, id)| self.in_g[id])
            .map(|&(w, _)| w)
    }

    pub fn star_degree(&self, v: VertexId) -> usize {
        self.star_neighbors(v).count()
    }

    pub fn g_edge_list(&self) -> Vec<Edge> {
        (0..self.edges.len())
            .filter(|&i| self.in_g[i])
            .map(|i| self.edges[i])
            .collect()
    }

    pub fn star_edge_list(&self) -> Vec<Edge> {
        (0..self.edges.len())
            .filter(|&i| self.in_star[i])
            .map(|i| self.edges[i])
            .collect()
    }

    pub fn delete_edge(&mut self, e: Edge) -> Result<DeletionReport, GraphError> {
        let e = Edge::new(e.u, e.v);
        if e.v >= self.n {
            return Err(GraphError::VertexOutOfRange(e.v));
        }
        let id = match self.index.get(&e) {
            Some(&id) if self.in_g[id] => id,
            _ => return Err(GraphError::MissingEdge(e.u, e.v)),
        };
        self.in_g[id] = false;
        self.g_edges -= 1;
        self.stage += 1;
        let report = match self.backend.delete_edge(e.u, e.v) {
            Split::Connected => {
                self.in_star[id] = false;
                self.star_edges -= 1;
                DeletionReport {
                    edge: e,
                    stage: self.stage,
                    applied_to_star: true,
                    skipped: false,
                    smaller_side: None,
                }
            }
            Split::Split { smaller } => {
                let label = self.next_label;
                self.next_label += 1;
                for &x in &smaller {
                    self.rep[x] = label;
                }
                self.rep_changes += smaller.len() as u64;
                self.skipped.insert(e);
                DeletionReport {
                    edge: e,
                    stage: self.stage,
                    applied_to_star: false,
                    skipped: true,
                    smaller_side: Some(smaller),
                }
            }
        };
        Ok(report)
    }

    /// Breadth-first distances from `s` over `G*`.
    pub fn star_bfs(&self, s: VertexId) -> Vec<Dist> {
        let mut dist = vec![INF; self.n];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for y in self.star_neighbors(x) {
                if dist[y] == INF {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    pub fn dist_star(&self, u: VertexId, v: VertexId) -> Dist {
        self.star_bfs(u)[v]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Vec<Edge> {
        (0..n - 1).map(|i| Edge::new(i, i + 1)).collect()
    }

    fn cycle(n: usize) -> Vec<Edge> {
        let mut e = path(n);
        e.push(Edge::new(n - 1, 0));
        e
    }

    #[test]
    fn path_starts_with_one_representative() {
        let g = DecrementalGraph::new(3, &path(3)).unwrap();
        assert_eq!(g.rep(0), g.rep(1));
        assert_eq!(g.rep(1), g.rep(2));
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            DecrementalGraph::new(3, &[Edge::new(0, 1)]).unwrap_err(),
            GraphError::Disconnected
        );
        assert_eq!(
            DecrementalGraph::new(2, &[Edge::new(1, 1)]).unwrap_err(),
            GraphError::SelfLoop(1)
        );
        assert_eq!(
            DecrementalGraph::new(2, &[Edge::new(0, 1), Edge::new(1, 0)]).unwrap_err(),
            GraphError::ParallelEdge(0, 1)
        );
        assert_eq!(
            DecrementalGraph::new(2, &[Edge::new(0, 2)]).unwrap_err(),
            GraphError::VertexOutOfRange(2)
        );
    }

    #[test]
    fn cycle_has_no_skips() {
        let mut g = DecrementalGraph::new(4, &cycle(4)).unwrap();
        assert_eq!(g.m_star(), 4);
        assert!(g.skipped().is_empty());
        let r = g.delete_edge(Edge::new(0, 1)).unwrap();
        assert!(r.applied_to_star && !r.skipped);
        assert!((0..4).all(|v| g.rep(v) == g.rep(0)));
        assert_eq!(g.m_star(), 3);
    }

    #[test]
    fn bridge_is_skipped() {
        let mut g = DecrementalGraph::new(3, &path(3)).unwrap();
        let r = g.delete_edge(Edge::new(1, 0)).unwrap();
        assert!(r.skipped && !r.applied_to_star);
        assert_eq!(r.smaller_side, Some(vec![0]));
        assert!(!g.conn(0, 2));
        assert!(g.conn(1, 2));
        assert_eq!(g.m_star(), 2);
        assert!(g.in_star(Edge::new(0, 1)) && !g.in_g(Edge::new(0, 1)));
    }

    #[test]
    fn deleting_twice_errors() {
        let mut g = DecrementalGraph::new(3, &path(3)).unwrap();
        g.delete_edge(Edge::new(0, 1)).unwrap();
        assert_eq!(
            g.delete_edge(Edge::new(0, 1)).unwrap_err(),
            GraphError::MissingEdge(0, 1)
        );
        assert_eq!(
            g.delete_edge(Edge::new(0, 2)).unwrap_err(),
            GraphError::MissingEdge(0, 2)
        );
    }

    #[test]
    fn equal_split_goes_to_smaller_endpoint() {
        // 0-1-2-3, cut the middle: both halves have two vertices
        let mut g = DecrementalGraph::new(4, &path(4)).unwrap();
        let r = g.delete_edge(Edge::new(2, 1)).unwrap();
        assert_eq!(r.smaller_side, Some(vec![0, 1]));
        assert_eq!(g.rep(0), g.rep(1));
        assert_ne!(g.rep(0), g.rep(2));
        assert_eq!(g.rep(2), g.rep(3));
        assert_eq!(g.rep_changes(), 2);
    }

    #[test]
    fn dist_star_on_path() {
        let g = DecrementalGraph::new(5, &path(5)).unwrap();
        assert_eq!(g.dist_star(2, 2), 0);
        assert_eq!(g.dist_star(0, 4), 4);
    }

    #[test]
    fn split_search_reports_smaller_side() {
        // triangle 0-1-2 hanging off 3 via the removed edge (2,3), 3-4 tail
        let adj: Vec<Vec<usize>> = vec![vec![1, 2], vec![0, 2], vec![0, 1], vec![4], vec![3]];
        let r = split_search(2, 3, |x| adj[x].clone());
        assert_eq!(r, Split::Split { smaller: vec![3, 4] });
        let r = split_search(3, 2, |x| adj[x].clone());
        assert_eq!(r, Split::Split { smaller: vec![3, 4] });
    }
}
