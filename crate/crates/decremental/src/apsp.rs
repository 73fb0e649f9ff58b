//! Approximate all-pairs distances under deletions.
//!
//! Every center of layer `j` of a plain 2-cover grows a tree of depth `b·2^j`.
//! A query looks for the first layer whose pivot of `u` reaches `v` and
//! answers `l_p(u) + l_p(v)`.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;
use thiserror::Error;

use crate::cover::LayeredCover;
use crate::es_tree::EsTree;
use crate::graph::{DecrementalGraph, DeletionReport, Dist, Edge, GraphError, VertexId, INF};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApspError {
    #[error("epsilon must lie in (0, 1), got {0}")]
    BadEpsilon(f64),
    #[error("vertices {0} and {1} are not connected")]
    Disconnected(VertexId, VertexId),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ApspStats {
    pub trees: usize,
    pub tree_scans: u64,
    pub cover_scans: u64,
    pub queries: u64,
}

/// `⌈1 + 4/ε⌉`, tolerant of float noise in `4/ε`.
pub fn radius_multiplier(epsilon: f64) -> u64 {
    (1.0 + 4.0 / epsilon - 1e-9).ceil() as u64
}

pub struct ApspOracle {
    g: DecrementalGraph,
    epsilon: f64,
    b: u64,
    cover: LayeredCover,
    trees: Vec<BTreeMap<VertexId, EsTree>>,
    queries: AtomicU64,
}

impl ApspOracle {
    pub fn build(g: DecrementalGraph, epsilon: f64) -> Result<ApspOracle, ApspError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ApspError::BadEpsilon(epsilon));
        }
        let b = radius_multiplier(epsilon);
        let cover = LayeredCover::build(&g, None);
        let mut oracle = ApspOracle {
            trees: vec![BTreeMap::new(); cover.top_layer() + 1],
            g,
            epsilon,
            b,
            cover,
            queries: AtomicU64::new(0),
        };
        for j in 0..=oracle.cover.top_layer() {
            let centers: Vec<VertexId> = oracle.cover.centers(j).iter().copied().collect();
            for c in centers {
                oracle.add_tree(j, c);
            }
        }
        Ok(oracle)
    }

    fn depth(&self, j: usize) -> Dist {
        (self.b << j).min(self.g.n() as Dist)
    }

    fn add_tree(&mut self, j: usize, c: VertexId) {
        let t = EsTree::build(&self.g, c, self.depth(j), None, None).expect("no partition");
        self.trees[j].insert(c, t);
    }

    pub fn graph(&self) -> &DecrementalGraph {
        &self.g
    }

    pub fn cover(&self) -> &LayeredCover {
        &self.cover
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn delete(&mut self, e: Edge) -> Result<DeletionReport, ApspError> {
        let report = self.g.delete_edge(e)?;
        let star = report.applied_to_star.then_some(report.edge);
        let update = self.cover.notify_delete(&self.g, star);
        for layer in &mut self.trees {
            for t in layer.values_mut() {
                t.notify_delete(&self.g, star);
            }
        }
        for (j, c) in update.promotions {
            self.add_tree(j, c);
        }
        Ok(report)
    }

    /// Per layer, whether the pivot of `u` reaches `v` within the layer depth.
    pub fn feasible_layers(&self, u: VertexId, v: VertexId) -> Vec<bool> {
        (0..=self.cover.top_layer()).map(|j| self.feasible(j, u, v)).collect()
    }

    fn feasible(&self, j: usize, u: VertexId, v: VertexId) -> bool {
        self.cover
            .pivot(j, u)
            .is_some_and(|p| self.trees[j][&p].contains(v))
    }

    fn first_feasible(&self, u: VertexId, v: VertexId) -> usize {
        let (mut lo, mut hi) = (0, self.cover.top_layer());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.feasible(mid, u, v) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }

    pub fn query(&self, u: VertexId, v: VertexId) -> Dist {
        self.queries.fetch_add(1, Ordering::Relaxed);
        if u == v {
            return 0;
        }
        if !self.g.conn(u, v) {
            return INF;
        }
        if self.g.in_g(Edge::new(u, v)) {
            return 1;
        }
        let j = self.first_feasible(u, v);
        let p = self.cover.pivot(j, u).expect("plain cover pivots exist");
        let t = &self.trees[j][&p];
        t.level(u) + t.level(v)
    }

    /// A simple path of `G` no longer than `query(u, v)`.
    pub fn query_path(&self, u: VertexId, v: VertexId) -> Result<Vec<VertexId>, ApspError> {
        if !self.g.conn(u, v) {
            return Err(ApspError::Disconnected(u, v));
        }
        if u == v {
            return Ok(vec![u]);
        }
        if self.g.in_g(Edge::new(u, v)) {
            return Ok(vec![u, v]);
        }
        let j = self.first_feasible(u, v);
        let p = self.cover.pivot(j, u).expect("plain cover pivots exist");
        let t = &self.trees[j][&p];
        let pu = t.extract_path(&self.g, u).expect("pivot tree holds u");
        let pv = t.extract_path(&self.g, v).expect("feasible layer holds v");
        // the tree path between u and v is simple, so it cannot leave the
        // G-component of u through a skipped edge and come back
        let shared = pu.iter().zip(&pv).take_while(|(a, b)| a == b).count();
        let mut path: Vec<VertexId> = pu[shared - 1..].iter().rev().copied().collect();
        path.extend_from_slice(&pv[shared..]);
        Ok(path)
    }

    pub fn stats(&self) -> ApspStats {
        ApspStats {
            trees: self.trees.iter().map(|l| l.len()).sum(),
            tree_scans: self.trees.iter().flat_map(|l| l.values()).map(|t| t.stats().scans).sum(),
            cover_scans: self.cover.stats().tree_scans,
            queries: self.queries.load(Ordering::Relaxed),
        }
    }

    pub fn trees(&self) -> impl Iterator<Item = &EsTree> + '_ {
        self.trees.iter().flat_map(|l| l.values())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{path, random_connected, random_trace};
    use crate::oracle::{OracleSnapshot, UNREACHABLE};
    use proptest::prelude::*;

    #[test]
    fn multipliers() {
        assert_eq!(radius_multiplier(0.5), 9);
        assert_eq!(radius_multiplier(1.0 / 3.0), 13);
        assert_eq!(radius_multiplier(0.25), 17);
        assert_eq!(radius_multiplier(0.1), 41);
        assert!(ApspOracle::build(DecrementalGraph::new(2, &path(2)).unwrap(), 1.0).is_err());
    }

    #[test]
    fn basic_queries() {
        let mut o = ApspOracle::build(DecrementalGraph::new(3, &path(3)).unwrap(), 0.5).unwrap();
        assert_eq!(o.query(1, 1), 0);
        assert_eq!(o.query(0, 2), 2);
        o.delete(Edge::new(0, 1)).unwrap();
        assert_eq!(o.query(0, 2), INF);
        assert!(matches!(o.query_path(0, 2), Err(ApspError::Disconnected(0, 2))));
        assert_eq!(o.query_path(2, 1).unwrap(), vec![2, 1]);
    }

    #[test]
    fn path_graph_is_covered() {
        let o = ApspOracle::build(DecrementalGraph::new(10, &path(10)).unwrap(), 0.5).unwrap();
        for j in 0..=o.cover().top_layer() {
            for v in 0..10 {
                assert!(o.cover().pivot_dist(j, v).unwrap() <= 1 << j);
            }
        }
    }

    pub(crate) fn check_all_pairs(o: &ApspOracle, snap: &OracleSnapshot) {
        let n = snap.n;
        for u in 0..n {
            let d = snap.bfs_g(u);
            for v in 0..n {
                let est = o.query(u, v);
                if d[v] == UNREACHABLE {
                    assert_eq!(est, INF);
                    continue;
                }
                assert!(est >= d[v], "underestimate {u}-{v}");
                assert!(est as f64 <= (1.0 + o.epsilon()) * d[v] as f64 + 1e-9, "stretch {u}-{v}");
                let p = o.query_path(u, v).unwrap();
                assert!(p.len() as u64 - 1 <= est);
                assert_eq!(p[0], u);
                assert_eq!(*p.last().unwrap(), v);
                let distinct: std::collections::BTreeSet<_> = p.iter().collect();
                assert_eq!(distinct.len(), p.len());
                for w in p.windows(2) {
                    assert!(o.graph().in_g(Edge::new(w[0], w[1])));
                }
                let f = o.feasible_layers(u, v);
                for w in f.windows(2) {
                    assert!(!w[0] || w[1], "feasibility not monotone for {u}-{v}");
                }
            }
        }
    }

    #[test]
    fn random_replay() {
        let edges = random_connected(21, 30, 75).unwrap();
        let trace = random_trace(21, &edges, 60).unwrap();
        let mut o = ApspOracle::build(DecrementalGraph::new(30, &edges).unwrap(), 0.25).unwrap();
        check_all_pairs(&o, &OracleSnapshot::capture(o.graph()));
        for e in trace {
            o.delete(e).unwrap();
            check_all_pairs(&o, &OracleSnapshot::capture(o.graph()));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn sandwich_and_paths(seed in 0u64..10_000, inv in prop::sample::select(vec![2u64, 4, 10])) {
            let n = 24;
            let edges = random_connected(seed, n, 50).unwrap();
            let trace = random_trace(seed, &edges, 40).unwrap();
            let mut o = ApspOracle::build(DecrementalGraph::new(n, &edges).unwrap(), 1.0 / inv as f64).unwrap();
            for e in trace {
                o.delete(e).unwrap();
                check_all_pairs(&o, &OracleSnapshot::capture(o.graph()));
            }
        }
    }
}
