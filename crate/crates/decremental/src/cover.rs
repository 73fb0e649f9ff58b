//! Layered covers of `G*`.
//!
//! Layer `j` holds a center set `C_j` with `C_0 = V` and `C_{j+1} ⊆ C_j`. Every
//! center of `C_j` runs a pivot tree of depth `2^j`; the tree marks the members
//! of `C_{j+1}` inside its ball. A center with no mark is eligible for
//! promotion. With a finite `μ` it must additionally have a `(μ, 2^{j+1})`-light
//! ball, watched by a second tree.
//!
//! Radii are powers of two internally. A cover for base `τ` reads layer
//! `⌊i·lg τ⌋` for its `i`-th layer.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::es_tree::{EsEvent, EsStats, EsTree};
use crate::graph::{DecrementalGraph, Dist, Edge, VertexId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PivotChange {
    pub layer: usize,
    pub vertex: VertexId,
    pub old: Option<VertexId>,
    pub new: Option<VertexId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CoverUpdate {
    pub pivot_changes: Vec<PivotChange>,
    /// `(layer, vertex)`: the vertex joined `C_layer`.
    pub promotions: Vec<(usize, VertexId)>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CoverStats {
    pub centers_per_layer: Vec<usize>,
    pub promotions: u64,
    pub pivot_changes: u64,
    pub tree_scans: u64,
}

pub fn floor_log2(x: u64) -> usize {
    assert!(x > 0);
    (63 - x.leading_zeros()) as usize
}

pub struct LayeredCover {
    n: usize,
    mu: Option<u64>,
    top: usize,
    layers: Vec<BTreeSet<VertexId>>,
    pivot_trees: Vec<BTreeMap<VertexId, EsTree>>,
    light_trees: Vec<BTreeMap<VertexId, EsTree>>,
    candidates: Vec<Vec<BTreeSet<(Dist, VertexId)>>>,
    promotions: u64,
    pivot_changes: u64,
}

impl LayeredCover {
    pub fn build(g: &DecrementalGraph, mu: Option<u64>) -> LayeredCover {
        let n = g.n();
        let top = if n <= 1 { 0 } else { floor_log2(n as u64) };
        let mut cover = LayeredCover {
            n,
            mu,
            top,
            layers: vec![BTreeSet::new(); top + 1],
            pivot_trees: vec![BTreeMap::new(); top + 1],
            light_trees: vec![BTreeMap::new(); top + 1],
            candidates: vec![vec![BTreeSet::new(); n]; top + 1],
            promotions: 0,
            pivot_changes: 0,
        };
        for v in 0..n {
            cover.add_center(g, 0, v);
        }
        let mut scratch = CoverUpdate::default();
        cover.promote_all(g, &mut scratch);
        cover.promotions = 0;
        cover
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> Option<u64> {
        self.mu
    }

    /// Index of the last layer, `⌊log2 n⌋`.
    pub fn top_layer(&self) -> usize {
        self.top
    }

    pub fn radius(&self, j: usize) -> Dist {
        1 << j
    }

    pub fn centers(&self, j: usize) -> &BTreeSet<VertexId> {
        &self.layers[j]
    }

    pub fn is_center(&self, j: usize, v: VertexId) -> bool {
        self.layers[j].contains(&v)
    }

    /// The closest center of `C_j` whose light pivot tree reaches `v`.
    pub fn pivot(&self, j: usize, v: VertexId) -> Option<VertexId> {
        self.candidates[j][v].first().map(|&(_, c)| c)
    }

    pub fn pivot_dist(&self, j: usize, v: VertexId) -> Option<Dist> {
        self.candidates[j][v].first().map(|&(d, _)| d)
    }

    /// Internal layer serving radius `τ^i`.
    pub fn layer_for(tau: u64, i: u32) -> usize {
        floor_log2(tau.pow(i))
    }

    pub fn pivot_tree(&self, j: usize, c: VertexId) -> Option<&EsTree> {
        self.pivot_trees[j].get(&c)
    }

    pub fn light_tree(&self, j: usize, c: VertexId) -> Option<&EsTree> {
        self.light_trees[j].get(&c)
    }

    pub fn stats(&self) -> CoverStats {
        let mut scans = 0;
        for layer in self.pivot_trees.iter().chain(&self.light_trees) {
            for t in layer.values() {
                scans += t.stats().scans;
            }
        }
        CoverStats {
            centers_per_layer: self.layers.iter().map(|l| l.len()).collect(),
            promotions: self.promotions,
            pivot_changes: self.pivot_changes,
            tree_scans: scans,
        }
    }

    pub fn tree_stats(&self) -> impl Iterator<Item = (usize, EsStats)> + '_ {
        self.pivot_trees
            .iter()
            .chain(&self.light_trees)
            .flat_map(|l| l.values().map(|t| (t.depth() as usize, t.stats())))
    }

    fn add_candidates_from(&mut self, j: usize, c: VertexId) {
        let tree = &self.pivot_trees[j][&c];
        for (v, &l) in tree.levels().iter().enumerate() {
            if l <= tree.depth() {
                self.candidates[j][v].insert((l, c));
            }
        }
    }

    fn add_center(&mut self, g: &DecrementalGraph, j: usize, c: VertexId) {
        self.layers[j].insert(c);
        let mut tree = EsTree::build(g, c, self.radius(j), self.mu, None).expect("no partition");
        if j < self.top {
            for &x in &self.layers[j + 1] {
                if tree.contains(x) {
                    tree.mark(x).expect("inside ball");
                }
            }
            if self.mu.is_some() {
                let light = EsTree::build(g, c, self.radius(j + 1), self.mu, None).expect("no partition");
                self.light_trees[j].insert(c, light);
            }
        }
        let light = tree.is_light();
        self.pivot_trees[j].insert(c, tree);
        if light {
            self.add_candidates_from(j, c);
        }
    }

    fn eligible(&self, j: usize, c: VertexId) -> bool {
        !self.pivot_trees[j][&c].has_marked()
            && self.light_trees[j].get(&c).is_none_or(|t| t.is_light())
    }

    fn promote_all(&mut self, g: &DecrementalGraph, update: &mut CoverUpdate) {
        for j in 0..self.top {
            let waiting: Vec<VertexId> = self.layers[j]
                .difference(&self.layers[j + 1])
                .copied()
                .collect();
            for c in waiting {
                if !self.eligible(j, c) {
                    continue;
                }
                for t in self.pivot_trees[j].values_mut() {
                    if t.contains(c) {
                        t.mark(c).expect("inside ball");
                    }
                }
                self.add_center(g, j + 1, c);
                self.promotions += 1;
                update.promotions.push((j + 1, c));
            }
        }
    }

    fn pivot_table(&self) -> Vec<Vec<Option<VertexId>>> {
        (0..=self.top)
            .map(|j| (0..self.n).map(|v| self.pivot(j, v)).collect())
            .collect()
    }

    /// Advances every tree past one deletion, then promotes newly eligible
    /// centers layer by layer in ascending vertex order.
    pub fn notify_delete(&mut self, g: &DecrementalGraph, e: Option<Edge>) -> CoverUpdate {
        let mut update = CoverUpdate::default();
        let Some(e) = e else { return update };
        let before = self.pivot_table();
        for j in 0..=self.top {
            let centers: Vec<VertexId> = self.layers[j].iter().copied().collect();
            for c in centers {
                let tree = self.pivot_trees[j].get_mut(&c).expect("tree per center");
                let was_light = tree.is_light();
                for ev in tree.notify_delete(g, Some(e)) {
                    match ev {
                        EsEvent::LevelIncrease { v, old, new } if was_light => {
                            self.candidates[j][v].remove(&(old, c));
                            self.candidates[j][v].insert((new, c));
                        }
                        EsEvent::Expelled { v, old } if was_light => {
                            self.candidates[j][v].remove(&(old, c));
                        }
                        EsEvent::HeavyToLight => self.add_candidates_from(j, c),
                        _ => {}
                    }
                }
            }
            for t in self.light_trees[j].values_mut() {
                t.notify_delete(g, Some(e));
            }
        }
        self.promote_all(g, &mut update);
        for (j, row) in before.into_iter().enumerate() {
            for (v, old) in row.into_iter().enumerate() {
                let new = self.pivot(j, v);
                if new != old {
                    update.pivot_changes.push(PivotChange { layer: j, vertex: v, old, new });
                }
            }
        }
        self.pivot_changes += update.pivot_changes.len() as u64;
        update
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{path, random_connected, random_trace};
    use crate::oracle::OracleSnapshot;
    use proptest::prelude::*;

    fn apply(g: &mut DecrementalGraph, e: Edge) -> Option<Edge> {
        let r = g.delete_edge(e).unwrap();
        r.applied_to_star.then_some(r.edge)
    }

    /// Checks size, covering radius and pivot lightness against BFS.
    fn check(cover: &LayeredCover, snap: &OracleSnapshot) {
        let n = snap.n;
        let dist = snap.all_pairs_star();
        for j in 0..=cover.top_layer() {
            let r = cover.radius(j);
            assert!(cover.centers(j).len() as u64 * r <= 8 * n as u64, "layer {j} too large");
            if j > 0 {
                assert!(cover.centers(j).is_subset(cover.centers(j - 1)));
            }
            for v in 0..n {
                let light = snap.is_light(v, cover.mu(), 2 * r);
                match cover.pivot(j, v) {
                    Some(p) => {
                        assert!(cover.is_center(j, p));
                        assert_eq!(Some(dist[v][p]), cover.pivot_dist(j, v));
                        assert!(dist[v][p] <= r);
                        let best = cover
                            .centers(j)
                            .iter()
                            .filter(|&&c| snap.is_light(c, cover.mu(), r))
                            .map(|&c| dist[v][c])
                            .min()
                            .unwrap();
                        assert_eq!(dist[v][p], best);
                        if light {
                            assert!(snap.is_light(p, cover.mu(), r), "pivot of {v} at {j} heavy");
                        }
                    }
                    None => assert!(!light, "light vertex {v} lacks a pivot at layer {j}"),
                }
            }
        }
    }

    #[test]
    fn path_cover() {
        let g = DecrementalGraph::new(8, &path(8)).unwrap();
        let cover = LayeredCover::build(&g, None);
        assert_eq!(cover.centers(0).len(), 8);
        assert_eq!(cover.top_layer(), 3);
        assert!(cover.centers(1).len() <= 32);
        check(&cover, &OracleSnapshot::capture(&g));
        let dist = OracleSnapshot::capture(&g).all_pairs_star();
        for j in 1..=3 {
            let c: Vec<_> = cover.centers(j).iter().copied().collect();
            for (i, &a) in c.iter().enumerate() {
                for &b in &c[i + 1..] {
                    assert!(dist[a][b] > 1 << (j - 1));
                }
            }
        }
    }

    #[test]
    fn single_layer() {
        let g = DecrementalGraph::new(1, &[]).unwrap();
        let cover = LayeredCover::build(&g, None);
        assert_eq!(cover.top_layer(), 0);
        assert_eq!(cover.pivot(0, 0), Some(0));
    }

    #[test]
    fn tau_layer_mapping() {
        assert_eq!(LayeredCover::layer_for(2, 3), 3);
        assert_eq!(LayeredCover::layer_for(3, 2), 3);
        assert_eq!(LayeredCover::layer_for(5, 1), 2);
    }

    #[test]
    fn light_cover_on_random_graph() {
        let edges = random_connected(4, 60, 180).unwrap();
        let g = DecrementalGraph::new(60, &edges).unwrap();
        let cover = LayeredCover::build(&g, Some(20));
        check(&cover, &OracleSnapshot::capture(&g));
    }

    #[test]
    fn pivot_changes_are_reported() {
        let edges = random_connected(9, 40, 90).unwrap();
        let trace = random_trace(9, &edges, 50).unwrap();
        let mut g = DecrementalGraph::new(40, &edges).unwrap();
        let mut cover = LayeredCover::build(&g, None);
        for e in trace {
            let before: Vec<Vec<Option<VertexId>>> = (0..=cover.top_layer())
                .map(|j| (0..40).map(|v| cover.pivot(j, v)).collect())
                .collect();
            let e = apply(&mut g, e);
            let up = cover.notify_delete(&g, e);
            let mut want = Vec::new();
            for (j, row) in before.iter().enumerate() {
                for (v, &old) in row.iter().enumerate() {
                    let new = cover.pivot(j, v);
                    if old != new {
                        want.push(PivotChange { layer: j, vertex: v, old, new });
                    }
                }
            }
            assert_eq!(up.pivot_changes, want);
            if e.is_none() {
                assert!(up.promotions.is_empty());
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn invariants_hold_under_deletions(seed in 0u64..10_000, mu in prop::option::of(8u64..80)) {
            let n = 36;
            let edges = random_connected(seed, n, 80).unwrap();
            let trace = random_trace(seed, &edges, 60).unwrap();
            let mut g = DecrementalGraph::new(n, &edges).unwrap();
            let mut cover = LayeredCover::build(&g, mu);
            check(&cover, &OracleSnapshot::capture(&g));
            for e in trace {
                let before: Vec<BTreeSet<VertexId>> =
                    (0..=cover.top_layer()).map(|j| cover.centers(j).clone()).collect();
                let e = apply(&mut g, e);
                let up = cover.notify_delete(&g, e);
                let snap = OracleSnapshot::capture(&g);
                check(&cover, &snap);
                for (j, old) in before.iter().enumerate() {
                    prop_assert!(old.is_subset(cover.centers(j)));
                }
                for &(j, c) in &up.promotions {
                    let d = snap.bfs_all(c);
                    for &other in cover.centers(j) {
                        prop_assert!(other == c || d[other] > 1 << (j - 1));
                    }
                }
            }
        }
    }
}
