//! Near-heavy / near-light split of the vertices and the connected components
//! of `G*` induced on the near-heavy side.
//!
//! A vertex turns near-light for good once its cover pivot exists and that
//! pivot's ball of radius `r + 2τ` is `μ`-light.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use serde::Serialize;

use crate::cover::{floor_log2, LayeredCover};
use crate::es_tree::EsTree;
use crate::graph::{split_search, DecrementalGraph, Dist, Edge, Split, VertexId};

pub type ComponentId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum HlEvent {
    Transition { v: VertexId },
    /// `moved` left component `from` and now forms component `to`.
    Split { from: ComponentId, to: ComponentId, moved: Vec<VertexId> },
    Removed { v: VertexId, component: ComponentId },
}

/// `8(r + τ)m / μ`.
pub fn contraction_error_bound(mu: u64, r: u64, tau: u64, m: u64) -> Ratio<u64> {
    assert!(mu > 0, "mu must be positive");
    Ratio::new(8 * (r + tau) * m, mu)
}

/// Connected components of `G*` restricted to a shrinking vertex set.
#[derive(Clone, Debug)]
pub struct ComponentTracker {
    component: Vec<Option<ComponentId>>,
    members: BTreeMap<ComponentId, BTreeSet<VertexId>>,
    next_id: ComponentId,
    splits: u64,
}

impl ComponentTracker {
    pub fn new(g: &DecrementalGraph, vertices: &BTreeSet<VertexId>) -> ComponentTracker {
        let mut t = ComponentTracker {
            component: vec![None; g.n()],
            members: BTreeMap::new(),
            next_id: 0,
            splits: 0,
        };
        for &s in vertices {
            if t.component[s].is_some() {
                continue;
            }
            let id = t.next_id;
            t.next_id += 1;
            let mut set = BTreeSet::from([s]);
            t.component[s] = Some(id);
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for y in g.star_neighbors(x) {
                    if vertices.contains(&y) && t.component[y].is_none() {
                        t.component[y] = Some(id);
                        set.insert(y);
                        stack.push(y);
                    }
                }
            }
            t.members.insert(id, set);
        }
        t
    }

    pub fn component_of(&self, v: VertexId) -> Option<ComponentId> {
        self.component[v]
    }

    pub fn components(&self) -> &BTreeMap<ComponentId, BTreeSet<VertexId>> {
        &self.members
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.component[v].is_some()
    }

    pub fn splits(&self) -> u64 {
        self.splits
    }

    fn separate(&mut self, g: &DecrementalGraph, a: VertexId, b: VertexId) -> Option<HlEvent> {
        let id = self.component[a]?;
        if self.component[b] != Some(id) {
            return None;
        }
        let comp = &self.component;
        let result = split_search(a, b, |x| {
            g.star_neighbors(x)
                .filter(|&y| comp[y] == Some(id))
                .collect::<Vec<_>>()
        });
        let Split::Split { smaller } = result else { return None };
        let to = self.next_id;
        self.next_id += 1;
        let set = self.members.get_mut(&id).expect("live component");
        for &x in &smaller {
            set.remove(&x);
            self.component[x] = Some(to);
        }
        self.members.insert(to, smaller.iter().copied().collect());
        self.splits += 1;
        Some(HlEvent::Split { from: id, to, moved: smaller })
    }

    /// `e` has just left `G*`.
    pub fn delete_edge(&mut self, g: &DecrementalGraph, e: Edge) -> Vec<HlEvent> {
        self.separate(g, e.u, e.v).into_iter().collect()
    }

    pub fn remove_vertex(&mut self, g: &DecrementalGraph, v: VertexId) -> Vec<HlEvent> {
        let Some(id) = self.component[v] else { return Vec::new() };
        self.component[v] = None;
        let set = self.members.get_mut(&id).expect("live component");
        set.remove(&v);
        if set.is_empty() {
            self.members.remove(&id);
        }
        let mut events = vec![HlEvent::Removed { v, component: id }];
        let mut around: Vec<VertexId> = g
            .star_neighbors(v)
            .filter(|&y| self.component[y] == Some(id))
            .collect();
        around.sort_unstable();
        let Some((&first, rest)) = around.split_first() else { return events };
        let mut anchor = first;
        for &y in rest {
            if self.component[y] != Some(id) {
                continue;
            }
            if let Some(ev) = self.separate(g, anchor, y) {
                if let HlEvent::Split { moved, .. } = &ev {
                    if moved.binary_search(&anchor).is_ok() {
                        anchor = y;
                    }
                }
                events.push(ev);
            }
        }
        events
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct HeavyLightStats {
    pub transitions: u64,
    pub splits: u64,
    pub near_heavy: usize,
    /// Component sizes, largest first.
    pub component_sizes: Vec<usize>,
}

pub struct HeavyLightState {
    mu: u64,
    r: Dist,
    tau: u64,
    layer: usize,
    near_light: Vec<bool>,
    pivot_trees: BTreeMap<VertexId, EsTree>,
    tracker: ComponentTracker,
    transitions: u64,
}

impl HeavyLightState {
    /// The cover must carry the same finite `μ`.
    pub fn build(g: &DecrementalGraph, cover: &LayeredCover, r: Dist, tau: u64) -> HeavyLightState {
        let mu = cover.mu().expect("a light cover needs a finite mu");
        let layer = floor_log2(tau).min(cover.top_layer());
        let mut state = HeavyLightState {
            mu,
            r,
            tau,
            layer,
            near_light: vec![false; g.n()],
            pivot_trees: BTreeMap::new(),
            tracker: ComponentTracker::new(g, &BTreeSet::new()),
            transitions: 0,
        };
        for v in 0..g.n() {
            if state.pivot_light(g, cover, v) {
                state.near_light[v] = true;
            }
        }
        let heavy: BTreeSet<VertexId> = (0..g.n()).filter(|&v| !state.near_light[v]).collect();
        state.tracker = ComponentTracker::new(g, &heavy);
        state
    }

    fn pivot_light(&mut self, g: &DecrementalGraph, cover: &LayeredCover, v: VertexId) -> bool {
        let Some(p) = cover.pivot(self.layer, v) else { return false };
        let depth = self.r + 2 * self.tau;
        self.pivot_trees
            .entry(p)
            .or_insert_with(|| EsTree::build(g, p, depth, Some(self.mu), None).expect("no partition"))
            .is_light()
    }

    pub fn mu(&self) -> u64 {
        self.mu
    }

    pub fn r(&self) -> Dist {
        self.r
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn is_near_light(&self, v: VertexId) -> bool {
        self.near_light[v]
    }

    pub fn near_heavy(&self) -> BTreeSet<VertexId> {
        (0..self.near_light.len()).filter(|&v| !self.near_light[v]).collect()
    }

    pub fn tracker(&self) -> &ComponentTracker {
        &self.tracker
    }

    pub fn component_of(&self, v: VertexId) -> Option<ComponentId> {
        self.tracker.component_of(v)
    }

    pub fn contraction_error_bound(&self, m: u64) -> Ratio<u64> {
        contraction_error_bound(self.mu, self.r, self.tau, m)
    }

    /// Runs once per deletion after the cover has been repaired. Edge events
    /// come first, then transitions in ascending vertex order.
    pub fn notify_stage(
        &mut self,
        g: &DecrementalGraph,
        cover: &LayeredCover,
        e: Option<Edge>,
    ) -> Vec<HlEvent> {
        let mut events = Vec::new();
        if let Some(e) = e {
            for t in self.pivot_trees.values_mut() {
                t.notify_delete(g, Some(e));
            }
            events.extend(self.tracker.delete_edge(g, e));
        }
        for v in 0..g.n() {
            if !self.near_light[v] && self.pivot_light(g, cover, v) {
                self.near_light[v] = true;
                self.transitions += 1;
                events.push(HlEvent::Transition { v });
                events.extend(self.tracker.remove_vertex(g, v));
            }
        }
        events
    }

    pub fn stats(&self) -> HeavyLightStats {
        let mut sizes: Vec<usize> = self.tracker.members.values().map(|s| s.len()).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        HeavyLightStats {
            transitions: self.transitions,
            splits: self.tracker.splits(),
            near_heavy: self.near_light.iter().filter(|&&l| !l).count(),
            component_sizes: sizes,
        }
    }

    pub fn tree_scans(&self) -> u64 {
        self.pivot_trees.values().map(|t| t.stats().scans).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{clique, path, random_connected, random_trace};
    use crate::oracle::{OracleSnapshot, UNREACHABLE};
    use proptest::prelude::*;

    fn apply(g: &mut DecrementalGraph, e: Edge) -> Option<Edge> {
        let r = g.delete_edge(e).unwrap();
        r.applied_to_star.then_some(r.edge)
    }

    fn sorted_components(t: &ComponentTracker) -> Vec<Vec<VertexId>> {
        let mut c: Vec<Vec<VertexId>> = t
            .components()
            .values()
            .map(|s| s.iter().copied().collect())
            .collect();
        c.sort();
        c
    }

    #[test]
    fn bound_arithmetic() {
        assert_eq!(contraction_error_bound(50, 4, 1, 100), Ratio::from_integer(80));
        assert!(contraction_error_bound(8 * 5 * 10 + 1, 4, 1, 10) < Ratio::from_integer(1));
    }

    #[test]
    fn sparse_graph_is_all_light() {
        let g = DecrementalGraph::new(6, &path(6)).unwrap();
        let cover = LayeredCover::build(&g, Some(1000));
        let hl = HeavyLightState::build(&g, &cover, 2, 1);
        assert!(hl.near_heavy().is_empty());
        assert!(hl.tracker().components().is_empty());
    }

    #[test]
    fn zero_mu_is_all_heavy() {
        let g = DecrementalGraph::new(6, &path(6)).unwrap();
        let cover = LayeredCover::build(&g, Some(0));
        let hl = HeavyLightState::build(&g, &cover, 2, 1);
        assert_eq!(hl.near_heavy().len(), 6);
        assert_eq!(sorted_components(hl.tracker()), vec![(0..6).collect::<Vec<_>>()]);
    }

    #[test]
    fn clique_with_tail() {
        let mut edges = clique(&(0..10).collect::<Vec<_>>());
        edges.extend((9..20).map(|i| Edge::new(i, i + 1)));
        let g = DecrementalGraph::new(21, &edges).unwrap();
        let cover = LayeredCover::build(&g, Some(12));
        let hl = HeavyLightState::build(&g, &cover, 2, 1);
        let snap = OracleSnapshot::capture(&g);
        for v in 0..10 {
            assert!(!hl.is_near_light(v), "clique vertex {v}");
        }
        for v in 0..21 {
            if !snap.is_light(v, Some(12), 2) {
                assert!(!hl.is_near_light(v));
            }
        }
        assert_eq!(hl.tracker().components().len(), 1);
        let comp = sorted_components(hl.tracker()).remove(0);
        assert!(comp.starts_with(&(0..10).collect::<Vec<_>>()));
        assert!(hl.is_near_light(20));
    }

    #[test]
    fn bridge_split_reports_smaller_side() {
        // triangle {0,1,2} - bridge (2,3) - five-cycle {3..7}, all tracked
        let mut edges = clique(&[0, 1, 2]);
        edges.push(Edge::new(2, 3));
        edges.extend([Edge::new(3, 4), Edge::new(4, 5), Edge::new(5, 6), Edge::new(6, 7), Edge::new(7, 3)]);
        edges.push(Edge::new(0, 4));
        let mut g = DecrementalGraph::new(8, &edges).unwrap();
        let all: BTreeSet<VertexId> = (0..8).collect();
        let mut t = ComponentTracker::new(&g, &all);
        let e = apply(&mut g, Edge::new(0, 4));
        assert!(t.delete_edge(&g, e.unwrap()).is_empty());
        let e = apply(&mut g, Edge::new(2, 3));
        assert_eq!(e, None);
        // G* keeps the bridge, so the tracker sees no change; removing vertex 2
        // from the tracked set then splits {0,1} off
        let ev = t.remove_vertex(&g, 2);
        assert_eq!(
            ev,
            vec![
                HlEvent::Removed { v: 2, component: 0 },
                HlEvent::Split { from: 0, to: 1, moved: vec![0, 1] }
            ]
        );
    }

    #[test]
    fn vertex_removal_can_split_three_ways() {
        // star centered at 0 with arms {1,2}, {3}, {4,5,6}
        let edges = vec![
            Edge::new(0, 1),
            Edge::new(1, 2),
            Edge::new(0, 3),
            Edge::new(0, 4),
            Edge::new(4, 5),
            Edge::new(5, 6),
        ];
        let g = DecrementalGraph::new(7, &edges).unwrap();
        let mut t = ComponentTracker::new(&g, &(0..7).collect());
        let ev = t.remove_vertex(&g, 0);
        assert_eq!(ev.len(), 3);
        assert_eq!(
            sorted_components(&t),
            vec![vec![1, 2], vec![3], vec![4, 5, 6]]
        );
        for e in &ev[1..] {
            if let HlEvent::Split { moved, .. } = e {
                assert!(moved.len() <= 3);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn decomposition_invariants(seed in 0u64..10_000, mu in 4u64..40, r in 1u64..4, tau in 1u64..3) {
            let n = 30;
            let edges = random_connected(seed, n, 75).unwrap();
            let trace = random_trace(seed, &edges, 60).unwrap();
            let mut g = DecrementalGraph::new(n, &edges).unwrap();
            let mut cover = LayeredCover::build(&g, Some(mu));
            let mut hl = HeavyLightState::build(&g, &cover, r, tau);
            let mut changes = vec![0u32; n];
            for e in trace {
                let was_light: Vec<bool> = (0..n).map(|v| hl.is_near_light(v)).collect();
                let e = apply(&mut g, e);
                cover.notify_delete(&g, e);
                let ev = hl.notify_stage(&g, &cover, e);
                let snap = OracleSnapshot::capture(&g);
                let heavy = hl.near_heavy();
                for v in 0..n {
                    prop_assert!(!was_light[v] || hl.is_near_light(v));
                    if !snap.is_light(v, Some(mu), r) {
                        prop_assert!(heavy.contains(&v), "heavy vertex {} is near-light", v);
                    }
                }
                prop_assert_eq!(sorted_components(hl.tracker()), snap.induced_components(&heavy));
                for x in &ev {
                    if let HlEvent::Split { moved, .. } = x {
                        prop_assert!(!moved.is_empty());
                        for &v in moved {
                            changes[v] += 1;
                        }
                    }
                }
                if heavy.len() < n {
                    let bound = hl.contraction_error_bound(g.m_star() as u64);
                    let contracted = snap.contracted_all_pairs(&heavy);
                    let exact = snap.all_pairs_star();
                    for u in 0..n {
                        for v in 0..n {
                            prop_assert!(exact[u][v] != UNREACHABLE);
                            let gap = exact[u][v] - contracted[u][v];
                            prop_assert!(Ratio::from_integer(gap) <= bound);
                        }
                    }
                }
            }
            let cap = (n as f64).log2().ceil() as u32;
            for c in changes {
                prop_assert!(c <= cap);
            }
        }
    }
}
