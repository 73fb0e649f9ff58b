//! The weighted emulator seen from one source `s`.
//!
//! Weights are counted in quanta of `ετ = τ/L`. A `G*` distance `d` becomes
//! `⌈d·L/τ⌉` quanta. There are three edge kinds:
//! an active center of level `i` to every vertex of its cluster;
//! a component vertex to each member of its near-heavy component, one quantum;
//! `s` to every vertex within `2τL^{k+1}`.
//!
//! Each stage the desired edge set is recomputed and diffed against the
//! current one, giving a batch of removals, insertions and weight increases.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::clustering::{ClusterEvent, ClusterState};
use crate::es_tree::EsTree;
use crate::graph::{DecrementalGraph, Dist, Edge, VertexId};
use crate::heavy_light::{ComponentId, HeavyLightState, HlEvent};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum EdgeKind {
    Cluster { level: usize },
    Component,
    Source,
}

/// One emulator edge instance. A re-inserted pair gets a fresh id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EmEdge {
    pub id: u64,
    pub owner: usize,
    pub other: usize,
    /// In quanta.
    pub weight: i64,
    pub kind: EdgeKind,
    pub inserted_at: u64,
    /// The endpoint that pays for scanning this edge.
    pub assigned: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ChangeBatch {
    pub removed: Vec<EmEdge>,
    pub inserted: Vec<EmEdge>,
    /// Edges carrying their new weight.
    pub increased: Vec<EmEdge>,
}

impl ChangeBatch {
    pub fn is_empty(&self) -> bool {
        self.removed.is_empty() && self.inserted.is_empty() && self.increased.is_empty()
    }

    /// One change per line: `- id u v w`, `+ id u v w`, `^ id u v w`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (tag, list) in [('-', &self.removed), ('+', &self.inserted), ('^', &self.increased)] {
            for e in list {
                let _ = writeln!(out, "{tag} {} {} {} {}", e.id, e.owner, e.other, e.weight);
            }
        }
        out
    }
}

/// What the estimate tree needs to know about one stage besides edge changes.
#[derive(Clone, Debug, Default, Serialize)]
pub struct StageEvents {
    pub became_light: Vec<VertexId>,
    /// `(center, level, core)` for centers that joined an active set.
    pub joins: Vec<(VertexId, usize, Vec<VertexId>)>,
    /// `(center, core)` for every active center after the stage.
    pub active: Vec<(VertexId, Vec<VertexId>)>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EmulatorStats {
    pub vertices: usize,
    pub cluster_edges: usize,
    pub component_edges: usize,
    pub source_edges: usize,
    pub inserted: u64,
    pub removed: u64,
    pub increased: u64,
}

type Key = (EdgeKind, usize, usize);

pub struct Emulator {
    n: usize,
    source: VertexId,
    tau: u64,
    inv_eps: u64,
    k: u32,
    source_tree: EsTree,
    component_vertex: BTreeMap<ComponentId, usize>,
    vertex_count: usize,
    edges: BTreeMap<Key, EmEdge>,
    next_id: u64,
    stage: u64,
    inserted: u64,
    removed: u64,
    increased: u64,
}

impl Emulator {
    /// `hl` must use radius `4τL^{k+1}` and the same `τ` as `cs`.
    pub fn build(
        g: &DecrementalGraph,
        cs: &ClusterState,
        hl: &HeavyLightState,
        source: VertexId,
    ) -> Emulator {
        let (tau, inv_eps, k) = (cs.tau(), cs.inv_eps(), cs.k());
        debug_assert_eq!(hl.tau(), tau);
        let depth = (2 * tau * inv_eps.pow(k + 1)).min(g.n() as Dist);
        let source_tree = EsTree::build(g, source, depth, None, None).expect("no partition");
        let mut em = Emulator {
            n: g.n(),
            source,
            tau,
            inv_eps,
            k,
            source_tree,
            component_vertex: BTreeMap::new(),
            vertex_count: g.n(),
            edges: BTreeMap::new(),
            next_id: 0,
            stage: 0,
            inserted: 0,
            removed: 0,
            increased: 0,
        };
        em.refresh(cs, hl);
        em.inserted = 0;
        em
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn source(&self) -> VertexId {
        self.source
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn is_component_vertex(&self, x: usize) -> bool {
        x >= self.n
    }

    pub fn component_vertex(&self, c: ComponentId) -> Option<usize> {
        self.component_vertex.get(&c).copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = &EmEdge> + '_ {
        self.edges.values()
    }

    pub fn source_tree(&self) -> &EsTree {
        &self.source_tree
    }

    /// `⌈d·L/τ⌉`.
    pub fn quantize(&self, d: Dist) -> i64 {
        (d * self.inv_eps).div_ceil(self.tau) as i64
    }

    fn desired(&mut self, cs: &ClusterState, hl: &HeavyLightState) -> BTreeMap<Key, i64> {
        let mut want = BTreeMap::new();
        for i in 0..=self.k as usize {
            for &c in cs.active(i) {
                for v in cs.cluster(c).expect("active centers have a level") {
                    if v != c {
                        let d = cs.center_dist(c, v).expect("cluster inside level tree");
                        want.insert((EdgeKind::Cluster { level: i }, c, v), self.quantize(d));
                    }
                }
            }
        }
        for (&cid, members) in hl.tracker().components() {
            let next = &mut self.vertex_count;
            let x = *self.component_vertex.entry(cid).or_insert_with(|| {
                *next += 1;
                *next - 1
            });
            for &v in members {
                want.insert((EdgeKind::Component, x, v), 1);
            }
        }
        for v in self.source_tree.within(self.source_tree.depth()) {
            if v != self.source {
                let d = self.source_tree.level(v);
                want.insert((EdgeKind::Source, self.source, v), self.quantize(d));
            }
        }
        want
    }

    fn assign(&self, cs: &ClusterState, kind: EdgeKind, owner: usize, other: usize) -> usize {
        let active = |x: usize| x < self.n && cs.active_level(x).is_some();
        if active(owner) {
            owner
        } else if active(other) {
            other
        } else if kind == EdgeKind::Component {
            other
        } else {
            owner
        }
    }

    fn refresh(&mut self, cs: &ClusterState, hl: &HeavyLightState) -> ChangeBatch {
        let want = self.desired(cs, hl);
        let mut batch = ChangeBatch::default();
        let gone: Vec<Key> = self.edges.keys().filter(|k| !want.contains_key(k)).copied().collect();
        for key in gone {
            batch.removed.push(self.edges.remove(&key).expect("present"));
        }
        for (key, w) in want {
            match self.edges.get_mut(&key) {
                Some(e) if e.weight == w => {}
                Some(e) => {
                    assert!(w > e.weight, "emulator weights never drop");
                    e.weight = w;
                    batch.increased.push(e.clone());
                }
                None => {
                    let (kind, owner, other) = key;
                    let e = EmEdge {
                        id: self.next_id,
                        owner,
                        other,
                        weight: w,
                        kind,
                        inserted_at: self.stage,
                        assigned: self.assign(cs, kind, owner, other),
                    };
                    self.next_id += 1;
                    self.edges.insert(key, e.clone());
                    batch.inserted.push(e);
                }
            }
        }
        batch.removed.sort_by_key(|e| e.id);
        batch.inserted.sort_by_key(|e| e.id);
        batch.increased.sort_by_key(|e| e.id);
        self.removed += batch.removed.len() as u64;
        self.inserted += batch.inserted.len() as u64;
        self.increased += batch.increased.len() as u64;
        batch
    }

    /// Runs after cover, heavy/light split and clustering have all advanced.
    pub fn notify_stage(
        &mut self,
        g: &DecrementalGraph,
        cs: &ClusterState,
        hl: &HeavyLightState,
        e: Option<Edge>,
    ) -> ChangeBatch {
        self.stage = g.stage();
        self.source_tree.notify_delete(g, e);
        self.refresh(cs, hl)
    }

    /// Bundles this stage's near-light transitions and active-set joins.
    pub fn stage_events(
        cs: &ClusterState,
        hl_events: &[HlEvent],
        cluster_events: &[ClusterEvent],
    ) -> StageEvents {
        let mut out = StageEvents::default();
        for ev in hl_events {
            if let HlEvent::Transition { v } = ev {
                out.became_light.push(*v);
            }
        }
        for ev in cluster_events {
            if let ClusterEvent::Joined { c, level } = ev {
                if cs.active_level(*c) == Some(*level) {
                    out.joins.push((*c, *level, cs.core(*c).expect("active")));
                }
            }
        }
        for i in 0..=cs.k() as usize {
            for &c in cs.active(i) {
                out.active.push((c, cs.core(c).expect("active")));
            }
        }
        out
    }

    /// Exact shortest-path weights from `from`, in quanta.
    pub fn distances_from(&self, from: usize) -> Vec<i64> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for e in self.edges.values() {
            adj[e.owner].push((e.other, e.weight));
            adj[e.other].push((e.owner, e.weight));
        }
        let mut dist = vec![i64::MAX; self.vertex_count];
        dist[from] = 0;
        let mut heap = BinaryHeap::from([Reverse((0, from))]);
        while let Some(Reverse((d, x))) = heap.pop() {
            if d > dist[x] {
                continue;
            }
            for &(y, w) in &adj[x] {
                if d + w < dist[y] {
                    dist[y] = d + w;
                    heap.push(Reverse((d + w, y)));
                }
            }
        }
        dist
    }

    pub fn distance_in_emulator(&self, u: usize, v: usize) -> i64 {
        self.distances_from(u)[v]
    }

    pub fn stats(&self) -> EmulatorStats {
        let mut s = EmulatorStats {
            vertices: self.vertex_count,
            inserted: self.inserted,
            removed: self.removed,
            increased: self.increased,
            ..EmulatorStats::default()
        };
        for (kind, _, _) in self.edges.keys() {
            match kind {
                EdgeKind::Cluster { .. } => s.cluster_edges += 1,
                EdgeKind::Component => s.component_edges += 1,
                EdgeKind::Source => s.source_edges += 1,
            }
        }
        s
    }

    pub fn tree_scans(&self) -> u64 {
        self.source_tree.stats().scans
    }
}
