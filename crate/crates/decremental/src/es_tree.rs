//! Bounded-depth Even–Shiloach tree over `G*`.
//!
//! Levels stay exact for every vertex within the depth bound, heavy or not.
//! Each vertex keeps a cursor into its (stable) adjacency list; the entry under
//! the cursor is its tree parent. Cursors only move forward while the level is
//! unchanged and reset when the level rises, which gives the usual
//! `deg(v) * depth` scan budget per vertex.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{DecrementalGraph, Dist, Edge, VertexId, INF};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EsError {
    #[error("partition intervals must be sorted, contiguous and cover [0, {depth}]")]
    BadPartition { depth: Dist },
    #[error("vertex {0} is not within the tree's depth bound")]
    OutsideBall(VertexId),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum EsEvent {
    HeavyToLight,
    LevelIncrease { v: VertexId, old: Dist, new: Dist },
    /// Interval indices before and after; `None` means outside every interval.
    PartitionMove { v: VertexId, from: Option<usize>, to: Option<usize> },
    Expelled { v: VertexId, old: Dist },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EsStats {
    /// Cursor advances during repair.
    pub scans: u64,
    /// Unit level increments.
    pub level_increases: u64,
    pub events: u64,
}

#[derive(Clone, Debug)]
pub struct EsTree {
    root: VertexId,
    depth: Dist,
    mu: Option<u64>,
    level: Vec<Dist>,
    cursor: Vec<usize>,
    heavy: bool,
    ball_edges: usize,
    partition: Option<Vec<(Dist, Dist)>>,
    buckets: Vec<BTreeSet<VertexId>>,
    marked: BTreeSet<VertexId>,
    stats: EsStats,
}

impl EsTree {
    pub fn build(
        g: &DecrementalGraph,
        root: VertexId,
        depth: Dist,
        mu: Option<u64>,
        partition: Option<Vec<(Dist, Dist)>>,
    ) -> Result<EsTree, EsError> {
        if let Some(p) = &partition {
            let ok = !p.is_empty()
                && p[0].0 == 0
                && p.last().is_some_and(|l| l.1 == depth + 1)
                && p.iter().all(|&(a, b)| a < b)
                && p.windows(2).all(|w| w[0].1 == w[1].0);
            if !ok {
                return Err(EsError::BadPartition { depth });
            }
        }
        let n = g.n();
        let mut level = vec![INF; n];
        level[root] = 0;
        let mut frontier = vec![root];
        let mut order = vec![root];
        let mut d = 0;
        while !frontier.is_empty() && d < depth {
            let mut next = Vec::new();
            for &x in &frontier {
                for y in g.star_neighbors(x) {
                    if level[y] == INF {
                        level[y] = d + 1;
                        next.push(y);
                    }
                }
            }
            order.extend_from_slice(&next);
            frontier = next;
            d += 1;
        }
        let mut cursor = vec![0; n];
        let mut ball_edges = 0;
        for &x in &order {
            let adj = g.adjacency(x);
            if x != root {
                cursor[x] = adj
                    .iter()
                    .position(|&(y, id)| g.star_alive(id) && level[x] > 0 && level[y] == level[x] - 1)
                    .expect("BFS parent exists");
            }
            ball_edges += adj
                .iter()
                .filter(|&&(y, id)| g.star_alive(id) && y > x && level[y] <= depth)
                .count();
        }
        let heavy = mu.is_some_and(|mu| ball_edges as u64 > mu);
        let mut tree = EsTree {
            root,
            depth,
            mu,
            level,
            cursor,
            heavy,
            ball_edges,
            buckets: vec![BTreeSet::new(); partition.as_ref().map_or(0, |p| p.len())],
            partition,
            marked: BTreeSet::new(),
            stats: EsStats::default(),
        };
        for &x in &order {
            if let Some(i) = tree.interval_of(tree.level[x]) {
                tree.buckets[i].insert(x);
            }
        }
        Ok(tree)
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn depth(&self) -> Dist {
        self.depth
    }

    pub fn mu(&self) -> Option<u64> {
        self.mu
    }

    /// Distance from the root, or `INF` past the depth bound.
    pub fn level(&self, v: VertexId) -> Dist {
        self.level[v]
    }

    pub fn levels(&self) -> &[Dist] {
        &self.level
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.level[v] <= self.depth
    }

    pub fn is_heavy(&self) -> bool {
        self.heavy
    }

    pub fn is_light(&self) -> bool {
        !self.heavy
    }

    /// Edges of `G*` with both endpoints in the ball.
    pub fn ball_edge_count(&self) -> usize {
        self.ball_edges
    }

    pub fn stats(&self) -> EsStats {
        self.stats
    }

    pub fn partition(&self) -> Option<&[(Dist, Dist)]> {
        self.partition.as_deref()
    }

    pub fn bucket(&self, i: usize) -> &BTreeSet<VertexId> {
        &self.buckets[i]
    }

    /// Vertices with level at most `d`, sorted.
    pub fn within(&self, d: Dist) -> Vec<VertexId> {
        let d = d.min(self.depth);
        match &self.partition {
            Some(p) if p.iter().any(|&(_, b)| b == d + 1) => {
                let mut out: Vec<VertexId> = p
                    .iter()
                    .zip(&self.buckets)
                    .take_while(|((_, b), _)| *b <= d + 1)
                    .flat_map(|(_, s)| s.iter().copied())
                    .collect();
                out.sort_unstable();
                out
            }
            _ => (0..self.level.len()).filter(|&v| self.level[v] <= d).collect(),
        }
    }

    pub fn count_within(&self, d: Dist) -> usize {
        let d = d.min(self.depth);
        match &self.partition {
            Some(p) if p.iter().any(|&(_, b)| b == d + 1) => p
                .iter()
                .zip(&self.buckets)
                .take_while(|((_, b), _)| *b <= d + 1)
                .map(|(_, s)| s.len())
                .sum(),
            _ => self.level.iter().filter(|&&l| l <= d).count(),
        }
    }

    fn interval_of(&self, l: Dist) -> Option<usize> {
        let p = self.partition.as_ref()?;
        if l > self.depth {
            return None;
        }
        Some(p.partition_point(|&(_, b)| b <= l))
    }

    pub fn parent(&self, g: &DecrementalGraph, v: VertexId) -> Option<VertexId> {
        if v == self.root || !self.contains(v) {
            return None;
        }
        Some(g.adjacency(v)[self.cursor[v]].0)
    }

    /// Tree path from the root to `v`.
    pub fn extract_path(&self, g: &DecrementalGraph, v: VertexId) -> Result<Vec<VertexId>, EsError> {
        if !self.contains(v) {
            return Err(EsError::OutsideBall(v));
        }
        let mut path = vec![v];
        let mut x = v;
        while let Some(p) = self.parent(g, x) {
            path.push(p);
            x = p;
        }
        path.reverse();
        Ok(path)
    }

    pub fn mark(&mut self, v: VertexId) -> Result<(), EsError> {
        if !self.contains(v) {
            return Err(EsError::OutsideBall(v));
        }
        self.marked.insert(v);
        Ok(())
    }

    pub fn unmark(&mut self, v: VertexId) {
        self.marked.remove(&v);
    }

    pub fn is_marked(&self, v: VertexId) -> bool {
        self.marked.contains(&v)
    }

    pub fn has_marked(&self) -> bool {
        !self.marked.is_empty()
    }

    pub fn marked(&self) -> &BTreeSet<VertexId> {
        &self.marked
    }

    /// Whether some marked vertex has level at most `d`.
    pub fn marked_within(&self, d: Dist) -> bool {
        self.marked.iter().any(|&v| self.level[v] <= d)
    }

    fn supports(&self, g: &DecrementalGraph, x: VertexId) -> bool {
        let adj = g.adjacency(x);
        let c = self.cursor[x];
        c < adj.len() && g.star_alive(adj[c].1) && self.level[adj[c].0] == self.level[x] - 1
    }

    /// Repairs levels after `e` left `G*`. `None` means `G*` did not change.
    pub fn notify_delete(&mut self, g: &DecrementalGraph, e: Option<Edge>) -> Vec<EsEvent> {
        let Some(e) = e else { return Vec::new() };
        let (la, lb) = (self.level[e.u], self.level[e.v]);
        if la > self.depth && lb > self.depth {
            return Vec::new();
        }
        if la <= self.depth && lb <= self.depth {
            self.ball_edges -= 1;
        }
        let mut queue = BTreeSet::new();
        for x in [e.u, e.v] {
            if x != self.root && self.contains(x) && !self.supports(g, x) {
                queue.insert((self.level[x], x));
            }
        }
        let mut first_old: BTreeMap<VertexId, Dist> = BTreeMap::new();
        while let Some((l, x)) = queue.pop_first() {
            if self.supports(g, x) {
                continue;
            }
            let adj = g.adjacency(x);
            let mut found = false;
            while self.cursor[x] < adj.len() {
                let (y, id) = adj[self.cursor[x]];
                if g.star_alive(id) && self.level[y] == l - 1 {
                    found = true;
                    break;
                }
                self.cursor[x] += 1;
                self.stats.scans += 1;
            }
            if found {
                continue;
            }
            first_old.entry(x).or_insert(l);
            for &(y, id) in adj {
                if g.star_alive(id)
                    && self.level[y] == l + 1
                    && g.adjacency(y).get(self.cursor[y]).is_some_and(|&(_, c)| c == id)
                {
                    queue.insert((l + 1, y));
                }
            }
            self.cursor[x] = 0;
            self.stats.level_increases += 1;
            if l + 1 > self.depth {
                self.level[x] = INF;
                self.ball_edges -= adj
                    .iter()
                    .filter(|&&(y, id)| g.star_alive(id) && self.level[y] <= self.depth)
                    .count();
            } else {
                self.level[x] = l + 1;
                queue.insert((l + 1, x));
            }
        }

        let mut events = Vec::new();
        for (&v, &old) in &first_old {
            let new = self.level[v];
            if new == INF {
                self.marked.remove(&v);
                events.push(EsEvent::Expelled { v, old });
            } else {
                events.push(EsEvent::LevelIncrease { v, old, new });
            }
            if self.partition.is_some() {
                let (from, to) = (self.interval_of(old), self.interval_of(new));
                if from != to {
                    if let Some(i) = from {
                        self.buckets[i].remove(&v);
                    }
                    if let Some(i) = to {
                        self.buckets[i].insert(v);
                    }
                    events.push(EsEvent::PartitionMove { v, from, to });
                }
            }
        }
        if self.heavy && self.mu.is_some_and(|mu| self.ball_edges as u64 <= mu) {
            self.heavy = false;
            events.push(EsEvent::HeavyToLight);
        }
        self.stats.events += events.len() as u64;
        events
    }
}
