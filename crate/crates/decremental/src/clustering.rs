//! Cluster levels and active centers over a light cover.
//!
//! With `L = 1/ε`, a center `c` of level `i` owns `Core(c) = B(c, τL^i)` and
//! `Cluster(c) = B(c, τL^{i+1})`. The level is the largest `i ≤ k` such that
//! `|B(c, τL^j)|^k ≥ n^j` for every `j ≤ i`, or `∞` while `B(c, 2τL^{k+1})` is
//! `μ`-heavy. `A_i` is a greedy set of level-`i` centers, no two within
//! `2τL^i` of each other.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::cover::{floor_log2, CoverUpdate, LayeredCover};
use crate::es_tree::EsTree;
use crate::graph::{DecrementalGraph, Dist, Edge, VertexId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClusterError {
    #[error("1/epsilon must be an integer of at least 10, got {0}")]
    BadInverseEpsilon(u64),
    #[error("k must be at least 1")]
    BadK,
    #[error("tau must be at least 1")]
    BadTau,
    #[error("{0} is not a center")]
    NotCenter(VertexId),
    #[error("center {0} has no finite level")]
    InfiniteLevel(VertexId),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ClusterEvent {
    LevelChange { c: VertexId, old: Option<usize>, new: Option<usize> },
    Left { c: VertexId, level: usize },
    Joined { c: VertexId, level: usize },
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ClusterStats {
    pub centers: usize,
    pub active_per_level: Vec<usize>,
    pub level_changes: u64,
    pub joins: u64,
}

/// `⌊√(log2 n)⌋`, at least 1.
pub fn default_k(n: usize) -> u32 {
    let lg = if n <= 1 { 0 } else { floor_log2(n as u64) };
    ((lg as f64).sqrt().floor() as u32).max(1)
}

/// `a^k ≥ n^j`, exactly.
fn power_at_least(a: usize, k: u32, n: usize, j: u32) -> bool {
    let lhs = (a as u128).checked_pow(k);
    let rhs = (n as u128).checked_pow(j);
    match (lhs, rhs) {
        (Some(l), Some(r)) => l >= r,
        (None, _) => true,
        (Some(_), None) => false,
    }
}

struct Center {
    light: EsTree,
    levels: EsTree,
    level: Option<usize>,
}

pub struct ClusterState {
    n: usize,
    tau: u64,
    inv_eps: u64,
    k: u32,
    mu: u64,
    layer: usize,
    centers: BTreeMap<VertexId, Center>,
    active: Vec<BTreeSet<VertexId>>,
    level_changes: u64,
    joins: u64,
}

impl ClusterState {
    pub fn build(
        g: &DecrementalGraph,
        cover: &LayeredCover,
        tau: u64,
        inv_eps: u64,
        k: u32,
    ) -> Result<ClusterState, ClusterError> {
        if inv_eps < 10 {
            return Err(ClusterError::BadInverseEpsilon(inv_eps));
        }
        if k == 0 {
            return Err(ClusterError::BadK);
        }
        if tau == 0 {
            return Err(ClusterError::BadTau);
        }
        let mu = cover.mu().expect("clustering runs over a light cover");
        let layer = floor_log2(tau).min(cover.top_layer());
        let mut cs = ClusterState {
            n: g.n(),
            tau,
            inv_eps,
            k,
            mu,
            layer,
            centers: BTreeMap::new(),
            active: vec![BTreeSet::new(); k as usize + 1],
            level_changes: 0,
            joins: 0,
        };
        for &c in cover.centers(layer) {
            cs.add_center(g, c);
        }
        cs.activate(&mut Vec::new());
        cs.joins = 0;
        Ok(cs)
    }

    /// `τL^i`.
    pub fn radius(&self, i: u32) -> Dist {
        self.tau * self.inv_eps.pow(i)
    }

    fn cap(&self, d: Dist) -> Dist {
        d.min(self.n as Dist)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn inv_eps(&self) -> u64 {
        self.inv_eps
    }

    pub fn mu(&self) -> u64 {
        self.mu
    }

    pub fn cover_layer(&self) -> usize {
        self.layer
    }

    fn partition(&self) -> Vec<(Dist, Dist)> {
        let top = self.cap(self.radius(self.k + 1));
        let mut cuts = vec![0];
        for i in 0..=self.k {
            let end = self.radius(i) + 1;
            if end <= top && end > *cuts.last().expect("nonempty") {
                cuts.push(end);
            }
        }
        if *cuts.last().expect("nonempty") != top + 1 {
            cuts.push(top + 1);
        }
        cuts.windows(2).map(|w| (w[0], w[1])).collect()
    }

    fn add_center(&mut self, g: &DecrementalGraph, c: VertexId) {
        let light_depth = self.cap(2 * self.radius(self.k + 1));
        let light = EsTree::build(g, c, light_depth, Some(self.mu), None).expect("no partition");
        let levels = EsTree::build(g, c, self.cap(self.radius(self.k + 1)), None, Some(self.partition()))
            .expect("valid partition");
        let mut center = Center { light, levels, level: None };
        center.level = self.compute_level(&center);
        if let Some(i) = center.level {
            for &a in &self.active[i] {
                if center.levels.contains(a) {
                    center.levels.mark(a).expect("inside ball");
                }
            }
        }
        self.centers.insert(c, center);
    }

    fn compute_level(&self, c: &Center) -> Option<usize> {
        if c.light.is_heavy() {
            return None;
        }
        let mut level = 0;
        for j in 1..=self.k {
            let size = c.levels.count_within(self.radius(j));
            if !power_at_least(size, self.k, self.n, j) {
                break;
            }
            level = j as usize;
        }
        Some(level)
    }

    pub fn centers(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.centers.keys().copied()
    }

    pub fn is_center(&self, c: VertexId) -> bool {
        self.centers.contains_key(&c)
    }

    pub fn level(&self, c: VertexId) -> Option<usize> {
        self.centers.get(&c).and_then(|x| x.level)
    }

    pub fn active(&self, i: usize) -> &BTreeSet<VertexId> {
        &self.active[i]
    }

    /// Level of an active center.
    pub fn active_level(&self, c: VertexId) -> Option<usize> {
        self.level(c).filter(|&i| self.active[i].contains(&c))
    }

    fn ball(&self, c: VertexId, shift: u32) -> Result<Vec<VertexId>, ClusterError> {
        let center = self.centers.get(&c).ok_or(ClusterError::NotCenter(c))?;
        let i = center.level.ok_or(ClusterError::InfiniteLevel(c))?;
        Ok(center.levels.within(self.radius(i as u32 + shift)))
    }

    pub fn core(&self, c: VertexId) -> Result<Vec<VertexId>, ClusterError> {
        self.ball(c, 0)
    }

    pub fn cluster(&self, c: VertexId) -> Result<Vec<VertexId>, ClusterError> {
        self.ball(c, 1)
    }

    /// Distance from center `c` to `v` if `v` lies within `τL^{k+1}`.
    pub fn center_dist(&self, c: VertexId, v: VertexId) -> Option<Dist> {
        let t = &self.centers.get(&c)?.levels;
        t.contains(v).then(|| t.level(v))
    }

    fn set_marks(&mut self, c: VertexId) {
        let level = self.centers[&c].level;
        let members: Vec<VertexId> = level.map(|i| self.active[i].iter().copied().collect()).unwrap_or_default();
        let tree = &mut self.centers.get_mut(&c).expect("center").levels;
        let old: Vec<VertexId> = tree.marked().iter().copied().collect();
        for v in old {
            tree.unmark(v);
        }
        for a in members {
            if tree.contains(a) {
                tree.mark(a).expect("inside ball");
            }
        }
    }

    fn activate(&mut self, events: &mut Vec<ClusterEvent>) {
        for i in 0..=self.k as usize {
            let waiting: Vec<VertexId> = self
                .centers
                .iter()
                .filter(|(c, x)| x.level == Some(i) && !self.active[i].contains(c))
                .map(|(&c, _)| c)
                .collect();
            let sep = 2 * self.radius(i as u32);
            for c in waiting {
                if self.centers[&c].levels.marked_within(sep) {
                    continue;
                }
                self.active[i].insert(c);
                self.joins += 1;
                events.push(ClusterEvent::Joined { c, level: i });
                for x in self.centers.values_mut() {
                    if x.level == Some(i) && x.levels.contains(c) {
                        x.levels.mark(c).expect("inside ball");
                    }
                }
            }
        }
    }

    /// Runs once per deletion after the cover; `update` lists the cover's
    /// promotions for this stage.
    pub fn notify_stage(
        &mut self,
        g: &DecrementalGraph,
        cover: &LayeredCover,
        e: Option<Edge>,
        update: &CoverUpdate,
    ) -> Vec<ClusterEvent> {
        let mut events = Vec::new();
        if let Some(e) = e {
            for x in self.centers.values_mut() {
                x.light.notify_delete(g, Some(e));
                x.levels.notify_delete(g, Some(e));
            }
        }
        for &(j, c) in &update.promotions {
            if j == self.layer && !self.centers.contains_key(&c) {
                self.add_center(g, c);
                let level = self.centers[&c].level;
                if level.is_some() {
                    events.push(ClusterEvent::LevelChange { c, old: None, new: level });
                }
            }
        }
        debug_assert!(cover.centers(self.layer).iter().all(|c| self.centers.contains_key(c)));
        let ids: Vec<VertexId> = self.centers.keys().copied().collect();
        let mut changed = Vec::new();
        for c in ids {
            let old = self.centers[&c].level;
            let new = self.compute_level(&self.centers[&c]);
            if old == new {
                continue;
            }
            self.centers.get_mut(&c).expect("center").level = new;
            self.level_changes += 1;
            events.push(ClusterEvent::LevelChange { c, old, new });
            if let Some(i) = old {
                if self.active[i].remove(&c) {
                    events.push(ClusterEvent::Left { c, level: i });
                    for x in self.centers.values_mut() {
                        x.levels.unmark(c);
                    }
                }
            }
            changed.push(c);
        }
        for c in changed {
            self.set_marks(c);
        }
        self.activate(&mut events);
        events
    }

    pub fn stats(&self) -> ClusterStats {
        ClusterStats {
            centers: self.centers.len(),
            active_per_level: self.active.iter().map(|a| a.len()).collect(),
            level_changes: self.level_changes,
            joins: self.joins,
        }
    }

    pub fn tree_scans(&self) -> u64 {
        self.centers
            .values()
            .map(|x| x.light.stats().scans + x.levels.stats().scans)
            .sum()
    }
}
