//! Almost-monotone distance estimates from `s` on the emulator.
//!
//! Estimates live in quanta. Per stage: near-light vertices drop two quanta,
//! joining centers are reset from their core, edge changes are applied, then
//! consolidation raises every vertex to `max(own, min over edges of
//! neighbour + w)`. Raised active centers drag their core up to
//! `estimate - τL^{k+1}`. Graph vertices above the depth are dropped for good.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::emulator::{ChangeBatch, Emulator, StageEvents};

const GONE: i64 = i64::MAX;

#[derive(Clone, Debug, Default, Serialize)]
pub struct MesStats {
    pub stages: u64,
    /// Estimate changes, counted per vertex.
    pub changes: u64,
    /// Edge keys touched because an endpoint estimate changed.
    pub rescans: u64,
    pub affected: u64,
    pub dragged: u64,
    pub expelled: u64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct MesStageReport {
    pub expelled: Vec<usize>,
    pub affected: usize,
    pub dragged: Vec<usize>,
}

#[derive(Clone, Copy, Debug)]
struct MesEdge {
    u: usize,
    v: usize,
    w: i64,
}

impl MesEdge {
    fn other(&self, x: usize) -> usize {
        if self.u == x { self.v } else { self.u }
    }
}

pub struct AlmostMes {
    source: usize,
    originals: usize,
    inv_eps: i64,
    k: u32,
    depth: i64,
    est: Vec<i64>,
    edges: HashMap<u64, MesEdge>,
    incident: Vec<BTreeSet<u64>>,
    /// `(neighbour estimate + w, edge)` over edges to live neighbours.
    keyed: Vec<BTreeSet<(i64, u64)>>,
    dirty: BTreeSet<usize>,
    stats: MesStats,
}

impl AlmostMes {
    /// Starts from exact emulator distances. `depth` is in quanta.
    pub fn build(em: &Emulator, inv_eps: u64, k: u32, depth: i64) -> AlmostMes {
        let dist = em.distances_from(em.source());
        let originals = em.n();
        let est: Vec<i64> = dist
            .iter()
            .enumerate()
            .map(|(v, &d)| if v < originals && d > depth { GONE } else { d })
            .collect();
        let count = est.len();
        let mut mes = AlmostMes {
            source: em.source(),
            originals,
            inv_eps: inv_eps as i64,
            k,
            depth,
            est,
            edges: HashMap::new(),
            incident: vec![BTreeSet::new(); count],
            keyed: vec![BTreeSet::new(); count],
            dirty: BTreeSet::new(),
            stats: MesStats::default(),
        };
        for e in em.edges() {
            mes.add_edge(e.id, e.owner, e.other, e.weight);
        }
        mes
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn depth(&self) -> i64 {
        self.depth
    }

    pub fn light_drop(&self) -> i64 {
        2
    }

    /// `8τL^i` in quanta.
    pub fn join_offset(&self, level: usize) -> i64 {
        8 * self.inv_eps.pow(level as u32 + 1)
    }

    /// `τL^{k+1}` in quanta.
    pub fn drag_offset(&self) -> i64 {
        self.inv_eps.pow(self.k + 2)
    }

    pub fn estimate(&self, v: usize) -> Option<i64> {
        self.est.get(v).copied().filter(|&x| x != GONE)
    }

    pub fn estimates(&self) -> Vec<Option<i64>> {
        (0..self.est.len()).map(|v| self.estimate(v)).collect()
    }

    pub fn stats(&self) -> &MesStats {
        &self.stats
    }

    fn alive(&self, v: usize) -> bool {
        self.est[v] != GONE
    }

    fn add_edge(&mut self, id: u64, u: usize, v: usize, w: i64) {
        self.edges.insert(id, MesEdge { u, v, w });
        self.incident[u].insert(id);
        self.incident[v].insert(id);
        if self.alive(u) && self.alive(v) {
            self.keyed[v].insert((self.est[u] + w, id));
            self.keyed[u].insert((self.est[v] + w, id));
        }
    }

    fn remove_edge(&mut self, id: u64) {
        let e = self.edges.remove(&id).expect("known edge");
        self.incident[e.u].remove(&id);
        self.incident[e.v].remove(&id);
        if self.alive(e.u) && self.alive(e.v) {
            self.keyed[e.v].remove(&(self.est[e.u] + e.w, id));
            self.keyed[e.u].remove(&(self.est[e.v] + e.w, id));
        }
        self.dirty.insert(e.u);
        self.dirty.insert(e.v);
    }

    fn set_weight(&mut self, id: u64, w: i64) {
        let e = *self.edges.get(&id).expect("known edge");
        if self.alive(e.u) && self.alive(e.v) {
            self.keyed[e.v].remove(&(self.est[e.u] + e.w, id));
            self.keyed[e.u].remove(&(self.est[e.v] + e.w, id));
            self.keyed[e.v].insert((self.est[e.u] + w, id));
            self.keyed[e.u].insert((self.est[e.v] + w, id));
        }
        self.edges.get_mut(&id).expect("known edge").w = w;
        self.dirty.insert(e.u);
        self.dirty.insert(e.v);
    }

    fn set_est(&mut self, v: usize, new: i64) {
        let old = self.est[v];
        if old == new {
            return;
        }
        self.stats.changes += 1;
        for &id in &self.incident[v] {
            let e = self.edges[&id];
            let x = e.other(v);
            if self.est[x] == GONE {
                continue;
            }
            self.stats.rescans += 1;
            if old != GONE {
                self.keyed[x].remove(&(old + e.w, id));
            }
            if new != GONE {
                self.keyed[x].insert((new + e.w, id));
            }
        }
        self.est[v] = new;
        if new == GONE {
            self.keyed[v].clear();
        }
    }

    fn dirty_neighbours(&mut self, v: usize) {
        for &id in &self.incident[v] {
            self.dirty.insert(self.edges[&id].other(v));
        }
    }

    /// Applies one stage. `vertex_count` is the emulator's vertex count after
    /// the stage; new vertices start at zero.
    pub fn apply_stage(&mut self, batch: &ChangeBatch, ev: &StageEvents, vertex_count: usize) -> MesStageReport {
        self.stats.stages += 1;
        let s = self.source;
        let prev = self.est.clone();
        for &v in &ev.became_light {
            if v != s && self.alive(v) {
                self.set_est(v, self.est[v] - self.light_drop());
                self.dirty.insert(v);
            }
        }
        for (c, level, core) in &ev.joins {
            let c = *c;
            if c == s || !self.alive(c) {
                continue;
            }
            let best = core
                .iter()
                .map(|&v| prev[v])
                .filter(|&x| x != GONE)
                .max()
                .expect("core contains its center");
            self.set_est(c, best - self.join_offset(*level));
            self.dirty.insert(c);
            self.dirty_neighbours(c);
        }
        while self.est.len() < vertex_count {
            self.dirty.insert(self.est.len());
            self.est.push(0);
            self.incident.push(BTreeSet::new());
            self.keyed.push(BTreeSet::new());
        }
        for e in &batch.removed {
            self.remove_edge(e.id);
        }
        for e in &batch.inserted {
            self.add_edge(e.id, e.owner, e.other, e.weight);
        }
        for e in &batch.increased {
            self.set_weight(e.id, e.weight);
        }
        let pre = self.est.clone();
        let affected = self.consolidate();
        let dragged = self.drag(&pre, &ev.active);
        let mut expelled = Vec::new();
        for v in 0..self.originals {
            if self.alive(v) && self.est[v] > self.depth {
                self.dirty_neighbours(v);
                self.set_est(v, GONE);
                expelled.push(v);
            }
        }
        self.stats.expelled += expelled.len() as u64;
        MesStageReport { expelled, affected, dragged }
    }

    fn consolidate(&mut self) -> usize {
        let s = self.source;
        let dirty = std::mem::take(&mut self.dirty);
        let mut queue: BTreeSet<(i64, usize)> = dirty
            .into_iter()
            .filter(|&v| v != s && self.alive(v))
            .map(|v| (self.est[v], v))
            .collect();
        // settle in ascending order which vertices keep a supporter at or
        // below their own estimate
        let mut affected: BTreeSet<usize> = BTreeSet::new();
        while let Some((a, v)) = queue.pop_first() {
            let safe = self.keyed[v]
                .iter()
                .take_while(|(key, _)| *key <= a)
                .any(|(_, id)| !affected.contains(&self.edges[id].other(v)));
            if safe {
                continue;
            }
            affected.insert(v);
            for id in &self.incident[v] {
                let e = self.edges[id];
                let x = e.other(v);
                if x != s && self.alive(x) && !affected.contains(&x) && a + e.w <= self.est[x] {
                    queue.insert((self.est[x], x));
                }
            }
        }
        let mut best: BTreeMap<usize, i64> = BTreeMap::new();
        let mut heap: BTreeSet<(i64, usize)> = BTreeSet::new();
        for &v in &affected {
            let b = self.keyed[v]
                .iter()
                .find(|(_, id)| !affected.contains(&self.edges[id].other(v)))
                .map_or(GONE, |&(key, _)| key);
            best.insert(v, b);
            heap.insert((if b == GONE { GONE } else { b.max(self.est[v]) }, v));
        }
        let mut settled: BTreeMap<usize, i64> = BTreeMap::new();
        while let Some((key, v)) = heap.pop_first() {
            if key == GONE {
                break;
            }
            settled.insert(v, key);
            for id in &self.incident[v] {
                let e = self.edges[id];
                let x = e.other(v);
                if !affected.contains(&x) || settled.contains_key(&x) {
                    continue;
                }
                let b = best[&x];
                if key + e.w < b {
                    let old_key = if b == GONE { GONE } else { b.max(self.est[x]) };
                    heap.remove(&(old_key, x));
                    best.insert(x, key + e.w);
                    heap.insert(((key + e.w).max(self.est[x]), x));
                }
            }
        }
        self.stats.affected += affected.len() as u64;
        for &v in &affected {
            self.set_est(v, settled.get(&v).copied().unwrap_or(GONE));
        }
        affected.len()
    }

    fn drag(&mut self, pre: &[i64], active: &[(usize, Vec<usize>)]) -> Vec<usize> {
        let s = self.source;
        let core_of: BTreeMap<usize, &Vec<usize>> = active.iter().map(|(c, core)| (*c, core)).collect();
        let mut queue: VecDeque<usize> = core_of
            .keys()
            .copied()
            .filter(|&c| self.alive(c) && self.est[c] > pre[c])
            .collect();
        let mut queued: BTreeSet<usize> = queue.iter().copied().collect();
        let mut dragged = BTreeSet::new();
        while let Some(c) = queue.pop_front() {
            queued.remove(&c);
            let floor = self.est[c] - self.drag_offset();
            for &v in core_of[&c].iter() {
                if v == s || v >= self.originals || !self.alive(v) || floor <= self.est[v] {
                    continue;
                }
                self.set_est(v, floor);
                self.dirty_neighbours(v);
                dragged.insert(v);
                if core_of.contains_key(&v) && queued.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        self.stats.dragged += dragged.len() as u64;
        dragged.into_iter().collect()
    }

    /// Every live vertex other than the source sits at or above its cheapest
    /// live supporter, and nothing live is unsupported.
    pub fn check_consolidated(&self) -> Result<(), String> {
        for v in 0..self.est.len() {
            if v == self.source || !self.alive(v) {
                continue;
            }
            let support = self.incident[v]
                .iter()
                .map(|id| self.edges[id])
                .filter(|e| self.alive(e.other(v)))
                .map(|e| self.est[e.other(v)] + e.w)
                .min();
            match support {
                None => return Err(format!("vertex {v} has no live supporter")),
                Some(x) if x > self.est[v] && !self.dirty.contains(&v) => {
                    return Err(format!("vertex {v} at {} below support {x}", self.est[v]));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emulator::{EdgeKind, EmEdge};
    use crate::oracle::{naive_mes_stage, NaiveStageInput, WeightedEdge};
    use proptest::prelude::*;
    use rand::seq::IndexedRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn edge(id: u64, u: usize, v: usize, w: i64) -> EmEdge {
        EmEdge { id, owner: u, other: v, weight: w, kind: EdgeKind::Source, inserted_at: 0, assigned: u }
    }

    /// A bare estimate tree over a hand-made edge list.
    fn bare(originals: usize, vertices: usize, edges: &[EmEdge], depth: i64, k: u32) -> AlmostMes {
        let list: Vec<WeightedEdge> = edges.iter().map(|e| WeightedEdge { u: e.owner, v: e.other, w: e.weight }).collect();
        let dist = crate::oracle::dijkstra(vertices, &list, 0);
        let mut mes = AlmostMes {
            source: 0,
            originals,
            inv_eps: 10,
            k,
            depth,
            est: dist.iter().enumerate().map(|(v, &d)| if v < originals && d > depth { GONE } else { d }).collect(),
            edges: HashMap::new(),
            incident: vec![BTreeSet::new(); vertices],
            keyed: vec![BTreeSet::new(); vertices],
            dirty: BTreeSet::new(),
            stats: MesStats::default(),
        };
        for e in edges {
            mes.add_edge(e.id, e.owner, e.other, e.weight);
        }
        mes
    }

    #[test]
    fn offsets_in_quanta() {
        let m = bare(2, 2, &[edge(0, 0, 1, 1)], 100, 1);
        assert_eq!(m.join_offset(0), 80);
        assert_eq!(m.join_offset(1), 800);
        assert_eq!(m.drag_offset(), 1000);
    }

    #[test]
    fn removal_raises_to_next_support() {
        let edges = [edge(0, 0, 1, 3), edge(1, 0, 2, 5), edge(2, 1, 2, 1)];
        let mut m = bare(3, 3, &edges, 100, 1);
        assert_eq!(m.estimates(), vec![Some(0), Some(3), Some(4)]);
        let batch = ChangeBatch { removed: vec![edges[0].clone()], ..Default::default() };
        m.apply_stage(&batch, &StageEvents::default(), 3);
        assert_eq!(m.estimates(), vec![Some(0), Some(6), Some(5)]);
        m.check_consolidated().unwrap();
    }

    #[test]
    fn estimates_never_drop_on_insert() {
        let edges = [edge(0, 0, 1, 9)];
        let mut m = bare(2, 2, &edges, 100, 1);
        let batch = ChangeBatch { inserted: vec![edge(1, 0, 1, 2)], ..Default::default() };
        m.apply_stage(&batch, &StageEvents::default(), 2);
        assert_eq!(m.estimate(1), Some(9));
    }

    #[test]
    fn light_drop_and_expulsion() {
        let edges = [edge(0, 0, 1, 5), edge(1, 1, 2, 5)];
        let mut m = bare(3, 3, &edges, 12, 1);
        let ev = StageEvents { became_light: vec![2], ..Default::default() };
        m.apply_stage(&ChangeBatch::default(), &ev, 3);
        assert_eq!(m.estimate(2), Some(10));
        let batch = ChangeBatch { increased: vec![edge(1, 1, 2, 8)], ..Default::default() };
        let r = m.apply_stage(&batch, &StageEvents::default(), 3);
        assert_eq!(r.expelled, vec![2]);
        assert_eq!(m.estimate(2), None);
    }

    #[test]
    fn drag_pulls_core_up() {
        // k = 0 makes the drag offset L^2 = 100 quanta
        let edges = [edge(0, 0, 1, 300), edge(1, 0, 2, 10), edge(2, 1, 2, 500)];
        let mut m = bare(3, 3, &edges, 10_000, 0);
        let ev = StageEvents { active: vec![(1, vec![1, 2])], ..Default::default() };
        let batch = ChangeBatch { increased: vec![edge(0, 0, 1, 400)], ..Default::default() };
        let r = m.apply_stage(&batch, &ev, 3);
        assert_eq!(m.estimate(1), Some(400));
        assert_eq!(m.estimate(2), Some(300));
        assert_eq!(r.dragged, vec![2]);
    }

    #[test]
    fn unreachable_component_vertex_is_dropped() {
        let edges = [edge(0, 0, 1, 1), edge(1, 2, 1, 1)];
        let mut m = bare(2, 3, &edges, 100, 1);
        assert_eq!(m.estimate(2), Some(2));
        let batch = ChangeBatch { removed: vec![edges[1].clone()], ..Default::default() };
        m.apply_stage(&batch, &StageEvents::default(), 3);
        assert_eq!(m.estimate(2), None);
    }

    /// Random stages over a synthetic emulator, replayed by both evaluators.
    fn synthetic(seed: u64, stages: usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let originals = 12;
        let mut vertices = 14;
        let mut next_id = 0u64;
        let mut edges: BTreeMap<u64, EmEdge> = BTreeMap::new();
        for v in 1..vertices {
            let u = rng.random_range(0..v);
            edges.insert(next_id, edge(next_id, u, v, rng.random_range(1..20)));
            next_id += 1;
        }
        for _ in 0..14 {
            let (u, v) = (rng.random_range(0..vertices), rng.random_range(0..vertices));
            if u != v {
                edges.insert(next_id, edge(next_id, u, v, rng.random_range(1..20)));
                next_id += 1;
            }
        }
        let list: Vec<EmEdge> = edges.values().cloned().collect();
        let depth = 60;
        let mut m = bare(originals, vertices, &list, depth, 0);
        for _ in 0..stages {
            let mut batch = ChangeBatch::default();
            let ids: Vec<u64> = edges.keys().copied().collect();
            for &id in ids.choose_multiple(&mut rng, 2) {
                if rng.random_bool(0.5) {
                    batch.removed.push(edges.remove(&id).unwrap());
                } else {
                    let e = edges.get_mut(&id).unwrap();
                    e.weight += rng.random_range(1..6);
                    batch.increased.push(e.clone());
                }
            }
            if rng.random_bool(0.2) {
                vertices += 1;
            }
            for _ in 0..2 {
                let (u, v) = (rng.random_range(0..vertices), rng.random_range(0..vertices));
                if u != v {
                    let e = edge(next_id, u, v, rng.random_range(1..20));
                    next_id += 1;
                    edges.insert(e.id, e.clone());
                    batch.inserted.push(e);
                }
            }
            let mut ev = StageEvents::default();
            ev.became_light = (0..originals).filter(|_| rng.random_bool(0.1)).collect();
            let centers: Vec<usize> = (1..originals).filter(|_| rng.random_bool(0.3)).collect();
            for &c in &centers {
                let mut core: Vec<usize> = (0..originals).filter(|&v| v != c && rng.random_bool(0.25)).collect();
                core.push(c);
                core.sort();
                if rng.random_bool(0.3) {
                    ev.joins.push((c, 0, core.clone()));
                }
                ev.active.push((c, core));
            }
            let prev = m.estimates();
            let list: Vec<WeightedEdge> = edges.values().map(|e| WeightedEdge { u: e.owner, v: e.other, w: e.weight }).collect();
            let joins: Vec<(usize, Vec<usize>, i64)> =
                ev.joins.iter().map(|(c, i, core)| (*c, core.clone(), m.join_offset(*i))).collect();
            let want = naive_mes_stage(&NaiveStageInput {
                source: 0,
                prev: &prev,
                vertices,
                originals,
                edges: &list,
                became_light: &ev.became_light,
                light_drop: m.light_drop(),
                joins: &joins,
                active: &ev.active,
                drag_offset: m.drag_offset(),
                depth,
            });
            m.apply_stage(&batch, &ev, vertices);
            assert_eq!(m.estimates(), want, "seed {seed}");
            m.check_consolidated().unwrap();
        }
    }

    #[test]
    fn synthetic_matches_naive() {
        for seed in 0..40 {
            synthetic(seed, 25);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn synthetic_replay(seed in 0u64..1_000_000) {
            synthetic(seed, 20);
        }
    }
}
