//! Brute-force reference computations used to check the dynamic structures.
//! Nothing here calls into the other modules; every traversal is written out
//! again over plain edge lists.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::graph::{DecrementalGraph, Edge, VertexId};

pub const UNREACHABLE: u64 = u64::MAX;

/// Frozen copies of `G` and `G*` at one stage.
#[derive(Clone, Debug)]
pub struct OracleSnapshot {
    pub n: usize,
    pub g_edges: Vec<Edge>,
    pub star_edges: Vec<Edge>,
    g_adj: Vec<Vec<VertexId>>,
    star_adj: Vec<Vec<VertexId>>,
}

fn adjacency(n: usize, edges: &[Edge]) -> Vec<Vec<VertexId>> {
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        adj[e.u].push(e.v);
        adj[e.v].push(e.u);
    }
    adj
}

fn bfs(adj: &[Vec<VertexId>], source: VertexId) -> Vec<u64> {
    let mut dist = vec![UNREACHABLE; adj.len()];
    dist[source] = 0;
    let mut queue = VecDeque::new();
    queue.push_back(source);
    while let Some(x) = queue.pop_front() {
        for &y in &adj[x] {
            if dist[y] == UNREACHABLE {
                dist[y] = dist[x] + 1;
                queue.push_back(y);
            }
        }
    }
    dist
}

impl OracleSnapshot {
    pub fn new(n: usize, g_edges: Vec<Edge>, star_edges: Vec<Edge>) -> OracleSnapshot {
        let g_adj = adjacency(n, &g_edges);
        let star_adj = adjacency(n, &star_edges);
        OracleSnapshot {
            n,
            g_edges,
            star_edges,
            g_adj,
            star_adj,
        }
    }

    pub fn capture(g: &DecrementalGraph) -> OracleSnapshot {
        OracleSnapshot::new(g.n(), g.g_edge_list(), g.star_edge_list())
    }

    /// Distances in `G*`.
    pub fn bfs_all(&self, source: VertexId) -> Vec<u64> {
        bfs(&self.star_adj, source)
    }

    /// Distances in `G`; `UNREACHABLE` across components.
    pub fn bfs_g(&self, source: VertexId) -> Vec<u64> {
        bfs(&self.g_adj, source)
    }

    pub fn all_pairs_g(&self) -> Vec<Vec<u64>> {
        (0..self.n).map(|s| self.bfs_g(s)).collect()
    }

    pub fn all_pairs_star(&self) -> Vec<Vec<u64>> {
        (0..self.n).map(|s| self.bfs_all(s)).collect()
    }

    pub fn star_connected(&self) -> bool {
        self.n == 0 || self.bfs_all(0).iter().all(|&d| d != UNREACHABLE)
    }

    /// Edges of `G*` with both endpoints within distance `r` of `v`.
    pub fn ball_edge_count(&self, v: VertexId, r: u64) -> usize {
        let dist = self.bfs_all(v);
        self.star_edges
            .iter()
            .filter(|e| dist[e.u] <= r && dist[e.v] <= r)
            .count()
    }

    pub fn ball(&self, v: VertexId, r: u64) -> BTreeSet<VertexId> {
        self.bfs_all(v)
            .iter()
            .enumerate()
            .filter(|(_, &d)| d <= r)
            .map(|(x, _)| x)
            .collect()
    }

    pub fn is_light(&self, v: VertexId, mu: Option<u64>, r: u64) -> bool {
        match mu {
            None => true,
            Some(mu) => self.ball_edge_count(v, r) as u64 <= mu,
        }
    }

    /// Connected components of `G*` induced on `members`, each sorted.
    pub fn induced_components(&self, members: &BTreeSet<VertexId>) -> Vec<Vec<VertexId>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &start in members {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(x) = stack.pop() {
                for &y in &self.star_adj[x] {
                    if members.contains(&y) && seen.insert(y) {
                        comp.push(y);
                        stack.push(y);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// All-pairs distances in `G*` after contracting every connected component
    /// of `G*[contracted]` into one node.
    pub fn contracted_all_pairs(&self, contracted: &BTreeSet<VertexId>) -> Vec<Vec<u64>> {
        let mut node = (0..self.n).collect::<Vec<_>>();
        for comp in self.induced_components(contracted) {
            let head = comp[0];
            for x in comp {
                node[x] = head;
            }
        }
        let mut adj: BTreeMap<VertexId, BTreeSet<VertexId>> = BTreeMap::new();
        for x in 0..self.n {
            adj.entry(node[x]).or_default();
        }
        for e in &self.star_edges {
            let (a, b) = (node[e.u], node[e.v]);
            if a != b {
                adj.entry(a).or_default().insert(b);
                adj.entry(b).or_default().insert(a);
            }
        }
        let mut from_node: HashMap<VertexId, Vec<u64>> = HashMap::new();
        for &s in adj.keys() {
            let mut dist: HashMap<VertexId, u64> = HashMap::from([(s, 0)]);
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                let d = dist[&x];
                for &y in &adj[&x] {
                    if !dist.contains_key(&y) {
                        dist.insert(y, d + 1);
                        queue.push_back(y);
                    }
                }
            }
            let row = (0..self.n)
                .map(|v| dist.get(&node[v]).copied().unwrap_or(UNREACHABLE))
                .collect();
            from_node.insert(s, row);
        }
        (0..self.n).map(|u| from_node[&node[u]].clone()).collect()
    }

    pub fn contracted_distance(
        &self,
        contracted: &BTreeSet<VertexId>,
        u: VertexId,
        v: VertexId,
    ) -> u64 {
        self.contracted_all_pairs(contracted)[u][v]
    }
}

/// A weighted undirected edge of an emulator snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WeightedEdge {
    pub u: usize,
    pub v: usize,
    pub w: i64,
}

/// Shortest-path weights from `source` by repeated selection of the closest
/// unsettled vertex.
pub fn dijkstra(vertices: usize, edges: &[WeightedEdge], source: usize) -> Vec<i64> {
    let mut adj = vec![Vec::new(); vertices];
    for e in edges {
        adj[e.u].push((e.v, e.w));
        adj[e.v].push((e.u, e.w));
    }
    let mut dist = vec![i64::MAX; vertices];
    let mut done = vec![false; vertices];
    dist[source] = 0;
    loop {
        let mut best = None;
        for x in 0..vertices {
            if !done[x] && dist[x] != i64::MAX && best.is_none_or(|b: usize| dist[x] < dist[b]) {
                best = Some(x);
            }
        }
        let Some(x) = best else { break };
        done[x] = true;
        for &(y, w) in &adj[x] {
            if dist[x] + w < dist[y] {
                dist[y] = dist[x] + w;
            }
        }
    }
    dist
}

/// Everything the naive evaluator needs to replay one stage of the
/// almost-monotone estimate rules.
#[derive(Clone, Debug)]
pub struct NaiveStageInput<'a> {
    pub source: usize,
    /// Estimates at the end of the previous stage; `None` marks a vertex that
    /// has been dropped. Vertices beyond the end are new this stage.
    pub prev: &'a [Option<i64>],
    pub vertices: usize,
    /// The first `originals` vertex ids are graph vertices; the rest are
    /// component vertices, which are never dropped or dragged.
    pub originals: usize,
    /// Emulator edges after this stage's changes.
    pub edges: &'a [WeightedEdge],
    /// Vertices whose estimate is lowered by `light_drop`.
    pub became_light: &'a [usize],
    pub light_drop: i64,
    /// `(center, core, reset offset)` for centers that joined an active set.
    pub joins: &'a [(usize, Vec<usize>, i64)],
    /// `(center, core)` for every active center after this stage.
    pub active: &'a [(usize, Vec<usize>)],
    pub drag_offset: i64,
    pub depth: i64,
}

/// Evaluates one stage straight from the rule list, with full passes until
/// nothing changes. Returns the new estimates with `None` for dropped vertices.
/// A component vertex is dropped only once nothing connects it to the source.
pub fn naive_mes_stage(input: &NaiveStageInput<'_>) -> Vec<Option<i64>> {
    const GONE: i64 = i64::MAX;
    let n = input.vertices;
    let prev_of = |v: usize| -> i64 {
        if v < input.prev.len() {
            input.prev[v].unwrap_or(GONE)
        } else {
            0
        }
    };
    let mut a: Vec<i64> = (0..n).map(prev_of).collect();
    for &v in input.became_light {
        if v != input.source && a[v] != GONE {
            a[v] -= input.light_drop;
        }
    }
    for (c, core, offset) in input.joins {
        if *c == input.source || a[*c] == GONE {
            continue;
        }
        let best = core
            .iter()
            .map(|&v| prev_of(v))
            .filter(|&x| x != GONE)
            .max()
            .expect("core contains its center");
        a[*c] = best - offset;
    }
    a[input.source] = 0;

    let live: Vec<bool> = (0..n).map(|v| a[v] != GONE).collect();
    let mut adj = vec![Vec::new(); n];
    for e in input.edges {
        if live[e.u] && live[e.v] {
            adj[e.u].push((e.v, e.w));
            adj[e.v].push((e.u, e.w));
        }
    }
    // plain reachability decides which vertices end unbounded
    let mut reach = vec![false; n];
    reach[input.source] = true;
    let mut stack = vec![input.source];
    while let Some(x) = stack.pop() {
        for &(y, _) in &adj[x] {
            if !reach[y] {
                reach[y] = true;
                stack.push(y);
            }
        }
    }
    let lower = {
        let mut dist = vec![GONE; n];
        dist[input.source] = 0;
        let mut changed = true;
        while changed {
            changed = false;
            for x in 0..n {
                for &(y, w) in &adj[x] {
                    if dist[x] != GONE && dist[x] + w < dist[y] {
                        dist[y] = dist[x] + w;
                        changed = true;
                    }
                }
            }
        }
        dist
    };
    let mut x: Vec<i64> = (0..n)
        .map(|v| {
            if !live[v] || !reach[v] {
                GONE
            } else {
                a[v].max(lower[v])
            }
        })
        .collect();
    let guard = 10_000_000usize;
    let mut passes = 0;
    loop {
        let mut changed = false;
        for v in 0..n {
            if v == input.source || x[v] == GONE {
                continue;
            }
            let support = adj[v]
                .iter()
                .filter(|(u, _)| x[*u] != GONE)
                .map(|&(u, w)| x[u] + w)
                .min()
                .unwrap_or(GONE);
            if support != GONE && support > x[v] {
                x[v] = support;
                changed = true;
            }
        }
        passes += 1;
        assert!(passes < guard, "naive consolidation did not settle");
        if !changed {
            break;
        }
    }

    let pre = a;
    let mut core_of: BTreeMap<usize, &Vec<usize>> = BTreeMap::new();
    for (c, core) in input.active {
        core_of.insert(*c, core);
    }
    loop {
        let mut changed = false;
        for (&c, core) in &core_of {
            if x[c] == GONE || x[c] <= pre[c] {
                continue;
            }
            let floor = x[c] - input.drag_offset;
            for &v in core.iter() {
                if v == input.source || v >= input.originals || x[v] == GONE {
                    continue;
                }
                if floor > x[v] {
                    x[v] = floor;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    (0..n)
        .map(|v| {
            if x[v] == GONE || (v < input.originals && x[v] > input.depth) {
                None
            } else {
                Some(x[v])
            }
        })
        .collect()
}
