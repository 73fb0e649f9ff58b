//! Brute-force audits of the live structures against an oracle snapshot.
//! Each returns human-readable violations; empty means clean.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;

use crate::apsp::ApspOracle;
use crate::clustering::{ClusterEvent, ClusterState};
use crate::cover::LayeredCover;
use crate::graph::{Edge, VertexId, INF};
use crate::heavy_light::HeavyLightState;
use crate::oracle::{OracleSnapshot, UNREACHABLE};
use crate::sssp::{Scale, SsspAnswer, SsspPipeline};

/// Sandwich over all pairs, plus path validity.
pub fn apsp(o: &ApspOracle, snap: &OracleSnapshot) -> Vec<String> {
    let mut out = Vec::new();
    let eps = o.epsilon();
    for u in 0..snap.n {
        let d = snap.bfs_g(u);
        for v in 0..snap.n {
            let est = o.query(u, v);
            if d[v] == UNREACHABLE {
                if est != INF {
                    out.push(format!("apsp {u}-{v}: disconnected but answered {est}"));
                }
                continue;
            }
            if est < d[v] || est as f64 > (1.0 + eps) * d[v] as f64 + 1e-9 {
                out.push(format!("apsp {u}-{v}: answered {est}, distance {}", d[v]));
            }
            out.extend(path(o, u, v, est));
        }
    }
    out
}

fn path(o: &ApspOracle, u: VertexId, v: VertexId, est: u64) -> Option<String> {
    let p = match o.query_path(u, v) {
        Ok(p) => p,
        Err(e) => return Some(format!("path {u}-{v}: {e}")),
    };
    let distinct: BTreeSet<_> = p.iter().collect();
    let ok = p.first() == Some(&u)
        && p.last() == Some(&v)
        && distinct.len() == p.len()
        && (p.len() as u64) - 1 <= est
        && p.windows(2).all(|w| o.graph().in_g(Edge::new(w[0], w[1])));
    (!ok).then(|| format!("path {u}-{v}: {p:?} invalid for estimate {est}"))
}

/// Size bound, covering radius, nearest light pivot and pivot lightness.
/// `before` holds each layer's centers at the previous check.
pub fn cover(cover: &LayeredCover, snap: &OracleSnapshot, before: Option<&[BTreeSet<VertexId>]>) -> Vec<String> {
    let mut out = Vec::new();
    let n = snap.n;
    let dist = snap.all_pairs_star();
    let mu = cover.mu();
    for j in 0..=cover.top_layer() {
        let r = cover.radius(j);
        if cover.centers(j).len() as u64 * r > 8 * n as u64 {
            out.push(format!("cover layer {j}: {} centers", cover.centers(j).len()));
        }
        if let Some(prev) = before.and_then(|b| b.get(j)) {
            if !prev.is_subset(cover.centers(j)) {
                out.push(format!("cover layer {j}: a center was dropped"));
            }
        }
        let light_centers: Vec<VertexId> =
            cover.centers(j).iter().copied().filter(|&c| snap.is_light(c, mu, r)).collect();
        for v in 0..n {
            let light = snap.is_light(v, mu, 2 * r);
            match cover.pivot(j, v) {
                Some(p) => {
                    let best = light_centers.iter().map(|&c| dist[v][c]).min();
                    if dist[v][p] > r || Some(dist[v][p]) != best || cover.pivot_dist(j, v) != Some(dist[v][p]) {
                        out.push(format!("cover layer {j}: pivot {p} of {v} at {}", dist[v][p]));
                    }
                    if light && !snap.is_light(p, mu, r) {
                        out.push(format!("cover layer {j}: pivot {p} of light {v} is heavy"));
                    }
                }
                None if light => out.push(format!("cover layer {j}: light {v} has no pivot")),
                None => {}
            }
        }
    }
    out
}

pub fn centers(cover: &LayeredCover) -> Vec<BTreeSet<VertexId>> {
    (0..=cover.top_layer()).map(|j| cover.centers(j).clone()).collect()
}

/// Heavy vertices are near-heavy, the tracked components match the induced
/// ones, and contracting them shortens no distance by more than `8(r+τ)m/μ`.
pub fn contraction(hl: &HeavyLightState, snap: &OracleSnapshot) -> Vec<String> {
    let mut out = Vec::new();
    let heavy = hl.near_heavy();
    for v in 0..snap.n {
        if !snap.is_light(v, Some(hl.mu()), hl.r()) && !heavy.contains(&v) {
            out.push(format!("heavy {v} is near-light"));
        }
    }
    let mut tracked: Vec<Vec<VertexId>> =
        hl.tracker().components().values().map(|s| s.iter().copied().collect()).collect();
    tracked.sort();
    if tracked != snap.induced_components(&heavy) {
        out.push("tracked components differ from the induced ones".into());
    }
    let bound = hl.contraction_error_bound(snap.star_edges.len() as u64);
    let contracted = snap.contracted_all_pairs(&heavy);
    for u in 0..snap.n {
        let exact = snap.bfs_all(u);
        for v in 0..snap.n {
            let gap = exact[v] - contracted[u][v];
            if Ratio::from_integer(gap) > bound {
                out.push(format!("contraction {u}-{v}: gap {gap} above {bound}"));
            }
        }
    }
    out
}

/// Core and cluster balls, the size sandwich, and strict separation of each
/// active set.
pub fn clusters(cs: &ClusterState, snap: &OracleSnapshot) -> Vec<String> {
    let mut out = Vec::new();
    let n = snap.n;
    let k = cs.k();
    let dist: BTreeMap<VertexId, Vec<u64>> = cs.centers().map(|c| (c, snap.bfs_all(c))).collect();
    for c in cs.centers() {
        let heavy = !snap.is_light(c, Some(cs.mu()), 2 * cs.radius(k + 1));
        if cs.level(c).is_none() != heavy {
            out.push(format!("cluster {c}: level {:?} but heavy={heavy}", cs.level(c)));
        }
        let Some(i) = cs.level(c) else { continue };
        let (core, cluster) = (cs.core(c).unwrap_or_default(), cs.cluster(c).unwrap_or_default());
        let ball = |r| (0..n).filter(|&v| dist[&c][v] <= r).collect::<Vec<_>>();
        if core != ball(cs.radius(i as u32)) || cluster != ball(cs.radius(i as u32 + 1)) {
            out.push(format!("cluster {c}: core or cluster is not the ball"));
        }
        let lo = (core.len() as u128).pow(k) >= (n as u128).pow(i as u32);
        let hi = (cluster.len() as u128).pow(k) <= (n as u128).pow(i as u32 + 1);
        if !lo || !hi || core.len() > cluster.len() {
            out.push(format!("cluster {c}: sizes {} / {} at level {i}", core.len(), cluster.len()));
        }
    }
    for i in 0..=k as usize {
        let sep = 2 * cs.radius(i as u32);
        let a: Vec<VertexId> = cs.active(i).iter().copied().collect();
        for (x, &p) in a.iter().enumerate() {
            for &q in &a[x + 1..] {
                if dist[&p][q] <= sep {
                    out.push(format!("active {p} and {q} at level {i} are {} apart", dist[&p][q]));
                }
            }
        }
    }
    out
}

/// Remembers levels and departures so monotonicity and never-rejoin can be
/// checked stage by stage.
#[derive(Clone, Debug, Default)]
pub struct ClusterWatch {
    levels: BTreeMap<VertexId, Option<usize>>,
    left: BTreeSet<(VertexId, usize)>,
}

impl ClusterWatch {
    pub fn new(cs: &ClusterState) -> ClusterWatch {
        ClusterWatch { levels: cs.centers().map(|c| (c, cs.level(c))).collect(), left: BTreeSet::new() }
    }

    pub fn observe(&mut self, cs: &ClusterState, events: &[ClusterEvent]) -> Vec<String> {
        let mut out = Vec::new();
        for (&c, &old) in &self.levels {
            if let Some(i) = old {
                if !cs.level(c).is_some_and(|l| l <= i) {
                    out.push(format!("center {c} rose from level {i} to {:?}", cs.level(c)));
                }
            }
        }
        for e in events {
            match *e {
                ClusterEvent::Left { c, level } => {
                    self.left.insert((c, level));
                }
                ClusterEvent::Joined { c, level } if self.left.contains(&(c, level)) => {
                    out.push(format!("center {c} rejoined level {level}"));
                }
                _ => {}
            }
        }
        self.levels = cs.centers().map(|c| (c, cs.level(c))).collect();
        out
    }
}

/// End-to-end sandwich with the caller's `ε` for every vertex.
pub fn sssp(p: &SsspPipeline, snap: &OracleSnapshot) -> Vec<String> {
    let mut out = Vec::new();
    let d = snap.bfs_g(p.source());
    let top = Ratio::new(p.user_inv_eps() + 1, p.user_inv_eps());
    for v in 0..snap.n {
        let a = p.query(v);
        if d[v] == UNREACHABLE {
            if a != SsspAnswer::Infinite {
                out.push(format!("sssp {v}: disconnected but answered {a}"));
            }
            continue;
        }
        let dist = Ratio::from_integer(d[v]);
        match a.ratio() {
            Some(r) if r >= dist && r <= dist * top => {}
            _ => out.push(format!("sssp {v}: answered {a}, distance {}", d[v])),
        }
    }
    out
}

/// Whether `dist` lies within `(1-2ε)d - 3ετ - 4τL^{k+1}` of the scale.
pub fn within_reliable_depth(sc: &Scale, inv_eps: u64, k: u32, dist: u64) -> bool {
    let (l, tau) = (inv_eps as i128, sc.tau() as i128);
    let rhs = (l - 2) * sc.depth() as i128 * tau - 3 * tau * l - 4 * tau * l.pow(k + 3);
    (dist as i128) * l * l <= rhs
}

/// The per-scale bounds for vertices within the reliable depth:
/// `dist - slack ≤ l̂ ≤ (1+ε)dist + 3ετ`. The slack is zero without near-heavy
/// vertices and `τmL^{k+3}/μ` otherwise.
pub fn scale(p: &SsspPipeline, sc: &Scale, snap: &OracleSnapshot) -> Vec<String> {
    let mut out = Vec::new();
    let (l, k) = (p.inv_eps() as i128, p.k());
    let tau = sc.tau() as i128;
    let slack_num = if sc.heavy_light().near_heavy().is_empty() {
        0
    } else {
        tau * snap.star_edges.len() as i128 * l.pow(k + 3)
    };
    let mu = p.mu() as i128;
    let d = snap.bfs_all(p.source());
    for v in 0..snap.n {
        if d[v] == UNREACHABLE || !within_reliable_depth(sc, p.inv_eps(), k, d[v]) {
            continue;
        }
        let dist = d[v] as i128;
        let Some(x) = sc.estimates().estimate(v) else {
            out.push(format!("scale {}: {v} at distance {dist} was dropped", sc.j()));
            continue;
        };
        let x = x as i128;
        // x·τ/L ≥ dist - slack_num/μ
        if x * tau * mu < (dist * mu - slack_num) * l {
            out.push(format!("scale {}: {v} estimate {x} under distance {dist}", sc.j()));
        }
        // x·τ/L ≤ (1+1/L)dist + 3τ/L
        if x * tau > (l + 1) * dist + 3 * tau {
            out.push(format!("scale {}: {v} estimate {x} over distance {dist}", sc.j()));
        }
    }
    if let Err(e) = sc.estimates().check_consolidated() {
        out.push(format!("scale {}: {e}", sc.j()));
    }
    out
}

/// Estimates after the last stage equal a naive replay of it. Needs a
/// pipeline built with auditing on.
pub fn replay(sc: &Scale) -> Vec<String> {
    match sc.naive_replay() {
        Some(want) if want != sc.estimates().estimates() => {
            let got = sc.estimates().estimates();
            let first = (0..want.len().max(got.len()))
                .find(|&v| want.get(v) != got.get(v))
                .unwrap_or(0);
            vec![format!(
                "scale {}: vertex {first} estimate {:?}, naive {:?}",
                sc.j(),
                got.get(first),
                want.get(first)
            )]
        }
        _ => Vec::new(),
    }
}
