//! Seeded instance generator. ChaCha8 keeps outputs identical across machines.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::Edge;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("need m >= n - 1 for a connected graph (n={n}, m={m})")]
    TooFewEdges { n: usize, m: usize },
    #[error("a simple graph on {n} vertices has at most {max} edges, asked for {m}")]
    TooManyEdges { n: usize, m: usize, max: usize },
    #[error("trace length {len} exceeds edge count {m}")]
    TraceTooLong { len: usize, m: usize },
    #[error("need at least one vertex")]
    Empty,
}

/// A connected simple graph: a random spanning tree plus uniform extra edges.
pub fn random_connected(seed: u64, n: usize, m: usize) -> Result<Vec<Edge>, GenError> {
    if n == 0 {
        return Err(GenError::Empty);
    }
    if m + 1 < n {
        return Err(GenError::TooFewEdges { n, m });
    }
    let max = n * (n - 1) / 2;
    if m > max {
        return Err(GenError::TooManyEdges { n, m, max });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges = std::collections::BTreeSet::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        edges.insert(Edge::new(order[i], order[j]));
    }
    if m * 2 > max {
        let mut rest: Vec<Edge> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| Edge::new(a, b)))
            .filter(|e| !edges.contains(e))
            .collect();
        rest.shuffle(&mut rng);
        let need = m - edges.len();
        edges.extend(rest.into_iter().take(need));
    } else {
        while edges.len() < m {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b {
                edges.insert(Edge::new(a, b));
            }
        }
    }
    let mut edges: Vec<Edge> = edges.into_iter().collect();
    edges.shuffle(&mut rng);
    Ok(edges)
}

/// The first `len` edges of a seeded permutation of `edges`.
pub fn random_trace(seed: u64, edges: &[Edge], len: usize) -> Result<Vec<Edge>, GenError> {
    if len > edges.len() {
        return Err(GenError::TraceTooLong { len, m: edges.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut trace = edges.to_vec();
    trace.shuffle(&mut rng);
    trace.truncate(len);
    Ok(trace)
}

/// A path `0 - 1 - ... - (n-1)`.
pub fn path(n: usize) -> Vec<Edge> {
    (1..n).map(|i| Edge::new(i - 1, i)).collect()
}

pub fn cycle(n: usize) -> Vec<Edge> {
    let mut e = path(n);
    if n > 2 {
        e.push(Edge::new(n - 1, 0));
    }
    e
}

pub fn clique(vertices: &[usize]) -> Vec<Edge> {
    let mut e = Vec::new();
    for (i, &a) in vertices.iter().enumerate() {
        for &b in &vertices[i + 1..] {
            e.push(Edge::new(a, b));
        }
    }
    e
}

/// A path with `chords` extra edges, each spanning at most `span` steps.
/// Keeps the diameter close to `n / span`.
pub fn banded(seed: u64, n: usize, chords: usize, span: usize) -> Result<Vec<Edge>, GenError> {
    if n == 0 {
        return Err(GenError::Empty);
    }
    let span = span.max(2).min(n.saturating_sub(1).max(1));
    let max = (1..=span).map(|d| n.saturating_sub(d)).sum::<usize>();
    if n - 1 + chords > max {
        return Err(GenError::TooManyEdges { n, m: n - 1 + chords, max });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: std::collections::BTreeSet<Edge> = path(n).into_iter().collect();
    while edges.len() < n - 1 + chords {
        let a = rng.random_range(0..n);
        let b = a + rng.random_range(2..=span);
        if b < n {
            edges.insert(Edge::new(a, b));
        }
    }
    let mut edges: Vec<Edge> = edges.into_iter().collect();
    edges.shuffle(&mut rng);
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DecrementalGraph;

    #[test]
    fn deterministic() {
        assert_eq!(
            random_connected(7, 30, 60).unwrap(),
            random_connected(7, 30, 60).unwrap()
        );
        let e = random_connected(7, 30, 60).unwrap();
        assert_eq!(random_trace(1, &e, 20).unwrap(), random_trace(1, &e, 20).unwrap());
    }

    #[test]
    fn produces_valid_graphs() {
        for seed in 0..20 {
            let e = random_connected(seed, 25, 40).unwrap();
            assert_eq!(e.len(), 40);
            assert!(DecrementalGraph::new(25, &e).is_ok());
        }
        let dense = random_connected(3, 8, 27).unwrap();
        assert!(DecrementalGraph::new(8, &dense).is_ok());
    }

    #[test]
    fn tree_deletions_are_all_skipped() {
        let e = random_connected(5, 10, 9).unwrap();
        let mut g = DecrementalGraph::new(10, &e).unwrap();
        for d in random_trace(5, &e, 9).unwrap() {
            assert!(g.delete_edge(d).unwrap().skipped);
        }
        assert_eq!(g.m_star(), 9);
    }

    #[test]
    fn banded_stays_long() {
        let e = banded(2, 120, 60, 3).unwrap();
        assert_eq!(e.len(), 179);
        assert!(e.iter().all(|x| x.v - x.u <= 3));
        let g = DecrementalGraph::new(120, &e).unwrap();
        assert!(g.dist_star(0, 119) >= 119 / 3);
        assert!(banded(2, 5, 10, 2).is_err());
    }

    #[test]
    fn rejects_infeasible() {
        assert!(random_connected(0, 10, 8).is_err());
        assert!(random_connected(0, 4, 7).is_err());
        assert!(random_trace(0, &path(3), 3).is_err());
    }
}
