//! Scripted workloads: a session holding the structures, a command script,
//! and a line-oriented report.
//!
//! Script lines: `D u v` deletes, `QA u v` asks the all-pairs oracle,
//! `QS v` asks the single-source pipeline, `CHECK` audits everything against
//! BFS at the current stage.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::apsp::{ApspError, ApspOracle};
use crate::check;
use crate::generate::{random_connected, random_trace, GenError};
use crate::graph::{DecrementalGraph, DeletionReport, Dist, Edge, GraphError, VertexId, INF};
use crate::io::{content_lines, err, format_graph, format_trace, parse_pair, GraphFile, ParseError};
use crate::oracle::{OracleSnapshot, UNREACHABLE};
use crate::sssp::{DepthMode, SsspAnswer, SsspConfig, SsspError, SsspPipeline};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Apsp,
    Sssp,
    #[default]
    Both,
}

impl Mode {
    fn apsp(self) -> bool {
        self != Mode::Sssp
    }

    fn sssp(self) -> bool {
        self != Mode::Apsp
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Apsp => "apsp",
            Mode::Sssp => "sssp",
            Mode::Both => "both",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "apsp" => Ok(Mode::Apsp),
            "sssp" => Ok(Mode::Sssp),
            "both" => Ok(Mode::Both),
            _ => Err(format!("unknown mode {s:?}, expected apsp, sssp or both")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunParams {
    /// `1/ε`.
    pub inv_eps: u64,
    pub mu: Option<u64>,
    pub k: Option<u32>,
    pub mode: Mode,
    pub source: VertexId,
    pub depth_literal: bool,
    /// Run a `CHECK` after every this many deletions.
    pub check_every: Option<u64>,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams { inv_eps: 2, mu: None, k: None, mode: Mode::Both, source: 0, depth_literal: false, check_every: None }
    }
}

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("script {0}")]
    Script(ParseError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Apsp(#[from] ApspError),
    #[error(transparent)]
    Sssp(#[from] SsspError),
    #[error("{0} queries need mode {0} or both")]
    ModeOff(&'static str),
    #[error("vertex {0} is out of range")]
    BadVertex(VertexId),
    #[error("script line {line}: deletion ({u}, {v}) is out of trace order")]
    NotInTrace { line: usize, u: VertexId, v: VertexId },
    #[error("stage {stage}: {property} violated: {detail}")]
    Violation { stage: u64, property: String, detail: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Delete(Edge),
    QueryApsp(VertexId, VertexId),
    QuerySssp(VertexId),
    Check,
}

/// Commands with their script line numbers. Vertices must be below `n`.
pub fn parse_script(text: &str, n: usize) -> Result<Vec<(usize, Command)>, ParseError> {
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        let (verb, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        let rest = rest.trim();
        let cmd = match verb {
            "D" | "QA" => {
                let (u, v) = parse_pair(line, rest)?;
                if u >= n || v >= n {
                    return Err(err(line, format!("vertex out of range for n={n}")));
                }
                if verb == "D" { Command::Delete(Edge::new(u, v)) } else { Command::QueryApsp(u, v) }
            }
            "QS" => {
                let v: VertexId = rest
                    .parse()
                    .map_err(|_| err(line, format!("not a nonnegative integer: {rest:?}")))?;
                if v >= n {
                    return Err(err(line, format!("vertex out of range for n={n}")));
                }
                Command::QuerySssp(v)
            }
            "CHECK" if rest.is_empty() => Command::Check,
            _ => return Err(err(line, format!("unknown command {l:?}"))),
        };
        out.push((line, cmd));
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CheckOutcome {
    pub stage: u64,
    /// `(property, detail)`.
    pub violations: Vec<(String, String)>,
    pub properties: Vec<String>,
    pub apsp_stretch: Option<f64>,
    pub sssp_stretch: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub stage: u64,
    pub deletions: u64,
    pub skipped: u64,
    pub apsp_queries: u64,
    pub sssp_queries: u64,
    pub checks: u64,
    pub violations: u64,
    pub max_apsp_stretch: f64,
    pub max_sssp_stretch: f64,
    pub apsp_trees: usize,
    pub apsp_tree_scans: u64,
    pub apsp_cover_scans: u64,
    pub sssp_base_depth: Dist,
    pub sssp_base_scans: u64,
    pub sssp_cover_scans: u64,
    pub sssp_scales: usize,
    pub sssp_scale_scans: u64,
    pub emulator_edges: usize,
    pub estimate_changes: u64,
}

/// Live structures for one graph.
pub struct Session {
    params: RunParams,
    apsp: Option<ApspOracle>,
    sssp: Option<SsspPipeline>,
    apsp_centers: Option<Vec<BTreeSet<VertexId>>>,
    sssp_centers: Option<Vec<BTreeSet<VertexId>>>,
    deletions: u64,
    skipped: u64,
    apsp_queries: u64,
    sssp_queries: u64,
    checks: u64,
    violations: u64,
    max_apsp_stretch: f64,
    max_sssp_stretch: f64,
}

impl Session {
    pub fn new(graph: &GraphFile, params: RunParams) -> Result<Session, WorkloadError> {
        let apsp = if params.mode.apsp() {
            let g = DecrementalGraph::new(graph.n, &graph.edges)?;
            Some(ApspOracle::build(g, 1.0 / params.inv_eps as f64)?)
        } else {
            None
        };
        let sssp = if params.mode.sssp() {
            let cfg = SsspConfig {
                inv_eps: params.inv_eps,
                mu: params.mu,
                k: params.k,
                depth_mode: if params.depth_literal { DepthMode::Literal } else { DepthMode::Corrected },
                plan: None,
                audit: true,
            };
            let g = DecrementalGraph::new(graph.n, &graph.edges)?;
            Some(SsspPipeline::build(g, params.source, &cfg)?)
        } else {
            None
        };
        Ok(Session {
            params,
            apsp,
            sssp,
            apsp_centers: None,
            sssp_centers: None,
            deletions: 0,
            skipped: 0,
            apsp_queries: 0,
            sssp_queries: 0,
            checks: 0,
            violations: 0,
            max_apsp_stretch: 1.0,
            max_sssp_stretch: 1.0,
        })
    }

    pub fn params(&self) -> &RunParams {
        &self.params
    }

    pub fn graph(&self) -> &DecrementalGraph {
        match (&self.apsp, &self.sssp) {
            (Some(a), _) => a.graph(),
            (_, Some(s)) => s.graph(),
            _ => unreachable!("a session runs at least one mode"),
        }
    }

    pub fn apsp(&self) -> Option<&ApspOracle> {
        self.apsp.as_ref()
    }

    pub fn sssp(&self) -> Option<&SsspPipeline> {
        self.sssp.as_ref()
    }

    pub fn delete(&mut self, e: Edge) -> Result<DeletionReport, WorkloadError> {
        let mut report = None;
        if let Some(a) = &mut self.apsp {
            report = Some(a.delete(e)?);
        }
        if let Some(s) = &mut self.sssp {
            report = Some(s.delete(e)?);
        }
        let report = report.expect("a session runs at least one mode");
        self.deletions += 1;
        self.skipped += report.skipped as u64;
        Ok(report)
    }

    fn check_vertex(&self, v: VertexId) -> Result<(), WorkloadError> {
        if v >= self.graph().n() { Err(WorkloadError::BadVertex(v)) } else { Ok(()) }
    }

    pub fn query_apsp(&mut self, u: VertexId, v: VertexId) -> Result<Dist, WorkloadError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        let a = self.apsp.as_ref().ok_or(WorkloadError::ModeOff("apsp"))?;
        self.apsp_queries += 1;
        Ok(a.query(u, v))
    }

    pub fn query_path(&mut self, u: VertexId, v: VertexId) -> Result<Vec<VertexId>, WorkloadError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        let a = self.apsp.as_ref().ok_or(WorkloadError::ModeOff("apsp"))?;
        self.apsp_queries += 1;
        Ok(a.query_path(u, v)?)
    }

    pub fn query_sssp(&mut self, v: VertexId) -> Result<SsspAnswer, WorkloadError> {
        self.check_vertex(v)?;
        let s = self.sssp.as_ref().ok_or(WorkloadError::ModeOff("sssp"))?;
        self.sssp_queries += 1;
        Ok(s.query(v))
    }

    /// Audits every live structure against BFS at the current stage.
    pub fn check(&mut self) -> CheckOutcome {
        let snap = OracleSnapshot::capture(self.graph());
        let mut out = CheckOutcome { stage: self.graph().stage(), ..Default::default() };
        let add = |out: &mut CheckOutcome, property: &str, found: Vec<String>| {
            if !out.properties.iter().any(|p| p == property) {
                out.properties.push(property.to_string());
            }
            out.violations.extend(found.into_iter().map(|d| (property.to_string(), d)));
        };
        if let Some(a) = &self.apsp {
            add(&mut out, "apsp-sandwich", check::apsp(a, &snap));
            add(&mut out, "apsp-cover", check::cover(a.cover(), &snap, self.apsp_centers.as_deref()));
            self.apsp_centers = Some(check::centers(a.cover()));
            out.apsp_stretch = Some(apsp_stretch(a, &snap));
        }
        if let Some(p) = &self.sssp {
            add(&mut out, "sssp-sandwich", check::sssp(p, &snap));
            add(&mut out, "sssp-cover", check::cover(p.cover(), &snap, self.sssp_centers.as_deref()));
            self.sssp_centers = Some(check::centers(p.cover()));
            for sc in p.scales() {
                add(&mut out, "contraction", check::contraction(sc.heavy_light(), &snap));
                add(&mut out, "clusters", check::clusters(sc.clusters(), &snap));
                add(&mut out, "scale-bounds", check::scale(p, sc, &snap));
                add(&mut out, "fixpoint", check::replay(sc));
            }
            out.sssp_stretch = Some(sssp_stretch(p, &snap));
        }
        self.checks += 1;
        self.violations += out.violations.len() as u64;
        if let Some(s) = out.apsp_stretch {
            self.max_apsp_stretch = self.max_apsp_stretch.max(s);
        }
        if let Some(s) = out.sssp_stretch {
            self.max_sssp_stretch = self.max_sssp_stretch.max(s);
        }
        out
    }

    pub fn aggregate(&self) -> Aggregate {
        let mut a = Aggregate {
            stage: self.graph().stage(),
            deletions: self.deletions,
            skipped: self.skipped,
            apsp_queries: self.apsp_queries,
            sssp_queries: self.sssp_queries,
            checks: self.checks,
            violations: self.violations,
            max_apsp_stretch: self.max_apsp_stretch,
            max_sssp_stretch: self.max_sssp_stretch,
            ..Default::default()
        };
        if let Some(o) = &self.apsp {
            let s = o.stats();
            a.apsp_trees = s.trees;
            a.apsp_tree_scans = s.tree_scans;
            a.apsp_cover_scans = s.cover_scans;
        }
        if let Some(p) = &self.sssp {
            let s = p.stats();
            a.sssp_base_depth = s.base_depth;
            a.sssp_base_scans = s.base_scans;
            a.sssp_cover_scans = s.cover_scans;
            a.sssp_scales = s.scales.len();
            a.sssp_scale_scans = s.scales.iter().map(|x| x.tree_scans).sum();
            a.emulator_edges = s
                .scales
                .iter()
                .map(|x| x.emulator.cluster_edges + x.emulator.component_edges + x.emulator.source_edges)
                .sum();
            a.estimate_changes = s.scales.iter().map(|x| x.estimates.changes).sum();
        }
        a
    }
}

fn apsp_stretch(o: &ApspOracle, snap: &OracleSnapshot) -> f64 {
    let mut worst: f64 = 1.0;
    for u in 0..snap.n {
        let d = snap.bfs_g(u);
        for v in 0..snap.n {
            if d[v] != UNREACHABLE && d[v] > 0 {
                let est = o.query(u, v);
                if est != INF {
                    worst = worst.max(est as f64 / d[v] as f64);
                }
            }
        }
    }
    worst
}

fn sssp_stretch(p: &SsspPipeline, snap: &OracleSnapshot) -> f64 {
    let d = snap.bfs_g(p.source());
    let mut worst: f64 = 1.0;
    for v in 0..snap.n {
        if d[v] != UNREACHABLE && d[v] > 0 {
            if let Some(x) = p.query(v).as_f64() {
                worst = worst.max(x / d[v] as f64);
            }
        }
    }
    worst
}

/// Runs a workload and renders the report. Without a script the trace is
/// replayed; with both, script deletions must follow the trace order.
pub fn run(
    graph: &GraphFile,
    trace: Option<&[Edge]>,
    script: Option<&str>,
    params: &RunParams,
) -> Result<String, WorkloadError> {
    let commands = match script {
        Some(text) => parse_script(text, graph.n).map_err(WorkloadError::Script)?,
        None => trace.unwrap_or(&[]).iter().enumerate().map(|(i, &e)| (i + 1, Command::Delete(e))).collect(),
    };
    if let (Some(trace), Some(_)) = (trace, script) {
        let mut next = 0;
        for (line, c) in &commands {
            if let Command::Delete(e) = c {
                match trace[next..].iter().position(|t| Edge::new(t.u, t.v) == *e) {
                    Some(i) => next += i + 1,
                    None => return Err(WorkloadError::NotInTrace { line: *line, u: e.u, v: e.v }),
                }
            }
        }
    }
    let mut session = Session::new(graph, params.clone())?;
    let mut out = String::new();
    let g = session.graph();
    let _ = writeln!(
        out,
        "run n={} m={} mode={} inv_eps={} mu={} k={} source={} depth={}",
        g.n(),
        g.m(),
        params.mode.name(),
        params.inv_eps,
        session.sssp().map_or("-".to_string(), |p| p.mu().to_string()),
        session.sssp().map_or("-".to_string(), |p| p.k().to_string()),
        params.source,
        if params.depth_literal { "literal" } else { "corrected" },
    );
    for (_, cmd) in commands {
        match cmd {
            Command::Delete(e) => {
                let r = session.delete(e)?;
                let _ = writeln!(
                    out,
                    "op=delete stage={} u={} v={} applied={} skipped={}",
                    r.stage, r.edge.u, r.edge.v, r.applied_to_star, r.skipped
                );
                if params.check_every.is_some_and(|n| n > 0 && r.stage % n == 0) {
                    render_check(&mut out, &mut session)?;
                }
            }
            Command::QueryApsp(u, v) => {
                let d = session.query_apsp(u, v)?;
                let shown = if d == INF { "inf".to_string() } else { d.to_string() };
                let _ = writeln!(out, "op=qa stage={} u={u} v={v} answer={shown}", session.graph().stage());
            }
            Command::QuerySssp(v) => {
                let a = session.query_sssp(v)?;
                let _ = writeln!(out, "op=qs stage={} v={v} answer={a}", session.graph().stage());
            }
            Command::Check => render_check(&mut out, &mut session)?,
        }
    }
    let a = session.aggregate();
    out.push_str("[aggregate]\n");
    let json = serde_json::to_value(&a).expect("plain struct");
    for (k, v) in json.as_object().expect("struct serializes to an object") {
        let _ = writeln!(out, "{k}={v}");
    }
    Ok(out)
}

/// Graph and trace file contents for a seeded instance.
pub fn gen(seed: u64, n: usize, m: usize, trace_len: usize) -> Result<(String, String), GenError> {
    let edges = random_connected(seed, n, m)?;
    let trace = random_trace(seed, &edges, trace_len)?;
    Ok((format_graph(n, &edges), format_trace(&trace)))
}

fn render_check(out: &mut String, session: &mut Session) -> Result<(), WorkloadError> {
    let c = session.check();
    if let Some((property, detail)) = c.violations.first() {
        return Err(WorkloadError::Violation { stage: c.stage, property: property.clone(), detail: detail.clone() });
    }
    let fmt = |s: Option<f64>| s.map_or("-".to_string(), |x| format!("{x:.4}"));
    let _ = writeln!(
        out,
        "op=check stage={} verdict=ok violations=0 properties={} apsp_stretch={} sssp_stretch={}",
        c.stage,
        c.properties.join(","),
        fmt(c.apsp_stretch),
        fmt(c.sssp_stretch)
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{path, random_connected, random_trace};

    fn p5() -> GraphFile {
        GraphFile { n: 5, edges: path(5) }
    }

    #[test]
    fn script_parsing() {
        let cmds = parse_script("D 0 1\nQA 1 2 # c\n\nQS 4\nCHECK\n", 5).unwrap();
        assert_eq!(
            cmds,
            vec![
                (1, Command::Delete(Edge::new(0, 1))),
                (2, Command::QueryApsp(1, 2)),
                (4, Command::QuerySssp(4)),
                (5, Command::Check)
            ]
        );
        assert_eq!(parse_script("QS 5", 5).unwrap_err().line, 1);
        assert_eq!(parse_script("CHECK\nFOO 1", 5).unwrap_err().line, 2);
        assert_eq!(parse_script("D 1", 5).unwrap_err().line, 1);
    }

    #[test]
    fn empty_script_gives_header_and_aggregate() {
        let r = run(&p5(), None, Some(""), &RunParams::default()).unwrap();
        let lines: Vec<&str> = r.lines().collect();
        assert!(lines[0].starts_with("run n=5 m=4 mode=both"));
        assert_eq!(lines[1], "[aggregate]");
        assert!(r.contains("violations=0"));
    }

    #[test]
    fn path_query_is_within_stretch() {
        let r = run(&p5(), None, Some("QS 4\nQA 0 4\nCHECK\n"), &RunParams::default()).unwrap();
        assert!(r.contains("op=qs stage=0 v=4 answer=4"));
        assert!(r.contains("op=qa stage=0 u=0 v=4 answer="));
        assert!(r.contains("verdict=ok"));
    }

    #[test]
    fn deletions_must_follow_trace() {
        let trace = vec![Edge::new(0, 1), Edge::new(2, 3)];
        let ok = run(&p5(), Some(&trace), Some("D 0 1\nD 3 2\n"), &RunParams::default());
        assert!(ok.is_ok());
        let bad = run(&p5(), Some(&trace), Some("D 2 3\nD 0 1\n"), &RunParams::default());
        assert!(matches!(bad, Err(WorkloadError::NotInTrace { line: 2, .. })));
    }

    #[test]
    fn mode_gates_queries() {
        let params = RunParams { mode: Mode::Apsp, ..Default::default() };
        assert!(matches!(run(&p5(), None, Some("QS 1"), &params), Err(WorkloadError::ModeOff("sssp"))));
    }

    #[test]
    fn trace_replay_with_checks_is_deterministic() {
        let edges = random_connected(3, 30, 80).unwrap();
        let trace = random_trace(3, &edges, 40).unwrap();
        let graph = GraphFile { n: 30, edges };
        let params = RunParams { check_every: Some(10), inv_eps: 4, ..Default::default() };
        let a = run(&graph, Some(&trace), None, &params).unwrap();
        let b = run(&graph, Some(&trace), None, &params).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.matches("op=check").count(), 4);
        assert!(a.contains("deletions=40"));
    }

    #[test]
    fn generated_files_round_trip() {
        let (g, t) = gen(11, 10, 9, 9).unwrap();
        assert_eq!(gen(11, 10, 9, 9).unwrap(), (g.clone(), t.clone()));
        let graph = crate::io::parse_graph(&g).unwrap();
        let trace = crate::io::parse_trace(&t).unwrap();
        let r = run(&graph, Some(&trace), None, &RunParams::default()).unwrap();
        assert_eq!(r.matches("skipped=true").count(), 9);
        assert!(gen(1, 10, 8, 0).is_err());
    }

    #[test]
    fn session_reports_bad_vertices() {
        let mut s = Session::new(&p5(), RunParams::default()).unwrap();
        assert!(matches!(s.query_apsp(0, 9), Err(WorkloadError::BadVertex(9))));
        assert_eq!(s.query_path(0, 3).unwrap(), vec![0, 1, 2, 3]);
        s.delete(Edge::new(1, 2)).unwrap();
        assert_eq!(s.query_sssp(3).unwrap(), SsspAnswer::Infinite);
        assert!(s.check().violations.is_empty());
    }
}
