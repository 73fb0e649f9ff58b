//! JSON bodies shared by the HTTP service and its client.

use serde::{Deserialize, Serialize};

use crate::graph::{Dist, VertexId};
use crate::workload::{Aggregate, RunParams};

/// Graph and trace travel as file text so parse errors keep line numbers.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunRequest {
    pub graph: String,
    pub trace: Option<String>,
    pub script: Option<String>,
    #[serde(default)]
    pub params: RunParams,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunResponse {
    pub report: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub trace_len: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub graph: String,
    pub trace: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CreateSession {
    pub graph: String,
    #[serde(default)]
    pub params: RunParams,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: u64,
    pub n: usize,
    pub m: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DeleteRequest {
    pub u: VertexId,
    pub v: VertexId,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeleteResponse {
    pub stage: u64,
    pub applied_to_star: bool,
    pub skipped: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApspAnswer {
    pub u: VertexId,
    pub v: VertexId,
    /// `None` when disconnected.
    pub distance: Option<Dist>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathAnswer {
    pub path: Vec<VertexId>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SsspReply {
    pub v: VertexId,
    /// Exact rational text such as `7/2`, or `inf`.
    pub answer: String,
    pub value: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckReply {
    pub stage: u64,
    pub properties: Vec<String>,
    pub violations: Vec<Violation>,
    pub apsp_stretch: Option<f64>,
    pub sssp_stretch: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Violation {
    pub property: String,
    pub detail: String,
}

pub type StatsReply = Aggregate;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub line: Option<usize>,
}
