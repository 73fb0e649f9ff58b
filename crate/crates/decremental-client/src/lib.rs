//! Thin async client for the decremental HTTP service.

use decremental::api::*;
use decremental::graph::VertexId;
use decremental::workload::RunParams;
use reqwest::{RequestBuilder, StatusCode};
use serde::de::DeserializeOwned;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("{error}")]
    Api { status: StatusCode, error: String, line: Option<usize> },
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Clone, Debug)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` like `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Client {
        Client { base: base.into().trim_end_matches('/').to_string(), http: reqwest::Client::new() }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn send<T: DeserializeOwned>(req: RequestBuilder) -> Result<T> {
        let res = req.send().await?;
        let status = res.status();
        if status.is_success() {
            return Ok(res.json().await?);
        }
        match res.json::<ErrorBody>().await {
            Ok(b) => Err(ClientError::Api { status, error: b.error, line: b.line }),
            Err(_) => Err(ClientError::Api { status, error: status.to_string(), line: None }),
        }
    }

    pub async fn run(&self, req: &RunRequest) -> Result<String> {
        let r: RunResponse = Self::send(self.http.post(self.url("/run")).json(req)).await?;
        Ok(r.report)
    }

    pub async fn generate(&self, seed: u64, n: usize, m: usize, trace_len: usize) -> Result<GenerateResponse> {
        let body = GenerateRequest { seed, n, m, trace_len };
        Self::send(self.http.post(self.url("/generate")).json(&body)).await
    }

    pub async fn create_session(&self, graph: &str, params: &RunParams) -> Result<SessionInfo> {
        let body = CreateSession { graph: graph.to_string(), params: params.clone() };
        Self::send(self.http.post(self.url("/sessions")).json(&body)).await
    }

    pub async fn delete(&self, id: u64, u: VertexId, v: VertexId) -> Result<DeleteResponse> {
        let url = self.url(&format!("/sessions/{id}/delete"));
        Self::send(self.http.post(url).json(&DeleteRequest { u, v })).await
    }

    pub async fn apsp(&self, id: u64, u: VertexId, v: VertexId) -> Result<ApspAnswer> {
        let url = self.url(&format!("/sessions/{id}/apsp?u={u}&v={v}"));
        Self::send(self.http.get(url)).await
    }

    pub async fn path(&self, id: u64, u: VertexId, v: VertexId) -> Result<Vec<VertexId>> {
        let url = self.url(&format!("/sessions/{id}/path?u={u}&v={v}"));
        let r: PathAnswer = Self::send(self.http.get(url)).await?;
        Ok(r.path)
    }

    pub async fn sssp(&self, id: u64, v: VertexId) -> Result<SsspReply> {
        Self::send(self.http.get(self.url(&format!("/sessions/{id}/sssp?v={v}")))).await
    }

    pub async fn check(&self, id: u64) -> Result<CheckReply> {
        Self::send(self.http.post(self.url(&format!("/sessions/{id}/check")))).await
    }

    pub async fn stats(&self, id: u64) -> Result<StatsReply> {
        Self::send(self.http.get(self.url(&format!("/sessions/{id}")))).await
    }

    pub async fn close(&self, id: u64) -> Result<()> {
        let res = self.http.delete(self.url(&format!("/sessions/{id}"))).send().await?;
        match res.status() {
            s if s.is_success() => Ok(()),
            status => {
                let b = res.json::<ErrorBody>().await.ok();
                Err(ClientError::Api {
                    status,
                    error: b.as_ref().map_or(status.to_string(), |b| b.error.clone()),
                    line: None,
                })
            }
        }
    }
}
