use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use decremental::api::RunRequest;
use decremental::workload::{Mode, RunParams};
use decremental_client::{Client, ClientError};

#[derive(Parser)]
#[command(name = "decremental", version, about = "Approximate shortest paths under edge deletions")]
struct Cli {
    /// Service to talk to; without it an in-process service is started.
    #[arg(long, global = true)]
    server: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded connected graph and deletion trace.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        trace_len: usize,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Replay a trace or script and print the report.
    Run {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long)]
        check_every: Option<u64>,
    },
    /// Distance estimate between two vertices after the trace.
    ApspQuery {
        u: usize,
        v: usize,
        #[command(flatten)]
        input: Input,
    },
    /// Path between two vertices after the trace.
    ApspPath {
        u: usize,
        v: usize,
        #[command(flatten)]
        input: Input,
    },
    /// Distance estimate from the source after the trace.
    SsspQuery {
        v: usize,
        #[command(flatten)]
        input: Input,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

#[derive(Args)]
struct Input {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    trace: Option<PathBuf>,
    /// `1/ε` as an integer.
    #[arg(long, default_value_t = 2)]
    epsilon: u64,
    #[arg(long)]
    mu: Option<u64>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long, default_value = "both")]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    source: usize,
    #[arg(long)]
    depth_literal: bool,
}

impl Input {
    fn params(&self, check_every: Option<u64>) -> RunParams {
        RunParams {
            inv_eps: self.epsilon,
            mu: self.mu,
            k: self.k,
            mode: self.mode,
            source: self.source,
            depth_literal: self.depth_literal,
            check_every,
        }
    }
}

#[derive(Debug)]
struct Failure(String);

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        Failure(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

/// Names the file a parse error came from.
fn located(e: ClientError, input: &Input, script: Option<&Path>) -> Failure {
    match &e {
        ClientError::Api { error, line: Some(_), .. } => {
            let path = match error.split_whitespace().next() {
                Some("graph") => Some(input.graph.as_path()),
                Some("trace") => input.trace.as_deref(),
                Some("script") => script,
                _ => None,
            };
            match path {
                Some(p) => Failure(format!("{}: {error}", p.display())),
                None => Failure(error.clone()),
            }
        }
        _ => e.into(),
    }
}

/// Opens a session and replays the whole trace into it.
async fn replay(client: &Client, input: &Input) -> Result<(u64, u64), Failure> {
    let graph = read(&input.graph)?;
    let info = client.create_session(&graph, &input.params(None)).await.map_err(|e| located(e, input, None))?;
    let mut stage = 0;
    if let Some(path) = &input.trace {
        let trace = decremental::io::parse_trace(&read(path)?)
            .map_err(|e| Failure(format!("{}: {e}", path.display())))?;
        for e in trace {
            stage = client.delete(info.id, e.u, e.v).await?.stage;
        }
    }
    Ok((info.id, stage))
}

async fn execute(cli: Cli) -> Result<(), Failure> {
    if let Command::Serve { addr } = cli.command {
        eprintln!("listening on {addr}");
        return decremental_service::serve(addr).await.map_err(|e| Failure(e.to_string()));
    }
    let client = match cli.server {
        Some(url) => Client::new(url),
        None => {
            let addr = decremental_service::spawn_local().await.map_err(|e| Failure(e.to_string()))?;
            Client::new(format!("http://{addr}"))
        }
    };
    match cli.command {
        Command::Gen { seed, n, m, trace_len, graph, trace } => {
            let out = client.generate(seed, n, m, trace_len).await?;
            write(&graph, &out.graph)?;
            if let Some(t) = trace {
                write(&t, &out.trace)?;
            }
        }
        Command::Run { input, script, check_every } => {
            let req = RunRequest {
                graph: read(&input.graph)?,
                trace: input.trace.as_deref().map(read).transpose()?,
                script: script.as_deref().map(read).transpose()?,
                params: input.params(check_every),
            };
            let report = client.run(&req).await.map_err(|e| located(e, &input, script.as_deref()))?;
            print!("{report}");
        }
        Command::ApspQuery { u, v, input } => {
            let (id, stage) = replay(&client, &input).await?;
            let a = client.apsp(id, u, v).await?;
            let shown = a.distance.map_or("inf".to_string(), |d| d.to_string());
            println!("stage={stage} u={u} v={v} answer={shown}");
            client.close(id).await?;
        }
        Command::ApspPath { u, v, input } => {
            let (id, stage) = replay(&client, &input).await?;
            let p = client.path(id, u, v).await?;
            let shown: Vec<String> = p.iter().map(|x| x.to_string()).collect();
            println!("stage={stage} u={u} v={v} path={}", shown.join(","));
            client.close(id).await?;
        }
        Command::SsspQuery { v, input } => {
            let (id, stage) = replay(&client, &input).await?;
            let a = client.sssp(id, v).await?;
            println!("stage={stage} source={} v={v} answer={}", input.source, a.answer);
            client.close(id).await?;
        }
        Command::Serve { .. } => unreachable!(),
    }
    Ok(())
}

#[tokio::main]
async fn main() -> ExitCode {
    match execute(Cli::parse()).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
