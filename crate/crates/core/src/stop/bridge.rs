//! Newline-delimited JSON bridge to an external embedder/proposer process.
//!
//! One JSON object per line in each direction:
//!
//! ```text
//! {"handshake":1}                 -> {"vocab_size":N,"dimension":D,"start":[ids]}
//! {"prefix":[ids],"width":W}      -> {"candidates":[ids]}
//! {"sequence":[ids]}              -> {"embedding":[D floats]}
//! anything malformed              -> {"error":"..."}
//! ```

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::stop::beam::{SequenceEmbedder, TokenProposer};

pub const BRIDGE_PROTOCOL_VERSION: u32 = 1;

/// Requests understood by a bridge process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BridgeRequest {
    Handshake { handshake: u32 },
    Propose { prefix: Vec<u32>, width: usize },
    Embed { sequence: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandshakeResponse {
    pub vocab_size: usize,
    pub dimension: usize,
    #[serde(default)]
    pub start: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposeResponse {
    pub candidates: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: String,
}

/// Answers one request line on behalf of an in-process backend.
pub fn respond<B>(backend: &B, start: &[u32], line: &str) -> Value
where
    B: SequenceEmbedder + TokenProposer,
{
    let err = |e: String| serde_json::to_value(ErrorResponse { error: e }).expect("serializable");
    let request: BridgeRequest = match serde_json::from_str(line) {
        Ok(r) => r,
        Err(e) => return err(format!("malformed request: {e}")),
    };
    let result = match request {
        BridgeRequest::Handshake { handshake } if handshake == BRIDGE_PROTOCOL_VERSION => {
            serde_json::to_value(HandshakeResponse {
                vocab_size: backend.vocab_size(),
                dimension: backend.dimension(),
                start: start.to_vec(),
            })
            .map_err(|e| e.to_string())
        }
        BridgeRequest::Handshake { handshake } => {
            Err(format!("unsupported protocol version {handshake}"))
        }
        BridgeRequest::Propose { prefix, width } => backend
            .propose(&prefix, width)
            .map(|candidates| serde_json::json!({ "candidates": candidates }))
            .map_err(|e| e.to_string()),
        BridgeRequest::Embed { sequence } => backend
            .embed(&sequence)
            .map(|embedding| serde_json::json!({ "embedding": embedding }))
            .map_err(|e| e.to_string()),
    };
    result.unwrap_or_else(err)
}

/// Serves requests from `input` until EOF.
pub fn serve<B, R, W>(backend: &B, start: &[u32], input: R, mut output: W) -> std::io::Result<()>
where
    B: SequenceEmbedder + TokenProposer,
    R: BufRead,
    W: Write,
{
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = respond(backend, start, &line);
        writeln!(output, "{reply}")?;
        output.flush()?;
    }
    Ok(())
}

struct Pipes {
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// Client side: spawns `sh -c <command>` and speaks the protocol over its
/// standard streams. Requests are serialized through a mutex.
pub struct ExternalBridge {
    child: Child,
    pipes: Mutex<Option<Pipes>>,
    info: HandshakeResponse,
}

impl ExternalBridge {
    pub fn spawn(command: &str) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Bridge(format!("failed to spawn `{command}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut bridge = ExternalBridge {
            child,
            pipes: Mutex::new(Some(Pipes { stdin, stdout })),
            info: HandshakeResponse {
                vocab_size: 0,
                dimension: 0,
                start: vec![],
            },
        };
        let reply = bridge
            .request(&BridgeRequest::Handshake {
                handshake: BRIDGE_PROTOCOL_VERSION,
            })
            .map_err(|e| Error::Bridge(format!("handshake failed: {e}")))?;
        bridge.info = serde_json::from_value(reply)
            .map_err(|e| Error::Bridge(format!("handshake failed: {e}")))?;
        if bridge.info.vocab_size == 0 || bridge.info.dimension == 0 {
            return Err(Error::Bridge(
                "handshake failed: vocab_size and dimension must be positive".into(),
            ));
        }
        Ok(bridge)
    }

    /// Start tokens announced by the bridge during the handshake.
    pub fn start_tokens(&self) -> &[u32] {
        &self.info.start
    }

    fn request(&self, request: &BridgeRequest) -> Result<Value> {
        let mut guard = self.pipes.lock().map_err(|_| Error::Bridge("bridge lock poisoned".into()))?;
        let pipes = guard
            .as_mut()
            .ok_or_else(|| Error::Bridge("bridge is closed".into()))?;
        let line = serde_json::to_string(request).expect("request serializes");
        writeln!(pipes.stdin, "{line}")
            .and_then(|_| pipes.stdin.flush())
            .map_err(|e| Error::Bridge(format!("write failed: {e}")))?;
        let mut reply = String::new();
        let read = pipes
            .stdout
            .read_line(&mut reply)
            .map_err(|e| Error::Bridge(format!("read failed: {e}")))?;
        if read == 0 {
            return Err(Error::Bridge("bridge closed its output".into()));
        }
        let value: Value = serde_json::from_str(&reply)
            .map_err(|e| Error::Bridge(format!("malformed reply: {e}")))?;
        if let Some(msg) = value.get("error") {
            return Err(Error::Bridge(msg.as_str().unwrap_or("unknown error").to_string()));
        }
        Ok(value)
    }
}

impl SequenceEmbedder for ExternalBridge {
    fn embed(&self, sequence: &[u32]) -> Result<Vec<f64>> {
        let reply = self.request(&BridgeRequest::Embed {
            sequence: sequence.to_vec(),
        })?;
        let r: EmbedResponse =
            serde_json::from_value(reply).map_err(|e| Error::Bridge(format!("bad embedding reply: {e}")))?;
        if r.embedding.len() != self.info.dimension {
            return Err(Error::dim("bridge embedding", self.info.dimension, r.embedding.len()));
        }
        Ok(r.embedding)
    }

    fn dimension(&self) -> usize {
        self.info.dimension
    }
}

impl TokenProposer for ExternalBridge {
    fn propose(&self, prefix: &[u32], width: usize) -> Result<Vec<u32>> {
        let reply = self.request(&BridgeRequest::Propose {
            prefix: prefix.to_vec(),
            width,
        })?;
        let r: ProposeResponse =
            serde_json::from_value(reply).map_err(|e| Error::Bridge(format!("bad proposal reply: {e}")))?;
        Ok(r.candidates)
    }

    fn vocab_size(&self) -> usize {
        self.info.vocab_size
    }
}

impl Drop for ExternalBridge {
    fn drop(&mut self) {
        // Closing stdin tells a well-behaved bridge to exit.
        if let Ok(mut guard) = self.pipes.lock() {
            guard.take();
        }
        let deadline = Instant::now() + Duration::from_secs(2);
        while Instant::now() < deadline {
            match self.child.try_wait() {
                Ok(Some(_)) | Err(_) => return,
                Ok(None) => std::thread::sleep(Duration::from_millis(10)),
            }
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
