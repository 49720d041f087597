//! Client for an out-of-process fitness model.
//!
//! The model runs as a child process speaking newline-delimited JSON over
//! stdin/stdout. One request is in flight at a time.
//!
//! ```text
//! -> {"id":1,"op":"score","registry":"<fnv1a64 hex>","io":[{"in":..,"out":..}],
//!     "candidates":[[ids..]..],"traces":[[[values..]..]..]}
//! <- {"id":1,"scores":[..]}
//! -> {"id":2,"op":"pmap","registry":"..","io":[..]}
//! <- {"id":2,"pmap":[..]}
//! <- {"id":n,"error":"..."}
//! ```

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::metrics::ProbabilityMap;
use super::model::{FitnessModel, ModelError};
use crate::dsl::{Example, Program, Registry, Spec, Trace};

/// Most candidates sent in one `score` request.
pub const MAX_BATCH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Score,
    Pmap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Request<'a> {
    pub id: u64,
    pub op: Op,
    pub registry: String,
    pub io: &'a [Example],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<&'a [Program]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traces: Option<&'a [Vec<Trace>]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pmap: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct Connection {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    next_id: u64,
}

/// Line-protocol fitness model client.
pub struct ModelClient {
    conn: Mutex<Connection>,
    registry_hash: String,
    registry_len: usize,
    child: Option<Child>,
}

impl ModelClient {
    /// Starts `command` through `sh -c` and talks to it over its stdio.
    pub fn spawn(command: &str, registry: &Registry) -> Result<Self, ModelError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ModelError::Unavailable(format!("cannot start `{command}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut client = Self::from_streams(BufReader::new(stdout), stdin, registry);
        client.child = Some(child);
        Ok(client)
    }

    pub fn from_streams<R, W>(reader: R, writer: W, registry: &Registry) -> Self
    where
        R: BufRead + Send + 'static,
        W: Write + Send + 'static,
    {
        ModelClient {
            conn: Mutex::new(Connection { reader: Box::new(reader), writer: Box::new(writer), next_id: 1 }),
            registry_hash: format!("{:016x}", registry.hash()),
            registry_len: registry.len(),
            child: None,
        }
    }

    fn call(&self, op: Op, spec: &Spec, candidates: Option<&[Program]>, traces: Option<&[Vec<Trace>]>) -> Result<Response, ModelError> {
        let mut conn = self
            .conn
            .lock()
            .map_err(|_| ModelError::Unavailable("connection poisoned".into()))?;
        let id = conn.next_id;
        conn.next_id += 1;
        let request = Request { id, op, registry: self.registry_hash.clone(), io: spec.examples(), candidates, traces };
        let mut line = serde_json::to_string(&request).map_err(|e| ModelError::Protocol(e.to_string()))?;
        line.push('\n');
        conn.writer
            .write_all(line.as_bytes())
            .and_then(|_| conn.writer.flush())
            .map_err(|e| ModelError::Unavailable(format!("write failed: {e}")))?;
        let mut reply = String::new();
        let n = conn
            .reader
            .read_line(&mut reply)
            .map_err(|e| ModelError::Unavailable(format!("read failed: {e}")))?;
        if n == 0 {
            return Err(ModelError::Unavailable("model closed its output".into()));
        }
        let response: Response =
            serde_json::from_str(&reply).map_err(|e| ModelError::Protocol(format!("bad response line: {e}")))?;
        if response.id != id {
            return Err(ModelError::Protocol(format!("response id {} for request {id}", response.id)));
        }
        if let Some(err) = response.error {
            return Err(ModelError::Remote(err));
        }
        Ok(response)
    }
}

impl FitnessModel for ModelClient {
    fn score(&self, spec: &Spec, candidate: &Program, traces: &[Trace]) -> Result<f64, ModelError> {
        let scores = self.score_batch(spec, std::slice::from_ref(candidate), &[traces.to_vec()])?;
        Ok(scores[0])
    }

    fn score_batch(&self, spec: &Spec, candidates: &[Program], traces: &[Vec<Trace>]) -> Result<Vec<f64>, ModelError> {
        let mut out = Vec::with_capacity(candidates.len());
        for (cands, trs) in candidates.chunks(MAX_BATCH).zip(traces.chunks(MAX_BATCH)) {
            let resp = self.call(Op::Score, spec, Some(cands), Some(trs))?;
            let scores = resp
                .scores
                .ok_or_else(|| ModelError::Protocol("score response without `scores`".into()))?;
            if scores.len() != cands.len() {
                return Err(ModelError::Protocol(format!(
                    "{} scores for {} candidates",
                    scores.len(),
                    cands.len()
                )));
            }
            if scores.iter().any(|s| !s.is_finite()) {
                return Err(ModelError::Protocol("non-finite score".into()));
            }
            out.extend(scores);
        }
        Ok(out)
    }

    fn pmap(&self, spec: &Spec) -> Result<Option<ProbabilityMap>, ModelError> {
        let resp = self.call(Op::Pmap, spec, None, None)?;
        let p = resp
            .pmap
            .ok_or_else(|| ModelError::Protocol("pmap response without `pmap`".into()))?;
        if p.len() != self.registry_len {
            return Err(ModelError::Protocol(format!("pmap of length {} for {} tokens", p.len(), self.registry_len)));
        }
        ProbabilityMap::new(p).map(Some).map_err(|e| ModelError::Protocol(e.to_string()))
    }
}

impl Drop for ModelClient {
    fn drop(&mut self) {
        if let Some(child) = self.child.as_mut() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
