//! The external-predictor wire protocol: line-delimited JSON over
//! stdin/stdout.
//!
//! The harness speaks first: a `hello` carrying the workload name and
//! schema version, answered by `ack`. Then any number of `predict`
//! requests, each answered by a `result` (or `error`) carrying the same
//! id; responses may arrive out of order. A final `shutdown` ends the
//! session and the process is expected to exit cleanly.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::data::{Grid, Prediction, PredictionSet};
use crate::error::PredictorError;
use crate::harness::plan::PlanWorkload;

pub const PROTOCOL_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_REQUEST_TIMEOUT: Duration = Duration::from_secs(30);

/// Workload-specific model input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PredictInput {
    Molecular {
        species: Vec<u32>,
        positions: Vec<[f64; 3]>,
    },
    Jet {
        particles: Vec<[f64; 4]>,
    },
    Precip {
        frames: Vec<Grid>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub id: i64,
    pub input: PredictInput,
}

/// One protocol line in either direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WireMessage {
    Hello {
        workload: String,
        schema_version: u32,
    },
    Ack {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model_id: Option<String>,
    },
    Predict {
        id: i64,
        input: PredictInput,
    },
    Result {
        id: i64,
        output: Prediction,
    },
    Error {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<i64>,
        message: String,
    },
    Shutdown,
}

/// A spawned predictor process with a background stdout reader.
pub struct ExternalPredictor {
    child: Child,
    stdin: Option<std::process::ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    command: String,
}

impl ExternalPredictor {
    /// Spawn the command and complete the handshake.
    pub fn spawn(
        command: &[String],
        workload: PlanWorkload,
        timeout: Duration,
    ) -> Result<Self, PredictorError> {
        let display = command.join(" ");
        let (program, args) = command
            .split_first()
            .ok_or_else(|| PredictorError::Handshake("empty command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| PredictorError::Spawn {
                command: display.clone(),
                source,
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut predictor = Self {
            child,
            stdin: Some(stdin),
            lines: rx,
            timeout,
            command: display,
        };
        predictor.send(&WireMessage::Hello {
            workload: workload.as_str().to_string(),
            schema_version: PROTOCOL_SCHEMA_VERSION,
        })?;
        match predictor.recv()? {
            WireMessage::Ack { .. } => Ok(predictor),
            other => Err(PredictorError::Handshake(format!(
                "expected ack, got {other:?}"
            ))),
        }
    }

    fn send(&mut self, msg: &WireMessage) -> Result<(), PredictorError> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| PredictorError::Handshake("stdin closed".into()))?;
        let mut line = serde_json::to_string(msg)
            .map_err(|e| PredictorError::MalformedResponse(e.to_string()))?;
        line.push('\n');
        stdin.write_all(line.as_bytes())?;
        stdin.flush()?;
        Ok(())
    }

    fn recv(&mut self) -> Result<WireMessage, PredictorError> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => serde_json::from_str(&line)
                .map_err(|e| PredictorError::MalformedResponse(format!("{e}: {line}"))),
            Ok(Err(e)) => Err(PredictorError::Io(e)),
            Err(RecvTimeoutError::Timeout) => Err(PredictorError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(PredictorError::MalformedResponse(
                "predictor closed stdout before responding".into(),
            )),
        }
    }

    /// Send every request, then collect responses (any order) until all
    /// ids are answered.
    pub fn predict_batch(
        &mut self,
        requests: &[PredictRequest],
    ) -> Result<BTreeMap<i64, Prediction>, PredictorError> {
        let mut pending: std::collections::BTreeSet<i64> = requests.iter().map(|r| r.id).collect();
        for req in requests {
            self.send(&WireMessage::Predict {
                id: req.id,
                input: req.input.clone(),
            })?;
        }
        let mut out = BTreeMap::new();
        while !pending.is_empty() {
            match self.recv() {
                Ok(WireMessage::Result { id, output }) => {
                    if !pending.remove(&id) {
                        return Err(PredictorError::UnknownResponse(id));
                    }
                    out.insert(id, output);
                }
                Ok(WireMessage::Error { id, message }) => {
                    return Err(PredictorError::Remote {
                        id: id.unwrap_or(-1),
                        detail: message,
                    });
                }
                Ok(other) => {
                    return Err(PredictorError::MalformedResponse(format!(
                        "expected result, got {other:?}"
                    )));
                }
                Err(PredictorError::MalformedResponse(m))
                    if m.starts_with("predictor closed stdout") =>
                {
                    let first = *pending.iter().next().expect("non-empty");
                    return Err(PredictorError::MissingResponse(first));
                }
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    /// Send shutdown and wait for a clean exit.
    pub fn shutdown(mut self) -> Result<(), PredictorError> {
        self.send(&WireMessage::Shutdown)?;
        drop(self.stdin.take());
        let status = self.child.wait()?;
        if status.success() {
            Ok(())
        } else {
            Err(PredictorError::NonZeroExit(format!(
                "{status} ({})",
                self.command
            )))
        }
    }
}

impl Drop for ExternalPredictor {
    fn drop(&mut self) {
        drop(self.stdin.take());
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// One-shot convenience: spawn, handshake, predict all requests, shut
/// down, and package the responses as a [`PredictionSet`].
pub fn run_external_predictor(
    command: &[String],
    workload: PlanWorkload,
    requests: &[PredictRequest],
    timeout: Duration,
) -> Result<PredictionSet, PredictorError> {
    let mut predictor = ExternalPredictor::spawn(command, workload, timeout)?;
    let entries = predictor.predict_batch(requests)?;
    predictor.shutdown()?;
    let mut set = PredictionSet::new("external", "external", 0);
    set.entries = entries;
    set.validate_scores()?;
    Ok(set)
}
