//! On-disk trace files read by `skijudge score`.
//!
//! ```json
//! {"format": "skijudge-trace/1", "trace": { ...ExecutionTrace... }}
//! {"format": "skijudge-trace/1", "judges": [ five ExecutionTraces ]}
//! ```
//!
//! A bare `ExecutionTrace` object is accepted as a single trace.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ExecutionTrace, PANEL_SIZE};

pub const TRACE_FORMAT: &str = "skijudge-trace/1";

#[derive(Debug, Error)]
pub enum TraceFileError {
    #[error("trace file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported trace file format {0:?}; expected {TRACE_FORMAT:?}")]
    Format(String),
    #[error("trace file needs exactly one of `trace` or `judges`")]
    Shape,
    #[error("a judges file needs {PANEL_SIZE} traces, got {0}")]
    PanelSize(usize),
    #[error("judge {0} observed a different jump (code or gender differs from judge 1)")]
    MixedJumps(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFile {
    pub format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<ExecutionTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judges: Option<Vec<ExecutionTrace>>,
}

/// What a trace file holds once checked.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceInput {
    Single(ExecutionTrace),
    Panel(Vec<ExecutionTrace>),
}

impl TraceFile {
    pub fn single(trace: ExecutionTrace) -> Self {
        TraceFile {
            format: TRACE_FORMAT.to_string(),
            trace: Some(trace),
            judges: None,
        }
    }

    pub fn panel(judges: Vec<ExecutionTrace>) -> Self {
        TraceFile {
            format: TRACE_FORMAT.to_string(),
            trace: None,
            judges: Some(judges),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace file serializes")
    }

    pub fn parse(text: &str) -> Result<TraceInput, TraceFileError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if value.get("format").is_none() {
            return Ok(TraceInput::Single(serde_json::from_value(value)?));
        }
        let file: TraceFile = serde_json::from_value(value)?;
        if file.format != TRACE_FORMAT {
            return Err(TraceFileError::Format(file.format));
        }
        match (file.trace, file.judges) {
            (Some(t), None) => Ok(TraceInput::Single(t)),
            (None, Some(judges)) => {
                if judges.len() != PANEL_SIZE {
                    return Err(TraceFileError::PanelSize(judges.len()));
                }
                for (i, j) in judges.iter().enumerate().skip(1) {
                    if j.code != judges[0].code || j.gender != judges[0].gender {
                        return Err(TraceFileError::MixedJumps(i + 1));
                    }
                }
                Ok(TraceInput::Panel(judges))
            }
            _ => Err(TraceFileError::Shape),
        }
    }
}
