//! Event log records. One JSON object per line:
//!
//! ```text
//! {"v":1,"seq":3,"ts_ms":1760000000000,"competition_id":"…","kind":"ObservationSubmitted","payload":{…}}
//! ```

use serde::{Deserialize, Serialize};
use skijudge_core::rulebook::{LandingObservation, TakeoffObservation, TwistTimingEvent, FormDeviation};
use skijudge_core::scoring::{Interval, Stage, StageBoundaries};
use skijudge_core::{Dd, Gender, JumpCode};

pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub v: u32,
    pub seq: u64,
    pub ts_ms: u64,
    pub competition_id: String,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum EventBody {
    CompetitionCreated {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    JumpDeclared {
        jump_id: String,
        athlete: String,
        gender: Gender,
        code: JumpCode,
        dd: Dd,
        stage_boundaries: StageBoundaries,
        sub_actions: Vec<Interval>,
    },
    ObservationSubmitted {
        jump_id: String,
        judge: u8,
        #[serde(flatten)]
        observation: Observation,
    },
    JudgeFinalized {
        jump_id: String,
        judge: u8,
    },
    JumpFinalized {
        jump_id: String,
    },
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::CompetitionCreated { .. } => "CompetitionCreated",
            EventBody::JumpDeclared { .. } => "JumpDeclared",
            EventBody::ObservationSubmitted { .. } => "ObservationSubmitted",
            EventBody::JudgeFinalized { .. } => "JudgeFinalized",
            EventBody::JumpFinalized { .. } => "JumpFinalized",
        }
    }
}

/// Everything a judge saw during the form stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormObservation {
    #[serde(default)]
    pub timing_events: Vec<TwistTimingEvent>,
    #[serde(default)]
    pub form_deviations: Vec<FormDeviation>,
    #[serde(default = "yes")]
    pub separation_shown: bool,
}

fn yes() -> bool {
    true
}

impl Default for FormObservation {
    fn default() -> Self {
        FormObservation {
            timing_events: Vec::new(),
            form_deviations: Vec::new(),
            separation_shown: true,
        }
    }
}

/// One stage's observation set; a new submission replaces the previous one
/// for that judge and stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", content = "payload", rename_all = "snake_case")]
pub enum Observation {
    Air(TakeoffObservation),
    Form(FormObservation),
    Landing(LandingObservation),
}

impl Observation {
    pub fn stage(&self) -> Stage {
        match self {
            Observation::Air(_) => Stage::Air,
            Observation::Form(_) => Stage::Form,
            Observation::Landing(_) => Stage::Landing,
        }
    }
}
