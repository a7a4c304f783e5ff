//! Annotated-jump dataset records (one JSON object per line).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{sort_deductions, Deduction, ExecutionTrace, Interval, PanelResult, Stage, StageBoundaries, AIR_MAX};
use crate::jumpcode::{parse, DifficultyCatalog, Gender, JumpCode};
use crate::points::{Dd, FinalScore, Tenths};
use crate::rulebook::{FORM_MAX, LANDING_MAX};

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("record is not valid JSON for the dataset schema: {0}")]
    Json(#[from] serde_json::Error),
    #[error("record {id}: {message}")]
    Invalid { id: String, message: String },
}

/// A scored jump with everything needed to emit its dataset record.
#[derive(Debug, Clone)]
pub struct AnnotatedJump {
    pub id: String,
    pub athlete: String,
    pub gender: Gender,
    pub code: JumpCode,
    pub dd: Dd,
    pub trace: ExecutionTrace,
    pub panel: PanelResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubActionRecord {
    pub name: String,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageScores {
    pub air: Tenths,
    pub form: Tenths,
    pub landing: Tenths,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub id: String,
    pub gender: Gender,
    pub code: String,
    pub dd: Dd,
    pub stage_boundaries: StageBoundaries,
    pub sub_actions: Vec<SubActionRecord>,
    pub stage_scores: StageScores,
    pub final_score: FinalScore,
    pub deductions: Vec<Deduction>,
}

/// Builds the dataset record for a scored jump.
///
/// Deductions are the union over the kept judges, deduplicated by item and
/// timestamp (the lowest-indexed kept judge's entry wins).
pub fn emit_annotation(jump: &AnnotatedJump) -> DatasetRecord {
    let panel = &jump.panel;
    let mut deductions: Vec<Deduction> = Vec::new();
    for &i in &panel.kept_indices {
        for d in &panel.judges[i].deductions {
            let seen = deductions
                .iter()
                .any(|e| e.item == d.item && e.timestamp_s == d.timestamp_s);
            if !seen {
                deductions.push(d.clone());
            }
        }
    }
    sort_deductions(&mut deductions);

    DatasetRecord {
        id: jump.id.clone(),
        gender: jump.gender,
        code: jump.code.canonical_text().to_string(),
        dd: jump.dd,
        stage_boundaries: jump.trace.boundaries,
        sub_actions: jump
            .code
            .flips()
            .iter()
            .zip(&jump.trace.sub_actions)
            .map(|(flip, span)| SubActionRecord {
                name: flip.name().to_string(),
                start: span.start,
                end: span.end,
            })
            .collect(),
        stage_scores: StageScores {
            air: panel.stage_subscore_tenths(Stage::Air),
            form: panel.stage_subscore_tenths(Stage::Form),
            landing: panel.stage_subscore_tenths(Stage::Landing),
        },
        final_score: panel.final_score,
        deductions,
    }
}

impl DatasetRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("dataset record serializes")
    }

    pub fn from_line(line: &str) -> Result<Self, SchemaError> {
        Ok(serde_json::from_str(line)?)
    }

    /// Checks the record's internal consistency, and its DD against the
    /// catalog when one is given.
    pub fn validate(&self, catalog: Option<&DifficultyCatalog>) -> Result<(), SchemaError> {
        let bad = |message: String| {
            Err(SchemaError::Invalid {
                id: self.id.clone(),
                message,
            })
        };
        if self.id.is_empty() {
            return bad("empty id".into());
        }
        let jump = match parse(&self.code) {
            Ok(j) => j,
            Err(e) => return bad(format!("code: {e}")),
        };
        if jump.canonical_text() != self.code {
            return bad("code is not canonical".into());
        }
        if let Some(catalog) = catalog {
            match catalog.lookup_dd(&self.code, self.gender) {
                Ok(dd) if dd == self.dd => {}
                Ok(dd) => return bad(format!("dd {} does not match catalog value {dd}", self.dd)),
                Err(e) => return bad(e.to_string()),
            }
        }
        if let Err(msg) = self.stage_boundaries.validate() {
            return bad(msg);
        }
        if self.sub_actions.len() != jump.flip_count() {
            return bad(format!("{} sub-actions for {} flips", self.sub_actions.len(), jump.flip_count()));
        }
        let form = self.stage_boundaries.form;
        for (sub, flip) in self.sub_actions.iter().zip(jump.flips()) {
            if sub.name != flip.name() {
                return bad(format!("sub-action {:?} does not match flip {:?}", sub.name, flip.name()));
            }
            if !(sub.start < sub.end && form.contains(sub.start) && form.contains(sub.end)) {
                return bad(format!("sub-action {:?} lies outside the form stage", sub.name));
            }
        }
        let s = &self.stage_scores;
        for (name, value, max) in [("air", s.air, AIR_MAX), ("form", s.form, FORM_MAX), ("landing", s.landing, LANDING_MAX)] {
            if value < Tenths::ZERO || value > max {
                return bad(format!("{name} score {value} outside [0.0, {max}]"));
            }
        }
        // the final score cannot exceed 10.0 x DD (allowing for rounding)
        let final_h = self.final_score.hundredths();
        if final_h < 0 || final_h * 10 > i64::from(self.dd.ten_thousandths()) + 5 {
            return bad(format!("final score {} outside [0, 10 x {}]", self.final_score, self.dd));
        }
        for d in &self.deductions {
            if d.points < Tenths::ZERO {
                return bad(format!("negative deduction {:?}", d.item));
            }
            if !self.stage_boundaries.stage(d.stage).contains(d.timestamp_s) {
                return bad(format!("deduction {:?} at {}s is outside its {} stage", d.item, d.timestamp_s, d.stage));
            }
        }
        Ok(())
    }

    pub fn sub_action_intervals(&self) -> Vec<Interval> {
        self.sub_actions.iter().map(|s| Interval::new(s.start, s.end)).collect()
    }
}
