//! Competition state rebuilt from events. Scores are never stored: every
//! read recomputes them from the observations with the core scorer.

use std::collections::BTreeMap;

use serde::Serialize;
use skijudge_core::rulebook::{LandingObservation, TakeoffObservation};
use skijudge_core::scoring::{
    aggregate_panel_with, score_trace, ExecutionTrace, Interval, JudgeScore, PanelResult, Stage, StageBoundaries,
    TrimPolicy, PANEL_SIZE,
};
use skijudge_core::{Dd, FinalScore, Gender, JumpCode, RuleConfig};

use crate::event::{Event, EventBody, FormObservation, Observation};
use crate::ServiceError;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct JudgeSlot {
    pub air: Option<TakeoffObservation>,
    pub form: Option<FormObservation>,
    pub landing: Option<LandingObservation>,
    pub finalized: bool,
}

impl JudgeSlot {
    fn observed(&self, stage: Stage) -> bool {
        match stage {
            Stage::Air => self.air.is_some(),
            Stage::Form => self.form.is_some(),
            Stage::Landing => self.landing.is_some(),
        }
    }

    fn set(&mut self, observation: Observation) {
        match observation {
            Observation::Air(o) => self.air = Some(o),
            Observation::Form(o) => self.form = Some(o),
            Observation::Landing(o) => self.landing = Some(o),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpState {
    pub jump_id: String,
    pub athlete: String,
    pub gender: Gender,
    pub code: JumpCode,
    pub dd: Dd,
    pub boundaries: StageBoundaries,
    pub sub_actions: Vec<Interval>,
    pub judges: [JudgeSlot; PANEL_SIZE],
    pub finalized: bool,
}

impl JumpState {
    /// The trace a judge has entered so far; unobserved stages are clean.
    pub fn judge_trace(&self, judge: u8) -> ExecutionTrace {
        let slot = &self.judges[usize::from(judge) - 1];
        let form = slot.form.clone().unwrap_or_default();
        let mut trace = ExecutionTrace::clean(self.code.clone(), self.gender);
        trace.boundaries = self.boundaries;
        trace.sub_actions = self.sub_actions.clone();
        trace.takeoff = slot.air.clone().unwrap_or_else(TakeoffObservation::clean);
        trace.timing_events = form.timing_events;
        trace.form_deviations = form.form_deviations;
        trace.separation_shown = form.separation_shown;
        trace.landing = slot.landing.clone().unwrap_or_default();
        trace
    }

    pub fn judge_score(&self, judge: u8, rules: &RuleConfig) -> Result<JudgeScore, ServiceError> {
        score_trace(&self.judge_trace(judge), rules).map_err(|e| ServiceError::Validation(e.to_string()))
    }

    /// Panel result; only meaningful once the jump is finalized.
    pub fn panel(&self, rules: &RuleConfig, policy: TrimPolicy) -> Result<PanelResult, ServiceError> {
        let scores = (1..=PANEL_SIZE as u8)
            .map(|j| self.judge_score(j, rules))
            .collect::<Result<Vec<_>, _>>()?;
        aggregate_panel_with(&scores, self.dd, policy).map_err(|e| ServiceError::Validation(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompetitionState {
    pub id: String,
    pub name: Option<String>,
    pub last_seq: u64,
    pub jumps: Vec<JumpState>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct LeaderboardRow {
    pub athlete: String,
    pub best_final: FinalScore,
    pub jump_id: String,
}

/// `{competition}-j{n}`, n counting from 1.
pub fn jump_id(competition_id: &str, n: usize) -> String {
    format!("{competition_id}-j{n}")
}

/// Splits a jump id into its competition id and 1-based jump number.
pub fn split_jump_id(jump_id: &str) -> Option<(&str, usize)> {
    let (comp, n) = jump_id.rsplit_once("-j")?;
    let n: usize = n.parse().ok()?;
    if comp.is_empty() || n == 0 || jump_id != self::jump_id(comp, n) {
        return None;
    }
    Some((comp, n))
}

fn judge_index(judge: u8) -> Result<usize, ServiceError> {
    if (1..=PANEL_SIZE as u8).contains(&judge) {
        Ok(usize::from(judge) - 1)
    } else {
        Err(ServiceError::Validation(format!("judge must be 1 to {PANEL_SIZE}, got {judge}")))
    }
}

impl CompetitionState {
    /// State after the log's first event.
    pub fn create(event: &Event) -> Result<Self, ServiceError> {
        match &event.body {
            EventBody::CompetitionCreated { name } if event.seq == 1 => Ok(CompetitionState {
                id: event.competition_id.clone(),
                name: name.clone(),
                last_seq: 1,
                jumps: Vec::new(),
            }),
            EventBody::CompetitionCreated { .. } => {
                Err(ServiceError::Validation("CompetitionCreated must be the first event".into()))
            }
            other => Err(ServiceError::Validation(format!("log must start with CompetitionCreated, not {}", other.kind()))),
        }
    }

    pub fn jump(&self, jump_id: &str) -> Result<&JumpState, ServiceError> {
        split_jump_id(jump_id)
            .filter(|(comp, _)| *comp == self.id)
            .and_then(|(_, n)| self.jumps.get(n - 1))
            .ok_or_else(|| ServiceError::NotFound(format!("unknown jump {jump_id}")))
    }

    fn jump_mut(&mut self, jump_id: &str) -> Result<&mut JumpState, ServiceError> {
        self.jump(jump_id)?;
        let (_, n) = split_jump_id(jump_id).expect("checked above");
        Ok(&mut self.jumps[n - 1])
    }

    pub fn next_jump_id(&self) -> String {
        jump_id(&self.id, self.jumps.len() + 1)
    }

    /// Checks `event` against the current state without changing it.
    pub fn check(&self, event: &Event, rules: &RuleConfig) -> Result<(), ServiceError> {
        self.clone().apply(event, rules)
    }

    /// Validates and applies one event.
    pub fn apply(&mut self, event: &Event, rules: &RuleConfig) -> Result<(), ServiceError> {
        if event.competition_id != self.id {
            return Err(ServiceError::Validation(format!(
                "event for competition {} applied to {}",
                event.competition_id, self.id
            )));
        }
        if event.seq != self.last_seq + 1 {
            return Err(ServiceError::Validation(format!("expected seq {}, got {}", self.last_seq + 1, event.seq)));
        }
        match &event.body {
            EventBody::CompetitionCreated { .. } => {
                return Err(ServiceError::Validation("competition already exists".into()));
            }
            EventBody::JumpDeclared {
                jump_id,
                athlete,
                gender,
                code,
                dd,
                stage_boundaries,
                sub_actions,
            } => {
                if *jump_id != self.next_jump_id() {
                    return Err(ServiceError::Validation(format!(
                        "jump id {jump_id} out of order; next is {}",
                        self.next_jump_id()
                    )));
                }
                if athlete.trim().is_empty() {
                    return Err(ServiceError::Validation("athlete must not be empty".into()));
                }
                if dd.ten_thousandths() == 0 {
                    return Err(ServiceError::Validation("dd must be positive".into()));
                }
                let jump = JumpState {
                    jump_id: jump_id.clone(),
                    athlete: athlete.clone(),
                    gender: *gender,
                    code: code.clone(),
                    dd: *dd,
                    boundaries: *stage_boundaries,
                    sub_actions: sub_actions.clone(),
                    judges: Default::default(),
                    finalized: false,
                };
                jump.judge_trace(1)
                    .validate()
                    .map_err(|e| ServiceError::Validation(e.to_string()))?;
                self.jumps.push(jump);
            }
            EventBody::ObservationSubmitted {
                jump_id,
                judge,
                observation,
            } => {
                let i = judge_index(*judge)?;
                let jump = self.jump_mut(jump_id)?;
                if jump.finalized {
                    return Err(ServiceError::Conflict(format!("jump {jump_id} is finalized")));
                }
                if jump.judges[i].finalized {
                    return Err(ServiceError::Conflict(format!("judge {judge} has finalized jump {jump_id}")));
                }
                let previous = jump.judges[i].clone();
                jump.judges[i].set(observation.clone());
                if let Err(e) = score_trace(&jump.judge_trace(*judge), rules) {
                    jump.judges[i] = previous;
                    return Err(ServiceError::Validation(e.to_string()));
                }
            }
            EventBody::JudgeFinalized { jump_id, judge } => {
                let i = judge_index(*judge)?;
                let jump = self.jump_mut(jump_id)?;
                if jump.finalized {
                    return Err(ServiceError::Conflict(format!("jump {jump_id} is finalized")));
                }
                let slot = &mut jump.judges[i];
                if slot.finalized {
                    return Err(ServiceError::Conflict(format!("judge {judge} already finalized jump {jump_id}")));
                }
                let missing: Vec<String> = [Stage::Air, Stage::Form, Stage::Landing]
                    .into_iter()
                    .filter(|s| !slot.observed(*s))
                    .map(|s| s.to_string())
                    .collect();
                if !missing.is_empty() {
                    return Err(ServiceError::Validation(format!(
                        "judge {judge} has not observed: {}",
                        missing.join(", ")
                    )));
                }
                slot.finalized = true;
            }
            EventBody::JumpFinalized { jump_id } => {
                let jump = self.jump_mut(jump_id)?;
                if jump.finalized {
                    return Err(ServiceError::Conflict(format!("jump {jump_id} is already finalized")));
                }
                let pending: Vec<String> = (1..=PANEL_SIZE)
                    .filter(|j| !jump.judges[j - 1].finalized)
                    .map(|j| j.to_string())
                    .collect();
                if !pending.is_empty() {
                    return Err(ServiceError::Validation(format!(
                        "judges {} have not finalized",
                        pending.join(", ")
                    )));
                }
                jump.finalized = true;
            }
        }
        self.last_seq = event.seq;
        Ok(())
    }

    /// Best finalized score per athlete, highest first, ties by name.
    pub fn leaderboard(&self, rules: &RuleConfig, policy: TrimPolicy) -> Result<Vec<LeaderboardRow>, ServiceError> {
        let mut best: BTreeMap<&str, (FinalScore, &str)> = BTreeMap::new();
        for jump in self.jumps.iter().filter(|j| j.finalized) {
            let score = jump.panel(rules, policy)?.final_score;
            let entry = best.entry(&jump.athlete).or_insert((score, &jump.jump_id));
            if score > entry.0 {
                *entry = (score, &jump.jump_id);
            }
        }
        let mut rows: Vec<LeaderboardRow> = best
            .into_iter()
            .map(|(athlete, (best_final, jump_id))| LeaderboardRow {
                athlete: athlete.to_string(),
                best_final,
                jump_id: jump_id.to_string(),
            })
            .collect();
        rows.sort_by(|a, b| b.best_final.cmp(&a.best_final).then_with(|| a.athlete.cmp(&b.athlete)));
        Ok(rows)
    }
}

/// Replays a whole event sequence from scratch.
pub fn replay(events: &[Event], rules: &RuleConfig) -> Result<Option<CompetitionState>, ServiceError> {
    let Some((first, rest)) = events.split_first() else {
        return Ok(None);
    };
    let mut state = CompetitionState::create(first)?;
    for e in rest {
        state.apply(e, rules)?;
    }
    Ok(Some(state))
}
