use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use skijudge_core::scoring::{
    Deduction, Interval, JudgeScore, PanelResult, StageBoundaries, TraceFile, TrimPolicy, PANEL_SIZE,
};
use skijudge_core::{describe, parse, Dd, DifficultyCatalog, Gender, RuleConfig};

use crate::event::{Event, EventBody, Observation, LOG_VERSION};
use crate::log::{EventLog, LOG_SUFFIX};
use crate::state::{replay, split_jump_id, CompetitionState, JudgeSlot, JumpState, LeaderboardRow};
use crate::ServiceError;

struct Competition {
    state: CompetitionState,
    log: EventLog,
}

/// All competitions under one data directory.
pub struct Store {
    dir: PathBuf,
    rules: RuleConfig,
    catalog: DifficultyCatalog,
    policy: TrimPolicy,
    competitions: RwLock<BTreeMap<String, Arc<Mutex<Competition>>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclareJump {
    pub athlete: String,
    pub gender: Gender,
    pub code: String,
    #[serde(default)]
    pub stage_boundaries: Option<StageBoundaries>,
    #[serde(default)]
    pub sub_actions: Option<Vec<Interval>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct JudgeView {
    pub judge: u8,
    pub finalized: bool,
    pub observations: JudgeSlot,
    pub provisional_judge_score: JudgeScore,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiveJumpState {
    pub jump_id: String,
    pub competition_id: String,
    pub athlete: String,
    pub gender: Gender,
    pub code: String,
    pub description: String,
    pub dd: Dd,
    pub stage_boundaries: StageBoundaries,
    pub sub_actions: Vec<Interval>,
    pub finalized: bool,
    pub judges: Vec<JudgeView>,
    pub panel: Option<PanelResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpSummary {
    pub jump_id: String,
    pub athlete: String,
    pub code: String,
    pub finalized: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompetitionView {
    pub id: String,
    pub name: Option<String>,
    pub last_seq: u64,
    pub jumps: Vec<JumpSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservationReceipt {
    pub seq: u64,
    pub provisional_judge_score: JudgeScore,
    pub deductions: Vec<Deduction>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn check_judge(judge: u8) -> Result<(), ServiceError> {
    if (1..=PANEL_SIZE as u8).contains(&judge) {
        Ok(())
    } else {
        Err(ServiceError::Validation(format!("judge must be 1 to {PANEL_SIZE}, got {judge}")))
    }
}

impl Store {
    /// Opens `dir`, replaying every competition log found there.
    pub fn open(dir: &Path, rules: RuleConfig, catalog: DifficultyCatalog) -> Result<Self, ServiceError> {
        std::fs::create_dir_all(dir).map_err(|e| ServiceError::Storage(format!("{}: {e}", dir.display())))?;
        let mut competitions = BTreeMap::new();
        let entries = std::fs::read_dir(dir).map_err(|e| ServiceError::Storage(e.to_string()))?;
        for entry in entries {
            let path = entry.map_err(|e| ServiceError::Storage(e.to_string()))?.path();
            let Some(id) = path
                .file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.strip_suffix(LOG_SUFFIX))
                .map(str::to_string)
            else {
                continue;
            };
            let (log, events) = EventLog::open(&path)?;
            if events.is_empty() {
                // created but the first event never landed: nothing was acknowledged
                drop(log);
                std::fs::remove_file(&path).map_err(|e| ServiceError::Storage(e.to_string()))?;
                continue;
            }
            let corrupt = |message: String| ServiceError::CorruptLog { line: 0, message };
            let state = replay(&events, &rules)
                .map_err(|e| corrupt(format!("{}: {e}", path.display())))?
                .expect("log has events");
            if state.id != id {
                return Err(corrupt(format!("{} holds competition {}", path.display(), state.id)));
            }
            competitions.insert(id, Arc::new(Mutex::new(Competition { state, log })));
        }
        Ok(Store {
            dir: dir.to_path_buf(),
            rules,
            catalog,
            policy: TrimPolicy::PerTotal,
            competitions: RwLock::new(competitions),
        })
    }

    pub fn rules(&self) -> &RuleConfig {
        &self.rules
    }

    fn competition(&self, id: &str) -> Result<Arc<Mutex<Competition>>, ServiceError> {
        self.competitions
            .read()
            .expect("store lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("unknown competition {id}")))
    }

    fn competition_of(&self, jump_id: &str) -> Result<Arc<Mutex<Competition>>, ServiceError> {
        let (comp, _) = split_jump_id(jump_id).ok_or_else(|| ServiceError::NotFound(format!("unknown jump {jump_id}")))?;
        self.competition(comp)
            .map_err(|_| ServiceError::NotFound(format!("unknown jump {jump_id}")))
    }

    /// Validates, durably appends, then applies.
    fn commit(&self, comp: &mut Competition, body: EventBody) -> Result<u64, ServiceError> {
        let event = Event {
            v: LOG_VERSION,
            seq: comp.state.last_seq + 1,
            ts_ms: now_ms(),
            competition_id: comp.state.id.clone(),
            body,
        };
        comp.state.check(&event, &self.rules)?;
        comp.log.append(&event)?;
        comp.state.apply(&event, &self.rules).expect("event was checked");
        Ok(event.seq)
    }

    pub fn competition_ids(&self) -> Vec<String> {
        self.competitions.read().expect("store lock").keys().cloned().collect()
    }

    pub fn create_competition(&self, name: Option<String>) -> Result<String, ServiceError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let mut log = EventLog::create(&EventLog::path_for(&self.dir, &id))?;
        let event = Event {
            v: LOG_VERSION,
            seq: 1,
            ts_ms: now_ms(),
            competition_id: id.clone(),
            body: EventBody::CompetitionCreated { name },
        };
        let state = CompetitionState::create(&event)?;
        if let Err(e) = log.append(&event) {
            let _ = std::fs::remove_file(log.path());
            return Err(e);
        }
        self.competitions
            .write()
            .expect("store lock")
            .insert(id.clone(), Arc::new(Mutex::new(Competition { state, log })));
        Ok(id)
    }

    pub fn declare_jump(&self, competition_id: &str, req: DeclareJump) -> Result<(String, Dd), ServiceError> {
        let comp = self.competition(competition_id)?;
        let code = parse(&req.code).map_err(|e| ServiceError::Validation(format!("code {:?}: {e}", req.code)))?;
        let dd = self
            .catalog
            .lookup_dd(code.canonical_text(), req.gender)
            .map_err(|e| ServiceError::Validation(e.to_string()))?;
        let boundaries = req
            .stage_boundaries
            .unwrap_or_else(|| StageBoundaries::nominal(code.flip_count()));
        let sub_actions = req
            .sub_actions
            .unwrap_or_else(|| boundaries.even_sub_actions(code.flip_count()));

        let mut comp = comp.lock().expect("competition lock");
        let jump_id = comp.state.next_jump_id();
        let body = EventBody::JumpDeclared {
            jump_id: jump_id.clone(),
            athlete: req.athlete,
            gender: req.gender,
            code,
            dd,
            stage_boundaries: boundaries,
            sub_actions,
        };
        self.commit(&mut comp, body)?;
        Ok((jump_id, dd))
    }

    pub fn submit_observation(
        &self,
        jump_id: &str,
        judge: u8,
        observation: Observation,
    ) -> Result<ObservationReceipt, ServiceError> {
        check_judge(judge)?;
        let comp = self.competition_of(jump_id)?;
        let mut comp = comp.lock().expect("competition lock");
        let body = EventBody::ObservationSubmitted {
            jump_id: jump_id.to_string(),
            judge,
            observation,
        };
        let seq = self.commit(&mut comp, body)?;
        let score = comp.state.jump(jump_id)?.judge_score(judge, &self.rules)?;
        Ok(ObservationReceipt {
            seq,
            deductions: score.deductions.clone(),
            provisional_judge_score: score,
        })
    }

    pub fn finalize_judge(&self, jump_id: &str, judge: u8) -> Result<JudgeScore, ServiceError> {
        check_judge(judge)?;
        let comp = self.competition_of(jump_id)?;
        let mut comp = comp.lock().expect("competition lock");
        let body = EventBody::JudgeFinalized {
            jump_id: jump_id.to_string(),
            judge,
        };
        self.commit(&mut comp, body)?;
        comp.state.jump(jump_id)?.judge_score(judge, &self.rules)
    }

    pub fn finalize_jump(&self, jump_id: &str) -> Result<PanelResult, ServiceError> {
        let comp = self.competition_of(jump_id)?;
        let mut comp = comp.lock().expect("competition lock");
        let body = EventBody::JumpFinalized {
            jump_id: jump_id.to_string(),
        };
        self.commit(&mut comp, body)?;
        comp.state.jump(jump_id)?.panel(&self.rules, self.policy)
    }

    fn live_state(&self, comp: &CompetitionState, jump: &JumpState) -> Result<LiveJumpState, ServiceError> {
        let judges = (1..=PANEL_SIZE as u8)
            .map(|j| {
                Ok(JudgeView {
                    judge: j,
                    finalized: jump.judges[usize::from(j) - 1].finalized,
                    observations: jump.judges[usize::from(j) - 1].clone(),
                    provisional_judge_score: jump.judge_score(j, &self.rules)?,
                })
            })
            .collect::<Result<Vec<_>, ServiceError>>()?;
        let panel = if jump.finalized {
            Some(jump.panel(&self.rules, self.policy)?)
        } else {
            None
        };
        Ok(LiveJumpState {
            jump_id: jump.jump_id.clone(),
            competition_id: comp.id.clone(),
            athlete: jump.athlete.clone(),
            gender: jump.gender,
            code: jump.code.canonical_text().to_string(),
            description: describe(&jump.code),
            dd: jump.dd,
            stage_boundaries: jump.boundaries,
            sub_actions: jump.sub_actions.clone(),
            finalized: jump.finalized,
            judges,
            panel,
        })
    }

    pub fn jump(&self, jump_id: &str) -> Result<LiveJumpState, ServiceError> {
        let comp = self.competition_of(jump_id)?;
        let comp = comp.lock().expect("competition lock");
        self.live_state(&comp.state, comp.state.jump(jump_id)?)
    }

    /// The judge's current observations as a `skijudge score` trace file.
    pub fn judge_trace(&self, jump_id: &str, judge: u8) -> Result<TraceFile, ServiceError> {
        check_judge(judge)?;
        let comp = self.competition_of(jump_id)?;
        let comp = comp.lock().expect("competition lock");
        Ok(TraceFile::single(comp.state.jump(jump_id)?.judge_trace(judge)))
    }

    /// All five judges' observations as a panel trace file.
    pub fn panel_trace(&self, jump_id: &str) -> Result<TraceFile, ServiceError> {
        let comp = self.competition_of(jump_id)?;
        let comp = comp.lock().expect("competition lock");
        let jump = comp.state.jump(jump_id)?;
        Ok(TraceFile::panel((1..=PANEL_SIZE as u8).map(|j| jump.judge_trace(j)).collect()))
    }

    pub fn competition_view(&self, id: &str) -> Result<CompetitionView, ServiceError> {
        let comp = self.competition(id)?;
        let comp = comp.lock().expect("competition lock");
        Ok(CompetitionView {
            id: comp.state.id.clone(),
            name: comp.state.name.clone(),
            last_seq: comp.state.last_seq,
            jumps: comp
                .state
                .jumps
                .iter()
                .map(|j| JumpSummary {
                    jump_id: j.jump_id.clone(),
                    athlete: j.athlete.clone(),
                    code: j.code.canonical_text().to_string(),
                    finalized: j.finalized,
                })
                .collect(),
        })
    }

    pub fn leaderboard(&self, id: &str) -> Result<Vec<LeaderboardRow>, ServiceError> {
        let comp = self.competition(id)?;
        let comp = comp.lock().expect("competition lock");
        comp.state.leaderboard(&self.rules, self.policy)
    }

    /// Snapshot of one competition's replayed state.
    pub fn state(&self, id: &str) -> Result<CompetitionState, ServiceError> {
        let comp = self.competition(id)?;
        let comp = comp.lock().expect("competition lock");
        Ok(comp.state.clone())
    }
}
