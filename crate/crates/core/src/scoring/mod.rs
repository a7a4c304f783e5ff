//! Per-judge stage scoring and panel aggregation.
//!
//! A judge's mark is air (max 2.0) + form (max 5.0) + landing (max 3.0). The
//! panel keeps the middle three of five judge totals and multiplies their
//! mean by the jump's degree of difficulty.

mod panel;
mod record;
mod trace;
mod tracefile;

pub use panel::{aggregate_panel, aggregate_panel_with, PanelResult, TrimPolicy, PANEL_SIZE};
pub use record::{emit_annotation, AnnotatedJump, DatasetRecord, SchemaError, StageScores, SubActionRecord};
pub use trace::{ExecutionTrace, Interval, Stage, StageBoundaries};
pub use tracefile::{TraceFile, TraceFileError, TraceInput, TRACE_FORMAT};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jumpcode::CatalogError;
use crate::points::Tenths;
use crate::rulebook::{
    self, apply_form_break_caps, early_start_deduction, form_deviation_deduction, height_distance_score,
    landing_deductions, late_finish_deduction, takeoff_severity, takeoff_technical_score, Contact, RuleConfig,
    RuleError, SeverityClass, TakeoffPosture, TimingKind, FORM_MAX, LANDING_MAX,
};

pub const AIR_MAX: Tenths = Tenths(20);
pub const TOTAL_MAX: Tenths = Tenths(100);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoringError {
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("a panel needs exactly 5 judge scores, got {0}")]
    PanelSize(usize),
    #[error("degree of difficulty must be positive")]
    InvalidDd,
}

impl From<CatalogError> for ScoringError {
    fn from(e: CatalogError) -> Self {
        ScoringError::InvalidTrace(e.to_string())
    }
}

/// One penalty with its reason and where it happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deduction {
    pub stage: Stage,
    pub item: String,
    pub severity: SeverityClass,
    pub points: Tenths,
    #[serde(rename = "t")]
    pub timestamp_s: f64,
}

impl Deduction {
    fn new(stage: Stage, item: impl Into<String>, severity: SeverityClass, points: Tenths, t: f64) -> Self {
        Deduction {
            stage,
            item: item.into(),
            severity,
            points,
            timestamp_s: t,
        }
    }
}

/// Orders deductions by timestamp, then item.
pub fn sort_deductions(deductions: &mut [Deduction]) {
    deductions.sort_by(|a, b| {
        a.timestamp_s
            .total_cmp(&b.timestamp_s)
            .then_with(|| a.item.cmp(&b.item))
            .then_with(|| a.stage.cmp(&b.stage))
    });
}

/// One judge's mark for one jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeScore {
    pub air: Tenths,
    pub form: Tenths,
    pub landing: Tenths,
    pub total: Tenths,
    pub deductions: Vec<Deduction>,
}

impl JudgeScore {
    pub fn stage(&self, stage: Stage) -> Tenths {
        match stage {
            Stage::Air => self.air,
            Stage::Form => self.form,
            Stage::Landing => self.landing,
        }
    }
}

fn takeoff_item(posture: TakeoffPosture) -> &'static str {
    match posture {
        TakeoffPosture::BodyLeg => "Knee Bent Air",
        TakeoffPosture::BodyArch => "Arch Air",
        TakeoffPosture::BodyPike => "Pike Air",
    }
}

pub fn score_air(trace: &ExecutionTrace, cfg: &RuleConfig) -> Result<(Tenths, Vec<Deduction>), ScoringError> {
    let obs = &trace.takeoff;
    let technical = takeoff_technical_score(obs, cfg);
    let height_distance = height_distance_score(obs)?;
    let mut deductions = Vec::new();
    if let Some(severity) = takeoff_severity(technical, obs.missed) {
        let item = if obs.missed { "Missed Take-Off" } else { takeoff_item(obs.posture) };
        deductions.push(Deduction::new(
            Stage::Air,
            item,
            severity,
            rulebook::TAKEOFF_MAX - technical,
            trace.boundaries.air.midpoint(),
        ));
    }
    Ok((technical + height_distance, deductions))
}

pub fn score_form(trace: &ExecutionTrace, cfg: &RuleConfig) -> Result<(Tenths, Vec<Deduction>), ScoringError> {
    let circles = trace.code.flip_count();
    let mut deductions = Vec::new();

    for event in &trace.timing_events {
        let span = trace
            .sub_actions
            .get(event.flip_index.wrapping_sub(1))
            .ok_or_else(|| ScoringError::InvalidTrace(format!("no sub-action for flip {}", event.flip_index)))?;
        let (points, severity, item, t) = match event.kind {
            TimingKind::EarlyStart => {
                let (p, s) = early_start_deduction(event.degrees_offset, cfg);
                (p, s, "Early Twist Start", span.start)
            }
            TimingKind::LateFinish => {
                let (p, s) = late_finish_deduction(circles, event.degrees_offset, cfg)?;
                (p, s, "Late Twist Finish", span.end)
            }
        };
        deductions.push(Deduction::new(Stage::Form, item, severity, points, t));
    }

    for dev in &trace.form_deviations {
        let (points, severity) = form_deviation_deduction(dev, cfg);
        let item = if dev.in_landing_prep { "Landing Prep Pike" } else { dev.category.item() };
        deductions.push(Deduction::new(Stage::Form, item, severity, points, dev.timestamp_s));
    }

    if !trace.separation_shown && cfg.separation.missing_tenths > 0 {
        deductions.push(Deduction::new(
            Stage::Form,
            "No Separation",
            cfg.separation.severity,
            Tenths(cfg.separation.missing_tenths),
            trace.boundaries.form.midpoint(),
        ));
    }

    deductions.retain(|d| d.points > Tenths::ZERO);
    let graded: Vec<_> = deductions.iter().map(|d| (d.points, d.severity)).collect();
    let total = apply_form_break_caps(&graded, cfg);
    Ok((FORM_MAX.saturating_sub_floor(total), deductions))
}

pub fn score_landing(trace: &ExecutionTrace, cfg: &RuleConfig) -> (Tenths, Vec<Deduction>) {
    let landing = &trace.boundaries.landing;
    let assessment = landing_deductions(&trace.landing, cfg);
    let mut deductions: Vec<_> = assessment
        .flags
        .iter()
        .filter(|(_, points, _)| *points > Tenths::ZERO)
        .map(|(flag, points, severity)| {
            Deduction::new(Stage::Landing, flag.item(), *severity, *points, landing.midpoint())
        })
        .collect();

    let after_flags = LANDING_MAX.saturating_sub_floor(assessment.deduction);
    let score = after_flags.min(assessment.cap);
    let contact_item = match trace.landing.contact {
        Contact::None => None,
        Contact::Hand => Some("Hand Contact"),
        Contact::Body => Some("Body Contact"),
    };
    if let Some(item) = contact_item {
        deductions.push(Deduction::new(
            Stage::Landing,
            item,
            SeverityClass::Absolute,
            after_flags - score,
            landing.start,
        ));
    }
    (score, deductions)
}

/// Scores one judge's view of a jump.
pub fn score_trace(trace: &ExecutionTrace, cfg: &RuleConfig) -> Result<JudgeScore, ScoringError> {
    trace.validate()?;
    let (air, mut deductions) = score_air(trace, cfg)?;
    let (form, form_deductions) = score_form(trace, cfg)?;
    let (landing, landing_deductions) = score_landing(trace, cfg);
    deductions.extend(form_deductions);
    deductions.extend(landing_deductions);
    sort_deductions(&mut deductions);
    Ok(JudgeScore {
        air,
        form,
        landing,
        total: air + form + landing,
        deductions,
    })
}
