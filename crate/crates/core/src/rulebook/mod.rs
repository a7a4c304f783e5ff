//! Deduction scales for take-off, timing, form breaks and landing.
//!
//! Every function here is pure over a [`RuleConfig`] and returns points in
//! integer tenths. Angles are degrees; values inside a printed band are
//! interpolated linearly and rounded to the nearest tenth, ties away from
//! zero.

mod config;

pub use config::{
    Band, BandTable, FlagPenalty, FormCaps, FormRules, LandingPrepRule, LandingRules, RuleConfig, SeparationRule,
    TakeoffLine, TakeoffRules, TimingRules, DEFAULT_RULES_TOML,
};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::points::{round_scaled, Tenths};

/// Full technical take-off mark.
pub const TAKEOFF_MAX: Tenths = Tenths(10);
/// Full height-and-distance mark.
pub const HEIGHT_DISTANCE_MAX: Tenths = Tenths(10);
pub const FORM_MAX: Tenths = Tenths(50);
pub const LANDING_MAX: Tenths = Tenths(30);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("instrument reading {0} is outside [0, 1]")]
    OutOfRangeReading(f64),
    #[error("no late-finish rule for {0}-circle jumps")]
    UnsupportedFlipCount(usize),
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error("invalid rule config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeverityClass {
    Minor,
    Medium,
    Major,
    Absolute,
}

impl fmt::Display for SeverityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeverityClass::Minor => "minor",
            SeverityClass::Medium => "medium",
            SeverityClass::Major => "major",
            SeverityClass::Absolute => "absolute",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TakeoffPosture {
    BodyLeg,
    BodyArch,
    BodyPike,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TakeoffObservation {
    pub posture: TakeoffPosture,
    pub deviation_deg: f64,
    #[serde(default)]
    pub missed: bool,
    /// Height/distance instrument reading in `[0, 1]`.
    pub instrument_hd: f64,
}

impl TakeoffObservation {
    pub fn clean() -> Self {
        TakeoffObservation {
            posture: TakeoffPosture::BodyLeg,
            deviation_deg: 0.0,
            missed: false,
            instrument_hd: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), RuleError> {
        if !(0.0..=180.0).contains(&self.deviation_deg) {
            return Err(RuleError::InvalidObservation(format!(
                "take-off deviation {}° outside [0, 180]",
                self.deviation_deg
            )));
        }
        if !(0.0..=1.0).contains(&self.instrument_hd) {
            return Err(RuleError::OutOfRangeReading(self.instrument_hd));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimingKind {
    EarlyStart,
    LateFinish,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistTimingEvent {
    /// 1-based flip the event belongs to.
    pub flip_index: usize,
    pub kind: TimingKind,
    /// Degrees before the start reference (early start) or past the finish
    /// reference (late finish).
    pub degrees_offset: f64,
}

impl TwistTimingEvent {
    pub fn validate(&self, flip_count: usize) -> Result<(), RuleError> {
        if self.flip_index == 0 || self.flip_index > flip_count {
            return Err(RuleError::InvalidObservation(format!(
                "timing event on flip {} of a {flip_count}-flip jump",
                self.flip_index
            )));
        }
        if !(0.0..=360.0).contains(&self.degrees_offset) {
            return Err(RuleError::InvalidObservation(format!(
                "timing offset {}° outside [0, 360]",
                self.degrees_offset
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormCategory {
    BodyLeg,
    LayoutToPike,
    LayoutToOverarch,
    PikePosition,
    TuckPosition,
    Ski,
    Foot,
}

impl FormCategory {
    pub const ALL: [FormCategory; 7] = [
        FormCategory::BodyLeg,
        FormCategory::LayoutToPike,
        FormCategory::LayoutToOverarch,
        FormCategory::PikePosition,
        FormCategory::TuckPosition,
        FormCategory::Ski,
        FormCategory::Foot,
    ];

    /// Deduction item label used in dataset records.
    pub fn item(self) -> &'static str {
        match self {
            FormCategory::BodyLeg => "Body Leg",
            FormCategory::LayoutToPike => "Layout Pike",
            FormCategory::LayoutToOverarch => "Layout Overarch",
            FormCategory::PikePosition => "Pike Position",
            FormCategory::TuckPosition => "Tuck Position",
            FormCategory::Ski => "Ski Alignment",
            FormCategory::Foot => "Foot Placement",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormDeviation {
    pub category: FormCategory,
    pub angle_deg: f64,
    pub timestamp_s: f64,
    #[serde(default)]
    pub in_landing_prep: bool,
    #[serde(default)]
    pub waist_bend_deg: f64,
}

impl FormDeviation {
    pub fn new(category: FormCategory, angle_deg: f64, timestamp_s: f64) -> Self {
        FormDeviation {
            category,
            angle_deg,
            timestamp_s,
            in_landing_prep: false,
            waist_bend_deg: 0.0,
        }
    }

    pub fn landing_prep(waist_bend_deg: f64, timestamp_s: f64) -> Self {
        FormDeviation {
            category: FormCategory::LayoutToPike,
            angle_deg: waist_bend_deg,
            timestamp_s,
            in_landing_prep: true,
            waist_bend_deg,
        }
    }

    pub fn validate(&self) -> Result<(), RuleError> {
        if !(0.0..=180.0).contains(&self.angle_deg) || !(0.0..=180.0).contains(&self.waist_bend_deg) {
            return Err(RuleError::InvalidObservation(format!(
                "form deviation angle {}° / waist bend {}° outside [0, 180]",
                self.angle_deg, self.waist_bend_deg
            )));
        }
        if !self.timestamp_s.is_finite() {
            return Err(RuleError::InvalidObservation("form deviation timestamp is not finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contact {
    #[default]
    None,
    Hand,
    Body,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandingFlag {
    SevereImbalance,
    Sideways,
    Circling,
    Backward,
}

impl LandingFlag {
    pub const ALL: [LandingFlag; 4] = [
        LandingFlag::SevereImbalance,
        LandingFlag::Sideways,
        LandingFlag::Circling,
        LandingFlag::Backward,
    ];

    pub fn item(self) -> &'static str {
        match self {
            LandingFlag::SevereImbalance => "Severe Imbalance",
            LandingFlag::Sideways => "Skiing Sideways",
            LandingFlag::Circling => "Circling",
            LandingFlag::Backward => "Skiing Backward",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandingObservation {
    #[serde(default)]
    pub contact: Contact,
    #[serde(default)]
    pub flags: BTreeSet<LandingFlag>,
}

/// Landing penalties before the stage score is computed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LandingAssessment {
    /// Sum of flag penalties.
    pub deduction: Tenths,
    /// Highest landing score the contact class allows.
    pub cap: Tenths,
    pub flags: Vec<(LandingFlag, Tenths, SeverityClass)>,
}

/// Technical take-off mark out of 1.0.
pub fn takeoff_technical_score(obs: &TakeoffObservation, cfg: &RuleConfig) -> Tenths {
    if obs.missed {
        return Tenths::ZERO;
    }
    let line = match obs.posture {
        TakeoffPosture::BodyLeg => &cfg.takeoff.body_leg,
        TakeoffPosture::BodyArch => &cfg.takeoff.body_arch,
        TakeoffPosture::BodyPike => &cfg.takeoff.body_pike,
    };
    let deviation = obs.deviation_deg.max(0.0);
    let raw = round_scaled(line.intercept_tenths - deviation / line.degrees_per_tenth);
    Tenths(raw).clamp(Tenths::ZERO, TAKEOFF_MAX)
}

/// Severity of a technical take-off shortfall: good take-offs (0.7 to 0.9)
/// are minor, non-optimal (0.4 to 0.6) medium, bad (0.3 to 0.0) major.
/// Returns `None` for a full mark.
pub fn takeoff_severity(score: Tenths, missed: bool) -> Option<SeverityClass> {
    if missed {
        return Some(SeverityClass::Absolute);
    }
    match score.get() {
        s if s >= TAKEOFF_MAX.get() => None,
        7.. => Some(SeverityClass::Minor),
        4.. => Some(SeverityClass::Medium),
        _ => Some(SeverityClass::Major),
    }
}

/// Instrument-derived height and distance mark out of 1.0.
pub fn height_distance_score(obs: &TakeoffObservation) -> Result<Tenths, RuleError> {
    let hd = obs.instrument_hd;
    if !(0.0..=1.0).contains(&hd) {
        return Err(RuleError::OutOfRangeReading(hd));
    }
    Ok(Tenths(round_scaled(hd * 10.0)))
}

pub const EARLY_START_REFERENCE_DEG: f64 = 180.0;

/// Finish reference for a twist: 315° on doubles, 270° on triples.
pub fn late_finish_reference_deg(circles: usize) -> Result<f64, RuleError> {
    match circles {
        2 => Ok(315.0),
        3 => Ok(270.0),
        n => Err(RuleError::UnsupportedFlipCount(n)),
    }
}

/// Offset for a start observed at rotation position `start_deg`; starting at
/// or after the reference is never early.
pub fn degrees_early(start_deg: f64) -> f64 {
    (EARLY_START_REFERENCE_DEG - start_deg).max(0.0)
}

/// Offset for a twist concluded at rotation position `finish_deg`.
pub fn degrees_late(circles: usize, finish_deg: f64) -> Result<f64, RuleError> {
    Ok((finish_deg - late_finish_reference_deg(circles)?).max(0.0))
}

/// Deduction for a twist, tuck or pike started `degrees_early` before the
/// 180° reference.
pub fn early_start_deduction(degrees_early: f64, cfg: &RuleConfig) -> (Tenths, SeverityClass) {
    cfg.timing.early_start.evaluate(degrees_early)
}

/// Deduction for a twist concluded `degrees_late` past the reference
/// (315° on doubles, 270° on triples).
pub fn late_finish_deduction(
    circles: usize,
    degrees_late: f64,
    cfg: &RuleConfig,
) -> Result<(Tenths, SeverityClass), RuleError> {
    let table = match circles {
        2 => &cfg.timing.late_finish_double,
        3 => &cfg.timing.late_finish_triple,
        n => return Err(RuleError::UnsupportedFlipCount(n)),
    };
    Ok(table.evaluate(degrees_late))
}

pub fn form_table(category: FormCategory, cfg: &RuleConfig) -> &BandTable {
    let f = &cfg.form;
    match category {
        FormCategory::BodyLeg => &f.body_leg,
        FormCategory::LayoutToPike => &f.layout_to_pike,
        FormCategory::LayoutToOverarch => &f.layout_to_overarch,
        FormCategory::PikePosition => &f.pike_position,
        FormCategory::TuckPosition => &f.tuck_position,
        FormCategory::Ski => &f.ski,
        FormCategory::Foot => &f.foot,
    }
}

/// Deduction for one form deviation.
///
/// During landing preparation only the waist bend is judged: up to the
/// threshold it is free, beyond it costs a fixed minor penalty.
pub fn form_deviation_deduction(dev: &FormDeviation, cfg: &RuleConfig) -> (Tenths, SeverityClass) {
    if dev.in_landing_prep {
        let prep = &cfg.landing_prep;
        let points = if dev.waist_bend_deg > prep.waist_bend_threshold_deg {
            Tenths(prep.penalty_tenths)
        } else {
            Tenths::ZERO
        };
        return (points, SeverityClass::Minor);
    }
    form_table(dev.category, cfg).evaluate(dev.angle_deg)
}

/// Total form deduction after per-severity caps.
pub fn apply_form_break_caps(items: &[(Tenths, SeverityClass)], cfg: &RuleConfig) -> Tenths {
    let caps = &cfg.form_caps;
    let mut sums = [0i32; 4];
    for (points, severity) in items {
        sums[*severity as usize] += points.get().max(0);
    }
    let capped = sums[SeverityClass::Minor as usize].min(caps.minor_tenths)
        + sums[SeverityClass::Medium as usize].min(caps.medium_tenths)
        + sums[SeverityClass::Major as usize].min(caps.major_tenths)
        + sums[SeverityClass::Absolute as usize];
    Tenths(capped.min(FORM_MAX.get()))
}

pub fn flag_penalty(flag: LandingFlag, cfg: &RuleConfig) -> &FlagPenalty {
    let l = &cfg.landing;
    match flag {
        LandingFlag::SevereImbalance => &l.severe_imbalance,
        LandingFlag::Sideways => &l.sideways,
        LandingFlag::Circling => &l.circling,
        LandingFlag::Backward => &l.backward,
    }
}

pub fn landing_cap(contact: Contact, cfg: &RuleConfig) -> Tenths {
    Tenths(match contact {
        Contact::None => cfg.landing.cap_no_contact_tenths,
        Contact::Hand => cfg.landing.cap_hand_contact_tenths,
        Contact::Body => cfg.landing.cap_body_contact_tenths,
    })
}

pub fn landing_deductions(obs: &LandingObservation, cfg: &RuleConfig) -> LandingAssessment {
    let flags: Vec<_> = obs
        .flags
        .iter()
        .map(|&flag| {
            let p = flag_penalty(flag, cfg);
            (flag, Tenths(p.tenths), p.severity)
        })
        .collect();
    LandingAssessment {
        deduction: flags.iter().map(|(_, t, _)| *t).sum(),
        cap: landing_cap(obs.contact, cfg),
        flags,
    }
}
