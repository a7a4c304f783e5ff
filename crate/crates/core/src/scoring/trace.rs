use serde::{Deserialize, Serialize};

use super::ScoringError;
use crate::jumpcode::{Gender, JumpCode};
use crate::rulebook::{FormDeviation, LandingObservation, TakeoffObservation, TwistTimingEvent};

/// A time span in seconds, serialized as `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub const fn new(start: f64, end: f64) -> Self {
        Interval { start, end }
    }

    pub fn midpoint(&self) -> f64 {
        (self.start + self.end) / 2.0
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    /// Closed containment; deduction timestamps may sit on a stage edge.
    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t <= self.end
    }

    fn is_proper(&self) -> bool {
        self.start.is_finite() && self.end.is_finite() && self.start < self.end
    }
}

impl From<(f64, f64)> for Interval {
    fn from((start, end): (f64, f64)) -> Self {
        Interval { start, end }
    }
}

impl From<Interval> for (f64, f64) {
    fn from(i: Interval) -> Self {
        (i.start, i.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Air,
    Form,
    Landing,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Air => "air",
            Stage::Form => "form",
            Stage::Landing => "landing",
        })
    }
}

/// Contiguous air / form / landing spans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageBoundaries {
    pub air: Interval,
    pub form: Interval,
    pub landing: Interval,
}

impl StageBoundaries {
    pub fn from_times(t0: f64, t1: f64, t2: f64, t3: f64) -> Self {
        StageBoundaries {
            air: Interval::new(t0, t1),
            form: Interval::new(t1, t2),
            landing: Interval::new(t2, t3),
        }
    }

    /// Typical timeline for a jump with `flips` somersaults.
    pub fn nominal(flips: usize) -> Self {
        let t1 = 1.6;
        let t2 = ms(t1 + 0.8 + 0.7 * flips as f64);
        Self::from_times(0.0, t1, t2, ms(t2 + 3.2))
    }

    pub fn stage(&self, stage: Stage) -> Interval {
        match stage {
            Stage::Air => self.air,
            Stage::Form => self.form,
            Stage::Landing => self.landing,
        }
    }

    pub fn span(&self) -> Interval {
        Interval::new(self.air.start, self.landing.end)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.air.is_proper() && self.form.is_proper() && self.landing.is_proper()) {
            return Err("stage intervals must satisfy start < end".into());
        }
        if self.air.end != self.form.start || self.form.end != self.landing.start {
            return Err("stages must be contiguous".into());
        }
        Ok(())
    }

    /// Splits the form stage evenly (to the millisecond) into one span per flip.
    pub fn even_sub_actions(&self, flips: usize) -> Vec<Interval> {
        let form = self.form;
        let edge = |i: usize| match i {
            0 => form.start,
            i if i == flips => form.end,
            i => ms(form.start + form.duration() * i as f64 / flips as f64),
        };
        (0..flips).map(|i| Interval::new(edge(i), edge(i + 1))).collect()
    }
}

fn ms(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

fn default_true() -> bool {
    true
}

/// Everything one judge observed about one jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutionTrace {
    pub code: JumpCode,
    pub gender: Gender,
    pub boundaries: StageBoundaries,
    /// One span per flip, in flip order.
    pub sub_actions: Vec<Interval>,
    pub takeoff: TakeoffObservation,
    #[serde(default)]
    pub timing_events: Vec<TwistTimingEvent>,
    #[serde(default)]
    pub form_deviations: Vec<FormDeviation>,
    #[serde(default)]
    pub landing: LandingObservation,
    #[serde(default = "default_true")]
    pub separation_shown: bool,
}

impl ExecutionTrace {
    /// A flawless jump on the nominal timeline.
    pub fn clean(code: JumpCode, gender: Gender) -> Self {
        let boundaries = StageBoundaries::nominal(code.flip_count());
        let sub_actions = boundaries.even_sub_actions(code.flip_count());
        ExecutionTrace {
            code,
            gender,
            boundaries,
            sub_actions,
            takeoff: TakeoffObservation::clean(),
            timing_events: Vec::new(),
            form_deviations: Vec::new(),
            landing: LandingObservation::default(),
            separation_shown: true,
        }
    }

    pub fn validate(&self) -> Result<(), ScoringError> {
        let bad = |msg: String| Err(ScoringError::InvalidTrace(msg));
        if let Err(msg) = self.boundaries.validate() {
            return bad(msg);
        }
        let flips = self.code.flip_count();
        if self.sub_actions.len() != flips {
            return bad(format!(
                "{} sub-actions for a {flips}-flip jump",
                self.sub_actions.len()
            ));
        }
        let form = self.boundaries.form;
        let mut previous_end = form.start;
        for (i, span) in self.sub_actions.iter().enumerate() {
            if !span.is_proper() || span.start < previous_end || span.end > form.end {
                return bad(format!("sub-action {} must lie inside the form stage in order", i + 1));
            }
            previous_end = span.end;
        }
        self.takeoff.validate()?;
        for event in &self.timing_events {
            event.validate(flips)?;
        }
        for dev in &self.form_deviations {
            dev.validate()?;
            if !form.contains(dev.timestamp_s) {
                return bad(format!(
                    "form deviation at {}s is outside the form stage [{}, {}]",
                    dev.timestamp_s, form.start, form.end
                ));
            }
        }
        Ok(())
    }
}
