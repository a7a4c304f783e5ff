//! Seeded synthetic competitions.
//!
//! Each jump draws from its own random stream keyed by
//! `(seed, athlete, jump, judge)`: slot 0 samples the performance, slots
//! 1..=5 the judges' perception of it. Adding jumps, athletes or judges
//! never shifts the draws of existing ones.

mod output;

pub use output::{write_dataset, DatasetManifest, MANIFEST_FORMAT};

use rand::seq::IndexedRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::jumpcode::{parse, DifficultyCatalog, Gender, JumpCode, Position};
use crate::rulebook::{
    Contact, FormCategory, FormDeviation, LandingFlag, RuleConfig, TakeoffObservation, TakeoffPosture, TimingKind,
    TwistTimingEvent,
};
use crate::scoring::{
    aggregate_panel_with, score_trace, AnnotatedJump, ExecutionTrace, Interval, ScoringError, StageBoundaries,
    TrimPolicy, PANEL_SIZE,
};

/// Landing-zone geometry; used only to sample where athletes touch down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HillGeometry {
    pub length_m: f64,
    pub slope_deg: f64,
    pub slope_tolerance_deg: f64,
}

impl Default for HillGeometry {
    fn default() -> Self {
        HillGeometry {
            length_m: 30.0,
            slope_deg: 37.0,
            slope_tolerance_deg: 1.0,
        }
    }
}

/// Error model. Probabilities and magnitudes apply to a skill-0 athlete and
/// scale by `1 - skill`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorRates {
    pub takeoff_sigma_deg: f64,
    pub missed_takeoff_prob: f64,
    /// Spread of the touchdown point as a fraction of the landing-zone length.
    pub touchdown_spread: f64,
    pub early_start_prob: f64,
    pub early_start_sigma_deg: f64,
    pub late_finish_prob: f64,
    pub late_finish_sigma_deg: f64,
    pub form_break_prob: f64,
    pub form_sigma_deg: f64,
    pub landing_prep_prob: f64,
    pub waist_bend_sigma_deg: f64,
    pub hand_contact_prob: f64,
    pub body_contact_prob: f64,
    pub landing_flag_prob: f64,
    pub no_separation_prob: f64,
}

impl Default for ErrorRates {
    fn default() -> Self {
        ErrorRates {
            takeoff_sigma_deg: 45.0,
            missed_takeoff_prob: 0.05,
            touchdown_spread: 0.35,
            early_start_prob: 0.4,
            early_start_sigma_deg: 40.0,
            late_finish_prob: 0.4,
            late_finish_sigma_deg: 60.0,
            form_break_prob: 0.7,
            form_sigma_deg: 45.0,
            landing_prep_prob: 0.5,
            waist_bend_sigma_deg: 40.0,
            hand_contact_prob: 0.2,
            body_contact_prob: 0.15,
            landing_flag_prob: 0.15,
            no_separation_prob: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub jump_count: usize,
    pub athlete_count: usize,
    pub judge_noise_sigma_deg: f64,
    pub flag_flip_prob: f64,
    pub errors: ErrorRates,
    pub hill: HillGeometry,
    pub trim_policy: TrimPolicy,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            jump_count: 550,
            athlete_count: 24,
            judge_noise_sigma_deg: 2.0,
            flag_flip_prob: 0.02,
            errors: ErrorRates::default(),
            hill: HillGeometry::default(),
            trim_policy: TrimPolicy::PerTotal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("athlete {athlete}: {message}")]
    InvalidProfile { athlete: String, message: String },
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

impl SimConfig {
    pub fn with_seed(seed: u64) -> Self {
        SimConfig {
            seed,
            ..SimConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let e = &self.errors;
        let probabilities = [
            ("flag_flip_prob", self.flag_flip_prob),
            ("missed_takeoff_prob", e.missed_takeoff_prob),
            ("early_start_prob", e.early_start_prob),
            ("late_finish_prob", e.late_finish_prob),
            ("form_break_prob", e.form_break_prob),
            ("landing_prep_prob", e.landing_prep_prob),
            ("hand_contact_prob", e.hand_contact_prob),
            ("body_contact_prob", e.body_contact_prob),
            ("landing_flag_prob", e.landing_flag_prob),
            ("no_separation_prob", e.no_separation_prob),
        ];
        for (name, p) in probabilities {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidConfig(format!("{name} = {p} is not a probability")));
            }
        }
        if e.hand_contact_prob + e.body_contact_prob > 1.0 {
            return Err(SimError::InvalidConfig("contact probabilities sum above 1".into()));
        }
        let sigmas = [
            ("judge_noise_sigma_deg", self.judge_noise_sigma_deg),
            ("takeoff_sigma_deg", e.takeoff_sigma_deg),
            ("touchdown_spread", e.touchdown_spread),
            ("early_start_sigma_deg", e.early_start_sigma_deg),
            ("late_finish_sigma_deg", e.late_finish_sigma_deg),
            ("form_sigma_deg", e.form_sigma_deg),
            ("waist_bend_sigma_deg", e.waist_bend_sigma_deg),
        ];
        for (name, s) in sigmas {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(SimError::InvalidConfig(format!("{name} = {s} must be >= 0")));
            }
        }
        if !(self.hill.length_m > 0.0) {
            return Err(SimError::InvalidConfig("hill length must be positive".into()));
        }
        if self.athlete_count == 0 {
            return Err(SimError::InvalidConfig("need at least one athlete".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AthleteProfile {
    pub id: String,
    pub gender: Gender,
    pub skill: f64,
    pub repertoire: Vec<String>,
}

impl AthleteProfile {
    pub fn validate(&self, catalog: &DifficultyCatalog) -> Result<(), SimError> {
        let bad = |message: String| {
            Err(SimError::InvalidProfile {
                athlete: self.id.clone(),
                message,
            })
        };
        if !(0.0..=1.0).contains(&self.skill) {
            return bad(format!("skill {} outside [0, 1]", self.skill));
        }
        if self.repertoire.is_empty() {
            return bad("empty repertoire".into());
        }
        for code in &self.repertoire {
            if catalog.get(code).is_none() {
                return bad(format!("{code} is not in the catalog"));
            }
        }
        Ok(())
    }
}

/// Deterministic random stream for one `(seed, athlete, jump, judge)` key.
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(seed: u64, athlete: u64, jump: u64, judge: u64) -> Self {
        let mut key = [0u8; 32];
        for (chunk, part) in key.chunks_exact_mut(8).zip([seed, athlete, jump, judge]) {
            chunk.copy_from_slice(&part.to_le_bytes());
        }
        RngStream(ChaCha8Rng::from_seed(key))
    }

    fn half_normal(&mut self, sigma: f64) -> f64 {
        let z: f64 = self.0.sample(StandardNormal);
        z.abs() * sigma
    }

    fn normal(&mut self, mean: f64, sigma: f64) -> f64 {
        let z: f64 = self.0.sample(StandardNormal);
        mean + z * sigma
    }

    fn chance(&mut self, p: f64) -> bool {
        self.0.random_bool(p.clamp(0.0, 1.0))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

const PERFORMANCE_SLOT: u64 = 0;
const ROSTER_KEY: u64 = u64::MAX;

fn ms(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

fn tenth_deg(a: f64) -> f64 {
    (a * 10.0).round() / 10.0
}

/// A generated roster: alternating men and women, skills spread over
/// `[0.35, 0.95]`, repertoires weighted toward three-circle jumps.
pub fn default_roster(seed: u64, count: usize, catalog: &DifficultyCatalog) -> Vec<AthleteProfile> {
    let mut rng = RngStream::new(seed, ROSTER_KEY, 0, 0);
    let by_circles = |n: usize| catalog.entries().filter(|e| e.circles == n).map(|e| e.code.clone()).collect::<Vec<_>>();
    let pools = [by_circles(1), by_circles(2), by_circles(3)];
    (0..count)
        .map(|i| {
            let gender = if i % 2 == 0 { Gender::Men } else { Gender::Women };
            let skill = (rng.0.random_range(0.35..=0.95_f64) * 100.0).round() / 100.0;
            let mut repertoire: Vec<String> = Vec::new();
            while repertoire.len() < 3 {
                let roll: f64 = rng.0.random();
                let pool = if roll < 0.7 {
                    &pools[2]
                } else if roll < 0.95 {
                    &pools[1]
                } else {
                    &pools[0]
                };
                let pool = if pool.is_empty() { pools.iter().find(|p| !p.is_empty()).expect("catalog is non-empty") } else { pool };
                let code = pool.choose(&mut rng.0).expect("non-empty pool").clone();
                if !repertoire.contains(&code) || repertoire.len() >= catalog.len() {
                    repertoire.push(code);
                }
            }
            AthleteProfile {
                id: format!("a{i:02}"),
                gender,
                skill,
                repertoire,
            }
        })
        .collect()
}

fn form_categories(position: Position) -> &'static [FormCategory] {
    use FormCategory::*;
    match position {
        Position::Lay => &[BodyLeg, LayoutToPike, LayoutToOverarch, Ski, Foot],
        Position::Tuck => &[TuckPosition, BodyLeg, Ski, Foot],
        Position::Pike => &[PikePosition, BodyLeg, Ski, Foot],
    }
}

/// Samples how one athlete actually performed one jump.
pub fn sample_trace(profile: &AthleteProfile, code: &JumpCode, cfg: &SimConfig, rng: &mut RngStream) -> ExecutionTrace {
    let e = &cfg.errors;
    let scale = 1.0 - profile.skill.clamp(0.0, 1.0);
    let flips = code.flip_count();

    let air = rng.normal(1.6, 0.1).clamp(1.3, 1.9);
    let form = (0.8 + 0.7 * flips as f64 + rng.normal(0.0, 0.1)).clamp(1.2, 3.4);
    let landing = rng.normal(3.2, 0.3).clamp(2.5, 4.0);
    let t1 = ms(air);
    let t2 = ms(air + form);
    let t3 = ms(air + form + landing);
    let boundaries = StageBoundaries::from_times(0.0, t1, t2, t3);

    let weights: Vec<f64> = (0..flips).map(|_| 1.0 + rng.0.random_range(-0.1..0.1)).collect();
    let weight_sum: f64 = weights.iter().sum();
    let mut sub_actions = Vec::with_capacity(flips);
    let mut start = t1;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        let end = if i + 1 == flips { t2 } else { ms(t1 + (t2 - t1) * acc / weight_sum) };
        sub_actions.push(Interval::new(start, end));
        start = end;
    }

    let posture = *[TakeoffPosture::BodyLeg, TakeoffPosture::BodyArch, TakeoffPosture::BodyPike]
        .choose(&mut rng.0)
        .expect("non-empty");
    let deviation_deg = tenth_deg(rng.half_normal(e.takeoff_sigma_deg * scale).min(180.0));
    let missed = rng.chance(e.missed_takeoff_prob * scale);
    let half = cfg.hill.length_m / 2.0;
    let touchdown = rng.normal(half, cfg.hill.length_m * e.touchdown_spread * scale);
    let instrument_hd = ((1.0 - (touchdown - half).abs() / half).clamp(0.0, 1.0) * 100.0).round() / 100.0;
    let takeoff = TakeoffObservation {
        posture,
        deviation_deg,
        missed,
        instrument_hd,
    };

    let mut timing_events = Vec::new();
    let mut form_deviations = Vec::new();
    for (i, flip) in code.flips().iter().enumerate() {
        let span = sub_actions[i];
        if rng.chance(e.early_start_prob * scale) {
            timing_events.push(TwistTimingEvent {
                flip_index: i + 1,
                kind: TimingKind::EarlyStart,
                degrees_offset: tenth_deg(rng.half_normal(e.early_start_sigma_deg * scale).min(180.0)),
            });
        }
        if flip.twists() > 0 && (2..=3).contains(&flips) && rng.chance(e.late_finish_prob * scale) {
            timing_events.push(TwistTimingEvent {
                flip_index: i + 1,
                kind: TimingKind::LateFinish,
                degrees_offset: tenth_deg(rng.half_normal(e.late_finish_sigma_deg * scale).min(360.0)),
            });
        }
        if rng.chance(e.form_break_prob * scale) {
            let category = *form_categories(flip.position()).choose(&mut rng.0).expect("non-empty");
            let angle = tenth_deg(rng.half_normal(e.form_sigma_deg * scale).min(180.0));
            let t = ms(rng.0.random_range(span.start..span.end)).clamp(span.start, span.end);
            form_deviations.push(FormDeviation::new(category, angle, t));
        }
    }
    if rng.chance(e.landing_prep_prob * scale) {
        let last = sub_actions[flips - 1];
        let bend = tenth_deg(rng.half_normal(e.waist_bend_sigma_deg * scale).min(180.0));
        let t = ms(last.start + 0.8 * last.duration()).clamp(last.start, last.end);
        form_deviations.push(FormDeviation::landing_prep(bend, t));
    }
    let separation_shown = !(flips > 1 && rng.chance(e.no_separation_prob * scale));

    let roll: f64 = rng.0.random();
    let contact = if roll < e.body_contact_prob * scale {
        Contact::Body
    } else if roll < (e.body_contact_prob + e.hand_contact_prob) * scale {
        Contact::Hand
    } else {
        Contact::None
    };
    let flags = LandingFlag::ALL
        .into_iter()
        .filter(|_| rng.chance(e.landing_flag_prob * scale))
        .collect();

    ExecutionTrace {
        code: code.clone(),
        gender: profile.gender,
        boundaries,
        sub_actions,
        takeoff,
        timing_events,
        form_deviations,
        landing: crate::rulebook::LandingObservation { contact, flags },
        separation_shown,
    }
}

/// One judge's noisy reading of a trace. Angles get zero-mean Gaussian
/// noise, booleans flip with `flag_flip_prob`; event counts and the code are
/// unchanged. Instrument readings are shared by all judges.
pub fn perceive(trace: &ExecutionTrace, cfg: &SimConfig, rng: &mut RngStream) -> ExecutionTrace {
    let sigma = cfg.judge_noise_sigma_deg;
    let flip = cfg.flag_flip_prob;
    let mut seen = trace.clone();

    seen.takeoff.deviation_deg = rng.normal(seen.takeoff.deviation_deg, sigma).clamp(0.0, 180.0);
    seen.takeoff.missed ^= rng.chance(flip);
    for event in &mut seen.timing_events {
        event.degrees_offset = rng.normal(event.degrees_offset, sigma).clamp(0.0, 360.0);
    }
    for dev in &mut seen.form_deviations {
        dev.angle_deg = rng.normal(dev.angle_deg, sigma).clamp(0.0, 180.0);
        dev.waist_bend_deg = rng.normal(dev.waist_bend_deg, sigma).clamp(0.0, 180.0);
        dev.in_landing_prep ^= rng.chance(flip);
    }
    seen.separation_shown ^= rng.chance(flip);
    for flag in LandingFlag::ALL {
        if rng.chance(flip) && !seen.landing.flags.remove(&flag) {
            seen.landing.flags.insert(flag);
        }
    }
    seen
}

/// Runs a whole competition. Jump `k` goes to athlete `k % n` as that
/// athlete's jump number `k / n`; output is ordered by athlete, then jump.
pub fn simulate_competition(
    cfg: &SimConfig,
    profiles: &[AthleteProfile],
    catalog: &DifficultyCatalog,
    rules: &RuleConfig,
) -> Result<Vec<AnnotatedJump>, SimError> {
    cfg.validate()?;
    if profiles.is_empty() {
        return Err(SimError::InvalidConfig("no athletes".into()));
    }
    for p in profiles {
        p.validate(catalog)?;
    }
    let n = profiles.len();
    let mut jobs: Vec<(usize, usize)> = (0..cfg.jump_count).map(|k| (k % n, k / n)).collect();
    jobs.sort_unstable();

    jobs.par_iter()
        .map(|&(athlete, jump)| simulate_jump(cfg, &profiles[athlete], athlete, jump, catalog, rules))
        .collect()
}

fn simulate_jump(
    cfg: &SimConfig,
    profile: &AthleteProfile,
    athlete: usize,
    jump: usize,
    catalog: &DifficultyCatalog,
    rules: &RuleConfig,
) -> Result<AnnotatedJump, SimError> {
    let key = |slot: u64| RngStream::new(cfg.seed, athlete as u64, jump as u64, slot);
    let mut rng = key(PERFORMANCE_SLOT);
    let code_text = profile.repertoire.choose(&mut rng.0).expect("validated non-empty");
    let code = parse(code_text).map_err(|e| ScoringError::InvalidTrace(e.to_string()))?;
    let trace = sample_trace(profile, &code, cfg, &mut rng);

    let scores = (1..=PANEL_SIZE as u64)
        .map(|judge| score_trace(&perceive(&trace, cfg, &mut key(judge)), rules))
        .collect::<Result<Vec<_>, _>>()?;
    let dd = catalog.lookup_dd(code.canonical_text(), profile.gender).map_err(ScoringError::from)?;
    let panel = aggregate_panel_with(&scores, dd, cfg.trim_policy)?;

    Ok(AnnotatedJump {
        id: format!("{}-j{jump:03}", profile.id),
        athlete: profile.id.clone(),
        gender: profile.gender,
        code,
        dd,
        trace,
        panel,
    })
}
