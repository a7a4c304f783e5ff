use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{RuleError, SeverityClass};
use crate::points::{round_scaled, Tenths};

/// The shipped rule configuration file. Parsing it yields
/// [`RuleConfig::default`].
pub const DEFAULT_RULES_TOML: &str = include_str!("../../data/rules.default.toml");

/// One linear segment of a deduction scale.
///
/// A band covers angles in `(from_deg, to_deg]` and interpolates linearly
/// from `from_tenths` to `to_tenths`. The first band of a table also
/// includes its lower edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub from_deg: f64,
    pub to_deg: f64,
    pub from_tenths: i32,
    pub to_tenths: i32,
    pub severity: SeverityClass,
}

/// A piecewise-linear deduction scale over an angle.
///
/// Angles at or below zero, or below the first band's lower edge, deduct
/// nothing. Angles past the last band clamp to its top value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandTable {
    pub bands: Vec<Band>,
}

impl BandTable {
    pub fn new(bands: Vec<Band>) -> Self {
        BandTable { bands }
    }

    fn band(from_deg: f64, to_deg: f64, from_tenths: i32, to_tenths: i32, severity: SeverityClass) -> Band {
        Band {
            from_deg,
            to_deg,
            from_tenths,
            to_tenths,
            severity,
        }
    }

    /// Standard minor/medium/major scale with the top band running to 180°.
    fn three_bands(edges: [f64; 3], minor: (i32, i32), medium: (i32, i32), major: (i32, i32)) -> Self {
        use SeverityClass::*;
        BandTable::new(vec![
            Self::band(edges[0], edges[1], minor.0, minor.1, Minor),
            Self::band(edges[1], edges[2], medium.0, medium.1, Medium),
            Self::band(edges[2], 180.0, major.0, major.1, Major),
        ])
    }

    pub fn evaluate(&self, angle_deg: f64) -> (Tenths, SeverityClass) {
        let first = &self.bands[0];
        if angle_deg <= 0.0 || angle_deg < first.from_deg || angle_deg.is_nan() {
            return (Tenths::ZERO, first.severity);
        }
        for band in &self.bands {
            if angle_deg <= band.to_deg {
                let frac = (angle_deg - band.from_deg) / (band.to_deg - band.from_deg);
                let span = f64::from(band.to_tenths - band.from_tenths);
                let value = round_scaled(f64::from(band.from_tenths) + span * frac);
                return (Tenths(value), band.severity);
            }
        }
        let last = self.bands.last().expect("validated non-empty");
        (Tenths(last.to_tenths), last.severity)
    }

    pub fn max_tenths(&self) -> Tenths {
        Tenths(self.bands.last().map_or(0, |b| b.to_tenths))
    }

    fn validate(&self, name: &str) -> Result<(), RuleError> {
        let bad = |msg: String| Err(RuleError::InvalidConfig(format!("{name}: {msg}")));
        if self.bands.is_empty() {
            return bad("no bands".into());
        }
        for (i, b) in self.bands.iter().enumerate() {
            if !(b.from_deg.is_finite() && b.to_deg.is_finite()) || b.from_deg < 0.0 || b.from_deg >= b.to_deg {
                return bad(format!("band {i} has an empty or invalid angle range"));
            }
            if b.from_tenths < 0 || b.from_tenths > b.to_tenths {
                return bad(format!("band {i} decreases"));
            }
            if let Some(prev) = i.checked_sub(1).map(|j| &self.bands[j]) {
                if prev.to_deg != b.from_deg {
                    return bad(format!("band {i} does not start where band {} ends", i - 1));
                }
                if b.from_tenths < prev.to_tenths {
                    return bad(format!("band {i} starts below the previous band's top"));
                }
                if b.severity < prev.severity {
                    return bad(format!("band {i} has a lower severity than band {}", i - 1));
                }
            }
        }
        Ok(())
    }
}

/// Affine technical take-off rule: `score = intercept - angle / degrees_per_tenth`,
/// clamped to `[0, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TakeoffLine {
    pub intercept_tenths: f64,
    pub degrees_per_tenth: f64,
}

impl Default for TakeoffLine {
    fn default() -> Self {
        // 20° -> 0.9 and 30° -> 0.8
        TakeoffLine {
            intercept_tenths: 11.0,
            degrees_per_tenth: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TakeoffRules {
    pub body_leg: TakeoffLine,
    pub body_arch: TakeoffLine,
    pub body_pike: TakeoffLine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingRules {
    /// Degrees the twist starts before the 180° reference.
    pub early_start: BandTable,
    /// Degrees past the 315° reference.
    pub late_finish_double: BandTable,
    /// Degrees past the 270° reference.
    pub late_finish_triple: BandTable,
}

impl Default for TimingRules {
    fn default() -> Self {
        use SeverityClass::*;
        let band = BandTable::band;
        TimingRules {
            early_start: BandTable::new(vec![band(0.0, 45.0, 0, 5, Minor), band(45.0, 90.0, 5, 10, Medium)]),
            late_finish_double: BandTable::new(vec![
                band(0.0, 45.0, 0, 5, Minor),
                band(45.0, 90.0, 5, 10, Medium),
                band(90.0, 135.0, 10, 15, Major),
            ]),
            late_finish_triple: BandTable::new(vec![
                band(0.0, 90.0, 0, 5, Minor),
                band(90.0, 135.0, 5, 10, Medium),
                band(135.0, 180.0, 10, 15, Major),
            ]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormRules {
    pub body_leg: BandTable,
    pub layout_to_pike: BandTable,
    pub layout_to_overarch: BandTable,
    pub pike_position: BandTable,
    pub tuck_position: BandTable,
    pub ski: BandTable,
    pub foot: BandTable,
}

impl Default for FormRules {
    fn default() -> Self {
        let body = |edges| BandTable::three_bands(edges, (1, 4), (5, 8), (9, 17));
        FormRules {
            body_leg: body([10.0, 50.0, 90.0]),
            layout_to_pike: body([0.0, 20.0, 90.0]),
            layout_to_overarch: body([0.0, 20.0, 40.0]),
            pike_position: body([10.0, 30.0, 45.0]),
            tuck_position: body([10.0, 30.0, 45.0]),
            ski: BandTable::three_bands([0.0, 20.0, 45.0], (1, 3), (4, 6), (7, 9)),
            foot: BandTable::three_bands([0.0, 20.0, 45.0], (1, 3), (4, 6), (7, 12)),
        }
    }
}

/// Waist bend allowed while preparing to land in the final flip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandingPrepRule {
    pub waist_bend_threshold_deg: f64,
    pub penalty_tenths: i32,
}

impl Default for LandingPrepRule {
    fn default() -> Self {
        LandingPrepRule {
            waist_bend_threshold_deg: 45.0,
            penalty_tenths: 2,
        }
    }
}

/// Per-severity ceilings on summed form-break deductions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormCaps {
    pub minor_tenths: i32,
    pub medium_tenths: i32,
    pub major_tenths: i32,
}

impl Default for FormCaps {
    fn default() -> Self {
        // 25% / 50% / 100% of 5.0; 1.25 floored to tenths
        FormCaps {
            minor_tenths: 12,
            medium_tenths: 25,
            major_tenths: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagPenalty {
    pub tenths: i32,
    pub severity: SeverityClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandingRules {
    pub cap_no_contact_tenths: i32,
    pub cap_hand_contact_tenths: i32,
    pub cap_body_contact_tenths: i32,
    pub severe_imbalance: FlagPenalty,
    pub sideways: FlagPenalty,
    pub circling: FlagPenalty,
    pub backward: FlagPenalty,
}

impl Default for LandingRules {
    fn default() -> Self {
        use SeverityClass::*;
        let flag = |tenths, severity| FlagPenalty { tenths, severity };
        LandingRules {
            cap_no_contact_tenths: 30,
            cap_hand_contact_tenths: 20,
            cap_body_contact_tenths: 15,
            severe_imbalance: flag(5, Medium),
            sideways: flag(5, Medium),
            circling: flag(7, Medium),
            backward: flag(10, Major),
        }
    }
}

/// Deduction applied when a jump does not show separation between flips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationRule {
    pub missing_tenths: i32,
    pub severity: SeverityClass,
}

impl Default for SeparationRule {
    fn default() -> Self {
        SeparationRule {
            missing_tenths: 0,
            severity: SeverityClass::Minor,
        }
    }
}

/// Every constant of the deduction scales. Angles in degrees, points in
/// tenths.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleConfig {
    pub takeoff: TakeoffRules,
    pub timing: TimingRules,
    pub form: FormRules,
    pub landing_prep: LandingPrepRule,
    pub form_caps: FormCaps,
    pub landing: LandingRules,
    pub separation: SeparationRule,
}

impl RuleConfig {
    pub fn from_toml(text: &str) -> Result<Self, RuleError> {
        let cfg: RuleConfig = toml::from_str(text).map_err(|e| RuleError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, RuleError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RuleError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("rule config serializes")
    }

    /// SHA-256 over the canonical JSON form of the configuration.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("rule config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn validate(&self) -> Result<(), RuleError> {
        for (name, line) in [
            ("takeoff.body_leg", &self.takeoff.body_leg),
            ("takeoff.body_arch", &self.takeoff.body_arch),
            ("takeoff.body_pike", &self.takeoff.body_pike),
        ] {
            if !(line.degrees_per_tenth > 0.0 && line.degrees_per_tenth.is_finite() && line.intercept_tenths.is_finite()) {
                return Err(RuleError::InvalidConfig(format!("{name}: degrees_per_tenth must be positive")));
            }
        }
        let t = &self.timing;
        t.early_start.validate("timing.early_start")?;
        t.late_finish_double.validate("timing.late_finish_double")?;
        t.late_finish_triple.validate("timing.late_finish_triple")?;
        let f = &self.form;
        for (name, table) in [
            ("form.body_leg", &f.body_leg),
            ("form.layout_to_pike", &f.layout_to_pike),
            ("form.layout_to_overarch", &f.layout_to_overarch),
            ("form.pike_position", &f.pike_position),
            ("form.tuck_position", &f.tuck_position),
            ("form.ski", &f.ski),
            ("form.foot", &f.foot),
        ] {
            table.validate(name)?;
        }
        let c = &self.form_caps;
        if !(0 <= c.minor_tenths && c.minor_tenths <= c.medium_tenths && c.medium_tenths <= c.major_tenths && c.major_tenths == 50) {
            return Err(RuleError::InvalidConfig(
                "form_caps: need 0 <= minor <= medium <= major = 50".into(),
            ));
        }
        let p = &self.landing_prep;
        if p.penalty_tenths < 0 || !(p.waist_bend_threshold_deg >= 0.0) {
            return Err(RuleError::InvalidConfig("landing_prep: negative threshold or penalty".into()));
        }
        let l = &self.landing;
        if !(0 <= l.cap_body_contact_tenths
            && l.cap_body_contact_tenths <= l.cap_hand_contact_tenths
            && l.cap_hand_contact_tenths <= l.cap_no_contact_tenths
            && l.cap_no_contact_tenths <= 30)
        {
            return Err(RuleError::InvalidConfig(
                "landing: need 0 <= body cap <= hand cap <= no-contact cap <= 30".into(),
            ));
        }
        for flag in [&l.severe_imbalance, &l.sideways, &l.circling, &l.backward] {
            if flag.tenths < 0 {
                return Err(RuleError::InvalidConfig("landing: negative flag penalty".into()));
            }
        }
        if self.separation.missing_tenths < 0 {
            return Err(RuleError::InvalidConfig("separation: negative penalty".into()));
        }
        Ok(())
    }
}
