use num_rational::Ratio;
use serde::{Deserialize, Serialize, Serializer};

use super::{JudgeScore, ScoringError, Stage};
use crate::points::{round_half_even, round_ratio_half_even, Dd, FinalScore, Tenths};

pub const PANEL_SIZE: usize = 5;
const KEPT: i64 = 3;

/// Which marks the high/low trim applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrimPolicy {
    /// Drop the judges with the highest and lowest totals; stage sub-scores
    /// come from the same three judges.
    #[default]
    PerTotal,
    /// Trim each stage independently.
    PerStage,
}

/// Five judge marks reduced to one final score.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelResult {
    pub judges: Vec<JudgeScore>,
    /// The three judges whose totals were kept, ascending.
    pub kept_indices: [usize; 3],
    pub policy: TrimPolicy,
    /// Sum of the kept marks per stage, in tenths.
    stage_sums: [i64; 3],
    pub dd: Dd,
    pub final_score: FinalScore,
}

/// Indices of the earliest maximum and the earliest minimum (other than
/// the maximum's slot).
fn trimmed_indices(values: &[i32]) -> [usize; 3] {
    let mut max_i = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[max_i] {
            max_i = i;
        }
    }
    let mut min_i = usize::MAX;
    for (i, v) in values.iter().enumerate() {
        if i != max_i && (min_i == usize::MAX || *v < values[min_i]) {
            min_i = i;
        }
    }
    let mut kept = [0; 3];
    let mut k = 0;
    for i in 0..values.len() {
        if i != max_i && i != min_i {
            kept[k] = i;
            k += 1;
        }
    }
    kept
}

const STAGES: [Stage; 3] = [Stage::Air, Stage::Form, Stage::Landing];

fn stage_index(stage: Stage) -> usize {
    match stage {
        Stage::Air => 0,
        Stage::Form => 1,
        Stage::Landing => 2,
    }
}

pub fn aggregate_panel(scores: &[JudgeScore], dd: Dd) -> Result<PanelResult, ScoringError> {
    aggregate_panel_with(scores, dd, TrimPolicy::PerTotal)
}

pub fn aggregate_panel_with(scores: &[JudgeScore], dd: Dd, policy: TrimPolicy) -> Result<PanelResult, ScoringError> {
    if scores.len() != PANEL_SIZE {
        return Err(ScoringError::PanelSize(scores.len()));
    }
    if dd.ten_thousandths() == 0 {
        return Err(ScoringError::InvalidDd);
    }
    let totals: Vec<i32> = scores.iter().map(|s| s.total.get()).collect();
    let kept_indices = trimmed_indices(&totals);

    let mut stage_sums = [0i64; 3];
    for stage in STAGES {
        let kept = match policy {
            TrimPolicy::PerTotal => kept_indices,
            TrimPolicy::PerStage => {
                let marks: Vec<i32> = scores.iter().map(|s| s.stage(stage).get()).collect();
                trimmed_indices(&marks)
            }
        };
        stage_sums[stage_index(stage)] = kept.iter().map(|&i| i64::from(scores[i].stage(stage).get())).sum();
    }

    // sum of kept tenths / 3 judges / 10 * dd / 10_000, in hundredths
    let kept_sum: i64 = stage_sums.iter().sum();
    let product = i128::from(kept_sum) * i128::from(dd.ten_thousandths());
    let final_score = FinalScore(round_half_even(product, 3_000) as i64);

    Ok(PanelResult {
        judges: scores.to_vec(),
        kept_indices,
        policy,
        stage_sums,
        dd,
        final_score,
    })
}

impl PanelResult {
    /// Mean kept mark for a stage, in points.
    pub fn stage_subscore(&self, stage: Stage) -> Ratio<i64> {
        Ratio::new(self.stage_sums[stage_index(stage)], KEPT * 10)
    }

    /// Mean kept total before the DD multiplier, in points.
    pub fn pre_dd_mean(&self) -> Ratio<i64> {
        Ratio::new(self.stage_sums.iter().sum(), KEPT * 10)
    }

    /// Stage sub-score rounded half-even to tenths.
    pub fn stage_subscore_tenths(&self, stage: Stage) -> Tenths {
        Tenths(round_ratio_half_even(self.stage_subscore(stage) * 10) as i32)
    }

    pub fn pre_dd_mean_hundredths(&self) -> FinalScore {
        FinalScore(round_ratio_half_even(self.pre_dd_mean() * 100))
    }

    pub fn totals(&self) -> Vec<Tenths> {
        self.judges.iter().map(|j| j.total).collect()
    }
}

#[derive(Serialize)]
struct StageView {
    air: Tenths,
    form: Tenths,
    landing: Tenths,
}

#[derive(Serialize)]
struct PanelView<'a> {
    judges: &'a [JudgeScore],
    kept_indices: [usize; 3],
    policy: TrimPolicy,
    stage_scores: StageView,
    pre_dd_mean: FinalScore,
    pre_dd_mean_exact: String,
    dd: Dd,
    final_score: FinalScore,
}

impl Serialize for PanelResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let exact = self.pre_dd_mean();
        PanelView {
            judges: &self.judges,
            kept_indices: self.kept_indices,
            policy: self.policy,
            stage_scores: StageView {
                air: self.stage_subscore_tenths(Stage::Air),
                form: self.stage_subscore_tenths(Stage::Form),
                landing: self.stage_subscore_tenths(Stage::Landing),
            },
            pre_dd_mean: self.pre_dd_mean_hundredths(),
            pre_dd_mean_exact: format!("{}/{}", exact.numer(), exact.denom()),
            dd: self.dd,
            final_score: self.final_score,
        }
        .serialize(serializer)
    }
}
