//! Evaluation metrics: accuracy and its knowledge-adjusted relatives for
//! multiple-choice runs, rate-weighted summary indices, and the exact
//! arithmetic chain plus error scores for guided calculation runs.

use std::collections::BTreeMap;

use num::{BigRational, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CalcGivens;

/// Relative-error threshold for one standard unit of tolerance; success is
/// a relative error at or below `nu` times this value.
pub const SIGMA: f64 = 0.3173;

/// Canonical derived-variable names in derivation order.
pub const TARGET_ORDER: [&str; 8] = ["NR", "P", "X", "N", "Y", "L", "E_prime", "D_prime"];

/// The subset of derived variables that error scores are computed over.
pub const SCORED_VARIABLES: [&str; 5] = ["P", "N", "Y", "E_prime", "D_prime"];

/// Fraction of correct answers out of all trials; missing answers count
/// as incorrect. `None` when there are no trials.
pub fn accuracy(correct: usize, trials: usize) -> Option<f64> {
    (trials > 0).then(|| correct as f64 / trials as f64)
}

/// Fraction of trials that produced no usable answer.
pub fn no_answer_rate(missing: usize, trials: usize) -> Option<f64> {
    (trials > 0).then(|| missing as f64 / trials as f64)
}

/// Accuracy at some masking rate relative to the unmasked accuracy.
/// `None` when the unmasked accuracy is zero (nothing to normalize by).
pub fn normalized_accuracy(acc_r: f64, acc_0: f64) -> Option<f64> {
    (acc_0 > 0.0).then(|| acc_r / acc_0)
}

/// Geometric mean of a dataset's normalized accuracy with the baseline
/// dataset's, balancing out background knowledge available to the model.
/// `None` when the product is negative.
pub fn paired_ability(na_d: f64, na_u: f64) -> Option<f64> {
    let product = na_d * na_u;
    (product >= 0.0).then(|| product.sqrt())
}

/// Unmasked accuracy discounted by the paired ability; same scale as
/// `acc_0`.
pub fn effective_accuracy(acc_0: f64, pa: f64) -> f64 {
    acc_0 * pa
}

/// One minus the accuracy ratio against the baseline dataset at the same
/// rate; larger means less reliance on background knowledge. `None` when
/// the baseline accuracy is zero.
pub fn knowledge_independence(acc_d: f64, acc_u: f64) -> Option<f64> {
    (acc_u > 0.0).then(|| 1.0 - acc_d / acc_u)
}

/// Rate-weighted arithmetic mean of `(rate, value)` points, skipping the
/// unmasked point. `None` without any positive-rate point.
pub fn weighted_linear_index(points: &[(f64, f64)]) -> Option<f64> {
    let mut rates = Vec::new();
    let mut weighted = Vec::new();
    for &(rate, value) in points {
        if rate > 0.0 {
            rates.push(rate);
            weighted.push(rate * value);
        }
    }
    let total = compensated_sum(rates);
    (total > 0.0).then(|| compensated_sum(weighted) / total)
}

/// Geometric mean of values at positive rates. Zero values pull the index
/// to zero; a negative value makes it undefined.
pub fn weighted_geometric_index(points: &[(f64, f64)]) -> Option<f64> {
    let values: Vec<f64> = points
        .iter()
        .filter(|(rate, _)| *rate > 0.0)
        .map(|&(_, value)| value)
        .collect();
    if values.is_empty() || values.iter().any(|v| *v < 0.0) {
        return None;
    }
    if values.contains(&0.0) {
        return Some(0.0);
    }
    let log_mean = compensated_sum(values.iter().map(|v| v.ln())) / values.len() as f64;
    Some(log_mean.exp())
}

/// Neumaier-compensated summation; keeps long low-magnitude tails from
/// disappearing next to large terms.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut compensation = 0.0f64;
    for value in values {
        let t = sum + value;
        if sum.abs() >= value.abs() {
            compensation += (sum - t) + value;
        } else {
            compensation += (value - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

/// Per-cell tallies and metrics for one (dataset, masking mode, rate)
/// combination. Relative metrics stay `None` until the report layer links
/// the cell with its baselines.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsCell {
    pub trials: usize,
    pub correct: usize,
    pub missing: usize,
    /// Correct fraction of all trials, in [0, 1].
    pub acc: Option<f64>,
    /// Missing fraction of all trials.
    pub nar: Option<f64>,
    /// Accuracy relative to the same dataset unmasked.
    pub na: Option<f64>,
    /// Knowledge-balanced ability, geometric mean with the baseline set.
    pub pa: Option<f64>,
    /// Effective accuracy on the percent scale.
    pub ea: Option<f64>,
    /// Knowledge independence against the baseline set.
    pub ki: Option<f64>,
}

impl MetricsCell {
    pub fn from_counts(correct: usize, missing: usize, trials: usize) -> MetricsCell {
        MetricsCell {
            trials,
            correct,
            missing,
            acc: accuracy(correct, trials),
            nar: no_answer_rate(missing, trials),
            ..MetricsCell::default()
        }
    }
}

/// Exact values of every derived variable in the calculation chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalcGround {
    /// Recalled units: production minus inventory.
    pub nr: f64,
    /// Unit sales price: model revenue over plan plus inventory.
    pub p: f64,
    /// Total recall cost: unit cost times recalled units.
    pub x: f64,
    /// Post-recall sales volume.
    pub n: f64,
    /// Revenue decrease from the volume reduction.
    pub y: f64,
    /// Total loss: recall cost plus revenue decrease.
    pub l: f64,
    /// Model revenue after the loss.
    pub e_prime: f64,
    /// Fiscal-year revenue after the loss.
    pub d_prime: f64,
}

impl CalcGround {
    /// Look a variable up by any accepted spelling.
    pub fn get(&self, name: &str) -> Option<f64> {
        match canonical_variable(name)? {
            "NR" => Some(self.nr),
            "P" => Some(self.p),
            "X" => Some(self.x),
            "N" => Some(self.n),
            "Y" => Some(self.y),
            "L" => Some(self.l),
            "E_prime" => Some(self.e_prime),
            "D_prime" => Some(self.d_prime),
            _ => None,
        }
    }
}

/// Map any accepted spelling of a derived variable (`E'`, `e_prime`,
/// `E′`, ...) to its canonical name.
pub fn canonical_variable(name: &str) -> Option<&'static str> {
    let mut cleaned = String::with_capacity(name.len());
    for c in name.trim().chars() {
        match c {
            '\u{2019}' | '\u{2032}' | '`' => cleaned.push('\''),
            c if c.is_whitespace() => {}
            c => cleaned.push(c.to_ascii_uppercase()),
        }
    }
    match cleaned.as_str() {
        "NR" => Some("NR"),
        "P" => Some("P"),
        "X" => Some("X"),
        "N" => Some("N"),
        "Y" => Some("Y"),
        "L" => Some("L"),
        "E'" | "E_PRIME" | "EPRIME" => Some("E_prime"),
        "D'" | "D_PRIME" | "DPRIME" => Some("D_prime"),
        _ => None,
    }
}

/// Evaluate the calculation chain exactly over rationals and return every
/// derived variable.
pub fn calc_oracle(givens: &CalcGivens) -> Result<CalcGround, MetricsError> {
    let rational = |name: &str, value: f64| {
        BigRational::from_float(value).ok_or_else(|| MetricsError::NonFinite {
            what: format!("given {name} = {value}"),
        })
    };
    let a = rational("production_2023", givens.production_2023)?;
    let b = rational("production_plan_2024", givens.production_plan_2024)?;
    let c = rational("inventory", givens.inventory)?;
    let d = rational("planned_revenue", givens.planned_revenue)?;
    let e = rational("model_revenue", givens.model_revenue)?;
    let unit_cost = rational("recall_unit_cost", givens.recall_unit_cost)?;
    let rr = rational("reduction_rate", givens.reduction_rate)?;
    let one = BigRational::from_integer(1.into());

    let plan_volume = &b + &c;
    if plan_volume == BigRational::from_integer(0.into()) {
        return Err(MetricsError::DivisionByZero {
            what: "sales price (plan volume plus inventory is zero)".to_string(),
        });
    }
    let nr = &a - &c;
    let p = &e / &plan_volume;
    let x = &unit_cost * &nr;
    let n = &plan_volume * (&one - &rr);
    let y = &p * &plan_volume * &rr;
    let l = &x + &y;
    let e_prime = &e - &l;
    let d_prime = &d - &l;

    let out = |name: &str, value: BigRational| {
        value.to_f64().ok_or_else(|| MetricsError::NonFinite {
            what: format!("derived {name} exceeds the float range"),
        })
    };
    Ok(CalcGround {
        nr: out("NR", nr)?,
        p: out("P", p)?,
        x: out("X", x)?,
        n: out("N", n)?,
        y: out("Y", y)?,
        l: out("L", l)?,
        e_prime: out("E_prime", e_prime)?,
        d_prime: out("D_prime", d_prime)?,
    })
}

/// Error scores for one scored variable across the trials that answered it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VariableScore {
    pub truth: f64,
    pub answered: usize,
    /// Mean relative error over answered trials.
    pub mean_delta: Option<f64>,
    /// Mean after dropping the top and bottom tenth of errors.
    pub trimmed_mean_delta: Option<f64>,
    /// Fraction of answered trials within one tolerance unit.
    pub p_sigma: Option<f64>,
    /// Fraction within half a tolerance unit.
    pub p_half_sigma: Option<f64>,
}

/// Aggregate error scores for one cell of a calculation run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CalcScores {
    pub trials: usize,
    pub per_variable: BTreeMap<String, VariableScore>,
    /// One minus the average trimmed relative error over scored variables;
    /// zero when no trial answered anything.
    pub p_delta: Option<f64>,
    /// Untrimmed variant of `p_delta`.
    pub p_delta_raw: Option<f64>,
    /// Fraction of answered (trial, variable) pairs within one tolerance
    /// unit, pooled over the scored variables.
    pub p_sigma: Option<f64>,
    /// Same with half the tolerance.
    pub p_half_sigma: Option<f64>,
    /// Missing fraction over all (trial, variable) pairs.
    pub nar: Option<f64>,
}

/// Score a cell of calculation trials against the ground chain. Each trial
/// is a map from canonical variable name to the answered value; absent
/// keys are missing answers.
pub fn calc_scores(trials: &[BTreeMap<String, f64>], ground: &CalcGround) -> CalcScores {
    let pairs: Vec<(&BTreeMap<String, f64>, &CalcGround)> =
        trials.iter().map(|answers| (answers, ground)).collect();
    calc_scores_pooled(&pairs)
}

/// Score a cell whose trials may belong to different tasks: each trial is
/// judged against its own ground chain, and the relative errors are pooled.
/// Reported per-variable truths are those of the first trial's chain.
pub fn calc_scores_pooled(trials: &[(&BTreeMap<String, f64>, &CalcGround)]) -> CalcScores {
    let mut scores = CalcScores {
        trials: trials.len(),
        ..CalcScores::default()
    };
    if trials.is_empty() {
        return scores;
    }

    let mut trimmed_means = Vec::new();
    let mut raw_means = Vec::new();
    let mut pooled_answered = 0usize;
    let mut pooled_sigma = 0usize;
    let mut pooled_half_sigma = 0usize;

    for name in SCORED_VARIABLES {
        let truth = trials[0]
            .1
            .get(name)
            .expect("scored variable in ground chain");
        let mut deltas: Vec<f64> = trials
            .iter()
            .filter_map(|(answers, ground)| {
                answers.get(name).map(|answer| {
                    relative_error(
                        *answer,
                        ground.get(name).expect("scored variable in ground chain"),
                    )
                })
            })
            .collect();
        deltas.sort_by(|a, b| a.partial_cmp(b).expect("finite relative errors"));

        let mut entry = VariableScore {
            truth,
            answered: deltas.len(),
            ..VariableScore::default()
        };
        if !deltas.is_empty() {
            entry.mean_delta = Some(mean(&deltas));
            entry.trimmed_mean_delta = Some(trimmed_mean(&deltas));
            let within = |limit: f64| deltas.iter().filter(|d| **d <= limit).count();
            entry.p_sigma = Some(within(SIGMA) as f64 / deltas.len() as f64);
            entry.p_half_sigma = Some(within(SIGMA / 2.0) as f64 / deltas.len() as f64);
            raw_means.push(entry.mean_delta.expect("set above"));
            trimmed_means.push(entry.trimmed_mean_delta.expect("set above"));
            pooled_answered += deltas.len();
            pooled_sigma += within(SIGMA);
            pooled_half_sigma += within(SIGMA / 2.0);
        }
        scores.per_variable.insert(name.to_string(), entry);
    }

    let total_pairs = trials.len() * SCORED_VARIABLES.len();
    scores.nar = Some((total_pairs - pooled_answered) as f64 / total_pairs as f64);
    if pooled_answered == 0 {
        // every trial came back empty; the run scores zero rather than
        // undefined, matching the saturation end of the rate curve
        scores.p_delta = Some(0.0);
        scores.p_delta_raw = Some(0.0);
        scores.p_sigma = Some(0.0);
        scores.p_half_sigma = Some(0.0);
    } else {
        scores.p_delta = Some(1.0 - mean(&trimmed_means));
        scores.p_delta_raw = Some(1.0 - mean(&raw_means));
        scores.p_sigma = Some(pooled_sigma as f64 / pooled_answered as f64);
        scores.p_half_sigma = Some(pooled_half_sigma as f64 / pooled_answered as f64);
    }
    scores
}

/// Relative error |answer - truth| / |truth|; against a zero truth the
/// error is 0 for an exact answer and infinite otherwise, which simply
/// never counts as within tolerance.
pub fn relative_error(answer: f64, truth: f64) -> f64 {
    if truth == 0.0 {
        if answer == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (answer - truth).abs() / truth.abs()
    }
}

fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Mean after dropping a tenth of the sorted values from each end.
fn trimmed_mean(sorted: &[f64]) -> f64 {
    let k = sorted.len() / 10;
    mean(&sorted[k..sorted.len() - k])
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("division by zero computing {what}")]
    DivisionByZero { what: String },
    #[error("value is not finite: {what}")]
    NonFinite { what: String },
}
