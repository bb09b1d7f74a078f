//! The preference perceptron, its regret accounting and the runtime regret certificate.
//!
//! Each round presents `y_t = argmax_y w_tᵀφ(x_t, y)`, receives feedback `ȳ_t`
//! and updates `w_{t+1} = w_t + φ(x_t, ȳ_t) − φ(x_t, y_t)` starting from
//! `w_1 = 0`. Under α-informative feedback the average utility regret after
//! `T` rounds is at most `Σξ_t / (αT) + 2R‖w*‖ / (α√T)`; [`RunTrace::audit`]
//! checks the intermediate identities that bound rests on.

use crate::error::{Error, Result};
use crate::feedback::{check_alpha, slack, FeedbackOracle};
use crate::model::{dot, FeatureVector, JointFeatureMap, UtilityModel, WeightVector};
use crate::ranking::{argmax_ranking, dcg_at_5, joint_features, optimal_dcg, Query, Ranking};

/// Learner state `(w_t, t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PerceptronState {
    pub weights: WeightVector,
    pub round: usize,
}

impl PerceptronState {
    /// `w_1 = 0`, `t = 1`.
    pub fn new(dimension: usize) -> Self {
        Self {
            weights: WeightVector::zeros(dimension),
            round: 1,
        }
    }

    /// The object the learner presents for `context`.
    pub fn predict<D: JointFeatureMap>(
        &self,
        domain: &D,
        context: &D::Context,
    ) -> Result<D::Object> {
        domain.argmax(&self.weights, context)
    }

    /// Applies the update for one round and returns `w_tᵀ(φ(ȳ) − φ(y))`, which is
    /// non-positive whenever `presented` was the argmax.
    pub fn update<D: JointFeatureMap>(
        &mut self,
        domain: &D,
        context: &D::Context,
        presented: &D::Object,
        feedback: &D::Object,
    ) -> Result<f64> {
        let diff = feature_difference(
            domain.joint_features(context, feedback)?,
            &domain.joint_features(context, presented)?,
        )?;
        let progress = dot(&self.weights, &diff)?;
        self.weights.add_scaled(&diff, 1.0)?;
        self.round += 1;
        Ok(progress)
    }
}

fn feature_difference(
    mut feedback: FeatureVector,
    presented: &FeatureVector,
) -> Result<FeatureVector> {
    feedback.add_scaled(presented, -1.0)?;
    Ok(feedback)
}

/// One perceptron update in the ranking domain.
pub fn perceptron_step(
    state: &PerceptronState,
    query: &Query,
    presented: &Ranking,
    feedback: &Ranking,
) -> Result<PerceptronState> {
    let mut next = state.clone();
    next.update(&crate::ranking::RankingDomain, query, presented, feedback)?;
    Ok(next)
}

/// Everything observed in one round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    pub query_id: u64,
    /// `U(x_t, y_t)`
    pub u_presented: f64,
    /// `U(x_t, ȳ_t)`
    pub u_feedback: f64,
    /// `U(x_t, y*_t)`
    pub u_optimal: f64,
    /// Raw, unclamped `ξ_t` for the run's α.
    pub slack: f64,
    pub dcg_presented: f64,
    pub dcg_optimal: f64,
    /// `w_tᵀ(φ(x_t, ȳ_t) − φ(x_t, y_t))`
    pub progress: f64,
    /// `‖w_{t+1}‖²`
    pub weight_sq_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub records: Vec<RoundRecord>,
    pub final_weights: WeightVector,
    pub alpha: f64,
    pub r_bound: f64,
    pub w_star_norm: f64,
}

/// Time-averaged regrets over a prefix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AverageRegret {
    pub utility: f64,
    pub dcg: f64,
}

/// Runs the preference perceptron for `rounds` rounds over `queries`, cycling
/// through them in the given order.
pub fn run<O: FeedbackOracle + ?Sized>(
    queries: &[Query],
    model: &UtilityModel,
    oracle: &O,
    rounds: usize,
) -> Result<RunTrace> {
    if rounds == 0 {
        return Err(Error::Domain("number of rounds must be at least 1".into()));
    }
    if queries.is_empty() {
        return Err(Error::Validation("no queries to run on".into()));
    }
    let alpha = oracle.alpha();
    check_alpha(alpha)?;

    let w_star = model.w_star();
    let mut state = PerceptronState::new(model.dimension());
    let mut records = Vec::with_capacity(rounds);
    for t in 1..=rounds {
        let query = &queries[(t - 1) % queries.len()];
        let record = play_round(&mut state, query, model, oracle, alpha, w_star).map_err(|e| {
            Error::Round {
                round: t,
                source: Box::new(e),
            }
        })?;
        records.push(RoundRecord { t, ..record });
    }
    Ok(RunTrace {
        records,
        final_weights: state.weights,
        alpha,
        r_bound: model.r_bound(),
        w_star_norm: model.w_star_norm(),
    })
}

fn play_round<O: FeedbackOracle + ?Sized>(
    state: &mut PerceptronState,
    query: &Query,
    model: &UtilityModel,
    oracle: &O,
    alpha: f64,
    w_star: &WeightVector,
) -> Result<RoundRecord> {
    let presented = argmax_ranking(&state.weights, query)?;
    let feedback = oracle.feedback(model, query, &presented)?;
    let optimal = argmax_ranking(w_star, query)?;

    let phi_presented = joint_features(query, &presented)?;
    let phi_feedback = joint_features(query, &feedback)?;
    let u_presented = dot(w_star, &phi_presented)?;
    let u_feedback = dot(w_star, &phi_feedback)?;
    let u_optimal = dot(w_star, &joint_features(query, &optimal)?)?;

    let diff = feature_difference(phi_feedback, &phi_presented)?;
    let progress = dot(&state.weights, &diff)?;
    state.weights.add_scaled(&diff, 1.0)?;
    state.round += 1;

    Ok(RoundRecord {
        t: 0,
        query_id: query.id,
        u_presented,
        u_feedback,
        u_optimal,
        slack: slack(alpha, u_optimal, u_presented, u_feedback)?,
        dcg_presented: dcg_at_5(query, &presented)?,
        dcg_optimal: optimal_dcg(query),
        progress,
        weight_sq_norm: state.weights.squared_norm(),
    })
}

/// Theorem-style regret bound `slack_sum / (αT) + 2 R ‖w*‖ / (α √T)`.
pub fn regret_bound(
    alpha: f64,
    r_bound: f64,
    w_star_norm: f64,
    slack_sum: f64,
    rounds: usize,
) -> Result<f64> {
    check_alpha(alpha)?;
    if rounds == 0 {
        return Err(Error::Domain("number of rounds must be at least 1".into()));
    }
    if r_bound.is_nan() || r_bound <= 0.0 {
        return Err(Error::Domain(format!("R must be positive, got {r_bound}")));
    }
    let t = rounds as f64;
    Ok(slack_sum / (alpha * t) + 2.0 * r_bound * w_star_norm / (alpha * t.sqrt()))
}

/// Results of checking a trace against the proof identities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProofAudit {
    /// `w_{T+1}ᵀ w*`
    pub weights_dot_w_star: f64,
    /// `Σ_t (U(ȳ_t) − U(y_t))`
    pub total_feedback_gain: f64,
    /// Largest `‖w_{t+1}‖² / (4R²t)` over all prefixes.
    pub max_norm_ratio: f64,
    /// Largest `‖w_{t+1}‖² − 4R²t` over all prefixes.
    pub max_norm_excess: f64,
    /// Largest `w_tᵀ(φ(ȳ_t) − φ(y_t))`.
    pub max_progress: f64,
}

impl ProofAudit {
    /// Relative gap between `w_{T+1}ᵀw*` and the summed feedback gains.
    pub fn telescoping_error(&self) -> f64 {
        let scale = self
            .weights_dot_w_star
            .abs()
            .max(self.total_feedback_gain.abs())
            .max(f64::MIN_POSITIVE);
        (self.weights_dot_w_star - self.total_feedback_gain).abs() / scale
    }
}

impl RunTrace {
    pub fn rounds(&self) -> usize {
        self.records.len()
    }

    fn check_prefix(&self, upto: usize) -> Result<&[RoundRecord]> {
        if upto == 0 || upto > self.records.len() {
            return Err(Error::Range {
                upto,
                len: self.records.len(),
            });
        }
        Ok(&self.records[..upto])
    }

    /// Average utility and DCG* regret over the first `upto` rounds.
    pub fn average_regret(&self, upto: usize) -> Result<AverageRegret> {
        let prefix = self.check_prefix(upto)?;
        let n = upto as f64;
        Ok(AverageRegret {
            utility: prefix
                .iter()
                .map(|r| r.u_optimal - r.u_presented)
                .sum::<f64>()
                / n,
            dcg: prefix
                .iter()
                .map(|r| r.dcg_optimal - r.dcg_presented)
                .sum::<f64>()
                / n,
        })
    }

    /// Average regrets for every prefix `1..=T`, accumulated in order.
    pub fn regret_curve(&self) -> Vec<AverageRegret> {
        let (mut util, mut dcg) = (0.0, 0.0);
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                util += r.u_optimal - r.u_presented;
                dcg += r.dcg_optimal - r.dcg_presented;
                let n = (i + 1) as f64;
                AverageRegret {
                    utility: util / n,
                    dcg: dcg / n,
                }
            })
            .collect()
    }

    /// `Σ_{t ≤ upto} max(0, ξ_t)` for every prefix.
    pub fn clamped_slack_sums(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.records
            .iter()
            .map(|r| {
                acc += r.slack.max(0.0);
                acc
            })
            .collect()
    }

    /// Regret bound for the first `upto` rounds, using clamped slack.
    pub fn bound(&self, upto: usize) -> Result<f64> {
        let prefix = self.check_prefix(upto)?;
        let slack_sum = prefix.iter().map(|r| r.slack.max(0.0)).sum();
        regret_bound(self.alpha, self.r_bound, self.w_star_norm, slack_sum, upto)
    }

    /// Evaluates the proof identities against `w*`.
    pub fn audit(&self, w_star: &WeightVector) -> Result<ProofAudit> {
        let four_r2 = 4.0 * self.r_bound * self.r_bound;
        let mut audit = ProofAudit {
            weights_dot_w_star: dot(w_star, &FeatureVector::new(self.final_weights.to_vec())?)?,
            total_feedback_gain: 0.0,
            max_norm_ratio: 0.0,
            max_norm_excess: f64::NEG_INFINITY,
            max_progress: f64::NEG_INFINITY,
        };
        for r in &self.records {
            audit.total_feedback_gain += r.u_feedback - r.u_presented;
            let cap = four_r2 * r.t as f64;
            audit.max_norm_ratio = audit.max_norm_ratio.max(r.weight_sq_norm / cap);
            audit.max_norm_excess = audit.max_norm_excess.max(r.weight_sq_norm - cap);
            audit.max_progress = audit.max_progress.max(r.progress);
        }
        Ok(audit)
    }
}
