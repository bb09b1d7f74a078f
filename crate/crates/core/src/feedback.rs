//! Simulated users that answer a presented ranking with an improved one.
//!
//! Two users are provided. The α-informative user knows `w*` and returns the
//! shallowest top-down rearrangement whose utility gain covers at least an α
//! fraction of the largest possible gain. The relevance-label user reads the
//! first `inspection_depth` results and promotes the five most relevant.

use crate::error::{Error, Result};
use crate::model::{dot, UtilityModel};
use crate::ranking::{argmax_ranking, joint_features, prefix_features, Query, Ranking};

/// Default number of presented results the relevance-label user reads.
pub const DEFAULT_INSPECTION_DEPTH: usize = 25;

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )))
    }
}

/// Slack `ξ = α (U(y*) − U(y)) − (U(ȳ) − U(y))`.
///
/// Negative values mean the feedback gained more than α of the available gap.
pub fn slack(alpha: f64, u_optimal: f64, u_presented: f64, u_feedback: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(alpha * (u_optimal - u_presented) - (u_feedback - u_presented))
}

fn require_permutation(query: &Query, presented: &Ranking) -> Result<()> {
    presented.validate(query)?;
    if presented.order().len() != query.len() {
        return Err(Error::Ranking(format!(
            "feedback needs a full permutation of {} documents, got {}",
            query.len(),
            presented.order().len()
        )));
    }
    Ok(())
}

/// `top` first, then every other presented document in presented order.
fn promote(presented: &Ranking, top: &[usize]) -> Ranking {
    let mut order = top.to_vec();
    order.extend(presented.order().iter().filter(|d| !top.contains(d)));
    Ranking::new(order)
}

/// Result of the α-informative scan: the feedback and the prefix depth at which the user stopped.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanOutcome {
    pub ranking: Ranking,
    pub depth: usize,
}

/// Runs the top-down scan of the α-informative user.
///
/// For each depth `k = min(5, n) ..= n` the best `min(5, n)` documents by true
/// utility among the first `k` presented are moved to the top, ordered by true
/// utility. The first depth whose slack is `≤ 0` is returned; depth `n` always
/// reproduces the optimal top and ends the scan.
pub fn alpha_informative_scan(
    model: &UtilityModel,
    query: &Query,
    presented: &Ranking,
    alpha: f64,
) -> Result<ScanOutcome> {
    check_alpha(alpha)?;
    require_permutation(query, presented)?;

    let w_star = model.w_star();
    let utilities = query.scores(w_star)?;
    let u_presented = dot(w_star, &joint_features(query, presented)?)?;
    let u_optimal = dot(
        w_star,
        &joint_features(query, &argmax_ranking(w_star, query)?)?,
    )?;

    let n = query.len();
    let m = query.cutoff();
    let order = presented.order();
    // best m documents of the prefix, kept sorted by (utility desc, index asc)
    let mut best: Vec<usize> = Vec::with_capacity(m + 1);
    let better =
        |a: usize, b: usize| utilities[a] > utilities[b] || (utilities[a] == utilities[b] && a < b);
    for (k, &doc) in order.iter().enumerate() {
        let pos = best
            .iter()
            .position(|&b| better(doc, b))
            .unwrap_or(best.len());
        if pos < m {
            best.insert(pos, doc);
            best.truncate(m);
        }
        let depth = k + 1;
        if depth < m {
            continue;
        }
        let u_feedback = dot(w_star, &prefix_features(query, &best))?;
        if depth == n || slack(alpha, u_optimal, u_presented, u_feedback)? <= 0.0 {
            return Ok(ScanOutcome {
                ranking: promote(presented, &best),
                depth,
            });
        }
    }
    unreachable!("the scan always stops at depth n")
}

/// Noise-free α-informative feedback for `presented`.
pub fn alpha_informative_feedback(
    model: &UtilityModel,
    query: &Query,
    presented: &Ranking,
    alpha: f64,
) -> Result<Ranking> {
    alpha_informative_scan(model, query, presented, alpha).map(|s| s.ranking)
}

/// Relevance-label feedback.
///
/// Among the first `min(inspection_depth, n)` presented documents the
/// `min(5, n)` with the highest grades move to the top, ordered by grade and
/// then by presented position. The rest follow in presented order.
pub fn relevance_feedback(
    query: &Query,
    presented: &Ranking,
    inspection_depth: usize,
) -> Result<Ranking> {
    if inspection_depth == 0 {
        return Err(Error::Domain("inspection depth must be at least 1".into()));
    }
    require_permutation(query, presented)?;
    let inspected = &presented.order()[..inspection_depth.min(query.len())];
    let mut picked = inspected.to_vec();
    // stable: equal grades keep presented order
    picked.sort_by_key(|&d| std::cmp::Reverse(query.documents()[d].relevance));
    picked.truncate(query.cutoff());
    Ok(promote(presented, &picked))
}

/// A source of improved rankings.
pub trait FeedbackOracle: Sync {
    fn feedback(&self, model: &UtilityModel, query: &Query, presented: &Ranking)
        -> Result<Ranking>;

    /// The α against which slack is measured for this oracle's feedback.
    fn alpha(&self) -> f64 {
        1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleKind {
    AlphaInformative,
    RelevanceLabel,
}

/// Selects one of the simulated users and its parameters.
///
/// `alpha` is also the α used to report slack for the relevance-label user.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeedbackOracleConfig {
    pub kind: OracleKind,
    pub alpha: f64,
    pub inspection_depth: usize,
}

impl FeedbackOracleConfig {
    pub fn alpha_informative(alpha: f64) -> Result<Self> {
        Self {
            kind: OracleKind::AlphaInformative,
            alpha,
            inspection_depth: DEFAULT_INSPECTION_DEPTH,
        }
        .validated()
    }

    pub fn relevance_label(inspection_depth: usize, alpha: f64) -> Result<Self> {
        Self {
            kind: OracleKind::RelevanceLabel,
            alpha,
            inspection_depth,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        check_alpha(self.alpha)?;
        if self.inspection_depth == 0 {
            return Err(Error::Domain("inspection depth must be at least 1".into()));
        }
        Ok(self)
    }
}

impl FeedbackOracle for FeedbackOracleConfig {
    fn feedback(
        &self,
        model: &UtilityModel,
        query: &Query,
        presented: &Ranking,
    ) -> Result<Ranking> {
        match self.kind {
            OracleKind::AlphaInformative => {
                alpha_informative_feedback(model, query, presented, self.alpha)
            }
            OracleKind::RelevanceLabel => {
                relevance_feedback(query, presented, self.inspection_depth)
            }
        }
    }

    fn alpha(&self) -> f64 {
        self.alpha
    }
}
