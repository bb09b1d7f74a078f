//! Exhaustive-enumeration references shared by the integration tests.
#![allow(dead_code)]

use coactive::feedback::slack;
use coactive::ranking::{dcg_at_5, joint_features, CUTOFF};
use coactive::{dot, Document, FeatureVector, Query, Ranking, UtilityModel, WeightVector};
use itertools::Itertools;
use rand::Rng;

pub fn random_query<R: Rng>(rng: &mut R, id: u64, n: usize, dim: usize) -> Query {
    let docs = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            Document::new(FeatureVector::new(x).unwrap(), rng.random_range(0..=4)).unwrap()
        })
        .collect();
    Query::new(id, docs).unwrap()
}

pub fn random_weights<R: Rng>(rng: &mut R, dim: usize) -> WeightVector {
    WeightVector::new((0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

pub fn random_permutation<R: Rng>(rng: &mut R, n: usize) -> Ranking {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    Ranking::new(order)
}

pub fn all_rankings(n: usize) -> impl Iterator<Item = Ranking> {
    (0..n).permutations(n).map(Ranking::new)
}

pub fn score(w: &WeightVector, q: &Query, r: &Ranking) -> f64 {
    dot(w, &joint_features(q, r).unwrap()).unwrap()
}

/// `max_y wᵀφ(q, y)` over all n! rankings.
pub fn brute_max_score(w: &WeightVector, q: &Query) -> f64 {
    all_rankings(q.len())
        .map(|r| score(w, q, &r))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Best DCG@5 over all n! rankings.
pub fn brute_optimal_dcg(q: &Query) -> f64 {
    all_rankings(q.len())
        .map(|r| dcg_at_5(q, &r).unwrap())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Highest utility reachable by moving any ordered selection of `min(5, n)`
/// documents from `prefix` to the top of the presented ranking.
pub fn brute_best_prefix_utility(
    model: &UtilityModel,
    q: &Query,
    presented: &Ranking,
    prefix: usize,
) -> f64 {
    let m = q.len().min(CUTOFF);
    presented.order()[..prefix]
        .iter()
        .copied()
        .permutations(m)
        .map(|top| {
            let mut order = top.clone();
            order.extend(presented.order().iter().filter(|d| !top.contains(d)));
            score(model.w_star(), q, &Ranking::new(order))
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest scan depth whose best rearrangement is α-informative without slack,
/// or `n` if none is, together with the utility reached there.
pub fn brute_minimal_depth(
    model: &UtilityModel,
    q: &Query,
    presented: &Ranking,
    alpha: f64,
) -> (usize, f64) {
    let n = q.len();
    let u_y = score(model.w_star(), q, presented);
    let u_opt = brute_max_score(model.w_star(), q);
    for k in n.min(CUTOFF)..=n {
        let u_k = brute_best_prefix_utility(model, q, presented, k);
        if k == n || slack(alpha, u_opt, u_y, u_k).unwrap() <= 0.0 {
            return (k, u_k);
        }
    }
    unreachable!()
}

/// Grades of the best `min(5, n)`-subset of the inspected prefix, sorted descending.
pub fn brute_best_grades(q: &Query, presented: &Ranking, depth: usize) -> Vec<u8> {
    let inspected = &presented.order()[..depth.min(q.len())];
    let m = q.cutoff().min(inspected.len());
    inspected
        .iter()
        .copied()
        .combinations(m)
        .map(|subset| {
            let mut grades: Vec<u8> = subset.iter().map(|&d| q.documents()[d].relevance).collect();
            grades.sort_unstable_by(|a, b| b.cmp(a));
            grades
        })
        .max()
        .unwrap()
}
