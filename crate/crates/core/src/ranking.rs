//! The ranking domain: documents grouped under a query, rankings over them,
//! the position-discounted joint feature map and DCG@5.
//!
//! Only the top [`CUTOFF`] positions carry weight. Position `i` (1-based) is
//! discounted by `1 / log2(i + 1)`, so the first position is undiscounted.
//! Ties are always broken by ascending document index.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{dot, dot_unchecked, FeatureVector, JointFeatureMap, WeightVector};

/// Number of ranked positions that contribute to utility and DCG.
pub const CUTOFF: usize = 5;

/// Highest relevance grade.
pub const MAX_GRADE: u8 = 4;

/// Discount of the 0-based position `pos`, i.e. `1 / log2(pos + 2)`.
#[inline]
pub fn discount(pos: usize) -> f64 {
    1.0 / ((pos + 2) as f64).log2()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub features: FeatureVector,
    pub relevance: u8,
}

impl Document {
    pub fn new(features: FeatureVector, relevance: u8) -> Result<Self> {
        if relevance > MAX_GRADE {
            return Err(Error::Validation(format!(
                "relevance grade {relevance} outside 0..={MAX_GRADE}"
            )));
        }
        Ok(Self {
            features,
            relevance,
        })
    }
}

/// A context: a query id and its candidate documents.
#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub id: u64,
    documents: Vec<Document>,
}

impl Query {
    pub fn new(id: u64, documents: Vec<Document>) -> Result<Self> {
        let Some(first) = documents.first() else {
            return Err(Error::Validation(format!("query {id} has no documents")));
        };
        let dim = first.features.len();
        if let Some(doc) = documents.iter().find(|d| d.features.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                found: doc.features.len(),
            });
        }
        Ok(Self { id, documents })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.documents[0].features.len()
    }

    /// Number of positions that count: `min(CUTOFF, n)`.
    pub fn cutoff(&self) -> usize {
        self.documents.len().min(CUTOFF)
    }

    /// Per-document linear scores `wᵀx_i`.
    pub fn scores(&self, weights: &WeightVector) -> Result<Vec<f64>> {
        if weights.len() != self.dimension() {
            return Err(Error::Dimension {
                expected: self.dimension(),
                found: weights.len(),
            });
        }
        Ok(self
            .documents
            .iter()
            .map(|d| dot_unchecked(weights, &d.features))
            .collect())
    }
}

/// An ordered list of distinct document indices; position 0 is the top.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ranking(Vec<usize>);

impl Ranking {
    /// Wraps an order without checking it against any query.
    pub fn new(order: Vec<usize>) -> Self {
        Self(order)
    }

    /// The identity permutation of `n` documents.
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn order(&self) -> &[usize] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    /// Checks the ranking against `query`: distinct in-range indices and at least `min(5, n)` of them.
    pub fn validate(&self, query: &Query) -> Result<()> {
        let n = query.len();
        if self.0.len() < query.cutoff() {
            return Err(Error::Ranking(format!(
                "ranking of length {} is shorter than {} for query {}",
                self.0.len(),
                query.cutoff(),
                query.id
            )));
        }
        let mut seen = vec![false; n];
        for &idx in &self.0 {
            if idx >= n {
                return Err(Error::Ranking(format!(
                    "index {idx} out of range for query {} with {n} documents",
                    query.id
                )));
            }
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::Ranking(format!(
                    "duplicate index {idx} for query {}",
                    query.id
                )));
            }
        }
        Ok(())
    }

    /// The positions that contribute to utility.
    pub fn top(&self) -> &[usize] {
        &self.0[..self.0.len().min(CUTOFF)]
    }

    pub fn is_full_permutation(&self, query: &Query) -> bool {
        self.0.len() == query.len() && self.validate(query).is_ok()
    }
}

/// `Σ_i x_{top[i]} · discount(i)` for an already validated prefix.
pub(crate) fn prefix_features(query: &Query, top: &[usize]) -> FeatureVector {
    let mut phi = FeatureVector::zeros(query.dimension());
    for (pos, &doc) in top.iter().take(CUTOFF).enumerate() {
        phi.add_scaled(&query.documents[doc].features, discount(pos))
            .expect("documents share the query dimension");
    }
    phi
}

/// Joint feature map `φ(q, y) = Σ_{i=1}^{min(5,n)} x_{y_i} / log2(i+1)`.
pub fn joint_features(query: &Query, ranking: &Ranking) -> Result<FeatureVector> {
    ranking.validate(query)?;
    Ok(prefix_features(query, ranking.top()))
}

/// Sorts document indices by `key` descending, ties by ascending index.
pub(crate) fn sort_desc_by_key(indices: &mut [usize], key: &[f64]) {
    // stable sort keeps ascending index among equal keys
    indices.sort_by(|&a, &b| key[b].partial_cmp(&key[a]).unwrap_or(Ordering::Equal));
}

/// `argmax_y wᵀφ(q, y)`: every document sorted by its score `wᵀx_i`, descending.
pub fn argmax_ranking(weights: &WeightVector, query: &Query) -> Result<Ranking> {
    let scores = query.scores(weights)?;
    let mut order: Vec<usize> = (0..query.len()).collect();
    sort_desc_by_key(&mut order, &scores);
    Ok(Ranking(order))
}

/// Linear score of a ranking, `wᵀφ(q, y)`.
pub fn ranking_score(weights: &WeightVector, query: &Query, ranking: &Ranking) -> Result<f64> {
    dot(weights, &joint_features(query, ranking)?)
}

/// `DCG@5(q, y) = Σ_{i=1}^{min(5,n)} r_{y_i} / log2(i+1)`.
pub fn dcg_at_5(query: &Query, ranking: &Ranking) -> Result<f64> {
    ranking.validate(query)?;
    Ok(ranking
        .top()
        .iter()
        .enumerate()
        .map(|(pos, &doc)| f64::from(query.documents[doc].relevance) * discount(pos))
        .sum())
}

/// Documents sorted by relevance grade, descending, ties by ascending index.
pub fn relevance_ranking(query: &Query) -> Ranking {
    let grades: Vec<f64> = query
        .documents
        .iter()
        .map(|d| f64::from(d.relevance))
        .collect();
    let mut order: Vec<usize> = (0..query.len()).collect();
    sort_desc_by_key(&mut order, &grades);
    Ranking(order)
}

/// Best achievable DCG@5 for the query.
pub fn optimal_dcg(query: &Query) -> f64 {
    dcg_at_5(query, &relevance_ranking(query)).expect("relevance ranking is a permutation")
}

/// The ranking domain as a [`JointFeatureMap`].
#[derive(Clone, Copy, Debug, Default)]
pub struct RankingDomain;

impl JointFeatureMap for RankingDomain {
    type Context = Query;
    type Object = Ranking;

    fn joint_features(&self, query: &Query, ranking: &Ranking) -> Result<FeatureVector> {
        joint_features(query, ranking)
    }

    fn argmax(&self, weights: &WeightVector, query: &Query) -> Result<Ranking> {
        argmax_ranking(weights, query)
    }
}
