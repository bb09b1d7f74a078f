//! Datasets: LETOR text I/O, a seeded synthetic generator, the least-squares
//! fit of `w*`, the feature-map norm bound `R` and seeded query shuffling.

use std::io::{BufRead, Write};

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{FeatureVector, UtilityModel, WeightVector};
use crate::ranking::{discount, Document, Query, MAX_GRADE};

/// Ridge term added to the normal equations of the `w*` fit.
pub const RIDGE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    queries: Vec<Query>,
    dimension: usize,
}

impl Dataset {
    pub fn new(queries: Vec<Query>) -> Result<Self> {
        let Some(first) = queries.first() else {
            return Err(Error::Validation("dataset has no queries".into()));
        };
        let dimension = first.dimension();
        if let Some(q) = queries.iter().find(|q| q.dimension() != dimension) {
            return Err(Error::Dimension {
                expected: dimension,
                found: q.dimension(),
            });
        }
        Ok(Self { queries, dimension })
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn num_documents(&self) -> usize {
        self.queries.iter().map(Query::len).sum()
    }

    fn documents(&self) -> impl Iterator<Item = &Document> {
        self.queries.iter().flat_map(|q| q.documents().iter())
    }
}

/// A document as read from one line: grade and sparse `(fid, value)` pairs.
type SparseDoc = (u8, Vec<(usize, f64)>);

struct ParsedLine {
    grade: u8,
    qid: u64,
    features: Vec<(usize, f64)>,
}

fn parse_line(line: &str, lineno: usize) -> Result<Option<ParsedLine>> {
    let err = |message: String| Error::Parse {
        line: lineno,
        message,
    };
    let body = line.split_once('#').map_or(line, |(body, _)| body);
    let mut tokens = body.split_whitespace();
    let Some(grade) = tokens.next() else {
        return Ok(None);
    };
    let grade: i64 = grade
        .parse()
        .map_err(|_| err(format!("invalid relevance grade {grade:?}")))?;
    if !(0..=i64::from(MAX_GRADE)).contains(&grade) {
        return Err(Error::Validation(format!(
            "line {lineno}: relevance grade {grade} outside 0..={MAX_GRADE}"
        )));
    }
    let qid = tokens
        .next()
        .and_then(|t| t.strip_prefix("qid:"))
        .ok_or_else(|| err("expected qid:<id> after the grade".into()))?;
    let qid: u64 = qid
        .parse()
        .map_err(|_| err(format!("invalid query id {qid:?}")))?;

    let mut features = Vec::new();
    for token in tokens {
        let (fid, value) = token
            .split_once(':')
            .ok_or_else(|| err(format!("expected <fid>:<value>, got {token:?}")))?;
        let fid: usize = fid
            .parse()
            .map_err(|_| err(format!("invalid feature id {fid:?}")))?;
        if fid == 0 {
            return Err(err("feature ids start at 1".into()));
        }
        if features.last().is_some_and(|&(prev, _)| fid <= prev) {
            return Err(err(format!("feature id {fid} is not increasing")));
        }
        let value: f64 = value
            .parse()
            .map_err(|_| err(format!("invalid feature value {value:?}")))?;
        if !value.is_finite() {
            return Err(err(format!("non-finite feature value {value}")));
        }
        features.push((fid, value));
    }
    if features.is_empty() {
        return Err(err("line has no features".into()));
    }
    Ok(Some(ParsedLine {
        grade: grade as u8,
        qid,
        features,
    }))
}

/// Reads a LETOR / SVMlight ranking file.
///
/// Documents are grouped by `qid` in order of first appearance and keep their
/// file order within a query. Features are densified to the largest feature
/// id in the file; missing ids read as zero. Blank lines are skipped.
pub fn parse_letor<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut grouped: IndexMap<u64, Vec<SparseDoc>> = IndexMap::new();
    let mut dimension = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if let Some(parsed) = parse_line(&line, i + 1)? {
            dimension = dimension.max(parsed.features.last().map_or(0, |&(fid, _)| fid));
            grouped
                .entry(parsed.qid)
                .or_default()
                .push((parsed.grade, parsed.features));
        }
    }
    if grouped.is_empty() {
        return Err(Error::Validation("input contains no documents".into()));
    }
    let queries = grouped
        .into_iter()
        .map(|(qid, docs)| {
            let docs = docs
                .into_iter()
                .map(|(grade, sparse)| {
                    let mut dense = vec![0.0; dimension];
                    for (fid, value) in sparse {
                        dense[fid - 1] = value;
                    }
                    Document::new(FeatureVector::new(dense)?, grade)
                })
                .collect::<Result<Vec<_>>>()?;
            Query::new(qid, docs)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(queries)
}

pub fn parse_letor_str(text: &str) -> Result<Dataset> {
    parse_letor(text.as_bytes())
}

/// Writes every document as one dense LETOR line.
pub fn write_letor<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    for q in dataset.queries() {
        for doc in q.documents() {
            write!(out, "{} qid:{}", doc.relevance, q.id)?;
            for (i, v) in doc.features.iter().enumerate() {
                write!(out, " {}:{}", i + 1, v)?;
            }
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Parameters of the synthetic dataset generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthConfig {
    pub num_queries: usize,
    pub docs_per_query: usize,
    pub dimension: usize,
    pub noise_std: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_queries == 0 || self.docs_per_query == 0 || self.dimension == 0 {
            return Err(Error::Validation(
                "synthetic dataset needs at least one query, document and feature".into(),
            ));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::Validation(format!(
                "noise standard deviation must be finite and non-negative, got {}",
                self.noise_std
            )));
        }
        Ok(())
    }
}

/// Maps a latent linear score to a grade: `clamp(round(2s + 2 + noise), 0, 4)`.
pub fn synthetic_grade(score: f64, noise: f64) -> u8 {
    (2.0 * score + 2.0 + noise)
        .round()
        .clamp(0.0, f64::from(MAX_GRADE)) as u8
}

/// Draws a dataset whose grades follow a hidden unit-norm linear scorer.
///
/// Returns the dataset and the hidden scorer. Features are i.i.d. uniform in
/// `[-1, 1]`. A noise sample is drawn for every document even when
/// `noise_std` is zero, so configs that differ only in noise share features.
pub fn generate_synthetic(config: &SynthConfig) -> Result<(Dataset, WeightVector)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut w_true: Vec<f64> = (0..config.dimension)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let norm = w_true.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        w_true.iter_mut().for_each(|v| *v /= norm);
    } else {
        w_true[0] = 1.0;
    }

    let noise = Normal::new(0.0, config.noise_std)
        .map_err(|e| Error::Validation(format!("noise distribution: {e}")))?;
    let queries = (0..config.num_queries)
        .map(|qi| {
            let docs = (0..config.docs_per_query)
                .map(|_| {
                    let x: Vec<f64> = (0..config.dimension)
                        .map(|_| rng.random_range(-1.0..=1.0))
                        .collect();
                    let score = crate::model::dot_unchecked(&w_true, &x);
                    let grade = synthetic_grade(score, noise.sample(&mut rng));
                    Document::new(FeatureVector::new(x)?, grade)
                })
                .collect::<Result<Vec<_>>>()?;
            Query::new(qi as u64 + 1, docs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((Dataset::new(queries)?, WeightVector::new(w_true)?))
}

/// Ridge objective `Σ_docs (wᵀx − r)² + RIDGE·‖w‖²`.
pub fn ridge_objective(dataset: &Dataset, w: &[f64]) -> f64 {
    let residuals: f64 = dataset
        .documents()
        .map(|d| {
            let r = crate::model::dot_unchecked(w, &d.features) - f64::from(d.relevance);
            r * r
        })
        .sum();
    residuals + RIDGE * w.iter().map(|v| v * v).sum::<f64>()
}

/// Least-squares fit of `w*` to the relevance grades of every document,
/// solved through the ridge-regularised normal equations.
pub fn fit_wstar(dataset: &Dataset) -> Result<UtilityModel> {
    let n = dataset.dimension();
    let mut gram = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for doc in dataset.documents() {
        let x = &doc.features;
        let r = f64::from(doc.relevance);
        for i in 0..n {
            rhs[i] += x[i] * r;
            for j in 0..=i {
                gram[(i, j)] += x[i] * x[j];
            }
        }
    }
    for i in 0..n {
        gram[(i, i)] += RIDGE;
        for j in 0..i {
            gram[(j, i)] = gram[(i, j)];
        }
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Fit("normal equations are not positive definite".into()))?;
    let w = chol.solve(&rhs);
    let w = WeightVector::new(w.iter().copied().collect())
        .map_err(|e| Error::Fit(format!("solution is not finite: {e}")))?;
    UtilityModel::new(w, compute_r(dataset))
}

/// Upper bound on `‖φ(q, y)‖` over every query and ranking:
/// `max_q Σ_{i=1}^{min(5,n_q)} max_doc ‖x‖ / log2(i+1)`.
pub fn compute_r(dataset: &Dataset) -> f64 {
    dataset
        .queries()
        .iter()
        .map(|q| {
            let max_norm = q
                .documents()
                .iter()
                .map(|d| d.features.norm())
                .fold(0.0, f64::max);
            (0..q.cutoff())
                .map(|pos| max_norm * discount(pos))
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Fisher–Yates shuffle of the query order, seeded.
pub fn permute_queries(dataset: &Dataset, seed: u64) -> Vec<Query> {
    let mut queries = dataset.queries().to_vec();
    queries.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    queries
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::{joint_features, Ranking};
    use proptest::prelude::*;

    #[test]
    fn parses_single_line() {
        let ds = parse_letor_str("2 qid:7 1:0.5 3:-1.2\n").unwrap();
        assert_eq!(ds.queries().len(), 1);
        assert_eq!(ds.dimension(), 3);
        let q = &ds.queries()[0];
        assert_eq!(q.id, 7);
        assert_eq!(q.documents()[0].relevance, 2);
        assert_eq!(&*q.documents()[0].features, &[0.5, 0.0, -1.2]);
    }

    #[test]
    fn groups_by_qid_in_file_order() {
        let text = "1 qid:7 1:1\n0 qid:3 2:1 # note\n\n4 qid:7 1:2e-1 2:3\n";
        let ds = parse_letor_str(text).unwrap();
        let ids: Vec<u64> = ds.queries().iter().map(|q| q.id).collect();
        assert_eq!(ids, [7, 3]);
        let q7 = &ds.queries()[0];
        assert_eq!(q7.len(), 2);
        assert_eq!(q7.documents()[0].relevance, 1);
        assert_eq!(&*q7.documents()[1].features, &[0.2, 3.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            parse_letor_str("5 qid:1 1:0"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(parse_letor_str(""), Err(Error::Validation(_))));
        assert!(matches!(
            parse_letor_str("\n  \n"),
            Err(Error::Validation(_))
        ));
        for (text, line) in [
            ("1 qid:1 1:0\nx qid:1 1:0", 2),
            ("1 1:0", 1),
            ("1 qid:a 1:0", 1),
            ("1 qid:1", 1),
            ("1 qid:1 0:1", 1),
            ("1 qid:1 2:1 1:1", 1),
            ("1 qid:1 1:1 1:2", 1),
            ("1 qid:1 1:abc", 1),
            ("1 qid:1 1:inf", 1),
            ("1 qid:1 foo", 1),
        ] {
            match parse_letor_str(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn synthetic_grade_map() {
        assert_eq!(synthetic_grade(1.0, 0.0), 4);
        assert_eq!(synthetic_grade(5.0, 0.0), 4);
        assert_eq!(synthetic_grade(-3.0, 0.0), 0);
        assert_eq!(synthetic_grade(0.0, 0.0), 2);
        assert_eq!(synthetic_grade(0.2, 0.0), 2);
        assert_eq!(synthetic_grade(0.3, 0.0), 3);
    }

    fn cfg(seed: u64, noise_std: f64) -> SynthConfig {
        SynthConfig {
            num_queries: 6,
            docs_per_query: 7,
            dimension: 4,
            noise_std,
            seed,
        }
    }

    #[test]
    fn synthetic_is_deterministic() {
        let (a, wa) = generate_synthetic(&cfg(11, 0.5)).unwrap();
        let (b, wb) = generate_synthetic(&cfg(11, 0.5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(wa, wb);
        let (c, _) = generate_synthetic(&cfg(12, 0.5)).unwrap();
        assert_ne!(a, c);
        assert!((wa.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noise_free_grades_follow_hidden_scorer() {
        let (ds, w) = generate_synthetic(&cfg(3, 0.0)).unwrap();
        for d in ds.documents() {
            let s = crate::model::dot(&w, &d.features).unwrap();
            assert_eq!(d.relevance, synthetic_grade(s, 0.0));
            assert!(d.features.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn synthetic_config_validation() {
        let mut c = cfg(1, 0.0);
        c.dimension = 0;
        assert!(generate_synthetic(&c).is_err());
        let mut c = cfg(1, -1.0);
        assert!(generate_synthetic(&c).is_err());
        c.noise_std = f64::NAN;
        assert!(generate_synthetic(&c).is_err());
    }

    fn one_dim(points: &[(f64, u8)]) -> Dataset {
        let docs = points
            .iter()
            .map(|&(x, r)| Document::new(FeatureVector::new(vec![x]).unwrap(), r).unwrap())
            .collect();
        Dataset::new(vec![Query::new(1, docs).unwrap()]).unwrap()
    }

    #[test]
    fn fit_closed_form_one_dimension() {
        let model = fit_wstar(&one_dim(&[(1.0, 2), (2.0, 4)])).unwrap();
        let expected = (1.0 * 2.0 + 2.0 * 4.0) / (1.0 + 4.0 + RIDGE);
        assert!((model.w_star()[0] - expected).abs() < 1e-12);
        assert!((model.w_star()[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn fit_zero_targets() {
        let model = fit_wstar(&one_dim(&[(1.0, 0), (-2.0, 0), (0.5, 0)])).unwrap();
        assert_eq!(model.w_star()[0], 0.0);
    }

    #[test]
    fn fit_recovers_exact_linear_labels() {
        // grades that are exactly linear in the features: r = x1 + 2 x2 + 1 x3
        let w = [1.0, 2.0, 1.0];
        let rows: [[f64; 3]; 5] = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 1.0, 1.0],
            [2.0, 0.0, 2.0],
        ];
        let docs = rows
            .iter()
            .map(|x| {
                let r = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() as u8;
                Document::new(FeatureVector::new(x.to_vec()).unwrap(), r).unwrap()
            })
            .collect();
        let ds = Dataset::new(vec![Query::new(1, docs).unwrap()]).unwrap();
        let model = fit_wstar(&ds).unwrap();
        for d in ds.documents() {
            let pred = model.utility(&d.features).unwrap();
            assert!((pred - f64::from(d.relevance)).abs() < 1e-5);
        }
        for (got, want) in model.w_star().iter().zip(&w) {
            assert!((got - want).abs() < 1e-5);
        }
    }

    #[test]
    fn fit_is_locally_optimal() {
        let (ds, _) = generate_synthetic(&cfg(5, 0.5)).unwrap();
        let model = fit_wstar(&ds).unwrap();
        let w = model.w_star().to_vec();
        let base = ridge_objective(&ds, &w);
        for i in 0..w.len() {
            for delta in [1e-3, -1e-3] {
                let mut p = w.clone();
                p[i] += delta;
                assert!(ridge_objective(&ds, &p) >= base);
            }
        }
    }

    #[test]
    fn r_bound_examples() {
        assert_eq!(compute_r(&one_dim(&[(3.0, 0)])), 3.0);
        let docs = (0..6)
            .map(|_| Document::new(FeatureVector::new(vec![0.6, 0.8]).unwrap(), 0).unwrap())
            .collect();
        let ds = Dataset::new(vec![Query::new(1, docs).unwrap()]).unwrap();
        // 1 + 1/log2(3) + 1/2 + 1/log2(5) + 1/log2(6)
        assert!((compute_r(&ds) - 2.948_459_118_879_392).abs() < 1e-12);
    }

    #[test]
    fn permutation_examples() {
        let (ds, _) = generate_synthetic(&SynthConfig {
            num_queries: 30,
            ..cfg(1, 0.0)
        })
        .unwrap();
        let a = permute_queries(&ds, 42);
        assert_eq!(a, permute_queries(&ds, 42));
        let mut ids: Vec<u64> = a.iter().map(|q| q.id).collect();
        assert_ne!(ids, (1..=30).collect::<Vec<_>>());
        ids.sort_unstable();
        assert_eq!(ids, (1..=30).collect::<Vec<_>>());

        let single = one_dim(&[(1.0, 1)]);
        assert_eq!(permute_queries(&single, 9), single.queries());
    }

    proptest! {
        #[test]
        fn letor_round_trip(seed in any::<u64>(), noise in 0.0..2.0f64) {
            let (ds, _) = generate_synthetic(&SynthConfig {
                num_queries: 3,
                docs_per_query: 4,
                dimension: 5,
                noise_std: noise,
                seed,
            }).unwrap();
            let mut buf = Vec::new();
            write_letor(&ds, &mut buf).unwrap();
            prop_assert_eq!(parse_letor(buf.as_slice()).unwrap(), ds);
        }

        #[test]
        fn r_dominates_feature_map_norm(seed in any::<u64>(), n in 1usize..=9, dim in 1usize..=4) {
            let (ds, _) = generate_synthetic(&SynthConfig {
                num_queries: 2,
                docs_per_query: n,
                dimension: dim,
                noise_std: 0.0,
                seed,
            }).unwrap();
            let r = compute_r(&ds);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for q in ds.queries() {
                for _ in 0..100 {
                    let mut order: Vec<usize> = (0..q.len()).collect();
                    order.shuffle(&mut rng);
                    let phi = joint_features(q, &Ranking::new(order)).unwrap();
                    prop_assert!(phi.norm() <= r + 1e-12);
                }
            }
        }
    }
}
