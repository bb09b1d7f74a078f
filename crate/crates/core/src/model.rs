//! Shared numeric types and the linear utility model.
//!
//! Utilities are linear in a joint feature map: `U(x, y) = w*ᵀ φ(x, y)`. A
//! concrete problem domain supplies `φ` and the argmax over its output space
//! through [`JointFeatureMap`]; the ranking domain in [`crate::ranking`] is
//! the one shipped implementation.

use std::ops::Deref;

use crate::error::{Error, Result};

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// A dense feature vector, either a document's raw features or a joint feature map output.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values)?;
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &FeatureVector, scale: f64) -> Result<()> {
        axpy(&mut self.0, &other.0, scale)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A dense weight vector: the learner's `w_t` or the hidden `w*`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values)?;
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// `self += scale * features`.
    pub fn add_scaled(&mut self, features: &FeatureVector, scale: f64) -> Result<()> {
        axpy(&mut self.0, &features.0, scale)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn squared_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for WeightVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn axpy(acc: &mut [f64], other: &[f64], scale: f64) -> Result<()> {
    if acc.len() != other.len() {
        return Err(Error::Dimension {
            expected: acc.len(),
            found: other.len(),
        });
    }
    for (a, b) in acc.iter_mut().zip(other) {
        *a += scale * b;
    }
    Ok(())
}

fn norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Inner product `wᵀx`, accumulated in index order.
pub fn dot(weights: &WeightVector, features: &FeatureVector) -> Result<f64> {
    if weights.len() != features.len() {
        return Err(Error::Dimension {
            expected: weights.len(),
            found: features.len(),
        });
    }
    Ok(dot_unchecked(weights, features))
}

#[inline]
pub(crate) fn dot_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The user's hidden utility `w*` together with the feature-map norm bound `R`.
#[derive(Clone, Debug)]
pub struct UtilityModel {
    w_star: WeightVector,
    r_bound: f64,
    w_star_norm: f64,
}

impl UtilityModel {
    pub fn new(w_star: WeightVector, r_bound: f64) -> Result<Self> {
        if !(r_bound.is_finite() && r_bound > 0.0) {
            return Err(Error::Domain(format!(
                "feature norm bound R must be positive and finite, got {r_bound}"
            )));
        }
        let w_star_norm = w_star.norm();
        Ok(Self {
            w_star,
            r_bound,
            w_star_norm,
        })
    }

    pub fn w_star(&self) -> &WeightVector {
        &self.w_star
    }

    /// Upper bound on `‖φ(x, y)‖` over every context and object.
    pub fn r_bound(&self) -> f64 {
        self.r_bound
    }

    pub fn w_star_norm(&self) -> f64 {
        self.w_star_norm
    }

    pub fn dimension(&self) -> usize {
        self.w_star.len()
    }

    /// `U(x, y) = w*ᵀ φ(x, y)` for the object whose joint features are given.
    pub fn utility(&self, features: &FeatureVector) -> Result<f64> {
        dot(&self.w_star, features)
    }
}

/// A structured output domain: a joint feature map and the argmax of a linear score over it.
pub trait JointFeatureMap {
    type Context;
    type Object;

    fn joint_features(
        &self,
        context: &Self::Context,
        object: &Self::Object,
    ) -> Result<FeatureVector>;

    /// `argmax_y wᵀ φ(context, y)`.
    fn argmax(&self, weights: &WeightVector, context: &Self::Context) -> Result<Self::Object>;
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(v: &[f64]) -> WeightVector {
        WeightVector::new(v.to_vec()).unwrap()
    }

    fn f(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn dot_examples() {
        assert_eq!(dot(&w(&[1.0, 2.0]), &f(&[3.0, 4.0])).unwrap(), 11.0);
        assert_eq!(dot(&w(&[0.0, 0.0]), &f(&[5.0, -7.0])).unwrap(), 0.0);
        assert_eq!(dot(&w(&[1.0]), &f(&[1.0])).unwrap(), 1.0);
    }

    #[test]
    fn dot_rejects_length_mismatch() {
        let err = dot(&w(&[1.0, 2.0]), &f(&[1.0])).unwrap_err();
        assert!(matches!(
            err,
            Error::Dimension {
                expected: 2,
                found: 1
            }
        ));
    }

    #[test]
    fn vectors_reject_non_finite() {
        assert!(matches!(
            FeatureVector::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(WeightVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn utility_examples() {
        let m = UtilityModel::new(w(&[1.0, 0.0]), 1.0).unwrap();
        assert_eq!(m.utility(&f(&[2.0, 9.0])).unwrap(), 2.0);
        let m = UtilityModel::new(WeightVector::zeros(3), 1.0).unwrap();
        assert_eq!(m.utility(&f(&[2.0, -1.0, 8.0])).unwrap(), 0.0);
        let m = UtilityModel::new(w(&[0.5, 0.5]), 1.0).unwrap();
        assert_eq!(m.utility(&f(&[1.0, 3.0])).unwrap(), 2.0);
        assert!(m.utility(&f(&[1.0])).is_err());
    }

    #[test]
    fn model_caches_norm_and_rejects_bad_bound() {
        let m = UtilityModel::new(w(&[3.0, 4.0]), 2.0).unwrap();
        assert!((m.w_star_norm() - 5.0).abs() <= 5.0 * 1e-12);
        assert!(UtilityModel::new(w(&[1.0]), 0.0).is_err());
        assert!(UtilityModel::new(w(&[1.0]), f64::NAN).is_err());
    }

    fn vecs(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0..10.0f64, n)
    }

    proptest! {
        #[test]
        fn utility_is_linear(
            (ws, p1, p2) in (1usize..12).prop_flat_map(|n| (vecs(n), vecs(n), vecs(n))),
            a in -5.0..5.0f64,
            b in -5.0..5.0f64,
        ) {
            let m = UtilityModel::new(w(&ws), 1.0).unwrap();
            let mut mix = FeatureVector::zeros(ws.len());
            mix.add_scaled(&f(&p1), a).unwrap();
            mix.add_scaled(&f(&p2), b).unwrap();
            let lhs = m.utility(&mix).unwrap();
            let rhs = a * m.utility(&f(&p1)).unwrap() + b * m.utility(&f(&p2)).unwrap();
            let scale: f64 = ws.iter().zip(&p1).zip(&p2)
                .map(|((w, x), y)| (w * (a * x)).abs() + (w * (b * y)).abs())
                .sum::<f64>()
                .max(1.0);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * scale);
        }

        #[test]
        fn dot_is_symmetric((a, b) in (1usize..16).prop_flat_map(|n| (vecs(n), vecs(n)))) {
            let ab = dot(&w(&a), &f(&b)).unwrap();
            let ba = dot(&w(&b), &f(&a)).unwrap();
            prop_assert_eq!(ab, ba);
        }
    }
}
