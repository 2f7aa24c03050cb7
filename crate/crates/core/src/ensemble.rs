//! Element-wise fusion of predicted level distributions.

use crate::error::{Error, Result};
use crate::scoring::PredictedDistribution;

const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Members to fuse, with optional non-negative weights summing to one.
#[derive(Debug, Clone)]
pub struct EnsembleInput {
    members: Vec<PredictedDistribution>,
    weights: Option<Vec<f64>>,
}

impl EnsembleInput {
    pub fn uniform(members: Vec<PredictedDistribution>) -> Result<Self> {
        Self::new(members, None)
    }

    pub fn new(members: Vec<PredictedDistribution>, weights: Option<Vec<f64>>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyEnsemble)?;
        let len = first.len();
        if let Some(m) = members.iter().find(|m| m.len() != len) {
            return Err(Error::Shape {
                expected: len,
                actual: m.len(),
            });
        }
        if let Some(w) = &weights {
            if w.len() != members.len() {
                return Err(Error::Shape {
                    expected: members.len(),
                    actual: w.len(),
                });
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidInput(
                    "weights must be finite and >= 0".into(),
                ));
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
                return Err(Error::InvalidInput(format!(
                    "weights sum to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { members, weights })
    }

    pub fn members(&self) -> &[PredictedDistribution] {
        &self.members
    }

    /// Explicit weights, or uniform ones when none were given.
    pub fn weights(&self) -> Vec<f64> {
        match &self.weights {
            Some(w) => w.clone(),
            None => vec![1.0 / self.members.len() as f64; self.members.len()],
        }
    }
}

/// `out_i = Σ_k w_k · member_k[i]`.
pub fn average_distributions(input: &EnsembleInput) -> Result<PredictedDistribution> {
    let len = input.members[0].len();
    let mut out = vec![0.0; len];
    match &input.weights {
        Some(weights) => {
            for (member, w) in input.members.iter().zip(weights) {
                for (o, p) in out.iter_mut().zip(member.probs()) {
                    *o += w * p;
                }
            }
        }
        None => {
            for member in &input.members {
                for (o, p) in out.iter_mut().zip(member.probs()) {
                    *o += p;
                }
            }
            let n = input.members.len() as f64;
            out.iter_mut().for_each(|o| *o /= n);
        }
    }
    PredictedDistribution::new(out)
}

/// Uniform average over prompt variants of the same model.
pub fn prompt_ensemble(per_prompt: Vec<PredictedDistribution>) -> Result<PredictedDistribution> {
    average_distributions(&EnsembleInput::uniform(per_prompt)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::expected_score;
    use crate::softlabel::LevelScheme;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dist(v: &[f64]) -> PredictedDistribution {
        PredictedDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn point_masses_average_to_endpoints() {
        let input = EnsembleInput::uniform(vec![
            dist(&[1.0, 0.0, 0.0, 0.0, 0.0]),
            dist(&[0.0, 0.0, 0.0, 0.0, 1.0]),
        ])
        .unwrap();
        let out = average_distributions(&input).unwrap();
        assert_eq!(out.probs(), &[0.5, 0.0, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn single_member_is_identity() {
        let d = dist(&[0.1, 0.2, 0.3, 0.25, 0.15]);
        let out = average_distributions(&EnsembleInput::uniform(vec![d.clone()]).unwrap()).unwrap();
        assert_eq!(out, d);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            EnsembleInput::uniform(vec![]),
            Err(Error::EmptyEnsemble)
        ));
        assert!(matches!(
            EnsembleInput::uniform(vec![dist(&[1.0, 0.0]), dist(&[1.0, 0.0, 0.0])]),
            Err(Error::Shape { .. })
        ));
        let members = vec![dist(&[1.0, 0.0]), dist(&[0.0, 1.0])];
        assert!(EnsembleInput::new(members.clone(), Some(vec![0.5])).is_err());
        assert!(EnsembleInput::new(members.clone(), Some(vec![0.7, 0.7])).is_err());
        assert!(EnsembleInput::new(members, Some(vec![1.5, -0.5])).is_err());
    }

    #[test]
    fn weighted_average() {
        let members = vec![dist(&[1.0, 0.0]), dist(&[0.0, 1.0])];
        let out =
            average_distributions(&EnsembleInput::new(members, Some(vec![0.25, 0.75])).unwrap())
                .unwrap();
        assert_eq!(out.probs(), &[0.25, 0.75]);
    }

    #[test]
    fn prompt_ensemble_examples() {
        let d = dist(&[0.05, 0.15, 0.4, 0.3, 0.1]);
        let out = prompt_ensemble(vec![d.clone(); 10]).unwrap();
        for (a, b) in out.probs().iter().zip(d.probs()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
        }
        let out = prompt_ensemble(vec![
            dist(&[0.6, 0.4, 0.0, 0.0, 0.0]),
            dist(&[0.4, 0.6, 0.0, 0.0, 0.0]),
        ])
        .unwrap();
        for (a, b) in out.probs().iter().zip([0.5, 0.5, 0.0, 0.0, 0.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    fn simplex() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, 5).prop_filter_map("zero mass", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-6).then(|| v.into_iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn score_of_average_is_average_of_scores(members in prop::collection::vec(simplex(), 1..8)) {
            let s = LevelScheme::five_level();
            let members: Vec<_> = members.into_iter().map(|v| PredictedDistribution::new(v).unwrap()).collect();
            let mean_of_scores = members.iter().map(|m| expected_score(m, &s).unwrap()).sum::<f64>()
                / members.len() as f64;
            let fused = average_distributions(&EnsembleInput::uniform(members.clone()).unwrap()).unwrap();
            prop_assert!((expected_score(&fused, &s).unwrap() - mean_of_scores).abs() <= 1e-12);
            let sum: f64 = fused.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
            prop_assert_eq!(prompt_ensemble(members).unwrap(), fused);
        }

        #[test]
        fn order_does_not_matter(members in prop::collection::vec(simplex(), 2..6)) {
            let members: Vec<_> = members.into_iter().map(|v| PredictedDistribution::new(v).unwrap()).collect();
            let mut reversed = members.clone();
            reversed.reverse();
            let a = average_distributions(&EnsembleInput::uniform(members).unwrap()).unwrap();
            let b = average_distributions(&EnsembleInput::uniform(reversed).unwrap()).unwrap();
            for (x, y) in a.probs().iter().zip(b.probs()) {
                prop_assert!((x - y).abs() <= 1e-15);
            }
        }

        #[test]
        fn copies_are_idempotent(v in simplex(), n in 1usize..12) {
            let d = PredictedDistribution::new(v).unwrap();
            let out = prompt_ensemble(vec![d.clone(); n]).unwrap();
            for (x, y) in out.probs().iter().zip(d.probs()) {
                prop_assert!((x - y).abs() <= 1e-15);
            }
        }
    }
}
