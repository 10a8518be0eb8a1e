//! Classical stochastic-chain models `a(t) = ⟨a|Sᵗ|p⟩`, the comparison class
//! for the quantum/classical separation analysis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_invariant, Error, Result};
use crate::linalg::{RMatrix, RVector};
use crate::sequences::RealSequence;

const STOCHASTIC_TOL: f64 = 1e-12;

/// A hidden classical chain: `dc` states evolving under a column-stochastic
/// matrix `S` (states are columns, so `p ↦ S p`), an initial distribution `p`
/// and a measurement value `a_k` per state.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticModel {
    dc: usize,
    s: RMatrix,
    p: RVector,
    a_out: RVector,
}

impl StochasticModel {
    pub fn new(s: RMatrix, p: RVector, a_out: RVector) -> Result<Self> {
        let dc = s.nrows();
        if dc == 0 || s.ncols() != dc {
            return Err(Error::InvalidParameter(format!(
                "stochastic matrix must be square and nonempty, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        if p.len() != dc || a_out.len() != dc {
            return Err(Error::DimensionMismatch {
                context: "stochastic model vectors",
                expected: dc,
                got: p.len().min(a_out.len()),
            });
        }
        let neg = s.iter().chain(p.iter()).fold(0.0f64, |m, &x| m.max(-x));
        check_invariant("stochastic entries nonnegative", neg.max(0.0), 0.0)?;
        for j in 0..dc {
            let col_sum: f64 = s.column(j).iter().sum();
            check_invariant("stochastic column sums to 1", (col_sum - 1.0).abs(), STOCHASTIC_TOL)?;
        }
        let p_sum: f64 = p.iter().sum();
        check_invariant("probability vector sums to 1", (p_sum - 1.0).abs(), STOCHASTIC_TOL)?;
        Ok(Self { dc, s, p, a_out })
    }

    pub fn dc(&self) -> usize {
        self.dc
    }

    pub fn s(&self) -> &RMatrix {
        &self.s
    }

    pub fn p(&self) -> &RVector {
        &self.p
    }

    pub fn a_out(&self) -> &RVector {
        &self.a_out
    }
}

/// Evolves the chain by iterated matrix-vector products:
/// the value at `t` is `a_out · (Sᵗ p)`.
pub fn evolve_classical(model: &StochasticModel, steps: usize) -> Result<RealSequence> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be positive".into()));
    }
    let mut values = Vec::with_capacity(steps);
    let mut p = model.p.clone();
    for _ in 0..steps {
        values.push(model.a_out.dot(&p));
        p = &model.s * p;
    }
    RealSequence::new(values)
}

/// Random model, deterministic in the seed: each column of `S` and the vector
/// `p` are flat-Dirichlet (normalized standard exponentials), `a_out` has
/// standard normal entries.
pub fn random_stochastic(dc: usize, seed: u64) -> Result<StochasticModel> {
    if dc == 0 {
        return Err(Error::InvalidParameter("state count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exp_sample = |n: usize| -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / sum).collect()
    };
    let mut s = RMatrix::zeros(dc, dc);
    for j in 0..dc {
        let col = exp_sample(dc);
        for i in 0..dc {
            s[(i, j)] = col[i];
        }
    }
    let p = RVector::from_vec(exp_sample(dc));
    let a_out = RVector::from_fn(dc, |_, _| rng.sample(rand_distr::StandardNormal));
    StochasticModel::new(s, p, a_out)
}

#[derive(Serialize, Deserialize)]
struct StochasticFile {
    dc: usize,
    s: Vec<Vec<f64>>,
    p: Vec<f64>,
    a: Vec<f64>,
}

impl StochasticModel {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(StochasticFile {
            dc: self.dc,
            s: (0..self.dc)
                .map(|i| (0..self.dc).map(|j| self.s[(i, j)]).collect())
                .collect(),
            p: self.p.iter().copied().collect(),
            a: self.a_out.iter().copied().collect(),
        })
        .expect("serializable")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: StochasticFile = serde_json::from_str(text)?;
        let n = file.s.len();
        if n == 0 || file.s.iter().any(|r| r.len() != n) {
            return Err(Error::Parse("stochastic matrix must be square".into()));
        }
        let s = RMatrix::from_fn(n, n, |i, j| file.s[i][j]);
        let model = Self::new(s, RVector::from_vec(file.p), RVector::from_vec(file.a))?;
        if file.dc != model.dc() {
            return Err(Error::DimensionMismatch {
                context: "stochastic JSON `dc` field",
                expected: model.dc(),
                got: file.dc,
            });
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_chain_is_constant() {
        let model = StochasticModel::new(
            RMatrix::identity(2, 2),
            RVector::from_vec(vec![1.0, 0.0]),
            RVector::from_vec(vec![5.0, 0.0]),
        )
        .unwrap();
        let seq = evolve_classical(&model, 10).unwrap();
        assert!(seq.values().iter().all(|&v| v == 5.0));
    }

    #[test]
    fn symmetric_flip_alternates() {
        let model = StochasticModel::new(
            RMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            RVector::from_vec(vec![1.0, 0.0]),
            RVector::from_vec(vec![1.0, -1.0]),
        )
        .unwrap();
        let seq = evolve_classical(&model, 8).unwrap();
        // Oracle: 2x2 matrix powers, S^t = 𝟙 for even t, the flip for odd t.
        for (t, v) in seq.values().iter().enumerate() {
            assert_relative_eq!(*v, if t % 2 == 0 { 1.0 } else { -1.0 }, epsilon = 1e-14);
        }
    }

    #[test]
    fn lazy_flip_decays_geometrically() {
        // Eigendecomposition oracle: S has eigenvalues 1 and 0.8, so the
        // occupation of state 1 is 0.5 + 0.5 · 0.8^t.
        let model = StochasticModel::new(
            RMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.1, 0.9]),
            RVector::from_vec(vec![1.0, 0.0]),
            RVector::from_vec(vec![1.0, 0.0]),
        )
        .unwrap();
        let seq = evolve_classical(&model, 20).unwrap();
        for (t, v) in seq.values().iter().enumerate() {
            assert_relative_eq!(*v, 0.5 + 0.5 * 0.8f64.powi(t as i32), epsilon = 1e-12);
        }
    }

    #[test]
    fn single_state_model_is_forced() {
        let model = random_stochastic(1, 123).unwrap();
        assert_eq!(model.s()[(0, 0)], 1.0);
        assert_eq!(model.p()[0], 1.0);
    }

    #[test]
    fn random_models_are_deterministic_and_stochastic() {
        let a = random_stochastic(3, 9).unwrap();
        let b = random_stochastic(3, 9).unwrap();
        assert_eq!(a, b);
        for j in 0..3 {
            let col_sum: f64 = a.s().column(j).iter().sum();
            assert!((col_sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn probability_is_conserved_over_long_runs() {
        let model = random_stochastic(4, 17).unwrap();
        let mut p = model.p().clone();
        for _ in 0..1000 {
            p = model.s() * p;
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let model = random_stochastic(3, 4).unwrap();
        let text = serde_json::to_string(&model.to_json()).unwrap();
        assert_eq!(model, StochasticModel::from_json_str(&text).unwrap());
    }

    #[test]
    fn negative_entries_are_rejected() {
        let err = StochasticModel::new(
            RMatrix::from_row_slice(2, 2, &[1.1, 0.0, -0.1, 1.0]),
            RVector::from_vec(vec![0.5, 0.5]),
            RVector::from_vec(vec![1.0, 2.0]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("nonnegative"), "{err}");
    }
}
