use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A collection of named, contiguous parameter blocks.
///
/// Gradients use the same type as the parameters, so block order and
/// shapes line up one to one.
pub trait ParamSet {
    fn blocks(&self) -> Vec<(String, &[f64])>;
    fn blocks_mut(&mut self) -> Vec<(String, &mut [f64])>;

    fn param_count(&self) -> usize {
        self.blocks().iter().map(|(_, b)| b.len()).sum()
    }

    fn to_flat(&self) -> Vec<f64> {
        self.blocks().iter().flat_map(|(_, b)| b.iter().copied()).collect()
    }

    fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        let expected = self.param_count();
        if flat.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "parameter blob",
                expected,
                got: flat.len(),
            });
        }
        let mut offset = 0;
        for (_, block) in self.blocks_mut() {
            block.copy_from_slice(&flat[offset..offset + block.len()]);
            offset += block.len();
        }
        Ok(())
    }
}

/// Prefixes every block name of `inner` with `prefix.`.
pub(crate) fn prefixed<'a>(prefix: &str, inner: Vec<(String, &'a [f64])>) -> Vec<(String, &'a [f64])> {
    inner.into_iter().map(|(n, b)| (format!("{prefix}.{n}"), b)).collect()
}

pub(crate) fn prefixed_mut<'a>(
    prefix: &str,
    inner: Vec<(String, &'a mut [f64])>,
) -> Vec<(String, &'a mut [f64])> {
    inner.into_iter().map(|(n, b)| (format!("{prefix}.{n}"), b)).collect()
}

/// Adam optimizer state with bias-corrected moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &impl ParamSet, lr: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params.blocks().iter().map(|(_, b)| vec![0.0; b.len()]).collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }
}

/// One Adam update of `params` along `grads`.
///
/// Fails without touching anything if a gradient is non-finite or the
/// shapes disagree with the state.
pub fn adam_step<P: ParamSet>(state: &mut AdamState, params: &mut P, grads: &P) -> Result<()> {
    let grad_blocks = grads.blocks();
    if grad_blocks.len() != state.first.len()
        || grad_blocks.iter().zip(&state.first).any(|((_, g), m)| g.len() != m.len())
    {
        return Err(Error::Training("optimizer state does not match parameters".into()));
    }
    if let Some((name, _)) = grad_blocks.iter().find(|(_, g)| g.iter().any(|x| !x.is_finite())) {
        return Err(Error::Training(format!("non-finite gradient in {name}")));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.lr, state.epsilon);
    for (((_, p), (_, g)), (m, v)) in params
        .blocks_mut()
        .into_iter()
        .zip(grad_blocks)
        .zip(state.first.iter_mut().zip(state.second.iter_mut()))
    {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Scalar(Vec<f64>);

    impl ParamSet for Scalar {
        fn blocks(&self) -> Vec<(String, &[f64])> {
            vec![("w".into(), &self.0)]
        }
        fn blocks_mut(&mut self) -> Vec<(String, &mut [f64])> {
            vec![("w".into(), &mut self.0)]
        }
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = Scalar(vec![1.0, -2.0]);
        let mut st = AdamState::new(&p, 0.1);
        adam_step(&mut st, &mut p, &Scalar(vec![0.0, 0.0])).unwrap();
        assert_eq!(p.0, vec![1.0, -2.0]);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = Scalar(vec![0.0, 0.0, 0.0]);
        let mut st = AdamState::new(&p, 0.01);
        adam_step(&mut st, &mut p, &Scalar(vec![3.0, -0.5, 1e-3])).unwrap();
        for (x, s) in p.0.iter().zip([-1.0, 1.0, -1.0]) {
            assert!((x - s * 0.01).abs() < 1e-6, "{x}");
        }
    }

    #[test]
    fn minimizes_square() {
        let mut p = Scalar(vec![1.0]);
        let mut st = AdamState::new(&p, 0.1);
        for _ in 0..100 {
            let g = Scalar(vec![2.0 * p.0[0]]);
            adam_step(&mut st, &mut p, &g).unwrap();
        }
        assert!(p.0[0].abs() < 0.1, "{}", p.0[0]);
    }

    #[test]
    fn non_finite_gradient_names_block() {
        let mut p = Scalar(vec![1.0]);
        let mut st = AdamState::new(&p, 0.1);
        let err = adam_step(&mut st, &mut p, &Scalar(vec![f64::NAN])).unwrap_err();
        assert!(err.to_string().contains('w'));
        assert_eq!(p.0, vec![1.0]);
        assert_eq!(st.step, 0);
    }

    #[test]
    fn flat_round_trip() {
        let mut p = Scalar(vec![1.0, 2.0]);
        p.load_flat(&[5.0, 6.0]).unwrap();
        assert_eq!(p.to_flat(), vec![5.0, 6.0]);
        assert!(p.load_flat(&[1.0]).is_err());
    }
}
