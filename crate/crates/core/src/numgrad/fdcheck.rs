//! Central finite-difference oracle for gradient checks.
//!
//! Only forward evaluations are used here, keeping the oracle independent of
//! the tape's reverse pass.

use crate::tensor::Tensor;

use super::params::ParamSet;

pub const FD_STEP: f64 = 1e-5;

/// Numeric gradient of `f` with respect to every entry of `params`,
/// by central differences.
pub fn numeric_grad(params: &ParamSet, f: impl Fn(&ParamSet) -> f64) -> ParamSet {
    let mut out = params.zeros_like();
    let mut probe = params.clone();
    let names: Vec<String> = params.names().cloned().collect();
    for name in &names {
        let n = params.get(name).unwrap().numel();
        for i in 0..n {
            let orig = probe.get(name).unwrap().data()[i];
            probe.get_mut(name).unwrap().data_mut()[i] = orig + FD_STEP;
            let plus = f(&probe);
            probe.get_mut(name).unwrap().data_mut()[i] = orig - FD_STEP;
            let minus = f(&probe);
            probe.get_mut(name).unwrap().data_mut()[i] = orig;
            out.get_mut(name).unwrap().data_mut()[i] = (plus - minus) / (2.0 * FD_STEP);
        }
    }
    out
}

/// Numeric gradient with respect to a single free tensor.
pub fn numeric_grad_tensor(x: &Tensor, f: impl Fn(&Tensor) -> f64) -> Tensor {
    let mut out = Tensor::zeros(x.shape());
    let mut probe = x.clone();
    for i in 0..x.numel() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + FD_STEP;
        let plus = f(&probe);
        probe.data_mut()[i] = orig - FD_STEP;
        let minus = f(&probe);
        probe.data_mut()[i] = orig;
        out.data_mut()[i] = (plus - minus) / (2.0 * FD_STEP);
    }
    out
}

/// Max relative error between analytic and numeric gradients, with an
/// absolute floor so near-zero entries do not blow up the ratio.
pub fn max_rel_error(analytic: &ParamSet, numeric: &ParamSet) -> f64 {
    let mut worst: f64 = 0.0;
    for ((_, a), (_, n)) in analytic.iter().zip(numeric.iter()) {
        worst = worst.max(max_rel_error_tensor(a, n));
    }
    worst
}

pub fn max_rel_error_tensor(analytic: &Tensor, numeric: &Tensor) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, n) in analytic.data().iter().zip(numeric.data()) {
        let denom = a.abs().max(n.abs()).max(1e-6);
        worst = worst.max((a - n).abs() / denom);
    }
    worst
}
