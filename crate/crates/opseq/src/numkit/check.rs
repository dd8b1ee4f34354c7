use super::array::NumError;
use super::graph::{Graph, NodeRef};
use super::params::ParamSet;

/// Floor in the relative-error denominator: `|a - n| / max(|a|, |n|, 1e-8)`.
pub const REL_ERR_FLOOR: f64 = 1e-8;

/// Default tolerance used by the `gradcheck` command.
pub const GRAD_CHECK_TOLERANCE: f64 = 1e-3;

/// Compare reverse-mode gradients against central finite differences.
///
/// `loss_fn` must build a deterministic scalar loss from the current
/// parameter values. Every parameter entry is perturbed by `±step` and the
/// analytic gradient is compared against `(loss(+) - loss(-)) / (2 step)`.
/// Returns the maximum relative error over all entries; a model passes when
/// the result does not exceed the caller's tolerance.
///
/// Two baseline evaluations are made first; if they disagree bitwise the
/// loss is not deterministic and a contract error is returned.
pub fn grad_check<F>(params: &mut ParamSet, step: f64, mut loss_fn: F) -> Result<f64, NumError>
where
    F: FnMut(&ParamSet, &mut Graph) -> Result<NodeRef, NumError>,
{
    if step.is_nan() || step <= 0.0 || !step.is_finite() {
        return Err(NumError::Argument(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }

    let eval = |params: &ParamSet, loss_fn: &mut F| -> Result<f64, NumError> {
        let mut g = Graph::new();
        let node = loss_fn(params, &mut g)?;
        let v = g.value(node);
        if !v.is_scalar() {
            return Err(NumError::Argument(format!(
                "loss must be scalar, got shape {:?}",
                v.shape()
            )));
        }
        Ok(v.at(0))
    };

    let base = eval(params, &mut loss_fn)?;
    let again = eval(params, &mut loss_fn)?;
    if base.to_bits() != again.to_bits() {
        return Err(NumError::Contract(format!(
            "loss is not deterministic: {base} vs {again}"
        )));
    }

    params.zero_grads();
    {
        let mut g = Graph::new();
        let node = loss_fn(params, &mut g)?;
        g.backward(node, params)?;
    }
    let analytic: Vec<Vec<f64>> = params
        .ids()
        .map(|id| params.grad(id).data().to_vec())
        .collect();

    let mut max_rel = 0.0f64;
    let ids: Vec<_> = params.ids().collect();
    for (p, &id) in ids.iter().enumerate() {
        for k in 0..params.value(id).len() {
            let original = params.value(id).at(k);
            params.value_mut(id).data_mut()[k] = original + step;
            let plus = eval(params, &mut loss_fn)?;
            params.value_mut(id).data_mut()[k] = original - step;
            let minus = eval(params, &mut loss_fn)?;
            params.value_mut(id).data_mut()[k] = original;

            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic[p][k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_ERR_FLOOR);
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    Ok(max_rel)
}
