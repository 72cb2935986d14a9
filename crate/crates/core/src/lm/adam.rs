use super::params::ModelParams;
use super::train::TrainConfig;
use super::ModelError;

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: ModelParams,
    pub v: ModelParams,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        AdamState { step: 0, m: ModelParams::zeros(params.dims), v: ModelParams::zeros(params.dims) }
    }
}

/// One Adam update with bias correction. Weight decay is an L2 term added to
/// the gradient before the moments are updated, unless
/// `config.decoupled_weight_decay` is set, in which case `lr·wd·θ` is
/// subtracted from the parameters directly.
///
/// Parameters and state are left untouched when any gradient is non-finite.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &ModelParams,
    state: &mut AdamState,
    config: &TrainConfig,
) -> Result<(), ModelError> {
    if params.dims != grads.dims || params.dims != state.m.dims {
        return Err(ModelError::DimensionMismatch("optimizer tensors disagree with parameters".into()));
    }
    if let Some((name, _)) = grads.tensors().iter().find(|(_, t)| !t.is_finite()) {
        return Err(ModelError::NonFiniteGradient((*name).to_string()));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (config.adam_beta1, config.adam_beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let (lr, wd, eps) = (config.learning_rate, config.weight_decay, config.adam_eps);
    let decoupled = config.decoupled_weight_decay;

    let gs = grads.tensors();
    let ms = state.m.tensors_mut();
    let vs = state.v.tensors_mut();
    for ((((_, p), (_, g)), (_, m)), (_, v)) in params.tensors_mut().into_iter().zip(gs).zip(ms).zip(vs) {
        for idx in 0..p.data.len() {
            let theta = p.data[idx];
            let mut grad = g.data[idx];
            if !decoupled {
                grad += wd * theta;
            }
            let mi = b1 * m.data[idx] + (1.0 - b1) * grad;
            let vi = b2 * v.data[idx] + (1.0 - b2) * grad * grad;
            m.data[idx] = mi;
            v.data[idx] = vi;
            let mut next = theta - lr * (mi / c1) / ((vi / c2).sqrt() + eps);
            if decoupled {
                next -= lr * wd * theta;
            }
            p.data[idx] = next;
        }
    }
    Ok(())
}
