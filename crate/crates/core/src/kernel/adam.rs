use super::{Gradients, KernelError, ParamId, ParamStore, Tensor};

/// Adam hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moment estimates, one pair per parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub t: u64,
}

impl AdamState {
    pub fn new(store: &ParamStore) -> Self {
        let zeros: Vec<Tensor> = store
            .iter()
            .map(|(_, _, p)| Tensor::zeros(p.rows(), p.cols()))
            .collect();
        Self { m: zeros.clone(), v: zeros, t: 0 }
    }
}

/// One bias-corrected Adam step over every parameter in `store`.
/// Parameters without a gradient entry are treated as having zero gradient.
pub fn adam_step(
    store: &mut ParamStore,
    grads: &Gradients,
    state: &mut AdamState,
    config: &AdamConfig,
) -> Result<(), KernelError> {
    adam_step_filtered(store, grads, state, config, |_| true)
}

/// Like [`adam_step`], but only parameters for which `update` returns true
/// are touched. The step counter still advances once.
pub fn adam_step_filtered(
    store: &mut ParamStore,
    grads: &Gradients,
    state: &mut AdamState,
    config: &AdamConfig,
    update: impl Fn(ParamId) -> bool,
) -> Result<(), KernelError> {
    if !(config.lr > 0.0) {
        return Err(KernelError::Contract(format!("learning rate must be positive, got {}", config.lr)));
    }
    if state.m.len() != store.len() {
        return Err(KernelError::Contract(format!(
            "optimizer state tracks {} tensors, store has {}",
            state.m.len(),
            store.len()
        )));
    }
    for id in store.ids() {
        if let Some(g) = grads.get(id) {
            if g.shape() != store.get(id).shape() {
                return Err(KernelError::Contract(format!(
                    "gradient for {} has shape {:?}, parameter has {:?}",
                    store.name(id),
                    g.shape(),
                    store.get(id).shape()
                )));
            }
        }
    }

    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - config.beta1.powi(t);
    let bc2 = 1.0 - config.beta2.powi(t);
    for id in store.ids() {
        if !update(id) {
            continue;
        }
        let Some(g) = grads.get(id) else {
            // Zero gradient: moments decay, parameter moves by the remaining momentum.
            let m = state.m[id.0].data_mut();
            let v = state.v[id.0].data_mut();
            let p = store.get_mut(id).data_mut();
            for ((pm, vm), pv) in m.iter_mut().zip(v.iter_mut()).zip(p.iter_mut()) {
                *pm *= config.beta1;
                *vm *= config.beta2;
                *pv -= config.lr * (*pm / bc1) / ((*vm / bc2).sqrt() + config.eps);
            }
            continue;
        };
        let m = state.m[id.0].data_mut();
        let v = state.v[id.0].data_mut();
        let p = store.get_mut(id).data_mut();
        for (((pm, vm), pv), &gv) in m.iter_mut().zip(v.iter_mut()).zip(p.iter_mut()).zip(g.data()) {
            *pm = config.beta1 * *pm + (1.0 - config.beta1) * gv;
            *vm = config.beta2 * *vm + (1.0 - config.beta2) * gv * gv;
            *pv -= config.lr * (*pm / bc1) / ((*vm / bc2).sqrt() + config.eps);
        }
    }
    Ok(())
}
