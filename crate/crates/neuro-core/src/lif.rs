use crate::error::NeuroError;
use crate::tensor::Tensor;

/// Per-layer leaky integrate-and-fire scalars. Both are trainable in the
/// spiking models; the clamps used during training keep them inside the
/// ranges validated here.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LifParams {
    /// Firing threshold, strictly positive.
    pub v_th: f64,
    /// Leak factor in `[0, 1]`; 1 integrates without decay, 0 is memoryless.
    pub lambda: f64,
}

impl LifParams {
    pub fn new(v_th: f64, lambda: f64) -> Result<Self, NeuroError> {
        if !(v_th.is_finite() && v_th > 0.0) {
            return Err(NeuroError::InvalidParameter(format!(
                "v_th must be finite and positive, got {v_th}"
            )));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(NeuroError::InvalidParameter(format!(
                "lambda must lie in [0, 1], got {lambda}"
            )));
        }
        Ok(LifParams { v_th, lambda })
    }
}

/// Membrane potential and previous spike grid of one LIF layer.
#[derive(Clone, Debug)]
pub struct LifLayerState {
    pub u: Tensor,
    pub spikes: Tensor,
}

impl LifLayerState {
    pub fn zeros(shape: &[usize]) -> Self {
        LifLayerState {
            u: Tensor::zeros(shape),
            spikes: Tensor::zeros(shape),
        }
    }
}

/// One discrete LIF update with soft reset:
///
/// ```text
/// u' = lambda * u + input - v_th * o_prev
/// z  = u' / v_th - 1
/// o  = 1 if z > 0 else 0
/// ```
///
/// Returns the advanced state and the normalized membrane offset `z`.
pub fn lif_step(
    state: &LifLayerState,
    input: &Tensor,
    params: &LifParams,
) -> Result<(LifLayerState, Tensor), NeuroError> {
    let decay = state.u.map(|u| u * params.lambda);
    let reset = state.spikes.map(|o| o * params.v_th);
    let u_next = decay
        .zip_map(input, "lif input", |d, i| d + i)?
        .zip_map(&reset, "lif reset", |u, r| u - r)?;
    let z = u_next.map(|u| u / params.v_th - 1.0);
    let spikes = z.map(|zi| if zi > 0.0 { 1.0 } else { 0.0 });
    Ok((
        LifLayerState { u: u_next, spikes },
        z,
    ))
}
