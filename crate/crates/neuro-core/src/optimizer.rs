use crate::error::{shape_mismatch, NeuroError};
use crate::tensor::Tensor;

/// Ordered, named parameter collection. Order is insertion order and is part
/// of the contract: checkpoints serialize in this order, so identical
/// construction yields identical files.
#[derive(Clone, Debug, Default)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a parameter. Panics on duplicate names — those are always
    /// construction bugs, not runtime conditions.
    pub fn insert(&mut self, name: &str, tensor: Tensor) {
        assert!(
            !self.names.iter().any(|n| n == name),
            "duplicate parameter {name}"
        );
        self.names.push(name.to_string());
        self.tensors.push(tensor);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index_of(name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.index_of(name).map(move |i| &mut self.tensors[i])
    }

    pub fn require(&self, name: &str) -> Result<&Tensor, NeuroError> {
        self.get(name).ok_or_else(|| NeuroError::UnknownParameter(name.to_string()))
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(|n| n.as_str()).zip(self.tensors.iter())
    }
}

/// Gradient accumulator aligned with a [`ParamSet`].
#[derive(Clone, Debug)]
pub struct NamedGrads {
    names: Vec<String>,
    grads: Vec<Tensor>,
}

impl NamedGrads {
    pub fn zeros_like(params: &ParamSet) -> Self {
        NamedGrads {
            names: params.names.clone(),
            grads: params
                .tensors
                .iter()
                .map(|t| Tensor::zeros(t.shape()))
                .collect(),
        }
    }

    pub fn accumulate(&mut self, name: &str, grad: &Tensor) -> Result<(), NeuroError> {
        let i = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| NeuroError::UnknownParameter(name.to_string()))?;
        if self.grads[i].shape() != grad.shape() {
            return Err(shape_mismatch(
                "gradient accumulate",
                self.grads[i].shape(),
                grad.shape(),
            ));
        }
        for (g, d) in self.grads[i].data_mut().iter_mut().zip(grad.data()) {
            *g += d;
        }
        Ok(())
    }

    pub fn scale(&mut self, c: f64) {
        for g in &mut self.grads {
            for v in g.data_mut() {
                *v *= c;
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.grads[i])
    }
}

/// Post-update projection for one named parameter.
#[derive(Clone, Copy, Debug)]
pub struct ClampRule {
    pub min: f64,
    pub max: f64,
}

impl ClampRule {
    pub fn at_least(min: f64) -> Self {
        ClampRule {
            min,
            max: f64::INFINITY,
        }
    }

    pub fn range(min: f64, max: f64) -> Self {
        assert!(min <= max);
        ClampRule { min, max }
    }
}

/// Plain SGD: `p <- p - lr * g`, then per-name clamping. Rejects non-finite
/// gradients before touching any parameter so a failed step never corrupts
/// the set.
pub fn sgd_step(
    params: &mut ParamSet,
    grads: &NamedGrads,
    lr: f64,
    clamps: &[(&str, ClampRule)],
) -> Result<(), NeuroError> {
    for (name, g) in grads.names.iter().zip(&grads.grads) {
        if !g.is_finite() {
            return Err(NeuroError::NonFiniteGradient { param: name.clone() });
        }
        if params.get(name).is_none() {
            return Err(NeuroError::UnknownParameter(name.clone()));
        }
    }
    for (name, g) in grads.names.iter().zip(&grads.grads) {
        let clamp = clamps
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, rule)| *rule);
        let p = params.get_mut(name).unwrap();
        for (pv, gv) in p.data_mut().iter_mut().zip(g.data()) {
            *pv -= lr * gv;
            if let Some(rule) = clamp {
                *pv = pv.clamp(rule.min, rule.max);
            }
        }
    }
    Ok(())
}
