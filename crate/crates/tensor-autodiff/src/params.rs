//! Named parameter sets and their binding into a graph.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::AdError;
use crate::graph::{Graph, NodeId};
use crate::tensor::Tensor;

/// Ordered name → tensor map. BTreeMap keeps iteration deterministic, which
/// keeps Adam updates and checkpoints bitwise reproducible.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    entries: BTreeMap<String, Tensor>,
}

impl Params {
    pub fn new() -> Self {
        Params::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, t: Tensor) {
        self.entries.insert(name.into(), t);
    }

    pub fn get(&self, name: &str) -> Result<&Tensor, AdError> {
        self.entries
            .get(name)
            .ok_or_else(|| AdError::UnknownParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor, AdError> {
        self.entries
            .get_mut(name)
            .ok_or_else(|| AdError::UnknownParam(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.entries.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor)> {
        self.entries.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_scalars(&self) -> usize {
        self.entries.values().map(Tensor::len).sum()
    }

    /// He-style initialization for a linear layer `name.w` (in×out) and its
    /// bias `name.b` (1×out, zeros).
    pub fn init_linear(&mut self, name: &str, fan_in: usize, fan_out: usize, rng: &mut impl Rng) {
        let scale = (2.0 / fan_in as f64).sqrt();
        self.insert(format!("{name}.w"), Tensor::randn(fan_in, fan_out, scale, rng));
        self.insert(format!("{name}.b"), Tensor::zeros(1, fan_out));
    }
}

/// Leaf node ids for every parameter bound into a graph.
pub struct Bound {
    ids: BTreeMap<String, NodeId>,
}

impl Bound {
    pub fn empty() -> Self {
        Bound {
            ids: BTreeMap::new(),
        }
    }

    pub fn id(&self, name: &str) -> Result<NodeId, AdError> {
        self.ids
            .get(name)
            .copied()
            .ok_or_else(|| AdError::UnknownParam(name.to_string()))
    }

    /// Bind an extra name to an existing node (e.g. a probe input).
    pub fn insert(&mut self, name: impl Into<String>, id: NodeId) {
        self.ids.insert(name.into(), id);
    }

    /// Collect accumulated gradients after a backward pass. Parameters that
    /// did not participate in the loss are omitted.
    pub fn grads(&self, g: &Graph) -> BTreeMap<String, Tensor> {
        self.ids
            .iter()
            .filter_map(|(name, &id)| g.grad(id).map(|t| (name.clone(), t.clone())))
            .collect()
    }
}

/// Bind every parameter as a differentiable leaf.
pub fn bind(g: &mut Graph, params: &Params) -> Bound {
    let ids = params
        .iter()
        .map(|(name, t)| (name.clone(), g.leaf(t.clone())))
        .collect();
    Bound { ids }
}
