use indexmap::IndexMap;

use super::Tensor2;
use crate::error::{Error, Result};

/// A trainable tensor and its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub value: Tensor2,
    pub grad: Tensor2,
}

/// Named trainable parameters, kept in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    entries: IndexMap<String, Param>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor2) -> Result<()> {
        let name = name.into();
        if self.entries.contains_key(&name) {
            return Err(Error::invalid(format!("duplicate parameter name {name:?}")));
        }
        let grad = Tensor2::zeros(value.rows(), value.cols());
        self.entries.insert(name, Param { value, grad });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Result<&Param> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::invalid(format!("unknown parameter {name:?}")))
    }

    /// Parameter value by name.
    ///
    /// Panics if absent; model code only asks for names it registered itself.
    pub fn value(&self, name: &str) -> &Tensor2 {
        match self.entries.get(name) {
            Some(p) => &p.value,
            None => panic!("parameter {name:?} is not registered"),
        }
    }

    pub fn value_mut(&mut self, name: &str) -> &mut Tensor2 {
        match self.entries.get_mut(name) {
            Some(p) => &mut p.value,
            None => panic!("parameter {name:?} is not registered"),
        }
    }

    pub fn grad(&self, name: &str) -> &Tensor2 {
        match self.entries.get(name) {
            Some(p) => &p.grad,
            None => panic!("parameter {name:?} is not registered"),
        }
    }

    /// Adds `g` into the gradient slot of `name`.
    pub fn accumulate(&mut self, name: &str, g: &Tensor2) -> Result<()> {
        let p = self
            .entries
            .get_mut(name)
            .ok_or_else(|| Error::invalid(format!("unknown parameter {name:?}")))?;
        p.grad.same_shape(g, "gradient accumulate")?;
        p.grad.add_assign(g);
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        for p in self.entries.values_mut() {
            p.grad.fill(0.0);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Param)> {
        self.entries.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn scalar_count(&self) -> usize {
        self.entries.values().map(|p| p.value.len()).sum()
    }

    /// Moves all of `other`'s entries in under `prefix`.
    pub fn absorb(&mut self, prefix: &str, other: ParamSet) -> Result<()> {
        for (name, p) in other.entries {
            self.insert(format!("{prefix}{name}"), p.value)?;
        }
        Ok(())
    }
}

/// Non-trainable named tensors such as normalization running statistics.
pub type Buffers = IndexMap<String, Tensor2>;
