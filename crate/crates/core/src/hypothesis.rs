use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

pub type PredictFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum HypothesisKind {
    Constant(f64),
    Custom(Arc<PredictFn>),
}

impl HypothesisKind {
    pub fn custom(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        HypothesisKind::Custom(Arc::new(f))
    }
}

impl fmt::Debug for HypothesisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HypothesisKind::Constant(c) => write!(f, "Constant({c})"),
            HypothesisKind::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Hypothesis {
    pub id: usize,
    pub kind: HypothesisKind,
}

impl Hypothesis {
    #[inline]
    pub fn predict(&self, x: &[f64]) -> f64 {
        match &self.kind {
            HypothesisKind::Constant(c) => *c,
            HypothesisKind::Custom(f) => f(x),
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self.kind {
            HypothesisKind::Constant(c) => Some(c),
            HypothesisKind::Custom(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HypothesisClass {
    hypotheses: Vec<Hypothesis>,
}

impl HypothesisClass {
    pub fn new(kinds: Vec<HypothesisKind>) -> Result<Self> {
        if kinds.is_empty() {
            return Err(Error::invalid("hypothesis class must be non-empty"));
        }
        Ok(HypothesisClass {
            hypotheses: kinds
                .into_iter()
                .enumerate()
                .map(|(id, kind)| Hypothesis { id, kind })
                .collect(),
        })
    }

    pub fn constants(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&c| HypothesisKind::Constant(c)).collect())
    }

    /// Constants `lo, lo + step, ...` up to and including `hi` (within
    /// rounding).
    pub fn constant_grid(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(hi >= lo) {
            return Err(Error::invalid("constant grid needs step > 0 and hi >= lo"));
        }
        let count = crate::math::round((hi - lo) / step) as usize;
        let count = if lo + count as f64 * step < hi - 1e-9 * step {
            count + 1
        } else {
            count
        };
        Self::constants(
            &(0..=count)
                .map(|k| lo + k as f64 * step)
                .collect::<Vec<_>>(),
        )
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn get(&self, id: usize) -> &Hypothesis {
        &self.hypotheses[id]
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Hypothesis> {
        self.hypotheses.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_grid_includes_both_ends() {
        let h = HypothesisClass::constant_grid(0.0, 1.0, 0.1).unwrap();
        assert_eq!(h.len(), 11);
        assert!((h.get(10).predict(&[]) - 1.0).abs() < 1e-12);
        let h = HypothesisClass::constant_grid(0.0, 1.05, 0.1).unwrap();
        assert_eq!(h.len(), 12);
        assert!(HypothesisClass::constant_grid(0.0, 1.0, 0.0).is_err());
    }
}
