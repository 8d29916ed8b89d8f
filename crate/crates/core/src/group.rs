//! Groups are `{0,1}`-valued indicators over the feature space. A
//! [`GroupFamily`] is an ordered list of them; the order fixes the enumeration
//! order used by every learner.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::data::Dataset;
use crate::{Error, Result};

pub type IndicatorFn = dyn Fn(&[f64]) -> bool + Send + Sync;

#[derive(Clone)]
pub enum Indicator {
    /// The all-ones group.
    All,
    /// Closed interval `[lo, hi]` on one feature.
    Interval { feature: usize, lo: f64, hi: f64 },
    /// Half-open interval `[lo, hi)` on one feature.
    HalfOpen { feature: usize, lo: f64, hi: f64 },
    Custom(Arc<IndicatorFn>),
}

impl Indicator {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Indicator::Interval { feature: 0, lo, hi }
    }

    pub fn half_open(lo: f64, hi: f64) -> Self {
        Indicator::HalfOpen { feature: 0, lo, hi }
    }

    pub fn custom(f: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        Indicator::Custom(Arc::new(f))
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Indicator::All => true,
            Indicator::Interval { feature, lo, hi } => {
                let v = x[*feature];
                *lo <= v && v <= *hi
            }
            Indicator::HalfOpen { feature, lo, hi } => {
                let v = x[*feature];
                *lo <= v && v < *hi
            }
            Indicator::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Indicator::All => f.write_str("All"),
            Indicator::Interval { feature, lo, hi } => {
                write!(f, "Interval(x[{feature}] in [{lo}, {hi}])")
            }
            Indicator::HalfOpen { feature, lo, hi } => {
                write!(f, "Interval(x[{feature}] in [{lo}, {hi}))")
            }
            Indicator::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Group {
    pub id: usize,
    pub indicator: Indicator,
}

impl Group {
    pub fn all(id: usize) -> Self {
        Group {
            id,
            indicator: Indicator::All,
        }
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        self.indicator.contains(x)
    }

    pub fn mask(&self, data: &Dataset) -> Mask {
        Mask::from_fn(data.len(), |i| self.contains(&data.get(i).x))
    }
}

#[derive(Debug, Clone)]
pub struct GroupFamily {
    groups: Vec<Group>,
}

impl GroupFamily {
    pub fn new(indicators: Vec<Indicator>) -> Result<Self> {
        if indicators.is_empty() {
            return Err(Error::invalid("group family must be non-empty"));
        }
        Ok(GroupFamily {
            groups: indicators
                .into_iter()
                .enumerate()
                .map(|(id, indicator)| Group { id, indicator })
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn get(&self, id: usize) -> &Group {
        &self.groups[id]
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Group> {
        self.groups.iter()
    }

    pub fn masks(&self, data: &Dataset) -> Vec<Mask> {
        self.groups.iter().map(|g| g.mask(data)).collect()
    }
}

/// Fixed-length bit vector of group membership over a dataset.
#[derive(Clone, PartialEq, Eq)]
pub struct Mask {
    words: Vec<u64>,
    len: usize,
}

impl Mask {
    pub fn zeros(len: usize) -> Self {
        Mask {
            words: alloc::vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        Self::from_fn(len, |_| true)
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut m = Self::zeros(len);
        for i in 0..len {
            if f(i) {
                m.set(i, true);
            }
        }
        m
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "mask index {i} out of range {}", self.len);
        let bit = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn any(&self) -> bool {
        self.words.iter().any(|&w| w != 0)
    }

    /// Indices of set bits in increasing order.
    pub fn ones_iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            core::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + tz)
            })
        })
    }
}

impl fmt::Debug for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Mask(")?;
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn mask_counts_and_iterates() {
        let m = Mask::from_fn(130, |i| i % 3 == 0 || i == 129);
        let ones: Vec<usize> = m.ones_iter().collect();
        assert_eq!(m.count(), ones.len());
        assert!(ones.iter().all(|&i| m.get(i)));
        assert_eq!(*ones.last().unwrap(), 129);
        assert!(!Mask::zeros(70).any());
        assert_eq!(Mask::ones(70).count(), 70);
    }

    #[test]
    fn cached_mask_agrees_with_indicator() {
        let data = Dataset::from_xy(&[0.0, 0.2, 0.5, 0.7, 1.0], &[0.0; 5]).unwrap();
        let fam = GroupFamily::new(vec![
            Indicator::All,
            Indicator::interval(0.2, 0.5),
            Indicator::custom(|x| x[0] > 0.6),
        ])
        .unwrap();
        for g in fam.iter() {
            let m = g.mask(&data);
            for (i, r) in data.iter().enumerate() {
                assert_eq!(m.get(i), g.contains(&r.x));
            }
        }
        assert_eq!(fam.get(1).mask(&data).count(), 2);
        assert_eq!(fam.get(2).id, 2);
    }

    #[test]
    fn empty_family_rejected() {
        assert!(GroupFamily::new(vec![]).is_err());
    }
}
