use alloc::vec::Vec;

use crate::{Error, Result};

/// One labelled example. Class labels are stored as their index.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub x: Vec<f64>,
    pub y: f64,
}

impl Record {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Record { x, y }
    }

    pub fn scalar(x: f64, y: f64) -> Self {
        Record { x: alloc::vec![x], y }
    }
}

/// An ordered sample. Record order is significant: every index-based
/// tie-break and the sleeping-experts shuffle depend on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<Record>,
    dim: usize,
}

impl Dataset {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        let dim = records.first().ok_or(Error::EmptyDataset)?.x.len();
        for (index, r) in records.iter().enumerate() {
            if r.x.len() != dim {
                return Err(Error::DimensionMismatch {
                    index,
                    expected: dim,
                    found: r.x.len(),
                });
            }
        }
        Ok(Dataset { records, dim })
    }

    /// Builds a one-feature dataset from parallel slices.
    pub fn from_xy(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::invalid("x and y lengths differ"));
        }
        Self::new(
            xs.iter()
                .zip(ys)
                .map(|(&x, &y)| Record::scalar(x, y))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn get(&self, i: usize) -> &Record {
        &self.records[i]
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Record> {
        self.records.iter()
    }

    /// Returns a copy with record `index` replaced.
    pub fn with_replaced(&self, index: usize, record: Record) -> Result<Self> {
        if record.x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                index,
                expected: self.dim,
                found: record.x.len(),
            });
        }
        let mut records = self.records.clone();
        records[index] = record;
        Ok(Dataset {
            records,
            dim: self.dim,
        })
    }

    /// Indices at which two equally sized datasets differ.
    pub fn differing_indices(&self, other: &Dataset) -> Option<Vec<usize>> {
        if self.len() != other.len() {
            return None;
        }
        Some(
            self.records
                .iter()
                .zip(&other.records)
                .enumerate()
                .filter(|(_, (a, b))| a != b)
                .map(|(i, _)| i)
                .collect(),
        )
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Record;
    type IntoIter = core::slice::Iter<'a, Record>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_empty_and_ragged() {
        assert!(matches!(Dataset::new(vec![]), Err(Error::EmptyDataset)));
        let ragged = vec![Record::new(vec![0.0], 1.0), Record::new(vec![0.0, 1.0], 1.0)];
        assert!(matches!(
            Dataset::new(ragged),
            Err(Error::DimensionMismatch { index: 1, .. })
        ));
    }

    #[test]
    fn differing_indices() {
        let a = Dataset::from_xy(&[0.0, 1.0, 2.0], &[0.0, 0.0, 0.0]).unwrap();
        let b = a.with_replaced(1, Record::scalar(5.0, 1.0)).unwrap();
        assert_eq!(a.differing_indices(&b), Some(vec![1]));
        assert_eq!(a.differing_indices(&a), Some(vec![]));
    }
}
