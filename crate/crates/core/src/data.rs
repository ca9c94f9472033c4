//! In-memory column-major data blocks.

use std::ops::Range;

use crate::error::{Error, Result};

/// One block of observations: a response column, a conditional column and
/// `p` feature columns, all of the same length. Every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DataBlock {
    response: Vec<f64>,
    conditional: Vec<f64>,
    features: Vec<Vec<f64>>,
}

impl DataBlock {
    pub fn new(response: Vec<f64>, conditional: Vec<f64>, features: Vec<Vec<f64>>) -> Result<Self> {
        let n = response.len();
        if conditional.len() != n || features.iter().any(|c| c.len() != n) {
            return Err(Error::ShapeMismatch(
                "response, conditional and feature columns must share a length".into(),
            ));
        }
        let finite = |c: &[f64]| c.iter().all(|v| v.is_finite());
        if !finite(&response) || !finite(&conditional) || !features.iter().all(|c| finite(c)) {
            return Err(Error::NonFiniteInput);
        }
        Ok(DataBlock {
            response,
            conditional,
            features,
        })
    }

    pub fn nrows(&self) -> usize {
        self.response.len()
    }

    pub fn nfeatures(&self) -> usize {
        self.features.len()
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn conditional(&self) -> &[f64] {
        &self.conditional
    }

    pub fn feature(&self, j: usize) -> &[f64] {
        &self.features[j]
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    /// Contiguous row range as a new block.
    pub fn rows(&self, range: Range<usize>) -> DataBlock {
        DataBlock {
            response: self.response[range.clone()].to_vec(),
            conditional: self.conditional[range.clone()].to_vec(),
            features: self.features.iter().map(|c| c[range.clone()].to_vec()).collect(),
        }
    }

    /// Rows picked by index, in the given order.
    pub fn take_rows(&self, idx: &[usize]) -> DataBlock {
        let pick = |c: &[f64]| idx.iter().map(|&i| c[i]).collect::<Vec<_>>();
        DataBlock {
            response: pick(&self.response),
            conditional: pick(&self.conditional),
            features: self.features.iter().map(|c| pick(c)).collect(),
        }
    }

    /// Same rows, restricted to the given feature columns.
    pub fn select_features(&self, cols: &[usize]) -> DataBlock {
        DataBlock {
            response: self.response.clone(),
            conditional: self.conditional.clone(),
            features: cols.iter().map(|&j| self.features[j].clone()).collect(),
        }
    }

    /// Same response and conditional columns with replacement features.
    pub fn with_features(&self, features: Vec<Vec<f64>>) -> Result<DataBlock> {
        DataBlock::new(self.response.clone(), self.conditional.clone(), features)
    }
}

/// A full dataset with named features.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub block: DataBlock,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(block: DataBlock, feature_names: Vec<String>) -> Result<Self> {
        if feature_names.len() != block.nfeatures() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                block.nfeatures()
            )));
        }
        Ok(Dataset {
            block,
            feature_names,
        })
    }

    /// Names `X1..Xp`.
    pub fn with_default_names(block: DataBlock) -> Self {
        let feature_names = (1..=block.nfeatures()).map(|j| format!("X{j}")).collect();
        Dataset {
            block,
            feature_names,
        }
    }
}
