use crate::error::{AmgError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeLabel {
    Fine,
    Coarse,
}

/// Fine/coarse split of the unknowns of one level.
///
/// `coarse_index` maps each coarse node onto `[0, n_coarse)` in ascending
/// node order; fine nodes map to `None`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CfPartition {
    labels: Vec<NodeLabel>,
    coarse_index: Vec<Option<u32>>,
    n_coarse: usize,
}

impl CfPartition {
    pub fn from_labels(labels: Vec<NodeLabel>) -> Self {
        let mut coarse_index = Vec::with_capacity(labels.len());
        let mut n_coarse = 0usize;
        for l in &labels {
            if *l == NodeLabel::Coarse {
                coarse_index.push(Some(n_coarse as u32));
                n_coarse += 1;
            } else {
                coarse_index.push(None);
            }
        }
        CfPartition {
            labels,
            coarse_index,
            n_coarse,
        }
    }

    /// Builds a partition from the list of coarse node ids.
    pub fn from_coarse_nodes(n: usize, coarse: &[usize]) -> Result<Self> {
        let mut labels = vec![NodeLabel::Fine; n];
        for &c in coarse {
            if c >= n {
                return Err(AmgError::InvalidParameter(format!(
                    "coarse node {c} outside 0..{n}"
                )));
            }
            labels[c] = NodeLabel::Coarse;
        }
        Ok(Self::from_labels(labels))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn label(&self, i: usize) -> NodeLabel {
        self.labels[i]
    }

    #[inline]
    pub fn is_coarse(&self, i: usize) -> bool {
        self.labels[i] == NodeLabel::Coarse
    }

    #[inline]
    pub fn coarse_index(&self, i: usize) -> Option<usize> {
        self.coarse_index[i].map(|c| c as usize)
    }

    #[inline]
    pub fn n_coarse(&self) -> usize {
        self.n_coarse
    }

    pub fn n_fine(&self) -> usize {
        self.labels.len() - self.n_coarse
    }

    pub fn labels(&self) -> &[NodeLabel] {
        &self.labels
    }

    /// Coarse node ids in coarse-index order.
    pub fn coarse_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_coarse(i)).collect()
    }
}
