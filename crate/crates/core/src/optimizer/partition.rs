use crate::error::{Error, Result};

/// Disjoint decomposition of the flat decision vector into coordinate blocks.
///
/// Blocks are kept as index lists; the selector matrices of the block update
/// are never materialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    blocks: Vec<Vec<usize>>,
    total_dim: usize,
}

impl BlockPartition {
    pub fn new(blocks: Vec<Vec<usize>>, total_dim: usize) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::dim("a partition needs at least one block"));
        }
        let mut seen = vec![false; total_dim];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::dim(format!("block {b} is empty")));
            }
            for &c in block {
                if c >= total_dim {
                    return Err(Error::dim(format!(
                        "block {b} holds coordinate {c} outside 0..{total_dim}"
                    )));
                }
                if seen[c] {
                    return Err(Error::dim(format!("coordinate {c} appears in two blocks")));
                }
                seen[c] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::dim(format!("coordinate {missing} is not covered")));
        }
        Ok(Self { blocks, total_dim })
    }

    /// One block holding every coordinate.
    pub fn single(total_dim: usize) -> Result<Self> {
        Self::new(vec![(0..total_dim).collect()], total_dim)
    }

    /// Consecutive blocks with the given sizes.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let mut start = 0;
        let blocks = sizes
            .iter()
            .map(|&len| {
                let block = (start..start + len).collect();
                start += len;
                block
            })
            .collect();
        Self::new(blocks, start)
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn block(&self, b: usize) -> &[usize] {
        &self.blocks[b]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }
}
