//! Fixed pairwise summation tree over the constraint list.
//!
//! Node `(level, index)` covers rows `[index << level, (index + 1) << level)`
//! clipped to `[0, m)`. A node's value is the sum of its two children, or the
//! single child when the right child lies past `m`. Blocks with no violated
//! row are carried as an exact zero and skipped when combining.
//!
//! Any contiguous row range decomposes into canonical nodes whose values are
//! computed exactly as in the full tree, so partial sums computed by
//! different workers assemble into a root that is bit-identical to the
//! sequential sum whatever the partition.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Sum of the positive slices over one block, with the violated count.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Partial {
    /// `None` when no row in the block is violated.
    pub y: Option<Vec<f64>>,
    pub h: usize,
}

impl Partial {
    pub fn combine(self, right: Partial) -> Partial {
        match (self.y, right.y) {
            (None, y) | (y, None) => Partial { y, h: self.h + right.h },
            (Some(mut l), Some(r)) => {
                for (a, b) in l.iter_mut().zip(&r) {
                    *a += b;
                }
                Partial {
                    y: Some(l),
                    h: self.h + right.h,
                }
            }
        }
    }

    pub fn into_vec(self, n: usize) -> Vec<f64> {
        self.y.unwrap_or_else(|| vec![0.0; n])
    }
}

/// Identifies one node of the tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId {
    pub level: u32,
    pub index: usize,
}

impl NodeId {
    fn range(self, m: usize) -> (usize, usize) {
        let lo = self.index << self.level;
        let hi = ((self.index + 1) << self.level).min(m);
        (lo, hi)
    }

    fn children(self) -> (NodeId, NodeId) {
        let level = self.level - 1;
        (
            NodeId { level, index: 2 * self.index },
            NodeId { level, index: 2 * self.index + 1 },
        )
    }
}

pub fn root(m: usize) -> NodeId {
    NodeId {
        level: m.next_power_of_two().trailing_zeros(),
        index: 0,
    }
}

/// Evaluates `node` by recursion down to the leaves.
///
/// `leaf(i, out)` writes the slice of row `i` into `out` (length `n`) and
/// returns whether row `i` is violated.
pub fn node_sum<F>(node: NodeId, m: usize, n: usize, leaf: &mut F) -> Partial
where
    F: FnMut(usize, &mut [f64]) -> bool,
{
    let mut scratch = vec![0.0; n];
    node_sum_with(node, m, leaf, &mut scratch)
}

fn node_sum_with<F>(node: NodeId, m: usize, leaf: &mut F, scratch: &mut [f64]) -> Partial
where
    F: FnMut(usize, &mut [f64]) -> bool,
{
    if node.level == 0 {
        return if leaf(node.index, scratch) {
            Partial {
                y: Some(scratch.to_vec()),
                h: 1,
            }
        } else {
            Partial::default()
        };
    }
    let (left, right) = node.children();
    let l = node_sum_with(left, m, leaf, scratch);
    if right.range(m).0 >= m {
        return l;
    }
    let r = node_sum_with(right, m, leaf, scratch);
    l.combine(r)
}

/// Maximal tree nodes whose clipped ranges tile `[start, end)`, in ascending
/// row order.
pub fn cover(m: usize, start: usize, end: usize) -> Vec<NodeId> {
    let mut out = Vec::new();
    if start < end && end <= m {
        cover_rec(root(m), m, start, end, &mut out);
    }
    out
}

fn cover_rec(node: NodeId, m: usize, start: usize, end: usize, out: &mut Vec<NodeId>) {
    let (lo, hi) = node.range(m);
    if hi <= start || lo >= end || lo >= m {
        return;
    }
    if start <= lo && hi <= end {
        out.push(node);
        return;
    }
    let (left, right) = node.children();
    cover_rec(left, m, start, end, out);
    cover_rec(right, m, start, end, out);
}

/// Rebuilds the root from canonical node values supplied by the workers.
pub fn assemble(m: usize, mut nodes: BTreeMap<NodeId, Partial>) -> Result<Partial> {
    let total = assemble_rec(root(m), m, &mut nodes)?;
    if !nodes.is_empty() {
        return Err(Error::Engine(format!(
            "{} reduction blocks left over after assembly",
            nodes.len()
        )));
    }
    Ok(total)
}

fn assemble_rec(node: NodeId, m: usize, nodes: &mut BTreeMap<NodeId, Partial>) -> Result<Partial> {
    if let Some(p) = nodes.remove(&node) {
        return Ok(p);
    }
    if node.level == 0 {
        return Err(Error::Engine(format!("row {} missing from reduction", node.index)));
    }
    let (left, right) = node.children();
    let l = assemble_rec(left, m, nodes)?;
    if right.range(m).0 >= m {
        return Ok(l);
    }
    let r = assemble_rec(right, m, nodes)?;
    Ok(l.combine(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn leaf_values(values: &[f64]) -> impl FnMut(usize, &mut [f64]) -> bool + '_ {
        move |i, out: &mut [f64]| {
            out[0] = values[i];
            values[i] != 0.0
        }
    }

    #[test]
    fn root_levels() {
        assert_eq!(root(1).level, 0);
        assert_eq!(root(2).level, 1);
        assert_eq!(root(5).level, 3);
        assert_eq!(root(8).level, 3);
    }

    #[test]
    fn cover_tiles_range() {
        let nodes = cover(10, 3, 9);
        let mut rows = Vec::new();
        for node in nodes {
            let (lo, hi) = node.range(10);
            rows.extend(lo..hi);
        }
        assert_eq!(rows, (3..9).collect::<Vec<_>>());
    }

    #[test]
    fn missing_block_is_an_error() {
        let values = [1.0, 2.0, 3.0];
        let mut nodes = BTreeMap::new();
        for node in cover(3, 0, 2) {
            nodes.insert(node, node_sum(node, 3, 1, &mut leaf_values(&values)));
        }
        assert!(assemble(3, nodes).is_err());
    }

    proptest! {
        #[test]
        fn split_sums_are_bit_identical(
            values in prop::collection::vec(prop_oneof![Just(0.0), -1e3f64..1e3], 1..80),
            cuts in prop::collection::vec(0usize..80, 0..6),
        ) {
            let m = values.len();
            let whole = node_sum(root(m), m, 1, &mut leaf_values(&values));
            let mut bounds: Vec<usize> = cuts.into_iter().map(|c| c % m).collect();
            bounds.push(0);
            bounds.push(m);
            bounds.sort_unstable();
            bounds.dedup();
            let mut nodes = BTreeMap::new();
            for w in bounds.windows(2) {
                for node in cover(m, w[0], w[1]) {
                    nodes.insert(node, node_sum(node, m, 1, &mut leaf_values(&values)));
                }
            }
            let assembled = assemble(m, nodes).unwrap();
            prop_assert_eq!(assembled.h, whole.h);
            prop_assert_eq!(
                assembled.into_vec(1)[0].to_bits(),
                whole.into_vec(1)[0].to_bits()
            );
        }
    }
}
