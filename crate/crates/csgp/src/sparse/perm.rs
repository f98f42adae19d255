//! Row/column permutations.

/// A bijection on {0..n-1} with both directions materialized.
///
/// `new_to_old[k]` is the original index eliminated in position `k`;
/// `old_to_new` is its inverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    new_to_old: Vec<usize>,
    old_to_new: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        let id: Vec<usize> = (0..n).collect();
        Self {
            new_to_old: id.clone(),
            old_to_new: id,
        }
    }

    /// Build from an elimination order (new → old map).
    ///
    /// Panics if `new_to_old` is not a bijection on {0..len-1}.
    pub fn from_order(new_to_old: Vec<usize>) -> Self {
        let n = new_to_old.len();
        let mut old_to_new = vec![usize::MAX; n];
        for (k, &v) in new_to_old.iter().enumerate() {
            assert!(v < n, "index {v} out of range");
            assert_eq!(old_to_new[v], usize::MAX, "index {v} repeated");
            old_to_new[v] = k;
        }
        Self {
            new_to_old,
            old_to_new,
        }
    }

    pub fn len(&self) -> usize {
        self.new_to_old.len()
    }

    pub fn is_empty(&self) -> bool {
        self.new_to_old.is_empty()
    }

    #[inline]
    pub fn new_to_old(&self, k: usize) -> usize {
        self.new_to_old[k]
    }

    #[inline]
    pub fn old_to_new(&self, i: usize) -> usize {
        self.old_to_new[i]
    }

    pub fn order(&self) -> &[usize] {
        &self.new_to_old
    }
}
