//! Binary indexed tree over non-negative node weights, supporting append,
//! point update and inverse-CDF lookup in O(log n).

#[derive(Debug, Clone, Default)]
pub(crate) struct Fenwick {
    // 1-based partial sums; tree[0] unused
    tree: Vec<f64>,
    values: Vec<f64>,
}

#[inline]
fn lowbit(i: usize) -> usize {
    i & i.wrapping_neg()
}

impl Fenwick {
    pub fn from_weights(values: Vec<f64>) -> Self {
        let n = values.len();
        let mut tree = vec![0.0; n + 1];
        tree[1..].copy_from_slice(&values);
        for i in 1..=n {
            let j = i + lowbit(i);
            if j <= n {
                tree[j] += tree[i];
            }
        }
        Fenwick { tree, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    #[cfg(test)]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sum of `values[..end]`.
    pub fn prefix(&self, end: usize) -> f64 {
        let mut i = end;
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i];
            i -= lowbit(i);
        }
        s
    }

    pub fn total(&self) -> f64 {
        self.prefix(self.len())
    }

    pub fn push(&mut self, w: f64) {
        if self.tree.is_empty() {
            self.tree.push(0.0);
        }
        let i = self.values.len() + 1;
        // node i covers (i - lowbit(i), i]
        let covered = self.prefix(i - 1) - self.prefix(i - lowbit(i));
        self.tree.push(covered + w);
        self.values.push(w);
    }

    pub fn set(&mut self, idx: usize, w: f64) {
        let delta = w - self.values[idx];
        if delta == 0.0 {
            return;
        }
        self.values[idx] = w;
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += lowbit(i);
        }
    }

    /// Smallest index whose inclusive prefix sum exceeds `u`, for
    /// `0 <= u < total()`. Rounding can land on a zero-weight slot; callers
    /// reject those.
    pub fn find(&self, mut u: f64) -> usize {
        let n = self.len();
        let mut pos = 0;
        let mut step = if n == 0 { 0 } else { 1usize << (usize::BITS - 1 - n.leading_zeros()) };
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= u {
                u -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos.min(n.saturating_sub(1))
    }

    /// Recomputes the partial sums from the stored values.
    pub fn rebuild(&mut self) {
        *self = Fenwick::from_weights(std::mem::take(&mut self.values));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn find_walks_the_cdf() {
        let f = Fenwick::from_weights(vec![1.0, 0.0, 2.0, 3.0]);
        assert_eq!(f.total(), 6.0);
        assert_eq!(f.find(0.0), 0);
        assert_eq!(f.find(0.999), 0);
        assert_eq!(f.find(1.0), 2);
        assert_eq!(f.find(2.5), 2);
        assert_eq!(f.find(3.0), 3);
        assert_eq!(f.find(5.99), 3);
    }

    proptest! {
        #[test]
        fn push_and_set_match_rebuild(ws in prop::collection::vec(0u8..10, 1..70), updates in prop::collection::vec((0usize..70, 0u8..10), 0..30)) {
            let mut f = Fenwick::default();
            for &w in &ws {
                f.push(w as f64);
            }
            for &(i, w) in &updates {
                if i < ws.len() {
                    f.set(i, w as f64);
                }
            }
            let fresh = Fenwick::from_weights(f.values().to_vec());
            for end in 0..=f.len() {
                prop_assert_eq!(f.prefix(end), fresh.prefix(end));
                let brute: f64 = f.values()[..end].iter().sum();
                prop_assert_eq!(f.prefix(end), brute);
            }
            let total = f.total();
            if total > 0.0 {
                for k in 0..(total as usize) {
                    let u = k as f64 + 0.5;
                    let i = f.find(u);
                    prop_assert!(f.prefix(i) <= u && u < f.prefix(i + 1));
                }
            }
        }
    }
}
