use std::fmt;

use serde::{Deserialize, Serialize};

/// A multi-index `k = (k_1, ..., k_d)` of non-negative integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(k: Vec<u32>) -> Self {
        Self(k)
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    /// `|k| = k_1 + ... + k_d`
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `k! = k_1! ... k_d!`
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&k| (1..=k).map(f64::from).product::<f64>())
            .product()
    }

    pub fn has_odd_component(&self) -> bool {
        self.0.iter().any(|k| k % 2 == 1)
    }

    /// `x^k = x_1^{k_1} ... x_d^{k_d}`
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&k, &xi)| xi.powi(k as i32))
            .product()
    }

    /// All multi-indices of dimension `dim` with `|k| <= max_order`, ordered by
    /// total order then lexicographically.
    pub fn up_to_order(dim: usize, max_order: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for order in 0..=max_order {
            let mut current = vec![0u32; dim];
            fill(&mut out, &mut current, 0, order);
        }
        out
    }
}

fn fill(out: &mut Vec<MultiIndex>, current: &mut Vec<u32>, pos: usize, remaining: u32) {
    let dim = current.len();
    if pos + 1 == dim {
        current[pos] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for k in (0..=remaining).rev() {
        current[pos] = k;
        fill(out, current, pos + 1, remaining - k);
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(";"))
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_and_factorial() {
        let k = MultiIndex::new(vec![2, 0, 3]);
        assert_eq!(k.order(), 5);
        assert_eq!(k.factorial(), 12.0);
        assert!(k.has_odd_component());
        assert!(!MultiIndex::new(vec![2, 4]).has_odd_component());
    }

    #[test]
    fn enumeration_counts_match_binomials() {
        // number of k in N^d with |k| <= n is C(n + d, d)
        assert_eq!(MultiIndex::up_to_order(1, 4).len(), 5);
        assert_eq!(MultiIndex::up_to_order(2, 3).len(), 10);
        assert_eq!(MultiIndex::up_to_order(3, 2).len(), 10);
        let all = MultiIndex::up_to_order(2, 2);
        assert_eq!(all[0], MultiIndex::zero(2));
        assert!(all.windows(2).all(|w| w[0].order() <= w[1].order()));
    }

    #[test]
    fn monomial() {
        let k = MultiIndex::new(vec![1, 2]);
        assert_eq!(k.monomial(&[3.0, 2.0]), 12.0);
    }
}
