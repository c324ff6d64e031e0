//! Greedy ordering of matrix multiplication chains.
//!
//! At every step all adjacent pairs are examined and the pair whose product has
//! the fewest elements is multiplied first; ties go to the leftmost pair. This is
//! a heuristic, not the optimal dynamic-programming order.

use std::fmt;

/// The sequence of merges for a chain: `merges[s]` is the index of the left
/// operand of the pair multiplied at step `s`, in the chain as it stands then.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainOrder {
    pub merges: Vec<usize>,
}

/// Order the chain of `(rows, cols)` factors. Adjacent factors must conform.
pub fn greedy_chain_order(dims: &[(usize, usize)]) -> ChainOrder {
    debug_assert!(dims.windows(2).all(|w| w[0].1 == w[1].0));
    let mut current = dims.to_vec();
    let mut merges = Vec::with_capacity(dims.len().saturating_sub(1));
    while current.len() > 1 {
        let best = (0..current.len() - 1)
            .min_by_key(|&i| current[i].0 * current[i + 1].1)
            .expect("at least one pair");
        current[best] = (current[best].0, current[best + 1].1);
        current.remove(best + 1);
        merges.push(best);
    }
    ChainOrder { merges }
}

impl ChainOrder {
    /// Plain left-to-right evaluation of a chain of `len` factors.
    pub fn left_to_right(len: usize) -> Self {
        ChainOrder {
            merges: vec![0; len.saturating_sub(1)],
        }
    }

    /// Multiply-add count of executing this order on `dims`.
    pub fn cost(&self, dims: &[(usize, usize)]) -> u64 {
        let mut current = dims.to_vec();
        let mut total = 0u64;
        for &i in &self.merges {
            let (p, q, r) = (current[i].0, current[i].1, current[i + 1].1);
            total += (p * q * r) as u64;
            current[i] = (p, r);
            current.remove(i + 1);
        }
        total
    }

    /// Parenthesised form over factor names `A`, `B`, ...
    pub fn parenthesize(&self, len: usize) -> String {
        let mut parts: Vec<String> = (0..len)
            .map(|i| char::from(b'A' + (i % 26) as u8).to_string())
            .collect();
        for &i in &self.merges {
            let right = parts.remove(i + 1);
            parts[i] = format!("({}{})", parts[i], right);
        }
        parts.concat()
    }
}

impl fmt::Display for ChainOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let merges: Vec<String> = self.merges.iter().map(|m| m.to_string()).collect();
        write!(f, "[{}]", merges.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decreasing(m: usize) -> Vec<(usize, usize)> {
        vec![(m, m), (m, m / 2), (m / 2, m / 3), (m / 3, m / 4)]
    }

    #[test]
    fn decreasing_family_goes_right_to_left() {
        for m in [12, 24, 48, 100, 500] {
            let order = greedy_chain_order(&decreasing(m));
            assert_eq!(order.merges, vec![2, 1, 0], "m={m}");
            assert_eq!(order.parenthesize(4), "(A(B(CD)))");
        }
    }

    #[test]
    fn two_factors() {
        let order = greedy_chain_order(&[(3, 4), (4, 5)]);
        assert_eq!(order.merges, vec![0]);
        assert_eq!(order.cost(&[(3, 4), (4, 5)]), 60);
    }

    #[test]
    fn tie_takes_leftmost() {
        // both candidate products have 200 elements
        let dims = [(2, 100), (100, 100), (100, 2)];
        let order = greedy_chain_order(&dims);
        assert_eq!(order.merges, vec![0, 0]);
        assert_eq!(order.parenthesize(3), "((AB)C)");
    }

    #[test]
    fn costs() {
        let dims = decreasing(12);
        // left-to-right: 12·12·6 + 12·6·4 + 12·4·3
        assert_eq!(ChainOrder::left_to_right(4).cost(&dims), 864 + 288 + 144);
        // right-to-left: 6·4·3 + 12·6·3 + 12·12·3
        assert_eq!(greedy_chain_order(&dims).cost(&dims), 72 + 216 + 432);
    }
}
