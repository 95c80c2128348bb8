//! Expected runtime of RLS with a fitness-dependent number of flipped bits on
//! LeadingOnes, from the uniform random initial bitstring.
//!
//! The fitness-level chain uses that, at level `i`, the bits behind the first
//! zero are uniform: an offspring improves iff it flips the first zero and none
//! of the `i` leading ones, and then lands `j` levels higher with probability
//! `2^-(j+1)` (the whole remaining suffix being ones has probability `2^-m`).

use dac_core::{DacError, Result};
use nalgebra::{DMatrix, DVector};

pub const MAX_CHAIN_N: usize = 20;
pub const MAX_FULL_STATE_N: usize = 12;

fn choose(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

fn check_policy(n: usize, policy: &[usize]) -> Result<()> {
    if policy.len() != n {
        return Err(DacError::Argument(format!("policy needs one k per level 0..{n}")));
    }
    if let Some(&k) = policy.iter().find(|&&k| k == 0 || k > n) {
        return Err(DacError::Argument(format!("k = {k} outside 1..={n}")));
    }
    Ok(())
}

/// Exact expected number of steps until LO = n; `policy[i]` is k at level i.
pub fn leading_ones_chain_cost(n: usize, policy: &[usize]) -> Result<f64> {
    if n == 0 || n > MAX_CHAIN_N {
        return Err(DacError::Argument(format!("chain oracle supports 1 <= n <= {MAX_CHAIN_N}")));
    }
    check_policy(n, policy)?;
    // e[i] = expected remaining steps from level i
    let mut e = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let k = policy[i];
        let p = choose(n - i - 1, k - 1) / choose(n, k);
        if p == 0.0 {
            e[i] = f64::INFINITY;
            continue;
        }
        let m = n - i - 1;
        let mut after = 0.0;
        for j in 0..=m {
            let q = if j < m { 0.5f64.powi(j as i32 + 1) } else { 0.5f64.powi(m as i32) };
            after += q * e[i + 1 + j];
        }
        e[i] = 1.0 / p + after;
    }
    let mut total = 0.0;
    for (j, ej) in e.iter().enumerate() {
        let q = if j < n { 0.5f64.powi(j as i32 + 1) } else { 0.5f64.powi(n as i32) };
        if q > 0.0 && *ej > 0.0 {
            total += q * ej;
        }
    }
    Ok(total)
}

fn lo(x: u32, n: usize) -> usize {
    ((!x).trailing_zeros() as usize).min(n)
}

/// Same quantity from the full chain over all `2^n` bitstrings: every k-subset
/// of positions is enumerated and the hitting-time system `(I − P) E = 1` is
/// solved by LU decomposition.
pub fn leading_ones_full_state_cost(n: usize, policy: &[usize]) -> Result<f64> {
    if n == 0 || n > MAX_FULL_STATE_N {
        return Err(DacError::Argument(format!(
            "full-state oracle supports 1 <= n <= {MAX_FULL_STATE_N}"
        )));
    }
    check_policy(n, policy)?;
    let states = 1usize << n;
    let optimum = states - 1;
    // unknowns: every non-optimal bitstring, indexed by its value
    let dim = states - 1;
    let mut a = DMatrix::<f64>::identity(dim, dim);
    let b = DVector::<f64>::from_element(dim, 1.0);
    for x in 0..optimum {
        let level = lo(x as u32, n);
        let k = policy[level];
        let masks = subsets(n, k);
        let p = 1.0 / masks.len() as f64;
        for mask in masks {
            let y = x ^ mask;
            let target = if lo(y as u32, n) >= level { y } else { x };
            if target != optimum {
                a[(x, target)] -= p;
            }
        }
    }
    let solution = a
        .lu()
        .solve(&b)
        .ok_or_else(|| DacError::Unsupported("hitting-time system is singular (a level cannot be left)".into()))?;
    Ok(solution.iter().sum::<f64>() / states as f64)
}

/// All n-bit masks with exactly k bits set, in increasing order.
fn subsets(n: usize, k: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut mask = (1usize << k) - 1;
    let limit = 1usize << n;
    while mask < limit {
        out.push(mask);
        // Gosper's hack: next integer with the same popcount
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bit() {
        assert_eq!(leading_ones_chain_cost(1, &[1]).unwrap(), 0.5);
        assert!((leading_ones_full_state_cost(1, &[1]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn subset_enumeration() {
        assert_eq!(subsets(4, 2).len(), 6);
        assert_eq!(subsets(5, 5), vec![31]);
        assert!(subsets(6, 3).iter().all(|m| m.count_ones() == 3));
    }

    #[test]
    fn impossible_level_is_infinite() {
        // at level 1 of n = 2, flipping both bits always destroys the leading one
        assert_eq!(leading_ones_chain_cost(2, &[1, 2]).unwrap(), f64::INFINITY);
        assert!(leading_ones_full_state_cost(2, &[1, 2]).is_err());
    }

    #[test]
    fn chain_matches_full_state_for_k1() {
        for n in 1..=8 {
            let policy = vec![1; n];
            let chain = leading_ones_chain_cost(n, &policy).unwrap();
            let full = leading_ones_full_state_cost(n, &policy).unwrap();
            assert!((chain - full).abs() <= 1e-9 * chain, "n={n}: {chain} vs {full}");
        }
    }
}
