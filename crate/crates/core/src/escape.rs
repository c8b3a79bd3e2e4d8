//! Escape radius for networks whose self-weights dominate their external inputs.
//!
//! When `|g_jj| > G_j = sum_{l != j} |g_jl|` for every node, pick `1 < delta < min_j |g_jj| / G_j`
//! and set `A_j = |g_jj| - delta * G_j`. Any `M` with `M^2 A_j^2 - delta^2 M - delta^2 |c_j| >= 0`
//! for all `j` makes `M / delta` an escape radius in the maximum norm.

use crate::error::{Error, Result};
use crate::netcore::{MultiState, Network, NodeParams};

#[derive(Clone, Debug, PartialEq)]
pub struct EscapeBound {
    pub delta: f64,
    /// `A_j = |g_jj| - delta * G_j`, all positive.
    pub per_node_a: Vec<f64>,
    /// Larger root of `M^2 A_j^2 - delta^2 M - delta^2 |c_j| = 0`.
    pub per_node_m: Vec<f64>,
    pub m: f64,
    /// `m / delta`.
    pub radius: f64,
    /// `G_j`, total external input magnitude onto node `j`.
    pub external_input: Vec<f64>,
}

fn external_input(net: &Network, j: usize) -> f64 {
    net.inputs(j).iter().filter(|&&(k, _)| k != j).map(|&(_, w)| w.abs()).sum()
}

fn self_weight(net: &Network, j: usize) -> f64 {
    net.coupling(j, j).abs()
}

/// Strict diagonal dominance of the effective coupling matrix, row by row.
pub fn check_dominance(net: &Network) -> bool {
    (0..net.n()).all(|j| self_weight(net, j) > external_input(net, j))
}

/// Midpoint of the admissible `delta` range, or 2 when no node has external input.
pub fn default_delta(net: &Network) -> f64 {
    match delta_upper_limit(net) {
        Some(limit) => (1.0 + limit) / 2.0,
        None => 2.0,
    }
}

// min_j |g_jj| / G_j over nodes with G_j > 0
fn delta_upper_limit(net: &Network) -> Option<f64> {
    (0..net.n())
        .filter_map(|j| {
            let g = external_input(net, j);
            (g > 0.0).then(|| self_weight(net, j) / g)
        })
        .reduce(f64::min)
}

/// Larger root of `m^2 a^2 - delta^2 m - delta^2 |c| = 0`.
pub fn threshold_root(a: f64, delta: f64, c_abs: f64) -> f64 {
    let d2 = delta * delta;
    (d2 + (d2 * d2 + 4.0 * a * a * d2 * c_abs).sqrt()) / (2.0 * a * a)
}

pub fn escape_bound(net: &Network, delta: f64) -> Result<EscapeBound> {
    if !check_dominance(net) {
        return Err(Error::Precondition("network is not diagonally dominant (|g_jj| > sum of other |g_jl| fails)".into()));
    }
    if !(delta > 1.0) {
        return Err(Error::Precondition(format!("delta = {delta} must exceed 1")));
    }
    if let Some(limit) = delta_upper_limit(net) {
        if delta >= limit {
            return Err(Error::Precondition(format!("delta = {delta} must be below min |g_jj|/G_j = {limit}")));
        }
    }
    let n = net.n();
    let external: Vec<f64> = (0..n).map(|j| external_input(net, j)).collect();
    let per_node_a: Vec<f64> = (0..n).map(|j| self_weight(net, j) - delta * external[j]).collect();
    let per_node_m: Vec<f64> = per_node_a.iter().zip(net.params()).map(|(&a, c)| threshold_root(a, delta, c.norm())).collect();
    let m = per_node_m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(EscapeBound { delta, per_node_a, per_node_m, m, radius: m / delta, external_input: external })
}

/// Empirical divergence witness: does the orbit of `s` exceed `10 * bound.m` within `horizon` steps?
pub fn verify_escape(net: &Network, bound: &EscapeBound, s: &MultiState, horizon: usize) -> bool {
    if s.len() != net.n() {
        return false;
    }
    let target = 10.0 * bound.m;
    let target2 = target * target;
    let mut cur = s.clone();
    let mut next = MultiState::zeros(net.n());
    for _ in 0..horizon {
        net.advance(NodeParams::PerNode(net.params()), &cur, &mut next);
        if next.exceeds(target2) {
            return true;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::Complex;
    use approx::assert_relative_eq;

    fn scalar(g: f64, c: f64) -> Network {
        Network::new(vec![vec![1]], vec![vec![g]], vec![Complex::new(c, 0.0)]).unwrap()
    }

    // independent oracle: bisection on the defining inequality
    fn bisect_threshold(a: f64, delta: f64, c_abs: f64) -> f64 {
        let q = |m: f64| m * m * a * a - delta * delta * m - delta * delta * c_abs;
        let (mut lo, mut hi) = (delta * delta / (2.0 * a * a), 1.0);
        while q(hi) < 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q(mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    #[test]
    fn dominance_examples() {
        assert!(check_dominance(&scalar(1.0, 0.0)));
        let sd = crate::families::FamilySpec::SelfDrive { a: -1.0, b: -1.0 }.build().unwrap();
        assert!(!check_dominance(&sd));
        let pair =
            Network::new(vec![vec![1, 1], vec![1, 1]], vec![vec![1.0, 0.3], vec![0.3, 1.0]], vec![Complex::new(0.0, 0.0); 2]).unwrap();
        assert!(check_dominance(&pair));
    }

    #[test]
    fn scalar_bounds() {
        let b = escape_bound(&scalar(1.0, 0.0), 2.0).unwrap();
        assert_eq!(b.per_node_a, vec![1.0]);
        assert_eq!(b.m, 4.0);
        assert_eq!(b.radius, 2.0);

        let b = escape_bound(&scalar(1.0, -2.0), 2.0).unwrap();
        assert_relative_eq!(b.m, bisect_threshold(1.0, 2.0, 2.0), max_relative = 1e-12);
        assert_relative_eq!(b.m, (4.0 + 48f64.sqrt()) / 2.0, max_relative = 1e-15);
        assert_relative_eq!(b.radius, 1.0 + 3f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn preconditions() {
        let sd = crate::families::FamilySpec::SelfDrive { a: -1.0, b: -1.0 }.build().unwrap();
        assert!(matches!(escape_bound(&sd, 1.5), Err(Error::Precondition(_))));
        let pair =
            Network::new(vec![vec![1, 1], vec![1, 1]], vec![vec![1.0, 0.5], vec![0.5, 1.0]], vec![Complex::new(0.0, 0.0); 2]).unwrap();
        assert!(escape_bound(&pair, 1.5).is_ok());
        assert!(matches!(escape_bound(&pair, 2.0), Err(Error::Precondition(_))));
        assert!(matches!(escape_bound(&pair, 1.0), Err(Error::Precondition(_))));
        assert_eq!(default_delta(&pair), 1.5);
        assert_eq!(default_delta(&scalar(1.0, 0.0)), 2.0);
    }

    #[test]
    fn scalar_states_outside_radius_diverge() {
        let net = scalar(1.0, 0.0);
        let b = escape_bound(&net, 2.0).unwrap();
        assert!(verify_escape(&net, &b, &MultiState::from_values(vec![Complex::new(3.0, 0.0)]), 100));

        let net = scalar(1.0, -2.0);
        let b = escape_bound(&net, 2.0).unwrap();
        assert!(verify_escape(&net, &b, &MultiState::from_values(vec![Complex::new(2.8, 0.0)]), 100));
    }

    #[test]
    fn threshold_is_monotone() {
        for &(a, c1, c2) in &[(0.5, 0.1, 0.3), (1.0, 0.0, 2.0), (2.0, 1.0, 1.5)] {
            assert!(threshold_root(a, 1.3, c1) <= threshold_root(a, 1.3, c2));
        }
        for &(a1, a2, c) in &[(0.2, 0.4, 1.0), (1.0, 3.0, 0.0), (0.7, 0.71, 2.0)] {
            assert!(threshold_root(a1, 1.3, c) >= threshold_root(a2, 1.3, c));
        }
    }
}
