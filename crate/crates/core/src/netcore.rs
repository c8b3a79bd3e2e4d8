//! Networks of coupled quadratic nodes and their multi-orbits.

use crate::error::{Error, Result};

pub type Complex = num_complex::Complex64;

/// Squared modulus of a node's input sum above which the node is flagged as overflowed.
pub const OVERFLOW_GUARD: f64 = 1e150;

/// A network of `n` quadratic nodes.
///
/// Row `j` of `adjacency` and `weights` describes the inputs received by node `j`;
/// column `k` is the sending node. Only cells with `A_jk = 1` contribute, with
/// effective coupling `w_jk = g_jk * A_jk`.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    n: usize,
    adjacency: Vec<u8>,
    weights: Vec<f64>,
    params: Vec<Complex>,
    // per receiving node: (sender, w_jk) for every nonzero effective coupling
    inputs: Vec<Vec<(usize, f64)>>,
}

impl Network {
    pub fn new(adjacency: Vec<Vec<u8>>, weights: Vec<Vec<f64>>, params: Vec<Complex>) -> Result<Self> {
        let n = adjacency.len();
        if n == 0 {
            return Err(Error::InvalidArgument("network needs at least one node".into()));
        }
        if weights.len() != n {
            return Err(Error::InvalidArgument(format!("weights has {} rows, adjacency has {n}", weights.len())));
        }
        if params.len() != n {
            return Err(Error::InvalidArgument(format!("params has {} entries, expected {n}", params.len())));
        }
        let mut flat_a = Vec::with_capacity(n * n);
        let mut flat_g = Vec::with_capacity(n * n);
        for (j, (arow, grow)) in adjacency.iter().zip(&weights).enumerate() {
            if arow.len() != n {
                return Err(Error::InvalidArgument(format!("adjacency row {j} has length {}", arow.len())));
            }
            if grow.len() != n {
                return Err(Error::InvalidArgument(format!("weights row {j} has length {}", grow.len())));
            }
            for (k, (&a, &g)) in arow.iter().zip(grow).enumerate() {
                if a > 1 {
                    return Err(Error::InvalidArgument(format!("adjacency[{j}][{k}] = {a} is not 0 or 1")));
                }
                if !g.is_finite() {
                    return Err(Error::InvalidArgument(format!("weights[{j}][{k}] is not finite")));
                }
                flat_a.push(a);
                flat_g.push(g);
            }
        }
        if let Some(j) = params.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidArgument(format!("params[{j}] is not finite")));
        }
        Ok(Self::from_flat(n, flat_a, flat_g, params))
    }

    /// Network whose every present edge carries the same weight `g`.
    pub fn uniform(adjacency: Vec<Vec<u8>>, g: f64) -> Result<Self> {
        let n = adjacency.len();
        let weights = vec![vec![g; n]; n];
        Self::new(adjacency, weights, vec![Complex::new(0.0, 0.0); n])
    }

    fn from_flat(n: usize, adjacency: Vec<u8>, weights: Vec<f64>, params: Vec<Complex>) -> Self {
        let inputs = (0..n)
            .map(|j| {
                (0..n)
                    .filter_map(|k| {
                        let w = weights[j * n + k] * f64::from(adjacency[j * n + k]);
                        (w != 0.0).then_some((k, w))
                    })
                    .collect()
            })
            .collect();
        Network { n, adjacency, weights, params, inputs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adjacency(&self, j: usize, k: usize) -> u8 {
        self.adjacency[j * self.n + k]
    }

    pub fn weight(&self, j: usize, k: usize) -> f64 {
        self.weights[j * self.n + k]
    }

    /// Effective coupling `w_jk = g_jk * A_jk`.
    pub fn coupling(&self, j: usize, k: usize) -> f64 {
        self.weights[j * self.n + k] * f64::from(self.adjacency[j * self.n + k])
    }

    pub fn params(&self) -> &[Complex] {
        &self.params
    }

    pub fn adjacency_rows(&self) -> Vec<Vec<u8>> {
        self.adjacency.chunks(self.n).map(<[u8]>::to_vec).collect()
    }

    pub fn weight_rows(&self) -> Vec<Vec<f64>> {
        self.weights.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Row-major effective weight matrix.
    pub fn coupling_matrix(&self) -> Vec<f64> {
        (0..self.n * self.n).map(|i| self.weights[i] * f64::from(self.adjacency[i])).collect()
    }

    /// Nonzero effective inputs `(k, w_jk)` of node `j`.
    pub fn inputs(&self, j: usize) -> &[(usize, f64)] {
        &self.inputs[j]
    }

    /// Copy of the network with every node parameter set to `c`.
    pub fn with_equi_param(&self, c: Complex) -> Self {
        let mut out = self.clone();
        out.params = vec![c; self.n];
        out
    }

    pub fn with_params(&self, params: Vec<Complex>) -> Result<Self> {
        if params.len() != self.n {
            return Err(Error::InvalidArgument(format!("params has {} entries, expected {}", params.len(), self.n)));
        }
        let mut out = self.clone();
        out.params = params;
        Ok(out)
    }

    fn check_dim(&self, s: &MultiState) -> Result<()> {
        if s.len() != self.n {
            return Err(Error::InvalidArgument(format!("state has dimension {}, network has {} nodes", s.len(), self.n)));
        }
        Ok(())
    }

    /// One synchronous network update with the network's own parameters.
    pub fn step(&self, s: &MultiState) -> Result<MultiState> {
        self.check_dim(s)?;
        let mut out = MultiState::zeros(self.n);
        self.advance(NodeParams::PerNode(&self.params), s, &mut out);
        Ok(out)
    }

    /// Allocation-free update `src -> dst`; both states must have dimension `n`.
    pub(crate) fn advance(&self, params: NodeParams<'_>, src: &MultiState, dst: &mut MultiState) {
        for (j, inputs) in self.inputs.iter().enumerate() {
            let mut sum = Complex::new(0.0, 0.0);
            let mut overflowed = false;
            for &(k, w) in inputs {
                if src.overflowed[k] {
                    overflowed = true;
                    break;
                }
                sum += src.values[k] * w;
            }
            let c = params.get(j);
            if overflowed {
                dst.values[j] = c;
                dst.overflowed[j] = true;
                continue;
            }
            dst.values[j] = sum * sum + c;
            dst.overflowed[j] = sum.norm_sqr() > OVERFLOW_GUARD;
        }
    }

    /// Iterates `s0` until the max-norm exceeds `escape_radius` or `max_iter` steps elapse.
    pub fn iterate_orbit(&self, s0: &MultiState, max_iter: usize, escape_radius: f64) -> Result<OrbitRecord> {
        self.check_dim(s0)?;
        check_iteration_args(max_iter, escape_radius)?;
        let r2 = escape_radius * escape_radius;
        let mut states = Vec::with_capacity(max_iter.min(4096) + 1);
        states.push(s0.clone());
        if s0.exceeds(r2) {
            return Ok(OrbitRecord { states, escape_iter: Some(0) });
        }
        for t in 1..=max_iter {
            let mut next = MultiState::zeros(self.n);
            self.advance(NodeParams::PerNode(&self.params), &states[t - 1], &mut next);
            let escaped = next.exceeds(r2);
            states.push(next);
            if escaped {
                return Ok(OrbitRecord { states, escape_iter: Some(t) });
            }
        }
        Ok(OrbitRecord { states, escape_iter: None })
    }

    /// Whether node `k` (0-based) keeps `|z_k| <= escape_radius` for `t <= max_iter`,
    /// regardless of what the other nodes do.
    pub fn node_orbit_bounded(&self, s0: &MultiState, node: usize, max_iter: usize, escape_radius: f64) -> Result<bool> {
        self.check_dim(s0)?;
        if node >= self.n {
            return Err(Error::IndexOutOfRange { index: node, n: self.n });
        }
        check_iteration_args(max_iter, escape_radius)?;
        let r2 = escape_radius * escape_radius;
        let node_escaped = |s: &MultiState| s.overflowed[node] || s.values[node].norm_sqr() > r2;
        if node_escaped(s0) {
            return Ok(false);
        }
        let mut cur = s0.clone();
        let mut next = MultiState::zeros(self.n);
        for _ in 0..max_iter {
            self.advance(NodeParams::PerNode(&self.params), &cur, &mut next);
            if node_escaped(&next) {
                return Ok(false);
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(true)
    }
}

fn check_iteration_args(max_iter: usize, escape_radius: f64) -> Result<()> {
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    if !(escape_radius > 0.0) {
        return Err(Error::InvalidArgument(format!("escape radius {escape_radius} must be positive")));
    }
    Ok(())
}

/// Node parameters used for one update.
#[derive(Clone, Copy, Debug)]
pub(crate) enum NodeParams<'a> {
    PerNode(&'a [Complex]),
    Equi(Complex),
}

impl NodeParams<'_> {
    #[inline]
    fn get(&self, j: usize) -> Complex {
        match self {
            NodeParams::PerNode(p) => p[j],
            NodeParams::Equi(c) => *c,
        }
    }
}

/// A point `(z_1, ..., z_n)` of `C^n` with per-node overflow flags.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiState {
    pub values: Vec<Complex>,
    pub overflowed: Vec<bool>,
}

impl MultiState {
    pub fn zeros(n: usize) -> Self {
        Self::uniform(n, Complex::new(0.0, 0.0))
    }

    /// Diagonal lift `(z, ..., z)`.
    pub fn uniform(n: usize, z: Complex) -> Self {
        MultiState { values: vec![z; n], overflowed: vec![false; n] }
    }

    pub fn from_values(values: Vec<Complex>) -> Self {
        let n = values.len();
        MultiState { values, overflowed: vec![false; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn any_overflowed(&self) -> bool {
        self.overflowed.iter().any(|&o| o)
    }

    /// Max over node moduli, `+inf` if any node overflowed.
    pub fn max_norm(&self) -> f64 {
        if self.any_overflowed() {
            return f64::INFINITY;
        }
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[inline]
    pub(crate) fn exceeds(&self, r2: f64) -> bool {
        self.values.iter().zip(&self.overflowed).any(|(z, &o)| o || z.norm_sqr() > r2)
    }
}

/// States visited by a multi-orbit, `states[t]` after `t` updates.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitRecord {
    pub states: Vec<MultiState>,
    /// First `t` whose max-norm exceeds the escape radius (overflow counts as escape).
    pub escape_iter: Option<usize>,
}

impl OrbitRecord {
    /// Sequence of values taken by node `k`.
    pub fn node_series(&self, k: usize) -> Vec<Complex> {
        self.states.iter().map(|s| s.values[k]).collect()
    }
}
