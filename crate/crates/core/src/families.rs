//! Built-in network families and the fixed-point hyperbolic component of the simple dual network.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{Complex, Network};

#[derive(Clone, Debug, PartialEq)]
pub enum FamilySpec {
    /// The classic map `z -> z^2 + c`.
    Single,
    /// `z1 -> z1^2 + c`, `z2 -> (a z1 + z2)^2 + c`, `z3 -> (z1 + z2)^2 + c`.
    SimpleDual {
        a: f64,
    },
    /// Feed-forward `z1 -> z1^2 + c`, `z2 -> (a z1 + z2)^2 + c`, `z3 -> (z1 + z2 + b z3)^2 + c`.
    SelfDrive {
        a: f64,
        b: f64,
    },
    /// Two cliques X = nodes `0..n` and Y = nodes `n..2n`. Within-clique blocks are
    /// complete (self-loops included) with weight `g_within`. `xy_edges` are
    /// `(x, y)` cells of the block where X receives from Y, `yx_edges` the
    /// `(y, x)` cells where Y receives from X, all with weight `g_between`.
    Bipartite {
        n: usize,
        xy_edges: Vec<(usize, usize)>,
        yx_edges: Vec<(usize, usize)>,
        g_within: f64,
        g_between: f64,
    },
    Explicit(Network),
}

impl FamilySpec {
    /// Builds the network with all parameters `c_j = 0`.
    pub fn build(&self) -> Result<Network> {
        let zero = |n| vec![Complex::new(0.0, 0.0); n];
        match self {
            FamilySpec::Single => Network::new(vec![vec![1]], vec![vec![1.0]], zero(1)),
            FamilySpec::SimpleDual { a } => Network::new(
                vec![vec![1, 0, 0], vec![1, 1, 0], vec![1, 1, 0]],
                vec![vec![1.0, 0.0, 0.0], vec![*a, 1.0, 0.0], vec![1.0, 1.0, 0.0]],
                zero(3),
            ),
            FamilySpec::SelfDrive { a, b } => Network::new(
                vec![vec![1, 0, 0], vec![1, 1, 0], vec![1, 1, 1]],
                vec![vec![1.0, 0.0, 0.0], vec![*a, 1.0, 0.0], vec![1.0, 1.0, *b]],
                zero(3),
            ),
            FamilySpec::Bipartite { n, xy_edges, yx_edges, g_within, g_between } => {
                bipartite(*n, xy_edges, yx_edges, *g_within, *g_between)
            }
            FamilySpec::Explicit(net) => Ok(net.clone()),
        }
    }

    pub fn build_with_c(&self, c: Complex) -> Result<Network> {
        Ok(self.build()?.with_equi_param(c))
    }
}

fn bipartite(n: usize, xy: &[(usize, usize)], yx: &[(usize, usize)], g_within: f64, g_between: f64) -> Result<Network> {
    if n == 0 {
        return Err(Error::InvalidArgument("bipartite clique size must be positive".into()));
    }
    for (name, edges) in [("xy", xy), ("yx", yx)] {
        if edges.len() > n * n {
            return Err(Error::InvalidArgument(format!("{} {name} edges exceed the {} cells of a {n}x{n} block", edges.len(), n * n)));
        }
        if let Some(&(r, c)) = edges.iter().find(|&&(r, c)| r >= n || c >= n) {
            return Err(Error::InvalidArgument(format!("{name} edge ({r}, {c}) outside a {n}x{n} block")));
        }
        if edges.iter().duplicates().next().is_some() {
            return Err(Error::InvalidArgument(format!("duplicate {name} edge")));
        }
    }
    let size = 2 * n;
    let mut adjacency = vec![vec![0u8; size]; size];
    let mut weights = vec![vec![0.0; size]; size];
    for j in 0..size {
        for k in 0..size {
            if (j < n) == (k < n) {
                adjacency[j][k] = 1;
                weights[j][k] = g_within;
            }
        }
    }
    for &(x, y) in xy {
        adjacency[x][n + y] = 1;
        weights[x][n + y] = g_between;
    }
    for &(y, x) in yx {
        adjacency[n + y][x] = 1;
        weights[n + y][x] = g_between;
    }
    Network::new(adjacency, weights, vec![Complex::new(0.0, 0.0); size])
}

/// Between-clique edges `(xy_edges, yx_edges)` as `(row, col)` cells of the off-diagonal blocks.
pub type Placement = (Vec<(usize, usize)>, Vec<(usize, usize)>);

/// All placements of `m_xy` and `m_yx` between-clique edges, X-block choice varying fastest.
pub fn bipartite_placements(n: usize, m_xy: usize, m_yx: usize) -> Result<Vec<Placement>> {
    if m_xy > n * n || m_yx > n * n {
        return Err(Error::InvalidArgument(format!("edge counts ({m_xy}, {m_yx}) exceed the {} cells of a {n}x{n} block", n * n)));
    }
    let cell = |i: usize| (i / n, i % n);
    let xs: Vec<Vec<(usize, usize)>> = (0..n * n).combinations(m_xy).map(|c| c.into_iter().map(cell).collect()).collect();
    let ys: Vec<Vec<(usize, usize)>> = (0..n * n).combinations(m_yx).map(|c| c.into_iter().map(cell).collect()).collect();
    Ok(ys.iter().cartesian_product(xs.iter()).map(|(y, x)| (x.clone(), y.clone())).collect())
}

/// Boundary of the classic main cardioid, `c = e^{i theta}/2 - e^{2 i theta}/4`.
pub fn cardioid(theta: f64) -> Complex {
    Complex::from_polar(1.0, theta) / 2.0 - Complex::from_polar(1.0, 2.0 * theta) / 4.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub parameter: f64,
    pub point: Complex,
    pub branch: Option<Branch>,
}

/// Parameters `c` at which the second node of the simple dual network has a
/// fixed point with multiplier `2 phi = e^{i tau}`:
/// `c = [2 xi - a - a^2 ± sqrt(a^2 (a+1)^2 - 4 a^2 xi)] / 2` with `xi = phi - phi^2`.
pub fn dual_fixedpoint_curves(a: f64, tau: f64) -> (CurveSample, CurveSample) {
    let phi = Complex::from_polar(0.5, tau);
    let xi = phi - phi * phi;
    let disc = (Complex::new(a * a * (a + 1.0) * (a + 1.0), 0.0) - xi * (4.0 * a * a)).sqrt();
    let base = xi * 2.0 - a - a * a;
    let plus = (base + disc) / 2.0;
    let minus = (base - disc) / 2.0;
    (
        CurveSample { parameter: tau, point: plus, branch: Some(Branch::Plus) },
        CurveSample { parameter: tau, point: minus, branch: Some(Branch::Minus) },
    )
}

/// `samples` points of the cardioid followed by both dual branches, parameters evenly spaced over `[0, 2 pi]`.
pub fn hyperbolic_curves(a: f64, samples: usize) -> Vec<CurveSample> {
    let step = std::f64::consts::TAU / (samples.max(2) - 1) as f64;
    let params: Vec<f64> = (0..samples.max(2)).map(|i| i as f64 * step).collect();
    let mut out: Vec<CurveSample> = params.iter().map(|&t| CurveSample { parameter: t, point: cardioid(t), branch: None }).collect();
    let (plus, minus): (Vec<_>, Vec<_>) = params.iter().map(|&t| dual_fixedpoint_curves(a, t)).unzip();
    out.extend(plus);
    out.extend(minus);
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualFixedPoint {
    pub z1: Complex,
    pub z2: Complex,
    pub z3: Complex,
    /// `2 z1`
    pub lambda2: Complex,
    /// `2 (a z1 + z2)`
    pub lambda3: Complex,
    pub attracting: bool,
}

/// The four fixed points of the simple dual network (the third node follows the first two).
pub fn dual_fixed_points(a: f64, c: Complex) -> Vec<DualFixedPoint> {
    let one = Complex::new(1.0, 0.0);
    let root1 = (one - c * 4.0).sqrt();
    let mut out = Vec::with_capacity(4);
    for z1 in [(one + root1) / 2.0, (one - root1) / 2.0] {
        // phi = a z1 + z2 solves phi^2 - phi + (c + a z1) = 0
        let root2 = (one - (c + z1 * a) * 4.0).sqrt();
        for phi in [(one + root2) / 2.0, (one - root2) / 2.0] {
            let z2 = phi - z1 * a;
            let lambda2 = z1 * 2.0;
            let lambda3 = phi * 2.0;
            out.push(DualFixedPoint {
                z1,
                z2,
                z3: (z1 + z2) * (z1 + z2) + c,
                lambda2,
                lambda3,
                attracting: lambda2.norm() < 1.0 && lambda3.norm() < 1.0,
            });
        }
    }
    out
}
