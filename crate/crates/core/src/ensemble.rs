//! Families of network configurations sharing a property: core (average) sets,
//! and partitions into spectral and asymptotic classes.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use itertools::Itertools;
use nalgebra::{DMatrix, Schur};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::FamilySpec;
use crate::netcore::{Complex, Network};
use crate::raster::{equi_m_raster, uni_j_raster, BinaryRaster, EscapeRaster, GridSpec, BOUNDED};

pub const DEFAULT_CAP: u64 = 1_000_000;

const EIGEN_EPS: f64 = 1e-8;
const EIGEN_ROUND: f64 = 1e6;

/// Default dynamic-plane window for asymptotic classes.
pub fn default_z_grid() -> GridSpec {
    GridSpec::square(-2.0, 2.0, -2.0, 2.0, 200).expect("static grid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Property {
    /// `k` of the `n²` cells (self-loops included) carry an edge.
    EdgeCount { n: usize, k: usize },
    /// Two complete `n`-cliques joined by `m_xy` edges into X and `m_yx` edges into Y.
    Bipartite { n: usize, m_xy: usize, m_yx: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Enumeration {
    Exhaustive,
    Sampled { size: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationFamily {
    pub property: Property,
    /// Edge weight: uniform for edge-count families; `+g` within and `-g` between cliques for bipartite ones.
    pub g: f64,
    pub enumeration: Enumeration,
    pub cap: u64,
}

impl ConfigurationFamily {
    /// Edge-count family with the customary weight `g = 1/n`.
    pub fn edge_count(n: usize, k: usize) -> Self {
        ConfigurationFamily {
            property: Property::EdgeCount { n, k },
            g: 1.0 / n as f64,
            enumeration: Enumeration::Exhaustive,
            cap: DEFAULT_CAP,
        }
    }

    pub fn bipartite(n: usize, m_xy: usize, m_yx: usize, g: f64) -> Self {
        ConfigurationFamily { property: Property::Bipartite { n, m_xy, m_yx }, g, enumeration: Enumeration::Exhaustive, cap: DEFAULT_CAP }
    }

    pub fn with_g(self, g: f64) -> Self {
        ConfigurationFamily { g, ..self }
    }

    pub fn sampled(self, size: usize, seed: u64) -> Self {
        ConfigurationFamily { enumeration: Enumeration::Sampled { size, seed }, ..self }
    }

    /// Number of configurations in the full family, saturating at `u64::MAX`.
    pub fn size(&self) -> u64 {
        match self.property {
            Property::EdgeCount { n, k } => binomial(n * n, k),
            Property::Bipartite { n, m_xy, m_yx } => binomial(n * n, m_xy).saturating_mul(binomial(n * n, m_yx)),
        }
    }
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays exact since acc = C(n, i)
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

fn edge_count_net(n: usize, cells: &[usize], g: f64) -> Result<Network> {
    let mut adjacency = vec![vec![0u8; n]; n];
    for &i in cells {
        adjacency[i / n][i % n] = 1;
    }
    Network::uniform(adjacency, g)
}

fn bipartite_net(n: usize, xy: &[usize], yx: &[usize], g: f64) -> Result<Network> {
    let cell = |&i: &usize| (i / n, i % n);
    FamilySpec::Bipartite {
        n,
        xy_edges: xy.iter().map(cell).collect(),
        yx_edges: yx.iter().map(cell).collect(),
        g_within: g,
        g_between: -g,
    }
    .build()
}

// sorted k-subset of 0..m via a partial Fisher-Yates shuffle
fn draw_subset(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Vec<usize> {
    let mut cells: Vec<usize> = (0..m).collect();
    for i in 0..k {
        let j = rng.random_range(i..m);
        cells.swap(i, j);
    }
    let mut subset = cells[..k].to_vec();
    subset.sort_unstable();
    subset
}

fn validate(family: &ConfigurationFamily) -> Result<()> {
    let (n, counts) = match family.property {
        Property::EdgeCount { n, k } => (n, vec![k]),
        Property::Bipartite { n, m_xy, m_yx } => (n, vec![m_xy, m_yx]),
    };
    if n == 0 {
        return Err(Error::InvalidArgument("family size n must be positive".into()));
    }
    if let Some(k) = counts.iter().find(|&&k| k > n * n) {
        return Err(Error::InvalidArgument(format!("{k} edges do not fit in {} cells", n * n)));
    }
    if !family.g.is_finite() {
        return Err(Error::InvalidArgument(format!("weight g = {} is not finite", family.g)));
    }
    Ok(())
}

/// Configurations of the family, in lexicographic order of row-major cell subsets
/// (exhaustive) or in draw order (sampled).
pub fn enumerate(family: &ConfigurationFamily) -> Result<Vec<Network>> {
    validate(family)?;
    match family.enumeration {
        Enumeration::Exhaustive => {
            let size = family.size();
            if size > family.cap {
                let count = if size == u64::MAX { "more than 1.8e19".to_string() } else { size.to_string() };
                return Err(Error::CapExceeded { count, cap: family.cap });
            }
            match family.property {
                Property::EdgeCount { n, k } => (0..n * n).combinations(k).map(|cells| edge_count_net(n, &cells, family.g)).collect(),
                Property::Bipartite { n, m_xy, m_yx } => {
                    let xs: Vec<Vec<usize>> = (0..n * n).combinations(m_xy).collect();
                    (0..n * n).combinations(m_yx).cartesian_product(xs.iter()).map(|(yx, xy)| bipartite_net(n, xy, &yx, family.g)).collect()
                }
            }
        }
        Enumeration::Sampled { size, seed } => {
            let target = (size as u64).min(family.size()) as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut seen = HashSet::new();
            let mut out = Vec::with_capacity(target);
            while out.len() < target {
                let key = match family.property {
                    Property::EdgeCount { n, k } => (draw_subset(&mut rng, n * n, k), Vec::new()),
                    Property::Bipartite { n, m_xy, m_yx } => (draw_subset(&mut rng, n * n, m_xy), draw_subset(&mut rng, n * n, m_yx)),
                };
                if !seen.insert(key.clone()) {
                    continue;
                }
                out.push(match family.property {
                    Property::EdgeCount { n, .. } => edge_count_net(n, &key.0, family.g)?,
                    Property::Bipartite { n, .. } => bipartite_net(n, &key.0, &key.1, family.g)?,
                });
            }
            Ok(out)
        }
    }
}

/// Per-pixel fraction of configurations whose orbit stays bounded.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionRaster {
    pub grid: GridSpec,
    pub data: Vec<f64>,
    /// Bounded configurations per pixel; `data = counts / config_count`.
    pub counts: Vec<u32>,
    pub config_count: usize,
}

impl FractionRaster {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.grid.width + x]
    }

    pub fn at_point(&self, z: Complex) -> Option<f64> {
        self.grid.pixel_of(z).map(|(x, y)| self.get(x, y))
    }

    /// Pixels bounded under every configuration.
    pub fn core_mask(&self) -> BinaryRaster {
        BinaryRaster { grid: self.grid, mask: self.counts.iter().map(|&k| k as usize == self.config_count && k > 0).collect() }
    }
}

fn fraction_raster<F>(configs: &[Network], grid: &GridSpec, raster: F) -> Result<FractionRaster>
where
    F: Fn(&Network) -> Result<EscapeRaster> + Sync,
{
    grid.validate()?;
    if configs.is_empty() {
        return Err(Error::InvalidArgument("configuration family is empty".into()));
    }
    // integer counts make the reduction independent of scheduling
    let counts = configs
        .par_iter()
        .map(|net| raster(net).map(|r| r.data.iter().map(|&v| u32::from(v == BOUNDED)).collect::<Vec<u32>>()))
        .try_reduce(|| vec![0u32; grid.len()], |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()))?;
    let total = configs.len() as f64;
    Ok(FractionRaster { grid: *grid, data: counts.iter().map(|&k| k as f64 / total).collect(), counts, config_count: configs.len() })
}

/// Core uni-prisoner set: for each `z0`, the fraction of configurations with a bounded diagonal orbit at equi-parameter `c`.
pub fn core_uni_j(configs: &[Network], c: Complex, z_grid: &GridSpec, max_iter: u32, escape_radius: f64) -> Result<FractionRaster> {
    fraction_raster(configs, z_grid, |net| uni_j_raster(&net.with_equi_param(c), z_grid, max_iter, escape_radius))
}

/// Core equi-M set: for each `c`, the fraction of configurations with a bounded critical orbit.
pub fn core_equi_m(configs: &[Network], c_grid: &GridSpec, max_iter: u32, escape_radius: f64) -> Result<FractionRaster> {
    fraction_raster(configs, c_grid, |net| equi_m_raster(net, c_grid, max_iter, escape_radius))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassKind {
    Spectral,
    Asymptotic { c: [f64; 2], grid: GridSpec, max_iter: u32, escape_radius: f64 },
}

/// Class ids are numbered by first appearance, so two partitions of the same member list
/// are equal as set partitions exactly when their id vectors are equal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassPartition {
    pub kind: ClassKind,
    pub class_ids: Vec<usize>,
    pub class_count: usize,
}

impl ClassPartition {
    fn from_keys<K: std::hash::Hash + Eq>(kind: ClassKind, keys: impl IntoIterator<Item = K>) -> Self {
        let mut ids = HashMap::new();
        let class_ids: Vec<usize> = keys
            .into_iter()
            .map(|k| {
                let next = ids.len();
                *ids.entry(k).or_insert(next)
            })
            .collect();
        ClassPartition { kind, class_count: ids.len(), class_ids }
    }

    /// Member indices per class, in class-id order.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.class_count];
        for (i, &c) in self.class_ids.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    pub fn same_partition(&self, other: &ClassPartition) -> bool {
        self.class_ids == other.class_ids
    }
}

/// Rounded, sorted eigenvalue multiset of the effective coupling matrix.
pub fn spectral_key(net: &Network) -> Result<Vec<(i64, i64)>> {
    let n = net.n();
    let m = DMatrix::from_row_slice(n, n, &net.coupling_matrix());
    let schur = Schur::try_new(m.clone(), EIGEN_EPS, 10_000)
        .ok_or_else(|| Error::EigenFailure { matrix: format!("{:?}", net.coupling_matrix()) })?;
    let round = |v: f64| (v * EIGEN_ROUND).round() as i64;
    let mut key: Vec<(i64, i64)> = schur.complex_eigenvalues().iter().map(|z| (round(z.re), round(z.im))).collect();
    key.sort_unstable();
    Ok(key)
}

pub fn partition_spectral(configs: &[Network]) -> Result<ClassPartition> {
    let keys = configs.par_iter().map(spectral_key).collect::<Result<Vec<_>>>()?;
    Ok(ClassPartition::from_keys(ClassKind::Spectral, keys))
}

/// Classes of exactly equal uni-J escape rasters at equi-parameter `c`.
pub fn partition_asymptotic(
    configs: &[Network],
    c: Complex,
    z_grid: &GridSpec,
    max_iter: u32,
    escape_radius: f64,
) -> Result<ClassPartition> {
    let rasters = configs
        .par_iter()
        .map(|net| uni_j_raster(&net.with_equi_param(c), z_grid, max_iter, escape_radius).map(|r| r.data))
        .collect::<Result<Vec<Vec<i32>>>>()?;
    let kind = ClassKind::Asymptotic { c: [c.re, c.im], grid: *z_grid, max_iter, escape_radius };
    // HashMap keys hash first and then compare the full arrays
    Ok(ClassPartition::from_keys(kind, rasters))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairDiff {
    pub a: usize,
    pub b: usize,
    pub identical: bool,
    /// Member pairs grouped together under one parameter but not the other.
    pub split_pairs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceReport {
    pub c_list: Vec<Complex>,
    pub partitions: Vec<ClassPartition>,
    pub all_identical: bool,
    pub first_difference: Option<(usize, usize)>,
    pub pairs: Vec<PairDiff>,
}

fn split_pairs(p: &ClassPartition, q: &ClassPartition) -> usize {
    let n = p.class_ids.len();
    (0..n)
        .tuple_combinations()
        .filter(|&(i, j): &(usize, usize)| (p.class_ids[i] == p.class_ids[j]) != (q.class_ids[i] == q.class_ids[j]))
        .count()
}

pub fn class_invariance_experiment(
    configs: &[Network],
    c_list: &[Complex],
    z_grid: &GridSpec,
    max_iter: u32,
    escape_radius: f64,
) -> Result<InvarianceReport> {
    if c_list.len() < 2 {
        return Err(Error::InvalidArgument("the invariance experiment needs at least two parameters".into()));
    }
    let partitions =
        c_list.iter().map(|&c| partition_asymptotic(configs, c, z_grid, max_iter, escape_radius)).collect::<Result<Vec<_>>>()?;
    let pairs: Vec<PairDiff> = (0..c_list.len())
        .tuple_combinations()
        .map(|(a, b)| {
            let identical = partitions[a].same_partition(&partitions[b]);
            PairDiff { a, b, identical, split_pairs: if identical { 0 } else { split_pairs(&partitions[a], &partitions[b]) } }
        })
        .collect();
    let first_difference = pairs.iter().find(|d| !d.identical).map(|d| (d.a, d.b));
    Ok(InvarianceReport { c_list: c_list.to_vec(), partitions, all_identical: first_difference.is_none(), first_difference, pairs })
}

/// Row-major adjacency bits as hex, first cell most significant.
pub fn adjacency_hex(net: &Network) -> String {
    let bits: Vec<u8> = net.adjacency_rows().concat();
    let digits = bits.len().div_ceil(4);
    let padded: Vec<u8> = std::iter::repeat_n(0, digits * 4 - bits.len()).chain(bits).collect();
    padded.chunks(4).map(|c| format!("{:x}", c.iter().fold(0u8, |acc, &b| acc << 1 | b))).collect()
}

/// `index,bitmask,spectral_class,asymptotic_class` with 0-based class ids.
pub fn classes_csv(configs: &[Network], spectral: &ClassPartition, asymptotic: &ClassPartition) -> Result<String> {
    if spectral.class_ids.len() != configs.len() || asymptotic.class_ids.len() != configs.len() {
        return Err(Error::InvalidArgument("partitions do not cover the configuration list".into()));
    }
    let mut out = String::from("index,bitmask,spectral_class,asymptotic_class\n");
    for (i, net) in configs.iter().enumerate() {
        writeln!(out, "{i},{},{},{}", adjacency_hex(net), spectral.class_ids[i], asymptotic.class_ids[i]).unwrap();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(net: &Network) -> String {
        net.adjacency_rows().concat().iter().map(|b| b.to_string()).collect()
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(9, 7), 36);
        assert_eq!(binomial(4, 0), 1);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(100, 60), u64::MAX);
        assert_eq!(binomial(64, 32), 1_832_624_140_942_590_534);
    }

    #[test]
    fn family_sizes() {
        let f = enumerate(&ConfigurationFamily::edge_count(3, 7)).unwrap();
        assert_eq!(f.len(), 36);
        assert_eq!(bits(&f[0]), "111111100");
        assert_eq!(bits(&f[35]), "001111111");
        assert!(f.iter().all(|n| n.adjacency_rows().concat().iter().map(|&b| b as usize).sum::<usize>() == 7));
        assert!(f.iter().all(|n| n.weight(0, 0) == 0.0 || (n.weight(0, 0) - 1.0 / 3.0).abs() < 1e-16));

        let full = enumerate(&ConfigurationFamily::edge_count(3, 9)).unwrap();
        assert_eq!(full.len(), 1);
        assert_eq!(enumerate(&ConfigurationFamily::bipartite(2, 1, 3, 0.5)).unwrap().len(), 16);
        let err = enumerate(&ConfigurationFamily::edge_count(10, 60)).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }));
    }

    #[test]
    fn bipartite_order_and_weights() {
        let f = enumerate(&ConfigurationFamily::bipartite(2, 1, 3, 0.5)).unwrap();
        // X-block edge varies fastest, Y-block patterns in lexicographic order
        assert_eq!(f[0].adjacency(0, 2), 1);
        assert_eq!(f[1].adjacency(0, 3), 1);
        assert_eq!(f[0].coupling(0, 2), -0.5);
        assert_eq!(f[0].coupling(1, 0), 0.5);
        for (i, net) in f.iter().enumerate() {
            let yx: Vec<u8> = (2..4).flat_map(|y| (0..2).map(move |x| (y, x))).map(|(y, x)| net.adjacency(y, x)).collect();
            let expected = [[1, 1, 1, 0], [1, 1, 0, 1], [1, 0, 1, 1], [0, 1, 1, 1]][i / 4];
            assert_eq!(yx, expected);
        }
    }

    #[test]
    fn sampling_is_seeded_and_distinct() {
        let fam = ConfigurationFamily::edge_count(10, 60).sampled(20, 7);
        let a = enumerate(&fam).unwrap();
        let b = enumerate(&fam).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        assert_eq!(a.iter().map(adjacency_hex).collect::<HashSet<_>>().len(), 20);
        assert_ne!(a, enumerate(&fam.sampled(20, 8)).unwrap());
        // asking for more than exist returns each configuration once
        let small = enumerate(&ConfigurationFamily::edge_count(2, 3).sampled(50, 1)).unwrap();
        assert_eq!(small.len(), 4);
    }

    #[test]
    fn hex_masks() {
        let f = enumerate(&ConfigurationFamily::edge_count(3, 7)).unwrap();
        assert_eq!(adjacency_hex(&f[0]), "1fc");
        assert_eq!(adjacency_hex(&f[35]), "07f");
    }

    #[test]
    fn fractions_for_a_single_configuration() {
        let fam = enumerate(&ConfigurationFamily::edge_count(3, 9)).unwrap();
        let grid = GridSpec::square(-2.0, 2.0, -2.0, 2.0, 40).unwrap();
        let c = Complex::new(-0.2, 0.3);
        let core = core_uni_j(&fam, c, &grid, 50, 20.0).unwrap();
        let direct = uni_j_raster(&fam[0].with_equi_param(c), &grid, 50, 20.0).unwrap();
        assert!(core.data.iter().all(|&v| v == 0.0 || v == 1.0));
        assert_eq!(core.core_mask(), crate::raster::prisoner_mask(&direct));
    }

    #[test]
    fn core_equi_m_at_origin() {
        let fam = enumerate(&ConfigurationFamily::edge_count(3, 7)).unwrap();
        let grid = GridSpec::square(-2.5, 30.5, -1.0, 1.0, 33).unwrap();
        let r = core_equi_m(&fam, &GridSpec::new(-0.5, 0.5, -0.5, 0.5, 1, 1).unwrap(), 50, 20.0).unwrap();
        assert_eq!(r.data, vec![1.0]);
        let far = core_equi_m(&fam, &grid, 50, 20.0).unwrap();
        assert_eq!(far.at_point(Complex::new(29.0, 0.0)), Some(0.0));
    }

    #[test]
    fn duplicates_share_a_class() {
        let fam = enumerate(&ConfigurationFamily::edge_count(3, 7)).unwrap();
        let dup = vec![fam[3].clone(), fam[5].clone(), fam[3].clone()];
        let grid = GridSpec::square(-2.0, 2.0, -2.0, 2.0, 30).unwrap();
        let p = partition_asymptotic(&dup, Complex::new(-1.15, 0.26), &grid, 50, 20.0).unwrap();
        assert_eq!(p.class_ids[0], p.class_ids[2]);
        let s = partition_spectral(&dup).unwrap();
        assert_eq!(s.class_ids[0], s.class_ids[2]);
    }

    #[test]
    fn permutation_similar_matrices_share_a_spectrum() {
        let a = Network::uniform(vec![vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 0]], 0.5).unwrap();
        // relabel nodes by the cycle 0 -> 1 -> 2 -> 0
        let rows = a.adjacency_rows();
        let perm = [1, 2, 0];
        let mut b = vec![vec![0u8; 3]; 3];
        for j in 0..3 {
            for k in 0..3 {
                b[perm[j]][perm[k]] = rows[j][k];
            }
        }
        let b = Network::uniform(b, 0.5).unwrap();
        assert_eq!(spectral_key(&a).unwrap(), spectral_key(&b).unwrap());
    }

    #[test]
    fn spectral_key_rounding() {
        let rot =
            Network::new(vec![vec![1, 1], vec![1, 1]], vec![vec![0.0, -1.0], vec![1.0, 0.0]], vec![Complex::new(0.0, 0.0); 2]).unwrap();
        assert_eq!(spectral_key(&rot).unwrap(), vec![(0, -1_000_000), (0, 1_000_000)]);
    }

    #[test]
    fn invariance_with_duplicate_parameters() {
        let fam = enumerate(&ConfigurationFamily::edge_count(2, 3)).unwrap();
        let grid = GridSpec::square(-2.0, 2.0, -2.0, 2.0, 24).unwrap();
        let c = Complex::new(-0.4, 0.2);
        let r = class_invariance_experiment(&fam, &[c, c], &grid, 50, 20.0).unwrap();
        assert!(r.all_identical && r.first_difference.is_none());
        assert!(class_invariance_experiment(&fam, &[c], &grid, 50, 20.0).is_err());
    }

    #[test]
    fn split_pair_count() {
        let p = ClassPartition::from_keys(ClassKind::Spectral, [0, 0, 1]);
        let q = ClassPartition::from_keys(ClassKind::Spectral, [0, 1, 1]);
        assert_eq!(split_pairs(&p, &q), 2);
        assert_eq!(p.classes(), vec![vec![0, 1], vec![2]]);
    }
}
