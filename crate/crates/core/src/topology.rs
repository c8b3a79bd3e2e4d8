//! Connected components of binary rasters, dilation ("blow-up"), and connectedness loci.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{Complex, MultiState, Network, NodeParams};
use crate::raster::{self, BinaryRaster, Criterion, GridSpec, BOUNDED};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl TryFrom<u8> for Connectivity {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            _ => Err(Error::InvalidArgument(format!("connectivity must be 4 or 8, got {v}"))),
        }
    }
}

pub const DEFAULT_BLOWUP_RADIUS: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentCount {
    pub count: usize,
    /// Row-major labels `1..=count`, 0 for background.
    pub labels: Vec<u32>,
}

struct DisjointSets {
    parent: Vec<u32>,
}

impl DisjointSets {
    fn new() -> Self {
        // label 0 is background and never joins a set
        DisjointSets { parent: vec![0] }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Two-pass union-find labeling; labels are numbered in raster order of first appearance.
pub fn count_components(b: &BinaryRaster, connectivity: Connectivity) -> ComponentCount {
    let (w, h) = (b.width(), b.height());
    let mut labels = vec![0u32; w * h];
    let mut sets = DisjointSets::new();

    for y in 0..h {
        for x in 0..w {
            if !b.get(x, y) {
                continue;
            }
            let mut neighbors = [0u32; 4];
            let mut found = 0;
            let mut push = |l: u32| {
                if l != 0 {
                    neighbors[found] = l;
                    found += 1;
                }
            };
            if x > 0 {
                push(labels[y * w + x - 1]);
            }
            if y > 0 {
                push(labels[(y - 1) * w + x]);
                if connectivity == Connectivity::Eight {
                    if x > 0 {
                        push(labels[(y - 1) * w + x - 1]);
                    }
                    if x + 1 < w {
                        push(labels[(y - 1) * w + x + 1]);
                    }
                }
            }
            let label = match neighbors[..found].iter().min() {
                None => sets.make(),
                Some(&m) => {
                    for &l in &neighbors[..found] {
                        sets.union(m, l);
                    }
                    m
                }
            };
            labels[y * w + x] = label;
        }
    }

    let mut compact = vec![0u32; sets.parent.len()];
    let mut count = 0u32;
    for l in labels.iter_mut().filter(|l| **l != 0) {
        let root = sets.find(*l) as usize;
        if compact[root] == 0 {
            count += 1;
            compact[root] = count;
        }
        *l = compact[root];
    }
    ComponentCount { count: count as usize, labels }
}

/// Pixels within `radius_px` of a foreground pixel in the max-norm on pixel offsets,
/// so radius 1 (or 1.5) adds the full 8-neighborhood.
pub fn dilate(b: &BinaryRaster, radius_px: f64) -> Result<BinaryRaster> {
    if !(radius_px >= 0.0) || !radius_px.is_finite() {
        return Err(Error::InvalidArgument(format!("dilation radius {radius_px} must be a finite nonnegative number")));
    }
    let reach = radius_px.floor() as i64;
    let offsets: Vec<(i64, i64)> = (-reach..=reach).flat_map(|dy| (-reach..=reach).map(move |dx| (dx, dy))).collect();
    let (w, h) = (b.width() as i64, b.height() as i64);
    let mut mask = vec![false; b.mask.len()];
    for y in 0..h {
        for x in 0..w {
            if !b.get(x as usize, y as usize) {
                continue;
            }
            for &(dx, dy) in &offsets {
                let (nx, ny) = (x + dx, y + dy);
                if nx >= 0 && ny >= 0 && nx < w && ny < h {
                    mask[(ny * w + nx) as usize] = true;
                }
            }
        }
    }
    Ok(BinaryRaster { grid: b.grid, mask })
}

/// Component count after dilating by `radius_px`.
pub fn component_count_blowup(b: &BinaryRaster, radius_px: f64, connectivity: Connectivity) -> Result<usize> {
    Ok(count_components(&dilate(b, radius_px)?, connectivity).count)
}

/// Per-pixel nonnegative integers over a parameter plane.
#[derive(Clone, Debug, PartialEq)]
pub struct LocusRaster {
    pub grid: GridSpec,
    pub data: Vec<u32>,
}

impl LocusRaster {
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.data[y * self.grid.width + x]
    }

    pub fn at_point(&self, p: Complex) -> Option<u32> {
        self.grid.pixel_of(p).map(|(x, y)| self.get(x, y))
    }

    /// Maximal runs of nonzero pixels down column `x`, as `(first_row, last_row)`.
    pub fn column_runs(&self, x: usize) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut start = None;
        for y in 0..self.grid.height {
            match (self.get(x, y) != 0, start) {
                (true, None) => start = Some(y),
                (false, Some(s)) => {
                    runs.push((s, y - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push((s, self.grid.height - 1));
        }
        runs
    }
}

/// Blow-up settings shared by the connectedness loci.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowupSettings {
    pub radius_px: f64,
    pub connectivity: Connectivity,
}

impl Default for BlowupSettings {
    fn default() -> Self {
        BlowupSettings { radius_px: DEFAULT_BLOWUP_RADIUS, connectivity: Connectivity::Eight }
    }
}

fn locus<F>(grid: &GridSpec, cell: F) -> Result<LocusRaster>
where
    F: Fn(Complex) -> Result<u32> + Sync,
{
    grid.validate()?;
    let data = (0..grid.len()).into_par_iter().map(|i| cell(grid.point(i % grid.width, i / grid.width))).collect::<Result<Vec<u32>>>()?;
    Ok(LocusRaster { grid: *grid, data })
}

// rasters inside a locus cell run sequentially; the locus itself is parallel over cells
fn serial_raster(net: &Network, grid: &GridSpec, start: Option<Complex>, max_iter: u32, escape_radius: f64) -> BinaryRaster {
    let n = net.n();
    let mut state = MultiState::zeros(n);
    let mut scratch = MultiState::zeros(n);
    let mut mask = Vec::with_capacity(grid.len());
    for y in 0..grid.height {
        for x in 0..grid.width {
            let p = grid.point(x, y);
            let (z0, params) = match start {
                // uni-J: pixel is the initial condition
                None => (p, NodeParams::PerNode(net.params())),
                // equi-M: pixel is the equi-parameter
                Some(origin) => (origin, NodeParams::Equi(p)),
            };
            state.values.fill(z0);
            state.overflowed.fill(false);
            let t = raster::escape_time(net, params, &mut state, &mut scratch, Criterion::AllNodes, max_iter, escape_radius);
            mask.push(t == BOUNDED);
        }
    }
    BinaryRaster { grid: *grid, mask }
}

/// For each `c` pixel: blown-up component count of the uni-prisoner mask of `net_template` at equi-parameter `c`.
pub fn uni_j_connectedness_locus(
    net_template: &Network,
    c_grid: &GridSpec,
    z_grid: &GridSpec,
    max_iter: u32,
    escape_radius: f64,
    blowup: BlowupSettings,
) -> Result<LocusRaster> {
    z_grid.validate()?;
    dilate_check(blowup.radius_px)?;
    locus(c_grid, |c| {
        let net = net_template.with_equi_param(c);
        let mask = serial_raster(&net, z_grid, None, max_iter, escape_radius);
        Ok(component_count_blowup(&mask, blowup.radius_px, blowup.connectivity)? as u32)
    })
}

fn dilate_check(radius_px: f64) -> Result<()> {
    if !(radius_px >= 0.0) || !radius_px.is_finite() {
        return Err(Error::InvalidArgument(format!("dilation radius {radius_px} must be a finite nonnegative number")));
    }
    Ok(())
}

/// For each `(a, b)` pixel (a horizontal, b vertical): 1 if the critical multi-orbit at equi-parameter `c0` stays bounded.
pub fn ab_membership_locus<F>(family: F, ab_grid: &GridSpec, c0: Complex, max_iter: u32, escape_radius: f64) -> Result<LocusRaster>
where
    F: Fn(f64, f64) -> Result<Network> + Sync,
{
    if max_iter == 0 || !(escape_radius > 0.0) {
        return Err(Error::InvalidArgument("max_iter must be positive and escape radius positive".into()));
    }
    locus(ab_grid, |ab| {
        let net = family(ab.re, ab.im)?;
        let mut state = MultiState::zeros(net.n());
        let mut scratch = MultiState::zeros(net.n());
        let t = raster::escape_time(&net, NodeParams::Equi(c0), &mut state, &mut scratch, Criterion::AllNodes, max_iter, escape_radius);
        Ok(u32::from(t == BOUNDED))
    })
}

/// For each `(a, b)` pixel: blown-up component count of the equi-M prisoner mask over `c_grid`.
pub fn ab_connectedness_locus<F>(
    family: F,
    ab_grid: &GridSpec,
    c_grid: &GridSpec,
    max_iter: u32,
    escape_radius: f64,
    blowup: BlowupSettings,
) -> Result<LocusRaster>
where
    F: Fn(f64, f64) -> Result<Network> + Sync,
{
    c_grid.validate()?;
    dilate_check(blowup.radius_px)?;
    locus(ab_grid, |ab| {
        let net = family(ab.re, ab.im)?;
        let mask = serial_raster(&net, c_grid, Some(Complex::new(0.0, 0.0)), max_iter, escape_radius);
        Ok(component_count_blowup(&mask, blowup.radius_px, blowup.connectivity)? as u32)
    })
}
