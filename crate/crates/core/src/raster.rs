//! Escape-time rasters over windows of the complex plane.
//!
//! Pixels are sampled at their centers; row 0 is the top of the window. Every
//! pixel is computed independently, so results are identical for any rayon
//! worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{Complex, MultiState, Network, NodeParams};

pub const DEFAULT_MAX_ITER: u32 = 50;
pub const DEFAULT_ESCAPE_RADIUS: f64 = 20.0;

/// Marks a pixel whose orbit stayed bounded through `max_iter` steps.
pub const BOUNDED: i32 = -1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub width: usize,
    pub height: usize,
}

impl GridSpec {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64, width: usize, height: usize) -> Result<Self> {
        let g = GridSpec { re_min, re_max, im_min, im_max, width, height };
        g.validate()?;
        Ok(g)
    }

    /// Square `size x size` grid.
    pub fn square(re_min: f64, re_max: f64, im_min: f64, im_max: f64, size: usize) -> Result<Self> {
        Self::new(re_min, re_max, im_min, im_max, size, size)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.re_min, self.re_max, self.im_min, self.im_max].iter().all(|v| v.is_finite());
        if !finite || !(self.re_min < self.re_max) || !(self.im_min < self.im_max) {
            return Err(Error::InvalidArgument(format!(
                "window [{}, {}] x [{}, {}] is empty or not finite",
                self.re_min, self.re_max, self.im_min, self.im_max
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument(format!("resolution {}x{} has a zero side", self.width, self.height)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pixel_width(&self) -> f64 {
        (self.re_max - self.re_min) / self.width as f64
    }

    pub fn pixel_height(&self) -> f64 {
        (self.im_max - self.im_min) / self.height as f64
    }

    pub fn re_at(&self, x: usize) -> f64 {
        self.re_min + (x as f64 + 0.5) * (self.re_max - self.re_min) / self.width as f64
    }

    pub fn im_at(&self, y: usize) -> f64 {
        self.im_max - (y as f64 + 0.5) * (self.im_max - self.im_min) / self.height as f64
    }

    /// Center of pixel `(x, y)`.
    pub fn point(&self, x: usize, y: usize) -> Complex {
        Complex::new(self.re_at(x), self.im_at(y))
    }

    /// Pixel whose cell contains `z`, if `z` lies inside the window.
    pub fn pixel_of(&self, z: Complex) -> Option<(usize, usize)> {
        let fx = (z.re - self.re_min) / (self.re_max - self.re_min) * self.width as f64;
        let fy = (self.im_max - z.im) / (self.im_max - self.im_min) * self.height as f64;
        if !(0.0..self.width as f64).contains(&fx) || !(0.0..self.height as f64).contains(&fy) {
            return None;
        }
        Some((fx as usize, fy as usize))
    }
}

/// First-escape iteration per pixel, [`BOUNDED`] where the orbit never escaped.
#[derive(Clone, Debug, PartialEq)]
pub struct EscapeRaster {
    pub grid: GridSpec,
    pub data: Vec<i32>,
    pub max_iter: u32,
    pub escape_radius: f64,
}

impl EscapeRaster {
    pub fn get(&self, x: usize, y: usize) -> i32 {
        self.data[y * self.grid.width + x]
    }

    pub fn at_point(&self, z: Complex) -> Option<i32> {
        self.grid.pixel_of(z).map(|(x, y)| self.get(x, y))
    }

    pub fn bounded_count(&self) -> usize {
        self.data.iter().filter(|&&v| v == BOUNDED).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryRaster {
    pub grid: GridSpec,
    pub mask: Vec<bool>,
}

impl BinaryRaster {
    pub fn new(grid: GridSpec, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::InvalidArgument(format!("mask has {} pixels, grid has {}", mask.len(), grid.len())));
        }
        Ok(BinaryRaster { grid, mask })
    }

    pub fn width(&self) -> usize {
        self.grid.width
    }

    pub fn height(&self) -> usize {
        self.grid.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.grid.width + x]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Pixelwise `self ⊆ other`.
    pub fn is_subset_of(&self, other: &BinaryRaster) -> bool {
        self.mask.len() == other.mask.len() && self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }
}

/// Which part of the multi-orbit must stay inside the escape disc.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    /// Max-norm over all nodes.
    AllNodes,
    /// Modulus of one node (0-based); the others may blow up.
    Node(usize),
}

/// Escape iteration of a single orbit, the kernel behind every raster.
///
/// Escape is tested after each synchronous network update; a starting state
/// already outside the disc is reported as escaping at step 1.
pub(crate) fn escape_time(
    net: &Network,
    params: NodeParams<'_>,
    start: &mut MultiState,
    scratch: &mut MultiState,
    criterion: Criterion,
    max_iter: u32,
    escape_radius: f64,
) -> i32 {
    let r2 = escape_radius * escape_radius;
    let escaped = |s: &MultiState| match criterion {
        Criterion::AllNodes => s.exceeds(r2),
        Criterion::Node(k) => s.overflowed[k] || s.values[k].norm_sqr() > r2,
    };
    if escaped(start) {
        return 1;
    }
    let (mut cur, mut next) = (start, scratch);
    for t in 1..=max_iter {
        net.advance(params, cur, next);
        if escaped(next) {
            return t as i32;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    BOUNDED
}

fn check_args(max_iter: u32, escape_radius: f64) -> Result<()> {
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    if !(escape_radius > 0.0) {
        return Err(Error::InvalidArgument(format!("escape radius {escape_radius} must be positive")));
    }
    Ok(())
}

fn render<F>(grid: &GridSpec, n: usize, max_iter: u32, escape_radius: f64, pixel: F) -> Result<EscapeRaster>
where
    F: Fn(Complex, &mut MultiState, &mut MultiState) -> i32 + Sync,
{
    grid.validate()?;
    check_args(max_iter, escape_radius)?;
    let mut data = vec![0i32; grid.len()];
    data.par_chunks_mut(grid.width).enumerate().for_each(|(y, row)| {
        let mut state = MultiState::zeros(n);
        let mut scratch = MultiState::zeros(n);
        for (x, out) in row.iter_mut().enumerate() {
            *out = pixel(grid.point(x, y), &mut state, &mut scratch);
        }
    });
    Ok(EscapeRaster { grid: *grid, data, max_iter, escape_radius })
}

fn reset(state: &mut MultiState, z: Complex) {
    state.values.fill(z);
    state.overflowed.fill(false);
}

/// Equi-M set: every node gets parameter `c` (the pixel), orbit starts at the origin.
pub fn equi_m_raster(net: &Network, grid: &GridSpec, max_iter: u32, escape_radius: f64) -> Result<EscapeRaster> {
    render(grid, net.n(), max_iter, escape_radius, |c, state, scratch| {
        reset(state, Complex::new(0.0, 0.0));
        escape_time(net, NodeParams::Equi(c), state, scratch, Criterion::AllNodes, max_iter, escape_radius)
    })
}

/// Node-wise equi-M set of node `node` (0-based).
pub fn node_m_raster(net: &Network, node: usize, grid: &GridSpec, max_iter: u32, escape_radius: f64) -> Result<EscapeRaster> {
    if node >= net.n() {
        return Err(Error::IndexOutOfRange { index: node, n: net.n() });
    }
    render(grid, net.n(), max_iter, escape_radius, |c, state, scratch| {
        reset(state, Complex::new(0.0, 0.0));
        escape_time(net, NodeParams::Equi(c), state, scratch, Criterion::Node(node), max_iter, escape_radius)
    })
}

/// Uni-prisoner raster: the pixel `z0` is lifted to `(z0, ..., z0)` and iterated with the network's parameters.
pub fn uni_j_raster(net: &Network, grid: &GridSpec, max_iter: u32, escape_radius: f64) -> Result<EscapeRaster> {
    render(grid, net.n(), max_iter, escape_radius, |z0, state, scratch| {
        reset(state, z0);
        escape_time(net, NodeParams::PerNode(net.params()), state, scratch, Criterion::AllNodes, max_iter, escape_radius)
    })
}

pub fn prisoner_mask(r: &EscapeRaster) -> BinaryRaster {
    BinaryRaster { grid: r.grid, mask: r.data.iter().map(|&v| v == BOUNDED).collect() }
}

/// Foreground pixels with at least one background 8-neighbor; outside the window counts as background.
pub fn boundary_mask(b: &BinaryRaster) -> BinaryRaster {
    let (w, h) = (b.width(), b.height());
    let mut mask = vec![false; b.mask.len()];
    for y in 0..h {
        for x in 0..w {
            if !b.get(x, y) {
                continue;
            }
            let mut edge = false;
            'scan: for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 || !b.get(nx as usize, ny as usize) {
                        edge = true;
                        break 'scan;
                    }
                }
            }
            mask[y * w + x] = edge;
        }
    }
    BinaryRaster { grid: b.grid, mask }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::FamilySpec;

    fn scalar() -> Network {
        FamilySpec::Single.build().unwrap()
    }

    fn grid(n: usize) -> GridSpec {
        GridSpec::square(-2.0, 1.0, -1.5, 1.5, n).unwrap()
    }

    #[test]
    fn pixel_centers() {
        let g = GridSpec::new(0.0, 4.0, 0.0, 2.0, 4, 2).unwrap();
        assert_eq!(g.point(0, 0), Complex::new(0.5, 1.5));
        assert_eq!(g.point(3, 1), Complex::new(3.5, 0.5));
        assert_eq!(g.pixel_of(Complex::new(3.9, 0.1)), Some((3, 1)));
        assert_eq!(g.pixel_of(Complex::new(4.1, 0.1)), None);
        assert!(GridSpec::new(1.0, 0.0, 0.0, 1.0, 3, 3).is_err());
        assert!(GridSpec::new(0.0, 1.0, 0.0, 1.0, 0, 3).is_err());
    }

    #[test]
    fn scalar_equi_m_membership() {
        let r = equi_m_raster(&scalar(), &grid(200), 50, 20.0).unwrap();
        assert_eq!(r.at_point(Complex::new(0.0, 0.0)), Some(BOUNDED));
        assert!(r.at_point(Complex::new(0.5, 0.0)).unwrap() > 0);
    }

    #[test]
    fn self_drive_equi_m_landmarks() {
        let g = grid(400);
        let sd = FamilySpec::SelfDrive { a: -1.0, b: -1.0 }.build().unwrap();
        let r = equi_m_raster(&sd, &g, 50, 20.0).unwrap();
        assert_eq!(r.at_point(Complex::new(-1.0, 0.0)), Some(BOUNDED));
        assert!(r.at_point(Complex::new(-0.75, 0.0)).unwrap() > 0);

        // c = -1 itself escapes late (t = 132) from a set whose nearby pixel centers stay bounded
        let third = FamilySpec::SelfDrive { a: -2.0 / 3.0, b: -1.0 / 3.0 }.build().unwrap();
        let r = equi_m_raster(&third, &g, 50, 20.0).unwrap();
        assert_eq!(r.at_point(Complex::new(-1.0, 0.0)), Some(BOUNDED));
        let exact = third.with_equi_param(Complex::new(-1.0, 0.0)).iterate_orbit(&MultiState::zeros(3), 1000, 20.0).unwrap();
        assert_eq!(exact.escape_iter, Some(132));
    }

    #[test]
    fn node_rasters() {
        let g = grid(200);
        let minus_one = Complex::new(-1.0, 0.0);
        let sd = FamilySpec::SelfDrive { a: -1.0, b: -1.0 }.build().unwrap();
        let node1 = node_m_raster(&sd, 0, &g, 50, 20.0).unwrap();
        let classic = equi_m_raster(&scalar(), &g, 50, 20.0).unwrap();
        assert_eq!(node1.data, classic.data);
        assert_eq!(node_m_raster(&sd, 1, &g, 50, 20.0).unwrap().at_point(minus_one), Some(BOUNDED));

        let short = FamilySpec::SelfDrive { a: 0.75, b: -1.0 }.build().unwrap();
        assert!(node_m_raster(&short, 1, &g, 50, 20.0).unwrap().at_point(minus_one).unwrap() > 0);
        assert!(node_m_raster(&short, 3, &g, 50, 20.0).is_err());
    }

    #[test]
    fn filled_unit_disc() {
        let g = GridSpec::square(-1.5, 1.5, -1.5, 1.5, 61).unwrap();
        let r = uni_j_raster(&scalar(), &g, 50, 20.0).unwrap();
        for y in 0..61 {
            for x in 0..61 {
                let z = g.point(x, y).norm();
                if z < 0.95 {
                    assert_eq!(r.get(x, y), BOUNDED);
                } else if z > 1.05 {
                    assert!(r.get(x, y) > 0);
                }
            }
        }
    }

    #[test]
    fn far_pixels_escape_immediately() {
        let g = GridSpec::square(30.0, 40.0, -5.0, 5.0, 4).unwrap();
        let r = uni_j_raster(&scalar(), &g, 50, 20.0).unwrap();
        assert!(r.data.iter().all(|&v| v == 1));
    }

    #[test]
    fn masks() {
        let g = GridSpec::square(0.0, 1.0, 0.0, 1.0, 3).unwrap();
        let all = EscapeRaster { grid: g, data: vec![BOUNDED; 9], max_iter: 5, escape_radius: 2.0 };
        assert_eq!(prisoner_mask(&all).count(), 9);
        let none = EscapeRaster { data: vec![3; 9], ..all.clone() };
        assert_eq!(prisoner_mask(&none).count(), 0);
        let mixed = EscapeRaster { data: vec![-1, 2, -1, 4, -1, -1, 1, 1, 5], ..all.clone() };
        assert_eq!(prisoner_mask(&mixed).count(), 4);

        // 3x3 block: every pixel but the center touches the window edge
        assert_eq!(boundary_mask(&prisoner_mask(&all)).count(), 8);
        let big = BinaryRaster::new(GridSpec::square(0.0, 1.0, 0.0, 1.0, 5).unwrap(), vec![true; 25]).unwrap();
        let frame = boundary_mask(&big);
        assert_eq!(frame.count(), 16);
        assert!(!frame.get(2, 2));
        let mut single = vec![false; 25];
        single[12] = true;
        let single = BinaryRaster::new(big.grid, single).unwrap();
        assert_eq!(boundary_mask(&single), single);
    }
}
