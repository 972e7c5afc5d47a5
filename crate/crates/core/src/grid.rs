//! Uniform rectangular lattices over `ℝᵈ`, `d ≤ 3`.

use std::fmt;
use std::ops::Deref;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 3;

/// Absolute tolerance used when matching coordinates to nodes.
pub const NODE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite bounds {lo}..{hi}")));
        }
        if lo >= hi {
            return Err(Error::InvalidGrid(format!("need lo < hi, got {lo}..{hi}")));
        }
        if count < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 nodes, got {count}")));
        }
        Ok(Axis { lo, hi, count })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.count - 1) as f64
    }

    /// Coordinate of node `i`.
    ///
    /// The fraction `i / (count − 1)` is reduced before scaling, so a node
    /// keeps bit-identical coordinates under refinement.
    pub fn coord(&self, i: usize) -> f64 {
        let n = self.count - 1;
        if i == 0 {
            return self.lo;
        }
        if i == n {
            return self.hi;
        }
        let g = gcd(i, n);
        let (p, q) = (i / g, n / g);
        self.lo + (self.hi - self.lo) * p as f64 / q as f64
    }

    /// Index of the node at `x`, if one lies within [`NODE_TOL`].
    pub fn locate(&self, x: f64) -> Option<usize> {
        let t = ((x - self.lo) / self.step()).round();
        if !(t >= 0.0 && t <= (self.count - 1) as f64) {
            return None;
        }
        let i = t as usize;
        ((self.coord(i) - x).abs() <= NODE_TOL).then_some(i)
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// A closed box sampled uniformly along each axis. Nodes are enumerated in
/// row-major order: the last axis varies fastest.
#[derive(Clone, Debug)]
pub struct Grid {
    axes: Vec<Axis>,
    ticks: Vec<Vec<f64>>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.axes == other.axes
    }
}

impl Serialize for Grid {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.axes.serialize(serializer)
    }
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("a grid needs at least one axis".into()));
        }
        if axes.len() > MAX_DIM {
            return Err(Error::UnsupportedDimension(axes.len()));
        }
        for a in &axes {
            Axis::new(a.lo, a.hi, a.count)?;
        }
        let ticks = axes.iter().map(|a| (0..a.count).map(|i| a.coord(i)).collect()).collect();
        Ok(Grid { axes, ticks })
    }

    /// One-dimensional grid with `count` nodes from `lo` to `hi`.
    pub fn uniform(lo: f64, hi: f64, count: usize) -> Result<Self> {
        Grid::new(vec![Axis::new(lo, hi, count)?])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    /// Node coordinates along axis `k`.
    pub fn ticks(&self, k: usize) -> &[f64] {
        &self.ticks[k]
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            let n = self.axes[k].count;
            out[k] = index % n;
            index /= n;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dim());
        multi.iter().zip(&self.axes).fold(0, |acc, (&i, a)| acc * a.count + i)
    }

    pub fn coords(&self, index: usize) -> Vec<f64> {
        self.multi_index(index).iter().enumerate().map(|(k, &i)| self.ticks[k][i]).collect()
    }

    /// Writes the coordinates of `index` into `out` without allocating.
    pub fn coords_into(&self, mut index: usize, out: &mut [f64]) {
        for k in (0..self.dim()).rev() {
            let n = self.axes[k].count;
            out[k] = self.ticks[k][index % n];
            index /= n;
        }
    }

    pub fn all_coords(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.coords(i)).collect()
    }

    pub fn locate(&self, point: &[f64]) -> Option<usize> {
        if point.len() != self.dim() {
            return None;
        }
        let multi: Option<Vec<usize>> = point.iter().zip(&self.axes).map(|(&x, a)| a.locate(x)).collect();
        multi.map(|m| self.flat_index(&m))
    }

    /// Like [`Grid::locate`] but reports a [`Error::NotANode`].
    pub fn node(&self, point: &[f64]) -> Result<usize> {
        self.locate(point).ok_or_else(|| Error::NotANode(point.to_vec()))
    }

    /// Each axis gets `(count − 1)·factor + 1` nodes over the same bounds.
    pub fn refine(&self, factor: usize) -> Grid {
        assert!(factor >= 1, "refinement factor must be positive");
        let axes = self.axes.iter().map(|a| Axis { lo: a.lo, hi: a.hi, count: (a.count - 1) * factor + 1 }).collect();
        Grid::new(axes).expect("refinement of a valid grid is valid")
    }

    /// Cartesian product; the axes of `self` come first.
    pub fn product(&self, other: &Grid) -> Result<Grid> {
        let mut axes = self.axes.clone();
        axes.extend_from_slice(&other.axes);
        Grid::new(axes)
    }

    /// True when the node lies on a face of the bounding box.
    pub fn is_boundary(&self, index: usize) -> bool {
        self.multi_index(index).iter().zip(&self.axes).any(|(&i, a)| i == 0 || i + 1 == a.count)
    }

    /// Nodes at Chebyshev index distance ≤ 1 from `index`, itself
    /// included, in ascending order.
    pub fn neighborhood(&self, index: usize) -> Vec<usize> {
        let center = self.multi_index(index);
        let mut out = Vec::with_capacity(3usize.pow(self.dim() as u32));
        let mut offset = vec![-1i64; self.dim()];
        loop {
            let cand: Option<Vec<usize>> = center
                .iter()
                .zip(&offset)
                .zip(&self.axes)
                .map(|((&c, &o), a)| {
                    let j = c as i64 + o;
                    (j >= 0 && (j as usize) < a.count).then_some(j as usize)
                })
                .collect();
            if let Some(m) = cand {
                out.push(self.flat_index(&m));
            }
            // odometer over {-1, 0, 1}^d
            let mut k = self.dim();
            loop {
                if k == 0 {
                    out.sort_unstable();
                    return out;
                }
                k -= 1;
                if offset[k] < 1 {
                    offset[k] += 1;
                    break;
                }
                offset[k] = -1;
            }
        }
    }

    /// Number of cells in the full `3ᵈ` box neighbourhood.
    pub fn full_neighborhood_len(&self) -> usize {
        3usize.pow(self.dim() as u32)
    }

    /// The grid restricted to the listed axes, in the given order.
    pub fn select_axes(&self, axes: &[usize]) -> Result<Grid> {
        Grid::new(axes.iter().map(|&k| self.axes[k]).collect())
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.axes.iter().map(|a| format!("{}:{}:{}", a.lo, a.hi, a.count)).collect();
        f.write_str(&parts.join(","))
    }
}

/// A grid whose nodes are read as dual vectors. The pairing with the
/// primal space is the Euclidean dot product.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualGrid(pub Grid);

impl DualGrid {
    pub fn new(grid: Grid) -> Self {
        DualGrid(grid)
    }

    pub fn uniform(lo: f64, hi: f64, count: usize) -> Result<Self> {
        Grid::uniform(lo, hi, count).map(DualGrid)
    }

    pub fn grid(&self) -> &Grid {
        &self.0
    }
}

impl Deref for DualGrid {
    type Target = Grid;

    fn deref(&self) -> &Grid {
        &self.0
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_coordinates() {
        let g = Grid::uniform(-1.0, 1.0, 3).unwrap();
        assert_eq!(g.all_coords(), vec![vec![-1.0], vec![0.0], vec![1.0]]);
    }

    #[test]
    fn refine_examples() {
        let g = Grid::uniform(0.0, 1.0, 2).unwrap().refine(2);
        assert_eq!(g.axis(0).count, 3);
        assert_eq!(g.ticks(0), &[0.0, 0.5, 1.0]);
        let g = Grid::uniform(-1.0, 1.0, 3).unwrap();
        assert_eq!(g.refine(1), g);
        assert_eq!(g.refine(3).axis(0).count, 7);
    }

    #[test]
    fn refined_nodes_keep_coordinates_bitwise() {
        let g = Grid::new(vec![Axis::new(-0.3, 1.7, 4).unwrap(), Axis::new(0.1, 0.2, 7).unwrap()]).unwrap();
        let r = g.refine(6);
        for i in 0..g.len() {
            let c = g.coords(i);
            let j = r.locate(&c).unwrap();
            assert_eq!(r.coords(j), c);
        }
    }

    #[test]
    fn index_round_trip() {
        let g =
            Grid::new(vec![Axis::new(0.0, 1.0, 3).unwrap(), Axis::new(-2.0, 2.0, 5).unwrap(), Axis::new(0.0, 1.0, 2).unwrap()]).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(i)), i);
            assert_eq!(g.locate(&g.coords(i)), Some(i));
        }
    }

    #[test]
    fn invalid_axes() {
        assert!(Axis::new(1.0, 1.0, 3).is_err());
        assert!(Axis::new(0.0, 1.0, 1).is_err());
        assert!(Grid::new(vec![Axis::new(0.0, 1.0, 2).unwrap(); 4]).is_err());
    }

    #[test]
    fn neighborhoods() {
        let g = Grid::new(vec![Axis::new(0.0, 1.0, 3).unwrap(), Axis::new(0.0, 1.0, 3).unwrap()]).unwrap();
        assert_eq!(g.neighborhood(4).len(), 9);
        assert_eq!(g.neighborhood(0), vec![0, 1, 3, 4]);
        assert!(g.is_boundary(0));
        assert!(!g.is_boundary(4));
    }

    #[test]
    fn off_grid_points() {
        let g = Grid::uniform(0.0, 1.0, 5).unwrap();
        assert_eq!(g.locate(&[0.25]), Some(1));
        assert_eq!(g.locate(&[0.3]), None);
        assert_eq!(g.locate(&[1.5]), None);
        assert!(matches!(g.node(&[0.3]), Err(Error::NotANode(_))));
    }
}
