//! Raster sets and the interior characterization of near convexity.
//!
//! Topology is one-cell morphology on the lattice: closure is dilation by
//! the `3ᵈ` box neighbourhood, interior is erosion. Nodes on the bounding
//! box are never interior.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, VarLayout};
use crate::func::{eval_on_grid, GriddedFunction};
use crate::grid::{Axis, Grid, MAX_DIM};
use crate::lp;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RasterSet {
    pub grid: Grid,
    pub mask: Vec<bool>,
    /// `{x : source(x) ≤ 0}` when the set was rasterized from an expression.
    #[serde(skip)]
    pub source: Option<Expr>,
}

const SOURCE_TOL: f64 = 1e-9;

impl RasterSet {
    pub fn new(grid: Grid, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!("{} mask entries for {} nodes", mask.len(), grid.len())));
        }
        Ok(RasterSet { grid, mask, source: None })
    }

    pub fn from_predicate(grid: Grid, pred: impl Fn(&[f64]) -> bool) -> Self {
        let mask = (0..grid.len()).map(|i| pred(&grid.coords(i))).collect();
        RasterSet { grid, mask, source: None }
    }

    /// Nodes where `expr ≤ 0`, with `x1..xd` as coordinates.
    pub fn from_expr(expr: &Expr, grid: Grid) -> Result<Self> {
        let v = eval_on_grid(expr, &grid, VarLayout::x(grid.dim()))?;
        let mask = v.values.iter().map(|&a| a.to_f64() <= SOURCE_TOL).collect();
        Ok(RasterSet { grid, mask, source: Some(expr.clone()) })
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn nodes(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&i| self.mask[i]).collect()
    }

    fn same_grid(&self, other: &RasterSet) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{} vs {}", self.grid, other.grid)));
        }
        Ok(())
    }

    fn with_mask(&self, mask: Vec<bool>) -> RasterSet {
        RasterSet { grid: self.grid.clone(), mask, source: None }
    }

    pub fn closure(&self) -> RasterSet {
        let mut out = vec![false; self.mask.len()];
        for i in self.nodes() {
            for j in self.grid.neighborhood(i) {
                out[j] = true;
            }
        }
        self.with_mask(out)
    }

    pub fn interior(&self) -> RasterSet {
        let out = (0..self.mask.len())
            .map(|i| self.mask[i] && !self.grid.is_boundary(i) && self.grid.neighborhood(i).iter().all(|&j| self.mask[j]))
            .collect();
        self.with_mask(out)
    }

    pub fn intersection(&self, other: &RasterSet) -> Result<RasterSet> {
        self.same_grid(other)?;
        Ok(self.with_mask(self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect()))
    }

    /// `self ⊆ other`; the first offending node otherwise.
    pub fn subset_witness(&self, other: &RasterSet) -> Option<usize> {
        (0..self.mask.len()).find(|&i| self.mask[i] && !other.mask[i])
    }

    /// A false node inside the convex hull of the true nodes, if any.
    pub fn convexity_witness(&self) -> Option<usize> {
        let pts: Vec<Vec<i64>> =
            self.nodes().into_iter().map(|i| self.grid.multi_index(i).into_iter().map(|k| k as i64).collect()).collect();
        if pts.is_empty() {
            return None;
        }
        let d = self.grid.dim();
        let lo: Vec<i64> = (0..d).map(|k| pts.iter().map(|p| p[k]).min().unwrap()).collect();
        let hi: Vec<i64> = (0..d).map(|k| pts.iter().map(|p| p[k]).max().unwrap()).collect();
        let candidates = (0..self.mask.len()).filter(|&i| {
            !self.mask[i] && self.grid.multi_index(i).iter().enumerate().all(|(k, &c)| lo[k] <= c as i64 && c as i64 <= hi[k])
        });
        match d {
            1 => candidates.into_iter().next(),
            2 => {
                let hull = hull_2d(pts);
                candidates.into_iter().find(|&i| {
                    let m = self.grid.multi_index(i);
                    in_hull_2d(&hull, [m[0] as i64, m[1] as i64])
                })
            }
            _ => {
                // hull vertices are nodes with a neighbour outside the set
                let extreme: Vec<Vec<f64>> = self
                    .nodes()
                    .into_iter()
                    .filter(|&i| self.grid.is_boundary(i) || self.grid.neighborhood(i).iter().any(|&j| !self.mask[j]))
                    .map(|i| self.grid.multi_index(i).into_iter().map(|k| k as f64).collect())
                    .collect();
                candidates.into_iter().find(|&i| {
                    let p: Vec<f64> = self.grid.multi_index(i).into_iter().map(|k| k as f64).collect();
                    in_hull_lp(&extreme, &p)
                })
            }
        }
    }

    /// Every lattice node inside the hull of the set belongs to the set.
    pub fn is_convex(&self) -> bool {
        self.convexity_witness().is_none()
    }

    /// The set on a grid refined by `factor`. Sets rasterized from an
    /// expression are re-rasterized. Otherwise a refined node is kept when
    /// every coarse corner of the smallest face containing it is set.
    pub fn refine(&self, factor: usize) -> Result<RasterSet> {
        let fine = self.grid.refine(factor);
        if let Some(e) = &self.source {
            return RasterSet::from_expr(e, fine);
        }
        let d = fine.dim();
        let mask = (0..fine.len())
            .map(|i| {
                let m = fine.multi_index(i);
                let mut corners: Vec<Vec<usize>> = vec![Vec::with_capacity(d)];
                for &a in &m {
                    let (lo, hi) = (a / factor, a.div_ceil(factor));
                    let mut next = Vec::with_capacity(corners.len() * 2);
                    for c in &corners {
                        for v in if lo == hi { vec![lo] } else { vec![lo, hi] } {
                            let mut c2 = c.clone();
                            c2.push(v);
                            next.push(c2);
                        }
                    }
                    corners = next;
                }
                corners.iter().all(|c| self.mask[self.grid.flat_index(c)])
            })
            .collect();
        Ok(RasterSet { grid: fine, mask, source: None })
    }

    /// Parses `raster <d> <counts…> <lo hi per axis>` followed by rows of
    /// `0`/`1` (last axis along a row). Blank lines and `#` comments are
    /// skipped.
    pub fn parse(text: &str) -> Result<RasterSet> {
        let mut lines = text.lines().map(|l| l.split('#').next().unwrap_or("").trim()).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::RasterFormat("missing header".into()))?;
        let tok: Vec<&str> = header.split_whitespace().collect();
        if tok.first() != Some(&"raster") || tok.len() < 2 {
            return Err(Error::RasterFormat(format!("bad header `{header}`")));
        }
        let d: usize = tok[1].parse().map_err(|_| Error::RasterFormat(format!("bad dimension `{}`", tok[1])))?;
        if d == 0 || d > MAX_DIM {
            return Err(Error::UnsupportedDimension(d));
        }
        if tok.len() != 2 + 3 * d {
            return Err(Error::RasterFormat(format!("header needs {} fields, got {}", 2 + 3 * d, tok.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::RasterFormat(format!("bad number `{s}`")));
        let mut axes = Vec::with_capacity(d);
        for k in 0..d {
            let count: usize = tok[2 + k].parse().map_err(|_| Error::RasterFormat(format!("bad count `{}`", tok[2 + k])))?;
            let lo = num(tok[2 + d + 2 * k])?;
            let hi = num(tok[3 + d + 2 * k])?;
            axes.push(Axis::new(lo, hi, count)?);
        }
        let grid = Grid::new(axes)?;
        let mut mask = Vec::with_capacity(grid.len());
        for line in lines {
            for c in line.chars().filter(|c| !c.is_whitespace()) {
                match c {
                    '0' => mask.push(false),
                    '1' => mask.push(true),
                    _ => return Err(Error::RasterFormat(format!("unexpected `{c}` in mask"))),
                }
            }
        }
        if mask.len() != grid.len() {
            return Err(Error::RasterFormat(format!("{} mask cells for {} nodes", mask.len(), grid.len())));
        }
        RasterSet::new(grid, mask)
    }

    pub fn to_text(&self) -> String {
        let d = self.grid.dim();
        let mut s = format!("raster {d}");
        for a in self.grid.axes() {
            write!(s, " {}", a.count).unwrap();
        }
        for a in self.grid.axes() {
            write!(s, " {} {}", a.lo, a.hi).unwrap();
        }
        s.push('\n');
        let row = self.grid.axis(d - 1).count;
        for chunk in self.mask.chunks(row) {
            s.extend(chunk.iter().map(|&b| if b { '1' } else { '0' }));
            s.push('\n');
        }
        s
    }
}

fn cross(o: [i64; 2], a: [i64; 2], b: [i64; 2]) -> i64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise hull without collinear points (monotone chain).
fn hull_2d(pts: Vec<Vec<i64>>) -> Vec<[i64; 2]> {
    let mut p: Vec<[i64; 2]> = pts.into_iter().map(|v| [v[0], v[1]]).collect();
    p.sort_unstable();
    p.dedup();
    if p.len() <= 2 {
        return p;
    }
    let mut hull: Vec<[i64; 2]> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[i64; 2]>> = if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

fn in_hull_2d(hull: &[[i64; 2]], q: [i64; 2]) -> bool {
    match hull.len() {
        0 => false,
        1 => hull[0] == q,
        2 => {
            let (a, b) = (hull[0], hull[1]);
            cross(a, b, q) == 0 && (q[0] - a[0]) * (b[0] - q[0]) >= 0 && (q[1] - a[1]) * (b[1] - q[1]) >= 0
        }
        n => (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], q) >= 0),
    }
}

/// `p ∈ conv(V)` iff no `a` satisfies `a·(v − p) ≤ −1` for all `v ∈ V`.
fn in_hull_lp(v: &[Vec<f64>], p: &[f64]) -> bool {
    let normals: Vec<Vec<f64>> = v.iter().map(|q| q.iter().zip(p).map(|(a, b)| a - b).collect()).collect();
    let bounds = vec![-1.0; normals.len()];
    lp::feasible_point(&normals, &bounds, p.len()).is_none()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NearConvexVerdict {
    pub verdict: bool,
    pub closure_convex: bool,
    pub interior_nonempty: bool,
    pub interior_in_set: bool,
    /// Node that breaks the first failing condition.
    pub witness: Option<usize>,
}

/// `S` is int-nearly convex iff `cl S` is convex and `∅ ≠ int cl S ⊆ S`.
pub fn is_int_nearly_convex(s: &RasterSet) -> NearConvexVerdict {
    let cl = s.closure();
    let hull_gap = cl.convexity_witness();
    let int = cl.interior();
    let interior_nonempty = !int.is_empty();
    let outside = int.subset_witness(s);
    let closure_convex = hull_gap.is_none();
    let interior_in_set = outside.is_none();
    NearConvexVerdict {
        verdict: closure_convex && interior_nonempty && interior_in_set,
        closure_convex,
        interior_nonempty,
        interior_in_set,
        witness: hull_gap.or(outside),
    }
}

/// `C` is convex and `C ⊆ S ⊆ cl C`.
pub fn is_nearly_convex_with_witness(s: &RasterSet, c: &RasterSet) -> Result<bool> {
    s.same_grid(c)?;
    Ok(c.is_convex() && c.subset_witness(s).is_none() && s.subset_witness(&c.closure()).is_none())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntersectionReport {
    pub first: NearConvexVerdict,
    pub second: NearConvexVerdict,
    pub intersection: NearConvexVerdict,
    pub pass: bool,
}

/// The intersection of two int-nearly convex rasters with overlapping
/// interiors is int-nearly convex.
pub fn intersection_preservation_check(s1: &RasterSet, s2: &RasterSet) -> Result<IntersectionReport> {
    s1.same_grid(s2)?;
    let first = is_int_nearly_convex(s1);
    let second = is_int_nearly_convex(s2);
    if !first.verdict || !second.verdict {
        return Err(Error::HypothesisNotMet("both sets must be int-nearly convex".into()));
    }
    if s1.interior().intersection(&s2.interior())?.is_empty() {
        return Err(Error::HypothesisNotMet("interiors are disjoint".into()));
    }
    let intersection = is_int_nearly_convex(&s1.intersection(s2)?);
    Ok(IntersectionReport { pass: intersection.verdict, first, second, intersection })
}

/// `x ↦ M x` with an integer matrix, landing on the nodes of `target`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    pub matrix: Vec<Vec<i64>>,
    pub target: Grid,
}

impl LinearMap {
    /// Keeps the listed coordinates of the source grid.
    pub fn projection(source: &Grid, axes: &[usize]) -> Result<LinearMap> {
        let matrix = axes.iter().map(|&k| (0..source.dim()).map(|j| i64::from(j == k)).collect()).collect();
        Ok(LinearMap { matrix, target: source.select_axes(axes)? })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.iter().map(|row| row.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum()).collect()
    }

    /// `T(S)` on the target grid.
    pub fn image(&self, s: &RasterSet) -> Result<RasterSet> {
        if self.matrix.iter().any(|r| r.len() != s.grid.dim()) || self.matrix.len() != self.target.dim() {
            return Err(Error::DimensionMismatch("matrix shape does not match the grids".into()));
        }
        let mut mask = vec![false; self.target.len()];
        for i in 0..s.grid.len() {
            let y = self.apply(&s.grid.coords(i));
            let j = self.target.locate(&y).ok_or_else(|| Error::NotNodePreserving(format!("{:?} ↦ {y:?}", s.grid.coords(i))))?;
            if s.mask[i] {
                mask[j] = true;
            }
        }
        RasterSet::new(self.target.clone(), mask)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImageReport {
    pub image: NearConvexVerdict,
    /// Nodes where `int T(S)` and `T(int S)` differ.
    pub interior_mismatch: Vec<usize>,
    /// Mismatches deeper than one cell inside `T(S)`.
    pub deep_mismatch: Vec<usize>,
    pub pass: bool,
}

/// `T(S)` stays int-nearly convex and `int T(S) = T(int S)` up to one
/// boundary cell.
pub fn image_preservation_check(s: &RasterSet, t: &LinearMap) -> Result<ImageReport> {
    if !is_int_nearly_convex(s).verdict {
        return Err(Error::HypothesisNotMet("source set is not int-nearly convex".into()));
    }
    let ts = t.image(s)?;
    let image = is_int_nearly_convex(&ts);
    let lhs = ts.interior();
    let rhs = t.image(&s.interior())?;
    let deep = ts.interior().interior();
    let interior_mismatch: Vec<usize> = (0..ts.mask.len()).filter(|&i| lhs.mask[i] != rhs.mask[i]).collect();
    let deep_mismatch: Vec<usize> = interior_mismatch.iter().copied().filter(|&i| deep.mask[i]).collect();
    Ok(ImageReport { pass: image.verdict && deep_mismatch.is_empty(), image, interior_mismatch, deep_mismatch })
}

/// `{(x, λ) : f(x) ≤ λ}` on `f.grid × levels`.
pub fn epigraph_raster(f: &GriddedFunction, levels: &Grid) -> Result<RasterSet> {
    if levels.dim() != 1 {
        return Err(Error::DimensionMismatch("levels must be one-dimensional".into()));
    }
    let grid = f.grid.product(levels)?;
    let nl = levels.len();
    let mask = (0..grid.len()).map(|i| f.values[i / nl] <= crate::ext::ExtReal::new(levels.coords(i % nl)[0] + SOURCE_TOL)).collect();
    RasterSet::new(grid, mask)
}

/// Nodes where `f < +∞`.
pub fn domain_raster(f: &GriddedFunction) -> RasterSet {
    let mask = f.values.iter().map(|v| !v.is_pos_inf()).collect();
    RasterSet { grid: f.grid.clone(), mask, source: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize) -> Grid {
        Grid::new(vec![Axis::new(0.0, 1.0, n).unwrap(); 2]).unwrap()
    }

    fn open_box_and_corner() -> RasterSet {
        let g = square(21);
        let n = g.len();
        let mut s = RasterSet::from_predicate(g.clone(), |_| false);
        for i in 0..n {
            s.mask[i] = !g.is_boundary(i);
        }
        s.mask[0] = true;
        s
    }

    fn box_minus_center() -> RasterSet {
        let mut s = RasterSet::from_predicate(square(21), |_| true);
        let c = s.grid.node(&[0.5, 0.5]).unwrap();
        s.mask[c] = false;
        s
    }

    fn two_intervals() -> RasterSet {
        RasterSet::from_predicate(Grid::uniform(0.0, 3.0, 13).unwrap(), |x| x[0] <= 1.0 || x[0] >= 2.0)
    }

    #[test]
    fn characterization_examples() {
        assert!(is_int_nearly_convex(&open_box_and_corner()).verdict);
        let v = is_int_nearly_convex(&two_intervals());
        assert!(!v.verdict && !v.closure_convex);
        let s = box_minus_center();
        let v = is_int_nearly_convex(&s);
        assert!(!v.verdict);
        assert_eq!(v.witness, Some(s.grid.node(&[0.5, 0.5]).unwrap()));
    }

    #[test]
    fn verdicts_survive_refinement() {
        for s in [open_box_and_corner(), two_intervals(), box_minus_center()] {
            let a = is_int_nearly_convex(&s);
            let r = s.refine(2).unwrap();
            let b = is_int_nearly_convex(&r);
            assert_eq!(a.verdict, b.verdict);
        }
        let s = box_minus_center().refine(2).unwrap();
        assert_eq!(is_int_nearly_convex(&s).witness, Some(s.grid.node(&[0.5, 0.5]).unwrap()));
    }

    #[test]
    fn morphology_laws() {
        let s = box_minus_center();
        let (cl, int) = (s.closure(), s.interior());
        assert!(int.subset_witness(&s).is_none());
        assert!(s.subset_witness(&cl).is_none());
        assert_eq!(cl.closure().closure(), cl.closure());
        assert_eq!(int.interior().subset_witness(&int), None);
    }

    #[test]
    fn convex_flag() {
        let diamond = RasterSet::from_expr(&Expr::parse("abs(x1 - 0.5) + abs(x2 - 0.5) - 0.4").unwrap(), square(21)).unwrap();
        assert!(diamond.is_convex());
        let ring = RasterSet::from_predicate(square(11), |x| {
            let r = (x[0] - 0.5).hypot(x[1] - 0.5);
            (0.2..=0.45).contains(&r)
        });
        assert!(!ring.is_convex());
        let g3 = Grid::new(vec![Axis::new(0.0, 1.0, 7).unwrap(); 3]).unwrap();
        let ball = RasterSet::from_predicate(g3.clone(), |x| x.iter().map(|v| (v - 0.5).powi(2)).sum::<f64>() <= 0.2);
        assert!(ball.is_convex());
        let mut holed = ball.clone();
        holed.mask[g3.node(&[0.5, 0.5, 0.5]).unwrap()] = false;
        assert_eq!(holed.convexity_witness(), g3.locate(&[0.5, 0.5, 0.5]));
    }

    #[test]
    fn witness_based_near_convexity() {
        let g = square(11);
        let box_ = RasterSet::from_predicate(g.clone(), |x| x[0] <= 0.5 && x[1] <= 0.5);
        assert!(is_nearly_convex_with_witness(&box_, &box_).unwrap());
        let mut far = box_.clone();
        far.mask[g.len() - 1] = true;
        assert!(!is_nearly_convex_with_witness(&far, &box_).unwrap());
        let inner = RasterSet::from_predicate(g.clone(), |x| x[0] <= 0.4 && x[1] <= 0.4);
        assert!(is_nearly_convex_with_witness(&inner.closure(), &inner).unwrap());
        let other = RasterSet::from_predicate(square(5), |_| true);
        assert!(matches!(is_nearly_convex_with_witness(&box_, &other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn intersections() {
        let g = square(21);
        let a = RasterSet::from_predicate(g.clone(), |x| x[0] <= 0.7 && x[1] <= 0.7);
        let b = RasterSet::from_predicate(g.clone(), |x| x[0] >= 0.3 && x[1] >= 0.3);
        assert!(intersection_preservation_check(&a, &b).unwrap().pass);

        let left = RasterSet::from_predicate(g.clone(), |x| x[0] <= 0.5);
        let right = RasterSet::from_predicate(g.clone(), |x| x[0] >= 0.5);
        assert!(matches!(intersection_preservation_check(&left, &right), Err(Error::HypothesisNotMet(_))));

        let diamond = RasterSet::from_expr(&Expr::parse("abs(x1 - 0.5) + abs(x2 - 0.5) - 0.45").unwrap(), g).unwrap();
        assert!(intersection_preservation_check(&a, &diamond).unwrap().pass);
    }

    #[test]
    fn projections() {
        let g = square(11);
        let full = RasterSet::from_predicate(g.clone(), |_| true);
        let p = LinearMap::projection(&g, &[0]).unwrap();
        let r = image_preservation_check(&full, &p).unwrap();
        assert!(r.pass && r.interior_mismatch.is_empty());
        let id = LinearMap { matrix: vec![vec![1, 0], vec![0, 1]], target: g.clone() };
        assert!(image_preservation_check(&full, &id).unwrap().pass);

        let f = GriddedFunction::from_fn(Grid::uniform(-1.0, 1.0, 9).unwrap(), |x| {
            if x[0] < -0.6 {
                crate::ext::ExtReal::PosInf
            } else {
                crate::ext::ExtReal::new(x[0] * x[0])
            }
        });
        let epi = epigraph_raster(&f, &Grid::uniform(-0.5, 2.0, 11).unwrap()).unwrap();
        let p1 = LinearMap::projection(&epi.grid, &[0]).unwrap();
        let r = image_preservation_check(&epi, &p1).unwrap();
        assert!(r.pass);
        assert_eq!(p1.image(&epi).unwrap().mask, domain_raster(&f).mask);

        let skew = LinearMap { matrix: vec![vec![1, 1]], target: Grid::uniform(0.0, 1.0, 11).unwrap() };
        assert!(matches!(skew.image(&full), Err(Error::NotNodePreserving(_))));
    }

    #[test]
    fn text_round_trip() {
        let s = box_minus_center();
        let back = RasterSet::parse(&s.to_text()).unwrap();
        assert_eq!(back.mask, s.mask);
        assert_eq!(back.grid, s.grid);
        assert!(matches!(RasterSet::parse("raster 1 3 0 1\n01"), Err(Error::RasterFormat(_))));
        assert!(matches!(RasterSet::parse("grid 1 3 0 1\n010"), Err(Error::RasterFormat(_))));
    }
}
