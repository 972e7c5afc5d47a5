//! Fenchel conjugates, biconjugates, support functions and infimal
//! convolution of gridded functions.
//!
//! [`conjugate`] is the direct maximization over primal nodes.
//! [`conjugate_fast`] is the linear-time Legendre transform: a lower convex
//! hull per grid line followed by a monotone merge against the sorted dual
//! ticks, applied one axis at a time.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::func::GriddedFunction;
use crate::grid::{dot, Axis, DualGrid, Grid};

/// `sup_x ⟨s, x⟩ − f(x)` at a single dual point, with the lowest index
/// attaining it. `None` when no node has `f < +∞`.
pub fn conjugate_at(f: &GriddedFunction, s: &[f64]) -> (ExtReal, Option<usize>) {
    if f.values.iter().any(|v| v.is_neg_inf()) {
        return (ExtReal::PosInf, None);
    }
    let mut best = ExtReal::NegInf;
    let mut arg = None;
    let mut x = vec![0.0; f.grid.dim()];
    for (i, &v) in f.values.iter().enumerate() {
        let Some(fv) = v.finite() else { continue };
        f.grid.coords_into(i, &mut x);
        let val = ExtReal::new(dot(s, &x) - fv);
        if val > best {
            best = val;
            arg = Some(i);
        }
    }
    (best, arg)
}

/// Conjugate of `f` sampled on an arbitrary grid of dual points.
pub fn conjugate_onto(f: &GriddedFunction, target: &Grid) -> Result<GriddedFunction> {
    if target.dim() != f.grid.dim() {
        return Err(Error::DimensionMismatch(format!("function on {}-D grid, duals are {}-D", f.grid.dim(), target.dim())));
    }
    let values = (0..target.len()).into_par_iter().map(|j| conjugate_at(f, &target.coords(j)).0).collect();
    Ok(GriddedFunction { grid: target.clone(), values, provenance: None })
}

/// `f*(s) = max { ⟨s, x⟩ − f(x) : f(x) < +∞ }` at every dual node.
pub fn conjugate(f: &GriddedFunction, duals: &DualGrid) -> Result<GriddedFunction> {
    conjugate_onto(f, duals.grid())
}

/// `f**` on the primal grid of `f`, through the conjugate on `duals`.
pub fn biconjugate(f: &GriddedFunction, duals: &DualGrid) -> Result<GriddedFunction> {
    let fstar = conjugate(f, duals)?;
    conjugate_onto(&fstar, &f.grid)
}

/// Same values as [`conjugate`] in `O(n + m)` per grid line.
pub fn conjugate_fast(f: &GriddedFunction, duals: &DualGrid) -> Result<GriddedFunction> {
    let d = f.grid.dim();
    if duals.dim() != d {
        return Err(Error::UnsupportedShape(format!("{}-D duals for a {}-D function", duals.dim(), d)));
    }
    if f.values.iter().any(|v| v.is_neg_inf()) {
        return Ok(GriddedFunction::constant(duals.grid().clone(), ExtReal::PosInf));
    }
    // `shape[k]` switches from primal to dual count once axis k is done
    let mut shape = f.grid.shape();
    let mut data: Vec<f64> = f.values.iter().map(|v| v.to_f64()).collect();
    for k in (0..d).rev() {
        let xs = f.grid.ticks(k);
        let ss = duals.ticks(k);
        let mut out_shape = shape.clone();
        out_shape[k] = ss.len();
        let inner: usize = shape[k + 1..].iter().product();
        let outer: usize = shape[..k].iter().product();
        let mut out = vec![0.0; outer * ss.len() * inner];
        let mut line = vec![0.0; xs.len()];
        let mut res = vec![0.0; ss.len()];
        for o in 0..outer {
            for i in 0..inner {
                for (t, slot) in line.iter_mut().enumerate() {
                    *slot = data[(o * xs.len() + t) * inner + i];
                }
                legendre_line(xs, &line, ss, &mut res);
                for (t, &v) in res.iter().enumerate() {
                    // between axes the partial conjugate is negated so the
                    // next pass sees a function to conjugate again
                    out[(o * ss.len() + t) * inner + i] = if k > 0 { -v } else { v };
                }
            }
        }
        data = out;
        shape = out_shape;
    }
    let values = data.into_iter().map(ExtReal::new).collect();
    Ok(GriddedFunction { grid: duals.grid().clone(), values, provenance: None })
}

/// One-dimensional transform `res[j] = max_i ss[j]·xs[i] − ys[i]` over
/// nodes with `ys[i] < +∞`; `−∞` when there are none. `xs` and `ss` are
/// ascending.
fn legendre_line(xs: &[f64], ys: &[f64], ss: &[f64], res: &mut [f64]) {
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        if ys[i] == f64::INFINITY {
            continue;
        }
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    if hull.is_empty() {
        res.iter_mut().for_each(|r| *r = f64::NEG_INFINITY);
        return;
    }
    let val = |s: f64, i: usize| s * xs[i] - ys[i];
    let mut j = 0;
    for (r, &s) in res.iter_mut().zip(ss) {
        // along the hull, s·x − y is unimodal in the vertex index and its
        // peak moves right as s grows
        while j + 1 < hull.len() && val(s, hull[j + 1]) > val(s, hull[j]) {
            j += 1;
        }
        while j > 0 && val(s, hull[j - 1]) >= val(s, hull[j]) {
            j -= 1;
        }
        *r = val(s, hull[j]);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InfConvolution {
    pub function: GriddedFunction,
    /// Finite-valued input pairs whose sum is not a node of the output grid.
    pub off_grid_pairs: usize,
}

/// `(g1 □ g2)(x) = min { g1(x1) + g2(x2) : x1 + x2 = x }` over node pairs,
/// with `+∞` where no pair sums to `x`.
pub fn inf_convolution(g1: &GriddedFunction, g2: &GriddedFunction, out: &Grid) -> Result<InfConvolution> {
    if g1.grid.dim() != g2.grid.dim() || g1.grid.dim() != out.dim() {
        return Err(Error::DimensionMismatch("inf-convolution operands differ in dimension".into()));
    }
    let mut values = vec![ExtReal::PosInf; out.len()];
    let mut off_grid_pairs = 0;
    let d = out.dim();
    let (mut a, mut b, mut s) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    for (i, &u) in g1.values.iter().enumerate() {
        if u.is_pos_inf() {
            continue;
        }
        g1.grid.coords_into(i, &mut a);
        for (j, &v) in g2.values.iter().enumerate() {
            if v.is_pos_inf() {
                continue;
            }
            g2.grid.coords_into(j, &mut b);
            for k in 0..d {
                s[k] = a[k] + b[k];
            }
            match out.locate(&s) {
                Some(o) => values[o] = values[o].min(u + v),
                None => off_grid_pairs += 1,
            }
        }
    }
    Ok(InfConvolution { function: GriddedFunction { grid: out.clone(), values, provenance: None }, off_grid_pairs })
}

/// The grid of all pairwise sums of nodes of `a` and `b`; both must share
/// a step on every axis.
pub fn sum_grid(a: &Grid, b: &Grid) -> Result<Grid> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch("sum grid operands differ in dimension".into()));
    }
    let axes = a
        .axes()
        .iter()
        .zip(b.axes())
        .map(|(p, q)| {
            if (p.step() - q.step()).abs() > 1e-12 * p.step().abs().max(1.0) {
                return Err(Error::GridMismatch(format!("steps {} and {} differ", p.step(), q.step())));
            }
            Axis::new(p.lo + q.lo, p.hi + q.hi, p.count + q.count - 1)
        })
        .collect::<Result<Vec<_>>>()?;
    Grid::new(axes)
}

/// `σ_Ω(s) = max { ⟨s, x⟩ : x ∈ Ω }`; `−∞` everywhere for empty `Ω`.
pub fn support_function(points: &[Vec<f64>], duals: &DualGrid) -> GriddedFunction {
    let values = (0..duals.len()).into_par_iter().map(|j| support_at(points, &duals.coords(j))).collect();
    GriddedFunction { grid: duals.grid().clone(), values, provenance: None }
}

pub fn support_at(points: &[Vec<f64>], s: &[f64]) -> ExtReal {
    crate::ext::sup(points.iter().map(|p| ExtReal::new(dot(s, p))))
}

/// Symmetric dual box `[−L, L]` per axis, where `L` bounds the difference
/// quotients of `f` between adjacent finite nodes along that axis. The
/// node count matches the primal axis.
pub fn covering_duals(f: &GriddedFunction) -> DualGrid {
    let g = &f.grid;
    let shape = g.shape();
    let mut axes = Vec::with_capacity(g.dim());
    for k in 0..g.dim() {
        let step = g.axis(k).step();
        let stride: usize = shape[k + 1..].iter().product();
        let mut slope: f64 = 0.0;
        for i in 0..g.len() {
            if g.multi_index(i)[k] + 1 == shape[k] {
                continue;
            }
            if let (Some(a), Some(b)) = (f.values[i].finite(), f.values[i + stride].finite()) {
                slope = slope.max(((b - a) / step).abs());
            }
        }
        let l = if slope > 0.0 { slope } else { 1.0 };
        axes.push(Axis::new(-l, l, shape[k]).expect("nonzero symmetric bounds"));
    }
    DualGrid(Grid::new(axes).expect("same dimension as f"))
}
