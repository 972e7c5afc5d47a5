//! Set-valued maps `F: ℝᵐ ⇉ ℝⁿ` stored as graph masks over `xgrid × ygrid`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, VarLayout};
use crate::ext::ExtReal;
use crate::func::{eval_on_grid, GriddedFunction};
use crate::grid::{DualGrid, Grid};

/// Tolerance applied to every defining inequality.
pub const CONSTRAINT_TOL: f64 = 1e-9;

/// How a mask was produced, kept so refinement can rebuild it exactly.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum MapProvenance {
    /// Extensional data only.
    Mask,
    /// `c_k(x, y) ≤ 0` for every k.
    Constraints(Vec<String>),
    /// `g_i(y) ≤ x_i` for every i.
    Inequalities(Vec<String>),
    /// `F(x) = Y` for every x.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SetValuedMap {
    pub xgrid: Grid,
    pub ygrid: Grid,
    /// Row-major over the product grid: index `xi · |ygrid| + yi`.
    pub graph: Vec<bool>,
    pub provenance: MapProvenance,
    #[serde(skip)]
    exprs: Vec<Expr>,
}

impl SetValuedMap {
    pub fn from_mask(xgrid: Grid, ygrid: Grid, graph: Vec<bool>) -> Result<Self> {
        if graph.len() != xgrid.len() * ygrid.len() {
            return Err(Error::DimensionMismatch(format!("mask of {} entries for {} × {} nodes", graph.len(), xgrid.len(), ygrid.len())));
        }
        Ok(SetValuedMap { xgrid, ygrid, graph, provenance: MapProvenance::Mask, exprs: Vec::new() })
    }

    /// `F(x) = Y` everywhere.
    pub fn full(xgrid: Grid, ygrid: Grid) -> Self {
        let graph = vec![true; xgrid.len() * ygrid.len()];
        SetValuedMap { xgrid, ygrid, graph, provenance: MapProvenance::Full, exprs: Vec::new() }
    }

    /// Graph made of the listed `(x, y)` nodes.
    pub fn from_points(xgrid: Grid, ygrid: Grid, points: &[Vec<f64>]) -> Result<Self> {
        let m = xgrid.dim();
        let mut graph = vec![false; xgrid.len() * ygrid.len()];
        for p in points {
            if p.len() != m + ygrid.dim() {
                return Err(Error::DimensionMismatch(format!("graph point {p:?}")));
            }
            let xi = xgrid.node(&p[..m]).map_err(|_| Error::NotANode(p.clone()))?;
            let yi = ygrid.node(&p[m..]).map_err(|_| Error::NotANode(p.clone()))?;
            graph[xi * ygrid.len() + yi] = true;
        }
        SetValuedMap::from_mask(xgrid, ygrid, graph)
    }

    /// `gph F = {(x, y) : c_k(x, y) ≤ 0 ∀k}`.
    pub fn from_constraints(constraints: &[Expr], xgrid: Grid, ygrid: Grid) -> Result<Self> {
        let prod = xgrid.product(&ygrid)?;
        let layout = VarLayout::xy(xgrid.dim(), ygrid.dim());
        let mut graph = vec![true; prod.len()];
        for c in constraints {
            let vals = eval_on_grid(c, &prod, layout)?;
            for (g, v) in graph.iter_mut().zip(&vals.values) {
                *g &= *v <= ExtReal::from(CONSTRAINT_TOL);
            }
        }
        Ok(SetValuedMap {
            xgrid,
            ygrid,
            graph,
            provenance: MapProvenance::Constraints(constraints.iter().map(|c| c.to_string()).collect()),
            exprs: constraints.to_vec(),
        })
    }

    pub fn product_grid(&self) -> Grid {
        self.xgrid.product(&self.ygrid).expect("dimensions were validated")
    }

    pub fn ny(&self) -> usize {
        self.ygrid.len()
    }

    pub fn contains(&self, xi: usize, yi: usize) -> bool {
        self.graph[xi * self.ny() + yi]
    }

    /// `F(x)` as y-node indices.
    pub fn fiber(&self, xi: usize) -> Vec<usize> {
        let ny = self.ny();
        (0..ny).filter(|&yi| self.graph[xi * ny + yi]).collect()
    }

    /// `dom F` as x-node indices.
    pub fn dom(&self) -> Vec<usize> {
        let ny = self.ny();
        (0..self.xgrid.len()).filter(|&xi| self.graph[xi * ny..(xi + 1) * ny].iter().any(|&b| b)).collect()
    }

    pub fn is_proper(&self) -> bool {
        self.graph.iter().any(|&b| b)
    }

    /// Coordinates `(x, y)` of every graph node.
    pub fn graph_points(&self) -> Vec<Vec<f64>> {
        let prod = self.product_grid();
        (0..self.graph.len()).filter(|&i| self.graph[i]).map(|i| prod.coords(i)).collect()
    }

    /// The same map on grids refined by `factor`, rebuilt from provenance.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        let xg = self.xgrid.refine(factor);
        let yg = self.ygrid.refine(factor);
        match &self.provenance {
            MapProvenance::Mask => Err(Error::NotRefinable),
            MapProvenance::Full => Ok(SetValuedMap::full(xg, yg)),
            MapProvenance::Constraints(_) => SetValuedMap::from_constraints(&self.exprs, xg, yg),
            MapProvenance::Inequalities(_) => map_from_inequalities(&self.exprs, xg, yg),
        }
    }
}

/// `F(x) = {y : g_i(y) ≤ x_i, i = 1..m}`.
pub fn map_from_inequalities(g: &[Expr], xgrid: Grid, ygrid: Grid) -> Result<SetValuedMap> {
    if g.len() != xgrid.dim() {
        return Err(Error::DimensionMismatch(format!("{} constraint functions for a {}-D parameter grid", g.len(), xgrid.dim())));
    }
    let gv = g.iter().map(|e| eval_on_grid(e, &ygrid, VarLayout::y(ygrid.dim()))).collect::<Result<Vec<GriddedFunction>>>()?;
    let ny = ygrid.len();
    let mut graph = vec![false; xgrid.len() * ny];
    let mut x = vec![0.0; xgrid.dim()];
    for xi in 0..xgrid.len() {
        xgrid.coords_into(xi, &mut x);
        for yi in 0..ny {
            graph[xi * ny + yi] = gv.iter().zip(&x).all(|(gi, &xv)| gi.values[yi] <= ExtReal::from(xv + CONSTRAINT_TOL));
        }
    }
    Ok(SetValuedMap {
        xgrid,
        ygrid,
        graph,
        provenance: MapProvenance::Inequalities(g.iter().map(|e| e.to_string()).collect()),
        exprs: g.to_vec(),
    })
}

/// `F*(x*, y*) = σ_{gph F}(x*, y*)` on `xduals × yduals`.
pub fn map_conjugate(f: &SetValuedMap, xduals: &DualGrid, yduals: &DualGrid) -> Result<GriddedFunction> {
    let duals = DualGrid(xduals.product(yduals)?);
    if duals.dim() != f.xgrid.dim() + f.ygrid.dim() {
        return Err(Error::DimensionMismatch("dual grids do not match the map's spaces".into()));
    }
    Ok(crate::conjugate::support_function(&f.graph_points(), &duals))
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Smallest `ℓ` with `F(u) ⊆ F(x) + ℓ‖x − u‖ B` over all node pairs, using
/// one-sided Hausdorff excess. `+∞` unless `dom F` is the whole x-grid.
pub fn lipschitz_estimate_map(f: &SetValuedMap) -> f64 {
    let nx = f.xgrid.len();
    if f.dom().len() != nx {
        return f64::INFINITY;
    }
    let xs = f.xgrid.all_coords();
    let ys = f.ygrid.all_coords();
    let fibers: Vec<Vec<usize>> = (0..nx).map(|xi| f.fiber(xi)).collect();
    (0..nx)
        .into_par_iter()
        .map(|u| {
            let mut best: f64 = 0.0;
            for x in 0..nx {
                if x == u {
                    continue;
                }
                let excess = fibers[u]
                    .iter()
                    .map(|&v| fibers[x].iter().map(|&w| dist(&ys[v], &ys[w])).fold(f64::INFINITY, f64::min))
                    .fold(0.0, f64::max);
                best = best.max(excess / dist(&xs[x], &xs[u]));
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}
