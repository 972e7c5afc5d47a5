//! A parametric problem `min { φ(x, y) : y ∈ F(x) }` kept in declarative
//! form so it can be rebuilt on refined grids.

use crate::error::{Error, Result};
use crate::expr::{Expr, VarLayout};
use crate::ext::ExtReal;
use crate::func::{eval_on_grid, GriddedFunction};
use crate::grid::Grid;
use crate::setmap::{map_from_inequalities, SetValuedMap};

#[derive(Clone, Debug, PartialEq)]
pub enum PhiSource {
    Expr(Expr),
    /// Values over `xgrid × ygrid` in node order.
    Table(Vec<ExtReal>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum MapSource {
    /// `g_i(y) ≤ x_i`.
    Inequalities(Vec<Expr>),
    /// `c_k(x, y) ≤ 0`.
    Constraints(Vec<Expr>),
    /// Explicit graph nodes `(x, y)`.
    Points(Vec<Vec<f64>>),
    Full,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub xgrid: Grid,
    pub ygrid: Grid,
    pub phi: PhiSource,
    pub map: MapSource,
}

impl Problem {
    pub fn phi(&self) -> Result<GriddedFunction> {
        let prod = self.xgrid.product(&self.ygrid)?;
        match &self.phi {
            PhiSource::Expr(e) => eval_on_grid(e, &prod, VarLayout::xy(self.xgrid.dim(), self.ygrid.dim())),
            PhiSource::Table(v) => GriddedFunction::new(prod, v.clone()),
        }
    }

    pub fn map(&self) -> Result<SetValuedMap> {
        let (xg, yg) = (self.xgrid.clone(), self.ygrid.clone());
        match &self.map {
            MapSource::Inequalities(g) => map_from_inequalities(g, xg, yg),
            MapSource::Constraints(c) => SetValuedMap::from_constraints(c, xg, yg),
            MapSource::Points(p) => SetValuedMap::from_points(xg, yg, p),
            MapSource::Full => Ok(SetValuedMap::full(xg, yg)),
        }
    }

    pub fn build(&self) -> Result<(GriddedFunction, SetValuedMap)> {
        Ok((self.phi()?, self.map()?))
    }

    /// The same problem on both grids refined by `factor`. Tabulated data
    /// cannot be refined.
    pub fn refined(&self, factor: usize) -> Result<Problem> {
        if matches!(self.phi, PhiSource::Table(_)) || matches!(self.map, MapSource::Points(_)) {
            return Err(Error::NotRefinable);
        }
        Ok(Problem { xgrid: self.xgrid.refine(factor), ygrid: self.ygrid.refine(factor), phi: self.phi.clone(), map: self.map.clone() })
    }
}
