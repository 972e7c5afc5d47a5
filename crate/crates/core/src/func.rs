//! Extended-real functions sampled on a grid.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Block, EvalError, Expr, VarLayout};
use crate::ext::ExtReal;
use crate::grid::Grid;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GriddedFunction {
    pub grid: Grid,
    pub values: Vec<ExtReal>,
    /// Expression text the values were evaluated from, if any.
    pub provenance: Option<String>,
}

impl GriddedFunction {
    pub fn new(grid: Grid, values: Vec<ExtReal>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!("{} values for a grid of {} nodes", values.len(), grid.len())));
        }
        Ok(GriddedFunction { grid, values, provenance: None })
    }

    pub fn from_f64(grid: Grid, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| ExtReal::new(v)).collect())
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> ExtReal) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        GriddedFunction { grid, values, provenance: None }
    }

    pub fn constant(grid: Grid, c: ExtReal) -> Self {
        let values = vec![c; grid.len()];
        GriddedFunction { grid, values, provenance: None }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, index: usize) -> ExtReal {
        self.values[index]
    }

    /// Value at the node with the given coordinates.
    pub fn at(&self, point: &[f64]) -> Result<ExtReal> {
        Ok(self.values[self.grid.node(point)?])
    }

    /// Nodes with value `< +∞`.
    pub fn dom(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.values[i].is_pos_inf()).collect()
    }

    /// Nodes with a finite value.
    pub fn dom_r(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.values[i].is_finite()).collect()
    }

    pub fn is_proper(&self) -> bool {
        self.values.iter().any(|v| v.is_finite()) && !self.values.iter().any(|v| v.is_neg_inf())
    }

    /// Minimum value and the lowest index attaining it.
    pub fn argmin(&self) -> (ExtReal, usize) {
        let mut best = (self.values[0], 0);
        for (i, &v) in self.values.iter().enumerate().skip(1) {
            if v < best.0 {
                best = (v, i);
            }
        }
        best
    }

    /// Maximum value and the lowest index attaining it.
    pub fn argmax(&self) -> (ExtReal, usize) {
        let mut best = (self.values[0], 0);
        for (i, &v) in self.values.iter().enumerate().skip(1) {
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }

    pub fn inf(&self) -> ExtReal {
        crate::ext::inf(self.values.iter().copied())
    }

    pub fn sup(&self) -> ExtReal {
        crate::ext::sup(self.values.iter().copied())
    }

    pub fn map(&self, f: impl Fn(ExtReal) -> ExtReal) -> Self {
        GriddedFunction { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect(), provenance: None }
    }

    /// Nodewise sum, with `(+∞) + (−∞) = +∞`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{} vs {}", self.grid, other.grid)));
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| a + b).collect();
        Ok(GriddedFunction { grid: self.grid.clone(), values, provenance: None })
    }

    /// `f ≤ g` at every node.
    pub fn le(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }
}

/// Evaluates `expr` at every node of `grid`, reading node coordinates
/// through `layout`. An `inf` result marks the node infeasible.
pub fn eval_on_grid(expr: &Expr, grid: &Grid, layout: VarLayout) -> Result<GriddedFunction> {
    if layout.total() != grid.dim() {
        return Err(Error::DimensionMismatch(format!("layout covers {} coordinates, grid has {}", layout.total(), grid.dim())));
    }
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let p = grid.coords(i);
            match expr.eval(&p, layout) {
                Ok(v) => Ok(ExtReal::new(v)),
                Err(EvalError::UnknownVariable(name)) => Err(Error::UnknownVariable { name, coords: p }),
                Err(EvalError::NonFinite(detail)) => Err(Error::NonFiniteExpression { coords: p, detail }),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GriddedFunction { grid: grid.clone(), values, provenance: Some(expr.to_string()) })
}

/// Parses `text` and evaluates it on a single-block grid. The block is
/// `y` when the expression mentions only `y` variables, `x` otherwise.
pub fn parse_on_grid(text: &str, grid: &Grid) -> Result<GriddedFunction> {
    let expr = Expr::parse(text)?;
    let layout = if expr.uses(Block::Y) && !expr.uses(Block::X) { VarLayout::y(grid.dim()) } else { VarLayout::x(grid.dim()) };
    let mut f = eval_on_grid(&expr, grid, layout)?;
    f.provenance = Some(text.to_string());
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite(f: &GriddedFunction) -> Vec<f64> {
        f.values.iter().map(|v| v.to_f64()).collect()
    }

    #[test]
    fn evaluates_expressions_on_nodes() {
        let g = Grid::uniform(-1.0, 1.0, 3).unwrap();
        assert_eq!(finite(&parse_on_grid("y^2", &g).unwrap()), vec![1.0, 0.0, 1.0]);
        let g = Grid::uniform(-2.0, 2.0, 5).unwrap();
        assert_eq!(finite(&parse_on_grid("abs(x)", &g).unwrap()), vec![2.0, 1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn singularities_abort_with_coordinates() {
        let g = Grid::uniform(-1.0, 1.0, 3).unwrap();
        match parse_on_grid("1/x", &g) {
            Err(Error::NonFiniteExpression { coords, .. }) => assert_eq!(coords, vec![0.0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_variables_abort_with_coordinates() {
        let g = Grid::uniform(-1.0, 1.0, 3).unwrap();
        let e = Expr::parse("x + y").unwrap();
        assert!(matches!(
            eval_on_grid(&e, &g, VarLayout::x(1)),
            Err(Error::UnknownVariable { name, coords }) if name == "y" && coords == vec![-1.0]
        ));
    }

    #[test]
    fn inf_marks_infeasible_nodes() {
        let g = Grid::uniform(-1.0, 1.0, 3).unwrap();
        let f = parse_on_grid("x^2 + max(x, 0) * inf", &g).unwrap();
        assert_eq!(f.values, vec![ExtReal::from(1.0), ExtReal::ZERO, ExtReal::PosInf]);
    }

    #[test]
    fn domains_and_properness() {
        let g = Grid::uniform(0.0, 3.0, 4).unwrap();
        let f = GriddedFunction::new(g, vec![ExtReal::PosInf, ExtReal::from(1.0), ExtReal::from(2.0), ExtReal::PosInf]).unwrap();
        assert_eq!(f.dom(), vec![1, 2]);
        assert_eq!(f.dom_r(), vec![1, 2]);
        assert!(f.is_proper());
        let h = f.map(|v| if v == ExtReal::from(2.0) { ExtReal::NegInf } else { v });
        assert_eq!(h.dom(), vec![1, 2]);
        assert_eq!(h.dom_r(), vec![1]);
        assert!(!h.is_proper());
    }
}
