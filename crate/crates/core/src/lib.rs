//! Optimal value functions of parametric problems on finite grids, with
//! conjugates, ε-subdifferentials, near convexity and duality checks.
//!
//! Everything lives on uniform lattices in dimension at most three. Values
//! are extended reals with the convention `(+∞) + (−∞) = +∞`.
//!
//! ```
//! use marginlab_core::conjugate::conjugate;
//! use marginlab_core::marginal::marginal;
//! use marginlab_core::setmap::map_from_inequalities;
//! use marginlab_core::{eval_on_grid, DualGrid, Expr, ExtReal, Grid, VarLayout};
//!
//! # fn main() -> marginlab_core::Result<()> {
//! let x = Grid::uniform(-1.0, 1.0, 9)?;
//! let y = Grid::uniform(0.0, 2.0, 9)?;
//! let phi = eval_on_grid(&Expr::parse("y^2")?, &x.product(&y)?, VarLayout::xy(1, 1))?;
//! let map = map_from_inequalities(&[Expr::parse("1 - y")?], x, y)?;
//! let mu = marginal(&phi, &map)?.mu;
//! assert_eq!(mu.values[4], ExtReal::new(1.0));
//! let mu_star = conjugate(&mu, &DualGrid::uniform(-4.0, 4.0, 17)?)?;
//! assert_eq!(mu_star.values[4], ExtReal::new(-1.0));
//! # Ok(())
//! # }
//! ```

pub mod conjugate;
pub mod duality;
pub mod error;
pub mod expr;
pub mod ext;
pub mod func;
pub mod grid;
pub mod lp;
pub mod marginal;
pub mod nearconvex;
pub mod polyhedron;
pub mod problem;
pub mod random;
pub mod setmap;
pub mod subdiff;

pub use error::{Error, Result};
pub use expr::{Expr, VarLayout};
pub use ext::ExtReal;
pub use func::{eval_on_grid, parse_on_grid, GriddedFunction};
pub use grid::{Axis, DualGrid, Grid};
pub use polyhedron::HPolyhedron;
pub use setmap::SetValuedMap;
