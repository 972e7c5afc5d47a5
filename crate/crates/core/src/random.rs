//! Seeded random instances for property checks.
//!
//! Grid steps and values are dyadic rationals with small denominators, so
//! sums and pairings are exact in binary floating point and identities can
//! be compared without tolerance.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ext::ExtReal;
use crate::func::GriddedFunction;
use crate::grid::{DualGrid, Grid};
use crate::setmap::SetValuedMap;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A multiple of `1/8` in `[−range, range]`.
pub fn dyadic(rng: &mut impl Rng, range: f64) -> f64 {
    let k = (range * 8.0) as i64;
    rng.gen_range(-k..=k) as f64 / 8.0
}

/// A one-dimensional grid with a power-of-two step containing 0.
pub fn dyadic_grid(rng: &mut impl Rng) -> Grid {
    let step = [0.25, 0.5][rng.gen_range(0..2)];
    let below = rng.gen_range(1..=4);
    let above = rng.gen_range(1..=4);
    Grid::uniform(-(below as f64) * step, above as f64 * step, below + above + 1).expect("valid grid")
}

/// Dyadic values, `+∞` with probability `p_inf`.
pub fn dyadic_function(rng: &mut impl Rng, grid: Grid, p_inf: f64) -> GriddedFunction {
    let values = (0..grid.len()).map(|_| if rng.gen_bool(p_inf) { ExtReal::PosInf } else { ExtReal::new(dyadic(rng, 4.0)) }).collect();
    GriddedFunction::new(grid, values).expect("matching length")
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub phi: GriddedFunction,
    pub map: SetValuedMap,
    pub xduals: DualGrid,
    pub yduals: DualGrid,
}

/// One-dimensional `x` and `y`, a random graph, dyadic `φ` with some
/// infinite values, and dual grids of step `1/2` on `[−2, 2]`.
pub fn instance(seed: u64) -> Instance {
    let mut r = rng(seed);
    let xgrid = dyadic_grid(&mut r);
    let ygrid = dyadic_grid(&mut r);
    let density = r.gen_range(0.3..0.9);
    let graph = (0..xgrid.len() * ygrid.len()).map(|_| r.gen_bool(density)).collect();
    let map = SetValuedMap::from_mask(xgrid.clone(), ygrid.clone(), graph).expect("matching length");
    let phi = dyadic_function(&mut r, xgrid.product(&ygrid).expect("1-D grids"), 0.1);
    let duals = DualGrid::uniform(-2.0, 2.0, 9).expect("valid grid");
    Instance { phi, map, xduals: duals.clone(), yduals: duals }
}

/// A finite function on `n` nodes of `[−1, 1]` with values in `[−1, 1]`,
/// and dual nodes spanning `[−s, s]`.
pub fn conjugate_case(seed: u64, max_nodes: usize) -> (GriddedFunction, DualGrid) {
    let mut r = rng(seed);
    let n = r.gen_range(2..=max_nodes);
    let grid = Grid::uniform(-1.0, 1.0, n).expect("valid grid");
    let values: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let s = r.gen_range(0.5..50.0);
    let m = r.gen_range(2..=max_nodes);
    let f = GriddedFunction::from_f64(grid, &values).expect("matching length");
    (f, DualGrid::uniform(-s, s, m).expect("valid grid"))
}
