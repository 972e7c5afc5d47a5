//! The optimal value function `μ(x) = inf { φ(x, y) : y ∈ F(x) }`, its
//! solution sets, and checks of its domain, epigraph, convexity,
//! semicontinuity and Lipschitz behaviour.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::func::GriddedFunction;
use crate::grid::Grid;
use crate::problem::Problem;
use crate::setmap::{norm, SetValuedMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Attained,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalResult {
    pub mu: GriddedFunction,
    /// Minimizing y-node indices per x-node, ascending.
    pub argmin: Vec<Vec<usize>>,
    pub status: Vec<Status>,
}

pub(crate) fn check_grids(phi: &GriddedFunction, f: &SetValuedMap) -> Result<()> {
    let prod = f.product_grid();
    if phi.grid != prod {
        return Err(Error::GridMismatch(format!("φ lives on {}, F on {}", phi.grid, prod)));
    }
    Ok(())
}

pub fn marginal(phi: &GriddedFunction, f: &SetValuedMap) -> Result<MarginalResult> {
    check_grids(phi, f)?;
    let ny = f.ny();
    let rows: Vec<(ExtReal, Vec<usize>, Status)> = (0..f.xgrid.len())
        .into_par_iter()
        .map(|xi| {
            let row = &phi.values[xi * ny..(xi + 1) * ny];
            let mut best = ExtReal::PosInf;
            let mut arg = Vec::new();
            for yi in f.fiber(xi) {
                let v = row[yi];
                if v < best {
                    best = v;
                    arg.clear();
                    arg.push(yi);
                } else if v == best && v.is_finite() {
                    arg.push(yi);
                }
            }
            match best {
                ExtReal::Finite(_) => (best, arg, Status::Attained),
                ExtReal::PosInf => (best, Vec::new(), Status::Infeasible),
                ExtReal::NegInf => (best, Vec::new(), Status::Unbounded),
            }
        })
        .collect();
    let mut values = Vec::with_capacity(rows.len());
    let mut argmin = Vec::with_capacity(rows.len());
    let mut status = Vec::with_capacity(rows.len());
    for (v, a, s) in rows {
        values.push(v);
        argmin.push(a);
        status.push(s);
    }
    Ok(MarginalResult { mu: GriddedFunction { grid: f.xgrid.clone(), values, provenance: None }, argmin, status })
}

/// `S_η(x) = {y ∈ F(x) : φ(x, y) < μ(x) + η}` at x-node `xi`.
pub fn eta_solutions(phi: &GriddedFunction, f: &SetValuedMap, xi: usize, eta: f64) -> Result<Vec<usize>> {
    check_grids(phi, f)?;
    let ny = f.ny();
    let mu = crate::ext::inf(f.fiber(xi).into_iter().map(|yi| phi.values[xi * ny + yi]));
    if !mu.is_finite() {
        return Err(Error::NotFiniteAtPoint { index: xi });
    }
    let level = mu + eta;
    Ok(f.fiber(xi).into_iter().filter(|&yi| phi.values[xi * ny + yi] < level).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub holds: bool,
    /// First x-node where the two sides differ.
    pub witness: Option<usize>,
}

/// `dom μ = P₁(dom φ ∩ gph F)` node by node.
pub fn domain_identity_check(phi: &GriddedFunction, f: &SetValuedMap) -> Result<IdentityCheck> {
    let m = marginal(phi, f)?;
    let ny = f.ny();
    let witness = (0..f.xgrid.len()).find(|&xi| {
        let lhs = !m.mu.values[xi].is_pos_inf();
        let rhs = (0..ny).any(|yi| f.contains(xi, yi) && !phi.values[xi * ny + yi].is_pos_inf());
        lhs != rhs
    });
    Ok(IdentityCheck { holds: witness.is_none(), witness })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpigraphRow {
    pub x: usize,
    pub lambda: f64,
    /// `μ(x) < λ`.
    pub strict_epi_mu: bool,
    /// `∃ y ∈ F(x)` with `φ(x, y) < λ`.
    pub strict_projection: bool,
    /// `∃ y ∈ F(x)` with `φ(x, y) ≤ λ`.
    pub projection: bool,
    /// `μ(x) ≤ λ`.
    pub epi_mu: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpigraphReport {
    pub rows: Vec<EpigraphRow>,
    /// Rows where the strict identity fails.
    pub identity_violations: Vec<usize>,
    /// Rows where `strict ⊆ projection ⊆ epi` fails.
    pub chain_violations: Vec<usize>,
}

impl EpigraphReport {
    pub fn holds(&self) -> bool {
        self.identity_violations.is_empty() && self.chain_violations.is_empty()
    }
}

/// Compares the strict epigraph of μ with the projection of the strict
/// epigraph of φ intersected with `gph F × ℝ`, and checks the inclusion
/// chain through the non-strict projection.
pub fn epigraph_projection_check(phi: &GriddedFunction, f: &SetValuedMap, lambdas: &[f64]) -> Result<EpigraphReport> {
    let m = marginal(phi, f)?;
    let ny = f.ny();
    let mut report = EpigraphReport { rows: Vec::new(), identity_violations: Vec::new(), chain_violations: Vec::new() };
    for xi in 0..f.xgrid.len() {
        let fiber = f.fiber(xi);
        for &lambda in lambdas {
            let l = ExtReal::new(lambda);
            let row = EpigraphRow {
                x: xi,
                lambda,
                strict_epi_mu: m.mu.values[xi] < l,
                strict_projection: fiber.iter().any(|&yi| phi.values[xi * ny + yi] < l),
                projection: fiber.iter().any(|&yi| phi.values[xi * ny + yi] <= l),
                epi_mu: m.mu.values[xi] <= l,
            };
            let k = report.rows.len();
            if row.strict_epi_mu != row.strict_projection {
                report.identity_violations.push(k);
            }
            if (row.strict_projection && !row.projection) || (row.projection && !row.epi_mu) {
                report.chain_violations.push(k);
            }
            report.rows.push(row);
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexityCheck {
    pub holds: bool,
    /// `(x, u, midpoint)` node indices of a violation.
    pub witness: Option<[usize; 3]>,
}

/// Midpoint convexity over every node pair whose midpoint is a node.
pub fn convexity_check(f: &GriddedFunction) -> ConvexityCheck {
    let g = &f.grid;
    let n = g.len();
    let idx: Vec<Vec<usize>> = (0..n).map(|i| g.multi_index(i)).collect();
    let mut mid = vec![0; g.dim()];
    for a in 0..n {
        for b in a + 1..n {
            if idx[a].iter().zip(&idx[b]).any(|(p, q)| (p + q) % 2 == 1) {
                continue;
            }
            for k in 0..g.dim() {
                mid[k] = (idx[a][k] + idx[b][k]) / 2;
            }
            let c = g.flat_index(&mid);
            let rhs = f.values[a].scale(0.5) + f.values[b].scale(0.5);
            let lhs = f.values[c];
            let ok = match (lhs, rhs) {
                (ExtReal::Finite(l), ExtReal::Finite(r)) => l <= r + 1e-9,
                _ => lhs <= rhs,
            };
            if !ok {
                return ConvexityCheck { holds: false, witness: Some([a, b, c]) };
            }
        }
    }
    ConvexityCheck { holds: true, witness: None }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SemicontinuityLevel {
    pub factor: usize,
    pub mu_x0: ExtReal,
    pub min: ExtReal,
    pub max: ExtReal,
    /// `max(0, μ(x0) − min)`.
    pub lsc_deficit: f64,
    /// `max(0, max − μ(x0))`.
    pub usc_excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SemicontinuityReport {
    pub x0: Vec<f64>,
    pub mu_x0: ExtReal,
    pub levels: Vec<SemicontinuityLevel>,
    pub lsc_consistent: bool,
    pub usc_consistent: bool,
}

/// Absolute tolerance for a vanished deficit.
pub const SEMICONTINUITY_TOL: f64 = 1e-6;
/// Required contraction of a deficit between consecutive levels.
pub const SEMICONTINUITY_RATE: f64 = 0.75;

fn gap(hi: ExtReal, lo: ExtReal) -> f64 {
    if hi <= lo {
        0.0
    } else {
        (hi - lo).to_f64()
    }
}

/// A deficit sequence is consistent with convergence to zero when its last
/// entry vanishes, or when it contracts geometrically at every step.
fn converging(d: &[f64]) -> bool {
    let last = *d.last().expect("at least one level");
    if last <= SEMICONTINUITY_TOL {
        return true;
    }
    d.len() >= 2 && d.windows(2).all(|w| w[1] <= SEMICONTINUITY_RATE * w[0] + SEMICONTINUITY_TOL)
}

/// Probes μ around `x0` on grids refined by `1, 2, 4, …` (`levels`
/// entries), over the one-cell node neighbourhood at each level.
pub fn semicontinuity_probe(problem: &Problem, x0: &[f64], levels: usize) -> Result<SemicontinuityReport> {
    assert!(levels >= 1, "need at least one level");
    let mut rows = Vec::with_capacity(levels);
    for k in 0..levels {
        let factor = 1usize << k;
        let p = if factor == 1 { problem.clone() } else { problem.refined(factor)? };
        let (phi, f) = p.build()?;
        let mu = marginal(&phi, &f)?.mu;
        let c = mu.grid.node(x0)?;
        let nb = mu.grid.neighborhood(c);
        let min = crate::ext::inf(nb.iter().map(|&i| mu.values[i]));
        let max = crate::ext::sup(nb.iter().map(|&i| mu.values[i]));
        let m0 = mu.values[c];
        rows.push(SemicontinuityLevel { factor, mu_x0: m0, min, max, lsc_deficit: gap(m0, min), usc_excess: gap(max, m0) });
    }
    let lsc: Vec<f64> = rows.iter().map(|r| r.lsc_deficit).collect();
    let usc: Vec<f64> = rows.iter().map(|r| r.usc_excess).collect();
    Ok(SemicontinuityReport {
        x0: x0.to_vec(),
        mu_x0: rows[0].mu_x0,
        lsc_consistent: converging(&lsc),
        usc_consistent: converging(&usc),
        levels: rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub l_hat: f64,
    pub bound: f64,
    pub pass: bool,
    /// Node pair attaining `l_hat`.
    pub witness: Option<(usize, usize)>,
}

/// Empirical modulus of `mu` over node pairs with finite values, compared
/// with `ℓ_F·ℓ_φ + ℓ_φ`.
pub fn lipschitz_probe(mu: &GriddedFunction, ell_phi: f64, ell_f: f64) -> LipschitzReport {
    let nodes: Vec<usize> = (0..mu.len()).collect();
    lipschitz_probe_on(mu, &nodes, ell_phi, ell_f)
}

/// [`lipschitz_probe`] restricted to a subset of nodes.
pub fn lipschitz_probe_on(mu: &GriddedFunction, nodes: &[usize], ell_phi: f64, ell_f: f64) -> LipschitzReport {
    let g: &Grid = &mu.grid;
    let pts: Vec<(usize, Vec<f64>, f64)> = nodes.iter().filter_map(|&i| mu.values[i].finite().map(|v| (i, g.coords(i), v))).collect();
    let mut l_hat = 0.0;
    let mut witness = None;
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            let diff: Vec<f64> = pts[a].1.iter().zip(&pts[b].1).map(|(p, q)| p - q).collect();
            let q = (pts[a].2 - pts[b].2).abs() / norm(&diff);
            if q > l_hat {
                l_hat = q;
                witness = Some((pts[a].0, pts[b].0));
            }
        }
    }
    let bound = ell_f * ell_phi + ell_phi;
    LipschitzReport { l_hat, bound, pass: l_hat <= bound + 1e-9, witness }
}
