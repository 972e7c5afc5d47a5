//! ε-subdifferentials, ε-normal cones and ε-coderivatives as H-polyhedra,
//! and verifiers for the subdifferential formulas of marginal functions.
//!
//! Unions over real splits `ε₁ + ε₂ = E` are sampled on a uniform split
//! lattice; intersections over `η > 0` use a finite list of `η`. The
//! existence of `(x₁*, y₁*)` for a given split is decided exactly by a
//! small linear program.

use rayon::prelude::*;
use serde::Serialize;

use crate::conjugate::conjugate;
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::func::GriddedFunction;
use crate::grid::{dot, DualGrid, Grid, MAX_DIM, NODE_TOL};
use crate::lp;
use crate::marginal::{check_grids, eta_solutions, marginal};
use crate::polyhedron::{HPolyhedron, MEMBERSHIP_TOL};
use crate::setmap::SetValuedMap;

/// Slack used when an inclusion is checked against a point that was itself
/// accepted with [`MEMBERSHIP_TOL`] in two polyhedra.
pub const EASY_TOL: f64 = 4.0 * MEMBERSHIP_TOL;

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p - q).collect()
}

/// `∂_ε f(x0)` for the node `x0`: one halfspace `⟨s, x − x0⟩ ≤ f(x) − f(x0) + ε`
/// per finite node. Empty when `f(x0)` is not finite or `f` takes `−∞`.
pub fn eps_subdifferential(f: &GriddedFunction, x0: usize, eps: f64) -> HPolyhedron {
    let d = f.grid.dim();
    let Some(f0) = f.values[x0].finite() else {
        return HPolyhedron::empty(d);
    };
    if f.values.iter().any(|v| v.is_neg_inf()) {
        return HPolyhedron::empty(d);
    }
    let c0 = f.grid.coords(x0);
    let mut p = HPolyhedron::full(d);
    for (i, v) in f.values.iter().enumerate() {
        if i == x0 {
            continue;
        }
        if let Some(fv) = v.finite() {
            p.push(diff(&f.grid.coords(i), &c0), fv - f0 + eps);
        }
    }
    p
}

/// `N_ε(x0; Ω)` for a finite point set `Ω ∋ x0`.
pub fn eps_normal_cone(points: &[Vec<f64>], x0: &[f64], eps: f64) -> Result<HPolyhedron> {
    let same = |p: &Vec<f64>| p.iter().zip(x0).all(|(a, b)| (a - b).abs() <= NODE_TOL);
    if !points.iter().any(same) {
        return Err(Error::PointNotInSet);
    }
    let mut poly = HPolyhedron::full(x0.len());
    for p in points.iter().filter(|p| !same(p)) {
        poly.push(diff(p, x0), eps);
    }
    Ok(poly)
}

/// `D*_ε F(x0, y0)(y*)`: all `x*` with `⟨x*, x − x0⟩ ≤ ε + ⟨y*, y − y0⟩` on
/// every graph node.
pub fn eps_coderivative(f: &SetValuedMap, x0: usize, y0: usize, ystar: &[f64], eps: f64) -> Result<HPolyhedron> {
    if !f.contains(x0, y0) {
        return Err(Error::NotOnGraph);
    }
    if ystar.len() != f.ygrid.dim() {
        return Err(Error::DimensionMismatch(format!("y* has {} components", ystar.len())));
    }
    let (xc, yc) = (f.xgrid.coords(x0), f.ygrid.coords(y0));
    let mut poly = HPolyhedron::full(f.xgrid.dim());
    for xi in 0..f.xgrid.len() {
        let dx = diff(&f.xgrid.coords(xi), &xc);
        for yi in f.fiber(xi) {
            let dy = diff(&f.ygrid.coords(yi), &yc);
            poly.push(dx.clone(), eps + dot(ystar, &dy));
        }
    }
    Ok(poly)
}

/// Uniform split lattice `ε₁ = E·k/(n−1)`, `ε₂ = E − ε₁`.
pub fn splits(total: f64, count: usize) -> Vec<(f64, f64)> {
    if total == 0.0 || count <= 1 {
        return vec![(total, 0.0)];
    }
    let n = (count - 1) as f64;
    (0..count).map(|k| (total * k as f64 / n, total * (count - 1 - k) as f64 / n)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleRow {
    pub s: Vec<f64>,
    pub lhs: bool,
    pub rhs: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SumRuleReport {
    pub eps: f64,
    pub splits: Vec<(f64, f64)>,
    /// `∂_ε(g1 + g2)(x0)` as an interval, one-dimensional case only.
    pub lhs_interval: Option<(f64, f64)>,
    pub rows: Vec<SampleRow>,
    pub agreement_rate: f64,
    /// Samples in the sampled union but outside the left side.
    pub easy_violations: Vec<usize>,
}

/// Compares `∂_ε(g1 + g2)(x0)` with `⋃ ∂_{ε₁}g1(x0) + ∂_{ε₂}g2(x0)` at the
/// given dual samples.
pub fn sum_rule_check(
    g1: &GriddedFunction,
    g2: &GriddedFunction,
    x0: usize,
    eps: f64,
    split_count: usize,
    samples: &[Vec<f64>],
) -> Result<SumRuleReport> {
    let d = g1.grid.dim();
    if d > MAX_DIM {
        return Err(Error::UnsupportedDimension(d));
    }
    let sum = g1.add(g2)?;
    let lhs = eps_subdifferential(&sum, x0, eps);
    let sp = splits(eps, split_count);
    let parts: Vec<(HPolyhedron, HPolyhedron)> =
        sp.iter().map(|&(e1, e2)| (eps_subdifferential(g1, x0, e1), eps_subdifferential(g2, x0, e2))).collect();
    let rows = samples
        .par_iter()
        .map(|s| {
            let rhs = parts
                .iter()
                .any(|(p1, p2)| p1.intersect(&p2.reflect_shift(s)).and_then(|p| p.is_empty()).map(|empty| !empty).unwrap_or(false));
            SampleRow { s: s.clone(), lhs: lhs.contains(s), rhs }
        })
        .collect::<Vec<_>>();
    let easy_violations = rows.iter().enumerate().filter(|(_, r)| r.rhs && !contains_tol(&lhs, &r.s, EASY_TOL)).map(|(i, _)| i).collect();
    Ok(SumRuleReport {
        eps,
        splits: sp,
        lhs_interval: if d == 1 { lhs.interval_1d()? } else { None },
        agreement_rate: agreement(&rows),
        rows,
        easy_violations,
    })
}

fn agreement(rows: &[SampleRow]) -> f64 {
    if rows.is_empty() {
        return 1.0;
    }
    rows.iter().filter(|r| r.lhs == r.rhs).count() as f64 / rows.len() as f64
}

pub fn contains_tol(p: &HPolyhedron, s: &[f64], tol: f64) -> bool {
    p.halfspaces.iter().all(|h| dot(&h.normal, s) <= h.bound + tol)
}

/// Linear constraints in `(x₁*, y₁*)` expressing
/// `(x₁*, y₁*) ∈ ∂_{ε₁}φ(x0, y0)` and `s − x₁* ∈ D*_{ε₂}F(x0, y0)(y₁*)`.
/// Bounds are stored without the `ε` and `s` terms.
struct SplitSystem {
    /// Rows from `∂φ`: normal, `φ(p) − φ(p0)`.
    phi_rows: Vec<(Vec<f64>, f64)>,
    /// Rows from the coderivative: normal `−(x − x0, y − y0)` and `x − x0`.
    graph_rows: Vec<(Vec<f64>, Vec<f64>)>,
    /// `φ(x0, y0)` is not finite or `φ` takes `−∞`.
    degenerate: bool,
}

impl SplitSystem {
    fn new(phi: &GriddedFunction, f: &SetValuedMap, xi: usize, yi: usize) -> Self {
        let m = f.xgrid.dim();
        let prod = &phi.grid;
        let p0_idx = xi * f.ny() + yi;
        let p0 = prod.coords(p0_idx);
        let degenerate = !phi.values[p0_idx].is_finite() || phi.values.iter().any(|v| v.is_neg_inf());
        let mut phi_rows = Vec::new();
        let mut graph_rows = Vec::new();
        if !degenerate {
            let f0 = phi.values[p0_idx].to_f64();
            for (i, v) in phi.values.iter().enumerate() {
                if i == p0_idx {
                    continue;
                }
                let p = prod.coords(i);
                if let Some(fv) = v.finite() {
                    phi_rows.push((diff(&p, &p0), fv - f0));
                }
                if f.graph[i] {
                    let dp = diff(&p, &p0);
                    graph_rows.push((dp.iter().map(|a| -a).collect(), dp[..m].to_vec()));
                }
            }
        }
        SplitSystem { phi_rows, graph_rows, degenerate }
    }

    fn feasible(&self, s: &[f64], e1: f64, e2: f64, dim: usize) -> bool {
        if self.degenerate {
            return false;
        }
        let mut normals = Vec::with_capacity(self.phi_rows.len() + self.graph_rows.len());
        let mut bounds = Vec::with_capacity(normals.capacity());
        for (n, b) in &self.phi_rows {
            normals.push(n.clone());
            bounds.push(b + e1 + MEMBERSHIP_TOL);
        }
        for (n, dx) in &self.graph_rows {
            normals.push(n.clone());
            bounds.push(e2 - dot(s, dx) + MEMBERSHIP_TOL);
        }
        lp::feasible_point(&normals, &bounds, dim).is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EtaMembership {
    pub eta: f64,
    pub rhs: bool,
    /// `s ∈ ∂_{ε+η} μ(x0)`, implied whenever `rhs` holds.
    pub relaxed_lhs: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalSubdiffRow {
    pub s: Vec<f64>,
    pub lhs: bool,
    pub per_eta: Vec<EtaMembership>,
    pub rhs: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalSubdiffReport {
    pub x0: Vec<f64>,
    pub eps: f64,
    pub etas: Vec<f64>,
    pub split_count: usize,
    /// `∂_ε μ(x0)` as an interval, one-dimensional case only.
    pub lhs_interval: Option<(f64, f64)>,
    pub rows: Vec<MarginalSubdiffRow>,
    pub agreement_rate: f64,
    pub disagreements: Vec<usize>,
    /// `(row, η)` pairs where a sampled right-side member escapes `∂_{ε+η}μ(x0)`.
    pub easy_violations: Vec<(usize, f64)>,
    /// Whether the right side shrinks as `η` decreases at every sample.
    pub monotone_in_eta: bool,
}

/// Checks the representation of `∂_ε μ(x0)` through `∂_{ε₁}φ` and the
/// `ε₂`-coderivative of `F` over `y0 ∈ S_η(x0)`, at each dual sample.
#[allow(clippy::too_many_arguments)]
pub fn marginal_subdiff_check(
    phi: &GriddedFunction,
    f: &SetValuedMap,
    x0: usize,
    eps: f64,
    etas: &[f64],
    split_count: usize,
    samples: &[Vec<f64>],
) -> Result<MarginalSubdiffReport> {
    check_grids(phi, f)?;
    let dim = phi.grid.dim();
    if dim > MAX_DIM {
        return Err(Error::UnsupportedDimension(dim));
    }
    let m = f.xgrid.dim();
    let mu = marginal(phi, f)?.mu;
    if !mu.values[x0].is_finite() {
        return Err(Error::NotFiniteAtPoint { index: x0 });
    }
    let lhs = eps_subdifferential(&mu, x0, eps);
    // per η: the solution set, its systems and the relaxed left side
    let mut per_eta = Vec::with_capacity(etas.len());
    for &eta in etas {
        let ys = eta_solutions(phi, f, x0, eta)?;
        let systems: Vec<SplitSystem> = ys.iter().map(|&yi| SplitSystem::new(phi, f, x0, yi)).collect();
        per_eta.push((eta, systems, splits(eps + eta, split_count), eps_subdifferential(&mu, x0, eps + eta)));
    }
    let rows: Vec<MarginalSubdiffRow> = samples
        .par_iter()
        .map(|s| {
            let memberships: Vec<EtaMembership> = per_eta
                .iter()
                .map(|(eta, systems, sp, relaxed)| {
                    let rhs = systems.iter().all(|sys| sp.iter().any(|&(e1, e2)| sys.feasible(s, e1, e2, dim)));
                    EtaMembership { eta: *eta, rhs, relaxed_lhs: contains_tol(relaxed, s, EASY_TOL) }
                })
                .collect();
            MarginalSubdiffRow { s: s.clone(), lhs: lhs.contains(s), rhs: memberships.iter().all(|e| e.rhs), per_eta: memberships }
        })
        .collect();
    let mut easy_violations = Vec::new();
    let mut monotone = true;
    let mut order: Vec<usize> = (0..etas.len()).collect();
    order.sort_by(|&a, &b| etas[b].total_cmp(&etas[a]));
    for (k, r) in rows.iter().enumerate() {
        for e in &r.per_eta {
            if e.rhs && !e.relaxed_lhs {
                easy_violations.push((k, e.eta));
            }
        }
        // smaller η must not admit a sample that a larger η rejects
        for w in order.windows(2) {
            if r.per_eta[w[1]].rhs && !r.per_eta[w[0]].rhs {
                monotone = false;
            }
        }
    }
    let sample_rows: Vec<SampleRow> = rows.iter().map(|r| SampleRow { s: r.s.clone(), lhs: r.lhs, rhs: r.rhs }).collect();
    let disagreements = sample_rows.iter().enumerate().filter(|(_, r)| r.lhs != r.rhs).map(|(i, _)| i).collect();
    Ok(MarginalSubdiffReport {
        x0: f.xgrid.coords(x0),
        eps,
        etas: etas.to_vec(),
        split_count,
        lhs_interval: if m == 1 { lhs.interval_1d()? } else { None },
        agreement_rate: agreement(&sample_rows),
        rows,
        disagreements,
        easy_violations,
        monotone_in_eta: monotone,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestrictedConjugateReport {
    /// `μ*(x*)` per dual node.
    pub lhs: Vec<ExtReal>,
    /// `φ̃*(x*, 0)` with `φ̃ = φ + δ_{gph F}`.
    pub rhs: Vec<ExtReal>,
    pub exact: bool,
    pub mismatches: Vec<usize>,
}

/// `μ*(x*) = φ̃*(x*, 0)` at every dual node, by two separate maximizations.
pub fn restricted_conjugate_check(phi: &GriddedFunction, f: &SetValuedMap, xduals: &DualGrid) -> Result<RestrictedConjugateReport> {
    check_grids(phi, f)?;
    let mu = marginal(phi, f)?.mu;
    let lhs = conjugate(&mu, xduals)?.values;
    let restricted = GriddedFunction {
        grid: phi.grid.clone(),
        values: phi.values.iter().zip(&f.graph).map(|(&v, &g)| if g { v } else { ExtReal::PosInf }).collect(),
        provenance: None,
    };
    let n = f.ygrid.dim();
    let rhs: Vec<ExtReal> = (0..xduals.len())
        .into_par_iter()
        .map(|j| {
            let mut s = xduals.coords(j);
            s.extend(std::iter::repeat_n(0.0, n));
            crate::conjugate::conjugate_at(&restricted, &s).0
        })
        .collect();
    let mismatches: Vec<usize> = (0..lhs.len()).filter(|&j| lhs[j] != rhs[j]).collect();
    Ok(RestrictedConjugateReport { exact: mismatches.is_empty(), lhs, rhs, mismatches })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjSubdiffEta {
    pub eta: f64,
    /// x-nodes admitting a certificate, before closure.
    pub raw: Vec<usize>,
    /// After one-cell dilation.
    pub closed: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjSubdiffReport {
    pub x0star: Vec<f64>,
    pub eps: f64,
    /// `μ*(x0*)` is finite; otherwise both sides are reported empty.
    pub in_domain: bool,
    /// Primal nodes in `∂_ε μ*(x0*)`.
    pub lhs: Vec<usize>,
    pub per_eta: Vec<ConjSubdiffEta>,
    /// Intersection over `η` of the closed sets.
    pub rhs: Vec<usize>,
    pub agreement_rate: f64,
    /// `(node, η)` pairs in a raw set but outside `∂_{ε+η} μ*(x0*)`.
    pub easy_violations: Vec<(usize, f64)>,
}

/// Compares `∂_ε μ*(x0*)` on the primal nodes with the closure-intersection
/// representation; closure is a one-cell raster dilation.
#[allow(clippy::too_many_arguments)]
pub fn conj_subdiff_check(
    phi: &GriddedFunction,
    f: &SetValuedMap,
    x0star: &[f64],
    eps: f64,
    etas: &[f64],
    split_count: usize,
    xduals: &DualGrid,
) -> Result<ConjSubdiffReport> {
    check_grids(phi, f)?;
    let dim = phi.grid.dim();
    if dim > MAX_DIM {
        return Err(Error::UnsupportedDimension(dim));
    }
    let k0 = xduals.node(x0star)?;
    let mu = marginal(phi, f)?.mu;
    let mustar = conjugate(&mu, xduals)?;
    let xg: &Grid = &f.xgrid;
    let nx = xg.len();
    let mut report = ConjSubdiffReport {
        x0star: x0star.to_vec(),
        eps,
        in_domain: mustar.values[k0].is_finite(),
        lhs: Vec::new(),
        per_eta: Vec::new(),
        rhs: Vec::new(),
        agreement_rate: 1.0,
        easy_violations: Vec::new(),
    };
    if !report.in_domain {
        return Ok(report);
    }
    // the polyhedron lives in primal space: a = s − x0*
    let in_lhs = |e: f64, x: &[f64]| contains_tol(&eps_subdifferential(&mustar, k0, e), x, EASY_TOL);
    let lhs_poly = eps_subdifferential(&mustar, k0, eps);
    report.lhs = (0..nx).filter(|&i| lhs_poly.contains(&xg.coords(i))).collect();
    let mut rhs = vec![true; nx];
    for &eta in etas {
        let sp = splits(eps + eta, split_count);
        let raw: Vec<usize> = (0..nx)
            .into_par_iter()
            .filter(|&xi| {
                f.fiber(xi).into_iter().any(|yi| {
                    let sys = SplitSystem::new(phi, f, xi, yi);
                    sp.iter().any(|&(e1, e2)| sys.feasible(x0star, e1, e2, dim))
                })
            })
            .collect();
        let mut closed_mask = vec![false; nx];
        for &i in &raw {
            for j in xg.neighborhood(i) {
                closed_mask[j] = true;
            }
            if !in_lhs(eps + eta, &xg.coords(i)) {
                report.easy_violations.push((i, eta));
            }
        }
        for (r, c) in rhs.iter_mut().zip(&closed_mask) {
            *r &= *c;
        }
        let closed = (0..nx).filter(|&i| closed_mask[i]).collect();
        report.per_eta.push(ConjSubdiffEta { eta, raw, closed });
    }
    report.rhs = (0..nx).filter(|&i| rhs[i]).collect();
    let agree = (0..nx).filter(|&i| rhs[i] == report.lhs.contains(&i)).count();
    report.agreement_rate = agree as f64 / nx as f64;
    Ok(report)
}

/// Deterministic dual samples: the nodes of a dual grid.
pub fn grid_samples(duals: &DualGrid) -> Vec<Vec<f64>> {
    duals.all_coords()
}
