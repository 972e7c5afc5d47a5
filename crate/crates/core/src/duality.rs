//! Primal and dual values of `min φ(0, y) s.t. y ∈ F(0)`, weak and strong
//! duality verdicts, and the Lagrangian case `F(x) = {y : g(y) ≤ x}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::conjugate::{conjugate, conjugate_at, conjugate_onto, support_at};
use crate::error::{Error, Result};
use crate::expr::{Expr, VarLayout};
use crate::ext::ExtReal;
use crate::func::{eval_on_grid, GriddedFunction};
use crate::grid::{DualGrid, Grid, MAX_DIM};
use crate::lp;
use crate::marginal::{check_grids, marginal};
use crate::polyhedron::{interval_point, MEMBERSHIP_TOL};
use crate::setmap::{map_from_inequalities, SetValuedMap};
use crate::subdiff::eps_subdifferential;

/// Tolerance for the equalities `V_p = V_d` and `μ*(−λ) = −L̂(λ)`.
pub const DUALITY_TOL: f64 = 1e-9;

/// Tolerance for the Slater test `g_i(y) < 0`.
pub const SLATER_TOL: f64 = 1e-9;

fn zero_node(grid: &Grid) -> Result<usize> {
    grid.locate(&vec![0.0; grid.dim()]).ok_or(Error::ZeroNotOnGrid)
}

/// `V_p = μ(0)`.
pub fn primal_value(phi: &GriddedFunction, f: &SetValuedMap) -> Result<ExtReal> {
    check_grids(phi, f)?;
    let i0 = zero_node(&f.xgrid)?;
    Ok(marginal(phi, f)?.mu.values[i0])
}

/// `V_d¹ = max −μ*(x*)` over the dual nodes, with the lowest attaining node.
pub fn dual_value_1(mu: &GriddedFunction, duals: &DualGrid) -> Result<(ExtReal, Option<usize>)> {
    zero_node(&mu.grid)?;
    let mustar = conjugate(mu, duals)?;
    let mut best = ExtReal::NegInf;
    let mut arg = None;
    for (j, &v) in mustar.values.iter().enumerate() {
        if -v > best || arg.is_none() {
            best = -v;
            arg = Some(j);
        }
    }
    Ok((best, arg))
}

/// `(φ* □ F*)(x*, 0)` at every node of `xduals`, minimizing over splits
/// `x₁* ∈ xduals`, `x₂* = x* − x₁*`, `y* ∈ yduals`. `F*` is evaluated
/// exactly as the support function of the graph.
fn split_values(phi: &GriddedFunction, f: &SetValuedMap, xduals: &DualGrid, lattice: (&DualGrid, &DualGrid)) -> Result<Vec<ExtReal>> {
    check_grids(phi, f)?;
    let (m, n) = (f.xgrid.dim(), f.ygrid.dim());
    if xduals.dim() != m || lattice.0.dim() != m || lattice.1.dim() != n {
        return Err(Error::DimensionMismatch("dual grids do not match the problem's spaces".into()));
    }
    let phistar = conjugate_onto(phi, &lattice.0.product(lattice.1)?)?;
    let graph = f.graph_points();
    let pairs: Vec<(ExtReal, Vec<f64>)> =
        phistar.values.iter().enumerate().filter(|(_, v)| !v.is_pos_inf()).map(|(k, &v)| (v, phistar.grid.coords(k))).collect();
    Ok((0..xduals.len())
        .into_par_iter()
        .map(|j| {
            let xs = xduals.coords(j);
            let mut best = ExtReal::PosInf;
            let mut s = vec![0.0; m + n];
            for (v, c) in &pairs {
                for i in 0..m {
                    s[i] = xs[i] - c[i];
                }
                for i in 0..n {
                    s[m + i] = -c[m + i];
                }
                best = best.min(*v + support_at(&graph, &s));
            }
            best
        })
        .collect())
}

/// `V_d² = max −(φ* □ F*)(x*, 0)` over `xduals`, with the split sampled on
/// `xduals × yduals`. A lower bound for the exact value.
pub fn dual_value_2(phi: &GriddedFunction, f: &SetValuedMap, xduals: &DualGrid, yduals: &DualGrid) -> Result<ExtReal> {
    let vals = split_values(phi, f, xduals, (xduals, yduals))?;
    Ok(vals.into_iter().map(|v| -v).fold(ExtReal::NegInf, ExtReal::max))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepresentationReport {
    /// `μ*(x*)` per dual node.
    pub lhs: Vec<ExtReal>,
    /// Sampled `(φ* □ F*)(x*, 0)`.
    pub rhs: Vec<ExtReal>,
    /// The same on the split lattice refined by 2.
    pub rhs_refined: Vec<ExtReal>,
    pub residual: Vec<f64>,
    pub residual_refined: Vec<f64>,
    pub max_residual: f64,
    /// `μ* ≤ φ* □ F*` at every node, compared exactly.
    pub one_sided: bool,
    pub monotone: bool,
    pub tolerance: f64,
    pub pass: bool,
}

/// `μ*(x*) = (φ* □ F*)(x*, 0)` on the dual nodes, at the default split
/// lattice and one refinement of it.
pub fn conjugate_representation_check(
    phi: &GriddedFunction,
    f: &SetValuedMap,
    xduals: &DualGrid,
    yduals: &DualGrid,
    tolerance: f64,
) -> Result<RepresentationReport> {
    let mu = marginal(phi, f)?.mu;
    let lhs = conjugate(&mu, xduals)?.values;
    let rhs = split_values(phi, f, xduals, (xduals, yduals))?;
    let (fx, fy) = (DualGrid(xduals.refine(2)), DualGrid(yduals.refine(2)));
    let rhs_refined = split_values(phi, f, xduals, (&fx, &fy))?;
    let residual: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a.distance(*b)).collect();
    let residual_refined: Vec<f64> = lhs.iter().zip(&rhs_refined).map(|(a, b)| a.distance(*b)).collect();
    let max_residual = residual.iter().copied().fold(0.0, f64::max);
    let one_sided = lhs.iter().zip(&rhs).chain(lhs.iter().zip(&rhs_refined)).all(|(a, b)| a <= b);
    let monotone = residual_refined.iter().zip(&residual).all(|(r, c)| r <= c);
    Ok(RepresentationReport {
        pass: one_sided && monotone && max_residual <= tolerance,
        lhs,
        rhs,
        rhs_refined,
        residual,
        residual_refined,
        max_residual,
        one_sided,
        monotone,
        tolerance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualityReport {
    pub vp: ExtReal,
    /// Best `−μ*` over the dual nodes and the witness.
    pub vd1: ExtReal,
    pub vd2: ExtReal,
    pub gap: ExtReal,
    /// A member of `∂μ(0)` when it is nonempty.
    pub witness: Option<Vec<f64>>,
    pub verdicts: Vec<Verdict>,
}

impl DualityReport {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn csv_header() -> &'static str {
        "vp,vd1,vd2,gap,witness,verdicts"
    }

    /// One line matching [`DualityReport::csv_header`]; vector and list
    /// fields are `;`-separated.
    pub fn csv_line(&self) -> String {
        let witness = self.witness.as_ref().map(|w| w.iter().map(f64::to_string).collect::<Vec<_>>().join(";")).unwrap_or_default();
        let verdicts = self.verdicts.iter().map(|v| format!("{}={}", v.name, v.pass)).collect::<Vec<_>>().join(";");
        format!("{},{},{},{},{witness},{verdicts}", self.vp, self.vd1, self.vd2, self.gap)
    }
}

/// `V_p − V_d¹`, zero when both are the same infinity.
fn gap(vp: ExtReal, vd1: ExtReal) -> ExtReal {
    if vp == vd1 {
        ExtReal::ZERO
    } else {
        vp - vd1
    }
}

/// Weak duality, and strong duality certified by a member of `∂μ(0)`.
pub fn strong_duality_check(phi: &GriddedFunction, f: &SetValuedMap, xduals: &DualGrid, yduals: &DualGrid) -> Result<DualityReport> {
    check_grids(phi, f)?;
    let i0 = zero_node(&f.xgrid)?;
    let mu = marginal(phi, f)?.mu;
    let vp = mu.values[i0];
    let sub = eps_subdifferential(&mu, i0, 0.0);
    let witness = if sub.dim == 1 { sub.interval_1d()?.map(|(lo, hi)| vec![interval_point(lo, hi)]) } else { sub.any_point()? };
    // a witness solves the dual problem, so −μ*(witness) joins the dual nodes
    let at_witness = witness.as_ref().map(|w| -conjugate_at(&mu, w).0);
    let (grid_vd1, _) = dual_value_1(&mu, xduals)?;
    let vd1 = at_witness.map_or(grid_vd1, |v| grid_vd1.max(v));
    let vd2 = dual_value_2(phi, f, xduals, yduals)?;
    let gap = gap(vp, vd1);

    let mut verdicts = vec![
        Verdict { name: "weak_duality".into(), pass: vd2 <= vd1 && vd1 <= vp },
        Verdict { name: "gap_nonnegative".into(), pass: gap >= ExtReal::new(-1e-12) },
    ];
    if let Some(s) = &witness {
        let f0 = vp.to_f64();
        let sound = (0..mu.len()).all(|i| match mu.values[i].finite() {
            Some(v) => crate::grid::dot(s, &mu.grid.coords(i)) <= v - f0 + MEMBERSHIP_TOL,
            None => true,
        });
        verdicts.push(Verdict { name: "witness_sound".into(), pass: sound });
        let solves = at_witness.is_some_and(|v| vp.is_finite() && v.distance(vp) <= DUALITY_TOL);
        verdicts.push(Verdict { name: "strong_duality".into(), pass: solves });
    }
    Ok(DualityReport { vp, vd1, vd2, gap, witness, verdicts })
}

/// Evaluates `f` and each `g_i` at the y-nodes.
fn lagrangian_data(f: &Expr, g: &[Expr], ygrid: &Grid) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let layout = VarLayout::y(ygrid.dim());
    let fv = eval_on_grid(f, ygrid, layout)?.values.iter().map(|v| v.to_f64()).collect();
    let gv = g
        .iter()
        .map(|e| Ok(eval_on_grid(e, ygrid, layout)?.values.iter().map(|v| v.to_f64()).collect()))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok((fv, gv))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LagrangianRow {
    pub lambda: Vec<f64>,
    /// `L̂(λ) = min_y f(y) + ⟨λ, g(y)⟩`.
    pub lhat: ExtReal,
    pub minimizer: Option<usize>,
    pub nonnegative: bool,
    /// `−L̂(λ)` for `λ ≥ 0`, `+∞` otherwise.
    pub expected_conjugate: ExtReal,
}

/// The dual function `L̂` at each `λ`, by enumeration over the y-nodes.
pub fn lagrangian_dual(f: &Expr, g: &[Expr], ygrid: &Grid, lambdas: &[Vec<f64>]) -> Result<Vec<LagrangianRow>> {
    let (fv, gv) = lagrangian_data(f, g, ygrid)?;
    lambdas
        .iter()
        .map(|lam| {
            if lam.len() != g.len() {
                return Err(Error::DimensionMismatch(format!("λ has {} components for {} constraints", lam.len(), g.len())));
            }
            let mut best = ExtReal::PosInf;
            let mut minimizer = None;
            for (j, &fj) in fv.iter().enumerate() {
                let v = ExtReal::new(fj + lam.iter().zip(&gv).map(|(l, gi)| l * gi[j]).sum::<f64>());
                if v < best {
                    best = v;
                    minimizer = Some(j);
                }
            }
            let nonnegative = lam.iter().all(|&l| l >= 0.0);
            Ok(LagrangianRow {
                lambda: lam.clone(),
                lhat: best,
                minimizer,
                nonnegative,
                expected_conjugate: if nonnegative { -best } else { ExtReal::PosInf },
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LagrangianIdentityRow {
    pub lambda: Vec<f64>,
    pub lhat: ExtReal,
    /// `μ*(−λ)` on the x-grid.
    pub mustar: ExtReal,
    pub expected: ExtReal,
    /// The grid maximizer of `−⟨λ, x⟩ − μ(x)` sits on the upper face of
    /// every axis with `λ_i < 0`, so the supremum runs off the grid.
    pub divergence_flagged: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LagrangianIdentityReport {
    pub rows: Vec<LagrangianIdentityRow>,
    pub pass: bool,
}

/// `μ*(−λ) = −L̂(λ)` for `λ ≥ 0`, and divergence of `μ*(−λ)` otherwise,
/// with `φ(x, y) = f(y)` and `F(x) = {y : g(y) ≤ x}`.
pub fn lagrangian_identity_check(
    f: &Expr,
    g: &[Expr],
    xgrid: &Grid,
    ygrid: &Grid,
    lambdas: &[Vec<f64>],
) -> Result<LagrangianIdentityReport> {
    if g.len() != xgrid.dim() {
        return Err(Error::DimensionMismatch(format!("{} constraints for a {}-D parameter grid", g.len(), xgrid.dim())));
    }
    let (_, gv) = lagrangian_data(f, g, ygrid)?;
    for j in 0..ygrid.len() {
        let v: Vec<f64> = gv.iter().map(|gi| gi[j]).collect();
        if xgrid.locate(&v).is_none() {
            return Err(Error::GridNotAdapted(v));
        }
    }
    let map = map_from_inequalities(g, xgrid.clone(), ygrid.clone())?;
    let prod = xgrid.product(ygrid)?;
    let phi = eval_on_grid(f, &prod, VarLayout::xy(xgrid.dim(), ygrid.dim()))?;
    let mu = marginal(&phi, &map)?.mu;
    let table = lagrangian_dual(f, g, ygrid, lambdas)?;
    let rows: Vec<LagrangianIdentityRow> = table
        .into_iter()
        .map(|r| {
            let s: Vec<f64> = r.lambda.iter().map(|l| -l).collect();
            let (mustar, arg) = conjugate_at(&mu, &s);
            let divergence_flagged = !r.nonnegative
                && arg.is_some_and(|i| {
                    let m = xgrid.multi_index(i);
                    r.lambda.iter().enumerate().all(|(k, &l)| l >= 0.0 || m[k] + 1 == xgrid.axis(k).count)
                });
            let pass = if r.nonnegative { mustar.distance(r.expected_conjugate) <= DUALITY_TOL } else { divergence_flagged };
            LagrangianIdentityRow { lambda: r.lambda, lhat: r.lhat, mustar, expected: r.expected_conjugate, divergence_flagged, pass }
        })
        .collect();
    Ok(LagrangianIdentityReport { pass: rows.iter().all(|r| r.pass), rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SlaterStatus {
    /// A Slater node exists and `V_p = V_d`.
    Verified,
    /// A Slater node exists but the values differ.
    Failed,
    /// No y-node has `g(y) < 0`.
    Unverified,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlaterReport {
    pub slater_node: Option<Vec<f64>>,
    pub vp: ExtReal,
    /// `sup_{λ ≥ 0} L̂(λ)`, solved as a linear program in `(λ, t)`.
    pub vd: ExtReal,
    pub multiplier: Option<Vec<f64>>,
    pub status: SlaterStatus,
}

/// Lagrangian strong duality on the y-grid under a Slater node.
pub fn slater_strong_duality_check(f: &Expr, g: &[Expr], ygrid: &Grid) -> Result<SlaterReport> {
    let m = g.len();
    if m == 0 || m + 1 > MAX_DIM {
        return Err(Error::UnsupportedDimension(m + 1));
    }
    let (fv, gv) = lagrangian_data(f, g, ygrid)?;
    let ny = ygrid.len();
    let slater_node = (0..ny).find(|&j| gv.iter().all(|gi| gi[j] < -SLATER_TOL)).map(|j| ygrid.coords(j));
    let vp = (0..ny).filter(|&j| gv.iter().all(|gi| gi[j] <= SLATER_TOL)).map(|j| ExtReal::new(fv[j])).fold(ExtReal::PosInf, ExtReal::min);

    // t − ⟨λ, g(y_j)⟩ ≤ f(y_j), −λ_i ≤ 0
    let mut normals = Vec::with_capacity(ny + m);
    let mut bounds = Vec::with_capacity(ny + m);
    for j in 0..ny {
        let mut row: Vec<f64> = gv.iter().map(|gi| -gi[j]).collect();
        row.push(1.0);
        normals.push(row);
        bounds.push(fv[j]);
    }
    for i in 0..m {
        let mut row = vec![0.0; m + 1];
        row[i] = -1.0;
        normals.push(row);
        bounds.push(0.0);
    }
    let mut objective = vec![0.0; m + 1];
    objective[m] = 1.0;
    let (vd, multiplier) = match lp::maximize(&normals, &bounds, &objective) {
        // the box caps an unbounded dual at LP_BOX
        Some(p) if p[m] >= lp::LP_BOX * (1.0 - 1e-9) => (ExtReal::PosInf, None),
        Some(p) => (ExtReal::new(p[m]), Some(p[..m].to_vec())),
        None => (ExtReal::NegInf, None),
    };
    let status = match &slater_node {
        None => SlaterStatus::Unverified,
        Some(_) if vp.distance(vd) <= DUALITY_TOL => SlaterStatus::Verified,
        Some(_) => SlaterStatus::Failed,
    };
    Ok(SlaterReport { slater_node, vp, vd, multiplier, status })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn g(lo: f64, hi: f64, n: usize) -> Grid {
        Grid::uniform(lo, hi, n).unwrap()
    }

    fn duals() -> DualGrid {
        DualGrid::uniform(-4.0, 4.0, 17).unwrap()
    }

    /// `min y² s.t. 1 − y ≤ x` on `x ∈ [−1, 1]`, `y ∈ [0, 2]`, step 0.25.
    fn lagrangian() -> (GriddedFunction, SetValuedMap) {
        let (xg, yg) = (g(-1.0, 1.0, 9), g(0.0, 2.0, 9));
        let map = map_from_inequalities(&[e("1 - y")], xg.clone(), yg.clone()).unwrap();
        let phi = eval_on_grid(&e("y^2"), &xg.product(&yg).unwrap(), VarLayout::xy(1, 1)).unwrap();
        (phi, map)
    }

    fn diagonal() -> (GriddedFunction, SetValuedMap) {
        let (xg, yg) = (g(-1.0, 1.0, 9), g(-1.0, 1.0, 9));
        let map = SetValuedMap::from_constraints(&[e("x - y"), e("y - x")], xg.clone(), yg.clone()).unwrap();
        let phi = eval_on_grid(&e("-y^2"), &xg.product(&yg).unwrap(), VarLayout::xy(1, 1)).unwrap();
        (phi, map)
    }

    #[test]
    fn primal_values() {
        let (phi, map) = lagrangian();
        assert_eq!(primal_value(&phi, &map).unwrap(), ExtReal::new(1.0));

        let (xg, yg) = (g(-1.0, 1.0, 3), g(-1.0, 1.0, 5));
        let empty = map_from_inequalities(&[e("y^2 + 1")], xg.clone(), yg.clone()).unwrap();
        let phi = eval_on_grid(&e("abs(y)"), &xg.product(&yg).unwrap(), VarLayout::xy(1, 1)).unwrap();
        assert_eq!(primal_value(&phi, &empty).unwrap(), ExtReal::PosInf);
        let full = SetValuedMap::full(xg.clone(), yg.clone());
        assert_eq!(primal_value(&phi, &full).unwrap(), ExtReal::ZERO);

        let shifted = g(0.5, 1.5, 3);
        let map = SetValuedMap::full(shifted.clone(), yg.clone());
        let phi = GriddedFunction::constant(shifted.product(&yg).unwrap(), ExtReal::ZERO);
        assert_eq!(primal_value(&phi, &map), Err(Error::ZeroNotOnGrid));
    }

    #[test]
    fn first_dual_value() {
        let (phi, map) = lagrangian();
        let mu = marginal(&phi, &map).unwrap().mu;
        let (v, at) = dual_value_1(&mu, &duals()).unwrap();
        assert_eq!(v, ExtReal::new(1.0));
        assert_eq!(duals().coords(at.unwrap()), vec![-2.0]);

        let c = GriddedFunction::constant(g(-1.0, 1.0, 5), ExtReal::new(3.5));
        assert_eq!(dual_value_1(&c, &duals()).unwrap().0, ExtReal::new(3.5));

        // convex piecewise linear with slopes inside the dual range
        let pl = GriddedFunction::from_fn(g(-2.0, 2.0, 9), |x| ExtReal::new((x[0] - 1.0).abs() + 0.5 * x[0]));
        assert_eq!(dual_value_1(&pl, &duals()).unwrap().0, pl.at(&[0.0]).unwrap());
    }

    #[test]
    fn second_dual_value() {
        let (phi, map) = lagrangian();
        assert_eq!(dual_value_2(&phi, &map, &duals(), &duals()).unwrap(), ExtReal::new(1.0));

        // full graph: the split is forced to x₂* = 0, y* = 0
        let (xg, yg) = (g(-1.0, 1.0, 5), g(-1.0, 1.0, 5));
        let full = SetValuedMap::full(xg.clone(), yg.clone());
        let phi = eval_on_grid(&e("(x - y)^2 + y"), &xg.product(&yg).unwrap(), VarLayout::xy(1, 1)).unwrap();
        let mut sy = duals().coords(0);
        sy.push(0.0);
        let expected = (0..duals().len())
            .map(|j| {
                let s = vec![duals().coords(j)[0], 0.0];
                -conjugate_at(&phi, &s).0
            })
            .fold(ExtReal::NegInf, ExtReal::max);
        assert_eq!(dual_value_2(&phi, &full, &duals(), &duals()).unwrap(), expected);

        let empty = map_from_inequalities(&[e("y^2 + 5")], xg.clone(), yg.clone()).unwrap();
        assert_eq!(dual_value_2(&phi, &empty, &duals(), &duals()).unwrap(), ExtReal::PosInf);
    }

    #[test]
    fn representation_on_the_lagrangian_instance() {
        let (phi, map) = lagrangian();
        let r = conjugate_representation_check(&phi, &map, &duals(), &duals(), 1e-9).unwrap();
        assert_eq!(r.max_residual, 0.0);
        assert!(r.pass);

        let (phi, map) = diagonal();
        let r = conjugate_representation_check(&phi, &map, &duals(), &duals(), 1e-9).unwrap();
        assert!(r.one_sided && r.monotone);
    }

    #[test]
    fn strong_duality_examples() {
        let (phi, map) = lagrangian();
        let r = strong_duality_check(&phi, &map, &duals(), &duals()).unwrap();
        assert_eq!((r.vp, r.vd1, r.gap), (ExtReal::new(1.0), ExtReal::new(1.0), ExtReal::ZERO));
        assert_eq!(r.witness, Some(vec![-2.0]));
        assert!(r.pass());
        assert!(r.vd2 <= r.vd1);

        let (phi, map) = diagonal();
        let r = strong_duality_check(&phi, &map, &duals(), &duals()).unwrap();
        assert_eq!((r.vp, r.vd1, r.gap), (ExtReal::ZERO, ExtReal::new(-1.0), ExtReal::new(1.0)));
        assert_eq!(r.witness, None);
        assert!(r.pass());

        let (xg, yg) = (g(-1.0, 1.0, 5), g(0.0, 1.0, 3));
        let phi = GriddedFunction::constant(xg.product(&yg).unwrap(), ExtReal::new(2.0));
        let r = strong_duality_check(&phi, &SetValuedMap::full(xg, yg), &duals(), &duals()).unwrap();
        assert_eq!(r.witness, Some(vec![0.0]));
        assert_eq!(r.gap, ExtReal::ZERO);
    }

    #[test]
    fn report_serialization() {
        let (phi, map) = lagrangian();
        let r = strong_duality_check(&phi, &map, &duals(), &duals()).unwrap();
        assert_eq!(r.csv_line(), "1,1,1,0,-2,weak_duality=true;gap_nonnegative=true;witness_sound=true;strong_duality=true");
        assert_eq!(DualityReport::csv_header().split(',').count(), r.csv_line().split(',').count());
    }

    #[test]
    fn lagrangian_dual_function() {
        let yg = g(0.0, 2.0, 9);
        let rows = lagrangian_dual(&e("y^2"), &[e("1 - y")], &yg, &[vec![2.0], vec![0.0], vec![4.0], vec![-1.0]]).unwrap();
        assert_eq!(rows[0].lhat, ExtReal::new(1.0));
        assert_eq!(yg.coords(rows[0].minimizer.unwrap()), vec![1.0]);
        assert_eq!(rows[1].lhat, ExtReal::ZERO);
        assert_eq!(rows[2].lhat, ExtReal::ZERO);
        assert_eq!(yg.coords(rows[2].minimizer.unwrap()), vec![2.0]);
        assert_eq!(rows[3].expected_conjugate, ExtReal::PosInf);
    }

    #[test]
    fn lagrangian_identity() {
        let lambdas: Vec<Vec<f64>> = (0..9).map(|k| vec![0.5 * k as f64]).chain([vec![-1.0]]).collect();
        let r = lagrangian_identity_check(&e("y^2"), &[e("1 - y")], &g(-1.0, 1.0, 9), &g(0.0, 2.0, 9), &lambdas).unwrap();
        assert!(r.pass);
        let two = r.rows.iter().find(|row| row.lambda == [2.0]).unwrap();
        assert_eq!(two.mustar, ExtReal::new(-1.0));
        assert!(r.rows.last().unwrap().divergence_flagged);

        let coarse = lagrangian_identity_check(&e("y^2"), &[e("1 - y")], &g(-1.0, 1.0, 5), &g(0.0, 2.0, 9), &lambdas);
        assert_eq!(coarse.unwrap_err(), Error::GridNotAdapted(vec![0.75]));
    }

    #[test]
    fn slater() {
        let r = slater_strong_duality_check(&e("y^2"), &[e("1 - y")], &g(0.0, 2.0, 9)).unwrap();
        assert_eq!(r.status, SlaterStatus::Verified);
        assert_eq!(r.vp, ExtReal::new(1.0));
        // on this grid every λ in [1.75, 2.25] is optimal
        let lam = r.multiplier.unwrap()[0];
        assert!((1.75 - 1e-9..=2.25 + 1e-9).contains(&lam));

        let r = slater_strong_duality_check(&e("y^2"), &[e("y^2")], &g(-1.0, 1.0, 9)).unwrap();
        assert_eq!(r.status, SlaterStatus::Unverified);

        let r = slater_strong_duality_check(&e("2*y1 + y2"), &[e("1 - y1 - y2")], &Grid::new(vec![*g(0.0, 2.0, 5).axis(0); 2]).unwrap())
            .unwrap();
        assert_eq!(r.status, SlaterStatus::Verified);
        assert_eq!(r.vp, ExtReal::new(1.0));
    }
}
