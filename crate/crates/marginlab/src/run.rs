//! Command dispatch. Each command runs one or more layers and records
//! verdicts, JSON sections and CSV rows into a [`Report`].

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use marginlab_core::conjugate::{biconjugate, conjugate, conjugate_fast};
use marginlab_core::duality::{
    conjugate_representation_check, lagrangian_identity_check, slater_strong_duality_check, strong_duality_check, SlaterStatus,
};
use marginlab_core::grid::dot;
use marginlab_core::marginal::{
    convexity_check, domain_identity_check, epigraph_projection_check, lipschitz_probe, marginal, semicontinuity_probe, MarginalResult,
};
use marginlab_core::nearconvex::{image_preservation_check, intersection_preservation_check, is_int_nearly_convex, LinearMap, RasterSet};
use marginlab_core::problem::Problem;
use marginlab_core::setmap::lipschitz_estimate_map;
use marginlab_core::subdiff::{conj_subdiff_check, marginal_subdiff_check};
use marginlab_core::{DualGrid, ExtReal, Grid, GriddedFunction, SetValuedMap};

use crate::report::Report;
use crate::spec::{NearCheck, ProblemSpec, SetSpec, SpecError, Task};

/// Slack for float comparisons that hold exactly in real arithmetic.
const ROUNDING_TOL: f64 = 1e-9;
/// Agreement bound between the two conjugate algorithms.
const FAST_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Marginal,
    Conjugate,
    Subdiff,
    Duality,
    Lagrangian,
    Nearconvex,
    VerifyAll,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Marginal => "marginal",
            Command::Conjugate => "conjugate",
            Command::Subdiff => "subdiff",
            Command::Duality => "duality",
            Command::Lagrangian => "lagrangian",
            Command::Nearconvex => "nearconvex",
            Command::VerifyAll => "verify-all",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Command-line settings that replace values from the problem spec.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    /// Refinement factor for the problem grids and every raster.
    pub refine: Option<usize>,
    /// Replaces the `eps` list of subdifferential tasks.
    pub eps: Option<f64>,
    /// Replaces the base point of subdifferential tasks.
    pub x0: Option<Vec<f64>>,
    /// Replaces the `xduals` grid.
    pub dual_range: Option<Grid>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Core(#[from] marginlab_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

struct Ctx<'a> {
    spec: &'a ProblemSpec,
    ov: &'a Overrides,
    problem: Problem,
    phi: GriddedFunction,
    map: SetValuedMap,
    marginal: MarginalResult,
}

impl Ctx<'_> {
    fn mu(&self) -> &GriddedFunction {
        &self.marginal.mu
    }

    fn xduals(&self) -> Result<Option<DualGrid>, RunError> {
        if let Some(g) = &self.ov.dual_range {
            return Ok(Some(DualGrid(g.clone())));
        }
        Ok(self.spec.grids.get("xduals").cloned().map(DualGrid))
    }

    fn yduals(&self) -> Option<DualGrid> {
        self.spec.grids.get("yduals").cloned().map(DualGrid)
    }

    fn tasks<'b>(&'b self, command: &'b str) -> impl Iterator<Item = &'b Task> + 'b {
        self.spec.tasks.iter().filter(move |t| t.command() == command)
    }
}

fn fmt_coords(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

pub fn run(command: Command, spec: &ProblemSpec, ov: &Overrides) -> Result<Report, RunError> {
    let problem = match ov.refine {
        Some(k) if k > 1 => spec.problem.refined(k)?,
        _ => spec.problem.clone(),
    };
    let (phi, map) = problem.build()?;
    let marginal = marginal(&phi, &map)?;
    let ctx = Ctx { spec, ov, problem, phi, map, marginal };
    let mut report = Report::new(&spec.name, command.as_str());
    match command {
        Command::Marginal => core_layer(&ctx, &mut report)?,
        Command::Conjugate => conjugacy_layer(&ctx, &mut report, true)?,
        Command::Subdiff => subdiff_layer(&ctx, &mut report)?,
        Command::Duality => duality_layer(&ctx, &mut report, true)?,
        Command::Lagrangian => lagrangian_layer(&ctx, &mut report)?,
        Command::Nearconvex => nearconvex_layer(&ctx, &mut report)?,
        Command::VerifyAll => {
            core_layer(&ctx, &mut report)?;
            conjugacy_layer(&ctx, &mut report, false)?;
            subdiff_layer(&ctx, &mut report)?;
            duality_layer(&ctx, &mut report, false)?;
            nearconvex_layer(&ctx, &mut report)?;
        }
    }
    Ok(report)
}

fn core_layer(ctx: &Ctx, report: &mut Report) -> Result<(), RunError> {
    const L: &str = "core";
    let mu = ctx.mu();
    for xi in 0..mu.len() {
        let argmin = ctx.marginal.argmin[xi].first().map(|&yi| fmt_coords(&ctx.map.ygrid.coords(yi))).unwrap_or_default();
        let status = serde_json::to_value(ctx.marginal.status[xi]).expect("status serializes");
        report.row(
            L,
            "mu",
            xi,
            &mu.grid.coords(xi),
            &[("mu", mu.values[xi].to_string()), ("status", status.as_str().unwrap_or("").into()), ("argmin", argmin)],
        );
    }
    report.section(L, "marginal", &ctx.marginal);

    let dom = domain_identity_check(&ctx.phi, &ctx.map)?;
    report.verdict(L, "domain_identity", dom.holds, dom.witness.map(|w| format!("x-node {w}")));
    report.section(L, "domain_identity", &dom);

    let mut levels: Vec<Vec<f64>> = ctx
        .tasks("marginal")
        .filter_map(|t| match t {
            Task::Epigraph { levels } => Some(levels.clone().unwrap_or_else(|| finite_levels(&ctx.phi))),
            _ => None,
        })
        .collect();
    if levels.is_empty() {
        levels.push(finite_levels(&ctx.phi));
    }
    for lv in levels {
        let epi = epigraph_projection_check(&ctx.phi, &ctx.map, &lv)?;
        report.verdict(L, "strict_epigraph_projection", epi.holds(), None);
        report.section(
            L,
            "strict_epigraph_projection",
            &serde_json::json!({
                "levels": lv,
                "identity_violations": epi.identity_violations,
                "chain_violations": epi.chain_violations,
            }),
        );
    }

    if ctx.spec.meta.convex {
        let c = convexity_check(mu);
        report.verdict(L, "mu_convex", c.holds, c.witness.map(|w| format!("nodes {w:?}")));
    }

    for task in ctx.tasks("marginal") {
        match task {
            Task::Semicontinuity { x0, levels, expect_lsc, expect_usc } => {
                let r = semicontinuity_probe(&ctx.problem, x0, *levels)?;
                let at = fmt_coords(x0);
                if let Some(e) = expect_lsc {
                    report.verdict(L, &format!("lsc_consistent@{at}"), r.lsc_consistent == *e, Some(format!("expected {e}")));
                }
                if let Some(e) = expect_usc {
                    report.verdict(L, &format!("usc_consistent@{at}"), r.usc_consistent == *e, Some(format!("expected {e}")));
                }
                for (k, lv) in r.levels.iter().enumerate() {
                    report.row(
                        L,
                        "semicontinuity",
                        k,
                        x0,
                        &[
                            ("factor", lv.factor.to_string()),
                            ("lsc_deficit", lv.lsc_deficit.to_string()),
                            ("usc_excess", lv.usc_excess.to_string()),
                        ],
                    );
                }
                report.section(L, "semicontinuity", &r);
            }
            Task::Lipschitz { ell_phi, ell_f } => {
                let r = lipschitz_probe(mu, *ell_phi, *ell_f);
                let estimate = lipschitz_estimate_map(&ctx.map);
                report.verdict(L, "lipschitz_bound", r.pass, Some(format!("L = {} <= {}", r.l_hat, r.bound)));
                report.section(L, "lipschitz", &serde_json::json!({ "probe": r, "map_modulus_estimate": estimate }));
            }
            _ => {}
        }
    }
    Ok(())
}

/// Distinct finite values of `φ`, ascending.
fn finite_levels(phi: &GriddedFunction) -> Vec<f64> {
    let mut v: Vec<f64> = phi.values.iter().filter_map(|x| x.finite()).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn conjugacy_layer(ctx: &Ctx, report: &mut Report, required: bool) -> Result<(), RunError> {
    const L: &str = "conjugacy";
    let Some(xd) = ctx.xduals()? else {
        if required {
            return Err(RunError::Usage("the conjugate command needs grids.xduals or --dual-range".into()));
        }
        return Ok(());
    };
    let mu = ctx.mu();
    let mustar = conjugate(mu, &xd)?;
    let bi = biconjugate(mu, &xd)?;
    for j in 0..xd.len() {
        report.row(L, "mu_star", j, &xd.coords(j), &[("mu_star", mustar.values[j].to_string())]);
    }
    for i in 0..mu.len() {
        report.row(L, "mu_biconjugate", i, &mu.grid.coords(i), &[("mu", mu.values[i].to_string()), ("mu_bi", bi.values[i].to_string())]);
    }
    if xd.dim() == mu.grid.dim() {
        let fast = conjugate_fast(mu, &xd)?;
        let dev = mustar.values.iter().zip(&fast.values).map(|(a, b)| a.distance(*b)).fold(0.0, f64::max);
        report.verdict(L, "fast_conjugate_matches", dev <= FAST_TOL, Some(format!("max deviation {dev}")));
    }
    let minorant = mu.values.iter().zip(&bi.values).all(|(f, b)| *b <= *f + ROUNDING_TOL);
    report.verdict(L, "biconjugate_minorant", minorant, None);
    let mut fy = true;
    for i in mu.dom() {
        let x = mu.grid.coords(i);
        for j in 0..xd.len() {
            let pairing = ExtReal::new(dot(&x, &xd.coords(j)) - ROUNDING_TOL);
            fy &= mu.values[i] + mustar.values[j] >= pairing;
        }
    }
    report.verdict(L, "fenchel_young", fy, None);

    let rc = marginlab_core::subdiff::restricted_conjugate_check(&ctx.phi, &ctx.map, &xd)?;
    report.verdict(L, "restricted_conjugate", rc.exact, None);
    report.section(L, "restricted_conjugate", &rc);

    let Some(yd) = ctx.yduals() else {
        return Ok(());
    };
    let tolerance = ctx.tasks("conjugate").find_map(|t| match t {
        Task::Representation { tolerance } => Some(*tolerance),
        _ => None,
    });
    let rep = conjugate_representation_check(&ctx.phi, &ctx.map, &xd, &yd, tolerance.unwrap_or(ROUNDING_TOL))?;
    for j in 0..xd.len() {
        report.row(
            L,
            "representation",
            j,
            &xd.coords(j),
            &[
                ("mu_star", rep.lhs[j].to_string()),
                ("inf_convolution", rep.rhs[j].to_string()),
                ("inf_convolution_refined", rep.rhs_refined[j].to_string()),
                ("residual", rep.residual[j].to_string()),
            ],
        );
    }
    report.verdict(L, "representation_upper_bound", rep.one_sided && rep.monotone, Some(format!("max residual {}", rep.max_residual)));
    if let Some(tol) = tolerance {
        if ctx.spec.meta.interior_overlap {
            report.verdict(L, "representation_equality", rep.max_residual <= tol, Some(format!("tolerance {tol}")));
        } else {
            report.verdict(L, "representation_equality", true, Some("hypothesis metadata absent; equality not asserted".into()));
        }
    }
    report.section(L, "representation", &rep);
    Ok(())
}

fn subdiff_layer(ctx: &Ctx, report: &mut Report) -> Result<(), RunError> {
    const L: &str = "subdiff";
    for task in ctx.tasks("subdiff") {
        match task {
            Task::Subdiff { x0, eps, etas, splits, samples } => {
                let x0 = ctx.ov.x0.clone().unwrap_or_else(|| x0.clone());
                let xi = ctx.map.xgrid.node(&x0)?;
                let samples = match samples {
                    Some(name) => ctx.spec.grid(name)?.all_coords(),
                    None => ctx.xduals()?.ok_or_else(|| RunError::Usage("subdiff needs grids.xduals".into()))?.all_coords(),
                };
                let eps_list = ctx.ov.eps.map(|e| vec![e]).unwrap_or_else(|| eps.clone());
                for e in eps_list {
                    let r = marginal_subdiff_check(&ctx.phi, &ctx.map, xi, e, etas, *splits, &samples)?;
                    let tag = format!("@x0={},eps={e}", fmt_coords(&x0));
                    report.verdict(L, &format!("marginal_subdiff_easy{tag}"), r.easy_violations.is_empty(), None);
                    let note = format!("agreement {}/{}", r.rows.len() - r.disagreements.len(), r.rows.len());
                    if ctx.spec.meta.epigraph_overlap {
                        report.verdict(L, &format!("marginal_subdiff_agreement{tag}"), r.disagreements.is_empty(), Some(note));
                    }
                    for (k, row) in r.rows.iter().enumerate() {
                        report.row(
                            L,
                            &format!("marginal_subdiff_eps{e}"),
                            k,
                            &row.s,
                            &[("lhs", row.lhs.to_string()), ("rhs", row.rhs.to_string())],
                        );
                    }
                    report.section(L, "marginal_subdiff", &r);
                }
            }
            Task::ConjSubdiff { x0star, eps, etas, splits } => {
                let xd = ctx.xduals()?.ok_or_else(|| RunError::Usage("conj_subdiff needs grids.xduals".into()))?;
                let eps_list = ctx.ov.eps.map(|e| vec![e]).unwrap_or_else(|| eps.clone());
                for e in eps_list {
                    let r = conj_subdiff_check(&ctx.phi, &ctx.map, x0star, e, etas, *splits, &xd)?;
                    let tag = format!("@x0star={},eps={e}", fmt_coords(x0star));
                    report.verdict(
                        L,
                        &format!("conj_subdiff_easy{tag}"),
                        r.easy_violations.is_empty(),
                        Some(format!("agreement rate {}", r.agreement_rate)),
                    );
                    for i in 0..ctx.map.xgrid.len() {
                        report.row(
                            L,
                            &format!("conj_subdiff_eps{e}"),
                            i,
                            &ctx.map.xgrid.coords(i),
                            &[("lhs", r.lhs.contains(&i).to_string()), ("rhs", r.rhs.contains(&i).to_string())],
                        );
                    }
                    report.section(L, "conj_subdiff", &r);
                }
            }
            _ => {}
        }
    }
    Ok(())
}

fn duality_layer(ctx: &Ctx, report: &mut Report, required: bool) -> Result<(), RunError> {
    const L: &str = "duality";
    let Some(xd) = ctx.xduals()? else {
        if required {
            return Err(RunError::Usage("the duality command needs grids.xduals or --dual-range".into()));
        }
        return Ok(());
    };
    let yd = match ctx.yduals() {
        Some(y) => y,
        None if required => return Err(RunError::Usage("the duality command needs grids.yduals".into())),
        None => return Ok(()),
    };
    let r = strong_duality_check(&ctx.phi, &ctx.map, &xd, &yd)?;
    for v in &r.verdicts {
        report.verdict(L, &v.name, v.pass, None);
    }
    report.row(
        L,
        "duality",
        0,
        r.witness.as_deref().unwrap_or(&[]),
        &[("vp", r.vp.to_string()), ("vd1", r.vd1.to_string()), ("vd2", r.vd2.to_string()), ("gap", r.gap.to_string())],
    );
    report.section(L, "duality", &r);
    if ctx.spec.lagrange.is_some() {
        lagrangian_layer(ctx, report)?;
    }
    Ok(())
}

fn lagrangian_layer(ctx: &Ctx, report: &mut Report) -> Result<(), RunError> {
    const L: &str = "duality";
    let Some(g) = &ctx.spec.lagrange else {
        return Err(RunError::Usage("the lagrangian command needs map.lagrange".into()));
    };
    let f = ctx.spec.objective_in_y().ok_or_else(|| RunError::Usage("Lagrangian checks need phi.expr in y only".into()))?;
    let (xg, yg) = (&ctx.problem.xgrid, &ctx.problem.ygrid);
    for task in ctx.tasks("lagrangian") {
        let Task::Lagrangian { lambdas, probe } = task else { continue };
        let mut pts = ctx.spec.grid(lambdas)?.all_coords();
        pts.extend(probe.iter().cloned());
        let r = lagrangian_identity_check(f, g, xg, yg, &pts)?;
        for (k, row) in r.rows.iter().enumerate() {
            report.row(
                L,
                "lagrangian",
                k,
                &row.lambda,
                &[
                    ("lhat", row.lhat.to_string()),
                    ("mu_star_at_minus_lambda", row.mustar.to_string()),
                    ("expected", row.expected.to_string()),
                    ("divergence_flagged", row.divergence_flagged.to_string()),
                ],
            );
        }
        report.verdict(L, "lagrangian_identity", r.pass, None);
        report.section(L, "lagrangian_identity", &r);
    }
    if ctx.spec.meta.slater {
        let s = slater_strong_duality_check(f, g, yg)?;
        report.verdict(L, "slater_strong_duality", s.status == SlaterStatus::Verified, Some(format!("Vp = {}, Vd = {}", s.vp, s.vd)));
        report.section(L, "slater", &s);
    }
    Ok(())
}

fn load_set(ctx: &Ctx, name: &str) -> Result<RasterSet, RunError> {
    let set = match &ctx.spec.sets[name] {
        SetSpec::Raster(p) => {
            let path = ctx.spec.base_dir.join(p);
            let text = std::fs::read_to_string(&path).map_err(|source| RunError::Io { path, source })?;
            RasterSet::parse(&text)?
        }
        SetSpec::Expr { expr, grid } => RasterSet::from_expr(expr, ctx.spec.grid(grid)?.clone())?,
    };
    Ok(match ctx.ov.refine {
        Some(k) if k > 1 => set.refine(k)?,
        _ => set,
    })
}

fn nearconvex_layer(ctx: &Ctx, report: &mut Report) -> Result<(), RunError> {
    const L: &str = "nearconvex";
    for (k, task) in ctx.tasks("nearconvex").enumerate() {
        let Task::Nearconvex { check, set, with, axes, expect, expect_witness } = task else { continue };
        let s = load_set(ctx, set)?;
        let (outcome, witness, data) = match check {
            NearCheck::IntNearlyConvex => {
                let v = is_int_nearly_convex(&s);
                let w = v.witness.map(|i| s.grid.coords(i));
                (v.verdict, w, serde_json::to_value(&v).expect("serializes"))
            }
            NearCheck::Intersection => {
                let other = load_set(ctx, with.as_deref().expect("validated"))?;
                match intersection_preservation_check(&s, &other) {
                    Ok(r) => (r.pass, None, serde_json::to_value(&r).expect("serializes")),
                    Err(marginlab_core::Error::HypothesisNotMet(m)) => (false, None, serde_json::json!({ "hypothesis_not_met": m })),
                    Err(e) => return Err(e.into()),
                }
            }
            NearCheck::Projection => {
                let t = LinearMap::projection(&s.grid, axes.as_deref().expect("validated"))?;
                let r = image_preservation_check(&s, &t)?;
                (r.pass, None, serde_json::to_value(&r).expect("serializes"))
            }
        };
        let check_name = match check {
            NearCheck::IntNearlyConvex => "int_nearly_convex",
            NearCheck::Intersection => "intersection",
            NearCheck::Projection => "projection",
        };
        let label = match with {
            Some(w) => format!("{check_name}:{set}&{w}"),
            None => format!("{check_name}:{set}"),
        };
        let witness_ok = match expect_witness {
            Some(e) => witness.as_ref().is_some_and(|w| w.iter().zip(e).all(|(a, b)| (a - b).abs() <= 1e-9)),
            None => true,
        };
        let pass = expect.map_or(outcome, |e| e == outcome) && witness_ok;
        let note = format!("outcome {outcome}{}", witness.as_ref().map(|w| format!(", witness ({})", fmt_coords(w))).unwrap_or_default());
        report.verdict(L, &label, pass, Some(note));
        report.row(L, "nearconvex", k, witness.as_deref().unwrap_or(&[]), &[("check", label.clone()), ("outcome", outcome.to_string())]);
        report.section(L, &label, &data);
    }
    Ok(())
}
