//! Acceptance suite. One line per criterion; exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command as Process, ExitCode};
use std::time::{Duration, Instant};

use marginlab::run::{run, Command, Overrides};
use marginlab::spec::{parse_spec, ProblemSpec};
use marginlab_core::conjugate::{conjugate, conjugate_fast};
use marginlab_core::duality::{
    conjugate_representation_check, dual_value_1, dual_value_2, lagrangian_identity_check, primal_value, slater_strong_duality_check,
    strong_duality_check, SlaterStatus,
};
use marginlab_core::grid::dot;
use marginlab_core::marginal::{domain_identity_check, epigraph_projection_check, lipschitz_probe, marginal, semicontinuity_probe};
use marginlab_core::random;
use marginlab_core::subdiff::{eps_subdifferential, grid_samples, marginal_subdiff_check, restricted_conjugate_check, sum_rule_check};
use marginlab_core::{DualGrid, ExtReal, GriddedFunction, SetValuedMap};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const FIXTURES: [&str; 7] =
    ["abs_tube", "diagonal_nonconvex", "jump_not_lsc", "lagrangian_quadratic", "lp_linear", "nearconvex_suite", "parabola_halfline"];

fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.spec"))
}

fn load(name: &str) -> ProblemSpec {
    let path = fixture_path(name);
    parse_spec(&std::fs::read_to_string(&path).unwrap(), path.parent().unwrap()).unwrap()
}

fn build(spec: &ProblemSpec) -> (GriddedFunction, SetValuedMap) {
    spec.problem.build().unwrap()
}

fn duals_of(spec: &ProblemSpec) -> (DualGrid, DualGrid) {
    let fallback = || DualGrid::uniform(-4.0, 4.0, 17).unwrap();
    let x = spec.grids.get("xduals").cloned().map(DualGrid).unwrap_or_else(fallback);
    let y = spec.grids.get("yduals").cloned().map(DualGrid).unwrap_or_else(fallback);
    (x, y)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, || format!("took {:.2} s, limit {limit} s", elapsed.as_secs_f64()))
}

fn brute_conjugate(f: &GriddedFunction, s: f64) -> f64 {
    let a = f.grid.axis(0);
    let h = (a.hi - a.lo) / (a.count - 1) as f64;
    (0..f.len()).map(|i| s * (a.lo + i as f64 * h) - f.values[i].to_f64()).fold(f64::NEG_INFINITY, f64::max)
}

fn conjugate_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..200 {
        let (f, duals) = random::conjugate_case(seed, 1000);
        let fast = conjugate_fast(&f, &duals).map_err(|e| e.to_string())?;
        let slow = conjugate(&f, &duals).map_err(|e| e.to_string())?;
        for j in 0..duals.len() {
            worst = worst.max(fast.values[j].distance(slow.values[j]));
            worst = worst.max((fast.values[j].to_f64() - brute_conjugate(&f, duals.coords(j)[0])).abs());
        }
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-12, || format!("max deviation {worst}"))?;
    within(elapsed, 5.0)?;
    Ok(format!("max deviation {worst:e}, {:.2} s", elapsed.as_secs_f64()))
}

fn fenchel_young_and_nesting() -> Outcome {
    let eps = [0.0, 0.125, 0.25, 0.5, 1.0];
    let (mut fy, mut nest, mut checked) = (0usize, 0usize, 0usize);
    for seed in 0..100 {
        let inst = random::instance(seed);
        let mu = marginal(&inst.phi, &inst.map).unwrap().mu;
        let duals = DualGrid::uniform(-4.0, 4.0, 33).unwrap();
        let mustar = conjugate(&mu, &duals).unwrap();
        for i in 0..mu.len() {
            let x = mu.grid.coords(i);
            for j in 0..duals.len() {
                checked += 1;
                if mu.values[i] + mustar.values[j] < ExtReal::new(dot(&x, &duals.coords(j))) {
                    fy += 1;
                }
            }
            if !mu.values[i].is_finite() {
                continue;
            }
            let sets: Vec<_> = eps.iter().map(|&e| eps_subdifferential(&mu, i, e)).collect();
            for s in duals.all_coords() {
                for k in 1..sets.len() {
                    if sets[k - 1].contains(&s) && !sets[k].contains(&s) {
                        nest += 1;
                    }
                }
            }
        }
    }
    ensure(fy == 0 && nest == 0, || format!("{fy} Fenchel–Young and {nest} nesting violations"))?;
    Ok(format!("{checked} pairings, 0 violations"))
}

fn exact_identities_on(phi: &GriddedFunction, map: &SetValuedMap, xd: &DualGrid, yd: &DualGrid) -> Result<(), String> {
    let levels: Vec<f64> = (-16..=16).map(|k| k as f64 / 4.0).collect();
    ensure(domain_identity_check(phi, map).unwrap().holds, || "domain identity".into())?;
    ensure(epigraph_projection_check(phi, map, &levels).unwrap().holds(), || "strict epigraph projection".into())?;
    ensure(restricted_conjugate_check(phi, map, xd).unwrap().exact, || "restricted conjugate".into())?;
    let rep = conjugate_representation_check(phi, map, xd, yd, 0.0).unwrap();
    ensure(rep.one_sided, || "representation upper bound".into())?;
    let mu = marginal(phi, map).unwrap().mu;
    let samples = grid_samples(xd);
    for x0 in 0..mu.len() {
        if mu.values[x0].is_finite() {
            let r = marginal_subdiff_check(phi, map, x0, 0.25, &[0.5, 0.125], 5, &samples).unwrap();
            ensure(r.easy_violations.is_empty(), || format!("marginal subdifferential inclusion at node {x0}"))?;
        }
    }
    let g1 = mu.map(|v| if v.is_finite() { v } else { ExtReal::new(8.0) });
    let g2 = GriddedFunction::from_f64(mu.grid.clone(), &mu.grid.all_coords().iter().map(|x| x[0] * x[0]).collect::<Vec<_>>()).unwrap();
    for x0 in 0..mu.len() {
        let s = sum_rule_check(&g1, &g2, x0, 0.5, 5, &samples).unwrap();
        ensure(s.easy_violations.is_empty(), || format!("sum rule inclusion at node {x0}"))?;
    }
    Ok(())
}

fn exact_identities() -> Outcome {
    for name in FIXTURES {
        let spec = load(name);
        let (phi, map) = build(&spec);
        let (xd, yd) = duals_of(&spec);
        exact_identities_on(&phi, &map, &xd, &yd).map_err(|e| format!("{name}: {e}"))?;
    }
    for seed in 0..100 {
        let inst = random::instance(seed);
        exact_identities_on(&inst.phi, &inst.map, &inst.xduals, &inst.yduals).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    Ok(format!("{} fixtures and 100 random instances", FIXTURES.len()))
}

fn representation_equality() -> Outcome {
    let start = Instant::now();
    let spec = load("lagrangian_quadratic");
    let (phi, map) = build(&spec);
    let (xd, yd) = duals_of(&spec);
    let rep = conjugate_representation_check(&phi, &map, &xd, &yd, 0.0).unwrap();
    let worst = rep.residual.iter().map(|r| r.abs()).fold(0.0, f64::max);
    ensure(worst == 0.0, || format!("residual {worst} on the Lagrangian fixture"))?;
    for name in ["parabola_halfline", "abs_tube", "lp_linear"] {
        let spec = load(name);
        let (phi, map) = build(&spec);
        let (xd, yd) = duals_of(&spec);
        let rep = conjugate_representation_check(&phi, &map, &xd, &yd, 0.0).unwrap();
        for j in 0..xd.len() {
            ensure(rep.residual_refined[j] <= rep.residual[j], || format!("{name}: residual grows at dual node {j}"))?;
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, 10.0)?;
    Ok(format!("residual 0 at {} dual nodes, {:.2} s", xd.len(), elapsed.as_secs_f64()))
}

fn subdiff_agreement() -> Outcome {
    let start = Instant::now();
    let spec = load("lagrangian_quadratic");
    let (phi, map) = build(&spec);
    let samples = spec.grids["samples"].all_coords();
    ensure(samples.len() == 41, || "sample grid must have 41 points".into())?;
    let x0 = map.xgrid.node(&[0.0]).unwrap();
    for eps in [0.0, 0.5] {
        let r = marginal_subdiff_check(&phi, &map, x0, eps, &[1.0, 0.1, 0.01, 0.001], 9, &samples).unwrap();
        ensure(r.disagreements.is_empty(), || format!("eps {eps}: disagreement at samples {:?}", r.disagreements))?;
        let at = r.rows.iter().find(|row| (row.s[0] + 2.0).abs() < 1e-12).ok_or("no sample at -2")?;
        ensure(at.lhs && at.rhs, || format!("eps {eps}: -2 not in both sides"))?;
    }
    let elapsed = start.elapsed();
    within(elapsed, 10.0)?;
    Ok(format!("41/41 at eps 0 and 0.5, {:.2} s", elapsed.as_secs_f64()))
}

fn lagrangian_identity() -> Outcome {
    let spec = load("lagrangian_quadratic");
    let f = spec.objective_in_y().unwrap();
    let g = spec.lagrange.as_ref().unwrap();
    let mut lambdas = spec.grids["lambda"].all_coords();
    lambdas.push(vec![-1.0]);
    let r = lagrangian_identity_check(f, g, &spec.problem.xgrid, &spec.problem.ygrid, &lambdas).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for row in &r.rows {
        if row.lambda[0] >= 0.0 {
            worst = worst.max(row.mustar.distance(-row.lhat));
        } else {
            ensure(row.divergence_flagged, || format!("λ = {:?} not flagged", row.lambda))?;
        }
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst}"))?;
    ensure(r.pass, || "identity report failed".into())?;
    Ok(format!("{} multipliers, max deviation {worst:e}, negative probe flagged", r.rows.len() - 1))
}

fn duality_chain() -> Outcome {
    for seed in 0..100 {
        let inst = random::instance(seed);
        let mu = marginal(&inst.phi, &inst.map).unwrap().mu;
        let vp = primal_value(&inst.phi, &inst.map).unwrap();
        let (vd1, _) = dual_value_1(&mu, &inst.xduals).unwrap();
        let vd2 = dual_value_2(&inst.phi, &inst.map, &inst.xduals, &inst.yduals).unwrap();
        ensure(vd2 <= vd1 && vd1 <= vp, || format!("seed {seed}: {vd2} <= {vd1} <= {vp} fails"))?;
    }
    let spec = load("lagrangian_quadratic");
    let (phi, map) = build(&spec);
    let (xd, yd) = duals_of(&spec);
    let r = strong_duality_check(&phi, &map, &xd, &yd).unwrap();
    ensure(r.witness.as_deref() == Some(&[-2.0][..]), || format!("witness {:?}", r.witness))?;
    ensure(r.gap.to_f64().abs() <= 1e-9, || format!("gap {}", r.gap))?;
    let s = slater_strong_duality_check(spec.objective_in_y().unwrap(), spec.lagrange.as_ref().unwrap(), &spec.problem.ygrid).unwrap();
    ensure(s.status == SlaterStatus::Verified, || format!("Slater status {:?}", s.status))?;

    let spec = load("diagonal_nonconvex");
    let (phi, map) = build(&spec);
    let (xd, yd) = duals_of(&spec);
    let r = strong_duality_check(&phi, &map, &xd, &yd).unwrap();
    ensure(r.witness.is_none(), || "diagonal fixture has a subgradient at 0".into())?;
    ensure((r.gap.to_f64() - 1.0).abs() <= 1e-9, || format!("diagonal gap {}", r.gap))?;
    ensure(r.pass(), || "diagonal verdicts".into())?;
    Ok("100 random chains; Slater gap 0 at witness -2; diagonal gap 1".into())
}

fn nearconvex_suite() -> Outcome {
    let spec = load("nearconvex_suite");
    let mut outcomes = Vec::new();
    for refine in [None, Some(2)] {
        let report = run(Command::Nearconvex, &spec, &Overrides { refine, ..Default::default() }).map_err(|e| e.to_string())?;
        for v in &report.verdicts {
            ensure(v.pass, || format!("{} at refinement {refine:?}: {:?}", v.check, v.note))?;
        }
        // Witness nodes in a gap may move with the grid; the outcome may not.
        let outcome = |v: &marginlab::report::VerdictLine| v.note.as_deref().and_then(|n| n.split(',').next()).map(str::to_string);
        outcomes.push(report.verdicts.iter().map(|v| (v.check.clone(), outcome(v))).collect::<Vec<_>>());
    }
    ensure(outcomes[0] == outcomes[1], || "verdicts change under refinement".into())?;
    Ok(format!("{} checks, stable under refinement x2", outcomes[0].len()))
}

fn semicontinuity() -> Outcome {
    let jump = load("jump_not_lsc");
    let r = semicontinuity_probe(&jump.problem, &[0.0], 3).unwrap();
    ensure(r.levels.len() == 3, || format!("{} levels", r.levels.len()))?;
    ensure(r.lsc_consistent && !r.usc_consistent, || format!("jump fixture: lsc {} usc {}", r.lsc_consistent, r.usc_consistent))?;
    let cont = load("lagrangian_quadratic");
    let r = semicontinuity_probe(&cont.problem, &[0.0], 3).unwrap();
    ensure(r.lsc_consistent && r.usc_consistent, || format!("continuous fixture: lsc {} usc {}", r.lsc_consistent, r.usc_consistent))?;
    Ok("jump: lsc only; continuous: both".into())
}

fn lipschitz() -> Outcome {
    let mut notes = Vec::new();
    for (name, ell_phi, ell_f) in [("parabola_halfline", 2.0, 1.0), ("abs_tube", 2.0, 1.0)] {
        let spec = load(name);
        let (phi, map) = build(&spec);
        let mu = marginal(&phi, &map).unwrap().mu;
        let r = lipschitz_probe(&mu, ell_phi, ell_f);
        ensure(r.l_hat <= ell_f * ell_phi + ell_phi, || format!("{name}: {} > {}", r.l_hat, r.bound))?;
        notes.push(format!("{name} {} <= {}", r.l_hat, r.bound));
    }
    Ok(notes.join("; "))
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for name in FIXTURES {
        let mut bytes = Vec::new();
        for k in 0..2 {
            let out = dir.path().join(format!("{name}-{k}"));
            let status = Process::new(env!("CARGO_BIN_EXE_marginlab"))
                .args(["verify-all", "--spec"])
                .arg(fixture_path(name))
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?
                .status;
            ensure(status.success(), || format!("{name}: exit {status}"))?;
            bytes.push((std::fs::read(out.join("report.json")).unwrap(), std::fs::read(out.join("report.csv")).unwrap()));
        }
        ensure(bytes[0] == bytes[1], || format!("{name}: reports differ"))?;
    }
    let elapsed = start.elapsed();
    within(elapsed, 60.0)?;
    Ok(format!("{} fixtures, {:.2} s", FIXTURES.len(), elapsed.as_secs_f64()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("conjugate oracle equivalence", conjugate_oracle),
        ("Fenchel–Young and ε-nesting", fenchel_young_and_nesting),
        ("exact finite identities", exact_identities),
        ("conjugate representation equality", representation_equality),
        ("marginal subdifferential agreement", subdiff_agreement),
        ("Lagrangian dual identity", lagrangian_identity),
        ("duality chain", duality_chain),
        ("near-convexity suite", nearconvex_suite),
        ("semicontinuity probe", semicontinuity),
        ("Lipschitz bound", lipschitz),
        ("CLI determinism", determinism),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(note) => println!("[PASS] {:>2}. {name}: {note} [{secs:.2} s]", k + 1),
            Err(note) => {
                failed += 1;
                println!("[FAIL] {:>2}. {name}: {note} [{secs:.2} s]", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
