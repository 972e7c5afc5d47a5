//! Problem spec files: TOML with a fixed set of sections.
//!
//! ```toml
//! name = "lagrangian_quadratic"
//!
//! [grids]
//! x = "-1:1:9"
//! y = "0:2:9"
//! xduals = "-4:4:17"
//!
//! [phi]
//! expr = "y^2"
//!
//! [map]
//! lagrange = ["1 - y"]
//!
//! [[task]]
//! kind = "subdiff"
//! x0 = [0.0]
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Deserialize;
use thiserror::Error;

use marginlab_core::problem::{MapSource, PhiSource, Problem};
use marginlab_core::{Axis, Expr, ExtReal, Grid};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unknown key `{key}` at line {line}, column {column}")]
    UnknownKey { key: String, line: usize, column: usize },
    #[error("missing section `{0}`")]
    MissingSection(String),
    #[error("conflicting sources: {0}")]
    Conflict(String),
    #[error("reference to undeclared {0}")]
    UnknownReference(String),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error(transparent)]
    Core(#[from] marginlab_core::Error),
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    /// `φ` and `F` come from convex analytic data.
    #[serde(default)]
    pub convex: bool,
    /// The interiors of `epi φ` and `gph F × ℝ` meet.
    #[serde(default)]
    pub interior_overlap: bool,
    /// The interiors of `epi φ` and `gph F × [0, ∞)` meet.
    #[serde(default)]
    pub epigraph_overlap: bool,
    /// Some `y` has `g_i(y) < 0` for every Lagrange constraint.
    #[serde(default)]
    pub slater: bool,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    /// Strict epigraph identity at the given levels (default: the finite
    /// values of `φ`).
    Epigraph {
        levels: Option<Vec<f64>>,
    },
    Semicontinuity {
        x0: Vec<f64>,
        #[serde(default = "default_levels")]
        levels: usize,
        expect_lsc: Option<bool>,
        expect_usc: Option<bool>,
    },
    Lipschitz {
        ell_phi: f64,
        ell_f: f64,
    },
    /// Asserts equality in the conjugate representation of `μ*`; needs
    /// `meta.interior_overlap`.
    Representation {
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
    Subdiff {
        x0: Vec<f64>,
        #[serde(default = "default_eps")]
        eps: Vec<f64>,
        #[serde(default = "default_etas")]
        etas: Vec<f64>,
        #[serde(default = "default_splits")]
        splits: usize,
        /// Grid of dual samples; `xduals` when absent.
        samples: Option<String>,
    },
    ConjSubdiff {
        x0star: Vec<f64>,
        #[serde(default = "default_eps")]
        eps: Vec<f64>,
        #[serde(default = "default_etas")]
        etas: Vec<f64>,
        #[serde(default = "default_splits")]
        splits: usize,
    },
    Lagrangian {
        /// Grid of nonnegative multipliers.
        lambdas: String,
        #[serde(default)]
        probe: Option<Vec<f64>>,
    },
    Nearconvex {
        check: NearCheck,
        set: String,
        /// Second operand of an intersection check.
        with: Option<String>,
        /// Kept coordinates of a projection check.
        axes: Option<Vec<usize>>,
        expect: Option<bool>,
        /// Expected witness node for a failing characterization.
        expect_witness: Option<Vec<f64>>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NearCheck {
    IntNearlyConvex,
    Intersection,
    Projection,
}

fn default_tolerance() -> f64 {
    1e-9
}
fn default_levels() -> usize {
    3
}
fn default_eps() -> Vec<f64> {
    vec![0.0]
}
fn default_etas() -> Vec<f64> {
    vec![1.0, 0.1, 0.01]
}
fn default_splits() -> usize {
    9
}

impl Task {
    pub fn command(&self) -> &'static str {
        match self {
            Task::Epigraph { .. } | Task::Semicontinuity { .. } | Task::Lipschitz { .. } => "marginal",
            Task::Representation { .. } => "conjugate",
            Task::Subdiff { .. } | Task::ConjSubdiff { .. } => "subdiff",
            Task::Lagrangian { .. } => "lagrangian",
            Task::Nearconvex { .. } => "nearconvex",
        }
    }
}

/// A named raster: a file in the raster text format, or `{x : expr ≤ 0}`
/// on a declared grid.
#[derive(Clone, Debug, PartialEq)]
pub enum SetSpec {
    Raster(PathBuf),
    Expr { expr: Expr, grid: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: String,
    grids: Option<BTreeMap<String, String>>,
    phi: Option<RawPhi>,
    map: Option<RawMap>,
    #[serde(default)]
    meta: Meta,
    #[serde(default)]
    sets: BTreeMap<String, RawSet>,
    #[serde(default, rename = "task")]
    tasks: Vec<Task>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhi {
    expr: Option<String>,
    table: Option<Vec<TableEntry>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TableEntry {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    lagrange: Option<Vec<String>>,
    constraints: Option<Vec<String>>,
    points: Option<Vec<Vec<f64>>>,
    full: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSet {
    raster: Option<String>,
    expr: Option<String>,
    grid: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub name: String,
    /// Every declared grid, including `x`, `y` and the dual grids.
    pub grids: BTreeMap<String, Grid>,
    pub problem: Problem,
    /// Constraint functions when `F(x) = {y : g(y) ≤ x}`.
    pub lagrange: Option<Vec<Expr>>,
    pub meta: Meta,
    pub sets: BTreeMap<String, SetSpec>,
    pub tasks: Vec<Task>,
    /// Directory that relative raster paths resolve against.
    pub base_dir: PathBuf,
}

impl ProblemSpec {
    pub fn grid(&self, name: &str) -> Result<&Grid, SpecError> {
        self.grids.get(name).ok_or_else(|| SpecError::UnknownReference(format!("grid `{name}`")))
    }

    /// The phi expression, if it only involves `y`.
    pub fn objective_in_y(&self) -> Option<&Expr> {
        match &self.problem.phi {
            PhiSource::Expr(e) if !e.uses(marginlab_core::expr::Block::X) => Some(e),
            _ => None,
        }
    }
}

/// `lo:hi:count` per axis, axes separated by commas.
pub fn parse_grid(text: &str) -> Result<Grid, SpecError> {
    let invalid = |m: String| SpecError::Invalid { key: text.to_string(), message: m };
    let axes = text
        .split(',')
        .map(|part| {
            let f: Vec<&str> = part.trim().split(':').collect();
            if f.len() != 3 {
                return Err(invalid(format!("axis `{part}` is not lo:hi:count")));
            }
            let lo: f64 = f[0].trim().parse().map_err(|_| invalid(format!("bad number `{}`", f[0])))?;
            let hi: f64 = f[1].trim().parse().map_err(|_| invalid(format!("bad number `{}`", f[1])))?;
            let n: usize = f[2].trim().parse().map_err(|_| invalid(format!("bad count `{}`", f[2])))?;
            Ok(Axis::new(lo, hi, n)?)
        })
        .collect::<Result<Vec<_>, SpecError>>()?;
    Ok(Grid::new(axes)?)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn from_toml(text: &str, e: toml::de::Error) -> SpecError {
    let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
    let message = e.message().to_string();
    if let Some(rest) = message.strip_prefix("unknown field `") {
        let key = rest.split('`').next().unwrap_or("").to_string();
        return SpecError::UnknownKey { key, line, column };
    }
    if let Some(rest) = message.strip_prefix("missing field `") {
        return SpecError::MissingSection(rest.split('`').next().unwrap_or("").to_string());
    }
    SpecError::Syntax { line, column, message }
}

fn parse_expr(key: &str, text: &str) -> Result<Expr, SpecError> {
    Expr::parse(text).map_err(|e| SpecError::Invalid { key: key.to_string(), message: e.to_string() })
}

/// Parses and validates a spec. `base_dir` anchors relative raster paths.
pub fn parse_spec(text: &str, base_dir: impl Into<PathBuf>) -> Result<ProblemSpec, SpecError> {
    let raw: RawSpec = toml::from_str(text).map_err(|e| from_toml(text, e))?;
    let raw_grids = raw.grids.ok_or_else(|| SpecError::MissingSection("grids".into()))?;
    let mut grids = BTreeMap::new();
    for (name, g) in &raw_grids {
        grids.insert(name.clone(), parse_grid(g)?);
    }
    let xgrid = grids.get("x").cloned().ok_or_else(|| SpecError::MissingSection("grids.x".into()))?;
    let ygrid = grids.get("y").cloned().ok_or_else(|| SpecError::MissingSection("grids.y".into()))?;

    let phi = raw.phi.ok_or_else(|| SpecError::MissingSection("phi".into()))?;
    let phi = match (phi.expr, phi.table) {
        (Some(e), None) => PhiSource::Expr(parse_expr("phi.expr", &e)?),
        (None, Some(t)) => PhiSource::Table(
            t.into_iter()
                .map(|v| match v {
                    TableEntry::Number(x) => Ok(ExtReal::new(x)),
                    TableEntry::Text(s) if s == "+inf" || s == "inf" => Ok(ExtReal::PosInf),
                    TableEntry::Text(s) if s == "-inf" => Ok(ExtReal::NegInf),
                    TableEntry::Text(s) => Err(SpecError::Invalid { key: "phi.table".into(), message: format!("`{s}`") }),
                })
                .collect::<Result<_, _>>()?,
        ),
        (Some(_), Some(_)) => return Err(SpecError::Conflict("phi has both `expr` and `table`".into())),
        (None, None) => return Err(SpecError::MissingSection("phi.expr or phi.table".into())),
    };

    let map = raw.map.ok_or_else(|| SpecError::MissingSection("map".into()))?;
    let given = [map.lagrange.is_some(), map.constraints.is_some(), map.points.is_some(), map.full.is_some()];
    if given.iter().filter(|&&b| b).count() > 1 {
        return Err(SpecError::Conflict("map takes exactly one of `lagrange`, `constraints`, `points`, `full`".into()));
    }
    let mut lagrange = None;
    let map = if let Some(g) = map.lagrange {
        let g = g.iter().map(|s| parse_expr("map.lagrange", s)).collect::<Result<Vec<_>, _>>()?;
        lagrange = Some(g.clone());
        MapSource::Inequalities(g)
    } else if let Some(c) = map.constraints {
        MapSource::Constraints(c.iter().map(|s| parse_expr("map.constraints", s)).collect::<Result<_, _>>()?)
    } else if let Some(p) = map.points {
        MapSource::Points(p)
    } else if let Some(full) = map.full {
        if !full {
            return Err(SpecError::Invalid { key: "map.full".into(), message: "only `true` is meaningful".into() });
        }
        MapSource::Full
    } else {
        return Err(SpecError::MissingSection("map source".into()));
    };

    let mut sets = BTreeMap::new();
    for (name, s) in raw.sets {
        let set = match (s.raster, s.expr, s.grid) {
            (Some(path), None, None) => SetSpec::Raster(PathBuf::from(path)),
            (None, Some(e), Some(grid)) => SetSpec::Expr { expr: parse_expr(&format!("sets.{name}.expr"), &e)?, grid },
            (None, Some(_), None) => return Err(SpecError::MissingSection(format!("sets.{name}.grid"))),
            _ => return Err(SpecError::Conflict(format!("set `{name}` takes either `raster` or `expr` with `grid`"))),
        };
        if let SetSpec::Expr { grid, .. } = &set {
            if !grids.contains_key(grid) {
                return Err(SpecError::UnknownReference(format!("grid `{grid}` in set `{name}`")));
            }
        }
        sets.insert(name, set);
    }

    let spec = ProblemSpec {
        name: raw.name,
        grids,
        problem: Problem { xgrid, ygrid, phi, map },
        lagrange,
        meta: raw.meta,
        sets,
        tasks: raw.tasks,
        base_dir: base_dir.into(),
    };
    validate_tasks(&spec)?;
    Ok(spec)
}

fn validate_tasks(spec: &ProblemSpec) -> Result<(), SpecError> {
    let set_ref = |s: &str| {
        if spec.sets.contains_key(s) {
            Ok(())
        } else {
            Err(SpecError::UnknownReference(format!("set `{s}`")))
        }
    };
    for task in &spec.tasks {
        match task {
            Task::Subdiff { samples: Some(g), .. } | Task::Lagrangian { lambdas: g, .. } => {
                spec.grid(g)?;
            }
            Task::Subdiff { samples: None, .. } | Task::ConjSubdiff { .. } => {
                spec.grid("xduals")?;
            }
            Task::Nearconvex { check, set, with, axes, .. } => {
                set_ref(set)?;
                match check {
                    NearCheck::Intersection => set_ref(with.as_deref().ok_or_else(|| SpecError::MissingSection("task.with".into()))?)?,
                    NearCheck::Projection if axes.is_none() => return Err(SpecError::MissingSection("task.axes".into())),
                    _ => {}
                }
            }
            _ => {}
        }
        if matches!(task, Task::Lagrangian { .. }) && spec.lagrange.is_none() {
            return Err(SpecError::MissingSection("map.lagrange".into()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "minimal"
[grids]
x = "-1:1:3"
y = "0:1:2"
[phi]
expr = "x + y"
[map]
full = true
[[task]]
kind = "epigraph"
"#;

    #[test]
    fn minimal_spec() {
        let s = parse_spec(MINIMAL, ".").unwrap();
        assert_eq!(s.name, "minimal");
        assert_eq!(s.problem.map, MapSource::Full);
        assert_eq!(s.tasks, vec![Task::Epigraph { levels: None }]);
        assert_eq!(s.grid("x").unwrap().len(), 3);
    }

    #[test]
    fn conflicting_map_sources() {
        let text = MINIMAL.replace("full = true", "lagrange = [\"1 - y\"]\npoints = [[0.0, 0.0]]");
        assert!(matches!(parse_spec(&text, "."), Err(SpecError::Conflict(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("expr = \"x + y\"", "expr = \"x + y\"\ncolour = 3");
        match parse_spec(&text, ".") {
            Err(SpecError::UnknownKey { key, line, .. }) => {
                assert_eq!(key, "colour");
                assert_eq!(line, 8);
            }
            other => panic!("{other:?}"),
        }
        let text = MINIMAL.replace("kind = \"epigraph\"", "kind = \"epigraph\"\nx0 = [0.0]");
        assert!(matches!(parse_spec(&text, "."), Err(SpecError::UnknownKey { .. })));
    }

    #[test]
    fn missing_and_dangling() {
        let text = MINIMAL.replace("[map]\nfull = true\n", "");
        assert!(matches!(parse_spec(&text, "."), Err(SpecError::MissingSection(s)) if s == "map"));
        let text = MINIMAL.replace("kind = \"epigraph\"", "kind = \"subdiff\"\nx0 = [0.0]");
        assert!(matches!(parse_spec(&text, "."), Err(SpecError::UnknownReference(_))));
        let text = MINIMAL.replace("x = \"-1:1:3\"", "x = \"-1:1\"");
        assert!(matches!(parse_spec(&text, "."), Err(SpecError::Invalid { .. })));
        assert!(matches!(parse_spec("name = ", "."), Err(SpecError::Syntax { line: 1, .. })));
    }

    #[test]
    fn grids_and_tables() {
        let g = parse_grid("0:1:3, -1:1:5").unwrap();
        assert_eq!(g.shape(), vec![3, 5]);
        let text = MINIMAL.replace("expr = \"x + y\"", "table = [0, 1, \"+inf\", 2, 3, 4]");
        let s = parse_spec(&text, ".").unwrap();
        assert_eq!(s.problem.phi().unwrap().values[2], ExtReal::PosInf);
    }
}
