//! Polyhedra given by finitely many closed halfspaces `{s : ⟨a, s⟩ ≤ b}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{dot, MAX_DIM};
use crate::lp;

/// Membership slack for every halfspace.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub bound: f64,
}

/// Redundant halfspaces are kept; every query is exact regardless.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HPolyhedron {
    pub dim: usize,
    pub halfspaces: Vec<Halfspace>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Query<'a> {
    Membership(&'a [f64]),
    Emptiness,
    Interval1d,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Answer {
    Member(bool),
    /// `certificate` indexes an infeasible subset of the halfspaces.
    Empty {
        empty: bool,
        certificate: Option<Vec<usize>>,
    },
    /// `None` for an empty interval; bounds may be infinite.
    Interval(Option<(f64, f64)>),
}

impl HPolyhedron {
    /// The whole space.
    pub fn full(dim: usize) -> Self {
        HPolyhedron { dim, halfspaces: Vec::new() }
    }

    /// The canonical empty polyhedron `{s : ⟨0, s⟩ ≤ −1}`.
    pub fn empty(dim: usize) -> Self {
        HPolyhedron { dim, halfspaces: vec![Halfspace { normal: vec![0.0; dim], bound: -1.0 }] }
    }

    pub fn push(&mut self, normal: Vec<f64>, bound: f64) {
        debug_assert_eq!(normal.len(), self.dim);
        self.halfspaces.push(Halfspace { normal, bound });
    }

    pub fn contains(&self, s: &[f64]) -> bool {
        self.halfspaces.iter().all(|h| dot(&h.normal, s) <= h.bound + MEMBERSHIP_TOL)
    }

    fn lp_data(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let normals = self.halfspaces.iter().map(|h| h.normal.clone()).collect();
        let bounds = self.halfspaces.iter().map(|h| h.bound + MEMBERSHIP_TOL).collect();
        (normals, bounds)
    }

    /// Emptiness with the same tolerance as [`HPolyhedron::contains`].
    pub fn is_empty(&self) -> Result<bool> {
        Ok(self.any_point()?.is_none())
    }

    /// Some member, chosen deterministically; `None` when empty.
    pub fn any_point(&self) -> Result<Option<Vec<f64>>> {
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        if self.dim == 1 {
            return Ok(self.interval().map(|(lo, hi)| vec![interval_point(lo, hi)]));
        }
        let (n, b) = self.lp_data();
        Ok(lp::feasible_point(&n, &b, self.dim))
    }

    /// Maximizer of `⟨c, s⟩` over the polyhedron clipped to `|s_k| ≤ LP_BOX`.
    pub fn maximize(&self, c: &[f64]) -> Result<Option<Vec<f64>>> {
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        let (n, b) = self.lp_data();
        Ok(lp::maximize(&n, &b, c))
    }

    /// Exact interval of a one-dimensional polyhedron, computed from the
    /// halfspaces without slack. Rounding-level inversions collapse to the
    /// midpoint.
    fn interval(&self) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for h in &self.halfspaces {
            let a = h.normal[0];
            if a == 0.0 {
                if h.bound < -MEMBERSHIP_TOL {
                    return None;
                }
            } else if a > 0.0 {
                hi = hi.min(h.bound / a);
            } else {
                lo = lo.max(h.bound / a);
            }
        }
        if lo > hi {
            // same acceptance rule as `contains` at the crossing point
            let mid = 0.5 * (lo + hi);
            if !self.contains(&[mid]) {
                return None;
            }
            return Some((mid, mid));
        }
        Some((lo, hi))
    }

    pub fn query(&self, q: Query<'_>) -> Result<Answer> {
        match q {
            Query::Membership(s) => {
                if s.len() != self.dim {
                    return Err(Error::DimensionMismatch(format!("{}-D point for {}-D polyhedron", s.len(), self.dim)));
                }
                Ok(Answer::Member(self.contains(s)))
            }
            Query::Emptiness => {
                if self.dim == 0 || self.dim > MAX_DIM {
                    return Err(Error::UnsupportedDimension(self.dim));
                }
                let (n, b) = self.lp_data();
                let certificate = if self.dim == 1 {
                    if self.interval().is_some() {
                        None
                    } else {
                        lp::infeasible_subset(&n, &b, 1).or_else(|| Some(self.interval_certificate()))
                    }
                } else {
                    lp::infeasible_subset(&n, &b, self.dim)
                };
                Ok(Answer::Empty { empty: certificate.is_some(), certificate })
            }
            Query::Interval1d => {
                if self.dim != 1 {
                    return Err(Error::UnsupportedDimension(self.dim));
                }
                Ok(Answer::Interval(self.interval()))
            }
        }
    }

    /// Tightest lower and upper halfspaces of an empty interval.
    fn interval_certificate(&self) -> Vec<usize> {
        let mut lo = (f64::NEG_INFINITY, usize::MAX);
        let mut hi = (f64::INFINITY, usize::MAX);
        for (i, h) in self.halfspaces.iter().enumerate() {
            let a = h.normal[0];
            if a == 0.0 && h.bound < -MEMBERSHIP_TOL {
                return vec![i];
            }
            if a > 0.0 && h.bound / a < hi.0 {
                hi = (h.bound / a, i);
            }
            if a < 0.0 && h.bound / a > lo.0 {
                lo = (h.bound / a, i);
            }
        }
        let mut c: Vec<usize> = [lo.1, hi.1].into_iter().filter(|&i| i != usize::MAX).collect();
        c.sort_unstable();
        c
    }

    /// One-dimensional bounds, `None` when empty.
    pub fn interval_1d(&self) -> Result<Option<(f64, f64)>> {
        match self.query(Query::Interval1d)? {
            Answer::Interval(i) => Ok(i),
            _ => unreachable!(),
        }
    }

    pub fn intersect(&self, other: &HPolyhedron) -> Result<HPolyhedron> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!("{}-D and {}-D polyhedra", self.dim, other.dim)));
        }
        let mut out = self.clone();
        out.halfspaces.extend(other.halfspaces.iter().cloned());
        Ok(out)
    }

    /// `{w : shift − w ∈ self}`.
    pub fn reflect_shift(&self, shift: &[f64]) -> HPolyhedron {
        let halfspaces = self
            .halfspaces
            .iter()
            .map(|h| Halfspace { normal: h.normal.iter().map(|a| -a).collect(), bound: h.bound - dot(&h.normal, shift) })
            .collect();
        HPolyhedron { dim: self.dim, halfspaces }
    }

    /// Embeds into a larger space: coordinate `k` of `self` becomes
    /// coordinate `positions[k]` of a `dim`-dimensional polyhedron.
    pub fn embed(&self, dim: usize, positions: &[usize]) -> HPolyhedron {
        let halfspaces = self
            .halfspaces
            .iter()
            .map(|h| {
                let mut normal = vec![0.0; dim];
                for (k, &p) in positions.iter().enumerate() {
                    normal[p] = h.normal[k];
                }
                Halfspace { normal, bound: h.bound }
            })
            .collect();
        HPolyhedron { dim, halfspaces }
    }
}

/// A representative point of `[lo, hi]`: the midpoint when bounded, the
/// finite end otherwise, `0` for the whole line.
pub fn interval_point(lo: f64, hi: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => 0.0,
    }
}
