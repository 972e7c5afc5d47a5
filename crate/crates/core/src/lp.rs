//! Seidel's randomized incremental linear programming in dimension ≤ 3.
//!
//! Maximizes `c·z` subject to `a_i·z ≤ b_i` inside the box `|z_k| ≤ LP_BOX`.
//! Constraints are visited in a shuffled order drawn from a fixed seed, so
//! results are deterministic.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::grid::MAX_DIM;

/// Half-width of the bounding box that keeps every program bounded.
pub const LP_BOX: f64 = 1e7;

const SEED: u64 = 0x5eed_1e55;
const ZERO_COEF: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
struct Con {
    a: [f64; MAX_DIM],
    b: f64,
}

fn slack(c: &Con, z: &[f64]) -> f64 {
    let mut lhs = 0.0;
    let mut scale = 1.0 + c.b.abs();
    for (a, v) in c.a.iter().zip(z) {
        lhs += a * v;
        scale += (a * v).abs();
    }
    // relative slack absorbs rounding from substitution
    c.b - lhs + 1e-11 * scale
}

/// Maximizer of `objective·z` over `{z : normals[i]·z ≤ bounds[i]}` within
/// the box, or `None` when the constraints are inconsistent.
///
/// Panics if the dimension exceeds three.
pub fn maximize(normals: &[Vec<f64>], bounds: &[f64], objective: &[f64]) -> Option<Vec<f64>> {
    let d = objective.len();
    assert!((1..=MAX_DIM).contains(&d), "LP dimension {d} not supported");
    assert_eq!(normals.len(), bounds.len());
    let mut cons: Vec<Con> = normals
        .iter()
        .zip(bounds)
        .map(|(n, &b)| {
            assert_eq!(n.len(), d, "constraint dimension");
            let mut a = [0.0; MAX_DIM];
            a[..d].copy_from_slice(n);
            Con { a, b }
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    cons.shuffle(&mut rng);
    let mut c = [0.0; MAX_DIM];
    c[..d].copy_from_slice(objective);
    solve(d, &cons, &c).map(|z| z[..d].to_vec())
}

/// Any point of the polyhedron; the box center is preferred on ties.
pub fn feasible_point(normals: &[Vec<f64>], bounds: &[f64], dim: usize) -> Option<Vec<f64>> {
    maximize(normals, bounds, &vec![0.0; dim])
}

/// An inclusion-minimal infeasible subset of the constraints, found by a
/// deletion filter; `None` when the system is feasible.
pub fn infeasible_subset(normals: &[Vec<f64>], bounds: &[f64], dim: usize) -> Option<Vec<usize>> {
    let mut keep: Vec<usize> = (0..normals.len()).collect();
    let infeasible = |idx: &[usize]| {
        let n: Vec<Vec<f64>> = idx.iter().map(|&i| normals[i].clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| bounds[i]).collect();
        feasible_point(&n, &b, dim).is_none()
    };
    if !infeasible(&keep) {
        return None;
    }
    let mut pos = 0;
    while pos < keep.len() {
        let removed = keep.remove(pos);
        if !infeasible(&keep) {
            keep.insert(pos, removed);
            pos += 1;
        }
    }
    Some(keep)
}

#[allow(clippy::needless_range_loop)]
fn solve(d: usize, cons: &[Con], c: &[f64; MAX_DIM]) -> Option<[f64; MAX_DIM]> {
    if d == 1 {
        return solve_1d(cons, c[0]);
    }
    let mut z = [0.0; MAX_DIM];
    for k in 0..d {
        z[k] = box_choice(c[k]);
    }
    for i in 0..cons.len() {
        if slack(&cons[i], &z[..d]) >= 0.0 {
            continue;
        }
        let h = cons[i];
        // eliminate the variable with the largest coefficient
        let k = (0..d).max_by(|&p, &q| h.a[p].abs().total_cmp(&h.a[q].abs())).expect("d ≥ 1");
        if h.a[k].abs() <= ZERO_COEF {
            return None;
        }
        let sub = |v: &Con| -> Con {
            // v·z ≤ b with z_k = (h.b − Σ_{j≠k} h.a_j z_j) / h.a_k
            let r = v.a[k] / h.a[k];
            let mut a = [0.0; MAX_DIM];
            let mut t = 0;
            for j in 0..d {
                if j != k {
                    a[t] = v.a[j] - r * h.a[j];
                    t += 1;
                }
            }
            Con { a, b: v.b - r * h.b }
        };
        let mut reduced: Vec<Con> = cons[..i].iter().map(sub).collect();
        let mut upper = Con { a: [0.0; MAX_DIM], b: LP_BOX };
        upper.a[k] = 1.0;
        let mut lower = Con { a: [0.0; MAX_DIM], b: LP_BOX };
        lower.a[k] = -1.0;
        reduced.push(sub(&upper));
        reduced.push(sub(&lower));
        let r = c[k] / h.a[k];
        let mut rc = [0.0; MAX_DIM];
        let mut t = 0;
        for j in 0..d {
            if j != k {
                rc[t] = c[j] - r * h.a[j];
                t += 1;
            }
        }
        let w = solve(d - 1, &reduced, &rc)?;
        let mut t = 0;
        let mut acc = h.b;
        for j in 0..d {
            if j != k {
                z[j] = w[t];
                acc -= h.a[j] * w[t];
                t += 1;
            }
        }
        z[k] = acc / h.a[k];
    }
    Some(z)
}

fn box_choice(c: f64) -> f64 {
    if c > 0.0 {
        LP_BOX
    } else if c < 0.0 {
        -LP_BOX
    } else {
        0.0
    }
}

fn solve_1d(cons: &[Con], c: f64) -> Option<[f64; MAX_DIM]> {
    let (mut lo, mut hi) = (-LP_BOX, LP_BOX);
    for h in cons {
        let a = h.a[0];
        if a.abs() <= ZERO_COEF {
            if h.b < -1e-11 * (1.0 + h.b.abs()) {
                return None;
            }
        } else if a > 0.0 {
            hi = hi.min(h.b / a);
        } else {
            lo = lo.max(h.b / a);
        }
    }
    if lo > hi {
        if lo - hi > 1e-11 * (1.0 + lo.abs().max(hi.abs())) {
            return None;
        }
        let mid = 0.5 * (lo + hi);
        lo = mid;
        hi = mid;
    }
    let z = if c > 0.0 {
        hi
    } else if c < 0.0 {
        lo
    } else {
        0.0f64.clamp(lo, hi)
    };
    Some([z, 0.0, 0.0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_interval() {
        let n = vec![vec![1.0], vec![-1.0]];
        assert_eq!(maximize(&n, &[2.0, 3.0], &[1.0]), Some(vec![2.0]));
        assert_eq!(maximize(&n, &[2.0, 3.0], &[-1.0]), Some(vec![-3.0]));
        assert_eq!(maximize(&n, &[-1.0, -1.0], &[1.0]), None);
    }

    #[test]
    fn triangle_in_the_plane() {
        // x ≥ 0, y ≥ 0, x + y ≤ 1
        let n = vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]];
        let b = [0.0, 0.0, 1.0];
        let z = maximize(&n, &b, &[2.0, 1.0]).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-9 && z[1].abs() < 1e-9);
        let z = maximize(&n, &b, &[-1.0, -1.0]).unwrap();
        assert!((z[0] + z[1]).abs() < 1e-9);
    }

    #[test]
    fn infeasible_in_three_dimensions() {
        // x + y + z ≥ 2 together with each coordinate ≤ 0.5
        let n = vec![vec![-1.0, -1.0, -1.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        let b = [-2.0, 0.5, 0.5, 0.5, 5.0];
        assert!(feasible_point(&n, &b, 3).is_none());
        let core = infeasible_subset(&n, &b, 3).unwrap();
        assert_eq!(core, vec![0, 1, 2, 3]);
        assert!(infeasible_subset(&n[1..], &b[1..], 3).is_none());
    }

    #[test]
    fn unconstrained_optimum_is_a_box_corner() {
        assert_eq!(maximize(&[], &[], &[1.0, -1.0]), Some(vec![LP_BOX, -LP_BOX]));
        assert_eq!(feasible_point(&[], &[], 2), Some(vec![0.0, 0.0]));
    }

    #[test]
    fn degenerate_zero_rows() {
        let n = vec![vec![0.0, 0.0]];
        assert!(feasible_point(&n, &[0.0], 2).is_some());
        assert!(feasible_point(&n, &[-1.0], 2).is_none());
    }
}
