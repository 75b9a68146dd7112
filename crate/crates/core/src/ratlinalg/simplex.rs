//! Phase-1 simplex over the rationals with Bland's rule.

use num_traits::{One, Signed, Zero};

use super::{RatVector, Rational};

/// Find `x >= 0` with `A x = b`, where `A` is given column-wise.
///
/// Returns `None` when the system is infeasible. `rows` is the length of `b`
/// and of every column.
pub fn nonneg_solution(columns: &[RatVector], b: &[Rational]) -> Option<RatVector> {
    let m = b.len();
    let n = columns.len();
    debug_assert!(columns.iter().all(|c| c.len() == m));
    if b.iter().all(Zero::is_zero) {
        return Some(vec![Rational::zero(); n]);
    }

    // tableau rows: [A | I | b] with each row negated if b_i < 0
    let width = n + m + 1;
    let mut t: Vec<Vec<Rational>> = Vec::with_capacity(m);
    for i in 0..m {
        let flip = b[i].is_negative();
        let mut row = Vec::with_capacity(width);
        for col in columns {
            row.push(if flip {
                -col[i].clone()
            } else {
                col[i].clone()
            });
        }
        for k in 0..m {
            row.push(if k == i {
                Rational::one()
            } else {
                Rational::zero()
            });
        }
        row.push(b[i].abs());
        t.push(row);
    }
    // reduced costs of the phase-1 objective (sum of artificials)
    let mut cost = vec![Rational::zero(); width];
    for row in &t {
        for j in 0..n {
            cost[j] -= &row[j];
        }
        cost[width - 1] -= &row[width - 1];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Bland: smallest index with negative reduced cost enters
    while let Some(enter) = (0..n + m).find(|&j| cost[j].is_negative()) {
        // ratio test, ties broken by smallest basic variable index
        let mut leave: Option<(usize, Rational)> = None;
        for (i, row) in t.iter().enumerate() {
            if !row[enter].is_positive() {
                continue;
            }
            let r = &row[width - 1] / &row[enter];
            leave = match leave {
                None => Some((i, r)),
                Some((li, lr)) => {
                    if r < lr || (r == lr && basis[i] < basis[li]) {
                        Some((i, r))
                    } else {
                        Some((li, lr))
                    }
                }
            };
        }
        let Some((pr, _)) = leave else {
            // unbounded direction cannot occur for a phase-1 objective bounded below by zero
            unreachable!("phase-1 objective is bounded below");
        };
        pivot(&mut t, &mut cost, pr, enter);
        basis[pr] = enter;
    }

    if !cost[width - 1].is_zero() {
        return None;
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i][width - 1].clone();
        }
    }
    Some(x)
}

fn pivot(t: &mut [Vec<Rational>], cost: &mut [Rational], pr: usize, pc: usize) {
    let width = cost.len();
    let inv = t[pr][pc].recip();
    for v in t[pr].iter_mut() {
        *v *= &inv;
    }
    let prow = t[pr].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i == pr || row[pc].is_zero() {
            continue;
        }
        let f = row[pc].clone();
        for j in 0..width {
            if !prow[j].is_zero() {
                row[j] -= &f * &prow[j];
            }
        }
    }
    if !cost[pc].is_zero() {
        let f = cost[pc].clone();
        for j in 0..width {
            if !prow[j].is_zero() {
                cost[j] -= &f * &prow[j];
            }
        }
    }
}

/// Decide `d ∈ cone(generators)`; on success returns multipliers `λ >= 0` with
/// `d = Σ λ_g g`.
pub fn conic_membership(d: &[Rational], generators: &[RatVector]) -> Option<RatVector> {
    nonneg_solution(generators, d)
}

/// Decide `d ∈ conv(points)`; on success returns convex weights.
pub fn convex_membership(d: &[Rational], points: &[RatVector]) -> Option<RatVector> {
    if points.is_empty() {
        return None;
    }
    let lifted: Vec<RatVector> = points
        .iter()
        .map(|p| {
            let mut q = p.clone();
            q.push(Rational::one());
            q
        })
        .collect();
    let mut target = d.to_vec();
    target.push(Rational::one());
    nonneg_solution(&lifted, &target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratlinalg::{rat, ratio};

    fn v(xs: &[i64]) -> RatVector {
        xs.iter().map(|&x| rat(x)).collect()
    }

    #[test]
    fn conic_examples() {
        let gens = vec![v(&[1, 0]), v(&[0, 1])];
        assert_eq!(conic_membership(&v(&[0, 0]), &gens), Some(v(&[0, 0])));
        assert_eq!(conic_membership(&v(&[1, 1]), &gens), Some(v(&[1, 1])));
        assert_eq!(conic_membership(&v(&[-1, 0]), &gens), None);
        assert_eq!(conic_membership(&v(&[1, 0]), &[]), None);
    }

    #[test]
    fn convex_examples() {
        let square = vec![v(&[1, 0]), v(&[-1, 0]), v(&[0, 1]), v(&[0, -1])];
        assert!(convex_membership(&v(&[0, 1]), &square).is_some());
        let mid = vec![ratio(1, 2), ratio(1, 2)];
        assert!(convex_membership(&mid, &square).is_some());
        assert!(convex_membership(&v(&[2, 0]), &square).is_none());
        assert!(convex_membership(&v(&[1, 1]), &square).is_none());
    }

    #[test]
    fn degenerate_redundant_rows() {
        // duplicated equality rows leave an artificial basic at level zero
        let gens = vec![v(&[1, 1, 2]), v(&[2, 2, 4]), v(&[0, 0, 1])];
        let d = v(&[3, 3, 7]);
        let lam = nonneg_solution(&gens, &d).unwrap();
        let back: Vec<Rational> = (0..3)
            .map(|i| gens.iter().zip(&lam).map(|(g, l)| &g[i] * l).sum())
            .collect();
        assert_eq!(back, d);
    }
}
