//! Extreme rays of `Ker(M) ∩ R^n_{>=0}` by the double description method.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use super::{dot, primitive_integer, rank, unit, RatMatrix, RatVector};

fn support(v: &[super::Rational]) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(i, _)| i)
        .collect()
}

/// Extreme rays of the pointed cone `{x >= 0 : M x = 0}`.
///
/// Each ray is scaled to integer entries with gcd 1. Rays are ordered by their
/// support (as an ascending index list), lexicographically.
pub fn nonneg_kernel_rays(m: &RatMatrix) -> Vec<RatVector> {
    let n = m.cols();
    let mut rays: Vec<RatVector> = (0..n).map(|i| unit(n, i)).collect();

    for k in 0..m.rows() {
        let a = m.row(k);
        let mut zero = Vec::new();
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for r in rays {
            let s = dot(a, &r);
            if s.is_zero() {
                zero.push(r);
            } else if s.is_positive() {
                pos.push((r, s));
            } else {
                neg.push((r, s));
            }
        }
        let mut candidates = zero;
        for (p, sp) in &pos {
            for (q, sq) in &neg {
                // sp > 0, -sq > 0, and the combination lies on a·x = 0
                let combo: RatVector = p.iter().zip(q).map(|(x, y)| sp * y - sq * x).collect();
                candidates.push(combo);
            }
        }

        // keep only rays that are extreme for the constraints seen so far: the
        // columns on the support must have a one-dimensional kernel
        let constraints = m.row_block(0, k + 1);
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        rays = Vec::new();
        for c in candidates {
            let supp = support(&c);
            if supp.is_empty() || seen.contains(&supp) {
                continue;
            }
            if rank(&constraints.select_columns(&supp)) + 1 == supp.len() {
                seen.insert(supp);
                rays.push(primitive_integer(&c));
            }
        }
    }

    rays.sort_by(|a, b| support(a).cmp(&support(b)).then_with(|| a.cmp(b)));
    rays
}
