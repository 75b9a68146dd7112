//! Rank conditions upgrading a non-strict PWL Lyapunov function to uniform
//! exponential stability of the persistently excited inclusion.
//!
//! For row `c_i` let `M_i = [A_1ᵀ c_i, …, A_sᵀ c_i]`. The full-rank condition
//! asks `Ker M_iᵀ = {0}` for every row. The active-region condition only
//! rules out nonzero `z ∈ Ker M_iᵀ` at which `c_i` attains the max; it is the
//! property the LaSalle argument consumes (with all rates positive, a
//! solution resting on the face of `c_i` must satisfy `c_iᵀ A_ℓ z = 0` for
//! every ℓ) and it is implied by full rank.

use num_traits::{One, Zero};

use super::PwlFunction;
use crate::ratlinalg::{nonneg_solution, rank, RatMatrix, RatVector, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LasalleRow {
    pub row: usize,
    pub m: RatMatrix,
    pub rank: usize,
    /// `rank(M_i) = N`.
    pub full_rank: bool,
    /// No nonzero kernel vector of `M_iᵀ` where row `i` is active.
    pub active_kernel_trivial: bool,
    /// A kernel vector on the active face, when one exists.
    pub witness: Option<RatVector>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LasalleReport {
    pub dim: usize,
    pub rows: Vec<LasalleRow>,
    /// Every `rank(M_i) = N`.
    pub full_rank_pass: bool,
    /// Every row satisfies the active-region kernel condition.
    pub pass: bool,
}

/// Find `z` with `M_iᵀ z = 0`, `c_iᵀ z = 1` and `c_iᵀ z >= c_jᵀ z` for all `j`.
fn active_kernel_vector(v: &PwlFunction, i: usize, m: &RatMatrix) -> Option<RatVector> {
    let n = v.dim();
    let rows = v.rows();
    let ci = &rows[i];
    let others: Vec<&RatVector> = rows
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, r)| r)
        .collect();

    // equations: s kernel rows, one normalization row, L-1 activity rows
    let mut eqs: Vec<RatVector> = Vec::new();
    let mut rhs: Vec<Rational> = Vec::new();
    for l in 0..m.cols() {
        eqs.push(m.column(l));
        rhs.push(Rational::zero());
    }
    eqs.push(ci.clone());
    rhs.push(Rational::one());
    for cj in &others {
        eqs.push(ci.iter().zip(cj.iter()).map(|(a, b)| a - b).collect());
        rhs.push(Rational::zero());
    }

    // variables: z⁺ (n), z⁻ (n), slacks for activity rows (L-1)
    let n_eq = eqs.len();
    let first_slack_row = m.cols() + 1;
    let mut columns: Vec<RatVector> = Vec::with_capacity(2 * n + others.len());
    for sign in [Rational::one(), -Rational::one()] {
        for x in 0..n {
            columns.push(eqs.iter().map(|e| &e[x] * &sign).collect());
        }
    }
    for s in 0..others.len() {
        let mut col = vec![Rational::zero(); n_eq];
        col[first_slack_row + s] = -Rational::one();
        columns.push(col);
    }
    let sol = nonneg_solution(&columns, &rhs)?;
    Some((0..n).map(|x| &sol[x] - &sol[n + x]).collect())
}

/// Build every `M_i` and evaluate both rank conditions.
pub fn lasalle_check(v: &PwlFunction, mats: &[RatMatrix]) -> LasalleReport {
    let n = v.dim();
    let rows: Vec<LasalleRow> = v
        .rows()
        .iter()
        .enumerate()
        .map(|(i, ci)| {
            let cols: Vec<RatVector> = mats.iter().map(|a| a.vec_mul(ci)).collect();
            let m = RatMatrix::from_columns(&cols, n);
            let r = rank(&m);
            let full_rank = r == n;
            let witness = if full_rank {
                None
            } else {
                active_kernel_vector(v, i, &m)
            };
            LasalleRow {
                row: i,
                m,
                rank: r,
                full_rank,
                active_kernel_trivial: witness.is_none(),
                witness,
            }
        })
        .collect();
    LasalleReport {
        dim: n,
        full_rank_pass: rows.iter().all(|r| r.full_rank),
        pass: rows.iter().all(|r| r.active_kernel_trivial),
        rows,
    }
}
