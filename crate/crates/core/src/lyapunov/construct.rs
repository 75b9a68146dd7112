//! Constructing PWL Lyapunov functions: the row-propagation iteration and the
//! projection-closure construction.

use std::collections::{HashSet, VecDeque};

use thiserror::Error;

use super::instability::{spectral_word_screen, InstabilityWitness};
use super::{verify_conic, PwlFunction};
use crate::ratlinalg::{convex_membership, is_zero_vec, RatMatrix, RatVector};

pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_MAX_LEN: usize = 6;
pub const DEFAULT_MAX_WORDS: usize = 200_000;

/// Hard cap on the row count of the iterative construction.
const MAX_ROWS: usize = 20_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstructionError {
    #[error("no fixed point after {} sweeps (row counts {row_counts:?})", row_counts.len())]
    NotConverged { row_counts: Vec<usize> },
    #[error("projection products are unbounded: {0}")]
    Unbounded(InstabilityWitness),
    #[error("matrix {index} is {rows}x{cols}, expected {dim}x{dim}")]
    DimensionMismatch {
        index: usize,
        rows: usize,
        cols: usize,
        dim: usize,
    },
    #[error("constructed rows failed the cone verification")]
    VerificationFailed,
}

fn check_dims(mats: &[RatMatrix]) -> Result<usize, ConstructionError> {
    let dim = mats.first().map_or(0, RatMatrix::rows);
    for (index, m) in mats.iter().enumerate() {
        if m.rows() != dim || m.cols() != dim {
            return Err(ConstructionError::DimensionMismatch {
                index,
                rows: m.rows(),
                cols: m.cols(),
                dim,
            });
        }
    }
    Ok(dim)
}

/// Iterative row propagation.
///
/// Starting from the ±unit rows, every row `c_k` and matrix `A_ℓ` with
/// `c_kᵀ A_ℓ ≠ 0` proposes `c* = c_kᵀ (A_ℓ + I)`, appended unless it is zero or
/// already present. One sweep processes every row added by the previous
/// sweep; the construction succeeds when a sweep adds nothing.
pub fn algorithm1(mats: &[RatMatrix], max_iter: usize) -> Result<PwlFunction, ConstructionError> {
    let dim = check_dims(mats)?;
    let mut rows = PwlFunction::infinity_norm(dim).rows;
    let mut seen: HashSet<RatVector> = rows.iter().cloned().collect();
    let mut processed = 0;
    let mut row_counts = Vec::new();

    for _ in 0..max_iter.max(1) {
        let end = rows.len();
        for k in processed..end {
            for a in mats {
                let ca = a.vec_mul(&rows[k]);
                if is_zero_vec(&ca) {
                    continue;
                }
                let cstar: RatVector = ca.iter().zip(&rows[k]).map(|(x, y)| x + y).collect();
                if is_zero_vec(&cstar) || seen.contains(&cstar) {
                    continue;
                }
                seen.insert(cstar.clone());
                rows.push(cstar);
            }
            if rows.len() > MAX_ROWS {
                row_counts.push(rows.len());
                return Err(ConstructionError::NotConverged { row_counts });
            }
        }
        processed = end;
        row_counts.push(rows.len());
        if rows.len() == end {
            let v = PwlFunction::from_rows_unchecked(dim, rows);
            return if verify_conic(&v, mats).holds {
                Ok(v)
            } else {
                Err(ConstructionError::VerificationFailed)
            };
        }
    }
    Err(ConstructionError::NotConverged { row_counts })
}

/// Closure of the ±unit rows under `c ↦ Π_ℓᵀ c`, keeping only rows outside
/// the convex hull of the current set.
///
/// The projection products are first screened for spectral radius above one
/// (words up to `max_len`); a confirmed hit yields `Unbounded`. Rows whose
/// generating word would exceed `max_len`, or more than `max_words` row
/// images in total, yield `NotConverged`.
pub fn closure_builder(
    projections: &[RatMatrix],
    max_words: usize,
    max_len: usize,
) -> Result<PwlFunction, ConstructionError> {
    let dim = check_dims(projections)?;
    if let Some(w) = spectral_word_screen(projections, max_len) {
        return Err(ConstructionError::Unbounded(w));
    }

    let base = PwlFunction::infinity_norm(dim).rows;
    let n_base = base.len();
    let mut rows: Vec<RatVector> = base.clone();
    let mut queue: VecDeque<(RatVector, usize)> = base.into_iter().map(|r| (r, 0)).collect();
    let mut examined = 0usize;
    let mut row_counts = Vec::new();

    while let Some((c, depth)) = queue.pop_front() {
        // pruned rows are dominated; so are their images
        if !rows.contains(&c) {
            continue;
        }
        for p in projections {
            examined += 1;
            if examined > max_words {
                row_counts.push(rows.len());
                return Err(ConstructionError::NotConverged { row_counts });
            }
            let img = p.vec_mul(&c);
            if is_zero_vec(&img) || convex_membership(&img, &rows).is_some() {
                continue;
            }
            if depth + 1 > max_len {
                row_counts.push(rows.len());
                return Err(ConstructionError::NotConverged { row_counts });
            }
            rows.push(img.clone());
            queue.push_back((img, depth + 1));
            prune_dominated(&mut rows, n_base);
            row_counts.push(rows.len());
        }
    }
    Ok(PwlFunction::from_rows_unchecked(dim, rows))
}

/// Drop non-unit rows lying in the convex hull of the remaining rows.
fn prune_dominated(rows: &mut Vec<RatVector>, keep: usize) {
    let mut i = keep;
    while i < rows.len() {
        let others: Vec<RatVector> = rows
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, r)| r.clone())
            .collect();
        if convex_membership(&rows[i], &others).is_some() {
            rows.remove(i);
        } else {
            i += 1;
        }
    }
}
