//! Piecewise-linear common Lyapunov functions `V(z) = max_k c_kᵀ z` for the
//! cone differential inclusion `ż ∈ cone{A_1, …, A_s} z`.
//!
//! Two independent certificates are available for a candidate `V`:
//! [`verify_conic`] checks that every `−c_kᵀ A_ℓ` lies in the cone spanned by
//! `{c_k − c_j}`, and [`verify_discrete`] checks `V(Π_ℓ z) <= V(z)` for the
//! limit projections `Π_ℓ` of the rank-one exponentials.

mod construct;
mod instability;
mod lasalle;

use std::collections::HashSet;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ratlinalg::{
    conic_membership, convex_membership, dot, rational_to_f64, unit, RatMatrix, RatVector, Rational,
};

pub use construct::{
    algorithm1, closure_builder, ConstructionError, DEFAULT_MAX_ITER, DEFAULT_MAX_LEN,
    DEFAULT_MAX_WORDS,
};
pub use instability::{
    defective_sum_screen, detect_instability, exact_growth_confirmation, spectral_radius,
    spectral_word_screen, InstabilityWitness,
};
pub use lasalle::{lasalle_check, LasalleReport, LasalleRow};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LyapunovError {
    #[error("row {row} has length {len}, expected {dim}")]
    DimensionMismatch { row: usize, len: usize, dim: usize },
    #[error("rows do not contain ±e_{axis}; V would not be positive definite")]
    NotPositiveDefinite { axis: usize },
}

/// `V(z) = max_k c_kᵀ z` with rows containing every `±e_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PwlFunction {
    dim: usize,
    rows: Vec<RatVector>,
}

impl PwlFunction {
    /// Validate and deduplicate rows (first occurrence kept).
    pub fn new(dim: usize, rows: Vec<RatVector>) -> Result<Self, LyapunovError> {
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(LyapunovError::DimensionMismatch {
                    row: i,
                    len: r.len(),
                    dim,
                });
            }
        }
        let mut seen = HashSet::new();
        let rows: Vec<RatVector> = rows
            .into_iter()
            .filter(|r| seen.insert(r.clone()))
            .collect();
        for axis in 0..dim {
            let e = unit(dim, axis);
            let me: RatVector = e.iter().map(|x| -x).collect();
            if !seen.contains(&e) || !seen.contains(&me) {
                return Err(LyapunovError::NotPositiveDefinite { axis });
            }
        }
        Ok(PwlFunction { dim, rows })
    }

    /// Rows `{e_1, …, e_N, −e_1, …, −e_N}`, i.e. the ∞-norm.
    pub fn infinity_norm(dim: usize) -> Self {
        let mut rows: Vec<RatVector> = (0..dim).map(|i| unit(dim, i)).collect();
        rows.extend((0..dim).map(|i| {
            let mut e = vec![Rational::zero(); dim];
            e[i] = -Rational::one();
            e
        }));
        PwlFunction { dim, rows }
    }

    /// Rows `±r` for every given `r` plus the ±unit rows; handy for writing
    /// functions such as `max{|z_1|, |z_2 + z_3|}`.
    pub fn from_abs_terms(dim: usize, terms: &[RatVector]) -> Result<Self, LyapunovError> {
        let mut rows = Self::infinity_norm(dim).rows;
        for t in terms {
            rows.push(t.clone());
            rows.push(t.iter().map(|x| -x).collect());
        }
        Self::new(dim, rows)
    }

    pub(crate) fn from_rows_unchecked(dim: usize, rows: Vec<RatVector>) -> Self {
        PwlFunction { dim, rows }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[RatVector] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn eval(&self, z: &[Rational]) -> Rational {
        self.rows
            .iter()
            .map(|c| dot(c, z))
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn eval_f64(&self, z: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|c| {
                c.iter()
                    .zip(z)
                    .map(|(a, b)| rational_to_f64(a) * b)
                    .sum::<f64>()
            })
            .fold(0.0_f64, f64::max)
    }

    /// Float copy of the rows for repeated evaluation.
    pub fn rows_f64(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(rational_to_f64).collect())
            .collect()
    }

    /// `C = −C` as row sets.
    pub fn is_symmetric(&self) -> bool {
        let set: HashSet<&RatVector> = self.rows.iter().collect();
        self.rows.iter().all(|r| {
            let neg: RatVector = r.iter().map(|x| -x).collect();
            set.contains(&neg)
        })
    }

    /// Row strings such as `[1, -1/2, 0]`.
    pub fn row_strings(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(ToString::to_string).collect())
            .collect()
    }

    /// Human readable `max{|δ1|, |δ2 + δ3|, …}` when rows come in ± pairs.
    pub fn describe(&self) -> String {
        let mut terms: Vec<String> = Vec::new();
        let mut used: HashSet<RatVector> = HashSet::new();
        for r in &self.rows {
            let neg: RatVector = r.iter().map(|x| -x).collect();
            if used.contains(r) {
                continue;
            }
            let paired = self.rows.contains(&neg);
            // print the ± pair once, normalized so the first nonzero entry is positive
            let shown = if paired
                && r.iter()
                    .find(|x| !x.is_zero())
                    .is_some_and(|x| x.is_negative())
            {
                neg.clone()
            } else {
                r.clone()
            };
            used.insert(r.clone());
            if paired {
                used.insert(neg);
            }
            let lin = linear_form(&shown);
            terms.push(if paired { format!("|{lin}|") } else { lin });
        }
        format!("max{{{}}}", terms.join(", "))
    }
}

fn linear_form(c: &[Rational]) -> String {
    let mut out = String::new();
    for (i, x) in c.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        let mag = x.abs();
        let sign = if x.is_negative() { "-" } else { "+" };
        if out.is_empty() {
            if x.is_negative() {
                out.push('-');
            }
        } else {
            out.push_str(&format!(" {sign} "));
        }
        if !mag.is_one() {
            out.push_str(&format!("{mag}*"));
        }
        out.push_str(&format!("d{}", i + 1));
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Same function: every row of each lies in the convex hull of the other's rows.
pub fn function_equiv(a: &PwlFunction, b: &PwlFunction) -> bool {
    a.dim == b.dim
        && a.rows
            .iter()
            .all(|r| convex_membership(r, &b.rows).is_some())
        && b.rows
            .iter()
            .all(|r| convex_membership(r, &a.rows).is_some())
}

/// Multipliers proving `−c_kᵀ A_ℓ ∈ cone{c_k − c_j : j ≠ k}`; sparse `(j, λ_j)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConicCertificate {
    pub row: usize,
    pub matrix: usize,
    pub multipliers: Option<Vec<(usize, String)>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConicReport {
    pub holds: bool,
    pub certificates: Vec<ConicCertificate>,
}

impl ConicReport {
    pub fn failures(&self) -> impl Iterator<Item = &ConicCertificate> {
        self.certificates.iter().filter(|c| c.multipliers.is_none())
    }
}

/// Check the cone condition for every row and matrix.
pub fn verify_conic(v: &PwlFunction, mats: &[RatMatrix]) -> ConicReport {
    let mut certificates = Vec::with_capacity(v.len() * mats.len());
    for (k, ck) in v.rows.iter().enumerate() {
        let gens: Vec<RatVector> = v
            .rows
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, cj)| ck.iter().zip(cj).map(|(a, b)| a - b).collect())
            .collect();
        let gen_index: Vec<usize> = (0..v.len()).filter(|&j| j != k).collect();
        for (l, a) in mats.iter().enumerate() {
            assert_eq!(a.rows(), v.dim, "matrix {l} does not match V's dimension");
            let d: RatVector = a.vec_mul(ck).into_iter().map(|x| -x).collect();
            let multipliers = conic_membership(&d, &gens).map(|lam| {
                lam.into_iter()
                    .enumerate()
                    .filter(|(_, x)| !x.is_zero())
                    .map(|(g, x)| (gen_index[g], x.to_string()))
                    .collect()
            });
            certificates.push(ConicCertificate {
                row: k,
                matrix: l,
                multipliers,
            });
        }
    }
    ConicReport {
        holds: certificates.iter().all(|c| c.multipliers.is_some()),
        certificates,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteReport {
    pub holds: bool,
    /// `(row, projection)` pairs whose image leaves the hull of the rows.
    pub failures: Vec<(usize, usize)>,
}

/// Check `c_kᵀ Π_ℓ ∈ conv{c_j}` for every row and projection, which is
/// equivalent to `V(Π_ℓ z) <= V(z)` for all `z`.
pub fn verify_discrete(v: &PwlFunction, projections: &[RatMatrix]) -> DiscreteReport {
    let mut failures = Vec::new();
    for (k, ck) in v.rows.iter().enumerate() {
        for (l, p) in projections.iter().enumerate() {
            assert_eq!(
                p.rows(),
                v.dim,
                "projection {l} does not match V's dimension"
            );
            let img = p.vec_mul(ck);
            if convex_membership(&img, &v.rows).is_none() {
                failures.push((k, l));
            }
        }
    }
    DiscreteReport {
        holds: failures.is_empty(),
        failures,
    }
}
