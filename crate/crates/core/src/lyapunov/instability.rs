//! Witnesses that an inclusion of rank-one systems is not Lyapunov stable.

use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::ratlinalg::{rank, RatMatrix, Rational};

const RADIUS_MARGIN: f64 = 1e-6;
const MAX_SQUARINGS: u32 = 20;
const SCHUR_MAX_ITER: usize = 1000;
const GELFAND_SQUARINGS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum InstabilityWitness {
    /// `Π_{w_1} ⋯ Π_{w_L}` has spectral radius above one.
    SpectralRadiusWord {
        word: Vec<usize>,
        spectral_radius: f64,
        /// `P^(2^j)` first exceeded the growth bound at this `j`.
        confirmed_at_squaring: u32,
    },
    /// `M = Σ_{ℓ∈S} A_ℓ` has a defective zero eigenvalue, so `e^{Mt}` grows.
    DefectiveConicSum {
        subset: Vec<usize>,
        rank: usize,
        rank_squared: usize,
    },
}

impl fmt::Display for InstabilityWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_based = |v: &[usize]| {
            v.iter()
                .map(|i| (i + 1).to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            InstabilityWitness::SpectralRadiusWord {
                word,
                spectral_radius,
                confirmed_at_squaring,
            } => write!(
                f,
                "product of projections [{}] (length {}) has spectral radius {spectral_radius:.6} > 1 \
                 (exact growth confirmed at power 2^{confirmed_at_squaring})",
                one_based(word),
                word.len()
            ),
            InstabilityWitness::DefectiveConicSum {
                subset,
                rank,
                rank_squared,
            } => write!(
                f,
                "sum of matrices {{{}}} has rank {rank} but its square has rank {rank_squared} \
                 (defective zero eigenvalue, polynomial growth)",
                one_based(subset)
            ),
        }
    }
}

/// Largest eigenvalue modulus.
///
/// Falls back to the estimate `‖P^(2^k)‖^(1/2^k)` when the Schur iteration
/// does not converge, which happens on some defective matrices.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    match m.clone().try_schur(f64::EPSILON, SCHUR_MAX_ITER) {
        Some(schur) => schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max),
        None => gelfand_estimate(m),
    }
}

fn gelfand_estimate(m: &DMatrix<f64>) -> f64 {
    // track log of the scale so squaring never overflows
    let mut q = m.clone();
    let mut log_scale = 0.0;
    let mut power = 1.0;
    for _ in 0..GELFAND_SQUARINGS {
        let norm = q.norm();
        if norm == 0.0 {
            return 0.0;
        }
        q /= norm;
        log_scale += norm.ln() / power;
        q = &q * &q;
        power *= 2.0;
    }
    (log_scale + q.norm().ln() / power).exp()
}

/// Exact check that the powers `P^(2^j)` outgrow `2·dim·max|P|` for some
/// `j <= 20`; returns that `j`.
///
/// Works on the integer matrix `Q = d·P` (common denominator `d`) to avoid
/// gcd reductions on very large entries: `max|P^k| > b` iff `max|Q^k| > b·d^k`.
pub fn exact_growth_confirmation(p: &RatMatrix) -> Option<u32> {
    let base = p.max_abs();
    if base.is_zero() {
        return None;
    }
    let n = p.rows();
    let d = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .fold(BigInt::one(), |acc, (i, j)| acc.lcm(p[(i, j)].denom()));
    let mut q: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (&p[(i, j)] * Rational::from_integer(d.clone())).to_integer())
                .collect()
        })
        .collect();
    // bound·d^k with bound = 2·n·max|P| = num/den
    let bound = base * Rational::from_integer(BigInt::from(2 * n));
    let (b_num, b_den) = (bound.numer().clone(), bound.denom().clone());
    let mut d_pow = d;
    for j in 1..=MAX_SQUARINGS {
        q = int_square(&q);
        d_pow = &d_pow * &d_pow;
        let max = q
            .iter()
            .flatten()
            .map(BigInt::abs)
            .max()
            .unwrap_or_default();
        if max * &b_den > &b_num * &d_pow {
            return Some(j);
        }
    }
    None
}

fn int_square(q: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = q.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(BigInt::zero(), |acc, k| acc + &q[i][k] * &q[k][j]))
                .collect()
        })
        .collect()
}

fn word_product(projections: &[RatMatrix], word: &[usize]) -> RatMatrix {
    let mut it = word.iter();
    let first = projections[*it.next().expect("nonempty word")].clone();
    it.fold(first, |acc, &l| acc.mul(&projections[l]))
}

/// Enumerate projection products by increasing word length (lexicographic
/// within a length) and report the first whose float spectral radius exceeds
/// `1 + 1e-6` and whose growth is confirmed exactly.
///
/// Identical projections are merged and words with a repeated adjacent
/// letter are skipped (`Π² = Π`); so are words whose first and last letters
/// agree, whose spectrum matches a shorter word.
pub fn spectral_word_screen(
    projections: &[RatMatrix],
    max_len: usize,
) -> Option<InstabilityWitness> {
    if projections.is_empty() || projections[0].rows() == 0 {
        return None;
    }
    // distinct letters, each mapped to its first index
    let mut letters: Vec<usize> = Vec::new();
    for (i, p) in projections.iter().enumerate() {
        if !letters.iter().any(|&j| projections[j] == *p) {
            letters.push(i);
        }
    }
    let floats: Vec<DMatrix<f64>> = projections.iter().map(RatMatrix::to_f64).collect();
    let dim = projections[0].rows();

    for len in 1..=max_len {
        let mut word = Vec::with_capacity(len);
        let mut prefix = vec![DMatrix::<f64>::identity(dim, dim)];
        if let Some(w) = search(&letters, &floats, projections, len, &mut word, &mut prefix) {
            return Some(w);
        }
    }
    None
}

fn search(
    letters: &[usize],
    floats: &[DMatrix<f64>],
    projections: &[RatMatrix],
    len: usize,
    word: &mut Vec<usize>,
    prefix: &mut Vec<DMatrix<f64>>,
) -> Option<InstabilityWitness> {
    if word.len() == len {
        if len > 1 && word[0] == word[len - 1] {
            return None;
        }
        let p = prefix.last().expect("prefix stack");
        let rho = spectral_radius(p);
        if rho > 1.0 + RADIUS_MARGIN {
            let exact = word_product(projections, word);
            if let Some(j) = exact_growth_confirmation(&exact) {
                return Some(InstabilityWitness::SpectralRadiusWord {
                    word: word.clone(),
                    spectral_radius: rho,
                    confirmed_at_squaring: j,
                });
            }
        }
        return None;
    }
    for &l in letters {
        if word.last() == Some(&l) {
            continue;
        }
        let next = prefix.last().expect("prefix stack") * &floats[l];
        word.push(l);
        prefix.push(next);
        let hit = search(letters, floats, projections, len, word, prefix);
        word.pop();
        prefix.pop();
        if hit.is_some() {
            return hit;
        }
    }
    None
}

/// Sums over subsets of size one and two; flags `M` with `rank(M²) < rank(M) < dim`.
pub fn defective_sum_screen(mats: &[RatMatrix]) -> Option<InstabilityWitness> {
    let dim = mats.first()?.rows();
    let check = |subset: Vec<usize>, m: RatMatrix| {
        let r = rank(&m);
        if r == 0 || r == dim {
            return None;
        }
        let r2 = rank(&m.mul(&m));
        (r2 < r).then_some(InstabilityWitness::DefectiveConicSum {
            subset,
            rank: r,
            rank_squared: r2,
        })
    };
    for (i, a) in mats.iter().enumerate() {
        if let Some(w) = check(vec![i], a.clone()) {
            return Some(w);
        }
    }
    for i in 0..mats.len() {
        for j in i + 1..mats.len() {
            if let Some(w) = check(vec![i, j], mats[i].add(&mats[j])) {
                return Some(w);
            }
        }
    }
    None
}

/// Run the projection-word screen, then the defective-sum screen.
pub fn detect_instability(
    mats: &[RatMatrix],
    projections: &[RatMatrix],
    max_len: usize,
) -> Option<InstabilityWitness> {
    spectral_word_screen(projections, max_len).or_else(|| defective_sum_screen(mats))
}
