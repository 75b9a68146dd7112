//! Additive compound matrices and limits of rank-one matrix exponentials.
//!
//! Rows and columns of `A^(k)` are indexed by the `k`-subsets of `{0..m}` in
//! lexicographic order, so for `m = 3, k = 2` the order is `(0,1), (0,2), (1,2)`.

use std::collections::HashMap;
use std::ops::{Add, Neg};

use nalgebra::DMatrix;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::ratlinalg::{dot, RatMatrix, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompoundError {
    #[error("compound order {k} outside 1..={m}")]
    BadK { k: usize, m: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("rank-one factor is not strictly stable: wᵀv = {gain}")]
    NotStrictlyStable { gain: Rational },
}

/// Lexicographically ordered `k`-subsets of `{0, …, m-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompoundIndex {
    pub m: usize,
    pub k: usize,
    pub sets: Vec<Vec<usize>>,
}

impl CompoundIndex {
    pub fn new(m: usize, k: usize) -> Self {
        let mut sets = Vec::new();
        let mut cur = Vec::with_capacity(k);
        fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..m {
                cur.push(i);
                rec(i + 1, m, k, cur, out);
                cur.pop();
            }
        }
        rec(0, m, k, &mut cur, &mut sets);
        CompoundIndex { m, k, sets }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// 1-based pair labels such as `(1,2)`, used in reports.
    pub fn labels(&self) -> Vec<String> {
        self.sets
            .iter()
            .map(|s| {
                let inner: Vec<String> = s.iter().map(|i| (i + 1).to_string()).collect();
                format!("({})", inner.join(","))
            })
            .collect()
    }
}

/// `n choose k`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Entry-wise compound rule, generic over the scalar type. Returns row-major data.
fn compound_entries<T, F>(m: usize, k: usize, a: F) -> (usize, Vec<T>)
where
    T: Clone + Zero + Add<Output = T> + Neg<Output = T>,
    F: Fn(usize, usize) -> T,
{
    let idx = CompoundIndex::new(m, k);
    let n = idx.len();
    let pos: HashMap<&[usize], usize> = idx
        .sets
        .iter()
        .enumerate()
        .map(|(p, s)| (s.as_slice(), p))
        .collect();
    let mut out = vec![T::zero(); n * n];
    for (r, set) in idx.sets.iter().enumerate() {
        out[r * n + r] = set.iter().fold(T::zero(), |acc, &i| acc + a(i, i));
        // replace member i_s by j ∉ I; the entry sits at column J = I \ {i_s} ∪ {j}
        for (s, &is) in set.iter().enumerate() {
            for j in (0..m).filter(|j| !set.contains(j)) {
                let mut col_set: Vec<usize> = set.iter().copied().filter(|&x| x != is).collect();
                let l = col_set.partition_point(|&x| x < j);
                col_set.insert(l, j);
                let c = pos[col_set.as_slice()];
                let v = a(is, j);
                out[r * n + c] = if (s + l) % 2 == 0 { v } else { -v };
            }
        }
    }
    (n, out)
}

/// `k`-th additive compound of a square rational matrix.
pub fn additive_compound(a: &RatMatrix, k: usize) -> Result<RatMatrix, CompoundError> {
    if !a.is_square() {
        return Err(CompoundError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let m = a.rows();
    if k == 0 || k > m {
        return Err(CompoundError::BadK { k, m });
    }
    let (n, data) = compound_entries(m, k, |i, j| a[(i, j)].clone());
    let rows = data.chunks(n).map(<[Rational]>::to_vec).collect();
    Ok(RatMatrix::from_rows_with_cols(rows, n))
}

/// Second compound, or the empty `0x0` matrix when `m < 2`.
pub fn second_compound(a: &RatMatrix) -> RatMatrix {
    if a.rows() < 2 {
        return RatMatrix::zeros(0, 0);
    }
    additive_compound(a, 2).expect("k = 2 is valid for m >= 2")
}

/// Floating-point `k`-th additive compound.
pub fn additive_compound_f64(a: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let m = a.nrows();
    assert!(a.is_square() && k >= 1 && k <= m, "bad compound order");
    let (n, data) = compound_entries(m, k, |i, j| a[(i, j)]);
    DMatrix::from_row_slice(n, n, &data)
}

fn strict_gain(v: &[Rational], w: &[Rational]) -> Result<Rational, CompoundError> {
    let gain = dot(w, v);
    if gain.is_negative() {
        Ok(gain)
    } else {
        Err(CompoundError::NotStrictlyStable { gain })
    }
}

/// `Π = lim e^{vwᵀ t} = I − v wᵀ / (wᵀ v)`, defined when `wᵀ v < 0`.
pub fn rank_one_projection(v: &[Rational], w: &[Rational]) -> Result<RatMatrix, CompoundError> {
    let gain = strict_gain(v, w)?;
    let a = RatMatrix::outer(v, w);
    Ok(RatMatrix::identity(v.len()).sub(&a.scale(&gain.recip())))
}

/// `Π₂ = lim e^{(vwᵀ)^(2) t} = I − (vwᵀ)^(2) / (wᵀ v)`, defined when `wᵀ v < 0`.
pub fn rank_one_compound_projection(
    v: &[Rational],
    w: &[Rational],
) -> Result<RatMatrix, CompoundError> {
    let gain = strict_gain(v, w)?;
    let a2 = second_compound(&RatMatrix::outer(v, w));
    Ok(RatMatrix::identity(a2.rows()).sub(&a2.scale(&gain.recip())))
}

/// `Π₂` assembled as the matrix of `X ↦ X − (v wᵀ X + X w vᵀ)/(wᵀ v)` acting on
/// skew-symmetric matrices in the basis `e_i e_jᵀ − e_j e_iᵀ`, `i < j`.
///
/// Independent of the compound formula; kept as a cross-check.
pub fn compound_projection_via_operator(
    v: &[Rational],
    w: &[Rational],
) -> Result<RatMatrix, CompoundError> {
    let gain = strict_gain(v, w)?;
    let m = v.len();
    let idx = CompoundIndex::new(m, 2);
    let a = RatMatrix::outer(v, w);
    let at = a.transpose();
    let inv = gain.recip();
    let mut out = RatMatrix::zeros(idx.len(), idx.len());
    for (c, pair) in idx.sets.iter().enumerate() {
        let (i, j) = (pair[0], pair[1]);
        let mut x = RatMatrix::zeros(m, m);
        x[(i, j)] = Rational::one();
        x[(j, i)] = -Rational::one();
        let image = x.sub(&a.mul(&x).add(&x.mul(&at)).scale(&inv));
        for (r, p) in idx.sets.iter().enumerate() {
            out[(r, c)] = image[(p[0], p[1])].clone();
        }
    }
    Ok(out)
}

/// `e^{v wᵀ t} = I + v wᵀ (e^{(wᵀv) t} − 1)/(wᵀ v)`, or `I + v wᵀ t` when `wᵀ v = 0`.
pub fn rank_one_expm(v: &[f64], w: &[f64], t: f64) -> DMatrix<f64> {
    let n = v.len();
    let gain: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
    let factor = if gain == 0.0 {
        t
    } else {
        // expm1 keeps precision for small gain·t
        (gain * t).exp_m1() / gain
    };
    let mut e = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            e[(i, j)] += v[i] * w[j] * factor;
        }
    }
    e
}
