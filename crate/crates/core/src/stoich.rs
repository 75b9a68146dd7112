//! Conservation laws, the coordinate transform `T`, and the rank-one
//! decomposition of the reduced Jacobian.
//!
//! With `c` independent conservation laws stacked as the first rows of `T`
//! and unit rows for the remaining `n - c` "independent" species, the reduced
//! dynamics read `d/dt x̃_d = Γ_r R(T⁻¹ x̃)` with `Γ_r` the last `n - c` rows of
//! `T Γ`. Every reaction-reactant pair `(j, i)` contributes a rank-one term
//! `ρ_ℓ A_ℓ = ρ_ℓ v_ℓ w_ℓᵀ` to the reduced Jacobian, where `v_ℓ = Γ_r e_j` and
//! `w_ℓᵀ = e_iᵀ T⁻¹ [0; I]`.

use num_traits::Zero;
use thiserror::Error;

use crate::netmodel::{Network, ReactantPair};
use crate::ratlinalg::{
    self, dot, invert, kernel_basis, nonneg_kernel_rays, rank, unit, RatMatrix, RatVector, Rational,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("expected {expected} independent species, got {got}")]
    BadCardinality { expected: usize, got: usize },
    #[error("independent species {names:?} do not complete the conservation basis (rank {rank} of {dim})")]
    SingularTransform {
        names: Vec<String>,
        rank: usize,
        dim: usize,
    },
    #[error("unknown species `{0}`")]
    UnknownSpecies(String),
    #[error("species `{0}` listed twice")]
    RepeatedSpecies(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConservationBasis {
    /// Basis of `Ker(Γᵀ)`, each row `v` with `vᵀ Γ = 0`.
    pub rows: Vec<RatVector>,
    /// Extreme rays of `Ker(Γᵀ) ∩ R^n_{>=0}`, primitive integer vectors.
    pub nonneg_rays: Vec<RatVector>,
}

impl ConservationBasis {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// True when every species lies in the support of some nonnegative ray.
    pub fn covers_all_species(&self, n_species: usize) -> bool {
        (0..n_species).all(|i| self.nonneg_rays.iter().any(|r| !r[i].is_zero()))
    }
}

/// Conservation laws of `Γ`, preferring nonnegative extreme rays as basis rows.
pub fn conservation_laws(gamma: &RatMatrix) -> ConservationBasis {
    let gt = gamma.transpose();
    let nonneg_rays = nonneg_kernel_rays(&gt);
    let general = kernel_basis(&gt);
    let c = general.len();
    let mut rows: Vec<RatVector> = Vec::with_capacity(c);
    for cand in nonneg_rays.iter().chain(general.iter()) {
        if rows.len() == c {
            break;
        }
        let mut trial = rows.clone();
        trial.push(cand.clone());
        if rank(&RatMatrix::from_rows(trial)) > rows.len() {
            rows.push(cand.clone());
        }
    }
    ConservationBasis { rows, nonneg_rays }
}

/// One rank-one factor pair `A_ℓ = v wᵀ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankOneFactor {
    pub pair: ReactantPair,
    pub v: RatVector,
    pub w: RatVector,
}

impl RankOneFactor {
    pub fn matrix(&self) -> RatMatrix {
        RatMatrix::outer(&self.v, &self.w)
    }

    /// `wᵀ v`, the only nonzero eigenvalue of `v wᵀ`.
    pub fn gain(&self) -> Rational {
        dot(&self.w, &self.v)
    }
}

/// Value of one kinetic partial `ρ_ℓ = ∂R_j/∂x_i`; nonnegative for admissible kinetics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticPartial {
    pub pair_index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedSystem {
    pub t: RatMatrix,
    pub t_inv: RatMatrix,
    pub gamma_r: RatMatrix,
    /// Number of conservation rows `c` at the top of `T`.
    pub conserved: usize,
    pub independent: Vec<usize>,
    pub pairs: Vec<ReactantPair>,
    pub factors: Vec<RankOneFactor>,
}

impl ReducedSystem {
    /// Dimension `n - c` of the reduced state.
    pub fn reduced_dim(&self) -> usize {
        self.independent.len()
    }
}

/// Resolve a list of species names to indices.
pub fn species_indices(net: &Network, names: &[String]) -> Result<Vec<usize>, ReductionError> {
    let mut out = Vec::with_capacity(names.len());
    for n in names {
        let i = net
            .species_index(n)
            .ok_or_else(|| ReductionError::UnknownSpecies(n.clone()))?;
        if out.contains(&i) {
            return Err(ReductionError::RepeatedSpecies(n.clone()));
        }
        out.push(i);
    }
    Ok(out)
}

/// Greedy pivoting in species order: the lexicographically first species set
/// completing `basis` to a nonsingular `T`.
fn auto_independent(basis: &[RatVector], n: usize) -> Vec<usize> {
    let mut rows = basis.to_vec();
    let mut chosen = Vec::new();
    for i in 0..n {
        if rows.len() == n {
            break;
        }
        rows.push(unit(n, i));
        if rank(&RatMatrix::from_rows_with_cols(rows.clone(), n)) == rows.len() {
            chosen.push(i);
        } else {
            rows.pop();
        }
    }
    chosen
}

/// Build `T`, `T⁻¹`, `Γ_r` and the rank-one factors.
///
/// `independent`, when given, lists the species kept as reduced coordinates
/// (in that order). Otherwise they are picked greedily in species order.
pub fn build_reduction(
    net: &Network,
    gamma: &RatMatrix,
    basis: &ConservationBasis,
    independent: Option<&[usize]>,
) -> Result<ReducedSystem, ReductionError> {
    let n = net.num_species();
    let c = basis.dim();
    let independent = match independent {
        Some(idx) => {
            if idx.len() != n - c {
                return Err(ReductionError::BadCardinality {
                    expected: n - c,
                    got: idx.len(),
                });
            }
            idx.to_vec()
        }
        None => auto_independent(&basis.rows, n),
    };

    let mut rows = basis.rows.clone();
    rows.extend(independent.iter().map(|&i| unit(n, i)));
    let t = RatMatrix::from_rows_with_cols(rows, n);
    let t_inv = invert(&t).map_err(|e| match e {
        ratlinalg::LinalgError::Singular { rank, dim } => ReductionError::SingularTransform {
            names: independent
                .iter()
                .map(|&i| net.species_name(i).to_string())
                .collect(),
            rank,
            dim,
        },
        ratlinalg::LinalgError::NotSquare { .. } => unreachable!("T is square by construction"),
    })?;

    let tg = t.mul(gamma);
    let gamma_r = tg.row_block(c, n);
    let pairs = net.reactant_pairs();
    let factors = pairs
        .iter()
        .map(|&pair| RankOneFactor {
            pair,
            v: gamma_r.column(pair.reaction),
            w: t_inv.row(pair.species)[c..].to_vec(),
        })
        .collect();

    Ok(ReducedSystem {
        t,
        t_inv,
        gamma_r,
        conserved: c,
        independent,
        pairs,
        factors,
    })
}

/// `A_ℓ = v_ℓ w_ℓᵀ` in pair order.
pub fn rank_one_matrices(rs: &ReducedSystem) -> Vec<RatMatrix> {
    rs.factors.iter().map(RankOneFactor::matrix).collect()
}
