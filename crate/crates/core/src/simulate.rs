//! Mass-action simulation of the reduced dynamics together with the
//! second-compound variational system and a PWL Lyapunov monitor.

use std::collections::BTreeMap;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::compound::second_compound;
use crate::lyapunov::PwlFunction;
use crate::netmodel::Network;
use crate::ratlinalg::RatMatrix;
use crate::stoich::ReducedSystem;

/// States larger than this abort the integration.
pub const BLOWUP_LIMIT: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulateError {
    #[error("parameter file: {0}")]
    Syntax(String),
    #[error("missing rate constant k{0}")]
    MissingRate(usize),
    #[error("missing conserved total total{0}")]
    MissingTotal(usize),
    #[error("rate constant k{reaction} = {value} must be positive")]
    NonPositiveRate { reaction: usize, value: f64 },
    #[error("conserved total total{index} = {value} must be positive")]
    NonPositiveTotal { index: usize, value: f64 },
    #[error("unknown parameter `{0}`")]
    UnknownKey(String),
    #[error("expected {expected} values for {what}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("step size {dt} and horizon {t_end} are not usable")]
    BadStep { dt: f64, t_end: f64 },
    #[error("state magnitude {magnitude:e} at t = {t}")]
    StepRejected { t: f64, magnitude: f64 },
    #[error("Newton refinement did not converge (residual {residual:e})")]
    NewtonFailed { residual: f64 },
}

/// Rate constants `k_j > 0` per reaction and totals per conservation law.
#[derive(Debug, Clone, PartialEq)]
pub struct MassActionParams {
    pub rates: Vec<f64>,
    pub totals: Vec<f64>,
}

impl MassActionParams {
    pub fn new(rates: Vec<f64>, totals: Vec<f64>) -> Result<Self, SimulateError> {
        for (j, &k) in rates.iter().enumerate() {
            if k.is_nan() || k <= 0.0 {
                return Err(SimulateError::NonPositiveRate {
                    reaction: j + 1,
                    value: k,
                });
            }
        }
        for (i, &t) in totals.iter().enumerate() {
            if t.is_nan() || t <= 0.0 {
                return Err(SimulateError::NonPositiveTotal {
                    index: i + 1,
                    value: t,
                });
            }
        }
        Ok(MassActionParams { rates, totals })
    }

    /// Parse `k1 = 5.0` / `total1 = 15` lines (TOML key-value syntax).
    ///
    /// `totals` overrides any `total*` keys in the file.
    pub fn parse(
        text: &str,
        n_reactions: usize,
        n_conserved: usize,
        totals: Option<Vec<f64>>,
    ) -> Result<Self, SimulateError> {
        let table: toml::Table =
            toml::from_str(text).map_err(|e| SimulateError::Syntax(e.message().to_string()))?;
        let mut ks = BTreeMap::new();
        let mut ts = BTreeMap::new();
        for (key, val) in &table {
            let x = match val {
                toml::Value::Float(f) => *f,
                toml::Value::Integer(i) => *i as f64,
                _ => return Err(SimulateError::Syntax(format!("`{key}` is not a number"))),
            };
            let (map, idx) = if let Some(rest) = key.strip_prefix("total") {
                (&mut ts, rest)
            } else if let Some(rest) = key.strip_prefix('k') {
                (&mut ks, rest)
            } else {
                return Err(SimulateError::UnknownKey(key.clone()));
            };
            let i: usize = idx
                .parse()
                .ok()
                .filter(|&i| i >= 1)
                .ok_or_else(|| SimulateError::UnknownKey(key.clone()))?;
            map.insert(i, x);
        }
        let rates = (1..=n_reactions)
            .map(|j| ks.get(&j).copied().ok_or(SimulateError::MissingRate(j)))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(&j) = ks.keys().find(|&&j| j > n_reactions) {
            return Err(SimulateError::UnknownKey(format!("k{j}")));
        }
        let totals = match totals {
            Some(t) if t.len() != n_conserved => {
                return Err(SimulateError::DimensionMismatch {
                    what: "totals",
                    expected: n_conserved,
                    got: t.len(),
                })
            }
            Some(t) => t,
            None => (1..=n_conserved)
                .map(|i| ts.get(&i).copied().ok_or(SimulateError::MissingTotal(i)))
                .collect::<Result<Vec<_>, _>>()?,
        };
        MassActionParams::new(rates, totals)
    }
}

/// `R_j(x) = k_j ∏ x_i^{α_ij}` with `0⁰ = 1`.
pub fn mass_action_rates(net: &Network, rates: &[f64], x: &[f64]) -> Vec<f64> {
    net.reactions()
        .iter()
        .zip(rates)
        .map(|(r, k)| {
            r.reactants
                .species()
                .fold(*k, |acc, (i, a)| acc * x[i].powi(a as i32))
        })
        .collect()
}

/// Derivative of the reduced state and whether the reconstruction was clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct Rhs {
    pub value: Vec<f64>,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    /// Reduced state samples.
    pub x: Vec<Vec<f64>>,
    /// Second-compound variational samples.
    pub delta: Vec<Vec<f64>>,
    pub v: Option<Vec<f64>>,
    /// Some reconstruction had a negative component and was clamped.
    pub clamped: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.x.last().map_or(&[], Vec::as_slice)
    }

    pub fn final_delta(&self) -> &[f64] {
        self.delta.last().map_or(&[], Vec::as_slice)
    }

    /// CSV with header `t,x1,…,xN,d2_1,…,d2_M[,V]`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let nx = self.x.first().map_or(0, Vec::len);
        let nd = self.delta.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=nx).map(|i| format!("x{i}")));
        header.extend((1..=nd).map(|i| format!("d2_{i}")));
        if self.v.is_some() {
            header.push("V".into());
        }
        writeln!(out, "{}", header.join(","))?;
        for s in 0..self.len() {
            let mut row = vec![format!("{:e}", self.t[s])];
            row.extend(self.x[s].iter().map(|v| format!("{v:e}")));
            row.extend(self.delta[s].iter().map(|v| format!("{v:e}")));
            if let Some(v) = &self.v {
                row.push(format!("{:e}", v[s]));
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Mass-action model on a reduction: reduced right-hand side, Jacobian and
/// the cascade integrator.
#[derive(Debug, Clone)]
pub struct MassActionModel<'a> {
    net: &'a Network,
    rs: &'a ReducedSystem,
    params: MassActionParams,
    t_inv: DMatrix<f64>,
    gamma_r: DMatrix<f64>,
    a: Vec<DMatrix<f64>>,
    a2: Vec<DMatrix<f64>>,
}

impl<'a> MassActionModel<'a> {
    pub fn new(
        net: &'a Network,
        rs: &'a ReducedSystem,
        params: MassActionParams,
    ) -> Result<Self, SimulateError> {
        if params.rates.len() != net.num_reactions() {
            return Err(SimulateError::DimensionMismatch {
                what: "rate constants",
                expected: net.num_reactions(),
                got: params.rates.len(),
            });
        }
        if params.totals.len() != rs.conserved {
            return Err(SimulateError::DimensionMismatch {
                what: "totals",
                expected: rs.conserved,
                got: params.totals.len(),
            });
        }
        let exact: Vec<RatMatrix> = rs.factors.iter().map(|f| f.matrix()).collect();
        Ok(MassActionModel {
            net,
            rs,
            params,
            t_inv: rs.t_inv.to_f64(),
            gamma_r: rs.gamma_r.to_f64(),
            a: exact.iter().map(RatMatrix::to_f64).collect(),
            a2: exact.iter().map(|m| second_compound(m).to_f64()).collect(),
        })
    }

    pub fn params(&self) -> &MassActionParams {
        &self.params
    }

    pub fn reduced_dim(&self) -> usize {
        self.rs.reduced_dim()
    }

    pub fn compound_dim(&self) -> usize {
        let n = self.reduced_dim();
        n * n.saturating_sub(1) / 2
    }

    /// Full state `x = T⁻¹ [totals; x̃_d]` without clamping.
    pub fn reconstruct(&self, xd: &[f64]) -> Vec<f64> {
        let mut xt = self.params.totals.clone();
        xt.extend_from_slice(xd);
        (&self.t_inv * DVector::from_vec(xt)).as_slice().to_vec()
    }

    /// Inverse map: reduced coordinates of a full state.
    pub fn reduce(&self, x: &[f64]) -> Vec<f64> {
        self.rs.independent.iter().map(|&i| x[i]).collect()
    }

    /// Conservation totals `v_iᵀ x` of a full state.
    pub fn totals_of(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rs.conserved)
            .map(|r| {
                (0..x.len())
                    .map(|i| crate::ratlinalg::rational_to_f64(&self.rs.t[(r, i)]) * x[i])
                    .sum()
            })
            .collect()
    }

    fn clamped_state(&self, xd: &[f64]) -> (Vec<f64>, bool) {
        let mut x = self.reconstruct(xd);
        let mut clamped = false;
        for v in &mut x {
            if *v < 0.0 {
                *v = 0.0;
                clamped = true;
            }
        }
        (x, clamped)
    }

    /// `Γ_r R(x)` at the reconstructed state.
    pub fn reduced_rhs(&self, xd: &[f64]) -> Rhs {
        let (x, clamped) = self.clamped_state(xd);
        let r = mass_action_rates(self.net, &self.params.rates, &x);
        Rhs {
            value: (&self.gamma_r * DVector::from_vec(r)).as_slice().to_vec(),
            clamped,
        }
    }

    /// `ρ_ℓ = ∂R_{j_ℓ}/∂x_{i_ℓ}` at the reconstructed state.
    pub fn kinetic_partials(&self, xd: &[f64]) -> Vec<f64> {
        let (x, _) = self.clamped_state(xd);
        self.rs
            .pairs
            .iter()
            .map(|p| {
                let r = &self.net.reactions()[p.reaction];
                r.reactants
                    .species()
                    .fold(self.params.rates[p.reaction], |acc, (i, a)| {
                        if i == p.species {
                            acc * f64::from(a) * x[i].powi(a as i32 - 1)
                        } else {
                            acc * x[i].powi(a as i32)
                        }
                    })
            })
            .collect()
    }

    /// `J_r = Σ ρ_ℓ A_ℓ`.
    pub fn jacobian_reduced(&self, xd: &[f64]) -> DMatrix<f64> {
        weighted_sum(&self.a, &self.kinetic_partials(xd), self.reduced_dim())
    }

    /// `J_r^(2) = Σ ρ_ℓ A_ℓ^(2)`.
    pub fn jacobian_compound(&self, xd: &[f64]) -> DMatrix<f64> {
        weighted_sum(&self.a2, &self.kinetic_partials(xd), self.compound_dim())
    }

    fn cascade(&self, y: &[f64], clamped: &mut bool) -> Vec<f64> {
        let n = self.reduced_dim();
        let (xd, delta) = y.split_at(n);
        let rhs = self.reduced_rhs(xd);
        *clamped |= rhs.clamped;
        let mut out = rhs.value;
        if !delta.is_empty() {
            let j2 = self.jacobian_compound(xd);
            out.extend_from_slice((j2 * DVector::from_column_slice(delta)).as_slice());
        }
        out
    }

    /// Fixed-step RK4 on `(x̃_d, δ⁽²⁾)`; `V` is sampled when supplied.
    pub fn integrate(
        &self,
        xd0: &[f64],
        delta0: &[f64],
        t_end: f64,
        dt: f64,
        v: Option<&PwlFunction>,
    ) -> Result<Trajectory, SimulateError> {
        if !(dt.is_finite() && dt > 0.0 && t_end.is_finite() && t_end >= dt) {
            return Err(SimulateError::BadStep { dt, t_end });
        }
        let n = self.reduced_dim();
        let m = self.compound_dim();
        if xd0.len() != n {
            return Err(SimulateError::DimensionMismatch {
                what: "initial state",
                expected: n,
                got: xd0.len(),
            });
        }
        if delta0.len() != m {
            return Err(SimulateError::DimensionMismatch {
                what: "variational state",
                expected: m,
                got: delta0.len(),
            });
        }
        let steps = (t_end / dt).round() as usize;
        let mut y: Vec<f64> = xd0.iter().chain(delta0).copied().collect();
        let mut traj = Trajectory {
            t: Vec::with_capacity(steps + 1),
            x: Vec::with_capacity(steps + 1),
            delta: Vec::with_capacity(steps + 1),
            v: v.map(|_| Vec::with_capacity(steps + 1)),
            clamped: false,
        };
        let record = |traj: &mut Trajectory, t: f64, y: &[f64]| {
            traj.t.push(t);
            traj.x.push(y[..n].to_vec());
            traj.delta.push(y[n..].to_vec());
            if let (Some(f), Some(vs)) = (v, traj.v.as_mut()) {
                vs.push(f.eval_f64(&y[n..]));
            }
        };
        record(&mut traj, 0.0, &y);
        let mut clamped = false;
        for s in 1..=steps {
            let k1 = self.cascade(&y, &mut clamped);
            let k2 = self.cascade(&axpy(&y, 0.5 * dt, &k1), &mut clamped);
            let k3 = self.cascade(&axpy(&y, 0.5 * dt, &k2), &mut clamped);
            let k4 = self.cascade(&axpy(&y, dt, &k3), &mut clamped);
            for i in 0..y.len() {
                y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            let t = s as f64 * dt;
            let magnitude = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if magnitude.is_nan() || magnitude > BLOWUP_LIMIT {
                return Err(SimulateError::StepRejected { t, magnitude });
            }
            record(&mut traj, t, &y);
        }
        traj.clamped = clamped;
        Ok(traj)
    }

    /// Long integration followed by Newton polish with the analytic Jacobian.
    pub fn steady_state(
        &self,
        xd0: &[f64],
        t_end: f64,
        dt: f64,
    ) -> Result<Vec<f64>, SimulateError> {
        let n = self.reduced_dim();
        let traj = self.integrate(xd0, &vec![0.0; self.compound_dim()], t_end, dt, None)?;
        let mut x = traj.final_state().to_vec();
        let mut residual = f64::INFINITY;
        for _ in 0..NEWTON_ITERS {
            let f = DVector::from_vec(self.reduced_rhs(&x).value);
            residual = f.amax();
            if residual < NEWTON_TOL {
                return Ok(x);
            }
            let j = self.jacobian_reduced(&x);
            let Some(step) = j.lu().solve(&(-f)) else {
                break;
            };
            for i in 0..n {
                x[i] += step[i];
            }
        }
        if residual < NEWTON_TOL {
            Ok(x)
        } else {
            Err(SimulateError::NewtonFailed { residual })
        }
    }
}

const NEWTON_ITERS: usize = 50;
const NEWTON_TOL: f64 = 1e-12;

fn weighted_sum(mats: &[DMatrix<f64>], w: &[f64], dim: usize) -> DMatrix<f64> {
    mats.iter()
        .zip(w)
        .fold(DMatrix::zeros(dim, dim), |acc, (a, &r)| acc + a * r)
}

fn axpy(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}
