//! Dispatch sensitivities, marginal emissions and marginal prices.
//!
//! The Jacobian `J = ∂P^G/∂P^D` comes from differentiating the optimality
//! conditions restricted to the solver's final active set. With linear costs
//! that is `A_B J = U_B` on a square basis `B`; with quadratic costs it is
//!
//! ```text
//! [ H  Âᵀ ] [ J ]   [ 0 ]
//! [ Â  0  ] [ M ] = [ Û ]
//! ```
//!
//! over the working rows `Â`. Marginal emissions are `eᵀJ`, prices `∇fᵀJ`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::case_io::EnrichedNetwork;
use crate::opf::{
    CanonicalForm, CostModel, Dcopf, DispatchSolution, OpfError, SolveStatus, BALANCE_LOWER,
};

#[derive(Debug, Clone, thiserror::Error)]
pub enum SensitivityError {
    #[error(transparent)]
    Opf(#[from] OpfError),
    #[error("dispatch is infeasible: {0}")]
    Infeasible(String),
    #[error("dispatch is unbounded")]
    Unbounded,
    #[error("degenerate optimum: {0}; perturb the load off the region boundary")]
    Degenerate(String),
    #[error("network is not enriched: generator {0} has no emission intensity")]
    MissingIntensity(usize),
    #[error("finite difference at load position {0}: both perturbed points are infeasible")]
    NoFeasibleNeighbour(usize),
}

/// Jacobian with the rows that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    /// N^G × N^D
    pub matrix: DMatrix<f64>,
    pub rows: Vec<usize>,
    /// The optimum sits on a region boundary; `matrix` is then the one-sided
    /// derivative of the returned basis.
    pub at_boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityResult {
    pub jacobian: DMatrix<f64>,
    /// t/MWh per load bus
    pub lmce: Vec<f64>,
    /// currency/MWh per load bus
    pub lmp: Vec<f64>,
    pub at_boundary: bool,
    pub active_set: Vec<usize>,
    pub dispatch: DispatchSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LmpVector {
    /// `∇fᵀJ` per load bus
    pub values: Vec<f64>,
    /// Energy price plus congestion components from the row multipliers.
    pub from_duals: Vec<f64>,
    pub at_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteDifference {
    pub lmce: Vec<f64>,
    /// Entries computed by a forward or backward difference because the
    /// other side was infeasible.
    pub one_sided: Vec<bool>,
    pub step: f64,
}

/// Default finite-difference step `max(0.1, 1e-4·‖load‖∞)` MW.
pub fn default_step(load: &[f64]) -> f64 {
    let norm = load.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    (1e-4 * norm).max(0.1)
}

fn multiplier_tol(cost: &CostModel, sol: &DispatchSolution) -> f64 {
    let g = cost.gradient(&sol.p_gen);
    1e-9 * g.iter().fold(1.0_f64, |m, v| m.max(v.abs()))
}

fn submatrix(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, k| m[(rows[i], k)])
}

fn is_nonsingular(a: &DMatrix<f64>) -> bool {
    if !a.is_square() {
        return false;
    }
    let svd = a.clone().svd(false, false);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    max > 0.0 && min > 1e-10 * max
}

/// Linear-cost basis: the solver's terminal basis when nonsingular, else the
/// lexicographically smallest independent subset of the tight rows.
pub fn select_basis(canon: &CanonicalForm, sol: &DispatchSolution) -> Option<Vec<usize>> {
    let n = canon.n_gen;
    if sol.basis.len() == n && is_nonsingular(&submatrix(&canon.a, &sol.basis)) {
        return Some(sol.basis.clone());
    }
    let mut chosen: Vec<usize> = Vec::new();
    for &j in &sol.active_set {
        if j == BALANCE_LOWER {
            continue;
        }
        let mut trial = chosen.clone();
        trial.push(j);
        let sub = submatrix(&canon.a, &trial);
        let svd = sub.svd(false, false);
        let max = svd.singular_values.max();
        if svd.singular_values.min() > 1e-10 * max {
            chosen = trial;
            if chosen.len() == n {
                return Some(chosen);
            }
        }
    }
    None
}

pub fn jacobian_from_active_set(
    canon: &CanonicalForm,
    cost: &CostModel,
    sol: &DispatchSolution,
) -> Result<Jacobian, SensitivityError> {
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => {
            return Err(SensitivityError::Infeasible(
                sol.diagnostic.clone().unwrap_or_default(),
            ))
        }
        SolveStatus::Unbounded => return Err(SensitivityError::Unbounded),
    }
    let n = canon.n_gen;
    let tol = multiplier_tol(cost, sol);
    if cost.is_linear() {
        let rows = select_basis(canon, sol).ok_or_else(|| {
            SensitivityError::Degenerate(format!(
                "tight rows {:?} do not contain a nonsingular basis",
                sol.active_set
            ))
        })?;
        let a_b = submatrix(&canon.a, &rows);
        let u_b = submatrix(&canon.u, &rows);
        let matrix = a_b
            .lu()
            .solve(&u_b)
            .ok_or_else(|| SensitivityError::Degenerate("basis matrix is singular".into()))?;
        let weak = rows
            .iter()
            .any(|&j| j > BALANCE_LOWER && sol.duals[j].abs() <= tol);
        let at_boundary = sol.active_set.len() > n || weak;
        return Ok(Jacobian {
            matrix,
            rows,
            at_boundary,
        });
    }

    let rows = sol.basis.clone();
    let k = rows.len();
    let mut kkt = DMatrix::zeros(n + k, n + k);
    for g in 0..n {
        kkt[(g, g)] = 2.0 * cost.quadratic[g];
    }
    for (i, &j) in rows.iter().enumerate() {
        for g in 0..n {
            kkt[(n + i, g)] = canon.a[(j, g)];
            kkt[(g, n + i)] = canon.a[(j, g)];
        }
    }
    let mut rhs = DMatrix::zeros(n + k, canon.n_load);
    for (i, &j) in rows.iter().enumerate() {
        rhs.row_mut(n + i).copy_from(&canon.u.row(j));
    }
    let solution = kkt.lu().solve(&rhs).ok_or_else(|| {
        SensitivityError::Degenerate("optimality system is singular on the working set".into())
    })?;
    let matrix = solution.rows(0, n).into_owned();
    let weak = rows
        .iter()
        .any(|&j| j > BALANCE_LOWER && sol.duals[j].abs() <= tol);
    let extra = sol.active_set.iter().any(|j| !rows.contains(j));
    Ok(Jacobian {
        matrix,
        rows,
        at_boundary: weak || extra,
    })
}

/// `−μᵀU`: energy price plus congestion components per load bus.
pub fn dual_lmp(canon: &CanonicalForm, sol: &DispatchSolution) -> Vec<f64> {
    let mu = sol.row_multipliers();
    (-(canon.u.transpose() * mu)).iter().copied().collect()
}

/// A DC OPF bound to generator intensities, for repeated sensitivity queries.
#[derive(Debug, Clone)]
pub struct LmceEngine {
    pub dcopf: Dcopf,
    pub intensities: DVector<f64>,
}

impl LmceEngine {
    pub fn new(enriched: &EnrichedNetwork, cost: CostModel) -> Result<Self, SensitivityError> {
        let intensities = enriched_intensities(enriched)?;
        let dcopf = Dcopf::new(&enriched.network, cost)?;
        Ok(Self {
            dcopf,
            intensities: DVector::from_vec(intensities),
        })
    }

    pub fn total_emissions(&self, p_gen: &[f64]) -> f64 {
        self.intensities.iter().zip(p_gen).map(|(e, p)| e * p).sum()
    }

    pub fn exact(&self, load: &[f64]) -> Result<SensitivityResult, SensitivityError> {
        let sol = self.dcopf.solve(load)?;
        let jac = jacobian_from_active_set(&self.dcopf.canonical, &self.dcopf.cost, &sol)?;
        let lmce = (self.intensities.transpose() * &jac.matrix)
            .iter()
            .copied()
            .collect();
        let grad = DVector::from_vec(self.dcopf.cost.gradient(&sol.p_gen));
        let lmp = (grad.transpose() * &jac.matrix).iter().copied().collect();
        Ok(SensitivityResult {
            jacobian: jac.matrix,
            lmce,
            lmp,
            at_boundary: jac.at_boundary,
            active_set: jac.rows,
            dispatch: sol,
        })
    }

    fn emissions_at(&self, load: &[f64]) -> Result<Option<f64>, SensitivityError> {
        if load.iter().any(|&v| v < 0.0) {
            return Ok(None);
        }
        let sol = self.dcopf.solve(load)?;
        match sol.status {
            SolveStatus::Optimal => Ok(Some(self.total_emissions(&sol.p_gen))),
            _ => Ok(None),
        }
    }

    pub fn finite_difference(
        &self,
        load: &[f64],
        step: Option<f64>,
    ) -> Result<FiniteDifference, SensitivityError> {
        self.dcopf.check_load(load)?;
        let h = step.unwrap_or_else(|| default_step(load));
        let center = self.emissions_at(load)?;
        let mut lmce = Vec::with_capacity(load.len());
        let mut one_sided = Vec::with_capacity(load.len());
        for i in 0..load.len() {
            let mut up = load.to_vec();
            up[i] += h;
            let mut down = load.to_vec();
            down[i] -= h;
            let (value, flag) = match (self.emissions_at(&up)?, self.emissions_at(&down)?, center) {
                (Some(u), Some(d), _) => ((u - d) / (2.0 * h), false),
                (Some(u), None, Some(c)) => ((u - c) / h, true),
                (None, Some(d), Some(c)) => ((c - d) / h, true),
                _ => return Err(SensitivityError::NoFeasibleNeighbour(i)),
            };
            lmce.push(value);
            one_sided.push(flag);
        }
        Ok(FiniteDifference {
            lmce,
            one_sided,
            step: h,
        })
    }

    pub fn lmp(&self, load: &[f64]) -> Result<LmpVector, SensitivityError> {
        let result = self.exact(load)?;
        Ok(LmpVector {
            from_duals: dual_lmp(&self.dcopf.canonical, &result.dispatch),
            values: result.lmp,
            at_boundary: result.at_boundary,
        })
    }
}

fn enriched_intensities(enriched: &EnrichedNetwork) -> Result<Vec<f64>, SensitivityError> {
    enriched
        .network
        .generators
        .iter()
        .map(|g| {
            g.carbon
                .map(|c| c.intensity)
                .ok_or(SensitivityError::MissingIntensity(g.id))
        })
        .collect()
}

/// Solves the DC OPF at `load` and differentiates it.
pub fn lmce_exact(
    net: &EnrichedNetwork,
    load: &[f64],
    cost: &CostModel,
) -> Result<SensitivityResult, SensitivityError> {
    LmceEngine::new(net, cost.clone())?.exact(load)
}

/// Central differences of total emissions, one load bus at a time.
pub fn lmce_finite_difference(
    net: &EnrichedNetwork,
    load: &[f64],
    cost: &CostModel,
    step: Option<f64>,
) -> Result<FiniteDifference, SensitivityError> {
    LmceEngine::new(net, cost.clone())?.finite_difference(load, step)
}

pub fn lmp_exact(
    net: &EnrichedNetwork,
    load: &[f64],
    cost: &CostModel,
) -> Result<LmpVector, SensitivityError> {
    LmceEngine::new(net, cost.clone())?.lmp(load)
}
