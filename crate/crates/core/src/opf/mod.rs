//! DC optimal power flow with linear or convex quadratic generation costs.

mod canonical;

pub use canonical::{build_canonical, CanonicalForm, RowRole, BALANCE_LOWER, BALANCE_UPPER};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::grid::{GridError, Network};
use crate::qp::{self, Outcome, QpError, RowKind};

#[derive(Debug, Clone, thiserror::Error)]
pub enum OpfError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("cost model has {got} entries, network has {expected} generators")]
    CostDimension { expected: usize, got: usize },
    #[error("quadratic cost coefficient of generator {0} is negative")]
    NonConvexCost(usize),
    #[error("load at position {index} is {value}; loads must be finite and non-negative")]
    InvalidLoad { index: usize, value: f64 },
    #[error("solver failure: {0}")]
    Solver(#[from] QpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostKind {
    Linear,
    Quadratic,
}

/// Generation cost `Σ c2·P² + c1·P` per generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub kind: CostKind,
    /// currency/MWh
    pub linear: Vec<f64>,
    /// currency/MWh², all zero for [`CostKind::Linear`]
    pub quadratic: Vec<f64>,
}

impl CostModel {
    pub fn linear(coeffs: Vec<f64>) -> Self {
        let n = coeffs.len();
        Self {
            kind: CostKind::Linear,
            linear: coeffs,
            quadratic: vec![0.0; n],
        }
    }

    pub fn quadratic(linear: Vec<f64>, quadratic: Vec<f64>) -> Result<Self, OpfError> {
        if linear.len() != quadratic.len() {
            return Err(OpfError::CostDimension {
                expected: linear.len(),
                got: quadratic.len(),
            });
        }
        if let Some(g) = quadratic.iter().position(|&q| !(q >= 0.0)) {
            return Err(OpfError::NonConvexCost(g));
        }
        Ok(Self {
            kind: CostKind::Quadratic,
            linear,
            quadratic,
        })
    }

    /// Costs as stored in the network; linear when every quadratic term is zero.
    pub fn from_network(network: &Network) -> Result<Self, OpfError> {
        let linear: Vec<f64> = network.generators.iter().map(|g| g.cost_linear).collect();
        let quadratic: Vec<f64> = network
            .generators
            .iter()
            .map(|g| g.cost_quadratic)
            .collect();
        if quadratic.iter().all(|&q| q == 0.0) {
            Ok(Self::linear(linear))
        } else {
            Self::quadratic(linear, quadratic)
        }
    }

    /// Linear part of the network's costs, dropping quadratic terms.
    pub fn linear_from_network(network: &Network) -> Self {
        Self::linear(network.generators.iter().map(|g| g.cost_linear).collect())
    }

    pub fn len(&self) -> usize {
        self.linear.len()
    }

    pub fn is_empty(&self) -> bool {
        self.linear.is_empty()
    }

    pub fn is_linear(&self) -> bool {
        self.kind == CostKind::Linear
    }

    pub fn evaluate(&self, p_gen: &[f64]) -> f64 {
        p_gen
            .iter()
            .zip(self.linear.iter().zip(&self.quadratic))
            .map(|(p, (c1, c2))| c2 * p * p + c1 * p)
            .sum()
    }

    /// Marginal cost `2·c2·P + c1` per generator.
    pub fn gradient(&self, p_gen: &[f64]) -> Vec<f64> {
        p_gen
            .iter()
            .zip(self.linear.iter().zip(&self.quadratic))
            .map(|(p, (c1, c2))| 2.0 * c2 * p + c1)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of one DC OPF solve. Vectors are empty unless `status` is optimal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchSolution {
    pub status: SolveStatus,
    /// MW per generator.
    pub p_gen: Vec<f64>,
    /// currency/h
    pub objective: f64,
    /// One entry per canonical row. Entry 0 is the system energy price
    /// (the balance multiplier, equal to the LMP at the slack bus); entry 1
    /// is unused; all others are the non-negative multipliers of `≤` rows.
    pub duals: Vec<f64>,
    /// Balance row plus every inequality row within activity tolerance.
    pub active_set: Vec<usize>,
    /// Working set of the active-set solver. For linear costs it has one
    /// row per generator and `A_B` is nonsingular.
    pub basis: Vec<usize>,
    pub diagnostic: Option<String>,
    pub iterations: usize,
}

impl DispatchSolution {
    fn failed(status: SolveStatus, diagnostic: String) -> Self {
        Self {
            status,
            p_gen: Vec::new(),
            objective: f64::NAN,
            duals: Vec::new(),
            active_set: Vec::new(),
            basis: Vec::new(),
            diagnostic: Some(diagnostic),
            iterations: 0,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Multipliers with every row in `≤` form: `∇f + Aᵀμ = 0`.
    pub fn row_multipliers(&self) -> DVector<f64> {
        let mut mu = DVector::from_column_slice(&self.duals);
        if !mu.is_empty() {
            mu[0] = -self.duals[0];
        }
        mu
    }
}

/// A network prepared for repeated solves with one cost model.
#[derive(Debug, Clone)]
pub struct Dcopf {
    pub canonical: CanonicalForm,
    pub cost: CostModel,
    capacity: (f64, f64),
    fixed_demand: f64,
}

impl Dcopf {
    pub fn new(network: &Network, cost: CostModel) -> Result<Self, OpfError> {
        if cost.len() != network.n_generators() {
            return Err(OpfError::CostDimension {
                expected: network.n_generators(),
                got: cost.len(),
            });
        }
        if let Some(g) = cost.quadratic.iter().position(|&q| !(q >= 0.0)) {
            return Err(OpfError::NonConvexCost(g));
        }
        Ok(Self {
            canonical: build_canonical(network)?,
            cost,
            capacity: network.capacity(),
            fixed_demand: network.total_fixed_demand(),
        })
    }

    pub fn n_gen(&self) -> usize {
        self.canonical.n_gen
    }

    pub fn n_load(&self) -> usize {
        self.canonical.n_load
    }

    pub fn check_load(&self, load: &[f64]) -> Result<(), OpfError> {
        if load.len() != self.n_load() {
            return Err(GridError::LoadDimension {
                expected: self.n_load(),
                got: load.len(),
            }
            .into());
        }
        if let Some(index) = load.iter().position(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(OpfError::InvalidLoad {
                index,
                value: load[index],
            });
        }
        Ok(())
    }

    /// Shortfall (positive) or excess of generation limits against total demand.
    pub fn capacity_gap(&self, load: &[f64]) -> Option<String> {
        let demand = load.iter().sum::<f64>() + self.fixed_demand;
        let (min, max) = self.capacity;
        let tol = 1e-9 * demand.abs().max(1.0);
        if demand > max + tol {
            Some(format!(
                "capacity deficit: demand {demand} MW exceeds total capacity {max} MW by {} MW",
                demand - max
            ))
        } else if demand < min - tol {
            Some(format!(
                "minimum generation {min} MW exceeds demand {demand} MW"
            ))
        } else {
            None
        }
    }

    pub fn solve(&self, load: &[f64]) -> Result<DispatchSolution, OpfError> {
        self.check_load(load)?;
        if let Some(diag) = self.capacity_gap(load) {
            return Ok(DispatchSolution::failed(SolveStatus::Infeasible, diag));
        }
        let c = &self.canonical;
        let rhs = c.rhs(load);
        let kinds: Vec<RowKind> = (0..c.n_rows())
            .map(|j| match j {
                BALANCE_UPPER => RowKind::Equality,
                BALANCE_LOWER => RowKind::Ignored,
                _ if !rhs[j].is_finite() => RowKind::Ignored,
                _ => RowKind::Inequality,
            })
            .collect();
        let problem = qp::Problem {
            a: c.a.clone(),
            b: rhs.map(|v| if v.is_finite() { v } else { 0.0 }),
            kinds,
            c: DVector::from_column_slice(&self.cost.linear),
            h: DVector::from_iterator(self.cost.len(), self.cost.quadratic.iter().map(|q| 2.0 * q)),
        };
        let sol = match qp::solve(&problem, &qp::Options::default())? {
            Outcome::Optimal(s) => s,
            Outcome::Infeasible {
                worst_row,
                violation,
                violated,
            } => {
                let line = violated
                    .iter()
                    .copied()
                    .find(|&j| matches!(c.role(j), RowRole::FlowUpper(_) | RowRole::FlowLower(_)))
                    .unwrap_or(worst_row);
                return Ok(DispatchSolution::failed(
                    SolveStatus::Infeasible,
                    format!("no feasible flow pattern; {} violated at best attempt (max violation {violation:.6} MW)", c.role(line)),
                ));
            }
            Outcome::Unbounded => {
                return Ok(DispatchSolution::failed(
                    SolveStatus::Unbounded,
                    "objective unbounded below".into(),
                ));
            }
        };

        // round-off can leave a unit a hair outside its limits
        let p_gen: Vec<f64> = sol
            .x
            .iter()
            .enumerate()
            .map(|(g, &p)| {
                let (lo, hi) = (-c.b[c.gen_lower_row(g)], c.b[c.gen_upper_row(g)]);
                if (p - lo).abs() <= CanonicalForm::activity_tol(lo) {
                    lo
                } else if (p - hi).abs() <= CanonicalForm::activity_tol(hi) {
                    hi
                } else {
                    p
                }
            })
            .collect();
        let mut duals: Vec<f64> = sol.multipliers.iter().copied().collect();
        duals[0] = -duals[0];
        duals[1] = 0.0;
        let active_set: Vec<usize> = std::iter::once(BALANCE_UPPER)
            .chain((2..c.n_rows()).filter(|&j| {
                let slack = rhs[j] - c.a.row(j).dot(&sol.x.transpose());
                rhs[j].is_finite() && slack <= CanonicalForm::activity_tol(rhs[j])
            }))
            .collect();
        Ok(DispatchSolution {
            status: SolveStatus::Optimal,
            objective: self.cost.evaluate(&p_gen),
            p_gen,
            duals,
            active_set,
            basis: sol.working_set,
            diagnostic: None,
            iterations: sol.iterations,
        })
    }

    /// `‖∇f + Aᵀμ‖∞` at the solution.
    pub fn stationarity_residual(&self, sol: &DispatchSolution) -> f64 {
        let grad = DVector::from_vec(self.cost.gradient(&sol.p_gen));
        let r = grad + self.canonical.a.transpose() * sol.row_multipliers();
        r.amax()
    }

    /// Dual objective `−μᵀ(U·P^D + b)` for linear costs, over finite rows.
    pub fn dual_objective(&self, sol: &DispatchSolution, load: &[f64]) -> f64 {
        let rhs = self.canonical.rhs(load);
        let mu = sol.row_multipliers();
        let linear_part: f64 = -(0..rhs.len())
            .filter(|&j| mu[j] != 0.0)
            .map(|j| mu[j] * rhs[j])
            .sum::<f64>();
        // for quadratic costs the conjugate contributes −½·PᵀHP
        let quad: f64 = sol
            .p_gen
            .iter()
            .zip(&self.cost.quadratic)
            .map(|(p, q)| q * p * p)
            .sum();
        linear_part - quad
    }
}

/// Solves the DC OPF for one parametric load vector.
pub fn solve_dcopf(
    network: &Network,
    load: &[f64],
    cost: &CostModel,
) -> Result<DispatchSolution, OpfError> {
    Dcopf::new(network, cost.clone())?.solve(load)
}

/// Slack of one canonical row at a given dispatch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowSlack {
    pub row: usize,
    pub label: String,
    pub slack: f64,
    pub active: bool,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    pub rows: Vec<RowSlack>,
}

impl ViolationReport {
    pub fn violations(&self) -> Vec<&RowSlack> {
        self.rows.iter().filter(|r| r.violated).collect()
    }

    pub fn is_feasible(&self) -> bool {
        self.rows.iter().all(|r| !r.violated)
    }
}

/// Evaluates every finite canonical row at `sol.p_gen`.
pub fn verify_solution(
    network: &Network,
    load: &[f64],
    sol: &DispatchSolution,
) -> Result<ViolationReport, OpfError> {
    let c = build_canonical(network)?;
    if load.len() != c.n_load {
        return Err(GridError::LoadDimension {
            expected: c.n_load,
            got: load.len(),
        }
        .into());
    }
    if sol.p_gen.len() != c.n_gen {
        return Err(OpfError::CostDimension {
            expected: c.n_gen,
            got: sol.p_gen.len(),
        });
    }
    let rhs = c.rhs(load);
    let slacks = c.slacks(&sol.p_gen, load);
    let rows = (0..c.n_rows())
        .filter(|&j| rhs[j].is_finite())
        .map(|j| {
            let tol = CanonicalForm::activity_tol(rhs[j]);
            RowSlack {
                row: j,
                label: c.role(j).to_string(),
                slack: slacks[j],
                active: slacks[j].abs() <= tol,
                violated: slacks[j] < -tol,
            }
        })
        .collect();
    Ok(ViolationReport { rows })
}
