use nalgebra::{DMatrix, DVector};

use crate::grid::{build_isf_matrix, GridError, IsfMatrix, Network};

/// The DC OPF constraints written as `A·P^G ≤ U·P^D + b`, with `P^D` the
/// parametric loads.
///
/// Row blocks, in order:
///
/// | rows                 | A     | U     | b                  |
/// |----------------------|-------|-------|--------------------|
/// | balance (+)          | 1ᵀ    | 1ᵀ    | fixed demand       |
/// | balance (−)          | −1ᵀ   | −1ᵀ   | −fixed demand      |
/// | flow upper, per line | S_G   | S_D   | F̄ + S·d_fixed      |
/// | flow lower, per line | −S_G  | −S_D  | −F̲ − S·d_fixed     |
/// | gen upper, per unit  | I     | 0     | P̄                  |
/// | gen lower, per unit  | −I    | 0     | −P̲                 |
///
/// `S_G` and `S_D` are the shift-factor columns of the generator and
/// parametric load buses. Demand at non-parametric buses is folded into `b`.
/// Unlimited lines give infinite entries of `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalForm {
    pub a: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub b: DVector<f64>,
    pub n_gen: usize,
    pub n_load: usize,
    pub n_branch: usize,
    pub isf: IsfMatrix,
    /// Internal bus index of each parametric load, in demand-vector order.
    pub load_buses: Vec<usize>,
}

/// What a canonical row constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowRole {
    BalanceUpper,
    BalanceLower,
    FlowUpper(usize),
    FlowLower(usize),
    GenUpper(usize),
    GenLower(usize),
}

impl std::fmt::Display for RowRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RowRole::BalanceUpper => write!(f, "balance+"),
            RowRole::BalanceLower => write!(f, "balance-"),
            RowRole::FlowUpper(l) => write!(f, "flow[{l}] upper"),
            RowRole::FlowLower(l) => write!(f, "flow[{l}] lower"),
            RowRole::GenUpper(g) => write!(f, "gen[{g}] upper"),
            RowRole::GenLower(g) => write!(f, "gen[{g}] lower"),
        }
    }
}

pub const BALANCE_UPPER: usize = 0;
pub const BALANCE_LOWER: usize = 1;

pub fn build_canonical(network: &Network) -> Result<CanonicalForm, GridError> {
    let isf = build_isf_matrix(network)?;
    let s = &isf.entries;
    let n_gen = network.n_generators();
    let n_branch = network.n_branches();
    let load_buses = network.load_buses();
    let n_load = load_buses.len();
    let rows = 2 + 2 * n_branch + 2 * n_gen;

    let fixed = network.fixed_demand();
    let fixed_total: f64 = fixed.iter().sum();
    let fixed_flow = s * DVector::from_column_slice(&fixed);

    let mut a = DMatrix::zeros(rows, n_gen);
    let mut u = DMatrix::zeros(rows, n_load);
    let mut b = DVector::zeros(rows);

    a.row_mut(0).fill(1.0);
    a.row_mut(1).fill(-1.0);
    u.row_mut(0).fill(1.0);
    u.row_mut(1).fill(-1.0);
    b[0] = fixed_total;
    b[1] = -fixed_total;

    for l in 0..n_branch {
        let up = 2 + l;
        let lo = 2 + n_branch + l;
        for (g, gen) in network.generators.iter().enumerate() {
            a[(up, g)] = s[(l, gen.bus)];
            a[(lo, g)] = -s[(l, gen.bus)];
        }
        for (d, &bus) in load_buses.iter().enumerate() {
            u[(up, d)] = s[(l, bus)];
            u[(lo, d)] = -s[(l, bus)];
        }
        let branch = &network.branches[l];
        b[up] = branch.flow_max + fixed_flow[l];
        b[lo] = -branch.flow_min - fixed_flow[l];
    }

    for (g, gen) in network.generators.iter().enumerate() {
        let up = 2 + 2 * n_branch + g;
        let lo = up + n_gen;
        a[(up, g)] = 1.0;
        a[(lo, g)] = -1.0;
        b[up] = gen.p_max;
        b[lo] = -gen.p_min;
    }

    Ok(CanonicalForm {
        a,
        u,
        b,
        n_gen,
        n_load,
        n_branch,
        isf,
        load_buses,
    })
}

impl CanonicalForm {
    pub fn n_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn role(&self, row: usize) -> RowRole {
        let l = self.n_branch;
        let g = self.n_gen;
        match row {
            0 => RowRole::BalanceUpper,
            1 => RowRole::BalanceLower,
            r if r < 2 + l => RowRole::FlowUpper(r - 2),
            r if r < 2 + 2 * l => RowRole::FlowLower(r - 2 - l),
            r if r < 2 + 2 * l + g => RowRole::GenUpper(r - 2 - 2 * l),
            r => RowRole::GenLower(r - 2 - 2 * l - g),
        }
    }

    pub fn flow_upper_row(&self, line: usize) -> usize {
        2 + line
    }

    pub fn flow_lower_row(&self, line: usize) -> usize {
        2 + self.n_branch + line
    }

    pub fn gen_upper_row(&self, gen: usize) -> usize {
        2 + 2 * self.n_branch + gen
    }

    pub fn gen_lower_row(&self, gen: usize) -> usize {
        2 + 2 * self.n_branch + self.n_gen + gen
    }

    /// `U·P^D + b`.
    pub fn rhs(&self, load: &[f64]) -> DVector<f64> {
        &self.u * DVector::from_column_slice(load) + &self.b
    }

    /// Slack `U·P^D + b − A·P^G` of every row.
    pub fn slacks(&self, p_gen: &[f64], load: &[f64]) -> DVector<f64> {
        self.rhs(load) - &self.a * DVector::from_column_slice(p_gen)
    }

    /// Activity tolerance of a row with right-hand side `rhs`.
    pub fn activity_tol(rhs: f64) -> f64 {
        1e-7 * rhs.abs().max(1.0)
    }
}
