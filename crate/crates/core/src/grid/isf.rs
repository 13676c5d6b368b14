use nalgebra::DMatrix;

use super::{GridError, Network};

/// Injection shift factors: `entries[(l, n)]` is the MW flow on branch `l`
/// per MW injected at bus `n` and withdrawn at the slack bus.
#[derive(Debug, Clone, PartialEq)]
pub struct IsfMatrix {
    pub entries: DMatrix<f64>,
    pub slack_bus: usize,
}

impl IsfMatrix {
    pub fn n_branches(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_buses(&self) -> usize {
        self.entries.ncols()
    }

    /// Branch flows for a nodal net-injection vector.
    pub fn flows(&self, injection: &[f64]) -> Vec<f64> {
        (0..self.n_branches())
            .map(|l| {
                self.entries
                    .row(l)
                    .iter()
                    .zip(injection)
                    .map(|(s, p)| s * p)
                    .sum()
            })
            .collect()
    }
}

/// Builds the ISF matrix `S = B_f · (B_red)⁻¹` with the slack row/column of
/// the bus susceptance matrix removed. The slack column of `S` is zero.
pub fn build_isf_matrix(network: &Network) -> Result<IsfMatrix, GridError> {
    network.validate()?;
    let n = network.n_buses();
    let l = network.n_branches();
    let slack = network.slack_bus;

    let mut b_bus = DMatrix::<f64>::zeros(n, n);
    let mut b_f = DMatrix::<f64>::zeros(l, n);
    for (i, br) in network.branches.iter().enumerate() {
        let b = br.susceptance();
        let (f, t) = (br.from_bus, br.to_bus);
        b_bus[(f, f)] += b;
        b_bus[(t, t)] += b;
        b_bus[(f, t)] -= b;
        b_bus[(t, f)] -= b;
        b_f[(i, f)] += b;
        b_f[(i, t)] -= b;
    }

    let keep: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let mut entries = DMatrix::<f64>::zeros(l, n);
    if keep.is_empty() {
        return Ok(IsfMatrix {
            entries,
            slack_bus: slack,
        });
    }
    let b_red = b_bus.select_rows(&keep).select_columns(&keep);
    let lu = b_red.lu();
    // S_red = B_f,red · B_red⁻¹, computed as (B_red⁻ᵀ · B_f,redᵀ)ᵀ. B_red is symmetric.
    let rhs = b_f.select_columns(&keep).transpose();
    let sol = lu.solve(&rhs).ok_or(GridError::SingularSusceptance)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(GridError::SingularSusceptance);
    }
    let s_red = sol.transpose();
    for (col, &bus) in keep.iter().enumerate() {
        entries.set_column(bus, &s_red.column(col));
    }
    Ok(IsfMatrix {
        entries,
        slack_bus: slack,
    })
}
