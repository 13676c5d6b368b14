use nalgebra::{DMatrix, DVector};

use crate::opf::{CanonicalForm, BALANCE_LOWER};

use super::MppError;

/// `P^G = J·P^D + g`, valid while `active_set` stays optimal.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLaw {
    pub active_set: Vec<usize>,
    /// N^G × N^D
    pub j: DMatrix<f64>,
    pub g: DVector<f64>,
}

impl AffineLaw {
    pub fn dispatch(&self, load: &[f64]) -> DVector<f64> {
        &self.j * DVector::from_column_slice(load) + &self.g
    }
}

/// `J = A_B⁻¹U_B`, `g = A_B⁻¹b_B` for a square nonsingular basis `B`.
pub fn affine_law_from_active_set(
    canon: &CanonicalForm,
    active_set: &[usize],
) -> Result<AffineLaw, MppError> {
    let n = canon.n_gen;
    if active_set.len() != n {
        return Err(MppError::SingularBasis(format!(
            "{} rows given, {n} needed",
            active_set.len()
        )));
    }
    if let Some(&bad) = active_set
        .iter()
        .find(|&&j| j >= canon.n_rows() || !canon.b[j].is_finite())
    {
        return Err(MppError::SingularBasis(format!(
            "row {bad} cannot be active"
        )));
    }
    let mut rows = active_set.to_vec();
    rows.sort_unstable();
    let a_b = DMatrix::from_fn(n, n, |i, k| canon.a[(rows[i], k)]);
    let u_b = DMatrix::from_fn(n, canon.n_load, |i, k| canon.u[(rows[i], k)]);
    let b_b = DVector::from_iterator(n, rows.iter().map(|&j| canon.b[j]));

    let svd = a_b.clone().svd(false, false);
    let max = svd.singular_values.max();
    if !(max > 0.0 && svd.singular_values.min() > 1e-10 * max) {
        return Err(MppError::SingularBasis(format!(
            "rows {rows:?} are linearly dependent"
        )));
    }
    let lu = a_b.lu();
    let j = lu
        .solve(&u_b)
        .ok_or_else(|| MppError::SingularBasis(format!("rows {rows:?}")))?;
    let g = lu
        .solve(&b_b)
        .ok_or_else(|| MppError::SingularBasis(format!("rows {rows:?}")))?;
    Ok(AffineLaw {
        active_set: rows,
        j,
        g,
    })
}

/// Basis multipliers `λ_B = −A_B⁻ᵀ f` are non-negative on every inequality
/// row, so the basis is optimal wherever it is primal feasible.
pub fn dual_certificate(canon: &CanonicalForm, law: &AffineLaw, cost: &[f64]) -> bool {
    let n = canon.n_gen;
    let a_b = DMatrix::from_fn(n, n, |i, k| canon.a[(law.active_set[i], k)]);
    let f = DVector::from_column_slice(cost);
    let Some(lambda) = a_b.transpose().lu().solve(&(-f)) else {
        return false;
    };
    let tol = 1e-9 * cost.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    law.active_set
        .iter()
        .zip(lambda.iter())
        .all(|(&j, &l)| j <= BALANCE_LOWER || l >= -tol)
}
