use nalgebra::{DMatrix, DVector};

use crate::opf::{CanonicalForm, BALANCE_LOWER, BALANCE_UPPER};
use crate::qp::{self, Outcome, RowKind};

use super::{AffineLaw, LoadDomain};

/// Where a region boundary row comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Facet {
    /// Canonical row that becomes active when crossing.
    Row(usize),
    DomainUpper(usize),
    DomainLower(usize),
}

impl Facet {
    pub fn is_domain(&self) -> bool {
        !matches!(self, Facet::Row(_))
    }
}

/// `{P^D : M·P^D ≤ k}` with unit-norm rows and no redundant rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPolytope {
    pub m: DMatrix<f64>,
    pub k: DVector<f64>,
    pub facets: Vec<Facet>,
    /// Chebyshev center and radius.
    pub center: DVector<f64>,
    pub radius: f64,
}

impl RegionPolytope {
    pub fn n_rows(&self) -> usize {
        self.k.len()
    }

    /// Membership with a relative tolerance, rejecting at the first
    /// violated row.
    pub fn contains(&self, load: &[f64]) -> bool {
        for r in 0..self.k.len() {
            let mut s = 0.0;
            for (c, x) in load.iter().enumerate() {
                s += self.m[(r, c)] * x;
            }
            let k = self.k[r];
            if s > k + 1e-9 * k.abs().max(1.0) {
                return false;
            }
        }
        true
    }

    /// Largest violation `max_r (M_r·x − k_r)`; non-positive inside.
    pub fn excess(&self, load: &[f64]) -> f64 {
        let x = DVector::from_column_slice(load);
        (&self.m * x - &self.k).max()
    }
}

/// Minimum radius, relative to the domain diagonal, for a region to count
/// as full-dimensional.
const MIN_RADIUS: f64 = 1e-8;

/// Builds the region on which `law` is primal feasible, clipped to `domain`.
/// Returns `None` when that set has no interior.
pub fn region_polytope(
    canon: &CanonicalForm,
    law: &AffineLaw,
    domain: &LoadDomain,
) -> Option<RegionPolytope> {
    let d = canon.n_load;
    let mut rows: Vec<(DVector<f64>, f64, Facet)> = Vec::new();
    let aj = &canon.a * &law.j;
    let ag = &canon.a * &law.g;
    for j in 0..canon.n_rows() {
        if j == BALANCE_UPPER
            || j == BALANCE_LOWER
            || law.active_set.contains(&j)
            || !canon.b[j].is_finite()
        {
            continue;
        }
        let coeff: DVector<f64> = (aj.row(j) - canon.u.row(j)).transpose();
        let rhs = canon.b[j] - ag[j];
        push_normalized(&mut rows, coeff, rhs, Facet::Row(j));
    }
    for i in 0..d {
        let mut e = DVector::zeros(d);
        e[i] = 1.0;
        rows.push((e.clone(), domain.upper[i], Facet::DomainUpper(i)));
        rows.push((-e, -domain.lower[i], Facet::DomainLower(i)));
    }
    // rows with vanishing coefficients are constant in the load
    if rows.iter().any(|r| r.0.is_empty() && r.1 < -1e-9) {
        return None;
    }
    rows.retain(|r| !r.0.is_empty());

    let min_radius = MIN_RADIUS * domain.diagonal().max(1.0);
    let (center, radius) = chebyshev(&rows, None)?;
    if radius <= min_radius {
        return None;
    }

    // drop rows that never bind inside the others
    let mut keep = vec![true; rows.len()];
    for i in 0..rows.len() {
        let others: Vec<&(DVector<f64>, f64, Facet)> = rows
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i && keep[k])
            .map(|(_, r)| r)
            .collect();
        let (a_i, k_i, _) = &rows[i];
        let tol = 1e-9 * k_i.abs().max(1.0);
        match max_linear(&others, a_i, *k_i + 1.0 + k_i.abs()) {
            Some(v) if v <= k_i + tol => keep[i] = false,
            _ => {}
        }
    }
    let kept: Vec<_> = rows
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(r, _)| r)
        .collect();
    let m = DMatrix::from_fn(kept.len(), d, |r, c| kept[r].0[c]);
    let k = DVector::from_iterator(kept.len(), kept.iter().map(|r| r.1));
    let facets = kept.iter().map(|r| r.2).collect();
    Some(RegionPolytope {
        m,
        k,
        facets,
        center,
        radius,
    })
}

fn push_normalized(
    rows: &mut Vec<(DVector<f64>, f64, Facet)>,
    coeff: DVector<f64>,
    rhs: f64,
    facet: Facet,
) {
    let norm = coeff.norm();
    let scale = rhs.abs().max(1.0);
    if norm <= 1e-12 * scale.max(1.0) || norm <= 1e-12 {
        rows.push((DVector::zeros(0), rhs, facet));
    } else {
        rows.push((coeff / norm, rhs / norm, facet));
    }
}

/// Chebyshev ball of `{x : a_r·x ≤ k_r}`, optionally restricted to the
/// hyperplane `a·x = k`. Rows must have unit norm.
fn chebyshev(
    rows: &[(DVector<f64>, f64, Facet)],
    on: Option<(&DVector<f64>, f64)>,
) -> Option<(DVector<f64>, f64)> {
    let d = rows.first().map(|r| r.0.len()).or(on.map(|o| o.0.len()))?;
    let n = d + 1;
    let extra = 1 + usize::from(on.is_some());
    let mut a = DMatrix::zeros(rows.len() + extra, n);
    let mut b = DVector::zeros(rows.len() + extra);
    let mut kinds = vec![RowKind::Inequality; rows.len() + extra];
    for (i, (coeff, k, _)) in rows.iter().enumerate() {
        for c in 0..d {
            a[(i, c)] = coeff[c];
        }
        a[(i, d)] = 1.0;
        b[i] = *k;
    }
    a[(rows.len(), d)] = -1.0;
    if let Some((coeff, k)) = on {
        let i = rows.len() + 1;
        for c in 0..d {
            a[(i, c)] = coeff[c];
        }
        b[i] = k;
        kinds[i] = RowKind::Equality;
    }
    let mut c = DVector::zeros(n);
    c[d] = -1.0;
    let problem = qp::Problem {
        a,
        b,
        kinds,
        c,
        h: DVector::zeros(n),
    };
    match qp::solve(&problem, &qp::Options::default()).ok()? {
        Outcome::Optimal(s) => Some((s.x.rows(0, d).into_owned(), s.x[d])),
        _ => None,
    }
}

/// `max a·x` over the rows, with `a·x ≤ cap` added to keep it bounded.
fn max_linear(rows: &[&(DVector<f64>, f64, Facet)], obj: &DVector<f64>, cap: f64) -> Option<f64> {
    let d = obj.len();
    let m = rows.len() + 1;
    let mut a = DMatrix::zeros(m, d);
    let mut b = DVector::zeros(m);
    for (i, (coeff, k, _)) in rows.iter().enumerate() {
        a.row_mut(i).copy_from(&coeff.transpose());
        b[i] = *k;
    }
    a.row_mut(m - 1).copy_from(&obj.transpose());
    b[m - 1] = cap;
    let problem = qp::Problem {
        a,
        b,
        kinds: vec![RowKind::Inequality; m],
        c: -obj.clone(),
        h: DVector::zeros(d),
    };
    match qp::solve(&problem, &qp::Options::default()).ok()? {
        Outcome::Optimal(s) => Some(obj.dot(&s.x)),
        _ => None,
    }
}

impl RegionPolytope {
    /// Chebyshev center of facet `row` within the region, and its radius.
    pub fn facet_center(&self, row: usize) -> Option<(DVector<f64>, f64)> {
        let rows: Vec<(DVector<f64>, f64, Facet)> = (0..self.n_rows())
            .filter(|&r| r != row)
            .map(|r| (self.m.row(r).transpose(), self.k[r], self.facets[r]))
            .collect();
        let normal = self.m.row(row).transpose();
        chebyshev(&rows, Some((&normal, self.k[row])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_io::cases;
    use crate::mpp::affine_law_from_active_set;
    use crate::opf::build_canonical;

    fn interval(p: &RegionPolytope) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for r in 0..p.n_rows() {
            if p.m[(r, 0)] > 0.0 {
                hi = hi.min(p.k[r] / p.m[(r, 0)]);
            } else {
                lo = lo.max(p.k[r] / p.m[(r, 0)]);
            }
        }
        (lo, hi)
    }

    #[test]
    fn two_bus_regions() {
        let c = build_canonical(&cases::load("case2").unwrap()).unwrap();
        let domain = LoadDomain::new(vec![10.0], vec![60.0]).unwrap();

        let law = affine_law_from_active_set(&c, &[0, 7]).unwrap();
        let p = region_polytope(&c, &law, &domain).unwrap();
        assert_eq!(p.n_rows(), 2);
        let (lo, hi) = interval(&p);
        assert!((lo - 10.0).abs() < 1e-12 && (hi - 30.0).abs() < 1e-12);
        assert!(p.facets.contains(&Facet::Row(2)));
        assert!(p.facets.contains(&Facet::DomainLower(0)));
        assert!((p.radius - 10.0).abs() < 1e-9);

        let law = affine_law_from_active_set(&c, &[0, 2]).unwrap();
        let p = region_polytope(&c, &law, &domain).unwrap();
        let (lo, hi) = interval(&p);
        assert!((lo - 30.0).abs() < 1e-12 && (hi - 60.0).abs() < 1e-12);
    }

    #[test]
    fn empty_when_law_never_feasible() {
        let c = build_canonical(&cases::load("case2").unwrap()).unwrap();
        let domain = LoadDomain::new(vec![10.0], vec![25.0]).unwrap();
        let law = affine_law_from_active_set(&c, &[0, 2]).unwrap();
        assert!(region_polytope(&c, &law, &domain).is_none());
    }

    #[test]
    fn facet_center_lies_on_facet() {
        let c = build_canonical(&cases::load("case2").unwrap()).unwrap();
        let domain = LoadDomain::new(vec![10.0], vec![60.0]).unwrap();
        let law = affine_law_from_active_set(&c, &[0, 7]).unwrap();
        let p = region_polytope(&c, &law, &domain).unwrap();
        let r = p.facets.iter().position(|f| *f == Facet::Row(2)).unwrap();
        let (x, _) = p.facet_center(r).unwrap();
        assert!((x[0] - 30.0).abs() < 1e-9);
    }
}
