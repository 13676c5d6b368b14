use nalgebra::DVector;

use super::{AffineLaw, LoadDomain, LocateError, MppError, RegionPolytope};

/// One critical region with its precomputed signals.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub law: AffineLaw,
    pub polytope: RegionPolytope,
    /// `eᵀJ`, t/MWh per load bus
    pub lmce: Vec<f64>,
    /// `fᵀJ`, currency/MWh per load bus
    pub lmp: Vec<f64>,
}

impl Region {
    pub fn new(
        law: AffineLaw,
        polytope: RegionPolytope,
        intensities: &[f64],
        cost: &[f64],
    ) -> Self {
        let lmce = project(intensities, &law);
        let lmp = project(cost, &law);
        Self {
            law,
            polytope,
            lmce,
            lmp,
        }
    }
}

fn project(weights: &[f64], law: &AffineLaw) -> Vec<f64> {
    let w = DVector::from_column_slice(weights);
    (w.transpose() * &law.j).iter().copied().collect()
}

/// Lookup table from parametric loads to critical regions.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionTable {
    /// SHA-256 of the enriched network the table was built from.
    pub fingerprint: [u8; 32],
    /// External bus numbers of the parametric loads, in load-vector order.
    pub load_buses: Vec<u32>,
    pub domain: LoadDomain,
    /// Linear cost per generator, currency/MWh.
    pub cost: Vec<f64>,
    /// Emission intensity per generator, t/MWh.
    pub intensities: Vec<f64>,
    /// Total minimum and maximum generation, MW.
    pub capacity: (f64, f64),
    /// Demand at non-parametric buses, MW.
    pub fixed_load: f64,
    pub regions: Vec<Region>,
}

impl RegionTable {
    pub fn n_gen(&self) -> usize {
        self.cost.len()
    }

    pub fn n_load(&self) -> usize {
        self.load_buses.len()
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn fingerprint_hex(&self) -> String {
        self.fingerprint
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Index of the first region containing `load`.
    pub fn locate_region(&self, load: &[f64]) -> Result<usize, LocateError> {
        if load.len() != self.n_load() {
            return Err(LocateError::Dimension {
                expected: self.n_load(),
                got: load.len(),
            });
        }
        let demand = load.iter().sum::<f64>() + self.fixed_load;
        let tol = 1e-9 * demand.abs().max(1.0);
        if demand > self.capacity.1 + tol || demand < self.capacity.0 - tol {
            return Err(LocateError::Infeasible {
                demand,
                min: self.capacity.0,
                max: self.capacity.1,
            });
        }
        if !self.domain.contains(load) {
            return Err(LocateError::OutsideDomain);
        }
        self.regions
            .iter()
            .position(|r| r.polytope.contains(load))
            .ok_or(LocateError::Uncovered)
    }

    pub fn query_lmce(&self, load: &[f64]) -> Result<&[f64], LocateError> {
        let k = self.locate_region(load)?;
        Ok(&self.regions[k].lmce)
    }

    pub fn query_lmp(&self, load: &[f64]) -> Result<&[f64], LocateError> {
        let k = self.locate_region(load)?;
        Ok(&self.regions[k].lmp)
    }

    /// The region whose stored prices match `lmp` within `tol` (relative,
    /// floored at 1 currency/MWh).
    pub fn region_from_lmp(&self, lmp: &[f64], tol: f64) -> Result<usize, MppError> {
        if lmp.len() != self.n_load() {
            return Err(MppError::Dimension {
                expected: self.n_load(),
                got: lmp.len(),
            });
        }
        let candidates: Vec<usize> = self
            .regions
            .iter()
            .enumerate()
            .filter(|(_, r)| {
                r.lmp
                    .iter()
                    .zip(lmp)
                    .all(|(a, b)| (a - b).abs() <= tol * b.abs().max(1.0))
            })
            .map(|(i, _)| i)
            .collect();
        match candidates.as_slice() {
            [] => Err(MppError::NoPriceMatch),
            [k] => Ok(*k),
            _ => Err(MppError::AmbiguousPrice(candidates)),
        }
    }

    /// Recomputes `eᵀJ` and `fᵀJ` from the stored Jacobians and checks
    /// them bit for bit against the stored values.
    pub fn check_precomputed(&self) -> bool {
        self.regions.iter().all(|r| {
            project(&self.intensities, &r.law) == r.lmce && project(&self.cost, &r.law) == r.lmp
        })
    }
}
