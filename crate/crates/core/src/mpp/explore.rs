use std::collections::{HashMap, VecDeque};

use log::{debug, info};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::case_io::{network_fingerprint, EnrichedNetwork};
use crate::opf::{CostModel, Dcopf};
use crate::sensitivity::{jacobian_from_active_set, select_basis, SensitivityError};

use super::{
    affine_law_from_active_set, dual_certificate, region_polytope, LoadDomain, MppError, Region,
    RegionTable,
};

#[derive(Debug, Clone)]
pub struct ExploreOptions {
    pub seed: u64,
    pub max_regions: usize,
    /// Random points per coverage sweep after the facet traversal.
    pub coverage_samples: usize,
    pub max_sweeps: usize,
    /// Retries with perturbed points when a probe lands on a degenerate optimum.
    pub jitter_attempts: usize,
    /// Facet crossing distance as a fraction of the domain diagonal.
    pub step_fraction: f64,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            max_regions: 10_000,
            coverage_samples: 2_000,
            max_sweeps: 5,
            jitter_attempts: 10,
            step_fraction: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExploreStats {
    pub solves: usize,
    pub seed_jitters: usize,
    pub facets_crossed: usize,
    pub shared_facets: usize,
    pub domain_facets: usize,
    pub infeasible_facets: usize,
    pub unresolved_facets: usize,
    pub coverage_points: usize,
    pub coverage_regions: usize,
    pub uncovered_points: usize,
}

enum Probe {
    Infeasible,
    Known(usize),
    New,
    Empty,
}

struct Explorer<'a> {
    dcopf: Dcopf,
    domain: &'a LoadDomain,
    intensities: Vec<f64>,
    regions: Vec<Region>,
    index: HashMap<Vec<usize>, usize>,
    queue: VecDeque<usize>,
    stats: ExploreStats,
    rng: ChaCha8Rng,
    opts: &'a ExploreOptions,
}

/// Enumerates the critical regions of the linear-cost DC OPF over `domain`
/// by crossing region facets breadth first from the region at `seed_load`.
pub fn explore_regions(
    net: &EnrichedNetwork,
    cost: &CostModel,
    domain: &LoadDomain,
    seed_load: &[f64],
) -> Result<RegionTable, MppError> {
    explore_regions_with(net, cost, domain, seed_load, &ExploreOptions::default()).map(|(t, _)| t)
}

pub fn explore_regions_with(
    net: &EnrichedNetwork,
    cost: &CostModel,
    domain: &LoadDomain,
    seed_load: &[f64],
    opts: &ExploreOptions,
) -> Result<(RegionTable, ExploreStats), MppError> {
    if !cost.is_linear() {
        return Err(MppError::Unsupported(
            "region enumeration requires linear costs".into(),
        ));
    }
    let intensities = net
        .network
        .generators
        .iter()
        .map(|g| {
            g.carbon
                .map(|c| c.intensity)
                .ok_or(SensitivityError::MissingIntensity(g.id))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let dcopf = Dcopf::new(&net.network, cost.clone())?;
    if domain.dim() != dcopf.n_load() {
        return Err(MppError::Dimension {
            expected: dcopf.n_load(),
            got: domain.dim(),
        });
    }
    if !domain.contains(seed_load) {
        return Err(MppError::Domain("seed load lies outside the domain".into()));
    }

    let mut ex = Explorer {
        dcopf,
        domain,
        intensities,
        regions: Vec::new(),
        index: HashMap::new(),
        queue: VecDeque::new(),
        stats: ExploreStats::default(),
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        opts,
    };
    ex.seed(seed_load)?;
    ex.traverse()?;
    for _ in 0..opts.max_sweeps {
        if ex.sweep()? == 0 {
            break;
        }
    }
    info!(
        "{} regions from {} solves ({} facets crossed, {} shared)",
        ex.regions.len(),
        ex.stats.solves,
        ex.stats.facets_crossed,
        ex.stats.shared_facets
    );
    let table = ex.into_table(net);
    let stats = table.1;
    Ok((table.0, stats))
}

impl Explorer<'_> {
    fn probe(&mut self, load: &[f64]) -> Result<Probe, MppError> {
        self.stats.solves += 1;
        let sol = self.dcopf.solve(load)?;
        if !sol.is_optimal() {
            return Ok(Probe::Infeasible);
        }
        let canon = &self.dcopf.canonical;
        let Some(basis) = select_basis(canon, &sol) else {
            return Ok(Probe::Empty);
        };
        if let Some(&k) = self.index.get(&basis) {
            return Ok(Probe::Known(k));
        }
        let Ok(law) = affine_law_from_active_set(canon, &basis) else {
            return Ok(Probe::Empty);
        };
        if !dual_certificate(canon, &law, &self.dcopf.cost.linear) {
            return Ok(Probe::Empty);
        }
        let Some(polytope) = region_polytope(canon, &law, self.domain) else {
            return Ok(Probe::Empty);
        };
        let k = self.regions.len();
        if k >= self.opts.max_regions {
            return Err(MppError::RegionCap {
                limit: self.opts.max_regions,
                found: k,
            });
        }
        debug!(
            "region {k}: active rows {basis:?}, {} facets",
            polytope.n_rows()
        );
        self.regions.push(Region::new(
            law,
            polytope,
            &self.intensities,
            &self.dcopf.cost.linear,
        ));
        self.index.insert(basis, k);
        self.queue.push_back(k);
        Ok(Probe::New)
    }

    fn is_degenerate(&self, load: &[f64]) -> Result<bool, MppError> {
        let sol = self.dcopf.solve(load)?;
        if !sol.is_optimal() {
            return Err(MppError::InfeasibleSeed(sol.diagnostic.unwrap_or_default()));
        }
        Ok(
            match jacobian_from_active_set(&self.dcopf.canonical, &self.dcopf.cost, &sol) {
                Ok(j) => j.at_boundary,
                Err(_) => true,
            },
        )
    }

    fn seed(&mut self, seed_load: &[f64]) -> Result<(), MppError> {
        let widths: Vec<f64> = self
            .domain
            .lower
            .iter()
            .zip(&self.domain.upper)
            .map(|(l, u)| u - l)
            .collect();
        let mut point = seed_load.to_vec();
        for _ in 0..self.opts.jitter_attempts {
            if !self.is_degenerate(&point)? {
                break;
            }
            self.stats.seed_jitters += 1;
            point = seed_load
                .iter()
                .zip(&widths)
                .map(|(x, w)| x + 1e-3 * w * self.rng.gen_range(-1.0..=1.0))
                .collect();
            self.domain.clamp(&mut point);
        }
        match self.probe(&point)? {
            Probe::New => Ok(()),
            Probe::Infeasible => Err(MppError::InfeasibleSeed(
                "seed load has no feasible dispatch".into(),
            )),
            _ => Err(MppError::SeedFailed),
        }
    }

    fn traverse(&mut self) -> Result<(), MppError> {
        let step = self.opts.step_fraction * self.domain.diagonal().max(1e-9);
        while let Some(r) = self.queue.pop_front() {
            let polytope = self.regions[r].polytope.clone();
            for (f, facet) in polytope.facets.iter().enumerate() {
                if facet.is_domain() {
                    self.stats.domain_facets += 1;
                    continue;
                }
                let Some((center, radius)) = polytope.facet_center(f) else {
                    self.stats.unresolved_facets += 1;
                    continue;
                };
                let normal: DVector<f64> = polytope.m.row(f).transpose();
                let mut resolved = false;
                for attempt in 0..=self.opts.jitter_attempts {
                    let mut x = &center + &normal * (step * (1 + attempt) as f64);
                    if attempt > 0 {
                        let spread = 0.5 * radius.min(step * 10.0);
                        for v in x.iter_mut() {
                            *v += spread * self.rng.gen_range(-1.0..=1.0);
                        }
                    }
                    let mut point: Vec<f64> = x.iter().copied().collect();
                    self.domain.clamp(&mut point);
                    if polytope.contains(&point) {
                        continue;
                    }
                    match self.probe(&point)? {
                        Probe::Infeasible => {
                            self.stats.infeasible_facets += 1;
                            resolved = true;
                        }
                        Probe::Known(k) if k == r => continue,
                        Probe::Known(_) => {
                            self.stats.shared_facets += 1;
                            resolved = true;
                        }
                        Probe::New => {
                            self.stats.facets_crossed += 1;
                            resolved = true;
                        }
                        Probe::Empty => continue,
                    }
                    break;
                }
                if !resolved {
                    debug!("facet {facet:?} of region {r} could not be crossed");
                    self.stats.unresolved_facets += 1;
                }
            }
        }
        Ok(())
    }

    /// Samples the domain and seeds a traversal from any feasible point no
    /// known region contains. Returns the number of regions added.
    fn sweep(&mut self) -> Result<usize, MppError> {
        let before = self.regions.len();
        for _ in 0..self.opts.coverage_samples {
            let x = self.domain.sample(&mut self.rng);
            self.stats.coverage_points += 1;
            if self.regions.iter().any(|r| r.polytope.contains(&x)) {
                continue;
            }
            match self.probe(&x)? {
                Probe::New => {
                    self.stats.coverage_regions += 1;
                    self.traverse()?;
                }
                Probe::Empty => self.stats.uncovered_points += 1,
                Probe::Known(_) | Probe::Infeasible => {}
            }
        }
        Ok(self.regions.len() - before)
    }

    fn into_table(self, net: &EnrichedNetwork) -> (RegionTable, ExploreStats) {
        let network = &net.network;
        let load_buses = network
            .load_buses()
            .iter()
            .map(|&i| network.buses[i].number)
            .collect();
        let table = RegionTable {
            fingerprint: network_fingerprint(net),
            load_buses,
            domain: self.domain.clone(),
            cost: self.dcopf.cost.linear.clone(),
            intensities: self.intensities,
            capacity: network.capacity(),
            fixed_load: network.total_fixed_demand(),
            regions: self.regions,
        };
        (table, self.stats)
    }
}
