use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::fuel::{EmissionMetric, FuelType};
use super::GridError;

/// A network bus. `demand` is the nominal active load in MW.
///
/// Buses flagged `is_load` are the parametric demand buses: their loads form
/// the demand vector that the solvers and sensitivities are expressed in.
/// Demand at unflagged buses is held fixed at its nominal value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    /// External bus number as it appears in the source case.
    pub number: u32,
    pub demand: f64,
    pub is_load: bool,
    pub is_reference: bool,
}

/// A transmission branch between two buses (internal indices).
///
/// Flows are positive in the from→to direction; `flow_min`/`flow_max` are
/// interpreted in that frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from_bus: usize,
    pub to_bus: usize,
    /// Series reactance, per unit.
    pub reactance: f64,
    /// Off-nominal transformer ratio; 1.0 for lines.
    pub tap: f64,
    #[serde(with = "unbounded::below")]
    pub flow_min: f64,
    #[serde(with = "unbounded::above")]
    pub flow_max: f64,
}

impl Branch {
    /// DC series susceptance `1 / (x · tap)`.
    pub fn susceptance(&self) -> f64 {
        1.0 / (self.reactance * self.tap)
    }
}

/// Carbon attributes attached to a generator by enrichment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarbonProfile {
    pub fuel: FuelType,
    pub metric: EmissionMetric,
    /// Emission intensity in t/MWh.
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: usize,
    /// Internal bus index.
    pub bus: usize,
    /// Linear cost coefficient, currency/MWh.
    pub cost_linear: f64,
    /// Quadratic cost coefficient, currency/MWh². Zero for linear costs.
    pub cost_quadratic: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// Raw fuel label carried by the source case, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuel_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carbon: Option<CarbonProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    /// Internal index of the angle reference bus.
    pub slack_bus: usize,
}

impl Network {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn n_generators(&self) -> usize {
        self.generators.len()
    }

    /// Internal indices of the parametric load buses, in bus order. This
    /// ordering defines the layout of every demand vector.
    pub fn load_buses(&self) -> Vec<usize> {
        self.buses
            .iter()
            .enumerate()
            .filter(|(_, b)| b.is_load)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn n_loads(&self) -> usize {
        self.buses.iter().filter(|b| b.is_load).count()
    }

    /// Nominal demand over the load buses.
    pub fn nominal_load(&self) -> Vec<f64> {
        self.buses
            .iter()
            .filter(|b| b.is_load)
            .map(|b| b.demand)
            .collect()
    }

    /// Per-bus demand that is not part of the parametric load vector.
    pub fn fixed_demand(&self) -> Vec<f64> {
        self.buses
            .iter()
            .map(|b| if b.is_load { 0.0 } else { b.demand })
            .collect()
    }

    pub fn total_fixed_demand(&self) -> f64 {
        self.fixed_demand().iter().sum()
    }

    /// Full per-bus demand vector for a given parametric load vector.
    pub fn bus_demand(&self, load: &[f64]) -> Result<Vec<f64>, GridError> {
        self.check_load_dim(load)?;
        let mut demand = self.fixed_demand();
        for (&bus, &p) in self.load_buses().iter().zip(load) {
            demand[bus] = p;
        }
        Ok(demand)
    }

    pub fn check_load_dim(&self, load: &[f64]) -> Result<(), GridError> {
        let expected = self.n_loads();
        if load.len() != expected {
            return Err(GridError::LoadDimension {
                expected,
                got: load.len(),
            });
        }
        Ok(())
    }

    /// Total (min, max) generation capacity.
    pub fn capacity(&self) -> (f64, f64) {
        self.generators
            .iter()
            .fold((0.0, 0.0), |(lo, hi), g| (lo + g.p_min, hi + g.p_max))
    }

    /// Emission intensities of every generator, or `None` if any generator
    /// has not been enriched.
    pub fn intensities(&self) -> Option<Vec<f64>> {
        self.generators
            .iter()
            .map(|g| g.carbon.map(|c| c.intensity))
            .collect()
    }

    pub fn bus_index(&self, number: u32) -> Option<usize> {
        self.buses.iter().position(|b| b.number == number)
    }

    /// Marks exactly the given buses (external numbers) as parametric loads.
    pub fn set_load_buses(&mut self, numbers: &[u32]) -> Result<(), GridError> {
        let mut flags = vec![false; self.buses.len()];
        for &n in numbers {
            let idx = self.bus_index(n).ok_or(GridError::UnknownBusNumber(n))?;
            flags[idx] = true;
        }
        for (bus, flag) in self.buses.iter_mut().zip(flags) {
            bus.is_load = flag;
        }
        Ok(())
    }

    /// Checks structural invariants: bounds, reactances, bus references,
    /// slack validity and connectivity.
    pub fn validate(&self) -> Result<(), GridError> {
        if self.slack_bus >= self.buses.len() {
            return Err(GridError::InvalidSlack(self.slack_bus));
        }
        for (i, br) in self.branches.iter().enumerate() {
            if br.from_bus >= self.buses.len() || br.to_bus >= self.buses.len() {
                return Err(GridError::InvalidBranch {
                    index: i,
                    reason: "endpoint out of range".into(),
                });
            }
            if !(br.reactance > 0.0) || !(br.tap > 0.0) {
                return Err(GridError::InvalidBranch {
                    index: i,
                    reason: "reactance and tap must be positive".into(),
                });
            }
            if !(br.flow_min <= 0.0 && br.flow_max >= 0.0) {
                return Err(GridError::InvalidBranch {
                    index: i,
                    reason: "flow limits must bracket zero".into(),
                });
            }
        }
        for g in &self.generators {
            if g.bus >= self.buses.len() {
                return Err(GridError::UnknownBus {
                    generator: g.id,
                    bus: g.bus,
                });
            }
            if !(g.p_min <= g.p_max) {
                return Err(GridError::InvalidGenerator {
                    id: g.id,
                    reason: "p_min exceeds p_max".into(),
                });
            }
            if g.cost_quadratic < 0.0 {
                return Err(GridError::InvalidGenerator {
                    id: g.id,
                    reason: "negative quadratic cost".into(),
                });
            }
            if let Some(c) = g.carbon {
                if !(c.intensity >= 0.0) {
                    return Err(GridError::InvalidGenerator {
                        id: g.id,
                        reason: "negative intensity".into(),
                    });
                }
            }
        }
        self.check_connected()
    }

    /// Breadth-first connectivity check from the slack bus.
    pub fn check_connected(&self) -> Result<(), GridError> {
        let n = self.buses.len();
        if n == 0 {
            return Ok(());
        }
        let mut adj = vec![Vec::new(); n];
        for br in &self.branches {
            adj[br.from_bus].push(br.to_bus);
            adj[br.to_bus].push(br.from_bus);
        }
        let start = self.slack_bus.min(n - 1);
        let mut seen = vec![false; n];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        let isolated: Vec<u32> = seen
            .iter()
            .enumerate()
            .filter(|(_, s)| !**s)
            .map(|(i, _)| self.buses[i].number)
            .collect();
        if isolated.is_empty() {
            Ok(())
        } else {
            Err(GridError::Disconnected { isolated })
        }
    }
}

/// Groups generators by the bus they connect to. Every bus gets an entry,
/// possibly empty.
pub fn bus_generator_map(network: &Network) -> Result<BTreeMap<usize, Vec<usize>>, GridError> {
    let mut map: BTreeMap<usize, Vec<usize>> =
        (0..network.buses.len()).map(|b| (b, Vec::new())).collect();
    for (idx, g) in network.generators.iter().enumerate() {
        map.get_mut(&g.bus)
            .ok_or(GridError::UnknownBus {
                generator: g.id,
                bus: g.bus,
            })?
            .push(idx);
    }
    Ok(map)
}

/// Serializes infinite bounds as `null`, since JSON has no infinity.
pub(crate) mod unbounded {
    use serde::{Deserialize, Deserializer, Serializer};

    fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub mod below {
        use super::*;

        pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
            super::serialize(v, s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
            Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
        }
    }

    pub mod above {
        use super::*;

        pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
            super::serialize(v, s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
            Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
        }
    }
}
