//! Emission accounting for a dispatch and the carbon-tax cost term.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::case_io::EnrichedNetwork;
use crate::opf::CostModel;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("{what} has {got} entries, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error(
        "dispatch of generator {index} is {value} MW; dispatch must be finite and non-negative"
    )]
    InvalidDispatch { index: usize, value: f64 },
    #[error("carbon tax rate must be finite and non-negative, got {0}")]
    NegativeTax(f64),
}

/// Emission rates of one dispatch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmissionReport {
    /// t/h per generator
    pub per_generator: Vec<f64>,
    /// t/h keyed by external bus number, every bus listed
    pub per_bus: BTreeMap<u32, f64>,
    /// t/h
    pub total: f64,
    /// t/MWh, `None` when total demand is zero
    pub ace: Option<f64>,
    /// Total demand served, parametric plus fixed, MW.
    pub total_load: f64,
}

fn check_dispatch(net: &EnrichedNetwork, dispatch: &[f64]) -> Result<(), MetricsError> {
    let expected = net.network.n_generators();
    if dispatch.len() != expected {
        return Err(MetricsError::Dimension {
            what: "dispatch",
            expected,
            got: dispatch.len(),
        });
    }
    match dispatch.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
        Some(index) => Err(MetricsError::InvalidDispatch {
            index,
            value: dispatch[index],
        }),
        None => Ok(()),
    }
}

pub fn emission_report(
    net: &EnrichedNetwork,
    dispatch: &[f64],
    load: &[f64],
) -> Result<EmissionReport, MetricsError> {
    check_dispatch(net, dispatch)?;
    let network = &net.network;
    if load.len() != network.n_loads() {
        return Err(MetricsError::Dimension {
            what: "load",
            expected: network.n_loads(),
            got: load.len(),
        });
    }
    let per_generator: Vec<f64> = net
        .intensities()
        .iter()
        .zip(dispatch)
        .map(|(e, p)| e * p)
        .collect();
    let mut per_bus: BTreeMap<u32, f64> = network.buses.iter().map(|b| (b.number, 0.0)).collect();
    for (g, r) in network.generators.iter().zip(&per_generator) {
        *per_bus
            .get_mut(&network.buses[g.bus].number)
            .expect("generator bus exists") += r;
    }
    let total: f64 = per_generator.iter().sum();
    let total_load = load.iter().sum::<f64>() + network.total_fixed_demand();
    let ace = (total_load > 0.0).then(|| total / total_load);
    Ok(EmissionReport {
        per_generator,
        per_bus,
        total,
        ace,
        total_load,
    })
}

/// Carbon tax rate, currency per ton.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CarbonTax {
    rate: f64,
}

impl CarbonTax {
    pub fn new(rate: f64) -> Result<Self, MetricsError> {
        if rate.is_finite() && rate >= 0.0 {
            Ok(Self { rate })
        } else {
            Err(MetricsError::NegativeTax(rate))
        }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// Tax paid by `dispatch`, currency/h.
pub fn carbon_cost(
    net: &EnrichedNetwork,
    dispatch: &[f64],
    tax: CarbonTax,
) -> Result<f64, MetricsError> {
    check_dispatch(net, dispatch)?;
    let total: f64 = net
        .intensities()
        .iter()
        .zip(dispatch)
        .map(|(e, p)| e * p)
        .sum();
    Ok(tax.rate * total)
}

/// `cost` with each linear coefficient raised by `τ·e_g`.
pub fn taxed_cost_model(
    cost: &CostModel,
    net: &EnrichedNetwork,
    tax: CarbonTax,
) -> Result<CostModel, MetricsError> {
    let intensities = net.intensities();
    if cost.len() != intensities.len() {
        return Err(MetricsError::Dimension {
            what: "cost model",
            expected: intensities.len(),
            got: cost.len(),
        });
    }
    let mut taxed = cost.clone();
    for (c, e) in taxed.linear.iter_mut().zip(&intensities) {
        *c += tax.rate * e;
    }
    Ok(taxed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_io::{
        carbon_casefile, cases, fuel_dict_generation, parse_matpower_case, FuelDictionary,
    };
    use crate::grid::{EmissionMetric, FuelType};
    use crate::opf::solve_dcopf;

    fn two_bus() -> EnrichedNetwork {
        let net = cases::load("case2").unwrap();
        carbon_casefile(&net, &fuel_dict_generation(&net, FuelType::NaturalGas)).unwrap()
    }

    #[test]
    fn two_bus_report() {
        let net = two_bus();
        let r = emission_report(&net, &[30.0, 20.0], &[50.0]).unwrap();
        assert!((r.per_generator[0] - 27.285).abs() < 1e-12);
        assert!((r.per_generator[1] - 7.242).abs() < 1e-12);
        assert!((r.total - 34.527).abs() < 1e-12);
        assert!((r.ace.unwrap() - 0.69054).abs() < 1e-12);
        assert_eq!(r.per_bus.values().sum::<f64>(), r.total);
        assert_eq!(r.total_load, 50.0);
    }

    #[test]
    fn zero_load_leaves_ace_undefined() {
        let r = emission_report(&two_bus(), &[0.0, 0.0], &[0.0]).unwrap();
        assert_eq!(r.total, 0.0);
        assert_eq!(r.ace, None);
        assert!(r.per_bus.values().all(|&v| v == 0.0));
    }

    #[test]
    fn renewable_fleet_emits_nothing() {
        let net = cases::load("case2").unwrap();
        let enriched = carbon_casefile(
            &net,
            &FuelDictionary::from_fuels(&[FuelType::Wind, FuelType::Wind], EmissionMetric::Co2),
        )
        .unwrap();
        let r = emission_report(&enriched, &[60.0, 40.0], &[100.0]).unwrap();
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn rejects_bad_dispatch() {
        let net = two_bus();
        assert!(matches!(
            emission_report(&net, &[1.0], &[1.0]),
            Err(MetricsError::Dimension { .. })
        ));
        assert!(matches!(
            emission_report(&net, &[-1.0, 0.0], &[1.0]),
            Err(MetricsError::InvalidDispatch { index: 0, .. })
        ));
        assert!(CarbonTax::new(-1.0).is_err());
    }

    #[test]
    fn tax_cost() {
        let net = two_bus();
        assert_eq!(
            carbon_cost(&net, &[30.0, 20.0], CarbonTax::new(0.0).unwrap()).unwrap(),
            0.0
        );
        let c = carbon_cost(&net, &[30.0, 20.0], CarbonTax::new(50.0).unwrap()).unwrap();
        assert!((c - 1726.35).abs() < 1e-9);
    }

    #[test]
    fn taxed_costs_flip_merit_order() {
        let net = two_bus();
        let base = CostModel::from_network(&net.network).unwrap();
        assert_eq!(
            taxed_cost_model(&base, &net, CarbonTax::new(0.0).unwrap()).unwrap(),
            base
        );
        let taxed = taxed_cost_model(&base, &net, CarbonTax::new(50.0).unwrap()).unwrap();
        assert!((taxed.linear[0] - 55.475).abs() < 1e-12);
        assert!((taxed.linear[1] - 38.105).abs() < 1e-12);
        let sol = solve_dcopf(&net.network, &[20.0], &taxed).unwrap();
        assert!((sol.p_gen[0]).abs() < 1e-9 && (sol.p_gen[1] - 20.0).abs() < 1e-9);
    }

    const THREE_GEN: &str = "
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0 0 0 0 1 1 0 0 1 1.1 0.9;
    2 1 90 0 0 0 1 1 0 0 1 1.1 0.9;
];
mpc.gen = [
    1 0 0 0 0 1 100 1 50 0;
    1 0 0 0 0 1 100 1 50 0;
    1 0 0 0 0 1 100 1 50 0;
];
mpc.branch = [
    1 2 0 0.1 0 0 0 0 0 0 1 -360 360;
];
mpc.gencost = [
    2 0 0 2 5 0;
    2 0 0 2 10 0;
    2 0 0 2 20 0;
];
mpc.genfuel = {'ANT'; 'NG'; 'WIND'};
";

    #[test]
    fn large_tax_dispatches_by_emissions() {
        let network = parse_matpower_case(THREE_GEN).unwrap();
        let net = carbon_casefile(
            &network,
            &fuel_dict_generation(&network, FuelType::NaturalGas),
        )
        .unwrap();
        let base = CostModel::from_network(&network).unwrap();
        let sol = solve_dcopf(&network, &[90.0], &base).unwrap();
        assert_eq!(sol.p_gen, vec![50.0, 40.0, 0.0]);
        let taxed = taxed_cost_model(&base, &net, CarbonTax::new(1000.0).unwrap()).unwrap();
        let sol = solve_dcopf(&network, &[90.0], &taxed).unwrap();
        assert!((sol.p_gen[0]).abs() < 1e-9);
        assert!((sol.p_gen[1] - 40.0).abs() < 1e-9);
        assert!((sol.p_gen[2] - 50.0).abs() < 1e-9);
    }
}
