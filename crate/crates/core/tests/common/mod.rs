#![allow(dead_code)]

use carbongrid::case_io::EnrichedNetwork;
use carbongrid::case_io::{carbon_casefile, cases, fuel_dict_generation, FuelDictionary};
use carbongrid::grid::{Branch, Bus, EmissionMetric, FuelType, Generator, Network};
use carbongrid::mpp::LoadDomain;
use carbongrid::opf::CostModel;
use rand::Rng;

pub const CASE14_LOAD_BUSES: [u32; 8] = [4, 5, 9, 10, 11, 12, 13, 14];

pub fn enrich(net: &Network, metric: EmissionMetric) -> EnrichedNetwork {
    carbon_casefile(
        net,
        &fuel_dict_generation(net, FuelType::NaturalGas).with_metric(metric),
    )
    .unwrap()
}

pub fn two_bus() -> EnrichedNetwork {
    enrich(&cases::load("case2").unwrap(), EmissionMetric::Co2)
}

/// The congested 14-bus system with linear costs, CO2e factors.
pub fn congested14() -> EnrichedNetwork {
    enrich(
        &cases::load("case14_congested").unwrap(),
        EmissionMetric::Co2e,
    )
}

/// The unmodified 14-bus case (quadratic costs) with the congested system's
/// fuel assignment and parametric buses, CO2e factors.
pub fn quadratic14() -> EnrichedNetwork {
    let mut net = cases::load("case14").unwrap();
    net.set_load_buses(&CASE14_LOAD_BUSES).unwrap();
    let fuels = [
        FuelType::Anthracite,
        FuelType::NaturalGas,
        FuelType::NaturalGas,
        FuelType::CombinedCycle,
        FuelType::CombinedCycle,
    ];
    carbon_casefile(
        &net,
        &FuelDictionary::from_fuels(&fuels, EmissionMetric::Co2e),
    )
    .unwrap()
}

pub fn box_percent(net: &EnrichedNetwork, low: f64, high: f64) -> LoadDomain {
    LoadDomain::from_percent(&net.network.nominal_load(), low, high).unwrap()
}

const FUELS_118: [(FuelType, &[u32]); 3] = [
    (FuelType::Anthracite, &[10, 26, 46, 49, 59, 61, 80, 89, 100]),
    (FuelType::NaturalGas, &[25, 31, 54, 69, 103]),
    (FuelType::CombinedCycle, &[12, 65, 66, 87, 111]),
];

/// 118-bus case with the listed fuel assignment (unlisted units natural
/// gas), the 8 most loaded buses parametric, and linear costs taken as the
/// marginal cost at half capacity so that identical units are not tied.
pub fn case118() -> Option<(EnrichedNetwork, CostModel)> {
    let mut net = cases::load("case118").ok()?;
    let mut by_load: Vec<(f64, u32)> = net.buses.iter().map(|b| (b.demand, b.number)).collect();
    by_load.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let heavy: Vec<u32> = by_load.iter().take(8).map(|x| x.1).collect();
    net.set_load_buses(&heavy).unwrap();
    let mut dict = FuelDictionary::new();
    for (i, g) in net.generators.iter().enumerate() {
        let bus = net.buses[g.bus].number;
        let fuel = FUELS_118
            .iter()
            .find(|(_, buses)| buses.contains(&bus))
            .map_or(FuelType::NaturalGas, |f| f.0);
        dict.set(i, fuel, EmissionMetric::Co2e);
    }
    let enriched = carbon_casefile(&net, &dict).unwrap();
    let cost = CostModel::linear(
        net.generators
            .iter()
            .map(|g| g.cost_linear + g.cost_quadratic * g.p_max)
            .collect(),
    );
    Some((enriched, cost))
}

/// Random connected network with 2..=`max_bus` buses. Every bus carries a
/// parametric load; line limits are loose enough that the nominal load is
/// usually feasible but some lines bind.
pub fn random_network(rng: &mut impl Rng, max_bus: usize, quadratic: bool) -> Network {
    let n = rng.gen_range(2..=max_bus);
    let buses: Vec<Bus> = (0..n)
        .map(|i| Bus {
            number: i as u32 + 1,
            demand: rng.gen_range(5.0..40.0),
            is_load: true,
            is_reference: i == 0,
        })
        .collect();
    let mut branches = Vec::new();
    let edge = |from: usize, to: usize, rng: &mut dyn rand::RngCore| {
        let limit = if rng.gen_bool(0.5) {
            rng.gen_range(20.0..80.0)
        } else {
            f64::INFINITY
        };
        Branch {
            from_bus: from,
            to_bus: to,
            reactance: rng.gen_range(0.05..0.5),
            tap: 1.0,
            flow_min: -limit,
            flow_max: limit,
        }
    };
    for i in 1..n {
        let j = rng.gen_range(0..i);
        branches.push(edge(j, i, rng));
    }
    for _ in 0..rng.gen_range(0..=n / 2) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            branches.push(edge(a.min(b), a.max(b), rng));
        }
    }
    let total: f64 = buses.iter().map(|b| b.demand).sum();
    let n_gen = rng.gen_range(2..=n.max(2) + 1);
    let generators = (0..n_gen)
        .map(|id| Generator {
            id,
            bus: rng.gen_range(0..n),
            cost_linear: rng.gen_range(5.0..50.0),
            cost_quadratic: if quadratic {
                rng.gen_range(0.001..0.1)
            } else {
                0.0
            },
            p_min: 0.0,
            p_max: 1.5 * total / n_gen as f64 + rng.gen_range(0.0..50.0),
            fuel_label: None,
            carbon: None,
        })
        .collect();
    Network {
        name: "random".into(),
        base_mva: 100.0,
        buses,
        branches,
        generators,
        slack_bus: 0,
    }
}

pub fn random_enriched(rng: &mut impl Rng, max_bus: usize, quadratic: bool) -> EnrichedNetwork {
    let net = random_network(rng, max_bus, quadratic);
    let fuels: Vec<FuelType> = (0..net.n_generators())
        .map(|_| FuelType::ALL[rng.gen_range(0..FuelType::ALL.len())])
        .collect();
    carbon_casefile(
        &net,
        &FuelDictionary::from_fuels(&fuels, EmissionMetric::Co2),
    )
    .unwrap()
}
