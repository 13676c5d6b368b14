mod common;

use carbongrid::grid::build_isf_matrix;
use carbongrid::metrics::{emission_report, taxed_cost_model, CarbonTax};
use carbongrid::mpp::{explore_regions_with, read_table, write_table, ExploreOptions, LoadDomain};
use carbongrid::opf::{build_canonical, CostModel, Dcopf};
use carbongrid::sensitivity::LmceEngine;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Cheapest feasible vertex of the canonical LP, by brute force over all
/// square row subsets that contain the balance equality.
fn vertex_oracle(dcopf: &Dcopf, load: &[f64]) -> Option<f64> {
    let canon = &dcopf.canonical;
    let rhs = canon.rhs(load);
    let n = canon.n_gen;
    let finite: Vec<usize> = (2..canon.n_rows())
        .filter(|&j| rhs[j].is_finite())
        .collect();
    let mut best: Option<f64> = None;
    let mut pick = vec![0usize; n - 1];
    fn next(pick: &mut [usize], m: usize) -> bool {
        let k = pick.len();
        for i in (0..k).rev() {
            if pick[i] < m - k + i {
                pick[i] += 1;
                for j in i + 1..k {
                    pick[j] = pick[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
    for (i, p) in pick.iter_mut().enumerate() {
        *p = i;
    }
    if finite.len() < n - 1 {
        return None;
    }
    loop {
        let rows: Vec<usize> = std::iter::once(0)
            .chain(pick.iter().map(|&i| finite[i]))
            .collect();
        let a = DMatrix::from_fn(n, n, |i, k| canon.a[(rows[i], k)]);
        let b = DVector::from_iterator(n, rows.iter().map(|&j| rhs[j]));
        if let Some(x) = a.lu().solve(&b) {
            let act = &canon.a * &x;
            let feasible = (0..canon.n_rows())
                .all(|j| !rhs[j].is_finite() || act[j] <= rhs[j] + 1e-7 * rhs[j].abs().max(1.0))
                && (act[0] - rhs[0]).abs() <= 1e-7 * rhs[0].abs().max(1.0);
            if feasible && x.iter().all(|v| v.is_finite()) {
                let cost = dcopf.cost.evaluate(x.as_slice());
                best = Some(best.map_or(cost, |b: f64| b.min(cost)));
            }
        }
        if n == 1 || !next(&mut pick, finite.len()) {
            break;
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn isf_flows_satisfy_kirchhoff(seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = common::random_network(&mut r, 14, false);
        let isf = build_isf_matrix(&net).unwrap();
        prop_assert!(isf.entries.column(net.slack_bus).iter().all(|&v| v == 0.0));
        let mut inj: Vec<f64> = (0..net.n_buses()).map(|_| r.gen_range(-50.0..50.0)).collect();
        let total: f64 = inj.iter().sum();
        inj[net.slack_bus] -= total;
        let flows = isf.flows(&inj);
        let mut net_out = vec![0.0; net.n_buses()];
        for (b, f) in net.branches.iter().zip(&flows) {
            net_out[b.from_bus] += f;
            net_out[b.to_bus] -= f;
        }
        for (o, i) in net_out.iter().zip(&inj) {
            prop_assert!((o - i).abs() <= 1e-8 * 50.0 * net.n_buses() as f64);
        }
    }

    #[test]
    fn jacobian_columns_sum_to_one(seed in any::<u64>(), quadratic in any::<bool>()) {
        let mut r = rng(seed);
        let net = common::random_enriched(&mut r, 14, quadratic);
        let engine = LmceEngine::new(&net, CostModel::from_network(&net.network).unwrap()).unwrap();
        if let Ok(res) = engine.exact(&net.network.nominal_load()) {
            for s in res.jacobian.row_sum().iter() {
                prop_assert!((s - 1.0).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn solver_matches_vertex_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = common::random_network(&mut r, 3, false);
        let dcopf = Dcopf::new(&net, CostModel::from_network(&net).unwrap()).unwrap();
        let load = net.nominal_load();
        let sol = dcopf.solve(&load).unwrap();
        match vertex_oracle(&dcopf, &load) {
            Some(best) => {
                prop_assert!(sol.is_optimal());
                prop_assert!((sol.objective - best).abs() <= 1e-6 * best.abs().max(1.0), "{} vs {}", sol.objective, best);
            }
            None => prop_assert!(!sol.is_optimal()),
        }
    }

    #[test]
    fn strong_duality_and_stationarity(seed in any::<u64>(), quadratic in any::<bool>()) {
        let mut r = rng(seed);
        let net = common::random_network(&mut r, 10, quadratic);
        let dcopf = Dcopf::new(&net, CostModel::from_network(&net).unwrap()).unwrap();
        let load = net.nominal_load();
        let sol = dcopf.solve(&load).unwrap();
        if sol.is_optimal() {
            let gap = (sol.objective - dcopf.dual_objective(&sol, &load)).abs();
            prop_assert!(gap <= 1e-6 * sol.objective.abs().max(1.0), "gap {}", gap);
            prop_assert!(dcopf.stationarity_residual(&sol) <= 1e-7);
        }
    }

    #[test]
    fn lmp_matches_dual_prices(seed in any::<u64>(), quadratic in any::<bool>()) {
        let mut r = rng(seed);
        let net = common::random_enriched(&mut r, 10, quadratic);
        let engine = LmceEngine::new(&net, CostModel::from_network(&net.network).unwrap()).unwrap();
        if let Ok(lmp) = engine.lmp(&net.network.nominal_load()) {
            if !lmp.at_boundary {
                for (a, b) in lmp.values.iter().zip(&lmp.from_duals) {
                    prop_assert!((a - b).abs() <= 1e-7 * b.abs().max(1.0), "{} vs {}", a, b);
                }
            }
        }
    }

    #[test]
    fn emissions_are_linear_and_conserved(seed in any::<u64>(), scale in 0.0f64..10.0) {
        let mut r = rng(seed);
        let net = common::random_enriched(&mut r, 14, false);
        let dispatch: Vec<f64> = net.network.generators.iter().map(|g| r.gen_range(0.0..g.p_max)).collect();
        let load = net.network.nominal_load();
        let rep = emission_report(&net, &dispatch, &load).unwrap();
        let expected: f64 = net.intensities().iter().zip(&dispatch).map(|(e, p)| e * p).sum();
        prop_assert!((rep.total - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        let bus_sum: f64 = rep.per_bus.values().sum();
        prop_assert!((bus_sum - rep.total).abs() <= 1e-12 * rep.total.abs().max(1.0));
        let scaled: Vec<f64> = dispatch.iter().map(|p| p * scale).collect();
        let rep2 = emission_report(&net, &scaled, &load).unwrap();
        prop_assert!((rep2.total - scale * rep.total).abs() <= 1e-12 * (scale * rep.total).abs().max(1.0));
        if let Some(ace) = rep.ace {
            prop_assert!((ace * rep.total_load - rep.total).abs() <= 1e-12 * rep.total.abs().max(1.0));
        }
    }

    #[test]
    fn emissions_fall_as_tax_rises(seed in any::<u64>(), quadratic in any::<bool>()) {
        let mut r = rng(seed);
        let net = common::random_enriched(&mut r, 8, quadratic);
        let base = CostModel::from_network(&net.network).unwrap();
        let load = net.network.nominal_load();
        let mut last = f64::INFINITY;
        for tau in [0.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 1000.0] {
            let cost = taxed_cost_model(&base, &net, CarbonTax::new(tau).unwrap()).unwrap();
            let sol = Dcopf::new(&net.network, cost).unwrap().solve(&load).unwrap();
            if !sol.is_optimal() {
                return Ok(());
            }
            let e = emission_report(&net, &sol.p_gen, &load).unwrap().total;
            prop_assert!(e <= last + 1e-6 * last.abs().max(1.0), "tau {}: {} > {}", tau, e, last);
            last = e;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn regions_cover_and_agree_with_solver(seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = common::random_enriched(&mut r, 5, false);
        let cost = CostModel::from_network(&net.network).unwrap();
        let dcopf = Dcopf::new(&net.network, cost.clone()).unwrap();
        let nominal = net.network.nominal_load();
        let domain = LoadDomain::from_percent(&nominal, 70.0, 130.0).unwrap();
        if !dcopf.solve(&nominal).unwrap().is_optimal() {
            return Ok(());
        }
        let opts = ExploreOptions { coverage_samples: 300, ..Default::default() };
        let (table, _) = explore_regions_with(&net, &cost, &domain, &nominal, &opts).unwrap();
        prop_assert!(!table.is_empty());
        prop_assert!(table.check_precomputed());
        prop_assert_eq!(&read_table(&write_table(&table)).unwrap(), &table);
        let canon = build_canonical(&net.network).unwrap();
        for _ in 0..30 {
            let x = domain.sample(&mut r);
            let sol = dcopf.solve(&x).unwrap();
            match table.locate_region(&x) {
                Ok(k) => {
                    prop_assert!(sol.is_optimal());
                    let law = table.regions[k].law.dispatch(&x);
                    let act = &canon.a * &law;
                    let rhs = canon.rhs(&x);
                    for j in 0..canon.n_rows() {
                        if rhs[j].is_finite() {
                            prop_assert!(act[j] <= rhs[j] + 1e-6 * rhs[j].abs().max(1.0));
                        }
                    }
                    let c = cost.evaluate(law.as_slice());
                    prop_assert!((c - sol.objective).abs() <= 1e-6 * sol.objective.abs().max(1.0));
                }
                Err(_) => prop_assert!(!sol.is_optimal(), "feasible load {:?} not covered", x),
            }
        }
    }
}
