use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hexcircuit::circuitry::{decode, HexLayout};
use hexcircuit::simulator::{simulate, Evaluator, HexInstance, SimulatorConfig};
use hexcircuit::solvers::{moves, Objective, Problem};
use hexcircuit::thermo::PropertyTable;

fn random_design(per_row: usize, seed: u64, orientation: u64) -> hexcircuit::circuitry::CircuitryDesign {
    let ev = Evaluator::new(
        HexInstance::reference(per_row).unwrap(),
        SimulatorConfig::default(),
        Arc::new(PropertyTable::embedded()),
    );
    let p = Problem::new(Arc::new(ev), Objective::HeatCapacity).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = moves::random_feasible(HexLayout::two_row(per_row).unwrap(), p.free_indices(), &mut rng);
    let d = decode(&x).unwrap();
    d.orientation(orientation % d.orientation_count()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energy_balance_and_monotone_duty(
        per_row in 2usize..=9,
        seed in any::<u64>(),
        orientation in any::<u64>(),
        air in 6.0f64..45.0,
        flow in 0.005f64..0.05,
    ) {
        let props = PropertyTable::embedded();
        let cfg = SimulatorConfig::default();
        let design = random_design(per_row, seed, orientation);
        let mut inst = HexInstance::reference(per_row).unwrap();
        inst.refrigerant_mass_flow_kg_s = flow;
        inst.air_inlet_temperature_c = air;
        let r = simulate(&design, &inst, &cfg, &props).unwrap();
        prop_assert!(r.energy_imbalance() <= 1e-3);
        prop_assert!(r.q_w > 0.0);
        prop_assert!(r.delta_p_kpa > 0.0);
        // The refrigerant cannot leave warmer than the incoming air.
        for c in &r.per_circuit {
            prop_assert!(c.outlet.temperature <= air + 1e-9);
        }
        inst.air_inlet_temperature_c = air + 2.0;
        let warmer = simulate(&design, &inst, &cfg, &props).unwrap();
        prop_assert!(warmer.q_w >= r.q_w);
    }
}

#[test]
fn segment_count_converged() {
    let props = PropertyTable::embedded();
    let inst = HexInstance::reference(4).unwrap();
    let coarse = SimulatorConfig::default();
    let fine = SimulatorConfig {
        segments_per_tube: 40,
        ..SimulatorConfig::default()
    };
    for seed in 0..10 {
        let d = random_design(4, seed, seed);
        let a = simulate(&d, &inst, &coarse, &props).unwrap().q_w;
        let b = simulate(&d, &inst, &fine, &props).unwrap().q_w;
        assert!((a - b).abs() / b < 0.005, "{a} vs {b}");
    }
}

#[test]
fn evaluator_is_shareable_across_threads() {
    let ev = Arc::new(Evaluator::new(
        HexInstance::reference(4).unwrap(),
        SimulatorConfig::default(),
        Arc::new(PropertyTable::embedded()),
    ));
    let vectors: Vec<_> = hexcircuit::enumeration::enumerate(HexLayout::two_row(4).unwrap(), Default::default())
        .unwrap()
        .collect();
    std::thread::scope(|s| {
        for k in 0..4 {
            let ev = Arc::clone(&ev);
            let vectors = &vectors;
            s.spawn(move || {
                for x in vectors.iter().skip(k * 10) {
                    ev.evaluate(x, 0).unwrap();
                }
            });
        }
    });
    assert_eq!(ev.calls(), vectors.len());
    let log = ev.log_records();
    assert_eq!(log.iter().filter(|r| !r.cache_hit).count(), ev.calls());
}
