use proptest::prelude::*;
use swarmtune::plant::{
    fly_primitive, map_gains, synthetic_cost, GainMap, PlantParams, DIVERGED_COST,
};
use swarmtune::swarm::{assign_evaluations, Avg, Dist, DistributionStrategy};
use swarmtune::transport::decode;
use swarmtune::tuner::{
    bootstrap, compute_schedule, eql_minimize, EqlOptions, GainPoint, Interval, OracleError,
    SlotTiming,
};

fn gain() -> impl Strategy<Value = GainPoint> {
    (0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(k_p, k_d)| GainPoint { k_p, k_d })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn minimizer_stays_in_every_interval(c in 0.0..=1.0f64, lo in 0.0..0.5f64, steps in 1usize..12) {
        let hi = 1.0;
        prop_assume!(c >= lo);
        let mut oracle = |ps: &[f64]| -> Result<Vec<f64>, OracleError> { Ok(ps.iter().map(|p| (p - c).abs()).collect()) };
        let (_, trace) = eql_minimize(&mut oracle, Interval::new(lo, hi).unwrap(), steps, EqlOptions::default()).unwrap();
        for iv in trace.intervals() {
            prop_assert!(iv.contains(c), "{c} escaped {iv:?}");
        }
        prop_assert_eq!(trace.evaluations, 2 + 2 * steps);
    }

    #[test]
    fn reuse_keeps_the_tolerance(c in 0.0..=1.0f64) {
        let mut oracle = |ps: &[f64]| -> Result<Vec<f64>, OracleError> { Ok(ps.iter().map(|p| (p - c).powi(2)).collect()) };
        let (est, trace) = eql_minimize(&mut oracle, Interval::UNIT, 6, EqlOptions { reuse: true }).unwrap();
        prop_assert!((est - c).abs() <= 0.125);
        prop_assert!(trace.evaluations <= 14);
    }

    #[test]
    fn bootstrap_finds_bowl_minimum(center in gain()) {
        let plan = compute_schedule(0.125, 2, SlotTiming::default()).unwrap();
        let mut oracle = |ps: &[GainPoint]| -> Result<Vec<f64>, OracleError> {
            ps.iter().map(|&p| synthetic_cost("quadratic-bowl", center, p).map_err(Into::into)).collect()
        };
        let (g, trace) = bootstrap(&mut oracle, 0.2, &plan, EqlOptions::default()).unwrap();
        prop_assert!((g.k_p - center.k_p).abs() <= 0.125);
        prop_assert!((g.k_d - center.k_d).abs() <= 0.125);
        prop_assert!(trace.evaluations <= plan.total_evals());
    }

    #[test]
    fn flights_are_pure_and_non_negative(p in gain(), seed in any::<u64>(), noise in 0.0..0.1f64, payload in 0.0..2.0f64) {
        let plant = PlantParams { noise_sigma: noise, m_payload: payload, ..PlantParams::default() };
        let a = fly_primitive(p, &plant, &GainMap::default(), seed);
        let b = fly_primitive(p, &plant, &GainMap::default(), seed);
        prop_assert_eq!(a, b);
        prop_assert!(a.cost >= 0.0 && a.cost.is_finite());
        prop_assert!(a.diverged == (a.cost == DIVERGED_COST));
        prop_assert_eq!(a.samples, if a.diverged { a.samples } else { 800 });
    }

    #[test]
    fn gain_map_is_affine_and_monotone(p in gain(), q in gain()) {
        let gm = GainMap::default();
        let (a, b) = (map_gains(p, &gm), map_gains(q, &gm));
        if p.k_p <= q.k_p { prop_assert!(a.kp <= b.kp); }
        if p.k_d <= q.k_d { prop_assert!(a.kd <= b.kd); }
        prop_assert!(a.kp >= gm.kp_range.0 && a.kp <= gm.kp_range.1);
    }

    #[test]
    fn strategies_conserve_probes(batch in 1usize..10, n in 2usize..9) {
        let probes: Vec<GainPoint> = (0..batch).map(|i| GainPoint { k_p: i as f64 / 10.0, k_d: 0.5 }).collect();
        for s in [&Avg as &dyn DistributionStrategy, &Dist] {
            let slots = assign_evaluations(s, &probes, n).unwrap();
            let mut seen = vec![0; batch];
            for slot in &slots {
                prop_assert!(slot.contains_key(&1), "master idle in a slot");
                prop_assert!(slot.keys().all(|&m| m >= 1 && m as usize <= n));
                let mut distinct: Vec<usize> = slot.values().map(|g| (g.k_p * 10.0).round() as usize).collect();
                distinct.sort_unstable();
                distinct.dedup();
                for i in distinct { seen[i] += 1; }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn decoder_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..120)) {
        let _ = decode(&bytes);
    }
}
