use std::collections::BTreeSet;

use num_rational::Ratio;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use utxo_lab::codec::TraceFile;
use utxo_lab::ledger::{AcceptAll, Slot};
use utxo_lab::props::{
    build_tx_poset, canonical_presentation, check_disjointness, enumerate_valid_permutations,
    AnnotatedRun, TxPoset,
};
use utxo_lab::trace::{
    generate_valid_traces, head_length_for_radius, random_genesis, ultra_distance, validate_lifted,
    verify_monotone, InitialConditions, RandomSpender, SlotRange, TracePrefix,
    TrivialUpdateMonitor, Validity,
};
use utxo_lab::Exec;

fn seq() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..3, 1..10)
}

fn dag() -> impl Strategy<Value = Vec<BTreeSet<usize>>> {
    (1usize..8).prop_flat_map(|n| {
        (0..n)
            .map(|i| {
                prop::collection::btree_set(0..i.max(1), 0..=i.min(3))
                    .prop_map(move |s| s.into_iter().filter(|&j| j < i).collect::<BTreeSet<_>>())
            })
            .collect::<Vec<_>>()
    })
}

fn tp(v: Vec<u8>) -> TracePrefix<u8> {
    TracePrefix::new(v).unwrap()
}

fn init(seed: u64) -> InitialConditions {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    InitialConditions::new(
        vec![random_genesis(&mut rng, 4, 0)],
        SlotRange::new(Slot(0), Slot(3)).unwrap(),
    )
}

proptest! {
    #[test]
    fn distance_is_symmetric(a in seq(), b in seq()) {
        let (x, y) = (tp(a), tp(b));
        prop_assert_eq!(ultra_distance(&x, &y), ultra_distance(&y, &x));
    }

    #[test]
    fn strong_triangle_on_upper_bounds(a in seq(), b in seq(), c in seq()) {
        let (x, y, z) = (tp(a), tp(b), tp(c));
        let (xy, yz, xz) = (ultra_distance(&x, &y), ultra_distance(&y, &z), ultra_distance(&x, &z));
        if let (Some(p), Some(q), Some(r)) = (xy.exact(), yz.exact(), xz.exact()) {
            prop_assert!(r <= p.max(q));
        }
    }

    #[test]
    fn head_length_matches_float(p in 1u64..1000, q in 1u64..1000) {
        let n = head_length_for_radius(Ratio::new(p, q)).unwrap();
        let f = (-(p as f64 / q as f64).log2()).floor().max(0.0) as usize;
        // Exact powers of two can land either side of the float floor.
        let exact = (q % p == 0) && (q / p).is_power_of_two();
        prop_assert!(n == f || exact);
        prop_assert!((p as u128) << n <= q as u128 || n == 0);
    }

    #[test]
    fn trivial_update_monitor_is_monotone(xs in prop::collection::vec(seq(), 1..6)) {
        let samples: Vec<_> = xs.into_iter().map(tp).collect();
        prop_assert!(verify_monotone(&TrivialUpdateMonitor, &samples).is_ok());
    }

    #[test]
    fn canonical_presentation_is_a_linear_extension(deps in dag()) {
        let p = TxPoset::from_deps(deps).unwrap();
        let c = canonical_presentation(&p);
        prop_assert!(p.is_linear_extension(&c));
        let levels: Vec<usize> = c.iter().map(|&i| p.level(i)).collect();
        prop_assert!(levels.windows(2).all(|w| w[0] <= w[1]));
        let en = enumerate_valid_permutations(&p, 200);
        prop_assert!(en.orders.iter().all(|o| p.is_linear_extension(o)));
        prop_assert!(en.orders.contains(&c));
    }

    #[test]
    fn generated_traces_round_trip_and_validate(seed in any::<u64>(), depth in 1usize..8) {
        let i = init(seed);
        let gen = RandomSpender::default();
        let seq = generate_valid_traces(&i, &gen, &AcceptAll, depth, 3, seed, Exec::Sequential);
        let par = generate_valid_traces(&i, &gen, &AcceptAll, depth, 3, seed, Exec::Parallel);
        prop_assert_eq!(&seq, &par);
        for g in seq {
            prop_assert_eq!(validate_lifted(&i, &AcceptAll, &g.trace).unwrap(), Validity::Valid);
            let f = TraceFile { init: i.clone(), trace: g.trace.clone() };
            prop_assert_eq!(TraceFile::from_json(&f.to_json()).unwrap(), f);
            let run = AnnotatedRun::from_trace(&g.trace).unwrap();
            prop_assert!(check_disjointness(&run).is_ok());
            prop_assert!(build_tx_poset(&run).is_ok());
        }
    }
}
