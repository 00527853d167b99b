use axtnn::bdderr::{brute_force_error, component_error, BddOptions, ErrorMode};
use axtnn::cgp::Genome;
use axtnn::circuitgen::{gen_ltg_exact, gen_popcount_exact, LtgSpec, LtgStyle, PopcountSpec};
use axtnn::moo::{inverted_hypervolume, is_non_dominated, non_dominated_sort, Individual};
use axtnn::netlist::Netlist;
use axtnn::varsim::{perturb_thresholds, quantize_with_thresholds};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mutant(exact: &Netlist, mutations: usize, seed: u64) -> Netlist {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Genome::from_netlist(exact, &mut rng);
    for _ in 0..mutations {
        g = g.mutate(1 + mutations % 5, &mut rng);
    }
    let outs: Vec<String> = exact.outputs().iter().map(|o| o.name.clone()).collect();
    g.decode(exact.input_names(), &outs).unwrap()
}

fn ternary() -> impl Strategy<Value = i8> {
    prop_oneof![Just(-1i8), Just(0i8), Just(1i8)]
}

fn ltg_spec(max_bits: usize) -> impl Strategy<Value = LtgSpec> {
    (1u32..=3, prop::collection::vec(ternary(), 1..=7))
        .prop_filter("bit budget", move |(k, w)| w.iter().filter(|&&x| x != 0).count() * *k as usize <= max_bits)
        .prop_filter("some weight", |(_, w)| w.iter().any(|&x| x != 0))
        .prop_map(|(k, w)| LtgSpec::new(w, k).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn bdd_equals_enumeration_ltg(spec in ltg_spec(14), muts in 0usize..40, seed in any::<u64>()) {
        let exact = gen_ltg_exact(&spec, LtgStyle::TwoTree).unwrap();
        let approx = mutant(&exact, muts, seed);
        let mode = ErrorMode::Ltg(spec);
        let bdd = component_error(&exact, &approx, &mode, &BddOptions::default()).unwrap();
        let oracle = brute_force_error(&exact, &approx, &mode).unwrap();
        prop_assert_eq!(bdd, oracle);
    }

    #[test]
    fn bdd_equals_enumeration_popcount(m in 2usize..=12, muts in 0usize..40, seed in any::<u64>()) {
        let exact = gen_popcount_exact(PopcountSpec::new(m).unwrap()).unwrap();
        let approx = mutant(&exact, muts, seed);
        let bdd = component_error(&exact, &approx, &ErrorMode::Popcount, &BddOptions::default()).unwrap();
        let oracle = brute_force_error(&exact, &approx, &ErrorMode::Popcount).unwrap();
        prop_assert_eq!(bdd, oracle);
    }

    #[test]
    fn ltg_styles_agree_with_weighted_sum(spec in ltg_spec(12)) {
        let two = gen_ltg_exact(&spec, LtgStyle::TwoTree).unwrap();
        let one = gen_ltg_exact(&spec, LtgStyle::OneTree).unwrap();
        let n = two.num_inputs();
        for x in 0u64..(1 << n) {
            let stim: Vec<bool> = (0..n).map(|i| (x >> i) & 1 == 1).collect();
            let want = spec.weighted_sum(&stim) >= 0;
            prop_assert_eq!(two.simulate(&stim).unwrap(), vec![want]);
            prop_assert_eq!(one.simulate(&stim).unwrap(), vec![want]);
        }
    }

    #[test]
    fn first_front_is_non_dominated_and_covers_rest(
        pts in prop::collection::vec((0.0f64..1.0, 0.0f64..10.0), 1..40)
    ) {
        let pop: Vec<Individual> = pts.iter().map(|&(a, r)| Individual { genes: vec![], accuracy: a, area: r }).collect();
        let fronts = non_dominated_sort(&pop);
        prop_assert_eq!(fronts.iter().map(Vec::len).sum::<usize>(), pop.len());
        let first: Vec<Individual> = fronts[0].iter().map(|&i| pop[i].clone()).collect();
        prop_assert!(is_non_dominated(&first));
        for f in &fronts[1..] {
            for &i in f {
                prop_assert!(first.iter().any(|p| p.dominates(&pop[i])));
            }
        }
    }

    #[test]
    fn hypervolume_ignores_dominated_points(
        pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..20),
        pick in any::<prop::sample::Index>(),
        shrink in (0.0f64..=1.0, 0.0f64..=1.0),
    ) {
        let base = inverted_hypervolume(&pts).unwrap();
        let p = pts[pick.index(pts.len())];
        let mut more = pts.clone();
        more.push((p.0 * shrink.0, p.1 * shrink.1));
        prop_assert!((inverted_hypervolume(&more).unwrap() - base).abs() < 1e-12);
        prop_assert!(base <= 1.0 + 1e-12);
    }

    #[test]
    fn perturbed_quantizer_is_monotone(k in 1u32..=4, sigma in 0.0f64..0.3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = perturb_thresholds(k, sigma, &mut rng).unwrap();
        prop_assert_eq!(t.len(), (1usize << k) - 1);
        let mut last = 0;
        for i in 0..=500 {
            let c = quantize_with_thresholds(i as f64 / 500.0, &t);
            prop_assert!(c >= last);
            prop_assert!((c as usize) < (1 << k));
            last = c;
        }
    }
}

#[test]
fn ten_thousand_mutations_stay_decodable() {
    let seeds = [
        gen_popcount_exact(PopcountSpec::new(8).unwrap()).unwrap(),
        gen_ltg_exact(&LtgSpec::new(vec![1, -1, 1, 0, -1], 2).unwrap(), LtgStyle::TwoTree).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for exact in &seeds {
        let outs: Vec<String> = exact.outputs().iter().map(|o| o.name.clone()).collect();
        let mut g = Genome::from_netlist(exact, &mut rng);
        for _ in 0..10_000 {
            g = g.mutate(1 + (g.num_genes() / 100), &mut rng);
            assert!(g.is_valid());
            let net = g.decode(exact.input_names(), &outs).unwrap();
            assert_eq!(net.num_inputs(), exact.num_inputs());
            assert_eq!(net.num_outputs(), exact.num_outputs());
        }
    }
}
