use axtnn::bdderr::{component_error, BddOptions, ErrorMode};
use axtnn::cgp::CgpConfig;
use axtnn::circuitgen::{gen_popcount_exact, LtgStyle, PopcountSpec};
use axtnn::complib::{Library, LibraryConfig};
use axtnn::moo::{assemble_assignment, nsga2, surrogate_area, AreaModel, AssignmentScorer, NsgaConfig};
use axtnn::netlist::Netlist;
use axtnn::tech::CellLibrary;
use axtnn::tnn::{
    infer_approx, infer_exact, ComponentAssignment, ComponentSource, Evaluator, ExactComponents, TnnModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_model(rng: &mut ChaCha8Rng, k: u32, n: usize, m: usize, c: usize) -> TnnModel {
    let mut tern = |len: usize| -> Vec<i8> {
        let mut w: Vec<i8> = (0..len).map(|_| rng.gen_range(-1..=1)).collect();
        if w.iter().all(|&x| x == 0) {
            w[0] = 1;
        }
        w
    };
    let hidden = (0..m).map(|_| tern(n)).collect();
    let output = (0..c).map(|_| tern(m)).collect();
    TnnModel::new(k, hidden, output, None).unwrap()
}

fn random_codes(rng: &mut ChaCha8Rng, k: u32, n: usize, count: usize) -> Vec<Vec<u8>> {
    (0..count).map(|_| (0..n).map(|_| rng.gen_range(0..(1u8 << k))).collect()).collect()
}

/// Class index computed by simulating the assembled classifier.
fn simulate_class(net: &Netlist, k: u32, codes: &[u8]) -> usize {
    let stim: Vec<bool> = codes.iter().flat_map(|&c| (0..k).map(move |b| (c >> b) & 1 == 1)).collect();
    net.simulate(&stim).unwrap().iter().enumerate().map(|(i, &b)| (b as usize) << i).sum()
}

fn small_library(model: &TnnModel, tech: &CellLibrary) -> Library {
    let cfg = LibraryConfig {
        cgp: CgpConfig { max_iterations: Some(400), ..Default::default() },
        restarts: 1,
        tau_points: 4,
        seed: 11,
        ..Default::default()
    };
    let (lib, log) = Library::build(&Library::keys_for_model(model), &cfg, tech).unwrap();
    assert!(log.refused.is_empty());
    lib
}

#[test]
fn exact_assembly_matches_software_inference() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 1..=3 {
        let model = random_model(&mut rng, k, 5, 4, 3);
        let exact = ExactComponents::for_model(&model, LtgStyle::TwoTree).unwrap();
        let net = assemble_assignment(&model, &ComponentAssignment::exact(&model), &exact).unwrap();
        for codes in random_codes(&mut rng, k, 5, 300) {
            assert_eq!(simulate_class(&net, k, &codes), infer_exact(&model, &codes).unwrap());
        }
    }
}

#[test]
fn approximate_assembly_matches_infer_approx_and_surrogate_is_exact() {
    let tech = CellLibrary::default_lib();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let model = random_model(&mut rng, 2, 4, 4, 3);
    let lib = small_library(&model, &tech);
    assert!(lib.entries.values().any(|v| v.len() > 1), "library holds approximations");
    let area_model = AreaModel::new(&model, &lib).unwrap();
    let bounds = area_model.bounds();
    let codes = random_codes(&mut rng, 2, 4, 200);
    for t in 0..30 {
        let genes: Vec<usize> =
            if t == 0 { vec![0; bounds.len()] } else { bounds.iter().map(|&b| rng.gen_range(0..b)).collect() };
        let a = ComponentAssignment::from_genes(&model, &genes);
        let net = assemble_assignment(&model, &a, &lib).unwrap();
        assert_eq!(surrogate_area(&model, &a, &lib, &tech).unwrap(), net.area(&tech).unwrap());
        for c in &codes {
            assert_eq!(simulate_class(&net, 2, c), infer_approx(&model, &a, &lib, c).unwrap());
        }
    }
}

#[test]
fn encoded_outputs_are_dot_product_plus_m() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let model = random_model(&mut rng, 2, 6, 5, 4);
    let codes = random_codes(&mut rng, 2, 6, 200);
    let ev = Evaluator::new(&model, codes.clone(), vec![0; codes.len()]).unwrap();
    let exact = ExactComponents::for_model(&model, LtgStyle::TwoTree).unwrap();
    let outs = ev.outputs(&ComponentAssignment::exact(&model), &exact).unwrap();
    for (c, o) in codes.iter().zip(outs) {
        let y = model.hidden_activations(c);
        for (j, row) in model.output.iter().enumerate() {
            let dot: i64 = row.iter().zip(&y).map(|(&w, &h)| w as i64 * if h { 1 } else { -1 }).sum();
            assert_eq!(o[j], dot + model.hidden_size() as i64);
        }
    }
}

#[test]
fn library_round_trips_through_disk() {
    let tech = CellLibrary::default_lib();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let model = random_model(&mut rng, 1, 5, 3, 2);
    let lib = small_library(&model, &tech);
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("lib_round_trip");
    let _ = std::fs::remove_dir_all(&dir);
    lib.save(&dir).unwrap();
    let back = Library::load(&dir, &tech).unwrap();
    assert_eq!(back.entries, lib.entries);
    assert!(back.audit(&tech).unwrap().is_empty());
    back.check_covers(&model).unwrap();
}

#[test]
fn library_components_respect_their_thresholds() {
    let tech = CellLibrary::default_lib();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let model = random_model(&mut rng, 2, 4, 3, 2);
    let lib = small_library(&model, &tech);
    for (key, list) in &lib.entries {
        assert!(list[0].is_exact(), "{key}: index 0 is exact");
        for c in list {
            let r = component_error(&list[0].netlist, &c.netlist, &key.mode(), &BddOptions::default()).unwrap();
            assert_eq!(r, c.report);
            if let (Some(m), Some(t)) = (c.provenance.metric, c.provenance.tau) {
                assert!(m.satisfied(&r, t));
            }
        }
    }
}

#[test]
fn popcount8_is_exact_on_all_inputs() {
    let net = gen_popcount_exact(PopcountSpec::new(8).unwrap()).unwrap();
    for x in 0u32..256 {
        let stim: Vec<bool> = (0..8).map(|i| (x >> i) & 1 == 1).collect();
        let v: u32 = net.simulate(&stim).unwrap().iter().enumerate().map(|(i, &b)| (b as u32) << i).sum();
        assert_eq!(v, x.count_ones());
    }
    let r = component_error(&net, &net, &ErrorMode::Popcount, &BddOptions::default()).unwrap();
    assert_eq!(r.mae(), 0.0);
}

#[test]
fn exact_only_library_yields_the_exact_design() {
    let tech = CellLibrary::default_lib();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let model = random_model(&mut rng, 2, 4, 3, 3);
    let exact = ExactComponents::for_model(&model, LtgStyle::TwoTree).unwrap();
    let codes = random_codes(&mut rng, 2, 4, 64);
    let labels = codes.iter().map(|c| infer_exact(&model, c).unwrap()).collect();
    let scorer = AssignmentScorer::new(&model, &exact, &tech, codes, labels).unwrap();
    let front = nsga2(&scorer, &NsgaConfig { population: 8, generations: 5, ..Default::default() }).unwrap();
    assert_eq!(front.len(), 1);
    assert_eq!(front[0].accuracy, 1.0);
    assert!(front[0].genes.iter().all(|&g| g == 0));
}

#[test]
fn nsga_is_seeded_and_keeps_exact_anchor() {
    let tech = CellLibrary::default_lib();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let model = random_model(&mut rng, 2, 4, 4, 3);
    let lib = small_library(&model, &tech);
    let codes = random_codes(&mut rng, 2, 4, 128);
    let labels: Vec<usize> = codes.iter().map(|c| infer_exact(&model, c).unwrap()).collect();
    let scorer = AssignmentScorer::new(&model, &lib, &tech, codes, labels).unwrap();
    let cfg = NsgaConfig { population: 16, generations: 10, seed: 1, ..Default::default() };
    let a = nsga2(&scorer, &cfg).unwrap();
    let b = nsga2(&scorer, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(axtnn::moo::is_non_dominated(&a));
    // labels are the exact predictions, so exact accuracy is 1 and never dominated
    assert!(a.iter().any(|i| i.accuracy == 1.0));
}

#[test]
fn missing_key_is_refused_before_search() {
    let tech = CellLibrary::default_lib();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let model = random_model(&mut rng, 2, 4, 3, 2);
    let empty = Library::default();
    let err = AssignmentScorer::new(&model, &empty, &tech, vec![vec![0; 4]], vec![0]).err().unwrap();
    assert!(err.to_string().contains("no components"), "{err}");
    assert!(empty.check_covers(&model).is_err());
    assert_eq!(empty.ltg_count(model.hidden_key(0)), 0);
}

