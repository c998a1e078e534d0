use jtsmc::graph::{
    count_junction_trees, count_trees_of, expansion_separators, graph_of, junction_tree_of,
    log_mu_ratio, mu_ratio,
};
use jtsmc::oracle::{enumerate_decomposable, enumerate_junction_trees, exact_expansion_support};
use jtsmc::LabeledGraph;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn mu_matches_enumeration_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 200 {
        let p = rng.random_range(5..=6);
        let pairs = p * (p - 1) / 2;
        let g = LabeledGraph::from_pair_mask(p, rng.random_range(0..1u64 << pairs));
        let Ok(mu) = count_junction_trees(&g) else {
            continue;
        };
        assert_eq!(
            mu,
            enumerate_junction_trees(&g).unwrap().len().into(),
            "{g:?}"
        );
        checked += 1;
    }
}

#[test]
fn mu_mass_identity() {
    for p in 1..=5 {
        let mut by_formula = 0usize;
        let mut by_enumeration = 0usize;
        for g in enumerate_decomposable(p).unwrap() {
            by_formula += usize::try_from(count_junction_trees(&g).unwrap()).unwrap();
            by_enumeration += enumerate_junction_trees(&g).unwrap().len();
        }
        assert_eq!(by_formula, by_enumeration);
    }
}

#[test]
fn mu_ratio_matches_direct_quotient_for_every_expansion() {
    for m in 1..=4 {
        for g in enumerate_decomposable(m).unwrap() {
            for t in enumerate_junction_trees(&g).unwrap() {
                for t_next in exact_expansion_support(&t).unwrap() {
                    let created = expansion_separators(&t, &t_next);
                    let ratio = mu_ratio(&t, &t_next, &created).unwrap();
                    let direct = BigRational::new(
                        BigInt::from(count_trees_of(&t)),
                        BigInt::from(count_junction_trees(&graph_of(&t_next)).unwrap()),
                    );
                    assert_eq!(ratio, direct, "{t:?} -> {t_next:?}");
                    let exact = (direct.numer().to_string().parse::<f64>().unwrap()
                        / direct.denom().to_string().parse::<f64>().unwrap())
                    .ln();
                    assert!((log_mu_ratio(&t, &t_next) - exact).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn canonical_tree_is_one_of_the_enumerated() {
    for g in enumerate_decomposable(5).unwrap() {
        let t = junction_tree_of(&g).unwrap();
        assert!(enumerate_junction_trees(&g).unwrap().contains(&t));
    }
}
