//! Property tests over randomly sampled well-typed terms.

use banana::reduce::{normal_form, normalize, reducts, Outcome, Strategy};
use banana::surface::{parse_term, Env};
use banana::typecheck::{check_against, subtype, synthesize};
use banana::verify::{reduction_graph, small_context, small_signature, Sampler};
use banana::{Term, Type};
use proptest::prelude::*;

const FUEL: usize = 100_000;

fn sample(seed: u64, stream: u64) -> (Term, Type) {
    let mut s = Sampler::new(seed, stream, 7);
    let ty = s.ty();
    (s.term(&ty), ty)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sampled_terms_check_at_their_type(seed in any::<u64>(), stream in 0u64..1_000) {
        let (t, ty) = sample(seed, stream);
        prop_assert!(check_against(&small_context(), &t, &ty).is_ok(), "{} : {}", t, ty);
        prop_assert!(t.depth() <= 7);
    }

    #[test]
    fn types_are_preserved_along_the_whole_reduction(seed in any::<u64>(), stream in 0u64..1_000) {
        let (t, ty) = sample(seed, stream);
        let ctx = small_context();
        let trace = normalize(&t, Strategy::LeftmostOutermost, FUEL);
        for step in &trace.steps {
            let got = synthesize(&ctx, &step.term);
            prop_assert!(
                matches!(&got, Ok(s) if subtype(s, &ty)),
                "{} @ {} gives {}: {:?}", step.rule, step.path, step.term, got
            );
        }
    }

    #[test]
    fn random_strategies_reach_the_leftmost_outermost_result(
        seed in any::<u64>(),
        stream in 0u64..1_000,
        strategy_seed in any::<u64>(),
    ) {
        let (t, _) = sample(seed, stream);
        let (lo, lo_outcome) = normal_form(&t, FUEL);
        let random = normalize(&t, Strategy::RandomSeeded(strategy_seed), FUEL);
        prop_assert_eq!(&random.outcome, &lo_outcome);
        prop_assert!(random.result().alpha_eq(&lo), "{} versus {}", random.result(), lo);
    }

    #[test]
    fn sampled_graphs_have_one_normal_form(seed in any::<u64>(), stream in 0u64..1_000) {
        let (t, _) = sample(seed, stream);
        let g = reduction_graph(&t, 5_000);
        prop_assume!(!g.budget_exhausted);
        prop_assert_eq!(g.normal_forms.len(), 1, "{}", t);
    }

    #[test]
    fn printing_then_parsing_is_the_identity(seed in any::<u64>(), stream in 0u64..1_000) {
        let (t, _) = sample(seed, stream);
        let env = Env::with_signature(small_signature());
        let back = parse_term(&t.to_string(), &env);
        prop_assert!(matches!(&back, Ok(u) if u.alpha_eq(&t)), "{} reparsed as {:?}", t, back);
    }

    #[test]
    fn canonical_forms_are_alpha_equivalent(seed in any::<u64>(), stream in 0u64..1_000) {
        let (t, _) = sample(seed, stream);
        let c = t.canonical();
        prop_assert!(c.alpha_eq(&t));
        prop_assert_eq!(c.canonical(), c);
    }

    #[test]
    fn normal_forms_have_no_reducts(seed in any::<u64>(), stream in 0u64..1_000) {
        let (t, _) = sample(seed, stream);
        let (n, outcome) = normal_form(&t, FUEL);
        prop_assert_ne!(outcome, Outcome::FuelExhausted);
        prop_assert!(reducts(&n).is_empty());
    }
}
