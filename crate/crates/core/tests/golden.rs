use banana::fragment::{self, golden_corpus, tree, Category, Wrap};
use banana::reduce::{eta_normalize, normal_form, normalize, same_up_to_eta, Outcome, Strategy};
use banana::surface::parse_term;
use banana::typecheck::{check_against, synthesize};
use banana::Type;

const FUEL: usize = 100_000;

#[test]
fn every_entry_reaches_its_expected_form() {
    let corpus = golden_corpus();
    assert_eq!(corpus.len(), 11);
    for e in &corpus {
        let (nf, outcome) = normal_form(&e.term(), FUEL);
        assert_eq!(outcome, Outcome::NormalForm, "({})", e.id);
        assert!(
            same_up_to_eta(&nf, &e.expected_term()),
            "({}) {}: got {}",
            e.id,
            e.sentence,
            eta_normalize(&nf.erase())
        );
    }
}

#[test]
fn printed_results_match_the_expected_text() {
    for e in golden_corpus() {
        let (nf, _) = normal_form(&e.term(), FUEL);
        let shown = eta_normalize(&nf.erase()).to_string();
        let reparsed = parse_term(&shown, fragment::environment()).unwrap();
        assert!(reparsed.alpha_eq(&e.expected_term()), "({}) {shown}", e.id);
    }
}

#[test]
fn wrappers_follow_the_corpus_table() {
    let wraps: Vec<Wrap> = golden_corpus().iter().map(|e| e.wrap).collect();
    use Wrap::*;
    assert_eq!(
        wraps,
        [Bare, Bare, Bare, Bare, Bare, WithSpeaker, Bare, WithSpeakerAccommodate, Accommodate, Bare, WithSpeaker]
    );
}

#[test]
fn unhandled_deixis_keeps_the_speaker_operation() {
    let e = &golden_corpus()[2];
    let (nf, _) = normal_form(&e.term(), FUEL);
    assert_eq!(nf.operations().into_iter().map(|n| n.to_string()).collect::<Vec<_>>(), ["speaker"]);
}

#[test]
fn declaration_file_directives_match_the_corpus() {
    let file = fragment::declarations();
    let corpus = golden_corpus();
    for ((_, _, t, _), e) in file.directives().zip(&corpus) {
        let (nf, outcome) = normal_form(t, FUEL);
        assert_eq!(outcome, Outcome::NormalForm);
        assert!(same_up_to_eta(&nf, &e.expected_term()), "({})", e.id);
    }
}

#[test]
fn denotations_have_their_category_types() {
    use tree::*;
    let ctx = fragment::typing_context();
    let nps = [
        john(),
        me(),
        everyone(),
        every(man()),
        a(woman()),
        best_friend(me()),
        appos(mary(), best_friend(everyone())),
    ];
    for np in &nps {
        check_against(&ctx, &np.denote(), &fragment::category_type(Category::NP))
            .unwrap_or_else(|e| panic!("{np}: {e}"));
    }
    for s in [loves(john(), me()), said_ds(loves(me(), mary()), a(man()))] {
        let ty = synthesize(&ctx, &s.denote()).unwrap();
        assert!(banana::subtype(&ty, &fragment::category_type(Category::S)), "{s}: {ty}");
    }
}

#[test]
fn plain_entry_under_speaker_handler_is_pure() {
    let ctx = fragment::typing_context();
    let t = fragment::with_speaker(
        banana::Term::cst("s"),
        banana::Term::apps(fragment::loves_plain(), [tree::me().denote(), tree::mary().denote()]),
    );
    let pure = Type::comp::<[&str; 0], &str>([], Type::atom("o"));
    assert_eq!(synthesize(&ctx, &t).unwrap(), pure);
}

#[test]
fn strategies_agree_on_the_corpus() {
    for e in golden_corpus() {
        let t = e.term();
        let (lo, _) = normal_form(&t, FUEL);
        for seed in 0..5 {
            let r = normalize(&t, Strategy::RandomSeeded(seed), FUEL);
            assert!(r.result().alpha_eq(&lo), "({}) seed {seed}", e.id);
        }
    }
}
