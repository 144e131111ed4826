//! An English fragment: lexicon, syntax trees and the golden corpus.
//!
//! Denotations are built directly from the prelude combinators. The same
//! fragment is also shipped as a declaration file, [`SOURCE`], whose
//! directives are the eleven corpus sentences in order.

use std::fmt;
use std::sync::OnceLock;

use crate::prelude::{apply_both, apply_left, apply_right, bind, lift_binary_at};
use crate::surface::{self, Env};
use crate::syntax::{fresh_name, Handler, Name, Term, Type};
use crate::typecheck::TypingContext;

/// The fragment as a declaration file.
pub const SOURCE: &str = include_str!("../data/fragment.eff");

pub const SPEAKER: &str = "speaker";
pub const IMPLICATE: &str = "implicate";
pub const SCOPE: &str = "scope";

/// The constant the corpus uses for the speaker of the utterance.
pub const DEFAULT_SPEAKER: &str = "s";

fn iota() -> Type {
    Type::atom("iota")
}

fn o() -> Type {
    Type::atom("o")
}

/// Operations an unresolved noun phrase or sentence may perform.
pub fn sentence_row() -> [&'static str; 3] {
    [IMPLICATE, SCOPE, SPEAKER]
}

/// The type of a syntactic category.
pub fn category_type(c: Category) -> Type {
    match c {
        Category::NP => Type::comp(sentence_row(), iota()),
        Category::S => Type::comp(sentence_row(), o()),
        Category::N => Type::comp([IMPLICATE, SPEAKER], Type::fun(iota(), o())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Category {
    NP,
    S,
    N,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::NP => "NP",
            Category::S => "S",
            Category::N => "N",
        })
    }
}

/// Lexical items. Argument order follows the denotations: a verb takes its
/// object (or clause) first and its subject second.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Lex {
    John,
    Mary,
    Me,
    Everyone,
    Man,
    Woman,
    Loves,
    SaidIs,
    SaidDs,
    Every,
    A,
    Appos,
    BestFriend,
}

impl Lex {
    pub const ALL: [Lex; 13] = [
        Lex::John,
        Lex::Mary,
        Lex::Me,
        Lex::Everyone,
        Lex::Man,
        Lex::Woman,
        Lex::Loves,
        Lex::SaidIs,
        Lex::SaidDs,
        Lex::Every,
        Lex::A,
        Lex::Appos,
        Lex::BestFriend,
    ];

    /// Argument categories and result category.
    pub fn frame(self) -> (&'static [Category], Category) {
        use Category::*;
        match self {
            Lex::John | Lex::Mary | Lex::Me | Lex::Everyone => (&[], NP),
            Lex::Man | Lex::Woman => (&[], N),
            Lex::Loves => (&[NP, NP], S),
            Lex::SaidIs | Lex::SaidDs => (&[S, NP], S),
            Lex::Every | Lex::A => (&[N], NP),
            Lex::Appos => (&[NP, NP], NP),
            Lex::BestFriend => (&[NP], NP),
        }
    }

    pub fn category(self) -> Category {
        self.frame().1
    }

    pub fn word(self) -> &'static str {
        match self {
            Lex::John => "John",
            Lex::Mary => "Mary",
            Lex::Me => "me",
            Lex::Everyone => "everyone",
            Lex::Man => "man",
            Lex::Woman => "woman",
            Lex::Loves => "loves",
            Lex::SaidIs => "said",
            Lex::SaidDs => "said:",
            Lex::Every => "every",
            Lex::A => "a",
            Lex::Appos => "appos",
            Lex::BestFriend => "best-friend",
        }
    }

    /// The closed denotation of the item.
    pub fn denotation(self) -> Term {
        match self {
            Lex::John => Term::eta(Term::cst("j")),
            Lex::Mary => Term::eta(Term::cst("m")),
            Lex::Me => Term::op(SPEAKER, Term::unit(), "x", Term::eta(Term::var("x"))),
            Lex::Everyone => quantifier("forall", None),
            Lex::Man => Term::eta(Term::cst("man")),
            Lex::Woman => Term::eta(Term::cst("woman")),
            Lex::Loves => Term::lam(
                "O",
                Term::lam("S", scope_island(verb("love", Term::var("S"), Term::var("O")))),
            ),
            Lex::SaidIs => Term::lam(
                "C",
                Term::lam("S", scope_island(verb("say", Term::var("S"), Term::var("C")))),
            ),
            Lex::SaidDs => {
                let quoted = apply_left(
                    Term::app(Term::cst("say"), Term::var("y")),
                    with_speaker(Term::var("y"), accommodate(Term::var("C"))),
                );
                let body = scope_island(bind(Term::var("S"), Term::lam("y", quoted)));
                Term::lam("C", Term::lam("S", body))
            }
            Lex::Every => Term::lam("N", quantifier("forall", Some("imp"))),
            Lex::A => Term::lam("N", quantifier("exists", Some("and"))),
            Lex::Appos => {
                let claim = scope_island(lift_binary_at(
                    "eq",
                    (iota(), iota()),
                    Term::eta(Term::var("x")),
                    Term::var("Y"),
                ));
                let note = Term::op(IMPLICATE, Term::var("i"), "z", Term::eta(Term::var("x")));
                let body = bind(Term::var("X"), Term::lam("x", bind(claim, Term::lam("i", note))));
                Term::lam("X", Term::lam("Y", body))
            }
            Lex::BestFriend => Term::lam("X", apply_left(Term::cst("best-friend"), Term::var("X"))),
        }
    }
}

/// `\O S. love .>> S <<.>> O` without the scope island. Kept for the typing
/// example whose effect row must come out empty.
pub fn loves_plain() -> Term {
    Term::lam("O", Term::lam("S", verb("love", Term::var("S"), Term::var("O"))))
}

fn verb(c: &str, subject: Term, complement: Term) -> Term {
    apply_both(apply_left(Term::cst(c), subject), complement)
}

/// `do scope(\c. q .>> commute (\x. body), \x. eta x)`, where the body is
/// `(N <<. x) op~ c x` for a determiner and `c x` for a quantified pronoun.
fn quantifier(q: &str, restrictor: Option<&str>) -> Term {
    let x = Term::var("x");
    let nuclear = Term::app(Term::var("c"), x.clone());
    let body = match restrictor {
        Some(op) => lift_binary_at(op, (o(), o()), apply_right(Term::var("N"), x), nuclear),
        None => nuclear,
    };
    let generalized = apply_left(Term::cst(q), Term::commute(Term::lam_ann("x", iota(), body)));
    Term::op(SCOPE, Term::lam("c", generalized), "x", Term::eta(Term::var("x")))
}

/// `withSpeaker s M = handle { speaker -> \x k. k s } M`.
pub fn with_speaker(speaker: Term, m: Term) -> Term {
    let avoid = speaker.free_vars();
    let x = fresh_name(&Name::new("x"), &avoid);
    let k = fresh_name(&Name::new("k"), &avoid);
    let clause = Term::Abs {
        binder: x,
        ann: None,
        body: Box::new(Term::Abs {
            binder: k.clone(),
            ann: None,
            body: Box::new(Term::app(Term::Var(k), speaker)),
        }),
    };
    handler_around(SPEAKER, clause, m)
}

/// `SI M = handle { scope -> \c k. c k } M`.
pub fn scope_island(m: Term) -> Term {
    let clause = Term::lam("c", Term::lam("k", Term::app(Term::var("c"), Term::var("k"))));
    handler_around(SCOPE, clause, m)
}

/// `accommodate M = handle { implicate -> \i k. eta i /\~ k * } M`.
pub fn accommodate(m: Term) -> Term {
    let conj = lift_binary_at(
        "and",
        (o(), o()),
        Term::eta(Term::var("i")),
        Term::app(Term::var("k"), Term::unit()),
    );
    handler_around(IMPLICATE, Term::lam("i", Term::lam("k", conj)), m)
}

fn handler_around(op: &str, clause: Term, m: Term) -> Term {
    let h = Handler::with_default_eta([(Name::new(op), clause)]).expect("one clause");
    Term::handle(h, m)
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FragmentError {
    #[error("`{word}` takes {expected} argument(s), got {found}")]
    Arity {
        word: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("argument {position} of `{word}` must be {expected}, got {found}")]
    Category {
        word: &'static str,
        position: usize,
        expected: Category,
        found: Category,
    },
    #[error("speaker `{name}` is declared with type {found}, not iota")]
    SpeakerType { name: String, found: Type },
}

/// A syntax tree over the lexicon.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynTree {
    pub head: Lex,
    pub args: Vec<SynTree>,
}

impl SynTree {
    /// Builds a node, checking arity and argument categories.
    pub fn new(head: Lex, args: Vec<SynTree>) -> Result<SynTree, FragmentError> {
        let (frame, _) = head.frame();
        if frame.len() != args.len() {
            return Err(FragmentError::Arity {
                word: head.word(),
                expected: frame.len(),
                found: args.len(),
            });
        }
        for (i, (want, arg)) in frame.iter().zip(&args).enumerate() {
            if arg.category() != *want {
                return Err(FragmentError::Category {
                    word: head.word(),
                    position: i,
                    expected: *want,
                    found: arg.category(),
                });
            }
        }
        Ok(SynTree { head, args })
    }

    pub fn leaf(head: Lex) -> SynTree {
        SynTree::new(head, Vec::new()).expect("leaf arity")
    }

    pub fn category(&self) -> Category {
        self.head.category()
    }

    /// The compositional denotation: the head's denotation applied to the
    /// denotations of the arguments.
    pub fn denote(&self) -> Term {
        Term::apps(self.head.denotation(), self.args.iter().map(SynTree::denote))
    }
}

impl fmt::Display for SynTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            return f.write_str(self.head.word());
        }
        write!(f, "[{}", self.head.word())?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str("]")
    }
}

/// Tree shorthands used by the corpus and tests.
pub mod tree {
    use super::{Lex, SynTree};

    fn node(head: Lex, args: Vec<SynTree>) -> SynTree {
        SynTree::new(head, args).expect("well-formed corpus tree")
    }

    pub fn john() -> SynTree {
        SynTree::leaf(Lex::John)
    }
    pub fn mary() -> SynTree {
        SynTree::leaf(Lex::Mary)
    }
    pub fn me() -> SynTree {
        SynTree::leaf(Lex::Me)
    }
    pub fn everyone() -> SynTree {
        SynTree::leaf(Lex::Everyone)
    }
    pub fn man() -> SynTree {
        SynTree::leaf(Lex::Man)
    }
    pub fn woman() -> SynTree {
        SynTree::leaf(Lex::Woman)
    }
    pub fn loves(object: SynTree, subject: SynTree) -> SynTree {
        node(Lex::Loves, vec![object, subject])
    }
    pub fn said_is(clause: SynTree, subject: SynTree) -> SynTree {
        node(Lex::SaidIs, vec![clause, subject])
    }
    pub fn said_ds(clause: SynTree, subject: SynTree) -> SynTree {
        node(Lex::SaidDs, vec![clause, subject])
    }
    pub fn every(n: SynTree) -> SynTree {
        node(Lex::Every, vec![n])
    }
    pub fn a(n: SynTree) -> SynTree {
        node(Lex::A, vec![n])
    }
    pub fn appos(head: SynTree, appositive: SynTree) -> SynTree {
        node(Lex::Appos, vec![head, appositive])
    }
    pub fn best_friend(np: SynTree) -> SynTree {
        node(Lex::BestFriend, vec![np])
    }
}

/// Handlers wrapped around a sentence before evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wrap {
    Bare,
    WithSpeaker,
    Accommodate,
    WithSpeakerAccommodate,
}

impl Wrap {
    pub fn apply(self, speaker: &str, m: Term) -> Term {
        let s = || Term::cst(speaker);
        match self {
            Wrap::Bare => m,
            Wrap::WithSpeaker => with_speaker(s(), m),
            Wrap::Accommodate => accommodate(m),
            Wrap::WithSpeakerAccommodate => with_speaker(s(), accommodate(m)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GoldenEntry {
    pub id: usize,
    pub sentence: &'static str,
    pub tree: SynTree,
    pub wrap: Wrap,
    /// Expected normal form in surface syntax, with speaker `s`.
    pub expected: &'static str,
}

impl GoldenEntry {
    /// The wrapped denotation, with the speaker constant `speaker`.
    pub fn term_with_speaker(&self, speaker: &str) -> Term {
        self.wrap.apply(speaker, self.tree.denote())
    }

    pub fn term(&self) -> Term {
        self.term_with_speaker(DEFAULT_SPEAKER)
    }

    /// The expected normal form, with the speaker renamed to `speaker`.
    pub fn expected_with_speaker(&self, speaker: &str) -> Term {
        let t = surface::parse_term(self.expected, environment())
            .unwrap_or_else(|e| panic!("golden entry {}: {e}", self.id));
        t.rename_const(DEFAULT_SPEAKER, speaker)
    }

    pub fn expected_term(&self) -> Term {
        self.expected_with_speaker(DEFAULT_SPEAKER)
    }
}

/// The eleven corpus sentences, numbered from 1.
pub fn golden_corpus() -> Vec<GoldenEntry> {
    use tree::*;
    let e = |id, sentence, tree, wrap, expected| GoldenEntry {
        id,
        sentence,
        tree,
        wrap,
        expected,
    };
    vec![
        e(1, "John loves Mary.", loves(mary(), john()), Wrap::Bare, "eta (love j m)"),
        e(
            2,
            "Mary loves me.",
            loves(me(), mary()),
            Wrap::Bare,
            "do speaker(*, \\x. eta (love m x))",
        ),
        e(
            3,
            "John said Mary loves me.",
            said_is(loves(me(), mary()), john()),
            Wrap::Bare,
            "do speaker(*, \\x. eta (say j (love m x)))",
        ),
        e(
            4,
            "John said, \"Mary loves me\".",
            said_ds(loves(me(), mary()), john()),
            Wrap::Bare,
            "eta (say j (love m j))",
        ),
        e(
            5,
            "Every man loves a woman.",
            loves(a(woman()), every(man())),
            Wrap::Bare,
            "eta (forall (\\x. man x -> exists (\\y. woman y /\\ love x y)))",
        ),
        e(
            6,
            "John said every woman loves me.",
            said_is(loves(me(), every(woman())), john()),
            Wrap::WithSpeaker,
            "eta (say j (forall (\\x. woman x -> love x s)))",
        ),
        e(
            7,
            "John said, \"Every woman loves me\".",
            said_ds(loves(me(), every(woman())), john()),
            Wrap::Bare,
            "eta (say j (forall (\\x. woman x -> love x j)))",
        ),
        e(
            8,
            "John, my best friend, loves every woman.",
            loves(every(woman()), appos(john(), best_friend(me()))),
            Wrap::WithSpeakerAccommodate,
            "eta (j = best-friend s /\\ forall (\\x. woman x -> love j x))",
        ),
        e(
            9,
            "Mary, everyone's best friend, loves John.",
            loves(john(), appos(mary(), best_friend(everyone()))),
            Wrap::Accommodate,
            "eta (forall (\\x. m = best-friend x) /\\ love m j)",
        ),
        e(
            10,
            "A man said, \"My best friend, Mary, loves me\".",
            said_ds(loves(me(), appos(best_friend(me()), mary())), a(man())),
            Wrap::Bare,
            "eta (exists (\\x. man x /\\ say x (best-friend x = m /\\ love (best-friend x) x)))",
        ),
        e(
            11,
            "Mary loves me.",
            loves(me(), mary()),
            Wrap::WithSpeaker,
            "eta (love m s)",
        ),
    ]
}

/// The parsed declaration file.
pub fn declarations() -> &'static surface::DeclFile {
    static FILE: OnceLock<surface::DeclFile> = OnceLock::new();
    FILE.get_or_init(|| surface::parse_file(SOURCE).expect("fragment file parses"))
}

/// The fragment's environment: signature and lexicon definitions.
pub fn environment() -> &'static Env {
    &declarations().env
}

pub fn typing_context() -> TypingContext {
    TypingContext::new(environment().signature().clone())
}

/// A typing context in which `speaker` is a constant of type iota,
/// declaring it if needed.
pub fn typing_context_with_speaker(speaker: &str) -> Result<TypingContext, FragmentError> {
    let mut sig = environment().signature().clone();
    match sig.constant(speaker) {
        Some(t) if *t == iota() => {}
        Some(t) => {
            return Err(FragmentError::SpeakerType {
                name: speaker.to_string(),
                found: t.clone(),
            })
        }
        None => {
            sig.declare_constant(Name::new(speaker), iota())
                .expect("fresh constant");
        }
    }
    Ok(TypingContext::new(sig))
}
