//! Bind and the lifted application combinators.
//!
//! These are plain term constructors: each expands into handlers, `eta` and
//! abstractions, so the reducer never sees them as primitives. Binders
//! introduced by an expansion are chosen to avoid the free variables of the
//! arguments they scope over.

use crate::syntax::{fresh_name, Handler, Name, Term, Type};

/// `M >>= N`: a handler with only an eta clause `N`, applied to `M`.
pub fn bind(m: Term, n: Term) -> Term {
    Term::handle(Handler::new([], n).expect("no clauses"), m)
}

/// `F <<. x = F >>= \f. eta (f x)`.
pub fn apply_right(fs: Term, x: Term) -> Term {
    let f = fresh_name(&Name::new("f"), &x.free_vars());
    let body = Term::eta(Term::app(Term::Var(f.clone()), x));
    bind(fs, abs(f, body))
}

/// `f .>> X = X >>= \x. eta (f x)`.
pub fn apply_left(f: Term, xs: Term) -> Term {
    let x = fresh_name(&Name::new("x"), &f.free_vars());
    let body = Term::eta(Term::app(f, Term::Var(x.clone())));
    bind(xs, abs(x, body))
}

/// `F <<.>> X = F >>= \f. X >>= \x. eta (f x)`.
pub fn apply_both(fs: Term, xs: Term) -> Term {
    let f = fresh_name(&Name::new("f"), &xs.free_vars());
    let x = fresh_name(&Name::new("x"), &[f.clone()].into_iter().collect());
    let inner = Term::eta(Term::app(Term::Var(f.clone()), Term::Var(x.clone())));
    bind(fs, abs(f, bind(xs, abs(x, inner))))
}

/// `M op~ N = (\m n. op m n) .>> M <<.>> N`.
pub fn lift_binary(op: &str, m: Term, n: Term) -> Term {
    lift(op, None, m, n)
}

/// Like [`lift_binary`], annotating the two binders of the lifted operator
/// with the operand types so the expansion synthesizes without context.
pub fn lift_binary_at(op: &str, operands: (Type, Type), m: Term, n: Term) -> Term {
    lift(op, Some(operands), m, n)
}

fn lift(op: &str, operands: Option<(Type, Type)>, m: Term, n: Term) -> Term {
    let body = Term::apps(Term::cst(op), [Term::var("m"), Term::var("n")]);
    let (tm, tn) = match operands {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };
    let f = Term::Abs {
        binder: Name::new("m"),
        ann: tm,
        body: Box::new(Term::Abs {
            binder: Name::new("n"),
            ann: tn,
            body: Box::new(body),
        }),
    };
    apply_both(apply_left(f, m), n)
}

fn abs(binder: Name, body: Term) -> Term {
    Term::Abs {
        binder,
        ann: None,
        body: Box::new(body),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduce::{normalize, Outcome, Strategy};

    fn nf(t: &Term) -> Term {
        let trace = normalize(t, Strategy::LeftmostOutermost, 10_000);
        assert_eq!(trace.outcome, Outcome::NormalForm, "{t}");
        trace.result().clone()
    }

    fn speaker_then(k: Term) -> Term {
        Term::op("speaker", Term::unit(), "k", k)
    }

    #[test]
    fn bind_left_identity_on_constant() {
        let t = bind(Term::eta(Term::cst("j")), Term::lam("x", Term::eta(Term::var("x"))));
        assert!(nf(&t).alpha_eq(&Term::eta(Term::cst("j"))));
    }

    #[test]
    fn bind_propagates_operations() {
        let me = Term::op("speaker", Term::unit(), "x", Term::eta(Term::var("x")));
        let t = bind(
            me,
            Term::lam("y", Term::eta(Term::apps(Term::cst("love"), [Term::cst("m"), Term::var("y")]))),
        );
        let want = Term::op(
            "speaker",
            Term::unit(),
            "x",
            Term::eta(Term::apps(Term::cst("love"), [Term::cst("m"), Term::var("x")])),
        );
        assert!(nf(&t).alpha_eq(&want));
    }

    #[test]
    fn apply_right_on_pure_function() {
        let t = apply_right(Term::eta(Term::cst("f")), Term::cst("a"));
        assert!(nf(&t).alpha_eq(&Term::eta(Term::app(Term::cst("f"), Term::cst("a")))));
    }

    #[test]
    fn apply_right_keeps_operation_outermost() {
        let t = apply_right(
            Term::op("scope", Term::cst("P"), "k", Term::eta(Term::var("k"))),
            Term::cst("a"),
        );
        assert!(matches!(nf(&t), Term::Op { ref op, .. } if op.as_str() == "scope"));
    }

    #[test]
    fn apply_right_avoids_capturing_the_argument() {
        let t = apply_right(Term::eta(Term::cst("g")), Term::var("f"));
        let r = nf(&t);
        assert!(r.alpha_eq(&Term::eta(Term::app(Term::cst("g"), Term::var("f")))));
    }

    #[test]
    fn apply_left_and_both() {
        let t = apply_left(Term::cst("love"), Term::eta(Term::cst("j")));
        assert!(nf(&t).alpha_eq(&Term::eta(Term::app(Term::cst("love"), Term::cst("j")))));
        let t = apply_both(t, Term::eta(Term::cst("m")));
        let want = Term::eta(Term::apps(Term::cst("love"), [Term::cst("j"), Term::cst("m")]));
        assert!(nf(&t).alpha_eq(&want));
    }

    #[test]
    fn apply_both_runs_function_effects_first() {
        let t = apply_both(
            Term::op("a", Term::unit(), "k", Term::eta(Term::cst("f"))),
            Term::op("b", Term::unit(), "k", Term::eta(Term::cst("x"))),
        );
        match nf(&t) {
            Term::Op { op, cont, .. } => {
                assert_eq!(op.as_str(), "a");
                assert!(matches!(*cont, Term::Op { ref op, .. } if op.as_str() == "b"));
            }
            other => panic!("expected an operation, got {other}"),
        }
    }

    #[test]
    fn lifted_conjunction() {
        let t = lift_binary("and", Term::eta(Term::cst("p")), Term::eta(Term::cst("q")));
        let want = Term::eta(Term::apps(Term::cst("and"), [Term::cst("p"), Term::cst("q")]));
        assert!(nf(&t).alpha_eq(&want));
        let t = lift_binary(
            "and",
            speaker_then(Term::eta(Term::cst("p"))),
            Term::op("scope", Term::unit(), "k", Term::eta(Term::cst("q"))),
        );
        match nf(&t) {
            Term::Op { op, .. } => assert_eq!(op.as_str(), "speaker"),
            other => panic!("expected an operation, got {other}"),
        }
    }

    #[test]
    fn annotated_lift_normalizes_like_the_plain_one() {
        let o = Type::atom("o");
        let a = lift_binary("and", Term::eta(Term::cst("p")), Term::eta(Term::cst("q")));
        let b = lift_binary_at(
            "and",
            (o.clone(), o),
            Term::eta(Term::cst("p")),
            Term::eta(Term::cst("q")),
        );
        assert!(nf(&a).erase().alpha_eq(&nf(&b).erase()));
    }
}
