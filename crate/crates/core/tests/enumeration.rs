//! Cross-checks the typed enumerator against a brute-force generator of
//! all well-scoped terms, filtered by a separately written typing relation.

use std::collections::{BTreeSet, HashMap, HashSet};

use banana::syntax::{EffectRow, Handler, Name, Term, Type};
use banana::typecheck::synthesize;
use banana::verify::{annotations, enumerate_typed, small_context, Enumerator, ASK, TELL};

fn a() -> Type {
    Type::atom("a")
}

fn b() -> Type {
    Type::atom("b")
}

fn x(i: usize) -> Name {
    Name::new(&format!("x{i}"))
}

/// Every closed-under-`depth` term of exactly `n` nodes.
fn raw(depth: usize, n: usize, memo: &mut HashMap<(usize, usize), Vec<Term>>) -> Vec<Term> {
    if let Some(v) = memo.get(&(depth, n)) {
        return v.clone();
    }
    let mut out = Vec::new();
    if n == 1 {
        out.extend((0..depth).map(|i| Term::Var(x(i))));
        out.push(Term::cst("c"));
        out.push(Term::cst("d"));
    } else if n > 1 {
        for ann in annotations() {
            for body in raw(depth + 1, n - 1, memo) {
                out.push(Term::Abs {
                    binder: x(depth),
                    ann: Some(ann.clone()),
                    body: Box::new(body),
                });
            }
        }
        for m in raw(depth, n - 1, memo) {
            out.push(Term::eta(m.clone()));
            out.push(Term::extract(m.clone()));
            out.push(Term::commute(m));
        }
        for i in 1..n - 1 {
            let fs = raw(depth, i, memo);
            let args = raw(depth, n - 1 - i, memo);
            for f in &fs {
                for arg in &args {
                    out.push(Term::app(f.clone(), arg.clone()));
                }
            }
            let conts = raw(depth + 1, n - 1 - i, memo);
            for op in [ASK, TELL] {
                for p in &fs {
                    for k in &conts {
                        out.push(Term::Op {
                            op: Name::new(op),
                            param: Box::new(p.clone()),
                            binder: x(depth),
                            cont: Box::new(k.clone()),
                        });
                    }
                }
            }
        }
        for si in 1..n.saturating_sub(2) {
            let scruts = raw(depth, si, memo);
            let bodies = raw(depth + 1, n - 2 - si, memo);
            for ann in annotations() {
                for m in &scruts {
                    for body in &bodies {
                        let clause = Term::Abs {
                            binder: x(depth),
                            ann: Some(ann.clone()),
                            body: Box::new(body.clone()),
                        };
                        let h = Handler::new([], clause).unwrap();
                        out.push(Term::handle(h, m.clone()));
                    }
                }
            }
        }
    }
    memo.insert((depth, n), out.clone());
    out
}

fn sub(s: &Type, t: &Type) -> bool {
    match (s, t) {
        (Type::Atom(p), Type::Atom(q)) => p == q,
        (Type::Fun(a1, b1), Type::Fun(a2, b2)) => sub(a2, a1) && sub(b1, b2),
        (Type::Comp(r1, a1), Type::Comp(r2, a2)) => r1.is_subset(r2) && sub(a1, a2),
        _ => false,
    }
}

fn op_sig(op: &str) -> (Type, Type) {
    if op == ASK {
        (a(), b())
    } else {
        (b(), a())
    }
}

/// The least type of `t` under the typing rules with subsumption, where
/// `env[i]` types `x{i}`.
fn least_type(env: &mut Vec<Type>, t: &Term) -> Option<Type> {
    match t {
        Term::Var(v) => {
            let i: usize = v.as_str()[1..].parse().ok()?;
            env.get(i).cloned()
        }
        Term::Const(c) => match c.as_str() {
            "c" => Some(a()),
            "d" => Some(b()),
            _ => None,
        },
        Term::Abs { ann, body, .. } => {
            let dom = ann.clone()?;
            env.push(dom.clone());
            let cod = least_type(env, body);
            env.pop();
            Some(Type::fun(dom, cod?))
        }
        Term::App(f, arg) => match least_type(env, f)? {
            Type::Fun(dom, cod) if sub(&least_type(env, arg)?, &dom) => Some(*cod),
            _ => None,
        },
        Term::Eta(m) => Some(Type::Comp(EffectRow::new(), Box::new(least_type(env, m)?))),
        Term::Extract(m) => match least_type(env, m)? {
            Type::Comp(r, inner) if r.is_empty() => Some(*inner),
            _ => None,
        },
        Term::Commute(m) => match least_type(env, m)? {
            Type::Fun(dom, cod) => match *cod {
                Type::Comp(r, res) => Some(Type::Comp(r, Box::new(Type::Fun(dom, res)))),
                _ => None,
            },
            _ => None,
        },
        Term::Op { op, param, cont, .. } => {
            let (input, output) = op_sig(op);
            if !sub(&least_type(env, param)?, &input) {
                return None;
            }
            env.push(output);
            let k = least_type(env, cont);
            env.pop();
            match k? {
                Type::Comp(mut r, res) => {
                    r.insert(op.clone());
                    Some(Type::Comp(r, res))
                }
                _ => None,
            }
        }
        Term::Handle(h, m) => {
            if !h.clauses().is_empty() {
                return None;
            }
            let Type::Comp(residual, gamma) = least_type(env, m)? else {
                return None;
            };
            let Term::Abs { ann: Some(dom), body, .. } = h.eta() else {
                return None;
            };
            if !sub(&gamma, dom) {
                return None;
            }
            env.push(dom.clone());
            let k = least_type(env, body);
            env.pop();
            match k? {
                Type::Comp(mut r, res) => {
                    r.extend(residual);
                    Some(Type::Comp(r, res))
                }
                _ => None,
            }
        }
        Term::Ann(..) => None,
    }
}

fn typed_closed(bound: usize) -> Vec<(Term, Type)> {
    let mut memo = HashMap::new();
    (1..=bound)
        .flat_map(|n| raw(0, n, &mut memo))
        .filter_map(|t| least_type(&mut Vec::new(), &t).map(|ty| (t, ty)))
        .collect()
}

const BOUND: usize = 5;

fn targets() -> Vec<Type> {
    let empty = || Type::comp::<[&str; 0], &str>([], a());
    vec![
        a(),
        b(),
        Type::fun(a(), b()),
        empty(),
        Type::comp([ASK], a()),
        Type::comp([ASK, TELL], b()),
        Type::fun(a(), Type::comp([ASK], b())),
        Type::comp([TELL], Type::fun(a(), a())),
        Type::fun(empty(), a()),
    ]
}

#[test]
fn counts_match_brute_force_per_target() {
    let oracle = typed_closed(BOUND);
    for target in targets() {
        let want: HashSet<Term> = oracle
            .iter()
            .filter(|(_, ty)| sub(ty, &target))
            .map(|(t, _)| t.canonical())
            .collect();
        let got = enumerate_typed(&target, BOUND);
        let got_set: HashSet<Term> = got.iter().map(Term::canonical).collect();
        assert_eq!(got.len(), got_set.len(), "duplicates at {target}");
        assert_eq!(got.len(), want.len(), "count at {target}");
        assert_eq!(got_set, want, "terms at {target}");
    }
}

#[test]
fn closed_terms_and_types_match_brute_force() {
    let oracle: HashMap<Term, Type> = typed_closed(BOUND)
        .into_iter()
        .map(|(t, ty)| (t.canonical(), ty))
        .collect();
    let ours = Enumerator::new().closed(BOUND);
    assert_eq!(ours.len(), oracle.len());
    for (t, ty) in &ours {
        assert_eq!(oracle.get(&t.canonical()), Some(ty), "{t}");
    }
}

#[test]
fn checker_agrees_with_the_typing_relation_on_all_raw_terms() {
    let ctx = small_context();
    let mut memo = HashMap::new();
    let mut typed = 0;
    for n in 1..=4 {
        for t in raw(0, n, &mut memo) {
            let ours = synthesize(&ctx, &t).ok();
            let theirs = least_type(&mut Vec::new(), &t);
            assert_eq!(ours, theirs, "{t}");
            typed += theirs.is_some() as usize;
        }
    }
    assert!(typed > 100);
}

#[test]
fn enumeration_sizes_grow_and_stay_ordered() {
    let mut e = Enumerator::new();
    let counts: Vec<usize> = (1..=6).map(|n| e.synthesizing(&[], n).len()).collect();
    assert!(counts.windows(2).all(|w| w[0] < w[1]), "{counts:?}");
    let sizes: BTreeSet<usize> = e.closed(6).iter().map(|(t, _)| t.size()).collect();
    assert_eq!(sizes, (1..=6).collect());
}
