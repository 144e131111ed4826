//! The reduction relation: redexes, single steps, strategies and traces.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::syntax::{fresh_name, Name, Path, Term, Type};

/// Step budget used when none is given.
pub const DEFAULT_FUEL: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Rule {
    /// `(\x. M) N -> M[x := N]`
    Beta,
    /// `\x. M x -> M` when `x` is not free in `M`
    Eta,
    /// `handle {.., eta -> H} (eta N) -> H N`
    BananaEta,
    /// A handled operation: the clause receives the parameter and the
    /// continuation with the handler pushed inside.
    BananaOp,
    /// An unhandled operation is re-emitted with the handler pushed inside.
    BananaOpForward,
    /// `extract (eta M) -> M`
    Cherry,
    /// `commute (\x. eta M) -> eta (\x. M)`
    CEta,
    /// `commute (\x. do op(P, \y. M)) -> do op(P, \y. commute (\x. M))` when
    /// `x` is not free in `P`
    COp,
}

impl Rule {
    pub const ALL: [Rule; 8] = [
        Rule::Beta,
        Rule::Eta,
        Rule::BananaEta,
        Rule::BananaOp,
        Rule::BananaOpForward,
        Rule::Cherry,
        Rule::CEta,
        Rule::COp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Beta => "beta",
            Rule::Eta => "eta",
            Rule::BananaEta => "bananaEta",
            Rule::BananaOp => "bananaOp",
            Rule::BananaOpForward => "bananaOpForward",
            Rule::Cherry => "cherry",
            Rule::CEta => "cEta",
            Rule::COp => "cOp",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Contracts the term at its root, if it is a redex.
pub fn contract(t: &Term) -> Option<(Rule, Term)> {
    match t {
        Term::App(f, n) => match &**f {
            Term::Abs { binder, body, .. } => Some((Rule::Beta, body.subst(binder, n))),
            _ => None,
        },
        Term::Abs { binder, body, .. } => match &**body {
            Term::App(m, x) if matches!(&**x, Term::Var(y) if y == binder) && !m.has_free(binder) => {
                Some((Rule::Eta, (**m).clone()))
            }
            _ => None,
        },
        Term::Handle(h, scrutinee) => match &**scrutinee {
            Term::Eta(n) => Some((Rule::BananaEta, Term::app(h.eta().clone(), (**n).clone()))),
            Term::Op {
                op,
                param,
                binder,
                cont,
            } => {
                // The continuation binder must not capture free variables of
                // the handler once the handler moves under it.
                let mut avoid = h.free_vars();
                let x = if avoid.contains(binder) {
                    avoid.extend(cont.free_vars());
                    fresh_name(binder, &avoid)
                } else {
                    binder.clone()
                };
                let cont = if &x == binder {
                    (**cont).clone()
                } else {
                    cont.rename_free(binder, &x)
                };
                let handled = Term::Handle(h.clone(), Box::new(cont));
                match h.clause(op) {
                    Some(clause) => {
                        let k = Term::Abs {
                            binder: x,
                            ann: continuation_domain(clause),
                            body: Box::new(handled),
                        };
                        Some((
                            Rule::BananaOp,
                            Term::apps(clause.clone(), [(**param).clone(), k]),
                        ))
                    }
                    None => Some((
                        Rule::BananaOpForward,
                        Term::Op {
                            op: op.clone(),
                            param: param.clone(),
                            binder: x,
                            cont: Box::new(handled),
                        },
                    )),
                }
            }
            _ => None,
        },
        Term::Extract(m) => match &**m {
            Term::Eta(v) => Some((Rule::Cherry, (**v).clone())),
            _ => None,
        },
        Term::Commute(m) => match &**m {
            Term::Abs { binder, ann, body } => match &**body {
                Term::Eta(v) => Some((
                    Rule::CEta,
                    Term::eta(Term::Abs {
                        binder: binder.clone(),
                        ann: ann.clone(),
                        body: v.clone(),
                    }),
                )),
                Term::Op {
                    op,
                    param,
                    binder: y,
                    cont,
                } if !param.has_free(binder) => {
                    let (y, cont) = if y == binder {
                        let mut avoid = cont.free_vars();
                        avoid.insert(binder.clone());
                        let fresh = fresh_name(y, &avoid);
                        let renamed = cont.rename_free(y, &fresh);
                        (fresh, renamed)
                    } else {
                        (y.clone(), (**cont).clone())
                    };
                    Some((
                        Rule::COp,
                        Term::Op {
                            op: op.clone(),
                            param: param.clone(),
                            binder: y,
                            cont: Box::new(Term::commute(Term::Abs {
                                binder: binder.clone(),
                                ann: ann.clone(),
                                body: Box::new(cont),
                            })),
                        },
                    ))
                }
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

/// For an annotated clause `\x (k : B -> C). ..`, the type `B`; used to keep
/// the continuation handed to the clause annotated.
fn continuation_domain(clause: &Term) -> Option<Type> {
    if let Term::Abs { body, .. } = clause {
        if let Term::Abs {
            ann: Some(Type::Fun(dom, _)),
            ..
        } = &**body
        {
            return Some((**dom).clone());
        }
    }
    None
}

/// Redex positions in pre-order; the first one is leftmost-outermost.
pub fn redexes(t: &Term) -> Vec<(Rule, Path)> {
    let mut out = Vec::new();
    collect_redexes(t, &mut Vec::new(), &mut out);
    out
}

fn collect_redexes(t: &Term, path: &mut Vec<usize>, out: &mut Vec<(Rule, Path)>) {
    if let Some(rule) = redex_rule(t) {
        out.push((rule, Path(path.clone())));
    }
    for (i, c) in t.children().into_iter().enumerate() {
        path.push(i);
        collect_redexes(c, path, out);
        path.pop();
    }
}

/// The rule applying at the root, without building the reduct.
fn redex_rule(t: &Term) -> Option<Rule> {
    match t {
        Term::App(f, _) if matches!(**f, Term::Abs { .. }) => Some(Rule::Beta),
        Term::Abs { binder, body, .. } => match &**body {
            Term::App(m, x) if matches!(&**x, Term::Var(y) if y == binder) && !m.has_free(binder) => {
                Some(Rule::Eta)
            }
            _ => None,
        },
        Term::Handle(h, s) => match &**s {
            Term::Eta(_) => Some(Rule::BananaEta),
            Term::Op { op, .. } if h.handles(op) => Some(Rule::BananaOp),
            Term::Op { .. } => Some(Rule::BananaOpForward),
            _ => None,
        },
        Term::Extract(m) if matches!(**m, Term::Eta(_)) => Some(Rule::Cherry),
        Term::Commute(m) => match &**m {
            Term::Abs { binder, body, .. } => match &**body {
                Term::Eta(_) => Some(Rule::CEta),
                Term::Op { param, .. } if !param.has_free(binder) => Some(Rule::COp),
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

/// Contracts the redex at `path`.
pub fn contract_at(t: &Term, path: &Path) -> Option<(Rule, Term)> {
    contract_at_slice(t, &path.0)
}

fn contract_at_slice(t: &Term, path: &[usize]) -> Option<(Rule, Term)> {
    match path.split_first() {
        None => contract(t),
        Some((&i, rest)) => {
            let (rule, new) = contract_at_slice(t.child(i)?, rest)?;
            Some((rule, t.with_child(i, new)))
        }
    }
}

/// All one-step reducts.
pub fn reducts(t: &Term) -> Vec<(Rule, Path, Term)> {
    redexes(t)
        .into_iter()
        .map(|(_, p)| {
            let (rule, new) = contract_at(t, &p).expect("redex positions contract");
            (rule, p, new)
        })
        .collect()
}

fn lo_step(t: &Term, path: &mut Vec<usize>) -> Option<(Rule, Term)> {
    if let Some(r) = contract(t) {
        return Some(r);
    }
    for (i, c) in t.children().into_iter().enumerate() {
        path.push(i);
        if let Some((rule, new)) = lo_step(c, path) {
            return Some((rule, t.with_child(i, new)));
        }
        path.pop();
    }
    None
}

/// Why a term without redexes is not a proper normal form.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum StuckReason {
    /// `commute (\x. do op(P, ..))` with `x` free in `P`.
    CommuteBlocked { var: Name, op: Name },
    /// `commute (\x. N)` where `N` is neither `eta` nor an operation and
    /// cannot become one because its head is `x`.
    CommuteNeutral { var: Name },
    /// `extract` applied to a computation that still performs `op`.
    ExtractOfOperation { op: Name },
}

impl fmt::Display for StuckReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StuckReason::CommuteBlocked { var, op } => write!(
                f,
                "commute is blocked: the parameter of `{op}` depends on the bound variable `{var}`"
            ),
            StuckReason::CommuteNeutral { var } => write!(
                f,
                "commute is blocked: its body is headed by the bound variable `{var}`"
            ),
            StuckReason::ExtractOfOperation { op } => {
                write!(f, "extract applied to a computation performing `{op}`")
            }
        }
    }
}

/// The variable at the head of an elimination spine, if any.
fn neutral_head(t: &Term) -> Option<&Name> {
    match t {
        Term::Var(x) => Some(x),
        Term::App(f, _) => neutral_head(f),
        Term::Extract(m) | Term::Commute(m) | Term::Handle(_, m) => neutral_head(m),
        _ => None,
    }
}

/// The first blocked `commute` or `extract` in pre-order.
///
/// A `commute` whose body is neither `eta` nor an operation is blocked when
/// the body's head is a variable bound by a `commute`: no substitution can
/// ever unblock it. Heads bound by ordinary abstractions are open terms.
pub fn stuck_site(t: &Term) -> Option<(Path, StuckReason)> {
    fn commute_bound(binders: &[(Name, bool)], x: &Name) -> bool {
        binders.iter().rev().find(|(n, _)| n == x).is_some_and(|(_, c)| *c)
    }
    fn go(
        t: &Term,
        path: &mut Vec<usize>,
        binders: &mut Vec<(Name, bool)>,
        commuted: bool,
    ) -> Option<(Path, StuckReason)> {
        match t {
            Term::Commute(m) => {
                if let Term::Abs { binder, body, .. } = &**m {
                    match &**body {
                        Term::Op { op, param, .. } => {
                            if param.has_free(binder) {
                                return Some((
                                    Path(path.clone()),
                                    StuckReason::CommuteBlocked {
                                        var: binder.clone(),
                                        op: op.clone(),
                                    },
                                ));
                            }
                        }
                        Term::Eta(_) => {}
                        other => {
                            if let Some(x) = neutral_head(other) {
                                if x == binder || commute_bound(binders, x) {
                                    return Some((
                                        Path(path.clone()),
                                        StuckReason::CommuteNeutral { var: x.clone() },
                                    ));
                                }
                            }
                        }
                    }
                }
            }
            Term::Extract(m) => {
                if let Term::Op { op, .. } = &**m {
                    return Some((
                        Path(path.clone()),
                        StuckReason::ExtractOfOperation { op: op.clone() },
                    ));
                }
            }
            _ => {}
        }
        for (i, c) in t.children().into_iter().enumerate() {
            let bound = match t {
                Term::Abs { binder, .. } => Some((binder.clone(), commuted)),
                Term::Op { binder, .. } if i == 1 => Some((binder.clone(), false)),
                _ => None,
            };
            let pushed = bound.is_some();
            binders.extend(bound);
            path.push(i);
            let r = go(c, path, binders, matches!(t, Term::Commute(_)));
            path.pop();
            if pushed {
                binders.pop();
            }
            if r.is_some() {
                return r;
            }
        }
        None
    }
    go(t, &mut Vec::new(), &mut Vec::new(), false)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Always contract the first redex in pre-order.
    LeftmostOutermost,
    /// Pick uniformly among all redexes using a seeded generator.
    RandomSeeded(u64),
    /// Explore the full reduction graph and report the path to its unique
    /// normal form, or `NotConfluent` when there is more than one.
    ExhaustiveCheck,
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy::LeftmostOutermost
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    NormalForm,
    Stuck { path: Path, reason: StuckReason },
    FuelExhausted,
    /// Only from [`Strategy::ExhaustiveCheck`]: the graph has this many
    /// distinct terminal terms.
    NotConfluent { normal_forms: usize },
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::NormalForm => f.write_str("normal form"),
            Outcome::Stuck { path, reason } => write!(f, "stuck at {path}: {reason}"),
            Outcome::FuelExhausted => f.write_str("fuel exhausted"),
            Outcome::NotConfluent { normal_forms } => {
                write!(f, "not confluent: {normal_forms} distinct normal forms")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub rule: Rule,
    pub path: Path,
    pub term: Term,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    /// The input with ascriptions removed.
    pub start: Term,
    pub steps: Vec<Step>,
    pub outcome: Outcome,
}

/// One line of the structured trace stream.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
#[serde(tag = "record", rename_all = "camelCase")]
pub enum TraceRecord {
    Start {
        term: String,
    },
    Step {
        n: usize,
        rule: Rule,
        path: String,
        term: String,
    },
    #[serde(rename_all = "camelCase")]
    Outcome {
        outcome: &'static str,
        steps: usize,
        term: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        path: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        reason: Option<StuckReason>,
        #[serde(skip_serializing_if = "Option::is_none")]
        normal_forms: Option<usize>,
    },
}

impl Trace {
    /// The last term reached.
    pub fn result(&self) -> &Term {
        self.steps.last().map(|s| &s.term).unwrap_or(&self.start)
    }

    /// One `<n> <rule> @ <path> ⊢ <term>` line per step, then the outcome.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            out.push_str(&format!("{} {} @ {} ⊢ {}\n", i + 1, s.rule, s.path, s.term));
        }
        out.push_str(&format!("{}\n", self.outcome));
        out
    }

    pub fn records(&self) -> Vec<TraceRecord> {
        let mut out = vec![TraceRecord::Start {
            term: self.start.to_string(),
        }];
        for (i, s) in self.steps.iter().enumerate() {
            out.push(TraceRecord::Step {
                n: i + 1,
                rule: s.rule,
                path: s.path.to_string(),
                term: s.term.to_string(),
            });
        }
        out.push(self.outcome_record());
        out
    }

    pub fn outcome_record(&self) -> TraceRecord {
        let (outcome, path, reason, normal_forms) = match &self.outcome {
            Outcome::NormalForm => ("normalForm", None, None, None),
            Outcome::Stuck { path, reason } => {
                ("stuck", Some(path.to_string()), Some(reason.clone()), None)
            }
            Outcome::FuelExhausted => ("fuelExhausted", None, None, None),
            Outcome::NotConfluent { normal_forms } => {
                ("notConfluent", None, None, Some(*normal_forms))
            }
        };
        TraceRecord::Outcome {
            outcome,
            steps: self.steps.len(),
            term: self.result().to_string(),
            path,
            reason,
            normal_forms,
        }
    }
}

fn finish(t: &Term) -> Outcome {
    match stuck_site(t) {
        Some((path, reason)) => Outcome::Stuck { path, reason },
        None => Outcome::NormalForm,
    }
}

/// Reduces `t` under `strategy`, taking at most `fuel` steps (for
/// `ExhaustiveCheck`, exploring at most `fuel` distinct terms).
pub fn normalize(t: &Term, strategy: Strategy, fuel: usize) -> Trace {
    let start = t.strip_ascriptions();
    match strategy {
        Strategy::LeftmostOutermost => run(start, fuel, |t| {
            let mut path = Vec::new();
            lo_step(t, &mut path).map(|(rule, term)| (rule, Path(path), term))
        }),
        Strategy::RandomSeeded(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            run(start, fuel, move |t| {
                let rs = redexes(t);
                if rs.is_empty() {
                    return None;
                }
                let (_, path) = rs[rng.gen_range(0..rs.len())].clone();
                let (rule, term) = contract_at(t, &path).expect("redex positions contract");
                Some((rule, path, term))
            })
        }
        Strategy::ExhaustiveCheck => exhaustive(start, fuel),
    }
}

fn run(
    start: Term,
    fuel: usize,
    mut step: impl FnMut(&Term) -> Option<(Rule, Path, Term)>,
) -> Trace {
    let mut steps: Vec<Step> = Vec::new();
    let mut cur = start.clone();
    loop {
        match step(&cur) {
            None => {
                let outcome = finish(&cur);
                return Trace {
                    start,
                    steps,
                    outcome,
                };
            }
            Some(_) if steps.len() >= fuel => {
                return Trace {
                    start,
                    steps,
                    outcome: Outcome::FuelExhausted,
                }
            }
            Some((rule, path, term)) => {
                cur = term.clone();
                steps.push(Step { rule, path, term });
            }
        }
    }
}

fn exhaustive(start: Term, budget: usize) -> Trace {
    let graph = crate::verify::reduction_graph(&start, budget);
    if graph.budget_exhausted {
        return Trace {
            start,
            steps: Vec::new(),
            outcome: Outcome::FuelExhausted,
        };
    }
    match graph.normal_forms.len() {
        1 => {
            let target = graph.normal_forms[0];
            let steps = graph
                .path_to(target)
                .into_iter()
                .map(|(rule, path, node)| Step {
                    rule,
                    path,
                    term: graph.nodes[node].clone(),
                })
                .collect();
            let outcome = finish(&graph.nodes[target]);
            Trace {
                start,
                steps,
                outcome,
            }
        }
        0 => Trace {
            start,
            steps: Vec::new(),
            outcome: Outcome::FuelExhausted,
        },
        n => Trace {
            start,
            steps: Vec::new(),
            outcome: Outcome::NotConfluent { normal_forms: n },
        },
    }
}

/// Leftmost-outermost normalization without recording a trace.
pub fn normal_form(t: &Term, fuel: usize) -> (Term, Outcome) {
    let mut cur = t.strip_ascriptions();
    for _ in 0..=fuel {
        match lo_step(&cur, &mut Vec::new()) {
            Some((_, next)) => cur = next,
            None => {
                let o = finish(&cur);
                return (cur, o);
            }
        }
    }
    (cur, Outcome::FuelExhausted)
}

/// Contracts every eta redex, innermost first.
pub fn eta_normalize(t: &Term) -> Term {
    t.map_bottom_up(&mut |t| match contract(&t) {
        Some((Rule::Eta, m)) => m,
        _ => t,
    })
}

/// Alpha-equivalence after erasing annotations and eta-normalizing.
pub fn same_up_to_eta(a: &Term, b: &Term) -> bool {
    eta_normalize(&a.erase()).alpha_eq(&eta_normalize(&b.erase()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Handler;

    fn speaker_handler() -> Handler {
        let clause = Term::lam("x", Term::lam("k", Term::app(Term::var("k"), Term::cst("s"))));
        Handler::with_default_eta([(Name::new("speaker"), clause)]).unwrap()
    }

    fn me() -> Term {
        Term::op("speaker", Term::unit(), "x", Term::eta(Term::var("x")))
    }

    #[test]
    fn beta_at_root() {
        let t = Term::app(Term::lam("x", Term::var("x")), Term::cst("c"));
        let rs = reducts(&t);
        assert_eq!(rs, vec![(Rule::Beta, Path::root(), Term::cst("c"))]);
    }

    #[test]
    fn commute_of_its_own_variable_is_stuck() {
        let t = Term::commute(Term::lam("x", Term::var("x")));
        assert_eq!(
            normalize(&t, Strategy::LeftmostOutermost, 10).outcome,
            Outcome::Stuck {
                path: Path::root(),
                reason: StuckReason::CommuteNeutral { var: Name::new("x") },
            }
        );
        let open = Term::lam("y", Term::commute(Term::lam("x", Term::app(Term::var("y"), Term::var("x")))));
        assert_eq!(stuck_site(&open), None);
        let nested = Term::commute(Term::lam("x", Term::commute(Term::lam("z", Term::var("x")))));
        assert_eq!(
            stuck_site(&nested),
            Some((Path(vec![0, 0]), StuckReason::CommuteNeutral { var: Name::new("x") }))
        );
    }

    #[test]
    fn commute_blocked_by_parameter() {
        let t = Term::commute(Term::lam(
            "x",
            Term::op("speaker", Term::var("x"), "y", Term::eta(Term::var("y"))),
        ));
        assert!(reducts(&t).is_empty());
        let trace = normalize(&t, Strategy::LeftmostOutermost, DEFAULT_FUEL);
        assert_eq!(
            trace.outcome,
            Outcome::Stuck {
                path: Path::root(),
                reason: StuckReason::CommuteBlocked {
                    var: "x".into(),
                    op: "speaker".into()
                }
            }
        );
    }

    #[test]
    fn with_speaker_step() {
        let t = Term::handle(speaker_handler(), me());
        let rs = reducts(&t);
        assert_eq!(rs.len(), 1);
        let (rule, path, r) = &rs[0];
        assert_eq!((*rule, path.clone()), (Rule::BananaOp, Path::root()));
        let want = Term::apps(
            Term::lam("x", Term::lam("k", Term::app(Term::var("k"), Term::cst("s")))),
            [
                Term::unit(),
                Term::lam("x", Term::handle(speaker_handler(), Term::eta(Term::var("x")))),
            ],
        );
        assert!(r.alpha_eq(&want));
        let nf = normalize(&t, Strategy::LeftmostOutermost, 100);
        assert_eq!(nf.outcome, Outcome::NormalForm);
        assert!(nf.result().alpha_eq(&Term::eta(Term::cst("s"))));
    }

    #[test]
    fn forwarding_pushes_the_handler_inside() {
        let h = Handler::with_default_eta([(
            Name::new("other"),
            Term::lam("p", Term::lam("k", Term::app(Term::var("k"), Term::var("p")))),
        )])
        .unwrap();
        let t = Term::handle(h.clone(), me());
        let (rule, r) = contract(&t).unwrap();
        assert_eq!(rule, Rule::BananaOpForward);
        let want = Term::op(
            "speaker",
            Term::unit(),
            "x",
            Term::handle(h, Term::eta(Term::var("x"))),
        );
        assert!(r.alpha_eq(&want));
    }

    #[test]
    fn handler_binder_renamed_away_from_clause_variables() {
        // the clause mentions a free `x`; the continuation binder is also `x`
        let h = Handler::with_default_eta([(
            Name::new("speaker"),
            Term::lam("p", Term::lam("k", Term::app(Term::var("k"), Term::var("x")))),
        )])
        .unwrap();
        let t = Term::handle(h, me());
        let (_, r) = contract(&t).unwrap();
        assert!(r.free_vars().contains("x"));
        let (_, nf) = {
            let (t, o) = normal_form(&r, 100);
            (o, t)
        };
        assert!(nf.alpha_eq(&Term::eta(Term::var("x"))), "{nf}");
    }

    #[test]
    fn c_eta_and_cherry() {
        let t = Term::commute(Term::lam("x", Term::eta(Term::var("x"))));
        let trace = normalize(&t, Strategy::LeftmostOutermost, 10);
        assert!(trace
            .result()
            .alpha_eq(&Term::eta(Term::lam("x", Term::var("x")))));
        let t = Term::extract(Term::eta(Term::cst("j")));
        assert_eq!(normal_form(&t, 10), (Term::cst("j"), Outcome::NormalForm));
    }

    #[test]
    fn c_op_renames_a_shadowing_binder() {
        // commute (\x. do o(c, \x. eta x)): the inner x is the operation's result
        let t = Term::commute(Term::lam(
            "x",
            Term::op("o", Term::cst("c"), "x", Term::eta(Term::var("x"))),
        ));
        let (rule, r) = contract(&t).unwrap();
        assert_eq!(rule, Rule::COp);
        let want = Term::op(
            "o",
            Term::cst("c"),
            "y",
            Term::commute(Term::lam("x", Term::eta(Term::var("y")))),
        );
        assert!(r.alpha_eq(&want), "{r}");
    }

    #[test]
    fn extract_of_operation_is_stuck() {
        let t = Term::extract(me());
        assert!(matches!(
            normalize(&t, Strategy::LeftmostOutermost, 10).outcome,
            Outcome::Stuck {
                reason: StuckReason::ExtractOfOperation { .. },
                ..
            }
        ));
    }

    #[test]
    fn fuel_exhaustion_on_omega() {
        let w = Term::lam("x", Term::app(Term::var("x"), Term::var("x")));
        let omega = Term::app(w.clone(), w);
        let trace = normalize(&omega, Strategy::LeftmostOutermost, 50);
        assert_eq!(trace.outcome, Outcome::FuelExhausted);
        assert_eq!(trace.steps.len(), 50);
        assert_eq!(normal_form(&omega, 50).1, Outcome::FuelExhausted);
    }

    #[test]
    fn strategies_agree_and_are_deterministic() {
        let t = Term::handle(
            speaker_handler(),
            Term::app(Term::lam("y", Term::var("y")), me()),
        );
        let lo = normalize(&t, Strategy::LeftmostOutermost, 100);
        for seed in 0..10 {
            let r1 = normalize(&t, Strategy::RandomSeeded(seed), 100);
            let r2 = normalize(&t, Strategy::RandomSeeded(seed), 100);
            assert_eq!(r1, r2);
            assert!(r1.result().alpha_eq(lo.result()));
        }
        let ex = normalize(&t, Strategy::ExhaustiveCheck, 1000);
        assert_eq!(ex.outcome, Outcome::NormalForm);
        assert!(ex.result().alpha_eq(lo.result()));
    }

    #[test]
    fn consecutive_steps_replay() {
        let t = Term::handle(speaker_handler(), me());
        let trace = normalize(&t, Strategy::LeftmostOutermost, 100);
        let mut cur = trace.start.clone();
        for s in &trace.steps {
            let (rule, next) = contract_at(&cur, &s.path).unwrap();
            assert_eq!(rule, s.rule);
            assert_eq!(next, s.term);
            cur = next;
        }
    }

    #[test]
    fn trace_text_format() {
        let t = Term::extract(Term::eta(Term::cst("j")));
        let text = normalize(&t, Strategy::LeftmostOutermost, 10).to_text();
        assert_eq!(text, "1 cherry @ ε ⊢ j\nnormal form\n");
    }

    #[test]
    fn eta_normalization() {
        let t = Term::eta(Term::lam("x", Term::app(Term::cst("man"), Term::var("x"))));
        assert_eq!(eta_normalize(&t), Term::eta(Term::cst("man")));
        let keep = Term::lam("x", Term::app(Term::var("x"), Term::var("x")));
        assert_eq!(eta_normalize(&keep), keep);
    }
}
