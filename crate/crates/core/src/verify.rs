//! Typed term enumeration, reduction graphs and property suites.
//!
//! Everything here runs over a deliberately tiny signature ([`small_signature`])
//! so that exhaustive enumeration and full reduction graphs stay cheap.
//!
//! The enumerated language fixes its binder annotations to a finite set
//! ([`annotations`]). Handlers are generated without operation clauses: the
//! smallest handler with a clause has size 11, above the bounds where
//! exhaustive enumeration is practical. The random sampler covers clauses.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::prelude::bind;
use crate::reduce::{normal_form, normalize, reducts, stuck_site, Outcome, Rule, Strategy};
use crate::surface::print_term;
use crate::syntax::{EffectRow, Handler, Name, OpSig, Path, Term, Type, UNIT_VALUE};
use crate::typecheck::{check_against, subtype, synthesize, Signature, TypingContext};

pub const ASK: &str = "ask";
pub const TELL: &str = "tell";

fn a() -> Type {
    Type::atom("a")
}

fn b() -> Type {
    Type::atom("b")
}

/// Atoms `a`, `b`; constants `c : a`, `d : b`; operations `ask : a ~> b`
/// and `tell : b ~> a`.
pub fn small_signature() -> Signature {
    let mut sig = Signature::new();
    sig.declare_atom(Name::new("a")).unwrap();
    sig.declare_atom(Name::new("b")).unwrap();
    sig.declare_constant(Name::new("c"), a()).unwrap();
    sig.declare_constant(Name::new("d"), b()).unwrap();
    sig.declare_operation(Name::new(ASK), OpSig { input: a(), output: b() })
        .unwrap();
    sig.declare_operation(Name::new(TELL), OpSig { input: b(), output: a() })
        .unwrap();
    sig
}

pub fn small_context() -> TypingContext {
    TypingContext::new(small_signature())
}

/// Binder annotations available to enumerated terms.
pub fn annotations() -> Vec<Type> {
    vec![
        a(),
        b(),
        Type::fun(a(), b()),
        Type::comp::<[&str; 0], &str>([], a()),
        Type::comp([ASK], b()),
    ]
}

fn var_name(i: usize) -> Name {
    Name::new(&format!("x{i}"))
}

type Bucket = Arc<Vec<(Term, Type)>>;

/// Memoized, syntax-directed enumeration of well-typed terms.
///
/// Terms are produced together with their synthesized type. Bound variables
/// are named by binding depth, so every alpha class appears exactly once.
pub struct Enumerator {
    sig: Signature,
    annotations: Vec<Type>,
    memo: HashMap<(Vec<Type>, usize), Bucket>,
}

impl Default for Enumerator {
    fn default() -> Self {
        Enumerator::new()
    }
}

impl Enumerator {
    pub fn new() -> Self {
        Enumerator {
            sig: small_signature(),
            annotations: annotations(),
            memo: HashMap::new(),
        }
    }

    /// All terms of exactly `size` nodes that synthesize a type in `ctx`,
    /// where `ctx[i]` is the type of variable `x{i}`.
    pub fn synthesizing(&mut self, ctx: &[Type], size: usize) -> Bucket {
        let key = (ctx.to_vec(), size);
        if let Some(b) = self.memo.get(&key) {
            return b.clone();
        }
        let out = Arc::new(self.build(ctx, size));
        self.memo.insert(key, out.clone());
        out
    }

    fn build(&mut self, ctx: &[Type], n: usize) -> Vec<(Term, Type)> {
        let mut out = Vec::new();
        if n == 0 {
            return out;
        }
        if n == 1 {
            for (i, ty) in ctx.iter().enumerate() {
                out.push((Term::Var(var_name(i)), ty.clone()));
            }
            for (c, ty) in self.sig.constants() {
                if c.as_str() != UNIT_VALUE {
                    out.push((Term::Const(c.clone()), ty.clone()));
                }
            }
            return out;
        }
        let x = var_name(ctx.len());
        let extend = |t: &Type| {
            let mut c = ctx.to_vec();
            c.push(t.clone());
            c
        };

        for ann in self.annotations.clone() {
            for (body, cod) in self.synthesizing(&extend(&ann), n - 1).iter() {
                out.push((
                    Term::Abs {
                        binder: x.clone(),
                        ann: Some(ann.clone()),
                        body: Box::new(body.clone()),
                    },
                    Type::fun(ann.clone(), cod.clone()),
                ));
            }
        }

        for (m, ty) in self.synthesizing(ctx, n - 1).iter() {
            out.push((Term::eta(m.clone()), Type::Comp(EffectRow::new(), Box::new(ty.clone()))));
            match ty {
                Type::Comp(row, inner) if row.is_empty() => {
                    out.push((Term::extract(m.clone()), (**inner).clone()));
                }
                Type::Fun(dom, cod) => {
                    if let Type::Comp(row, res) = &**cod {
                        out.push((
                            Term::commute(m.clone()),
                            Type::Comp(row.clone(), Box::new(Type::Fun(dom.clone(), res.clone()))),
                        ));
                    }
                }
                _ => {}
            }
        }

        for i in 1..n - 1 {
            let fs = self.synthesizing(ctx, i);
            if !fs.iter().any(|(_, t)| matches!(t, Type::Fun(..))) {
                continue;
            }
            let args = self.synthesizing(ctx, n - 1 - i);
            for (f, fty) in fs.iter() {
                let Type::Fun(dom, cod) = fty else { continue };
                for (arg, aty) in args.iter() {
                    if subtype(aty, dom) {
                        out.push((Term::app(f.clone(), arg.clone()), (**cod).clone()));
                    }
                }
            }
        }

        let ops: Vec<(Name, OpSig)> = self
            .sig
            .operations()
            .iter()
            .map(|(n, s)| (n.clone(), s.clone()))
            .collect();
        for (op, sig) in &ops {
            for i in 1..n - 1 {
                let params = self.synthesizing(ctx, i);
                let conts = self.synthesizing(&extend(&sig.output), n - 1 - i);
                for (p, pty) in params.iter() {
                    if !subtype(pty, &sig.input) {
                        continue;
                    }
                    for (k, kty) in conts.iter() {
                        if let Type::Comp(row, res) = kty {
                            let mut row = row.clone();
                            row.insert(op.clone());
                            out.push((
                                Term::Op {
                                    op: op.clone(),
                                    param: Box::new(p.clone()),
                                    binder: x.clone(),
                                    cont: Box::new(k.clone()),
                                },
                                Type::Comp(row, res.clone()),
                            ));
                        }
                    }
                }
            }
        }

        // handle {} (\x:A. body) scrutinee, of size 2 + |body| + |scrutinee|.
        for si in 1..n.saturating_sub(2) {
            let scruts = self.synthesizing(ctx, si);
            for ann in self.annotations.clone() {
                let bodies = self.synthesizing(&extend(&ann), n - 2 - si);
                for (m, mty) in scruts.iter() {
                    let Type::Comp(residual, gamma) = mty else { continue };
                    if !subtype(gamma, &ann) {
                        continue;
                    }
                    for (body, bty) in bodies.iter() {
                        let Type::Comp(row, delta) = bty else { continue };
                        let clause = Term::Abs {
                            binder: x.clone(),
                            ann: Some(ann.clone()),
                            body: Box::new(body.clone()),
                        };
                        let mut row = row.clone();
                        row.extend(residual.iter().cloned());
                        out.push((bind(m.clone(), clause), Type::Comp(row, delta.clone())));
                    }
                }
            }
        }
        out
    }

    /// Closed terms of size `1..=size_bound` with their types, ordered by size.
    pub fn closed(&mut self, size_bound: usize) -> Vec<(Term, Type)> {
        (1..=size_bound)
            .flat_map(|n| self.synthesizing(&[], n).iter().cloned().collect::<Vec<_>>())
            .collect()
    }

    /// Closed terms of size at most `size_bound` that check against `target`,
    /// ordered by size. Each is re-checked with the type checker.
    pub fn typed(&mut self, target: &Type, size_bound: usize) -> Vec<Term> {
        let ctx = TypingContext::new(self.sig.clone());
        self.closed(size_bound)
            .into_iter()
            .filter(|(_, ty)| subtype(ty, target))
            .map(|(t, _)| {
                if let Err(e) = check_against(&ctx, &t, target) {
                    panic!("enumerated term {t} fails to check: {e}");
                }
                t
            })
            .collect()
    }
}

/// Exhaustive enumeration of closed terms at `target`, up to `size_bound`.
pub fn enumerate_typed(target: &Type, size_bound: usize) -> Vec<Term> {
    Enumerator::new().typed(target, size_bound)
}

/// Seeded random generator of well-typed closed terms.
pub struct Sampler {
    rng: ChaCha8Rng,
    sig: Signature,
    max_depth: usize,
}

impl Sampler {
    pub fn new(seed: u64, stream: u64, max_depth: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Sampler {
            rng,
            sig: small_signature(),
            max_depth,
        }
    }

    fn row(&mut self) -> EffectRow {
        [ASK, TELL]
            .into_iter()
            .filter(|_| self.rng.gen_bool(0.5))
            .map(Name::new)
            .collect()
    }

    fn atom(&mut self) -> Type {
        if self.rng.gen_bool(0.5) {
            a()
        } else {
            b()
        }
    }

    /// A random type of small size.
    pub fn ty(&mut self) -> Type {
        match self.rng.gen_range(0..8) {
            0 => self.atom(),
            1 => Type::fun(self.atom(), self.atom()),
            2 => {
                let r = self.row();
                let d = self.atom();
                Type::fun(self.atom(), Type::Comp(r, Box::new(d)))
            }
            3 => {
                let r = self.row();
                Type::Comp(r, Box::new(Type::fun(self.atom(), self.atom())))
            }
            _ => {
                let r = self.row();
                Type::Comp(r, Box::new(self.atom()))
            }
        }
    }

    /// A random computation type whose row avoids `excluded`.
    pub fn computation_type(&mut self, excluded: &[&str]) -> Type {
        let mut r = self.row();
        r.retain(|op| !excluded.contains(&op.as_str()));
        let inner = if self.rng.gen_bool(0.25) {
            Type::fun(self.atom(), self.atom())
        } else {
            self.atom()
        };
        Type::Comp(r, Box::new(inner))
    }

    /// A closed term checking against `ty`, of depth at most `max_depth`.
    pub fn term(&mut self, ty: &Type) -> Term {
        let t = self.gen(&mut Vec::new(), ty, self.max_depth.max(min_depth(ty)));
        debug_assert!(t.depth() <= self.max_depth.max(min_depth(ty)));
        t
    }

    fn fresh(ctx: &[(Name, Type)]) -> Name {
        var_name(ctx.len())
    }

    /// A smallest term of type `ty`: a variable if one fits exactly,
    /// otherwise constants under abstractions and `eta`.
    fn minimal(&mut self, ctx: &mut Vec<(Name, Type)>, ty: &Type) -> Term {
        let vars: Vec<&Name> = ctx.iter().filter(|(_, t)| t == ty).map(|(n, _)| n).collect();
        if let Some(v) = vars.choose(&mut self.rng) {
            return Term::Var((*v).clone());
        }
        match ty {
            Type::Atom(n) if n.as_str() == "a" => Term::cst("c"),
            Type::Atom(_) => Term::cst("d"),
            Type::Fun(dom, cod) => {
                let (x, body) = self.under(ctx, dom, |s, c| s.minimal(c, cod));
                Term::Abs {
                    binder: x,
                    ann: Some((**dom).clone()),
                    body: Box::new(body),
                }
            }
            Type::Comp(_, inner) => Term::eta(self.minimal(ctx, inner)),
        }
    }

    fn under(
        &mut self,
        ctx: &mut Vec<(Name, Type)>,
        dom: &Type,
        f: impl FnOnce(&mut Self, &mut Vec<(Name, Type)>) -> Term,
    ) -> (Name, Term) {
        let x = Self::fresh(ctx);
        ctx.push((x.clone(), dom.clone()));
        let body = f(self, ctx);
        ctx.pop();
        (x, body)
    }

    fn value_type(&mut self) -> Type {
        if self.rng.gen_bool(0.8) {
            self.atom()
        } else {
            Type::fun(self.atom(), self.atom())
        }
    }

    /// A term of type `ty` and depth at most `depth`, which must be at
    /// least `min_depth(ty)`.
    fn gen(&mut self, ctx: &mut Vec<(Name, Type)>, ty: &Type, depth: usize) -> Term {
        if depth <= min_depth(ty) || self.rng.gen_bool(0.05) {
            return self.minimal(ctx, ty);
        }
        let d = depth - 1;
        let roll = self.rng.gen_range(0..20);
        let (app, extract) = match ty {
            Type::Atom(_) => (roll < 9, roll < 15),
            _ => (roll < 2, roll < 3),
        };
        if app {
            let dom = if self.rng.gen_bool(0.8) {
                self.atom()
            } else {
                let r = self.row();
                Type::Comp(r, Box::new(self.atom()))
            };
            let fty = Type::fun(dom.clone(), ty.clone());
            if d >= min_depth(&fty) && d >= min_depth(&dom) {
                let f = self.gen(ctx, &fty, d);
                let arg = self.gen(ctx, &dom, d);
                return Term::app(f, arg);
            }
        }
        if extract {
            let mty = Type::Comp(EffectRow::new(), Box::new(ty.clone()));
            if d >= min_depth(&mty) {
                return Term::extract(self.gen(ctx, &mty, d));
            }
        }
        match ty {
            Type::Atom(_) => self.minimal(ctx, ty),
            Type::Fun(dom, cod) => {
                let (x, body) = self.under(ctx, dom, |s, c| s.gen(c, cod, d));
                Term::Abs {
                    binder: x,
                    ann: Some((**dom).clone()),
                    body: Box::new(body),
                }
            }
            Type::Comp(row, inner) => match self.rng.gen_range(0..10) {
                2..=4 if !row.is_empty() => {
                    let ops: Vec<&Name> = row.iter().collect();
                    let op = (*ops.choose(&mut self.rng).unwrap()).clone();
                    let sig = self.sig.operation(&op).unwrap().clone();
                    let param = self.gen(ctx, &sig.input, d);
                    let (x, cont) = self.under(ctx, &sig.output, |s, c| s.gen(c, ty, d));
                    Term::Op {
                        op,
                        param: Box::new(param),
                        binder: x,
                        cont: Box::new(cont),
                    }
                }
                5 if matches!(**inner, Type::Fun(..)) && d >= 1 + min_depth(ty) => {
                    let Type::Fun(dom, res) = &**inner else { unreachable!() };
                    let want = Type::Comp(row.clone(), res.clone());
                    let (x, body) = self.under(ctx, dom, |s, c| s.gen(c, &want, d - 1));
                    Term::commute(Term::Abs {
                        binder: x,
                        ann: Some((**dom).clone()),
                        body: Box::new(body),
                    })
                }
                6..=9 if d >= 3 + min_depth(ty) => self.handler(ctx, row, ty, d),
                _ => Term::eta(self.gen(ctx, inner, d)),
            },
        }
    }

    /// `handle { .. } M` at type `ty`, with subterms of depth at most `d`.
    /// Clause bodies sit under two abstractions.
    fn handler(&mut self, ctx: &mut Vec<(Name, Type)>, row: &EffectRow, ty: &Type, d: usize) -> Term {
        let handled: EffectRow = self.row();
        let mut scrut_row: EffectRow = row.union(&handled).cloned().collect();
        scrut_row.retain(|_| self.rng.gen_bool(0.8));
        let gamma = self.value_type();
        let scrut = self.gen(ctx, &Type::Comp(scrut_row, Box::new(gamma.clone())), d);
        let (x, eta_body) = self.under(ctx, &gamma, |s, c| s.gen(c, ty, d - 1));
        let eta = Term::Abs {
            binder: x,
            ann: Some(gamma),
            body: Box::new(eta_body),
        };
        let mut clauses = Vec::new();
        for op in &handled {
            let sig = self.sig.operation(op).unwrap().clone();
            let k_ty = Type::fun(sig.output.clone(), ty.clone());
            let (p, k, body) = self.clause(ctx, &sig, &k_ty, ty, d - 2);
            let clause = Term::Abs {
                binder: p,
                ann: Some(sig.input.clone()),
                body: Box::new(Term::Abs {
                    binder: k,
                    ann: Some(k_ty),
                    body: Box::new(body),
                }),
            };
            clauses.push((op.clone(), clause));
        }
        Term::handle(Handler::new(clauses, eta).expect("distinct operations"), scrut)
    }

    fn clause(
        &mut self,
        ctx: &mut Vec<(Name, Type)>,
        sig: &OpSig,
        k_ty: &Type,
        ty: &Type,
        d: usize,
    ) -> (Name, Name, Term) {
        let p = Self::fresh(ctx);
        ctx.push((p.clone(), sig.input.clone()));
        let k = Self::fresh(ctx);
        ctx.push((k.clone(), k_ty.clone()));
        // Clauses usually resume, so that handled programs keep running.
        let body = match self.rng.gen_range(0..10) {
            0..=4 => {
                let arg = self.gen(ctx, &sig.output, d - 1);
                Term::app(Term::Var(k.clone()), arg)
            }
            5 | 6 if d >= 2 + min_depth(ty) => {
                // Resume twice, sequencing the first result into the second.
                let y = Self::fresh(ctx);
                let arg = self.gen(ctx, &sig.output, d - 2);
                let first = Term::app(Term::Var(k.clone()), arg);
                let second = Term::app(Term::Var(k.clone()), self.minimal(ctx, &sig.output));
                let rest = Term::Abs {
                    binder: y,
                    ann: Some(match ty {
                        Type::Comp(_, inner) => (**inner).clone(),
                        _ => unreachable!("clauses return computations"),
                    }),
                    body: Box::new(second),
                };
                bind(first, rest)
            }
            _ => self.gen(ctx, ty, d),
        };
        ctx.pop();
        ctx.pop();
        (p, k, body)
    }
}

/// Depth of the smallest closed term of type `ty` built by the sampler.
fn min_depth(ty: &Type) -> usize {
    match ty {
        Type::Atom(_) => 1,
        Type::Fun(_, cod) => 1 + min_depth(cod),
        Type::Comp(_, inner) => 1 + min_depth(inner),
    }
}

/// A labelled reduction edge between graph nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub rule: Rule,
    pub path: Path,
}

/// All terms reachable from a start term, identified up to alpha.
#[derive(Clone, Debug)]
pub struct ReductionGraph {
    /// Node 0 is the start term.
    pub nodes: Vec<Term>,
    pub edges: Vec<Edge>,
    /// Nodes without reducts, in discovery order.
    pub normal_forms: Vec<usize>,
    /// Set when a reduct was dropped because the node budget was reached.
    pub budget_exhausted: bool,
    parent: Vec<Option<usize>>,
}

impl ReductionGraph {
    /// Edges of a shortest reduction path from the start to `target`, each
    /// with the node it reaches.
    pub fn path_to(&self, target: usize) -> Vec<(Rule, Path, usize)> {
        let mut out = Vec::new();
        let mut cur = target;
        while let Some(e) = self.parent[cur] {
            let edge = &self.edges[e];
            out.push((edge.rule, edge.path.clone(), cur));
            cur = edge.from;
        }
        out.reverse();
        out
    }

    pub fn rules_used(&self) -> BTreeSet<Rule> {
        self.edges.iter().map(|e| e.rule).collect()
    }
}

/// Breadth-first closure of `t` under one-step reduction, keeping at most
/// `node_budget` distinct terms.
pub fn reduction_graph(t: &Term, node_budget: usize) -> ReductionGraph {
    let mut g = ReductionGraph {
        nodes: vec![t.clone()],
        edges: Vec::new(),
        normal_forms: Vec::new(),
        budget_exhausted: false,
        parent: vec![None],
    };
    let mut index: HashMap<Term, usize> = HashMap::new();
    index.insert(t.canonical(), 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let rs = reducts(&g.nodes[i]);
        if rs.is_empty() {
            g.normal_forms.push(i);
        }
        for (rule, path, r) in rs {
            let key = r.canonical();
            let to = match index.get(&key) {
                Some(&j) => j,
                None => {
                    if g.nodes.len() >= node_budget {
                        g.budget_exhausted = true;
                        continue;
                    }
                    let j = g.nodes.len();
                    g.nodes.push(r);
                    g.parent.push(Some(g.edges.len()));
                    index.insert(key, j);
                    queue.push_back(j);
                    j
                }
            };
            g.edges.push(Edge { from: i, to, rule, path });
        }
    }
    g
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Suite {
    SubjectReduction,
    Confluence,
    Termination,
    HandlerIdentity,
    MonadLaws,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::SubjectReduction,
        Suite::Confluence,
        Suite::Termination,
        Suite::HandlerIdentity,
        Suite::MonadLaws,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::SubjectReduction => "subjectReduction",
            Suite::Confluence => "confluence",
            Suite::Termination => "termination",
            Suite::HandlerIdentity => "handlerIdentity",
            Suite::MonadLaws => "monadLaws",
        }
    }

    pub fn default_config(self) -> SuiteConfig {
        let size = match self {
            Suite::MonadLaws => 5,
            _ => 6,
        };
        let samples = match self {
            Suite::HandlerIdentity => 1_000,
            _ => 10_000,
        };
        SuiteConfig {
            size,
            seed: 0,
            samples,
            max_depth: 7,
            fuel: 100_000,
            node_budget: 20_000,
            seeds: 50,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown suite `{0}`")]
pub struct UnknownSuite(pub String);

impl FromStr for Suite {
    type Err = UnknownSuite;

    fn from_str(s: &str) -> Result<Suite, UnknownSuite> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| UnknownSuite(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct SuiteConfig {
    /// Size bound for enumerated terms.
    pub size: usize,
    pub seed: u64,
    /// Number of random terms for the sampled suites.
    pub samples: usize,
    pub max_depth: usize,
    pub fuel: usize,
    pub node_budget: usize,
    /// Random strategy seeds per golden entry in the confluence suite.
    pub seeds: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Failure {
    pub term: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Report {
    pub suite: Suite,
    pub config: SuiteConfig,
    pub cases: usize,
    /// Cases outside the property's hypothesis, counted but not judged.
    pub skipped: usize,
    pub failures: Vec<Failure>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn summary(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let mut s = format!(
            "{verdict} {}: {} cases, {} failures",
            self.suite,
            self.cases,
            self.failures.len()
        );
        if self.skipped > 0 {
            s.push_str(&format!(", {} skipped", self.skipped));
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = self.summary();
        s.push('\n');
        for f in &self.failures {
            s.push_str(&format!("  counterexample: {}\n    {}\n", f.term, f.detail));
        }
        s
    }
}

fn failure(t: &Term, detail: impl Into<String>) -> Failure {
    Failure {
        term: print_term(t),
        detail: detail.into(),
    }
}

/// Runs a property suite. Deterministic in `(suite, config)`.
pub fn run_suite(suite: Suite, config: SuiteConfig) -> Report {
    let (cases, skipped, failures) = match suite {
        Suite::SubjectReduction => subject_reduction(&config),
        Suite::Confluence => confluence(&config),
        Suite::Termination => termination(&config),
        Suite::HandlerIdentity => handler_identity(&config),
        Suite::MonadLaws => monad_laws(&config),
    };
    Report {
        suite,
        config,
        cases,
        skipped,
        failures,
    }
}

fn judge<T: Sync>(items: &[T], f: impl Fn(&T) -> Option<Failure> + Sync + Send) -> Vec<Failure> {
    items.par_iter().filter_map(f).collect()
}

/// Every one-step reduct of an enumerated term re-checks at its type.
fn subject_reduction(cfg: &SuiteConfig) -> (usize, usize, Vec<Failure>) {
    let terms = Enumerator::new().closed(cfg.size);
    let ctx = small_context();
    let failures = judge(&terms, |(t, ty)| {
        for (rule, path, r) in reducts(t) {
            match synthesize(&ctx, &r) {
                Ok(rty) if subtype(&rty, ty) => {}
                Ok(rty) => {
                    return Some(failure(
                        t,
                        format!("{rule} @ {path} gives {} : {rty}, not below {ty}", print_term(&r)),
                    ))
                }
                Err(e) => {
                    return Some(failure(t, format!("{rule} @ {path} gives {}: {e}", print_term(&r))))
                }
            }
        }
        None
    });
    (terms.len(), 0, failures)
}

/// Every enumerated term has a single normal form, and random strategies
/// agree with leftmost-outermost on the golden corpus.
fn confluence(cfg: &SuiteConfig) -> (usize, usize, Vec<Failure>) {
    let terms = Enumerator::new().closed(cfg.size);
    let mut failures = judge(&terms, |(t, _)| {
        let g = reduction_graph(t, cfg.node_budget);
        if g.budget_exhausted {
            return Some(failure(t, format!("more than {} reachable terms", cfg.node_budget)));
        }
        match g.normal_forms.len() {
            1 => None,
            n => Some(failure(t, format!("{n} distinct normal forms"))),
        }
    });
    let corpus = crate::fragment::golden_corpus();
    let runs: Vec<(usize, u64)> = (0..corpus.len())
        .flat_map(|i| (0..cfg.seeds).map(move |s| (i, s)))
        .collect();
    let reference: Vec<Term> = corpus
        .iter()
        .map(|e| normal_form(&e.term(), cfg.fuel).0)
        .collect();
    failures.extend(judge(&runs, |&(i, seed)| {
        let t = corpus[i].term();
        let trace = normalize(&t, Strategy::RandomSeeded(cfg.seed.wrapping_add(seed)), cfg.fuel);
        if trace.result().alpha_eq(&reference[i]) && trace.outcome == Outcome::NormalForm {
            None
        } else {
            Some(failure(
                trace.result(),
                format!("golden entry {} under seed {seed} disagrees with leftmost-outermost", corpus[i].id),
            ))
        }
    }));
    (terms.len() + runs.len(), 0, failures)
}

fn samples(cfg: &SuiteConfig, mut make: impl FnMut(&mut Sampler) -> (Term, Type)) -> Vec<(Term, Type)> {
    (0..cfg.samples as u64)
        .map(|i| make(&mut Sampler::new(cfg.seed, i, cfg.max_depth)))
        .collect()
}

/// Random well-typed terms normalize within the fuel.
fn termination(cfg: &SuiteConfig) -> (usize, usize, Vec<Failure>) {
    let terms = samples(cfg, |s| {
        let ty = s.ty();
        (s.term(&ty), ty)
    });
    let ctx = small_context();
    let failures = judge(&terms, |(t, ty)| {
        if let Err(e) = check_against(&ctx, t, ty) {
            return Some(failure(t, format!("sampled term is ill-typed: {e}")));
        }
        match normal_form(t, cfg.fuel).1 {
            Outcome::FuelExhausted => Some(failure(t, format!("no normal form within {} steps", cfg.fuel))),
            _ => None,
        }
    });
    (terms.len(), 0, failures)
}

/// Handling an operation a computation never performs changes nothing.
/// Computations whose normal form is stuck are skipped: a handler cannot
/// look through a blocked `commute`, so it stays in the term.
fn handler_identity(cfg: &SuiteConfig) -> (usize, usize, Vec<Failure>) {
    let cases: Vec<(Term, Type, Term)> = (0..cfg.samples as u64)
        .map(|i| {
            let mut s = Sampler::new(cfg.seed, i, cfg.max_depth);
            let op = if s.rng.gen_bool(0.5) { ASK } else { TELL };
            let ty = s.computation_type(&[op]);
            let m = s.term(&ty);
            let sig = s.sig.operation(op).unwrap().clone();
            let clause_ty = Type::arrows([sig.input, Type::fun(sig.output, ty.clone())], ty.clone());
            let clause = s.term(&clause_ty);
            let h = Handler::with_default_eta([(Name::new(op), clause)]).unwrap();
            (m.clone(), ty, Term::handle(h, m))
        })
        .collect();
    let ctx = small_context();
    let results: Vec<Result<(), Failure>> = cases
        .par_iter()
        .map(|(m, ty, wrapped)| {
            if let Err(e) = check_against(&ctx, wrapped, ty) {
                return Err(failure(wrapped, format!("wrapped term is ill-typed: {e}")));
            }
            let (plain, o1) = normal_form(m, cfg.fuel);
            let (handled, o2) = normal_form(wrapped, cfg.fuel);
            if stuck_site(&plain).is_some() {
                return Ok(());
            }
            if o1 != Outcome::NormalForm || o2 != Outcome::NormalForm {
                return Err(failure(wrapped, format!("outcomes {o1} and {o2}")));
            }
            if plain.erase().alpha_eq(&handled.erase()) {
                Ok(())
            } else {
                Err(failure(
                    wrapped,
                    format!("{} versus {}", print_term(&plain), print_term(&handled)),
                ))
            }
        })
        .map(|r| r.map(|_| ()))
        .collect();
    let skipped = cases
        .par_iter()
        .filter(|(m, _, _)| stuck_site(&normal_form(m, cfg.fuel).0).is_some())
        .count();
    let failures = results.into_iter().filter_map(Result::err).collect();
    (cases.len(), skipped, failures)
}

/// Continuations used to instantiate the monad laws at a given value type.
fn continuations(t: &Type) -> Vec<Term> {
    let x = Name::new("v");
    let lam = |body: Term| Term::Abs {
        binder: x.clone(),
        ann: Some(t.clone()),
        body: Box::new(body),
    };
    let mut out = vec![
        lam(Term::eta(Term::var("v"))),
        lam(Term::op(ASK, Term::cst("c"), "w", Term::eta(Term::var("v")))),
        lam(Term::op(TELL, Term::cst("d"), "w", Term::eta(Term::var("v")))),
    ];
    if *t == a() {
        out.push(lam(Term::op(ASK, Term::var("v"), "w", Term::eta(Term::var("w")))));
    }
    if *t == b() {
        out.push(lam(Term::op(TELL, Term::var("v"), "w", Term::eta(Term::var("w")))));
    }
    out
}

/// The value type of a continuation built by [`continuations`].
fn continuation_result(f: &Term, t: &Type) -> Type {
    match f {
        Term::Abs { body, .. } => match &**body {
            Term::Op { op, binder, cont, .. } if matches!(&**cont, Term::Eta(v) if **v == Term::Var(binder.clone())) => {
                if op.as_str() == ASK {
                    b()
                } else {
                    a()
                }
            }
            _ => t.clone(),
        },
        _ => t.clone(),
    }
}

fn same_normal_form(l: &Term, r: &Term, fuel: usize) -> Result<(), String> {
    let (nl, ol) = normal_form(l, fuel);
    let (nr, or) = normal_form(r, fuel);
    if ol == Outcome::FuelExhausted || or == Outcome::FuelExhausted {
        return Err(format!("outcomes {ol} and {or}"));
    }
    if nl.erase().alpha_eq(&nr.erase()) {
        Ok(())
    } else {
        Err(format!("{} versus {}", print_term(&nl), print_term(&nr)))
    }
}

/// Left identity, right identity and associativity of bind.
/// Right identity and associativity are judged only for computations whose
/// normal form is not stuck: a handler cannot enter a blocked `commute`.
fn monad_laws(cfg: &SuiteConfig) -> (usize, usize, Vec<Failure>) {
    let closed = Enumerator::new().closed(cfg.size);
    let mut cases: Vec<(String, Term, Term)> = Vec::new();
    let mut skipped = 0;
    for (t, ty) in &closed {
        for f in continuations(ty) {
            let lhs = bind(Term::eta(t.clone()), f.clone());
            let rhs = Term::app(f, t.clone());
            cases.push(("left identity".into(), lhs, rhs));
        }
        let Type::Comp(_, inner) = ty else { continue };
        if stuck_site(&normal_form(t, cfg.fuel).0).is_some() {
            skipped += 1;
            continue;
        }
        let id = Term::Abs {
            binder: Name::new("v"),
            ann: Some((**inner).clone()),
            body: Box::new(Term::eta(Term::var("v"))),
        };
        cases.push(("right identity".into(), bind(t.clone(), id), t.clone()));
        for f in continuations(inner) {
            let mid = continuation_result(&f, inner);
            for g in continuations(&mid) {
                let lhs = bind(bind(t.clone(), f.clone()), g.clone());
                let inner_bind = bind(Term::app(f.clone(), Term::var("u")), g);
                let rhs = bind(
                    t.clone(),
                    Term::Abs {
                        binder: Name::new("u"),
                        ann: Some((**inner).clone()),
                        body: Box::new(inner_bind),
                    },
                );
                cases.push(("associativity".into(), lhs, rhs));
            }
        }
    }
    let ctx = small_context();
    let failures = judge(&cases, |(law, l, r)| {
        let (lt, rt) = match (synthesize(&ctx, l), synthesize(&ctx, r)) {
            (Ok(lt), Ok(rt)) => (lt, rt),
            (Err(e), _) | (_, Err(e)) => return Some(failure(l, format!("{law}: ill-typed instance: {e}"))),
        };
        if !subtype(&lt, &rt) && !subtype(&rt, &lt) {
            return Some(failure(l, format!("{law}: sides have types {lt} and {rt}")));
        }
        same_normal_form(l, r, cfg.fuel)
            .err()
            .map(|d| failure(l, format!("{law}: {d}")))
    });
    (cases.len(), skipped, failures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduce::same_up_to_eta;

    fn f_empty(t: Type) -> Type {
        Type::comp::<[&str; 0], &str>([], t)
    }

    #[test]
    fn small_enumeration_contains_pure_constants() {
        let ts = enumerate_typed(&f_empty(a()), 3);
        assert!(ts.contains(&Term::eta(Term::cst("c"))));
        let ts = enumerate_typed(&f_empty(b()), 3);
        assert!(ts.contains(&Term::eta(Term::cst("d"))));
    }

    #[test]
    fn enumeration_is_ordered_and_alpha_distinct() {
        let ts = enumerate_typed(&Type::fun(a(), Type::comp([ASK], b())), 6);
        assert!(ts.windows(2).all(|w| w[0].size() <= w[1].size()));
        let keys: std::collections::HashSet<Term> = ts.iter().map(Term::canonical).collect();
        assert_eq!(keys.len(), ts.len());
        assert!(!ts.is_empty());
    }

    #[test]
    fn enumeration_reaches_every_constructor_by_size_six() {
        let ts = Enumerator::new().closed(6);
        let has = |p: fn(&Term) -> bool| ts.iter().any(|(t, _)| {
            let mut hit = false;
            t.visit(&mut |s| hit |= p(s));
            hit
        });
        assert!(has(|t| matches!(t, Term::Handle(..))));
        assert!(has(|t| matches!(t, Term::Commute(..))));
        assert!(has(|t| matches!(t, Term::Extract(..))));
        assert!(has(|t| matches!(t, Term::Op { .. })));
        assert!(has(|t| matches!(t, Term::App(..))));
    }

    #[test]
    fn graph_of_a_beta_redex() {
        let t = Term::app(Term::lam_ann("x", a(), Term::var("x")), Term::cst("c"));
        let g = reduction_graph(&t, 100);
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.normal_forms, vec![1]);
        assert_eq!(g.path_to(1), vec![(Rule::Beta, Path::root(), 1)]);
    }

    #[test]
    fn graph_records_forwarding() {
        let clause = Term::lam("x", Term::lam("k", Term::app(Term::var("k"), Term::cst("d"))));
        let h = Handler::with_default_eta([(Name::new(ASK), clause)]).unwrap();
        let t = Term::handle(h, Term::op(TELL, Term::cst("d"), "y", Term::eta(Term::var("y"))));
        let g = reduction_graph(&t, 100);
        assert!(g.rules_used().contains(&Rule::BananaOpForward));
        assert_eq!(g.normal_forms.len(), 1);
    }

    #[test]
    fn graph_budget_is_reported() {
        let w = Term::lam("x", Term::app(Term::var("x"), Term::var("x")));
        let g = reduction_graph(&Term::app(w.clone(), w), 10);
        assert!(!g.budget_exhausted);
        assert!(g.normal_forms.is_empty());
        let dup = Term::lam("x", Term::apps(Term::var("x"), [Term::var("x"), Term::var("x")]));
        let g = reduction_graph(&Term::app(dup.clone(), dup), 5);
        assert!(g.budget_exhausted);
    }

    #[test]
    fn sampled_terms_are_well_typed_and_shallow() {
        let ctx = small_context();
        for i in 0..300 {
            let mut s = Sampler::new(7, i, 7);
            let ty = s.ty();
            let t = s.term(&ty);
            assert!(t.depth() <= 7);
            check_against(&ctx, &t, &ty).unwrap_or_else(|e| panic!("{t} : {ty}: {e}"));
        }
    }

    #[test]
    fn sampler_produces_handlers_with_clauses() {
        let mut found = false;
        for i in 0..200 {
            let mut s = Sampler::new(1, i, 7);
            let ty = s.computation_type(&[]);
            s.term(&ty).visit(&mut |t| {
                if let Term::Handle(h, _) = t {
                    found |= !h.clauses().is_empty();
                }
            });
        }
        assert!(found);
    }

    #[test]
    fn sampler_is_deterministic() {
        let t1 = Sampler::new(3, 9, 7).term(&Type::comp([ASK], a()));
        let t2 = Sampler::new(3, 9, 7).term(&Type::comp([ASK], a()));
        assert_eq!(t1, t2);
    }

    #[test]
    fn suites_pass_at_small_bounds() {
        for suite in Suite::ALL {
            let mut cfg = suite.default_config();
            cfg.size = 4;
            cfg.samples = 200;
            cfg.seeds = 3;
            let r = run_suite(suite, cfg);
            assert!(r.passed(), "{}", r.to_text());
            assert!(r.cases > 0);
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let mut cfg = Suite::Termination.default_config();
        cfg.samples = 100;
        cfg.seed = 42;
        assert_eq!(run_suite(Suite::Termination, cfg), run_suite(Suite::Termination, cfg));
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn exhaustive_strategy_matches_graph() {
        let e = &crate::fragment::golden_corpus()[1];
        let t = e.term();
        let trace = normalize(&t, Strategy::ExhaustiveCheck, 100_000);
        assert_eq!(trace.outcome, Outcome::NormalForm);
        assert!(same_up_to_eta(trace.result(), &e.expected_term()));
    }
}
