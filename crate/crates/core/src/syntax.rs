//! Terms, types and effect signatures of the calculus.
//!
//! Terms use named variables. Every operation that can capture a variable
//! (substitution, the reduction rules that move terms under binders) renames
//! the offending binder with a deterministic primed name, so printing the
//! same input always yields the same output.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// An identifier: variable, constant, operation or atomic type name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Self {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Appends a prime, e.g. `x` becomes `x'`.
    pub fn primed(&self) -> Name {
        Name::new(&format!("{}'", self.0))
    }
}

impl std::borrow::Borrow<str> for Name {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl From<String> for Name {
    fn from(s: String) -> Self {
        Name(Arc::from(s))
    }
}

impl std::ops::Deref for Name {
    type Target = str;
    fn deref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl serde::Serialize for Name {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self)
    }
}

/// Name of the built-in unit type.
pub const UNIT_TYPE: &str = "1";
/// Name of the built-in unit value.
pub const UNIT_VALUE: &str = "*";

/// The set of operation names a computation type may perform.
///
/// Operation input/output types are fixed globally by the operation table,
/// so a row only records names.
pub type EffectRow = BTreeSet<Name>;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Type {
    Fun(Box<Type>, Box<Type>),
    Atom(Name),
    Comp(EffectRow, Box<Type>),
}

impl Type {
    pub fn atom(name: &str) -> Type {
        Type::Atom(Name::new(name))
    }

    pub fn unit() -> Type {
        Type::atom(UNIT_TYPE)
    }

    pub fn fun(dom: Type, cod: Type) -> Type {
        Type::Fun(Box::new(dom), Box::new(cod))
    }

    pub fn comp<I, S>(ops: I, atom: Type) -> Type
    where
        I: IntoIterator<Item = S>,
        S: Into<Name>,
    {
        Type::Comp(ops.into_iter().map(Into::into).collect(), Box::new(atom))
    }

    /// Builds `a1 -> a2 -> ... -> result`.
    pub fn arrows(params: impl IntoIterator<Item = Type>, result: Type) -> Type {
        let params: Vec<Type> = params.into_iter().collect();
        params
            .into_iter()
            .rev()
            .fold(result, |acc, p| Type::fun(p, acc))
    }

    pub fn size(&self) -> usize {
        match self {
            Type::Atom(_) => 1,
            Type::Fun(a, b) => 1 + a.size() + b.size(),
            Type::Comp(_, a) => 1 + a.size(),
        }
    }

    /// Every operation name mentioned anywhere in the type.
    pub fn operations(&self, out: &mut BTreeSet<Name>) {
        match self {
            Type::Atom(_) => {}
            Type::Fun(a, b) => {
                a.operations(out);
                b.operations(out);
            }
            Type::Comp(row, a) => {
                out.extend(row.iter().cloned());
                a.operations(out);
            }
        }
    }

    pub fn atoms(&self, out: &mut BTreeSet<Name>) {
        match self {
            Type::Atom(a) => {
                out.insert(a.clone());
            }
            Type::Fun(a, b) => {
                a.atoms(out);
                b.atoms(out);
            }
            Type::Comp(_, a) => a.atoms(out),
        }
    }
}

/// Input and output type of an operation, written `input ~> output`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct OpSig {
    pub input: Type,
    pub output: Type,
}

/// A finite map from operation symbols to their input/output types.
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct EffectSignature {
    entries: BTreeMap<Name, OpSig>,
}

/// Raised when two effect signatures that should be disjoint share an operation.
#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
#[error("operation `{0}` appears in both signatures")]
pub struct NotDisjoint(pub Name);

impl EffectSignature {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry, failing if the operation is already present.
    pub fn declare(&mut self, op: Name, sig: OpSig) -> Result<(), NotDisjoint> {
        if self.entries.contains_key(&op) {
            return Err(NotDisjoint(op));
        }
        self.entries.insert(op, sig);
        Ok(())
    }

    pub fn get(&self, op: &str) -> Option<&OpSig> {
        self.entries.get(op)
    }

    pub fn contains(&self, op: &str) -> bool {
        self.entries.contains_key(op)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &OpSig)> {
        self.entries.iter()
    }

    pub fn names(&self) -> EffectRow {
        self.entries.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `self ⊎ other`: the union of two signatures with disjoint domains.
    pub fn disjoint_union(&self, other: &EffectSignature) -> Result<EffectSignature, NotDisjoint> {
        let mut out = self.clone();
        for (op, sig) in &other.entries {
            out.declare(op.clone(), sig.clone())?;
        }
        Ok(out)
    }

    /// The sub-signature restricted to the given operation names.
    pub fn restrict(&self, row: &EffectRow) -> EffectSignature {
        EffectSignature {
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| row.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

impl FromIterator<(Name, OpSig)> for EffectSignature {
    fn from_iter<T: IntoIterator<Item = (Name, OpSig)>>(iter: T) -> Self {
        EffectSignature {
            entries: iter.into_iter().collect(),
        }
    }
}

/// The clauses of a handler: one per handled operation plus the eta clause.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Handler {
    clauses: BTreeMap<Name, Term>,
    eta: Term,
}

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
#[error("duplicate handler clause for operation `{0}`")]
pub struct DuplicateClause(pub Name);

impl Handler {
    pub fn new(
        clauses: impl IntoIterator<Item = (Name, Term)>,
        eta: Term,
    ) -> Result<Handler, DuplicateClause> {
        let mut map = BTreeMap::new();
        for (op, clause) in clauses {
            if map.contains_key(&op) {
                return Err(DuplicateClause(op));
            }
            map.insert(op, clause);
        }
        Ok(Handler { clauses: map, eta })
    }

    /// A handler whose eta clause is the default `\x. eta x`.
    pub fn with_default_eta(
        clauses: impl IntoIterator<Item = (Name, Term)>,
    ) -> Result<Handler, DuplicateClause> {
        Handler::new(clauses, Term::default_eta_clause())
    }

    pub fn clauses(&self) -> &BTreeMap<Name, Term> {
        &self.clauses
    }

    pub fn clause(&self, op: &str) -> Option<&Term> {
        self.clauses.get(op)
    }

    pub fn eta(&self) -> &Term {
        &self.eta
    }

    pub fn handles(&self, op: &str) -> bool {
        self.clauses.contains_key(op)
    }

    /// Free variables of all clauses.
    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        for c in self.clauses.values() {
            c.collect_free(&mut Vec::new(), &mut out);
        }
        self.eta.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Handler {
        Handler {
            clauses: self
                .clauses
                .iter()
                .map(|(k, v)| (k.clone(), f(v)))
                .collect(),
            eta: f(&self.eta),
        }
    }

    /// Number of child positions (clauses in name order, then the eta clause).
    fn arity(&self) -> usize {
        self.clauses.len() + 1
    }

    fn child(&self, i: usize) -> Option<&Term> {
        if i < self.clauses.len() {
            self.clauses.values().nth(i)
        } else if i == self.clauses.len() {
            Some(&self.eta)
        } else {
            None
        }
    }

    fn replace_child(&self, i: usize, t: Term) -> Handler {
        let mut h = self.clone();
        if i < h.clauses.len() {
            let key = h.clauses.keys().nth(i).cloned().expect("index in range");
            h.clauses.insert(key, t);
        } else {
            h.eta = t;
        }
        h
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Term {
    Var(Name),
    Const(Name),
    /// `\x. body`, optionally with the binder's type.
    Abs {
        binder: Name,
        ann: Option<Type>,
        body: Box<Term>,
    },
    App(Box<Term>, Box<Term>),
    /// `op param (\binder. cont)`; `binder` scopes over `cont` only.
    Op {
        op: Name,
        param: Box<Term>,
        binder: Name,
        cont: Box<Term>,
    },
    Eta(Box<Term>),
    /// A handler applied to the computation it interprets.
    Handle(Box<Handler>, Box<Term>),
    Extract(Box<Term>),
    Commute(Box<Term>),
    /// Type ascription `(M : T)`; transparent to reduction once stripped.
    Ann(Box<Term>, Type),
}

/// Builders.
impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Name::new(name))
    }

    pub fn cst(name: &str) -> Term {
        Term::Const(Name::new(name))
    }

    pub fn unit() -> Term {
        Term::cst(UNIT_VALUE)
    }

    pub fn lam(binder: &str, body: Term) -> Term {
        Term::Abs {
            binder: Name::new(binder),
            ann: None,
            body: Box::new(body),
        }
    }

    pub fn lam_ann(binder: &str, ann: Type, body: Term) -> Term {
        Term::Abs {
            binder: Name::new(binder),
            ann: Some(ann),
            body: Box::new(body),
        }
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    /// Left-nested application `f a1 a2 ...`.
    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }

    pub fn op(op: &str, param: Term, binder: &str, cont: Term) -> Term {
        Term::Op {
            op: Name::new(op),
            param: Box::new(param),
            binder: Name::new(binder),
            cont: Box::new(cont),
        }
    }

    pub fn eta(t: Term) -> Term {
        Term::Eta(Box::new(t))
    }

    pub fn handle(h: Handler, scrutinee: Term) -> Term {
        Term::Handle(Box::new(h), Box::new(scrutinee))
    }

    pub fn extract(t: Term) -> Term {
        Term::Extract(Box::new(t))
    }

    pub fn commute(t: Term) -> Term {
        Term::Commute(Box::new(t))
    }

    pub fn ann(t: Term, ty: Type) -> Term {
        Term::Ann(Box::new(t), ty)
    }

    /// `\x. eta x`, the clause used when a handler omits its eta clause.
    pub fn default_eta_clause() -> Term {
        Term::lam("x", Term::eta(Term::var("x")))
    }
}

/// A root-to-node path of child indices.
///
/// Child numbering: `Abs` body 0; `App` function 0, argument 1; `Op` parameter 0,
/// continuation body 1; `Eta`/`Extract`/`Commute`/`Ann` 0; `Handle` clauses
/// in operation-name order, then the eta clause, then the handled computation.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Path(pub Vec<usize>);

impl Path {
    pub fn root() -> Path {
        Path(Vec::new())
    }

    pub fn child(&self, i: usize) -> Path {
        let mut v = self.0.clone();
        v.push(i);
        Path(v)
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Structural queries.
impl Term {
    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    pub fn has_free(&self, x: &Name) -> bool {
        match self {
            Term::Var(y) => x == y,
            Term::Const(_) => false,
            Term::Abs { binder, body, .. } => binder != x && body.has_free(x),
            Term::App(f, a) => f.has_free(x) || a.has_free(x),
            Term::Op {
                param,
                binder,
                cont,
                ..
            } => param.has_free(x) || (binder != x && cont.has_free(x)),
            Term::Eta(t) | Term::Extract(t) | Term::Commute(t) | Term::Ann(t, _) => t.has_free(x),
            Term::Handle(h, n) => {
                h.clauses.values().any(|c| c.has_free(x)) || h.eta.has_free(x) || n.has_free(x)
            }
        }
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Term::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Term::Const(_) => {}
            Term::Abs { binder, body, .. } => {
                bound.push(binder.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            Term::App(f, a) => {
                f.collect_free(bound, out);
                a.collect_free(bound, out);
            }
            Term::Op {
                param,
                binder,
                cont,
                ..
            } => {
                param.collect_free(bound, out);
                bound.push(binder.clone());
                cont.collect_free(bound, out);
                bound.pop();
            }
            Term::Eta(t) | Term::Extract(t) | Term::Commute(t) | Term::Ann(t, _) => {
                t.collect_free(bound, out)
            }
            Term::Handle(h, n) => {
                for c in h.clauses.values() {
                    c.collect_free(bound, out);
                }
                h.eta.collect_free(bound, out);
                n.collect_free(bound, out);
            }
        }
    }

    /// Every name used anywhere in the term, bound or free.
    pub fn all_var_names(&self, out: &mut BTreeSet<Name>) {
        self.visit(&mut |t| match t {
            Term::Var(x) => {
                out.insert(x.clone());
            }
            Term::Abs { binder, .. } | Term::Op { binder, .. } => {
                out.insert(binder.clone());
            }
            _ => {}
        });
    }

    /// Constants occurring in the term.
    pub fn constants(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| {
            if let Term::Const(c) = t {
                out.insert(c.clone());
            }
        });
        out
    }

    pub fn contains_const(&self, c: &str) -> bool {
        let mut found = false;
        self.visit(&mut |t| {
            if let Term::Const(d) = t {
                found |= &**d == c;
            }
        });
        found
    }

    /// Operation symbols invoked or handled in the term.
    pub fn operations(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| match t {
            Term::Op { op, .. } => {
                out.insert(op.clone());
            }
            Term::Handle(h, _) => out.extend(h.clauses.keys().cloned()),
            _ => {}
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut impl FnMut(&Term)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Immediate subterms in path order.
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Var(_) | Term::Const(_) => vec![],
            Term::Abs { body, .. } => vec![body],
            Term::App(f, a) => vec![f, a],
            Term::Op { param, cont, .. } => vec![param, cont],
            Term::Eta(t) | Term::Extract(t) | Term::Commute(t) | Term::Ann(t, _) => vec![t],
            Term::Handle(h, n) => {
                let mut v: Vec<&Term> = h.clauses.values().collect();
                v.push(&h.eta);
                v.push(n);
                v
            }
        }
    }

    pub fn child(&self, i: usize) -> Option<&Term> {
        match self {
            Term::Handle(h, n) => {
                if i < h.arity() {
                    h.child(i)
                } else if i == h.arity() {
                    Some(n)
                } else {
                    None
                }
            }
            _ => self.children().get(i).copied(),
        }
    }

    pub fn at(&self, path: &Path) -> Option<&Term> {
        let mut t = self;
        for &i in &path.0 {
            t = t.child(i)?;
        }
        Some(t)
    }

    /// Rebuilds the term with child `i` replaced.
    pub fn with_child(&self, i: usize, new: Term) -> Term {
        match self {
            Term::Var(_) | Term::Const(_) => panic!("leaf has no child {i}"),
            Term::Abs { binder, ann, .. } => Term::Abs {
                binder: binder.clone(),
                ann: ann.clone(),
                body: Box::new(new),
            },
            Term::App(f, a) => match i {
                0 => Term::App(Box::new(new), a.clone()),
                _ => Term::App(f.clone(), Box::new(new)),
            },
            Term::Op {
                op,
                param,
                binder,
                cont,
            } => match i {
                0 => Term::Op {
                    op: op.clone(),
                    param: Box::new(new),
                    binder: binder.clone(),
                    cont: cont.clone(),
                },
                _ => Term::Op {
                    op: op.clone(),
                    param: param.clone(),
                    binder: binder.clone(),
                    cont: Box::new(new),
                },
            },
            Term::Eta(_) => Term::eta(new),
            Term::Extract(_) => Term::extract(new),
            Term::Commute(_) => Term::commute(new),
            Term::Ann(_, ty) => Term::ann(new, ty.clone()),
            Term::Handle(h, n) => {
                if i < h.arity() {
                    Term::Handle(Box::new(h.replace_child(i, new)), n.clone())
                } else {
                    Term::Handle(h.clone(), Box::new(new))
                }
            }
        }
    }

    /// Replaces the subterm at `path`.
    pub fn replace_at(&self, path: &[usize], new: Term) -> Term {
        match path.split_first() {
            None => new,
            Some((&i, rest)) => {
                let child = self.child(i).expect("path leads to a subterm");
                self.with_child(i, child.replace_at(rest, new))
            }
        }
    }

    /// Node count.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self
            .children()
            .iter()
            .map(|c| c.depth())
            .max()
            .unwrap_or(0)
    }
}

/// Picks `base`, `base'`, `base''`, ... until the name avoids `avoid`.
pub fn fresh_name(base: &Name, avoid: &BTreeSet<Name>) -> Name {
    let mut n = base.clone();
    while avoid.contains(&n) {
        n = n.primed();
    }
    n
}

/// Substitution and renaming.
impl Term {
    /// Capture-avoiding substitution `self[x := n]`.
    pub fn subst(&self, x: &Name, n: &Term) -> Term {
        let fv_n = n.free_vars();
        self.subst_with(x, n, &fv_n)
    }

    fn subst_with(&self, x: &Name, n: &Term, fv_n: &BTreeSet<Name>) -> Term {
        match self {
            Term::Var(y) => {
                if y == x {
                    n.clone()
                } else {
                    self.clone()
                }
            }
            Term::Const(_) => self.clone(),
            Term::Abs { binder, ann, body } => {
                let (binder, body) = subst_under_binder(binder, body, x, n, fv_n);
                Term::Abs {
                    binder,
                    ann: ann.clone(),
                    body: Box::new(body),
                }
            }
            Term::App(f, a) => Term::app(f.subst_with(x, n, fv_n), a.subst_with(x, n, fv_n)),
            Term::Op {
                op,
                param,
                binder,
                cont,
            } => {
                let param = param.subst_with(x, n, fv_n);
                let (binder, cont) = subst_under_binder(binder, cont, x, n, fv_n);
                Term::Op {
                    op: op.clone(),
                    param: Box::new(param),
                    binder,
                    cont: Box::new(cont),
                }
            }
            Term::Eta(t) => Term::eta(t.subst_with(x, n, fv_n)),
            Term::Extract(t) => Term::extract(t.subst_with(x, n, fv_n)),
            Term::Commute(t) => Term::commute(t.subst_with(x, n, fv_n)),
            Term::Ann(t, ty) => Term::ann(t.subst_with(x, n, fv_n), ty.clone()),
            Term::Handle(h, s) => Term::Handle(
                Box::new(h.map_terms(|c| c.subst_with(x, n, fv_n))),
                Box::new(s.subst_with(x, n, fv_n)),
            ),
        }
    }

    /// Renames the free occurrences of `from` to `to`. The caller guarantees
    /// that `to` is not captured.
    pub fn rename_free(&self, from: &Name, to: &Name) -> Term {
        self.subst(from, &Term::Var(to.clone()))
    }

    /// Replaces every occurrence of constant `from` by constant `to`.
    pub fn rename_const(&self, from: &str, to: &str) -> Term {
        self.map_bottom_up(&mut |t| match t {
            Term::Const(c) if &*c == from => Term::cst(to),
            other => other,
        })
    }

    /// Rebuilds the term bottom-up, applying `f` at every node.
    pub fn map_bottom_up(&self, f: &mut impl FnMut(Term) -> Term) -> Term {
        let children = self.children();
        let mut t = self.clone();
        for (i, c) in children.into_iter().enumerate() {
            let new = c.map_bottom_up(f);
            t = t.with_child(i, new);
        }
        f(t)
    }

    /// Removes every `(M : T)` ascription.
    pub fn strip_ascriptions(&self) -> Term {
        self.map_bottom_up(&mut |t| match t {
            Term::Ann(inner, _) => *inner,
            other => other,
        })
    }

    /// Removes ascriptions and binder annotations.
    pub fn erase(&self) -> Term {
        self.map_bottom_up(&mut |t| match t {
            Term::Ann(inner, _) => *inner,
            Term::Abs { binder, body, .. } => Term::Abs {
                binder,
                ann: None,
                body,
            },
            other => other,
        })
    }

    /// Whether every abstraction carries a binder type and no ascriptions remain.
    pub fn is_fully_annotated(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |t| match t {
            Term::Abs { ann: None, .. } | Term::Ann(..) => ok = false,
            _ => {}
        });
        ok
    }
}

fn subst_under_binder(
    binder: &Name,
    body: &Term,
    x: &Name,
    n: &Term,
    fv_n: &BTreeSet<Name>,
) -> (Name, Term) {
    if binder == x || !body.has_free(x) {
        return (binder.clone(), body.clone());
    }
    if fv_n.contains(binder) {
        let mut avoid = fv_n.clone();
        avoid.extend(body.free_vars());
        avoid.insert(x.clone());
        let fresh = fresh_name(binder, &avoid);
        let renamed = body.rename_free(binder, &fresh);
        (fresh.clone(), renamed.subst_with(x, n, fv_n))
    } else {
        (binder.clone(), body.subst_with(x, n, fv_n))
    }
}

/// Alpha-equivalence.
impl Term {
    /// Equality up to consistent renaming of bound variables.
    pub fn alpha_eq(&self, other: &Term) -> bool {
        alpha(self, other, &mut Vec::new(), &mut Vec::new())
    }

    /// A representative of the alpha-equivalence class: bound variables are
    /// renamed by binding depth to names the parser cannot produce, so two
    /// terms are alpha-equivalent iff their canonical forms are equal.
    pub fn canonical(&self) -> Term {
        canon(self, &mut Vec::new())
    }
}

fn lookup_index(env: &[Name], x: &Name) -> Option<usize> {
    env.iter().rposition(|y| y == x)
}

fn alpha(a: &Term, b: &Term, ea: &mut Vec<Name>, eb: &mut Vec<Name>) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => match (lookup_index(ea, x), lookup_index(eb, y)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => x == y,
            _ => false,
        },
        (Term::Const(c), Term::Const(d)) => c == d,
        (
            Term::Abs {
                binder: x,
                ann: ta,
                body: ba,
            },
            Term::Abs {
                binder: y,
                ann: tb,
                body: bb,
            },
        ) => ta == tb && under(x, y, ba, bb, ea, eb),
        (Term::App(f, a1), Term::App(g, b1)) => alpha(f, g, ea, eb) && alpha(a1, b1, ea, eb),
        (
            Term::Op {
                op: o1,
                param: p1,
                binder: x,
                cont: c1,
            },
            Term::Op {
                op: o2,
                param: p2,
                binder: y,
                cont: c2,
            },
        ) => o1 == o2 && alpha(p1, p2, ea, eb) && under(x, y, c1, c2, ea, eb),
        (Term::Eta(s), Term::Eta(t))
        | (Term::Extract(s), Term::Extract(t))
        | (Term::Commute(s), Term::Commute(t)) => alpha(s, t, ea, eb),
        (Term::Ann(s, ts), Term::Ann(t, tt)) => ts == tt && alpha(s, t, ea, eb),
        (Term::Handle(h1, n1), Term::Handle(h2, n2)) => {
            h1.clauses.len() == h2.clauses.len()
                && h1
                    .clauses
                    .iter()
                    .zip(h2.clauses.iter())
                    .all(|((k1, c1), (k2, c2))| k1 == k2 && alpha(c1, c2, ea, eb))
                && alpha(&h1.eta, &h2.eta, ea, eb)
                && alpha(n1, n2, ea, eb)
        }
        _ => false,
    }
}

fn under(
    x: &Name,
    y: &Name,
    a: &Term,
    b: &Term,
    ea: &mut Vec<Name>,
    eb: &mut Vec<Name>,
) -> bool {
    ea.push(x.clone());
    eb.push(y.clone());
    let r = alpha(a, b, ea, eb);
    ea.pop();
    eb.pop();
    r
}

fn canonical_name(depth: usize) -> Name {
    Name::from(format!("%{depth}"))
}

fn canon(t: &Term, env: &mut Vec<Name>) -> Term {
    match t {
        Term::Var(x) => match lookup_index(env, x) {
            Some(i) => Term::Var(canonical_name(i)),
            None => t.clone(),
        },
        Term::Const(_) => t.clone(),
        Term::Abs { binder, ann, body } => {
            let name = canonical_name(env.len());
            env.push(binder.clone());
            let body = canon(body, env);
            env.pop();
            Term::Abs {
                binder: name,
                ann: ann.clone(),
                body: Box::new(body),
            }
        }
        Term::App(f, a) => Term::app(canon(f, env), canon(a, env)),
        Term::Op {
            op,
            param,
            binder,
            cont,
        } => {
            let param = canon(param, env);
            let name = canonical_name(env.len());
            env.push(binder.clone());
            let cont = canon(cont, env);
            env.pop();
            Term::Op {
                op: op.clone(),
                param: Box::new(param),
                binder: name,
                cont: Box::new(cont),
            }
        }
        Term::Eta(s) => Term::eta(canon(s, env)),
        Term::Extract(s) => Term::extract(canon(s, env)),
        Term::Commute(s) => Term::commute(canon(s, env)),
        Term::Ann(s, ty) => Term::ann(canon(s, env), ty.clone()),
        Term::Handle(h, n) => Term::Handle(
            Box::new(h.map_terms(|c| canon(c, env))),
            Box::new(canon(n, env)),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(names: &[&str]) -> BTreeSet<Name> {
        names.iter().map(|n| Name::new(n)).collect()
    }

    #[test]
    fn free_vars_respects_binders() {
        let t = Term::lam("x", Term::app(Term::var("y"), Term::var("x")));
        assert_eq!(t.free_vars(), set(&["y"]));
    }

    #[test]
    fn op_binder_scopes_over_continuation_only() {
        // op p (\x. x q), with x also free in the parameter
        let t = Term::op(
            "speaker",
            Term::var("x"),
            "x",
            Term::app(Term::var("x"), Term::var("q")),
        );
        assert_eq!(t.free_vars(), set(&["x", "q"]));
        let t = Term::op(
            "speaker",
            Term::var("p"),
            "x",
            Term::app(Term::var("x"), Term::var("q")),
        );
        assert_eq!(t.free_vars(), set(&["p", "q"]));
    }

    #[test]
    fn constants_are_not_free_variables() {
        assert!(Term::eta(Term::cst("c")).free_vars().is_empty());
    }

    #[test]
    fn subst_replaces_head_variable() {
        let r = Term::var("x").subst(&"x".into(), &Term::cst("c"));
        assert_eq!(r, Term::cst("c"));
    }

    #[test]
    fn subst_renames_to_avoid_capture() {
        let t = Term::lam("y", Term::var("x"));
        let r = t.subst(&"x".into(), &Term::var("y"));
        match &r {
            Term::Abs { binder, body, .. } => {
                assert_ne!(binder.as_str(), "y");
                assert_eq!(**body, Term::var("y"));
            }
            _ => panic!("expected abstraction, got {r:?}"),
        }
        assert!(r.alpha_eq(&Term::lam("z", Term::var("y"))));
        assert!(!r.alpha_eq(&Term::lam("y", Term::var("y"))));
    }

    #[test]
    fn subst_goes_under_op_binder() {
        let t = Term::op(
            "p",
            Term::var("p"),
            "z",
            Term::eta(Term::app(Term::var("x"), Term::var("z"))),
        );
        let r = t.subst(&"x".into(), &Term::var("f"));
        let want = Term::op(
            "p",
            Term::var("p"),
            "z",
            Term::eta(Term::app(Term::var("f"), Term::var("z"))),
        );
        assert!(r.alpha_eq(&want));
    }

    #[test]
    fn subst_respects_shadowing_in_op() {
        // the parameter sees the outer x; the continuation's x is bound
        let t = Term::op("o", Term::var("x"), "x", Term::eta(Term::var("x")));
        let r = t.subst(&"x".into(), &Term::cst("c"));
        assert_eq!(r, Term::op("o", Term::cst("c"), "x", Term::eta(Term::var("x"))));
    }

    #[test]
    fn alpha_eq_examples() {
        assert!(Term::lam("x", Term::var("x")).alpha_eq(&Term::lam("y", Term::var("y"))));
        let k1 = Term::lam("x", Term::lam("y", Term::var("x")));
        let k2 = Term::lam("y", Term::lam("x", Term::var("x")));
        assert!(!k1.alpha_eq(&k2));
    }

    #[test]
    fn handler_clause_order_is_irrelevant() {
        let m = Term::var("M");
        let n = Term::var("N");
        let h1 = Handler::new(
            vec![(Name::new("a"), m.clone()), (Name::new("b"), n.clone())],
            Term::var("P"),
        )
        .unwrap();
        let h2 = Handler::new(
            vec![(Name::new("b"), n), (Name::new("a"), m)],
            Term::var("P"),
        )
        .unwrap();
        assert!(Term::handle(h1, Term::var("Q")).alpha_eq(&Term::handle(h2, Term::var("Q"))));
    }

    #[test]
    fn duplicate_clauses_are_rejected() {
        let r = Handler::with_default_eta(vec![
            (Name::new("a"), Term::var("M")),
            (Name::new("a"), Term::var("N")),
        ]);
        assert_eq!(r, Err(DuplicateClause(Name::new("a"))));
    }

    #[test]
    fn disjoint_union_rules() {
        let sp = OpSig {
            input: Type::unit(),
            output: Type::atom("iota"),
        };
        let speaker: EffectSignature = [(Name::new("speaker"), sp.clone())].into_iter().collect();
        let scope: EffectSignature = [(Name::new("scope"), sp.clone())].into_iter().collect();
        let both = speaker.disjoint_union(&scope).unwrap();
        assert_eq!(both.names(), set(&["scope", "speaker"]));
        assert_eq!(speaker.disjoint_union(&EffectSignature::new()).unwrap(), speaker);
        assert_eq!(
            speaker.disjoint_union(&speaker),
            Err(NotDisjoint(Name::new("speaker")))
        );
    }

    #[test]
    fn canonical_matches_alpha_eq_on_examples() {
        let a = Term::lam("x", Term::op("o", Term::var("x"), "y", Term::var("y")));
        let b = Term::lam("u", Term::op("o", Term::var("u"), "v", Term::var("v")));
        assert_eq!(a.canonical(), b.canonical());
        let c = Term::lam("u", Term::op("o", Term::var("u"), "v", Term::var("u")));
        assert_ne!(a.canonical(), c.canonical());
    }

    #[test]
    fn paths_address_handler_children() {
        let h = Handler::new(vec![(Name::new("b"), Term::cst("B")), (Name::new("a"), Term::cst("A"))], Term::cst("E")).unwrap();
        let t = Term::handle(h, Term::cst("N"));
        assert_eq!(t.at(&Path(vec![0])), Some(&Term::cst("A")));
        assert_eq!(t.at(&Path(vec![1])), Some(&Term::cst("B")));
        assert_eq!(t.at(&Path(vec![2])), Some(&Term::cst("E")));
        assert_eq!(t.at(&Path(vec![3])), Some(&Term::cst("N")));
        assert_eq!(t.at(&Path(vec![4])), None);
        let r = t.replace_at(&[3], Term::cst("Z"));
        assert_eq!(r.at(&Path(vec![3])), Some(&Term::cst("Z")));
    }
}
