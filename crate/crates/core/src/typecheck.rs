//! Bidirectional type checking with effect-row subsumption.
//!
//! Synthesis returns the least type of a term in the subtype order: `eta M`
//! gets the empty row, an operation adds exactly its own name, and a handler
//! computes its output row from what its clauses actually perform. Width
//! subsumption (`F{E}(a) <= F{E'}(a)` when `E ⊆ E'`) is applied wherever a
//! term is checked against a known type.
//!
//! Checking also elaborates: every abstraction in the returned term carries
//! its binder type and ascriptions are removed, so the elaborated term (and
//! every one of its reducts) can be re-synthesized without annotations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::syntax::{
    EffectRow, EffectSignature, Handler, Name, NotDisjoint, OpSig, Path, Term, Type, UNIT_TYPE,
    UNIT_VALUE,
};

/// Global declarations: atomic types, typed constants and typed operations.
#[derive(Clone, Debug, PartialEq)]
pub struct Signature {
    atoms: BTreeSet<Name>,
    constants: BTreeMap<Name, Type>,
    operations: EffectSignature,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` is already declared")]
pub struct Redeclared(pub Name);

impl Default for Signature {
    fn default() -> Self {
        Self::new()
    }
}

impl Signature {
    /// A signature holding only the unit type `1` and its value `*`.
    pub fn new() -> Self {
        let mut atoms = BTreeSet::new();
        atoms.insert(Name::new(UNIT_TYPE));
        let mut constants = BTreeMap::new();
        constants.insert(Name::new(UNIT_VALUE), Type::unit());
        Signature {
            atoms,
            constants,
            operations: EffectSignature::new(),
        }
    }

    pub fn declare_atom(&mut self, name: Name) -> std::result::Result<(), Redeclared> {
        if !self.atoms.insert(name.clone()) {
            return Err(Redeclared(name));
        }
        Ok(())
    }

    pub fn declare_constant(&mut self, name: Name, ty: Type) -> std::result::Result<(), Redeclared> {
        if self.constants.contains_key(&name) {
            return Err(Redeclared(name));
        }
        self.constants.insert(name, ty);
        Ok(())
    }

    pub fn declare_operation(&mut self, name: Name, sig: OpSig) -> std::result::Result<(), Redeclared> {
        self.operations
            .declare(name, sig)
            .map_err(|NotDisjoint(n)| Redeclared(n))
    }

    pub fn has_atom(&self, name: &str) -> bool {
        self.atoms.contains(name)
    }

    pub fn constant(&self, name: &str) -> Option<&Type> {
        self.constants.get(name)
    }

    pub fn operation(&self, name: &str) -> Option<&OpSig> {
        self.operations.get(name)
    }

    pub fn atoms(&self) -> &BTreeSet<Name> {
        &self.atoms
    }

    pub fn constants(&self) -> &BTreeMap<Name, Type> {
        &self.constants
    }

    pub fn operations(&self) -> &EffectSignature {
        &self.operations
    }

    /// Returns the first undeclared atom or operation mentioned by `ty`.
    pub fn undeclared_in(&self, ty: &Type) -> Option<Name> {
        let mut atoms = BTreeSet::new();
        ty.atoms(&mut atoms);
        if let Some(a) = atoms.into_iter().find(|a| !self.atoms.contains(a)) {
            return Some(a);
        }
        let mut ops = BTreeSet::new();
        ty.operations(&mut ops);
        ops.into_iter().find(|o| !self.operations.contains(o))
    }
}

/// Variable bindings plus the global signature.
#[derive(Clone, Debug)]
pub struct TypingContext {
    signature: Arc<Signature>,
    vars: Vec<(Name, Type)>,
}

impl TypingContext {
    pub fn new(signature: Signature) -> Self {
        TypingContext {
            signature: Arc::new(signature),
            vars: Vec::new(),
        }
    }

    pub fn from_shared(signature: Arc<Signature>) -> Self {
        TypingContext {
            signature,
            vars: Vec::new(),
        }
    }

    pub fn with_var(&self, name: Name, ty: Type) -> Self {
        let mut c = self.clone();
        c.vars.push((name, ty));
        c
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn lookup(&self, x: &str) -> Option<&Type> {
        self.vars
            .iter()
            .rev()
            .find(|(n, _)| &**n == x)
            .map(|(_, t)| t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "camelCase")]
pub enum TypeErrorKind {
    Mismatch,
    UnknownName,
    RowNotDisjoint,
    RowNotEmpty,
    NotAFunction,
    NotAComputation,
    ClauseShape,
    AnnotationRequired,
}

impl fmt::Display for TypeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TypeErrorKind::Mismatch => "type mismatch",
            TypeErrorKind::UnknownName => "unknown name",
            TypeErrorKind::RowNotDisjoint => "effect rows not disjoint",
            TypeErrorKind::RowNotEmpty => "effect row not empty",
            TypeErrorKind::NotAFunction => "not a function",
            TypeErrorKind::NotAComputation => "not a computation",
            TypeErrorKind::ClauseShape => "malformed handler clause",
            TypeErrorKind::AnnotationRequired => "annotation required",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeError {
    pub kind: TypeErrorKind,
    /// Location of the offending subterm.
    pub path: Path,
    pub expected: Option<Type>,
    pub found: Option<Type>,
    pub detail: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.kind, self.path)?;
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        match (&self.expected, &self.found) {
            (Some(e), Some(fd)) => write!(f, " (expected {e}, found {fd})"),
            (Some(e), None) => write!(f, " (expected {e})"),
            (None, Some(fd)) => write!(f, " (found {fd})"),
            (None, None) => Ok(()),
        }
    }
}

impl std::error::Error for TypeError {}

type Result<T> = std::result::Result<T, TypeError>;

/// `E1 ⊎ E2`, failing with `rowNotDisjoint` when the domains overlap.
pub fn disjoint_union(e1: &EffectSignature, e2: &EffectSignature) -> Result<EffectSignature> {
    e1.disjoint_union(e2).map_err(|NotDisjoint(op)| TypeError {
        kind: TypeErrorKind::RowNotDisjoint,
        path: Path::root(),
        expected: None,
        found: None,
        detail: format!("operation `{op}` occurs in both rows"),
    })
}

/// Structural subtyping with width subsumption on effect rows.
pub fn subtype(sub: &Type, sup: &Type) -> bool {
    match (sub, sup) {
        (Type::Atom(a), Type::Atom(b)) => a == b,
        (Type::Fun(a1, b1), Type::Fun(a2, b2)) => subtype(a2, a1) && subtype(b1, b2),
        (Type::Comp(r1, a1), Type::Comp(r2, a2)) => r1.is_subset(r2) && subtype(a1, a2),
        _ => false,
    }
}

/// Least upper bound in the subtype order, if any.
pub fn join(a: &Type, b: &Type) -> Option<Type> {
    match (a, b) {
        (Type::Atom(x), Type::Atom(y)) if x == y => Some(a.clone()),
        (Type::Fun(a1, b1), Type::Fun(a2, b2)) => Some(Type::fun(meet(a1, a2)?, join(b1, b2)?)),
        (Type::Comp(r1, x1), Type::Comp(r2, x2)) => Some(Type::Comp(
            r1.union(r2).cloned().collect(),
            Box::new(join(x1, x2)?),
        )),
        _ => None,
    }
}

/// Greatest lower bound in the subtype order, if any.
pub fn meet(a: &Type, b: &Type) -> Option<Type> {
    match (a, b) {
        (Type::Atom(x), Type::Atom(y)) if x == y => Some(a.clone()),
        (Type::Fun(a1, b1), Type::Fun(a2, b2)) => Some(Type::fun(join(a1, a2)?, meet(b1, b2)?)),
        (Type::Comp(r1, x1), Type::Comp(r2, x2)) => Some(Type::Comp(
            r1.intersection(r2).cloned().collect(),
            Box::new(meet(x1, x2)?),
        )),
        _ => None,
    }
}

/// Synthesizes the least type of `term`.
pub fn synthesize(ctx: &TypingContext, term: &Term) -> Result<Type> {
    Checker::new(ctx).synth(term).map(|(_, t)| t)
}

/// Checks `term` against `ty`, allowing subsumption.
pub fn check_against(ctx: &TypingContext, term: &Term, ty: &Type) -> Result<()> {
    let mut c = Checker::new(ctx);
    c.well_formed(ty)?;
    c.check(term, ty).map(|_| ())
}

/// Synthesizes the type of `term` and returns it together with the
/// elaborated term (all binders annotated, ascriptions removed).
pub fn elaborate(ctx: &TypingContext, term: &Term) -> Result<(Term, Type)> {
    Checker::new(ctx).synth(term)
}

/// Like [`elaborate`] but in checking mode against `ty`.
pub fn elaborate_against(ctx: &TypingContext, term: &Term, ty: &Type) -> Result<Term> {
    let mut c = Checker::new(ctx);
    c.well_formed(ty)?;
    c.check(term, ty)
}

const MAX_HANDLER_ROUNDS: usize = 64;

struct Checker<'a> {
    sig: &'a Signature,
    vars: Vec<(Name, Type)>,
    path: Vec<usize>,
}

impl<'a> Checker<'a> {
    fn new(ctx: &'a TypingContext) -> Self {
        Checker {
            sig: &ctx.signature,
            vars: ctx.vars.clone(),
            path: Vec::new(),
        }
    }

    fn err(
        &self,
        kind: TypeErrorKind,
        expected: Option<&Type>,
        found: Option<&Type>,
        detail: impl Into<String>,
    ) -> TypeError {
        TypeError {
            kind,
            path: Path(self.path.clone()),
            expected: expected.cloned(),
            found: found.cloned(),
            detail: detail.into(),
        }
    }

    fn at<R>(&mut self, i: usize, f: impl FnOnce(&mut Self) -> R) -> R {
        self.path.push(i);
        let r = f(self);
        self.path.pop();
        r
    }

    fn at_abs<R>(&mut self, p: &[usize], f: impl FnOnce(&mut Self) -> R) -> R {
        let saved = std::mem::replace(&mut self.path, p.to_vec());
        let r = f(self);
        self.path = saved;
        r
    }

    fn bind<R>(&mut self, x: &Name, ty: Type, f: impl FnOnce(&mut Self) -> R) -> R {
        self.vars.push((x.clone(), ty));
        let r = f(self);
        self.vars.pop();
        r
    }

    fn well_formed(&self, ty: &Type) -> Result<()> {
        match self.sig.undeclared_in(ty) {
            Some(n) => Err(self.err(
                TypeErrorKind::UnknownName,
                None,
                None,
                format!("type mentions undeclared `{n}`"),
            )),
            None => Ok(()),
        }
    }

    fn op_sig(&self, op: &Name) -> Result<OpSig> {
        self.sig.operation(op).cloned().ok_or_else(|| {
            self.err(
                TypeErrorKind::UnknownName,
                None,
                None,
                format!("undeclared operation `{op}`"),
            )
        })
    }

    fn synth(&mut self, t: &Term) -> Result<(Term, Type)> {
        match t {
            Term::Var(x) => match self.vars.iter().rev().find(|(n, _)| n == x) {
                Some((_, ty)) => Ok((t.clone(), ty.clone())),
                None => Err(self.err(
                    TypeErrorKind::UnknownName,
                    None,
                    None,
                    format!("unbound variable `{x}`"),
                )),
            },
            Term::Const(c) => match self.sig.constant(c) {
                Some(ty) => Ok((t.clone(), ty.clone())),
                None => Err(self.err(
                    TypeErrorKind::UnknownName,
                    None,
                    None,
                    format!("undeclared constant `{c}`"),
                )),
            },
            Term::Abs {
                binder,
                ann: Some(dom),
                body,
            } => {
                self.well_formed(dom)?;
                let (body, cod) = self.bind(binder, dom.clone(), |c| c.at(0, |c| c.synth(body)))?;
                Ok((
                    Term::Abs {
                        binder: binder.clone(),
                        ann: Some(dom.clone()),
                        body: Box::new(body),
                    },
                    Type::fun(dom.clone(), cod),
                ))
            }
            Term::Abs { binder, ann: None, .. } => Err(self.err(
                TypeErrorKind::AnnotationRequired,
                None,
                None,
                format!("cannot infer the type of `\\{binder}`; add an ascription"),
            )),
            Term::App(..) => {
                let (t, ty) = self.app(t, None)?;
                Ok((t, ty))
            }
            Term::Op {
                op,
                param,
                binder,
                cont,
            } => {
                let sig = self.op_sig(op)?;
                let param = self.at(0, |c| c.check(param, &sig.input))?;
                let (cont, cty) =
                    self.bind(binder, sig.output.clone(), |c| c.at(1, |c| c.synth(cont)))?;
                match cty {
                    Type::Comp(mut row, atom) => {
                        row.insert(op.clone());
                        Ok((
                            Term::Op {
                                op: op.clone(),
                                param: Box::new(param),
                                binder: binder.clone(),
                                cont: Box::new(cont),
                            },
                            Type::Comp(row, atom),
                        ))
                    }
                    other => Err(self.at(1, |c| {
                        c.err(
                            TypeErrorKind::NotAComputation,
                            None,
                            Some(&other),
                            "operation continuation must return a computation",
                        )
                    })),
                }
            }
            Term::Eta(m) => {
                let (m, ty) = self.at(0, |c| c.synth(m))?;
                Ok((Term::eta(m), Type::Comp(EffectRow::new(), Box::new(ty))))
            }
            Term::Extract(m) => {
                let (m, ty) = self.at(0, |c| c.synth(m))?;
                match ty {
                    Type::Comp(row, atom) if row.is_empty() => Ok((Term::extract(m), *atom)),
                    Type::Comp(..) => Err(self.err(
                        TypeErrorKind::RowNotEmpty,
                        None,
                        Some(&ty),
                        "extract needs a computation with no effects",
                    )),
                    other => Err(self.err(
                        TypeErrorKind::NotAComputation,
                        None,
                        Some(&other),
                        "extract needs a computation",
                    )),
                }
            }
            Term::Commute(m) => {
                let (m, ty) = self.at(0, |c| c.synth(m))?;
                match ty {
                    Type::Fun(dom, cod) => match *cod {
                        Type::Comp(row, b) => Ok((
                            Term::commute(m),
                            Type::Comp(row, Box::new(Type::Fun(dom, b))),
                        )),
                        other => Err(self.err(
                            TypeErrorKind::NotAComputation,
                            None,
                            Some(&other),
                            "commute needs a function returning a computation",
                        )),
                    },
                    other => Err(self.err(
                        TypeErrorKind::NotAFunction,
                        None,
                        Some(&other),
                        "commute needs a function",
                    )),
                }
            }
            Term::Handle(h, n) => self.handle(h, n),
            Term::Ann(m, ty) => {
                self.well_formed(ty)?;
                let m = self.at(0, |c| c.check(m, ty))?;
                Ok((m, ty.clone()))
            }
        }
    }

    fn check(&mut self, t: &Term, expected: &Type) -> Result<Term> {
        match (t, expected) {
            (Term::Abs { binder, ann, body }, Type::Fun(dom, cod)) => {
                let bind_ty = match ann {
                    Some(a) => {
                        self.well_formed(a)?;
                        if !subtype(dom, a) {
                            return Err(self.err(
                                TypeErrorKind::Mismatch,
                                Some(dom),
                                Some(a),
                                format!("binder `{binder}` is annotated with an incompatible type"),
                            ));
                        }
                        a.clone()
                    }
                    None => (**dom).clone(),
                };
                let body = self.bind(binder, bind_ty.clone(), |c| c.at(0, |c| c.check(body, cod)))?;
                Ok(Term::Abs {
                    binder: binder.clone(),
                    ann: Some(bind_ty),
                    body: Box::new(body),
                })
            }
            (Term::Abs { ann: None, .. }, _) => Err(self.err(
                TypeErrorKind::Mismatch,
                Some(expected),
                None,
                "an abstraction cannot have this type",
            )),
            (Term::Eta(m), Type::Comp(_, atom)) => {
                let m = self.at(0, |c| c.check(m, atom))?;
                Ok(Term::eta(m))
            }
            (
                Term::Op {
                    op,
                    param,
                    binder,
                    cont,
                },
                Type::Comp(row, _),
            ) => {
                if !row.contains(op) {
                    let (_, found) = self.synth(t)?;
                    return Err(self.err(
                        TypeErrorKind::Mismatch,
                        Some(expected),
                        Some(&found),
                        format!("operation `{op}` is not allowed by the expected row"),
                    ));
                }
                let sig = self.op_sig(op)?;
                let param = self.at(0, |c| c.check(param, &sig.input))?;
                let cont = self.bind(binder, sig.output.clone(), |c| {
                    c.at(1, |c| c.check(cont, expected))
                })?;
                Ok(Term::Op {
                    op: op.clone(),
                    param: Box::new(param),
                    binder: binder.clone(),
                    cont: Box::new(cont),
                })
            }
            (Term::Commute(m), Type::Comp(row, inner)) => match &**inner {
                Type::Fun(a, b) => {
                    let want = Type::fun((**a).clone(), Type::Comp(row.clone(), b.clone()));
                    let m = self.at(0, |c| c.check(m, &want))?;
                    Ok(Term::commute(m))
                }
                _ => self.check_by_synthesis(t, expected),
            },
            (Term::App(..), _) => self.app(t, Some(expected)).map(|(t, _)| t),
            (Term::Ann(m, ty), _) => {
                self.well_formed(ty)?;
                let m = self.at(0, |c| c.check(m, ty))?;
                if !subtype(ty, expected) {
                    return Err(self.err(
                        TypeErrorKind::Mismatch,
                        Some(expected),
                        Some(ty),
                        "",
                    ));
                }
                Ok(m)
            }
            _ => self.check_by_synthesis(t, expected),
        }
    }

    fn check_by_synthesis(&mut self, t: &Term, expected: &Type) -> Result<Term> {
        let (t, found) = self.synth(t)?;
        if subtype(&found, expected) {
            Ok(t)
        } else {
            Err(self.err(TypeErrorKind::Mismatch, Some(expected), Some(&found), ""))
        }
    }

    /// Application spines. A head abstraction applied to arguments binds its
    /// variable at the argument's synthesized type when it has no annotation.
    fn app(&mut self, t: &Term, expected: Option<&Type>) -> Result<(Term, Type)> {
        let mut args: Vec<&Term> = Vec::new();
        let mut head = t;
        while let Term::App(f, a) = head {
            args.push(a);
            head = f;
        }
        args.reverse();
        let n = args.len();
        let base = self.path.clone();
        let arg_paths: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut p = base.clone();
                p.extend(std::iter::repeat(0).take(n - 1 - i));
                p.push(1);
                p
            })
            .collect();
        let mut head_path = base.clone();
        head_path.extend(std::iter::repeat(0).take(n));
        let spine: Vec<(&Term, Vec<usize>)> = args.into_iter().zip(arg_paths).collect();
        let (head, args, ty) = self.spine(head, head_path, &spine, expected)?;
        Ok((Term::apps(head, args), ty))
    }

    fn spine(
        &mut self,
        head: &Term,
        head_path: Vec<usize>,
        args: &[(&Term, Vec<usize>)],
        expected: Option<&Type>,
    ) -> Result<(Term, Vec<Term>, Type)> {
        if let (Term::Abs { binder, ann, body }, Some(((arg, arg_path), rest))) =
            (head, args.split_first())
        {
            let (arg, bind_ty) = match ann {
                Some(a) => {
                    self.at_abs(&head_path, |c| c.well_formed(a))?;
                    let arg = self.at_abs(arg_path, |c| c.check(arg, a))?;
                    (arg, a.clone())
                }
                None => self.at_abs(arg_path, |c| c.synth(arg))?,
            };
            let mut body_path = head_path.clone();
            body_path.push(0);
            let (body, mut rest_args, ty) =
                self.bind(binder, bind_ty.clone(), |c| c.spine(body, body_path, rest, expected))?;
            let head = Term::Abs {
                binder: binder.clone(),
                ann: Some(bind_ty),
                body: Box::new(body),
            };
            rest_args.insert(0, arg);
            return Ok((head, rest_args, ty));
        }
        if args.is_empty() {
            return self.at_abs(&head_path, |c| match expected {
                Some(e) => c.check(head, e).map(|t| (t, vec![], e.clone())),
                None => c.synth(head).map(|(t, ty)| (t, vec![], ty)),
            });
        }
        let (head, mut fty) = self.at_abs(&head_path, |c| c.synth(head))?;
        let mut out = Vec::with_capacity(args.len());
        for (i, (arg, arg_path)) in args.iter().enumerate() {
            match fty {
                Type::Fun(dom, cod) => {
                    out.push(self.at_abs(arg_path, |c| c.check(arg, &dom))?);
                    fty = *cod;
                }
                other => {
                    let at = if i == 0 {
                        head_path.clone()
                    } else {
                        let mut p = args[i - 1].1.clone();
                        p.pop();
                        p
                    };
                    return Err(self.at_abs(&at, |c| {
                        c.err(
                            TypeErrorKind::NotAFunction,
                            None,
                            Some(&other),
                            "applied term is not a function",
                        )
                    }));
                }
            }
        }
        if let Some(e) = expected {
            if !subtype(&fty, e) {
                let mut at = args[args.len() - 1].1.clone();
                at.pop();
                return Err(self.at_abs(&at, |c| {
                    c.err(TypeErrorKind::Mismatch, Some(e), Some(&fty), "")
                }));
            }
            return Ok((head, out, e.clone()));
        }
        Ok((head, out, fty))
    }

    /// The result type of `t` applied to arguments of the given types.
    fn apply_to_types(&mut self, t: &Term, args: &[Type]) -> Result<Type> {
        let Some((first, rest)) = args.split_first() else {
            return self.synth(t).map(|(_, ty)| ty);
        };
        match t {
            Term::Abs { binder, ann, body } => {
                let bind_ty = match ann {
                    Some(a) => {
                        self.well_formed(a)?;
                        if !subtype(first, a) {
                            return Err(self.err(
                                TypeErrorKind::Mismatch,
                                Some(first),
                                Some(a),
                                format!("clause binder `{binder}` has an incompatible annotation"),
                            ));
                        }
                        a.clone()
                    }
                    None => first.clone(),
                };
                self.bind(binder, bind_ty, |c| c.at(0, |c| c.apply_to_types(body, rest)))
            }
            _ => {
                let (_, mut ty) = self.synth(t)?;
                for a in args {
                    match ty {
                        Type::Fun(dom, cod) if subtype(a, &dom) => ty = *cod,
                        Type::Fun(dom, _) => {
                            return Err(self.err(
                                TypeErrorKind::Mismatch,
                                Some(&dom),
                                Some(a),
                                "handler clause cannot accept this argument",
                            ))
                        }
                        other => {
                            return Err(self.err(
                                TypeErrorKind::ClauseShape,
                                None,
                                Some(&other),
                                "handler clause takes too few arguments",
                            ))
                        }
                    }
                }
                Ok(ty)
            }
        }
    }

    fn handle(&mut self, h: &Handler, scrutinee: &Term) -> Result<(Term, Type)> {
        let k = h.clauses().len();
        let (scrutinee, sty) = self.at(k + 1, |c| c.synth(scrutinee))?;
        let (row, gamma) = match sty {
            Type::Comp(row, g) => (row, *g),
            other => {
                return Err(self.at(k + 1, |c| {
                    c.err(
                        TypeErrorKind::NotAComputation,
                        None,
                        Some(&other),
                        "a handler interprets computations",
                    )
                }))
            }
        };
        let mut sigs = Vec::with_capacity(k);
        for (i, op) in h.clauses().keys().enumerate() {
            sigs.push(self.at(i, |c| c.op_sig(op))?);
        }
        let residual: EffectRow = row
            .iter()
            .filter(|op| !h.handles(op))
            .cloned()
            .collect();

        let eta_cod = self.at(k, |c| c.apply_to_types(h.eta(), std::slice::from_ref(&gamma)))?;
        let (mut out_row, mut delta) = match eta_cod {
            Type::Comp(r, d) => (r, *d),
            other => {
                return Err(self.at(k, |c| {
                    c.err(
                        TypeErrorKind::ClauseShape,
                        None,
                        Some(&other),
                        "the eta clause must return a computation",
                    )
                }))
            }
        };
        out_row.extend(residual);

        // The output row and atom are the least fixpoint of what the clauses
        // perform when their continuation is typed at the current estimate.
        let mut rounds = 0;
        loop {
            let mut changed = false;
            for (i, (clause, sig)) in h.clauses().values().zip(&sigs).enumerate() {
                let cont_ty = Type::fun(
                    sig.output.clone(),
                    Type::Comp(out_row.clone(), Box::new(delta.clone())),
                );
                let cod = self.at(i, |c| {
                    c.apply_to_types(clause, &[sig.input.clone(), cont_ty])
                })?;
                let (r, d) = match cod {
                    Type::Comp(r, d) => (r, *d),
                    other => {
                        return Err(self.at(i, |c| {
                            c.err(
                                TypeErrorKind::ClauseShape,
                                None,
                                Some(&other),
                                "a handler clause must return a computation",
                            )
                        }))
                    }
                };
                if !r.is_subset(&out_row) {
                    out_row.extend(r);
                    changed = true;
                }
                let joined = join(&delta, &d).ok_or_else(|| {
                    self.at(i, |c| {
                        c.err(
                            TypeErrorKind::Mismatch,
                            Some(&delta),
                            Some(&d),
                            "handler clauses disagree on the result type",
                        )
                    })
                })?;
                if joined != delta {
                    delta = joined;
                    changed = true;
                }
            }
            rounds += 1;
            if !changed || rounds >= MAX_HANDLER_ROUNDS {
                break;
            }
        }

        let result = Type::Comp(out_row, Box::new(delta));
        let mut clauses = Vec::with_capacity(k);
        for (i, ((op, clause), sig)) in h.clauses().iter().zip(&sigs).enumerate() {
            let want = Type::arrows(
                [
                    sig.input.clone(),
                    Type::fun(sig.output.clone(), result.clone()),
                ],
                result.clone(),
            );
            clauses.push((op.clone(), self.at(i, |c| c.check(clause, &want))?));
        }
        let eta = self.at(k, |c| {
            c.check(h.eta(), &Type::fun(gamma.clone(), result.clone()))
        })?;
        let handler = Handler::new(clauses, eta).expect("clause names come from a map");
        Ok((Term::handle(handler, scrutinee), result))
    }
}
