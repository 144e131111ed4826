//! ASCII concrete syntax: lexer, parser, printer and declaration files.
//!
//! Terms:
//!
//! ```text
//! \x. M    \x y. M    \(x : T) y. M      abstraction
//! M N                                    application (left-assoc)
//! eta M    extract M    commute M        injection, extraction, exchange
//! do op(M, \x. N)                        operation invocation
//! handle { op -> M, eta -> N } P         handler applied to P (eta clause optional)
//! (M : T)    *                           ascription, unit value
//! M >>= N    f .>> X    F <<. x    F <<.>> X
//! M /\ N     M -> N     M = N            the constants `and`, `imp`, `eq`
//! M /\~ N    M ->~ N    M =~ N           their lifted versions
//! ```
//!
//! Binding strength from loosest: `>>=` (left), `->`/`->~` (right), `/\`/`/\~`
//! (right), `=`/`=~` (non-associative), `.>>`/`<<.`/`<<.>>` (left),
//! application. An abstraction extends as far right as possible.
//!
//! Types: `a -> b` (right-assoc), `F{op1, op2}(a)`, `F{}(a)`, atoms, `1`.
//!
//! Declaration files hold `atom n.`, `constant n : T.`,
//! `operation n : A ~> B.`, `def n : T = M.` (ascription optional) and the
//! directives `check M.`, `normalize M.`, `trace M.`; `#` starts a comment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::prelude;
use crate::syntax::{fresh_name, Handler, Name, OpSig, Path, Term, Type};
use crate::typecheck::Signature;

/// The constant behind `/\`.
pub const AND: &str = "and";
/// The constant behind `->`.
pub const IMP: &str = "imp";
/// The constant behind `=`.
pub const EQ: &str = "eq";

const TERM_KEYWORDS: [&str; 5] = ["eta", "do", "handle", "extract", "commute"];
const DECL_KEYWORDS: [&str; 7] = [
    "atom",
    "constant",
    "operation",
    "def",
    "check",
    "normalize",
    "trace",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Default, serde::Serialize)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

impl Span {
    fn to(self, other: Span) -> Span {
        Span {
            start: self.start,
            end: other.end,
        }
    }
}

/// Source spans laid out like the term: `children[i]` belongs to the child
/// at index `i` in [`Term::children`]. Nodes produced by sugar or by
/// inlining a definition carry the span of the construct that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceMap {
    pub span: Span,
    pub children: Vec<SourceMap>,
}

impl SourceMap {
    fn leaf(span: Span) -> SourceMap {
        SourceMap {
            span,
            children: Vec::new(),
        }
    }

    fn node(span: Span, children: Vec<SourceMap>) -> SourceMap {
        SourceMap { span, children }
    }

    /// Every node of `t` mapped to `span`.
    fn uniform(t: &Term, span: Span) -> SourceMap {
        SourceMap {
            span,
            children: t.children().into_iter().map(|c| Self::uniform(c, span)).collect(),
        }
    }

    /// Span of the deepest recorded node along `path`.
    pub fn locate(&self, path: &Path) -> Span {
        let mut m = self;
        for &i in &path.0 {
            match m.children.get(i) {
                Some(c) => m = c,
                None => break,
            }
        }
        m.span
    }

    /// Replaces the map of the first subterm of `t` equal to `sub`.
    fn graft(&mut self, t: &Term, sub: &Term, map: &SourceMap) -> bool {
        if t == sub {
            *self = map.clone();
            return true;
        }
        for (i, c) in t.children().into_iter().enumerate() {
            if self.children[i].graft(c, sub, map) {
                return true;
            }
        }
        false
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    Lexical(char),
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: String, found: String },
    #[error("undeclared {what} `{name}`")]
    Undeclared { what: &'static str, name: String },
    #[error("`{0}` is used before its declaration")]
    UseBeforeDeclaration(String),
    #[error("duplicate handler clause for `{0}`")]
    DuplicateClause(String),
    #[error("malformed effect row: {0}")]
    MalformedRow(String),
    #[error("`{0}` is already defined")]
    Redefinition(String),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {kind}")]
pub struct ParseError {
    pub pos: Pos,
    pub kind: ParseErrorKind,
}

type Result<T> = std::result::Result<T, ParseError>;

/// A named term. When `ty` is present, references inline as `(body : ty)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Def {
    pub name: Name,
    pub ty: Option<Type>,
    pub body: Term,
    pub map: SourceMap,
    pub pos: Pos,
}

impl Def {
    pub fn term(&self) -> Term {
        match &self.ty {
            Some(t) => Term::ann(self.body.clone(), t.clone()),
            None => self.body.clone(),
        }
    }
}

/// Declarations visible to the parser.
#[derive(Clone, Debug, Default)]
pub struct Env {
    signature: Signature,
    defs: BTreeMap<Name, Def>,
    def_order: Vec<Name>,
    /// Names declared later in the file being parsed.
    pending: BTreeSet<Name>,
    /// Accept undeclared identifiers as free variables and skip declaration
    /// checks for operations and atoms.
    lenient: bool,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn with_signature(signature: Signature) -> Env {
        Env {
            signature,
            ..Env::default()
        }
    }

    /// An environment that resolves only the given signature's constants and
    /// reads every other identifier as a free variable.
    pub fn lenient(signature: Signature) -> Env {
        Env {
            signature,
            lenient: true,
            ..Env::default()
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn signature_mut(&mut self) -> &mut Signature {
        &mut self.signature
    }

    pub fn def(&self, name: &str) -> Option<&Def> {
        self.defs.get(name)
    }

    /// Definitions in declaration order.
    pub fn defs(&self) -> impl Iterator<Item = &Def> {
        self.def_order.iter().map(|n| &self.defs[n])
    }

    fn is_term_name_taken(&self, n: &str) -> bool {
        self.defs.contains_key(n)
            || self.signature.constant(n).is_some()
            || self.signature.operation(n).is_some()
    }

    pub fn add_def(&mut self, def: Def) -> std::result::Result<(), Name> {
        if self.is_term_name_taken(&def.name) {
            return Err(def.name);
        }
        self.def_order.push(def.name.clone());
        self.defs.insert(def.name.clone(), def);
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectiveKind {
    Check,
    Normalize,
    Trace,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decl {
    Atom(Name),
    Constant(Name, Type),
    Operation(Name, OpSig),
    Def(Def),
    Directive {
        kind: DirectiveKind,
        term: Term,
        map: SourceMap,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Item {
    pub pos: Pos,
    pub decl: Decl,
}

/// A parsed declaration file and the environment it builds.
#[derive(Clone, Debug)]
pub struct DeclFile {
    pub items: Vec<Item>,
    pub env: Env,
}

impl DeclFile {
    pub fn directives(&self) -> impl Iterator<Item = (Pos, DirectiveKind, &Term, &SourceMap)> {
        self.items.iter().filter_map(|it| match &it.decl {
            Decl::Directive { kind, term, map } => Some((it.pos, *kind, term, map)),
            _ => None,
        })
    }
}

pub fn parse_term(src: &str, env: &Env) -> Result<Term> {
    parse_term_mapped(src, env).map(|(t, _)| t)
}

/// Parses a term and returns its source map alongside.
pub fn parse_term_mapped(src: &str, env: &Env) -> Result<(Term, SourceMap)> {
    let toks = lex(src)?;
    let mut p = Parser::new(&toks, env);
    let r = p.term()?;
    p.expect_eof()?;
    Ok(r)
}

pub fn parse_type(src: &str, env: &Env) -> Result<Type> {
    let toks = lex(src)?;
    let mut p = Parser::new(&toks, env);
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_file(src: &str) -> Result<DeclFile> {
    parse_file_with(src, Env::new())
}

/// Parses a declaration file on top of an existing environment.
pub fn parse_file_with(src: &str, base: Env) -> Result<DeclFile> {
    let toks = lex(src)?;
    let mut env = base;
    env.pending = prescan(&toks);
    let mut items = Vec::new();
    let mut i = 0;
    loop {
        let mut p = Parser::new(&toks[i..], &env);
        if p.peek() == &Tok::Eof {
            break;
        }
        let item = p.decl()?;
        i += p.pos;
        match &item.decl {
            Decl::Atom(n) => env
                .signature
                .declare_atom(n.clone())
                .map_err(|_| redefinition(item.pos, n))?,
            Decl::Constant(n, ty) => {
                if env.is_term_name_taken(n) {
                    return Err(redefinition(item.pos, n));
                }
                env.signature
                    .declare_constant(n.clone(), ty.clone())
                    .map_err(|_| redefinition(item.pos, n))?
            }
            Decl::Operation(n, sig) => {
                if env.is_term_name_taken(n) {
                    return Err(redefinition(item.pos, n));
                }
                env.signature
                    .declare_operation(n.clone(), sig.clone())
                    .map_err(|_| redefinition(item.pos, n))?
            }
            Decl::Def(d) => env
                .add_def(d.clone())
                .map_err(|n| redefinition(item.pos, &n))?,
            Decl::Directive { .. } => {}
        }
        items.push(item);
    }
    env.pending.clear();
    Ok(DeclFile { items, env })
}

fn redefinition(pos: Pos, n: &Name) -> ParseError {
    ParseError {
        pos,
        kind: ParseErrorKind::Redefinition(n.to_string()),
    }
}

/// Names introduced by declarations anywhere in the file, for
/// distinguishing use-before-declaration from plain unknown names.
fn prescan(toks: &[(Tok, Span)]) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    for (i, w) in toks.windows(2).enumerate() {
        if let (Tok::Ident(kw), Tok::Ident(name)) = (&w[0].0, &w[1].0) {
            let at_start = i == 0 || toks[i - 1].0 == Tok::Dot;
            if at_start && ["atom", "constant", "operation", "def"].contains(&kw.as_str()) {
                out.insert(Name::new(name));
            }
        }
    }
    out
}

// ---------------------------------------------------------------- lexer

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Star,
    Backslash,
    Dot,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Arrow,
    ArrowLifted,
    Squiggle,
    Bind,
    And,
    AndLifted,
    Eq,
    EqLifted,
    ApplyLeft,
    ApplyRight,
    ApplyBoth,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
            other => {
                let s = SYMBOLS
                    .iter()
                    .find(|(_, t)| t == other)
                    .map(|(s, _)| *s)
                    .unwrap_or("?");
                write!(f, "`{s}`")
            }
        }
    }
}

/// Longest symbols first so that prefixes lose.
const SYMBOLS: [(&str, Tok); 20] = [
    ("<<.>>", Tok::ApplyBoth),
    ("->~", Tok::ArrowLifted),
    ("/\\~", Tok::AndLifted),
    (".>>", Tok::ApplyLeft),
    ("<<.", Tok::ApplyRight),
    (">>=", Tok::Bind),
    ("->", Tok::Arrow),
    ("~>", Tok::Squiggle),
    ("/\\", Tok::And),
    ("=~", Tok::EqLifted),
    ("=", Tok::Eq),
    (".", Tok::Dot),
    ("\\", Tok::Backslash),
    ("(", Tok::LParen),
    (")", Tok::RParen),
    ("{", Tok::LBrace),
    ("}", Tok::RBrace),
    (",", Tok::Comma),
    (":", Tok::Colon),
    ("*", Tok::Star),
];

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn is_ident_start(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Whether `s` lexes as a single identifier.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars().peekable();
    match chars.next() {
        Some(c) if is_ident_start(c) => {}
        _ => return false,
    }
    while let Some(c) = chars.next() {
        if c == '-' {
            match chars.peek() {
                Some(&d) if d.is_alphanumeric() => continue,
                _ => return false,
            }
        }
        if !is_ident_char(c) {
            return false;
        }
    }
    true
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    'outer: while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let start = Pos { line, col };
        if is_ident_start(c) {
            let mut j = i + 1;
            while j < chars.len() {
                if is_ident_char(chars[j]) {
                    j += 1;
                } else if chars[j] == '-' && j + 1 < chars.len() && chars[j + 1].is_alphanumeric() {
                    j += 2;
                } else {
                    break;
                }
            }
            let s: String = chars[i..j].iter().collect();
            let n = j - i;
            advance(&mut i, &mut line, &mut col, n);
            out.push((Tok::Ident(s), Span { start, end: Pos { line, col } }));
            continue;
        }
        for (sym, tok) in SYMBOLS.iter() {
            let n = sym.chars().count();
            if i + n <= chars.len() && chars[i..i + n].iter().copied().eq(sym.chars()) {
                advance(&mut i, &mut line, &mut col, n);
                out.push((tok.clone(), Span { start, end: Pos { line, col } }));
                continue 'outer;
            }
        }
        return Err(ParseError {
            pos: start,
            kind: ParseErrorKind::Lexical(c),
        });
    }
    let end = Pos { line, col };
    out.push((Tok::Eof, Span { start: end, end }));
    Ok(out)
}

// ---------------------------------------------------------------- parser

type Parsed = (Term, SourceMap);

struct Parser<'e> {
    toks: &'e [(Tok, Span)],
    pos: usize,
    env: &'e Env,
    scope: Vec<Name>,
}

#[derive(Clone, Copy)]
enum Sugar {
    Bind,
    ApplyLeft,
    ApplyRight,
    ApplyBoth,
    Lifted(&'static str),
}

impl<'e> Parser<'e> {
    fn new(toks: &'e [(Tok, Span)], env: &'e Env) -> Self {
        Parser {
            toks,
            pos: 0,
            env,
            scope: Vec::new(),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if t.0 != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            pos: self.span().start,
            kind,
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        self.error(ParseErrorKind::Unexpected {
            expected: expected.to_string(),
            found: self.peek().to_string(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<Span> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    fn expect_eof(&self) -> Result<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(Name, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let span = self.bump().1;
                Ok((Name::new(&s), span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn missing(&self, what: &'static str, name: &Name, pos: Pos) -> ParseError {
        let kind = if self.env.pending.contains(name) {
            ParseErrorKind::UseBeforeDeclaration(name.to_string())
        } else {
            ParseErrorKind::Undeclared {
                what,
                name: name.to_string(),
            }
        };
        ParseError { pos, kind }
    }

    // ---- declarations

    fn decl(&mut self) -> Result<Item> {
        let (kw, span) = self.ident("a declaration")?;
        let pos = span.start;
        let decl = match kw.as_str() {
            "atom" => {
                let (n, _) = self.ident("an atom name")?;
                Decl::Atom(n)
            }
            "constant" => {
                let (n, _) = self.ident("a constant name")?;
                self.expect(Tok::Colon)?;
                Decl::Constant(n, self.ty()?)
            }
            "operation" => {
                let (n, _) = self.ident("an operation name")?;
                self.expect(Tok::Colon)?;
                let input = self.ty()?;
                self.expect(Tok::Squiggle)?;
                let output = self.ty()?;
                Decl::Operation(n, OpSig { input, output })
            }
            "def" => {
                let (n, _) = self.ident("a definition name")?;
                let ty = if *self.peek() == Tok::Colon {
                    self.bump();
                    Some(self.ty()?)
                } else {
                    None
                };
                self.expect(Tok::Eq)?;
                let (body, map) = self.term()?;
                Decl::Def(Def {
                    name: n,
                    ty,
                    body,
                    map,
                    pos,
                })
            }
            "check" | "normalize" | "trace" => {
                let kind = match kw.as_str() {
                    "check" => DirectiveKind::Check,
                    "normalize" => DirectiveKind::Normalize,
                    _ => DirectiveKind::Trace,
                };
                let (term, map) = self.term()?;
                Decl::Directive { kind, term, map }
            }
            _ => {
                return Err(ParseError {
                    pos,
                    kind: ParseErrorKind::Unexpected {
                        expected: format!("one of {}", DECL_KEYWORDS.join(", ")),
                        found: format!("`{kw}`"),
                    },
                })
            }
        };
        self.expect(Tok::Dot)?;
        Ok(Item { pos, decl })
    }

    // ---- types

    fn ty(&mut self) -> Result<Type> {
        let dom = self.ty_atom()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let cod = self.ty()?;
            return Ok(Type::fun(dom, cod));
        }
        Ok(dom)
    }

    fn ty_atom(&mut self) -> Result<Type> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Ident(s) if s == "F" && self.toks[self.pos + 1].0 == Tok::LBrace => {
                self.bump();
                self.bump();
                let row = self.row()?;
                self.expect(Tok::LParen)?;
                let inner = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(Type::Comp(row, Box::new(inner)))
            }
            Tok::Ident(_) => {
                let (n, span) = self.ident("a type")?;
                if !self.env.lenient && !self.env.signature.has_atom(&n) {
                    return Err(self.missing("atomic type", &n, span.start));
                }
                Ok(Type::Atom(n))
            }
            _ => Err(self.unexpected("a type")),
        }
    }

    fn row(&mut self) -> Result<BTreeSet<Name>> {
        let mut row = BTreeSet::new();
        if *self.peek() == Tok::RBrace {
            self.bump();
            return Ok(row);
        }
        loop {
            let (op, span) = match self.peek().clone() {
                Tok::Ident(_) => self.ident("an operation")?,
                other => {
                    return Err(self.error(ParseErrorKind::MalformedRow(format!(
                        "expected an operation name, found {other}"
                    ))))
                }
            };
            if !self.env.lenient && self.env.signature.operation(&op).is_none() {
                return Err(self.missing("operation", &op, span.start));
            }
            if !row.insert(op.clone()) {
                return Err(ParseError {
                    pos: span.start,
                    kind: ParseErrorKind::MalformedRow(format!("`{op}` listed twice")),
                });
            }
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RBrace => {
                    self.bump();
                    return Ok(row);
                }
                other => {
                    return Err(self.error(ParseErrorKind::MalformedRow(format!(
                        "expected `,` or `}}`, found {other}"
                    ))))
                }
            }
        }
    }

    // ---- terms

    fn term(&mut self) -> Result<Parsed> {
        let mut lhs = self.imp()?;
        while *self.peek() == Tok::Bind {
            let op_span = self.bump().1;
            let rhs = self.imp()?;
            lhs = self.sugar(Sugar::Bind, lhs, rhs, op_span)?;
        }
        Ok(lhs)
    }

    fn imp(&mut self) -> Result<Parsed> {
        let lhs = self.and()?;
        match self.peek() {
            Tok::Arrow => {
                let op_span = self.bump().1;
                let rhs = self.imp()?;
                self.infix(IMP, lhs, rhs, op_span)
            }
            Tok::ArrowLifted => {
                let op_span = self.bump().1;
                let rhs = self.imp()?;
                self.sugar(Sugar::Lifted(IMP), lhs, rhs, op_span)
            }
            _ => Ok(lhs),
        }
    }

    fn and(&mut self) -> Result<Parsed> {
        let lhs = self.eq()?;
        match self.peek() {
            Tok::And => {
                let op_span = self.bump().1;
                let rhs = self.and()?;
                self.infix(AND, lhs, rhs, op_span)
            }
            Tok::AndLifted => {
                let op_span = self.bump().1;
                let rhs = self.and()?;
                self.sugar(Sugar::Lifted(AND), lhs, rhs, op_span)
            }
            _ => Ok(lhs),
        }
    }

    fn eq(&mut self) -> Result<Parsed> {
        let lhs = self.lift()?;
        match self.peek() {
            Tok::Eq => {
                let op_span = self.bump().1;
                let rhs = self.lift()?;
                self.infix(EQ, lhs, rhs, op_span)
            }
            Tok::EqLifted => {
                let op_span = self.bump().1;
                let rhs = self.lift()?;
                self.sugar(Sugar::Lifted(EQ), lhs, rhs, op_span)
            }
            _ => Ok(lhs),
        }
    }

    fn lift(&mut self) -> Result<Parsed> {
        let mut lhs = self.app()?;
        loop {
            let which = match self.peek() {
                Tok::ApplyLeft => Sugar::ApplyLeft,
                Tok::ApplyRight => Sugar::ApplyRight,
                Tok::ApplyBoth => Sugar::ApplyBoth,
                _ => return Ok(lhs),
            };
            let op_span = self.bump().1;
            let rhs = self.app()?;
            lhs = self.sugar(which, lhs, rhs, op_span)?;
        }
    }

    fn constant(&self, name: &str, span: Span) -> Result<Parsed> {
        if !self.env.lenient && self.env.signature.constant(name).is_none() {
            return Err(ParseError {
                pos: span.start,
                kind: ParseErrorKind::Undeclared {
                    what: "constant",
                    name: name.to_string(),
                },
            });
        }
        Ok((Term::cst(name), SourceMap::leaf(span)))
    }

    fn infix(&self, op: &str, lhs: Parsed, rhs: Parsed, op_span: Span) -> Result<Parsed> {
        let (c, cm) = self.constant(op, op_span)?;
        let span = lhs.1.span.to(rhs.1.span);
        let t = Term::apps(c, [lhs.0, rhs.0]);
        let inner = SourceMap::node(lhs.1.span.to(op_span), vec![cm, lhs.1]);
        Ok((t, SourceMap::node(span, vec![inner, rhs.1])))
    }

    fn sugar(&self, which: Sugar, lhs: Parsed, rhs: Parsed, op_span: Span) -> Result<Parsed> {
        let span = lhs.1.span.to(rhs.1.span);
        let (l, lm) = lhs;
        let (r, rm) = rhs;
        let t = match which {
            Sugar::Bind => prelude::bind(l.clone(), r.clone()),
            Sugar::ApplyLeft => prelude::apply_left(l.clone(), r.clone()),
            Sugar::ApplyRight => prelude::apply_right(l.clone(), r.clone()),
            Sugar::ApplyBoth => prelude::apply_both(l.clone(), r.clone()),
            Sugar::Lifted(op) => {
                self.constant(op, op_span)?;
                match self.env.signature.constant(op) {
                    Some(Type::Fun(a, rest)) => match &**rest {
                        Type::Fun(b, _) => prelude::lift_binary_at(
                            op,
                            ((**a).clone(), (**b).clone()),
                            l.clone(),
                            r.clone(),
                        ),
                        _ => prelude::lift_binary(op, l.clone(), r.clone()),
                    },
                    _ => prelude::lift_binary(op, l.clone(), r.clone()),
                }
            }
        };
        let mut map = SourceMap::uniform(&t, span);
        map.graft(&t, &l, &lm);
        map.graft(&t, &r, &rm);
        Ok((t, map))
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => !TERM_KEYWORDS.contains(&s.as_str()),
            Tok::Star | Tok::LParen => true,
            _ => false,
        }
    }

    /// Juxtaposition. A trailing abstraction ends the application.
    fn app(&mut self) -> Result<Parsed> {
        if *self.peek() == Tok::Backslash {
            return self.lambda();
        }
        let mut head = self.head()?;
        loop {
            let arg = if *self.peek() == Tok::Backslash {
                let l = self.lambda()?;
                head = apply(head, l);
                return Ok(head);
            } else if self.starts_atom() {
                self.atom()?
            } else {
                return Ok(head);
            };
            head = apply(head, arg);
        }
    }

    /// Argument of `eta`, `extract`, `commute` and `handle {..}`.
    fn arg(&mut self) -> Result<Parsed> {
        if *self.peek() == Tok::Backslash {
            self.lambda()
        } else {
            self.atom()
        }
    }

    fn head(&mut self) -> Result<Parsed> {
        let kw = match self.peek() {
            Tok::Ident(s) if TERM_KEYWORDS.contains(&s.as_str()) => s.clone(),
            _ => return self.atom(),
        };
        let start = self.bump().1;
        match kw.as_str() {
            "eta" | "extract" | "commute" => {
                let (m, mm) = self.arg()?;
                let t = match kw.as_str() {
                    "eta" => Term::eta(m),
                    "extract" => Term::extract(m),
                    _ => Term::commute(m),
                };
                let span = start.to(mm.span);
                Ok((t, SourceMap::node(span, vec![mm])))
            }
            "do" => self.operation(start),
            _ => self.handler(start),
        }
    }

    fn operation(&mut self, start: Span) -> Result<Parsed> {
        let (op, op_span) = self.ident("an operation name")?;
        if !self.env.lenient && self.env.signature.operation(&op).is_none() {
            return Err(self.missing("operation", &op, op_span.start));
        }
        self.expect(Tok::LParen)?;
        let (param, pm) = self.term()?;
        self.expect(Tok::Comma)?;
        self.expect(Tok::Backslash)?;
        let (x, _) = self.ident("a variable")?;
        self.expect(Tok::Dot)?;
        self.scope.push(x.clone());
        let body = self.term();
        self.scope.pop();
        let (cont, cm) = body?;
        let end = self.expect(Tok::RParen)?;
        let t = Term::Op {
            op,
            param: Box::new(param),
            binder: x,
            cont: Box::new(cont),
        };
        Ok((t, SourceMap::node(start.to(end), vec![pm, cm])))
    }

    fn handler(&mut self, start: Span) -> Result<Parsed> {
        self.expect(Tok::LBrace)?;
        let mut clauses: BTreeMap<Name, Parsed> = BTreeMap::new();
        let mut eta: Option<Parsed> = None;
        if *self.peek() != Tok::RBrace {
            loop {
                let (op, span) = self.ident("an operation name or `eta`")?;
                self.expect(Tok::Arrow)?;
                let body = self.term()?;
                let dup = if op.as_str() == "eta" {
                    eta.replace(body).is_some()
                } else {
                    if !self.env.lenient && self.env.signature.operation(&op).is_none() {
                        return Err(self.missing("operation", &op, span.start));
                    }
                    clauses.insert(op.clone(), body).is_some()
                };
                if dup {
                    return Err(ParseError {
                        pos: span.start,
                        kind: ParseErrorKind::DuplicateClause(op.to_string()),
                    });
                }
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        let close = self.expect(Tok::RBrace)?;
        let (eta, em) = eta.unwrap_or_else(|| {
            let d = Term::default_eta_clause();
            let m = SourceMap::uniform(&d, start.to(close));
            (d, m)
        });
        let (scrutinee, sm) = self.arg()?;
        let mut maps: Vec<SourceMap> = Vec::new();
        let mut terms = Vec::new();
        for (op, (t, m)) in clauses {
            terms.push((op, t));
            maps.push(m);
        }
        maps.push(em);
        let span = start.to(sm.span);
        maps.push(sm);
        let h = Handler::new(terms, eta).expect("clauses come from a map");
        Ok((Term::handle(h, scrutinee), SourceMap::node(span, maps)))
    }

    fn lambda(&mut self) -> Result<Parsed> {
        let start = self.expect(Tok::Backslash)?;
        let mut binders: Vec<(Name, Option<Type>)> = Vec::new();
        loop {
            match self.peek() {
                Tok::Ident(_) => {
                    let (x, _) = self.ident("a variable")?;
                    binders.push((x, None));
                }
                Tok::LParen => {
                    self.bump();
                    let (x, _) = self.ident("a variable")?;
                    self.expect(Tok::Colon)?;
                    let ty = self.ty()?;
                    self.expect(Tok::RParen)?;
                    binders.push((x, Some(ty)));
                }
                Tok::Dot if !binders.is_empty() => {
                    self.bump();
                    break;
                }
                _ => return Err(self.unexpected("a binder or `.`")),
            }
        }
        let depth = self.scope.len();
        self.scope.extend(binders.iter().map(|(x, _)| x.clone()));
        let body = self.term();
        self.scope.truncate(depth);
        let (mut t, mut m) = body?;
        let span = start.to(m.span);
        for (x, ann) in binders.into_iter().rev() {
            t = Term::Abs {
                binder: x,
                ann,
                body: Box::new(t),
            };
            m = SourceMap::node(span, vec![m]);
        }
        Ok((t, m))
    }

    fn atom(&mut self) -> Result<Parsed> {
        match self.peek().clone() {
            Tok::Star => {
                let span = self.bump().1;
                Ok((Term::unit(), SourceMap::leaf(span)))
            }
            Tok::LParen => {
                let start = self.bump().1;
                let (t, m) = self.term()?;
                if *self.peek() == Tok::Colon {
                    self.bump();
                    let ty = self.ty()?;
                    let end = self.expect(Tok::RParen)?;
                    let span = start.to(end);
                    return Ok((Term::ann(t, ty), SourceMap::node(span, vec![m])));
                }
                self.expect(Tok::RParen)?;
                Ok((t, m))
            }
            Tok::Ident(s) if !TERM_KEYWORDS.contains(&s.as_str()) => {
                let (n, span) = self.ident("a term")?;
                self.resolve(n, span)
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    fn resolve(&self, n: Name, span: Span) -> Result<Parsed> {
        if self.scope.contains(&n) {
            return Ok((Term::Var(n), SourceMap::leaf(span)));
        }
        if let Some(d) = self.env.defs.get(&n) {
            let t = d.term();
            let m = SourceMap::uniform(&t, span);
            return Ok((t, m));
        }
        if self.env.signature.constant(&n).is_some() {
            return Ok((Term::Const(n), SourceMap::leaf(span)));
        }
        if self.env.lenient {
            return Ok((Term::Var(n), SourceMap::leaf(span)));
        }
        Err(self.missing("identifier", &n, span.start))
    }
}

fn apply(f: Parsed, a: Parsed) -> Parsed {
    let span = f.1.span.to(a.1.span);
    (Term::app(f.0, a.0), SourceMap::node(span, vec![f.1, a.1]))
}

// ---------------------------------------------------------------- printer

const PREC_LAMBDA: u8 = 0;
const PREC_APP: u8 = 6;
const PREC_ATOM: u8 = 7;

fn infix_symbol(c: &str) -> Option<(&'static str, u8, bool)> {
    // symbol, precedence, right-associative
    match c {
        IMP => Some(("->", 2, true)),
        AND => Some(("/\\", 3, true)),
        EQ => Some(("=", 4, false)),
        _ => None,
    }
}

fn as_infix(t: &Term) -> Option<(&'static str, u8, bool, &Term, &Term)> {
    if let Term::App(f, r) = t {
        if let Term::App(g, l) = &**f {
            if let Term::Const(c) = &**g {
                let (sym, p, right) = infix_symbol(c)?;
                return Some((sym, p, right, l, r));
            }
        }
    }
    None
}

fn prec(t: &Term) -> u8 {
    match t {
        Term::Abs { .. } => PREC_LAMBDA,
        Term::App(..) => as_infix(t).map(|(_, p, ..)| p).unwrap_or(PREC_APP),
        Term::Eta(_) | Term::Extract(_) | Term::Commute(_) | Term::Op { .. } | Term::Handle(..) => {
            PREC_APP
        }
        Term::Var(_) | Term::Const(_) | Term::Ann(..) => PREC_ATOM,
    }
}

/// Renders a term in the concrete syntax; the output parses back to an
/// alpha-equivalent term.
pub fn print_term(t: &Term) -> String {
    let mut out = String::new();
    write_term(t, 0, &mut out);
    out
}

pub fn print_type(t: &Type) -> String {
    let mut out = String::new();
    write_type(t, 0, &mut out);
    out
}

/// Picks a printable binder name that neither is a keyword nor collides
/// with a constant in its scope; renames the body accordingly.
fn printable_binder(x: &Name, scope: &Term) -> (Name, Option<Term>) {
    let clashes = |n: &Name| {
        !is_identifier(n) || TERM_KEYWORDS.contains(&n.as_str()) || scope.contains_const(n)
    };
    if !clashes(x) {
        return (x.clone(), None);
    }
    let mut avoid = scope.free_vars();
    avoid.extend(scope.constants());
    avoid.extend(TERM_KEYWORDS.iter().map(|k| Name::new(k)));
    let base = if is_identifier(x) { x.clone() } else { Name::new("v") };
    let mut fresh = fresh_name(&base, &avoid);
    while clashes(&fresh) {
        avoid.insert(fresh.clone());
        fresh = fresh_name(&fresh, &avoid);
    }
    let body = scope.rename_free(x, &fresh);
    (fresh, Some(body))
}

fn write_term(t: &Term, ctx: u8, out: &mut String) {
    let p = prec(t);
    if p < ctx {
        out.push('(');
        write_term(t, 0, out);
        out.push(')');
        return;
    }
    if let Some((sym, p, right, l, r)) = as_infix(t) {
        let (lc, rc) = if right { (p + 1, p) } else { (p + 1, p + 1) };
        write_term(l, lc, out);
        out.push(' ');
        out.push_str(sym);
        out.push(' ');
        write_term(r, rc, out);
        return;
    }
    match t {
        Term::Var(x) => out.push_str(x),
        Term::Const(c) => out.push_str(c),
        Term::Abs { .. } => {
            out.push('\\');
            let mut cur = t.clone();
            let mut first = true;
            while let Term::Abs { binder, ann, body } = cur {
                let (x, renamed) = printable_binder(&binder, &body);
                let body = renamed.unwrap_or(*body);
                if !first {
                    out.push(' ');
                }
                first = false;
                match ann {
                    Some(ty) => {
                        out.push('(');
                        out.push_str(&x);
                        out.push_str(" : ");
                        write_type(&ty, 0, out);
                        out.push(')');
                    }
                    None => out.push_str(&x),
                }
                cur = body;
            }
            out.push_str(". ");
            write_term(&cur, 0, out);
        }
        Term::App(f, a) => {
            write_term(f, PREC_APP, out);
            out.push(' ');
            write_term(a, PREC_ATOM, out);
        }
        Term::Op {
            op,
            param,
            binder,
            cont,
        } => {
            let (x, renamed) = printable_binder(binder, cont);
            out.push_str("do ");
            out.push_str(op);
            out.push('(');
            write_term(param, 0, out);
            out.push_str(", \\");
            out.push_str(&x);
            out.push_str(". ");
            write_term(renamed.as_ref().unwrap_or(cont), 0, out);
            out.push(')');
        }
        Term::Eta(m) => prefix("eta", m, out),
        Term::Extract(m) => prefix("extract", m, out),
        Term::Commute(m) => prefix("commute", m, out),
        Term::Handle(h, n) => {
            out.push_str("handle {");
            let mut clauses: Vec<(String, &Term)> =
                h.clauses().iter().map(|(k, v)| (k.to_string(), v)).collect();
            let default_eta = Term::default_eta_clause();
            if !h.eta().alpha_eq(&default_eta) {
                clauses.push(("eta".to_string(), h.eta()));
            }
            for (i, (op, body)) in clauses.iter().enumerate() {
                out.push_str(if i == 0 { " " } else { ", " });
                out.push_str(op);
                out.push_str(" -> ");
                write_term(body, 0, out);
            }
            out.push_str(if clauses.is_empty() { "} " } else { " } " });
            write_term(n, PREC_ATOM, out);
        }
        Term::Ann(m, ty) => {
            out.push('(');
            write_term(m, 0, out);
            out.push_str(" : ");
            write_type(ty, 0, out);
            out.push(')');
        }
    }
}

fn prefix(kw: &str, m: &Term, out: &mut String) {
    out.push_str(kw);
    out.push(' ');
    write_term(m, PREC_ATOM, out);
}

fn write_type(t: &Type, ctx: u8, out: &mut String) {
    match t {
        Type::Atom(a) => out.push_str(a),
        Type::Fun(a, b) => {
            if ctx > 0 {
                out.push('(');
            }
            write_type(a, 1, out);
            out.push_str(" -> ");
            write_type(b, 0, out);
            if ctx > 0 {
                out.push(')');
            }
        }
        Type::Comp(row, a) => {
            out.push_str("F{");
            for (i, op) in row.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(op);
            }
            out.push_str("}(");
            write_type(a, 0, out);
            out.push(')');
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self))
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_type(self))
    }
}

impl fmt::Display for OpSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ~> {}", self.input, self.output)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DECLS: &str = "
        atom iota. atom o.
        constant j : iota. constant m : iota. constant s : iota.
        constant love : iota -> iota -> o.
        constant and : o -> o -> o.
        operation speaker : 1 ~> iota.
    ";

    fn env() -> Env {
        parse_file(DECLS).unwrap().env
    }

    #[test]
    fn parses_abstraction() {
        let t = parse_term("\\x. eta x", &env()).unwrap();
        assert_eq!(t, Term::lam("x", Term::eta(Term::var("x"))));
    }

    #[test]
    fn parses_operation() {
        let t = parse_term("do speaker(*, \\x. eta x)", &env()).unwrap();
        assert_eq!(
            t,
            Term::op("speaker", Term::unit(), "x", Term::eta(Term::var("x")))
        );
    }

    #[test]
    fn parses_handler_with_default_eta() {
        let t = parse_term("\\M. handle { speaker -> \\x.\\k. k s } M", &env()).unwrap();
        let clause = Term::lam("x", Term::lam("k", Term::app(Term::var("k"), Term::cst("s"))));
        let h = Handler::with_default_eta([(Name::new("speaker"), clause)]).unwrap();
        assert_eq!(t, Term::lam("M", Term::handle(h, Term::var("M"))));
    }

    #[test]
    fn parses_operation_declaration() {
        let f = parse_file("atom iota. operation speaker : 1 ~> iota.").unwrap();
        assert_eq!(
            f.items[1].decl,
            Decl::Operation(
                Name::new("speaker"),
                OpSig {
                    input: Type::unit(),
                    output: Type::atom("iota")
                }
            )
        );
    }

    #[test]
    fn two_atoms() {
        let f = parse_file("atom iota. atom o.").unwrap();
        assert_eq!(f.items.len(), 2);
        assert!(f.env.signature().has_atom("o"));
    }

    #[test]
    fn use_before_declaration() {
        let err = parse_file("atom e.\ndef x = c.\nconstant c : e.").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UseBeforeDeclaration("c".into()));
        assert_eq!(err.pos, Pos { line: 2, col: 9 });
        let err = parse_file("def x = c.").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Undeclared { .. }));
    }

    #[test]
    fn redefinition_is_rejected() {
        let err = parse_file("atom e. constant c : e. def c = c.").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Redefinition("c".into()));
    }

    #[test]
    fn lexical_error_has_position() {
        let err = parse_term("eta\n  j ?", &env()).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Lexical('?'));
        assert_eq!(err.pos, Pos { line: 2, col: 5 });
    }

    #[test]
    fn duplicate_clause() {
        let err = parse_term(
            "handle { speaker -> \\x k. k j, speaker -> \\x k. k m } (eta j)",
            &env(),
        )
        .unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DuplicateClause("speaker".into()));
    }

    #[test]
    fn malformed_rows() {
        for src in ["F{speaker,}(o)", "F{speaker speaker}(o)", "F{speaker, speaker}(o)"] {
            let err = parse_type(src, &env()).unwrap_err();
            assert!(matches!(err.kind, ParseErrorKind::MalformedRow(_)), "{src}: {err}");
        }
        assert_eq!(
            parse_type("F{}(iota -> o)", &env()).unwrap(),
            Type::comp::<_, &str>([], Type::fun(Type::atom("iota"), Type::atom("o")))
        );
    }

    #[test]
    fn identifiers_with_inner_hyphen() {
        let e = parse_file("atom i. constant best-friend : i -> i. constant j : i.")
            .unwrap()
            .env;
        let t = parse_term("best-friend j", &e).unwrap();
        assert_eq!(t, Term::app(Term::cst("best-friend"), Term::cst("j")));
    }

    #[test]
    fn prints_examples() {
        assert_eq!(print_term(&Term::eta(Term::cst("j"))), "eta j");
        let t = Term::lam("x", Term::app(Term::var("x"), Term::var("x")));
        assert_eq!(print_term(&t), "\\x. x x");
        let t = Term::eta(Term::apps(Term::cst("love"), [Term::cst("j"), Term::cst("m")]));
        assert_eq!(print_term(&t), "eta (love j m)");
    }

    #[test]
    fn prints_infix_connectives() {
        let t = parse_term("eta (love j m /\\ love m j)", &env()).unwrap();
        assert_eq!(print_term(&t), "eta (love j m /\\ love m j)");
    }

    #[test]
    fn printer_renames_binders_shadowing_constants() {
        let t = Term::lam("j", Term::app(Term::var("j"), Term::cst("j")));
        let printed = print_term(&t);
        assert_eq!(printed, "\\j'. j' j");
    }

    #[test]
    fn lifted_sugar_desugars_through_the_prelude() {
        let t = parse_term("eta j >>= \\x. eta x", &env()).unwrap();
        assert_eq!(
            t,
            prelude::bind(Term::eta(Term::cst("j")), Term::lam("x", Term::eta(Term::var("x"))))
        );
    }

    #[test]
    fn source_map_locates_subterms() {
        let (t, map) = parse_term_mapped("eta (love j\n  m)", &env()).unwrap();
        let path = Path(vec![0, 1]);
        assert_eq!(t.at(&path), Some(&Term::cst("m")));
        assert_eq!(map.locate(&path).start, Pos { line: 2, col: 3 });
    }

    fn lenient_env() -> Env {
        let mut sig = Signature::new();
        for c in ["c", "d", AND, IMP, EQ] {
            sig.declare_constant(c.into(), Type::atom("a")).unwrap();
        }
        Env::lenient(sig)
    }

    fn arb_type() -> impl Strategy<Value = Type> {
        let leaf = prop_oneof![Just(Type::atom("a")), Just(Type::atom("b"))];
        leaf.prop_recursive(3, 8, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Type::fun(a, b)),
                (proptest::collection::btree_set(prop_oneof![Just("p"), Just("q")], 0..3), inner)
                    .prop_map(|(r, a)| Type::comp(r, a)),
            ]
        })
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        let names = prop_oneof![Just("x"), Just("y"), Just("k"), Just("c")];
        let leaf = prop_oneof![
            prop_oneof![Just("x"), Just("y"), Just("k")].prop_map(Term::var),
            prop_oneof![Just("c"), Just("d"), Just(crate::syntax::UNIT_VALUE), Just(AND), Just(IMP), Just(EQ)]
                .prop_map(Term::cst),
        ];
        leaf.prop_recursive(5, 40, 3, move |inner| {
            let names = names.clone();
            prop_oneof![
                (names.clone(), proptest::option::of(arb_type()), inner.clone()).prop_map(
                    |(x, ann, b)| Term::Abs {
                        binder: Name::new(x),
                        ann,
                        body: Box::new(b)
                    }
                ),
                (inner.clone(), inner.clone()).prop_map(|(f, a)| Term::app(f, a)),
                (prop_oneof![Just("p"), Just("q")], inner.clone(), names, inner.clone())
                    .prop_map(|(o, p, x, c)| Term::op(o, p, x, c)),
                inner.clone().prop_map(Term::eta),
                inner.clone().prop_map(Term::extract),
                inner.clone().prop_map(Term::commute),
                (inner.clone(), arb_type()).prop_map(|(m, t)| Term::ann(m, t)),
                (
                    proptest::option::of(inner.clone()),
                    proptest::option::of(inner.clone()),
                    inner.clone()
                )
                    .prop_map(|(p, e, n)| {
                        let clauses: Vec<(Name, Term)> =
                            p.into_iter().map(|t| (Name::new("p"), t)).collect();
                        let eta = e.unwrap_or_else(Term::default_eta_clause);
                        Term::handle(Handler::new(clauses, eta).unwrap(), n)
                    }),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]

        #[test]
        fn print_then_parse_round_trips(t in arb_term()) {
            let printed = print_term(&t);
            let back = parse_term(&printed, &lenient_env())
                .map_err(|e| TestCaseError::fail(format!("{printed}: {e}")))?;
            prop_assert!(back.alpha_eq(&t), "{} reparsed as {}", printed, print_term(&back));
        }

        #[test]
        fn parser_never_panics_on_bytes(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let src = String::from_utf8_lossy(&bytes);
            let _ = parse_term(&src, &env());
            let _ = parse_file(&src);
        }

        #[test]
        fn parser_never_panics_on_token_soup(
            toks in proptest::collection::vec(
                prop_oneof![
                    Just("\\"), Just("x"), Just("."), Just("("), Just(")"), Just("eta"),
                    Just("do"), Just("speaker"), Just(","), Just("handle"), Just("{"),
                    Just("}"), Just("->"), Just(">>="), Just("/\\~"), Just(":"), Just("F"),
                    Just("j"), Just("*"), Just("def"), Just("="),
                ],
                0..24,
            )
        ) {
            let src = toks.join(" ");
            let _ = parse_term(&src, &env());
            let _ = parse_file(&src);
        }
    }
}
