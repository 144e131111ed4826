//! A simply-typed lambda calculus extended with algebraic effects and handlers.
//!
//! The crate is organised bottom-up:
//!
//! - [`syntax`]: terms, types, effect signatures, substitution, alpha-equivalence.
//! - [`surface`]: the ASCII concrete syntax (parser, printer, declaration files).
//! - [`typecheck`]: a bidirectional checker with effect-row subsumption.
//! - [`reduce`]: the reduction relation, strategies and traces.
//! - [`prelude`]: bind and the lifted application combinators.
//! - [`fragment`]: a small compositional semantics for English
//!   (deixis, quantification, appositive implicatures) and its golden corpus.
//! - [`verify`]: term enumeration, random sampling, reduction graphs and the
//!   metatheory property suites.

pub mod fragment;
pub mod prelude;
pub mod reduce;
pub mod surface;
pub mod syntax;
pub mod typecheck;
pub mod verify;

pub use reduce::{normalize, Outcome, Rule, Strategy, Trace};
pub use surface::{parse_file, parse_term, print_term, DeclFile, Env, ParseError};
pub use syntax::{EffectRow, EffectSignature, Handler, Name, OpSig, Path, Term, Type};
pub use typecheck::{check_against, subtype, synthesize, Signature, TypeError, TypingContext};
