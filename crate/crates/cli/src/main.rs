//! `banana`: type-check, normalize and trace terms of the effect calculus,
//! run the English fragment, and run the property suites.
//!
//! Exit status: 0 success, 1 parse or type error, 2 golden mismatch or
//! property failure, 3 stuck term or exhausted fuel, 64 usage error.

use std::fmt::Write as _;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use banana::fragment::{self, GoldenEntry};
use banana::reduce::{eta_normalize, normalize, same_up_to_eta, Outcome, Strategy, Trace};
use banana::surface::{self, DeclFile, DirectiveKind, Env, ParseError, SourceMap};
use banana::typecheck::{check_against, synthesize, TypeError, TypeErrorKind, TypingContext};
use banana::verify::{run_suite, Suite};
use banana::Term;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

const OK: u8 = 0;
const INPUT_ERROR: u8 = 1;
const PROPERTY_FAILURE: u8 = 2;
const NOT_NORMAL: u8 = 3;
const USAGE: u8 = 64;

const UNASCRIBED: &str = "(typed at each use)";

#[derive(Parser, Debug)]
#[command(name = "banana", version, about = "Effects and handlers for compositional semantics")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    /// One JSON object per line.
    Records,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Type-check every definition and directive of a declaration file.
    Check { file: PathBuf },
    /// Print the normal form of a term.
    Normalize(ReduceArgs),
    /// Print every reduction step of a term.
    Trace(ReduceArgs),
    /// Evaluate the English fragment and compare with the expected forms.
    Fragment {
        /// Run a single corpus entry (1-11).
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=11))]
        example: Option<u64>,
        /// Constant standing for the speaker in handled entries.
        #[arg(long, default_value = fragment::DEFAULT_SPEAKER)]
        speaker: String,
    },
    /// Run a property suite over enumerated or sampled terms.
    Verify {
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        /// Size bound for enumerated terms.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of sampled terms.
        #[arg(long)]
        samples: Option<usize>,
        /// Step limit for each normalization.
        #[arg(long)]
        fuel: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct ReduceArgs {
    /// Declaration file providing the signature and definitions. Without
    /// one, the English fragment's declarations are used.
    file: Option<PathBuf>,
    /// Term to reduce. Without one, every directive of FILE is reduced.
    #[arg(short = 'e', long = "expr")]
    expr: Option<String>,
    #[arg(long, value_enum, default_value_t = StrategyArg::Lo)]
    strategy: StrategyArg,
    /// Seed for the random strategy.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum number of steps (for exhaustive: distinct terms).
    #[arg(long, default_value_t = banana::reduce::DEFAULT_FUEL)]
    fuel: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    /// Leftmost-outermost.
    Lo,
    Random,
    Exhaustive,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse::<Suite>().map_err(|e| {
        let names: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
        format!("{e}; expected one of {}", names.join(", "))
    })
}

/// Where output goes and in which shape.
struct Out {
    format: Format,
    text: String,
}

impl Out {
    fn line(&mut self, s: impl AsRef<str>) {
        if self.format == Format::Text {
            self.text.push_str(s.as_ref());
            self.text.push('\n');
        }
    }

    fn text_push(&mut self, s: &str) {
        if self.format == Format::Text {
            self.text.push_str(s);
        }
    }

    fn record(&mut self, r: &impl Serialize) {
        if self.format == Format::Records {
            let json = serde_json::to_string(r).expect("records serialize");
            let _ = writeln!(self.text, "{json}");
        }
    }
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "camelCase")]
enum Record<'a> {
    Def {
        name: &'a str,
        #[serde(rename = "type")]
        ty: String,
    },
    Directive {
        line: usize,
        col: usize,
        kind: DirectiveKind,
        #[serde(rename = "type")]
        ty: String,
    },
    Error {
        status: u8,
        message: String,
    },
    Golden {
        id: usize,
        sentence: &'a str,
        term: String,
        expected: String,
        matches: bool,
    },
    Result {
        term: String,
        outcome: String,
    },
}

/// A failure carrying its exit status.
struct Fail {
    status: u8,
    message: String,
}

impl Fail {
    fn input(message: impl Into<String>) -> Fail {
        Fail {
            status: INPUT_ERROR,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let status = if e.use_stderr() { USAGE } else { OK };
            let _ = e.print();
            return ExitCode::from(status);
        }
    };
    let mut out = Out {
        format: cli.format,
        text: String::new(),
    };
    let result = match cli.command {
        Command::Check { file } => check(&file, &mut out),
        Command::Normalize(args) => reduce(args, false, &mut out),
        Command::Trace(args) => reduce(args, true, &mut out),
        Command::Fragment { example, speaker } => run_fragment(example, &speaker, &mut out),
        Command::Verify {
            suite,
            size,
            seed,
            samples,
            fuel,
        } => run_verify(suite, size, seed, samples, fuel, &mut out),
    };
    let status = match result {
        Ok(status) => status,
        Err(f) => {
            out.record(&Record::Error {
                status: f.status,
                message: f.message.clone(),
            });
            eprintln!("banana: {}", f.message);
            f.status
        }
    };
    print!("{}", out.text);
    ExitCode::from(status)
}

fn load(file: &FsPath) -> Result<DeclFile, Fail> {
    let src = std::fs::read_to_string(file)
        .map_err(|e| Fail::input(format!("{}: {e}", file.display())))?;
    surface::parse_file(&src).map_err(|e| parse_fail(&file.display().to_string(), &e))
}

fn parse_fail(origin: &str, e: &ParseError) -> Fail {
    Fail::input(format!("{origin}:{e}"))
}

fn type_fail(origin: &str, map: &SourceMap, e: &TypeError) -> Fail {
    let span = map.locate(&e.path);
    Fail::input(format!("{origin}:{}: {e}", span.start))
}

fn check(file: &FsPath, out: &mut Out) -> Result<u8, Fail> {
    let decls = load(file)?;
    let origin = file.display().to_string();
    let ctx = TypingContext::new(decls.env.signature().clone());
    for def in decls.env.defs() {
        let ty = match &def.ty {
            Some(ty) => check_against(&ctx, &def.body, ty).map(|_| ty.to_string()),
            // Unascribed abstractions take their types from each use site.
            None => match synthesize(&ctx, &def.body) {
                Err(e) if e.kind == TypeErrorKind::AnnotationRequired && e.path.is_root() => {
                    Ok(UNASCRIBED.to_string())
                }
                r => r.map(|t| t.to_string()),
            },
        }
        .map_err(|e| type_fail(&origin, &def.map, &e))?;
        out.line(format!("{} : {ty}", def.name));
        out.record(&Record::Def {
            name: def.name.as_str(),
            ty,
        });
    }
    for (pos, kind, term, map) in decls.directives() {
        let ty = synthesize(&ctx, term).map_err(|e| type_fail(&origin, map, &e))?;
        out.line(format!("{pos}: {} : {ty}", directive_name(kind)));
        out.record(&Record::Directive {
            line: pos.line,
            col: pos.col,
            kind,
            ty: ty.to_string(),
        });
    }
    Ok(OK)
}

fn directive_name(k: DirectiveKind) -> &'static str {
    match k {
        DirectiveKind::Check => "check",
        DirectiveKind::Normalize => "normalize",
        DirectiveKind::Trace => "trace",
    }
}

fn reduce(args: ReduceArgs, full: bool, out: &mut Out) -> Result<u8, Fail> {
    let strategy = match args.strategy {
        StrategyArg::Lo => Strategy::LeftmostOutermost,
        StrategyArg::Random => Strategy::RandomSeeded(args.seed),
        StrategyArg::Exhaustive => Strategy::ExhaustiveCheck,
    };
    let (env, file_terms): (Env, Vec<Term>) = match &args.file {
        Some(f) => {
            let decls = load(f)?;
            let terms = decls.directives().map(|(_, _, t, _)| t.clone()).collect();
            (decls.env, terms)
        }
        None => (fragment::environment().clone(), Vec::new()),
    };
    let terms = match &args.expr {
        Some(src) => vec![surface::parse_term(src, &env).map_err(|e| parse_fail("<expr>", &e))?],
        None if args.file.is_some() => file_terms,
        None => {
            return Err(Fail {
                status: USAGE,
                message: "nothing to reduce: give FILE or -e EXPR".into(),
            })
        }
    };
    let mut status = OK;
    for t in &terms {
        let trace = normalize(t, strategy, args.fuel);
        emit_trace(&trace, full, out);
        status = status.max(outcome_status(&trace.outcome));
    }
    Ok(status)
}

fn outcome_status(o: &Outcome) -> u8 {
    match o {
        Outcome::NormalForm => OK,
        Outcome::Stuck { .. } | Outcome::FuelExhausted => NOT_NORMAL,
        Outcome::NotConfluent { .. } => PROPERTY_FAILURE,
    }
}

fn emit_trace(trace: &Trace, full: bool, out: &mut Out) {
    if full {
        out.line(format!("{}", trace.start));
        out.text_push(&trace.to_text());
        for r in trace.records() {
            out.record(&r);
        }
        return;
    }
    match &trace.outcome {
        Outcome::NormalForm => out.line(trace.result().to_string()),
        other => {
            out.line(other.to_string());
            out.line(format!("  at {}", trace.result()));
        }
    }
    out.record(&Record::Result {
        term: trace.result().to_string(),
        outcome: trace.outcome.to_string(),
    });
}

fn run_fragment(example: Option<u64>, speaker: &str, out: &mut Out) -> Result<u8, Fail> {
    if !surface::is_identifier(speaker) {
        return Err(Fail {
            status: USAGE,
            message: format!("`{speaker}` is not an identifier"),
        });
    }
    let ctx = fragment::typing_context_with_speaker(speaker).map_err(|e| Fail::input(e.to_string()))?;
    let corpus = fragment::golden_corpus();
    let entries: Vec<&GoldenEntry> = match example {
        Some(n) => vec![&corpus[n as usize - 1]],
        None => corpus.iter().collect(),
    };
    let single = entries.len() == 1;
    let sentence_type = fragment::category_type(fragment::Category::S);
    let mut status = OK;
    for e in entries {
        let term = e.term_with_speaker(speaker);
        check_against(&ctx, &term, &sentence_type)
            .map_err(|err| Fail::input(format!("entry ({}): {err}", e.id)))?;
        let trace = normalize(&term, Strategy::LeftmostOutermost, banana::reduce::DEFAULT_FUEL);
        let got = eta_normalize(&trace.result().erase());
        let expected = e.expected_with_speaker(speaker);
        let matches = trace.outcome == Outcome::NormalForm && same_up_to_eta(&got, &expected);
        if !matches {
            status = PROPERTY_FAILURE;
        }
        let shown = if trace.outcome == Outcome::NormalForm {
            got.to_string()
        } else {
            format!("{} ({})", got, trace.outcome)
        };
        match (single, matches) {
            (true, true) => out.line(&shown),
            (false, true) => out.line(format!("({}) {shown}", e.id)),
            (_, false) => out.line(format!("({}) mismatch: got {shown}, expected {expected}", e.id)),
        }
        out.record(&Record::Golden {
            id: e.id,
            sentence: e.sentence,
            term: got.to_string(),
            expected: expected.to_string(),
            matches,
        });
    }
    Ok(status)
}

fn run_verify(
    suite: Suite,
    size: Option<usize>,
    seed: Option<u64>,
    samples: Option<usize>,
    fuel: Option<usize>,
    out: &mut Out,
) -> Result<u8, Fail> {
    let mut cfg = suite.default_config();
    if let Some(s) = size {
        cfg.size = s;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(s) = samples {
        cfg.samples = s;
    }
    if let Some(f) = fuel {
        cfg.fuel = f;
    }
    let report = run_suite(suite, cfg);
    out.text_push(&report.to_text());
    out.record(&report);
    Ok(if report.passed() { OK } else { PROPERTY_FAILURE })
}
