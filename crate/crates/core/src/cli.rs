//! The `pegtx` command line: `check`, `parse` and `bench`.
//!
//! Exit status is 0 on success, 1 for grammar or parse errors and 2 for I/O
//! or usage errors.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser as ClapParser, Subcommand, ValueEnum};

use crate::grammar::{assign_memo_points, parse_grammar_source, validate, Grammar};
use crate::interp::{ParseOptions, ParseResult, Parser};
use crate::packrat::DEFAULT_WINDOW;

#[derive(ClapParser, Debug)]
#[command(name = "pegtx", version, about = "PEG parsing with declarative AST construction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a grammar and summarize its memo points.
    Check {
        grammar: PathBuf,
    },
    /// Parse an input and print its AST.
    Parse {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = Format::Sexpr)]
        format: Format,
        /// Fail unless the whole input is consumed.
        #[arg(long)]
        strict: bool,
        /// Append parser statistics.
        #[arg(long)]
        stats: bool,
    },
    /// Time repeated parses and report the best run.
    Bench {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
        iterations: u32,
        /// Time only one mode; both by default.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    grammar: PathBuf,
    /// Input file, or `-` for standard input.
    input: PathBuf,
    /// Start production (defaults to the first one).
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    no_memo: bool,
    /// Memo window in input positions.
    #[arg(long, default_value_t = DEFAULT_WINDOW, value_parser = parse_window)]
    window: usize,
}

fn parse_window(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("window must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Sexpr,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Recognize,
    Ast,
}

const OK: i32 = 0;
const FAILED: i32 = 1;
const IO_ERROR: i32 = 2;

struct Io<'a> {
    stdin: &'a mut dyn Read,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// Runs the command line `args` (including the program name) and returns the
/// exit status.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return IO_ERROR;
            }
            let _ = write!(out, "{text}");
            return OK;
        }
    };
    let mut io = Io { stdin, out, err };
    let status = match cli.command {
        Command::Check { grammar } => cmd_check(&grammar, &mut io),
        Command::Parse {
            run,
            format,
            strict,
            stats,
        } => cmd_parse(&run, format, strict, stats, &mut io),
        Command::Bench {
            run,
            iterations,
            mode,
        } => cmd_bench(&run, iterations, mode, &mut io),
    };
    let _ = io.out.flush();
    status
}

fn read_grammar(path: &Path, io: &mut Io) -> Result<String, i32> {
    std::fs::read_to_string(path).map_err(|e| {
        let _ = writeln!(io.err, "error: cannot read grammar {}: {e}", path.display());
        IO_ERROR
    })
}

fn read_input(path: &Path, io: &mut Io) -> Result<Vec<u8>, i32> {
    let result = if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        io.stdin.read_to_end(&mut buf).map(|_| buf)
    } else {
        std::fs::read(path)
    };
    result.map_err(|e| {
        let _ = writeln!(io.err, "error: cannot read input {}: {e}", path.display());
        IO_ERROR
    })
}

fn cmd_check(path: &Path, io: &mut Io) -> i32 {
    let text = match read_grammar(path, io) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let grammar = match parse_grammar_source(&text) {
        Ok(g) => g,
        Err(diags) => {
            for d in &diags {
                let _ = writeln!(io.out, "{d}");
            }
            return FAILED;
        }
    };
    let diags = validate(&grammar);
    for d in &diags {
        let _ = writeln!(io.out, "{d}");
    }
    let plan = assign_memo_points(&grammar);
    let _ = writeln!(io.out, "{} productions, {} memo points", grammar.len(), plan.len());
    if diags.iter().any(|d| d.is_error()) {
        FAILED
    } else {
        OK
    }
}

/// Loads and compiles the grammar and reads the input.
fn prepare(run: &RunArgs, io: &mut Io) -> Result<(Parser, Vec<u8>), i32> {
    let text = read_grammar(&run.grammar, io)?;
    let grammar: Grammar = parse_grammar_source(&text).map_err(|diags| {
        for d in &diags {
            let _ = writeln!(io.err, "{d}");
        }
        FAILED
    })?;
    let parser = Parser::new(&grammar).map_err(|e| {
        for d in e.0.iter().filter(|d| d.is_error()) {
            let _ = writeln!(io.err, "{d}");
        }
        FAILED
    })?;
    if let Some(start) = &run.start {
        if parser.grammar().get(start).is_none() {
            let _ = writeln!(io.err, "error: unknown start production `{start}`");
            return Err(FAILED);
        }
    }
    let input = read_input(&run.input, io)?;
    Ok((parser, input))
}

fn options(run: &RunArgs, build_ast: bool) -> ParseOptions {
    ParseOptions {
        memo: !run.no_memo,
        window: run.window,
        build_ast,
        start: run.start.clone(),
        ..ParseOptions::default()
    }
}

fn parse_once(parser: &Parser, input: &[u8], opts: &ParseOptions, io: &mut Io) -> Result<ParseResult, i32> {
    parser.parse_with(input, opts).map_err(|e| {
        let _ = writeln!(io.err, "parse error: {e}");
        FAILED
    })
}

fn cmd_parse(run: &RunArgs, format: Format, strict: bool, stats: bool, io: &mut Io) -> i32 {
    let (parser, input) = match prepare(run, io) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let result = match parse_once(&parser, &input, &options(run, true), io) {
        Ok(r) => r,
        Err(code) => return code,
    };
    if strict && !result.is_complete() {
        let _ = writeln!(
            io.err,
            "parse error: unconsumed input at offset {} of {}",
            result.consumed,
            input.len()
        );
        return FAILED;
    }
    let _ = match format {
        Format::Sexpr => writeln!(io.out, "{}", result.root),
        Format::Json => writeln!(io.out, "{}", result.root.to_json()),
    };
    if stats {
        let _ = match format {
            Format::Sexpr => write!(io.out, "{}", result.stats),
            Format::Json => writeln!(io.out, "{}", result.stats.to_json()),
        };
    }
    OK
}

fn best_of(
    parser: &Parser,
    input: &[u8],
    opts: &ParseOptions,
    iterations: u32,
    io: &mut Io,
) -> Result<(Duration, ParseResult), i32> {
    let mut best = Duration::MAX;
    let mut last = None;
    for _ in 0..iterations {
        let t = Instant::now();
        let r = parse_once(parser, input, opts, io)?;
        best = best.min(t.elapsed());
        last = Some(r);
    }
    Ok((best, last.expect("at least one iteration")))
}

fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn cmd_bench(run: &RunArgs, iterations: u32, mode: Option<Mode>, io: &mut Io) -> i32 {
    let (parser, input) = match prepare(run, io) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let _ = writeln!(io.out, "iterations: {iterations}");
    let _ = writeln!(io.out, "input_length: {}", input.len());
    let mut times = Vec::new();
    for (m, build) in [(Mode::Recognize, false), (Mode::Ast, true)] {
        if mode.is_some_and(|x| x != m) {
            continue;
        }
        let (best, result) = match best_of(&parser, &input, &options(run, build), iterations, io) {
            Ok(x) => x,
            Err(code) => return code,
        };
        let name = if build { "ast" } else { "recognize" };
        let _ = writeln!(io.out, "{name}_best_ms: {:.3}", millis(best));
        let _ = writeln!(io.out, "{name}_consumed: {}", result.consumed);
        if build {
            let _ = writeln!(io.out, "memo_lookups: {}", result.stats.memo_lookups);
            let _ = writeln!(io.out, "memo_hits: {}", result.stats.memo_hits);
        }
        times.push(best);
    }
    if let [recognize, ast] = times[..] {
        let ratio = ast.as_secs_f64() / recognize.as_secs_f64().max(1e-9);
        let _ = writeln!(io.out, "ast_over_recognize: {ratio:.3}");
    }
    OK
}
