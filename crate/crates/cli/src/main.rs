use std::collections::HashMap;
use std::io::{BufRead, IsTerminal, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{Arc, Mutex};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rwscope_core::tracing::{
    build_forest, dump, shared, Breakpoint, DefaultFrontend, Frontend, MemoryStore, MsgId,
    Question, TraceMessage, Tracer,
};
use rwscope_core::{
    normalize, parse_ruleset, parse_term, Answer, EngineError, Limits, Mode, NormalizeResult,
    RuleSet, Term, TraceConfig, DEFAULT_MAX_STEPS,
};
use rwscope_server::{Hub, DEFAULT_PORT, PORT_ENV};

#[derive(Parser)]
#[command(name = "rwscope", version, about = "Conditional term rewriting with a traceable, steerable simplifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize a term and print the result.
    Reduce(RunArgs),
    /// Normalize a term, answering questions on stdin.
    Debug(RunArgs),
    /// Serve the session protocol (NDJSON and WebSocket on one port).
    Serve {
        #[arg(long, env = PORT_ENV, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Ruleset file.
    rules: PathBuf,
    /// Term to normalize.
    term: String,
    /// Trace mode: disabled, normal or full.
    #[arg(long, default_value_t = Mode::Normal)]
    mode: Mode,
    /// Ask questions for accepted steps (always on for `debug`).
    #[arg(long)]
    interactive: bool,
    /// Answer questions with their defaults instead of asking.
    #[arg(long)]
    auto_reply: bool,
    /// Stop at steps whose redex matches this pattern.
    #[arg(long = "break-term", value_name = "PATTERN")]
    break_term: Vec<String>,
    /// Stop at steps using this rule.
    #[arg(long = "break-thm", value_name = "RULE")]
    break_thm: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: usize,
    /// Write the trace dump to a file, or `-` for stdout after the result.
    #[arg(long, value_name = "PATH")]
    trace_out: Option<PathBuf>,
    /// Solve the conditions of a step in parallel.
    #[arg(long)]
    parallel: bool,
}

impl RunArgs {
    fn load(&self) -> Result<(RuleSet, Term)> {
        let text = std::fs::read_to_string(&self.rules)
            .with_context(|| format!("cannot read {}", self.rules.display()))?;
        let rules = parse_ruleset(&text).with_context(|| format!("{}", self.rules.display()))?;
        let term = parse_term(&self.term).context("invalid term")?;
        rules.check_term(&term).context("invalid term")?;
        Ok((rules, term))
    }

    fn config(&self, interactive: bool) -> Result<TraceConfig> {
        let mut cfg = TraceConfig::default()
            .with_mode(self.mode)
            .with_interactive(interactive)
            .with_auto_reply(self.auto_reply);
        for p in &self.break_term {
            let bp = Breakpoint::term(p).with_context(|| format!("invalid --break-term `{p}`"))?;
            cfg.add_breakpoint(bp);
        }
        for n in &self.break_thm {
            let bp = Breakpoint::rule(n).with_context(|| format!("invalid --break-thm `{n}`"))?;
            cfg.add_breakpoint(bp);
        }
        Ok(cfg)
    }

    fn run<F: Frontend>(
        &self,
        rules: &RuleSet,
        term: &Term,
        cfg: TraceConfig,
        frontend: F,
    ) -> Result<NormalizeResult, EngineError> {
        let tracer = Tracer::new(0, shared(cfg), Arc::new(MemoryStore::new()), frontend);
        normalize(term, rules, &tracer, Limits::steps(self.max_steps), self.parallel)
    }

    fn write_trace(&self, messages: &[TraceMessage]) -> Result<()> {
        let Some(path) = &self.trace_out else {
            return Ok(());
        };
        let text = dump(&build_forest(messages)?);
        if path == Path::new("-") {
            print!("{text}");
        } else {
            std::fs::write(path, text)
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
        Ok(())
    }

    fn finish(&self, r: &NormalizeResult) -> Result<ExitCode> {
        self.write_trace(&r.messages)?;
        if r.exhausted {
            eprintln!(
                "rwscope: step budget of {} exhausted (--max-steps); term shown is not a normal form",
                self.max_steps
            );
            return Ok(ExitCode::from(2));
        }
        Ok(ExitCode::SUCCESS)
    }
}

fn reduce(args: &RunArgs) -> Result<ExitCode> {
    let (rules, term) = args.load()?;
    let cfg = args.config(args.interactive)?;
    let r = args.run(&rules, &term, cfg, DefaultFrontend)?;
    println!("{}", r.term);
    args.finish(&r)
}

/// Prints accepted messages as they arrive and asks questions on the
/// terminal.
struct Console<R> {
    input: Mutex<R>,
    /// Repeat replies that were not typed on a terminal.
    echo: bool,
    levels: Mutex<HashMap<MsgId, usize>>,
}

impl<R: BufRead + Send> Console<R> {
    fn new(input: R, echo: bool) -> Self {
        Console {
            input: Mutex::new(input),
            echo,
            levels: Mutex::new(HashMap::new()),
        }
    }
}

fn prompt_for(q: &Question) -> String {
    q.allowed()
        .iter()
        .map(|a| {
            let word = a.as_str();
            format!("[{}]{}", &word[..1], &word[1..])
        })
        .collect::<Vec<_>>()
        .join(" ")
}

impl<R: BufRead + Send> Frontend for Console<R> {
    fn message(&self, msg: &TraceMessage) {
        let mut levels = self.levels.lock().unwrap();
        let level = msg
            .parent
            .and_then(|p| levels.get(&p))
            .map_or(0, |l| l + 1);
        levels.insert(msg.id, level);
        println!("{}[{}] {}", "  ".repeat(level), msg.kind().as_str(), msg.text());
    }

    fn ask(&self, question: &Question) -> Result<Answer, EngineError> {
        let mut input = self.input.lock().unwrap();
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "? {}", question.text());
        loop {
            let _ = write!(out, "  {} > ", prompt_for(question));
            let _ = out.flush();
            let mut line = String::new();
            match input.read_line(&mut line) {
                Ok(0) | Err(_) => {
                    let _ = writeln!(out);
                    return Err(EngineError::Cancelled);
                }
                Ok(_) => {}
            }
            let reply = line.trim();
            if self.echo {
                let _ = writeln!(out, "{reply}");
            }
            let answer = match reply.chars().count() {
                1 => Answer::from_letter(reply.chars().next().unwrap()),
                _ => reply.parse().ok(),
            };
            match answer {
                Some(a) if question.allowed().contains(&a) => return Ok(a),
                _ => {
                    let _ = writeln!(out, "  unknown reply `{reply}`");
                }
            }
        }
    }
}

fn debug(args: &RunArgs) -> Result<ExitCode> {
    let (rules, term) = args.load()?;
    let cfg = args.config(true)?;
    let stdin = std::io::stdin();
    let console = Console::new(std::io::BufReader::new(stdin), !std::io::stdin().is_terminal());
    let r = match args.run(&rules, &term, cfg, console) {
        Ok(r) => r,
        Err(EngineError::Cancelled) => bail!("cancelled"),
        Err(e) => return Err(e.into()),
    };
    println!("result: {} ({} steps)", r.term, r.steps);
    args.finish(&r)
}

fn serve(host: &str, port: u16) -> Result<ExitCode> {
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .with_context(|| format!("invalid address {host}:{port}"))?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let bound = rwscope_server::spawn(addr, Hub::new())
            .await
            .with_context(|| format!("cannot listen on {addr}"))?;
        println!("rwscope listening on {bound} (NDJSON and WebSocket)");
        std::future::pending::<()>().await;
        Ok(ExitCode::SUCCESS)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Reduce(args) => reduce(args),
        Command::Debug(args) => debug(args),
        Command::Serve { port, host } => serve(host, *port),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("rwscope: {e:#}");
        ExitCode::from(1)
    })
}
