use std::io::{self, IsTerminal, Write};
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use sheetgram::core::grammar::parse_grammar;
use sheetgram::io::{load_csv_grid, load_facts};
use sheetgram::session::{discover, Command, Session, Source};
use sheetgram::{repl, server, views};

#[derive(Parser)]
#[command(name = "sheetgram", version, about = "Discover attribute structure in spreadsheets")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Mm,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Match a grammar, group what it finds and print the program.
    Discover {
        #[arg(long, conflicts_with = "csv", required_unless_present = "csv")]
        facts: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Sheet name for CSV input; defaults to the file stem.
        #[arg(long, requires = "csv")]
        sheet: Option<String>,
        #[arg(long)]
        grammar: PathBuf,
        /// Only match this rule instead of every rule in the file.
        #[arg(long)]
        rule: Option<String>,
        #[arg(long, value_enum, default_value = "mm")]
        emit: Emit,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Interactive session on standard input.
    Repl {
        #[arg(long)]
        facts: Option<PathBuf>,
        /// Grammar file, loaded under its file stem.
        #[arg(long)]
        grammar: Option<PathBuf>,
    },
    /// HTTP service for the browser front end.
    Serve {
        #[arg(long)]
        port: u16,
        #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
        host: IpAddr,
        /// Directory of static files served at `/`.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
        /// Forget sessions unused for this many seconds.
        #[arg(long)]
        idle_timeout: Option<u64>,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("Sheet1")
        .to_string()
}

#[allow(clippy::too_many_arguments)]
fn run_discover(
    facts: Option<PathBuf>,
    csv: Option<PathBuf>,
    sheet: Option<String>,
    grammar: PathBuf,
    rule: Option<String>,
    emit: Emit,
    out: Option<PathBuf>,
) -> Result<()> {
    let wb = match (facts, csv) {
        (Some(p), _) => load_facts(&read(&p)?).with_context(|| p.display().to_string())?,
        (None, Some(p)) => {
            let sheet = sheet.unwrap_or_else(|| stem(&p));
            load_csv_grid(&read(&p)?, &sheet).with_context(|| p.display().to_string())?
        }
        (None, None) => bail!("one of --facts or --csv is required"),
    };
    let g = parse_grammar(&read(&grammar)?).with_context(|| grammar.display().to_string())?;
    let d = discover(wb, &g, rule.as_deref()).with_context(|| grammar.display().to_string())?;
    let text = match emit {
        Emit::Mm => d.mm(),
        Emit::Json => {
            let doc = json!({
                "mm": d.mm(),
                "transforms": d.transforms.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "matches": views::matches(&d.matches),
                "attributes": views::attributes(&d.model),
            });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
    };
    match out {
        Some(p) => std::fs::write(&p, text).with_context(|| format!("cannot write {}", p.display()))?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run_repl(facts: Option<PathBuf>, grammar: Option<PathBuf>) -> Result<()> {
    let mut s = Session::default();
    if let Some(p) = facts {
        s.execute(Command::Load(Source::Facts(read(&p)?)))
            .with_context(|| p.display().to_string())?;
    }
    if let Some(p) = grammar {
        s.execute(Command::LoadGrammar {
            name: stem(&p),
            text: read(&p)?,
        })
        .with_context(|| p.display().to_string())?;
    }
    let stdin = io::stdin();
    let prompt = stdin.is_terminal();
    repl::run(&mut s, stdin.lock(), &mut io::stdout(), prompt)?;
    Ok(())
}

fn run_serve(port: u16, host: IpAddr, static_dir: Option<PathBuf>, idle_timeout: Option<u64>) -> Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(server::serve(
        SocketAddr::new(host, port),
        static_dir,
        idle_timeout.map(Duration::from_secs),
    ))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Discover {
            facts,
            csv,
            sheet,
            grammar,
            rule,
            emit,
            out,
        } => run_discover(facts, csv, sheet, grammar, rule, emit, out),
        Cmd::Repl { facts, grammar } => run_repl(facts, grammar),
        Cmd::Serve {
            port,
            host,
            static_dir,
            idle_timeout,
        } => run_serve(port, host, static_dir, idle_timeout),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
