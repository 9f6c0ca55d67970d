//! Line-oriented front end over a [`Session`].

use std::io::{self, BufRead, Write};
use std::path::Path;

use sheetgram_core::address::parse_address;
use sheetgram_core::arrows::{infer_index_labels, Transform};

use crate::session::{Command, ExportFormat, Outcome, Session, Source};

pub const HELP: &str = "\
commands:
  load facts PATH | load csv PATH [SHEET]
  grammar NAME PATH          load a grammar file
  match GRAMMAR RULE         list disjoint matches of RULE
  accept [I ...]             accept matches by index (all if none given)
  group NAME CELL ...        merge cells into one attribute
  rename OLD NEW
  ungroup NAME
  name NAME                  rename after the label above or left
  index NAME [LABEL ...]     index by labels (inferred if none given)
  generalize ATTR            show the equation for every index
  show                       print the current program
  history                    list undoable steps
  undo
  export mm|facts|json [PATH]
  help
  quit
";

fn read(path: &str) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))
}

fn default_sheet(s: &Session) -> String {
    s.workbook().sheets().into_iter().next().unwrap_or("Sheet1").to_string()
}

fn stem(path: &str) -> String {
    Path::new(path)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("Sheet1")
        .to_string()
}

enum Parsed {
    Run(Command, Option<String>),
    Print(String),
    Quit,
}

fn parse(line: &str, s: &Session) -> Result<Parsed, String> {
    let words: Vec<&str> = line.split_whitespace().collect();
    let usage = || format!("usage error in `{line}`; type `help`");
    let transform = |t| Ok(Parsed::Run(Command::ApplyTransform(t), None));
    match words.as_slice() {
        ["quit"] | ["exit"] => Ok(Parsed::Quit),
        ["help"] => Ok(Parsed::Print(HELP.trim_end().to_string())),
        ["show"] => Ok(Parsed::Print(s.mm().trim_end().to_string())),
        ["history"] => Ok(Parsed::Print(
            s.history()
                .iter()
                .enumerate()
                .map(|(i, f)| format!("{}. {}", i + 1, f.command))
                .collect::<Vec<_>>()
                .join("\n"),
        )),
        ["load", "facts", path] => Ok(Parsed::Run(Command::Load(Source::Facts(read(path)?)), None)),
        ["load", "csv", path] => Ok(Parsed::Run(
            Command::Load(Source::Csv {
                text: read(path)?,
                sheet: stem(path),
            }),
            None,
        )),
        ["load", "csv", path, sheet] => Ok(Parsed::Run(
            Command::Load(Source::Csv {
                text: read(path)?,
                sheet: sheet.to_string(),
            }),
            None,
        )),
        ["grammar", name, path] => Ok(Parsed::Run(
            Command::LoadGrammar {
                name: name.to_string(),
                text: read(path)?,
            },
            None,
        )),
        ["match", grammar, rule] => Ok(Parsed::Run(
            Command::MatchRule {
                grammar: grammar.to_string(),
                rule: rule.to_string(),
            },
            None,
        )),
        ["accept"] => Ok(Parsed::Run(
            Command::AcceptSuggestions((0..s.pending().len()).collect()),
            None,
        )),
        ["accept", rest @ ..] => {
            let indices = rest
                .iter()
                .map(|w| w.parse::<usize>().map_err(|_| format!("`{w}` is not a match index")))
                .collect::<Result<_, _>>()?;
            Ok(Parsed::Run(Command::AcceptSuggestions(indices), None))
        }
        ["group", name, cells @ ..] if !cells.is_empty() => {
            let sheet = default_sheet(s);
            let cells = cells
                .iter()
                .map(|c| parse_address(c, &sheet).map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?;
            transform(Transform::Group {
                cells,
                name: name.to_string(),
            })
        }
        ["rename", old, new] => transform(Transform::Rename {
            old: old.to_string(),
            new: new.to_string(),
        }),
        ["ungroup", name] => transform(Transform::Ungroup { name: name.to_string() }),
        ["name", name] => transform(Transform::NameFromLabel { name: name.to_string() }),
        ["index", name] => {
            let labels = infer_index_labels(s.model(), name, s.facts())
                .ok_or_else(|| format!("no distinct labels found for `{name}`"))?;
            transform(Transform::IndexBy {
                name: name.to_string(),
                labels,
            })
        }
        ["index", name, labels @ ..] => transform(Transform::IndexBy {
            name: name.to_string(),
            labels: labels.iter().map(|l| l.to_string()).collect(),
        }),
        ["generalize", attr] => Ok(Parsed::Run(Command::Generalize(attr.to_string()), None)),
        ["undo"] => Ok(Parsed::Run(Command::Undo, None)),
        ["export", format] => Ok(Parsed::Run(Command::Export(format.parse::<ExportFormat>()?), None)),
        ["export", format, path] => Ok(Parsed::Run(
            Command::Export(format.parse::<ExportFormat>()?),
            Some(path.to_string()),
        )),
        _ => Err(usage()),
    }
}

/// Read commands from `input` until `quit` or end of input. Errors are
/// reported on `out` and leave the session unchanged.
pub fn run(s: &mut Session, input: impl BufRead, out: &mut impl Write, prompt: bool) -> io::Result<()> {
    let mut lines = input.lines();
    loop {
        if prompt {
            write!(out, "> ")?;
            out.flush()?;
        }
        let Some(line) = lines.next().transpose()? else {
            return Ok(());
        };
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match parse(line, s) {
            Ok(Parsed::Quit) => return Ok(()),
            Ok(Parsed::Print(text)) => writeln!(out, "{text}")?,
            Ok(Parsed::Run(cmd, path)) => {
                let mutating = cmd.is_mutating();
                match s.execute(cmd) {
                    Ok(Outcome::Exported(text)) if path.is_some() => {
                        let path = path.unwrap_or_default();
                        match std::fs::write(&path, text) {
                            Ok(()) => writeln!(out, "wrote {path}")?,
                            Err(e) => writeln!(out, "error: {path}: {e}")?,
                        }
                    }
                    Ok(outcome) => {
                        writeln!(out, "{outcome}")?;
                        if mutating {
                            write!(out, "{}", s.mm())?;
                        }
                    }
                    Err(e) => writeln!(out, "error: {e}")?,
                }
            }
            Err(msg) => writeln!(out, "error: {msg}")?,
        }
    }
}
