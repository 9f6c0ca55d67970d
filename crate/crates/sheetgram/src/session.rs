//! Undoable command sessions over a workbook and its attribute model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use sheetgram_core::arrows::{
    apply, compile, decompile, emit_mm, generalize, match_to_transforms, CompileError, GeneralizeError, IndexDomain,
    Model, Transform, TransformError,
};
use sheetgram_core::factbase::{FactBase, PredicateRegistry};
use sheetgram_core::formula::{print_expr, PrintStyle};
use sheetgram_core::grammar::{
    parse_grammar, select_cover, validate_grammar, Diagnostic, Grammar, GrammarError, Match, Matcher,
};
use sheetgram_core::{CellContent, Workbook};

use crate::io::{load_csv_grid, load_facts, write_facts, LoadError, WriteError};
use crate::views;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Facts(String),
    Csv { text: String, sheet: String },
}

impl Source {
    pub fn load(&self) -> Result<Workbook, LoadError> {
        match self {
            Source::Facts(text) => load_facts(text),
            Source::Csv { text, sheet } => load_csv_grid(text, sheet),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Mm,
    Facts,
    Json,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mm" => Ok(ExportFormat::Mm),
            "facts" => Ok(ExportFormat::Facts),
            "json" => Ok(ExportFormat::Json),
            other => Err(format!("unknown export format `{other}` (expected mm, facts or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Load(Source),
    LoadGrammar {
        name: String,
        text: String,
    },
    MatchRule {
        grammar: String,
        rule: String,
    },
    /// Indices into the pending matches of the last `MatchRule`.
    AcceptSuggestions(Vec<usize>),
    ApplyTransform(Transform),
    Generalize(String),
    Undo,
    Export(ExportFormat),
}

impl Command {
    pub fn is_mutating(&self) -> bool {
        matches!(
            self,
            Command::Load(_)
                | Command::AcceptSuggestions(_)
                | Command::ApplyTransform(_)
                | Command::Generalize(_)
                | Command::Undo
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Loaded,
    GrammarLoaded,
    Matches(Vec<Match>),
    Applied {
        transforms: Vec<Transform>,
        notes: Vec<String>,
    },
    /// The quantified equation, when there is one.
    Generalized {
        attr: String,
        equation: Option<String>,
    },
    Undone(String),
    Exported(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("nothing to undo")]
    NothingToUndo,
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Generalize(#[from] GeneralizeError),
    #[error("no grammar named `{0}`")]
    UnknownGrammar(String),
    #[error("grammar `{grammar}` has no rule `{rule}`")]
    UnknownRule { grammar: String, rule: String },
    #[error("no pending match with index {0}")]
    BadMatchIndex(usize),
    #[error("grammar: {0}")]
    GrammarParse(#[from] GrammarError),
    #[error("grammar `{name}`: {}", .diagnostics.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    GrammarInvalid { name: String, diagnostics: Vec<Diagnostic> },
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Write(#[from] WriteError),
}

impl SessionError {
    /// Parse failures in user text, as opposed to commands that do not apply
    /// to the current state.
    pub fn is_parse_error(&self) -> bool {
        matches!(
            self,
            SessionError::GrammarParse(_) | SessionError::GrammarInvalid { .. } | SessionError::Load(_)
        )
    }
}

/// A history entry: the command that ran and the model before it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub command: String,
    pub model: Model,
}

#[derive(Debug, Clone, Default)]
pub struct Session {
    fb: FactBase,
    model: Model,
    registry: PredicateRegistry,
    grammars: BTreeMap<String, Grammar>,
    pending: Vec<Match>,
    history: Vec<Frame>,
}

impl Session {
    pub fn new(wb: Workbook) -> Session {
        Session {
            model: decompile(&wb),
            fb: FactBase::build(wb),
            ..Session::default()
        }
    }

    pub fn workbook(&self) -> &Workbook {
        self.fb.workbook()
    }

    pub fn facts(&self) -> &FactBase {
        &self.fb
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn history(&self) -> &[Frame] {
        &self.history
    }

    pub fn pending(&self) -> &[Match] {
        &self.pending
    }

    pub fn grammar(&self, name: &str) -> Option<&Grammar> {
        self.grammars.get(name)
    }

    pub fn grammar_names(&self) -> impl Iterator<Item = &str> {
        self.grammars.keys().map(String::as_str)
    }

    pub fn mm(&self) -> String {
        emit_mm(&self.model)
    }

    /// Run one command. On error the session is left exactly as it was.
    pub fn execute(&mut self, cmd: Command) -> Result<Outcome, SessionError> {
        match cmd {
            Command::Load(source) => {
                let wb = source.load()?;
                let grammars = std::mem::take(&mut self.grammars);
                *self = Session {
                    grammars,
                    ..Session::new(wb)
                };
                Ok(Outcome::Loaded)
            }
            Command::LoadGrammar { name, text } => {
                let g = parse_grammar(&text)?;
                let diagnostics = validate_grammar(&g, &self.registry);
                if !diagnostics.is_empty() {
                    return Err(SessionError::GrammarInvalid { name, diagnostics });
                }
                self.grammars.insert(name, g);
                Ok(Outcome::GrammarLoaded)
            }
            Command::MatchRule { grammar, rule } => {
                let g = self
                    .grammars
                    .get(&grammar)
                    .ok_or_else(|| SessionError::UnknownGrammar(grammar.clone()))?;
                if g.rule(&rule).is_none() {
                    return Err(SessionError::UnknownRule { grammar, rule });
                }
                let found = Matcher::new(g, &self.registry, &self.fb).match_all(&rule);
                self.pending = select_cover(&found);
                Ok(Outcome::Matches(self.pending.clone()))
            }
            Command::AcceptSuggestions(indices) => {
                let mut seen = BTreeSet::new();
                let mut chosen = Vec::new();
                for i in indices {
                    let m = self.pending.get(i).ok_or(SessionError::BadMatchIndex(i))?;
                    if seen.insert(i) {
                        chosen.push(m.clone());
                    }
                }
                let steps = apply_suggestions(&self.model, &self.fb, match_to_transforms(&chosen))?;
                let mut transforms = Vec::new();
                let mut notes = Vec::new();
                for step in steps {
                    let prior = std::mem::replace(&mut self.model, step.model);
                    self.history.push(Frame {
                        command: step.transform.to_string(),
                        model: prior,
                    });
                    notes.extend(step.note);
                    transforms.push(step.transform);
                }
                Ok(Outcome::Applied { transforms, notes })
            }
            Command::ApplyTransform(t) => {
                let applied = apply(&self.model, &t, &self.fb)?;
                let prior = std::mem::replace(&mut self.model, applied.model);
                self.history.push(Frame {
                    command: t.to_string(),
                    model: prior,
                });
                Ok(Outcome::Applied {
                    transforms: vec![t],
                    notes: applied.note.into_iter().collect(),
                })
            }
            Command::Generalize(attr) => {
                let equation = generalized_equation(&self.model, &attr)?;
                self.history.push(Frame {
                    command: format!("generalize {attr}"),
                    model: self.model.clone(),
                });
                Ok(Outcome::Generalized { attr, equation })
            }
            Command::Undo => {
                let frame = self.history.pop().ok_or(SessionError::NothingToUndo)?;
                self.model = frame.model;
                Ok(Outcome::Undone(frame.command))
            }
            Command::Export(format) => Ok(Outcome::Exported(self.export(format)?)),
        }
    }

    pub fn export(&self, format: ExportFormat) -> Result<String, SessionError> {
        match format {
            ExportFormat::Mm => Ok(self.mm()),
            ExportFormat::Facts => Ok(write_facts(&compile_with_sources(&self.model, self.workbook())?)?),
            ExportFormat::Json => {
                let doc = serde_json::json!({
                    "mm": self.mm(),
                    "attributes": views::attributes(&self.model),
                });
                Ok(serde_json::to_string_pretty(&doc).expect("model views serialize") + "\n")
            }
        }
    }
}

/// The `Name[all t] = ...` line for `attr`, if its definitions generalize.
pub fn generalized_equation(m: &Model, attr: &str) -> Result<Option<String>, GeneralizeError> {
    let Some(template) = generalize(m, attr)? else {
        return Ok(None);
    };
    let a = m.attribute(attr).expect("generalize checked the name");
    let param = match a.domain {
        IndexDomain::Range(_) => "t",
        IndexDomain::Enum(_) => "p",
    };
    let body = print_expr(&template, &PrintStyle { spaced: true, param });
    Ok(Some(format!("{attr}[all {param}] = {body}")))
}

/// Compile `m`, keeping the original source text of every formula whose
/// meaning did not change.
pub fn compile_with_sources(m: &Model, original: &Workbook) -> Result<Workbook, CompileError> {
    let compiled = compile(m)?;
    let mut out = Workbook::new();
    for (at, content) in compiled.iter() {
        let kept = match (content, original.cell_at(at)) {
            (CellContent::Formula(f), Some(old @ CellContent::Formula(g))) if f == g => old.clone(),
            _ => content.clone(),
        };
        out.set(at.clone(), kept);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub transform: Transform,
    pub model: Model,
    pub note: Option<String>,
}

fn fresh_name(m: &Model, base: &str) -> String {
    if m.attribute(base).is_none() {
        return base.to_string();
    }
    (2..)
        .map(|k| format!("{base}_{k}"))
        .find(|n| m.attribute(n).is_none())
        .expect("some suffix is free")
}

/// Apply suggested transforms in order, returning the model after each.
///
/// Bound cells that are empty are left out of groups, and a group whose
/// name is already taken gets the next free `_k` suffix; later naming steps
/// follow the new name.
pub fn apply_suggestions(m: &Model, fb: &FactBase, ts: Vec<Transform>) -> Result<Vec<Step>, TransformError> {
    let mut renamed: BTreeMap<String, String> = BTreeMap::new();
    let mut dropped: BTreeSet<String> = BTreeSet::new();
    let mut current = m.clone();
    let mut steps = Vec::new();
    for t in ts {
        let t = match t {
            Transform::Group { cells, name } => {
                let cells: Vec<_> = cells
                    .into_iter()
                    .filter(|c| current.attribute_at(c).is_some())
                    .collect();
                if cells.is_empty() {
                    dropped.insert(name);
                    continue;
                }
                let fresh = fresh_name(&current, &name);
                renamed.insert(name, fresh.clone());
                Transform::Group { cells, name: fresh }
            }
            Transform::NameFromLabel { name } if dropped.contains(&name) => continue,
            Transform::NameFromLabel { name } => Transform::NameFromLabel {
                name: renamed.get(&name).cloned().unwrap_or(name),
            },
            other => other,
        };
        let applied = apply(&current, &t, fb)?;
        current = applied.model.clone();
        steps.push(Step {
            transform: t,
            model: applied.model,
            note: applied.note,
        });
    }
    Ok(steps)
}

/// Result of the non-interactive pipeline.
#[derive(Debug, Clone)]
pub struct Discovery {
    pub matches: Vec<Match>,
    pub transforms: Vec<Transform>,
    pub model: Model,
}

impl Discovery {
    pub fn mm(&self) -> String {
        emit_mm(&self.model)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiscoverError {
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
    #[error("grammar has no rule `{0}`")]
    UnknownRule(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// Match `rule`, or every rule in source order, keep a disjoint cover of the
/// matches, and apply the suggested groupings and names.
pub fn discover(wb: Workbook, g: &Grammar, rule: Option<&str>) -> Result<Discovery, DiscoverError> {
    let registry = PredicateRegistry::new();
    let diagnostics = validate_grammar(g, &registry);
    if !diagnostics.is_empty() {
        return Err(DiscoverError::Invalid(diagnostics));
    }
    let rules: Vec<&str> = match rule {
        Some(r) if g.rule(r).is_none() => return Err(DiscoverError::UnknownRule(r.to_string())),
        Some(r) => vec![r],
        None => g.rule_names().collect(),
    };
    let model = decompile(&wb);
    let fb = FactBase::build(wb);
    let matcher = Matcher::new(g, &registry, &fb);
    let found: Vec<Match> = rules.iter().flat_map(|r| matcher.match_all(r)).collect();
    let matches = select_cover(&found);
    let steps = apply_suggestions(&model, &fb, match_to_transforms(&matches))?;
    let model = steps.last().map_or(model, |s| s.model.clone());
    Ok(Discovery {
        matches,
        transforms: steps.into_iter().map(|s| s.transform).collect(),
        model,
    })
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Loaded => f.write_str("loaded"),
            Outcome::GrammarLoaded => f.write_str("grammar loaded"),
            Outcome::Matches(ms) => {
                write!(f, "{} match(es)", ms.len())?;
                for (i, m) in ms.iter().enumerate() {
                    let cells: Vec<String> = m.addresses().iter().map(|a| a.a1()).collect();
                    write!(f, "\n  [{i}] {} at {}: {}", m.rule, m.anchor.a1(), cells.join(" "))?;
                }
                Ok(())
            }
            Outcome::Applied { transforms, notes } => {
                let lines: Vec<String> = transforms
                    .iter()
                    .map(ToString::to_string)
                    .chain(notes.iter().cloned())
                    .collect();
                f.write_str(&lines.join("\n"))
            }
            Outcome::Generalized {
                attr,
                equation: Some(eq),
            } => write!(f, "{eq}\n(`{attr}` generalizes)"),
            Outcome::Generalized { attr, equation: None } => {
                write!(f, "`{attr}` has no single equation for all its indices")
            }
            Outcome::Undone(cmd) => write!(f, "undid: {cmd}"),
            Outcome::Exported(text) => f.write_str(text.trim_end_matches('\n')),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sheetgram_core::arrows::validate_model;
    use sheetgram_core::fixtures;

    fn income() -> Session {
        let mut s = Session::new(fixtures::income());
        s.execute(Command::LoadGrammar {
            name: "cols".into(),
            text: fixtures::COLUMN_GRAMMAR.into(),
        })
        .unwrap();
        s
    }

    fn match_columns(s: &mut Session) -> usize {
        match s
            .execute(Command::MatchRule {
                grammar: "cols".into(),
                rule: "column".into(),
            })
            .unwrap()
        {
            Outcome::Matches(ms) => ms.len(),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn three_columns_then_grouped_listing() {
        let mut s = income();
        assert_eq!(match_columns(&mut s), 3);
        s.execute(Command::AcceptSuggestions(vec![0, 1, 2])).unwrap();
        assert_eq!(s.history().len(), 6);
        assert_eq!(s.export(ExportFormat::Mm).unwrap(), fixtures::income_grouped_listing());
        assert_eq!(validate_model(s.model()), Ok(()));
    }

    #[test]
    fn undo_on_fresh_session() {
        let mut s = income();
        assert_eq!(s.execute(Command::Undo), Err(SessionError::NothingToUndo));
    }

    #[test]
    fn undo_walks_back_one_transform_at_a_time() {
        let mut s = income();
        let fresh = s.model().clone();
        match_columns(&mut s);
        s.execute(Command::AcceptSuggestions(vec![0, 1, 2])).unwrap();
        for _ in 0..6 {
            s.execute(Command::Undo).unwrap();
        }
        assert_eq!(s.model(), &fresh);
        assert!(s.execute(Command::Undo).is_err());
    }

    #[test]
    fn partial_accept_then_the_rest() {
        let mut s = income();
        match_columns(&mut s);
        s.execute(Command::AcceptSuggestions(vec![1])).unwrap();
        let names: Vec<&str> = s.model().attributes().iter().map(|a| a.name.as_str()).collect();
        assert!(names.contains(&"Outgoings") && !names.contains(&"Income"));
        s.execute(Command::AcceptSuggestions(vec![0, 2])).unwrap();
        assert_eq!(s.mm(), fixtures::income_grouped_listing());
    }

    #[test]
    fn failing_commands_change_nothing() {
        let mut s = income();
        match_columns(&mut s);
        s.execute(Command::AcceptSuggestions(vec![0])).unwrap();
        let before = (s.model().clone(), s.history().to_vec(), s.pending().to_vec());
        let bad = [
            Command::AcceptSuggestions(vec![1, 7]),
            Command::AcceptSuggestions(vec![0]),
            Command::ApplyTransform(Transform::Rename {
                old: "nope".into(),
                new: "x".into(),
            }),
            Command::Generalize("C2".into()),
            Command::Generalize("nope".into()),
            Command::MatchRule {
                grammar: "cols".into(),
                rule: "nope".into(),
            },
            Command::LoadGrammar {
                name: "g".into(),
                text: "r --> banana".into(),
            },
            Command::Load(Source::Facts("x".into())),
        ];
        for cmd in bad {
            assert!(s.execute(cmd.clone()).is_err(), "{cmd:?}");
            assert_eq!(
                (s.model().clone(), s.history().to_vec(), s.pending().to_vec()),
                before,
                "{cmd:?}"
            );
        }
    }

    #[test]
    fn generalize_reports_the_equation() {
        let mut s = income();
        match_columns(&mut s);
        s.execute(Command::AcceptSuggestions(vec![0, 1, 2])).unwrap();
        let out = s.execute(Command::Generalize("Profit".into())).unwrap();
        assert_eq!(
            out,
            Outcome::Generalized {
                attr: "Profit".into(),
                equation: Some("Profit[all t] = Income[t] - Outgoings[t]".into())
            }
        );
        assert_eq!(s.history().len(), 7);
    }

    #[test]
    fn facts_export_keeps_sources() {
        let text = "Sheet1\tA\t1\tnum\t1\nSheet1\tB\t1\tformula\t= a1 * 2\nSheet1\tA\t2\tnum\t2\nSheet1\tB\t2\tformula\t=A2*2\n";
        let mut s = Session::default();
        s.execute(Command::Load(Source::Facts(text.into()))).unwrap();
        let group = |cells: &[&str], name: &str| {
            Command::ApplyTransform(Transform::Group {
                cells: cells
                    .iter()
                    .map(|c| sheetgram_core::address::parse_address(c, "Sheet1").unwrap())
                    .collect(),
                name: name.into(),
            })
        };
        s.execute(group(&["A1", "A2"], "x")).unwrap();
        s.execute(group(&["B1", "B2"], "y")).unwrap();
        assert_eq!(s.export(ExportFormat::Facts).unwrap(), text);
    }

    #[test]
    fn discover_all_rules() {
        let g = parse_grammar(fixtures::COLUMN_GRAMMAR).unwrap();
        let d = discover(fixtures::income(), &g, None).unwrap();
        assert_eq!(d.mm(), fixtures::income_grouped_listing());
        assert_eq!(d.transforms.len(), 6);
        assert!(matches!(
            discover(fixtures::income(), &g, Some("x")),
            Err(DiscoverError::UnknownRule(_))
        ));
        let bad = parse_grammar("r --> banana").unwrap();
        let e = discover(fixtures::income(), &bad, None).unwrap_err();
        assert!(e.to_string().contains("banana"), "{e}");
    }

    #[test]
    fn name_clash_gets_a_suffix() {
        // Unlabelled columns keep the rule name, so a second accept must not collide.
        let text = "S\tA\t1\tnum\t1\nS\tA\t2\tnum\t2\nS\tC\t1\tnum\t3\nS\tC\t2\tnum\t4\n";
        let mut s = Session::default();
        s.execute(Command::Load(Source::Facts(text.into()))).unwrap();
        s.execute(Command::LoadGrammar {
            name: "g".into(),
            text: "col --> number DOWN number".into(),
        })
        .unwrap();
        s.execute(Command::MatchRule {
            grammar: "g".into(),
            rule: "col".into(),
        })
        .unwrap();
        assert_eq!(s.pending().len(), 2);
        s.execute(Command::AcceptSuggestions(vec![0])).unwrap();
        s.execute(Command::AcceptSuggestions(vec![1])).unwrap();
        let names: Vec<&str> = s.model().attributes().iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["col", "col_2"]);
    }
}
