//! The line-based textual model format.
//!
//! ```text
//! automaton NAME
//! clocks x y ...
//! inputs a b ...
//! outputs c d ...
//! location NAME [initial] [invariant EXPR]
//! switch SRC -> DST [when EXPR] [via ?a|!a|tau] [reset x y ...]
//! ```
//!
//! `EXPR` is a `&`-joined conjunction of atoms `CLOCK (<|<=|==|>=|>) INT`.
//! Omitted `when` is `true`, omitted `via` is `tau`, omitted `reset` is empty.
//! `#` starts a comment.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{
    Action, ActionKind, AtomicConstraint, ClockConstraint, Location, Relation, Switch, Tioa,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: {msg}")]
    Semantic { line: usize, msg: String },
}

impl FormatError {
    fn syntax(line: usize, col: usize, msg: impl Into<String>) -> FormatError {
        FormatError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn semantic(line: usize, msg: impl Into<String>) -> FormatError {
        FormatError::Semantic {
            line,
            msg: msg.into(),
        }
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct PendingSwitch {
    line: usize,
    source: String,
    target: String,
    guard: ClockConstraint,
    action_spec: Option<String>,
    resets: Vec<String>,
}

struct Parser {
    name: Option<String>,
    clocks: Vec<String>,
    inputs: BTreeSet<String>,
    outputs: BTreeSet<String>,
    locations: Vec<Location>,
    initial: Option<usize>,
    pending: Vec<PendingSwitch>,
}

impl Parser {
    fn clock_index(&self, name: &str, line: usize) -> Result<usize, FormatError> {
        self.clocks
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| FormatError::semantic(line, format!("undeclared clock `{name}`")))
    }

    /// Parse one `&`-joined conjunction. Diagonal atoms (`x - y ~ r`) are
    /// recognized and rejected; constants must be non-negative integers.
    fn parse_expr(&self, text: &str, line: usize) -> Result<ClockConstraint, FormatError> {
        let mut conjuncts = Vec::new();
        for raw in text.split('&') {
            let atom = raw.trim();
            if atom.is_empty() {
                return Err(FormatError::syntax(line, 1, "empty conjunct"));
            }
            let op_pos = atom
                .find(|c| c == '<' || c == '>' || c == '=')
                .ok_or_else(|| {
                    FormatError::syntax(line, 1, format!("no comparison operator in `{atom}`"))
                })?;
            let lhs = atom[..op_pos].trim();
            let rest = &atom[op_pos..];
            let (relation, rhs) = if let Some(r) = rest.strip_prefix("<=") {
                (Relation::Le, r)
            } else if let Some(r) = rest.strip_prefix(">=") {
                (Relation::Ge, r)
            } else if let Some(r) = rest.strip_prefix("==") {
                (Relation::Eq, r)
            } else if let Some(r) = rest.strip_prefix('<') {
                (Relation::Lt, r)
            } else if let Some(r) = rest.strip_prefix('>') {
                (Relation::Gt, r)
            } else {
                return Err(FormatError::syntax(
                    line,
                    op_pos + 1,
                    format!("unknown operator in `{atom}`"),
                ));
            };
            let rhs = rhs.trim();
            if lhs.contains('-') {
                return Err(FormatError::semantic(
                    line,
                    format!("diagonal constraint `{atom}` is not supported"),
                ));
            }
            if !is_ident(lhs) {
                return Err(FormatError::syntax(line, 1, format!("bad clock name `{lhs}`")));
            }
            let bound: u64 = rhs.parse().map_err(|_| {
                FormatError::semantic(
                    line,
                    format!("constant `{rhs}` is not a non-negative integer"),
                )
            })?;
            conjuncts.push(AtomicConstraint {
                clock: self.clock_index(lhs, line)?,
                relation,
                bound,
            });
        }
        Ok(ClockConstraint { conjuncts })
    }

    fn parse_action(&self, spec: &str, line: usize) -> Result<Action, FormatError> {
        if spec == "tau" {
            return Ok(Action::tau());
        }
        if let Some(name) = spec.strip_prefix('?') {
            if !self.inputs.contains(name) {
                return Err(FormatError::semantic(line, format!("undeclared input `{name}`")));
            }
            return Ok(Action::input(name));
        }
        if let Some(name) = spec.strip_prefix('!') {
            if !self.outputs.contains(name) {
                return Err(FormatError::semantic(line, format!("undeclared output `{name}`")));
            }
            return Ok(Action::output(name));
        }
        Err(FormatError::syntax(
            line,
            1,
            format!("action must be `?name`, `!name` or `tau`, got `{spec}`"),
        ))
    }
}

/// Parse a model file into a TIOA.
pub fn parse_model(text: &str) -> Result<Tioa, FormatError> {
    let mut p = Parser {
        name: None,
        clocks: Vec::new(),
        inputs: BTreeSet::new(),
        outputs: BTreeSet::new(),
        locations: Vec::new(),
        initial: None,
        pending: Vec::new(),
    };

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let content = content.trim();
        if content.is_empty() {
            continue;
        }
        let mut words = content.split_whitespace();
        let keyword = words.next().unwrap();
        let rest: Vec<&str> = words.collect();
        match keyword {
            "automaton" => {
                if p.name.is_some() {
                    return Err(FormatError::semantic(line, "duplicate `automaton` line"));
                }
                match rest.as_slice() {
                    [name] if is_ident(name) => p.name = Some(name.to_string()),
                    _ => return Err(FormatError::syntax(line, 1, "expected `automaton NAME`")),
                }
            }
            "clocks" => {
                for c in &rest {
                    if !is_ident(c) {
                        return Err(FormatError::syntax(line, 1, format!("bad clock name `{c}`")));
                    }
                    if p.clocks.iter().any(|x| x == c) {
                        return Err(FormatError::semantic(line, format!("duplicate clock `{c}`")));
                    }
                    p.clocks.push(c.to_string());
                }
            }
            "inputs" | "outputs" => {
                for a in &rest {
                    if !is_ident(a) || *a == "tau" {
                        return Err(FormatError::syntax(line, 1, format!("bad action name `{a}`")));
                    }
                    let fresh = if keyword == "inputs" {
                        p.inputs.insert(a.to_string())
                    } else {
                        p.outputs.insert(a.to_string())
                    };
                    if !fresh {
                        return Err(FormatError::semantic(line, format!("duplicate action `{a}`")));
                    }
                }
            }
            "location" => {
                let mut it = rest.iter();
                let name = match it.next() {
                    Some(n) if is_ident(n) => n.to_string(),
                    _ => return Err(FormatError::syntax(line, 1, "expected `location NAME`")),
                };
                if p.locations.iter().any(|l| l.name == name) {
                    return Err(FormatError::semantic(line, format!("duplicate location `{name}`")));
                }
                let mut tail: Vec<&str> = it.cloned().collect();
                let mut initial = false;
                if tail.first() == Some(&"initial") {
                    initial = true;
                    tail.remove(0);
                }
                let invariant = if tail.first() == Some(&"invariant") {
                    tail.remove(0);
                    if tail.is_empty() {
                        return Err(FormatError::syntax(line, 1, "missing invariant expression"));
                    }
                    p.parse_expr(&tail.join(" "), line)?
                } else if tail.is_empty() {
                    ClockConstraint::truth()
                } else {
                    return Err(FormatError::syntax(
                        line,
                        1,
                        format!("unexpected tokens after location: {tail:?}"),
                    ));
                };
                if initial {
                    if p.initial.is_some() {
                        return Err(FormatError::semantic(line, "more than one initial location"));
                    }
                    p.initial = Some(p.locations.len());
                }
                p.locations.push(Location { name, invariant });
            }
            "switch" => {
                // switch SRC -> DST [when EXPR] [via SPEC] [reset C...]
                let joined = rest.join(" ");
                let (src_dst, tail) = match joined.find(" when ") {
                    Some(pos) => (joined[..pos].to_string(), Some(joined[pos + 1..].to_string())),
                    None => match joined.find(" via ") {
                        Some(pos) => (joined[..pos].to_string(), Some(joined[pos + 1..].to_string())),
                        None => match joined.find(" reset ") {
                            Some(pos) => {
                                (joined[..pos].to_string(), Some(joined[pos + 1..].to_string()))
                            }
                            None => (joined.clone(), None),
                        },
                    },
                };
                let parts: Vec<&str> = src_dst.split("->").map(|s| s.trim()).collect();
                let (source, target) = match parts.as_slice() {
                    [s, t] if is_ident(s) && is_ident(t) => (s.to_string(), t.to_string()),
                    _ => {
                        return Err(FormatError::syntax(line, 1, "expected `switch SRC -> DST`"))
                    }
                };
                let mut guard_text = None;
                let mut action_spec = None;
                let mut resets = Vec::new();
                if let Some(tail) = tail {
                    let mut remaining = tail.as_str();
                    if let Some(r) = remaining.strip_prefix("when ") {
                        let end = r.find(" via ").or_else(|| r.find(" reset ")).unwrap_or(r.len());
                        guard_text = Some(r[..end].trim().to_string());
                        remaining = r[end..].trim_start();
                    }
                    if let Some(r) = remaining.strip_prefix("via ") {
                        let end = r.find(" reset ").unwrap_or(r.len());
                        action_spec = Some(r[..end].trim().to_string());
                        remaining = r[end..].trim_start();
                    }
                    if let Some(r) = remaining.strip_prefix("reset ") {
                        resets = r.split_whitespace().map(|s| s.to_string()).collect();
                        remaining = "";
                    }
                    if !remaining.trim().is_empty() {
                        return Err(FormatError::syntax(
                            line,
                            1,
                            format!("unexpected tokens `{remaining}` in switch"),
                        ));
                    }
                }
                let guard = match guard_text {
                    Some(t) => p.parse_expr(&t, line)?,
                    None => ClockConstraint::truth(),
                };
                p.pending.push(PendingSwitch {
                    line,
                    source,
                    target,
                    guard,
                    action_spec,
                    resets,
                });
            }
            other => {
                return Err(FormatError::syntax(line, 1, format!("unknown keyword `{other}`")))
            }
        }
    }

    let name = p
        .name
        .clone()
        .ok_or_else(|| FormatError::semantic(0, "missing `automaton` line"))?;
    if p.locations.is_empty() {
        return Err(FormatError::semantic(0, "model has no locations"));
    }
    let initial = p
        .initial
        .ok_or_else(|| FormatError::semantic(0, "no location marked `initial`"))?;
    if let Some(a) = p.inputs.intersection(&p.outputs).next() {
        return Err(FormatError::semantic(0, format!("action `{a}` is both input and output")));
    }

    let mut switches = Vec::new();
    for sw in &p.pending {
        let source = p
            .locations
            .iter()
            .position(|l| l.name == sw.source)
            .ok_or_else(|| {
                FormatError::semantic(sw.line, format!("undeclared location `{}`", sw.source))
            })?;
        let target = p
            .locations
            .iter()
            .position(|l| l.name == sw.target)
            .ok_or_else(|| {
                FormatError::semantic(sw.line, format!("undeclared location `{}`", sw.target))
            })?;
        let action = match &sw.action_spec {
            Some(spec) => p.parse_action(spec, sw.line)?,
            None => Action::tau(),
        };
        let mut resets = BTreeSet::new();
        for r in &sw.resets {
            resets.insert(p.clock_index(r, sw.line)?);
        }
        switches.push(Switch {
            source,
            guard: sw.guard.clone(),
            action,
            resets,
            target,
        });
    }

    Ok(Tioa {
        name,
        clocks: p.clocks,
        inputs: p.inputs,
        outputs: p.outputs,
        locations: p.locations,
        initial,
        switches,
    })
}

fn render_expr(c: &ClockConstraint, clocks: &[String]) -> String {
    c.conjuncts
        .iter()
        .map(|a| format!("{} {} {}", clocks[a.clock], a.relation.token(), a.bound))
        .collect::<Vec<_>>()
        .join(" & ")
}

/// Inverse printer; `parse_model(render(a))` is structurally equal to `a`.
pub fn render(t: &Tioa) -> String {
    let mut out = String::new();
    out.push_str(&format!("automaton {}\n", t.name));
    if !t.clocks.is_empty() {
        out.push_str(&format!("clocks {}\n", t.clocks.join(" ")));
    }
    if !t.inputs.is_empty() {
        out.push_str(&format!(
            "inputs {}\n",
            t.inputs.iter().cloned().collect::<Vec<_>>().join(" ")
        ));
    }
    if !t.outputs.is_empty() {
        out.push_str(&format!(
            "outputs {}\n",
            t.outputs.iter().cloned().collect::<Vec<_>>().join(" ")
        ));
    }
    for (i, l) in t.locations.iter().enumerate() {
        out.push_str(&format!("location {}", l.name));
        if i == t.initial {
            out.push_str(" initial");
        }
        if !l.invariant.is_true() {
            out.push_str(&format!(" invariant {}", render_expr(&l.invariant, &t.clocks)));
        }
        out.push('\n');
    }
    for s in &t.switches {
        out.push_str(&format!(
            "switch {} -> {}",
            t.locations[s.source].name, t.locations[s.target].name
        ));
        if !s.guard.is_true() {
            out.push_str(&format!(" when {}", render_expr(&s.guard, &t.clocks)));
        }
        match s.action.kind {
            ActionKind::Tau => {}
            _ => out.push_str(&format!(" via {}", s.action)),
        }
        if !s.resets.is_empty() {
            let names: Vec<&str> = s.resets.iter().map(|&c| t.clocks[c].as_str()).collect();
            out.push_str(&format!(" reset {}", names.join(" ")));
        }
        out.push('\n');
    }
    out
}
