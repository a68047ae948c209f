//! Span traces and suspension span traces over an IOLZG.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::dbm::Span;
use crate::model::Action;
use crate::zonegraph::{DeltaFlavor, Iolzg, SymbolicState, ZgError};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepLabel {
    Act(Action),
    DeltaS,
    DeltaE,
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepLabel::Act(a) => write!(f, "{a}"),
            StepLabel::DeltaS => write!(f, "delta_S"),
            StepLabel::DeltaE => write!(f, "delta_E"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpanStep {
    pub span: Span,
    pub label: StepLabel,
}

impl fmt::Display for SpanStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.span, self.label)
    }
}

/// A finite sequence of (span, action-or-quiescence) steps.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpanTrace {
    pub steps: Vec<SpanStep>,
}

impl SpanTrace {
    pub fn empty() -> SpanTrace {
        SpanTrace::default()
    }

    /// Number of visible action steps (quiescence self-loops excluded).
    pub fn action_len(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s.label, StepLabel::Act(_)))
            .count()
    }
}

impl fmt::Display for SpanTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps.is_empty() {
            return write!(f, "<empty>");
        }
        let parts: Vec<String> = self.steps.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(", "))
    }
}

/// Span containment ordering.
pub fn span_leq(a: &Span, b: &Span) -> bool {
    a.leq(b)
}

/// Per label, coalesce overlapping or touching spans into maximal intervals.
pub fn merge_spans<L: Ord + Clone>(entries: &[(Span, L)]) -> Vec<(Span, L)> {
    let mut by_label: BTreeMap<L, Vec<Span>> = BTreeMap::new();
    for (span, label) in entries {
        by_label.entry(label.clone()).or_default().push(*span);
    }
    let mut out = Vec::new();
    for (label, spans) in by_label {
        for span in Span::merge_list(spans) {
            out.push((span, label.clone()));
        }
    }
    out.sort_by(|a, b| (&a.1, a.0).cmp(&(&b.1, b.0)));
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("label `{0}` is not in the alphabet")]
    UnknownLabel(String),
    #[error(transparent)]
    Graph(#[from] ZgError),
    #[error("trace budget exceeded")]
    BudgetExceeded,
}

/// Delay spans under which `label` can fire from the state set, paired with
/// the resulting targets; one entry per distinct (span, successor-set).
pub fn step_spans(
    states: &BTreeSet<SymbolicState>,
    label: &Action,
    g: &Iolzg,
) -> Result<Vec<(Span, BTreeSet<SymbolicState>)>, TraceError> {
    let tioa = g.tioa();
    let known = match label.kind {
        crate::model::ActionKind::Input => tioa.inputs.contains(&label.name),
        crate::model::ActionKind::Output => tioa.outputs.contains(&label.name),
        crate::model::ActionKind::Tau => false,
    };
    if !known {
        return Err(TraceError::UnknownLabel(label.name.clone()));
    }
    Ok(g.engine().branches(states, label)?)
}

const TRACE_BUDGET: usize = 200_000;

/// All span traces of visible length at most `depth`; with `with_quiescence`,
/// quiescence self-loop steps are inserted where they hold (suspension span
/// traces).
pub fn enumerate_span_traces(
    g: &Iolzg,
    depth: usize,
    with_quiescence: bool,
) -> Result<BTreeSet<SpanTrace>, TraceError> {
    let mut out = BTreeSet::new();
    let mut start = BTreeSet::new();
    start.insert(g.initial_state().clone());
    let mut prefix = Vec::new();
    go(g, &start, depth, with_quiescence, &mut prefix, 0, &mut out)?;
    Ok(out)
}

fn go(
    g: &Iolzg,
    states: &BTreeSet<SymbolicState>,
    depth_left: usize,
    with_quiescence: bool,
    prefix: &mut Vec<SpanStep>,
    consec_deltas: u8,
    out: &mut BTreeSet<SpanTrace>,
) -> Result<(), TraceError> {
    out.insert(SpanTrace {
        steps: prefix.clone(),
    });
    if out.len() > TRACE_BUDGET {
        return Err(TraceError::BudgetExceeded);
    }
    if with_quiescence {
        for (flavor, bit, label) in [
            (DeltaFlavor::Safe, 1u8, StepLabel::DeltaS),
            (DeltaFlavor::Enforced, 2u8, StepLabel::DeltaE),
        ] {
            if consec_deltas & bit != 0 {
                continue;
            }
            for window in g.engine().delta_windows(states, flavor)? {
                let succ = g.engine().after_delta(states, flavor, &window)?;
                if succ.is_empty() {
                    continue;
                }
                prefix.push(SpanStep {
                    span: window,
                    label: label.clone(),
                });
                go(g, &succ, depth_left, with_quiescence, prefix, consec_deltas | bit, out)?;
                prefix.pop();
            }
        }
    }
    if depth_left == 0 {
        return Ok(());
    }
    for action in g.engine().visible_actions() {
        for (span, succ) in g.engine().branches(states, &action)? {
            prefix.push(SpanStep {
                span,
                label: StepLabel::Act(action.clone()),
            });
            go(g, &succ, depth_left - 1, with_quiescence, prefix, 0, out)?;
            prefix.pop();
        }
    }
    Ok(())
}
