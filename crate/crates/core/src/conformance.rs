//! Symbolic conformance checking between two labeled zone graphs, with
//! counterexample extraction.
//!
//! The checker is specification-driven: it enumerates the specification's
//! suspension span traces, drags the implementation along every step by
//! constraining a shared auxiliary delay clock to the step's span, and tests
//! out-set containment at every prefix. Step spans are refined internally to
//! integer-point granularity (with one unbounded tail chunk per span) so that
//! the verdict matches the discrete reference semantics on closed-constraint
//! models; reported witnesses carry the unrefined branch spans.

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::dbm::Span;

use crate::traces::{SpanStep, SpanTrace, StepLabel};
use crate::zonegraph::{
    check_independent_progress, check_input_enabled, DeltaFlavor, Engine, Iolzg, SymbolicState,
    ZgError,
};

/// Label of an out-set entry. Quiescence sorts before outputs so that
/// liveness mismatches are surfaced first in witnesses.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OutLabel {
    DeltaS,
    DeltaE,
    Out(String),
}

impl fmt::Display for OutLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutLabel::DeltaS => write!(f, "delta_S"),
            OutLabel::DeltaE => write!(f, "delta_E"),
            OutLabel::Out(name) => write!(f, "!{name}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutEntry {
    pub span: Span,
    pub label: OutLabel,
}

impl OutEntry {
    fn key(&self) -> (&OutLabel, Span) {
        (&self.label, self.span)
    }

    fn lo_is_zero(&self) -> bool {
        self.span.lo == 0 && !self.span.lo_strict
    }
}

impl fmt::Display for OutEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.span, self.label)
    }
}

/// Minimal set of out-entries (spans per label coalesced), sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OutSet {
    pub entries: Vec<OutEntry>,
}

impl OutSet {
    /// Containment of one implementation entry. Output entries compare their
    /// delay windows; quiescence entries compare as flags at delay zero (a
    /// quiescent state reached at a later delay is only observable through
    /// the specification's own trace extensions, which the checker explores
    /// separately).
    pub fn covers(&self, e: &OutEntry) -> bool {
        match e.label {
            OutLabel::Out(_) => self
                .entries
                .iter()
                .any(|s| s.label == e.label && e.span.leq(&s.span)),
            OutLabel::DeltaS | OutLabel::DeltaE => {
                let flags_now = |s: &OutEntry| s.lo_is_zero();
                if !flags_now(e) {
                    return true;
                }
                self.entries
                    .iter()
                    .any(|s| s.label == e.label && flags_now(s))
            }
        }
    }
}

impl fmt::Display for OutSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "(nothing)");
        }
        let parts: Vec<String> = self.entries.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelationMode {
    Ltioco,
    TiocoDelta,
}

#[derive(Clone, Copy, Debug)]
pub struct CheckConfig {
    pub depth: usize,
    pub relation: RelationMode,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            depth: 8,
            relation: RelationMode::Ltioco,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub trace: SpanTrace,
    pub offending: OutEntry,
    pub also_failing: Vec<OutEntry>,
    pub spec_out: OutSet,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CheckStats {
    pub states_explored: usize,
    pub traces_expanded: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub pass: bool,
    pub witness: Option<Witness>,
    pub warnings: Vec<String>,
    pub stats: CheckStats,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("implementation and specification have different alphabets")]
    AlphabetMismatch,
    #[error(transparent)]
    Graph(#[from] ZgError),
}

/// States reachable from `states` by one suspension span-trace step.
pub fn after(
    states: &BTreeSet<SymbolicState>,
    step: &SpanStep,
    g: &Iolzg,
) -> Result<BTreeSet<SymbolicState>, CheckError> {
    let engine = g.engine();
    let set = match &step.label {
        StepLabel::Act(a) => engine.after_action(states, a, &step.span)?,
        StepLabel::DeltaS => engine.after_delta(states, DeltaFlavor::Safe, &step.span)?,
        StepLabel::DeltaE => engine.after_delta(states, DeltaFlavor::Enforced, &step.span)?,
    };
    Ok(set)
}

/// Out-set of a state set: enabled outputs with their delay windows plus the
/// quiescence entries of the chosen relation.
pub fn out_set(
    states: &BTreeSet<SymbolicState>,
    g: &Iolzg,
    mode: RelationMode,
) -> Result<OutSet, CheckError> {
    build_out_set(g.engine(), states, mode)
}

fn build_out_set(
    engine: &Engine,
    states: &BTreeSet<SymbolicState>,
    mode: RelationMode,
) -> Result<OutSet, CheckError> {
    let mut raw: Vec<(Span, OutLabel)> = Vec::new();
    for (name, windows) in engine.output_windows(states)? {
        for w in windows {
            raw.push((w, OutLabel::Out(name.clone())));
        }
    }
    if mode == RelationMode::Ltioco {
        for w in engine.delta_windows(states, DeltaFlavor::Safe)? {
            raw.push((w, OutLabel::DeltaS));
        }
    }
    for w in engine.delta_windows(states, DeltaFlavor::Enforced)? {
        raw.push((w, OutLabel::DeltaE));
    }
    let merged = crate::traces::merge_spans(&raw);
    Ok(OutSet {
        entries: merged
            .into_iter()
            .map(|(span, label)| OutEntry { span, label })
            .collect(),
    })
}

/// Live timed conformance of `im` against `sp` (or the classical-quiescence
/// variant), to the configured trace depth.
pub fn check(im: &Iolzg, sp: &Iolzg, cfg: &CheckConfig) -> Result<Verdict, CheckError> {
    if im.tioa().inputs != sp.tioa().inputs || im.tioa().outputs != sp.tioa().outputs {
        return Err(CheckError::AlphabetMismatch);
    }
    let mut warnings = Vec::new();
    let ie = check_input_enabled(im, true)?;
    if !ie.enabled {
        warnings.push(format!(
            "implementation is not weakly input-enabled ({} violating states)",
            ie.violations.len()
        ));
    }
    let ip = check_independent_progress(im)?;
    if !ip.enabled {
        warnings.push(format!(
            "implementation does not enable independent progress ({} violating states)",
            ip.violators.len()
        ));
    }

    let mut ctx = Ctx {
        im: im.engine(),
        sp: sp.engine(),
        mode: cfg.relation,
        memo: HashMap::new(),
        stats: CheckStats::default(),
    };
    let im0: BTreeSet<SymbolicState> = std::iter::once(im.initial_state().clone()).collect();
    let sp0: BTreeSet<SymbolicState> = std::iter::once(sp.initial_state().clone()).collect();
    let mut prefix = Vec::new();
    let witness = ctx.visit(&im0, &sp0, cfg.depth, &mut prefix, 0)?;
    Ok(Verdict {
        pass: witness.is_none(),
        witness,
        warnings,
        stats: ctx.stats,
    })
}

/// Human-readable verdict report.
pub fn explain(v: &Verdict) -> String {
    let mut out = String::new();
    if v.pass {
        out.push_str("PASS\n");
    } else {
        out.push_str("FAIL\n");
        if let Some(w) = &v.witness {
            let trace = if w.trace.steps.is_empty() {
                "<empty>".to_string()
            } else {
                w.trace.to_string()
            };
            out.push_str(&format!("  after trace: {trace}\n"));
            out.push_str(&format!("  implementation offers: {}\n", w.offending));
            out.push_str(&format!("  specification allows: {}\n", w.spec_out));
            out.push_str(&format!(
                "  no specification entry labeled {} covers {}\n",
                w.offending.label, w.offending.span
            ));
            for e in &w.also_failing {
                out.push_str(&format!("  also uncovered: {e}\n"));
            }
        }
    }
    for warning in &v.warnings {
        out.push_str(&format!("  warning: {warning}\n"));
    }
    out.push_str(&format!(
        "  states explored: {}, traces expanded: {}\n",
        v.stats.states_explored, v.stats.traces_expanded
    ));
    out
}

struct Ctx<'a> {
    im: &'a Engine,
    sp: &'a Engine,
    mode: RelationMode,
    memo: HashMap<(Vec<SymbolicState>, Vec<SymbolicState>, u8), usize>,
    stats: CheckStats,
}

const DELTA_S_BIT: u8 = 1;
const DELTA_E_BIT: u8 = 2;

/// Integer-point refinement of a step span, plus an unbounded tail chunk
/// beyond `bound` for upward-open spans. Returned largest-first.
fn refine(span: &Span, bound: u64) -> Vec<Span> {
    let mut subs = Vec::new();
    match span.up {
        Some(up) => {
            for n in span.lo..=up {
                if span.contains_int(n) {
                    subs.push(Span::closed(n, n));
                }
            }
        }
        None => {
            let b = bound.max(span.lo);
            for n in span.lo..=b {
                if span.contains_int(n) {
                    subs.push(Span::closed(n, n));
                }
            }
            subs.push(Span {
                lo: b,
                lo_strict: true,
                up: None,
                up_strict: false,
            });
        }
    }
    if subs.is_empty() {
        subs.push(*span);
    }
    subs.reverse();
    subs
}

fn label_rank(label: &StepLabel) -> (u8, String) {
    match label {
        StepLabel::Act(a) => (0, format!("{a}")),
        StepLabel::DeltaS => (1, String::new()),
        StepLabel::DeltaE => (2, String::new()),
    }
}

impl<'a> Ctx<'a> {
    fn visit(
        &mut self,
        im_set: &BTreeSet<SymbolicState>,
        sp_set: &BTreeSet<SymbolicState>,
        depth_left: usize,
        prefix: &mut Vec<SpanStep>,
        consec: u8,
    ) -> Result<Option<Witness>, CheckError> {
        let key = (
            im_set.iter().cloned().collect::<Vec<_>>(),
            sp_set.iter().cloned().collect::<Vec<_>>(),
            consec,
        );
        if let Some(&seen) = self.memo.get(&key) {
            if seen >= depth_left {
                return Ok(None);
            }
        }
        self.memo.insert(key, depth_left);
        self.stats.states_explored += 1;

        let im_out = build_out_set(self.im, im_set, self.mode)?;
        let sp_out = build_out_set(self.sp, sp_set, self.mode)?;
        let mut failing: Vec<&OutEntry> = im_out
            .entries
            .iter()
            .filter(|e| !sp_out.covers(e))
            .collect();
        if !failing.is_empty() {
            failing.sort_by(|a, b| a.key().cmp(&b.key()));
            let offending = failing[0].clone();
            let also_failing = failing[1..].iter().map(|e| (*e).clone()).collect();
            return Ok(Some(Witness {
                trace: SpanTrace {
                    steps: prefix.clone(),
                },
                offending,
                also_failing,
                spec_out: sp_out,
            }));
        }

        // Collect the specification's branches: action steps (when depth
        // remains) and quiescence self-loops (depth-free, one consecutive
        // step per flavor).
        let mut branches: Vec<(Span, StepLabel, Option<DeltaFlavor>)> = Vec::new();
        if depth_left > 0 {
            for action in self.sp.visible_actions() {
                for (span, _) in self.sp.branches(sp_set, &action)? {
                    branches.push((span, StepLabel::Act(action.clone()), None));
                }
            }
        }
        let mut flavors = vec![(DeltaFlavor::Enforced, DELTA_E_BIT, StepLabel::DeltaE)];
        if self.mode == RelationMode::Ltioco {
            flavors.push((DeltaFlavor::Safe, DELTA_S_BIT, StepLabel::DeltaS));
        }
        for (flavor, bit, label) in &flavors {
            if consec & bit != 0 {
                continue;
            }
            for span in self.sp.delta_windows(sp_set, *flavor)? {
                branches.push((span, label.clone(), Some(*flavor)));
            }
        }

        // Refinement bound: every finite window endpoint seen from this node,
        // on either side, so the unbounded tail is behaviorally uniform.
        let mut bound = self.im.k.max(self.sp.k);
        let mut note = |span: &Span| {
            bound = bound.max(span.lo).max(span.up.unwrap_or(0));
        };
        for (span, _, _) in &branches {
            note(span);
        }
        for action in self.im.visible_actions() {
            for (_, windows) in self.im.step_windows(im_set, &action)? {
                for w in windows {
                    note(&w);
                }
            }
        }
        for flavor in [DeltaFlavor::Safe, DeltaFlavor::Enforced] {
            for w in self.im.delta_windows(im_set, flavor)? {
                note(&w);
            }
        }

        branches.sort_by(|a, b| {
            let key = |(span, label, _): &(Span, StepLabel, Option<DeltaFlavor>)| {
                (
                    Reverse(span.lo),
                    Reverse(span.lo_strict),
                    label_rank(label),
                    Reverse(span.up.is_none()),
                    Reverse(span.up.unwrap_or(0)),
                )
            };
            key(a).cmp(&key(b))
        });

        for (span, label, flavor) in branches {
            self.stats.traces_expanded += 1;
            for sub in refine(&span, bound) {
                let (im_next, sp_next, next_depth, next_consec) = match (&label, flavor) {
                    (StepLabel::Act(a), _) => (
                        self.im.after_action(im_set, a, &sub)?,
                        self.sp.after_action(sp_set, a, &sub)?,
                        depth_left - 1,
                        0,
                    ),
                    (_, Some(fl)) => {
                        let bit = if fl == DeltaFlavor::Safe {
                            DELTA_S_BIT
                        } else {
                            DELTA_E_BIT
                        };
                        (
                            self.im.after_delta(im_set, fl, &sub)?,
                            self.sp.after_delta(sp_set, fl, &sub)?,
                            depth_left,
                            consec | bit,
                        )
                    }
                    _ => unreachable!(),
                };
                if sp_next.is_empty() {
                    continue;
                }
                prefix.push(SpanStep {
                    span,
                    label: label.clone(),
                });
                let result = self.visit(&im_next, &sp_next, next_depth, prefix, next_consec)?;
                prefix.pop();
                if result.is_some() {
                    return Ok(result);
                }
            }
        }
        Ok(None)
    }
}
