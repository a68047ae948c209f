//! The k-normalized input/output-labeled zone graph and the shared symbolic
//! stepping machinery (delay closures over an auxiliary delay clock, firing
//! windows, quiescence classification).

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use thiserror::Error;

use crate::dbm::{Bound, ClockNames, Span, Zone};
use crate::model::{Action, ActionKind, ClockConstraint, Relation, Switch, Tioa};

/// A location paired with a canonical, k-normalized zone.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolicState {
    pub location: usize,
    pub zone: Zone,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ZgLabel {
    Epsilon,
    Act(Action),
}

impl std::fmt::Display for ZgLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ZgLabel::Epsilon => write!(f, "eps"),
            ZgLabel::Act(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ZgEdge {
    pub source: usize,
    pub target: usize,
    pub label: ZgLabel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuiescenceClass {
    pub safe: bool,
    pub enforced: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeltaFlavor {
    Safe,
    Enforced,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ZgError {
    #[error("ceiling {given} is below the model's greatest constant {required}")]
    InvalidCeiling { given: u64, required: u64 },
    #[error("model failed validation: {0}")]
    InvalidModel(String),
    #[error("state budget exceeded while exploring (possible divergence)")]
    BudgetExceeded,
}

/// The finite labeled zone graph of a TIOA.
pub struct Iolzg {
    pub ceiling: u64,
    pub states: Vec<SymbolicState>,
    pub initial: usize,
    pub edges: Vec<ZgEdge>,
    engine: Engine,
}

impl std::fmt::Debug for Iolzg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Iolzg")
            .field("ceiling", &self.ceiling)
            .field("states", &self.states.len())
            .field("edges", &self.edges.len())
            .finish()
    }
}

impl Iolzg {
    pub fn tioa(&self) -> &Arc<Tioa> {
        &self.engine.tioa
    }

    pub(crate) fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn initial_state(&self) -> &SymbolicState {
        &self.states[self.initial]
    }

    pub fn state_index(&self, s: &SymbolicState) -> Option<usize> {
        self.states.iter().position(|x| x == s)
    }
}

const STATE_BUDGET: usize = 100_000;
const CLOSURE_BUDGET: usize = 8_192;

/// Build the IOLZG by fixed-point exploration from the initial symbolic state.
pub fn build_iolzg(tioa: &Tioa, k: u64) -> Result<Iolzg, ZgError> {
    let report = tioa.validate();
    if report.has_errors() {
        let msg = report
            .problems
            .iter()
            .map(|p| format!("{} ({})", p.message, p.element))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(ZgError::InvalidModel(msg));
    }
    if k < report.max_constant {
        return Err(ZgError::InvalidCeiling {
            given: k,
            required: report.max_constant,
        });
    }
    let engine = Engine::new(Arc::new(tioa.clone()), k);
    let init_zone = Zone::origin(engine.clock_names.clone())
        .and_constraint(&tioa.locations[tioa.initial].invariant)
        .expect("initial constraint")
        .k_normalize(k);
    if init_zone.is_empty() {
        return Err(ZgError::InvalidModel(
            "initial location invariant excludes the origin".into(),
        ));
    }
    let initial = SymbolicState {
        location: tioa.initial,
        zone: init_zone,
    };

    let mut states = vec![initial.clone()];
    let mut index: HashMap<SymbolicState, usize> = HashMap::new();
    index.insert(initial, 0);
    let mut edges: Vec<ZgEdge> = Vec::new();
    let mut edge_set: HashSet<(usize, usize, ZgLabel)> = HashSet::new();
    let mut cursor = 0;

    while cursor < states.len() {
        if states.len() > STATE_BUDGET {
            return Err(ZgError::BudgetExceeded);
        }
        let state = states[cursor].clone();
        let src = cursor;
        cursor += 1;

        let mut add_state = |s: SymbolicState, states: &mut Vec<SymbolicState>| -> usize {
            if let Some(&i) = index.get(&s) {
                return i;
            }
            let i = states.len();
            states.push(s.clone());
            index.insert(s, i);
            i
        };

        // Rule 1: the delay successor.
        let eps_zone = state
            .zone
            .up()
            .expect("nonempty graph state")
            .and_constraint(&tioa.locations[state.location].invariant)
            .expect("invariant over declared clocks")
            .k_normalize(k);
        let eps_state = SymbolicState {
            location: state.location,
            zone: eps_zone,
        };
        let tgt = add_state(eps_state, &mut states);
        if edge_set.insert((src, tgt, ZgLabel::Epsilon)) {
            edges.push(ZgEdge {
                source: src,
                target: tgt,
                label: ZgLabel::Epsilon,
            });
        }

        // Rule 2: one successor per enabled switch.
        for sw in tioa.switches_from(state.location) {
            if let Some(zone) = engine.switch_target(&state.zone, sw) {
                let tgt = add_state(
                    SymbolicState {
                        location: sw.target,
                        zone,
                    },
                    &mut states,
                );
                let label = ZgLabel::Act(sw.action.clone());
                if edge_set.insert((src, tgt, label.clone())) {
                    edges.push(ZgEdge {
                        source: src,
                        target: tgt,
                        label,
                    });
                }
            }
        }
    }

    Ok(Iolzg {
        ceiling: k,
        states,
        initial: 0,
        edges,
        engine,
    })
}

/// All states reachable from `z` through delay and silent moves, each paired
/// with the span of delays at which it is occupied.
pub fn delay_closure(z: &SymbolicState, g: &Iolzg) -> Result<Vec<(SymbolicState, Span)>, ZgError> {
    let closure = g.engine.closure(z)?;
    Ok(closure
        .members
        .iter()
        .map(|m| (m.state.clone(), m.t_span))
        .collect())
}

/// Safe / enforced quiescence of a symbolic state, judged over its delay
/// closure.
pub fn classify_quiescence(z: &SymbolicState, g: &Iolzg) -> Result<QuiescenceClass, ZgError> {
    let (safe, enforced) = g.engine.classify(z)?;
    Ok(QuiescenceClass { safe, enforced })
}

/// States occupied at some delay within `span` along the delay closure of a
/// state set (delay-and-silent moves only, no visible action).
pub fn reachable_within(
    states: &BTreeSet<SymbolicState>,
    span: &Span,
    g: &Iolzg,
) -> Result<BTreeSet<SymbolicState>, ZgError> {
    g.engine.slice(states, span)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputEnabledViolation {
    pub state: usize,
    pub input: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputEnabledReport {
    pub enabled: bool,
    pub violations: Vec<InputEnabledViolation>,
}

/// Checks that every input is available at every delay point of every state;
/// `weak` routes availability through silent moves.
pub fn check_input_enabled(g: &Iolzg, weak: bool) -> Result<InputEnabledReport, ZgError> {
    let engine = &g.engine;
    let mut violations = Vec::new();
    for (idx, state) in g.states.iter().enumerate() {
        let closure = engine.closure_mode(state, weak)?;
        let delay_spans = Span::merge_list(closure.members.iter().map(|m| m.t_span).collect());
        for input in &engine.tioa.inputs {
            let action = Action::input(input);
            let mut windows = Vec::new();
            for m in &closure.members {
                for sw in engine.tioa.switches_from(m.state.location) {
                    if sw.action == action {
                        if let Some((w, _)) = engine.fire(&m.tzone, sw, None) {
                            windows.push(w);
                        }
                    }
                }
            }
            let windows = Span::merge_list(windows);
            let covered = delay_spans
                .iter()
                .all(|d| windows.iter().any(|w| d.leq(w)));
            if !covered {
                violations.push(InputEnabledViolation {
                    state: idx,
                    input: input.clone(),
                });
                break; // first violation per state
            }
        }
    }
    Ok(InputEnabledReport {
        enabled: violations.is_empty(),
        violations,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgressReport {
    pub enabled: bool,
    pub violators: Vec<usize>,
}

/// Every state must either be able to delay forever or weakly reach an output.
pub fn check_independent_progress(g: &Iolzg) -> Result<ProgressReport, ZgError> {
    let mut violators = Vec::new();
    for (idx, state) in g.states.iter().enumerate() {
        let (safe, enforced) = g.engine.classify(state)?;
        if !safe && enforced {
            violators.push(idx);
        }
    }
    Ok(ProgressReport {
        enabled: violators.is_empty(),
        violators,
    })
}

/// Deterministic DOT rendering of the graph.
pub fn export_dot(g: &Iolzg) -> String {
    let tioa = g.tioa();
    let mut order: Vec<usize> = (0..g.states.len()).collect();
    let label_of = |i: usize| {
        format!(
            "{} | {}",
            tioa.locations[g.states[i].location].name,
            g.states[i].zone.render_constraints()
        )
    };
    order.sort_by(|&a, &b| label_of(a).cmp(&label_of(b)));
    let mut ids = vec![0usize; g.states.len()];
    for (rank, &s) in order.iter().enumerate() {
        ids[s] = rank;
    }
    let mut out = String::from("digraph iolzg {\n  node [shape=box];\n");
    for &s in &order {
        out.push_str(&format!("  n{} [label=\"{}\"];\n", ids[s], label_of(s)));
    }
    let mut edges: Vec<(usize, usize, String)> = g
        .edges
        .iter()
        .map(|e| (ids[e.source], ids[e.target], e.label.to_string()))
        .collect();
    edges.sort();
    for (s, t, l) in edges {
        out.push_str(&format!("  n{s} -> n{t} [label=\"{l}\"];\n"));
    }
    out.push_str("}\n");
    out
}

// ---------------------------------------------------------------------------
// The symbolic stepping engine shared with span traces and conformance.
// ---------------------------------------------------------------------------

pub(crate) struct ClosureMember {
    pub state: SymbolicState,
    /// Zone extended with the auxiliary delay clock (last position), not
    /// normalized: correlations with t must stay exact.
    pub tzone: Zone,
    pub t_span: Span,
}

pub(crate) struct Closure {
    pub members: Vec<ClosureMember>,
}

pub(crate) struct Engine {
    pub tioa: Arc<Tioa>,
    pub k: u64,
    pub clock_names: ClockNames,
    aux: String,
    closures: RefCell<HashMap<(SymbolicState, bool), Arc<Closure>>>,
    classes: RefCell<HashMap<SymbolicState, (bool, bool)>>,
    fires: RefCell<HashMap<(SymbolicState, Action), Arc<Vec<(Span, SymbolicState)>>>>,
    after_acts: RefCell<HashMap<(SymbolicState, Action, Span), Arc<BTreeSet<SymbolicState>>>>,
    delta_spans: RefCell<HashMap<(SymbolicState, DeltaFlavor), Arc<Vec<Span>>>>,
    after_deltas: RefCell<HashMap<(SymbolicState, DeltaFlavor, Span), Arc<BTreeSet<SymbolicState>>>>,
}

impl Engine {
    pub fn new(tioa: Arc<Tioa>, k: u64) -> Engine {
        let clock_names: ClockNames = Arc::new(tioa.clocks.clone());
        let mut aux = "__t".to_string();
        while tioa.clocks.contains(&aux) {
            aux.push('_');
        }
        Engine {
            tioa,
            k,
            clock_names,
            aux,
            closures: RefCell::new(HashMap::new()),
            classes: RefCell::new(HashMap::new()),
            fires: RefCell::new(HashMap::new()),
            after_acts: RefCell::new(HashMap::new()),
            delta_spans: RefCell::new(HashMap::new()),
            after_deltas: RefCell::new(HashMap::new()),
        }
    }

    fn aux_index(&self) -> usize {
        self.clock_names.len()
    }

    /// Target zone of a switch fired from a plain (unextended) zone; the
    /// IOLZG rule-2 computation.
    fn switch_target(&self, zone: &Zone, sw: &Switch) -> Option<Zone> {
        let guarded = zone.and_constraint(&sw.guard).expect("guard clocks");
        if guarded.is_empty() {
            return None;
        }
        let resets: Vec<usize> = sw.resets.iter().copied().collect();
        let reset = guarded.reset(&resets).expect("nonempty");
        let constrained = reset
            .and_constraint(&self.tioa.locations[sw.target].invariant)
            .expect("invariant clocks");
        if constrained.is_empty() {
            return None;
        }
        Some(constrained.k_normalize(self.k))
    }

    /// Pull the target invariant back through the reset set: atoms over reset
    /// clocks are evaluated at zero, the rest constrain the pre-reset zone.
    fn pullback_invariant(
        &self,
        zone: &Zone,
        inv: &ClockConstraint,
        resets: &BTreeSet<usize>,
    ) -> Option<Zone> {
        let mut kept = Vec::new();
        for atom in &inv.conjuncts {
            if resets.contains(&atom.clock) {
                let ok = match atom.relation {
                    Relation::Le => true,
                    Relation::Lt => atom.bound > 0,
                    Relation::Eq | Relation::Ge => atom.bound == 0,
                    Relation::Gt => false,
                };
                if !ok {
                    return None;
                }
            } else {
                kept.push(*atom);
            }
        }
        let z = zone
            .and_constraint(&ClockConstraint { conjuncts: kept })
            .expect("invariant clocks");
        if z.is_empty() {
            None
        } else {
            Some(z)
        }
    }

    fn constrain_aux(&self, zone: &Zone, span: &Span) -> Zone {
        let aux_mi = self.aux_index() + 1; // matrix index
        let mut z = zone.tightened(
            0,
            aux_mi,
            Bound::Finite {
                value: -(span.lo as i64),
                strict: span.lo_strict,
            },
        );
        if let Some(up) = span.up {
            z = z.tightened(
                aux_mi,
                0,
                Bound::Finite {
                    value: up as i64,
                    strict: span.up_strict,
                },
            );
        }
        z
    }

    /// Fire a switch from an extended zone. Returns the delay window (span of
    /// the auxiliary clock over the firing region) together with the
    /// post-reset extended zone.
    fn fire_ext(&self, tzone: &Zone, sw: &Switch, within: Option<&Span>) -> Option<(Span, Zone)> {
        let mut z = tzone.and_constraint(&sw.guard).expect("guard clocks");
        if let Some(span) = within {
            z = self.constrain_aux(&z, span);
        }
        if z.is_empty() {
            return None;
        }
        let z = self.pullback_invariant(&z, &self.tioa.locations[sw.target].invariant, &sw.resets)?;
        let window = z.span_of_clock(self.aux_index()).expect("nonempty");
        let resets: Vec<usize> = sw.resets.iter().copied().collect();
        let target = z.reset(&resets).expect("nonempty");
        Some((window, target))
    }

    /// As `fire_ext` but projecting the auxiliary clock away and normalizing,
    /// yielding a graph-level symbolic state.
    pub(crate) fn fire(
        &self,
        tzone: &Zone,
        sw: &Switch,
        within: Option<&Span>,
    ) -> Option<(Span, SymbolicState)> {
        let (window, target) = self.fire_ext(tzone, sw, within)?;
        let zone = target.project_last().k_normalize(self.k);
        Some((
            window,
            SymbolicState {
                location: sw.target,
                zone,
            },
        ))
    }

    pub(crate) fn closure(&self, state: &SymbolicState) -> Result<Arc<Closure>, ZgError> {
        self.closure_mode(state, true)
    }

    /// Delay closure over the auxiliary clock; `weak` additionally follows
    /// silent switches.
    pub(crate) fn closure_mode(
        &self,
        state: &SymbolicState,
        weak: bool,
    ) -> Result<Arc<Closure>, ZgError> {
        if let Some(c) = self.closures.borrow().get(&(state.clone(), weak)) {
            return Ok(c.clone());
        }
        let mut members = Vec::new();
        let mut visited: HashSet<(usize, Zone)> = HashSet::new();
        let start = state.zone.extend_with_clock(&self.aux);
        let mut queue = std::collections::VecDeque::new();
        queue.push_back((state.location, start));
        while let Some((loc, tzone)) = queue.pop_front() {
            if tzone.is_empty() || !visited.insert((loc, tzone.clone())) {
                continue;
            }
            if members.len() > CLOSURE_BUDGET {
                return Err(ZgError::BudgetExceeded);
            }
            let t_span = tzone.span_of_clock(self.aux_index()).expect("nonempty");
            members.push(ClosureMember {
                state: SymbolicState {
                    location: loc,
                    zone: tzone.project_last().k_normalize(self.k),
                },
                tzone: tzone.clone(),
                t_span,
            });
            // Delay.
            let delayed = tzone
                .up()
                .expect("nonempty")
                .and_constraint(&self.tioa.locations[loc].invariant)
                .expect("invariant clocks");
            queue.push_back((loc, delayed));
            // Silent switches.
            if weak {
                for sw in self.tioa.switches_from(loc) {
                    if sw.action.is_tau() {
                        if let Some((_, target)) = self.fire_ext(&tzone, sw, None) {
                            queue.push_back((sw.target, target));
                        }
                    }
                }
            }
        }
        let closure = Arc::new(Closure { members });
        self.closures
            .borrow_mut()
            .insert((state.clone(), weak), closure.clone());
        Ok(closure)
    }

    /// All (window, target) firings of `label` from one state's closure.
    fn fires_of(
        &self,
        state: &SymbolicState,
        label: &Action,
    ) -> Result<Arc<Vec<(Span, SymbolicState)>>, ZgError> {
        let key = (state.clone(), label.clone());
        if let Some(v) = self.fires.borrow().get(&key) {
            return Ok(v.clone());
        }
        let closure = self.closure(state)?;
        let mut v = Vec::new();
        for m in &closure.members {
            for sw in self.tioa.switches_from(m.state.location) {
                if &sw.action == label {
                    if let Some(hit) = self.fire(&m.tzone, sw, None) {
                        v.push(hit);
                    }
                }
            }
        }
        let v = Arc::new(v);
        self.fires.borrow_mut().insert(key, v.clone());
        Ok(v)
    }

    /// Per-target firing windows for a visible action from a set of states;
    /// windows of the same target are coalesced.
    pub(crate) fn step_windows(
        &self,
        states: &BTreeSet<SymbolicState>,
        label: &Action,
    ) -> Result<BTreeMap<SymbolicState, Vec<Span>>, ZgError> {
        let mut acc: BTreeMap<SymbolicState, Vec<Span>> = BTreeMap::new();
        for state in states {
            for (w, target) in self.fires_of(state, label)?.iter() {
                acc.entry(target.clone()).or_default().push(*w);
            }
        }
        for windows in acc.values_mut() {
            *windows = Span::merge_list(std::mem::take(windows));
        }
        Ok(acc)
    }

    /// Span-trace branches: one per distinct (span, successor-set) pair.
    pub(crate) fn branches(
        &self,
        states: &BTreeSet<SymbolicState>,
        label: &Action,
    ) -> Result<Vec<(Span, BTreeSet<SymbolicState>)>, ZgError> {
        let windows = self.step_windows(states, label)?;
        let mut by_span: BTreeMap<Span, BTreeSet<SymbolicState>> = BTreeMap::new();
        for (target, spans) in windows {
            for span in spans {
                by_span.entry(span).or_default().insert(target.clone());
            }
        }
        Ok(by_span.into_iter().collect())
    }

    /// All states reachable by firing `label` at some delay within `span`.
    pub(crate) fn after_action(
        &self,
        states: &BTreeSet<SymbolicState>,
        label: &Action,
        span: &Span,
    ) -> Result<BTreeSet<SymbolicState>, ZgError> {
        let mut out = BTreeSet::new();
        for state in states {
            let key = (state.clone(), label.clone(), *span);
            if let Some(cached) = self.after_acts.borrow().get(&key) {
                out.extend(cached.iter().cloned());
                continue;
            }
            let mut one = BTreeSet::new();
            let closure = self.closure(state)?;
            for m in &closure.members {
                for sw in self.tioa.switches_from(m.state.location) {
                    if &sw.action == label {
                        if let Some((_, target)) = self.fire(&m.tzone, sw, Some(span)) {
                            one.insert(target);
                        }
                    }
                }
            }
            let one = Arc::new(one);
            self.after_acts.borrow_mut().insert(key, one.clone());
            out.extend(one.iter().cloned());
        }
        Ok(out)
    }

    /// Safe/enforced quiescence of one symbolic state.
    pub(crate) fn classify(&self, state: &SymbolicState) -> Result<(bool, bool), ZgError> {
        if let Some(&c) = self.classes.borrow().get(state) {
            return Ok(c);
        }
        let closure = self.closure(state)?;
        let mut enforced = true;
        'outer: for m in &closure.members {
            for sw in self.tioa.switches_from(m.state.location) {
                if sw.action.kind == ActionKind::Output && self.fire(&m.tzone, sw, None).is_some()
                {
                    enforced = false;
                    break 'outer;
                }
            }
        }
        let merged = Span::merge_list(closure.members.iter().map(|m| m.t_span).collect());
        let safe = merged.len() == 1 && merged[0].lo == 0 && !merged[0].lo_strict
            && merged[0].up.is_none();
        let result = (safe, enforced);
        self.classes.borrow_mut().insert(state.clone(), result);
        Ok(result)
    }

    /// Delay windows at which a state of the given quiescence flavor is
    /// occupied, for one starting state, coalesced.
    fn delta_spans_of(
        &self,
        state: &SymbolicState,
        flavor: DeltaFlavor,
    ) -> Result<Arc<Vec<Span>>, ZgError> {
        let key = (state.clone(), flavor);
        if let Some(v) = self.delta_spans.borrow().get(&key) {
            return Ok(v.clone());
        }
        let closure = self.closure(state)?;
        let mut spans = Vec::new();
        for m in &closure.members {
            let (safe, enforced) = self.classify(&m.state)?;
            let hit = match flavor {
                DeltaFlavor::Safe => safe,
                DeltaFlavor::Enforced => enforced,
            };
            if hit {
                spans.push(m.t_span);
            }
        }
        let v = Arc::new(Span::merge_list(spans));
        self.delta_spans.borrow_mut().insert(key, v.clone());
        Ok(v)
    }

    /// As `delta_spans_of`, over a set of starting states.
    pub(crate) fn delta_windows(
        &self,
        states: &BTreeSet<SymbolicState>,
        flavor: DeltaFlavor,
    ) -> Result<Vec<Span>, ZgError> {
        let mut spans = Vec::new();
        for state in states {
            spans.extend(self.delta_spans_of(state, flavor)?.iter().copied());
        }
        Ok(Span::merge_list(spans))
    }

    /// Closure members occupied within `span`, zones refined accordingly.
    pub(crate) fn slice(
        &self,
        states: &BTreeSet<SymbolicState>,
        span: &Span,
    ) -> Result<BTreeSet<SymbolicState>, ZgError> {
        let mut out = BTreeSet::new();
        for state in states {
            let closure = self.closure(state)?;
            for m in &closure.members {
                let constrained = self.constrain_aux(&m.tzone, span);
                if constrained.is_empty() {
                    continue;
                }
                out.insert(SymbolicState {
                    location: m.state.location,
                    zone: constrained.project_last().k_normalize(self.k),
                });
            }
        }
        Ok(out)
    }

    /// The delay-closure subset satisfying the flavor, refined to delays in
    /// `span`.
    pub(crate) fn after_delta(
        &self,
        states: &BTreeSet<SymbolicState>,
        flavor: DeltaFlavor,
        span: &Span,
    ) -> Result<BTreeSet<SymbolicState>, ZgError> {
        let mut out = BTreeSet::new();
        for state in states {
            let key = (state.clone(), flavor, *span);
            if let Some(cached) = self.after_deltas.borrow().get(&key) {
                out.extend(cached.iter().cloned());
                continue;
            }
            let mut one = BTreeSet::new();
            let closure = self.closure(state)?;
            for m in &closure.members {
                let (safe, enforced) = self.classify(&m.state)?;
                let hit = match flavor {
                    DeltaFlavor::Safe => safe,
                    DeltaFlavor::Enforced => enforced,
                };
                if !hit {
                    continue;
                }
                let constrained = self.constrain_aux(&m.tzone, span);
                if constrained.is_empty() {
                    continue;
                }
                one.insert(SymbolicState {
                    location: m.state.location,
                    zone: constrained.project_last().k_normalize(self.k),
                });
            }
            let one = Arc::new(one);
            self.after_deltas.borrow_mut().insert(key, one.clone());
            out.extend(one.iter().cloned());
        }
        Ok(out)
    }

    /// Output firing windows per output name, coalesced.
    pub(crate) fn output_windows(
        &self,
        states: &BTreeSet<SymbolicState>,
    ) -> Result<BTreeMap<String, Vec<Span>>, ZgError> {
        let mut acc: BTreeMap<String, Vec<Span>> = BTreeMap::new();
        for name in self.tioa.outputs.clone() {
            let action = Action::output(&name);
            for state in states {
                for (w, _) in self.fires_of(state, &action)?.iter() {
                    acc.entry(name.clone()).or_default().push(*w);
                }
            }
        }
        for windows in acc.values_mut() {
            *windows = Span::merge_list(std::mem::take(windows));
        }
        Ok(acc)
    }

    pub(crate) fn visible_actions(&self) -> Vec<Action> {
        let mut v: Vec<Action> = self.tioa.inputs.iter().map(|n| Action::input(n)).collect();
        v.extend(self.tioa.outputs.iter().map(|n| Action::output(n)));
        v
    }
}
