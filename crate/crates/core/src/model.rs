//! The timed I/O automaton data model, static validation, and parallel
//! composition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Relation {
    pub fn token(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Eq => "==",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }
}

/// `clock ~ bound` with a non-negative integer bound. Clock indices refer to
/// the owning automaton's clock list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomicConstraint {
    pub clock: usize,
    pub relation: Relation,
    pub bound: u64,
}

/// Conjunction of atoms; the empty conjunction is `true`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClockConstraint {
    pub conjuncts: Vec<AtomicConstraint>,
}

impl ClockConstraint {
    pub fn truth() -> ClockConstraint {
        ClockConstraint::default()
    }

    pub fn is_true(&self) -> bool {
        self.conjuncts.is_empty()
    }

    /// Downward-closed means only `<=` / `<` atoms.
    pub fn downward_closed(&self) -> bool {
        self.conjuncts
            .iter()
            .all(|a| matches!(a.relation, Relation::Le | Relation::Lt))
    }

    pub fn max_constant(&self) -> u64 {
        self.conjuncts.iter().map(|a| a.bound).max().unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionKind {
    Input,
    Output,
    Tau,
}

/// A switch label. Internal switches carry the reserved name `tau`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub kind: ActionKind,
    pub name: String,
}

impl Action {
    pub fn tau() -> Action {
        Action {
            kind: ActionKind::Tau,
            name: "tau".to_string(),
        }
    }

    pub fn input(name: &str) -> Action {
        Action {
            kind: ActionKind::Input,
            name: name.to_string(),
        }
    }

    pub fn output(name: &str) -> Action {
        Action {
            kind: ActionKind::Output,
            name: name.to_string(),
        }
    }

    pub fn is_tau(&self) -> bool {
        self.kind == ActionKind::Tau
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ActionKind::Input => write!(f, "?{}", self.name),
            ActionKind::Output => write!(f, "!{}", self.name),
            ActionKind::Tau => write!(f, "tau"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub name: String,
    pub invariant: ClockConstraint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Switch {
    pub source: usize,
    pub guard: ClockConstraint,
    pub action: Action,
    pub resets: BTreeSet<usize>,
    pub target: usize,
}

/// A timed I/O automaton.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tioa {
    pub name: String,
    pub clocks: Vec<String>,
    pub inputs: BTreeSet<String>,
    pub outputs: BTreeSet<String>,
    pub locations: Vec<Location>,
    pub initial: usize,
    pub switches: Vec<Switch>,
}

impl Tioa {
    pub fn location_index(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|l| l.name == name)
    }

    pub fn clock_index(&self, name: &str) -> Option<usize> {
        self.clocks.iter().position(|c| c == name)
    }

    /// Greatest constant appearing in any guard or invariant.
    pub fn max_constant(&self) -> u64 {
        let guards = self.switches.iter().map(|s| s.guard.max_constant());
        let invs = self.locations.iter().map(|l| l.invariant.max_constant());
        guards.chain(invs).max().unwrap_or(0)
    }

    pub fn switches_from(&self, loc: usize) -> impl Iterator<Item = &Switch> {
        self.switches.iter().filter(move |s| s.source == loc)
    }

    pub fn has_strict_constraints(&self) -> bool {
        let strict = |c: &ClockConstraint| {
            c.conjuncts
                .iter()
                .any(|a| matches!(a.relation, Relation::Lt | Relation::Gt))
        };
        self.switches.iter().any(|s| strict(&s.guard))
            || self.locations.iter().any(|l| strict(&l.invariant))
    }

    pub fn validate(&self) -> ValidationReport {
        let mut problems = Vec::new();
        let mut push = |severity: Severity, message: String, element: String| {
            problems.push(Problem {
                severity,
                message,
                element,
            })
        };

        let mut seen = BTreeSet::new();
        for l in &self.locations {
            if !seen.insert(&l.name) {
                push(
                    Severity::Error,
                    "duplicate location name".into(),
                    l.name.clone(),
                );
            }
        }
        let mut seen = BTreeSet::new();
        for c in &self.clocks {
            if !seen.insert(c) {
                push(Severity::Error, "duplicate clock name".into(), c.clone());
            }
        }
        if self.initial >= self.locations.len() {
            push(Severity::Error, "no initial location".into(), self.name.clone());
        }
        let shared: Vec<&String> = self.inputs.intersection(&self.outputs).collect();
        if !shared.is_empty() {
            push(
                Severity::Error,
                "input and output alphabets overlap".into(),
                format!("{:?}", shared),
            );
        }

        let mut invariants_downward_closed = true;
        for l in &self.locations {
            if !l.invariant.downward_closed() {
                invariants_downward_closed = false;
                push(
                    Severity::Error,
                    "location invariant is not downward-closed".into(),
                    l.name.clone(),
                );
            }
            for a in &l.invariant.conjuncts {
                if a.clock >= self.clocks.len() {
                    push(
                        Severity::Error,
                        "invariant mentions undeclared clock".into(),
                        l.name.clone(),
                    );
                }
            }
        }

        for (i, s) in self.switches.iter().enumerate() {
            let element = format!("switch #{i}");
            if s.source >= self.locations.len() || s.target >= self.locations.len() {
                push(Severity::Error, "undeclared location".into(), element.clone());
            }
            match s.action.kind {
                ActionKind::Input => {
                    if !self.inputs.contains(&s.action.name) {
                        push(
                            Severity::Error,
                            format!("undeclared input `{}`", s.action.name),
                            element.clone(),
                        );
                    }
                }
                ActionKind::Output => {
                    if !self.outputs.contains(&s.action.name) {
                        push(
                            Severity::Error,
                            format!("undeclared output `{}`", s.action.name),
                            element.clone(),
                        );
                    }
                }
                ActionKind::Tau => {}
            }
            for a in &s.guard.conjuncts {
                if a.clock >= self.clocks.len() {
                    push(Severity::Error, "guard mentions undeclared clock".into(), element.clone());
                }
            }
            for &r in &s.resets {
                if r >= self.clocks.len() {
                    push(Severity::Error, "reset of undeclared clock".into(), element.clone());
                }
            }
        }

        let tau_cycle_free = self.tau_cycle_free();
        if !tau_cycle_free {
            push(
                Severity::Warning,
                "silent switches form a syntactic cycle (strong convergence not guaranteed)".into(),
                self.name.clone(),
            );
        }

        ValidationReport {
            diagonal_free: true,
            invariants_downward_closed,
            max_constant: self.max_constant(),
            tau_cycle_free,
            problems,
        }
    }

    fn tau_cycle_free(&self) -> bool {
        // Colors: 0 unvisited, 1 on stack, 2 done.
        let n = self.locations.len();
        let mut color = vec![0u8; n];
        let succs: Vec<Vec<usize>> = (0..n)
            .map(|l| {
                self.switches
                    .iter()
                    .filter(|s| s.source == l && s.action.is_tau() && s.target < n)
                    .map(|s| s.target)
                    .collect()
            })
            .collect();
        fn dfs(v: usize, color: &mut [u8], succs: &[Vec<usize>]) -> bool {
            color[v] = 1;
            for &w in &succs[v] {
                match color[w] {
                    1 => return false,
                    0 => {
                        if !dfs(w, color, succs) {
                            return false;
                        }
                    }
                    _ => {}
                }
            }
            color[v] = 2;
            true
        }
        (0..n).all(|v| color[v] != 0 || dfs(v, &mut color, &succs))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Problem {
    pub severity: Severity,
    pub message: String,
    pub element: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub diagonal_free: bool,
    pub invariants_downward_closed: bool,
    pub max_constant: u64,
    pub tau_cycle_free: bool,
    pub problems: Vec<Problem>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.problems.iter().any(|p| p.severity == Severity::Error)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ComposeError {
    #[error("shared input actions: {0:?}")]
    SharedInputs(Vec<String>),
    #[error("shared output actions: {0:?}")]
    SharedOutputs(Vec<String>),
}

/// Composability precondition: shared actions must have opposed directions.
/// Clock disjointness is established by renaming inside `compose`.
pub fn composable(a: &Tioa, b: &Tioa) -> Result<(), ComposeError> {
    let shared_inputs: Vec<String> = a.inputs.intersection(&b.inputs).cloned().collect();
    if !shared_inputs.is_empty() {
        return Err(ComposeError::SharedInputs(shared_inputs));
    }
    let shared_outputs: Vec<String> = a.outputs.intersection(&b.outputs).cloned().collect();
    if !shared_outputs.is_empty() {
        return Err(ComposeError::SharedOutputs(shared_outputs));
    }
    Ok(())
}

/// Parallel composition. Product locations are restricted to the pairs
/// syntactically reachable from the initial pair; switches whose conjoined
/// guard is unsatisfiable in all runs are kept (zone construction prunes them
/// semantically).
pub fn compose(a: &Tioa, b: &Tioa) -> Result<Tioa, ComposeError> {
    composable(a, b)?;

    // Second operand's clocks are renamed on collision only.
    let mut clocks = a.clocks.clone();
    let mut b_clock_map = Vec::with_capacity(b.clocks.len());
    for c in &b.clocks {
        let mut name = c.clone();
        let mut i = 2;
        while clocks.contains(&name) {
            name = format!("{c}_{i}");
            i += 1;
        }
        b_clock_map.push(clocks.len());
        clocks.push(name);
    }

    let sigma_a: BTreeSet<&String> = a.inputs.union(&a.outputs).collect();
    let sigma_b: BTreeSet<&String> = b.inputs.union(&b.outputs).collect();
    let shared: BTreeSet<&String> = sigma_a.intersection(&sigma_b).cloned().collect();

    let all_inputs: BTreeSet<String> = a.inputs.union(&b.inputs).cloned().collect();
    let all_outputs: BTreeSet<String> = a.outputs.union(&b.outputs).cloned().collect();
    let inputs: BTreeSet<String> = all_inputs.difference(&all_outputs).cloned().collect();
    let outputs: BTreeSet<String> = all_outputs.difference(&all_inputs).cloned().collect();

    let remap_b = |c: &ClockConstraint| ClockConstraint {
        conjuncts: c
            .conjuncts
            .iter()
            .map(|at| AtomicConstraint {
                clock: b_clock_map[at.clock],
                ..*at
            })
            .collect(),
    };
    let conjoin = |x: &ClockConstraint, y: &ClockConstraint| {
        let mut conjuncts = x.conjuncts.clone();
        conjuncts.extend(remap_b(y).conjuncts);
        ClockConstraint { conjuncts }
    };

    let pair_name = |p: usize, q: usize| format!("{}__{}", a.locations[p].name, b.locations[q].name);

    let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut locations = Vec::new();
    let mut switches = Vec::new();
    let mut worklist = std::collections::VecDeque::new();
    worklist.push_back((a.initial, b.initial));
    index.insert((a.initial, b.initial), 0);
    locations.push(Location {
        name: pair_name(a.initial, b.initial),
        invariant: conjoin(&a.locations[a.initial].invariant, &b.locations[b.initial].invariant),
    });

    while let Some((p, q)) = worklist.pop_front() {
        let src = index[&(p, q)];
        let add_target = |pp: usize,
                              qq: usize,
                              index: &mut BTreeMap<(usize, usize), usize>,
                              locations: &mut Vec<Location>,
                              worklist: &mut std::collections::VecDeque<(usize, usize)>| {
            *index.entry((pp, qq)).or_insert_with(|| {
                let id = locations.len();
                locations.push(Location {
                    name: pair_name(pp, qq),
                    invariant: conjoin(&a.locations[pp].invariant, &b.locations[qq].invariant),
                });
                worklist.push_back((pp, qq));
                id
            })
        };

        // Rule (1): non-shared switches of the first component interleave.
        for s in a.switches_from(p) {
            if s.action.is_tau() || !shared.contains(&s.action.name) {
                let tgt = add_target(s.target, q, &mut index, &mut locations, &mut worklist);
                switches.push(Switch {
                    source: src,
                    guard: s.guard.clone(),
                    action: s.action.clone(),
                    resets: s.resets.clone(),
                    target: tgt,
                });
            }
        }
        // Rule (2): non-shared switches of the second component.
        for s in b.switches_from(q) {
            if s.action.is_tau() || !shared.contains(&s.action.name) {
                let tgt = add_target(p, s.target, &mut index, &mut locations, &mut worklist);
                switches.push(Switch {
                    source: src,
                    guard: remap_b(&s.guard),
                    action: s.action.clone(),
                    resets: s.resets.iter().map(|&c| b_clock_map[c]).collect(),
                    target: tgt,
                });
            }
        }
        // Rule (3): shared actions synchronize into a silent switch.
        for sa in a.switches_from(p) {
            if sa.action.is_tau() || !shared.contains(&sa.action.name) {
                continue;
            }
            for sb in b.switches_from(q) {
                if sb.action.is_tau() || sb.action.name != sa.action.name {
                    continue;
                }
                let tgt = add_target(sa.target, sb.target, &mut index, &mut locations, &mut worklist);
                let mut resets = sa.resets.clone();
                resets.extend(sb.resets.iter().map(|&c| b_clock_map[c]));
                switches.push(Switch {
                    source: src,
                    guard: conjoin(&sa.guard, &sb.guard),
                    action: Action::tau(),
                    resets,
                    target: tgt,
                });
            }
        }
    }

    Ok(Tioa {
        name: format!("{}__{}", a.name, b.name),
        clocks,
        inputs,
        outputs,
        locations,
        initial: 0,
        switches,
    })
}
