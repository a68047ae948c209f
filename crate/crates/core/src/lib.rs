//! Live timed input/output conformance checking for timed I/O automata.
//!
//! The library builds finite, k-normalized input/output-labeled zone graphs
//! over difference bound matrices, enumerates span traces with safe/enforced
//! quiescence, checks live timed conformance symbolically, and cross-validates
//! everything against a discrete-time brute-force reference semantics.

pub mod conformance;
pub mod dbm;
pub mod fixtures;
pub mod format;
pub mod model;
pub mod oracle;
pub mod traces;
pub mod zonegraph;

pub use conformance::{
    after, check, explain, out_set, CheckConfig, CheckError, CheckStats, OutEntry, OutLabel,
    OutSet, RelationMode, Verdict, Witness,
};
pub use dbm::{Bound, Dbm, Span, Zone, ZoneError};
pub use format::{parse_model, render, FormatError};
pub use model::{
    composable, compose, Action, ActionKind, AtomicConstraint, ClockConstraint, ComposeError,
    Location, Problem, Relation, Severity, Switch, Tioa, ValidationReport,
};
pub use oracle::{
    build_pair, build_tiolts, build_tiolts_with_cap, check_ltioco_s, check_prop1,
    check_tioco_big_delta, check_tioco_delta, def9_product, out_big_delta, out_s, traces_equal,
    tstraces_l, weak_time_determ_holds, ConcreteState, OracleConfig, OracleError, OracleOut,
    OracleVerdict, Prop1Report, StepSystem, TimedTrace, Tiolts, TraceLabel,
};
pub use traces::{
    enumerate_span_traces, merge_spans, span_leq, step_spans, SpanStep, SpanTrace, StepLabel,
    TraceError,
};
pub use zonegraph::{
    build_iolzg, check_independent_progress, check_input_enabled, classify_quiescence,
    delay_closure, export_dot, reachable_within, DeltaFlavor, InputEnabledReport, Iolzg,
    ProgressReport, QuiescenceClass, SymbolicState, ZgEdge, ZgError, ZgLabel,
};
