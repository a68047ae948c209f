//! Canonical difference bound matrix zone algebra.
//!
//! Zones are convex sets of clock valuations represented by a square matrix of
//! bounds over the clocks plus the constant-zero reference clock at index 0.
//! Entry `(i, j)` encodes `x_i - x_j ≺ r`. All operations keep matrices in
//! canonical (all-pairs tightest) form; empty zones collapse to a dedicated
//! representation so equality and hashing are well defined.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::model::{ClockConstraint, Relation};

/// A difference bound: either `value` with a strict/non-strict comparison, or
/// unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bound {
    Finite { value: i64, strict: bool },
    Infinity,
}

impl Bound {
    pub const fn le(value: i64) -> Bound {
        Bound::Finite {
            value,
            strict: false,
        }
    }

    pub const fn lt(value: i64) -> Bound {
        Bound::Finite {
            value,
            strict: true,
        }
    }

    pub const ZERO: Bound = Bound::le(0);

    pub fn add(self, other: Bound) -> Bound {
        match (self, other) {
            (Bound::Infinity, _) | (_, Bound::Infinity) => Bound::Infinity,
            (
                Bound::Finite { value: a, strict: sa },
                Bound::Finite { value: b, strict: sb },
            ) => Bound::Finite {
                value: a + b,
                strict: sa || sb,
            },
        }
    }

    /// Does the difference `2*v` half-units satisfy `diff ≺ bound`?
    fn admits_scaled(self, twice_diff: i64) -> bool {
        match self {
            Bound::Infinity => true,
            Bound::Finite { value, strict } => {
                if strict {
                    twice_diff < 2 * value
                } else {
                    twice_diff <= 2 * value
                }
            }
        }
    }
}

impl Ord for Bound {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Bound::Infinity, Bound::Infinity) => Ordering::Equal,
            (Bound::Infinity, _) => Ordering::Greater,
            (_, Bound::Infinity) => Ordering::Less,
            (
                Bound::Finite { value: a, strict: sa },
                Bound::Finite { value: b, strict: sb },
            ) => a.cmp(b).then_with(|| match (sa, sb) {
                // A strict bound is tighter than a non-strict one at the same value.
                (true, false) => Ordering::Less,
                (false, true) => Ordering::Greater,
                _ => Ordering::Equal,
            }),
        }
    }
}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Infinity => write!(f, "inf"),
            Bound::Finite { value, strict } => {
                write!(f, "({}, {})", value, if *strict { "<" } else { "<=" })
            }
        }
    }
}

/// Raw bound matrix. `dim` counts the reference clock.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dbm {
    dim: usize,
    entries: Vec<Bound>,
}

impl Dbm {
    /// Matrix constraining nothing beyond clock non-negativity.
    pub fn unconstrained(dim: usize) -> Dbm {
        let mut entries = vec![Bound::Infinity; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Bound::ZERO;
            entries[i] = Bound::ZERO; // row 0: 0 - x_j <= 0
        }
        Dbm { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Bound {
        self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, b: Bound) {
        self.entries[i * self.dim + j] = b;
    }

    pub fn tighten(&mut self, i: usize, j: usize, b: Bound) {
        if b < self.get(i, j) {
            self.set(i, j, b);
        }
    }

    /// All-pairs shortest-path closure. Returns false when the matrix became
    /// inconsistent (negative cycle).
    pub fn close(&mut self) -> bool {
        let n = self.dim;
        for k in 0..n {
            for i in 0..n {
                let dik = self.get(i, k);
                if dik == Bound::Infinity {
                    continue;
                }
                for j in 0..n {
                    let via = dik.add(self.get(k, j));
                    if via < self.get(i, j) {
                        self.set(i, j, via);
                    }
                }
            }
        }
        (0..n).all(|i| self.get(i, i) >= Bound::ZERO)
    }

    /// Matrix table rendering: reference clock first, then the
    /// declared clock order; cells rendered `(r, <=)`, `(r, <)` or `inf`.
    pub fn render_table(&self, clock_names: &[String]) -> String {
        let mut labels = vec!["0_C".to_string()];
        labels.extend(clock_names.iter().cloned());
        let cells: Vec<Vec<String>> = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j).to_string()).collect())
            .collect();
        let row_width = labels.iter().map(|l| l.len()).max().unwrap_or(0);
        let col_width = |j: usize| {
            labels[j]
                .len()
                .max(cells.iter().map(|row| row[j].len()).max().unwrap_or(0))
        };
        let mut out = String::new();
        let push_line = |line: String, out: &mut String| {
            out.push_str(line.trim_end());
            out.push('\n');
        };
        let mut header = " ".repeat(row_width);
        for j in 0..self.dim {
            header.push_str("  ");
            header.push_str(&format!("{:w$}", labels[j], w = col_width(j)));
        }
        push_line(header, &mut out);
        for i in 0..self.dim {
            let mut line = format!("{:w$}", labels[i], w = row_width);
            for j in 0..self.dim {
                line.push_str("  ");
                line.push_str(&format!("{:w$}", cells[i][j], w = col_width(j)));
            }
            push_line(line, &mut out);
        }
        out
    }
}

/// A delay interval with strictness flags; `up = None` means unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Span {
    pub lo: u64,
    pub lo_strict: bool,
    pub up: Option<u64>,
    pub up_strict: bool,
}

impl Span {
    pub fn closed(lo: u64, up: u64) -> Span {
        Span {
            lo,
            lo_strict: false,
            up: Some(up),
            up_strict: false,
        }
    }

    pub fn from(lo: u64) -> Span {
        Span {
            lo,
            lo_strict: false,
            up: None,
            up_strict: false,
        }
    }

    pub fn is_void(&self) -> bool {
        match self.up {
            None => false,
            Some(u) => self.lo > u || (self.lo == u && (self.lo_strict || self.up_strict)),
        }
    }

    /// Containment of `self` in `other`, strictness-aware.
    pub fn leq(&self, other: &Span) -> bool {
        let lo_ok = match self.lo.cmp(&other.lo) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => !(other.lo_strict && !self.lo_strict),
        };
        let up_ok = match (self.up, other.up) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(b)) => match a.cmp(&b) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => !(other.up_strict && !self.up_strict),
            },
        };
        lo_ok && up_ok
    }

    /// Membership of a value given in half-units.
    pub fn contains_halves(&self, twice: i64) -> bool {
        let lo2 = 2 * self.lo as i64;
        let lo_ok = if self.lo_strict { twice > lo2 } else { twice >= lo2 };
        let up_ok = match self.up {
            None => true,
            Some(u) => {
                let u2 = 2 * u as i64;
                if self.up_strict {
                    twice < u2
                } else {
                    twice <= u2
                }
            }
        };
        lo_ok && up_ok
    }

    pub fn contains_int(&self, d: u64) -> bool {
        self.contains_halves(2 * d as i64)
    }

    /// True when the union of the two spans is a single interval.
    pub fn overlaps_or_touches(&self, other: &Span) -> bool {
        let (a, b) = if (self.lo, self.lo_strict) <= (other.lo, other.lo_strict) {
            (self, other)
        } else {
            (other, self)
        };
        match a.up {
            None => true,
            Some(u) => match b.lo.cmp(&u) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => !(a.up_strict && b.lo_strict),
            },
        }
    }

    /// Coalesce overlapping or touching spans into maximal disjoint intervals.
    pub fn merge_list(mut spans: Vec<Span>) -> Vec<Span> {
        spans.retain(|s| !s.is_void());
        spans.sort();
        let mut out: Vec<Span> = Vec::new();
        for s in spans {
            if let Some(last) = out.last_mut() {
                if last.overlaps_or_touches(&s) {
                    *last = last.hull(&s);
                    continue;
                }
            }
            out.push(s);
        }
        out
    }

    /// Smallest interval containing both; only meaningful when they overlap or touch.
    pub fn hull(&self, other: &Span) -> Span {
        let (lo, lo_strict) = {
            let a = (self.lo, self.lo_strict);
            let b = (other.lo, other.lo_strict);
            if a <= b {
                a
            } else {
                b
            }
        };
        let (up, up_strict) = match (self.up, other.up) {
            (None, _) | (_, None) => (None, false),
            (Some(a), Some(b)) => {
                if (a, !self.up_strict) >= (b, !other.up_strict) {
                    (Some(a), self.up_strict)
                } else {
                    (Some(b), other.up_strict)
                }
            }
        };
        Span {
            lo,
            lo_strict,
            up,
            up_strict,
        }
    }
}

impl Ord for Span {
    fn cmp(&self, other: &Self) -> Ordering {
        let key = |s: &Span| {
            (
                s.lo,
                s.lo_strict,
                s.up.is_none(),
                s.up.unwrap_or(0),
                s.up_strict,
            )
        };
        key(self).cmp(&key(other))
    }
}

impl PartialOrd for Span {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo_strict { '(' } else { '[' };
        match self.up {
            None => write!(f, "{}{},inf)", open, self.lo),
            Some(u) => write!(
                f,
                "{}{},{}{}",
                open,
                self.lo,
                u,
                if self.up_strict { ')' } else { ']' }
            ),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ZoneError {
    #[error("unknown clock `{0}`")]
    UnknownClock(String),
    #[error("operation on empty zone")]
    EmptyZone,
    #[error("zones over different clock sets")]
    ClockMismatch,
    #[error("zone has no clocks")]
    NoClocks,
}

pub type ClockNames = Arc<Vec<String>>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Repr {
    Empty,
    Canonical(Dbm),
}

/// A canonical zone over a fixed, shared clock ordering.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Zone {
    clocks: ClockNames,
    repr: Repr,
}

impl Zone {
    fn dim(clocks: &ClockNames) -> usize {
        clocks.len() + 1
    }

    /// The zone `true` (only clock non-negativity).
    pub fn universal(clocks: ClockNames) -> Zone {
        let dbm = Dbm::unconstrained(Self::dim(&clocks));
        Zone {
            clocks,
            repr: Repr::Canonical(dbm),
        }
    }

    /// All clocks pinned to zero.
    pub fn origin(clocks: ClockNames) -> Zone {
        let dim = Self::dim(&clocks);
        let mut dbm = Dbm::unconstrained(dim);
        for i in 1..dim {
            dbm.set(i, 0, Bound::ZERO);
        }
        debug_assert!(dbm.clone().close());
        let mut d = dbm;
        d.close();
        Zone {
            clocks,
            repr: Repr::Canonical(d),
        }
    }

    pub fn empty(clocks: ClockNames) -> Zone {
        Zone {
            clocks,
            repr: Repr::Empty,
        }
    }

    /// Pre-closure matrix of a constraint conjunction, exactly as written:
    /// non-negativity rows plus one tightened entry per atom.
    pub fn constraint_matrix(
        clocks: &ClockNames,
        c: &ClockConstraint,
    ) -> Result<Dbm, ZoneError> {
        let dim = clocks.len() + 1;
        let mut dbm = Dbm::unconstrained(dim);
        for atom in &c.conjuncts {
            if atom.clock >= clocks.len() {
                return Err(ZoneError::UnknownClock(format!("#{}", atom.clock)));
            }
            let i = atom.clock + 1;
            let v = atom.bound as i64;
            match atom.relation {
                Relation::Lt => dbm.tighten(i, 0, Bound::lt(v)),
                Relation::Le => dbm.tighten(i, 0, Bound::le(v)),
                Relation::Eq => {
                    dbm.tighten(i, 0, Bound::le(v));
                    dbm.tighten(0, i, Bound::le(-v));
                }
                Relation::Ge => dbm.tighten(0, i, Bound::le(-v)),
                Relation::Gt => dbm.tighten(0, i, Bound::lt(-v)),
            }
        }
        Ok(dbm)
    }

    /// Canonical zone of all valuations satisfying `c` (plus non-negativity).
    pub fn from_constraint(clocks: ClockNames, c: &ClockConstraint) -> Result<Zone, ZoneError> {
        let mut dbm = Zone::constraint_matrix(&clocks, c)?;
        if dbm.close() {
            Ok(Zone {
                clocks,
                repr: Repr::Canonical(dbm),
            })
        } else {
            Ok(Zone::empty(clocks))
        }
    }

    pub fn clock_names(&self) -> &ClockNames {
        &self.clocks
    }

    pub fn clock_count(&self) -> usize {
        self.clocks.len()
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.repr, Repr::Empty)
    }

    pub fn dbm(&self) -> Option<&Dbm> {
        match &self.repr {
            Repr::Empty => None,
            Repr::Canonical(d) => Some(d),
        }
    }

    fn from_dbm(clocks: ClockNames, mut dbm: Dbm) -> Zone {
        if dbm.close() {
            Zone {
                clocks,
                repr: Repr::Canonical(dbm),
            }
        } else {
            Zone::empty(clocks)
        }
    }

    /// Remove the upper bounds on individual clocks (time elapse).
    pub fn up(&self) -> Result<Zone, ZoneError> {
        let dbm = self.dbm().ok_or(ZoneError::EmptyZone)?;
        let mut d = dbm.clone();
        for i in 1..d.dim() {
            d.set(i, 0, Bound::Infinity);
        }
        Ok(Zone::from_dbm(self.clocks.clone(), d))
    }

    /// Pin every clock in `resets` (model indices) to zero.
    pub fn reset(&self, resets: &[usize]) -> Result<Zone, ZoneError> {
        let dbm = self.dbm().ok_or(ZoneError::EmptyZone)?;
        let mut d = dbm.clone();
        for &c in resets {
            let i = c + 1;
            for j in 0..d.dim() {
                d.set(i, j, d.get(0, j));
                d.set(j, i, d.get(j, 0));
            }
            d.set(i, i, Bound::ZERO);
            d.set(i, 0, Bound::ZERO);
            d.set(0, i, Bound::ZERO);
        }
        Ok(Zone::from_dbm(self.clocks.clone(), d))
    }

    pub fn intersect(&self, other: &Zone) -> Result<Zone, ZoneError> {
        if self.clocks != other.clocks {
            return Err(ZoneError::ClockMismatch);
        }
        match (&self.repr, &other.repr) {
            (Repr::Empty, _) | (_, Repr::Empty) => Ok(Zone::empty(self.clocks.clone())),
            (Repr::Canonical(a), Repr::Canonical(b)) => {
                let mut d = a.clone();
                for i in 0..d.dim() {
                    for j in 0..d.dim() {
                        d.tighten(i, j, b.get(i, j));
                    }
                }
                Ok(Zone::from_dbm(self.clocks.clone(), d))
            }
        }
    }

    /// Conjoin a constraint over this zone's clocks.
    pub fn and_constraint(&self, c: &ClockConstraint) -> Result<Zone, ZoneError> {
        match &self.repr {
            Repr::Empty => Ok(self.clone()),
            Repr::Canonical(dbm) => {
                let atoms = Zone::constraint_matrix(&self.clocks, c)?;
                let mut d = dbm.clone();
                for i in 0..d.dim() {
                    for j in 0..d.dim() {
                        d.tighten(i, j, atoms.get(i, j));
                    }
                }
                Ok(Zone::from_dbm(self.clocks.clone(), d))
            }
        }
    }

    /// Tighten a single matrix entry (`x_i - x_j ≺ b`, matrix indices) and
    /// re-canonicalize. Intended for constructing expected zones in tests.
    pub fn tightened(&self, i: usize, j: usize, b: Bound) -> Zone {
        match &self.repr {
            Repr::Empty => self.clone(),
            Repr::Canonical(dbm) => {
                let mut d = dbm.clone();
                d.tighten(i, j, b);
                Zone::from_dbm(self.clocks.clone(), d)
            }
        }
    }

    /// Does `self` contain every valuation of `other`?
    pub fn includes(&self, other: &Zone) -> Result<bool, ZoneError> {
        if self.clocks != other.clocks {
            return Err(ZoneError::ClockMismatch);
        }
        match (&self.repr, &other.repr) {
            (_, Repr::Empty) => Ok(true),
            (Repr::Empty, _) => Ok(false),
            (Repr::Canonical(a), Repr::Canonical(b)) => Ok((0..a.dim())
                .all(|i| (0..a.dim()).all(|j| b.get(i, j) <= a.get(i, j)))),
        }
    }

    /// Bound all entries by the clock ceiling `k`: values above `k` become
    /// unbounded, lower bounds below `-k` become strictly-below `-k`.
    pub fn k_normalize(&self, k: u64) -> Zone {
        let dbm = match self.dbm() {
            None => return self.clone(),
            Some(d) => d,
        };
        let kk = k as i64;
        let mut d = dbm.clone();
        for _ in 0..d.dim() * d.dim() + 1 {
            let mut changed = false;
            for i in 0..d.dim() {
                for j in 0..d.dim() {
                    if i == j {
                        continue;
                    }
                    let b = d.get(i, j);
                    if b > Bound::le(kk) && b != Bound::Infinity {
                        d.set(i, j, Bound::Infinity);
                        changed = true;
                    } else if b < Bound::lt(-kk) {
                        d.set(i, j, Bound::lt(-kk));
                        changed = true;
                    }
                }
            }
            if !d.close() {
                return Zone::empty(self.clocks.clone());
            }
            if !changed {
                break;
            }
        }
        Zone {
            clocks: self.clocks.clone(),
            repr: Repr::Canonical(d),
        }
    }

    /// Tightest interval of values clock `c` (model index) takes across the zone.
    pub fn span_of_clock(&self, c: usize) -> Result<Span, ZoneError> {
        let dbm = self.dbm().ok_or(ZoneError::EmptyZone)?;
        let i = c + 1;
        let (lo, lo_strict) = match dbm.get(0, i) {
            Bound::Infinity => (0, false),
            Bound::Finite { value, strict } => ((-value) as u64, strict),
        };
        let (up, up_strict) = match dbm.get(i, 0) {
            Bound::Infinity => (None, false),
            Bound::Finite { value, strict } => (Some(value as u64), strict),
        };
        Ok(Span {
            lo,
            lo_strict,
            up,
            up_strict,
        })
    }

    /// Whole-zone span: greatest per-clock lower bound paired with the
    /// least per-clock upper bound. `None` when that interval is empty.
    pub fn span_of_zone(&self) -> Result<Option<Span>, ZoneError> {
        if self.clocks.is_empty() {
            return Err(ZoneError::NoClocks);
        }
        let mut spans = Vec::with_capacity(self.clocks.len());
        for c in 0..self.clocks.len() {
            spans.push(self.span_of_clock(c)?);
        }
        let (mut lo, mut lo_strict) = (spans[0].lo, spans[0].lo_strict);
        let (mut up, mut up_strict) = (spans[0].up, spans[0].up_strict);
        for s in &spans[1..] {
            if (s.lo, s.lo_strict) > (lo, lo_strict) {
                lo = s.lo;
                lo_strict = s.lo_strict;
            }
            match (up, s.up) {
                (None, Some(_)) => {
                    up = s.up;
                    up_strict = s.up_strict;
                }
                (Some(u), Some(v)) if (v, !s.up_strict) < (u, !up_strict) => {
                    up = s.up;
                    up_strict = s.up_strict;
                }
                _ => {}
            }
        }
        let span = Span {
            lo,
            lo_strict,
            up,
            up_strict,
        };
        Ok(if span.is_void() { None } else { Some(span) })
    }

    /// Membership of a valuation given in half-units (index i = clock i).
    pub fn member_halves(&self, halves: &[i64]) -> Result<bool, ZoneError> {
        if halves.len() != self.clocks.len() {
            return Err(ZoneError::ClockMismatch);
        }
        let dbm = match self.dbm() {
            None => return Ok(false),
            Some(d) => d,
        };
        let val = |i: usize| if i == 0 { 0 } else { halves[i - 1] };
        for i in 0..dbm.dim() {
            for j in 0..dbm.dim() {
                if !dbm.get(i, j).admits_scaled(val(i) - val(j)) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Append a fresh clock pinned to zero; returns the extended zone.
    pub fn extend_with_clock(&self, name: &str) -> Zone {
        let mut names = (*self.clocks).clone();
        names.push(name.to_string());
        let clocks = Arc::new(names);
        match &self.repr {
            Repr::Empty => Zone::empty(clocks),
            Repr::Canonical(dbm) => {
                let old = dbm.dim();
                let mut d = Dbm::unconstrained(old + 1);
                for i in 0..old {
                    for j in 0..old {
                        d.set(i, j, dbm.get(i, j));
                    }
                }
                for j in 0..old {
                    d.set(old, j, dbm.get(0, j));
                    d.set(j, old, dbm.get(j, 0));
                }
                d.set(old, old, Bound::ZERO);
                Zone::from_dbm(clocks, d)
            }
        }
    }

    /// Drop the last clock (projection; exact on canonical matrices).
    pub fn project_last(&self) -> Zone {
        let mut names = (*self.clocks).clone();
        names.pop();
        let clocks = Arc::new(names);
        match &self.repr {
            Repr::Empty => Zone::empty(clocks),
            Repr::Canonical(dbm) => {
                let n = dbm.dim() - 1;
                let mut d = Dbm::unconstrained(n);
                for i in 0..n {
                    for j in 0..n {
                        d.set(i, j, dbm.get(i, j));
                    }
                }
                Zone::from_dbm(clocks, d)
            }
        }
    }

    /// Minimal constraint rendering, e.g. `x<=20 & x==y`; `true` / `false` for
    /// the trivial zones.
    pub fn render_constraints(&self) -> String {
        let dbm = match &self.repr {
            Repr::Empty => return "false".to_string(),
            Repr::Canonical(d) => d,
        };
        let n = dbm.dim();
        let name = |i: usize| -> &str {
            if i == 0 {
                "0"
            } else {
                &self.clocks[i - 1]
            }
        };
        // Equality classes along zero-weight cycles.
        let mut rep: Vec<usize> = (0..n).collect();
        for i in 0..n {
            for j in 0..i {
                if rep[j] != j {
                    continue;
                }
                if let (
                    Bound::Finite { strict: false, .. },
                    Bound::Finite { strict: false, .. },
                ) = (dbm.get(i, j), dbm.get(j, i))
                {
                    if dbm.get(i, j).add(dbm.get(j, i)) == Bound::ZERO {
                        rep[i] = j;
                        break;
                    }
                }
            }
        }
        let reps: Vec<usize> = (0..n).filter(|&i| rep[i] == i).collect();
        // Collapse to representatives and drop derivable entries.
        let m = reps.len();
        let mut d = Dbm::unconstrained(m);
        for (a, &i) in reps.iter().enumerate() {
            for (b, &j) in reps.iter().enumerate() {
                d.set(a, b, dbm.get(i, j));
            }
        }
        let mut kept = vec![true; m * m];
        for a in 0..m {
            for b in 0..m {
                if a == b || d.get(a, b) == Bound::Infinity {
                    kept[a * m + b] = false;
                    continue;
                }
                let mut trial = Dbm::unconstrained(m);
                for x in 0..m {
                    for y in 0..m {
                        if x != y && kept[x * m + y] && !(x == a && y == b) {
                            trial.set(x, y, d.get(x, y));
                        }
                    }
                }
                trial.close();
                if trial.get(a, b) <= d.get(a, b) {
                    kept[a * m + b] = false;
                }
            }
        }
        let mut atoms: Vec<String> = Vec::new();
        // Per-clock bounds on representatives, in clock order.
        for (a, &i) in reps.iter().enumerate() {
            if i == 0 {
                continue;
            }
            if kept[a] {
                if let Bound::Finite { value, strict } = d.get(0, a) {
                    let lo = -value;
                    if lo > 0 || (lo == 0 && strict) {
                        atoms.push(format!("{}{}{}", name(i), if strict { ">" } else { ">=" }, lo));
                    }
                }
            }
            if kept[a * m] {
                if let Bound::Finite { value, strict } = d.get(a, 0) {
                    atoms.push(format!(
                        "{}{}{}",
                        name(i),
                        if strict { "<" } else { "<=" },
                        value
                    ));
                }
            }
        }
        // Equalities.
        for i in 0..n {
            if rep[i] == i {
                continue;
            }
            let r = rep[i];
            if let Bound::Finite { value, .. } = dbm.get(i, r) {
                if r == 0 {
                    atoms.push(format!("{}=={}", name(i), value));
                } else if value == 0 {
                    atoms.push(format!("{}=={}", name(r), name(i)));
                } else if value > 0 {
                    atoms.push(format!("{}-{}=={}", name(i), name(r), value));
                } else {
                    atoms.push(format!("{}-{}=={}", name(r), name(i), -value));
                }
            }
        }
        // Remaining difference bounds between representatives.
        for a in 0..m {
            for b in 0..m {
                if a == 0 || b == 0 || !kept[a * m + b] {
                    continue;
                }
                if let Bound::Finite { value, strict } = d.get(a, b) {
                    atoms.push(format!(
                        "{}-{}{}{}",
                        name(reps[a]),
                        name(reps[b]),
                        if strict { "<" } else { "<=" },
                        value
                    ));
                }
            }
        }
        if atoms.is_empty() {
            "true".to_string()
        } else {
            atoms.join(" & ")
        }
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_constraints())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AtomicConstraint;

    fn names(cs: &[&str]) -> ClockNames {
        Arc::new(cs.iter().map(|s| s.to_string()).collect())
    }

    fn atom(clock: usize, relation: Relation, bound: u64) -> AtomicConstraint {
        AtomicConstraint {
            clock,
            relation,
            bound,
        }
    }

    fn cc(atoms: Vec<AtomicConstraint>) -> ClockConstraint {
        ClockConstraint { conjuncts: atoms }
    }

    /// Reference zone: 1<=x<=2 and y<=2 over clocks {x, y}.
    fn reference_zone() -> Zone {
        let c = cc(vec![
            atom(0, Relation::Ge, 1),
            atom(0, Relation::Le, 2),
            atom(1, Relation::Le, 2),
        ]);
        Zone::from_constraint(names(&["x", "y"]), &c).unwrap()
    }

    /// Half-unit grid: all points of [0, hi]^2 at step 1/2 (values doubled).
    fn grid(hi: i64) -> Vec<(i64, i64)> {
        let mut pts = Vec::new();
        for x in 0..=(2 * hi) {
            for y in 0..=(2 * hi) {
                pts.push((x, y));
            }
        }
        pts
    }

    fn points_of(z: &Zone, hi: i64) -> Vec<(i64, i64)> {
        grid(hi)
            .into_iter()
            .filter(|&(x, y)| z.member_halves(&[x, y]).unwrap())
            .collect()
    }

    #[test]
    fn bound_ordering_and_addition() {
        assert!(Bound::lt(2) < Bound::le(2));
        assert!(Bound::le(2) < Bound::lt(3));
        assert!(Bound::le(3) < Bound::Infinity);
        assert_eq!(Bound::le(1).add(Bound::lt(2)), Bound::lt(3));
        assert_eq!(Bound::Infinity.add(Bound::le(-5)), Bound::Infinity);
    }

    #[test]
    fn reference_matrix_pre_closure() {
        let c = cc(vec![
            atom(0, Relation::Ge, 1),
            atom(0, Relation::Le, 2),
            atom(1, Relation::Le, 2),
        ]);
        let dbm = Zone::constraint_matrix(&names(&["x", "y"]), &c).unwrap();
        assert_eq!(dbm.get(0, 0), Bound::le(0));
        assert_eq!(dbm.get(0, 1), Bound::le(-1));
        assert_eq!(dbm.get(0, 2), Bound::le(0));
        assert_eq!(dbm.get(1, 0), Bound::le(2));
        assert_eq!(dbm.get(1, 1), Bound::le(0));
        assert_eq!(dbm.get(1, 2), Bound::Infinity);
        assert_eq!(dbm.get(2, 0), Bound::le(2));
        assert_eq!(dbm.get(2, 1), Bound::Infinity);
        assert_eq!(dbm.get(2, 2), Bound::le(0));
    }

    #[test]
    fn closure_tightens_reference_zone() {
        // Expected differences frozen from the half-unit grid oracle:
        // max(x-y) = 2 (x=2, y=0), max(y-x) = 1 (y=2, x=1).
        let pts = points_of(&reference_zone(), 4);
        let max_xy = pts.iter().map(|&(x, y)| x - y).max().unwrap();
        let max_yx = pts.iter().map(|&(x, y)| y - x).max().unwrap();
        assert_eq!(max_xy, 4); // half-units: 2
        assert_eq!(max_yx, 2); // half-units: 1
        let z = reference_zone();
        let d = z.dbm().unwrap();
        assert_eq!(d.get(1, 2), Bound::le(2));
        assert_eq!(d.get(2, 1), Bound::le(1));
    }

    #[test]
    fn canonicalize_idempotent() {
        let z = reference_zone();
        let again = Zone::from_dbm(z.clock_names().clone(), z.dbm().unwrap().clone());
        assert_eq!(z, again);
    }

    #[test]
    fn contradiction_is_empty() {
        let c = cc(vec![atom(0, Relation::Le, 2), atom(0, Relation::Ge, 3)]);
        let z = Zone::from_constraint(names(&["x"]), &c).unwrap();
        assert!(z.is_empty());
        let neg = cc(vec![atom(0, Relation::Le, 0), atom(0, Relation::Gt, 0)]);
        assert!(Zone::from_constraint(names(&["x"]), &neg).unwrap().is_empty());
    }

    #[test]
    fn unconstrained_clock_entries() {
        let z = Zone::from_constraint(names(&["x"]), &cc(vec![])).unwrap();
        let d = z.dbm().unwrap();
        assert_eq!(d.get(0, 1), Bound::le(0));
        assert_eq!(d.get(1, 0), Bound::Infinity);
    }

    #[test]
    fn up_matches_grid_oracle() {
        // Frozen from the oracle: delaying the reference zone gives
        // x>=1, y>=0, -1 <= x-y <= 2.
        let z = reference_zone().up().unwrap();
        let base = points_of(&reference_zone(), 4);
        for (x, y) in grid(10) {
            let reachable = base.iter().any(|&(bx, by)| {
                x >= bx && y >= by && (x - bx) == (y - by)
            });
            // The grid sees only half-unit delays; reachable implies member.
            if reachable {
                assert!(z.member_halves(&[x, y]).unwrap(), "({x},{y}) missing");
            }
        }
        let d = z.dbm().unwrap();
        assert_eq!(d.get(0, 1), Bound::le(-1)); // x >= 1
        assert_eq!(d.get(0, 2), Bound::le(0)); // y >= 0
        assert_eq!(d.get(1, 2), Bound::le(2)); // x - y <= 2
        assert_eq!(d.get(2, 1), Bound::le(1)); // y - x <= 1
        assert_eq!(d.get(1, 0), Bound::Infinity);
        // Idempotence.
        assert_eq!(z.up().unwrap(), z);
    }

    #[test]
    fn up_keeps_synchronized_clocks_equal() {
        let z = Zone::origin(names(&["x", "y"])).up().unwrap();
        let d = z.dbm().unwrap();
        assert_eq!(d.get(1, 2), Bound::le(0));
        assert_eq!(d.get(2, 1), Bound::le(0));
    }

    #[test]
    fn reset_matches_grid_oracle() {
        // Frozen from the oracle: resetting y in the reference zone gives
        // 1<=x<=2, y=0 (so 1 <= x-y <= 2).
        let z = reference_zone().reset(&[1]).unwrap();
        let base = points_of(&reference_zone(), 4);
        let expect: std::collections::BTreeSet<(i64, i64)> =
            base.iter().map(|&(x, _)| (x, 0)).collect();
        let got: std::collections::BTreeSet<(i64, i64)> =
            points_of(&z, 4).into_iter().collect();
        assert_eq!(expect, got);
        let d = z.dbm().unwrap();
        assert_eq!(d.get(2, 0), Bound::le(0));
        assert_eq!(d.get(0, 2), Bound::le(0));
        assert_eq!(d.get(1, 2), Bound::le(2));
        assert_eq!(d.get(2, 1), Bound::le(-1));
    }

    #[test]
    fn reset_of_nothing_and_everything() {
        let z = reference_zone();
        assert_eq!(z.reset(&[]).unwrap(), z);
        let all = z.reset(&[0, 1]).unwrap();
        assert_eq!(all, Zone::origin(z.clock_names().clone()));
    }

    #[test]
    fn intersect_basics() {
        let xs = names(&["x"]);
        let le5 = Zone::from_constraint(xs.clone(), &cc(vec![atom(0, Relation::Le, 5)])).unwrap();
        let ge3 = Zone::from_constraint(xs.clone(), &cc(vec![atom(0, Relation::Ge, 3)])).unwrap();
        let both = le5.intersect(&ge3).unwrap();
        let expect = Zone::from_constraint(
            xs.clone(),
            &cc(vec![atom(0, Relation::Le, 5), atom(0, Relation::Ge, 3)]),
        )
        .unwrap();
        assert_eq!(both, expect);
        let top = Zone::universal(xs);
        assert_eq!(le5.intersect(&top).unwrap(), le5);
    }

    #[test]
    fn includes_basics() {
        let xs = names(&["x"]);
        let le20 = Zone::from_constraint(xs.clone(), &cc(vec![atom(0, Relation::Le, 20)])).unwrap();
        let le10 = Zone::from_constraint(xs, &cc(vec![atom(0, Relation::Le, 10)])).unwrap();
        assert!(le20.includes(&le10).unwrap());
        assert!(!le10.includes(&le20).unwrap());
        assert!(le10.includes(&le10).unwrap());
    }

    #[test]
    fn k_normalize_raises_and_floors() {
        let xs = names(&["x"]);
        let z = Zone::from_constraint(xs, &cc(vec![atom(0, Relation::Gt, 25)])).unwrap();
        let n = z.k_normalize(20);
        let d = n.dbm().unwrap();
        assert_eq!(d.get(0, 1), Bound::lt(-20)); // x > 20
        assert_eq!(d.get(1, 0), Bound::Infinity);
        // Unchanged when all bounds are within k; idempotent.
        let small = reference_zone();
        assert_eq!(small.k_normalize(20), small);
        assert_eq!(n.k_normalize(20), n);
    }

    #[test]
    fn k_normalize_preserves_membership_below_k() {
        // Random-ish zones over two clocks, constants <= 6, grid step 1/2.
        let xs = names(&["x", "y"]);
        let rels = [Relation::Lt, Relation::Le, Relation::Eq, Relation::Ge, Relation::Gt];
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            seed
        };
        for k in [3u64, 4, 6] {
            for _ in 0..60 {
                let mut atoms = Vec::new();
                for _ in 0..(next() % 4) {
                    atoms.push(atom(
                        (next() % 2) as usize,
                        rels[(next() % 5) as usize],
                        next() % 7,
                    ));
                }
                // Ceiling must dominate the constants used.
                let kk = k.max(atoms.iter().map(|a| a.bound).max().unwrap_or(0));
                let z = Zone::from_constraint(xs.clone(), &cc(atoms)).unwrap();
                let zn = z.k_normalize(kk);
                for x in 0..=(2 * kk as i64) {
                    for y in 0..=(2 * kk as i64) {
                        assert_eq!(
                            z.member_halves(&[x, y]).unwrap(),
                            zn.member_halves(&[x, y]).unwrap(),
                            "membership changed at ({x},{y})/2 with k={kk}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn spans_of_reference_zone() {
        let z = reference_zone();
        assert_eq!(z.span_of_clock(0).unwrap(), Span::closed(1, 2));
        assert_eq!(z.span_of_clock(1).unwrap(), Span::closed(0, 2));
        assert_eq!(z.span_of_zone().unwrap(), Some(Span::closed(1, 2)));
        let origin = Zone::origin(z.clock_names().clone());
        assert_eq!(origin.span_of_clock(0).unwrap(), Span::closed(0, 0));
        assert_eq!(origin.span_of_zone().unwrap(), Some(Span::closed(0, 0)));
    }

    #[test]
    fn span_of_zone_can_be_void() {
        let z = Zone::from_constraint(
            names(&["x", "y"]),
            &cc(vec![atom(0, Relation::Ge, 5), atom(1, Relation::Le, 2)]),
        )
        .unwrap();
        assert!(!z.is_empty());
        assert_eq!(z.span_of_zone().unwrap(), None);
    }

    #[test]
    fn member_checks() {
        let z = reference_zone();
        assert!(z.member_halves(&[3, 4]).unwrap()); // x=1.5, y=2
        assert!(!z.member_halves(&[0, 0]).unwrap()); // x >= 1 violated
        let top = Zone::universal(names(&["x"]));
        assert!(top.member_halves(&[0]).unwrap());
    }

    #[test]
    fn single_point_boundary_respects_strictness() {
        let xs = names(&["x"]);
        let z = Zone::from_constraint(xs, &cc(vec![atom(0, Relation::Lt, 2)])).unwrap();
        assert!(z.member_halves(&[3]).unwrap()); // 1.5 < 2
        assert!(!z.member_halves(&[4]).unwrap()); // 2 < 2 fails
    }

    #[test]
    fn extend_and_project_roundtrip() {
        let z = reference_zone();
        let ext = z.extend_with_clock("t");
        assert_eq!(ext.clock_count(), 3);
        assert_eq!(ext.span_of_clock(2).unwrap(), Span::closed(0, 0));
        assert_eq!(ext.project_last(), z);
    }

    #[test]
    fn constraint_rendering() {
        let xs = names(&["x", "y"]);
        let idle = Zone::origin(xs.clone())
            .up()
            .unwrap()
            .and_constraint(&cc(vec![atom(0, Relation::Le, 20)]))
            .unwrap();
        assert_eq!(idle.render_constraints(), "x<=20 & x==y");
        assert_eq!(Zone::universal(xs.clone()).render_constraints(), "true");
        assert_eq!(Zone::empty(xs.clone()).render_constraints(), "false");
        assert_eq!(Zone::origin(xs).render_constraints(), "x==0 & y==0");
    }

    #[test]
    fn span_ordering_and_rendering() {
        assert!(Span::closed(1, 2).leq(&Span::closed(0, 3)));
        assert!(!Span::closed(0, 3).leq(&Span::closed(1, 2)));
        // Closed upper at 20 does not fit into strict upper at 20.
        let closed = Span::closed(0, 20);
        let strict = Span {
            up_strict: true,
            ..Span::closed(0, 20)
        };
        assert!(!closed.leq(&strict));
        assert!(strict.leq(&closed));
        assert_eq!(Span::closed(0, 20).to_string(), "[0,20]");
        assert_eq!(Span::from(20).to_string(), "[20,inf)");
        assert_eq!(
            Span {
                lo_strict: true,
                ..Span::from(20)
            }
            .to_string(),
            "(20,inf)"
        );
        assert_eq!(strict.to_string(), "[0,20)");
    }

    #[test]
    fn span_leq_is_partial_order_on_small_universe() {
        let mut all = Vec::new();
        for lo in 0..=5u64 {
            for ls in [false, true] {
                for up in 0..=5u64 {
                    for us in [false, true] {
                        let s = Span {
                            lo,
                            lo_strict: ls,
                            up: Some(up),
                            up_strict: us,
                        };
                        if !s.is_void() {
                            all.push(s);
                        }
                    }
                }
                all.push(Span {
                    lo,
                    lo_strict: ls,
                    up: None,
                    up_strict: false,
                });
            }
        }
        for a in &all {
            assert!(a.leq(a));
            for b in &all {
                if a.leq(b) && b.leq(a) {
                    assert_eq!(a, b);
                }
                for c in &all {
                    if a.leq(b) && b.leq(c) {
                        assert!(a.leq(c));
                    }
                }
            }
        }
    }

    #[test]
    fn render_table_layout() {
        let c = cc(vec![
            atom(0, Relation::Ge, 1),
            atom(0, Relation::Le, 2),
            atom(1, Relation::Le, 2),
        ]);
        let xs = names(&["x", "y"]);
        let dbm = Zone::constraint_matrix(&xs, &c).unwrap();
        let table = dbm.render_table(&xs);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0_C"));
        assert!(lines[1].contains("(0, <=)"));
        assert!(lines[1].contains("(-1, <=)"));
        assert!(lines[2].contains("(2, <=)"));
        assert!(lines[2].contains("inf"));
    }
}
