//! The one-counter automaton data model.
//!
//! One type serves four kinds of machine: `general` OCA (with zero tests),
//! `simple` OCA (no zero tests, unique final state, acceptance from counter 0
//! to counter 0), `extended` OCA (transitions may add any integer) and `nfa`
//! (every transition is a zero test, so the counter is pinned to 0).

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use super::alphabet::{Alphabet, Letter, ParikhVector};
use crate::Error;

/// Interned state identifier.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(Arc<str>);

impl StateId {
    pub fn new(name: impl AsRef<str>) -> Self {
        StateId(Arc::from(name.as_ref()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "State({})", self.0)
    }
}

impl From<&str> for StateId {
    fn from(s: &str) -> Self {
        StateId::new(s)
    }
}

/// Counter operation on a transition.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum CounterOp {
    /// +1
    Inc,
    /// −1
    Dec,
    /// Leave the counter unchanged.
    Noop,
    /// Fires only when the counter is 0 and leaves it 0.
    ZeroTest,
    /// Add an arbitrary integer; only allowed in extended OCA.
    Add(i64),
}

impl CounterOp {
    /// Effect on the counter, `None` for a zero test.
    pub fn effect(&self) -> Option<i64> {
        match self {
            CounterOp::Inc => Some(1),
            CounterOp::Dec => Some(-1),
            CounterOp::Noop => Some(0),
            CounterOp::ZeroTest => None,
            CounterOp::Add(z) => Some(*z),
        }
    }

    /// Size charge of the transition in an extended OCA: max(0, |z|−1).
    pub fn size_charge(&self) -> u64 {
        match self {
            CounterOp::Add(z) => z.unsigned_abs().saturating_sub(1),
            _ => 0,
        }
    }
}

impl fmt::Display for CounterOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CounterOp::Inc => write!(f, "inc"),
            CounterOp::Dec => write!(f, "dec"),
            CounterOp::Noop => write!(f, "noop"),
            CounterOp::ZeroTest => write!(f, "zero"),
            CounterOp::Add(z) => write!(f, "{z:+}"),
        }
    }
}

/// Transition label: a letter or ε.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Label {
    Letter(Letter),
    Epsilon,
}

impl Label {
    pub fn as_letter(&self) -> Option<&Letter> {
        match self {
            Label::Letter(l) => Some(l),
            Label::Epsilon => None,
        }
    }

    pub fn is_epsilon(&self) -> bool {
        matches!(self, Label::Epsilon)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Letter(l) => write!(f, "{l}"),
            Label::Epsilon => write!(f, "eps"),
        }
    }
}

impl From<Letter> for Label {
    fn from(l: Letter) -> Self {
        Label::Letter(l)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Transition {
    pub src: StateId,
    pub label: Label,
    pub op: CounterOp,
    pub dst: StateId,
}

impl Transition {
    pub fn new(
        src: impl Into<StateId>,
        label: Label,
        op: CounterOp,
        dst: impl Into<StateId>,
    ) -> Self {
        Transition {
            src: src.into(),
            label,
            op,
            dst: dst.into(),
        }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.src, self.label, self.op, self.dst)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Kind {
    General,
    Simple,
    Extended,
    Nfa,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::General => write!(f, "general"),
            Kind::Simple => write!(f, "simple"),
            Kind::Extended => write!(f, "extended"),
            Kind::Nfa => write!(f, "nfa"),
        }
    }
}

/// A one-counter automaton. Immutable after construction.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Oca {
    kind: Kind,
    states: Vec<StateId>,
    alphabet: Alphabet,
    initial: StateId,
    finals: BTreeSet<StateId>,
    transitions: Vec<Transition>,
}

impl Oca {
    pub fn new(
        kind: Kind,
        states: Vec<StateId>,
        alphabet: Alphabet,
        initial: StateId,
        finals: impl IntoIterator<Item = StateId>,
        transitions: Vec<Transition>,
    ) -> Result<Self, Error> {
        let finals: BTreeSet<StateId> = finals.into_iter().collect();
        let oca = Oca {
            kind,
            states,
            alphabet,
            initial,
            finals,
            transitions,
        };
        oca.validate()?;
        Ok(oca)
    }

    fn validate(&self) -> Result<(), Error> {
        let mut seen = BTreeSet::new();
        for s in &self.states {
            if !seen.insert(s.clone()) {
                return Err(Error::DuplicateState(s.name().to_string()));
            }
        }
        let known = |s: &StateId| seen.contains(s);
        if !known(&self.initial) {
            return Err(Error::UnknownState(self.initial.name().to_string()));
        }
        for f in &self.finals {
            if !known(f) {
                return Err(Error::UnknownState(f.name().to_string()));
            }
        }
        for t in &self.transitions {
            if !known(&t.src) {
                return Err(Error::UnknownState(t.src.name().to_string()));
            }
            if !known(&t.dst) {
                return Err(Error::UnknownState(t.dst.name().to_string()));
            }
            if let Some(l) = t.label.as_letter() {
                if !self.alphabet.contains(l) {
                    return Err(Error::UnknownLetter(l.token().to_string()));
                }
            }
            match (self.kind, t.op) {
                (Kind::Extended, _) => {}
                (_, CounterOp::Add(_)) => return Err(Error::KindViolation("Add outside extended OCA")),
                (Kind::Simple, CounterOp::ZeroTest) => {
                    return Err(Error::KindViolation("zero test in simple OCA"))
                }
                (Kind::Nfa, op) if op != CounterOp::ZeroTest => {
                    return Err(Error::KindViolation("non-zero-test transition in NFA"))
                }
                _ => {}
            }
        }
        if self.kind == Kind::Simple && self.finals.len() != 1 {
            return Err(Error::KindViolation("simple OCA needs exactly one final state"));
        }
        Ok(())
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn initial(&self) -> &StateId {
        &self.initial
    }

    pub fn finals(&self) -> &BTreeSet<StateId> {
        &self.finals
    }

    /// The unique final state of a simple OCA.
    pub fn unique_final(&self) -> Result<&StateId, Error> {
        if self.finals.len() == 1 {
            Ok(self.finals.iter().next().unwrap())
        } else {
            Err(Error::KindViolation("automaton has no unique final state"))
        }
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn has_epsilon(&self) -> bool {
        self.transitions.iter().any(|t| t.label.is_epsilon())
    }

    pub fn has_zero_test(&self) -> bool {
        self.transitions.iter().any(|t| t.op == CounterOp::ZeroTest)
    }

    /// Size of an extended OCA: states plus per-transition charge max(0,|z|−1).
    /// For an ordinary OCA this is the number of states.
    pub fn extended_size(&self) -> u64 {
        self.states.len() as u64
            + self
                .transitions
                .iter()
                .map(|t| t.op.size_charge())
                .sum::<u64>()
    }

    /// Ψ(w) over this automaton's alphabet.
    pub fn parikh_of_word(&self, word: &[Letter]) -> Result<ParikhVector, Error> {
        let mut v = ParikhVector::zero(self.alphabet.len());
        let mut counts = v.counts().to_vec();
        for l in word {
            let i = self
                .alphabet
                .index_of(l)
                .ok_or_else(|| Error::UnknownLetter(l.token().to_string()))?;
            counts[i] += 1;
        }
        v = ParikhVector::from_counts(counts);
        Ok(v)
    }

    /// Reachable and co-reachable restriction (counter-blind on the
    /// transition graph). Language-preserving for every kind.
    pub fn trimmed(&self) -> Oca {
        let mut fwd: HashMap<&StateId, Vec<&StateId>> = HashMap::new();
        let mut bwd: HashMap<&StateId, Vec<&StateId>> = HashMap::new();
        for t in &self.transitions {
            fwd.entry(&t.src).or_default().push(&t.dst);
            bwd.entry(&t.dst).or_default().push(&t.src);
        }
        fn closure<'a>(
            start: Vec<&'a StateId>,
            edges: &HashMap<&'a StateId, Vec<&'a StateId>>,
        ) -> BTreeSet<&'a StateId> {
            let mut seen: BTreeSet<&StateId> = start.iter().copied().collect();
            let mut stack = start;
            while let Some(s) = stack.pop() {
                if let Some(next) = edges.get(s) {
                    for n in next {
                        if seen.insert(n) {
                            stack.push(n);
                        }
                    }
                }
            }
            seen
        }
        let reach = closure(vec![&self.initial], &fwd);
        let coreach = closure(self.finals.iter().collect(), &bwd);
        let keep: BTreeSet<&StateId> = reach.intersection(&coreach).copied().collect();
        // Initial and final states stay even when dead, so kind invariants
        // (unique final state for simple OCA) survive trimming.
        let states: Vec<StateId> = self
            .states
            .iter()
            .filter(|s| keep.contains(s) || **s == self.initial || self.finals.contains(s))
            .cloned()
            .collect();
        let transitions = self
            .transitions
            .iter()
            .filter(|t| keep.contains(&t.src) && keep.contains(&t.dst))
            .cloned()
            .collect();
        Oca {
            kind: self.kind,
            states,
            alphabet: self.alphabet.clone(),
            initial: self.initial.clone(),
            finals: self.finals.clone(),
            transitions,
        }
    }

    /// Same automaton with transitions and states sorted for stable output.
    pub fn normalized(&self) -> Oca {
        let mut states = self.states.clone();
        states.sort();
        let mut transitions = self.transitions.clone();
        let key = |t: &Transition| {
            (
                t.src.name().to_string(),
                t.label.to_string(),
                t.op.to_string(),
                t.dst.name().to_string(),
            )
        };
        transitions.sort_by_key(key);
        transitions.dedup();
        Oca {
            kind: self.kind,
            states,
            alphabet: self.alphabet.clone(),
            initial: self.initial.clone(),
            finals: self.finals.clone(),
            transitions,
        }
    }
}

/// Counter headroom needed by bounded-window searches to cover ε moves: an
/// ε segment of a run moves the counter by at most the length of a path in
/// the ε subgraph. When that subgraph is acyclic this is its longest path
/// plus one; otherwise a coarse n²+n+1 hill bound is used (exact only at
/// desk scale, where it is cross-checked against enumeration).
pub fn epsilon_hill_slack(a: &Oca) -> u64 {
    if !a.has_epsilon() {
        return 0;
    }
    let n = a.states().len();
    let index: HashMap<&StateId, usize> = a
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    let mut eps_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for t in a.transitions() {
        if t.label.is_epsilon() {
            eps_edges[index[&t.src]].push(index[&t.dst]);
        }
    }
    // Longest path by iterative DFS; a cycle falls back to the hill bound.
    let mut longest = vec![None::<u64>; n];
    let mut on_stack = vec![false; n];
    for root in 0..n {
        if longest[root].is_some() {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        on_stack[root] = true;
        while let Some(&mut (v, ref mut edge)) = stack.last_mut() {
            if *edge < eps_edges[v].len() {
                let w = eps_edges[v][*edge];
                *edge += 1;
                if on_stack[w] {
                    let nn = n as u64;
                    return nn * nn + nn + 1;
                }
                if longest[w].is_none() {
                    stack.push((w, 0));
                    on_stack[w] = true;
                }
            } else {
                let best = eps_edges[v]
                    .iter()
                    .map(|&w| longest[w].unwrap_or(0) + 1)
                    .max()
                    .unwrap_or(0);
                longest[v] = Some(best);
                on_stack[v] = false;
                stack.pop();
            }
        }
    }
    longest.iter().map(|l| l.unwrap_or(0)).max().unwrap_or(0) + 1
}

/// Replaces each `Add(z)` transition by a chain of |z| unit steps; the first
/// carries the original label, the rest ε. Adds max(0,|z|−1) fresh states per
/// transition, matching the size charge of the extended OCA.
pub fn expand_extended(a: &Oca) -> Result<Oca, Error> {
    if a.kind() != Kind::Extended {
        return Err(Error::KindViolation("expand_extended expects an extended OCA"));
    }
    let mut states = a.states().to_vec();
    let mut transitions = Vec::new();
    for (ti, t) in a.transitions().iter().enumerate() {
        match t.op {
            CounterOp::Add(z) => {
                let n = z.unsigned_abs();
                if n == 0 {
                    transitions.push(Transition::new(
                        t.src.clone(),
                        t.label.clone(),
                        CounterOp::Noop,
                        t.dst.clone(),
                    ));
                    continue;
                }
                let unit = if z > 0 { CounterOp::Inc } else { CounterOp::Dec };
                let mut prev = t.src.clone();
                for k in 1..n {
                    let mid = StateId::new(format!("x:{ti}:{k}"));
                    states.push(mid.clone());
                    let label = if k == 1 { t.label.clone() } else { Label::Epsilon };
                    transitions.push(Transition::new(prev, label, unit, mid.clone()));
                    prev = mid;
                }
                let label = if n == 1 { t.label.clone() } else { Label::Epsilon };
                transitions.push(Transition::new(prev, label, unit, t.dst.clone()));
            }
            op => transitions.push(Transition::new(t.src.clone(), t.label.clone(), op, t.dst.clone())),
        }
    }
    let kind = if a.has_zero_test() { Kind::General } else { Kind::Simple };
    // A simple OCA needs a unique final state; keep `general` otherwise.
    let kind = if kind == Kind::Simple && a.finals().len() != 1 {
        Kind::General
    } else {
        kind
    };
    Oca::new(
        kind,
        states,
        a.alphabet().clone(),
        a.initial().clone(),
        a.finals().iter().cloned(),
        transitions,
    )
}
