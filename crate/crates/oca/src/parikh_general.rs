//! Alphabet-independent Parikh-equivalent NFA: band automaton, reversal
//! restriction, the matching pushdown system, its bounded-stack NFA
//! expansion, and the glue automaton combining them.
//!
//! The matching PDA simulates a run of a simple OCA from both ends at once,
//! pairing each increment with its corresponding decrement; a reversal from
//! decrements back to increments splits the simulation into two obligations,
//! one of which is deferred on the stack. Choosing the smaller half first
//! keeps the stack height logarithmic in the number of reversals, so an NFA
//! that carries the stack in its state stays quasi-polynomial.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::core::indexed::Indexed;
use crate::core::{
    Alphabet, CounterOp, Kind, Label, Letter, Oca, StateId, Transition,
};
use crate::oracle::oca_nonempty;
use crate::Error;

/// Stack symbol of a pushdown system.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StackSym(Arc<str>);

impl StackSym {
    pub fn new(name: impl AsRef<str>) -> Self {
        StackSym(Arc::from(name.as_ref()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StackSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for StackSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sym({})", self.0)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PdaOp {
    Push(StackSym),
    Pop(StackSym),
    Internal,
    /// Fires only with an empty stack (⊥ on top) and never pops it.
    BottomTest,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PdaTransition {
    pub src: StateId,
    pub label: Label,
    pub op: PdaOp,
    pub dst: StateId,
}

/// A pushdown system with a distinguished bottom-of-stack symbol, push/pop/
/// internal/bottom-test moves, one initial and one final state.
#[derive(Clone, Debug)]
pub struct Pda {
    pub states: Vec<StateId>,
    pub alphabet: Alphabet,
    pub stack_symbols: Vec<StackSym>,
    pub initial: StateId,
    pub final_state: StateId,
    pub transitions: Vec<PdaTransition>,
}

impl Pda {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn stack_symbol_count(&self) -> usize {
        self.stack_symbols.len()
    }
}

/// The band automaton A[D]: summary phases track a counter window of ±D in
/// the state, transfer it back to the counter monotonically, and thereby
/// simulate iterated D-band runs without reversals. Runs of A embed
/// unchanged; conversely a run of A[D] from (p,0) to (q,0) yields a run of A
/// from (p,D) to (q,D).
pub fn build_band_automaton(a: &Oca, d: u64) -> Result<Oca, Error> {
    if a.kind() != Kind::Simple {
        return Err(Error::KindViolation("build_band_automaton expects a simple OCA"));
    }
    let d = d as i64;
    let orig = |q: &StateId| StateId::new(format!("band:{q}"));
    let sum = |q: &StateId, j: i64| StateId::new(format!("band:sum({q},{j})"));
    let tr = |j: i64, q: &StateId| StateId::new(format!("band:tr({j},{q})"));
    let mut states = Vec::new();
    for q in a.states() {
        states.push(orig(q));
    }
    for q in a.states() {
        for j in -d..=d {
            states.push(sum(q, j));
        }
    }
    for j in -d..=d {
        for q in a.states() {
            states.push(tr(j, q));
        }
    }
    let mut transitions = Vec::new();
    // 1. Simulate runs of A directly.
    for t in a.transitions() {
        transitions.push(Transition::new(
            orig(&t.src),
            t.label.clone(),
            t.op,
            orig(&t.dst),
        ));
    }
    for q in a.states() {
        // 2. Begin a summary phase.
        transitions.push(Transition::new(
            orig(q),
            Label::Epsilon,
            CounterOp::Noop,
            sum(q, 0),
        ));
        // 6. Finish a summary run.
        for j in -d..=d {
            transitions.push(Transition::new(
                sum(q, j),
                Label::Epsilon,
                CounterOp::Noop,
                tr(j, q),
            ));
        }
        // 9. Transfer control back to the copy of A.
        transitions.push(Transition::new(
            tr(0, q),
            Label::Epsilon,
            CounterOp::Noop,
            orig(q),
        ));
        // 7, 8. Transfer a positive/negative effect.
        for j in 1..=d {
            transitions.push(Transition::new(
                tr(j, q),
                Label::Epsilon,
                CounterOp::Inc,
                tr(j - 1, q),
            ));
        }
        for j in -d..=-1 {
            transitions.push(Transition::new(
                tr(j, q),
                Label::Epsilon,
                CounterOp::Dec,
                tr(j + 1, q),
            ));
        }
    }
    // 3, 4, 5. Simulate moves inside a summary phase without the counter.
    for t in a.transitions() {
        let eff = t.op.effect().expect("simple OCA has no zero tests");
        for j in -d..=d {
            let nj = j + eff;
            if nj < -d || nj > d {
                continue;
            }
            transitions.push(Transition::new(
                sum(&t.src, j),
                t.label.clone(),
                CounterOp::Noop,
                sum(&t.dst, nj),
            ));
        }
    }
    let out = Oca::new(
        Kind::Simple,
        states,
        a.alphabet().clone(),
        orig(a.initial()),
        [orig(a.unique_final()?)],
        transitions,
    )?;
    debug_assert_eq!(
        out.state_count() as u64,
        a.state_count() as u64 + 2 * a.state_count() as u64 * (2 * d as u64 + 1)
    );
    Ok(out)
}

/// Restriction to runs with at most R reversals: the phase (rising, falling
/// or flat) and the reversal count move into the state. A fresh collector
/// final state keeps the result a simple OCA, so the state count is
/// |Q|·(R+1)·3 + 1. L(result) = L_R(A).
pub fn reversal_restrict(a: &Oca, r: u64) -> Result<Oca, Error> {
    if a.kind() != Kind::Simple {
        return Err(Error::KindViolation("reversal_restrict expects a simple OCA"));
    }
    const PHASES: [&str; 3] = ["flat", "rise", "fall"];
    let st = |q: &StateId, i: u64, ph: usize| StateId::new(format!("rev:({q},{i},{})", PHASES[ph]));
    let acc = StateId::new("rev:acc");
    let mut states = Vec::new();
    for q in a.states() {
        for i in 0..=r {
            for ph in 0..3 {
                states.push(st(q, i, ph));
            }
        }
    }
    states.push(acc.clone());
    let mut transitions = Vec::new();
    for t in a.transitions() {
        for i in 0..=r {
            for ph in 0..3 {
                let next = match t.op {
                    CounterOp::Noop => Some((i, ph)),
                    CounterOp::Inc => match ph {
                        0 | 1 => Some((i, 1)),
                        _ => (i < r).then_some((i + 1, 1)),
                    },
                    CounterOp::Dec => match ph {
                        0 | 2 => Some((i, 2)),
                        _ => (i < r).then_some((i + 1, 2)),
                    },
                    _ => return Err(Error::KindViolation("unexpected op in simple OCA")),
                };
                if let Some((ni, nph)) = next {
                    transitions.push(Transition::new(
                        st(&t.src, i, ph),
                        t.label.clone(),
                        t.op,
                        st(&t.dst, ni, nph),
                    ));
                }
            }
        }
    }
    let f = a.unique_final()?;
    for i in 0..=r {
        for ph in 0..3 {
            transitions.push(Transition::new(
                st(f, i, ph),
                Label::Epsilon,
                CounterOp::Noop,
                acc.clone(),
            ));
        }
    }
    let out = Oca::new(
        Kind::Simple,
        states,
        a.alphabet().clone(),
        st(a.initial(), 0, 0),
        [acc],
        transitions,
    )?;
    debug_assert_eq!(
        out.state_count() as u64,
        a.state_count() as u64 * (r + 1) * 3 + 1
    );
    Ok(out)
}

/// Completable obligations: den[p][q] holds iff the simulation of a
/// well-matched run from p forward and q backward can reach the diagonal,
/// closing under one-sided internal moves, matched increment/decrement pairs
/// and obligation splits. Transitions into non-completable pairs are dead.
fn completable_pairs(a: &Oca) -> (Vec<Vec<bool>>, HashMap<StateId, usize>) {
    let idx: HashMap<StateId, usize> = a
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    let n = a.states().len();
    let mut noops: Vec<(usize, usize)> = Vec::new();
    let mut incs: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut decs: Vec<(usize, usize)> = Vec::new();
    for t in a.transitions() {
        let (s, d) = (idx[&t.src], idx[&t.dst]);
        match t.op {
            CounterOp::Noop => noops.push((s, d)),
            CounterOp::Inc => incs[s].push(d),
            CounterOp::Dec => decs.push((s, d)),
            _ => {}
        }
    }
    let mut den = vec![vec![false; n]; n];
    for (i, row) in den.iter_mut().enumerate() {
        row[i] = true;
    }
    loop {
        let mut changed = false;
        for p in 0..n {
            let mut row = den[p].clone();
            // Matched increment/decrement pairs.
            let mut tmp = vec![false; n];
            for &p2 in &incs[p] {
                for (q2, flag) in tmp.iter_mut().enumerate() {
                    *flag |= den[p2][q2];
                }
            }
            for &(q2, q) in &decs {
                if tmp[q2] {
                    row[q] = true;
                }
            }
            // Left internal steps.
            for &(src, dst) in &noops {
                if src == p {
                    for q in 0..n {
                        if den[dst][q] {
                            row[q] = true;
                        }
                    }
                }
            }
            // Right internal steps (the backward simulation retreats q).
            for &(q2, q) in &noops {
                if row[q2] {
                    row[q] = true;
                }
            }
            // Obligation splits.
            for m in 0..n {
                if row[m] {
                    for q in 0..n {
                        if den[m][q] {
                            row[q] = true;
                        }
                    }
                }
            }
            if row != den[p] {
                den[p] = row;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (den, idx)
}

/// The matching PDA A_P of a simple OCA (the counter read as a single-letter
/// stack): states (p,q) simulate a well-matched run from p forward and from q
/// backward, matched increment/decrement pairs pass through an intermediate
/// (p,q,b) state to read both letters, and a reversal splits the simulation
/// into two obligations, one deferred on the stack. Ψ(L(A_P)) = Ψ(L(A)).
/// Transitions into obligations that can never complete are elided; the state
/// and stack-symbol sets stay the full (Q×Q) ∪ (Q×Q×Σ) grid.
pub fn build_matching_pda(a: &Oca) -> Result<Pda, Error> {
    if a.kind() != Kind::Simple {
        return Err(Error::KindViolation("build_matching_pda expects a simple OCA"));
    }
    let pair = |p: &StateId, q: &StateId| StateId::new(format!("pda:({p}|{q})"));
    let triple =
        |p: &StateId, q: &StateId, b: &Letter| StateId::new(format!("pda:({p}|{q}|{b})"));
    let pair_sym = |p: &StateId, q: &StateId| StackSym::new(format!("({p}|{q})"));
    let triple_sym =
        |p: &StateId, q: &StateId, b: &Letter| StackSym::new(format!("({p}|{q}|{b})"));
    let s_p = StateId::new("pda:s");
    let t_p = StateId::new("pda:t");

    let mut states = vec![s_p.clone(), t_p.clone()];
    let mut stack_symbols = Vec::new();
    for p in a.states() {
        for q in a.states() {
            states.push(pair(p, q));
            stack_symbols.push(pair_sym(p, q));
            for b in a.alphabet().letters() {
                states.push(triple(p, q, b));
                stack_symbols.push(triple_sym(p, q, b));
            }
        }
    }

    let (den, idx) = completable_pairs(a);
    let live = |p: &StateId, q: &StateId| den[idx[p]][idx[q]];

    let mut transitions = Vec::new();
    // 1. Initialize with the full obligation (initial, final).
    if live(a.initial(), a.unique_final()?) {
        transitions.push(PdaTransition {
            src: s_p.clone(),
            label: Label::Epsilon,
            op: PdaOp::Internal,
            dst: pair(a.initial(), a.unique_final()?),
        });
    }
    let internals: Vec<&Transition> = a
        .transitions()
        .iter()
        .filter(|t| t.op == CounterOp::Noop)
        .collect();
    let pushes: Vec<&Transition> = a
        .transitions()
        .iter()
        .filter(|t| t.op == CounterOp::Inc)
        .collect();
    let pops: Vec<&Transition> = a
        .transitions()
        .iter()
        .filter(|t| t.op == CounterOp::Dec)
        .collect();
    for q in a.states() {
        // 2. Internal move from the left.
        for t in &internals {
            if live(&t.dst, q) {
                transitions.push(PdaTransition {
                    src: pair(&t.src, q),
                    label: t.label.clone(),
                    op: PdaOp::Internal,
                    dst: pair(&t.dst, q),
                });
            }
        }
        // 3. Internal move from the right (backwards).
        for t in &internals {
            if live(q, &t.src) {
                transitions.push(PdaTransition {
                    src: pair(q, &t.dst),
                    label: t.label.clone(),
                    op: PdaOp::Internal,
                    dst: pair(q, &t.src),
                });
            }
        }
    }
    // 4 and 5. A matched increment/decrement pair; the intermediate state
    // remembers the decrement's letter. A decrement reading ε skips the
    // intermediate state.
    for tp in &pushes {
        for tq in &pops {
            if !live(&tp.dst, &tq.src) {
                continue;
            }
            match &tq.label {
                Label::Letter(b) => {
                    transitions.push(PdaTransition {
                        src: pair(&tp.src, &tq.dst),
                        label: tp.label.clone(),
                        op: PdaOp::Internal,
                        dst: triple(&tp.dst, &tq.src, b),
                    });
                }
                Label::Epsilon => {
                    transitions.push(PdaTransition {
                        src: pair(&tp.src, &tq.dst),
                        label: tp.label.clone(),
                        op: PdaOp::Internal,
                        dst: pair(&tp.dst, &tq.src),
                    });
                }
            }
        }
    }
    for p in a.states() {
        for q in a.states() {
            if !live(p, q) {
                continue;
            }
            for b in a.alphabet().letters() {
                transitions.push(PdaTransition {
                    src: triple(p, q, b),
                    label: Label::Letter(b.clone()),
                    op: PdaOp::Internal,
                    dst: pair(p, q),
                });
            }
        }
    }
    // 6 and 7. Guess an intermediary state where a pop-to-push reversal
    // occurs; simulate one half now and defer the other.
    for p in a.states() {
        for q in a.states() {
            for mid in a.states() {
                if live(p, mid) && live(mid, q) {
                    transitions.push(PdaTransition {
                        src: pair(p, q),
                        label: Label::Epsilon,
                        op: PdaOp::Push(pair_sym(mid, q)),
                        dst: pair(p, mid),
                    });
                    transitions.push(PdaTransition {
                        src: pair(p, q),
                        label: Label::Epsilon,
                        op: PdaOp::Push(pair_sym(p, mid)),
                        dst: pair(mid, q),
                    });
                }
            }
        }
    }
    // 8. Current obligation complete, load the next one.
    for p in a.states() {
        for p2 in a.states() {
            for q2 in a.states() {
                if live(p2, q2) {
                    transitions.push(PdaTransition {
                        src: pair(p, p),
                        label: Label::Epsilon,
                        op: PdaOp::Pop(pair_sym(p2, q2)),
                        dst: pair(p2, q2),
                    });
                }
            }
        }
    }
    // 9. All obligations complete.
    for p in a.states() {
        transitions.push(PdaTransition {
            src: pair(p, p),
            label: Label::Epsilon,
            op: PdaOp::BottomTest,
            dst: t_p.clone(),
        });
    }
    Ok(Pda {
        states,
        alphabet: a.alphabet().clone(),
        stack_symbols,
        initial: s_p,
        final_state: t_p,
        transitions,
    })
}

/// Words of L(P) acceptable within stack height ≤ h, as an NFA whose states
/// are (PDA state, stack word). Only stack contents reachable from the empty
/// stack are materialized (the full grid is |P.states|·Σᵢ|Γ_P|ⁱ and almost
/// entirely unreachable); a `budget` caps the expansion.
pub fn pda_to_nfa_bounded_stack(p: &Pda, h: u64) -> Result<Oca, Error> {
    pda_to_nfa_bounded_stack_with_budget(p, h, usize::MAX)
}

pub fn pda_to_nfa_bounded_stack_with_budget(
    p: &Pda,
    h: u64,
    budget: usize,
) -> Result<Oca, Error> {
    let sym_index: HashMap<&StackSym, u32> = p
        .stack_symbols
        .iter()
        .enumerate()
        .map(|(i, s)| (s, i as u32))
        .collect();
    let state_index: HashMap<&StateId, u32> = p
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| (s, i as u32))
        .collect();
    let mut by_src: Vec<Vec<usize>> = vec![Vec::new(); p.states.len()];
    for (ti, t) in p.transitions.iter().enumerate() {
        by_src[state_index[&t.src] as usize].push(ti);
    }

    type Node = (u32, Vec<u32>);
    let start: Node = (state_index[&p.initial], Vec::new());
    let mut ids: HashMap<Node, u32> = HashMap::from([(start.clone(), 0)]);
    let mut nodes: Vec<Node> = vec![start.clone()];
    let mut queue: VecDeque<u32> = VecDeque::from([0]);
    let mut transitions: Vec<(u32, Label, u32)> = Vec::new();
    while let Some(id) = queue.pop_front() {
        let (s, stack) = nodes[id as usize].clone();
        for &ti in &by_src[s as usize] {
            let t = &p.transitions[ti];
            let next_stack = match &t.op {
                PdaOp::Internal => Some(stack.clone()),
                PdaOp::BottomTest => stack.is_empty().then(Vec::new),
                PdaOp::Push(x) => {
                    if stack.len() as u64 >= h {
                        None
                    } else {
                        let mut st = stack.clone();
                        st.push(sym_index[x]);
                        Some(st)
                    }
                }
                PdaOp::Pop(x) => {
                    if stack.last() == Some(&sym_index[x]) {
                        let mut st = stack.clone();
                        st.pop();
                        Some(st)
                    } else {
                        None
                    }
                }
            };
            let Some(next_stack) = next_stack else { continue };
            let next: Node = (state_index[&t.dst], next_stack);
            let next_id = match ids.get(&next) {
                Some(&i) => i,
                None => {
                    let i = nodes.len() as u32;
                    if nodes.len() >= budget {
                        return Err(Error::StateBudget(budget));
                    }
                    ids.insert(next.clone(), i);
                    nodes.push(next);
                    queue.push_back(i);
                    i
                }
            };
            transitions.push((id, t.label.clone(), next_id));
        }
    }
    // Stack words serialize innermost-first in the state names.
    let name = |n: &Node| {
        let syms: Vec<&str> = n
            .1
            .iter()
            .map(|&i| p.stack_symbols[i as usize].name())
            .collect();
        StateId::new(format!("pnfa:{}[{}]", p.states[n.0 as usize], syms.join(".")))
    };
    let state_ids: Vec<StateId> = nodes.iter().map(name).collect();
    let final_node: Node = (state_index[&p.final_state], Vec::new());
    let finals = ids.get(&final_node).map(|&i| state_ids[i as usize].clone());
    let transitions = transitions
        .into_iter()
        .map(|(src, label, dst)| {
            Transition::new(
                state_ids[src as usize].clone(),
                label,
                CounterOp::ZeroTest,
                state_ids[dst as usize].clone(),
            )
        })
        .collect();
    Oca::new(
        Kind::Nfa,
        state_ids.clone(),
        p.alphabet.clone(),
        state_ids[0].clone(),
        finals,
        transitions,
    )
}

/// Result of [`expand_obligations`]: a shared bounded-stack expansion of the
/// matching simulation, with per-entry start states and the bottom-level
/// diagonal exits.
struct SharedExpansion {
    /// Exit states (bottom-level diagonals) are the NFA's final states.
    nfa: Oca,
    /// Aligned with the requested entries; `None` when an entry obligation
    /// can never complete.
    entry_states: Vec<Option<StateId>>,
}

/// Bounded-stack expansion of the matching simulation of `a`, explored from
/// several entry obligations (pᵢ, final) at once; any bottom-level diagonal
/// reached from an entry completes exactly that entry's obligation.
///
/// With `multiset_stacks` the stack is kept sorted and any element may be
/// popped: obligations are independent sub-simulations, so linearizing them
/// in a different order preserves the Parikh image (though not the word
/// order), which is all the glue construction needs.
fn expand_obligations(
    a: &Oca,
    forward_entries: &[StateId],
    h: u64,
    budget: usize,
    multiset_stacks: bool,
) -> Result<SharedExpansion, Error> {
    let (den, idx) = completable_pairs(a);
    let n = a.states().len();
    let fin = idx[a.unique_final()?];
    let mut noops: Vec<(u32, u32, Label)> = Vec::new();
    let mut incs: Vec<(u32, u32, Label)> = Vec::new();
    let mut decs: Vec<(u32, u32, Label)> = Vec::new();
    for t in a.transitions() {
        let e = (idx[&t.src] as u32, idx[&t.dst] as u32, t.label.clone());
        match t.op {
            CounterOp::Noop => noops.push(e),
            CounterOp::Inc => incs.push(e),
            CounterOp::Dec => decs.push(e),
            _ => return Err(Error::KindViolation("unexpected op in simple OCA")),
        }
    }
    // Splits happen where a pop-to-push reversal occurs, i.e. right after a
    // decrement: only destinations of decrements can be split midpoints.
    let dec_dsts: BTreeSet<usize> = decs.iter().map(|(_, d, _)| *d as usize).collect();
    // Node: forward state, backward state, pending matched letter, stack of
    // deferred obligations (encoded f·n+b), innermost first.
    type Node = (u32, u32, Option<u32>, Vec<u32>);
    let mut ids: HashMap<Node, u32> = HashMap::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut queue: VecDeque<u32> = VecDeque::new();
    let intern = |node: Node,
                      ids: &mut HashMap<Node, u32>,
                      nodes: &mut Vec<Node>,
                      queue: &mut VecDeque<u32>|
     -> Result<u32, Error> {
        match ids.get(&node) {
            Some(&i) => Ok(i),
            None => {
                if nodes.len() >= budget {
                    return Err(Error::StateBudget(budget));
                }
                let i = nodes.len() as u32;
                ids.insert(node.clone(), i);
                nodes.push(node);
                queue.push_back(i);
                Ok(i)
            }
        }
    };
    let mut entry_ids: Vec<Option<u32>> = Vec::new();
    for p in forward_entries {
        let pi = idx
            .get(p)
            .copied()
            .ok_or_else(|| Error::UnknownState(p.name().to_string()))?;
        if den[pi][fin] {
            let node: Node = (pi as u32, fin as u32, None, Vec::new());
            entry_ids.push(Some(intern(node, &mut ids, &mut nodes, &mut queue)?));
        } else {
            entry_ids.push(None);
        }
    }
    let mut transitions: Vec<(u32, Label, u32)> = Vec::new();
    while let Some(id) = queue.pop_front() {
        let (fwd, bwd, pending, stack) = nodes[id as usize].clone();
        let (f, b) = (fwd as usize, bwd as usize);
        if let Some(letter) = pending {
            // Second half of a matched pair: read the deferred letter.
            let next: Node = (fwd, bwd, None, stack);
            let next_id = intern(next, &mut ids, &mut nodes, &mut queue)?;
            let l = a.alphabet().letters()[letter as usize].clone();
            transitions.push((id, Label::Letter(l), next_id));
            continue;
        }
        // One-sided internal moves.
        for (src, dst, label) in &noops {
            if *src as usize == f && den[*dst as usize][b] {
                let next: Node = (*dst, bwd, None, stack.clone());
                let next_id = intern(next, &mut ids, &mut nodes, &mut queue)?;
                transitions.push((id, label.clone(), next_id));
            }
            if *dst as usize == b && den[f][*src as usize] {
                let next: Node = (fwd, *src, None, stack.clone());
                let next_id = intern(next, &mut ids, &mut nodes, &mut queue)?;
                transitions.push((id, label.clone(), next_id));
            }
        }
        // Matched increment/decrement pairs.
        for (ps, pd, plabel) in &incs {
            if *ps as usize != f {
                continue;
            }
            for (qs, qd, qlabel) in &decs {
                if *qd as usize != b || !den[*pd as usize][*qs as usize] {
                    continue;
                }
                let pend = qlabel
                    .as_letter()
                    .map(|l| a.alphabet().index_of(l).unwrap() as u32);
                let next: Node = (*pd, *qs, pend, stack.clone());
                let next_id = intern(next, &mut ids, &mut nodes, &mut queue)?;
                transitions.push((id, plabel.clone(), next_id));
            }
        }
        // Splits: defer one half of the obligation on the stack.
        if (stack.len() as u64) < h {
            let push = |stack: &[u32], sym: u32| {
                let mut st = stack.to_vec();
                st.push(sym);
                if multiset_stacks {
                    st.sort_unstable();
                }
                st
            };
            for &mid in &dec_dsts {
                if den[f][mid] && den[mid][b] {
                    let next: Node = (fwd, mid as u32, None, push(&stack, (mid * n + b) as u32));
                    let next_id = intern(next, &mut ids, &mut nodes, &mut queue)?;
                    transitions.push((id, Label::Epsilon, next_id));
                    let next: Node = (mid as u32, bwd, None, push(&stack, (f * n + mid) as u32));
                    let next_id = intern(next, &mut ids, &mut nodes, &mut queue)?;
                    transitions.push((id, Label::Epsilon, next_id));
                }
            }
        }
        // A completed obligation loads a deferred one.
        if f == b && !stack.is_empty() {
            let choices: Vec<usize> = if multiset_stacks {
                let mut seen = BTreeSet::new();
                (0..stack.len()).filter(|&i| seen.insert(stack[i])).collect()
            } else {
                vec![stack.len() - 1]
            };
            for i in choices {
                let mut st = stack.clone();
                let sym = st.remove(i) as usize;
                let next: Node = ((sym / n) as u32, (sym % n) as u32, None, st);
                let next_id = intern(next, &mut ids, &mut nodes, &mut queue)?;
                transitions.push((id, Label::Epsilon, next_id));
            }
        }
    }
    let name = |node: &Node| {
        let (f, b, pending, stack) = node;
        let fs = a.states()[*f as usize].name();
        let bs = a.states()[*b as usize].name();
        let stack_str: Vec<String> = stack
            .iter()
            .map(|&e| {
                format!(
                    "({}|{})",
                    a.states()[e as usize / n],
                    a.states()[e as usize % n]
                )
            })
            .collect();
        match pending {
            Some(l) => StateId::new(format!(
                "ob:({fs}|{bs}|{})[{}]",
                a.alphabet().letters()[*l as usize],
                stack_str.join(".")
            )),
            None => StateId::new(format!("ob:({fs}|{bs})[{}]", stack_str.join("."))),
        }
    };
    let state_ids: Vec<StateId> = nodes.iter().map(name).collect();
    let exit_states: Vec<StateId> = nodes
        .iter()
        .enumerate()
        .filter(|(_, (f, b, pending, stack))| f == b && pending.is_none() && stack.is_empty())
        .map(|(i, _)| state_ids[i].clone())
        .collect();
    let entry_states: Vec<Option<StateId>> = entry_ids
        .iter()
        .map(|e| e.map(|i| state_ids[i as usize].clone()))
        .collect();
    let transitions: Vec<Transition> = transitions
        .into_iter()
        .map(|(src, label, dst)| {
            Transition::new(
                state_ids[src as usize].clone(),
                label,
                CounterOp::ZeroTest,
                state_ids[dst as usize].clone(),
            )
        })
        .collect();
    // The expansion may be empty when no entry obligation is completable.
    let initial = state_ids
        .first()
        .cloned()
        .unwrap_or_else(|| StateId::new("ob:none"));
    let mut all_states = state_ids;
    if all_states.is_empty() {
        all_states.push(initial.clone());
    }
    let nfa = Oca::new(
        Kind::Nfa,
        all_states,
        a.alphabet().clone(),
        initial,
        exit_states.clone(),
        transitions,
    )?;
    Ok(SharedExpansion { nfa, entry_states })
}

/// The nominal full-grid size of the bounded-stack expansion,
/// |P.states| · Σ_{i≤h} |Γ_P|ⁱ, saturating on overflow.
pub fn pda_to_nfa_nominal_size(p: &Pda, h: u64) -> u128 {
    let g = p.stack_symbol_count() as u128;
    let mut total: u128 = 0;
    let mut power: u128 = 1;
    for _ in 0..=h {
        total = total.saturating_add(power);
        power = power.saturating_mul(g);
    }
    (p.state_count() as u128).saturating_mul(total)
}

fn ceil_log2(x: u64) -> u64 {
    debug_assert!(x >= 1);
    let mut ceil = 0u64;
    while (1u128 << ceil) < x as u128 {
        ceil += 1;
    }
    ceil
}

/// Largest number of reversals any walk of the automaton can exhibit, capped
/// at `cap`. Exact on the counter-blind walk graph; an upper bound for runs.
fn walk_reversal_max(a: &Oca, cap: u64) -> u64 {
    let ix = Indexed::new(a);
    let mut best = 0;
    let mut seen = BTreeSet::new();
    let mut stack = Vec::new();
    for s in 0..ix.n() {
        let node = (s, 0i8, 0u64);
        if seen.insert(node) {
            stack.push(node);
        }
    }
    while let Some((s, sign, revs)) = stack.pop() {
        best = best.max(revs);
        if best >= cap {
            return cap;
        }
        for &ti in &ix.by_src[s] {
            let t = ix.transitions[ti];
            let e = t.op.effect().unwrap_or(0);
            let ns = match e.cmp(&0) {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => -1,
                std::cmp::Ordering::Equal => sign,
            };
            let nrevs = if sign != 0 && e != 0 && ns != sign {
                revs + 1
            } else {
                revs
            };
            let node = (t.dst, ns, nrevs.min(cap));
            if seen.insert(node) {
                stack.push(node);
            }
        }
    }
    best
}

/// Tuning for [`parikh_nfa_general`].
#[derive(Clone, Copy, Debug)]
pub struct GeneralConfig {
    /// Reversal budget; defaults to 2K²+K with K = |Q|.
    pub reversals: Option<u64>,
    /// Refuse instead of thrashing once this many states are materialized.
    pub state_budget: usize,
    /// Route each per-pair automaton through `reversal_restrict` before the
    /// PDA, restricting its language to exactly L_R. Correct but costly; with
    /// it off, the per-pair NFA still satisfies both inclusions the glue
    /// needs (it over-approximates L_R and under-approximates Ψ(L)).
    pub restrict_reversals_in_state: bool,
}

impl Default for GeneralConfig {
    fn default() -> Self {
        GeneralConfig {
            reversals: None,
            state_budget: 5_000_000,
            restrict_reversals_in_state: false,
        }
    }
}

/// Parikh-equivalent NFA for any alphabet: a counter-in-state NFA A^K covers
/// runs below K = |Q|; for each pair (p,q), a bounded-stack expansion B^{pq}
/// of the matching PDA of the band automaton A[K]^{p,q} covers the excursions
/// above K up to Parikh image (stack height 1+⌈log₂(2K²+K+1)⌉ suffices for
/// runs with 2K²+K reversals, and every run reorders to one such up to Ψ);
/// ε edges glue the parts at the (p,K)/(q,K) states.
pub fn parikh_nfa_general(a: &Oca) -> Result<Oca, Error> {
    parikh_nfa_general_with(a, &GeneralConfig::default())
}

pub fn parikh_nfa_general_with(a: &Oca, cfg: &GeneralConfig) -> Result<Oca, Error> {
    if a.kind() != Kind::Simple {
        return Err(Error::KindViolation("parikh_nfa_general expects a simple OCA"));
    }
    let k = a.state_count() as u64;
    let r = cfg.reversals.unwrap_or(2 * k * k + k);
    let h = 1 + ceil_log2(r + 1);

    let low = |q: &StateId, c: u64| StateId::new(format!("low:({q},{c})"));
    let mut states = Vec::new();
    for q in a.states() {
        for c in 0..=k {
            states.push(low(q, c));
        }
    }
    let mut transitions = Vec::new();
    for t in a.transitions() {
        for c in 0..=k {
            let next = match t.op {
                CounterOp::Noop => Some(c),
                CounterOp::Inc => (c < k).then_some(c + 1),
                CounterOp::Dec => (c > 0).then(|| c - 1),
                _ => return Err(Error::KindViolation("unexpected op in simple OCA")),
            };
            if let Some(nc) = next {
                transitions.push(Transition::new(
                    low(&t.src, c),
                    t.label.clone(),
                    CounterOp::ZeroTest,
                    low(&t.dst, nc),
                ));
            }
        }
    }
    let f = a.unique_final()?.clone();
    if !oca_nonempty(a)? {
        return Oca::new(
            Kind::Nfa,
            states,
            a.alphabet().clone(),
            low(a.initial(), 0),
            Vec::<StateId>::new(),
            transitions,
        );
    }

    let band = build_band_automaton(a, k)?;
    let mut total = states.len();
    let mut max_pair = 0usize;
    for p in a.states() {
        for q in a.states() {
            // A[K]^{p,q}: the band automaton with initial p and final q,
            // trimmed to its live part.
            let banded = Oca::new(
                Kind::Simple,
                band.states().to_vec(),
                band.alphabet().clone(),
                StateId::new(format!("band:{p}")),
                [StateId::new(format!("band:{q}"))],
                band.transitions().to_vec(),
            )?
            .trimmed();
            if !oca_nonempty(&banded)? {
                continue;
            }
            let staged = if cfg.restrict_reversals_in_state {
                reversal_restrict(&banded, r)?.trimmed()
            } else {
                banded
            };
            // A tighter reversal budget when the walk graph cannot alternate
            // r times anyway; the stack height only needs to cover it.
            let r_eff = walk_reversal_max(&staged, r);
            let h_eff = h.min(1 + ceil_log2(r_eff + 1));
            let budget_left = cfg.state_budget.saturating_sub(total);
            let shared = expand_obligations(
                &staged,
                std::slice::from_ref(staged.initial()),
                h_eff,
                budget_left,
                true,
            )?;
            let Some(entry) = shared.entry_states[0].clone() else {
                continue;
            };
            let nfa = shared.nfa.trimmed();
            max_pair = max_pair.max(nfa.state_count());
            total += nfa.state_count();
            if total > cfg.state_budget {
                return Err(Error::StateBudget(cfg.state_budget));
            }
            let prefix = format!("g({p},{q}):");
            let rename = |s: &StateId| StateId::new(format!("{prefix}{s}"));
            for s in nfa.states() {
                states.push(rename(s));
            }
            for t in nfa.transitions() {
                transitions.push(Transition::new(
                    rename(&t.src),
                    t.label.clone(),
                    t.op,
                    rename(&t.dst),
                ));
            }
            transitions.push(Transition::new(
                low(p, k),
                Label::Epsilon,
                CounterOp::ZeroTest,
                rename(&entry),
            ));
            for d in nfa.finals() {
                transitions.push(Transition::new(
                    rename(d),
                    Label::Epsilon,
                    CounterOp::ZeroTest,
                    low(q, k),
                ));
            }
        }
    }
    let out = Oca::new(
        Kind::Nfa,
        states,
        a.alphabet().clone(),
        low(a.initial(), 0),
        [low(&f, 0)],
        transitions,
    )?;
    // Assembly size stays within |A^K| + K² · max|B^{pq}|.
    assert!(
        out.state_count() as u64
            <= (a.state_count() as u64) * (k + 1) + k * k * (max_pair as u64).max(1)
    );
    Ok(out)
}
