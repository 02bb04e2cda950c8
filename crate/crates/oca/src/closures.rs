//! Polynomial-size NFAs for the upward and downward closures of simple OCA
//! languages.
//!
//! Upward closure: a nonempty simple OCA accepts every word it needs through
//! a run whose counter never exceeds |Q|²+1, so the counter can be folded
//! into the state; closing upward then just adds Σ self-loops.
//!
//! Downward closure: the three-phase automaton A_U. Phases 1 and 3 simulate
//! the OCA faithfully with the counter (≤ K = |Q|) in the state; phase 2
//! additionally allows freely reading any letter that occurs on some cycle
//! through the current state, with the counter bounded by U = K²+K+1.
//! The phases are connected by an increment bridge at level K and a decrement
//! bridge at level K+1. Then L(A) ⊆ L(A_U) ⊆ ↓L(A), and adding ε-copies of
//! all letter transitions yields exactly ↓L(A).

use std::collections::{BTreeMap, BTreeSet};

use crate::core::indexed::Indexed;
use crate::core::{
    expand_extended, CounterOp, Kind, Label, Letter, Oca, StateId, Transition,
};
use crate::reduction::{lift_abstraction, strip_zero_tests, AbstractionMode};
use crate::Error;

/// Counter-in-state NFA for runs with counter ≤ |Q|²+1, closed upward with Σ
/// self-loops on every state. Recognizes ↑L(A) for a simple OCA; the state
/// count is exactly |Q|·(|Q|²+2).
pub fn upward_closure_nfa(a: &Oca) -> Result<Oca, Error> {
    if a.kind() != Kind::Simple {
        return Err(Error::KindViolation("upward_closure_nfa expects a simple OCA"));
    }
    let q = a.state_count() as u64;
    let cap = q * q + 1;
    let st = |s: &StateId, c: u64| StateId::new(format!("u:({s},{c})"));
    let mut states = Vec::new();
    for s in a.states() {
        for c in 0..=cap {
            states.push(st(s, c));
        }
    }
    let mut transitions = Vec::new();
    for t in a.transitions() {
        for c in 0..=cap {
            let next = match t.op {
                CounterOp::Noop => Some(c),
                CounterOp::Inc => (c < cap).then_some(c + 1),
                CounterOp::Dec => (c > 0).then(|| c - 1),
                _ => return Err(Error::KindViolation("unexpected op in simple OCA")),
            };
            if let Some(nc) = next {
                transitions.push(Transition::new(
                    st(&t.src, c),
                    t.label.clone(),
                    CounterOp::ZeroTest,
                    st(&t.dst, nc),
                ));
            }
        }
    }
    for s in &states {
        for l in a.alphabet().letters() {
            transitions.push(Transition::new(
                s.clone(),
                Label::Letter(l.clone()),
                CounterOp::ZeroTest,
                s.clone(),
            ));
        }
    }
    let out = Oca::new(
        Kind::Nfa,
        states,
        a.alphabet().clone(),
        st(a.initial(), 0),
        [st(a.unique_final()?, 0)],
        transitions,
    )?;
    debug_assert_eq!(out.state_count() as u64, q * (q * q + 2));
    Ok(out)
}

/// Letters readable on some cycle through each state: letters(q) is the set
/// of labels of transitions lying inside the strongly connected component of
/// q in the counter-blind transition graph.
pub fn cycle_letters(a: &Oca) -> Result<BTreeMap<StateId, BTreeSet<Letter>>, Error> {
    let ix = Indexed::new(a);
    let scc = tarjan_scc(ix.n(), &ix);
    let mut out: BTreeMap<StateId, BTreeSet<Letter>> = a
        .states()
        .iter()
        .map(|s| (s.clone(), BTreeSet::new()))
        .collect();
    for t in &ix.transitions {
        if scc[t.src] != scc[t.dst] {
            continue;
        }
        let Some(li) = t.letter else { continue };
        let letter = a.alphabet().letters()[li].clone();
        for (si, comp) in scc.iter().enumerate() {
            if *comp == scc[t.src] {
                out.get_mut(ix.state(si)).unwrap().insert(letter.clone());
            }
        }
    }
    Ok(out)
}

fn tarjan_scc(n: usize, ix: &Indexed) -> Vec<usize> {
    // Iterative Tarjan; returns component id per state.
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let mut next_index = 0;
    let mut next_comp = 0;

    #[derive(Clone)]
    struct Frame {
        v: usize,
        edge: usize,
    }

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call = vec![Frame { v: root, edge: 0 }];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(frame) = call.last_mut() {
            let v = frame.v;
            if frame.edge < ix.by_src[v].len() {
                let ti = ix.by_src[v][frame.edge];
                frame.edge += 1;
                let w = ix.transitions[ti].dst;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push(Frame { v: w, edge: 0 });
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
                let done = call.pop().unwrap();
                if let Some(parent) = call.last() {
                    let p = parent.v;
                    low[p] = low[p].min(low[done.v]);
                }
            }
        }
    }
    comp
}

/// The three-phase automaton A_U with U = K²+K+1, K = |Q|. Satisfies
/// L(A) ⊆ L(A_U) ⊆ ↓L(A).
pub fn build_downward_automaton(a: &Oca) -> Result<Oca, Error> {
    if a.kind() != Kind::Simple {
        return Err(Error::KindViolation(
            "build_downward_automaton expects a simple OCA",
        ));
    }
    let k = a.state_count() as u64;
    let u = k * k + k + 1;
    let loops = cycle_letters(a)?;
    let st = |phase: u8, s: &StateId, c: u64| StateId::new(format!("d{phase}:({s},{c})"));
    let mut states = Vec::new();
    for s in a.states() {
        for c in 0..=k {
            states.push(st(1, s, c));
        }
        for c in 0..=u {
            states.push(st(2, s, c));
        }
        for c in 0..=k {
            states.push(st(3, s, c));
        }
    }
    let mut transitions = Vec::new();
    for t in a.transitions() {
        // Δ1 and Δ3: faithful simulation below level K.
        for phase in [1u8, 3u8] {
            for c in 0..=k {
                let next = match t.op {
                    CounterOp::Noop => Some(c),
                    CounterOp::Inc => (c < k).then_some(c + 1),
                    CounterOp::Dec => (c > 0).then(|| c - 1),
                    _ => return Err(Error::KindViolation("unexpected op in simple OCA")),
                };
                if let Some(nc) = next {
                    transitions.push(Transition::new(
                        st(phase, &t.src, c),
                        t.label.clone(),
                        CounterOp::ZeroTest,
                        st(phase, &t.dst, nc),
                    ));
                }
            }
        }
        // Bridge Δ1 → Δ2 on an increment at level K.
        if t.op == CounterOp::Inc {
            transitions.push(Transition::new(
                st(1, &t.src, k),
                t.label.clone(),
                CounterOp::ZeroTest,
                st(2, &t.dst, k + 1),
            ));
        }
        // Δ2: faithful simulation bounded by U.
        for c in 0..=u {
            let next = match t.op {
                CounterOp::Noop => Some(c),
                CounterOp::Inc => (c < u).then_some(c + 1),
                CounterOp::Dec => (c > 0).then(|| c - 1),
                _ => unreachable!(),
            };
            if let Some(nc) = next {
                transitions.push(Transition::new(
                    st(2, &t.src, c),
                    t.label.clone(),
                    CounterOp::ZeroTest,
                    st(2, &t.dst, nc),
                ));
            }
        }
        // Bridge Δ2 → Δ3 on a decrement at level K+1.
        if t.op == CounterOp::Dec {
            transitions.push(Transition::new(
                st(2, &t.src, k + 1),
                t.label.clone(),
                CounterOp::ZeroTest,
                st(3, &t.dst, k),
            ));
        }
    }
    // Δ2 type 5: freely simulate loops, one letter per step.
    for s in a.states() {
        for l in &loops[s] {
            for c in 0..=u {
                transitions.push(Transition::new(
                    st(2, s, c),
                    Label::Letter(l.clone()),
                    CounterOp::ZeroTest,
                    st(2, s, c),
                ));
            }
        }
    }
    let f = a.unique_final()?;
    let out = Oca::new(
        Kind::Nfa,
        states,
        a.alphabet().clone(),
        st(1, a.initial(), 0),
        [st(1, f, 0), st(3, f, 0)],
        transitions,
    )?;
    debug_assert_eq!(
        out.state_count() as u64,
        k * (k + 1) + k * (u + 1) + k * (k + 1)
    );
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ClosureMode {
    Up,
    Down,
}

/// Closure of an NFA language: down adds an ε-copy of every letter
/// transition, up adds Σ self-loops on every state.
pub fn nfa_closure(n: &Oca, mode: ClosureMode) -> Result<Oca, Error> {
    if n.kind() != Kind::Nfa {
        return Err(Error::KindViolation("nfa_closure expects an NFA"));
    }
    let mut transitions = n.transitions().to_vec();
    match mode {
        ClosureMode::Down => {
            for t in n.transitions() {
                if let Label::Letter(_) = t.label {
                    transitions.push(Transition::new(
                        t.src.clone(),
                        Label::Epsilon,
                        CounterOp::ZeroTest,
                        t.dst.clone(),
                    ));
                }
            }
        }
        ClosureMode::Up => {
            for s in n.states() {
                for l in n.alphabet().letters() {
                    transitions.push(Transition::new(
                        s.clone(),
                        Label::Letter(l.clone()),
                        CounterOp::ZeroTest,
                        s.clone(),
                    ));
                }
            }
        }
    }
    Oca::new(
        Kind::Nfa,
        n.states().to_vec(),
        n.alphabet().clone(),
        n.initial().clone(),
        n.finals().iter().cloned(),
        transitions,
    )
}

/// NFA for ↓L(A) of a simple OCA: the three-phase automaton closed downward.
pub fn downward_closure_nfa(a: &Oca) -> Result<Oca, Error> {
    nfa_closure(&build_downward_automaton(a)?, ClosureMode::Down)
}

/// Upward closure for any automaton kind. Simple OCA use the direct
/// construction; general OCA route through the skeleton assembly with K=0;
/// NFAs just gain self-loops; extended OCA are expanded first.
pub fn upward_nfa_of(a: &Oca) -> Result<Oca, Error> {
    match a.kind() {
        Kind::Simple => upward_closure_nfa(a),
        Kind::Nfa => nfa_closure(a, ClosureMode::Up),
        Kind::General => lift_abstraction(a, 0, AbstractionMode::Up, |p, q| {
            upward_closure_nfa(&strip_zero_tests(a, p, q)?)
        }),
        Kind::Extended => upward_nfa_of(&expand_extended(a)?),
    }
}

/// Downward closure for any automaton kind; dispatch as in [`upward_nfa_of`].
pub fn downward_nfa_of(a: &Oca) -> Result<Oca, Error> {
    match a.kind() {
        Kind::Simple => downward_closure_nfa(a),
        Kind::Nfa => nfa_closure(a, ClosureMode::Down),
        Kind::General => lift_abstraction(a, 0, AbstractionMode::Down, |p, q| {
            downward_closure_nfa(&strip_zero_tests(a, p, q)?)
        }),
        Kind::Extended => downward_nfa_of(&expand_extended(a)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::test_fixtures::{all_words, anbn, exactly_ab};
    use crate::oracle::{closure_member, nfa_accepts, MemberMode};

    fn w(a: &Oca, s: &str) -> Vec<Letter> {
        s.chars()
            .map(|c| a.alphabet().get(&c.to_string()).unwrap().clone())
            .collect()
    }

    #[test]
    fn upward_of_anbn_is_sigma_star() {
        let a = anbn();
        let n = upward_closure_nfa(&a).unwrap();
        // ε ∈ L(A) so ↑L = Σ*.
        assert!(nfa_accepts(&n, &w(&a, "bbb")).unwrap());
        assert!(nfa_accepts(&n, &[]).unwrap());
    }

    #[test]
    fn upward_of_exactly_ab() {
        let a = exactly_ab();
        let n = upward_closure_nfa(&a).unwrap();
        assert!(!nfa_accepts(&n, &w(&a, "b")).unwrap());
        assert!(nfa_accepts(&n, &w(&a, "ab")).unwrap());
        assert!(nfa_accepts(&n, &w(&a, "babab")).unwrap());
        assert!(!nfa_accepts(&n, &w(&a, "ba")).unwrap());
    }

    #[test]
    fn upward_state_count_formula() {
        let a = exactly_ab();
        let n = upward_closure_nfa(&a).unwrap();
        let q = a.state_count();
        assert_eq!(n.state_count(), q * (q * q + 2));
    }

    #[test]
    fn cycle_letters_of_anbn() {
        let a = anbn();
        let loops = cycle_letters(&a).unwrap();
        let at = |s: &str| {
            loops[&StateId::new(s)]
                .iter()
                .map(|l| l.token().to_string())
                .collect::<Vec<_>>()
        };
        assert_eq!(at("s"), ["a"]);
        assert_eq!(at("t"), ["b"]);
    }

    #[test]
    fn cycle_letters_two_state_cycle() {
        let al = crate::core::Alphabet::from_tokens(["a", "b"]).unwrap();
        let a = al.get("a").unwrap().clone();
        let b = al.get("b").unwrap().clone();
        let m = Oca::new(
            Kind::Simple,
            vec![StateId::new("p"), StateId::new("q")],
            al,
            StateId::new("p"),
            [StateId::new("q")],
            vec![
                Transition::new("p", Label::Letter(a), CounterOp::Noop, "q"),
                Transition::new("q", Label::Letter(b), CounterOp::Noop, "p"),
            ],
        )
        .unwrap();
        let loops = cycle_letters(&m).unwrap();
        assert_eq!(loops[&StateId::new("p")].len(), 2);
        assert_eq!(loops[&StateId::new("q")].len(), 2);
    }

    #[test]
    fn cycle_letters_dag_empty() {
        let a = exactly_ab();
        let loops = cycle_letters(&a).unwrap();
        assert!(loops.values().all(|s| s.is_empty()));
    }

    #[test]
    fn downward_automaton_states_formula() {
        let a = anbn();
        let n = build_downward_automaton(&a).unwrap();
        let k = a.state_count() as u64;
        let u = k * k + k + 1;
        assert_eq!(
            n.state_count() as u64,
            k * (k + 1) + k * (u + 1) + k * (k + 1)
        );
    }

    #[test]
    fn downward_of_anbn_matches_oracle_to_len_6() {
        let a = anbn();
        let n = downward_closure_nfa(&a).unwrap();
        for word in all_words(a.alphabet(), 6) {
            let expect = closure_member(&a, &word, MemberMode::Down).unwrap();
            let got = nfa_accepts(&n, &word).unwrap();
            assert_eq!(got, expect, "word {:?}", word);
        }
    }

    #[test]
    fn downward_accepts_original_language() {
        let a = anbn();
        let au = build_downward_automaton(&a).unwrap();
        for word in [w(&a, "ab"), w(&a, "aabb"), vec![]] {
            assert!(nfa_accepts(&au, &word).unwrap(), "word {:?}", word);
        }
        assert!(!nfa_accepts(&au, &w(&a, "ba")).unwrap());
    }

    #[test]
    fn nfa_closure_examples() {
        let a = exactly_ab();
        let base = crate::oracle::nfa_exact_word(&w(&a, "ab"), a.alphabet());
        let down = nfa_closure(&base, ClosureMode::Down).unwrap();
        for word in all_words(a.alphabet(), 2) {
            let expect = matches!(
                word.iter().map(|l| l.token()).collect::<String>().as_str(),
                "" | "a" | "b" | "ab"
            );
            assert_eq!(nfa_accepts(&down, &word).unwrap(), expect);
        }
        let up = nfa_closure(&base, ClosureMode::Up).unwrap();
        assert!(nfa_accepts(&up, &w(&a, "bab")).unwrap());
        assert!(!nfa_accepts(&up, &w(&a, "ba")).unwrap());
    }

    #[test]
    fn closure_idempotent_to_len_5() {
        let a = exactly_ab();
        let base = crate::oracle::nfa_exact_word(&w(&a, "ab"), a.alphabet());
        for mode in [ClosureMode::Down, ClosureMode::Up] {
            let once = nfa_closure(&base, mode).unwrap();
            let twice = nfa_closure(&once, mode).unwrap();
            for word in all_words(a.alphabet(), 5) {
                assert_eq!(
                    nfa_accepts(&once, &word).unwrap(),
                    nfa_accepts(&twice, &word).unwrap()
                );
            }
        }
    }
}
