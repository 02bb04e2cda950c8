//! Independent brute-force ground truth: bounded enumeration, subword tests,
//! OCA×NFA products, emptiness, and closure/Parikh membership deciders used to
//! validate every construction in this crate.
//!
//! The membership deciders (`closure_member`) are exact, not length-bounded:
//! they reduce to a synchronized product followed by a bounded-counter
//! emptiness check, whose cap |Q|²+1 is sound for simple OCA because a
//! nonempty simple OCA has an accepting run whose counter never exceeds that
//! value.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::core::indexed::Indexed;
use crate::core::{
    Alphabet, CounterOp, Kind, Label, Letter, Oca, ParikhVector, StateId, Transition,
};
use crate::reduction::epsilon_to_letter;
use crate::Error;

/// True iff `u` is a scattered subword of `w` (greedy left-to-right matching).
pub fn subword_order(u: &[Letter], w: &[Letter]) -> bool {
    let mut it = w.iter();
    'outer: for a in u {
        for b in it.by_ref() {
            if a == b {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Synchronized product of an OCA with an NFA; the counter is carried by the
/// OCA component, ε moves interleave. L(product) = L(A) ∩ L(N).
pub fn product_with_nfa(a: &Oca, n: &Oca) -> Result<Oca, Error> {
    if n.kind() != Kind::Nfa {
        return Err(Error::KindViolation("product expects an NFA second operand"));
    }
    if a.alphabet() != n.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    let pair = |p: &StateId, q: &StateId| StateId::new(format!("({}*{})", p, q));
    let mut states = Vec::new();
    for p in a.states() {
        for q in n.states() {
            states.push(pair(p, q));
        }
    }
    let mut transitions = Vec::new();
    for ta in a.transitions() {
        match &ta.label {
            Label::Epsilon => {
                for q in n.states() {
                    transitions.push(Transition::new(
                        pair(&ta.src, q),
                        Label::Epsilon,
                        ta.op,
                        pair(&ta.dst, q),
                    ));
                }
            }
            Label::Letter(l) => {
                for tn in n.transitions() {
                    if tn.label.as_letter() == Some(l) {
                        transitions.push(Transition::new(
                            pair(&ta.src, &tn.src),
                            ta.label.clone(),
                            ta.op,
                            pair(&ta.dst, &tn.dst),
                        ));
                    }
                }
            }
        }
    }
    for tn in n.transitions() {
        if tn.label.is_epsilon() {
            for p in a.states() {
                transitions.push(Transition::new(
                    pair(p, &tn.src),
                    Label::Epsilon,
                    CounterOp::Noop,
                    pair(p, &tn.dst),
                ));
            }
        }
    }
    let mut finals = Vec::new();
    for f in a.finals() {
        for g in n.finals() {
            finals.push(pair(f, g));
        }
    }
    let kind = if !a.has_zero_test() && finals.len() == 1 && a.kind() != Kind::Extended {
        Kind::Simple
    } else {
        Kind::General
    };
    Oca::new(
        kind,
        states,
        a.alphabet().clone(),
        pair(a.initial(), n.initial()),
        finals,
        transitions,
    )
}

/// Emptiness of a simple OCA: BFS over configurations with the counter capped
/// at |Q|²+1, from (q₀,0); nonempty iff (q_f,0) is reachable.
pub fn oca_nonempty(a: &Oca) -> Result<bool, Error> {
    if a.kind() != Kind::Simple {
        return Err(Error::KindViolation("oca_nonempty expects a simple OCA"));
    }
    let ix = Indexed::new(a);
    let cap = (a.state_count() as u64) * (a.state_count() as u64) + 1;
    let fin = ix.state_index(a.unique_final()?).unwrap();
    let mut seen = HashSet::new();
    let mut stack = vec![(ix.initial, 0u64)];
    seen.insert((ix.initial, 0u64));
    while let Some((s, c)) = stack.pop() {
        if s == fin && c == 0 {
            return Ok(true);
        }
        for &ti in &ix.by_src[s] {
            let t = ix.transitions[ti];
            let Some(e) = t.op.effect() else { continue };
            let nc = c as i64 + e;
            if nc < 0 || nc as u64 > cap {
                continue;
            }
            if seen.insert((t.dst, nc as u64)) {
                stack.push((t.dst, nc as u64));
            }
        }
    }
    Ok(false)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MemberMode {
    Exact,
    Up,
    Down,
}

/// NFA accepting exactly {w}.
pub fn nfa_exact_word(w: &[Letter], alphabet: &Alphabet) -> Oca {
    word_nfa(w, alphabet, false, false)
}

/// NFA accepting ↑{w}: |w|+1 states with Σ self-loops.
pub fn nfa_upward_word(w: &[Letter], alphabet: &Alphabet) -> Oca {
    word_nfa(w, alphabet, true, false)
}

/// NFA accepting ↓{w}: ε-skippable letter edges.
pub fn nfa_downward_word(w: &[Letter], alphabet: &Alphabet) -> Oca {
    word_nfa(w, alphabet, false, true)
}

fn word_nfa(w: &[Letter], alphabet: &Alphabet, up_loops: bool, eps_skips: bool) -> Oca {
    let st = |i: usize| StateId::new(format!("w{i}"));
    let states: Vec<StateId> = (0..=w.len()).map(st).collect();
    let mut transitions = Vec::new();
    for (i, l) in w.iter().enumerate() {
        transitions.push(Transition::new(
            st(i),
            Label::Letter(l.clone()),
            CounterOp::ZeroTest,
            st(i + 1),
        ));
        if eps_skips {
            transitions.push(Transition::new(
                st(i),
                Label::Epsilon,
                CounterOp::ZeroTest,
                st(i + 1),
            ));
        }
    }
    if up_loops {
        for i in 0..=w.len() {
            for l in alphabet.letters() {
                transitions.push(Transition::new(
                    st(i),
                    Label::Letter(l.clone()),
                    CounterOp::ZeroTest,
                    st(i),
                ));
            }
        }
    }
    Oca::new(
        Kind::Nfa,
        states,
        alphabet.clone(),
        st(0),
        [st(w.len())],
        transitions,
    )
    .expect("word NFA is well-formed")
}

/// Exact membership of `w` in L(A), ↑L(A) or ↓L(A) for a simple OCA: reduces
/// to product plus emptiness. Down uses w ∈ ↓L ⇔ L ∩ ↑{w} ≠ ∅; up uses
/// w ∈ ↑L ⇔ L ∩ ↓{w} ≠ ∅.
pub fn closure_member(a: &Oca, w: &[Letter], mode: MemberMode) -> Result<bool, Error> {
    for l in w {
        if !a.alphabet().contains(l) {
            return Err(Error::UnknownLetter(l.token().to_string()));
        }
    }
    let n = match mode {
        MemberMode::Exact => nfa_exact_word(w, a.alphabet()),
        MemberMode::Down => nfa_upward_word(w, a.alphabet()),
        MemberMode::Up => nfa_downward_word(w, a.alphabet()),
    };
    oca_nonempty(&product_with_nfa(a, &n)?)
}

/// All accepted words of length ≤ `max_len`, by exhaustive run search.
/// Requires an ε-free automaton: then runs reading w have length |w| and the
/// counter is bounded by `max_len`.
pub fn enumerate_language(a: &Oca, max_len: usize) -> Result<BTreeSet<Vec<Letter>>, Error> {
    if a.has_epsilon() {
        return Err(Error::EpsilonPresent);
    }
    let ix = Indexed::new(a);
    let mut out = BTreeSet::new();
    let accepting = |set: &BTreeSet<(usize, u64)>| {
        set.iter().any(|&(s, c)| c == 0 && ix.finals[s])
    };
    let mut layer: BTreeMap<Vec<Letter>, BTreeSet<(usize, u64)>> = BTreeMap::new();
    layer.insert(Vec::new(), BTreeSet::from([(ix.initial, 0u64)]));
    for len in 0..=max_len {
        let mut next: BTreeMap<Vec<Letter>, BTreeSet<(usize, u64)>> = BTreeMap::new();
        for (word, confs) in &layer {
            if accepting(confs) {
                out.insert(word.clone());
            }
            if len == max_len {
                continue;
            }
            for &(s, c) in confs {
                for &ti in &ix.by_src[s] {
                    let t = ix.transitions[ti];
                    let li = t.letter.expect("ε-free");
                    let nc = match t.op.effect() {
                        None => {
                            if c != 0 {
                                continue;
                            }
                            0
                        }
                        Some(e) => {
                            let nc = c as i64 + e;
                            if nc < 0 || nc as u64 > max_len as u64 {
                                continue;
                            }
                            nc as u64
                        }
                    };
                    let mut w2 = word.clone();
                    w2.push(a.alphabet().letters()[li].clone());
                    next.entry(w2).or_default().insert((t.dst, nc));
                }
            }
        }
        layer = next;
    }
    Ok(out)
}

/// { Ψ(w) : w ∈ L(A), ‖Ψ(w)‖ ≤ norm_bound }, over A's own alphabet.
///
/// ε transitions are handled natively as saturation steps inside a bounded
/// counter window; this is exact for ε-free automata (the counter along a run
/// reading ≤ B letters from counter 0 stays ≤ B) and carries a documented
/// hill slack of n²+n+1 otherwise.
pub fn enumerate_parikh(a: &Oca, norm_bound: u64) -> Result<BTreeSet<ParikhVector>, Error> {
    enumerate_parikh_free(a, norm_bound, None)
}

/// Like [`enumerate_parikh`], but additionally treats `free`-labeled
/// transitions as contributing nothing to the Parikh image; the returned
/// vectors omit the `free` coordinate. Used to erase a fresh ε-placeholder
/// letter introduced by `epsilon_to_letter`.
pub fn enumerate_parikh_free(
    a: &Oca,
    norm_bound: u64,
    free: Option<&Letter>,
) -> Result<BTreeSet<ParikhVector>, Error> {
    let ix = Indexed::new(a);
    let slack = if free.is_some() {
        let n = ix.n() as u64;
        n * n + n + 1
    } else {
        crate::core::automaton::epsilon_hill_slack(a)
    };
    let cap = norm_bound + slack;
    let free_idx = free.and_then(|l| a.alphabet().index_of(l));
    // Coordinates kept in the output, in alphabet order.
    let kept: Vec<usize> = (0..a.alphabet().len())
        .filter(|i| Some(*i) != free_idx)
        .collect();
    let coord_of: HashMap<usize, usize> = kept.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let dim = kept.len();

    let saturate = |set: &mut BTreeSet<(usize, u64)>| {
        let mut stack: Vec<(usize, u64)> = set.iter().copied().collect();
        while let Some((s, c)) = stack.pop() {
            for &ti in &ix.by_src[s] {
                let t = ix.transitions[ti];
                let is_free = match t.letter {
                    None => true,
                    Some(li) => Some(li) == free_idx,
                };
                if !is_free {
                    continue;
                }
                let nc = match t.op.effect() {
                    None => {
                        if c != 0 {
                            continue;
                        }
                        0
                    }
                    Some(e) => {
                        let nc = c as i64 + e;
                        if nc < 0 || nc as u64 > cap {
                            continue;
                        }
                        nc as u64
                    }
                };
                if set.insert((t.dst, nc)) {
                    stack.push((t.dst, nc));
                }
            }
        }
    };

    // Sparse layering: only Parikh images actually reached materialize.
    let mut out = BTreeSet::new();
    let mut base = BTreeSet::from([(ix.initial, 0u64)]);
    saturate(&mut base);
    let mut frontier: BTreeMap<ParikhVector, BTreeSet<(usize, u64)>> = BTreeMap::new();
    frontier.insert(ParikhVector::zero(dim), base);
    for norm in 0..=norm_bound {
        let current = std::mem::take(&mut frontier);
        let mut next: BTreeMap<ParikhVector, BTreeSet<(usize, u64)>> = BTreeMap::new();
        for (v, set) in current {
            if set.iter().any(|&(s, c)| c == 0 && ix.finals[s]) {
                out.insert(v.clone());
            }
            if norm == norm_bound {
                continue;
            }
            for &(s, c) in &set {
                for &ti in &ix.by_src[s] {
                    let t = ix.transitions[ti];
                    let Some(li) = t.letter else { continue };
                    if Some(li) == free_idx {
                        continue;
                    }
                    let nc = match t.op.effect() {
                        None => {
                            if c != 0 {
                                continue;
                            }
                            0
                        }
                        Some(e) => {
                            let nc = c as i64 + e;
                            if nc < 0 || nc as u64 > cap {
                                continue;
                            }
                            nc as u64
                        }
                    };
                    let succ = &v + &ParikhVector::unit(dim, coord_of[&li]);
                    next.entry(succ).or_default().insert((t.dst, nc));
                }
            }
        }
        for set in next.values_mut() {
            saturate(set);
        }
        frontier = next;
    }
    Ok(out)
}

/// ε-aware word membership for NFAs.
pub fn nfa_accepts(n: &Oca, word: &[Letter]) -> Result<bool, Error> {
    if n.kind() != Kind::Nfa {
        return Err(Error::KindViolation("nfa_accepts expects an NFA"));
    }
    let ix = Indexed::new(n);
    let eps_close = |set: &mut BTreeSet<usize>| {
        let mut stack: Vec<usize> = set.iter().copied().collect();
        while let Some(s) = stack.pop() {
            for &ti in &ix.by_src[s] {
                let t = ix.transitions[ti];
                if t.letter.is_none() && set.insert(t.dst) {
                    stack.push(t.dst);
                }
            }
        }
    };
    let mut cur = BTreeSet::from([ix.initial]);
    eps_close(&mut cur);
    for l in word {
        let li = n
            .alphabet()
            .index_of(l)
            .ok_or_else(|| Error::UnknownLetter(l.token().to_string()))?;
        let mut next = BTreeSet::new();
        for &s in &cur {
            for &ti in &ix.by_src[s] {
                let t = ix.transitions[ti];
                if t.letter == Some(li) {
                    next.insert(t.dst);
                }
            }
        }
        eps_close(&mut next);
        cur = next;
        if cur.is_empty() {
            return Ok(false);
        }
    }
    Ok(cur.iter().any(|&s| ix.finals[s]))
}

/// Ψ(L(N)) ∩ { ‖v‖ ≤ bound } for an NFA, by layered saturation over states.
/// Handles ε transitions natively; scales to large constructed NFAs.
pub fn nfa_parikh_up_to(n: &Oca, bound: u64) -> Result<BTreeSet<ParikhVector>, Error> {
    if n.kind() != Kind::Nfa {
        return Err(Error::KindViolation("nfa_parikh_up_to expects an NFA"));
    }
    let ix = Indexed::new(n);
    let dim = n.alphabet().len();
    let eps_close = |set: &mut Vec<bool>| {
        let mut stack: Vec<usize> = (0..set.len()).filter(|&i| set[i]).collect();
        while let Some(s) = stack.pop() {
            for &ti in &ix.by_src[s] {
                let t = ix.transitions[ti];
                if t.letter.is_none() && !set[t.dst] {
                    set[t.dst] = true;
                    stack.push(t.dst);
                }
            }
        }
    };
    // Sparse layering over reached images only.
    let mut out = BTreeSet::new();
    let mut base = vec![false; ix.n()];
    base[ix.initial] = true;
    eps_close(&mut base);
    let mut frontier: BTreeMap<ParikhVector, Vec<bool>> = BTreeMap::new();
    frontier.insert(ParikhVector::zero(dim), base);
    for norm in 0..=bound {
        let current = std::mem::take(&mut frontier);
        let mut next: BTreeMap<ParikhVector, Vec<bool>> = BTreeMap::new();
        for (v, set) in current {
            if (0..ix.n()).any(|s| set[s] && ix.finals[s]) {
                out.insert(v.clone());
            }
            if norm == bound {
                continue;
            }
            for t in &ix.transitions {
                let Some(k) = t.letter else { continue };
                if !set[t.src] {
                    continue;
                }
                let succ = &v + &ParikhVector::unit(dim, k);
                next.entry(succ).or_insert_with(|| vec![false; ix.n()])[t.dst] = true;
            }
        }
        for set in next.values_mut() {
            eps_close(set);
        }
        frontier = next;
    }
    Ok(out)
}

/// Convenience: enumerate the language of an automaton that may contain ε
/// transitions by first replacing ε with a fresh letter and erasing it from
/// the produced words. Word lengths are measured after erasure.
pub fn enumerate_language_mod_eps(
    a: &Oca,
    max_len: usize,
    eps_budget: usize,
) -> Result<BTreeSet<Vec<Letter>>, Error> {
    if !a.has_epsilon() {
        return enumerate_language(a, max_len);
    }
    let (adjusted, fresh) = epsilon_to_letter(a);
    let words = enumerate_language(&adjusted, max_len + eps_budget)?;
    let mut out = BTreeSet::new();
    for w in words {
        let erased: Vec<Letter> = w.into_iter().filter(|l| *l != fresh).collect();
        if erased.len() <= max_len {
            out.insert(erased);
        }
    }
    Ok(out)
}
