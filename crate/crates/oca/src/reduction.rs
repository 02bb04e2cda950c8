//! Reduction of general OCA (with zero tests) to simple OCA instances, and
//! recombination of per-pair abstraction NFAs through the skeleton-plus-
//! substitution construction; regular substitutions applied to NFAs.

use std::collections::{BTreeMap, HashMap};

use crate::core::{
    Alphabet, CounterOp, Kind, Label, Letter, Oca, StateId, Transition,
};
use crate::Error;

/// A regular substitution: map from letters to NFAs. Letters absent from the
/// map are implicitly mapped to their own singleton language. The size of a
/// substitution is the maximal state count over its images.
#[derive(Clone, Debug)]
pub struct Substitution {
    map: BTreeMap<Letter, Oca>,
}

impl Substitution {
    pub fn new(map: BTreeMap<Letter, Oca>) -> Result<Self, Error> {
        for img in map.values() {
            if img.kind() != Kind::Nfa {
                return Err(Error::KindViolation("substitution image must be an NFA"));
            }
        }
        Ok(Substitution { map })
    }

    pub fn identity() -> Self {
        Substitution {
            map: BTreeMap::new(),
        }
    }

    pub fn get(&self, l: &Letter) -> Option<&Oca> {
        self.map.get(l)
    }

    pub fn domain(&self) -> impl Iterator<Item = &Letter> {
        self.map.keys()
    }

    pub fn size(&self) -> usize {
        self.map.values().map(|a| a.state_count()).max().unwrap_or(0)
    }
}

/// The simple OCA A^{p,q}: initial p, unique final q, zero tests removed.
pub fn strip_zero_tests(a: &Oca, p: &StateId, q: &StateId) -> Result<Oca, Error> {
    if !a.states().contains(p) {
        return Err(Error::UnknownState(p.name().to_string()));
    }
    if !a.states().contains(q) {
        return Err(Error::UnknownState(q.name().to_string()));
    }
    let transitions: Vec<Transition> = a
        .transitions()
        .iter()
        .filter(|t| t.op != CounterOp::ZeroTest)
        .cloned()
        .collect();
    Oca::new(
        Kind::Simple,
        a.states().to_vec(),
        a.alphabet().clone(),
        p.clone(),
        [q.clone()],
        transitions,
    )
}

/// Replaces every ε label by a fresh letter (`e0`, `e1`, ... as available)
/// and returns the adjusted automaton together with the letter. An ε-free
/// input is returned unchanged, with the fresh letter unused. Erasing the
/// letter from accepted words restores the original language.
pub fn epsilon_to_letter(a: &Oca) -> (Oca, Letter) {
    let fresh = a.alphabet().fresh_epsilon_token();
    if !a.has_epsilon() {
        return (a.clone(), fresh);
    }
    let alphabet = a.alphabet().with_letter(fresh.clone());
    let transitions = a
        .transitions()
        .iter()
        .map(|t| Transition {
            src: t.src.clone(),
            label: match &t.label {
                Label::Epsilon => Label::Letter(fresh.clone()),
                l => l.clone(),
            },
            op: t.op,
            dst: t.dst.clone(),
        })
        .collect();
    let adjusted = Oca::new(
        a.kind(),
        a.states().to_vec(),
        alphabet,
        a.initial().clone(),
        a.finals().iter().cloned(),
        transitions,
    )
    .expect("ε-adjustment preserves well-formedness");
    (adjusted, fresh)
}

/// The skeleton NFA over Π = Σ ∪ {tri(K,p,q)}: states Q×{0..K} simulate the
/// OCA faithfully while the counter stays ≤ K, and for each pair (p,q) a
/// triple-letter bridge ((p,K), tri(K,p,q), (q,K)) stands for an excursion
/// that stays at counter ≥ K. Zero tests are honored at level 0.
pub fn skeleton_nfa(a: &Oca, k: u64) -> Result<(Oca, TripleLetters), Error> {
    let st = |q: &StateId, i: u64| StateId::new(format!("sk:({q},{i}))"));
    let mut states = Vec::new();
    for q in a.states() {
        for i in 0..=k {
            states.push(st(q, i));
        }
    }
    let mut alphabet = a.alphabet().clone();
    let mut triples = BTreeMap::new();
    for p in a.states() {
        for q in a.states() {
            let tok = format!("tri({k},{p},{q})");
            let l = Letter::new(&tok)?;
            alphabet = alphabet.with_letter(l.clone());
            triples.insert(l, (p.clone(), q.clone()));
        }
    }
    let mut transitions = Vec::new();
    for t in a.transitions() {
        for i in 0..=k {
            let target_level = match t.op {
                CounterOp::Noop => Some(i),
                CounterOp::Inc => (i < k).then_some(i + 1),
                CounterOp::Dec => (i > 0).then(|| i - 1),
                CounterOp::ZeroTest => (i == 0).then_some(0),
                CounterOp::Add(_) => {
                    return Err(Error::KindViolation("skeleton of an extended OCA"))
                }
            };
            if let Some(j) = target_level {
                transitions.push(Transition::new(
                    st(&t.src, i),
                    t.label.clone(),
                    CounterOp::ZeroTest,
                    st(&t.dst, j),
                ));
            }
        }
    }
    for (l, (p, q)) in &triples {
        transitions.push(Transition::new(
            st(p, k),
            Label::Letter(l.clone()),
            CounterOp::ZeroTest,
            st(q, k),
        ));
    }
    let finals: Vec<StateId> = a.finals().iter().map(|f| st(f, 0)).collect();
    let skeleton = Oca::new(
        Kind::Nfa,
        states,
        alphabet,
        st(a.initial(), 0),
        finals,
        transitions,
    )?;
    Ok((skeleton, triples))
}

/// Bridge letters of the skeleton, mapped to their state pairs.
pub type TripleLetters = BTreeMap<Letter, (StateId, StateId)>;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AbstractionMode {
    Up,
    Down,
    Parikh,
}

/// Builds the abstraction NFA of a general OCA from per-pair abstraction NFAs
/// of its zero-test-free slices: constructs the skeleton over Q×{0..K},
/// splices per_pair(p,q) across each triple-letter bridge, and applies the
/// mode's letter gadget (up: Σ self-loops; down: parallel ε edges; parikh:
/// plain edges). The result recognizes exactly ◇(L(A)).
///
/// The per_pair callback must return an NFA N with
/// ◇L(A^{p,q}) ⊆ L(N) ⊆ ◇(L_K(A^{p,q})); a violation is not detectable here
/// and surfaces only through downstream verification.
pub fn lift_abstraction<F>(
    a: &Oca,
    k: u64,
    mode: AbstractionMode,
    mut per_pair: F,
) -> Result<Oca, Error>
where
    F: FnMut(&StateId, &StateId) -> Result<Oca, Error>,
{
    let (skeleton, triples) = skeleton_nfa(a, k)?;
    let mut cache: HashMap<(StateId, StateId), Oca> = HashMap::new();
    let mut states = skeleton.states().to_vec();
    let mut transitions: Vec<Transition> = Vec::new();
    let mut alphabet = a.alphabet().clone();
    let mut copy_counter = 0usize;

    for t in skeleton.transitions() {
        let as_triple = t.label.as_letter().and_then(|l| triples.get(l));
        match as_triple {
            None => {
                transitions.push(t.clone());
                if mode == AbstractionMode::Down {
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
            Some((p, q)) => {
                let img = match cache.get(&(p.clone(), q.clone())) {
                    Some(img) => img.clone(),
                    None => {
                        let img = per_pair(p, q)?;
                        if img.kind() != Kind::Nfa {
                            return Err(Error::KindViolation("per_pair must return an NFA"));
                        }
                        cache.insert((p.clone(), q.clone()), img.clone());
                        img
                    }
                };
                copy_counter += 1;
                let prefix = format!("pp{copy_counter}:");
                let rename = |s: &StateId| StateId::new(format!("{prefix}{s}"));
                for s in img.states() {
                    states.push(rename(s));
                }
                for l in img.alphabet().letters() {
                    alphabet = alphabet.with_letter(l.clone());
                }
                for it in img.transitions() {
                    transitions.push(Transition::new(
                        rename(&it.src),
                        it.label.clone(),
                        it.op,
                        rename(&it.dst),
                    ));
                }
                transitions.push(Transition::new(
                    t.src.clone(),
                    Label::Epsilon,
                    CounterOp::ZeroTest,
                    rename(img.initial()),
                ));
                for f in img.finals() {
                    transitions.push(Transition::new(
                        rename(f),
                        Label::Epsilon,
                        CounterOp::ZeroTest,
                        t.dst.clone(),
                    ));
                }
            }
        }
    }

    if mode == AbstractionMode::Up {
        for s in &states {
            for l in alphabet.letters() {
                transitions.push(Transition::new(
                    s.clone(),
                    Label::Letter(l.clone()),
                    CounterOp::ZeroTest,
                    s.clone(),
                ));
            }
        }
    }

    Oca::new(
        Kind::Nfa,
        states,
        alphabet,
        skeleton.initial().clone(),
        skeleton.finals().iter().cloned(),
        transitions,
    )
}

/// Replaces every transition labeled by a letter in σ's domain with a fresh
/// copy of the image NFA, bridged by ε edges; L(result) = σ(L(N)).
pub fn apply_substitution(n: &Oca, sigma: &Substitution) -> Result<Oca, Error> {
    if n.kind() != Kind::Nfa {
        return Err(Error::KindViolation("apply_substitution expects an NFA"));
    }
    let mut states = n.states().to_vec();
    let mut transitions = Vec::new();
    let mut alphabet = Alphabet::new(vec![])?;
    for l in n.alphabet().letters() {
        if sigma.get(l).is_none() {
            alphabet = alphabet.with_letter(l.clone());
        }
    }
    for img in sigma.domain().filter_map(|l| sigma.get(l)) {
        for l in img.alphabet().letters() {
            alphabet = alphabet.with_letter(l.clone());
        }
    }
    let mut copy_counter = 0usize;
    for t in n.transitions() {
        let image = t.label.as_letter().and_then(|l| sigma.get(l));
        match image {
            None => transitions.push(t.clone()),
            Some(img) => {
                copy_counter += 1;
                let prefix = format!("sub{copy_counter}:");
                let rename = |s: &StateId| StateId::new(format!("{prefix}{s}"));
                for s in img.states() {
                    states.push(rename(s));
                }
                for it in img.transitions() {
                    transitions.push(Transition::new(
                        rename(&it.src),
                        it.label.clone(),
                        it.op,
                        rename(&it.dst),
                    ));
                }
                transitions.push(Transition::new(
                    t.src.clone(),
                    Label::Epsilon,
                    CounterOp::ZeroTest,
                    rename(img.initial()),
                ));
                for f in img.finals() {
                    transitions.push(Transition::new(
                        rename(f),
                        Label::Epsilon,
                        CounterOp::ZeroTest,
                        t.dst.clone(),
                    ));
                }
            }
        }
    }
    Oca::new(
        Kind::Nfa,
        states,
        alphabet,
        n.initial().clone(),
        n.finals().iter().cloned(),
        transitions,
    )
}

/// Substitution splice at the OCA level: like [`apply_substitution`], but the
/// host automaton keeps its counter, and the zero-test transitions of the
/// image NFAs become internal moves (the images only contribute letters).
pub fn apply_substitution_oca(a: &Oca, sigma: &Substitution) -> Result<Oca, Error> {
    if a.kind() == Kind::Extended {
        return Err(Error::KindViolation(
            "apply_substitution_oca expects an expanded automaton",
        ));
    }
    let mut states = a.states().to_vec();
    let mut transitions = Vec::new();
    let mut alphabet = Alphabet::new(vec![])?;
    for l in a.alphabet().letters() {
        if sigma.get(l).is_none() {
            alphabet = alphabet.with_letter(l.clone());
        }
    }
    for img in sigma.domain().filter_map(|l| sigma.get(l)) {
        for l in img.alphabet().letters() {
            alphabet = alphabet.with_letter(l.clone());
        }
    }
    let mut copy_counter = 0usize;
    for t in a.transitions() {
        let image = t.label.as_letter().and_then(|l| sigma.get(l));
        match image {
            None => transitions.push(t.clone()),
            Some(img) => {
                copy_counter += 1;
                let prefix = format!("sub{copy_counter}:");
                let rename = |s: &StateId| StateId::new(format!("{prefix}{s}"));
                for s in img.states() {
                    states.push(rename(s));
                }
                for it in img.transitions() {
                    transitions.push(Transition::new(
                        rename(&it.src),
                        it.label.clone(),
                        CounterOp::Noop,
                        rename(&it.dst),
                    ));
                }
                // The host transition's counter action fires on entry.
                transitions.push(Transition::new(
                    t.src.clone(),
                    Label::Epsilon,
                    t.op,
                    rename(img.initial()),
                ));
                for f in img.finals() {
                    transitions.push(Transition::new(
                        rename(f),
                        Label::Epsilon,
                        CounterOp::Noop,
                        t.dst.clone(),
                    ));
                }
            }
        }
    }
    Oca::new(
        a.kind(),
        states,
        alphabet,
        a.initial().clone(),
        a.finals().iter().cloned(),
        transitions,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::test_fixtures::anbn;
    use crate::oracle::{enumerate_language, enumerate_parikh, nfa_accepts, nfa_exact_word};

    #[test]
    fn strip_keeps_non_zero_tests() {
        let a = anbn();
        let s = strip_zero_tests(&a, a.initial(), a.unique_final().unwrap()).unwrap();
        assert_eq!(s.kind(), Kind::Simple);
        assert_eq!(s.transitions().len(), a.transitions().len());
    }

    #[test]
    fn strip_removes_zero_tests() {
        let a = anbn();
        let al = a.alphabet().clone();
        let mut ts = a.transitions().to_vec();
        for _ in 0..3 {
            ts.push(Transition::new(
                "s",
                Label::Epsilon,
                CounterOp::ZeroTest,
                "t",
            ));
        }
        let g = Oca::new(
            Kind::General,
            a.states().to_vec(),
            al,
            a.initial().clone(),
            a.finals().iter().cloned(),
            ts.clone(),
        )
        .unwrap();
        let s = strip_zero_tests(&g, g.initial(), &StateId::new("t")).unwrap();
        assert_eq!(s.transitions().len(), ts.len() - 3);
    }

    #[test]
    fn strip_unknown_state() {
        let a = anbn();
        assert!(matches!(
            strip_zero_tests(&a, &StateId::new("nope"), a.initial()),
            Err(Error::UnknownState(_))
        ));
    }

    #[test]
    fn epsilon_adjustment_language() {
        let a = anbn();
        let (adj, e) = epsilon_to_letter(&a);
        assert_eq!(e.token(), "e0");
        assert!(adj.alphabet().contains(&e));
        assert!(!adj.has_epsilon());
        let words = enumerate_language(&adj, 5).unwrap();
        // {aⁿ e0 bⁿ} up to length 5
        assert_eq!(words.len(), 3);
        for w in words {
            assert_eq!(w.iter().filter(|l| **l == e).count(), 1);
        }
    }

    #[test]
    fn epsilon_adjustment_noop_when_free() {
        let a = crate::core::test_fixtures::exactly_ab();
        let (adj, e) = epsilon_to_letter(&a);
        assert_eq!(adj, a);
        assert!(!adj.alphabet().contains(&e));
    }

    #[test]
    fn epsilon_roundtrip_parikh() {
        let a = anbn();
        let (adj, e) = epsilon_to_letter(&a);
        let projected = crate::oracle::enumerate_parikh_free(&adj, 6, Some(&e)).unwrap();
        assert_eq!(projected, enumerate_parikh(&a, 6).unwrap());
    }

    #[test]
    fn skeleton_triples_only_at_top_level() {
        let a = anbn();
        let (sk, triples) = skeleton_nfa(&a, 2).unwrap();
        for t in sk.transitions() {
            if let Some(l) = t.label.as_letter() {
                if triples.contains_key(l) {
                    assert!(t.src.name().contains(",2"));
                    assert!(t.dst.name().contains(",2"));
                }
            }
        }
        assert_eq!(sk.state_count(), a.state_count() * 3);
    }

    #[test]
    fn identity_substitution_preserves_language() {
        let a = anbn();
        let n = nfa_exact_word(
            &[
                a.alphabet().get("a").unwrap().clone(),
                a.alphabet().get("b").unwrap().clone(),
            ],
            a.alphabet(),
        );
        let s = apply_substitution(&n, &Substitution::identity()).unwrap();
        for w in crate::core::test_fixtures::all_words(a.alphabet(), 4) {
            assert_eq!(
                nfa_accepts(&s, &w).unwrap(),
                nfa_accepts(&n, &w).unwrap()
            );
        }
    }

    #[test]
    fn substitution_replaces_letter() {
        // N accepts {a}; σ(a) = NFA for {bc}; result accepts exactly {bc}.
        let al = Alphabet::from_tokens(["a", "b", "c"]).unwrap();
        let a = al.get("a").unwrap().clone();
        let b = al.get("b").unwrap().clone();
        let c = al.get("c").unwrap().clone();
        let n = nfa_exact_word(std::slice::from_ref(&a), &al);
        let img = nfa_exact_word(&[b.clone(), c.clone()], &al);
        let sigma = Substitution::new(BTreeMap::from([(a.clone(), img)])).unwrap();
        let s = apply_substitution(&n, &sigma).unwrap();
        assert!(nfa_accepts(&s, &[b.clone(), c.clone()]).unwrap());
        assert!(!nfa_accepts(&s, std::slice::from_ref(&a)).unwrap());
        assert!(!nfa_accepts(&s, std::slice::from_ref(&b)).unwrap());
        // |result states| within the substitution size bound.
        let t_count = n
            .transitions()
            .iter()
            .filter(|t| t.label.as_letter().is_some_and(|l| sigma.get(l).is_some()))
            .count();
        assert!(s.state_count() <= n.state_count() + t_count * sigma.size());
    }
}
