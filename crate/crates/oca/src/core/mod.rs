//! Automata data model, run semantics, extended-OCA expansion and elementary
//! Parikh/reversal utilities shared by every construction.
//!
//! Counter values live in a 64-bit natural; each construction asserts its own
//! a-priori counter bound and fails loudly on overflow.

pub mod alphabet;
pub mod automaton;
pub(crate) mod indexed;
pub mod run;

pub use alphabet::{Alphabet, Letter, ParikhVector};
pub use automaton::{expand_extended, CounterOp, Kind, Label, Oca, StateId, Transition};
pub use run::{accepts_within, count_reversals, count_reversals_in_ops, step_semantics, Config, Run};

pub mod test_fixtures {
    //! Small automata shared by tests across the crate.

    use super::*;

    /// The {aⁿbⁿ} automaton: a-loop incrementing on `s`, ε bridge to `t`,
    /// b-loop decrementing on `t`. Accepts aⁿbⁿ for n ≥ 0 (including ε).
    pub fn anbn() -> Oca {
        let al = Alphabet::from_tokens(["a", "b"]).unwrap();
        let a = al.get("a").unwrap().clone();
        let b = al.get("b").unwrap().clone();
        Oca::new(
            Kind::Simple,
            vec![StateId::new("s"), StateId::new("t")],
            al,
            StateId::new("s"),
            [StateId::new("t")],
            vec![
                Transition::new("s", Label::Letter(a), CounterOp::Inc, "s"),
                Transition::new("s", Label::Epsilon, CounterOp::Noop, "t"),
                Transition::new("t", Label::Letter(b), CounterOp::Dec, "t"),
            ],
        )
        .unwrap()
    }

    /// OCA accepting exactly {ab} via Noop transitions.
    pub fn exactly_ab() -> Oca {
        let al = Alphabet::from_tokens(["a", "b"]).unwrap();
        let a = al.get("a").unwrap().clone();
        let b = al.get("b").unwrap().clone();
        Oca::new(
            Kind::Simple,
            vec![StateId::new("p0"), StateId::new("p1"), StateId::new("p2")],
            al,
            StateId::new("p0"),
            [StateId::new("p2")],
            vec![
                Transition::new("p0", Label::Letter(a), CounterOp::Noop, "p1"),
                Transition::new("p1", Label::Letter(b), CounterOp::Noop, "p2"),
            ],
        )
        .unwrap()
    }

    /// Deterministic ε-free random simple OCA (xorshift-seeded): `n_trans`
    /// transitions with uniform letter, operation and endpoints.
    pub fn random_simple_oca(seed: u64, n_states: usize, n_letters: usize, n_trans: usize) -> Oca {
        let mut s = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            s
        };
        let letters: Vec<String> = (0..n_letters)
            .map(|i| char::from(b'a' + i as u8).to_string())
            .collect();
        let al = Alphabet::from_tokens(letters.iter().map(|s| s.as_str())).unwrap();
        let states: Vec<StateId> = (0..n_states)
            .map(|i| StateId::new(format!("n{i}")))
            .collect();
        let mut transitions = Vec::new();
        for _ in 0..n_trans {
            let src = states[(next() % n_states as u64) as usize].clone();
            let dst = states[(next() % n_states as u64) as usize].clone();
            let letter = al.letters()[(next() % n_letters as u64) as usize].clone();
            let op = match next() % 3 {
                0 => CounterOp::Inc,
                1 => CounterOp::Dec,
                _ => CounterOp::Noop,
            };
            transitions.push(Transition::new(src, Label::Letter(letter), op, dst));
        }
        let fin = states[(next() % n_states as u64) as usize].clone();
        Oca::new(
            Kind::Simple,
            states.clone(),
            al,
            states[0].clone(),
            [fin],
            transitions,
        )
        .unwrap()
    }

    /// Words over {a,b} of length ≤ `max_len`, shortest first.
    pub fn all_words(alphabet: &Alphabet, max_len: usize) -> Vec<Vec<Letter>> {
        let mut out: Vec<Vec<Letter>> = vec![Vec::new()];
        let mut layer: Vec<Vec<Letter>> = vec![Vec::new()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &layer {
                for l in alphabet.letters() {
                    let mut w2 = w.clone();
                    w2.push(l.clone());
                    next.push(w2);
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }
}
