//! Configurations, runs and the step relation.

use std::fmt;

use super::automaton::{CounterOp, Oca, StateId, Transition};
use crate::Error;

/// A configuration: control state plus non-negative counter.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config {
    pub state: StateId,
    pub counter: u64,
}

impl Config {
    pub fn new(state: impl Into<StateId>, counter: u64) -> Self {
        Config {
            state: state.into(),
            counter,
        }
    }
}

impl fmt::Debug for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.state, self.counter)
    }
}

/// Successor configuration under a transition. A zero test requires counter 0
/// and leaves it 0; a decrement below 0 is rejected.
pub fn step_semantics(config: &Config, t: &Transition) -> Result<Config, Error> {
    if t.src != config.state {
        return Err(Error::SourceMismatch);
    }
    match t.op.effect() {
        None => {
            if config.counter != 0 {
                Err(Error::ZeroTestFailed)
            } else {
                Ok(Config::new(t.dst.clone(), 0))
            }
        }
        Some(e) => {
            let c = config.counter as i64 + e;
            if c < 0 {
                Err(Error::NegativeCounter)
            } else {
                Ok(Config::new(t.dst.clone(), c as u64))
            }
        }
    }
}

/// An alternating sequence config₀, t₁, config₁, …, t_m, config_m where every
/// step satisfies [`step_semantics`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Run {
    initial: Config,
    steps: Vec<(Transition, Config)>,
}

impl Run {
    pub fn empty(initial: Config) -> Self {
        Run {
            initial,
            steps: Vec::new(),
        }
    }

    /// Builds a run from an initial configuration and transition sequence,
    /// checking every step.
    pub fn from_transitions(
        initial: Config,
        transitions: impl IntoIterator<Item = Transition>,
    ) -> Result<Self, Error> {
        let mut run = Run::empty(initial);
        for t in transitions {
            run.push(t)?;
        }
        Ok(run)
    }

    pub fn push(&mut self, t: Transition) -> Result<(), Error> {
        let next = step_semantics(self.last_config(), &t)?;
        self.steps.push((t, next));
        Ok(())
    }

    pub fn initial_config(&self) -> &Config {
        &self.initial
    }

    pub fn last_config(&self) -> &Config {
        self.steps.last().map(|(_, c)| c).unwrap_or(&self.initial)
    }

    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.steps.iter().map(|(t, _)| t)
    }

    pub fn configs(&self) -> impl Iterator<Item = &Config> {
        std::iter::once(&self.initial).chain(self.steps.iter().map(|(_, c)| c))
    }

    // Attributes of runs.

    pub fn length(&self) -> usize {
        self.steps.len()
    }

    pub fn init_state(&self) -> &StateId {
        &self.initial.state
    }

    pub fn final_state(&self) -> &StateId {
        &self.last_config().state
    }

    pub fn init_counter(&self) -> u64 {
        self.initial.counter
    }

    pub fn final_counter(&self) -> u64 {
        self.last_config().counter
    }

    pub fn high(&self) -> u64 {
        self.configs().map(|c| c.counter).max().unwrap()
    }

    pub fn low(&self) -> u64 {
        self.configs().map(|c| c.counter).min().unwrap()
    }

    pub fn drop(&self) -> u64 {
        self.init_counter() - self.low()
    }

    pub fn height(&self) -> u64 {
        self.high() - self.low()
    }

    pub fn effect(&self) -> i64 {
        self.final_counter() as i64 - self.init_counter() as i64
    }

    /// The induced word (ε labels contribute nothing).
    pub fn induced_word(&self) -> Vec<super::alphabet::Letter> {
        self.transitions()
            .filter_map(|t| t.label.as_letter().cloned())
            .collect()
    }

    /// Replays the run through [`step_semantics`], checking stored
    /// configurations.
    pub fn replay(&self) -> Result<(), Error> {
        let mut cur = self.initial.clone();
        for (t, stored) in &self.steps {
            cur = step_semantics(&cur, t)?;
            if cur != *stored {
                return Err(Error::SourceMismatch);
            }
        }
        Ok(())
    }
}

/// Number of alternations between maximal increment blocks and decrement
/// blocks along a run; internal moves are transparent.
pub fn count_reversals(run: &Run) -> u64 {
    count_reversals_in_ops(run.transitions().map(|t| t.op))
}

/// Reversal count over a bare op sequence.
pub fn count_reversals_in_ops(ops: impl IntoIterator<Item = CounterOp>) -> u64 {
    let mut reversals = 0;
    let mut sign = 0i8;
    for op in ops {
        let s = match op.effect() {
            Some(e) if e > 0 => 1,
            Some(e) if e < 0 => -1,
            _ => 0,
        };
        if s == 0 {
            continue;
        }
        if sign != 0 && s != sign {
            reversals += 1;
        }
        sign = s;
    }
    reversals
}

/// Whether the automaton has an accepting run for `word` within the given
/// counter bound (BFS over configurations interleaved with word positions).
/// Simple-OCA acceptance is (q₀,0) to (q_f,0); NFAs and general OCA accept in
/// any final state with counter 0 for simple/nfa kinds and any counter for
/// general ones reaching a final state... acceptance here is uniformly
/// "final state with counter 0", matching simple-OCA and NFA semantics.
pub fn accepts_within(a: &Oca, word: &[super::alphabet::Letter], counter_cap: u64) -> bool {
    use std::collections::HashSet;
    // Node: (position in word, state index, counter).
    let states: Vec<&StateId> = a.states().iter().collect();
    let idx: std::collections::HashMap<&StateId, usize> =
        states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut seen: HashSet<(usize, usize, u64)> = HashSet::new();
    let start = (0usize, idx[a.initial()], 0u64);
    let mut stack = vec![start];
    seen.insert(start);
    while let Some((pos, si, c)) = stack.pop() {
        if pos == word.len() && c == 0 && a.finals().contains(states[si]) {
            return true;
        }
        for t in a.transitions() {
            if idx[&t.src] != si {
                continue;
            }
            let next_pos = match &t.label {
                super::automaton::Label::Epsilon => pos,
                super::automaton::Label::Letter(l) => {
                    if pos < word.len() && word[pos] == *l {
                        pos + 1
                    } else {
                        continue;
                    }
                }
            };
            let next_c = match t.op.effect() {
                None => {
                    if c != 0 {
                        continue;
                    }
                    0
                }
                Some(e) => {
                    let nc = c as i64 + e;
                    if nc < 0 || nc as u64 > counter_cap {
                        continue;
                    }
                    nc as u64
                }
            };
            let node = (next_pos, idx[&t.dst], next_c);
            if seen.insert(node) {
                stack.push(node);
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::alphabet::Alphabet;
    use crate::core::automaton::Label;

    fn t(src: &str, op: CounterOp, dst: &str) -> Transition {
        Transition::new(src, Label::Epsilon, op, dst)
    }

    #[test]
    fn step_arithmetic() {
        let al = Alphabet::from_tokens(["a"]).unwrap();
        let a = al.get("a").unwrap().clone();
        let tr = Transition::new("p", Label::Letter(a), CounterOp::Dec, "q");
        let c = step_semantics(&Config::new("p", 2), &tr).unwrap();
        assert_eq!(c, Config::new("q", 1));
    }

    #[test]
    fn step_negative_counter() {
        let tr = t("p", CounterOp::Dec, "q");
        assert!(matches!(
            step_semantics(&Config::new("p", 0), &tr),
            Err(Error::NegativeCounter)
        ));
    }

    #[test]
    fn step_zero_test() {
        let tr = t("p", CounterOp::ZeroTest, "q");
        assert!(matches!(
            step_semantics(&Config::new("p", 1), &tr),
            Err(Error::ZeroTestFailed)
        ));
        assert_eq!(
            step_semantics(&Config::new("p", 0), &tr).unwrap(),
            Config::new("q", 0)
        );
    }

    #[test]
    fn step_source_mismatch() {
        let tr = t("p", CounterOp::Noop, "q");
        assert!(matches!(
            step_semantics(&Config::new("q", 0), &tr),
            Err(Error::SourceMismatch)
        ));
    }

    #[test]
    fn reversal_counting() {
        use CounterOp::*;
        assert_eq!(count_reversals_in_ops([Inc, Inc, Dec, Inc]), 2);
        assert_eq!(count_reversals_in_ops([Inc, Inc, Inc]), 0);
        assert_eq!(count_reversals_in_ops([Inc, Noop, Dec, Noop, Dec]), 1);
        assert_eq!(count_reversals_in_ops([]), 0);
        assert_eq!(count_reversals_in_ops([Dec, Inc, Dec]), 2);
    }

    #[test]
    fn run_attributes() {
        use CounterOp::*;
        let run = Run::from_transitions(
            Config::new("p", 1),
            [t("p", Inc, "p"), t("p", Inc, "p"), t("p", Dec, "p")],
        )
        .unwrap();
        assert_eq!(run.length(), 3);
        assert_eq!(run.high(), 3);
        assert_eq!(run.low(), 1);
        assert_eq!(run.drop(), 0);
        assert_eq!(run.height(), 2);
        assert_eq!(run.effect(), 1);
        run.replay().unwrap();
    }
}
