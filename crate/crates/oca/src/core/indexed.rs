//! Integer-indexed view of an automaton for search and DP routines.

use std::collections::HashMap;

use super::automaton::{CounterOp, Oca, StateId};

/// A transition with state and letter indices resolved.
#[derive(Clone, Copy, Debug)]
pub struct ITrans {
    pub src: usize,
    /// Alphabet coordinate of the label, `None` for ε.
    pub letter: Option<usize>,
    pub op: CounterOp,
    pub dst: usize,
}

pub struct Indexed<'a> {
    pub oca: &'a Oca,
    pub initial: usize,
    pub finals: Vec<bool>,
    pub transitions: Vec<ITrans>,
    pub by_src: Vec<Vec<usize>>,
    index: HashMap<&'a StateId, usize>,
}

impl<'a> Indexed<'a> {
    pub fn new(oca: &'a Oca) -> Self {
        let index: HashMap<&StateId, usize> = oca
            .states()
            .iter()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        let n = oca.states().len();
        let mut transitions = Vec::with_capacity(oca.transitions().len());
        let mut by_src = vec![Vec::new(); n];
        for t in oca.transitions() {
            let it = ITrans {
                src: index[&t.src],
                letter: t.label.as_letter().map(|l| {
                    oca.alphabet()
                        .index_of(l)
                        .expect("validated transition letter")
                }),
                op: t.op,
                dst: index[&t.dst],
            };
            by_src[it.src].push(transitions.len());
            transitions.push(it);
        }
        Indexed {
            oca,
            initial: index[oca.initial()],
            finals: oca
                .states()
                .iter()
                .map(|s| oca.finals().contains(s))
                .collect(),
            transitions,
            by_src,
            index,
        }
    }

    pub fn n(&self) -> usize {
        self.oca.states().len()
    }

    pub fn state_index(&self, s: &StateId) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn state(&self, i: usize) -> &StateId {
        &self.oca.states()[i]
    }
}
