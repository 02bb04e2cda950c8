//! Linear and semilinear sets in base-plus-periods representation, their text
//! format, and the semilinear-to-NFA conversion.
//!
//! Text format, one line per component, integers in alphabet order:
//!
//! ```text
//! lin base= 0 0 ; periods= 1 1 | 2 0
//! lin base= 1 0 ; periods=
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::core::{Alphabet, CounterOp, Kind, Label, Oca, ParikhVector, StateId, Transition};
use crate::Error;

/// Lin(b, P) = { b + λ₁p₁ + … + λᵣpᵣ : λᵢ ∈ ℕ }.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct LinearSet {
    pub base: ParikhVector,
    pub periods: Vec<ParikhVector>,
}

impl LinearSet {
    pub fn new(base: ParikhVector, mut periods: Vec<ParikhVector>) -> Self {
        periods.retain(|p| !p.is_zero());
        periods.sort();
        periods.dedup();
        LinearSet { base, periods }
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Membership by bounded search over period multiplicities.
    pub fn contains(&self, v: &ParikhVector) -> bool {
        fn rec(rest: &ParikhVector, periods: &[ParikhVector]) -> bool {
            if rest.is_zero() {
                return true;
            }
            let Some((p, tail)) = periods.split_first() else {
                return false;
            };
            let mut cur = rest.clone();
            loop {
                if rec(&cur, tail) {
                    return true;
                }
                match cur.checked_sub(p) {
                    Some(next) => cur = next,
                    None => return false,
                }
            }
        }
        match v.checked_sub(&self.base) {
            Some(rest) => rec(&rest, &self.periods),
            None => false,
        }
    }

    /// All elements with norm ≤ `bound`.
    pub fn elements_up_to(&self, bound: u64) -> BTreeSet<ParikhVector> {
        let mut out = BTreeSet::new();
        if self.base.norm() > bound {
            return out;
        }
        let mut stack = vec![self.base.clone()];
        let mut seen = BTreeSet::new();
        seen.insert(self.base.clone());
        while let Some(v) = stack.pop() {
            out.insert(v.clone());
            for p in &self.periods {
                let next = &v + p;
                if next.norm() <= bound && seen.insert(next.clone()) {
                    stack.push(next);
                }
            }
        }
        out
    }
}

/// A finite union of linear sets sharing one dimension.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct SemilinearSet {
    pub components: Vec<LinearSet>,
}

impl SemilinearSet {
    pub fn new(mut components: Vec<LinearSet>) -> Result<Self, Error> {
        if let Some(first) = components.first() {
            let d = first.dim();
            if components.iter().any(|c| c.dim() != d) {
                return Err(Error::DimensionMismatch);
            }
        }
        components.sort();
        components.dedup();
        Ok(SemilinearSet { components })
    }

    pub fn empty() -> Self {
        SemilinearSet {
            components: Vec::new(),
        }
    }

    pub fn contains(&self, v: &ParikhVector) -> bool {
        self.components.iter().any(|c| c.contains(v))
    }

    pub fn elements_up_to(&self, bound: u64) -> BTreeSet<ParikhVector> {
        let mut out = BTreeSet::new();
        for c in &self.components {
            out.extend(c.elements_up_to(bound));
        }
        out
    }

    /// Erases one coordinate everywhere (dropping periods that become zero).
    pub fn without_coordinate(&self, i: usize) -> SemilinearSet {
        let components = self
            .components
            .iter()
            .map(|c| {
                LinearSet::new(
                    c.base.without_coordinate(i),
                    c.periods
                        .iter()
                        .map(|p| p.without_coordinate(i))
                        .collect(),
                )
            })
            .collect();
        SemilinearSet::new(components).expect("projection keeps dimensions equal")
    }
}

pub fn print_semilinear(s: &SemilinearSet) -> String {
    let mut out = String::new();
    for c in &s.components {
        write!(out, "lin base= {}", c.base).unwrap();
        write!(out, " ; periods=").unwrap();
        for (i, p) in c.periods.iter().enumerate() {
            if i > 0 {
                write!(out, " |").unwrap();
            }
            write!(out, " {p}").unwrap();
        }
        writeln!(out).unwrap();
    }
    out
}

pub fn parse_semilinear(input: &str) -> Result<SemilinearSet, Error> {
    let mut components = Vec::new();
    for (i, raw) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse {
            line: line_no,
            msg: msg.to_string(),
        };
        let rest = line
            .trim()
            .strip_prefix("lin")
            .ok_or_else(|| err("expected: lin base= ... ; periods= ..."))?;
        let (base_part, period_part) = rest
            .split_once(';')
            .ok_or_else(|| err("missing ';' between base and periods"))?;
        let base_nums = base_part
            .trim()
            .strip_prefix("base=")
            .ok_or_else(|| err("missing base="))?;
        let base = parse_vector(base_nums).map_err(|m| err(&m))?;
        let periods_nums = period_part
            .trim()
            .strip_prefix("periods=")
            .ok_or_else(|| err("missing periods="))?;
        let mut periods = Vec::new();
        for chunk in periods_nums.split('|') {
            if chunk.trim().is_empty() {
                continue;
            }
            let p = parse_vector(chunk).map_err(|m| err(&m))?;
            if p.dim() != base.dim() {
                return Err(err("period dimension differs from base"));
            }
            periods.push(p);
        }
        components.push(LinearSet::new(base, periods));
    }
    SemilinearSet::new(components)
}

fn parse_vector(s: &str) -> Result<ParikhVector, String> {
    let mut counts = Vec::new();
    for tok in s.split_whitespace() {
        counts.push(tok.parse::<u64>().map_err(|_| format!("bad number {tok:?}"))?);
    }
    Ok(ParikhVector::from_counts(counts))
}

/// NFA whose Parikh image is exactly the given semilinear set: per linear set
/// a word path realizing the base (letters in alphabet order) into an
/// accepting state that carries one cycle per period.
pub fn semilinear_to_nfa(s: &SemilinearSet, alphabet: &Alphabet) -> Result<Oca, Error> {
    for c in &s.components {
        if c.dim() != alphabet.len() {
            return Err(Error::DimensionMismatch);
        }
    }
    let init = StateId::new("sl:init");
    let mut states = vec![init.clone()];
    let mut transitions = Vec::new();
    let mut finals = Vec::new();

    let vector_word = |v: &ParikhVector| -> Vec<Label> {
        let mut out = Vec::new();
        for (i, l) in alphabet.letters().iter().enumerate() {
            for _ in 0..v.get(i) {
                out.push(Label::Letter(l.clone()));
            }
        }
        out
    };

    for (ci, c) in s.components.iter().enumerate() {
        // Base path; the shared initial state doubles as its start.
        let mut prev = init.clone();
        let base_word = vector_word(&c.base);
        let accept = if base_word.is_empty() {
            let s0 = StateId::new(format!("sl:{ci}:acc"));
            states.push(s0.clone());
            transitions.push(Transition::new(
                init.clone(),
                Label::Epsilon,
                CounterOp::ZeroTest,
                s0.clone(),
            ));
            s0
        } else {
            for (j, l) in base_word.iter().enumerate() {
                let next = StateId::new(format!("sl:{ci}:b{}", j + 1));
                states.push(next.clone());
                transitions.push(Transition::new(
                    prev.clone(),
                    l.clone(),
                    CounterOp::ZeroTest,
                    next.clone(),
                ));
                prev = next;
            }
            prev
        };
        finals.push(accept.clone());
        for (pi, p) in c.periods.iter().enumerate() {
            let word = vector_word(p);
            let mut cur = accept.clone();
            for (j, l) in word.iter().enumerate() {
                let next = StateId::new(format!("sl:{ci}:p{pi}:{}", j + 1));
                states.push(next.clone());
                transitions.push(Transition::new(
                    cur.clone(),
                    l.clone(),
                    CounterOp::ZeroTest,
                    next.clone(),
                ));
                cur = next;
            }
            transitions.push(Transition::new(
                cur,
                Label::Epsilon,
                CounterOp::ZeroTest,
                accept.clone(),
            ));
        }
    }
    Oca::new(
        Kind::Nfa,
        states,
        alphabet.clone(),
        init,
        finals,
        transitions,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{nfa_accepts, nfa_parikh_up_to};

    fn v(c: &[u64]) -> ParikhVector {
        ParikhVector::from_counts(c.to_vec())
    }

    #[test]
    fn linear_membership() {
        let l = LinearSet::new(v(&[0, 0]), vec![v(&[1, 1])]);
        assert!(l.contains(&v(&[3, 3])));
        assert!(!l.contains(&v(&[2, 1])));
    }

    #[test]
    fn format_round_trip() {
        let s = SemilinearSet::new(vec![
            LinearSet::new(v(&[0, 0]), vec![v(&[1, 1]), v(&[2, 0])]),
            LinearSet::new(v(&[1, 0]), vec![]),
        ])
        .unwrap();
        let text = print_semilinear(&s);
        let back = parse_semilinear(&text).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn nfa_of_point_accepts_only_eps() {
        let al = Alphabet::from_tokens(["a", "b"]).unwrap();
        let s = SemilinearSet::new(vec![LinearSet::new(v(&[0, 0]), vec![])]).unwrap();
        let n = semilinear_to_nfa(&s, &al).unwrap();
        assert!(nfa_accepts(&n, &[]).unwrap());
        assert!(!nfa_accepts(&n, &[al.get("a").unwrap().clone()]).unwrap());
    }

    #[test]
    fn nfa_of_line_matches_to_norm_6() {
        let al = Alphabet::from_tokens(["a", "b"]).unwrap();
        let s =
            SemilinearSet::new(vec![LinearSet::new(v(&[1, 0]), vec![v(&[0, 1])])]).unwrap();
        let n = semilinear_to_nfa(&s, &al).unwrap();
        let got = nfa_parikh_up_to(&n, 6).unwrap();
        let expect = s.elements_up_to(6);
        assert_eq!(got, expect);
    }

    #[test]
    fn nfa_state_count_formula() {
        let al = Alphabet::from_tokens(["a", "b"]).unwrap();
        let s = SemilinearSet::new(vec![
            LinearSet::new(v(&[2, 1]), vec![v(&[1, 1])]),
            LinearSet::new(v(&[0, 1]), vec![v(&[2, 0]), v(&[0, 3])]),
        ])
        .unwrap();
        let n = semilinear_to_nfa(&s, &al).unwrap();
        let expected: u64 = s
            .components
            .iter()
            .map(|c| c.base.norm() + c.periods.iter().map(|p| p.norm()).sum::<u64>())
            .sum::<u64>()
            + 1;
        assert_eq!(n.state_count() as u64, expected);
    }

    #[test]
    fn round_trip_parikh_window() {
        let al = Alphabet::from_tokens(["a", "b"]).unwrap();
        let s = SemilinearSet::new(vec![
            LinearSet::new(v(&[0, 0]), vec![v(&[1, 1])]),
            LinearSet::new(v(&[3, 0]), vec![v(&[0, 2])]),
        ])
        .unwrap();
        let n = semilinear_to_nfa(&s, &al).unwrap();
        assert_eq!(nfa_parikh_up_to(&n, 8).unwrap(), s.elements_up_to(8));
    }
}
