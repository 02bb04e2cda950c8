//! Letters, ordered alphabets and Parikh vectors.
//!
//! An alphabet carries a fixed total order (lexicographic by token); every
//! [`ParikhVector`] is indexed in that order, and all file output follows it.

use std::fmt;
use std::ops::{Add, AddAssign};
use std::sync::Arc;

use crate::Error;

/// Characters allowed in letter tokens.
fn valid_token_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | ',' | '(' | ')' | '-')
}

/// A single input letter. The token `"eps"` is reserved for ε and is not a
/// valid letter.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(Arc<str>);

impl Letter {
    pub fn new(token: &str) -> Result<Self, Error> {
        if token.is_empty() || token == "eps" || !token.chars().all(valid_token_char) {
            return Err(Error::BadLetterToken(token.to_string()));
        }
        Ok(Letter(Arc::from(token)))
    }

    pub fn token(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Letter({})", self.0)
    }
}

/// An ordered set of letters. Order is lexicographic by token and determines
/// the coordinate of each letter in Parikh vectors.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Alphabet {
    letters: Vec<Letter>,
}

impl Alphabet {
    pub fn new(mut letters: Vec<Letter>) -> Result<Self, Error> {
        letters.sort();
        letters.dedup();
        Ok(Alphabet { letters })
    }

    pub fn from_tokens<'a, I: IntoIterator<Item = &'a str>>(tokens: I) -> Result<Self, Error> {
        let letters = tokens
            .into_iter()
            .map(Letter::new)
            .collect::<Result<Vec<_>, _>>()?;
        Alphabet::new(letters)
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn contains(&self, l: &Letter) -> bool {
        self.index_of(l).is_some()
    }

    /// Coordinate of `l` in alphabet order.
    pub fn index_of(&self, l: &Letter) -> Option<usize> {
        self.letters.binary_search(l).ok()
    }

    pub fn get(&self, token: &str) -> Option<&Letter> {
        self.letters.iter().find(|l| l.token() == token)
    }

    /// Extends the alphabet with a letter, keeping the order. No-op if present.
    pub fn with_letter(&self, l: Letter) -> Alphabet {
        let mut letters = self.letters.clone();
        if !letters.contains(&l) {
            letters.push(l);
            letters.sort();
        }
        Alphabet { letters }
    }

    /// Removes a letter. Used when erasing a fresh ε-placeholder coordinate.
    pub fn without_letter(&self, l: &Letter) -> Alphabet {
        Alphabet {
            letters: self.letters.iter().filter(|x| *x != l).cloned().collect(),
        }
    }

    /// A fresh token `e0`, `e1`, ... not present in the alphabet.
    pub fn fresh_epsilon_token(&self) -> Letter {
        for i in 0.. {
            let tok = format!("e{i}");
            if self.get(&tok).is_none() {
                return Letter::new(&tok).expect("generated token is valid");
            }
        }
        unreachable!()
    }
}

/// Counts per alphabet letter, indexed in alphabet order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParikhVector {
    counts: Vec<u64>,
}

impl ParikhVector {
    pub fn zero(dim: usize) -> Self {
        ParikhVector {
            counts: vec![0; dim],
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        ParikhVector { counts }
    }

    /// Unit vector for coordinate `i`.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut counts = vec![0; dim];
        counts[i] = 1;
        ParikhVector { counts }
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, i: usize) -> u64 {
        self.counts[i]
    }

    /// ‖v‖ = sum of components.
    pub fn norm(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// ‖v‖∞ = max component.
    pub fn inf_norm(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    /// Componentwise ≤.
    pub fn le(&self, other: &ParikhVector) -> bool {
        self.counts.len() == other.counts.len()
            && self.counts.iter().zip(&other.counts).all(|(a, b)| a <= b)
    }

    /// Componentwise difference; `None` unless `other ≤ self`.
    pub fn checked_sub(&self, other: &ParikhVector) -> Option<ParikhVector> {
        if !other.le(self) {
            return None;
        }
        Some(ParikhVector {
            counts: self
                .counts
                .iter()
                .zip(&other.counts)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn scaled(&self, k: u64) -> ParikhVector {
        ParikhVector {
            counts: self.counts.iter().map(|c| c * k).collect(),
        }
    }

    /// Drops coordinate `i` (used to erase a fresh ε-letter coordinate).
    pub fn without_coordinate(&self, i: usize) -> ParikhVector {
        let mut counts = self.counts.clone();
        counts.remove(i);
        ParikhVector { counts }
    }

    /// All vectors of the given dimension with norm ≤ `bound`.
    pub fn all_up_to_norm(dim: usize, bound: u64) -> Vec<ParikhVector> {
        let mut out = Vec::new();
        let mut cur = vec![0u64; dim];
        fn rec(cur: &mut Vec<u64>, i: usize, left: u64, out: &mut Vec<ParikhVector>) {
            if i == cur.len() {
                out.push(ParikhVector::from_counts(cur.clone()));
                return;
            }
            for c in 0..=left {
                cur[i] = c;
                rec(cur, i + 1, left - c, out);
            }
            cur[i] = 0;
        }
        rec(&mut cur, 0, bound, &mut out);
        out
    }
}

impl Add<&ParikhVector> for &ParikhVector {
    type Output = ParikhVector;
    fn add(self, rhs: &ParikhVector) -> ParikhVector {
        assert_eq!(self.counts.len(), rhs.counts.len());
        ParikhVector {
            counts: self
                .counts
                .iter()
                .zip(&rhs.counts)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl AddAssign<&ParikhVector> for ParikhVector {
    fn add_assign(&mut self, rhs: &ParikhVector) {
        assert_eq!(self.counts.len(), rhs.counts.len());
        for (a, b) in self.counts.iter_mut().zip(&rhs.counts) {
            *a += b;
        }
    }
}

impl fmt::Debug for ParikhVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ψ{:?}", self.counts)
    }
}

impl fmt::Display for ParikhVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for c in &self.counts {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{c}")?;
            first = false;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn letter_rejects_reserved_and_bad_tokens() {
        assert!(Letter::new("eps").is_err());
        assert!(Letter::new("").is_err());
        assert!(Letter::new("a b").is_err());
        assert!(Letter::new("a(1,2)").is_ok());
        assert!(Letter::new("c_{1}").is_err());
    }

    #[test]
    fn alphabet_is_sorted_and_indexed() {
        let al = Alphabet::from_tokens(["b", "a", "c"]).unwrap();
        let toks: Vec<_> = al.letters().iter().map(|l| l.token().to_string()).collect();
        assert_eq!(toks, ["a", "b", "c"]);
        assert_eq!(al.index_of(al.get("b").unwrap()), Some(1));
    }

    #[test]
    fn vector_arithmetic() {
        let v = ParikhVector::from_counts(vec![2, 1]);
        let u = ParikhVector::from_counts(vec![1, 1]);
        assert_eq!((&v + &u).counts(), &[3, 2]);
        assert_eq!(v.checked_sub(&u).unwrap().counts(), &[1, 0]);
        assert!(u.checked_sub(&v).is_none());
        assert_eq!(v.norm(), 3);
        assert_eq!(v.inf_norm(), 2);
    }

    #[test]
    fn all_up_to_norm_counts() {
        // dim 2, norm ≤ 2: (0,0),(0,1),(0,2),(1,0),(1,1),(2,0)
        assert_eq!(ParikhVector::all_up_to_norm(2, 2).len(), 6);
    }

    #[test]
    fn parikh_of_word_counts_letters() {
        let a = crate::core::test_fixtures::anbn();
        let w = |s: &str| -> Vec<Letter> {
            s.chars()
                .map(|c| a.alphabet().get(&c.to_string()).unwrap().clone())
                .collect()
        };
        assert_eq!(a.parikh_of_word(&w("abab")).unwrap().counts(), &[2, 2]);
        assert_eq!(a.parikh_of_word(&[]).unwrap().counts(), &[0, 0]);
        assert_eq!(a.parikh_of_word(&w("b")).unwrap().counts(), &[0, 1]);
        let foreign = Letter::new("z").unwrap();
        assert!(matches!(
            a.parikh_of_word(&[foreign]),
            Err(crate::Error::UnknownLetter(_))
        ));
    }
}
