//! Line-oriented text format for automata and substitutions.
//!
//! ```text
//! # comment
//! kind simple
//! alphabet a b
//! state s
//! state t
//! initial s
//! final t
//! trans s a inc s
//! trans s eps noop t
//! trans t b dec t
//! ```
//!
//! Counter operations are `inc`, `dec`, `noop`, `zero` or a signed integer
//! (extended OCA only). Output is deterministic: states and transitions are
//! sorted so files diff cleanly.

use std::fmt::Write as _;

use crate::core::{Alphabet, CounterOp, Kind, Label, Oca, StateId, Transition};
use crate::Error;

pub fn parse_oca(input: &str) -> Result<Oca, Error> {
    let mut kind = None;
    let mut alphabet = None;
    let mut states = Vec::new();
    let mut initial = None;
    let mut finals = Vec::new();
    let mut raw_transitions: Vec<(usize, Vec<String>)> = Vec::new();

    let err = |line: usize, msg: &str| Error::Parse {
        line,
        msg: msg.to_string(),
    };

    for (i, raw) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let mut tokens = line.split_whitespace();
        let Some(head) = tokens.next() else { continue };
        let rest: Vec<String> = tokens.map(|s| s.to_string()).collect();
        match head {
            "kind" => {
                let k = match rest.as_slice() {
                    [k] => k.as_str(),
                    _ => return Err(err(line_no, "expected: kind <simple|general|extended|nfa>")),
                };
                kind = Some(match k {
                    "simple" => Kind::Simple,
                    "general" => Kind::General,
                    "extended" => Kind::Extended,
                    "nfa" => Kind::Nfa,
                    _ => return Err(err(line_no, "unknown kind")),
                });
            }
            "alphabet" => {
                alphabet = Some(
                    Alphabet::from_tokens(rest.iter().map(|s| s.as_str()))
                        .map_err(|e| err(line_no, &e.to_string()))?,
                );
            }
            "state" => match rest.as_slice() {
                [s] => states.push(StateId::new(s)),
                _ => return Err(err(line_no, "expected: state <id>")),
            },
            "initial" => match rest.as_slice() {
                [s] => initial = Some(StateId::new(s)),
                _ => return Err(err(line_no, "expected: initial <id>")),
            },
            "final" => match rest.as_slice() {
                [s] => finals.push(StateId::new(s)),
                _ => return Err(err(line_no, "expected: final <id>")),
            },
            "trans" => {
                if rest.len() != 4 {
                    return Err(err(line_no, "expected: trans <src> <letter|eps> <op> <dst>"));
                }
                raw_transitions.push((line_no, rest));
            }
            _ => return Err(err(line_no, "unknown directive")),
        }
    }

    let kind = kind.ok_or_else(|| err(0, "missing kind"))?;
    let alphabet = alphabet.ok_or_else(|| err(0, "missing alphabet"))?;
    let initial = initial.ok_or_else(|| err(0, "missing initial state"))?;

    let mut transitions = Vec::new();
    for (line_no, rest) in raw_transitions {
        let label = if rest[1] == "eps" {
            Label::Epsilon
        } else {
            let l = alphabet
                .get(&rest[1])
                .ok_or_else(|| err(line_no, &format!("letter {} not in alphabet", rest[1])))?;
            Label::Letter(l.clone())
        };
        let op = match rest[2].as_str() {
            "inc" => CounterOp::Inc,
            "dec" => CounterOp::Dec,
            "noop" => CounterOp::Noop,
            "zero" => CounterOp::ZeroTest,
            z => CounterOp::Add(
                z.parse::<i64>()
                    .map_err(|_| err(line_no, "bad counter op"))?,
            ),
        };
        transitions.push(Transition::new(
            StateId::new(&rest[0]),
            label,
            op,
            StateId::new(&rest[3]),
        ));
    }

    Oca::new(kind, states, alphabet, initial, finals, transitions)
}

pub fn print_oca(a: &Oca) -> String {
    let a = a.normalized();
    let mut out = String::new();
    writeln!(out, "kind {}", a.kind()).unwrap();
    let mut line = String::from("alphabet");
    for l in a.alphabet().letters() {
        write!(line, " {l}").unwrap();
    }
    writeln!(out, "{line}").unwrap();
    for s in a.states() {
        writeln!(out, "state {s}").unwrap();
    }
    writeln!(out, "initial {}", a.initial()).unwrap();
    for f in a.finals() {
        writeln!(out, "final {f}").unwrap();
    }
    for t in a.transitions() {
        writeln!(out, "trans {} {} {} {}", t.src, t.label, t.op, t.dst).unwrap();
    }
    out
}

/// Parses `sub <letter> -> <path>` lines into (letter token, path) pairs.
/// Resolving the path and loading the NFA is left to the caller.
pub fn parse_substitution_lines(input: &str) -> Result<Vec<(String, String)>, Error> {
    let mut out = Vec::new();
    for (i, raw) in input.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        match tokens.as_slice() {
            ["sub", letter, "->", path] => out.push((letter.to_string(), path.to_string())),
            _ => {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "expected: sub <letter> -> <path>".to_string(),
                })
            }
        }
    }
    Ok(out)
}
