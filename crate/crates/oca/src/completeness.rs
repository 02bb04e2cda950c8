//! The completeness pipeline: a family of hard extended OCA, flattening of
//! reversal-bounded simple OCA to reversal-bounded acyclic automata (RBA)
//! with a regular substitution, the loop-counting normalization backed by the
//! Dyck removable-subset argument, and the final reduction onto the hard family.
//!
//! The hard automaton H_n has states q₁…q_n, on each state a loop per weight
//! k ∈ [1,n] adding (−1)^{i+1}·k, and zero-effect forward edges; a
//! polynomial-size Parikh-equivalent NFA family for (H_n) would yield one for
//! all OCA.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::core::{
    Alphabet, CounterOp, Kind, Label, Letter, Oca, StateId, Transition,
};
use crate::reduction::Substitution;
use crate::Error;

/// A reversal-bounded acyclic automaton: an extended OCA that is acyclic up
/// to self-loops, carrying a total-order witness on states under which every
/// non-loop transition strictly increases, and whose loops on any one state
/// are all non-decrementing or all non-incrementing.
#[derive(Clone, Debug)]
pub struct Rba {
    oca: Oca,
    order: Vec<StateId>,
}

impl Rba {
    pub fn new(oca: Oca, order: Vec<StateId>) -> Result<Self, Error> {
        let rba = Rba { oca, order };
        rba.validate()?;
        Ok(rba)
    }

    pub fn oca(&self) -> &Oca {
        &self.oca
    }

    pub fn order(&self) -> &[StateId] {
        &self.order
    }

    /// Re-checks the stored witness and the loop sign discipline.
    pub fn validate(&self) -> Result<(), Error> {
        if self.oca.kind() != Kind::Extended {
            return Err(Error::NotRba("RBA must be an extended OCA"));
        }
        let pos: HashMap<&StateId, usize> = self
            .order
            .iter()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        for s in self.oca.states() {
            if !pos.contains_key(s) {
                return Err(Error::NotRba("order witness misses a state"));
            }
        }
        let mut signs: BTreeMap<&StateId, (bool, bool)> = BTreeMap::new();
        for t in self.oca.transitions() {
            if t.src == t.dst {
                let e = t.op.effect().unwrap_or(0);
                let entry = signs.entry(&t.src).or_insert((false, false));
                if e > 0 {
                    entry.0 = true;
                }
                if e < 0 {
                    entry.1 = true;
                }
            } else if pos[&t.src] >= pos[&t.dst] {
                return Err(Error::NotRba("non-loop transition does not increase the order"));
            }
        }
        if signs.values().any(|&(pos, neg)| pos && neg) {
            return Err(Error::NotRba("state carries loops of both signs"));
        }
        Ok(())
    }

    /// Only self-loops touch the counter.
    pub fn is_loop_counting(&self) -> bool {
        self.oca
            .transitions()
            .iter()
            .all(|t| t.src == t.dst || t.op.effect() == Some(0))
    }
}

/// Token of a hard-automaton loop letter.
fn hard_loop_letter(i: u64, k: u64) -> Letter {
    Letter::new(&format!("a({i},{k})")).expect("valid token")
}

/// Token of a hard-automaton forward-edge letter.
fn hard_cross_letter(i: u64, j: u64) -> Letter {
    Letter::new(&format!("c({i},{j})")).expect("valid token")
}

/// The hard extended OCA H_n: states q₁…q_n, loops a(i,k) with counter
/// effect (−1)^{i+1}·k for k ∈ [1,n], and zero-effect edges c(i,j) for i < j.
pub fn hard_automaton(n: u64) -> Result<Oca, Error> {
    if n == 0 {
        return Err(Error::KindViolation("hard_automaton needs n ≥ 1"));
    }
    let st = |i: u64| StateId::new(format!("q{i}"));
    let states: Vec<StateId> = (1..=n).map(st).collect();
    let mut letters = Vec::new();
    for i in 1..=n {
        for k in 1..=n {
            letters.push(hard_loop_letter(i, k));
        }
        for j in (i + 1)..=n {
            letters.push(hard_cross_letter(i, j));
        }
    }
    let alphabet = Alphabet::new(letters)?;
    let mut transitions = Vec::new();
    for i in 1..=n {
        let sign: i64 = if i % 2 == 1 { 1 } else { -1 };
        for k in 1..=n {
            transitions.push(Transition::new(
                st(i),
                Label::Letter(hard_loop_letter(i, k)),
                CounterOp::Add(sign * k as i64),
                st(i),
            ));
        }
        for j in (i + 1)..=n {
            transitions.push(Transition::new(
                st(i),
                Label::Letter(hard_cross_letter(i, j)),
                CounterOp::Add(0),
                st(j),
            ));
        }
    }
    Oca::new(
        Kind::Extended,
        states,
        alphabet,
        st(1),
        [st(n)],
        transitions,
    )
}

/// The two size figures for H_n: the reported figure n+Σ_{k=1}^n (k−1) =
/// ½n(n+1), and the literal per-transition charge sum n + n·Σ_{k=1}^n (k−1),
/// which differ for n ≥ 2; both are surfaced.
pub fn hard_automaton_sizes(n: u64) -> (u64, u64) {
    let per_state: u64 = (1..=n).map(|k| k - 1).sum();
    (n + per_state, n + n * per_state)
}

/// A Dyck sequence: integers with non-negative prefix sums, magnitudes ≤ N
/// and at most r alternations between positive and negative entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyckSequence {
    values: Vec<i64>,
    r: u64,
    n_bound: u64,
}

impl DyckSequence {
    pub fn new(values: Vec<i64>, r: u64, n_bound: u64) -> Result<Self, Error> {
        let mut sum = 0i64;
        for &x in &values {
            sum += x;
            if sum < 0 {
                return Err(Error::NotDyck);
            }
            if x.unsigned_abs() > n_bound {
                return Err(Error::NotDyck);
            }
        }
        if alternations(&values) > r {
            return Err(Error::NotDyck);
        }
        Ok(DyckSequence { values, r, n_bound })
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn n_bound(&self) -> u64 {
        self.n_bound
    }

    pub fn sum(&self) -> i64 {
        self.values.iter().sum()
    }

    /// |I| may not exceed 2r(2N²+N).
    pub fn removal_bound(&self) -> u64 {
        let n = self.n_bound;
        2 * self.r * (2 * n * n + n)
    }
}

/// Sign alternations over the nonzero entries.
pub fn alternations(values: &[i64]) -> u64 {
    let mut count = 0;
    let mut sign = 0i8;
    for &x in values {
        let s = match x.cmp(&0) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => -1,
            std::cmp::Ordering::Equal => continue,
        };
        if sign != 0 && s != sign {
            count += 1;
        }
        sign = s;
    }
    count
}

/// Checks the three defining conditions of a removable subset.
pub fn is_removable(x: &DyckSequence, index_set: &BTreeSet<usize>) -> bool {
    if index_set.iter().any(|&i| i >= x.values.len()) {
        return false;
    }
    let mut removed_sum = 0i64;
    let mut prefix = 0i64;
    for (i, &v) in x.values.iter().enumerate() {
        if index_set.contains(&i) {
            removed_sum += v;
        } else {
            prefix += v;
            if prefix < 0 {
                return false;
            }
        }
    }
    removed_sum == x.sum() && index_set.len() as u64 <= x.removal_bound()
}

/// A removable subset I (0-based indices): removing the indexed entries
/// leaves a Dyck sequence, the removed entries carry the full sum, and
/// |I| ≤ 2r(2N²+N). Requires the sum to lie in [0, N]. Implements the
/// peak-descent with switchable value pairs and falls back to exhaustive
/// search on short sequences; every returned set is revalidated.
pub fn removable_subset(x: &DyckSequence) -> Result<BTreeSet<usize>, Error> {
    let sum = x.sum();
    if sum < 0 || sum as u64 > x.n_bound {
        return Err(Error::SumOutOfRange);
    }
    if let Some(i) = descend(x.values(), x.removal_bound(), x.n_bound) {
        if is_removable(x, &i) {
            return Ok(i);
        }
    }
    // Exhaustive fallback for short sequences.
    let n = x.values.len();
    if n <= 22 {
        for mask in 0u64..(1 << n) {
            if (mask.count_ones() as u64) > x.removal_bound() {
                continue;
            }
            let set: BTreeSet<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            if is_removable(x, &set) {
                return Ok(set);
            }
        }
    }
    Err(Error::NotDyck)
}

fn descend(values: &[i64], bound: u64, n_bound: u64) -> Option<BTreeSet<usize>> {
    if values.len() as u64 <= bound {
        return Some((0..values.len()).collect());
    }
    let n = n_bound as i64;
    // Partial-sum peak.
    let mut sums = Vec::with_capacity(values.len());
    let mut s = 0i64;
    for &v in values {
        s += v;
        sums.push(s);
    }
    let peak = (0..values.len()).max_by_key(|&i| sums[i])?;
    if sums[peak] <= 2 * n * n + n {
        return None;
    }
    // A positive value u before the peak and a negative value v after it,
    // frequent enough to switch |v| copies of u against u copies of v.
    let mut pos_count: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &v) in values.iter().enumerate().take(peak + 1) {
        if v > 0 {
            pos_count.entry(v).or_default().push(i);
        }
    }
    let mut neg_count: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &v) in values.iter().enumerate().skip(peak + 1) {
        if v < 0 {
            neg_count.entry(v).or_default().push(i);
        }
    }
    let (&u, u_positions) = pos_count.iter().max_by_key(|(_, v)| v.len())?;
    let (&v, v_positions) = neg_count.iter().max_by_key(|(_, v)| v.len())?;
    let need_u = v.unsigned_abs() as usize;
    let need_v = u as usize;
    if u_positions.len() < need_u || v_positions.len() < need_v {
        return None;
    }
    // Remove the latest u's before the peak and the earliest v's after it.
    let mut removed: BTreeSet<usize> = BTreeSet::new();
    removed.extend(u_positions.iter().rev().take(need_u));
    removed.extend(v_positions.iter().take(need_v));
    let mut shorter = Vec::with_capacity(values.len() - removed.len());
    let mut back_map = Vec::with_capacity(values.len() - removed.len());
    let mut prefix = 0i64;
    for (i, &val) in values.iter().enumerate() {
        if removed.contains(&i) {
            continue;
        }
        prefix += val;
        if prefix < 0 {
            return None;
        }
        shorter.push(val);
        back_map.push(i);
    }
    let inner = descend(&shorter, bound, n_bound)?;
    Some(inner.into_iter().map(|i| back_map[i]).collect())
}

/// Fresh loop-letter for the flattening construction; `p` is the state's
/// index in the source automaton, `z` the counter effect.
fn flat_loop_letter(p: usize, z: i64) -> Letter {
    Letter::new(&format!("lp({p},{z})")).expect("valid token")
}

/// Walk-level reversal boundedness: no walk contains r+1 sign alternations.
/// Decided exactly on the counter-blind walk graph.
fn walk_reversal_bounded(a: &Oca, r: u64) -> bool {
    // Nodes: (state, sign phase, reversals so far), capped at r.
    let ix = crate::core::indexed::Indexed::new(a);
    let mut seen = BTreeSet::new();
    let mut stack = Vec::new();
    for s in 0..ix.n() {
        let node = (s, 0i8, 0u64);
        if seen.insert(node) {
            stack.push(node);
        }
    }
    while let Some((s, sign, revs)) = stack.pop() {
        for &ti in &ix.by_src[s] {
            let t = ix.transitions[ti];
            let e = t.op.effect().unwrap_or(0);
            let ns = match e.cmp(&0) {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => -1,
                std::cmp::Ordering::Equal => sign,
            };
            let nrevs = if sign != 0 && ns != sign && e != 0 {
                revs + 1
            } else {
                revs
            };
            if nrevs > r {
                return false;
            }
            let node = (t.dst, ns, nrevs);
            if seen.insert(node) {
                stack.push(node);
            }
        }
    }
    true
}

/// Decomposes an r-reversal-bounded simple OCA into an RBA and a regular
/// substitution with Ψ(σ(L(B))) = Ψ(L(A)): the RBA simulates a phase
/// skeleton of length ≤ B = 2n²+n per phase, with fresh loop letters a_{p,z}
/// standing for reversal-free p-cycles of effect z, which σ maps to the
/// cycle NFAs B_{p,z}.
pub fn flatten_to_rba(a: &Oca, r: u64) -> Result<(Rba, Substitution), Error> {
    if a.kind() != Kind::Simple {
        return Err(Error::KindViolation("flatten_to_rba expects a simple OCA"));
    }
    if !walk_reversal_bounded(a, r) {
        return Err(Error::NotReversalBounded);
    }
    let n = a.state_count() as u64;
    let b_len = 2 * n * n + n;
    let st = |q: &StateId, i: u64, j: u64| StateId::new(format!("rba:({q},{i},{j})"));
    let state_idx: HashMap<&StateId, usize> = a
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();

    let mut alphabet = a.alphabet().clone();
    for p in 0..a.state_count() {
        for z in -(n as i64)..=(n as i64) {
            alphabet = alphabet.with_letter(flat_loop_letter(p, z));
        }
    }

    let mut states = Vec::new();
    let mut order = Vec::new();
    for j in 0..=r {
        for i in 0..=b_len {
            for q in a.states() {
                let s = st(q, i, j);
                states.push(s.clone());
                order.push(s);
            }
        }
    }
    let mut transitions = Vec::new();
    for j in 0..=r {
        let phase_positive = j % 2 == 0;
        for t in a.transitions() {
            let eff = t.op.effect().expect("simple OCA");
            let in_phase = if phase_positive { eff >= 0 } else { eff <= 0 };
            if !in_phase {
                continue;
            }
            for i in 0..b_len {
                transitions.push(Transition::new(
                    st(&t.src, i, j),
                    t.label.clone(),
                    CounterOp::Add(eff),
                    st(&t.dst, i + 1, j),
                ));
            }
        }
        for q in a.states() {
            for i in 0..b_len {
                transitions.push(Transition::new(
                    st(q, i, j),
                    Label::Epsilon,
                    CounterOp::Add(0),
                    st(q, i + 1, j),
                ));
            }
            if j < r {
                for i in 0..=b_len {
                    transitions.push(Transition::new(
                        st(q, i, j),
                        Label::Epsilon,
                        CounterOp::Add(0),
                        st(q, 0, j + 1),
                    ));
                }
            }
            // Loops reading the fresh letters, signed by the phase.
            let sign: i64 = if phase_positive { 1 } else { -1 };
            for k in 0..=n {
                let z = sign * k as i64;
                for i in 0..=b_len {
                    transitions.push(Transition::new(
                        st(q, i, j),
                        Label::Letter(flat_loop_letter(state_idx[q], z)),
                        CounterOp::Add(z),
                        st(q, i, j),
                    ));
                }
            }
        }
    }
    let f = a.unique_final()?;
    let oca = Oca::new(
        Kind::Extended,
        states,
        alphabet,
        st(a.initial(), 0, 0),
        [st(f, b_len, r)],
        transitions,
    )?;
    let rba = Rba::new(oca, order)?;

    // σ maps each fresh letter to the NFA of reversal-free p-cycles with the
    // given effect; original letters stay themselves.
    let mut map = BTreeMap::new();
    for (p_idx, p) in a.states().iter().enumerate() {
        for z in -(n as i64)..=(n as i64) {
            map.insert(flat_loop_letter(p_idx, z), cycle_nfa(a, p, z)?);
        }
    }
    let sigma = Substitution::new(map)?;
    debug_assert!(sigma.size() as u64 <= n * (n + 1));
    Ok((rba, sigma))
}

/// NFA B_{p,z} of inputs of reversal-free p-cycles with counter effect z:
/// states Q×I_z with I_z = [0,z] or [z,0], using only transitions of the
/// matching sign.
fn cycle_nfa(a: &Oca, p: &StateId, z: i64) -> Result<Oca, Error> {
    let lo = z.min(0);
    let hi = z.max(0);
    let st = |q: &StateId, y: i64| StateId::new(format!("cyc:({q},{y})"));
    let mut states = Vec::new();
    for q in a.states() {
        for y in lo..=hi {
            states.push(st(q, y));
        }
    }
    let mut transitions = Vec::new();
    for t in a.transitions() {
        let eff = t.op.effect().expect("simple OCA");
        let in_sign = if z >= 0 { eff >= 0 } else { eff <= 0 };
        if !in_sign {
            continue;
        }
        for y in lo..=hi {
            let ny = y + eff;
            if ny < lo || ny > hi {
                continue;
            }
            transitions.push(Transition::new(
                st(&t.src, y),
                t.label.clone(),
                CounterOp::ZeroTest,
                st(&t.dst, ny),
            ));
        }
    }
    Oca::new(
        Kind::Nfa,
        states,
        a.alphabet().clone(),
        st(p, 0),
        [st(p, z)],
        transitions,
    )
}

/// The constants of the loop-counting construction for an RBA of size n.
pub fn loop_counting_constants(n: u64) -> (u64, u64, u64) {
    let big_n = n * n;
    let m = 2 * big_n * big_n + big_n;
    let k = big_n + m * n;
    (big_n, m, k)
}

/// Moves the counter effects of non-loop transitions into the state: the
/// result is a loop-counting RBA B with L(A) ⊆ L(B) ⊆ L_K(A), where L_K is
/// the approximant reading runs from counter K to counter K. Loops may stay
/// live or switch their effect into the state (tracked by the third state
/// component, with capacity M from the Dyck removable-subset bound).
pub fn to_loop_counting(a: &Rba) -> Result<(Rba, u64), Error> {
    a.validate()?;
    let n = a.oca().extended_size();
    let (_, m, k) = loop_counting_constants(n);
    let ki = k as i64;
    let grid = (a.oca().state_count() as u128) * (2 * k as u128 + 1) * (m as u128 + 1);
    if grid > 20_000_000 {
        return Err(Error::StateBudget(20_000_000));
    }
    let st = |q: &StateId, kk: i64, mm: u64| StateId::new(format!("lc:({q},{kk},{mm})"));
    let order_pos: HashMap<&StateId, usize> = a
        .order()
        .iter()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();

    let mut states = Vec::new();
    let mut order: Vec<(usize, u64, i64, StateId)> = Vec::new();
    for q in a.oca().states() {
        for kk in -ki..=ki {
            for mm in 0..=m {
                let s = st(q, kk, mm);
                states.push(s.clone());
                order.push((order_pos[q], mm, kk, s));
            }
        }
    }
    order.sort();
    let order: Vec<StateId> = order.into_iter().map(|(_, _, _, s)| s).collect();

    let mut transitions = Vec::new();
    for t in a.oca().transitions() {
        let eff = t.op.effect().unwrap_or(0);
        if t.src != t.dst {
            for kk in -ki..=ki {
                let nk = kk + eff;
                if nk < -ki || nk > ki {
                    continue;
                }
                for mm in 0..=m {
                    transitions.push(Transition::new(
                        st(&t.src, kk, mm),
                        t.label.clone(),
                        CounterOp::Add(0),
                        st(&t.dst, nk, mm),
                    ));
                }
            }
        } else {
            for kk in -ki..=ki {
                for mm in 0..=m {
                    // Live loop.
                    transitions.push(Transition::new(
                        st(&t.src, kk, mm),
                        t.label.clone(),
                        CounterOp::Add(eff),
                        st(&t.src, kk, mm),
                    ));
                    // Switched loop: counter action moves into the state.
                    let nk = kk + eff;
                    if mm < m && nk >= -ki && nk <= ki {
                        transitions.push(Transition::new(
                            st(&t.src, kk, mm),
                            t.label.clone(),
                            CounterOp::Add(0),
                            st(&t.src, nk, mm + 1),
                        ));
                    }
                }
            }
        }
    }
    let mut finals = Vec::new();
    for f in a.oca().finals() {
        for mm in 0..=m {
            finals.push(st(f, 0, mm));
        }
    }
    let oca = Oca::new(
        Kind::Extended,
        states,
        a.oca().alphabet().clone(),
        st(a.oca().initial(), 0, 0),
        finals,
        transitions,
    )?;
    let out = Rba::new(oca, order)?;
    if !out.is_loop_counting() {
        return Err(Error::NotLoopCounting);
    }
    Ok((out, k))
}

/// Reduces a loop-counting RBA onto the hard family: returns m = n+1 (n the
/// input size) and a substitution σ of size ≤ 2 over the alphabet of H_{2m}
/// with Ψ(σ(L(H_{2m}))) = Ψ(L(A)). States embed into [1,2m] via
/// χ(p) = 2φ(p) − τ(p), where φ is a topological position (ties broken
/// lexicographically) and τ reflects the loop sign discipline, so that
/// χ(q₀) = 1 and χ(f) = 2m and the parity of χ matches the loop signs of
/// H_{2m}.
pub fn reduce_to_hard(a: &Rba) -> Result<(u64, Substitution), Error> {
    a.validate()?;
    if !a.is_loop_counting() {
        return Err(Error::NotLoopCounting);
    }
    let n = a.oca().extended_size();
    let m = n + 1;

    let trimmed = a.oca().trimmed();
    let f_old = trimmed.unique_final()?.clone();

    // Ensure every run uses at least one non-loop transition by appending a
    // fresh final state behind an ε edge when the initial state accepts.
    let needs_fresh_final = f_old == *trimmed.initial();
    let (oca, fin) = if needs_fresh_final {
        let fresh = StateId::new("hfin");
        let mut states = trimmed.states().to_vec();
        states.push(fresh.clone());
        let mut ts = trimmed.transitions().to_vec();
        ts.push(Transition::new(
            f_old.clone(),
            Label::Epsilon,
            CounterOp::Add(0),
            fresh.clone(),
        ));
        (
            Oca::new(
                Kind::Extended,
                states,
                trimmed.alphabet().clone(),
                trimmed.initial().clone(),
                [fresh.clone()],
                ts,
            )?,
            fresh,
        )
    } else {
        (trimmed.clone(), f_old)
    };

    // Drop loops that can never fire in an accepting run: decrementing loops
    // on the initial state (the counter is 0 there and the state is never
    // revisited) and incrementing loops on the final state.
    let q0 = oca.initial().clone();
    let transitions: Vec<Transition> = oca
        .transitions()
        .iter()
        .filter(|t| {
            let e = t.op.effect().unwrap_or(0);
            if t.src == t.dst && t.src == q0 && e < 0 {
                return false;
            }
            if t.src == t.dst && t.src == fin && e > 0 {
                return false;
            }
            true
        })
        .cloned()
        .collect();
    let oca = Oca::new(
        Kind::Extended,
        oca.states().to_vec(),
        oca.alphabet().clone(),
        q0.clone(),
        [fin.clone()],
        transitions,
    )?;

    // Topological positions, ties by state id.
    let order = topological_order(&oca)?;
    if order.first() != Some(&q0) || order.last() != Some(&fin) {
        return Err(Error::NotRba(
            "initial state must be minimal and the final state maximal",
        ));
    }
    let mut phi: HashMap<&StateId, u64> = HashMap::new();
    for (i, s) in order.iter().enumerate() {
        phi.insert(s, i as u64 + 1);
    }
    if oca.state_count() as u64 > m {
        return Err(Error::NotRba("size bound exceeded by the state count"));
    }
    *phi.get_mut(&fin).unwrap() = m;

    // τ: 1 on the initial state, 0 on the final one, otherwise by loop sign.
    let mut tau: HashMap<&StateId, u64> = HashMap::new();
    for s in oca.states() {
        let mut has_pos = false;
        let mut has_neg = false;
        for t in oca.transitions() {
            if t.src == *s && t.dst == *s {
                let e = t.op.effect().unwrap_or(0);
                has_pos |= e > 0;
                has_neg |= e < 0;
            }
        }
        let t = if *s == q0 {
            1
        } else if *s == fin || has_neg || !has_pos {
            // Loopless states default to non-incrementing.
            0
        } else {
            1
        };
        tau.insert(s, t);
    }
    let chi: HashMap<&StateId, u64> = oca
        .states()
        .iter()
        .map(|s| (s, 2 * phi[s] - tau[s]))
        .collect();
    debug_assert_eq!(chi[&q0], 1);
    debug_assert_eq!(chi[&fin], 2 * m);
    {
        let mut seen = BTreeSet::new();
        for v in chi.values() {
            assert!(seen.insert(*v), "χ must be injective");
            assert!((1..=2 * m).contains(v));
        }
    }
    let by_chi: HashMap<u64, &StateId> = chi.iter().map(|(s, &v)| (v, *s)).collect();

    // Γ_{s,k}: labels of loops at χ⁻¹(s) with |effect| = k (k = 0 gives the
    // zero-effect loops used inside the c images).
    let gamma = |s: u64, k: u64| -> Vec<Label> {
        let Some(state) = by_chi.get(&s) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for t in oca.transitions() {
            if t.src == **state && t.dst == **state {
                let e = t.op.effect().unwrap_or(0);
                if e.unsigned_abs() == k {
                    out.push(t.label.clone());
                }
            }
        }
        out
    };
    let omega = |s: u64, t_: u64| -> Vec<Label> {
        let (Some(sp), Some(tp)) = (by_chi.get(&s), by_chi.get(&t_)) else {
            return Vec::new();
        };
        oca.transitions()
            .iter()
            .filter(|t| t.src == **sp && t.dst == **tp)
            .map(|t| t.label.clone())
            .collect()
    };

    let target_alphabet = oca.alphabet().clone();
    let mut map = BTreeMap::new();
    for i in 1..=2 * m {
        for k in 1..=2 * m {
            map.insert(
                hard_loop_letter(i, k),
                letter_set_nfa(&target_alphabet, &gamma(i, k))?,
            );
        }
        for j in (i + 1)..=2 * m {
            map.insert(
                hard_cross_letter(i, j),
                bridge_nfa(&target_alphabet, &gamma(i, 0), &omega(i, j), &gamma(j, 0))?,
            );
        }
    }
    let sigma = Substitution::new(map)?;
    assert!(sigma.size() <= 2);
    Ok((m, sigma))
}

fn topological_order(a: &Oca) -> Result<Vec<StateId>, Error> {
    let mut indeg: BTreeMap<&StateId, usize> = a.states().iter().map(|s| (s, 0)).collect();
    for t in a.transitions() {
        if t.src != t.dst {
            *indeg.get_mut(&t.dst).unwrap() += 1;
        }
    }
    let mut ready: BTreeSet<&StateId> = indeg
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(s, _)| *s)
        .collect();
    let mut out = Vec::new();
    while let Some(&s) = ready.iter().next() {
        ready.remove(&s);
        out.push(s.clone());
        for t in a.transitions() {
            if t.src == *s && t.dst != *s {
                let d = indeg.get_mut(&t.dst).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.insert(&t.dst);
                }
            }
        }
    }
    if out.len() != a.state_count() {
        return Err(Error::NotRba("transition graph has a proper cycle"));
    }
    Ok(out)
}

/// Two-state NFA accepting the given one-letter (or ε) labels.
fn letter_set_nfa(alphabet: &Alphabet, labels: &[Label]) -> Result<Oca, Error> {
    let i = StateId::new("g0");
    let f = StateId::new("g1");
    let transitions = labels
        .iter()
        .map(|l| Transition::new(i.clone(), l.clone(), CounterOp::ZeroTest, f.clone()))
        .collect();
    Oca::new(
        Kind::Nfa,
        vec![i.clone(), f],
        alphabet.clone(),
        i,
        [StateId::new("g1")],
        transitions,
    )
}

/// Two-state NFA for Γ_left* Ω Γ_right*.
fn bridge_nfa(
    alphabet: &Alphabet,
    left: &[Label],
    mid: &[Label],
    right: &[Label],
) -> Result<Oca, Error> {
    let i = StateId::new("g0");
    let f = StateId::new("g1");
    let mut transitions = Vec::new();
    for l in left {
        if let Label::Letter(_) = l {
            transitions.push(Transition::new(i.clone(), l.clone(), CounterOp::ZeroTest, i.clone()));
        }
    }
    for l in mid {
        transitions.push(Transition::new(i.clone(), l.clone(), CounterOp::ZeroTest, f.clone()));
    }
    for l in right {
        if let Label::Letter(_) = l {
            transitions.push(Transition::new(f.clone(), l.clone(), CounterOp::ZeroTest, f.clone()));
        }
    }
    Oca::new(
        Kind::Nfa,
        vec![i.clone(), f],
        alphabet.clone(),
        i,
        [StateId::new("g1")],
        transitions,
    )
}
