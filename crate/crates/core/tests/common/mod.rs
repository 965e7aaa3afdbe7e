//! Brute-force reference implementations. Everything here works straight
//! from the definitions on plain `Vec<bool>` rows and never calls into the
//! algorithms under test beyond constructing contexts.

#![allow(dead_code)]

use std::collections::BTreeSet;

use implicheck::{BitSet, FormalContext, Implication, Literal, Polarity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rows = Vec<Vec<bool>>;

pub fn rows_of(ctx: &FormalContext) -> Rows {
    ctx.rows()
        .iter()
        .map(|r| (0..ctx.num_attributes()).map(|m| r.contains(m)).collect())
        .collect()
}

pub fn to_set(width: usize, bits: &[bool]) -> BitSet {
    BitSet::from_indices(width, (0..width).filter(|&i| bits[i]))
}

pub fn to_bits(set: &BitSet) -> Vec<bool> {
    (0..set.width()).map(|i| set.contains(i)).collect()
}

pub fn subset(a: &[bool], b: &[bool]) -> bool {
    a.iter().zip(b).all(|(x, y)| !x || *y)
}

pub fn all_subsets(width: usize) -> Vec<Vec<bool>> {
    (0u32..1 << width)
        .map(|mask| (0..width).map(|i| mask & (1 << i) != 0).collect())
        .collect()
}

pub fn closure(rows: &Rows, width: usize, a: &[bool]) -> Vec<bool> {
    let mut out = vec![true; width];
    for row in rows.iter().filter(|r| subset(a, r)) {
        for m in 0..width {
            out[m] &= row[m];
        }
    }
    out
}

/// A unit implication as (premise, attribute, positive?).
pub type Unit = (Vec<bool>, usize, bool);

pub fn unit_of(imp: &Implication) -> Unit {
    assert!(imp.is_unit());
    let lit: Literal = imp.literals().next().unwrap();
    (to_bits(imp.premise()), lit.attribute.0, lit.polarity == Polarity::Positive)
}

/// Objects containing the premise and satisfying the literal.
pub fn unit_support(rows: &Rows, (premise, d, pos): &Unit) -> usize {
    rows.iter().filter(|r| subset(premise, r) && r[*d] == *pos).count()
}

pub fn unit_valid(rows: &Rows, (premise, d, pos): &Unit) -> bool {
    rows.iter().filter(|r| subset(premise, r)).all(|r| r[*d] == *pos)
}

pub fn unit_violated_by(a: &[bool], (premise, d, pos): &Unit) -> bool {
    subset(premise, a) && a[*d] != *pos
}

/// Every valid unit implication E -> d with E ⊆ A, nonempty support, that A
/// does not respect.
pub fn violated_valid_units(rows: &Rows, width: usize, a: &[bool]) -> Vec<Unit> {
    let mut out = Vec::new();
    for e in all_subsets(width).into_iter().filter(|e| subset(e, a)) {
        for (d, &has) in a.iter().enumerate() {
            let unit = (e.clone(), d, !has);
            if unit_valid(rows, &unit) && unit_support(rows, &unit) > 0 {
                out.push(unit);
            }
        }
    }
    out
}

/// The pseudo-intents, computed from the recursive definition.
pub fn pseudo_intents(rows: &Rows, width: usize) -> Vec<Vec<bool>> {
    let mut sets = all_subsets(width);
    sets.sort_by_key(|s| s.iter().filter(|b| **b).count());
    let mut found: Vec<Vec<bool>> = Vec::new();
    for p in sets {
        if closure(rows, width, &p) == p {
            continue;
        }
        let ok = found
            .iter()
            .filter(|q| subset(q, &p) && *q != &p)
            .all(|q| subset(&closure(rows, width, q), &p));
        if ok {
            found.push(p);
        }
    }
    found
}

/// Closure of `a` under implications given as (premise, conclusion) pairs.
pub fn implication_closure(imps: &[(Vec<bool>, Vec<bool>)], a: &[bool]) -> Vec<bool> {
    let mut cur = a.to_vec();
    loop {
        let mut changed = false;
        for (p, c) in imps {
            if subset(p, &cur) && !subset(c, &cur) {
                for (x, y) in cur.iter_mut().zip(c) {
                    *x |= *y;
                }
                changed = true;
            }
        }
        if !changed {
            return cur;
        }
    }
}

pub fn is_complete(rows: &Rows, width: usize, imps: &[(Vec<bool>, Vec<bool>)]) -> bool {
    all_subsets(width)
        .iter()
        .all(|a| implication_closure(imps, a) == closure(rows, width, a))
}

/// Whether some complete implication set smaller than `size` exists. Any
/// complete set can be rewritten into one of the same size whose members are
/// all of the form P -> P'', so only those are tried.
pub fn smaller_complete_set_exists(rows: &Rows, width: usize, size: usize) -> bool {
    if size == 0 {
        return false;
    }
    let candidates: Vec<(Vec<bool>, Vec<bool>)> = all_subsets(width)
        .into_iter()
        .map(|p| {
            let c = closure(rows, width, &p);
            (p, c)
        })
        .filter(|(p, c)| p != c)
        .collect();
    let k = size - 1;
    let mut chosen = Vec::new();
    fn search(
        rows: &Rows,
        width: usize,
        cands: &[(Vec<bool>, Vec<bool>)],
        start: usize,
        k: usize,
        chosen: &mut Vec<(Vec<bool>, Vec<bool>)>,
    ) -> bool {
        if chosen.len() == k {
            return is_complete(rows, width, chosen);
        }
        for i in start..cands.len() {
            chosen.push(cands[i].clone());
            if search(rows, width, cands, i + 1, k, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    // all candidates together are complete
    if k >= candidates.len() {
        return true;
    }
    search(rows, width, &candidates, 0, k, &mut chosen)
}

pub fn random_context(rng: &mut ChaCha8Rng, max_g: usize, max_m: usize) -> FormalContext {
    let g = rng.gen_range(1..=max_g);
    let m = rng.gen_range(1..=max_m);
    let density = rng.gen_range(0.2..0.8);
    let rows: Vec<BitSet> = (0..g)
        .map(|_| BitSet::from_indices(m, (0..m).filter(|_| rng.gen_bool(density))))
        .collect();
    FormalContext::new(
        (0..g).map(|i| format!("g{i}")).collect(),
        (0..m).map(|i| format!("m{i}")).collect(),
        rows,
    )
    .unwrap()
}

pub fn random_set(rng: &mut ChaCha8Rng, width: usize) -> BitSet {
    BitSet::from_indices(width, (0..width).filter(|_| rng.gen_bool(0.5)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_set(imps: &[Implication]) -> BTreeSet<Unit> {
    imps.iter().flat_map(Implication::to_units).map(|u| unit_of(&u)).collect()
}
