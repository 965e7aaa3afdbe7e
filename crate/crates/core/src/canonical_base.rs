//! Duquenne-Guigues base construction and the base-driven inspection.
//!
//! Pseudo-intents are enumerated in lectic order with Next Closure over the
//! closure system `X -> L(X)`, where `L` is the list of base implications
//! found so far. A set produced by the enumeration is either an intent or the
//! next pseudo-intent.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::context::{AttributeSet, FormalContext};
use crate::error::{Error, Result};
use crate::implications::{ForwardChainer, Implication};

/// The canonical base, ordered lectically by premise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalBase {
    implications: Vec<Implication>,
}

impl CanonicalBase {
    pub fn implications(&self) -> &[Implication] {
        &self.implications
    }

    pub fn into_implications(self) -> Vec<Implication> {
        self.implications
    }

    /// The pseudo-intents, one per implication.
    pub fn premises(&self) -> impl Iterator<Item = &AttributeSet> {
        self.implications.iter().map(Implication::premise)
    }

    pub fn len(&self) -> usize {
        self.implications.len()
    }

    pub fn is_empty(&self) -> bool {
        self.implications.is_empty()
    }

    /// Base implications not respected by `attrs`, in base order.
    pub fn inspect(&self, attrs: &AttributeSet) -> Vec<Implication> {
        self.implications
            .iter()
            .filter(|imp| !imp.is_respected_by(attrs))
            .cloned()
            .collect()
    }
}

/// Lectic successor of `current` among sets closed under `chainer`.
fn next_closed(current: &AttributeSet, chainer: &ForwardChainer) -> Option<AttributeSet> {
    let width = current.width();
    for i in (0..width).rev() {
        if current.contains(i) {
            continue;
        }
        let mut probe = current.clone();
        probe.truncate_below(i);
        probe.insert(i);
        let closed = chainer.derive(&probe).positive;
        if closed.agrees_below(current, i) {
            return Some(closed);
        }
    }
    None
}

/// Computes the base, giving up once `budget` has elapsed.
pub fn canonical_base_within(ctx: &FormalContext, budget: Option<Duration>) -> Result<CanonicalBase> {
    let started = Instant::now();
    let width = ctx.num_attributes();
    let mut chainer = ForwardChainer::new(width);
    let mut current = BitSet::empty(width);
    loop {
        if let Some(budget) = budget {
            if started.elapsed() > budget {
                return Err(Error::BudgetExceeded {
                    budget,
                    pseudo_intents: chainer.len(),
                });
            }
        }
        let closed = ctx.closure(&current);
        if closed != current {
            chainer.push(Implication::new(current.clone(), closed, BitSet::empty(width)));
        }
        match next_closed(&current, &chainer) {
            Some(next) => current = next,
            None => break,
        }
    }
    Ok(CanonicalBase {
        implications: chainer.implications().to_vec(),
    })
}

pub fn canonical_base(ctx: &FormalContext) -> CanonicalBase {
    canonical_base_within(ctx, None).expect("no budget was set")
}

pub fn pseudo_intents(ctx: &FormalContext) -> Vec<AttributeSet> {
    canonical_base(ctx).premises().cloned().collect()
}

/// Canonical-base implications that `attrs` does not respect.
pub fn inspect_base(ctx: &FormalContext, attrs: &AttributeSet) -> Vec<Implication> {
    canonical_base(ctx).inspect(attrs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::implications::{forward_closure, holds};
    use proptest::prelude::*;

    fn all_subsets(width: usize) -> Vec<BitSet> {
        (0u32..1 << width)
            .map(|mask| BitSet::from_indices(width, (0..width).filter(|i| mask & (1 << i) != 0)))
            .collect()
    }

    /// Pseudo-intents straight from the definition, smallest sets first.
    fn brute_pseudo_intents(ctx: &FormalContext) -> Vec<BitSet> {
        let mut subsets = all_subsets(ctx.num_attributes());
        subsets.sort_by_key(BitSet::len);
        let mut found: Vec<BitSet> = Vec::new();
        for p in subsets {
            if ctx.closure(&p) == p {
                continue;
            }
            let ok = found
                .iter()
                .filter(|q| q.is_proper_subset(&p))
                .all(|q| ctx.closure(q).is_subset(&p));
            if ok {
                found.push(p);
            }
        }
        found
    }

    fn quad(ids: &[usize]) -> AttributeSet {
        BitSet::from_indices(7, ids.iter().map(|i| i - 1))
    }

    #[test]
    fn full_context_has_empty_pseudo_intent() {
        let ctx = FormalContext::from_cross_rows(&["a", "b"], &["x", "y"], &["XX", "XX"]).unwrap();
        assert_eq!(pseudo_intents(&ctx), vec![BitSet::empty(2)]);
        let base = canonical_base(&ctx);
        assert_eq!(base.implications(), &[Implication::new(BitSet::empty(2), BitSet::full(2), BitSet::empty(2))]);
    }

    #[test]
    fn all_closed_means_no_pseudo_intents() {
        // complement of the identity: every subset is an intersection of rows
        let ctx = FormalContext::from_cross_rows(
            &["a", "b", "c", "d"],
            &["w", "x", "y", "z"],
            &[".XXX", "X.XX", "XX.X", "XXX."],
        )
        .unwrap();
        assert!(brute_pseudo_intents(&ctx).is_empty());
        assert!(pseudo_intents(&ctx).is_empty());
    }

    #[test]
    fn quadrangle_base_contains_printed_implications() {
        let ctx = fixtures::quadrangles();
        let base = canonical_base(&ctx);
        assert!(base.implications().contains(&Implication::new(quad(&[4]), quad(&[1, 2]), quad(&[]))));
        assert!(base.implications().contains(&Implication::new(quad(&[5]), quad(&[1, 2, 3]), quad(&[]))));
        let mut expected = brute_pseudo_intents(&ctx);
        let mut actual = pseudo_intents(&ctx);
        expected.sort();
        actual.sort();
        assert_eq!(actual, expected);
    }

    #[test]
    fn quadrangle_base_is_complete() {
        let ctx = fixtures::quadrangles();
        let base = canonical_base(&ctx);
        for a in all_subsets(7) {
            assert_eq!(forward_closure(base.implications(), &a).positive, ctx.closure(&a));
        }
    }

    #[test]
    fn empty_relation_context() {
        let ctx = FormalContext::from_cross_rows(&["a", "b", "c"], &["x", "y", "z"], &["...", "...", "..."]).unwrap();
        let base = canonical_base(&ctx);
        for a in all_subsets(3) {
            let derived = forward_closure(base.implications(), &a).positive;
            assert_eq!(derived, ctx.closure(&a));
            if !a.is_empty() {
                assert!(derived.is_full());
            }
        }
    }

    #[test]
    fn inspect_base_examples() {
        let ctx = fixtures::quadrangles();
        assert_eq!(
            inspect_base(&ctx, &fixtures::case("Case2")),
            vec![
                Implication::new(quad(&[5]), quad(&[1, 2, 3]), quad(&[])),
                Implication::new(quad(&[4]), quad(&[1, 2]), quad(&[])),
            ]
        );
        // {7} -> {6} holds in every row, so {1,2,4,7} is not a pseudo-intent
        assert_eq!(
            inspect_base(&ctx, &fixtures::case("Case4")),
            vec![Implication::new(quad(&[7]), quad(&[6]), quad(&[]))]
        );
        for row in ctx.rows() {
            assert!(inspect_base(&ctx, row).is_empty());
        }
    }

    #[test]
    fn budget_is_enforced() {
        let ctx = fixtures::quadrangles();
        let err = canonical_base_within(&ctx, Some(Duration::ZERO)).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
        assert!(canonical_base_within(&ctx, Some(Duration::from_secs(60))).is_ok());
    }

    proptest! {
        #[test]
        fn matches_definition(ctx in crate::context::tests::arb_context(7, 5)) {
            let mut expected = brute_pseudo_intents(&ctx);
            let actual = pseudo_intents(&ctx);
            let mut sorted = actual.clone();
            sorted.sort();
            expected.sort();
            prop_assert_eq!(sorted, expected);
            let base = canonical_base(&ctx);
            for imp in base.implications() {
                prop_assert!(holds(&ctx, imp));
            }
            for a in all_subsets(ctx.num_attributes()) {
                prop_assert_eq!(forward_closure(base.implications(), &a).positive, ctx.closure(&a));
                let clean = base.inspect(&a).is_empty();
                prop_assert_eq!(clean, base.implications().iter().all(|i| i.is_respected_by(&a)));
            }
        }
    }
}
