mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use common::*;
use implicheck::bench::{gen_synthetic, SynthSpec};
use implicheck::{
    canonical_base, crucial, forward_closure, holds, support, BitSet, FormalContext, Implication, ObjectId,
};
use proptest::prelude::*;

fn arb_context(max_g: usize, max_m: usize) -> impl Strategy<Value = FormalContext> {
    (1..=max_g, 1..=max_m)
        .prop_flat_map(|(g, m)| proptest::collection::vec(proptest::collection::vec(any::<bool>(), m), g))
        .prop_map(|rows| {
            let m = rows[0].len();
            FormalContext::new(
                (0..rows.len()).map(|i| format!("g{i}")).collect(),
                (0..m).map(|i| format!("m{i}")).collect(),
                rows.iter().map(|r| to_set(m, r)).collect(),
            )
            .unwrap()
        })
}

fn arb_case(max_g: usize, max_m: usize) -> impl Strategy<Value = (FormalContext, BitSet, BitSet)> {
    arb_context(max_g, max_m).prop_flat_map(|ctx| {
        let m = ctx.num_attributes();
        let set = proptest::collection::vec(any::<bool>(), m).prop_map(move |b| to_set(m, &b));
        (Just(ctx), set.clone(), set)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn crucial_units_are_sound_and_complete((ctx, a, _) in arb_case(8, 6)) {
        let width = ctx.num_attributes();
        let rows = rows_of(&ctx);
        let bits = to_bits(&a);
        let set = crucial::inspect_closure(&ctx, &a);
        prop_assert!(set.unit_count() <= ctx.num_objects() * width);
        let units: Vec<Unit> = set.units().iter().map(unit_of).collect();
        for (imp, u) in set.units().iter().zip(&units) {
            prop_assert!(holds(&ctx, imp));
            prop_assert!(!support(&ctx, imp).is_empty());
            prop_assert!(unit_violated_by(&bits, u));
        }
        for (e, d, pos) in violated_valid_units(&rows, width, &bits) {
            prop_assert!(units.iter().any(|(b, d2, p2)| *d2 == d && *p2 == pos && subset(&e, b) && subset(b, &bits)));
        }
    }

    #[test]
    fn incremental_questions_match_recomputation((ctx, a1, a2) in arb_case(8, 6)) {
        let extended = ctx.with_object("new", a1.clone()).unwrap();
        let after = unit_set(crucial::inspect_closure(&extended, &a2).units());
        let before = unit_set(crucial::inspect_closure(&ctx, &a2).units());
        let fresh: BTreeSet<Unit> = after.difference(&before).cloned().collect();
        prop_assert_eq!(fresh, unit_set(&crucial::incremental_units(&ctx, &a1, &a2)));
    }

    #[test]
    fn hand_check_questions((ctx, a, _) in arb_case(8, 6)) {
        let q = crucial::max_intent_questions(&ctx, &a);
        if ctx.rows().iter().any(|r| a.is_subset(r)) {
            prop_assert!(q.is_empty());
        }
        for i in q.additions.iter().chain(&q.removals) {
            prop_assert!(holds(&ctx, i));
            prop_assert!(support(&ctx, i).is_empty());
            prop_assert!(!i.is_respected_by(&a));
        }
    }

    #[test]
    fn complement_units_read_back((ctx, a, _) in arb_case(8, 6)) {
        let comp = ctx.complement();
        for u in crucial::inspect_complement(&ctx, &a).units() {
            prop_assert!(holds(&comp, u));
            prop_assert!(!u.is_respected_by(&a.complement()));
        }
    }
}

/// Positive conclusions of the crucial units are exactly what the base
/// derives from supported subsets of the intent.
#[test]
fn crucial_positives_agree_with_base() {
    for c in 0..300u64 {
        let mut rng = rng(300 + c);
        let ctx = random_context(&mut rng, 7, 5);
        let width = ctx.num_attributes();
        let base = canonical_base(&ctx);
        for a in all_subsets(width) {
            let a = to_set(width, &a);
            let mut from_crucial = BitSet::empty(width);
            for u in crucial::inspect_closure(&ctx, &a).units() {
                from_crucial.union_with(u.positive());
            }
            let mut from_base = BitSet::empty(width);
            for e in all_subsets(width) {
                let e = to_set(width, &e);
                if e.is_subset(&a) && !ctx.extent(&e).is_empty() {
                    from_base.union_with(&forward_closure(base.implications(), &e).positive);
                }
            }
            from_base.difference_with(&a);
            assert_eq!(from_crucial, from_base, "context #{c}");
        }
    }
}

#[test]
fn base_premises_are_the_pseudo_intents() {
    for c in 0..200u64 {
        let mut rng = rng(40 + c);
        let ctx = random_context(&mut rng, 8, 6);
        let premises: Vec<Vec<bool>> = canonical_base(&ctx).premises().map(to_bits).collect();
        let mut sorted = premises.clone();
        sorted.sort();
        let mut expected = pseudo_intents(&rows_of(&ctx), ctx.num_attributes());
        expected.sort();
        assert_eq!(sorted, expected, "context #{c}");
    }
}

fn hold_out_seconds(ctx: &FormalContext) -> f64 {
    let mut samples: Vec<f64> = (0..3)
        .map(|_| {
            let started = Instant::now();
            for g in 0..ctx.num_objects() {
                let rest = ctx.without_object(ObjectId(g));
                std::hint::black_box(crucial::inspect_closure(&rest, ctx.row(ObjectId(g))));
            }
            started.elapsed().as_secs_f64() / ctx.num_objects() as f64
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    samples[1]
}

/// Per-object inspection time grows at most quadratically in the number of
/// objects (log-log slope, with slack for noise).
#[test]
fn inspection_scales_polynomially() {
    let sizes = [50usize, 100, 200, 400];
    let points: Vec<(f64, f64)> = sizes
        .iter()
        .map(|&g| {
            let ctx = gen_synthetic(&SynthSpec {
                num_objects: g,
                num_attributes: 20,
                density: 0.5,
                seed: g as u64,
            });
            ((g as f64).ln(), hold_out_seconds(&ctx).ln())
        })
        .collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!(slope <= 2.5, "slope {slope:.2}");
}

#[test]
fn units_decompose_merged_output() {
    let ctx = implicheck::fixtures::quadrangles();
    for case in ["Case1", "Case2", "Case3", "Case4"] {
        let set = crucial::inspect_closure(&ctx, &implicheck::fixtures::case(case));
        let merged = set.merged();
        let back: BTreeSet<Implication> = merged.iter().flat_map(Implication::to_units).collect();
        let units: BTreeSet<Implication> = set.units().iter().cloned().collect();
        assert_eq!(back, units);
        let premises: BTreeSet<&BitSet> = merged.iter().map(Implication::premise).collect();
        assert_eq!(premises.len(), merged.len());
    }
}
