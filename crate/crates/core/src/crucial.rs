//! Crucial implications for a single new object.
//!
//! For a candidate intent `A`, every row contributes the intersection
//! `A ∩ g'`. The inclusion-maximal intersections `B` are the only premises
//! needed: each yields `B -> d` for every `d` in `B'' \ A` (attributes the
//! object is probably missing) and `B -> !d` for every `d` in `A \ B`
//! (attributes it probably should not have). Every such implication is valid
//! in the context, has a supporting row, and is violated by `A`; together they
//! cover every supported valid implication violated by `A`. There are at most
//! `|G| * |M|` of them and computing them takes `O(|G|^2 |M|)`.

use serde::{Deserialize, Serialize};

use crate::context::{AttributeSet, FormalContext, ObjectId};
use crate::implications::{merge_by_premise, Implication, Literal};

/// Deduplicated intersections of a candidate intent with the context rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateFamily {
    sets: Vec<AttributeSet>,
    witnesses: Vec<ObjectId>,
}

impl CandidateFamily {
    pub fn from_sets<I: IntoIterator<Item = AttributeSet>>(sets: I) -> Self {
        let mut family = CandidateFamily {
            sets: Vec::new(),
            witnesses: Vec::new(),
        };
        for (i, set) in sets.into_iter().enumerate() {
            family.push(set, ObjectId(i));
        }
        family
    }

    fn push(&mut self, set: AttributeSet, witness: ObjectId) {
        if !self.sets.contains(&set) {
            self.sets.push(set);
            self.witnesses.push(witness);
        }
    }

    pub fn sets(&self) -> &[AttributeSet] {
        &self.sets
    }

    /// First row producing each member.
    pub fn witnesses(&self) -> &[ObjectId] {
        &self.witnesses
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

/// `{A ∩ g' | g ∈ G}` in first-witness row order.
pub fn candidates(ctx: &FormalContext, attrs: &AttributeSet) -> CandidateFamily {
    assert_eq!(attrs.width(), ctx.num_attributes(), "candidate width does not match the context");
    let mut family = CandidateFamily {
        sets: Vec::new(),
        witnesses: Vec::new(),
    };
    for (g, row) in ctx.rows().iter().enumerate() {
        family.push(attrs.intersection(row), ObjectId(g));
    }
    family
}

/// The inclusion-maximal members of a family.
pub fn max_candidates(family: &CandidateFamily) -> CandidateFamily {
    let mut out = CandidateFamily {
        sets: Vec::new(),
        witnesses: Vec::new(),
    };
    for (set, &witness) in family.sets.iter().zip(&family.witnesses) {
        if !family.sets.iter().any(|other| set.is_proper_subset(other)) {
            out.push(set.clone(), witness);
        }
    }
    out
}

/// The crucial implications of one candidate intent, stored as units.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrucialSet {
    units: Vec<Implication>,
}

impl CrucialSet {
    pub fn units(&self) -> &[Implication] {
        &self.units
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// One implication per premise, in emission order.
    pub fn merged(&self) -> Vec<Implication> {
        merge_by_premise(self.units.iter().cloned())
    }
}

/// Crucial implications of `attrs` in `ctx`.
///
/// Returns nothing when `attrs` is closed and some row contains it. A closed
/// set that no row contains can only be the full attribute set, and then the
/// maximal rows still yield valid negative implications.
pub fn inspect_closure(ctx: &FormalContext, attrs: &AttributeSet) -> CrucialSet {
    assert_eq!(attrs.width(), ctx.num_attributes(), "candidate width does not match the context");
    if ctx.closure(attrs) == *attrs && ctx.is_supported(attrs) {
        return CrucialSet::default();
    }
    let maximal = max_candidates(&candidates(ctx, attrs));
    let mut units = Vec::new();
    for premise in maximal.sets() {
        let missing = ctx.closure(premise).difference(attrs);
        let surplus = attrs.difference(premise);
        units.extend(missing.iter().map(|d| Implication::unit(premise.clone(), Literal::positive(d))));
        units.extend(surplus.iter().map(|d| Implication::unit(premise.clone(), Literal::negative(d))));
    }
    CrucialSet { units }
}

/// Crucial implications computed on the complementary context for the
/// complemented intent.
///
/// The result is expressed in the complementary frame: a premise `B` reads
/// "lacks every attribute of `B`", a positive conclusion `d` reads "lacks
/// `d`", and a negative conclusion `!d` reads "has `d`".
pub fn inspect_complement(ctx: &FormalContext, attrs: &AttributeSet) -> CrucialSet {
    inspect_closure(&ctx.complement(), &attrs.complement())
}

/// Questions for an intent that no row contains; they have no supporting
/// example and must be checked by hand.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxIntentQuestions {
    /// `A -> m` for each `m` outside `A`.
    pub additions: Vec<Implication>,
    /// `A \ {a} -> !a` for each `a` whose removal still fits no row.
    pub removals: Vec<Implication>,
}

impl MaxIntentQuestions {
    pub fn is_empty(&self) -> bool {
        self.additions.is_empty() && self.removals.is_empty()
    }
}

pub fn max_intent_questions(ctx: &FormalContext, attrs: &AttributeSet) -> MaxIntentQuestions {
    assert_eq!(attrs.width(), ctx.num_attributes(), "candidate width does not match the context");
    if ctx.is_supported(attrs) {
        return MaxIntentQuestions::default();
    }
    let additions = attrs
        .complement()
        .iter()
        .map(|m| Implication::unit(attrs.clone(), Literal::positive(m)))
        .collect();
    let removals = attrs
        .iter()
        .filter_map(|a| {
            let mut premise = attrs.clone();
            premise.remove(a);
            (!ctx.is_supported(&premise)).then(|| Implication::unit(premise, Literal::negative(a)))
        })
        .collect();
    MaxIntentQuestions { additions, removals }
}

/// Crucial implications for `second` that appear once an object with intent
/// `first` has been added to `ctx`, in merged form.
///
/// New questions arise only when no existing row contains `first ∩ second`.
pub fn incremental_questions(
    ctx: &FormalContext,
    first: &AttributeSet,
    second: &AttributeSet,
) -> Vec<Implication> {
    let shared = first.intersection(second);
    if ctx.is_supported(&shared) {
        return Vec::new();
    }
    let imp = Implication::new(
        shared,
        first.difference(second),
        second.difference(first),
    );
    if imp.is_trivial() {
        Vec::new()
    } else {
        vec![imp]
    }
}

/// Unit form of [`incremental_questions`].
pub fn incremental_units(ctx: &FormalContext, first: &AttributeSet, second: &AttributeSet) -> Vec<Implication> {
    incremental_questions(ctx, first, second)
        .iter()
        .flat_map(Implication::to_units)
        .collect()
}

/// Upper bound on the number of crucial units.
pub fn unit_bound(ctx: &FormalContext) -> usize {
    ctx.num_objects() * ctx.num_attributes()
}
