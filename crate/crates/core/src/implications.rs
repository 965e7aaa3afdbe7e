//! Implications over positive and negative attribute literals.
//!
//! Premises are always sets of positive attributes. A conclusion is a set of
//! literals: `b` (the object has `b`) or `!b` (the object lacks `b`).

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::context::{AttributeId, AttributeSet, FormalContext, ObjectSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub attribute: AttributeId,
    pub polarity: Polarity,
}

impl Literal {
    pub fn positive(attribute: usize) -> Self {
        Literal {
            attribute: AttributeId(attribute),
            polarity: Polarity::Positive,
        }
    }

    pub fn negative(attribute: usize) -> Self {
        Literal {
            attribute: AttributeId(attribute),
            polarity: Polarity::Negative,
        }
    }

    pub fn negated(self) -> Self {
        Literal {
            attribute: self.attribute,
            polarity: match self.polarity {
                Polarity::Positive => Polarity::Negative,
                Polarity::Negative => Polarity::Positive,
            },
        }
    }

    /// Whether an object with row `row` satisfies this literal.
    pub fn satisfied_by(self, row: &AttributeSet) -> bool {
        row.contains(self.attribute.0) == (self.polarity == Polarity::Positive)
    }
}

/// `premise -> conclusion`, with the conclusion stored as two attribute sets.
///
/// Positive conclusion attributes never overlap the premise, and no attribute
/// appears with both polarities.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Implication {
    premise: AttributeSet,
    positive: AttributeSet,
    negative: AttributeSet,
}

impl Implication {
    /// Builds an implication, dropping positive conclusions already in the
    /// premise.
    ///
    /// Panics if the widths differ or an attribute is concluded with both
    /// polarities.
    pub fn new(premise: AttributeSet, positive: AttributeSet, negative: AttributeSet) -> Self {
        assert!(
            premise.width() == positive.width() && premise.width() == negative.width(),
            "implication parts must share one width"
        );
        assert!(
            positive.is_disjoint(&negative),
            "an attribute cannot be concluded with both polarities"
        );
        let positive = positive.difference(&premise);
        Implication {
            premise,
            positive,
            negative,
        }
    }

    pub fn from_literals<I: IntoIterator<Item = Literal>>(premise: AttributeSet, literals: I) -> Self {
        let width = premise.width();
        let mut positive = BitSet::empty(width);
        let mut negative = BitSet::empty(width);
        for lit in literals {
            match lit.polarity {
                Polarity::Positive => positive.insert(lit.attribute.0),
                Polarity::Negative => negative.insert(lit.attribute.0),
            };
        }
        Implication::new(premise, positive, negative)
    }

    pub fn unit(premise: AttributeSet, literal: Literal) -> Self {
        Implication::from_literals(premise, [literal])
    }

    pub fn width(&self) -> usize {
        self.premise.width()
    }

    pub fn premise(&self) -> &AttributeSet {
        &self.premise
    }

    /// Positive conclusion attributes.
    pub fn positive(&self) -> &AttributeSet {
        &self.positive
    }

    /// Attributes concluded to be absent.
    pub fn negative(&self) -> &AttributeSet {
        &self.negative
    }

    /// Conclusion literals, positives first, each group by attribute index.
    pub fn literals(&self) -> impl Iterator<Item = Literal> + '_ {
        self.positive
            .iter()
            .map(Literal::positive)
            .chain(self.negative.iter().map(Literal::negative))
    }

    pub fn conclusion_len(&self) -> usize {
        self.positive.len() + self.negative.len()
    }

    pub fn is_unit(&self) -> bool {
        self.conclusion_len() == 1
    }

    /// Whether the conclusion says nothing.
    pub fn is_trivial(&self) -> bool {
        self.positive.is_empty() && self.negative.is_empty()
    }

    pub fn to_units(&self) -> Vec<Implication> {
        self.literals()
            .map(|lit| Implication::unit(self.premise.clone(), lit))
            .collect()
    }

    /// Whether an object described by `attrs` is consistent with this
    /// implication.
    pub fn is_respected_by(&self, attrs: &AttributeSet) -> bool {
        !self.premise.is_subset(attrs)
            || (self.positive.is_subset(attrs) && self.negative.is_disjoint(attrs))
    }

    /// Whether a row satisfies the premise and every conclusion literal.
    fn supported_by(&self, row: &AttributeSet) -> bool {
        self.premise.is_subset(row) && self.positive.is_subset(row) && self.negative.is_disjoint(row)
    }

    pub fn render(&self, names: &[String]) -> String {
        Rendered {
            implication: self,
            names,
        }
        .to_string()
    }

    /// Parses `p1, p2 -> c1, !c2` against a list of attribute names.
    pub fn parse(text: &str, names: &[String]) -> Result<Self> {
        let (lhs, rhs) = text
            .split_once("->")
            .ok_or_else(|| Error::parse(1, 1, "missing `->`"))?;
        let lookup = |name: &str, column: usize| -> Result<usize> {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::parse(1, column, format!("unknown attribute `{name}`")))
        };
        let width = names.len();
        let mut premise = BitSet::empty(width);
        let mut column = 1;
        for item in lhs.split(',') {
            let name = item.trim();
            if name.starts_with('!') {
                return Err(Error::parse(1, column, "premises cannot contain negated attributes"));
            }
            if !name.is_empty() {
                premise.insert(lookup(name, column)?);
            }
            column += item.len() + 1;
        }
        column = lhs.len() + 3;
        let mut positive = BitSet::empty(width);
        let mut negative = BitSet::empty(width);
        for item in rhs.split(',') {
            let name = item.trim();
            if let Some(negated) = name.strip_prefix('!') {
                negative.insert(lookup(negated.trim(), column)?);
            } else if !name.is_empty() {
                positive.insert(lookup(name, column)?);
            }
            column += item.len() + 1;
        }
        if !positive.is_disjoint(&negative) {
            return Err(Error::parse(1, lhs.len() + 3, "attribute concluded with both polarities"));
        }
        Ok(Implication::new(premise, positive, negative))
    }
}

struct Rendered<'a> {
    implication: &'a Implication,
    names: &'a [String],
}

impl fmt::Display for Rendered<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let premise: Vec<&str> = self
            .implication
            .premise
            .iter()
            .map(|i| self.names[i].as_str())
            .collect();
        let conclusion: Vec<String> = self
            .implication
            .literals()
            .map(|lit| match lit.polarity {
                Polarity::Positive => self.names[lit.attribute.0].clone(),
                Polarity::Negative => format!("!{}", self.names[lit.attribute.0]),
            })
            .collect();
        if premise.is_empty() {
            write!(f, "-> {}", conclusion.join(", "))
        } else {
            write!(f, "{} -> {}", premise.join(", "), conclusion.join(", "))
        }
    }
}

pub fn respects(attrs: &AttributeSet, implication: &Implication) -> bool {
    implication.is_respected_by(attrs)
}

/// Whether every row of the context respects the implication.
pub fn holds(ctx: &FormalContext, implication: &Implication) -> bool {
    ctx.rows().iter().all(|row| implication.is_respected_by(row))
}

/// Objects having the premise and every conclusion literal.
pub fn support(ctx: &FormalContext, implication: &Implication) -> ObjectSet {
    let mut out = BitSet::empty(ctx.num_objects());
    for (g, row) in ctx.rows().iter().enumerate() {
        if implication.supported_by(row) {
            out.insert(g);
        }
    }
    out
}

pub fn to_units(implication: &Implication) -> Vec<Implication> {
    implication.to_units()
}

/// Merges implications sharing a premise, keeping first-occurrence order.
pub fn merge_by_premise<I: IntoIterator<Item = Implication>>(implications: I) -> Vec<Implication> {
    let mut slots: HashMap<AttributeSet, usize> = HashMap::new();
    let mut merged: Vec<(AttributeSet, AttributeSet, AttributeSet)> = Vec::new();
    for imp in implications {
        match slots.get(&imp.premise) {
            Some(&i) => {
                merged[i].1.union_with(&imp.positive);
                merged[i].2.union_with(&imp.negative);
            }
            None => {
                slots.insert(imp.premise.clone(), merged.len());
                merged.push((imp.premise, imp.positive, imp.negative));
            }
        }
    }
    merged
        .into_iter()
        .map(|(p, pos, neg)| Implication::new(p, pos, neg))
        .collect()
}

/// Sorts implications for presentation: larger support first, then by
/// premise in lexicographic index order.
pub fn sort_for_display(ctx: &FormalContext, implications: &mut [Implication]) {
    implications.sort_by_cached_key(|imp| {
        (
            std::cmp::Reverse(support(ctx, imp).len()),
            imp.premise.iter().collect::<Vec<_>>(),
        )
    });
}

/// Everything derivable from a start set by firing implications.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub positive: AttributeSet,
    pub negative: AttributeSet,
}

impl Derivation {
    /// Attributes derived with both polarities.
    pub fn contradictions(&self) -> AttributeSet {
        self.positive.intersection(&self.negative)
    }

    pub fn is_consistent(&self) -> bool {
        self.positive.is_disjoint(&self.negative)
    }
}

/// Linear-time forward chaining over a growing list of implications.
///
/// Each implication keeps a counter of premise attributes not yet derived;
/// it fires when the counter hits zero.
#[derive(Debug, Clone)]
pub struct ForwardChainer {
    width: usize,
    implications: Vec<Implication>,
    premise_sizes: Vec<usize>,
    watchers: Vec<Vec<usize>>,
    unconditional: Vec<usize>,
}

impl ForwardChainer {
    pub fn new(width: usize) -> Self {
        ForwardChainer {
            width,
            implications: Vec::new(),
            premise_sizes: Vec::new(),
            watchers: vec![Vec::new(); width],
            unconditional: Vec::new(),
        }
    }

    pub fn with_implications<I: IntoIterator<Item = Implication>>(width: usize, implications: I) -> Self {
        let mut chainer = ForwardChainer::new(width);
        for imp in implications {
            chainer.push(imp);
        }
        chainer
    }

    pub fn push(&mut self, implication: Implication) {
        assert_eq!(implication.width(), self.width, "implication width mismatch");
        let index = self.implications.len();
        let size = implication.premise.len();
        if size == 0 {
            self.unconditional.push(index);
        }
        for a in &implication.premise {
            self.watchers[a].push(index);
        }
        self.premise_sizes.push(size);
        self.implications.push(implication);
    }

    pub fn implications(&self) -> &[Implication] {
        &self.implications
    }

    pub fn len(&self) -> usize {
        self.implications.len()
    }

    pub fn is_empty(&self) -> bool {
        self.implications.is_empty()
    }

    /// Least fixpoint of firing every implication whose premise is contained
    /// in the derived positive attributes.
    pub fn derive(&self, start: &AttributeSet) -> Derivation {
        assert_eq!(start.width(), self.width, "start set width mismatch");
        let mut remaining = self.premise_sizes.clone();
        let mut positive = start.clone();
        let mut negative = BitSet::empty(self.width);
        let mut queue: Vec<usize> = start.iter().collect();

        let fire = |index: usize,
                        positive: &mut AttributeSet,
                        negative: &mut AttributeSet,
                        queue: &mut Vec<usize>| {
            let imp = &self.implications[index];
            for c in &imp.positive {
                if positive.insert(c) {
                    queue.push(c);
                }
            }
            negative.union_with(&imp.negative);
        };

        for &index in &self.unconditional {
            fire(index, &mut positive, &mut negative, &mut queue);
        }
        while let Some(a) = queue.pop() {
            for &index in &self.watchers[a] {
                remaining[index] -= 1;
                if remaining[index] == 0 {
                    fire(index, &mut positive, &mut negative, &mut queue);
                }
            }
        }
        Derivation { positive, negative }
    }
}

/// Forward closure of `start` under `implications`.
pub fn forward_closure(implications: &[Implication], start: &AttributeSet) -> Derivation {
    ForwardChainer::with_implications(start.width(), implications.iter().cloned()).derive(start)
}
