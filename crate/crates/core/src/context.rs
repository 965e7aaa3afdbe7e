//! Formal contexts and their derivation operators.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};

pub type AttributeSet = BitSet;
pub type ObjectSet = BitSet;

/// Position of an attribute in a context's attribute list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AttributeId(pub usize);

/// Position of an object in a context's object list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectId(pub usize);

/// Default prefix marking the negated copy of an attribute.
pub const NEGATION_MARKER: &str = "not_";

/// An objects-by-attributes incidence table.
///
/// Values are immutable once built; operations that add or remove objects
/// return a new context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalContext {
    object_names: Vec<String>,
    attribute_names: Vec<String>,
    rows: Vec<AttributeSet>,
}

/// A new row under inspection. It is not part of any context until committed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateObject {
    pub name: String,
    pub intent: AttributeSet,
}

fn check_unique(names: &[String], dup: fn(String) -> Error) -> Result<()> {
    let mut seen = HashSet::with_capacity(names.len());
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(dup(name.clone()));
        }
    }
    Ok(())
}

impl FormalContext {
    pub fn new(
        object_names: Vec<String>,
        attribute_names: Vec<String>,
        rows: Vec<AttributeSet>,
    ) -> Result<Self> {
        if rows.len() != object_names.len() {
            return Err(Error::Shape(format!(
                "{} object names but {} rows",
                object_names.len(),
                rows.len()
            )));
        }
        if let Some(row) = rows.iter().find(|r| r.width() != attribute_names.len()) {
            return Err(Error::WidthMismatch {
                expected: attribute_names.len(),
                actual: row.width(),
            });
        }
        check_unique(&object_names, Error::DuplicateObject)?;
        check_unique(&attribute_names, Error::DuplicateAttribute)?;
        Ok(FormalContext {
            object_names,
            attribute_names,
            rows,
        })
    }

    /// Builds a context from `X`/`.` rows, mostly useful in tests.
    pub fn from_cross_rows<S: AsRef<str>>(
        object_names: &[S],
        attribute_names: &[S],
        rows: &[&str],
    ) -> Result<Self> {
        let width = attribute_names.len();
        let rows = rows
            .iter()
            .enumerate()
            .map(|(line, row)| {
                if row.chars().count() != width {
                    return Err(Error::WidthMismatch {
                        expected: width,
                        actual: row.chars().count(),
                    });
                }
                let mut set = BitSet::empty(width);
                for (i, c) in row.chars().enumerate() {
                    match c {
                        'X' | 'x' => {
                            set.insert(i);
                        }
                        '.' => {}
                        other => {
                            return Err(Error::parse(
                                line + 1,
                                i + 1,
                                format!("unexpected character `{other}`"),
                            ))
                        }
                    }
                }
                Ok(set)
            })
            .collect::<Result<Vec<_>>>()?;
        FormalContext::new(
            object_names.iter().map(|s| s.as_ref().to_owned()).collect(),
            attribute_names.iter().map(|s| s.as_ref().to_owned()).collect(),
            rows,
        )
    }

    pub fn num_objects(&self) -> usize {
        self.rows.len()
    }

    pub fn num_attributes(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn object_names(&self) -> &[String] {
        &self.object_names
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn object_name(&self, g: ObjectId) -> &str {
        &self.object_names[g.0]
    }

    pub fn attribute_name(&self, m: AttributeId) -> &str {
        &self.attribute_names[m.0]
    }

    pub fn row(&self, g: ObjectId) -> &AttributeSet {
        &self.rows[g.0]
    }

    pub fn rows(&self) -> &[AttributeSet] {
        &self.rows
    }

    pub fn attribute_index(&self, name: &str) -> Option<AttributeId> {
        self.attribute_names
            .iter()
            .position(|n| n == name)
            .map(AttributeId)
    }

    pub fn object_index(&self, name: &str) -> Option<ObjectId> {
        self.object_names
            .iter()
            .position(|n| n == name)
            .map(ObjectId)
    }

    /// Resolves attribute names into a set.
    pub fn attribute_set<S: AsRef<str>>(&self, names: &[S]) -> Result<AttributeSet> {
        let mut set = BitSet::empty(self.num_attributes());
        for name in names {
            let name = name.as_ref();
            let id = self
                .attribute_index(name)
                .ok_or_else(|| Error::UnknownAttribute(name.to_owned()))?;
            set.insert(id.0);
        }
        Ok(set)
    }

    pub fn attribute_names_of(&self, set: &AttributeSet) -> Vec<&str> {
        set.iter().map(|i| self.attribute_names[i].as_str()).collect()
    }

    pub fn object_names_of(&self, set: &ObjectSet) -> Vec<&str> {
        set.iter().map(|i| self.object_names[i].as_str()).collect()
    }

    pub fn empty_attributes(&self) -> AttributeSet {
        BitSet::empty(self.num_attributes())
    }

    pub fn all_attributes(&self) -> AttributeSet {
        BitSet::full(self.num_attributes())
    }

    /// Number of crosses in the incidence table.
    pub fn crosses(&self) -> usize {
        self.rows.iter().map(BitSet::len).sum()
    }

    fn check_attributes(&self, attrs: &AttributeSet) {
        assert_eq!(
            attrs.width(),
            self.num_attributes(),
            "attribute set width does not match the context"
        );
    }

    /// Objects whose rows contain every attribute of `attrs`.
    pub fn extent(&self, attrs: &AttributeSet) -> ObjectSet {
        self.check_attributes(attrs);
        let mut out = BitSet::empty(self.num_objects());
        for (g, row) in self.rows.iter().enumerate() {
            if attrs.is_subset(row) {
                out.insert(g);
            }
        }
        out
    }

    /// Attributes shared by every object in `objects`; all attributes for the
    /// empty set.
    pub fn intent(&self, objects: &ObjectSet) -> AttributeSet {
        assert_eq!(
            objects.width(),
            self.num_objects(),
            "object set width does not match the context"
        );
        let mut out = self.all_attributes();
        for g in objects {
            out.intersect_with(&self.rows[g]);
        }
        out
    }

    /// `intent(extent(attrs))`, computed in a single pass over the rows.
    pub fn closure(&self, attrs: &AttributeSet) -> AttributeSet {
        self.check_attributes(attrs);
        let mut out = self.all_attributes();
        for row in &self.rows {
            if attrs.is_subset(row) {
                out.intersect_with(row);
            }
        }
        out
    }

    /// Whether some object's row contains `attrs`.
    pub fn is_supported(&self, attrs: &AttributeSet) -> bool {
        self.check_attributes(attrs);
        self.rows.iter().any(|row| attrs.is_subset(row))
    }

    /// Adds a negated copy `marker + name` of every attribute. Row `g` holds
    /// the negated copy of `m` exactly when it lacks `m`.
    pub fn dichotomize_with_marker(&self, marker: &str) -> Result<Self> {
        let mut names = self.attribute_names.clone();
        names.extend(self.attribute_names.iter().map(|n| format!("{marker}{n}")));
        let existing: HashSet<&str> = self.attribute_names.iter().map(String::as_str).collect();
        if let Some(clash) = names[self.num_attributes()..]
            .iter()
            .find(|n| existing.contains(n.as_str()))
        {
            return Err(Error::NameCollision(clash.clone()));
        }
        let m = self.num_attributes();
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut wide = BitSet::empty(2 * m);
                for i in 0..m {
                    if row.contains(i) {
                        wide.insert(i);
                    } else {
                        wide.insert(m + i);
                    }
                }
                wide
            })
            .collect();
        FormalContext::new(self.object_names.clone(), names, rows)
    }

    pub fn dichotomize(&self) -> Result<Self> {
        self.dichotomize_with_marker(NEGATION_MARKER)
    }

    /// Same objects and attributes with every incidence flipped.
    pub fn complement(&self) -> Self {
        FormalContext {
            object_names: self.object_names.clone(),
            attribute_names: self.attribute_names.clone(),
            rows: self.rows.iter().map(BitSet::complement).collect(),
        }
    }

    /// Objects whose (nonempty) intent is an intersection of other objects'
    /// intents.
    ///
    /// Among identical rows the first occurrence is kept as the
    /// representative, so removing every returned object at once leaves all
    /// closures unchanged.
    pub fn reducible_objects(&self) -> ObjectSet {
        let mut out = BitSet::empty(self.num_objects());
        for (g, row) in self.rows.iter().enumerate() {
            if row.is_empty() {
                continue;
            }
            if self.rows[..g].contains(row) {
                out.insert(g);
                continue;
            }
            let mut meet = self.all_attributes();
            for other in &self.rows {
                if row.is_proper_subset(other) {
                    meet.intersect_with(other);
                }
            }
            if &meet == row {
                out.insert(g);
            }
        }
        out
    }

    /// The context with every reducible object removed.
    pub fn reduce(&self) -> Self {
        self.retain_objects(&self.reducible_objects().complement())
    }

    /// Keeps only the objects in `keep`, preserving order.
    pub fn retain_objects(&self, keep: &ObjectSet) -> Self {
        let (object_names, rows) = keep
            .iter()
            .map(|g| (self.object_names[g].clone(), self.rows[g].clone()))
            .unzip();
        FormalContext {
            object_names,
            attribute_names: self.attribute_names.clone(),
            rows,
        }
    }

    pub fn without_object(&self, g: ObjectId) -> Self {
        let mut keep = BitSet::full(self.num_objects());
        keep.remove(g.0);
        self.retain_objects(&keep)
    }

    /// Appends a new object row.
    pub fn with_object(&self, name: &str, intent: AttributeSet) -> Result<Self> {
        if intent.width() != self.num_attributes() {
            return Err(Error::WidthMismatch {
                expected: self.num_attributes(),
                actual: intent.width(),
            });
        }
        if self.object_index(name).is_some() {
            return Err(Error::DuplicateObject(name.to_owned()));
        }
        let mut next = self.clone();
        next.object_names.push(name.to_owned());
        next.rows.push(intent);
        Ok(next)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn attrs(ctx: &FormalContext, names: &[&str]) -> AttributeSet {
        ctx.attribute_set(names).unwrap()
    }

    /// 1-based attribute numbers as in the quadrangle table.
    fn nums(ctx: &FormalContext, ids: &[usize]) -> AttributeSet {
        BitSet::from_indices(ctx.num_attributes(), ids.iter().map(|i| i - 1))
    }

    #[test]
    fn extent_examples() {
        let ctx = fixtures::quadrangles();
        assert!(ctx.extent(&ctx.empty_attributes()).is_full());
        assert_eq!(ctx.extent(&ctx.empty_attributes()).len(), 12);

        let a = attrs(
            &ctx,
            &[
                "has equal legs",
                "has equal angles",
                "at least 3 different angles",
                "at least 3 different legs",
            ],
        );
        let mut support = ctx.object_names_of(&ctx.extent(&a));
        support.sort();
        assert_eq!(
            support,
            vec![
                "Quadrangle with 2 equal legs and 2 equal angles",
                "Rectangular trapezium with 2 equal legs"
            ]
        );
        assert!(ctx.extent(&ctx.all_attributes()).is_empty());
    }

    #[test]
    fn intent_examples() {
        let ctx = fixtures::quadrangles();
        let square = ctx.object_index("Square").unwrap();
        let quad = ctx.object_index("Quadrangle").unwrap();
        let x = BitSet::from_indices(12, [square.0]);
        assert_eq!(ctx.intent(&x), nums(&ctx, &[1, 2, 3, 4, 5]));
        assert_eq!(ctx.intent(&BitSet::empty(12)), ctx.all_attributes());
        let x = BitSet::from_indices(12, [square.0, quad.0]);
        assert!(ctx.intent(&x).is_empty());
    }

    #[test]
    fn closure_examples() {
        let ctx = fixtures::quadrangles();
        let case4 = nums(&ctx, &[1, 2, 4, 7]);
        assert_eq!(ctx.closure(&case4), ctx.all_attributes());
        assert!(ctx.closure(&ctx.empty_attributes()).is_empty());
        let square = ctx.row(ctx.object_index("Square").unwrap()).clone();
        assert_eq!(ctx.closure(&square), square);
    }

    #[test]
    #[should_panic(expected = "width does not match")]
    fn extent_width_contract() {
        fixtures::quadrangles().extent(&BitSet::empty(3));
    }

    #[test]
    fn dichotomize_examples() {
        let ctx = fixtures::quadrangles();
        let d = ctx.dichotomize().unwrap();
        assert_eq!(d.num_objects(), 12);
        assert_eq!(d.num_attributes(), 14);
        assert_eq!(d.attribute_names()[7], "not_has equal legs");
        let square = d.row(ObjectId(0));
        assert_eq!(square, &BitSet::from_indices(14, [0, 1, 2, 3, 4, 12, 13]));
        assert!(d.rows().iter().all(|r| r.len() == 7));

        let tiny = FormalContext::from_cross_rows(&["g"], &["m"], &["."]).unwrap();
        let d = tiny.dichotomize().unwrap();
        assert_eq!(d.row(ObjectId(0)), &BitSet::from_indices(2, [1]));
    }

    #[test]
    fn dichotomize_rejects_collisions() {
        let ctx = FormalContext::from_cross_rows(&["g"], &["a", "not_a"], &["X."]).unwrap();
        assert!(matches!(ctx.dichotomize(), Err(Error::NameCollision(n)) if n == "not_a"));
        assert!(ctx.dichotomize_with_marker("~").is_ok());
    }

    #[test]
    fn complement_examples() {
        let ctx = fixtures::quadrangles();
        let c = ctx.complement();
        assert_eq!(c.row(ObjectId(0)), &nums(&ctx, &[6, 7]));
        assert_eq!(c.complement(), ctx);
        assert_eq!(ctx.crosses(), 42);
        assert_eq!(c.crosses(), 12 * 7 - 42);

        let empty = FormalContext::from_cross_rows(&["a", "b"], &["x", "y"], &["..", ".."]).unwrap();
        assert!(empty.complement().rows().iter().all(BitSet::is_full));
    }

    #[test]
    fn reducible_examples() {
        let ctx = fixtures::quadrangles();
        let red = ctx.reducible_objects();
        let para = ctx.object_index("Parallelogram").unwrap();
        assert!(red.contains(para.0));
        // {6,7} = {2,6,7} ∩ {1,6,7}
        assert!(red.contains(ctx.object_index("Quadrangle").unwrap().0));
        assert!(!red.contains(ctx.object_index("Square").unwrap().0));
        assert!(!red.contains(ctx.object_index("Isosceles trapezium").unwrap().0));

        let singletons =
            FormalContext::from_cross_rows(&["a", "b", "c"], &["x", "y", "z"], &["X..", ".X.", "..X"])
                .unwrap();
        assert!(singletons.reducible_objects().is_empty());
    }

    #[test]
    fn duplicate_rows_keep_one_representative() {
        let ctx = FormalContext::from_cross_rows(&["a", "b"], &["x", "y"], &["X.", "X."]).unwrap();
        let red = ctx.reducible_objects();
        assert_eq!(red.iter().collect::<Vec<_>>(), vec![1]);
        assert_eq!(ctx.reduce().num_objects(), 1);
    }

    #[test]
    fn constructor_rejects_duplicates() {
        assert!(matches!(
            FormalContext::from_cross_rows(&["a", "a"], &["x"], &["X", "."]),
            Err(Error::DuplicateObject(_))
        ));
        assert!(matches!(
            FormalContext::from_cross_rows(&["a"], &["x", "x"], &["X."]),
            Err(Error::DuplicateAttribute(_))
        ));
    }

    #[test]
    fn empty_contexts_follow_conventions() {
        let no_objects = FormalContext::new(vec![], vec!["a".into(), "b".into()], vec![]).unwrap();
        assert!(no_objects.closure(&no_objects.empty_attributes()).is_full());
        let no_attrs = FormalContext::new(vec!["g".into()], vec![], vec![BitSet::empty(0)]).unwrap();
        assert!(no_attrs.closure(&no_attrs.empty_attributes()).is_empty());
        assert_eq!(no_attrs.extent(&no_attrs.empty_attributes()).len(), 1);
    }

    pub(crate) fn arb_context(
        max_g: usize,
        max_m: usize,
    ) -> impl Strategy<Value = FormalContext> {
        (0..=max_g, 0..=max_m).prop_flat_map(|(g, m)| {
            proptest::collection::vec(proptest::collection::vec(any::<bool>(), m), g).prop_map(
                move |rows| {
                    let rows = rows
                        .into_iter()
                        .map(|r| {
                            BitSet::from_indices(m, r.iter().enumerate().filter(|x| *x.1).map(|x| x.0))
                        })
                        .collect();
                    FormalContext::new(
                        (0..g).map(|i| format!("g{i}")).collect(),
                        (0..m).map(|i| format!("m{i}")).collect(),
                        rows,
                    )
                    .unwrap()
                },
            )
        })
    }

    fn all_subsets(width: usize) -> impl Iterator<Item = BitSet> {
        (0u32..1 << width).map(move |mask| {
            BitSet::from_indices(width, (0..width).filter(move |i| mask & (1 << i) != 0))
        })
    }

    proptest! {
        #[test]
        fn galois_connection(ctx in arb_context(5, 5)) {
            let g = ctx.num_objects();
            let m = ctx.num_attributes();
            for a in all_subsets(m) {
                for x in all_subsets(g) {
                    prop_assert_eq!(x.is_subset(&ctx.extent(&a)), a.is_subset(&ctx.intent(&x)));
                }
            }
        }

        #[test]
        fn closure_is_a_closure_operator(ctx in arb_context(5, 5)) {
            let m = ctx.num_attributes();
            let sets: Vec<_> = all_subsets(m).collect();
            for a in &sets {
                let c = ctx.closure(a);
                prop_assert!(a.is_subset(&c));
                prop_assert_eq!(&ctx.closure(&c), &c);
                prop_assert_eq!(&c, &ctx.intent(&ctx.extent(a)));
                for b in &sets {
                    if a.is_subset(b) {
                        prop_assert!(ctx.extent(b).is_subset(&ctx.extent(a)));
                        prop_assert!(c.is_subset(&ctx.closure(b)));
                    }
                }
            }
        }

        #[test]
        fn dichotomized_rows_partition(ctx in arb_context(6, 6)) {
            let m = ctx.num_attributes();
            let d = ctx.dichotomize().unwrap();
            for row in d.rows() {
                for i in 0..m {
                    prop_assert!(row.contains(i) ^ row.contains(m + i));
                }
            }
        }

        #[test]
        fn reduction_preserves_closures(ctx in arb_context(7, 5)) {
            let reduced = ctx.reduce();
            for a in all_subsets(ctx.num_attributes()) {
                prop_assert_eq!(ctx.closure(&a), reduced.closure(&a));
            }
        }
    }
}
