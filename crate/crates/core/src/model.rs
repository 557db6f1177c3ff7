//! Domain model: attribute schemas, tuples, datasets, and the brute-force
//! skyline / sky-band oracles used as ground truth everywhere else.
//!
//! All attribute values are normalized indices with 0 the most preferred
//! value of its attribute, so every comparison downstream is
//! "smaller is better". Only ranking attributes take part in dominance.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What kind of predicate an attribute's search control accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterfaceClass {
    /// Single-ended range: `<`, `<=`, `=`.
    Sq,
    /// Two-ended range: all of `<`, `<=`, `=`, `>=`, `>`.
    Rq,
    /// Point predicates only: `=`.
    Pq,
}

impl InterfaceClass {
    /// SQ capability in the "RQ counts, PQ does not" sense.
    pub fn supports_upper_bound(self) -> bool {
        matches!(self, InterfaceClass::Sq | InterfaceClass::Rq)
    }

    pub fn supports_lower_bound(self) -> bool {
        matches!(self, InterfaceClass::Rq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeRole {
    Ranking,
    Filtering,
}

/// Per-attribute declaration: normalized domain `0..domain_size`,
/// interface class, and whether the attribute ranks or merely filters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    pub domain_size: u32,
    pub interface_class: InterfaceClass,
    pub role: AttributeRole,
}

impl AttributeSchema {
    pub fn ranking(name: &str, domain_size: u32, class: InterfaceClass) -> Self {
        AttributeSchema {
            name: name.to_string(),
            domain_size,
            interface_class: class,
            role: AttributeRole::Ranking,
        }
    }

    pub fn is_ranking(&self) -> bool {
        self.role == AttributeRole::Ranking
    }
}

pub type TupleId = u64;

/// A point in the normalized attribute grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tuple {
    pub id: TupleId,
    pub values: Vec<u32>,
}

impl Tuple {
    pub fn new(id: TupleId, values: Vec<u32>) -> Self {
        Tuple { id, values }
    }
}

/// Returns true iff `t` dominates `u`: distinct tuples with
/// `t[i] <= u[i]` on every ranking attribute `i`.
pub fn dominates(t: &Tuple, u: &Tuple, schema: &[AttributeSchema]) -> Result<bool> {
    if t.values.len() != schema.len() || u.values.len() != schema.len() {
        return Err(Error::MalformedInput(format!(
            "tuple arity mismatch: schema has {} attributes, tuples have {} and {}",
            schema.len(),
            t.values.len(),
            u.values.len()
        )));
    }
    if t.id == u.id {
        return Ok(false);
    }
    Ok(dominates_values(&t.values, &u.values, schema))
}

/// Dominance on raw value slices, assuming both conform to `schema`.
/// Equal ranking combinations count as mutual weak dominance; datasets
/// reject those at construction, so in practice this is strict.
pub(crate) fn dominates_values(a: &[u32], b: &[u32], schema: &[AttributeSchema]) -> bool {
    for (i, attr) in schema.iter().enumerate() {
        if attr.is_ranking() && a[i] > b[i] {
            return false;
        }
    }
    true
}

/// A dataset together with its schema. Construction validates the
/// general-positioning invariant: no two tuples share a ranking-attribute
/// value combination.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    schema: Vec<AttributeSchema>,
    tuples: Vec<Tuple>,
    #[serde(skip)]
    by_id: HashMap<TupleId, usize>,
}

impl Dataset {
    pub fn new(schema: Vec<AttributeSchema>, tuples: Vec<Tuple>) -> Result<Self> {
        if schema.is_empty() {
            return Err(Error::Schema("schema must have at least one attribute".into()));
        }
        for attr in &schema {
            if attr.domain_size == 0 {
                return Err(Error::Schema(format!(
                    "attribute {} has empty domain",
                    attr.name
                )));
            }
        }
        if !schema.iter().any(|a| a.is_ranking()) {
            return Err(Error::Schema("at least one ranking attribute required".into()));
        }
        let ranking: Vec<usize> = schema
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_ranking())
            .map(|(i, _)| i)
            .collect();
        let mut by_id = HashMap::with_capacity(tuples.len());
        let mut combos: HashMap<Vec<u32>, TupleId> = HashMap::with_capacity(tuples.len());
        for (idx, t) in tuples.iter().enumerate() {
            if t.values.len() != schema.len() {
                return Err(Error::MalformedInput(format!(
                    "tuple {} has {} values, schema has {} attributes",
                    t.id,
                    t.values.len(),
                    schema.len()
                )));
            }
            for (i, &v) in t.values.iter().enumerate() {
                if v >= schema[i].domain_size {
                    return Err(Error::MalformedInput(format!(
                        "tuple {} value {} out of domain for attribute {}",
                        t.id, v, schema[i].name
                    )));
                }
            }
            let combo: Vec<u32> = ranking.iter().map(|&i| t.values[i]).collect();
            if let Some(prev) = combos.insert(combo, t.id) {
                return Err(Error::MalformedInput(format!(
                    "tuples {} and {} share a ranking-attribute combination",
                    prev, t.id
                )));
            }
            if by_id.insert(t.id, idx).is_some() {
                return Err(Error::MalformedInput(format!("duplicate tuple id {}", t.id)));
            }
        }
        Ok(Dataset {
            schema,
            tuples,
            by_id,
        })
    }

    pub fn schema(&self) -> &[AttributeSchema] {
        &self.schema
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuple(&self, id: TupleId) -> Option<&Tuple> {
        self.by_id.get(&id).map(|&i| &self.tuples[i])
    }

    /// Indices of ranking attributes in schema order.
    pub fn ranking_attrs(&self) -> Vec<usize> {
        self.schema
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_ranking())
            .map(|(i, _)| i)
            .collect()
    }

    /// Rebuild the id index after deserialization.
    pub fn reindex(&mut self) {
        self.by_id = self
            .tuples
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id, i))
            .collect();
    }
}

/// The set of tuples not dominated by any other tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkylineSet {
    members: BTreeSet<TupleId>,
}

impl SkylineSet {
    pub fn from_ids(ids: impl IntoIterator<Item = TupleId>) -> Self {
        SkylineSet {
            members: ids.into_iter().collect(),
        }
    }

    pub fn members(&self) -> &BTreeSet<TupleId> {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: TupleId) -> bool {
        self.members.contains(&id)
    }
}

/// O(n^2) scan: exactly the tuples not dominated by any other tuple.
pub fn oracle_skyline(d: &Dataset) -> SkylineSet {
    let schema = d.schema();
    let mut members = BTreeSet::new();
    'outer: for t in d.tuples() {
        for u in d.tuples() {
            if u.id != t.id && dominates_values(&u.values, &t.values, schema) {
                continue 'outer;
            }
        }
        members.insert(t.id);
    }
    SkylineSet { members }
}

/// Tuples dominated by fewer than `h` others. `h = 1` equals the skyline.
pub fn oracle_skyband(d: &Dataset, h: usize) -> Result<BTreeSet<TupleId>> {
    if h == 0 {
        return Err(Error::InvalidParameter("sky-band depth h must be >= 1".into()));
    }
    let schema = d.schema();
    let mut band = BTreeSet::new();
    for t in d.tuples() {
        let mut dominators = 0usize;
        for u in d.tuples() {
            if u.id != t.id && dominates_values(&u.values, &t.values, schema) {
                dominators += 1;
                if dominators >= h {
                    break;
                }
            }
        }
        if dominators < h {
            band.insert(t.id);
        }
    }
    Ok(band)
}

/// Count of tuples in `d` dominating `t`.
pub fn dominator_count(d: &Dataset, t: &Tuple) -> usize {
    let schema = d.schema();
    d.tuples()
        .iter()
        .filter(|u| u.id != t.id && dominates_values(&u.values, &t.values, schema))
        .count()
}

/// The worked four-tuple example used across the test suite:
/// t1=(5,1,9), t2=(4,4,8), t3=(1,3,7), t4=(3,2,3) over 10-value domains.
pub fn four_tuple_example(class: InterfaceClass) -> Dataset {
    let schema = vec![
        AttributeSchema::ranking("a1", 10, class),
        AttributeSchema::ranking("a2", 10, class),
        AttributeSchema::ranking("a3", 10, class),
    ];
    let tuples = vec![
        Tuple::new(1, vec![5, 1, 9]),
        Tuple::new(2, vec![4, 4, 8]),
        Tuple::new(3, vec![1, 3, 7]),
        Tuple::new(4, vec![3, 2, 3]),
    ];
    Dataset::new(schema, tuples).expect("example dataset is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example() -> Dataset {
        four_tuple_example(InterfaceClass::Sq)
    }

    #[test]
    fn dominates_on_example_tuples() {
        let d = example();
        let t4 = d.tuple(4).unwrap();
        let t2 = d.tuple(2).unwrap();
        let t1 = d.tuple(1).unwrap();
        let t3 = d.tuple(3).unwrap();
        assert!(dominates(t4, t2, d.schema()).unwrap());
        assert!(!dominates(t2, t4, d.schema()).unwrap());
        // incomparable pair
        assert!(!dominates(t1, t3, d.schema()).unwrap());
        assert!(!dominates(t3, t1, d.schema()).unwrap());
        // same tuple never dominates itself
        assert!(!dominates(t4, t4, d.schema()).unwrap());
    }

    #[test]
    fn dominates_rejects_arity_mismatch() {
        let d = example();
        let bad = Tuple::new(99, vec![1, 2]);
        let t1 = d.tuple(1).unwrap();
        assert!(matches!(
            dominates(&bad, t1, d.schema()),
            Err(Error::MalformedInput(_))
        ));
    }

    #[test]
    fn oracle_skyline_on_example() {
        let d = example();
        let sky = oracle_skyline(&d);
        assert_eq!(
            sky.members().iter().copied().collect::<Vec<_>>(),
            vec![1, 3, 4]
        );
    }

    #[test]
    fn oracle_skyline_trivial_cases() {
        let schema = vec![AttributeSchema::ranking("a", 4, InterfaceClass::Sq)];
        let empty = Dataset::new(schema.clone(), vec![]).unwrap();
        assert!(oracle_skyline(&empty).is_empty());

        let single = Dataset::new(schema, vec![Tuple::new(7, vec![2])]).unwrap();
        let sky = oracle_skyline(&single);
        assert_eq!(sky.len(), 1);
        assert!(sky.contains(7));
    }

    #[test]
    fn skyband_on_example() {
        let d = example();
        let band1 = oracle_skyband(&d, 1).unwrap();
        assert_eq!(band1, oracle_skyline(&d).members().clone());
        // t2=(4,4,8) is dominated by both t3=(1,3,7) and t4=(3,2,3),
        // so it joins the band only at h=3
        let band2 = oracle_skyband(&d, 2).unwrap();
        assert_eq!(band2.iter().copied().collect::<Vec<_>>(), vec![1, 3, 4]);
        let band3 = oracle_skyband(&d, 3).unwrap();
        assert_eq!(band3.len(), 4);
        let all = oracle_skyband(&d, 10).unwrap();
        assert_eq!(all.len(), 4);
        assert!(oracle_skyband(&d, 0).is_err());
    }

    #[test]
    fn dataset_rejects_duplicate_ranking_combo() {
        let schema = vec![
            AttributeSchema::ranking("a", 4, InterfaceClass::Sq),
            AttributeSchema {
                name: "f".into(),
                domain_size: 4,
                interface_class: InterfaceClass::Pq,
                role: AttributeRole::Filtering,
            },
        ];
        let r = Dataset::new(
            schema,
            vec![Tuple::new(0, vec![1, 0]), Tuple::new(1, vec![1, 3])],
        );
        assert!(r.is_err(), "same ranking value, different filter value");
    }

    #[test]
    fn dataset_rejects_out_of_domain() {
        let schema = vec![AttributeSchema::ranking("a", 4, InterfaceClass::Sq)];
        assert!(Dataset::new(schema, vec![Tuple::new(0, vec![4])]).is_err());
    }

    fn arb_dataset() -> impl Strategy<Value = Dataset> {
        // up to 24 tuples over 3 ranking attributes with domain 8;
        // duplicates by ranking combo filtered out
        proptest::collection::vec(proptest::collection::vec(0u32..8, 3), 0..24).prop_map(
            |rows| {
                let schema = vec![
                    AttributeSchema::ranking("a", 8, InterfaceClass::Rq),
                    AttributeSchema::ranking("b", 8, InterfaceClass::Rq),
                    AttributeSchema::ranking("c", 8, InterfaceClass::Rq),
                ];
                let mut seen = std::collections::HashSet::new();
                let tuples: Vec<Tuple> = rows
                    .into_iter()
                    .filter(|r| seen.insert(r.clone()))
                    .enumerate()
                    .map(|(i, r)| Tuple::new(i as TupleId, r))
                    .collect();
                Dataset::new(schema, tuples).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn dominance_antisymmetric_and_transitive(d in arb_dataset()) {
            let schema = d.schema();
            for t in d.tuples() {
                for u in d.tuples() {
                    let tu = dominates(t, u, schema).unwrap();
                    let ut = dominates(u, t, schema).unwrap();
                    prop_assert!(!(tu && ut), "antisymmetry violated");
                    for w in d.tuples() {
                        if tu && dominates(u, w, schema).unwrap() {
                            prop_assert!(dominates(t, w, schema).unwrap(), "transitivity violated");
                        }
                    }
                }
            }
        }

        #[test]
        fn skyband_one_is_skyline(d in arb_dataset()) {
            prop_assert_eq!(
                oracle_skyband(&d, 1).unwrap(),
                oracle_skyline(&d).members().clone()
            );
        }

        #[test]
        fn skyline_members_pairwise_incomparable(d in arb_dataset()) {
            let sky = oracle_skyline(&d);
            for &a in sky.members() {
                for &b in sky.members() {
                    if a != b {
                        let ta = d.tuple(a).unwrap();
                        let tb = d.tuple(b).unwrap();
                        prop_assert!(!dominates(ta, tb, d.schema()).unwrap());
                    }
                }
            }
        }

        #[test]
        fn adding_tuple_never_resurrects_dominated(d in arb_dataset(), extra in proptest::collection::vec(0u32..8, 3)) {
            let before = oracle_skyline(&d);
            let mut tuples = d.tuples().to_vec();
            let combo_exists = tuples.iter().any(|t| t.values == extra);
            prop_assume!(!combo_exists);
            let dominated_before: Vec<TupleId> = d
                .tuples()
                .iter()
                .filter(|t| !before.contains(t.id))
                .map(|t| t.id)
                .collect();
            tuples.push(Tuple::new(1000, extra));
            let d2 = Dataset::new(d.schema().to_vec(), tuples).unwrap();
            let after = oracle_skyline(&d2);
            for id in dominated_before {
                prop_assert!(!after.contains(id), "dominated tuple re-entered the skyline");
            }
        }
    }
}
