//! Built-in smooth reflexive polytopes.

use crate::error::Result;
use crate::polytope::ReflexivePolytope;

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub key: &'static str,
    pub polytope: ReflexivePolytope,
    pub notes: &'static str,
}

const ENTRIES: &[(&str, &[&[i64]], &str)] = &[
    ("P1", &[&[-1], &[1]], "projective line"),
    ("P2", &[&[2, -1], &[-1, 2], &[-1, -1]], "projective plane"),
    ("P1xP1", &[&[1, 1], &[-1, 1], &[-1, -1], &[1, -1]], "product of two lines; centrally symmetric"),
    ("F1", &[&[-1, -1], &[0, -1], &[2, 1], &[-1, 1]], "plane blown up at one point (Hirzebruch F1)"),
    ("Bl2P2", &[&[1, 0], &[1, -1], &[0, -1], &[-1, 0], &[-1, 2]], "plane blown up at two points"),
    (
        "Bl3P2",
        &[&[1, 0], &[1, 1], &[0, 1], &[-1, 0], &[-1, -1], &[0, -1]],
        "plane blown up at three points (hexagon); centrally symmetric",
    ),
    (
        "P1xP2",
        &[&[-1, 2, -1], &[-1, -1, 2], &[-1, -1, -1], &[1, 2, -1], &[1, -1, 2], &[1, -1, -1]],
        "product of a line and a plane (prism)",
    ),
    (
        "P3",
        &[&[3, -1, -1], &[-1, 3, -1], &[-1, -1, 3], &[-1, -1, -1]],
        "projective space",
    ),
];

/// Every entry, in a fixed order. Entries are validated on construction.
pub fn builtin_catalog() -> Vec<CatalogEntry> {
    ENTRIES
        .iter()
        .map(|&(key, coords, notes)| CatalogEntry {
            key,
            polytope: ReflexivePolytope::from_coords(key, coords).expect("catalog entries are smooth reflexive"),
            notes,
        })
        .collect()
}

/// Case-insensitive lookup.
pub fn lookup(key: &str) -> Option<CatalogEntry> {
    builtin_catalog().into_iter().find(|e| e.key.eq_ignore_ascii_case(key))
}

/// A smooth reflexive 3-polytope whose `α` exceeds 1. Used to exercise the
/// refusal path of the solver.
pub fn unstable_example() -> Result<ReflexivePolytope> {
    ReflexivePolytope::from_coords(
        "unstable-3d",
        &[&[-1, -1, -1], &[-1, -1, 1], &[-1, 0, -1], &[-1, 4, 1], &[0, -1, -1], &[4, -1, 1]],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::{alpha_invariant, solve_l};
    use crate::scalar::{int, rat};

    #[test]
    fn keys_are_unique_and_entries_validate() {
        let cat = builtin_catalog();
        let mut keys: Vec<&str> = cat.iter().map(|e| e.key).collect();
        keys.sort_unstable();
        keys.dedup();
        assert_eq!(keys.len(), cat.len());
        assert!(lookup("f1").is_some());
        assert!(lookup("nope").is_none());
    }

    #[test]
    fn symmetric_entries_have_zero_alpha() {
        for key in ["P1xP1", "Bl3P2"] {
            let p = lookup(key).unwrap().polytope;
            let l = solve_l(&p.moments()).unwrap();
            assert_eq!(alpha_invariant(&p, &l), int(0), "{key}");
        }
    }

    #[test]
    fn unstable_example_has_large_alpha() {
        let p = unstable_example().unwrap();
        let l = solve_l(&p.moments()).unwrap();
        assert_eq!(alpha_invariant(&p, &l), rat(380, 349));
    }
}
