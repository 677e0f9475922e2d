//! Library operations checked against brute-force enumeration on the
//! fixture signatures.

mod common;

use std::collections::BTreeSet;

use common::*;
use tfs_core::fstruct::{
    extensions, graph_unify, resolvants, set_unify, well_typed_check, FeatureStructure, FsSet,
};
use tfs_core::mi_compile::{compile_single_inheritance, expand_fs};
use tfs_core::normalize::{factor_disjunction, group_by_shape, normalize_pipeline, unextend, unfill};
use tfs_core::signature::Signature;
use tfs_core::termcode::{build_layout, term_unify, VarSupply};

fn names(s: &FsSet, sig: &Signature) -> BTreeSet<String> {
    s.iter().map(|m| m.display(sig).to_string()).collect()
}

#[test]
fn resolvants_match_enumeration_on_corpus() {
    for (file, desc) in corpus() {
        let sig = fixture(&file);
        let x = fs(&desc, &sig);
        assert_eq!(resolvants(&x, &sig), brute_resolvants(&x, &sig), "{file}: {desc}");
        assert_eq!(extensions(&x, &sig), brute_extensions(&x, &sig), "{file}: {desc}");
    }
}

#[test]
fn resolvants_match_enumeration_on_all_two_node_structures() {
    for file in ["fig1.sig", "bool.sig", "hpsg.sig"] {
        let sig = fixture(&file);
        for t in sig.types() {
            for (f, _) in sig.appropriate_features(t) {
                for v in sig.types() {
                    let mut b = tfs_core::fstruct::FsBuilder::new();
                    let r = b.node(t);
                    let c = b.node(v);
                    b.arc(r, f, c);
                    let x = b.finish(r).unwrap();
                    assert_eq!(resolvants(&x, &sig), brute_resolvants(&x, &sig));
                }
            }
        }
    }
}

/// Every same-shape subset (up to 16 members) of a corpus entry's extension
/// set round-trips through unextension, and the cover is as small as the
/// exhaustive search finds.
#[test]
fn unextend_is_exact_and_minimal() {
    let mut checked = 0;
    for (file, desc) in corpus() {
        let sig = fixture(&file);
        let x = fs(&desc, &sig);
        let ext: Vec<FeatureStructure> = brute_extensions(&x, &sig).into_iter().collect();
        if ext.is_empty() || ext.len() > 16 {
            continue;
        }
        // the full set and every prefix of it
        for k in 1..=ext.len() {
            let s: FsSet = ext[..k].iter().cloned().collect();
            let u = unextend(&s, &sig);
            assert_eq!(brute_set_extensions(&u, &sig), s, "{file}: {desc} prefix {k}");
            if x.node_count() <= 2 {
                assert_eq!(u.len(), brute_min_cover(&s, &sig), "{file}: {desc} prefix {k}");
            }
            checked += 1;
        }
    }
    assert!(checked > 30);
}

#[test]
fn unextend_minimal_on_exhaustive_bool_subsets() {
    let sig = fixture("bool.sig");
    let x = fs("a(f: bool, g: bool)", &sig);
    let ext: Vec<FeatureStructure> = brute_extensions(&x, &sig).into_iter().collect();
    assert_eq!(ext.len(), 2 * 2 * 2);
    for mask in 1u32..(1 << ext.len()) {
        let s: FsSet = (0..ext.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| ext[i].clone())
            .collect();
        let u = unextend(&s, &sig);
        assert_eq!(brute_set_extensions(&u, &sig), s);
        if mask.count_ones() <= 6 {
            assert_eq!(u.len(), brute_min_cover(&s, &sig));
        }
    }
}

#[test]
fn unfill_is_idempotent_on_corpus() {
    for (file, desc) in corpus() {
        let sig = fixture(&file);
        let x = fs(&desc, &sig);
        let once = unfill(&x, &sig);
        assert_eq!(unfill(&once, &sig), once, "{file}: {desc}");
        for r in &resolvants(&x, &sig) {
            let u = unfill(r, &sig);
            assert_eq!(unfill(&u, &sig), u);
        }
    }
}

/// Filling each normal-form member back out to the input's skeleton and
/// resolving recovers exactly the input's resolvants.
#[test]
fn pipeline_preserves_resolvants() {
    for (file, desc) in corpus() {
        let sig = fixture(&file);
        let x = fs(&desc, &sig);
        let skeleton = x.relabel(vec![sig.top(); x.node_count()]);
        let mut back = FsSet::new();
        for m in &normalize_pipeline(&x, &sig) {
            let filled = graph_unify(m, &skeleton, &sig).expect("member shape is a sub-skeleton");
            back.extend(resolvants(&filled, &sig));
        }
        assert_eq!(back, resolvants(&x, &sig), "{file}: {desc}");
    }
}

#[test]
fn factoring_round_trips_on_corpus() {
    for (file, desc) in corpus() {
        let sig = fixture(&file);
        let x = fs(&desc, &sig);
        for group in group_by_shape(&normalize_pipeline(&x, &sig)) {
            let s: FsSet = group.into_iter().collect();
            let fac = factor_disjunction(&s, &sig).unwrap();
            assert_eq!(fac.expand(), s, "{file}: {desc}");
            for t in &fac.tables {
                assert!(t.rows.len() >= 2);
                for col in 0..t.sites.len() {
                    let vals: BTreeSet<_> = t.rows.iter().map(|r| r[col]).collect();
                    assert!(vals.len() >= 2, "constant column");
                }
            }
        }
        // the resolvant set itself has one shape
        let res = resolvants(&x, &sig);
        if !res.is_empty() {
            assert_eq!(factor_disjunction(&res, &sig).unwrap().expand(), res);
        }
    }
}

#[test]
fn set_unify_matches_pairwise_brute_force() {
    let sig = fixture("fig1.sig");
    let descs = ["b(f: a)", "e", "d", "b(f: a2)", "e(g: c)", "b"];
    for l in descs {
        for r in descs {
            let (x, y) = (fs(l, &sig), fs(r, &sig));
            let got = set_unify(&resolvants(&x, &sig), &resolvants(&y, &sig), &sig);
            // species-labelled unifications are just agreement on every node
            let mut expected = FsSet::new();
            if let Some(u) = graph_unify(&x, &y, &sig) {
                expected = brute_resolvants(&u, &sig);
            }
            assert_eq!(got, expected, "{l} + {r}");
            assert!(got.iter().all(|m| well_typed_check(m, &sig) && m.is_species_labelled(&sig)));
        }
    }
}

#[test]
fn multiple_inheritance_compilation_preserves_resolvants() {
    let sig = fixture("list.sig");
    let comp = compile_single_inheritance(&sig).unwrap();
    let c = &comp.compiled;
    let mut checked = 0;
    let mut inputs: Vec<FeatureStructure> = sig.types().map(FeatureStructure::atomic).collect();
    let head = sig.feature_id("head").unwrap();
    let tail = sig.feature_id("tail").unwrap();
    for t in sig.types() {
        for h in sig.types() {
            for tl in sig.types() {
                let mut b = tfs_core::fstruct::FsBuilder::new();
                let r = b.node(t);
                let x = b.node(h);
                let y = b.node(tl);
                b.arc(r, head, x);
                b.arc(r, tail, y);
                inputs.push(b.finish(r).unwrap());
            }
        }
    }
    for x in inputs {
        let before = names(&resolvants(&x, &sig), &sig);
        let mut after = BTreeSet::new();
        for e in &expand_fs(&x, &comp) {
            after.extend(names(&resolvants(e, c), c));
        }
        assert_eq!(before, after, "{}", x.display(&sig));
        checked += 1;
    }
    assert!(checked > 1000);
}

#[test]
fn replacement_sets_are_antichains_covering_species() {
    let sig = fixture("list.sig");
    let comp = compile_single_inheritance(&sig).unwrap();
    let c = &comp.compiled;
    for &removed in &comp.removed {
        let images = comp.images(removed);
        for &a in &images {
            for &b in &images {
                assert!(a == b || !c.subsumes(a, b));
            }
        }
        let below: BTreeSet<String> = sig
            .species_of(removed)
            .iter()
            .map(|&s| sig.type_name(s).to_string())
            .collect();
        let covered: BTreeSet<String> = images
            .iter()
            .flat_map(|&i| c.species_of(i))
            .map(|s| c.type_name(s).to_string())
            .collect();
        assert_eq!(below, covered);
    }
}

/// Subsumption is instantiation of encodings, and encodings of comparable
/// types always unify.
#[test]
fn subsumption_is_instantiation() {
    for file in ["fig1.sig", "bool.sig", "hpsg.sig"] {
        let sig = fixture(file);
        let layout = build_layout(&sig).unwrap();
        for t1 in sig.types() {
            for t2 in sig.types() {
                let mut vs = VarSupply::new();
                let e1 = layout.encode_type(t1, &mut vs);
                let e2 = layout.encode_type(t2, &mut vs);
                let comparable = sig.subsumes(t1, t2) || sig.subsumes(t2, t1);
                let u = term_unify(&e1, &e2);
                assert_eq!(u.is_some(), comparable, "{file}: {} {}", sig.type_name(t1), sig.type_name(t2));
                if sig.subsumes(t1, t2) {
                    let s = u.unwrap();
                    assert!(s.resolve(&e1).is_variant(&e2));
                    assert!(is_instance(&e1, &e2));
                }
            }
        }
    }
}
