//! Fixture loading and brute-force reference implementations.
#![allow(dead_code)]

use std::collections::BTreeSet;

use tfs_core::fstruct::{parse_fs, well_typed_check, FeatureStructure, FsSet};
use tfs_core::signature::{parse_signature, Signature, TypeId};
use tfs_core::termcode::{Term, Var};

pub fn fixture_text(name: &str) -> String {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn fixture(name: &str) -> Signature {
    parse_signature(&fixture_text(name)).unwrap()
}

/// (signature file, description) pairs from the corpus.
pub fn corpus() -> Vec<(String, String)> {
    fixture_text("corpus.txt")
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (s, d) = l.split_once('|').expect("sig | desc");
            (s.trim().to_string(), d.trim().to_string())
        })
        .collect()
}

pub fn fs(text: &str, sig: &Signature) -> FeatureStructure {
    parse_fs(text, sig).unwrap_or_else(|e| panic!("{text}: {e}"))
}

pub fn set(descs: &[&str], sig: &Signature) -> FsSet {
    descs.iter().map(|d| fs(d, sig)).collect()
}

/// Every assignment of a type from `choices[i]` to node `i`.
pub fn labellings(fs: &FeatureStructure, choices: &[Vec<TypeId>]) -> Vec<FeatureStructure> {
    let mut out = vec![Vec::new()];
    for c in choices {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<TypeId>| {
                c.iter().map(move |&t| {
                    let mut p = prefix.clone();
                    p.push(t);
                    p
                })
            })
            .collect();
    }
    out.into_iter().map(|types| fs.relabel(types)).collect()
}

fn species_below(sig: &Signature, t: TypeId) -> Vec<TypeId> {
    sig.all_species()
        .iter()
        .copied()
        .filter(|&s| sig.subsumes(t, s))
        .collect()
}

/// Species relabellings below each node's type, unfiltered.
pub fn brute_extensions(fs: &FeatureStructure, sig: &Signature) -> FsSet {
    let choices: Vec<Vec<TypeId>> = fs.types().iter().map(|&t| species_below(sig, t)).collect();
    labellings(fs, &choices).into_iter().collect()
}

/// Extensions that are well-typed.
pub fn brute_resolvants(fs: &FeatureStructure, sig: &Signature) -> FsSet {
    brute_extensions(fs, sig)
        .into_iter()
        .filter(|m| well_typed_check(m, sig))
        .collect()
}

pub fn brute_set_extensions(s: &FsSet, sig: &Signature) -> FsSet {
    let mut out = FsSet::new();
    for m in s {
        out.extend(brute_extensions(m, sig));
    }
    out
}

/// Size of a smallest set of relabellings of `s`'s common skeleton whose
/// extensions are exactly `s`, by exhaustive search.
pub fn brute_min_cover(s: &FsSet, sig: &Signature) -> usize {
    let skeleton = s.iter().next().expect("non-empty").clone();
    let all: Vec<TypeId> = sig.types().collect();
    let choices = vec![all; skeleton.node_count()];
    let boxes: Vec<BTreeSet<FeatureStructure>> = labellings(&skeleton, &choices)
        .into_iter()
        .map(|c| brute_extensions(&c, sig).into_iter().collect::<BTreeSet<_>>())
        .filter(|e| !e.is_empty() && e.iter().all(|m| s.contains(m)))
        .collect();
    let target: BTreeSet<FeatureStructure> = s.iter().cloned().collect();
    for k in 1..=s.len() {
        if covers(&boxes, k, 0, &BTreeSet::new(), &target) {
            return k;
        }
    }
    unreachable!("singletons always cover")
}

fn covers(
    boxes: &[BTreeSet<FeatureStructure>],
    k: usize,
    from: usize,
    acc: &BTreeSet<FeatureStructure>,
    target: &BTreeSet<FeatureStructure>,
) -> bool {
    if acc == target {
        return true;
    }
    if k == 0 {
        return false;
    }
    (from..boxes.len()).any(|i| {
        let next: BTreeSet<_> = acc.union(&boxes[i]).cloned().collect();
        covers(boxes, k - 1, i + 1, &next, target)
    })
}

/// One-way matching: is `specific` an instance of `general`?
pub fn is_instance(general: &Term, specific: &Term) -> bool {
    fn go(g: &Term, s: &Term, map: &mut Vec<(Var, Term)>) -> bool {
        match g {
            Term::Var(v) => match map.iter().find(|(w, _)| w == v) {
                Some((_, t)) => t == s,
                None => {
                    map.push((*v, s.clone()));
                    true
                }
            },
            Term::App(f, xs) => match s {
                Term::App(h, ys) => {
                    f == h && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| go(x, y, map))
                }
                Term::Var(_) => false,
            },
        }
    }
    go(general, specific, &mut Vec::new())
}

/// Drops arcs to top-typed leaves that nothing else points to; such an arc
/// says no more than leaving the feature out.
pub fn drop_top_leaves(fs: &FeatureStructure, sig: &Signature) -> FeatureStructure {
    let indeg = fs.in_degrees();
    let mut b = tfs_core::fstruct::FsBuilder::new();
    for n in 0..fs.node_count() {
        b.node(fs.node_type(n));
    }
    for n in 0..fs.node_count() {
        for &(f, to) in fs.arcs(n) {
            let bare = fs.node_type(to) == sig.top() && fs.arcs(to).is_empty() && indeg[to] == 1;
            if !bare {
                b.arc(n, f, to);
            }
        }
    }
    b.finish(fs.root()).unwrap()
}
