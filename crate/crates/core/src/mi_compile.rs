//! Compiling multiple inheritance out of a signature.
//!
//! Intermediate types that give some type a second parent are deleted, their
//! children spliced onto their own parents, and appropriateness values that
//! named a deleted type become the disjunction of its most general surviving
//! subtypes. Species are never deleted, so the species set is unchanged.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::fstruct::{FeatureStructure, FsSet};
use crate::signature::{ApproSpec, Signature, SignatureError, TypeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error("cannot remove `{0}`: it is a species")]
    SpeciesRemoval(String),
    #[error("cannot remove the top type `{0}`")]
    TopRemoval(String),
    #[error(transparent)]
    Signature(#[from] SignatureError),
}

/// Result of compiling out multiple inheritance.
#[derive(Debug, Clone)]
pub struct MiCompilation {
    /// The tree-shaped signature.
    pub compiled: Signature,
    /// Deleted types, as ids of the original signature, in id order.
    pub removed: Vec<TypeId>,
    /// For each deleted (original) type, the antichain of most general
    /// surviving subtypes, as compiled ids.
    pub replacement: BTreeMap<TypeId, Vec<TypeId>>,
    /// Original id to compiled id; `None` for deleted types.
    pub type_map: Vec<Option<TypeId>>,
    pub warnings: Vec<String>,
}

impl MiCompilation {
    pub fn is_removed(&self, original: TypeId) -> bool {
        self.type_map[original.index()].is_none()
    }

    /// The compiled types an original type stands for: itself if it
    /// survived, otherwise its replacement set.
    pub fn images(&self, original: TypeId) -> Vec<TypeId> {
        match self.type_map[original.index()] {
            Some(t) => vec![t],
            None => self.replacement[&original].clone(),
        }
    }
}

/// Strict ancestors of `t` in a parent-list graph.
fn ancestors(parents: &[Vec<usize>], t: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    let mut stack = parents[t].clone();
    while let Some(p) = stack.pop() {
        if seen.insert(p) {
            stack.extend(&parents[p]);
        }
    }
    seen
}

/// Drops parents of `t` that are ancestors of another of its parents.
fn reduce_parents(parents: &mut [Vec<usize>], t: usize) {
    let ps = parents[t].clone();
    let redundant: BTreeSet<usize> = ps
        .iter()
        .flat_map(|&p| ancestors(parents, p))
        .collect();
    parents[t].retain(|p| !redundant.contains(p));
}

/// Deletes intermediate types until every non-top type has a single parent.
///
/// The first-declared parent of a multiply inherited type is kept; the
/// others are deleted, cascading until a fixpoint is reached.
pub fn compile_single_inheritance(sig: &Signature) -> Result<MiCompilation, CompileError> {
    let n = sig.type_count();
    let mut parents: Vec<Vec<usize>> = sig
        .types()
        .map(|t| sig.parents(t).iter().map(|p| p.index()).collect())
        .collect();
    for t in 0..n {
        reduce_parents(&mut parents, t);
    }
    let mut removed = vec![false; n];

    while let Some(c) = (0..n).find(|&c| !removed[c] && parents[c].len() > 1) {
        let doomed: Vec<usize> = parents[c][1..].to_vec();
        for p in doomed {
            let pid = TypeId(p as u32);
            if pid == sig.top() {
                return Err(CompileError::TopRemoval(sig.type_name(pid).into()));
            }
            if sig.is_species(pid) {
                return Err(CompileError::SpeciesRemoval(sig.type_name(pid).into()));
            }
            removed[p] = true;
            let grand = parents[p].clone();
            for ch in 0..n {
                if removed[ch] {
                    continue;
                }
                if let Some(pos) = parents[ch].iter().position(|&x| x == p) {
                    parents[ch].remove(pos);
                    let mut at = pos;
                    for &g in &grand {
                        if !parents[ch].contains(&g) {
                            parents[ch].insert(at, g);
                            at += 1;
                        }
                    }
                    reduce_parents(&mut parents, ch);
                }
            }
        }
    }

    let mut b = sig.builder_with_features();
    let mut type_map = vec![None; n];
    for t in sig.types() {
        if !removed[t.index()] {
            type_map[t.index()] = Some(b.add_type(sig.type_name(t)));
        }
    }
    b.set_top(type_map[sig.top().index()].expect("top survives"));
    for t in sig.types() {
        if let Some(ct) = type_map[t.index()] {
            for &p in &parents[t.index()] {
                b.add_parent(ct, type_map[p].expect("parents survive"));
            }
        }
    }

    let survivors: Vec<TypeId> = sig.types().filter(|t| !removed[t.index()]).collect();
    let mut replacement_orig: BTreeMap<TypeId, Vec<TypeId>> = BTreeMap::new();
    for t in sig.types().filter(|t| removed[t.index()]) {
        let below: Vec<TypeId> = survivors
            .iter()
            .copied()
            .filter(|&s| sig.subsumes(t, s))
            .collect();
        replacement_orig.insert(t, sig.most_general_of(below).alternatives().to_vec());
    }

    let rewrite = |spec: &ApproSpec| -> ApproSpec {
        let mut alts = Vec::new();
        for &a in spec.alternatives() {
            match replacement_orig.get(&a) {
                Some(r) => alts.extend(r),
                None => alts.push(a),
            }
        }
        let general = sig.most_general_of(alts);
        ApproSpec::new(
            general
                .alternatives()
                .iter()
                .map(|a| type_map[a.index()].expect("survivor"))
                .collect(),
        )
    };

    for &t in &survivors {
        let parent = parents[t.index()].first().map(|&p| TypeId(p as u32));
        for (f, spec) in sig.appropriate_features(t) {
            let here = rewrite(spec);
            let inherited = parent.and_then(|p| sig.approp_value(p, f)).map(&rewrite);
            if inherited.as_ref() != Some(&here) {
                b.declare(type_map[t.index()].expect("survivor"), f, here);
            }
        }
    }

    let mut warnings = Vec::new();
    for (&t, reps) in &replacement_orig {
        let intro = sig.introduced_features(t);
        if !intro.is_empty() {
            let feats: Vec<&str> = intro.iter().map(|&f| sig.feature_name(f)).collect();
            let at: Vec<&str> = reps.iter().map(|&r| sig.type_name(r)).collect();
            warnings.push(format!(
                "features [{}] introduced at removed type `{}` are re-introduced at each of [{}]",
                feats.join(", "),
                sig.type_name(t),
                at.join(", ")
            ));
        }
    }

    let replacement = replacement_orig
        .into_iter()
        .map(|(t, reps)| {
            (
                t,
                reps.into_iter()
                    .map(|r| type_map[r.index()].expect("survivor"))
                    .collect(),
            )
        })
        .collect();

    Ok(MiCompilation {
        compiled: b.build()?,
        removed: sig.types().filter(|t| removed[t.index()]).collect(),
        replacement,
        type_map,
        warnings,
    })
}

/// Rewrites a structure over the original signature into the set of
/// structures over the compiled signature obtained by replacing each node
/// labelled with a removed type by each member of its replacement set.
pub fn expand_fs(fs: &FeatureStructure, comp: &MiCompilation) -> FsSet {
    let choices: Vec<Vec<TypeId>> = fs.types().iter().map(|&t| comp.images(t)).collect();
    let mut out = FsSet::new();
    let mut idx = vec![0usize; choices.len()];
    loop {
        out.insert(fs.relabel(idx.iter().zip(&choices).map(|(&i, c)| c[i]).collect()));
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Expands every member of a set.
pub fn expand_set(set: &FsSet, comp: &MiCompilation) -> FsSet {
    let mut out = FsSet::new();
    for m in set {
        out.extend(expand_fs(m, comp));
    }
    out
}
