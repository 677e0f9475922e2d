//! Compacting sets of resolvants.
//!
//! * [`unextend`] replaces a set of species-labelled structures by a smallest
//!   set of more general structures with the same extensions.
//! * [`unfill`] drops arcs whose values say no more than appropriateness
//!   already requires.
//! * [`factor_disjunction`] splits a same-shape set into a generalization and
//!   dependency tables over the nodes whose types vary.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::fstruct::{resolvants, FeatureStructure, FsSet, NodeId};
use crate::signature::{FeatureId, Signature, TypeId};

/// Sets up to this size are unextended by exact minimum-cover search; larger
/// ones fall back to a greedy cover (still exact in extension, possibly not
/// minimal in size).
pub const EXACT_UNEXTEND_LIMIT: usize = 64;

const MAX_FACTOR_SITES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("cannot factor an empty set")]
    Empty,
    #[error("members differ in arcs or reentrancies")]
    ShapeMismatch,
    #[error("no common supertype at path {0:?} carries all of the node's features")]
    NoGeneralization(Vec<String>),
}

// ---------------------------------------------------------------------------
// Unextension

/// Partitions a set by shape, keeping canonical member order in each group.
pub fn group_by_shape(s: &FsSet) -> Vec<Vec<FeatureStructure>> {
    let mut groups: Vec<Vec<FeatureStructure>> = Vec::new();
    for m in s {
        match groups.iter_mut().find(|g| g[0].same_shape(m)) {
            Some(g) => g.push(m.clone()),
            None => groups.push(vec![m.clone()]),
        }
    }
    groups
}

/// Minimal-cardinality set of structures whose extensions are exactly `s`.
///
/// Members are expected to be species-labelled. Members of different shapes
/// are unextended independently, since extension never changes shape.
/// Among minimal answers, more general labels win, then type names.
pub fn unextend(s: &FsSet, sig: &Signature) -> FsSet {
    let mut out = FsSet::new();
    for group in group_by_shape(s) {
        out.extend(unextend_group(&group, sig));
    }
    out
}

struct Candidate {
    labels: Vec<TypeId>,
    covers: Vec<usize>,
}

fn unextend_group(group: &[FeatureStructure], sig: &Signature) -> FsSet {
    let skeleton = &group[0];
    let width = skeleton.node_count();
    let rows: Vec<&[TypeId]> = group.iter().map(|m| m.types()).collect();
    let members: HashSet<&[TypeId]> = rows.iter().copied().collect();
    let index: BTreeMap<&[TypeId], usize> =
        rows.iter().enumerate().map(|(i, r)| (*r, i)).collect();

    let mut prefixes: Vec<HashSet<&[TypeId]>> = vec![HashSet::new(); width + 1];
    for r in &rows {
        for k in 0..=width {
            prefixes[k].insert(&r[..k]);
        }
    }

    // Labels whose species all occur in the column and that carry the
    // node's features.
    let candidates: Vec<Vec<(TypeId, Vec<TypeId>)>> = (0..width)
        .map(|i| {
            let column: HashSet<TypeId> = rows.iter().map(|r| r[i]).collect();
            sig.types()
                .filter(|&t| {
                    skeleton
                        .arcs(i)
                        .iter()
                        .all(|&(f, _)| sig.approp_value(t, f).is_some())
                })
                .filter_map(|t| {
                    let sp = sig.species_of(t);
                    (!sp.is_empty() && sp.iter().all(|s| column.contains(s))).then_some((t, sp))
                })
                .collect()
        })
        .collect();

    let mut boxes: Vec<Vec<TypeId>> = Vec::new();
    let mut labels = Vec::with_capacity(width);
    enumerate_boxes(
        0,
        vec![Vec::new()],
        &candidates,
        &prefixes,
        &members,
        &mut labels,
        &mut boxes,
    );

    // Keep boxes not dominated label-wise by a more general box.
    let dominated = |a: &[TypeId], b: &[TypeId]| -> bool {
        a != b && a.iter().zip(b).all(|(&x, &y)| sig.subsumes(y, x))
    };
    let maximal: Vec<&Vec<TypeId>> = boxes
        .iter()
        .filter(|a| !boxes.iter().any(|b| dominated(a, b)))
        .collect();

    let mut cands: Vec<Candidate> = maximal
        .into_iter()
        .map(|labels| {
            let mut covers = Vec::new();
            let sp: Vec<Vec<TypeId>> = labels.iter().map(|&t| sig.species_of(t)).collect();
            for_each_product(&sp, |tuple| covers.push(index[tuple]));
            covers.sort_unstable();
            Candidate {
                labels: labels.clone(),
                covers,
            }
        })
        .collect();
    cands.sort_by(|a, b| {
        b.covers.len().cmp(&a.covers.len()).then_with(|| {
            let an: Vec<&str> = a.labels.iter().map(|&t| sig.type_name(t)).collect();
            let bn: Vec<&str> = b.labels.iter().map(|&t| sig.type_name(t)).collect();
            an.cmp(&bn)
        })
    });

    let chosen = if rows.len() <= EXACT_UNEXTEND_LIMIT {
        exact_cover(rows.len(), &cands)
    } else {
        greedy_cover(rows.len(), &cands)
    };
    chosen
        .into_iter()
        .map(|i| skeleton.relabel(cands[i].labels.clone()))
        .collect()
}

/// Depth-first enumeration of label tuples whose species product lies in
/// the member set. `partial` is the explicit product so far.
fn enumerate_boxes<'a>(
    k: usize,
    partial: Vec<Vec<TypeId>>,
    candidates: &[Vec<(TypeId, Vec<TypeId>)>],
    prefixes: &[HashSet<&'a [TypeId]>],
    members: &HashSet<&'a [TypeId]>,
    labels: &mut Vec<TypeId>,
    out: &mut Vec<Vec<TypeId>>,
) {
    if k == candidates.len() {
        out.push(labels.clone());
        return;
    }
    for (t, species) in &candidates[k] {
        if partial.len() * species.len() > members.len() {
            continue;
        }
        let mut next = Vec::with_capacity(partial.len() * species.len());
        let mut ok = true;
        'outer: for p in &partial {
            for &s in species {
                let mut q = p.clone();
                q.push(s);
                if !prefixes[k + 1].contains(q.as_slice()) {
                    ok = false;
                    break 'outer;
                }
                next.push(q);
            }
        }
        if ok {
            labels.push(*t);
            enumerate_boxes(k + 1, next, candidates, prefixes, members, labels, out);
            labels.pop();
        }
    }
}

fn for_each_product(choices: &[Vec<TypeId>], mut f: impl FnMut(&[TypeId])) {
    if choices.iter().any(Vec::is_empty) {
        return;
    }
    let mut idx = vec![0usize; choices.len()];
    let mut tuple: Vec<TypeId> = choices.iter().map(|c| c[0]).collect();
    loop {
        f(&tuple);
        let mut k = 0;
        loop {
            if k == idx.len() {
                return;
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                tuple[k] = choices[k][idx[k]];
                break;
            }
            idx[k] = 0;
            tuple[k] = choices[k][0];
            k += 1;
        }
    }
}

/// Branch and bound minimum set cover over at most 64 elements; the first
/// optimum in candidate order wins.
fn exact_cover(n: usize, cands: &[Candidate]) -> Vec<usize> {
    let masks: Vec<u64> = cands
        .iter()
        .map(|c| c.covers.iter().fold(0u64, |m, &i| m | (1 << i)))
        .collect();
    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best: Option<Vec<usize>> = None;
    let mut chosen = Vec::new();

    fn search(
        uncovered: u64,
        masks: &[u64],
        chosen: &mut Vec<usize>,
        best: &mut Option<Vec<usize>>,
    ) {
        if uncovered == 0 {
            if best.as_ref().is_none_or(|b| chosen.len() < b.len()) {
                *best = Some(chosen.clone());
            }
            return;
        }
        if best.as_ref().is_some_and(|b| chosen.len() + 1 >= b.len()) {
            return;
        }
        let e = uncovered.trailing_zeros();
        for (i, &m) in masks.iter().enumerate() {
            if m & (1 << e) != 0 {
                chosen.push(i);
                search(uncovered & !m, masks, chosen, best);
                chosen.pop();
            }
        }
    }
    search(full, &masks, &mut chosen, &mut best);
    best.unwrap_or_default()
}

fn greedy_cover(n: usize, cands: &[Candidate]) -> Vec<usize> {
    let mut covered = vec![false; n];
    let mut left = n;
    let mut chosen = Vec::new();
    while left > 0 {
        let (best, gain) = cands
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.covers.iter().filter(|&&e| !covered[e]).count()))
            .fold((0, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!(gain > 0, "every member is covered by its own singleton box");
        for &e in &cands[best].covers {
            if !covered[e] {
                covered[e] = true;
                left -= 1;
            }
        }
        chosen.push(best);
    }
    chosen
}

// ---------------------------------------------------------------------------
// Unfilling

/// Removes, bottom-up, every arc whose value node is a leaf typed exactly as
/// the (non-disjunctive) appropriateness value requires and has no other
/// incoming arc.
pub fn unfill(fs: &FeatureStructure, sig: &Signature) -> FeatureStructure {
    let indeg = fs.in_degrees();
    let mut parent_arc: Vec<Option<(NodeId, FeatureId)>> = vec![None; fs.node_count()];
    for n in 0..fs.node_count() {
        for &(f, to) in fs.arcs(n) {
            parent_arc[to] = Some((n, f));
        }
    }
    let mut remaining: Vec<usize> = (0..fs.node_count()).map(|n| fs.arcs(n).len()).collect();
    let mut dropped: HashSet<(NodeId, FeatureId)> = HashSet::new();
    for n in fs.post_order() {
        if n == fs.root() || indeg[n] != 1 || remaining[n] != 0 {
            continue;
        }
        let (p, f) = parent_arc[n].expect("non-root node has a parent");
        let required = sig
            .approp_value(fs.node_type(p), f)
            .and_then(|spec| spec.as_single());
        if required == Some(fs.node_type(n)) {
            dropped.insert((p, f));
            remaining[p] -= 1;
        }
    }
    if dropped.is_empty() {
        return fs.clone();
    }
    let mut nb = crate::fstruct::FsBuilder::new();
    for n in 0..fs.node_count() {
        nb.node(fs.node_type(n));
    }
    for n in 0..fs.node_count() {
        for &(f, to) in fs.arcs(n) {
            if !dropped.contains(&(n, f)) {
                nb.arc(n, f, to);
            }
        }
    }
    nb.finish(fs.root()).expect("removing arcs keeps the graph acyclic")
}

/// Resolve, unfill each resolvant, then unextend. An empty result means the
/// description is unsatisfiable.
pub fn normalize_pipeline(fs: &FeatureStructure, sig: &Signature) -> FsSet {
    let unfilled: FsSet = resolvants(fs, sig).iter().map(|r| unfill(r, sig)).collect();
    unextend(&unfilled, sig)
}

// ---------------------------------------------------------------------------
// Factoring

/// One named disjunction: the `n`-th row gives the types of all sites in the
/// `n`-th alternative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyTable {
    pub name: usize,
    pub sites: Vec<NodeId>,
    pub paths: Vec<Vec<FeatureId>>,
    pub rows: Vec<Vec<TypeId>>,
}

/// A same-shape set split into a common generalization and dependency
/// tables over independent blocks of varying nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factored {
    pub generalization: FeatureStructure,
    pub tables: Vec<DependencyTable>,
}

impl Factored {
    /// Substitutes every combination of table rows into the generalization.
    pub fn expand(&self) -> FsSet {
        let mut out = FsSet::new();
        let mut idx = vec![0usize; self.tables.len()];
        loop {
            let mut types = self.generalization.types().to_vec();
            for (t, &i) in self.tables.iter().zip(&idx) {
                for (&site, &ty) in t.sites.iter().zip(&t.rows[i]) {
                    types[site] = ty;
                }
            }
            out.insert(self.generalization.relabel(types));
            let mut k = 0;
            loop {
                if k == idx.len() {
                    return out;
                }
                idx[k] += 1;
                if idx[k] < self.tables[k].rows.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

/// Factors a set of same-shape structures. Each node of the generalization
/// carries the most specific common supertype of the members' types there;
/// varying nodes are split into the finest blocks whose row sets combine as
/// a product, one table per block.
pub fn factor_disjunction(s: &FsSet, sig: &Signature) -> Result<Factored, NormalizeError> {
    let members: Vec<&FeatureStructure> = s.iter().collect();
    let first = *members.first().ok_or(NormalizeError::Empty)?;
    if members.iter().any(|m| !m.same_shape(first)) {
        return Err(NormalizeError::ShapeMismatch);
    }
    let width = first.node_count();
    let paths = first.node_paths();

    let mut gen_types = Vec::with_capacity(width);
    let mut varying = Vec::new();
    for n in 0..width {
        let column: Vec<TypeId> = members.iter().map(|m| m.node_type(n)).collect();
        if column.iter().all(|&t| t == column[0]) {
            gen_types.push(column[0]);
            continue;
        }
        varying.push(n);
        let pick = sig.generalize(&column).into_iter().find(|&g| {
            first
                .arcs(n)
                .iter()
                .all(|&(f, _)| sig.approp_value(g, f).is_some())
        });
        match pick {
            Some(g) => gen_types.push(g),
            None => {
                return Err(NormalizeError::NoGeneralization(
                    paths[n].iter().map(|&f| sig.feature_name(f).to_string()).collect(),
                ))
            }
        }
    }
    let generalization = first.relabel(gen_types);

    let rows: Vec<Vec<TypeId>> = members
        .iter()
        .map(|m| varying.iter().map(|&n| m.node_type(n)).collect())
        .collect();
    let blocks = product_blocks(&rows, varying.len());
    let tables = blocks
        .into_iter()
        .enumerate()
        .map(|(i, cols)| {
            let mut block_rows: Vec<Vec<TypeId>> = Vec::new();
            for r in &rows {
                let proj: Vec<TypeId> = cols.iter().map(|&c| r[c]).collect();
                if !block_rows.contains(&proj) {
                    block_rows.push(proj);
                }
            }
            let sites: Vec<NodeId> = cols.iter().map(|&c| varying[c]).collect();
            DependencyTable {
                name: i + 1,
                paths: sites.iter().map(|&n| paths[n].clone()).collect(),
                sites,
                rows: block_rows,
            }
        })
        .collect();
    Ok(Factored {
        generalization,
        tables,
    })
}

fn project_count(rows: &[Vec<TypeId>], cols: &[usize]) -> usize {
    rows.iter()
        .map(|r| cols.iter().map(|&c| r[c]).collect::<Vec<_>>())
        .collect::<HashSet<_>>()
        .len()
}

/// Finest partition of columns `0..width` such that the row set is the
/// product of its projections onto the blocks.
fn product_blocks(rows: &[Vec<TypeId>], width: usize) -> Vec<Vec<usize>> {
    if width == 0 {
        return Vec::new();
    }
    if width > MAX_FACTOR_SITES {
        return vec![(0..width).collect()];
    }
    let mut left: Vec<usize> = (0..width).collect();
    let mut blocks = Vec::new();
    while !left.is_empty() {
        let total = project_count(rows, &left);
        let head = left[0];
        let others = &left[1..];
        let mut found = None;
        'size: for extra in 0..others.len() {
            for combo in combinations(others.len(), extra) {
                let mut block = vec![head];
                block.extend(combo.iter().map(|&i| others[i]));
                let rest: Vec<usize> = left.iter().copied().filter(|c| !block.contains(c)).collect();
                if rest.is_empty()
                    || project_count(rows, &block) * project_count(rows, &rest) == total
                {
                    found = Some(block);
                    break 'size;
                }
            }
        }
        let block = found.unwrap_or_else(|| left.clone());
        left.retain(|c| !block.contains(c));
        blocks.push(block);
    }
    blocks
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut cur, &mut out);
    out
}

/// Normalizes a description and factors each resulting shape group. One
/// entry per group; empty when the description is unsatisfiable.
pub fn compile_description(
    fs: &FeatureStructure,
    sig: &Signature,
) -> Result<Vec<Factored>, NormalizeError> {
    let normalized = normalize_pipeline(fs, sig);
    group_by_shape(&normalized)
        .into_iter()
        .map(|g| factor_disjunction(&g.into_iter().collect(), sig))
        .collect()
}
