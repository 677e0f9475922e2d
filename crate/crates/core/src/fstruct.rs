//! Feature structures over a [`Signature`].
//!
//! Structures are acyclic rooted graphs kept in a canonical form: nodes are
//! numbered breadth-first from the root (node 0), following arcs in feature
//! id order. Two structures are isomorphic exactly when they are equal, so
//! `Eq`, `Ord` and `Hash` can be derived and sets of structures are plain
//! ordered sets.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::signature::{is_ident_char, FeatureId, Signature, TypeId};

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FsError {
    #[error("column {col}: syntax error: {message}")]
    Syntax { col: usize, message: String },
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("tag #{0} is bound to more than one description")]
    TagRebound(u32),
    #[error("feature `{0}` occurs twice on one node")]
    DuplicateFeature(String),
    #[error("description is cyclic")]
    Cyclic,
}

/// An acyclic, rooted, typed feature graph in canonical node order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureStructure {
    arcs: Vec<Vec<(FeatureId, NodeId)>>,
    types: Vec<TypeId>,
}

/// Mutable graph used to assemble a [`FeatureStructure`].
#[derive(Debug, Clone, Default)]
pub struct FsBuilder {
    types: Vec<TypeId>,
    arcs: Vec<BTreeMap<FeatureId, NodeId>>,
}

impl FsBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(&mut self, t: TypeId) -> NodeId {
        self.types.push(t);
        self.arcs.push(BTreeMap::new());
        self.types.len() - 1
    }

    pub fn set_type(&mut self, n: NodeId, t: TypeId) {
        self.types[n] = t;
    }

    /// Adds an arc; returns `false` if `from` already has an arc for `f`.
    pub fn arc(&mut self, from: NodeId, f: FeatureId, to: NodeId) -> bool {
        if self.arcs[from].contains_key(&f) {
            return false;
        }
        self.arcs[from].insert(f, to);
        true
    }

    /// Canonicalizes the part reachable from `root`, rejecting cycles.
    pub fn finish(&self, root: NodeId) -> Result<FeatureStructure, FsError> {
        let mut number = vec![usize::MAX; self.types.len()];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([root]);
        number[root] = 0;
        order.push(root);
        while let Some(n) = queue.pop_front() {
            for &to in self.arcs[n].values() {
                if number[to] == usize::MAX {
                    number[to] = order.len();
                    order.push(to);
                    queue.push_back(to);
                }
            }
        }
        let fs = FeatureStructure {
            types: order.iter().map(|&n| self.types[n]).collect(),
            arcs: order
                .iter()
                .map(|&n| self.arcs[n].iter().map(|(&f, &to)| (f, number[to])).collect())
                .collect(),
        };
        if fs.has_cycle() {
            return Err(FsError::Cyclic);
        }
        Ok(fs)
    }
}

impl FeatureStructure {
    /// A single node without arcs.
    pub fn atomic(t: TypeId) -> Self {
        FeatureStructure {
            types: vec![t],
            arcs: vec![Vec::new()],
        }
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node_count(&self) -> usize {
        self.types.len()
    }

    pub fn node_type(&self, n: NodeId) -> TypeId {
        self.types[n]
    }

    pub fn root_type(&self) -> TypeId {
        self.types[0]
    }

    /// Node labels in canonical order.
    pub fn types(&self) -> &[TypeId] {
        &self.types
    }

    /// Outgoing arcs of `n` in feature id order.
    pub fn arcs(&self, n: NodeId) -> &[(FeatureId, NodeId)] {
        &self.arcs[n]
    }

    pub fn arc(&self, n: NodeId, f: FeatureId) -> Option<NodeId> {
        self.arcs[n].iter().find(|(g, _)| *g == f).map(|&(_, to)| to)
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.iter().map(Vec::len).sum()
    }

    /// True when both structures have the same arcs and reentrancies,
    /// ignoring node labels.
    pub fn same_shape(&self, other: &FeatureStructure) -> bool {
        self.arcs == other.arcs
    }

    /// The same graph with different node labels.
    pub fn relabel(&self, types: Vec<TypeId>) -> FeatureStructure {
        assert_eq!(types.len(), self.types.len(), "relabel must keep the shape");
        FeatureStructure {
            arcs: self.arcs.clone(),
            types,
        }
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count()];
        for arcs in &self.arcs {
            for &(_, to) in arcs {
                deg[to] += 1;
            }
        }
        deg
    }

    /// Nodes ordered so that every node precedes all of its ancestors.
    pub fn post_order(&self) -> Vec<NodeId> {
        let mut seen = vec![false; self.node_count()];
        let mut out = Vec::with_capacity(self.node_count());
        fn go(fs: &FeatureStructure, n: NodeId, seen: &mut [bool], out: &mut Vec<NodeId>) {
            if seen[n] {
                return;
            }
            seen[n] = true;
            for &(_, to) in fs.arcs(n) {
                go(fs, to, seen, out);
            }
            out.push(n);
        }
        go(self, 0, &mut seen, &mut out);
        out
    }

    /// For each node, the first path (in canonical breadth-first order) that
    /// reaches it from the root.
    pub fn node_paths(&self) -> Vec<Vec<FeatureId>> {
        let mut paths: Vec<Option<Vec<FeatureId>>> = vec![None; self.node_count()];
        paths[0] = Some(Vec::new());
        let mut queue = VecDeque::from([0]);
        while let Some(n) = queue.pop_front() {
            let base = paths[n].clone().expect("visited");
            for &(f, to) in &self.arcs[n] {
                if paths[to].is_none() {
                    let mut p = base.clone();
                    p.push(f);
                    paths[to] = Some(p);
                    queue.push_back(to);
                }
            }
        }
        paths.into_iter().map(|p| p.expect("reachable")).collect()
    }

    /// Follows a feature path from the root.
    pub fn follow(&self, path: &[FeatureId]) -> Option<NodeId> {
        path.iter().try_fold(0, |n, &f| self.arc(n, f))
    }

    fn has_cycle(&self) -> bool {
        let mut state = vec![0u8; self.node_count()];
        fn go(fs: &FeatureStructure, n: NodeId, state: &mut [u8]) -> bool {
            match state[n] {
                1 => return true,
                2 => return false,
                _ => {}
            }
            state[n] = 1;
            for &(_, to) in fs.arcs(n) {
                if go(fs, to, state) {
                    return true;
                }
            }
            state[n] = 2;
            false
        }
        go(self, 0, &mut state)
    }

    /// Copies the graph into a builder, returning the root's builder id.
    pub fn to_builder(&self) -> FsBuilder {
        let mut b = FsBuilder::new();
        for &t in &self.types {
            b.node(t);
        }
        for (n, arcs) in self.arcs.iter().enumerate() {
            for &(f, to) in arcs {
                b.arc(n, f, to);
            }
        }
        b
    }

    pub fn is_species_labelled(&self, sig: &Signature) -> bool {
        self.types.iter().all(|&t| sig.is_species(t))
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> FsDisplay<'a> {
        FsDisplay { fs: self, sig }
    }
}

/// AVM rendering: `type(f: value, ...)`, with `#n` tags on shared nodes.
pub struct FsDisplay<'a> {
    fs: &'a FeatureStructure,
    sig: &'a Signature,
}

impl fmt::Display for FsDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let deg = self.fs.in_degrees();
        let mut tags: HashMap<NodeId, usize> = HashMap::new();
        fn go(
            d: &FsDisplay<'_>,
            n: NodeId,
            deg: &[usize],
            tags: &mut HashMap<NodeId, usize>,
            out: &mut fmt::Formatter<'_>,
        ) -> fmt::Result {
            if deg[n] > 1 {
                if let Some(tag) = tags.get(&n) {
                    return write!(out, "#{tag}");
                }
                let tag = tags.len() + 1;
                tags.insert(n, tag);
                write!(out, "#{tag} ")?;
            }
            out.write_str(d.sig.type_name(d.fs.node_type(n)))?;
            let arcs = d.fs.arcs(n);
            if !arcs.is_empty() {
                out.write_str("(")?;
                for (i, &(feat, to)) in arcs.iter().enumerate() {
                    if i > 0 {
                        out.write_str(", ")?;
                    }
                    write!(out, "{}: ", d.sig.feature_name(feat))?;
                    go(d, to, deg, tags, out)?;
                }
                out.write_str(")")?;
            }
            Ok(())
        }
        go(self, 0, &deg, &mut tags, f)
    }
}

// ---------------------------------------------------------------------------
// AVM parsing

struct AvmParser<'a> {
    chars: Vec<char>,
    pos: usize,
    sig: &'a Signature,
    builder: FsBuilder,
    tags: HashMap<u32, (NodeId, bool)>,
}

impl AvmParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn err(&self, message: impl Into<String>) -> FsError {
        FsError::Syntax {
            col: self.pos + 1,
            message: message.into(),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), FsError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<String, FsError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && is_ident_char(self.chars[self.pos]) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a name"));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn desc(&mut self) -> Result<NodeId, FsError> {
        if self.peek() == Some('#') {
            self.pos += 1;
            let start = self.pos;
            while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.err("expected a tag number after `#`"));
            }
            let tag: u32 = self.chars[start..self.pos]
                .iter()
                .collect::<String>()
                .parse()
                .map_err(|_| self.err("tag number out of range"))?;
            let has_body = matches!(self.peek(), Some(c) if is_ident_char(c));
            let node = match self.tags.get(&tag) {
                Some(&(n, bound)) => {
                    if has_body && bound {
                        return Err(FsError::TagRebound(tag));
                    }
                    n
                }
                None => {
                    let n = self.builder.node(self.sig.top());
                    self.tags.insert(tag, (n, false));
                    n
                }
            };
            if has_body {
                self.tags.insert(tag, (node, true));
                self.body(node)?;
            }
            Ok(node)
        } else {
            let n = self.builder.node(self.sig.top());
            self.body(n)?;
            Ok(n)
        }
    }

    fn body(&mut self, node: NodeId) -> Result<(), FsError> {
        let name = self.ident()?;
        let t = self
            .sig
            .type_id(&name)
            .map_err(|_| FsError::UnknownType(name.clone()))?;
        self.builder.set_type(node, t);
        if self.peek() == Some('(') {
            self.pos += 1;
            if self.peek() == Some(')') {
                self.pos += 1;
                return Ok(());
            }
            loop {
                let fname = self.ident()?;
                let f = self
                    .sig
                    .feature_id(&fname)
                    .map_err(|_| FsError::UnknownFeature(fname.clone()))?;
                self.expect(':')?;
                let value = self.desc()?;
                if !self.builder.arc(node, f, value) {
                    return Err(FsError::DuplicateFeature(fname));
                }
                match self.peek() {
                    Some(',') => self.pos += 1,
                    Some(')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.err("expected `,` or `)`")),
                }
            }
        }
        Ok(())
    }
}

/// Parses an AVM description such as `a(f: #1 bool, g: #1)`.
///
/// Tags realize reentrancy; a tag that is only ever referenced denotes a
/// shared node of the top type. No typing checks are applied.
pub fn parse_fs(text: &str, sig: &Signature) -> Result<FeatureStructure, FsError> {
    let mut p = AvmParser {
        chars: text.chars().collect(),
        pos: 0,
        sig,
        builder: FsBuilder::new(),
        tags: HashMap::new(),
    };
    let root = p.desc()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    p.builder.finish(root)
}

// ---------------------------------------------------------------------------
// Typing

/// Every arc's feature is appropriate for its source type and its target
/// type satisfies the appropriateness value.
pub fn well_typed_check(fs: &FeatureStructure, sig: &Signature) -> bool {
    (0..fs.node_count()).all(|n| {
        fs.arcs(n).iter().all(|&(f, to)| {
            sig.approp_value(fs.node_type(n), f)
                .is_some_and(|spec| sig.satisfies(spec, fs.node_type(to)))
        })
    })
}

/// Every feature present on a node is appropriate for the node's type
/// (values are not checked).
pub fn has_only_appropriate_features(fs: &FeatureStructure, sig: &Signature) -> bool {
    (0..fs.node_count()).all(|n| {
        fs.arcs(n)
            .iter()
            .all(|&(f, _)| sig.approp_value(fs.node_type(n), f).is_some())
    })
}

/// Plain graph unification: merges nodes by congruence closure and joins
/// their types. No type inference is applied, so well-typed inputs may give
/// an ill-typed result. Returns `None` on a type clash or when the merged
/// graph would be cyclic.
pub fn graph_unify(
    fs1: &FeatureStructure,
    fs2: &FeatureStructure,
    sig: &Signature,
) -> Option<FeatureStructure> {
    let offset = fs1.node_count();
    let total = offset + fs2.node_count();
    let mut parent: Vec<usize> = (0..total).collect();
    let mut types: Vec<TypeId> = fs1.types.iter().chain(&fs2.types).copied().collect();
    let mut arcs: Vec<BTreeMap<FeatureId, usize>> = fs1
        .arcs
        .iter()
        .map(|a| a.iter().copied().collect())
        .chain(
            fs2.arcs
                .iter()
                .map(|a| a.iter().map(|&(f, to)| (f, to + offset)).collect()),
        )
        .collect();

    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    let mut pending = vec![(0, offset)];
    while let Some((a, b)) = pending.pop() {
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b);
        if ra == rb {
            continue;
        }
        types[ra] = sig.join_types(types[ra], types[rb])?;
        parent[rb] = ra;
        for (f, x) in std::mem::take(&mut arcs[rb]) {
            match arcs[ra].get(&f) {
                Some(&y) => pending.push((x, y)),
                None => {
                    arcs[ra].insert(f, x);
                }
            }
        }
    }

    let mut b = FsBuilder::new();
    let mut ids: HashMap<usize, NodeId> = HashMap::new();
    for x in 0..total {
        let r = find(&mut parent, x);
        if r == x {
            ids.insert(r, b.node(types[r]));
        }
    }
    for x in 0..total {
        if find(&mut parent, x) != x {
            continue;
        }
        for (&f, &to) in &arcs[x] {
            let rt = find(&mut parent, to);
            b.arc(ids[&x], f, ids[&rt]);
        }
    }
    let root = ids[&find(&mut parent, 0)];
    b.finish(root).ok()
}

// ---------------------------------------------------------------------------
// Sets of structures

/// A finite, duplicate-free set of feature structures over one signature,
/// iterated in canonical order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FsSet {
    members: BTreeSet<FeatureStructure>,
}

impl FsSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(fs: FeatureStructure) -> Self {
        let mut s = Self::new();
        s.insert(fs);
        s
    }

    pub fn insert(&mut self, fs: FeatureStructure) -> bool {
        self.members.insert(fs)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, fs: &FeatureStructure) -> bool {
        self.members.contains(fs)
    }

    pub fn iter(&self) -> impl Iterator<Item = &FeatureStructure> {
        self.members.iter()
    }

    pub fn extend(&mut self, other: FsSet) {
        self.members.extend(other.members);
    }

    pub fn is_subset(&self, other: &FsSet) -> bool {
        self.members.is_subset(&other.members)
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> FsSetDisplay<'a> {
        FsSetDisplay { set: self, sig }
    }
}

impl FromIterator<FeatureStructure> for FsSet {
    fn from_iter<I: IntoIterator<Item = FeatureStructure>>(iter: I) -> Self {
        FsSet {
            members: iter.into_iter().collect(),
        }
    }
}

impl IntoIterator for FsSet {
    type Item = FeatureStructure;
    type IntoIter = std::collections::btree_set::IntoIter<FeatureStructure>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.into_iter()
    }
}

impl<'a> IntoIterator for &'a FsSet {
    type Item = &'a FeatureStructure;
    type IntoIter = std::collections::btree_set::Iter<'a, FeatureStructure>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

pub struct FsSetDisplay<'a> {
    set: &'a FsSet,
    sig: &'a Signature,
}

impl fmt::Display for FsSetDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.set.is_empty() {
            return f.write_str("{}");
        }
        f.write_str("{ ")?;
        for (i, m) in self.set.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", m.display(self.sig))?;
        }
        f.write_str(" }")
    }
}

/// All species-labelled variants of `fs` with the same shape.
pub fn extensions(fs: &FeatureStructure, sig: &Signature) -> FsSet {
    let choices: Vec<Vec<TypeId>> = fs.types().iter().map(|&t| sig.species_of(t)).collect();
    let mut out = FsSet::new();
    if choices.iter().any(Vec::is_empty) {
        return out;
    }
    let mut idx = vec![0usize; choices.len()];
    loop {
        out.insert(fs.relabel(idx.iter().zip(&choices).map(|(&i, c)| c[i]).collect()));
        // odometer increment
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

/// Extensions of every member of a set.
pub fn set_extensions(set: &FsSet, sig: &Signature) -> FsSet {
    let mut out = FsSet::new();
    for m in set {
        out.extend(extensions(m, sig));
    }
    out
}

/// The well-typed extensions of `fs`, found by backtracking over per-node
/// species with appropriateness checked as soon as both ends of an arc are
/// labelled.
pub fn resolvants(fs: &FeatureStructure, sig: &Signature) -> FsSet {
    let n = fs.node_count();
    let choices: Vec<Vec<TypeId>> = fs.types().iter().map(|&t| sig.species_of(t)).collect();
    let mut incoming: Vec<Vec<(NodeId, FeatureId)>> = vec![Vec::new(); n];
    for from in 0..n {
        for &(f, to) in fs.arcs(from) {
            incoming[to].push((from, f));
        }
    }

    let arc_ok = |from_t: TypeId, f: FeatureId, to_t: Option<TypeId>| -> bool {
        match sig.approp_value(from_t, f) {
            None => false,
            Some(spec) => to_t.is_none_or(|t| sig.satisfies(spec, t)),
        }
    };

    let mut out = FsSet::new();
    let mut labels: Vec<Option<TypeId>> = vec![None; n];
    fn search(
        k: usize,
        fs: &FeatureStructure,
        choices: &[Vec<TypeId>],
        incoming: &[Vec<(NodeId, FeatureId)>],
        labels: &mut Vec<Option<TypeId>>,
        arc_ok: &dyn Fn(TypeId, FeatureId, Option<TypeId>) -> bool,
        out: &mut FsSet,
    ) {
        if k == labels.len() {
            out.insert(fs.relabel(labels.iter().map(|l| l.expect("labelled")).collect()));
            return;
        }
        for &s in &choices[k] {
            let outgoing_ok = fs
                .arcs(k)
                .iter()
                .all(|&(f, to)| arc_ok(s, f, if to == k { Some(s) } else { labels[to] }));
            let incoming_ok = incoming[k]
                .iter()
                .all(|&(from, f)| labels[from].is_none_or(|ft| arc_ok(ft, f, Some(s))));
            if outgoing_ok && incoming_ok {
                labels[k] = Some(s);
                search(k + 1, fs, choices, incoming, labels, arc_ok, out);
                labels[k] = None;
            }
        }
    }
    search(0, fs, &choices, &incoming, &mut labels, &arc_ok, &mut out);
    out
}

/// Resolvants of every member of a set.
pub fn set_resolvants(set: &FsSet, sig: &Signature) -> FsSet {
    let mut out = FsSet::new();
    for m in set {
        out.extend(resolvants(m, sig));
    }
    out
}

/// All successful pairwise unifications between two sets.
pub fn set_unify(s1: &FsSet, s2: &FsSet, sig: &Signature) -> FsSet {
    let mut out = FsSet::new();
    for a in s1 {
        for b in s2 {
            if let Some(u) = graph_unify(a, b, sig) {
                out.insert(u);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::parse_signature;

    fn fig1() -> Signature {
        parse_signature(include_str!("../fixtures/fig1.sig")).unwrap()
    }

    fn boolsig() -> Signature {
        parse_signature(include_str!("../fixtures/bool.sig")).unwrap()
    }

    fn fs(text: &str, sig: &Signature) -> FeatureStructure {
        parse_fs(text, sig).unwrap()
    }

    #[test]
    fn parse_simple_descriptions() {
        let sig = fig1();
        let b = fs("b(f: a)", &sig);
        assert_eq!(b.node_count(), 2);
        assert_eq!(sig.type_name(b.root_type()), "b");
        let f = sig.feature_id("f").unwrap();
        assert_eq!(sig.type_name(b.node_type(b.arc(0, f).unwrap())), "a");

        let c = fs("c", &sig);
        assert_eq!(c, FeatureStructure::atomic(sig.type_id("c").unwrap()));
    }

    #[test]
    fn tags_share_nodes() {
        let sig = boolsig();
        let x = fs("a(f: #1 bool, g: #1)", &sig);
        assert_eq!(x.node_count(), 2);
        let f = sig.feature_id("f").unwrap();
        let g = sig.feature_id("g").unwrap();
        assert_eq!(x.arc(0, f), x.arc(0, g));
        // binding may follow a reference
        assert_eq!(fs("a(f: #1, g: #1 bool)", &sig), x);
        assert_eq!(x.display(&sig).to_string(), "a(f: #1 bool, g: #1)");
    }

    #[test]
    fn parse_errors() {
        let sig = boolsig();
        assert_eq!(
            parse_fs("a(f: #1 bool, g: #1 bool)", &sig),
            Err(FsError::TagRebound(1))
        );
        assert_eq!(parse_fs("zz", &sig), Err(FsError::UnknownType("zz".into())));
        assert_eq!(
            parse_fs("a(h: bool)", &sig),
            Err(FsError::UnknownFeature("h".into()))
        );
        assert_eq!(parse_fs("#1 a(f: #1)", &sig), Err(FsError::Cyclic));
        assert!(matches!(parse_fs("a(f bool)", &sig), Err(FsError::Syntax { .. })));
        assert_eq!(
            parse_fs("a(f: bool, f: bool)", &sig),
            Err(FsError::DuplicateFeature("f".into()))
        );
    }

    #[test]
    fn canonical_form_is_order_independent() {
        let sig = fig1();
        assert_eq!(fs("e(g: c, f: a)", &sig), fs("e(f: a, g: c)", &sig));
    }

    #[test]
    fn well_typedness() {
        let sig = fig1();
        assert!(well_typed_check(&fs("d(f: a1)", &sig), &sig));
        assert!(!well_typed_check(&fs("d(f: a)", &sig), &sig));
        assert!(well_typed_check(&fs("top", &sig), &sig));
        assert!(!well_typed_check(&fs("c(f: a)", &sig), &sig));
    }

    #[test]
    fn unification_without_inference_can_be_ill_typed() {
        let sig = fig1();
        let u = graph_unify(&fs("b(f: a)", &sig), &fs("d", &sig), &sig).unwrap();
        assert_eq!(u, fs("d(f: a)", &sig));
        assert!(!well_typed_check(&u, &sig));
        assert!(graph_unify(&fs("a1", &sig), &fs("a2", &sig), &sig).is_none());
        let x = fs("e(f: a3, g: c)", &sig);
        assert_eq!(graph_unify(&x, &x, &sig), Some(x));
    }

    #[test]
    fn unification_merges_congruent_paths() {
        let sig = boolsig();
        let u = graph_unify(
            &fs("a(f: #1 bool, g: #1)", &sig),
            &fs("a(f: +)", &sig),
            &sig,
        )
        .unwrap();
        assert_eq!(u, fs("a(f: #1 +, g: #1)", &sig));
    }

    #[test]
    fn cyclic_unification_fails() {
        let sig = parse_signature("top t.\nu isa t [f: t, g: t, h: t].").unwrap();
        let x = fs("u(f: #1, g: u(h: #1))", &sig);
        let y = fs("u(f: #1, g: #1)", &sig);
        assert!(graph_unify(&x, &y, &sig).is_none());
    }

    #[test]
    fn extensions_of_bool_structure() {
        let sig = boolsig();
        let ext = extensions(&fs("a(f: bool)", &sig), &sig);
        let expected: FsSet = ["a'(f: +)", "a'(f: -)", "a''(f: +)", "a''(f: -)"]
            .iter()
            .map(|d| fs(d, &sig))
            .collect();
        assert_eq!(ext, expected);
        let s = fs("a'(f: -)", &sig);
        assert_eq!(extensions(&s, &sig), FsSet::singleton(s));
    }

    #[test]
    fn resolvants_follow_species_appropriateness() {
        let sig = boolsig();
        let r = resolvants(&fs("a(f: bool, g: bool)", &sig), &sig);
        let expected: FsSet = ["a'(f: -, g: +)", "a''(f: +, g: -)"]
            .iter()
            .map(|d| fs(d, &sig))
            .collect();
        assert_eq!(r, expected);
        assert!(resolvants(&fs("a(f: #1, g: #1)", &sig), &sig).is_empty());
        let s = fs("a'(f: -, g: +)", &sig);
        assert_eq!(resolvants(&s, &sig), FsSet::singleton(s));
    }

    #[test]
    fn set_unification() {
        let sig = boolsig();
        let both: FsSet = ["a'(f: -, g: +)", "a''(f: +, g: -)"]
            .iter()
            .map(|d| fs(d, &sig))
            .collect();
        let u = set_unify(&both, &FsSet::singleton(fs("a''", &sig)), &sig);
        assert_eq!(u, FsSet::singleton(fs("a''(f: +, g: -)", &sig)));

        let tops = resolvants(&fs("a", &sig), &sig);
        assert_eq!(set_unify(&both, &tops, &sig), both);

        let disjoint = set_unify(
            &FsSet::singleton(fs("a'", &sig)),
            &FsSet::singleton(fs("a''", &sig)),
            &sig,
        );
        assert!(disjoint.is_empty());
    }
}
