//! Type signatures: a subsumption hierarchy of types plus an appropriateness
//! table mapping `(type, feature)` pairs to value specifications.
//!
//! A [`Signature`] is built either from the signature DSL ([`parse_signature`])
//! or programmatically through [`SignatureBuilder`]. Building computes the
//! derived tables (transitive subsumption, inherited appropriateness, feature
//! introduction) but performs no well-formedness checks; those are reported
//! by [`Signature::validate`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Interned type symbol. Ids follow declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeId(pub(crate) u32);

impl TypeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Interned feature symbol. Ids follow first-declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureId(pub(crate) u32);

impl FeatureId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Value specification for an appropriate feature: a disjunction of types.
///
/// Before multiple-inheritance compilation this is always a singleton.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ApproSpec {
    alternatives: Vec<TypeId>,
}

impl ApproSpec {
    pub fn single(t: TypeId) -> Self {
        ApproSpec {
            alternatives: vec![t],
        }
    }

    /// Builds a spec from alternatives; duplicates are dropped and the
    /// remainder kept in id order.
    pub fn new(mut alternatives: Vec<TypeId>) -> Self {
        alternatives.sort();
        alternatives.dedup();
        ApproSpec { alternatives }
    }

    pub fn alternatives(&self) -> &[TypeId] {
        &self.alternatives
    }

    /// The lone alternative, if the spec is not disjunctive.
    pub fn as_single(&self) -> Option<TypeId> {
        match self.alternatives.as_slice() {
            [t] => Some(*t),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.alternatives.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SignatureError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: duplicate declaration of type `{name}`")]
    DuplicateType { name: String, line: usize, col: usize },
    #[error("{line}:{col}: type `{child}` refers to undeclared parent `{parent}`")]
    UnknownParent {
        child: String,
        parent: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: unknown type `{name}` in appropriateness value")]
    UnknownValueType { name: String, line: usize, col: usize },
    #[error("no top type declared")]
    MissingTop,
    #[error("type `{0}` is not below the top type")]
    Unrooted(String),
    #[error("subsumption cycle through type `{0}`")]
    Cycle(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
}

/// Fixed-capacity set of types, one bit per type id.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct TypeSet {
    words: Vec<u64>,
}

impl TypeSet {
    pub(crate) fn new(n: usize) -> Self {
        TypeSet {
            words: vec![0; n.div_ceil(64).max(1)],
        }
    }

    pub(crate) fn insert(&mut self, t: TypeId) {
        self.words[t.index() / 64] |= 1 << (t.index() % 64);
    }

    pub(crate) fn contains(&self, t: TypeId) -> bool {
        self.words[t.index() / 64] & (1 << (t.index() % 64)) != 0
    }

    pub(crate) fn union_with(&mut self, other: &TypeSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub(crate) fn intersection(&self, other: &TypeSet) -> TypeSet {
        TypeSet {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = TypeId> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64)
                .filter(move |b| bits & (1 << b) != 0)
                .map(move |b| TypeId((w * 64 + b) as u32))
        })
    }
}

/// Incremental constructor for a [`Signature`].
#[derive(Debug, Clone, Default)]
pub struct SignatureBuilder {
    type_names: Vec<String>,
    type_index: HashMap<String, TypeId>,
    parents: Vec<Vec<TypeId>>,
    top: Option<TypeId>,
    feature_names: Vec<String>,
    feature_index: HashMap<String, FeatureId>,
    declared: Vec<Vec<(FeatureId, ApproSpec)>>,
}

impl SignatureBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns a type name, returning the existing id if already present.
    pub fn add_type(&mut self, name: &str) -> TypeId {
        if let Some(&t) = self.type_index.get(name) {
            return t;
        }
        let t = TypeId(self.type_names.len() as u32);
        self.type_names.push(name.to_string());
        self.type_index.insert(name.to_string(), t);
        self.parents.push(Vec::new());
        self.declared.push(Vec::new());
        t
    }

    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.type_index.get(name).copied()
    }

    pub fn set_top(&mut self, t: TypeId) {
        self.top = Some(t);
    }

    pub fn add_parent(&mut self, child: TypeId, parent: TypeId) {
        let ps = &mut self.parents[child.index()];
        if !ps.contains(&parent) {
            ps.push(parent);
        }
    }

    pub fn feature(&mut self, name: &str) -> FeatureId {
        if let Some(&f) = self.feature_index.get(name) {
            return f;
        }
        let f = FeatureId(self.feature_names.len() as u32);
        self.feature_names.push(name.to_string());
        self.feature_index.insert(name.to_string(), f);
        f
    }

    /// Declares (or redeclares) the local appropriateness of `f` at `t`.
    pub fn declare(&mut self, t: TypeId, f: FeatureId, spec: ApproSpec) {
        let decls = &mut self.declared[t.index()];
        match decls.iter_mut().find(|(g, _)| *g == f) {
            Some(slot) => slot.1 = spec,
            None => decls.push((f, spec)),
        }
    }

    pub fn build(self) -> Result<Signature, SignatureError> {
        let top = self.top.ok_or(SignatureError::MissingTop)?;
        let n = self.type_names.len();
        for (i, ps) in self.parents.iter().enumerate() {
            if i != top.index() && ps.is_empty() {
                return Err(SignatureError::Unrooted(self.type_names[i].clone()));
            }
        }
        // Top must not have parents; anything else is a cycle through top.
        if !self.parents[top.index()].is_empty() {
            return Err(SignatureError::Cycle(self.type_names[top.index()].clone()));
        }
        let topo = topological_order(&self.parents)
            .map_err(|t| SignatureError::Cycle(self.type_names[t.index()].clone()))?;

        let mut children = vec![Vec::new(); n];
        for (i, ps) in self.parents.iter().enumerate() {
            for p in ps {
                children[p.index()].push(TypeId(i as u32));
            }
        }

        // above[t]: all supertypes of t (reflexive), computed parents-first.
        let mut above: Vec<TypeSet> = vec![TypeSet::new(n); n];
        for &t in &topo {
            let mut set = TypeSet::new(n);
            set.insert(t);
            for p in &self.parents[t.index()] {
                set.union_with(&above[p.index()]);
            }
            above[t.index()] = set;
        }
        let mut below: Vec<TypeSet> = vec![TypeSet::new(n); n];
        for t in 0..n {
            for s in above[t].iter() {
                below[s.index()].insert(TypeId(t as u32));
            }
        }
        let species: Vec<TypeId> = (0..n)
            .filter(|&i| children[i].is_empty())
            .map(|i| TypeId(i as u32))
            .collect();

        let mut sig = Signature {
            type_names: self.type_names,
            type_index: self.type_index,
            parents: self.parents,
            children,
            top,
            feature_names: self.feature_names,
            feature_index: self.feature_index,
            declared: self.declared,
            above,
            below,
            species,
            topo,
            approp: Vec::new(),
            intro_order: Vec::new(),
        };
        sig.compute_approp();
        Ok(sig)
    }
}

/// Parents-first ordering of types; `Err` names a type on a cycle.
fn topological_order(parents: &[Vec<TypeId>]) -> Result<Vec<TypeId>, TypeId> {
    let n = parents.len();
    let mut state = vec![0u8; n];
    let mut order = Vec::with_capacity(n);
    fn visit(
        t: usize,
        parents: &[Vec<TypeId>],
        state: &mut [u8],
        order: &mut Vec<TypeId>,
    ) -> Result<(), TypeId> {
        match state[t] {
            2 => return Ok(()),
            1 => return Err(TypeId(t as u32)),
            _ => {}
        }
        state[t] = 1;
        for p in &parents[t] {
            visit(p.index(), parents, state, order)?;
        }
        state[t] = 2;
        order.push(TypeId(t as u32));
        Ok(())
    }
    for t in 0..n {
        visit(t, parents, &mut state, &mut order)?;
    }
    Ok(order)
}

/// A parsed type signature. Immutable once built.
#[derive(Debug, Clone)]
pub struct Signature {
    type_names: Vec<String>,
    type_index: HashMap<String, TypeId>,
    parents: Vec<Vec<TypeId>>,
    children: Vec<Vec<TypeId>>,
    top: TypeId,
    feature_names: Vec<String>,
    feature_index: HashMap<String, FeatureId>,
    declared: Vec<Vec<(FeatureId, ApproSpec)>>,
    above: Vec<TypeSet>,
    below: Vec<TypeSet>,
    species: Vec<TypeId>,
    topo: Vec<TypeId>,
    approp: Vec<BTreeMap<FeatureId, ApproSpec>>,
    intro_order: Vec<Vec<FeatureId>>,
}

impl Signature {
    pub fn top(&self) -> TypeId {
        self.top
    }

    pub fn type_count(&self) -> usize {
        self.type_names.len()
    }

    pub fn types(&self) -> impl Iterator<Item = TypeId> {
        (0..self.type_names.len() as u32).map(TypeId)
    }

    pub fn features(&self) -> impl Iterator<Item = FeatureId> {
        (0..self.feature_names.len() as u32).map(FeatureId)
    }

    pub fn type_name(&self, t: TypeId) -> &str {
        &self.type_names[t.index()]
    }

    pub fn feature_name(&self, f: FeatureId) -> &str {
        &self.feature_names[f.index()]
    }

    pub fn type_id(&self, name: &str) -> Result<TypeId, SignatureError> {
        self.type_index
            .get(name)
            .copied()
            .ok_or_else(|| SignatureError::UnknownType(name.to_string()))
    }

    pub fn feature_id(&self, name: &str) -> Result<FeatureId, SignatureError> {
        self.feature_index
            .get(name)
            .copied()
            .ok_or_else(|| SignatureError::UnknownFeature(name.to_string()))
    }

    /// Immediate supertypes in declaration order.
    pub fn parents(&self, t: TypeId) -> &[TypeId] {
        &self.parents[t.index()]
    }

    /// Immediate subtypes in declaration order.
    pub fn children(&self, t: TypeId) -> &[TypeId] {
        &self.children[t.index()]
    }

    /// Local appropriateness declarations of `t`, in declaration order.
    pub fn declarations(&self, t: TypeId) -> &[(FeatureId, ApproSpec)] {
        &self.declared[t.index()]
    }

    pub fn is_species(&self, t: TypeId) -> bool {
        self.children[t.index()].is_empty()
    }

    /// All maximally specific types, in id order.
    pub fn all_species(&self) -> &[TypeId] {
        &self.species
    }

    /// True when every non-top type has exactly one parent.
    pub fn is_tree(&self) -> bool {
        self.types()
            .all(|t| t == self.top || self.parents[t.index()].len() == 1)
    }

    /// Reflexive subsumption: `general` is at least as general as `specific`.
    pub fn subsumes(&self, general: TypeId, specific: TypeId) -> bool {
        self.below[general.index()].contains(specific)
    }

    /// All subtypes of `t` (reflexive), in id order.
    pub fn subtypes(&self, t: TypeId) -> Vec<TypeId> {
        self.below[t.index()].iter().collect()
    }

    /// All supertypes of `t` (reflexive), in id order.
    pub fn supertypes(&self, t: TypeId) -> Vec<TypeId> {
        self.above[t.index()].iter().collect()
    }

    /// The maximal types below both arguments. A singleton under bounded
    /// completeness; empty when the types clash.
    pub fn most_general_common_subtypes(&self, t1: TypeId, t2: TypeId) -> Vec<TypeId> {
        let common = self.below[t1.index()].intersection(&self.below[t2.index()]);
        common
            .iter()
            .filter(|&c| {
                self.above[c.index()]
                    .intersection(&common)
                    .iter()
                    .all(|d| d == c)
            })
            .collect()
    }

    /// Most general common subtype, or `None` on a type clash.
    ///
    /// Meaningful on signatures that satisfy bounded completeness; otherwise
    /// the first candidate in declaration order is returned.
    pub fn join_types(&self, t1: TypeId, t2: TypeId) -> Option<TypeId> {
        if self.subsumes(t1, t2) {
            return Some(t2);
        }
        if self.subsumes(t2, t1) {
            return Some(t1);
        }
        self.most_general_common_subtypes(t1, t2).first().copied()
    }

    /// The most specific common supertypes of two types.
    pub fn most_specific_common_supertypes(&self, t1: TypeId, t2: TypeId) -> Vec<TypeId> {
        let common = self.above[t1.index()].intersection(&self.above[t2.index()]);
        common
            .iter()
            .filter(|&c| {
                self.below[c.index()]
                    .intersection(&common)
                    .iter()
                    .all(|d| d == c)
            })
            .collect()
    }

    /// The most specific types subsuming every type in `ts`.
    pub fn generalize(&self, ts: &[TypeId]) -> Vec<TypeId> {
        let Some((&first, rest)) = ts.split_first() else {
            return vec![self.top];
        };
        let common = rest.iter().fold(self.above[first.index()].clone(), |acc, t| {
            acc.intersection(&self.above[t.index()])
        });
        common
            .iter()
            .filter(|&c| {
                self.below[c.index()]
                    .intersection(&common)
                    .iter()
                    .all(|d| d == c)
            })
            .collect()
    }

    /// Species subsumed by `t`, in id order.
    pub fn species_of(&self, t: TypeId) -> Vec<TypeId> {
        self.below[t.index()]
            .iter()
            .filter(|&s| self.is_species(s))
            .collect()
    }

    /// Effective (inherited and refined) appropriateness of `f` at `t`.
    pub fn approp_value(&self, t: TypeId, f: FeatureId) -> Option<&ApproSpec> {
        self.approp[t.index()].get(&f)
    }

    /// All features appropriate for `t`, in feature id order.
    pub fn appropriate_features(&self, t: TypeId) -> impl Iterator<Item = (FeatureId, &ApproSpec)> {
        self.approp[t.index()].iter().map(|(f, s)| (*f, s))
    }

    /// Features for which `t` is a most general appropriate type.
    pub fn introduced_features(&self, t: TypeId) -> &[FeatureId] {
        &self.intro_order[t.index()]
    }

    /// Most general types for which `f` is appropriate. A singleton when the
    /// feature introduction condition holds.
    pub fn introducers(&self, f: FeatureId) -> Vec<TypeId> {
        self.types()
            .filter(|&t| self.intro_order[t.index()].contains(&f))
            .collect()
    }

    /// True when every type of `candidate` is subsumed by some alternative of
    /// `spec`.
    pub fn spec_subsumes(&self, spec: &ApproSpec, candidate: &ApproSpec) -> bool {
        candidate
            .alternatives()
            .iter()
            .all(|&c| spec.alternatives().iter().any(|&s| self.subsumes(s, c)))
    }

    /// Does `t` satisfy the spec (is it subsumed by some alternative)?
    pub fn satisfies(&self, spec: &ApproSpec, t: TypeId) -> bool {
        spec.alternatives().iter().any(|&s| self.subsumes(s, t))
    }

    /// Conjunction of two specs: the most general pairwise joins.
    pub fn meet_specs(&self, a: &ApproSpec, b: &ApproSpec) -> ApproSpec {
        let mut joins = Vec::new();
        for &x in a.alternatives() {
            for &y in b.alternatives() {
                joins.extend(self.most_general_common_subtypes(x, y));
            }
        }
        self.most_general_of(joins)
    }

    /// Reduces a collection of types to its most general members.
    pub fn most_general_of(&self, types: Vec<TypeId>) -> ApproSpec {
        let spec = ApproSpec::new(types);
        let keep = spec
            .alternatives()
            .iter()
            .copied()
            .filter(|&t| {
                !spec
                    .alternatives()
                    .iter()
                    .any(|&u| u != t && self.subsumes(u, t))
            })
            .collect();
        ApproSpec::new(keep)
    }

    fn compute_approp(&mut self) {
        let n = self.type_names.len();
        let mut approp: Vec<BTreeMap<FeatureId, ApproSpec>> = vec![BTreeMap::new(); n];
        for &t in &self.topo {
            let mut inherited: BTreeMap<FeatureId, ApproSpec> = BTreeMap::new();
            for p in &self.parents[t.index()] {
                for (f, spec) in &approp[p.index()] {
                    let merged = match inherited.get(f) {
                        Some(prev) => self.meet_specs(prev, spec),
                        None => spec.clone(),
                    };
                    inherited.insert(*f, merged);
                }
            }
            for (f, spec) in &self.declared[t.index()] {
                inherited.insert(*f, spec.clone());
            }
            approp[t.index()] = inherited;
        }
        let intro_order = (0..n)
            .map(|t| {
                approp[t]
                    .keys()
                    .copied()
                    .filter(|f| {
                        self.parents[t]
                            .iter()
                            .all(|p| !approp[p.index()].contains_key(f))
                    })
                    .collect()
            })
            .collect();
        self.approp = approp;
        self.intro_order = intro_order;
    }

    /// Checks bounded completeness, appropriateness monotonicity and the
    /// feature introduction condition, reporting every violation found.
    pub fn validate(&self) -> ValidationReport {
        let mut diagnostics = Vec::new();
        let types: Vec<TypeId> = self.types().collect();

        for (i, &t1) in types.iter().enumerate() {
            for &t2 in &types[i + 1..] {
                let mgcs = self.most_general_common_subtypes(t1, t2);
                if mgcs.len() > 1 {
                    diagnostics.push(Diagnostic {
                        code: DiagnosticCode::BoundedCompleteness,
                        types: vec![self.type_name(t1).into(), self.type_name(t2).into()],
                        features: vec![],
                        message: format!(
                            "`{}` and `{}` have no unique most general common subtype (candidates: {})",
                            self.type_name(t1),
                            self.type_name(t2),
                            self.names(&mgcs)
                        ),
                    });
                }
            }
        }

        for &t in &types {
            for (f, spec) in &self.declared[t.index()] {
                let alts = spec.alternatives();
                let antichain = alts.iter().all(|&x| {
                    alts.iter()
                        .all(|&y| x == y || self.join_types(x, y).is_none())
                });
                if spec.is_empty() || !antichain {
                    diagnostics.push(Diagnostic {
                        code: DiagnosticCode::ApproSpecShape,
                        types: vec![self.type_name(t).into()],
                        features: vec![self.feature_name(*f).into()],
                        message: format!(
                            "value of `{}` at `{}` must be a non-empty set of mutually incompatible types",
                            self.feature_name(*f),
                            self.type_name(t)
                        ),
                    });
                }
            }
            for (f, spec) in &self.approp[t.index()] {
                if spec.is_empty() {
                    diagnostics.push(Diagnostic {
                        code: DiagnosticCode::Monotonicity,
                        types: vec![self.type_name(t).into()],
                        features: vec![self.feature_name(*f).into()],
                        message: format!(
                            "inherited values of `{}` at `{}` are incompatible",
                            self.feature_name(*f),
                            self.type_name(t)
                        ),
                    });
                }
            }
            for &p in &self.parents[t.index()] {
                for (f, pspec) in &self.approp[p.index()] {
                    let ok = match self.approp[t.index()].get(f) {
                        Some(cspec) => self.spec_subsumes(pspec, cspec),
                        None => false,
                    };
                    if !ok {
                        diagnostics.push(Diagnostic {
                            code: DiagnosticCode::Monotonicity,
                            types: vec![self.type_name(p).into(), self.type_name(t).into()],
                            features: vec![self.feature_name(*f).into()],
                            message: format!(
                                "value of `{}` at `{}` is not subsumed by its value at supertype `{}`",
                                self.feature_name(*f),
                                self.type_name(t),
                                self.type_name(p)
                            ),
                        });
                    }
                }
            }
        }

        for f in self.features() {
            let intro = self.introducers(f);
            if intro.len() != 1 {
                diagnostics.push(Diagnostic {
                    code: DiagnosticCode::FeatureIntroduction,
                    types: intro.iter().map(|&t| self.type_name(t).into()).collect(),
                    features: vec![self.feature_name(f).into()],
                    message: format!(
                        "feature `{}` has no unique most general introducing type (candidates: {})",
                        self.feature_name(f),
                        self.names(&intro)
                    ),
                });
            }
        }

        ValidationReport { diagnostics }
    }

    fn names(&self, ts: &[TypeId]) -> String {
        ts.iter()
            .map(|&t| self.type_name(t))
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Renders the signature back into the DSL.
    pub fn to_dsl(&self) -> String {
        let mut out = String::new();
        for t in self.types() {
            if t == self.top {
                out.push_str(&format!("top {}.\n", self.type_name(t)));
                continue;
            }
            let parents: Vec<&str> = self.parents[t.index()]
                .iter()
                .map(|&p| self.type_name(p))
                .collect();
            out.push_str(&format!("{} isa {}", self.type_name(t), parents.join(", ")));
            let decls = &self.declared[t.index()];
            if !decls.is_empty() {
                let parts: Vec<String> = decls
                    .iter()
                    .map(|(f, spec)| format!("{}: {}", self.feature_name(*f), self.spec_to_string(spec)))
                    .collect();
                out.push_str(&format!(" [{}]", parts.join(", ")));
            }
            out.push_str(".\n");
        }
        out
    }

    pub fn spec_to_string(&self, spec: &ApproSpec) -> String {
        match spec.as_single() {
            Some(t) => self.type_name(t).to_string(),
            None => format!(
                "{{{}}}",
                spec.alternatives()
                    .iter()
                    .map(|&t| self.type_name(t))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        }
    }

    /// A builder pre-populated with this signature's feature table, so that
    /// feature ids stay aligned across derived signatures.
    pub(crate) fn builder_with_features(&self) -> SignatureBuilder {
        let mut b = SignatureBuilder::new();
        for name in &self.feature_names {
            b.feature(name);
        }
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticCode {
    BoundedCompleteness,
    Monotonicity,
    ApproSpecShape,
    FeatureIntroduction,
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DiagnosticCode::BoundedCompleteness => "bounded-completeness",
            DiagnosticCode::Monotonicity => "monotonicity",
            DiagnosticCode::ApproSpecShape => "approp-spec-shape",
            DiagnosticCode::FeatureIntroduction => "feature-introduction",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub types: Vec<String>,
    pub features: Vec<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn has(&self, code: DiagnosticCode) -> bool {
        self.diagnostics.iter().any(|d| d.code == code)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.diagnostics.is_empty() {
            return writeln!(f, "ok: signature is well-formed");
        }
        for d in &self.diagnostics {
            writeln!(f, "{}: {}", d.code, d.message)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// DSL parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

const PUNCT: &[char] = &['.', ',', ':', '[', ']', '{', '}'];

fn tokenize(text: &str) -> Result<Vec<Spanned>, SignatureError> {
    let mut toks = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = match line.find('%') {
            Some(i) => &line[..i],
            None => line,
        };
        let chars: Vec<(usize, char)> = line.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (_, c) = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if PUNCT.contains(&c) {
                toks.push(Spanned {
                    tok: Tok::Punct(c),
                    line: lineno + 1,
                    col: i + 1,
                });
                i += 1;
            } else if is_ident_char(c) {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i].1) {
                    i += 1;
                }
                let s: String = chars[start..i].iter().map(|(_, c)| c).collect();
                toks.push(Spanned {
                    tok: Tok::Ident(s),
                    line: lineno + 1,
                    col: start + 1,
                });
            } else {
                return Err(SignatureError::Syntax {
                    line: lineno + 1,
                    col: i + 1,
                    message: format!("unexpected character `{c}`"),
                });
            }
        }
    }
    Ok(toks)
}

/// Characters allowed in type and feature names, shared with the AVM syntax.
pub(crate) fn is_ident_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '.' | ',' | ':' | '[' | ']' | '{' | '}' | '(' | ')' | '#' | '%' | '"')
}

struct Clause {
    name: String,
    line: usize,
    col: usize,
    parents: Vec<(String, usize, usize)>,
    features: Vec<(String, Vec<(String, usize, usize)>)>,
    is_top: bool,
}

struct SigParser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl SigParser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn err_here(&self, message: impl Into<String>) -> SignatureError {
        let (line, col) = match self.peek().or_else(|| self.toks.last()) {
            Some(s) => (s.line, s.col),
            None => (1, 1),
        };
        SignatureError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize, usize), SignatureError> {
        match self.peek() {
            Some(Spanned {
                tok: Tok::Ident(s),
                line,
                col,
            }) => {
                let r = (s.clone(), *line, *col);
                self.pos += 1;
                Ok(r)
            }
            _ => Err(self.err_here(format!("expected {what}"))),
        }
    }

    fn punct(&mut self, c: char) -> Result<(), SignatureError> {
        match self.peek() {
            Some(Spanned {
                tok: Tok::Punct(p), ..
            }) if *p == c => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err_here(format!("expected `{c}`"))),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if matches!(self.peek(), Some(Spanned { tok: Tok::Punct(p), .. }) if *p == c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn clause(&mut self) -> Result<Clause, SignatureError> {
        let (first, line, col) = self.ident("a type name or `top`")?;
        if first == "top" {
            if let Some(Spanned {
                tok: Tok::Ident(next),
                ..
            }) = self.peek()
            {
                if next != "isa" {
                    let (name, line, col) = self.ident("type name")?;
                    self.punct('.')?;
                    return Ok(Clause {
                        name,
                        line,
                        col,
                        parents: vec![],
                        features: vec![],
                        is_top: true,
                    });
                }
            }
        }
        let (kw, _, _) = self.ident("`isa`")?;
        if kw != "isa" {
            self.pos -= 1;
            return Err(self.err_here("expected `isa`"));
        }
        let mut parents = vec![self.ident("parent type")?];
        while self.eat(',') {
            parents.push(self.ident("parent type")?);
        }
        let mut features = Vec::new();
        if self.eat('[') {
            loop {
                let (feat, _, _) = self.ident("feature name")?;
                self.punct(':')?;
                let values = if self.eat('{') {
                    let mut vs = vec![self.ident("value type")?];
                    while self.eat(',') {
                        vs.push(self.ident("value type")?);
                    }
                    self.punct('}')?;
                    vs
                } else {
                    vec![self.ident("value type")?]
                };
                if features.iter().any(|(f, _)| *f == feat) {
                    self.pos -= 1;
                    return Err(self.err_here(format!("feature `{feat}` declared twice")));
                }
                features.push((feat, values));
                if !self.eat(',') {
                    break;
                }
            }
            self.punct(']')?;
        }
        self.punct('.')?;
        Ok(Clause {
            name: first,
            line,
            col,
            parents,
            features,
            is_top: false,
        })
    }
}

/// Parses the signature DSL. Declaration order of types, parents and
/// features is preserved; forward references are allowed.
pub fn parse_signature(text: &str) -> Result<Signature, SignatureError> {
    let mut parser = SigParser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let mut clauses = Vec::new();
    while parser.peek().is_some() {
        clauses.push(parser.clause()?);
    }

    let mut b = SignatureBuilder::new();
    let mut declared_at: HashMap<String, (usize, usize)> = HashMap::new();
    for c in &clauses {
        if declared_at.contains_key(&c.name) {
            return Err(SignatureError::DuplicateType {
                name: c.name.clone(),
                line: c.line,
                col: c.col,
            });
        }
        if c.is_top && b.top.is_some() {
            return Err(SignatureError::Syntax {
                line: c.line,
                col: c.col,
                message: "top type declared twice".into(),
            });
        }
        declared_at.insert(c.name.clone(), (c.line, c.col));
        let t = b.add_type(&c.name);
        if c.is_top {
            b.set_top(t);
        }
    }
    for c in &clauses {
        let t = b.type_id(&c.name).expect("interned above");
        for (p, line, col) in &c.parents {
            let pid = b.type_id(p).ok_or_else(|| SignatureError::UnknownParent {
                child: c.name.clone(),
                parent: p.clone(),
                line: *line,
                col: *col,
            })?;
            b.add_parent(t, pid);
        }
        for (feat, values) in &c.features {
            let f = b.feature(feat);
            let mut alts = Vec::new();
            for (v, line, col) in values {
                alts.push(b.type_id(v).ok_or_else(|| SignatureError::UnknownValueType {
                    name: v.clone(),
                    line: *line,
                    col: *col,
                })?);
            }
            b.declare(t, f, ApproSpec::new(alts));
        }
    }
    b.build()
}
