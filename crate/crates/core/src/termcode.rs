//! First-order term encoding of typed feature structures.
//!
//! A type is encoded by the chain of functors from a maximal proper subtype
//! of top down to the type itself. Every non-species level has a
//! continuation argument (first), followed by one argument per feature the
//! level introduces. Top is a bare variable. Unifying two encodings as terms
//! computes the join of the types and merges feature values.
//!
//! Dependencies between the types at different nodes of a disjunction are
//! expressed as a definite clause `lex(Key, Enc) :- p(X, Y).` with one fact
//! per alternative; see [`emit_attachments`] and [`solve_attachments`].

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::fstruct::{FeatureStructure, FsBuilder, NodeId};
use crate::normalize::Factored;
use crate::signature::{FeatureId, Signature, TypeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Var),
    App(String, Vec<Term>),
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::App(name.to_string(), Vec::new())
    }

    pub fn app(name: &str, args: Vec<Term>) -> Term {
        Term::App(name.to_string(), args)
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Variables in first-occurrence (left to right, depth first) order,
    /// with repetitions.
    pub fn var_occurrences(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => out.push(*v),
            Term::App(_, args) => args.iter().for_each(|a| a.var_occurrences(out)),
        }
    }

    pub fn max_var(&self) -> Option<u32> {
        match self {
            Term::Var(v) => Some(v.0),
            Term::App(_, args) => args.iter().filter_map(Term::max_var).max(),
        }
    }

    /// Renames every variable by adding `offset`.
    pub fn shift(&self, offset: u32) -> Term {
        match self {
            Term::Var(v) => Term::Var(Var(v.0 + offset)),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.shift(offset)).collect()),
        }
    }

    /// Equal up to a consistent bijective renaming of variables.
    pub fn is_variant(&self, other: &Term) -> bool {
        fn go(a: &Term, b: &Term, fwd: &mut HashMap<Var, Var>, back: &mut HashMap<Var, Var>) -> bool {
            match (a, b) {
                (Term::Var(x), Term::Var(y)) => {
                    *fwd.entry(*x).or_insert(*y) == *y && *back.entry(*y).or_insert(*x) == *x
                }
                (Term::App(f, xs), Term::App(g, ys)) => {
                    f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| go(x, y, fwd, back))
                }
                _ => false,
            }
        }
        go(self, other, &mut HashMap::new(), &mut HashMap::new())
    }

    /// Renders with every variable named `X1`, `X2`, ... in first-occurrence
    /// order.
    pub fn render(&self) -> String {
        render_terms(&[self], false).remove(0)
    }
}

/// Source of fresh variables.
#[derive(Debug, Clone, Default)]
pub struct VarSupply {
    next: u32,
}

impl VarSupply {
    pub fn new() -> Self {
        Self::default()
    }

    /// A supply that never hands out a variable of any of `terms`.
    pub fn above<'a>(terms: impl IntoIterator<Item = &'a Term>) -> Self {
        let next = terms
            .into_iter()
            .filter_map(Term::max_var)
            .max()
            .map_or(0, |m| m + 1);
        Self { next }
    }

    pub fn fresh(&mut self) -> Term {
        Term::Var(self.fresh_var())
    }

    pub fn fresh_var(&mut self) -> Var {
        let v = Var(self.next);
        self.next += 1;
        v
    }

    /// Reserves `n` variables and returns the offset of the block.
    pub fn reserve(&mut self, n: u32) -> u32 {
        let start = self.next;
        self.next += n;
        start
    }
}

// ---------------------------------------------------------------------------
// Unification

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: HashMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn get(&self, v: Var) -> Option<&Term> {
        self.bindings.get(&v)
    }

    /// Follows variable bindings at the top of `t` only.
    pub fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.bindings.get(v) {
                Some(b) => t = b,
                None => break,
            }
        }
        t
    }

    /// Applies the substitution all the way down.
    pub fn resolve(&self, t: &Term) -> Term {
        match self.walk(t) {
            Term::Var(v) => Term::Var(*v),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| self.resolve(a)).collect()),
        }
    }

    /// Like [`Substitution::resolve`], but `None` if the bindings are
    /// cyclic below `t` (possible only without the occurs check).
    pub fn resolve_acyclic(&self, t: &Term) -> Option<Term> {
        fn go(s: &Substitution, t: &Term, open: &mut Vec<Var>) -> Option<Term> {
            let mut t = t;
            let mut pushed = 0;
            while let Term::Var(v) = t {
                match s.bindings.get(v) {
                    Some(b) => {
                        if open.contains(v) {
                            return None;
                        }
                        open.push(*v);
                        pushed += 1;
                        t = b;
                    }
                    None => break,
                }
            }
            let out = match t {
                Term::Var(v) => Some(Term::Var(*v)),
                Term::App(f, args) => args
                    .iter()
                    .map(|a| go(s, a, open))
                    .collect::<Option<Vec<_>>>()
                    .map(|args| Term::App(f.clone(), args)),
            };
            open.truncate(open.len() - pushed);
            out
        }
        go(self, t, &mut Vec::new())
    }

    fn occurs(&self, v: Var, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(w) => *w == v,
            Term::App(_, args) => args.iter().any(|a| self.occurs(v, a)),
        }
    }

    /// Extends the substitution to a most general unifier of `a` and `b`.
    /// On failure the substitution may hold partial bindings; callers that
    /// backtrack should unify on a clone.
    pub fn unify(&mut self, a: &Term, b: &Term, occurs_check: bool) -> bool {
        let mut stack = vec![(a.clone(), b.clone())];
        // without the occurs check bindings may be cyclic; a pair met before
        // is assumed to unify, which keeps descent finite
        let mut met: HashSet<(Term, Term)> = HashSet::new();
        while let Some((x, y)) = stack.pop() {
            if !occurs_check
                && (matches!(x, Term::Var(_)) || matches!(y, Term::Var(_)))
                && !met.insert((x.clone(), y.clone()))
            {
                continue;
            }
            let x = self.walk(&x).clone();
            let y = self.walk(&y).clone();
            match (x, y) {
                (Term::Var(v), Term::Var(w)) if v == w => {}
                (Term::Var(v), t) | (t, Term::Var(v)) => {
                    if occurs_check && self.occurs(v, &t) {
                        return false;
                    }
                    self.bindings.insert(v, t);
                }
                (Term::App(f, xs), Term::App(g, ys)) => {
                    if f != g || xs.len() != ys.len() {
                        return false;
                    }
                    stack.extend(xs.into_iter().zip(ys));
                }
            }
        }
        true
    }
}

/// Most general unifier of two terms, with occurs check.
pub fn term_unify(a: &Term, b: &Term) -> Option<Substitution> {
    term_unify_with(a, b, true)
}

pub fn term_unify_with(a: &Term, b: &Term, occurs_check: bool) -> Option<Substitution> {
    let mut s = Substitution::new();
    s.unify(a, b, occurs_check).then_some(s)
}

// ---------------------------------------------------------------------------
// Text form

fn is_plain_atom(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn quote_atom(name: &str) -> String {
    if is_plain_atom(name) {
        name.to_string()
    } else {
        format!("'{}'", name.replace('\'', "''"))
    }
}

/// Renders terms that share one variable scope. With `anonymous_singletons`
/// a variable occurring once across all terms prints as `_`; the others are
/// numbered `X1`, `X2`, ... by first occurrence.
pub fn render_terms(terms: &[&Term], anonymous_singletons: bool) -> Vec<String> {
    let mut occ = Vec::new();
    for t in terms {
        t.var_occurrences(&mut occ);
    }
    let mut counts: HashMap<Var, usize> = HashMap::new();
    for v in &occ {
        *counts.entry(*v).or_default() += 1;
    }
    let mut names: HashMap<Var, String> = HashMap::new();
    for v in &occ {
        if names.contains_key(v) {
            continue;
        }
        let name = if anonymous_singletons && counts[v] == 1 {
            "_".to_string()
        } else {
            format!("X{}", names.values().filter(|n| *n != "_").count() + 1)
        };
        names.insert(*v, name);
    }
    fn go(t: &Term, names: &HashMap<Var, String>, out: &mut String) {
        match t {
            Term::Var(v) => out.push_str(&names[v]),
            Term::App(f, args) => {
                out.push_str(&quote_atom(f));
                if !args.is_empty() {
                    out.push('(');
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        go(a, names, out);
                    }
                    out.push(')');
                }
            }
        }
    }
    terms
        .iter()
        .map(|t| {
            let mut s = String::new();
            go(t, &names, &mut s);
            s
        })
        .collect()
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_terms(&[self], true)[0])
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("term syntax error at column {col}: {message}")]
pub struct TermSyntaxError {
    pub col: usize,
    pub message: String,
}

/// Parses `f(a, X, 'b c'(_))`. Names starting with an upper-case letter or
/// `_` are variables; each bare `_` is a distinct variable. Variables are
/// numbered from `supply`; the named ones are returned alongside the term.
pub fn parse_term(text: &str, supply: &mut VarSupply) -> Result<(Term, Vec<(String, Var)>), TermSyntaxError> {
    let mut p = TermParser {
        chars: text.char_indices().collect(),
        pos: 0,
        names: Vec::new(),
        supply,
    };
    let t = p.term()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.err("trailing input"));
    }
    Ok((t, p.names))
}

struct TermParser<'s> {
    chars: Vec<(usize, char)>,
    pos: usize,
    names: Vec<(String, Var)>,
    supply: &'s mut VarSupply,
}

impl TermParser<'_> {
    fn err(&self, message: &str) -> TermSyntaxError {
        TermSyntaxError {
            col: self.pos + 1,
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn name(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_whitespace() || "(),'".contains(c) {
                break;
            }
            s.push(c);
            self.pos += 1;
        }
        s
    }

    fn term(&mut self) -> Result<Term, TermSyntaxError> {
        self.skip_ws();
        let functor = match self.peek() {
            None => return Err(self.err("expected a term")),
            Some('\'') => {
                self.pos += 1;
                let mut s = String::new();
                loop {
                    match self.peek() {
                        None => return Err(self.err("unterminated quoted atom")),
                        Some('\'') => {
                            self.pos += 1;
                            if self.peek() == Some('\'') {
                                s.push('\'');
                                self.pos += 1;
                            } else {
                                break;
                            }
                        }
                        Some(c) => {
                            s.push(c);
                            self.pos += 1;
                        }
                    }
                }
                s
            }
            Some(c) if c.is_uppercase() || c == '_' => {
                let name = self.name();
                if name == "_" {
                    return Ok(self.supply.fresh());
                }
                if let Some((_, v)) = self.names.iter().find(|(n, _)| *n == name) {
                    return Ok(Term::Var(*v));
                }
                let v = self.supply.fresh_var();
                self.names.push((name, v));
                return Ok(Term::Var(v));
            }
            Some(_) => {
                let name = self.name();
                if name.is_empty() {
                    return Err(self.err("expected a term"));
                }
                name
            }
        };
        self.skip_ws();
        let mut args = Vec::new();
        if self.peek() == Some('(') {
            self.pos += 1;
            loop {
                args.push(self.term()?);
                self.skip_ws();
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
        Ok(Term::App(functor, args))
    }
}

// ---------------------------------------------------------------------------
// Layout

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("type `{0}` has more than one parent; compile out multiple inheritance first")]
    MultipleInheritance(String),
    #[error("top type `{0}` introduces features, which have no slot")]
    TopFeatures(String),
    #[error("feature `{feature}` has no slot under type `{ty}`")]
    InappropriateFeature { ty: String, feature: String },
    #[error("malformed term: {0}")]
    Malformed(String),
}

/// Argument positions for every type of a tree-shaped signature.
#[derive(Debug, Clone)]
pub struct Layout {
    sig: Signature,
    paths: Vec<Vec<TypeId>>,
}

/// Computes the functor chain of every type.
pub fn build_layout(sig: &Signature) -> Result<Layout, EncodeError> {
    if let Some(t) = sig.types().find(|&t| sig.parents(t).len() > 1) {
        return Err(EncodeError::MultipleInheritance(sig.type_name(t).into()));
    }
    let top = sig.top();
    if !sig.introduced_features(top).is_empty() {
        return Err(EncodeError::TopFeatures(sig.type_name(top).into()));
    }
    let mut paths = vec![Vec::new(); sig.type_count()];
    // parents precede children in a depth-first walk from top
    let mut stack: Vec<TypeId> = sig.children(top).iter().rev().copied().collect();
    while let Some(t) = stack.pop() {
        let parent = sig.parents(t)[0];
        let mut p = paths[parent.index()].clone();
        p.push(t);
        paths[t.index()] = p;
        stack.extend(sig.children(t).iter().rev());
    }
    Ok(Layout {
        sig: sig.clone(),
        paths,
    })
}

impl Layout {
    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    /// Functor chain for `t`, starting below top; empty for top.
    pub fn path(&self, t: TypeId) -> &[TypeId] {
        &self.paths[t.index()]
    }

    fn has_continuation(&self, t: TypeId) -> bool {
        !self.sig.is_species(t)
    }

    pub fn arity(&self, t: TypeId) -> usize {
        usize::from(self.has_continuation(t)) + self.sig.introduced_features(t).len()
    }

    /// Fresh encoding of `t`, plus its innermost continuation variable (if
    /// any) and the variable in each feature slot along the chain.
    fn skeleton(
        &self,
        t: TypeId,
        supply: &mut VarSupply,
    ) -> (Term, Option<Var>, Vec<(FeatureId, Var)>) {
        let path = self.path(t);
        if path.is_empty() {
            let v = supply.fresh_var();
            return (Term::Var(v), Some(v), Vec::new());
        }
        let mut slots = Vec::new();
        let mut levels: Vec<(TypeId, Vec<Term>)> = Vec::new();
        for &u in path {
            let vars: Vec<Term> = self
                .sig
                .introduced_features(u)
                .iter()
                .map(|&f| {
                    let v = supply.fresh_var();
                    slots.push((f, v));
                    Term::Var(v)
                })
                .collect();
            levels.push((u, vars));
        }
        let cont = self.has_continuation(t).then(|| supply.fresh_var());
        let mut inner: Option<Term> = cont.map(Term::Var);
        for (u, feats) in levels.into_iter().rev() {
            let mut args = Vec::with_capacity(feats.len() + 1);
            args.extend(inner.take());
            args.extend(feats);
            inner = Some(Term::App(self.sig.type_name(u).to_string(), args));
        }
        (inner.expect("non-empty path"), cont, slots)
    }

    pub fn encode_type(&self, t: TypeId, supply: &mut VarSupply) -> Term {
        self.skeleton(t, supply).0
    }

    /// Encodes `fs`; reentrant nodes share one subterm.
    pub fn encode_fs(&self, fs: &FeatureStructure, supply: &mut VarSupply) -> Result<Term, EncodeError> {
        Ok(self.encode_with_sites(fs, supply)?.0)
    }

    /// Encoding plus, per node, the innermost continuation variable of its
    /// type's chain (`None` for species).
    fn encode_with_sites(
        &self,
        fs: &FeatureStructure,
        supply: &mut VarSupply,
    ) -> Result<(Term, Vec<Option<Var>>), EncodeError> {
        let mut subst = Substitution::new();
        let mut node_terms: Vec<Option<Term>> = vec![None; fs.node_count()];
        let mut conts = vec![None; fs.node_count()];
        for n in fs.post_order() {
            let t = fs.node_type(n);
            let (term, cont, slots) = self.skeleton(t, supply);
            conts[n] = cont;
            for &(f, to) in fs.arcs(n) {
                let Some(&(_, v)) = slots.iter().find(|(g, _)| *g == f) else {
                    return Err(EncodeError::InappropriateFeature {
                        ty: self.sig.type_name(t).into(),
                        feature: self.sig.feature_name(f).into(),
                    });
                };
                let child = node_terms[to].clone().expect("children first");
                subst.bindings.insert(v, child);
            }
            node_terms[n] = Some(subst.resolve(&term));
        }
        Ok((node_terms[fs.root()].take().expect("root encoded"), conts))
    }

    /// Reads a feature structure off a fully resolved term. Identical
    /// non-ground subterms become one node; a variable in a feature slot
    /// becomes a shared top node if it occurs more than once in `term`, and
    /// leaves the feature unfilled otherwise.
    pub fn decode_term(&self, term: &Term) -> Result<FeatureStructure, EncodeError> {
        let mut d = Decoder {
            layout: self,
            counts: HashMap::new(),
            b: FsBuilder::new(),
            shared: HashMap::new(),
        };
        // a subterm repeated because its node is shared counts once
        d.count(term, &mut HashSet::new())?;
        let root = d.node(term)?;
        d.b.finish(root)
            .map_err(|e| EncodeError::Malformed(e.to_string()))
    }
}

struct Decoder<'a> {
    layout: &'a Layout,
    counts: HashMap<Var, usize>,
    b: FsBuilder,
    shared: HashMap<Term, NodeId>,
}

impl Decoder<'_> {
    /// Most specific type along the functor chain and the filled feature
    /// slots; `None` for a variable.
    fn read<'t>(&self, term: &'t Term) -> Result<Option<(TypeId, Vec<(FeatureId, &'t Term)>)>, EncodeError> {
        let sig = &self.layout.sig;
        let Term::App(name, args) = term else {
            return Ok(None);
        };
        let mut current = sig.top();
        let mut level = (name, args);
        let mut fills = Vec::new();
        loop {
            let (name, args) = level;
            let t = sig
                .type_id(name)
                .map_err(|_| EncodeError::Malformed(format!("unknown functor `{name}`")))?;
            if sig.parents(t) != [current] {
                return Err(EncodeError::Malformed(format!(
                    "`{name}` is not an immediate subtype of `{}`",
                    sig.type_name(current)
                )));
            }
            if args.len() != self.layout.arity(t) {
                return Err(EncodeError::Malformed(format!(
                    "`{name}` has {} arguments, expected {}",
                    args.len(),
                    self.layout.arity(t)
                )));
            }
            current = t;
            let cont = self.layout.has_continuation(t);
            let feats = &args[usize::from(cont)..];
            fills.extend(sig.introduced_features(t).iter().copied().zip(feats));
            match args.first().filter(|_| cont) {
                Some(Term::App(n2, a2)) => level = (n2, a2),
                _ => break,
            }
        }
        Ok(Some((current, fills)))
    }

    fn count(&mut self, term: &Term, seen: &mut HashSet<Term>) -> Result<(), EncodeError> {
        if let Term::Var(v) = term {
            *self.counts.entry(*v).or_default() += 1;
            return Ok(());
        }
        if !term.is_ground() && !seen.insert(term.clone()) {
            return Ok(());
        }
        if let Some((_, fills)) = self.read(term)? {
            for (_, slot) in fills {
                self.count(slot, seen)?;
            }
        }
        Ok(())
    }

    fn node(&mut self, term: &Term) -> Result<NodeId, EncodeError> {
        if !term.is_ground() {
            if let Some(&n) = self.shared.get(term) {
                return Ok(n);
            }
        }
        let n = self.b.node(self.layout.sig.top());
        if !term.is_ground() {
            self.shared.insert(term.clone(), n);
        }
        let Some((t, fills)) = self.read(term)? else {
            return Ok(n);
        };
        self.b.set_type(n, t);
        for (f, slot) in fills {
            if let Term::Var(v) = slot {
                if self.counts[v] < 2 {
                    continue;
                }
            }
            let child = self.node(slot)?;
            self.b.arc(n, f, child);
        }
        Ok(n)
    }
}

// ---------------------------------------------------------------------------
// Attachments

/// One body goal of an attachment clause and the facts defining it. Fact
/// variables are local to each fact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    pub name: String,
    pub args: Vec<Term>,
    pub facts: Vec<Vec<Term>>,
}

/// `lex(key, encoding) :- p1(..), p2(..).` plus the facts for each `pi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttachmentProgram {
    pub key: String,
    pub encoding: Term,
    pub predicates: Vec<Predicate>,
    pub comment: Option<String>,
}

/// Builds the attachment clause for a factored disjunction. Predicates are
/// named `p` for a single table, `p1`, `p2`, ... otherwise.
pub fn emit_attachments(key: &str, factored: &Factored, layout: &Layout) -> Result<AttachmentProgram, EncodeError> {
    emit_attachments_named(key, factored, layout, "p")
}

/// As [`emit_attachments`] with a caller-chosen predicate prefix. A prefix
/// ending in a digit gets `_` before table numbers.
pub fn emit_attachments_named(
    key: &str,
    factored: &Factored,
    layout: &Layout,
    prefix: &str,
) -> Result<AttachmentProgram, EncodeError> {
    let mut supply = VarSupply::new();
    let gen = &factored.generalization;
    let (encoding, conts) = layout.encode_with_sites(gen, &mut supply)?;
    let single = factored.tables.len() == 1;
    let mut predicates = Vec::new();
    for table in &factored.tables {
        let args = table
            .sites
            .iter()
            .map(|&n| {
                Term::Var(conts[n].expect("varying sites are never species"))
            })
            .collect();
        let facts = table
            .rows
            .iter()
            .map(|row| {
                let mut local = VarSupply::new();
                table
                    .sites
                    .iter()
                    .zip(row)
                    .map(|(&n, &t)| relative_encoding(layout, gen.node_type(n), t, &mut local))
                    .collect()
            })
            .collect();
        predicates.push(Predicate {
            name: match (single, prefix.ends_with(|c: char| c.is_ascii_digit())) {
                (true, _) => prefix.to_string(),
                (false, false) => format!("{prefix}{}", table.name),
                (false, true) => format!("{prefix}_{}", table.name),
            },
            args,
            facts,
        });
    }
    Ok(AttachmentProgram {
        key: key.to_string(),
        encoding,
        predicates,
        comment: None,
    })
}

/// The part of `t`'s encoding that fills the continuation slot of `general`.
fn relative_encoding(layout: &Layout, general: TypeId, t: TypeId, supply: &mut VarSupply) -> Term {
    let depth = layout.path(general).len();
    let mut term = layout.encode_type(t, supply);
    for _ in 0..depth {
        let Term::App(_, mut args) = term else {
            unreachable!("chain of `t` extends the chain of `general`")
        };
        term = args.swap_remove(0);
    }
    term
}

impl AttachmentProgram {
    pub fn with_comment(mut self, comment: impl Into<String>) -> Self {
        self.comment = Some(comment.into());
        self
    }

    pub fn head(&self) -> Term {
        Term::App("lex".into(), vec![Term::atom(&self.key), self.encoding.clone()])
    }

    pub fn body(&self) -> Vec<Term> {
        self.predicates
            .iter()
            .map(|p| Term::App(p.name.clone(), p.args.clone()))
            .collect()
    }

    fn max_var(&self) -> Option<u32> {
        self.encoding.max_var()
    }

    /// Clause text, one clause per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(c) = &self.comment {
            for line in c.lines() {
                out.push_str(&format!("% {line}\n"));
            }
        }
        let head = self.head();
        let body = self.body();
        let mut terms = vec![&head];
        terms.extend(body.iter());
        let text = render_terms(&terms, true);
        if body.is_empty() {
            out.push_str(&format!("{}.\n", text[0]));
        } else {
            out.push_str(&format!("{} :- {}.\n", text[0], text[1..].join(", ")));
        }
        for p in &self.predicates {
            for fact in &p.facts {
                let refs: Vec<&Term> = fact.iter().collect();
                let args = render_terms(&refs, true);
                out.push_str(&format!("{}({}).\n", quote_atom(&p.name), args.join(", ")));
            }
        }
        out
    }
}

/// Enumerates, in fact order, the substitutions under which every predicate
/// of every program has a matching fact, starting from `subst`.
fn solve_predicates(
    preds: &[(&Predicate, u32)],
    subst: Substitution,
    supply: &mut VarSupply,
    occurs_check: bool,
    out: &mut Vec<Substitution>,
) {
    let Some(((pred, offset), rest)) = preds.split_first() else {
        out.push(subst);
        return;
    };
    for fact in &pred.facts {
        let width = fact.iter().filter_map(Term::max_var).max().map_or(0, |m| m + 1);
        let local = supply.reserve(width);
        let mut s = subst.clone();
        let ok = pred
            .args
            .iter()
            .zip(fact)
            .all(|(a, f)| s.unify(&a.shift(*offset), &f.shift(local), occurs_check));
        if ok {
            solve_predicates(rest, s, supply, occurs_check, out);
        }
    }
}

/// Resolves `goal` against the program: unify with the head, then pick one
/// fact per body predicate. Returns the instantiated goal per solution.
pub fn solve_attachments(goal: &Term, program: &AttachmentProgram) -> Vec<Term> {
    let mut supply = VarSupply::above([goal]);
    let offset = supply.reserve(program.max_var().map_or(0, |m| m + 1));
    let mut s = Substitution::new();
    if !s.unify(goal, &program.head().shift(offset), true) {
        return Vec::new();
    }
    let preds: Vec<(&Predicate, u32)> = program.predicates.iter().map(|p| (p, offset)).collect();
    let mut sols = Vec::new();
    solve_predicates(&preds, s, &mut supply, true, &mut sols);
    sols.iter().map(|s| s.resolve(goal)).collect()
}

/// Unifies the encodings of two programs and solves both sets of attachments
/// jointly. Returns the resolved common encoding per solution; cyclic
/// solutions (occurs check off) are dropped.
pub fn unify_programs(a: &AttachmentProgram, b: &AttachmentProgram, occurs_check: bool) -> Vec<Term> {
    let mut supply = VarSupply::new();
    let oa = supply.reserve(a.max_var().map_or(0, |m| m + 1));
    let ob = supply.reserve(b.max_var().map_or(0, |m| m + 1));
    let ea = a.encoding.shift(oa);
    let mut s = Substitution::new();
    if !s.unify(&ea, &b.encoding.shift(ob), occurs_check) {
        return Vec::new();
    }
    let mut preds: Vec<(&Predicate, u32)> = a.predicates.iter().map(|p| (p, oa)).collect();
    preds.extend(b.predicates.iter().map(|p| (p, ob)));
    let mut sols = Vec::new();
    solve_predicates(&preds, s, &mut supply, occurs_check, &mut sols);
    let mut seen = HashSet::new();
    sols.iter()
        .filter_map(|s| s.resolve_acyclic(&ea))
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

/// Every instance of a program's encoding licensed by its facts.
pub fn program_solutions(program: &AttachmentProgram) -> Vec<Term> {
    let mut supply = VarSupply::above([&program.encoding]);
    let preds: Vec<(&Predicate, u32)> = program.predicates.iter().map(|p| (p, 0)).collect();
    let mut sols = Vec::new();
    solve_predicates(&preds, Substitution::new(), &mut supply, true, &mut sols);
    sols.iter().map(|s| s.resolve(&program.encoding)).collect()
}
