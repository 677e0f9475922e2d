//! Differential testing of term-level unification against graph unification
//! of resolvant sets.
//!
//! Each side of a pair is normalized, factored and emitted as attachment
//! programs; the programs are unified pairwise and solved jointly, and the
//! decoded solutions are compared with `set_unify` of the resolvant sets.
//!
//! Decoded solutions lack unfilled arcs and may differ from the oracle in how
//! identical species nodes are shared. The comparison therefore fills each
//! solution out to the oracle's skeleton, resolves it, and compares both sides
//! modulo [`extensional_quotient`].

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fstruct::{
    graph_unify, resolvants, set_unify, FeatureStructure, FsBuilder, FsSet,
};
use crate::normalize::{compile_description, NormalizeError};
use crate::random::{random_fs, random_signature, GenLimits};
use crate::signature::Signature;
use crate::termcode::{
    build_layout, emit_attachments_named, unify_programs, AttachmentProgram, EncodeError, Layout,
};

/// Upper bound on the number of resolvants of a generated structure; larger
/// ones are regenerated.
pub const MAX_RESOLVANTS: usize = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CrosscheckError {
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// Attachment programs for one description, one per shape group of its
/// normal form. Empty when the description is unsatisfiable.
pub fn compile_programs(
    key: &str,
    fs: &FeatureStructure,
    sig: &Signature,
    layout: &Layout,
    prefix: &str,
) -> Result<Vec<AttachmentProgram>, CrosscheckError> {
    compile_description(fs, sig)?
        .iter()
        .enumerate()
        .map(|(i, fac)| {
            let p = format!("{prefix}{}", i + 1);
            Ok(emit_attachments_named(key, fac, layout, &p)?)
        })
        .collect()
}

/// Unifies two descriptions through their term encodings and attachments.
/// Returns the decoded solutions, deduplicated.
pub fn term_unify_descriptions(
    f: &FeatureStructure,
    g: &FeatureStructure,
    sig: &Signature,
    layout: &Layout,
    occurs_check: bool,
) -> Result<FsSet, CrosscheckError> {
    let pf = compile_programs("f", f, sig, layout, "p")?;
    let pg = compile_programs("g", g, sig, layout, "q")?;
    let mut out = FsSet::new();
    for a in &pf {
        for b in &pg {
            for t in unify_programs(a, b, occurs_check) {
                // cyclic solutions (occurs check off) are not structures
                if let Ok(fs) = layout.decode_term(&t) {
                    out.insert(fs);
                }
            }
        }
    }
    Ok(out)
}

/// Merges, to a fixpoint, distinct nodes carrying the same species and
/// identical arcs.
pub fn extensional_quotient(fs: &FeatureStructure, sig: &Signature) -> FeatureStructure {
    let mut cur = fs.clone();
    loop {
        let n = cur.node_count();
        let mut rep: Vec<usize> = (0..n).collect();
        let mut merged = false;
        for i in 0..n {
            if !sig.is_species(cur.node_type(i)) {
                continue;
            }
            for j in 0..i {
                if rep[j] == j && cur.node_type(j) == cur.node_type(i) && cur.arcs(j) == cur.arcs(i) {
                    rep[i] = j;
                    merged = true;
                    break;
                }
            }
        }
        if !merged {
            return cur;
        }
        let mut b = FsBuilder::new();
        for i in 0..n {
            b.node(cur.node_type(i));
        }
        for i in 0..n {
            if rep[i] != i {
                continue;
            }
            for &(f, to) in cur.arcs(i) {
                b.arc(i, f, rep[to]);
            }
        }
        cur = b.finish(rep[cur.root()]).expect("merging leaves the graph acyclic");
    }
}

fn quotient_set(s: &FsSet, sig: &Signature) -> FsSet {
    s.iter().map(|m| extensional_quotient(m, sig)).collect()
}

/// Outcome of comparing one pair.
#[derive(Debug, Clone)]
pub struct PairCheck {
    pub oracle: FsSet,
    pub decoded: FsSet,
    pub oracle_view: FsSet,
    pub term_view: FsSet,
}

impl PairCheck {
    pub fn agrees(&self) -> bool {
        self.oracle_view == self.term_view
    }
}

/// Runs both unifications on one pair and builds the comparable views.
pub fn check_pair(
    f: &FeatureStructure,
    g: &FeatureStructure,
    sig: &Signature,
    layout: &Layout,
    occurs_check: bool,
) -> Result<PairCheck, CrosscheckError> {
    let oracle = set_unify(&resolvants(f, sig), &resolvants(g, sig), sig);
    let decoded = term_unify_descriptions(f, g, sig, layout, occurs_check)?;
    let oracle_view = quotient_set(&oracle, sig);
    let mut term_view = FsSet::new();
    if let Some(k) = oracle.iter().next() {
        let skeleton = k.relabel(vec![sig.top(); k.node_count()]);
        for d in &decoded {
            match graph_unify(d, &skeleton, sig) {
                Some(filled) => term_view.extend(quotient_set(&resolvants(&filled, sig), sig)),
                // keep the raw solution so the mismatch shows up
                None => {
                    term_view.insert(d.clone());
                }
            }
        }
    } else {
        term_view = decoded.clone();
    }
    Ok(PairCheck {
        oracle,
        decoded,
        oracle_view,
        term_view,
    })
}

/// A disagreement between the two unifications.
#[derive(Debug, Clone)]
pub struct Divergence {
    pub trial: usize,
    pub signature: String,
    pub left: String,
    pub right: String,
    pub detail: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "trial {}: {}", self.trial, self.detail)?;
        writeln!(f, "  left:  {}", self.left)?;
        writeln!(f, "  right: {}", self.right)?;
        write!(f, "  signature:\n{}", self.signature)
    }
}

#[derive(Debug, Clone, Default)]
pub struct CrosscheckReport {
    pub trials: usize,
    pub satisfiable: usize,
    pub divergences: Vec<Divergence>,
}

impl CrosscheckReport {
    pub fn is_ok(&self) -> bool {
        self.divergences.is_empty()
    }
}

impl fmt::Display for CrosscheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} trials, {} with non-empty unification, {} divergences",
            self.trials,
            self.satisfiable,
            self.divergences.len()
        )
    }
}

fn resolvant_bound(fs: &FeatureStructure, sig: &Signature) -> usize {
    fs.types()
        .iter()
        .map(|&t| sig.species_of(t).len())
        .try_fold(1usize, |acc, k| acc.checked_mul(k).filter(|&p| p <= MAX_RESOLVANTS))
        .unwrap_or(usize::MAX)
}

fn bounded_fs(rng: &mut ChaCha8Rng, sig: &Signature, limits: &GenLimits) -> FeatureStructure {
    loop {
        let fs = random_fs(rng, sig, limits);
        if resolvant_bound(&fs, sig) <= MAX_RESOLVANTS {
            return fs;
        }
    }
}

/// Seeded randomized differential test: one fresh signature and pair of
/// structures per trial.
pub fn run_crosscheck(seed: u64, trials: usize, limits: &GenLimits, occurs_check: bool) -> CrosscheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CrosscheckReport {
        trials,
        ..Default::default()
    };
    for trial in 0..trials {
        let sig = random_signature(&mut rng, limits);
        let layout = build_layout(&sig).expect("generated signatures are trees");
        let f = bounded_fs(&mut rng, &sig, limits);
        let g = bounded_fs(&mut rng, &sig, limits);
        let divergence = |detail: String| Divergence {
            trial,
            signature: sig.to_dsl(),
            left: f.display(&sig).to_string(),
            right: g.display(&sig).to_string(),
            detail,
        };
        match check_pair(&f, &g, &sig, &layout, occurs_check) {
            Ok(c) => {
                if !c.oracle.is_empty() {
                    report.satisfiable += 1;
                }
                if c.oracle.is_empty() != c.decoded.is_empty() {
                    report.divergences.push(divergence(format!(
                        "oracle has {} members, term side {}",
                        c.oracle.len(),
                        c.decoded.len()
                    )));
                } else if !c.agrees() {
                    report.divergences.push(divergence(format!(
                        "oracle {} vs term side {}",
                        c.oracle_view.display(&sig),
                        c.term_view.display(&sig)
                    )));
                }
            }
            Err(e) => report.divergences.push(divergence(e.to_string())),
        }
    }
    report
}
