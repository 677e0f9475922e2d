//! Seeded generators for small tree signatures and feature structures.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::fstruct::{FeatureStructure, FsBuilder, NodeId};
use crate::signature::{parse_signature, Signature, TypeId};

/// Limits for [`random_signature`] and [`random_fs`].
#[derive(Debug, Clone, Copy)]
pub struct GenLimits {
    pub max_types: usize,
    pub max_features: usize,
    pub max_depth: usize,
    pub max_nodes: usize,
}

impl Default for GenLimits {
    fn default() -> Self {
        Self {
            max_types: 10,
            max_features: 3,
            max_depth: 3,
            max_nodes: 6,
        }
    }
}

/// A tree signature with at most `max_types` types (top included). Each
/// feature is introduced at exactly one type; subtypes of the introducer may
/// narrow the value to a subtype of the inherited one.
pub fn random_signature(rng: &mut impl Rng, limits: &GenLimits) -> Signature {
    let n = rng.gen_range(2..=limits.max_types.max(2));
    let mut parent = vec![0usize; n];
    for (i, p) in parent.iter_mut().enumerate().skip(1) {
        *p = rng.gen_range(0..i);
    }
    let name = |i: usize| if i == 0 { "top".to_string() } else { format!("t{i}") };
    let is_below = |mut a: usize, b: usize| loop {
        if a == b {
            return true;
        }
        if a == 0 {
            return false;
        }
        a = parent[a];
    };
    let below = |t: usize| -> Vec<usize> { (0..n).filter(|&u| is_below(u, t)).collect() };

    // decls[t] holds (feature, value) declared at t
    let mut decls: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let nf = rng.gen_range(0..=limits.max_features);
    for f in 0..nf {
        let intro = rng.gen_range(1..n);
        let value = rng.gen_range(0..n);
        decls[intro].push((f, value));
        // refinements, visited parents first since parent index < child index
        let mut current = vec![None; n];
        current[intro] = Some(value);
        for t in intro + 1..n {
            if !is_below(t, intro) {
                continue;
            }
            let inherited = current[parent[t]].expect("parent visited first");
            current[t] = Some(inherited);
            if rng.gen_bool(0.3) {
                let options = below(inherited);
                let v = *options.choose(rng).expect("a type is below itself");
                if v != inherited {
                    decls[t].push((f, v));
                    current[t] = Some(v);
                }
            }
        }
    }

    let mut text = String::from("top top.\n");
    for t in 1..n {
        text.push_str(&format!("{} isa {}", name(t), name(parent[t])));
        if !decls[t].is_empty() {
            let parts: Vec<String> = decls[t]
                .iter()
                .map(|(f, v)| format!("f{}: {}", f + 1, name(*v)))
                .collect();
            text.push_str(&format!(" [{}]", parts.join(", ")));
        }
        text.push_str(".\n");
    }
    parse_signature(&text).expect("generated signature text is well formed")
}

/// A random acyclic structure over `sig`. Values are usually subtypes of the
/// appropriate value, sometimes arbitrary types; arcs sometimes point back to
/// an already finished node to create reentrancy. Structures that may be
/// unsatisfiable are deliberately produced.
pub fn random_fs(rng: &mut impl Rng, sig: &Signature, limits: &GenLimits) -> FeatureStructure {
    let types: Vec<TypeId> = sig.types().collect();
    let mut b = FsBuilder::new();
    let root_type = *types.choose(rng).expect("signature has a type");
    let root = b.node(root_type);
    let mut done: Vec<NodeId> = Vec::new();
    let mut count = 1;
    fill(rng, sig, &types, &mut b, root, root_type, 0, limits, &mut count, &mut done);
    b.finish(root).expect("arcs only point to finished nodes")
}

#[allow(clippy::too_many_arguments)]
fn fill(
    rng: &mut impl Rng,
    sig: &Signature,
    types: &[TypeId],
    b: &mut FsBuilder,
    node: NodeId,
    t: TypeId,
    depth: usize,
    limits: &GenLimits,
    count: &mut usize,
    done: &mut Vec<NodeId>,
) {
    if depth < limits.max_depth {
        let feats: Vec<_> = sig
            .appropriate_features(t)
            .map(|(f, spec)| (f, spec.alternatives().to_vec()))
            .collect();
        for (f, values) in feats {
            if !rng.gen_bool(0.6) {
                continue;
            }
            if !done.is_empty() && rng.gen_bool(0.15) {
                let target = *done.choose(rng).expect("non-empty");
                b.arc(node, f, target);
                continue;
            }
            if *count >= limits.max_nodes {
                break;
            }
            let vt = if rng.gen_bool(0.15) {
                *types.choose(rng).expect("non-empty")
            } else {
                let base = *values.choose(rng).expect("approp value");
                *sig.subtypes(base).choose(rng).expect("a type is below itself")
            };
            let child = b.node(vt);
            *count += 1;
            b.arc(node, f, child);
            fill(rng, sig, types, b, child, vt, depth + 1, limits, count, done);
        }
    }
    done.push(node);
}
