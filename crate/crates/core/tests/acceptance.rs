//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tfs_core::crosscheck::run_crosscheck;
use tfs_core::fstruct::{resolvants, set_unify, well_typed_check, FsSet};
use tfs_core::mi_compile::{compile_single_inheritance, expand_fs};
use tfs_core::normalize::{
    compile_description, factor_disjunction, normalize_pipeline, unextend, unfill,
};
use tfs_core::random::{random_fs, random_signature, GenLimits};
use tfs_core::signature::Signature;
use tfs_core::termcode::{build_layout, emit_attachments, parse_term, term_unify, Term, VarSupply};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn term(text: &str) -> Term {
    parse_term(text, &mut VarSupply::new()).unwrap().0
}

fn show(s: &FsSet, sig: &Signature) -> String {
    s.display(sig).to_string()
}

fn encoding_table() -> Outcome {
    let sig = fixture("fig1.sig");
    let layout = build_layout(&sig).map_err(|e| e.to_string())?;
    let table = [
        ("a", "a(_)"),
        ("a1", "a(a1(_))"),
        ("a2", "a(a2(_))"),
        ("a3", "a(a2(a3))"),
        ("a4", "a(a2(a4(_)))"),
        ("b", "b(_,_)"),
        ("e", "b(e(_,_),_)"),
    ];
    for (ty, expected) in table {
        let got = layout.encode_type(sig.type_id(ty).unwrap(), &mut VarSupply::new());
        ensure(got.is_variant(&term(expected)), || format!("{ty}: got {got}, expected {expected}"))?;
    }
    Ok(format!("{} encodings match", table.len()))
}

fn ill_typing() -> Outcome {
    let sig = fixture("fig1.sig");
    let layout = build_layout(&sig).map_err(|e| e.to_string())?;
    let mut vs = VarSupply::new();
    let bfa = layout.encode_fs(&fs("b(f: a)", &sig), &mut vs).map_err(|e| e.to_string())?;
    let d = layout.encode_type(sig.type_id("d").unwrap(), &mut vs);
    let s = term_unify(&bfa, &d).ok_or("encodings do not unify")?;
    let joined = s.resolve(&bfa);
    ensure(joined.is_variant(&term("b(d, a(_))")), || format!("unifier {joined}"))?;
    let decoded = layout.decode_term(&joined).map_err(|e| e.to_string())?;
    let shown = decoded.display(&sig).to_string();
    ensure(shown == "d(f: a)", || format!("decoded {shown}"))?;
    ensure(!well_typed_check(&decoded, &sig), || "d(f: a) reported well-typed".into())?;
    Ok(format!("{joined} decodes to {shown}, not well-typed"))
}

fn static_typing() -> Outcome {
    let sig = fixture("fig1.sig");
    let x = fs("b(f: a)", &sig);
    let normal = normalize_pipeline(&x, &sig);
    let target = set(&["d(f: a1)", "e(f: a)"], &sig);
    let got = brute_set_extensions(&normal, &sig);
    ensure(got == brute_set_extensions(&target, &sig), || {
        format!("normal form {} has different extensions", show(&normal, &sig))
    })?;
    ensure(got == brute_resolvants(&x, &sig), || "extensions differ from resolvants".into())?;
    Ok(format!("{} covers the same {} species-labelled structures", show(&normal, &sig), got.len()))
}

fn mi_compilation() -> Outcome {
    let sig = fixture("list.sig");
    let comp = compile_single_inheritance(&sig).map_err(|e| e.to_string())?;
    let c = &comp.compiled;
    let removed: Vec<&str> = comp.removed.iter().map(|&t| sig.type_name(t)).collect();
    ensure(removed == ["list_sign", "list_quant"], || format!("removed {removed:?}"))?;
    let expected_parent = [
        ("sign", "top"),
        ("quant", "top"),
        ("list", "top"),
        ("ne_list", "list"),
        ("e_list", "list"),
        ("ne_list_sign", "ne_list"),
        ("ne_list_quant", "ne_list"),
    ];
    ensure(c.type_count() == expected_parent.len() + 1, || format!("{} types", c.type_count()))?;
    for (child, parent) in expected_parent {
        let t = c.type_id(child).map_err(|e| e.to_string())?;
        let ps: Vec<&str> = c.parents(t).iter().map(|&p| c.type_name(p)).collect();
        ensure(ps == [parent], || format!("{child} under {ps:?}"))?;
    }
    let images: BTreeSet<&str> = comp
        .images(sig.type_id("list_sign").unwrap())
        .iter()
        .map(|&t| c.type_name(t))
        .collect();
    ensure(images == BTreeSet::from(["ne_list_sign", "e_list"]), || format!("replacement {images:?}"))?;
    let layout = build_layout(c).map_err(|e| e.to_string())?;
    let mut vs = VarSupply::new();
    let a = layout.encode_type(c.type_id("ne_list_sign").unwrap(), &mut vs);
    let b = layout.encode_type(c.type_id("ne_list_quant").unwrap(), &mut vs);
    ensure(term_unify(&a, &b).is_none(), || format!("{a} unifies with {b}"))?;
    Ok(format!("tree of {} types; {a} and {b} clash", c.type_count()))
}

fn resolution_pipeline() -> Outcome {
    let sig = fixture("bool.sig");
    let x = fs("a(f: bool, g: bool)", &sig);
    let res = resolvants(&x, &sig);
    let expected = set(&["a'(f: -, g: +)", "a''(f: +, g: -)"], &sig);
    ensure(res == expected, || format!("resolvants {}", show(&res, &sig)))?;
    let normal = normalize_pipeline(&x, &sig);
    ensure(show(&normal, &sig) == "{ a }", || format!("normal form {}", show(&normal, &sig)))?;
    let clash = resolvants(&fs("a(f: #1 bool, g: #1)", &sig), &sig);
    ensure(clash.is_empty(), || format!("shared value resolves to {}", show(&clash, &sig)))?;
    Ok(format!("{} -> {}; shared values -> {{}}", show(&res, &sig), show(&normal, &sig)))
}

fn hpsg_unextension() -> Outcome {
    let sig = fixture("hpsg.sig");
    let x = fs("head-comp-struc(head-dtr: sign, comp-dtrs: elist)", &sig);
    let res = resolvants(&x, &sig);
    ensure(res.len() == 2, || format!("{} resolvants", res.len()))?;
    let u = unextend(&res, &sig);
    let shown = show(&u, &sig);
    ensure(shown == "{ head-comp-struc(head-dtr: sign, comp-dtrs: elist) }", || shown.clone())?;
    Ok(format!("2 resolvants -> {shown}"))
}

fn attachment_emission() -> Outcome {
    let sig = fixture("fig1.sig");
    let layout = build_layout(&sig).map_err(|e| e.to_string())?;
    let s = set(&["d(f: a1)", "e(f: a)"], &sig);
    let fac = factor_disjunction(&s, &sig).map_err(|e| e.to_string())?;
    let prog = emit_attachments("w", &fac, &layout)
        .map_err(|e| e.to_string())?
        .with_comment(format!("w: {}", show(&s, &sig)));
    ensure(prog.head().is_variant(&term("lex(w, b(X, a(Y)))")), || format!("head {}", prog.head()))?;
    let golden = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/attachments_w.pl"))
        .map_err(|e| e.to_string())?;
    let text = prog.render();
    ensure(text == golden, || format!("emitted:\n{text}expected:\n{golden}"))?;
    Ok("program matches golden file".into())
}

fn closure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let limits = GenLimits::default();
    let mut members = 0;
    for pair in 0..500 {
        let sig = random_signature(&mut rng, &limits);
        let f = random_fs(&mut rng, &sig, &limits);
        let g = random_fs(&mut rng, &sig, &limits);
        for m in &set_unify(&resolvants(&f, &sig), &resolvants(&g, &sig), &sig) {
            members += 1;
            ensure(well_typed_check(m, &sig) && m.is_species_labelled(&sig), || {
                format!("pair {pair}: {} not closed", m.display(&sig))
            })?;
        }
    }
    Ok(format!("500 pairs, {members} unified members, 0 violations"))
}

fn oracle_equivalence() -> Outcome {
    let report = run_crosscheck(2024, 1000, &GenLimits::default(), true);
    if let Some(d) = report.divergences.first() {
        return Err(format!("{report}\n{d}"));
    }
    let mut growth = Vec::new();
    for (file, desc) in corpus() {
        let sig = fixture(&file);
        let (sig, inputs) = if sig.is_tree() {
            let x = fs(&desc, &sig);
            (sig, vec![x])
        } else {
            let comp = compile_single_inheritance(&sig).map_err(|e| e.to_string())?;
            let x = fs(&desc, &sig);
            let expanded: Vec<_> = expand_fs(&x, &comp).into_iter().collect();
            (comp.compiled, expanded)
        };
        let (mut res, mut normal, mut clauses, mut facts) = (0, 0, 0, 0);
        let layout = build_layout(&sig).map_err(|e| e.to_string())?;
        for x in &inputs {
            res += resolvants(x, &sig).len();
            normal += normalize_pipeline(x, &sig).len();
            for fac in compile_description(x, &sig).map_err(|e| e.to_string())? {
                let p = emit_attachments("k", &fac, &layout).map_err(|e| e.to_string())?;
                clauses += 1;
                facts += p.predicates.iter().map(|q| q.facts.len()).sum::<usize>();
            }
        }
        growth.push(format!(
            "    {file:<9} {desc:<72} inputs {} resolvants {res:>3} normal {normal:>2} clauses {clauses} facts {facts}",
            inputs.len()
        ));
    }
    Ok(format!("{report}\n  disjunct growth on fixtures:\n{}", growth.join("\n")))
}

fn round_trips() -> Outcome {
    let mut decoded = 0;
    let mut unextended = 0;
    for (file, desc) in corpus() {
        let orig = fixture(&file);
        let x = fs(&desc, &orig);
        // unfill idempotence on the input and its resolvants
        for m in resolvants(&x, &orig).iter().chain([&x]) {
            let u = unfill(m, &orig);
            ensure(unfill(&u, &orig) == u, || format!("{file}: unfill of {} not idempotent", m.display(&orig)))?;
        }
        // extensions of an unextension give the set back
        let ext: Vec<_> = brute_extensions(&x, &orig).into_iter().collect();
        if !ext.is_empty() && ext.len() <= 16 {
            let subsets: Vec<FsSet> = if ext.len() <= 8 {
                (1u32..1 << ext.len())
                    .map(|mask| (0..ext.len()).filter(|i| mask & (1 << i) != 0).map(|i| ext[i].clone()).collect())
                    .collect()
            } else {
                (1..=ext.len())
                    .flat_map(|k| [ext[..k].iter().cloned().collect(), ext[ext.len() - k..].iter().cloned().collect()])
                    .collect()
            };
            for s in subsets {
                ensure(brute_set_extensions(&unextend(&s, &orig), &orig) == s, || {
                    format!("{file}: {desc}: unextension of {} lost members", show(&s, &orig))
                })?;
                unextended += 1;
            }
        }
        // decode . encode, over the compiled signature when needed
        let (sig, inputs): (Signature, Vec<_>) = if orig.is_tree() {
            (orig.clone(), vec![x.clone()])
        } else {
            let comp = compile_single_inheritance(&orig).map_err(|e| e.to_string())?;
            (comp.compiled.clone(), expand_fs(&x, &comp).into_iter().collect())
        };
        let layout = build_layout(&sig).map_err(|e| e.to_string())?;
        for input in &inputs {
            let mut cases: Vec<_> = normalize_pipeline(input, &sig).into_iter().collect();
            cases.push(input.clone());
            for m in cases {
                let t = layout.encode_fs(&m, &mut VarSupply::new()).map_err(|e| e.to_string())?;
                let back = layout.decode_term(&t).map_err(|e| e.to_string())?;
                ensure(back == m, || format!("{file}: {} -> {t} -> {}", m.display(&sig), back.display(&sig)))?;
                decoded += 1;
            }
        }
    }
    Ok(format!("{decoded} encode/decode round trips, {unextended} unextension round trips"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("encoding table", encoding_table),
        ("ill-typed term unification", ill_typing),
        ("static typing expansion", static_typing),
        ("multiple inheritance compilation", mi_compilation),
        ("resolution pipeline", resolution_pipeline),
        ("hpsg unextension", hpsg_unextension),
        ("attachment emission", attachment_emission),
        ("closure under unification", closure),
        ("oracle equivalence", oracle_equivalence),
        ("round trips", round_trips),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
