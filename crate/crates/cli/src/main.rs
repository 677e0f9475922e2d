use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use tfs_core::crosscheck::{run_crosscheck, term_unify_descriptions};
use tfs_core::fstruct::{graph_unify, parse_fs, resolvants, FeatureStructure, FsSet};
use tfs_core::mi_compile::{compile_single_inheritance, expand_fs, MiCompilation};
use tfs_core::normalize::{compile_description, unextend, unfill};
use tfs_core::random::GenLimits;
use tfs_core::signature::{parse_signature, Signature};
use tfs_core::termcode::{build_layout, emit_attachments_named, quote_atom, render_terms, Layout, VarSupply};

const DEFAULT_SEED: u64 = 2024;

#[derive(Parser)]
#[command(name = "tfs-termc", version, about = "Compile typed feature structures to first-order terms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a signature.
    Check { sig: PathBuf },
    /// Compile out multiple inheritance, print type encodings and, given a
    /// lexicon of `key: description` lines, attachment programs.
    Compile {
        sig: PathBuf,
        lex: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print resolvants, their unfilled forms and the unextended set.
    Resolve { sig: PathBuf, desc: String },
    /// Print the term encoding of a description.
    Encode { sig: PathBuf, desc: String },
    /// Unify two descriptions through their encodings and attachments.
    Unify {
        sig: PathBuf,
        left: String,
        right: String,
        #[arg(long)]
        no_occurs_check: bool,
    },
    /// Randomized comparison of term unification against graph unification.
    Crosscheck {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 10)]
        max_types: usize,
        #[arg(long, default_value_t = 3)]
        max_depth: usize,
        #[arg(long)]
        no_occurs_check: bool,
    },
}

/// Failure with the exit status to report.
struct Fail(u8, String);

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail(2, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(code, msg)) => {
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Fail> {
    match &cli.command {
        Command::Check { sig } => check(sig, cli.json),
        Command::Compile { sig, lex, out } => compile(sig, lex.as_deref(), out.as_deref(), cli.json),
        Command::Resolve { sig, desc } => resolve(sig, desc, cli.json),
        Command::Encode { sig, desc } => encode(sig, desc, cli.json),
        Command::Unify {
            sig,
            left,
            right,
            no_occurs_check,
        } => unify(sig, left, right, !no_occurs_check, cli.json),
        Command::Crosscheck {
            seed,
            trials,
            max_types,
            max_depth,
            no_occurs_check,
        } => {
            let limits = GenLimits {
                max_types: *max_types,
                max_depth: *max_depth,
                ..GenLimits::default()
            };
            crosscheck(*seed, *trials, &limits, !no_occurs_check, cli.json)
        }
    }
}

fn print_json(value: &impl Serialize) -> Result<(), Fail> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn load_signature(path: &Path) -> Result<Signature, Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| Fail(2, format!("{}: {e}", path.display())))?;
    parse_signature(&text).map_err(|e| Fail(2, format!("{}: {e}", path.display())))
}

/// A validated signature together with its single-inheritance form.
struct Prepared {
    original: Signature,
    compilation: Option<MiCompilation>,
    layout: Layout,
}

impl Prepared {
    fn load(path: &Path) -> Result<Self, Fail> {
        let original = load_signature(path)?;
        let report = original.validate();
        if !report.is_ok() {
            eprint!("{report}");
            return Err(Fail(1, format!("{} is not a valid signature", path.display())));
        }
        let compilation = if original.is_tree() {
            None
        } else {
            let comp = compile_single_inheritance(&original)?;
            for w in &comp.warnings {
                eprintln!("warning: {w}");
            }
            Some(comp)
        };
        let layout = build_layout(compilation.as_ref().map_or(&original, |c| &c.compiled))?;
        Ok(Self {
            original,
            compilation,
            layout,
        })
    }

    fn sig(&self) -> &Signature {
        self.layout.signature()
    }

    fn parse(&self, desc: &str) -> Result<FeatureStructure, Fail> {
        parse_fs(desc, &self.original).map_err(|e| Fail(2, format!("`{desc}`: {e}")))
    }

    /// The description over the tree signature, one structure per choice of
    /// replacement for removed types.
    fn inputs(&self, desc: &str) -> Result<Vec<FeatureStructure>, Fail> {
        let fs = self.parse(desc)?;
        Ok(match &self.compilation {
            None => vec![fs],
            Some(c) => expand_fs(&fs, c).into_iter().collect(),
        })
    }
}

fn check(path: &Path, json: bool) -> Result<(), Fail> {
    let sig = load_signature(path)?;
    let report = sig.validate();
    if json {
        print_json(&report)?;
    } else {
        print!("{report}");
    }
    if report.is_ok() {
        Ok(())
    } else {
        Err(Fail(1, String::new()))
    }
}

#[derive(Serialize)]
struct CompileOutput {
    removed: Vec<String>,
    warnings: Vec<String>,
    encodings: Vec<(String, String)>,
    program: String,
}

fn compile(sig_path: &Path, lex: Option<&Path>, out: Option<&Path>, json: bool) -> Result<(), Fail> {
    let p = Prepared::load(sig_path)?;
    let sig = p.sig();
    let mut text = String::new();
    let removed: Vec<String> = p
        .compilation
        .iter()
        .flat_map(|c| c.removed.iter().map(|&t| p.original.type_name(t).to_string()))
        .collect();
    if !removed.is_empty() {
        text.push_str(&format!("% removed: {}\n", removed.join(", ")));
    }
    text.push_str("% signature\n");
    for line in sig.to_dsl().lines() {
        text.push_str(&format!("% {line}\n"));
    }
    let mut encodings = Vec::new();
    for t in sig.types() {
        let enc = p.layout.encode_type(t, &mut VarSupply::new());
        let shown = render_terms(&[&enc], true).remove(0);
        text.push_str(&format!("type({}, {shown}).\n", quote_atom(sig.type_name(t))));
        encodings.push((sig.type_name(t).to_string(), shown));
    }

    if let Some(lex) = lex {
        let source = std::fs::read_to_string(lex).map_err(|e| Fail(2, format!("{}: {e}", lex.display())))?;
        let entries: Vec<(String, String)> = source
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('%'))
            .map(|l| {
                l.split_once(':')
                    .map(|(k, d)| (k.trim().to_string(), d.trim().to_string()))
                    .ok_or_else(|| Fail(2, format!("{}: expected `key: description`, got `{l}`", lex.display())))
            })
            .collect::<Result<_, _>>()?;
        let mut programs = Vec::new();
        for (key, desc) in &entries {
            let mut factored = Vec::new();
            for input in p.inputs(desc)? {
                factored.extend(compile_description(&input, sig)?);
            }
            if factored.is_empty() {
                programs.push((key, desc, None));
            }
            for fac in factored {
                programs.push((key, desc, Some(fac)));
            }
        }
        let single = programs.len() == 1;
        text.push('\n');
        for (i, (key, desc, fac)) in programs.iter().enumerate() {
            let Some(fac) = fac else {
                text.push_str(&format!("% {key}: {desc}\n% unsatisfiable, no clause\n"));
                continue;
            };
            let prefix = if single { "p".to_string() } else { format!("p{}", i + 1) };
            let prog = emit_attachments_named(key, fac, &p.layout, &prefix)?
                .with_comment(format!("{key}: {desc}"));
            text.push_str(&prog.render());
        }
    }

    let warnings = p.compilation.as_ref().map(|c| c.warnings.clone()).unwrap_or_default();
    let rendered = if json {
        serde_json::to_string_pretty(&CompileOutput {
            removed,
            warnings,
            encodings,
            program: text,
        })? + "\n"
    } else {
        text
    };
    match out {
        Some(path) => std::fs::write(path, rendered).map_err(|e| Fail(2, format!("{}: {e}", path.display())))?,
        None => print!("{rendered}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct ResolveOutput {
    resolvants: Vec<String>,
    unfilled: Vec<String>,
    unextended: Vec<String>,
}

fn resolve(sig_path: &Path, desc: &str, json: bool) -> Result<(), Fail> {
    let sig = load_signature(sig_path)?;
    let fs = parse_fs(desc, &sig).map_err(|e| Fail(2, format!("`{desc}`: {e}")))?;
    let res = resolvants(&fs, &sig);
    let unfilled: FsSet = res.iter().map(|r| unfill(r, &sig)).collect();
    let unextended = unextend(&unfilled, &sig);
    if json {
        let list = |s: &FsSet| s.iter().map(|m| m.display(&sig).to_string()).collect();
        return print_json(&ResolveOutput {
            resolvants: list(&res),
            unfilled: list(&unfilled),
            unextended: list(&unextended),
        });
    }
    println!("resolvants: {}", res.display(&sig));
    println!("unfilled: {}", unfilled.display(&sig));
    println!("unextended: {}", unextended.display(&sig));
    Ok(())
}

fn encode(sig_path: &Path, desc: &str, json: bool) -> Result<(), Fail> {
    let p = Prepared::load(sig_path)?;
    let mut terms = Vec::new();
    for input in p.inputs(desc)? {
        terms.push(p.layout.encode_fs(&input, &mut VarSupply::new())?.render());
    }
    if json {
        return print_json(&terms);
    }
    for t in terms {
        println!("{t}");
    }
    Ok(())
}

fn unify(sig_path: &Path, left: &str, right: &str, occurs_check: bool, json: bool) -> Result<(), Fail> {
    let p = Prepared::load(sig_path)?;
    let mut solutions = FsSet::new();
    for f in p.inputs(left)? {
        for g in p.inputs(right)? {
            solutions.extend(term_unify_descriptions(&f, &g, p.sig(), &p.layout, occurs_check)?);
        }
    }
    let solutions = most_general(&solutions, p.sig());
    if json {
        let list: Vec<String> = solutions.iter().map(|m| m.display(p.sig()).to_string()).collect();
        return print_json(&list);
    }
    if solutions.is_empty() {
        println!("{{}}");
    }
    for m in &solutions {
        println!("{}", m.display(p.sig()));
    }
    Ok(())
}

/// Drops members that are instances of another member.
fn most_general(s: &FsSet, sig: &Signature) -> FsSet {
    s.iter()
        .filter(|m| !s.iter().any(|n| n != *m && graph_unify(n, m, sig).as_ref() == Some(*m)))
        .cloned()
        .collect()
}

#[derive(Serialize)]
struct CrosscheckOutput {
    seed: u64,
    trials: usize,
    satisfiable: usize,
    divergences: usize,
    first_divergence: Option<String>,
}

fn crosscheck(seed: u64, trials: usize, limits: &GenLimits, occurs_check: bool, json: bool) -> Result<(), Fail> {
    if limits.max_types < 2 {
        return Err(Fail(2, "--max-types must be at least 2".into()));
    }
    let report = run_crosscheck(seed, trials, limits, occurs_check);
    let first = report.divergences.first().map(|d| d.to_string());
    if json {
        print_json(&CrosscheckOutput {
            seed,
            trials: report.trials,
            satisfiable: report.satisfiable,
            divergences: report.divergences.len(),
            first_divergence: first.clone(),
        })?;
    } else {
        println!("seed {seed}: {report}");
    }
    match first {
        None => Ok(()),
        Some(d) => {
            eprintln!("{d}");
            Err(Fail(1, "term unification diverged from the graph oracle".into()))
        }
    }
}
