//! `vrkit` — command-line interface to the virtual-retract toolkit:
//! the worked appendix reproduction, free-factor witness search, coset
//! enumeration, Reidemeister–Schreier, Stallings graphs, Smith normal form,
//! homomorphism search and graph-of-groups criteria.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use vrkit_core::bassserre::{self, CriterionVerdict, GraphOfGroups};
use vrkit_core::cosets::{self, CosetTable, DEFAULT_COSET_LIMIT};
use vrkit_core::fpgroup::{parse_presentation, tietze_simplify, Presentation};
use vrkit_core::homsearch::{self, SearchBudget};
use vrkit_core::intlin::{snf, IntMatrix};
use vrkit_core::permgrp::{PermGroup, Permutation, DEFAULT_CLOSURE_CAP};
use vrkit_core::pipeline::{self, Budgets, WitnessOutcome};
use vrkit_core::rs::subgroup_presentation;
use vrkit_core::stallings::{build_subgroup_graph, hall_completion, rose_alphabet};
use vrkit_core::words::Word;

#[derive(Parser)]
#[command(name = "vrkit", version, about = "virtual retract and free-factor toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reproduce the worked graph-of-groups example end to end
    Appendix {
        /// write the machine-readable report here
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Search for a free-factor witness certificate
    Witness(WitnessArgs),
    /// Todd–Coxeter coset enumeration
    Tc {
        #[arg(long)]
        pres: PathBuf,
        /// comma-separated subgroup generator words
        #[arg(long, default_value = "")]
        subgroup: String,
        #[arg(long, default_value_t = DEFAULT_COSET_LIMIT)]
        limit: usize,
    },
    /// Reidemeister–Schreier subgroup presentation
    Rs {
        #[arg(long)]
        pres: PathBuf,
        #[arg(long)]
        subgroup: String,
        #[arg(long, default_value = "f")]
        prefix: String,
        #[arg(long, default_value_t = DEFAULT_COSET_LIMIT)]
        limit: usize,
        /// also run Tietze simplification and print the result
        #[arg(long)]
        simplify: bool,
    },
    /// Stallings graph, basis and Hall completion of a subgroup of a free group
    Stallings {
        #[arg(long)]
        rank: usize,
        /// comma-separated generator words over a, b, c, …
        #[arg(long)]
        gens: String,
    },
    /// Smith normal form of an integer matrix
    Snf {
        /// JSON file holding an array of arrays of integers
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Enumerate homomorphisms to a small permutation group
    Homsearch {
        #[arg(long)]
        pres: PathBuf,
        /// target: a name (A4, A5, S3..S5, Z2..Z12) or `perm:<degree>:<cycles;cycles>`
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 100)]
        cap: usize,
        /// require injectivity on a subgroup: "w1, w2 @ order"
        #[arg(long)]
        injective: Option<String>,
    },
    /// Graph-of-groups commands
    Gog {
        #[command(subcommand)]
        command: GogCommand,
    },
}

#[derive(Args)]
struct WitnessArgs {
    #[arg(long)]
    pres: PathBuf,
    /// comma-separated subgroup generator words
    #[arg(long)]
    subgroup: String,
    /// order of the subgroup
    #[arg(long)]
    order: u64,
    /// comma-separated target names
    #[arg(long, default_value = "A5,S5")]
    targets: String,
    #[arg(long, default_value_t = 2)]
    max_stages: usize,
    /// homomorphism search node budget per stage
    #[arg(long, default_value_t = 10_000_000)]
    budget: u64,
    /// write the certificate here
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GogCommand {
    /// Check the finite-subgroup criterion at a vertex
    Criterion {
        #[arg(long)]
        file: PathBuf,
        /// vertex name
        #[arg(long)]
        vertex: String,
    },
    /// Decide fixed-subtree finiteness for a vertex-group element
    FixedTree {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        vertex: String,
        /// element name inside the vertex group
        #[arg(long)]
        element: String,
    },
}

fn load_presentation(path: &PathBuf) -> Result<Presentation> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let (p, warnings) = parse_presentation(&text)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(p)
}

fn parse_words(p: &Presentation, list: &str) -> Result<Vec<Word>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| Ok(p.alphabet().parse_word(s)?))
        .collect()
}

fn parse_target(spec: &str) -> Result<PermGroup> {
    if let Some(rest) = spec.strip_prefix("perm:") {
        let (degree_str, cycles) = rest
            .split_once(':')
            .ok_or_else(|| anyhow!("expected perm:<degree>:<cycles;cycles>"))?;
        let degree: usize = degree_str.parse().context("bad degree")?;
        let gens: Vec<Permutation> = cycles
            .split(';')
            .map(|c| Ok(Permutation::parse_cycles(degree, c.trim())?))
            .collect::<Result<_>>()?;
        return Ok(PermGroup::from_generators("custom", degree, gens)?
            .with_elements(DEFAULT_CLOSURE_CAP)?);
    }
    PermGroup::from_name(spec)
        .ok_or_else(|| anyhow!("unknown target `{spec}`"))?
        .with_elements(DEFAULT_CLOSURE_CAP)
        .map_err(Into::into)
}

fn print_table(t: &CosetTable) {
    println!("{}", serde_json::to_string_pretty(&t.to_json_value()).unwrap());
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Appendix { json } => {
            let report = pipeline::appendix_report();
            for c in &report.checkpoints {
                let tag = if c.pass { "PASS" } else { "FAIL" };
                let kind = if c.blocking { "" } else { " (informational)" };
                println!("[{tag}] {}{kind}: {}", c.name, c.detail);
            }
            if let Some(why) = &report.aborted {
                println!("aborted: {why}");
            }
            if let Some(path) = json {
                fs::write(&path, serde_json::to_string_pretty(&report.to_json_value())?)?;
                println!("report written to {}", path.display());
            }
            Ok(report.passed())
        }
        Command::Witness(args) => {
            let p = load_presentation(&args.pres)?;
            let words = parse_words(&p, &args.subgroup)?;
            if words.is_empty() {
                bail!("--subgroup must list at least one word");
            }
            let targets: Vec<PermGroup> = args
                .targets
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(parse_target)
                .collect::<Result<_>>()?;
            let target_refs: Vec<&PermGroup> = targets.iter().collect();
            let budgets = Budgets {
                hom_nodes: args.budget,
                ..Budgets::default()
            };
            let outcome = pipeline::free_factor_witness(
                &p,
                &words,
                args.order,
                &target_refs,
                args.max_stages,
                budgets,
            )?;
            match outcome {
                WitnessOutcome::Found(cert) => {
                    println!(
                        "witness found: stage indices {:?}, total index {}",
                        cert.stages.iter().map(|s| s.index).collect::<Vec<_>>(),
                        cert.total_index
                    );
                    pipeline::verify_certificate(&p, &words, args.order, &cert, &budgets)?;
                    println!("certificate replay: ok");
                    if let Some(path) = args.json {
                        fs::write(
                            &path,
                            serde_json::to_string_pretty(&cert.to_json_value())?,
                        )?;
                        println!("certificate written to {}", path.display());
                    }
                    Ok(true)
                }
                WitnessOutcome::NotFound {
                    deepest_stage,
                    hom_nodes_used,
                } => {
                    println!(
                        "no witness found (deepest stage {deepest_stage}, {hom_nodes_used} search nodes)"
                    );
                    Ok(false)
                }
            }
        }
        Command::Tc {
            pres,
            subgroup,
            limit,
        } => {
            let p = load_presentation(&pres)?;
            let words = parse_words(&p, &subgroup)?;
            let t = cosets::enumerate(&p, &words, limit)?;
            println!("index: {}", t.index());
            print_table(&t);
            Ok(true)
        }
        Command::Rs {
            pres,
            subgroup,
            prefix,
            limit,
            simplify,
        } => {
            let p = load_presentation(&pres)?;
            let words = parse_words(&p, &subgroup)?;
            if words.is_empty() {
                bail!("--subgroup must list at least one word");
            }
            let t = cosets::enumerate(&p, &words, limit)?;
            println!("index: {}", t.index());
            let sp = subgroup_presentation(&t, &prefix)?;
            println!(
                "{} Schreier generators, {} raw relators",
                sp.raw_generator_count,
                sp.raw_relator_count()
            );
            println!(
                "{}",
                serde_json::to_string_pretty(&sp.to_json_value(p.alphabet()))?
            );
            if simplify {
                let out = tietze_simplify(&sp.presentation, vrkit_core::fpgroup::DEFAULT_TIETZE_BUDGET);
                println!("simplified: {}", out.presentation);
                println!("abelian invariants: {}", out.presentation.abelian_invariants());
            }
            Ok(true)
        }
        Command::Stallings { rank, gens } => {
            let alphabet = rose_alphabet(rank);
            let words: Vec<Word> = gens
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| Ok(alphabet.parse_word(s)?))
                .collect::<Result<_>>()?;
            let graph = build_subgroup_graph(rank, &words)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&graph.to_json_value())?
            );
            let basis = graph.basis();
            println!(
                "basis: {}",
                basis
                    .iter()
                    .map(|w| alphabet.display_word(w))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            let hc = hall_completion(&graph);
            println!("cover index: {}", hc.cover.cover_index()?);
            println!(
                "K basis: {}",
                hc.k_basis
                    .iter()
                    .map(|w| alphabet.display_word(w))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            println!(
                "complement (killed by the retraction): {}",
                hc.complement_basis
                    .iter()
                    .map(|w| alphabet.display_word(w))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            Ok(true)
        }
        Command::Snf { matrix } => {
            let text = fs::read_to_string(&matrix)
                .with_context(|| format!("reading {}", matrix.display()))?;
            let v: serde_json::Value = serde_json::from_str(&text)?;
            let a = IntMatrix::from_json_value(&v).map_err(|e| anyhow!(e))?;
            let s = snf(&a);
            println!("D = {}", serde_json::to_string(&s.d.to_json_value())?);
            println!("U = {}", serde_json::to_string(&s.u.to_json_value())?);
            println!("V = {}", serde_json::to_string(&s.v.to_json_value())?);
            Ok(true)
        }
        Command::Homsearch {
            pres,
            target,
            cap,
            injective,
        } => {
            let p = load_presentation(&pres)?;
            let target = parse_target(&target)?;
            match injective {
                None => {
                    let (homs, truncated) = homsearch::enumerate_homs(&p, &target, &[], cap)?;
                    println!("{} homomorphisms{}", homs.len(), if truncated { " (truncated)" } else { "" });
                    for h in &homs {
                        println!("{}", serde_json::to_string(&h.to_json_value())?);
                    }
                    Ok(true)
                }
                Some(spec) => {
                    let (words_str, order_str) = spec
                        .rsplit_once('@')
                        .ok_or_else(|| anyhow!("expected \"w1, w2 @ order\""))?;
                    let order: u64 = order_str.trim().parse().context("bad order")?;
                    let words = parse_words(&p, words_str)?;
                    let outcome = homsearch::find_injective_on(
                        &p,
                        &[(words, order)],
                        &[&target],
                        SearchBudget::default(),
                        DEFAULT_CLOSURE_CAP,
                    )?;
                    match outcome {
                        homsearch::FindOutcome::Found { hom, nodes } => {
                            println!(
                                "found after {nodes} nodes: {}",
                                serde_json::to_string(&hom.to_json_value())?
                            );
                            Ok(true)
                        }
                        homsearch::FindOutcome::NotFound { nodes, .. } => {
                            println!("not found ({nodes} nodes searched)");
                            Ok(false)
                        }
                    }
                }
            }
        }
        Command::Gog { command } => match command {
            GogCommand::Criterion { file, vertex } => {
                let text = fs::read_to_string(&file)
                    .with_context(|| format!("reading {}", file.display()))?;
                let v: serde_json::Value = serde_json::from_str(&text)?;
                let g = GraphOfGroups::from_json_value(&v)?;
                let vi = g
                    .vertex_names
                    .iter()
                    .position(|n| *n == vertex)
                    .ok_or_else(|| anyhow!("unknown vertex `{vertex}`"))?;
                match bassserre::criterion_finite_subgroup(&g, vi)? {
                    CriterionVerdict::Satisfied => {
                        println!("satisfied: every nontrivial element of {vertex} has a finite fixed subtree");
                        Ok(true)
                    }
                    CriterionVerdict::Violator { element } => {
                        println!(
                            "violated by element {} of {vertex}: infinite fixed subtree",
                            g.vertex_groups[vi].name(element)
                        );
                        Ok(false)
                    }
                }
            }
            GogCommand::FixedTree {
                file,
                vertex,
                element,
            } => {
                let text = fs::read_to_string(&file)
                    .with_context(|| format!("reading {}", file.display()))?;
                let v: serde_json::Value = serde_json::from_str(&text)?;
                let g = GraphOfGroups::from_json_value(&v)?;
                let vi = g
                    .vertex_names
                    .iter()
                    .position(|n| *n == vertex)
                    .ok_or_else(|| anyhow!("unknown vertex `{vertex}`"))?;
                let table = &g.vertex_groups[vi];
                let f = table
                    .names()
                    .iter()
                    .position(|n| *n == element)
                    .ok_or_else(|| anyhow!("unknown element `{element}`"))?;
                match bassserre::fixed_tree_infinite(&g, vi, f)? {
                    vrkit_core::FixedTreeVerdict::Infinite { witness } => {
                        println!("infinite (pumpable cycle of {} steps)", witness.len());
                        Ok(true)
                    }
                    vrkit_core::FixedTreeVerdict::Finite {
                        states_explored,
                        diameter,
                    } => {
                        println!("finite ({states_explored} states, diameter ≤ {diameter})");
                        Ok(true)
                    }
                }
            }
        },
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
