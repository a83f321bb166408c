//! Orchestration of the free-factor witness search
//! (homomorphism → preimage coset table → Reidemeister–Schreier → Tietze →
//! free-product split → order certification) and the end-to-end reproduction
//! of the worked A4/A4/S3 graph-of-groups example.

use std::collections::HashMap;

use thiserror::Error;

use crate::bassserre::{
    self, fp_closure, FiniteGroupTable, FpAtom, FpWord, GogEdge, GogError, GraphOfGroups,
    VertexSpec,
};
use crate::cosets::{self, CosetError, CosetTable};
use crate::fpgroup::{
    split_free_product, tietze_simplify, FpError, FreeSplit, Presentation, TietzeTrail,
};
use crate::homsearch::{self, HomSearchError, SearchBudget};
use crate::permgrp::{
    closure, coset_action, validate_hom, GroupHom, PermError, PermGroup, Permutation,
};
use crate::rs::{self, RsError};
use crate::words::{Word, WordError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Fp(#[from] FpError),
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error(transparent)]
    Coset(#[from] CosetError),
    #[error(transparent)]
    Rs(#[from] RsError),
    #[error(transparent)]
    Hom(#[from] HomSearchError),
    #[error(transparent)]
    Gog(#[from] GogError),
    #[error("expected subgroup order must be at least 2")]
    TrivialSubgroup,
    #[error("certificate replay failed at {stage}: {reason}")]
    CertificateMismatch { stage: String, reason: String },
}

/// Resource limits for one witness search.
#[derive(Debug, Clone, Copy)]
pub struct Budgets {
    /// node budget per homomorphism search
    pub hom_nodes: u64,
    /// candidate homomorphisms tried per stage before giving up the block
    pub hom_candidates: usize,
    /// Todd–Coxeter coset limit for block-order checks
    pub coset_limit: usize,
    /// Tietze move budget per stage
    pub tietze_moves: u64,
    /// permutation closure cap
    pub closure_cap: usize,
    /// free-product closure cap for order certification
    pub order_cap: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            hom_nodes: 10_000_000,
            hom_candidates: 64,
            coset_limit: 100_000,
            tietze_moves: crate::fpgroup::DEFAULT_TIETZE_BUDGET,
            closure_cap: crate::permgrp::DEFAULT_CLOSURE_CAP,
            order_cap: bassserre::DEFAULT_ORDER_CAP,
        }
    }
}

/// One executed stage of the witness pipeline.
#[derive(Debug, Clone)]
pub struct StageRecord {
    /// homomorphism on the stage's input presentation
    pub hom: GroupHom,
    /// coset table of the preimage of the image of F
    pub table: CosetTable,
    pub index: usize,
    pub raw_generator_count: usize,
    pub raw_relator_count: usize,
    /// presentation of the preimage after Tietze simplification
    pub simplified: Presentation,
    pub trail: TietzeTrail,
    /// tracked F generators, over the stage input's alphabet
    pub tracked_in: Vec<Word>,
    /// tracked F generators, over `simplified`'s alphabet
    pub tracked_out: Vec<Word>,
}

/// Certificate that F is a free factor of a finite-index subgroup: a chain
/// of verified stages ending in a presentation that splits as a free product
/// with the tracked F generators conjugate into a finite block of the right
/// order.
#[derive(Debug, Clone)]
pub struct FreeFactorCertificate {
    pub stages: Vec<StageRecord>,
    pub final_presentation: Presentation,
    pub final_split: FreeSplit,
    /// tracked F generators over the final alphabet
    pub tracked_f_images: Vec<Word>,
    /// index into `final_split.blocks`
    pub f_block: usize,
    pub f_order: u64,
    /// product of the stage indices
    pub total_index: usize,
}

impl FreeFactorCertificate {
    pub fn to_json_value(&self) -> serde_json::Value {
        let block_sizes: Vec<usize> = self
            .final_split
            .blocks
            .iter()
            .map(|b| b.generators.len())
            .collect();
        serde_json::json!({
            "schema_version": 1,
            "total_index": self.total_index,
            "f_order": self.f_order,
            "f_block": self.f_block,
            "stages": self.stages.iter().map(|s| serde_json::json!({
                "hom": s.hom.to_json_value(),
                "index": s.index,
                "raw_generators": s.raw_generator_count,
                "raw_relators": s.raw_relator_count,
                "simplified": s.simplified.to_json_value(),
            })).collect::<Vec<_>>(),
            "final_presentation": self.final_presentation.to_json_value(),
            "tracked": self.tracked_f_images.iter()
                .map(|w| self.final_presentation.alphabet().display_word(w))
                .collect::<Vec<_>>(),
            "final_split": {
                "block_generator_counts": block_sizes,
                "free_generators": self.final_split.free_generators.len(),
            },
        })
    }
}

#[derive(Debug)]
pub enum WitnessOutcome {
    Found(Box<FreeFactorCertificate>),
    NotFound {
        /// deepest stage at which a candidate homomorphism was still tried
        deepest_stage: usize,
        hom_nodes_used: u64,
    },
}

/// Data assembled by a successful terminal check.
struct TerminalData {
    split: FreeSplit,
    f_block: usize,
}

/// Check whether `p` already certifies F: it splits as a free product, the
/// tracked generators generate a subgroup of order `f_order` conjugate into
/// a single finite block, and that block presents a group of order exactly
/// `f_order`.
fn terminal_check(
    p: &Presentation,
    tracked: &[Word],
    f_order: u64,
    budgets: &Budgets,
) -> Option<TerminalData> {
    let split = split_free_product(p);
    if split.blocks.is_empty() {
        return None;
    }
    // finite tables for the blocks that the tracked words touch
    let mut touched: Vec<usize> = Vec::new();
    let block_of_gen: HashMap<usize, usize> = split
        .blocks
        .iter()
        .enumerate()
        .flat_map(|(bi, b)| b.generators.iter().map(move |&g| (g, bi)))
        .collect();
    for w in tracked {
        for g in w.support() {
            if let Some(&b) = block_of_gen.get(&g) {
                if !touched.contains(&b) {
                    touched.push(b);
                }
            }
        }
    }
    touched.sort_unstable();
    // table per touched block, via regular representation
    let mut tables: Vec<FiniteGroupTable> = Vec::new();
    let mut table_of_block: HashMap<usize, usize> = HashMap::new();
    let mut gen_element: HashMap<usize, (usize, usize)> = HashMap::new(); // ambient gen -> (table idx, element)
    for &bi in &touched {
        let block = &split.blocks[bi];
        let reg = cosets::enumerate(&block.presentation, &[], budgets.coset_limit).ok()?;
        let rep = reg.perm_rep();
        let elements = closure(&rep, budgets.closure_cap).ok()?;
        let table = FiniteGroupTable::from_permutations(&elements).ok()?;
        let ti = tables.len();
        for (local, &ambient_gen) in block.generators.iter().enumerate() {
            let pos = elements.iter().position(|e| *e == rep[local])?;
            gen_element.insert(ambient_gen, (ti, pos));
        }
        table_of_block.insert(bi, ti);
        tables.push(table);
    }
    // tracked words as free-product words
    let mut fp_tracked = Vec::with_capacity(tracked.len());
    for w in tracked {
        let mut atoms = Vec::new();
        for (g, positive) in w.letters() {
            if let Some(&(ti, elt)) = gen_element.get(&g) {
                let elt = if positive {
                    elt
                } else {
                    tables[ti].inv(elt)
                };
                atoms.push(FpAtom::Block {
                    block: ti,
                    element: elt,
                });
            } else if block_of_gen.contains_key(&g) {
                return None; // touches a block we could not materialize
            } else {
                atoms.push(FpAtom::Free {
                    gen: g,
                    exp: if positive { 1 } else { -1 },
                });
            }
        }
        fp_tracked.push(FpWord::from_atoms(&tables, atoms).ok()?);
    }
    let elements = fp_closure(&tables, &fp_tracked, budgets.order_cap)?;
    if elements.len() as u64 != f_order {
        return None;
    }
    let (table_idx, _conjugator) = bassserre::locate_finite_factor(&tables, &elements)?;
    // translate the table index back to the split block index
    let f_block = *table_of_block
        .iter()
        .find(|&(_, &ti)| ti == table_idx)
        .map(|(bi, _)| bi)?;
    // the block's presented order must equal |F|
    if tables[table_idx].order() as u64 != f_order {
        return None;
    }
    Some(TerminalData { split, f_block })
}

/// Retract a word onto a block: delete every letter outside the block's
/// generators and renumber into block-local indices.
fn retract_to_block(w: &Word, block_gens: &[usize]) -> Word {
    let remap: HashMap<usize, usize> = block_gens
        .iter()
        .enumerate()
        .map(|(new, &old)| (old, new))
        .collect();
    let raw: Vec<(usize, i64)> = w
        .syllables()
        .iter()
        .filter_map(|&(g, e)| remap.get(&g).map(|&n| (n, e)))
        .collect();
    Word::reduce(&raw).expect("retracted word")
}

struct SearchState<'a> {
    targets: &'a [&'a PermGroup],
    max_stages: usize,
    budgets: Budgets,
    f_order: u64,
    deepest_stage: usize,
    hom_nodes_used: u64,
}

impl<'a> SearchState<'a> {
    /// Candidate homomorphisms for a stage: for each relator block of `p`
    /// (in order) and each target (in order), the homs of the block
    /// sub-presentation — extended by the identity elsewhere — whose image
    /// of the retracted tracked words has order `f_order` and whose full
    /// image is strictly larger. Search order makes the outcome
    /// deterministic. At most `cap` candidates per block and target.
    fn stage_candidates(
        &mut self,
        p: &Presentation,
        tracked: &[Word],
        cap: usize,
    ) -> Result<Vec<GroupHom>, PipelineError> {
        let split = split_free_product(p);
        let mut out = Vec::new();
        for block in &split.blocks {
            let tracked_block: Vec<Word> = tracked
                .iter()
                .map(|w| retract_to_block(w, &block.generators))
                .collect();
            if tracked_block.iter().all(Word::is_identity) {
                continue;
            }
            for target in self.targets {
                let mut found: Vec<Vec<Permutation>> = Vec::new();
                let budget = SearchBudget {
                    nodes: self.budgets.hom_nodes,
                };
                let closure_cap = self.budgets.closure_cap;
                let f_order = self.f_order;
                let outcome = homsearch::find_hom(
                    &block.presentation,
                    &[target],
                    budget,
                    |cand| {
                        let f_images: Vec<Permutation> =
                            tracked_block.iter().map(|w| cand.apply(w)).collect();
                        let im_f = match closure(&f_images, closure_cap) {
                            Ok(c) => c,
                            Err(_) => return false,
                        };
                        if im_f.len() as u64 != f_order {
                            return false;
                        }
                        let im = match closure(&cand.images, closure_cap) {
                            Ok(c) => c,
                            Err(_) => return false,
                        };
                        if im.len() > im_f.len() {
                            found.push(cand.images.clone());
                        }
                        found.len() >= cap
                    },
                )?;
                match outcome {
                    homsearch::FindOutcome::Found { nodes, .. }
                    | homsearch::FindOutcome::NotFound { nodes, .. } => {
                        self.hom_nodes_used += nodes;
                    }
                }
                // extend each block hom to the whole presentation
                for images in found {
                    let degree = target.degree;
                    let id = Permutation::identity(degree);
                    let mut full = vec![id; p.generator_count()];
                    for (local, &ambient) in block.generators.iter().enumerate() {
                        full[ambient] = images[local].clone();
                    }
                    out.push(validate_hom(p, &full)?);
                }
            }
        }
        Ok(out)
    }

    fn build_stage(
        &self,
        p: &Presentation,
        hom: GroupHom,
        tracked: &[Word],
        depth: usize,
    ) -> Result<Option<StageRecord>, PipelineError> {
        let im = closure(&hom.images, self.budgets.closure_cap)?;
        let f_images: Vec<Permutation> = tracked.iter().map(|w| hom.apply(w)).collect();
        let im_f = closure(&f_images, self.budgets.closure_cap)?;
        let action = coset_action(&im, &im_f, &hom.images)?;
        if action.num_cosets <= 1 {
            return Ok(None);
        }
        let table = CosetTable::from_action(p, tracked, &action.gen_images)?;
        let prefix = ["f", "h", "k", "m", "q", "r"][depth % 6];
        let sp = rs::subgroup_presentation(&table, prefix)?;
        let mut rewritten = Vec::with_capacity(tracked.len());
        for w in tracked {
            rewritten.push(sp.rewrite(&table, w)?);
        }
        let out = tietze_simplify(&sp.presentation, self.budgets.tietze_moves);
        let mut tracked_out = Vec::with_capacity(rewritten.len());
        for w in &rewritten {
            tracked_out.push(out.trail.apply(w)?);
        }
        Ok(Some(StageRecord {
            hom,
            index: table.index(),
            raw_generator_count: sp.raw_generator_count,
            raw_relator_count: sp.raw_relator_count(),
            table,
            simplified: out.presentation,
            trail: out.trail,
            tracked_in: tracked.to_vec(),
            tracked_out,
        }))
    }

    fn search(
        &mut self,
        p: &Presentation,
        tracked: &[Word],
        depth: usize,
    ) -> Result<Option<(Vec<StageRecord>, TerminalData, Presentation, Vec<Word>)>, PipelineError>
    {
        if let Some(term) = terminal_check(p, tracked, self.f_order, &self.budgets) {
            return Ok(Some((Vec::new(), term, p.clone(), tracked.to_vec())));
        }
        if depth == self.max_stages {
            return Ok(None);
        }
        self.deepest_stage = self.deepest_stage.max(depth + 1);
        // lazy batching: the first candidate almost always certifies, so try
        // it before paying for the full candidate collection
        let mut tried = 0usize;
        for cap in [1, self.budgets.hom_candidates] {
            if cap <= tried {
                continue;
            }
            let candidates = self.stage_candidates(p, tracked, cap)?;
            for hom in candidates.into_iter().skip(tried) {
                let Some(stage) = self.build_stage(p, hom, tracked, depth)? else {
                    continue;
                };
                if let Some((mut rest, term, fp, ft)) = self.search(
                    &stage.simplified.clone(),
                    &stage.tracked_out.clone(),
                    depth + 1,
                )? {
                    rest.insert(0, stage);
                    return Ok(Some((rest, term, fp, ft)));
                }
            }
            tried = cap;
        }
        Ok(None)
    }
}

/// Search for a free-factor witness for the subgroup generated by `f_words`
/// (of known order `f_order`) in the group presented by `p`.
pub fn free_factor_witness(
    p: &Presentation,
    f_words: &[Word],
    f_order: u64,
    targets: &[&PermGroup],
    max_stages: usize,
    budgets: Budgets,
) -> Result<WitnessOutcome, PipelineError> {
    if f_order < 2 {
        return Err(PipelineError::TrivialSubgroup);
    }
    let mut state = SearchState {
        targets,
        max_stages,
        budgets,
        f_order,
        deepest_stage: 0,
        hom_nodes_used: 0,
    };
    match state.search(p, f_words, 0)? {
        Some((stages, term, final_presentation, tracked)) => {
            let total_index = stages.iter().map(|s| s.index).product();
            Ok(WitnessOutcome::Found(Box::new(FreeFactorCertificate {
                stages,
                final_presentation,
                final_split: term.split,
                tracked_f_images: tracked,
                f_block: term.f_block,
                f_order,
                total_index,
            })))
        }
        None => Ok(WitnessOutcome::NotFound {
            deepest_stage: state.deepest_stage,
            hom_nodes_used: state.hom_nodes_used,
        }),
    }
}

/// Independent replay of a certificate: every stage is re-derived from its
/// inputs by the deterministic transformations (no search) and compared
/// against the recorded data; the terminal split and order checks are
/// re-established from scratch.
pub fn verify_certificate(
    p: &Presentation,
    f_words: &[Word],
    f_order: u64,
    cert: &FreeFactorCertificate,
    budgets: &Budgets,
) -> Result<(), PipelineError> {
    let mismatch = |stage: &str, reason: &str| PipelineError::CertificateMismatch {
        stage: stage.to_string(),
        reason: reason.to_string(),
    };
    let mut current = p.clone();
    let mut tracked = f_words.to_vec();
    for (i, stage) in cert.stages.iter().enumerate() {
        let name = format!("stage {i}");
        if stage.tracked_in != tracked {
            return Err(mismatch(&name, "tracked words do not chain"));
        }
        let hom = validate_hom(&current, &stage.hom.images)
            .map_err(|e| mismatch(&name, &format!("hom does not validate: {e}")))?;
        let im = closure(&hom.images, budgets.closure_cap)?;
        let f_images: Vec<Permutation> = tracked.iter().map(|w| hom.apply(w)).collect();
        let im_f = closure(&f_images, budgets.closure_cap)?;
        if im_f.len() as u64 != f_order {
            return Err(mismatch(&name, "hom is not injective on F"));
        }
        let action = coset_action(&im, &im_f, &hom.images)?;
        let table = CosetTable::from_action(&current, &tracked, &action.gen_images)?;
        table.validate()?;
        if table.rows() != stage.table.rows() {
            return Err(mismatch(&name, "coset table differs"));
        }
        if table.index() != stage.index {
            return Err(mismatch(&name, "index differs"));
        }
        let prefix = ["f", "h", "k", "m", "q", "r"][i % 6];
        let sp = rs::subgroup_presentation(&table, prefix)?;
        if sp.raw_generator_count != stage.raw_generator_count
            || sp.raw_relator_count() != stage.raw_relator_count
        {
            return Err(mismatch(&name, "raw Reidemeister–Schreier counts differ"));
        }
        let expected_raw_gens = stage.index * current.generator_count() - (stage.index - 1);
        if stage.raw_generator_count != expected_raw_gens {
            return Err(mismatch(&name, "raw generator count violates the formula"));
        }
        if stage.raw_relator_count != stage.index * current.relator_count() {
            return Err(mismatch(&name, "raw relator count violates the formula"));
        }
        if sp.presentation.abelian_invariants() != stage.simplified.abelian_invariants() {
            return Err(mismatch(&name, "Tietze changed the abelian invariants"));
        }
        if !stage
            .trail
            .check_abelianized(&sp.presentation)
            .map_err(|e| mismatch(&name, &e.to_string()))?
        {
            return Err(mismatch(&name, "trail fails the abelianized soundness check"));
        }
        let mut tracked_next = Vec::with_capacity(tracked.len());
        for w in &tracked {
            let r = sp.rewrite(&table, w)?;
            tracked_next.push(stage.trail.apply(&r)?);
        }
        if tracked_next != stage.tracked_out {
            return Err(mismatch(&name, "tracked words differ after rewriting"));
        }
        current = stage.simplified.clone();
        tracked = tracked_next;
    }
    if current != cert.final_presentation {
        return Err(mismatch("terminal", "final presentation differs"));
    }
    if tracked != cert.tracked_f_images {
        return Err(mismatch("terminal", "final tracked words differ"));
    }
    let term = terminal_check(&current, &tracked, f_order, budgets)
        .ok_or_else(|| mismatch("terminal", "split/order certification failed on replay"))?;
    if term.f_block != cert.f_block {
        return Err(mismatch("terminal", "F lands in a different block"));
    }
    let total: usize = cert.stages.iter().map(|s| s.index).product();
    if total != cert.total_index {
        return Err(mismatch("terminal", "total index is not the product of stage indices"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// The worked appendix example
// ---------------------------------------------------------------------------

/// Input data of the worked example: the graph of groups with two A4
/// vertices and one S3 vertex, its spanning tree, vertex presentations, and
/// the pinned homomorphism onto A5.
pub struct AppendixInput {
    pub gog: GraphOfGroups,
    pub tree: Vec<usize>,
    pub specs: Vec<Option<VertexSpec>>,
    pub stable_names: Vec<String>,
    /// cycle-notation images of a1, a2, b1, b2, t under ψ
    pub psi_images: Vec<String>,
}

fn table_from_cycles(degree: usize, gens: &[&str]) -> (FiniteGroupTable, Vec<usize>) {
    let perms: Vec<Permutation> = gens
        .iter()
        .map(|s| Permutation::parse_cycles(degree, s).expect("cycle data"))
        .collect();
    let elements = closure(&perms, crate::permgrp::DEFAULT_CLOSURE_CAP).expect("small group");
    let table = FiniteGroupTable::from_permutations(&elements).expect("group table");
    let gen_elements = perms
        .iter()
        .map(|p| elements.iter().position(|e| e == p).expect("generator"))
        .collect();
    (table, gen_elements)
}

impl AppendixInput {
    pub fn standard() -> Self {
        let (a4_1, v1_gens) = table_from_cycles(4, &["(1 2 3)", "(2 3 4)"]);
        let (a4_2, v2_gens) = table_from_cycles(4, &["(1 2 3)", "(2 3 4)"]);
        let (s3, v3_gens) = table_from_cycles(3, &["(1 2 3)", "(1 2)"]);
        // embedded cyclic subgroups: ⟨a1⟩ in V1 (shared by E1 and E3),
        // ⟨b1·b2⟩ in V2 and ⟨c2⟩ in V3 for E2, ⟨b1⟩ in V2 for E1, ⟨c1⟩ in V3
        let a1 = v1_gens[0];
        let b1 = v2_gens[0];
        let b2 = v2_gens[1];
        let b1b2 = a4_2.mul(b1, b2);
        let c1 = v3_gens[0];
        let c2 = v3_gens[1];
        let z3 = FiniteGroupTable::cyclic(3);
        let z2 = FiniteGroupTable::cyclic(2);
        let powers = |t: &FiniteGroupTable, x: usize, n: usize| -> Vec<usize> {
            let mut out = vec![t.identity()];
            for _ in 1..n {
                out.push(t.mul(*out.last().unwrap(), x));
            }
            out
        };
        let gog = GraphOfGroups {
            vertex_names: vec!["V1".into(), "V2".into(), "V3".into()],
            vertex_groups: vec![a4_1.clone(), a4_2.clone(), s3.clone()],
            edge_names: vec!["E1".into(), "E2".into(), "E3".into()],
            edges: vec![
                GogEdge {
                    ends: (0, 1),
                    group: z3.clone(),
                    embeddings: (powers(&a4_1, a1, 3), powers(&a4_2, b1, 3)),
                },
                GogEdge {
                    ends: (1, 2),
                    group: z2,
                    embeddings: (powers(&a4_2, b1b2, 2), powers(&s3, c2, 2)),
                },
                GogEdge {
                    ends: (0, 2),
                    group: z3,
                    embeddings: (powers(&a4_1, a1, 3), powers(&s3, c1, 3)),
                },
            ],
        };
        let spec = |names: [&str; 2], elements: &[usize], relators: [&str; 3]| VertexSpec {
            gen_names: names.iter().map(|s| s.to_string()).collect(),
            gen_elements: elements.to_vec(),
            relators: relators.iter().map(|s| s.to_string()).collect(),
        };
        let v1 = spec(["a1", "a2"], &v1_gens, ["a1^3", "a2^3", "a1 a2 a1 a2"]);
        let v2 = spec(["b1", "b2"], &v2_gens, ["b1^3", "b2^3", "b1 b2 b1 b2"]);
        let v3 = spec(["c1", "c2"], &v3_gens, ["c1^3", "c2^2", "c1 c2 c1 c2"]);
        AppendixInput {
            gog,
            tree: vec![2, 1],
            specs: vec![Some(v1), Some(v2), Some(v3)],
            stable_names: vec!["t".into()],
            psi_images: ["(1 2 3)", "(2 3 4)", "(2 4 3)", "(3 5 4)", "(1 4 2)"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

/// The seven-generator presentation of the fundamental group as stated in
/// the worked example, before any simplification.
pub fn appendix_full_presentation() -> Presentation {
    Presentation::parse(
        &["a1", "a2", "b1", "b2", "c1", "c2", "t"],
        &[
            "a1^3", "a2^3", "a1 a2 a1 a2",
            "b1^3", "b2^3", "b1 b2 b1 b2",
            "c1^3", "c2^2", "c1 c2 c1 c2",
            "t a1 t^-1 b1^-1", "a1 c1^-1", "b1 b2 c2^-1",
        ],
    )
    .expect("appendix presentation")
}

/// The five-generator form after eliminating c1 and c2.
pub fn appendix_simplified_presentation() -> Presentation {
    Presentation::parse(
        &["a1", "a2", "b1", "b2", "t"],
        &[
            "a1^3", "a2^3", "a1 a2 a1 a2",
            "b1^3", "b2^3", "b1 b2 b1 b2",
            "a1 b1 b2 a1 b1 b2", "t a1 t^-1 b1^-1",
        ],
    )
    .expect("simplified appendix presentation")
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub name: String,
    pub pass: bool,
    pub blocking: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct AppendixReport {
    pub checkpoints: Vec<Checkpoint>,
    pub aborted: Option<String>,
}

impl AppendixReport {
    pub fn passed(&self) -> bool {
        self.aborted.is_none()
            && self
                .checkpoints
                .iter()
                .all(|c| c.pass || !c.blocking)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": 1,
            "pass": self.passed(),
            "aborted": self.aborted,
            "checkpoints": self.checkpoints.iter().map(|c| serde_json::json!({
                "name": c.name,
                "pass": c.pass,
                "blocking": c.blocking,
                "detail": c.detail,
            })).collect::<Vec<_>>(),
        })
    }
}

struct Reporter {
    checkpoints: Vec<Checkpoint>,
}

impl Reporter {
    fn check(&mut self, name: &str, pass: bool, detail: String) -> bool {
        self.checkpoints.push(Checkpoint {
            name: name.to_string(),
            pass,
            blocking: true,
            detail,
        });
        pass
    }

    fn info(&mut self, name: &str, pass: bool, detail: String) {
        self.checkpoints.push(Checkpoint {
            name: name.to_string(),
            pass,
            blocking: false,
            detail,
        });
    }
}

/// Execute the worked example end to end, emitting one pass/fail checkpoint
/// per step. Computation continues past failed comparisons and aborts only
/// when a later step cannot be carried out.
pub fn appendix_report() -> AppendixReport {
    appendix_report_on(&AppendixInput::standard())
}

pub fn appendix_report_on(input: &AppendixInput) -> AppendixReport {
    let mut r = Reporter {
        checkpoints: Vec::new(),
    };
    let abort = |r: Reporter, why: String| AppendixReport {
        checkpoints: r.checkpoints,
        aborted: Some(why),
    };

    // 1. fundamental presentation of the graph of groups
    let (p12, _embeddings) = match bassserre::fundamental_presentation(
        &input.gog,
        &input.tree,
        &input.specs,
        &input.stable_names,
    ) {
        Ok(x) => x,
        Err(e) => return abort(r, format!("fundamental presentation failed: {e}")),
    };
    let expect12 = appendix_full_presentation();
    r.check(
        "fundamental-presentation",
        p12.alphabet().names() == expect12.alphabet().names() && p12.same_relators(&expect12),
        format!(
            "{} generators, {} relators",
            p12.generator_count(),
            p12.relator_count()
        ),
    );

    // 2. Tietze to the five-generator form (exact match required)
    let simplified = tietze_simplify(&p12, crate::fpgroup::DEFAULT_TIETZE_BUDGET);
    let g5 = simplified.presentation.clone();
    let expect8 = appendix_simplified_presentation();
    r.check(
        "tietze-five-generators",
        g5.alphabet().names() == expect8.alphabet().names() && g5.same_relators(&expect8),
        format!("{g5}"),
    );
    let g5 = if g5.alphabet().names() == expect8.alphabet().names() {
        g5
    } else {
        return abort(
            r,
            "simplified presentation has unexpected generators; ψ cannot be applied".into(),
        );
    };

    // 3. ψ validates
    let psi: Vec<Permutation> = match input
        .psi_images
        .iter()
        .map(|s| Permutation::parse_cycles(5, s))
        .collect::<Result<Vec<_>, _>>()
    {
        Ok(p) => p,
        Err(e) => return abort(r, format!("bad ψ images: {e}")),
    };
    let hom = match validate_hom(&g5, &psi) {
        Ok(h) => {
            r.check("psi-validates", true, "all eight relators die".into());
            h
        }
        Err(e) => {
            r.check("psi-validates", false, e.to_string());
            return abort(r, "ψ does not validate".into());
        }
    };

    // 4. injectivity orders (V1, V2, V3) = (12, 12, 6); V3 = ⟨c1, c2⟩ is
    // tracked through the trail of the c-elimination
    let w = |s: &str| g5.alphabet().parse_word(s).expect("word");
    let v1 = vec![w("a1"), w("a2")];
    let v2 = vec![w("b1"), w("b2")];
    let c1 = p12.alphabet().parse_word("c1").expect("c1");
    let c2 = p12.alphabet().parse_word("c2").expect("c2");
    let v3: Vec<Word> = match (simplified.trail.apply(&c1), simplified.trail.apply(&c2)) {
        (Ok(x), Ok(y)) => vec![x, y],
        _ => return abort(r, "trail cannot transport c1, c2".into()),
    };
    let cap = crate::permgrp::DEFAULT_CLOSURE_CAP;
    let inj = |words: &[Word], order: u64| {
        crate::permgrp::injective_on(&hom, words, order, cap).unwrap_or(false)
    };
    r.check(
        "psi-injective-on-v1-v2-v3",
        inj(&v1, 12) && inj(&v2, 12) && inj(&v3, 6),
        format!(
            "V3 tracked as ({}, {})",
            g5.alphabet().display_word(&v3[0]),
            g5.alphabet().display_word(&v3[1])
        ),
    );

    // 5. stage 1 with pinned ψ: preimage of ψ(V2)
    let budgets = Budgets::default();
    let im = match closure(&psi, budgets.closure_cap) {
        Ok(x) => x,
        Err(e) => return abort(r, e.to_string()),
    };
    let v2_images: Vec<Permutation> = v2.iter().map(|x| hom.apply(x)).collect();
    let im_v2 = match closure(&v2_images, budgets.closure_cap) {
        Ok(x) => x,
        Err(e) => return abort(r, e.to_string()),
    };
    let action = match coset_action(&im, &im_v2, &psi) {
        Ok(a) => a,
        Err(e) => return abort(r, e.to_string()),
    };
    r.check(
        "index-g-g0",
        action.num_cosets == 5,
        format!("|G : G0| = {}", action.num_cosets),
    );
    let table = match CosetTable::from_action(&g5, &v2, &action.gen_images) {
        Ok(t) => t,
        Err(e) => return abort(r, e.to_string()),
    };
    let sp = match rs::subgroup_presentation(&table, "f") {
        Ok(s) => s,
        Err(e) => return abort(r, e.to_string()),
    };
    r.check(
        "rs-raw-counts-g0",
        sp.raw_generator_count == 21 && sp.raw_relator_count() == 40,
        format!(
            "{} Schreier generators, {} raw relators",
            sp.raw_generator_count,
            sp.raw_relator_count()
        ),
    );
    let g0_out = tietze_simplify(&sp.presentation, budgets.tietze_moves);
    let g0 = g0_out.presentation.clone();
    let ab_g0 = g0.abelian_invariants();
    r.check(
        "abelian-invariants-g0",
        ab_g0 == crate::fpgroup::AbelianInvariants::from_u64(&[3], 4),
        format!("{ab_g0}"),
    );
    let tracked: Result<Vec<Word>, _> = v2
        .iter()
        .map(|x| {
            sp.rewrite(&table, x)
                .map_err(PipelineError::from)
                .and_then(|rw| g0_out.trail.apply(&rw).map_err(PipelineError::from))
        })
        .collect();
    let tracked = match tracked {
        Ok(t) => t,
        Err(e) => return abort(r, e.to_string()),
    };
    let split_g0 = split_free_product(&g0);
    let tracked_in_one_block = split_g0.blocks.iter().any(|b| {
        tracked
            .iter()
            .all(|x| x.support().iter().all(|g| b.generators.contains(g)))
    });
    r.check(
        "split-g0",
        tracked_in_one_block,
        format!(
            "blocks {:?}, {} free generators",
            split_g0
                .blocks
                .iter()
                .map(|b| b.generators.len())
                .collect::<Vec<_>>(),
            split_g0.free_generators.len()
        ),
    );

    // 6. φ validates on the stated presentation of G0 (short form), and the
    // generator substitution transports f3 the way the derivation does
    {
        let g0_paper = Presentation::parse(
            &["f1", "f2", "f3", "f4", "f5", "f6", "f7"],
            &[
                "f1^3", "f2^3", "f3^3", "f1 f2 f1 f2",
                "f6 f1 f6^-1 f3^-1 f6 f1 f6^-1 f3^-1",
            ],
        )
        .expect("stated G0 presentation");
        let definition = g0_paper
            .alphabet()
            .parse_word("f6^-1 f3^-1 f6")
            .expect("substitution word");
        match crate::fpgroup::replace_generator(&g0_paper, "f3", "ft3", &definition) {
            Ok((g0_short, trail)) => {
                let expect_short = Presentation::parse(
                    &["f1", "f2", "ft3", "f4", "f5", "f6", "f7"],
                    &["f1^3", "f2^3", "ft3^3", "f1 f2 f1 f2", "f1 ft3 f1 ft3"],
                )
                .expect("short G0");
                let f3 = g0_paper.alphabet().parse_word("f3").expect("f3");
                let transported = trail.apply(&f3).ok();
                let expected_image = g0_short
                    .alphabet()
                    .parse_word("f6 ft3^-1 f6^-1")
                    .expect("image");
                let id = Permutation::identity(5);
                let phi = [
                    Permutation::parse_cycles(5, "(2 3 4)").unwrap(),
                    Permutation::parse_cycles(5, "(1 2 3)").unwrap(),
                    Permutation::parse_cycles(5, "(3 4 5)").unwrap(),
                    id.clone(),
                    id.clone(),
                    id.clone(),
                    id,
                ];
                let phi_ok = validate_hom(&g0_short, &phi).is_ok();
                r.check(
                    "phi-validates-on-stated-g0",
                    g0_short.same_relators(&expect_short)
                        && transported == Some(expected_image)
                        && phi_ok,
                    format!("substituted form: {g0_short}"),
                );
            }
            Err(e) => {
                r.check("phi-validates-on-stated-g0", false, e.to_string());
            }
        }
    }

    // 7. stage 2 by deterministic search on the tracked block of G0
    let a5 = PermGroup::alternating(5)
        .with_elements(budgets.closure_cap)
        .expect("A5");
    let mut state = SearchState {
        targets: &[&a5],
        max_stages: 1,
        budgets,
        f_order: 12,
        deepest_stage: 0,
        hom_nodes_used: 0,
    };
    let stage2 = match state.search(&g0, &tracked, 0) {
        Ok(Some((stages, term, final_p, final_tracked))) => {
            Some((stages, term, final_p, final_tracked))
        }
        Ok(None) => None,
        Err(e) => return abort(r, format!("stage-2 search failed: {e}")),
    };
    let Some((stages2, _term, g1, tracked_w)) = stage2 else {
        r.check("index-g0-g1", false, "no stage-2 witness found".into());
        return abort(r, "stage-2 search found no witness".into());
    };
    let stage2_index = stages2.first().map_or(1, |s| s.index);
    r.check(
        "index-g0-g1",
        stage2_index == 5,
        format!("|G0 : G1| = {stage2_index}"),
    );
    r.check(
        "total-index",
        5 * stage2_index == 25,
        format!("|G : G1| = {}", 5 * stage2_index),
    );
    if let Some(s) = stages2.first() {
        let expected_gens = s.index * g0.generator_count() - (s.index - 1);
        r.check(
            "rs-raw-counts-g1",
            s.raw_generator_count == expected_gens
                && s.raw_relator_count == s.index * g0.relator_count(),
            format!(
                "{} Schreier generators, {} raw relators",
                s.raw_generator_count, s.raw_relator_count
            ),
        );
    }
    let ab_g1 = g1.abelian_invariants();
    r.check(
        "abelian-invariants-g1",
        ab_g1 == crate::fpgroup::AbelianInvariants::from_u64(&[3, 3], 20),
        format!("{ab_g1}"),
    );
    let split_g1 = split_free_product(&g1);
    let block_sizes: Vec<usize> = split_g1.blocks.iter().map(|b| b.generators.len()).collect();
    r.check(
        "split-g1",
        block_sizes == vec![2, 2] && split_g1.free_generators.len() == 20,
        format!(
            "blocks {:?}, {} free generators",
            block_sizes,
            split_g1.free_generators.len()
        ),
    );
    // order of the tracked W inside the certified free product
    let w_order = match terminal_check(&g1, &tracked_w, 12, &budgets) {
        Some(_) => true,
        None => false,
    };
    r.check(
        "w-order-12",
        w_order,
        format!(
            "tracked W generators: {}",
            tracked_w
                .iter()
                .map(|x| g1.alphabet().display_word(x))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );

    // 8. stretch targets: the exact presentation sizes reached by GAP
    r.info(
        "stretch-exact-counts",
        g0.generator_count() == 7
            && g0.relator_count() == 5
            && g1.generator_count() == 24
            && g1.relator_count() == 6,
        format!(
            "G0 at {}/{} (target 7/5), G1 at {}/{} (target 24/6)",
            g0.generator_count(),
            g0.relator_count(),
            g1.generator_count(),
            g1.relator_count()
        ),
    );

    AppendixReport {
        checkpoints: r.checkpoints,
        aborted: None,
    }
}
