//! Exhaustive backtracking enumeration of homomorphisms from a finite
//! presentation to a small permutation group, with injectivity constraints
//! on designated finite subgroups.
//!
//! Search order is part of the contract: generators are assigned in
//! presentation order, candidate images run through the target's element
//! list in closure discovery order, and results come out in lexicographic
//! order of image tuples. Identical inputs always produce identical output.

use thiserror::Error;

use crate::fpgroup::Presentation;
use crate::permgrp::{
    apply_word, injective_on, validate_hom, GroupHom, PermGroup, Permutation,
};
use crate::words::Word;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomSearchError {
    #[error("target group has no materialized element list")]
    NoElements,
    #[error("cap must be positive")]
    BadCap,
    #[error("fixed assignment for generator {0} out of range")]
    BadFixed(usize),
    #[error(transparent)]
    Perm(#[from] crate::permgrp::PermError),
}

/// Node budget and bookkeeping for a search run.
#[derive(Debug, Clone, Copy)]
pub struct SearchBudget {
    /// maximum number of partial assignments explored
    pub nodes: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { nodes: 10_000_000 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SearchStats {
    pub nodes: u64,
    pub complete: u64,
    pub exhausted: bool,
}

struct Searcher<'a> {
    p: &'a Presentation,
    degree: usize,
    elements: &'a [Permutation],
    fixed: Vec<Option<Permutation>>,
    /// relators whose maximal generator is `g`, checked once `g` is assigned
    relators_by_max: Vec<Vec<&'a Word>>,
    budget: u64,
    stats: SearchStats,
}

enum Flow {
    Continue,
    Stop,
}

impl<'a> Searcher<'a> {
    fn run(&mut self, visit: &mut dyn FnMut(&[Permutation]) -> Flow) {
        let mut images: Vec<Permutation> = Vec::with_capacity(self.p.generator_count());
        self.descend(&mut images, visit);
    }

    fn descend(
        &mut self,
        images: &mut Vec<Permutation>,
        visit: &mut dyn FnMut(&[Permutation]) -> Flow,
    ) -> Flow {
        let g = images.len();
        if g == self.p.generator_count() {
            self.stats.complete += 1;
            return visit(images);
        }
        let candidates: Vec<Permutation> = match &self.fixed[g] {
            Some(p) => vec![p.clone()],
            None => self.elements.to_vec(),
        };
        for cand in candidates {
            if self.stats.nodes >= self.budget {
                self.stats.exhausted = true;
                return Flow::Stop;
            }
            self.stats.nodes += 1;
            images.push(cand);
            let ok = self.relators_by_max[g]
                .iter()
                .all(|r| apply_word(r, images, self.degree).is_identity());
            if ok {
                if let Flow::Stop = self.descend(images, visit) {
                    images.pop();
                    return Flow::Stop;
                }
            }
            images.pop();
        }
        Flow::Continue
    }
}

fn build_searcher<'a>(
    p: &'a Presentation,
    target: &'a PermGroup,
    fixed: &[(usize, Permutation)],
    budget: SearchBudget,
) -> Result<Searcher<'a>, HomSearchError> {
    let elements = target
        .elements
        .as_deref()
        .ok_or(HomSearchError::NoElements)?;
    let n = p.generator_count();
    let mut fixed_vec: Vec<Option<Permutation>> = vec![None; n];
    for (g, img) in fixed {
        if *g >= n {
            return Err(HomSearchError::BadFixed(*g));
        }
        fixed_vec[*g] = Some(img.clone());
    }
    let mut relators_by_max: Vec<Vec<&Word>> = vec![Vec::new(); n.max(1)];
    for r in p.relators() {
        if let Some(m) = r.max_generator() {
            relators_by_max[m].push(r);
        }
    }
    Ok(Searcher {
        p,
        degree: target.degree,
        elements,
        fixed: fixed_vec,
        relators_by_max,
        budget: budget.nodes,
        stats: SearchStats::default(),
    })
}

/// All homomorphisms extending `fixed`, in lexicographic image-tuple order,
/// truncated at `cap`. The boolean reports truncation.
pub fn enumerate_homs(
    p: &Presentation,
    target: &PermGroup,
    fixed: &[(usize, Permutation)],
    cap: usize,
) -> Result<(Vec<GroupHom>, bool), HomSearchError> {
    if cap == 0 {
        return Err(HomSearchError::BadCap);
    }
    let mut searcher = build_searcher(p, target, fixed, SearchBudget::default())?;
    let mut out = Vec::new();
    let mut truncated = false;
    searcher.run(&mut |images| {
        if out.len() >= cap {
            truncated = true;
            return Flow::Stop;
        }
        let hom = validate_hom(p, images).expect("search only yields relator-killing images");
        out.push(hom);
        Flow::Continue
    });
    Ok((out, truncated))
}

/// First homomorphism (in search order) satisfying `pred`, across targets in
/// list order.
pub fn find_hom(
    p: &Presentation,
    targets: &[&PermGroup],
    budget: SearchBudget,
    mut pred: impl FnMut(&GroupHom) -> bool,
) -> Result<FindOutcome, HomSearchError> {
    let mut total_nodes = 0;
    let mut exhausted_any = false;
    for target in targets {
        let mut searcher = build_searcher(p, target, &[], budget)?;
        let mut found: Option<GroupHom> = None;
        searcher.run(&mut |images| {
            let hom = validate_hom(p, images).expect("relators checked during search");
            if pred(&hom) {
                found = Some(hom);
                Flow::Stop
            } else {
                Flow::Continue
            }
        });
        total_nodes += searcher.stats.nodes;
        exhausted_any |= searcher.stats.exhausted;
        if let Some(hom) = found {
            return Ok(FindOutcome::Found {
                hom,
                nodes: total_nodes,
            });
        }
    }
    Ok(FindOutcome::NotFound {
        nodes: total_nodes,
        budget_exhausted: exhausted_any,
    })
}

#[derive(Debug, Clone)]
pub enum FindOutcome {
    Found { hom: GroupHom, nodes: u64 },
    NotFound { nodes: u64, budget_exhausted: bool },
}

/// First homomorphism injective on every listed subgroup (expected orders
/// supplied by the caller), searching the targets in order.
pub fn find_injective_on(
    p: &Presentation,
    subgroups: &[(Vec<Word>, u64)],
    targets: &[&PermGroup],
    budget: SearchBudget,
    closure_cap: usize,
) -> Result<FindOutcome, HomSearchError> {
    find_hom(p, targets, budget, |hom| {
        subgroups.iter().all(|(words, order)| {
            injective_on(hom, words, *order, closure_cap).unwrap_or(false)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permgrp::DEFAULT_CLOSURE_CAP;

    fn a5() -> PermGroup {
        PermGroup::alternating(5)
            .with_elements(DEFAULT_CLOSURE_CAP)
            .unwrap()
    }

    fn s3_group() -> PermGroup {
        PermGroup::symmetric(3)
            .with_elements(DEFAULT_CLOSURE_CAP)
            .unwrap()
    }

    #[test]
    fn free_rank_two_to_s3_has_36_homs() {
        let f2 = Presentation::free(["x", "y"]).unwrap();
        let (homs, truncated) = enumerate_homs(&f2, &s3_group(), &[], 100).unwrap();
        assert_eq!(homs.len(), 36);
        assert!(!truncated);
    }

    #[test]
    fn involution_images_in_a4() {
        let p = Presentation::parse(&["x"], &["x^2"]).unwrap();
        let a4 = PermGroup::alternating(4)
            .with_elements(DEFAULT_CLOSURE_CAP)
            .unwrap();
        let (homs, _) = enumerate_homs(&p, &a4, &[], 100).unwrap();
        // identity plus the three double transpositions
        assert_eq!(homs.len(), 4);
    }

    #[test]
    fn enumeration_matches_brute_force_on_small_instances() {
        let p = Presentation::parse(&["x", "y"], &["x^2", "y^3"]).unwrap();
        let target = s3_group();
        let (homs, _) = enumerate_homs(&p, &target, &[], 1000).unwrap();
        let elements = target.elements();
        let mut brute = 0;
        for a in elements {
            for b in elements {
                let x2 = a.compose(a).unwrap();
                let y3 = b.compose(b).unwrap().compose(b).unwrap();
                if x2.is_identity() && y3.is_identity() {
                    brute += 1;
                }
            }
        }
        assert_eq!(homs.len(), brute);
    }

    #[test]
    fn fixed_images_pin_the_paper_psi() {
        let g = Presentation::parse(
            &["a1", "a2", "b1", "b2", "t"],
            &[
                "a1^3", "a2^3", "a1 a2 a1 a2",
                "b1^3", "b2^3", "b1 b2 b1 b2",
                "a1 b1 b2 a1 b1 b2", "t a1 t^-1 b1^-1",
            ],
        )
        .unwrap();
        let psi: Vec<(usize, Permutation)> = ["(1 2 3)", "(2 3 4)", "(2 4 3)", "(3 5 4)", "(1 4 2)"]
            .iter()
            .enumerate()
            .map(|(i, s)| (i, Permutation::parse_cycles(5, s).unwrap()))
            .collect();
        let (homs, _) = enumerate_homs(&g, &a5(), &psi, 10).unwrap();
        assert_eq!(homs.len(), 1, "the paper's ψ validates and is found");
    }

    #[test]
    fn search_respects_injectivity_constraints() {
        let z3 = Presentation::parse(&["x"], &["x^3"]).unwrap();
        let x = z3.alphabet().parse_word("x").unwrap();
        // S3 target: x must land on a 3-cycle
        let outcome = find_injective_on(
            &z3,
            &[(vec![x.clone()], 3)],
            &[&s3_group()],
            SearchBudget::default(),
            DEFAULT_CLOSURE_CAP,
        )
        .unwrap();
        match outcome {
            FindOutcome::Found { hom, .. } => {
                assert_eq!(hom.images[0].order(), 3);
            }
            other => panic!("expected a hom, got {other:?}"),
        }
        // Z2 target: impossible
        let z2 = PermGroup::cyclic(2).with_elements(10).unwrap();
        let outcome = find_injective_on(
            &z3,
            &[(vec![x], 3)],
            &[&z2],
            SearchBudget::default(),
            DEFAULT_CLOSURE_CAP,
        )
        .unwrap();
        assert!(matches!(
            outcome,
            FindOutcome::NotFound {
                budget_exhausted: false,
                ..
            }
        ));
    }

    #[test]
    fn determinism_of_result_lists() {
        let p = Presentation::parse(&["x", "y"], &["x^2", "y^2"]).unwrap();
        let (a, _) = enumerate_homs(&p, &s3_group(), &[], 1000).unwrap();
        let (b, _) = enumerate_homs(&p, &s3_group(), &[], 1000).unwrap();
        let images_a: Vec<Vec<String>> = a
            .iter()
            .map(|h| h.images.iter().map(|p| p.cycle_string()).collect())
            .collect();
        let images_b: Vec<Vec<String>> = b
            .iter()
            .map(|h| h.images.iter().map(|p| p.cycle_string()).collect())
            .collect();
        assert_eq!(images_a, images_b);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let f3 = Presentation::free(["x", "y", "z"]).unwrap();
        let outcome = find_hom(&f3, &[&a5()], SearchBudget { nodes: 50 }, |_| false).unwrap();
        assert!(matches!(
            outcome,
            FindOutcome::NotFound {
                budget_exhausted: true,
                ..
            }
        ));
    }
}
