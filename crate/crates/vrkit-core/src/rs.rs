//! Reidemeister–Schreier: from a complete coset table, a presentation of the
//! subgroup on Schreier generators, the expression of each new generator as
//! an ambient word, and the rewriting map into the new generators.
//!
//! The transversal comes from a BFS over the positive generator columns in
//! alphabet order, so representatives are prefix-closed and positive words.
//! Schreier generators are created only for non-tree table entries; the
//! trivial ones are never materialized.

use std::collections::HashMap;

use thiserror::Error;

use crate::cosets::CosetTable;
use crate::fpgroup::{FpError, Presentation};
use crate::words::{Alphabet, Word, WordError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RsError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Fp(#[from] FpError),
    #[error("word does not lie in the subgroup (traces coset 0 to coset {0})")]
    NotInSubgroup(usize),
    #[error("word uses generator index {index} outside the ambient alphabet of size {size}")]
    AlphabetMismatch { index: usize, size: usize },
}

/// Schreier transversal: one positive, prefix-closed representative word per
/// coset; the representative of coset 0 is the identity.
pub fn schreier_transversal(t: &CosetTable) -> Vec<Word> {
    let n = t.presentation().generator_count();
    let index = t.index();
    let mut words: Vec<Option<Word>> = vec![None; index];
    words[0] = Some(Word::identity());
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(c) = queue.pop_front() {
        let base = words[c].clone().unwrap();
        for g in 0..n {
            let d = t.step(c, 2 * g);
            if words[d].is_none() {
                words[d] = Some(base.multiply(&Word::generator(g, 1)).expect("short word"));
                queue.push_back(d);
            }
        }
    }
    words
        .into_iter()
        .map(|w| w.expect("complete tables are transitive under positive steps"))
        .collect()
}

/// Subgroup presentation data produced by the rewriting process.
#[derive(Debug, Clone)]
pub struct SubgroupPresentation {
    /// cleaned presentation on the Schreier generators
    pub presentation: Presentation,
    /// per Schreier generator, its word in the ambient alphabet
    pub embedding: Vec<Word>,
    /// per coset, the transversal representative
    pub transversal: Vec<Word>,
    /// index·n − (index−1) Schreier generators before any simplification
    pub raw_generator_count: usize,
    /// index × (ambient relator count) rewrites, before pruning
    pub raw_relators: Vec<Word>,
    /// (coset, generator) → Schreier generator index; tree entries absent
    schreier_index: HashMap<(usize, usize), usize>,
}

impl SubgroupPresentation {
    pub fn raw_relator_count(&self) -> usize {
        self.raw_relators.len()
    }

    /// Rewrite an ambient subgroup element as a word in the Schreier
    /// generators. Errors unless the word fixes coset 0.
    pub fn rewrite(&self, t: &CosetTable, w: &Word) -> Result<Word, RsError> {
        let n = t.presentation().generator_count();
        if let Some(g) = w.max_generator() {
            if g >= n {
                return Err(RsError::AlphabetMismatch { index: g, size: n });
            }
        }
        if t.trace(0, w) != 0 {
            return Err(RsError::NotInSubgroup(t.trace(0, w)));
        }
        Ok(rewrite_from(&self.schreier_index, t, 0, w))
    }

    pub fn to_json_value(&self, ambient: &Alphabet) -> serde_json::Value {
        let schreier = self.presentation.alphabet();
        serde_json::json!({
            "presentation": self.presentation.to_json_value(),
            "embedding": schreier.names().iter().enumerate()
                .map(|(i, name)| (name.clone(), ambient.display_word(&self.embedding[i])))
                .collect::<HashMap<_, _>>(),
            "transversal": self.transversal.iter()
                .map(|w| ambient.display_word(w))
                .collect::<Vec<_>>(),
        })
    }
}

fn rewrite_from(
    schreier_index: &HashMap<(usize, usize), usize>,
    t: &CosetTable,
    start: usize,
    w: &Word,
) -> Word {
    let mut out: Vec<(usize, i64)> = Vec::new();
    let mut c = start;
    for (g, positive) in w.letters() {
        if positive {
            if let Some(&s) = schreier_index.get(&(c, g)) {
                out.push((s, 1));
            }
            c = t.step(c, 2 * g);
        } else {
            let prev = t.step(c, 2 * g + 1);
            if let Some(&s) = schreier_index.get(&(prev, g)) {
                out.push((s, -1));
            }
            c = prev;
        }
    }
    Word::reduce(&out).expect("rewrite length is bounded")
}

/// Run Reidemeister–Schreier on a complete table. Schreier generators are
/// named `{prefix}1, {prefix}2, …` in (coset, generator) lexicographic order
/// of the non-tree entries.
pub fn subgroup_presentation(
    t: &CosetTable,
    prefix: &str,
) -> Result<SubgroupPresentation, RsError> {
    let p = t.presentation();
    let n = p.generator_count();
    let index = t.index();
    // rebuild the positive-BFS tree to know which entries are tree entries
    let transversal = schreier_transversal(t);
    let mut is_tree = vec![vec![false; n]; index];
    {
        let mut seen = vec![false; index];
        seen[0] = true;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(c) = queue.pop_front() {
            for g in 0..n {
                let d = t.step(c, 2 * g);
                if !seen[d] {
                    seen[d] = true;
                    is_tree[c][g] = true;
                    queue.push_back(d);
                }
            }
        }
    }
    let mut schreier_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut embedding = Vec::new();
    for c in 0..index {
        for g in 0..n {
            if is_tree[c][g] {
                continue;
            }
            schreier_index.insert((c, g), embedding.len());
            let target = t.step(c, 2 * g);
            let w = transversal[c]
                .multiply(&Word::generator(g, 1))
                .and_then(|x| x.multiply(&transversal[target].inverse()))
                .expect("embedding word");
            embedding.push(w);
        }
    }
    let raw_generator_count = embedding.len();
    debug_assert_eq!(raw_generator_count, index * n - (index - 1));
    let mut raw_relators = Vec::with_capacity(index * p.relator_count());
    for c in 0..index {
        for r in p.relators() {
            raw_relators.push(rewrite_from(&schreier_index, t, c, r));
        }
    }
    let names: Vec<String> = (1..=raw_generator_count)
        .map(|i| format!("{prefix}{i}"))
        .collect();
    let alphabet = Alphabet::new(names)?;
    let presentation = Presentation::new(alphabet, raw_relators.clone())?;
    Ok(SubgroupPresentation {
        presentation,
        embedding,
        transversal,
        raw_generator_count,
        raw_relators,
        schreier_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cosets::{enumerate, DEFAULT_COSET_LIMIT};
    use crate::fpgroup::{tietze_simplify, AbelianInvariants, DEFAULT_TIETZE_BUDGET};

    fn s3() -> Presentation {
        Presentation::parse(&["c1", "c2"], &["c1^3", "c2^2", "c1 c2 c1 c2"]).unwrap()
    }

    #[test]
    fn transversal_of_s3_mod_c2() {
        let p = s3();
        let sub = vec![p.alphabet().parse_word("c2").unwrap()];
        let t = enumerate(&p, &sub, DEFAULT_COSET_LIMIT).unwrap();
        let tr = schreier_transversal(&t);
        let display: Vec<String> = tr.iter().map(|w| p.alphabet().display_word(w)).collect();
        assert_eq!(display, vec!["1", "c1", "c1^2"]);
    }

    #[test]
    fn transversal_is_prefix_closed() {
        let p = s3();
        let t = enumerate(&p, &[], DEFAULT_COSET_LIMIT).unwrap();
        let tr = schreier_transversal(&t);
        assert_eq!(tr.len(), 6);
        for w in &tr {
            // every prefix of a representative is itself a representative
            let letters = w.letters();
            for k in 0..letters.len() {
                let prefix = Word::from_letters(&letters[..k]).unwrap();
                assert!(
                    tr.contains(&prefix),
                    "prefix {prefix} of {w} not in transversal"
                );
            }
        }
        // index-1 table
        let whole = enumerate(
            &p,
            &[
                p.alphabet().parse_word("c1").unwrap(),
                p.alphabet().parse_word("c2").unwrap(),
            ],
            DEFAULT_COSET_LIMIT,
        )
        .unwrap();
        assert_eq!(schreier_transversal(&whole), vec![Word::identity()]);
    }

    #[test]
    fn raw_counts_follow_the_closed_formulas() {
        let p = s3();
        let sub = vec![p.alphabet().parse_word("c2").unwrap()];
        let t = enumerate(&p, &sub, DEFAULT_COSET_LIMIT).unwrap();
        let sp = subgroup_presentation(&t, "f").unwrap();
        assert_eq!(sp.raw_generator_count, 3 * 2 - 2);
        assert_eq!(sp.raw_relator_count(), 3 * 3);
    }

    #[test]
    fn free_subgroup_has_free_presentation() {
        // F2 ⊇ ⟨a², b, aba⁻¹⟩ of index 2: 3 Schreier generators, no relators
        let f2 = Presentation::free(["a", "b"]).unwrap();
        let subs: Vec<Word> = ["a^2", "b", "a b a^-1"]
            .iter()
            .map(|s| f2.alphabet().parse_word(s).unwrap())
            .collect();
        let t = enumerate(&f2, &subs, DEFAULT_COSET_LIMIT).unwrap();
        assert_eq!(t.index(), 2);
        let tr = schreier_transversal(&t);
        let display: Vec<String> = tr.iter().map(|w| f2.alphabet().display_word(w)).collect();
        assert_eq!(display, vec!["1", "a"]);
        let sp = subgroup_presentation(&t, "f").unwrap();
        assert_eq!(sp.raw_generator_count, 3, "Nielsen–Schreier rank 1+2·(2−1)");
        assert_eq!(sp.presentation.relator_count(), 0);
        // every embedding word lies in the subgroup
        for e in &sp.embedding {
            assert_eq!(t.trace(0, e), 0);
        }
    }

    #[test]
    fn s3_mod_c1_gives_z3() {
        let p = s3();
        let sub = vec![p.alphabet().parse_word("c1").unwrap()];
        let t = enumerate(&p, &sub, DEFAULT_COSET_LIMIT).unwrap();
        assert_eq!(t.index(), 2);
        let sp = subgroup_presentation(&t, "f").unwrap();
        let out = tietze_simplify(&sp.presentation, DEFAULT_TIETZE_BUDGET);
        assert_eq!(
            out.presentation.abelian_invariants(),
            AbelianInvariants::from_u64(&[3], 0)
        );
    }

    #[test]
    fn rewrite_of_subgroup_words() {
        let p = s3();
        let sub = vec![p.alphabet().parse_word("c2").unwrap()];
        let t = enumerate(&p, &sub, DEFAULT_COSET_LIMIT).unwrap();
        let sp = subgroup_presentation(&t, "f").unwrap();
        // c2 is a subgroup generator: its rewrite must be a valid word whose
        // embedding evaluates back to something tracing to coset 0
        let c2 = p.alphabet().parse_word("c2").unwrap();
        let rewritten = sp.rewrite(&t, &c2).unwrap();
        let back = rewritten.substitute(&sp.embedding).unwrap();
        assert_eq!(t.trace(0, &back), 0);
        // non-members are rejected
        let c1 = p.alphabet().parse_word("c1").unwrap();
        assert!(matches!(
            sp.rewrite(&t, &c1),
            Err(RsError::NotInSubgroup(_))
        ));
    }

    #[test]
    fn embedding_words_fix_coset_zero() {
        let p = Presentation::parse(
            &["a1", "a2"],
            &["a1^3", "a2^3", "a1 a2 a1 a2"],
        )
        .unwrap();
        let sub = vec![p.alphabet().parse_word("a1").unwrap()];
        let t = enumerate(&p, &sub, DEFAULT_COSET_LIMIT).unwrap();
        let sp = subgroup_presentation(&t, "f").unwrap();
        for e in &sp.embedding {
            assert_eq!(t.trace(0, e), 0, "embedding word escapes the subgroup");
        }
        // rewriting an embedding word then substituting back is the identity
        // at the abelianized level of the coset action
        for e in &sp.embedding {
            let r = sp.rewrite(&t, e).unwrap();
            let back = r.substitute(&sp.embedding).unwrap();
            assert_eq!(t.trace(0, &back), 0);
        }
    }
}
