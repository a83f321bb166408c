//! Free words over involutive alphabets: free reduction, multiplication,
//! inversion, cyclic reduction and the canonical text syntax.
//!
//! A word is stored as a run-length sequence of syllables `(generator, exponent)`
//! with nonzero exponents and no two adjacent syllables on the same generator.
//! The empty sequence is the identity. Exponents are machine integers; overflow
//! is reported as an error, never wrapped.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("invalid generator name `{0}`")]
    BadName(String),
    #[error("duplicate generator name `{0}`")]
    DuplicateName(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("generator index {index} out of range for alphabet of size {size}")]
    BadIndex { index: usize, size: usize },
    #[error("exponent overflow")]
    ExponentOverflow,
    #[error("word syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
}

/// Ordered set of distinct generator names. Order is fixed at construction
/// and significant everywhere downstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Alphabet {
    pub fn new<I, S>(names: I) -> Result<Self, WordError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = Alphabet {
            names: Vec::new(),
            index: HashMap::new(),
        };
        for name in names {
            let name = name.into();
            if !valid_name(&name) {
                return Err(WordError::BadName(name));
            }
            if out.index.contains_key(&name) {
                return Err(WordError::DuplicateName(name));
            }
            out.index.insert(name.clone(), out.names.len());
            out.names.push(name);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Reduce a raw syllable sequence after validating the indices.
    pub fn word_from_raw(&self, raw: &[(usize, i64)]) -> Result<Word, WordError> {
        for &(g, _) in raw {
            if g >= self.len() {
                return Err(WordError::BadIndex {
                    index: g,
                    size: self.len(),
                });
            }
        }
        Word::reduce(raw)
    }

    /// Parse the canonical text syntax: whitespace-separated atoms `g`,
    /// `g^-1`, `g^k` with nonzero decimal `k`; the identity is the literal `1`.
    pub fn parse_word(&self, text: &str) -> Result<Word, WordError> {
        let trimmed = text.trim();
        if trimmed == "1" {
            return Ok(Word::identity());
        }
        let mut raw: Vec<(usize, i64)> = Vec::new();
        let mut pos = 0usize;
        for chunk in text.split_whitespace() {
            // byte offset of this chunk for error reporting
            let at = text[pos..].find(chunk).map(|o| pos + o).unwrap_or(pos);
            pos = at + chunk.len();
            let (name, exp) = match chunk.find('^') {
                None => (chunk, 1i64),
                Some(caret) => {
                    let name = &chunk[..caret];
                    let exp_str = &chunk[caret + 1..];
                    let exp: i64 = exp_str.parse().map_err(|_| WordError::Syntax {
                        pos: at + caret + 1,
                        msg: format!("bad exponent `{exp_str}`"),
                    })?;
                    if exp == 0 {
                        return Err(WordError::Syntax {
                            pos: at + caret + 1,
                            msg: "zero exponent".into(),
                        });
                    }
                    (name, exp)
                }
            };
            if name == "1" {
                return Err(WordError::Syntax {
                    pos: at,
                    msg: "the identity atom `1` must stand alone".into(),
                });
            }
            let g = self.index_of(name).ok_or_else(|| WordError::Syntax {
                pos: at,
                msg: format!("unknown generator `{name}`"),
            })?;
            raw.push((g, exp));
        }
        if raw.is_empty() {
            return Err(WordError::Syntax {
                pos: 0,
                msg: "empty word (use `1` for the identity)".into(),
            });
        }
        Word::reduce(&raw)
    }

    /// Render a word in the canonical text syntax.
    pub fn display_word(&self, w: &Word) -> String {
        if w.is_identity() {
            return "1".to_string();
        }
        w.syllables()
            .iter()
            .map(|&(g, e)| {
                if e == 1 {
                    self.names[g].clone()
                } else {
                    format!("{}^{}", self.names[g], e)
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Freely reduced word; the universal currency of the toolkit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    syllables: Vec<(usize, i64)>,
}

impl Word {
    pub fn identity() -> Self {
        Word { syllables: Vec::new() }
    }

    /// Single-syllable word `g^e`; `e` must be nonzero.
    pub fn generator(g: usize, e: i64) -> Self {
        assert!(e != 0, "zero exponent");
        Word { syllables: vec![(g, e)] }
    }

    pub fn is_identity(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn syllables(&self) -> &[(usize, i64)] {
        &self.syllables
    }

    /// Letter count with multiplicity (sum of |exponents|).
    pub fn len(&self) -> usize {
        self.syllables
            .iter()
            .map(|&(_, e)| e.unsigned_abs() as usize)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.syllables.is_empty()
    }

    /// Largest generator index occurring in the word.
    pub fn max_generator(&self) -> Option<usize> {
        self.syllables.iter().map(|&(g, _)| g).max()
    }

    /// Generators occurring in the word, ascending, deduplicated.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.syllables.iter().map(|&(g, _)| g).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Free reduction of a raw syllable sequence.
    pub fn reduce(raw: &[(usize, i64)]) -> Result<Self, WordError> {
        let mut out: Vec<(usize, i64)> = Vec::with_capacity(raw.len());
        for &(g, e) in raw {
            if e == 0 {
                continue;
            }
            push_syllable(&mut out, g, e)?;
        }
        Ok(Word { syllables: out })
    }

    /// Freely reduced product `self · other`.
    pub fn multiply(&self, other: &Word) -> Result<Word, WordError> {
        let mut out = self.syllables.clone();
        for &(g, e) in &other.syllables {
            push_syllable(&mut out, g, e)?;
        }
        Ok(Word { syllables: out })
    }

    pub fn inverse(&self) -> Word {
        Word {
            syllables: self
                .syllables
                .iter()
                .rev()
                .map(|&(g, e)| (g, -e))
                .collect(),
        }
    }

    /// `self^n` for small n.
    pub fn pow(&self, n: i64) -> Result<Word, WordError> {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut out = Word::identity();
        for _ in 0..n.unsigned_abs() {
            out = out.multiply(&base)?;
        }
        Ok(out)
    }

    /// Split off the maximal conjugating part: returns `(core, conjugator)`
    /// with `self = conjugator · core · conjugator⁻¹` and `core` cyclically
    /// reduced.
    pub fn cyclic_reduce(&self) -> Result<(Word, Word), WordError> {
        let mut core = self.syllables.clone();
        let mut conj: Vec<(usize, i64)> = Vec::new();
        loop {
            if core.len() < 2 {
                break;
            }
            let (g0, e0) = core[0];
            let (g1, e1) = *core.last().unwrap();
            if g0 != g1 || (e0 > 0) == (e1 > 0) {
                break;
            }
            let m = e0.abs().min(e1.abs());
            let sign = if e0 > 0 { 1 } else { -1 };
            push_syllable(&mut conj, g0, sign * m)?;
            let last = core.len() - 1;
            core[last].1 += sign * m;
            if core[last].1 == 0 {
                core.pop();
            }
            core[0].1 -= sign * m;
            if core[0].1 == 0 {
                core.remove(0);
            }
        }
        Ok((Word { syllables: core }, Word { syllables: conj }))
    }

    /// Expand into single letters `(generator, ±1)`.
    pub fn letters(&self) -> Vec<(usize, bool)> {
        let mut out = Vec::with_capacity(self.len());
        for &(g, e) in &self.syllables {
            let positive = e > 0;
            for _ in 0..e.unsigned_abs() {
                out.push((g, positive));
            }
        }
        out
    }

    /// Rebuild a word from single letters.
    pub fn from_letters(letters: &[(usize, bool)]) -> Result<Word, WordError> {
        let raw: Vec<(usize, i64)> = letters
            .iter()
            .map(|&(g, pos)| (g, if pos { 1 } else { -1 }))
            .collect();
        Word::reduce(&raw)
    }

    /// Canonical representative of the cyclic word: the lexicographically
    /// least rotation among all rotations of the cyclically reduced core and
    /// of its inverse. Letters order as `(generator, positive-before-negative)`.
    ///
    /// Two relators define the same normal closure iff their canonical forms
    /// agree, up to conjugation; this is the comparison used for relator
    /// deduplication and presentation equality checks.
    pub fn canonical_cyclic(&self) -> Result<Word, WordError> {
        let (core, _) = self.cyclic_reduce()?;
        if core.is_identity() {
            return Ok(core);
        }
        let letters = core.letters();
        let key = |l: &(usize, bool)| (l.0, !l.1);
        let mut best: Option<Vec<(usize, bool)>> = None;
        for candidate in [letters.clone(), {
            let mut inv = letters.clone();
            inv.reverse();
            inv.iter_mut().for_each(|l| l.1 = !l.1);
            inv
        }] {
            let n = candidate.len();
            for start in 0..n {
                let rot: Vec<(usize, bool)> =
                    (0..n).map(|i| candidate[(start + i) % n]).collect();
                let better = match &best {
                    None => true,
                    Some(b) => {
                        rot.iter().map(key).collect::<Vec<_>>()
                            < b.iter().map(key).collect::<Vec<_>>()
                    }
                };
                if better {
                    best = Some(rot);
                }
            }
        }
        Word::from_letters(&best.unwrap())
    }

    /// Substitute `images[g]` for each generator `g` and reduce.
    pub fn substitute(&self, images: &[Word]) -> Result<Word, WordError> {
        let mut out = Word::identity();
        for &(g, e) in &self.syllables {
            if g >= images.len() {
                return Err(WordError::BadIndex {
                    index: g,
                    size: images.len(),
                });
            }
            out = out.multiply(&images[g].pow(e)?)?;
        }
        Ok(out)
    }

    /// Total number of occurrences of `g` counted with |exponent|.
    pub fn occurrences(&self, g: usize) -> usize {
        self.syllables
            .iter()
            .filter(|&&(h, _)| h == g)
            .map(|&(_, e)| e.unsigned_abs() as usize)
            .sum()
    }

    /// Exponent sum of `g` in the word.
    pub fn exponent_sum(&self, g: usize) -> i64 {
        self.syllables
            .iter()
            .filter(|&&(h, _)| h == g)
            .map(|&(_, e)| e)
            .sum()
    }
}

fn push_syllable(out: &mut Vec<(usize, i64)>, g: usize, e: i64) -> Result<(), WordError> {
    if e == 0 {
        return Ok(());
    }
    match out.last_mut() {
        Some(&mut (h, ref mut f)) if h == g => {
            *f = f.checked_add(e).ok_or(WordError::ExponentOverflow)?;
            if *f == 0 {
                out.pop();
            }
        }
        _ => out.push((g, e)),
    }
    Ok(())
}

impl fmt::Display for Word {
    /// Index-based rendering, used in debug output; named rendering goes
    /// through [`Alphabet::display_word`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .syllables
            .iter()
            .map(|&(g, e)| {
                if e == 1 {
                    format!("g{g}")
                } else {
                    format!("g{g}^{e}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ab() -> Alphabet {
        Alphabet::new(["a", "b"]).unwrap()
    }

    #[test]
    fn reduce_cancellation() {
        let w = Word::reduce(&[(0, 1), (0, -1)]).unwrap();
        assert!(w.is_identity());
    }

    #[test]
    fn reduce_merges_syllables() {
        let w = Word::reduce(&[(0, 2), (0, 1)]).unwrap();
        assert_eq!(w.syllables(), &[(0, 3)]);
    }

    #[test]
    fn reduce_nested_cancellation() {
        let w = Word::reduce(&[(0, 1), (1, 1), (1, -1), (0, 1)]).unwrap();
        assert_eq!(w.syllables(), &[(0, 2)]);
    }

    #[test]
    fn multiply_examples() {
        let a = Word::generator(0, 1);
        let ai = Word::generator(0, -1);
        assert!(a.multiply(&ai).unwrap().is_identity());

        let ab_w = Word::reduce(&[(0, 1), (1, 1)]).unwrap();
        let bia = Word::reduce(&[(1, -1), (0, 1)]).unwrap();
        assert_eq!(ab_w.multiply(&bia).unwrap().syllables(), &[(0, 2)]);

        let w = Word::reduce(&[(1, 3), (0, -2)]).unwrap();
        assert_eq!(Word::identity().multiply(&w).unwrap(), w);
    }

    #[test]
    fn invert_examples() {
        let w = Word::reduce(&[(0, 1), (1, -1)]).unwrap();
        assert_eq!(w.inverse().syllables(), &[(1, 1), (0, -1)]);
        assert!(Word::identity().inverse().is_identity());
        assert_eq!(Word::generator(0, 3).inverse().syllables(), &[(0, -3)]);
    }

    #[test]
    fn cyclic_reduce_examples() {
        // a b a^-1
        let w = Word::reduce(&[(0, 1), (1, 1), (0, -1)]).unwrap();
        let (core, conj) = w.cyclic_reduce().unwrap();
        assert_eq!(core.syllables(), &[(1, 1)]);
        assert_eq!(conj.syllables(), &[(0, 1)]);

        // a b stays fixed
        let w = Word::reduce(&[(0, 1), (1, 1)]).unwrap();
        let (core, conj) = w.cyclic_reduce().unwrap();
        assert_eq!(core, w);
        assert!(conj.is_identity());

        // b^-1 a^2 b
        let w = Word::reduce(&[(1, -1), (0, 2), (1, 1)]).unwrap();
        let (core, conj) = w.cyclic_reduce().unwrap();
        assert_eq!(core.syllables(), &[(0, 2)]);
        assert_eq!(conj.syllables(), &[(1, -1)]);
    }

    #[test]
    fn cyclic_reduce_partial_syllable() {
        // a^3 b a^-1 = a · (a^2 b) · a^-1
        let w = Word::reduce(&[(0, 3), (1, 1), (0, -1)]).unwrap();
        let (core, conj) = w.cyclic_reduce().unwrap();
        assert_eq!(conj.syllables(), &[(0, 1)]);
        assert_eq!(core.syllables(), &[(0, 2), (1, 1)]);
        let back = conj
            .multiply(&core)
            .unwrap()
            .multiply(&conj.inverse())
            .unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn parse_and_display_roundtrip() {
        let a = ab();
        let w = a.parse_word("a b^-1 a^3").unwrap();
        assert_eq!(a.display_word(&w), "a b^-1 a^3");
        assert!(a.parse_word("1").unwrap().is_identity());
        assert_eq!(a.display_word(&Word::identity()), "1");
        // reduction happens on parse
        let w = a.parse_word("a a^-1").unwrap();
        assert!(w.is_identity());
    }

    #[test]
    fn parse_errors_carry_position() {
        let a = ab();
        match a.parse_word("a c") {
            Err(WordError::Syntax { pos, .. }) => assert_eq!(pos, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(a.parse_word("a^0").is_err());
        assert!(a.parse_word("").is_err());
    }

    #[test]
    fn alphabet_rejects_bad_input() {
        assert!(Alphabet::new(["a", "a"]).is_err());
        assert!(Alphabet::new(["1x"]).is_err());
        assert!(Alphabet::new(["x y"]).is_err());
    }

    #[test]
    fn overflow_is_an_error() {
        let w = Word::generator(0, i64::MAX);
        assert_eq!(
            w.multiply(&Word::generator(0, 1)),
            Err(WordError::ExponentOverflow)
        );
    }

    #[test]
    fn canonical_cyclic_identifies_rotations_and_inverses() {
        let a = ab();
        let w1 = a.parse_word("a b a b").unwrap();
        let w2 = a.parse_word("b a b a").unwrap();
        let w3 = a.parse_word("b^-1 a^-1 b^-1 a^-1").unwrap();
        let c1 = w1.canonical_cyclic().unwrap();
        assert_eq!(c1, w2.canonical_cyclic().unwrap());
        assert_eq!(c1, w3.canonical_cyclic().unwrap());
    }

    fn arb_raw() -> impl Strategy<Value = Vec<(usize, i64)>> {
        prop::collection::vec((0usize..3, -4i64..=4), 0..12)
    }

    proptest! {
        #[test]
        fn reduce_is_idempotent(raw in arb_raw()) {
            let w = Word::reduce(&raw).unwrap();
            let again = Word::reduce(w.syllables()).unwrap();
            prop_assert_eq!(w, again);
        }

        #[test]
        fn invert_is_involution(raw in arb_raw()) {
            let w = Word::reduce(&raw).unwrap();
            prop_assert_eq!(w.inverse().inverse(), w);
        }

        #[test]
        fn multiply_inverse_is_identity(raw in arb_raw()) {
            let w = Word::reduce(&raw).unwrap();
            prop_assert!(w.multiply(&w.inverse()).unwrap().is_identity());
        }

        #[test]
        fn multiply_associative(r1 in arb_raw(), r2 in arb_raw(), r3 in arb_raw()) {
            let u = Word::reduce(&r1).unwrap();
            let v = Word::reduce(&r2).unwrap();
            let w = Word::reduce(&r3).unwrap();
            let left = u.multiply(&v).unwrap().multiply(&w).unwrap();
            let right = u.multiply(&v.multiply(&w).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn length_subadditive(r1 in arb_raw(), r2 in arb_raw()) {
            let u = Word::reduce(&r1).unwrap();
            let v = Word::reduce(&r2).unwrap();
            prop_assert!(u.multiply(&v).unwrap().len() <= u.len() + v.len());
        }

        #[test]
        fn cyclic_reduce_is_conjugation(raw in arb_raw()) {
            let w = Word::reduce(&raw).unwrap();
            let (core, conj) = w.cyclic_reduce().unwrap();
            let back = conj.multiply(&core).unwrap().multiply(&conj.inverse()).unwrap();
            prop_assert_eq!(back, w);
            // core is cyclically reduced
            if core.syllables().len() >= 2 {
                let first = core.syllables()[0];
                let last = *core.syllables().last().unwrap();
                prop_assert!(first.0 != last.0 || (first.1 > 0) == (last.1 > 0));
            }
        }
    }
}
