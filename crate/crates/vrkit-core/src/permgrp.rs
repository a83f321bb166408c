//! Permutation arithmetic and small finite groups by exhaustive closure.
//!
//! Composition is left to right throughout: `(p·q)(i) = q(p(i))`. The
//! appendix homomorphism data is only correct under this convention, so it
//! is fixed globally and guarded by tests.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::fpgroup::Presentation;
use crate::words::Word;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PermError {
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("images are not a bijection of 1..{0}")]
    NotBijective(usize),
    #[error("cycle notation error at byte {pos}: {msg}")]
    CycleSyntax { pos: usize, msg: String },
    #[error("closure exceeded cap of {0} elements")]
    ClosureCapExceeded(usize),
    #[error("expected one image per generator: {expected} generators, {got} images")]
    ImageCount { expected: usize, got: usize },
    #[error("relator `{relator}` is not killed by the images")]
    RelatorNotKilled { relator: String },
    #[error("subgroup elements are not closed under composition")]
    SubgroupNotClosed,
    #[error("subgroup element not contained in group element list")]
    SubgroupNotContained,
    #[error("element list does not contain the identity at a valid position")]
    BadElementList,
}

/// Permutation of `{1..n}`, stored 0-indexed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(degree: usize) -> Self {
        Permutation {
            images: (0..degree).collect(),
        }
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self, PermError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(PermError::NotBijective(n));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    /// Build from 1-based cycles, e.g. `&[&[1,2,3],&[4,5]]`.
    pub fn from_cycles(degree: usize, cycles: &[&[usize]]) -> Result<Self, PermError> {
        let mut images: Vec<usize> = (0..degree).collect();
        for cycle in cycles {
            for w in 0..cycle.len() {
                let from = cycle[w];
                let to = cycle[(w + 1) % cycle.len()];
                if from == 0 || from > degree || to == 0 || to > degree {
                    return Err(PermError::NotBijective(degree));
                }
                images[from - 1] = to - 1;
            }
        }
        Permutation::from_images(images)
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    /// 0-indexed application.
    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Left-to-right product: `(self·other)(i) = other(self(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation, PermError> {
        if self.degree() != other.degree() {
            return Err(PermError::DegreeMismatch(self.degree(), other.degree()));
        }
        Ok(Permutation {
            images: self.images.iter().map(|&i| other.images[i]).collect(),
        })
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0; self.degree()];
        for (i, &j) in self.images.iter().enumerate() {
            images[j] = i;
        }
        Permutation { images }
    }

    pub fn order(&self) -> u64 {
        let mut p = self.clone();
        let mut n = 1;
        while !p.is_identity() {
            p = p.compose(self).expect("same degree");
            n += 1;
        }
        n
    }

    /// Cycle notation with 1-based points; the identity prints as `()`.
    pub fn cycle_string(&self) -> String {
        let n = self.degree();
        let mut seen = vec![false; n];
        let mut out = String::new();
        for start in 0..n {
            if seen[start] || self.images[start] == start {
                continue;
            }
            out.push('(');
            let mut i = start;
            let mut first = true;
            loop {
                if !first {
                    out.push(' ');
                }
                out.push_str(&(i + 1).to_string());
                seen[i] = true;
                first = false;
                i = self.images[i];
                if i == start {
                    break;
                }
            }
            out.push(')');
        }
        if out.is_empty() {
            out.push_str("()");
        }
        out
    }

    /// Parse cycle notation `(1 2 3)(4 5)`; `()` is the identity. Commas are
    /// accepted as separators inside cycles.
    pub fn parse_cycles(degree: usize, text: &str) -> Result<Self, PermError> {
        let mut images: Vec<usize> = (0..degree).collect();
        let bytes = text.as_bytes();
        let mut pos = 0;
        let mut any = false;
        while pos < bytes.len() {
            let c = bytes[pos] as char;
            if c.is_whitespace() {
                pos += 1;
                continue;
            }
            if c != '(' {
                return Err(PermError::CycleSyntax {
                    pos,
                    msg: format!("expected `(`, found `{c}`"),
                });
            }
            let close = text[pos..].find(')').map(|o| pos + o).ok_or_else(|| {
                PermError::CycleSyntax {
                    pos,
                    msg: "unclosed cycle".into(),
                }
            })?;
            let inner = &text[pos + 1..close];
            let points: Vec<usize> = inner
                .split(|ch: char| ch.is_whitespace() || ch == ',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<usize>().map_err(|_| PermError::CycleSyntax {
                        pos,
                        msg: format!("bad point `{s}`"),
                    })
                })
                .collect::<Result<_, _>>()?;
            for w in 0..points.len() {
                let from = points[w];
                let to = points[(w + 1) % points.len()];
                if from == 0 || from > degree || to == 0 || to > degree {
                    return Err(PermError::CycleSyntax {
                        pos,
                        msg: format!("point out of range 1..{degree}"),
                    });
                }
                images[from - 1] = to - 1;
            }
            any = true;
            pos = close + 1;
        }
        if !any {
            return Err(PermError::CycleSyntax {
                pos: 0,
                msg: "empty input (use `()` for the identity)".into(),
            });
        }
        Permutation::from_images(images)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.cycle_string())
    }
}

pub const DEFAULT_CLOSURE_CAP: usize = 100_000;

/// Breadth-first closure of `⟨gens⟩` in deterministic discovery order:
/// identity first, then products `elements[i]·gens[j]` scanned in order.
pub fn closure(gens: &[Permutation], cap: usize) -> Result<Vec<Permutation>, PermError> {
    let degree = gens.first().map_or(0, Permutation::degree);
    for g in gens {
        if g.degree() != degree {
            return Err(PermError::DegreeMismatch(degree, g.degree()));
        }
    }
    let id = Permutation::identity(degree);
    let mut elements = vec![id.clone()];
    let mut seen: HashMap<Permutation, usize> = HashMap::new();
    seen.insert(id, 0);
    let mut i = 0;
    while i < elements.len() {
        for g in gens {
            let next = elements[i].compose(g)?;
            if !seen.contains_key(&next) {
                if elements.len() >= cap {
                    return Err(PermError::ClosureCapExceeded(cap));
                }
                seen.insert(next.clone(), elements.len());
                elements.push(next);
            }
        }
        i += 1;
    }
    Ok(elements)
}

/// Small permutation group with optional exhaustive element list.
#[derive(Debug, Clone)]
pub struct PermGroup {
    pub name: String,
    pub degree: usize,
    pub generators: Vec<Permutation>,
    pub elements: Option<Vec<Permutation>>,
}

impl PermGroup {
    pub fn from_generators(
        name: impl Into<String>,
        degree: usize,
        generators: Vec<Permutation>,
    ) -> Result<Self, PermError> {
        for g in &generators {
            if g.degree() != degree {
                return Err(PermError::DegreeMismatch(degree, g.degree()));
            }
        }
        Ok(PermGroup {
            name: name.into(),
            degree,
            generators,
            elements: None,
        })
    }

    /// Compute and cache the exhaustive element list.
    pub fn with_elements(mut self, cap: usize) -> Result<Self, PermError> {
        if self.elements.is_none() {
            if self.generators.is_empty() {
                self.elements = Some(vec![Permutation::identity(self.degree)]);
            } else {
                self.elements = Some(closure(&self.generators, cap)?);
            }
        }
        Ok(self)
    }

    pub fn order(&self) -> Option<usize> {
        self.elements.as_ref().map(Vec::len)
    }

    pub fn elements(&self) -> &[Permutation] {
        self.elements
            .as_ref()
            .expect("element list not materialized; call with_elements")
    }

    /// Alternating group on `n` points, generated by consecutive 3-cycles.
    pub fn alternating(n: usize) -> Self {
        assert!(n >= 3, "A_n needs n >= 3");
        let gens: Vec<Permutation> = (0..n - 2)
            .map(|i| Permutation::from_cycles(n, &[&[i + 1, i + 2, i + 3]]).unwrap())
            .collect();
        PermGroup {
            name: format!("A{n}"),
            degree: n,
            generators: gens,
            elements: None,
        }
    }

    /// Symmetric group on `n` points, generated by a transposition and an
    /// n-cycle.
    pub fn symmetric(n: usize) -> Self {
        assert!(n >= 2, "S_n needs n >= 2");
        let mut gens = vec![Permutation::from_cycles(n, &[&[1, 2]]).unwrap()];
        if n > 2 {
            let long: Vec<usize> = (1..=n).collect();
            gens.push(Permutation::from_cycles(n, &[&long]).unwrap());
        }
        PermGroup {
            name: format!("S{n}"),
            degree: n,
            generators: gens,
            elements: None,
        }
    }

    /// Cyclic group of order `n` as the n-cycle on `n` points.
    pub fn cyclic(n: usize) -> Self {
        assert!(n >= 1);
        let gens = if n == 1 {
            vec![]
        } else {
            let long: Vec<usize> = (1..=n).collect();
            vec![Permutation::from_cycles(n, &[&long]).unwrap()]
        };
        PermGroup {
            name: format!("Z{n}"),
            degree: n.max(1),
            generators: gens,
            elements: None,
        }
    }

    /// Resolve the CLI target names: `A4`, `A5`, `S3`..`S5`, `Z2`..`Z12`.
    pub fn from_name(name: &str) -> Option<Self> {
        let (kind, num) = name.split_at(1);
        let n: usize = num.parse().ok()?;
        match kind {
            "A" if n >= 3 => Some(PermGroup::alternating(n)),
            "S" if n >= 2 => Some(PermGroup::symmetric(n)),
            "Z" if n >= 1 => Some(PermGroup::cyclic(n)),
            _ => None,
        }
    }
}

/// Validated homomorphism from a finite presentation to a permutation group.
#[derive(Debug, Clone)]
pub struct GroupHom {
    pub domain: Presentation,
    pub degree: usize,
    pub images: Vec<Permutation>,
}

impl GroupHom {
    /// Evaluate a word under the generator images, left to right.
    pub fn apply(&self, w: &Word) -> Permutation {
        apply_word(w, &self.images, self.degree)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.domain
                .alphabet()
                .names()
                .iter()
                .zip(&self.images)
                .map(|(name, p)| {
                    (
                        name.clone(),
                        serde_json::Value::String(p.cycle_string()),
                    )
                })
                .collect(),
        )
    }
}

pub fn apply_word(w: &Word, images: &[Permutation], degree: usize) -> Permutation {
    let mut out = Permutation::identity(degree);
    for &(g, e) in w.syllables() {
        let base = if e > 0 {
            images[g].clone()
        } else {
            images[g].inverse()
        };
        for _ in 0..e.unsigned_abs() {
            out = out.compose(&base).expect("same degree");
        }
    }
    out
}

/// Check that every relator dies under the images; reports the first
/// offending relator by name.
pub fn validate_hom(p: &Presentation, images: &[Permutation]) -> Result<GroupHom, PermError> {
    if images.len() != p.generator_count() {
        return Err(PermError::ImageCount {
            expected: p.generator_count(),
            got: images.len(),
        });
    }
    let degree = images.first().map_or(0, Permutation::degree);
    for img in images {
        if img.degree() != degree {
            return Err(PermError::DegreeMismatch(degree, img.degree()));
        }
    }
    for r in p.relators() {
        if !apply_word(r, images, degree).is_identity() {
            return Err(PermError::RelatorNotKilled {
                relator: p.alphabet().display_word(r),
            });
        }
    }
    Ok(GroupHom {
        domain: p.clone(),
        degree,
        images: images.to_vec(),
    })
}

/// True iff the image of `⟨subgroup_words⟩` has exactly `expected_order`
/// elements, i.e. the homomorphism restricted to that subgroup is injective
/// (the caller supplies the abstract order).
pub fn injective_on(
    h: &GroupHom,
    subgroup_words: &[Word],
    expected_order: u64,
    cap: usize,
) -> Result<bool, PermError> {
    let images: Vec<Permutation> = subgroup_words.iter().map(|w| h.apply(w)).collect();
    let closure = if images.is_empty() {
        vec![Permutation::identity(h.degree)]
    } else {
        closure(&images, cap)?
    };
    Ok(closure.len() as u64 == expected_order)
}

/// Right-coset action data: cosets of a subgroup with one permutation of the
/// cosets per supplied group generator. Coset 0 is the subgroup itself;
/// numbering is by minimal representative in element-list order.
#[derive(Debug, Clone)]
pub struct CosetAction {
    pub num_cosets: usize,
    /// index of each element's coset, parallel to the input element list
    pub coset_of: Vec<usize>,
    /// one permutation of `{0..num_cosets-1}` per generator
    pub gen_images: Vec<Permutation>,
    /// representative element index (into the input list) per coset
    pub representatives: Vec<usize>,
}

/// Decompose `group_elements` into right cosets of `subgroup_elements` and
/// return the action of each `gens[i]` on the cosets by right multiplication.
pub fn coset_action(
    group_elements: &[Permutation],
    subgroup_elements: &[Permutation],
    gens: &[Permutation],
) -> Result<CosetAction, PermError> {
    let index_of: HashMap<&Permutation, usize> = group_elements
        .iter()
        .enumerate()
        .map(|(i, p)| (p, i))
        .collect();
    // subgroup sanity: contained and closed
    let mut sub_idx = Vec::with_capacity(subgroup_elements.len());
    for s in subgroup_elements {
        match index_of.get(s) {
            Some(&i) => sub_idx.push(i),
            None => return Err(PermError::SubgroupNotContained),
        }
    }
    for a in subgroup_elements {
        for b in subgroup_elements {
            let ab = a.compose(b)?;
            if !subgroup_elements.contains(&ab) {
                return Err(PermError::SubgroupNotClosed);
            }
        }
    }
    // right coset of x is Hx: scan elements in order, assign cosets greedily
    let n = group_elements.len();
    let mut coset_of: Vec<Option<usize>> = vec![None; n];
    let mut representatives = Vec::new();
    for i in 0..n {
        if coset_of[i].is_some() {
            continue;
        }
        let c = representatives.len();
        representatives.push(i);
        for h in subgroup_elements {
            let hx = h.compose(&group_elements[i])?;
            let j = *index_of
                .get(&hx)
                .ok_or(PermError::SubgroupNotContained)?;
            coset_of[j] = Some(c);
        }
    }
    let coset_of: Vec<usize> = coset_of.into_iter().map(Option::unwrap).collect();
    let num_cosets = representatives.len();
    let mut gen_images = Vec::with_capacity(gens.len());
    for g in gens {
        let mut images = vec![0usize; num_cosets];
        for (c, &rep) in representatives.iter().enumerate() {
            let xg = group_elements[rep].compose(g)?;
            let j = *index_of.get(&xg).ok_or(PermError::SubgroupNotContained)?;
            images[c] = coset_of[j];
        }
        gen_images.push(Permutation::from_images(images)?);
    }
    Ok(CosetAction {
        num_cosets,
        coset_of,
        gen_images,
        representatives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpgroup::Presentation;

    fn perm(degree: usize, s: &str) -> Permutation {
        Permutation::parse_cycles(degree, s).unwrap()
    }

    #[test]
    fn composition_convention_is_left_to_right() {
        // (1 2 3)·(1 2) = (2 3): guards against right-to-left regressions
        let p = perm(3, "(1 2 3)");
        let q = perm(3, "(1 2)");
        assert_eq!(p.compose(&q).unwrap(), perm(3, "(2 3)"));
    }

    #[test]
    fn compose_inverse_and_identity() {
        let p = perm(5, "(1 4 2)(3 5)");
        assert!(p.compose(&p.inverse()).unwrap().is_identity());
        let id = Permutation::identity(5);
        assert_eq!(id.compose(&p).unwrap(), p);
    }

    #[test]
    fn cycle_string_roundtrip() {
        let p = perm(5, "(1 2 3)(4 5)");
        assert_eq!(p.cycle_string(), "(1 2 3)(4 5)");
        assert_eq!(Permutation::identity(4).cycle_string(), "()");
        assert!(Permutation::parse_cycles(3, "(1 2").is_err());
        assert!(Permutation::parse_cycles(3, "(1 4)").is_err());
    }

    #[test]
    fn closure_a4_and_a5() {
        let a4 = closure(
            &[perm(4, "(1 2 3)"), perm(4, "(2 3 4)")],
            DEFAULT_CLOSURE_CAP,
        )
        .unwrap();
        assert_eq!(a4.len(), 12);
        let a5 = closure(
            &[perm(5, "(1 2 3)"), perm(5, "(2 3 4)"), perm(5, "(3 4 5)")],
            DEFAULT_CLOSURE_CAP,
        )
        .unwrap();
        assert_eq!(a5.len(), 60);
        // closure is closed
        for x in a5.iter().take(10) {
            for y in a5.iter().take(10) {
                assert!(a5.contains(&x.compose(y).unwrap()));
            }
        }
        let trivial = closure(&[], 10).unwrap_or_else(|_| vec![Permutation::identity(0)]);
        assert_eq!(trivial.len(), 1);
    }

    #[test]
    fn closure_cap_errors() {
        let p = perm(6, "(1 2 3 4 5 6)");
        assert!(matches!(
            closure(&[p], 3),
            Err(PermError::ClosureCapExceeded(3))
        ));
    }

    #[test]
    fn named_groups() {
        assert_eq!(
            PermGroup::alternating(5)
                .with_elements(DEFAULT_CLOSURE_CAP)
                .unwrap()
                .order(),
            Some(60)
        );
        assert_eq!(
            PermGroup::symmetric(4)
                .with_elements(DEFAULT_CLOSURE_CAP)
                .unwrap()
                .order(),
            Some(24)
        );
        assert_eq!(
            PermGroup::cyclic(7)
                .with_elements(DEFAULT_CLOSURE_CAP)
                .unwrap()
                .order(),
            Some(7)
        );
        assert!(PermGroup::from_name("A5").is_some());
        assert!(PermGroup::from_name("Q8").is_none());
    }

    fn g_simplified() -> Presentation {
        Presentation::parse(
            &["a1", "a2", "b1", "b2", "t"],
            &[
                "a1^3", "a2^3", "a1 a2 a1 a2",
                "b1^3", "b2^3", "b1 b2 b1 b2",
                "a1 b1 b2 a1 b1 b2", "t a1 t^-1 b1^-1",
            ],
        )
        .unwrap()
    }

    /// The appendix homomorphism ψ: G → A5.
    fn psi() -> Vec<Permutation> {
        vec![
            perm(5, "(1 2 3)"),
            perm(5, "(2 3 4)"),
            perm(5, "(2 4 3)"),
            perm(5, "(3 5 4)"),
            perm(5, "(1 4 2)"),
        ]
    }

    #[test]
    fn psi_validates_on_g() {
        let h = validate_hom(&g_simplified(), &psi()).unwrap();
        assert_eq!(h.images.len(), 5);
    }

    #[test]
    fn phi_validates_on_g0_short_form() {
        let g0 = Presentation::parse(
            &["f1", "f2", "ft3", "f4", "f5", "f6", "f7"],
            &["f1^3", "f2^3", "ft3^3", "f1 f2 f1 f2", "f1 ft3 f1 ft3"],
        )
        .unwrap();
        let id = Permutation::identity(5);
        let images = vec![
            perm(5, "(2 3 4)"),
            perm(5, "(1 2 3)"),
            perm(5, "(3 4 5)"),
            id.clone(),
            id.clone(),
            id.clone(),
            id,
        ];
        validate_hom(&g0, &images).unwrap();
    }

    #[test]
    fn bad_hom_reports_the_relator() {
        let a4 = Presentation::parse(&["a1", "a2"], &["a1^3", "a2^3", "a1 a2 a1 a2"]).unwrap();
        let err = validate_hom(&a4, &[perm(4, "(1 2)"), perm(4, "(2 3 4)")]).unwrap_err();
        assert_eq!(
            err,
            PermError::RelatorNotKilled {
                relator: "a1^3".into()
            }
        );
    }

    #[test]
    fn injectivity_orders_from_the_appendix() {
        let p = g_simplified();
        let h = validate_hom(&p, &psi()).unwrap();
        let w = |s: &str| p.alphabet().parse_word(s).unwrap();
        // V1 = ⟨a1, a2⟩ of order 12, V2 = ⟨b1, b2⟩ of order 12,
        // V3 = ⟨a1, b1 b2⟩ of order 6
        assert!(injective_on(&h, &[w("a1"), w("a2")], 12, DEFAULT_CLOSURE_CAP).unwrap());
        assert!(injective_on(&h, &[w("b1"), w("b2")], 12, DEFAULT_CLOSURE_CAP).unwrap());
        assert!(injective_on(&h, &[w("a1"), w("b1 b2")], 6, DEFAULT_CLOSURE_CAP).unwrap());
        // trivial subgroup
        assert!(injective_on(&h, &[], 1, DEFAULT_CLOSURE_CAP).unwrap());
        // wrong orders fail
        assert!(!injective_on(&h, &[w("a1"), w("a2")], 6, DEFAULT_CLOSURE_CAP).unwrap());
    }

    #[test]
    fn coset_action_on_a5_point_stabilizer() {
        let a5 = PermGroup::alternating(5)
            .with_elements(DEFAULT_CLOSURE_CAP)
            .unwrap();
        // stabilizer of point 1 = ⟨(2 4 3), (3 5 4)⟩ (the appendix ψ(V2))
        let stab = closure(
            &[perm(5, "(2 4 3)"), perm(5, "(3 5 4)")],
            DEFAULT_CLOSURE_CAP,
        )
        .unwrap();
        assert_eq!(stab.len(), 12);
        let action = coset_action(a5.elements(), &stab, &a5.generators).unwrap();
        assert_eq!(action.num_cosets, 5);
        // the induced generators still satisfy the A5 generator relations
        for g in &action.gen_images {
            assert_eq!(g.order() % 3, 0);
        }
    }

    #[test]
    fn coset_action_edge_cases() {
        let s3 = PermGroup::symmetric(3)
            .with_elements(DEFAULT_CLOSURE_CAP)
            .unwrap();
        // whole group: one coset
        let whole = coset_action(s3.elements(), s3.elements(), &s3.generators).unwrap();
        assert_eq!(whole.num_cosets, 1);
        // trivial subgroup: regular action
        let trivial = vec![Permutation::identity(3)];
        let reg = coset_action(s3.elements(), &trivial, &s3.generators).unwrap();
        assert_eq!(reg.num_cosets, 6);
        // the regular action is faithful and transitive from coset 0
        let mut reach = vec![false; 6];
        reach[0] = true;
        let mut frontier = vec![0usize];
        while let Some(c) = frontier.pop() {
            for g in &reg.gen_images {
                let d = g.apply(c);
                if !reach[d] {
                    reach[d] = true;
                    frontier.push(d);
                }
            }
        }
        assert!(reach.iter().all(|&r| r));
    }

    #[test]
    fn coset_action_rejects_bad_subgroups() {
        let s3 = PermGroup::symmetric(3)
            .with_elements(DEFAULT_CLOSURE_CAP)
            .unwrap();
        let not_closed = vec![Permutation::identity(3), perm(3, "(1 2 3)")];
        assert!(matches!(
            coset_action(s3.elements(), &not_closed, &s3.generators),
            Err(PermError::SubgroupNotClosed)
        ));
    }
}
