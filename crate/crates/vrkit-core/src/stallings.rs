//! Subgroup graphs of free groups: Stallings foldings, membership, basis
//! extraction, and the completion of a folded core graph to a finite-sheeted
//! cover of the rose — the constructive step realizing a finitely generated
//! subgroup as a free factor of a finite-index subgroup, together with an
//! explicit retraction.
//!
//! Graphs are stored as per-vertex out/in adjacency by label. A graph is
//! folded when every vertex has at most one outgoing and one incoming edge
//! per label; construction always returns the folded core graph renumbered
//! canonically by BFS from the base vertex, so equal subgroups produce equal
//! structures.

use std::collections::HashMap;

use thiserror::Error;

use crate::words::{Alphabet, Word, WordError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StallingsError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("label {label} out of range for rank {rank}")]
    BadLabel { label: usize, rank: usize },
    #[error("graph is not a covering of the rose: vertex {vertex} is missing a `{dir}` edge for label {label}")]
    NotACovering {
        vertex: usize,
        label: usize,
        dir: &'static str,
    },
    #[error("graph JSON: {0}")]
    Json(String),
}

/// Folded, based, edge-labeled graph whose reduced loops at the base spell
/// the elements of a subgroup of the free group of the given rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StallingsGraph {
    rank: usize,
    /// out[v][label] / in_[v][label]
    out: Vec<Vec<Option<usize>>>,
    in_: Vec<Vec<Option<usize>>>,
    base: usize,
}

impl StallingsGraph {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn vertex_count(&self) -> usize {
        self.out.len()
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn out_edge(&self, v: usize, label: usize) -> Option<usize> {
        self.out[v][label]
    }

    pub fn in_edge(&self, v: usize, label: usize) -> Option<usize> {
        self.in_[v][label]
    }

    /// Directed edges as (source, target, label), sorted.
    pub fn edges(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for v in 0..self.out.len() {
            for label in 0..self.rank {
                if let Some(w) = self.out[v][label] {
                    out.push((v, w, label));
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.out
            .iter()
            .map(|row| row.iter().filter(|e| e.is_some()).count())
            .sum()
    }

    /// True iff the word labels a closed loop at the base vertex.
    pub fn membership(&self, w: &Word) -> bool {
        let mut v = self.base;
        for (label, positive) in w.letters() {
            if label >= self.rank {
                return false;
            }
            let next = if positive {
                self.out[v][label]
            } else {
                self.in_[v][label]
            };
            match next {
                Some(u) => v = u,
                None => return false,
            }
        }
        v == self.base
    }

    /// BFS spanning tree from the base: for each vertex, the (reduced) word
    /// labeling the tree path from base. Scan order per vertex: label
    /// ascending, outgoing before incoming.
    fn spanning_tree(&self) -> (Vec<Word>, Vec<Option<(usize, usize, bool)>>) {
        let n = self.vertex_count();
        let mut path: Vec<Option<Word>> = vec![None; n];
        let mut tree_edge: Vec<Option<(usize, usize, bool)>> = vec![None; n];
        path[self.base] = Some(Word::identity());
        let mut queue = std::collections::VecDeque::from([self.base]);
        while let Some(v) = queue.pop_front() {
            let base_word = path[v].clone().unwrap();
            for label in 0..self.rank {
                if let Some(w) = self.out[v][label] {
                    if path[w].is_none() {
                        path[w] = Some(
                            base_word
                                .multiply(&Word::generator(label, 1))
                                .expect("short word"),
                        );
                        tree_edge[w] = Some((v, label, true));
                        queue.push_back(w);
                    }
                }
                if let Some(w) = self.in_[v][label] {
                    if path[w].is_none() {
                        path[w] = Some(
                            base_word
                                .multiply(&Word::generator(label, -1))
                                .expect("short word"),
                        );
                        tree_edge[w] = Some((v, label, false));
                        queue.push_back(w);
                    }
                }
            }
        }
        (
            path.into_iter()
                .map(|p| p.expect("graph connected"))
                .collect(),
            tree_edge,
        )
    }

    /// Free basis of the subgroup: one word per non-tree edge,
    /// `path(base→u) · label · path(v→base)`.
    pub fn basis(&self) -> Vec<Word> {
        let (paths, tree_edge) = self.spanning_tree();
        // a tree edge (u --label--> w) is recorded on the discovered vertex
        let mut is_tree = vec![vec![false; self.rank]; self.vertex_count()];
        for (w, te) in tree_edge.iter().enumerate() {
            if let Some((u, label, forward)) = te {
                if *forward {
                    is_tree[*u][*label] = true;
                } else {
                    is_tree[w][*label] = true;
                }
            }
        }
        let mut out = Vec::new();
        for u in 0..self.vertex_count() {
            for label in 0..self.rank {
                if let Some(v) = self.out[u][label] {
                    if is_tree[u][label] {
                        continue;
                    }
                    let w = paths[u]
                        .multiply(&Word::generator(label, 1))
                        .and_then(|x| x.multiply(&paths[v].inverse()))
                        .expect("basis word");
                    out.push(w);
                }
            }
        }
        out
    }

    /// Degree check for covers of the rose: every vertex carries exactly one
    /// outgoing and one incoming edge per label.
    pub fn cover_index(&self) -> Result<usize, StallingsError> {
        for v in 0..self.vertex_count() {
            for label in 0..self.rank {
                if self.out[v][label].is_none() {
                    return Err(StallingsError::NotACovering {
                        vertex: v,
                        label,
                        dir: "outgoing",
                    });
                }
                if self.in_[v][label].is_none() {
                    return Err(StallingsError::NotACovering {
                        vertex: v,
                        label,
                        dir: "incoming",
                    });
                }
            }
        }
        Ok(self.vertex_count())
    }

    /// Canonical renumbering: BFS from base with the spanning-tree scan
    /// order. Isomorphic based labeled graphs become equal.
    fn canonicalize(&self) -> StallingsGraph {
        let n = self.vertex_count();
        let mut order_map = vec![usize::MAX; n];
        order_map[self.base] = 0;
        let mut bfs = vec![self.base];
        let mut head = 0;
        while head < bfs.len() {
            let v = bfs[head];
            head += 1;
            for label in 0..self.rank {
                for next in [self.out[v][label], self.in_[v][label]]
                    .into_iter()
                    .flatten()
                {
                    if order_map[next] == usize::MAX {
                        order_map[next] = bfs.len();
                        bfs.push(next);
                    }
                }
            }
        }
        debug_assert_eq!(bfs.len(), n, "core graph must be connected");
        let mut out = vec![vec![None; self.rank]; n];
        let mut in_ = vec![vec![None; self.rank]; n];
        for v in 0..n {
            for label in 0..self.rank {
                if let Some(w) = self.out[v][label] {
                    out[order_map[v]][label] = Some(order_map[w]);
                }
                if let Some(w) = self.in_[v][label] {
                    in_[order_map[v]][label] = Some(order_map[w]);
                }
            }
        }
        StallingsGraph {
            rank: self.rank,
            out,
            in_,
            base: 0,
        }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let labels: Vec<String> = (0..self.rank).map(default_label).collect();
        serde_json::json!({
            "vertices": self.vertex_count(),
            "base": self.base,
            "edges": self.edges().iter()
                .map(|&(s, t, l)| serde_json::json!([s, t, labels[l]]))
                .collect::<Vec<_>>(),
        })
    }
}

fn default_label(i: usize) -> String {
    // a, b, c, ... x1, x2 beyond 26
    if i < 26 {
        ((b'a' + i as u8) as char).to_string()
    } else {
        format!("x{}", i - 25)
    }
}

/// Alphabet used for rendering rank-`n` subgroup data.
pub fn rose_alphabet(rank: usize) -> Alphabet {
    Alphabet::new((0..rank).map(default_label)).expect("default labels are valid")
}

/// Mutable multi-graph used during construction, folded via union-find.
struct Builder {
    rank: usize,
    parent: Vec<usize>,
    /// directed labeled edges (src, dst, label); duplicates allowed pre-fold
    edges: Vec<(usize, usize, usize)>,
}

impl Builder {
    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let a = self.find(a);
        let b = self.find(b);
        if a != b {
            self.parent[a.max(b)] = a.min(b);
        }
    }

    fn new_vertex(&mut self) -> usize {
        let v = self.parent.len();
        self.parent.push(v);
        v
    }

    /// Repeated identification of same-label edges sharing an endpoint.
    /// `order` permutes the scan so fold confluence can be exercised.
    fn fold(&mut self, order: Option<&[usize]>) {
        loop {
            // resolve endpoints and drop exact duplicates
            let mut resolved: Vec<(usize, usize, usize)> = Vec::with_capacity(self.edges.len());
            for i in 0..self.edges.len() {
                let (s, t, l) = self.edges[i];
                let e = (self.find(s), self.find(t), l);
                resolved.push(e);
            }
            let scan: Vec<usize> = match order {
                Some(ord) => ord
                    .iter()
                    .copied()
                    .filter(|&i| i < resolved.len())
                    .chain(0..resolved.len())
                    .collect(),
                None => (0..resolved.len()).collect(),
            };
            let mut by_src: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
            let mut by_dst: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
            let mut merged = false;
            'outer: for &i in &scan {
                let (s, t, l) = resolved[i];
                if let Some(&(_, t2)) = by_src.get(&(s, l)) {
                    if t != t2 {
                        self.union(t, t2);
                        merged = true;
                        break 'outer;
                    }
                } else {
                    by_src.insert((s, l), (i, t));
                }
                if let Some(&(_, s2)) = by_dst.get(&(t, l)) {
                    if s != s2 {
                        self.union(s, s2);
                        merged = true;
                        break 'outer;
                    }
                } else {
                    by_dst.insert((t, l), (i, s));
                }
            }
            if !merged {
                // deduplicate and finish
                let mut seen = std::collections::HashSet::new();
                self.edges = resolved
                    .into_iter()
                    .filter(|e| seen.insert(*e))
                    .collect();
                return;
            }
        }
    }

    /// Remove degree-≤1 vertices other than the base until the graph is core.
    fn trim(&mut self, base: usize) {
        loop {
            let base_r = self.find(base);
            let mut degree: HashMap<usize, usize> = HashMap::new();
            for i in 0..self.edges.len() {
                let (s, t, _) = self.edges[i];
                let (s, t) = (self.find(s), self.find(t));
                *degree.entry(s).or_insert(0) += 1;
                *degree.entry(t).or_insert(0) += 1;
            }
            let endpoints: Vec<usize> = self
                .edges
                .clone()
                .iter()
                .flat_map(|&(s, t, _)| [s, t])
                .map(|v| self.find(v))
                .collect();
            let victim: Option<usize> = endpoints
                .into_iter()
                .find(|&v| v != base_r && degree.get(&v).copied().unwrap_or(0) <= 1);
            match victim {
                Some(v) => {
                    let before = self.edges.len();
                    let mut kept = Vec::with_capacity(before);
                    for i in 0..self.edges.len() {
                        let (s, t, l) = self.edges[i];
                        let e = (self.find(s), self.find(t), l);
                        if e.0 != v && e.1 != v {
                            kept.push(e);
                        }
                    }
                    self.edges = kept;
                    if self.edges.len() == before {
                        return;
                    }
                }
                None => return,
            }
        }
    }

    fn into_graph(mut self, base: usize) -> StallingsGraph {
        let base_r = self.find(base);
        // collect live vertices
        let mut live: Vec<usize> = self
            .edges
            .clone()
            .iter()
            .flat_map(|&(s, t, _)| [s, t])
            .map(|v| self.find(v))
            .collect();
        live.push(base_r);
        live.sort_unstable();
        live.dedup();
        let map: HashMap<usize, usize> =
            live.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let n = live.len();
        let mut out = vec![vec![None; self.rank]; n];
        let mut in_ = vec![vec![None; self.rank]; n];
        for i in 0..self.edges.len() {
            let (s, t, l) = self.edges[i];
            let (s, t) = (map[&self.find(s)], map[&self.find(t)]);
            debug_assert!(out[s][l].is_none() || out[s][l] == Some(t), "not folded");
            debug_assert!(in_[t][l].is_none() || in_[t][l] == Some(s), "not folded");
            out[s][l] = Some(t);
            in_[t][l] = Some(s);
        }
        StallingsGraph {
            rank: self.rank,
            out,
            in_,
            base: map[&base_r],
        }
        .canonicalize()
    }
}

/// Build the folded core graph of `⟨gens⟩ ≤ F_rank`: a wedge of word loops
/// at the base, folded to completion and trimmed to the core.
pub fn build_subgroup_graph(rank: usize, gens: &[Word]) -> Result<StallingsGraph, StallingsError> {
    build_subgroup_graph_with_order(rank, gens, None)
}

/// As [`build_subgroup_graph`], but folding identifications are attempted in
/// the order given by `fold_order` first. Any order yields the same graph;
/// the parameter exists so tests can exercise fold confluence.
pub fn build_subgroup_graph_with_order(
    rank: usize,
    gens: &[Word],
    fold_order: Option<&[usize]>,
) -> Result<StallingsGraph, StallingsError> {
    for w in gens {
        if let Some(g) = w.max_generator() {
            if g >= rank {
                return Err(StallingsError::BadLabel {
                    label: g,
                    rank,
                });
            }
        }
    }
    let mut b = Builder {
        rank,
        parent: vec![0],
        edges: Vec::new(),
    };
    let base = 0;
    for w in gens {
        let letters = w.letters();
        if letters.is_empty() {
            continue;
        }
        let mut prev = base;
        for (i, &(label, positive)) in letters.iter().enumerate() {
            let next = if i + 1 == letters.len() {
                base
            } else {
                b.new_vertex()
            };
            if positive {
                b.edges.push((prev, next, label));
            } else {
                b.edges.push((next, prev, label));
            }
            prev = next;
        }
    }
    b.fold(fold_order);
    b.trim(base);
    // folding can reopen trimming opportunities and vice versa; iterate
    loop {
        let before = b.edges.clone();
        b.fold(fold_order);
        b.trim(base);
        if b.edges == before {
            break;
        }
    }
    Ok(b.into_graph(base))
}

/// Explicit retraction `ρ: K → H` fixing the subgroup basis and killing the
/// complement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Retraction {
    /// free basis of K in the ambient free group
    pub domain_basis: Vec<Word>,
    /// basis of H (a prefix of `domain_basis` as a free factor)
    pub h_basis: Vec<Word>,
    /// image of each domain basis element as a word over `h_basis`
    /// (index i refers to `h_basis[i]`)
    pub images: Vec<Word>,
}

impl Retraction {
    /// ρ∘ρ = ρ and ρ fixes every H-basis element, by construction; checked
    /// here for certification.
    pub fn verify(&self) -> bool {
        let h = self.h_basis.len();
        if self.images.len() != self.domain_basis.len() {
            return false;
        }
        for (i, img) in self.images.iter().enumerate() {
            if i < h {
                if img.syllables() != [(i, 1)] {
                    return false;
                }
            } else if !img.is_identity() {
                return false;
            }
        }
        true
    }
}

/// Hall completion output: the finite-sheeted cover, a basis of K extending
/// the subgroup basis, the complement basis, and the retraction.
#[derive(Debug, Clone)]
pub struct HallCompletion {
    pub cover: StallingsGraph,
    pub k_basis: Vec<Word>,
    pub complement_basis: Vec<Word>,
    pub retraction: Retraction,
}

/// Complete a folded core graph to a cover of the rose by extending, for
/// each label, the partial injection on vertices to a permutation: unmatched
/// sources are paired with unmatched targets in vertex-index order. The
/// spanning tree of the input graph is a spanning tree of the cover, so the
/// input basis extends to a free basis of K = π₁(cover) and H is a free
/// factor by construction.
pub fn hall_completion(g: &StallingsGraph) -> HallCompletion {
    let n = g.vertex_count();
    let mut out = g.out.clone();
    let mut in_ = g.in_.clone();
    let mut added: Vec<(usize, usize, usize)> = Vec::new();
    for label in 0..g.rank {
        let missing_out: Vec<usize> = (0..n).filter(|&v| out[v][label].is_none()).collect();
        let missing_in: Vec<usize> = (0..n).filter(|&v| in_[v][label].is_none()).collect();
        debug_assert_eq!(missing_out.len(), missing_in.len());
        for (&s, &t) in missing_out.iter().zip(&missing_in) {
            out[s][label] = Some(t);
            in_[t][label] = Some(s);
            added.push((s, t, label));
        }
    }
    let cover = StallingsGraph {
        rank: g.rank,
        out,
        in_,
        base: g.base,
    };
    // basis words of the cover w.r.t. the ORIGINAL graph's spanning tree:
    // the tree spans all vertices of g (== vertices of cover), so the cover
    // basis = basis(g) followed by one word per added edge.
    let (paths, _) = g.spanning_tree();
    let h_basis = g.basis();
    let mut k_basis = h_basis.clone();
    let mut complement_basis = Vec::new();
    for &(s, t, label) in &added {
        let w = paths[s]
            .multiply(&Word::generator(label, 1))
            .and_then(|x| x.multiply(&paths[t].inverse()))
            .expect("completion word");
        k_basis.push(w.clone());
        complement_basis.push(w);
    }
    let images: Vec<Word> = (0..k_basis.len())
        .map(|i| {
            if i < h_basis.len() {
                Word::generator(i, 1)
            } else {
                Word::identity()
            }
        })
        .collect();
    HallCompletion {
        cover,
        k_basis: k_basis.clone(),
        complement_basis,
        retraction: Retraction {
            domain_basis: k_basis,
            h_basis,
            images,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(rank: usize, s: &str) -> Word {
        rose_alphabet(rank).parse_word(s).unwrap()
    }

    #[test]
    fn graph_of_a2_b() {
        // ⟨a², b⟩ in F2: 2 vertices, a-edges 0→1→0, b-loop at 0
        let g = build_subgroup_graph(2, &[w(2, "a^2"), w(2, "b")]).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.base(), 0);
        assert_eq!(
            g.edges(),
            vec![(0, 0, 1), (0, 1, 0), (1, 0, 0)],
            "a: 0→1→0 plus b-loop at 0"
        );
    }

    #[test]
    fn degenerate_graphs() {
        let g = build_subgroup_graph(2, &[w(2, "a")]).unwrap();
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.edges(), vec![(0, 0, 0)]);

        let g = build_subgroup_graph(2, &[]).unwrap();
        assert_eq!(g.vertex_count(), 1);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn membership_examples() {
        let g = build_subgroup_graph(2, &[w(2, "a^2"), w(2, "b")]).unwrap();
        assert!(g.membership(&w(2, "a^2 b")));
        assert!(!g.membership(&w(2, "a")));
        assert!(g.membership(&Word::identity()));
        assert!(g.membership(&w(2, "a^2 b a^-2 b^-1")));
        assert!(!g.membership(&w(2, "a b a^-1")));
    }

    #[test]
    fn membership_agrees_with_brute_force() {
        let gens = [w(2, "a^2"), w(2, "b a b^-1")];
        let g = build_subgroup_graph(2, &gens).unwrap();
        // enumerate products of up to 4 generator powers
        let mut elements = std::collections::HashSet::new();
        elements.insert(Word::identity());
        let pool: Vec<Word> = gens
            .iter()
            .flat_map(|x| [x.clone(), x.inverse()])
            .collect();
        for _ in 0..4 {
            let snapshot: Vec<Word> = elements.iter().cloned().collect();
            for e in snapshot {
                for p in &pool {
                    elements.insert(e.multiply(p).unwrap());
                }
            }
        }
        // all test words of length ≤ 6 over a, b
        fn words_up_to(rank: usize, len: usize) -> Vec<Word> {
            let mut out = vec![Word::identity()];
            let mut frontier = vec![Word::identity()];
            for _ in 0..len {
                let mut next = Vec::new();
                for base in &frontier {
                    for g in 0..rank {
                        for e in [1i64, -1] {
                            let cand = base.multiply(&Word::generator(g, e)).unwrap();
                            if cand.len() > base.len() {
                                next.push(cand.clone());
                                out.push(cand);
                            }
                        }
                    }
                }
                frontier = next;
            }
            out.sort_by_key(|x| format!("{x}"));
            out.dedup();
            out
        }
        for test_word in words_up_to(2, 6) {
            let brute = elements.contains(&test_word);
            let fast = g.membership(&test_word);
            if brute {
                assert!(fast, "missed member {test_word}");
            }
            // fast membership must never accept a word the brute pool of
            // bounded products rejects AND that has length within the pool's
            // reach: for short words the pool is exhaustive enough
            if fast && test_word.len() <= 4 {
                assert!(brute, "false member {test_word}");
            }
        }
    }

    #[test]
    fn basis_examples() {
        let g = build_subgroup_graph(2, &[w(2, "a^2"), w(2, "b")]).unwrap();
        let basis = g.basis();
        assert_eq!(basis.len(), 2);
        for b in &basis {
            assert!(g.membership(b), "basis word {b} not a member");
        }
        // rank formula |edges| - |vertices| + 1
        assert_eq!(basis.len(), g.edge_count() - g.vertex_count() + 1);

        let rose = build_subgroup_graph(2, &[w(2, "a"), w(2, "b")]).unwrap();
        assert_eq!(rose.basis(), vec![w(2, "a"), w(2, "b")]);

        let point = build_subgroup_graph(2, &[]).unwrap();
        assert!(point.basis().is_empty());
    }

    #[test]
    fn hall_completion_of_a2_b() {
        let g = build_subgroup_graph(2, &[w(2, "a^2"), w(2, "b")]).unwrap();
        let hc = hall_completion(&g);
        assert_eq!(hc.cover.cover_index().unwrap(), 2);
        assert_eq!(hc.k_basis.len(), 3, "1 + 2·(2-1) = 3");
        assert_eq!(hc.complement_basis, vec![w(2, "a b a^-1")]);
        let mut sorted = hc.k_basis.clone();
        sorted.sort_by_key(|x| format!("{x}"));
        let mut expect = vec![w(2, "a^2"), w(2, "b"), w(2, "a b a^-1")];
        expect.sort_by_key(|x| format!("{x}"));
        assert_eq!(sorted, expect);
        assert!(hc.retraction.verify());
        // every subgroup basis word survives in the cover
        for b in g.basis() {
            assert!(hc.cover.membership(&b));
        }
    }

    #[test]
    fn hall_completion_edge_cases() {
        // ⟨a⟩ in F2: degree 1 cover, complement {b}
        let g = build_subgroup_graph(2, &[w(2, "a")]).unwrap();
        let hc = hall_completion(&g);
        assert_eq!(hc.cover.cover_index().unwrap(), 1);
        assert_eq!(hc.k_basis, vec![w(2, "a"), w(2, "b")]);
        assert_eq!(hc.complement_basis, vec![w(2, "b")]);

        // whole F2: nothing added
        let rose = build_subgroup_graph(2, &[w(2, "a"), w(2, "b")]).unwrap();
        let hc = hall_completion(&rose);
        assert_eq!(hc.cover.cover_index().unwrap(), 1);
        assert!(hc.complement_basis.is_empty());
        assert!(hc.retraction.verify());

        // ⟨a³⟩ in F1: cyclic cover of degree 3
        let g = build_subgroup_graph(1, &[w(1, "a^3")]).unwrap();
        let hc = hall_completion(&g);
        assert_eq!(hc.cover.cover_index().unwrap(), 3);
    }

    #[test]
    fn cover_index_rejects_non_covers() {
        let g = build_subgroup_graph(2, &[w(2, "a^2"), w(2, "b")]).unwrap();
        assert!(matches!(
            g.cover_index(),
            Err(StallingsError::NotACovering { .. })
        ));
    }

    #[test]
    fn fold_confluence_smoke() {
        let gens = [w(3, "a b c a^-1"), w(3, "b^2 c"), w(3, "c a b^-1")];
        let reference = build_subgroup_graph(3, &gens).unwrap();
        for seed in 0..10u64 {
            let mut order: Vec<usize> = (0..40).collect();
            // xorshift shuffle
            let mut s = seed.wrapping_add(0x9E3779B97F4A7C15);
            for i in (1..order.len()).rev() {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                order.swap(i, (s % (i as u64 + 1)) as usize);
            }
            let shuffled = build_subgroup_graph_with_order(3, &gens, Some(&order)).unwrap();
            assert_eq!(shuffled, reference, "fold order {seed} diverged");
        }
    }

    #[test]
    fn membership_rejects_out_of_rank_labels() {
        let g = build_subgroup_graph(1, &[w(1, "a")]).unwrap();
        assert!(!g.membership(&Word::generator(5, 1)));
        assert!(matches!(
            build_subgroup_graph(1, &[Word::generator(3, 1)]),
            Err(StallingsError::BadLabel { label: 3, rank: 1 })
        ));
    }
}
