//! Todd–Coxeter coset enumeration over a finite presentation relative to a
//! finitely generated subgroup, plus the induced permutation representation.
//!
//! Strategy: HLT-style relator scanning with gap filling, immediate
//! deduction propagation and coincidence merging by union-find. New cosets
//! are defined at the first blank of each row in row-major order, so runs
//! are deterministic. Completed tables are standardized (BFS renumbering)
//! and machine-checked before being returned.

use std::collections::VecDeque;

use thiserror::Error;

use crate::fpgroup::Presentation;
use crate::permgrp::Permutation;
use crate::words::Word;

#[derive(Debug, Error, Clone)]
pub enum CosetError {
    #[error("coset limit {limit} exceeded ({live} live cosets); index may be infinite")]
    Overflow {
        limit: usize,
        live: usize,
        partial: PartialTable,
    },
    #[error("word uses generator index {index} outside alphabet of size {size}")]
    AlphabetMismatch { index: usize, size: usize },
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

/// Snapshot of an incomplete enumeration, carried by the overflow error.
#[derive(Debug, Clone)]
pub struct PartialTable {
    pub rows: Vec<Vec<Option<usize>>>,
}

/// Complete right-coset table. Column `2g` is the action of generator `g`,
/// column `2g+1` the action of its inverse; cosets are `0..index` with coset
/// 0 the subgroup itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosetTable {
    presentation: Presentation,
    subgroup_gens: Vec<Word>,
    rows: Vec<Vec<usize>>,
}

pub const DEFAULT_COSET_LIMIT: usize = 1_000_000;

#[inline]
fn inv_col(col: usize) -> usize {
    col ^ 1
}

fn word_to_cols(w: &Word) -> Vec<usize> {
    let mut out = Vec::with_capacity(w.len());
    for &(g, e) in w.syllables() {
        let col = if e > 0 { 2 * g } else { 2 * g + 1 };
        for _ in 0..e.unsigned_abs() {
            out.push(col);
        }
    }
    out
}

struct Enumerator {
    ncols: usize,
    table: Vec<Vec<Option<usize>>>,
    parent: Vec<usize>,
    live: usize,
    limit: usize,
}

impl Enumerator {
    fn new(ncols: usize, limit: usize) -> Self {
        Enumerator {
            ncols,
            table: vec![vec![None; ncols]],
            parent: vec![0],
            live: 1,
            limit,
        }
    }

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

    fn entry(&mut self, x: usize, col: usize) -> Option<usize> {
        let x = self.find(x);
        self.table[x][col].map(|y| self.find(y))
    }

    fn overflow(&mut self) -> CosetError {
        let mut rows = Vec::new();
        for i in 0..self.table.len() {
            if self.find(i) != i {
                continue;
            }
            let row: Vec<Option<usize>> = (0..self.ncols)
                .map(|c| self.table[i][c].map(|y| self.find(y)))
                .collect();
            rows.push(row);
        }
        CosetError::Overflow {
            limit: self.limit,
            live: self.live,
            partial: PartialTable { rows },
        }
    }

    fn define(&mut self, x: usize, col: usize) -> Result<usize, CosetError> {
        if self.live >= self.limit {
            return Err(self.overflow());
        }
        let x = self.find(x);
        debug_assert!(self.table[x][col].is_none());
        let beta = self.table.len();
        self.table.push(vec![None; self.ncols]);
        self.parent.push(beta);
        self.live += 1;
        self.table[x][col] = Some(beta);
        self.table[beta][inv_col(col)] = Some(x);
        Ok(beta)
    }

    /// Record `x·col = y`, merging cosets when the slot disagrees.
    fn set(&mut self, x: usize, col: usize, y: usize) {
        let x = self.find(x);
        let y = self.find(y);
        match self.table[x][col] {
            Some(z) => {
                let z = self.find(z);
                if z != y {
                    self.coincide(z, y);
                }
            }
            None => {
                self.table[x][col] = Some(y);
                match self.table[y][inv_col(col)] {
                    Some(z) => {
                        let z = self.find(z);
                        let x = self.find(x);
                        if z != x {
                            self.coincide(z, x);
                        }
                    }
                    None => self.table[y][inv_col(col)] = Some(x),
                }
            }
        }
    }

    /// Union-find merge; the representative of a merged class is its
    /// minimal coset number, so tables come out canonical.
    fn coincide(&mut self, a: usize, b: usize) {
        let mut queue = VecDeque::from([(a, b)]);
        while let Some((a, b)) = queue.pop_front() {
            let a = self.find(a);
            let b = self.find(b);
            if a == b {
                continue;
            }
            let (s, d) = if a < b { (a, b) } else { (b, a) };
            self.parent[d] = s;
            self.live -= 1;
            for col in 0..self.ncols {
                if let Some(t) = self.table[d][col] {
                    let t = self.find(t);
                    match self.table[s][col] {
                        None => {
                            self.table[s][col] = Some(t);
                            match self.table[t][inv_col(col)] {
                                None => self.table[t][inv_col(col)] = Some(s),
                                Some(u) => {
                                    let u = self.find(u);
                                    if u != s {
                                        queue.push_back((u, s));
                                    }
                                }
                            }
                        }
                        Some(u) => {
                            let u = self.find(u);
                            if u != t {
                                queue.push_back((u, t));
                            }
                        }
                    }
                }
            }
        }
    }

    /// Trace `cols` from `start`; deduce or fill gaps with new cosets so the
    /// cycle closes.
    fn scan_and_fill(&mut self, start: usize, cols: &[usize]) -> Result<(), CosetError> {
        if cols.is_empty() {
            return Ok(());
        }
        let mut f = self.find(start);
        let mut i = 0;
        let mut b = f;
        let mut j = cols.len();
        loop {
            while i < j {
                match self.entry(f, cols[i]) {
                    Some(next) => {
                        f = next;
                        i += 1;
                    }
                    None => break,
                }
            }
            if i == j {
                if f != b {
                    self.coincide(f, b);
                }
                return Ok(());
            }
            while j > i {
                match self.entry(b, inv_col(cols[j - 1])) {
                    Some(prev) => {
                        b = prev;
                        j -= 1;
                    }
                    None => break,
                }
            }
            if j == i {
                if f != b {
                    self.coincide(f, b);
                }
                return Ok(());
            }
            if j == i + 1 {
                self.set(f, cols[i], b);
                return Ok(());
            }
            // gap of length ≥ 2: define through it one step at a time
            let beta = self.define(f, cols[i])?;
            f = self.find(beta);
            i += 1;
            // the merge inside define cannot happen, but f and b may have
            // coincided through earlier merges; re-resolve b
            b = self.find(b);
        }
    }

    fn is_live(&mut self, x: usize) -> bool {
        self.find(x) == x
    }

    fn row_complete(&mut self, x: usize) -> bool {
        let x = self.find(x);
        (0..self.ncols).all(|c| self.table[x][c].is_some())
    }
}

/// Run the enumeration; returns a complete standardized table.
pub fn enumerate(
    p: &Presentation,
    subgroup: &[Word],
    limit: usize,
) -> Result<CosetTable, CosetError> {
    let n = p.generator_count();
    for w in subgroup.iter().chain(p.relators()) {
        if let Some(g) = w.max_generator() {
            if g >= n {
                return Err(CosetError::AlphabetMismatch { index: g, size: n });
            }
        }
    }
    let relator_cols: Vec<Vec<usize>> = p.relators().iter().map(word_to_cols).collect();
    let subgroup_cols: Vec<Vec<usize>> = subgroup.iter().map(word_to_cols).collect();
    let mut e = Enumerator::new(2 * n, limit);
    for cols in &subgroup_cols {
        e.scan_and_fill(0, cols)?;
    }
    let mut alpha = 0;
    while alpha < e.table.len() {
        if !e.is_live(alpha) {
            alpha += 1;
            continue;
        }
        for cols in &relator_cols {
            e.scan_and_fill(alpha, cols)?;
            if !e.is_live(alpha) {
                break;
            }
        }
        if e.is_live(alpha) {
            for col in 0..e.ncols {
                if e.entry(alpha, col).is_none() {
                    e.define(alpha, col)?;
                }
            }
        }
        alpha += 1;
    }
    // closing sweeps: relator scans can still reveal coincidences among rows
    // completed before a merge; iterate to a fixpoint
    loop {
        let live_before = e.live;
        let mut changed = false;
        for alpha in 0..e.table.len() {
            if !e.is_live(alpha) {
                continue;
            }
            for cols in &relator_cols {
                e.scan_and_fill(alpha, cols)?;
                if !e.is_live(alpha) {
                    break;
                }
            }
            if e.is_live(alpha) && !e.row_complete(alpha) {
                for col in 0..e.ncols {
                    if e.entry(alpha, col).is_none() {
                        e.define(alpha, col)?;
                    }
                }
                changed = true;
            }
        }
        for cols in &subgroup_cols {
            e.scan_and_fill(0, cols)?;
        }
        if e.live != live_before {
            changed = true;
        }
        if !changed {
            break;
        }
    }
    // compact live cosets into 0..index
    let mut map = vec![usize::MAX; e.table.len()];
    let mut reps = Vec::new();
    for i in 0..e.table.len() {
        if e.find(i) == i {
            map[i] = reps.len();
            reps.push(i);
        }
    }
    let mut rows = Vec::with_capacity(reps.len());
    for &r in &reps {
        let row: Vec<usize> = (0..e.ncols)
            .map(|c| {
                let v = e.table[r][c].expect("table complete");
                map[e.find(v)]
            })
            .collect();
        rows.push(row);
    }
    let table = CosetTable {
        presentation: p.clone(),
        subgroup_gens: subgroup.to_vec(),
        rows,
    };
    let table = table.standardize();
    table.validate()?;
    Ok(table)
}

/// Order of the presented group: enumeration over the trivial subgroup.
pub fn order(p: &Presentation, limit: usize) -> Result<usize, CosetError> {
    Ok(enumerate(p, &[], limit)?.index())
}

impl CosetTable {
    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn subgroup_gens(&self) -> &[Word] {
        &self.subgroup_gens
    }

    pub fn index(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    /// Action of a single table column.
    pub fn step(&self, coset: usize, col: usize) -> usize {
        self.rows[coset][col]
    }

    /// Trace a word from a coset.
    pub fn trace(&self, start: usize, w: &Word) -> usize {
        let mut c = start;
        for col in word_to_cols(w) {
            c = self.rows[c][col];
        }
        c
    }

    /// BFS renumbering from coset 0, scanning columns in order; idempotent.
    pub fn standardize(&self) -> CosetTable {
        let n = self.rows.len();
        let ncols = 2 * self.presentation.generator_count();
        let mut order_map = vec![usize::MAX; n];
        let mut bfs = vec![0usize];
        order_map[0] = 0;
        let mut head = 0;
        while head < bfs.len() {
            let c = bfs[head];
            head += 1;
            for col in 0..ncols {
                let d = self.rows[c][col];
                if order_map[d] == usize::MAX {
                    order_map[d] = bfs.len();
                    bfs.push(d);
                }
            }
        }
        debug_assert_eq!(bfs.len(), n, "table not transitive");
        let mut rows = vec![vec![0usize; ncols]; n];
        for (old, row) in self.rows.iter().enumerate() {
            for col in 0..ncols {
                rows[order_map[old]][col] = order_map[row[col]];
            }
        }
        CosetTable {
            presentation: self.presentation.clone(),
            subgroup_gens: self.subgroup_gens.clone(),
            rows,
        }
    }

    /// Machine check of the table invariants: inverse-column consistency,
    /// transitivity, trivial relator action, and subgroup generators fixing
    /// coset 0.
    pub fn validate(&self) -> Result<(), CosetError> {
        let n = self.rows.len();
        let ncols = 2 * self.presentation.generator_count();
        for (c, row) in self.rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(CosetError::Inconsistent(format!(
                    "row {c} has {} columns, expected {ncols}",
                    row.len()
                )));
            }
            for col in 0..ncols {
                let d = row[col];
                if d >= n {
                    return Err(CosetError::Inconsistent(format!(
                        "row {c} column {col} out of range"
                    )));
                }
                if self.rows[d][inv_col(col)] != c {
                    return Err(CosetError::Inconsistent(format!(
                        "columns {col}/{} disagree at coset {c}",
                        inv_col(col)
                    )));
                }
            }
        }
        for r in self.presentation.relators() {
            for c in 0..n {
                if self.trace(c, r) != c {
                    return Err(CosetError::Inconsistent(format!(
                        "relator `{}` moves coset {c}",
                        self.presentation.alphabet().display_word(r)
                    )));
                }
            }
        }
        for w in &self.subgroup_gens {
            if self.trace(0, w) != 0 {
                return Err(CosetError::Inconsistent(format!(
                    "subgroup generator `{}` moves coset 0",
                    self.presentation.alphabet().display_word(w)
                )));
            }
        }
        // transitivity
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0usize];
        let mut count = 1;
        while let Some(c) = stack.pop() {
            for col in 0..ncols {
                let d = self.rows[c][col];
                if !seen[d] {
                    seen[d] = true;
                    count += 1;
                    stack.push(d);
                }
            }
        }
        if count != n {
            return Err(CosetError::Inconsistent("action not transitive".into()));
        }
        Ok(())
    }

    /// One permutation of the cosets per generator.
    pub fn perm_rep(&self) -> Vec<Permutation> {
        let n = self.rows.len();
        (0..self.presentation.generator_count())
            .map(|g| {
                Permutation::from_images((0..n).map(|c| self.rows[c][2 * g]).collect())
                    .expect("complete table columns are bijections")
            })
            .collect()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let alphabet = self.presentation.alphabet();
        let mut columns = Vec::new();
        for g in 0..alphabet.len() {
            columns.push(alphabet.name(g).to_string());
            columns.push(format!("{}^-1", alphabet.name(g)));
        }
        serde_json::json!({
            "index": self.index(),
            "columns": columns,
            "rows": self.rows.iter()
                .map(|row| row.iter().map(|&c| c + 1).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }

    /// Build a table directly from a permutation action on cosets (used for
    /// preimage tables through a homomorphism). `gen_images[g]` must act on
    /// `0..index` with coset 0 fixed by every subgroup generator word.
    pub fn from_action(
        p: &Presentation,
        subgroup: &[Word],
        gen_images: &[Permutation],
    ) -> Result<CosetTable, CosetError> {
        let n = p.generator_count();
        if gen_images.len() != n {
            return Err(CosetError::Inconsistent(format!(
                "expected {n} generator images, got {}",
                gen_images.len()
            )));
        }
        let index = gen_images.first().map_or(1, Permutation::degree);
        let mut rows = vec![vec![0usize; 2 * n]; index];
        for g in 0..n {
            let perm = &gen_images[g];
            if perm.degree() != index {
                return Err(CosetError::Inconsistent("mixed action degrees".into()));
            }
            let inv = perm.inverse();
            for c in 0..index {
                rows[c][2 * g] = perm.apply(c);
                rows[c][2 * g + 1] = inv.apply(c);
            }
        }
        let table = CosetTable {
            presentation: p.clone(),
            subgroup_gens: subgroup.to_vec(),
            rows,
        };
        let table = table.standardize();
        table.validate()?;
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permgrp::{closure, DEFAULT_CLOSURE_CAP};

    fn s3() -> Presentation {
        Presentation::parse(&["c1", "c2"], &["c1^3", "c2^2", "c1 c2 c1 c2"]).unwrap()
    }

    fn a4() -> Presentation {
        Presentation::parse(&["a1", "a2"], &["a1^3", "a2^3", "a1 a2 a1 a2"]).unwrap()
    }

    #[test]
    fn s3_over_c2_has_three_cosets() {
        let p = s3();
        let sub = vec![p.alphabet().parse_word("c2").unwrap()];
        let t = enumerate(&p, &sub, DEFAULT_COSET_LIMIT).unwrap();
        assert_eq!(t.index(), 3);
    }

    #[test]
    fn orders_of_small_groups() {
        assert_eq!(order(&a4(), DEFAULT_COSET_LIMIT).unwrap(), 12);
        assert_eq!(order(&s3(), DEFAULT_COSET_LIMIT).unwrap(), 6);
        let z5 = Presentation::parse(&["x"], &["x^5"]).unwrap();
        assert_eq!(order(&z5, DEFAULT_COSET_LIMIT).unwrap(), 5);
    }

    #[test]
    fn free_group_overflows() {
        let f2 = Presentation::free(["a", "b"]).unwrap();
        match enumerate(&f2, &[], 100) {
            Err(CosetError::Overflow { limit, .. }) => assert_eq!(limit, 100),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn perm_rep_of_s3_action() {
        let p = s3();
        let sub = vec![p.alphabet().parse_word("c2").unwrap()];
        let t = enumerate(&p, &sub, DEFAULT_COSET_LIMIT).unwrap();
        let rep = t.perm_rep();
        assert_eq!(rep.len(), 2);
        assert_eq!(rep[0].degree(), 3);
        let group = closure(&rep, DEFAULT_CLOSURE_CAP).unwrap();
        assert_eq!(group.len(), 6, "degree-3 image generates all of S3");
    }

    #[test]
    fn index_one_table_is_identity_action() {
        let p = a4();
        let subs: Vec<Word> = ["a1", "a2"]
            .iter()
            .map(|s| p.alphabet().parse_word(s).unwrap())
            .collect();
        let t = enumerate(&p, &subs, DEFAULT_COSET_LIMIT).unwrap();
        assert_eq!(t.index(), 1);
        for perm in t.perm_rep() {
            assert!(perm.is_identity());
        }
    }

    #[test]
    fn regular_representation_of_a4() {
        let t = enumerate(&a4(), &[], DEFAULT_COSET_LIMIT).unwrap();
        assert_eq!(t.index(), 12);
        let rep = t.perm_rep();
        let group = closure(&rep, DEFAULT_CLOSURE_CAP).unwrap();
        assert_eq!(group.len(), 12);
    }

    #[test]
    fn standardize_is_idempotent_and_canonical() {
        let p = s3();
        let sub = vec![p.alphabet().parse_word("c2").unwrap()];
        let t = enumerate(&p, &sub, DEFAULT_COSET_LIMIT).unwrap();
        assert_eq!(t.standardize(), t);

        // the same subgroup enumerated from a permuted relator list gives
        // the identical standardized table
        let p2 = Presentation::parse(&["c1", "c2"], &["c1 c2 c1 c2", "c2^2", "c1^3"]).unwrap();
        let sub2 = vec![p2.alphabet().parse_word("c2").unwrap()];
        let t2 = enumerate(&p2, &sub2, DEFAULT_COSET_LIMIT).unwrap();
        assert_eq!(t.rows(), t2.rows());
    }

    #[test]
    fn table_invariants_hold() {
        let p = a4();
        let sub = vec![p.alphabet().parse_word("a1").unwrap()];
        let t = enumerate(&p, &sub, DEFAULT_COSET_LIMIT).unwrap();
        assert_eq!(t.index(), 4);
        t.validate().unwrap();
        // orbit of coset 0 under the perm rep equals the index
        let rep = t.perm_rep();
        let mut orbit = vec![false; t.index()];
        orbit[0] = true;
        let mut stack = vec![0usize];
        while let Some(c) = stack.pop() {
            for g in &rep {
                for d in [g.apply(c), g.inverse().apply(c)] {
                    if !orbit[d] {
                        orbit[d] = true;
                        stack.push(d);
                    }
                }
            }
        }
        assert!(orbit.iter().all(|&b| b));
    }

    #[test]
    fn json_shape() {
        let p = s3();
        let t = enumerate(&p, &[], DEFAULT_COSET_LIMIT).unwrap();
        let v = t.to_json_value();
        assert_eq!(v["index"], 6);
        assert_eq!(v["columns"][1], "c1^-1");
        assert_eq!(v["rows"].as_array().unwrap().len(), 6);
    }

    #[test]
    fn from_action_roundtrip() {
        let p = s3();
        let sub = vec![p.alphabet().parse_word("c2").unwrap()];
        let t = enumerate(&p, &sub, DEFAULT_COSET_LIMIT).unwrap();
        let rebuilt = CosetTable::from_action(&p, &sub, &t.perm_rep()).unwrap();
        assert_eq!(rebuilt.rows(), t.rows());
    }
}
