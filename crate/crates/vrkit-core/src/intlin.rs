//! Exact integer and rational linear algebra: Smith normal form, Hermite
//! normal form, lattice arithmetic and the averaged invariant-complement
//! construction for finite matrix groups.
//!
//! All arithmetic is exact. Matrix entries are big integers (Smith-form
//! intermediates blow up well before 8×8 at desk scale); rationals appear
//! only inside the invariant-complement averaging and are cleared before
//! returning.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntLinError {
    #[error("matrix dimensions {0}x{1} inconsistent with entry count {2}")]
    BadShape(usize, usize, usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("generator is not invertible over the integers (det = {0})")]
    NotUnimodular(BigInt),
    #[error("lattice is not invariant under a generator")]
    NotInvariant,
    #[error("group closure exceeded cap of {0} elements")]
    ClosureCapExceeded(usize),
    #[error("matrix group is not closed under the given generators")]
    BadGroup,
}

/// Dense row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigInt>) -> Result<Self, IntLinError> {
        if entries.len() != rows * cols {
            return Err(IntLinError::BadShape(rows, cols, entries.len()));
        }
        Ok(IntMatrix { rows, cols, entries })
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            entries: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zero(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = BigInt::one();
        }
        m
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        IntMatrix {
            rows: r,
            cols: c,
            entries: rows
                .iter()
                .flat_map(|row| row.iter().map(|&x| BigInt::from(x)))
                .collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut BigInt {
        &mut self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix, IntLinError> {
        if self.cols != other.rows {
            return Err(IntLinError::DimensionMismatch(self.cols, other.rows));
        }
        let mut out = IntMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * other.at(k, j);
                    *out.at_mut(i, j) += prod;
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut out = IntMatrix::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *out.at_mut(j, i) = self.at(i, j).clone();
            }
        }
        out
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> Result<BigInt, IntLinError> {
        if self.rows != self.cols {
            return Err(IntLinError::NotSquare(self.rows, self.cols));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(BigInt::one());
        }
        let mut m = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m.at(k, k).is_zero() {
                match (k + 1..n).find(|&i| !m.at(i, k).is_zero()) {
                    Some(i) => {
                        for j in 0..n {
                            let a = m.at(k, j).clone();
                            let b = m.at(i, j).clone();
                            *m.at_mut(k, j) = b;
                            *m.at_mut(i, j) = a;
                        }
                        sign = -sign;
                    }
                    None => return Ok(BigInt::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (m.at(i, j) * m.at(k, k) - m.at(i, k) * m.at(k, j)) / &prev;
                    *m.at_mut(i, j) = v;
                }
                *m.at_mut(i, k) = BigInt::zero();
            }
            prev = m.at(k, k).clone();
        }
        Ok(sign * m.at(n - 1, n - 1).clone())
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::Value::Array(
            (0..self.rows)
                .map(|i| {
                    serde_json::Value::Array(
                        self.row(i)
                            .iter()
                            .map(|e| serde_json::Value::String(e.to_string()))
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    /// Parse a JSON array of arrays of integers (numbers or decimal strings).
    pub fn from_json_value(v: &serde_json::Value) -> Result<IntMatrix, String> {
        let rows = v.as_array().ok_or("expected an array of rows")?;
        let mut entries = Vec::new();
        let mut cols = None;
        for row in rows {
            let row = row.as_array().ok_or("expected each row to be an array")?;
            match cols {
                None => cols = Some(row.len()),
                Some(c) if c != row.len() => return Err("ragged rows".into()),
                _ => {}
            }
            for e in row {
                let x = if let Some(n) = e.as_i64() {
                    BigInt::from(n)
                } else if let Some(s) = e.as_str() {
                    s.parse::<BigInt>().map_err(|e| e.to_string())?
                } else {
                    return Err(format!("bad matrix entry {e}"));
                };
                entries.push(x);
            }
        }
        let c = cols.unwrap_or(0);
        let r = rows.len();
        IntMatrix::new(r, c, entries).map_err(|e| e.to_string())
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|e| e.to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// `u * a * v = d` with `u, v` unimodular, `d` diagonal with a divisibility
/// chain of nonnegative entries.
#[derive(Debug, Clone)]
pub struct SnfResult {
    pub d: IntMatrix,
    pub u: IntMatrix,
    pub v: IntMatrix,
}

impl SnfResult {
    /// Diagonal entries, including trailing zeros up to min(rows, cols).
    pub fn diagonal(&self) -> Vec<BigInt> {
        let n = self.d.rows().min(self.d.cols());
        (0..n).map(|i| self.d.at(i, i).clone()).collect()
    }

    /// Nonzero invariant factors.
    pub fn invariant_factors(&self) -> Vec<BigUint> {
        self.diagonal()
            .into_iter()
            .filter(|x| !x.is_zero())
            .map(|x| x.magnitude().clone())
            .collect()
    }
}

struct SnfCalc {
    d: IntMatrix,
    u: IntMatrix,
    v: IntMatrix,
}

impl SnfCalc {
    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.d.cols() {
            let x = self.d.at(a, j).clone();
            let y = self.d.at(b, j).clone();
            *self.d.at_mut(a, j) = y;
            *self.d.at_mut(b, j) = x;
        }
        for j in 0..self.u.cols() {
            let x = self.u.at(a, j).clone();
            let y = self.u.at(b, j).clone();
            *self.u.at_mut(a, j) = y;
            *self.u.at_mut(b, j) = x;
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.d.rows() {
            let x = self.d.at(i, a).clone();
            let y = self.d.at(i, b).clone();
            *self.d.at_mut(i, a) = y;
            *self.d.at_mut(i, b) = x;
        }
        for i in 0..self.v.rows() {
            let x = self.v.at(i, a).clone();
            let y = self.v.at(i, b).clone();
            *self.v.at_mut(i, a) = y;
            *self.v.at_mut(i, b) = x;
        }
    }

    /// row[a] += q * row[b]
    fn add_row(&mut self, a: usize, b: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for j in 0..self.d.cols() {
            let delta = q * self.d.at(b, j);
            *self.d.at_mut(a, j) += delta;
        }
        for j in 0..self.u.cols() {
            let delta = q * self.u.at(b, j);
            *self.u.at_mut(a, j) += delta;
        }
    }

    /// col[a] += q * col[b]
    fn add_col(&mut self, a: usize, b: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for i in 0..self.d.rows() {
            let delta = q * self.d.at(i, b);
            *self.d.at_mut(i, a) += delta;
        }
        for i in 0..self.v.rows() {
            let delta = q * self.v.at(i, b);
            *self.v.at_mut(i, a) += delta;
        }
    }

    fn negate_row(&mut self, a: usize) {
        for j in 0..self.d.cols() {
            let x = -self.d.at(a, j).clone();
            *self.d.at_mut(a, j) = x;
        }
        for j in 0..self.u.cols() {
            let x = -self.u.at(a, j).clone();
            *self.u.at_mut(a, j) = x;
        }
    }
}

/// Rounded quotient: the q minimizing |a - q*b|, ties toward truncation.
fn rounded_div(a: &BigInt, b: &BigInt) -> BigInt {
    let q = a / b;
    let r = a - &q * b;
    if r.is_zero() {
        return q;
    }
    let two_r: BigInt = &r * 2;
    if two_r.abs() > b.abs() {
        if (r.is_positive()) == (b.is_positive()) {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

/// Smith normal form with deterministic pivoting (minimum absolute value,
/// ties by row-major position).
pub fn snf(a: &IntMatrix) -> SnfResult {
    let m = a.rows();
    let n = a.cols();
    let mut calc = SnfCalc {
        d: a.clone(),
        u: IntMatrix::identity(m),
        v: IntMatrix::identity(n),
    };
    let mut t = 0;
    while t < m.min(n) {
        // deterministic pivot: min |value| over the trailing block
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                if calc.d.at(i, j).is_zero() {
                    continue;
                }
                let better = match pivot {
                    None => true,
                    Some((pi, pj)) => calc.d.at(i, j).abs() < calc.d.at(pi, pj).abs(),
                };
                if better {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        calc.swap_rows(t, pi);
        calc.swap_cols(t, pj);
        loop {
            // clear column t
            let mut dirty = false;
            for i in t + 1..m {
                if calc.d.at(i, t).is_zero() {
                    continue;
                }
                let q = -rounded_div(calc.d.at(i, t), calc.d.at(t, t));
                calc.add_row(i, t, &q);
                if !calc.d.at(i, t).is_zero() {
                    // remainder is strictly smaller: promote it to the pivot
                    calc.swap_rows(t, i);
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            // clear row t
            for j in t + 1..n {
                if calc.d.at(t, j).is_zero() {
                    continue;
                }
                let q = -rounded_div(calc.d.at(t, j), calc.d.at(t, t));
                calc.add_col(j, t, &q);
                if !calc.d.at(t, j).is_zero() {
                    calc.swap_cols(t, j);
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            // column may have been refilled by the row pass
            if (t + 1..m).any(|i| !calc.d.at(i, t).is_zero()) {
                continue;
            }
            // enforce divisibility of the pivot into the trailing block
            let mut offender = None;
            'search: for i in t + 1..m {
                for j in t + 1..n {
                    if !(calc.d.at(i, j) % calc.d.at(t, t)).is_zero() {
                        offender = Some(i);
                        break 'search;
                    }
                }
            }
            match offender {
                Some(i) => {
                    calc.add_row(t, i, &BigInt::one());
                }
                None => break,
            }
        }
        if calc.d.at(t, t).is_negative() {
            calc.negate_row(t);
        }
        t += 1;
    }
    SnfResult {
        d: calc.d,
        u: calc.u,
        v: calc.v,
    }
}

/// Row-style Hermite normal form of the row space: pivots positive, entries
/// above each pivot reduced into `[0, pivot)`, zero rows dropped. The result
/// is the canonical basis of the lattice spanned by the input rows.
pub fn hermite_normal_form(a: &IntMatrix) -> IntMatrix {
    let m = a.rows();
    let n = a.cols();
    let mut w: Vec<Vec<BigInt>> = (0..m).map(|i| a.row(i).to_vec()).collect();
    let mut r = 0;
    for col in 0..n {
        loop {
            // min |value| pivot in rows >= r at this column
            let mut best: Option<usize> = None;
            for (i, row) in w.iter().enumerate().skip(r) {
                if row[col].is_zero() {
                    continue;
                }
                best = match best {
                    None => Some(i),
                    Some(b) if row[col].abs() < w[b][col].abs() => Some(i),
                    other => other,
                };
            }
            let Some(p) = best else { break };
            w.swap(r, p);
            let mut done = true;
            for i in r + 1..m {
                if w[i][col].is_zero() {
                    continue;
                }
                let q = rounded_div(&w[i][col], &w[r][col]);
                for j in 0..n {
                    let delta = &q * &w[r][j];
                    w[i][j] -= delta;
                }
                if !w[i][col].is_zero() {
                    done = false;
                }
            }
            if done {
                if w[r][col].is_negative() {
                    for j in 0..n {
                        w[r][j] = -std::mem::take(&mut w[r][j]);
                    }
                }
                // reduce entries above the pivot into [0, pivot)
                for i in 0..r {
                    let q = num_integer::Integer::div_floor(&w[i][col], &w[r][col]);
                    if q.is_zero() {
                        continue;
                    }
                    for j in 0..n {
                        let delta = &q * &w[r][j];
                        w[i][j] -= delta;
                    }
                }
                r += 1;
                break;
            }
        }
        if r == m {
            break;
        }
    }
    let entries: Vec<BigInt> = w.into_iter().take(r).flatten().collect();
    IntMatrix::new(r, n, entries).expect("hnf shape")
}

/// Basis (rows) of `{ x : x·m = 0 }`; the result is saturated.
pub fn left_kernel(m: &IntMatrix) -> IntMatrix {
    let s = snf(m);
    let diag = s.diagonal();
    let rows = m.rows();
    let mut kernel_rows: Vec<BigInt> = Vec::new();
    let mut count = 0;
    for i in 0..rows {
        let zero_diag = i >= diag.len() || diag[i].is_zero();
        if zero_diag {
            kernel_rows.extend(s.u.row(i).iter().cloned());
            count += 1;
        }
    }
    IntMatrix::new(count, rows, kernel_rows).expect("kernel shape")
}

/// Full-rank sublattice index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LatticeIndex {
    Finite(BigUint),
    Infinite,
}

impl fmt::Display for LatticeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeIndex::Finite(n) => write!(f, "{n}"),
            LatticeIndex::Infinite => write!(f, "infinite"),
        }
    }
}

/// Sublattice of Zⁿ with canonical Hermite-form basis; equality of lattices
/// is syntactic equality of bases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    ambient: usize,
    basis: IntMatrix,
}

impl Lattice {
    /// Lattice spanned by the given vectors (dependencies are fine; the
    /// stored basis is the canonical HNF).
    pub fn new(ambient: usize, generators: &[Vec<BigInt>]) -> Result<Self, IntLinError> {
        for g in generators {
            if g.len() != ambient {
                return Err(IntLinError::DimensionMismatch(g.len(), ambient));
            }
        }
        let m = IntMatrix::new(
            generators.len(),
            ambient,
            generators.iter().flatten().cloned().collect(),
        )?;
        Ok(Lattice {
            ambient,
            basis: hermite_normal_form(&m),
        })
    }

    pub fn from_i64(ambient: usize, generators: &[Vec<i64>]) -> Result<Self, IntLinError> {
        let gens: Vec<Vec<BigInt>> = generators
            .iter()
            .map(|g| g.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        Lattice::new(ambient, &gens)
    }

    pub fn zero(ambient: usize) -> Self {
        Lattice {
            ambient,
            basis: IntMatrix::zero(0, ambient),
        }
    }

    pub fn standard(ambient: usize) -> Self {
        Lattice {
            ambient,
            basis: IntMatrix::identity(ambient),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn rank(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &IntMatrix {
        &self.basis
    }

    pub fn contains(&self, v: &[BigInt]) -> bool {
        if v.len() != self.ambient {
            return false;
        }
        // reduce v by the HNF basis greedily
        let mut v = v.to_vec();
        for r in 0..self.basis.rows() {
            let pivot_col = (0..self.ambient)
                .find(|&j| !self.basis.at(r, j).is_zero())
                .expect("nonzero basis row");
            if v[pivot_col].is_zero() {
                continue;
            }
            let (q, rem) = num_integer::Integer::div_rem(&v[pivot_col], self.basis.at(r, pivot_col));
            if !rem.is_zero() {
                return false;
            }
            for j in 0..self.ambient {
                let delta = &q * self.basis.at(r, j);
                v[j] -= delta;
            }
        }
        v.iter().all(|x| x.is_zero())
    }

    pub fn sum(&self, other: &Lattice) -> Result<Lattice, IntLinError> {
        if self.ambient != other.ambient {
            return Err(IntLinError::DimensionMismatch(self.ambient, other.ambient));
        }
        let mut rows: Vec<Vec<BigInt>> = Vec::new();
        for i in 0..self.basis.rows() {
            rows.push(self.basis.row(i).to_vec());
        }
        for i in 0..other.basis.rows() {
            rows.push(other.basis.row(i).to_vec());
        }
        Lattice::new(self.ambient, &rows)
    }

    /// Intersection via the left kernel of the stacked bases.
    pub fn intersection(&self, other: &Lattice) -> Result<Lattice, IntLinError> {
        if self.ambient != other.ambient {
            return Err(IntLinError::DimensionMismatch(self.ambient, other.ambient));
        }
        let k1 = self.basis.rows();
        let k2 = other.basis.rows();
        if k1 == 0 || k2 == 0 {
            return Ok(Lattice::zero(self.ambient));
        }
        // stacked: rows of A then rows of -B; kernel rows (x | y) give x·A = y·B
        let mut entries = Vec::with_capacity((k1 + k2) * self.ambient);
        for i in 0..k1 {
            entries.extend(self.basis.row(i).iter().cloned());
        }
        for i in 0..k2 {
            entries.extend(other.basis.row(i).iter().map(|e| -e.clone()));
        }
        let stacked = IntMatrix::new(k1 + k2, self.ambient, entries)?;
        let kernel = left_kernel(&stacked);
        let mut rows = Vec::new();
        for i in 0..kernel.rows() {
            let mut v = vec![BigInt::zero(); self.ambient];
            for (r, coeff) in kernel.row(i)[..k1].iter().enumerate() {
                for j in 0..self.ambient {
                    let delta = coeff * self.basis.at(r, j);
                    v[j] += delta;
                }
            }
            rows.push(v);
        }
        Lattice::new(self.ambient, &rows)
    }

    /// |Zⁿ : L| when L has full rank, else infinite.
    pub fn index_in_ambient(&self) -> LatticeIndex {
        if self.rank() < self.ambient {
            return LatticeIndex::Infinite;
        }
        let mut det = BigInt::one();
        for i in 0..self.ambient {
            det *= self.basis.at(i, i);
        }
        LatticeIndex::Finite(det.magnitude().clone())
    }

    /// Image lattice under the right action `v ↦ v·g`.
    pub fn apply(&self, g: &IntMatrix) -> Result<Lattice, IntLinError> {
        let image = self.basis.mul(g)?;
        let rows: Vec<Vec<BigInt>> = (0..image.rows()).map(|i| image.row(i).to_vec()).collect();
        Lattice::new(self.ambient, &rows)
    }
}

/// Minimal rational-matrix support for the Maschke averaging.
#[derive(Debug, Clone, PartialEq, Eq)]
struct RatMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigRational>,
}

impl RatMatrix {
    fn zero(rows: usize, cols: usize) -> Self {
        RatMatrix {
            rows,
            cols,
            entries: vec![BigRational::zero(); rows * cols],
        }
    }

    fn identity(n: usize) -> Self {
        let mut m = RatMatrix::zero(n, n);
        for i in 0..n {
            m.entries[i * n + i] = BigRational::one();
        }
        m
    }

    fn from_int(m: &IntMatrix) -> Self {
        RatMatrix {
            rows: m.rows(),
            cols: m.cols(),
            entries: m
                .entries
                .iter()
                .map(|e| BigRational::from_integer(e.clone()))
                .collect(),
        }
    }

    fn at(&self, i: usize, j: usize) -> &BigRational {
        &self.entries[i * self.cols + j]
    }

    fn at_mut(&mut self, i: usize, j: usize) -> &mut BigRational {
        &mut self.entries[i * self.cols + j]
    }

    fn mul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = RatMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self.at(i, k).is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = self.at(i, k) * other.at(k, j);
                    *out.at_mut(i, j) += prod;
                }
            }
        }
        out
    }

    fn add_assign(&mut self, other: &RatMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += b;
        }
    }

    fn scale(&mut self, s: &BigRational) {
        for a in self.entries.iter_mut() {
            *a *= s;
        }
    }

    /// Gauss-Jordan inverse; None if singular.
    fn inverse(&self) -> Option<RatMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = RatMatrix::identity(n);
        for col in 0..n {
            let pivot = (col..n).find(|&i| !a.at(i, col).is_zero())?;
            if pivot != col {
                for j in 0..n {
                    let x = a.at(pivot, j).clone();
                    let y = a.at(col, j).clone();
                    *a.at_mut(pivot, j) = y;
                    *a.at_mut(col, j) = x;
                    let x = inv.at(pivot, j).clone();
                    let y = inv.at(col, j).clone();
                    *inv.at_mut(pivot, j) = y;
                    *inv.at_mut(col, j) = x;
                }
            }
            let p = a.at(col, col).clone();
            for j in 0..n {
                *a.at_mut(col, j) /= &p;
                *inv.at_mut(col, j) /= &p;
            }
            for i in 0..n {
                if i == col || a.at(i, col).is_zero() {
                    continue;
                }
                let f = a.at(i, col).clone();
                for j in 0..n {
                    let delta = &f * a.at(col, j);
                    *a.at_mut(i, j) -= delta;
                    let delta = &f * inv.at(col, j);
                    *inv.at_mut(i, j) -= delta;
                }
            }
        }
        Some(inv)
    }

    /// Clear denominators: returns an integer matrix with the same kernel.
    fn clear_denominators(&self) -> IntMatrix {
        let mut lcm = BigInt::one();
        for e in &self.entries {
            lcm = num_integer::Integer::lcm(&lcm, e.denom());
        }
        let entries: Vec<BigInt> = self
            .entries
            .iter()
            .map(|e| e.numer() * (&lcm / e.denom()))
            .collect();
        IntMatrix::new(self.rows, self.cols, entries).expect("shape")
    }
}

/// Breadth-first closure of the matrix group generated by `gens`, in
/// deterministic discovery order. Errors if the closure exceeds `cap`.
pub fn matrix_group_closure(
    gens: &[IntMatrix],
    n: usize,
    cap: usize,
) -> Result<Vec<IntMatrix>, IntLinError> {
    let id = IntMatrix::identity(n);
    let mut elements = vec![id.clone()];
    let mut seen: HashMap<IntMatrix, usize> = HashMap::new();
    seen.insert(id, 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for g in gens {
            let next = elements[i].mul(g)?;
            if !seen.contains_key(&next) {
                if elements.len() >= cap {
                    return Err(IntLinError::ClosureCapExceeded(cap));
                }
                seen.insert(next.clone(), elements.len());
                queue.push_back(elements.len());
                elements.push(next);
            }
        }
    }
    Ok(elements)
}

/// Default cap on the order of the finite matrix group `X`.
pub const CLOSURE_CAP: usize = 20_000;

/// The lattice-level Maschke construction: given a finite group `X` of
/// unimodular integer matrices (acting on row vectors from the right) and an
/// X-invariant sublattice `T`, returns an X-invariant lattice `R` with
/// `T ∩ R = 0` and `T + R` of finite index in Zⁿ.
///
/// Method: average any rational projection onto `T⊗Q` over `X`; the kernel of
/// the averaged projection is the invariant rational complement, and `R` is
/// its saturated integer kernel.
pub fn invariant_complement(x_gens: &[IntMatrix], t: &Lattice) -> Result<Lattice, IntLinError> {
    let n = t.ambient_dim();
    for g in x_gens {
        if g.rows() != n || g.cols() != n {
            return Err(IntLinError::NotSquare(g.rows(), g.cols()));
        }
        let d = g.det()?;
        if !(d.clone().abs()).is_one() {
            return Err(IntLinError::NotUnimodular(d));
        }
        if t.apply(g)? != *t {
            return Err(IntLinError::NotInvariant);
        }
    }
    let elements = matrix_group_closure(x_gens, n, CLOSURE_CAP)?;

    // projection p onto T⊗Q along the coordinate complement of the HNF pivots
    let rank = t.rank();
    let mut pivot_cols = Vec::with_capacity(rank);
    for r in 0..rank {
        let col = (0..n)
            .find(|&j| !t.basis().at(r, j).is_zero())
            .expect("nonzero basis row");
        pivot_cols.push(col);
    }
    let mut s = IntMatrix::zero(n, n);
    for r in 0..rank {
        for j in 0..n {
            *s.at_mut(r, j) = t.basis().at(r, j).clone();
        }
    }
    let mut next = rank;
    for j in 0..n {
        if !pivot_cols.contains(&j) {
            *s.at_mut(next, j) = BigInt::one();
            next += 1;
        }
    }
    let s_rat = RatMatrix::from_int(&s);
    let s_inv = s_rat.inverse().expect("basis completion is invertible");
    let mut diag = RatMatrix::zero(n, n);
    for i in 0..rank {
        *diag.at_mut(i, i) = BigRational::one();
    }
    // v·p = projection of v onto T⊗Q in the S-coordinates
    let p = s_inv.mul(&diag).mul(&s_rat);

    // equivariant average: π = (1/|X|) Σ x·p·x⁻¹
    let mut pi = RatMatrix::zero(n, n);
    for x in &elements {
        let x_rat = RatMatrix::from_int(x);
        let x_inv = x_rat.inverse().expect("unimodular");
        pi.add_assign(&x_rat.mul(&p).mul(&x_inv));
    }
    let order = BigRational::from_integer(BigInt::from(elements.len() as u64));
    pi.scale(&(BigRational::one() / &order));

    // R = { z ∈ Zⁿ : z·π = 0 } — the saturated integer kernel of W
    let m = pi.clear_denominators();
    let kernel = left_kernel(&m);
    let rows: Vec<Vec<BigInt>> = (0..kernel.rows()).map(|i| kernel.row(i).to_vec()).collect();
    Lattice::new(n, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_snf(a: &IntMatrix) {
        let s = snf(a);
        // U·A·V = D
        let lhs = s.u.mul(a).unwrap().mul(&s.v).unwrap();
        assert_eq!(lhs, s.d, "U·A·V != D for\n{a}");
        // unimodularity
        assert!(s.u.det().unwrap().abs().is_one());
        assert!(s.v.det().unwrap().abs().is_one());
        // diagonal shape and divisibility chain
        for i in 0..s.d.rows() {
            for j in 0..s.d.cols() {
                if i != j {
                    assert!(s.d.at(i, j).is_zero(), "off-diagonal entry");
                }
            }
        }
        let diag = s.diagonal();
        for w in diag.windows(2) {
            if !w[0].is_zero() {
                assert!((&w[1] % &w[0]).is_zero(), "divisibility chain broken");
            } else {
                assert!(w[1].is_zero(), "zero before nonzero in chain");
            }
            assert!(!w[0].is_negative() && !w[1].is_negative());
        }
    }

    #[test]
    fn snf_a4_relation_matrix() {
        let a = IntMatrix::from_i64_rows(&[vec![3, 0], vec![0, 3], vec![2, 2]]);
        let s = snf(&a);
        check_snf(&a);
        assert_eq!(
            s.diagonal(),
            vec![BigInt::from(1), BigInt::from(3)],
            "expected diag(1,3)"
        );
    }

    #[test]
    fn snf_identity_and_zero() {
        let id = IntMatrix::identity(3);
        let s = snf(&id);
        assert_eq!(s.d, id);
        check_snf(&id);

        let z = IntMatrix::zero(2, 4);
        let s = snf(&z);
        assert_eq!(s.d, z);
        check_snf(&z);
    }

    #[test]
    fn lattice_sum_example() {
        let l1 = Lattice::from_i64(2, &[vec![1, 1]]).unwrap();
        let l2 = Lattice::from_i64(2, &[vec![1, -1]]).unwrap();
        let sum = l1.sum(&l2).unwrap();
        let expect = Lattice::from_i64(2, &[vec![1, 1], vec![0, 2]]).unwrap();
        assert_eq!(sum, expect);
        assert_eq!(
            sum.index_in_ambient(),
            LatticeIndex::Finite(BigUint::from(2u32))
        );
        // brute force: residues of Z² mod the sum
        let mut residues = std::collections::HashSet::new();
        for x in 0..4i64 {
            for y in 0..4i64 {
                // reduce (x, y) mod lattice: subtract multiples found by search
                let mut found = None;
                for a in -4..=4i64 {
                    for b in -4..=4i64 {
                        let vx = x - (a + b);
                        let vy = y - (a - b);
                        if (0..2).contains(&vx) && (0..2).contains(&vy) {
                            found = Some((vx, vy));
                        }
                    }
                }
                residues.insert(found.expect("representative in the box"));
            }
        }
        assert_eq!(residues.len(), 2);
    }

    #[test]
    fn lattice_intersection_and_idempotent_sum() {
        let e1 = Lattice::from_i64(2, &[vec![1, 0]]).unwrap();
        let e2 = Lattice::from_i64(2, &[vec![0, 1]]).unwrap();
        assert_eq!(e1.intersection(&e2).unwrap(), Lattice::zero(2));

        let l = Lattice::from_i64(2, &[vec![2, 1], vec![0, 3]]).unwrap();
        assert_eq!(l.sum(&l).unwrap(), l);
    }

    #[test]
    fn lattice_index_examples() {
        let l = Lattice::from_i64(2, &[vec![1, 1], vec![0, 2]]).unwrap();
        assert_eq!(
            l.index_in_ambient(),
            LatticeIndex::Finite(BigUint::from(2u32))
        );
        assert_eq!(
            Lattice::standard(3).index_in_ambient(),
            LatticeIndex::Finite(BigUint::from(1u32))
        );
        let partial = Lattice::from_i64(2, &[vec![1, 0]]).unwrap();
        assert_eq!(partial.index_in_ambient(), LatticeIndex::Infinite);
    }

    #[test]
    fn intersection_nontrivial() {
        // ⟨(2,0),(0,1)⟩ ∩ ⟨(1,1)⟩·Z = multiples of (2,2)
        let l1 = Lattice::from_i64(2, &[vec![2, 0], vec![0, 1]]).unwrap();
        let l2 = Lattice::from_i64(2, &[vec![1, 1]]).unwrap();
        let meet = l1.intersection(&l2).unwrap();
        let expect = Lattice::from_i64(2, &[vec![2, 2]]).unwrap();
        assert_eq!(meet, expect);
    }

    #[test]
    fn invariant_complement_swap_group() {
        // X = ⟨coordinate swap⟩, T = ⟨(1,1)⟩ → R = ⟨(1,-1)⟩
        let swap = IntMatrix::from_i64_rows(&[vec![0, 1], vec![1, 0]]);
        let t = Lattice::from_i64(2, &[vec![1, 1]]).unwrap();
        let r = invariant_complement(&[swap], &t).unwrap();
        let expect = Lattice::from_i64(2, &[vec![1, -1]]).unwrap();
        assert_eq!(r, expect);
        let sum = t.sum(&r).unwrap();
        assert_eq!(
            sum.index_in_ambient(),
            LatticeIndex::Finite(BigUint::from(2u32))
        );
    }

    #[test]
    fn invariant_complement_trivial_group() {
        let t = Lattice::from_i64(3, &[vec![1, 0, 0]]).unwrap();
        let r = invariant_complement(&[], &t).unwrap();
        let expect = Lattice::from_i64(3, &[vec![0, 1, 0], vec![0, 0, 1]]).unwrap();
        assert_eq!(r, expect);
    }

    #[test]
    fn invariant_complement_minus_identity() {
        let minus = IntMatrix::from_i64_rows(&[vec![-1, 0], vec![0, -1]]);
        let t = Lattice::from_i64(2, &[vec![1, 0]]).unwrap();
        let r = invariant_complement(&[minus], &t).unwrap();
        assert_eq!(r, Lattice::from_i64(2, &[vec![0, 1]]).unwrap());
    }

    #[test]
    fn invariant_complement_rejects_bad_input() {
        let not_unimodular = IntMatrix::from_i64_rows(&[vec![2, 0], vec![0, 1]]);
        let t = Lattice::from_i64(2, &[vec![1, 0]]).unwrap();
        assert!(matches!(
            invariant_complement(&[not_unimodular], &t),
            Err(IntLinError::NotUnimodular(_))
        ));

        let swap = IntMatrix::from_i64_rows(&[vec![0, 1], vec![1, 0]]);
        let t = Lattice::from_i64(2, &[vec![1, 0]]).unwrap();
        assert!(matches!(
            invariant_complement(&[swap], &t),
            Err(IntLinError::NotInvariant)
        ));
    }

    #[test]
    fn snf_random_smoke() {
        // small deterministic pseudo-random matrices
        let mut seed = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            seed
        };
        for _ in 0..50 {
            let rows = (next() % 5 + 1) as usize;
            let cols = (next() % 5 + 1) as usize;
            let entries: Vec<BigInt> = (0..rows * cols)
                .map(|_| BigInt::from((next() % 21) as i64 - 10))
                .collect();
            let a = IntMatrix::new(rows, cols, entries).unwrap();
            check_snf(&a);
        }
    }
}
