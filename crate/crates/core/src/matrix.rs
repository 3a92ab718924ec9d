//! Dense matrices over a [`FieldSpec`] with exact Gaussian elimination.

use std::fmt;

use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldMatrix {
    field: FieldSpec,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl FieldMatrix {
    pub fn zeros(field: FieldSpec, rows: usize, cols: usize) -> Self {
        Self { field, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(field: FieldSpec, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Builds a matrix from row vectors of element labels.
    pub fn from_rows(field: FieldSpec, rows: &[Vec<u64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::Parameter("ragged matrix rows".into()));
            }
            for &x in row {
                if !field.contains(x) {
                    return Err(Error::Parameter(format!("{x} is not an element of {field}")));
                }
                data.push(x);
            }
        }
        Ok(Self { field, rows: rows.len(), cols, data })
    }

    pub fn from_elements(field: FieldSpec, rows: &[Vec<FieldElement>]) -> Result<Self> {
        let mut labels = Vec::with_capacity(rows.len());
        for row in rows {
            let mut r = Vec::with_capacity(row.len());
            for e in row {
                if e.spec() != field {
                    return Err(Error::SpecMismatch(field.to_string(), e.spec().to_string()));
                }
                r.push(e.value());
            }
            labels.push(r);
        }
        Self::from_rows(field, &labels)
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn element(&self, r: usize, c: usize) -> FieldElement {
        FieldElement::new(self.field, self.get(r, c)).expect("entries are reduced")
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn column(&self, c: usize) -> Vec<u64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Sub-matrix made of the given columns (0-based), in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut m = Self::zeros(self.field, self.rows, cols.len());
        for r in 0..self.rows {
            for (i, &c) in cols.iter().enumerate() {
                m.set(r, i, self.get(r, c));
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m.set(c, r, self.get(r, c));
            }
        }
        m
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.field != other.field {
            return Err(Error::SpecMismatch(self.field.to_string(), other.field.to_string()));
        }
        if self.cols != other.rows {
            return Err(Error::Parameter(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = self.field;
        let mut out = Self::zeros(f, self.rows, other.cols);
        for r in 0..self.rows {
            for t in 0..self.cols {
                let a = self.get(r, t);
                if a == 0 {
                    continue;
                }
                for c in 0..other.cols {
                    let v = f.add(out.get(r, c), f.mul(a, other.get(t, c)));
                    out.set(r, c, v);
                }
            }
        }
        Ok(out)
    }

    /// Row vector times matrix.
    pub fn left_mul_vec(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.rows, "vector length must match row count");
        let f = self.field;
        let mut out = vec![0; self.cols];
        for (r, &a) in v.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (c, o) in out.iter_mut().enumerate() {
                *o = f.add(*o, f.mul(a, self.get(r, c)));
            }
        }
        out
    }

    /// Reduced row echelon form and the pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let f = self.field;
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut lead = 0;
        for c in 0..m.cols {
            if lead == m.rows {
                break;
            }
            let Some(p) = (lead..m.rows).find(|&r| m.get(r, c) != 0) else {
                continue;
            };
            m.swap_rows(p, lead);
            let inv = f.inv(m.get(lead, c)).expect("pivot is nonzero");
            for j in 0..m.cols {
                m.set(lead, j, f.mul(m.get(lead, j), inv));
            }
            for r in 0..m.rows {
                if r == lead {
                    continue;
                }
                let factor = m.get(r, c);
                if factor == 0 {
                    continue;
                }
                for j in 0..m.cols {
                    let v = f.sub(m.get(r, j), f.mul(factor, m.get(lead, j)));
                    m.set(r, j, v);
                }
            }
            pivots.push(c);
            lead += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Inverse of a square matrix; [`Error::Singular`] when it has none.
    pub fn inverse(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::Parameter(format!(
                "inverse of non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut aug = Self::zeros(self.field, n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug.set(r, c, self.get(r, c));
            }
            aug.set(r, n + r, 1);
        }
        let (red, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(Error::Singular);
        }
        let mut inv = Self::zeros(self.field, n, n);
        for r in 0..n {
            for c in 0..n {
                inv.set(r, c, red.get(r, n + c));
            }
        }
        Ok(inv)
    }

    /// Solves `x · self = target` for a row vector `x`, if `target` is in the row space.
    pub fn solve_left(&self, target: &[u64]) -> Option<Vec<u64>> {
        assert_eq!(target.len(), self.cols, "target length must match column count");
        // Work on [selfᵀ | target] so that the unknowns are columns.
        let f = self.field;
        let mut aug = Self::zeros(f, self.cols, self.rows + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug.set(c, r, self.get(r, c));
            }
        }
        for (c, &t) in target.iter().enumerate() {
            aug.set(c, self.rows, t);
        }
        let (red, pivots) = aug.rref();
        if pivots.last() == Some(&self.rows) {
            return None;
        }
        let mut x = vec![0; self.rows];
        for (i, &p) in pivots.iter().enumerate() {
            x[p] = red.get(i, self.rows);
        }
        Some(x)
    }

    pub fn in_row_space(&self, v: &[u64]) -> bool {
        self.solve_left(v).is_some()
    }
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FieldMatrix {}x{} over {}", self.rows, self.cols, self.field)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|&x| self.field.format_element(x)).collect();
            writeln!(f, "  [{}]", row.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gf2() -> FieldSpec {
        FieldSpec::prime(2).unwrap()
    }

    fn example1() -> FieldMatrix {
        FieldMatrix::from_rows(
            gf2(),
            &[vec![1, 0, 0, 1, 0], vec![0, 1, 0, 1, 0], vec![0, 0, 1, 0, 1]],
        )
        .unwrap()
    }

    #[test]
    fn rank_basics() {
        assert_eq!(FieldMatrix::identity(gf2(), 3).rank(), 3);
        assert_eq!(FieldMatrix::zeros(gf2(), 2, 4).rank(), 0);
        // columns {1,2,4}
        assert_eq!(example1().select_columns(&[0, 1, 3]).rank(), 2);
    }

    #[test]
    fn inverse_examples() {
        let id = FieldMatrix::identity(gf2(), 4);
        assert_eq!(id.inverse().unwrap(), id);
        let sys = example1().select_columns(&[0, 1, 2]);
        assert_eq!(sys.inverse().unwrap(), FieldMatrix::identity(gf2(), 3));
        assert_eq!(example1().select_columns(&[0, 1, 3]).inverse(), Err(Error::Singular));
    }

    #[test]
    fn inverse_iff_full_rank_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for field in [gf2(), FieldSpec::prime(5).unwrap(), FieldSpec::binary(2).unwrap()] {
            for _ in 0..200 {
                let n = rng.random_range(1..=5);
                let rows: Vec<Vec<u64>> = (0..n)
                    .map(|_| (0..n).map(|_| rng.random_range(0..field.order())).collect())
                    .collect();
                let m = FieldMatrix::from_rows(field, &rows).unwrap();
                match m.inverse() {
                    Ok(inv) => {
                        assert_eq!(m.rank(), n);
                        assert_eq!(m.mul(&inv).unwrap(), FieldMatrix::identity(field, n));
                    }
                    Err(Error::Singular) => assert!(m.rank() < n),
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn solve_left_membership() {
        let g = example1();
        let x = g.solve_left(&[1, 0, 1, 1, 1]).unwrap();
        assert_eq!(x, vec![1, 0, 1]);
        assert!(g.solve_left(&[1, 0, 1, 0, 0]).is_none());
    }
}
