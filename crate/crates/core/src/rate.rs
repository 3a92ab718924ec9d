//! PIR achievable rate matrices Λ and their interference matrices A, B.
//!
//! A ν×n binary matrix is a rate matrix for a code when every column has
//! weight κ and every row support contains an information set. Rows and
//! coordinates are 1-based in the public API.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::code::{CoordinateSet, LinearCode, Permutation};
use crate::error::{param, Error, Result};

/// Default cap on search nodes for [`search_rate_matrix`].
pub const DEFAULT_SEARCH_BUDGET: u64 = 50_000_000;
/// Largest blocklength the exhaustive search accepts.
pub const MAX_SEARCH_N: usize = 16;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RateMatrix {
    nu: usize,
    kappa: usize,
    n: usize,
    rows: Vec<Vec<u8>>,
}

impl RateMatrix {
    /// Checks the shape, 0/1 entries, uniform column weight κ and 1 ≤ κ < ν.
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self> {
        let nu = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if nu == 0 || n == 0 {
            return Err(param("rate matrix must be nonempty"));
        }
        if rows.iter().any(|r| r.len() != n || r.iter().any(|&x| x > 1)) {
            return Err(param("rate matrix must be a rectangular 0/1 matrix"));
        }
        let weights = column_weights(&rows);
        let kappa = weights[0];
        if let Some(j) = weights.iter().position(|&w| w != kappa) {
            return Err(param(format!(
                "column {} has weight {} but column 1 has weight {kappa}",
                j + 1,
                weights[j]
            )));
        }
        if kappa == 0 {
            return Err(param("column weight must be at least 1"));
        }
        if kappa == nu {
            return Err(param("column weight κ = ν leaves the interference matrix B empty"));
        }
        Ok(Self { nu, kappa, n, rows })
    }

    /// Indicator rows of the given 1-based supports.
    pub fn from_supports(supports: &[CoordinateSet], n: usize) -> Result<Self> {
        let rows = supports
            .iter()
            .map(|s| {
                let mut r = vec![0u8; n];
                for &j in s.members() {
                    if j == 0 || j > n {
                        return Err(param(format!("coordinate {j} outside 1..={n}")));
                    }
                    r[j - 1] = 1;
                }
                Ok(r)
            })
            .collect::<Result<_>>()?;
        Self::new(rows)
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    /// λ_{u,j} with 1-based indices.
    pub fn entry(&self, u: usize, j: usize) -> u8 {
        self.rows[u - 1][j - 1]
    }

    /// χ(λ_u).
    pub fn support(&self, u: usize) -> CoordinateSet {
        CoordinateSet::from_zero_based(self.rows[u - 1].iter().enumerate().filter(|(_, &x)| x == 1).map(|(j, _)| j))
    }

    /// Text form: `nu kappa n` then ν rows of 0/1.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.nu, self.kappa, self.n);
        for r in &self.rows {
            let row: Vec<String> = r.iter().map(u8::to_string).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(|l| l.split('#').next().unwrap().trim()).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty rate matrix file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header token {t:?}"))))
            .collect::<Result<_>>()?;
        let [nu, kappa, n] = dims[..] else {
            return Err(Error::Parse("header must be `nu kappa n`".into()));
        };
        let mut rows = Vec::with_capacity(nu);
        for _ in 0..nu {
            let line = lines.next().ok_or_else(|| Error::Parse("missing rate matrix row".into()))?;
            let row: Vec<u8> = line
                .split_whitespace()
                .map(|t| match t {
                    "0" => Ok(0),
                    "1" => Ok(1),
                    _ => Err(Error::Parse(format!("rate matrix entry {t:?} is not 0/1"))),
                })
                .collect::<Result<_>>()?;
            if row.len() != n {
                return Err(Error::Parse(format!("row has {} entries, expected {n}", row.len())));
            }
            rows.push(row);
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing content after rate matrix rows".into()));
        }
        let m = Self::new(rows)?;
        if m.kappa != kappa {
            return Err(Error::Parse(format!("header says kappa = {kappa}, columns have weight {}", m.kappa)));
        }
        Ok(m)
    }
}

impl fmt::Debug for RateMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RateMatrix(κ={}, ν={}) {:?}", self.kappa, self.nu, self.rows)
    }
}

fn column_weights(rows: &[Vec<u8>]) -> Vec<usize> {
    let n = rows.first().map_or(0, Vec::len);
    (0..n).map(|j| rows.iter().map(|r| r[j] as usize).sum()).collect()
}

/// Outcome of checking a candidate matrix against a code.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Validation {
    pub valid: bool,
    /// Per row, an information set contained in its support (`None` when absent).
    pub witness: Vec<Option<CoordinateSet>>,
    /// First (1-based) row whose support holds no information set.
    pub failing_row: Option<usize>,
    /// First (1-based) column whose weight differs from the first column's.
    pub failing_column: Option<usize>,
}

/// Checks both rate-matrix conditions on a raw 0/1 matrix.
pub fn validate_rows(rows: &[Vec<u8>], code: &LinearCode) -> Result<Validation> {
    if rows.is_empty() || rows.iter().any(|r| r.len() != code.n()) {
        return Err(param(format!("rate matrix must have {} columns", code.n())));
    }
    let weights = column_weights(rows);
    let failing_column = weights.iter().position(|&w| w != weights[0]).map(|j| j + 1);
    let witness: Vec<Option<CoordinateSet>> = rows
        .iter()
        .map(|r| {
            let s = CoordinateSet::from_zero_based(r.iter().enumerate().filter(|(_, &x)| x == 1).map(|(j, _)| j));
            code.information_set_within(&s)
        })
        .collect();
    let failing_row = witness.iter().position(Option::is_none).map(|i| i + 1);
    Ok(Validation { valid: failing_row.is_none() && failing_column.is_none(), witness, failing_row, failing_column })
}

impl RateMatrix {
    pub fn validate(&self, code: &LinearCode) -> Result<Validation> {
        validate_rows(&self.rows, code)
    }

    /// Returns whether κ/ν = k/n. Errors if κ/ν < k/n, which
    /// no valid matrix can satisfy.
    pub fn ratio_bound_check(&self, code: &LinearCode) -> Result<bool> {
        if self.n != code.n() {
            return Err(param("rate matrix and code lengths differ"));
        }
        let lhs = self.kappa * code.n();
        let rhs = code.k() * self.nu;
        if lhs < rhs {
            return Err(Error::Precondition(format!(
                "κ/ν = {}/{} is below k/n = {}/{}",
                self.kappa,
                self.nu,
                code.k(),
                code.n()
            )));
        }
        Ok(lhs == rhs)
    }

    /// Whether this is an MDS-PIR capacity-achieving matrix for `code`.
    pub fn is_capacity_achieving(&self, code: &LinearCode) -> Result<bool> {
        Ok(self.validate(code)?.valid && self.ratio_bound_check(code)?)
    }

    pub fn interference(&self) -> InterferencePair {
        let mut a = vec![vec![0usize; self.n]; self.kappa];
        let mut b = vec![vec![0usize; self.n]; self.nu - self.kappa];
        for j in 0..self.n {
            let (mut ia, mut ib) = (0, 0);
            for u in 0..self.nu {
                if self.rows[u][j] == 1 {
                    a[ia][j] = u + 1;
                    ia += 1;
                } else {
                    b[ib][j] = u + 1;
                    ib += 1;
                }
            }
        }
        InterferencePair { nu: self.nu, a, b }
    }
}

/// The interference matrices A (κ×n) and B ((ν−κ)×n); column entries ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterferencePair {
    nu: usize,
    a: Vec<Vec<usize>>,
    b: Vec<Vec<usize>>,
}

impl InterferencePair {
    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn kappa(&self) -> usize {
        self.a.len()
    }

    pub fn n(&self) -> usize {
        self.a.first().map_or(0, Vec::len)
    }

    pub fn a(&self) -> &[Vec<usize>] {
        &self.a
    }

    pub fn b(&self) -> &[Vec<usize>] {
        &self.b
    }

    /// a_{i,j}, both 1-based.
    pub fn a_entry(&self, i: usize, j: usize) -> usize {
        self.a[i - 1][j - 1]
    }

    /// b_{i,j}, both 1-based.
    pub fn b_entry(&self, i: usize, j: usize) -> usize {
        self.b[i - 1][j - 1]
    }

    /// S(a|A): columns where some entry of A equals `a`.
    pub fn s_set(&self, a: usize) -> Result<CoordinateSet> {
        if a == 0 || a > self.nu {
            return Err(param(format!("row index {a} outside 1..={}", self.nu)));
        }
        Ok(CoordinateSet::from_zero_based((0..self.n()).filter(|&j| self.a.iter().any(|row| row[j] == a))))
    }

    /// Rebuilds Λ from column membership in A.
    pub fn to_rate_matrix(&self) -> Result<RateMatrix> {
        let mut rows = vec![vec![0u8; self.n()]; self.nu];
        for row in &self.a {
            for (j, &u) in row.iter().enumerate() {
                rows[u - 1][j] = 1;
            }
        }
        RateMatrix::new(rows)
    }

    /// Text rendering of A then B as integer matrices.
    pub fn to_text(&self) -> String {
        let render = |m: &[Vec<usize>]| {
            m.iter()
                .map(|r| r.iter().map(usize::to_string).collect::<Vec<_>>().join(" "))
                .collect::<Vec<_>>()
                .join("\n")
        };
        format!("A\n{}\nB\n{}\n", render(&self.a), render(&self.b))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SetCheck {
    /// The row index `a` (or `b_{i,j}`) examined.
    pub value: usize,
    /// Column `j` for B-entry checks.
    pub column: Option<usize>,
    pub information_set: Option<CoordinateSet>,
    pub excludes_column: bool,
}

/// Result of checking both statements about S(·|A).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InterferenceSetReport {
    pub holds: bool,
    pub a_checks: Vec<SetCheck>,
    pub b_checks: Vec<SetCheck>,
    /// First failing `(value, column)`; column is `None` for an A-statement failure.
    pub failure: Option<(usize, Option<usize>)>,
}

/// Checks that every S(a|A) holds an information set and that, for every
/// entry b_{i,j} of B, S(b_{i,j}|A) avoids j and holds an information set.
pub fn verify_interference_sets(code: &LinearCode, lambda: &RateMatrix) -> Result<InterferenceSetReport> {
    if lambda.n() != code.n() {
        return Err(param("rate matrix and code lengths differ"));
    }
    let pair = lambda.interference();
    let mut failure = None;
    let mut a_checks = Vec::with_capacity(lambda.nu());
    for a in 1..=lambda.nu() {
        let s = pair.s_set(a)?;
        let info = code.information_set_within(&s);
        if info.is_none() && failure.is_none() {
            failure = Some((a, None));
        }
        a_checks.push(SetCheck { value: a, column: None, information_set: info, excludes_column: true });
    }
    let mut b_checks = Vec::new();
    for row in pair.b() {
        for (j, &b) in row.iter().enumerate() {
            let s = pair.s_set(b)?;
            let excludes = !s.contains(j + 1);
            let info = code.information_set_within(&s);
            if (!excludes || info.is_none()) && failure.is_none() {
                failure = Some((b, Some(j + 1)));
            }
            b_checks.push(SetCheck { value: b, column: Some(j + 1), information_set: info, excludes_column: excludes });
        }
    }
    Ok(InterferenceSetReport { holds: failure.is_none(), a_checks, b_checks, failure })
}

/// Λ_{k,n} whose i-th row is the indicator of π_i(I).
pub fn lambda_from_automorphisms(code: &LinearCode, perms: &[Permutation], info: &CoordinateSet) -> Result<RateMatrix> {
    let n = code.n();
    if !code.is_information_set(info)? {
        return Err(Error::Precondition(format!("{info} is not an information set")));
    }
    if perms.len() != n {
        return Err(Error::Precondition(format!("need {n} automorphisms, got {}", perms.len())));
    }
    let distinct: BTreeSet<&Permutation> = perms.iter().collect();
    if distinct.len() != n {
        return Err(Error::Precondition("automorphisms are not distinct".into()));
    }
    for (i, p) in perms.iter().enumerate() {
        if p.len() != n {
            return Err(Error::Precondition(format!("permutation {} has length {}", i + 1, p.len())));
        }
        if !code.is_automorphism(p)? {
            return Err(Error::Precondition(format!("permutation {} is not an automorphism", i + 1)));
        }
    }
    for j in 1..=n {
        let images: BTreeSet<usize> = perms.iter().map(|p| p.apply(j)).collect();
        if images.len() != n {
            return Err(Error::Precondition(format!("images of coordinate {j} do not cover 1..={n}")));
        }
    }
    let supports: Vec<CoordinateSet> = perms.iter().map(|p| p.image_of_set(info)).collect();
    RateMatrix::from_supports(&supports, n)
}

/// Result of an exhaustive rate-matrix search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(RateMatrix),
    /// The whole search space was exhausted without a match.
    NotFound,
    /// The node budget ran out before the space was exhausted.
    Indeterminate { nodes: u64 },
}

impl SearchOutcome {
    pub fn found(&self) -> Option<&RateMatrix> {
        match self {
            Self::Found(m) => Some(m),
            _ => None,
        }
    }
}

/// Exhaustive search for a ν×n rate matrix with column weight κ.
///
/// Rows are drawn from the coordinate sets that contain an information set.
/// The search branches on the most constrained column and covers its whole
/// remaining deficit with a nondecreasing multiset of candidate rows, so each
/// multiset of rows is visited once.
pub fn search_rate_matrix(code: &LinearCode, kappa: usize, nu: usize, budget: u64) -> Result<SearchOutcome> {
    let n = code.n();
    let k = code.k();
    if kappa == 0 || kappa >= nu {
        return Err(param(format!("need 1 <= κ < ν, got κ={kappa}, ν={nu}")));
    }
    if n > MAX_SEARCH_N {
        return Err(Error::Unsupported(format!("exhaustive search needs n <= {MAX_SEARCH_N}")));
    }
    // every row has at least k ones; the rest of the weight bounds the largest row
    let total = n * kappa;
    if total < nu * k {
        return Ok(SearchOutcome::NotFound);
    }
    let max_size = total - (nu - 1) * k;
    let mut candidates: Vec<u32> = (1u32..(1 << n))
        .filter(|&m| {
            let size = m.count_ones() as usize;
            size >= k && size <= max_size && code.rank_on(&mask_indices(m)) == k
        })
        .collect();
    candidates.sort_by_key(|&m| (m.count_ones(), std::cmp::Reverse(m.reverse_bits())));
    let mut search = CoverSearch {
        n,
        candidates: &candidates,
        deficit: vec![kappa; n],
        rows_left: nu,
        chosen: Vec::with_capacity(nu),
        nodes: 0,
        budget,
    };
    match search.solve() {
        Ok(true) => {
            let mut rows: Vec<Vec<u8>> = search
                .chosen
                .iter()
                .map(|&m| (0..n).map(|j| (m >> j & 1) as u8).collect())
                .collect();
            rows.sort();
            Ok(SearchOutcome::Found(RateMatrix::new(rows)?))
        }
        Ok(false) => Ok(SearchOutcome::NotFound),
        Err(nodes) => Ok(SearchOutcome::Indeterminate { nodes }),
    }
}

fn mask_indices(m: u32) -> Vec<usize> {
    (0..32).filter(|j| m >> j & 1 == 1).collect()
}

struct CoverSearch<'a> {
    n: usize,
    candidates: &'a [u32],
    deficit: Vec<usize>,
    rows_left: usize,
    chosen: Vec<u32>,
    nodes: u64,
    budget: u64,
}

impl CoverSearch<'_> {
    fn open_mask(&self) -> u32 {
        (0..self.n).filter(|&j| self.deficit[j] > 0).fold(0, |m, j| m | 1 << j)
    }

    /// `Err(nodes)` when the budget runs out.
    fn solve(&mut self) -> Result<bool, u64> {
        let open = self.open_mask();
        if open == 0 {
            return Ok(self.rows_left == 0);
        }
        if self.rows_left == 0 {
            return Ok(false);
        }
        let live: Vec<u32> = self.candidates.iter().copied().filter(|&c| c & !open == 0).collect();
        if live.is_empty() {
            return Ok(false);
        }
        let total: usize = self.deficit.iter().sum();
        let min_size = live.iter().map(|c| c.count_ones() as usize).min().unwrap();
        let max_size = live.iter().map(|c| c.count_ones() as usize).max().unwrap();
        if total < min_size * self.rows_left || total > max_size * self.rows_left {
            return Ok(false);
        }
        if self.deficit.iter().any(|&d| d > self.rows_left) {
            return Ok(false);
        }
        // most constrained open column
        let mut best: Option<(usize, usize)> = None;
        for j in (0..self.n).filter(|&j| self.deficit[j] > 0) {
            let count = live.iter().filter(|&&c| c >> j & 1 == 1).count();
            if count == 0 {
                return Ok(false);
            }
            if best.is_none_or(|(_, b)| count < b) {
                best = Some((j, count));
            }
        }
        let (col, _) = best.unwrap();
        let options: Vec<u32> = live.into_iter().filter(|&c| c >> col & 1 == 1).collect();
        let need = self.deficit[col];
        self.cover_column(&options, 0, need)
    }

    /// Chooses `need` more rows (nondecreasing in `options`) through the branching column.
    fn cover_column(&mut self, options: &[u32], start: usize, need: usize) -> Result<bool, u64> {
        if need == 0 {
            return self.solve();
        }
        if self.rows_left < need {
            return Ok(false);
        }
        for idx in start..options.len() {
            let c = options[idx];
            if (0..self.n).any(|j| c >> j & 1 == 1 && self.deficit[j] == 0) {
                continue;
            }
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(self.nodes);
            }
            self.apply(c, true);
            let done = self.cover_column(options, idx, need - 1)?;
            if done {
                return Ok(true);
            }
            self.apply(c, false);
        }
        Ok(false)
    }

    fn apply(&mut self, c: u32, add: bool) {
        for j in 0..self.n {
            if c >> j & 1 == 1 {
                if add {
                    self.deficit[j] -= 1;
                } else {
                    self.deficit[j] += 1;
                }
            }
        }
        if add {
            self.rows_left -= 1;
            self.chosen.push(c);
        } else {
            self.rows_left += 1;
            self.chosen.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;
    use crate::matrix::FieldMatrix;

    fn example1() -> LinearCode {
        let g = FieldMatrix::from_rows(
            FieldSpec::prime(2).unwrap(),
            &[vec![1, 0, 0, 1, 0], vec![0, 1, 0, 1, 0], vec![0, 0, 1, 0, 1]],
        )
        .unwrap();
        LinearCode::from_generator(g).unwrap()
    }

    fn example1_lambda() -> RateMatrix {
        RateMatrix::new(vec![vec![0, 1, 1, 1, 1], vec![1, 0, 0, 1, 1], vec![1, 1, 1, 0, 0]]).unwrap()
    }

    fn mds533() -> LinearCode {
        LinearCode::mds(FieldSpec::prime(5).unwrap(), 5, 3).unwrap()
    }

    fn mds_lambda() -> RateMatrix {
        let sets = [[1, 2, 3], [1, 4, 5], [2, 3, 4], [1, 2, 5], [3, 4, 5]];
        let supports: Vec<CoordinateSet> = sets.iter().map(|s| CoordinateSet::new(s.iter().copied(), 5).unwrap()).collect();
        RateMatrix::from_supports(&supports, 5).unwrap()
    }

    #[test]
    fn example_matrices_validate() {
        let v = example1_lambda().validate(&example1()).unwrap();
        assert!(v.valid);
        assert_eq!(v.witness.len(), 3);
        assert!(mds_lambda().validate(&mds533()).unwrap().valid);
    }

    #[test]
    fn row_without_information_set_is_reported() {
        // supports {1,2,4}, {3,5}, {1,…,5}: every column has weight 2
        let rows = vec![vec![1, 1, 0, 1, 0], vec![0, 0, 1, 0, 1], vec![1, 1, 1, 1, 1]];
        let v = validate_rows(&rows, &example1()).unwrap();
        assert!(!v.valid);
        assert_eq!(v.failing_row, Some(1));
    }

    #[test]
    fn construction_rejects_bad_shapes() {
        assert!(RateMatrix::new(vec![vec![1, 1], vec![1, 1]]).is_err()); // κ = ν
        assert!(RateMatrix::new(vec![vec![1, 0], vec![1, 1]]).is_err()); // uneven
        assert!(RateMatrix::new(vec![vec![2, 0], vec![0, 1]]).is_err());
    }

    #[test]
    fn interference_of_example() {
        let pair = example1_lambda().interference();
        assert_eq!(pair.a(), &[vec![2, 1, 1, 1, 1], vec![3, 3, 3, 2, 2]]);
        assert_eq!(pair.b(), &[vec![1, 2, 2, 3, 3]]);
        assert_eq!(pair.s_set(1).unwrap().members(), &[2, 3, 4, 5]);
        assert_eq!(pair.s_set(2).unwrap().members(), &[1, 4, 5]);
        assert!(pair.s_set(0).is_err());
        assert!(pair.s_set(4).is_err());
        assert_eq!(pair.to_rate_matrix().unwrap(), example1_lambda());
    }

    #[test]
    fn identity_interference() {
        let id: Vec<Vec<u8>> = (0..4).map(|i| (0..4).map(|j| u8::from(i == j)).collect()).collect();
        let pair = RateMatrix::new(id).unwrap().interference();
        assert_eq!(pair.a(), &[vec![1, 2, 3, 4]]);
        assert_eq!(pair.s_set(1).unwrap().members(), &[1]);
    }

    #[test]
    fn interference_set_checks() {
        assert!(verify_interference_sets(&example1(), &example1_lambda()).unwrap().holds);
        assert!(verify_interference_sets(&mds533(), &mds_lambda()).unwrap().holds);
        // row 1 = {1,2,4} has no information set
        let bad = RateMatrix::new(vec![vec![1, 1, 0, 1, 0], vec![0, 0, 1, 0, 1], vec![1, 1, 1, 1, 1]]).unwrap();
        let report = verify_interference_sets(&example1(), &bad).unwrap();
        assert!(!report.holds);
        assert_eq!(report.failure, Some((1, None)));
    }

    #[test]
    fn ratio_bound() {
        assert!(!example1_lambda().ratio_bound_check(&example1()).unwrap());
        assert!(mds_lambda().ratio_bound_check(&mds533()).unwrap());
        let rep = LinearCode::repetition(FieldSpec::prime(2).unwrap(), 4).unwrap();
        let id: Vec<Vec<u8>> = (0..4).map(|i| (0..4).map(|j| u8::from(i == j)).collect()).collect();
        assert!(RateMatrix::new(id).unwrap().ratio_bound_check(&rep).unwrap());
    }

    #[test]
    fn search_examples() {
        let found = search_rate_matrix(&mds533(), 3, 5, DEFAULT_SEARCH_BUDGET).unwrap();
        let m = found.found().expect("MDS code has a Λ_{3,5}");
        assert!(m.validate(&mds533()).unwrap().valid);
        assert_eq!(search_rate_matrix(&example1(), 3, 5, DEFAULT_SEARCH_BUDGET).unwrap(), SearchOutcome::NotFound);
        let rep = LinearCode::repetition(FieldSpec::prime(2).unwrap(), 5).unwrap();
        let m = search_rate_matrix(&rep, 1, 5, DEFAULT_SEARCH_BUDGET).unwrap();
        let m = m.found().unwrap();
        for (i, row) in m.rows().iter().enumerate() {
            assert_eq!(row.iter().filter(|&&x| x == 1).count(), 1, "row {i}");
        }
        let found = search_rate_matrix(&example1(), 2, 3, DEFAULT_SEARCH_BUDGET).unwrap();
        assert!(found.found().unwrap().validate(&example1()).unwrap().valid);
    }

    #[test]
    fn search_budget_reports_indeterminate() {
        let out = search_rate_matrix(&example1(), 6, 10, 1).unwrap();
        assert!(matches!(out, SearchOutcome::Indeterminate { .. }));
    }

    #[test]
    fn automorphism_construction() {
        let f2 = FieldSpec::prime(2).unwrap();
        let ham = LinearCode::cyclic(f2, 7, &[1, 1, 0, 1]).unwrap();
        let perms = ham.automorphism_family(crate::code::AutomorphismKind::CyclicShifts).unwrap();
        let info = CoordinateSet::new([1, 2, 3, 4], 7).unwrap();
        let lam = lambda_from_automorphisms(&ham, &perms, &info).unwrap();
        assert_eq!((lam.kappa(), lam.nu()), (4, 7));
        assert!(lam.validate(&ham).unwrap().valid);

        let mds = mds533();
        let perms: Vec<Permutation> = (0..5).map(|s| Permutation::cyclic_shift(5, s)).collect();
        let lam = lambda_from_automorphisms(&mds, &perms, &CoordinateSet::new([1, 2, 3], 5).unwrap()).unwrap();
        assert_eq!((lam.kappa(), lam.nu()), (3, 5));

        // identity repeated violates distinctness
        let bad = vec![Permutation::identity(7); 7];
        assert!(matches!(lambda_from_automorphisms(&ham, &bad, &info), Err(Error::Precondition(_))));
    }

    #[test]
    fn text_round_trip() {
        let m = example1_lambda();
        assert_eq!(RateMatrix::from_text(&m.to_text()).unwrap(), m);
        assert!(RateMatrix::from_text("3 1 5\n0 1 1 1 1\n1 0 0 1 1\n1 1 1 0 0\n").is_err());
    }
}
