//! Linear [n,k] codes over a finite field.
//!
//! Coordinates are 1-based in every public type ([`CoordinateSet`],
//! [`Permutation`]) and in the text formats; internal indexing is 0-based.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::field::FieldSpec;
use crate::matrix::FieldMatrix;

/// Default cap on the number of codewords enumerated by brute-force analyses.
pub const DEFAULT_CODEWORD_BUDGET: u128 = 1 << 24;
/// Default cap on search nodes visited by the generalized Hamming weight search.
pub const DEFAULT_GHW_NODE_BUDGET: u64 = 200_000_000;

/// Sorted, duplicate-free set of 1-based coordinates.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoordinateSet(Vec<usize>);

impl CoordinateSet {
    /// Validates that every member lies in `1..=n`. Duplicates are merged.
    pub fn new(members: impl IntoIterator<Item = usize>, n: usize) -> Result<Self> {
        let set: BTreeSet<usize> = members.into_iter().collect();
        if let Some(&bad) = set.iter().find(|&&j| j == 0 || j > n) {
            return Err(param(format!("coordinate {bad} outside 1..={n}")));
        }
        Ok(Self(set.into_iter().collect()))
    }

    pub fn from_zero_based(indices: impl IntoIterator<Item = usize>) -> Self {
        let set: BTreeSet<usize> = indices.into_iter().map(|i| i + 1).collect();
        Self(set.into_iter().collect())
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn indices(&self) -> Vec<usize> {
        self.0.iter().map(|j| j - 1).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn is_subset(&self, other: &CoordinateSet) -> bool {
        self.0.iter().all(|&j| other.contains(j))
    }
}

impl fmt::Display for CoordinateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl fmt::Debug for CoordinateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A bijection on `{1,…,n}` stored as its image sequence.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &j in &images {
            if j == 0 || j > n || seen[j - 1] {
                return Err(param(format!("{images:?} is not a permutation of 1..={n}")));
            }
            seen[j - 1] = true;
        }
        Ok(Self(images))
    }

    pub fn identity(n: usize) -> Self {
        Self((1..=n).collect())
    }

    /// `j ↦ j + shift` (mod n).
    pub fn cyclic_shift(n: usize, shift: usize) -> Self {
        Self((0..n).map(|j| (j + shift) % n + 1).collect())
    }

    /// Image of 1-based coordinate `j`.
    pub fn apply(&self, j: usize) -> usize {
        self.0[j - 1]
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn image_of_set(&self, set: &CoordinateSet) -> CoordinateSet {
        CoordinateSet::new(set.members().iter().map(|&j| self.apply(j)), self.len())
            .expect("permutation images stay in range")
    }
}

/// How a code was built; used to pick automorphism families.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Construction {
    Generator,
    Cyclic { generator_polynomial: Vec<u64> },
    ReedMuller { r: u32, e: u32 },
    Mds,
    Repetition,
}

/// An [n,k] linear code held as its k×n generator matrix.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LinearCode {
    generator: FieldMatrix,
    construction: Construction,
}

/// Automorphism families with the regular-action property.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AutomorphismKind {
    CyclicShifts,
    RmTranslations,
}

impl FromStr for AutomorphismKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cyclic" | "cyclic_shifts" => Ok(Self::CyclicShifts),
            "rm" | "rm_translations" => Ok(Self::RmTranslations),
            _ => Err(Error::Parse(format!("unknown automorphism family {s:?}"))),
        }
    }
}

// Polynomial helpers, coefficients lowest degree first.

fn poly_trim(mut p: Vec<u64>) -> Vec<u64> {
    while p.last() == Some(&0) {
        p.pop();
    }
    p
}

/// Remainder of `a` divided by `b` over `field`; `b` must be nonzero.
pub(crate) fn poly_rem(field: FieldSpec, a: &[u64], b: &[u64]) -> Vec<u64> {
    let b = poly_trim(b.to_vec());
    let mut r = poly_trim(a.to_vec());
    let lead_inv = field.inv(*b.last().expect("nonzero divisor")).expect("nonzero lead");
    while r.len() >= b.len() {
        let shift = r.len() - b.len();
        let factor = field.mul(*r.last().unwrap(), lead_inv);
        for (i, &bc) in b.iter().enumerate() {
            r[shift + i] = field.sub(r[shift + i], field.mul(factor, bc));
        }
        r = poly_trim(r);
    }
    r
}

impl LinearCode {
    /// Wraps `generator` verbatim; it must have full row rank.
    pub fn from_generator(generator: FieldMatrix) -> Result<Self> {
        Self::with_construction(generator, Construction::Generator)
    }

    fn with_construction(generator: FieldMatrix, construction: Construction) -> Result<Self> {
        let (k, n) = (generator.rows(), generator.cols());
        if k == 0 || k > n {
            return Err(Error::InvalidCode(format!("need 1 <= k <= n, got k={k}, n={n}")));
        }
        let rank = generator.rank();
        if rank != k {
            return Err(Error::InvalidCode(format!("generator has rank {rank} < {k}")));
        }
        Ok(Self { generator, construction })
    }

    /// Cyclic code of length `n` generated by `g` (coefficients lowest degree first).
    pub fn cyclic(field: FieldSpec, n: usize, g: &[u64]) -> Result<Self> {
        let g = poly_trim(g.to_vec());
        if g.is_empty() {
            return Err(Error::InvalidPolynomial(n));
        }
        if g.iter().any(|&c| !field.contains(c)) {
            return Err(param("generator polynomial coefficient outside the field"));
        }
        let deg = g.len() - 1;
        if n == 0 || deg >= n {
            return Err(Error::InvalidPolynomial(n));
        }
        let mut xn1 = vec![0; n + 1];
        xn1[0] = field.neg(1);
        xn1[n] = 1;
        if !poly_rem(field, &xn1, &g).is_empty() {
            return Err(Error::InvalidPolynomial(n));
        }
        let k = n - deg;
        let mut m = FieldMatrix::zeros(field, k, n);
        for i in 0..k {
            for (t, &c) in g.iter().enumerate() {
                m.set(i, i + t, c);
            }
        }
        Self::with_construction(m, Construction::Cyclic { generator_polynomial: g })
    }

    /// Binary Reed–Muller code RM(r, e); coordinates are the points of GF(2)^e in
    /// lexicographic order (coordinate j ↔ binary expansion of j−1, first
    /// component most significant).
    pub fn reed_muller(r: u32, e: u32) -> Result<Self> {
        if r > e {
            return Err(param(format!("RM({r},{e}) needs r <= e")));
        }
        if e > 12 {
            return Err(Error::Unsupported(format!("RM(·,{e}) blocklength too large")));
        }
        let field = FieldSpec::prime(2)?;
        let n = 1usize << e;
        let mut monomials: Vec<u32> = (0u32..(1 << e)).filter(|m| m.count_ones() <= r).collect();
        // degree first, then lexicographic on the variable list
        monomials.sort_by_key(|&m| {
            let vars: Vec<u32> = (0..e).filter(|t| m >> (e - 1 - t) & 1 == 1).collect();
            (m.count_ones(), vars)
        });
        let mut g = FieldMatrix::zeros(field, monomials.len(), n);
        for (row, &mono) in monomials.iter().enumerate() {
            for p in 0..n as u32 {
                // point bit for variable t is bit (e-1-t) of p; same convention as mono
                g.set(row, p as usize, u64::from(p & mono == mono));
            }
        }
        Self::with_construction(g, Construction::ReedMuller { r, e })
    }

    /// Generalized Reed–Solomon code on evaluation points `0, 1, …, n−1`
    /// (field labels) with unit column multipliers.
    pub fn mds(field: FieldSpec, n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(param(format!("need 1 <= k <= n, got k={k}, n={n}")));
        }
        if n == k {
            return Self::with_construction(FieldMatrix::identity(field, n), Construction::Mds);
        }
        if (field.order() as u128) < n as u128 {
            return Err(Error::FieldTooSmall { q: field.order(), n });
        }
        let mut g = FieldMatrix::zeros(field, k, n);
        for j in 0..n {
            for i in 0..k {
                g.set(i, j, field.pow(j as u64, i as u64));
            }
        }
        Self::with_construction(g, Construction::Mds)
    }

    /// The [n,1] repetition code.
    pub fn repetition(field: FieldSpec, n: usize) -> Result<Self> {
        let g = FieldMatrix::from_rows(field, &[vec![1; n]])?;
        Self::with_construction(g, Construction::Repetition)
    }

    pub fn field(&self) -> FieldSpec {
        self.generator.field()
    }

    pub fn n(&self) -> usize {
        self.generator.cols()
    }

    pub fn k(&self) -> usize {
        self.generator.rows()
    }

    pub fn generator(&self) -> &FieldMatrix {
        &self.generator
    }

    pub fn construction(&self) -> &Construction {
        &self.construction
    }

    /// Message row vector times G.
    pub fn encode(&self, message: &[u64]) -> Result<Vec<u64>> {
        if message.len() != self.k() {
            return Err(param(format!("message length {} != k = {}", message.len(), self.k())));
        }
        Ok(self.generator.left_mul_vec(message))
    }

    pub fn is_codeword(&self, word: &[u64]) -> bool {
        word.len() == self.n() && self.generator.in_row_space(word)
    }

    /// Rank of G restricted to the 0-based columns `cols`.
    pub fn rank_on(&self, cols: &[usize]) -> usize {
        self.generator.select_columns(cols).rank()
    }

    /// Whether `set` (|set| = k) is an information set.
    pub fn is_information_set(&self, set: &CoordinateSet) -> Result<bool> {
        if set.len() != self.k() {
            return Err(param(format!("information set candidates need {} coordinates, got {}", self.k(), set.len())));
        }
        self.check_range(set)?;
        Ok(self.rank_on(&set.indices()) == self.k())
    }

    pub fn contains_information_set(&self, set: &CoordinateSet) -> bool {
        self.rank_on(&set.indices()) == self.k()
    }

    /// An information set inside `set` (lexicographically first by greedy pivoting).
    pub fn information_set_within(&self, set: &CoordinateSet) -> Option<CoordinateSet> {
        let cols = set.indices();
        let (_, pivots) = self.generator.select_columns(&cols).rref();
        (pivots.len() == self.k()).then(|| CoordinateSet::from_zero_based(pivots.iter().map(|&p| cols[p])))
    }

    /// All information sets, in lexicographic order.
    pub fn information_sets(&self) -> Vec<CoordinateSet> {
        k_subsets(self.n(), self.k())
            .into_iter()
            .filter(|s| self.rank_on(s) == self.k())
            .map(CoordinateSet::from_zero_based)
            .collect()
    }

    fn check_range(&self, set: &CoordinateSet) -> Result<()> {
        match set.members().last() {
            Some(&j) if j > self.n() => Err(param(format!("coordinate {j} outside 1..={}", self.n()))),
            _ => Ok(()),
        }
    }

    fn codeword_count(&self) -> u128 {
        (self.field().order() as u128).saturating_pow(self.k() as u32)
    }

    /// Calls `visit` on every codeword (including zero), in odometer order of messages.
    pub fn for_each_codeword(&self, budget: u128, mut visit: impl FnMut(&[u64], &[u64])) -> Result<()> {
        let total = self.codeword_count();
        if total > budget {
            return Err(Error::TooLarge { needed: total, budget });
        }
        let f = self.field();
        let q = f.order();
        let (k, n) = (self.k(), self.n());
        let mut digits = vec![0u64; k];
        let mut word = vec![0u64; n];
        loop {
            visit(&digits, &word);
            // increment digit d adds row d, including the wrap-around q-1 -> 0
            let mut d = 0;
            loop {
                if d == k {
                    return Ok(());
                }
                digits[d] = if digits[d] + 1 == q { 0 } else { digits[d] + 1 };
                for (w, &g) in word.iter_mut().zip(self.generator.row(d)) {
                    *w = f.add(*w, g);
                }
                if digits[d] != 0 {
                    break;
                }
                d += 1;
            }
        }
    }

    pub fn min_distance(&self) -> Result<usize> {
        self.min_distance_with_budget(DEFAULT_CODEWORD_BUDGET)
    }

    pub fn min_distance_with_budget(&self, budget: u128) -> Result<usize> {
        let mut best = usize::MAX;
        self.for_each_codeword(budget, |_, w| {
            let wt = w.iter().filter(|&&x| x != 0).count();
            if wt > 0 && wt < best {
                best = wt;
            }
        })?;
        Ok(best)
    }

    /// s-th generalized Hamming weight by branch-and-bound over s-tuples of
    /// linearly independent codewords.
    pub fn generalized_hamming_weight(&self, s: usize) -> Result<usize> {
        self.generalized_hamming_weight_with_budget(s, DEFAULT_CODEWORD_BUDGET, DEFAULT_GHW_NODE_BUDGET)
    }

    pub fn generalized_hamming_weight_with_budget(&self, s: usize, codewords: u128, nodes: u64) -> Result<usize> {
        Ok(self.weight_hierarchy_upto(s, codewords, nodes)?[s - 1])
    }

    /// `[d_1, …, d_s]`.
    pub fn weight_hierarchy_upto(&self, s: usize, codeword_budget: u128, node_budget: u64) -> Result<Vec<usize>> {
        if s == 0 || s > self.k() {
            return Err(param(format!("s = {s} outside 1..={}", self.k())));
        }
        if self.n() > 128 {
            return Err(Error::Unsupported("generalized Hamming weights need n <= 128".into()));
        }
        let words = self.projective_codewords(codeword_budget)?;
        let mut search = GhwSearch { words: &words, field: self.field(), nodes: 0, node_budget };
        let mut out = Vec::with_capacity(s);
        for t in 1..=s {
            out.push(search.run(t, self.n() + 1)?);
        }
        Ok(out)
    }

    /// One representative per 1-dimensional subcode (first nonzero message digit = 1),
    /// sorted by weight.
    fn projective_codewords(&self, budget: u128) -> Result<Vec<Word>> {
        let mut words = Vec::new();
        self.for_each_codeword(budget, |msg, w| {
            if msg.iter().find(|&&x| x != 0) == Some(&1) {
                let support = w.iter().enumerate().filter(|(_, &x)| x != 0).fold(0u128, |acc, (j, _)| acc | 1 << j);
                words.push(Word { message: msg.to_vec(), support });
            }
        })?;
        words.sort_by_key(|w| (w.support.count_ones(), w.support));
        Ok(words)
    }

    /// The code with G's column `j` moved to position `π(j)`.
    pub fn apply_permutation(&self, perm: &Permutation) -> Result<LinearCode> {
        if perm.len() != self.n() {
            return Err(param(format!("permutation of length {} on a code of length {}", perm.len(), self.n())));
        }
        let mut g = FieldMatrix::zeros(self.field(), self.k(), self.n());
        for r in 0..self.k() {
            for j in 0..self.n() {
                g.set(r, perm.apply(j + 1) - 1, self.generator.get(r, j));
            }
        }
        Ok(LinearCode { generator: g, construction: Construction::Generator })
    }

    /// Whether the permuted code equals this code as a set of codewords.
    pub fn is_automorphism(&self, perm: &Permutation) -> Result<bool> {
        let permuted = self.apply_permutation(perm)?;
        let space = RowSpace::new(&self.generator);
        Ok(permuted.generator.rank() == self.k()
            && (0..self.k()).all(|r| space.contains(permuted.generator.row(r))))
    }

    /// `n` automorphisms whose images of every coordinate cover `{1,…,n}`.
    pub fn automorphism_family(&self, kind: AutomorphismKind) -> Result<Vec<Permutation>> {
        let n = self.n();
        let perms: Vec<Permutation> = match kind {
            AutomorphismKind::CyclicShifts => {
                if !self.is_automorphism(&Permutation::cyclic_shift(n, 1))? {
                    return Err(Error::Unsupported("code is not invariant under cyclic shifts".into()));
                }
                (0..n).map(|s| Permutation::cyclic_shift(n, s)).collect()
            }
            AutomorphismKind::RmTranslations => {
                if !n.is_power_of_two() || self.field().order() != 2 {
                    return Err(Error::Unsupported("translations need a binary code of length 2^e".into()));
                }
                let perms: Vec<Permutation> =
                    (0..n).map(|v| Permutation((0..n).map(|p| (p ^ v) + 1).collect())).collect();
                for p in &perms {
                    if !self.is_automorphism(p)? {
                        return Err(Error::Unsupported("code is not invariant under GF(2)^e translations".into()));
                    }
                }
                perms
            }
        };
        Ok(perms)
    }

    /// Renders the code file format.
    pub fn to_text(&self) -> String {
        let f = self.field();
        let mut s = format!("field: {f}\n{} {}\n", self.n(), self.k());
        for r in 0..self.k() {
            let row: Vec<String> = self.generator.row(r).iter().map(|&x| f.format_element(x)).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    /// Parses the code file format; blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(|l| l.split('#').next().unwrap().trim()).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty code file".into()))?;
        let spec = header
            .strip_prefix("field:")
            .ok_or_else(|| Error::Parse("first line must be `field: <spec>`".into()))?;
        let field: FieldSpec = spec.trim().parse()?;
        let dims = lines.next().ok_or_else(|| Error::Parse("missing `n k` line".into()))?;
        let dims: Vec<usize> = dims
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad dimension {t:?}"))))
            .collect::<Result<_>>()?;
        let [n, k] = dims[..] else {
            return Err(Error::Parse("dimension line must be `n k`".into()));
        };
        let mut rows = Vec::with_capacity(k);
        for _ in 0..k {
            let line = lines.next().ok_or_else(|| Error::Parse("missing generator row".into()))?;
            let row: Vec<u64> = line.split_whitespace().map(|t| field.parse_element(t)).collect::<Result<_>>()?;
            if row.len() != n {
                return Err(Error::Parse(format!("generator row has {} entries, expected {n}", row.len())));
            }
            rows.push(row);
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing content after generator rows".into()));
        }
        Self::from_generator(FieldMatrix::from_rows(field, &rows)?)
    }
}

impl fmt::Display for LinearCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}] code over {}", self.n(), self.k(), self.field())
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::new(), &mut out);
    }
    out
}

/// Row space of a generator matrix kept in reduced echelon form.
#[derive(Clone, Debug)]
pub struct RowSpace {
    rref: FieldMatrix,
    pivots: Vec<usize>,
}

impl RowSpace {
    pub fn new(m: &FieldMatrix) -> Self {
        let (rref, pivots) = m.rref();
        Self { rref, pivots }
    }

    pub fn dim(&self) -> usize {
        self.pivots.len()
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        let f = self.rref.field();
        let mut rest = v.to_vec();
        for (i, &p) in self.pivots.iter().enumerate() {
            let c = rest[p];
            if c == 0 {
                continue;
            }
            for (x, &r) in rest.iter_mut().zip(self.rref.row(i)) {
                *x = f.sub(*x, f.mul(c, r));
            }
        }
        rest.iter().all(|&x| x == 0)
    }
}

struct Word {
    message: Vec<u64>,
    support: u128,
}

struct GhwSearch<'a> {
    words: &'a [Word],
    field: FieldSpec,
    nodes: u64,
    node_budget: u64,
}

impl GhwSearch<'_> {
    /// Smallest union of supports over `s` independent words, below `bound`.
    fn run(&mut self, s: usize, bound: usize) -> Result<usize> {
        let mut best = bound;
        let mut basis: Vec<(usize, Vec<u64>)> = Vec::with_capacity(s);
        self.dfs(0, s, 0, &mut basis, &mut best)?;
        Ok(best)
    }

    fn dfs(&mut self, start: usize, s: usize, union: u128, basis: &mut Vec<(usize, Vec<u64>)>, best: &mut usize) -> Result<()> {
        if basis.len() == s {
            *best = (*best).min(union.count_ones() as usize);
            return Ok(());
        }
        let need = s - basis.len();
        for idx in start..self.words.len() {
            if self.words.len() - idx < need {
                break;
            }
            self.nodes += 1;
            if self.nodes > self.node_budget {
                return Err(Error::TooLarge { needed: self.nodes as u128, budget: self.node_budget as u128 });
            }
            let w = &self.words[idx];
            let u = union | w.support;
            // adding independent vectors never shrinks the support
            if u.count_ones() as usize >= *best {
                continue;
            }
            if let Some(reduced) = reduce_against(self.field, basis, &w.message) {
                let pivot = reduced.iter().position(|&x| x != 0).unwrap();
                basis.push((pivot, reduced));
                self.dfs(idx + 1, s, u, basis, best)?;
                basis.pop();
            }
        }
        Ok(())
    }
}

/// Reduces `v` against an echelon basis; `None` when `v` is in the span.
fn reduce_against(field: FieldSpec, basis: &[(usize, Vec<u64>)], v: &[u64]) -> Option<Vec<u64>> {
    let mut r = v.to_vec();
    for (pivot, b) in basis {
        let c = r[*pivot];
        if c == 0 {
            continue;
        }
        let scale = field.div(c, b[*pivot]).expect("pivot nonzero");
        for (x, &y) in r.iter_mut().zip(b) {
            *x = field.sub(*x, field.mul(scale, y));
        }
    }
    r.iter().any(|&x| x != 0).then_some(r)
}
