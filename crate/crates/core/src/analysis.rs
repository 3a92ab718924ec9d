//! Closed-form PIR rates, the weight-hierarchy screen, code classification
//! and the exhaustive small-code scan.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::code::{k_subsets, AutomorphismKind, LinearCode, DEFAULT_CODEWORD_BUDGET, DEFAULT_GHW_NODE_BUDGET};
use crate::error::{param, Error, Result};
use crate::field::FieldSpec;
use crate::matrix::FieldMatrix;
use crate::rate::{lambda_from_automorphisms, search_rate_matrix, RateMatrix, SearchOutcome, MAX_SEARCH_N};

fn ratio(a: usize, b: usize) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// `(1 − x^f)^{-1} · y` for exact rationals.
fn geometric(y: BigRational, x: BigRational, f: usize) -> BigRational {
    let denom = BigRational::one() - num_traits::pow(x, f);
    y / denom
}

/// Renders `p/q (decimal)`.
pub fn render_rational(r: &BigRational) -> String {
    let decimal = r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN);
    format!("{}/{} ({})", r.numer(), r.denom(), decimal)
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// C_f = ((n−k)/n) / (1 − (k/n)^f); 1 when k = n.
pub fn mds_pir_capacity(n: usize, k: usize, f: usize) -> Result<BigRational> {
    if k == 0 || k > n || f == 0 {
        return Err(param(format!("capacity needs 1 <= k <= n and f >= 1, got n={n} k={k} f={f}")));
    }
    if k == n {
        return Ok(BigRational::one());
    }
    Ok(geometric(ratio(n - k, n), ratio(k, n), f))
}

/// Limit of the capacity as the number of files grows, (n−k)/n.
pub fn mds_pir_capacity_limit(n: usize, k: usize) -> Result<BigRational> {
    if k == 0 || k > n {
        return Err(param(format!("capacity needs 1 <= k <= n, got n={n} k={k}")));
    }
    Ok(ratio(n - k, n))
}

/// R = ((ν−κ)k/(κn)) / (1 − (κ/ν)^f) from raw parameters.
pub fn rate_from_parameters(kappa: usize, nu: usize, n: usize, k: usize, f: usize) -> Result<BigRational> {
    if kappa == 0 || kappa >= nu || k == 0 || k > n || f == 0 {
        return Err(param(format!("rate needs 1 <= κ < ν, 1 <= k <= n, f >= 1; got κ={kappa} ν={nu} n={n} k={k} f={f}")));
    }
    Ok(geometric(ratio((nu - kappa) * k, kappa * n), ratio(kappa, nu), f))
}

/// Rate of the protocol driven by `lambda` on `code`.
pub fn achievable_rate(lambda: &RateMatrix, code: &LinearCode, f: usize) -> Result<BigRational> {
    if lambda.n() != code.n() {
        return Err(param("rate matrix and code lengths differ"));
    }
    let v = lambda.validate(code)?;
    if !v.valid {
        return Err(param(format!("rate matrix is not valid for the code (row {:?} fails)", v.failing_row)));
    }
    rate_from_parameters(lambda.kappa(), lambda.nu(), code.n(), code.k(), f)
}

/// Limit of the rate as the number of files grows, (ν−κ)k/(κn).
pub fn achievable_rate_limit(kappa: usize, nu: usize, n: usize, k: usize) -> Result<BigRational> {
    if kappa == 0 || kappa >= nu || k == 0 || k > n {
        return Err(param("rate needs 1 <= κ < ν and 1 <= k <= n"));
    }
    Ok(ratio((nu - kappa) * k, kappa * n))
}

/// Rate guaranteed by the minimum distance alone:
/// (t/n) / (1 − (k/(k+t))^f) with t = min(k, d−1).
pub fn distance_rate(code: &LinearCode, f: usize) -> Result<BigRational> {
    if f == 0 {
        return Err(param("f must be at least 1"));
    }
    let d = code.min_distance()?;
    let t = code.k().min(d - 1);
    if t == 0 {
        return Err(param("the distance rate needs minimum distance at least 2"));
    }
    Ok(geometric(ratio(t, code.n()), ratio(code.k(), code.k() + t), f))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct NecessaryCondition {
    /// `Some(true)` when d_s ≥ (n/k)s for all checked s, `Some(false)` on a
    /// failure, `None` when a weight could not be computed in budget.
    pub pass: Option<bool>,
    /// [d_1, d_2, …] as far as they were computed.
    pub weights: Vec<usize>,
    /// First failing (s, d_s).
    pub failure: Option<(usize, usize)>,
    /// First s whose weight ran out of budget.
    pub indeterminate_from: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budgets {
    pub codewords: u128,
    pub ghw_nodes: u64,
    pub search_nodes: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            codewords: DEFAULT_CODEWORD_BUDGET,
            ghw_nodes: DEFAULT_GHW_NODE_BUDGET,
            search_nodes: crate::rate::DEFAULT_SEARCH_BUDGET,
        }
    }
}

/// Checks d_s ≥ (n/k)·s for s = 1..=s_max.
pub fn necessary_condition(code: &LinearCode, s_max: usize) -> Result<NecessaryCondition> {
    necessary_condition_with(code, s_max, &Budgets::default())
}

pub fn necessary_condition_with(code: &LinearCode, s_max: usize, budgets: &Budgets) -> Result<NecessaryCondition> {
    let (n, k) = (code.n(), code.k());
    if s_max == 0 || s_max > k {
        return Err(param(format!("s_max = {s_max} outside 1..={k}")));
    }
    let mut out = NecessaryCondition::default();
    for s in 1..=s_max {
        match code.generalized_hamming_weight_with_budget(s, budgets.codewords, budgets.ghw_nodes) {
            Ok(d) => {
                out.weights.push(d);
                if d * k < n * s {
                    out.failure = Some((s, d));
                    out.pass = Some(false);
                    return Ok(out);
                }
            }
            Err(Error::TooLarge { .. }) => {
                out.indeterminate_from = Some(s);
                return Ok(out);
            }
            Err(e) => return Err(e),
        }
    }
    out.pass = Some(true);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CapacityAchieving,
    RuledOut,
    Indeterminate,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::CapacityAchieving => "capacity_achieving",
            Self::RuledOut => "ruled_out",
            Self::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    RateMatrix { method: String, lambda: RateMatrix },
    Failure { s: usize, weight: usize },
    Note { text: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub witness: Witness,
    pub necessary: NecessaryCondition,
}

impl Classification {
    pub fn lambda(&self) -> Option<&RateMatrix> {
        match &self.witness {
            Witness::RateMatrix { lambda, .. } => Some(lambda),
            _ => None,
        }
    }
}

/// Rate matrix from a known automorphism family, if the family applies.
pub fn automorphism_lambda(code: &LinearCode, kind: AutomorphismKind) -> Result<RateMatrix> {
    let perms = code.automorphism_family(kind)?;
    let all = crate::code::CoordinateSet::from_zero_based(0..code.n());
    let info = code.information_set_within(&all).ok_or_else(|| Error::InvalidCode("no information set".into()))?;
    lambda_from_automorphisms(code, &perms, &info)
}

/// Multiples of (k, n) in lowest terms tried by the search.
pub const SEARCH_MULTIPLES: [usize; 2] = [1, 2];

/// Screen, then automorphism families, then exhaustive search.
pub fn classify(code: &LinearCode, budgets: &Budgets) -> Result<Classification> {
    let (n, k) = (code.n(), code.k());
    if k == n {
        return Ok(Classification {
            verdict: Verdict::CapacityAchieving,
            witness: Witness::Note { text: "k = n: capacity taken as 1 by convention".into() },
            necessary: NecessaryCondition { pass: Some(true), weights: (1..=k).collect(), ..Default::default() },
        });
    }
    let necessary = necessary_condition_with(code, k, budgets)?;
    if let Some((s, weight)) = necessary.failure {
        return Ok(Classification { verdict: Verdict::RuledOut, witness: Witness::Failure { s, weight }, necessary });
    }
    for (kind, method) in [(AutomorphismKind::CyclicShifts, "cyclic_shifts"), (AutomorphismKind::RmTranslations, "rm_translations")] {
        if let Ok(lambda) = automorphism_lambda(code, kind) {
            if lambda.validate(code)?.valid {
                return Ok(Classification {
                    verdict: Verdict::CapacityAchieving,
                    witness: Witness::RateMatrix { method: method.into(), lambda },
                    necessary,
                });
            }
        }
    }
    let mut notes = Vec::new();
    if n > MAX_SEARCH_N {
        notes.push(format!("search skipped: n > {MAX_SEARCH_N}"));
    } else {
        let g = n.gcd(&k);
        for c in SEARCH_MULTIPLES {
            let (kappa, nu) = (c * k / g, c * n / g);
            match search_rate_matrix(code, kappa, nu, budgets.search_nodes)? {
                SearchOutcome::Found(lambda) => {
                    return Ok(Classification {
                        verdict: Verdict::CapacityAchieving,
                        witness: Witness::RateMatrix { method: "search".into(), lambda },
                        necessary,
                    })
                }
                SearchOutcome::NotFound => notes.push(format!("no rate matrix at κ={kappa}, ν={nu}")),
                SearchOutcome::Indeterminate { nodes } => {
                    notes.push(format!("search at κ={kappa}, ν={nu} stopped after {nodes} nodes"))
                }
            }
        }
    }
    if necessary.pass.is_none() {
        notes.push("weight hierarchy exceeded its budget".into());
    }
    Ok(Classification { verdict: Verdict::Indeterminate, witness: Witness::Note { text: notes.join("; ") }, necessary })
}

/// Every k-dimensional subspace of GF(q)^n, one RREF generator each.
pub fn enumerate_subspaces(field: FieldSpec, n: usize, k: usize) -> Vec<FieldMatrix> {
    let q = field.order();
    let mut out = Vec::new();
    for pivots in k_subsets(n, k) {
        // free positions: row r, column c > pivots[r], c not a pivot
        let free: Vec<(usize, usize)> = (0..k)
            .flat_map(|r| ((pivots[r] + 1)..n).filter(|c| !pivots.contains(c)).map(move |c| (r, c)))
            .collect();
        let mut digits = vec![0u64; free.len()];
        loop {
            let mut g = FieldMatrix::zeros(field, k, n);
            for (r, &p) in pivots.iter().enumerate() {
                g.set(r, p, 1);
            }
            for (&(r, c), &v) in free.iter().zip(&digits) {
                g.set(r, c, v);
            }
            out.push(g);
            let Some(i) = digits.iter().position(|&d| d + 1 < q) else { break };
            digits[i] += 1;
            for d in &mut digits[..i] {
                *d = 0;
            }
        }
    }
    out
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else { return false };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn invertible_matrices(field: FieldSpec, k: usize) -> Vec<FieldMatrix> {
    let q = field.order();
    let total = (q as u128).pow((k * k) as u32);
    let mut out = Vec::new();
    for idx in 0..total {
        let mut x = idx;
        let rows: Vec<Vec<u64>> = (0..k)
            .map(|_| {
                (0..k)
                    .map(|_| {
                        let d = (x % q as u128) as u64;
                        x /= q as u128;
                        d
                    })
                    .collect()
            })
            .collect();
        let m = FieldMatrix::from_rows(field, &rows).expect("labels are in range");
        if m.rank() == k {
            out.push(m);
        }
    }
    out
}

/// Orbit representative of a code under coordinate permutations.
pub struct Canonicalizer {
    field: FieldSpec,
    n: usize,
    k: usize,
    mode: CanonicalMode,
}

enum CanonicalMode {
    Columns(Vec<FieldMatrix>),
    Permutations,
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

impl Canonicalizer {
    pub fn new(field: FieldSpec, n: usize, k: usize) -> Self {
        let q = field.order() as u128;
        let gl_bound = q.saturating_pow((k * k) as u32);
        let mode = if gl_bound <= factorial(n) {
            CanonicalMode::Columns(invertible_matrices(field, k))
        } else {
            CanonicalMode::Permutations
        };
        Self { field, n, k, mode }
    }

    /// Equal keys exactly when the codes are permutation-equivalent.
    pub fn key(&self, g: &FieldMatrix) -> Vec<u64> {
        debug_assert_eq!((g.rows(), g.cols()), (self.k, self.n));
        let q = self.field.order();
        match &self.mode {
            CanonicalMode::Columns(group) => group
                .iter()
                .map(|a| {
                    let h = a.mul(g).expect("shapes agree");
                    let mut cols: Vec<u64> =
                        (0..self.n).map(|c| h.column(c).iter().fold(0, |acc, &x| acc * q + x)).collect();
                    cols.sort_unstable();
                    cols
                })
                .min()
                .unwrap_or_default(),
            CanonicalMode::Permutations => {
                let mut perm: Vec<usize> = (0..self.n).collect();
                let mut best: Option<Vec<u64>> = None;
                loop {
                    let (r, _) = g.select_columns(&perm).rref();
                    let flat = r.to_rows().concat();
                    if best.as_ref().is_none_or(|b| flat < *b) {
                        best = Some(flat);
                    }
                    if !next_permutation(&mut perm) {
                        break;
                    }
                }
                best.unwrap_or_default()
            }
        }
    }
}

/// One representative generator per permutation-equivalence class.
pub fn inequivalent_codes(field: FieldSpec, n: usize, k: usize) -> Vec<FieldMatrix> {
    let canon = Canonicalizer::new(field, n, k);
    let mut seen = BTreeSet::new();
    enumerate_subspaces(field, n, k).into_iter().filter(|g| seen.insert(canon.key(g))).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Found,
    NotFound,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScanRow {
    pub n: usize,
    pub k: usize,
    pub generator: Vec<Vec<u64>>,
    pub weights: Vec<usize>,
    /// Whether d_s ≥ (n/k)s held for every s (None if not computed).
    pub necessary: Option<bool>,
    pub search: SearchStatus,
    /// (κ, ν) of the found matrix.
    pub found_at: Option<(usize, usize)>,
    pub agree: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScanReport {
    pub field: String,
    pub n_max: usize,
    pub rows: Vec<ScanRow>,
    pub disagreements: usize,
    pub indeterminate: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScanOptions {
    pub budgets: Budgets,
    /// Largest ν tried, as a multiple of n.
    pub nu_factor: usize,
    pub jobs: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { budgets: Budgets::default(), nu_factor: 2, jobs: 1 }
    }
}

/// Screen and search outcome for one code.
pub fn scan_code(code: &LinearCode, options: &ScanOptions) -> Result<ScanRow> {
    let (n, k) = (code.n(), code.k());
    let generator = code.generator().to_rows();
    if k == n {
        return Ok(ScanRow {
            n,
            k,
            generator,
            weights: (1..=k).collect(),
            necessary: Some(true),
            search: SearchStatus::Found,
            found_at: None,
            agree: Some(true),
        });
    }
    let nc = necessary_condition_with(code, k, &options.budgets)?;
    let g = n.gcd(&k);
    let mut search = SearchStatus::NotFound;
    let mut found_at = None;
    let mut c = 1;
    while c * n / g <= options.nu_factor * n {
        let (kappa, nu) = (c * k / g, c * n / g);
        match search_rate_matrix(code, kappa, nu, options.budgets.search_nodes)? {
            SearchOutcome::Found(_) => {
                search = SearchStatus::Found;
                found_at = Some((kappa, nu));
                break;
            }
            SearchOutcome::NotFound => {}
            SearchOutcome::Indeterminate { .. } => search = SearchStatus::Indeterminate,
        }
        c += 1;
    }
    let agree = match (nc.pass, &search) {
        (Some(p), SearchStatus::Found) => Some(p),
        (Some(p), SearchStatus::NotFound) => Some(!p),
        _ => None,
    };
    Ok(ScanRow { n, k, generator, weights: nc.weights, necessary: nc.pass, search, found_at, agree })
}

/// Scans every inequivalent [n,k] code with the given lengths.
pub fn scan_shapes(field: FieldSpec, shapes: &[(usize, usize)], options: &ScanOptions) -> Result<ScanReport> {
    let codes: Vec<LinearCode> = shapes
        .iter()
        .flat_map(|&(n, k)| inequivalent_codes(field, n, k))
        .map(LinearCode::from_generator)
        .collect::<Result<_>>()?;
    let jobs = options.jobs.max(1).min(codes.len().max(1));
    let rows: Vec<ScanRow> = if jobs == 1 {
        codes.iter().map(|c| scan_code(c, options)).collect::<Result<_>>()?
    } else {
        let chunk = codes.len().div_ceil(jobs);
        std::thread::scope(|s| {
            let handles: Vec<_> = codes
                .chunks(chunk)
                .map(|part| s.spawn(move || part.iter().map(|c| scan_code(c, options)).collect::<Result<Vec<_>>>()))
                .collect();
            let mut all = Vec::with_capacity(codes.len());
            for h in handles {
                all.extend(h.join().expect("scan worker panicked")?);
            }
            Ok::<_, Error>(all)
        })?
    };
    let disagreements = rows.iter().filter(|r| r.agree == Some(false)).count();
    let indeterminate = rows.iter().filter(|r| r.agree.is_none()).count();
    let n_max = shapes.iter().map(|s| s.0).max().unwrap_or(0);
    Ok(ScanReport { field: field.to_string(), n_max, rows, disagreements, indeterminate })
}

/// Scans every inequivalent code of length 1..=n_max and every dimension.
pub fn scan_small_codes(n_max: usize, field: FieldSpec, options: &ScanOptions) -> Result<ScanReport> {
    let shapes: Vec<(usize, usize)> = (1..=n_max).flat_map(|n| (1..=n).map(move |k| (n, k))).collect();
    scan_shapes(field, &shapes, options)
}

/// Whether the rate never exceeds capacity, with equality exactly at κ/ν = k/n.
pub fn rate_dominates(rate: &BigRational, capacity: &BigRational, kappa: usize, nu: usize, n: usize, k: usize) -> bool {
    let at_ratio = kappa * n == k * nu;
    rate <= capacity && ((rate == capacity) == at_ratio)
}

/// Whether 0 < r ≤ 1.
pub fn is_valid_rate(r: &BigRational) -> bool {
    *r > BigRational::zero() && *r <= BigRational::one()
}
