//! In-memory coded storage: file striping, node layout, retrieval sessions
//! and privacy audits.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::code::LinearCode;
use crate::error::{param, Result};
use crate::field::FieldSpec;
use crate::matrix::FieldMatrix;
use crate::protocol::{build_queries_with, decode, node_respond, PlanOptions, ProtocolParams, Query, QueryTag};

/// `f` files, each a β×k matrix over one field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileSet {
    field: FieldSpec,
    stripes: usize,
    k: usize,
    files: Vec<FieldMatrix>,
}

impl FileSet {
    pub fn new(files: Vec<FieldMatrix>) -> Result<Self> {
        let first = files.first().ok_or_else(|| param("a file set needs at least one file"))?;
        let (field, stripes, k) = (first.field(), first.rows(), first.cols());
        if let Some(m) = files.iter().position(|x| x.field() != field || x.rows() != stripes || x.cols() != k) {
            return Err(param(format!("file {} differs in field or shape from file 1", m + 1)));
        }
        Ok(Self { field, stripes, k, files })
    }

    /// Uniformly random contents.
    pub fn random<R: Rng + ?Sized>(field: FieldSpec, files: usize, stripes: usize, k: usize, rng: &mut R) -> Result<Self> {
        let q = field.order();
        let files = (0..files)
            .map(|_| {
                let rows: Vec<Vec<u64>> = (0..stripes).map(|_| (0..k).map(|_| rng.random_range(0..q)).collect()).collect();
                FieldMatrix::from_rows(field, &rows)
            })
            .collect::<Result<_>>()?;
        Self::new(files)
    }

    pub fn zeros(field: FieldSpec, files: usize, stripes: usize, k: usize) -> Result<Self> {
        Self::new(vec![FieldMatrix::zeros(field, stripes, k); files])
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn stripes(&self) -> usize {
        self.stripes
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// 1-based file `m`.
    pub fn file(&self, m: usize) -> &FieldMatrix {
        &self.files[m - 1]
    }
}

/// The βf×n coded array; column `j` is what node `j` stores.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StorageArray {
    array: FieldMatrix,
    stripes: usize,
    files: usize,
}

pub fn encode_storage(files: &FileSet, code: &LinearCode) -> Result<StorageArray> {
    if files.field() != code.field() {
        return Err(param(format!("files are over {}, code is over {}", files.field(), code.field())));
    }
    if files.k() != code.k() {
        return Err(param(format!("files have {} columns, code dimension is {}", files.k(), code.k())));
    }
    let mut array = FieldMatrix::zeros(code.field(), files.stripes() * files.len(), code.n());
    for m in 0..files.len() {
        let x = &files.files[m];
        for i in 0..files.stripes() {
            for (j, c) in code.encode(x.row(i))?.into_iter().enumerate() {
                array.set(m * files.stripes() + i, j, c);
            }
        }
    }
    Ok(StorageArray { array, stripes: files.stripes(), files: files.len() })
}

impl StorageArray {
    pub fn array(&self) -> &FieldMatrix {
        &self.array
    }

    pub fn stripes(&self) -> usize {
        self.stripes
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn nodes(&self) -> usize {
        self.array.cols()
    }

    /// Contents of 1-based node `l`.
    pub fn node(&self, l: usize) -> Vec<u64> {
        self.array.column(l - 1)
    }

    /// Whether every row lies in the row space of `code`.
    pub fn rows_are_codewords(&self, code: &LinearCode) -> bool {
        (0..self.array.rows()).all(|r| code.is_codeword(self.array.row(r)))
    }
}

fn digest_symbols(values: &[u64]) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.to_le_bytes());
    }
    format!("{:x}", h.finalize())
}

/// Aligned-sum bookkeeping summary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SideInformation {
    pub decoded: usize,
    pub consumed: usize,
    pub used_after_decoding: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PlannedQuery {
    pub tag: QueryTag,
    pub support: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SessionTrace {
    pub seed: u64,
    pub field: String,
    pub n: usize,
    pub k: usize,
    pub kappa: usize,
    pub nu: usize,
    pub files: usize,
    pub stripes: usize,
    pub requested: usize,
    pub queries_per_node: Vec<usize>,
    pub response_digests: Vec<String>,
    pub decoded_digest: String,
    pub download: usize,
    pub expected_download: usize,
    pub rate: String,
    pub side_information: SideInformation,
    /// Per node, the queries in the order sent; absent when redacted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<Vec<Vec<PlannedQuery>>>,
}

#[derive(Clone, Debug)]
pub struct SessionResult {
    pub decoded: FieldMatrix,
    pub download: usize,
    pub rate: BigRational,
    pub trace: SessionTrace,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SessionOptions {
    pub include_plan: bool,
}

/// One retrieval of 1-based file `m`, seeded by `seed`.
pub fn run_session(storage: &StorageArray, params: &ProtocolParams, m: usize, seed: u64) -> Result<SessionResult> {
    run_session_with(storage, params, m, seed, SessionOptions::default())
}

pub fn run_session_with(
    storage: &StorageArray,
    params: &ProtocolParams,
    m: usize,
    seed: u64,
    options: SessionOptions,
) -> Result<SessionResult> {
    let code = params.code();
    if storage.stripes() != params.beta() {
        return Err(param(format!("storage has {} stripes per file, protocol needs β = {}", storage.stripes(), params.beta())));
    }
    if storage.files() != params.files() {
        return Err(param(format!("storage holds {} files, protocol expects {}", storage.files(), params.files())));
    }
    if storage.nodes() != code.n() || storage.array().field() != code.field() {
        return Err(param("storage array does not match the code"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plan = build_queries_with(params, m, &mut rng, PlanOptions::default())?;
    let responses: Vec<Vec<u64>> = (1..=code.n())
        .map(|l| node_respond(code.field(), &storage.node(l), &plan.node_vectors(l)))
        .collect::<Result<_>>()?;
    let out = decode(&responses, &plan, params)?;
    let download: usize = responses.iter().map(Vec::len).sum();
    let rate = BigRational::new((params.beta() * code.k()).into(), download.into());
    let decoded_flat: Vec<u64> = out.file.to_rows().concat();
    let trace = SessionTrace {
        seed,
        field: code.field().to_string(),
        n: code.n(),
        k: code.k(),
        kappa: params.kappa(),
        nu: params.nu(),
        files: params.files(),
        stripes: params.beta(),
        requested: m,
        queries_per_node: plan.nodes().iter().map(Vec::len).collect(),
        response_digests: responses.iter().map(|r| digest_symbols(r)).collect(),
        decoded_digest: digest_symbols(&decoded_flat),
        download,
        expected_download: params.expected_download(),
        rate: rate.to_string(),
        side_information: SideInformation {
            decoded: out.ledger.decoded_count(),
            consumed: out.ledger.consumed_count(),
            used_after_decoding: out.ledger.is_monotone(),
        },
        plan: options.include_plan.then(|| {
            plan.nodes()
                .iter()
                .map(|qs| qs.iter().map(|q| PlannedQuery { tag: q.tag, support: q.vector.support().to_vec() }).collect())
                .collect()
        }),
    };
    Ok(SessionResult { decoded: out.file, download, rate, trace })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditOptions {
    /// Trials per requested file.
    pub trials: usize,
    pub master_seed: u64,
    /// Family-wise significance level.
    pub significance: f64,
    /// Skip query shuffling when this file is requested (negative control).
    pub unshuffled_request: Option<usize>,
    pub jobs: usize,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self { trials: 1000, master_seed: 0, significance: 0.01, unshuffled_request: None, jobs: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SignatureEntry {
    pub files: Vec<usize>,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NodeSignatures {
    pub node: usize,
    /// Signature multiset per requested file, in request order.
    pub per_request: Vec<Vec<SignatureEntry>>,
    pub equal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub node: usize,
    pub feature: String,
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub files: usize,
    pub trials_per_request: usize,
    pub master_seed: u64,
    pub significance: f64,
    /// Per-test threshold after Bonferroni correction.
    pub per_test_threshold: f64,
    pub structural: Vec<NodeSignatures>,
    pub structural_pass: bool,
    pub statistical: Vec<ChiSquareTest>,
    pub statistical_pass: bool,
    pub pass: bool,
    pub note: String,
}

const AUDIT_NOTE: &str = "signature equality is exact; the chi-square tests only certify statistically \
that the first query's file set and first touched stored position are independent of the requested file";

fn signature_entries(sig: BTreeMap<Vec<usize>, usize>) -> Vec<SignatureEntry> {
    sig.into_iter().map(|(files, count)| SignatureEntry { files, count }).collect()
}

/// Observed features of one trial: per node, the first query's file set and
/// the (file, stored row) of its lowest touched position.
type TrialFeatures = Vec<(Vec<usize>, usize)>;

fn first_query_features(queries: &[Query], beta: usize) -> (Vec<usize>, usize) {
    let q = &queries[0].vector;
    (q.files(beta), q.support()[0])
}

fn run_trials(params: &ProtocolParams, m: usize, options: &AuditOptions) -> Result<Vec<TrialFeatures>> {
    let beta = params.beta();
    let shuffle = options.unshuffled_request != Some(m);
    let trial = |t: usize| -> Result<TrialFeatures> {
        let mut rng = ChaCha8Rng::seed_from_u64(options.master_seed);
        rng.set_stream(((m as u64) << 40) | t as u64);
        let plan = build_queries_with(params, m, &mut rng, PlanOptions { shuffle })?;
        Ok(plan.nodes().iter().map(|qs| first_query_features(qs, beta)).collect())
    };
    let jobs = options.jobs.max(1).min(options.trials.max(1));
    if jobs == 1 {
        return (0..options.trials).map(trial).collect();
    }
    let chunk = options.trials.div_ceil(jobs);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                let trial = &trial;
                s.spawn(move || ((w * chunk)..((w + 1) * chunk).min(options.trials)).map(trial).collect::<Result<Vec<_>>>())
            })
            .collect();
        let mut all = Vec::with_capacity(options.trials);
        for h in handles {
            all.extend(h.join().expect("audit worker panicked")?);
        }
        Ok(all)
    })
}

/// Pearson chi-square test of independence on a table of counts
/// (rows are groups). Returns (statistic, degrees of freedom, p-value).
pub fn chi_square_independence(table: &[Vec<u64>]) -> (f64, usize, f64) {
    let cols = table.first().map_or(0, Vec::len);
    let live: Vec<usize> = (0..cols).filter(|&c| table.iter().any(|r| r[c] > 0)).collect();
    let rows: Vec<&Vec<u64>> = table.iter().filter(|r| r.iter().any(|&x| x > 0)).collect();
    if live.len() < 2 || rows.len() < 2 {
        return (0.0, 0, 1.0);
    }
    let total: f64 = rows.iter().map(|r| r.iter().sum::<u64>() as f64).sum();
    let row_sums: Vec<f64> = rows.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = live.iter().map(|&c| rows.iter().map(|r| r[c] as f64).sum()).collect();
    let mut stat = 0.0;
    for (i, r) in rows.iter().enumerate() {
        for (ci, &c) in live.iter().enumerate() {
            let expected = row_sums[i] * col_sums[ci] / total;
            stat += (r[c] as f64 - expected).powi(2) / expected;
        }
    }
    let df = (rows.len() - 1) * (live.len() - 1);
    let p = ChiSquared::new(df as f64).map_or(1.0, |d| d.sf(stat));
    (stat, df, p)
}

/// Checks that what each node sees does not depend on the requested file.
pub fn privacy_audit(params: &ProtocolParams, options: &AuditOptions) -> Result<AuditReport> {
    let (n, f, beta) = (params.code().n(), params.files(), params.beta());
    if options.trials == 0 {
        return Err(param("the audit needs at least one trial"));
    }

    let mut plans = Vec::with_capacity(f);
    for m in 1..=f {
        let mut rng = ChaCha8Rng::seed_from_u64(options.master_seed);
        plans.push(build_queries_with(params, m, &mut rng, PlanOptions::default())?);
    }
    let structural: Vec<NodeSignatures> = (1..=n)
        .map(|l| {
            let per_request: Vec<Vec<SignatureEntry>> =
                plans.iter().map(|p| signature_entries(p.node_signature(l, beta))).collect();
            let equal = per_request.windows(2).all(|w| w[0] == w[1]);
            NodeSignatures { node: l, per_request, equal }
        })
        .collect();
    let structural_pass = structural.iter().all(|s| s.equal);

    let observations: Vec<Vec<TrialFeatures>> =
        (1..=f).map(|m| run_trials(params, m, options)).collect::<Result<_>>()?;
    let tests_count = 2 * n;
    let threshold = options.significance / tests_count as f64;
    let mut statistical = Vec::with_capacity(tests_count);
    for l in 0..n {
        let categories: BTreeSet<&Vec<usize>> = observations.iter().flatten().map(|t| &t[l].0).collect();
        let index: BTreeMap<&Vec<usize>, usize> = categories.into_iter().enumerate().map(|(i, c)| (c, i)).collect();
        let mut table = vec![vec![0u64; index.len()]; f];
        let mut positions = vec![vec![0u64; beta * f]; f];
        for (m, trials) in observations.iter().enumerate() {
            for t in trials {
                table[m][index[&t[l].0]] += 1;
                positions[m][t[l].1] += 1;
            }
        }
        for (feature, counts) in [("first_query_files", table), ("first_stored_position", positions)] {
            let (statistic, degrees_of_freedom, p_value) = chi_square_independence(&counts);
            statistical.push(ChiSquareTest {
                node: l + 1,
                feature: feature.into(),
                statistic,
                degrees_of_freedom,
                p_value,
                pass: p_value >= threshold,
            });
        }
    }
    let statistical_pass = statistical.iter().all(|t| t.pass);
    Ok(AuditReport {
        files: f,
        trials_per_request: options.trials,
        master_seed: options.master_seed,
        significance: options.significance,
        per_test_threshold: threshold,
        structural,
        structural_pass,
        statistical,
        statistical_pass,
        pass: structural_pass && statistical_pass,
        note: AUDIT_NOTE.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate::RateMatrix;

    fn gf2() -> FieldSpec {
        FieldSpec::prime(2).unwrap()
    }

    fn example1() -> ProtocolParams {
        let g = FieldMatrix::from_rows(gf2(), &[vec![1, 0, 0, 1, 0], vec![0, 1, 0, 1, 0], vec![0, 0, 1, 0, 1]]).unwrap();
        let lam = RateMatrix::new(vec![vec![0, 1, 1, 1, 1], vec![1, 0, 0, 1, 1], vec![1, 1, 1, 0, 0]]).unwrap();
        ProtocolParams::new(LinearCode::from_generator(g).unwrap(), lam, 2).unwrap()
    }

    #[test]
    fn encode_examples() {
        let params = example1();
        let code = params.code();
        let x = FieldMatrix::from_rows(gf2(), &[vec![1, 0, 1]]).unwrap();
        let s = encode_storage(&FileSet::new(vec![x]).unwrap(), code).unwrap();
        assert_eq!(s.array().row(0), &[1, 0, 1, 1, 1]);
        let z = encode_storage(&FileSet::zeros(gf2(), 2, 4, 3).unwrap(), code).unwrap();
        assert!(z.array().to_rows().iter().flatten().all(|&v| v == 0));
        assert!(z.rows_are_codewords(code));
        let wrong = FileSet::zeros(gf2(), 1, 4, 2).unwrap();
        assert!(encode_storage(&wrong, code).is_err());
    }

    #[test]
    fn session_recovers_and_reports_rate() {
        let params = example1();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let files = FileSet::random(gf2(), 2, params.beta(), 3, &mut rng).unwrap();
        let storage = encode_storage(&files, params.code()).unwrap();
        for m in 1..=2 {
            let out = run_session(&storage, &params, m, 99).unwrap();
            assert_eq!(&out.decoded, files.file(m));
            assert_eq!(out.rate, BigRational::new(27.into(), 50.into()));
            assert!(out.trace.side_information.used_after_decoding);
        }
    }

    #[test]
    fn mismatched_stripes_rejected() {
        let params = example1();
        let files = FileSet::zeros(gf2(), 2, 4, 3).unwrap();
        let storage = encode_storage(&files, params.code()).unwrap();
        assert!(run_session(&storage, &params, 1, 0).is_err());
    }

    #[test]
    fn chi_square_known_table() {
        // hand-computed: expected 15 everywhere, statistic 4·25/15
        let (stat, df, p) = chi_square_independence(&[vec![10, 20], vec![20, 10]]);
        assert!((stat - 20.0 / 3.0).abs() < 1e-12);
        assert_eq!(df, 1);
        assert!(p < 0.01);
        assert_eq!(chi_square_independence(&[vec![5, 0], vec![7, 0]]).1, 0);
    }

    #[test]
    fn audit_passes_and_negative_control_fails() {
        let params = example1();
        let opts = AuditOptions { trials: 1000, master_seed: 1, ..AuditOptions::default() };
        let report = privacy_audit(&params, &opts).unwrap();
        assert!(report.structural_pass);
        assert!(report.pass, "{report:?}");
        let broken = privacy_audit(&params, &AuditOptions { unshuffled_request: Some(2), ..opts }).unwrap();
        assert!(!broken.statistical_pass);
    }

    #[test]
    fn audit_is_order_independent() {
        let params = example1();
        let a = AuditOptions { trials: 300, master_seed: 4, jobs: 1, ..AuditOptions::default() };
        let b = AuditOptions { jobs: 4, ..a };
        assert_eq!(privacy_audit(&params, &a).unwrap(), privacy_audit(&params, &b).unwrap());
    }
}
