//! The multi-round PIR protocol over an arbitrary linear storage code.
//!
//! Each file holds β = ν^f stripes. Stripe rows are grouped in blocks of ν
//! consecutive rows; inside a block, node `j` is asked for the rows listed in
//! column `j` of the interference matrix A, and the rows listed in column `j`
//! of B are recovered from the other nodes through an information set.
//!
//! The user works in the interleaved index space `y`: row `i` of file `m`
//! is stored row `π_m(i)`, with an independent secret permutation per file.
//! The requested file takes the first slot of the relabeled file order and
//! the remaining files follow in ascending order.
//!
//! Per repetition `i ∈ 1..=κ` and node `j`:
//! * round 1 asks for κ^{f−1} requested-file symbols at rows
//!   `κ^{f−1}(a_{i,j}−1)+1 ..= κ^{f−1}a_{i,j}`;
//! * round ℓ ∈ 1..f−1 asks, for every ℓ-subset M of the other files, for
//!   `U(ℓ)−U(ℓ−1)` blocks of undesired sums on the A rows of each block;
//! * round ℓ+1 asks, for every such (M, block) and every B row `b`, for the
//!   requested-file symbol at row `a_{i,j}` of a fresh block plus the sum
//!   over M at row `b` of that undesired block. That sum is the codeword
//!   decoded from round ℓ, so it can be subtracted.
//!
//! Every file other than the requested one gets its undesired blocks from
//! its own counter, so no stored symbol is used twice at a node.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::code::{CoordinateSet, LinearCode};
use crate::error::{param, Error, Result};
use crate::field::FieldSpec;
use crate::matrix::FieldMatrix;
use crate::rate::{InterferencePair, RateMatrix};

/// (rep, round, subset, block) of an undesired group.
type GroupKey = (usize, usize, usize, usize);
/// A group key plus the interference row `u` of its aligned sum.
type SumKey = (usize, usize, usize, usize, usize);

/// Largest stripe count β a session may use.
pub const MAX_STRIPES: usize = 1 << 20;

fn pow(base: usize, exp: usize) -> usize {
    base.pow(exp as u32)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn check_round(ell: usize, f: usize, kappa: usize, nu: usize) -> Result<()> {
    if f == 0 || ell >= f {
        return Err(param(format!("round index ℓ = {ell} outside 0..={}", f.saturating_sub(1))));
    }
    if kappa == 0 || kappa >= nu {
        return Err(param(format!("need 1 <= κ < ν, got κ={kappa}, ν={nu}")));
    }
    Ok(())
}

/// U(ℓ) = Σ_{h=1}^{ℓ} κ^{f−(h+1)} (ν−κ)^{h−1}.
pub fn u_of(ell: usize, f: usize, kappa: usize, nu: usize) -> Result<usize> {
    check_round(ell, f, kappa, nu)?;
    Ok((1..=ell).map(|h| pow(kappa, f - h - 1) * pow(nu - kappa, h - 1)).sum())
}

/// D(ℓ) = κ^{f−1} + Σ_{h=1}^{ℓ} C(f−1,h) κ^{f−(h+1)} (ν−κ)^h.
pub fn d_of(ell: usize, f: usize, kappa: usize, nu: usize) -> Result<usize> {
    check_round(ell, f, kappa, nu)?;
    Ok(pow(kappa, f - 1)
        + (1..=ell).map(|h| binomial(f - 1, h) * pow(kappa, f - h - 1) * pow(nu - kappa, h)).sum::<usize>())
}

/// N(ℓ) = C(f−1, ℓ).
pub fn n_of(ell: usize, f: usize) -> Result<usize> {
    if f == 0 || ell >= f {
        return Err(param(format!("round index ℓ = {ell} outside 0..={}", f.saturating_sub(1))));
    }
    Ok(binomial(f - 1, ell))
}

/// Closed-form total download κ·n·(ν^f − κ^f)/(ν − κ).
pub fn expected_download(n: usize, kappa: usize, nu: usize, f: usize) -> usize {
    kappa * n * (pow(nu, f) - pow(kappa, f)) / (nu - kappa)
}

/// Everything fixed before a retrieval: code, rate matrix, file count.
#[derive(Clone, Debug)]
pub struct ProtocolParams {
    code: LinearCode,
    lambda: RateMatrix,
    interference: InterferencePair,
    files: usize,
    beta: usize,
}

impl ProtocolParams {
    pub fn new(code: LinearCode, lambda: RateMatrix, files: usize) -> Result<Self> {
        if files == 0 {
            return Err(param("at least one file is required"));
        }
        if lambda.n() != code.n() {
            return Err(param(format!("rate matrix has {} columns, code has length {}", lambda.n(), code.n())));
        }
        let validation = lambda.validate(&code)?;
        if let Some(row) = validation.failing_row {
            return Err(param(format!("rate matrix row {row} holds no information set")));
        }
        let beta = (lambda.nu() as u128).checked_pow(files as u32).filter(|&b| b <= MAX_STRIPES as u128);
        let Some(beta) = beta else {
            return Err(param(format!("β = {}^{files} exceeds {MAX_STRIPES} stripes", lambda.nu())));
        };
        let interference = lambda.interference();
        Ok(Self { code, lambda, interference, files, beta: beta as usize })
    }

    pub fn code(&self) -> &LinearCode {
        &self.code
    }

    pub fn lambda(&self) -> &RateMatrix {
        &self.lambda
    }

    pub fn interference(&self) -> &InterferencePair {
        &self.interference
    }

    pub fn files(&self) -> usize {
        self.files
    }

    /// Stripes per file, ν^f.
    pub fn beta(&self) -> usize {
        self.beta
    }

    pub fn kappa(&self) -> usize {
        self.lambda.kappa()
    }

    pub fn nu(&self) -> usize {
        self.lambda.nu()
    }

    pub fn field(&self) -> FieldSpec {
        self.code.field()
    }

    /// Length of every query vector, β·f.
    pub fn query_len(&self) -> usize {
        self.beta * self.files
    }

    pub fn expected_download(&self) -> usize {
        expected_download(self.code.n(), self.kappa(), self.nu(), self.files)
    }

    /// Symbols downloaded from each node.
    pub fn queries_per_node(&self) -> usize {
        self.expected_download() / self.code.n()
    }

    /// βk / D as an exact rational.
    pub fn rate(&self) -> BigRational {
        BigRational::new(BigInt::from(self.beta * self.code.k()), BigInt::from(self.expected_download()))
    }
}

/// A plain sum of stored symbols, given by its support in the node's
/// `β·f`-long column (file-major, 0-based).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct QueryVector {
    len: usize,
    support: Vec<usize>,
}

impl QueryVector {
    pub fn new(len: usize, mut support: Vec<usize>) -> Result<Self> {
        support.sort_unstable();
        support.dedup();
        if support.is_empty() {
            return Err(param("query vectors must be nonzero"));
        }
        if support.last().is_some_and(|&p| p >= len) {
            return Err(param("query support outside the stored column"));
        }
        Ok(Self { len, support })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// The dense 0/1 selection vector.
    pub fn to_dense(&self) -> Vec<u64> {
        let mut v = vec![0; self.len];
        for &p in &self.support {
            v[p] = 1;
        }
        v
    }

    /// Files touched (0-based) given β stripes per file.
    pub fn files(&self, beta: usize) -> Vec<usize> {
        let mut f: Vec<usize> = self.support.iter().map(|p| p / beta).collect();
        f.dedup();
        f
    }
}

/// What a query means to the user. Indices are 0-based; `subset` indexes the
/// lexicographic list of ℓ-subsets of the non-requested files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryTag {
    /// Round 1 requested-file symbol number `offset` of repetition `rep`.
    DesiredFirst { rep: usize, offset: usize },
    /// Undesired sum over subset `subset` (|M| = `round`), block `block`,
    /// on A row `a_row` of the node's column.
    Undesired { rep: usize, round: usize, subset: usize, block: usize, a_row: usize },
    /// Round `round + 1` requested-file symbol plus the aligned sum of
    /// (`rep`, `round`, `subset`, `block`) on B row `b_row`.
    DesiredHigher { rep: usize, round: usize, subset: usize, block: usize, b_row: usize },
}

impl QueryTag {
    /// The download round this query belongs to.
    pub fn download_round(&self) -> usize {
        match *self {
            Self::DesiredFirst { .. } => 1,
            Self::Undesired { round, .. } => round,
            Self::DesiredHigher { round, .. } => round + 1,
        }
    }

    pub fn is_desired(&self) -> bool {
        !matches!(self, Self::Undesired { .. })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Query {
    pub vector: QueryVector,
    pub tag: QueryTag,
}

/// The user's full plan for one retrieval.
#[derive(Clone, Debug)]
pub struct QueryPlan {
    requested: usize,
    /// `order[r]` is the original (1-based) file in relabeled slot `r`.
    order: Vec<usize>,
    /// Per original file (0-based): interleaved row → stored row, both 0-based.
    permutations: Vec<Vec<usize>>,
    /// `subsets[ℓ]` lists the ℓ-subsets of relabeled slots `1..f`.
    subsets: Vec<Vec<Vec<usize>>>,
    /// Undesired block of each slot, keyed by (rep, round, subset, block).
    blocks: BTreeMap<GroupKey, Vec<(usize, usize)>>,
    nodes: Vec<Vec<Query>>,
    shuffled: bool,
}

impl QueryPlan {
    /// 1-based requested file.
    pub fn requested(&self) -> usize {
        self.requested
    }

    pub fn permutations(&self) -> &[Vec<usize>] {
        &self.permutations
    }

    pub fn shuffled(&self) -> bool {
        self.shuffled
    }

    /// Queries for 1-based node `l`, in the order they are sent.
    pub fn node(&self, l: usize) -> &[Query] {
        &self.nodes[l - 1]
    }

    pub fn nodes(&self) -> &[Vec<Query>] {
        &self.nodes
    }

    /// What node `l` actually receives.
    pub fn node_vectors(&self, l: usize) -> Vec<QueryVector> {
        self.node(l).iter().map(|q| q.vector.clone()).collect()
    }

    pub fn total_queries(&self) -> usize {
        self.nodes.iter().map(Vec::len).sum()
    }

    /// Multiset of touched-file sets (1-based files) seen by node `l`.
    pub fn node_signature(&self, l: usize, beta: usize) -> BTreeMap<Vec<usize>, usize> {
        let mut sig = BTreeMap::new();
        for q in self.node(l) {
            let files: Vec<usize> = q.vector.files(beta).into_iter().map(|f| f + 1).collect();
            *sig.entry(files).or_insert(0) += 1;
        }
        sig
    }
}

/// Options for [`build_queries_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlanOptions {
    /// Shuffle each node's query list. Turning this off breaks privacy and
    /// exists for negative-control audits.
    pub shuffle: bool,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self { shuffle: true }
    }
}

/// Builds the full query plan for 1-based file `m`.
pub fn build_queries<R: Rng + ?Sized>(params: &ProtocolParams, m: usize, rng: &mut R) -> Result<QueryPlan> {
    build_queries_with(params, m, rng, PlanOptions::default())
}

pub fn build_queries_with<R: Rng + ?Sized>(
    params: &ProtocolParams,
    m: usize,
    rng: &mut R,
    options: PlanOptions,
) -> Result<QueryPlan> {
    let f = params.files;
    if m == 0 || m > f {
        return Err(param(format!("requested file {m} outside 1..={f}")));
    }
    let (n, kappa, nu, beta) = (params.code.n(), params.kappa(), params.nu(), params.beta);
    let delta = nu - kappa;
    let pair = &params.interference;

    let mut order = vec![m];
    order.extend((1..=f).filter(|&x| x != m));

    let permutations: Vec<Vec<usize>> = (0..f)
        .map(|_| {
            let mut p: Vec<usize> = (0..beta).collect();
            p.shuffle(rng);
            p
        })
        .collect();

    let mut subsets: Vec<Vec<Vec<usize>>> = vec![Vec::new(); f];
    for (ell, list) in subsets.iter_mut().enumerate().skip(1) {
        *list = crate::code::k_subsets(f - 1, ell).into_iter().map(|s| s.into_iter().map(|x| x + 1).collect()).collect();
    }

    let u: Vec<usize> = (0..f).map(|ell| u_of(ell, f, kappa, nu)).collect::<Result<_>>()?;
    let d: Vec<usize> = (0..f).map(|ell| d_of(ell, f, kappa, nu)).collect::<Result<_>>()?;

    // per-slot block counters for undesired symbols
    let mut next_block = vec![0usize; f];
    let mut blocks = BTreeMap::new();
    for rep in 0..kappa {
        for ell in 1..f {
            for (p, set) in subsets[ell].iter().enumerate() {
                for t in 0..u[ell] - u[ell - 1] {
                    let assigned: Vec<(usize, usize)> = set
                        .iter()
                        .map(|&slot| {
                            let b = next_block[slot];
                            next_block[slot] += 1;
                            (slot, b)
                        })
                        .collect();
                    blocks.insert((rep, ell, p, t), assigned);
                }
            }
        }
    }
    debug_assert!(next_block.iter().all(|&b| b * nu <= beta));

    let len = params.query_len();
    // stored position of interleaved row `row` of slot `slot`
    let position = |slot: usize, row: usize| -> usize {
        let file = order[slot] - 1;
        file * beta + permutations[file][row]
    };
    let first_round = pow(kappa, f - 1);

    let mut nodes = Vec::with_capacity(n);
    for j in 1..=n {
        let mut queries = Vec::with_capacity(params.queries_per_node());
        for rep in 0..kappa {
            let a_ij = pair.a_entry(rep + 1, j);
            for offset in 0..first_round {
                let row = first_round * (a_ij - 1) + offset;
                queries.push(Query {
                    vector: QueryVector::new(len, vec![position(0, row)])?,
                    tag: QueryTag::DesiredFirst { rep, offset },
                });
            }
            for ell in 1..f {
                let per_subset = u[ell] - u[ell - 1];
                for p in 0..subsets[ell].len() {
                    for t in 0..per_subset {
                        let assigned = &blocks[&(rep, ell, p, t)];
                        for a_row in 0..kappa {
                            let a = pair.a_entry(a_row + 1, j);
                            let support = assigned.iter().map(|&(slot, b)| position(slot, b * nu + a - 1)).collect();
                            queries.push(Query {
                                vector: QueryVector::new(len, support)?,
                                tag: QueryTag::Undesired { rep, round: ell, subset: p, block: t, a_row },
                            });
                        }
                        for b_row in 0..delta {
                            let b = pair.b_entry(b_row + 1, j);
                            let c = p * per_subset * delta + t * delta + b_row;
                            let own = (d[ell - 1] + c) * nu + a_ij - 1;
                            let mut support = vec![position(0, own)];
                            support.extend(assigned.iter().map(|&(slot, blk)| position(slot, blk * nu + b - 1)));
                            queries.push(Query {
                                vector: QueryVector::new(len, support)?,
                                tag: QueryTag::DesiredHigher { rep, round: ell, subset: p, block: t, b_row },
                            });
                        }
                    }
                }
            }
        }
        if options.shuffle {
            queries.shuffle(rng);
        }
        nodes.push(queries);
    }

    Ok(QueryPlan { requested: m, order, permutations, subsets, blocks, nodes, shuffled: options.shuffle })
}

/// Inner products of each query with a node's stored column.
pub fn node_respond(field: FieldSpec, stored: &[u64], queries: &[QueryVector]) -> Result<Vec<u64>> {
    queries
        .iter()
        .map(|q| {
            if q.len != stored.len() {
                return Err(param(format!("query of length {} against a column of {} symbols", q.len, stored.len())));
            }
            Ok(q.support.iter().fold(0, |acc, &p| field.add(acc, stored[p])))
        })
        .collect()
}

/// Aligned sums decoded so far and the order in which they were used.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SideLedger {
    /// (rep, round, subset, block, interference row u) → round it was decoded in.
    decoded: BTreeMap<SumKey, usize>,
    /// (key, consuming round) in consumption order.
    consumed: Vec<(SumKey, usize)>,
}

impl SideLedger {
    fn record(&mut self, key: SumKey, round: usize) {
        self.decoded.insert(key, round);
    }

    fn consume(&mut self, key: SumKey, round: usize) -> Result<()> {
        match self.decoded.get(&key) {
            Some(&r) if r < round => {
                self.consumed.push((key, round));
                Ok(())
            }
            _ => Err(Error::DecodeIntegrity(format!("aligned sum {key:?} used in round {round} before it was decoded"))),
        }
    }

    pub fn decoded_count(&self) -> usize {
        self.decoded.len()
    }

    pub fn consumed_count(&self) -> usize {
        self.consumed.len()
    }

    /// Every consumed sum was decoded in a strictly earlier round.
    pub fn is_monotone(&self) -> bool {
        self.consumed.iter().all(|(key, round)| self.decoded.get(key).is_some_and(|r| r < round))
    }
}

/// Recovers codewords from their values on an information set.
struct SetDecoder {
    info: Vec<usize>,
    inverse: FieldMatrix,
}

impl SetDecoder {
    fn new(code: &LinearCode, support: &CoordinateSet) -> Result<Self> {
        let info = code
            .information_set_within(support)
            .ok_or_else(|| Error::Precondition(format!("{support} holds no information set")))?
            .indices();
        let inverse = code.generator().select_columns(&info).inverse()?;
        Ok(Self { info, inverse })
    }

    /// Message and full codeword from partially known coordinates; checks every
    /// known coordinate against the re-encoded word.
    fn decode(&self, code: &LinearCode, known: &[Option<u64>], what: &str) -> Result<(Vec<u64>, Vec<u64>)> {
        let values: Vec<u64> = self
            .info
            .iter()
            .map(|&j| known[j].ok_or_else(|| Error::DecodeIntegrity(format!("{what}: coordinate {} missing", j + 1))))
            .collect::<Result<_>>()?;
        let message = self.inverse.left_mul_vec(&values);
        let word = code.generator().left_mul_vec(&message);
        if let Some(j) = (0..word.len()).find(|&j| known[j].is_some_and(|v| v != word[j])) {
            return Err(Error::DecodeIntegrity(format!("{what}: coordinate {} disagrees with the code", j + 1)));
        }
        Ok((message, word))
    }
}

/// Decoded file plus the side-information bookkeeping.
#[derive(Clone, Debug)]
pub struct Decoded {
    pub file: FieldMatrix,
    pub ledger: SideLedger,
}

/// Reconstructs the requested file (β×k) from every node's responses.
pub fn decode(responses: &[Vec<u64>], plan: &QueryPlan, params: &ProtocolParams) -> Result<Decoded> {
    let code = &params.code;
    let (n, k, kappa, nu, beta, f) = (code.n(), code.k(), params.kappa(), params.nu(), params.beta, params.files);
    let field = code.field();
    let pair = &params.interference;
    if responses.len() != n {
        return Err(param(format!("expected responses from {n} nodes, got {}", responses.len())));
    }
    for (l, r) in responses.iter().enumerate() {
        if r.len() != plan.nodes[l].len() {
            return Err(param(format!("node {} answered {} of {} queries", l + 1, r.len(), plan.nodes[l].len())));
        }
    }

    let decoders: Vec<SetDecoder> =
        (1..=nu).map(|u| SetDecoder::new(code, &pair.s_set(u)?)).collect::<Result<_>>()?;
    let u_vals: Vec<usize> = (0..f).map(|ell| u_of(ell, f, kappa, nu)).collect::<Result<_>>()?;
    let d_vals: Vec<usize> = (0..f).map(|ell| d_of(ell, f, kappa, nu)).collect::<Result<_>>()?;
    let first_round = pow(kappa, f - 1);
    let delta = nu - kappa;

    // undesired sums: key (rep, round, subset, block, u) → per-node value
    let mut sums: BTreeMap<SumKey, Vec<Option<u64>>> = BTreeMap::new();
    for (l, queries) in plan.nodes.iter().enumerate() {
        for (q, &value) in queries.iter().zip(&responses[l]) {
            if let QueryTag::Undesired { rep, round, subset, block, a_row } = q.tag {
                let u = pair.a_entry(a_row + 1, l + 1);
                sums.entry((rep, round, subset, block, u)).or_insert_with(|| vec![None; n])[l] = Some(value);
            }
        }
    }
    let mut ledger = SideLedger::default();
    let mut aligned: BTreeMap<SumKey, Vec<u64>> = BTreeMap::new();
    // decode in round order so the ledger reflects availability
    let mut keys: Vec<_> = sums.keys().copied().collect();
    keys.sort_by_key(|&(rep, round, subset, block, u)| (round, rep, subset, block, u));
    for key in keys {
        let (_, word) = decoders[key.4 - 1].decode(code, &sums[&key], &format!("aligned sum {key:?}"))?;
        ledger.record(key, key.1);
        aligned.insert(key, word);
    }

    // requested-file symbols: interleaved row → per-node value
    let mut stripes: Vec<Vec<Option<u64>>> = vec![vec![None; n]; beta];
    let mut higher: Vec<(usize, usize, &Query, u64)> = Vec::new();
    for (l, queries) in plan.nodes.iter().enumerate() {
        let j = l + 1;
        for (q, &value) in queries.iter().zip(&responses[l]) {
            match q.tag {
                QueryTag::DesiredFirst { rep, offset } => {
                    let row = first_round * (pair.a_entry(rep + 1, j) - 1) + offset;
                    set_symbol(&mut stripes[row][l], value, row)?;
                }
                QueryTag::DesiredHigher { round, .. } => higher.push((round, l, q, value)),
                QueryTag::Undesired { .. } => {}
            }
        }
    }
    higher.sort_by_key(|&(round, l, q, _)| (round, l, q.tag));
    for (_, l, q, value) in higher {
        let QueryTag::DesiredHigher { rep, round, subset, block, b_row } = q.tag else { unreachable!() };
        let j = l + 1;
        let b = pair.b_entry(b_row + 1, j);
        let key = (rep, round, subset, block, b);
        ledger.consume(key, round + 1)?;
        let side = aligned.get(&key).ok_or_else(|| Error::DecodeIntegrity(format!("aligned sum {key:?} missing")))?[l];
        let per_subset = u_vals[round] - u_vals[round - 1];
        let c = subset * per_subset * delta + block * delta + b_row;
        let row = (d_vals[round - 1] + c) * nu + pair.a_entry(rep + 1, j) - 1;
        set_symbol(&mut stripes[row][l], field.sub(value, side), row)?;
    }

    let requested = plan.requested - 1;
    let perm = &plan.permutations[requested];
    let mut file = FieldMatrix::zeros(field, beta, k);
    for (row, known) in stripes.iter().enumerate() {
        let u = if row < first_round * nu { row / first_round + 1 } else { row % nu + 1 };
        let (message, _) = decoders[u - 1].decode(code, known, &format!("stripe {}", row + 1))?;
        for (c, &x) in message.iter().enumerate() {
            file.set(perm[row], c, x);
        }
    }
    Ok(Decoded { file, ledger })
}

fn set_symbol(slot: &mut Option<u64>, value: u64, row: usize) -> Result<()> {
    if slot.replace(value).is_some() {
        return Err(Error::DecodeIntegrity(format!("stripe {} downloaded twice from one node", row + 1)));
    }
    Ok(())
}

impl QueryPlan {
    /// Relabeled file order (1-based originals, requested file first).
    pub fn file_order(&self) -> &[usize] {
        &self.order
    }

    /// Number of undesired (rep, round, subset, block) groups.
    pub fn undesired_groups(&self) -> usize {
        self.blocks.len()
    }

    /// Original files (1-based) in the `subset`-th ℓ-subset.
    pub fn subset_files(&self, ell: usize, subset: usize) -> Vec<usize> {
        self.subsets[ell][subset].iter().map(|&slot| self.order[slot]).collect()
    }
}
