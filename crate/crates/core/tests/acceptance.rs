//! Acceptance checks, one line per criterion.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pircodex::analysis::{
    achievable_rate, scan_small_codes, scan_shapes, inequivalent_codes, mds_pir_capacity, necessary_condition,
    rate_from_parameters, ScanOptions,
};
use pircodex::cli;
use pircodex::code::{AutomorphismKind, CoordinateSet, LinearCode};
use pircodex::dss::{encode_storage, privacy_audit, run_session, AuditOptions, FileSet};
use pircodex::protocol::{expected_download, ProtocolParams};
use pircodex::rate::{lambda_from_automorphisms, search_rate_matrix, RateMatrix, SearchOutcome};
use pircodex::{FieldMatrix, FieldSpec};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ratio(a: usize, b: usize) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn gf(q: u64) -> FieldSpec {
    FieldSpec::with_order(q).unwrap()
}

fn example_code() -> LinearCode {
    let g = FieldMatrix::from_rows(gf(2), &[vec![1, 0, 0, 1, 0], vec![0, 1, 0, 1, 0], vec![0, 0, 1, 0, 1]]).unwrap();
    LinearCode::from_generator(g).unwrap()
}

fn example_lambda() -> RateMatrix {
    RateMatrix::new(vec![vec![0, 1, 1, 1, 1], vec![1, 0, 0, 1, 1], vec![1, 1, 1, 0, 0]]).unwrap()
}

fn automorphism_lambda(code: &LinearCode, kind: AutomorphismKind) -> RateMatrix {
    let perms = code.automorphism_family(kind).unwrap();
    let info = code.information_set_within(&CoordinateSet::from_zero_based(0..code.n())).unwrap();
    lambda_from_automorphisms(code, &perms, &info).unwrap()
}

/// (name, code, Λ, largest f, whether Λ meets capacity)
fn configurations() -> Vec<(&'static str, LinearCode, RateMatrix, usize, bool)> {
    let mds = LinearCode::mds(gf(5), 5, 3).unwrap();
    let mds_lambda = match search_rate_matrix(&mds, 3, 5, 50_000_000).unwrap() {
        SearchOutcome::Found(l) => l,
        other => panic!("no Λ for the [5,3,3] code: {other:?}"),
    };
    let hamming = LinearCode::cyclic(gf(2), 7, &[1, 1, 0, 1]).unwrap();
    let hamming_lambda = automorphism_lambda(&hamming, AutomorphismKind::CyclicShifts);
    let rm = LinearCode::reed_muller(1, 3).unwrap();
    let rm_lambda = automorphism_lambda(&rm, AutomorphismKind::RmTranslations);
    vec![
        ("[5,3,2] example", example_code(), example_lambda(), 3, false),
        ("[5,3,3] MDS over GF(5)", mds, mds_lambda, 3, true),
        ("[7,4] cyclic Hamming", hamming, hamming_lambda, 3, true),
        ("RM(1,3)", rm, rm_lambda, 2, true),
    ]
}

fn capacity_identity() -> Check {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let status = cli::run(["pircodex", "capacity", "5", "3", "2"], &mut out, &mut err);
    let printed = String::from_utf8(out).unwrap();
    ensure(status == 0 && printed.trim() == "5/8 (0.625)", || format!("capacity 5 3 2 printed {printed:?}"))?;
    ensure(mds_pir_capacity(5, 3, 2).unwrap() == ratio(5, 8), || "C_2(5,3) != 5/8".into())?;
    let mut cases = 0;
    for n in 2..=10 {
        for k in 1..n {
            ensure(mds_pir_capacity(n, k, 1).unwrap() == BigRational::one(), || format!("C_1({n},{k}) != 1"))?;
            cases += 1;
        }
    }
    Ok(format!("5/8 exact, C_1 = 1 for {cases} (n,k) pairs"))
}

fn example_fidelity() -> Check {
    let code = example_code();
    let lam = example_lambda();
    let v = lam.validate(&code).unwrap();
    ensure(v.valid, || format!("printed Λ rejected: {v:?}"))?;
    let pair = lam.interference();
    ensure(pair.a() == [vec![2, 1, 1, 1, 1], vec![3, 3, 3, 2, 2]], || format!("A = {:?}", pair.a()))?;
    ensure(pair.b() == [vec![1, 2, 2, 3, 3]], || format!("B = {:?}", pair.b()))?;
    let s1 = pair.s_set(1).unwrap();
    ensure(s1.members() == [2, 3, 4, 5], || format!("S(1|A) = {s1}"))?;
    Ok("Λ valid, A and B match, S(1|A) = {2,3,4,5}".into())
}

fn necessary_ruling() -> Check {
    let code = example_code();
    let d2 = code.generalized_hamming_weight(2).unwrap();
    ensure(d2 == 3, || format!("d_2 = {d2}"))?;
    let nc = necessary_condition(&code, 3).unwrap();
    ensure(nc.failure == Some((2, 3)), || format!("screen: {nc:?}"))?;
    for (kappa, nu) in [(3, 5), (6, 10)] {
        let outcome = search_rate_matrix(&code, kappa, nu, u64::MAX).unwrap();
        ensure(outcome == SearchOutcome::NotFound, || format!("search κ={kappa} ν={nu}: {outcome:?}"))?;
    }
    Ok("d_2 = 3 < 10/3, searches at 3/5 and 6/10 exhausted without a match".into())
}

fn end_to_end() -> Check {
    let mut sessions = 0;
    for (name, code, lam, f_max, achieving) in configurations() {
        for f in 1..=f_max {
            let params = ProtocolParams::new(code.clone(), lam.clone(), f).unwrap();
            let (kappa, nu) = (lam.kappa(), lam.nu());
            let eq3 = rate_from_parameters(kappa, nu, code.n(), code.k(), f).unwrap();
            ensure(achievable_rate(&lam, &code, f).unwrap() == eq3, || format!("{name}: achievable_rate mismatch"))?;
            let capacity = mds_pir_capacity(code.n(), code.k(), f).unwrap();
            for seed in 0..5u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
                let files = FileSet::random(code.field(), f, params.beta(), code.k(), &mut rng).unwrap();
                let storage = encode_storage(&files, &code).unwrap();
                ensure(storage.rows_are_codewords(&code), || format!("{name}: stored row outside the code"))?;
                for m in 1..=f {
                    let out = run_session(&storage, &params, m, seed).map_err(|e| format!("{name} f={f} m={m}: {e}"))?;
                    ensure(&out.decoded == files.file(m), || format!("{name} f={f} m={m} seed={seed}: wrong file"))?;
                    let d = expected_download(code.n(), kappa, nu, f);
                    ensure(out.download == d, || format!("{name} f={f}: download {} != {d}", out.download))?;
                    ensure(out.rate == eq3, || format!("{name} f={f}: rate {} != {eq3}", out.rate))?;
                    ensure(!achieving || out.rate == capacity, || format!("{name} f={f}: rate {} != C_f {capacity}", out.rate))?;
                    ensure(out.trace.side_information.used_after_decoding, || format!("{name}: side information used early"))?;
                    sessions += 1;
                }
            }
        }
    }
    Ok(format!("{sessions} sessions recovered bit-exactly with closed-form download and rate"))
}

fn rate_dominance() -> Check {
    let budget = 2_000_000;
    let mut found = 0;
    let mut codes = 0;
    for n in 2..=6 {
        for k in 1..n {
            for g in inequivalent_codes(gf(2), n, k) {
                let code = LinearCode::from_generator(g).unwrap();
                codes += 1;
                for nu in 2..=n + 2 {
                    for kappa in 1..nu {
                        if kappa * n < k * nu {
                            continue;
                        }
                        let SearchOutcome::Found(lam) = search_rate_matrix(&code, kappa, nu, budget).unwrap() else {
                            continue;
                        };
                        found += 1;
                        for f in 1..=4 {
                            let r = achievable_rate(&lam, &code, f).unwrap();
                            let c = mds_pir_capacity(n, k, f).unwrap();
                            ensure(r <= c, || format!("[{n},{k}] κ={kappa} ν={nu} f={f}: {r} > {c}"))?;
                            let at_ratio = kappa * n == k * nu;
                            ensure((r == c) == at_ratio, || format!("[{n},{k}] κ={kappa} ν={nu} f={f}: equality mismatch"))?;
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{found} rate matrices over {codes} inequivalent binary codes, n <= 6"))
}

fn privacy() -> Check {
    for (name, code, lam, f_max, _) in configurations() {
        for f in 1..=f_max {
            let params = ProtocolParams::new(code.clone(), lam.clone(), f).unwrap();
            let report = privacy_audit(&params, &AuditOptions { trials: 1, ..AuditOptions::default() }).unwrap();
            ensure(report.structural_pass, || format!("{name} f={f}: node signatures depend on the request"))?;
        }
    }
    let params = ProtocolParams::new(example_code(), example_lambda(), 2).unwrap();
    let options = AuditOptions { trials: 10_000, master_seed: 2024, jobs: 4, ..AuditOptions::default() };
    let report = privacy_audit(&params, &options).unwrap();
    ensure(report.pass, || format!("example audit failed: {:?}", report.statistical))?;
    let min_p = report.statistical.iter().map(|t| t.p_value).fold(1.0, f64::min);
    let control = privacy_audit(&params, &AuditOptions { unshuffled_request: Some(2), ..options }).unwrap();
    ensure(!control.pass && !control.statistical_pass, || "unshuffled control passed the audit".into())?;
    Ok(format!("signatures equal in all configurations; 10^4 trials min p = {min_p:.4}; control rejected"))
}

fn scan_agreement() -> Check {
    let options = ScanOptions { jobs: 4, ..ScanOptions::default() };
    let small = scan_small_codes(5, gf(2), &options).unwrap();
    ensure(small.disagreements == 0 && small.indeterminate == 0, || {
        format!("n <= 5: {} disagreements, {} indeterminate", small.disagreements, small.indeterminate)
    })?;
    let example = small
        .rows
        .iter()
        .find(|r| r.n == 5 && r.k == 3 && r.weights.starts_with(&[2, 3]))
        .ok_or("no [5,3] row with d_1 = 2, d_2 = 3")?;
    ensure(example.necessary == Some(false), || "example-like row passed the screen".into())?;
    let spot = scan_shapes(gf(2), &[(6, 2), (6, 3), (7, 2), (7, 3)], &options).unwrap();
    ensure(spot.disagreements == 0 && spot.indeterminate == 0, || {
        format!("spot checks: {} disagreements, {} indeterminate", spot.disagreements, spot.indeterminate)
    })?;
    Ok(format!("{} codes with n <= 5 and {} spot-check codes, zero disagreements", small.rows.len(), spot.rows.len()))
}

/// d_s from all s-dimensional subspaces of a binary code, each listed as the
/// set of its messages.
fn subspace_oracle(code: &LinearCode, s: usize) -> usize {
    let k = code.k();
    let words: Vec<u64> = (0..1u32 << k)
        .map(|m| {
            let msg: Vec<u64> = (0..k).map(|i| u64::from(m >> i & 1)).collect();
            code.encode(&msg).unwrap().iter().enumerate().fold(0, |acc, (j, &x)| acc | (x << j))
        })
        .collect();
    let mut seen = BTreeSet::new();
    let mut best = usize::MAX;
    let mut basis = Vec::with_capacity(s);
    fn spans(start: u32, k: usize, s: usize, basis: &mut Vec<u32>, visit: &mut dyn FnMut(&[u32])) {
        if basis.len() == s {
            visit(basis);
            return;
        }
        for m in start..1 << k {
            basis.push(m);
            spans(m + 1, k, s, basis, visit);
            basis.pop();
        }
    }
    spans(1, k, s, &mut basis, &mut |b| {
        let mut span: BTreeSet<u32> = BTreeSet::from([0]);
        for &v in b {
            let shifted: Vec<u32> = span.iter().map(|x| x ^ v).collect();
            span.extend(shifted);
        }
        if span.len() != 1 << s || !seen.insert(span.clone()) {
            return;
        }
        let support = span.iter().fold(0u64, |acc, &m| acc | words[m as usize]);
        best = best.min(support.count_ones() as usize);
    });
    best
}

fn ghw_oracle() -> Check {
    let mds = LinearCode::mds(gf(5), 5, 3).unwrap();
    for s in 1..=3 {
        let d = mds.generalized_hamming_weight(s).unwrap();
        ensure(d == 5 - 3 + s, || format!("[5,3,3] d_{s} = {d}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut tested = 0;
    while tested < 20 {
        let n = rng.random_range(2..=8);
        let k = rng.random_range(1..=n.min(4));
        let rows: Vec<Vec<u64>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(0..2)).collect()).collect();
        let Ok(code) = LinearCode::from_generator(FieldMatrix::from_rows(gf(2), &rows).unwrap()) else { continue };
        for s in 1..=k {
            let fast = code.generalized_hamming_weight(s).unwrap();
            let oracle = subspace_oracle(&code, s);
            ensure(fast == oracle, || format!("[{n},{k}] d_{s}: search {fast}, oracle {oracle}"))?;
        }
        tested += 1;
    }
    Ok(format!("MDS weights n-k+s; {tested} random binary codes agree with the subspace oracle"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("capacity identity", capacity_identity),
        ("example fidelity", example_fidelity),
        ("weight-hierarchy ruling", necessary_ruling),
        ("end-to-end recovery and rate", end_to_end),
        ("rate dominance", rate_dominance),
        ("privacy audit", privacy),
        ("scan agreement", scan_agreement),
        ("GHW oracle agreement", ghw_oracle),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {} [{name}]: PASS ({secs:.1}s) {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} [{name}]: FAIL ({secs:.1}s) {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
