//! Command-line front end.
//!
//! Exit status: 0 on success, 1 on a verified negative, 2 on usage errors,
//! 3 when a budget ran out before an answer was reached.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_integer::Integer;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    achievable_rate, achievable_rate_limit, automorphism_lambda, classify, scan_small_codes, distance_rate,
    mds_pir_capacity, render_rational, Budgets, ScanOptions, Verdict, SEARCH_MULTIPLES,
};
use crate::code::{AutomorphismKind, LinearCode, DEFAULT_CODEWORD_BUDGET, DEFAULT_GHW_NODE_BUDGET};
use crate::dss::{encode_storage, privacy_audit, run_session_with, AuditOptions, FileSet, SessionOptions};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::protocol::ProtocolParams;
use crate::rate::{search_rate_matrix, RateMatrix, SearchOutcome, DEFAULT_SEARCH_BUDGET};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INDETERMINATE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "pircodex", version, about = "Private information retrieval over linear-code storage")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// MDS-PIR capacity for n nodes, dimension k and f files.
    Capacity { n: usize, k: usize, f: usize },
    /// Protocol rate for a code and rate matrix.
    Rate {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        lambda: LambdaArgs,
        /// Number of files.
        #[arg(long)]
        files: usize,
    },
    /// Decide whether a code admits a capacity-achieving rate matrix.
    Classify {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        budgets: BudgetArgs,
        /// Exit 1 unless the code is capacity achieving.
        #[arg(long)]
        certify: bool,
    },
    /// Store random files and retrieve them privately.
    Simulate {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        lambda: LambdaArgs,
        #[arg(long)]
        files: usize,
        /// 1-based file to retrieve (all files when omitted).
        #[arg(long)]
        request: Option<usize>,
        /// Stripes per file; must equal ν^f.
        #[arg(long)]
        stripes: Option<usize>,
        #[command(flatten)]
        seed: SeedArgs,
        /// Include the tagged query plan in the trace.
        #[arg(long)]
        plan: bool,
    },
    /// Audit that node views do not depend on the requested file.
    Audit {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        lambda: LambdaArgs,
        #[arg(long)]
        files: usize,
        /// Trials per requested file.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[command(flatten)]
        seed: SeedArgs,
        /// Skip query shuffling for this request (negative control).
        #[arg(long)]
        unshuffled: Option<usize>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Compare the weight screen against rate-matrix search on all small codes.
    Scan {
        /// Largest code length.
        #[arg(long)]
        nmax: usize,
        #[arg(long, default_value = "gf(2)")]
        field: FieldSpec,
        /// Largest ν tried, as a multiple of n.
        #[arg(long, default_value_t = 2)]
        nu_factor: usize,
        #[command(flatten)]
        budgets: BudgetArgs,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Generalized Hamming weights d_1..d_s.
    Ghw {
        #[command(flatten)]
        code: CodeArgs,
        /// Largest s (defaults to k).
        #[arg(long)]
        s: Option<usize>,
        #[command(flatten)]
        budgets: BudgetArgs,
    },
    /// Check a rate matrix against a code.
    Validate {
        #[command(flatten)]
        code: CodeArgs,
        /// Rate matrix file.
        #[arg(long)]
        lambda: PathBuf,
    },
    /// Exhaustive search for a rate matrix with given κ and ν.
    Search {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        kappa: usize,
        #[arg(long)]
        nu: usize,
        #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
        budget: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Construct {
    Cyclic,
    Rm,
    Mds,
    Repetition,
}

#[derive(Args, Debug, Clone)]
pub struct CodeArgs {
    /// Code file.
    #[arg(long, conflicts_with = "construct")]
    pub code: Option<PathBuf>,
    /// Built-in code family.
    #[arg(long)]
    pub construct: Option<Construct>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Reed-Muller order.
    #[arg(long)]
    pub r: Option<u32>,
    /// Reed-Muller number of variables.
    #[arg(long)]
    pub e: Option<u32>,
    /// Cyclic generator polynomial, comma-separated coefficients from degree 0.
    #[arg(long, value_delimiter = ',')]
    pub poly: Option<Vec<String>>,
    /// Field, e.g. gf(5) or gf(2^3).
    #[arg(long)]
    pub field: Option<FieldSpec>,
}

#[derive(Args, Debug, Clone)]
pub struct LambdaArgs {
    /// Rate matrix: a file, `search`, `automorphism`, `cyclic` or `rm`.
    #[arg(long, default_value = "search")]
    pub lambda: String,
    #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
    pub search_budget: u64,
}

#[derive(Args, Debug, Clone)]
pub struct SeedArgs {
    #[arg(long, env = "PIRCODEX_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct BudgetArgs {
    /// Node budget of the rate-matrix search.
    #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
    pub search_budget: u64,
    /// Node budget of the weight-hierarchy search.
    #[arg(long, default_value_t = DEFAULT_GHW_NODE_BUDGET)]
    pub ghw_budget: u64,
}

impl BudgetArgs {
    fn budgets(&self) -> Budgets {
        Budgets { codewords: DEFAULT_CODEWORD_BUDGET, ghw_nodes: self.ghw_budget, search_nodes: self.search_budget }
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

impl CodeArgs {
    pub fn load(&self) -> Result<LinearCode> {
        let code = match (&self.code, self.construct) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
                LinearCode::from_text(&text)?
            }
            (None, Some(kind)) => self.construct(kind)?,
            (None, None) => return Err(usage("give --code <file> or --construct <family>")),
        };
        if let Some(field) = self.field {
            if field != code.field() {
                return Err(Error::SpecMismatch(field.to_string(), code.field().to_string()));
            }
        }
        Ok(code)
    }

    fn construct(&self, kind: Construct) -> Result<LinearCode> {
        let need = |v: Option<usize>, name: &str| v.ok_or_else(|| usage(format!("--construct needs --{name}")));
        let field = self.field.unwrap_or(FieldSpec::prime(2)?);
        match kind {
            Construct::Cyclic => {
                let poly = self.poly.as_ref().ok_or_else(|| usage("--construct cyclic needs --poly"))?;
                let coeffs = poly.iter().map(|c| field.parse_element(c.trim())).collect::<Result<Vec<_>>>()?;
                LinearCode::cyclic(field, need(self.n, "n")?, &coeffs)
            }
            Construct::Rm => {
                let r = self.r.ok_or_else(|| usage("--construct rm needs --r"))?;
                let e = self.e.ok_or_else(|| usage("--construct rm needs --e"))?;
                if field.order() != 2 {
                    return Err(usage("Reed-Muller codes are binary"));
                }
                LinearCode::reed_muller(r, e)
            }
            Construct::Mds => LinearCode::mds(field, need(self.n, "n")?, need(self.k, "k")?),
            Construct::Repetition => LinearCode::repetition(field, need(self.n, "n")?),
        }
    }
}

/// Where a rate matrix came from.
#[derive(Clone, Debug, Serialize)]
pub struct LambdaChoice {
    pub source: String,
    pub lambda: RateMatrix,
}

enum LambdaLookup {
    Found(LambdaChoice),
    NotFound(String),
    Indeterminate(String),
}

impl LambdaArgs {
    fn resolve(&self, code: &LinearCode) -> Result<LambdaLookup> {
        let families: &[(AutomorphismKind, &str)] = match self.lambda.as_str() {
            "search" => return search_capacity_lambda(code, self.search_budget),
            "cyclic" => &[(AutomorphismKind::CyclicShifts, "cyclic_shifts")],
            "rm" => &[(AutomorphismKind::RmTranslations, "rm_translations")],
            "automorphism" => {
                &[(AutomorphismKind::CyclicShifts, "cyclic_shifts"), (AutomorphismKind::RmTranslations, "rm_translations")]
            }
            path => {
                let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {path}: {e}")))?;
                let lambda = RateMatrix::from_text(&text)?;
                return Ok(LambdaLookup::Found(LambdaChoice { source: format!("file:{path}"), lambda }));
            }
        };
        let mut last = None;
        for &(kind, name) in families {
            match automorphism_lambda(code, kind) {
                Ok(lambda) => return Ok(LambdaLookup::Found(LambdaChoice { source: name.into(), lambda })),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or_else(|| usage("no automorphism family applies")))
    }
}

fn search_capacity_lambda(code: &LinearCode, budget: u64) -> Result<LambdaLookup> {
    let (n, k) = (code.n(), code.k());
    if k == n {
        return Err(usage("k = n leaves nothing to retrieve privately with this protocol"));
    }
    let g = n.gcd(&k);
    let mut indeterminate = false;
    for c in SEARCH_MULTIPLES {
        let (kappa, nu) = (c * k / g, c * n / g);
        match search_rate_matrix(code, kappa, nu, budget)? {
            SearchOutcome::Found(lambda) => {
                return Ok(LambdaLookup::Found(LambdaChoice { source: format!("search:{kappa}/{nu}"), lambda }))
            }
            SearchOutcome::NotFound => {}
            SearchOutcome::Indeterminate { .. } => indeterminate = true,
        }
    }
    let msg = "no capacity-achieving rate matrix found; pass a rate matrix file".to_string();
    Ok(if indeterminate { LambdaLookup::Indeterminate(msg) } else { LambdaLookup::NotFound(msg) })
}

/// A rendered report plus the exit status it implies.
pub struct Outcome {
    pub status: i32,
    pub json: Value,
    pub text: String,
    /// Rows for CSV output (header first); falls back to key/value pairs.
    pub csv: Option<Vec<Vec<String>>>,
}

impl Outcome {
    fn new(status: i32, json: Value, text: String) -> Self {
        Self { status, json, text, csv: None }
    }
}

fn lambda_text(lambda: &RateMatrix) -> String {
    lambda.rows().iter().map(|r| r.iter().map(u8::to_string).collect::<Vec<_>>().join(" ")).collect::<Vec<_>>().join("\n")
}

fn code_json(code: &LinearCode) -> Value {
    json!({ "field": code.field().to_string(), "n": code.n(), "k": code.k() })
}

fn lambda_or_exit(code: &LinearCode, args: &LambdaArgs) -> Result<std::result::Result<LambdaChoice, Outcome>> {
    Ok(match args.resolve(code)? {
        LambdaLookup::Found(c) => Ok(c),
        LambdaLookup::NotFound(msg) => {
            Err(Outcome::new(EXIT_NEGATIVE, json!({ "code": code_json(code), "error": msg }), msg))
        }
        LambdaLookup::Indeterminate(msg) => {
            Err(Outcome::new(EXIT_INDETERMINATE, json!({ "code": code_json(code), "error": msg }), msg))
        }
    })
}

/// Runs one parsed command.
pub fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Capacity { n, k, f } => {
            let c = mds_pir_capacity(*n, *k, *f)?;
            let mut o = Outcome::new(
                EXIT_OK,
                json!({ "n": n, "k": k, "f": f, "capacity": c.to_string(), "decimal": crate::analysis::rational_to_f64(&c) }),
                render_rational(&c),
            );
            o.csv = Some(vec![
                vec!["n".into(), "k".into(), "f".into(), "capacity".into()],
                vec![n.to_string(), k.to_string(), f.to_string(), format!("{}/{}", c.numer(), c.denom())],
            ]);
            Ok(o)
        }
        Command::Rate { code, lambda, files } => {
            let code = code.load()?;
            let choice = match lambda_or_exit(&code, lambda)? {
                Ok(c) => c,
                Err(o) => return Ok(o),
            };
            let lam = &choice.lambda;
            let rate = achievable_rate(lam, &code, *files)?;
            let capacity = mds_pir_capacity(code.n(), code.k(), *files)?;
            let limit = achievable_rate_limit(lam.kappa(), lam.nu(), code.n(), code.k())?;
            let achieving = lam.kappa() * code.n() == code.k() * lam.nu();
            let json = json!({
                "code": code_json(&code),
                "lambda": choice,
                "files": files,
                "rate": format!("{}/{}", rate.numer(), rate.denom()),
                "capacity": format!("{}/{}", capacity.numer(), capacity.denom()),
                "rate_limit": format!("{}/{}", limit.numer(), limit.denom()),
                "capacity_achieving": achieving,
                "distance_rate": distance_rate(&code, *files).ok().map(|r| format!("{}/{}", r.numer(), r.denom())),
            });
            let text = format!(
                "rate      {}\ncapacity  {}\nκ={} ν={} ({})\n",
                render_rational(&rate),
                render_rational(&capacity),
                lam.kappa(),
                lam.nu(),
                choice.source
            );
            Ok(Outcome::new(EXIT_OK, json, text))
        }
        Command::Classify { code, budgets, certify } => {
            let code = code.load()?;
            let c = classify(&code, &budgets.budgets())?;
            let status = match c.verdict {
                Verdict::CapacityAchieving => EXIT_OK,
                Verdict::RuledOut if *certify => EXIT_NEGATIVE,
                Verdict::RuledOut => EXIT_OK,
                Verdict::Indeterminate => EXIT_INDETERMINATE,
            };
            let mut text = format!("{}\n", c.verdict.as_str());
            match &c.witness {
                crate::analysis::Witness::RateMatrix { method, lambda } => {
                    let _ = writeln!(text, "Λ (κ={}, ν={}, via {method}):\n{}", lambda.kappa(), lambda.nu(), lambda_text(lambda));
                }
                crate::analysis::Witness::Failure { s, weight } => {
                    let _ = writeln!(text, "d_{s} = {weight} < (n/k)·{s} = {}/{}", code.n() * s, code.k());
                }
                crate::analysis::Witness::Note { text: note } => {
                    let _ = writeln!(text, "{note}");
                }
            }
            let json = json!({ "code": code_json(&code), "classification": c });
            Ok(Outcome::new(status, json, text))
        }
        Command::Simulate { code, lambda, files, request, stripes, seed, plan } => {
            let code = code.load()?;
            let choice = match lambda_or_exit(&code, lambda)? {
                Ok(c) => c,
                Err(o) => return Ok(o),
            };
            let params = ProtocolParams::new(code.clone(), choice.lambda.clone(), *files)?;
            if let Some(b) = stripes {
                if *b != params.beta() {
                    return Err(usage(format!("--stripes {b} does not match β = ν^f = {}", params.beta())));
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed.seed);
            rng.set_stream(1);
            let stored = FileSet::random(code.field(), *files, params.beta(), code.k(), &mut rng)?;
            let storage = encode_storage(&stored, &code)?;
            let requests: Vec<usize> = match request {
                Some(m) => vec![*m],
                None => (1..=*files).collect(),
            };
            let mut sessions = Vec::new();
            let mut text = format!("seed {}\n", seed.seed);
            let mut all_ok = true;
            for m in requests {
                let out = run_session_with(&storage, &params, m, seed.seed, SessionOptions { include_plan: *plan })?;
                let correct = &out.decoded == stored.file(m);
                all_ok &= correct;
                let _ = writeln!(
                    text,
                    "file {m}: recovered={correct} download={} rate={}",
                    out.download,
                    render_rational(&out.rate)
                );
                sessions.push(json!({ "request": m, "recovered": correct, "trace": out.trace }));
            }
            let capacity = mds_pir_capacity(code.n(), code.k(), *files)?;
            let _ = writeln!(text, "capacity {}", render_rational(&capacity));
            let json = json!({
                "seed": seed.seed,
                "code": code_json(&code),
                "lambda": choice,
                "capacity": format!("{}/{}", capacity.numer(), capacity.denom()),
                "sessions": sessions,
            });
            Ok(Outcome::new(if all_ok { EXIT_OK } else { EXIT_NEGATIVE }, json, text))
        }
        Command::Audit { code, lambda, files, trials, seed, unshuffled, jobs } => {
            let code = code.load()?;
            let choice = match lambda_or_exit(&code, lambda)? {
                Ok(c) => c,
                Err(o) => return Ok(o),
            };
            let params = ProtocolParams::new(code.clone(), choice.lambda.clone(), *files)?;
            let options = AuditOptions {
                trials: *trials,
                master_seed: seed.seed,
                unshuffled_request: *unshuffled,
                jobs: *jobs,
                ..AuditOptions::default()
            };
            let report = privacy_audit(&params, &options)?;
            let min_p = report.statistical.iter().map(|t| t.p_value).fold(1.0f64, f64::min);
            let text = format!(
                "seed {}\nstructural {}\nstatistical {} (min p = {min_p:.4}, per-test threshold {:.2e})\n{}\n",
                seed.seed,
                if report.structural_pass { "pass" } else { "FAIL" },
                if report.statistical_pass { "pass" } else { "FAIL" },
                report.per_test_threshold,
                if report.pass { "pass" } else { "FAIL" },
            );
            let status = if report.pass { EXIT_OK } else { EXIT_NEGATIVE };
            Ok(Outcome::new(status, json!({ "seed": seed.seed, "code": code_json(&code), "lambda": choice, "audit": report }), text))
        }
        Command::Scan { nmax, field, nu_factor, budgets, jobs } => {
            if *nmax == 0 || *nmax > 8 {
                return Err(usage("--nmax must be between 1 and 8"));
            }
            let options = ScanOptions { budgets: budgets.budgets(), nu_factor: *nu_factor, jobs: *jobs };
            let report = scan_small_codes(*nmax, *field, &options)?;
            let mut text = String::new();
            let mut csv = vec![["n", "k", "generator", "weights", "necessary", "search", "kappa", "nu", "agree"]
                .map(String::from)
                .to_vec()];
            for r in &report.rows {
                let generator = r.generator.iter().map(|row| row.iter().map(u64::to_string).collect::<String>()).collect::<Vec<_>>().join("/");
                let weights = r.weights.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
                let opt = |b: Option<bool>| b.map_or("?".to_string(), |b| b.to_string());
                let search = serde_json::to_value(&r.search).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
                let (kappa, nu) = r.found_at.map_or((String::new(), String::new()), |(a, b)| (a.to_string(), b.to_string()));
                let flag = if r.agree == Some(false) { "  <-- DISAGREEMENT" } else { "" };
                let _ = writeln!(
                    text,
                    "[{},{}] {generator:<24} d=({weights}) screen={} search={search}{flag}",
                    r.n,
                    r.k,
                    opt(r.necessary)
                );
                csv.push(vec![r.n.to_string(), r.k.to_string(), generator, weights, opt(r.necessary), search, kappa, nu, opt(r.agree)]);
            }
            let _ = writeln!(text, "{} codes, {} disagreements, {} indeterminate", report.rows.len(), report.disagreements, report.indeterminate);
            let status = if report.disagreements > 0 {
                EXIT_NEGATIVE
            } else if report.indeterminate > 0 {
                EXIT_INDETERMINATE
            } else {
                EXIT_OK
            };
            let mut o = Outcome::new(status, serde_json::to_value(&report).map_err(|e| Error::Parse(e.to_string()))?, text);
            o.csv = Some(csv);
            Ok(o)
        }
        Command::Ghw { code, s, budgets } => {
            let code = code.load()?;
            let s_max = s.unwrap_or(code.k());
            let weights = match code.weight_hierarchy_upto(s_max, DEFAULT_CODEWORD_BUDGET, budgets.ghw_budget) {
                Ok(w) => w,
                Err(Error::TooLarge { .. }) => {
                    return Ok(Outcome::new(EXIT_INDETERMINATE, json!({ "code": code_json(&code) }), "budget exhausted\n".into()))
                }
                Err(e) => return Err(e),
            };
            let failure = weights.iter().enumerate().map(|(i, &d)| (i + 1, d)).find(|&(s, d)| d * code.k() < code.n() * s);
            let mut text: String = weights.iter().enumerate().map(|(i, d)| format!("d_{} = {d}\n", i + 1)).collect();
            if let Some((s, d)) = failure {
                let _ = writeln!(text, "d_{s} = {d} < (n/k)·{s}: no capacity-achieving rate matrix");
            }
            let json = json!({ "code": code_json(&code), "weights": weights, "screen_failure": failure });
            Ok(Outcome::new(EXIT_OK, json, text))
        }
        Command::Validate { code, lambda } => {
            let code = code.load()?;
            let text = std::fs::read_to_string(lambda).map_err(|e| usage(format!("cannot read {}: {e}", lambda.display())))?;
            let lam = RateMatrix::from_text(&text)?;
            let v = lam.validate(&code)?;
            let text = if v.valid {
                format!("valid (κ={}, ν={})\n", lam.kappa(), lam.nu())
            } else {
                format!("invalid: row {:?} holds no information set\n", v.failing_row)
            };
            let status = if v.valid { EXIT_OK } else { EXIT_NEGATIVE };
            Ok(Outcome::new(status, json!({ "code": code_json(&code), "validation": v }), text))
        }
        Command::Search { code, kappa, nu, budget } => {
            let code = code.load()?;
            let (status, json, text) = match search_rate_matrix(&code, *kappa, *nu, *budget)? {
                SearchOutcome::Found(l) => (EXIT_OK, json!({ "outcome": "found", "lambda": l }), format!("found\n{}\n", lambda_text(&l))),
                SearchOutcome::NotFound => (EXIT_NEGATIVE, json!({ "outcome": "not_found" }), "not found (search exhausted)\n".into()),
                SearchOutcome::Indeterminate { nodes } => (
                    EXIT_INDETERMINATE,
                    json!({ "outcome": "indeterminate", "nodes": nodes }),
                    format!("indeterminate after {nodes} nodes\n"),
                ),
            };
            let mut json = json;
            json["code"] = code_json(&code);
            json["kappa"] = json!(kappa);
            json["nu"] = json!(nu);
            Ok(Outcome::new(status, json, text))
        }
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render(outcome: &Outcome, format: Format) -> String {
    match format {
        Format::Text => {
            let mut t = outcome.text.clone();
            if !t.ends_with('\n') {
                t.push('\n');
            }
            t
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&outcome.json).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Csv => {
            let rows = outcome.csv.clone().unwrap_or_else(|| {
                let mut rows = vec![vec!["key".to_string(), "value".to_string()]];
                if let Value::Object(map) = &outcome.json {
                    for (k, v) in map {
                        let v = v.as_str().map_or_else(|| v.to_string(), String::from);
                        rows.push(vec![k.clone(), v]);
                    }
                }
                rows
            });
            rows.iter().map(|r| r.iter().map(|c| csv_escape(c)).collect::<Vec<_>>().join(",") + "\n").collect()
        }
    }
}

fn error_status(e: &Error) -> i32 {
    match e {
        Error::TooLarge { .. } => EXIT_INDETERMINATE,
        Error::DecodeIntegrity(_) => EXIT_NEGATIVE,
        _ => EXIT_USAGE,
    }
}

/// Parses `args`, runs the command and writes the report. Returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let status = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return status;
        }
    };
    match dispatch(&cli) {
        Ok(outcome) => {
            let _ = out.write_all(render(&outcome, cli.format).as_bytes());
            outcome.status
        }
        Err(e) => {
            let status = error_status(&e);
            if cli.format == Format::Json {
                let _ = writeln!(out, "{}", json!({ "error": e.to_string(), "status": status }));
            }
            let _ = writeln!(err, "error: {e}");
            status
        }
    }
}
