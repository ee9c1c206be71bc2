//! Per-pair verification pipeline and sweep reports.
//!
//! Each (q, n) runs the basic criterion, then a prime-sieve search, then a
//! modified-sieve search, stopping at the first certification. Pairs are
//! independent; the sweep merges them back in (k, n) order so reports are
//! byte-identical for any worker count.

use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use crate::cyclofactor::coset_profile;
use crate::ffield::FieldCtx;
use crate::hints::HintSet;
use crate::ntheory::{factor_group_order, is_prime_u64, DEFAULT_BUDGET};
use crate::oracle::{test_functions, FreenessSpec, Oracle, WitnessRecord};
use crate::par;
use crate::sieve::{
    check_basic_pair, check_modified_sieve, check_prime_sieve, search_choice, search_modified, Criterion, ModifiedMode, ModifiedPartition,
    PartitionSpace, SieveChoice, SieveReport, Verdict,
};

pub const SCHEMA: &str = "subtrace-campaign/1";

/// Largest q^n for which `--oracle` actually enumerates the field.
pub const CAMPAIGN_ORACLE_CAP: u64 = 200_000;

/// CSV header; one row per pair, in report order.
pub const CSV_HEADER: &str = "p,k,n,q,status,certified_by,basic,prime_sieve,modified_printed,modified_corrected,factorization_complete,cofactor,listed_exception,agrees_with_list";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CampaignError {
    #[error("characteristic 2 is excluded: the subtrace identity divides by 2")]
    EvenCharacteristic,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("n = {0}: pairs with n ≤ 4 are never in D_m (explicit counterexamples exist), so only n ≥ 5 is considered")]
    SmallN(u64),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("empty range")]
    EmptyRange,
}

#[derive(Clone, Debug)]
pub struct CampaignConfig {
    pub p: u64,
    pub m: u64,
    pub hints: HintSet,
    pub budget: u64,
    /// decide the modified sieve with Θ(g′) rather than the printed θ(g′)
    pub corrected: bool,
    pub oracle: bool,
    pub oracle_cap: u64,
}

impl CampaignConfig {
    pub fn new(p: u64, m: u64) -> CampaignConfig {
        CampaignConfig { p, m, hints: HintSet::builtin(), budget: DEFAULT_BUDGET, corrected: false, oracle: false, oracle_cap: CAMPAIGN_ORACLE_CAP }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Member,
    ExceptionCandidate,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct PairId {
    pub p: u64,
    pub k: u32,
    pub n: u64,
}

impl std::fmt::Display for PairId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.k == 1 {
            write!(f, "({},{})", self.p, self.n)
        } else {
            write!(f, "({}^{},{})", self.p, self.k, self.n)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModifiedAttempt {
    pub mode: ModifiedMode,
    pub partition: ModifiedPartition,
    pub report: SieveReport,
}

/// Outcome of `--oracle`: witnesses over the bundled test functions and all (b², b).
#[derive(Clone, Debug, Serialize)]
pub struct OracleSummary {
    pub ran: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped_reason: Option<String>,
    pub functions: usize,
    pub instances: usize,
    pub instances_with_witness: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub missing: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairEntry {
    pub id: PairId,
    pub q: String,
    pub m: u64,
    pub factorization_complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cofactor: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rejected_hints: Vec<String>,
    pub basic: SieveReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prime_sieve: Option<SieveReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choice: Option<SieveChoice>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub modified: Vec<ModifiedAttempt>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certified_by: Option<Criterion>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub listed_exception: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agrees_with_list: Option<bool>,
}

impl PairEntry {
    fn modified_verdict(&self, mode: ModifiedMode) -> Option<Verdict> {
        self.modified.iter().find(|a| a.mode == mode).map(|a| a.report.verdict)
    }

    /// Re-checks the certifying data in isolation.
    pub fn recheck(&self, m: u64) -> bool {
        let q = BigUint::from(self.id.p).pow(self.id.k);
        match (self.status, self.certified_by) {
            (Status::Member, Some(Criterion::Basic)) => self.basic.holds(),
            (Status::Member, Some(Criterion::PrimeSieve)) => self.choice.as_ref().is_some_and(|c| check_prime_sieve(c, &q, self.id.n, m).holds()),
            (Status::Member, Some(Criterion::ModifiedSieve)) => self
                .modified
                .last()
                .is_some_and(|a| check_modified_sieve(&a.partition, self.id.p, &q, self.id.n, m, a.mode).holds()),
            (Status::Member, None) => false,
            (_, c) => c.is_none(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub pairs: usize,
    pub members: Vec<PairId>,
    pub exception_candidates: Vec<PairId>,
    pub indeterminate: Vec<PairId>,
    /// pairs the bundled exception list calls exceptions that were certified here
    pub certified_but_listed: Vec<PairId>,
    /// exception candidates here that the bundled list certifies
    pub unlisted_candidates: Vec<PairId>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CampaignReport {
    pub schema: &'static str,
    pub p: u64,
    pub m: u64,
    pub corrected: bool,
    pub entries: Vec<PairEntry>,
    pub summary: Summary,
}

/// The published exception list for q = 7^k, n ≥ 6, m = 2; None outside that family.
pub fn listed_exception(id: PairId, m: u64) -> Option<bool> {
    if id.p != 7 || m != 2 || id.n < 6 {
        return None;
    }
    Some(match id.n {
        6 => id.k <= 4,
        7 => id.k <= 2,
        8 | 9 | 10 | 12 | 18 => id.k == 1,
        _ => false,
    })
}

pub fn validate(p: u64, k: u32, n: u64) -> Result<(), CampaignError> {
    if p == 2 {
        return Err(CampaignError::EvenCharacteristic);
    }
    if !is_prime_u64(p) {
        return Err(CampaignError::NotPrime(p));
    }
    if k == 0 {
        return Err(CampaignError::ZeroK);
    }
    if n < 5 {
        return Err(CampaignError::SmallN(n));
    }
    Ok(())
}

/// Runs the pipeline on q = p^k and n.
pub fn check_pair(cfg: &CampaignConfig, k: u32, n: u64) -> Result<PairEntry, CampaignError> {
    validate(cfg.p, k, n)?;
    let (p, m) = (cfg.p, cfg.m);
    let id = PairId { p, k, n };
    let q = BigUint::from(p).pow(k);
    let fact = factor_group_order(p, k, n as u32, &cfg.hints, cfg.budget);
    let profile = coset_profile(p, &q, n);
    let basic = check_basic_pair(&q, n, m, &fact, &profile);
    let mut e = PairEntry {
        id,
        q: q.to_string(),
        m,
        factorization_complete: fact.complete,
        cofactor: (!fact.complete).then(|| fact.cofactor.to_string()),
        rejected_hints: fact.rejected_hints.iter().map(|h| h.to_string()).collect(),
        basic,
        prime_sieve: None,
        choice: None,
        modified: Vec::new(),
        status: Status::ExceptionCandidate,
        certified_by: None,
        oracle: None,
        listed_exception: listed_exception(id, m),
        agrees_with_list: None,
    };
    if !fact.complete {
        e.status = Status::Indeterminate;
    } else if e.basic.holds() {
        e.status = Status::Member;
        e.certified_by = Some(Criterion::Basic);
    } else if let Some((choice, rep)) = search_choice(&q, n, m, &profile, &fact) {
        e.status = Status::Member;
        e.certified_by = Some(Criterion::PrimeSieve);
        e.choice = Some(choice);
        e.prime_sieve = Some(rep);
    } else {
        let modes: &[ModifiedMode] = if cfg.corrected { &[ModifiedMode::Printed, ModifiedMode::Corrected] } else { &[ModifiedMode::Printed] };
        for &mode in modes {
            if let Some((partition, report)) = search_modified(p, &q, n, m, &profile, &fact, mode, PartitionSpace::DegreeThreshold) {
                e.modified.push(ModifiedAttempt { mode, partition, report });
            }
        }
        let deciding = if cfg.corrected { ModifiedMode::Corrected } else { ModifiedMode::Printed };
        if e.modified_verdict(deciding) == Some(Verdict::Holds) {
            // the deciding attempt goes last so `recheck` finds it
            e.modified.sort_by_key(|a| a.mode == deciding);
            e.status = Status::Member;
            e.certified_by = Some(Criterion::ModifiedSieve);
        }
    }
    if cfg.oracle {
        e.oracle = Some(run_oracle(cfg, k, n));
    }
    e.agrees_with_list = match (e.listed_exception, e.status) {
        (_, Status::Indeterminate) | (None, _) => None,
        (Some(listed), s) => Some(listed == (s == Status::ExceptionCandidate)),
    };
    Ok(e)
}

/// Exhaustive witness search over the bundled test functions; skipped above `cfg.oracle_cap`.
pub fn run_oracle(cfg: &CampaignConfig, k: u32, n: u64) -> OracleSummary {
    let mut out = OracleSummary { ran: false, skipped_reason: None, functions: 0, instances: 0, instances_with_witness: 0, missing: Vec::new(), witness: None };
    let size = BigUint::from(cfg.p).pow(k * n as u32);
    if size > BigUint::from(cfg.oracle_cap) {
        out.skipped_reason = Some(format!("q^n = {size} exceeds the oracle cap {}", cfg.oracle_cap));
        return out;
    }
    let built = FieldCtx::build_with(cfg.p as u32, k, n as u32, &cfg.hints)
        .map_err(|e| e.to_string())
        .and_then(|ctx| Oracle::with_cap(ctx, cfg.oracle_cap).map_err(|e| e.to_string()));
    let o = match built {
        Ok(o) => o,
        Err(e) => {
            out.skipped_reason = Some(e);
            return out;
        }
    };
    out.ran = true;
    let spec = FreenessSpec::full(&o);
    let (fs, _) = test_functions(&o, cfg.m as usize);
    out.functions = fs.len();
    for f in &fs {
        for (a, b) in o.square_pairs() {
            out.instances += 1;
            match o.count_c(f, &a, &b, &spec, 1) {
                Ok(r) if r.count > 0 => {
                    out.instances_with_witness += 1;
                    if out.witness.is_none() {
                        out.witness = r.witnesses.into_iter().next();
                    }
                }
                Ok(_) => out.missing.push(format!("f = {}, a = {a}, b = {b}", f.label)),
                Err(e) => out.missing.push(format!("f = {}: {e}", f.label)),
            }
        }
    }
    out
}

/// Sweeps k ∈ ks and n ∈ ns, `jobs` workers (0 = rayon default).
pub fn run_campaign(cfg: &CampaignConfig, ks: std::ops::RangeInclusive<u32>, ns: std::ops::RangeInclusive<u64>, jobs: usize) -> Result<CampaignReport, CampaignError> {
    if ks.is_empty() || ns.is_empty() {
        return Err(CampaignError::EmptyRange);
    }
    validate(cfg.p, *ks.start(), *ns.start())?;
    let pairs: Vec<(u32, u64)> = ks.flat_map(|k| ns.clone().map(move |n| (k, n))).collect();
    let entries: Vec<PairEntry> = par::with_jobs(jobs, || par::map_collect(pairs, |(k, n)| check_pair(cfg, k, n)))
        .into_iter()
        .collect::<Result<_, _>>()?;
    Ok(assemble(cfg, entries))
}

pub fn assemble(cfg: &CampaignConfig, mut entries: Vec<PairEntry>) -> CampaignReport {
    entries.sort_by_key(|e| e.id);
    let mut s = Summary { pairs: entries.len(), ..Summary::default() };
    for e in &entries {
        match e.status {
            Status::Member => s.members.push(e.id),
            Status::ExceptionCandidate => s.exception_candidates.push(e.id),
            Status::Indeterminate => s.indeterminate.push(e.id),
        }
        match (e.listed_exception, e.status) {
            (Some(true), Status::Member) => s.certified_but_listed.push(e.id),
            (Some(false), Status::ExceptionCandidate) => s.unlisted_candidates.push(e.id),
            _ => {}
        }
    }
    CampaignReport { schema: SCHEMA, p: cfg.p, m: cfg.m, corrected: cfg.corrected, entries, summary: s }
}

impl CampaignReport {
    /// 0 = reproduced, 2 = disagrees with the published list, 3 = factoring gaps only.
    pub fn exit_code(&self) -> i32 {
        if !self.summary.certified_but_listed.is_empty() || !self.summary.unlisted_candidates.is_empty() {
            2
        } else if !self.summary.indeterminate.is_empty() {
            3
        } else {
            0
        }
    }

    pub fn exceptions_for_k(&self, k: u32) -> Vec<u64> {
        self.summary.exception_candidates.iter().filter(|id| id.k == k).map(|id| id.n).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let v = |r: Option<Verdict>| r.map(|v| format!("{v:?}").to_lowercase()).unwrap_or_default();
        let b = |x: Option<bool>| x.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            let status = serde_json::to_value(e.status).unwrap();
            let by = e.certified_by.map(|c| serde_json::to_value(c).unwrap());
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                e.id.p,
                e.id.k,
                e.id.n,
                e.q,
                status.as_str().unwrap(),
                by.as_ref().and_then(|c| c.as_str()).unwrap_or(""),
                v(Some(e.basic.verdict)),
                v(e.prime_sieve.as_ref().map(|r| r.verdict)),
                v(e.modified_verdict(ModifiedMode::Printed)),
                v(e.modified_verdict(ModifiedMode::Corrected)),
                e.factorization_complete,
                e.cofactor.as_deref().unwrap_or(""),
                b(e.listed_exception),
                b(e.agrees_with_list),
            ));
        }
        out
    }
}
