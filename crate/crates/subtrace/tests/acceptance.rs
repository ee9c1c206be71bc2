//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! A criterion line reports whether the published claim is reproduced. Where it is
//! not, the expected discrepancy is pinned below and the run only fails if the
//! outcome drifts from it; broken internal invariants always fail the run.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use subtrace::campaign::{run_campaign, CampaignConfig};
use subtrace::cyclofactor::coset_profile;
use subtrace::ffield::FieldCtx;
use subtrace::hints::HintSet;
use subtrace::ntheory::{factor_group_order, DEFAULT_BUDGET};
use subtrace::oracle::{test_functions, FreenessSpec, Oracle};
use subtrace::sieve::{check_basic_pair, check_modified_sieve, check_prime_sieve, ModifiedMode, ModifiedPartition, SieveChoice};
use subtrace::tables;

const FORMULA_TOL: f64 = 1e-4;
const IMAG_TOL: f64 = 1e-6;

/// Table 3 rows whose printed choice does not certify: S ≤ 0 for rows 4 and 12,
/// and row 31 names a g′ that does not divide x^n − 1.
const TABLE3_NONCERTIFYING: [u32; 3] = [4, 12, 31];
/// Table 1 (r, k) entries whose computed threshold differs from the printed one.
const TABLE1_MISMATCH: [(&str, u32, u64); 1] = [("9.0", 4, 55)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let o = f();
    let el = t.elapsed();
    let in_time = el <= limit;
    let pass = o.pass && in_time;
    let timing = if in_time { format!("{:.2?}", el) } else { format!("{:.2?} > limit {:?}", el, limit) };
    println!("criterion {id} [{}] {name}: {} ({timing})", if pass { "PASS" } else { "FAIL" }, o.detail);
    pass
}

fn ctx(p: u32, k: u32, n: u32) -> FieldCtx {
    FieldCtx::build(p, k, n).expect("field")
}

fn c1() -> Outcome {
    let mut total = 0u64;
    for p in [3u32, 5, 7] {
        let c = ctx(p, 1, 5);
        let size = c.size().unwrap();
        for code in 0..size {
            let e = c.decode(code);
            assert_eq!(c.subtrace_direct(&e), c.subtrace_identity(&e), "F_{p}^5 element {code}");
        }
        total += size;
    }
    Outcome { pass: total == 243 + 3125 + 16807, detail: format!("{total} elements, identity exact on all") }
}

fn c2() -> Outcome {
    let o = Oracle::new(ctx(3, 1, 5)).unwrap();
    let spec = FreenessSpec::full(&o);
    let (fs, _) = test_functions(&o, 2);
    let (mut worst, mut worst_im, mut cases) = (0f64, 0f64, 0);
    for f in &fs {
        for (a, b) in o.square_pairs() {
            let count = o.count_c(f, &a, &b, &spec, 0).unwrap().count;
            let z = o.eval_count_formula(f, &a, &b, &spec).unwrap();
            worst = worst.max((z.re - count as f64).abs());
            worst_im = worst_im.max(z.im.abs());
            cases += 1;
        }
    }
    Outcome {
        pass: cases > 0 && worst < FORMULA_TOL && worst_im < IMAG_TOL,
        detail: format!("{} functions, {cases} cases, max |re − count| = {worst:.2e}, max |im| = {worst_im:.2e}", fs.len()),
    }
}

fn sieve_table(text: &str, expected_bad: &[u32], hints: &HintSet) -> Outcome {
    let checks = tables::check_sieve_table(&tables::parse_sieve_table(text).unwrap(), hints);
    let bad: Vec<u32> = checks.iter().filter(|c| !c.pass).map(|c| c.row.index).collect();
    for c in checks.iter().filter(|c| c.pass) {
        let q = BigUint::from(tables::TABLE_P).pow(c.row.k);
        assert!(check_prime_sieve(c.choice.as_ref().unwrap(), &q, c.row.n, tables::TABLE_M).holds());
    }
    assert_eq!(bad, expected_bad, "non-certifying rows changed");
    let why: Vec<String> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| match (&c.error, &c.report) {
            (Some(e), _) => format!("row {}: {e}", c.row.index),
            (None, Some(r)) => format!("row {}: {:?}, S = {:.4}", c.row.index, r.verdict, r.s_approx.unwrap_or(f64::NAN)),
            _ => format!("row {}", c.row.index),
        })
        .collect();
    let ok = checks.len() - bad.len();
    let mut detail = format!("{ok}/{} rows certify", checks.len());
    if !why.is_empty() {
        detail += &format!("; {}", why.join("; "));
    }
    Outcome { pass: bad.is_empty(), detail }
}

fn c5() -> Outcome {
    let checks = tables::check_table1(&tables::parse_table1(tables::TABLE1).unwrap());
    let mut mismatches = Vec::new();
    for c in &checks {
        for &(k, got) in &c.computed {
            if got != Some(c.row.n_k) {
                mismatches.push((c.row.r_text.clone(), k, got));
            }
        }
    }
    let expected: Vec<(String, u32, Option<u64>)> = TABLE1_MISMATCH.iter().map(|&(r, k, n)| (r.to_string(), k, Some(n))).collect();
    assert_eq!(mismatches, expected, "table 1 mismatches changed");
    let ok = checks.iter().filter(|c| c.pass).count();
    let detail = format!(
        "{ok}/{} rows reproduced{}",
        checks.len(),
        mismatches.iter().map(|(r, k, n)| format!("; r = {r}, k = {k}: computed {n:?}")).collect::<String>()
    );
    Outcome { pass: ok == checks.len(), detail }
}

fn c6(hints: &HintSet) -> Outcome {
    let r = tables::part_two_constants(hints);
    let t2: Vec<String> = r
        .table2
        .iter()
        .map(|c| format!("({},{}) S={:.7} M={:.4} bound=10^{:.5}", c.row.a, c.row.b, c.computed.s_approx, c.computed.m_approx, c.computed.bound_log10))
        .collect();
    Outcome {
        pass: r.all_ok(),
        detail: format!(
            "S88={:.7} M88={:.1} log10 R={:.5} omega={} k_max(6,7)=({},{}) left(6)={:?} left(7)={:?}; {}",
            r.window88.s_approx,
            r.window88.m_approx,
            r.window88.bound_log10,
            r.omega_membership,
            r.n6_max_k,
            r.n7_max_k,
            r.n6_remaining,
            r.n7_remaining,
            t2.join(", ")
        ),
    }
}

fn c7() -> Outcome {
    let want: [&[u64]; 4] = [&[6, 7, 8, 9, 10, 12, 18], &[6, 7], &[6], &[6]];
    let mut cfg = CampaignConfig::new(7, 2);
    let printed = run_campaign(&cfg, 1..=4, 6..=40, 0).unwrap();
    cfg.corrected = true;
    let corrected = run_campaign(&cfg, 1..=4, 6..=40, 0).unwrap();
    for r in [&printed, &corrected] {
        let s = &r.summary;
        assert_eq!(s.pairs, 4 * 35);
        assert_eq!(s.pairs, s.members.len() + s.exception_candidates.len() + s.indeterminate.len());
        assert!(s.indeterminate.is_empty());
        assert!(r.entries.iter().all(|e| e.recheck(2)));
    }
    let sets = |r: &subtrace::campaign::CampaignReport| (1..=4).map(|k| r.exceptions_for_k(k)).collect::<Vec<_>>();
    let (ps, cs) = (sets(&printed), sets(&corrected));
    // pinned: printed mode certifies (7,18); neither mode certifies (49,8)
    assert_eq!(ps, vec![vec![6, 7, 8, 9, 10, 12], vec![6, 7, 8], vec![6], vec![6]], "printed-mode exceptions changed");
    assert_eq!(cs, vec![vec![6, 7, 8, 9, 10, 12, 18], vec![6, 7, 8], vec![6], vec![6]], "corrected-mode exceptions changed");
    let fmt = |v: &[Vec<u64>]| v.iter().enumerate().map(|(i, s)| format!("k={}: {s:?}", i + 1)).collect::<Vec<_>>().join(" ");
    Outcome {
        pass: ps.iter().zip(want).all(|(a, b)| a == b),
        detail: format!("printed {}; corrected {}; expected {}", fmt(&ps), fmt(&cs), fmt(&want.iter().map(|s| s.to_vec()).collect::<Vec<_>>())),
    }
}

fn c8() -> Outcome {
    let mut parts = Vec::new();
    let mut all = true;
    for p in [3u32, 7] {
        let o = Oracle::new(ctx(p, 1, 5)).unwrap();
        let spec = FreenessSpec::full(&o);
        let (fs, _) = test_functions(&o, 2);
        let (mut positive, mut verified, mut cases) = (0, 0, 0);
        for f in &fs {
            for (a, b) in o.square_pairs() {
                cases += 1;
                let r = o.count_c(f, &a, &b, &spec, 3).unwrap();
                if r.count == 0 {
                    continue;
                }
                positive += 1;
                let ok = !r.witnesses.is_empty()
                    && r.witnesses.iter().all(|w| w.reverify(&o.ctx) && w.is_primitive_normal_pair() && w.subtrace_val == a.to_string());
                verified += ok as usize;
            }
        }
        all &= positive == verified && positive > 0;
        parts.push(format!("({p},5): {verified}/{positive} positive cases re-verified out of {cases}"));
    }
    Outcome { pass: all, detail: parts.join("; ") }
}

fn c9(hints: &HintSet) -> Outcome {
    let o = Oracle::new(ctx(3, 1, 5)).unwrap();
    let all_g: Vec<usize> = (0..o.factors.len()).collect();
    let mut char_ok = 0;
    let ls: [&[u64]; 4] = [&[], &[2], &[11], &[2, 11]];
    let gs: [&[usize]; 3] = [&[], &[0], &all_g];
    let fq = o.fq.clone();
    for l in ls {
        for g in gs {
            for &a in &fq {
                let rep = o.char_fn_checks(l, g, &o.elem(a)).unwrap();
                assert!(rep.all_ok(), "l={l:?} g={g:?} {rep:?}");
                char_ok += 1;
            }
        }
    }

    let mut weil = 0;
    for (p, seeds) in [(3u32, 0..2u64), (5, 0..1)] {
        let w = Oracle::new(ctx(p, 1, 5)).unwrap();
        for seed in seeds {
            let rep = w.weil_checks(150, seed);
            assert!(rep.violations.is_empty(), "{:?}", rep.violations);
            weil += rep.instances.len();
        }
    }

    let f_all = test_functions(&o, 2).0;
    let pairs = o.square_pairs();
    let mut decomp = 0;
    let subsets_p: [(&[u64], &[u64]); 3] = [(&[], &[2, 11]), (&[2], &[11]), (&[11], &[2])];
    let subsets_g: [(&[usize], &[usize]); 3] = [(&[], &[0, 1]), (&[0], &[1]), (&[1], &[0])];
    for (i, f) in f_all.iter().take(4).enumerate() {
        for (j, &(k, big_p)) in subsets_p.iter().enumerate() {
            let (g, big_g) = subsets_g[(i + j) % 3];
            let (gp, big_gp) = subsets_g[(i + 2 * j) % 3];
            let (a, b) = &pairs[(i + j) % pairs.len()];
            let rep = o.verify_sieve_decomposition(f, a, b, k, big_p, g, big_g, gp, big_gp).unwrap();
            assert!(rep.holds, "{rep:?}");
            decomp += 1;
        }
    }

    let mut reductions = 0;
    for &(k, n) in &[(1u32, 6u64), (1, 8), (1, 11), (1, 12), (1, 13), (1, 14), (1, 15), (1, 16), (1, 19), (1, 20), (1, 30), (2, 6), (2, 8), (2, 9), (2, 10), (2, 12), (3, 8), (3, 9), (4, 8), (5, 8)] {
        let q = BigUint::from(7u32).pow(k);
        let fact = factor_group_order(7, k, n as u32, hints, DEFAULT_BUDGET);
        let pr = coset_profile(7, &q, n);
        let primes = fact.primes();
        let keep = SieveChoice::keep_all(&primes, &pr);
        assert_eq!(check_prime_sieve(&keep, &q, n, 2).verdict, check_basic_pair(&q, n, 2, &fact, &pr).verdict, "k={k} n={n}");
        for i in [0usize, 1, 2] {
            let c = SieveChoice::threshold(&primes, &pr, i.min(primes.len()), 1, 1);
            let part = ModifiedPartition::from_choice(&c);
            assert_eq!(check_prime_sieve(&c, &q, n, 2).verdict, check_modified_sieve(&part, 7, &q, n, 2, ModifiedMode::Corrected).verdict);
            // the printed denominator reduces exactly when g′ = 1
            let c0 = SieveChoice::threshold(&primes, &pr, i.min(primes.len()), 1, 0);
            let part0 = ModifiedPartition::from_choice(&c0);
            assert_eq!(check_prime_sieve(&c0, &q, n, 2).verdict, check_modified_sieve(&part0, 7, &q, n, 2, ModifiedMode::Printed).verdict);
        }
        reductions += 1;
    }
    Outcome {
        pass: char_ok > 0 && weil >= 200 && decomp >= 10 && reductions >= 20,
        detail: format!("{char_ok} characteristic-function configurations, {weil} Weil instances (0 violations), {decomp} decomposition configurations, {reductions} reduction configurations"),
    }
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        // cargo test --list support
        println!("acceptance: test");
        return;
    }
    let hints = HintSet::builtin();
    let results = [
        report(1, "subtrace identity, exhaustive", Duration::from_secs(10), c1),
        report(2, "counting formula equals exhaustive count", Duration::from_secs(300), c2),
        report(3, "Table 3 choices certify", Duration::from_secs(120), || sieve_table(tables::TABLE3, &TABLE3_NONCERTIFYING, &hints)),
        report(4, "Table 4 choices certify", Duration::from_secs(120), || sieve_table(tables::TABLE4, &[], &hints)),
        report(5, "Table 1 thresholds", Duration::from_secs(60), c5),
        report(6, "large-n constants and windows", Duration::from_secs(60), || c6(&hints)),
        report(7, "campaign exceptions, p = 7, k ≤ 4, 6 ≤ n ≤ 40", Duration::from_secs(300), c7),
        report(8, "witnesses re-verify", Duration::from_secs(600), c8),
        report(9, "property suites", Duration::from_secs(600), || c9(&hints)),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    let failed: BTreeSet<usize> = results.iter().enumerate().filter(|(_, &r)| !r).map(|(i, _)| i + 1).collect();
    println!("acceptance: {passed}/9 criteria pass; failing: {failed:?} (expected: criteria 3, 5 and 7, see README)");
    assert_eq!(failed, BTreeSet::from([3, 5, 7]), "criterion outcomes changed");
}
