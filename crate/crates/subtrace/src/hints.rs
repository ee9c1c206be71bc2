//! Factor-hint files: `p^k n : f1,f2,...` lines naming prime factors of p^{kn} − 1.

use std::path::Path;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::ntheory::is_prime;

/// The hint file shipped with the crate (large prime factors of Φ_d(7)).
pub const BUILTIN_HINTS_7: &str = include_str!("../data/hints_7.txt");

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HintEntry {
    pub p: u64,
    pub k: u32,
    pub n: u32,
    pub factors: Vec<BigUint>,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HintIssue {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for HintIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HintSet {
    pub entries: Vec<HintEntry>,
}

fn parse_line(body: &str) -> Result<(u64, u32, u32, Vec<BigUint>), String> {
    let (head, tail) = body.split_once(':').ok_or("missing ':'")?;
    let mut parts = head.split_whitespace();
    let pk = parts.next().ok_or("missing p^k")?;
    let n = parts.next().ok_or("missing n")?;
    if parts.next().is_some() {
        return Err("expected `p^k n` before ':'".into());
    }
    let (p, k) = pk.split_once('^').ok_or("expected p^k")?;
    let p: u64 = p.trim().parse().map_err(|_| format!("bad prime `{p}`"))?;
    let k: u32 = k.trim().parse().map_err(|_| format!("bad exponent `{k}`"))?;
    let n: u32 = n.parse().map_err(|_| format!("bad n `{n}`"))?;
    if p < 3 || p % 2 == 0 || k == 0 || n == 0 {
        return Err("need odd p and k, n >= 1".into());
    }
    let mut factors = Vec::new();
    for f in tail.split(',') {
        let f = f.trim();
        if f.is_empty() {
            continue;
        }
        let v: BigUint = f.parse().map_err(|_| format!("bad factor `{f}`"))?;
        factors.push(v);
    }
    if factors.is_empty() {
        return Err("no factors listed".into());
    }
    Ok((p, k, n, factors))
}

impl HintSet {
    /// Parses hint text; malformed lines are skipped and reported with line numbers.
    pub fn parse(text: &str) -> (HintSet, Vec<HintIssue>) {
        let mut entries = Vec::new();
        let mut issues = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            match parse_line(body) {
                Ok((p, k, n, factors)) => entries.push(HintEntry { p, k, n, factors, line: i + 1 }),
                Err(message) => issues.push(HintIssue { line: i + 1, message }),
            }
        }
        (HintSet { entries }, issues)
    }

    pub fn load(path: &Path) -> std::io::Result<(HintSet, Vec<HintIssue>)> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn builtin() -> HintSet {
        Self::parse(BUILTIN_HINTS_7).0
    }

    pub fn extend(&mut self, other: HintSet) {
        self.entries.extend(other.entries);
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every candidate factor for characteristic `p`; they are verified by division where used.
    pub fn factors_for_prime(&self, p: u64) -> Vec<BigUint> {
        let mut v: Vec<BigUint> = self
            .entries
            .iter()
            .filter(|e| e.p == p)
            .flat_map(|e| e.factors.iter().cloned())
            .collect();
        v.sort();
        v.dedup();
        v
    }

    /// Hints claimed for exactly p^{big_n} − 1 that fail to divide it or are not prime.
    pub fn rejected_for(&self, p: u64, big_n: u64, value: &BigUint) -> Vec<BigUint> {
        let mut out = Vec::new();
        for e in self.entries.iter().filter(|e| e.p == p && e.k as u64 * e.n as u64 == big_n) {
            for f in &e.factors {
                let bad = f <= &BigUint::one() || !(value % f).is_zero() || !is_prime(f);
                if bad && !out.contains(f) {
                    out.push(f.clone());
                }
            }
        }
        out
    }

    /// Checks every entry against its own group order.
    pub fn validate(&self) -> Vec<HintIssue> {
        let mut issues = Vec::new();
        for e in &self.entries {
            let value = BigUint::from(e.p).pow(e.k * e.n) - 1u32;
            for f in &e.factors {
                if f.is_zero() || !(&value % f).is_zero() {
                    issues.push(HintIssue { line: e.line, message: format!("{f} does not divide {}^{} - 1", e.p, e.k * e.n) });
                } else if !is_prime(f) {
                    issues.push(HintIssue { line: e.line, message: format!("{f} is not prime") });
                }
            }
        }
        issues
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_report() {
        let text = "# comment\n7^1 5 : 2801\n\n7^x 5 : 3\n7^2 3 : 43, 19 # trailing\n7^1 5 2801\n";
        let (set, issues) = HintSet::parse(text);
        assert_eq!(set.entries.len(), 2);
        assert_eq!(set.entries[1].factors.len(), 2);
        assert_eq!(issues.iter().map(|i| i.line).collect::<Vec<_>>(), vec![4, 6]);
        assert!(set.validate().is_empty());
    }

    #[test]
    fn validation_catches_bad_factor() {
        let (set, _) = HintSet::parse("7^1 5 : 11, 2801\n7^1 6 : 9\n");
        let issues = set.validate();
        assert_eq!(issues.len(), 2);
        assert_eq!(issues[0].line, 1);
        assert!(issues[1].message.contains("not prime"));
        let v = BigUint::from(16806u32);
        assert_eq!(set.rejected_for(7, 5, &v), vec![BigUint::from(11u32)]);
    }

    #[test]
    fn builtin_hints_are_valid() {
        let (set, issues) = HintSet::parse(BUILTIN_HINTS_7);
        assert!(issues.is_empty(), "{issues:?}");
        assert!(!set.is_empty());
        assert!(set.validate().is_empty());
    }
}
