//! Structure of x^n − 1 over F_q through q-cyclotomic cosets.

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::ffield::{FFElem, FieldCtx, FieldError};
use crate::ntheory::prime_factors_u64;
use crate::poly::{self, Field, Poly};

/// An irreducible factor of x^n − 1, named by the least residue of its coset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Factor {
    pub degree: u32,
    pub rep: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CosetProfile {
    #[serde(serialize_with = "crate::ser::big")]
    pub q: BigUint,
    pub n: u64,
    pub n_prime: u64,
    pub multiplicity: u64,
    /// sorted by (size, least residue); the coset of 0 comes first
    pub cosets: Vec<Vec<u64>>,
    pub e_order: u64,
}

/// `q` must be a prime power p^k with `p` given.
pub fn coset_profile(p: u64, q: &BigUint, n: u64) -> CosetProfile {
    assert!(n >= 1);
    let mut n_prime = n;
    let mut multiplicity = 1;
    while n_prime % p == 0 {
        n_prime /= p;
        multiplicity *= p;
    }
    let qm = (q % n_prime).to_u64().unwrap();
    let mut seen = vec![false; n_prime as usize];
    let mut cosets = Vec::new();
    for a in 0..n_prime {
        if seen[a as usize] {
            continue;
        }
        let mut c = Vec::new();
        let mut b = a;
        while !seen[b as usize] {
            seen[b as usize] = true;
            c.push(b);
            b = ((b as u128 * qm as u128) % n_prime as u128) as u64;
        }
        c.sort_unstable();
        cosets.push(c);
    }
    cosets.sort_by_key(|c| (c.len(), c[0]));
    let e_order = if n_prime == 1 { 1 } else { crate::ntheory::multiplicative_order(qm, n_prime) };
    CosetProfile { q: q.clone(), n, n_prime, multiplicity, cosets, e_order }
}

impl CosetProfile {
    pub fn factors(&self) -> Vec<Factor> {
        self.cosets.iter().map(|c| Factor { degree: c.len() as u32, rep: c[0] }).collect()
    }

    /// Factors of L: everything except x − 1.
    pub fn l_factors(&self) -> Vec<Factor> {
        self.factors().into_iter().filter(|f| f.rep != 0).collect()
    }

    pub fn degree_profile(&self) -> Vec<u32> {
        self.factors().iter().map(|f| f.degree).collect()
    }

    pub fn num_factors(&self) -> usize {
        self.cosets.len()
    }

    /// W(x^n − 1) = 2^{number of distinct irreducible factors}.
    pub fn w_xn(&self) -> BigUint {
        BigUint::one() << self.cosets.len()
    }

    /// N0: number of factors of degree below e.
    pub fn n0(&self) -> usize {
        self.cosets.iter().filter(|c| (c.len() as u64) < self.e_order).count()
    }

    pub fn coset_of(&self, residue: u64) -> Option<usize> {
        let r = residue % self.n_prime;
        self.cosets.iter().position(|c| c.binary_search(&r).is_ok())
    }
}

/// Factors of L and W(L) = W(x^n − 1)/2.
pub fn l_part(profile: &CosetProfile) -> (Vec<Factor>, BigUint) {
    let f = profile.l_factors();
    let w = BigUint::one() << f.len();
    (f, w)
}

/// π(q, n) = N0/n′. The flag is set when n′ = 1, where e is degenerate and 0 is returned.
pub fn pi_ratio(profile: &CosetProfile) -> (BigRational, bool) {
    if profile.n_prime == 1 {
        return (BigRational::zero(), true);
    }
    (BigRational::new(profile.n0().into(), profile.n_prime.into()), false)
}

/// The explicit factorization of x^{n′} − 1 over F_q, computed in F_{q^e}.
pub struct ExplicitFactors {
    pub profile: CosetProfile,
    pub field: FieldCtx,
    pub beta: FFElem,
    /// one monic irreducible per coset, in profile order
    pub factors: Vec<Poly<FFElem>>,
}

/// Largest p^{ke} for which explicit factors are constructed.
pub const SPLITTING_DEGREE_CAP: u32 = 120;

pub fn explicit_factors(p: u32, k: u32, n: u64) -> Result<ExplicitFactors, FieldError> {
    let q = BigUint::from(p).pow(k);
    let profile = coset_profile(p as u64, &q, n);
    let e = profile.e_order as u32;
    if k * e > SPLITTING_DEGREE_CAP {
        return Err(FieldError::TooLarge(k * e));
    }
    let field = FieldCtx::build_with(p, k, e, &crate::hints::HintSet::default())?;
    let np = profile.n_prime;
    let cof = (&field.order - 1u32) / np;
    let primes = prime_factors_u64(np);
    let one = field.one();
    let mut idx = 1u64;
    let beta = loop {
        let z = field.decode_lex(idx);
        idx += 1;
        let b = field.pow(&z, &cof);
        if primes.iter().all(|&(r, _)| field.pow_u64(&b, np / r) != one) {
            break b;
        }
    };
    let factors = profile
        .cosets
        .iter()
        .map(|c| {
            c.iter().fold(vec![one.clone()], |acc, &j| {
                let root = field.pow_u64(&beta, j);
                poly::mul(&field, &acc, &[field.neg(&root), one.clone()])
            })
        })
        .collect();
    Ok(ExplicitFactors { profile, field, beta, factors })
}

impl ExplicitFactors {
    /// Π f^{multiplicity} over all factors, which must equal x^n − 1.
    pub fn product(&self) -> Poly<FFElem> {
        let f = &self.field;
        let mut acc = vec![f.one()];
        for h in &self.factors {
            for _ in 0..self.profile.multiplicity {
                acc = poly::mul(f, &acc, h);
            }
        }
        acc
    }

    /// Factors with prime-field coefficients, as F_p polynomials (None if some coefficient is outside F_p).
    pub fn fp_factor(&self, i: usize) -> Option<Vec<u32>> {
        self.factors[i]
            .iter()
            .map(|c| self.field.in_prime_field(c).then(|| c.coeffs[0]))
            .collect()
    }

    pub fn format_factor(&self, i: usize) -> String {
        self.field.format_poly(&self.factors[i])
    }

    /// Writes a polynomial over F_p as a product of the explicit factors: (coset index, exponent) pairs.
    /// None when it does not divide x^n − 1 (or is zero).
    pub fn decompose_fp(&self, g: &[u32]) -> Option<Vec<(usize, u32)>> {
        let f = &self.field;
        let mut rest = f.embed_fp_poly(g);
        poly::degree(f, &rest)?;
        let mut out = Vec::new();
        for (i, h) in self.factors.iter().enumerate() {
            let mut e = 0u32;
            loop {
                let (quo, r) = poly::divrem(f, &rest, h);
                if !r.is_empty() {
                    break;
                }
                rest = quo;
                e += 1;
            }
            if e > 0 {
                out.push((i, e));
            }
        }
        (poly::degree(f, &rest) == Some(0)).then_some(out)
    }

    /// Transports factor `i` into another field with the same F_q.
    pub fn factor_in(&self, target: &FieldCtx, i: usize) -> Option<Poly<FFElem>> {
        target.transport_poly(&self.field, &self.factors[i])
    }

    /// True when the polynomial is one of the factors, or a Galois conjugate of one
    /// (its coefficients moved by a power of p-Frobenius). Returns (index, literal?).
    pub fn match_factor(&self, g: &[u32]) -> Option<(usize, bool)> {
        let f = &self.field;
        let target = f.embed_fp_poly(g);
        if let Some(i) = self.factors.iter().position(|h| *h == target) {
            return Some((i, true));
        }
        for (i, h) in self.factors.iter().enumerate() {
            let mut c = h.clone();
            for _ in 0..f.k {
                c = c.iter().map(|x| f.frobenius_p(x)).collect();
                if c == target {
                    return Some((i, false));
                }
            }
        }
        None
    }
}

/// W(x^n − 1) ≤ 2^{(n + gcd(n, q − 1))/2}, and ≤ 2^{3n/4} when n ∤ q − 1; checked exactly.
pub fn w_bounds_hold(profile: &CosetProfile) -> bool {
    let n = profile.n;
    let r = ((&profile.q - 1u32) % n).to_u64().unwrap();
    let n2 = n.gcd(&r);
    let c = profile.num_factors() as u64;
    2 * c <= n + n2 && (r == 0 || 4 * c <= 3 * n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: u64, k: u32) -> BigUint {
        BigUint::from(p).pow(k)
    }

    #[test]
    fn examples() {
        let pr = coset_profile(7, &q(7, 1), 11);
        assert_eq!(pr.degree_profile(), vec![1, 10]);
        assert_eq!(pr.e_order, 10);
        assert_eq!(l_part(&pr).1, BigUint::from(2u32));
        let pr6 = coset_profile(7, &q(7, 1), 6);
        assert_eq!(pr6.degree_profile(), vec![1; 6]);
        assert_eq!(pr6.w_xn(), BigUint::from(64u32));
        assert_eq!(l_part(&pr6).1, BigUint::from(32u32));
        let pr7 = coset_profile(7, &q(7, 1), 7);
        assert_eq!((pr7.n_prime, pr7.multiplicity, pr7.num_factors()), (1, 7, 1));
        assert!(pi_ratio(&pr7).1);
        let (pi, flag) = pi_ratio(&pr);
        assert!(!flag);
        assert_eq!(pi, BigRational::new(1.into(), 11.into()));
    }

    #[test]
    fn profile_invariants() {
        for &(p, k) in &[(3u64, 1u32), (5, 1), (7, 1), (7, 2), (7, 3)] {
            for n in 1..=60u64 {
                let pr = coset_profile(p, &q(p, k), n);
                let mut all: Vec<u64> = pr.cosets.iter().flatten().copied().collect();
                all.sort_unstable();
                assert_eq!(all, (0..pr.n_prime).collect::<Vec<_>>());
                assert_eq!(pr.cosets[0], vec![0]);
                assert!(pr.cosets.iter().all(|c| pr.e_order % c.len() as u64 == 0));
                assert_eq!(pr.n_prime * pr.multiplicity, n);
                // n·π(q,n) = n′·π(q,n′): both count the same factors
                let pr2 = coset_profile(p, &q(p, k), pr.n_prime);
                assert_eq!(pr.n0(), pr2.n0());
                assert_eq!(l_part(&pr).1 * 2u32, pr.w_xn());
            }
        }
    }

    #[test]
    fn w_bounds() {
        for &k in &[1u32, 2, 3] {
            for &(p, kk) in &[(3u64, 1u32), (5, 1), (7, k)] {
                for n in 1..=60u64 {
                    assert!(w_bounds_hold(&coset_profile(p, &q(p, kk), n)), "q={p}^{kk} n={n}");
                }
            }
        }
    }

    #[test]
    fn pi_bounds_for_powers_of_seven() {
        for k in 1..=4u32 {
            let qq = q(7, k);
            let q_mod = |m: u64| (&qq % m).to_u64().unwrap();
            for np in 5..=120u64 {
                if np % 7 == 0 {
                    continue;
                }
                let pr = coset_profile(7, &qq, np);
                let n1 = np.gcd(&((&qq - 1u32) % np).to_u64().unwrap());
                let pi = pi_ratio(&pr).0;
                let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
                if np == 2 * n1 {
                    assert_eq!((pr.e_order, pi.clone()), (2, r(1, 2)), "k={k} n'={np}");
                } else if np == 4 * n1 && q_mod(4) == 1 {
                    assert_eq!((pr.e_order, pi.clone()), (4, r(3, 8)), "k={k} n'={np}");
                } else if np == 6 * n1 && q_mod(6) == 1 {
                    assert_eq!((pr.e_order, pi.clone()), (6, r(13, 36)), "k={k} n'={np}");
                } else {
                    assert!(pi <= r(1, 3), "k={k} n'={np} pi={pi}");
                }
            }
        }
    }

    #[test]
    fn explicit_reconstruction() {
        for &(p, k, n) in &[(7u32, 1u32, 6u64), (7, 1, 5), (7, 1, 14), (3, 1, 5), (7, 2, 9), (5, 1, 12)] {
            let ef = explicit_factors(p, k, n).unwrap();
            assert_eq!(ef.product(), poly::x_pow_minus_one(&ef.field, n as usize));
            for (i, h) in ef.factors.iter().enumerate() {
                assert_eq!(h.len() - 1, ef.profile.cosets[i].len());
                assert!(h.iter().all(|c| ef.field.in_subfield(c)));
            }
        }
        let ef = explicit_factors(7, 1, 6).unwrap();
        let mut lin: Vec<Vec<u32>> = (0..6).map(|i| ef.fp_factor(i).unwrap()).collect();
        lin.sort();
        assert_eq!(lin, (1..=6).map(|c| vec![c, 1]).collect::<Vec<_>>());
        let ef5 = explicit_factors(7, 1, 5).unwrap();
        assert_eq!(ef5.profile.degree_profile(), vec![1, 4]);
    }

    #[test]
    fn table_polynomials_decompose() {
        let ef = explicit_factors(7, 1, 30).unwrap();
        let g = poly::parse_fp("x^3+x^2+5x+5", 7).unwrap();
        let d = ef.decompose_fp(&g).unwrap();
        assert_eq!(d.iter().map(|&(i, _)| ef.profile.cosets[i].len()).sum::<usize>(), 3);
        let gp = poly::parse_fp("x^4+2x^2+4", 7).unwrap();
        assert!(ef.decompose_fp(&gp).is_some());
        let ef36 = explicit_factors(7, 1, 36).unwrap();
        let g36 = poly::parse_fp("(x^6+6)/(x+6)", 7).unwrap();
        let d36 = ef36.decompose_fp(&g36).unwrap();
        assert_eq!(d36.len(), 5);
        assert!(d36.iter().all(|&(i, e)| e == 1 && ef36.profile.cosets[i] != vec![0]));
        assert!(ef36.decompose_fp(&poly::parse_fp("x^2+x+1", 7).unwrap()).is_some());
        assert!(ef36.decompose_fp(&poly::parse_fp("x^2+x", 7).unwrap()).is_none());
        let lit = ef36.match_factor(&[6, 1]).unwrap();
        assert!(lit.1);
    }

    #[test]
    fn transport_into_oracle_field() {
        let ef = explicit_factors(3, 1, 5).unwrap();
        let target = FieldCtx::build(3, 1, 5).unwrap();
        let xn = target.x_n_minus_1();
        for i in 0..ef.factors.len() {
            let h = ef.factor_in(&target, i).unwrap();
            assert!(poly::rem(&target, &xn, &h).is_empty());
        }
    }
}
