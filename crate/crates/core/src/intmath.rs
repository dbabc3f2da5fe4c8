//! Elementary integer number theory.
//!
//! Factorization is budgeted: trial division by primes below one million,
//! then Brent's variant of Pollard rho with a seeded generator, with
//! Miller-Rabin deciding primality. Everything is deterministic for a fixed
//! [`FactorConfig`].

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const TRIAL_BOUND: u32 = 1_000_000;
pub const DEFAULT_SEED: u64 = 0x5eed_1ea4_2023_0001;
pub const DEFAULT_BUDGET: u64 = 4_000_000;
pub const DEFAULT_MR_ROUNDS: u32 = 40;

/// Factorization effort and reproducibility knobs.
///
/// `budget` caps the total number of rho iterations spent on one call of
/// [`factorize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactorConfig {
    pub budget: u64,
    pub seed: u64,
    pub mr_rounds: u32,
}

impl Default for FactorConfig {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            seed: DEFAULT_SEED,
            mr_rounds: DEFAULT_MR_ROUNDS,
        }
    }
}

impl FactorConfig {
    pub fn with_budget(budget: u64) -> Self {
        Self {
            budget,
            ..Self::default()
        }
    }
}

/// A (possibly partial) prime factorization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoredInt {
    pub value: BigUint,
    /// Probable primes in increasing order with positive exponents.
    pub factors: Vec<(BigUint, u32)>,
    /// Product of the composite parts left unresolved; one when complete.
    pub cofactor: BigUint,
    pub complete: bool,
}

impl FactoredInt {
    pub fn recompose(&self) -> BigUint {
        self.factors
            .iter()
            .fold(self.cofactor.clone(), |acc, (p, e)| acc * p.pow(*e))
    }

    pub fn exponent_of(&self, p: &BigUint) -> u32 {
        self.factors
            .iter()
            .find(|(q, _)| q == p)
            .map_or(0, |(_, e)| *e)
    }

    pub fn primes(&self) -> impl Iterator<Item = &BigUint> {
        self.factors.iter().map(|(p, _)| p)
    }
}

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = TRIAL_BOUND as usize;
        let mut composite = vec![false; n + 1];
        let mut out = Vec::new();
        for i in 2..=n {
            if composite[i] {
                continue;
            }
            out.push(i as u32);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
        out
    })
}

const MR_FIXED_BASES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Miller-Rabin with the first twelve primes as bases (deterministic below
/// 3.3e24), followed by seeded random bases up to `rounds` in total for
/// inputs that do not fit in a `u64`.
pub fn is_probable_prime(n: &BigUint, cfg: &FactorConfig) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &p in MR_FIXED_BASES.iter() {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    if let Some(small) = n.to_u64() {
        return is_prime_u64(small);
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;

    let witness = |a: &BigUint| -> bool {
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            return false;
        }
        for _ in 1..s {
            x = &x * &x % n;
            if x == n_minus_1 {
                return false;
            }
            if x.is_one() {
                return true;
            }
        }
        true
    };

    for &b in MR_FIXED_BASES.iter() {
        if witness(&BigUint::from(b)) {
            return false;
        }
    }
    let extra = cfg.mr_rounds.saturating_sub(MR_FIXED_BASES.len() as u32);
    if extra > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x4d52);
        let upper = &n_minus_1 - 1u32;
        for _ in 0..extra {
            let a = random_below(&mut rng, &upper) + 2u32;
            if witness(&a) {
                return false;
            }
        }
    }
    true
}

fn rem_u32(n: &BigUint, p: u32) -> u32 {
    let p = p as u128;
    n.iter_u64_digits()
        .rev()
        .fold(0u128, |r, d| ((r << 64) | d as u128) % p) as u32
}

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod_u64(acc, b, m);
        }
        b = mul_mod_u64(b, b, m);
        e >>= 1;
    }
    acc
}

/// Miller-Rabin with the fixed bases, exact on all of `u64`.
fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in MR_FIXED_BASES.iter() {
        let p = p as u64;
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'bases: for &a in MR_FIXED_BASES.iter() {
        let mut x = pow_mod_u64(a as u64, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

fn random_below(rng: &mut ChaCha8Rng, bound: &BigUint) -> BigUint {
    if bound.is_zero() {
        return BigUint::zero();
    }
    let bytes = (bound.bits() as usize).div_ceil(8) + 8;
    let buf: Vec<u8> = (0..bytes).map(|_| rng.gen()).collect();
    BigUint::from_bytes_le(&buf) % bound
}

/// Brent's cycle-finding rho. Returns a nontrivial factor, or `None` if
/// `iterations` are exhausted first.
fn brent_rho(n: &BigUint, rng: &mut ChaCha8Rng, iterations: &mut u64) -> Option<BigUint> {
    if n.is_even() {
        return Some(BigUint::from(2u32));
    }
    const BATCH: u64 = 128;
    let one = BigUint::one();
    while *iterations > 0 {
        let c = random_below(rng, &(n - 3u32)) + 1u32;
        let mut y = random_below(rng, n);
        let step = |v: &BigUint| (v * v + &c) % n;
        let mut g = one.clone();
        let mut r: u64 = 1;
        let mut q = one.clone();
        let mut x = y.clone();
        let mut ys = y.clone();

        while g.is_one() {
            x = y.clone();
            for _ in 0..r {
                y = step(&y);
            }
            let mut k = 0;
            while k < r && g.is_one() {
                ys = y.clone();
                let lim = BATCH.min(r - k);
                for _ in 0..lim {
                    y = step(&y);
                    let diff = if x > y { &x - &y } else { &y - &x };
                    q = q * diff % n;
                }
                *iterations = iterations.saturating_sub(lim);
                g = q.gcd(n);
                k += lim;
                if *iterations == 0 && g.is_one() {
                    return None;
                }
            }
            r *= 2;
        }

        if g == *n {
            // the batch overshot; replay one step at a time
            loop {
                ys = step(&ys);
                let diff = if x > ys { &x - &ys } else { &ys - &x };
                g = diff.gcd(n);
                if !g.is_one() {
                    break;
                }
            }
        }
        if g != *n {
            return Some(g);
        }
    }
    None
}

/// Factorizes `n` within the configured effort.
///
/// Incompleteness is reported through [`FactoredInt::complete`]; this
/// function never fails.
pub fn factorize(n: &BigUint, cfg: &FactorConfig) -> FactoredInt {
    assert!(!n.is_zero(), "factorize requires n >= 1");
    let mut found: Vec<BigUint> = Vec::new();
    let mut rest = n.clone();

    for (i, &p) in small_primes().iter().enumerate() {
        if rest.is_one() {
            break;
        }
        if let Some(mut small) = rest.to_u64() {
            for &q in &small_primes()[i..] {
                let q = q as u64;
                if q * q > small {
                    break;
                }
                while small % q == 0 {
                    small /= q;
                    found.push(BigUint::from(q));
                }
            }
            rest = BigUint::from(small);
            if !rest.is_one() && small < (TRIAL_BOUND as u64).pow(2) {
                found.push(std::mem::take(&mut rest));
                rest = BigUint::one();
            }
            break;
        }
        let pb = BigUint::from(p);
        if &pb * &pb > rest {
            found.push(std::mem::take(&mut rest));
            rest = BigUint::one();
            break;
        }
        while rem_u32(&rest, p) == 0 {
            rest /= p;
            found.push(pb.clone());
        }
        // cheap early exit for the common case of a large prime cofactor
        if i == 200 && is_probable_prime(&rest, cfg) {
            found.push(std::mem::take(&mut rest));
            rest = BigUint::one();
            break;
        }
    }

    let mut leftover = BigUint::one();
    if !rest.is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut iterations = cfg.budget;
        let mut stack = vec![rest];
        while let Some(c) = stack.pop() {
            if c.is_one() {
                continue;
            }
            if is_probable_prime(&c, cfg) {
                found.push(c);
                continue;
            }
            let root = c.sqrt();
            if &root * &root == c {
                stack.push(root.clone());
                stack.push(root);
                continue;
            }
            match brent_rho(&c, &mut rng, &mut iterations) {
                Some(g) => {
                    let other = &c / &g;
                    stack.push(g);
                    stack.push(other);
                }
                None => leftover *= c,
            }
        }
    }

    found.sort();
    let mut factors: Vec<(BigUint, u32)> = Vec::new();
    for p in found {
        match factors.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => factors.push((p, 1)),
        }
    }
    FactoredInt {
        value: n.clone(),
        factors,
        complete: leftover.is_one(),
        cofactor: leftover,
    }
}

/// Factorization of a machine-sized integer; always complete in practice.
pub fn factor_u64(n: u64) -> Vec<(u64, u32)> {
    let f = factorize(&BigUint::from(n), &FactorConfig::default());
    debug_assert!(f.complete);
    f.factors
        .iter()
        .map(|(p, e)| (p.to_u64().expect("factor of a u64"), *e))
        .collect()
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut divs = vec![1u64];
    for (p, e) in factor_u64(n) {
        let len = divs.len();
        let mut pk = 1u64;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                divs.push(divs[i] * pk);
            }
        }
    }
    divs.sort_unstable();
    divs
}

pub fn moebius(n: u64) -> i8 {
    assert!(n >= 1);
    let f = factor_u64(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

pub fn euler_phi(n: u64) -> u64 {
    assert!(n >= 1);
    factor_u64(n)
        .into_iter()
        .fold(1, |acc, (p, e)| acc * (p - 1) * p.pow(e - 1))
}

/// Legendre symbol `(a | p)` by Euler's criterion.
pub fn legendre(a: &BigInt, p: &BigInt) -> Result<i8> {
    if p.sign() != Sign::Plus
        || p.is_even()
        || !is_probable_prime(p.magnitude(), &FactorConfig::default())
    {
        return Err(Error::InvalidInput(format!("{p} is not an odd prime")));
    }
    let r = a.mod_floor(p);
    if r.is_zero() {
        return Ok(0);
    }
    let e = (p - 1u32) >> 1;
    let t = r.modpow(&e, p);
    if t.is_one() {
        Ok(1)
    } else if t == p - 1u32 {
        Ok(-1)
    } else {
        Err(Error::Internal(format!("Euler criterion gave {t} mod {p}")))
    }
}

/// Largest `e` with `p^e | n`.
pub fn p_adic_val(n: &BigInt, p: &BigInt) -> Result<u32> {
    if n.is_zero() {
        return Err(Error::InvalidInput("valuation of zero".into()));
    }
    if *p < BigInt::from(2) {
        return Err(Error::InvalidInput(format!("{p} is not a prime")));
    }
    let mut m = n.abs();
    let mut e = 0;
    loop {
        let (q, r) = m.div_rem(p);
        if !r.is_zero() {
            return Ok(e);
        }
        m = q;
        e += 1;
    }
}

/// Greatest prime factor of `n / gcd(n, 3)`.
pub fn p_prime_excl3(n: u64) -> Result<u64> {
    if n < 4 {
        return Err(Error::InvalidInput(format!("P'(n) needs n >= 4, got {n}")));
    }
    let q = n / n.gcd(&3);
    if q == 1 {
        return Err(Error::InvalidInput(format!(
            "n / gcd(n, 3) = 1 for n = {n}"
        )));
    }
    Ok(factor_u64(q).last().map(|&(p, _)| p).expect("q > 1"))
}
