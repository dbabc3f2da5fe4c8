//! The Lehmer sequence attached to `γ = α`, `δ = −β`, its companion, the
//! cyclotomic numbers `φₙ`, and primitive divisor search.
//!
//! With this choice `γδ = 1`, `γ − δ = a₁` and `(γ + δ)² = D`, so
//! `(γ² − δ²)² = a₁²D`.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::intmath::{divisors, factorize, moebius, p_prime_excl3, FactorConfig};
use crate::quadring::{QuadInt, RingParams};

fn gamma(params: RingParams) -> QuadInt {
    params.alpha()
}

fn delta(params: RingParams) -> QuadInt {
    QuadInt::new(-params.a1(), 1, params)
}

fn lehmer_from_powers(params: RingParams, n: u64, gn: &QuadInt, dn: &QuadInt) -> Result<BigInt> {
    let diff = gn - dn;
    let g = gamma(params);
    let d = delta(params);
    let divisor = if n % 2 == 1 {
        &g - &d
    } else {
        &(&g * &g) - &(&d * &d)
    };
    diff.div_exact(&divisor)
        .and_then(|q| q.as_integer().cloned())
        .ok_or_else(|| Error::Internal(format!("ℓ_{n} is not an integer for a1 = {}", params.a1())))
}

/// `ℓₙ`, computed from `γⁿ − δⁿ` in `Z[α]` by exact division.
pub fn lehmer_term(params: RingParams, n: u64) -> Result<BigInt> {
    let gn = gamma(params).pow(n);
    let dn = delta(params).pow(n);
    lehmer_from_powers(params, n, &gn, &dn)
}

/// `ℓ₀, ℓ₁, …, ℓ_n`.
pub fn lehmer_terms(params: RingParams, n: u64) -> Result<Vec<BigInt>> {
    let g = gamma(params);
    let d = delta(params);
    let mut gk = QuadInt::one(params);
    let mut dk = QuadInt::one(params);
    let mut out = Vec::with_capacity(n as usize + 1);
    for k in 0..=n {
        out.push(lehmer_from_powers(params, k, &gk, &dk)?);
        gk = &gk * &g;
        dk = &dk * &d;
    }
    Ok(out)
}

/// `vₙ = (γⁿ + δⁿ)/(γ + δ)` for odd `n`.
pub fn lehmer_companion(params: RingParams, n: u64) -> Result<BigInt> {
    if n.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "companion term needs odd n, got {n}"
        )));
    }
    let g = gamma(params);
    let d = delta(params);
    let sum = &g.pow(n) + &d.pow(n);
    sum.div_exact(&(&g + &d))
        .and_then(|q| q.as_integer().cloned())
        .ok_or_else(|| Error::Internal(format!("v_{n} is not an integer for a1 = {}", params.a1())))
}

/// `φₙ = Π_{d|n} ℓ_d^{μ(n/d)}` for `n ≥ 3`.
pub fn cyclotomic_num(params: RingParams, n: u64) -> Result<BigInt> {
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "φ_n is an integer only for n >= 3, got {n}"
        )));
    }
    let terms = lehmer_terms(params, n)?;
    cyclotomic_from_terms(&terms, n)
}

fn cyclotomic_from_terms(terms: &[BigInt], n: u64) -> Result<BigInt> {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for d in divisors(n) {
        match moebius(n / d) {
            1 => num *= &terms[d as usize],
            -1 => den *= &terms[d as usize],
            _ => {}
        }
    }
    let (q, r) = num.div_rem(&den);
    if !r.is_zero() {
        return Err(Error::Internal(format!("φ_{n} is not an integer")));
    }
    Ok(q)
}

/// Primitive prime divisors of `ℓₙ`, read off the factorization of `φₙ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimitiveDivisorReport {
    pub n: u64,
    /// `(p, ν_p(ℓₙ))`, increasing in `p`.
    pub primitive: Vec<(BigUint, u32)>,
    pub phi_n: BigInt,
    /// The factored part of `|φₙ|` not accounted for by primitive divisors.
    pub residual: BigUint,
    /// Composite part of `|φₙ|` left unresolved by the factorization budget.
    pub unfactored: BigUint,
    pub complete: bool,
}

impl PrimitiveDivisorReport {
    pub fn odd_primitive(&self) -> impl Iterator<Item = &(BigUint, u32)> {
        self.primitive.iter().filter(|(p, _)| p.is_odd())
    }
}

/// Finds the primitive divisors of `ℓₙ`.
///
/// Every prime factor of `φₙ` is tested against the definition (it must
/// divide `ℓₙ` and none of `a₁²D, ℓ₁, …, ℓₙ₋₁`). For `n ≥ 5` the
/// non-primitive remainder of `|φₙ|` is then checked to be `1` or `P′(n)`
/// (a divisor of 6 when `n = 12`); any other outcome is an internal error.
pub fn primitive_divisors(
    params: RingParams,
    n: u64,
    cfg: &FactorConfig,
) -> Result<PrimitiveDivisorReport> {
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "primitive divisors need n >= 3, got {n}"
        )));
    }
    let terms = lehmer_terms(params, n)?;
    let phi_n = cyclotomic_from_terms(&terms, n)?;
    let ln = &terms[n as usize];
    let a1 = params.a1_big();
    let excluded = &a1 * &a1 * params.discriminant();

    let fac = factorize(phi_n.magnitude(), cfg);
    let mut primitive = Vec::new();
    let mut residual = BigUint::one();
    for (p, e) in &fac.factors {
        let pi = BigInt::from(p.clone());
        let is_primitive = (ln % &pi).is_zero()
            && !(&excluded % &pi).is_zero()
            && terms[1..n as usize].iter().all(|l| !(l % &pi).is_zero());
        if is_primitive {
            let v = crate::intmath::p_adic_val(ln, &pi)?;
            if v != *e {
                return Err(Error::Internal(format!(
                    "ν_{p}(ℓ_{n}) = {v} but ν_{p}(φ_{n}) = {e}"
                )));
            }
            primitive.push((p.clone(), v));
        } else {
            residual *= p.pow(*e);
        }
    }

    if n >= 5 && n != 6 {
        let allowed: Vec<u64> = if n == 12 {
            vec![1, 2, 3, 6]
        } else {
            vec![1, p_prime_excl3(n)?]
        };
        let ok = residual.to_u64().is_some_and(|r| allowed.contains(&r));
        if !ok {
            return Err(Error::Internal(format!(
                "non-primitive part {residual} of φ_{n} (a1 = {}) is not in {allowed:?}",
                params.a1()
            )));
        }
        if let Some((p, _)) = primitive.iter().find(|(p, _)| p.is_even()) {
            return Err(Error::Internal(format!(
                "even primitive divisor {p} of ℓ_{n}"
            )));
        }
    }

    Ok(PrimitiveDivisorReport {
        n,
        primitive,
        phi_n,
        residual,
        unfactored: fac.cofactor,
        complete: fac.complete,
    })
}

/// Outcome of a high primitive divisor search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HighPrimitive {
    /// An odd primitive `p` with `p^e > n`, `e = ν_p(ℓₙ)`: the largest one
    /// among the factors found.
    Found { p: BigUint, e: u32 },
    /// The factorization is complete and no such prime exists.
    None,
    /// None was found, but part of `φₙ` could not be factored.
    Unknown,
}

pub fn high_primitive_divisor(
    params: RingParams,
    n: u64,
    cfg: &FactorConfig,
) -> Result<HighPrimitive> {
    let report = primitive_divisors(params, n, cfg)?;
    Ok(high_from_report(&report))
}

pub fn high_from_report(report: &PrimitiveDivisorReport) -> HighPrimitive {
    let bound = BigUint::from(report.n);
    let best = report
        .odd_primitive()
        .filter(|(p, e)| p.pow(*e) > bound)
        .max_by(|a, b| a.0.cmp(&b.0));
    match best {
        Some((p, e)) => HighPrimitive::Found {
            p: p.clone(),
            e: *e,
        },
        None if report.complete => HighPrimitive::None,
        None => HighPrimitive::Unknown,
    }
}

/// Whether `ℓₙ` is guaranteed an odd primitive divisor; false exactly on
/// `a₁ = 1, n ∈ {3, 6, 10, 12}` and `a₁ = 3, n = 3`.
pub fn guarantee_odd_primdiv(a1: i64, n: u64) -> bool {
    !matches!((a1.abs(), n), (1, 3 | 6 | 10 | 12) | (3, 3))
}

/// Whether `ℓₙ` is guaranteed a high primitive divisor.
pub fn guarantee_high_primdiv(a1: i64, n: u64) -> bool {
    !matches!(
        (a1.abs(), n),
        (1, 3 | 4 | 6 | 8 | 10 | 12 | 14 | 18 | 24) | (2, 4 | 6 | 12) | (3, 3 | 6)
    )
}

/// `|φₙ| > (4a₁²)^{φ(n)/4}`, checked exactly as `φₙ⁴ > (4a₁²)^{φ(n)}`.
pub fn ward_bound_holds(params: RingParams, n: u64) -> Result<bool> {
    let phi = cyclotomic_num(params, n)?;
    let a1 = params.a1_big();
    let base: BigInt = BigInt::from(4) * &a1 * &a1;
    let totient = crate::intmath::euler_phi(n) as usize;
    Ok(num_traits::pow(phi.abs(), 4) > num_traits::pow(base, totient))
}
