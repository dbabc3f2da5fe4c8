//! Arithmetic in `Z[α]` with `α² = a₁α + 1`, and in its residue rings
//! modulo powers of odd primes.
//!
//! Prime ideals above odd `p ∤ D` are handled without ever leaving `Z[α]`:
//! in the split case the residue ring modulo `𝔭^v` is `Z/p^v` with `α`
//! mapped to a Hensel-lifted root of `X² − a₁X − 1`, and in the inert case it
//! is `(Z/p^v)[X]/(X² − a₁X − 1)` itself ([`ModQuad`]).

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intmath::{factorize, is_probable_prime, legendre, FactorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RingParams {
    a1: i64,
}

impl RingParams {
    pub fn new(a1: i64) -> Result<Self> {
        if a1 == 0 {
            return Err(Error::InvalidInput("a1 must be nonzero".into()));
        }
        // |a1| < sqrt(a1² + 4) < |a1| + 1 once |a1| >= 2, and D = 5 otherwise
        let params = Self { a1 };
        let d = params.discriminant();
        let r = d.sqrt();
        debug_assert!(&r * &r != d, "discriminant is a perfect square");
        Ok(params)
    }

    pub fn a1(&self) -> i64 {
        self.a1
    }

    pub fn a1_big(&self) -> BigInt {
        BigInt::from(self.a1)
    }

    /// `D = a₁² + 4`.
    pub fn discriminant(&self) -> BigInt {
        let a = self.a1_big();
        &a * &a + 4
    }

    pub fn alpha(&self) -> QuadInt {
        QuadInt::new(0, 1, *self)
    }

    /// `β = a₁ − α`, the conjugate root.
    pub fn beta(&self) -> QuadInt {
        QuadInt::new(self.a1, -1, *self)
    }

    /// `α − β = 2α − a₁`, a square root of `D`.
    pub fn sqrt_d(&self) -> QuadInt {
        QuadInt::new(-self.a1, 2, *self)
    }
}

/// `x + y·α` in `Z[α]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadInt {
    pub x: BigInt,
    pub y: BigInt,
    params: RingParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadOp {
    Add,
    Sub,
    Mul,
    Conj,
    Norm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuadValue {
    Element(QuadInt),
    Integer(BigInt),
}

impl QuadInt {
    pub fn new(x: impl Into<BigInt>, y: impl Into<BigInt>, params: RingParams) -> Self {
        Self {
            x: x.into(),
            y: y.into(),
            params,
        }
    }

    pub fn from_int(x: impl Into<BigInt>, params: RingParams) -> Self {
        Self::new(x, 0, params)
    }

    pub fn zero(params: RingParams) -> Self {
        Self::new(0, 0, params)
    }

    pub fn one(params: RingParams) -> Self {
        Self::new(1, 0, params)
    }

    pub fn params(&self) -> RingParams {
        self.params
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    /// The rational integer this element equals, if it lies in `Z`.
    pub fn as_integer(&self) -> Option<&BigInt> {
        self.y.is_zero().then_some(&self.x)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.params != other.params {
            return Err(Error::InvalidInput(format!(
                "operands live in different rings (a1 = {} vs {})",
                self.params.a1, other.params.a1
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::new(
            &self.x + &other.x,
            &self.y + &other.y,
            self.params,
        ))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::new(
            &self.x - &other.x,
            &self.y - &other.y,
            self.params,
        ))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let a1 = self.params.a1_big();
        let yy = &self.y * &other.y;
        let x = &self.x * &other.x + &yy;
        let y = &self.x * &other.y + &self.y * &other.x + a1 * yy;
        Ok(Self::new(x, y, self.params))
    }

    /// `α ↦ a₁ − α`.
    pub fn conj(&self) -> Self {
        Self::new(
            &self.x + self.params.a1_big() * &self.y,
            -&self.y,
            self.params,
        )
    }

    /// `x² + a₁xy − y²`.
    pub fn norm(&self) -> BigInt {
        &self.x * &self.x + self.params.a1_big() * &self.x * &self.y - &self.y * &self.y
    }

    /// The trace `2x + a₁y`.
    pub fn trace(&self) -> BigInt {
        BigInt::from(2) * &self.x + self.params.a1_big() * &self.y
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        Self::new(&self.x * k, &self.y * k, self.params)
    }

    pub fn neg(&self) -> Self {
        Self::new(-&self.x, -&self.y, self.params)
    }

    /// Exact quotient `self / other`, or `None` when it is not in `Z[α]`.
    pub fn div_exact(&self, other: &Self) -> Option<Self> {
        if self.params != other.params || other.is_zero() {
            return None;
        }
        let n = other.norm();
        let t = self.try_mul(&other.conj()).ok()?;
        let (qx, rx) = t.x.div_rem(&n);
        let (qy, ry) = t.y.div_rem(&n);
        (rx.is_zero() && ry.is_zero()).then(|| Self::new(qx, qy, self.params))
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.params);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Reduction into the residue ring modulo `m`.
    pub fn reduce(&self, modulus: &BigInt) -> ModQuad {
        ModQuad::new(self.x.clone(), self.y.clone(), modulus.clone(), self.params)
    }
}

impl std::ops::Mul for &QuadInt {
    type Output = QuadInt;
    fn mul(self, rhs: &QuadInt) -> QuadInt {
        self.try_mul(rhs).expect("mismatched ring parameters")
    }
}

impl std::ops::Add for &QuadInt {
    type Output = QuadInt;
    fn add(self, rhs: &QuadInt) -> QuadInt {
        self.try_add(rhs).expect("mismatched ring parameters")
    }
}

impl std::ops::Sub for &QuadInt {
    type Output = QuadInt;
    fn sub(self, rhs: &QuadInt) -> QuadInt {
        self.try_sub(rhs).expect("mismatched ring parameters")
    }
}

impl fmt::Display for QuadInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.y.sign() {
            Sign::NoSign => write!(f, "{}", self.x),
            Sign::Plus => write!(f, "{} + {}α", self.x, self.y),
            Sign::Minus => write!(f, "{} - {}α", self.x, -&self.y),
        }
    }
}

/// One of add / sub / mul / conj / norm on `Z[α]`.
pub fn qi_arith(op: QuadOp, lhs: &QuadInt, rhs: Option<&QuadInt>) -> Result<QuadValue> {
    let need = || rhs.ok_or_else(|| Error::InvalidInput(format!("{op:?} needs two operands")));
    Ok(match op {
        QuadOp::Add => QuadValue::Element(lhs.try_add(need()?)?),
        QuadOp::Sub => QuadValue::Element(lhs.try_sub(need()?)?),
        QuadOp::Mul => QuadValue::Element(lhs.try_mul(need()?)?),
        QuadOp::Conj => QuadValue::Element(lhs.conj()),
        QuadOp::Norm => QuadValue::Integer(lhs.norm()),
    })
}

/// `αⁿ` for any integer `n`, using `α⁻¹ = α − a₁`.
pub fn alpha_pow(params: RingParams, n: i64) -> QuadInt {
    if n >= 0 {
        params.alpha().pow(n as u64)
    } else {
        QuadInt::new(-params.a1, 1, params).pow(n.unsigned_abs())
    }
}

/// `u + v·ᾱ` in `(Z/m)[X]/(X² − a₁X − 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModQuad {
    pub u: BigInt,
    pub v: BigInt,
    modulus: BigInt,
    params: RingParams,
}

impl ModQuad {
    pub fn new(u: BigInt, v: BigInt, modulus: BigInt, params: RingParams) -> Self {
        Self {
            u: u.mod_floor(&modulus),
            v: v.mod_floor(&modulus),
            modulus,
            params,
        }
    }

    pub fn from_int(u: impl Into<BigInt>, modulus: &BigInt, params: RingParams) -> Self {
        Self::new(u.into(), BigInt::zero(), modulus.clone(), params)
    }

    pub fn alpha(modulus: &BigInt, params: RingParams) -> Self {
        Self::new(BigInt::zero(), BigInt::one(), modulus.clone(), params)
    }

    pub fn modulus(&self) -> &BigInt {
        &self.modulus
    }

    pub fn is_one(&self) -> bool {
        self.v.is_zero() && (self.u.is_one() || self.modulus.is_one())
    }

    pub fn is_zero(&self) -> bool {
        self.u.is_zero() && self.v.is_zero()
    }

    /// The residue in `Z/m` this element equals, if it lies in the prime
    /// subring.
    pub fn as_scalar(&self) -> Option<&BigInt> {
        self.v.is_zero().then_some(&self.u)
    }

    fn same(&self, u: BigInt, v: BigInt) -> Self {
        Self::new(u, v, self.modulus.clone(), self.params)
    }

    pub fn add(&self, o: &Self) -> Self {
        self.same(&self.u + &o.u, &self.v + &o.v)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.same(&self.u - &o.u, &self.v - &o.v)
    }

    pub fn neg(&self) -> Self {
        self.same(-&self.u, -&self.v)
    }

    pub fn mul(&self, o: &Self) -> Self {
        debug_assert_eq!(self.modulus, o.modulus);
        let vv = &self.v * &o.v;
        let u = &self.u * &o.u + &vv;
        let v = &self.u * &o.v + &self.v * &o.u + self.params.a1_big() * vv;
        self.same(u, v)
    }

    pub fn conj(&self) -> Self {
        self.same(&self.u + self.params.a1_big() * &self.v, -&self.v)
    }

    pub fn norm(&self) -> BigInt {
        (&self.u * &self.u + self.params.a1_big() * &self.u * &self.v - &self.v * &self.v)
            .mod_floor(&self.modulus)
    }

    pub fn pow(&self, e: &BigUint) -> Self {
        let mut acc = self.same(BigInt::one(), BigInt::zero());
        let mut base = self.clone();
        let bits = e.bits();
        for i in 0..bits {
            if e.bit(i) {
                acc = acc.mul(&base);
            }
            if i + 1 < bits {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Inverse, present iff the norm is a unit modulo `m`.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.norm();
        let inv = mod_inverse(&n, &self.modulus)?;
        let c = self.conj();
        Some(self.same(&c.u * &inv, &c.v * &inv))
    }
}

impl fmt::Display for ModQuad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}α (mod {})", self.u, self.v, self.modulus)
    }
}

pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.mod_floor(m).extended_gcd(m);
    e.gcd.is_one().then(|| e.x.mod_floor(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Split,
    Inert,
    Ramified,
}

/// A power `𝔭^v` of a prime ideal above an odd prime `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdealDesc {
    pub p: BigInt,
    pub v: u32,
    pub kind: SplitKind,
    /// The image of `α` modulo `p^v`, present iff `kind` is split.
    pub root: Option<BigInt>,
}

impl IdealDesc {
    pub fn new(params: RingParams, p: &BigInt, v: u32) -> Result<Self> {
        let kind = split_type(params, p)?;
        let root = match kind {
            SplitKind::Split => Some(lift_root(params, p, v)?),
            _ => None,
        };
        Ok(Self {
            p: p.clone(),
            v,
            kind,
            root,
        })
    }

    pub fn modulus(&self) -> BigInt {
        num_traits::pow(self.p.clone(), self.v as usize)
    }
}

fn check_odd_prime(p: &BigInt) -> Result<()> {
    if p.sign() != Sign::Plus
        || p.is_even()
        || !is_probable_prime(p.magnitude(), &FactorConfig::default())
    {
        return Err(Error::InvalidInput(format!("{p} is not an odd prime")));
    }
    Ok(())
}

pub fn split_type(params: RingParams, p: &BigInt) -> Result<SplitKind> {
    check_odd_prime(p)?;
    Ok(match legendre(&params.discriminant(), p)? {
        1 => SplitKind::Split,
        -1 => SplitKind::Inert,
        _ => SplitKind::Ramified,
    })
}

/// Square root of a quadratic residue modulo an odd prime (Tonelli-Shanks).
pub fn sqrt_mod_prime(a: &BigInt, p: &BigInt) -> Option<BigInt> {
    let a = a.mod_floor(p);
    if a.is_zero() {
        return Some(a);
    }
    let half = (p - 1u32) >> 1;
    if !a.modpow(&half, p).is_one() {
        return None;
    }
    let pm1 = p - 1u32;
    let s = pm1.trailing_zeros().unwrap_or(0);
    let q = &pm1 >> s;
    if s == 1 {
        return Some(a.modpow(&((p + 1u32) >> 2), p));
    }
    let mut z = BigInt::from(2);
    while z.modpow(&half, p).is_one() {
        z += 1;
    }
    let mut m = s;
    let mut c = z.modpow(&q, p);
    let mut t = a.modpow(&q, p);
    let mut r = a.modpow(&((&q + 1u32) >> 1), p);
    while !t.is_one() {
        let mut i = 0;
        let mut t2 = t.clone();
        while !t2.is_one() {
            t2 = &t2 * &t2 % p;
            i += 1;
        }
        let b = c.modpow(&(BigInt::one() << (m - i - 1)), p);
        m = i;
        c = &b * &b % p;
        t = t * &c % p;
        r = r * b % p;
    }
    Some(r)
}

/// The smaller root of `X² − a₁X − 1` modulo `p^v`, Hensel-lifted from a
/// root modulo `p`. The other root is `a₁ − root`.
pub fn lift_root(params: RingParams, p: &BigInt, v: u32) -> Result<BigInt> {
    if v == 0 {
        return Err(Error::InvalidInput("exponent must be at least 1".into()));
    }
    if split_type(params, p)? != SplitKind::Split {
        return Err(Error::Precondition(format!(
            "X^2 - {}X - 1 does not split into distinct roots modulo {p}",
            params.a1
        )));
    }
    let a1 = params.a1_big();
    let s = sqrt_mod_prime(&params.discriminant(), p).expect("D is a residue");
    let inv2 = mod_inverse(&BigInt::from(2), p).expect("p is odd");
    let mut r = ((&a1 + s) * inv2).mod_floor(p);

    let pv = num_traits::pow(p.clone(), v as usize);
    let f = |x: &BigInt| -> BigInt { x * x - &a1 * x - 1 };
    let mut precision = 1u32;
    while precision < v {
        precision = (2 * precision).min(v);
        let pk = num_traits::pow(p.clone(), precision as usize);
        let deriv = (BigInt::from(2) * &r - &a1).mod_floor(&pk);
        let inv = mod_inverse(&deriv, &pk).expect("p does not divide D");
        r = (&r - f(&r) * inv).mod_floor(&pk);
    }
    debug_assert!(f(&r).mod_floor(&pv).is_zero());
    let other = (&a1 - &r).mod_floor(&pv);
    Ok(r.min(other))
}

/// Multiplicative order by descent from a known exponent: strip each prime
/// from the exponent while the element still becomes one.
pub fn order_by_descent(
    exponent: &[(BigUint, u32)],
    mut is_identity_at: impl FnMut(&BigUint) -> bool,
) -> BigUint {
    let mut n: BigUint = exponent
        .iter()
        .fold(BigUint::one(), |acc, (q, e)| acc * q.pow(*e));
    for (q, e) in exponent {
        for _ in 0..*e {
            let (cand, r) = n.div_rem(q);
            if !r.is_zero() || !is_identity_at(&cand) {
                break;
            }
            n = cand;
        }
    }
    n
}

fn merge_factors(mut a: Vec<(BigUint, u32)>, b: &[(BigUint, u32)]) -> Vec<(BigUint, u32)> {
    for (q, e) in b {
        match a.iter_mut().find(|(r, _)| r == q) {
            Some((_, f)) => *f += e,
            None => a.push((q.clone(), *e)),
        }
    }
    a.sort();
    a
}

/// Factored group exponent of the units modulo `𝔭^v`: `p^{v−1}(p − 1)` when
/// split, `p^{v−1}(p² − 1)` when inert.
fn group_exponent(
    p: &BigInt,
    v: u32,
    kind: SplitKind,
    cfg: &FactorConfig,
) -> Result<Vec<(BigUint, u32)>> {
    let pu = p.magnitude();
    let budget_err = |n: &BigUint| Error::BudgetExceeded {
        index: None,
        detail: format!("factoring {n} for an order computation"),
    };
    let minus = factorize(&(pu - 1u32), cfg);
    if !minus.complete {
        return Err(budget_err(&minus.value));
    }
    let mut out = minus.factors;
    if kind == SplitKind::Inert {
        let plus = factorize(&(pu + 1u32), cfg);
        if !plus.complete {
            return Err(budget_err(&plus.value));
        }
        out = merge_factors(out, &plus.factors);
    }
    if v > 1 {
        out = merge_factors(out, &[(pu.clone(), v - 1)]);
    }
    Ok(out)
}

fn check_order_preconditions(params: RingParams, p: &BigInt, v: u32) -> Result<SplitKind> {
    if v == 0 {
        return Err(Error::InvalidInput("exponent must be at least 1".into()));
    }
    let kind = split_type(params, p)?;
    if kind == SplitKind::Ramified || (params.a1_big() % p).is_zero() {
        return Err(Error::Precondition(format!(
            "{p} divides 2·a1·D for a1 = {}",
            params.a1
        )));
    }
    Ok(kind)
}

/// Order of an integer residue modulo `m` given a factored multiple of it.
fn scalar_order(g: &BigInt, m: &BigInt, exponent: &[(BigUint, u32)]) -> BigUint {
    order_by_descent(exponent, |k| g.modpow(&BigInt::from(k.clone()), m).is_one())
}

fn quad_order(g: &ModQuad, exponent: &[(BigUint, u32)]) -> BigUint {
    order_by_descent(exponent, |k| g.pow(k).is_one())
}

/// `ord_{𝔭^v}(α²)`.
pub fn ord_alpha2(params: RingParams, p: &BigInt, v: u32, cfg: &FactorConfig) -> Result<BigUint> {
    let kind = check_order_preconditions(params, p, v)?;
    let pv = num_traits::pow(p.clone(), v as usize);
    let exponent = group_exponent(p, v, kind, cfg)?;
    Ok(match kind {
        SplitKind::Split => {
            let a = lift_root(params, p, v)?;
            scalar_order(&(&a * &a % &pv), &pv, &exponent)
        }
        _ => {
            let a = ModQuad::alpha(&pv, params);
            quad_order(&a.mul(&a), &exponent)
        }
    })
}

/// Orders of `α`, `β` and `α²` modulo `𝔭^v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderTriple {
    pub alpha: BigUint,
    pub beta: BigUint,
    pub alpha2: BigUint,
    /// Split case: the residue `α` is mapped to. It is chosen as the root of
    /// larger order, so that `alpha = 2·alpha2` always.
    pub alpha_root: Option<BigInt>,
}

pub fn ord_alpha_beta(
    params: RingParams,
    p: &BigInt,
    v: u32,
    cfg: &FactorConfig,
) -> Result<OrderTriple> {
    let kind = check_order_preconditions(params, p, v)?;
    let pv = num_traits::pow(p.clone(), v as usize);
    let exponent = group_exponent(p, v, kind, cfg)?;
    match kind {
        SplitKind::Split => {
            let r1 = lift_root(params, p, v)?;
            let r2 = (params.a1_big() - &r1).mod_floor(&pv);
            let o1 = scalar_order(&r1, &pv, &exponent);
            let o2 = scalar_order(&r2, &pv, &exponent);
            let alpha2 = scalar_order(&(&r1 * &r1 % &pv), &pv, &exponent);
            let (alpha, beta, root) = if o2 > o1 { (o2, o1, r2) } else { (o1, o2, r1) };
            Ok(OrderTriple {
                alpha,
                beta,
                alpha2,
                alpha_root: Some(root),
            })
        }
        _ => {
            let a = ModQuad::alpha(&pv, params);
            let b = ModQuad::from_int(params.a1, &pv, params).sub(&a);
            Ok(OrderTriple {
                alpha: quad_order(&a, &exponent),
                beta: quad_order(&b, &exponent),
                alpha2: quad_order(&a.mul(&a), &exponent),
                alpha_root: None,
            })
        }
    }
}
