//! Construction of a recurrence and modulus attaining exactly `n` residues.
//!
//! Dispatch for `a₁ ≥ 1` (negative `a₁` goes through [`reverse_instance`]):
//!
//! * `n ∈ {1, 2}`: tiny moduli;
//! * a row of [`TABLE`] when one matches;
//! * `n = 4`: [`construct_n4`];
//! * odd `n`: a root of order `n` modulo an odd primitive divisor of `ℓₙ`;
//! * `n = 2n′` with `n′` odd: a root of order `2n′` modulo a primitive
//!   divisor of `ℓ_{n′}`;
//! * `n = 2n′` with `n′` even: [`construct_even`].
//!
//! Every certificate is re-simulated before it is returned.
//!
//! [`reverse_instance`]: crate::recurrence::reverse_instance

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intmath::{legendre, p_adic_val, FactorConfig};
use crate::lehmer::{high_from_report, lehmer_terms, primitive_divisors, HighPrimitive};
use crate::quadring::{lift_root, split_type, ModQuad, RingParams, SplitKind};
use crate::recurrence::{
    crt_combine, orbit_stats, reverse_from_stats, OrbitStats, RecurrenceInstance,
};

pub const SCHEMA_VERSION: u32 = 1;

/// One row of the table of special cases: `(a₁, x₀, x₁, m, τ, ρ, nonzero)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableRow {
    pub row: u8,
    pub a1: i64,
    pub x0: i64,
    pub x1: i64,
    pub m: i64,
    pub tau: u64,
    pub rho: u64,
    pub nonzero: bool,
}

#[allow(clippy::too_many_arguments)]
const fn row(
    row: u8,
    a1: i64,
    x0: i64,
    x1: i64,
    m: i64,
    tau: u64,
    rho: u64,
    nonzero: bool,
) -> TableRow {
    TableRow {
        row,
        a1,
        x0,
        x1,
        m,
        tau,
        rho,
        nonzero,
    }
}

pub const TABLE: [TableRow; 19] = [
    row(1, 1, 0, 1, 3, 8, 3, false),
    row(2, 1, 1, 3, 5, 4, 4, true),
    row(3, 1, 1, 3, 8, 12, 6, true),
    row(4, 1, 1, 3, 10, 12, 8, true),
    row(5, 1, 1, 3, 13, 28, 12, true),
    row(6, 1, 1, 3, 17, 36, 16, true),
    row(7, 1, 1, 3, 28, 48, 20, true),
    row(8, 1, 1, 3, 26, 84, 24, true),
    row(9, 1, 1, 3, 56, 48, 28, true),
    row(10, 1, 1, 3, 52, 84, 36, true),
    row(11, 1, 1, 3, 78, 168, 48, true),
    row(12, 2, 1, 1, 4, 4, 2, true),
    row(13, 2, 1, 1, 5, 12, 4, true),
    row(14, 2, 1, 1, 28, 12, 8, true),
    row(15, 2, 1, 1, 13, 28, 12, true),
    row(16, 2, 1, 1, 39, 56, 24, true),
    row(17, 3, 1, 1, 9, 6, 3, true),
    row(18, 3, 1, 1, 8, 12, 6, true),
    row(19, 3, 1, 1, 17, 16, 12, true),
];

impl TableRow {
    pub fn instance(&self) -> RecurrenceInstance {
        RecurrenceInstance::new(self.a1, self.x0, self.x1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum N4Branch {
    Odd,
    Even,
    Table,
}

/// How a certificate was obtained, with the parameters needed to replay it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum ConstructionPath {
    /// `m = 1`.
    Trivial1,
    /// `m = 2` with `x₀ ≢ x₁`.
    Parity2,
    /// `ρ ∈ {1, 2}` with nonzero residues and `m = a₁`.
    NonzeroSmall {
        #[serde(with = "crate::decimal")]
        m: BigInt,
    },
    TableRow {
        row: u8,
    },
    N4 {
        branch: N4Branch,
        row: Option<u8>,
    },
    /// `x = (1, root)` modulo a split primitive divisor `p` of `ℓₙ`, where
    /// `root` has multiplicative order `order ∈ {n, 2n}`.
    OddPrimitive {
        n: u64,
        #[serde(with = "crate::decimal")]
        p: BigInt,
        #[serde(with = "crate::decimal")]
        root: BigInt,
        order: u64,
    },
    /// Even `n` whose high primitive divisor `p` splits: as above with
    /// order `2n`.
    EvenSplit {
        n: u64,
        #[serde(with = "crate::decimal")]
        p: BigInt,
        #[serde(with = "crate::decimal")]
        root: BigInt,
    },
    /// Even `n` whose high primitive divisor `p` is inert: `(1, c)` modulo
    /// `p^v` glued by CRT to a second recurrence modulo `m₂`.
    EvenInertCombine {
        n: u64,
        #[serde(with = "crate::decimal")]
        p: BigInt,
        v: u32,
        #[serde(with = "crate::decimal")]
        c: BigInt,
        #[serde(with = "crate::decimal")]
        m2: BigInt,
        d: u64,
    },
    /// Reversal of a certificate for `−a₁`.
    Reversed {
        inner: Box<ConstructionPath>,
    },
}

/// A recurrence and modulus attaining exactly `target` residues.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema: u32,
    pub a1: i64,
    pub target: u64,
    #[serde(with = "crate::decimal")]
    pub m: BigInt,
    #[serde(with = "crate::decimal")]
    pub x0: BigInt,
    #[serde(with = "crate::decimal")]
    pub x1: BigInt,
    pub tau: u64,
    #[serde(with = "crate::decimal::vec")]
    pub residues: Vec<BigInt>,
    pub nonzero: bool,
    pub path: ConstructionPath,
    pub verified: bool,
}

impl Certificate {
    pub fn instance(&self) -> RecurrenceInstance {
        RecurrenceInstance::new(self.a1, self.x0.clone(), self.x1.clone())
    }

    /// Re-simulates the orbit and checks every recorded field.
    pub fn verify(&self) -> Result<OrbitStats> {
        let stats = orbit_stats(&self.instance(), &self.m, &[])?;
        let residues: Vec<BigInt> = stats.residues.iter().cloned().collect();
        if stats.rho as u64 != self.target
            || stats.tau != self.tau
            || stats.nonzero != self.nonzero
            || residues != self.residues
        {
            return Err(Error::VerificationMismatch(format!(
                "a1 = {}, target {}: simulated (τ, ρ, nonzero) = ({}, {}, {}) modulo {}, recorded ({}, {}, {})",
                self.a1, self.target, stats.tau, stats.rho, stats.nonzero, self.m, self.tau,
                self.residues.len(), self.nonzero
            )));
        }
        Ok(stats)
    }
}

fn certify(
    a1: i64,
    target: u64,
    inst: RecurrenceInstance,
    m: BigInt,
    path: ConstructionPath,
) -> Result<Certificate> {
    debug_assert_eq!(inst.a1, a1);
    let stats = orbit_stats(&inst, &m, &[])?;
    let m_display = m.clone();
    let cert = Certificate {
        schema: SCHEMA_VERSION,
        a1,
        target,
        x0: inst.x0.mod_floor(&m),
        x1: inst.x1.mod_floor(&m),
        m,
        tau: stats.tau,
        residues: stats.residues.into_iter().collect(),
        nonzero: stats.nonzero,
        path,
        verified: false,
    };
    if stats.rho as u64 != target {
        return Err(Error::VerificationMismatch(format!(
            "a1 = {a1}: construction for {target} residues attains {} modulo {m_display} ({:?})",
            stats.rho, cert.path
        )));
    }
    Ok(Certificate {
        verified: true,
        ..cert
    })
}

fn big(n: i64) -> BigInt {
    BigInt::from(n)
}

/// The table row for `(a₁, n)`, if any, re-verified by simulation.
pub fn table_lookup(a1: i64, n: u64, require_nonzero: bool) -> Result<Option<Certificate>> {
    let Some(r) = TABLE
        .iter()
        .find(|r| r.a1 == a1 && r.rho == n && (r.nonzero || !require_nonzero))
    else {
        return Ok(None);
    };
    let cert = certify(
        a1,
        n,
        r.instance(),
        big(r.m),
        ConstructionPath::TableRow { row: r.row },
    )?;
    if cert.tau != r.tau || cert.nonzero != r.nonzero {
        return Err(Error::VerificationMismatch(format!(
            "table row {} simulates to τ = {}, nonzero = {}",
            r.row, cert.tau, cert.nonzero
        )));
    }
    Ok(Some(cert))
}

/// Four nonzero residues.
pub fn construct_n4(a1: i64) -> Result<Certificate> {
    if a1 < 1 {
        return Err(Error::InvalidInput(format!(
            "construct_n4 needs a1 >= 1, got {a1}"
        )));
    }
    let (inst, branch, row) = match a1 {
        1 | 2 => {
            let r = TABLE
                .iter()
                .find(|r| r.a1 == a1 && r.rho == 4)
                .expect("rows 2 and 13");
            (r.instance(), N4Branch::Table, Some(r.row))
        }
        // 1, 2, 1, a₁+2, a₁+1, a₁+2, … modulo 2a₁
        _ if a1 % 2 == 1 => (RecurrenceInstance::new(a1, 1, 2), N4Branch::Odd, None),
        // 1, 3, a₁+1, a₁+3, … modulo 2a₁
        _ => (RecurrenceInstance::new(a1, 1, 3), N4Branch::Even, None),
    };
    let m = match row {
        Some(r) => big(TABLE[r as usize - 1].m),
        None => big(2 * a1),
    };
    let cert = certify(a1, 4, inst, m, ConstructionPath::N4 { branch, row })?;
    if !cert.nonzero {
        return Err(Error::VerificationMismatch(format!(
            "n = 4 construction for a1 = {a1} hits zero"
        )));
    }
    Ok(cert)
}

fn positive_params(a1: i64) -> Result<RingParams> {
    if a1 < 1 {
        return Err(Error::InvalidInput(format!(
            "constructions need a1 >= 1, got {a1}"
        )));
    }
    RingParams::new(a1)
}

/// `(1, root)` modulo the split prime `p`, with `root` a root of
/// `X² − a₁X − 1` satisfying `rootⁿ ≡ −1` (order `2n`) when `doubled`, and
/// `rootⁿ ≡ 1` (order `n`) otherwise.
fn split_root_of_order(
    params: RingParams,
    p: &BigInt,
    n: u64,
    doubled: bool,
) -> Result<(BigInt, u64)> {
    let r1 = lift_root(params, p, 1)?;
    let r2 = (params.a1_big() - &r1).mod_floor(p);
    let e = BigInt::from(n);
    let want = if doubled { p - 1u32 } else { BigInt::one() };
    let mut candidates = [r1, r2];
    candidates.sort();
    let root = candidates
        .into_iter()
        .find(|r| r.modpow(&e, p) == want)
        .ok_or_else(|| {
            Error::Precondition(format!(
                "no root of order {} modulo {p} for a1 = {}",
                if doubled { 2 * n } else { n },
                params.a1()
            ))
        })?;
    Ok((root, if doubled { 2 * n } else { n }))
}

/// `ρ = n` (or `2n` when `doubled`) modulo an odd split primitive divisor
/// of `ℓₙ`; the smallest such divisor is used.
pub fn construct_odd_primitive(
    a1: i64,
    n: u64,
    doubled: bool,
    cfg: &FactorConfig,
) -> Result<Certificate> {
    let params = positive_params(a1)?;
    if n < 3 {
        return Err(Error::InvalidInput(format!("needs n >= 3, got {n}")));
    }
    if !doubled && n.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "order-n construction needs odd n, got {n}"
        )));
    }
    let report = primitive_divisors(params, n, cfg)?;
    let d = params.discriminant();
    let mut chosen = None;
    for (p, _) in report.odd_primitive() {
        let p = BigInt::from(p.clone());
        let symbol = legendre(&d, &p)?;
        if n % 2 == 1 && symbol != 1 {
            return Err(Error::Internal(format!(
                "odd prime factor {p} of ℓ_{n} has (D | p) = {symbol} for a1 = {a1}"
            )));
        }
        if symbol == 1 {
            chosen = Some(p);
            break;
        }
    }
    let Some(p) = chosen else {
        return Err(if report.complete {
            Error::Precondition(format!(
                "ℓ_{n} has no odd split primitive divisor for a1 = {a1}"
            ))
        } else {
            Error::BudgetExceeded {
                index: Some(n),
                detail: format!("φ_{n} for a1 = {a1} not fully factored"),
            }
        });
    };
    let (root, order) = split_root_of_order(params, &p, n, doubled)?;
    let target = order;
    let inst = RecurrenceInstance::new(a1, 1, root.clone());
    let cert = certify(
        a1,
        target,
        inst,
        p.clone(),
        ConstructionPath::OddPrimitive { n, p, root, order },
    )?;
    nonzero_or_mismatch(cert)
}

fn nonzero_or_mismatch(cert: Certificate) -> Result<Certificate> {
    if !cert.nonzero || cert.tau != cert.target {
        return Err(Error::VerificationMismatch(format!(
            "a1 = {}, target {}: expected a nonzero orbit with τ = ρ, got τ = {}, nonzero = {}",
            cert.a1, cert.target, cert.tau, cert.nonzero
        )));
    }
    Ok(cert)
}

/// The values `(β − α^{2k+1})/(1 − α^{2k})` modulo `𝔭^v`, `0 ≤ k < n`, that
/// lie in `Z/p^v` (terms with `1 − α^{2k}` not invertible are skipped).
pub fn parity_excluded(params: RingParams, modulus: &BigInt, n: u64) -> BTreeSet<BigInt> {
    let alpha = ModQuad::alpha(modulus, params);
    let alpha2 = alpha.mul(&alpha);
    let one = ModQuad::from_int(1, modulus, params);
    let beta = ModQuad::from_int(params.a1(), modulus, params).sub(&alpha);
    let mut w = one.clone();
    let mut out = BTreeSet::new();
    for _ in 0..n {
        if let Some(inv) = one.sub(&w).inverse() {
            let value = beta.sub(&alpha.mul(&w)).mul(&inv);
            if let Some(s) = value.as_scalar() {
                out.insert(s.clone());
            }
        }
        w = w.mul(&alpha2);
    }
    out
}

/// The smallest `c ∈ [0, p^v)` avoiding [`parity_excluded`], for an inert
/// high primitive divisor `p` of `ℓₙ` with `p^v ∥ ℓₙ` and `n` even.
pub fn choose_parity_c(a1: i64, p: &BigInt, v: u32, n: u64) -> Result<BigInt> {
    let params = positive_params(a1)?;
    if n < 4 || n % 2 == 1 {
        return Err(Error::Precondition(format!("needs even n >= 4, got {n}")));
    }
    if split_type(params, p)? != SplitKind::Inert {
        return Err(Error::Precondition(format!(
            "{p} is not inert for a1 = {a1}"
        )));
    }
    let terms = lehmer_terms(params, n)?;
    if terms[1..n as usize].iter().any(|l| (l % p).is_zero()) {
        return Err(Error::Precondition(format!(
            "{p} is not a primitive divisor of ℓ_{n}"
        )));
    }
    if p_adic_val(&terms[n as usize], p)? != v {
        return Err(Error::Precondition(format!(
            "{p}^{v} does not exactly divide ℓ_{n}"
        )));
    }
    let modulus = num_traits::pow(p.clone(), v as usize);
    if modulus <= BigInt::from(n) {
        return Err(Error::Precondition(format!(
            "{p}^{v} <= {n}: not a high primitive divisor"
        )));
    }
    let excluded = parity_excluded(params, &modulus, n);
    let mut c = BigInt::zero();
    while excluded.contains(&c) {
        c += 1;
    }
    Ok(c)
}

/// `2n` nonzero residues for even `n ≥ 4` with a high primitive divisor.
pub fn construct_even(a1: i64, n: u64, cfg: &FactorConfig) -> Result<Certificate> {
    let params = positive_params(a1)?;
    if n < 4 || n % 2 == 1 {
        return Err(Error::InvalidInput(format!(
            "construct_even needs even n >= 4, got {n}"
        )));
    }
    let report = primitive_divisors(params, n, cfg)?;
    let (p, v) = match high_from_report(&report) {
        HighPrimitive::Found { p, e } => (BigInt::from(p), e),
        HighPrimitive::None => {
            return Err(Error::Precondition(format!(
                "ℓ_{n} has no high primitive divisor for a1 = {a1}"
            )))
        }
        HighPrimitive::Unknown => {
            return Err(Error::BudgetExceeded {
                index: Some(n),
                detail: format!("φ_{n} for a1 = {a1} not fully factored"),
            })
        }
    };
    let target = 2 * n;

    if legendre(&params.discriminant(), &p)? == 1 {
        let (root, _) = split_root_of_order(params, &p, n, true)?;
        let inst = RecurrenceInstance::new(a1, 1, root.clone());
        let cert = certify(
            a1,
            target,
            inst,
            p.clone(),
            ConstructionPath::EvenSplit { n, p, root },
        )?;
        return nonzero_or_mismatch(cert);
    }

    let m1 = num_traits::pow(p.clone(), v as usize);
    let c = choose_parity_c(a1, &p, v, n)?;
    let x1 = RecurrenceInstance::new(a1, 1, c.clone());
    let s1 = orbit_stats(&x1, &m1, &[2, 4])?;
    let parity_ok = s1.tau == 2 * n
        && s1.nonzero
        && (0..2).all(|r| s1.class_rho[&(2, r)] as u64 == n)
        && (0..4).all(|r| s1.class_rho[&(4, r)] as u64 == n / 2);
    if !parity_ok {
        return Err(Error::VerificationMismatch(format!(
            "parity recurrence (1, {c}) modulo {m1} for a1 = {a1}, n = {n}: τ = {}, classes {:?}",
            s1.tau, s1.class_rho
        )));
    }

    let (x2, m2) = if a1 == 1 {
        let r = &TABLE[1];
        (r.instance(), big(r.m))
    } else {
        (RecurrenceInstance::new(a1, 0, 1), big(a1))
    };
    let combined = crt_combine(&x1, &m1, &x2, &m2)?;
    if combined.predicted_rho != target {
        return Err(Error::VerificationMismatch(format!(
            "combination predicts {} residues, expected {target}",
            combined.predicted_rho
        )));
    }
    let path = ConstructionPath::EvenInertCombine {
        n,
        p,
        v,
        c,
        m2,
        d: combined.d,
    };
    let cert = certify(a1, target, combined.inst, combined.m, path)?;
    if !cert.nonzero {
        return Err(Error::VerificationMismatch(format!(
            "combined recurrence for a1 = {a1}, target {target} hits zero"
        )));
    }
    Ok(cert)
}

/// A verified certificate for `ρ(x; m) = n`, optionally with every residue
/// nonzero.
pub fn construct(
    a1: i64,
    n: u64,
    require_nonzero: bool,
    cfg: &FactorConfig,
) -> Result<Certificate> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "the residue count must be at least 1".into(),
        ));
    }
    if a1 == 0 {
        return construct_a1_zero(n, require_nonzero);
    }
    if a1 < 0 {
        let inner = construct(-a1, n, require_nonzero, cfg).map_err(|e| match e {
            Error::ImpossibleNonzero { n, .. } => Error::ImpossibleNonzero { a1, n },
            other => other,
        })?;
        let inner_stats = inner.verify()?;
        let reversed = reverse_from_stats(&inner.instance(), &inner_stats);
        let path = ConstructionPath::Reversed {
            inner: Box::new(inner.path.clone()),
        };
        let cert = certify(a1, n, reversed, inner.m.clone(), path)?;
        if cert.tau != inner.tau || cert.nonzero != inner.nonzero {
            return Err(Error::VerificationMismatch(format!(
                "reversal changed (τ, nonzero) from ({}, {}) to ({}, {})",
                inner.tau, inner.nonzero, cert.tau, cert.nonzero
            )));
        }
        return Ok(cert);
    }

    if require_nonzero && a1 == 1 && n <= 3 {
        return Err(Error::ImpossibleNonzero { a1, n });
    }
    match n {
        1 if require_nonzero => certify(
            a1,
            1,
            RecurrenceInstance::new(a1, 1, 1),
            big(a1),
            ConstructionPath::NonzeroSmall { m: big(a1) },
        ),
        1 => certify(
            a1,
            1,
            RecurrenceInstance::new(a1, 0, 1),
            big(1),
            ConstructionPath::Trivial1,
        ),
        2 if require_nonzero && a1 == 2 => Ok(table_lookup(2, 2, true)?.expect("row 12")),
        2 if require_nonzero => certify(
            a1,
            2,
            RecurrenceInstance::new(a1, 1, 2),
            big(a1),
            ConstructionPath::NonzeroSmall { m: big(a1) },
        ),
        2 => certify(
            a1,
            2,
            RecurrenceInstance::new(a1, 0, 1),
            big(2),
            ConstructionPath::Parity2,
        ),
        _ => {
            if let Some(cert) = table_lookup(a1, n, require_nonzero)? {
                return Ok(cert);
            }
            if n == 4 {
                construct_n4(a1)
            } else if n % 2 == 1 {
                construct_odd_primitive(a1, n, false, cfg)
            } else if n % 4 == 2 {
                construct_odd_primitive(a1, n / 2, true, cfg)
            } else {
                construct_even(a1, n / 2, cfg)
            }
        }
    }
}

/// `xₙ = xₙ₋₂` only ever shows one or two residues.
fn construct_a1_zero(n: u64, require_nonzero: bool) -> Result<Certificate> {
    let (inst, m, path) = match (n, require_nonzero) {
        (1, false) => (
            RecurrenceInstance::new(0, 0, 1),
            big(1),
            ConstructionPath::Trivial1,
        ),
        (1, true) => (
            RecurrenceInstance::new(0, 1, 1),
            big(2),
            ConstructionPath::NonzeroSmall { m: big(2) },
        ),
        (2, false) => (
            RecurrenceInstance::new(0, 0, 1),
            big(2),
            ConstructionPath::Parity2,
        ),
        (2, true) => (
            RecurrenceInstance::new(0, 1, 2),
            big(3),
            ConstructionPath::NonzeroSmall { m: big(3) },
        ),
        _ => return Err(Error::Unrepresentable { a1: 0, n }),
    };
    certify(0, n, inst, m, path)
}
