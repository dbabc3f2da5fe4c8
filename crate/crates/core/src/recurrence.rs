//! Recurrences `xₙ = a₁xₙ₋₁ + xₙ₋₂` reduced modulo `m`.
//!
//! The step map `(x, y) ↦ (y, a₁y + x)` has determinant `−1`, so it is a
//! bijection on `(Z/m)²` and every orbit is purely periodic: the period is
//! found as the first return of the initial pair.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RecurrenceInstance {
    pub a1: i64,
    #[serde(with = "crate::decimal")]
    pub x0: BigInt,
    #[serde(with = "crate::decimal")]
    pub x1: BigInt,
}

impl RecurrenceInstance {
    pub fn new(a1: i64, x0: impl Into<BigInt>, x1: impl Into<BigInt>) -> Self {
        Self {
            a1,
            x0: x0.into(),
            x1: x1.into(),
        }
    }

    /// The first `count` terms over `Z`.
    pub fn terms(&self, count: usize) -> Vec<BigInt> {
        let a1 = BigInt::from(self.a1);
        let mut out: Vec<BigInt> = Vec::with_capacity(count);
        let (mut x, mut y) = (self.x0.clone(), self.x1.clone());
        for _ in 0..count {
            out.push(x.clone());
            let next = &a1 * &y + &x;
            x = std::mem::replace(&mut y, next);
        }
        out
    }

    pub fn negated(&self) -> Self {
        Self::new(self.a1, -&self.x0, -&self.x1)
    }
}

/// Period and residue statistics of one orbit modulo `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitStats {
    pub m: BigInt,
    pub tau: u64,
    /// `x₀, …, x_{τ−1}` reduced into `[0, m)`.
    pub orbit: Vec<BigInt>,
    pub residues: BTreeSet<BigInt>,
    pub rho: usize,
    /// `(d, r) ↦ ρ(x; m, r, d)` for every requested `d` and `0 ≤ r < d`.
    pub class_rho: BTreeMap<(u64, u64), usize>,
    pub nonzero: bool,
}

impl OrbitStats {
    /// `ρ(x; m, r, d)`: distinct residues among indices `n ≡ r (mod d)`.
    ///
    /// Over all `n ≥ 0` these indices hit exactly the orbit positions
    /// congruent to `r` modulo `gcd(d, τ)`.
    pub fn class_count(&self, r: u64, d: u64) -> usize {
        let g = d.gcd(&self.tau);
        let r = r % g;
        self.orbit
            .iter()
            .enumerate()
            .filter(|(j, _)| *j as u64 % g == r)
            .map(|(_, x)| x)
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// First index at which `residue` occurs.
    pub fn index_of(&self, residue: &BigInt) -> Option<usize> {
        self.orbit.iter().position(|x| x == residue)
    }
}

fn check_modulus(m: &BigInt) -> Result<()> {
    if *m < BigInt::one() {
        return Err(Error::InvalidInput(format!(
            "modulus must be >= 1, got {m}"
        )));
    }
    Ok(())
}

pub fn orbit_stats(
    inst: &RecurrenceInstance,
    m: &BigInt,
    class_mods: &[u64],
) -> Result<OrbitStats> {
    check_modulus(m)?;
    let a1 = BigInt::from(inst.a1).mod_floor(m);
    let start = (inst.x0.mod_floor(m), inst.x1.mod_floor(m));
    let guard = (BigInt::from(6) * m * m).to_u64().unwrap_or(u64::MAX);

    let mut orbit = Vec::new();
    let (mut x, mut y) = start.clone();
    loop {
        orbit.push(x.clone());
        let next = (&a1 * &y + &x).mod_floor(m);
        x = std::mem::replace(&mut y, next);
        if (x == start.0 && y == start.1) || orbit.len() as u64 >= guard {
            break;
        }
    }
    if x != start.0 || y != start.1 {
        return Err(Error::Internal(format!(
            "no return to the initial pair within {guard} steps modulo {m}"
        )));
    }

    let residues: BTreeSet<BigInt> = orbit.iter().cloned().collect();
    let mut stats = OrbitStats {
        m: m.clone(),
        tau: orbit.len() as u64,
        rho: residues.len(),
        nonzero: !residues.contains(&BigInt::zero()),
        residues,
        orbit,
        class_rho: BTreeMap::new(),
    };
    for &d in class_mods {
        if d == 0 {
            return Err(Error::InvalidInput("class modulus must be >= 1".into()));
        }
        for r in 0..d {
            let c = stats.class_count(r, d);
            stats.class_rho.insert((d, r), c);
        }
    }
    Ok(stats)
}

/// The reversed recurrence for `X² + a₁X − 1`: `yₙ ≡ x_{−(n+1) mod τ}`.
pub fn reverse_instance(inst: &RecurrenceInstance, m: &BigInt) -> Result<RecurrenceInstance> {
    let stats = orbit_stats(inst, m, &[])?;
    Ok(reverse_from_stats(inst, &stats))
}

pub(crate) fn reverse_from_stats(
    inst: &RecurrenceInstance,
    stats: &OrbitStats,
) -> RecurrenceInstance {
    let t = stats.tau as i64;
    let at = |k: i64| stats.orbit[k.rem_euclid(t) as usize].clone();
    RecurrenceInstance::new(-inst.a1, at(t - 1), at(t - 2))
}

/// Result of gluing two recurrences with coprime moduli.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Combined {
    pub inst: RecurrenceInstance,
    pub m: BigInt,
    pub predicted_rho: u64,
    pub d: u64,
    pub tau1: u64,
    pub tau2: u64,
}

/// CRT-combines two recurrences with coprime moduli. Requires the second
/// orbit to have pairwise distinct terms over one period (`ρ₂ = τ₂`); then
/// `ρ = (τ₂/d)·Σ_{r<d} ρ(x⁽¹⁾; m₁, r, d)` with `d = gcd(τ₁, τ₂)`.
pub fn crt_combine(
    inst1: &RecurrenceInstance,
    m1: &BigInt,
    inst2: &RecurrenceInstance,
    m2: &BigInt,
) -> Result<Combined> {
    check_modulus(m1)?;
    check_modulus(m2)?;
    if inst1.a1 != inst2.a1 {
        return Err(Error::InvalidInput(format!(
            "recurrences differ in a1 ({} vs {})",
            inst1.a1, inst2.a1
        )));
    }
    if !m1.gcd(m2).is_one() {
        return Err(Error::InvalidInput(format!(
            "moduli {m1} and {m2} are not coprime"
        )));
    }
    let s2 = orbit_stats(inst2, m2, &[])?;
    if s2.rho as u64 != s2.tau {
        return Err(Error::Precondition(format!(
            "second recurrence has ρ = {} but τ = {} modulo {m2}",
            s2.rho, s2.tau
        )));
    }
    let s1 = orbit_stats(inst1, m1, &[])?;
    let d = s1.tau.gcd(&s2.tau);
    let sum: u64 = (0..d).map(|r| s1.class_count(r, d) as u64).sum();
    let predicted_rho = s2.tau / d * sum;

    let m = m1 * m2;
    let x0 = crt_pair(&inst1.x0, m1, &inst2.x0, m2);
    let x1 = crt_pair(&inst1.x1, m1, &inst2.x1, m2);
    Ok(Combined {
        inst: RecurrenceInstance::new(inst1.a1, x0, x1),
        m,
        predicted_rho,
        d,
        tau1: s1.tau,
        tau2: s2.tau,
    })
}

/// The unique `x mod m₁m₂` with `x ≡ a (mod m₁)`, `x ≡ b (mod m₂)`.
fn crt_pair(a: &BigInt, m1: &BigInt, b: &BigInt, m2: &BigInt) -> BigInt {
    let e = m1.extended_gcd(m2);
    debug_assert!(e.gcd.is_one());
    // x = a + m1·((b − a)·m1⁻¹ mod m2)
    let t = ((b - a) * e.x).mod_floor(m2);
    (a + m1 * t).mod_floor(&(m1 * m2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: i64) -> BigInt {
        BigInt::from(n)
    }

    fn set(v: &[i64]) -> BTreeSet<BigInt> {
        v.iter().map(|&x| big(x)).collect()
    }

    #[test]
    fn orbit_examples() {
        let s = orbit_stats(&RecurrenceInstance::new(1, 1, 3), &big(5), &[]).unwrap();
        assert_eq!((s.tau, s.rho, s.nonzero), (4, 4, true));
        assert_eq!(s.orbit, vec![big(1), big(3), big(4), big(2)]);
        let s = orbit_stats(&RecurrenceInstance::new(7, 3, -2), &big(1), &[]).unwrap();
        assert_eq!((s.tau, s.rho), (1, 1));
        let s = orbit_stats(&RecurrenceInstance::new(2, 1, 1), &big(13), &[]).unwrap();
        assert_eq!((s.tau, s.rho, s.nonzero), (28, 12, true));
        let s = orbit_stats(&RecurrenceInstance::new(5, 0, 0), &big(7), &[]).unwrap();
        assert_eq!((s.tau, s.rho, s.nonzero), (1, 1, false));
        assert!(orbit_stats(&RecurrenceInstance::new(1, 0, 1), &big(0), &[]).is_err());
    }

    #[test]
    fn class_counts() {
        // 1, 3, 4, 2 mod 5
        let s = orbit_stats(&RecurrenceInstance::new(1, 1, 3), &big(5), &[2, 3]).unwrap();
        assert_eq!(s.class_rho[&(2, 0)], 2);
        assert_eq!(s.class_rho[&(2, 1)], 2);
        // gcd(3, 4) = 1: every class sees the whole orbit
        assert_eq!(s.class_rho[&(3, 2)], 4);
    }

    #[test]
    fn reversal_example() {
        let inst = RecurrenceInstance::new(1, 1, 3);
        let r = reverse_instance(&inst, &big(5)).unwrap();
        assert_eq!(r, RecurrenceInstance::new(-1, 2, 4));
        let s = orbit_stats(&r, &big(5), &[]).unwrap();
        assert_eq!(s.residues, set(&[1, 2, 3, 4]));
        assert_eq!(s.orbit, vec![big(2), big(4), big(3), big(1)]);
    }

    #[test]
    fn combine_with_trivial_modulus() {
        let inst = RecurrenceInstance::new(2, 1, 1);
        let c = crt_combine(&inst, &big(13), &inst, &big(1)).unwrap();
        assert_eq!(c.predicted_rho, 12);
        assert_eq!(c.m, big(13));
        assert_eq!(orbit_stats(&c.inst, &c.m, &[]).unwrap().rho, 12);
    }

    #[test]
    fn combine_checks_hypotheses() {
        let a = RecurrenceInstance::new(2, 1, 1);
        assert!(matches!(
            crt_combine(&a, &big(13), &a, &big(26)),
            Err(Error::InvalidInput(_))
        ));
        assert!(crt_combine(&a, &big(5), &RecurrenceInstance::new(3, 0, 1), &big(3)).is_err());
        // (1, 1) mod 13 has ρ = 12 < τ = 28
        assert!(matches!(
            crt_combine(&a, &big(5), &a, &big(13)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn combine_parity_case_a1_2() {
        let c = crt_combine(
            &RecurrenceInstance::new(2, 1, 1),
            &big(13),
            &RecurrenceInstance::new(2, 0, 1),
            &big(2),
        )
        .unwrap();
        let s = orbit_stats(&c.inst, &c.m, &[]).unwrap();
        assert_eq!(c.m, big(26));
        assert_eq!(s.rho as u64, c.predicted_rho);
    }

    #[test]
    fn crt_pair_solves() {
        for a in 0..7 {
            for b in 0..5 {
                let x = crt_pair(&big(a), &big(7), &big(b), &big(5));
                assert_eq!(x.mod_floor(&big(7)), big(a));
                assert_eq!(x.mod_floor(&big(5)), big(b));
            }
        }
    }
}
