//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test --test acceptance`.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use recres::constructor::{construct, Certificate};
use recres::fractional::verify_limit_points;
use recres::intmath::{divisors, factorize, legendre, FactorConfig};
use recres::lehmer::{
    cyclotomic_num, guarantee_high_primdiv, guarantee_odd_primdiv, high_from_report,
    lehmer_companion, lehmer_term, primitive_divisors, ward_bound_holds, HighPrimitive,
};
use recres::quadring::{ord_alpha2, ord_alpha_beta, ModQuad, QuadInt, RingParams};
use recres::recurrence::{orbit_stats, reverse_instance, RecurrenceInstance};
use recres::Error;

const TABLE_LIMIT: Duration = Duration::from_secs(1);
const SWEEP_LIMIT: Duration = Duration::from_secs(300);
const ORACLE_LIMIT: Duration = Duration::from_secs(30);
const COROLLARY_LIMIT: Duration = Duration::from_secs(120);
const COROLLARY_HORIZON: u64 = 300;
const COROLLARY_EPS: f64 = 1e-8;
const REVERSAL_SAMPLES: usize = 200;
const SEED: u64 = 0x5eed_2024;

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);
type ReferenceRow = (u8, i64, i64, i64, i64, u64, usize, bool);

fn big(n: i64) -> BigInt {
    BigInt::from(n)
}

fn params(a1: i64) -> RingParams {
    RingParams::new(a1).unwrap()
}

fn odd_primes(limit: u64) -> Vec<u64> {
    (3..=limit)
        .step_by(2)
        .filter(|&p| {
            (3..p)
                .step_by(2)
                .take_while(|d| d * d <= p)
                .all(|d| p % d != 0)
        })
        .collect()
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    if let (Ok(_), Some(limit)) = (&out, limit) {
        if elapsed > limit {
            out = Err(format!("took {:.2?}, limit {:.0?}", elapsed, limit));
        }
    }
    (out, elapsed)
}

/// `(row, a₁, x₀, x₁, m, τ, ρ, nonzero)`, transcribed independently of the library copy.
const REFERENCE_ROWS: [ReferenceRow; 19] = [
    (1, 1, 0, 1, 3, 8, 3, false),
    (2, 1, 1, 3, 5, 4, 4, true),
    (3, 1, 1, 3, 8, 12, 6, true),
    (4, 1, 1, 3, 10, 12, 8, true),
    (5, 1, 1, 3, 13, 28, 12, true),
    (6, 1, 1, 3, 17, 36, 16, true),
    (7, 1, 1, 3, 28, 48, 20, true),
    (8, 1, 1, 3, 26, 84, 24, true),
    (9, 1, 1, 3, 56, 48, 28, true),
    (10, 1, 1, 3, 52, 84, 36, true),
    (11, 1, 1, 3, 78, 168, 48, true),
    (12, 2, 1, 1, 4, 4, 2, true),
    (13, 2, 1, 1, 5, 12, 4, true),
    (14, 2, 1, 1, 28, 12, 8, true),
    (15, 2, 1, 1, 13, 28, 12, true),
    (16, 2, 1, 1, 39, 56, 24, true),
    (17, 3, 1, 1, 9, 6, 3, true),
    (18, 3, 1, 1, 8, 12, 6, true),
    (19, 3, 1, 1, 17, 16, 12, true),
];

fn table_regression() -> Outcome {
    for &(row, a1, x0, x1, m, tau, rho, nonzero) in REFERENCE_ROWS.iter() {
        let s = orbit_stats(&RecurrenceInstance::new(a1, x0, x1), &big(m), &[])
            .map_err(|e| e.to_string())?;
        if (s.tau, s.rho, s.nonzero) != (tau, rho, nonzero) {
            return Err(format!(
                "row {row}: simulated (τ, ρ, nonzero) = ({}, {}, {}), table ({tau}, {rho}, {nonzero})",
                s.tau, s.rho, s.nonzero
            ));
        }
        let lib = &recres::constructor::TABLE[row as usize - 1];
        if (
            lib.a1,
            lib.x0,
            lib.x1,
            lib.m,
            lib.tau,
            lib.rho as usize,
            lib.nonzero,
        ) != (a1, x0, x1, m, tau, rho, nonzero)
        {
            return Err(format!(
                "row {row}: library table differs from the reference rows"
            ));
        }
    }
    Ok("19 rows".into())
}

fn theorem_sweep() -> Outcome {
    let cfg = FactorConfig::default();
    let cells: Vec<(i64, u64, bool)> = [-5i64, -4, -3, -2, -1, 1, 2, 3, 4, 5]
        .into_iter()
        .flat_map(|a1| (1..=60u64).flat_map(move |n| [(a1, n, false), (a1, n, true)]))
        .collect();
    let failures: Vec<String> = cells
        .par_iter()
        .filter_map(|&(a1, n, nonzero)| {
            let expect_ok = !nonzero || a1.abs() >= 2 || n >= 4;
            match construct(a1, n, nonzero, &cfg) {
                Ok(cert) => {
                    if !expect_ok {
                        return Some(format!("({a1}, {n}, nonzero): expected ImpossibleNonzero"));
                    }
                    let check = cert.verify().map_err(|e| e.to_string()).and_then(|s| {
                        if s.rho as u64 != n
                            || cert.a1 != a1
                            || !cert.verified
                            || (nonzero && !s.nonzero)
                        {
                            Err(format!("ρ = {}, nonzero = {}", s.rho, s.nonzero))
                        } else {
                            Ok(())
                        }
                    });
                    check.err().map(|e| format!("({a1}, {n}, {nonzero}): {e}"))
                }
                Err(Error::ImpossibleNonzero { .. }) if !expect_ok => None,
                Err(e) => Some(format!("({a1}, {n}, {nonzero}): {e}")),
            }
        })
        .collect();
    if failures.is_empty() {
        Ok(format!("{} cells", cells.len()))
    } else {
        Err(failures.join("; "))
    }
}

fn exceptional_sets() -> Outcome {
    let cfg = FactorConfig::default();
    let no_odd: BTreeSet<(i64, u64)> = [(1, 3), (1, 6), (1, 10), (1, 12), (3, 3)]
        .into_iter()
        .collect();
    let no_high: BTreeSet<(i64, u64)> = [
        (1, 3),
        (1, 4),
        (1, 6),
        (1, 8),
        (1, 10),
        (1, 12),
        (1, 14),
        (1, 18),
        (1, 24),
        (2, 4),
        (2, 6),
        (2, 12),
        (3, 3),
        (3, 6),
    ]
    .into_iter()
    .collect();
    let mut found_no_odd = BTreeSet::new();
    let mut found_no_high = BTreeSet::new();
    for a1 in 1..=4i64 {
        for n in 3..=30u64 {
            let report = primitive_divisors(params(a1), n, &cfg).map_err(|e| e.to_string())?;
            let odd = report.odd_primitive().next().is_some();
            if !odd && !report.complete {
                return Err(format!("({a1}, {n}): factorization incomplete"));
            }
            let high = match high_from_report(&report) {
                HighPrimitive::Found { .. } => true,
                HighPrimitive::None => false,
                HighPrimitive::Unknown => return Err(format!("({a1}, {n}): high divisor unknown")),
            };
            if odd != guarantee_odd_primdiv(a1, n) || high != guarantee_high_primdiv(a1, n) {
                return Err(format!(
                    "({a1}, {n}): search (odd {odd}, high {high}) disagrees with the lemmas"
                ));
            }
            if !odd {
                found_no_odd.insert((a1, n));
            }
            if !high {
                found_no_high.insert((a1, n));
            }
        }
    }
    if found_no_odd != no_odd || found_no_high != no_high {
        return Err(format!(
            "exceptions found: odd {found_no_odd:?}, high {found_no_high:?}"
        ));
    }
    Ok("112 pairs".into())
}

fn closed_forms(a1: i64) -> [i64; 6] {
    let s = a1 * a1;
    [1, 1, s + 3, s + 2, (s + 1) * (s + 4) + 1, (s + 1) * (s + 3)]
}

fn binomial_identity(a1: i64, m: u64) -> bool {
    let prm = params(a1);
    let gamma = prm.alpha();
    let delta = QuadInt::new(-a1, 1, prm);
    let lhs = &gamma.pow(m) - &delta.pow(m);
    let mut rhs = QuadInt::from_int(a1, prm);
    for d in divisors(m) {
        match d {
            1 => {}
            2 => rhs = &rhs * &prm.sqrt_d(),
            _ => rhs = rhs.scale(&cyclotomic_num(prm, d).unwrap()),
        }
    }
    lhs == rhs
}

fn identity_suite() -> Outcome {
    let cfg = FactorConfig::default();
    let mut checks = 0usize;
    let mut ward_failures = Vec::new();
    for a1 in 1..=10i64 {
        for (i, want) in closed_forms(a1).into_iter().enumerate() {
            let got = lehmer_term(params(a1), i as u64 + 1).map_err(|e| e.to_string())?;
            if got != big(want) {
                return Err(format!("ℓ_{} for a1 = {a1}: {got} ≠ {want}", i + 1));
            }
            checks += 1;
        }
    }
    for a1 in 1..=5i64 {
        let prm = params(a1);
        let d = prm.discriminant();
        for m in 1..=30 {
            if !binomial_identity(a1, m) {
                return Err(format!("binomial identity fails at a1 = {a1}, m = {m}"));
            }
            checks += 1;
        }
        for n in (1..=25u64).step_by(2) {
            let v = lehmer_companion(prm, n).map_err(|e| e.to_string())?;
            let l = lehmer_term(prm, n).map_err(|e| e.to_string())?;
            if &d * &v * &v - big(a1 * a1) * &l * &l != big(4) {
                return Err(format!("companion identity fails at a1 = {a1}, n = {n}"));
            }
            let f = factorize(&l.to_biguint().unwrap(), &cfg);
            if !f.complete {
                return Err(format!("ℓ_{n} for a1 = {a1} not factored"));
            }
            for p in f.primes().filter(|p| p.is_odd()) {
                if legendre(&d, &BigInt::from(p.clone())).map_err(|e| e.to_string())? != 1 {
                    return Err(format!("(D | {p}) ≠ 1 for {p} | ℓ_{n}, a1 = {a1}"));
                }
            }
            checks += 2;
        }
        for n in 3..=50 {
            if !ward_bound_holds(prm, n).map_err(|e| e.to_string())? {
                ward_failures.push((a1, n));
            }
            checks += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for a1 in 1..=5i64 {
        let prm = params(a1);
        for p in odd_primes(50) {
            let p_i = p as i64;
            if (a1 * (a1 * a1 + 4)) % p_i == 0 {
                continue;
            }
            for v in 1..=2u32 {
                let t = ord_alpha_beta(prm, &big(p_i), v, &cfg).map_err(|e| e.to_string())?;
                let c = t.alpha2.clone();
                let two_c = &c * 2u32;
                let ok = if c.is_odd() {
                    let mut ab = [t.alpha.clone(), t.beta.clone()];
                    ab.sort();
                    ab == [c.clone(), two_c.clone()]
                } else {
                    t.alpha == two_c && t.beta == two_c
                };
                if !ok || t.alpha.lcm(&t.beta) != two_c {
                    return Err(format!("trichotomy fails at a1 = {a1}, {p}^{v}: {t:?}"));
                }
                let m = big(p_i.pow(v));
                for _ in 0..4 {
                    let (x0, x1) = loop {
                        let x0: i64 = rng.gen_range(0..p_i.pow(v));
                        let x1: i64 = rng.gen_range(0..p_i.pow(v));
                        if (x1 * x1 - a1 * x1 * x0 - x0 * x0).rem_euclid(p_i) != 0 {
                            break (x0, x1);
                        }
                    };
                    let s = orbit_stats(&RecurrenceInstance::new(a1, x0, x1), &m, &[])
                        .map_err(|e| e.to_string())?;
                    if BigUint::from(s.tau) != two_c {
                        return Err(format!(
                            "τ({x0}, {x1}; {p}^{v}) = {} ≠ 2·{c} for a1 = {a1}",
                            s.tau
                        ));
                    }
                }
                checks += 5;
            }
        }
    }
    if !ward_failures.is_empty() {
        return Err(format!(
            "strict Ward inequality fails at (a1, n) = {ward_failures:?}; the other {} checks passed",
            checks - ward_failures.len()
        ));
    }
    Ok(format!("{checks} checks"))
}

fn oracle_equivalence() -> Outcome {
    let cfg = FactorConfig::default();
    let cases: Vec<(i64, u64, u32)> = (1..=4i64)
        .flat_map(|a1| {
            odd_primes(200)
                .into_iter()
                .filter(move |&p| (a1 * (a1 * a1 + 4)) % p as i64 != 0)
                .flat_map(move |p| [(a1, p, 1), (a1, p, 2)])
        })
        .collect();
    let failures: Vec<String> = cases
        .par_iter()
        .filter_map(|&(a1, p, v)| {
            let prm = params(a1);
            let m = big(p.pow(v) as i64);
            let alpha = ModQuad::alpha(&m, prm);
            let g = alpha.mul(&alpha);
            let mut x = g.clone();
            let mut k = 1u64;
            while !x.is_one() {
                x = x.mul(&g);
                k += 1;
            }
            match ord_alpha2(prm, &big(p as i64), v, &cfg) {
                Ok(o) if o.to_u64() == Some(k) => None,
                Ok(o) => Some(format!("a1 = {a1}, {p}^{v}: descent {o}, brute force {k}")),
                Err(e) => Some(format!("a1 = {a1}, {p}^{v}: {e}")),
            }
        })
        .collect();
    if failures.is_empty() {
        Ok(format!("{} cases", cases.len()))
    } else {
        Err(failures.join("; "))
    }
}

fn corollary_sweep() -> Outcome {
    let cfg = FactorConfig::default();
    let cells: Vec<(i64, u64)> = [2i64, 3]
        .into_iter()
        .flat_map(|a1| (1..=20u64).map(move |k| (a1, k)))
        .chain((4..=20u64).map(|k| (1, k)))
        .collect();
    let failures: Vec<String> = cells
        .par_iter()
        .filter_map(|&(a1, k)| {
            let cert = match construct(a1, k, true, &cfg) {
                Ok(c) => c,
                Err(e) => return Some(format!("({a1}, {k}): {e}")),
            };
            match verify_limit_points(&cert, COROLLARY_HORIZON, COROLLARY_EPS) {
                Ok(r) if r.pass && r.clusters.len() as u64 == k => None,
                Ok(r) => Some(format!(
                    "({a1}, {k}): pass = {}, inconclusive = {}, {} clusters, n0 = {:?}, τ = {}",
                    r.pass,
                    r.inconclusive,
                    r.clusters.len(),
                    r.n0,
                    r.tau
                )),
                Err(e) => Some(format!("({a1}, {k}): {e}")),
            }
        })
        .collect();
    if failures.is_empty() {
        Ok(format!("{} cells", cells.len()))
    } else {
        Err(failures.join("; "))
    }
}

fn reversal_metamorphic() -> Outcome {
    let cfg = FactorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x7e7e);
    let samples: Vec<(i64, u64, bool)> = (0..REVERSAL_SAMPLES)
        .map(|_| {
            let a1 = rng.gen_range(1..=5i64) * if rng.gen_bool(0.5) { 1 } else { -1 };
            (a1, rng.gen_range(1..=60u64), rng.gen_bool(0.5))
        })
        .collect();
    let failures: Vec<String> = samples
        .par_iter()
        .filter_map(|&(a1, n, nonzero)| {
            let cert: Certificate = match construct(a1, n, nonzero, &cfg) {
                Ok(c) => c,
                Err(Error::ImpossibleNonzero { .. }) => match construct(a1, n, false, &cfg) {
                    Ok(c) => c,
                    Err(e) => return Some(format!("({a1}, {n}): {e}")),
                },
                Err(e) => return Some(format!("({a1}, {n}): {e}")),
            };
            let inst = cert.instance();
            let run = || -> recres::Result<Option<String>> {
                let s = orbit_stats(&inst, &cert.m, &[])?;
                let rev = reverse_instance(&inst, &cert.m)?;
                let sr = orbit_stats(&rev, &cert.m, &[])?;
                let back = reverse_instance(&rev, &cert.m)?;
                let sb = orbit_stats(&back, &cert.m, &[])?;
                if (s.tau, s.rho, s.nonzero) != (sr.tau, sr.rho, sr.nonzero) {
                    return Ok(Some(format!(
                        "({a1}, {n}): reversal changed (τ, ρ, nonzero)"
                    )));
                }
                if s.residues != sb.residues || back.a1 != a1 {
                    return Ok(Some(format!(
                        "({a1}, {n}): double reversal changed the residues"
                    )));
                }
                Ok(None)
            };
            run().unwrap_or_else(|e| Some(format!("({a1}, {n}): {e}")))
        })
        .collect();
    if failures.is_empty() {
        Ok(format!("{} certificates", samples.len()))
    } else {
        Err(failures.join("; "))
    }
}

fn main() {
    let criteria: [Criterion; 7] = [
        (
            "special-case table regression",
            Some(TABLE_LIMIT),
            table_regression,
        ),
        ("theorem sweep", Some(SWEEP_LIMIT), theorem_sweep),
        ("exceptional-set cross-validation", None, exceptional_sets),
        ("identity suite", None, identity_suite),
        (
            "order oracle equivalence",
            Some(ORACLE_LIMIT),
            oracle_equivalence,
        ),
        ("corollary sweep", Some(COROLLARY_LIMIT), corollary_sweep),
        ("reversal metamorphic test", None, reversal_metamorphic),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        let (out, elapsed) = timed(limit, f);
        match out {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({:.2?})", i + 1, elapsed),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail} ({:.2?})", i + 1, elapsed);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 7 criteria failed");
        std::process::exit(1);
    }
    println!("all 7 criteria passed");
}
