use num_bigint::BigInt;
use num_integer::Integer;
use proptest::prelude::*;

use recres::constructor::{construct, Certificate};
use recres::intmath::FactorConfig;
use recres::quadring::{alpha_pow, ord_alpha2, QuadInt, RingParams};
use recres::recurrence::{crt_combine, orbit_stats, reverse_instance, RecurrenceInstance};

fn nonzero_a1() -> impl Strategy<Value = i64> {
    (1i64..=20, any::<bool>()).prop_map(|(a, neg)| if neg { -a } else { a })
}

fn big(n: i64) -> BigInt {
    BigInt::from(n)
}

fn is_odd_prime(p: i64) -> bool {
    p > 2
        && p % 2 == 1
        && (3..p)
            .step_by(2)
            .take_while(|d| d * d <= p)
            .all(|d| p % d != 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn orbits_are_purely_periodic(a1 in nonzero_a1(), x0 in -1000i64..1000, x1 in -1000i64..1000, m in 1i64..300) {
        let inst = RecurrenceInstance::new(a1, x0, x1);
        let s = orbit_stats(&inst, &big(m), &[]).unwrap();
        prop_assert!(s.tau as i64 <= 6 * m * m);
        let terms = inst.terms(4 * s.tau as usize);
        for n in 0..3 * s.tau as usize {
            prop_assert_eq!(terms[n].mod_floor(&big(m)), terms[n + s.tau as usize].mod_floor(&big(m)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn binet_form_matches_the_recurrence(a1 in nonzero_a1(), x0 in -50i64..50, x1 in -50i64..50) {
        let prm = RingParams::new(a1).unwrap();
        let (alpha, beta) = (prm.alpha(), prm.beta());
        let x0q = QuadInt::from_int(x0, prm);
        let x1q = QuadInt::from_int(x1, prm);
        let c1 = &x1q - &(&beta * &x0q);
        let c2 = &x1q - &(&alpha * &x0q);
        let terms = RecurrenceInstance::new(a1, x0, x1).terms(51);
        for (n, x) in terms.iter().enumerate() {
            let num = &(&c1 * &alpha.pow(n as u64)) - &(&c2 * &beta.pow(n as u64));
            let value = num.div_exact(&prm.sqrt_d()).and_then(|q| q.as_integer().cloned());
            prop_assert_eq!(value.as_ref(), Some(x), "n = {}", n);
        }
    }

    #[test]
    fn period_is_twice_the_order_of_alpha_squared(
        a1 in 1i64..=6,
        p in (3i64..=50).prop_filter("odd prime", |&p| is_odd_prime(p)),
        v in 1u32..=2,
        x0 in 0i64..2500,
        x1 in 0i64..2500,
    ) {
        let d = a1 * a1 + 4;
        prop_assume!((2 * a1 * d) % p != 0);
        prop_assume!((x1 * x1 - a1 * x1 * x0 - x0 * x0).rem_euclid(p) != 0);
        let m = big(p.pow(v));
        let prm = RingParams::new(a1).unwrap();
        let ord = ord_alpha2(prm, &big(p), v, &FactorConfig::default()).unwrap();
        let s = orbit_stats(&RecurrenceInstance::new(a1, x0, x1), &m, &[]).unwrap();
        prop_assert_eq!(num_bigint::BigUint::from(s.tau), ord * 2u32);
        // α^τ ≡ 1 in Z[α]/(m)
        let at = alpha_pow(prm, s.tau as i64).reduce(&m);
        prop_assert!(at.is_one());
    }

    #[test]
    fn class_counts_cover_the_residues(a1 in nonzero_a1(), x0 in 0i64..100, x1 in 0i64..100, m in 1i64..120) {
        let s = orbit_stats(&RecurrenceInstance::new(a1, x0, x1), &big(m), &[2, 3, 4]).unwrap();
        for d in [2u64, 3, 4] {
            let counts: Vec<usize> = (0..d).map(|r| s.class_count(r, d)).collect();
            prop_assert!(counts.iter().sum::<usize>() >= s.rho);
            prop_assert!(counts.iter().all(|&c| c <= s.rho));
        }
    }

    #[test]
    fn reversal_preserves_statistics(a1 in nonzero_a1(), x0 in -500i64..500, x1 in -500i64..500, m in 1i64..400) {
        let m = big(m);
        let inst = RecurrenceInstance::new(a1, x0, x1);
        let s = orbit_stats(&inst, &m, &[]).unwrap();
        let rev = reverse_instance(&inst, &m).unwrap();
        prop_assert_eq!(rev.a1, -a1);
        let sr = orbit_stats(&rev, &m, &[]).unwrap();
        prop_assert_eq!((s.tau, s.rho, s.nonzero), (sr.tau, sr.rho, sr.nonzero));
        prop_assert_eq!(&s.residues, &sr.residues);
        let back = reverse_instance(&rev, &m).unwrap();
        prop_assert_eq!(back.a1, a1);
        prop_assert_eq!(back.x0.mod_floor(&m), inst.x0.mod_floor(&m));
        prop_assert_eq!(back.x1.mod_floor(&m), inst.x1.mod_floor(&m));
    }

    #[test]
    fn combination_predicts_the_residue_count(a1 in 2i64..=7, x0 in 0i64..200, x1 in 0i64..200, m1 in 1i64..200) {
        prop_assume!(m1.gcd(&a1) == 1);
        let i1 = RecurrenceInstance::new(a1, x0, x1);
        let i2 = RecurrenceInstance::new(a1, 0, 1);
        let c = crt_combine(&i1, &big(m1), &i2, &big(a1)).unwrap();
        let s = orbit_stats(&c.inst, &c.m, &[]).unwrap();
        prop_assert_eq!(s.rho as u64, c.predicted_rho);
        prop_assert_eq!(c.m, big(m1 * a1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn certificates_round_trip_through_json(a1 in nonzero_a1(), n in 1u64..=40, nonzero in any::<bool>()) {
        prop_assume!(!(nonzero && a1.abs() == 1 && n <= 3));
        let cert = construct(a1, n, nonzero, &FactorConfig::default()).unwrap();
        let text = serde_json::to_string(&cert).unwrap();
        let back: Certificate = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &cert);
        let s = back.verify().unwrap();
        prop_assert_eq!(s.rho as u64, n);
    }
}

#[test]
fn primitive_divisors_are_plus_or_minus_one_mod_n() {
    let cfg = FactorConfig::default();
    for a1 in 1..=4i64 {
        let prm = RingParams::new(a1).unwrap();
        for n in 5..=40u64 {
            let report = recres::lehmer::primitive_divisors(prm, n, &cfg).unwrap();
            for (p, _) in &report.primitive {
                let r = p % n;
                assert!(
                    r == 1u32.into() || r == (n - 1).into(),
                    "a1 = {a1}, n = {n}, p = {p}"
                );
            }
        }
    }
}
