//! Fractional parts `{ξαⁿ}` for `ξ ∈ Q(α)` built from a nonzero-residue
//! certificate.
//!
//! Since `ξαⁿ + ξ̄βⁿ = Tr(ξαⁿ)` is rational, `{ξαⁿ} = {Tr(ξαⁿ) − ξ̄βⁿ}` and
//! `|ξ̄βⁿ| → 0`. For `ξ = c₁/m` with `xₙ = c₁αⁿ + c₂βⁿ` the trace is `xₙ/m`,
//! so the limit points are exactly the `r/m` with `r` a residue of `x`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::constructor::Certificate;
use crate::error::{Error, Result};
use crate::quadring::{QuadInt, RingParams};
use crate::recurrence::{orbit_stats, RecurrenceInstance};

/// Bits of precision for the rational enclosure of `√D` and the envelope.
const ENVELOPE_BITS: u32 = 256;

/// `num / den` with `num ∈ Z[α]` and `den ≥ 1`, reduced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadRational {
    num: QuadInt,
    den: BigInt,
}

impl QuadRational {
    pub fn new(num: QuadInt, den: BigInt) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        let (mut x, mut y, mut den) = (num.x.clone(), num.y.clone(), den);
        if den.is_negative() {
            x = -x;
            y = -y;
            den = -den;
        }
        let g = x.gcd(&y).gcd(&den);
        if !g.is_one() {
            x /= &g;
            y /= &g;
            den /= &g;
        }
        Ok(Self {
            num: QuadInt::new(x, y, num.params()),
            den,
        })
    }

    pub fn num(&self) -> &QuadInt {
        &self.num
    }

    pub fn den(&self) -> &BigInt {
        &self.den
    }

    pub fn params(&self) -> RingParams {
        self.num.params()
    }

    pub fn conj(&self) -> Self {
        Self {
            num: self.num.conj(),
            den: self.den.clone(),
        }
    }

    /// Multiplication by the unit `α` keeps the representation reduced.
    pub fn mul_alpha(&self) -> Self {
        let a1 = self.params().a1_big();
        let QuadInt { x, y, .. } = &self.num;
        Self {
            num: QuadInt::new(y.clone(), x + &a1 * y, self.params()),
            den: self.den.clone(),
        }
    }

    pub fn trace(&self) -> BigRational {
        BigRational::new(self.num.trace(), self.den.clone())
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        self.num
            .y
            .is_zero()
            .then(|| BigRational::new(self.num.x.clone(), self.den.clone()))
    }

    /// `(A, B)` with `2·den·value = A + B√D`.
    fn surd_parts(&self) -> (BigInt, BigInt) {
        let a1 = self.params().a1_big();
        (
            BigInt::from(2) * &self.num.x + a1 * &self.num.y,
            self.num.y.clone(),
        )
    }

    /// Exact sign of the real value.
    pub fn sign(&self) -> Ordering {
        let (a, b) = self.surd_parts();
        surd_sign(&a, &b, &self.params().discriminant())
    }

    /// Rational enclosure of the real value given `√D ∈ [lo, hi]`.
    pub fn bounds(&self, sqrt_d: &(BigRational, BigRational)) -> (BigRational, BigRational) {
        let (a, b) = self.surd_parts();
        let scale = BigRational::from_integer(BigInt::from(2) * &self.den);
        let (a, b) = (BigRational::from_integer(a), BigRational::from_integer(b));
        let (s_lo, s_hi) = if b.is_negative() {
            (&sqrt_d.1, &sqrt_d.0)
        } else {
            (&sqrt_d.0, &sqrt_d.1)
        };
        ((&a + &b * s_lo) / &scale, (&a + &b * s_hi) / &scale)
    }
}

impl fmt::Display for QuadRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else if self.num.y.is_zero() {
            write!(f, "{}/{}", self.num.x, self.den)
        } else {
            write!(f, "({})/{}", self.num, self.den)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct QuadRationalRepr {
    a1: i64,
    #[serde(with = "crate::decimal")]
    x: BigInt,
    #[serde(with = "crate::decimal")]
    y: BigInt,
    #[serde(with = "crate::decimal")]
    den: BigInt,
}

impl Serialize for QuadRational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        QuadRationalRepr {
            a1: self.params().a1(),
            x: self.num.x.clone(),
            y: self.num.y.clone(),
            den: self.den.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuadRational {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = QuadRationalRepr::deserialize(d)?;
        let params = RingParams::new(r.a1).map_err(D::Error::custom)?;
        QuadRational::new(QuadInt::new(r.x, r.y, params), r.den).map_err(D::Error::custom)
    }
}

/// Sign of `a + b√d` for a non-square `d > 0`.
fn surd_sign(a: &BigInt, b: &BigInt, d: &BigInt) -> Ordering {
    let zero = BigInt::zero();
    match (a.cmp(&zero), b.cmp(&zero)) {
        (sa, Ordering::Equal) => sa,
        (Ordering::Equal, sb) => sb,
        (sa, sb) if sa == sb => sa,
        (sa, sb) => {
            if a * a > b * b * d {
                sa
            } else {
                sb
            }
        }
    }
}

/// `[lo, hi]` with `hi − lo = 2^-bits` containing `√d`.
pub fn sqrt_bounds(d: &BigInt, bits: u32) -> (BigRational, BigRational) {
    let scale = BigInt::one() << bits;
    let r = (d << (2 * bits as usize)).sqrt();
    (
        BigRational::new(r.clone(), scale.clone()),
        BigRational::new(r + 1, scale),
    )
}

fn frac(q: &BigRational) -> BigRational {
    q - q.floor()
}

/// `{ξαⁿ}` for one `n`: the value lies in `[lo, hi]` modulo 1, where
/// `center = {Tr(ξαⁿ)}` is an endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FracPoint {
    pub n: u64,
    #[serde(with = "crate::decimal::rational")]
    pub center: BigRational,
    #[serde(with = "crate::decimal::rational")]
    pub lo: BigRational,
    #[serde(with = "crate::decimal::rational")]
    pub hi: BigRational,
    /// Set when `ξαⁿ` is itself rational.
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "crate::decimal::rational::opt"
    )]
    pub exact: Option<BigRational>,
}

impl FracPoint {
    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    /// Whether some representative of `t` modulo 1 lies in `[lo, hi]`.
    pub fn contains(&self, t: &BigRational) -> bool {
        let shift = (&self.lo - t).ceil();
        let t = t + shift;
        t <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FracOrbit {
    pub points: Vec<FracPoint>,
    /// First `n` whose enclosure is narrower than the tolerance.
    pub n0: Option<u64>,
}

/// `{ξαⁿ}` for `0 ≤ n ≤ horizon`, each with a certified enclosure.
pub fn frac_orbit(xi: &QuadRational, horizon: u64, eps: &BigRational) -> Result<FracOrbit> {
    let params = xi.params();
    if params.a1() < 1 {
        return Err(Error::InvalidInput(format!(
            "fractional orbits need a1 >= 1, got {}",
            params.a1()
        )));
    }
    if !eps.is_positive() {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {eps}"
        )));
    }
    let sqrt_d = sqrt_bounds(&params.discriminant(), ENVELOPE_BITS);
    let a1 = BigRational::from_integer(params.a1_big());
    let two = BigRational::from_integer(BigInt::from(2));
    // |β| = (√D − a₁)/2 < 1
    let beta_hi = (&sqrt_d.1 - &a1) / &two;
    let conj = xi.conj();
    let conj_sign = conj.sign();
    let (c_lo, c_hi) = conj.bounds(&sqrt_d);
    let conj_abs_hi = c_lo.abs().max(c_hi.abs());

    // envelope e/2^K rounded up at every step
    let unit = BigInt::one() << ENVELOPE_BITS;
    let beta_num = (&beta_hi * BigRational::from_integer(unit.clone()))
        .ceil()
        .to_integer();
    let mut env = (&conj_abs_hi * BigRational::from_integer(unit.clone()))
        .ceil()
        .to_integer();

    let mut points = Vec::with_capacity(horizon as usize + 1);
    let mut n0 = None;
    let mut power = xi.clone();
    for n in 0..=horizon {
        let center = frac(&power.trace());
        let e = BigRational::new(env.clone(), unit.clone());
        // ξαⁿ = Tr − ξ̄βⁿ with sign(ξ̄βⁿ) = sign(ξ̄)·(−1)ⁿ
        let correction_positive = match conj_sign {
            Ordering::Equal => None,
            s => Some((s == Ordering::Greater) == (n % 2 == 0)),
        };
        let (lo, hi) = match correction_positive {
            None => (center.clone(), center.clone()),
            Some(true) => (&center - &e, center.clone()),
            Some(false) => (center.clone(), &center + &e),
        };
        let exact = power.as_rational().map(|q| frac(&q));
        let point = FracPoint {
            n,
            center,
            lo,
            hi,
            exact,
        };
        if n0.is_none() && point.width() < *eps {
            n0 = Some(n);
        }
        points.push(point);
        power = power.mul_alpha();
        env = (&env * &beta_num).div_ceil(&unit);
    }
    Ok(FracOrbit { points, n0 })
}

/// `ξ = c₁/m` for a certificate, with the limit set `{r/m}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XiData {
    pub xi: QuadRational,
    pub limits: Vec<BigRational>,
    /// The instance actually used (`−x` when `c₁ < 0`).
    pub instance: RecurrenceInstance,
    pub negated: bool,
}

/// `c₁ = (x₁ − βx₀)/(α − β)`, negating `x` if needed so that `c₁ > 0`.
pub fn xi_from_certificate(cert: &Certificate) -> Result<XiData> {
    if cert.a1 < 1 {
        return Err(Error::InvalidInput(format!(
            "needs a1 >= 1, got {}",
            cert.a1
        )));
    }
    if !cert.nonzero {
        return Err(Error::InvalidInput("certificate has a zero residue".into()));
    }
    let params = RingParams::new(cert.a1)?;
    let d = params.discriminant();
    let mut instance = cert.instance();
    let c1_of = |inst: &RecurrenceInstance| -> Result<QuadRational> {
        let lin = QuadInt::new(
            &inst.x1 - params.a1_big() * &inst.x0,
            inst.x0.clone(),
            params,
        );
        QuadRational::new(&lin * &params.sqrt_d(), d.clone())
    };
    let mut c1 = c1_of(&instance)?;
    let negated = c1.sign() == Ordering::Less;
    if negated {
        instance = instance.negated();
        c1 = c1_of(&instance)?;
    }
    let c2 = QuadRational::new(
        &QuadInt::from_int(&instance.x0 * &d, params) - &c1.num().scale(&(&d / c1.den())),
        d.clone(),
    )?;
    if c2 != c1.conj() {
        return Err(Error::Internal(format!(
            "c₂ = {c2} differs from the conjugate of c₁ = {c1}"
        )));
    }
    if c2.num().is_zero() {
        return Err(Error::InvalidInput(
            "the zero sequence has no limit points".into(),
        ));
    }
    let xi = QuadRational::new(c1.num().clone(), c1.den() * &cert.m)?;
    let stats = orbit_stats(&instance, &cert.m, &[])?;
    let limits = stats
        .residues
        .iter()
        .map(|r| BigRational::new(r.clone(), cert.m.clone()))
        .collect();
    Ok(XiData {
        xi,
        limits,
        instance,
        negated,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    #[serde(with = "crate::decimal::rational")]
    pub value: BigRational,
    pub count: u64,
    /// Largest certified distance of a visiting point from `value`.
    #[serde(with = "crate::decimal::rational")]
    pub max_deviation: BigRational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub xi: QuadRational,
    pub k: u64,
    #[serde(with = "crate::decimal::rational::vec")]
    pub predicted: Vec<BigRational>,
    pub clusters: Vec<Cluster>,
    pub negated: bool,
    pub horizon: u64,
    pub eps: f64,
    pub n0: Option<u64>,
    pub tau: u64,
    /// The tail `[n₀, N]` is shorter than one period.
    pub inconclusive: bool,
    pub pass: bool,
}

/// Checks that `{ξαⁿ}`, `n₀ ≤ n ≤ N`, stays within `eps` of the predicted
/// limits and visits every one of them.
pub fn verify_limit_points(cert: &Certificate, horizon: u64, eps: f64) -> Result<LimitReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!(
            "eps must lie in (0, 1), got {eps}"
        )));
    }
    let data = xi_from_certificate(cert)?;
    let stats = orbit_stats(&data.instance, &cert.m, &[])?;
    let eps_q = BigRational::from_float(eps).expect("finite eps");
    // narrow enough to separate limits 1/m apart
    let separation = BigRational::new(BigInt::one(), BigInt::from(2) * &cert.m);
    let threshold = if eps_q < separation {
        eps_q
    } else {
        separation
    };
    let orbit = frac_orbit(&data.xi, horizon, &threshold)?;

    let tau = stats.tau;
    let inconclusive = match orbit.n0 {
        Some(n0) => horizon - n0 + 1 < tau,
        None => true,
    };
    let mut clusters: BTreeMap<BigRational, Cluster> = BTreeMap::new();
    let mut consistent = true;
    if let Some(n0) = orbit.n0 {
        for point in &orbit.points[n0 as usize..] {
            let expected = BigRational::new(
                stats.orbit[(point.n % tau) as usize].clone(),
                cert.m.clone(),
            );
            if point.center != expected || !data.limits.contains(&point.center) {
                consistent = false;
            }
            let c = clusters
                .entry(point.center.clone())
                .or_insert_with(|| Cluster {
                    value: point.center.clone(),
                    count: 0,
                    max_deviation: BigRational::zero(),
                });
            c.count += 1;
            let w = point.width();
            if w > c.max_deviation {
                c.max_deviation = w;
            }
        }
    }
    let clusters: Vec<Cluster> = clusters.into_values().collect();
    let all_hit = clusters.len() == data.limits.len()
        && clusters
            .iter()
            .zip(&data.limits)
            .all(|(c, l)| c.value == *l && c.count > 0);
    let pass = !inconclusive && consistent && all_hit && data.limits.len() as u64 == cert.target;
    Ok(LimitReport {
        xi: data.xi,
        k: cert.target,
        predicted: data.limits,
        clusters,
        negated: data.negated,
        horizon,
        eps,
        n0: orbit.n0,
        tau,
        inconclusive,
        pass,
    })
}
