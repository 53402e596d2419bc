//! Squares, exact square roots, square classes and quadratic norms.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::repr::{self, RatFn, Repr};
use super::tower::{BaseField, FieldTower, LayerKind};
use super::{FieldElement, FieldError};

fn bigint_sqrt_exact(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}

fn legendre(p: u64, a: u64) -> i32 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    if repr::fp_pow(p, a, (p - 1) / 2) == 1 {
        1
    } else {
        -1
    }
}

fn fp_mulmod(p: u64, a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

/// Tonelli-Shanks; returns the root in `[0, (p-1)/2]`.
pub(crate) fn fp_sqrt(p: u64, a: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if legendre(p, a) != 1 {
        return None;
    }
    let mut q = p - 1;
    let mut s = 0u32;
    while q.is_multiple_of(2) {
        q /= 2;
        s += 1;
    }
    let mut z = 2u64;
    while legendre(p, z) != -1 {
        z += 1;
    }
    let mut m = s;
    let mut c = repr::fp_pow(p, z, q);
    let mut t = repr::fp_pow(p, a, q);
    let mut r = repr::fp_pow(p, a, q.div_ceil(2));
    while t != 1 {
        let mut i = 0u32;
        let mut tt = t;
        while tt != 1 {
            tt = fp_mulmod(p, tt, tt);
            i += 1;
        }
        let mut b = c;
        for _ in 0..(m - i - 1) {
            b = fp_mulmod(p, b, b);
        }
        m = i;
        c = fp_mulmod(p, b, b);
        t = fp_mulmod(p, t, c);
        r = fp_mulmod(p, r, b);
    }
    Some(r.min(p - r))
}

/// Smallest quadratic non-residue mod `p`.
pub(crate) fn least_nonresidue(p: u64) -> u64 {
    (2..p)
        .find(|&z| legendre(p, z) == -1)
        .expect("odd prime has a non-residue")
}

/// Signed squarefree part of a nonzero integer.
pub fn squarefree_part(n: &BigInt) -> BigInt {
    assert!(!n.is_zero(), "squarefree part of zero");
    let mut m = n.abs();
    let mut out = BigInt::one();
    let mut d = BigInt::from(2u32);
    while &d * &d <= m {
        let mut e = 0u32;
        while (&m % &d).is_zero() {
            m /= &d;
            e += 1;
        }
        if e % 2 == 1 {
            out *= &d;
        }
        d += 1u32;
    }
    out *= m;
    if n.is_negative() {
        -out
    } else {
        out
    }
}

/// Monic square root of a monic polynomial, if one exists.
pub fn poly_monic_sqrt(b: &FieldTower, f: &[Repr]) -> Option<Vec<Repr>> {
    if f.is_empty() {
        return Some(Vec::new());
    }
    if (f.len() - 1) % 2 == 1 {
        return None;
    }
    let m = (f.len() - 1) / 2;
    let mut g = vec![repr::zero(b); m + 1];
    g[m] = repr::one(b);
    let half = repr::inv(b, &repr::from_bigint(b, &BigInt::from(2)));
    for k in (0..m).rev() {
        let mut acc = f[m + k].clone();
        for i in (k + 1)..=m {
            let j = m + k - i;
            if j > k && j <= m {
                acc = repr::sub(b, &acc, &repr::mul(b, &g[i], &g[j]));
            }
        }
        g[k] = repr::mul(b, &acc, &half);
    }
    let sq = repr::p_mul(b, &g, &g);
    (sq == f).then_some(g)
}

impl FieldElement {
    pub fn is_square(&self) -> Result<bool, FieldError> {
        is_square(self)
    }

    pub fn exact_sqrt(&self) -> Option<FieldElement> {
        exact_sqrt(self)
    }
}

/// Whether `e` is a square in its level.
///
/// Laurent layers use the residue criterion, so a `true` there may have no
/// square root inside the rational-function subfield. Over a quadratic layer
/// the test needs an exact root of the norm and returns `NotDecidable` when
/// the norm is a square without one.
pub fn is_square(e: &FieldElement) -> Result<bool, FieldError> {
    if e.is_zero() {
        return Err(FieldError::ZeroElement);
    }
    is_square_repr(e.level(), e.repr())
}

fn is_square_repr(l: &FieldTower, r: &Repr) -> Result<bool, FieldError> {
    match (l.kind(), r) {
        (None, Repr::Rat(q)) => {
            Ok(q.is_positive() && bigint_sqrt_exact(q.numer()).is_some() && bigint_sqrt_exact(q.denom()).is_some())
        }
        (None, Repr::Fp(v)) => Ok(legendre(l.characteristic(), *v) == 1),
        (Some(LayerKind::Laurent { .. }), Repr::Frac(f)) => {
            if f.shift.rem_euclid(2) != 0 {
                return Ok(false);
            }
            is_square_repr(repr::below(l), &f.num[0])
        }
        (Some(LayerKind::RationalFunction { .. }), Repr::Frac(f)) => {
            if f.shift.rem_euclid(2) != 0 {
                return Ok(false);
            }
            let b = repr::below(l);
            let nd = repr::p_mul(b, &f.num, &f.den);
            let lc = nd.last().unwrap().clone();
            let monic = repr::p_scale(b, &nd, &repr::inv(b, &lc));
            if poly_monic_sqrt(b, &monic).is_none() {
                return Ok(false);
            }
            is_square_repr(b, &lc)
        }
        (Some(LayerKind::Quadratic { radicand, .. }), Repr::Quad(c, d)) => {
            let b = repr::below(l);
            if repr::is_zero(d) {
                if is_square_repr(b, c)? {
                    return Ok(true);
                }
                return is_square_repr(b, &repr::mul(b, c, radicand));
            }
            let norm = repr::sub(b, &repr::mul(b, c, c), &repr::mul(b, radicand, &repr::mul(b, d, d)));
            if !is_square_repr(b, &norm)? {
                return Ok(false);
            }
            let n = exact_sqrt_repr(b, &norm)
                .ok_or_else(|| FieldError::NotDecidable("norm is a square without an exact root".to_string()))?;
            let half = repr::inv(b, &repr::from_bigint(b, &BigInt::from(2)));
            for cand in [repr::add(b, c, &n), repr::sub(b, c, &n)] {
                let x2 = repr::mul(b, &cand, &half);
                if !repr::is_zero(&x2) && is_square_repr(b, &x2)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        _ => unreachable!("representation does not match level"),
    }
}

/// Exact square root on the principal branch, when one exists in the exact
/// (rational-function) representation.
pub fn exact_sqrt(e: &FieldElement) -> Option<FieldElement> {
    exact_sqrt_repr(e.level(), e.repr()).map(|r| FieldElement::from_repr(e.level(), r))
}

fn canonical(l: &FieldTower, r: Repr) -> Repr {
    if repr::is_canonical_sign(l, &r) {
        r
    } else {
        repr::neg(l, &r)
    }
}

pub(crate) fn exact_sqrt_repr(l: &FieldTower, r: &Repr) -> Option<Repr> {
    if repr::is_zero(r) {
        return Some(r.clone());
    }
    match (l.kind(), r) {
        (None, Repr::Rat(q)) => {
            if q.is_negative() {
                return None;
            }
            let n = bigint_sqrt_exact(q.numer())?;
            let d = bigint_sqrt_exact(q.denom())?;
            Some(Repr::Rat(BigRational::new(n, d)))
        }
        (None, Repr::Fp(v)) => fp_sqrt(l.characteristic(), *v).map(Repr::Fp),
        (Some(LayerKind::Laurent { .. } | LayerKind::RationalFunction { .. }), Repr::Frac(f)) => {
            if f.shift.rem_euclid(2) != 0 {
                return None;
            }
            let b = repr::below(l);
            let nd = repr::p_mul(b, &f.num, &f.den);
            let lc = nd.last().unwrap().clone();
            let lci = repr::inv(b, &lc);
            let monic = repr::p_scale(b, &nd, &lci);
            let g = poly_monic_sqrt(b, &monic)?;
            let sc = exact_sqrt_repr(b, &lc)?;
            let num = repr::p_scale(b, &g, &sc);
            let root = RatFn::normalize(b, f.shift / 2, num, f.den.clone(), true);
            Some(canonical(l, Repr::Frac(root)))
        }
        (Some(LayerKind::Quadratic { radicand, .. }), Repr::Quad(c, d)) => {
            let b = repr::below(l);
            let zero = repr::zero(b);
            if repr::is_zero(d) {
                if let Some(s) = exact_sqrt_repr(b, c) {
                    return Some(canonical(l, Repr::Quad(Box::new(s), Box::new(zero))));
                }
                let y = exact_sqrt_repr(b, &repr::div(b, c, radicand))?;
                return Some(canonical(l, Repr::Quad(Box::new(zero), Box::new(y))));
            }
            let norm = repr::sub(b, &repr::mul(b, c, c), &repr::mul(b, radicand, &repr::mul(b, d, d)));
            let n = exact_sqrt_repr(b, &norm)?;
            let two = repr::from_bigint(b, &BigInt::from(2));
            let half = repr::inv(b, &two);
            for cand in [repr::add(b, c, &n), repr::sub(b, c, &n)] {
                let x2 = repr::mul(b, &cand, &half);
                if repr::is_zero(&x2) {
                    continue;
                }
                if let Some(x) = exact_sqrt_repr(b, &x2) {
                    let y = repr::div(b, d, &repr::mul(b, &two, &x));
                    return Some(canonical(l, Repr::Quad(Box::new(x), Box::new(y))));
                }
            }
            None
        }
        _ => unreachable!("representation does not match level"),
    }
}

/// Canonical class of a base-field unit modulo squares.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaseClass {
    /// Signed squarefree integer representing a class of `ℚ^×/ℚ^{×2}`.
    Rational(BigInt),
    /// `false` for squares of `𝔽_p^×`, `true` for non-squares.
    Finite(bool),
}

/// Square class of an element of a tower whose layers are all valued
/// (Laurent, or rational-function read through its completion at 0):
/// the class of the base unit and one parity bit per layer, bottom first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SquareClass {
    pub base: BaseClass,
    pub parities: Vec<u8>,
}

impl SquareClass {
    pub fn trivial(level: &FieldTower) -> SquareClass {
        let base = match level.base() {
            BaseField::Rationals => BaseClass::Rational(BigInt::one()),
            BaseField::PrimeField(_) => BaseClass::Finite(false),
        };
        SquareClass {
            base,
            parities: vec![0; level.depth()],
        }
    }

    pub fn is_trivial(&self) -> bool {
        let base_ok = match &self.base {
            BaseClass::Rational(n) => n.is_one(),
            BaseClass::Finite(b) => !b,
        };
        base_ok && self.parities.iter().all(|&b| b == 0)
    }

    pub fn mul(&self, other: &SquareClass) -> SquareClass {
        let base = match (&self.base, &other.base) {
            (BaseClass::Rational(a), BaseClass::Rational(b)) => BaseClass::Rational(squarefree_part(&(a * b))),
            (BaseClass::Finite(a), BaseClass::Finite(b)) => BaseClass::Finite(a ^ b),
            _ => panic!("square classes over different bases"),
        };
        SquareClass {
            base,
            parities: self.parities.iter().zip(&other.parities).map(|(a, b)| a ^ b).collect(),
        }
    }

    /// Canonical representative `unit · Π t_i^{ε_i}` in `level`.
    pub fn representative(&self, level: &FieldTower) -> FieldElement {
        let base_level = level.level(0).expect("base");
        let unit = match &self.base {
            BaseClass::Rational(n) => base_level.from_bigint(n),
            BaseClass::Finite(false) => base_level.one(),
            BaseClass::Finite(true) => base_level.from_int(least_nonresidue(level.characteristic()) as i64),
        };
        let mut acc = unit.lift_to(level).expect("base embeds");
        for (lvl, bit) in level.levels().iter().skip(1).zip(&self.parities) {
            if *bit == 1 {
                let t = lvl
                    .generator()
                    .expect("layer generator")
                    .lift_to(level)
                    .expect("embeds");
                acc = &acc * &t;
            }
        }
        acc
    }
}

impl fmt::Display for SquareClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.base {
            BaseClass::Rational(n) => write!(f, "[{n}")?,
            BaseClass::Finite(b) => write!(f, "[{}", if *b { "nonsquare" } else { "1" })?,
        }
        write!(f, "; ")?;
        for b in &self.parities {
            write!(f, "{b}")?;
        }
        write!(f, "]")
    }
}

/// Square class of a base unit.
pub fn base_square_class(e: &FieldElement) -> Result<BaseClass, FieldError> {
    match e.repr() {
        Repr::Rat(q) => {
            if q.is_zero() {
                return Err(FieldError::ZeroElement);
            }
            Ok(BaseClass::Rational(squarefree_part(&(q.numer() * q.denom()))))
        }
        Repr::Fp(v) => {
            if *v == 0 {
                return Err(FieldError::ZeroElement);
            }
            Ok(BaseClass::Finite(legendre(e.level().characteristic(), *v) == -1))
        }
        _ => Err(FieldError::UnsupportedLayer("not a base element".into())),
    }
}

/// Square class of `e`, reading rational-function layers through their
/// completion at the variable (so the class is that of the completion).
/// Quadratic layers are not supported.
pub(crate) fn completed_square_class(e: &FieldElement) -> Result<SquareClass, FieldError> {
    if e.is_zero() {
        return Err(FieldError::ZeroElement);
    }
    let mut bits = Vec::new();
    let mut cur = e.clone();
    while let Some(kind) = cur.level().kind() {
        if matches!(kind, LayerKind::Quadratic { .. }) {
            return Err(FieldError::UnsupportedLayer(format!(
                "square classes over the quadratic layer {}",
                kind.name()
            )));
        }
        let v = cur.valuation()?;
        bits.push(v.rem_euclid(2) as u8);
        cur = cur.unit_residue()?;
    }
    bits.reverse();
    Ok(SquareClass {
        base: base_square_class(&cur)?,
        parities: bits,
    })
}

/// Result of [`square_class_decompose`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquareClassDecomposition {
    pub unit: FieldElement,
    pub exponents: Vec<u8>,
    pub class: SquareClass,
}

impl SquareClassDecomposition {
    pub fn recompose(&self, level: &FieldTower) -> FieldElement {
        self.class.representative(level)
    }
}

/// Decompose `e` over a Laurent-only tower as `unit · Π t_i^{ε_i}` times a
/// square, with `unit` the canonical representative of its base class.
pub fn square_class_decompose(e: &FieldElement) -> Result<SquareClassDecomposition, FieldError> {
    if e.is_zero() {
        return Err(FieldError::ZeroElement);
    }
    if !e.level().laurent_only() {
        return Err(FieldError::UnsupportedLayer(format!(
            "square-class decomposition needs Laurent layers only, got {}",
            e.level()
        )));
    }
    let class = completed_square_class(e)?;
    let base = e.level().level(0).expect("base");
    let unit = class.representative(&base);
    let out = SquareClassDecomposition {
        unit,
        exponents: class.parities.clone(),
        class,
    };
    let ratio = e.checked_div(&out.recompose(e.level()))?;
    debug_assert!(is_square(&ratio)?, "recomposition differs by a non-square");
    Ok(out)
}

/// Norm `c² − r d²` of `e = c + d√r` from the quadratic level `k`.
pub fn quad_norm(k: &FieldTower, e: &FieldElement) -> Result<FieldElement, FieldError> {
    if !k.is_quadratic() {
        return Err(FieldError::NotQuadraticLayer(k.to_string()));
    }
    let e = e.lift_to(k)?;
    let (c, d) = e.quad_parts()?;
    let below = k.below().expect("quadratic level has a level below");
    let r = FieldElement::from_repr(below, k.radicand().expect("radicand").clone());
    Ok(&(&c * &c) - &(&r * &(&d * &d)))
}

pub(crate) fn legendre_symbol(p: u64, a: &BigInt) -> i32 {
    let m = a.mod_floor(&BigInt::from(p)).to_u64().expect("fits");
    legendre(p, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tonelli_matches_brute_force() {
        for p in [3u64, 5, 7, 11, 13, 17, 41, 97] {
            for a in 0..p {
                let brute = (0..p).find(|x| x * x % p == a);
                let got = fp_sqrt(p, a);
                assert_eq!(got.is_some(), brute.is_some(), "p={p} a={a}");
                if let Some(r) = got {
                    assert_eq!(r * r % p, a);
                    assert!(r <= (p - 1) / 2);
                }
            }
        }
    }

    #[test]
    fn squarefree_parts() {
        assert_eq!(squarefree_part(&BigInt::from(12)), BigInt::from(3));
        assert_eq!(squarefree_part(&BigInt::from(-50)), BigInt::from(-2));
        assert_eq!(squarefree_part(&BigInt::from(1)), BigInt::from(1));
        assert_eq!(squarefree_part(&BigInt::from(-1)), BigInt::from(-1));
    }

    #[test]
    fn small_squares() {
        let q = FieldTower::rationals();
        assert!(q.from_ratio(9, 4).is_square().unwrap());
        assert!(!q.from_int(-4).is_square().unwrap());
        let f7 = FieldTower::prime_field(7).unwrap();
        let squares: Vec<u64> = (1..7u64).map(|x| x * x % 7).collect();
        for a in 1..7 {
            assert_eq!(f7.from_int(a).is_square().unwrap(), squares.contains(&(a as u64)));
        }
        let qx = q.laurent("x").unwrap();
        let x = qx.generator().unwrap();
        assert!(!x.is_square().unwrap());
        let y = qx.parse("1+x").unwrap();
        assert!(y.is_square().unwrap());
        assert!(y.exact_sqrt().is_none());
        let sq = qx.parse("(1+x)^2/x^4").unwrap();
        assert_eq!(sq.exact_sqrt().unwrap(), qx.parse("(1+x)/x^2").unwrap());
    }

    #[test]
    fn ratfunc_squares() {
        let q = FieldTower::rationals().rational_function("a").unwrap();
        assert!(q.parse("4*(1+a)^2/(a-3)^2").unwrap().is_square().unwrap());
        assert!(!q.parse("1+a").unwrap().is_square().unwrap());
        assert!(!q.parse("2*(1+a)^2").unwrap().is_square().unwrap());
        let s = q.parse("(a^2+2*a+1)*9").unwrap().exact_sqrt().unwrap();
        assert_eq!(s, q.parse("3+3*a").unwrap());
    }

    #[test]
    fn quadratic_squares() {
        let q = FieldTower::rationals();
        let k = q.quadratic("w", &q.from_int(3)).unwrap();
        let e = k.parse("(1+w)^2").unwrap();
        assert!(e.is_square().unwrap());
        assert_eq!(e.exact_sqrt().unwrap().square(), e);
        assert!(k.parse("3").unwrap().is_square().unwrap());
        assert!(!k.parse("2").unwrap().is_square().unwrap());
        assert!(!k.parse("w").unwrap().is_square().unwrap());
        assert!(k.parse("12").unwrap().is_square().unwrap());
    }

    #[test]
    fn norms() {
        let q = FieldTower::rationals();
        let fx = q.laurent("x").unwrap();
        let x = fx.generator().unwrap();
        let kx = fx.quadratic("xi", &x).unwrap();
        let xi = kx.generator().unwrap();
        assert_eq!(quad_norm(&kx, &xi).unwrap(), -&x);
        assert_eq!(quad_norm(&kx, &kx.one()).unwrap(), fx.one());
        let k3 = q.quadratic("w", &q.from_int(3)).unwrap();
        assert_eq!(quad_norm(&k3, &k3.parse("2+w").unwrap()).unwrap(), q.one());
    }

    #[test]
    fn decompositions() {
        let f5 = FieldTower::prime_field(5).unwrap();
        let k = f5.laurent("t1").unwrap().laurent("t2").unwrap();
        let d = square_class_decompose(&k.parse("t1*t2*(1+t1)").unwrap()).unwrap();
        assert!(d.unit.is_one());
        assert_eq!(d.exponents, vec![1, 1]);
        let qx = FieldTower::rationals().laurent("x").unwrap();
        let d = square_class_decompose(&qx.from_int(7)).unwrap();
        assert_eq!(d.unit, qx.level(0).unwrap().from_int(7));
        assert_eq!(d.exponents, vec![0]);
        let d = square_class_decompose(&qx.parse("-x^3").unwrap()).unwrap();
        assert_eq!(d.unit, qx.level(0).unwrap().from_int(-1));
        assert_eq!(d.exponents, vec![1]);
        let qa = FieldTower::rationals().rational_function("a").unwrap();
        assert!(matches!(
            square_class_decompose(&qa.parse("a").unwrap()),
            Err(FieldError::UnsupportedLayer(_))
        ));
    }
}
