use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::BigRational;

use super::repr::{self, RatFn, Repr};
use super::tower::{FieldTower, LayerKind};
use super::FieldError;

/// An exact element of some level of a [`FieldTower`].
#[derive(Clone)]
pub struct FieldElement {
    pub(crate) level: FieldTower,
    pub(crate) repr: Repr,
}

fn lift_repr(from: &FieldTower, to: &FieldTower, r: Repr) -> Repr {
    if from.depth() == to.depth() {
        return r;
    }
    let below = to.below().expect("target above source");
    let inner = lift_repr(from, below, r);
    match to.kind().expect("non-base level") {
        LayerKind::Quadratic { .. } => Repr::Quad(Box::new(inner), Box::new(repr::zero(below))),
        _ => Repr::Frac(RatFn::monomial(below, 0, inner)),
    }
}

impl FieldElement {
    pub(crate) fn from_repr(level: &FieldTower, repr: Repr) -> Self {
        FieldElement {
            level: level.clone(),
            repr,
        }
    }

    pub fn level(&self) -> &FieldTower {
        &self.level
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn is_zero(&self) -> bool {
        repr::is_zero(&self.repr)
    }

    pub fn is_one(&self) -> bool {
        repr::is_one(&self.level, &self.repr)
    }

    /// Embed into a level above (or equal to) the current one.
    pub fn lift_to(&self, target: &FieldTower) -> Result<FieldElement, FieldError> {
        if !self.level.is_subfield_of(target) {
            return Err(FieldError::TowerMismatch {
                left: self.level.to_string(),
                right: target.to_string(),
            });
        }
        Ok(FieldElement::from_repr(
            target,
            lift_repr(&self.level, target, self.repr.clone()),
        ))
    }

    /// Common level of two operands, lifting the lower one.
    pub(crate) fn unify(a: &FieldElement, b: &FieldElement) -> Result<(FieldTower, Repr, Repr), FieldError> {
        if a.level.depth() >= b.level.depth() {
            let rb = b.lift_to(&a.level)?;
            Ok((a.level.clone(), a.repr.clone(), rb.repr))
        } else {
            let ra = a.lift_to(&b.level)?;
            Ok((b.level.clone(), ra.repr, b.repr.clone()))
        }
    }

    pub fn try_add(&self, other: &FieldElement) -> Result<FieldElement, FieldError> {
        let (l, a, b) = Self::unify(self, other)?;
        let r = repr::add(&l, &a, &b);
        Ok(FieldElement::from_repr(&l, r))
    }

    pub fn try_mul(&self, other: &FieldElement) -> Result<FieldElement, FieldError> {
        let (l, a, b) = Self::unify(self, other)?;
        let r = repr::mul(&l, &a, &b);
        Ok(FieldElement::from_repr(&l, r))
    }

    pub fn inv(&self) -> Result<FieldElement, FieldError> {
        if self.is_zero() {
            return Err(FieldError::ZeroElement);
        }
        Ok(FieldElement::from_repr(&self.level, repr::inv(&self.level, &self.repr)))
    }

    pub fn checked_div(&self, other: &FieldElement) -> Result<FieldElement, FieldError> {
        let (l, a, b) = Self::unify(self, other)?;
        if repr::is_zero(&b) {
            return Err(FieldError::ZeroElement);
        }
        Ok(FieldElement::from_repr(&l, repr::div(&l, &a, &b)))
    }

    pub fn pow(&self, e: i64) -> FieldElement {
        assert!(e >= 0 || !self.is_zero(), "negative power of zero");
        FieldElement::from_repr(&self.level, repr::pow(&self.level, &self.repr, e))
    }

    pub fn square(&self) -> FieldElement {
        self * self
    }

    pub fn scale_int(&self, n: i64) -> FieldElement {
        self * &self.level.from_int(n)
    }

    /// Valuation at the top layer of this element's level, which must be a
    /// Laurent or rational-function layer.
    pub fn valuation(&self) -> Result<i64, FieldError> {
        match &self.repr {
            Repr::Frac(f) => f.valuation().ok_or(FieldError::ZeroElement),
            _ => Err(FieldError::NotLaurentLayer(self.level.to_string())),
        }
    }

    /// Valuation and (for valuation zero) residue with respect to the layer at
    /// `depth`. The element must lie in that level (lifted lower elements are
    /// fine; higher levels are rejected).
    pub fn valuation_and_residue(&self, depth: usize) -> Result<(i64, Option<FieldElement>), FieldError> {
        if self.is_zero() {
            return Err(FieldError::ZeroElement);
        }
        let layer = self
            .level
            .level(depth)
            .ok_or_else(|| FieldError::NotLaurentLayer(format!("depth {depth}")))?;
        if !layer.is_laurent() {
            return Err(FieldError::NotLaurentLayer(layer.to_string()));
        }
        if self.level.depth() != depth {
            return Err(FieldError::TowerMismatch {
                left: self.level.to_string(),
                right: layer.to_string(),
            });
        }
        let v = self.valuation()?;
        if v == 0 {
            Ok((0, Some(self.unit_residue()?)))
        } else {
            Ok((v, None))
        }
    }

    /// Residue of `e · t^{-v(e)}` in the level below.
    pub fn unit_residue(&self) -> Result<FieldElement, FieldError> {
        match &self.repr {
            Repr::Frac(f) => {
                let c = f.leading().ok_or(FieldError::ZeroElement)?;
                let below = self.level.below().expect("layer has a level below");
                Ok(FieldElement::from_repr(below, c.clone()))
            }
            _ => Err(FieldError::NotLaurentLayer(self.level.to_string())),
        }
    }

    /// Coefficient of `t^k` in the series expansion at the top layer.
    pub fn coefficient(&self, k: i64) -> Result<FieldElement, FieldError> {
        let below = self
            .level
            .below()
            .ok_or_else(|| FieldError::NotLaurentLayer(self.level.to_string()))?;
        match &self.repr {
            Repr::Frac(f) => {
                if f.is_zero() || k < f.shift {
                    return Ok(below.zero());
                }
                let idx = (k - f.shift) as usize;
                let coeffs = series_coefficients(below, f, idx + 1);
                Ok(FieldElement::from_repr(below, coeffs[idx].clone()))
            }
            _ => Err(FieldError::NotLaurentLayer(self.level.to_string())),
        }
    }

    /// For a quadratic level `k(√r)`, the pair `(c, d)` with `self = c + d√r`.
    pub fn quad_parts(&self) -> Result<(FieldElement, FieldElement), FieldError> {
        match &self.repr {
            Repr::Quad(c, d) => {
                let below = self.level.below().expect("quadratic level has a level below");
                Ok((
                    FieldElement::from_repr(below, (**c).clone()),
                    FieldElement::from_repr(below, (**d).clone()),
                ))
            }
            _ => Err(FieldError::NotQuadraticLayer(self.level.to_string())),
        }
    }

    /// Conjugation `c + d√r ↦ c − d√r` of a quadratic level.
    pub fn quad_conjugate(&self) -> Result<FieldElement, FieldError> {
        let (c, d) = self.quad_parts()?;
        Ok(FieldElement::from_repr(
            &self.level,
            Repr::Quad(Box::new(c.repr), Box::new((-&d).repr)),
        ))
    }

    /// Rational value of a base-level element over ℚ.
    pub fn as_rational(&self) -> Option<BigRational> {
        match &self.repr {
            Repr::Rat(q) => Some(q.clone()),
            _ => None,
        }
    }

    pub fn as_fp(&self) -> Option<u64> {
        match &self.repr {
            Repr::Fp(v) => Some(*v),
            _ => None,
        }
    }

    /// Try to view the element as an element of a level below (after
    /// canonical form this is a structural check).
    pub fn descend_to(&self, target: &FieldTower) -> Option<FieldElement> {
        if !target.is_subfield_of(&self.level) {
            return None;
        }
        let mut cur = self.clone();
        while cur.level.depth() > target.depth() {
            let below = cur.level.below()?.clone();
            let inner = match &cur.repr {
                Repr::Frac(f) => {
                    if f.is_zero() {
                        repr::zero(&below)
                    } else if f.shift == 0 && f.num.len() == 1 && f.den.len() == 1 {
                        f.num[0].clone()
                    } else {
                        return None;
                    }
                }
                Repr::Quad(c, d) if repr::is_zero(d) => (**c).clone(),
                _ => return None,
            };
            cur = FieldElement::from_repr(&below, inner);
        }
        Some(cur)
    }

    /// Total-order key used for deterministic choices.
    pub fn order_key(&self) -> &Repr {
        &self.repr
    }

    /// Substitute rational values for rational-function variables, producing
    /// an element of `target`, which must be `self.level()` with exactly those
    /// layers removed.
    pub fn specialize(
        &self,
        target: &FieldTower,
        values: &[(String, BigRational)],
    ) -> Result<FieldElement, FieldError> {
        specialize_repr(&self.level, &self.repr, target, values)
    }
}

pub(crate) fn series_coefficients(below: &FieldTower, f: &RatFn, count: usize) -> Vec<Repr> {
    // num/den as a power series; den(0) = 1.
    let mut q: Vec<Repr> = Vec::with_capacity(count);
    for k in 0..count {
        let mut acc = f.num.get(k).cloned().unwrap_or_else(|| repr::zero(below));
        for i in 1..=k.min(f.den.len().saturating_sub(1)) {
            acc = repr::sub(below, &acc, &repr::mul(below, &f.den[i], &q[k - i]));
        }
        q.push(acc);
    }
    q
}

fn specialize_repr(
    from: &FieldTower,
    r: &Repr,
    target: &FieldTower,
    values: &[(String, BigRational)],
) -> Result<FieldElement, FieldError> {
    match from.kind() {
        None => {
            // Base levels must agree.
            let base = target.level(0).expect("every tower has a base");
            if *from != base {
                return Err(FieldError::TowerMismatch {
                    left: from.to_string(),
                    right: base.to_string(),
                });
            }
            FieldElement::from_repr(from, r.clone()).lift_to(target)
        }
        Some(kind) => {
            let below = from.below().expect("layer has a level below");
            // Level of `target` corresponding to `below`.
            let removed = values.iter().filter(|(n, _)| target.depth_of(n).is_none()).count();
            let _ = removed;
            let sub = |c: &Repr| -> Result<FieldElement, FieldError> {
                let tb = matching_level(below, target, values)?;
                specialize_repr(below, c, &tb, values)?.lift_to(target)
            };
            match (kind, r) {
                (LayerKind::Quadratic { name, .. }, Repr::Quad(c, d)) => {
                    let g = target
                        .gen_named(name)
                        .ok_or_else(|| FieldError::UnknownName(name.clone()))?;
                    Ok(&sub(c)? + &(&sub(d)? * &g))
                }
                (LayerKind::RationalFunction { name } | LayerKind::Laurent { name }, Repr::Frac(f)) => {
                    let var = match values.iter().find(|(n, _)| n == name) {
                        Some((_, v)) => {
                            if !matches!(kind, LayerKind::RationalFunction { .. }) {
                                return Err(FieldError::UnsupportedLayer(format!(
                                    "cannot specialize Laurent variable {name}"
                                )));
                            }
                            let base = target.level(0).expect("base");
                            FieldElement::from_repr(&base, repr::zero(&base)).lift_to(target)? + rational_in(target, v)
                        }
                        None => target
                            .gen_named(name)
                            .ok_or_else(|| FieldError::UnknownName(name.clone()))?,
                    };
                    let eval = |p: &[Repr]| -> Result<FieldElement, FieldError> {
                        let mut acc = target.zero();
                        for c in p.iter().rev() {
                            acc = &(&acc * &var) + &sub(c)?;
                        }
                        Ok(acc)
                    };
                    if f.is_zero() {
                        return Ok(target.zero());
                    }
                    let n = eval(&f.num)?;
                    let d = eval(&f.den)?;
                    if d.is_zero() {
                        return Err(FieldError::SpecializationPole(name.clone()));
                    }
                    if var.is_zero() && f.shift < 0 {
                        return Err(FieldError::SpecializationPole(name.clone()));
                    }
                    let vs = var.pow(f.shift);
                    Ok(&(&n * &vs) / &d)
                }
                _ => unreachable!("representation does not match layer"),
            }
        }
    }
}

fn matching_level(
    below: &FieldTower,
    target: &FieldTower,
    values: &[(String, BigRational)],
) -> Result<FieldTower, FieldError> {
    // Count layers of `below` that survive specialization.
    let kept = below
        .levels()
        .iter()
        .skip(1)
        .filter(|l| {
            let n = l.kind().unwrap().name();
            !values.iter().any(|(v, _)| v == n)
        })
        .count();
    target.level(kept).ok_or_else(|| FieldError::TowerMismatch {
        left: below.to_string(),
        right: target.to_string(),
    })
}

fn rational_in(l: &FieldTower, q: &BigRational) -> FieldElement {
    &l.from_bigint(q.numer()) / &l.from_bigint(q.denom())
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        match FieldElement::unify(self, other) {
            Ok((_, a, b)) => a == b,
            Err(_) => false,
        }
    }
}

impl Eq for FieldElement {}

impl Hash for FieldElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.level.depth().hash(state);
        self.repr.hash(state);
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:path) => {
        impl $tr<&FieldElement> for &FieldElement {
            type Output = FieldElement;
            fn $m(self, rhs: &FieldElement) -> FieldElement {
                let (l, a, b) = FieldElement::unify(self, rhs).expect("operands from unrelated fields");
                let r = $f(&l, &a, &b);
                FieldElement::from_repr(&l, r)
            }
        }
        impl $tr<FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $m(self, rhs: FieldElement) -> FieldElement {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $m(self, rhs: &FieldElement) -> FieldElement {
                (&self).$m(rhs)
            }
        }
        impl $tr<FieldElement> for &FieldElement {
            type Output = FieldElement;
            fn $m(self, rhs: FieldElement) -> FieldElement {
                self.$m(&rhs)
            }
        }
    };
}

binop!(Add, add, repr::add);
binop!(Sub, sub, repr::sub);
binop!(Mul, mul, repr::mul);

fn div_repr(l: &FieldTower, a: &Repr, b: &Repr) -> Repr {
    repr::div(l, a, b)
}
binop!(Div, div, div_repr);

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement::from_repr(&self.level, repr::neg(&self.level, &self.repr))
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}

// ---------------------------------------------------------------------------
// Display

fn fmt_repr(l: &FieldTower, r: &Repr, f: &mut String) {
    match r {
        Repr::Rat(q) => {
            if q.is_integer() {
                f.push_str(&q.numer().to_string());
            } else {
                f.push_str(&format!("{}/{}", q.numer(), q.denom()));
            }
        }
        Repr::Fp(v) => f.push_str(&v.to_string()),
        Repr::Frac(rf) => {
            let below = l.below().unwrap();
            let name = l.kind().unwrap().name();
            if rf.is_zero() {
                f.push('0');
                return;
            }
            let num = fmt_poly(below, &rf.num, name, rf.shift.max(0));
            let mut den_shift = 0;
            if rf.shift < 0 {
                den_shift = -rf.shift;
            }
            let den_is_one = rf.den.len() == 1 && repr::is_one(below, &rf.den[0]);
            if den_is_one && den_shift == 0 {
                f.push_str(&num);
            } else {
                let den = fmt_poly(below, &rf.den, name, den_shift);
                f.push_str(&format!("({num})/({den})"));
            }
        }
        Repr::Quad(c, d) => {
            let below = l.below().unwrap();
            let name = l.kind().unwrap().name();
            let mut sc = String::new();
            fmt_repr(below, c, &mut sc);
            let mut sd = String::new();
            fmt_repr(below, d, &mut sd);
            match (repr::is_zero(c), repr::is_zero(d)) {
                (_, true) => f.push_str(&sc),
                (true, false) => f.push_str(&format!("({sd})*{name}")),
                (false, false) => f.push_str(&format!("{sc} + ({sd})*{name}")),
            }
        }
    }
}

fn fmt_poly(below: &FieldTower, p: &[Repr], name: &str, shift: i64) -> String {
    let mut terms = Vec::new();
    for (i, c) in p.iter().enumerate() {
        if repr::is_zero(c) {
            continue;
        }
        let e = i as i64 + shift;
        let mut s = String::new();
        fmt_repr(below, c, &mut s);
        let needs_paren = s.contains(' ') || s.contains('/') && e != 0;
        let cs = if needs_paren { format!("({s})") } else { s.clone() };
        let term = match e {
            0 => cs,
            _ => {
                let mono = if e == 1 {
                    name.to_string()
                } else {
                    format!("{name}^{e}")
                };
                if repr::is_one(below, c) {
                    mono
                } else {
                    format!("{cs}*{mono}")
                }
            }
        };
        terms.push(term);
    }
    if terms.is_empty() {
        "0".to_string()
    } else {
        terms.join(" + ")
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        fmt_repr(&self.level, &self.repr, &mut s);
        f.write_str(&s)
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} in {}", self, self.level)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::TowerDescriptor;

    #[test]
    fn valuations_and_residues() {
        let qx = FieldTower::rationals().laurent("x").unwrap();
        let x = qx.generator().unwrap();
        assert_eq!(x.valuation_and_residue(1).unwrap(), (1, None));
        let e = qx.parse("(1+x)/x^2").unwrap();
        assert_eq!(e.valuation_and_residue(1).unwrap(), (-2, None));
        let e = qx.parse("3+x").unwrap();
        let (v, r) = e.valuation_and_residue(1).unwrap();
        assert_eq!(v, 0);
        assert_eq!(r.unwrap(), qx.level(0).unwrap().from_int(3));
        assert_eq!(qx.zero().valuation_and_residue(1), Err(FieldError::ZeroElement));
    }

    #[test]
    fn arithmetic_is_canonical() {
        let k = FieldTower::prime_field(5)
            .unwrap()
            .laurent("s")
            .unwrap()
            .laurent("u")
            .unwrap();
        let a = k.parse("(s+u)/(1-s*u)").unwrap();
        let b = k.parse("u^2/(1+s)").unwrap();
        let lhs = &(&a + &b) * &(&a - &b);
        let rhs = &(&a * &a) - &(&b * &b);
        assert_eq!(lhs, rhs);
        assert_eq!(lhs.repr(), rhs.repr());
        assert_eq!(&(&a / &b) * &b, a);
    }

    #[test]
    fn lifting_and_descent() {
        let q = FieldTower::rationals();
        let k = q.laurent("x").unwrap().laurent("y").unwrap();
        let three = q.from_int(3);
        let up = three.lift_to(&k).unwrap();
        assert_eq!(up.descend_to(&q).unwrap(), three);
        assert!(k.generator().unwrap().descend_to(&q).is_none());
        assert_eq!(&three + &k.generator().unwrap(), k.parse("3+y").unwrap());
    }

    #[test]
    fn coefficients_of_expansion() {
        let qx = FieldTower::rationals().laurent("x").unwrap();
        let q = qx.level(0).unwrap();
        let e = qx.parse("1/(1-x)").unwrap();
        for k in 0..5 {
            assert_eq!(e.coefficient(k).unwrap(), q.one());
        }
        assert_eq!(e.coefficient(-1).unwrap(), q.zero());
    }

    #[test]
    fn specialization() {
        let k = FieldTower::rationals()
            .rational_function("a1")
            .unwrap()
            .rational_function("a2")
            .unwrap();
        let e = k.parse("a1*((1-a1)^2*(1+a2)^2-4*(1-a1)*a2)").unwrap();
        let q = FieldTower::rationals();
        let vals = vec![
            ("a1".to_string(), BigRational::from_integer(2.into())),
            ("a2".to_string(), BigRational::from_integer(3.into())),
        ];
        assert_eq!(e.specialize(&q, &vals).unwrap(), q.from_int(56));
        let vals1 = vec![("a2".to_string(), BigRational::from_integer(3.into()))];
        let k1 = FieldTower::rationals().rational_function("a1").unwrap();
        let got = e.specialize(&k1, &vals1).unwrap();
        assert_eq!(got, k1.parse("a1*((1-a1)^2*16-12*(1-a1))").unwrap());
    }

    #[test]
    fn descriptors_round_trip() {
        let json = r#"{"base":{"Fp":5},"layers":[{"kind":"laurent","name":"s"},{"kind":"quadext","radicand":"s"}]}"#;
        let d: TowerDescriptor = serde_json::from_str(json).unwrap();
        let t = FieldTower::from_descriptor(&d).unwrap();
        assert_eq!(t.depth(), 2);
        let back = FieldTower::from_descriptor(&t.descriptor()).unwrap();
        assert_eq!(back, t);
        let q: TowerDescriptor = serde_json::from_str(r#"{"base":"Q"}"#).unwrap();
        assert_eq!(FieldTower::from_descriptor(&q).unwrap(), FieldTower::rationals());
        let bad = r#"{"base":"Q","layers":[{"kind":"quadext","radicand":4}]}"#;
        let d: TowerDescriptor = serde_json::from_str(bad).unwrap();
        assert!(matches!(
            FieldTower::from_descriptor(&d),
            Err(FieldError::SquareRadicand(_))
        ));
        let two: TowerDescriptor = serde_json::from_str(r#"{"base":{"Fp":2}}"#).unwrap();
        assert_eq!(FieldTower::from_descriptor(&two), Err(FieldError::BadCharacteristic(2)));
    }

    #[test]
    fn expressions_round_trip() {
        let k = FieldTower::rationals().laurent("x").unwrap();
        let k = k.quadratic("xi", &k.generator().unwrap()).unwrap();
        for text in ["(1+x)/x^2 + 3*xi", "-7/3", "xi*x^-2 - 1"] {
            let e = k.parse(text).unwrap();
            let ex = crate::field::Expr::from_element(&e);
            let json = serde_json::to_string(&ex).unwrap();
            let back: crate::field::Expr = serde_json::from_str(&json).unwrap();
            assert_eq!(back.eval(&k).unwrap(), e, "{text} via {json}");
        }
    }
}
