//! Quaternion algebras `(a, b)` over a tower level and their elements.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brauer::{self, BrauerError};
use crate::field::{random_element, Expr, FieldElement, FieldError, FieldTower, LayerKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuatError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Brauer(#[from] BrauerError),
    #[error("symbol entries must be nonzero")]
    ZeroEntry,
    #[error("element has zero reduced norm and no inverse")]
    ZeroDivisorInverse,
    #[error("quaternion is not pure")]
    NotPure,
    #[error("operands belong to different quaternion algebras")]
    AlgebraMismatch,
    #[error("the algebra is split")]
    SplitAlgebra,
    #[error("no construction found within bound {bound}")]
    ConstructionNotFound { bound: String },
}

struct AlgebraData {
    level: FieldTower,
    a: FieldElement,
    b: FieldElement,
}

/// The quaternion algebra with basis `1, i, j, ij`, `i² = a`, `j² = b`, `ij = −ji`.
#[derive(Clone)]
pub struct QuaternionAlgebra(Arc<AlgebraData>);

impl QuaternionAlgebra {
    pub fn new(level: &FieldTower, a: &FieldElement, b: &FieldElement) -> Result<Self, QuatError> {
        let a = a.lift_to(level)?;
        let b = b.lift_to(level)?;
        if a.is_zero() || b.is_zero() {
            return Err(QuatError::ZeroEntry);
        }
        Ok(QuaternionAlgebra(Arc::new(AlgebraData {
            level: level.clone(),
            a,
            b,
        })))
    }

    pub fn level(&self) -> &FieldTower {
        &self.0.level
    }

    pub fn a(&self) -> &FieldElement {
        &self.0.a
    }

    pub fn b(&self) -> &FieldElement {
        &self.0.b
    }

    /// The same symbol over a larger level of the tower.
    pub fn extend_to(&self, level: &FieldTower) -> Result<Self, QuatError> {
        QuaternionAlgebra::new(level, &self.0.a, &self.0.b)
    }

    pub fn element(&self, coords: [FieldElement; 4]) -> Result<QuaternionElement, QuatError> {
        let c = coords
            .into_iter()
            .map(|x| x.lift_to(&self.0.level))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(QuaternionElement {
            alg: self.clone(),
            c: c.try_into().expect("four coordinates"),
        })
    }

    pub fn scalar(&self, x: &FieldElement) -> QuaternionElement {
        let z = self.0.level.zero();
        self.element([x.clone(), z.clone(), z.clone(), z])
            .expect("scalar in level")
    }

    pub fn zero(&self) -> QuaternionElement {
        self.scalar(&self.0.level.zero())
    }

    pub fn one(&self) -> QuaternionElement {
        self.scalar(&self.0.level.one())
    }

    fn unit_vector(&self, k: usize) -> QuaternionElement {
        let l = &self.0.level;
        let mut c = [l.zero(), l.zero(), l.zero(), l.zero()];
        c[k] = l.one();
        QuaternionElement { alg: self.clone(), c }
    }

    pub fn i(&self) -> QuaternionElement {
        self.unit_vector(1)
    }

    pub fn j(&self) -> QuaternionElement {
        self.unit_vector(2)
    }

    pub fn ij(&self) -> QuaternionElement {
        self.unit_vector(3)
    }

    /// Parse a quaternion written as four coordinate expressions.
    pub fn parse_coords(&self, coords: [&str; 4]) -> Result<QuaternionElement, QuatError> {
        let l = &self.0.level;
        self.element([
            l.parse(coords[0])?,
            l.parse(coords[1])?,
            l.parse(coords[2])?,
            l.parse(coords[3])?,
        ])
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R, height: i64) -> QuaternionElement {
        let l = &self.0.level;
        let c = [
            random_element(l, rng, height),
            random_element(l, rng, height),
            random_element(l, rng, height),
            random_element(l, rng, height),
        ];
        QuaternionElement { alg: self.clone(), c }
    }

    pub fn random_pure<R: Rng + ?Sized>(&self, rng: &mut R, height: i64) -> QuaternionElement {
        let mut q = self.random(rng, height);
        q.c[0] = self.0.level.zero();
        q
    }

    pub fn is_split(&self) -> Result<bool, QuatError> {
        let c = brauer::symbol_class(&self.0.a, &self.0.b)?;
        Ok(c.is_split()?)
    }
}

impl PartialEq for QuaternionAlgebra {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.level == other.0.level && self.0.a == other.0.a && self.0.b == other.0.b)
    }
}

impl Eq for QuaternionAlgebra {}

impl fmt::Debug for QuaternionAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}) over {}", self.0.a, self.0.b, self.0.level)
    }
}

impl fmt::Display for QuaternionAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// `x₀ + x₁ i + x₂ j + x₃ ij`.
#[derive(Clone, PartialEq, Eq)]
pub struct QuaternionElement {
    alg: QuaternionAlgebra,
    c: [FieldElement; 4],
}

impl QuaternionElement {
    pub fn algebra(&self) -> &QuaternionAlgebra {
        &self.alg
    }

    pub fn coords(&self) -> &[FieldElement; 4] {
        &self.c
    }

    pub fn coord(&self, k: usize) -> &FieldElement {
        &self.c[k]
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(FieldElement::is_zero)
    }

    pub fn is_pure(&self) -> bool {
        self.c[0].is_zero()
    }

    pub fn is_scalar(&self) -> bool {
        self.c[1..].iter().all(FieldElement::is_zero)
    }

    /// The scalar value if the element is central.
    pub fn as_scalar(&self) -> Option<FieldElement> {
        self.is_scalar().then(|| self.c[0].clone())
    }

    fn check(&self, other: &Self) {
        assert!(self.alg == other.alg, "quaternions from different algebras");
    }

    pub fn conj(&self) -> QuaternionElement {
        QuaternionElement {
            alg: self.alg.clone(),
            c: [self.c[0].clone(), -&self.c[1], -&self.c[2], -&self.c[3]],
        }
    }

    /// `x₀² − a x₁² − b x₂² + ab x₃²`.
    pub fn nrd(&self) -> FieldElement {
        let (a, b) = (self.alg.a(), self.alg.b());
        let [x0, x1, x2, x3] = &self.c;
        let t0 = x0.square();
        let t1 = a * &x1.square();
        let t2 = b * &x2.square();
        let t3 = &(a * b) * &x3.square();
        &(&(&t0 - &t1) - &t2) + &t3
    }

    pub fn trd(&self) -> FieldElement {
        &self.c[0] + &self.c[0]
    }

    pub fn inv(&self) -> Result<QuaternionElement, QuatError> {
        let n = self.nrd();
        if n.is_zero() {
            return Err(QuatError::ZeroDivisorInverse);
        }
        Ok(self.conj().scale(&n.inv()?))
    }

    pub fn scale(&self, s: &FieldElement) -> QuaternionElement {
        QuaternionElement {
            alg: self.alg.clone(),
            c: [&self.c[0] * s, &self.c[1] * s, &self.c[2] * s, &self.c[3] * s],
        }
    }

    /// `q²` for a pure `q`: `a x₁² + b x₂² − ab x₃²`.
    pub fn pure_square(&self) -> Result<FieldElement, QuatError> {
        if !self.is_pure() {
            return Err(QuatError::NotPure);
        }
        Ok(-&self.nrd())
    }

    /// The same element in the algebra extended to a larger level.
    pub fn lift_to(&self, alg: &QuaternionAlgebra) -> Result<QuaternionElement, QuatError> {
        let l = alg.level();
        Ok(QuaternionElement {
            alg: alg.clone(),
            c: [
                self.c[0].lift_to(l)?,
                self.c[1].lift_to(l)?,
                self.c[2].lift_to(l)?,
                self.c[3].lift_to(l)?,
            ],
        })
    }

    /// Apply a map to every coordinate, landing in `alg`.
    pub fn map_coords<F>(&self, alg: &QuaternionAlgebra, f: F) -> Result<QuaternionElement, QuatError>
    where
        F: Fn(&FieldElement) -> Result<FieldElement, FieldError>,
    {
        let c = [f(&self.c[0])?, f(&self.c[1])?, f(&self.c[2])?, f(&self.c[3])?];
        alg.element(c)
    }

    pub fn to_exprs(&self) -> [Expr; 4] {
        [
            Expr::from_element(&self.c[0]),
            Expr::from_element(&self.c[1]),
            Expr::from_element(&self.c[2]),
            Expr::from_element(&self.c[3]),
        ]
    }
}

impl fmt::Display for QuaternionElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["", "i", "j", "ij"];
        let mut parts = Vec::new();
        for (k, x) in self.c.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            if k == 0 {
                parts.push(format!("{x}"));
            } else if x.is_one() {
                parts.push(names[k].to_string());
            } else {
                parts.push(format!("({x})*{}", names[k]));
            }
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl fmt::Debug for QuaternionElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Add<&QuaternionElement> for &QuaternionElement {
    type Output = QuaternionElement;
    fn add(self, o: &QuaternionElement) -> QuaternionElement {
        self.check(o);
        QuaternionElement {
            alg: self.alg.clone(),
            c: [
                &self.c[0] + &o.c[0],
                &self.c[1] + &o.c[1],
                &self.c[2] + &o.c[2],
                &self.c[3] + &o.c[3],
            ],
        }
    }
}

impl Sub<&QuaternionElement> for &QuaternionElement {
    type Output = QuaternionElement;
    fn sub(self, o: &QuaternionElement) -> QuaternionElement {
        self.check(o);
        QuaternionElement {
            alg: self.alg.clone(),
            c: [
                &self.c[0] - &o.c[0],
                &self.c[1] - &o.c[1],
                &self.c[2] - &o.c[2],
                &self.c[3] - &o.c[3],
            ],
        }
    }
}

impl Neg for &QuaternionElement {
    type Output = QuaternionElement;
    fn neg(self) -> QuaternionElement {
        QuaternionElement {
            alg: self.alg.clone(),
            c: [-&self.c[0], -&self.c[1], -&self.c[2], -&self.c[3]],
        }
    }
}

impl Mul<&QuaternionElement> for &QuaternionElement {
    type Output = QuaternionElement;
    fn mul(self, o: &QuaternionElement) -> QuaternionElement {
        self.check(o);
        let (a, b) = (self.alg.a(), self.alg.b());
        let [x0, x1, x2, x3] = &self.c;
        let [y0, y1, y2, y3] = &o.c;
        let ab = a * b;
        let z0 = &(&(&(x0 * y0) + &(a * &(x1 * y1))) + &(b * &(x2 * y2))) - &(&ab * &(x3 * y3));
        let z1 = &(&(&(x0 * y1) + &(x1 * y0)) - &(b * &(x2 * y3))) + &(b * &(x3 * y2));
        let z2 = &(&(&(x0 * y2) + &(x2 * y0)) + &(a * &(x1 * y3))) - &(a * &(x3 * y1));
        let z3 = &(&(&(x0 * y3) + &(x3 * y0)) + &(x1 * y2)) - &(x2 * y1);
        QuaternionElement {
            alg: self.alg.clone(),
            c: [z0, z1, z2, z3],
        }
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl $tr<QuaternionElement> for QuaternionElement {
            type Output = QuaternionElement;
            fn $m(self, o: QuaternionElement) -> QuaternionElement {
                (&self).$m(&o)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

/// JSON form of a quaternion element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuaternionJson {
    pub algebra: [Expr; 2],
    pub coords: [Expr; 4],
}

impl From<&QuaternionElement> for QuaternionJson {
    fn from(q: &QuaternionElement) -> Self {
        QuaternionJson {
            algebra: [Expr::from_element(q.alg.a()), Expr::from_element(q.alg.b())],
            coords: q.to_exprs(),
        }
    }
}

// ---------------------------------------------------------------------------
// Searches

/// Values of height at most `bound` in `level`: base values `p/q` with
/// `|p|, q ≤ bound` (all of `𝔽_p`, by centred representative), multiplied by
/// monomials `Π g^e` in the valued-layer generators with `|e| ≤ 1`, and
/// `c + d√r` combinations at quadratic layers. Sorted by height, then a fixed
/// order, with zero first.
pub fn value_grid(level: &FieldTower, bound: i64) -> Vec<(i64, FieldElement)> {
    let mut out: Vec<(i64, FieldElement)> = Vec::new();
    let base = level.level(0).expect("base");
    let mut base_vals: Vec<(i64, FieldElement)> = vec![(0, base.zero())];
    match base.base() {
        crate::field::BaseField::Rationals => {
            for h in 1..=bound {
                for q in 1..=h {
                    for p in 1..=h {
                        if p.max(q) != h || num_integer::gcd(p, q) != 1 {
                            continue;
                        }
                        base_vals.push((h, base.from_ratio(p, q)));
                        base_vals.push((h, base.from_ratio(-p, q)));
                    }
                }
            }
        }
        crate::field::BaseField::PrimeField(p) => {
            let p = *p as i64;
            for v in 1..=((p - 1) / 2).min(bound) {
                base_vals.push((v, base.from_int(v)));
                base_vals.push((v, base.from_int(-v)));
            }
        }
    }
    let mut cur: Vec<(i64, FieldElement)> = base_vals;
    for lvl in level.levels().iter().skip(1) {
        let g = lvl.generator().expect("generator");
        let mut next: Vec<(i64, FieldElement)> = Vec::new();
        match lvl.kind().expect("layer") {
            LayerKind::Quadratic { .. } => {
                for (h1, c) in &cur {
                    for (h2, d) in &cur {
                        let e = &c.lift_to(lvl).expect("embeds") + &(&d.lift_to(lvl).expect("embeds") * &g);
                        next.push(((*h1).max(*h2), e));
                    }
                }
            }
            _ => {
                for e in [0i64, 1, -1] {
                    let m = g.pow(e);
                    for (h, c) in &cur {
                        if c.is_zero() && e != 0 {
                            continue;
                        }
                        next.push(((*h).max(e.abs()), &c.lift_to(lvl).expect("embeds") * &m));
                    }
                }
            }
        }
        next.retain(|(h, _)| *h <= bound);
        cur = next;
    }
    out.extend(cur.into_iter().map(|(h, e)| (h, e.lift_to(level).expect("embeds"))));
    out.sort_by_key(|(h, _)| *h);
    out
}

/// A pure quaternion `x₁ i + x₂ j + x₃ ij` with square `λ`, with `x₁, x₃`
/// from [`value_grid`] at height `≤ bound` and `x₂` solved exactly from
/// `b x₂² = λ − a x₁² + ab x₃²`. Candidates are tried by height, then by the
/// number of nonzero coordinates, then by grid position. `None` only
/// certifies that this grid was exhausted.
pub fn find_pure_with_square(q: &QuaternionAlgebra, lambda: &FieldElement, bound: i64) -> Option<QuaternionElement> {
    let l = q.level();
    let lambda = lambda.lift_to(l).ok()?;
    if lambda.is_zero() {
        return None;
    }
    let grid = value_grid(l, bound);
    let mut pairs: Vec<(i64, usize, usize, usize)> = Vec::new();
    for (i1, (h1, x1)) in grid.iter().enumerate() {
        for (i3, (h3, x3)) in grid.iter().enumerate() {
            let nz = (!x1.is_zero()) as usize + (!x3.is_zero()) as usize;
            pairs.push(((*h1).max(*h3), nz, i3, i1));
        }
    }
    pairs.sort();
    let (a, b) = (q.a(), q.b());
    let ab = a * b;
    for (_, _, i3, i1) in pairs {
        let x1 = &grid[i1].1;
        let x3 = &grid[i3].1;
        let rhs = &(&(&lambda - &(a * &x1.square())) + &(&ab * &x3.square())) / b;
        if let Some(x2) = rhs.exact_sqrt() {
            let cand = q.element([l.zero(), x1.clone(), x2, x3.clone()]).ok()?;
            if cand.pure_square().ok()? == lambda && !cand.is_zero() {
                return Some(cand);
            }
        }
    }
    None
}

/// Result of [`qmt_pure_triple`].
#[derive(Debug, Clone)]
pub struct PureTriple {
    pub algebra: QuaternionAlgebra,
    pub q1: QuaternionElement,
    pub q2: QuaternionElement,
    pub q3: QuaternionElement,
    pub a3: FieldElement,
    /// Search stage and candidate count at which `q3` was found.
    pub stage: usize,
    pub tried: usize,
}

/// `a₁((1−a₁)²(1+a₂)² − 4(1−a₁)a₂)`.
pub fn qmt_target(a1: &FieldElement, a2: &FieldElement) -> FieldElement {
    let l = a1.level();
    let one = l.one();
    let om = &one - a1;
    let op = &one + a2;
    let four = l.from_int(4);
    a1 * &(&(&om.square() * &op.square()) - &(&four * &(&om * a2)))
}

/// Pure quaternions `q₁ = i`, `q₂ = j` and `q₃` in `(a₁, a₂)` with
/// `q₃² = a₁((1−a₁)²(1+a₂)² − 4(1−a₁)a₂)`.
///
/// `q₃` is searched, not transcribed: stage 0 tries constant `x₁, x₃` in
/// `{0, ±1, ±2}`; stage 1 lets `x₁` range over products
/// `(c₀ + c₁a₁)(d₀ + d₁a₂)` with coefficients in `{0, ±1, ±2}`; stage 2 lets
/// `x₃` range over the same linear forms as `x₁`'s factors. In every stage
/// `x₂` is solved by an exact square root. The algebra must be non-split.
pub fn qmt_pure_triple(k0: &FieldTower, a1: &FieldElement, a2: &FieldElement) -> Result<PureTriple, QuatError> {
    let a1 = a1.lift_to(k0)?;
    let a2 = a2.lift_to(k0)?;
    let alg = QuaternionAlgebra::new(k0, &a1, &a2)?;
    if alg.is_split()? {
        return Err(QuatError::SplitAlgebra);
    }
    let a3 = qmt_target(&a1, &a2);
    let coeffs: Vec<i64> = vec![0, 1, -1, 2, -2];
    let consts: Vec<FieldElement> = coeffs.iter().map(|&c| k0.from_int(c)).collect();
    let linear = |v: &FieldElement| -> Vec<FieldElement> {
        let mut out = Vec::new();
        for &c0 in &coeffs {
            for &c1 in &coeffs {
                if c1 == 0 {
                    continue;
                }
                out.push(&k0.from_int(c0) + &(v * &k0.from_int(c1)));
            }
        }
        out
    };
    let la1 = linear(&a1);
    let la2 = linear(&a2);
    let mut prods: Vec<FieldElement> = Vec::new();
    for f in la1.iter().chain(consts.iter().skip(1)) {
        for g in la2.iter().chain(consts.iter().skip(1).take(1)) {
            prods.push(f * g);
        }
    }
    let both: Vec<FieldElement> = la1.iter().chain(la2.iter()).cloned().collect();
    let stages: Vec<(Vec<FieldElement>, Vec<FieldElement>)> = vec![
        (consts.clone(), consts.clone()),
        (prods.clone(), consts.clone()),
        (prods, both),
    ];
    let ab = &a1 * &a2;
    let mut tried = 0usize;
    for (stage, (xs1, xs3)) in stages.iter().enumerate() {
        for x3 in xs3 {
            for x1 in xs1 {
                tried += 1;
                let rhs = &(&(&a3 - &(&a1 * &x1.square())) + &(&ab * &x3.square())) / &a2;
                let Some(x2) = rhs.exact_sqrt() else { continue };
                let q3 = alg.element([k0.zero(), x1.clone(), x2, x3.clone()])?;
                if q3.is_zero() || q3.pure_square()? != a3 {
                    continue;
                }
                return Ok(PureTriple {
                    q1: alg.i(),
                    q2: alg.j(),
                    q3,
                    a3,
                    algebra: alg,
                    stage,
                    tried,
                });
            }
        }
    }
    Err(QuatError::ConstructionNotFound {
        bound: format!(
            "{} stages, {tried} candidates, coefficients in {{0,±1,±2}}",
            stages.len()
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hamilton() -> QuaternionAlgebra {
        let q = FieldTower::rationals();
        QuaternionAlgebra::new(&q, &q.from_int(-1), &q.from_int(-1)).unwrap()
    }

    #[test]
    fn relations() {
        let q = FieldTower::rationals();
        let alg = QuaternionAlgebra::new(&q, &q.from_int(3), &q.from_int(-5)).unwrap();
        let (i, j) = (alg.i(), alg.j());
        assert_eq!(&i * &j, alg.ij());
        assert_eq!(&j * &i, -&alg.ij());
        assert_eq!(&i * &i, alg.scalar(&q.from_int(3)));
        assert_eq!(&j * &j, alg.scalar(&q.from_int(-5)));
        assert_eq!(i.nrd(), q.from_int(-3));
        assert_eq!((&i + &j).pure_square().unwrap(), q.from_int(-2));
        let k = alg.ij();
        assert_eq!(&k * &k, alg.scalar(&q.from_int(15)));
    }

    #[test]
    fn norm_is_multiplicative_and_conj_involutive() {
        let k = FieldTower::prime_field(5).unwrap().laurent("s").unwrap();
        let alg = QuaternionAlgebra::new(&k, &k.parse("s").unwrap(), &k.from_int(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x = alg.random(&mut rng, 2);
            let y = alg.random(&mut rng, 2);
            assert_eq!((&x * &y).nrd(), &x.nrd() * &y.nrd());
            assert_eq!(x.conj().conj(), x);
            assert_eq!((&x * &y).conj(), &y.conj() * &x.conj());
            if !x.nrd().is_zero() {
                assert_eq!(&x * &x.inv().unwrap(), alg.one());
            }
        }
    }

    #[test]
    fn pure_square_search() {
        let h = hamilton();
        let q = h.level().clone();
        let r = find_pure_with_square(&h, &q.from_int(-1), 1).unwrap();
        assert!(r == h.i() || r == h.j() || r == -&h.i() || r == -&h.j());
        let r = find_pure_with_square(&h, &q.from_int(-2), 2).unwrap();
        assert_eq!(r.pure_square().unwrap(), q.from_int(-2));
        assert_eq!(r, &h.i() + &h.j());
        assert!(find_pure_with_square(&h, &q.from_int(1), 5).is_none());
    }

    #[test]
    fn not_pure_and_zero_divisor() {
        let q = FieldTower::rationals();
        let m2 = QuaternionAlgebra::new(&q, &q.from_int(1), &q.from_int(1)).unwrap();
        assert_eq!(m2.one().pure_square(), Err(QuatError::NotPure));
        assert_eq!((&m2.one() + &m2.i()).inv(), Err(QuatError::ZeroDivisorInverse));
    }
}
