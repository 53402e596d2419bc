//! 2-torsion Brauer classes of quaternion symbols via iterated residues.
//!
//! At a valued layer with uniformizer `t`, write `a = u t^α`, `b = v t^β`.
//! The class of `(a, b)` is recorded as the class of `(ū, v̄)` one level down
//! (the unramified part) together with the square class of
//! `ū^β v̄^α (−1)^{αβ}` (the ramified part, i.e. the tame residue). Over `ℚ`
//! the class is the set of places with nontrivial Hilbert symbol; over `𝔽_p`
//! every class is trivial.
//!
//! Rational-function layers are read through their completion at the
//! variable. The invariants then describe the class over the completion, so
//! they certify non-splitting and inequality but not splitting or equality;
//! such classes carry `exact = false`.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{
    completed_square_class, legendre_symbol, squarefree_part, BaseClass, BaseField, FieldElement, FieldError,
    FieldTower, LayerKind, SquareClass,
};
use crate::quat::{value_grid, QuaternionAlgebra};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BrauerError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("symbol entries must be nonzero")]
    ZeroEntry,
    #[error("classes over different towers: {0} vs {1}")]
    TowerMismatch(String, String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Place {
    Prime(BigInt),
    Infinity,
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Prime(p) => write!(f, "{p}"),
            Place::Infinity => write!(f, "inf"),
        }
    }
}

/// Residue tree of a class; see the module documentation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BrauerInvariants {
    /// Over a finite prime field.
    Trivial,
    /// Over `ℚ`: places with nontrivial local invariant.
    Places(BTreeSet<Place>),
    Layer {
        name: String,
        unramified: Box<BrauerInvariants>,
        ramified: SquareClass,
    },
}

impl BrauerInvariants {
    pub fn is_trivial(&self) -> bool {
        match self {
            BrauerInvariants::Trivial => true,
            BrauerInvariants::Places(s) => s.is_empty(),
            BrauerInvariants::Layer {
                unramified, ramified, ..
            } => unramified.is_trivial() && ramified.is_trivial(),
        }
    }

    fn add(&self, other: &BrauerInvariants) -> BrauerInvariants {
        match (self, other) {
            (BrauerInvariants::Trivial, BrauerInvariants::Trivial) => BrauerInvariants::Trivial,
            (BrauerInvariants::Places(x), BrauerInvariants::Places(y)) => {
                BrauerInvariants::Places(x.symmetric_difference(y).cloned().collect())
            }
            (
                BrauerInvariants::Layer {
                    name,
                    unramified: u1,
                    ramified: r1,
                },
                BrauerInvariants::Layer {
                    unramified: u2,
                    ramified: r2,
                    ..
                },
            ) => BrauerInvariants::Layer {
                name: name.clone(),
                unramified: Box::new(u1.add(u2)),
                ramified: r1.mul(r2),
            },
            _ => panic!("adding classes over different towers"),
        }
    }

    fn shape(&self) -> Vec<String> {
        match self {
            BrauerInvariants::Trivial => vec!["Fp".into()],
            BrauerInvariants::Places(_) => vec!["Q".into()],
            BrauerInvariants::Layer { name, unramified, .. } => {
                let mut v = unramified.shape();
                v.push(name.clone());
                v
            }
        }
    }

    /// Places of the bottom `ℚ` component, if any.
    pub fn base_places(&self) -> Option<&BTreeSet<Place>> {
        match self {
            BrauerInvariants::Trivial => None,
            BrauerInvariants::Places(s) => Some(s),
            BrauerInvariants::Layer { unramified, .. } => unramified.base_places(),
        }
    }
}

impl fmt::Display for BrauerInvariants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BrauerInvariants::Trivial => write!(f, "0"),
            BrauerInvariants::Places(s) => {
                let v: Vec<String> = s.iter().map(Place::to_string).collect();
                write!(f, "{{{}}}", v.join(","))
            }
            BrauerInvariants::Layer {
                name,
                unramified,
                ramified,
            } => {
                write!(f, "{name}:({unramified}; {ramified})")
            }
        }
    }
}

/// A Brauer class with a flag telling whether the invariants are complete.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrauerClass {
    pub invariants: BrauerInvariants,
    pub exact: bool,
}

impl BrauerClass {
    pub fn add(&self, other: &BrauerClass) -> Result<BrauerClass, BrauerError> {
        self.check(other)?;
        Ok(BrauerClass {
            invariants: self.invariants.add(&other.invariants),
            exact: self.exact && other.exact,
        })
    }

    fn check(&self, other: &BrauerClass) -> Result<(), BrauerError> {
        let (s1, s2) = (self.invariants.shape(), other.invariants.shape());
        if s1 != s2 {
            return Err(BrauerError::TowerMismatch(s1.join("/"), s2.join("/")));
        }
        Ok(())
    }

    /// Whether the class is trivial. A nontrivial answer is always certain;
    /// a trivial answer on an inexact class is `Inconclusive`.
    pub fn is_split(&self) -> Result<bool, BrauerError> {
        if !self.invariants.is_trivial() {
            return Ok(false);
        }
        if self.exact {
            Ok(true)
        } else {
            Err(BrauerError::Inconclusive(
                "trivial over the completion of a rational-function layer".into(),
            ))
        }
    }

    /// Number of nontrivial local invariants over a `ℚ` base class.
    pub fn place_count(&self) -> Option<usize> {
        match &self.invariants {
            BrauerInvariants::Places(s) => Some(s.len()),
            _ => None,
        }
    }
}

impl fmt::Display for BrauerClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.invariants)?;
        if !self.exact {
            write!(f, " (completion)")?;
        }
        Ok(())
    }
}

/// Equality of classes; `Inconclusive` when inexact invariants agree.
pub fn brauer_equal(c1: &BrauerClass, c2: &BrauerClass) -> Result<bool, BrauerError> {
    c1.check(c2)?;
    if c1.invariants != c2.invariants {
        return Ok(false);
    }
    if c1.exact && c2.exact {
        Ok(true)
    } else {
        Err(BrauerError::Inconclusive("invariants agree over a completion".into()))
    }
}

pub fn is_split(c: &BrauerClass) -> Result<bool, BrauerError> {
    c.is_split()
}

/// Class of the quaternion symbol `(a, b)` over the higher of the two levels.
pub fn symbol_class(a: &FieldElement, b: &FieldElement) -> Result<BrauerClass, BrauerError> {
    if a.is_zero() || b.is_zero() {
        return Err(BrauerError::ZeroEntry);
    }
    let level = if a.level().depth() >= b.level().depth() {
        a.level().clone()
    } else {
        b.level().clone()
    };
    let a = a.lift_to(&level)?;
    let b = b.lift_to(&level)?;
    let exact = !level
        .levels()
        .iter()
        .any(|l| matches!(l.kind(), Some(LayerKind::RationalFunction { .. })));
    Ok(BrauerClass {
        invariants: invariants(&level, &a, &b)?,
        exact,
    })
}

/// Whether `z` is a norm from `F(√a)` to `F`: `(a, z)` splits.
pub fn norm_group_member(a: &FieldElement, z: &FieldElement) -> Result<bool, BrauerError> {
    if z.is_zero() {
        return Err(BrauerError::ZeroEntry);
    }
    if a.is_zero() || a.is_square()? {
        return Err(FieldError::SquareRadicand(a.to_string()).into());
    }
    symbol_class(a, z)?.is_split()
}

/// Class of `Q`.
pub fn algebra_class(q: &QuaternionAlgebra) -> Result<BrauerClass, BrauerError> {
    symbol_class(q.a(), q.b())
}

fn invariants(level: &FieldTower, a: &FieldElement, b: &FieldElement) -> Result<BrauerInvariants, BrauerError> {
    match level.kind() {
        None => match level.base() {
            BaseField::PrimeField(_) => Ok(BrauerInvariants::Trivial),
            BaseField::Rationals => {
                let x = a.as_rational().expect("rational base");
                let y = b.as_rational().expect("rational base");
                Ok(BrauerInvariants::Places(hilbert_places(&x, &y)))
            }
        },
        Some(LayerKind::Quadratic { name, .. }) => Err(BrauerError::Field(FieldError::UnsupportedLayer(format!(
            "Brauer invariants over the quadratic layer {name}"
        )))),
        Some(kind) => {
            let below = level.below().expect("layer has a level below");
            let alpha = a.valuation()?;
            let beta = b.valuation()?;
            let u = a.unit_residue()?;
            let v = b.unit_residue()?;
            let unramified = invariants(below, &u, &v)?;
            let mut r = below.one();
            if beta.rem_euclid(2) == 1 {
                r = &r * &u;
            }
            if alpha.rem_euclid(2) == 1 {
                r = &r * &v;
            }
            if (alpha * beta).rem_euclid(2) == 1 {
                r = -&r;
            }
            Ok(BrauerInvariants::Layer {
                name: kind.name().to_string(),
                unramified: Box::new(unramified),
                ramified: completed_square_class(&r)?,
            })
        }
    }
}

fn prime_factors(n: &BigInt) -> Vec<BigInt> {
    let mut m = n.abs();
    let mut out = Vec::new();
    let mut d = BigInt::from(2u32);
    while &d * &d <= m {
        if (&m % &d).is_zero() {
            out.push(d.clone());
            while (&m % &d).is_zero() {
                m /= &d;
            }
        }
        d += 1u32;
    }
    if m > BigInt::one() {
        out.push(m);
    }
    out
}

fn squarefree_of(q: &BigRational) -> BigInt {
    squarefree_part(&(q.numer() * q.denom()))
}

/// Local Hilbert symbol `(a, b)_p ∈ {1, −1}` for squarefree integers.
fn local_symbol(a: &BigInt, b: &BigInt, place: &Place) -> i32 {
    match place {
        Place::Infinity => {
            if a.is_negative() && b.is_negative() {
                -1
            } else {
                1
            }
        }
        Place::Prime(p) => {
            let (alpha, u) = split_p(a, p);
            let (beta, v) = split_p(b, p);
            if *p == BigInt::from(2) {
                let m = |x: &BigInt| x.mod_floor(&BigInt::from(8)).to_u64().expect("small");
                let eps = |x: u64| ((x % 4) == 3) as u32;
                let omega = |x: u64| (x == 3 || x == 5) as u32;
                let (um, vm) = (m(&u), m(&v));
                let e = eps(um) * eps(vm) + alpha * omega(vm) + beta * omega(um);
                if e % 2 == 1 {
                    -1
                } else {
                    1
                }
            } else {
                let pu = p.to_u64().expect("prime fits in u64");
                let eps = (((pu - 1) / 2) % 2) as u32;
                let mut s = if (alpha * beta * eps) % 2 == 1 { -1 } else { 1 };
                if beta % 2 == 1 {
                    s *= legendre_symbol(pu, &u);
                }
                if alpha % 2 == 1 {
                    s *= legendre_symbol(pu, &v);
                }
                s
            }
        }
    }
}

fn split_p(n: &BigInt, p: &BigInt) -> (u32, BigInt) {
    let mut m = n.clone();
    let mut e = 0;
    while (&m % p).is_zero() {
        m /= p;
        e += 1;
    }
    (e, m)
}

/// Places where `(a, b)` over `ℚ` is nontrivial.
pub fn hilbert_places(a: &BigRational, b: &BigRational) -> BTreeSet<Place> {
    let x = squarefree_of(a);
    let y = squarefree_of(b);
    let mut places: BTreeSet<Place> = BTreeSet::new();
    let mut cands: BTreeSet<BigInt> = BTreeSet::new();
    cands.insert(BigInt::from(2));
    cands.extend(prime_factors(&x));
    cands.extend(prime_factors(&y));
    for p in cands {
        let pl = Place::Prime(p);
        if local_symbol(&x, &y, &pl) == -1 {
            places.insert(pl);
        }
    }
    if local_symbol(&x, &y, &Place::Infinity) == -1 {
        places.insert(Place::Infinity);
    }
    places
}

// ---------------------------------------------------------------------------
// Common slots

/// One candidate tried by [`common_slot`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotTrial {
    pub mu: String,
    /// Per slot: `Some(true)` certified equal, `Some(false)` certified
    /// different, `None` equal over the completion only.
    pub verdicts: Vec<Option<bool>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecializationEvidence {
    pub values: Vec<(String, String)>,
    /// `Found(μ)` over the specialized base, or the search bound reached.
    pub outcome: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum CommonSlotOutcome {
    Found { mu: String },
    NoneCertified,
    Unknown { bound: i64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommonSlotReport {
    pub outcome: CommonSlotOutcome,
    pub exhaustive: bool,
    pub square_classes: Option<usize>,
    pub transcript: Vec<SlotTrial>,
    /// Candidates that pass every slot over the completion but could not be
    /// certified.
    pub completion_passes: Vec<String>,
    pub specializations: Vec<SpecializationEvidence>,
    #[serde(skip)]
    pub mu: Option<FieldElement>,
}

impl CommonSlotReport {
    pub fn found(&self) -> Option<&FieldElement> {
        self.mu.as_ref()
    }
}

/// Whether the square-class group of `k0` is finite and enumerable here:
/// base `𝔽_p` with Laurent layers only, of order `2^(layers+1)`.
pub fn finite_square_classes(k0: &FieldTower) -> Option<Vec<SquareClass>> {
    if !matches!(k0.base(), BaseField::PrimeField(_)) || !k0.laurent_only() {
        return None;
    }
    let n = k0.depth();
    let mut out = Vec::with_capacity(1 << (n + 1));
    for mask in 0u64..(1u64 << (n + 1)) {
        out.push(SquareClass {
            base: BaseClass::Finite(mask & 1 == 1),
            parities: (0..n).map(|i| ((mask >> (i + 1)) & 1) as u8).collect(),
        });
    }
    Some(out)
}

fn trial(target: &BrauerClass, slots: &[FieldElement], mu: &FieldElement) -> Result<SlotTrial, BrauerError> {
    let mut verdicts = Vec::with_capacity(slots.len());
    for a in slots {
        let c = symbol_class(a, mu)?;
        verdicts.push(match brauer_equal(&c, target) {
            Ok(v) => Some(v),
            Err(BrauerError::Inconclusive(_)) => None,
            Err(e) => return Err(e),
        });
        if verdicts.last() == Some(&Some(false)) {
            break;
        }
    }
    Ok(SlotTrial {
        mu: mu.to_string(),
        verdicts,
    })
}

fn all_true(t: &SlotTrial, n: usize) -> bool {
    t.verdicts.len() == n && t.verdicts.iter().all(|v| *v == Some(true))
}

fn completion_pass(t: &SlotTrial, n: usize) -> bool {
    t.verdicts.len() == n && t.verdicts.iter().all(|v| *v != Some(false))
}

/// Search for `μ ∈ k₀^×` with `(a_i, μ) ≅ Q` for every slot `a_i`.
///
/// Over a finite square-class group every class is tried and a negative
/// answer is `NoneCertified`. Elsewhere the entries of `Q` and then the
/// height-`bound` value grid are tried; a negative answer is `Unknown`, and
/// over rational-function bases the problem is re-run over `ℚ` at the given
/// specializations as evidence.
pub fn common_slot(
    q: &QuaternionAlgebra,
    slots: &[FieldElement],
    k0: &FieldTower,
    bound: i64,
    specializations: &[Vec<(String, BigRational)>],
) -> Result<CommonSlotReport, BrauerError> {
    let slots: Vec<FieldElement> = slots.iter().map(|a| a.lift_to(k0)).collect::<Result<_, _>>()?;
    if slots.iter().any(FieldElement::is_zero) {
        return Err(BrauerError::ZeroEntry);
    }
    let target = algebra_class(&q.extend_to(k0).map_err(quat_to_brauer)?)?;
    let n = slots.len();
    let mut transcript = Vec::new();
    let mut passes = Vec::new();
    let finish_found =
        |mu: FieldElement, transcript: Vec<SlotTrial>, exhaustive: bool, classes: Option<usize>| CommonSlotReport {
            outcome: CommonSlotOutcome::Found { mu: mu.to_string() },
            exhaustive,
            square_classes: classes,
            transcript,
            completion_passes: Vec::new(),
            specializations: Vec::new(),
            mu: Some(mu),
        };
    let mut first: Vec<FieldElement> = vec![q.b().lift_to(k0)?, q.a().lift_to(k0)?];
    if let Some(classes) = finite_square_classes(k0) {
        first.extend(classes.iter().map(|c| c.representative(k0)));
        for mu in first {
            let t = trial(&target, &slots, &mu)?;
            let ok = all_true(&t, n);
            transcript.push(t);
            if ok {
                return Ok(finish_found(mu, transcript, true, Some(classes.len())));
            }
        }
        return Ok(CommonSlotReport {
            outcome: CommonSlotOutcome::NoneCertified,
            exhaustive: true,
            square_classes: Some(classes.len()),
            transcript,
            completion_passes: Vec::new(),
            specializations: Vec::new(),
            mu: None,
        });
    }
    first.extend(
        value_grid(k0, bound)
            .into_iter()
            .map(|(_, e)| e)
            .filter(|e| !e.is_zero()),
    );
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for mu in first {
        let key = completed_square_class(&mu)
            .map(|c| format!("{c}"))
            .unwrap_or_else(|_| mu.to_string());
        if !seen.insert(key) {
            continue;
        }
        let t = trial(&target, &slots, &mu)?;
        if all_true(&t, n) {
            transcript.push(t);
            return Ok(finish_found(mu, transcript, false, None));
        }
        if completion_pass(&t, n) {
            passes.push(mu.to_string());
        }
        transcript.push(t);
    }
    let mut evidence = Vec::new();
    for vals in specializations {
        evidence.push(specialized_run(q, &slots, k0, bound, vals)?);
    }
    Ok(CommonSlotReport {
        outcome: CommonSlotOutcome::Unknown { bound },
        exhaustive: false,
        square_classes: None,
        transcript,
        completion_passes: passes,
        specializations: evidence,
        mu: None,
    })
}

fn quat_to_brauer(e: crate::quat::QuatError) -> BrauerError {
    match e {
        crate::quat::QuatError::Field(f) => BrauerError::Field(f),
        crate::quat::QuatError::Brauer(b) => b,
        other => BrauerError::Inconclusive(other.to_string()),
    }
}

fn specialized_run(
    q: &QuaternionAlgebra,
    slots: &[FieldElement],
    k0: &FieldTower,
    bound: i64,
    vals: &[(String, BigRational)],
) -> Result<SpecializationEvidence, BrauerError> {
    let values = vals.iter().map(|(n, v)| (n.clone(), v.to_string())).collect();
    let kept: Vec<FieldTower> = k0
        .levels()
        .into_iter()
        .skip(1)
        .filter(|l| !vals.iter().any(|(n, _)| n == l.kind().unwrap().name()))
        .collect();
    if !kept.is_empty() || k0.base() != &BaseField::Rationals {
        return Ok(SpecializationEvidence {
            values,
            outcome: "skipped: only full specializations to Q are run".into(),
        });
    }
    let base = FieldTower::rationals();
    let spec = |e: &FieldElement| e.lift_to(k0).and_then(|x| x.specialize(&base, vals));
    let a = spec(q.a());
    let b = spec(q.b());
    let s: Result<Vec<_>, _> = slots.iter().map(spec).collect();
    let (a, b, s) = match (a, b, s) {
        (Ok(a), Ok(b), Ok(s)) if !a.is_zero() && !b.is_zero() && s.iter().all(|x| !x.is_zero()) => (a, b, s),
        _ => {
            return Ok(SpecializationEvidence {
                values,
                outcome: "degenerate specialization".into(),
            })
        }
    };
    let qs = QuaternionAlgebra::new(&base, &a, &b).map_err(quat_to_brauer)?;
    let split = algebra_class(&qs)?.is_split()?;
    let rep = common_slot(&qs, &s, &base, bound.max(2) * 4, &[])?;
    let outcome = match rep.outcome {
        CommonSlotOutcome::Found { mu } => format!("Found({mu}){}", if split { ", algebra split" } else { "" }),
        CommonSlotOutcome::Unknown { bound } => format!("none up to height {bound}"),
        CommonSlotOutcome::NoneCertified => "NoneCertified".into(),
    };
    Ok(SpecializationEvidence { values, outcome })
}

#[cfg(test)]
mod tests {
    #[test]
    fn norm_membership_matches_sum_of_two_squares() {
        // Oracle: z ∈ ℕ is a norm from ℚ(i) iff z = x² + y² for integers
        // x, y (Fermat, since z has no denominators here).
        let q = FieldTower::rationals();
        for z in 1..60i64 {
            let brute = (0..=z).any(|x| (0..=x).any(|y| x * x + y * y == z));
            let got = norm_group_member(&q.from_int(-1), &q.from_int(z)).unwrap();
            assert_eq!(got, brute, "z={z}");
        }
        assert!(norm_group_member(&q.from_int(2), &q.one()).unwrap());
        assert!(matches!(
            norm_group_member(&q.from_int(4), &q.from_int(3)),
            Err(BrauerError::Field(FieldError::SquareRadicand(_)))
        ));
        let ft = FieldTower::prime_field(5).unwrap().laurent("t").unwrap();
        let t = ft.generator().unwrap();
        // (t, 2) has tame residue 2, a non-square mod 5.
        assert!(!norm_group_member(&t, &ft.from_int(2)).unwrap());
        assert!(norm_group_member(&t, &ft.from_int(4)).unwrap());
        assert!(norm_group_member(&t, &(-&t)).unwrap());
    }

    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn places(v: &[&str]) -> BTreeSet<Place> {
        v.iter()
            .map(|s| {
                if *s == "inf" {
                    Place::Infinity
                } else {
                    Place::Prime(s.parse().unwrap())
                }
            })
            .collect()
    }

    #[test]
    fn classical_symbols() {
        assert_eq!(hilbert_places(&q(-1), &q(-1)), places(&["2", "inf"]));
        assert_eq!(hilbert_places(&q(3), &q(-2)), places(&[]));
        assert_eq!(hilbert_places(&q(2), &q(3)), places(&["2", "3"]));
        assert_eq!(hilbert_places(&q(-1), &q(3)), places(&["2", "3"]));
        assert_eq!(hilbert_places(&q(5), &q(-1)), places(&[]));
    }

    #[test]
    fn laurent_residues() {
        let k = FieldTower::prime_field(5)
            .unwrap()
            .laurent("s")
            .unwrap()
            .laurent("u")
            .unwrap();
        let c = symbol_class(&k.parse("s").unwrap(), &k.parse("u").unwrap()).unwrap();
        assert!(c.exact);
        assert!(!c.is_split().unwrap());
        match &c.invariants {
            BrauerInvariants::Layer {
                name,
                unramified,
                ramified,
            } => {
                assert_eq!(name, "u");
                assert!(unramified.is_trivial());
                assert_eq!(ramified.parities, vec![1]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn partial_classes() {
        let k = FieldTower::rationals().rational_function("a").unwrap();
        let c = symbol_class(&k.parse("a").unwrap(), &k.parse("-1").unwrap()).unwrap();
        assert!(!c.exact);
        assert!(!c.is_split().unwrap());
        let d = symbol_class(&k.parse("1+a").unwrap(), &k.parse("-1").unwrap()).unwrap();
        assert!(matches!(d.is_split(), Err(BrauerError::Inconclusive(_))));
    }
}

#[cfg(test)]
mod slot_tests {
    use super::*;
    use crate::quat::qmt_pure_triple;

    #[test]
    fn finite_instances() {
        let k = FieldTower::prime_field(5)
            .unwrap()
            .laurent("s")
            .unwrap()
            .laurent("u")
            .unwrap();
        let s = k.parse("s").unwrap();
        let u = k.parse("u").unwrap();
        let alg = QuaternionAlgebra::new(&k, &s, &u).unwrap();
        let none = common_slot(&alg, &[s.clone(), u.clone(), k.parse("-s*u").unwrap()], &k, 2, &[]).unwrap();
        assert_eq!(none.outcome, CommonSlotOutcome::NoneCertified);
        assert_eq!(none.square_classes, Some(8));
        let found = common_slot(&alg, &[s.clone(), u.clone(), k.parse("s+u").unwrap()], &k, 2, &[]).unwrap();
        let mu = found.found().unwrap().clone();
        for a in [&s, &u] {
            let c = symbol_class(a, &mu).unwrap();
            assert!(brauer_equal(&c, &algebra_class(&alg).unwrap()).unwrap());
        }
        let one = common_slot(&alg, std::slice::from_ref(&s), &k, 2, &[]).unwrap();
        assert_eq!(one.found().unwrap(), &u);
    }

    #[test]
    fn example_triple_is_unknown() {
        let k0 = FieldTower::rationals()
            .rational_function("a1")
            .unwrap()
            .rational_function("a2")
            .unwrap();
        let a1 = k0.parse("a1").unwrap();
        let a2 = k0.parse("a2").unwrap();
        let t = qmt_pure_triple(&k0, &a1, &a2).unwrap();
        let vals = vec![vec![
            ("a1".to_string(), BigRational::from_integer(2.into())),
            ("a2".to_string(), BigRational::from_integer(3.into())),
        ]];
        let rep = common_slot(&t.algebra, &[a1, a2, t.a3.clone()], &k0, 2, &vals).unwrap();
        eprintln!("{} {:?} {:?}", t.q3, rep.outcome, rep.specializations);
        assert!(matches!(rep.outcome, CommonSlotOutcome::Unknown { .. }));
    }
}
