//! Seeded random elements for property checks.

use num_bigint::BigInt;
use rand::Rng;

use super::tower::{BaseField, FieldTower, LayerKind};
use super::FieldElement;

/// A random base value of height at most `height` (`p/q` with `|p|, q ≤ height`
/// over ℚ; uniform over 𝔽_p).
pub fn random_base<R: Rng + ?Sized>(level: &FieldTower, rng: &mut R, height: i64) -> FieldElement {
    let base = level.level(0).expect("base");
    let h = height.max(1);
    let e = match base.base() {
        BaseField::Rationals => {
            let p = rng.gen_range(-h..=h);
            let q = rng.gen_range(1..=h);
            base.from_ratio(p, q)
        }
        BaseField::PrimeField(p) => base.from_bigint(&BigInt::from(rng.gen_range(0..*p))),
    };
    e.lift_to(level).expect("base embeds")
}

/// A random element of `level`: at each valued layer a short Laurent
/// polynomial (occasionally with a denominator), at quadratic layers `c + d√r`.
pub fn random_element<R: Rng + ?Sized>(level: &FieldTower, rng: &mut R, height: i64) -> FieldElement {
    let Some(kind) = level.kind() else {
        return random_base(level, rng, height);
    };
    let below = level.below().expect("layer has a level below");
    let g = level.generator().expect("generator");
    match kind {
        LayerKind::Quadratic { .. } => {
            let c = random_element(below, rng, height).lift_to(level).expect("embeds");
            let d = random_element(below, rng, height).lift_to(level).expect("embeds");
            &c + &(&d * &g)
        }
        LayerKind::Laurent { .. } | LayerKind::RationalFunction { .. } => {
            let shift = rng.gen_range(-1..=1i64);
            let terms = rng.gen_range(1..=2usize);
            let mut num = level.zero();
            for k in 0..terms {
                let c = random_element(below, rng, height).lift_to(level).expect("embeds");
                num = &num + &(&c * &g.pow(k as i64));
            }
            let mut e = &num * &g.pow(shift);
            if rng.gen_bool(0.25) {
                let c = random_element(below, rng, height).lift_to(level).expect("embeds");
                let den = &level.one() + &(&c * &g);
                if !den.is_zero() {
                    e = &e / &den;
                }
            }
            e
        }
    }
}

/// As [`random_element`], retrying until the result is nonzero.
pub fn random_nonzero<R: Rng + ?Sized>(level: &FieldTower, rng: &mut R, height: i64) -> FieldElement {
    loop {
        let e = random_element(level, rng, height);
        if !e.is_zero() {
            return e;
        }
    }
}
