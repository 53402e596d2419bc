//! Truncated Laurent-series views and Hensel square roots.

use std::fmt;

use super::repr::Repr;
use super::tower::FieldTower;
use super::{series_coefficients, FieldElement, FieldError};

/// `Σ_{k ≥ valuation} c_k t^k`, known modulo `t^precision`.
///
/// `coeffs[i]` is the coefficient of `t^(valuation + i)` and lives in the
/// level below the Laurent layer.
#[derive(Clone, PartialEq, Eq)]
pub struct LaurentSeries {
    pub level: FieldTower,
    pub valuation: i64,
    pub coeffs: Vec<FieldElement>,
    pub precision: i64,
}

impl LaurentSeries {
    /// Series expansion of an exact element, up to `t^precision`.
    pub fn from_element(e: &FieldElement, precision: i64) -> Result<LaurentSeries, FieldError> {
        let level = e.level().clone();
        let below = level
            .below()
            .ok_or_else(|| FieldError::NotLaurentLayer(level.to_string()))?
            .clone();
        let f = match e.repr() {
            Repr::Frac(f) => f,
            _ => return Err(FieldError::NotLaurentLayer(level.to_string())),
        };
        if f.is_zero() {
            return Ok(LaurentSeries {
                level,
                valuation: precision,
                coeffs: Vec::new(),
                precision,
            });
        }
        let n = (precision - f.shift).max(0) as usize;
        let coeffs = series_coefficients(&below, f, n)
            .into_iter()
            .map(|c| FieldElement::from_repr(&below, c))
            .collect();
        Ok(LaurentSeries {
            level,
            valuation: f.shift,
            coeffs,
            precision,
        })
    }

    /// Coefficient of `t^k` (zero below the valuation); `None` past the precision.
    pub fn coefficient(&self, k: i64) -> Option<FieldElement> {
        if k >= self.precision {
            return None;
        }
        let below = self.level.below().expect("Laurent level");
        if k < self.valuation {
            return Some(below.zero());
        }
        Some(
            self.coeffs
                .get((k - self.valuation) as usize)
                .cloned()
                .unwrap_or_else(|| below.zero()),
        )
    }

    /// The truncation as an exact element (a Laurent polynomial).
    pub fn truncation(&self) -> FieldElement {
        let t = self.level.generator().expect("Laurent level");
        let mut acc = self.level.zero();
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = self.valuation + i as i64;
            if k >= self.precision {
                break;
            }
            acc = &acc + &(&c.lift_to(&self.level).expect("embeds") * &t.pow(k));
        }
        acc
    }

    /// Whether `self ≡ e` modulo `t^precision` (the smaller of both precisions).
    pub fn agrees_with(&self, e: &FieldElement) -> Result<bool, FieldError> {
        let d = &self.truncation() - e;
        if d.is_zero() {
            return Ok(true);
        }
        Ok(d.valuation()? >= self.precision)
    }
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.level.kind().map(|k| k.name().to_string()).unwrap_or_default();
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let k = self.valuation + i as i64;
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})*{name}")?,
                _ => write!(f, "({c})*{name}^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O({name}^{})", self.precision)
    }
}

impl fmt::Debug for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Square root `r` of `e` in the Laurent completion with `v(r² − e) ≥ precision`.
///
/// The valuation of `e` must be even and its residue an exactly computable
/// square below; the residue root is the principal one, so the output is
/// deterministic.
pub fn hensel_sqrt(e: &FieldElement, precision: i64) -> Result<LaurentSeries, FieldError> {
    let level = e.level().clone();
    if !level.is_laurent() {
        return Err(FieldError::NotLaurentLayer(level.to_string()));
    }
    let v = e.valuation()?;
    if v.rem_euclid(2) != 0 {
        return Err(FieldError::OddValuation(v));
    }
    let below = level.below().expect("Laurent level").clone();
    let m = v / 2;
    let rel = (precision - v).max(0);
    // At least the leading coefficient, to certify the residue.
    let unit = LaurentSeries::from_element(e, v + rel.max(1))?;
    let c0 = &unit.coeffs.first().cloned().unwrap_or_else(|| below.zero());
    if c0.is_zero() {
        return Err(FieldError::ZeroElement);
    }
    if !c0.is_square()? {
        return Err(FieldError::ResidueNotSquare);
    }
    let r0 = c0
        .exact_sqrt()
        .ok_or_else(|| FieldError::NotDecidable(format!("no exact root of the residue {c0}")))?;
    let inv2r0 = (&r0 + &r0).inv()?;
    let mut r: Vec<FieldElement> = Vec::with_capacity(rel as usize);
    for k in 0..rel as usize {
        if k == 0 {
            r.push(r0.clone());
            continue;
        }
        let mut acc = unit.coeffs.get(k).cloned().unwrap_or_else(|| below.zero());
        for i in 1..k {
            acc = &acc - &(&r[i] * &r[k - i]);
        }
        r.push(&acc * &inv2r0);
    }
    Ok(LaurentSeries {
        level,
        valuation: m,
        coeffs: r,
        precision: m + rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_series() {
        let qx = FieldTower::rationals().laurent("x").unwrap();
        let q = qx.level(0).unwrap();
        let r = hensel_sqrt(&qx.parse("1+x").unwrap(), 4).unwrap();
        let expect = [q.one(), q.from_ratio(1, 2), q.from_ratio(-1, 8), q.from_ratio(1, 16)];
        // Binomial coefficients C(1/2, k) computed independently.
        let mut c = q.one();
        let half = q.from_ratio(1, 2);
        for k in 0..4i64 {
            assert_eq!(r.coefficient(k).unwrap(), expect[k as usize]);
            assert_eq!(r.coefficient(k).unwrap(), c);
            c = &(&c * &(&half - &q.from_int(k))) / &q.from_int(k + 1);
        }
        let t = r.truncation();
        let d = &(&t * &t) - &qx.parse("1+x").unwrap();
        assert!(d.valuation().unwrap() >= 4);
    }

    #[test]
    fn finite_field_lift() {
        let k = FieldTower::prime_field(7).unwrap().laurent("t").unwrap();
        let e = k.parse("4*(1+t)").unwrap();
        let r = hensel_sqrt(&e, 3).unwrap();
        assert_eq!(r.coefficient(0).unwrap(), k.below().unwrap().from_int(2));
        // Brute force over F7: the unique (b, c) with (2 + b t + c t^2)^2 ≡ 4 + 4t mod t^3.
        let mut sols = Vec::new();
        for b in 0..7i64 {
            for c in 0..7i64 {
                if (4 * b) % 7 == 4 && (b * b + 4 * c) % 7 == 0 {
                    sols.push((b, c));
                }
            }
        }
        assert_eq!(sols.len(), 1);
        let f7 = k.below().unwrap();
        assert_eq!(r.coefficient(1).unwrap(), f7.from_int(sols[0].0));
        assert_eq!(r.coefficient(2).unwrap(), f7.from_int(sols[0].1));
    }

    #[test]
    fn errors() {
        let k = FieldTower::prime_field(5).unwrap().laurent("t").unwrap();
        assert!(matches!(
            hensel_sqrt(&k.parse("t").unwrap(), 3),
            Err(FieldError::OddValuation(1))
        ));
        assert!(matches!(
            hensel_sqrt(&k.parse("2+t").unwrap(), 3),
            Err(FieldError::ResidueNotSquare)
        ));
        assert_eq!(hensel_sqrt(&k.one(), 5).unwrap().truncation(), k.one());
    }
}
