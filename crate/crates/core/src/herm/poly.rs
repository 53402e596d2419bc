//! Dense polynomials over a tower level and division-free characteristic
//! polynomials.

use std::fmt;

use serde::Serialize;

use crate::field::{Expr, FieldElement, FieldTower};

/// A polynomial in `X`, coefficients lowest degree first, trimmed.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Polynomial {
    level: FieldTower,
    coeffs: Vec<FieldElement>,
}

impl Polynomial {
    pub fn new(level: &FieldTower, mut coeffs: Vec<FieldElement>) -> Polynomial {
        while coeffs.last().is_some_and(FieldElement::is_zero) {
            coeffs.pop();
        }
        Polynomial {
            level: level.clone(),
            coeffs,
        }
    }

    /// `(X − c)^n`.
    pub fn linear_power(c: &FieldElement, n: usize) -> Polynomial {
        let l = c.level();
        let lin = Polynomial::new(l, vec![-c, l.one()]);
        let mut p = Polynomial::new(l, vec![l.one()]);
        for _ in 0..n {
            p = p.mul(&lin);
        }
        p
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().is_some_and(FieldElement::is_one)
    }

    pub fn mul(&self, o: &Polynomial) -> Polynomial {
        if self.coeffs.is_empty() || o.coeffs.is_empty() {
            return Polynomial::new(&self.level, vec![]);
        }
        let mut out = vec![self.level.zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, x) in self.coeffs.iter().enumerate() {
            for (j, y) in o.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(x * y);
            }
        }
        Polynomial::new(&self.level, out)
    }

    pub fn eval(&self, x: &FieldElement) -> FieldElement {
        let mut acc = self.level.zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    /// Monic square root by coefficient recursion from the top; `None` if
    /// the polynomial is not the square of a monic polynomial.
    pub fn monic_sqrt(&self) -> Option<Polynomial> {
        let d = self.degree()?;
        if d % 2 == 1 || !self.is_monic() {
            return None;
        }
        let n = d / 2;
        let two_inv = self.level.from_int(2).inv().ok()?;
        let mut r = vec![self.level.zero(); n + 1];
        r[n] = self.level.one();
        for k in 1..=n {
            // Coefficient of X^{2n−k} in r² is 2 r_{n−k} + Σ r_i r_{2n−k−i}
            // over n−k < i < n.
            let mut s = self.coeffs[2 * n - k].clone();
            for i in (n - k + 1)..n {
                s = &s - &(&r[i] * &r[2 * n - k - i]);
            }
            r[n - k] = &s * &two_inv;
        }
        let root = Polynomial::new(&self.level, r);
        (root.mul(&root) == *self).then_some(root)
    }

    pub fn to_exprs(&self) -> Vec<Expr> {
        self.coeffs.iter().map(Expr::from_element).collect()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})*X")?,
                _ => write!(f, "({c})*X^{k}")?,
            }
        }
        Ok(())
    }
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_exprs().serialize(s)
    }
}

/// An element `p + q·u` of `k[u]/(u² − a)`.
#[derive(Clone, Debug)]
pub(crate) struct SplitScalar {
    pub p: FieldElement,
    pub q: FieldElement,
}

/// Arithmetic in `k[u]/(u² − a)`; a field when `a` is not a square, and
/// commutative in any case, which is all Berkowitz needs.
pub(crate) struct SplitRing {
    pub a: FieldElement,
}

impl SplitRing {
    pub fn zero(&self) -> SplitScalar {
        let l = self.a.level();
        SplitScalar {
            p: l.zero(),
            q: l.zero(),
        }
    }

    pub fn one(&self) -> SplitScalar {
        let l = self.a.level();
        SplitScalar {
            p: l.one(),
            q: l.zero(),
        }
    }

    pub fn add(&self, x: &SplitScalar, y: &SplitScalar) -> SplitScalar {
        SplitScalar {
            p: &x.p + &y.p,
            q: &x.q + &y.q,
        }
    }

    pub fn neg(&self, x: &SplitScalar) -> SplitScalar {
        SplitScalar { p: -&x.p, q: -&x.q }
    }

    pub fn mul(&self, x: &SplitScalar, y: &SplitScalar) -> SplitScalar {
        if x.q.is_zero() && y.q.is_zero() {
            return SplitScalar {
                p: &x.p * &y.p,
                q: self.a.level().zero(),
            };
        }
        SplitScalar {
            p: &(&x.p * &y.p) + &(&self.a * &(&x.q * &y.q)),
            q: &(&x.p * &y.q) + &(&x.q * &y.p),
        }
    }

    fn is_zero(x: &SplitScalar) -> bool {
        x.p.is_zero() && x.q.is_zero()
    }

    /// Coefficients of `det(X·1 − m)`, highest degree first, by Berkowitz's
    /// division-free algorithm.
    pub fn charpoly(&self, m: &[Vec<SplitScalar>]) -> Vec<SplitScalar> {
        let n = m.len();
        let mut v: Vec<SplitScalar> = vec![self.one()];
        for i in (0..n).rev() {
            let s = n - i;
            // items = [1, −m_ii, −R C, −R A C, …, −R A^{s−2} C]
            let mut items = vec![self.one(), self.neg(&m[i][i])];
            let mut w: Vec<SplitScalar> = (i + 1..n).map(|r| m[r][i].clone()).collect();
            for _ in 0..s.saturating_sub(1) {
                let mut rc = self.zero();
                for (c, wc) in w.iter().enumerate() {
                    if !Self::is_zero(wc) {
                        rc = self.add(&rc, &self.mul(&m[i][i + 1 + c], wc));
                    }
                }
                items.push(self.neg(&rc));
                let mut nw = vec![self.zero(); w.len()];
                for (r, slot) in nw.iter_mut().enumerate() {
                    let mut acc = self.zero();
                    for (c, wc) in w.iter().enumerate() {
                        if !Self::is_zero(wc) {
                            acc = self.add(&acc, &self.mul(&m[i + 1 + r][i + 1 + c], wc));
                        }
                    }
                    *slot = acc;
                }
                w = nw;
            }
            let mut nv = vec![self.zero(); s + 1];
            for (r, slot) in nv.iter_mut().enumerate() {
                let mut acc = self.zero();
                for (c, vc) in v.iter().enumerate() {
                    if c > r {
                        break;
                    }
                    if !Self::is_zero(vc) {
                        acc = self.add(&acc, &self.mul(&items[r - c], vc));
                    }
                }
                *slot = acc;
            }
            v = nv;
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charpoly_of_companion_matrix() {
        // Companion matrix of X³ − 2X + 5 over ℚ; independent of Berkowitz.
        let q = FieldTower::rationals();
        let r = SplitRing { a: q.from_int(3) };
        let s = |n: i64| SplitScalar {
            p: q.from_int(n),
            q: q.zero(),
        };
        let m = vec![vec![s(0), s(0), s(-5)], vec![s(1), s(0), s(2)], vec![s(0), s(1), s(0)]];
        let c = r.charpoly(&m);
        let got: Vec<FieldElement> = c.iter().map(|x| x.p.clone()).collect();
        assert_eq!(got, vec![q.from_int(1), q.from_int(0), q.from_int(-2), q.from_int(5)]);
    }

    #[test]
    fn charpoly_with_u_entries() {
        // diag(u, −u) has characteristic polynomial X² − a.
        let q = FieldTower::rationals();
        let r = SplitRing { a: q.from_int(7) };
        let u = SplitScalar {
            p: q.zero(),
            q: q.one(),
        };
        let m = vec![vec![u.clone(), r.zero()], vec![r.zero(), r.neg(&u)]];
        let c = r.charpoly(&m);
        assert!(c.iter().all(|x| x.q.is_zero()));
        assert_eq!(c[2].p, q.from_int(-7));
        assert!(c[1].p.is_zero());
    }

    #[test]
    fn monic_sqrt_recovers_root() {
        let q = FieldTower::rationals();
        let root = Polynomial::new(&q, vec![q.from_int(3), q.from_ratio(-1, 2), q.from_int(2), q.one()]);
        let sq = root.mul(&root);
        assert_eq!(sq.monic_sqrt(), Some(root));
        let not = Polynomial::new(&q, vec![q.from_int(2), q.zero(), q.one()]);
        assert_eq!(not.monic_sqrt(), None);
        assert_eq!(
            Polynomial::linear_power(&q.from_int(2), 2).coeffs(),
            &[q.from_int(4), q.from_int(-4), q.one()]
        );
    }
}
