//! Square matrices over a quaternion algebra.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::field::{FieldElement, FieldTower};
use crate::quat::{QuaternionAlgebra, QuaternionElement, QuaternionJson};

use super::HermError;

#[derive(Clone, PartialEq, Eq)]
pub struct QMatrix {
    alg: QuaternionAlgebra,
    n: usize,
    e: Vec<QuaternionElement>,
}

impl QMatrix {
    pub fn from_fn<F>(alg: &QuaternionAlgebra, n: usize, mut f: F) -> QMatrix
    where
        F: FnMut(usize, usize) -> QuaternionElement,
    {
        let mut e = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                e.push(f(i, j));
            }
        }
        QMatrix { alg: alg.clone(), n, e }
    }

    pub fn from_rows(alg: &QuaternionAlgebra, rows: Vec<Vec<QuaternionElement>>) -> Result<QMatrix, HermError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(HermError::SizeMismatch);
        }
        Ok(QMatrix {
            alg: alg.clone(),
            n,
            e: rows.into_iter().flatten().collect(),
        })
    }

    pub fn zero(alg: &QuaternionAlgebra, n: usize) -> QMatrix {
        QMatrix::from_fn(alg, n, |_, _| alg.zero())
    }

    pub fn identity(alg: &QuaternionAlgebra, n: usize) -> QMatrix {
        QMatrix::scalar(alg, n, &alg.level().one())
    }

    pub fn scalar(alg: &QuaternionAlgebra, n: usize, c: &FieldElement) -> QMatrix {
        let s = alg.scalar(c);
        QMatrix::from_fn(alg, n, |i, j| if i == j { s.clone() } else { alg.zero() })
    }

    pub fn diag(alg: &QuaternionAlgebra, d: &[QuaternionElement]) -> QMatrix {
        let n = d.len();
        QMatrix::from_fn(alg, n, |i, j| if i == j { d[i].clone() } else { alg.zero() })
    }

    pub fn block_diag(alg: &QuaternionAlgebra, blocks: &[QMatrix]) -> QMatrix {
        let n: usize = blocks.iter().map(|b| b.n).sum();
        let mut m = QMatrix::zero(alg, n);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.n {
                for j in 0..b.n {
                    m.set(off + i, off + j, b.get(i, j).clone());
                }
            }
            off += b.n;
        }
        m
    }

    pub fn random<R: Rng + ?Sized>(alg: &QuaternionAlgebra, n: usize, rng: &mut R, height: i64) -> QMatrix {
        QMatrix::from_fn(alg, n, |_, _| alg.random(rng, height))
    }

    pub fn algebra(&self) -> &QuaternionAlgebra {
        &self.alg
    }

    pub fn level(&self) -> &FieldTower {
        self.alg.level()
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &QuaternionElement {
        &self.e[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: QuaternionElement) {
        self.e[i * self.n + j] = v;
    }

    pub fn entries(&self) -> &[QuaternionElement] {
        &self.e
    }

    pub fn is_zero(&self) -> bool {
        self.e.iter().all(QuaternionElement::is_zero)
    }

    /// `μ` if the matrix is `μ·1`.
    pub fn as_scalar(&self) -> Option<FieldElement> {
        let c = self.get(0, 0).as_scalar()?;
        for i in 0..self.n {
            for j in 0..self.n {
                let x = self.get(i, j);
                if i == j {
                    if x.as_scalar().as_ref() != Some(&c) {
                        return None;
                    }
                } else if !x.is_zero() {
                    return None;
                }
            }
        }
        Some(c)
    }

    pub fn scale(&self, c: &FieldElement) -> QMatrix {
        QMatrix {
            alg: self.alg.clone(),
            n: self.n,
            e: self.e.iter().map(|x| x.scale(c)).collect(),
        }
    }

    /// Left multiplication of every entry by a quaternion.
    pub fn left_mul_entries(&self, q: &QuaternionElement) -> QMatrix {
        QMatrix {
            alg: self.alg.clone(),
            n: self.n,
            e: self.e.iter().map(|x| q * x).collect(),
        }
    }

    /// Conjugate transpose `ḡᵗ`.
    pub fn conj_transpose(&self) -> QMatrix {
        QMatrix::from_fn(&self.alg, self.n, |i, j| self.get(j, i).conj())
    }

    pub fn sub_block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> QMatrix {
        assert_eq!(rows.len(), cols.len(), "square blocks only");
        QMatrix::from_fn(&self.alg, rows.len(), |i, j| {
            self.get(rows.start + i, cols.start + j).clone()
        })
    }

    /// Map every coordinate of every entry into another algebra.
    pub fn map_entries<F>(&self, alg: &QuaternionAlgebra, f: F) -> Result<QMatrix, HermError>
    where
        F: Fn(&QuaternionElement) -> Result<QuaternionElement, HermError>,
    {
        let e = self.e.iter().map(f).collect::<Result<Vec<_>, _>>()?;
        Ok(QMatrix {
            alg: alg.clone(),
            n: self.n,
            e,
        })
    }

    pub fn lift_to(&self, alg: &QuaternionAlgebra) -> Result<QMatrix, HermError> {
        self.map_entries(alg, |x| Ok(x.lift_to(alg)?))
    }

    /// Inverse by Gauss-Jordan over the quaternions, pivoting on entries of
    /// nonzero reduced norm; falls back to a linear system over the centre
    /// when the algebra is split and no such pivot exists.
    pub fn inverse(&self) -> Result<QMatrix, HermError> {
        match self.gauss_jordan() {
            Some(m) => Ok(m),
            None => self.inverse_by_linear_system(),
        }
    }

    fn gauss_jordan(&self) -> Option<QMatrix> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = QMatrix::identity(&self.alg, n);
        for col in 0..n {
            let piv = (col..n).find(|&r| !a.get(r, col).nrd().is_zero())?;
            if piv != col {
                for j in 0..n {
                    a.e.swap(piv * n + j, col * n + j);
                    inv.e.swap(piv * n + j, col * n + j);
                }
            }
            let pinv = a.get(col, col).inv().ok()?;
            for j in 0..n {
                let x = &pinv * a.get(col, j);
                a.set(col, j, x);
                let y = &pinv * inv.get(col, j);
                inv.set(col, j, y);
            }
            for r in 0..n {
                if r == col || a.get(r, col).is_zero() {
                    continue;
                }
                let f = a.get(r, col).clone();
                for j in 0..n {
                    let x = a.get(r, j) - &(&f * a.get(col, j));
                    a.set(r, j, x);
                    let y = inv.get(r, j) - &(&f * inv.get(col, j));
                    inv.set(r, j, y);
                }
            }
        }
        Some(inv)
    }

    fn inverse_by_linear_system(&self) -> Result<QMatrix, HermError> {
        // Unknown X with self·X = 1; 4n² unknowns over the centre.
        let n = self.n;
        let k = self.level().clone();
        let m = 4 * n * n;
        let basis = [self.alg.one(), self.alg.i(), self.alg.j(), self.alg.ij()];
        // Column for unknown (r, c, t): self · (E_{rc} ⊗ basis[t]).
        let mut cols: Vec<Vec<FieldElement>> = Vec::with_capacity(m);
        for r in 0..n {
            for c in 0..n {
                for b in &basis {
                    let mut v = vec![k.zero(); m];
                    for i in 0..n {
                        let prod = self.get(i, r) * b;
                        for t in 0..4 {
                            v[(i * n + c) * 4 + t] = prod.coord(t).clone();
                        }
                    }
                    cols.push(v);
                }
            }
        }
        let mut rhs = vec![k.zero(); m];
        for i in 0..n {
            rhs[(i * n + i) * 4] = k.one();
        }
        let sol = solve_linear(&k, &cols, &rhs).ok_or(HermError::SingularElement)?;
        let mut out = QMatrix::zero(&self.alg, n);
        for r in 0..n {
            for c in 0..n {
                let base = (r * n + c) * 4;
                let q = self.alg.element([
                    sol[base].clone(),
                    sol[base + 1].clone(),
                    sol[base + 2].clone(),
                    sol[base + 3].clone(),
                ])?;
                out.set(r, c, q);
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson {
            n: self.n,
            rows: (0..self.n)
                .map(|i| {
                    (0..self.n)
                        .map(|j| QuaternionJson::from(self.get(i, j)).coords)
                        .collect()
                })
                .collect(),
        }
    }
}

/// Solve `Σ_j x_j cols[j] = rhs` over a field; `None` if singular.
pub fn solve_linear(k: &FieldTower, cols: &[Vec<FieldElement>], rhs: &[FieldElement]) -> Option<Vec<FieldElement>> {
    let m = rhs.len();
    let nv = cols.len();
    // Row-major augmented matrix.
    let mut a: Vec<Vec<FieldElement>> = (0..m)
        .map(|i| {
            let mut row: Vec<FieldElement> = cols.iter().map(|c| c[i].clone()).collect();
            row.push(rhs[i].clone());
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..nv {
        let Some(p) = (r..m).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].inv().ok()?;
        for x in a[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..m {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..=nv {
                    let v = &a[i][j] - &(&f * &a[r][j]);
                    a[i][j] = v;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m {
            break;
        }
    }
    if pivots.len() < nv {
        return None;
    }
    if a[r..].iter().any(|row| !row[nv].is_zero()) {
        return None;
    }
    let mut x = vec![k.zero(); nv];
    for (row, &c) in pivots.iter().enumerate() {
        x[c] = a[row][nv].clone();
    }
    Some(x)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub rows: Vec<Vec<[crate::field::Expr; 4]>>,
}

impl fmt::Display for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.n {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.n {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

impl fmt::Debug for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Mul<&QMatrix> for &QMatrix {
    type Output = QMatrix;
    fn mul(self, o: &QMatrix) -> QMatrix {
        assert_eq!(self.n, o.n, "size mismatch");
        let n = self.n;
        QMatrix::from_fn(&self.alg, n, |i, j| {
            let mut acc = self.alg.zero();
            for k in 0..n {
                let x = self.get(i, k);
                let y = o.get(k, j);
                if x.is_zero() || y.is_zero() {
                    continue;
                }
                acc = &acc + &(x * y);
            }
            acc
        })
    }
}

impl Add<&QMatrix> for &QMatrix {
    type Output = QMatrix;
    fn add(self, o: &QMatrix) -> QMatrix {
        assert_eq!(self.n, o.n, "size mismatch");
        QMatrix {
            alg: self.alg.clone(),
            n: self.n,
            e: self.e.iter().zip(&o.e).map(|(x, y)| x + y).collect(),
        }
    }
}

impl Sub<&QMatrix> for &QMatrix {
    type Output = QMatrix;
    fn sub(self, o: &QMatrix) -> QMatrix {
        assert_eq!(self.n, o.n, "size mismatch");
        QMatrix {
            alg: self.alg.clone(),
            n: self.n,
            e: self.e.iter().zip(&o.e).map(|(x, y)| x - y).collect(),
        }
    }
}

impl Neg for &QMatrix {
    type Output = QMatrix;
    fn neg(self) -> QMatrix {
        QMatrix {
            alg: self.alg.clone(),
            n: self.n,
            e: self.e.iter().map(|x| -x).collect(),
        }
    }
}
