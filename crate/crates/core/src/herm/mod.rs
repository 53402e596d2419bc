//! Matrix algebras `M_n(Q)` with the involution adjoint to a diagonal
//! skew-hermitian (orthogonal) or hermitian (symplectic) form.

mod matrix;
mod poly;
mod search;

use std::sync::OnceLock;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::brauer::{symbol_class, BrauerError};
use crate::field::{completed_square_class, FieldElement, FieldError, FieldTower, SquareClass};
use crate::quat::{QuatError, QuaternionAlgebra, QuaternionElement};

pub use matrix::{solve_linear, MatrixJson, QMatrix};
pub use poly::Polynomial;
pub(crate) use poly::{SplitRing, SplitScalar};
pub use search::{
    diagonal_improper_search, find_anticommuting_with_square, improper_search, similitude_census,
    ImproperSearchOutcome, SearchBudget,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HermError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Quat(#[from] QuatError),
    #[error(transparent)]
    Brauer(#[from] BrauerError),
    #[error("matrix sizes do not match")]
    SizeMismatch,
    #[error("form entry {0} is not admissible")]
    BadEntry(String),
    #[error("σ(g)g is not a scalar")]
    NotSimilitude,
    #[error("element is not invertible")]
    SingularElement,
    #[error("operation needs an orthogonal involution")]
    SymplecticInput,
    #[error("operation needs a symplectic involution")]
    OrthogonalInput,
    #[error("element is not σ-symmetric")]
    NotSymmetric,
    #[error("reduced characteristic polynomial is not a square")]
    NonSquareCharPoly,
    #[error("discriminant formula failed its self-check")]
    DiscriminantOracle,
    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormKind {
    /// Pure entries; the adjoint involution is orthogonal.
    SkewHermitian,
    /// Scalar entries; the adjoint involution is symplectic.
    Hermitian,
}

/// A diagonal form `⟨q₁, …, q_n⟩` on `Qⁿ`, `h(x, y) = Σ x̄ᵢ qᵢ yᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewHermitianForm {
    alg: QuaternionAlgebra,
    entries: Vec<QuaternionElement>,
    kind: FormKind,
}

impl SkewHermitianForm {
    pub fn new(alg: &QuaternionAlgebra, entries: Vec<QuaternionElement>, kind: FormKind) -> Result<Self, HermError> {
        for q in &entries {
            if q.algebra() != alg {
                return Err(QuatError::AlgebraMismatch.into());
            }
            let ok = match kind {
                FormKind::SkewHermitian => q.is_pure(),
                FormKind::Hermitian => q.is_scalar(),
            };
            if !ok || q.nrd().is_zero() {
                return Err(HermError::BadEntry(q.to_string()));
            }
        }
        Ok(SkewHermitianForm {
            alg: alg.clone(),
            entries,
            kind,
        })
    }

    pub fn skew_hermitian(alg: &QuaternionAlgebra, entries: Vec<QuaternionElement>) -> Result<Self, HermError> {
        Self::new(alg, entries, FormKind::SkewHermitian)
    }

    pub fn hermitian(alg: &QuaternionAlgebra, scalars: &[FieldElement]) -> Result<Self, HermError> {
        let entries = scalars.iter().map(|c| alg.scalar(c)).collect();
        Self::new(alg, entries, FormKind::Hermitian)
    }

    pub fn algebra(&self) -> &QuaternionAlgebra {
        &self.alg
    }

    pub fn entries(&self) -> &[QuaternionElement] {
        &self.entries
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn gram(&self) -> QMatrix {
        QMatrix::diag(&self.alg, &self.entries)
    }

    /// `h(x, y) = Σ x̄ᵢ qᵢ yᵢ`.
    pub fn value(&self, x: &[QuaternionElement], y: &[QuaternionElement]) -> Result<QuaternionElement, HermError> {
        if x.len() != self.size() || y.len() != self.size() {
            return Err(HermError::SizeMismatch);
        }
        let mut acc = self.alg.zero();
        for ((xi, qi), yi) in x.iter().zip(&self.entries).zip(y) {
            acc = &acc + &(&(&xi.conj() * qi) * yi);
        }
        Ok(acc)
    }

    /// Orthogonal sum `self ⊥ other`.
    pub fn orthogonal_sum(&self, other: &SkewHermitianForm) -> Result<Self, HermError> {
        if other.alg != self.alg || other.kind != self.kind {
            return Err(QuatError::AlgebraMismatch.into());
        }
        let mut e = self.entries.clone();
        e.extend(other.entries.iter().cloned());
        Self::new(&self.alg, e, self.kind)
    }

    /// The same diagonal over a larger algebra.
    pub fn lift_to(&self, alg: &QuaternionAlgebra) -> Result<Self, HermError> {
        let e = self
            .entries
            .iter()
            .map(|q| q.lift_to(alg))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(alg, e, self.kind)
    }

    /// Every entry multiplied by the scalar `c`.
    pub fn scaled(&self, c: &FieldElement) -> Result<Self, HermError> {
        Self::new(&self.alg, self.entries.iter().map(|q| q.scale(c)).collect(), self.kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Parity {
    Proper,
    Improper,
}

impl Parity {
    pub fn compose(self, other: Parity) -> Parity {
        if self == other {
            Parity::Proper
        } else {
            Parity::Improper
        }
    }
}

/// `g` with `σ(g)g = μ`, and its parity.
#[derive(Debug, Clone, PartialEq)]
pub struct Similitude {
    pub g: QMatrix,
    pub mu: FieldElement,
    pub parity: Parity,
}

/// The discriminant `(−1)ⁿ Nrd(G)` and, when computable, its square class.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminant {
    pub value: FieldElement,
    pub class: Option<SquareClass>,
}

/// `(M_n(Q), σ)` with `σ` adjoint to a diagonal form.
#[derive(Debug, Clone, PartialEq)]
pub struct InvolutionAlgebra {
    form: SkewHermitianForm,
    gram_inv: Vec<QuaternionElement>,
}

impl InvolutionAlgebra {
    pub fn new(form: SkewHermitianForm) -> Result<Self, HermError> {
        let gram_inv = form.entries.iter().map(|q| q.inv()).collect::<Result<Vec<_>, _>>()?;
        Ok(InvolutionAlgebra { form, gram_inv })
    }

    pub fn form(&self) -> &SkewHermitianForm {
        &self.form
    }

    /// The same algebra with involution over a larger level.
    pub fn extend_to(&self, level: &FieldTower) -> Result<Self, HermError> {
        let alg = self.algebra().extend_to(level)?;
        Self::new(self.form.lift_to(&alg)?)
    }

    pub fn algebra(&self) -> &QuaternionAlgebra {
        &self.form.alg
    }

    pub fn level(&self) -> &FieldTower {
        self.form.alg.level()
    }

    /// `n`, the matrix size over the quaternions.
    pub fn size(&self) -> usize {
        self.form.size()
    }

    /// `deg A = 2n`.
    pub fn degree(&self) -> usize {
        2 * self.form.size()
    }

    pub fn is_orthogonal(&self) -> bool {
        self.form.kind == FormKind::SkewHermitian
    }

    pub fn identity(&self) -> QMatrix {
        QMatrix::identity(self.algebra(), self.size())
    }

    fn check_size(&self, g: &QMatrix) -> Result<(), HermError> {
        if g.size() != self.size() || g.algebra() != self.algebra() {
            return Err(HermError::SizeMismatch);
        }
        Ok(())
    }

    /// `σ(g) = G⁻¹ ḡᵗ G`, entrywise `qᵢ⁻¹ conj(g_ji) q_j`.
    pub fn apply(&self, g: &QMatrix) -> Result<QMatrix, HermError> {
        self.check_size(g)?;
        let d = &self.form.entries;
        Ok(QMatrix::from_fn(self.algebra(), self.size(), |i, j| {
            let c = g.get(j, i);
            if c.is_zero() {
                return self.algebra().zero();
            }
            &(&self.gram_inv[i] * &c.conj()) * &d[j]
        }))
    }

    pub fn is_symmetric(&self, g: &QMatrix) -> Result<bool, HermError> {
        Ok(self.apply(g)? == *g)
    }

    /// `μ` with `σ(g)g = μ·1`.
    pub fn multiplier(&self, g: &QMatrix) -> Result<FieldElement, HermError> {
        let p = &self.apply(g)? * g;
        match p.as_scalar() {
            Some(mu) if !mu.is_zero() => Ok(mu),
            Some(_) => Err(HermError::SingularElement),
            None => {
                if self.reduced_norm(g)?.is_zero() {
                    Err(HermError::SingularElement)
                } else {
                    Err(HermError::NotSimilitude)
                }
            }
        }
    }

    /// The image of `g` in `M_{2n}(k[u]/(u² − a))` under
    /// `x ↦ [[x₀ + x₁u, x₂ + x₃u], [b(x₂ − x₃u), x₀ − x₁u]]`.
    pub(crate) fn split_image(&self, g: &QMatrix) -> (SplitRing, Vec<Vec<SplitScalar>>) {
        let alg = self.algebra();
        let ring = SplitRing { a: alg.a().clone() };
        let b = alg.b();
        let n = g.size();
        let mut m = vec![vec![ring.zero(); 2 * n]; 2 * n];
        for r in 0..n {
            for c in 0..n {
                let x = g.get(r, c);
                if x.is_zero() {
                    continue;
                }
                let [x0, x1, x2, x3] = x.coords();
                m[2 * r][2 * c] = SplitScalar {
                    p: x0.clone(),
                    q: x1.clone(),
                };
                m[2 * r][2 * c + 1] = SplitScalar {
                    p: x2.clone(),
                    q: x3.clone(),
                };
                m[2 * r + 1][2 * c] = SplitScalar {
                    p: b * x2,
                    q: -(b * x3),
                };
                m[2 * r + 1][2 * c + 1] = SplitScalar { p: x0.clone(), q: -x1 };
            }
        }
        (ring, m)
    }

    /// The reduced characteristic polynomial, of degree `2n`; its
    /// coefficients are checked to have no `u`-part.
    pub fn reduced_charpoly(&self, g: &QMatrix) -> Result<Polynomial, HermError> {
        self.check_size(g)?;
        let (ring, m) = self.split_image(g);
        let c = ring.charpoly(&m);
        if c.iter().any(|x| !x.q.is_zero()) {
            return Err(HermError::VerificationFailed(
                "characteristic polynomial does not descend".into(),
            ));
        }
        Ok(Polynomial::new(
            self.level(),
            c.into_iter().rev().map(|x| x.p).collect(),
        ))
    }

    /// `Nrd(g)`, the determinant of the split image.
    pub fn reduced_norm(&self, g: &QMatrix) -> Result<FieldElement, HermError> {
        let cp = self.reduced_charpoly(g)?;
        Ok(cp.coeffs().first().cloned().unwrap_or_else(|| self.level().zero()))
    }

    /// Proper iff `Nrd(g) = μⁿ`, improper iff `Nrd(g) = −μⁿ`.
    pub fn classify(&self, g: &QMatrix) -> Result<Similitude, HermError> {
        if !self.is_orthogonal() {
            return Err(HermError::SymplecticInput);
        }
        let mu = self.multiplier(g)?;
        let nrd = self.reduced_norm(g)?;
        let mun = mu.pow(self.size() as i64);
        let proper = nrd == mun;
        let improper = nrd == -&mun;
        let parity = match (proper, improper) {
            (true, false) => Parity::Proper,
            (false, true) => Parity::Improper,
            _ => {
                return Err(HermError::VerificationFailed(format!(
                    "Nrd(g) = {nrd} is neither μⁿ nor −μⁿ for μ = {mu}"
                )))
            }
        };
        Ok(Similitude {
            g: g.clone(),
            mu,
            parity,
        })
    }

    /// `(−1)ⁿ Nrd(G)` for the Gram matrix `G`.
    pub fn discriminant(&self) -> Result<Discriminant, HermError> {
        if !self.is_orthogonal() {
            return Err(HermError::SymplecticInput);
        }
        if !discriminant_self_check() {
            return Err(HermError::DiscriminantOracle);
        }
        let value = self.discriminant_value()?;
        let class = completed_square_class(&value).ok();
        Ok(Discriminant { value, class })
    }

    fn discriminant_value(&self) -> Result<FieldElement, HermError> {
        let nrd = self.reduced_norm(&self.form.gram())?;
        Ok(if self.size() % 2 == 1 { -nrd } else { nrd })
    }

    /// The independent route: `(−1)ⁿ Nrd(x)` for an invertible skew `x`,
    /// with `x = y − σ(y)` for seeded random `y`. Returns `x` and the value.
    pub fn discriminant_from_skew<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        height: i64,
    ) -> Result<(QMatrix, FieldElement), HermError> {
        if !self.is_orthogonal() {
            return Err(HermError::SymplecticInput);
        }
        for _ in 0..64 {
            let y = QMatrix::random(self.algebra(), self.size(), rng, height);
            let x = &y - &self.apply(&y)?;
            let nrd = self.reduced_norm(&x)?;
            if !nrd.is_zero() {
                let v = if self.size() % 2 == 1 { -nrd } else { nrd };
                return Ok((x, v));
            }
        }
        Err(HermError::SingularElement)
    }

    /// The degree-`n` monic `Prp` with `Prp² = Prd` for σ-symmetric `g`
    /// under a symplectic involution.
    pub fn pfaffian_charpoly(&self, g: &QMatrix) -> Result<Polynomial, HermError> {
        if self.is_orthogonal() {
            return Err(HermError::OrthogonalInput);
        }
        if !self.is_symmetric(g)? {
            return Err(HermError::NotSymmetric);
        }
        self.reduced_charpoly(g)?
            .monic_sqrt()
            .ok_or(HermError::NonSquareCharPoly)
    }

    /// `y + σ(y)` for a seeded random `y`.
    pub fn random_symmetric<R: Rng + ?Sized>(&self, rng: &mut R, height: i64) -> Result<QMatrix, HermError> {
        let y = QMatrix::random(self.algebra(), self.size(), rng, height);
        Ok(&y + &self.apply(&y)?)
    }

    /// Whether the multiplier criterion holds for `s`: `(δ, μ)` is trivial
    /// for proper similitudes and Brauer-equivalent to `Q` for improper ones.
    pub fn criterion_holds(&self, s: &Similitude) -> Result<bool, HermError> {
        let delta = self.discriminant()?.value;
        let c = symbol_class(&delta, &s.mu)?;
        Ok(match s.parity {
            Parity::Proper => c.is_split()?,
            Parity::Improper => crate::brauer::brauer_equal(&c, &crate::brauer::algebra_class(self.algebra())?)?,
        })
    }
}

/// Free-function forms of the [`InvolutionAlgebra`] operations.
pub fn involution_apply(a: &InvolutionAlgebra, g: &QMatrix) -> Result<QMatrix, HermError> {
    a.apply(g)
}

pub fn multiplier(a: &InvolutionAlgebra, g: &QMatrix) -> Result<FieldElement, HermError> {
    a.multiplier(g)
}

pub fn reduced_norm(a: &InvolutionAlgebra, g: &QMatrix) -> Result<FieldElement, HermError> {
    a.reduced_norm(g)
}

pub fn classify_similitude(a: &InvolutionAlgebra, g: &QMatrix) -> Result<Parity, HermError> {
    Ok(a.classify(g)?.parity)
}

pub fn discriminant(a: &InvolutionAlgebra) -> Result<Discriminant, HermError> {
    a.discriminant()
}

pub fn pfaffian_charpoly(a: &InvolutionAlgebra, g: &QMatrix) -> Result<Polynomial, HermError> {
    a.pfaffian_charpoly(g)
}

/// One-time check of the discriminant formula against the skew-element
/// route on fixed instances with `n ≤ 2`, split and non-split.
pub fn discriminant_self_check() -> bool {
    static OK: OnceLock<bool> = OnceLock::new();
    *OK.get_or_init(|| run_discriminant_self_check().unwrap_or(false))
}

fn run_discriminant_self_check() -> Result<bool, HermError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let q = FieldTower::rationals();
    let symbols = [(-1, -1), (2, 3), (1, 5), (-3, 7)];
    for (a, b) in symbols {
        let alg = QuaternionAlgebra::new(&q, &q.from_int(a), &q.from_int(b))?;
        let forms = [
            vec![alg.i()],
            vec![alg.j()],
            vec![alg.i(), alg.j()],
            vec![&alg.i() + &alg.j(), alg.ij()],
        ];
        for entries in forms {
            let asig = InvolutionAlgebra::new(SkewHermitianForm::skew_hermitian(&alg, entries)?)?;
            let formula = asig.discriminant_value()?;
            for _ in 0..3 {
                let (_, v) = asig.discriminant_from_skew(&mut rng, 3)?;
                if !(&v / &formula).is_square()? {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(a: i64, b: i64) -> (FieldTower, QuaternionAlgebra) {
        let q = FieldTower::rationals();
        let alg = QuaternionAlgebra::new(&q, &q.from_int(a), &q.from_int(b)).unwrap();
        (q, alg)
    }

    fn one_by_one(alg: &QuaternionAlgebra, x: QuaternionElement) -> QMatrix {
        QMatrix::diag(alg, &[x])
    }

    #[test]
    fn adjoint_of_i_on_basis() {
        let (_, alg) = setup(-1, -3);
        let asig = InvolutionAlgebra::new(SkewHermitianForm::skew_hermitian(&alg, vec![alg.i()]).unwrap()).unwrap();
        let j = one_by_one(&alg, alg.j());
        assert_eq!(asig.apply(&j).unwrap(), j);
        let i = one_by_one(&alg, alg.i());
        assert_eq!(asig.apply(&i).unwrap(), -&i);
        assert_eq!(asig.apply(&asig.identity()).unwrap(), asig.identity());
    }

    #[test]
    fn multiplier_norm_and_parity() {
        let (q, alg) = setup(-1, -3);
        let asig = InvolutionAlgebra::new(SkewHermitianForm::skew_hermitian(&alg, vec![alg.i()]).unwrap()).unwrap();
        let j = one_by_one(&alg, alg.j());
        assert_eq!(asig.multiplier(&j).unwrap(), q.from_int(-3));
        assert_eq!(asig.reduced_norm(&j).unwrap(), q.from_int(3));
        assert_eq!(asig.classify(&j).unwrap().parity, Parity::Improper);
        let i = one_by_one(&alg, alg.i());
        let s = asig.classify(&i).unwrap();
        assert_eq!((s.mu, s.parity), (q.from_int(1), Parity::Proper));
        let c = asig.identity().scale(&q.from_int(5));
        assert_eq!(asig.multiplier(&c).unwrap(), q.from_int(25));
        assert_eq!(asig.classify(&asig.identity()).unwrap().parity, Parity::Proper);
        let g = QMatrix::diag(&alg, &[&alg.one() + &alg.i()]);
        let two =
            InvolutionAlgebra::new(SkewHermitianForm::skew_hermitian(&alg, vec![alg.i(), alg.j()]).unwrap()).unwrap();
        let mut h = QMatrix::identity(&alg, 2);
        h.set(0, 1, alg.one());
        assert_eq!(two.multiplier(&h), Err(HermError::NotSimilitude));
        // ⟨i⟩: (1+i) commutes with i, so σ(1+i)(1+i) = (1−i)(1+i) = 2.
        assert_eq!(asig.multiplier(&g).unwrap(), q.from_int(2));
    }

    #[test]
    fn reduced_norm_matches_quaternion_norm() {
        let (_, alg) = setup(2, 5);
        let asig = InvolutionAlgebra::new(SkewHermitianForm::skew_hermitian(&alg, vec![alg.i()]).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = alg.random(&mut rng, 4);
            assert_eq!(asig.reduced_norm(&one_by_one(&alg, x.clone())).unwrap(), x.nrd());
        }
    }

    #[test]
    fn reduced_norm_of_block_triangular_and_swaps() {
        let (_, alg) = setup(-1, -1);
        let asig =
            InvolutionAlgebra::new(SkewHermitianForm::skew_hermitian(&alg, vec![alg.i(), alg.j(), alg.ij()]).unwrap())
                .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut g = QMatrix::zero(&alg, 3);
        let mut expected = alg.level().one();
        for d in 0..3 {
            let x = alg.random(&mut rng, 3);
            expected = &expected * &x.nrd();
            g.set(d, d, x);
            for c in d + 1..3 {
                g.set(d, c, alg.random(&mut rng, 3));
            }
        }
        assert_eq!(asig.reduced_norm(&g).unwrap(), expected);
    }

    #[test]
    fn discriminant_examples() {
        let (q, alg) = setup(-2, 5);
        let one = InvolutionAlgebra::new(SkewHermitianForm::skew_hermitian(&alg, vec![alg.i()]).unwrap()).unwrap();
        assert_eq!(one.discriminant().unwrap().value, q.from_int(-2));
        let two =
            InvolutionAlgebra::new(SkewHermitianForm::skew_hermitian(&alg, vec![alg.i(), alg.j()]).unwrap()).unwrap();
        assert_eq!(two.discriminant().unwrap().value, q.from_int(-10));
        assert!(discriminant_self_check());
    }

    #[test]
    fn pfaffian_of_scalar_and_random_symmetric() {
        let (q, alg) = setup(-1, -1);
        let form = SkewHermitianForm::hermitian(&alg, &[q.one(), q.from_int(2), q.from_int(-3)]).unwrap();
        let asig = InvolutionAlgebra::new(form).unwrap();
        let c = q.from_int(7);
        let g = asig.identity().scale(&c);
        assert_eq!(asig.pfaffian_charpoly(&g).unwrap(), Polynomial::linear_power(&c, 3));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let s = asig.random_symmetric(&mut rng, 3).unwrap();
            let p = asig.pfaffian_charpoly(&s).unwrap();
            assert_eq!(p.mul(&p), asig.reduced_charpoly(&s).unwrap());
            assert_eq!(p.degree(), Some(3));
        }
        let y = QMatrix::diag(&alg, &[alg.i(), alg.one(), alg.one()]);
        assert_eq!(asig.pfaffian_charpoly(&y), Err(HermError::NotSymmetric));
    }

    #[test]
    fn inverse_in_split_algebra_uses_fallback() {
        // (1, 1) is split; a matrix whose entries are all zero divisors.
        let (_, alg) = setup(1, 1);
        let z = &alg.one() + &alg.i();
        let w = &alg.one() - &alg.i();
        let g = QMatrix::from_rows(&alg, vec![vec![z.clone(), w.clone()], vec![w, z]]).unwrap();
        let inv = g.inverse().unwrap();
        assert_eq!(&g * &inv, QMatrix::identity(&alg, 2));
    }
}
