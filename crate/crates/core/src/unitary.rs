//! The unitary extension `(B, τ) = (A, σ) ⊗ (K, ι)` with `K = F(u)`,
//! `u² = a`, and both directions of the hyperbolicity criterion.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::field::{FieldElement, FieldError, FieldTower};
use crate::herm::{find_anticommuting_with_square, FormKind, HermError, InvolutionAlgebra, Polynomial, QMatrix};
use crate::quat::{value_grid, QuaternionElement};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitaryError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Herm(#[from] HermError),
    #[error("radicand {0} is a square")]
    SquareRadicand(String),
    #[error("element is not σ-symmetric")]
    NotSymmetric,
    #[error("s² is not a·1")]
    WrongSquare,
    #[error("e₂ is not invertible")]
    SingularE2,
    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

/// One checked identity: its statement and whether the residual vanished.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub residual_zero: bool,
}

impl IdentityCheck {
    fn of(identity: &str, lhs: &UnitaryElement, rhs: &UnitaryElement) -> IdentityCheck {
        IdentityCheck {
            identity: identity.to_string(),
            residual_zero: lhs == rhs,
        }
    }

    fn matrices(identity: &str, lhs: &QMatrix, rhs: &QMatrix) -> IdentityCheck {
        IdentityCheck {
            identity: identity.to_string(),
            residual_zero: lhs == rhs,
        }
    }
}

fn all_hold(checks: &[IdentityCheck]) -> Result<(), UnitaryError> {
    match checks.iter().find(|c| !c.residual_zero) {
        Some(c) => Err(UnitaryError::VerificationFailed(c.identity.clone())),
        None => Ok(()),
    }
}

/// `b₀ + b₁u`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryElement {
    pub b0: QMatrix,
    pub b1: QMatrix,
}

/// `(A, σ) ⊗ (F(u), ι)` with `u² = a`, `ι(u) = −u`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryExtension {
    asig: InvolutionAlgebra,
    a: FieldElement,
}

impl UnitaryExtension {
    /// Requires `a` to be a non-square of the level of `asig`.
    pub fn new(asig: &InvolutionAlgebra, a: &FieldElement) -> Result<Self, UnitaryError> {
        let a = a.lift_to(asig.level())?;
        if a.is_zero() || a.is_square()? {
            return Err(UnitaryError::SquareRadicand(a.to_string()));
        }
        Ok(UnitaryExtension { asig: asig.clone(), a })
    }

    /// The complete case: `F̂ = F((x))`, `K̂ = F̂(ξ)`, `ξ² = x`.
    pub fn complete(asig: &InvolutionAlgebra, name: &str) -> Result<Self, UnitaryError> {
        let fhat = asig.level().laurent(name)?;
        let lifted = asig.extend_to(&fhat)?;
        let x = fhat.generator().expect("Laurent layer has a generator");
        Self::new(&lifted, &x)
    }

    pub fn involution_algebra(&self) -> &InvolutionAlgebra {
        &self.asig
    }

    pub fn radicand(&self) -> &FieldElement {
        &self.a
    }

    pub fn level(&self) -> &FieldTower {
        self.asig.level()
    }

    fn n(&self) -> usize {
        self.asig.size()
    }

    fn zero_matrix(&self) -> QMatrix {
        QMatrix::zero(self.asig.algebra(), self.n())
    }

    pub fn element(&self, b0: QMatrix, b1: QMatrix) -> UnitaryElement {
        UnitaryElement { b0, b1 }
    }

    pub fn from_a(&self, b0: &QMatrix) -> UnitaryElement {
        UnitaryElement {
            b0: b0.clone(),
            b1: self.zero_matrix(),
        }
    }

    pub fn one(&self) -> UnitaryElement {
        self.from_a(&self.asig.identity())
    }

    pub fn u(&self) -> UnitaryElement {
        UnitaryElement {
            b0: self.zero_matrix(),
            b1: self.asig.identity(),
        }
    }

    /// `c₀ + c₁u` for scalars of the centre.
    pub fn scalar(&self, c0: &FieldElement, c1: &FieldElement) -> UnitaryElement {
        UnitaryElement {
            b0: self.asig.identity().scale(c0),
            b1: self.asig.identity().scale(c1),
        }
    }

    pub fn add(&self, x: &UnitaryElement, y: &UnitaryElement) -> UnitaryElement {
        UnitaryElement {
            b0: &x.b0 + &y.b0,
            b1: &x.b1 + &y.b1,
        }
    }

    pub fn sub(&self, x: &UnitaryElement, y: &UnitaryElement) -> UnitaryElement {
        UnitaryElement {
            b0: &x.b0 - &y.b0,
            b1: &x.b1 - &y.b1,
        }
    }

    /// `(b₀ + b₁u)(c₀ + c₁u) = b₀c₀ + a b₁c₁ + (b₀c₁ + b₁c₀)u`.
    pub fn mul(&self, x: &UnitaryElement, y: &UnitaryElement) -> UnitaryElement {
        let mut b0 = &x.b0 * &y.b0;
        if !x.b1.is_zero() && !y.b1.is_zero() {
            b0 = &b0 + &(&x.b1 * &y.b1).scale(&self.a);
        }
        let b1 = &(&x.b0 * &y.b1) + &(&x.b1 * &y.b0);
        UnitaryElement { b0, b1 }
    }

    /// `τ(b₀ + b₁u) = σ(b₀) − σ(b₁)u`.
    pub fn tau(&self, x: &UnitaryElement) -> Result<UnitaryElement, UnitaryError> {
        Ok(UnitaryElement {
            b0: self.asig.apply(&x.b0)?,
            b1: -&self.asig.apply(&x.b1)?,
        })
    }

    /// `τ(y)y` as a scalar `c₀ + c₁u` of `K`, if it is one.
    pub fn hermitian_value(&self, y: &UnitaryElement) -> Result<Option<(FieldElement, FieldElement)>, UnitaryError> {
        let p = self.mul(&self.tau(y)?, y);
        Ok(match (p.b0.as_scalar(), p.b1.as_scalar()) {
            (Some(c0), Some(c1)) => Some((c0, c1)),
            (Some(c0), None) if p.b1.is_zero() => Some((c0, self.level().zero())),
            (None, Some(c1)) if p.b0.is_zero() => Some((self.level().zero(), c1)),
            _ if p.b0.is_zero() && p.b1.is_zero() => Some((self.level().zero(), self.level().zero())),
            _ => None,
        })
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R, height: i64) -> UnitaryElement {
        let alg = self.asig.algebra();
        UnitaryElement {
            b0: QMatrix::random(alg, self.n(), rng, height),
            b1: QMatrix::random(alg, self.n(), rng, height),
        }
    }

    /// `e = ½(1 + s u⁻¹) = ½ + (s/2a)u` for σ-symmetric `s` with `s² = a`,
    /// returned with the checks `e² = e` and `τ(e) = 1 − e`.
    pub fn idempotent_from_embedding(&self, s: &QMatrix) -> Result<Idempotent, UnitaryError> {
        if !self.asig.is_symmetric(s)? {
            return Err(UnitaryError::NotSymmetric);
        }
        if s * s != self.asig.identity().scale(&self.a) {
            return Err(UnitaryError::WrongSquare);
        }
        let l = self.level();
        let half = l.from_ratio(1, 2);
        let e = UnitaryElement {
            b0: self.asig.identity().scale(&half),
            b1: s.scale(&(&half / &self.a)),
        };
        let transcript = self.idempotent_checks(&e)?;
        all_hold(&transcript)?;
        Ok(Idempotent { e, transcript })
    }

    fn idempotent_checks(&self, e: &UnitaryElement) -> Result<Vec<IdentityCheck>, UnitaryError> {
        let one = self.one();
        let te = self.tau(e)?;
        let s1 = self.asig.apply(&e.b0)?;
        let s2 = self.asig.apply(&e.b1)?;
        let id = self.asig.identity();
        Ok(vec![
            IdentityCheck::of("e² = e", &self.mul(e, e), e),
            IdentityCheck::of("τ(e) = 1 − e", &te, &self.sub(&one, e)),
            IdentityCheck::of("τ(e)e = 0", &self.mul(&te, e), &self.sub(&one, &one)),
            IdentityCheck::matrices("σ(e₁) = 1 − e₁", &s1, &(&id - &e.b0)),
            IdentityCheck::matrices("σ(e₁)e₁ = a σ(e₂)e₂", &(&s1 * &e.b0), &(&s2 * &e.b1).scale(&self.a)),
        ])
    }

    /// `s₀ = e₁e₂⁻¹` for `e = e₁ + e₂u` with `e² = e`, `τ(e) = 1 − e`.
    pub fn embedding_from_idempotent(&self, e: &UnitaryElement) -> Result<Embedding, UnitaryError> {
        let mut transcript = self.idempotent_checks(e)?;
        all_hold(&transcript)?;
        if e.b1.is_zero() {
            return Err(UnitaryError::SingularE2);
        }
        let e2_inv = match e.b1.inverse() {
            Ok(m) => m,
            Err(HermError::SingularElement) => return Err(UnitaryError::SingularE2),
            Err(err) => return Err(err.into()),
        };
        if &e.b1 * &e2_inv != self.asig.identity() {
            return Err(UnitaryError::SingularE2);
        }
        let s0 = &e.b0 * &e2_inv;
        transcript.push(IdentityCheck::matrices("σ(s₀) = s₀", &self.asig.apply(&s0)?, &s0));
        transcript.push(IdentityCheck::matrices(
            "s₀² = a",
            &(&s0 * &s0),
            &self.asig.identity().scale(&self.a),
        ));
        all_hold(&transcript)?;
        Ok(Embedding { s0, transcript })
    }

    /// Leading `u`-adic coefficient of `y` when `a` is the uniformizer of a
    /// Laurent layer: `y = Σ a_r u^r`, returns `(r, a_r)` with `a_r` over
    /// the level below.
    pub fn leading_coefficient(&self, y: &UnitaryElement) -> Result<Option<(i64, QMatrix)>, UnitaryError> {
        let below_asig = self.residue_algebra()?;
        let v0 = matrix_valuation(&y.b0)?;
        let v1 = matrix_valuation(&y.b1)?;
        let r0 = v0.map(|v| 2 * v);
        let r1 = v1.map(|v| 2 * v + 1);
        let (r, m, k) = match (r0, r1) {
            (None, None) => return Ok(None),
            (Some(r), None) => (r, &y.b0, r / 2),
            (None, Some(r)) => (r, &y.b1, (r - 1) / 2),
            (Some(a), Some(b)) if a < b => (a, &y.b0, a / 2),
            (_, Some(b)) => (b, &y.b1, (b - 1) / 2),
        };
        let alg = below_asig.algebra();
        let coeff = m.map_entries(alg, |q| {
            let c = |t: usize| q.coord(t).coefficient(k);
            Ok(alg.element([c(0)?, c(1)?, c(2)?, c(3)?])?)
        })?;
        Ok(Some((r, coeff)))
    }

    /// `(A, σ)` over the level below the Laurent layer of `a`.
    pub fn residue_algebra(&self) -> Result<InvolutionAlgebra, UnitaryError> {
        let l = self.level();
        if !l.is_laurent() || l.generator().as_ref() != Some(&self.a) {
            return Err(FieldError::NotLaurentLayer(l.to_string()).into());
        }
        let below = l.below().expect("layer");
        let alg = self.asig.algebra();
        let down = |x: &FieldElement| {
            x.descend_to(below)
                .ok_or_else(|| FieldError::UnsupportedLayer(x.to_string()))
        };
        let qa =
            crate::quat::QuaternionAlgebra::new(below, &down(alg.a())?, &down(alg.b())?).map_err(HermError::from)?;
        let entries = self
            .asig
            .form()
            .entries()
            .iter()
            .map(|q| q.map_coords(&qa, |c| down(c)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(HermError::from)?;
        let form = crate::herm::SkewHermitianForm::new(&qa, entries, self.asig.form().kind())?;
        Ok(InvolutionAlgebra::new(form)?)
    }
}

/// Minimum valuation over all coordinates of all entries; `None` for zero.
pub fn matrix_valuation(m: &QMatrix) -> Result<Option<i64>, FieldError> {
    let mut best: Option<i64> = None;
    for q in m.entries() {
        for c in q.coords() {
            if !c.is_zero() {
                let v = c.valuation()?;
                best = Some(best.map_or(v, |b| b.min(v)));
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Idempotent {
    pub e: UnitaryElement,
    pub transcript: Vec<IdentityCheck>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub s0: QMatrix,
    pub transcript: Vec<IdentityCheck>,
}

/// Evidence that no σ-symmetric element squares to `a` in the split
/// symplectic case of degree `2 mod 4`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PfaffianEvidence {
    pub height: i64,
    pub candidates: usize,
    /// Every candidate had an odd-degree Pfaffian polynomial.
    pub odd_degree: bool,
    /// No candidate satisfied `s² = a`.
    pub no_root: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HyperbolicityOutcome {
    Hyperbolic { witness: QMatrix, idempotent: Idempotent },
    ExceptionalCase(PfaffianEvidence),
    NotFoundWithinBound { bound: i64 },
}

/// Search a σ-symmetric `s` with `s² = a`, block by block: pairs of entries
/// `q, −q` span hyperbolic planes and get the explicit antidiagonal pattern
/// (`[[0, 1], [a, 0]]` for hermitian forms, `[[0, y], [−a y/Nrd(y), 0]]`
/// with `y` pure for skew-hermitian ones), remaining skew-hermitian entries
/// `q` get a pure root of `a` anticommuting with `q`. The split symplectic
/// case of odd `n` is reported as exceptional with exhaustive Pfaffian
/// evidence at height `pfaffian_height`.
pub fn hyperbolicity_check(
    asig: &InvolutionAlgebra,
    a: &FieldElement,
    bound: i64,
    pfaffian_height: i64,
) -> Result<HyperbolicityOutcome, UnitaryError> {
    let ext = UnitaryExtension::new(asig, a)?;
    let a = ext.radicand().clone();
    let alg = asig.algebra();
    let n = asig.size();
    if !asig.is_orthogonal() && n % 2 == 1 && alg.is_split().map_err(HermError::from)? {
        return Ok(HyperbolicityOutcome::ExceptionalCase(pfaffian_evidence(
            asig,
            &a,
            pfaffian_height,
        )?));
    }
    let d = asig.form().entries();
    let mut used = vec![false; n];
    let mut s = QMatrix::zero(alg, n);
    for p in 0..n {
        if used[p] {
            continue;
        }
        if let Some(q) = (p + 1..n).find(|&q| !used[q] && d[q] == -&d[p]) {
            used[p] = true;
            used[q] = true;
            let block = hyperbolic_block(asig, &d[p], &a)?;
            for (bi, gi) in [(0, p), (1, q)] {
                for (bj, gj) in [(0, p), (1, q)] {
                    s.set(gi, gj, block.get(bi, bj).clone());
                }
            }
            continue;
        }
        if asig.form().kind() == FormKind::Hermitian {
            return Ok(HyperbolicityOutcome::NotFoundWithinBound { bound });
        }
        match find_anticommuting_with_square(&d[p], &a, bound) {
            Some(r) => {
                used[p] = true;
                s.set(p, p, r);
            }
            None => return Ok(HyperbolicityOutcome::NotFoundWithinBound { bound }),
        }
    }
    let idempotent = ext.idempotent_from_embedding(&s)?;
    Ok(HyperbolicityOutcome::Hyperbolic { witness: s, idempotent })
}

/// The root of `a` on the plane spanned by `⟨q, −q⟩`, conjugated back from
/// the hyperbolic basis `v₁ = (1, 1)`, `v₂ = (x, −x)`, `x = (2q)⁻¹`.
fn hyperbolic_block(
    asig: &InvolutionAlgebra,
    q: &QuaternionElement,
    a: &FieldElement,
) -> Result<QMatrix, UnitaryError> {
    let alg = asig.algebra();
    let (off, low) = if asig.form().kind() == FormKind::Hermitian {
        (alg.one(), alg.scalar(a))
    } else {
        let y = [alg.i(), alg.j(), alg.ij()]
            .into_iter()
            .find(|y| !y.nrd().is_zero())
            .ok_or(HermError::SingularElement)?;
        let low = y.scale(&(&(-a) / &y.nrd()));
        (y, low)
    };
    let sh = QMatrix::from_rows(alg, vec![vec![alg.zero(), off], vec![low, alg.zero()]])?;
    let x = q.scale(&alg.level().from_int(2)).inv().map_err(HermError::from)?;
    let p = QMatrix::from_rows(alg, vec![vec![alg.one(), x.clone()], vec![alg.one(), -&x]])?;
    Ok(&(&p * &sh) * &p.inverse()?)
}

/// σ-symmetric basis of `M_n(Q)` for a hermitian diagonal form: the
/// diagonal units and, for `i < j`, `E_ij x + E_ji cⱼ⁻¹ x̄ cᵢ` for `x` in the
/// quaternion basis.
pub fn symmetric_basis(asig: &InvolutionAlgebra) -> Result<Vec<QMatrix>, UnitaryError> {
    let alg = asig.algebra();
    let n = asig.size();
    let mut out = Vec::new();
    let basis = [alg.one(), alg.i(), alg.j(), alg.ij()];
    for i in 0..n {
        let mut m = QMatrix::zero(alg, n);
        m.set(i, i, alg.one());
        out.push(m);
    }
    for i in 0..n {
        for j in i + 1..n {
            for x in &basis {
                let mut m = QMatrix::zero(alg, n);
                m.set(i, j, x.clone());
                let sym = asig.apply(&m)?;
                out.push(&m + &sym);
            }
        }
    }
    for m in &out {
        if !asig.is_symmetric(m)? {
            return Err(UnitaryError::VerificationFailed("symmetric basis".into()));
        }
    }
    Ok(out)
}

fn pfaffian_evidence(
    asig: &InvolutionAlgebra,
    a: &FieldElement,
    height: i64,
) -> Result<PfaffianEvidence, UnitaryError> {
    let basis = symmetric_basis(asig)?;
    let grid = value_grid(asig.level(), height);
    let target = asig.identity().scale(a);
    let mut idx = vec![0usize; basis.len()];
    let mut candidates = 0usize;
    let mut odd_degree = true;
    let mut no_root = true;
    // Exhaustive over grid coordinates on the symmetric basis; capped so the
    // product stays finite and small (n = 1 gives a one-dimensional grid).
    let total = grid.len().checked_pow(basis.len() as u32).unwrap_or(usize::MAX);
    if total > 2_000_000 {
        return Err(UnitaryError::VerificationFailed(format!(
            "exhaustive grid of {total} symmetric elements is beyond budget"
        )));
    }
    loop {
        let mut s = QMatrix::zero(asig.algebra(), asig.size());
        for (b, &k) in basis.iter().zip(&idx) {
            let c = &grid[k].1;
            if !c.is_zero() {
                s = &s + &b.scale(c);
            }
        }
        candidates += 1;
        let prp: Polynomial = asig.pfaffian_charpoly(&s)?;
        odd_degree &= prp.degree().is_some_and(|d| d % 2 == 1);
        no_root &= &s * &s != target;
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return Ok(PfaffianEvidence {
                    height,
                    candidates,
                    odd_degree,
                    no_root,
                });
            }
            idx[pos] += 1;
            if idx[pos] < grid.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Results of the isotropy transfer checks over `K̂ = F̂(ξ)`, `ξ² = x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotropyReport {
    /// Isotropic `y = e·z` produced from an isotropic `e` of `(A, σ)`.
    pub lifted_witnesses: usize,
    /// Witnesses whose leading coefficient `a_r` satisfied `σ(a_r)a_r = 0`.
    pub leading_isotropic: usize,
    /// Candidates examined by the truncated search (anisotropic side).
    pub searched: usize,
    /// Candidates with `τ̂(y)y = 0` found by that search.
    pub search_hits: usize,
    pub precision: i64,
}

/// `(i)` from an isotropic `e ∈ A`, every `y = e·z` has `τ̂(y)y = 0`, and
/// the leading coefficient `a_r` of `y` satisfies `σ(a_r)a_r = 0`; `(ii)` a
/// truncated search over `y = Σ_{r < precision} a_r ξ^r` with at most two
/// nonzero coefficients from `{±1, ±i, ±j, ±ij}`, counting exact zeros of
/// `τ̂(y)y`.
pub fn isotropy_transfer_check<R: Rng + ?Sized>(
    ext: &UnitaryExtension,
    isotropic: Option<&QMatrix>,
    trials: usize,
    precision: i64,
    rng: &mut R,
) -> Result<IsotropyReport, UnitaryError> {
    let below = ext.residue_algebra()?;
    let lvl = ext.level().clone();
    let asig = ext.involution_algebra();
    let mut lifted = 0;
    let mut leading_ok = 0;
    if let Some(e) = isotropic {
        if below.apply(e).map(|s| (&s * e).is_zero()) != Ok(true) || e.is_zero() {
            return Err(UnitaryError::VerificationFailed(
                "supplied element is not isotropic".into(),
            ));
        }
        let e_hat = ext.from_a(&e.lift_to(asig.algebra())?);
        for _ in 0..trials {
            let z = ext.random(rng, 2);
            let y = ext.mul(&e_hat, &z);
            if ext.mul(&ext.tau(&y)?, &y) != ext.sub(&y, &y) {
                return Err(UnitaryError::VerificationFailed("τ̂(ez)ez ≠ 0".into()));
            }
            let Some((_, ar)) = ext.leading_coefficient(&y)? else {
                continue;
            };
            lifted += 1;
            if (&below.apply(&ar)? * &ar).is_zero() && !ar.is_zero() {
                leading_ok += 1;
            }
        }
    }
    // Truncated search.
    let alg = below.algebra();
    let mut coeffs = Vec::new();
    for b in [alg.one(), alg.i(), alg.j(), alg.ij()] {
        coeffs.push(b.clone());
        coeffs.push(-&b);
    }
    let n = below.size();
    let xi_pow = |r: i64| -> UnitaryElement {
        let x = lvl.generator().expect("generator");
        let id = asig.identity();
        let zero = QMatrix::zero(asig.algebra(), n);
        if r % 2 == 0 {
            ext.element(id.scale(&x.pow(r / 2)), zero)
        } else {
            ext.element(zero, id.scale(&x.pow((r - 1) / 2)))
        }
    };
    let embed = |pos: usize, c: &QuaternionElement| -> Result<UnitaryElement, UnitaryError> {
        let mut m = QMatrix::zero(alg, n);
        m.set(pos % n, (pos / n) % n, c.clone());
        let lifted = m.lift_to(asig.algebra())?;
        Ok(ext.mul(&ext.from_a(&lifted), &xi_pow((pos / (n * n)) as i64)))
    };
    let slots = (precision.max(1) as usize) * n * n;
    let mut searched = 0;
    let mut hits = 0;
    for p1 in 0..slots {
        for c1 in &coeffs {
            let y1 = embed(p1, c1)?;
            for p2 in p1..slots {
                let second: Vec<Option<&QuaternionElement>> = if p2 == p1 {
                    vec![None]
                } else {
                    coeffs.iter().map(Some).collect()
                };
                for c2 in second {
                    let y = match c2 {
                        None => y1.clone(),
                        Some(c2) => ext.add(&y1, &embed(p2, c2)?),
                    };
                    searched += 1;
                    if ext.mul(&ext.tau(&y)?, &y) == ext.sub(&y, &y) {
                        hits += 1;
                        let (_, ar) = ext.leading_coefficient(&y)?.expect("nonzero");
                        if !(&below.apply(&ar)? * &ar).is_zero() {
                            return Err(UnitaryError::VerificationFailed(
                                "isotropic y with anisotropic leading coefficient".into(),
                            ));
                        }
                    }
                }
            }
            if searched > 200_000 {
                break;
            }
        }
    }
    Ok(IsotropyReport {
        lifted_witnesses: lifted,
        leading_isotropic: leading_ok,
        searched,
        search_hits: hits,
        precision,
    })
}

/// An isotropic element of a form with a hyperbolic pair `⟨q, −q⟩` at
/// positions `(p, q)`: the projection onto the isotropic line `v₁ = e_p + e_q`
/// along `v₂`, which satisfies `σ(e)e = 0`.
pub fn hyperbolic_isotropic(asig: &InvolutionAlgebra, p: usize, q: usize) -> Result<QMatrix, UnitaryError> {
    let alg = asig.algebra();
    let d = asig.form().entries();
    if d[q] != -&d[p] {
        return Err(UnitaryError::VerificationFailed(
            "entries do not form a hyperbolic pair".into(),
        ));
    }
    let x = d[p].scale(&alg.level().from_int(2)).inv().map_err(HermError::from)?;
    let pm = QMatrix::from_rows(alg, vec![vec![alg.one(), x.clone()], vec![alg.one(), -&x]])?;
    let e11 = QMatrix::diag(alg, &[alg.one(), alg.zero()]);
    let block = &(&pm * &e11) * &pm.inverse()?;
    let mut e = QMatrix::zero(alg, asig.size());
    for (bi, gi) in [(0, p), (1, q)] {
        for (bj, gj) in [(0, p), (1, q)] {
            e.set(gi, gj, block.get(bi, bj).clone());
        }
    }
    if !(&asig.apply(&e)? * &e).is_zero() {
        return Err(UnitaryError::VerificationFailed("σ(e)e ≠ 0".into()));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::herm::SkewHermitianForm;
    use crate::quat::QuaternionAlgebra;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(a: i64, b: i64, which: usize) -> InvolutionAlgebra {
        let q = FieldTower::rationals();
        let alg = QuaternionAlgebra::new(&q, &q.from_int(a), &q.from_int(b)).unwrap();
        let e = [alg.i(), alg.j(), alg.ij()][which].clone();
        InvolutionAlgebra::new(SkewHermitianForm::skew_hermitian(&alg, vec![e]).unwrap()).unwrap()
    }

    #[test]
    fn tau_on_generators() {
        let asig = single(-1, -3, 0);
        let ext = UnitaryExtension::new(&asig, &asig.level().from_int(2)).unwrap();
        let u = ext.u();
        let tu = ext.tau(&u).unwrap();
        assert_eq!(ext.add(&tu, &u), ext.sub(&u, &u));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let x = ext.random(&mut rng, 3);
            let y = ext.random(&mut rng, 3);
            let lhs = ext.tau(&ext.mul(&x, &y)).unwrap();
            let rhs = ext.mul(&ext.tau(&y).unwrap(), &ext.tau(&x).unwrap());
            assert_eq!(lhs, rhs);
            assert_eq!(ext.tau(&ext.tau(&x).unwrap()).unwrap(), x);
        }
        assert!(matches!(
            UnitaryExtension::new(&asig, &asig.level().from_int(4)),
            Err(UnitaryError::SquareRadicand(_))
        ));
    }

    #[test]
    fn witness_for_j_is_i() {
        let asig = single(-2, 5, 1);
        let a = asig.algebra().a().clone();
        let HyperbolicityOutcome::Hyperbolic { witness, idempotent } = hyperbolicity_check(&asig, &a, 2, 3).unwrap()
        else {
            panic!("expected a witness");
        };
        assert_eq!(witness, QMatrix::diag(asig.algebra(), &[asig.algebra().i()]));
        assert!(idempotent.transcript.iter().all(|c| c.residual_zero));
        let ext = UnitaryExtension::new(&asig, &a).unwrap();
        let back = ext.embedding_from_idempotent(&idempotent.e).unwrap();
        assert_eq!(back.s0, witness);
        // ij is symmetric for ⟨j⟩ but squares to −ab; j itself is skew.
        let ij = QMatrix::diag(asig.algebra(), &[asig.algebra().ij()]);
        assert_eq!(ext.idempotent_from_embedding(&ij), Err(UnitaryError::WrongSquare));
        let j = QMatrix::diag(asig.algebra(), &[asig.algebra().j()]);
        assert_eq!(ext.idempotent_from_embedding(&j), Err(UnitaryError::NotSymmetric));
        let zero_e2 = ext.element(asig.identity(), QMatrix::zero(asig.algebra(), 1));
        assert!(ext.embedding_from_idempotent(&zero_e2).is_err());
    }

    #[test]
    fn split_symplectic_is_exceptional() {
        let q = FieldTower::rationals();
        let alg = QuaternionAlgebra::new(&q, &q.one(), &q.one()).unwrap();
        let asig = InvolutionAlgebra::new(SkewHermitianForm::hermitian(&alg, &[q.one()]).unwrap()).unwrap();
        let HyperbolicityOutcome::ExceptionalCase(ev) = hyperbolicity_check(&asig, &q.from_int(2), 2, 3).unwrap()
        else {
            panic!("expected the exceptional case");
        };
        assert!(ev.odd_degree && ev.no_root && ev.candidates > 1);
    }

    #[test]
    fn hyperbolic_pairs_get_explicit_roots() {
        let q = FieldTower::rationals();
        let alg = QuaternionAlgebra::new(&q, &q.from_int(-1), &q.from_int(-1)).unwrap();
        let a = q.from_int(3);
        let skew =
            InvolutionAlgebra::new(SkewHermitianForm::skew_hermitian(&alg, vec![alg.i(), -&alg.i()]).unwrap()).unwrap();
        assert!(matches!(
            hyperbolicity_check(&skew, &a, 1, 1).unwrap(),
            HyperbolicityOutcome::Hyperbolic { .. }
        ));
        let herm =
            InvolutionAlgebra::new(SkewHermitianForm::hermitian(&alg, &[q.from_int(2), q.from_int(-2)]).unwrap())
                .unwrap();
        let HyperbolicityOutcome::Hyperbolic { witness, .. } = hyperbolicity_check(&herm, &a, 1, 1).unwrap() else {
            panic!("expected a witness");
        };
        assert_eq!(&witness * &witness, herm.identity().scale(&a));
    }

    #[test]
    fn isotropy_lifts_and_leading_terms() {
        let q = FieldTower::rationals();
        let alg = QuaternionAlgebra::new(&q, &q.from_int(-1), &q.from_int(-1)).unwrap();
        let hyp =
            InvolutionAlgebra::new(SkewHermitianForm::skew_hermitian(&alg, vec![alg.i(), -&alg.i()]).unwrap()).unwrap();
        let e = hyperbolic_isotropic(&hyp, 0, 1).unwrap();
        let ext = UnitaryExtension::complete(&hyp, "x").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rep = isotropy_transfer_check(&ext, Some(&e), 5, 1, &mut rng).unwrap();
        assert_eq!(rep.lifted_witnesses, rep.leading_isotropic);
        assert!(rep.lifted_witnesses > 0);

        let aniso = single(-1, -1, 0);
        let ext = UnitaryExtension::complete(&aniso, "x").unwrap();
        let rep = isotropy_transfer_check(&ext, None, 0, 6, &mut rng).unwrap();
        assert_eq!(rep.search_hits, 0);
        assert!(rep.searched > 100);
    }
}
