//! Scaled orthogonal sums over Laurent layers, the half-integer norm they
//! carry, descent of symmetric square roots, the iterated tower of diagonal
//! forms `⟨t₁q₁, …, t_nq_n⟩`, the leading-term decomposition of unitary
//! multipliers, and the common-slot consistency check.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::brauer::{
    algebra_class, brauer_equal, common_slot, norm_group_member, symbol_class, BrauerError, CommonSlotOutcome,
};
use crate::field::{completed_square_class, quad_norm, random_base, FieldElement, FieldError, FieldTower, SquareClass};
use crate::herm::{find_anticommuting_with_square, HermError, InvolutionAlgebra, QMatrix, SkewHermitianForm};
use crate::quat::{value_grid, QuatError, QuaternionAlgebra, QuaternionElement};
use crate::unitary::{IdentityCheck, UnitaryElement, UnitaryError, UnitaryExtension};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TowerError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Quat(#[from] QuatError),
    #[error(transparent)]
    Brauer(#[from] BrauerError),
    #[error(transparent)]
    Herm(#[from] HermError),
    #[error(transparent)]
    Unitary(#[from] UnitaryError),
    #[error("the quaternion algebra is split")]
    SplitAlgebra,
    #[error("multiplier has odd valuation {0}")]
    OddValuationMultiplier(i64),
    #[error("τ(g)g is not a central scalar")]
    NotSimilitude,
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("contradiction found: {0}")]
    ContradictionFound(String),
    #[error("bad input: {0}")]
    BadInput(String),
}

fn check(identity: &str, holds: bool) -> IdentityCheck {
    IdentityCheck {
        identity: identity.to_string(),
        residual_zero: holds,
    }
}

fn all_hold(checks: &[IdentityCheck]) -> Result<(), TowerError> {
    match checks.iter().find(|c| !c.residual_zero) {
        Some(c) => Err(TowerError::VerificationFailed(c.identity.clone())),
        None => Ok(()),
    }
}

/// `(W, h_W) = (V̂ ⊕ V̂′, ĥ ⊥ ⟨t⟩ĥ′)` over `Ê = E((t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSum {
    pub h: SkewHermitianForm,
    pub h_prime: SkewHermitianForm,
    pub t: FieldElement,
    pub h_w: SkewHermitianForm,
}

impl ScaledSum {
    pub fn lower(&self) -> &FieldTower {
        self.h_prime.algebra().level()
    }

    pub fn level(&self) -> &FieldTower {
        self.t.level()
    }

    pub fn algebra(&self) -> &QuaternionAlgebra {
        self.h_w.algebra()
    }

    /// `dim V`; the first `m` coordinates of `W` belong to `V̂`.
    pub fn split_index(&self) -> usize {
        self.h.size()
    }
}

/// `ĥ ⊥ ⟨t⟩ĥ′` with `t` a fresh Laurent uniformizer named `name`. The form
/// `h` may be empty.
pub fn scaled_sum(h: &SkewHermitianForm, h_prime: &SkewHermitianForm, name: &str) -> Result<ScaledSum, TowerError> {
    if h.algebra() != h_prime.algebra() {
        return Err(QuatError::AlgebraMismatch.into());
    }
    if h.kind() != h_prime.kind() {
        return Err(TowerError::BadInput("forms of different kinds".into()));
    }
    let e = h.algebra().level();
    let ehat = e.laurent(name)?;
    let t = ehat.generator().expect("Laurent layer has a generator");
    let alg = h.algebra().extend_to(&ehat)?;
    let mut entries: Vec<QuaternionElement> = h.entries().iter().map(|q| q.lift_to(&alg)).collect::<Result<_, _>>()?;
    for q in h_prime.entries() {
        entries.push(q.lift_to(&alg)?.scale(&t));
    }
    let h_w = SkewHermitianForm::new(&alg, entries, h.kind())?;
    Ok(ScaledSum {
        h: h.clone(),
        h_prime: h_prime.clone(),
        t,
        h_w,
    })
}

/// A value in `½ℤ ∪ {∞}`, stored doubled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HalfIntegerNorm(Option<i64>);

impl HalfIntegerNorm {
    pub const INFINITY: HalfIntegerNorm = HalfIntegerNorm(None);

    pub fn from_doubled(d: i64) -> Self {
        HalfIntegerNorm(Some(d))
    }

    pub fn doubled(self) -> Option<i64> {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_none()
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl PartialOrd for HalfIntegerNorm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HalfIntegerNorm {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.0, other.0) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Greater,
            (Some(_), None) => Ordering::Less,
            (Some(a), Some(b)) => a.cmp(&b),
        }
    }
}

impl fmt::Display for HalfIntegerNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => write!(f, "∞"),
            Some(d) if d % 2 == 0 => write!(f, "{}", d / 2),
            Some(d) => write!(f, "{d}/2"),
        }
    }
}

impl Serialize for HalfIntegerNorm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Least `t`-valuation over the coordinates of a vector; `None` for zero.
fn coordinate_valuation(v: &[QuaternionElement]) -> Result<Option<i64>, FieldError> {
    let mut best: Option<i64> = None;
    for q in v {
        for c in q.coords() {
            if !c.is_zero() {
                let x = c.valuation()?;
                best = Some(best.map_or(x, |b| b.min(x)));
            }
        }
    }
    Ok(best)
}

/// `ν_W(x + x′) = min{ν(x), ½ + ν′(x′)}`.
pub fn nu_w(sum: &ScaledSum, w: &[QuaternionElement]) -> Result<HalfIntegerNorm, TowerError> {
    if w.len() != sum.h_w.size() {
        return Err(HermError::SizeMismatch.into());
    }
    let m = sum.split_index();
    let nu = coordinate_valuation(&w[..m])?.map(|v| 2 * v);
    let nu_p = coordinate_valuation(&w[m..])?.map(|v| 2 * v + 1);
    Ok(HalfIntegerNorm(nu).min(HalfIntegerNorm(nu_p)))
}

/// `2·v(q) = v_t(Nrd q)` for the valuation of a quaternion.
fn doubled_quaternion_valuation(q: &QuaternionElement) -> Result<Option<i64>, FieldError> {
    let n = q.nrd();
    if n.is_zero() {
        return Ok(None);
    }
    Ok(Some(n.valuation()?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NormIdentityReport {
    pub level: String,
    pub samples: usize,
    pub identity_holds: usize,
    pub compat_checked: usize,
    pub compat_holds: usize,
    pub failures: Vec<String>,
}

impl NormIdentityReport {
    pub fn all_hold(&self) -> bool {
        self.identity_holds == self.samples && self.compat_holds == self.compat_checked
    }
}

/// A random element of `level`: one to three terms `c·Π gᵉ` over the valued
/// generators with base coefficients of height `≤ height` and `e ∈ [−1, 2]`.
pub fn random_monomial_sum<R: Rng + ?Sized>(level: &FieldTower, rng: &mut R, height: i64) -> FieldElement {
    let gens: Vec<FieldElement> = level
        .levels()
        .iter()
        .skip(1)
        .filter(|l| !l.is_quadratic())
        .map(|l| l.generator().expect("generator").lift_to(level).expect("embeds"))
        .collect();
    let terms = rng.gen_range(1..=3);
    let mut acc = level.zero();
    for _ in 0..terms {
        let mut term = random_base(level, rng, height);
        for g in &gens {
            term = &term * &g.pow(rng.gen_range(-1..=2));
        }
        acc = &acc + &term;
    }
    acc
}

fn random_vector<R: Rng + ?Sized>(
    alg: &QuaternionAlgebra,
    n: usize,
    rng: &mut R,
    height: i64,
) -> Vec<QuaternionElement> {
    let l = alg.level();
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.2) {
                return alg.zero();
            }
            let c = [0, 1, 2, 3].map(|_| {
                if rng.gen_bool(0.3) {
                    l.zero()
                } else {
                    random_monomial_sum(l, rng, height)
                }
            });
            alg.element(c).expect("same level")
        })
        .collect()
}

/// Checks `ν_W(w) = ½ v(h_W(w, w))` on the basis vectors and on `samples`
/// random vectors, and `v(h_W(w₁, w₂)) ≥ ν_W(w₁) + ν_W(w₂)` on consecutive
/// pairs.
pub fn norm_identity_check<R: Rng + ?Sized>(
    sum: &ScaledSum,
    samples: usize,
    height: i64,
    rng: &mut R,
) -> Result<NormIdentityReport, TowerError> {
    let alg = sum.algebra();
    let n = sum.h_w.size();
    let mut vectors: Vec<Vec<QuaternionElement>> = (0..n)
        .map(|k| (0..n).map(|i| if i == k { alg.one() } else { alg.zero() }).collect())
        .collect();
    while vectors.len() < samples.max(n) {
        let w = random_vector(alg, n, rng, height);
        if w.iter().all(QuaternionElement::is_zero) {
            continue;
        }
        vectors.push(w);
    }
    let mut rep = NormIdentityReport {
        level: sum.level().to_string(),
        samples: vectors.len(),
        identity_holds: 0,
        compat_checked: 0,
        compat_holds: 0,
        failures: Vec::new(),
    };
    let norms: Vec<HalfIntegerNorm> = vectors.iter().map(|w| nu_w(sum, w)).collect::<Result<_, _>>()?;
    for (w, nu) in vectors.iter().zip(&norms) {
        let val = doubled_quaternion_valuation(&sum.h_w.value(w, w)?)?;
        // ν_W = ½v(h) and v = ½v_t(Nrd), so v_t(Nrd h) = 2·(2ν_W).
        if val == nu.doubled().map(|d| 2 * d) {
            rep.identity_holds += 1;
        } else if rep.failures.len() < 5 {
            rep.failures.push(format!("ν_W = {nu}, v_t(Nrd h_W(w,w)) = {val:?}"));
        }
    }
    for k in 0..vectors.len().saturating_sub(1) {
        let (w1, w2) = (&vectors[k], &vectors[k + 1]);
        rep.compat_checked += 1;
        let val = doubled_quaternion_valuation(&sum.h_w.value(w1, w2)?)?;
        let bound = match (norms[k].doubled(), norms[k + 1].doubled()) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        let holds = match (val, bound) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(v), Some(b)) => v >= b,
        };
        if holds {
            rep.compat_holds += 1;
        } else if rep.failures.len() < 5 {
            rep.failures
                .push(format!("compatibility: v_t(Nrd h_W(w1,w2)) = {val:?} < {bound:?}"));
        }
    }
    Ok(rep)
}

/// Output of [`descend_symmetric_root`].
#[derive(Debug, Clone, PartialEq)]
pub struct Descent {
    /// `g ∈ End_Q V`; `None` when `V = 0`.
    pub g: Option<QMatrix>,
    pub g_prime: QMatrix,
    pub lambda: FieldElement,
    pub lambda0: FieldElement,
    pub valuation: i64,
    pub checks: Vec<IdentityCheck>,
}

/// The `t^k` coefficient of every coordinate, as a matrix over `alg`.
fn matrix_coefficient(m: &QMatrix, alg: &QuaternionAlgebra, k: i64) -> Result<QMatrix, TowerError> {
    Ok(m.map_entries(alg, |q| {
        let c = |i: usize| q.coord(i).coefficient(k);
        Ok(alg.element([c(0)?, c(1)?, c(2)?, c(3)?])?)
    })?)
}

/// From `ĝ` with `ad_{h_W}(ĝ) = ĝ` and `ĝ² = λ`, writes `λ = λ₀t^{2r}(1+m)`,
/// rescales to `t^{−r}ĝ`, and reads off the valuation-zero diagonal blocks
/// `g` on `V` and `g′` on `V′`. Verifies `ad_h(g) = g`, `ad_{h′}(g′) = g′`
/// and `g² = g′² = λ₀` exactly.
pub fn descend_symmetric_root(sum: &ScaledSum, ghat: &QMatrix) -> Result<Descent, TowerError> {
    let asig_w = InvolutionAlgebra::new(sum.h_w.clone())?;
    if ghat.size() != sum.h_w.size() || ghat.algebra() != sum.algebra() {
        return Err(HermError::SizeMismatch.into());
    }
    if !asig_w.is_symmetric(ghat)? {
        return Err(HermError::NotSymmetric.into());
    }
    let lambda = (ghat * ghat)
        .as_scalar()
        .filter(|l| !l.is_zero())
        .ok_or_else(|| TowerError::VerificationFailed("ĝ² is not a nonzero scalar".into()))?;
    let v = lambda.valuation()?;
    if v.rem_euclid(2) == 1 {
        return Err(TowerError::OddValuationMultiplier(v));
    }
    let below = sum.lower();
    let lambda0 = lambda.coefficient(v)?;
    let g1 = ghat.scale(&sum.t.pow(-v / 2));
    if crate::unitary::matrix_valuation(&g1)?.is_some_and(|w| w < 0) {
        return Err(TowerError::VerificationFailed(
            "t^{−r}ĝ has entries of negative valuation".into(),
        ));
    }
    let alg = sum.h_prime.algebra();
    let lead = matrix_coefficient(&g1, alg, 0)?;
    let m = sum.split_index();
    let n = sum.h_w.size();
    let mut checks = vec![check(
        "λ ≡ λ₀ mod Ê^{×2}",
        (&lambda / &(&lambda0.lift_to(sum.level())? * &sum.t.pow(v))).is_square()?,
    )];
    let g = if m > 0 {
        let g = lead.sub_block(0..m, 0..m);
        let asig_h = InvolutionAlgebra::new(sum.h.clone())?;
        checks.push(check("ad_h(g) = g", asig_h.is_symmetric(&g)?));
        checks.push(check("g² = λ₀", (&g * &g) == QMatrix::scalar(alg, m, &lambda0)));
        Some(g)
    } else {
        None
    };
    let g_prime = lead.sub_block(m..n, m..n);
    let asig_hp = InvolutionAlgebra::new(sum.h_prime.clone())?;
    checks.push(check("ad_{h′}(g′) = g′", asig_hp.is_symmetric(&g_prime)?));
    checks.push(check(
        "g′² = λ₀",
        (&g_prime * &g_prime) == QMatrix::scalar(alg, n - m, &lambda0),
    ));
    debug_assert_eq!(lambda0.level(), below);
    all_hold(&checks)?;
    Ok(Descent {
        g,
        g_prime,
        lambda,
        lambda0,
        valuation: v,
        checks,
    })
}

/// `c ĝ c⁻¹` with the Cayley isometry `c = (1 − k)(1 + k)⁻¹`,
/// `k = y − σ(y)`. The result is again symmetric with the same square.
pub fn cayley_conjugate(asig: &InvolutionAlgebra, ghat: &QMatrix, y: &QMatrix) -> Result<QMatrix, TowerError> {
    let k = y - &asig.apply(y)?;
    let one = asig.identity();
    let c = &(&one - &k) * &(&one + &k).inverse()?;
    let c_inv = c.inverse()?;
    Ok(&(&c * ghat) * &c_inv)
}

/// The tower `k = k₀((t₁))…((t_n))` with `h = ⟨t₁q₁, …, t_nq_n⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotTower {
    pub k0: FieldTower,
    pub q: QuaternionAlgebra,
    pub qs: Vec<QuaternionElement>,
    /// `k₀, k₁, …, k_n`.
    pub levels: Vec<FieldTower>,
    /// `ladder[i]` is `h_i ⊥ ⟨t_{i+1}⟩⟨q_{i+1}⟩` over `k_{i+1}`.
    pub ladder: Vec<ScaledSum>,
    pub asig: InvolutionAlgebra,
}

impl SlotTower {
    pub fn n(&self) -> usize {
        self.qs.len()
    }

    pub fn top(&self) -> &FieldTower {
        self.levels.last().expect("at least k₀")
    }

    /// `aᵢ = qᵢ²` over `k₀`.
    pub fn slots(&self) -> Result<Vec<FieldElement>, TowerError> {
        Ok(self.qs.iter().map(|q| q.pure_square()).collect::<Result<_, _>>()?)
    }
}

/// Adjoins Laurent layers `t₁, …, t_n` to `k₀` and builds the ladder of
/// scaled sums. `Q` must be a division algebra over `k₀`.
pub fn build_slot_tower(
    k0: &FieldTower,
    q: &QuaternionAlgebra,
    qs: &[QuaternionElement],
) -> Result<SlotTower, TowerError> {
    if qs.is_empty() {
        return Err(TowerError::BadInput("at least one pure quaternion is required".into()));
    }
    let q = q.extend_to(k0)?;
    let qs: Vec<QuaternionElement> = qs.iter().map(|x| x.lift_to(&q)).collect::<Result<_, _>>()?;
    if let Some(bad) = qs.iter().find(|x| !x.is_pure() || x.nrd().is_zero()) {
        return Err(HermError::BadEntry(bad.to_string()).into());
    }
    match q.is_split() {
        Ok(false) => {}
        Ok(true) => return Err(TowerError::SplitAlgebra),
        Err(e) => return Err(e.into()),
    }
    let mut levels = vec![k0.clone()];
    let mut ladder = Vec::with_capacity(qs.len());
    let mut h = SkewHermitianForm::skew_hermitian(&q, vec![])?;
    for (i, qi) in qs.iter().enumerate() {
        let alg = h.algebra().clone();
        let hp = SkewHermitianForm::skew_hermitian(&alg, vec![qi.lift_to(&alg)?])?;
        let sum = scaled_sum(&h, &hp, &format!("t{}", i + 1))?;
        h = sum.h_w.clone();
        levels.push(sum.level().clone());
        ladder.push(sum);
    }
    let asig = InvolutionAlgebra::new(h)?;
    Ok(SlotTower {
        k0: k0.clone(),
        q,
        qs,
        levels,
        ladder,
        asig,
    })
}

/// Per-level evidence for the anisotropy ladder.
pub fn ladder_evidence<R: Rng + ?Sized>(
    tower: &SlotTower,
    samples: usize,
    height: i64,
    rng: &mut R,
) -> Result<Vec<NormIdentityReport>, TowerError> {
    tower
        .ladder
        .iter()
        .map(|s| norm_identity_check(s, samples, height, rng))
        .collect()
}

/// `τ̂(g)g = σ(a_r)a_r · (−x)^r(1+m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadingDecomposition {
    pub r: i64,
    pub leading: QMatrix,
    /// `σ(a_r)a_r ∈ G(A, σ)`.
    pub leading_multiplier: FieldElement,
    /// `(−x)^r(1+m) ∈ N(K̂/F̂)`.
    pub norm_factor: FieldElement,
    pub checks: Vec<IdentityCheck>,
}

/// Splits the multiplier of a similitude `g = Σ a_i ξ^i` of the complete
/// unitary extension into its leading part and a norm from `K̂`.
pub fn multiplier_leading_decomposition(
    ext: &UnitaryExtension,
    g: &UnitaryElement,
) -> Result<LeadingDecomposition, TowerError> {
    let prod = ext.mul(&ext.tau(g)?, g);
    let mu = match (prod.b0.as_scalar(), prod.b1.is_zero()) {
        (Some(mu), true) if !mu.is_zero() => mu,
        _ => return Err(TowerError::NotSimilitude),
    };
    let (r, a_r) = ext.leading_coefficient(g)?.ok_or(TowerError::NotSimilitude)?;
    let residue = ext.residue_algebra()?;
    let lam = residue.multiplier(&a_r)?;
    let fhat = ext.level();
    let x = ext.radicand();
    let lam_hat = lam.lift_to(fhat)?;
    let factor = &mu / &lam_hat;
    let one_plus_m = &factor / &(-x).pow(r);
    let unit = one_plus_m.valuation()? == 0 && one_plus_m.coefficient(0)?.is_one();
    let checks = vec![
        check("σ(a_r)a_r ∈ k^×", lam.level() == residue.level()),
        check("(−x)^{−r}·factor ≡ 1 mod x", unit),
        check("1+m is a square (Hensel)", unit && one_plus_m.is_square()?),
        check("factor ∈ N(K̂/F̂)", norm_group_member(x, &factor)?),
        check("σ(a_r)a_r·factor = τ̂(g)g", &lam_hat * &factor == mu),
    ];
    all_hold(&checks)?;
    Ok(LeadingDecomposition {
        r,
        leading: a_r,
        leading_multiplier: lam,
        norm_factor: factor,
        checks,
    })
}

/// One instance of the norm statement for a ramified quadratic or
/// biquadratic-tower extension `L/F̂` of even ramification index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NormsInstance {
    pub e: u32,
    pub model: String,
    pub u: String,
    pub m: String,
    /// `x/(−ū)` is a square in `L`.
    pub square_certified: bool,
    /// `x/ū` is not a square in `L` (when `−1` is not a square in `ℓ`).
    pub control_nonsquare: Option<bool>,
    pub norms_sampled: usize,
    pub norms_in_group: usize,
}

impl NormsInstance {
    pub fn holds(&self) -> bool {
        self.square_certified && self.control_nonsquare != Some(false) && self.norms_in_group == self.norms_sampled
    }
}

/// `L = F̂(ρ)` with `ρ² = −x·u·(1+m)` (`e = 2`) or additionally `π² = ρ`
/// (`e = 4`), so that `N_{L/F̂}(uniformizer) = x·u·(1+m)` and the residue of
/// the unit part is `u`. Certifies `x ≡ −u mod L^{×2}` and that sampled norms
/// lie in `N(K̂/F̂)·{1, −u}`, where `K̂ = F̂(√x)`.
pub fn norms_lemma_quadratic<R: Rng + ?Sized>(
    fhat: &FieldTower,
    e: u32,
    u: &FieldElement,
    m: &FieldElement,
    samples: usize,
    height: i64,
    rng: &mut R,
) -> Result<NormsInstance, TowerError> {
    if !fhat.is_laurent() || !matches!(e, 2 | 4) {
        return Err(TowerError::BadInput("needs a Laurent level and e ∈ {2, 4}".into()));
    }
    let x = fhat.generator().expect("generator");
    let u_hat = u.lift_to(fhat)?;
    let m = m.lift_to(fhat)?;
    if m.is_zero() || m.valuation()? <= 0 || u.is_zero() {
        return Err(TowerError::BadInput("needs u ≠ 0 and v(m) > 0".into()));
    }
    let radicand = -&(&(&x * &u_hat) * &(&fhat.one() + &m));
    let l2 = fhat.quadratic("rho", &radicand)?;
    let rho = l2.generator().expect("generator");
    let top = if e == 4 { l2.quadratic("pi", &rho)? } else { l2.clone() };
    let ratio = &x.lift_to(&top)? / &(-&u_hat).lift_to(&top)?;
    let square_certified = ratio.is_square()?;
    let minus_one_square = u.level().from_int(-1).is_square()?;
    let control_nonsquare = if minus_one_square {
        None
    } else {
        Some(!(&x.lift_to(&top)? / &u_hat.lift_to(&top)?).is_square()?)
    };
    let minus_u = -&u_hat;
    let mut in_group = 0;
    let mut sampled = 0;
    while sampled < samples {
        let c = random_monomial_sum(fhat, rng, height).lift_to(&l2)?;
        let d = random_monomial_sum(fhat, rng, height).lift_to(&l2)?;
        let mut y = &c + &(&d * &rho);
        if e == 4 {
            let c2 = random_monomial_sum(fhat, rng, height).lift_to(&top)?;
            y = &y.lift_to(&top)? + &(&c2 * &top.generator().expect("generator"));
        }
        if y.is_zero() {
            continue;
        }
        let mut nrm = y;
        if e == 4 {
            nrm = quad_norm(&top, &nrm)?;
        }
        let nrm = quad_norm(&l2, &nrm)?;
        sampled += 1;
        if norm_group_member(&x, &nrm)? || norm_group_member(&x, &(&nrm / &minus_u))? {
            in_group += 1;
        }
    }
    Ok(NormsInstance {
        e,
        model: "quadratic layers over F̂".into(),
        u: u.to_string(),
        m: m.to_string(),
        square_certified,
        control_nonsquare,
        norms_sampled: sampled,
        norms_in_group: in_group,
    })
}

/// `L = ℓ((π))` with `x = −π^e/(u(1+m))`, `v(m) > 0`, so that the norm of
/// `π` is `x·u·(1+m)`. Certifies `x ≡ −u mod L^{×2}` for even `e`, or
/// `x ≡ −π·u mod L^{×2}` for odd `e`.
pub fn norms_lemma_laurent(
    l: &FieldTower,
    e: u32,
    u: &FieldElement,
    m: &FieldElement,
) -> Result<NormsInstance, TowerError> {
    if !l.is_laurent() || e == 0 {
        return Err(TowerError::BadInput("needs a Laurent level and e ≥ 1".into()));
    }
    let pi = l.generator().expect("generator");
    let u_l = u.lift_to(l)?;
    let m = m.lift_to(l)?;
    if u.is_zero() || m.is_zero() || m.valuation()? <= 0 {
        return Err(TowerError::BadInput("needs u ≠ 0 and v(m) > 0".into()));
    }
    let x = -&(&pi.pow(e as i64) / &(&u_l * &(&l.one() + &m)));
    let minus_u = -&u_l;
    let target = if e.is_multiple_of(2) {
        minus_u.clone()
    } else {
        &minus_u * &pi
    };
    let square_certified = (&x / &target).is_square()?;
    let control_nonsquare = if u.level().from_int(-1).is_square()? {
        None
    } else {
        Some(!(&x / &(-&target)).is_square()?)
    };
    Ok(NormsInstance {
        e,
        model: "Laurent uniformizer".into(),
        u: u.to_string(),
        m: m.to_string(),
        square_certified,
        control_nonsquare,
        norms_sampled: 0,
        norms_in_group: 0,
    })
}

/// Bounds for the structured refutation search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MainBounds {
    /// Exponents of the `tᵢ` range over `(−precision, precision)`.
    pub precision: i64,
    /// Height of the `k₀` coefficients.
    pub height: i64,
    /// Height bound handed to the common-slot search.
    pub slot_bound: i64,
}

impl Default for MainBounds {
    fn default() -> Self {
        MainBounds {
            precision: 4,
            height: 2,
            slot_bound: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DescentStage {
    pub level: String,
    pub lambda: String,
    pub anticommutes: bool,
    pub symbol_matches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MainReport {
    pub slots: Vec<String>,
    /// `a₁/a₂` is not a square over `k₀`.
    pub first_slots_non_similar: bool,
    pub common_slot: String,
    pub common_slot_certified_none: bool,
    pub bounds: MainBounds,
    pub candidates: usize,
    pub square_excluded: usize,
    pub common_nonsquare_classes: Vec<String>,
    pub witness_lambda: Option<String>,
    pub descent: Vec<DescentStage>,
    /// `(aⱼ, λ_final) ≃ Q` over `k₀` for every `j`.
    pub final_slot_verified: Option<bool>,
    pub consistent: bool,
}

/// Pure quaternions `e₁, e₂ = q e₁` spanning the anticommutant of `q`.
fn anticommuting_pair(q: &QuaternionElement) -> Option<(QuaternionElement, QuaternionElement)> {
    let alg = q.algebra();
    let l = alg.level();
    let (a, b) = (alg.a(), alg.b());
    let [_, y1, y2, y3] = q.coords();
    let cands = [
        [l.zero(), b * y2, -(a * y1), l.zero()],
        [l.zero(), b * y3, l.zero(), y1.clone()],
        [l.zero(), l.zero(), a * y3, y2.clone()],
        [l.zero(), l.one(), l.zero(), l.zero()],
    ];
    let e1 = cands
        .into_iter()
        .filter_map(|c| alg.element(c).ok())
        .find(|e| !e.is_zero() && (&(e * q) + &(q * e)).is_zero() && !e.nrd().is_zero())?;
    let lead = e1.coords().iter().find(|c| !c.is_zero())?.inv().ok()?;
    let e1 = e1.scale(&lead);
    let e2 = q * &e1;
    Some((e1, e2))
}

/// Scalars `c·Π tᵢ^{eᵢ}` with `c` from the `k₀` grid and `|eᵢ| < precision`.
fn monomial_grid(tower: &SlotTower, bounds: &MainBounds) -> Vec<FieldElement> {
    let top = tower.top();
    let coeffs: Vec<FieldElement> = value_grid(&tower.k0, bounds.height)
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(_, c)| c.lift_to(top).expect("embeds"))
        .collect();
    let gens: Vec<FieldElement> = tower.levels[1..]
        .iter()
        .map(|l| l.generator().expect("generator").lift_to(top).expect("embeds"))
        .collect();
    let p = bounds.precision.max(1);
    let mut monos = vec![top.one()];
    for g in &gens {
        let mut next = Vec::new();
        for mono in &monos {
            for e in (1 - p)..p {
                next.push(mono * &g.pow(e));
            }
        }
        monos = next;
    }
    let mut out = vec![top.zero()];
    for mono in &monos {
        for c in &coeffs {
            out.push(c * mono);
        }
    }
    out
}

/// Runs the common-slot decision over `k₀`, a structured bounded search for
/// symmetric `g = diag(p₁, …, p_n)` over `k` with `pⱼqⱼ = −qⱼpⱼ` and
/// `g² = λ` non-square (every `pⱼ = e₁ + τe₂` or `e₂` with `τ` from the
/// monomial grid, matched up to squares), and, for a found `g`, the descent
/// chain down the ladder.
pub fn theorem_main_check(tower: &SlotTower, bounds: &MainBounds) -> Result<MainReport, TowerError> {
    let slots = tower.slots()?;
    let k0 = &tower.k0;
    let first_slots_non_similar = if slots.len() >= 2 {
        !(&slots[0] / &slots[1]).is_square()?
    } else {
        true
    };
    let cs = common_slot(&tower.q, &slots, k0, bounds.slot_bound, &[])?;
    let certified_none = matches!(cs.outcome, CommonSlotOutcome::NoneCertified);
    let common = match &cs.outcome {
        CommonSlotOutcome::Found { mu } => format!("Found({mu})"),
        CommonSlotOutcome::NoneCertified => "NoneCertified".to_string(),
        CommonSlotOutcome::Unknown { bound } => format!("Unknown(bound {bound})"),
    };
    let alg_top = tower.asig.algebra();
    let grid = monomial_grid(tower, bounds);
    let mut candidates = 0usize;
    let mut square_excluded = 0usize;
    // Per slot: square class of λ ↦ first λ realizing it.
    let mut per_slot: Vec<BTreeMap<SquareClass, FieldElement>> = Vec::new();
    let mut pairs = Vec::new();
    for q in &tower.qs {
        let qt = q.lift_to(alg_top)?;
        let (e1, e2) = anticommuting_pair(&qt).ok_or_else(|| TowerError::BadInput(format!("{q} is not pure")))?;
        let (s1, s2) = (e1.pure_square()?, e2.pure_square()?);
        let mut classes = BTreeMap::new();
        let mut lams = vec![s2.clone()];
        lams.extend(grid.iter().map(|tau| &s1 + &(&s2 * &tau.square())));
        for lam in lams {
            candidates += 1;
            if lam.is_zero() {
                continue;
            }
            let c = completed_square_class(&lam)?;
            if c.is_trivial() {
                square_excluded += 1;
                continue;
            }
            classes.entry(c).or_insert(lam);
        }
        per_slot.push(classes);
        pairs.push(qt);
    }
    let mut common_classes: BTreeSet<SquareClass> = per_slot[0].keys().cloned().collect();
    for m in &per_slot[1..] {
        common_classes.retain(|c| m.contains_key(c));
    }
    let mut report = MainReport {
        slots: slots.iter().map(ToString::to_string).collect(),
        first_slots_non_similar,
        common_slot: common,
        common_slot_certified_none: certified_none,
        bounds: *bounds,
        candidates,
        square_excluded,
        common_nonsquare_classes: common_classes.iter().map(|c| format!("{c:?}")).collect(),
        witness_lambda: None,
        descent: Vec::new(),
        final_slot_verified: None,
        consistent: true,
    };
    if certified_none && !common_classes.is_empty() {
        return Err(TowerError::ContradictionFound(format!(
            "no common slot over k₀, yet λ classes {:?} are shared by every slot over k",
            report.common_nonsquare_classes
        )));
    }
    // Build an exact witness from the first common class.
    let mut witness = None;
    'classes: for c in &common_classes {
        let lam = per_slot[0][c].clone();
        let mut entries = Vec::with_capacity(pairs.len());
        for (j, qt) in pairs.iter().enumerate() {
            let p = anticommuting_root(qt, &lam, &per_slot[j][c], bounds.height);
            match p {
                Some(p) => entries.push(p),
                None => continue 'classes,
            }
        }
        witness = Some((QMatrix::diag(alg_top, &entries), lam));
        break;
    }
    let Some((g, lam)) = witness else {
        report.consistent = !certified_none || common_classes.is_empty();
        return Ok(report);
    };
    if !tower.asig.is_symmetric(&g)? || (&g * &g) != QMatrix::scalar(alg_top, g.size(), &lam) || lam.is_square()? {
        return Err(TowerError::VerificationFailed("structured witness".into()));
    }
    if certified_none {
        return Err(TowerError::ContradictionFound(format!(
            "symmetric g with g² = {lam} non-square"
        )));
    }
    report.witness_lambda = Some(lam.to_string());
    let mut ghat = g;
    let mut last = lam;
    for (i, sum) in tower.ladder.iter().enumerate().rev() {
        let d = descend_symmetric_root(sum, &ghat)?;
        let below = sum.lower();
        let p = d.g_prime.get(0, 0).clone();
        let qi = tower.qs[i].lift_to(p.algebra())?;
        let anticommutes = (&(&p * &qi) + &(&qi * &p)).is_zero();
        let q_below = tower.q.extend_to(below)?;
        let symbol_matches = brauer_equal(
            &symbol_class(&slots[i].lift_to(below)?, &d.lambda0)?,
            &algebra_class(&q_below)?,
        )?;
        report.descent.push(DescentStage {
            level: below.to_string(),
            lambda: d.lambda0.to_string(),
            anticommutes,
            symbol_matches,
        });
        last = d.lambda0.clone();
        match d.g {
            Some(next) => ghat = next,
            None => break,
        }
    }
    let target = algebra_class(&tower.q)?;
    let mut all = true;
    for a in &slots {
        all &= brauer_equal(&symbol_class(a, &last)?, &target)?;
    }
    report.final_slot_verified = Some(all);
    report.consistent = all && report.descent.iter().all(|s| s.anticommutes && s.symbol_matches);
    if !report.consistent {
        return Err(TowerError::VerificationFailed("descent chain".into()));
    }
    Ok(report)
}

/// A pure `p` anticommuting with `q` and `p² = λ`: from a known `λ′` in the
/// class of `λ` when `λ/λ′` has an exact square root, otherwise by the grid
/// solver.
fn anticommuting_root(
    q: &QuaternionElement,
    lambda: &FieldElement,
    known: &FieldElement,
    height: i64,
) -> Option<QuaternionElement> {
    let (e1, e2) = anticommuting_pair(q)?;
    let (s1, s2) = (e1.pure_square().ok()?, e2.pure_square().ok()?);
    let scale = (lambda / known).exact_sqrt()?;
    // Recover a root of λ′ = s1 + s2τ² (or s2) and rescale.
    let base = if *known == s2 {
        Some(e2.clone())
    } else {
        (&(known - &s1) / &s2).exact_sqrt().map(|tau| &e1 + &e2.scale(&tau))
    };
    base.map(|p| p.scale(&scale))
        .or_else(|| find_anticommuting_with_square(q, lambda, height))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f5_q() -> (FieldTower, QuaternionAlgebra) {
        let k0 = FieldTower::prime_field(5)
            .unwrap()
            .laurent("s")
            .unwrap()
            .laurent("u")
            .unwrap();
        let s = k0.parse("s").unwrap();
        let u = k0.parse("u").unwrap();
        let q = QuaternionAlgebra::new(&k0, &s, &u).unwrap();
        (k0, q)
    }

    #[test]
    fn scaled_sum_diagonal() {
        let (_, q) = f5_q();
        let h = SkewHermitianForm::skew_hermitian(&q, vec![q.i()]).unwrap();
        let hp = SkewHermitianForm::skew_hermitian(&q, vec![q.j()]).unwrap();
        let sum = scaled_sum(&h, &hp, "t1").unwrap();
        let e = sum.h_w.entries();
        assert_eq!(e[0], q.i().lift_to(sum.algebra()).unwrap());
        assert_eq!(e[1], q.j().lift_to(sum.algebra()).unwrap().scale(&sum.t));
        assert_eq!(e[1].conj(), -&e[1]);
        assert!(matches!(
            scaled_sum(&h, &hp, "s"),
            Err(TowerError::Field(FieldError::NameCollision(_)))
        ));
    }

    #[test]
    fn basis_vectors_have_expected_norms() {
        let (_, q) = f5_q();
        let h = SkewHermitianForm::skew_hermitian(&q, vec![q.i()]).unwrap();
        let hp = SkewHermitianForm::skew_hermitian(&q, vec![q.j()]).unwrap();
        let sum = scaled_sum(&h, &hp, "t1").unwrap();
        let a = sum.algebra();
        assert_eq!(
            nu_w(&sum, &[a.one(), a.zero()]).unwrap(),
            HalfIntegerNorm::from_doubled(0)
        );
        assert_eq!(
            nu_w(&sum, &[a.zero(), a.one()]).unwrap(),
            HalfIntegerNorm::from_doubled(1)
        );
        assert!(nu_w(&sum, &[a.zero(), a.zero()]).unwrap().is_infinite());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rep = norm_identity_check(&sum, 60, 3, &mut rng).unwrap();
        assert!(rep.all_hold(), "{rep:?}");
    }

    #[test]
    fn slot_tower_two_levels() {
        let (k0, q) = f5_q();
        let tower = build_slot_tower(&k0, &q, &[q.i(), q.j()]).unwrap();
        assert_eq!(tower.top().depth(), 4);
        assert!(tower.asig.is_orthogonal());
        // disc = Nrd(t₁i)·Nrd(t₂j) = t₁²t₂²·su, the class of a₁a₂.
        let d = tower.asig.discriminant().unwrap().value;
        let a1a2 = k0.parse("s*u").unwrap().lift_to(tower.top()).unwrap();
        assert!((&d / &a1a2).is_square().unwrap());
        let split = QuaternionAlgebra::new(&k0, &k0.one(), &k0.parse("u").unwrap()).unwrap();
        assert_eq!(
            build_slot_tower(&k0, &split, &[split.i()]),
            Err(TowerError::SplitAlgebra)
        );
    }

    #[test]
    fn descent_of_prepared_roots() {
        let (k0, q) = f5_q();
        let tower = build_slot_tower(&k0, &q, &[q.i(), q.j()]).unwrap();
        let sum = &tower.ladder[1];
        let alg = sum.algebra();
        // ij anticommutes with i and j, so diag(ij, ij) is symmetric.
        let ghat = QMatrix::diag(alg, &[alg.ij(), alg.ij()]);
        let d = descend_symmetric_root(sum, &ghat).unwrap();
        let below = sum.h.algebra();
        assert_eq!(d.g.unwrap(), QMatrix::diag(below, &[below.ij()]));
        assert_eq!(d.lambda0, k0.parse("-s*u").unwrap().lift_to(sum.lower()).unwrap());
        // (1+t) scaling leaves the extraction unchanged.
        let scaled = ghat.scale(&(&sum.level().one() + &sum.t));
        let d2 = descend_symmetric_root(sum, &scaled).unwrap();
        assert_eq!(d2.g_prime, d.g_prime);
        assert_eq!(d2.lambda0, d.lambda0);
        // Conjugation by an isometry congruent to 1 mod t.
        let y = QMatrix::from_fn(alg, 2, |r, c| {
            if r == 0 && c == 1 {
                alg.i().scale(&sum.t)
            } else {
                alg.zero()
            }
        });
        let asig = InvolutionAlgebra::new(sum.h_w.clone()).unwrap();
        let conj = cayley_conjugate(&asig, &ghat, &y).unwrap();
        assert_ne!(conj, ghat);
        let d3 = descend_symmetric_root(sum, &conj).unwrap();
        assert_eq!(d3.g_prime, d.g_prime);
        // t·ĝ has odd-valuation square.
        let odd = QMatrix::diag(alg, &[alg.ij(), alg.ij().scale(&sum.t)]);
        assert!(descend_symmetric_root(sum, &odd).is_err());
    }

    #[test]
    fn leading_decomposition_examples() {
        let q = FieldTower::rationals();
        let alg = QuaternionAlgebra::new(&q, &q.from_int(-1), &q.from_int(-3)).unwrap();
        let asig = InvolutionAlgebra::new(SkewHermitianForm::skew_hermitian(&alg, vec![alg.i()]).unwrap()).unwrap();
        let ext = UnitaryExtension::complete(&asig, "x").unwrap();
        let fhat = ext.level().clone();
        let x = fhat.generator().unwrap();
        let halg = ext.involution_algebra().algebra().clone();
        // s = j is a similitude of ⟨i⟩ with μ = −3.
        let s = QMatrix::diag(&halg, &[halg.j()]);
        let d = multiplier_leading_decomposition(&ext, &ext.from_a(&s)).unwrap();
        assert_eq!(d.leading_multiplier, q.from_int(-3));
        assert!(d.norm_factor.is_one());
        let d = multiplier_leading_decomposition(&ext, &ext.u()).unwrap();
        assert!(d.leading_multiplier.is_one());
        assert_eq!(d.norm_factor, -&x);
        let one_x = &fhat.one() + &x;
        let g = ext.mul(
            &ext.from_a(&s),
            &ext.element(QMatrix::zero(&halg, 1), QMatrix::scalar(&halg, 1, &one_x)),
        );
        let d = multiplier_leading_decomposition(&ext, &g).unwrap();
        assert_eq!(d.leading_multiplier, q.from_int(-3));
        assert_eq!(d.norm_factor, -&(&x * &one_x.square()));
    }

    #[test]
    fn norms_lemma_instances() {
        let q = FieldTower::rationals();
        let fhat = q.laurent("x").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = fhat.parse("x + 2*x^2").unwrap();
        for e in [2, 4] {
            let inst = norms_lemma_quadratic(&fhat, e, &q.from_int(3), &m, 10, 2, &mut rng).unwrap();
            assert!(inst.holds(), "{inst:?}");
            assert_eq!(inst.control_nonsquare, Some(true));
        }
        let l = q.laurent("pi").unwrap();
        for e in [1, 2, 3, 4] {
            let inst = norms_lemma_laurent(&l, e, &q.from_int(-5), &l.parse("pi - pi^3").unwrap()).unwrap();
            assert!(inst.holds(), "{inst:?}");
        }
    }

    #[test]
    fn main_check_finite_instances() {
        let (k0, q) = f5_q();
        let bounds = MainBounds {
            precision: 2,
            height: 1,
            slot_bound: 2,
        };
        let none = build_slot_tower(&k0, &q, &[q.i(), q.j(), q.ij()]).unwrap();
        let rep = theorem_main_check(&none, &bounds).unwrap();
        assert!(rep.common_slot_certified_none);
        assert!(rep.witness_lambda.is_none());
        assert!(rep.common_nonsquare_classes.is_empty());
        let found = build_slot_tower(&k0, &q, &[q.i(), q.j(), &q.i() + &q.j()]).unwrap();
        let rep = theorem_main_check(&found, &bounds).unwrap();
        assert!(rep.common_slot.starts_with("Found"), "{rep:?}");
        assert!(rep.witness_lambda.is_some(), "{rep:?}");
        assert_eq!(rep.descent.len(), 3);
        assert!(rep.descent.iter().all(|s| s.anticommutes && s.symbol_matches));
        assert_eq!(rep.final_slot_verified, Some(true));
    }
}
