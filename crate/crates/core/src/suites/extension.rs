//! Suites on unitary extensions: idempotents from embeddings, isotropy
//! transfer, the ramified norm statement and the leading-term
//! decomposition of multipliers.

use rand::Rng;

use crate::field::{random_base, random_nonzero, FieldElement, FieldTower};
use crate::herm::{similitude_census, InvolutionAlgebra, QMatrix, SearchBudget, SkewHermitianForm};
use crate::quat::{value_grid, QuaternionAlgebra, QuaternionElement};
use crate::tower_forms::{
    multiplier_leading_decomposition, norms_lemma_laurent, norms_lemma_quadratic, random_monomial_sum,
};
use crate::unitary::{
    hyperbolic_isotropic, hyperbolicity_check, isotropy_transfer_check, HyperbolicityOutcome, UnitaryExtension,
};

use super::{Recorder, SuiteError, SuiteOptions};

fn err(e: impl std::fmt::Display) -> SuiteError {
    SuiteError::Computation(e.to_string())
}

pub(crate) struct Setting {
    pub label: &'static str,
    pub alg: QuaternionAlgebra,
    /// Two nested layers: exact arithmetic is costly, so fewer instances.
    pub nested: bool,
}

fn setting(label: &'static str, k: FieldTower, a: &str, b: &str) -> Result<Setting, SuiteError> {
    let alg = QuaternionAlgebra::new(&k, &k.parse(a)?, &k.parse(b)?).map_err(err)?;
    let nested = k.depth() > 1;
    Ok(Setting { label, alg, nested })
}

/// Division algebras over the five towers the unitary suites sample from.
pub(crate) fn settings() -> Result<Vec<Setting>, SuiteError> {
    let q = FieldTower::rationals();
    let f7 = FieldTower::prime_field(7)?.laurent("t")?;
    let f5 = FieldTower::prime_field(5)?.laurent("s")?.laurent("u")?;
    let f3 = FieldTower::prime_field(3)?.laurent("t")?;
    let qx = q.laurent("x")?;
    Ok(vec![
        setting("(-1,-3) over Q", q, "-1", "-3")?,
        setting("(3,t) over F7((t))", f7, "3", "t")?,
        setting("(-1,t) over F3((t))", f3, "-1", "t")?,
        setting("(s,u) over F5((s))((u))", f5, "s", "u")?,
        setting("(-1,x) over Q((x))", qx, "-1", "x")?,
    ])
}

/// Instance entries are short Laurent polynomials: exact inverses of full
/// random rational functions over two nested layers grow too fast.
fn sparse_nonzero<R: Rng + ?Sized>(l: &FieldTower, rng: &mut R, height: i64) -> FieldElement {
    loop {
        let e = random_monomial_sum(l, rng, height);
        if !e.is_zero() {
            return e;
        }
    }
}

fn sparse_full<R: Rng + ?Sized>(alg: &QuaternionAlgebra, rng: &mut R, height: i64) -> QuaternionElement {
    let l = alg.level();
    let c = [0, 1, 2, 3].map(|_| random_monomial_sum(l, rng, height));
    alg.element(c).expect("coordinates live in the algebra's level")
}

fn sparse_pure<R: Rng + ?Sized>(alg: &QuaternionAlgebra, rng: &mut R, height: i64) -> QuaternionElement {
    let l = alg.level();
    let c = [0, 1, 2, 3].map(|k| {
        if k == 0 {
            l.zero()
        } else {
            random_monomial_sum(l, rng, height)
        }
    });
    alg.element(c).expect("coordinates live in the algebra's level")
}

fn invertible_pure<R: Rng + ?Sized>(alg: &QuaternionAlgebra, rng: &mut R, height: i64) -> QuaternionElement {
    loop {
        let q = sparse_pure(alg, rng, height);
        if !q.nrd().is_zero() {
            return q;
        }
    }
}

/// The part of `p` anticommuting with `q`: `(p − q p q⁻¹)/2`.
fn anticommuting_part(p: &QuaternionElement, q: &QuaternionElement) -> QuaternionElement {
    let l = q.algebra().level();
    let conj = &(q * p) * &q.inv().expect("invertible");
    (p - &conj).scale(&l.from_ratio(1, 2))
}

fn skew(alg: &QuaternionAlgebra, entries: Vec<QuaternionElement>) -> Result<InvolutionAlgebra, SuiteError> {
    InvolutionAlgebra::new(SkewHermitianForm::skew_hermitian(alg, entries).map_err(err)?).map_err(err)
}

/// A symmetric `s` with `s² = a` for a fresh involution, by kind.
struct Instance {
    kind: &'static str,
    asig: InvolutionAlgebra,
    s: QMatrix,
    a: FieldElement,
}

fn build_instance<R: Rng + ?Sized>(
    alg: &QuaternionAlgebra,
    kind: usize,
    rng: &mut R,
    height: i64,
) -> Result<Option<Instance>, SuiteError> {
    let l = alg.level().clone();
    match kind {
        0 => {
            let q = invertible_pure(alg, rng, height);
            let p = anticommuting_part(&sparse_pure(alg, rng, height), &q);
            if p.nrd().is_zero() {
                return Ok(None);
            }
            let a = p.pure_square().map_err(err)?;
            Ok(Some(Instance {
                kind: "p anticommuting with q on <q>",
                asig: skew(alg, vec![q])?,
                s: QMatrix::diag(alg, &[p]),
                a,
            }))
        }
        1 | 4 => {
            let q = invertible_pure(alg, rng, height);
            let c = sparse_nonzero(&l, rng, height);
            let p = anticommuting_part(&sparse_pure(alg, rng, height), &q);
            if p.nrd().is_zero() {
                return Ok(None);
            }
            let a = p.pure_square().map_err(err)?;
            let asig = skew(alg, vec![q.clone(), q.scale(&c)])?;
            let s = QMatrix::diag(alg, &[p.clone(), p]);
            if kind == 1 {
                return Ok(Some(Instance {
                    kind: "diag(p, p) on <q, cq>",
                    asig,
                    s,
                    a,
                }));
            }
            // Conjugate by a similitude: a census one over Q, otherwise
            // diag(r, r̄) with r = x + yq, x, y in the base field, whose
            // multiplier is Nrd(r).
            let census = if l.is_base() {
                let budget = SearchBudget {
                    height: 1,
                    max_candidates: 40,
                    trials: 0,
                    seed: 0,
                };
                similitude_census(&asig, &budget).map_err(err)?.0
            } else {
                Vec::new()
            };
            let g = match census.iter().find(|sim| sim.g.as_scalar().is_none()) {
                Some(sim) => sim.g.clone(),
                None => {
                    let r = &alg.scalar(&random_base(&l, rng, height)) + &q.scale(&random_base(&l, rng, height));
                    if r.nrd().is_zero() {
                        return Ok(None);
                    }
                    QMatrix::diag(alg, &[r.clone(), r.conj()])
                }
            };
            let g_inv = g.inverse().map_err(err)?;
            Ok(Some(Instance {
                kind: "g s g^-1 for a similitude g",
                asig,
                s: &(&g * &s) * &g_inv,
                a,
            }))
        }
        2 => {
            let q = invertible_pure(alg, rng, height);
            let a = sparse_nonzero(&l, rng, height);
            if a.is_square().map_err(err)? {
                return Ok(None);
            }
            let asig = skew(alg, vec![q.clone(), -&q])?;
            match hyperbolicity_check(&asig, &a, 2, 1).map_err(err)? {
                HyperbolicityOutcome::Hyperbolic { witness, .. } => Ok(Some(Instance {
                    kind: "hyperbolic plane <q, -q>",
                    asig,
                    s: witness,
                    a,
                })),
                _ => Ok(None),
            }
        }
        _ => {
            let c = sparse_nonzero(&l, rng, height);
            let x = sparse_full(alg, rng, height);
            if x.nrd().is_zero() {
                return Ok(None);
            }
            let a = &x.nrd() / &c;
            let asig = InvolutionAlgebra::new(SkewHermitianForm::hermitian(alg, &[l.one(), c.clone()]).map_err(err)?)
                .map_err(err)?;
            let low = x.conj().scale(&c.inv()?);
            let s = QMatrix::from_rows(alg, vec![vec![alg.zero(), x], vec![low, alg.zero()]]).map_err(err)?;
            Ok(Some(Instance {
                kind: "[[0, x], [x̄/c, 0]] on hermitian <1, c>",
                asig,
                s,
                a,
            }))
        }
    }
}

/// Idempotents `e = ½(1 + s u⁻¹)` from symmetric square roots of `a` and
/// back, plus the split symplectic exception.
pub(crate) fn hypcond(opts: &SuiteOptions, rec: &mut Recorder) -> Result<(), SuiteError> {
    let per_setting = opts.trials.unwrap_or(16);
    let height = opts.height.unwrap_or(2);
    let mut rng = opts.rng(1);
    for st in settings()? {
        let target = if st.nested {
            per_setting.div_ceil(2)
        } else {
            per_setting
        };
        let mut made = 0;
        let mut attempts = 0;
        while made < target && attempts < target * 8 {
            attempts += 1;
            let Some(inst) = build_instance(&st.alg, made % 5, &mut rng, height)? else {
                continue;
            };
            if inst.a.is_square().map_err(err)? {
                continue;
            }
            made += 1;
            let label = format!("{} / {}", st.label, inst.kind);
            let well_formed = inst.asig.is_symmetric(&inst.s).map_err(err)?
                && &inst.s * &inst.s == inst.asig.identity().scale(&inst.a);
            rec.check(
                "symmetric s with s² = a",
                &label,
                well_formed,
                format!("a = {}", inst.a),
            );
            let ext = UnitaryExtension::new(&inst.asig, &inst.a).map_err(err)?;
            let idem = match ext.idempotent_from_embedding(&inst.s) {
                Ok(i) => i,
                Err(e) => {
                    rec.failure("e² = e", &label, e);
                    continue;
                }
            };
            rec.bump("instances", 1);
            // Independent assembly of e = ½ + (s/2a)u.
            let l = inst.asig.level();
            let half = l.from_ratio(1, 2);
            let direct = ext.element(inst.asig.identity().scale(&half), inst.s.scale(&(&half / &inst.a)));
            rec.check("e = ½(1 + s u⁻¹)", &label, direct == idem.e, "assembled independently");
            let sq = ext.mul(&idem.e, &idem.e);
            rec.check("e² = e", &label, sq == idem.e, "exact residual");
            let te = ext.tau(&idem.e).map_err(err)?;
            rec.check(
                "τ(e) = 1 − e",
                &label,
                te == ext.sub(&ext.one(), &idem.e),
                "exact residual",
            );
            let rest = idem.transcript.iter().all(|c| c.residual_zero);
            rec.check(
                "idempotent transcript",
                &label,
                rest,
                format!("{} identities", idem.transcript.len()),
            );
            match ext.embedding_from_idempotent(&idem.e) {
                Ok(emb) => {
                    rec.bump("round_trips", 1);
                    let sym = inst.asig.apply(&emb.s0).map_err(err)? == emb.s0;
                    let sq = &emb.s0 * &emb.s0 == inst.asig.identity().scale(&inst.a);
                    rec.check("s₀ = e₁e₂⁻¹ is symmetric", &label, sym, "σ(s₀) = s₀");
                    rec.check("s₀² = a", &label, sq, "exact residual");
                    rec.check("s₀ recovers s", &label, emb.s0 == inst.s, "round trip");
                }
                Err(e) => rec.failure("s₀ recovers s", &label, e),
            }
        }
    }
    // Split algebra, hermitian ⟨1⟩ (symplectic, degree 2), non-square a.
    let q = FieldTower::rationals();
    let split = QuaternionAlgebra::new(&q, &q.one(), &q.one()).map_err(err)?;
    let asig = InvolutionAlgebra::new(SkewHermitianForm::hermitian(&split, &[q.one()]).map_err(err)?).map_err(err)?;
    let grid_len = value_grid(&q, 3).len();
    for a in [2, 3, -1] {
        let a = q.from_int(a);
        let label = format!("M2(Q) symplectic, a = {a}");
        match hyperbolicity_check(&asig, &a, 2, 3).map_err(err)? {
            HyperbolicityOutcome::ExceptionalCase(ev) => {
                rec.bump("exceptional", 1);
                rec.check(
                    "split symplectic exception",
                    &label,
                    ev.odd_degree && ev.no_root,
                    format!("{} symmetric candidates, Pfaffian degree odd on all", ev.candidates),
                );
                // Symmetric elements of ⟨1⟩ are central, so the grid is the
                // whole height-3 slice; none squares to a.
                let none = value_grid(&q, 3).iter().all(|(_, c)| c.square() != a);
                rec.check(
                    "exhaustive height-3 grid",
                    &label,
                    ev.candidates == grid_len && none,
                    format!("{grid_len} grid values"),
                );
                rec.data(&format!("exceptional a={a}"), &ev);
            }
            other => {
                rec.check("split symplectic exception", &label, false, format!("{other:?}"));
            }
        }
    }
    Ok(())
}

/// Isotropy over the completed unitary extension against isotropy below.
pub(crate) fn isohyp(opts: &SuiteOptions, rec: &mut Recorder) -> Result<(), SuiteError> {
    let trials = opts.trials.unwrap_or(20);
    let precision = opts.precision.unwrap_or(5);
    let mut rng = opts.rng(2);
    let q = FieldTower::rationals();
    let f7 = FieldTower::prime_field(7)?.laurent("t")?;
    let cases = [
        (q.clone(), "-1", "-1"),
        (q.clone(), "-1", "-3"),
        (q, "2", "5"),
        (f7, "3", "t"),
    ];
    for (k, a, b) in cases {
        let alg = QuaternionAlgebra::new(&k, &k.parse(a)?, &k.parse(b)?).map_err(err)?;
        let label = format!("({a},{b}) over {k}");
        // ⟨i⟩ is anisotropic: no isotropic vector over K̂ either.
        let aniso = skew(&alg, vec![alg.i()])?;
        let ext = UnitaryExtension::complete(&aniso, "x").map_err(err)?;
        let rep = isotropy_transfer_check(&ext, None, 0, precision, &mut rng).map_err(err)?;
        rec.bump("anisotropic_searched", rep.searched);
        rec.check(
            "anisotropic stays anisotropic",
            format!("<i> {label}"),
            rep.search_hits == 0 && rep.searched > 0,
            format!("{} truncated candidates, {} hits", rep.searched, rep.search_hits),
        );
        // ⟨i, −i⟩ is isotropic: lifts stay isotropic with isotropic leading terms.
        let hyp = skew(&alg, vec![alg.i(), -&alg.i()])?;
        let e = hyperbolic_isotropic(&hyp, 0, 1).map_err(err)?;
        let ext = UnitaryExtension::complete(&hyp, "x").map_err(err)?;
        let rep = isotropy_transfer_check(&ext, Some(&e), trials, 1, &mut rng).map_err(err)?;
        rec.bump("lifted_witnesses", rep.lifted_witnesses);
        rec.check(
            "isotropic lifts to isotropic",
            format!("<i, -i> {label}"),
            rep.lifted_witnesses > 0 && rep.leading_isotropic == rep.lifted_witnesses,
            format!(
                "{} lifts, {} isotropic leading terms",
                rep.lifted_witnesses, rep.leading_isotropic
            ),
        );
        rec.check(
            "truncated search sees isotropy",
            format!("<i, -i> {label}"),
            rep.search_hits > 0,
            format!("{} hits in {} candidates", rep.search_hits, rep.searched),
        );
    }
    Ok(())
}

fn positive_valuation_unit<R: Rng + ?Sized>(f: &FieldTower, rng: &mut R, height: i64) -> FieldElement {
    let x = f.generator().expect("Laurent level");
    loop {
        let c1 = random_base(f, rng, height);
        let c2 = random_base(f, rng, height);
        let m = &(&c1 * &x) + &(&c2 * &x.square());
        if !m.is_zero() {
            return m;
        }
    }
}

/// `x ≡ −ū mod L^{×2}` over ramified extensions, with norm membership.
pub(crate) fn norms(opts: &SuiteOptions, rec: &mut Recorder) -> Result<(), SuiteError> {
    let per_base = opts.trials.unwrap_or(12);
    let samples = 6;
    let height = opts.height.unwrap_or(3);
    let mut rng = opts.rng(3);
    let bases = [FieldTower::rationals(), FieldTower::prime_field(7)?];
    for base in &bases {
        let fhat = base.laurent("x")?;
        for idx in 0..per_base {
            let u = random_nonzero(base, &mut rng, height);
            let m = positive_valuation_unit(&fhat, &mut rng, height);
            let e = if idx % 4 == 3 { 4 } else { 2 };
            let label = format!("e = {e}, u = {u}, m = {m} over {fhat}");
            match norms_lemma_quadratic(&fhat, e, &u, &m, samples, 2, &mut rng) {
                Ok(inst) => {
                    rec.bump(&format!("quadratic_e{e}"), 1);
                    rec.check(
                        "x ≡ −ū mod L^{×2}",
                        &label,
                        inst.square_certified,
                        "exact square test in L",
                    );
                    if let Some(c) = inst.control_nonsquare {
                        rec.check("x ≢ ū mod L^{×2}", &label, c, "negative control");
                    }
                    rec.check(
                        "norms lie in N(K̂/F̂)·{1, −ū}",
                        &label,
                        inst.norms_in_group == inst.norms_sampled,
                        format!("{}/{} sampled norms", inst.norms_in_group, inst.norms_sampled),
                    );
                }
                Err(e) => rec.failure("x ≡ −ū mod L^{×2}", &label, e),
            }
        }
        let l = base.laurent("pi")?;
        for e in [2u32, 3, 4] {
            for _ in 0..3 {
                let u = random_nonzero(base, &mut rng, height);
                let m = positive_valuation_unit(&l, &mut rng, height);
                let label = format!("e = {e}, u = {u}, m = {m} over {l}");
                match norms_lemma_laurent(&l, e, &u, &m) {
                    Ok(inst) => {
                        rec.bump("laurent_model", 1);
                        let anchor = if e % 2 == 0 {
                            "x ≡ −ū mod L^{×2}"
                        } else {
                            "x ≡ −πū mod L^{×2}"
                        };
                        rec.check(anchor, &label, inst.square_certified, "uniformizer model");
                        if let Some(c) = inst.control_nonsquare {
                            rec.check("x ≢ ū mod L^{×2}", &label, c, "negative control");
                        }
                    }
                    Err(err) => rec.failure("x ≡ −ū mod L^{×2}", &label, err),
                }
            }
        }
    }
    rec.note("odd ramification is covered through the uniformizer model only");
    Ok(())
}

/// `τ̂(g)g` split into `σ(a_r)a_r` and a norm from `K̂` for similitudes
/// `g = s ⊗ (c₀ + c₁ξ)` and their products.
pub(crate) fn multiplier_g(opts: &SuiteOptions, rec: &mut Recorder) -> Result<(), SuiteError> {
    let per_form = opts.trials.unwrap_or(30);
    let height = opts.height.unwrap_or(2);
    let mut rng = opts.rng(4);
    let q = FieldTower::rationals();
    let qt = q.laurent("t1")?;
    let mut forms: Vec<(String, InvolutionAlgebra)> = Vec::new();
    for (a, b, which) in [("-1", "-3", 0usize), ("-1", "-1", 0), ("2", "5", 1)] {
        let alg = QuaternionAlgebra::new(&q, &q.parse(a)?, &q.parse(b)?).map_err(err)?;
        let e = [alg.i(), alg.j()][which].clone();
        forms.push((format!("({a},{b}) <{}>", ["i", "j"][which]), skew(&alg, vec![e])?));
    }
    let alg = QuaternionAlgebra::new(&qt, &qt.from_int(-1), &qt.from_int(-3)).map_err(err)?;
    let t1 = qt.generator().expect("generator");
    forms.push((
        "(-1,-3) <i, t1 j> over Q((t1))".into(),
        skew(&alg, vec![alg.i(), alg.j().scale(&t1)])?,
    ));
    let budget = SearchBudget {
        height: 1,
        max_candidates: 60,
        trials: 0,
        seed: 0,
    };
    for (label, asig) in forms {
        let (census, _) = similitude_census(&asig, &budget).map_err(err)?;
        rec.bump("census_similitudes", census.len());
        let ext = UnitaryExtension::complete(&asig, "x").map_err(err)?;
        let fhat = ext.level().clone();
        let x = ext.radicand().clone();
        let halg = ext.involution_algebra().algebra().clone();
        let pool: Vec<(QMatrix, FieldElement)> = if census.is_empty() {
            vec![(asig.identity(), q.one())]
        } else {
            census.iter().map(|s| (s.g.clone(), s.mu.clone())).collect()
        };
        let one_gen = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<_, SuiteError> {
            let (g, mu) = &pool[rng.gen_range(0..pool.len())];
            loop {
                let c0 = random_monomial_sum(&fhat, rng, height);
                let c1 = if rng.gen_bool(0.7) {
                    random_monomial_sum(&fhat, rng, height)
                } else {
                    fhat.zero()
                };
                let nc = &c0.square() - &(&x * &c1.square());
                if nc.is_zero() {
                    continue;
                }
                let gh = g.lift_to(&halg).map_err(err)?;
                let el = ext.mul(&ext.from_a(&gh), &ext.scalar(&c0, &c1));
                return Ok((el, &mu.lift_to(&fhat)? * &nc));
            }
        };
        for idx in 0..per_form {
            let (g, mu) = if idx % 3 == 2 {
                let (g1, m1) = one_gen(&mut rng)?;
                let (g2, m2) = one_gen(&mut rng)?;
                (ext.mul(&g1, &g2), &m1 * &m2)
            } else {
                one_gen(&mut rng)?
            };
            let inst = format!("{label} #{idx}");
            match multiplier_leading_decomposition(&ext, &g) {
                Ok(d) => {
                    rec.bump("similitudes", 1);
                    let ok = d.checks.iter().all(|c| c.residual_zero);
                    rec.check(
                        "factor ∈ N(K̂/F̂)",
                        &inst,
                        ok,
                        format!("r = {}, σ(a_r)a_r = {}", d.r, d.leading_multiplier),
                    );
                    let rebuilt = &d.leading_multiplier.lift_to(&fhat)? * &d.norm_factor;
                    rec.check(
                        "σ(a_r)a_r·factor = τ̂(g)g",
                        &inst,
                        rebuilt == mu,
                        "against the multiplier of the construction",
                    );
                }
                Err(e) => rec.failure("factor ∈ N(K̂/F̂)", &inst, e),
            }
        }
    }
    Ok(())
}
