//! Suites on the iterated tower `⟨t₁q₁, …, t_nq_n⟩`: the half-integer norm
//! ladder, descent of symmetric roots, the common-slot consistency check
//! and the worked pipeline from three pure quaternions.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::brauer::{algebra_class, brauer_equal, common_slot, symbol_class, BrauerError, CommonSlotOutcome};
use crate::field::{FieldElement, FieldTower};
use crate::herm::{
    diagonal_improper_search, ImproperSearchOutcome, InvolutionAlgebra, QMatrix, Similitude, SkewHermitianForm,
};
use crate::quat::{qmt_pure_triple, value_grid, QuaternionAlgebra, QuaternionElement};
use crate::tower_forms::{
    build_slot_tower, cayley_conjugate, descend_symmetric_root, ladder_evidence, scaled_sum, theorem_main_check,
    MainBounds, SlotTower, TowerError,
};
use crate::unitary::UnitaryExtension;

use super::{BaseChoice, Recorder, SuiteError, SuiteOptions};

fn err(e: impl std::fmt::Display) -> SuiteError {
    SuiteError::Computation(e.to_string())
}

fn f5_algebra() -> Result<(FieldTower, QuaternionAlgebra), SuiteError> {
    let k0 = FieldTower::prime_field(5)?.laurent("s")?.laurent("u")?;
    let q = QuaternionAlgebra::new(&k0, &k0.parse("s")?, &k0.parse("u")?).map_err(err)?;
    Ok((k0, q))
}

/// `[i, j, i+j]`: a common slot exists. `[i, j, ij]`: none does.
fn f5_towers() -> Result<(SlotTower, SlotTower), SuiteError> {
    let (k0, q) = f5_algebra()?;
    let found = build_slot_tower(&k0, &q, &[q.i(), q.j(), &q.i() + &q.j()]).map_err(err)?;
    let none = build_slot_tower(&k0, &q, &[q.i(), q.j(), q.ij()]).map_err(err)?;
    Ok((found, none))
}

/// Norm ladder and descent of prepared symmetric roots.
pub(crate) fn sim1(opts: &SuiteOptions, rec: &mut Recorder) -> Result<(), SuiteError> {
    let samples = opts.trials.unwrap_or(1000);
    let height = opts.height.unwrap_or(2);
    let mut rng = opts.rng(6);
    let (tower, _) = f5_towers()?;
    let reports = ladder_evidence(&tower, samples, height, &mut rng).map_err(err)?;
    for r in &reports {
        rec.bump("ladder_samples", r.samples);
        rec.check(
            "ν_W(w) = ½ v(h_W(w, w))",
            &r.level,
            r.identity_holds == r.samples && r.samples >= samples,
            format!("{}/{} vectors", r.identity_holds, r.samples),
        );
        rec.check(
            "v(h_W(w₁, w₂)) ≥ ν_W(w₁) + ν_W(w₂)",
            &r.level,
            r.compat_holds == r.compat_checked,
            format!("{}/{} pairs; {:?}", r.compat_holds, r.compat_checked, r.failures),
        );
    }
    rec.data("ladder", &reports);

    // Prepared roots: pⱼ anticommuting with qⱼ and pⱼ² = μ for the common
    // slot μ, scaled by c ∈ k₀ so that λ₀ = μc².
    let k0 = tower.k0.clone();
    let slots = tower.slots().map_err(err)?;
    let cs = common_slot(&tower.q, &slots, &k0, 2, &[]).map_err(err)?;
    let Some(mu) = cs.found().cloned() else {
        rec.check(
            "common slot for the descent instances",
            "[i, j, i+j]",
            false,
            format!("{:?}", cs.outcome),
        );
        return Ok(());
    };
    let roots: Option<Vec<QuaternionElement>> = tower
        .qs
        .iter()
        .map(|q| crate::herm::find_anticommuting_with_square(q, &mu, 2))
        .collect();
    let Some(roots) = roots else {
        rec.check("anticommuting roots of μ", "[i, j, i+j]", false, format!("μ = {mu}"));
        return Ok(());
    };
    let scalars: Vec<FieldElement> = value_grid(&k0, 1)
        .into_iter()
        .map(|(_, c)| c)
        .filter(|c| !c.is_zero())
        .take(6)
        .collect();
    for (level, sum) in tower.ladder.iter().enumerate() {
        let alg = sum.algebra();
        let below = sum.lower();
        let asig_w = InvolutionAlgebra::new(sum.h_w.clone()).map_err(err)?;
        let size = level + 1;
        let mut y = QMatrix::zero(alg, size);
        y.set(0, size - 1, alg.i().scale(&sum.t));
        for c in &scalars {
            let ps: Vec<QuaternionElement> = roots[..size]
                .iter()
                .map(|p| p.scale(c).lift_to(alg))
                .collect::<Result<_, _>>()
                .map_err(err)?;
            let ghat = QMatrix::diag(alg, &ps);
            let lambda0 = (&mu * &c.square()).lift_to(below)?;
            let below_alg = sum.h_prime.algebra();
            let down = |m: &QMatrix| -> Option<QMatrix> {
                m.map_entries(below_alg, |q| {
                    let cs = q
                        .coords()
                        .iter()
                        .map(|x| x.descend_to(below))
                        .collect::<Option<Vec<_>>>();
                    let cs = cs.ok_or(crate::herm::HermError::SizeMismatch)?;
                    Ok(below_alg.element([cs[0].clone(), cs[1].clone(), cs[2].clone(), cs[3].clone()])?)
                })
                .ok()
            };
            let expect_g = if size > 1 {
                down(&ghat.sub_block(0..level, 0..level))
            } else {
                None
            };
            let expect_gp = down(&ghat.sub_block(level..size, level..size));
            let variants: Vec<(&str, Result<QMatrix, TowerError>)> = vec![
                ("plain", Ok(ghat.clone())),
                ("scaled by 1+t", Ok(ghat.scale(&(&sum.level().one() + &sum.t)))),
                ("shifted by t", Ok(ghat.scale(&sum.t))),
                ("Cayley conjugate", cayley_conjugate(&asig_w, &ghat, &y)),
            ];
            for (name, g) in variants {
                let label = format!("level {} ({}), c = {c}, {name}", level + 1, sum.level());
                let outcome = g.and_then(|g| descend_symmetric_root(sum, &g));
                match outcome {
                    Ok(d) => {
                        rec.bump("descents", 1);
                        let g_ok = match (&d.g, &expect_g) {
                            (None, None) => true,
                            (Some(a), Some(b)) => a == b,
                            _ => false,
                        };
                        let ok = d.checks.iter().all(|c| c.residual_zero)
                            && d.lambda0 == lambda0
                            && Some(&d.g_prime) == expect_gp.as_ref()
                            && g_ok;
                        rec.check(
                            "descent recovers (g, g′, λ₀)",
                            &label,
                            ok,
                            format!("λ₀ = {}, v(λ) = {}", d.lambda0, d.valuation),
                        );
                    }
                    Err(e) => rec.failure("descent recovers (g, g′, λ₀)", &label, e),
                }
            }
        }
    }
    // Similar forms h = h′ = ⟨q⟩ admit ĝ with ĝ² = t.
    let (k0, q) = f5_algebra()?;
    let h = SkewHermitianForm::skew_hermitian(&q, vec![q.i()]).map_err(err)?;
    let sum = scaled_sum(&h, &h, "t").map_err(err)?;
    let alg = sum.algebra();
    let ghat = QMatrix::from_rows(
        alg,
        vec![vec![alg.zero(), alg.scalar(&sum.t)], vec![alg.one(), alg.zero()]],
    )
    .map_err(err)?;
    let asig_w = InvolutionAlgebra::new(sum.h_w.clone()).map_err(err)?;
    let sym = asig_w.is_symmetric(&ghat).map_err(err)?;
    let out = descend_symmetric_root(&sum, &ghat);
    rec.check(
        "similar forms give an odd-valuation multiplier",
        format!("<i> ⊥ t<i> over {k0}((t))"),
        sym && matches!(out, Err(TowerError::OddValuationMultiplier(1))),
        format!("{out:?}").chars().take(120).collect::<String>(),
    );
    Ok(())
}

fn bounds_from(opts: &SuiteOptions) -> MainBounds {
    let d = MainBounds::default();
    MainBounds {
        precision: opts.precision.unwrap_or(d.precision),
        height: opts.height.unwrap_or(d.height),
        slot_bound: d.slot_bound,
    }
}

/// Common slot over `k₀` against symmetric roots over `k`.
pub(crate) fn main_theorem(opts: &SuiteOptions, rec: &mut Recorder) -> Result<(), SuiteError> {
    let bounds = bounds_from(opts);
    let (found, none) = f5_towers()?;
    for (label, tower) in [("[i, j, ij]", &none), ("[i, j, i+j]", &found)] {
        match theorem_main_check(tower, &bounds) {
            Ok(rep) => {
                rec.bump("candidates", rep.candidates);
                rec.check(
                    "⟨q₁⟩, ⟨q₂⟩ not similar",
                    label,
                    rep.first_slots_non_similar,
                    format!("slots {:?}", rep.slots),
                );
                if rep.common_slot_certified_none {
                    rec.bump("none_certified", 1);
                    rec.check(
                        "no symmetric g with non-square g²",
                        label,
                        rep.witness_lambda.is_none() && rep.common_nonsquare_classes.is_empty(),
                        format!(
                            "{} candidates (precision {}, height {}), {} square λ",
                            rep.candidates, bounds.precision, bounds.height, rep.square_excluded
                        ),
                    );
                } else if rep.common_slot.starts_with("Found") {
                    rec.bump("found", 1);
                    let stages = rep.descent.len() == tower.n()
                        && rep.descent.iter().all(|s| s.anticommutes && s.symbol_matches);
                    rec.check(
                        "descent chain gᵢqᵢ = −qᵢgᵢ, Q ≃ (aᵢ, λᵢ)",
                        label,
                        rep.witness_lambda.is_some() && stages && rep.final_slot_verified == Some(true),
                        format!("{} = {:?}", rep.common_slot, rep.witness_lambda),
                    );
                } else {
                    rec.check("common slot decided", label, false, rep.common_slot.clone());
                }
                rec.check("consistent", label, rep.consistent, rep.common_slot.clone());
                rec.data(label, &rep);
            }
            Err(TowerError::ContradictionFound(what)) => rec.contradiction(format!("{label}: {what}")),
            Err(e) => rec.failure("consistent", label, e),
        }
    }
    Ok(())
}

/// `a₁((1−a₁)²(1+a₂)² − 4(1−a₁)a₂)` through the expression parser.
fn target_by_parser(k0: &FieldTower, a1: &str, a2: &str) -> Result<FieldElement, SuiteError> {
    let text = format!("({a1})*((1-({a1}))^2*(1+({a2}))^2-4*(1-({a1}))*({a2}))");
    Ok(k0.parse(&text)?)
}

/// Products `c·Π` of grid values and subsets of the slots.
fn multiplier_candidates(k0: &FieldTower, slots: &[FieldElement], height: i64) -> Vec<FieldElement> {
    let grid: Vec<FieldElement> = value_grid(k0, height)
        .into_iter()
        .map(|(_, c)| c)
        .filter(|c| !c.is_zero())
        .collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << slots.len()) {
        let mut p = k0.one();
        for (i, a) in slots.iter().enumerate() {
            if mask >> i & 1 == 1 {
                p = &p * a;
            }
        }
        for c in &grid {
            out.push(&p * c);
        }
    }
    out
}

/// The pipeline from `q₁, q₂, q₃ ∈ (a₁, a₂)` to the unitary extension.
fn record_improper(rec: &mut Recorder, asig: &InvolutionAlgebra, s: &Similitude, n: usize, label: &str, source: &str) {
    rec.bump("improper_found", 1);
    let checked = asig
        .reduced_norm(&s.g)
        .and_then(|nrd| Ok(nrd == -&s.mu.pow(n as i64) && asig.multiplier(&s.g)? == s.mu));
    match checked {
        Ok(ok) => {
            rec.check(
                "improper similitude: Nrd(g) = −μⁿ",
                label,
                ok,
                format!("μ = {}, from {source}", s.mu),
            );
        }
        Err(e) => rec.failure("improper similitude: Nrd(g) = −μⁿ", label, e),
    }
    match asig.criterion_holds(s) {
        Ok(v) => {
            rec.check("(δ, μ) ≃ Q for the improper similitude", label, v, "");
        }
        Err(e) => rec.note(format!("(δ, μ) not decided over this tower: {e}")),
    }
    rec.data(
        "improper_similitude",
        serde_json::json!({"source": source, "mu": s.mu.to_string(), "g": s.g.to_string()}),
    );
}

/// With `w² = −1` in the base, `g = diag(w q₁, q₁, c, …, c)` is an improper
/// similitude of `⟨t₁q₁, …, t_nq_n⟩` with multiplier `a₁`:
/// `w q₁` and `c` commute with their slots and have norm `a₁`, while `q₁`
/// anticommutes with `q₂` and squares to `a₁`. Here `c = −a₁x₁/x₀ + (w/x₀)q₃`
/// where `x₀ + x₁√a₁ = (1 − √a₁)((1−a₂) + (1+a₂)√a₁)` has norm `a₃/a₁`.
fn explicit_improper(
    tower: &SlotTower,
    triple: &crate::quat::PureTriple,
    w: &FieldElement,
    n: usize,
) -> Result<Option<Similitude>, SuiteError> {
    let alg = &triple.algebra;
    let k0 = alg.level();
    let (a1, a2) = (alg.a().clone(), alg.b().clone());
    let one = k0.one();
    let w = w.lift_to(k0)?;
    let x0 = &(&one - &a2) - &(&a1 * &(&one + &a2));
    let x1 = &a2 * &k0.from_int(2);
    if x0.is_zero() {
        return Ok(None);
    }
    let c1 = triple.q1.scale(&w);
    let c2 = triple.q1.clone();
    let c3 = &alg.scalar(&-&(&(&a1 * &x1) / &x0)) + &triple.q3.scale(&(&w / &x0));
    let top = tower.asig.algebra();
    let mut entries = vec![c1.lift_to(top).map_err(err)?, c2.lift_to(top).map_err(err)?];
    let c3 = c3.lift_to(top).map_err(err)?;
    entries.extend(std::iter::repeat_n(c3, n - 2));
    let g = QMatrix::diag(top, &entries);
    Ok(Some(tower.asig.classify(&g).map_err(err)?))
}

pub(crate) fn example_main(opts: &SuiteOptions, rec: &mut Recorder) -> Result<(), SuiteError> {
    let n = opts.n.unwrap_or(3);
    let base = opts.base.unwrap_or(BaseChoice::Q);
    let height = opts.height.unwrap_or(1);
    let k_star = base.tower()?;
    if let (BaseChoice::Fp(_), Some(_)) = (base, opts.specialize) {
        return Err(SuiteError::BadOption(
            "every quaternion algebra over a finite field splits; specialize over Q".into(),
        ));
    }
    if let BaseChoice::Fp(p) = base {
        rec.note(format!(
            "base field F{p}: odd characteristic in place of characteristic zero"
        ));
        let minus_one_square = k_star.from_int(-1).is_square()?;
        rec.note(format!(
            "-1 is {}a square in the base",
            if minus_one_square { "" } else { "not " }
        ));
    }
    let (k0, a1s, a2s) = match opts.specialize {
        Some((x, y)) => (k_star.clone(), x.to_string(), y.to_string()),
        None => (
            k_star.rational_function("a1")?.rational_function("a2")?,
            "a1".to_string(),
            "a2".to_string(),
        ),
    };
    let a1 = k0.parse(&a1s)?;
    let a2 = k0.parse(&a2s)?;
    rec.data("k0", k0.descriptor());
    let triple = match qmt_pure_triple(&k0, &a1, &a2) {
        Ok(t) => t,
        Err(e) => {
            rec.failure(
                "q₃² = a₁((1−a₁)²(1+a₂)² − 4(1−a₁)a₂)",
                format!("a1 = {a1s}, a2 = {a2s}"),
                e,
            );
            return Ok(());
        }
    };
    let label = format!("a1 = {a1s}, a2 = {a2s} over {k0}");
    let target = target_by_parser(&k0, &a1s, &a2s)?;
    let sq = |q: &QuaternionElement| q.pure_square().map_err(err);
    rec.check(
        "q₁² = a₁",
        &label,
        triple.q1.is_pure() && sq(&triple.q1)? == a1,
        triple.q1.to_string(),
    );
    rec.check(
        "q₂² = a₂",
        &label,
        triple.q2.is_pure() && sq(&triple.q2)? == a2,
        triple.q2.to_string(),
    );
    rec.check(
        "q₃² = a₁((1−a₁)²(1+a₂)² − 4(1−a₁)a₂)",
        &label,
        triple.q3.is_pure() && sq(&triple.q3)? == target && triple.a3 == target,
        format!(
            "q₃ = {}, found at stage {} after {} candidates",
            triple.q3, triple.stage, triple.tried
        ),
    );
    rec.data(
        "pure_triple",
        serde_json::json!({
            "q1": triple.q1.to_string(),
            "q2": triple.q2.to_string(),
            "q3": triple.q3.to_string(),
            "a3": triple.a3.to_string(),
            "stage": triple.stage,
            "tried": triple.tried,
        }),
    );
    let q = triple.algebra.clone();
    let mut qs = vec![triple.q1.clone(), triple.q2.clone()];
    qs.extend(std::iter::repeat_n(triple.q3.clone(), n - 2));
    let tower = build_slot_tower(&k0, &q, &qs).map_err(err)?;
    let slots = [a1.clone(), a2.clone(), triple.a3.clone()];
    rec.check(
        "⟨q₁⟩, ⟨q₂⟩ not similar",
        &label,
        !(&a1 / &a2).is_square()?,
        "a₁/a₂ is not a square",
    );
    // Discriminant: (−1)ⁿ Π Nrd(tⱼqⱼ) ≡ a₁a₂a₃ⁿ⁻² mod squares.
    let disc = tower.asig.discriminant().map_err(err)?;
    let expected = (&(&a1 * &a2) * &triple.a3.pow(n as i64 - 2)).lift_to(tower.top())?;
    rec.check(
        "disc ≡ a₁a₂a₃ⁿ⁻²",
        &label,
        (&disc.value / &expected).is_square()?,
        format!(
            "class {}",
            disc.class
                .as_ref()
                .map_or("not computed".to_string(), |c| c.to_string())
        ),
    );
    rec.data("discriminant", disc.value.to_string());
    // Diagonal improper similitudes with explicit entries.
    let reduced: Vec<QuaternionElement> = qs.clone();
    let cands = multiplier_candidates(&k0, &slots, height);
    let improper = diagonal_improper_search(&tower.asig, &reduced, &cands, 1).map_err(err)?;
    let mut improper_mu = None;
    match &improper {
        ImproperSearchOutcome::Found(s) => {
            record_improper(rec, &tower.asig, s, n, &label, "bounded diagonal search");
            improper_mu = Some(s.clone());
        }
        ImproperSearchOutcome::NotFound { reason, candidates } => {
            rec.bump("improper_candidates", *candidates);
            rec.note(format!("no improper similitude within bounds: {reason}"));
            rec.data(
                "improper_search",
                serde_json::json!({"found": false, "reason": reason, "candidates": candidates}),
            );
        }
    }
    if improper_mu.is_none() {
        match k_star.from_int(-1).exact_sqrt() {
            Some(w) => match explicit_improper(&tower, &triple, &w, n) {
                Ok(Some(s)) => {
                    record_improper(rec, &tower.asig, &s, n, &label, "explicit construction with √−1");
                    improper_mu = Some(s);
                }
                Ok(None) => rec.note("explicit construction degenerate: (1−a₂) − a₁(1+a₂) = 0"),
                Err(e) => rec.failure("improper similitude: Nrd(g) = −μⁿ", &label, e),
            },
            None => rec.note("-1 is not a square in the base: no explicit improper similitude"),
        }
    }
    // Common slot over k₀; never certified negative without exhaustion.
    let specs: Vec<Vec<(String, BigRational)>> = if opts.specialize.is_none() && base == BaseChoice::Q {
        vec![vec![
            ("a1".to_string(), BigRational::from_integer(BigInt::from(2))),
            ("a2".to_string(), BigRational::from_integer(BigInt::from(3))),
        ]]
    } else {
        Vec::new()
    };
    match common_slot(&q, &slots, &k0, 2, &specs) {
        Ok(cs) => {
            let honest = match &cs.outcome {
                CommonSlotOutcome::NoneCertified => cs.exhaustive,
                CommonSlotOutcome::Found { .. } => {
                    let mu = cs.found().cloned();
                    match mu {
                        Some(mu) => {
                            let target = algebra_class(&q).map_err(err)?;
                            let mut all = true;
                            for a in &slots {
                                all &= brauer_equal(&symbol_class(a, &mu).map_err(err)?, &target).map_err(err)?;
                            }
                            all
                        }
                        None => false,
                    }
                }
                CommonSlotOutcome::Unknown { .. } => true,
            };
            rec.check(
                "common slot outcome backed by evidence",
                &label,
                honest,
                format!("{:?}, {} trials", cs.outcome, cs.transcript.len()),
            );
            rec.data("common_slot", &cs);
        }
        Err(BrauerError::Inconclusive(what)) => rec.note(format!("common slot inconclusive: {what}")),
        Err(e) => rec.failure("common slot outcome backed by evidence", &label, e),
    }
    // The generic unitary extension F = k(x), K = F(√x), and its completion.
    let f = tower.top().rational_function("x")?;
    let asig_f = tower.asig.extend_to(&f).map_err(err)?;
    let x = f.generator().expect("generator");
    match UnitaryExtension::new(&asig_f, &x) {
        Ok(ext) => {
            let u = ext.u();
            let tu = ext.tau(&u).map_err(err)?;
            let ok = ext.add(&tu, &u) == ext.sub(&u, &u) && ext.mul(&u, &u) == ext.scalar(&x, &f.zero());
            rec.check(
                "generic unitary extension: τ(√x) = −√x, (√x)² = x",
                format!("{f}"),
                ok,
                "",
            );
            if let Some(s) = &improper_mu {
                let g = ext.from_a(&s.g.lift_to(asig_f.algebra()).map_err(err)?);
                let prod = ext.mul(&ext.tau(&g).map_err(err)?, &g);
                let mu = s.mu.lift_to(&f)?;
                rec.check(
                    "improper similitude extends with the same multiplier",
                    format!("{f}"),
                    prod == ext.scalar(&mu, &f.zero()),
                    "",
                );
            }
        }
        Err(e) => rec.failure("generic unitary extension: τ(√x) = −√x, (√x)² = x", format!("{f}"), e),
    }
    let complete = UnitaryExtension::complete(&tower.asig, "x").map_err(err)?;
    rec.check(
        "completion K̂ = F̂(√x) over F̂ = k((x))",
        complete.level().to_string(),
        complete.residue_algebra().map_err(err)?.size() == n,
        "",
    );
    // Membership conclusion, only from an explicit improper similitude.
    match (&improper_mu, q.is_split()) {
        (Some(s), Ok(false)) => {
            rec.check(
                "G(A,σ) ≠ G⁺(A,σ)",
                &label,
                true,
                format!(
                    "μ = {} is the multiplier of an improper similitude and A is not split",
                    s.mu
                ),
            );
            rec.data(
                "membership",
                serde_json::json!({"mu": s.mu.to_string(), "in_G_minus": true, "in_G_plus": false}),
            );
        }
        (Some(_), other) => rec.note(format!(
            "improper similitude found but splitting of A undecided: {other:?}"
        )),
        (None, _) => rec.note("membership conclusion G ≠ G⁺ not drawn: no improper similitude found"),
    }
    Ok(())
}
