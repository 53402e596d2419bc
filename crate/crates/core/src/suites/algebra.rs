//! Suites on `(M_n(Q), σ)` itself: Pfaffians of symmetric elements under
//! symplectic involutions, and parities of similitudes and symmetric
//! square roots under orthogonal ones.

use crate::brauer::symbol_class;
use crate::field::{quad_norm, FieldElement, FieldTower};
use crate::herm::{
    find_anticommuting_with_square, similitude_census, InvolutionAlgebra, Parity, Polynomial, QMatrix, SearchBudget,
    SkewHermitianForm,
};
use crate::quat::{value_grid, QuaternionAlgebra, QuaternionElement};
use crate::unitary::{hyperbolicity_check, symmetric_basis, HyperbolicityOutcome};

use super::{Recorder, SuiteError, SuiteOptions};

fn err(e: impl std::fmt::Display) -> SuiteError {
    SuiteError::Computation(e.to_string())
}

fn hermitian(alg: &QuaternionAlgebra, scalars: &[i64]) -> Result<InvolutionAlgebra, SuiteError> {
    let l = alg.level();
    let c: Vec<FieldElement> = scalars.iter().map(|&x| l.from_int(x)).collect();
    InvolutionAlgebra::new(SkewHermitianForm::hermitian(alg, &c).map_err(err)?).map_err(err)
}

fn skew(alg: &QuaternionAlgebra, entries: Vec<QuaternionElement>) -> Result<InvolutionAlgebra, SuiteError> {
    InvolutionAlgebra::new(SkewHermitianForm::skew_hermitian(alg, entries).map_err(err)?).map_err(err)
}

/// `p(g) = Σ cₖ gᵏ`.
fn eval_at_matrix(p: &Polynomial, g: &QMatrix) -> QMatrix {
    let alg = g.algebra();
    let mut acc = QMatrix::zero(alg, g.size());
    for c in p.coeffs().iter().rev() {
        acc = &(&acc * g) + &QMatrix::scalar(alg, g.size(), c);
    }
    acc
}

/// `Σ Trd(gᵢᵢ)`.
fn reduced_trace(g: &QMatrix) -> FieldElement {
    let mut t = g.level().zero();
    for i in 0..g.size() {
        t = &t + &g.get(i, i).trd();
    }
    t
}

/// Symmetric elements of a degree-6 symplectic algebra: `Prp² = Prd`, and
/// every symmetric square root of a scalar squares to a square.
pub(crate) fn symp_pfaffian(opts: &SuiteOptions, rec: &mut Recorder) -> Result<(), SuiteError> {
    let samples = opts.trials.unwrap_or(100);
    let height = opts.height.unwrap_or(2);
    let mut rng = opts.rng(5);
    let q = FieldTower::rationals();
    let alg = QuaternionAlgebra::new(&q, &q.from_int(-1), &q.from_int(-1)).map_err(err)?;
    let asig = hermitian(&alg, &[1, 2, 5])?;
    rec.check(
        "symplectic degree 6",
        "hermitian <1,2,5> over (-1,-1)",
        !asig.is_orthogonal() && asig.degree() == 6,
        "",
    );
    for k in 0..samples {
        let g = asig.random_symmetric(&mut rng, height).map_err(err)?;
        let label = format!("random symmetric #{k}");
        let (prp, prd) = match (asig.pfaffian_charpoly(&g), asig.reduced_charpoly(&g)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                rec.failure("Prp² = Prd", &label, e);
                continue;
            }
        };
        rec.bump("symmetric_samples", 1);
        rec.check(
            "Prp² = Prd",
            &label,
            prp.mul(&prp) == prd && prp.degree() == Some(3),
            format!("Prp = {prp}"),
        );
        // Independent: Prp(g) = 0 and the X² coefficient is −Trd(g)/2.
        let kills = eval_at_matrix(&prp, &g).is_zero();
        let trace_ok =
            prp.coeffs().get(2).cloned().unwrap_or_else(|| q.zero()) == -&(&reduced_trace(&g) / &q.from_int(2));
        rec.check("Prp(g) = 0 and Trp = Trd/2", &label, kills && trace_ok, "");
    }
    // Structured roots on ⟨1,1,1⟩: [[0,x,0],[x̄,0,0],[0,0,c]] with c² = Nrd(x).
    let unit = hermitian(&alg, &[1, 1, 1])?;
    let grid: Vec<FieldElement> = (-2..=2).map(|v| q.from_int(v)).collect();
    let mut roots = 0usize;
    let mut nonsquare = Vec::new();
    for a in &grid {
        for b in &grid {
            for c in &grid {
                for d in &grid {
                    let x = alg.element([a.clone(), b.clone(), c.clone(), d.clone()]).map_err(err)?;
                    let n = x.nrd();
                    let Some(r) = n.exact_sqrt().filter(|_| !n.is_zero()) else {
                        continue;
                    };
                    let mut s = QMatrix::zero(&alg, 3);
                    s.set(0, 1, x.clone());
                    s.set(1, 0, x.conj());
                    s.set(2, 2, alg.scalar(&r));
                    if !unit.is_symmetric(&s).map_err(err)? {
                        rec.check("structured root is symmetric", format!("x = {x}"), false, "");
                        continue;
                    }
                    let Some(lam) = (&s * &s).as_scalar() else { continue };
                    roots += 1;
                    if !lam.is_square().map_err(err)? {
                        nonsquare.push(lam.to_string());
                    }
                }
            }
        }
    }
    // Pairs of basis elements with small coefficients.
    let basis = symmetric_basis(&unit).map_err(err)?;
    let coeffs: Vec<FieldElement> = [1, -1, 2, -2, 3].iter().map(|&v| q.from_int(v)).collect();
    for i in 0..basis.len() {
        for j in i..basis.len() {
            for ci in &coeffs {
                for cj in &coeffs {
                    let s = if i == j {
                        basis[i].scale(ci)
                    } else {
                        &basis[i].scale(ci) + &basis[j].scale(cj)
                    };
                    let Some(lam) = (&s * &s).as_scalar() else { continue };
                    if lam.is_zero() {
                        continue;
                    }
                    roots += 1;
                    if !lam.is_square().map_err(err)? {
                        nonsquare.push(lam.to_string());
                    }
                }
            }
        }
    }
    rec.bump("symmetric_roots", roots);
    rec.check(
        "symmetric square roots have square λ",
        "structured and basis-pair roots on <1,1,1>",
        roots > 0 && nonsquare.is_empty(),
        format!("{roots} roots, non-square λ: {nonsquare:?}"),
    );
    Ok(())
}

fn square_class_differs(a: &FieldElement, b: &FieldElement) -> Result<bool, SuiteError> {
    Ok(!(a / b).is_square().map_err(err)?)
}

/// Orthogonal involutions: symmetric square roots are proper, every found
/// similitude has a single parity matching the `(δ, μ)` criterion, and norms
/// of multipliers from a quadratic extension land in `G⁺`.
pub(crate) fn orth_splus(opts: &SuiteOptions, rec: &mut Recorder) -> Result<(), SuiteError> {
    let height = opts.height.unwrap_or(3);
    let q = FieldTower::rationals();
    let alg = |a: i64, b: i64| QuaternionAlgebra::new(&q, &q.from_int(a), &q.from_int(b)).map_err(err);
    // Symmetric square roots in degree 4.
    let q13 = alg(-1, -3)?;
    let q11 = alg(-1, -1)?;
    let q25 = alg(2, 5)?;
    let deg4 = vec![
        ("(-1,-3) <i, j>", skew(&q13, vec![q13.i(), q13.j()])?),
        ("(-1,-1) <i, -j>", skew(&q11, vec![q11.i(), -&q11.j()])?),
        (
            "(2,5) <j, 2j>",
            skew(&q25, vec![q25.j(), q25.j().scale(&q.from_int(2))])?,
        ),
    ];
    for (label, asig) in &deg4 {
        let entries = asig.form().entries().to_vec();
        let mut found = 0;
        for (_, lam) in value_grid(&q, height) {
            if lam.is_zero() {
                continue;
            }
            let roots: Option<Vec<QuaternionElement>> = entries
                .iter()
                .map(|d| find_anticommuting_with_square(d, &lam, 2))
                .collect();
            let Some(roots) = roots else { continue };
            found += 1;
            let g = QMatrix::diag(asig.algebra(), &roots);
            let inst = format!("{label}, λ = {lam}");
            match asig.classify(&g) {
                Ok(s) => {
                    let nrd = asig.reduced_norm(&g).map_err(err)?;
                    rec.check(
                        "symmetric root is proper",
                        &inst,
                        s.parity == Parity::Proper && s.mu == lam && nrd == lam.square(),
                        format!("Nrd(g) = {nrd} = (−λ)²"),
                    );
                    rec.check(
                        "multiplier criterion",
                        &inst,
                        asig.criterion_holds(&s).map_err(err)?,
                        "(δ, λ) split",
                    );
                }
                Err(e) => rec.failure("symmetric root is proper", &inst, e),
            }
        }
        rec.bump("symmetric_roots", found);
    }
    // Hyperbolic witnesses are symmetric roots too.
    for (a, b) in [(-1, -3), (2, 5)] {
        let qa = alg(a, b)?;
        let asig = skew(&qa, vec![qa.i(), -&qa.i()])?;
        for lam in [2, 3, -5, 7] {
            let lam = q.from_int(lam);
            let inst = format!("({a},{b}) <i, -i>, λ = {lam}");
            if let Ok(HyperbolicityOutcome::Hyperbolic { witness, .. }) = hyperbolicity_check(&asig, &lam, 2, 1) {
                rec.bump("symmetric_roots", 1);
                let s = asig.classify(&witness).map_err(err)?;
                rec.check(
                    "symmetric root is proper",
                    &inst,
                    s.parity == Parity::Proper,
                    "hyperbolic witness",
                );
            }
        }
    }
    // Census: one parity per similitude, criterion, disjointness over division Q.
    let budget = SearchBudget {
        height: 1,
        max_candidates: 200,
        trials: 0,
        seed: opts.seed,
    };
    let q13b = alg(-1, -3)?;
    let q11b = alg(-1, -1)?;
    let split = alg(1, 3)?;
    let census_forms = vec![
        ("(-1,-3) <i>", skew(&q13b, vec![q13b.i()])?, true),
        ("(-1,-3) <i, j>", skew(&q13b, vec![q13b.i(), q13b.j()])?, true),
        ("(-1,-1) <i, j>", skew(&q11b, vec![q11b.i(), q11b.j()])?, true),
        (
            "(2,5) <j, 2j>",
            skew(&q25, vec![q25.j(), q25.j().scale(&q.from_int(2))])?,
            true,
        ),
        ("(1,3) <j, -j>", skew(&split, vec![split.j(), -&split.j()])?, false),
    ];
    for (label, asig, division) in &census_forms {
        let (sims, examined) = similitude_census(asig, &budget).map_err(err)?;
        rec.bump("census_similitudes", sims.len());
        rec.bump("census_examined", examined);
        let n = asig.size() as i64;
        let mut exactly_one = 0;
        let mut criterion = 0;
        let mut proper_mus = Vec::new();
        let mut improper_mus = Vec::new();
        for s in &sims {
            let nrd = asig.reduced_norm(&s.g).map_err(err)?;
            let mun = s.mu.pow(n);
            let plus = nrd == mun;
            let minus = nrd == -&mun;
            if plus != minus && plus == (s.parity == Parity::Proper) {
                exactly_one += 1;
            }
            if asig.criterion_holds(s).map_err(err)? {
                criterion += 1;
            }
            match s.parity {
                Parity::Proper => proper_mus.push(s.mu.clone()),
                Parity::Improper => improper_mus.push(s.mu.clone()),
            }
        }
        rec.bump("improper_found", improper_mus.len());
        rec.check(
            "exactly one of Nrd = ±μⁿ",
            *label,
            exactly_one == sims.len() && !sims.is_empty(),
            format!("{exactly_one}/{} similitudes", sims.len()),
        );
        rec.check(
            "parity matches (δ, μ)",
            *label,
            criterion == sims.len(),
            format!("{criterion}/{} similitudes", sims.len()),
        );
        if *division {
            let mut clash = None;
            'outer: for a in &improper_mus {
                for b in &proper_mus {
                    if !square_class_differs(a, b)? {
                        clash = Some(format!("{a} ~ {b}"));
                        break 'outer;
                    }
                }
            }
            rec.check(
                "no multiplier class with both parities",
                *label,
                clash.is_none(),
                format!(
                    "{} proper, {} improper; {}",
                    proper_mus.len(),
                    improper_mus.len(),
                    clash.unwrap_or_default()
                ),
            );
        }
    }
    // Norms from ℓ = ℚ(√5): N(μ) ∈ G⁺ over ℚ, i.e. (δ, N(μ)) splits.
    let ell = q.quadratic("r5", &q.from_int(5))?;
    let base_asig = skew(&q13b, vec![q13b.i()])?;
    let delta = base_asig.discriminant().map_err(err)?.value;
    let ql = q13b.extend_to(&ell).map_err(err)?;
    let asig_l = skew(&ql, vec![ql.i()])?;
    let small = SearchBudget {
        height: 1,
        max_candidates: 80,
        trials: 0,
        seed: opts.seed,
    };
    let (sims, _) = similitude_census(&asig_l, &small).map_err(err)?;
    let mut ok = 0;
    for s in &sims {
        let nm = quad_norm(&ell, &s.mu).map_err(err)?;
        if symbol_class(&delta, &nm).map_err(err)?.is_split().map_err(err)? {
            ok += 1;
        }
    }
    rec.bump("norm_multipliers", sims.len());
    rec.check(
        "N(μ) ∈ G⁺ for even degree",
        "(-1,-3) <i> over Q(sqrt 5)",
        !sims.is_empty() && ok == sims.len(),
        format!("{ok}/{} norms with (δ, N(μ)) split", sims.len()),
    );
    Ok(())
}
