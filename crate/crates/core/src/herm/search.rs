//! Bounded searches for similitudes and anticommuting square roots.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::field::FieldElement;
use crate::quat::{value_grid, QuaternionAlgebra, QuaternionElement};

use super::{HermError, InvolutionAlgebra, Parity, QMatrix, Similitude};

/// Bounds for the structured searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchBudget {
    /// Height bound for grid coordinates.
    pub height: i64,
    /// Cap on the number of grid quaternions per column.
    pub max_candidates: usize,
    /// Seeded random monomial trials after the grid.
    pub trials: usize,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            height: 1,
            max_candidates: 400,
            trials: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ImproperSearchOutcome {
    Found(Similitude),
    /// Nothing found; `candidates` monomial matrices were examined.
    NotFound {
        reason: String,
        candidates: usize,
    },
}

/// Grid quaternions with at most two nonzero coordinates, by height.
fn quaternion_grid(alg: &QuaternionAlgebra, height: i64, cap: usize) -> Vec<QuaternionElement> {
    let l = alg.level();
    let vals: Vec<(i64, FieldElement)> = value_grid(l, height)
        .into_iter()
        .filter(|(_, v)| !v.is_zero())
        .collect();
    let mut out: Vec<(i64, usize, QuaternionElement)> = Vec::new();
    for t in 0..4 {
        for (h, v) in &vals {
            let mut c = [l.zero(), l.zero(), l.zero(), l.zero()];
            c[t] = v.clone();
            out.push((*h, 1, alg.element(c).expect("same level")));
        }
    }
    for t1 in 0..4 {
        for t2 in t1 + 1..4 {
            for (h1, v1) in &vals {
                for (h2, v2) in &vals {
                    let mut c = [l.zero(), l.zero(), l.zero(), l.zero()];
                    c[t1] = v1.clone();
                    c[t2] = v2.clone();
                    out.push(((*h1).max(*h2), 2, alg.element(c).expect("same level")));
                }
            }
        }
    }
    out.sort_by_key(|(h, nz, _)| (*h, *nz));
    out.truncate(cap);
    out.into_iter().map(|(_, _, q)| q).collect()
}

/// First-hit table of column multipliers `qⱼ⁻¹ c̄ q_r c` for each column `j`
/// sent to row `r`, in grid order.
struct ColumnTable {
    order: Vec<FieldElement>,
    hit: HashMap<FieldElement, QuaternionElement>,
}

fn column_table(asig: &InvolutionAlgebra, grid: &[QuaternionElement], j: usize, r: usize) -> ColumnTable {
    let d = asig.form().entries();
    let dj_inv = d[j].inv().expect("form entries are invertible");
    let mut t = ColumnTable {
        order: Vec::new(),
        hit: HashMap::new(),
    };
    for c in grid {
        let v = &(&(&dj_inv * &c.conj()) * &d[r]) * c;
        let Some(mu) = v.as_scalar() else { continue };
        if mu.is_zero() || t.hit.contains_key(&mu) {
            continue;
        }
        t.order.push(mu.clone());
        t.hit.insert(mu, c.clone());
    }
    t
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                cur.push(k);
                rec(cur, used, out);
                cur.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// `Σ E_{π(j), j} cⱼ`.
fn monomial(alg: &QuaternionAlgebra, perm: &[usize], cols: &[QuaternionElement]) -> QMatrix {
    let mut g = QMatrix::zero(alg, perm.len());
    for (j, c) in cols.iter().enumerate() {
        g.set(perm[j], j, c.clone());
    }
    g
}

/// All monomial similitudes `Σ E_{π(j), j} cⱼ` with grid entries, one per
/// permutation and multiplier value, each verified and classified exactly.
/// Returns the similitudes and the number of candidates examined.
pub fn similitude_census(
    asig: &InvolutionAlgebra,
    budget: &SearchBudget,
) -> Result<(Vec<Similitude>, usize), HermError> {
    if !asig.is_orthogonal() {
        return Err(HermError::SymplecticInput);
    }
    let n = asig.size();
    let alg = asig.algebra();
    let grid = quaternion_grid(alg, budget.height, budget.max_candidates);
    let tables: Vec<Vec<ColumnTable>> = (0..n)
        .map(|j| (0..n).map(|r| column_table(asig, &grid, j, r)).collect())
        .collect();
    let mut found = Vec::new();
    let mut examined = 0usize;
    for perm in permutations(n) {
        let first = &tables[0][perm[0]];
        for mu in &first.order {
            if !(1..n).all(|j| tables[j][perm[j]].hit.contains_key(mu)) {
                continue;
            }
            examined += 1;
            let cols: Vec<QuaternionElement> = (0..n).map(|j| tables[j][perm[j]].hit[mu].clone()).collect();
            let g = monomial(alg, &perm, &cols);
            let s = asig.classify(&g)?;
            if s.mu != *mu {
                return Err(HermError::VerificationFailed(
                    "column multiplier disagrees with σ(g)g".into(),
                ));
            }
            found.push(s);
        }
    }
    Ok((found, examined))
}

/// A verified improper similitude, searched over monomial matrices with
/// grid entries and then over seeded random monomial trials with entries of
/// one larger height. Stops early when the discriminant is a square and `Q`
/// is a division algebra, where no improper similitude exists.
pub fn improper_search(asig: &InvolutionAlgebra, budget: &SearchBudget) -> Result<ImproperSearchOutcome, HermError> {
    let disc = asig.discriminant()?;
    if disc.value.is_square().unwrap_or(false) && asig.algebra().is_split().ok() == Some(false) {
        return Ok(ImproperSearchOutcome::NotFound {
            reason: "square discriminant over a division algebra: improper similitudes would split it".into(),
            candidates: 0,
        });
    }
    let (census, mut examined) = similitude_census(asig, budget)?;
    if let Some(s) = census.into_iter().find(|s| s.parity == Parity::Improper) {
        return Ok(ImproperSearchOutcome::Found(s));
    }
    let n = asig.size();
    let alg = asig.algebra();
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let perms = permutations(n);
    for _ in 0..budget.trials {
        let perm = perms.choose(&mut rng).expect("nonempty").clone();
        let c0 = alg.random(&mut rng, budget.height + 1);
        if c0.nrd().is_zero() {
            continue;
        }
        // Columns after the first are scaled conjugates chosen to match
        // the first column's multiplier when the grid allows it.
        let d = asig.form().entries();
        let v0 = &(&(&d[0].inv()? * &c0.conj()) * &d[perm[0]]) * &c0;
        let Some(mu) = v0.as_scalar() else { continue };
        let mut cols = vec![c0];
        for j in 1..n {
            let cj = alg.random(&mut rng, budget.height + 1);
            let vj = &(&(&d[j].inv()? * &cj.conj()) * &d[perm[j]]) * &cj;
            match vj.as_scalar() {
                Some(m) if m == mu => cols.push(cj),
                _ => break,
            }
        }
        if cols.len() < n {
            continue;
        }
        examined += 1;
        let g = monomial(alg, &perm, &cols);
        let s = asig.classify(&g)?;
        if s.parity == Parity::Improper {
            return Ok(ImproperSearchOutcome::Found(s));
        }
        let _ = rng.gen::<u8>();
    }
    Ok(ImproperSearchOutcome::NotFound {
        reason: format!(
            "monomial grid of height {} ({} quaternions per column) and {} random trials exhausted",
            budget.height, budget.max_candidates, budget.trials
        ),
        candidates: examined,
    })
}

/// A verified improper similitude `diag(c₁, …, c_n)` of a diagonal form
/// whose entries commute with the pure quaternions `reduced[j]`, given over
/// a subfield. For each candidate multiplier `μ` every slot takes either
/// `c = α + βrⱼ` with `Nrd(c) = μ` (then `dⱼ⁻¹c̄dⱼc = μ`) or a pure `c`
/// anticommuting with `rⱼ` and `c² = μ` (then `dⱼ⁻¹c̄dⱼc = c² = μ`).
/// `Nrd(g) = (−1)^m μⁿ` for `m` anticommuting slots, so odd `m` is improper.
pub fn diagonal_improper_search(
    asig: &InvolutionAlgebra,
    reduced: &[QuaternionElement],
    multipliers: &[FieldElement],
    bound: i64,
) -> Result<ImproperSearchOutcome, HermError> {
    let n = asig.size();
    let alg = asig.algebra();
    let d = asig.form().entries();
    if reduced.len() != n {
        return Err(HermError::SizeMismatch);
    }
    for (r, dj) in reduced.iter().zip(d) {
        let rl = r.lift_to(alg)?;
        if !r.is_pure() || r.is_zero() || &rl * dj != dj * &rl {
            return Err(HermError::BadEntry(r.to_string()));
        }
    }
    let mut examined = 0usize;
    for mu in multipliers.iter().filter(|m| !m.is_zero()) {
        let mut options: Vec<(Option<QuaternionElement>, Option<QuaternionElement>)> = Vec::with_capacity(n);
        for r in reduced {
            let level = r.algebra().level();
            let mu = mu.lift_to(level)?;
            let r2 = r.pure_square()?;
            let mut comm = None;
            for (_, beta) in value_grid(level, bound) {
                let rhs = &mu + &(&beta.square() * &r2);
                let alpha = if rhs.is_zero() {
                    rhs
                } else if let Some(a) = rhs.exact_sqrt() {
                    a
                } else {
                    continue;
                };
                let c = &r.algebra().scalar(&alpha) + &r.scale(&beta);
                if !c.is_zero() && c.nrd() == mu {
                    comm = Some(c);
                    break;
                }
            }
            let anti = find_anticommuting_with_square(r, &mu, bound);
            options.push((comm, anti));
        }
        if options.iter().any(|(c, a)| c.is_none() && a.is_none()) {
            continue;
        }
        // Use every available anticommuting slot, then drop one to fix parity.
        let mut anti: Vec<bool> = options.iter().map(|(c, a)| a.is_some() && c.is_none()).collect();
        let free: Vec<usize> = (0..n)
            .filter(|&j| options[j].0.is_some() && options[j].1.is_some())
            .collect();
        let count = anti.iter().filter(|&&b| b).count();
        if count % 2 == 0 {
            match free.first() {
                Some(&j) => anti[j] = true,
                None => continue,
            }
        }
        examined += 1;
        let cols: Vec<QuaternionElement> = (0..n)
            .map(|j| {
                let c = if anti[j] {
                    options[j].1.as_ref()
                } else {
                    options[j].0.as_ref()
                };
                c.expect("chosen option exists").lift_to(alg)
            })
            .collect::<Result<_, _>>()?;
        let s = asig.classify(&QMatrix::diag(alg, &cols))?;
        if s.mu != mu.lift_to(alg.level())? {
            return Err(HermError::VerificationFailed(
                "diagonal multiplier disagrees with σ(g)g".into(),
            ));
        }
        if s.parity == Parity::Improper {
            return Ok(ImproperSearchOutcome::Found(s));
        }
    }
    Ok(ImproperSearchOutcome::NotFound {
        reason: format!(
            "{} multipliers at height {bound} admit no odd anticommuting pattern",
            multipliers.len()
        ),
        candidates: examined,
    })
}

/// A pure `p` with `pq = −qp` and `p² = λ`, for pure invertible `q`. The
/// quaternions anticommuting with `q` are spanned by an orthogonal pair
/// `e₁, e₂ = q e₁`, so `p = s e₁ + t e₂` has `p² = s² e₁² + t² e₂²`; `s`
/// runs over the value grid and `t` is solved exactly.
pub fn find_anticommuting_with_square(
    q: &QuaternionElement,
    lambda: &FieldElement,
    bound: i64,
) -> Option<QuaternionElement> {
    let alg = q.algebra();
    let l = alg.level();
    let lambda = lambda.lift_to(l).ok()?;
    if !q.is_pure() || q.is_zero() || lambda.is_zero() {
        return None;
    }
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
    let s1 = e1.pure_square().ok()?;
    let s2 = e2.pure_square().ok()?;
    if s2.is_zero() {
        return None;
    }
    for (_, s) in value_grid(l, bound) {
        let rhs = &(&lambda - &(&s.square() * &s1)) / &s2;
        let t = if rhs.is_zero() {
            rhs
        } else if let Some(t) = rhs.exact_sqrt() {
            t
        } else {
            continue;
        };
        let p = &e1.scale(&s) + &e2.scale(&t);
        if p.is_zero() {
            continue;
        }
        if (&(&p * q) + &(q * &p)).is_zero() && p.pure_square().ok()? == lambda {
            return Some(p);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldTower;
    use crate::herm::SkewHermitianForm;

    #[test]
    fn improper_for_single_entry() {
        let q = FieldTower::rationals();
        let alg = QuaternionAlgebra::new(&q, &q.from_int(-1), &q.from_int(-3)).unwrap();
        let asig = InvolutionAlgebra::new(SkewHermitianForm::skew_hermitian(&alg, vec![alg.i()]).unwrap()).unwrap();
        let ImproperSearchOutcome::Found(s) = improper_search(&asig, &SearchBudget::default()).unwrap() else {
            panic!("expected an improper similitude");
        };
        assert_eq!(s.parity, Parity::Improper);
        assert!(asig.criterion_holds(&s).unwrap());
    }

    #[test]
    fn square_discriminant_over_division_is_refused() {
        let q = FieldTower::rationals();
        let alg = QuaternionAlgebra::new(&q, &q.from_int(-1), &q.from_int(-1)).unwrap();
        // ⟨i, −i⟩ is hyperbolic: discriminant (−1)²·1·1 = 1.
        let asig =
            InvolutionAlgebra::new(SkewHermitianForm::skew_hermitian(&alg, vec![alg.i(), -&alg.i()]).unwrap()).unwrap();
        let out = improper_search(&asig, &SearchBudget::default()).unwrap();
        assert!(matches!(out, ImproperSearchOutcome::NotFound { candidates: 0, .. }));
    }

    #[test]
    fn hyperbolic_pair_over_split_algebra() {
        let q = FieldTower::rationals();
        let alg = QuaternionAlgebra::new(&q, &q.from_int(1), &q.from_int(3)).unwrap();
        let asig =
            InvolutionAlgebra::new(SkewHermitianForm::skew_hermitian(&alg, vec![alg.j(), -&alg.j()]).unwrap()).unwrap();
        let ImproperSearchOutcome::Found(s) = improper_search(&asig, &SearchBudget::default()).unwrap() else {
            panic!("expected an improper similitude");
        };
        assert_eq!(asig.multiplier(&s.g).unwrap(), s.mu);
        assert_eq!(asig.reduced_norm(&s.g).unwrap(), -&s.mu.pow(2));
    }

    #[test]
    fn diagonal_improper_patterns() {
        let q = FieldTower::rationals();
        let alg = QuaternionAlgebra::new(&q, &q.from_int(-1), &q.from_int(-3)).unwrap();
        let asig = InvolutionAlgebra::new(SkewHermitianForm::skew_hermitian(&alg, vec![alg.i()]).unwrap()).unwrap();
        let mus: Vec<FieldElement> = value_grid(&q, 3).into_iter().map(|(_, v)| v).collect();
        let ImproperSearchOutcome::Found(s) = diagonal_improper_search(&asig, &[alg.i()], &mus, 2).unwrap() else {
            panic!("expected an improper similitude");
        };
        assert_eq!(asig.reduced_norm(&s.g).unwrap(), -&s.mu);
        assert!(asig.criterion_holds(&s).unwrap());
        // ⟨i, −i⟩ over a division algebra has square discriminant.
        let hyp =
            InvolutionAlgebra::new(SkewHermitianForm::skew_hermitian(&alg, vec![alg.i(), -&alg.i()]).unwrap()).unwrap();
        let out = diagonal_improper_search(&hyp, &[alg.i(), alg.i()], &mus, 2).unwrap();
        assert!(matches!(out, ImproperSearchOutcome::NotFound { .. }));
    }

    #[test]
    fn anticommuting_roots() {
        let q = FieldTower::rationals();
        let alg = QuaternionAlgebra::new(&q, &q.from_int(2), &q.from_int(5)).unwrap();
        let p = find_anticommuting_with_square(&alg.j(), &q.from_int(2), 2).unwrap();
        assert_eq!(p.pure_square().unwrap(), q.from_int(2));
        assert!((&(&p * &alg.j()) + &(&alg.j() * &p)).is_zero());
        let r = find_anticommuting_with_square(&(&alg.i() + &alg.j()), &q.from_ratio(14, 5), 2).unwrap();
        assert_eq!(r.pure_square().unwrap(), q.from_ratio(14, 5));
    }
}
