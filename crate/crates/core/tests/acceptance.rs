//! Acceptance gate: one PASS/FAIL line per criterion, at the stated sizes and
//! time limits. Criteria run one after another so the timings are honest.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quatinv::brauer::{brauer_equal, hilbert_places, symbol_class, BrauerInvariants, Place};
use quatinv::field::{random_nonzero, FieldElement, FieldTower};
use quatinv::suites::{run_suite, BaseChoice, SuiteOptions, SuiteReport};

const SEED: u64 = 1;

/// Written straight to stdout so the lines survive the test harness capture.
fn line(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
    let _ = out.flush();
}

struct Verdict {
    ok: bool,
    detail: String,
}

impl Verdict {
    fn new() -> Self {
        Verdict {
            ok: true,
            detail: String::new(),
        }
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        if ok {
            self.detail.push_str(&what);
        } else {
            self.ok = false;
            self.detail.push_str(&format!("NOT {what}"));
        }
    }
}

fn run(name: &str, opts: SuiteOptions) -> SuiteReport {
    run_suite(name, &opts).unwrap_or_else(|e| panic!("suite {name} did not run: {e}"))
}

fn opts() -> SuiteOptions {
    SuiteOptions {
        seed: SEED,
        ..SuiteOptions::default()
    }
}

/// All lines under `anchor` pass; returns how many there are.
fn all_pass(r: &SuiteReport, anchor: &str) -> (usize, bool) {
    let lines: Vec<_> = r.lines(anchor).collect();
    (lines.len(), lines.iter().all(|c| c.passed))
}

fn verified(v: &mut Verdict, r: &SuiteReport) {
    let first = r
        .failures()
        .next()
        .map(|c| format!(": [{}] {} {}", c.anchor, c.check, c.detail));
    v.require(
        r.verified,
        format!(
            "{} {}/{} checks{}",
            r.suite,
            r.summary.passed,
            r.summary.checks,
            first.unwrap_or_default()
        ),
    );
}

fn anchored(v: &mut Verdict, r: &SuiteReport, anchor: &str, at_least: usize) -> usize {
    let (n, ok) = all_pass(r, anchor);
    v.require(ok && n >= at_least, format!("{n} x '{anchor}'"));
    n
}

fn criterion_1_and_2_and_3() -> (Verdict, Verdict, Verdict, Duration) {
    let t = Instant::now();
    let r = run("hypcond", opts());
    let elapsed = t.elapsed();
    let instances = r.count("instances");
    let settings: BTreeSet<String> = r
        .lines("e² = e")
        .filter_map(|c| c.check.split(" / ").next().map(str::to_string))
        .collect();

    let mut c1 = Verdict::new();
    verified(&mut c1, &r);
    c1.require(instances >= 50, format!("{instances} instances"));
    c1.require(settings.len() >= 2, format!("{} settings", settings.len()));
    anchored(&mut c1, &r, "e² = e", instances);
    anchored(&mut c1, &r, "τ(e) = 1 − e", instances);
    anchored(&mut c1, &r, "e = ½(1 + s u⁻¹)", instances);
    c1.require(
        elapsed < Duration::from_secs(10),
        format!("{:.1}s < 10s", elapsed.as_secs_f64()),
    );

    let mut c2 = Verdict::new();
    let trips = r.count("round_trips");
    c2.require(
        trips == instances && trips > 0,
        format!("{trips}/{instances} round trips"),
    );
    anchored(&mut c2, &r, "s₀ = e₁e₂⁻¹ is symmetric", trips);
    anchored(&mut c2, &r, "s₀² = a", trips);
    anchored(&mut c2, &r, "s₀ recovers s", trips);

    let mut c3 = Verdict::new();
    let ex = r.count("exceptional");
    c3.require(ex >= 1, format!("{ex} exceptional cases"));
    anchored(&mut c3, &r, "split symplectic exception", ex);
    anchored(&mut c3, &r, "exhaustive height-3 grid", ex);
    (c1, c2, c3, elapsed)
}

// ---------------------------------------------------------------------------
// Hilbert symbols

/// Whether `z² − a x² − b y²` has a nontrivial zero over `ℚ_p`, by brute
/// force: a primitive zero modulo `p^N` with `N = 2 v_p(4ab) + 1` lifts by
/// Hensel's lemma along a unit coordinate, and every `p`-adic zero gives one.
/// `None` when the search would be too large.
fn isotropic_at(a: i64, b: i64, p: i64) -> Option<bool> {
    let vp = |mut n: i64| {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        e
    };
    let n = 2 * vp(4 * a * b) + 1;
    let m = p.checked_pow(n as u32)?;
    if m * m > 2_000_000 {
        return None;
    }
    let f = |x: i64, y: i64, z: i64| ((z * z - a * x * x - b * y * y) % m + m) % m == 0;
    // A primitive vector can be scaled so that a unit coordinate is 1.
    for u in 0..m {
        for w in 0..m {
            if f(1, u, w) || f(u, 1, w) || f(u, w, 1) {
                return Some(true);
            }
        }
    }
    Some(false)
}

fn oracle_places(a: i64, b: i64, primes: &[i64]) -> Option<BTreeSet<Place>> {
    let mut out = BTreeSet::new();
    for &p in primes {
        if !isotropic_at(a, b, p)? {
            out.insert(Place::Prime(BigInt::from(p)));
        }
    }
    if a < 0 && b < 0 {
        out.insert(Place::Infinity);
    }
    Some(out)
}

fn squarefree(n: i64) -> bool {
    n != 0 && (2..=n.abs()).take_while(|d| d * d <= n.abs()).all(|d| n % (d * d) != 0)
}

fn primes_up_to(n: i64) -> Vec<i64> {
    (2..=n)
        .filter(|&k| (2..k).take_while(|d| d * d <= k).all(|d| k % d != 0))
        .collect()
}

struct HilbertTally {
    cases: usize,
    failures: Vec<String>,
    odd_place_counts: usize,
    rational_classes: usize,
}

impl HilbertTally {
    fn fail(&mut self, what: String) {
        if self.failures.len() < 5 {
            self.failures.push(what);
        }
    }
}

fn class_or_fail(t: &mut HilbertTally, a: &FieldElement, b: &FieldElement) -> Option<quatinv::brauer::BrauerClass> {
    match symbol_class(a, b) {
        Ok(c) => {
            if let BrauerInvariants::Places(s) = &c.invariants {
                t.rational_classes += 1;
                if s.len() % 2 == 1 {
                    t.odd_place_counts += 1;
                    t.fail(format!("({a}, {b}) has {} places", s.len()));
                }
            }
            Some(c)
        }
        Err(e) => {
            t.fail(format!("({a}, {b}): {e}"));
            None
        }
    }
}

fn trivial(c: &quatinv::brauer::BrauerClass) -> bool {
    c.exact && c.invariants.is_trivial()
}

fn hilbert_properties(k: &FieldTower, cases: usize, rng: &mut ChaCha8Rng, t: &mut HilbertTally) {
    let one = k.one();
    for _ in 0..cases {
        let a = random_nonzero(k, rng, 4);
        let a2 = random_nonzero(k, rng, 4);
        let b = random_nonzero(k, rng, 4);
        t.cases += 1;
        let (Some(ab), Some(a2b), Some(prod), Some(ba), Some(neg)) = (
            class_or_fail(t, &a, &b),
            class_or_fail(t, &a2, &b),
            class_or_fail(t, &(&a * &a2), &b),
            class_or_fail(t, &b, &a),
            class_or_fail(t, &a, &-&a),
        ) else {
            continue;
        };
        match ab.add(&a2b).and_then(|s| brauer_equal(&s, &prod)) {
            Ok(true) => {}
            other => t.fail(format!("bimultiplicativity at a = {a}, a' = {a2}, b = {b}: {other:?}")),
        }
        if brauer_equal(&ab, &ba) != Ok(true) {
            t.fail(format!("symmetry at ({a}, {b})"));
        }
        if !trivial(&neg) {
            t.fail(format!("(a, −a) nontrivial at a = {a}: {neg}"));
        }
        let c = &one - &a;
        if !c.is_zero() {
            match class_or_fail(t, &a, &c) {
                Some(st) if trivial(&st) => {}
                other => t.fail(format!("Steinberg at a = {a}: {other:?}")),
            }
        }
    }
}

fn criterion_4() -> (Verdict, Duration) {
    let t0 = Instant::now();
    let mut v = Verdict::new();
    let q = FieldTower::rationals();
    let towers = [
        q.clone(),
        q.laurent("t").unwrap(),
        FieldTower::prime_field(5).unwrap().laurent("t").unwrap(),
        FieldTower::prime_field(3)
            .unwrap()
            .laurent("t")
            .unwrap()
            .laurent("u")
            .unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for k in &towers {
        let mut tally = HilbertTally {
            cases: 0,
            failures: Vec::new(),
            odd_place_counts: 0,
            rational_classes: 0,
        };
        hilbert_properties(k, 500, &mut rng, &mut tally);
        v.require(
            tally.failures.is_empty() && tally.cases >= 500,
            format!(
                "{} cases over {k}{}",
                tally.cases,
                tally.failures.first().map(|f| format!(" ({f})")).unwrap_or_default()
            ),
        );
        if k.is_base() {
            v.require(
                tally.odd_place_counts == 0 && tally.rational_classes > 0,
                format!(
                    "{} classes over Q with an even number of places",
                    tally.rational_classes
                ),
            );
        }
    }

    // (−1, −1) over ℚ against the isotropy oracle at every prime up to 50.
    let primes = primes_up_to(50);
    let m1 = q.from_int(-1);
    let engine = symbol_class(&m1, &m1).unwrap();
    let expected: BTreeSet<Place> = [Place::Prime(BigInt::from(2)), Place::Infinity].into_iter().collect();
    let oracle = oracle_places(-1, -1, &primes);
    let engine_places = engine.invariants.base_places().cloned();
    v.require(
        oracle.as_ref() == Some(&expected) && engine_places.as_ref() == Some(&expected),
        "(-1,-1) nontrivial exactly at {2, inf} by engine and isotropy oracle".to_string(),
    );

    // Random squarefree pairs against the oracle at small places.
    let small = [2, 3, 5, 7];
    let mut compared = 0;
    let mut mismatches = Vec::new();
    while compared < 200 {
        let a = rng.gen_range(-30..=30i64);
        let b = rng.gen_range(-30..=30i64);
        if !squarefree(a) || !squarefree(b) {
            continue;
        }
        let engine = hilbert_places(
            &BigRational::from_integer(a.into()),
            &BigRational::from_integer(b.into()),
        );
        for &p in &small {
            let Some(iso) = isotropic_at(a, b, p) else { continue };
            compared += 1;
            let ramified = engine.contains(&Place::Prime(BigInt::from(p)));
            if iso == ramified {
                mismatches.push(format!("({a},{b})_{p}"));
            }
        }
        let real = engine.contains(&Place::Infinity);
        if real != (a < 0 && b < 0) {
            mismatches.push(format!("({a},{b})_inf"));
        }
    }
    v.require(
        mismatches.is_empty(),
        format!("{compared} local symbols match the isotropy oracle {mismatches:?}"),
    );
    let elapsed = t0.elapsed();
    v.require(
        elapsed < Duration::from_secs(60),
        format!("{:.1}s < 60s", elapsed.as_secs_f64()),
    );
    (v, elapsed)
}

// ---------------------------------------------------------------------------

fn criterion_5() -> Verdict {
    let r = run("norms", opts());
    let mut v = Verdict::new();
    verified(&mut v, &r);
    let n = anchored(&mut v, &r, "x ≡ −ū mod L^{×2}", 20);
    v.require(n >= 20, format!("{n} sampled (u, m)"));
    anchored(&mut v, &r, "norms lie in N(K̂/F̂)·{1, −ū}", 1);
    v
}

fn criterion_6() -> Verdict {
    let r = run("multiplier-g", opts());
    let mut v = Verdict::new();
    verified(&mut v, &r);
    let sims = r.count("similitudes");
    v.require(sims >= 100, format!("{sims} similitudes"));
    anchored(&mut v, &r, "σ(a_r)a_r·factor = τ̂(g)g", sims);
    anchored(&mut v, &r, "factor ∈ N(K̂/F̂)", sims);
    v
}

fn criterion_7() -> Verdict {
    let r = run("sim1", opts());
    let mut v = Verdict::new();
    verified(&mut v, &r);
    let levels: Vec<u64> = r
        .data
        .get("ladder")
        .and_then(|l| l.as_array())
        .map(|a| a.iter().filter_map(|x| x["samples"].as_u64()).collect())
        .unwrap_or_default();
    v.require(
        levels.len() == 3 && levels.iter().all(|&s| s >= 1000),
        format!("vectors per level {levels:?}"),
    );
    anchored(&mut v, &r, "ν_W(w) = ½ v(h_W(w, w))", 3);
    let descents = anchored(&mut v, &r, "descent recovers (g, g′, λ₀)", 50);
    let perturbed = r
        .lines("descent recovers (g, g′, λ₀)")
        .filter(|c| !c.check.ends_with("plain"))
        .count();
    v.require(r.count("descents") == descents, format!("{descents} descents"));
    v.require(perturbed > 0, format!("{perturbed} perturbed"));
    v
}

fn criterion_8() -> Verdict {
    let r = run("orth-splus", opts());
    let mut v = Verdict::new();
    verified(&mut v, &r);
    let sims = r.count("census_similitudes");
    v.require(
        sims > 0 && r.count("improper_found") > 0,
        format!("{sims} similitudes, {} improper", r.count("improper_found")),
    );
    anchored(&mut v, &r, "exactly one of Nrd = ±μⁿ", 1);
    anchored(&mut v, &r, "parity matches (δ, μ)", 1);
    anchored(&mut v, &r, "no multiplier class with both parities", 1);
    v
}

fn criterion_9() -> Verdict {
    let r = run("symp-pfaffian", opts());
    let mut v = Verdict::new();
    verified(&mut v, &r);
    anchored(&mut v, &r, "symplectic degree 6", 1);
    let samples = r.count("symmetric_samples");
    v.require(samples >= 100, format!("{samples} symmetric samples"));
    anchored(&mut v, &r, "Prp² = Prd", samples);
    let roots = r.count("symmetric_roots");
    v.require(roots > 0, format!("{roots} symmetric roots"));
    anchored(&mut v, &r, "symmetric square roots have square λ", 1);
    v
}

fn criterion_10() -> (Verdict, Duration) {
    let t = Instant::now();
    let r = run(
        "main",
        SuiteOptions {
            precision: Some(4),
            height: Some(2),
            ..opts()
        },
    );
    let elapsed = t.elapsed();
    let mut v = Verdict::new();
    verified(&mut v, &r);
    v.require(r.contradiction.is_none(), "no contradiction");
    v.require(r.count("none_certified") >= 1, "a NoneCertified instance");
    anchored(&mut v, &r, "no symmetric g with non-square g²", 1);
    v.require(r.count("found") >= 1, "a Found instance");
    anchored(&mut v, &r, "descent chain gᵢqᵢ = −qᵢgᵢ, Q ≃ (aᵢ, λᵢ)", 1);
    v.require(
        elapsed < Duration::from_secs(300),
        format!("{:.1}s < 300s", elapsed.as_secs_f64()),
    );
    (v, elapsed)
}

fn setting(r: &SuiteReport) -> String {
    let base = r.options.base.map_or("Q".to_string(), |b| b.to_string());
    match r.options.specialize {
        Some((a1, a2)) => format!("{base} at a1 = {a1}, a2 = {a2}"),
        None => format!("{base}(a1, a2)"),
    }
}

fn criterion_11() -> Verdict {
    let q3 = "q₃² = a₁((1−a₁)²(1+a₂)² − 4(1−a₁)a₂)";
    let mut v = Verdict::new();
    let symbolic = run("example-main", opts());
    verified(&mut v, &symbolic);
    anchored(&mut v, &symbolic, q3, 1);
    for key in ["k0", "discriminant", "improper_search"] {
        v.require(symbolic.data.contains_key(key), format!("transcript has {key}"));
    }
    let special = run(
        "example-main",
        SuiteOptions {
            specialize: Some((2, 3)),
            ..opts()
        },
    );
    verified(&mut v, &special);
    anchored(&mut v, &special, q3, 1);
    let f5 = run(
        "example-main",
        SuiteOptions {
            base: Some(BaseChoice::Fp(5)),
            ..opts()
        },
    );
    verified(&mut v, &f5);
    for r in [&symbolic, &special, &f5] {
        let found = r.count("improper_found") > 0;
        let (n, ok) = all_pass(r, "G(A,σ) ≠ G⁺(A,σ)");
        // G ≠ G⁺ must be reported exactly when an improper similitude is found.
        v.require(
            ok && (n > 0) == found,
            format!("{}: improper {found}, G ≠ G⁺ {}", setting(r), n > 0),
        );
    }
    v
}

#[test]
fn acceptance() {
    let mut verdicts: Vec<(usize, &str, Verdict)> = Vec::new();
    let (c1, c2, c3, t1) = criterion_1_and_2_and_3();
    line(&format!("hypcond ran in {:.1}s", t1.as_secs_f64()));
    verdicts.push((1, "idempotent construction", c1));
    verdicts.push((2, "embedding round trip", c2));
    verdicts.push((3, "split symplectic exception", c3));
    let (c4, t4) = criterion_4();
    line(&format!("Hilbert symbols ran in {:.1}s", t4.as_secs_f64()));
    verdicts.push((4, "Hilbert symbol engine", c4));
    verdicts.push((5, "norms over ramified extensions", criterion_5()));
    verdicts.push((6, "multiplier decomposition", criterion_6()));
    verdicts.push((7, "norm ladder and descent", criterion_7()));
    verdicts.push((8, "similitude classification", criterion_8()));
    verdicts.push((9, "Pfaffian characteristic polynomial", criterion_9()));
    let (c10, t10) = criterion_10();
    line(&format!("main ran in {:.1}s", t10.as_secs_f64()));
    verdicts.push((10, "common slot against symmetric roots", c10));
    verdicts.push((11, "example pipeline", criterion_11()));
    verdicts.sort_by_key(|(n, _, _)| *n);
    for (n, name, v) in &verdicts {
        line(&format!(
            "{} criterion {n:>2} {name}: {}",
            if v.ok { "PASS" } else { "FAIL" },
            v.detail
        ));
    }
    let failed: Vec<usize> = verdicts.iter().filter(|(_, _, v)| !v.ok).map(|(n, _, _)| *n).collect();
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}

#[test]
fn isotropy_oracle_sanity() {
    // Sums of two squares: −1 is a norm from ℚ_p(i) exactly for p odd.
    assert_eq!(isotropic_at(-1, -1, 3), Some(true));
    assert_eq!(isotropic_at(-1, -1, 2), Some(false));
    assert_eq!(isotropic_at(3, 5, 3), Some(false));
    assert_eq!(isotropic_at(2, 3, 3), Some(false));
    assert_eq!(isotropic_at(1, 7, 7), Some(true));
}
