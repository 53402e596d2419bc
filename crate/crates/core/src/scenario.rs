//! JSON scenarios: a tower, a quaternion algebra, one construction on it,
//! and the checks to run.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldElement, FieldTower, TowerDescriptor};
use crate::herm::{
    improper_search, similitude_census, ImproperSearchOutcome, InvolutionAlgebra, Parity, SearchBudget,
    SkewHermitianForm,
};
use crate::quat::{QuaternionAlgebra, QuaternionElement};
use crate::suites::{Recorder, SuiteOptions, SuiteReport, SUITES};
use crate::tower_forms::{build_slot_tower, ladder_evidence, theorem_main_check, MainBounds, SlotTower, TowerError};
use crate::unitary::{hyperbolicity_check, HyperbolicityOutcome, UnitaryExtension};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(String),
    #[error("scenario does not parse: {0}")]
    ParseError(String),
    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),
}

/// A quaternion by name (`"i"`, `"-j"`, `"ij"`, `"1"`) or by coordinates
/// on `1, i, j, ij` as expressions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QuatSpec {
    Named(String),
    Coords([String; 4]),
}

impl QuatSpec {
    fn build(&self, alg: &QuaternionAlgebra) -> Result<QuaternionElement, ScenarioError> {
        match self {
            QuatSpec::Coords(c) => alg
                .parse_coords([&c[0], &c[1], &c[2], &c[3]])
                .map_err(|e| ScenarioError::ParseError(e.to_string())),
            QuatSpec::Named(name) => {
                let (neg, core) = match name.strip_prefix('-') {
                    Some(rest) => (true, rest),
                    None => (false, name.as_str()),
                };
                let q = match core {
                    "1" => alg.one(),
                    "i" => alg.i(),
                    "j" => alg.j(),
                    "ij" => alg.ij(),
                    other => return Err(ScenarioError::ParseError(format!("unknown quaternion {other:?}"))),
                };
                Ok(if neg { -&q } else { q })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormSpecKind {
    SkewHermitian,
    Hermitian,
}

/// A diagonal form: pure quaternions for skew-hermitian, scalar expressions
/// for hermitian.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormSpec {
    pub kind: FormSpecKind,
    pub entries: Vec<QuatSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Construction {
    /// `⟨t₁q₁, …, t_nq_n⟩` over `k₀((t₁))…((t_n))`, `k₀` the scenario tower.
    SlotTower {
        pure: Vec<QuatSpec>,
    },
    CustomForm {
        form: FormSpec,
    },
    /// `(A, σ) ⊗ (K, ι)` with `K = F(√a)`.
    UnitaryExtension {
        form: FormSpec,
        a: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    #[serde(default = "default_precision")]
    pub precision: i64,
    #[serde(default = "default_height")]
    pub height: i64,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

fn default_precision() -> i64 {
    4
}
fn default_height() -> i64 {
    2
}
fn default_trials() -> usize {
    200
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            precision: default_precision(),
            height: default_height(),
            trials: default_trials(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub tower: TowerDescriptor,
    /// `(a, b)` as expressions over the tower.
    pub algebra: [String; 2],
    pub construction: Construction,
    pub suites: Vec<String>,
    #[serde(default)]
    pub bounds: Bounds,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Checks run on the scenario's own construction.
pub const CONSTRUCTION_CHECKS: [&str; 8] = [
    "norm-identity",
    "theorem-main",
    "discriminant",
    "census",
    "improper-search",
    "pfaffian",
    "hyperbolicity",
    "common-slot",
];

const RANDOMIZED: [&str; 2] = ["norm-identity", "pfaffian"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub tower: String,
    pub algebra: String,
    pub construction: Construction,
    pub seed: Option<u64>,
    pub reports: Vec<SuiteReport>,
    pub verified: bool,
    pub contradiction: bool,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let mut s: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::ParseError(e.to_string()))?;
        for name in &mut s.suites {
            *name = name.replace('_', "-");
        }
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io(e.to_string()))?;
        Scenario::from_json(&text)
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let b = &self.bounds;
        if b.precision <= 0 || b.height <= 0 || b.trials == 0 {
            return Err(ScenarioError::ParseError("bounds must be positive".into()));
        }
        if self.suites.is_empty() {
            return Err(ScenarioError::ParseError("no suites selected".into()));
        }
        for s in &self.suites {
            let known = CONSTRUCTION_CHECKS.contains(&s.as_str()) || SUITES.contains(&s.as_str());
            if !known {
                return Err(ScenarioError::ParseError(format!("unknown suite {s:?}")));
            }
            let randomized = RANDOMIZED.contains(&s.as_str()) || SUITES.contains(&s.as_str());
            if randomized && self.seed.is_none() {
                return Err(ScenarioError::ParseError(format!(
                    "suite {s:?} is randomized and needs a seed"
                )));
            }
        }
        Ok(())
    }
}

struct Built {
    alg: QuaternionAlgebra,
    tower: Option<SlotTower>,
    asig: Option<InvolutionAlgebra>,
    ext: Option<UnitaryExtension>,
}

fn unsupported(what: impl Into<String>) -> ScenarioError {
    ScenarioError::UnsupportedCombination(what.into())
}

fn build_form(alg: &QuaternionAlgebra, spec: &FormSpec) -> Result<InvolutionAlgebra, ScenarioError> {
    let form = match spec.kind {
        FormSpecKind::SkewHermitian => {
            let entries = spec
                .entries
                .iter()
                .map(|e| e.build(alg))
                .collect::<Result<Vec<_>, _>>()?;
            SkewHermitianForm::skew_hermitian(alg, entries)
        }
        FormSpecKind::Hermitian => {
            let scalars = spec
                .entries
                .iter()
                .map(|e| match e {
                    QuatSpec::Named(text) => alg
                        .level()
                        .parse(text)
                        .map_err(|e| ScenarioError::ParseError(e.to_string())),
                    QuatSpec::Coords(_) => Err(ScenarioError::ParseError("hermitian entries are scalars".into())),
                })
                .collect::<Result<Vec<FieldElement>, _>>()?;
            SkewHermitianForm::hermitian(alg, &scalars)
        }
    }
    .map_err(|e| unsupported(e.to_string()))?;
    InvolutionAlgebra::new(form).map_err(|e| unsupported(e.to_string()))
}

fn build(s: &Scenario) -> Result<Built, ScenarioError> {
    let k = FieldTower::from_descriptor(&s.tower).map_err(|e| ScenarioError::ParseError(e.to_string()))?;
    let parse = |t: &str| k.parse(t).map_err(|e| ScenarioError::ParseError(e.to_string()));
    let alg = QuaternionAlgebra::new(&k, &parse(&s.algebra[0])?, &parse(&s.algebra[1])?)
        .map_err(|e| unsupported(e.to_string()))?;
    let mut built = Built {
        alg: alg.clone(),
        tower: None,
        asig: None,
        ext: None,
    };
    match &s.construction {
        Construction::SlotTower { pure } => {
            let qs = pure.iter().map(|p| p.build(&alg)).collect::<Result<Vec<_>, _>>()?;
            let tower = build_slot_tower(&k, &alg, &qs).map_err(|e| unsupported(e.to_string()))?;
            built.asig = Some(tower.asig.clone());
            built.tower = Some(tower);
        }
        Construction::CustomForm { form } => built.asig = Some(build_form(&alg, form)?),
        Construction::UnitaryExtension { form, a } => {
            let asig = build_form(&alg, form)?;
            let ext = UnitaryExtension::new(&asig, &parse(a)?).map_err(|e| unsupported(e.to_string()))?;
            built.asig = Some(asig);
            built.ext = Some(ext);
        }
    }
    Ok(built)
}

fn run_check(name: &str, s: &Scenario, b: &Built, rec: &mut Recorder) -> Result<(), ScenarioError> {
    let seed = s.seed.unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let asig = b.asig.as_ref().expect("every construction yields an involution");
    let need_tower = || {
        b.tower
            .as_ref()
            .ok_or_else(|| unsupported(format!("{name} needs a slot-tower construction")))
    };
    let budget = SearchBudget {
        height: s.bounds.height.min(2),
        max_candidates: 400,
        trials: s.bounds.trials,
        seed,
    };
    match name {
        "norm-identity" => {
            let tower = need_tower()?;
            match ladder_evidence(tower, s.bounds.trials, s.bounds.height, &mut rng) {
                Ok(reports) => {
                    for r in &reports {
                        rec.bump("samples", r.samples);
                        rec.check(
                            "ν_W(w) = ½ v(h_W(w, w))",
                            &r.level,
                            r.all_hold(),
                            format!(
                                "{}/{} vectors, {}/{} pairs",
                                r.identity_holds, r.samples, r.compat_holds, r.compat_checked
                            ),
                        );
                    }
                    rec.data("ladder", &reports);
                }
                Err(e) => rec.failure("ν_W(w) = ½ v(h_W(w, w))", "ladder", e),
            }
        }
        "theorem-main" => {
            let tower = need_tower()?;
            let bounds = MainBounds {
                precision: s.bounds.precision,
                height: s.bounds.height,
                slot_bound: s.bounds.height,
            };
            match theorem_main_check(tower, &bounds) {
                Ok(rep) => {
                    rec.check(
                        "common slot against symmetric roots",
                        rep.common_slot.clone(),
                        rep.consistent,
                        format!(
                            "{} candidates, witness {:?}, {} descent stages",
                            rep.candidates,
                            rep.witness_lambda,
                            rep.descent.len()
                        ),
                    );
                    for st in &rep.descent {
                        rec.check(
                            "gᵢqᵢ = −qᵢgᵢ and Q ≃ (aᵢ, λᵢ)",
                            &st.level,
                            st.anticommutes && st.symbol_matches,
                            format!("λ = {}", st.lambda),
                        );
                    }
                    rec.data("theorem_main", &rep);
                }
                Err(TowerError::ContradictionFound(what)) => rec.contradiction(what),
                Err(e) => rec.failure("common slot against symmetric roots", "theorem-main", e),
            }
        }
        "discriminant" => {
            if !asig.is_orthogonal() {
                return Err(unsupported("discriminant needs an orthogonal involution"));
            }
            match (
                asig.discriminant(),
                asig.discriminant_from_skew(&mut rng, s.bounds.height),
            ) {
                (Ok(d), Ok((_, v))) => {
                    let agree = (&d.value / &v).is_square().unwrap_or(false);
                    rec.check(
                        "disc = (−1)ⁿ Nrd(Gram) ≡ (−1)ⁿ Nrd(skew)",
                        asig.level().to_string(),
                        agree,
                        format!("{} ~ {}", d.value, v),
                    );
                    rec.data("discriminant", d.value.to_string());
                }
                (Err(e), _) | (_, Err(e)) => rec.failure("disc = (−1)ⁿ Nrd(Gram) ≡ (−1)ⁿ Nrd(skew)", "discriminant", e),
            }
        }
        "census" => {
            if !asig.is_orthogonal() {
                return Err(unsupported("census needs an orthogonal involution"));
            }
            match similitude_census(asig, &budget) {
                Ok((sims, examined)) => {
                    rec.bump("similitudes", sims.len());
                    rec.bump("examined", examined);
                    for sim in &sims {
                        let ok = asig.criterion_holds(sim);
                        let label = format!("μ = {}", sim.mu);
                        match ok {
                            Ok(v) => rec.check("parity matches (δ, μ)", label, v, format!("{:?}", sim.parity)),
                            Err(e) => {
                                rec.note(format!("{label}: criterion undecided: {e}"));
                                true
                            }
                        };
                    }
                    let improper = sims.iter().filter(|x| x.parity == Parity::Improper).count();
                    rec.note(format!("{} similitudes, {improper} improper", sims.len()));
                }
                Err(e) => rec.failure("parity matches (δ, μ)", "census", e),
            }
        }
        "improper-search" => {
            if !asig.is_orthogonal() {
                return Err(unsupported("improper-search needs an orthogonal involution"));
            }
            match improper_search(asig, &budget) {
                Ok(ImproperSearchOutcome::Found(sim)) => {
                    let nrd = asig.reduced_norm(&sim.g).map(|n| n == -&sim.mu.pow(asig.size() as i64));
                    rec.check(
                        "improper similitude: Nrd(g) = −μⁿ",
                        format!("μ = {}", sim.mu),
                        nrd == Ok(true),
                        sim.g.to_string(),
                    );
                }
                Ok(ImproperSearchOutcome::NotFound { reason, candidates }) => {
                    rec.bump("candidates", candidates);
                    rec.note(format!("no improper similitude found: {reason}"));
                }
                Err(e) => rec.failure("improper similitude: Nrd(g) = −μⁿ", "improper-search", e),
            }
        }
        "pfaffian" => {
            if asig.is_orthogonal() {
                return Err(unsupported("pfaffian needs a symplectic involution"));
            }
            for k in 0..s.bounds.trials {
                let label = format!("random symmetric #{k}");
                let out = asig
                    .random_symmetric(&mut rng, s.bounds.height)
                    .and_then(|g| Ok((asig.pfaffian_charpoly(&g)?, asig.reduced_charpoly(&g)?)));
                match out {
                    Ok((prp, prd)) => {
                        rec.check("Prp² = Prd", label, prp.mul(&prp) == prd, "");
                    }
                    Err(e) => rec.failure("Prp² = Prd", label, e),
                }
            }
        }
        "hyperbolicity" => {
            let ext = b
                .ext
                .as_ref()
                .ok_or_else(|| unsupported("hyperbolicity needs a unitary-extension construction"))?;
            match hyperbolicity_check(asig, ext.radicand(), s.bounds.height, s.bounds.height.min(3)) {
                Ok(HyperbolicityOutcome::Hyperbolic { witness, idempotent }) => {
                    for c in &idempotent.transcript {
                        rec.check(&c.identity, "idempotent from the witness", c.residual_zero, "");
                    }
                    match ext.embedding_from_idempotent(&idempotent.e) {
                        Ok(emb) => {
                            for c in &emb.transcript {
                                rec.check(&c.identity, "embedding from the idempotent", c.residual_zero, "");
                            }
                            rec.check("s₀ recovers s", "round trip", emb.s0 == witness, "");
                        }
                        Err(e) => rec.failure("s₀ recovers s", "round trip", e),
                    }
                    rec.data("witness", witness.to_string());
                    rec.data("idempotent", format!("{} + ({})u", idempotent.e.b0, idempotent.e.b1));
                }
                Ok(HyperbolicityOutcome::ExceptionalCase(ev)) => {
                    rec.check(
                        "split symplectic exception",
                        "hyperbolicity",
                        ev.odd_degree && ev.no_root,
                        format!("{ev:?}"),
                    );
                }
                Ok(HyperbolicityOutcome::NotFoundWithinBound { bound }) => {
                    rec.note(format!("no symmetric square root of a within height {bound}"));
                }
                Err(e) => rec.failure("hyperbolic witness", "hyperbolicity", e),
            }
        }
        "common-slot" => {
            let tower = need_tower()?;
            let slots = tower.slots().map_err(|e| unsupported(e.to_string()))?;
            match crate::brauer::common_slot(&b.alg, &slots, &tower.k0, s.bounds.height, &[]) {
                Ok(cs) => {
                    let honest =
                        !matches!(cs.outcome, crate::brauer::CommonSlotOutcome::NoneCertified) || cs.exhaustive;
                    rec.check(
                        "common slot outcome backed by evidence",
                        format!("{:?}", cs.outcome),
                        honest,
                        "",
                    );
                    rec.data("common_slot", &cs);
                }
                Err(e) => rec.failure("common slot outcome backed by evidence", "common-slot", e),
            }
        }
        _ => unreachable!("validated"),
    }
    Ok(())
}

/// Builds the construction and runs every selected suite on it. Library
/// suites run with the scenario's seed and bounds.
pub fn run_scenario(s: &Scenario, parallel: bool) -> Result<ScenarioReport, ScenarioError> {
    let built = build(s)?;
    let options = SuiteOptions {
        seed: s.seed.unwrap_or(0),
        precision: Some(s.bounds.precision),
        height: Some(s.bounds.height),
        ..SuiteOptions::default()
    };
    let mut reports = Vec::new();
    let library: Vec<String> = s
        .suites
        .iter()
        .filter(|n| SUITES.contains(&n.as_str()))
        .cloned()
        .collect();
    for name in s.suites.iter().filter(|n| !SUITES.contains(&n.as_str())) {
        let mut rec = Recorder::new();
        run_check(name, s, &built, &mut rec)?;
        reports.push(rec.finish(name, &options));
    }
    for r in crate::suites::run_suites(&library, &options, parallel) {
        reports.push(r.map_err(|e| unsupported(e.to_string()))?);
    }
    let verified = reports.iter().all(|r| r.verified);
    let contradiction = reports.iter().any(|r| r.contradiction.is_some());
    Ok(ScenarioReport {
        tower: FieldTower::from_descriptor(&s.tower)
            .map(|t| t.to_string())
            .unwrap_or_default(),
        algebra: built.alg.to_string(),
        construction: s.construction.clone(),
        seed: s.seed,
        reports,
        verified,
        contradiction,
    })
}

/// Exit status for a finished scenario: 0 verified, 1 otherwise.
pub fn exit_code(report: &ScenarioReport) -> i32 {
    if report.verified && !report.contradiction {
        0
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_malformed_and_unsupported() {
        assert!(matches!(Scenario::from_json("{"), Err(ScenarioError::ParseError(_))));
        let no_seed = r#"{"tower": {"base": "Q"}, "algebra": ["-1", "-3"],
            "construction": {"kind": "custom-form", "form": {"kind": "hermitian", "entries": ["1"]}},
            "suites": ["pfaffian"]}"#;
        assert!(matches!(
            Scenario::from_json(no_seed),
            Err(ScenarioError::ParseError(_))
        ));
        let wrong = r#"{"tower": {"base": "Q"}, "algebra": ["-1", "-3"],
            "construction": {"kind": "custom-form", "form": {"kind": "skew-hermitian", "entries": ["i"]}},
            "suites": ["theorem-main"]}"#;
        let s = Scenario::from_json(wrong).unwrap();
        assert!(matches!(
            run_scenario(&s, false),
            Err(ScenarioError::UnsupportedCombination(_))
        ));
    }

    #[test]
    fn unitary_extension_transcript() {
        let text = r#"{"tower": {"base": "Q"}, "algebra": ["-2", "5"],
            "construction": {"kind": "unitary-extension",
                             "form": {"kind": "skew-hermitian", "entries": ["j"]}, "a": "-2"},
            "suites": ["hyperbolicity", "discriminant"], "seed": 1}"#;
        let s = Scenario::from_json(text).unwrap();
        let rep = run_scenario(&s, false).unwrap();
        assert!(rep.verified, "{rep:?}");
        assert_eq!(exit_code(&rep), 0);
        assert!(rep.reports[0].data.contains_key("witness"));
    }
}
