use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::expr::Expr;
use super::repr::{self, Repr};
use super::{FieldElement, FieldError};

/// The prime field or the rationals at the bottom of every tower.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BaseField {
    Rationals,
    PrimeField(u64),
}

impl BaseField {
    pub fn characteristic(&self) -> u64 {
        match self {
            BaseField::Rationals => 0,
            BaseField::PrimeField(p) => *p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerKind {
    /// `k(x)`: exact rational functions in a transcendental.
    RationalFunction { name: String },
    /// `k((t))`: Laurent series; elements are kept in the rational-function subfield.
    Laurent { name: String },
    /// `k(√r)` with `r` a non-square of the level below.
    Quadratic { name: String, radicand: Repr },
}

impl LayerKind {
    pub fn name(&self) -> &str {
        match self {
            LayerKind::RationalFunction { name } | LayerKind::Laurent { name } | LayerKind::Quadratic { name, .. } => {
                name
            }
        }
    }
}

pub(crate) struct LevelData {
    pub(crate) base: BaseField,
    pub(crate) kind: Option<LayerKind>,
    pub(crate) below: Option<FieldTower>,
    pub(crate) depth: usize,
}

/// A field presented as a tower of layers over `ℚ` or `𝔽_p`.
///
/// A `FieldTower` value denotes its top level; every level below is again a
/// `FieldTower` (see [`FieldTower::below`]). Elements of a lower level coerce
/// into higher levels of the same tower automatically.
#[derive(Clone)]
pub struct FieldTower(pub(crate) Arc<LevelData>);

impl FieldTower {
    pub fn rationals() -> Self {
        FieldTower(Arc::new(LevelData {
            base: BaseField::Rationals,
            kind: None,
            below: None,
            depth: 0,
        }))
    }

    pub fn prime_field(p: u64) -> Result<Self, FieldError> {
        if p == 2 {
            return Err(FieldError::BadCharacteristic(p));
        }
        if p < 3 || !is_prime_u64(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(FieldTower(Arc::new(LevelData {
            base: BaseField::PrimeField(p),
            kind: None,
            below: None,
            depth: 0,
        })))
    }

    pub fn new(base: BaseField) -> Result<Self, FieldError> {
        match base {
            BaseField::Rationals => Ok(Self::rationals()),
            BaseField::PrimeField(p) => Self::prime_field(p),
        }
    }

    fn push(&self, kind: LayerKind) -> Result<Self, FieldError> {
        let name = kind.name();
        if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(FieldError::BadName(name.to_string()));
        }
        if name.chars().next().is_some_and(|c| c.is_ascii_digit()) {
            return Err(FieldError::BadName(name.to_string()));
        }
        if self.layer_names().iter().any(|n| n == name) {
            return Err(FieldError::NameCollision(name.to_string()));
        }
        Ok(FieldTower(Arc::new(LevelData {
            base: self.0.base.clone(),
            kind: Some(kind),
            below: Some(self.clone()),
            depth: self.0.depth + 1,
        })))
    }

    /// Adjoin a Laurent-series layer `((name))`.
    pub fn laurent(&self, name: &str) -> Result<Self, FieldError> {
        self.push(LayerKind::Laurent { name: name.to_string() })
    }

    /// Adjoin a transcendental `(name)`.
    pub fn rational_function(&self, name: &str) -> Result<Self, FieldError> {
        self.push(LayerKind::RationalFunction { name: name.to_string() })
    }

    /// Adjoin `√radicand` under the given generator name. The radicand must be
    /// a non-square of this level.
    pub fn quadratic(&self, name: &str, radicand: &FieldElement) -> Result<Self, FieldError> {
        let r = radicand.lift_to(self)?;
        if r.is_zero() {
            return Err(FieldError::ZeroElement);
        }
        if r.is_square()? {
            return Err(FieldError::SquareRadicand(r.to_string()));
        }
        self.push(LayerKind::Quadratic {
            name: name.to_string(),
            radicand: r.repr,
        })
    }

    pub fn base(&self) -> &BaseField {
        &self.0.base
    }

    pub fn characteristic(&self) -> u64 {
        self.0.base.characteristic()
    }

    pub fn depth(&self) -> usize {
        self.0.depth
    }

    pub fn kind(&self) -> Option<&LayerKind> {
        self.0.kind.as_ref()
    }

    pub fn below(&self) -> Option<&FieldTower> {
        self.0.below.as_ref()
    }

    pub fn is_base(&self) -> bool {
        self.0.kind.is_none()
    }

    pub fn is_laurent(&self) -> bool {
        matches!(self.0.kind, Some(LayerKind::Laurent { .. }))
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.0.kind, Some(LayerKind::Quadratic { .. }))
    }

    /// The level at the given depth (0 is the base).
    pub fn level(&self, depth: usize) -> Option<FieldTower> {
        let mut cur = self.clone();
        if depth > cur.depth() {
            return None;
        }
        while cur.depth() > depth {
            cur = cur.below().cloned()?;
        }
        Some(cur)
    }

    /// Levels from the base (index 0) up to this level.
    pub fn levels(&self) -> Vec<FieldTower> {
        let mut out = Vec::with_capacity(self.depth() + 1);
        let mut cur = Some(self.clone());
        while let Some(l) = cur {
            cur = l.below().cloned();
            out.push(l);
        }
        out.reverse();
        out
    }

    pub fn layer_names(&self) -> Vec<String> {
        self.levels()
            .iter()
            .filter_map(|l| l.kind().map(|k| k.name().to_string()))
            .collect()
    }

    /// True if every layer above the base is a Laurent layer.
    pub fn laurent_only(&self) -> bool {
        self.levels().iter().skip(1).all(|l| l.is_laurent())
    }

    /// Whether `self` is `other` or one of the levels below it.
    pub fn is_subfield_of(&self, other: &FieldTower) -> bool {
        match other.level(self.depth()) {
            Some(l) => l == *self,
            None => false,
        }
    }

    pub(crate) fn radicand(&self) -> Option<&Repr> {
        match &self.0.kind {
            Some(LayerKind::Quadratic { radicand, .. }) => Some(radicand),
            _ => None,
        }
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement::from_repr(self, repr::zero(self))
    }

    pub fn one(&self) -> FieldElement {
        FieldElement::from_repr(self, repr::one(self))
    }

    pub fn from_int(&self, n: i64) -> FieldElement {
        FieldElement::from_repr(self, repr::from_bigint(self, &BigInt::from(n)))
    }

    pub fn from_bigint(&self, n: &BigInt) -> FieldElement {
        FieldElement::from_repr(self, repr::from_bigint(self, n))
    }

    pub fn from_ratio(&self, num: i64, den: i64) -> FieldElement {
        assert!(den != 0, "zero denominator");
        &self.from_int(num) / &self.from_int(den)
    }

    /// The generator of this level: the variable of a rational-function or
    /// Laurent layer, or the square root of a quadratic layer.
    pub fn generator(&self) -> Option<FieldElement> {
        let below = self.below()?;
        let r = match self.kind()? {
            LayerKind::RationalFunction { .. } | LayerKind::Laurent { .. } => {
                Repr::Frac(repr::RatFn::monomial(below, 1, repr::one(below)))
            }
            LayerKind::Quadratic { .. } => Repr::Quad(Box::new(repr::zero(below)), Box::new(repr::one(below))),
        };
        Some(FieldElement::from_repr(self, r))
    }

    /// Generator of the named layer, embedded in this level.
    pub fn gen_named(&self, name: &str) -> Option<FieldElement> {
        let lvl = self
            .levels()
            .into_iter()
            .find(|l| l.kind().is_some_and(|k| k.name() == name))?;
        lvl.generator()?.lift_to(self).ok()
    }

    /// Depth of the named layer.
    pub fn depth_of(&self, name: &str) -> Option<usize> {
        self.levels()
            .iter()
            .find(|l| l.kind().is_some_and(|k| k.name() == name))
            .map(|l| l.depth())
    }

    pub fn parse(&self, text: &str) -> Result<FieldElement, FieldError> {
        Expr::parse(text)?.eval(self)
    }

    pub fn descriptor(&self) -> TowerDescriptor {
        let base = match &self.0.base {
            BaseField::Rationals => BaseDescriptor::Q,
            BaseField::PrimeField(p) => BaseDescriptor::Fp(*p),
        };
        let layers = self
            .levels()
            .iter()
            .skip(1)
            .map(|l| match l.kind().expect("non-base level") {
                LayerKind::RationalFunction { name } => LayerDescriptor::Ratfunc { name: name.clone() },
                LayerKind::Laurent { name } => LayerDescriptor::Laurent { name: name.clone() },
                LayerKind::Quadratic { name, radicand } => {
                    let below = l.below().expect("quadratic layer has a level below");
                    LayerDescriptor::Quadext {
                        name: Some(name.clone()),
                        radicand: Expr::from_element(&FieldElement::from_repr(below, radicand.clone())),
                    }
                }
            })
            .collect();
        TowerDescriptor { base, layers }
    }

    pub fn from_descriptor(desc: &TowerDescriptor) -> Result<Self, FieldError> {
        let mut t = match desc.base {
            BaseDescriptor::Q => FieldTower::rationals(),
            BaseDescriptor::Fp(fp) => FieldTower::prime_field(fp)?,
        };
        for (idx, layer) in desc.layers.iter().enumerate() {
            t = match layer {
                LayerDescriptor::Laurent { name } => t.laurent(name)?,
                LayerDescriptor::Ratfunc { name } => t.rational_function(name)?,
                LayerDescriptor::Quadext { name, radicand } => {
                    let r = radicand.eval(&t)?;
                    let name = name.clone().unwrap_or_else(|| format!("sqrt{}", idx + 1));
                    t.quadratic(&name, &r)?
                }
            };
        }
        Ok(t)
    }
}

impl PartialEq for FieldTower {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        self.0.depth == other.0.depth
            && self.0.base == other.0.base
            && self.0.kind == other.0.kind
            && self.0.below == other.0.below
    }
}

impl Eq for FieldTower {}

impl fmt::Debug for FieldTower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldTower({self})")
    }
}

impl fmt::Display for FieldTower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.kind {
            None => match self.0.base {
                BaseField::Rationals => write!(f, "Q"),
                BaseField::PrimeField(p) => write!(f, "F{p}"),
            },
            Some(kind) => {
                let below = self.below().expect("layer has a level below");
                match kind {
                    LayerKind::RationalFunction { name } => write!(f, "{below}({name})"),
                    LayerKind::Laurent { name } => write!(f, "{below}(({name}))"),
                    LayerKind::Quadratic { name, radicand } => {
                        let r = FieldElement::from_repr(below, radicand.clone());
                        write!(f, "{below}[{name}=sqrt({r})]")
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseDescriptor {
    Q,
    Fp(u64),
}

impl Serialize for BaseDescriptor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        match self {
            BaseDescriptor::Q => s.serialize_str("Q"),
            BaseDescriptor::Fp(p) => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("Fp", p)?;
                m.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for BaseDescriptor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Prime {
                #[serde(rename = "Fp")]
                fp: u64,
            },
        }
        match Raw::deserialize(d)? {
            Raw::Name(s) if s == "Q" => Ok(BaseDescriptor::Q),
            Raw::Name(s) => Err(serde::de::Error::custom(format!("unknown base field {s:?}"))),
            Raw::Prime { fp } => Ok(BaseDescriptor::Fp(fp)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerDescriptor {
    Laurent {
        name: String,
    },
    Ratfunc {
        name: String,
    },
    Quadext {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        radicand: Expr,
    },
}

/// JSON form of a tower: `{"base": "Q" | {"Fp": p}, "layers": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerDescriptor {
    pub base: BaseDescriptor,
    #[serde(default)]
    pub layers: Vec<LayerDescriptor>,
}

pub(crate) fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}
