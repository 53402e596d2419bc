//! Canonical representations of tower elements and the arithmetic on them.
//!
//! Every function takes the level the operands live in; the level decides how
//! the variant is interpreted (which prime, which radicand).

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::tower::{BaseField, FieldTower, LayerKind};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Repr {
    Rat(BigRational),
    Fp(u64),
    Frac(RatFn),
    /// `c + d·√r`.
    Quad(Box<Repr>, Box<Repr>),
}

/// `t^shift · num(t) / den(t)` with `num(0) ≠ 0`, `den(0) = 1` and
/// `gcd(num, den) = 1`. Zero is `num = []`, `shift = 0`, `den = [1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RatFn {
    pub shift: i64,
    pub num: Vec<Repr>,
    pub den: Vec<Repr>,
}

pub(crate) fn below(l: &FieldTower) -> &FieldTower {
    l.below().expect("layer without a level below")
}

pub fn zero(l: &FieldTower) -> Repr {
    match l.kind() {
        None => match l.base() {
            BaseField::Rationals => Repr::Rat(BigRational::zero()),
            BaseField::PrimeField(_) => Repr::Fp(0),
        },
        Some(LayerKind::Quadratic { .. }) => {
            let b = below(l);
            Repr::Quad(Box::new(zero(b)), Box::new(zero(b)))
        }
        Some(_) => Repr::Frac(RatFn::zero(below(l))),
    }
}

pub fn one(l: &FieldTower) -> Repr {
    from_bigint(l, &BigInt::one())
}

pub fn from_bigint(l: &FieldTower, n: &BigInt) -> Repr {
    match l.kind() {
        None => match l.base() {
            BaseField::Rationals => Repr::Rat(BigRational::from_integer(n.clone())),
            BaseField::PrimeField(p) => {
                let m = n.mod_floor(&BigInt::from(*p));
                Repr::Fp(m.to_u64().expect("residue fits in u64"))
            }
        },
        Some(LayerKind::Quadratic { .. }) => {
            let b = below(l);
            Repr::Quad(Box::new(from_bigint(b, n)), Box::new(zero(b)))
        }
        Some(_) => {
            let b = below(l);
            let c = from_bigint(b, n);
            if is_zero(&c) {
                Repr::Frac(RatFn::zero(b))
            } else {
                Repr::Frac(RatFn {
                    shift: 0,
                    num: vec![c],
                    den: vec![one(b)],
                })
            }
        }
    }
}

pub fn is_zero(r: &Repr) -> bool {
    match r {
        Repr::Rat(q) => q.is_zero(),
        Repr::Fp(v) => *v == 0,
        Repr::Frac(f) => f.num.is_empty(),
        Repr::Quad(c, d) => is_zero(c) && is_zero(d),
    }
}

fn prime(l: &FieldTower) -> u64 {
    match l.base() {
        BaseField::PrimeField(p) => *p,
        BaseField::Rationals => unreachable!("prime requested over Q"),
    }
}

fn fp_mul(p: u64, a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub(crate) fn fp_pow(p: u64, mut a: u64, mut e: u64) -> u64 {
    let mut r = 1u64 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = fp_mul(p, r, a);
        }
        a = fp_mul(p, a, a);
        e >>= 1;
    }
    r
}

pub fn add(l: &FieldTower, a: &Repr, b: &Repr) -> Repr {
    match (a, b) {
        (Repr::Rat(x), Repr::Rat(y)) => Repr::Rat(x + y),
        (Repr::Fp(x), Repr::Fp(y)) => {
            let p = prime(l);
            Repr::Fp(((*x as u128 + *y as u128) % p as u128) as u64)
        }
        (Repr::Frac(x), Repr::Frac(y)) => Repr::Frac(RatFn::add(below(l), x, y)),
        (Repr::Quad(c1, d1), Repr::Quad(c2, d2)) => {
            let bl = below(l);
            Repr::Quad(Box::new(add(bl, c1, c2)), Box::new(add(bl, d1, d2)))
        }
        _ => panic!("mismatched representations"),
    }
}

pub fn neg(l: &FieldTower, a: &Repr) -> Repr {
    match a {
        Repr::Rat(x) => Repr::Rat(-x),
        Repr::Fp(x) => {
            let p = prime(l);
            Repr::Fp(if *x == 0 { 0 } else { p - x })
        }
        Repr::Frac(f) => {
            let bl = below(l);
            Repr::Frac(RatFn {
                shift: f.shift,
                num: f.num.iter().map(|c| neg(bl, c)).collect(),
                den: f.den.clone(),
            })
        }
        Repr::Quad(c, d) => {
            let bl = below(l);
            Repr::Quad(Box::new(neg(bl, c)), Box::new(neg(bl, d)))
        }
    }
}

pub fn sub(l: &FieldTower, a: &Repr, b: &Repr) -> Repr {
    match (a, b) {
        (Repr::Rat(x), Repr::Rat(y)) => Repr::Rat(x - y),
        _ => add(l, a, &neg(l, b)),
    }
}

pub fn mul(l: &FieldTower, a: &Repr, b: &Repr) -> Repr {
    match (a, b) {
        (Repr::Rat(x), Repr::Rat(y)) => Repr::Rat(x * y),
        (Repr::Fp(x), Repr::Fp(y)) => Repr::Fp(fp_mul(prime(l), *x, *y)),
        (Repr::Frac(x), Repr::Frac(y)) => Repr::Frac(RatFn::mul(below(l), x, y)),
        (Repr::Quad(c1, d1), Repr::Quad(c2, d2)) => {
            let bl = below(l);
            let r = l.radicand().expect("quadratic level has a radicand");
            let cc = add(bl, &mul(bl, c1, c2), &mul(bl, r, &mul(bl, d1, d2)));
            let dd = add(bl, &mul(bl, c1, d2), &mul(bl, d1, c2));
            Repr::Quad(Box::new(cc), Box::new(dd))
        }
        _ => panic!("mismatched representations"),
    }
}

/// Multiplicative inverse; panics on zero (callers check first).
pub fn inv(l: &FieldTower, a: &Repr) -> Repr {
    assert!(!is_zero(a), "inverse of zero");
    match a {
        Repr::Rat(x) => Repr::Rat(x.recip()),
        Repr::Fp(x) => {
            let p = prime(l);
            Repr::Fp(fp_pow(p, *x, p - 2))
        }
        Repr::Frac(f) => Repr::Frac(RatFn::inv(below(l), f)),
        Repr::Quad(c, d) => {
            let bl = below(l);
            let r = l.radicand().expect("quadratic level has a radicand");
            let norm = sub(bl, &mul(bl, c, c), &mul(bl, r, &mul(bl, d, d)));
            let ninv = inv(bl, &norm);
            Repr::Quad(Box::new(mul(bl, c, &ninv)), Box::new(neg(bl, &mul(bl, d, &ninv))))
        }
    }
}

pub fn div(l: &FieldTower, a: &Repr, b: &Repr) -> Repr {
    mul(l, a, &inv(l, b))
}

pub fn pow(l: &FieldTower, a: &Repr, e: i64) -> Repr {
    let mut base = if e < 0 { inv(l, a) } else { a.clone() };
    let mut e = e.unsigned_abs();
    let mut acc = one(l);
    while e > 0 {
        if e & 1 == 1 {
            acc = mul(l, &acc, &base);
        }
        e >>= 1;
        if e > 0 {
            base = mul(l, &base, &base);
        }
    }
    acc
}

pub fn is_one(l: &FieldTower, a: &Repr) -> bool {
    *a == one(l)
}

// ---------------------------------------------------------------------------
// Dense polynomials over a level, coefficients low to high.

// Polynomials over a prime field, as plain residues.

fn fp_coeffs(b: &FieldTower, x: &[Repr]) -> Option<(u64, Vec<u64>)> {
    if b.kind().is_some() {
        return None;
    }
    let BaseField::PrimeField(p) = b.base() else {
        return None;
    };
    let v = x
        .iter()
        .map(|c| match c {
            Repr::Fp(v) => *v,
            _ => unreachable!("prime-field coefficient"),
        })
        .collect();
    Some((*p, v))
}

fn fp_repr(mut v: Vec<u64>) -> Vec<Repr> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v.into_iter().map(Repr::Fp).collect()
}

fn fp_poly_mul(p: u64, x: &[u64], y: &[u64]) -> Vec<u64> {
    if x.is_empty() || y.is_empty() {
        return Vec::new();
    }
    // Below 2^32 every product fits in 64 bits, so a u128 sum never overflows.
    let lazy = p < 1 << 32;
    let mut out = vec![0u128; x.len() + y.len() - 1];
    for (i, &u) in x.iter().enumerate() {
        if u == 0 {
            continue;
        }
        for (j, &v) in y.iter().enumerate() {
            let acc = &mut out[i + j];
            *acc += u as u128 * v as u128;
            if !lazy {
                *acc %= p as u128;
            }
        }
    }
    out.into_iter().map(|c| (c % p as u128) as u64).collect()
}

fn fp_trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn fp_poly_divrem(p: u64, x: &[u64], y: &[u64]) -> (Vec<u64>, Vec<u64>) {
    let mut r = x.to_vec();
    fp_trim(&mut r);
    let mut y = y.to_vec();
    fp_trim(&mut y);
    assert!(!y.is_empty(), "polynomial division by zero");
    if r.len() < y.len() {
        return (Vec::new(), r);
    }
    let lead_inv = fp_pow(p, *y.last().unwrap(), p - 2);
    let mut q = vec![0u64; r.len() - y.len() + 1];
    while r.len() >= y.len() {
        let k = r.len() - y.len();
        let c = fp_mul(p, *r.last().unwrap(), lead_inv);
        if c != 0 {
            for (j, &v) in y.iter().enumerate() {
                let t = fp_mul(p, c, v);
                r[k + j] = (r[k + j] + p - t) % p;
            }
        }
        q[k] = c;
        r.pop();
        fp_trim(&mut r);
        if r.is_empty() {
            break;
        }
    }
    fp_trim(&mut q);
    (q, r)
}

fn fp_poly_gcd(p: u64, x: &[u64], y: &[u64]) -> Vec<u64> {
    let mut u = x.to_vec();
    let mut v = y.to_vec();
    fp_trim(&mut u);
    fp_trim(&mut v);
    while !v.is_empty() {
        let (_, r) = fp_poly_divrem(p, &u, &v);
        u = v;
        v = r;
    }
    if let Some(&l) = u.last() {
        let li = fp_pow(p, l, p - 2);
        for c in u.iter_mut() {
            *c = fp_mul(p, *c, li);
        }
    }
    u
}

pub(crate) fn p_trim(v: &mut Vec<Repr>) {
    while v.last().is_some_and(is_zero) {
        v.pop();
    }
}

pub(crate) fn p_add(b: &FieldTower, x: &[Repr], y: &[Repr]) -> Vec<Repr> {
    let n = x.len().max(y.len());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        out.push(match (x.get(i), y.get(i)) {
            (Some(u), Some(v)) => add(b, u, v),
            (Some(u), None) => u.clone(),
            (None, Some(v)) => v.clone(),
            (None, None) => unreachable!(),
        });
    }
    p_trim(&mut out);
    out
}

pub(crate) fn p_mul(b: &FieldTower, x: &[Repr], y: &[Repr]) -> Vec<Repr> {
    if x.is_empty() || y.is_empty() {
        return Vec::new();
    }
    if let (Some((p, u)), Some((_, v))) = (fp_coeffs(b, x), fp_coeffs(b, y)) {
        return fp_repr(fp_poly_mul(p, &u, &v));
    }
    let z = zero(b);
    let mut out = vec![z; x.len() + y.len() - 1];
    for (i, u) in x.iter().enumerate() {
        if is_zero(u) {
            continue;
        }
        for (j, v) in y.iter().enumerate() {
            if is_zero(v) {
                continue;
            }
            out[i + j] = add(b, &out[i + j], &mul(b, u, v));
        }
    }
    p_trim(&mut out);
    out
}

pub(crate) fn p_scale(b: &FieldTower, x: &[Repr], c: &Repr) -> Vec<Repr> {
    if is_zero(c) {
        return Vec::new();
    }
    x.iter().map(|u| mul(b, u, c)).collect()
}

/// Quotient and remainder; `y` must be nonzero.
pub(crate) fn p_divrem(b: &FieldTower, x: &[Repr], y: &[Repr]) -> (Vec<Repr>, Vec<Repr>) {
    assert!(!y.is_empty(), "polynomial division by zero");
    if let (Some((p, u)), Some((_, v))) = (fp_coeffs(b, x), fp_coeffs(b, y)) {
        let (q, r) = fp_poly_divrem(p, &u, &v);
        return (fp_repr(q), fp_repr(r));
    }
    let mut r = x.to_vec();
    p_trim(&mut r);
    if r.len() < y.len() {
        return (Vec::new(), r);
    }
    let lead_inv = inv(b, y.last().unwrap());
    let mut q = vec![zero(b); r.len() - y.len() + 1];
    while r.len() >= y.len() && !r.is_empty() {
        let k = r.len() - y.len();
        let c = mul(b, r.last().unwrap(), &lead_inv);
        for (j, v) in y.iter().enumerate() {
            r[k + j] = sub(b, &r[k + j], &mul(b, &c, v));
        }
        q[k] = c;
        r.pop();
        p_trim(&mut r);
    }
    p_trim(&mut q);
    (q, r)
}

/// Monic gcd.
pub(crate) fn p_gcd(b: &FieldTower, x: &[Repr], y: &[Repr]) -> Vec<Repr> {
    if let (Some((p, u)), Some((_, v))) = (fp_coeffs(b, x), fp_coeffs(b, y)) {
        return fp_repr(fp_poly_gcd(p, &u, &v));
    }
    if let (Some(u), Some(v)) = (q_integer_poly(b, x), q_integer_poly(b, y)) {
        return q_repr_monic(&z_poly_gcd(u, v));
    }
    if matches!(
        b.kind(),
        Some(LayerKind::Laurent { .. } | LayerKind::RationalFunction { .. })
    ) {
        return p_gcd_fraction_field(b, x, y);
    }
    p_gcd_euclid(b, x, y)
}

/// Monic gcd by plain Euclidean division.
fn p_gcd_euclid(b: &FieldTower, x: &[Repr], y: &[Repr]) -> Vec<Repr> {
    let mut u = x.to_vec();
    let mut v = y.to_vec();
    p_trim(&mut u);
    p_trim(&mut v);
    while !v.is_empty() {
        let (_, r) = p_divrem(b, &u, &v);
        u = v;
        v = r;
    }
    if u.is_empty() {
        return u;
    }
    let li = inv(b, u.last().unwrap());
    p_scale(b, &u, &li)
}

// Polynomials over ℚ: gcds are taken on integer multiples, certified coprime
// modulo a large prime when possible and otherwise by a primitive remainder
// sequence over ℤ.

fn q_integer_poly(b: &FieldTower, x: &[Repr]) -> Option<Vec<BigInt>> {
    if b.kind().is_some() || !matches!(b.base(), BaseField::Rationals) {
        return None;
    }
    let mut lcm = BigInt::one();
    for c in x {
        let Repr::Rat(q) = c else {
            unreachable!("rational coefficient")
        };
        lcm = lcm.lcm(q.denom());
    }
    let v = x
        .iter()
        .map(|c| match c {
            Repr::Rat(q) => q.numer() * (&lcm / q.denom()),
            _ => unreachable!("rational coefficient"),
        })
        .collect();
    Some(v)
}

fn z_trim(v: &mut Vec<BigInt>) {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
}

fn z_primitive(mut v: Vec<BigInt>) -> Vec<BigInt> {
    z_trim(&mut v);
    let g = v.iter().fold(BigInt::zero(), |g, c| g.gcd(c));
    if !g.is_zero() && !g.is_one() {
        for c in v.iter_mut() {
            *c = &*c / &g;
        }
    }
    v
}

fn z_coprime_mod_primes(x: &[BigInt], y: &[BigInt]) -> bool {
    for p in [2_147_483_647u64, 2_147_483_629, 2_147_483_587] {
        let big = BigInt::from(p);
        let red =
            |v: &[BigInt]| -> Vec<u64> { v.iter().map(|c| c.mod_floor(&big).to_u64().expect("reduced")).collect() };
        let (xr, yr) = (red(x), red(y));
        if xr.last() == Some(&0) || yr.last() == Some(&0) {
            continue;
        }
        if fp_poly_gcd(p, &xr, &yr).len() == 1 {
            return true;
        }
    }
    false
}

fn z_pseudo_remainder(x: &[BigInt], y: &[BigInt]) -> Vec<BigInt> {
    let mut r = x.to_vec();
    z_trim(&mut r);
    let lc = y.last().expect("nonzero divisor").clone();
    while r.len() >= y.len() && !r.is_empty() {
        let k = r.len() - y.len();
        let lr = r.last().unwrap().clone();
        for c in r.iter_mut() {
            *c = &*c * &lc;
        }
        for (j, v) in y.iter().enumerate() {
            r[k + j] -= &lr * v;
        }
        r.pop();
        z_trim(&mut r);
    }
    r
}

fn z_poly_gcd(x: Vec<BigInt>, y: Vec<BigInt>) -> Vec<BigInt> {
    let mut a = z_primitive(x);
    let mut c = z_primitive(y);
    if a.is_empty() || c.is_empty() {
        return if a.is_empty() { c } else { a };
    }
    if a.len() > 1 && c.len() > 1 && z_coprime_mod_primes(&a, &c) {
        return vec![BigInt::one()];
    }
    if a.len() < c.len() {
        std::mem::swap(&mut a, &mut c);
    }
    while c.len() > 1 {
        let r = z_pseudo_remainder(&a, &c);
        a = c;
        c = z_primitive(r);
    }
    if c.is_empty() {
        a
    } else {
        vec![BigInt::one()]
    }
}

fn q_repr_monic(v: &[BigInt]) -> Vec<Repr> {
    let Some(lead) = v.last() else { return Vec::new() };
    v.iter()
        .map(|c| Repr::Rat(BigRational::new(c.clone(), lead.clone())))
        .collect()
}

// Gcd over a valued layer `b = F(s)`: clear denominators into `F[s][u]` and
// run a primitive remainder sequence there. Contents are gcds in `F[s]`, one
// level down, which avoids the coefficient swell of Euclid over `F(s)`.

type Bivar = Vec<Vec<Repr>>;

fn clear_denominators(b: &FieldTower, x: &[Repr]) -> Bivar {
    let f = below(b);
    let fracs: Vec<&RatFn> = x
        .iter()
        .map(|c| match c {
            Repr::Frac(r) => r,
            _ => unreachable!("fraction coefficient"),
        })
        .collect();
    let mut den = vec![one(f)];
    let mut min_shift = i64::MAX;
    for r in &fracs {
        if r.is_zero() {
            continue;
        }
        min_shift = min_shift.min(r.shift);
        if r.den.len() > 1 {
            let g = p_gcd(f, &den, &r.den);
            den = p_mul(f, &den, &p_divrem(f, &r.den, &g).0);
        }
    }
    fracs
        .iter()
        .map(|r| {
            if r.is_zero() {
                return Vec::new();
            }
            let mut v = vec![zero(f); (r.shift - min_shift) as usize];
            let cofactor = if r.den.len() > 1 {
                p_divrem(f, &den, &r.den).0
            } else {
                den.clone()
            };
            v.extend(p_mul(f, &r.num, &cofactor));
            p_trim(&mut v);
            v
        })
        .collect()
}

fn bivar_trim(v: &mut Bivar) {
    while v.last().is_some_and(|c| c.is_empty()) {
        v.pop();
    }
}

fn primitive_part(f: &FieldTower, mut x: Bivar) -> Bivar {
    let mut content: Vec<Repr> = Vec::new();
    for c in &x {
        if c.is_empty() {
            continue;
        }
        content = if content.is_empty() {
            c.clone()
        } else {
            p_gcd(f, &content, c)
        };
        if content.len() == 1 {
            break;
        }
    }
    if content.len() > 1 || content.first().is_some_and(|c| !is_one(f, c)) {
        for c in x.iter_mut() {
            if !c.is_empty() {
                *c = p_divrem(f, c, &content).0;
            }
        }
    }
    x
}

/// `lc(y)^k · x mod y` in `F[s][u]`.
fn pseudo_remainder(f: &FieldTower, x: &Bivar, y: &Bivar) -> Bivar {
    let mut r = x.clone();
    bivar_trim(&mut r);
    let lc = y.last().expect("nonzero divisor").clone();
    while r.len() >= y.len() && !r.is_empty() {
        let k = r.len() - y.len();
        let lr = r.last().unwrap().clone();
        for c in r.iter_mut() {
            *c = p_mul(f, c, &lc);
        }
        for (j, v) in y.iter().enumerate() {
            let t = p_mul(f, &lr, v);
            r[k + j] = p_add(f, &r[k + j], &t.iter().map(|c| neg(f, c)).collect::<Vec<_>>());
        }
        debug_assert!(r.last().unwrap().is_empty());
        r.pop();
        bivar_trim(&mut r);
    }
    r
}

fn fp_eval(p: u64, c: &[Repr], at: u64) -> u64 {
    c.iter().rev().fold(0, |acc, r| match r {
        Repr::Fp(v) => (fp_mul(p, acc, at) + v) % p,
        _ => unreachable!("prime-field coefficient"),
    })
}

/// Certifies `gcd(x, y) = 1` in `𝔽_p[s][u]` by specializing `s` at points
/// where neither leading coefficient vanishes: a common factor would survive
/// the specialization. `false` means undecided.
fn coprime_by_evaluation(f: &FieldTower, x: &Bivar, y: &Bivar) -> bool {
    if f.kind().is_some() {
        return false;
    }
    let BaseField::PrimeField(p) = f.base() else {
        return false;
    };
    let p = *p;
    for at in 0..p.min(16) {
        let (lx, ly) = (fp_eval(p, x.last().unwrap(), at), fp_eval(p, y.last().unwrap(), at));
        if lx == 0 || ly == 0 {
            continue;
        }
        let xi: Vec<u64> = x.iter().map(|c| fp_eval(p, c, at)).collect();
        let yi: Vec<u64> = y.iter().map(|c| fp_eval(p, c, at)).collect();
        if fp_poly_gcd(p, &xi, &yi).len() == 1 {
            return true;
        }
    }
    false
}

fn p_gcd_fraction_field(b: &FieldTower, x: &[Repr], y: &[Repr]) -> Vec<Repr> {
    let f = below(b);
    let mut u = x.to_vec();
    let mut v = y.to_vec();
    p_trim(&mut u);
    p_trim(&mut v);
    if u.is_empty() || v.is_empty() {
        let w = if u.is_empty() { v } else { u };
        if w.is_empty() {
            return w;
        }
        let li = inv(b, w.last().unwrap());
        return p_scale(b, &w, &li);
    }
    let mut a = clear_denominators(b, &u);
    let mut c = clear_denominators(b, &v);
    if a.len() > 1 && c.len() > 1 && coprime_by_evaluation(f, &a, &c) {
        return vec![one(b)];
    }
    a = primitive_part(f, a);
    c = primitive_part(f, c);
    if a.len() < c.len() {
        std::mem::swap(&mut a, &mut c);
    }
    while c.len() > 1 {
        let r = pseudo_remainder(f, &a, &c);
        a = c;
        c = if r.is_empty() { r } else { primitive_part(f, r) };
    }
    let g = if c.is_empty() { a } else { vec![vec![one(f)]] };
    let g: Vec<Repr> = g
        .into_iter()
        .map(|coef| Repr::Frac(RatFn::normalize(f, 0, coef, vec![one(f)], false)))
        .collect();
    let li = inv(b, g.last().unwrap());
    p_scale(b, &g, &li)
}

fn p_is_const_one(b: &FieldTower, x: &[Repr]) -> bool {
    x.len() == 1 && is_one(b, &x[0])
}

impl RatFn {
    pub fn zero(b: &FieldTower) -> Self {
        RatFn {
            shift: 0,
            num: Vec::new(),
            den: vec![one(b)],
        }
    }

    pub fn monomial(b: &FieldTower, shift: i64, c: Repr) -> Self {
        if is_zero(&c) {
            return RatFn::zero(b);
        }
        RatFn {
            shift,
            num: vec![c],
            den: vec![one(b)],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_empty()
    }

    /// Order at the layer variable.
    pub fn valuation(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.shift)
        }
    }

    /// Value of the unit part `num/den` at 0.
    pub fn leading(&self) -> Option<&Repr> {
        self.num.first()
    }

    pub(crate) fn normalize(
        b: &FieldTower,
        mut shift: i64,
        mut num: Vec<Repr>,
        mut den: Vec<Repr>,
        need_gcd: bool,
    ) -> Self {
        p_trim(&mut num);
        p_trim(&mut den);
        assert!(!den.is_empty(), "zero denominator");
        if num.is_empty() {
            return RatFn::zero(b);
        }
        let k = num.iter().take_while(|c| is_zero(c)).count();
        if k > 0 {
            num.drain(..k);
            shift += k as i64;
        }
        let k = den.iter().take_while(|c| is_zero(c)).count();
        if k > 0 {
            den.drain(..k);
            shift -= k as i64;
        }
        if need_gcd && num.len() > 1 && den.len() > 1 {
            let g = p_gcd(b, &num, &den);
            if g.len() > 1 {
                num = p_divrem(b, &num, &g).0;
                den = p_divrem(b, &den, &g).0;
            }
        }
        if !is_one(b, &den[0]) {
            let ci = inv(b, &den[0]);
            num = p_scale(b, &num, &ci);
            den = p_scale(b, &den, &ci);
        }
        RatFn { shift, num, den }
    }

    fn shifted_num(&self, b: &FieldTower, by: i64) -> Vec<Repr> {
        debug_assert!(by >= 0);
        let mut v = vec![zero(b); by as usize];
        v.extend(self.num.iter().cloned());
        v
    }

    pub fn add(b: &FieldTower, x: &RatFn, y: &RatFn) -> RatFn {
        if x.is_zero() {
            return y.clone();
        }
        if y.is_zero() {
            return x.clone();
        }
        let s = x.shift.min(y.shift);
        let xn = x.shifted_num(b, x.shift - s);
        let yn = y.shifted_num(b, y.shift - s);
        if x.den == y.den {
            let num = p_add(b, &xn, &yn);
            let need = x.den.len() > 1;
            RatFn::normalize(b, s, num, x.den.clone(), need)
        } else {
            // With g = gcd of the denominators, the sum is reduced once the
            // numerator is reduced against g alone.
            let g = p_gcd(b, &x.den, &y.den);
            if g.len() <= 1 {
                let num = p_add(b, &p_mul(b, &xn, &y.den), &p_mul(b, &yn, &x.den));
                let den = p_mul(b, &x.den, &y.den);
                return RatFn::normalize(b, s, num, den, false);
            }
            let xd = p_divrem(b, &x.den, &g).0;
            let yd = p_divrem(b, &y.den, &g).0;
            let mut num = p_add(b, &p_mul(b, &xn, &yd), &p_mul(b, &yn, &xd));
            let mut den = p_mul(b, &x.den, &yd);
            p_trim(&mut num);
            if !num.is_empty() {
                let k = num.iter().take_while(|c| is_zero(c)).count();
                let h = p_gcd(b, &num[k..], &g);
                if h.len() > 1 {
                    num = p_divrem(b, &num, &h).0;
                    den = p_divrem(b, &den, &h).0;
                }
            }
            RatFn::normalize(b, s, num, den, false)
        }
    }

    pub fn mul(b: &FieldTower, x: &RatFn, y: &RatFn) -> RatFn {
        if x.is_zero() || y.is_zero() {
            return RatFn::zero(b);
        }
        let shift = x.shift + y.shift;
        let x_poly = p_is_const_one(b, &x.den);
        let y_poly = p_is_const_one(b, &y.den);
        if x_poly && y_poly {
            return RatFn {
                shift,
                num: p_mul(b, &x.num, &y.num),
                den: x.den.clone(),
            };
        }
        let (mut xn, mut yd) = (x.num.clone(), y.den.clone());
        let (mut yn, mut xd) = (y.num.clone(), x.den.clone());
        if xn.len() > 1 && yd.len() > 1 {
            let g = p_gcd(b, &xn, &yd);
            if g.len() > 1 {
                xn = p_divrem(b, &xn, &g).0;
                yd = p_divrem(b, &yd, &g).0;
            }
        }
        if yn.len() > 1 && xd.len() > 1 {
            let g = p_gcd(b, &yn, &xd);
            if g.len() > 1 {
                yn = p_divrem(b, &yn, &g).0;
                xd = p_divrem(b, &xd, &g).0;
            }
        }
        RatFn::normalize(b, shift, p_mul(b, &xn, &yn), p_mul(b, &xd, &yd), false)
    }

    pub fn inv(b: &FieldTower, x: &RatFn) -> RatFn {
        assert!(!x.is_zero(), "inverse of zero");
        RatFn::normalize(b, -x.shift, x.den.clone(), x.num.clone(), false)
    }
}

/// Sign-like normalization used to fix principal square roots: the first base
/// coefficient met in a canonical traversal is "positive" (`> 0` over ℚ,
/// `≤ (p-1)/2` over 𝔽_p).
pub(crate) fn is_canonical_sign(l: &FieldTower, r: &Repr) -> bool {
    fn first_base(r: &Repr) -> Option<&Repr> {
        match r {
            Repr::Rat(q) if q.is_zero() => None,
            Repr::Fp(0) => None,
            Repr::Rat(_) | Repr::Fp(_) => Some(r),
            Repr::Frac(f) => f.num.first().and_then(first_base),
            Repr::Quad(c, d) => first_base(c).or_else(|| first_base(d)),
        }
    }
    match first_base(r) {
        None => true,
        Some(Repr::Rat(q)) => q.is_positive(),
        Some(Repr::Fp(v)) => {
            let p = prime(l);
            *v <= (p - 1) / 2
        }
        Some(_) => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::field::random_element;

    fn random_poly(b: &FieldTower, rng: &mut ChaCha8Rng, deg: usize) -> Vec<Repr> {
        let mut v: Vec<Repr> = (0..=deg).map(|_| random_element(b, rng, 3).repr().clone()).collect();
        p_trim(&mut v);
        v
    }

    fn coefficient_fields() -> Vec<FieldTower> {
        let q = FieldTower::rationals();
        let f5 = FieldTower::prime_field(5).unwrap();
        vec![
            q.clone(),
            FieldTower::prime_field(7).unwrap(),
            f5.laurent("s").unwrap(),
            q.rational_function("s").unwrap(),
            f5.laurent("s").unwrap().laurent("u").unwrap(),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 96, failure_persistence: None, ..ProptestConfig::default() })]

        #[test]
        fn gcd_fast_paths_match_euclid(
            seed: u64,
            which in 0usize..5,
            d1 in 0usize..4,
            d2 in 0usize..4,
            dc in 0usize..3,
        ) {
            let fields = coefficient_fields();
            let b = &fields[which];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_poly(b, &mut rng, dc);
            let x = p_mul(b, &random_poly(b, &mut rng, d1), &c);
            let y = p_mul(b, &random_poly(b, &mut rng, d2), &c);
            let fast = p_gcd(b, &x, &y);
            prop_assert_eq!(&fast, &p_gcd_euclid(b, &x, &y));
            if !x.is_empty() && !y.is_empty() {
                prop_assert!(p_divrem(b, &x, &fast).1.is_empty());
                prop_assert!(p_divrem(b, &y, &fast).1.is_empty());
            }
        }
    }
}
