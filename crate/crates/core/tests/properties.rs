//! Algebraic invariants on seeded random elements.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use quatinv::brauer::{brauer_equal, symbol_class};
use quatinv::field::{hensel_sqrt, quad_norm, random_element, random_nonzero, FieldElement, FieldTower};
use quatinv::herm::{InvolutionAlgebra, QMatrix, SkewHermitianForm};
use quatinv::quat::QuaternionAlgebra;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn towers() -> Vec<FieldTower> {
    let q = FieldTower::rationals();
    let f5 = FieldTower::prime_field(5).unwrap();
    vec![
        q.laurent("t").unwrap(),
        f5.laurent("s").unwrap().laurent("u").unwrap(),
        q.rational_function("a").unwrap().laurent("t").unwrap(),
        q.quadratic("w", &q.from_int(5)).unwrap().laurent("t").unwrap(),
    ]
}

fn laurent_towers() -> Vec<FieldTower> {
    let q = FieldTower::rationals();
    vec![
        q.laurent("t").unwrap(),
        FieldTower::prime_field(7).unwrap().laurent("t").unwrap(),
        FieldTower::prime_field(3)
            .unwrap()
            .laurent("s")
            .unwrap()
            .laurent("u")
            .unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn field_operations_are_canonical(seed: u64, which in 0usize..4) {
        let k = &towers()[which];
        let mut r = rng(seed);
        let a = random_element(k, &mut r, 3);
        let b = random_nonzero(k, &mut r, 3);
        let c = random_element(k, &mut r, 3);
        prop_assert_eq!(&(&(&a + &b) - &b), &a);
        prop_assert_eq!(&(&(&a / &b) * &b), &a);
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
    }

    #[test]
    fn valuation_is_additive(seed: u64, which in 0usize..3) {
        let k = &laurent_towers()[which];
        let mut r = rng(seed);
        let a = random_nonzero(k, &mut r, 3);
        let b = random_nonzero(k, &mut r, 3);
        let (va, vb) = (a.valuation().unwrap(), b.valuation().unwrap());
        prop_assert_eq!((&a * &b).valuation().unwrap(), va + vb);
        let s = &a + &b;
        if !s.is_zero() {
            prop_assert!(s.valuation().unwrap() >= va.min(vb));
            if va != vb {
                prop_assert_eq!(s.valuation().unwrap(), va.min(vb));
            }
        }
    }

    #[test]
    fn squares_are_recognised(seed: u64, which in 0usize..3) {
        let k = &laurent_towers()[which];
        let mut r = rng(seed);
        let a = random_nonzero(k, &mut r, 3);
        let sq = a.square();
        prop_assert!(sq.is_square().unwrap());
        let root = sq.exact_sqrt().unwrap();
        prop_assert_eq!(&root.square(), &sq);
        // An odd valuation is never a square.
        let t = k.generator().unwrap();
        prop_assert!(!(&sq * &t).is_square().unwrap());
    }

    #[test]
    fn hensel_root_squares_back(seed: u64, which in 0usize..3, precision in 2i64..8) {
        let k = &laurent_towers()[which];
        let mut r = rng(seed);
        let w = random_nonzero(k, &mut r, 3);
        let t = k.generator().unwrap();
        // A unit square times a principal unit: still a square in the completion.
        let e = &w.square() * &(&k.one() + &(&t * &k.from_int(4)));
        let root = hensel_sqrt(&e, precision).unwrap().truncation();
        let residual = &root.square() - &e;
        prop_assert!(residual.is_zero() || residual.valuation().unwrap() >= precision);
    }

    #[test]
    fn quadratic_norm_is_multiplicative(seed: u64, radicand in prop::sample::select(vec![2i64, 3, 5, -1, -7])) {
        let q = FieldTower::rationals();
        let k = q.quadratic("w", &q.from_int(radicand)).unwrap();
        let mut r = rng(seed);
        let x = random_element(&k, &mut r, 4);
        let y = random_element(&k, &mut r, 4);
        let n = |z: &FieldElement| quad_norm(&k, z).unwrap();
        prop_assert_eq!(n(&(&x * &y)), &n(&x) * &n(&y));
        prop_assert_eq!((&x * &x.quad_conjugate().unwrap()).descend_to(&q), Some(n(&x)));
    }

    #[test]
    fn quaternion_norm_is_multiplicative(seed: u64, which in 0usize..3) {
        let k = &laurent_towers()[which];
        let t = k.generator().unwrap();
        let alg = QuaternionAlgebra::new(k, &k.from_int(-1), &t).unwrap();
        let mut r = rng(seed);
        let x = alg.random(&mut r, 3);
        let y = alg.random(&mut r, 3);
        prop_assert_eq!((&x * &y).nrd(), &x.nrd() * &y.nrd());
        prop_assert_eq!(&x * &x.conj(), alg.scalar(&x.nrd()));
        prop_assert_eq!((&x * &y).conj(), &y.conj() * &x.conj());
    }

    #[test]
    fn symbols_depend_on_square_classes(seed: u64, which in 0usize..3) {
        let k = &laurent_towers()[which];
        let mut r = rng(seed);
        let a = random_nonzero(k, &mut r, 3);
        let b = random_nonzero(k, &mut r, 3);
        let c = random_nonzero(k, &mut r, 3);
        let scaled = symbol_class(&(&a * &c.square()), &b).unwrap();
        prop_assert_eq!(brauer_equal(&symbol_class(&a, &b).unwrap(), &scaled), Ok(true));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn adjoint_involution_and_reduced_norm(seed: u64) {
        let q = FieldTower::rationals();
        let alg = QuaternionAlgebra::new(&q, &q.from_int(-1), &q.from_int(-3)).unwrap();
        let form = SkewHermitianForm::skew_hermitian(&alg, vec![alg.i(), alg.j()]).unwrap();
        let asig = InvolutionAlgebra::new(form).unwrap();
        let mut r = rng(seed);
        let g = QMatrix::random(&alg, 2, &mut r, 2);
        let h = QMatrix::random(&alg, 2, &mut r, 2);
        let sg = asig.apply(&g).unwrap();
        prop_assert_eq!(&asig.apply(&sg).unwrap(), &g);
        prop_assert_eq!(asig.apply(&(&g * &h)).unwrap(), &asig.apply(&h).unwrap() * &sg);
        let nrd = |m: &QMatrix| asig.reduced_norm(m).unwrap();
        prop_assert_eq!(nrd(&(&g * &h)), &nrd(&g) * &nrd(&h));
    }
}
