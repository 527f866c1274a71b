use proptest::prelude::*;
use wdro_core::costs::{eval_cost, CostSpec, ExtReal, GroundNorm};
use wdro_core::linalg::Matrix;
use wdro_core::space::{Label, Point};

fn norms_of(n: usize) -> impl Strategy<Value = GroundNorm> {
    prop_oneof![
        Just(GroundNorm::L1),
        Just(GroundNorm::L2),
        Just(GroundNorm::Linf),
        prop::collection::vec(0.2..3.0f64, n).prop_map(|weights| GroundNorm::WeightedL2 { weights }),
    ]
}

fn norms() -> impl Strategy<Value = GroundNorm> {
    norms_of(3)
}

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 3)
}

fn matrix_2x3() -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0..2.0f64, 6).prop_filter_map("well conditioned", |v| {
        let m = Matrix::from_rows(vec![v[..3].to_vec(), v[3..].to_vec()]).unwrap();
        let g = m.gram();
        let det = g[0] * g[3] - g[1] * g[2];
        (det > 0.1).then_some(m)
    })
}

/// Cost, a base point and a feasible displacement direction.
fn cost_case() -> impl Strategy<Value = (CostSpec, Point, Point)> {
    (norms(), norms_of(4), vec3(), vec3(), -2.0..2.0f64, -2.0..2.0f64, matrix_2x3(), prop::collection::vec(-1.0..1.0f64, 2))
        .prop_flat_map(|(norm, full, x, u, y, dy, b, w)| {
            let lab = |x: Vec<f64>, y: f64| Point::Labeled { x, y };
            let feat = |dir: &[f64]| lab(dir.to_vec(), 0.0);
            let l2n = GroundNorm::L2;
            let sub: Vec<f64> = vec![u[0], 0.0, u[2]];
            let range = b.tr_mul_vec(&w);
            let mut cases = vec![
                (CostSpec::FullNorm { norm: full }, lab(x.clone(), y), lab(u.clone(), dy)),
                (CostSpec::FeatureNormLabelIndicator { norm: norm.clone() }, lab(x.clone(), y), feat(&u)),
                (CostSpec::SubsetNorm { norm: l2n.clone(), index_set: vec![0, 2] }, lab(x.clone(), y), feat(&sub)),
                (CostSpec::SemiNormB { b: b.clone() }, lab(x.clone(), y), feat(&range)),
                (CostSpec::PlainNorm { norm: norm.clone() }, Point::Plain(x.clone()), Point::Plain(u.clone())),
                (CostSpec::AbsoluteScalar, Point::Plain(vec![x[0]]), Point::Plain(vec![u[0]])),
                (
                    CostSpec::FeatureNormLabelIndicator { norm },
                    Point::Binary { x: x.clone(), y: Label::Neg },
                    Point::Binary { x: u.clone(), y: Label::Neg },
                ),
            ];
            let f = Point::sampled(x.clone(), y).unwrap();
            let g = Point::sampled(u.clone(), 0.0).unwrap();
            cases.push((CostSpec::L2FunctionLabelIndicator, f, g));
            prop::sample::select(cases)
        })
}

fn add(z: &Point, dir: &Point, t: f64) -> Point {
    let mut p = z.shifted(dir.features(), t);
    if let (Point::Labeled { y, .. }, Some(dy)) = (&mut p, dir.label()) {
        *y += t * dy;
    }
    p
}

fn finite(c: ExtReal) -> f64 {
    c.finite().expect("finite cost")
}

proptest! {
    #[test]
    fn cost_vanishes_on_the_diagonal((spec, z, _) in cost_case()) {
        prop_assert_eq!(eval_cost(&spec, &z, &z).unwrap(), ExtReal::Finite(0.0));
    }

    #[test]
    fn product_cost_vanishes_on_the_diagonal(x in vec3(), y in -2.0..2.0f64) {
        let z = Point::Labeled { x, y };
        prop_assert_eq!(eval_cost(&CostSpec::ProductCost, &z, &z).unwrap(), ExtReal::Finite(0.0));
    }

    #[test]
    fn norm_costs_are_absolutely_homogeneous((spec, z, u) in cost_case(), t in -4.0..4.0f64) {
        let unit = finite(eval_cost(&spec, &add(&z, &u, 1.0), &z).unwrap());
        let scaled = finite(eval_cost(&spec, &add(&z, &u, t), &z).unwrap());
        prop_assert!((scaled - t.abs() * unit).abs() <= 1e-9 * (1.0 + scaled), "{scaled} vs {}", t.abs() * unit);
    }

    #[test]
    fn holder_inequality_and_achiever(norm in norms(), v in vec3(), w in vec3()) {
        prop_assume!(v.iter().any(|c| c.abs() > 1e-6));
        let dual = norm.dual_norm(&v).unwrap();
        let inner: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        prop_assert!(inner <= dual * norm.norm(&w).unwrap() + 1e-12);
        let a = norm.dual_achiever(&v).unwrap();
        let at: f64 = v.iter().zip(&a).map(|(p, q)| p * q).sum();
        prop_assert!((norm.norm(&a).unwrap() - 1.0).abs() <= 1e-12);
        prop_assert!((at - dual).abs() <= 1e-12 * (1.0 + dual));
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn semi_norm_matches_brute_force(b in matrix_2x3(), w in prop::collection::vec(-1.0..1.0f64, 2)) {
        let v = b.tr_mul_vec(&w);
        let spec = CostSpec::SemiNormB { b: b.clone() };
        let z = Point::Labeled { x: vec![0.0; 3], y: 0.0 };
        let zp = Point::Labeled { x: v.clone(), y: 0.0 };
        let d = finite(eval_cost(&spec, &zp, &z).unwrap());
        // Coarse-to-fine search for the preimage of v under B^T.
        let resid = |u: [f64; 2]| -> f64 {
            let r = b.tr_mul_vec(&u);
            r.iter().zip(&v).map(|(p, q)| (p - q) * (p - q)).sum()
        };
        let mut center = [0.0, 0.0];
        let mut half = 4.0;
        for _ in 0..150 {
            let mut best = (f64::INFINITY, center);
            for i in -10..=10 {
                for j in -10..=10 {
                    let u = [center[0] + half * i as f64 / 10.0, center[1] + half * j as f64 / 10.0];
                    let r = resid(u);
                    if r < best.0 {
                        best = (r, u);
                    }
                }
            }
            center = best.1;
            half *= 0.8;
        }
        let brute = (center[0] * center[0] + center[1] * center[1]).sqrt();
        prop_assert!((d - brute).abs() <= 1e-6, "{d} vs {brute}");
    }

    #[test]
    fn semi_norm_is_infinite_off_the_range(b in matrix_2x3(), t in 0.1..2.0f64) {
        let n = [
            b.get(0, 1) * b.get(1, 2) - b.get(0, 2) * b.get(1, 1),
            b.get(0, 2) * b.get(1, 0) - b.get(0, 0) * b.get(1, 2),
            b.get(0, 0) * b.get(1, 1) - b.get(0, 1) * b.get(1, 0),
        ];
        let z = Point::Labeled { x: vec![0.0; 3], y: 0.0 };
        let zp = Point::Labeled { x: n.iter().map(|c| c * t).collect(), y: 0.0 };
        prop_assert_eq!(eval_cost(&CostSpec::SemiNormB { b }, &zp, &z).unwrap(), ExtReal::Infinite);
    }
}
