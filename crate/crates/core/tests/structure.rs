use flexlink::dynamics::{
    build_single_link, eval_partitioned, is_spd, min_eigenvalue, skew_matrix, ArmModel, ArmParams, FullState, ModalModel,
    TwoLinkArm, TwoLinkParams,
};
use flexlink::perturbation::invert_blocks;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn state(n: usize, m: usize, v: &[f64]) -> FullState<f64> {
    let mut it = v.iter().copied();
    let mut take = |k: usize| DVector::from_iterator(k, it.by_ref().take(k));
    FullState {
        q_r: take(n),
        q_f: take(m),
        dq_r: take(n),
        dq_f: take(m),
    }
}

fn models() -> Vec<Box<dyn ArmModel<f64>>> {
    let p = ArmParams::laboratory();
    vec![
        Box::new(build_single_link(p, ModalModel::reference(&p).unwrap()).unwrap()),
        Box::new(TwoLinkArm::rigid(TwoLinkParams::default())),
        Box::new(TwoLinkArm::with_flex()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn inertia_is_spd_everywhere(v in prop::collection::vec(-std::f64::consts::PI..std::f64::consts::PI, 8)) {
        for model in models() {
            let (n, m) = (model.n_rigid(), model.n_flex());
            let s = state(n, m, &v);
            let pd = eval_partitioned(model.as_ref(), &s).unwrap();
            prop_assert!(is_spd(&pd.mass()));
            prop_assert!(min_eigenvalue(&pd.m_rr) > 0.0);
            let hm = invert_blocks(&pd).unwrap().assemble() * pd.mass();
            prop_assert!((hm - DMatrix::identity(n + m, n + m)).amax() < 1e-10);
        }
    }

    #[test]
    fn coriolis_is_skew_compatible(v in prop::collection::vec(-5.0f64..5.0, 8)) {
        for model in [TwoLinkArm::rigid(TwoLinkParams::default()), TwoLinkArm::with_flex()] {
            let s = state(2, model.n_flex(), &v);
            let nmat = skew_matrix(&model, &s).unwrap();
            let sym = (&nmat + nmat.transpose()).norm();
            prop_assert!(sym <= 1e-9 * nmat.norm() + 1e-12, "{} vs {}", sym, nmat.norm());
        }
    }
}

#[test]
fn reference_plant_skew_matrix_is_zero_in_the_rigid_block() {
    let p = ArmParams::laboratory();
    let plant = build_single_link(p, ModalModel::reference(&p).unwrap()).unwrap();
    let s = state(1, 2, &[0.3, 0.01, -0.02, 1.0, 0.4, -0.7]);
    let n = skew_matrix(&plant, &s).unwrap();
    assert_eq!(n[(0, 0)], 0.0);
    assert_eq!(plant.mass_rate(&s), DMatrix::zeros(3, 3));
}
