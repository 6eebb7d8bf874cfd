use mendel_ode::analysis::{
    eigen_small, reformulate_projection, reformulate_state_scaled, steady_state_catalog, AffineFunctional,
    ScalarField,
};
use mendel_ode::models::{
    deviation_analytic, deviation_system, modified2_system, modified3_system, mutation2_system,
    proportions3_system, rhs_modified2, rhs_modified3, rhs_proportions3, rhs_proportions3_matrix,
    InheritanceMatrices, MutationParameter, SystemId,
};
use mendel_ode::tableau::verify_order_conditions;
use mendel_ode::{integrate, Method, OdeSystem, SolverConfig, SquareMatrix, Termination};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mutation() -> impl Strategy<Value = MutationParameter> {
    (0.0..=1.0f64).prop_map(|a| MutationParameter::new(a).unwrap())
}

fn method() -> impl Strategy<Value = Method> {
    prop::sample::select(Method::ALL.to_vec())
}

fn sup(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
}

#[test]
fn shipped_tableaus_satisfy_their_conditions() {
    for m in Method::ALL {
        let tbl = m.tableau();
        tbl.check_invariants(1e-12).unwrap();
        for r in verify_order_conditions(&tbl, tbl.order.min(4)).unwrap() {
            assert!(r.residual.abs() <= 1e-12, "{m}: {r:?}");
        }
        if tbl.fsal {
            let last = tbl.a.last().unwrap();
            for (x, y) in tbl.b.iter().zip(last) {
                let d: f64 = num_traits::ToPrimitive::to_f64(&(x - y)).unwrap();
                assert!(d.abs() <= 1e-12, "{m}");
            }
        }
    }
}

#[test]
fn matrix_form_and_sum_identities() {
    let w = InheritanceMatrices::<f64>::standard();
    w.check().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = MutationParameter::new(0.7).unwrap();
    for _ in 0..10_000 {
        let q: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.0..1.5));
        let direct = rhs_proportions3(&q);
        let via = rhs_proportions3_matrix(&q, &w);
        assert!(sup(&direct, &via) <= 1e-13);
        let s: f64 = q.iter().sum();
        assert!((direct.iter().sum::<f64>() - (s * s - s)).abs() <= 1e-13);
        assert!(rhs_modified3(&q).iter().sum::<f64>().abs() <= 1e-15);
        let q2 = [q[0], q[1]];
        assert!(rhs_modified2(&q2, a).iter().sum::<f64>().abs() <= 1e-15);
    }
}

#[test]
fn reformulations_agree_with_original_on_the_manifold() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = MutationParameter::new(0.7).unwrap();
    for (f, shipped) in [
        (mutation2_system::<f64>(a), modified2_system::<f64>(a)),
        (proportions3_system(), modified3_system()),
    ] {
        let n = f.dim();
        let j = AffineFunctional::deviation(n);
        let projected = reformulate_projection(&f, &j, &ScalarField::sum()).unwrap();
        let scaled = reformulate_state_scaled(&f, &j, &ScalarField::sum()).unwrap();
        for _ in 0..10_000 {
            let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..2.0)).collect();
            let shift = (q.iter().sum::<f64>() - 1.0) / n as f64;
            q.iter_mut().for_each(|x| *x -= shift);
            let base = f.eval(&q);
            assert!(sup(&base, &projected.eval(&q)) <= 1e-13);
            assert!(sup(&base, &scaled.eval(&q)) <= 1e-13);
            assert!(sup(&base, &shipped.eval(&q)) <= 1e-13);
        }
    }
}

#[test]
fn catalog_states_are_steady() {
    let a = MutationParameter::new(0.3).unwrap();
    for id in [SystemId::Orig2, SystemId::Mod2, SystemId::Orig3, SystemId::Mod3] {
        let records = steady_state_catalog(id, a, 25).unwrap();
        assert!(!records.is_empty());
        for r in records {
            assert!(r.residual <= 1e-12, "{id}: {:?}", r.point);
        }
    }
}

fn run(system: &OdeSystem<f64>, q0: &[f64], m: Method, tol: f64, t_end: f64) -> mendel_ode::Trajectory<f64> {
    let cfg = SolverConfig::new(t_end).with_tolerances(tol, tol);
    integrate(system, q0, &m.tableau(), &cfg).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 48,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x6d65_6e64),
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn modified_runs_conserve_the_sum(
        a in mutation(),
        m in method(),
        q in prop::array::uniform3(0.0..1.5f64),
        three in any::<bool>(),
        tol in prop::sample::select(vec![1e-6, 1e-8, 1e-10]),
    ) {
        let (system, q0) = if three {
            (modified3_system(), q.to_vec())
        } else {
            (modified2_system(a), q[..2].to_vec())
        };
        let traj = run(&system, &q0, m, tol, 20.0);
        prop_assert_eq!(traj.termination, Termination::ReachedTEnd);
        let s0: f64 = q0.iter().sum();
        let bound = 100.0 * f64::EPSILON * traj.n_accepted.max(1) as f64;
        for q in &traj.states {
            prop_assert!((q.iter().sum::<f64>() - s0).abs() <= bound);
        }
        let halved = run(&system, &q0, m, tol / 2.0, 20.0);
        prop_assert_eq!(halved.termination, traj.termination);
    }

    #[test]
    fn trajectories_are_ordered_and_finite(
        id in prop::sample::select(vec![SystemId::Orig2, SystemId::Mod2, SystemId::Orig3, SystemId::Mod3]),
        a in mutation(),
        m in method(),
        q in prop::array::uniform3(-0.5..1.5f64),
    ) {
        let system = id.build::<f64>(a);
        let traj = run(&system, &q[..system.dim()], m, 1e-7, 60.0);
        prop_assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(traj.states.iter().flatten().all(|x| x.is_finite()));
        prop_assert_eq!(traj.states.len(), traj.n_accepted + 1);
    }

    // Tiny positive u0 spends a long time in e^t growth, which amplifies global error past the bound.
    #[test]
    fn deviation_matches_closed_form(
        u0 in prop_oneof![-0.9..-0.01f64, 0.03..2.0f64],
        m in method(),
        tol in prop::sample::select(vec![1e-6, 1e-8]),
    ) {
        let t_end = match mendel_ode::models::deviation_blowup_time(u0) {
            Some(t_star) => 0.9 * t_star,
            None => 5.0,
        };
        let traj = run(&deviation_system(), &[u0], m, tol, t_end);
        prop_assert_eq!(traj.termination, Termination::ReachedTEnd);
        for (t, q) in traj.times.iter().zip(&traj.states) {
            let exact = deviation_analytic(u0, *t).unwrap();
            prop_assert!((q[0] - exact).abs() <= 10.0 * tol.max(tol * exact.abs()), "t={} u={} exact={}", t, q[0], exact);
        }
    }

    #[test]
    fn eigenpairs_have_small_residuals(entries in prop::collection::vec(-3.0..3.0f64, 9), two in any::<bool>()) {
        let n = if two { 2 } else { 3 };
        let mut m = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = entries[3 * i + j];
            }
        }
        let eig = eigen_small(&m).unwrap();
        prop_assert_eq!(eig.values.len(), n);
        let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
        for (lambda, v) in eig.values.iter().zip(&eig.vectors) {
            let Some(v) = v else { continue };
            for i in 0..n {
                let mv: Complex64 = (0..n).map(|j| v[j] * m[(i, j)]).sum();
                prop_assert!((mv - lambda * v[i]).norm() <= 1e-8 * scale);
            }
        }
    }
}
