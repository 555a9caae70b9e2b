//! LQR damping of the fast subsystem.
//!
//! The design minimizes `J = ∫ (φᵀQφ + τ̃ᵀRτ̃) dT` for `dφ/dT = A_F φ + B_F τ̃`.
//! Stored gains carry the feedback sign, so the law reads
//! `τ̃ = K_pf φ1 + K_df φ2` with `[K_pf K_df] = −R⁻¹ B_Fᵀ P`.

mod care;

pub use care::{care_residual, is_hurwitz, max_real_part, pbh_check, solve_care_raw, solve_lyapunov};

use nalgebra::{Complex, DMatrix, DVector};

use crate::perturbation::{FastModel, FastState};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LqrWeights<T: Real> {
    /// 2m × 2m, ordered `[φ1; φ2]` (all positions, then all rates).
    pub q: DMatrix<T>,
    pub r: DMatrix<T>,
}

impl<T: Real> LqrWeights<T> {
    pub fn new(q: DMatrix<T>, r: DMatrix<T>) -> Result<Self> {
        let w = Self { q, r };
        w.validate()?;
        Ok(w)
    }

    pub fn diagonal(q: &[T], r: &[T]) -> Result<Self> {
        Self::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(q)),
            DMatrix::from_diagonal(&DVector::from_column_slice(r)),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let sym_tol = |m: &DMatrix<T>| T::default_epsilon() * T::lit(16.0) * (T::one() + m.amax());
        if !self.q.is_square() || (&self.q - self.q.transpose()).amax() > sym_tol(&self.q) {
            return Err(Error::param("Q", "must be square and symmetric"));
        }
        if !self.q.is_empty() && crate::dynamics::min_eigenvalue(&self.q) < -sym_tol(&self.q) {
            return Err(Error::param("Q", "must be positive semidefinite"));
        }
        if !self.r.is_square() || (&self.r - self.r.transpose()).amax() > sym_tol(&self.r) {
            return Err(Error::param("R", "must be square and symmetric"));
        }
        if !crate::dynamics::is_spd(&self.r) {
            return Err(Error::param("R", "must be positive definite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LqrGains<T: Real> {
    /// inputs × m
    pub k_pf: DMatrix<T>,
    /// inputs × m
    pub k_df: DMatrix<T>,
    /// Stabilizing Riccati solution.
    pub p: DMatrix<T>,
}

impl<T: Real> LqrGains<T> {
    /// `[K_pf K_df]`.
    pub fn gain(&self) -> DMatrix<T> {
        let (p, m) = self.k_pf.shape();
        let mut k = DMatrix::zeros(p, 2 * m);
        k.view_mut((0, 0), (p, m)).copy_from(&self.k_pf);
        k.view_mut((0, m), (p, m)).copy_from(&self.k_df);
        k
    }

    /// `A_F + B_F [K_pf K_df]`.
    pub fn closed_loop(&self, model: &FastModel<T>) -> DMatrix<T> {
        &model.a + &model.b * self.gain()
    }

    pub fn closed_loop_eigenvalues(&self, model: &FastModel<T>) -> Vec<Complex<T>> {
        self.closed_loop(model).complex_eigenvalues().iter().copied().collect()
    }
}

/// Residual acceptance bound `1e-8 (1 + ‖Q‖max)`, relaxed to round-off level
/// for single precision.
pub fn residual_bound<T: Real>(q: &DMatrix<T>) -> T {
    T::lit(1e-8).max(T::default_epsilon() * T::lit(1e3)) * (T::one() + q.amax())
}

/// LQR design for the fast model. Fails with [`Error::Design`] when the pair
/// is not stabilizable/detectable, the residual is out of bound, or the closed
/// loop is not Hurwitz.
pub fn solve_care<T: Real>(model: &FastModel<T>, weights: &LqrWeights<T>) -> Result<LqrGains<T>> {
    weights.validate()?;
    let (a, b) = (&model.a, &model.b);
    if weights.q.shape() != a.shape() || weights.r.nrows() != b.ncols() {
        return Err(Error::Design(format!(
            "weights {:?}/{:?} do not match the fast model {:?}/{:?}",
            weights.q.shape(),
            weights.r.shape(),
            a.shape(),
            b.shape()
        )));
    }
    let (p, k) = solve_care_raw(a, b, &weights.q, &weights.r)?;
    let res = care_residual(a, b, &weights.q, &weights.r, &p)?.amax();
    let bound = residual_bound(&weights.q);
    if !(res < bound) {
        return Err(Error::Design(format!("Riccati residual {res:e} exceeds {bound:e}")));
    }
    let m = model.n_modes();
    let k = -k;
    let gains = LqrGains {
        k_pf: k.columns(0, m).into_owned(),
        k_df: k.columns(m, m).into_owned(),
        p,
    };
    let worst = max_real_part(&gains.closed_loop(model));
    if !(worst < T::zero()) {
        return Err(Error::Design(format!("closed loop is not Hurwitz (max Re λ = {worst})")));
    }
    Ok(gains)
}

/// `τ̃ = K_pf φ1 + K_df φ2`, in the fast model's input units.
pub fn fast_control<T: Real>(gains: &LqrGains<T>, phi: &FastState<T>) -> Result<DVector<T>> {
    if phi.phi1.len() != gains.k_pf.ncols() || phi.phi2.len() != gains.k_df.ncols() {
        return Err(Error::dim("fast state", gains.k_pf.ncols(), phi.phi1.len()));
    }
    Ok(&gains.k_pf * &phi.phi1 + &gains.k_df * &phi.phi2)
}

/// Trapezoidal `∫ (φᵀQφ + τ̃ᵀRτ̃) dT` over samples spaced `dt` apart.
pub fn cost<T: Real>(phi: &[DVector<T>], tau: &[DVector<T>], weights: &LqrWeights<T>, dt: T) -> Result<T> {
    if phi.len() != tau.len() {
        return Err(Error::dim("cost samples", phi.len(), tau.len()));
    }
    if !(dt > T::zero()) {
        return Err(Error::param("dt", "must be positive"));
    }
    let mut integrand = Vec::with_capacity(phi.len());
    for (x, u) in phi.iter().zip(tau) {
        if x.len() != weights.q.nrows() || u.len() != weights.r.nrows() {
            return Err(Error::dim("cost sample", weights.q.nrows(), x.len()));
        }
        integrand.push(x.dot(&(&weights.q * x)) + u.dot(&(&weights.r * u)));
    }
    let half = T::lit(0.5);
    Ok(integrand.windows(2).fold(T::zero(), |acc, w| acc + (w[0] + w[1]) * half * dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_single_link, eval_partitioned, ArmParams, FullState, ModalModel};
    use crate::perturbation::Decomposition;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference_fast(delta: f64) -> FastModel<f64> {
        let p = ArmParams::laboratory();
        let mut modal = ModalModel::reference(&p).unwrap();
        modal.delta = delta;
        let plant = build_single_link(p, modal).unwrap();
        let pd = eval_partitioned(&plant, &FullState::zeros(1, 2)).unwrap();
        Decomposition::new(pd).unwrap().fast_model().unwrap()
    }

    fn reference_weights() -> LqrWeights<f64> {
        LqrWeights::diagonal(&[150.0, 500.0, 1.0, 0.0], &[2.0]).unwrap()
    }

    fn m1(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    fn scalar_model(a: f64, b: f64) -> FastModel<f64> {
        FastModel { a: m1(a), b: m1(b), epsilon: 1.0 }
    }

    #[test]
    fn scalar_riccati_root() {
        let (p, k) = solve_care_raw(&m1(-1.0), &m1(1.0), &m1(1.0), &m1(1.0)).unwrap();
        let want = 2f64.sqrt() - 1.0;
        assert!((p[(0, 0)] - want).abs() < 1e-10);
        assert!((k[(0, 0)] - want).abs() < 1e-10);
    }

    #[test]
    fn scalar_unstable_plant_uses_bass_start() {
        // a = 1: p = 1 + √2, closed loop −√2
        let (p, _) = solve_care_raw(&m1(1.0), &m1(1.0), &m1(1.0), &m1(1.0)).unwrap();
        assert!((p[(0, 0)] - (1.0 + 2f64.sqrt())).abs() < 1e-10);
    }

    #[test]
    fn hurwitz_plant_with_zero_weight_needs_no_control() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, -3.0]);
        let model = FastModel { a, b: DMatrix::from_column_slice(2, 1, &[0.0, 1.0]), epsilon: 1.0 };
        let w = LqrWeights::new(DMatrix::zeros(2, 2), m1(1.0)).unwrap();
        let g = solve_care(&model, &w).unwrap();
        assert_eq!(g.p, DMatrix::zeros(2, 2));
        assert_eq!(g.gain(), DMatrix::zeros(1, 2));
    }

    #[test]
    fn reference_design() {
        let model = reference_fast(0.01);
        let w = reference_weights();
        let g = solve_care(&model, &w).unwrap();
        let res = care_residual(&model.a, &model.b, &w.q, &w.r, &g.p).unwrap().amax();
        assert!(res < 1e-8 * (1.0 + 500.0));
        assert!(g.closed_loop_eigenvalues(&model).iter().all(|z| z.re < 0.0));
        assert!(crate::dynamics::min_eigenvalue(&g.p) > -1e-9);
        // frozen from an independent scipy.linalg.solve_continuous_are run
        let golden = [-3.3554, -0.8191, -7.8284, -0.8262];
        for (got, want) in g.gain().iter().zip(golden) {
            assert!((got - want).abs() < 2e-3, "{got} vs {want}");
        }
    }

    #[test]
    fn undamped_reference_design_still_succeeds() {
        let model = reference_fast(0.0);
        assert!(solve_care(&model, &reference_weights()).is_ok());
    }

    #[test]
    fn uncontrollable_unstable_mode_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let model = FastModel { a, b: DMatrix::from_column_slice(2, 1, &[0.0, 1.0]), epsilon: 1.0 };
        let w = LqrWeights::new(DMatrix::identity(2, 2), m1(1.0)).unwrap();
        assert!(matches!(solve_care(&model, &w), Err(Error::Design(_))));
    }

    #[test]
    fn undetectable_marginal_mode_is_rejected() {
        // integrator with zero state weight: P = 0 is not stabilizing
        let w = LqrWeights::new(m1(0.0), m1(1.0)).unwrap();
        assert!(matches!(solve_care(&scalar_model(0.0, 1.0), &w), Err(Error::Design(_))));
    }

    #[test]
    fn weight_validation() {
        assert!(LqrWeights::diagonal(&[1.0, -1.0], &[1.0]).is_err());
        assert!(LqrWeights::diagonal(&[1.0, 1.0], &[0.0]).is_err());
        assert!(LqrWeights::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, 1.0]), m1(1.0)).is_err());
    }

    fn random_instance(rng: &mut ChaCha8Rng) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let n = 2 * rng.random_range(1..=3usize);
        let p = rng.random_range(1..=n.min(3));
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
        let b = DMatrix::from_fn(n, p, |_, _| rng.random_range(-2.0..2.0));
        let cq = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let q = &cq * cq.transpose() + DMatrix::identity(n, n) * 0.1;
        let cr = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
        let r = &cr * cr.transpose() + DMatrix::identity(p, p) * 0.5;
        (a, b, q, r)
    }

    #[test]
    fn random_instances_meet_the_residual_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let (a, b, q, r) = random_instance(&mut rng);
            let model = FastModel { a: a.clone(), b: b.clone(), epsilon: 1.0 };
            let w = LqrWeights::new(q.clone(), r.clone()).unwrap();
            let g = solve_care(&model, &w).unwrap();
            let res = care_residual(&a, &b, &q, &r, &g.p).unwrap().amax();
            assert!(res < residual_bound(&q), "residual {res}");
            assert!(is_hurwitz(&g.closed_loop(&model)));
        }
    }

    #[test]
    fn design_is_bit_deterministic() {
        let model = reference_fast(0.01);
        let a = solve_care(&model, &reference_weights()).unwrap();
        let b = solve_care(&model, &reference_weights()).unwrap();
        let bits = |g: &LqrGains<f64>| g.gain().iter().chain(g.p.iter()).map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn fast_law_is_linear() {
        let g = solve_care(&reference_fast(0.01), &reference_weights()).unwrap();
        let zero = FastState::zeros(2);
        assert_eq!(fast_control(&g, &zero).unwrap(), DVector::zeros(1));
        let phi = FastState { phi1: DVector::from_vec(vec![0.2, -0.1]), phi2: DVector::from_vec(vec![0.05, 0.3]) };
        let twice = FastState { phi1: &phi.phi1 * 2.0, phi2: &phi.phi2 * 2.0 };
        let u = fast_control(&g, &phi).unwrap();
        assert!((fast_control(&g, &twice).unwrap() - u * 2.0).amax() < 1e-14);
        let e1 = FastState { phi1: DVector::from_vec(vec![1.0, 0.0]), phi2: DVector::zeros(2) };
        assert_eq!(fast_control(&g, &e1).unwrap()[0], g.k_pf[(0, 0)]);
    }

    #[test]
    fn cost_quadrature() {
        let w = reference_weights();
        let zeros = vec![DVector::zeros(4); 11];
        assert_eq!(cost(&zeros, &vec![DVector::zeros(1); 11], &w, 0.1).unwrap(), 0.0);
        // φᵀQφ + τ̃ᵀRτ̃ = 150 + 2 = 152 for 1 time unit
        let phi = vec![DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]); 11];
        let tau = vec![DVector::from_element(1, 1.0); 11];
        assert!((cost(&phi, &tau, &w, 0.1).unwrap() - 152.0).abs() < 1e-12);
    }

    /// Closed-loop cost from `x0` under gain `k` over `horizon` fast-time units.
    fn closed_loop_cost(model: &FastModel<f64>, k: &DMatrix<f64>, w: &LqrWeights<f64>, x0: &DVector<f64>, horizon: f64) -> f64 {
        let dt = 1e-3;
        let steps = (horizon / dt).round() as usize;
        let acl = &model.a + &model.b * k;
        let f = |x: &DVector<f64>| &acl * x;
        let mut x = x0.clone();
        let (mut phis, mut taus) = (vec![x.clone()], vec![k * &x]);
        for _ in 0..steps {
            let k1 = f(&x);
            let k2 = f(&(&x + &k1 * (dt / 2.0)));
            let k3 = f(&(&x + &k2 * (dt / 2.0)));
            let k4 = f(&(&x + &k3 * dt));
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
            phis.push(x.clone());
            taus.push(k * &x);
        }
        cost(&phis, &taus, w, dt).unwrap()
    }

    #[test]
    fn lqr_gain_beats_zero_and_doubled_gain() {
        let model = reference_fast(0.01);
        let w = reference_weights();
        let g = solve_care(&model, &w).unwrap().gain();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let x0 = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let j_lqr = closed_loop_cost(&model, &g, &w, &x0, 10.0);
            let j_zero = closed_loop_cost(&model, &DMatrix::zeros(1, 4), &w, &x0, 10.0);
            let j_double = closed_loop_cost(&model, &(&g * 2.0), &w, &x0, 10.0);
            assert!(j_lqr < j_zero && j_lqr < j_double, "{j_lqr} {j_zero} {j_double}");
            // infinite-horizon optimum is x0ᵀPx0; the finite window cannot exceed it by much
            let p = solve_care(&model, &w).unwrap().p;
            assert!(j_lqr <= x0.dot(&(&p * &x0)) * (1.0 + 1e-6));
        }
    }
}
