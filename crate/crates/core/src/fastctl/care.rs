use nalgebra::{Complex, DMatrix};

use crate::{Error, Real, Result};

const MAX_NEWTON: usize = 200;

/// Solves `Aᵀ P + P A + C = 0` by Kronecker linearization,
/// `(I ⊗ Aᵀ + Aᵀ ⊗ I) vec P = −vec C`. Dense, for small `A`.
pub fn solve_lyapunov<T: Real>(a: &DMatrix<T>, c: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    if !a.is_square() || c.shape() != (n, n) {
        return Err(Error::dim("Lyapunov equation", n * n, c.nrows() * c.ncols()));
    }
    let eye = DMatrix::<T>::identity(n, n);
    let at = a.transpose();
    let big = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = -DMatrix::from_column_slice(n * n, 1, c.as_slice());
    let sol = big.lu().solve(&rhs).ok_or(Error::Singular { what: "Lyapunov operator" })?;
    let p = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&p + p.transpose()) * T::lit(0.5))
}

/// `Aᵀ P + P A − P B R⁻¹ Bᵀ P + Q`.
pub fn care_residual<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, q: &DMatrix<T>, r: &DMatrix<T>, p: &DMatrix<T>) -> Result<DMatrix<T>> {
    let r_inv_bt = r.clone().cholesky().ok_or(Error::Singular { what: "R" })?.solve(&b.transpose());
    Ok(a.transpose() * p + p * a - p * b * r_inv_bt * p + q)
}

pub fn max_real_part<T: Real>(m: &DMatrix<T>) -> T {
    m.complex_eigenvalues().iter().map(|z| z.re).fold(T::min_value().unwrap_or(-T::one()), |a, b| a.max(b))
}

pub fn is_hurwitz<T: Real>(m: &DMatrix<T>) -> bool {
    max_real_part(m) < T::zero()
}

fn complexify<T: Real>(m: &DMatrix<T>) -> DMatrix<Complex<T>> {
    m.map(|v| Complex::new(v, T::zero()))
}

fn full_rank<T: Real>(m: &DMatrix<Complex<T>>, n: usize) -> bool {
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(T::zero(), |a, b| a.max(b));
    let tol = max * T::lit(1e-9).max(T::default_epsilon() * T::lit(1e3));
    sv.iter().filter(|s| **s > tol).count() >= n
}

/// Popov–Belevitch–Hautus tests over the eigenvalues of `A` with
/// `Re λ ≥ −margin`: `[A − λI, B]` (stabilizability) and `[A − λI; Q]`
/// (detectability of `(Q^{1/2}, A)`) must have full rank.
pub fn pbh_check<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, q: &DMatrix<T>) -> Result<()> {
    let n = a.nrows();
    let margin = T::lit(1e-9) * (T::one() + a.amax());
    let ac = complexify(a);
    for lam in a.complex_eigenvalues().iter() {
        if lam.re < -margin {
            continue;
        }
        let mut shifted = ac.clone();
        for i in 0..n {
            shifted[(i, i)] -= *lam;
        }
        let mut wide = DMatrix::zeros(n, n + b.ncols());
        wide.view_mut((0, 0), (n, n)).copy_from(&shifted);
        wide.view_mut((0, n), (n, b.ncols())).copy_from(&complexify(b));
        if !full_rank(&wide, n) {
            return Err(Error::Design(format!("(A, B) is not stabilizable: mode {:.4}{:+.4}i is uncontrollable", lam.re, lam.im)));
        }
        let mut tall = DMatrix::zeros(2 * n, n);
        tall.view_mut((0, 0), (n, n)).copy_from(&shifted);
        tall.view_mut((n, 0), (n, n)).copy_from(&complexify(q));
        if !full_rank(&tall, n) {
            return Err(Error::Design(format!("(Q, A) is not detectable: mode {lam} is unobservable")));
        }
    }
    Ok(())
}

/// Initial stabilizing gain: zero if `A` is already Hurwitz, otherwise the Bass
/// gain `Bᵀ Z⁻¹` with `(A + sI) Z + Z (A + sI)ᵀ = 2 B Bᵀ` and `−(A + sI)`
/// Hurwitz.
fn initial_gain<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    if is_hurwitz(a) {
        return Ok(DMatrix::zeros(b.ncols(), n));
    }
    let shift_min = a.complex_eigenvalues().iter().map(|z| -z.re).fold(T::zero(), |x, y| x.max(y));
    let shift = shift_min + T::one() + a.amax() * T::lit(0.1);
    let shifted = a + DMatrix::identity(n, n) * shift;
    let z = solve_lyapunov(&(-shifted.transpose()), &(b * b.transpose() * T::lit(2.0)))?;
    let chol = z.cholesky().ok_or_else(|| Error::Design("no stabilizing initial gain (Bass Gramian is singular)".into()))?;
    let k0 = chol.solve(b).transpose();
    if !is_hurwitz(&(a - b * &k0)) {
        return Err(Error::Design("initial gain is not stabilizing".into()));
    }
    Ok(k0)
}

/// Stabilizing solution of `Aᵀ P + P A − P B R⁻¹ Bᵀ P + Q = 0` and the
/// classical gain `K = R⁻¹ Bᵀ P` (for `u = −K x`), by Newton–Kleinman.
pub fn solve_care_raw<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, q: &DMatrix<T>, r: &DMatrix<T>) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let n = a.nrows();
    if !a.is_square() || b.nrows() != n || q.shape() != (n, n) || r.shape() != (b.ncols(), b.ncols()) {
        return Err(Error::Design(format!(
            "inconsistent dimensions: A {:?}, B {:?}, Q {:?}, R {:?}",
            a.shape(),
            b.shape(),
            q.shape(),
            r.shape()
        )));
    }
    pbh_check(a, b, q)?;
    let r_chol = r.clone().cholesky().ok_or(Error::Singular { what: "R" })?;
    let mut k = initial_gain(a, b)?;
    let mut p_prev: Option<DMatrix<T>> = None;
    let tol = T::default_epsilon() * T::lit(64.0);
    for _ in 0..MAX_NEWTON {
        let ak = a - b * &k;
        let c = q + k.transpose() * r * &k;
        let p = solve_lyapunov(&ak, &c)?;
        k = r_chol.solve(&(b.transpose() * &p));
        if let Some(prev) = &p_prev {
            let step = (&p - prev).amax();
            if step <= tol * (T::one() + p.amax()) {
                return Ok((p, k));
            }
        }
        p_prev = Some(p);
    }
    // Newton converges quadratically; a stall at round-off level is accepted
    // and judged by the caller's residual check.
    let p = p_prev.unwrap_or_else(|| DMatrix::zeros(n, n));
    Ok((p, k))
}
