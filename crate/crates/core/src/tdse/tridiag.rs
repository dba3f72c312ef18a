//! Pre-factorized Cayley factors `(1 + αA)⁻¹(1 − αA)` for tridiagonal `A`.

use num_complex::Complex64;

use super::operators::{AxialStencil, RadialStencil};
use crate::{Error, Result};

/// Thomas-algorithm factorization of `1 + αA`.
#[derive(Debug, Clone)]
struct Factored {
    /// Sub-diagonal of the left matrix.
    lower: Vec<Complex64>,
    /// Reciprocal pivots.
    inv_pivot: Vec<Complex64>,
    /// Normalized super-diagonal `c'`.
    c_prime: Vec<Complex64>,
}

impl Factored {
    fn new(lower: &[Complex64], diag: &[Complex64], upper: &[Complex64]) -> Result<Self> {
        let n = diag.len();
        let mut inv_pivot = vec![Complex64::new(0.0, 0.0); n];
        let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
        let mut prev_c = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let m = diag[i] - if i > 0 { lower[i] * prev_c } else { Complex64::new(0.0, 0.0) };
            if !(m.norm() > 1e-300) || !m.re.is_finite() || !m.im.is_finite() {
                return Err(Error::SolverSingular { row: i });
            }
            inv_pivot[i] = m.inv();
            c_prime[i] = upper[i] * inv_pivot[i];
            prev_c = c_prime[i];
        }
        Ok(Factored {
            lower: lower.to_vec(),
            inv_pivot,
            c_prime,
        })
    }
}

/// Cayley factor of the axial stencil, applied to every `ρ` column at once.
#[derive(Debug, Clone)]
pub struct AxialCayley {
    right_diag: Complex64,
    right_off: Complex64,
    fac: Factored,
}

impl AxialCayley {
    pub fn new(st: &AxialStencil, alpha: Complex64) -> Result<Self> {
        let n = st.n;
        let one = Complex64::new(1.0, 0.0);
        let off = vec![alpha * st.off; n];
        let diag = vec![one + alpha * st.diag; n];
        let mut lower = off.clone();
        lower[0] = Complex64::new(0.0, 0.0);
        let mut upper = off;
        upper[n - 1] = Complex64::new(0.0, 0.0);
        Ok(AxialCayley {
            right_diag: one - alpha * st.diag,
            right_off: -alpha * st.off,
            fac: Factored::new(&lower, &diag, &upper)?,
        })
    }

    /// In place on a `z`-major field with `width` columns; `work` is scratch of equal size.
    pub fn apply(&self, psi: &mut [Complex64], work: &mut [Complex64], width: usize) {
        let n = psi.len() / width;
        // right-hand side
        for k in 0..n {
            let row = &psi[k * width..(k + 1) * width];
            let dst = &mut work[k * width..(k + 1) * width];
            for j in 0..width {
                let mut nb = Complex64::new(0.0, 0.0);
                if k > 0 {
                    nb += psi[(k - 1) * width + j];
                }
                if k + 1 < n {
                    nb += psi[(k + 1) * width + j];
                }
                dst[j] = row[j] * self.right_diag + nb * self.right_off;
            }
        }
        // forward elimination
        for k in 0..n {
            let inv = self.fac.inv_pivot[k];
            let low = self.fac.lower[k];
            let (done, rest) = work.split_at_mut(k * width);
            let cur = &mut rest[..width];
            if k > 0 {
                let prev = &done[(k - 1) * width..];
                for j in 0..width {
                    cur[j] = (cur[j] - low * prev[j]) * inv;
                }
            } else {
                for c in cur.iter_mut() {
                    *c *= inv;
                }
            }
        }
        // back substitution
        psi[(n - 1) * width..].copy_from_slice(&work[(n - 1) * width..]);
        for k in (0..n - 1).rev() {
            let cp = self.fac.c_prime[k];
            let (head, tail) = psi.split_at_mut((k + 1) * width);
            let next = &tail[..width];
            let dst = &mut head[k * width..];
            let src = &work[k * width..(k + 1) * width];
            for j in 0..width {
                dst[j] = src[j] - cp * next[j];
            }
        }
    }
}

/// Cayley factor of the radial stencil, applied row by row.
#[derive(Debug, Clone)]
pub struct RadialCayley {
    r_lower: Vec<Complex64>,
    r_diag: Vec<Complex64>,
    r_upper: Vec<Complex64>,
    fac: Factored,
}

impl RadialCayley {
    pub fn new(st: &RadialStencil, alpha: Complex64) -> Result<Self> {
        let one = Complex64::new(1.0, 0.0);
        let scale = |v: &[f64], s: Complex64| v.iter().map(|x| s * x).collect::<Vec<_>>();
        let l_lower = scale(&st.lower, alpha);
        let l_upper = scale(&st.upper, alpha);
        let l_diag: Vec<_> = st.diag.iter().map(|d| one + alpha * d).collect();
        Ok(RadialCayley {
            r_lower: scale(&st.lower, -alpha),
            r_diag: st.diag.iter().map(|d| one - alpha * d).collect(),
            r_upper: scale(&st.upper, -alpha),
            fac: Factored::new(&l_lower, &l_diag, &l_upper)?,
        })
    }

    /// Solves every contiguous row of length `n_rho` in place; `scratch` has length `n_rho`.
    pub fn apply(&self, psi: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.r_diag.len();
        for row in psi.chunks_mut(n) {
            for j in 0..n {
                let mut r = self.r_diag[j] * row[j];
                if j > 0 {
                    r += self.r_lower[j] * row[j - 1];
                }
                if j + 1 < n {
                    r += self.r_upper[j] * row[j + 1];
                }
                let y = if j > 0 { r - self.fac.lower[j] * scratch[j - 1] } else { r };
                scratch[j] = y * self.fac.inv_pivot[j];
            }
            row[n - 1] = scratch[n - 1];
            for j in (0..n - 1).rev() {
                row[j] = scratch[j] - self.fac.c_prime[j] * row[j + 1];
            }
        }
    }
}
