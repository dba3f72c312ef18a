use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::reduce::{reduce_amplitude, reduce_to_z, ReducedDensity, ReductionMode, ZWindow};
use crate::grid::WavefunctionGrid;
use crate::{Error, Result};

/// Largest tolerated `|Im W|` before the real part is kept.
pub const IMAG_RESIDUE_LIMIT: f64 = 1e-8;

/// `W(z, p)` on a rectangular `(z, p)` sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceMap {
    pub z: Vec<f64>,
    /// Ascending, `p_k = πk/(n_ζ dz)` for `k = −n_ζ/2 .. n_ζ/2 − 1`.
    pub p: Vec<f64>,
    pub dz: f64,
    pub dp: f64,
    /// Row-major `[z][p]`.
    pub w: Vec<f64>,
    pub time: f64,
    /// Largest imaginary part discarded.
    pub imag_residue: f64,
}

impl PhaseSpaceMap {
    pub fn n_z(&self) -> usize {
        self.z.len()
    }

    pub fn n_p(&self) -> usize {
        self.p.len()
    }

    #[inline]
    pub fn get(&self, a: usize, k: usize) -> f64 {
        self.w[a * self.p.len() + k]
    }

    pub fn row(&self, a: usize) -> &[f64] {
        let n = self.p.len();
        &self.w[a * n..(a + 1) * n]
    }

    /// `Σ_p W dp` for every `z` row.
    pub fn position_marginal(&self) -> Vec<f64> {
        (0..self.n_z()).map(|a| self.row(a).iter().sum::<f64>() * self.dp).collect()
    }

    /// `Σ_z W dz` for every `p` column.
    pub fn momentum_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_p()];
        for a in 0..self.n_z() {
            for (o, w) in out.iter_mut().zip(self.row(a)) {
                *o += w * self.dz;
            }
        }
        out
    }

    pub fn total(&self) -> f64 {
        self.w.iter().sum::<f64>() * self.dz * self.dp
    }

    pub fn max_abs(&self) -> f64 {
        self.w.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// `argmax_p W(z_a, p)`.
    pub fn ridge(&self, a: usize) -> f64 {
        let row = self.row(a);
        let k = (0..row.len()).max_by(|&i, &j| row[i].total_cmp(&row[j])).unwrap_or(0);
        self.p[k]
    }

    /// Row index nearest to `z`, if `z` lies within the map.
    pub fn row_near(&self, z: f64) -> Option<usize> {
        let first = *self.z.first()?;
        let a = ((z - first) / self.dz).round();
        (a >= 0.0 && (a as usize) < self.z.len()).then_some(a as usize)
    }
}

/// Transform length for coherence lags up to `max_lag` grid steps.
fn transform_len(max_lag: usize) -> usize {
    (2 * max_lag + 2).next_power_of_two()
}

/// Wigner function of every row of `rd`, coherence over the whole support.
pub fn wigner(rd: &ReducedDensity) -> Result<PhaseSpaceMap> {
    wigner_rows(rd, 0..rd.n, rd.n.saturating_sub(1))
}

/// Wigner rows `rows` of `rd`, with `|ζ| ≤ max_lag·dz`; `ρ_red` is taken as
/// zero outside its support.
pub fn wigner_rows(rd: &ReducedDensity, rows: std::ops::Range<usize>, max_lag: usize) -> Result<PhaseSpaceMap> {
    if rows.end > rd.n || rows.is_empty() {
        return Err(Error::InvalidInput(format!("rows {rows:?} outside support of {}", rd.n)));
    }
    let n_zeta = transform_len(max_lag);
    let half = n_zeta / 2;
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(n_zeta);
    let dp = PI / (n_zeta as f64 * rd.dz);
    let p: Vec<f64> = (0..n_zeta).map(|i| (i as f64 - half as f64) * dp).collect();
    let scale = rd.dz / PI;
    let mut buf = vec![Complex64::new(0.0, 0.0); n_zeta];
    let mut w = Vec::with_capacity(rows.len() * n_zeta);
    let mut residue = 0.0f64;
    for a in rows.clone() {
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        let reach = max_lag.min(a).min(rd.n - 1 - a);
        for m in 0..=reach {
            // ζ = +m dz → ρ(z − ζ, z + ζ); ζ = −m dz → ρ(z + ζ, z − ζ)
            buf[m] = rd.get(a - m, a + m);
            if m > 0 {
                buf[n_zeta - m] = rd.get(a + m, a - m);
            }
        }
        fft.process(&mut buf);
        // reorder k = −n/2 .. n/2 − 1
        for i in 0..n_zeta {
            let c = buf[(i + half) % n_zeta] * scale;
            residue = residue.max(c.im.abs());
            w.push(c.re);
        }
    }
    if residue > IMAG_RESIDUE_LIMIT {
        return Err(Error::ImagResidue {
            residue,
            limit: IMAG_RESIDUE_LIMIT,
        });
    }
    Ok(PhaseSpaceMap {
        z: rows.map(|a| rd.z(a)).collect(),
        p,
        dz: rd.dz,
        dp,
        w,
        time: rd.time,
        imag_residue: residue,
    })
}

/// Overlapping output windows of `width` covering `[z_lo, z_hi]`.
pub fn tile_windows(z_lo: f64, z_hi: f64, width: f64, overlap: f64) -> Vec<ZWindow> {
    if z_hi - z_lo <= width {
        return vec![ZWindow::new(z_lo, z_hi)];
    }
    let stride = width * (1.0 - overlap);
    let mut out = Vec::new();
    let mut lo = z_lo;
    loop {
        let hi = (lo + width).min(z_hi);
        out.push(ZWindow::new(lo, hi));
        if hi >= z_hi {
            break;
        }
        lo += stride;
    }
    out
}

/// Wigner maps for a set of output windows sharing one coherence length.
///
/// Each tile reduces the field over its window padded by `max_lag` steps on
/// both sides, so rows shared by two tiles see identical sums.
pub fn wigner_tiled(
    wf: &WavefunctionGrid,
    tiles: &[ZWindow],
    max_lag: usize,
    mode: ReductionMode,
    memory_budget: u64,
) -> Result<Vec<PhaseSpaceMap>> {
    let g = &wf.grid;
    let pad = max_lag as f64 * g.dz();
    tiles
        .iter()
        .map(|tile| {
            let (lo, hi) = tile.indices(wf)?;
            let support = ZWindow::new((g.z(lo) - pad).max(g.z_min), (g.z(hi) + pad).min(g.z_max));
            let rd = match mode {
                ReductionMode::DensityMatrix => reduce_to_z(wf, support, memory_budget)?,
                ReductionMode::Amplitude => reduce_amplitude(wf, support, memory_budget)?,
            };
            let (s_lo, _) = support.indices(wf)?;
            wigner_rows(&rd, (lo - s_lo)..(hi - s_lo + 1), max_lag)
        })
        .collect()
}

/// `max |W_density − W_amplitude|` over `window`.
pub fn reduction_discrepancy(wf: &WavefunctionGrid, window: ZWindow, memory_budget: u64) -> Result<f64> {
    let a = wigner(&reduce_to_z(wf, window, memory_budget)?)?;
    let b = wigner(&reduce_amplitude(wf, window, memory_budget)?)?;
    Ok(a.w.iter().zip(&b.w).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())))
}
