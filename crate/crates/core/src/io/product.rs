//! Raw little-endian arrays with a TOML sidecar describing them.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::grid::{CylGrid, WavefunctionGrid};
use crate::phase_space::PhaseSpaceMap;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Element {
    /// IEEE-754 binary64.
    F64,
    /// Interleaved real and imaginary binary64 pairs.
    C128,
}

impl Element {
    pub fn size(&self) -> usize {
        match self {
            Element::F64 => 8,
            Element::C128 => 16,
        }
    }
}

/// Uniform axis `start + i step`, `i < len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayMeta {
    pub name: String,
    pub element: Element,
    pub byte_order: String,
    /// Row-major; the last axis is contiguous.
    pub axes: Vec<Axis>,
    pub time: Option<f64>,
    pub grid: Option<CylGrid>,
    /// Scalar annotations such as an energy.
    #[serde(default)]
    pub attrs: BTreeMap<String, f64>,
    pub config_digest: String,
}

impl ArrayMeta {
    pub fn new(name: &str, element: Element, axes: Vec<Axis>) -> Self {
        ArrayMeta {
            name: name.into(),
            element,
            byte_order: "little".into(),
            axes,
            time: None,
            grid: None,
            attrs: BTreeMap::new(),
            config_digest: String::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn byte_len(&self) -> usize {
        self.len() * self.element.size()
    }
}

/// Array payload plus its description.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayProduct {
    pub meta: ArrayMeta,
    pub bytes: Vec<u8>,
}

impl ArrayProduct {
    pub fn real(meta: ArrayMeta, data: &[f64]) -> Self {
        assert_eq!(meta.element, Element::F64);
        assert_eq!(meta.len(), data.len(), "shape mismatch");
        let bytes = data.iter().flat_map(|x| x.to_le_bytes()).collect();
        ArrayProduct { meta, bytes }
    }

    pub fn complex(meta: ArrayMeta, data: &[Complex64]) -> Self {
        assert_eq!(meta.element, Element::C128);
        assert_eq!(meta.len(), data.len(), "shape mismatch");
        let bytes = data
            .iter()
            .flat_map(|c| c.re.to_le_bytes().into_iter().chain(c.im.to_le_bytes()))
            .collect();
        ArrayProduct { meta, bytes }
    }

    pub fn from_parts(meta: ArrayMeta, bytes: Vec<u8>) -> Result<Self> {
        if bytes.len() != meta.byte_len() {
            return Err(Error::Format(format!(
                "{}: {} bytes on disk, sidecar describes {}",
                meta.name,
                bytes.len(),
                meta.byte_len()
            )));
        }
        Ok(ArrayProduct { meta, bytes })
    }

    fn f64s(&self) -> impl Iterator<Item = f64> + '_ {
        self.bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
    }

    pub fn to_real(&self) -> Result<Vec<f64>> {
        if self.meta.element != Element::F64 {
            return Err(Error::Format(format!("{} is not a real array", self.meta.name)));
        }
        Ok(self.f64s().collect())
    }

    pub fn to_complex(&self) -> Result<Vec<Complex64>> {
        if self.meta.element != Element::C128 {
            return Err(Error::Format(format!("{} is not a complex array", self.meta.name)));
        }
        let v: Vec<f64> = self.f64s().collect();
        Ok(v.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
    }

    pub fn sidecar(&self) -> String {
        toml::to_string(&self.meta).expect("meta serializes")
    }

    pub fn wavefunction(name: &str, wf: &WavefunctionGrid) -> Self {
        let g = wf.grid;
        let axes = vec![
            Axis {
                name: "z".into(),
                start: g.z_min,
                step: g.dz(),
                len: g.n_z,
            },
            Axis {
                name: "rho".into(),
                start: g.rho(0),
                step: g.drho(),
                len: g.n_rho,
            },
        ];
        let mut meta = ArrayMeta::new(name, Element::C128, axes);
        meta.time = Some(wf.time);
        meta.grid = Some(g);
        Self::complex(meta, &wf.psi)
    }

    pub fn to_wavefunction(&self) -> Result<WavefunctionGrid> {
        let grid = self
            .meta
            .grid
            .ok_or_else(|| Error::Format(format!("{} carries no grid", self.meta.name)))?;
        let time = self.meta.time.unwrap_or(0.0);
        WavefunctionGrid::from_parts(grid, self.to_complex()?, time)
    }

    pub fn phase_space(name: &str, map: &PhaseSpaceMap) -> Self {
        let axes = vec![
            Axis {
                name: "z".into(),
                start: map.z[0],
                step: map.dz,
                len: map.n_z(),
            },
            Axis {
                name: "p".into(),
                start: map.p[0],
                step: map.dp,
                len: map.n_p(),
            },
        ];
        let mut meta = ArrayMeta::new(name, Element::F64, axes);
        meta.time = Some(map.time);
        Self::real(meta, &map.w)
    }

    pub fn to_phase_space(&self) -> Result<PhaseSpaceMap> {
        let [za, pa] = self.meta.axes.as_slice() else {
            return Err(Error::Format(format!("{} is not two-dimensional", self.meta.name)));
        };
        let axis = |a: &Axis| (0..a.len).map(|i| a.start + i as f64 * a.step).collect::<Vec<_>>();
        Ok(PhaseSpaceMap {
            z: axis(za),
            p: axis(pa),
            dz: za.step,
            dp: pa.step,
            w: self.to_real()?,
            time: self.meta.time.unwrap_or(0.0),
            imag_residue: 0.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavefunction_survives_bytes() {
        let g = CylGrid::new(-4.0, 4.0, 17, 3.0, 9).unwrap();
        let wf = WavefunctionGrid::from_fn(g, |z, r| Complex64::new((-z * z - r).exp(), z.sin()));
        let prod = ArrayProduct::wavefunction("psi", &wf);
        assert_eq!(prod.bytes.len(), 17 * 9 * 16);
        let meta: ArrayMeta = toml::from_str(&prod.sidecar()).unwrap();
        let back = ArrayProduct::from_parts(meta, prod.bytes.clone()).unwrap().to_wavefunction().unwrap();
        assert_eq!(back, wf);
    }

    #[test]
    fn size_mismatch_is_a_format_error() {
        let meta = ArrayMeta::new(
            "x",
            Element::F64,
            vec![Axis {
                name: "i".into(),
                start: 0.0,
                step: 1.0,
                len: 3,
            }],
        );
        assert!(matches!(ArrayProduct::from_parts(meta, vec![0; 16]), Err(Error::Format(_))));
    }
}
