use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::waveforms::{TimeGrid, Unit, Waveform};

/// Orthonormal real Fourier atoms on one record.
///
/// Column 0 is the constant atom; columns `2k-1` and `2k` are the cosine
/// and sine at `k·Δf` for `k = 1..=k_max`. Atoms are generated on demand
/// from a shared trig table, since the full bank would be `N × n_samples`.
#[derive(Debug, Clone)]
pub struct Dictionary {
    grid: TimeGrid,
    k_max: usize,
    cos_table: Arc<[f64]>,
    sin_table: Arc<[f64]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomKind {
    Dc,
    Cos(usize),
    Sin(usize),
}

impl Dictionary {
    pub fn new(grid: &TimeGrid, f_max: f64) -> Result<Self> {
        if !(f_max.is_finite() && f_max >= 0.0 && f_max < grid.nyquist()) {
            return Err(Error::invalid(format!(
                "dictionary ceiling {} Hz must lie in [0, {} Hz)",
                f_max,
                grid.nyquist()
            )));
        }
        let k_max = grid.bin_of(f_max).ok_or_else(|| {
            Error::invalid(format!(
                "dictionary ceiling {} Hz is off-grid (resolution {} Hz)",
                f_max,
                grid.frequency_resolution()
            ))
        })?;
        let n = grid.n_samples();
        let (cos_table, sin_table): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|m| (2.0 * PI * m as f64 / n as f64).sin_cos())
            .map(|(s, c)| (c, s))
            .unzip();
        Ok(Self {
            grid: *grid,
            k_max,
            cos_table: cos_table.into(),
            sin_table: sin_table.into(),
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn len(&self) -> usize {
        1 + 2 * self.k_max
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn f_max(&self) -> f64 {
        self.k_max as f64 * self.grid.frequency_resolution()
    }

    pub fn kind(&self, j: usize) -> AtomKind {
        assert!(j < self.len(), "atom index {j} out of range");
        match j {
            0 => AtomKind::Dc,
            j if j % 2 == 1 => AtomKind::Cos(j.div_ceil(2)),
            j => AtomKind::Sin(j / 2),
        }
    }

    /// DFT bin of atom `j`.
    pub fn bin(&self, j: usize) -> usize {
        match self.kind(j) {
            AtomKind::Dc => 0,
            AtomKind::Cos(k) | AtomKind::Sin(k) => k,
        }
    }

    pub fn frequency(&self, j: usize) -> f64 {
        self.bin(j) as f64 * self.grid.frequency_resolution()
    }

    pub fn cos_index(k: usize) -> usize {
        if k == 0 {
            0
        } else {
            2 * k - 1
        }
    }

    pub fn sin_index(k: usize) -> usize {
        2 * k
    }

    /// Writes atom `j` into `out` (length `n_samples`).
    pub fn fill_atom(&self, j: usize, out: &mut [f64]) {
        let n = self.grid.n_samples();
        assert_eq!(out.len(), n);
        match self.kind(j) {
            AtomKind::Dc => out.fill(1.0 / (n as f64).sqrt()),
            AtomKind::Cos(k) => {
                let norm = (2.0 / n as f64).sqrt();
                for (i, v) in out.iter_mut().enumerate() {
                    *v = norm * self.cos_table[(k * i) % n];
                }
            }
            AtomKind::Sin(k) => {
                let norm = (2.0 / n as f64).sqrt();
                for (i, v) in out.iter_mut().enumerate() {
                    *v = norm * self.sin_table[(k * i) % n];
                }
            }
        }
    }

    pub fn atom(&self, j: usize) -> Waveform {
        let mut buf = vec![0.0; self.grid.n_samples()];
        self.fill_atom(j, &mut buf);
        Waveform::new(self.grid, buf, Unit::Radians).expect("atom is finite")
    }

    /// `Σ c_j · atom_j` over a support.
    pub fn synthesize(&self, support: &[usize], coefficients: &[f64]) -> Result<Waveform> {
        if support.len() != coefficients.len() {
            return Err(Error::invalid("support and coefficients differ in length"));
        }
        let n = self.grid.n_samples();
        let mut out = vec![0.0; n];
        let mut buf = vec![0.0; n];
        for (&j, &c) in support.iter().zip(coefficients) {
            if j >= self.len() {
                return Err(Error::invalid(format!("atom index {j} out of range")));
            }
            self.fill_atom(j, &mut buf);
            for (o, a) in out.iter_mut().zip(&buf) {
                *o += c * a;
            }
        }
        Waveform::new(self.grid, out, Unit::Radians)
    }

    /// Inner products of `x` with every atom.
    pub fn analyze(&self, x: &[f64]) -> Vec<f64> {
        let mut buf = vec![0.0; self.grid.n_samples()];
        (0..self.len())
            .map(|j| {
                self.fill_atom(j, &mut buf);
                buf.iter().zip(x).map(|(a, b)| a * b).sum()
            })
            .collect()
    }
}

pub fn build_dictionary(grid: &TimeGrid, f_max_dict: f64) -> Result<Dictionary> {
    Dictionary::new(grid, f_max_dict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveforms::make_time_grid;

    #[test]
    fn default_dictionary_size() {
        let g = make_time_grid(10e9, 20_000).unwrap();
        let d = build_dictionary(&g, 250e6).unwrap();
        assert!((g.frequency_resolution() - 0.5e6).abs() < 1e-6);
        assert_eq!(d.len(), 1001);
        assert_eq!(d.kind(1), AtomKind::Cos(1));
        assert_eq!(d.kind(2), AtomKind::Sin(1));
        assert_eq!(d.kind(1000), AtomKind::Sin(500));
        assert!((d.frequency(Dictionary::cos_index(40)) - 20e6).abs() < 1e-3);
    }

    #[test]
    fn degenerate_and_invalid() {
        let g = make_time_grid(10e9, 20_000).unwrap();
        let d = build_dictionary(&g, 0.0).unwrap();
        assert_eq!(d.len(), 1);
        assert!(build_dictionary(&g, 250.25e6).is_err());
        assert!(build_dictionary(&g, 5e9).is_err());
    }

    #[test]
    fn gram_is_identity() {
        let g = make_time_grid(1000.0, 250).unwrap();
        let d = build_dictionary(&g, 60.0).unwrap();
        let atoms: Vec<Waveform> = (0..d.len()).map(|j| d.atom(j)).collect();
        for (i, a) in atoms.iter().enumerate() {
            for (j, b) in atoms.iter().enumerate() {
                let dot: f64 = a.samples().iter().zip(b.samples()).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-9, "gram[{i}][{j}] = {dot}");
            }
        }
    }

    #[test]
    fn synthesize_dc_and_empty() {
        let g = make_time_grid(100.0, 50).unwrap();
        let d = build_dictionary(&g, 10.0).unwrap();
        let z = d.synthesize(&[], &[]).unwrap();
        assert!(z.samples().iter().all(|&v| v == 0.0));
        let c = d.synthesize(&[0], &[3.0]).unwrap();
        let want = 3.0 / 50f64.sqrt();
        assert!(c.samples().iter().all(|&v| (v - want).abs() < 1e-15));
        assert!(d.synthesize(&[99], &[1.0]).is_err());
    }
}
