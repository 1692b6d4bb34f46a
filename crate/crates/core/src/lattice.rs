//! Wave-packet state on a finite window of the integer lattice, the
//! tight-binding Hamiltonian with unit hopping, and the self-expanding window.

use num_complex::Complex64 as C64;

use crate::error::{QwalkError, Result};

/// Default tolerance on `|sum |psi|^2 - 1|`.
pub const NORM_TOLERANCE: f64 = 1e-8;

/// Complex amplitudes on the contiguous window `[x_offset, x_offset + len)`.
///
/// Coordinates are signed lattice sites; the release site of a walk is always
/// coordinate 0, so observables such as the variance are measured from it.
#[derive(Clone, Debug, PartialEq)]
pub struct WavePacket {
    amplitudes: Vec<C64>,
    x_offset: i64,
    time: f64,
}

impl WavePacket {
    /// Builds a packet from raw parts. The window must be non-empty.
    pub fn from_parts(amplitudes: Vec<C64>, x_offset: i64, time: f64) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(QwalkError::invalid("amplitudes", "window must hold at least one site"));
        }
        Ok(WavePacket {
            amplitudes,
            x_offset,
            time,
        })
    }

    /// Single-site packet at `center` on the minimal window.
    pub fn delta(center: i64) -> Self {
        WavePacket {
            amplitudes: vec![C64::new(1.0, 0.0)],
            x_offset: center,
            time: 0.0,
        }
    }

    /// Delta release on a fixed chain of `n` sites, at chain index `site`.
    ///
    /// The chain is placed so that the release site is coordinate 0, i.e. the
    /// chain spans `[-site, n - 1 - site]`.
    pub fn delta_on_chain(n: usize, site: usize) -> Result<Self> {
        if n == 0 {
            return Err(QwalkError::invalid("N", "chain must have at least one site"));
        }
        if site >= n {
            return Err(QwalkError::invalid("site", format!("{site} outside a chain of {n} sites")));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); n];
        amplitudes[site] = C64::new(1.0, 0.0);
        Ok(WavePacket {
            amplitudes,
            x_offset: -(site as i64),
            time: 0.0,
        })
    }

    /// Uniform superposition `1/sqrt(n)` over a chain of `n` sites centred on 0.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(QwalkError::invalid("N", "chain must have at least one site"));
        }
        let a = 1.0 / (n as f64).sqrt();
        Ok(WavePacket {
            amplitudes: vec![C64::new(a, 0.0); n],
            x_offset: -(((n - 1) / 2) as i64),
            time: 0.0,
        })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn x_offset(&self) -> i64 {
        self.x_offset
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub(crate) fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Lattice coordinate of the last window element.
    pub fn x_last(&self) -> i64 {
        self.x_offset + self.amplitudes.len() as i64 - 1
    }

    /// Coordinates covered by the window.
    pub fn coordinates(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.amplitudes.len() as i64).map(move |i| self.x_offset + i)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `|psi(x)|^2`, zero outside the window.
    pub fn probability_at(&self, x: i64) -> f64 {
        let i = x - self.x_offset;
        if i < 0 || i >= self.amplitudes.len() as i64 {
            0.0
        } else {
            self.amplitudes[i as usize].norm_sqr()
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Checks the normalisation invariant.
    pub fn check_norm(&self, tolerance: f64) -> Result<()> {
        let drift = (self.norm_sqr() - 1.0).abs();
        if drift > tolerance {
            return Err(QwalkError::NormDrift {
                time: self.time,
                drift,
                tolerance,
            });
        }
        Ok(())
    }

    /// Grows the window to `[x_lo, x_hi]` (never shrinks), zero-filling.
    pub fn extend_to(&mut self, x_lo: i64, x_hi: i64) {
        let left = (self.x_offset - x_lo).max(0) as usize;
        let right = (x_hi - self.x_last()).max(0) as usize;
        self.grow(left, right);
    }

    fn grow(&mut self, left: usize, right: usize) {
        if left == 0 && right == 0 {
            return;
        }
        let zero = C64::new(0.0, 0.0);
        let mut grown = Vec::with_capacity(self.amplitudes.len() + left + right);
        grown.resize(left, zero);
        grown.extend_from_slice(&self.amplitudes);
        grown.resize(grown.len() + right, zero);
        self.amplitudes = grown;
        self.x_offset -= left as i64;
    }

    /// Self-expanding window: if the probability inside either guard band
    /// exceeds the policy threshold, that side grows by `growth_chunk` zero
    /// sites. Existing amplitudes are untouched.
    pub fn maybe_expand(&mut self, policy: &ExpansionPolicy) -> Result<Expansion> {
        let n = self.amplitudes.len();
        let band = policy.guard_band.min(n);
        let left_p: f64 = self.amplitudes[..band].iter().map(|a| a.norm_sqr()).sum();
        let right_p: f64 = self.amplitudes[n - band..].iter().map(|a| a.norm_sqr()).sum();
        let expansion = Expansion {
            left: if left_p > policy.edge_threshold { policy.growth_chunk } else { 0 },
            right: if right_p > policy.edge_threshold { policy.growth_chunk } else { 0 },
        };
        if expansion.grew() {
            let sites = n + expansion.left + expansion.right;
            if sites > policy.max_sites {
                return Err(QwalkError::WindowOverflow {
                    sites,
                    cap: policy.max_sites,
                });
            }
            self.grow(expansion.left, expansion.right);
        }
        Ok(expansion)
    }
}

/// Sites appended by one call to [`WavePacket::maybe_expand`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Expansion {
    pub left: usize,
    pub right: usize,
}

impl Expansion {
    pub fn grew(&self) -> bool {
        self.left > 0 || self.right > 0
    }
}

/// When and how the simulation window grows.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionPolicy {
    /// Largest probability tolerated inside either guard band.
    pub edge_threshold: f64,
    /// Number of edge sites inspected on each side.
    pub guard_band: usize,
    /// Sites appended per expansion on the triggering side.
    pub growth_chunk: usize,
    /// Hard cap on the window size.
    pub max_sites: usize,
}

impl Default for ExpansionPolicy {
    fn default() -> Self {
        ExpansionPolicy {
            edge_threshold: 1e-12,
            guard_band: 5,
            growth_chunk: 64,
            max_sites: 1 << 20,
        }
    }
}

impl ExpansionPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.edge_threshold > 0.0) {
            return Err(QwalkError::invalid("edge_threshold", "must be > 0"));
        }
        if self.guard_band == 0 {
            return Err(QwalkError::invalid("guard_band", "must be >= 1"));
        }
        if self.growth_chunk == 0 {
            return Err(QwalkError::invalid("growth_chunk", "must be >= 1"));
        }
        Ok(())
    }
}

/// `(H psi)(x) = eps(x) psi(x) + psi(x-1) + psi(x+1)` with hard walls.
pub fn apply_hamiltonian(psi: &WavePacket, eps: &[f64]) -> Result<Vec<C64>> {
    if eps.len() != psi.len() {
        return Err(QwalkError::LengthMismatch {
            expected: psi.len(),
            found: eps.len(),
        });
    }
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    hamiltonian_into(psi.amplitudes(), eps, &mut out);
    Ok(out)
}

/// Unchecked kernel: all three slices have equal length.
#[inline]
pub(crate) fn hamiltonian_into(psi: &[C64], eps: &[f64], out: &mut [C64]) {
    let n = psi.len();
    debug_assert!(eps.len() == n && out.len() == n);
    if n == 1 {
        out[0] = psi[0] * eps[0];
        return;
    }
    out[0] = psi[0] * eps[0] + psi[1];
    for i in 1..n - 1 {
        out[i] = psi[i] * eps[i] + psi[i - 1] + psi[i + 1];
    }
    out[n - 1] = psi[n - 1] * eps[n - 1] + psi[n - 2];
}

/// `<psi|H|psi>` for a static potential.
pub fn energy(psi: &WavePacket, eps: &[f64]) -> Result<f64> {
    let h = apply_hamiltonian(psi, eps)?;
    Ok(psi
        .amplitudes()
        .iter()
        .zip(&h)
        .map(|(a, b)| (a.conj() * b).re)
        .sum())
}
