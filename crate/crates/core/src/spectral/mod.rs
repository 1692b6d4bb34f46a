//! Exact propagation for static potentials through the eigenpairs of the
//! tridiagonal Hamiltonian, plus the closed-form clean-chain spectrum.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{QwalkError, Result};
use crate::lattice::WavePacket;

mod bessel;
mod tridiag;

pub use bessel::{bessel_density, bessel_density_profile, bessel_j, bessel_j_ladder};

/// Components below this magnitude are ignored when fixing mode signs.
const SIGN_FLOOR: f64 = 1e-8;

/// Energies (ascending) and real orthonormal modes of a static Hamiltonian.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    energies: Vec<f64>,
    /// Mode-major: mode `j` is `modes[j * n..(j + 1) * n]`.
    modes: Vec<f64>,
}

impl EigenSystem {
    fn from_unsorted(energies: Vec<f64>, modes: Vec<f64>) -> Self {
        let n = energies.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
        let mut sorted_e = Vec::with_capacity(n);
        let mut sorted_m = Vec::with_capacity(n * n);
        for j in order {
            sorted_e.push(energies[j]);
            let v = &modes[j * n..(j + 1) * n];
            let flip = v.iter().find(|c| c.abs() > SIGN_FLOOR).is_some_and(|&c| c < 0.0);
            sorted_m.extend(v.iter().map(|&c| if flip { -c } else { c }));
        }
        EigenSystem {
            energies: sorted_e,
            modes: sorted_m,
        }
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Mode `j` as a vector over the window.
    pub fn mode(&self, j: usize) -> &[f64] {
        let n = self.len();
        &self.modes[j * n..(j + 1) * n]
    }

    pub fn modes(&self) -> impl Iterator<Item = &[f64]> {
        self.modes.chunks_exact(self.len())
    }

    /// `<j|psi>` for every mode.
    pub fn project(&self, psi: &WavePacket) -> Result<Vec<C64>> {
        if psi.len() != self.len() {
            return Err(QwalkError::LengthMismatch {
                expected: self.len(),
                found: psi.len(),
            });
        }
        Ok(self
            .modes()
            .map(|m| {
                m.iter()
                    .zip(psi.amplitudes())
                    .fold(C64::new(0.0, 0.0), |acc, (v, a)| acc + a * v)
            })
            .collect())
    }

    /// `psi(t) = sum_j exp(-i E_j t) psi_j <j|psi0>`.
    pub fn evolve(&self, psi0: &WavePacket, t: f64) -> Result<WavePacket> {
        Ok(SpectralPropagator::new(self, psi0)?.at(t))
    }
}

/// Eigenpairs of the Hamiltonian with diagonal `eps` and unit hopping.
pub fn eigensystem(eps: &[f64]) -> Result<EigenSystem> {
    if eps.is_empty() {
        return Err(QwalkError::invalid("eps", "potential must cover at least one site"));
    }
    let off = vec![1.0; eps.len() - 1];
    let (e, z) = tridiag::tridiagonal_eigen(eps, &off);
    Ok(EigenSystem::from_unsorted(e, z))
}

/// Closed-form spectrum of the clean chain:
/// `E_j = 2 cos(pi j / (N+1))`, `psi_j(x) = sqrt(2/(N+1)) sin(j pi x / (N+1))`
/// for chain positions `x = 1..=N`.
pub fn clean_chain_modes(n: usize) -> Result<EigenSystem> {
    if n == 0 {
        return Err(QwalkError::invalid("N", "chain must have at least one site"));
    }
    let k = PI / (n + 1) as f64;
    let amp = (2.0 / (n + 1) as f64).sqrt();
    let mut energies = Vec::with_capacity(n);
    let mut modes = Vec::with_capacity(n * n);
    for j in 1..=n {
        energies.push(2.0 * (k * j as f64).cos());
        modes.extend((1..=n).map(|x| amp * (k * (j * x) as f64).sin()));
    }
    Ok(EigenSystem::from_unsorted(energies, modes))
}

/// Spectral evolution of a fixed initial state, reusable across many times.
#[derive(Clone, Debug)]
pub struct SpectralPropagator<'a> {
    system: &'a EigenSystem,
    coefficients: Vec<C64>,
    x_offset: i64,
    t0: f64,
}

impl<'a> SpectralPropagator<'a> {
    pub fn new(system: &'a EigenSystem, psi0: &WavePacket) -> Result<Self> {
        Ok(SpectralPropagator {
            coefficients: system.project(psi0)?,
            system,
            x_offset: psi0.x_offset(),
            t0: psi0.time(),
        })
    }

    /// State a time `t` after the initial one.
    pub fn at(&self, t: f64) -> WavePacket {
        let n = self.system.len();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for ((e, c), mode) in self
            .system
            .energies
            .iter()
            .zip(&self.coefficients)
            .zip(self.system.modes())
        {
            let w = C64::from_polar(1.0, -e * t) * c;
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            for (o, v) in out.iter_mut().zip(mode) {
                *o += w * v;
            }
        }
        WavePacket::from_parts(out, self.x_offset, self.t0 + t).expect("non-empty window")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_site() {
        let s = eigensystem(&[0.7]).unwrap();
        assert_eq!(s.energies(), &[0.7]);
        assert_eq!(s.mode(0), &[1.0]);
        let c = clean_chain_modes(1).unwrap();
        assert!(c.energies()[0].abs() < 1e-15);
        assert!((c.mode(0)[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn three_site_clean_spectrum() {
        let s = eigensystem(&[0.0; 3]).unwrap();
        let r = 2f64.sqrt();
        for (e, want) in s.energies().iter().zip([-r, 0.0, r]) {
            assert!((e - want).abs() < 1e-14);
        }
    }

    #[test]
    fn five_site_closed_form() {
        let c = clean_chain_modes(5).unwrap();
        let r = 3f64.sqrt();
        for (e, want) in c.energies().iter().zip([-r, -1.0, 0.0, 1.0, r]) {
            assert!((e - want).abs() < 1e-14);
        }
    }

    #[test]
    fn modes_have_positive_leading_component() {
        let s = eigensystem(&[0.3, -1.0, 2.0, 0.1, 0.0, -0.4]).unwrap();
        for m in s.modes() {
            let lead = m.iter().find(|c| c.abs() > SIGN_FLOOR).unwrap();
            assert!(*lead > 0.0);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let s = eigensystem(&[0.5, -0.2, 0.9, 0.0]).unwrap();
        let psi = WavePacket::from_parts(
            vec![
                C64::new(0.5, 0.1),
                C64::new(-0.3, 0.4),
                C64::new(0.2, -0.5),
                C64::new(0.1, 0.0),
            ],
            -2,
            0.0,
        )
        .unwrap();
        let out = s.evolve(&psi, 0.0).unwrap();
        for (a, b) in out.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
        assert_eq!(out.x_offset(), -2);
    }

    #[test]
    fn eigenstate_picks_up_phase_only() {
        let s = eigensystem(&[0.2, 1.1, -0.6, 0.3, 0.0]).unwrap();
        let j = 2;
        let psi = WavePacket::from_parts(
            s.mode(j).iter().map(|&v| C64::new(v, 0.0)).collect(),
            0,
            0.0,
        )
        .unwrap();
        let t = 3.7;
        let out = s.evolve(&psi, t).unwrap();
        let phase = C64::from_polar(1.0, -s.energies()[j] * t);
        for (a, v) in out.amplitudes().iter().zip(s.mode(j)) {
            assert!((a - phase * v).norm() < 1e-13);
        }
    }

    #[test]
    fn mismatched_window_rejected() {
        let s = eigensystem(&[0.0; 4]).unwrap();
        assert!(s.evolve(&WavePacket::delta(0), 1.0).is_err());
    }
}
