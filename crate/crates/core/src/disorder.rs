//! On-site potentials for the four environments.
//!
//! Every random number is a pure function of `(seed, realization, stream,
//! site)`: draws come from a ChaCha8 keystream keyed by the seed, the
//! realization index and a per-law tag, with the update interval as the stream
//! id and the lattice coordinate as the word position. Replaying a run, in any
//! order and on any number of threads, reproduces the potential bit for bit.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QwalkError, Result};

/// Which generation law produces `eps(x, t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DisorderKind {
    Clean,
    StaticBox,
    DynamicWhite,
    DynamicSinusoidal,
}

impl DisorderKind {
    pub fn name(self) -> &'static str {
        match self {
            DisorderKind::Clean => "clean",
            DisorderKind::StaticBox => "static",
            DisorderKind::DynamicWhite => "white",
            DisorderKind::DynamicSinusoidal => "sin",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "clean" => Some(DisorderKind::Clean),
            "static" => Some(DisorderKind::StaticBox),
            "white" => Some(DisorderKind::DynamicWhite),
            "sin" => Some(DisorderKind::DynamicSinusoidal),
            _ => None,
        }
    }
}

/// Parameters of a disorder environment.
#[derive(Clone, Debug, PartialEq)]
pub struct DisorderSpec {
    pub kind: DisorderKind,
    /// Box width `W` (samples lie in `[-W/2, W/2]`), or the amplitude for the
    /// sinusoidal law.
    pub strength: f64,
    /// Simulation-time spacing between white-noise refreshes.
    pub update_interval: f64,
    pub seed: u64,
}

impl DisorderSpec {
    pub fn clean() -> Self {
        DisorderSpec {
            kind: DisorderKind::Clean,
            strength: 0.0,
            update_interval: 1.0,
            seed: 0,
        }
    }

    pub fn static_box(w: f64, seed: u64) -> Self {
        DisorderSpec {
            kind: DisorderKind::StaticBox,
            strength: w,
            update_interval: 1.0,
            seed,
        }
    }

    pub fn white(w: f64, update_interval: f64, seed: u64) -> Self {
        DisorderSpec {
            kind: DisorderKind::DynamicWhite,
            strength: w,
            update_interval,
            seed,
        }
    }

    pub fn sinusoidal(amp: f64, seed: u64) -> Self {
        DisorderSpec {
            kind: DisorderKind::DynamicSinusoidal,
            strength: amp,
            update_interval: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strength >= 0.0) || !self.strength.is_finite() {
            return Err(QwalkError::invalid("W", "must be finite and >= 0"));
        }
        if !(self.update_interval > 0.0) || !self.update_interval.is_finite() {
            return Err(QwalkError::invalid("dtu", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Upper bound on `|eps(x, t)|`.
    pub fn max_abs_potential(&self) -> f64 {
        match self.kind {
            DisorderKind::Clean => 0.0,
            DisorderKind::StaticBox => 0.5 * self.strength,
            DisorderKind::DynamicWhite => 0.5 * self.strength / self.update_interval.sqrt(),
            DisorderKind::DynamicSinusoidal => self.strength,
        }
    }

    /// White-noise intensity `Var(eps) * dtu = W^2 / 12`, independent of the
    /// update interval. Zero for the other laws.
    pub fn effective_intensity(&self) -> f64 {
        match self.kind {
            DisorderKind::DynamicWhite => self.strength * self.strength / 12.0,
            _ => 0.0,
        }
    }

    pub fn is_static(&self) -> bool {
        matches!(self.kind, DisorderKind::Clean | DisorderKind::StaticBox)
    }

    /// The field seen by realization `realization` of an ensemble.
    pub fn realize(&self, realization: u64) -> DisorderField {
        DisorderField {
            spec: self.clone(),
            realization,
        }
    }
}

const TAG_STATIC: u64 = 0x5354_4154;
const TAG_WHITE: u64 = 0x5748_4954;
const TAG_OMEGA: u64 = 0x4f4d_4547;

/// Word offset keeping negative coordinates addressable.
const SITE_BIAS: i64 = 1 << 40;

/// Uniform `[0, 1)` draws for consecutive lattice sites starting at `x_start`.
fn uniform_sites(seed: u64, realization: u64, tag: u64, stream: u64, x_start: i64, out: &mut [f64]) {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&realization.to_le_bytes());
    key[16..24].copy_from_slice(&tag.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    let pos = (x_start + SITE_BIAS) as u128;
    rng.set_word_pos(2 * pos);
    for u in out.iter_mut() {
        *u = rng.random::<f64>();
    }
}

/// One realization of a [`DisorderSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct DisorderField {
    spec: DisorderSpec,
    realization: u64,
}

impl DisorderField {
    pub fn spec(&self) -> &DisorderSpec {
        &self.spec
    }

    pub fn realization(&self) -> u64 {
        self.realization
    }

    pub fn kind(&self) -> DisorderKind {
        self.spec.kind
    }

    /// Index of the white-noise update interval containing `t`.
    pub fn interval_index(&self, t: f64) -> u64 {
        (t / self.spec.update_interval).floor().max(0.0) as u64
    }

    /// Start time of update interval `k`.
    pub fn interval_start(&self, k: u64) -> f64 {
        k as f64 * self.spec.update_interval
    }

    /// Time-independent part of the field; meaningful for static laws only.
    pub fn fill_static(&self, x_offset: i64, out: &mut [f64]) {
        match self.spec.kind {
            DisorderKind::StaticBox => {
                uniform_sites(self.spec.seed, self.realization, TAG_STATIC, 0, x_offset, out);
                let w = self.spec.strength;
                for e in out.iter_mut() {
                    *e = w * (*e - 0.5);
                }
            }
            _ => out.fill(0.0),
        }
    }

    /// White-noise potential during update interval `k`, scaled by
    /// `1/sqrt(dtu)` so that `Var(eps) * dtu = W^2 / 12`.
    pub fn fill_white_interval(&self, k: u64, x_offset: i64, out: &mut [f64]) {
        uniform_sites(self.spec.seed, self.realization, TAG_WHITE, k, x_offset, out);
        let scale = self.spec.strength / self.spec.update_interval.sqrt();
        for e in out.iter_mut() {
            *e = scale * (*e - 0.5);
        }
    }

    /// Per-site angular frequencies, uniform in `[0, 2*pi]`.
    pub fn fill_frequencies(&self, x_offset: i64, out: &mut [f64]) {
        uniform_sites(self.spec.seed, self.realization, TAG_OMEGA, 0, x_offset, out);
        for w in out.iter_mut() {
            *w *= 2.0 * PI;
        }
    }

    /// Materialises the sinusoidal law on a window.
    pub fn sinusoidal_window(&self, x_offset: i64, len: usize) -> SinusoidalField {
        let mut omega = vec![0.0; len];
        self.fill_frequencies(x_offset, &mut omega);
        SinusoidalField {
            amp: self.spec.strength,
            omega,
        }
    }

    /// `eps(x, t)` over `[x_offset, x_offset + out.len())`.
    pub fn fill(&self, t: f64, x_offset: i64, out: &mut [f64]) {
        match self.spec.kind {
            DisorderKind::Clean | DisorderKind::StaticBox => self.fill_static(x_offset, out),
            DisorderKind::DynamicWhite => {
                self.fill_white_interval(self.interval_index(t), x_offset, out)
            }
            DisorderKind::DynamicSinusoidal => {
                self.fill_frequencies(x_offset, out);
                let amp = self.spec.strength;
                for e in out.iter_mut() {
                    *e = amp * (*e * t).cos();
                }
            }
        }
    }
}

/// `eps(x, t) = amp * cos(omega_x * t)` on a window, phases fixed at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SinusoidalField {
    pub amp: f64,
    pub omega: Vec<f64>,
}

impl SinusoidalField {
    pub fn at(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.omega.len()];
        self.fill_at(t, &mut out);
        out
    }

    pub fn fill_at(&self, t: f64, out: &mut [f64]) {
        for (e, w) in out.iter_mut().zip(&self.omega) {
            *e = self.amp * (w * t).cos();
        }
    }
}

/// `n` box samples in `[-W/2, W/2]` for sites `0..n`, realization 0.
pub fn sample_static(n: usize, w: f64, seed: u64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    DisorderSpec::static_box(w, seed).realize(0).fill_static(0, &mut out);
    out
}

/// White-noise potential at time `t` for sites `0..site_count`, realization 0.
pub fn white_noise_at(t: f64, spec: &DisorderSpec, site_count: usize) -> Vec<f64> {
    let mut out = vec![0.0; site_count];
    let field = spec.realize(0);
    field.fill_white_interval(field.interval_index(t), 0, &mut out);
    out
}

/// `amp * cos(omega_x * t)` for a materialised sinusoidal field.
pub fn sinusoidal_at(t: f64, field: &SinusoidalField) -> Vec<f64> {
    field.at(t)
}
