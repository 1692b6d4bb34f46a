//! The randomly driven two-level system
//! `H = [[eps1(t), gamma], [gamma, eps2(t)]]` with white-noise diagonal.
//!
//! The noise-averaged density matrix is parametrised as
//! `rho11 = 1/2 + rho`, `rho12 = R + iJ` and obeys
//! `rho' = -2 gamma J`, `R' = -2 delta R`, `J' = -2 delta J + 2 gamma rho`
//! with `delta = W^2 / 12`, starting from `rho = 1/2`, `R = J = 0`.

use num_complex::Complex64 as C64;

use crate::disorder::{DisorderField, DisorderSpec};
use crate::ensemble::par_map_indexed;
use crate::error::{QwalkError, Result};

/// Realizations per deterministic partial sum.
const CHUNK: usize = 256;
/// `|rho12|` below which the phase is reported as undefined.
pub const PHASE_FLOOR: f64 = 1e-12;
/// Tolerance on `|delta - 2 gamma|` treated as the critical point.
const CRITICAL_EPS: f64 = 1e-9;

/// Parameters of a two-level run.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitParams {
    pub gamma: f64,
    pub w: f64,
    pub seed: u64,
    pub ensemble_size: usize,
    pub dt: f64,
    pub t_max: f64,
    /// Noise refresh interval; a multiple of `dt`.
    pub update_interval: f64,
    /// Number of evenly spaced output samples after `t = 0`.
    pub samples: usize,
    /// Threads for the Monte-Carlo ensemble (0 = all cores).
    pub workers: usize,
}

impl Default for QubitParams {
    fn default() -> Self {
        QubitParams {
            gamma: 1.0,
            w: 0.0,
            seed: 0,
            ensemble_size: 1000,
            dt: 0.002,
            t_max: 10.0,
            update_interval: 0.01,
            samples: 200,
            workers: 0,
        }
    }
}

impl QubitParams {
    pub fn new(gamma: f64, w: f64) -> Self {
        QubitParams {
            gamma,
            w,
            ..Default::default()
        }
    }

    /// White-noise intensity `W^2 / 12`.
    pub fn delta(&self) -> f64 {
        self.w * self.w / 12.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(QwalkError::invalid("gamma", "must be finite and > 0"));
        }
        if !(self.w >= 0.0) || !self.w.is_finite() {
            return Err(QwalkError::invalid("W", "must be finite and >= 0"));
        }
        if !(self.dt > 0.0) || !(self.t_max > 0.0) {
            return Err(QwalkError::invalid("dt", "dt and tmax must be > 0"));
        }
        if self.samples == 0 {
            return Err(QwalkError::invalid("samples", "must be >= 1"));
        }
        if self.ensemble_size == 0 {
            return Err(QwalkError::invalid("ensemble", "must be >= 1"));
        }
        let ratio = self.update_interval / self.dt;
        if !(ratio >= 1.0 - 1e-9) || (ratio - ratio.round()).abs() > 1e-6 {
            return Err(QwalkError::invalid(
                "dtu",
                format!("update interval {} must be a multiple of dt {}", self.update_interval, self.dt),
            ));
        }
        Ok(())
    }

    fn noise_spec(&self) -> DisorderSpec {
        DisorderSpec::white(self.w, self.update_interval, self.seed)
    }
}

/// Noise-averaged density matrix at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AveragedQubitState {
    pub rho: f64,
    pub r: f64,
    pub j: f64,
    pub time: f64,
}

impl AveragedQubitState {
    pub fn initial() -> Self {
        AveragedQubitState {
            rho: 0.5,
            r: 0.0,
            j: 0.0,
            time: 0.0,
        }
    }

    pub fn rho12(&self) -> C64 {
        C64::new(self.r, self.j)
    }

    /// `arg rho12` in `(-pi, pi]`, or `None` when `|rho12|` is negligible.
    pub fn theta(&self) -> Option<f64> {
        phase(self.rho12())
    }
}

fn phase(z: C64) -> Option<f64> {
    (z.norm() >= PHASE_FLOOR).then(|| z.arg())
}

/// Closed-form averaged state: underdamped, critical or overdamped branch
/// depending on `delta` against `2 gamma`.
pub fn analytic_averaged(params: &QubitParams, t: f64) -> AveragedQubitState {
    let g = params.gamma;
    let d = params.delta();
    let decay = (-d * t).exp();
    let disc = 4.0 * g * g - d * d;
    let (rho, j) = if disc.abs() <= CRITICAL_EPS * g * g {
        (0.5 * decay * (1.0 + d * t), g * t * decay)
    } else if disc > 0.0 {
        let om = disc.sqrt();
        let (s, c) = (om * t).sin_cos();
        (0.5 * decay * (c + d / om * s), g * decay * s / om)
    } else {
        let k = (-disc).sqrt();
        // e^{-dt} sinh(kt) and cosh(kt) written with decaying exponentials.
        let ep = (-(d - k) * t).exp();
        let em = (-(d + k) * t).exp();
        let sh = 0.5 * (ep - em);
        let ch = 0.5 * (ep + em);
        (0.5 * (ch + d / k * sh), g * sh / k)
    };
    AveragedQubitState {
        rho,
        r: 0.0,
        j,
        time: t,
    }
}

/// RK4 integration of the averaged equations, one state per step.
pub fn integrate_averaged_odes(params: &QubitParams, t_max: f64, dt: f64) -> Result<Vec<AveragedQubitState>> {
    if !(dt > 0.0) || !(t_max >= 0.0) {
        return Err(QwalkError::invalid("dt", "dt must be > 0 and tmax >= 0"));
    }
    let g = params.gamma;
    let d = params.delta();
    let f = |y: [f64; 3]| [-2.0 * g * y[2], -2.0 * d * y[1], -2.0 * d * y[2] + 2.0 * g * y[0]];
    let axpy = |y: [f64; 3], k: [f64; 3], h: f64| [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2]];
    let steps = (t_max / dt).round() as usize;
    let mut y = [0.5, 0.0, 0.0];
    let mut out = Vec::with_capacity(steps + 1);
    out.push(AveragedQubitState::initial());
    for n in 0..steps {
        let k1 = f(y);
        let k2 = f(axpy(y, k1, 0.5 * dt));
        let k3 = f(axpy(y, k2, 0.5 * dt));
        let k4 = f(axpy(y, k3, dt));
        for i in 0..3 {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(AveragedQubitState {
            rho: y[0],
            r: y[1],
            j: y[2],
            time: (n + 1) as f64 * dt,
        });
    }
    Ok(out)
}

/// Ensemble-averaged Monte-Carlo result.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitEnsemble {
    pub states: Vec<AveragedQubitState>,
    /// Standard error of `J` across realizations at each sample.
    pub j_stderr: Vec<f64>,
    /// Standard error of `R` across realizations at each sample.
    pub r_stderr: Vec<f64>,
    /// Largest `| |c1|^2 + |c2|^2 - 1 |` over all trajectories and samples.
    pub max_purity_drift: f64,
}

impl QubitEnsemble {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    /// `arg rho12_bar(t)`; `None` where `|rho12_bar| < 1e-12`.
    pub fn theta(&self) -> Vec<Option<f64>> {
        self.states.iter().map(|s| s.theta()).collect()
    }
}

/// Running sums over realizations at each sample: rho, R, J, R^2, J^2.
#[derive(Clone)]
struct Sums {
    acc: Vec<[f64; 5]>,
    drift: f64,
}

impl Sums {
    fn zeros(n: usize) -> Self {
        Sums {
            acc: vec![[0.0; 5]; n],
            drift: 0.0,
        }
    }

    fn add(&mut self, other: &Sums) {
        for (a, b) in self.acc.iter_mut().zip(&other.acc) {
            for i in 0..5 {
                a[i] += b[i];
            }
        }
        self.drift = self.drift.max(other.drift);
    }
}

fn sample_steps(params: &QubitParams) -> Vec<usize> {
    let total = (params.t_max / params.dt).round() as usize;
    let mut steps = vec![0];
    for i in 1..=params.samples {
        let s = (total as f64 * i as f64 / params.samples as f64).round() as usize;
        if s > *steps.last().unwrap() {
            steps.push(s);
        }
    }
    steps
}

/// One noisy trajectory from level 1, adding its samples of
/// `(|c1|^2 - 1/2, Re c1 c2*, Im c1 c2*)` into `sums`.
fn trajectory(params: &QubitParams, field: &DisorderField, steps: &[usize], sums: &mut Sums) {
    let g = params.gamma;
    let dt = params.dt;
    let per_interval = (params.update_interval / dt).round() as usize;
    let mut c = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let mut eps = [0.0; 2];
    let deriv = |c: [C64; 2], e: [f64; 2]| {
        let h0 = c[0] * e[0] + c[1] * g;
        let h1 = c[0] * g + c[1] * e[1];
        [C64::new(h0.im, -h0.re), C64::new(h1.im, -h1.re)]
    };
    let record = |c: &[C64; 2], slot: &mut [f64; 5], drift: &mut f64| {
        let rho12 = c[0] * c[1].conj();
        slot[0] += c[0].norm_sqr() - 0.5;
        slot[1] += rho12.re;
        slot[2] += rho12.im;
        slot[3] += rho12.re * rho12.re;
        slot[4] += rho12.im * rho12.im;
        *drift = drift.max((c[0].norm_sqr() + c[1].norm_sqr() - 1.0).abs());
    };
    record(&c, &mut sums.acc[0], &mut sums.drift);
    let mut next = 1;
    let last = *steps.last().unwrap();
    for n in 0..last {
        if n % per_interval == 0 {
            field.fill_white_interval((n / per_interval) as u64, 0, &mut eps);
        }
        let k1 = deriv(c, eps);
        let k2 = deriv([c[0] + k1[0] * (0.5 * dt), c[1] + k1[1] * (0.5 * dt)], eps);
        let k3 = deriv([c[0] + k2[0] * (0.5 * dt), c[1] + k2[1] * (0.5 * dt)], eps);
        let k4 = deriv([c[0] + k3[0] * dt, c[1] + k3[1] * dt], eps);
        for i in 0..2 {
            c[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
        if steps[next] == n + 1 {
            record(&c, &mut sums.acc[next], &mut sums.drift);
            next += 1;
        }
    }
}

/// Monte-Carlo average of `ensemble_size` noisy trajectories. Partial sums
/// over fixed blocks of realizations are combined in index order, so the
/// result does not depend on the worker count.
pub fn ensemble_qubit(params: &QubitParams) -> Result<QubitEnsemble> {
    params.validate()?;
    let spec = params.noise_spec();
    let steps = sample_steps(params);
    let n_chunks = params.ensemble_size.div_ceil(CHUNK);
    let partials = par_map_indexed(n_chunks, params.workers, |ci| {
        let mut sums = Sums::zeros(steps.len());
        let lo = ci * CHUNK;
        let hi = (lo + CHUNK).min(params.ensemble_size);
        for r in lo..hi {
            let field = spec.realize(r as u64);
            trajectory(params, &field, &steps, &mut sums);
        }
        sums
    })?;
    let mut total = Sums::zeros(steps.len());
    for p in &partials {
        total.add(p);
    }
    let m = params.ensemble_size as f64;
    let se = |sum: f64, sq: f64| {
        if params.ensemble_size < 2 {
            return 0.0;
        }
        let mean = sum / m;
        ((sq / m - mean * mean).max(0.0) * m / (m - 1.0) / m).sqrt()
    };
    let mut states = Vec::with_capacity(steps.len());
    let mut j_stderr = Vec::with_capacity(steps.len());
    let mut r_stderr = Vec::with_capacity(steps.len());
    for (s, a) in steps.iter().zip(&total.acc) {
        states.push(AveragedQubitState {
            rho: a[0] / m,
            r: a[1] / m,
            j: a[2] / m,
            time: *s as f64 * params.dt,
        });
        r_stderr.push(se(a[1], a[3]));
        j_stderr.push(se(a[2], a[4]));
    }
    Ok(QubitEnsemble {
        states,
        j_stderr,
        r_stderr,
        max_purity_drift: total.drift,
    })
}

/// Noise strength at which the averaged dynamics turns overdamped:
/// `W^2 / 12 = 2 gamma`.
pub fn critical_disorder(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(QwalkError::invalid("gamma", "must be finite and > 0"));
    }
    Ok((24.0 * gamma).sqrt())
}

/// `1 - |<e^{i theta}>|`; undefined phases are skipped. NaN if none remain.
pub fn circular_variance(thetas: &[Option<f64>]) -> f64 {
    resultant_deficit(thetas, 1.0)
}

/// `1 - |<e^{2 i theta}>|`: spread of the phase modulo `pi`, insensitive to
/// the sign flips of an oscillating real or imaginary part.
pub fn axial_circular_variance(thetas: &[Option<f64>]) -> f64 {
    resultant_deficit(thetas, 2.0)
}

fn resultant_deficit(thetas: &[Option<f64>], order: f64) -> f64 {
    let (mut s, mut n) = (C64::new(0.0, 0.0), 0usize);
    for t in thetas.iter().flatten() {
        s += C64::from_polar(1.0, order * t);
        n += 1;
    }
    if n == 0 {
        return f64::NAN;
    }
    1.0 - s.norm() / n as f64
}

/// The last quarter (by count) of a sample sequence.
pub fn late_window<T>(xs: &[T]) -> &[T] {
    &xs[xs.len() - xs.len().div_ceil(4)..]
}
