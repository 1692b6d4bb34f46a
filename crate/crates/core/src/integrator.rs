//! Classical fourth-order Runge-Kutta integration of
//! `i dpsi/dt = eps(x, t) psi(x) + psi(x-1) + psi(x+1)`.
//!
//! The potential is sampled at the stage times `t`, `t + dt/2`, `t + dt`.
//! Piecewise-constant white noise is held fixed for a whole step; a step that
//! would straddle a refresh boundary is split there.

use num_complex::Complex64 as C64;

use crate::disorder::{DisorderField, DisorderKind, DisorderSpec};
use crate::error::{QwalkError, Result};
use crate::lattice::{ExpansionPolicy, WavePacket};
use crate::observables::{variance, Carpet, ObservableSeries};

/// Largest admissible `dt * (2 + max|eps|)`.
pub const STABILITY_LIMIT: f64 = 0.5;

/// Times at which observables are recorded (time 0 is always recorded).
#[derive(Clone, Debug, PartialEq)]
pub enum SampleGrid {
    /// `count` log-spaced points from `first` (default `10 * dt`) to `t_max`.
    Geometric { count: usize, first: Option<f64> },
    /// `count` evenly spaced points on `(0, t_max]`.
    Linear { count: usize },
    Explicit(Vec<f64>),
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid::Geometric {
            count: 200,
            first: None,
        }
    }
}

impl SampleGrid {
    pub fn times(&self, dt: f64, t_max: f64) -> Vec<f64> {
        match self {
            SampleGrid::Geometric { count, first } => {
                let first = first.unwrap_or(10.0 * dt);
                if *count <= 1 || first >= t_max {
                    return vec![t_max];
                }
                let ratio = (t_max / first).ln() / (*count - 1) as f64;
                (0..*count)
                    .map(|i| {
                        if i + 1 == *count {
                            t_max
                        } else {
                            first * (ratio * i as f64).exp()
                        }
                    })
                    .collect()
            }
            SampleGrid::Linear { count } => (1..=*count)
                .map(|i| t_max * i as f64 / *count as f64)
                .collect(),
            SampleGrid::Explicit(ts) => ts.clone(),
        }
    }
}

/// Step size, horizon and sampling of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub t_max: f64,
    pub samples: SampleGrid,
    /// The run aborts once `|<psi|psi> - 1|` exceeds this.
    pub norm_tolerance: f64,
    /// Steps between norm checks outside of the sample times.
    pub norm_check_every: usize,
}

impl IntegrationConfig {
    pub fn new(dt: f64, t_max: f64) -> Self {
        IntegrationConfig {
            dt,
            t_max,
            samples: SampleGrid::default(),
            norm_tolerance: 1e-6,
            norm_check_every: 1000,
        }
    }

    pub fn with_samples(mut self, samples: SampleGrid) -> Self {
        self.samples = samples;
        self
    }

    pub fn step_count(&self) -> u64 {
        (self.t_max / self.dt).round() as u64
    }

    /// Checks the step against the stability bound for `spec`.
    pub fn validate_for(&self, spec: &DisorderSpec) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(QwalkError::invalid("dt", "must be finite and > 0"));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(QwalkError::invalid("tmax", "must be finite and > 0"));
        }
        if !(self.norm_tolerance > 0.0) {
            return Err(QwalkError::invalid("norm_tolerance", "must be > 0"));
        }
        spec.validate()?;
        let max_potential = spec.max_abs_potential();
        if self.dt * (2.0 + max_potential) > STABILITY_LIMIT {
            return Err(QwalkError::UnstableStep {
                dt: self.dt,
                max_potential,
            });
        }
        if spec.kind == DisorderKind::DynamicWhite && spec.update_interval < self.dt * (1.0 - 1e-9) {
            return Err(QwalkError::invalid(
                "dtu",
                format!("update interval {} shorter than dt {}", spec.update_interval, self.dt),
            ));
        }
        let ts = self.samples.times(self.dt, self.t_max);
        if ts.windows(2).any(|w| !(w[1] > w[0])) || ts.iter().any(|&t| !(t >= 0.0) || t > self.t_max * (1.0 + 1e-12)) {
            return Err(QwalkError::invalid(
                "samples",
                "sample times must be strictly increasing within [0, tmax]",
            ));
        }
        Ok(())
    }

    /// Step indices at which samples are taken: each requested time snaps to
    /// the nearest step, duplicates collapse, step 0 always included.
    fn sample_steps(&self) -> Vec<u64> {
        let last = self.step_count();
        let mut steps = vec![0u64];
        for t in self.samples.times(self.dt, self.t_max) {
            let s = ((t / self.dt).round() as u64).min(last);
            if s > *steps.last().unwrap() {
                steps.push(s);
            }
        }
        steps
    }
}

/// Potentials at the three RK4 stage times of one step.
pub struct StagePotentials<'a> {
    pub start: &'a [f64],
    pub mid: &'a [f64],
    pub end: &'a [f64],
}

/// Time-indexed supplier of `eps(x, t)` for the integrator.
pub trait PotentialSource {
    /// Potentials for a step of length `dt` starting at `t` on the window
    /// `[x_offset, x_offset + len)`.
    fn stage_potentials(&mut self, t: f64, dt: f64, x_offset: i64, len: usize) -> StagePotentials<'_>;

    /// First discontinuity strictly inside `(t, t_end)`, if any.
    fn jump_within(&self, _t: f64, _t_end: f64) -> Option<f64> {
        None
    }
}

/// Adapts a closure `f(t, x_offset, out)` that writes `eps(x, t)`.
pub struct FnPotential<F> {
    f: F,
    buffers: [Vec<f64>; 3],
}

impl<F: FnMut(f64, i64, &mut [f64])> FnPotential<F> {
    pub fn new(f: F) -> Self {
        FnPotential {
            f,
            buffers: Default::default(),
        }
    }
}

impl<F: FnMut(f64, i64, &mut [f64])> PotentialSource for FnPotential<F> {
    fn stage_potentials(&mut self, t: f64, dt: f64, x_offset: i64, len: usize) -> StagePotentials<'_> {
        for (b, s) in self.buffers.iter_mut().zip([t, t + 0.5 * dt, t + dt]) {
            b.resize(len, 0.0);
            (self.f)(s, x_offset, b);
        }
        let [a, b, c] = &self.buffers;
        StagePotentials {
            start: a,
            mid: b,
            end: c,
        }
    }
}

/// A [`DisorderField`] with per-window caches.
pub struct FieldSource<'a> {
    field: &'a DisorderField,
    window: Option<(i64, usize)>,
    interval: Option<u64>,
    held: Vec<f64>,
    omega: Vec<f64>,
    stage: [Vec<f64>; 3],
}

impl<'a> FieldSource<'a> {
    pub fn new(field: &'a DisorderField) -> Self {
        FieldSource {
            field,
            window: None,
            interval: None,
            held: Vec::new(),
            omega: Vec::new(),
            stage: Default::default(),
        }
    }
}

impl PotentialSource for FieldSource<'_> {
    fn stage_potentials(&mut self, t: f64, dt: f64, x_offset: i64, len: usize) -> StagePotentials<'_> {
        let moved = self.window != Some((x_offset, len));
        self.window = Some((x_offset, len));
        match self.field.kind() {
            DisorderKind::Clean | DisorderKind::StaticBox => {
                if moved {
                    self.held.resize(len, 0.0);
                    self.field.fill_static(x_offset, &mut self.held);
                }
            }
            DisorderKind::DynamicWhite => {
                let k = self.field.interval_index(t + 0.5 * dt);
                if moved || self.interval != Some(k) {
                    self.held.resize(len, 0.0);
                    self.field.fill_white_interval(k, x_offset, &mut self.held);
                    self.interval = Some(k);
                }
            }
            DisorderKind::DynamicSinusoidal => {
                if moved {
                    self.omega.resize(len, 0.0);
                    self.field.fill_frequencies(x_offset, &mut self.omega);
                }
                let amp = self.field.spec().strength;
                for (buf, s) in self.stage.iter_mut().zip([t, t + 0.5 * dt, t + dt]) {
                    buf.resize(len, 0.0);
                    for (e, w) in buf.iter_mut().zip(&self.omega) {
                        *e = amp * (w * s).cos();
                    }
                }
                let [a, b, c] = &self.stage;
                return StagePotentials {
                    start: a,
                    mid: b,
                    end: c,
                };
            }
        }
        StagePotentials {
            start: &self.held,
            mid: &self.held,
            end: &self.held,
        }
    }

    fn jump_within(&self, t: f64, t_end: f64) -> Option<f64> {
        if self.field.kind() != DisorderKind::DynamicWhite {
            return None;
        }
        let slack = 1e-9 * (t_end - t);
        let next = self.field.interval_start(self.field.interval_index(t + slack) + 1);
        (next > t + slack && next < t_end - slack).then_some(next)
    }
}

/// Scratch buffers for [`rk4_step`].
#[derive(Default)]
pub struct Rk4Workspace {
    acc: Vec<C64>,
    a: Vec<C64>,
    b: Vec<C64>,
}

/// `-i (H psi)(x)` at interior site `i` (hard walls at the window ends).
#[inline(always)]
fn minus_i_h(src: &[C64], eps: &[f64], i: usize) -> C64 {
    let n = src.len();
    let mut h = src[i] * eps[i];
    if i > 0 {
        h += src[i - 1];
    }
    if i + 1 < n {
        h += src[i + 1];
    }
    C64::new(h.im, -h.re)
}

/// Applies `f(i, -i (H src)(i))` over the window, with a branch-free interior.
#[inline(always)]
fn sweep(src: &[C64], eps: &[f64], mut f: impl FnMut(usize, C64)) {
    let n = src.len();
    if n <= 2 {
        for i in 0..n {
            f(i, minus_i_h(src, eps, i));
        }
        return;
    }
    f(0, minus_i_h(src, eps, 0));
    for i in 1..n - 1 {
        let h = src[i] * eps[i] + src[i - 1] + src[i + 1];
        f(i, C64::new(h.im, -h.re));
    }
    f(n - 1, minus_i_h(src, eps, n - 1));
}

/// One classical RK4 step of length `dt`, in place; advances `psi.time()`.
pub fn rk4_step<S: PotentialSource + ?Sized>(
    psi: &mut WavePacket,
    source: &mut S,
    dt: f64,
    ws: &mut Rk4Workspace,
) {
    let t = psi.time();
    let (x_offset, n) = (psi.x_offset(), psi.len());
    ws.acc.resize(n, C64::new(0.0, 0.0));
    ws.a.resize(n, C64::new(0.0, 0.0));
    ws.b.resize(n, C64::new(0.0, 0.0));
    let pots = source.stage_potentials(t, dt, x_offset, n);
    let half = 0.5 * dt;
    let Rk4Workspace { acc, a, b } = ws;
    let y = psi.amplitudes_mut();

    sweep(y, pots.start, |i, k| {
        acc[i] = k;
        a[i] = y[i] + k * half;
    });
    sweep(a, pots.mid, |i, k| {
        acc[i] += k * 2.0;
        b[i] = y[i] + k * half;
    });
    sweep(b, pots.mid, |i, k| {
        acc[i] += k * 2.0;
        a[i] = y[i] + k * dt;
    });
    let sixth = dt / 6.0;
    sweep(a, pots.end, |i, k| {
        y[i] += (acc[i] + k) * sixth;
    });
    psi.set_time(t + dt);
}

/// Observables and optional raster of one trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryOutput {
    pub series: ObservableSeries,
    pub carpet: Option<Carpet>,
    pub final_state: WavePacket,
    /// Largest `|<psi|psi> - 1|` seen at any check.
    pub max_norm_drift: f64,
}

/// Optional outputs of [`run_trajectory`].
#[derive(Clone, Debug, Default)]
pub struct TrajectoryOptions<'a> {
    /// Self-expanding window; `None` keeps the initial window fixed.
    pub expansion: Option<&'a ExpansionPolicy>,
    /// Record `P(x, t)` for `x` in this inclusive range at every sample.
    pub carpet_rows: Option<(i64, i64)>,
}

/// Integrates from `psi0.time()` for `cfg.t_max`, recording observables at
/// the snapped sample times. The return-probability integral is accumulated
/// with the trapezoid rule on every step.
pub fn run_trajectory(
    psi0: WavePacket,
    field: &DisorderField,
    cfg: &IntegrationConfig,
    opts: &TrajectoryOptions<'_>,
) -> Result<TrajectoryOutput> {
    cfg.validate_for(field.spec())?;
    if let Some(p) = opts.expansion {
        p.validate()?;
    }
    let mut psi = psi0;
    if let Some(policy) = opts.expansion {
        psi.maybe_expand(policy)?;
    }
    let t_start = psi.time();
    let mut source = FieldSource::new(field);
    let mut ws = Rk4Workspace::default();
    let steps = cfg.step_count();
    let sample_steps = cfg.sample_steps();

    let mut series = ObservableSeries::with_capacity(sample_steps.len());
    let mut carpet = opts.carpet_rows.map(|(lo, hi)| Carpet::new(lo, hi));
    let mut max_drift: f64 = 0.0;
    let mut integral = 0.0;
    let mut p0_prev = psi.probability_at(0);

    let record = |psi: &WavePacket, integral: f64, series: &mut ObservableSeries, carpet: &mut Option<Carpet>| -> Result<f64> {
        let norm = psi.norm_sqr();
        let drift = (norm - 1.0).abs();
        if drift > cfg.norm_tolerance {
            return Err(QwalkError::NormDrift {
                time: psi.time(),
                drift,
                tolerance: cfg.norm_tolerance,
            });
        }
        let elapsed = psi.time() - t_start;
        let p0 = psi.probability_at(0);
        let c = if elapsed > 0.0 { integral / elapsed } else { p0 };
        series.push(psi.time(), variance(psi), p0, c, norm);
        if let Some(c) = carpet.as_mut() {
            c.push_column(psi);
        }
        Ok(drift)
    };

    max_drift = max_drift.max(record(&psi, integral, &mut series, &mut carpet)?);
    let mut next_sample = 1;
    for n in 0..steps {
        let t1 = t_start + (n + 1) as f64 * cfg.dt;
        while let Some(b) = source.jump_within(psi.time(), t1) {
            let h = b - psi.time();
            rk4_step(&mut psi, &mut source, h, &mut ws);
        }
        let h = t1 - psi.time();
        rk4_step(&mut psi, &mut source, h, &mut ws);
        psi.set_time(t1);

        if let Some(policy) = opts.expansion {
            psi.maybe_expand(policy)?;
        }

        let p0 = psi.probability_at(0);
        integral += 0.5 * cfg.dt * (p0 + p0_prev);
        p0_prev = p0;

        if next_sample < sample_steps.len() && sample_steps[next_sample] == n + 1 {
            max_drift = max_drift.max(record(&psi, integral, &mut series, &mut carpet)?);
            next_sample += 1;
        } else if cfg.norm_check_every > 0 && (n + 1) % cfg.norm_check_every as u64 == 0 {
            let drift = (psi.norm_sqr() - 1.0).abs();
            if drift > cfg.norm_tolerance {
                return Err(QwalkError::NormDrift {
                    time: psi.time(),
                    drift,
                    tolerance: cfg.norm_tolerance,
                });
            }
            max_drift = max_drift.max(drift);
        }
    }

    Ok(TrajectoryOutput {
        series,
        carpet,
        final_state: psi,
        max_norm_drift: max_drift,
    })
}
