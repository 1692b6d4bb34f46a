//! Spreading observables, space-time rasters, crossover fits and saturation.

use crate::error::{QwalkError, Result};
use crate::lattice::WavePacket;

/// Window length (in samples) of the sliding log-log slope fit.
pub const SLOPE_WINDOW: usize = 7;
/// Windows with at least this slope count as ballistic.
pub const BALLISTIC_SLOPE: f64 = 1.9;
/// Diffusive slopes lie in this band.
pub const DIFFUSIVE_BAND: (f64, f64) = (0.9, 1.1);
/// Smallest ensemble accepted by [`fit_crossover`].
pub const MIN_CROSSOVER_REALIZATIONS: usize = 16;
/// Saturation requires `sigma2(2T)/sigma2(T)` inside this band.
pub const SATURATION_BAND: (f64, f64) = (0.9, 1.1);

/// `sum_x x^2 |psi(x)|^2`, measured about the release site `x = 0`.
pub fn variance(psi: &WavePacket) -> f64 {
    psi.coordinates()
        .zip(psi.amplitudes())
        .map(|(x, a)| (x as f64).powi(2) * a.norm_sqr())
        .sum()
}

/// `sum_x x |psi(x)|^2`.
pub fn mean_position(psi: &WavePacket) -> f64 {
    psi.coordinates()
        .zip(psi.amplitudes())
        .map(|(x, a)| x as f64 * a.norm_sqr())
        .sum()
}

/// `1 / sum_x P(x)^2` for a normalised distribution.
pub fn participation_ratio(p: &[f64]) -> f64 {
    let total: f64 = p.iter().sum();
    let s: f64 = p.iter().map(|v| v * v).sum();
    total * total / s
}

/// Time-averaged return probability `C(t) = (1/t) int_0^t p0` by the
/// trapezoid rule over the given samples; `C(0) = p0(0)`.
pub fn return_probability(times: &[f64], p0: &[f64]) -> Result<Vec<f64>> {
    if times.len() != p0.len() {
        return Err(QwalkError::LengthMismatch {
            expected: times.len(),
            found: p0.len(),
        });
    }
    let mut out = Vec::with_capacity(times.len());
    let mut integral = 0.0;
    for i in 0..times.len() {
        if i > 0 {
            integral += 0.5 * (times[i] - times[i - 1]) * (p0[i] + p0[i - 1]);
        }
        let elapsed = times[i] - times[0];
        out.push(if elapsed > 0.0 { integral / elapsed } else { p0[i] });
    }
    Ok(out)
}

/// Sampled observables of one trajectory or of an ensemble mean.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub p0: Vec<f64>,
    pub c_of_t: Vec<f64>,
    pub norm: Vec<f64>,
}

impl ObservableSeries {
    pub fn with_capacity(n: usize) -> Self {
        ObservableSeries {
            times: Vec::with_capacity(n),
            sigma2: Vec::with_capacity(n),
            p0: Vec::with_capacity(n),
            c_of_t: Vec::with_capacity(n),
            norm: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, t: f64, sigma2: f64, p0: f64, c: f64, norm: f64) {
        self.times.push(t);
        self.sigma2.push(sigma2);
        self.p0.push(p0);
        self.c_of_t.push(c);
        self.norm.push(norm);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Pointwise ensemble mean; every member must share the same times.
    pub fn mean(members: &[ObservableSeries]) -> Result<ObservableSeries> {
        let first = members
            .first()
            .ok_or_else(|| QwalkError::invalid("ensemble", "needs at least one realization"))?;
        let n = first.len();
        let mut out = ObservableSeries {
            times: first.times.clone(),
            sigma2: vec![0.0; n],
            p0: vec![0.0; n],
            c_of_t: vec![0.0; n],
            norm: vec![0.0; n],
        };
        for m in members {
            if m.len() != n {
                return Err(QwalkError::LengthMismatch {
                    expected: n,
                    found: m.len(),
                });
            }
            if m.times != first.times {
                return Err(QwalkError::invalid("ensemble", "members sampled at different times"));
            }
            for i in 0..n {
                out.sigma2[i] += m.sigma2[i];
                out.p0[i] += m.p0[i];
                out.c_of_t[i] += m.c_of_t[i];
                out.norm[i] += m.norm[i];
            }
        }
        let k = members.len() as f64;
        for v in [&mut out.sigma2, &mut out.p0, &mut out.c_of_t, &mut out.norm] {
            v.iter_mut().for_each(|x| *x /= k);
        }
        Ok(out)
    }

    /// Standard error of the ensemble mean of `sigma2` at each sample.
    pub fn sigma2_stderr(members: &[ObservableSeries]) -> Vec<f64> {
        let Some(first) = members.first() else {
            return Vec::new();
        };
        (0..first.len())
            .map(|i| stderr(members.iter().map(|m| m.sigma2[i])))
            .collect()
    }
}

/// `(mean, standard error)` of a sample; the error is 0 for fewer than two values.
pub fn mean_stderr(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.into_iter().collect();
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn stderr(values: impl IntoIterator<Item = f64>) -> f64 {
    mean_stderr(values).1
}

/// `P(x, t)` on a fixed range of rows, one column per sample time.
#[derive(Clone, Debug, PartialEq)]
pub struct Carpet {
    x_lo: i64,
    rows: usize,
    times: Vec<f64>,
    /// Column-major: column `j` is `data[j * rows..(j + 1) * rows]`.
    data: Vec<f64>,
}

impl Carpet {
    /// Empty raster for `x` in `[x_lo, x_hi]`.
    pub fn new(x_lo: i64, x_hi: i64) -> Self {
        assert!(x_hi >= x_lo, "empty carpet range");
        Carpet {
            x_lo,
            rows: (x_hi - x_lo + 1) as usize,
            times: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn x_range(&self) -> (i64, i64) {
        (self.x_lo, self.x_lo + self.rows as i64 - 1)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn columns(&self) -> usize {
        self.times.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn push_column(&mut self, psi: &WavePacket) {
        self.times.push(psi.time());
        self.data
            .extend((0..self.rows).map(|r| psi.probability_at(self.x_lo + r as i64)));
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn get(&self, x: i64, j: usize) -> f64 {
        self.column(j)[(x - self.x_lo) as usize]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Adds another raster of the same shape (for ensemble averages).
    pub fn accumulate(&mut self, other: &Carpet) -> Result<()> {
        if other.x_lo != self.x_lo || other.rows != self.rows || other.times.len() != self.times.len() {
            return Err(QwalkError::LengthMismatch {
                expected: self.data.len(),
                found: other.data.len(),
            });
        }
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    /// 8-bit grey levels, row `x` by column `t`, `round(255 P / P_max)`.
    /// With `log_scale` the level is `255 ln(1 + P/P_min) / ln(1 + P_max/P_min)`
    /// where `P_min = floor * P_max`.
    pub fn grey_levels(&self, log_scale: bool, floor: f64) -> Vec<u8> {
        let p_max = self.max();
        let mut out = Vec::with_capacity(self.data.len());
        for r in 0..self.rows {
            for j in 0..self.columns() {
                let p = self.data[j * self.rows + r];
                let level = if p_max <= 0.0 {
                    0.0
                } else if log_scale {
                    let p_min = p_max * floor;
                    255.0 * (p / p_min).ln_1p() / (p_max / p_min).ln_1p()
                } else {
                    255.0 * p / p_max
                };
                out.push(level.round().clamp(0.0, 255.0) as u8);
            }
        }
        out
    }

    /// Binary PGM (P5), width = sample times, height = sites.
    pub fn to_pgm(&self, log_scale: bool, floor: f64) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.columns(), self.rows).into_bytes();
        out.extend(self.grey_levels(log_scale, floor));
        out
    }
}

/// Builds a raster by evaluating `state_at(t)` for each sample time.
pub fn accumulate_carpet(
    mut state_at: impl FnMut(f64) -> Result<WavePacket>,
    x_range: (i64, i64),
    t_samples: &[f64],
) -> Result<Carpet> {
    let mut carpet = Carpet::new(x_range.0, x_range.1);
    for &t in t_samples {
        carpet.push_column(&state_at(t)?);
    }
    Ok(carpet)
}

/// Least-squares slope of `ln y` against `ln t`.
pub fn loglog_slope(times: &[f64], values: &[f64]) -> f64 {
    let n = times.len() as f64;
    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// One sliding-window slope: window covers samples `start..start + SLOPE_WINDOW`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalSlope {
    pub t_first: f64,
    pub t_last: f64,
    pub slope: f64,
}

/// Slopes of `ln sigma2` against `ln t` over sliding windows of
/// [`SLOPE_WINDOW`] samples; samples with `t <= 0` or `sigma2 <= 0` are skipped.
pub fn local_slopes(times: &[f64], sigma2: &[f64]) -> Vec<LocalSlope> {
    let (t, s): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(sigma2)
        .filter(|(t, s)| **t > 0.0 && **s > 0.0)
        .map(|(t, s)| (*t, *s))
        .unzip();
    if t.len() < SLOPE_WINDOW {
        return Vec::new();
    }
    (0..=t.len() - SLOPE_WINDOW)
        .map(|i| LocalSlope {
            t_first: t[i],
            t_last: t[i + SLOPE_WINDOW - 1],
            slope: loglog_slope(&t[i..i + SLOPE_WINDOW], &s[i..i + SLOPE_WINDOW]),
        })
        .collect()
}

/// Boundaries of the ballistic and diffusive regimes of `sigma2(t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossoverEstimate {
    pub w: f64,
    /// End of the leading run of windows with slope >= 1.9.
    pub t_quad_end: Option<f64>,
    /// Start of the final run of windows with slope in [0.9, 1.1].
    pub t_diff_start: Option<f64>,
}

impl CrossoverEstimate {
    /// Crossover time: the onset of diffusion.
    pub fn t_c(&self) -> Option<f64> {
        self.t_diff_start
    }
}

/// Crossover estimate of a single (typically ensemble-averaged) curve.
pub fn fit_crossover_series(times: &[f64], sigma2: &[f64], w: f64) -> Result<CrossoverEstimate> {
    let slopes = local_slopes(times, sigma2);
    if slopes.is_empty() {
        return Err(QwalkError::Undetermined(format!(
            "fewer than {SLOPE_WINDOW} usable samples"
        )));
    }
    let t_quad_end = slopes
        .iter()
        .take_while(|s| s.slope >= BALLISTIC_SLOPE)
        .last()
        .map(|s| s.t_last);
    let in_band = |s: &LocalSlope| s.slope >= DIFFUSIVE_BAND.0 && s.slope <= DIFFUSIVE_BAND.1;
    let tail = slopes.iter().rev().take_while(|s| in_band(s)).count();
    let t_diff_start = (tail > 0).then(|| slopes[slopes.len() - tail].t_first);
    Ok(CrossoverEstimate {
        w,
        t_quad_end,
        t_diff_start,
    })
}

/// Crossover estimate from the ensemble-mean `sigma2` of at least
/// [`MIN_CROSSOVER_REALIZATIONS`] trajectories.
pub fn fit_crossover(ensemble: &[ObservableSeries], w: f64) -> Result<CrossoverEstimate> {
    if ensemble.len() < MIN_CROSSOVER_REALIZATIONS {
        return Err(QwalkError::invalid(
            "ensemble",
            format!(
                "crossover fit needs at least {MIN_CROSSOVER_REALIZATIONS} realizations, got {}",
                ensemble.len()
            ),
        ));
    }
    let mean = ObservableSeries::mean(ensemble)?;
    fit_crossover_series(&mean.times, &mean.sigma2, w)
}

/// Localized spread of a static-disorder ensemble.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Saturation {
    pub sigma2_inf: f64,
    pub stderr: f64,
    /// `sigma2(T_max) / sigma2(T_max / 2)` of the ensemble mean.
    pub ratio: f64,
}

/// Linear interpolation of `ys` at `t` (clamped to the sampled range).
fn interpolate(ts: &[f64], ys: &[f64], t: f64) -> f64 {
    let i = ts.partition_point(|&s| s < t);
    if i == 0 {
        return ys[0];
    }
    if i >= ts.len() {
        return ys[ts.len() - 1];
    }
    let f = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
    ys[i - 1] + f * (ys[i] - ys[i - 1])
}

/// Saturated variance: the mean over the final quarter of the run, with the
/// standard error taken across per-realization time averages. Fails unless
/// the last doubling of time changed `sigma2` by less than 10%.
pub fn localization_saturation(ensemble: &[ObservableSeries]) -> Result<Saturation> {
    let mean = ObservableSeries::mean(ensemble)?;
    let t_last = *mean
        .times
        .last()
        .ok_or_else(|| QwalkError::invalid("ensemble", "empty series"))?;
    let half = interpolate(&mean.times, &mean.sigma2, 0.5 * t_last);
    let ratio = mean.sigma2[mean.len() - 1] / half;
    if !(ratio >= SATURATION_BAND.0 && ratio <= SATURATION_BAND.1) {
        return Err(QwalkError::NotSaturated { ratio });
    }
    let start = mean.times.partition_point(|&t| t < 0.75 * t_last);
    let per_member = ensemble.iter().map(|m| {
        let tail = &m.sigma2[start..];
        tail.iter().sum::<f64>() / tail.len() as f64
    });
    let (sigma2_inf, stderr) = mean_stderr(per_member);
    Ok(Saturation {
        sigma2_inf,
        stderr,
        ratio,
    })
}
