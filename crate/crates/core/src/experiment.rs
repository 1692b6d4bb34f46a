//! Experiment drivers and file output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{Experiment, InitialState, RunConfig};
use crate::disorder::{DisorderKind, DisorderSpec};
use crate::ensemble::run_ensemble;
use crate::error::{QwalkError, RunError};
use crate::integrator::{IntegrationConfig, SampleGrid, TrajectoryOptions};
use crate::lattice::{ExpansionPolicy, WavePacket};
use crate::observables::{fit_crossover, localization_saturation, Carpet, ObservableSeries};
use crate::qubit::{analytic_averaged, ensemble_qubit, AveragedQubitState, QubitParams};

/// Target for `dt * (2 + max|eps|)` when the step is chosen automatically.
const AUTO_STEP_PHASE: f64 = 0.025;
/// Upper bound on automatically chosen steps.
const AUTO_DT_MAX: f64 = 0.01;
/// `delta * dtu` for an automatically chosen white-noise refresh interval.
const AUTO_REFRESH: f64 = 0.05;
/// `delta * tmax` for an automatically chosen crossover horizon.
const AUTO_HORIZON: f64 = 100.0;
/// `P_min / P_max` of the logarithmic grey scale.
pub const LOG_SCALE_FLOOR: f64 = 1e-6;
/// Allowed relative deviation of `sigma2 / 2t^2` in the ballistic self-test.
pub const BALLISTIC_TOLERANCE: f64 = 0.01;

/// What a run produced.
#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

/// Disorder and integration settings for one strength `w`, with every
/// `auto` value resolved.
pub fn resolve_dynamics(cfg: &RunConfig, w: f64) -> Result<(DisorderSpec, IntegrationConfig), RunError> {
    let delta = w * w / 12.0;
    let dtu = cfg.dtu.value().unwrap_or(if delta > 0.0 {
        AUTO_REFRESH.min(AUTO_REFRESH / delta)
    } else {
        AUTO_REFRESH
    });
    let spec = match cfg.disorder {
        DisorderKind::Clean => DisorderSpec::clean(),
        DisorderKind::StaticBox => DisorderSpec::static_box(w, cfg.seed),
        DisorderKind::DynamicWhite => DisorderSpec::white(w, dtu, cfg.seed),
        DisorderKind::DynamicSinusoidal => DisorderSpec::sinusoidal(cfg.amp, cfg.seed),
    };
    spec.validate()?;
    let dt = match cfg.dt.value() {
        Some(dt) => dt,
        None => {
            let target = AUTO_STEP_PHASE / (2.0 + spec.max_abs_potential());
            if spec.kind == DisorderKind::DynamicWhite {
                dtu / (dtu / target).ceil()
            } else {
                target.min(AUTO_DT_MAX)
            }
        }
    };
    let t_max = match cfg.t_max.value() {
        Some(t) => t,
        None => match cfg.experiment {
            Experiment::Crossover if delta > 0.0 => (AUTO_HORIZON / delta).clamp(1.0, 2000.0),
            Experiment::Crossover => 2000.0,
            Experiment::Carpet => 100.0,
            Experiment::BallisticCheck | Experiment::Qubit => 20.0,
            Experiment::Localization => 2000.0,
        },
    };
    let samples = match cfg.experiment {
        Experiment::Carpet => SampleGrid::Linear { count: cfg.samples },
        _ => SampleGrid::Geometric {
            count: cfg.samples,
            first: None,
        },
    };
    let integ = IntegrationConfig::new(dt, t_max).with_samples(samples);
    integ.validate_for(&spec)?;
    Ok((spec, integ))
}

fn initial_state(cfg: &RunConfig) -> Result<WavePacket, RunError> {
    Ok(match cfg.initial {
        InitialState::Delta => WavePacket::delta_on_chain(cfg.n, (cfg.n - 1) / 2)?,
        InitialState::Uniform => WavePacket::uniform(cfg.n)?,
    })
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.16e}")
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".into(), fmt_num)
}

pub fn series_csv(s: &ObservableSeries) -> String {
    let mut out = String::from("t,sigma2,p0,c\n");
    for i in 0..s.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_num(s.times[i]),
            fmt_num(s.sigma2[i]),
            fmt_num(s.p0[i]),
            fmt_num(s.c_of_t[i])
        );
    }
    out
}

/// One row per site; first column `x`, then one column per sample time.
pub fn carpet_csv(c: &Carpet) -> String {
    let mut out = String::from("x");
    for &t in c.times() {
        out.push(',');
        out.push_str(&fmt_num(t));
    }
    out.push('\n');
    let (lo, hi) = c.x_range();
    for x in lo..=hi {
        out.push_str(&x.to_string());
        for j in 0..c.columns() {
            out.push(',');
            out.push_str(&fmt_num(c.get(x, j)));
        }
        out.push('\n');
    }
    out
}

pub fn qubit_csv(states: &[AveragedQubitState]) -> String {
    let mut out = String::from("t,rho,R,J,abs_rho12,theta\n");
    for s in states {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_num(s.time),
            fmt_num(s.rho),
            fmt_num(s.r),
            fmt_num(s.j),
            fmt_num(s.rho12().norm()),
            opt_num(s.theta())
        );
    }
    out
}

/// Files of a run, written together once all computation has finished.
#[derive(Default)]
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn add(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.into(), bytes.into()));
    }

    /// Writes every file under `dir`; on failure removes whatever was written.
    fn commit(self, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
        let created_dir = !dir.exists();
        std::fs::create_dir_all(dir).map_err(|source| RunError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut written = Vec::new();
        for (name, bytes) in self.files {
            let path = dir.join(&name);
            if let Err(source) = std::fs::write(&path, bytes) {
                for p in &written {
                    let _ = std::fs::remove_file(p);
                }
                let _ = std::fs::remove_file(&path);
                if created_dir {
                    let _ = std::fs::remove_dir(dir);
                }
                return Err(RunError::Io { path, source });
            }
            written.push(path);
        }
        Ok(written)
    }
}

/// Runs the configured experiment and writes its outputs under `cfg.out`.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    cfg.validate()?;
    let mut outputs = Outputs::default();
    let mut notes = Vec::new();
    let mut failure = None;
    match cfg.experiment {
        Experiment::Carpet => carpet(cfg, &mut outputs, &mut notes)?,
        Experiment::Crossover => crossover(cfg, &mut outputs, &mut notes)?,
        Experiment::Qubit => qubit(cfg, &mut outputs, &mut notes)?,
        Experiment::BallisticCheck => failure = ballistic_check(cfg, &mut outputs, &mut notes)?,
        Experiment::Localization => localization(cfg, &mut outputs, &mut notes)?,
    }
    outputs.add("manifest.txt", cfg.to_manifest());
    let files = outputs.commit(&cfg.out)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(RunSummary { files, notes }),
    }
}

fn single_w(cfg: &RunConfig) -> f64 {
    cfg.w[0]
}

fn trajectories(
    cfg: &RunConfig,
    w: f64,
    carpet_rows: Option<(i64, i64)>,
) -> Result<Vec<crate::integrator::TrajectoryOutput>, RunError> {
    let (spec, integ) = resolve_dynamics(cfg, w)?;
    let policy = ExpansionPolicy::default();
    let opts = TrajectoryOptions {
        expansion: cfg.expanding.then_some(&policy),
        carpet_rows,
    };
    let ensemble = if spec.is_static() && spec.kind == DisorderKind::Clean {
        1
    } else {
        cfg.ensemble
    };
    Ok(run_ensemble(&initial_state(cfg)?, &spec, &integ, &opts, ensemble, cfg.workers)?)
}

fn mean_series(runs: &[crate::integrator::TrajectoryOutput]) -> Result<ObservableSeries, RunError> {
    let members: Vec<ObservableSeries> = runs.iter().map(|r| r.series.clone()).collect();
    Ok(ObservableSeries::mean(&members)?)
}

fn carpet(cfg: &RunConfig, out: &mut Outputs, notes: &mut Vec<String>) -> Result<(), RunError> {
    let w = single_w(cfg);
    let psi0 = initial_state(cfg)?;
    let rows = if cfg.expanding {
        let (_, integ) = resolve_dynamics(cfg, w)?;
        let reach = (2.0 * integ.t_max).ceil() as i64 + 10;
        (psi0.x_offset() - reach, psi0.x_last() + reach)
    } else {
        (psi0.x_offset(), psi0.x_last())
    };
    let runs = trajectories(cfg, w, Some(rows))?;
    let mut total: Option<Carpet> = None;
    for r in &runs {
        let c = r.carpet.as_ref().expect("carpet requested");
        match total.as_mut() {
            Some(t) => t.accumulate(c)?,
            None => total = Some(c.clone()),
        }
    }
    let mut carpet = total.expect("at least one realization");
    carpet.scale(1.0 / runs.len() as f64);
    out.add("carpet.pgm", carpet.to_pgm(cfg.log_scale, LOG_SCALE_FLOOR));
    out.add("carpet.csv", carpet_csv(&carpet));
    out.add("series.csv", series_csv(&mean_series(&runs)?));
    notes.push(format!("carpet {} sites x {} samples", carpet.rows(), carpet.columns()));
    Ok(())
}

fn crossover(cfg: &RunConfig, out: &mut Outputs, notes: &mut Vec<String>) -> Result<(), RunError> {
    let mut table = String::from("W,t_quad_end,t_diff_start\n");
    for &w in &cfg.w {
        let runs = trajectories(cfg, w, None)?;
        let members: Vec<ObservableSeries> = runs.iter().map(|r| r.series.clone()).collect();
        let est = fit_crossover(&members, w)?;
        let _ = writeln!(
            table,
            "{},{},{}",
            fmt_num(w),
            opt_num(est.t_quad_end),
            opt_num(est.t_diff_start)
        );
        out.add(format!("series-W{w}.csv"), series_csv(&ObservableSeries::mean(&members)?));
        notes.push(format!(
            "W = {w}: t_quad_end = {}, t_diff_start = {}",
            opt_num(est.t_quad_end),
            opt_num(est.t_diff_start)
        ));
    }
    out.add("crossover.csv", table);
    Ok(())
}

fn qubit(cfg: &RunConfig, out: &mut Outputs, notes: &mut Vec<String>) -> Result<(), RunError> {
    let w = single_w(cfg);
    let (spec, integ) = resolve_dynamics(cfg, w)?;
    let params = QubitParams {
        gamma: cfg.gamma,
        w,
        seed: cfg.seed,
        ensemble_size: cfg.ensemble,
        dt: integ.dt,
        t_max: integ.t_max,
        update_interval: spec.update_interval,
        samples: cfg.samples,
        workers: cfg.workers,
    };
    let mc = ensemble_qubit(&params)?;
    let analytic: Vec<AveragedQubitState> = mc.states.iter().map(|s| analytic_averaged(&params, s.time)).collect();
    out.add("qubit.csv", qubit_csv(&mc.states));
    out.add("qubit-analytic.csv", qubit_csv(&analytic));
    notes.push(format!(
        "delta = {}, max purity drift = {:.2e}",
        params.delta(),
        mc.max_purity_drift
    ));
    Ok(())
}

/// Returns the check failure (if any) so that outputs are still written.
fn ballistic_check(cfg: &RunConfig, out: &mut Outputs, notes: &mut Vec<String>) -> Result<Option<RunError>, RunError> {
    let runs = trajectories(cfg, single_w(cfg), None)?;
    let series = mean_series(&runs)?;
    let (mut worst, mut at) = (0.0f64, 0.0);
    for (t, s2) in series.times.iter().zip(&series.sigma2) {
        if *t > 0.0 {
            let dev = (s2 / (2.0 * t * t) - 1.0).abs();
            if !(dev <= worst) {
                worst = dev;
                at = *t;
            }
        }
    }
    out.add("series.csv", series_csv(&series));
    notes.push(format!("max |sigma2/(2t^2) - 1| = {worst:.3e} at t = {at}"));
    Ok((!(worst <= BALLISTIC_TOLERANCE)).then_some(RunError::CheckFailed { worst, time: at }))
}

fn localization(cfg: &RunConfig, out: &mut Outputs, notes: &mut Vec<String>) -> Result<(), RunError> {
    let runs = trajectories(cfg, single_w(cfg), None)?;
    let members: Vec<ObservableSeries> = runs.iter().map(|r| r.series.clone()).collect();
    let mean = ObservableSeries::mean(&members)?;
    let row = match localization_saturation(&members) {
        Ok(s) => {
            notes.push(format!("sigma2_inf = {} +- {}", s.sigma2_inf, s.stderr));
            format!("{},{},{},true\n", fmt_num(s.sigma2_inf), fmt_num(s.stderr), fmt_num(s.ratio))
        }
        Err(QwalkError::NotSaturated { ratio }) => {
            notes.push(format!("not saturated: ratio {ratio}"));
            format!("nan,nan,{},false\n", fmt_num(ratio))
        }
        Err(e) => return Err(e.into()),
    };
    out.add("series.csv", series_csv(&mean));
    out.add("saturation.csv", format!("sigma2_inf,stderr,ratio,saturated\n{row}"));
    Ok(())
}
