use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::control::{IterationRecord, LossKind, OptimizerState};
use crate::dynamics::TimeGrid;
use crate::gaussian::negativity_of;
use crate::optomech::{CoupledState, DriveWaveforms, OptomechParams};

pub const TRAJECTORY_HEADER: [&str; 29] = [
    "t",
    "n_b",
    "eta_minus",
    "E_N",
    "V11",
    "V12",
    "V13",
    "V14",
    "V21",
    "V22",
    "V23",
    "V24",
    "V31",
    "V32",
    "V33",
    "V34",
    "V41",
    "V42",
    "V43",
    "V44",
    "alpha_re",
    "alpha_im",
    "beta_re",
    "beta_im",
    "Delta",
    "G_re",
    "G_im",
    "Omega",
    "phi",
];

pub const CHECKPOINT_VERSION: u32 = 1;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    Ok(csv::Writer::from_path(path)?)
}

/// Observables at one node of a coupled trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeObservables {
    pub n_b: f64,
    pub eta_minus: f64,
    pub log_negativity: f64,
}

pub fn observables(state: &CoupledState) -> Result<NodeObservables, CliError> {
    let neg = negativity_of(&state.cov)?;
    Ok(NodeObservables {
        n_b: 0.5 * (state.cov[(2, 2)] + state.cov[(3, 3)] - 1.0),
        eta_minus: neg.eta_minus,
        log_negativity: neg.log_negativity,
    })
}

/// Trajectory rows for the states on `grid` shifted by `t0`; `drives` is
/// sampled at the shifted times, or treated as zero when absent.
pub fn trajectory_rows(
    params: &OptomechParams,
    drives: Option<&DriveWaveforms>,
    grid: &TimeGrid,
    t0: f64,
    states: &[CoupledState],
) -> Result<Vec<Vec<f64>>, CliError> {
    states
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let t = t0 + grid.time(k);
            let obs = observables(s)?;
            let (omega, phi) = drives.map_or((0.0, 0.0), |d| d.sample(t));
            let g = params.coupling(s.alpha);
            let mut row = vec![t, obs.n_b, obs.eta_minus, obs.log_negativity];
            for r in 0..4 {
                for c in 0..4 {
                    row.push(s.cov[(r, c)]);
                }
            }
            row.extend([
                s.alpha.re,
                s.alpha.im,
                s.beta.re,
                s.beta.im,
                params.detuning(s.beta),
                g.re,
                g.im,
                omega,
                DriveWaveforms::wrapped_phase(phi),
            ]);
            Ok(row)
        })
        .collect()
}

pub fn write_trajectory(path: &Path, rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(TRAJECTORY_HEADER)?;
    for row in rows {
        w.write_record(row.iter().map(|x| fmt(*x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pulse(path: &Path, drives: &DriveWaveforms) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["t", "Omega", "phi"])?;
    for ((t, o), p) in drives.knots().iter().zip(drives.omega()).zip(drives.phi()) {
        w.write_record([fmt(*t), fmt(*o), fmt(*p)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pulse(path: &Path) -> Result<DriveWaveforms, CliError> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read pulse {}: {e}", path.display())))?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "Omega", "phi"] {
        return Err(CliError::Config(format!(
            "{} is not a pulse file",
            path.display()
        )));
    }
    let (mut t, mut omega, mut phi) = (Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| -> Result<f64, CliError> {
            rec[i].parse().map_err(|_| {
                CliError::Config(format!("bad number {:?} in {}", &rec[i], path.display()))
            })
        };
        t.push(field(0)?);
        omega.push(field(1)?);
        phi.push(field(2)?);
    }
    DriveWaveforms::new(t, omega, phi).map_err(|e| CliError::Config(e.to_string()))
}

pub fn write_optlog(path: &Path, records: &[IterationRecord]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record([
        "iter",
        "loss",
        "grad_norm",
        "step_omega",
        "step_phi",
        "wall_s",
    ])?;
    for r in records {
        w.write_record([
            r.iter.to_string(),
            fmt(r.loss),
            fmt(r.grad_norm),
            fmt(r.step_omega),
            fmt(r.step_phi),
            fmt(r.wall_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `(channel, ζ, loss)` rows.
pub fn write_deviation(path: &Path, rows: &[(&str, f64, f64)]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["channel", "zeta", "loss"])?;
    for (c, z, l) in rows {
        w.write_record([c.to_string(), fmt(*z), fmt(*l)])?;
    }
    w.flush()?;
    Ok(())
}

/// One block per channel: node time, one column per noisy run, pointwise mean.
pub fn write_noise(
    path: &Path,
    times: &[f64],
    channels: &[(&str, Vec<Vec<f64>>)],
) -> Result<(), CliError> {
    let runs = channels.first().map_or(0, |c| c.1.len());
    let mut w = writer(path)?;
    let mut header = vec!["channel".to_string(), "t".to_string()];
    header.extend((0..runs).map(|r| format!("run{r}")));
    header.push("mean".into());
    w.write_record(&header)?;
    for (name, values) in channels {
        for (k, t) in times.iter().enumerate() {
            let mut rec = vec![name.to_string(), fmt(*t)];
            let mut sum = 0.0;
            for run in values {
                rec.push(fmt(run[k]));
                sum += run[k];
            }
            rec.push(fmt(sum / values.len() as f64));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub verb: String,
    pub loss_kind: LossKind,
    pub final_loss: f64,
    pub n_b: f64,
    pub eta_minus: f64,
    pub log_negativity: f64,
    pub iterations: usize,
    pub sideband_limit: f64,
    pub wall_s: f64,
    pub config_hash: String,
    pub version: String,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text + "\n")?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngState {
    pub algorithm: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config_hash: String,
    pub verb: String,
    pub loss_kind: LossKind,
    pub rng: RngState,
    pub state: OptimizerState,
    pub records: Vec<IterationRecord>,
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read checkpoint {}: {e}", path.display())))?;
    let cp: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("malformed checkpoint {}: {e}", path.display())))?;
    if cp.version != CHECKPOINT_VERSION {
        return Err(CliError::Config(format!(
            "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
            cp.version
        )));
    }
    Ok(cp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatted_floats_round_trip() {
        for x in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            6.02214076e23,
            f64::MIN_POSITIVE,
            573.3312345678901,
        ] {
            assert_eq!(fmt(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn pulse_round_trips_bit_for_bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pulse.csv");
        let d = DriveWaveforms::new(
            vec![0.0, 0.7, 1.9, 38.0],
            vec![500.0, 1.0 / 3.0, -7.25, 1e-9],
            vec![0.0, 3.7, -0.1, 12.5],
        )
        .unwrap();
        write_pulse(&path, &d).unwrap();
        assert_eq!(read_pulse(&path).unwrap(), d);
    }

    #[test]
    fn pulse_with_wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        fs::write(&path, "a,b,c\n0,1,2\n1,1,2\n").unwrap();
        assert!(matches!(read_pulse(&path), Err(CliError::Config(_))));
    }
}
