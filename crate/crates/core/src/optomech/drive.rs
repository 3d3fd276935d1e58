use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Piecewise-linear drive amplitude `Ω(t)` and phase `φ(t)` on shared knots.
///
/// The phase is kept unwrapped; [`DriveWaveforms::wrapped_phase`] maps it
/// into `[0, 2π)` for output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveWaveforms {
    knots: Vec<f64>,
    omega: Vec<f64>,
    phi: Vec<f64>,
}

/// Position of `t` inside the knot sequence: `value = (1-w) v[index] + w v[index+1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub index: usize,
    pub weight: f64,
}

impl DriveWaveforms {
    pub fn new(knots: Vec<f64>, omega: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(invalid("need at least two knots"));
        }
        if omega.len() != knots.len() || phi.len() != knots.len() {
            return Err(invalid(format!(
                "{} knots but {} amplitude and {} phase values",
                knots.len(),
                omega.len(),
                phi.len()
            )));
        }
        if knots[0] != 0.0 {
            return Err(invalid("first knot must be at t = 0"));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("knots must be strictly increasing"));
        }
        if knots
            .iter()
            .chain(&omega)
            .chain(&phi)
            .any(|v| !v.is_finite())
        {
            return Err(invalid("drive values must be finite"));
        }
        Ok(Self { knots, omega, phi })
    }

    /// `n_knots` equally spaced knots on `[0, t_end]` with constant values.
    pub fn uniform(t_end: f64, n_knots: usize, omega: f64, phi: f64) -> Result<Self> {
        if n_knots < 2 {
            return Err(invalid("need at least two knots"));
        }
        let knots = (0..n_knots)
            .map(|i| t_end * i as f64 / (n_knots - 1) as f64)
            .collect();
        Self::new(knots, vec![omega; n_knots], vec![phi; n_knots])
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn t_end(&self) -> f64 {
        *self.knots.last().expect("at least two knots")
    }

    /// Replaces amplitude and phase values, keeping the knots.
    pub fn with_values(&self, omega: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        Self::new(self.knots.clone(), omega, phi)
    }

    pub fn segment(&self, t: f64) -> Segment {
        let last = self.knots.len() - 2;
        let index = self
            .knots
            .partition_point(|&k| k <= t)
            .saturating_sub(1)
            .min(last);
        let (a, b) = (self.knots[index], self.knots[index + 1]);
        let weight = ((t - a) / (b - a)).clamp(0.0, 1.0);
        Segment { index, weight }
    }

    fn interpolate(values: &[f64], s: Segment) -> f64 {
        (1.0 - s.weight) * values[s.index] + s.weight * values[s.index + 1]
    }

    /// `(Ω(t), φ(t))`; clamped to the end values outside the knot span.
    pub fn sample(&self, t: f64) -> (f64, f64) {
        let s = self.segment(t);
        (
            Self::interpolate(&self.omega, s),
            Self::interpolate(&self.phi, s),
        )
    }

    pub fn wrapped_phase(phi: f64) -> f64 {
        phi.rem_euclid(std::f64::consts::TAU)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_and_segments() {
        let d = DriveWaveforms::new(
            vec![0.0, 1.0, 3.0],
            vec![0.0, 10.0, 30.0],
            vec![1.0, 1.0, -1.0],
        )
        .unwrap();
        assert_eq!(d.sample(0.0), (0.0, 1.0));
        assert_eq!(d.sample(0.5), (5.0, 1.0));
        assert_eq!(d.sample(2.0), (20.0, 0.0));
        assert_eq!(d.sample(3.0), (30.0, -1.0));
        assert_eq!(
            d.segment(3.0),
            Segment {
                index: 1,
                weight: 1.0
            }
        );
        assert_eq!(
            d.segment(1.0),
            Segment {
                index: 1,
                weight: 0.0
            }
        );
        assert_eq!(d.sample(5.0), (30.0, -1.0));
    }

    #[test]
    fn invalid_waveforms() {
        assert!(DriveWaveforms::new(vec![0.0], vec![1.0], vec![0.0]).is_err());
        assert!(DriveWaveforms::new(vec![0.0, 0.0], vec![1.0; 2], vec![0.0; 2]).is_err());
        assert!(DriveWaveforms::new(vec![0.1, 1.0], vec![1.0; 2], vec![0.0; 2]).is_err());
        assert!(DriveWaveforms::new(vec![0.0, 1.0], vec![f64::NAN, 1.0], vec![0.0; 2]).is_err());
        assert!(DriveWaveforms::new(vec![0.0, 1.0], vec![1.0; 3], vec![0.0; 2]).is_err());
    }

    #[test]
    fn uniform_knots_end_exactly() {
        let d = DriveWaveforms::uniform(38.0, 200, 500.0, 0.0).unwrap();
        assert_eq!(d.t_end(), 38.0);
        assert_eq!(d.len(), 200);
    }

    #[test]
    fn wrapping() {
        let w = DriveWaveforms::wrapped_phase(-0.5);
        assert!((w - (std::f64::consts::TAU - 0.5)).abs() < 1e-15);
    }
}
