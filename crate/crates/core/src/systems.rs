//! Synthetic benchmark systems and additive measurement noise.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dmd::SnapshotData;
use crate::error::{Error, Result};
use crate::linalg::RealMatrix;

/// `ż = M z` with `M = [[1, −2], [1, −1]]`, whose eigenvalues are `±i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearPeriodicSpec {
    pub z0: [f64; 2],
    pub t_end: f64,
    pub n: usize,
}

impl Default for LinearPeriodicSpec {
    fn default() -> Self {
        LinearPeriodicSpec {
            z0: [1.0, 0.1],
            t_end: 2.0 * PI,
            n: 32,
        }
    }
}

impl LinearPeriodicSpec {
    pub fn system_matrix() -> RealMatrix {
        RealMatrix::from_row_slice(2, 2, &[1.0, -2.0, 1.0, -1.0])
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n as f64
    }

    /// `exp(M t)`. Since `M² = −I` this is `I cos t + M sin t`.
    pub fn propagator(t: f64) -> RealMatrix {
        RealMatrix::identity(2, 2) * t.cos() + Self::system_matrix() * t.sin()
    }

    /// Exact state at time `t`.
    pub fn state(&self, t: f64) -> [f64; 2] {
        let p = Self::propagator(t);
        let [a, b] = self.z0;
        [p[(0, 0)] * a + p[(0, 1)] * b, p[(1, 0)] * a + p[(1, 1)] * b]
    }

    /// Exact states at `t_0 .. t_{count-1}`, one per column.
    pub fn path(&self, count: usize) -> RealMatrix {
        let dt = self.dt();
        let mut z = RealMatrix::zeros(2, count);
        for j in 0..count {
            let s = self.state(j as f64 * dt);
            z[(0, j)] = s[0];
            z[(1, j)] = s[1];
        }
        z
    }
}

pub fn gen_linear_periodic(spec: &LinearPeriodicSpec) -> Result<SnapshotData> {
    if spec.n < 2 {
        return Err(Error::InvalidArgument(format!("need n >= 2 samples, got {}", spec.n)));
    }
    if !(spec.t_end > 0.0 && spec.t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_end must be positive, got {}", spec.t_end)));
    }
    SnapshotData::from_sequence(&spec.path(spec.n + 1), spec.dt())
}

/// `z(x, t) = sin(k₁x − ω₁t) e^{γ₁t} + a₂ sin(k₂x − ω₂t) e^{γ₂t}`.
///
/// `amp2` is 1 for the standard system; setting it to 0 leaves a single mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SineSuperpositionSpec {
    pub k1: f64,
    pub omega1: f64,
    pub gamma1: f64,
    pub k2: f64,
    pub omega2: f64,
    pub gamma2: f64,
    pub amp2: f64,
    pub x: Vec<f64>,
    pub t: Vec<f64>,
}

impl Default for SineSuperpositionSpec {
    fn default() -> Self {
        SineSuperpositionSpec::with_grid(128, 4.0 * PI, 32, 4.0)
    }
}

fn linspace(start: f64, end: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let h = (end - start) / (count - 1) as f64;
    (0..count).map(|i| start + i as f64 * h).collect()
}

impl SineSuperpositionSpec {
    /// Default mode parameters on `nx` points of `[0, x_end]` and `n + 1`
    /// samples of `[0, t_end]`.
    pub fn with_grid(nx: usize, x_end: f64, n: usize, t_end: f64) -> Self {
        SineSuperpositionSpec {
            k1: 1.0,
            omega1: 1.0,
            gamma1: 1.0,
            k2: 0.4,
            omega2: 3.7,
            gamma2: -0.2,
            amp2: 1.0,
            x: linspace(0.0, x_end, nx),
            t: linspace(0.0, t_end, n + 1),
        }
    }

    pub fn with_n(n: usize) -> Self {
        SineSuperpositionSpec::with_grid(128, 4.0 * PI, n, 4.0)
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        (self.k1 * x - self.omega1 * t).sin() * (self.gamma1 * t).exp()
            + self.amp2 * (self.k2 * x - self.omega2 * t).sin() * (self.gamma2 * t).exp()
    }

    /// Continuous-time eigenvalues `γ ± iω` of the active modes.
    pub fn eigenvalues(&self) -> Vec<num_complex::Complex64> {
        use num_complex::Complex64;
        let mut out = vec![
            Complex64::new(self.gamma1, self.omega1),
            Complex64::new(self.gamma1, -self.omega1),
        ];
        if self.amp2 != 0.0 {
            out.push(Complex64::new(self.gamma2, self.omega2));
            out.push(Complex64::new(self.gamma2, -self.omega2));
        }
        out
    }
}

pub fn gen_sine_superposition(spec: &SineSuperpositionSpec) -> Result<SnapshotData> {
    if spec.x.len() < 2 || spec.t.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two spatial and two time samples".into(),
        ));
    }
    let dt = spec.t[1] - spec.t[0];
    let uniform = spec
        .t
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1.0));
    if !(dt > 0.0) || !uniform {
        return Err(Error::InvalidArgument("time grid must be increasing and uniform".into()));
    }
    let z = RealMatrix::from_fn(spec.x.len(), spec.t.len(), |i, j| spec.value(spec.x[i], spec.t[j]));
    SnapshotData::from_sequence(&z, dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseLevel {
    /// Per-entry variance σ².
    Variance(f64),
    /// `10 log₁₀(P / σ²)` where `P` is the mean squared clean entry.
    Snr(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub level: NoiseLevel,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn variance(sigma2: f64, seed: u64) -> Self {
        NoiseSpec {
            level: NoiseLevel::Variance(sigma2),
            seed,
        }
    }

    pub fn snr_db(db: f64, seed: u64) -> Self {
        NoiseSpec {
            level: NoiseLevel::Snr(db),
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        NoiseSpec { seed, ..self }
    }

    /// The variance this spec implies for `data`.
    pub fn resolve_variance(&self, data: &SnapshotData) -> Result<f64> {
        match self.level {
            NoiseLevel::Variance(v) if v >= 0.0 && v.is_finite() => Ok(v),
            NoiseLevel::Variance(v) => {
                Err(Error::InvalidArgument(format!("noise variance must be >= 0, got {v}")))
            }
            NoiseLevel::Snr(db) if db.is_finite() => Ok(signal_power(data) / 10f64.powf(db / 10.0)),
            NoiseLevel::Snr(db) => Err(Error::InvalidArgument(format!("invalid SNR {db} dB"))),
        }
    }
}

/// Mean squared entry over both snapshot matrices.
pub fn signal_power(data: &SnapshotData) -> f64 {
    let count = 2 * data.xtilde.len();
    (data.xtilde.norm_squared() + data.ytilde.norm_squared()) / count as f64
}

/// SNR in dB of `data` against noise of variance `sigma2`.
pub fn snr_db(data: &SnapshotData, sigma2: f64) -> f64 {
    10.0 * (signal_power(data) / sigma2).log10()
}

/// Adds independent Gaussian noise to every entry of both snapshot
/// matrices (`xtilde` first, column-major, then `ytilde`).
pub fn add_noise(data: &SnapshotData, spec: &NoiseSpec) -> Result<SnapshotData> {
    let var = spec.resolve_variance(data)?;
    if var == 0.0 {
        return Ok(data.clone());
    }
    let normal = Normal::new(0.0, var.sqrt())
        .map_err(|e| Error::InvalidArgument(format!("noise distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = data.clone();
    for v in out.xtilde.iter_mut().chain(out.ytilde.iter_mut()) {
        *v += normal.sample(&mut rng);
    }
    Ok(out)
}
