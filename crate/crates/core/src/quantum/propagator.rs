use super::{FockOperators, QuantumError};
use crate::params::NormalizedModel;
use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, Par};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitScheme {
    /// Kinetic–potential–kinetic splitting, second order.
    Strang,
    /// Triple-jump composition of Strang steps, fourth order.
    Yoshida4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorSettings {
    pub steps_per_period: usize,
    /// Number of uniformly spaced sub-times at which `U(t)` is kept.
    pub samples: usize,
    pub scheme: SplitScheme,
    /// Maximum number of step doublings in the self-convergence check; 0 disables it.
    pub max_doublings: usize,
    pub convergence_tol: f64,
}

impl Default for PropagatorSettings {
    fn default() -> Self {
        Self { steps_per_period: 256, samples: 64, scheme: SplitScheme::Yoshida4, max_doublings: 1, convergence_tol: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub nu_d: f64,
    pub total: Mat<c64>,
    /// `U(t_k)` at `t_k = kT/N_t`, `k = 0..N_t`; the first entry is the identity.
    pub partials: Vec<Mat<c64>>,
    pub steps_per_period: usize,
    /// Max deviation of `U†U` from the identity on the lowest `dim/2` columns.
    pub unitarity_defect: f64,
    /// Frobenius change of `U(T)` on the lowest `dim/2` columns at the last doubling.
    pub convergence_error: f64,
    pub convergence_flag: bool,
}

/// Propagates `U` over one drive period by operator splitting between the
/// diagonal `H₀` (Fock basis) and the potential (diagonal in the x eigenbasis).
pub fn one_period_propagator(
    model: &NormalizedModel,
    ops: &FockOperators,
    settings: &PropagatorSettings,
) -> Result<Propagation, QuantumError> {
    let s = settings;
    if s.samples == 0 || s.steps_per_period == 0 || s.steps_per_period % s.samples != 0 {
        return Err(QuantumError::InvalidArgument(format!(
            "steps_per_period ({}) must be a positive multiple of samples ({})",
            s.steps_per_period, s.samples
        )));
    }
    let mut steps = s.steps_per_period;
    let mut best = propagate(model, ops, steps, s.samples, s.scheme);
    let mut convergence_error = f64::NAN;
    let mut convergence_flag = s.max_doublings == 0;
    for _ in 0..s.max_doublings {
        steps *= 2;
        let finer = propagate(model, ops, steps, s.samples, s.scheme);
        convergence_error = low_column_distance(&best.0, &finer.0);
        best = finer;
        if convergence_error <= s.convergence_tol {
            convergence_flag = true;
            break;
        }
    }
    let (total, partials) = best;
    let unitarity_defect = unitarity_defect(&total);
    if unitarity_defect > 1e-6 {
        return Err(QuantumError::UnitarityLoss(unitarity_defect));
    }
    Ok(Propagation {
        nu_d: model.nu_d,
        total,
        partials,
        steps_per_period: steps,
        unitarity_defect,
        convergence_error,
        convergence_flag,
    })
}

fn low_column_distance(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    let cols = a.ncols() / 2;
    let mut acc = 0.0;
    for j in 0..cols {
        for i in 0..a.nrows() {
            acc += (a[(i, j)] - b[(i, j)]).norm_sqr();
        }
    }
    acc.sqrt()
}

pub(crate) fn unitarity_defect(u: &Mat<c64>) -> f64 {
    let h = u.ncols() / 2;
    let low = u.as_ref().subcols(0, h);
    let g = low.adjoint() * low;
    let mut worst = 0.0f64;
    for j in 0..h {
        for i in 0..h {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - c64::new(want, 0.0)).norm());
        }
    }
    worst
}

/// State of the propagation stored as the real block `[Re U | Im U]`.
struct Stepper<'a> {
    ops: &'a FockOperators,
    amp: f64,
    kx: f64,
    xi: f64,
    nu: f64,
    z: Mat<f64>,
    y: Mat<f64>,
}

impl<'a> Stepper<'a> {
    fn new(model: &NormalizedModel, ops: &'a FockOperators) -> Self {
        let n = ops.dim;
        let mut z = Mat::zeros(n, 2 * n);
        for i in 0..n {
            z[(i, i)] = 1.0;
        }
        Self {
            ops,
            amp: model.beta / (2.0 * ops.lambda * ops.lambda),
            kx: std::f64::consts::SQRT_2 * ops.lambda,
            xi: model.xi_d,
            nu: model.nu_d,
            z,
            y: Mat::zeros(n, 2 * n),
        }
    }

    fn rotate_rows(m: &mut Mat<f64>, angle: impl Fn(usize) -> f64) {
        let n = m.nrows();
        let phases: Vec<(f64, f64)> = (0..n).map(|j| angle(j).sin_cos()).collect();
        for c in 0..n {
            for (j, &(sn, cs)) in phases.iter().enumerate() {
                let re = m[(j, c)];
                let im = m[(j, c + n)];
                m[(j, c)] = cs * re - sn * im;
                m[(j, c + n)] = sn * re + cs * im;
            }
        }
    }

    /// One Strang step of length `dt` starting at time `t`.
    fn strang(&mut self, t: f64, dt: f64) {
        let half = 0.5 * dt;
        Self::rotate_rows(&mut self.z, |j| -(j as f64 + 0.5) * half);
        let w = &self.ops.x_eigenvectors;
        matmul(self.y.as_mut(), Accum::Replace, w.transpose(), self.z.as_ref(), 1.0, Par::Seq);
        let drive = self.xi * (self.nu * (t + half)).sin();
        let (amp, kx, xs) = (self.amp, self.kx, &self.ops.x_eigenvalues);
        Self::rotate_rows(&mut self.y, |j| amp * (kx * xs[j] + drive).cos() * dt);
        matmul(self.z.as_mut(), Accum::Replace, w.as_ref(), self.y.as_ref(), 1.0, Par::Seq);
        Self::rotate_rows(&mut self.z, |j| -(j as f64 + 0.5) * half);
    }

    fn step(&mut self, t: f64, dt: f64, scheme: SplitScheme) {
        match scheme {
            SplitScheme::Strang => self.strang(t, dt),
            SplitScheme::Yoshida4 => {
                let cbrt2 = 2f64.cbrt();
                let w1 = 1.0 / (2.0 - cbrt2);
                let w0 = -cbrt2 / (2.0 - cbrt2);
                self.strang(t, w1 * dt);
                self.strang(t + w1 * dt, w0 * dt);
                self.strang(t + (w1 + w0) * dt, w1 * dt);
            }
        }
    }

    fn snapshot(&self) -> Mat<c64> {
        let n = self.ops.dim;
        Mat::from_fn(n, n, |i, j| c64::new(self.z[(i, j)], self.z[(i, j + n)]))
    }
}

fn propagate(
    model: &NormalizedModel,
    ops: &FockOperators,
    steps: usize,
    samples: usize,
    scheme: SplitScheme,
) -> (Mat<c64>, Vec<Mat<c64>>) {
    let period = 2.0 * std::f64::consts::PI / model.nu_d;
    let dt = period / steps as f64;
    let per_sample = steps / samples;
    let mut st = Stepper::new(model, ops);
    let mut partials = Vec::with_capacity(samples);
    for k in 0..steps {
        if k % per_sample == 0 {
            partials.push(st.snapshot());
        }
        st.step(k as f64 * dt, dt, scheme);
    }
    (st.snapshot(), partials)
}
