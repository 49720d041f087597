use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::CmaError;

/// Floor for covariance eigenvalues after repair.
const EIGEN_FLOOR: f64 = 1e-20;
/// Stall thresholds.
const MAX_CONDITION: f64 = 1e14;
const TOL_X: f64 = 1e-12;
const TOL_UP_SIGMA: f64 = 1e20;
const TOL_HIST_FUN: f64 = 1e-12;
/// Population growth limit under repeated doubling.
pub const MAX_LAMBDA_FACTOR: usize = 1 << 10;

/// Strategy constants that depend on the dimension and the population size.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaParams {
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mueff: f64,
    pub cc: f64,
    pub cs: f64,
    pub c1: f64,
    pub cmu: f64,
    pub damps: f64,
    pub chi_n: f64,
}

impl CmaParams {
    pub fn new(n: usize, lambda: usize) -> Self {
        let nf = n as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu).map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln()).collect();
        let sum: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
        let cs = (mueff + 2.0) / (nf + mueff + 5.0);
        let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
        let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
        let damps = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        CmaParams { mu, weights, mueff, cc, cs, c1, cmu, damps, chi_n }
    }
}

/// Default population size, `4 + floor(3 ln n)`.
pub fn default_lambda(n: usize) -> usize {
    4 + (3.0 * (n as f64).ln()).floor() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StallReason {
    /// A principal axis step no longer moves the mean.
    NoEffectAxis,
    /// The covariance matrix is too ill-conditioned.
    Condition,
    /// The step size has collapsed.
    TolX,
    /// The step size has grown far beyond its start relative to the widest axis.
    TolUpSigma,
    /// The best error per generation has not moved for a while.
    FlatHistory,
}

#[derive(Debug, Clone)]
pub struct CmaState {
    n: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    sigma: f64,
    sigma0: f64,
    p_sigma: DVector<f64>,
    p_c: DVector<f64>,
    lambda: usize,
    lambda0: usize,
    params: CmaParams,
    generation: u64,
    restarts: u64,
    // eigendecomposition of `cov`: columns of `basis`, square roots of eigenvalues in `scales`
    basis: DMatrix<f64>,
    scales: DVector<f64>,
    eigen_generation: u64,
    // best error of recent generations, newest last
    best_history: VecDeque<f64>,
}

impl CmaState {
    /// Identity covariance around `mean` with the default population size.
    pub fn new(mean: DVector<f64>, sigma: f64) -> Result<Self, CmaError> {
        let n = mean.len();
        Self::with_lambda(mean, sigma, default_lambda(n))
    }

    pub fn with_lambda(mean: DVector<f64>, sigma: f64, lambda: usize) -> Result<Self, CmaError> {
        let n = mean.len();
        if n == 0 {
            return Err(CmaError::Config("dimension must be positive".into()));
        }
        if lambda < 4 {
            return Err(CmaError::Config("population size must be at least 4".into()));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(CmaError::NonPositiveSigma(sigma));
        }
        Ok(CmaState {
            n,
            mean,
            cov: DMatrix::identity(n, n),
            sigma,
            sigma0: sigma,
            p_sigma: DVector::zeros(n),
            p_c: DVector::zeros(n),
            lambda,
            lambda0: lambda,
            params: CmaParams::new(n, lambda),
            generation: 0,
            restarts: 0,
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            eigen_generation: 0,
            best_history: VecDeque::new(),
        })
    }

    /// Uniform mean in `[-2, 2]^n`, unit step size.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self, CmaError> {
        Self::new(random_mean(n, rng), 1.0)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn p_sigma(&self) -> &DVector<f64> {
        &self.p_sigma
    }

    pub fn p_c(&self) -> &DVector<f64> {
        &self.p_c
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn lambda0(&self) -> usize {
        self.lambda0
    }

    pub fn params(&self) -> &CmaParams {
        &self.params
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn restarts(&self) -> u64 {
        self.restarts
    }

    /// Overrides the step size. Non-positive values are rejected by the next ask.
    pub fn set_sigma(&mut self, sigma: f64) {
        self.sigma = sigma;
    }

    pub fn set_mean(&mut self, mean: DVector<f64>) -> Result<(), CmaError> {
        if mean.len() != self.n {
            return Err(CmaError::Dimension { expected: self.n, got: mean.len() });
        }
        self.mean = mean;
        Ok(())
    }

    /// Replaces the covariance matrix (symmetrized) and refreshes its decomposition.
    pub fn set_covariance(&mut self, cov: DMatrix<f64>) -> Result<(), CmaError> {
        if cov.shape() != (self.n, self.n) {
            return Err(CmaError::Dimension { expected: self.n, got: cov.nrows() });
        }
        self.cov = (&cov + cov.transpose()) * 0.5;
        self.decompose()
    }

    /// Eigendecomposition of the covariance. A spectrum with non-positive
    /// entries is clamped and the matrix rebuilt from it; a matrix that does
    /// not decompose to finite values is retried once, then reported.
    fn decompose(&mut self) -> Result<(), CmaError> {
        for _ in 0..2 {
            if self.cov.iter().any(|v| !v.is_finite()) {
                break;
            }
            let eig = SymmetricEigen::new(self.cov.clone());
            if eig.eigenvectors.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let values = eig.eigenvalues.map(|v| if v.is_finite() { v.max(EIGEN_FLOOR) } else { EIGEN_FLOOR });
            if values != eig.eigenvalues {
                let b = &eig.eigenvectors;
                let repaired = b * DMatrix::from_diagonal(&values) * b.transpose();
                self.cov = (&repaired + repaired.transpose()) * 0.5;
            }
            self.basis = eig.eigenvectors;
            self.scales = values.map(f64::sqrt);
            self.eigen_generation = self.generation;
            return Ok(());
        }
        Err(CmaError::Decomposition)
    }

    /// Draws `λ` samples `m + σ·B·D·z` with `z` standard normal.
    pub fn ask<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<DVector<f64>>, CmaError> {
        self.sample(self.lambda, rng)
    }

    /// Like [`ask`](Self::ask) with an explicit sample count.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<DVector<f64>>, CmaError> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(CmaError::NonPositiveSigma(self.sigma));
        }
        let bd = &self.basis * DMatrix::from_diagonal(&self.scales);
        Ok((0..count)
            .map(|_| {
                let z = DVector::from_fn(self.n, |_, _| rng.sample::<f64, _>(StandardNormal));
                &self.mean + (&bd * z) * self.sigma
            })
            .collect())
    }

    /// One (μ/μ_w, λ) update. Lower error is better; non-finite errors rank last.
    pub fn tell(&mut self, samples: &[DVector<f64>], errors: &[f64]) -> Result<(), CmaError> {
        if samples.len() != self.lambda || errors.len() != self.lambda {
            return Err(CmaError::LambdaMismatch { expected: self.lambda, samples: samples.len(), errors: errors.len() });
        }
        if let Some(x) = samples.iter().find(|x| x.len() != self.n) {
            return Err(CmaError::Dimension { expected: self.n, got: x.len() });
        }
        let key = |e: f64| if e.is_finite() { e } else { f64::INFINITY };
        let mut order: Vec<usize> = (0..self.lambda).collect();
        order.sort_by(|&a, &b| key(errors[a]).total_cmp(&key(errors[b])));

        let CmaParams { mu, ref weights, mueff, cc, cs, c1, cmu, damps, chi_n } = self.params;
        let n = self.n as f64;
        let old = self.mean.clone();
        let steps: Vec<DVector<f64>> = order[..mu].iter().map(|&i| (&samples[i] - &old) / self.sigma).collect();
        let mut y_w = DVector::zeros(self.n);
        for (w, y) in weights.iter().zip(&steps) {
            y_w += y * *w;
        }
        self.mean = &old + &y_w * self.sigma;

        // C^{-1/2} y_w through the current decomposition
        let inv_scales = self.scales.map(|d| 1.0 / d);
        let whitened = &self.basis * inv_scales.component_mul(&(self.basis.transpose() * &y_w));
        self.p_sigma = &self.p_sigma * (1.0 - cs) + whitened * (cs * (2.0 - cs) * mueff).sqrt();
        let ps_norm = self.p_sigma.norm();
        let gens = (self.generation + 1) as f64;
        let hsig = ps_norm / (1.0 - (1.0 - cs).powf(2.0 * gens)).sqrt() / chi_n < 1.4 + 2.0 / (n + 1.0);
        let h = if hsig { 1.0 } else { 0.0 };
        self.p_c = &self.p_c * (1.0 - cc) + &y_w * (h * (cc * (2.0 - cc) * mueff).sqrt());

        let mut rank_mu = DMatrix::zeros(self.n, self.n);
        for (w, y) in weights.iter().zip(&steps) {
            rank_mu += y * y.transpose() * *w;
        }
        let rank_one = &self.p_c * self.p_c.transpose() + &self.cov * ((1.0 - h) * cc * (2.0 - cc));
        let cov = &self.cov * (1.0 - c1 - cmu) + rank_one * c1 + rank_mu * cmu;
        self.cov = (&cov + cov.transpose()) * 0.5;

        self.sigma *= ((cs / damps) * (ps_norm / chi_n - 1.0)).exp();
        // flat fitness: widen the search instead of drifting on a plateau
        let flat_rank = ((0.7 * self.lambda as f64).ceil() as usize).clamp(1, self.lambda) - 1;
        if key(errors[order[0]]) == key(errors[order[flat_rank]]) {
            self.sigma *= (0.2 + cs / damps).exp();
        }
        self.generation += 1;
        self.best_history.push_back(key(errors[order[0]]));
        if self.best_history.len() > self.history_window() {
            self.best_history.pop_front();
        }

        let lag = (self.generation - self.eigen_generation) as f64;
        if lag > 1.0 / ((c1 + cmu) * n * 10.0) {
            self.decompose()?;
        }
        Ok(())
    }

    /// Generations of best errors the flat-history test looks at, `10 + ceil(30 n / λ)`.
    pub fn history_window(&self) -> usize {
        10 + (30 * self.n).div_ceil(self.lambda)
    }

    /// Degeneracy check on the latest decomposition.
    pub fn detect_stall(&self) -> Option<StallReason> {
        for i in 0..self.n {
            let step = self.basis.column(i) * (0.1 * self.sigma * self.scales[i]);
            if (&self.mean + step) == self.mean {
                return Some(StallReason::NoEffectAxis);
            }
        }
        let (lo, hi) = self
            .scales
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d * d), hi.max(d * d)));
        if hi / lo > MAX_CONDITION {
            return Some(StallReason::Condition);
        }
        let widest = self.cov.diagonal().iter().fold(0.0f64, |a, c| a.max(*c)).sqrt();
        if self.sigma * widest < TOL_X {
            return Some(StallReason::TolX);
        }
        if self.best_history.len() == self.history_window() {
            let (lo, hi) = self
                .best_history
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(*e), hi.max(*e)));
            if hi - lo < TOL_HIST_FUN || (lo == hi) {
                return Some(StallReason::FlatHistory);
            }
        }
        if self.sigma / self.sigma0 > TOL_UP_SIGMA * hi.sqrt() || !self.sigma.is_finite() {
            return Some(StallReason::TolUpSigma);
        }
        None
    }

    /// Resets the state per `policy`: population doubling (capped), a fresh
    /// random mean, identity covariance. Step size and paths always reset.
    pub fn restart<R: Rng + ?Sized>(&mut self, policy: RestartPolicy, rng: &mut R) -> Result<(), CmaError> {
        if policy.pb {
            self.lambda = (self.lambda * 2).min(self.lambda0 * MAX_LAMBDA_FACTOR);
            self.params = CmaParams::new(self.n, self.lambda);
        }
        if policy.mb {
            self.mean = random_mean(self.n, rng);
        }
        if policy.cb {
            self.cov = DMatrix::identity(self.n, self.n);
        }
        self.sigma = self.sigma0;
        self.p_sigma = DVector::zeros(self.n);
        self.p_c = DVector::zeros(self.n);
        self.restarts += 1;
        self.best_history.clear();
        self.decompose()
    }
}

fn random_mean<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-2.0..=2.0))
}

/// Which quantities a restart re-initializes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RestartPolicy {
    /// Double the population.
    pub pb: bool,
    /// Re-randomize the mean.
    pub mb: bool,
    /// Reset the covariance to the identity.
    pub cb: bool,
}

impl RestartPolicy {
    pub const NONE: RestartPolicy = RestartPolicy { pb: false, mb: false, cb: false };
    pub const IPOP: RestartPolicy = RestartPolicy { pb: true, mb: true, cb: true };
}

impl std::str::FromStr for RestartPolicy {
    type Err = CmaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "none" => return Ok(Self::NONE),
            "ipop" => return Ok(Self::IPOP),
            _ => {}
        }
        let mut p = Self::NONE;
        for part in s.split('+') {
            match part.trim() {
                "pb" => p.pb = true,
                "mb" => p.mb = true,
                "cb" => p.cb = true,
                other => return Err(CmaError::Config(format!("unknown restart flag `{other}`"))),
            }
        }
        Ok(p)
    }
}

impl std::fmt::Display for RestartPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let flags: Vec<&str> = [(self.pb, "pb"), (self.mb, "mb"), (self.cb, "cb")]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, name)| *name)
            .collect();
        if flags.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&flags.join("+"))
        }
    }
}
