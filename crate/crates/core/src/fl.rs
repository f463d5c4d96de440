//! Federated training over unreliable links.
//!
//! Each follower holds a private [`Dataset`]. In every round the followers take
//! one gradient step from the last global model they received, upload it, and
//! the leader averages the uploads that arrived in time. Followers whose
//! downlink also succeeds then receive the new global model; the others keep
//! training from their stale copy.
//!
//! Local losses `F_i` are unnormalized sums over a follower's samples while the
//! global loss `F` is the sample mean over all `N` samples.

use nalgebra::{Cholesky, DMatrix, DVector, DVectorView, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{ChannelDraw, LinkState, RoundOutcome};
use crate::convergence::LearningProfile;
use crate::design::DesignVector;
use crate::error::{Error, Result};
use crate::scenario::{DatasetSpec, SwarmScenario};
use crate::seed;

/// One follower's samples, stored one sample per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: DMatrix<f64>,
    pub labels: DVector<f64>,
    pub owner: usize,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, labels: DVector<f64>, owner: usize) -> Result<Self> {
        if features.ncols() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} feature columns but {} labels",
                features.ncols(),
                labels.len()
            )));
        }
        Ok(Self {
            features,
            labels,
            owner,
        })
    }

    pub fn count(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features.nrows()
    }
}

/// Counts `N_i` of a set of datasets.
pub fn counts(datasets: &[Dataset]) -> Vec<usize> {
    datasets.iter().map(Dataset::count).collect()
}

/// Curvature and heterogeneity constants of a loss over a fixed set of datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct LossConstants {
    pub lipschitz_u: f64,
    pub strong_mu: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub w_star: DVector<f64>,
    pub f_star: f64,
}

/// A per-sample loss `f(w, x, y)` together with its constants on the
/// follower datasets it was fitted to.
pub trait LossModel: Sync {
    fn sample_loss(&self, w: &DVector<f64>, x: DVectorView<'_, f64>, y: f64) -> f64;

    fn sample_gradient(&self, w: &DVector<f64>, x: DVectorView<'_, f64>, y: f64) -> DVector<f64>;

    fn constants(&self) -> &LossConstants;

    /// `F_i(w) = Σ_n f(w, x_in, y_in)`
    fn local_loss(&self, w: &DVector<f64>, data: &Dataset) -> f64 {
        (0..data.count())
            .map(|n| self.sample_loss(w, data.features.column(n), data.labels[n]))
            .sum()
    }

    /// `∇F_i(w)`
    fn local_gradient(&self, w: &DVector<f64>, data: &Dataset) -> DVector<f64> {
        let mut g = DVector::zeros(w.len());
        for n in 0..data.count() {
            g += self.sample_gradient(w, data.features.column(n), data.labels[n]);
        }
        g
    }

    /// `F(w) = (1/N) Σ_i F_i(w)`
    fn total_loss(&self, w: &DVector<f64>, datasets: &[Dataset]) -> f64 {
        let n: usize = datasets.iter().map(Dataset::count).sum();
        datasets.iter().map(|d| self.local_loss(w, d)).sum::<f64>() / n as f64
    }

    fn gradient(&self, w: &DVector<f64>, datasets: &[Dataset]) -> DVector<f64> {
        let n: usize = datasets.iter().map(Dataset::count).sum();
        let mut g = DVector::zeros(w.len());
        for d in datasets {
            g += self.local_gradient(w, d);
        }
        g / n as f64
    }

    /// `F(w) - F(w*)`. Implementations may override this with a form that
    /// avoids cancellation near the optimum.
    fn excess_loss(&self, w: &DVector<f64>, datasets: &[Dataset]) -> f64 {
        self.total_loss(w, datasets) - self.constants().f_star
    }
}

/// Least squares, `f(w, x, y) = (wᵀx - y)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredLoss {
    constants: LossConstants,
    /// Hessian of `F`, `(2/N) Σ x xᵀ`.
    hessian: DMatrix<f64>,
}

/// Number of points used to fit the heterogeneity constants.
pub const ZETA_SAMPLES: usize = 1000;

impl SquaredLoss {
    /// Computes the curvature constants, the optimum and the heterogeneity
    /// constants of the squared loss on `datasets`. `w0` sets the radius of
    /// the region the heterogeneity constants are fitted on.
    pub fn fit(datasets: &[Dataset], w0: &DVector<f64>, zeta_seed: u64) -> Result<Self> {
        let dim = check_datasets(datasets)?;
        if w0.len() != dim {
            return Err(Error::InvalidInput(format!(
                "initial model has dimension {}, data has {dim}",
                w0.len()
            )));
        }
        let n: usize = datasets.iter().map(Dataset::count).sum();
        let mut gram = DMatrix::zeros(dim, dim);
        let mut moment = DVector::zeros(dim);
        for d in datasets {
            gram += &d.features * d.features.transpose();
            moment += &d.features * &d.labels;
        }
        let hessian = &gram * (2.0 / n as f64);
        let eig = SymmetricEigen::new(hessian.clone());
        let mu = eig.eigenvalues.min();
        let u = eig.eigenvalues.max();
        if !(mu > 1e-12 * u.max(f64::MIN_POSITIVE)) {
            return Err(Error::SingularGram);
        }
        let w_star = Cholesky::new(gram)
            .ok_or(Error::SingularGram)?
            .solve(&moment);
        let mut model = Self {
            constants: LossConstants {
                lipschitz_u: u,
                strong_mu: mu,
                zeta1: 0.0,
                zeta2: 1.0,
                f_star: 0.0,
                w_star,
            },
            hessian,
        };
        model.constants.f_star = model.total_loss(&model.constants.w_star, datasets);
        let (zeta1, zeta2) = estimate_zeta(&model, datasets, w0, ZETA_SAMPLES, zeta_seed);
        model.constants.zeta1 = zeta1;
        model.constants.zeta2 = zeta2;
        Ok(model)
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }
}

impl LossModel for SquaredLoss {
    fn sample_loss(&self, w: &DVector<f64>, x: DVectorView<'_, f64>, y: f64) -> f64 {
        let r = w.dot(&x) - y;
        r * r
    }

    fn sample_gradient(&self, w: &DVector<f64>, x: DVectorView<'_, f64>, y: f64) -> DVector<f64> {
        x * (2.0 * (w.dot(&x) - y))
    }

    fn constants(&self) -> &LossConstants {
        &self.constants
    }

    fn local_loss(&self, w: &DVector<f64>, data: &Dataset) -> f64 {
        (data.features.tr_mul(w) - &data.labels).norm_squared()
    }

    fn local_gradient(&self, w: &DVector<f64>, data: &Dataset) -> DVector<f64> {
        &data.features * ((data.features.tr_mul(w) - &data.labels) * 2.0)
    }

    fn excess_loss(&self, w: &DVector<f64>, _datasets: &[Dataset]) -> f64 {
        let delta = w - &self.constants.w_star;
        0.5 * delta.dot(&(&self.hessian * &delta))
    }
}

fn check_datasets(datasets: &[Dataset]) -> Result<usize> {
    let first = datasets
        .first()
        .ok_or_else(|| Error::InvalidInput("no datasets".into()))?;
    let dim = first.dim();
    if datasets.iter().any(|d| d.dim() != dim) {
        return Err(Error::InvalidInput(
            "datasets disagree on feature dimension".into(),
        ));
    }
    if datasets.iter().any(|d| d.count() == 0) {
        return Err(Error::InvalidInput(
            "every follower needs at least one sample".into(),
        ));
    }
    Ok(dim)
}

/// Fits `ζ₁ ≥ 0` and `ζ₂ ≥ 1` such that
/// `max_i ‖∇F_i(w)‖² ≤ ζ₁ + ζ₂ ‖∇F(w)‖²` on `w*` and `n_points` points drawn
/// uniformly from the ball of radius `3‖w0 - w*‖` around `w*`.
///
/// `ζ₂` is twice the largest sampled ratio `‖∇F_i(w) - ∇F_i(w*)‖² / ‖∇F(w)‖²`,
/// which bounds the growth of local gradients away from the optimum; `ζ₁` is
/// then the smallest offset covering every sampled point.
pub fn estimate_zeta<L: LossModel + ?Sized>(
    loss: &L,
    datasets: &[Dataset],
    w0: &DVector<f64>,
    n_points: usize,
    rng_seed: u64,
) -> (f64, f64) {
    let w_star = &loss.constants().w_star;
    let dim = w_star.len();
    let mut radius = 3.0 * (w0 - w_star).norm();
    if radius == 0.0 {
        radius = 1.0;
    }
    let at_star: Vec<DVector<f64>> = datasets
        .iter()
        .map(|d| loss.local_gradient(w_star, d))
        .collect();
    let mut rng = seed::rng(rng_seed);
    let mut points = Vec::with_capacity(n_points + 1);
    points.push(w_star.clone());
    for _ in 0..n_points {
        let dir = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
        points.push(w_star + dir.normalize() * r);
    }
    // (max_i ‖∇F_i‖², max_i ‖∇F_i - ∇F_i(w*)‖², ‖∇F‖²) per point
    let stats: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|w| {
            let (mut worst, mut drift) = (0.0f64, 0.0f64);
            for (d, g_star) in datasets.iter().zip(&at_star) {
                let g = loss.local_gradient(w, d);
                worst = worst.max(g.norm_squared());
                drift = drift.max((g - g_star).norm_squared());
            }
            (worst, drift, loss.gradient(w, datasets).norm_squared())
        })
        .collect();
    let zeta2 = stats
        .iter()
        .filter(|(_, _, g)| *g > 0.0)
        .map(|(_, drift, g)| 2.0 * drift / g)
        .fold(1.0, f64::max);
    let zeta1 = stats
        .iter()
        .map(|(worst, _, g)| worst - zeta2 * g)
        .fold(0.0, f64::max);
    (zeta1, zeta2)
}

/// Draws the synthetic regression data: coordinate `j` of each feature vector
/// has standard deviation `feature_decay^j`, labels come from a standard normal
/// ground-truth vector plus Gaussian noise.
pub fn make_datasets(
    spec: &DatasetSpec,
    n_followers: usize,
    rng_seed: u64,
) -> Result<Vec<Dataset>> {
    if spec.dim == 0 || spec.samples_per_follower == 0 || n_followers == 0 {
        return Err(Error::InvalidInput(
            "need at least one follower, one sample and one dimension".into(),
        ));
    }
    let mut rng = seed::rng(rng_seed);
    let truth = DVector::from_fn(spec.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let scale: Vec<f64> = (0..spec.dim)
        .map(|j| spec.feature_decay.powi(j as i32))
        .collect();
    (0..n_followers)
        .map(|owner| {
            let features = DMatrix::from_fn(spec.dim, spec.samples_per_follower, |j, _| {
                scale[j] * rng.sample::<f64, _>(StandardNormal)
            });
            let labels = features.tr_mul(&truth)
                + DVector::from_fn(spec.samples_per_follower, |_, _| {
                    spec.noise_std * rng.sample::<f64, _>(StandardNormal)
                });
            Dataset::new(features, labels, owner)
        })
        .collect()
}

/// Generates follower datasets and fits the squared loss on them, with the
/// zero vector as the initial model.
pub fn make_regression_problem(
    spec: &DatasetSpec,
    n_followers: usize,
    rng_seed: u64,
) -> Result<(Vec<Dataset>, SquaredLoss)> {
    if spec.samples_per_follower * n_followers < spec.dim {
        return Err(Error::SingularGram);
    }
    let datasets = make_datasets(spec, n_followers, seed::derive(rng_seed, &[0]))?;
    let w0 = DVector::zeros(spec.dim);
    let loss = SquaredLoss::fit(&datasets, &w0, seed::derive(rng_seed, &[1]))?;
    Ok((datasets, loss))
}

/// Training state across rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct FlState {
    pub global_w: DVector<f64>,
    pub local_w: Vec<DVector<f64>>,
    /// The last global model each follower received.
    pub held_w: Vec<DVector<f64>>,
    pub round: usize,
    /// `F(w^(t))` for `t = 0, 1, ...`
    pub loss_history: Vec<f64>,
    /// `F(w^(t)) - F(w*)` for `t = 0, 1, ...`
    pub gap_history: Vec<f64>,
    pub participation_history: Vec<Vec<bool>>,
}

impl FlState {
    /// Every follower starts from `w0`, as if the initial broadcast succeeded.
    pub fn new<L: LossModel + ?Sized>(w0: DVector<f64>, loss: &L, datasets: &[Dataset]) -> Self {
        let n = datasets.len();
        Self {
            loss_history: vec![loss.total_loss(&w0, datasets)],
            gap_history: vec![loss.excess_loss(&w0, datasets)],
            local_w: vec![w0.clone(); n],
            held_w: vec![w0.clone(); n],
            global_w: w0,
            round: 0,
            participation_history: Vec::new(),
        }
    }

    /// Runs one round given which links succeeded.
    pub fn step<L: LossModel + ?Sized>(
        &mut self,
        loss: &L,
        datasets: &[Dataset],
        lr: f64,
        outcome: &RoundOutcome,
    ) {
        let counts = counts(datasets);
        self.local_w = (0..datasets.len())
            .map(|i| local_update(self, i, loss, datasets, lr))
            .collect();
        let participation: Vec<bool> = (0..datasets.len())
            .map(|i| outcome.participates(i))
            .collect();
        self.global_w =
            aggregate_with_losses(&self.local_w, &counts, &participation, &self.global_w);
        for (held, &ok) in self.held_w.iter_mut().zip(&outcome.downlink_ok) {
            if ok {
                held.clone_from(&self.global_w);
            }
        }
        self.round += 1;
        self.loss_history
            .push(loss.total_loss(&self.global_w, datasets));
        self.gap_history
            .push(loss.excess_loss(&self.global_w, datasets));
        self.participation_history.push(participation);
    }

    pub fn gap(&self) -> f64 {
        *self
            .gap_history
            .last()
            .expect("history starts with the initial model")
    }
}

/// `w_i = w - (lr / N_i) ∇F_i(w)` from the follower's last received global model.
pub fn local_update<L: LossModel + ?Sized>(
    state: &FlState,
    i: usize,
    loss: &L,
    datasets: &[Dataset],
    lr: f64,
) -> DVector<f64> {
    let w = &state.held_w[i];
    let d = &datasets[i];
    w - loss.local_gradient(w, d) * (lr / d.count() as f64)
}

/// Sample-weighted average of all local models.
pub fn aggregate_ideal(local_ws: &[DVector<f64>], counts: &[usize]) -> Result<DVector<f64>> {
    if local_ws.is_empty() || counts.iter().sum::<usize>() == 0 {
        return Err(Error::InvalidInput(
            "aggregation needs at least one sample".into(),
        ));
    }
    let mut acc = DVector::zeros(local_ws[0].len());
    for (w, &n) in local_ws.iter().zip(counts) {
        acc.axpy(n as f64, w, 1.0);
    }
    Ok(acc / counts.iter().sum::<usize>() as f64)
}

/// Sample-weighted average over participating followers, or `previous_global`
/// when nobody participates.
pub fn aggregate_with_losses(
    local_ws: &[DVector<f64>],
    counts: &[usize],
    participation: &[bool],
    previous_global: &DVector<f64>,
) -> DVector<f64> {
    let mut acc = DVector::zeros(previous_global.len());
    let mut total = 0usize;
    for ((w, &n), &c) in local_ws.iter().zip(counts).zip(participation) {
        if c {
            acc.axpy(n as f64, w, 1.0);
            total += n;
        }
    }
    if total == 0 {
        previous_global.clone()
    } else {
        acc / total as f64
    }
}

/// `e = Σ C_i ∇F_i(w) / Σ N_i C_i - ∇F(w)`: how far the participating
/// followers' average gradient at `w` is from the full gradient.
pub fn error_term<L: LossModel + ?Sized>(
    loss: &L,
    datasets: &[Dataset],
    w: &DVector<f64>,
    participation: &[bool],
) -> DVector<f64> {
    let full = loss.gradient(w, datasets);
    let mut acc = DVector::zeros(w.len());
    let mut total = 0usize;
    for (d, &c) in datasets.iter().zip(participation) {
        if c {
            acc += loss.local_gradient(w, d);
            total += d.count();
        }
    }
    if total == 0 {
        -full
    } else {
        acc / total as f64 - full
    }
}

/// Upper bound on `E‖e‖²` at a point with squared gradient norm `grad_norm2`:
/// `(1/N) Σ N_i (ζ₁ + ζ₂ ‖∇F‖²)(1 - P_i)`.
pub fn error_bound(
    constants: &LossConstants,
    counts: &[usize],
    success_prob: &[f64],
    grad_norm2: f64,
) -> f64 {
    let n: usize = counts.iter().sum();
    let per = constants.zeta1 + constants.zeta2 * grad_norm2;
    counts
        .iter()
        .zip(success_prob)
        .map(|(&ni, &p)| ni as f64 * per * (1.0 - p))
        .sum::<f64>()
        / n as f64
}

/// Runs rounds until the loss gap reaches `epsilon` or `max_rounds` pass,
/// asking `links` which links succeed in each round. Returns the first round
/// whose gap is at most `epsilon`.
pub fn run_rounds<L, F>(
    state: &mut FlState,
    loss: &L,
    datasets: &[Dataset],
    lr: f64,
    max_rounds: usize,
    epsilon: f64,
    mut links: F,
) -> Option<usize>
where
    L: LossModel + ?Sized,
    F: FnMut(usize) -> RoundOutcome,
{
    if state.gap() <= epsilon {
        return Some(state.round);
    }
    for _ in 0..max_rounds {
        let outcome = links(state.round + 1);
        state.step(loss, datasets, lr, &outcome);
        if state.gap() <= epsilon {
            return Some(state.round);
        }
    }
    None
}

/// Federated training over the scenario's channel with learning rate `1/U`,
/// starting from the zero model. Each round draws a fresh channel realization
/// from a stream seeded by `rng_seed`.
pub fn run_fl<L: LossModel + ?Sized>(
    scenario: &SwarmScenario,
    design: &DesignVector,
    loss: &L,
    datasets: &[Dataset],
    max_rounds: usize,
    epsilon: f64,
    rng_seed: u64,
) -> Result<(FlState, Option<usize>)> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!(
            "epsilon = {epsilon} must be positive"
        )));
    }
    if datasets.len() != scenario.n_followers {
        return Err(Error::InvalidInput(format!(
            "{} datasets for {} followers",
            datasets.len(),
            scenario.n_followers
        )));
    }
    design.validate(scenario)?;
    let dim = loss.constants().w_star.len();
    let lr = 1.0 / loss.constants().lipschitz_u;
    let mut state = FlState::new(DVector::zeros(dim), loss, datasets);
    let mut rng = seed::rng(rng_seed);
    let hit = run_rounds(&mut state, loss, datasets, lr, max_rounds, epsilon, |_| {
        let draw = ChannelDraw::sample(scenario, &mut rng);
        RoundOutcome::evaluate(scenario, design, &LinkState::from_draw(scenario, &draw))
    });
    Ok((state, hit))
}

/// Learning constants for predicting the convergence round from `w0`.
pub fn learning_profile<L: LossModel + ?Sized>(
    loss: &L,
    datasets: &[Dataset],
    w0: &DVector<f64>,
    epsilon: f64,
) -> LearningProfile {
    let c = loss.constants();
    LearningProfile {
        counts: counts(datasets),
        mu: c.strong_mu,
        lipschitz_u: c.lipschitz_u,
        epsilon,
        initial_loss_sum: datasets.iter().map(|d| loss.local_loss(w0, d)).sum(),
    }
}

/// First index at which `gaps` falls to `epsilon` or below.
pub fn first_crossing(gaps: &[f64], epsilon: f64) -> Option<usize> {
    gaps.iter().position(|&g| g <= epsilon)
}

/// Every follower succeeds on both links.
pub fn perfect_links(n: usize) -> RoundOutcome {
    RoundOutcome {
        uplink_ok: vec![true; n],
        downlink_ok: vec![true; n],
    }
}
