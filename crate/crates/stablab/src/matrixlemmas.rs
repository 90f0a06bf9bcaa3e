//! Spectral-norm bounds on products of the 2×2 matrices that drive the
//! momentum-method stability recursions, checked by direct multiplication.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::optimizers::{nag_sc_momentum, stream_rng};

/// Absolute slack before a norm above its bound counts as a violation.
pub const LEMMA_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoByTwo {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl TwoByTwo {
    pub const IDENTITY: TwoByTwo = TwoByTwo { a11: 1.0, a12: 0.0, a21: 0.0, a22: 1.0 };

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        TwoByTwo { a11, a12, a21, a22 }
    }

    pub fn mul(&self, o: &TwoByTwo) -> TwoByTwo {
        TwoByTwo {
            a11: self.a11 * o.a11 + self.a12 * o.a21,
            a12: self.a11 * o.a12 + self.a12 * o.a22,
            a21: self.a21 * o.a11 + self.a22 * o.a21,
            a22: self.a21 * o.a12 + self.a22 * o.a22,
        }
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.a11 * self.a11 + self.a12 * self.a12 + self.a21 * self.a21 + self.a22 * self.a22
    }
}

/// Largest singular value, `√((‖M‖_F² + √(‖M‖_F⁴ − 4 det²))/2)`.
pub fn spectral_norm(m: &TwoByTwo) -> f64 {
    let f = m.frobenius_sq();
    let det = m.det();
    let disc = (f * f - 4.0 * det * det).max(0.0);
    ((f + disc.sqrt()) / 2.0).sqrt()
}

/// Norm, bound and verdict of one lemma instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub norm: f64,
    pub bound: f64,
    pub ok: bool,
}

impl LemmaCheck {
    fn new(norm: f64, bound: f64) -> Self {
        LemmaCheck { norm, bound, ok: norm <= bound + LEMMA_TOLERANCE }
    }

    pub fn ratio(&self) -> f64 {
        if self.bound > 0.0 {
            self.norm / self.bound
        } else if self.norm > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

fn nag_factor(h: f64, gamma: f64) -> TwoByTwo {
    TwoByTwo::new((1.0 - gamma) * h, gamma * h, 1.0, 0.0)
}

fn check_nag_args(h: f64, gammas: &[f64]) -> Result<()> {
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::Range(format!("h must lie in [0, 1], got {h}")));
    }
    if let Some(g) = gammas.iter().find(|g| !(-1.0..1.0).contains(*g)) {
        return Err(Error::Range(format!("momentum {g} outside [-1, 1)")));
    }
    Ok(())
}

/// `H_t ⋯ H_1` with `H_i = [[(1 − γ_{i−1})h, γ_{i−1}h], [1, 0]]`, where
/// `gammas = [γ_0, …, γ_{t−1}]`.
pub fn nag_product(h: f64, gammas: &[f64]) -> Result<TwoByTwo> {
    check_nag_args(h, gammas)?;
    Ok(gammas.iter().fold(TwoByTwo::IDENTITY, |acc, &g| nag_factor(h, g).mul(&acc)))
}

/// `‖H_t ⋯ H_1‖ ≤ 2(t + 1)`.
pub fn nag_lemma_check(h: f64, gammas: &[f64]) -> Result<LemmaCheck> {
    let p = nag_product(h, gammas)?;
    Ok(LemmaCheck::new(spectral_norm(&p), 2.0 * (gammas.len() as f64 + 1.0)))
}

fn hb_matrix(gamma: f64, a: f64) -> Result<TwoByTwo> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Range(format!("momentum must lie in [0, 1), got {gamma}")));
    }
    if !(a >= 0.0 && a <= 1.0 - gamma + 1e-15) {
        return Err(Error::Range(format!("a must lie in [0, 1 - gamma], got {a}")));
    }
    Ok(TwoByTwo::new(1.0 + gamma - a, -gamma, 1.0, 0.0))
}

fn hb_bound(gamma: f64) -> f64 {
    2.0 / (1.0 - gamma.sqrt())
}

/// `‖Hᵗ‖ ≤ 2/(1 − √γ)` for `H = [[1 + γ − a, −γ], [1, 0]]`.
pub fn hb_lemma_check(gamma: f64, a: f64, t: usize) -> Result<LemmaCheck> {
    let h = hb_matrix(gamma, a)?;
    let mut p = TwoByTwo::IDENTITY;
    for _ in 0..t {
        p = h.mul(&p);
    }
    Ok(LemmaCheck::new(spectral_norm(&p), hb_bound(gamma)))
}

/// Parameters of the strongly convex NAG product check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScNagParams {
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
}

impl ScNagParams {
    fn validate(&self) -> Result<()> {
        let ScNagParams { kappa, alpha, beta, eta } = *self;
        if !(alpha > 0.0 && beta >= alpha && kappa >= 1.0) {
            return Err(Error::Range(format!("need 0 < alpha <= beta and kappa >= 1, got {self:?}")));
        }
        if (kappa - beta / alpha).abs() > 1e-12 * kappa {
            return Err(Error::Range(format!("kappa = {kappa} differs from beta/alpha = {}", beta / alpha)));
        }
        if !(eta > 0.0 && eta <= (1.0 + 1e-12) / beta) {
            return Err(Error::Range(format!("eta must lie in (0, 1/beta], got {eta}")));
        }
        Ok(())
    }

    pub fn momentum(&self) -> f64 {
        nag_sc_momentum(self.kappa)
    }

    /// `2(1 + t)(γ(1 − αη))^{t/2}`.
    pub fn bound(&self, t: usize) -> f64 {
        let base = self.momentum() * (1.0 - self.alpha * self.eta);
        2.0 * (1.0 + t as f64) * base.powf(t as f64 / 2.0)
    }

    /// Admissible interval `[1 − βη, 1 − αη]` of `h`.
    pub fn h_range(&self) -> (f64, f64) {
        (1.0 - self.beta * self.eta, 1.0 - self.alpha * self.eta)
    }

    /// `samples` equispaced interior points plus both endpoints.
    pub fn h_samples(&self, samples: usize) -> Vec<f64> {
        let (lo, hi) = self.h_range();
        (0..samples + 2).map(|k| lo + (hi - lo) * k as f64 / (samples + 1) as f64).collect()
    }

    fn matrix(&self, h: f64) -> TwoByTwo {
        let g = self.momentum();
        TwoByTwo::new((1.0 + g) * h, -g * h, 1.0, 0.0)
    }
}

/// Result of the strongly convex NAG check, with the worst `h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScNagCheck {
    pub check: LemmaCheck,
    pub worst_h: f64,
}

/// Largest `‖Hᵗ‖` over sampled `h` against `2(1 + t)(γ(1 − αη))^{t/2}`,
/// with `H = [[(1 + γ)h, −γh], [1, 0]]`.
pub fn scnag_lemma_check(params: &ScNagParams, t: usize, h_samples: usize) -> Result<ScNagCheck> {
    params.validate()?;
    let mut worst = (f64::NEG_INFINITY, f64::NAN);
    for h in params.h_samples(h_samples) {
        let m = params.matrix(h);
        let mut p = TwoByTwo::IDENTITY;
        for _ in 0..t {
            p = m.mul(&p);
        }
        let norm = spectral_norm(&p);
        if norm > worst.0 {
            worst = (norm, h);
        }
    }
    Ok(ScNagCheck { check: LemmaCheck::new(worst.0, params.bound(t)), worst_h: worst.1 })
}

/// `a_0 = 1`, `a_1 = 2h`, `a_{i+1} = 2h a_i − h a_{i−1}`, for `i ≤ t`.
pub fn recursion_u(h: f64, t: usize) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::Range(format!("h must lie in [0, 1], got {h}")));
    }
    let mut a = Vec::with_capacity(t + 1);
    a.push(1.0);
    if t >= 1 {
        a.push(2.0 * h);
    }
    for i in 1..t {
        a.push(2.0 * h * a[i] - h * a[i - 1]);
    }
    Ok(a)
}

/// Largest `|a_i| / (i + 1)` over the sequence, with its index.
pub fn recursion_u_ratio(seq: &[f64]) -> (f64, usize) {
    seq.iter()
        .enumerate()
        .map(|(i, a)| (a.abs() / (i as f64 + 1.0), i))
        .fold((f64::NEG_INFINITY, 0), |acc, x| if x.0 > acc.0 { x } else { acc })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lemma {
    NagConvex,
    HeavyBall,
    NagStronglyConvex,
    RecursionU,
}

impl Lemma {
    pub fn name(&self) -> &'static str {
        match self {
            Lemma::NagConvex => "nag_convex",
            Lemma::HeavyBall => "hb",
            Lemma::NagStronglyConvex => "nag_sc",
            Lemma::RecursionU => "recursion_u",
        }
    }
}

/// Parameters at which a lemma was evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Witness {
    NagConvex { h: f64, gammas: Vec<f64> },
    HeavyBall { gamma: f64, a: f64, t: usize },
    NagStronglyConvex { params: ScNagParams, h: f64, t: usize },
    RecursionU { h: f64, i: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub witness: Witness,
    pub norm: f64,
    pub bound: f64,
}

/// Outcome of a sweep or search: the worst ratio seen and every violation
/// (up to `MAX_REPORTED`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub lemma: Lemma,
    pub checks: usize,
    pub worst_ratio: f64,
    pub worst: Option<Witness>,
    pub violations: usize,
    pub counterexamples: Vec<Counterexample>,
}

/// Cap on the counterexamples kept in a report.
pub const MAX_REPORTED: usize = 32;

impl SweepReport {
    fn empty(lemma: Lemma) -> Self {
        SweepReport { lemma, checks: 0, worst_ratio: f64::NEG_INFINITY, worst: None, violations: 0, counterexamples: Vec::new() }
    }

    fn record(&mut self, witness: impl Fn() -> Witness, norm: f64, bound: f64) {
        let check = LemmaCheck::new(norm, bound);
        self.checks += 1;
        let ratio = check.ratio();
        if ratio > self.worst_ratio {
            self.worst_ratio = ratio;
            self.worst = Some(witness());
        }
        if !check.ok {
            self.violations += 1;
            if self.counterexamples.len() < MAX_REPORTED {
                self.counterexamples.push(Counterexample { witness: witness(), norm, bound });
            }
        }
    }

    /// Merge in index order, so the result is independent of scheduling.
    fn merge(mut self, other: SweepReport) -> SweepReport {
        self.checks += other.checks;
        if other.worst_ratio > self.worst_ratio {
            self.worst_ratio = other.worst_ratio;
            self.worst = other.worst;
        }
        self.violations += other.violations;
        for c in other.counterexamples {
            if self.counterexamples.len() < MAX_REPORTED {
                self.counterexamples.push(c);
            }
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn merge_all(lemma: Lemma, parts: Vec<SweepReport>) -> SweepReport {
    parts.into_iter().fold(SweepReport::empty(lemma), SweepReport::merge)
}

/// Check every prefix `t = 1..=gammas.len()` of one NAG draw.
fn nag_prefixes(report: &mut SweepReport, h: f64, gammas: &[f64]) {
    let mut p = TwoByTwo::IDENTITY;
    for (i, &g) in gammas.iter().enumerate() {
        p = nag_factor(h, g).mul(&p);
        let t = i + 1;
        report.record(|| Witness::NagConvex { h, gammas: gammas[..t].to_vec() }, spectral_norm(&p), 2.0 * (t as f64 + 1.0));
    }
}

fn hb_powers(report: &mut SweepReport, gamma: f64, a: f64, max_t: usize) {
    let h = TwoByTwo::new(1.0 + gamma - a, -gamma, 1.0, 0.0);
    let bound = hb_bound(gamma);
    let mut p = TwoByTwo::IDENTITY;
    for t in 1..=max_t {
        p = h.mul(&p);
        report.record(|| Witness::HeavyBall { gamma, a, t }, spectral_norm(&p), bound);
    }
}

fn scnag_powers(report: &mut SweepReport, params: &ScNagParams, h: f64, max_t: usize) {
    let m = params.matrix(h);
    let mut p = TwoByTwo::IDENTITY;
    for t in 1..=max_t {
        p = m.mul(&p);
        report.record(|| Witness::NagStronglyConvex { params: *params, h, t }, spectral_norm(&p), params.bound(t));
    }
}

fn recursion_points(report: &mut SweepReport, h: f64, max_t: usize) {
    let seq = recursion_u(h, max_t).expect("h sampled inside [0, 1]");
    for (i, a) in seq.iter().enumerate() {
        report.record(|| Witness::RecursionU { h, i }, a.abs(), i as f64 + 1.0);
    }
}

/// Random NAG draws: `h ~ U[0, 1]`, `γ_i ~ U(−1, 1)`, every horizon up to
/// `max_t`.
pub fn nag_sweep(draws: usize, max_t: usize, seed: u64, exec: Exec) -> SweepReport {
    let parts = exec.map(draws, |k| {
        let mut rng = stream_rng(seed, k as u64);
        let h: f64 = rng.random_range(0.0..=1.0);
        let gammas: Vec<f64> = (0..max_t).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut r = SweepReport::empty(Lemma::NagConvex);
        nag_prefixes(&mut r, h, &gammas);
        r
    });
    merge_all(Lemma::NagConvex, parts)
}

/// Grid over `γ` and `a ∈ [0, 1 − γ]` (`a_points` equispaced values
/// including both ends), every power up to `max_t`.
pub fn hb_sweep(gammas: &[f64], a_points: usize, max_t: usize, exec: Exec) -> SweepReport {
    let a_points = a_points.max(2);
    let parts = exec.map(gammas.len() * a_points, |k| {
        let gamma = gammas[k / a_points];
        let a = (1.0 - gamma) * (k % a_points) as f64 / (a_points - 1) as f64;
        let mut r = SweepReport::empty(Lemma::HeavyBall);
        hb_powers(&mut r, gamma, a, max_t);
        r
    });
    merge_all(Lemma::HeavyBall, parts)
}

/// For each `κ`: `α = 1`, `β = κ`, `η = 1/β`, `h_samples` interior points of
/// the `h` interval plus its endpoints, every power up to `max_t`.
pub fn scnag_sweep(kappas: &[f64], h_samples: usize, max_t: usize, exec: Exec) -> SweepReport {
    let per = h_samples + 2;
    let parts = exec.map(kappas.len() * per, |k| {
        let kappa = kappas[k / per];
        let params = ScNagParams { kappa, alpha: 1.0, beta: kappa, eta: 1.0 / kappa };
        let h = params.h_samples(h_samples)[k % per];
        let mut r = SweepReport::empty(Lemma::NagStronglyConvex);
        scnag_powers(&mut r, &params, h, max_t);
        r
    });
    merge_all(Lemma::NagStronglyConvex, parts)
}

/// `h ∈ {0, step, 2·step, …, 1}`, all indices up to `max_t`.
pub fn recursion_u_sweep(step: f64, max_t: usize, exec: Exec) -> SweepReport {
    let count = (1.0 / step).round() as usize + 1;
    let parts = exec.map(count, |k| {
        let h = (k as f64 * step).min(1.0);
        let mut r = SweepReport::empty(Lemma::RecursionU);
        recursion_points(&mut r, h, max_t);
        r
    });
    merge_all(Lemma::RecursionU, parts)
}

/// Random search over a lemma's hypotheses with `budget` samples. Each
/// sample checks every horizon up to `max_t`. Sample `k` draws from stream
/// `k` of `seed`, so the result does not depend on the execution mode.
pub fn adversarial_max(lemma: Lemma, budget: usize, max_t: usize, seed: u64, exec: Exec) -> Result<SweepReport> {
    if budget < 1 || max_t < 1 {
        return Err(Error::InvalidParameter("budget and horizon must be at least 1".into()));
    }
    let parts = exec.map(budget, |k| {
        let mut rng = stream_rng(seed, k as u64);
        let mut r = SweepReport::empty(lemma);
        match lemma {
            Lemma::NagConvex => {
                let h: f64 = rng.random_range(0.0..=1.0);
                let gammas: Vec<f64> = (0..max_t).map(|_| rng.random_range(-1.0..1.0)).collect();
                nag_prefixes(&mut r, h, &gammas);
            }
            Lemma::HeavyBall => {
                let gamma: f64 = rng.random_range(0.0..1.0);
                let a = rng.random_range(0.0..=1.0) * (1.0 - gamma);
                hb_powers(&mut r, gamma, a, max_t);
            }
            Lemma::NagStronglyConvex => {
                let kappa = 10f64.powf(rng.random_range(0.0..=3.0));
                let beta = kappa;
                let eta = rng.random_range(0.0..=1.0) / beta;
                let params = ScNagParams { kappa, alpha: 1.0, beta, eta: eta.max(f64::MIN_POSITIVE) };
                let (lo, hi) = params.h_range();
                let h = lo + (hi - lo) * rng.random_range(0.0..=1.0);
                scnag_powers(&mut r, &params, h, max_t);
            }
            Lemma::RecursionU => {
                let h: f64 = rng.random_range(0.0..=1.0);
                recursion_points(&mut r, h, max_t);
            }
        }
        r
    });
    Ok(merge_all(lemma, parts))
}
