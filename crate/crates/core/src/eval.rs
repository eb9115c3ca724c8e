//! Uplink training, LMMSE channel estimation, conjugate beamforming and
//! Monte-Carlo downlink rates.
//!
//! All contamination is physical: correlator outputs sum over every UE of
//! the network, not only the links kept in the topology.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::pairwise_sum;
use crate::netgen::{normalized_snrs, NetworkRealization, SimConfig};
use crate::rng::{complex_normal, rng_from_seed, split_seed, SimRng};
use crate::topo::PilotAssignment;

/// Noise-normalized powers and Monte-Carlo settings.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub rho_p: f64,
    pub rho_d: f64,
    /// TDD frame length in samples.
    pub n_c: usize,
    pub n_trials: usize,
    pub power_rule: PowerRule,
}

impl EvalConfig {
    pub fn from_sim(cfg: &SimConfig, net: &NetworkRealization, n_trials: usize) -> Self {
        let (rho_p, rho_d) = normalized_snrs(net, cfg);
        Self {
            rho_p,
            rho_d,
            n_c: cfg.n_c,
            n_trials,
            power_rule: PowerRule::default(),
        }
    }
}

/// How an RRH splits its power among the UEs it serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerRule {
    /// `η_mk ∝ 1 / Σ_{k'} γ_mk'`: power proportional to estimate quality.
    #[default]
    GainProportional,
    /// `η_mk ∝ 1 / (|T_E,m| γ_mk)`: the same power for every served UE.
    EqualShare,
}

/// One small-scale fading draw, `g_mk = √β_mk h_mk`, M x K.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub g: DMatrix<Complex64>,
}

impl ChannelRealization {
    /// Draws RRH by RRH, UE by UE.
    pub fn draw(net: &NetworkRealization, rng: &mut SimRng) -> Self {
        let (k_n, m_n) = net.beta.shape();
        let mut g = DMatrix::from_element(m_n, k_n, Complex64::new(0.0, 0.0));
        for m in 0..m_n {
            for k in 0..k_n {
                g[(m, k)] = complex_normal(rng) * net.beta[(k, m)].sqrt();
            }
        }
        Self { g }
    }
}

/// `η_p = K ρ_p / Σ_k ‖x_k‖²`.
pub fn pilot_power(x: &DMatrix<f64>, rho_p: f64) -> Result<f64> {
    let energy = x.norm_squared();
    if energy <= 0.0 {
        return Err(Error::Contract("assignment transmits no pilot".into()));
    }
    Ok(x.nrows() as f64 * rho_p / energy)
}

/// LMMSE weights of one estimated link.
#[derive(Debug, Clone, PartialEq)]
struct LinkFilter {
    m: usize,
    k: usize,
    /// Pilots with `x_kt ≠ 0`.
    support: Vec<usize>,
    /// `R⁻¹ c` on the support.
    weights: Vec<f64>,
}

/// Closed-form estimation quality plus the per-link filters.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    pub eta_p: f64,
    /// Training length `τ_p`, equal to the pilot dimension.
    pub tau: f64,
    /// M x K, `E|ĝ_mk|²`, zero where not estimated.
    pub gamma: DMatrix<f64>,
    /// M x K, `E|g_mk − ĝ_mk|²` on estimated links, zero elsewhere.
    pub mse: DMatrix<f64>,
    filters: Vec<LinkFilter>,
}

impl Estimator {
    /// Vector LMMSE of `g_mk` from the correlator outputs on every pilot UE
    /// `k` uses; with a single pilot this is the scalar MMSE estimator.
    pub fn new(assign: &PilotAssignment, net: &NetworkRealization, rho_p: f64) -> Result<Self> {
        let (k_n, m_n) = net.beta.shape();
        let x = &assign.x;
        if x.nrows() != k_n {
            return Err(Error::Shape(format!("X has {} rows, network has {k_n} UEs", x.nrows())));
        }
        if assign.serving.len() != m_n {
            return Err(Error::Shape(format!("{} serving sets for {m_n} RRHs", assign.serving.len())));
        }
        let eta_p = pilot_power(x, rho_p)?;
        let tau = x.ncols() as f64;
        let snr = tau * eta_p;
        let mut gamma = DMatrix::zeros(m_n, k_n);
        let mut mse = DMatrix::zeros(m_n, k_n);
        let mut filters = Vec::new();
        for (m, served) in assign.serving.iter().enumerate() {
            for &k in served {
                if k >= k_n {
                    return Err(Error::Shape(format!("serving set of RRH {m} names UE {k}")));
                }
                let support: Vec<usize> = (0..x.ncols()).filter(|&t| x[(k, t)] != 0.0).collect();
                if support.is_empty() {
                    continue;
                }
                let s = support.len();
                let beta = net.beta[(k, m)];
                let c = DVector::from_fn(s, |i, _| snr.sqrt() * beta * x[(k, support[i])]);
                let r = DMatrix::from_fn(s, s, |i, j| {
                    let (t, u) = (support[i], support[j]);
                    let cross: f64 = (0..k_n).map(|q| net.beta[(q, m)] * x[(q, t)] * x[(q, u)]).sum();
                    snr * cross + if i == j { 1.0 } else { 0.0 }
                });
                let chol = r.cholesky().ok_or_else(|| Error::Contract("training covariance is not positive definite".into()))?;
                let w = chol.solve(&c);
                let g = c.dot(&w).clamp(0.0, beta);
                gamma[(m, k)] = g;
                mse[(m, k)] = beta - g;
                filters.push(LinkFilter {
                    m,
                    k,
                    support,
                    weights: w.iter().copied().collect(),
                });
            }
        }
        Ok(Self {
            eta_p,
            tau,
            gamma,
            mse,
            filters,
        })
    }

    /// Simulates the correlator outputs and returns `ĝ` (M x K, zero where
    /// not estimated).
    pub fn estimate(&self, x: &DMatrix<f64>, chan: &ChannelRealization, rng: &mut SimRng) -> DMatrix<Complex64> {
        let (m_n, k_n) = chan.g.shape();
        let t_n = x.ncols();
        let amp = (self.tau * self.eta_p).sqrt();
        let mut r = DMatrix::from_element(m_n, t_n, Complex64::new(0.0, 0.0));
        for m in 0..m_n {
            for t in 0..t_n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..k_n {
                    let v = x[(k, t)];
                    if v != 0.0 {
                        acc += chan.g[(m, k)] * v;
                    }
                }
                r[(m, t)] = acc * amp + complex_normal(rng);
            }
        }
        let mut ghat = DMatrix::from_element(m_n, k_n, Complex64::new(0.0, 0.0));
        for f in &self.filters {
            ghat[(f.m, f.k)] = f.support.iter().zip(&f.weights).map(|(&t, &w)| r[(f.m, t)] * w).sum();
        }
        ghat
    }
}

/// One training phase.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutcome {
    pub eta_p: f64,
    pub ghat: DMatrix<Complex64>,
    pub gamma: DMatrix<f64>,
    pub mse: DMatrix<f64>,
}

pub fn train(assign: &PilotAssignment, net: &NetworkRealization, chan: &ChannelRealization, rho_p: f64, rng: &mut SimRng) -> Result<TrainingOutcome> {
    let est = Estimator::new(assign, net, rho_p)?;
    let ghat = est.estimate(&assign.x, chan, rng);
    Ok(TrainingOutcome {
        eta_p: est.eta_p,
        ghat,
        gamma: est.gamma,
        mse: est.mse,
    })
}

/// Full power at every active RRH, split by `rule`, with one global scale
/// so that `(1/M) Σ_m Σ_{k ∈ T_E,m} η_mk γ_mk = 1`.
pub fn power_allocation(gamma: &DMatrix<f64>, serving: &[Vec<usize>], rule: PowerRule) -> DMatrix<f64> {
    let (m_n, k_n) = gamma.shape();
    let usable = |m: usize| serving[m].iter().copied().filter(move |&k| gamma[(m, k)] > 0.0);
    let active = (0..m_n).filter(|&m| usable(m).next().is_some()).count();
    let mut eta = DMatrix::zeros(m_n, k_n);
    if active == 0 {
        return eta;
    }
    let scale = m_n as f64 / active as f64;
    for m in 0..m_n {
        let n = usable(m).count() as f64;
        let total: f64 = usable(m).map(|k| gamma[(m, k)]).sum();
        for k in usable(m) {
            eta[(m, k)] = match rule {
                PowerRule::GainProportional => scale / total,
                PowerRule::EqualShare => scale / (n * gamma[(m, k)]),
            };
        }
    }
    eta
}

/// `(1/M) Σ η γ`; equals 1 after [`power_allocation`] unless nothing is served.
pub fn power_constraint_value(eta: &DMatrix<f64>, gamma: &DMatrix<f64>) -> f64 {
    eta.component_mul(gamma).sum() / eta.nrows() as f64
}

/// Per-user ergodic rates.
#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    /// bits/s/Hz.
    pub per_user_rate: Vec<f64>,
    pub sum_rate: f64,
    /// `1 − T / N_c`, clamped at zero.
    pub prefactor: f64,
    pub n_trials: usize,
    pub seed: u64,
}

/// `f_{k,k'} = √ρ_d Σ_{m ∈ R_E,k'} √η_mk' g_mk ĝ*_mk'`, K x K.
pub fn effective_gains(g: &DMatrix<Complex64>, ghat: &DMatrix<Complex64>, eta: &DMatrix<f64>, rho_d: f64) -> DMatrix<Complex64> {
    let (m_n, k_n) = g.shape();
    let mut f = DMatrix::from_element(k_n, k_n, Complex64::new(0.0, 0.0));
    for kp in 0..k_n {
        for m in 0..m_n {
            let e = eta[(m, kp)];
            if e <= 0.0 {
                continue;
            }
            let w = ghat[(m, kp)].conj() * (rho_d * e).sqrt();
            for k in 0..k_n {
                f[(k, kp)] += g[(m, k)] * w;
            }
        }
    }
    f
}

/// `log2(1 + |f_kk|² / (1 + Σ_{k'≠k} |f_kk'|²))` per UE.
pub fn instantaneous_rates(f: &DMatrix<Complex64>) -> Vec<f64> {
    (0..f.nrows())
        .map(|k| {
            let signal = f[(k, k)].norm_sqr();
            let interference: f64 = (0..f.ncols()).filter(|&j| j != k).map(|j| f[(k, j)].norm_sqr()).sum();
            (1.0 + signal / (1.0 + interference)).log2()
        })
        .collect()
}

/// Monte-Carlo ergodic downlink rates.
///
/// Trial `i` draws fading and pilot noise from its own stream
/// `split_seed(seed, i)`; averages use pairwise summation, so the result
/// depends only on the inputs.
pub fn downlink_rate(assign: &PilotAssignment, net: &NetworkRealization, cfg: &EvalConfig, seed: u64) -> Result<RateResult> {
    if cfg.n_trials == 0 {
        return Err(Error::InvalidConfig("n_trials must be at least 1".into()));
    }
    let k_n = net.num_ue();
    let t = assign.pilot_dim();
    let prefactor = (1.0 - t as f64 / cfg.n_c as f64).max(0.0);
    let est = Estimator::new(assign, net, cfg.rho_p)?;
    let eta = power_allocation(&est.gamma, &assign.serving, cfg.power_rule);
    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.n_trials); k_n];
    for trial in 0..cfg.n_trials {
        let mut rng = rng_from_seed(split_seed(seed, trial as u64));
        let chan = ChannelRealization::draw(net, &mut rng);
        let ghat = est.estimate(&assign.x, &chan, &mut rng);
        let f = effective_gains(&chan.g, &ghat, &eta, cfg.rho_d);
        for (k, r) in instantaneous_rates(&f).into_iter().enumerate() {
            samples[k].push(r);
        }
    }
    let per_user_rate: Vec<f64> = samples.iter().map(|s| prefactor * pairwise_sum(s) / cfg.n_trials as f64).collect();
    Ok(RateResult {
        sum_rate: pairwise_sum(&per_user_rate),
        per_user_rate,
        prefactor,
        n_trials: cfg.n_trials,
        seed,
    })
}

/// Empirical estimation MSE per link with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct MseSample {
    pub m: usize,
    pub k: usize,
    pub closed_form: f64,
    pub empirical: f64,
    pub std_error: f64,
}

/// Simulates training `n_trials` times and averages `|g − ĝ|²` per estimated link.
pub fn simulate_mse(assign: &PilotAssignment, net: &NetworkRealization, rho_p: f64, n_trials: usize, seed: u64) -> Result<Vec<MseSample>> {
    let est = Estimator::new(assign, net, rho_p)?;
    let links: Vec<(usize, usize)> = est.filters.iter().map(|f| (f.m, f.k)).collect();
    let mut errs: Vec<Vec<f64>> = vec![Vec::with_capacity(n_trials); links.len()];
    for trial in 0..n_trials {
        let mut rng = rng_from_seed(split_seed(seed, trial as u64));
        let chan = ChannelRealization::draw(net, &mut rng);
        let ghat = est.estimate(&assign.x, &chan, &mut rng);
        for (i, &(m, k)) in links.iter().enumerate() {
            errs[i].push((chan.g[(m, k)] - ghat[(m, k)]).norm_sqr());
        }
    }
    Ok(links
        .iter()
        .zip(errs)
        .map(|(&(m, k), e)| {
            let n = e.len() as f64;
            let mean = pairwise_sum(&e) / n;
            let var = e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            MseSample {
                m,
                k,
                closed_form: est.mse[(m, k)],
                empirical: mean,
                std_error: (var / n).sqrt(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(beta: &[f64], x: DMatrix<f64>, serving: Vec<Vec<usize>>) -> (PilotAssignment, NetworkRealization) {
        let net = NetworkRealization::from_beta(DMatrix::from_row_slice(beta.len(), 1, beta), 0.0).unwrap();
        let a = PilotAssignment {
            scheme: "t".into(),
            x,
            y: None,
            serving,
            seed: None,
            flagged_ues: Vec::new(),
        };
        (a, net)
    }

    #[test]
    fn pilot_power_examples() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        assert!((pilot_power(&x, 1.0).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(pilot_power(&DMatrix::identity(3, 3), 2.0).unwrap(), 2.0);
        assert!(pilot_power(&DMatrix::zeros(2, 2), 1.0).is_err());
    }

    #[test]
    fn single_link_by_hand() {
        // τ η = 1 with T = 1, K = 1, ρ_p = 1.
        let (a, net) = single(&[1.0], DMatrix::from_element(1, 1, 1.0), vec![vec![0]]);
        let est = Estimator::new(&a, &net, 1.0).unwrap();
        assert!((est.mse[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((est.gamma[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((est.filters[0].weights[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn shared_pilot_contamination_floor() {
        let (a, net) = single(&[1.0, 1.0], DMatrix::from_element(2, 1, 1.0), vec![vec![0, 1]]);
        for rho in [1.0, 1e3, 1e9] {
            let est = Estimator::new(&a, &net, rho).unwrap();
            let snr = est.tau * est.eta_p;
            let want = 1.0 - snr / (1.0 + 2.0 * snr);
            assert!((est.mse[(0, 0)] - want).abs() < 1e-12, "rho {rho}");
            assert!(est.mse[(0, 0)] > 0.5);
        }
    }

    #[test]
    fn exclusive_pilot_mse_vanishes() {
        let (a, net) = single(&[1.0], DMatrix::from_element(1, 1, 1.0), vec![vec![0]]);
        let mut last = f64::INFINITY;
        for db in [0, 10, 20, 30, 60] {
            let mse = Estimator::new(&a, &net, 10f64.powi(db / 10)).unwrap().mse[(0, 0)];
            assert!(mse < last);
            last = mse;
        }
        assert!(last < 1e-5);
    }

    #[test]
    fn power_allocation_is_tight() {
        let gamma = DMatrix::from_row_slice(3, 2, &[0.5, 0.25, 0.0, 0.0, 1.0, 0.0]);
        let serving = vec![vec![0, 1], vec![], vec![0]];
        for rule in [PowerRule::GainProportional, PowerRule::EqualShare] {
            let eta = power_allocation(&gamma, &serving, rule);
            assert!((power_constraint_value(&eta, &gamma) - 1.0).abs() < 1e-12);
            assert_eq!(eta.row(1).sum(), 0.0);
            let eta2 = power_allocation(&(gamma.clone() * 2.0), &serving, rule);
            assert!((eta2 * 2.0 - eta).norm() < 1e-12);
            let one = power_allocation(&DMatrix::from_element(1, 1, 0.3), &[vec![0]], rule);
            assert!((one[(0, 0)] * 0.3 - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn power_split_rules() {
        let gamma = DMatrix::from_row_slice(1, 2, &[3.0, 1.0]);
        let serving = vec![vec![0, 1]];
        let prop = power_allocation(&gamma, &serving, PowerRule::GainProportional);
        assert_eq!((prop[(0, 0)] * 3.0, prop[(0, 1)] * 1.0), (0.75, 0.25));
        let equal = power_allocation(&gamma, &serving, PowerRule::EqualShare);
        assert_eq!((equal[(0, 0)] * 3.0, equal[(0, 1)] * 1.0), (0.5, 0.5));
    }

    #[test]
    fn full_overhead_kills_rate() {
        let (a, net) = single(&[1e-3], DMatrix::from_element(1, 1, 1.0), vec![vec![0]]);
        let cfg = EvalConfig {
            rho_p: 1e3,
            rho_d: 1e3,
            n_c: 1,
            n_trials: 10,
            power_rule: PowerRule::default(),
        };
        let r = downlink_rate(&a, &net, &cfg, 1).unwrap();
        assert_eq!(r.sum_rate, 0.0);
    }

    #[test]
    fn rate_grows_with_downlink_power() {
        let (a, net) = single(&[1e-3], DMatrix::from_element(1, 1, 1.0), vec![vec![0]]);
        let mut last = -1.0;
        for rho_d in [1e2, 1e4, 1e6] {
            let cfg = EvalConfig {
                rho_p: 1e4,
                rho_d,
                n_c: 200,
                n_trials: 200,
                power_rule: PowerRule::default(),
            };
            let r = downlink_rate(&a, &net, &cfg, 7).unwrap();
            assert!(r.sum_rate > last);
            last = r.sum_rate;
        }
    }

    #[test]
    fn rates_are_reproducible() {
        let (a, net) = single(&[1e-3, 2e-3], DMatrix::identity(2, 2), vec![vec![0, 1]]);
        let cfg = EvalConfig {
            rho_p: 1e4,
            rho_d: 1e4,
            n_c: 200,
            n_trials: 50,
            power_rule: PowerRule::default(),
        };
        assert_eq!(downlink_rate(&a, &net, &cfg, 3).unwrap(), downlink_rate(&a, &net, &cfg, 3).unwrap());
    }

    #[test]
    fn channel_power_matches_beta() {
        let net = NetworkRealization::from_beta(DMatrix::from_row_slice(1, 2, &[2.0, 0.5]), 0.0).unwrap();
        let mut rng = rng_from_seed(4);
        let n = 20_000;
        let mut p = [0.0; 2];
        for _ in 0..n {
            let c = ChannelRealization::draw(&net, &mut rng);
            p[0] += c.g[(0, 0)].norm_sqr();
            p[1] += c.g[(1, 0)].norm_sqr();
        }
        assert!((p[0] / n as f64 - 2.0).abs() < 0.06);
        assert!((p[1] / n as f64 - 0.5).abs() < 0.015);
    }
}
