//! Random network realizations: geometry, three-slope path loss with
//! log-normal shadowing, and the resulting large-scale fading matrix.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, standard_normal};

/// System parameters of one simulated deployment.
///
/// Distances are in km, heights in m, frequency in MHz and powers in mW.
/// Every field has a default, so a config file only lists what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub area_side_km: f64,
    /// Number of RRHs (M).
    pub num_rrh: usize,
    /// Number of UEs (K).
    pub num_ue: usize,
    pub carrier_freq_mhz: f64,
    pub bandwidth_hz: f64,
    pub rho_p_mw: f64,
    pub rho_d_mw: f64,
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub sigma_sh_db: f64,
    pub h_rrh_m: f64,
    pub h_ue_m: f64,
    pub d0_km: f64,
    pub d1_km: f64,
    /// Largest admissible pilot dimension.
    pub tau_p: usize,
    /// TDD frame length in samples.
    pub n_c: usize,
    pub seed: u64,
    /// Frequency coefficient of the COST-231 constant (33.9 in the standard model).
    pub hata_freq_coeff: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            area_side_km: 1.0,
            num_rrh: 100,
            num_ue: 40,
            carrier_freq_mhz: 1900.0,
            bandwidth_hz: 20e6,
            rho_p_mw: 100.0,
            rho_d_mw: 200.0,
            noise_psd_dbm_hz: -174.0,
            noise_figure_db: 9.0,
            sigma_sh_db: 8.0,
            h_rrh_m: 15.0,
            h_ue_m: 1.65,
            d0_km: 0.01,
            d1_km: 0.05,
            tau_p: 100,
            n_c: 200,
            seed: 0,
            hata_freq_coeff: 33.9,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("area_side_km", self.area_side_km),
            ("carrier_freq_mhz", self.carrier_freq_mhz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("rho_p_mw", self.rho_p_mw),
            ("rho_d_mw", self.rho_d_mw),
            ("h_rrh_m", self.h_rrh_m),
            ("h_ue_m", self.h_ue_m),
            ("d0_km", self.d0_km),
            ("d1_km", self.d1_km),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.sigma_sh_db < 0.0 || !self.sigma_sh_db.is_finite() {
            return Err(Error::InvalidConfig("sigma_sh_db must be non-negative".into()));
        }
        if !(self.d0_km < self.d1_km && self.d1_km < self.area_side_km) {
            return Err(Error::InvalidConfig(format!(
                "need d0 < d1 < area side, got {} / {} / {}",
                self.d0_km, self.d1_km, self.area_side_km
            )));
        }
        if !(1 <= self.tau_p && self.tau_p < self.n_c) {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= tau_p < n_c, got tau_p={} n_c={}",
                self.tau_p, self.n_c
            )));
        }
        if self.num_rrh == 0 || self.num_ue == 0 {
            return Err(Error::InvalidConfig("num_rrh and num_ue must be >= 1".into()));
        }
        Ok(())
    }

    /// COST-231 Hata constant `L` in dB.
    pub fn hata_constant_db(&self) -> f64 {
        let lf = self.carrier_freq_mhz.log10();
        46.3 + self.hata_freq_coeff * lf - 13.82 * self.h_rrh_m.log10() - (1.1 * lf - 0.7) * self.h_ue_m
            + (1.56 * lf - 0.8)
    }

    /// Thermal noise power over the band, including the noise figure.
    pub fn noise_power_dbm(&self) -> f64 {
        self.noise_psd_dbm_hz + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db
    }
}

/// Three-slope path loss (dB, non-positive gain convention) at distance `d_km`.
pub fn path_loss_db(d_km: f64, cfg: &SimConfig) -> Result<f64> {
    if !(d_km > 0.0) || !d_km.is_finite() {
        return Err(Error::Domain(format!("distance must be positive, got {d_km}")));
    }
    Ok(path_loss_unchecked(d_km, cfg))
}

fn path_loss_unchecked(d_km: f64, cfg: &SimConfig) -> f64 {
    let l = cfg.hata_constant_db();
    let (d0, d1) = (cfg.d0_km, cfg.d1_km);
    if d_km <= d0 {
        -l - 15.0 * d1.log10() - 20.0 * d0.log10()
    } else if d_km <= d1 {
        -l - 15.0 * d1.log10() - 20.0 * d_km.log10()
    } else {
        -l - 35.0 * d_km.log10()
    }
}

/// Distance on the square torus of side `side`.
pub fn torus_distance(a: [f64; 2], b: [f64; 2], side: f64) -> f64 {
    let wrap = |d: f64| {
        let d = d.abs();
        d.min(side - d)
    };
    let dx = wrap(a[0] - b[0]);
    let dy = wrap(a[1] - b[1]);
    dx.hypot(dy)
}

/// One drop of RRHs and UEs together with its large-scale fading.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub rrh_xy: Vec<[f64; 2]>,
    pub ue_xy: Vec<[f64; 2]>,
    /// K x M linear-scale large-scale fading, row = UE, column = RRH.
    pub beta: DMatrix<f64>,
    pub noise_power_dbm: f64,
    pub seed: u64,
}

impl NetworkRealization {
    pub fn num_ue(&self) -> usize {
        self.beta.nrows()
    }

    pub fn num_rrh(&self) -> usize {
        self.beta.ncols()
    }

    /// Wraps an externally supplied fading matrix (positions left empty).
    pub fn from_beta(beta: DMatrix<f64>, noise_power_dbm: f64) -> Result<Self> {
        if beta.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::Domain("all beta entries must be positive and finite".into()));
        }
        Ok(Self {
            rrh_xy: Vec::new(),
            ue_xy: Vec::new(),
            beta,
            noise_power_dbm,
            seed: 0,
        })
    }
}

/// Draws a realization.
///
/// Stream order on one ChaCha8 generator seeded with `cfg.seed`: RRH
/// coordinates (x then y, RRH by RRH), UE coordinates likewise, then one
/// shadowing normal per (UE, RRH) pair in row-major order.
pub fn generate_network(cfg: &SimConfig) -> Result<NetworkRealization> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let side = cfg.area_side_km;
    let point = |rng: &mut crate::rng::SimRng| [rng.random::<f64>() * side, rng.random::<f64>() * side];
    let rrh_xy: Vec<[f64; 2]> = (0..cfg.num_rrh).map(|_| point(&mut rng)).collect();
    let ue_xy: Vec<[f64; 2]> = (0..cfg.num_ue).map(|_| point(&mut rng)).collect();

    let mut beta = DMatrix::zeros(cfg.num_ue, cfg.num_rrh);
    for k in 0..cfg.num_ue {
        for m in 0..cfg.num_rrh {
            let d = torus_distance(ue_xy[k], rrh_xy[m], side);
            let shadow = cfg.sigma_sh_db * standard_normal(&mut rng);
            let db = path_loss_unchecked(d, cfg) + shadow;
            beta[(k, m)] = 10f64.powf(db / 10.0);
        }
    }
    Ok(NetworkRealization {
        rrh_xy,
        ue_xy,
        beta,
        noise_power_dbm: cfg.noise_power_dbm(),
        seed: cfg.seed,
    })
}

/// Pilot and downlink powers normalized to the noise power.
pub fn normalized_snrs(net: &NetworkRealization, cfg: &SimConfig) -> (f64, f64) {
    let norm = |p_mw: f64| 10f64.powf((10.0 * p_mw.log10() - net.noise_power_dbm) / 10.0);
    (norm(cfg.rho_p_mw), norm(cfg.rho_d_mw))
}
