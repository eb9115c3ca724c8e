//! Sweep orchestration: network draws, scheme dispatch, rate evaluation and
//! the results/summary CSV files.
//!
//! Results CSV columns:
//! `scheme,G_fraction,kappa,T,user_id,rate,seed,realization_id,status`.
//! `kappa` is empty for schemes without a per-RRH cap; `user_id` and `rate`
//! are empty on `error` rows. `status` is `ok`, `unserved` (no RRH estimates
//! the UE) or `error: <message>`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{apply_serving_policy, cellfree_greedy_assign, lrmc_plus_semirandom, semi_random_assign, ServingPolicy};
use crate::error::{Error, Result};
use crate::eval::{downlink_rate, EvalConfig, PowerRule, RateResult};
use crate::greedy::{greedy_assign, GreedyConfig};
use crate::netgen::{generate_network, NetworkRealization, SimConfig};
use crate::rng::{label_hash, split_seed};
use crate::smwim::{sequential_assign, BendersOptions, SequentialResult};
use crate::topo::{build_conflict_graph, coded_multicast_assignment, color_assignment, default_estimation_pattern, sparsify_top_fraction, PilotAssignment, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    SemiRandom,
    CellfreeGreedy,
    LrmcSemirandom,
    Smwim,
    Greedy,
    Coloring,
    CodedMulticast,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::SemiRandom,
        Scheme::CellfreeGreedy,
        Scheme::LrmcSemirandom,
        Scheme::Smwim,
        Scheme::Greedy,
        Scheme::Coloring,
        Scheme::CodedMulticast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::SemiRandom => "semi-random",
            Scheme::CellfreeGreedy => "cellfree-greedy",
            Scheme::LrmcSemirandom => "lrmc-semirandom",
            Scheme::Smwim => "smwim",
            Scheme::Greedy => "greedy",
            Scheme::Coloring => "coloring",
            Scheme::CodedMulticast => "coded-multicast",
        }
    }

    /// Round-based schemes that take a per-RRH cap and run up to a pilot budget.
    pub fn is_sequential(self) -> bool {
        matches!(self, Scheme::Smwim | Scheme::Greedy)
    }

    /// Schemes whose pilot dimension is an output rather than a sweep axis.
    pub fn picks_own_dimension(self) -> bool {
        matches!(self, Scheme::LrmcSemirandom | Scheme::Coloring | Scheme::CodedMulticast)
    }

    fn is_baseline(self) -> bool {
        matches!(self, Scheme::SemiRandom | Scheme::CellfreeGreedy | Scheme::LrmcSemirandom)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::UnknownScheme(s.to_string()))
    }
}

/// Per-call parameters of [`assign_scheme`].
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeParams {
    /// Pilot budget; ignored by schemes that pick their own dimension.
    pub t: usize,
    pub kappa: usize,
    pub kappa_u: usize,
    pub serving_policy: ServingPolicy,
    /// Reassignment steps of the cell-free greedy baseline.
    pub cellfree_iters: usize,
}

/// Seed a scheme uses on a given network; identical across sweep points.
pub fn scheme_seed(net: &NetworkRealization, scheme: Scheme) -> u64 {
    split_seed(net.seed, label_hash(scheme.name()))
}

/// Seed of the Monte-Carlo trials on a given network, shared by all schemes
/// so they see the same fading draws.
pub fn trial_seed(net: &NetworkRealization) -> u64 {
    split_seed(net.seed, label_hash("rate-trials"))
}

fn sequential(scheme: Scheme, topo: &Topology, t_max: usize, kappa: usize, kappa_u: usize) -> Result<SequentialResult> {
    match scheme {
        Scheme::Smwim => sequential_assign(topo, t_max, kappa, &BendersOptions::default()),
        Scheme::Greedy => greedy_assign(topo, &GreedyConfig::new(t_max, kappa, kappa_u)),
        _ => unreachable!("not a sequential scheme"),
    }
}

/// Runs one scheme on one topology.
pub fn assign_scheme(scheme: Scheme, net: &NetworkRealization, topo: &Topology, p: &SchemeParams) -> Result<PilotAssignment> {
    let seed = scheme_seed(net, scheme);
    let mut a = match scheme {
        Scheme::SemiRandom => semi_random_assign(net.num_ue(), p.t, seed)?,
        Scheme::CellfreeGreedy => cellfree_greedy_assign(net, topo, p.t, p.cellfree_iters, seed)?,
        Scheme::LrmcSemirandom => lrmc_plus_semirandom(topo, &default_estimation_pattern(topo), seed)?,
        Scheme::Smwim | Scheme::Greedy => sequential(scheme, topo, p.t, p.kappa, p.kappa_u)?.assignment(scheme.name(), p.t),
        Scheme::Coloring => color_assignment(&build_conflict_graph(topo, &default_estimation_pattern(topo)))?,
        Scheme::CodedMulticast => coded_multicast_assignment(topo)?,
    };
    if scheme.is_baseline() {
        a = apply_serving_policy(a, topo, p.serving_policy)?;
    }
    a.seed = Some(seed);
    Ok(a)
}

/// Ergodic rates of an assignment on its network.
pub fn evaluate(assign: &PilotAssignment, net: &NetworkRealization, cfg: &SimConfig, n_trials: usize, power_rule: PowerRule) -> Result<RateResult> {
    let ec = EvalConfig {
        power_rule,
        ..EvalConfig::from_sim(cfg, net, n_trials)
    };
    downlink_rate(assign, net, &ec, trial_seed(net))
}

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: String,
    #[serde(rename = "G_fraction")]
    pub g_fraction: f64,
    pub kappa: Option<usize>,
    #[serde(rename = "T")]
    pub t: Option<usize>,
    pub user_id: Option<usize>,
    pub rate: Option<f64>,
    pub seed: u64,
    pub realization_id: usize,
    pub status: String,
}

/// Rows for a scored assignment, one per UE.
pub fn rate_rows(scheme: &str, g_fraction: f64, kappa: Option<usize>, assign: &PilotAssignment, rates: &RateResult, seed: u64, realization_id: usize) -> Vec<ResultRow> {
    let served: Vec<bool> = (0..assign.num_ue()).map(|k| assign.serving.iter().any(|s| s.contains(&k))).collect();
    rates
        .per_user_rate
        .iter()
        .enumerate()
        .map(|(k, &r)| ResultRow {
            scheme: scheme.to_string(),
            g_fraction,
            kappa,
            t: Some(assign.pilot_dim()),
            user_id: Some(k),
            rate: Some(r),
            seed,
            realization_id,
            status: if served[k] { "ok" } else { "unserved" }.to_string(),
        })
        .collect()
}

fn default_kappas() -> Vec<usize> {
    vec![1]
}

fn default_kappa_u() -> usize {
    20
}

fn default_trials() -> usize {
    1000
}

/// A sweep, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Deployment parameters; `seed` is replaced per realization.
    #[serde(default)]
    pub sim: SimConfig,
    pub schemes: Vec<Scheme>,
    /// Pilot budgets.
    pub t_values: Vec<usize>,
    /// Top-fraction sparsification levels.
    pub g_fractions: Vec<f64>,
    #[serde(default = "default_kappas")]
    pub kappas: Vec<usize>,
    #[serde(default = "default_kappa_u")]
    pub kappa_u: usize,
    pub realizations: usize,
    /// Realization `i` uses network seed `base_seed + i`.
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default)]
    pub serving_policy: ServingPolicy,
    #[serde(default)]
    pub power_rule: PowerRule,
    /// Defaults to K.
    #[serde(default)]
    pub cellfree_greedy_iters: Option<usize>,
    pub output: PathBuf,
    /// Defaults to the output path with a `.summary.csv` suffix.
    #[serde(default)]
    pub summary: Option<PathBuf>,
    /// Worker threads; the rayon default when absent.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            Error::parse(path, line, e.message())
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?, path)
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.schemes.is_empty() {
            return bad("at least one scheme is required".into());
        }
        if self.realizations == 0 || self.n_trials == 0 {
            return bad("realizations and n_trials must be positive".into());
        }
        if self.g_fractions.is_empty() || self.g_fractions.iter().any(|g| !(*g > 0.0 && *g <= 1.0)) {
            return bad("g_fractions must be non-empty and within (0, 1]".into());
        }
        let needs_t = self.schemes.iter().any(|s| !s.picks_own_dimension());
        if needs_t && self.t_values.is_empty() {
            return bad("t_values must be non-empty".into());
        }
        if let Some(&t) = self.t_values.iter().find(|&&t| t == 0 || t > self.sim.tau_p) {
            return bad(format!("T = {t} outside 1..={}", self.sim.tau_p));
        }
        if self.schemes.iter().any(|s| s.is_sequential()) {
            if self.kappas.is_empty() || self.kappas.contains(&0) {
                return bad("kappas must be non-empty and positive".into());
            }
            if self.kappa_u == 0 || self.kappa_u > self.sim.num_rrh {
                return bad(format!("kappa_u = {} outside 1..={}", self.kappa_u, self.sim.num_rrh));
            }
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        Ok(())
    }

    pub fn summary_path(&self) -> PathBuf {
        self.summary.clone().unwrap_or_else(|| {
            let mut s = self.output.clone().into_os_string();
            s.push(".summary.csv");
            s.into()
        })
    }
}

fn error_row(scheme: Scheme, g: f64, kappa: Option<usize>, t: Option<usize>, seed: u64, rid: usize, e: &Error) -> ResultRow {
    ResultRow {
        scheme: scheme.name().to_string(),
        g_fraction: g,
        kappa,
        t,
        user_id: None,
        rate: None,
        seed,
        realization_id: rid,
        status: format!("error: {e}"),
    }
}

/// All rows of one realization, in (scheme, G, kappa, T, user) order.
pub fn run_realization(spec: &ExperimentSpec, rid: usize) -> Result<Vec<ResultRow>> {
    let cfg = SimConfig {
        seed: spec.base_seed.wrapping_add(rid as u64),
        ..spec.sim.clone()
    };
    let net = generate_network(&cfg)?;
    let topos = spec
        .g_fractions
        .iter()
        .map(|&g| sparsify_top_fraction(&net, g))
        .collect::<Result<Vec<_>>>()?;
    let params = |t: usize, kappa: usize| SchemeParams {
        t,
        kappa,
        kappa_u: spec.kappa_u,
        serving_policy: spec.serving_policy,
        cellfree_iters: spec.cellfree_greedy_iters.unwrap_or(net.num_ue()),
    };
    let seed = net.seed;
    let mut rows = Vec::new();
    let score = |rows: &mut Vec<ResultRow>, scheme: Scheme, g: f64, kappa: Option<usize>, t: Option<usize>, a: Result<PilotAssignment>| {
        match a.and_then(|a| evaluate(&a, &net, &cfg, spec.n_trials, spec.power_rule).map(|r| (a, r))) {
            Ok((a, r)) => rows.extend(rate_rows(scheme.name(), g, kappa, &a, &r, seed, rid)),
            Err(e) => {
                log::warn!("realization {rid}: {scheme} failed: {e}");
                rows.push(error_row(scheme, g, kappa, t, seed, rid, &e));
            }
        }
    };
    for &scheme in &spec.schemes {
        for (&g, topo) in spec.g_fractions.iter().zip(&topos) {
            if scheme.picks_own_dimension() {
                score(&mut rows, scheme, g, None, None, assign_scheme(scheme, &net, topo, &params(1, 1)));
            } else if scheme.is_sequential() {
                let t_max = spec.t_values.iter().copied().max().unwrap_or(1);
                for &kappa in &spec.kappas {
                    // One run at the largest budget; smaller budgets are prefixes.
                    let full = sequential(scheme, topo, t_max, kappa, spec.kappa_u);
                    for &t in &spec.t_values {
                        let a = match &full {
                            Ok(res) => {
                                let mut a = res.assignment(scheme.name(), t);
                                a.seed = Some(scheme_seed(&net, scheme));
                                Ok(a)
                            }
                            Err(e) => Err(Error::Contract(e.to_string())),
                        };
                        score(&mut rows, scheme, g, Some(kappa), Some(t), a);
                    }
                }
            } else {
                for &t in &spec.t_values {
                    score(&mut rows, scheme, g, None, Some(t), assign_scheme(scheme, &net, topo, &params(t, 1)));
                }
            }
        }
    }
    Ok(rows)
}

/// Per sweep point aggregates over realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scheme: String,
    #[serde(rename = "G_fraction")]
    pub g_fraction: f64,
    pub kappa: Option<usize>,
    /// Empty for schemes that pick their own dimension.
    #[serde(rename = "T")]
    pub t: Option<usize>,
    pub realizations: usize,
    pub failures: usize,
    pub mean_pilot_dim: f64,
    pub mean_sum_rate: f64,
    /// Per-user rate exceeded by 90% of users (10th percentile).
    pub rate_90_likely: f64,
    pub median_rate: f64,
    /// Per-user rate exceeded by 10% of users (90th percentile).
    pub rate_10_likely: f64,
}

/// Nearest-rank percentile of sorted data, `p` in [0, 100].
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Groups rows by sweep point, in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    type Key = (String, u64, Option<usize>, Option<usize>);
    let own_dim = |s: &str| s.parse::<Scheme>().is_ok_and(|s| s.picks_own_dimension());
    let mut keys: Vec<Key> = Vec::new();
    let mut groups: Vec<Vec<&ResultRow>> = Vec::new();
    for r in rows {
        let t = if own_dim(&r.scheme) { None } else { r.t };
        let key = (r.scheme.clone(), r.g_fraction.to_bits(), r.kappa, t);
        match keys.iter().position(|k| *k == key) {
            Some(i) => groups[i].push(r),
            None => {
                keys.push(key);
                groups.push(vec![r]);
            }
        }
    }
    keys.into_iter()
        .zip(groups)
        .map(|((scheme, g, kappa, t), rs)| {
            let mut by_real: Vec<(usize, f64, usize)> = Vec::new();
            let mut failures = 0;
            let mut rates = Vec::new();
            for r in rs {
                match r.rate {
                    Some(rate) => {
                        rates.push(rate);
                        match by_real.iter_mut().find(|e| e.0 == r.realization_id) {
                            Some(e) => e.1 += rate,
                            None => by_real.push((r.realization_id, rate, r.t.unwrap_or(0))),
                        }
                    }
                    None => failures += 1,
                }
            }
            rates.sort_by(f64::total_cmp);
            let n = by_real.len().max(1) as f64;
            SummaryRow {
                scheme,
                g_fraction: f64::from_bits(g),
                kappa,
                t,
                realizations: by_real.len(),
                failures,
                mean_pilot_dim: by_real.iter().map(|e| e.2 as f64).sum::<f64>() / n,
                mean_sum_rate: by_real.iter().map(|e| e.1).sum::<f64>() / n,
                rate_90_likely: nearest_rank(&rates, 10.0),
                median_rate: nearest_rank(&rates, 50.0),
                rate_10_likely: nearest_rank(&rates, 90.0),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

/// Runs every realization (in parallel) and aggregates. Output order does
/// not depend on scheduling.
pub fn run(spec: &ExperimentSpec) -> Result<RunOutput> {
    spec.validate()?;
    let work = || -> Result<Vec<ResultRow>> {
        let per: Vec<Vec<ResultRow>> = (0..spec.realizations)
            .into_par_iter()
            .map(|rid| run_realization(spec, rid))
            .collect::<Result<_>>()?;
        Ok(per.into_iter().flatten().collect())
    };
    let rows = match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let summary = summarize(&rows);
    Ok(RunOutput { rows, summary })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes rows to any sink (header included).
pub fn write_csv_to<T: Serialize, W: std::io::Write>(sink: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// [`run`] followed by writing the results and summary files.
pub fn run_and_write(spec: &ExperimentSpec) -> Result<RunOutput> {
    let out = run(spec)?;
    write_csv(&spec.output, &out.rows)?;
    write_csv(&spec.summary_path(), &out.summary)?;
    Ok(out)
}
