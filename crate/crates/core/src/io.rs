//! On-disk formats: networks as JSON, assignments as a line-oriented text file.
//!
//! Assignment file layout, one record per line, `#` starts a comment:
//!
//! ```text
//! tpa-assignment 1
//! scheme smwim
//! size <K> <M> <T>
//! seed <u64>                      (optional)
//! g_fraction <f64>                (optional)
//! kappa <k>                       (optional)
//! edge <ue> <rrh> <e|i> <weight>  (one per topology edge; `e` = estimated)
//! pilot <ue> <x_0> ... <x_T-1>    (one per UE)
//! flag <ue>                       (optional, repeated)
//! ```
//!
//! Serving sets are the `e` edges. Floats are written in shortest
//! round-trip form, so save/load is lossless.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::{NetworkRealization, SimConfig};
use crate::topo::{EstimationPattern, PilotAssignment, Topology};

const MAGIC: &str = "tpa-assignment";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    config: SimConfig,
    seed: u64,
    noise_power_dbm: f64,
    rrh_xy: Vec<[f64; 2]>,
    ue_xy: Vec<[f64; 2]>,
    /// K rows of M gains.
    beta: Vec<Vec<f64>>,
}

pub fn network_to_json(net: &NetworkRealization, cfg: &SimConfig) -> Result<String> {
    let file = NetworkFile {
        config: cfg.clone(),
        seed: net.seed,
        noise_power_dbm: net.noise_power_dbm,
        rrh_xy: net.rrh_xy.clone(),
        ue_xy: net.ue_xy.clone(),
        beta: (0..net.num_ue()).map(|k| net.beta.row(k).iter().copied().collect()).collect(),
    };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

pub fn network_from_json(text: &str, path: &Path) -> Result<(NetworkRealization, SimConfig)> {
    let file: NetworkFile = serde_json::from_str(text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    let k_n = file.beta.len();
    let m_n = file.beta.first().map_or(0, Vec::len);
    if let Some(k) = file.beta.iter().position(|r| r.len() != m_n) {
        return Err(Error::parse(path, 0, format!("beta row {k} has {} entries, expected {m_n}", file.beta[k].len())));
    }
    if file.ue_xy.len() != k_n || file.rrh_xy.len() != m_n {
        return Err(Error::parse(path, 0, "coordinate lists disagree with the beta shape"));
    }
    let beta = DMatrix::from_fn(k_n, m_n, |k, m| file.beta[k][m]);
    let mut net = NetworkRealization::from_beta(beta, file.noise_power_dbm).map_err(|e| Error::parse(path, 0, e.to_string()))?;
    net.rrh_xy = file.rrh_xy;
    net.ue_xy = file.ue_xy;
    net.seed = file.seed;
    Ok((net, file.config))
}

pub fn save_network(path: &Path, net: &NetworkRealization, cfg: &SimConfig) -> Result<()> {
    std::fs::write(path, network_to_json(net, cfg)?)?;
    Ok(())
}

pub fn load_network(path: &Path) -> Result<(NetworkRealization, SimConfig)> {
    network_from_json(&std::fs::read_to_string(path)?, path)
}

/// An assignment together with the topology it was computed on.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentFile {
    pub topology: Topology,
    pub assignment: PilotAssignment,
    /// Sparsification level the topology came from.
    pub g_fraction: Option<f64>,
    pub kappa: Option<usize>,
}

impl AssignmentFile {
    /// Estimation pattern given by the serving sets.
    pub fn pattern(&self) -> Result<EstimationPattern> {
        self.assignment.pattern(&self.topology)
    }

    pub fn to_text(&self) -> String {
        let a = &self.assignment;
        let topo = &self.topology;
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC} {VERSION}");
        let _ = writeln!(s, "scheme {}", a.scheme);
        let _ = writeln!(s, "size {} {} {}", topo.num_ue(), topo.num_rrh(), a.pilot_dim());
        if let Some(seed) = a.seed {
            let _ = writeln!(s, "seed {seed}");
        }
        if let Some(g) = self.g_fraction {
            let _ = writeln!(s, "g_fraction {g}");
        }
        if let Some(kappa) = self.kappa {
            let _ = writeln!(s, "kappa {kappa}");
        }
        for (k, m) in topo.edges() {
            let kind = if a.serving[m].binary_search(&k).is_ok() { 'e' } else { 'i' };
            let _ = writeln!(s, "edge {k} {m} {kind} {}", topo.weight(k, m));
        }
        for k in 0..a.num_ue() {
            let _ = write!(s, "pilot {k}");
            for v in a.x.row(k).iter() {
                let _ = write!(s, " {v}");
            }
            s.push('\n');
        }
        for k in &a.flagged_ues {
            let _ = writeln!(s, "flag {k}");
        }
        s
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::parse(path, line, msg);
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (ln, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        if header != format!("{MAGIC} {VERSION}") {
            return Err(err(ln, format!("expected `{MAGIC} {VERSION}` header")));
        }
        let mut scheme = None;
        let mut size: Option<(usize, usize, usize)> = None;
        let mut seed = None;
        let mut g_fraction = None;
        let mut kappa = None;
        let mut edges = Vec::new();
        let mut estimated = Vec::new();
        let mut pilots: Vec<Option<Vec<f64>>> = Vec::new();
        let mut flagged = Vec::new();

        for (ln, line) in lines {
            let mut fields = line.split_whitespace();
            let tag = fields.next().unwrap_or_default();
            let rest: Vec<&str> = fields.collect();
            let num = |i: usize, what: &str| -> Result<usize> {
                rest.get(i)
                    .ok_or_else(|| err(ln, format!("missing field `{what}`")))?
                    .parse()
                    .map_err(|_| err(ln, format!("field `{what}` is not a non-negative integer: `{}`", rest[i])))
            };
            let float = |i: usize, what: &str| -> Result<f64> {
                let raw = rest.get(i).ok_or_else(|| err(ln, format!("missing field `{what}`")))?;
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(ln, format!("field `{what}` is not a finite number: `{raw}`")))
            };
            if matches!(tag, "edge" | "pilot" | "flag") && size.is_none() {
                return Err(err(ln, format!("`{tag}` record before `size`")));
            }
            let (k_n, m_n, t_n) = size.unwrap_or_default();
            let check_ue = |k: usize| if k < k_n { Ok(k) } else { Err(err(ln, format!("UE {k} out of range (K = {k_n})"))) };
            match tag {
                "scheme" => scheme = Some(rest.first().ok_or_else(|| err(ln, "missing field `name`".into()))?.to_string()),
                "size" => {
                    size = Some((num(0, "K")?, num(1, "M")?, num(2, "T")?));
                    pilots = vec![None; size.unwrap().0];
                }
                "seed" => seed = Some(rest.first().and_then(|s| s.parse::<u64>().ok()).ok_or_else(|| err(ln, "bad seed".into()))?),
                "g_fraction" => g_fraction = Some(float(0, "g_fraction")?),
                "kappa" => kappa = Some(num(0, "kappa")?),
                "edge" => {
                    let k = check_ue(num(0, "ue")?)?;
                    let m = num(1, "rrh")?;
                    if m >= m_n {
                        return Err(err(ln, format!("RRH {m} out of range (M = {m_n})")));
                    }
                    match rest.get(2).copied() {
                        Some("e") => estimated.push((k, m)),
                        Some("i") => {}
                        other => return Err(err(ln, format!("edge kind must be `e` or `i`, got {other:?}"))),
                    }
                    edges.push((k, m, float(3, "weight")?));
                }
                "pilot" => {
                    let k = check_ue(num(0, "ue")?)?;
                    if rest.len() != t_n + 1 {
                        return Err(err(ln, format!("expected {t_n} pilot entries, got {}", rest.len() - 1)));
                    }
                    let row = (1..=t_n).map(|i| float(i, "x")).collect::<Result<Vec<_>>>()?;
                    if pilots[k].replace(row).is_some() {
                        return Err(err(ln, format!("duplicate pilot for UE {k}")));
                    }
                }
                "flag" => flagged.push(check_ue(num(0, "ue")?)?),
                other => return Err(err(ln, format!("unknown record `{other}`"))),
            }
        }

        let last = text.lines().count().max(1);
        let (k_n, m_n, t_n) = size.ok_or_else(|| err(last, "missing `size` record".into()))?;
        let topology = Topology::from_edges(k_n, m_n, &edges).map_err(|e| err(last, e.to_string()))?;
        if topology.num_edges() != edges.len() {
            return Err(err(last, "duplicate edge records".into()));
        }
        let mut x = DMatrix::zeros(k_n, t_n);
        for (k, row) in pilots.into_iter().enumerate() {
            let row = row.ok_or_else(|| err(last, format!("no pilot record for UE {k}")))?;
            for (t, v) in row.into_iter().enumerate() {
                x[(k, t)] = v;
            }
        }
        let mut serving = vec![Vec::new(); m_n];
        for (k, m) in estimated {
            serving[m].push(k);
        }
        for s in &mut serving {
            s.sort_unstable();
        }
        flagged.sort_unstable();
        flagged.dedup();
        Ok(Self {
            topology,
            assignment: PilotAssignment {
                scheme: scheme.ok_or_else(|| err(last, "missing `scheme` record".into()))?,
                x,
                y: None,
                serving,
                seed,
                flagged_ues: flagged,
            },
            g_fraction,
            kappa,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?, path)
    }
}
