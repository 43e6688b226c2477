//! Seeded generator for transaction-style tabular data.
//!
//! Each feature is a two-mode mixture: the row picks the high mode with
//! probability `mix`, then the value is `center + spread * z`. Correlated
//! pairs overwrite the target column with `r * source + sqrt(1 - r^2) * target`.
//! A planted proxy shifts the designated feature by `proxy_strength * spread`
//! for rows carrying the designated level.
//!
//! Labels are Bernoulli draws. Without a signal the probability is the
//! configured rate. With a [`LabelSignal`] the log-odds are
//! `b + strength * (mode - mix)` where `mode` is the driver feature's mode
//! indicator and `b` is solved by bisection so the rate is met exactly in
//! expectation. A [`ConditionalRate`] replaces the rate for the listed levels.
//!
//! Random streams (see [`crate::rng`]): attribute `j` uses
//! `(Protected, j)`, feature `j` uses `(FeatureMode, j)` and
//! `(FeatureNoise, j)`, label `k` uses `(Label, k)`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Dataset, ProtectedAttribute, TaskKind, UNSPECIFIED};
use crate::error::{Error, Result};
use crate::rng::{Purpose, Stream};

pub const SYNTH_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub levels: Vec<String>,
    /// Relative frequencies among specified rows; empty means uniform.
    #[serde(default)]
    pub weights: Vec<f64>,
    #[serde(default)]
    pub unspecified_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub low: f64,
    pub high: f64,
    pub spread: f64,
    /// Probability of the high mode.
    pub mix: f64,
}

impl Default for ModeSpec {
    fn default() -> Self {
        ModeSpec {
            low: 0.0,
            high: 1.0,
            spread: 0.1,
            mix: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    pub source: usize,
    pub target: usize,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyTarget {
    pub feature: usize,
    pub attribute: String,
    pub level: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelSignal {
    pub label: usize,
    pub feature: usize,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalRate {
    pub label: usize,
    pub attribute: String,
    pub rates: BTreeMap<String, f64>,
}

/// Spend amounts for the regression task: `exp(log_mean + log_sd * z)` for
/// adopting rows, zero otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpendSpec {
    pub log_mean: f64,
    pub log_sd: f64,
}

impl Default for SpendSpec {
    fn default() -> Self {
        SpendSpec {
            log_mean: 4.0,
            log_sd: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    #[serde(default = "synth_version")]
    pub spec_version: String,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    #[serde(default)]
    pub task: TaskKind,
    pub attributes: Vec<AttributeSpec>,
    pub label_rates: Vec<f64>,
    /// One entry shared by all features, or one per feature.
    #[serde(default = "default_modes")]
    pub modes: Vec<ModeSpec>,
    #[serde(default)]
    pub correlated_pairs: Vec<CorrelationSpec>,
    #[serde(default)]
    pub proxy_strength: f64,
    #[serde(default)]
    pub proxy: Option<ProxyTarget>,
    #[serde(default)]
    pub label_signals: Vec<LabelSignal>,
    #[serde(default)]
    pub conditional_rates: Vec<ConditionalRate>,
    #[serde(default)]
    pub spend: SpendSpec,
    pub seed: u64,
}

fn synth_version() -> String {
    SYNTH_VERSION.to_string()
}

fn default_modes() -> Vec<ModeSpec> {
    vec![ModeSpec::default()]
}

impl Default for SynthConfig {
    /// Shaped like the transaction data: 20 bimodal features, 9 imbalanced
    /// labels (the second and eighth dominate), gender/ethnicity/age with
    /// unspecified rates of 3%, 30% and 0.02%.
    fn default() -> Self {
        let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        SynthConfig {
            spec_version: synth_version(),
            n: 10_000,
            p: 20,
            k: 9,
            task: TaskKind::Adoption,
            attributes: vec![
                AttributeSpec {
                    name: "gender".into(),
                    levels: names(&["female", "male"]),
                    weights: vec![1.0, 1.0],
                    unspecified_rate: 0.03,
                },
                AttributeSpec {
                    name: "ethnicity".into(),
                    levels: names(&[
                        "white",
                        "hispanic",
                        "black",
                        "asian",
                        "middle_eastern",
                        "native_indian",
                    ]),
                    weights: vec![0.70, 0.10, 0.09, 0.07, 0.03, 0.01],
                    unspecified_rate: 0.30,
                },
                AttributeSpec {
                    name: "age".into(),
                    levels: names(&["under_40", "over_40"]),
                    weights: vec![1.0, 1.0],
                    unspecified_rate: 0.0002,
                },
            ],
            label_rates: vec![0.05, 0.24, 0.04, 0.08, 0.06, 0.02, 0.07, 0.16, 0.05],
            modes: default_modes(),
            correlated_pairs: vec![
                CorrelationSpec {
                    source: 0,
                    target: 1,
                    r: 0.9,
                },
                CorrelationSpec {
                    source: 2,
                    target: 3,
                    r: 0.9,
                },
            ],
            proxy_strength: 0.0,
            proxy: None,
            label_signals: Vec::new(),
            conditional_rates: Vec::new(),
            spend: SpendSpec::default(),
            seed: 42,
        }
    }
}

fn in_unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::config(m));
        if self.n == 0 || self.p == 0 || self.k == 0 || self.attributes.is_empty() {
            return bad("n, p, k and the attribute list must be nonempty".into());
        }
        if self.label_rates.len() != self.k {
            return bad(format!(
                "{} label rates for {} labels",
                self.label_rates.len(),
                self.k
            ));
        }
        if let Some(r) = self.label_rates.iter().find(|r| !in_unit(**r)) {
            return bad(format!("label rate {r} outside [0, 1]"));
        }
        if self.modes.len() != 1 && self.modes.len() != self.p {
            return bad("modes must have one entry or one per feature".into());
        }
        for m in &self.modes {
            if !in_unit(m.mix) || !(m.spread >= 0.0) || !m.low.is_finite() || !m.high.is_finite() {
                return bad(format!("invalid mode spec {m:?}"));
            }
        }
        for a in &self.attributes {
            if a.levels.is_empty() || a.levels.iter().any(|l| l == UNSPECIFIED || l.is_empty()) {
                return bad(format!("attribute {:?} needs named levels", a.name));
            }
            if !a.weights.is_empty()
                && (a.weights.len() != a.levels.len()
                    || a.weights.iter().any(|w| !(*w >= 0.0))
                    || a.weights.iter().sum::<f64>() <= 0.0)
            {
                return bad(format!("invalid weights for {:?}", a.name));
            }
            if !in_unit(a.unspecified_rate) {
                return bad(format!("unspecified rate of {:?} outside [0, 1]", a.name));
            }
        }
        for c in &self.correlated_pairs {
            if c.source >= self.p || c.target >= self.p || c.source == c.target {
                return bad(format!("invalid correlated pair {c:?}"));
            }
            if !(-1.0..=1.0).contains(&c.r) {
                return bad(format!("correlation {} outside [-1, 1]", c.r));
            }
        }
        if !(self.proxy_strength >= 0.0) || !self.proxy_strength.is_finite() {
            return bad("proxy_strength must be finite and >= 0".into());
        }
        if let Some(px) = &self.proxy {
            if px.feature >= self.p {
                return bad(format!("proxy feature {} out of range", px.feature));
            }
            self.level_code(&px.attribute, &px.level)?;
        }
        let mut signalled = vec![false; self.k];
        for s in &self.label_signals {
            if s.label >= self.k || s.feature >= self.p || !s.strength.is_finite() {
                return bad(format!("invalid label signal {s:?}"));
            }
            if std::mem::replace(&mut signalled[s.label], true) {
                return bad(format!("label {} has more than one signal", s.label));
            }
        }
        let mut conditioned = vec![false; self.k];
        for c in &self.conditional_rates {
            if c.label >= self.k {
                return bad(format!("conditional rate for unknown label {}", c.label));
            }
            if std::mem::replace(&mut conditioned[c.label], true) {
                return bad(format!(
                    "label {} has more than one conditional rate",
                    c.label
                ));
            }
            for (level, r) in &c.rates {
                self.level_code(&c.attribute, level)?;
                if !in_unit(*r) {
                    return bad(format!("conditional rate {r} outside [0, 1]"));
                }
            }
        }
        if !(self.spend.log_sd >= 0.0) || !self.spend.log_mean.is_finite() {
            return bad("invalid spend spec".into());
        }
        Ok(())
    }

    fn attribute_index(&self, name: &str) -> Result<usize> {
        self.attributes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    fn level_code(&self, attribute: &str, level: &str) -> Result<u32> {
        let a = &self.attributes[self.attribute_index(attribute)?];
        if level == UNSPECIFIED {
            return Ok(a.levels.len() as u32);
        }
        a.levels
            .iter()
            .position(|l| l == level)
            .map(|c| c as u32)
            .ok_or_else(|| Error::config(format!("{attribute:?} has no level {level:?}")))
    }

    fn mode(&self, j: usize) -> ModeSpec {
        if self.modes.len() == 1 {
            self.modes[0]
        } else {
            self.modes[j]
        }
    }

    fn proxy_target(&self) -> ProxyTarget {
        self.proxy.clone().unwrap_or_else(|| ProxyTarget {
            feature: 0,
            attribute: self.attributes[0].name.clone(),
            level: self.attributes[0].levels[0].clone(),
        })
    }
}

fn sigmoid(z: f64) -> f64 {
    crate::learners::sigmoid(z)
}

/// Log-odds offset `b` with `mix * s(b + strength(1 - mix)) + (1 - mix) * s(b - strength mix) = rate`.
fn solve_offset(rate: f64, strength: f64, mix: f64) -> f64 {
    let f = |b: f64| {
        mix * sigmoid(b + strength * (1.0 - mix)) + (1.0 - mix) * sigmoid(b - strength * mix) - rate
    };
    let (mut lo, mut hi) = (-60.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let n = cfg.n;

    let mut protected = Vec::with_capacity(cfg.attributes.len());
    for (j, spec) in cfg.attributes.iter().enumerate() {
        let mut s = Stream::new(cfg.seed, Purpose::Protected, j as u32);
        let weights = if spec.weights.is_empty() {
            vec![1.0; spec.levels.len()]
        } else {
            spec.weights.clone()
        };
        let unspecified = spec.levels.len() as u32;
        let codes = (0..n)
            .map(|_| {
                if s.bernoulli(spec.unspecified_rate) {
                    unspecified
                } else {
                    s.categorical(&weights) as u32
                }
            })
            .collect();
        let mut levels = spec.levels.clone();
        levels.push(UNSPECIFIED.to_string());
        protected.push(ProtectedAttribute {
            name: spec.name.clone(),
            levels,
            codes,
        });
    }

    let mut features = DMatrix::zeros(n, cfg.p);
    let mut high_mode = vec![vec![false; n]; cfg.p];
    for j in 0..cfg.p {
        let m = cfg.mode(j);
        let mut modes = Stream::new(cfg.seed, Purpose::FeatureMode, j as u32);
        let mut noise = Stream::new(cfg.seed, Purpose::FeatureNoise, j as u32);
        for i in 0..n {
            let high = modes.bernoulli(m.mix);
            high_mode[j][i] = high;
            let center = if high { m.high } else { m.low };
            features[(i, j)] = center + m.spread * noise.normal();
        }
    }
    for c in &cfg.correlated_pairs {
        let keep = (1.0 - c.r * c.r).sqrt();
        for i in 0..n {
            features[(i, c.target)] =
                c.r * features[(i, c.source)] + keep * features[(i, c.target)];
        }
    }
    if cfg.proxy_strength > 0.0 {
        let px = cfg.proxy_target();
        let a = cfg.attribute_index(&px.attribute)?;
        let code = cfg.level_code(&px.attribute, &px.level)?;
        let shift = cfg.proxy_strength * cfg.mode(px.feature).spread;
        for i in 0..n {
            if protected[a].codes[i] == code {
                features[(i, px.feature)] += shift;
            }
        }
    }

    let mut targets = DMatrix::zeros(n, cfg.k);
    for k in 0..cfg.k {
        let signal = cfg.label_signals.iter().find(|s| s.label == k);
        let conditional = cfg.conditional_rates.iter().find(|c| c.label == k);
        let cond_codes: Option<(usize, BTreeMap<u32, f64>)> = match conditional {
            Some(c) => {
                let a = cfg.attribute_index(&c.attribute)?;
                let mut by_code = BTreeMap::new();
                for (level, r) in &c.rates {
                    by_code.insert(cfg.level_code(&c.attribute, level)?, *r);
                }
                Some((a, by_code))
            }
            None => None,
        };
        let mut offsets: BTreeMap<u64, f64> = BTreeMap::new();
        let mut s = Stream::new(cfg.seed, Purpose::Label, k as u32);
        for i in 0..n {
            let rate = cond_codes
                .as_ref()
                .and_then(|(a, m)| m.get(&protected[*a].codes[i]).copied())
                .unwrap_or(cfg.label_rates[k]);
            let prob = match signal {
                Some(sig) if rate > 0.0 && rate < 1.0 && sig.strength != 0.0 => {
                    let mix = cfg.mode(sig.feature).mix;
                    let b = *offsets
                        .entry(rate.to_bits())
                        .or_insert_with(|| solve_offset(rate, sig.strength, mix));
                    let centred = if high_mode[sig.feature][i] { 1.0 } else { 0.0 } - mix;
                    sigmoid(b + sig.strength * centred)
                }
                _ => rate,
            };
            let adopt = s.uniform() < prob;
            targets[(i, k)] = match cfg.task {
                TaskKind::Adoption => adopt as u8 as f64,
                TaskKind::Spending => {
                    let z = s.normal();
                    if adopt {
                        (cfg.spend.log_mean + cfg.spend.log_sd * z).exp()
                    } else {
                        0.0
                    }
                }
            };
        }
    }

    Dataset::new(
        features,
        (1..=cfg.p).map(|j| format!("f{j}")).collect(),
        targets,
        (1..=cfg.k).map(|k| format!("label_{k}")).collect(),
        protected,
        cfg.task,
    )
}
