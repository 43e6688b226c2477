//! Generator configurations with planted, known effects. Used by the
//! examples and the test suites.

use std::collections::BTreeMap;

use super::synth::{
    AttributeSpec, ConditionalRate, LabelSignal, ModeSpec, ProxyTarget, SynthConfig,
};

/// Within-mode spread shared by the presets; proxy shifts are multiples of it.
const SPREAD: f64 = 0.1;

fn unimodal() -> ModeSpec {
    ModeSpec {
        low: 0.0,
        high: 0.0,
        spread: SPREAD,
        mix: 0.5,
    }
}

fn two_groups() -> AttributeSpec {
    AttributeSpec {
        name: "group".into(),
        levels: vec!["a".into(), "b".into()],
        weights: vec![1.0, 1.0],
        unspecified_rate: 0.0,
    }
}

impl SynthConfig {
    /// `p` features where `f1` is unimodal and shifted by `strength`
    /// within-mode spreads for `gender = female`; every other column and all
    /// labels are independent of the protected attributes. `strength = 0`
    /// gives the independence null.
    pub fn planted_proxy(n: usize, p: usize, strength: f64, seed: u64) -> SynthConfig {
        let mut modes = vec![ModeSpec::default(); p];
        modes[0] = unimodal();
        SynthConfig {
            n,
            p,
            k: 2,
            label_rates: vec![0.3, 0.2],
            modes,
            correlated_pairs: Vec::new(),
            proxy_strength: strength,
            proxy: Some(ProxyTarget {
                feature: 0,
                attribute: "gender".into(),
                level: "female".into(),
            }),
            seed,
            ..SynthConfig::default()
        }
    }

    /// One attribute `group ∈ {a, b}`. `label_1` has base rate 0.2 in `a`
    /// and 0.5 in `b` (a selection gap of 0.3 in the data), driven by the
    /// mode of `f2`; `f1` is a clean proxy for `b`. `label_2` (rate 0.3,
    /// driven by `f3`) is independent of the group.
    pub fn planted_gap(n: usize, seed: u64) -> SynthConfig {
        let mut modes = vec![ModeSpec::default(); 4];
        modes[0] = unimodal();
        SynthConfig {
            n,
            p: 4,
            k: 2,
            attributes: vec![two_groups()],
            label_rates: vec![0.35, 0.3],
            modes,
            correlated_pairs: Vec::new(),
            proxy_strength: 3.0,
            proxy: Some(ProxyTarget {
                feature: 0,
                attribute: "group".into(),
                level: "b".into(),
            }),
            label_signals: vec![
                LabelSignal {
                    label: 0,
                    feature: 1,
                    strength: 3.0,
                },
                LabelSignal {
                    label: 1,
                    feature: 2,
                    strength: 3.0,
                },
            ],
            conditional_rates: vec![ConditionalRate {
                label: 0,
                attribute: "group".into(),
                rates: BTreeMap::from([("a".into(), 0.2), ("b".into(), 0.5)]),
            }],
            seed,
            ..SynthConfig::default()
        }
    }

    /// Default-shaped attributes with three well-separated labels (each driven
    /// by the mode of its own feature). The second label's rate depends on gender
    /// (0.8 for female, 0.1 otherwise) while no feature carries gender. Only
    /// a model that sees the attribute can use it. With `planted = false`
    /// labels are independent of all attributes.
    pub fn planted_awareness(n: usize, planted: bool, seed: u64) -> SynthConfig {
        let k = 3;
        let conditional_rates = if planted {
            vec![ConditionalRate {
                label: 1,
                attribute: "gender".into(),
                rates: BTreeMap::from([
                    ("female".into(), 0.8),
                    ("male".into(), 0.1),
                    ("unspecified".into(), 0.1),
                ]),
            }]
        } else {
            Vec::new()
        };
        SynthConfig {
            n,
            p: 6,
            k,
            label_rates: vec![0.4, 0.4, 0.35],
            correlated_pairs: Vec::new(),
            label_signals: (0..k)
                .map(|l| LabelSignal {
                    label: l,
                    feature: l,
                    strength: 6.0,
                })
                .collect(),
            conditional_rates,
            seed,
            ..SynthConfig::default()
        }
    }
}
