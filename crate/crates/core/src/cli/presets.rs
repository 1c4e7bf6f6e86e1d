// SPDX-License-Identifier: Apache-2.0

//! Built-in experiment configs, one per benchmark panel.

use super::config::ExperimentConfig;

pub struct Preset {
    pub name: &'static str,
    /// The claim the preset output checks.
    pub checks: &'static str,
    pub toml: &'static str,
}

impl Preset {
    pub fn config(&self) -> ExperimentConfig {
        ExperimentConfig::from_toml(self.toml).expect("built-in preset parses")
    }
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig1b",
        checks: "TFIM N=200: invariant control beats FAQUAD and linear ramps in n over the tau sweep",
        toml: include_str!("../../presets/fig1b.toml"),
    },
    Preset {
        name: "fig1c",
        checks: "TFIM N=100, g 10->1: n scales as tau^-6, tau^-8, tau^-10 for k = 3, 4, 5",
        toml: include_str!("../../presets/fig1c.toml"),
    },
    Preset {
        name: "fig1d",
        checks: "LRK N=100: invariant vs linear n over (tau, alpha); the advantage grows with alpha",
        toml: include_str!("../../presets/fig1d.toml"),
    },
    Preset {
        name: "fig2a",
        checks: "TFIM N=50: n grows with the control-noise strength W",
        toml: include_str!("../../presets/fig2a.toml"),
    },
    Preset {
        name: "fig2b",
        checks: "TFIM N=50 at 1.5, 2 and 5 tau_QSL: disorder-averaged n versus coupling disorder width Lambda",
        toml: include_str!("../../presets/fig2b.toml"),
    },
    Preset {
        name: "fig3b",
        checks: "Long-range Ising N=12: invariant fidelity exceeds linear fidelity for every alpha",
        toml: include_str!("../../presets/fig3b.toml"),
    },
    Preset {
        name: "fig4",
        checks: "Landau-Zener h_x=0.1: invariant control reaches unit fidelity at every tau; FAQUAD oscillates below unity, linear stays far below",
        toml: include_str!("../../presets/fig4.toml"),
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        for p in PRESETS {
            let issues = p.config().validate();
            assert!(issues.is_empty(), "{}: {:?}", p.name, issues);
        }
    }
}
