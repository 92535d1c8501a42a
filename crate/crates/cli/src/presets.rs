//! Figure presets: pure aliases for explicit flag sets. A preset only
//! fills in flags the user left unset, so individual parameters (for
//! example the damping probability of the asymmetric-panel scan) remain
//! overridable.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetKind {
    Scan,
    Curve,
}

/// Default flag values a preset expands to.
#[derive(Debug, Clone)]
pub struct Preset {
    pub kind: PresetKind,
    pub family: &'static str,
    pub a: Option<f64>,
    pub a_prime: Option<f64>,
    pub big_a: Option<f64>,
    pub p: Option<f64>,
    pub b: Option<f64>,
    pub rounds: Option<u32>,
    pub grid: Option<&'static str>,
}

pub fn lookup(name: &str) -> Option<Preset> {
    let base = Preset {
        kind: PresetKind::Scan,
        family: "phi",
        a: None,
        a_prime: None,
        big_a: None,
        p: None,
        b: None,
        rounds: None,
        grid: Some("200x200"),
    };
    Some(match name {
        // Single-round enhancement region over (p, a).
        "fig1" => Preset {
            rounds: Some(1),
            ..base
        },
        // Asymmetric-pair region over (a', a); panel (b) damping p = 0.1,
        // override --p for the 0.01 and 0.001 panels.
        "fig2" => Preset {
            family: "phi-asym",
            p: Some(0.1),
            ..base
        },
        // Iterated regions with fixed weak strength b = 0.22.
        "fig3n2" => Preset {
            b: Some(0.22),
            rounds: Some(2),
            ..base
        },
        "fig3n3" => Preset {
            b: Some(0.22),
            rounds: Some(3),
            ..base
        },
        // Concurrence curves for a = 0.3, b = 0.22 through three rounds.
        "fig4" => Preset {
            kind: PresetKind::Curve,
            a: Some(0.3),
            b: Some(0.22),
            rounds: Some(3),
            grid: Some("200"),
            ..base
        },
        // Chi-family regions without and with the weak step b = 0.25.
        "fig5a" => Preset {
            family: "chi",
            ..base
        },
        "fig5b" => Preset {
            family: "chi",
            b: Some(0.25),
            ..base
        },
        // Chi-family concurrence curves for A = 0.9, b = 0.25.
        "fig6" => Preset {
            kind: PresetKind::Curve,
            family: "chi",
            big_a: Some(0.9),
            b: Some(0.25),
            grid: Some("200"),
            ..base
        },
        _ => return None,
    })
}
