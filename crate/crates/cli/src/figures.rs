//! Canned configurations that regenerate the data behind each figure.

/// One sub-run of a figure: file prefix, experiment kind, TOML settings.
pub struct Part {
    pub prefix: &'static str,
    pub kind: &'static str,
    pub toml: &'static str,
}

pub struct Figure {
    pub tag: &'static str,
    pub about: &'static str,
    pub parts: &'static [Part],
}

pub const FIGURES: &[Figure] = &[
    Figure {
        tag: "fig1",
        about: "Tavis-Cummings levels and per-block minimal gaps versus lambda, j = 10",
        parts: &[
            Part { prefix: "gc1_", kind: "tc-gaps", toml: "model = \"tc\"\nj = 10\ngamma_over_gc = 1.0\nlambda_max = 60" },
            Part { prefix: "gc2_", kind: "tc-gaps", toml: "model = \"tc\"\nj = 10\ngamma_over_gc = 2.0\nlambda_max = 60" },
        ],
    },
    Figure {
        tag: "fig2",
        about: "Tavis-Cummings Peres lattices of <Jz>/j, j = 10, lambda <= 50",
        parts: &[
            Part { prefix: "gc1_", kind: "peres", toml: "model = \"tc\"\nj = 10\ngamma_over_gc = 1.0\nlambda_max = 50" },
            Part { prefix: "gc2_", kind: "peres", toml: "model = \"tc\"\nj = 10\ngamma_over_gc = 2.0\nlambda_max = 50" },
        ],
    },
    Figure {
        tag: "fig4",
        about: "validity parameter v_max over coupling and energy in both phases",
        parts: &[
            Part {
                prefix: "normal_",
                kind: "vmap",
                toml: "j = 40\nratios = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]\nenergies = [-1.0, -0.9, -0.8, -0.7, -0.6, -0.5, -0.4, -0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0, 2.5, 3.0]",
            },
            Part {
                prefix: "superradiant_",
                kind: "vmap",
                toml: "j = 40\nratios = [1.1, 1.2, 1.35, 1.5, 1.75, 2.0, 2.25, 2.5, 3.0]\nenergies = [-2.5, -2.25, -2.0, -1.8, -1.6, -1.4, -1.2, -1.0, -0.8, -0.6, -0.4, -0.2, 0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]",
            },
        ],
    },
    Figure {
        tag: "fig5",
        about: "Peres lattice and Anderson-Darling scan, j = 40, gamma = 0.2 gamma_c, cutoff 160",
        parts: &[Part { prefix: "", kind: "adscan", toml: "j = 40\ngamma_over_gc = 0.2\nn_max = 160\nobservables = true" }],
    },
    Figure {
        tag: "fig7",
        about: "Peres lattice and Anderson-Darling scan at gamma = 0.9 gamma_c, with Poincare sections",
        parts: &[
            Part { prefix: "", kind: "adscan", toml: "j = 40\ngamma_over_gc = 0.9\nn_max = 160\nobservables = true" },
            Part { prefix: "sections_", kind: "poincare", toml: "j = 40\ngamma_over_gc = 0.9\nenergies = [-0.8, -0.5, 0.5, 1.2, 1.8, 2.5]" },
        ],
    },
    Figure {
        tag: "fig10",
        about: "superradiant Peres lattices and Anderson-Darling scans at gamma = 2 gamma_c for j = 40 and j = 80",
        parts: &[
            Part { prefix: "j40_", kind: "adscan", toml: "j = 40\ngamma_over_gc = 2.0\nn_max = 220\nobservables = true" },
            Part { prefix: "j80_", kind: "adscan", toml: "j = 80\ngamma_over_gc = 2.0\nn_max = 135\nobservables = true" },
        ],
    },
    Figure {
        tag: "fig13",
        about: "Poincare sections and Lyapunov classes at gamma = 2 gamma_c",
        parts: &[Part { prefix: "", kind: "poincare", toml: "j = 40\ngamma_over_gc = 2.0\nenergies = [-2.0, -1.4, -1.2, -1.0, -0.5, 1.5]" }],
    },
];

pub fn find(tag: &str) -> Option<&'static Figure> {
    FIGURES.iter().find(|f| f.tag == tag)
}

/// `fig1 (about), fig2 (about), ...`
pub fn listing() -> String {
    FIGURES.iter().map(|f| format!("{} ({})", f.tag, f.about)).collect::<Vec<_>>().join(", ")
}
