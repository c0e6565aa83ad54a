//! Bundled scenarios.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub toml: &'static str,
}

pub const PRESETS: [Preset; 3] = [
    Preset {
        name: "hermitian-fig2",
        description: "Hermitian static coupler: centroid, momentum and widths over two beat lengths",
        toml: r#"name = "hermitian-fig2"
observables = ["x_mean", "p_mean", "x_std", "p_std"]
initial_mode = "left"

[system]
system = "hermitian_static"
k1 = 0.645
k2 = 0.865

[z_grid]
periods = 2.0
samples = 401

[potential]
half_width = 12.0
nx = 481
"#,
    },
    Preset {
        name: "pt-static-fig3-4",
        description: "Static PT coupler: power, moments and Hamiltonian moments over two beat lengths",
        toml: r#"name = "pt-static-fig3-4"
observables = [
    "power", "x_mean", "p_mean", "x_std", "p_std",
    "h_mean", "h_std", "h_mean_pt", "h_std_pt",
]
initial_mode = "left"

[system]
system = "pt_static"
k1 = 1.1
k2 = 1.2
alpha = 0.2

[z_grid]
periods = 2.0
samples = 401

[potential]
half_width = 8.0
nx = 321
"#,
    },
    Preset {
        name: "pt-dynamic-fig1-5-6",
        description: "z-periodic PT coupler: potential over two modulation periods, TB and BPM dynamics",
        toml: r#"name = "pt-dynamic-fig1-5-6"
observables = [
    "power", "x_mean", "p_mean", "x_std", "p_std", "h_mean_pt", "h_std_pt",
]
initial_mode = "left"

[system]
system = "pt_dynamic"
k1 = 1.0
k2 = 1.1
k3 = 0.95
alpha = 0.1

[z_grid]
periods = 2.0
samples = 513

[bpm]
enabled = true

[potential]
half_width = 10.0
nx = 201
periods = 2.0
nz = 129
"#,
    },
];

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
