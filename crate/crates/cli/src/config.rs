//! Flat key-value run configuration.
//!
//! A config file is UTF-8 text with one `key = value` pair per line;
//! blank lines and `#` comments are ignored. Unknown keys are rejected and
//! every problem is reported at once. Recognized keys (defaults in
//! parentheses):
//!
//! ```text
//! epsilon          interaction length, required
//! dt               time step k, required
//! t_final          final time, required
//! nx               squares along x, required
//! ny               squares along y (nx)
//! domain           x0 y0 x1 y1 (-1 -1 1 1)
//! r                polynomial degree 1|2 (1)
//! lambda           -1|0|1 (-1)
//! sigma            penalty (8 r (r+1), i.e. 16 for r=1)
//! variant          convex_splitting|fully_implicit (convex_splitting)
//! newton_tol       (1e-10)
//! newton_max_iter  (30)
//! linear_tol       (1e-8)
//! linear_max_iter  (20000)
//! ic               circle|test1|test2|constant|mms (circle)
//! ic_center_x      (0)          circle center
//! ic_center_y      (0)
//! ic_radius        (0.5)        circle radius
//! ic_value         (0)          constant value
//! snapshot_times   space-separated list ()
//! out              output directory (out)
//! seed             RNG seed for probes (20210318)
//! experiment       optional tag, echoed only
//! levels           mms refinement levels (4)
//! t_probe          spectrum probe time (0.02)
//! epsilons         sweep list (per-experiment default)
//! k_values         stability sweep list (per-experiment default)
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use acdg_core::assembly::{default_sigma, SchemeConfig, Variant};
use acdg_core::error::{Error, Result};
use acdg_core::mesh::Rect;

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    Constant { value: f64 },
    Circle { center: [f64; 2], radius: f64 },
    Test1,
    Test2,
    Mms,
}

impl InitialCondition {
    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::Constant { .. } => "constant",
            InitialCondition::Circle { .. } => "circle",
            InitialCondition::Test1 => "test1",
            InitialCondition::Test2 => "test2",
            InitialCondition::Mms => "mms",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub t_final: f64,
    pub nx: usize,
    pub ny: usize,
    pub domain: Rect,
    pub degree: usize,
    pub lambda: i32,
    pub sigma: f64,
    pub variant: Variant,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub linear_tol: f64,
    pub linear_max_iter: usize,
    pub ic: InitialCondition,
    pub snapshot_times: Vec<f64>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub experiment: Option<String>,
    pub levels: usize,
    pub t_probe: f64,
    pub epsilons: Vec<f64>,
    pub k_values: Vec<f64>,
}

impl RunConfig {
    pub fn scheme(&self) -> SchemeConfig {
        SchemeConfig {
            epsilon: self.epsilon,
            dt: self.dt,
            lambda: self.lambda,
            sigma: self.sigma,
            variant: self.variant,
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
            linear_tol: self.linear_tol,
            linear_max_iter: self.linear_max_iter,
            t_final: self.t_final,
        }
    }

    /// Resolved configuration in file syntax, reusable as an input.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let mut push = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        push("epsilon", format!("{}", self.epsilon));
        push("dt", format!("{}", self.dt));
        push("t_final", format!("{}", self.t_final));
        push("nx", format!("{}", self.nx));
        push("ny", format!("{}", self.ny));
        push(
            "domain",
            format!(
                "{} {} {} {}",
                self.domain.x0, self.domain.y0, self.domain.x1, self.domain.y1
            ),
        );
        push("r", format!("{}", self.degree));
        push("lambda", format!("{}", self.lambda));
        push("sigma", format!("{}", self.sigma));
        push("variant", self.variant.as_str().to_string());
        push("newton_tol", format!("{:e}", self.newton_tol));
        push("newton_max_iter", format!("{}", self.newton_max_iter));
        push("linear_tol", format!("{:e}", self.linear_tol));
        push("linear_max_iter", format!("{}", self.linear_max_iter));
        push("ic", self.ic.name().to_string());
        match &self.ic {
            InitialCondition::Circle { center, radius } => {
                push("ic_center_x", format!("{}", center[0]));
                push("ic_center_y", format!("{}", center[1]));
                push("ic_radius", format!("{}", radius));
            }
            InitialCondition::Constant { value } => push("ic_value", format!("{}", value)),
            _ => {}
        }
        if !self.snapshot_times.is_empty() {
            push(
                "snapshot_times",
                self.snapshot_times
                    .iter()
                    .map(|t| format!("{t}"))
                    .collect::<Vec<_>>()
                    .join(" "),
            );
        }
        push("out", self.out_dir.display().to_string());
        push("seed", format!("{}", self.seed));
        if let Some(e) = &self.experiment {
            push("experiment", e.clone());
        }
        push("levels", format!("{}", self.levels));
        push("t_probe", format!("{}", self.t_probe));
        if !self.epsilons.is_empty() {
            push(
                "epsilons",
                self.epsilons
                    .iter()
                    .map(|t| format!("{t}"))
                    .collect::<Vec<_>>()
                    .join(" "),
            );
        }
        if !self.k_values.is_empty() {
            push(
                "k_values",
                self.k_values
                    .iter()
                    .map(|t| format!("{t}"))
                    .collect::<Vec<_>>()
                    .join(" "),
            );
        }
        s
    }
}

const KNOWN_KEYS: &[&str] = &[
    "epsilon",
    "dt",
    "t_final",
    "nx",
    "ny",
    "domain",
    "r",
    "lambda",
    "sigma",
    "variant",
    "newton_tol",
    "newton_max_iter",
    "linear_tol",
    "linear_max_iter",
    "ic",
    "ic_center_x",
    "ic_center_y",
    "ic_radius",
    "ic_value",
    "snapshot_times",
    "out",
    "seed",
    "experiment",
    "levels",
    "t_probe",
    "epsilons",
    "k_values",
];

pub fn parse_config_file(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut problems: Vec<String> = Vec::new();
    let mut map: BTreeMap<String, String> = BTreeMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                let key = k.trim().to_string();
                if !KNOWN_KEYS.contains(&key.as_str()) {
                    problems.push(format!("line {}: unknown key '{key}'", lineno + 1));
                    continue;
                }
                if map.insert(key.clone(), v.trim().to_string()).is_some() {
                    problems.push(format!("line {}: duplicate key '{key}'", lineno + 1));
                }
            }
            None => problems.push(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            )),
        }
    }

    let get_f64 = |key: &str, problems: &mut Vec<String>| -> Option<f64> {
        map.get(key).and_then(|v| match v.parse::<f64>() {
            Ok(x) => Some(x),
            Err(_) => {
                problems.push(format!("{key}: '{v}' is not a number"));
                None
            }
        })
    };

    let epsilon = get_f64("epsilon", &mut problems);
    let dt = get_f64("dt", &mut problems);
    let t_final = get_f64("t_final", &mut problems);
    let sigma_raw = get_f64("sigma", &mut problems);
    let newton_tol = get_f64("newton_tol", &mut problems).unwrap_or(1e-10);
    let linear_tol = get_f64("linear_tol", &mut problems).unwrap_or(1e-8);
    let t_probe = get_f64("t_probe", &mut problems).unwrap_or(0.02);
    let ic_center_x = get_f64("ic_center_x", &mut problems).unwrap_or(0.0);
    let ic_center_y = get_f64("ic_center_y", &mut problems).unwrap_or(0.0);
    let ic_radius = get_f64("ic_radius", &mut problems).unwrap_or(0.5);
    let ic_value = get_f64("ic_value", &mut problems).unwrap_or(0.0);

    let get_usize = |key: &str, default: usize, problems: &mut Vec<String>| -> usize {
        match map.get(key) {
            None => default,
            Some(v) => match v.parse::<usize>() {
                Ok(x) => x,
                Err(_) => {
                    problems.push(format!("{key}: '{v}' is not a non-negative integer"));
                    default
                }
            },
        }
    };
    let get_list = |key: &str, problems: &mut Vec<String>| -> Vec<f64> {
        match map.get(key) {
            None => Vec::new(),
            Some(v) => {
                let mut out = Vec::new();
                for tok in v.split_whitespace() {
                    match tok.parse::<f64>() {
                        Ok(x) => out.push(x),
                        Err(_) => {
                            problems.push(format!("{key}: '{tok}' is not a number"));
                        }
                    }
                }
                out
            }
        }
    };

    for key in ["epsilon", "dt", "t_final", "nx"] {
        if !map.contains_key(key) {
            problems.push(format!("missing required key '{key}'"));
        }
    }

    let nx = get_usize("nx", 1, &mut problems);
    let ny = get_usize("ny", nx, &mut problems);
    let degree = get_usize("r", 1, &mut problems);
    if !(1..=2).contains(&degree) {
        problems.push(format!("r: polynomial degree must be 1 or 2, got {degree}"));
    }
    let newton_max_iter = get_usize("newton_max_iter", 30, &mut problems);
    let linear_max_iter = get_usize("linear_max_iter", 20_000, &mut problems);
    let levels = get_usize("levels", 4, &mut problems).max(1);
    let seed = match map.get("seed") {
        None => 20_210_318u64,
        Some(v) => v.parse::<u64>().unwrap_or_else(|_| {
            problems.push(format!("seed: '{v}' is not an unsigned integer"));
            0
        }),
    };

    let lambda = match map.get("lambda") {
        None => -1,
        Some(v) => match v.parse::<i32>() {
            Ok(l) if [-1, 0, 1].contains(&l) => l,
            Ok(l) => {
                problems.push(format!("lambda: {l} is not in the allowed set {{-1, 0, 1}}"));
                -1
            }
            Err(_) => {
                problems.push(format!("lambda: '{v}' is not an integer"));
                -1
            }
        },
    };

    let variant = match map.get("variant").map(|s| s.as_str()) {
        None => Variant::ConvexSplitting,
        Some("convex_splitting") => Variant::ConvexSplitting,
        Some("fully_implicit") => Variant::FullyImplicit,
        Some(v) => {
            problems.push(format!(
                "variant: '{v}' is not one of convex_splitting | fully_implicit"
            ));
            Variant::ConvexSplitting
        }
    };

    let domain = match map.get("domain") {
        None => Rect::unit_centered(),
        Some(v) => {
            let parts: Vec<f64> = v
                .split_whitespace()
                .filter_map(|t| t.parse::<f64>().ok())
                .collect();
            if parts.len() != 4 {
                problems.push(format!("domain: expected 'x0 y0 x1 y1', got '{v}'"));
                Rect::unit_centered()
            } else {
                Rect::new(parts[0], parts[1], parts[2], parts[3])
            }
        }
    };

    let ic = match map.get("ic").map(|s| s.as_str()) {
        None | Some("circle") => InitialCondition::Circle {
            center: [ic_center_x, ic_center_y],
            radius: ic_radius,
        },
        Some("constant") => InitialCondition::Constant { value: ic_value },
        Some("test1") => InitialCondition::Test1,
        Some("test2") => InitialCondition::Test2,
        Some("mms") => InitialCondition::Mms,
        Some(v) => {
            problems.push(format!(
                "ic: unknown selector '{v}' (circle | test1 | test2 | constant | mms)"
            ));
            InitialCondition::Mms
        }
    };

    let snapshot_times = get_list("snapshot_times", &mut problems);
    let epsilons = get_list("epsilons", &mut problems);
    let k_values = get_list("k_values", &mut problems);

    // Range checks on top of presence checks.
    if let Some(e) = epsilon {
        if !(e > 0.0) {
            problems.push(format!("epsilon: must be positive, got {e}"));
        }
    }
    if let Some(k) = dt {
        if !(k > 0.0) {
            problems.push(format!("dt: must be positive, got {k}"));
        }
    }
    if let Some(t) = t_final {
        if t < 0.0 {
            problems.push(format!("t_final: must be non-negative, got {t}"));
        }
    }
    if map.contains_key("nx") && nx == 0 {
        problems.push("nx: must be at least 1".into());
    }
    if let Some(s) = sigma_raw {
        if !(s > 0.0) {
            problems.push(format!("sigma: must be positive, got {s}"));
        }
    }
    if !(domain.width() > 0.0 && domain.height() > 0.0) {
        problems.push("domain: rectangle is degenerate".into());
    }

    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }

    Ok(RunConfig {
        epsilon: epsilon.unwrap(),
        dt: dt.unwrap(),
        t_final: t_final.unwrap(),
        nx,
        ny,
        domain,
        degree,
        lambda,
        sigma: sigma_raw.unwrap_or_else(|| default_sigma(degree)),
        variant,
        newton_tol,
        newton_max_iter,
        linear_tol,
        linear_max_iter,
        ic,
        snapshot_times,
        out_dir: PathBuf::from(map.get("out").cloned().unwrap_or_else(|| "out".into())),
        seed,
        experiment: map.get("experiment").cloned(),
        levels,
        t_probe,
        epsilons,
        k_values,
    })
}
