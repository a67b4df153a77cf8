use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use lme::algebra::{ComplexMatrix, Tolerances, C64};
use lme::model::{build_refrigerator, build_two_qubit, ModelKind, QubitSpec, SystemModel};
use lme::solvers::CoefficientTable;
use lme::thermo::ThermoOptions;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn field_error(field: impl fmt::Display, msg: impl fmt::Display) -> ConfigError {
    ConfigError(format!("{field}: {msg}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum KindName {
    TwoQubit,
    Refrigerator,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum MethodName {
    #[default]
    Exact,
    Perturbative,
    ClosedForm,
    Evolve,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    model: RawModel,
    #[serde(default)]
    qubits: Vec<RawQubit>,
    #[serde(default)]
    solver: RawSolver,
    sweep: Option<RawSweep>,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    thermo: ThermoOptions,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: KindName,
    #[serde(default)]
    g: f64,
    /// Custom models only: rows of `[re, im]` pairs.
    interaction: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQubit {
    #[serde(rename = "E")]
    energy: f64,
    #[serde(rename = "T")]
    temperature: Option<f64>,
    beta: Option<f64>,
    p: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    #[serde(default)]
    method: MethodName,
    #[serde(default = "default_order")]
    order: usize,
    #[serde(default)]
    table: CoefficientTable,
}

fn default_order() -> usize {
    3
}

impl Default for RawSolver {
    fn default() -> Self {
        Self { method: MethodName::default(), order: default_order(), table: CoefficientTable::default() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    #[serde(default)]
    axes: Vec<RawAxis>,
    random: Option<RawRandom>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxis {
    parameter: String,
    values: Option<Vec<f64>>,
    start: Option<f64>,
    stop: Option<f64>,
    steps: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRandom {
    count: usize,
    ranges: BTreeMap<String, [f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    #[serde(default)]
    format: Format,
    #[serde(default)]
    density_matrices: bool,
}

/// A sweepable scalar of the scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Coupling,
    Detuning,
    Energy(usize),
    Beta(usize),
    Temperature(usize),
    Rate(usize),
}

impl Param {
    fn parse(path: &str, n_qubits: usize) -> Result<Self, String> {
        match path {
            "g" => return Ok(Param::Coupling),
            "detuning" => return Ok(Param::Detuning),
            _ => {}
        }
        let parts: Vec<&str> = path.split('.').collect();
        let [head, index, name] = parts.as_slice() else {
            return Err(format!("unknown parameter `{path}` (expected g, detuning or qubits.<i>.E|T|beta|p)"));
        };
        if *head != "qubits" {
            return Err(format!("unknown parameter `{path}`"));
        }
        let i: usize = index.parse().map_err(|_| format!("`{index}` is not a qubit index"))?;
        if i >= n_qubits {
            return Err(format!("qubit index {i} out of range for {n_qubits} qubits"));
        }
        match *name {
            "E" => Ok(Param::Energy(i)),
            "beta" => Ok(Param::Beta(i)),
            "T" => Ok(Param::Temperature(i)),
            "p" => Ok(Param::Rate(i)),
            other => Err(format!("unknown qubit field `{other}` (expected E, T, beta or p)")),
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Coupling => f.write_str("g"),
            Param::Detuning => f.write_str("detuning"),
            Param::Energy(i) => write!(f, "qubits.{i}.E"),
            Param::Beta(i) => write!(f, "qubits.{i}.beta"),
            Param::Temperature(i) => write!(f, "qubits.{i}.T"),
            Param::Rate(i) => write!(f, "qubits.{i}.p"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitParams {
    pub energy: f64,
    pub beta: f64,
    pub rate: f64,
}

/// One fully specified parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub g: f64,
    pub qubits: Vec<QubitParams>,
}

impl Point {
    fn set(&mut self, kind: ModelKind, param: Param, value: f64) {
        match param {
            Param::Coupling => self.g = value,
            Param::Energy(i) => self.qubits[i].energy = value,
            Param::Beta(i) => self.qubits[i].beta = value,
            Param::Temperature(i) => self.qubits[i].beta = 1.0 / value,
            Param::Rate(i) => self.qubits[i].rate = value,
            // Detuning moves the middle qubit: E₂ = E₁ − ΔE, or E₁ + E₃ − ΔE.
            Param::Detuning => match kind {
                ModelKind::Refrigerator => self.qubits[1].energy = self.qubits[0].energy + self.qubits[2].energy - value,
                _ => self.qubits[1].energy = self.qubits[0].energy - value,
            },
        }
    }

    fn with(&self, kind: ModelKind, assignments: &[(Param, f64)]) -> Point {
        let mut point = self.clone();
        // Detuning is relative to the other energies, so it goes last.
        for &(param, value) in assignments.iter().filter(|(p, _)| *p != Param::Detuning) {
            point.set(kind, param, value);
        }
        for &(param, value) in assignments.iter().filter(|(p, _)| *p == Param::Detuning) {
            point.set(kind, param, value);
        }
        point
    }

    pub fn describe(&self) -> String {
        let qubits: Vec<String> = self
            .qubits
            .iter()
            .enumerate()
            .map(|(i, q)| format!("E{0}={1} beta{0}={2} p{0}={3}", i + 1, q.energy, q.beta, q.rate))
            .collect();
        format!("g={} {}", self.g, qubits.join(" "))
    }
}

#[derive(Debug, Clone)]
pub struct Axis {
    pub param: Param,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RandomSamples {
    pub count: usize,
    pub ranges: Vec<(Param, (f64, f64))>,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub axes: Vec<Axis>,
    pub random: Option<RandomSamples>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub kind: ModelKind,
    pub base: Point,
    pub interaction: Option<ComplexMatrix>,
    pub method: MethodName,
    pub order: usize,
    pub table: CoefficientTable,
    pub sweep: Option<Sweep>,
    pub output_dir: Option<PathBuf>,
    pub format: Format,
    pub density_matrices: bool,
    pub tol: Tolerances,
    pub thermo: ThermoOptions,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 2018;

fn qp(energy: f64, beta: f64, rate: f64) -> QubitParams {
    QubitParams { energy, beta, rate }
}

impl Scenario {
    /// Built-in reference scenario for a model kind.
    pub fn defaults(kind: KindName) -> Result<Self, ConfigError> {
        let (kind, qubits) = match kind {
            KindName::TwoQubit => (ModelKind::TwoQubit, vec![qp(1.0, 1.0, 0.1), qp(1.0, 0.5, 0.1)]),
            KindName::Refrigerator => {
                (ModelKind::Refrigerator, vec![qp(1.0, 1.0, 0.1), qp(2.0, 0.5, 0.1), qp(1.0, 0.1, 0.1)])
            }
            KindName::Custom => return Err(ConfigError("custom models need a --config file".into())),
        };
        Ok(Self {
            kind,
            base: Point { g: 0.05, qubits },
            interaction: None,
            method: MethodName::Exact,
            order: default_order(),
            table: CoefficientTable::default(),
            sweep: None,
            output_dir: None,
            format: Format::Csv,
            density_matrices: false,
            tol: Tolerances::default(),
            thermo: ThermoOptions::default(),
            seed: DEFAULT_SEED,
        })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| ConfigError(e.to_string().trim_end().to_string()))?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawScenario) -> Result<Self, ConfigError> {
        let kind = match raw.model.kind {
            KindName::TwoQubit => ModelKind::TwoQubit,
            KindName::Refrigerator => ModelKind::Refrigerator,
            KindName::Custom => ModelKind::Custom,
        };
        let expected = match kind {
            ModelKind::TwoQubit => Some(2),
            ModelKind::Refrigerator => Some(3),
            ModelKind::Custom => None,
        };
        if let Some(n) = expected {
            if raw.qubits.len() != n {
                return Err(field_error("qubits", format!("{} model needs {n} [[qubits]] entries, found {}", kind.as_str(), raw.qubits.len())));
            }
            if raw.model.interaction.is_some() {
                return Err(field_error("model.interaction", "only allowed with kind = \"custom\""));
            }
        } else if raw.qubits.is_empty() || raw.qubits.len() > 3 {
            return Err(field_error("qubits", format!("custom models take 1 to 3 qubits, found {}", raw.qubits.len())));
        }

        let mut qubits = Vec::with_capacity(raw.qubits.len());
        for (i, q) in raw.qubits.iter().enumerate() {
            let beta = match (q.temperature, q.beta) {
                (Some(_), Some(_)) | (None, None) => {
                    return Err(field_error(format!("qubits[{i}]"), "give exactly one of T or beta"))
                }
                (Some(t), None) => {
                    if !(t > 0.0 && t.is_finite()) {
                        return Err(field_error(format!("qubits[{i}].T"), format!("must be positive and finite, got {t}")));
                    }
                    1.0 / t
                }
                (None, Some(b)) => b,
            };
            QubitSpec::new(q.energy, beta, q.p).map_err(|e| field_error(format!("qubits[{i}]"), e))?;
            qubits.push(qp(q.energy, beta, q.p));
        }
        let base = Point { g: raw.model.g, qubits };

        let interaction = match (kind, raw.model.interaction) {
            (ModelKind::Custom, Some(rows)) => Some(parse_matrix(&rows)?),
            (ModelKind::Custom, None) => return Err(field_error("model.interaction", "required for kind = \"custom\"")),
            _ => None,
        };

        if kind == ModelKind::Custom && raw.solver.method == MethodName::ClosedForm {
            return Err(field_error("solver.method", "closed_form needs kind two_qubit or refrigerator"));
        }

        let n = base.qubits.len();
        let sweep = match raw.sweep {
            Some(s) => Some(parse_sweep(s, n, kind)?),
            None => None,
        };

        let scenario = Self {
            kind,
            base,
            interaction,
            method: raw.solver.method,
            order: raw.solver.order,
            table: raw.solver.table,
            sweep,
            output_dir: raw.output.dir,
            format: raw.output.format,
            density_matrices: raw.output.density_matrices,
            tol: raw.tolerances,
            thermo: raw.thermo,
            seed: raw.seed.unwrap_or(DEFAULT_SEED),
        };
        scenario.model(&scenario.base).map_err(|e| field_error("model", e))?;
        Ok(scenario)
    }

    pub fn model(&self, point: &Point) -> lme::Result<SystemModel> {
        let specs = point
            .qubits
            .iter()
            .map(|q| QubitSpec::new(q.energy, q.beta, q.rate))
            .collect::<lme::Result<Vec<_>>>()?;
        match self.kind {
            ModelKind::TwoQubit => build_two_qubit(specs[0], specs[1], point.g),
            ModelKind::Refrigerator => build_refrigerator(specs[0], specs[1], specs[2], point.g),
            ModelKind::Custom => {
                SystemModel::custom(specs, self.interaction.clone().expect("validated"), point.g)
            }
        }
    }

    /// All sweep points in output order: axes as a cartesian product with
    /// the first axis slowest, then random samples innermost. Every point
    /// is checked to build a valid model.
    pub fn points(&self) -> Result<Vec<Point>, ConfigError> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![self.base.clone()]);
        };
        let mut grid: Vec<Vec<(Param, f64)>> = vec![Vec::new()];
        for axis in &sweep.axes {
            grid = grid
                .into_iter()
                .flat_map(|prefix| {
                    axis.values.iter().map(move |&v| {
                        let mut next = prefix.clone();
                        next.push((axis.param, v));
                        next
                    })
                })
                .collect();
        }
        let samples: Vec<Vec<(Param, f64)>> = match &sweep.random {
            Some(r) => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..r.count)
                    .map(|_| r.ranges.iter().map(|&(p, (lo, hi))| (p, if lo == hi { lo } else { rng.gen_range(lo..hi) })).collect())
                    .collect()
            }
            None => vec![Vec::new()],
        };
        let mut points = Vec::with_capacity(grid.len() * samples.len());
        for fixed in &grid {
            for sampled in &samples {
                let assignments: Vec<(Param, f64)> = fixed.iter().chain(sampled).copied().collect();
                let point = self.base.with(self.kind, &assignments);
                if let Err(e) = self.model(&point) {
                    return Err(ConfigError(format!("sweep point {} ({}): {e}", points.len(), point.describe())));
                }
                points.push(point);
            }
        }
        Ok(points)
    }
}

fn parse_matrix(rows: &[Vec<[f64; 2]>]) -> Result<ComplexMatrix, ConfigError> {
    let data: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(|&[re, im]| C64::new(re, im)).collect()).collect();
    ComplexMatrix::from_rows(&data).map_err(|e| field_error("model.interaction", e))
}

fn parse_sweep(raw: RawSweep, n_qubits: usize, kind: ModelKind) -> Result<Sweep, ConfigError> {
    if raw.axes.is_empty() && raw.random.is_none() {
        return Err(field_error("sweep", "needs at least one [[sweep.axes]] entry or a [sweep.random] table"));
    }
    let mut axes = Vec::new();
    for (i, a) in raw.axes.into_iter().enumerate() {
        let at = format!("sweep.axes[{i}]");
        let param = Param::parse(&a.parameter, n_qubits).map_err(|e| field_error(format!("{at}.parameter"), e))?;
        if param == Param::Detuning && kind == ModelKind::Custom {
            return Err(field_error(format!("{at}.parameter"), "detuning is undefined for custom models"));
        }
        let values = match (a.values, a.start, a.stop, a.steps) {
            (Some(v), None, None, None) => v,
            (None, Some(start), Some(stop), Some(steps)) => {
                if steps == 0 {
                    return Err(field_error(format!("{at}.steps"), "must be at least 1"));
                }
                if steps == 1 {
                    vec![start]
                } else {
                    (0..steps).map(|k| start + (stop - start) * k as f64 / (steps - 1) as f64).collect()
                }
            }
            _ => return Err(field_error(&at, "give either `values` or all of `start`, `stop`, `steps`")),
        };
        if values.is_empty() {
            return Err(field_error(format!("{at}.values"), "must not be empty"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(field_error(format!("{at}.values"), format!("non-finite value {v}")));
        }
        axes.push(Axis { param, values });
    }
    let random = match raw.random {
        Some(r) => {
            if r.count == 0 {
                return Err(field_error("sweep.random.count", "must be at least 1"));
            }
            if r.ranges.is_empty() {
                return Err(field_error("sweep.random.ranges", "must name at least one parameter"));
            }
            let mut ranges = Vec::new();
            for (path, [lo, hi]) in r.ranges {
                let at = format!("sweep.random.ranges.\"{path}\"");
                let param = Param::parse(&path, n_qubits).map_err(|e| field_error(&at, e))?;
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(field_error(&at, format!("need finite lo <= hi, got [{lo}, {hi}]")));
                }
                ranges.push((param, (lo, hi)));
            }
            Some(RandomSamples { count: r.count, ranges })
        }
        None => None,
    };
    Ok(Sweep { axes, random })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[model]
kind = "two_qubit"
g = 0.05

[[qubits]]
E = 1.0
beta = 1.0
p = 0.1

[[qubits]]
E = 1.0
T = 2.0
p = 0.1
"#;

    #[test]
    fn temperature_is_stored_as_beta() {
        let s = Scenario::parse(BASE).unwrap();
        assert_eq!(s.base.qubits[1].beta, 0.5);
        assert_eq!(s.points().unwrap().len(), 1);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = Scenario::parse(&BASE.replace("p = 0.1\n\n[[qubits]]", "p = 0.1\nrate = 3\n\n[[qubits]]")).unwrap_err();
        assert!(err.0.contains("line 10"), "{err}");
        assert!(err.0.contains("unknown field `rate`"), "{err}");
    }

    #[test]
    fn both_temperature_forms_are_rejected() {
        let err = Scenario::parse(&BASE.replace("T = 2.0", "T = 2.0\nbeta = 0.5")).unwrap_err();
        assert!(err.0.starts_with("qubits[1]"), "{err}");
    }

    #[test]
    fn axes_expand_in_order_and_detuning_goes_last() {
        let text = format!(
            "{BASE}\n[[sweep.axes]]\nparameter = \"detuning\"\nvalues = [0.5, 0.0]\n\n[[sweep.axes]]\nparameter = \"qubits.0.E\"\nstart = 1.0\nstop = 2.0\nsteps = 3\n"
        );
        let points = Scenario::parse(&text).unwrap().points().unwrap();
        assert_eq!(points.len(), 6);
        assert_eq!(points[0].qubits[0].energy, 1.0);
        assert_eq!(points[0].qubits[1].energy, 0.5);
        assert_eq!(points[2].qubits[0].energy, 2.0);
        assert_eq!(points[2].qubits[1].energy, 1.5);
        assert_eq!(points[5].qubits[1].energy, 2.0);
    }

    #[test]
    fn random_samples_are_seeded() {
        let text = format!("{BASE}\n[sweep.random]\ncount = 4\nranges = {{ \"g\" = [0.01, 0.1] }}\n");
        let s = Scenario::parse(&text).unwrap();
        assert_eq!(s.points().unwrap(), s.points().unwrap());
        let mut other = s.clone();
        other.seed += 1;
        assert_ne!(s.points().unwrap(), other.points().unwrap());
    }

    #[test]
    fn invalid_sweep_point_names_the_point() {
        let text = format!("{BASE}\n[[sweep.axes]]\nparameter = \"detuning\"\nvalues = [0.5, 1.0]\n");
        let err = Scenario::parse(&text).unwrap().points().unwrap_err();
        assert!(err.0.starts_with("sweep point 1"), "{err}");
    }
}
