//! Config-driven runs behind the `opstable` binary.
//!
//! A run reads one JSON [`RunConfig`], checks every module invariant it
//! touches, dispatches on `command`, and writes its artifacts together with
//! `run_manifest.json` into the output directory.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::ctrw::{path_manifest, simulate_paths, write_paths_csv, ModelParams};
use crate::error::{Error, Result};
use crate::jump_intensity::{char_fn, JumpIntensitySpec};
use crate::marginal_kernel::{kernel, kernel_wick};
use crate::option_engine::{solve_option, Correction, GridConfig, OptionSpec};
use crate::path_law::{
    joint_char_batch, joint_density, write_batch_csv, FrequencyGrid, PathLattice, StepLaw,
    JOINT_SCHEMA_VERSION,
};
use crate::validation::{run_criterion, CriterionResult, CRITERIA};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "run_manifest.json";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Charfn,
    Kernel,
    Simulate,
    Joint,
    Price,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory receiving the artifacts and the manifest.
    pub path: PathBuf,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelGrid {
    pub n: u32,
    pub frak_k: f64,
    pub l_min: f64,
    pub l_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateGrid {
    pub horizon: f64,
    pub n_paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityGrid {
    pub m: usize,
    pub dx: f64,
    #[serde(default)]
    pub smoothing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointGrid {
    #[serde(default)]
    pub t0: f64,
    pub times: Vec<f64>,
    pub n_steps: usize,
    /// `(k_1..k_l, w)` evaluation points.
    #[serde(default)]
    pub points: Vec<(Vec<f64>, f64)>,
    /// Inverts the single-time joint law of price and maximum.
    #[serde(default)]
    pub density: Option<DensityGrid>,
}

/// Per-command lattices. Only the section for the chosen command is read.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// Frequency vectors for `charfn`.
    #[serde(default)]
    pub frequencies: Vec<Vec<f64>>,
    #[serde(default)]
    pub kernel: Option<KernelGrid>,
    #[serde(default)]
    pub simulate: Option<SimulateGrid>,
    #[serde(default)]
    pub joint: Option<JointGrid>,
    #[serde(default)]
    pub price: Option<GridConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub command: Command,
    #[serde(default)]
    pub model: Option<ModelParams>,
    /// Jump law for `charfn`; defaults to `model.jumps`.
    #[serde(default)]
    pub jumps: Option<JumpIntensitySpec>,
    #[serde(default)]
    pub option: Option<OptionSpec>,
    #[serde(default)]
    pub correction: Option<Correction>,
    #[serde(default)]
    pub grids: Grids,
    /// Criteria for `validate`; all of them when absent.
    #[serde(default)]
    pub criteria: Option<Vec<u32>>,
    #[serde(default)]
    pub seed: u64,
    pub output: OutputSpec,
}

fn schema_version() -> u32 {
    CONFIG_SCHEMA_VERSION
}

fn io(e: serde_json::Error) -> Error {
    Error::Io(e.to_string())
}

fn missing(field: &'static str, command: &str) -> Error {
    Error::invalid(field, format!("required by `{command}`"))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::invalid(
                "schema_version",
                format!("expected {CONFIG_SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if let Some(m) = &self.model {
            m.validate()?;
        }
        if let Some(j) = &self.jumps {
            j.validate()?;
        }
        if let Some(o) = &self.option {
            o.validate()?;
        }
        if let Some(Correction::Enabled { tail, mu, .. }) = &self.correction {
            tail.validate_against(*mu)?;
        }
        match self.command {
            Command::Charfn => {
                self.charfn_spec()?;
                if self.grids.frequencies.is_empty() {
                    return Err(missing("grids.frequencies", "charfn"));
                }
            }
            Command::Kernel => {
                let g = self.grids.kernel.as_ref().ok_or(missing("grids.kernel", "kernel"))?;
                if g.points < 2 || !(g.l_max > g.l_min) {
                    return Err(Error::invalid("grids.kernel", "need l_max > l_min and points >= 2"));
                }
            }
            Command::Simulate => {
                self.model.as_ref().ok_or(missing("model", "simulate"))?;
                let g = self.grids.simulate.as_ref().ok_or(missing("grids.simulate", "simulate"))?;
                if g.n_paths == 0 {
                    return Err(Error::invalid("grids.simulate.n_paths", "must be positive"));
                }
            }
            Command::Joint => {
                self.joint_lattice()?;
            }
            Command::Price => {
                self.option.as_ref().ok_or(missing("option", "price"))?;
                self.grids.price.clone().unwrap_or_default().validate()?;
            }
            Command::Validate => {
                if let Some(ids) = &self.criteria {
                    if let Some(bad) = ids.iter().find(|i| !CRITERIA.contains(i)) {
                        return Err(Error::invalid("criteria", format!("no criterion {bad}")));
                    }
                }
            }
        }
        Ok(())
    }

    fn charfn_spec(&self) -> Result<JumpIntensitySpec> {
        self.jumps
            .or(self.model.as_ref().map(|m| m.jumps))
            .ok_or(missing("jumps", "charfn"))
    }

    fn joint_lattice(&self) -> Result<PathLattice> {
        let model = self.model.as_ref().ok_or(missing("model", "joint"))?;
        let g = self.grids.joint.as_ref().ok_or(missing("grids.joint", "joint"))?;
        let step = StepLaw {
            spec: model.jumps,
            sigma: model.sigma.clone(),
            beta: model.beta,
        };
        let lat = PathLattice::new(g.t0, g.times.clone(), g.n_steps, step)?;
        if let Some(bad) = g.points.iter().find(|p| p.0.len() != g.times.len()) {
            return Err(Error::invalid(
                "grids.joint.points",
                format!("{} frequencies for {} times", bad.0.len(), g.times.len()),
            ));
        }
        if g.density.is_some() && g.times.len() != 1 {
            return Err(Error::invalid("grids.joint.density", "needs a single observation time"));
        }
        Ok(lat)
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub package: &'static str,
    pub version: &'static str,
    pub command: Command,
    pub seed: u64,
    pub started_unix: u64,
    pub wall_seconds: f64,
    pub status: &'static str,
    pub artifacts: Vec<String>,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<&'static str>,
    pub message: String,
    pub exit_code: i32,
}

impl ErrorRecord {
    pub fn from_error(e: &Error) -> Self {
        let kind = match e {
            Error::Domain(_) => "domain",
            Error::Contract(_) => "contract",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::SingularArgument(_) => "singular_argument",
            Error::Unsupported(_) => "unsupported",
            Error::GridTooCoarse { .. } => "grid_too_coarse",
            Error::Boundary { .. } => "boundary",
            Error::BranchSelection { .. } => "branch_selection",
            Error::LimitEvaluation { .. } => "limit_evaluation",
            Error::Stability { .. } => "stability",
            Error::Quadrature(_) => "quadrature",
            Error::Distributional(_) => "distributional",
            Error::Io(_) => "io",
            Error::Config(_) => "config",
        };
        let field = match e {
            Error::InvalidParameter { field, .. } => Some(*field),
            _ => None,
        };
        ErrorRecord {
            kind,
            field,
            message: e.to_string(),
            exit_code: exit_code(e),
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_NUMERICAL
    }
}

struct Outputs {
    dir: PathBuf,
    format: Format,
    written: Vec<String>,
}

impl Outputs {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        log::info!("writing {}", path.display());
        self.written.push(name.to_string());
        Ok(BufWriter::new(File::create(path)?))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut f = self.create(name)?;
        serde_json::to_writer_pretty(&mut f, value).map_err(io)?;
        f.flush()?;
        Ok(())
    }

    fn table(&mut self, stem: &str, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(self.create(&format!("{stem}.csv"))?);
                w.write_record(header)?;
                for r in rows {
                    w.write_record(r.iter().map(|x| format!("{x:e}")))?;
                }
                w.flush()?;
            }
            Format::Json => {
                let records: Vec<serde_json::Map<String, serde_json::Value>> = rows
                    .iter()
                    .map(|r| header.iter().cloned().zip(r.iter().map(|x| (*x).into())).collect())
                    .collect();
                let doc = serde_json::json!({ "schema_version": 1, "rows": records });
                self.json(&format!("{stem}.json"), &doc)?;
            }
        }
        Ok(())
    }
}

/// Result of a run: the manifest that was written and the process exit code.
pub struct RunOutcome {
    pub manifest: Manifest,
    pub exit_code: i32,
    pub validation: Vec<CriterionResult>,
}

/// Executes a validated config. The manifest is written even when the
/// command fails.
pub fn run(config: RunConfig) -> Result<RunOutcome> {
    fs::create_dir_all(&config.output.path)?;
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let start = Instant::now();
    let mut out = Outputs {
        dir: config.output.path.clone(),
        format: config.output.format,
        written: Vec::new(),
    };
    let mut validation = Vec::new();
    log::info!("running {:?} with seed {}", config.command, config.seed);
    let result = dispatch(&config, &mut out, &mut validation);
    let (status, error, details, code) = match result {
        Ok(details) => {
            let failed: Vec<u32> = validation.iter().filter(|r| !r.passed).map(|r| r.id).collect();
            if failed.is_empty() {
                ("ok", None, details, EXIT_OK)
            } else {
                let rec = ErrorRecord {
                    kind: "acceptance",
                    field: None,
                    message: format!("criteria failed: {failed:?}"),
                    exit_code: EXIT_NUMERICAL,
                };
                ("failed", Some(rec), details, EXIT_NUMERICAL)
            }
        }
        Err(e) => {
            let rec = ErrorRecord::from_error(&e);
            let code = rec.exit_code;
            ("error", Some(rec), None, code)
        }
    };
    let manifest = Manifest {
        schema_version: CONFIG_SCHEMA_VERSION,
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: config.command,
        seed: config.seed,
        started_unix,
        wall_seconds: start.elapsed().as_secs_f64(),
        status,
        artifacts: out.written.clone(),
        config,
        error,
        details,
    };
    let path = manifest.config.output.path.join(MANIFEST_NAME);
    let f = File::create(path)?;
    serde_json::to_writer_pretty(f, &manifest).map_err(io)?;
    Ok(RunOutcome {
        manifest,
        exit_code: code,
        validation,
    })
}

fn dispatch(
    cfg: &RunConfig,
    out: &mut Outputs,
    validation: &mut Vec<CriterionResult>,
) -> Result<Option<serde_json::Value>> {
    match cfg.command {
        Command::Charfn => {
            let spec = cfg.charfn_spec()?;
            let d = spec.dim();
            let mut header: Vec<String> = (1..=d).map(|i| format!("k{i}")).collect();
            header.push("value".into());
            let mut rows = Vec::new();
            for k in &cfg.grids.frequencies {
                if k.len() != d {
                    return Err(Error::Contract(format!("frequency of length {} for dimension {d}", k.len())));
                }
                let mut r = k.clone();
                r.push(char_fn(&spec, k)?);
                rows.push(r);
            }
            out.table("charfn", &header, &rows)?;
            Ok(None)
        }
        Command::Kernel => {
            let g = cfg.grids.kernel.as_ref().ok_or(missing("grids.kernel", "kernel"))?;
            let header: Vec<String> = ["l", "re", "im", "wick"].map(String::from).to_vec();
            let mut rows = Vec::with_capacity(g.points);
            for i in 0..g.points {
                let l = g.l_min + (g.l_max - g.l_min) * i as f64 / (g.points - 1) as f64;
                let v: Complex64 = kernel(g.n, g.frak_k, l)?;
                rows.push(vec![l, v.re, v.im, kernel_wick(g.n, g.frak_k, l)?]);
            }
            out.table("kernel", &header, &rows)?;
            Ok(None)
        }
        Command::Simulate => {
            let model = cfg.model.as_ref().ok_or(missing("model", "simulate"))?;
            let g = cfg.grids.simulate.as_ref().ok_or(missing("grids.simulate", "simulate"))?;
            let paths = simulate_paths(model, g.horizon, cfg.seed, g.n_paths)?;
            match out.format {
                Format::Csv => {
                    let mut f = out.create("paths.csv")?;
                    write_paths_csv(&paths, &mut f)?;
                    f.flush()?;
                }
                Format::Json => out.json("paths.json", &paths)?,
            }
            let m = path_manifest(model, &paths, cfg.seed, g.horizon);
            Ok(Some(serde_json::to_value(m).map_err(io)?))
        }
        Command::Joint => {
            let lat = cfg.joint_lattice()?;
            let g = cfg.grids.joint.as_ref().ok_or(missing("grids.joint", "joint"))?;
            let mut details = serde_json::json!({ "schema_version": JOINT_SCHEMA_VERSION });
            if !g.points.is_empty() {
                let values = joint_char_batch(&lat, &g.points)?;
                match out.format {
                    Format::Csv => {
                        let mut f = out.create("joint.csv")?;
                        write_batch_csv(&g.points, &values, &mut f)?;
                        f.flush()?;
                    }
                    Format::Json => {
                        let rows: Vec<_> = g
                            .points
                            .iter()
                            .zip(&values)
                            .map(|((k, w), v)| serde_json::json!({ "k": k, "w": w, "re": v.re, "im": v.im }))
                            .collect();
                        out.json("joint.json", &serde_json::json!({ "schema_version": JOINT_SCHEMA_VERSION, "rows": rows }))?;
                    }
                }
            }
            if let Some(dg) = &g.density {
                let grid = FrequencyGrid::from_spacing(dg.m, dg.dx);
                let dens = joint_density(&lat, grid, dg.smoothing)?;
                let header: Vec<String> = ["x", "y", "density"].map(String::from).to_vec();
                let m = grid.m;
                let rows: Vec<Vec<f64>> = (0..m * m)
                    .map(|i| vec![grid.position(i / m), grid.position(i % m), dens.density[i]])
                    .collect();
                out.table("joint_density", &header, &rows)?;
                details["density"] = serde_json::json!({
                    "off_support_mass": dens.off_support_mass,
                    "min_before_clip": dens.min_before_clip,
                    "raw_mass": dens.raw_mass,
                });
            }
            Ok(Some(details))
        }
        Command::Price => {
            let spec = cfg.option.as_ref().ok_or(missing("option", "price"))?;
            let grid_cfg = cfg.grids.price.clone().unwrap_or_default();
            let correction = cfg.correction.clone().unwrap_or(Correction::Disabled);
            let sol = solve_option(spec, &correction, &grid_cfg)?;
            match out.format {
                Format::Csv => {
                    let mut f = out.create("surface.csv")?;
                    sol.grid.write_csv(&sol.residual, &mut f)?;
                    f.flush()?;
                }
                Format::Json => out.json(
                    "surface.json",
                    &serde_json::json!({
                        "schema_version": sol.report.schema_version,
                        "s": sol.grid.s_nodes,
                        "t": sol.grid.t_nodes,
                        "c": sol.grid.values,
                        "residual": sol.residual,
                    }),
                )?,
            }
            out.json("report.json", &sol.report)?;
            Ok(Some(serde_json::to_value(&sol.report).map_err(io)?))
        }
        Command::Validate => {
            let ids = cfg.criteria.clone().unwrap_or(CRITERIA.to_vec());
            for id in ids {
                let r = run_criterion(id, cfg.seed);
                println!("{}", r.line());
                validation.push(r);
            }
            out.json("validation.json", validation)?;
            Ok(None)
        }
    }
}
