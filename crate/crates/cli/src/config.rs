use std::path::{Path, PathBuf};

use gauss_subord::applications::{ir_pair_expansion, Affine, HurstCurve, LocStatSpec, WindowFunction};
use gauss_subord::berry_esseen::{abs_centered, IndexRange};
use gauss_subord::gaussian_model::ModelSpec;
use gauss_subord::hermite::{hermite_rank, HermiteExpansion, MultiIndex, RANK_TOLERANCE};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "GSUB_OUTPUT_DIR";
const FALLBACK_OUTPUT_DIR: &str = "gsub-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Bound,
    Clt,
    Be,
    Ir,
    Locstat,
    Conditions,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Bound => "bound",
            Command::Clt => "clt",
            Command::Be => "be",
            Command::Ir => "ir",
            Command::Locstat => "locstat",
            Command::Conditions => "conditions",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteTerm {
    pub index: Vec<u32>,
    pub coefficient: f64,
}

/// Named functions of one window, or a serialized expansion on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// `coefficient * H_index`
    Hermite {
        index: Vec<u32>,
        #[serde(default = "one")]
        coefficient: f64,
    },
    /// `sum_i c_i H_{k_i}`
    HermiteSum { terms: Vec<HermiteTerm> },
    /// `|x| - E|X|`, truncated at `order`.
    AbsCentered {
        #[serde(default = "abs_order")]
        order: usize,
    },
    /// The centered increment-ratio function of a standardized pair.
    IrPair {
        hurst: f64,
        #[serde(default = "ir_order")]
        order: usize,
    },
    /// A JSON-serialized `HermiteExpansion`.
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}
fn abs_order() -> usize {
    40
}
fn ir_order() -> usize {
    8
}

impl FunctionSpec {
    pub fn build(&self) -> Result<HermiteExpansion, CliError> {
        Ok(match self {
            FunctionSpec::Hermite { index, coefficient } => {
                let k = MultiIndex::new(index.clone());
                let order = k.order();
                HermiteExpansion::monomial(k, *coefficient, order)?
            }
            FunctionSpec::HermiteSum { terms } => {
                let nu = terms.first().map(|t| t.index.len()).ok_or_else(|| CliError::config("empty hermite_sum"))?;
                let order = terms.iter().map(|t| t.index.iter().sum::<u32>() as usize).max().unwrap_or(0);
                let coeffs = terms.iter().map(|t| {
                    let k = MultiIndex::new(t.index.clone());
                    let j = t.coefficient * k.factorial();
                    (k, j)
                });
                HermiteExpansion::from_coefficients(nu, order, coeffs, 0.0)?
            }
            FunctionSpec::AbsCentered { order } => abs_centered(*order)?,
            FunctionSpec::IrPair { hurst, order } => ir_pair_expansion(*hurst, *order)?,
            FunctionSpec::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::config(format!("{}: not a Hermite expansion: {e}", path.display())))?
            }
        })
    }

    fn file(&self) -> Option<&Path> {
        match self {
            FunctionSpec::File { path } => Some(path),
            _ => None,
        }
    }
}

/// Pass/fail thresholds; all have defaults that are written into the
/// resolved config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Larger-half max over smaller-half max allowed for ratio series.
    #[serde(default = "trend_factor")]
    pub trend_factor: f64,
    /// Maximum KS distance for `ir` (fitted normal) and `locstat`.
    #[serde(default = "ks_max")]
    pub ks_max: f64,
    /// Minimum KS p-value for `clt`.
    #[serde(default = "ks_pvalue_min")]
    pub ks_pvalue_min: f64,
    /// Standard errors allowed between empirical and exact variance, mean or distance.
    #[serde(default = "z")]
    pub z: f64,
}

fn trend_factor() -> f64 {
    1.05
}
fn ks_max() -> f64 {
    0.05
}
fn ks_pvalue_min() -> f64 {
    0.01
}
fn z() -> f64 {
    3.0
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            trend_factor: trend_factor(),
            ks_max: ks_max(),
            ks_pvalue_min: ks_pvalue_min(),
            z: z(),
        }
    }
}

/// One run. Fields a command does not use stay unset; [`RunConfig::resolve`]
/// fills every field the command reads.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionSpec>,
    /// Slots of the moment inequality (`bound`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub functions: Option<Vec<FunctionSpec>>,
    /// Number of slots when `bound` is given a single `function`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Excluded from reports so that runs into different directories match.
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_cut: Option<usize>,
    /// Highest chaos level for `be`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index_range: Option<IndexRange>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hurst: Option<HurstCurve>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub locstat: Option<LocStatSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_function: Option<WindowFunction>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn need<T>(v: &Option<T>, name: &str, cmd: Command) -> Result<(), CliError> {
    if v.is_none() {
        return Err(CliError::config(format!("`{name}` is required for `{}`", cmd.name())));
    }
    Ok(())
}

fn positive(v: Option<usize>, name: &str) -> Result<(), CliError> {
    match v {
        Some(0) => Err(CliError::config(format!("`{name}` must be positive"))),
        _ => Ok(()),
    }
}

fn certified_rank(e: &HermiteExpansion) -> usize {
    let r = hermite_rank(e, RANK_TOLERANCE);
    r.rank.unwrap_or(r.at_least)
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// Fill command defaults and check the fields the command needs.
    pub fn resolve(mut self, cmd: Command) -> Result<Self, CliError> {
        use Command::*;
        if self.output_dir.is_none() {
            self.output_dir = Some(
                std::env::var_os(OUTPUT_DIR_ENV)
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR)),
            );
        }
        for f in self.function.iter().chain(self.functions.iter().flatten()) {
            if let Some(p) = f.file() {
                if !p.is_file() {
                    return Err(CliError::config(format!("function file {} does not exist", p.display())));
                }
            }
        }
        match cmd {
            Bound => {
                need(&self.model, "model", cmd)?;
                if self.functions.is_none() {
                    if let Some(f) = &self.function {
                        self.functions = Some(vec![f.clone(); *self.p.get_or_insert(2)]);
                    }
                }
                need(&self.functions, "functions", cmd)?;
                let fs = self.functions.as_ref().unwrap();
                let p = fs.len();
                self.alpha.get_or_insert(p);
                if self.m.is_none() {
                    let alpha = self.alpha.unwrap().min(p);
                    let ranks = fs[..alpha].iter().map(|f| f.build().map(|e| certified_rank(&e))).collect::<Result<Vec<_>, _>>()?;
                    self.m = Some(ranks.into_iter().min().unwrap_or(1).max(1));
                }
                self.n_list.get_or_insert_with(|| (4..=12).collect());
            }
            Clt | Be => {
                need(&self.model, "model", cmd)?;
                need(&self.function, "function", cmd)?;
                if self.m.is_none() {
                    self.m = Some(certified_rank(&self.function.as_ref().unwrap().build()?).max(1));
                }
                self.tau_points.get_or_insert(33);
                self.j_cut.get_or_insert(200);
                if cmd == Clt {
                    self.n.get_or_insert(1024);
                    self.reps.get_or_insert(1000);
                    need(&self.seed, "seed", cmd)?;
                } else {
                    self.n.get_or_insert(512);
                    self.n_max.get_or_insert(10);
                    self.index_range.get_or_insert(IndexRange::Array);
                    self.reps.get_or_insert(0);
                    if self.lipschitz.is_none() {
                        match self.function {
                            Some(FunctionSpec::AbsCentered { .. }) => self.lipschitz = Some(1.0),
                            _ => return Err(CliError::config("`lipschitz` is required unless the function is abs_centered")),
                        }
                    }
                    if self.reps != Some(0) {
                        need(&self.seed, "seed", cmd)?;
                    }
                }
            }
            Ir => {
                self.hurst.get_or_insert(HurstCurve::Constant { h: 0.5 });
                self.n.get_or_insert(3000);
                self.reps.get_or_insert(2000);
                self.j_cut.get_or_insert(200);
                self.function.get_or_insert(FunctionSpec::IrPair {
                    hurst: self.hurst.as_ref().unwrap().at(0.0),
                    order: ir_order(),
                });
                need(&self.seed, "seed", cmd)?;
            }
            Locstat => {
                self.locstat.get_or_insert_with(|| {
                    LocStatSpec::long_memory(Affine { c0: 1.0, c1: 0.5 }, Affine { c0: 0.1, c1: 0.1 }, 0.2, 4096, 2)
                });
                self.window_function.get_or_insert(WindowFunction::Product);
                self.m.get_or_insert(2);
                self.n.get_or_insert(2048);
                self.reps.get_or_insert(2000);
                self.tau_points.get_or_insert(33);
                need(&self.seed, "seed", cmd)?;
            }
            Conditions => {
                need(&self.model, "model", cmd)?;
                self.m.get_or_insert(2);
                self.n_list.get_or_insert(vec![16, 32, 64, 128]);
                self.k_list.get_or_insert(vec![4, 16]);
            }
        }
        positive(self.n, "n")?;
        positive(self.m, "m")?;
        if cmd != Be {
            positive(self.reps, "reps")?;
        }
        if let Some(l) = &self.n_list {
            if l.is_empty() || l.contains(&0) {
                return Err(CliError::config("`n_list` entries must be positive"));
            }
        }
        Ok(self)
    }

    /// SHA-256 over the resolved config and the bytes of referenced files.
    pub fn hash(&self) -> Result<String, CliError> {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(self).expect("config serializes"));
        for f in self.function.iter().chain(self.functions.iter().flatten()) {
            if let Some(p) = f.file() {
                h.update(std::fs::read(p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?);
            }
        }
        Ok(hex::encode(h.finalize()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_sum_stores_coefficient_times_factorial() {
        let f: FunctionSpec = serde_json::from_str(
            r#"{"kind":"hermite_sum","terms":[{"index":[2],"coefficient":1.0},{"index":[3],"coefficient":0.5}]}"#,
        )
        .unwrap();
        let e = f.build().unwrap();
        let js: Vec<f64> = e.coeffs().iter().map(|c| c.j).filter(|&j| j != 0.0).collect();
        assert_eq!(js, vec![2.0, 3.0]);
        assert!(serde_json::from_str::<FunctionSpec>(r#"{"kind":"hermite","index":[2],"extra":1}"#).is_err());
    }

    #[test]
    fn bound_defaults_replicate_function_and_certify_rank() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"model":{"kind":"geometric","r":0.5},"function":{"kind":"hermite","index":[2]}}"#)
                .unwrap();
        let r = cfg.resolve(Command::Bound).unwrap();
        assert_eq!(r.functions.as_ref().unwrap().len(), 2);
        assert_eq!((r.alpha, r.m), (Some(2), Some(2)));
        assert_eq!(r.n_list, Some((4..=12).collect()));
    }

    #[test]
    fn hash_ignores_output_dir() {
        let mut a: RunConfig = serde_json::from_str(r#"{"model":{"kind":"independent"},"seed":3}"#).unwrap();
        let mut b = a.clone();
        a.output_dir = Some("x".into());
        b.output_dir = Some("y".into());
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.seed = Some(4);
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
    }
}
