use std::path::Path;
use std::str::FromStr;

use clap::{Args, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A list of numbers, written as `a,b,c`, as inclusive ranges `lo:hi:step`,
/// or a mix of both. TOML also accepts a bare number or an array.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Grid(pub Vec<f64>);

fn snap(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"));
        let mut out = Vec::new();
        for item in s.split(',').filter(|t| !t.trim().is_empty()) {
            let parts: Vec<&str> = item.split(':').collect();
            match parts.as_slice() {
                [x] => out.push(num(x)?),
                [lo, hi, step] => {
                    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
                    if !(step > 0.0) || hi < lo {
                        return Err(format!("range `{item}` needs lo <= hi and step > 0"));
                    }
                    let count = (hi - lo) / step;
                    if (count - count.round()).abs() > 1e-6 {
                        return Err(format!("range `{item}` does not end on a step"));
                    }
                    out.extend((0..=count.round() as u64).map(|i| snap(lo + i as f64 * step)));
                }
                _ => return Err(format!("cannot read `{item}` as a number or lo:hi:step")),
            }
        }
        if out.is_empty() {
            return Err("empty grid".into());
        }
        Ok(Grid(out))
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(f64),
            Many(Vec<f64>),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::One(x) => Ok(Grid(vec![x])),
            Raw::Many(v) if !v.is_empty() => Ok(Grid(v)),
            Raw::Many(_) => Err(serde::de::Error::custom("empty grid")),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl Grid {
    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// The grid as nonnegative integers.
    pub fn integers(&self, what: &str) -> Result<Vec<u32>, CliError> {
        self.0
            .iter()
            .map(|&x| {
                if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
                    Ok(x as u32)
                } else {
                    Err(CliError::Config(format!("`{what}` must hold nonnegative integers, got {x}")))
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Zd,
    Heisenberg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RussoHost {
    /// 3×3 grid, 12 edges.
    Grid3,
    /// Heisenberg ball of radius 1, 4 edges.
    Star,
    /// ℤ² ball of radius 2, 16 edges.
    Ball2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    CappedDistance,
    Disconnected,
    Clusters,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyName>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Region radius. Defaults to the smallest radius the margins allow.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub radius: Option<u32>,
    #[arg(long)]
    pub p: Option<Grid>,
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<Grid>,
    /// `d_G(x, y)`.
    #[arg(long)]
    pub dist: Option<u32>,
    #[arg(long)]
    pub t: Option<Grid>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeconstArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyName>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub radius: Option<u32>,
    #[arg(long)]
    pub p: Option<Grid>,
    /// Generator index; 0 is `e₁` on ℤ^d and `X` on Heisenberg.
    #[arg(long)]
    pub generator: Option<usize>,
    /// Powers `n` of the generator.
    #[arg(long)]
    pub dist: Option<Grid>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LipschitzArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyName>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub radius: Option<u32>,
    #[arg(long)]
    pub p: Option<Grid>,
    #[arg(long)]
    pub dist: Option<u32>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoarseCheckArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyName>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub radius: Option<u32>,
    #[arg(long)]
    pub scales: Option<Grid>,
    /// Random pairs used for the contraction estimate.
    #[arg(long)]
    pub pairs: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurgeryArgs {
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub radius: Option<u32>,
    /// Length of the straight path `β`.
    #[arg(long)]
    pub dist: Option<u32>,
    /// Radius of the forbidden blob placed on `β`.
    #[arg(long)]
    pub hole: Option<u32>,
    #[arg(long)]
    pub delta: Option<u32>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RussoArgs {
    #[arg(long, value_enum)]
    pub host: Option<RussoHost>,
    #[arg(long, value_enum)]
    pub observable: Option<Observable>,
    #[arg(long)]
    pub p: Option<Grid>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoodapproxArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyName>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub radius: Option<u32>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub dist: Option<Grid>,
    /// Largest ring-point distance tabulated.
    #[arg(long)]
    pub ring_max: Option<u32>,
    /// Exponent `C` of the penalty `(ln d)^C`.
    #[arg(long = "C")]
    #[serde(rename = "C")]
    pub c_exp: Option<f64>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnimalArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyName>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub radius: Option<u32>,
    /// Path length bound of the animal search.
    #[arg(long)]
    pub length: Option<u32>,
    /// Indicator density: `I_e = 1{U_e < q}`.
    #[arg(long)]
    pub q: Option<f64>,
    /// Separation parameter of the edge coloring.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub sep: Option<u32>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyName>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub radius: Option<u32>,
    /// Also write the open edges of the sample at this density.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Clone, Debug, PartialEq)]
pub enum Experiment {
    /// Tail of the chemical distance between two points.
    Tail(TailArgs),
    /// Time constant along a generator.
    Timeconst(TimeconstArgs),
    /// Coupled sweep of the chemical distance over a p grid.
    Lipschitz(LipschitzArgs),
    /// Deterministic checks of the coarse graph.
    CoarseCheck(CoarseCheckArgs),
    /// Trace of one obstacle reroute on ℤ².
    SurgeryDemo(SurgeryArgs),
    /// Exact derivative identity on a tiny host.
    Russo(RussoArgs),
    /// Distance between the ring-point and penalized chemical distances.
    Goodapprox(GoodapproxArgs),
    /// Greedy lattice animals and the separated edge coloring.
    Animal(AnimalArgs),
    /// Plain-text export of a region.
    ExportGraph(ExportArgs),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Tail(_) => "tail",
            Experiment::Timeconst(_) => "timeconst",
            Experiment::Lipschitz(_) => "lipschitz",
            Experiment::CoarseCheck(_) => "coarse-check",
            Experiment::SurgeryDemo(_) => "surgery-demo",
            Experiment::Russo(_) => "russo",
            Experiment::Goodapprox(_) => "goodapprox",
            Experiment::Animal(_) => "animal",
            Experiment::ExportGraph(_) => "export-graph",
        }
    }
}

/// A config file: one optional section per experiment.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub tail: Option<TailArgs>,
    pub timeconst: Option<TimeconstArgs>,
    pub lipschitz: Option<LipschitzArgs>,
    pub coarse_check: Option<CoarseCheckArgs>,
    pub surgery_demo: Option<SurgeryArgs>,
    pub russo: Option<RussoArgs>,
    pub goodapprox: Option<GoodapproxArgs>,
    pub animal: Option<AnimalArgs>,
    pub export_graph: Option<ExportArgs>,
}

impl FromStr for ConfigFile {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { context: format!("reading {}", path.display()), source: e })?;
        text.parse().map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Fills every field left unset on the command line from the matching section.
    pub fn apply(&self, experiment: Experiment) -> Result<Experiment, CliError> {
        Ok(match experiment {
            Experiment::Tail(a) => Experiment::Tail(overlay(self.tail.as_ref(), a)?),
            Experiment::Timeconst(a) => Experiment::Timeconst(overlay(self.timeconst.as_ref(), a)?),
            Experiment::Lipschitz(a) => Experiment::Lipschitz(overlay(self.lipschitz.as_ref(), a)?),
            Experiment::CoarseCheck(a) => Experiment::CoarseCheck(overlay(self.coarse_check.as_ref(), a)?),
            Experiment::SurgeryDemo(a) => Experiment::SurgeryDemo(overlay(self.surgery_demo.as_ref(), a)?),
            Experiment::Russo(a) => Experiment::Russo(overlay(self.russo.as_ref(), a)?),
            Experiment::Goodapprox(a) => Experiment::Goodapprox(overlay(self.goodapprox.as_ref(), a)?),
            Experiment::Animal(a) => Experiment::Animal(overlay(self.animal.as_ref(), a)?),
            Experiment::ExportGraph(a) => Experiment::ExportGraph(overlay(self.export_graph.as_ref(), a)?),
        })
    }
}

fn overlay<T: Serialize + DeserializeOwned>(base: Option<&T>, flags: T) -> Result<T, CliError> {
    let Some(base) = base else { return Ok(flags) };
    let to_value = |x: &T| serde_json::to_value(x).map_err(|e| CliError::Config(e.to_string()));
    let mut merged = to_value(base)?;
    if let (Some(m), serde_json::Value::Object(f)) = (merged.as_object_mut(), to_value(&flags)?) {
        for (k, v) in f {
            if !v.is_null() {
                m.insert(k, v);
            }
        }
    }
    serde_json::from_value(merged).map_err(|e| CliError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!("0.6:1:0.05".parse::<Grid>().unwrap().0.last(), Some(&1.0));
        assert_eq!("0.6:1:0.05".parse::<Grid>().unwrap().0.len(), 9);
        assert_eq!("1,2,5:9:2".parse::<Grid>().unwrap().0, vec![1.0, 2.0, 5.0, 7.0, 9.0]);
        assert!("1:2:0.3".parse::<Grid>().is_err());
        assert!("x".parse::<Grid>().is_err());
        assert!(Grid(vec![1.5]).integers("t").is_err());
    }

    #[test]
    fn config_errors_name_the_line_and_field() {
        let err = "[tail]\np = 0.7\ndist = \"far\"\n".parse::<ConfigFile>().unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("dist"), "{err}");
        let err = "[tail]\nbogus = 1\n".parse::<ConfigFile>().unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
        let err = "[nope]\n".parse::<ConfigFile>().unwrap_err().to_string();
        assert!(err.contains("nope"), "{err}");
    }

    #[test]
    fn flags_win_over_the_file() {
        let cfg: ConfigFile = "[tail]\np = [0.65, 0.8]\nK = \"2,3\"\ndist = 30\n".parse().unwrap();
        let flags = TailArgs { dist: Some(40), ..TailArgs::default() };
        let Experiment::Tail(a) = cfg.apply(Experiment::Tail(flags)).unwrap() else { unreachable!() };
        assert_eq!(a.dist, Some(40));
        assert_eq!(a.p, Some(Grid(vec![0.65, 0.8])));
        assert_eq!(a.k, Some(Grid(vec![2.0, 3.0])));
    }
}
