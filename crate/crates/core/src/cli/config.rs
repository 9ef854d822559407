use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::constructor::RefineOptions;
use crate::lab::StudyConfig;
use crate::quadrature::{PairingPlan, QuadOptions};
use crate::reduced::SearchConfig;
use crate::{Error, Result};

/// Everything a CLI run depends on. Unknown keys are rejected at every level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    /// Radius of the ball centered at the origin.
    pub radius: f64,
    /// Spike signs; the number of spikes is its length.
    pub gamma: Vec<i8>,
    pub eps: f64,
    /// When set, replaces every seed below (critical-point search, Monte Carlo plans).
    pub seed: Option<u64>,
    pub search: SearchConfig,
    pub refine: RefineOptions,
    pub landscape: LandscapeConfig,
    pub build: BuildConfig,
    /// `None` runs every study with its defaults.
    pub studies: Option<Vec<StudyConfig>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 4,
            radius: 1.0,
            gamma: vec![1],
            eps: 1e-4,
            seed: None,
            search: SearchConfig::default(),
            refine: RefineOptions::default(),
            landscape: LandscapeConfig::default(),
            build: BuildConfig::default(),
            studies: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeConfig {
    pub samples: usize,
    /// Largest `|t|` as a fraction of the radius.
    pub t_max: f64,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        LandscapeConfig { samples: 201, t_max: 0.98 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    /// Index among the certified critical points.
    pub critical_index: usize,
    /// Concentration radii as fractions of the domain radius.
    pub radii: Vec<f64>,
    pub grid_per_side: usize,
    pub plan: PairingPlan,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            critical_index: 0,
            radii: vec![0.25, 0.5],
            grid_per_side: 41,
            plan: PairingPlan::deterministic(QuadOptions { rel_tol: 1e-9, ..Default::default() }),
        }
    }
}

impl RunConfig {
    /// Defaults, then the JSON file, then `key.path=value` overrides, then the seed.
    pub fn load(path: Option<&std::path::Path>, overrides: &[String], seed: Option<u64>) -> Result<RunConfig> {
        let mut v = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                let parsed: RunConfig = serde_json::from_str(&text)
                    .map_err(|e| Error::Configuration(format!("{}: {e}", p.display())))?;
                serde_json::to_value(parsed)?
            }
            None => serde_json::to_value(RunConfig::default())?,
        };
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        let mut cfg: RunConfig =
            serde_json::from_value(v).map_err(|e| Error::Configuration(format!("after overrides: {e}")))?;
        if seed.is_some() {
            cfg.seed = seed;
        }
        cfg.propagate_seed();
        cfg.validate()?;
        Ok(cfg)
    }

    fn propagate_seed(&mut self) {
        let Some(s) = self.seed else { return };
        self.search.seed = s;
        self.build.plan.mc.master_seed = s;
        if let Some(studies) = &mut self.studies {
            for st in studies {
                st.mc.master_seed = s;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        crate::Dimension::new(self.n)?;
        if !(self.radius > 0.0) {
            return Err(Error::Configuration("radius must be positive".into()));
        }
        crate::reduced::SpikePattern::new(self.gamma.clone())?;
        if self.landscape.samples < 2 || !(self.landscape.t_max > 0.0 && self.landscape.t_max < 1.0) {
            return Err(Error::Configuration("landscape needs samples >= 2 and t_max in (0, 1)".into()));
        }
        if self.build.radii.iter().any(|r| !(*r > 0.0)) || self.build.grid_per_side < 2 {
            return Err(Error::Configuration("build radii must be positive and grid_per_side >= 2".into()));
        }
        for s in self.studies.iter().flatten() {
            s.validate()?;
        }
        Ok(())
    }

    /// The studies to run, with the run seed applied.
    pub fn studies(&self) -> Vec<StudyConfig> {
        match &self.studies {
            Some(s) => s.clone(),
            None => crate::lab::StudyId::ALL
                .iter()
                .map(|id| {
                    let mut c = StudyConfig::new(*id);
                    if let Some(s) = self.seed {
                        c.mc.master_seed = s;
                    }
                    c
                })
                .collect(),
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Set `a.b.c` (array elements by index) to `value`, parsed as JSON when possible and kept as
/// a string otherwise.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Configuration(format!("override {spec:?} is not of the form key=value")))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(Error::Configuration(format!("override {spec:?} has an empty key")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    let mut cur = root;
    for (i, key) in keys.iter().enumerate() {
        let last = i + 1 == keys.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(key.to_string(), value);
                    return Ok(());
                }
                let entry = map.entry(key.to_string()).or_insert(Value::Null);
                if entry.is_null() {
                    *entry = Value::Object(Default::default());
                }
                entry
            }
            Value::Array(items) => {
                let idx: usize = key
                    .parse()
                    .map_err(|_| Error::Configuration(format!("override {path}: {key:?} is not an index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| Error::Configuration(format!("override {path}: index {idx} out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::Configuration(format!("override {path}: {key:?} is not inside an object or array"))),
        };
    }
    unreachable!("the loop returns at the last key")
}
