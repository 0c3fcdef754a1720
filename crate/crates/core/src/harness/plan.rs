use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::sim::{enumerate_policy_space, HierarchyConfig, PolicyConfig, TimingModel};
use crate::trace::SyntheticSpec;
use crate::{Error, Result};

/// How machine state flows between a benchmark's timesteps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    /// State carries over from one timestep to the next.
    #[default]
    Continuous,
    /// Every timestep starts from a cold machine.
    ColdChunk,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TraceSource {
    File(PathBuf),
    Synthetic(SyntheticSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkSource {
    pub id: String,
    pub source: TraceSource,
}

/// A validated experiment: benchmarks × timesteps × policies.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub benchmarks: Vec<BenchmarkSource>,
    pub chunk_len: usize,
    /// Keep at most this many timesteps per benchmark.
    pub max_timesteps: Option<usize>,
    pub policies: Vec<PolicyConfig>,
    pub timing: TimingModel,
    pub hierarchy: HierarchyConfig,
    pub mode: RunMode,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    chunk_len: usize,
    #[serde(default)]
    max_timesteps: Option<usize>,
    #[serde(default)]
    mode: RunMode,
    #[serde(default)]
    timing: TimingModel,
    #[serde(default)]
    hierarchy: HierarchyConfig,
    policies: PolicyFile,
    benchmarks: Vec<BenchmarkFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyFile {
    ids: Option<Vec<String>>,
    l1d: Option<Vec<String>>,
    l1i: Option<Vec<String>>,
    l2: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchmarkFile {
    id: String,
    trace: Option<PathBuf>,
    spec: Option<PathBuf>,
    synthetic: Option<SyntheticSpec>,
}

fn parse_all<T: std::str::FromStr<Err = Error>>(field: &str, items: &[String]) -> Result<Vec<T>> {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.parse()
                .map_err(|e: Error| e.context(format!("policies.{field}[{i}]")))
        })
        .collect()
}

impl PolicyFile {
    fn resolve(self) -> Result<Vec<PolicyConfig>> {
        match (self.ids, self.l1d, self.l1i, self.l2) {
            (Some(ids), None, None, None) => {
                let mut out: Vec<PolicyConfig> = parse_all("ids", &ids)?;
                out.sort_by_key(|p| p.id());
                for w in out.windows(2) {
                    if w[0] == w[1] {
                        return Err(Error::validation(format!(
                            "policies.ids lists '{}' twice",
                            w[0]
                        )));
                    }
                }
                if out.is_empty() {
                    return Err(Error::validation("policies.ids is empty"));
                }
                Ok(out)
            }
            (None, Some(l1d), Some(l1i), Some(l2)) => enumerate_policy_space(
                &parse_all("l1d", &l1d)?,
                &parse_all("l1i", &l1i)?,
                &parse_all("l2", &l2)?,
            ),
            _ => Err(Error::validation(
                "policies needs either 'ids' or all of 'l1d', 'l1i' and 'l2'",
            )),
        }
    }
}

impl ExperimentPlan {
    /// Parses a plan. Relative `trace` and `spec` paths resolve against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let file: PlanFile = toml::from_str(text)
            .map_err(|e| Error::validation(format!("plan: {}", e.message())))?;
        let mut benchmarks = Vec::with_capacity(file.benchmarks.len());
        for (i, b) in file.benchmarks.into_iter().enumerate() {
            let source = match (b.trace, b.spec, b.synthetic) {
                (Some(t), None, None) => TraceSource::File(base_dir.join(t)),
                (None, Some(s), None) => {
                    let path = base_dir.join(s);
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                    let spec = SyntheticSpec::from_toml(&text)
                        .map_err(|e| e.context(format!("benchmarks[{i}] ({})", b.id)))?;
                    TraceSource::Synthetic(spec)
                }
                (None, None, Some(spec)) => TraceSource::Synthetic(spec),
                _ => {
                    return Err(Error::validation(format!(
                        "benchmarks[{i}] ({}) needs exactly one of 'trace', 'spec' or 'synthetic'",
                        b.id
                    )))
                }
            };
            benchmarks.push(BenchmarkSource { id: b.id, source });
        }
        let plan = ExperimentPlan {
            benchmarks,
            chunk_len: file.chunk_len,
            max_timesteps: file.max_timesteps,
            policies: file.policies.resolve()?,
            timing: file.timing,
            hierarchy: file.hierarchy,
            mode: file.mode,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.chunk_len == 0 {
            return Err(Error::validation("chunk_len must be at least 1"));
        }
        if self.max_timesteps == Some(0) {
            return Err(Error::validation("max_timesteps must be at least 1"));
        }
        if self.benchmarks.is_empty() {
            return Err(Error::validation("plan has no benchmarks"));
        }
        if self.policies.is_empty() {
            return Err(Error::validation("plan has no policies"));
        }
        let mut ids: Vec<&str> = self.benchmarks.iter().map(|b| b.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::validation(format!(
                "benchmark id '{}' appears twice",
                w[0]
            )));
        }
        let mut pids: Vec<String> = self.policies.iter().map(|p| p.id()).collect();
        pids.sort_unstable();
        if let Some(w) = pids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::validation(format!(
                "policy id '{}' appears twice",
                w[0]
            )));
        }
        for b in &self.benchmarks {
            if let TraceSource::Synthetic(spec) = &b.source {
                spec.validate()
                    .map_err(|e| e.context(format!("benchmark '{}'", b.id)))?;
            }
        }
        self.timing.validate()?;
        self.hierarchy.validate()
    }
}
