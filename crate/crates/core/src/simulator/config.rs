//! Scenario configuration: a TOML document with `domain`, `populations`,
//! `numerics` and `output` tables, plus the built-in presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::kernels::{KernelFamily, DEFAULT_RESOLUTION_FLOOR};
use crate::models::DEFAULT_DISCOMFORT_AMPLITUDE;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Evacuation,
    Corridor,
    CustomLinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: String,
    pub scenario: ScenarioKind,
    pub domain: DomainConfig,
    #[serde(default)]
    pub populations: Vec<PopulationConfig>,
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub picard: PicardConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearConfig>,
}

/// Rectangles are `[x_min, x_max, y_min, y_max]`, segments `[ax, ay, bx, by]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum DomainConfig {
    Rectangle {
        outer: [f64; 4],
        #[serde(default)]
        obstacles: Vec<[f64; 4]>,
        #[serde(default)]
        exits: Vec<[f64; 4]>,
        interior_radius: f64,
    },
    Disc {
        center: [f64; 2],
        radius: f64,
        #[serde(default)]
        exits: Vec<[f64; 4]>,
        interior_radius: f64,
    },
}

impl DomainConfig {
    pub fn exits(&self) -> &[[f64; 4]] {
        match self {
            DomainConfig::Rectangle { exits, .. } | DomainConfig::Disc { exits, .. } => exits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationConfig {
    pub speed_law: SpeedLawConfig,
    pub kernels: KernelConfig,
    /// Avoidance weights `βᵢⱼ`, one per population.
    pub betas: Vec<f64>,
    /// Indices of the exits this population heads for; all exits if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<usize>>,
    #[serde(default)]
    pub discomfort: DiscomfortConfig,
    pub initial: InitialConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedLawConfig {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// Support of the speed-averaging kernel.
    pub l1: f64,
    /// Supports of the avoidance kernels, one per population.
    pub l2: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscomfortConfig {
    #[serde(default = "default_discomfort_amplitude")]
    pub amplitude: f64,
    /// Decay range; ten cells if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<f64>,
}

impl Default for DiscomfortConfig {
    fn default() -> Self {
        DiscomfortConfig {
            amplitude: DEFAULT_DISCOMFORT_AMPLITUDE,
            range: None,
        }
    }
}

fn default_discomfort_amplitude() -> f64 {
    DEFAULT_DISCOMFORT_AMPLITUDE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialConfig {
    Zero,
    Constant {
        value: f64,
    },
    /// People counts in the four quadrants of the bounding box, clockwise
    /// from the top left. Each quadrant is filled uniformly, obstacle cells
    /// are cleared and the result is rescaled to the total head count.
    Quadrants {
        counts: [f64; 4],
    },
    /// Linear in `y`, from `low` on the lowest row of cells to `high` on the
    /// highest (or the other way round when `reversed`).
    RampY {
        low: f64,
        high: f64,
        #[serde(default)]
        reversed: bool,
    },
    /// `amplitude · (1 − |x − center|² / radius²)³` inside the ball.
    Bump {
        center: [f64; 2],
        radius: f64,
        amplitude: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamilyConfig {
    Room,
    Corridor,
}

impl From<KernelFamilyConfig> for KernelFamily {
    fn from(k: KernelFamilyConfig) -> Self {
        match k {
            KernelFamilyConfig::Room => KernelFamily::QuarticRoom,
            KernelFamilyConfig::Corridor => KernelFamily::QuarticCorridor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    pub h: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_family")]
    pub kernel_family: KernelFamilyConfig,
    /// Smallest accepted kernel support in cells.
    #[serde(default = "default_floor")]
    pub kernel_floor: f64,
}

fn default_cfl() -> f64 {
    0.5
}
fn default_theta() -> f64 {
    1.0
}
fn default_family() -> KernelFamilyConfig {
    KernelFamilyConfig::Room
}
fn default_floor() -> f64 {
    DEFAULT_RESOLUTION_FLOOR
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Snapshot every `cadence` steps; 0 writes only the requested times.
    #[serde(default)]
    pub cadence: usize,
    /// Times at which snapshots are taken; steps are shortened to land on them.
    #[serde(default)]
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardConfig {
    /// Length of the window, in time.
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            window: default_window(),
            max_iter: default_max_iter(),
            tol: default_tol(),
        }
    }
}

fn default_window() -> f64 {
    0.25
}
fn default_max_iter() -> usize {
    40
}
fn default_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearConfig {
    pub velocity: LinearVelocityConfig,
    pub initial: InitialConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LinearVelocityConfig {
    Rotation { center: [f64; 2], omega: f64 },
    Contraction { center: [f64; 2], rate: f64 },
    Uniform { velocity: [f64; 2] },
}

/// Names accepted by [`RunConfig::preset`].
pub const PRESETS: [&str; 3] = ["room-eq25", "corridor-eq20", "custom-linear"];

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// A preset by name (`evacuation` and `corridor` are accepted as
    /// aliases), or otherwise a TOML file at that path.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match Self::preset(name_or_path) {
            Some(config) => Ok(config),
            None if Path::new(name_or_path).is_file() => Self::load(Path::new(name_or_path)),
            None => Err(Error::Config(format!(
                "unknown scenario `{name_or_path}`: expected one of {} or a config file",
                PRESETS.join(", ")
            ))),
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "room-eq25" | "evacuation" => Some(room_eq25()),
            "corridor-eq20" | "corridor" => Some(corridor_eq20()),
            "custom-linear" | "linear" => Some(custom_linear()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = &self.numerics;
        let bad = |msg: String| Err(Error::Config(msg));
        if !(n.h > 0.0 && n.h.is_finite()) {
            return bad(format!("numerics.h must be positive, got {}", n.h));
        }
        if !(n.t_final > 0.0 && n.t_final.is_finite()) {
            return bad(format!("numerics.T must be positive, got {}", n.t_final));
        }
        if !(n.cfl > 0.0 && n.cfl < 1.0) {
            return bad(format!("numerics.cfl must lie in (0, 1), got {}", n.cfl));
        }
        if !(n.theta > 0.0 && n.theta <= 1.0) {
            return bad(format!("numerics.theta must lie in (0, 1], got {}", n.theta));
        }
        if !(n.kernel_floor > 0.0) {
            return bad(format!("numerics.kernel_floor must be positive, got {}", n.kernel_floor));
        }
        if self.picard.window <= 0.0 || self.picard.tol < 0.0 {
            return bad("picard.window must be positive and picard.tol non-negative".into());
        }
        if self.output.times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return bad("output.times must be non-negative".into());
        }
        let expected = match self.scenario {
            ScenarioKind::Evacuation => Some(1),
            ScenarioKind::Corridor => Some(2),
            ScenarioKind::CustomLinear => None,
        };
        match expected {
            Some(count) if self.populations.len() != count => {
                return bad(format!(
                    "scenario {:?} needs {count} population(s), got {}",
                    self.scenario,
                    self.populations.len()
                ))
            }
            None if self.linear.is_none() => {
                return bad("scenario custom-linear needs a [linear] table".into())
            }
            _ => {}
        }
        let count = self.populations.len();
        let exits = self.domain.exits().len();
        for (i, p) in self.populations.iter().enumerate() {
            if p.betas.len() != count || p.kernels.l2.len() != count {
                return bad(format!(
                    "population {i}: betas and kernels.l2 need one entry per population ({count})"
                ));
            }
            if let Some(t) = &p.targets {
                if t.is_empty() || t.iter().any(|&e| e >= exits) {
                    return bad(format!("population {i}: targets must index the {exits} exits"));
                }
            }
        }
        Ok(())
    }

    /// Discomfort range of population `i`: the configured value or ten cells.
    pub fn discomfort_range(&self, i: usize) -> f64 {
        self.populations[i]
            .discomfort
            .range
            .unwrap_or(crate::models::DEFAULT_DISCOMFORT_RANGE_CELLS * self.numerics.h)
    }
}

/// Square room with a door and two columns; one population.
pub fn room_eq25() -> RunConfig {
    RunConfig {
        name: "room-eq25".into(),
        scenario: ScenarioKind::Evacuation,
        domain: DomainConfig::Rectangle {
            outer: [0.0, 8.0, -4.0, 4.0],
            obstacles: vec![[6.0, 6.5, 0.75, 1.375], [6.0, 6.5, -1.375, -0.75]],
            exits: vec![[8.0, -1.0, 8.0, 1.0]],
            interior_radius: 0.15,
        },
        populations: vec![PopulationConfig {
            speed_law: SpeedLawConfig { a: 2.0, b: 4.0 },
            kernels: KernelConfig {
                l1: 0.625,
                l2: vec![1.5],
            },
            betas: vec![0.6],
            targets: None,
            discomfort: DiscomfortConfig::default(),
            initial: InitialConfig::Quadrants {
                counts: [5.0, 14.0, 9.0, 20.0],
            },
        }],
        numerics: NumericsConfig {
            h: 0.03125,
            t_final: 7.5,
            cfl: 0.5,
            theta: 1.0,
            kernel_family: KernelFamilyConfig::Room,
            kernel_floor: DEFAULT_RESOLUTION_FLOOR,
        },
        output: OutputConfig {
            dir: None,
            cadence: 0,
            times: vec![1.5, 3.0, 4.5, 6.0, 7.5],
        },
        picard: PicardConfig::default(),
        linear: None,
    }
}

/// Corridor with exits at both ends and two populations walking in
/// opposite directions.
pub fn corridor_eq20() -> RunConfig {
    let population = |a: f64, betas: Vec<f64>, target: usize| PopulationConfig {
        speed_law: SpeedLawConfig { a, b: 4.5 },
        kernels: KernelConfig {
            l1: 0.1875,
            l2: vec![0.5, 0.5],
        },
        betas,
        targets: Some(vec![target]),
        discomfort: DiscomfortConfig::default(),
        initial: InitialConfig::RampY {
            low: 0.0,
            high: 4.0,
            reversed: false,
        },
    };
    RunConfig {
        name: "corridor-eq20".into(),
        scenario: ScenarioKind::Corridor,
        domain: DomainConfig::Rectangle {
            outer: [0.0, 16.0, -2.0, 2.0],
            obstacles: vec![],
            exits: vec![[0.0, -2.0, 0.0, 2.0], [16.0, -2.0, 16.0, 2.0]],
            interior_radius: 0.04,
        },
        populations: vec![
            population(1.0, vec![0.2, 0.5], 1),
            population(1.5, vec![0.5, 0.2], 0),
        ],
        numerics: NumericsConfig {
            h: 0.015625,
            t_final: 8.0,
            cfl: 0.5,
            theta: 1.0,
            kernel_family: KernelFamilyConfig::Corridor,
            kernel_floor: DEFAULT_RESOLUTION_FLOOR,
        },
        output: OutputConfig {
            dir: None,
            cadence: 0,
            times: vec![1.6, 3.2, 4.8, 6.4, 8.0],
        },
        picard: PicardConfig::default(),
        linear: None,
    }
}

/// Rigid rotation of a smooth bump in the unit disc, for oracle comparisons.
pub fn custom_linear() -> RunConfig {
    RunConfig {
        name: "custom-linear".into(),
        scenario: ScenarioKind::CustomLinear,
        domain: DomainConfig::Disc {
            center: [0.0, 0.0],
            radius: 1.0,
            exits: vec![],
            interior_radius: 1.0,
        },
        populations: vec![],
        numerics: NumericsConfig {
            h: 1.0 / 64.0,
            t_final: 0.5,
            cfl: 0.5,
            theta: 0.5,
            kernel_family: KernelFamilyConfig::Room,
            kernel_floor: DEFAULT_RESOLUTION_FLOOR,
        },
        output: OutputConfig::default(),
        picard: PicardConfig::default(),
        linear: Some(LinearConfig {
            velocity: LinearVelocityConfig::Rotation {
                center: [0.0, 0.0],
                omega: 1.0,
            },
            initial: InitialConfig::Bump {
                center: [0.4, 0.0],
                radius: 0.3,
                amplitude: 1.0,
            },
        }),
    }
}
