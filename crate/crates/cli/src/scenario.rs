//! Scenario files.
//!
//! INI-style: `[section]` headers, `key = value` lines, `#` or `;` comments.
//! Expressions may be quoted; `x0` is a comma-separated list.
//!
//! ```ini
//! [plant]
//! n = 2
//! f = "-0.5*(sin(x1)+x2)"
//! g = "3+cos(x2)"
//! d = "0.5*sin(2*t)"
//! k_l = 0.5
//! p_star = 1          # positive integer or inf, default 1
//! g_lo = 2
//! g_hi = 4
//! d_bar = 0.5
//!
//! [trajectory]
//! xd = "0.5*sin(t)"
//! xd_bar = 0.5        # optional; estimated over [0, t_end] when absent
//!
//! [performance]
//! psi0 = 1
//! psi_inf = 0.01
//! mu = 1
//! a = 2
//!
//! [input]
//! u_bar = 6
//!
//! [simulation]        # optional section
//! dt = 0.001
//! t_end = 20
//! x0 = 0.4, 0.29      # default all zeros
//! record_stride = 10
//! seed = 0
//! ```

use std::collections::BTreeMap;
use std::str::FromStr;

use ini::{Ini, ParseOption};
use ppcsat::expr::{parse, ExprNode, ParseError};
use ppcsat::perfspec::{derive_vpc, PerformanceSpec, VirtualSpec};
use ppcsat::plant::{NormIndex, PlantBounds, PlantModel, TrajBound, TrajectorySpec};
use ppcsat::sim::SimConfig;

/// Grid spacing used when `xd_bar` has to be estimated.
const ESTIMATE_SPACING: f64 = 1e-3;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("missing section [{0}]")]
    MissingSection(&'static str),
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("key `{0}` outside of any section")]
    Orphan(String),
    #[error("missing key `{key}` in [{section}]")]
    MissingKey {
        section: &'static str,
        key: &'static str,
    },
    #[error("unknown key `{key}` in [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("duplicate key `{key}` in [{section}]")]
    DuplicateKey { section: String, key: String },
    #[error("[{section}] {key}: {reason}")]
    BadValue {
        section: &'static str,
        key: &'static str,
        reason: String,
    },
    #[error("[{section}] {key}: {source}")]
    Expression {
        section: &'static str,
        key: &'static str,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Invalid(#[from] ppcsat::Error),
}

const SECTIONS: [(&str, &[&str]); 5] = [
    (
        "plant",
        &["n", "f", "g", "d", "k_l", "p_star", "g_lo", "g_hi", "d_bar"],
    ),
    ("trajectory", &["xd", "xd_bar"]),
    ("performance", &["psi0", "psi_inf", "mu", "a"]),
    ("input", &["u_bar"]),
    (
        "simulation",
        &["dt", "t_end", "x0", "record_stride", "seed"],
    ),
];

/// Scenario values before any invariant is checked. Command-line overrides
/// are applied here so they behave exactly like edits to the file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawScenario {
    pub n: usize,
    pub f: ExprNode,
    pub g: ExprNode,
    pub d: ExprNode,
    pub k_l: f64,
    pub p_star: NormIndex,
    pub g_lo: f64,
    pub g_hi: f64,
    pub d_bar: f64,
    pub xd: ExprNode,
    pub xd_bar: Option<f64>,
    pub psi0: f64,
    pub psi_inf: f64,
    pub mu: f64,
    pub a: f64,
    pub u_bar: f64,
    pub dt: f64,
    pub t_end: f64,
    pub x0: Option<Vec<f64>>,
    pub record_stride: usize,
    pub seed: u64,
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub plant: PlantModel<f64>,
    pub trajectory: TrajectorySpec<f64>,
    /// `true` when `xd_bar` came from the grid estimate.
    pub xd_bar_estimated: bool,
    pub performance: PerformanceSpec<f64>,
    pub vspec: VirtualSpec<f64>,
    pub u_bar: f64,
    pub sim: SimConfig<f64>,
    pub seed: u64,
}

impl Scenario {
    pub fn a(&self) -> f64 {
        self.vspec.a()
    }
}

struct Section<'a> {
    name: &'static str,
    values: BTreeMap<&'a str, &'a str>,
}

impl<'a> Section<'a> {
    fn raw(&self, key: &'static str) -> Result<&'a str, ScenarioError> {
        self.values
            .get(key)
            .copied()
            .ok_or(ScenarioError::MissingKey {
                section: self.name,
                key,
            })
    }

    fn bad(&self, key: &'static str, reason: impl Into<String>) -> ScenarioError {
        ScenarioError::BadValue {
            section: self.name,
            key,
            reason: reason.into(),
        }
    }

    fn number<T: FromStr>(&self, key: &'static str, what: &str) -> Result<T, ScenarioError> {
        let text = self.raw(key)?;
        text.trim()
            .parse()
            .map_err(|_| self.bad(key, format!("expected {what}, got `{text}`")))
    }

    fn number_or<T: FromStr>(
        &self,
        key: &'static str,
        what: &str,
        default: T,
    ) -> Result<T, ScenarioError> {
        if self.values.contains_key(key) {
            self.number(key, what)
        } else {
            Ok(default)
        }
    }

    fn real(&self, key: &'static str) -> Result<f64, ScenarioError> {
        self.number(key, "a number")
    }

    fn expr(&self, key: &'static str) -> Result<ExprNode, ScenarioError> {
        parse(self.raw(key)?).map_err(|source| ScenarioError::Expression {
            section: self.name,
            key,
            source,
        })
    }
}

fn parse_norm_index(text: &str) -> Option<NormIndex> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
        return Some(NormIndex::Infinity);
    }
    t.parse::<u32>()
        .ok()
        .and_then(|p| NormIndex::finite(p).ok())
}

/// Parses a comma-separated list of reals.
pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .map_err(|_| format!("`{s}` is not a number"))
        })
        .collect()
}

impl RawScenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let ini = Ini::load_from_str_opt(
            text,
            ParseOption {
                enabled_quote: true,
                enabled_escape: false,
                ..ParseOption::default()
            },
        )
        .map_err(|e| ScenarioError::Syntax(e.to_string()))?;

        let mut sections: BTreeMap<&str, Section<'_>> = BTreeMap::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if let Some((key, _)) = props.iter().next() {
                    return Err(ScenarioError::Orphan(key.to_string()));
                }
                continue;
            };
            let Some(&(canon, allowed)) = SECTIONS.iter().find(|(s, _)| *s == name) else {
                return Err(ScenarioError::UnknownSection(name.to_string()));
            };
            let section = sections.entry(canon).or_insert_with(|| Section {
                name: canon,
                values: BTreeMap::new(),
            });
            for (key, value) in props.iter() {
                if !allowed.contains(&key) {
                    return Err(ScenarioError::UnknownKey {
                        section: canon.to_string(),
                        key: key.to_string(),
                    });
                }
                if section.values.insert(key, value).is_some() {
                    return Err(ScenarioError::DuplicateKey {
                        section: canon.to_string(),
                        key: key.to_string(),
                    });
                }
            }
        }

        let get = |name: &'static str| {
            sections
                .get(name)
                .ok_or(ScenarioError::MissingSection(name))
        };
        let plant = get("plant")?;
        let traj = get("trajectory")?;
        let perf = get("performance")?;
        let input = get("input")?;
        let empty = Section {
            name: "simulation",
            values: BTreeMap::new(),
        };
        let sim = sections.get("simulation").unwrap_or(&empty);

        let p_star = match plant.values.get("p_star") {
            None => NormIndex::One,
            Some(text) => parse_norm_index(text).ok_or_else(|| {
                plant.bad(
                    "p_star",
                    format!("expected a positive integer or inf, got `{text}`"),
                )
            })?,
        };
        let xd_bar = if traj.values.contains_key("xd_bar") {
            Some(traj.real("xd_bar")?)
        } else {
            None
        };
        let x0 = match sim.values.get("x0") {
            None => None,
            Some(text) => Some(parse_list(text).map_err(|e| sim.bad("x0", e))?),
        };

        Ok(RawScenario {
            n: plant.number("n", "a positive integer")?,
            f: plant.expr("f")?,
            g: plant.expr("g")?,
            d: plant.expr("d")?,
            k_l: plant.real("k_l")?,
            p_star,
            g_lo: plant.real("g_lo")?,
            g_hi: plant.real("g_hi")?,
            d_bar: plant.real("d_bar")?,
            xd: traj.expr("xd")?,
            xd_bar,
            psi0: perf.real("psi0")?,
            psi_inf: perf.real("psi_inf")?,
            mu: perf.real("mu")?,
            a: perf.real("a")?,
            u_bar: input.real("u_bar")?,
            dt: sim.number_or("dt", "a number", 1e-3)?,
            t_end: sim.number_or("t_end", "a number", 20.0)?,
            x0,
            record_stride: sim.number_or("record_stride", "a positive integer", 10)?,
            seed: sim.number_or("seed", "a nonnegative integer", 0)?,
        })
    }

    /// Validates every field and builds the typed scenario.
    pub fn build(&self) -> Result<Scenario, ScenarioError> {
        let plant = PlantModel::new(
            self.n,
            self.f.clone(),
            self.g.clone(),
            self.d.clone(),
            PlantBounds {
                k_l: self.k_l,
                p_star: self.p_star,
                g_lo: self.g_lo,
                g_hi: self.g_hi,
                d_bar: self.d_bar,
            },
        )?;
        let performance = PerformanceSpec::new(self.psi0, self.psi_inf, self.mu)?;
        let vspec = derive_vpc(&performance, self.a, self.n)?;
        if !(self.u_bar > 0.0) || !self.u_bar.is_finite() {
            return Err(ppcsat::Error::InvalidParameter {
                name: "u_bar",
                reason: "must be > 0".into(),
            }
            .into());
        }
        let x0 = self.x0.clone().unwrap_or_else(|| vec![0.0; self.n]);
        if x0.len() != self.n {
            return Err(ScenarioError::BadValue {
                section: "simulation",
                key: "x0",
                reason: format!("expected {} values, got {}", self.n, x0.len()),
            });
        }
        let sim = SimConfig {
            dt: self.dt,
            t_end: self.t_end,
            x0,
            record_stride: self.record_stride,
        };
        sim.validate()?;
        let bound = match self.xd_bar {
            Some(v) => TrajBound::Given(v),
            None => TrajBound::Estimate {
                t_end: self.t_end,
                samples: (self.t_end / ESTIMATE_SPACING).ceil() as usize + 1,
            },
        };
        let trajectory = TrajectorySpec::new(self.xd.clone(), self.n, bound)?;
        Ok(Scenario {
            plant,
            trajectory,
            xd_bar_estimated: self.xd_bar.is_none(),
            performance,
            vspec,
            u_bar: self.u_bar,
            sim,
            seed: self.seed,
        })
    }
}

/// Parses and validates a scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    RawScenario::parse(text)?.build()
}

/// The bundled example scenario.
pub const EXAMPLE1: &str = include_str!("../scenarios/example1.cfg");
