//! Scenario files.
//!
//! A scenario is a TOML document with a top-level `kind`, one system section
//! named after the kind (`[cascade]`, `[delay]`, `[heat]`, `[regulation]`)
//! and the shared sections `[design]`, `[sim]`, `[initial]`, `[input]` and
//! `[output]`. Matrices are nested arrays of rows; poles are numbers or
//! `[re, im]` pairs.

use std::path::Path;

use cascade_core::design::{CascadeSystem, StateSpace};
use cascade_core::grid::{Quadrature, SpatialFunction};
use cascade_core::heat::{select_n, HeatPlant};
use cascade_core::linalg::is_conjugate_closed;
use cascade_core::sim::{check_cfl, check_ftcs, SimConfig};
use cascade_core::{delay::DelayPlant, regulation::RegulationProblem, Complex64, Matrix};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    FiniteCascade,
    Delay,
    Heat,
    Regulation,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::FiniteCascade => "finite_cascade",
            Kind::Delay => "delay",
            Kind::Heat => "heat",
            Kind::Regulation => "regulation",
        }
    }

    fn section(self) -> &'static str {
        match self {
            Kind::FiniteCascade => "cascade",
            Kind::Delay => "delay",
            Kind::Heat => "heat",
            Kind::Regulation => "regulation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cascade: Option<CascadeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<DelaySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heat: Option<HeatSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regulation: Option<RegulationSection>,
    #[serde(default)]
    pub design: DesignSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub input: Signal,
    #[serde(default)]
    pub output: OutputSection,
}

/// `ẋ₁ = A₁x₁ + B₁C₂x₂`, `ẋ₂ = A₂x₂ + B₂u`, `y = C₁x₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeSection {
    pub a1: Rows,
    pub b1: Rows,
    pub c1: Rows,
    pub a2: Rows,
    pub b2: Rows,
    pub c2: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelaySection {
    pub a2: Rows,
    pub b2: Rows,
    pub c2: Rows,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatSection {
    pub mu: f64,
    pub a1: Rows,
    pub b1: Rows,
    pub c1: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegulationSection {
    pub a1: Rows,
    pub b1: Rows,
    pub bd: Rows,
    pub c1: Rows,
    pub a2: Rows,
    pub cd: Rows,
    pub c2: Rows,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Pole {
    Real(f64),
    Complex([f64; 2]),
}

impl Pole {
    pub fn value(self) -> Complex64 {
        match self {
            Pole::Real(re) => Complex64::new(re, 0.0),
            Pole::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayForm {
    #[default]
    Conjugated,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    #[default]
    Simpson,
    RightEndpoint,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    /// Placement of `F₀` on `(A₁, C₁)`; mutually exclusive with `f0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor_poles: Option<Vec<Pole>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0: Option<Rows>,
    /// Spectrum of `A₂ + F₂C₁S` (finite cascade, delay).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plant_poles: Option<Vec<Pole>>,
    /// Heat: one pole per unstable mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modal_poles: Option<Vec<Pole>>,
    /// Regulation: spectrum of `A₂ + K₂(C₁Γ − C₂)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exo_poles: Option<Vec<Pole>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<DelayForm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_panels: Option<usize>,
    /// Intervals of the design grid for `s(x)` and `F₂(x)` (heat).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    /// Modes in the truncated spectrum check (heat).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum_modes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    /// Required for the PDE kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    #[serde(alias = "T")]
    pub t_end: f64,
    #[serde(default = "one")]
    pub record_every: usize,
}

fn one() -> usize {
    1
}

/// Initial data on a spatial grid: a constant, explicit samples
/// (`intervals + 1` values) or a sine series `Σ aₖ sin(kπx/L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Constant(f64),
    Samples(Vec<f64>),
    Sine { sine: Vec<f64> },
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Constant(0.0)
    }
}

impl Profile {
    pub fn sample(&self, length: f64, intervals: usize, field: &str) -> Result<SpatialFunction, CliError> {
        let vals = match self {
            Profile::Constant(c) => vec![*c; intervals + 1],
            Profile::Samples(v) => {
                if v.len() != intervals + 1 {
                    return Err(CliError::field(
                        field,
                        format!("{} samples given, the grid has {} points", v.len(), intervals + 1),
                    ));
                }
                v.clone()
            }
            Profile::Sine { sine } => (0..=intervals)
                .map(|k| {
                    let x = k as f64 / intervals as f64;
                    sine.iter()
                        .enumerate()
                        .map(|(j, a)| a * (std::f64::consts::PI * (j + 1) as f64 * x).sin())
                        .sum()
                })
                .collect(),
        };
        SpatialFunction::scalar(length, vals).map_err(|e| CliError::field(field, e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_hat: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x2: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x2_hat: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_hat: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_hat: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z2: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z1_hat: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z2_hat: Option<Vec<f64>>,
}

/// Input signal applied to every input channel.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "signal", rename_all = "snake_case", deny_unknown_fields)]
pub enum Signal {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    Sine {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl Signal {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Signal::Zero => 0.0,
            Signal::Constant { value } => value,
            Signal::Sine {
                amplitude,
                omega,
                phase,
            } => amplitude * (omega * t + phase).sin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// Trajectory columns to write; all when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<Vec<String>>,
    /// Heat only: times of the spatial snapshots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<Vec<f64>>,
    /// Window of the reported decay-rate fit; defaults to `[T/2, T]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_window: Option<[f64; 2]>,
}

/// A scenario whose system section has been checked and converted.
pub enum System {
    Cascade(CascadeSystem),
    Delay(DelayPlant),
    Heat(HeatPlant),
    Regulation(RegulationProblem),
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// Run name: `name` when set, otherwise the file stem.
    pub fn run_name(&self, path: &Path) -> String {
        self.name.clone().unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into())
        })
    }

    /// Field-level checks of everything except the simulation settings.
    pub fn system(&self) -> Result<System, CliError> {
        let want = self.kind.section();
        let sections = [
            ("cascade", self.cascade.is_some()),
            ("delay", self.delay.is_some()),
            ("heat", self.heat.is_some()),
            ("regulation", self.regulation.is_some()),
        ];
        if sections.iter().any(|&(name, present)| name == want && !present) {
            return Err(CliError::field(
                want,
                format!("section required for kind = {}", self.kind.as_str()),
            ));
        }
        for (name, present) in sections {
            if name != want && present {
                return Err(CliError::field(
                    name,
                    format!("section not used by kind = {}", self.kind.as_str()),
                ));
            }
        }
        self.check_design_fields()?;
        self.check_initial_fields()?;
        let sys = match self.kind {
            Kind::FiniteCascade => {
                let c = self.cascade.as_ref().expect("checked above");
                let sensor = StateSpace::new(
                    matrix("cascade.a1", &c.a1)?,
                    matrix("cascade.b1", &c.b1)?,
                    matrix("cascade.c1", &c.c1)?,
                )
                .map_err(|e| CliError::field("cascade", e.to_string()))?;
                let plant = StateSpace::new(
                    matrix("cascade.a2", &c.a2)?,
                    matrix("cascade.b2", &c.b2)?,
                    matrix("cascade.c2", &c.c2)?,
                )
                .map_err(|e| CliError::field("cascade", e.to_string()))?;
                System::Cascade(
                    CascadeSystem::new(sensor, plant).map_err(|e| CliError::field("cascade", e.to_string()))?,
                )
            }
            Kind::Delay => {
                let d = self.delay.as_ref().expect("checked above");
                System::Delay(
                    DelayPlant::new(
                        matrix("delay.a2", &d.a2)?,
                        matrix("delay.b2", &d.b2)?,
                        matrix("delay.c2", &d.c2)?,
                        d.tau,
                    )
                    .map_err(|e| CliError::field("delay", e.to_string()))?,
                )
            }
            Kind::Heat => {
                let h = self.heat.as_ref().expect("checked above");
                System::Heat(
                    HeatPlant::new(
                        h.mu,
                        matrix("heat.a1", &h.a1)?,
                        matrix("heat.b1", &h.b1)?,
                        matrix("heat.c1", &h.c1)?,
                    )
                    .map_err(|e| CliError::field("heat", e.to_string()))?,
                )
            }
            Kind::Regulation => {
                let r = self.regulation.as_ref().expect("checked above");
                System::Regulation(
                    RegulationProblem::new(
                        matrix("regulation.a1", &r.a1)?,
                        matrix("regulation.b1", &r.b1)?,
                        matrix("regulation.bd", &r.bd)?,
                        matrix("regulation.c1", &r.c1)?,
                        matrix("regulation.a2", &r.a2)?,
                        matrix("regulation.cd", &r.cd)?,
                        matrix("regulation.c2", &r.c2)?,
                    )
                    .map_err(|e| CliError::field("regulation", e.to_string()))?,
                )
            }
        };
        if let System::Heat(p) = &sys {
            let n = select_n(p.mu);
            let got = self.design.modal_poles.as_ref().map_or(0, Vec::len);
            if got != n {
                return Err(CliError::field(
                    "design.modal_poles",
                    format!("mu = {} has {n} unstable modes, {got} poles given", p.mu),
                ));
            }
        }
        Ok(sys)
    }

    fn check_design_fields(&self) -> Result<(), CliError> {
        let d = &self.design;
        let allowed: &[&str] = match self.kind {
            Kind::FiniteCascade => &["sensor_poles", "f0", "plant_poles"],
            Kind::Delay => &["plant_poles", "form"],
            Kind::Heat => &[
                "sensor_poles",
                "f0",
                "modal_poles",
                "quadrature",
                "quadrature_panels",
                "grid",
                "spectrum_modes",
            ],
            Kind::Regulation => &["exo_poles"],
        };
        let present = [
            ("sensor_poles", d.sensor_poles.is_some()),
            ("f0", d.f0.is_some()),
            ("plant_poles", d.plant_poles.is_some()),
            ("modal_poles", d.modal_poles.is_some()),
            ("exo_poles", d.exo_poles.is_some()),
            ("form", d.form.is_some()),
            ("quadrature", d.quadrature.is_some()),
            ("quadrature_panels", d.quadrature_panels.is_some()),
            ("grid", d.grid.is_some()),
            ("spectrum_modes", d.spectrum_modes.is_some()),
        ];
        for (name, is_set) in present {
            if is_set && !allowed.contains(&name) {
                return Err(CliError::field(
                    format!("design.{name}"),
                    format!("not used by kind = {}", self.kind.as_str()),
                ));
            }
        }
        for (name, poles) in [
            ("sensor_poles", &d.sensor_poles),
            ("plant_poles", &d.plant_poles),
            ("modal_poles", &d.modal_poles),
            ("exo_poles", &d.exo_poles),
        ] {
            if let Some(p) = poles {
                check_poles(&format!("design.{name}"), p)?;
            }
        }
        match self.kind {
            Kind::FiniteCascade => {
                sensor_gain_fields(d)?;
                if d.plant_poles.is_none() {
                    return Err(CliError::field(
                        "design.plant_poles",
                        "required for kind = finite_cascade",
                    ));
                }
            }
            Kind::Delay => {
                if d.plant_poles.is_none() {
                    return Err(CliError::field("design.plant_poles", "required for kind = delay"));
                }
            }
            Kind::Heat => {
                sensor_gain_fields(d)?;
                if d.quadrature_panels.is_some() && d.quadrature != Some(QuadratureRule::RightEndpoint) {
                    return Err(CliError::field(
                        "design.quadrature_panels",
                        "only meaningful with quadrature = \"right_endpoint\"",
                    ));
                }
                if d.grid.is_some_and(|g| g < 2) {
                    return Err(CliError::field("design.grid", "needs at least 2 intervals"));
                }
            }
            Kind::Regulation => {
                if d.exo_poles.is_none() {
                    return Err(CliError::field("design.exo_poles", "required for kind = regulation"));
                }
            }
        }
        Ok(())
    }

    fn check_initial_fields(&self) -> Result<(), CliError> {
        let i = &self.initial;
        let allowed: &[&str] = match self.kind {
            Kind::FiniteCascade => &["x", "x_hat"],
            Kind::Delay => &["x2", "x2_hat", "w", "w_hat"],
            Kind::Heat => &["v", "v_hat", "w", "w_hat"],
            Kind::Regulation => &["z1", "z2", "z1_hat", "z2_hat"],
        };
        let present = [
            ("x", i.x.is_some()),
            ("x_hat", i.x_hat.is_some()),
            ("x2", i.x2.is_some()),
            ("x2_hat", i.x2_hat.is_some()),
            ("v", i.v.is_some()),
            ("v_hat", i.v_hat.is_some()),
            ("w", i.w.is_some()),
            ("w_hat", i.w_hat.is_some()),
            ("z1", i.z1.is_some()),
            ("z2", i.z2.is_some()),
            ("z1_hat", i.z1_hat.is_some()),
            ("z2_hat", i.z2_hat.is_some()),
        ];
        for (name, is_set) in present {
            if is_set && !allowed.contains(&name) {
                return Err(CliError::field(
                    format!("initial.{name}"),
                    format!("not used by kind = {}", self.kind.as_str()),
                ));
            }
        }
        if self.output.snapshots.is_some() && self.kind != Kind::Heat {
            return Err(CliError::field("output.snapshots", "only supported for kind = heat"));
        }
        Ok(())
    }

    /// Checks `[sim]` against the scheme-specific stability bounds.
    pub fn sim_config(&self, sys: &System) -> Result<SimConfig, CliError> {
        let s = self
            .sim
            .as_ref()
            .ok_or_else(|| CliError::field("sim", "section required to simulate"))?;
        for (name, v) in [("sim.dt", s.dt), ("sim.t_end", s.t_end)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::field(name, format!("must be positive, got {v}")));
            }
        }
        if s.t_end < s.dt {
            return Err(CliError::field("sim.t_end", "shorter than one time step"));
        }
        if s.record_every == 0 {
            return Err(CliError::field("sim.record_every", "must be at least 1"));
        }
        let needs_dx = matches!(sys, System::Heat(_) | System::Delay(_));
        let dx = match (s.dx, needs_dx) {
            (Some(dx), true) if dx.is_finite() && dx > 0.0 => dx,
            (Some(dx), true) => return Err(CliError::field("sim.dx", format!("must be positive, got {dx}"))),
            (None, true) => return Err(CliError::field("sim.dx", "required for PDE kinds")),
            (Some(_), false) => return Err(CliError::field("sim.dx", "not used by ODE kinds")),
            (None, false) => 1.0,
        };
        match sys {
            System::Heat(p) => {
                grid_intervals("sim.dx", 1.0, dx)?;
                check_ftcs(p.mu, s.dt, dx).map_err(|e| CliError::field("sim.dt", e.to_string()))?;
            }
            System::Delay(p) => {
                grid_intervals("sim.dx", p.tau, dx)?;
                check_cfl(s.dt, dx).map_err(|e| CliError::field("sim.dt", e.to_string()))?;
            }
            _ => {}
        }
        Ok(SimConfig {
            dt: s.dt,
            dx,
            t_end: s.t_end,
            record_every: s.record_every,
        })
    }

    pub fn quadrature(&self) -> Quadrature {
        match self.design.quadrature.unwrap_or_default() {
            QuadratureRule::Simpson => Quadrature::Simpson,
            QuadratureRule::RightEndpoint => Quadrature::RightEndpoint {
                panels: self.design.quadrature_panels.unwrap_or(20),
            },
        }
    }
}

/// `length / dx` as an integer count of intervals.
pub fn grid_intervals(field: &str, length: f64, dx: f64) -> Result<usize, CliError> {
    let n = (length / dx).round();
    if n < 2.0 || ((length / n) - dx).abs() > 1e-9 * dx {
        return Err(CliError::field(
            field,
            format!("{length} / dx must be an integer of at least 2, got dx = {dx}"),
        ));
    }
    Ok(n as usize)
}

pub fn matrix(field: &str, rows: &Rows) -> Result<Matrix, CliError> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(CliError::field(field, "matrix is empty"));
    }
    if let Some(k) = rows.iter().position(|r| r.len() != rows[0].len()) {
        return Err(CliError::field(
            field,
            format!(
                "row {} has {} entries, row 1 has {}",
                k + 1,
                rows[k].len(),
                rows[0].len()
            ),
        ));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::field(field, "entries must be finite"));
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(Matrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn poles(list: &[Pole]) -> Vec<Complex64> {
    list.iter().map(|p| p.value()).collect()
}

fn check_poles(field: &str, list: &[Pole]) -> Result<(), CliError> {
    if list
        .iter()
        .any(|p| !(p.value().re.is_finite() && p.value().im.is_finite()))
    {
        return Err(CliError::field(field, "poles must be finite"));
    }
    if !is_conjugate_closed(&poles(list), 1e-12) {
        return Err(CliError::field(field, "complex poles must come in conjugate pairs"));
    }
    Ok(())
}

fn sensor_gain_fields(d: &DesignSection) -> Result<(), CliError> {
    match (d.sensor_poles.is_some(), d.f0.is_some()) {
        (true, true) => Err(CliError::field("design.f0", "give either sensor_poles or f0, not both")),
        (false, false) => Err(CliError::field("design.sensor_poles", "sensor_poles or f0 is required")),
        _ => Ok(()),
    }
}
