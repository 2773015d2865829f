//! Species, interactions and the shaken impurity trap shared by every solver.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::grid::GridSpec;

/// |ζ(1/2)|, the Riemann zeta function at one half.
pub const ZETA_HALF_ABS: f64 = 1.460_354_508_809_586_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    Bath,
    Impurity,
}

impl Species {
    pub fn other(self) -> Self {
        match self {
            Species::Bath => Species::Impurity,
            Species::Impurity => Species::Bath,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Species::Bath => "bath",
            Species::Impurity => "impurity",
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesParams {
    pub label: Species,
    pub count: usize,
    pub mass: f64,
    pub trap_freq: f64,
    /// Intraspecies contact coupling.
    pub g_intra: f64,
}

impl SpeciesParams {
    pub fn bath(count: usize, g_intra: f64) -> Self {
        Self {
            label: Species::Bath,
            count,
            mass: 1.0,
            trap_freq: 0.3,
            g_intra,
        }
    }

    pub fn impurity(count: usize, g_intra: f64) -> Self {
        Self {
            label: Species::Impurity,
            count,
            mass: 1.0,
            trap_freq: 0.3,
            g_intra,
        }
    }

    /// Checks the parameter ranges. An empty bath is allowed so the impurities
    /// can be studied in isolation; impurities must be present.
    pub fn validate(&self) -> Result<()> {
        if self.label == Species::Impurity && self.count == 0 {
            return Err(invalid("impurity.count", "need at least one impurity"));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(invalid("mass", format!("must be positive, got {}", self.mass)));
        }
        if !(self.trap_freq >= 0.0 && self.trap_freq.is_finite()) {
            return Err(invalid(
                "trap_freq",
                format!("must be non-negative, got {}", self.trap_freq),
            ));
        }
        if !self.g_intra.is_finite() {
            return Err(invalid("g_intra", "must be finite"));
        }
        Ok(())
    }

    /// Static harmonic potential `½ M ω² x²`.
    pub fn static_potential(&self, x: f64) -> f64 {
        0.5 * self.mass * self.trap_freq * self.trap_freq * x * x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrivingMode {
    None,
    /// Shaking for a whole number of periods, then free evolution.
    Pulse { periods: u32 },
    Continuous,
}

impl fmt::Display for DrivingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DrivingMode::None => f.write_str("none"),
            DrivingMode::Pulse { periods } => write!(f, "pulse({periods})"),
            DrivingMode::Continuous => f.write_str("continuous"),
        }
    }
}

/// Shaking of the impurity trap centre, `a(t) = A sin(ω_D t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivingProtocol {
    pub amplitude: f64,
    pub frequency: f64,
    pub mode: DrivingMode,
}

impl Default for DrivingProtocol {
    fn default() -> Self {
        Self::none()
    }
}

impl DrivingProtocol {
    pub fn none() -> Self {
        Self {
            amplitude: 0.0,
            frequency: 0.0,
            mode: DrivingMode::None,
        }
    }

    /// Two-period pulse.
    pub fn pulse(amplitude: f64, frequency: f64) -> Self {
        Self {
            amplitude,
            frequency,
            mode: DrivingMode::Pulse { periods: 2 },
        }
    }

    pub fn continuous(amplitude: f64, frequency: f64) -> Self {
        Self {
            amplitude,
            frequency,
            mode: DrivingMode::Continuous,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(invalid(
                "driving.amplitude",
                format!("must be non-negative, got {}", self.amplitude),
            ));
        }
        match self.mode {
            DrivingMode::None => Ok(()),
            DrivingMode::Pulse { periods: 0 } => {
                Err(invalid("driving.periods", "a pulse needs at least one period"))
            }
            _ if !(self.frequency > 0.0 && self.frequency.is_finite()) => Err(invalid(
                "driving.omega_d",
                format!("must be positive when driving, got {}", self.frequency),
            )),
            _ => Ok(()),
        }
    }

    /// End of the shaking window, `2π n_periods / ω_D`.
    pub fn pulse_end(&self) -> Result<f64> {
        match self.mode {
            DrivingMode::Pulse { periods } => Ok(2.0 * PI * f64::from(periods) / self.frequency),
            other => Err(Error::UndefinedForMode {
                operation: "pulse_end",
                mode: other.to_string(),
            }),
        }
    }

    pub fn is_active(&self, t: f64) -> bool {
        match self.mode {
            DrivingMode::None => false,
            DrivingMode::Continuous => true,
            DrivingMode::Pulse { periods } => {
                t < 2.0 * PI * f64::from(periods) / self.frequency
            }
        }
    }

    /// Trap-centre displacement `a(t)`; zero outside the driving window.
    pub fn displacement(&self, t: f64) -> f64 {
        if self.is_active(t) {
            self.amplitude * (self.frequency * t).sin()
        } else {
            0.0
        }
    }
}

/// Bath plus impurities on one grid. Only the impurity trap is driven.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    pub bath: SpeciesParams,
    pub impurity: SpeciesParams,
    pub g_bi: f64,
    pub grid: GridSpec,
    pub driving: DrivingProtocol,
}

impl Default for MixtureModel {
    /// 100 bath atoms and two impurities with `g_BB = 0.5`, `g_II = 0.4`,
    /// `g_BI = 0.2`, `ω = 0.3`, undriven.
    fn default() -> Self {
        Self {
            bath: SpeciesParams::bath(100, 0.5),
            impurity: SpeciesParams::impurity(2, 0.4),
            g_bi: 0.2,
            grid: GridSpec::default(),
            driving: DrivingProtocol::none(),
        }
    }
}

impl MixtureModel {
    pub fn validate(&self) -> Result<()> {
        if self.bath.label != Species::Bath || self.impurity.label != Species::Impurity {
            return Err(invalid("species", "bath and impurity labels are swapped"));
        }
        self.bath.validate()?;
        self.impurity.validate()?;
        self.driving.validate()?;
        if !self.g_bi.is_finite() {
            return Err(invalid("g_bi", "must be finite"));
        }
        Ok(())
    }

    pub fn species(&self, s: Species) -> &SpeciesParams {
        match s {
            Species::Bath => &self.bath,
            Species::Impurity => &self.impurity,
        }
    }

    pub fn species_mut(&mut self, s: Species) -> &mut SpeciesParams {
        match s {
            Species::Bath => &mut self.bath,
            Species::Impurity => &mut self.impurity,
        }
    }

    /// Copy of the model with the driving switched off.
    pub fn undriven(&self) -> Self {
        Self {
            driving: DrivingProtocol::none(),
            ..self.clone()
        }
    }

    /// Displacement of the trap felt by species `s` at time `t`.
    pub fn trap_center(&self, s: Species, t: f64) -> f64 {
        match s {
            Species::Bath => 0.0,
            Species::Impurity => self.driving.displacement(t),
        }
    }

    /// `½ M ω² (x - a(t))²` for the impurities while the driving is active,
    /// `½ M ω² x²` otherwise and always for the bath.
    pub fn trap_potential(&self, s: Species, x: f64, t: f64) -> f64 {
        let p = self.species(s);
        let d = x - self.trap_center(s, t);
        0.5 * p.mass * p.trap_freq * p.trap_freq * d * d
    }

    /// Potential of species `s` on every grid node.
    pub fn potential_on_grid(&self, s: Species, t: f64) -> Vec<f64> {
        (0..self.grid.len())
            .map(|j| self.trap_potential(s, self.grid.node(j), t))
            .collect()
    }

    pub fn miscibility(&self) -> Miscibility {
        miscibility_check(self.bath.g_intra, self.impurity.g_intra, self.g_bi)
    }
}

/// Effective 1D contact coupling from a 3D scattering length under transverse
/// confinement, with ħ = 1:
/// `2 a_s / (μ a_⊥²) · (1 - |ζ(½)| a_s / (√2 a_⊥))⁻¹`.
pub fn olshanii_g1d(a_s: f64, a_perp: f64, reduced_mass: f64) -> Result<f64> {
    if !(a_perp > 0.0) {
        return Err(invalid("a_perp", format!("must be positive, got {a_perp}")));
    }
    if !(reduced_mass > 0.0) {
        return Err(invalid(
            "reduced_mass",
            format!("must be positive, got {reduced_mass}"),
        ));
    }
    let denom = 1.0 - ZETA_HALF_ABS * a_s / (std::f64::consts::SQRT_2 * a_perp);
    if denom.abs() < 1e-12 {
        return Err(Error::Singularity(format!(
            "confinement-induced resonance at a_s = {a_s}, a_perp = {a_perp}"
        )));
    }
    Ok(2.0 * a_s / (reduced_mass * a_perp * a_perp) / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Miscibility {
    Miscible,
    Immiscible,
}

/// Miscible iff `g_BI² < g_BB g_II`; the boundary counts as immiscible.
pub fn miscibility_check(g_bb: f64, g_ii: f64, g_bi: f64) -> Miscibility {
    if g_bi * g_bi < g_bb * g_ii {
        Miscibility::Miscible
    } else {
        Miscibility::Immiscible
    }
}
