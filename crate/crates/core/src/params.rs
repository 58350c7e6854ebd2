//! Physical constants, circuit and membrane parameterization, derived rates and couplings.
//!
//! All frequencies and rates are angular (rad/s). Configuration files carry ordinary
//! frequencies; conversion happens in [`crate::config`].

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Fixed CODATA constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub k_boltzmann: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    k_boltzmann: 1.380_649e-23,
};

pub const HBAR: f64 = CONSTANTS.hbar;

/// Default areal density of the membrane (monolayer graphene), kg/m².
pub const DEFAULT_AREAL_DENSITY: f64 = 7.6e-7;

/// Thermal occupation of a bosonic mode at angular frequency `omega` and temperature `temp`.
pub fn bose_occupation(omega: f64, temp: f64) -> f64 {
    if temp <= 0.0 {
        return 0.0;
    }
    let x = CONSTANTS.hbar * omega / (CONSTANTS.k_boltzmann * temp);
    1.0 / x.exp_m1()
}

/// Mechanical element: a suspended membrane above a gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembraneSpec {
    /// Length L, m.
    pub length: f64,
    /// Width W, m.
    pub width: f64,
    /// Gap d₀ to the counter electrode, m.
    pub gap: f64,
    /// Areal density, kg/m².
    pub areal_density: f64,
    /// Zero-point amplitude overriding the mass model, m.
    pub x0_override: Option<f64>,
    /// Mode angular frequency ω_m.
    pub omega_m: f64,
    /// Quality factor Q.
    pub quality_q: Option<f64>,
    /// Explicit energy damping rate γ_b; defaults to ω_m/Q.
    pub gamma_b: Option<f64>,
    /// Explicit bath occupation n̄_m; overrides the temperature.
    pub n_bar_m: Option<f64>,
    /// Bath temperature T_m, K.
    pub bath_temperature: Option<f64>,
}

impl MembraneSpec {
    /// Membrane with the default density and no damping or bath data.
    pub fn new(length: f64, width: f64, gap: f64, omega_m: f64) -> Self {
        MembraneSpec {
            length,
            width,
            gap,
            areal_density: DEFAULT_AREAL_DENSITY,
            x0_override: None,
            omega_m,
            quality_q: None,
            gamma_b: None,
            n_bar_m: None,
            bath_temperature: None,
        }
    }

    pub fn mass(&self) -> f64 {
        self.areal_density * self.length * self.width
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("length", self.length), ("width", self.width), ("gap", self.gap)] {
            if !(v > 0.0) {
                return Err(Error::config(format!("membrane.{name}"), "must be > 0"));
            }
        }
        if !(self.omega_m > 0.0) {
            return Err(Error::config("membrane.omega_m", "must be > 0"));
        }
        if let Some(n) = self.n_bar_m {
            if !(n >= 0.0) {
                return Err(Error::config("membrane.n_bar_m", "must be >= 0"));
            }
        }
        if let Some(q) = self.quality_q {
            if !(q > 0.0) {
                return Err(Error::config("membrane.quality_q", "must be > 0"));
            }
        }
        Ok(())
    }

    /// Resolved γ_b plus any consistency warnings.
    pub fn resolve_gamma_b(&self) -> Result<(f64, Vec<String>)> {
        let mut warnings = Vec::new();
        let from_q = self.quality_q.map(|q| self.omega_m / q);
        let gamma_b = match (self.gamma_b, from_q) {
            (Some(g), Some(gq)) => {
                if (g - gq).abs() > 0.01 * gq {
                    warnings.push(format!(
                        "gamma_b = {g:e} rad/s disagrees with omega_m/Q = {gq:e} rad/s by more than 1%"
                    ));
                }
                g
            }
            (Some(g), None) => g,
            (None, Some(gq)) => gq,
            (None, None) => {
                return Err(Error::config(
                    "membrane.gamma_b",
                    "either gamma_b or quality_q must be given",
                ))
            }
        };
        if gamma_b < 0.0 {
            return Err(Error::config("membrane.gamma_b", "must be >= 0"));
        }
        if gamma_b > 0.1 * self.omega_m {
            warnings.push(format!(
                "gamma_b = {gamma_b:e} rad/s is not small compared to omega_m = {:e} rad/s",
                self.omega_m
            ));
        }
        Ok((gamma_b, warnings))
    }

    /// Mechanical bath occupation: explicit value, else from temperature, else zero.
    pub fn resolve_n_bar_m(&self) -> f64 {
        match (self.n_bar_m, self.bath_temperature) {
            (Some(n), _) => n,
            (None, Some(t)) => bose_occupation(self.omega_m, t),
            (None, None) => 0.0,
        }
    }
}

/// Zero-point amplitude x₀ = √(ħ / 2 m ω_m), or the override when set.
pub fn zero_point_motion(membrane: &MembraneSpec) -> Result<f64> {
    if let Some(x0) = membrane.x0_override {
        if x0 < 0.0 {
            return Err(Error::config("membrane.x0_override", "must be >= 0"));
        }
        return Ok(x0);
    }
    let m = membrane.mass();
    if !(m > 0.0) {
        return Err(Error::config(
            "membrane.areal_density",
            "mass model unresolvable: set x0_override or a positive areal density",
        ));
    }
    Ok((CONSTANTS.hbar / (2.0 * m * membrane.omega_m)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    SingleArm,
    DoubleArm,
}

/// Electrical elements. Asymmetries and parasitic elements only apply to the double arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub topology: Topology,
    /// Main inductance L₀, H.
    pub l0: f64,
    /// Main resistance R₀, Ω.
    pub r0: f64,
    /// Output line impedance, Ω.
    pub z_out: f64,
    /// Rest capacitance C₀, F.
    pub c0: f64,
    /// Parasitic arm inductance L, H.
    pub parasitic_l: f64,
    /// Parasitic arm resistance R, Ω.
    pub parasitic_r: f64,
    /// Stray capacitance C_s in parallel with the motional capacitor, F.
    pub stray_cs: f64,
    /// Arm inductance mismatch δL, H.
    pub delta_l: f64,
    /// Arm resistance mismatch δR, Ω.
    pub delta_r: f64,
    /// Arm capacitance mismatch δC, F.
    pub delta_c: f64,
    /// Explicit reservoir occupation n̄_e; overrides the temperature.
    pub n_bar_e: Option<f64>,
    /// Reservoir temperature T_e, K.
    pub reservoir_temperature: Option<f64>,
}

impl CircuitSpec {
    pub fn single_arm(l0: f64, r0: f64, z_out: f64, c0: f64) -> Self {
        CircuitSpec {
            topology: Topology::SingleArm,
            l0,
            r0,
            z_out,
            c0,
            parasitic_l: 0.0,
            parasitic_r: 0.0,
            stray_cs: 0.0,
            delta_l: 0.0,
            delta_r: 0.0,
            delta_c: 0.0,
            n_bar_e: None,
            reservoir_temperature: None,
        }
    }

    pub fn double_arm(l0: f64, r0: f64, z_out: f64, c0: f64, parasitic_l: f64, parasitic_r: f64) -> Self {
        CircuitSpec {
            topology: Topology::DoubleArm,
            parasitic_l,
            parasitic_r,
            ..Self::single_arm(l0, r0, z_out, c0)
        }
    }

    /// Single arm realizing the given ω_s, γ_t, γ_r at rest capacitance `c0`.
    pub fn single_arm_from_rates(omega_s: f64, gamma_t: f64, gamma_r: f64, c0: f64) -> Self {
        let l0 = 1.0 / (c0 * omega_s * omega_s);
        Self::single_arm(l0, gamma_r * l0, gamma_t * l0, c0)
    }

    /// Double arm realizing ω_s, γ_t, γ_r with the ratios L/L₀ and R/Z_out, at rest capacitance `c0`.
    pub fn double_arm_from_rates(
        omega_s: f64,
        gamma_t: f64,
        gamma_r: f64,
        l_over_l0: f64,
        r_over_zout: f64,
        c0: f64,
    ) -> Result<Self> {
        let series = 1.0 / (c0 * omega_s * omega_s);
        let l0 = series / (l_over_l0 + 2.0);
        let l = l_over_l0 * l0;
        let z_out = gamma_t * series / 2.0;
        let r = r_over_zout * z_out;
        let r0 = (gamma_r * series - r) / 2.0;
        if r0 < 0.0 {
            return Err(Error::config(
                "circuit.r0",
                "requested gamma_r is smaller than the parasitic resistance allows",
            ));
        }
        Ok(Self::double_arm(l0, r0, z_out, c0, l, r))
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("l0", self.l0),
            ("r0", self.r0),
            ("z_out", self.z_out),
            ("c0", self.c0),
            ("parasitic_l", self.parasitic_l),
            ("parasitic_r", self.parasitic_r),
            ("stray_cs", self.stray_cs),
        ];
        for (name, v) in fields {
            if !(v >= 0.0) {
                return Err(Error::config(format!("circuit.{name}"), "must be >= 0"));
            }
        }
        match self.topology {
            Topology::SingleArm => {
                let extra = [
                    ("parasitic_l", self.parasitic_l),
                    ("parasitic_r", self.parasitic_r),
                    ("delta_l", self.delta_l),
                    ("delta_r", self.delta_r),
                    ("delta_c", self.delta_c),
                ];
                for (name, v) in extra {
                    if v != 0.0 {
                        return Err(Error::config(
                            format!("circuit.{name}"),
                            "not allowed for the single-arm topology",
                        ));
                    }
                }
            }
            Topology::DoubleArm => {
                let pairs = [
                    ("delta_l", self.delta_l, self.parasitic_l),
                    ("delta_r", self.delta_r, self.parasitic_r),
                    ("delta_c", self.delta_c, self.c0),
                ];
                for (name, d, x) in pairs {
                    if d != 0.0 && !(d.abs() < x) {
                        return Err(Error::config(
                            format!("circuit.{name}"),
                            "asymmetry magnitude must be smaller than the nominal element",
                        ));
                    }
                }
            }
        }
        if let Some(n) = self.n_bar_e {
            if !(n >= 0.0) {
                return Err(Error::config("circuit.n_bar_e", "must be >= 0"));
            }
        }
        Ok(())
    }

    /// Electrical reservoir occupation at ω_s: explicit value, else from temperature, else zero.
    pub fn resolve_n_bar_e(&self, omega_s: f64) -> f64 {
        match (self.n_bar_e, self.reservoir_temperature) {
            (Some(n), _) => n,
            (None, Some(t)) => bose_occupation(omega_s, t),
            (None, None) => 0.0,
        }
    }

    /// Relative asymmetries (δR/R, δL/L, δC/C₀), zero where the nominal element vanishes.
    pub fn relative_asymmetries(&self) -> (f64, f64, f64) {
        let rel = |d: f64, x: f64| if x > 0.0 { d / x } else { 0.0 };
        (
            rel(self.delta_r, self.parasitic_r),
            rel(self.delta_l, self.parasitic_l),
            rel(self.delta_c, self.c0),
        )
    }
}

/// Electrical mode frequencies and decay rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    pub omega_s: f64,
    /// Antisymmetric-mode frequency (double arm only).
    pub omega_a: Option<f64>,
    pub gamma_t: f64,
    pub gamma_r: f64,
    /// Antisymmetric-mode decay (double arm only).
    pub gamma_l: Option<f64>,
}

impl DerivedRates {
    pub fn kappa(&self) -> f64 {
        self.gamma_t + self.gamma_r
    }
}

/// Mode frequencies and decay rates of the circuit.
pub fn derive_rates(circuit: &CircuitSpec) -> Result<DerivedRates> {
    if !(circuit.c0 > 0.0) {
        return Err(Error::SingularParameter("rest capacitance C0 is zero".into()));
    }
    match circuit.topology {
        Topology::SingleArm => {
            if !(circuit.l0 > 0.0) {
                return Err(Error::SingularParameter("inductance L0 is zero".into()));
            }
            Ok(DerivedRates {
                omega_s: 1.0 / (circuit.c0 * circuit.l0).sqrt(),
                omega_a: None,
                gamma_t: circuit.z_out / circuit.l0,
                gamma_r: circuit.r0 / circuit.l0,
                gamma_l: None,
            })
        }
        Topology::DoubleArm => {
            if !(circuit.parasitic_l > 0.0) {
                return Err(Error::SingularParameter("parasitic inductance L is zero".into()));
            }
            let series = circuit.parasitic_l + 2.0 * circuit.l0;
            Ok(DerivedRates {
                omega_s: 1.0 / (circuit.c0 * series).sqrt(),
                omega_a: Some(1.0 / (circuit.c0 * circuit.parasitic_l).sqrt()),
                gamma_t: 2.0 * circuit.z_out / series,
                gamma_r: (circuit.parasitic_r + 2.0 * circuit.r0) / series,
                gamma_l: Some(circuit.parasitic_r / circuit.parasitic_l),
            })
        }
    }
}

/// Electromechanical couplings (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    /// Linear coupling g₁.
    pub g1: f64,
    /// Quadratic coupling g₂.
    pub g2: f64,
    /// Residual linear coupling of the unbalanced double arm.
    pub g_r: f64,
    /// Linear-coupling mismatch between the arms.
    pub delta_g1: f64,
}

impl Couplings {
    pub fn new(g1: f64, g2: f64) -> Self {
        Couplings {
            g1,
            g2,
            g_r: 0.0,
            delta_g1: 0.0,
        }
    }

    /// Sets δg₁ and recomputes g_r from the capacitance mismatch.
    pub fn with_asymmetry(self, delta_g1: f64, delta_c: f64, c0: f64) -> Self {
        Couplings {
            delta_g1,
            g_r: residual_coupling(self.g1, delta_g1, delta_c, c0),
            ..self
        }
    }
}

/// Parallel-plate couplings g₁ = (8/π²)·x₀·ω_s/d₀ and g₂ = x₀²·ω_s/d₀².
pub fn couplings_from_geometry(membrane: &MembraneSpec, omega_s: f64) -> Result<Couplings> {
    if !(membrane.gap > 0.0) {
        return Err(Error::config("membrane.gap", "must be > 0"));
    }
    let x0 = zero_point_motion(membrane)?;
    Ok(couplings_from_x0(x0, membrane.gap, omega_s))
}

/// Geometric couplings from an explicit zero-point amplitude.
pub fn couplings_from_x0(x0: f64, gap: f64, omega_s: f64) -> Couplings {
    let r = x0 / gap;
    Couplings::new(8.0 / (PI * PI) * r * omega_s, r * r * omega_s)
}

/// Dilution of every coupling by a stray capacitance C_s in parallel with C₀.
pub fn apply_stray_capacitance(c: Couplings, c0: f64, cs: f64) -> Couplings {
    let f = c0 / (c0 + cs);
    Couplings {
        g1: c.g1 * f,
        g2: c.g2 * f,
        g_r: c.g_r * f,
        delta_g1: c.delta_g1 * f,
    }
}

/// Overall residual linear coupling g_r = δg₁ + 2g₁δC/C₀ + δg₁δC²/C₀².
pub fn residual_coupling(g1: f64, delta_g1: f64, delta_c: f64, c0: f64) -> f64 {
    let r = delta_c / c0;
    delta_g1 + 2.0 * g1 * r + delta_g1 * r * r
}

/// Fully resolved device: rates, couplings and bath data in angular units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub topology: Topology,
    pub rates: DerivedRates,
    pub couplings: Couplings,
    pub omega_m: f64,
    pub gamma_b: f64,
    pub n_bar_m: f64,
    pub n_bar_e: f64,
    /// Output impedance Z_out, Ω (for the homodyne scale and λ_b).
    pub z_out: f64,
    /// Parasitic arm resistance R, Ω.
    pub parasitic_r: f64,
    /// Rest capacitance C₀, F.
    pub c0: f64,
}

impl Device {
    /// Resolves a circuit and membrane into rates and couplings.
    ///
    /// Couplings come from the geometry, then δg₁ (given relative to g₁) and δC set g_r,
    /// and finally the stray capacitance dilutes everything.
    pub fn from_specs(
        circuit: &CircuitSpec,
        membrane: &MembraneSpec,
        delta_g1_rel: f64,
    ) -> Result<(Device, Vec<String>)> {
        circuit.validate()?;
        membrane.validate()?;
        let rates = derive_rates(circuit)?;
        let (gamma_b, warnings) = membrane.resolve_gamma_b()?;
        let bare = couplings_from_geometry(membrane, rates.omega_s)?;
        let bare = bare.with_asymmetry(delta_g1_rel * bare.g1, circuit.delta_c, circuit.c0);
        let couplings = apply_stray_capacitance(bare, circuit.c0, circuit.stray_cs);
        Ok((
            Device {
                topology: circuit.topology,
                rates,
                couplings,
                omega_m: membrane.omega_m,
                gamma_b,
                n_bar_m: membrane.resolve_n_bar_m(),
                n_bar_e: circuit.resolve_n_bar_e(rates.omega_s),
                z_out: circuit.z_out,
                parasitic_r: circuit.parasitic_r,
                c0: circuit.c0,
            },
            warnings,
        ))
    }

    /// Builds a device directly from rates and couplings (element values set to unity scale).
    pub fn from_rates(topology: Topology, rates: DerivedRates, couplings: Couplings, omega_m: f64, gamma_b: f64) -> Device {
        Device {
            topology,
            rates,
            couplings,
            omega_m,
            gamma_b,
            n_bar_m: 0.0,
            n_bar_e: 0.0,
            z_out: 1.0,
            parasitic_r: 0.0,
            c0: 1.0,
        }
    }

    /// R/Z_out ratio (double arm); unbounded λ_b when R = 0.
    pub fn r_over_zout(&self) -> f64 {
        self.parasitic_r / self.z_out
    }
}
