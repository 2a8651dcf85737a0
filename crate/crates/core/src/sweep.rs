//! Spacing sweeps comparing uncoupled, traditional and coupling-aware
//! beamforming.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::array::{steering_vector, ArrayGeometry, ElementPattern};
use crate::beamform::{coupled_beamforming, coupled_directivity, gain, optimal_beamforming};
use crate::coupling::{
    default_truncation, isolated_fields_synthetic, synthesize_coupled_fields, CouplingMatrix, ElementFieldLibrary,
};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, read_coupling_csv};
use crate::quadrature::{SphereQuadrature, DEFAULT_PHI_NODES, DEFAULT_THETA_NODES};
use crate::radiation::impedance_matrix;
use crate::swe::default_grid;

pub const SWEEP_HEADER: &str = "spacing,dmax,d_traditional,d_coupled,gain,cond_z";

/// Parameters of the synthetic coupling fixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureParams {
    pub gamma: f64,
    pub beta: f64,
    pub asymmetry: f64,
    /// Recover the matrix through field synthesis and wave fitting at every
    /// spacing instead of using it directly.
    pub estimate: bool,
}

impl Default for FixtureParams {
    fn default() -> Self {
        Self {
            gamma: 0.3,
            beta: 0.5,
            asymmetry: 0.0,
            estimate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingSpec {
    Identity,
    File(PathBuf),
    Synthetic(FixtureParams),
    Matrix(CouplingMatrix),
}

impl CouplingSpec {
    /// Parses `identity`, `file:<path>` or `synthetic[:key=value,...]`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "identity" {
            return Ok(Self::Identity);
        }
        if let Some(path) = text.strip_prefix("file:") {
            return Ok(Self::File(PathBuf::from(path)));
        }
        if let Some(rest) = text.strip_prefix("synthetic") {
            let mut p = FixtureParams::default();
            let rest = rest.strip_prefix(':').unwrap_or(rest);
            for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                match item.split_once('=') {
                    Some(("gamma", v)) => p.gamma = parse_f64(v)?,
                    Some(("beta", v)) => p.beta = parse_f64(v)?,
                    Some(("asymmetry", v)) => p.asymmetry = parse_f64(v)?,
                    None if item == "estimate" => p.estimate = true,
                    _ => return Err(Error::Domain(format!("unknown synthetic coupling parameter `{item}`"))),
                }
            }
            return Ok(Self::Synthetic(p));
        }
        if !text.is_empty() && !text.contains(':') {
            return Ok(Self::File(PathBuf::from(text)));
        }
        Err(Error::Domain(format!("unrecognized coupling source `{text}`")))
    }

    /// Coupling matrix for one array configuration. The synthetic fixture
    /// with `estimate` set is recovered from synthesized fields fitted at
    /// `truncation`, or at the default degree for the geometry.
    pub fn matrix_for(
        &self,
        geometry: &ArrayGeometry,
        pattern: &ElementPattern,
        truncation: Option<usize>,
    ) -> Result<CouplingMatrix> {
        let coupling = resolve_coupling(self, geometry.element_count())?;
        coupling_at(&coupling, geometry, pattern, truncation)
    }
}

fn parse_f64(v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| Error::Domain(format!("`{v}` is not a number")))
}

pub fn parse_pattern(name: &str) -> Result<ElementPattern> {
    match name.trim() {
        "isotropic" => Ok(ElementPattern::isotropic()),
        "hertzian" | "hertzian-dipole" => Ok(ElementPattern::hertzian_dipole()),
        "half-wave" | "half-wave-dipole" | "dipole" => Ok(ElementPattern::half_wave_dipole()),
        other => Err(Error::Domain(format!("unknown pattern `{other}`"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub antennas: usize,
    pub pattern: ElementPattern,
    pub spacing_start: f64,
    pub spacing_stop: f64,
    pub spacing_steps: usize,
    pub theta0_deg: f64,
    pub phi0_deg: f64,
    pub efficiency: f64,
    pub coupling: CouplingSpec,
    pub quadrature_theta: usize,
    pub quadrature_phi: usize,
    pub truncation: Option<usize>,
    pub loading: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            antennas: 2,
            pattern: ElementPattern::isotropic(),
            spacing_start: 0.05,
            spacing_stop: 0.5,
            spacing_steps: 10,
            theta0_deg: 0.0,
            phi0_deg: 0.0,
            efficiency: 1.0,
            coupling: CouplingSpec::Identity,
            quadrature_theta: DEFAULT_THETA_NODES,
            quadrature_phi: DEFAULT_PHI_NODES,
            truncation: None,
            loading: 0.0,
        }
    }
}

const CONFIG_KEYS: &[&str] = &[
    "antennas",
    "pattern",
    "spacing",
    "spacing_start",
    "spacing_stop",
    "spacing_steps",
    "theta0",
    "phi0",
    "efficiency",
    "coupling",
    "quadrature_theta",
    "quadrature_phi",
    "truncation",
    "loading",
];

/// Parses `start:stop:steps`.
pub fn parse_spacing_range(text: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [a, b, n] => Ok((
            parse_f64(a)?,
            parse_f64(b)?,
            n.trim()
                .parse()
                .map_err(|_| Error::Domain(format!("`{n}` is not a step count")))?,
        )),
        [a] => {
            let d = parse_f64(a)?;
            Ok((d, d, 1))
        }
        _ => Err(Error::Domain(format!("spacing `{text}` is not start:stop:steps"))),
    }
}

impl SweepSpec {
    /// Parses a flat `key = value` file. Unknown or repeated keys are errors.
    pub fn from_config(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
            let key = key.trim();
            let value = value.trim();
            if !CONFIG_KEYS.contains(&key) {
                return Err(err(format!("unknown key `{key}`")));
            }
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            spec.set(key, value).map_err(|e| err(e.to_string()))?;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Applies one configuration entry.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let int = |v: &str| -> Result<usize> { v.parse().map_err(|_| Error::Domain(format!("`{v}` is not an integer"))) };
        match key {
            "antennas" => self.antennas = int(value)?,
            "pattern" => self.pattern = parse_pattern(value)?,
            "spacing" => {
                let (a, b, n) = parse_spacing_range(value)?;
                self.spacing_start = a;
                self.spacing_stop = b;
                self.spacing_steps = n;
            }
            "spacing_start" => self.spacing_start = parse_f64(value)?,
            "spacing_stop" => self.spacing_stop = parse_f64(value)?,
            "spacing_steps" => self.spacing_steps = int(value)?,
            "theta0" => self.theta0_deg = parse_f64(value)?,
            "phi0" => self.phi0_deg = parse_f64(value)?,
            "efficiency" => self.efficiency = parse_f64(value)?,
            "coupling" => self.coupling = CouplingSpec::parse(value)?,
            "quadrature_theta" => self.quadrature_theta = int(value)?,
            "quadrature_phi" => self.quadrature_phi = int(value)?,
            "truncation" => self.truncation = Some(int(value)?),
            "loading" => self.loading = parse_f64(value)?,
            other => return Err(Error::Domain(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 {
            return Err(Error::Domain("antennas must be >= 1".into()));
        }
        if !(self.spacing_start > 0.0 && self.spacing_start.is_finite()) {
            return Err(Error::Domain("spacing_start must be > 0".into()));
        }
        if !(self.spacing_stop >= self.spacing_start && self.spacing_stop.is_finite()) {
            return Err(Error::Domain("spacing_stop must be >= spacing_start".into()));
        }
        if self.spacing_steps == 0 {
            return Err(Error::Domain("spacing_steps must be >= 1".into()));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::Domain(format!("efficiency must lie in (0, 1], got {}", self.efficiency)));
        }
        if !(0.0..=180.0).contains(&self.theta0_deg) || !self.phi0_deg.is_finite() {
            return Err(Error::Domain("theta0 must lie in [0, 180] degrees".into()));
        }
        if !(self.loading >= 0.0 && self.loading.is_finite()) {
            return Err(Error::Domain("loading must be >= 0".into()));
        }
        if self.quadrature_theta == 0 || self.quadrature_phi == 0 {
            return Err(Error::Domain("quadrature densities must be >= 1".into()));
        }
        Ok(())
    }

    pub fn spacings(&self) -> Vec<f64> {
        if self.spacing_steps == 1 {
            return vec![self.spacing_start];
        }
        let step = (self.spacing_stop - self.spacing_start) / (self.spacing_steps - 1) as f64;
        (0..self.spacing_steps)
            .map(|i| {
                if i + 1 == self.spacing_steps {
                    self.spacing_stop
                } else {
                    self.spacing_start + i as f64 * step
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub spacing: f64,
    /// `eᴴ Z⁻¹ e`, ignoring coupling.
    pub dmax: f64,
    /// Uncoupled-optimal drive evaluated in the coupled model.
    pub d_traditional: f64,
    /// Coupling-compensated drive evaluated in the coupled model.
    pub d_coupled: f64,
    pub gain: f64,
    pub cond_z: f64,
    /// Set when the point could not be computed; numeric fields are NaN.
    pub flag: Option<String>,
}

impl SweepRow {
    fn failed(spacing: f64, cond_z: f64, err: &Error) -> Self {
        Self {
            spacing,
            dmax: f64::NAN,
            d_traditional: f64::NAN,
            d_coupled: f64::NAN,
            gain: f64::NAN,
            cond_z,
            flag: Some(err.to_string()),
        }
    }
}

/// Resolved coupling source.
enum Coupling {
    Fixed(CouplingMatrix),
    Fixture(FixtureParams),
}

fn resolve_coupling(source: &CouplingSpec, antennas: usize) -> Result<Coupling> {
    let fixed = match source {
        CouplingSpec::Identity => CouplingMatrix::identity(antennas),
        CouplingSpec::Matrix(c) => c.clone(),
        CouplingSpec::File(path) => read_coupling_csv(&std::fs::read_to_string(path)?)?,
        CouplingSpec::Synthetic(p) if p.estimate => return Ok(Coupling::Fixture(*p)),
        CouplingSpec::Synthetic(p) => CouplingMatrix::fixture(antennas, p.gamma, p.beta, p.asymmetry)?,
    };
    if fixed.dim() != antennas {
        return Err(Error::Dimension {
            expected: antennas,
            got: fixed.dim(),
        });
    }
    Ok(Coupling::Fixed(fixed))
}

fn coupling_at(
    coupling: &Coupling,
    geometry: &ArrayGeometry,
    pattern: &ElementPattern,
    truncation: Option<usize>,
) -> Result<CouplingMatrix> {
    match coupling {
        Coupling::Fixed(c) => Ok(c.clone()),
        Coupling::Fixture(p) => {
            let truth = CouplingMatrix::fixture(geometry.element_count(), p.gamma, p.beta, p.asymmetry)?;
            let n = match truncation {
                Some(n) => n,
                None => default_truncation(geometry)?,
            };
            let grid = default_grid(n);
            let isolated = isolated_fields_synthetic(geometry, pattern, &grid)?;
            let active = synthesize_coupled_fields(&isolated, &truth)?;
            ElementFieldLibrary::new(isolated, active)?.estimate(n)
        }
    }
}

fn sweep_point(spec: &SweepSpec, coupling: &Coupling, quadrature: &SphereQuadrature, spacing: f64) -> SweepRow {
    let mut cond = f64::NAN;
    let result = (|| -> Result<SweepRow> {
        let geometry = ArrayGeometry::uniform_linear(spec.antennas, spacing)?;
        let z = impedance_matrix(&geometry, &spec.pattern, quadrature)?.with_loading(spec.loading)?;
        cond = z.condition_number();
        let e = steering_vector(
            &geometry,
            &spec.pattern,
            spec.theta0_deg.to_radians(),
            spec.phi0_deg.to_radians(),
        )?;
        let c = coupling_at(coupling, &geometry, &spec.pattern, spec.truncation)?;
        let plain = optimal_beamforming(&z, &e)?;
        let compensated = coupled_beamforming(&z, &c, &e)?;
        let d_traditional = coupled_directivity(&z, &c, &e, &plain.excitation)?;
        let g = gain(&z, &c, &e, &compensated.excitation, spec.efficiency)?;
        Ok(SweepRow {
            spacing,
            dmax: plain.directivity,
            d_traditional,
            d_coupled: compensated.directivity,
            gain: g.value,
            cond_z: z.condition_number(),
            flag: None,
        })
    })();
    result.unwrap_or_else(|e| {
        log::warn!("sweep point d={spacing}: {e}");
        SweepRow::failed(spacing, cond, &e)
    })
}

/// Runs the sweep on the current rayon pool. Rows are in ascending spacing
/// order and each row is computed independently, so the output does not
/// depend on the number of threads.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let quadrature = SphereQuadrature::gauss_product(spec.quadrature_theta, spec.quadrature_phi)?;
    let coupling = resolve_coupling(&spec.coupling, spec.antennas)?;
    Ok(spec
        .spacings()
        .into_par_iter()
        .map(|d| sweep_point(spec, &coupling, &quadrature, d))
        .collect())
}

/// Runs the sweep on a dedicated pool with `threads` workers.
pub fn run_sweep_with_threads(spec: &SweepSpec, threads: usize) -> Result<Vec<SweepRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    pool.install(|| run_sweep(spec))
}

pub fn write_sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(r.spacing),
            fmt_f64(r.dmax),
            fmt_f64(r.d_traditional),
            fmt_f64(r.d_coupled),
            fmt_f64(r.gain),
            fmt_f64(r.cond_z)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing_is_strict() {
        let spec = SweepSpec::from_config(
            "# demo\nantennas = 4\npattern = half-wave\nspacing = 0.1:0.5:5\ntheta0 = 0 # endfire\nefficiency = 0.96\ncoupling = synthetic:gamma=0.2,beta=1.0\n",
        )
        .unwrap();
        assert_eq!(spec.antennas, 4);
        assert_eq!(spec.pattern, ElementPattern::half_wave_dipole());
        assert_eq!(spec.spacings(), vec![0.1, 0.2, 0.30000000000000004, 0.4, 0.5]);
        assert_eq!(
            spec.coupling,
            CouplingSpec::Synthetic(FixtureParams {
                gamma: 0.2,
                beta: 1.0,
                asymmetry: 0.0,
                estimate: false
            })
        );

        assert!(matches!(SweepSpec::from_config("antenas = 4\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(SweepSpec::from_config("antennas = 4\nantennas = 3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(SweepSpec::from_config("\nefficiency\n"), Err(Error::Parse { line: 2, .. })));
        assert!(SweepSpec::from_config("efficiency = 1.5\n").is_err());
        assert!(SweepSpec::from_config("spacing = 0:0.5:3\n").is_err());
        assert!(SweepSpec::from_config("spacing = 0.1:0.5:0\n").is_err());
    }

    #[test]
    fn coupling_spec_forms() {
        assert_eq!(CouplingSpec::parse("identity").unwrap(), CouplingSpec::Identity);
        assert_eq!(CouplingSpec::parse("file:c.csv").unwrap(), CouplingSpec::File("c.csv".into()));
        assert_eq!(CouplingSpec::parse("c.csv").unwrap(), CouplingSpec::File("c.csv".into()));
        let CouplingSpec::Synthetic(p) = CouplingSpec::parse("synthetic:asymmetry=0.1,estimate").unwrap() else {
            panic!()
        };
        assert!(p.estimate && p.asymmetry == 0.1);
        assert!(CouplingSpec::parse("synthetic:foo=1").is_err());
    }

    #[test]
    fn single_half_wavelength_row() {
        let spec = SweepSpec {
            antennas: 2,
            spacing_start: 0.5,
            spacing_stop: 0.5,
            spacing_steps: 1,
            theta0_deg: 90.0,
            ..SweepSpec::default()
        };
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 1);
        assert!((rows[0].dmax - 2.0).abs() < 1e-10);
        assert!((rows[0].d_coupled - 2.0).abs() < 1e-10);
    }

    #[test]
    fn singular_point_is_flagged_not_fatal() {
        // a tabulated pattern whose |k|² is zero everywhere gives Z = 0
        use crate::array::SampledGrid;
        use num_complex::Complex64;
        let dead = SampledGrid::from_fn(5, 4, |_, _| Complex64::new(0.0, 0.0)).unwrap();
        let spec = SweepSpec {
            antennas: 2,
            pattern: ElementPattern::sampled(dead),
            spacing_steps: 2,
            ..SweepSpec::default()
        };
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.flag.is_some() && r.dmax.is_nan()));
        assert!(write_sweep_csv(&rows).contains("NaN"));
    }
}
