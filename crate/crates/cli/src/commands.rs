use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use superdir::coupling::default_truncation;
use superdir::io::{fmt_f64, read_field_csv, write_coefficients_csv, write_coupling_csv, write_field_csv};
use superdir::swe::{default_grid, mode_count};
use superdir::sweep::{parse_pattern, parse_spacing_range};
use superdir::{
    coupled_beamforming, coupled_directivity, fit_wave_coefficients, gain, impedance_matrix,
    impedance_matrix_certified, isolated_fields_synthetic, loss_resistance, optimal_beamforming, run_sweep,
    steering_vector, synthesize_coupled_fields, truncation_degree, write_sweep_csv, ArrayGeometry, CouplingMatrix,
    CouplingSpec, ElementFieldLibrary, ElementPattern, FieldSampleSet, SphereQuadrature, SweepSpec,
};

use crate::error::{CliError, CliResult};
use crate::format::{complex4, dbi, sig4};
use crate::{
    ArrayArgs, BeamformArgs, EstimateArgs, ImpedanceArgs, PatternArg, QuadratureArgs, SweFitArgs, SweepArgs,
    SynthArgs, TruncationArgs,
};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

fn pattern(arg: PatternArg) -> ElementPattern {
    parse_pattern(arg.config_name()).expect("every pattern flag names a known pattern")
}

fn geometry(array: &ArrayArgs) -> CliResult<ArrayGeometry> {
    ArrayGeometry::uniform_linear(array.antennas, array.spacing).map_err(CliError::usage)
}

fn quadrature(q: &QuadratureArgs) -> CliResult<SphereQuadrature> {
    SphereQuadrature::gauss_product(q.quadrature_theta, q.quadrature_phi).map_err(CliError::usage)
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_field(path: &Path) -> CliResult<FieldSampleSet> {
    read_field_csv(&read_text(path)?).map_err(|e| CliError::in_file(path, e))
}

fn write_text(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Writes `csv` to `output` or standard output. The summary goes to standard
/// output when the CSV went to a file, and to standard error otherwise.
fn emit(output: Option<&Path>, csv: &str, summary: &str) -> CliResult {
    match output {
        Some(path) => {
            write_text(path, csv)?;
            print!("{summary}");
        }
        None => {
            print!("{csv}");
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn check_angles(theta0: f64, phi0: f64) -> CliResult {
    if !(0.0..=180.0).contains(&theta0) || !phi0.is_finite() {
        return Err(CliError::Usage(format!(
            "steering direction theta0={theta0}, phi0={phi0} is invalid; theta0 must lie in [0, 180] degrees"
        )));
    }
    Ok(())
}

pub fn impedance(args: &ImpedanceArgs) -> CliResult {
    let geometry = geometry(&args.array)?;
    let pattern = pattern(args.array.pattern);
    let rule = quadrature(&args.quadrature)?;
    let z = match args.certify {
        Some(tol) if !(tol > 0.0) => return Err(CliError::Usage("--certify tolerance must be > 0".into())),
        Some(tol) => impedance_matrix_certified(&geometry, &pattern, &rule, tol)?,
        None => impedance_matrix(&geometry, &pattern, &rule)?,
    };
    let m = z.dim();
    if let Some(path) = &args.output {
        let mut csv = String::from("row,col,value\n");
        for r in 0..m {
            for c in 0..m {
                let _ = writeln!(csv, "{r},{c},{}", fmt_f64(z.values()[(r, c)]));
            }
        }
        write_text(path, &csv)?;
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Z for {m} {} elements at {} wavelengths ({}x{} quadrature)",
        pattern.name(),
        sig4(geometry.spacing()),
        rule.theta_count(),
        rule.phi_count()
    );
    for r in 0..m {
        let row: Vec<String> = (0..m).map(|c| format!("{:>11}", sig4(z.values()[(r, c)]))).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    let _ = writeln!(out, "condition number: {}", sig4(z.condition_number()));
    print!("{out}");
    Ok(())
}

fn coupling_matrix(
    source: &CouplingSpec,
    geometry: &ArrayGeometry,
    pattern: &ElementPattern,
    truncation: Option<usize>,
) -> CliResult<CouplingMatrix> {
    source.matrix_for(geometry, pattern, truncation).map_err(|e| match source {
        CouplingSpec::File(path) => CliError::in_file(path, e),
        _ => e.into(),
    })
}

pub fn beamform(args: &BeamformArgs) -> CliResult {
    let geometry = geometry(&args.array)?;
    let pattern = pattern(args.array.pattern);
    let rule = quadrature(&args.quadrature)?;
    check_angles(args.theta0, args.phi0)?;
    loss_resistance(args.efficiency).map_err(CliError::usage)?;
    if !(args.loading >= 0.0 && args.loading.is_finite()) {
        return Err(CliError::Usage("--loading must be >= 0".into()));
    }
    let source = CouplingSpec::parse(&args.coupling).map_err(CliError::usage)?;

    let z = impedance_matrix(&geometry, &pattern, &rule)?.with_loading(args.loading)?;
    let e = steering_vector(&geometry, &pattern, args.theta0.to_radians(), args.phi0.to_radians())?;
    let c = coupling_matrix(&source, &geometry, &pattern, args.truncation)?;
    let plain = optimal_beamforming(&z, &e)?;
    let uncoupled_model = matches!(source, CouplingSpec::Identity);
    let (excitation, directivity) = if uncoupled_model {
        (plain.excitation.clone(), plain.directivity)
    } else {
        let compensated = coupled_beamforming(&z, &c, &e)?;
        (compensated.excitation, compensated.directivity)
    };
    let g = gain(&z, &c, &e, &excitation, args.efficiency)?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} elements, spacing {} wavelengths, steering theta0={} phi0={} deg",
        geometry.element_count(),
        pattern.name(),
        sig4(geometry.spacing()),
        sig4(args.theta0),
        sig4(args.phi0)
    );
    let _ = writeln!(out, "coupling: {}", args.coupling.trim());
    let _ = writeln!(out, "excitation (unit radiated power):");
    for (i, a) in excitation.iter().enumerate() {
        let _ = writeln!(
            out,
            "  [{i}] {:>22}  |a| = {:<10} arg = {} deg",
            complex4(*a),
            sig4(a.norm()),
            sig4(a.arg().to_degrees())
        );
    }
    let _ = writeln!(out, "directivity: {} ({} dBi)", sig4(directivity), sig4(dbi(directivity)));
    if !uncoupled_model {
        let traditional = coupled_directivity(&z, &c, &e, &plain.excitation)?;
        let _ = writeln!(
            out,
            "uncoupled drive in coupled model: {} ({} dBi)",
            sig4(traditional),
            sig4(dbi(traditional))
        );
        let _ = writeln!(
            out,
            "uncoupled optimum: {} ({} dBi)",
            sig4(plain.directivity),
            sig4(dbi(plain.directivity))
        );
    }
    let _ = writeln!(
        out,
        "gain at efficiency {}: {} ({} dBi)",
        sig4(args.efficiency),
        sig4(g.value),
        sig4(dbi(g.value))
    );
    let _ = writeln!(out, "condition number of Z: {}", sig4(z.condition_number()));
    print!("{out}");
    Ok(())
}

pub fn sweep(args: &SweepArgs) -> CliResult {
    let mut spec = match &args.config {
        Some(path) => SweepSpec::from_config(&read_text(path)?).map_err(|e| CliError::in_file(path, e))?,
        None => SweepSpec::default(),
    };
    if let Some(v) = args.antennas {
        spec.antennas = v;
    }
    if let Some(v) = args.pattern {
        spec.pattern = pattern(v);
    }
    if let Some(v) = &args.spacing {
        let (start, stop, steps) = parse_spacing_range(v).map_err(CliError::usage)?;
        spec.spacing_start = start;
        spec.spacing_stop = stop;
        spec.spacing_steps = steps;
    }
    if let Some(v) = args.theta0 {
        spec.theta0_deg = v;
    }
    if let Some(v) = args.phi0 {
        spec.phi0_deg = v;
    }
    if let Some(v) = args.efficiency {
        spec.efficiency = v;
    }
    if let Some(v) = &args.coupling {
        spec.coupling = CouplingSpec::parse(v).map_err(CliError::usage)?;
    }
    if let Some(v) = args.quadrature_theta {
        spec.quadrature_theta = v;
    }
    if let Some(v) = args.quadrature_phi {
        spec.quadrature_phi = v;
    }
    if args.truncation.is_some() {
        spec.truncation = args.truncation;
    }
    if let Some(v) = args.loading {
        spec.loading = v;
    }
    spec.validate().map_err(CliError::usage)?;

    let rows = run_sweep(&spec).map_err(|e| match &spec.coupling {
        CouplingSpec::File(path) => CliError::in_file(path, e),
        _ => e.into(),
    })?;
    let flagged = rows.iter().filter(|r| r.flag.is_some()).count();
    let summary = format!("{} spacings, {flagged} flagged\n", rows.len());
    emit(args.output.as_deref(), &write_sweep_csv(&rows), &summary)
}

impl TruncationArgs {
    fn resolve(&self) -> CliResult<Option<usize>> {
        if let Some(n) = self.truncation {
            if n == 0 {
                return Err(CliError::Usage("--truncation must be >= 1".into()));
            }
            return Ok(Some(n));
        }
        let radius = match (self.radius, self.radius_m) {
            (Some(r), _) => r,
            (None, Some(r_m)) => {
                if !(self.frequency > 0.0 && self.frequency.is_finite()) {
                    return Err(CliError::Usage("--frequency must be > 0".into()));
                }
                r_m * self.frequency / SPEED_OF_LIGHT
            }
            (None, None) => return Ok(None),
        };
        truncation_degree(radius).map(Some).map_err(CliError::usage)
    }
}

pub fn swe_fit(args: &SweFitArgs) -> CliResult {
    let n = args.truncation.resolve()?.ok_or_else(|| {
        CliError::Usage("one of --truncation, --radius or --radius-m is required".into())
    })?;
    let field = read_field(&args.input)?;
    let fit = fit_wave_coefficients(&field, n).map_err(|e| CliError::in_file(&args.input, e))?;
    let summary = format!(
        "truncation {n}: {} modes from {} directions, residual {:.3e}\n",
        mode_count(n),
        field.len(),
        fit.residual
    );
    emit(args.output.as_deref(), &write_coefficients_csv(&fit), &summary)
}

pub fn coupling_estimate(args: &EstimateArgs) -> CliResult {
    let m = args.isolated.len();
    if args.active.len() != m {
        return Err(CliError::Usage(format!(
            "{m} isolated field files but {} active field files",
            args.active.len()
        )));
    }
    let n = match (args.truncation.resolve()?, args.spacing) {
        (Some(n), _) => n,
        (None, Some(d)) => {
            let geometry = ArrayGeometry::uniform_linear(m, d).map_err(CliError::usage)?;
            default_truncation(&geometry).map_err(CliError::usage)?
        }
        (None, None) => {
            return Err(CliError::Usage(
                "one of --truncation, --radius, --radius-m or --spacing is required".into(),
            ))
        }
    };
    let isolated = args.isolated.iter().map(|p| read_field(p)).collect::<CliResult<Vec<_>>>()?;
    let active = args.active.iter().map(|p| read_field(p)).collect::<CliResult<Vec<_>>>()?;
    let library = ElementFieldLibrary::new(isolated, active)?;
    let c = library.estimate(n)?;
    let residual = c.estimation_residual().unwrap_or(0.0);
    let summary = format!("truncation {n}, {m} elements\nresidual: {residual:.3e}\n");
    emit(args.output.as_deref(), &write_coupling_csv(&c), &summary)
}

pub fn coupling_synth(args: &SynthArgs) -> CliResult {
    let geometry = geometry(&args.array)?;
    let pattern = pattern(args.array.pattern);
    let truth = CouplingMatrix::fixture(geometry.element_count(), args.gamma, args.beta, args.asymmetry)
        .map_err(CliError::usage)?;
    let n = match args.truncation {
        Some(0) => return Err(CliError::Usage("--truncation must be >= 1".into())),
        Some(n) => n,
        None => default_truncation(&geometry).map_err(CliError::usage)?,
    };
    let grid = default_grid(n);
    let isolated = isolated_fields_synthetic(&geometry, &pattern, &grid)?;
    let active = synthesize_coupled_fields(&isolated, &truth)?;

    fs::create_dir_all(&args.out_dir).map_err(|e| CliError::Data(format!("{}: {e}", args.out_dir.display())))?;
    let file = |name: String| -> PathBuf { args.out_dir.join(name) };
    for (k, (iso, act)) in isolated.iter().zip(&active).enumerate() {
        write_text(&file(format!("isolated_{k}.csv")), &write_field_csv(iso))?;
        write_text(&file(format!("active_{k}.csv")), &write_field_csv(act))?;
    }
    write_text(&file("coupling_true.csv".into()), &write_coupling_csv(&truth))?;
    println!(
        "wrote {} element pairs on the truncation-{n} grid ({} directions) to {}",
        geometry.element_count(),
        grid.len(),
        args.out_dir.display()
    );
    Ok(())
}
