//! Batch front end behind the `bgreen` binary.
//!
//! Every invocation is first resolved into a [`RunConfig`]. `--emit-config` prints that
//! JSON instead of running, and `--config FILE` runs one, so a printed config replays
//! the same table bit for bit.

use crate::error::{Error, Result};
use crate::fourier_kernel::{psi_bar_matrix_route, FourierPoint};
use crate::identities::{identity_suite, Check};
use crate::inversion::{
    energy_density, energy_density_integrand, invert_bessel_batch, invert_full_batch, isotropic_reference_energy_density,
    shell_uncollided_density, EnergyDensity, FieldPoint, FluxResult, QuadratureSpec, Route, SingularKind, TailModel,
};
use crate::mc_oracle::{simulate, McConfig, Source};
use crate::special::{Direction, PhaseFunction};
use crate::spectral_recurrence::{psi_bar_ladder, ModeTable};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;

/// Environment variable naming the quadrature preset used as the base for overrides.
pub const QUAD_PROFILE_ENV: &str = "BG_QUAD_PROFILE";

/// Relative agreement required between the two Fourier routes before modes are written.
const MODE_CROSS_CHECK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Real-space route for `angular-flux`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FluxRoute {
    #[default]
    Spectral,
    Matrix,
    /// Azimuthal Bessel reduction; needs the source along `+z`.
    Bessel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    #[default]
    Isotropic,
    Beam,
}

/// Fully resolved run: what to compute and where to write it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    #[serde(default)]
    pub output: OutputFormat,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    Density {
        c: f64,
        beta: Vec<f64>,
        r: Vec<f64>,
        quadrature: QuadratureSpec,
        /// Use the isotropic-scattering transform instead of the general one.
        #[serde(default)]
        reference: bool,
    },
    AngularFlux {
        c: f64,
        beta: Vec<f64>,
        r: Vec<f64>,
        rhat: Direction,
        omega: Direction,
        omega0: Direction,
        route: FluxRoute,
        quadrature: QuadratureSpec,
    },
    FourierModes {
        c: f64,
        beta: Vec<f64>,
        k: f64,
        khat: Direction,
        omega0: Direction,
        lmax: usize,
    },
    Mc {
        c: f64,
        beta: Vec<f64>,
        shells: Vec<f64>,
        histories: u64,
        seed: u64,
        source: SourceKind,
        omega0: Direction,
        max_scatter_order: Option<u32>,
    },
    Verify {
        quadrature: QuadratureSpec,
        histories: u64,
        seed: u64,
    },
}

#[derive(Parser, Debug)]
#[command(name = "bgreen", version, about = "Point-source Green's function of the linear Boltzmann equation")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Run a JSON config produced by --emit-config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the resolved config as JSON and exit.
    #[arg(long, global = true)]
    emit_config: bool,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    output: Option<OutputFormat>,
    /// Write the table here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Energy density of an isotropic point source.
    Density {
        #[command(flatten)]
        phase: PhaseArgs,
        /// Radii, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<f64>,
        #[arg(long)]
        reference: bool,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Angular flux along a ray from the source.
    AngularFlux {
        #[command(flatten)]
        phase: PhaseArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<f64>,
        /// Direction of the ray holding the field points, "theta,phi".
        #[arg(long, default_value = "0,0")]
        rhat: String,
        /// Flight direction, "theta,phi".
        #[arg(long, default_value = "0,0")]
        omega: String,
        /// Source direction, "theta,phi".
        #[arg(long, default_value = "0,0")]
        omega0: String,
        #[arg(long, value_enum, default_value_t = FluxRoute::Spectral)]
        route: FluxRoute,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Fourier moments and lab-frame coefficients at one wave vector.
    FourierModes {
        #[command(flatten)]
        phase: PhaseArgs,
        #[arg(long)]
        k: f64,
        #[arg(long, default_value = "0,0")]
        khat: String,
        #[arg(long, default_value = "0,0")]
        omega0: String,
        #[arg(long, default_value_t = 12)]
        lmax: usize,
    },
    /// Monte Carlo shell densities.
    Mc {
        #[command(flatten)]
        phase: PhaseArgs,
        /// Shell edges, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        shells: Vec<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        histories: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SourceKind::Isotropic)]
        source: SourceKind,
        #[arg(long, default_value = "0,0")]
        omega0: String,
        #[arg(long)]
        max_scatter_order: Option<u32>,
    },
    /// Run the invariant suite.
    Verify {
        #[arg(long, default_value_t = 200_000)]
        histories: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        quad: QuadArgs,
    },
}

#[derive(Args, Debug)]
struct PhaseArgs {
    /// Single-scattering albedo.
    #[arg(long)]
    c: f64,
    /// Legendre coefficients beta_0..beta_L, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    beta: Vec<f64>,
}

#[derive(Args, Debug)]
struct QuadArgs {
    #[arg(long)]
    k_max: Option<f64>,
    #[arg(long)]
    n_k: Option<usize>,
    #[arg(long)]
    n_mu: Option<usize>,
    #[arg(long)]
    n_phi: Option<usize>,
    #[arg(long)]
    lmax: Option<usize>,
    #[arg(long, value_parser = parse_tail)]
    tail_model: Option<TailModel>,
}

fn parse_tail(s: &str) -> std::result::Result<TailModel, String> {
    match s {
        "none" => Ok(TailModel::None),
        "inverse-square" => Ok(TailModel::InverseSquare),
        _ => Err(format!("expected none or inverse-square, got '{s}'")),
    }
}

impl QuadArgs {
    fn resolve(&self, base: QuadratureSpec) -> QuadratureSpec {
        QuadratureSpec {
            k_max: self.k_max.unwrap_or(base.k_max),
            n_k: self.n_k.unwrap_or(base.n_k),
            n_mu: self.n_mu.unwrap_or(base.n_mu),
            n_phi: self.n_phi.unwrap_or(base.n_phi),
            lmax: self.lmax.unwrap_or(base.lmax),
            tail_model: self.tail_model.unwrap_or(base.tail_model),
        }
    }
}

/// Parse `"theta,phi"` in radians.
pub fn parse_direction(s: &str) -> Result<Direction> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad angle '{t}' in '{s}'")));
    match parts.as_slice() {
        [t, p] => Direction::new(num(t)?, num(p)?),
        _ => Err(Error::InvalidInput(format!("direction must be 'theta,phi' in radians, got '{s}'"))),
    }
}

/// Quadrature preset selected by [`QUAD_PROFILE_ENV`], or the default.
pub fn base_quadrature() -> Result<QuadratureSpec> {
    match std::env::var(QUAD_PROFILE_ENV) {
        Ok(name) if !name.is_empty() => QuadratureSpec::profile(&name),
        _ => Ok(QuadratureSpec::default()),
    }
}

fn resolve(cli: Cli) -> Result<RunConfig> {
    if let Some(path) = &cli.config {
        if cli.command.is_some() {
            return Err(Error::InvalidInput("--config replaces the subcommand; give one or the other".into()));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("bad config {}: {e}", path.display())))?;
        cfg.output = cli.output.unwrap_or(cfg.output);
        cfg.out = cli.out.or(cfg.out);
        cfg.threads = cli.threads.or(cfg.threads);
        return Ok(cfg);
    }
    let command = cli.command.ok_or_else(|| Error::InvalidInput("no subcommand given".into()))?;
    let base = base_quadrature()?;
    let task = match command {
        Command::Density { phase, r, reference, quad } => {
            Task::Density { c: phase.c, beta: phase.beta, r, quadrature: quad.resolve(base), reference }
        }
        Command::AngularFlux { phase, r, rhat, omega, omega0, route, quad } => Task::AngularFlux {
            c: phase.c,
            beta: phase.beta,
            r,
            rhat: parse_direction(&rhat)?,
            omega: parse_direction(&omega)?,
            omega0: parse_direction(&omega0)?,
            route,
            quadrature: quad.resolve(base),
        },
        Command::FourierModes { phase, k, khat, omega0, lmax } => Task::FourierModes {
            c: phase.c,
            beta: phase.beta,
            k,
            khat: parse_direction(&khat)?,
            omega0: parse_direction(&omega0)?,
            lmax,
        },
        Command::Mc { phase, shells, histories, seed, source, omega0, max_scatter_order } => Task::Mc {
            c: phase.c,
            beta: phase.beta,
            shells,
            histories,
            seed,
            source,
            omega0: parse_direction(&omega0)?,
            max_scatter_order,
        },
        Command::Verify { histories, seed, quad } => {
            Task::Verify { quadrature: quad.resolve(QuadratureSpec::fast()), histories, seed }
        }
    };
    Ok(RunConfig { task, output: cli.output.unwrap_or_default(), out: cli.out, threads: cli.threads })
}

/// A finished table, ready to serialize.
#[derive(Clone, Debug, PartialEq)]
pub enum Table {
    Density(Vec<EnergyDensity>),
    Flux(Vec<(f64, FluxResult)>),
    Modes(Vec<ModeRow>),
    Mc(Vec<McRow>),
    Verify(Vec<Check>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    pub l: usize,
    pub m: i32,
    pub re_psibar: f64,
    pub im_psibar: f64,
    pub re_kappa: f64,
    pub im_kappa: f64,
}

/// Monte Carlo shell row in energy-density units (`4 pi` times the scalar flux per source
/// particle), reported at the shell midpoint. `err` is three standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub r: f64,
    pub r_inner: f64,
    pub r_outer: f64,
    pub u_uncollided: f64,
    pub u_scattered: f64,
    pub u_total: f64,
    pub err: f64,
    pub std_error: f64,
}

fn phase_of(c: f64, beta: &[f64]) -> Result<PhaseFunction> {
    PhaseFunction::new(c, beta.to_vec())
}

/// Reject directions that arrived through JSON without passing the constructor.
fn checked(d: Direction) -> Result<Direction> {
    Direction::new(d.theta(), d.phi())
}

/// Compute the table a config asks for.
pub fn execute(task: &Task) -> Result<Table> {
    match task {
        Task::Density { c, beta, r, quadrature, reference } => {
            let phase = phase_of(*c, beta)?;
            quadrature.validate()?;
            let rows = r
                .iter()
                .map(|&r| {
                    if *reference {
                        if phase.degree() != 0 {
                            return Err(Error::InvalidInput("--reference needs isotropic scattering".into()));
                        }
                        isotropic_reference_energy_density(r, *c, quadrature)
                    } else {
                        energy_density(r, &phase, quadrature)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Table::Density(rows))
        }
        Task::AngularFlux { c, beta, r, rhat, omega, omega0, route, quadrature } => {
            let phase = phase_of(*c, beta)?;
            let (rhat, omega, omega0) = (checked(*rhat)?, checked(*omega)?, checked(*omega0)?);
            let e = rhat.to_vector();
            let points: Vec<FieldPoint> =
                r.iter().map(|&r| FieldPoint { r: [r * e[0], r * e[1], r * e[2]], omega }).collect();
            let results = match route {
                FluxRoute::Spectral => invert_full_batch(&points, &omega0, &phase, quadrature, Route::Spectral)?,
                FluxRoute::Matrix => invert_full_batch(&points, &omega0, &phase, quadrature, Route::Matrix)?,
                FluxRoute::Bessel => invert_bessel_batch(&points, &omega0, &phase, quadrature)?,
            };
            Ok(Table::Flux(r.iter().copied().zip(results).collect()))
        }
        Task::FourierModes { c, beta, k, khat, omega0, lmax } => {
            let phase = phase_of(*c, beta)?;
            let kp = FourierPoint::new(*k, checked(*khat)?)?;
            Ok(Table::Modes(fourier_modes(&kp, &checked(*omega0)?, &phase, *lmax)?))
        }
        Task::Mc { c, beta, shells, histories, seed, source, omega0, max_scatter_order } => {
            let phase = phase_of(*c, beta)?;
            let source = match source {
                SourceKind::Isotropic => Source::IsotropicPoint,
                SourceKind::Beam => Source::Beam(checked(*omega0)?),
            };
            let config = McConfig {
                histories: *histories,
                seed: *seed,
                shells: shells.clone(),
                source,
                max_scatter_order: *max_scatter_order,
            };
            Ok(Table::Mc(mc_rows(&phase, &config)?))
        }
        Task::Verify { quadrature, histories, seed } => Ok(Table::Verify(verify_suite(quadrature, *histories, *seed)?)),
    }
}

/// Modes from the ladder, cross-checked order by order against the dense solve.
pub fn fourier_modes(kp: &FourierPoint, omega0: &Direction, phase: &PhaseFunction, lmax: usize) -> Result<Vec<ModeRow>> {
    let table = ModeTable::new(kp, omega0, phase, lmax)?;
    let big_l = phase.degree() as i32;
    for m in -big_l..=big_l {
        let dense = psi_bar_matrix_route(m, kp, omega0, phase)?;
        let ladder = psi_bar_ladder(phase.degree(), m, kp, omega0, phase)?;
        let scale = dense.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (l, (a, b)) in ladder.iter().zip(&dense).enumerate() {
            if (a - b).norm() > MODE_CROSS_CHECK * scale {
                return Err(Error::NumericalConsistency(format!(
                    "Fourier routes disagree at l = {}, m = {m}: {a} vs {b}",
                    l + m.unsigned_abs() as usize
                )));
            }
        }
    }
    let mut rows = Vec::new();
    for l in 0..=lmax {
        for m in -(l as i32)..=(l as i32) {
            let (p, k) = (table.psibar(l, m), table.kappa(l, m));
            rows.push(ModeRow { l, m, re_psibar: p.re, im_psibar: p.im, re_kappa: k.re, im_kappa: k.im });
        }
    }
    Ok(rows)
}

pub fn mc_rows(phase: &PhaseFunction, config: &McConfig) -> Result<Vec<McRow>> {
    let est = simulate(phase, config)?;
    let scale = 4.0 * PI;
    Ok((0..est.density.len())
        .map(|i| {
            let (a, b) = est.shell(i);
            let unc = est.order_density[0][i];
            McRow {
                r: 0.5 * (a + b),
                r_inner: a,
                r_outer: b,
                u_uncollided: scale * unc,
                u_scattered: scale * (est.density[i] - unc),
                u_total: scale * est.density[i],
                err: 3.0 * scale * est.std_error[i],
                std_error: scale * est.std_error[i],
            }
        })
        .collect())
}

/// Identity suite plus end-to-end checks at the given quadrature.
pub fn verify_suite(quad: &QuadratureSpec, histories: u64, seed: u64) -> Result<Vec<Check>> {
    let mut checks = identity_suite()?;

    let mut worst: f64 = 0.0;
    for c in [0.3, 0.9] {
        let p = PhaseFunction::isotropic(c)?;
        for r in [0.5, 1.0, 2.0, 5.0] {
            let a = energy_density(r, &p, quad)?.total;
            let b = isotropic_reference_energy_density(r, c, quad)?.total;
            worst = worst.max((a - b).abs() / b.abs());
        }
    }
    checks.push(Check { name: "isotropic-limit energy density".into(), error: worst, tolerance: 1e-8 });

    let cases = [
        (0.8, vec![1.0, 1.5, 0.9, 0.4], 0.05, (1.0, 0.4), (0.6, 2.0)),
        (0.6, vec![1.0, 2.4, 1.6, 0.7, 0.2, 0.05], 2.5, (2.1, 4.0), (0.3, 1.1)),
        (0.95, vec![1.0, 0.9], 40.0, (0.5, 0.1), (2.9, 5.5)),
    ];
    let mut worst: f64 = 0.0;
    for (c, beta, k, kh, w0) in cases {
        let p = PhaseFunction::new(c, beta)?;
        let kp = FourierPoint::new(k, Direction::new(kh.0, kh.1)?)?;
        let w0 = Direction::new(w0.0, w0.1)?;
        for m in -(p.degree() as i32)..=(p.degree() as i32) {
            let a = psi_bar_ladder(p.degree(), m, &kp, &w0, &p)?;
            let b = psi_bar_matrix_route(m, &kp, &w0, &p)?;
            for (x, y) in a.iter().zip(&b) {
                if y.norm() > 0.0 {
                    worst = worst.max((x - y).norm() / y.norm());
                }
            }
        }
    }
    checks.push(Check { name: "ladder vs dense solve".into(), error: worst, tolerance: 1e-9 });

    let p = PhaseFunction::new(0.7, vec![1.0, 1.2, 0.4])?;
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let k = 10f64.powf(-3.0 + 6.0 * i as f64 / 199.0);
        let v = energy_density_integrand(k, &p);
        worst = worst.max(if v.is_ok() { 0.0 } else { f64::INFINITY });
    }
    checks.push(Check { name: "energy-density integrand reality".into(), error: worst, tolerance: 0.0 });

    let small = QuadratureSpec { k_max: 4.0, n_k: 48, n_mu: 24, n_phi: 32, lmax: 16, tail_model: TailModel::None };
    let omega0 = Direction::z();
    let points = [
        FieldPoint { r: [0.3, -0.4, 0.5], omega: Direction::new(0.7, 1.0)? },
        FieldPoint { r: [-1.1, 0.2, -0.6], omega: Direction::new(2.3, 4.1)? },
    ];
    let full = invert_full_batch(&points, &omega0, &p, &small, Route::Spectral)?;
    let bessel = invert_bessel_batch(&points, &omega0, &p, &small)?;
    let worst = full
        .iter()
        .zip(&bessel)
        .map(|(a, b)| (a.smooth - b.smooth).abs() / b.smooth.abs())
        .fold(0.0, f64::max);
    checks.push(Check { name: "bessel vs full inversion".into(), error: worst, tolerance: 1e-8 });

    let shells = vec![0.5, 1.0, 2.0];
    let config = McConfig { histories, seed, shells: shells.clone(), source: Source::IsotropicPoint, max_scatter_order: Some(0) };
    let est = simulate(&p, &config)?;
    let mut worst: f64 = 0.0;
    for i in 0..est.density.len() {
        let exact = shell_uncollided_density(shells[i], shells[i + 1])?;
        worst = worst.max((est.density[i] - exact).abs() / est.std_error[i]);
    }
    checks.push(Check { name: "monte carlo uncollided (sigmas)".into(), error: worst, tolerance: 4.0 });
    Ok(checks)
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serialize a table as CSV or JSON.
pub fn render(table: &Table, format: OutputFormat) -> Result<String> {
    let json = |v: serde_json::Result<String>| v.map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")));
    let mut s = String::new();
    match (table, format) {
        (Table::Density(rows), OutputFormat::Csv) => {
            s.push_str("r,u_uncollided,u_scattered,u_total,err\n");
            for d in rows {
                s.push_str(&[d.r, d.uncollided, d.scattered, d.total, d.error].map(sci).join(","));
                s.push('\n');
            }
        }
        (Table::Density(rows), OutputFormat::Json) => s = json(serde_json::to_string_pretty(rows))?,
        (Table::Flux(rows), OutputFormat::Csv) => {
            s.push_str("r,psi_smooth,err,w_uncollided,w_once_collided\n");
            for (r, f) in rows {
                let weight = |kind| f.singular.iter().filter(|t| t.kind == kind).map(|t| t.weight).sum::<f64>();
                let cols = [*r, f.smooth, f.quadrature_error, weight(SingularKind::Uncollided), weight(SingularKind::OnceCollided)];
                s.push_str(&cols.map(sci).join(","));
                s.push('\n');
            }
        }
        (Table::Flux(rows), OutputFormat::Json) => {
            #[derive(Serialize)]
            struct Row<'a> {
                r: f64,
                #[serde(flatten)]
                flux: &'a FluxResult,
            }
            let v: Vec<Row> = rows.iter().map(|(r, flux)| Row { r: *r, flux }).collect();
            s = json(serde_json::to_string_pretty(&v))?;
        }
        (Table::Modes(rows), OutputFormat::Csv) => {
            s.push_str("l,m,re_psibar,im_psibar,re_kappa,im_kappa\n");
            for m in rows {
                let vals = [m.re_psibar, m.im_psibar, m.re_kappa, m.im_kappa].map(sci).join(",");
                s.push_str(&format!("{},{},{vals}\n", m.l, m.m));
            }
        }
        (Table::Modes(rows), OutputFormat::Json) => s = json(serde_json::to_string_pretty(rows))?,
        (Table::Mc(rows), OutputFormat::Csv) => {
            s.push_str("r,u_uncollided,u_scattered,u_total,err,std_error\n");
            for m in rows {
                s.push_str(&[m.r, m.u_uncollided, m.u_scattered, m.u_total, m.err, m.std_error].map(sci).join(","));
                s.push('\n');
            }
        }
        (Table::Mc(rows), OutputFormat::Json) => s = json(serde_json::to_string_pretty(rows))?,
        (Table::Verify(checks), OutputFormat::Csv) => {
            s.push_str("check,passed,error,tolerance\n");
            for c in checks {
                s.push_str(&format!("{},{},{},{}\n", c.name, c.passed(), sci(c.error), sci(c.tolerance)));
            }
        }
        (Table::Verify(checks), OutputFormat::Json) => s = json(serde_json::to_string_pretty(checks))?,
    }
    if format == OutputFormat::Json {
        s.push('\n');
    }
    Ok(s)
}

fn exit_code(e: &Error) -> i32 {
    if e.is_input_error() {
        1
    } else {
        2
    }
}

fn report(e: &Error) -> i32 {
    eprintln!("{}: {e}", e.code());
    exit_code(e)
}

fn write_out(cfg: &RunConfig, text: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidInput(format!("cannot write output: {e}"));
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(io),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(io),
    }
}

fn run_config(cfg: &RunConfig) -> Result<Table> {
    match cfg.threads {
        Some(0) => Err(Error::InvalidInput("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidInput(format!("cannot start {n} threads: {e}")))?;
            pool.install(|| execute(&cfg.task))
        }
        None => execute(&cfg.task),
    }
}

/// Run the command line `argv` (program name first) and return the process exit code:
/// 0 on success, 1 for invalid input, 2 for a failed numerical check.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            if code == 1 {
                eprint!("E_INPUT: {e}");
            } else {
                print!("{e}");
            }
            return code;
        }
    };
    let emit = cli.emit_config;
    let cfg = match resolve(cli) {
        Ok(c) => c,
        Err(e) => return report(&e),
    };
    if emit {
        let text = serde_json::to_string_pretty(&cfg).expect("config serializes") + "\n";
        return match std::io::stdout().write_all(text.as_bytes()) {
            Ok(()) => 0,
            Err(_) => 1,
        };
    }
    let table = match run_config(&cfg) {
        Ok(t) => t,
        Err(e) => return report(&e),
    };
    let text = match render(&table, cfg.output) {
        Ok(t) => t,
        Err(e) => return report(&e),
    };
    if let Err(e) = write_out(&cfg, &text) {
        return report(&e);
    }
    if let Table::Verify(checks) = &table {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
        if !failed.is_empty() {
            eprintln!("E_CONSISTENCY: failed checks: {}", failed.join(", "));
            return 2;
        }
    }
    0
}
