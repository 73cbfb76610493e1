mod fields;
mod flow;
mod output;
mod verify;

use std::fs;
use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use flowgeom::flows::FlowSpec;
use flowgeom::gaussbonnet::{euler_number, Region};
use flowgeom::io::{format_float, parse_constant, parse_grid, parse_points_csv, GridSpec};
use flowgeom::legendre::{dual_ma_residual, from_dual, to_dual};
use flowgeom::Error;
use serde_json::{json, Value};

use fields::Cell;
use flow::FlowArgs;
use output::{Manifest, Table};

#[derive(Parser)]
#[command(name = "flowgeom", version, about = "Geometric diagnostics of analytic incompressible flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pressure diagnostics, curvatures and metrics on a grid.
    Diagnose(GridCmd),
    /// Stream function, velocity and pressure on a grid.
    Sample(GridCmd),
    /// Reduced fields of a warped-product flow on a grid over the base.
    Reduce(GridCmd),
    /// Euler number of a region by the local Gauss-Bonnet theorem (JSON).
    GaussBonnet(GaussBonnetCmd),
    /// Legendre dual images of points with inversion and dual equation residuals.
    Legendre(LegendreCmd),
    /// Structure, background and reduction invariants at random points (JSON).
    Verify(verify::VerifyCmd),
    /// Catalog flows and field names.
    List,
}

#[derive(Args)]
pub struct OutArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Record wall time in the manifest (output is then no longer byte-stable).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct GridCmd {
    #[command(flatten)]
    flow: FlowArgs,
    /// Axes as `x=min:max:count,...`, row-major.
    #[arg(long)]
    grid: String,
    /// Comma-separated field names, emitted in this order.
    #[arg(long)]
    fields: String,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct GaussBonnetCmd {
    #[command(flatten)]
    flow: FlowArgs,
    /// Region bounded by a stream-function level, `psi=<value>`.
    #[arg(long, requires = "seed", allow_hyphen_values = true)]
    level: Option<String>,
    /// Interior point `x,y` for `--level`.
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    /// Disc `cx,cy,radius`.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["level", "polygon"])]
    disc: Option<String>,
    /// Polygon vertices `x,y;x,y;...`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "level")]
    polygon: Option<String>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct LegendreCmd {
    #[command(flatten)]
    flow: FlowArgs,
    /// CSV of primal points; columns `x,y` or the first two columns.
    #[arg(long, conflicts_with = "grid")]
    points: Option<String>,
    /// Primal grid instead of a point file.
    #[arg(long, required_unless_present = "points")]
    grid: Option<String>,
    #[command(flatten)]
    out: OutArgs,
}

/// Failure with its exit code.
#[derive(Debug)]
pub enum Failure {
    Runtime(String),
    Usage(String),
    Unknown(String),
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Unknown(_) => 3,
            Failure::Verification(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Runtime(m) | Failure::Usage(m) | Failure::Unknown(m) | Failure::Verification(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::UnknownFlow(_) => Failure::Unknown(format!("{e}; valid flows: {}", flowgeom::flows::CATALOG.join(", "))),
            Error::UnknownField(_) => Failure::Unknown(e.to_string()),
            Error::Parse { .. }
            | Error::UnknownIdentifier { .. }
            | Error::Arity { .. }
            | Error::MissingParameter(_)
            | Error::Domain(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Runtime(e.to_string())
    }
}

fn emit(out: &OutArgs, text: &str) -> Result<(), Failure> {
    match &out.out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn grid_command(kind: &str, cmd: &GridCmd) -> Result<(), Failure> {
    let start = Instant::now();
    let (spec, params) = cmd.flow.build()?;
    let grid = parse_grid(&cmd.grid)?;
    let registry = match kind {
        "diagnose" => fields::diagnose(),
        "sample" => fields::sample(),
        _ => {
            if !spec.is_reduced() {
                return Err(Failure::Usage(format!("flow `{}` is not a warped-product reduction", spec.name)));
            }
            fields::reduce()
        }
    };
    let selected = fields::select(&registry, &cmd.fields, &spec)?;
    let coords = flow::coordinate_map(&spec, &grid)?;
    let eps = cmd.flow.eps_sing;
    let rows = output::sweep(grid.len(), cmd.out.jobs, |i| {
        let g = grid.point(i);
        let point = flow::point_from(&coords, &g);
        let mut row: Vec<String> = g.iter().map(|v| format_float(*v)).collect();
        row.extend(fields::evaluate(&selected, &spec, &point, eps));
        row
    })?;
    let mut header: Vec<String> = grid.names().iter().map(|s| s.to_string()).collect();
    header.extend(selected.iter().map(|f| f.name.to_string()));
    header.push("flag".into());
    let mut m = Manifest::new(kind, &cmd.flow, &spec, &params);
    m.grid = Some(grid.to_string());
    m.fields = selected.iter().map(|f| f.name.to_string()).collect();
    if cmd.out.timing {
        m.timing_s = Some(start.elapsed().as_secs_f64());
    }
    emit(&cmd.out, &Table { manifest: m, header, rows }.render()?)
}

fn pair(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let mut offset = 0;
    text.split(',')
        .map(|s| {
            let v = parse_constant(s, offset);
            offset += s.len() + 1;
            v.map_err(|e| Failure::Usage(format!("{what}: {e}")))
        })
        .collect()
}

fn region_from(cmd: &GaussBonnetCmd, spec: &FlowSpec) -> Result<(Region, Value), Failure> {
    if let Some(level) = &cmd.level {
        let value = level
            .strip_prefix("psi=")
            .ok_or_else(|| Failure::Usage("--level expects `psi=<value>`".into()))
            .and_then(|v| parse_constant(v, 4).map_err(Failure::from))?;
        let seed = pair(cmd.seed.as_deref().unwrap_or_default(), "--seed")?;
        if seed.len() != 2 {
            return Err(Failure::Usage("--seed expects `x,y`".into()));
        }
        let region = Region::level_set(spec, value, [seed[0], seed[1]])?;
        return Ok((region, json!({"kind": "level", "psi": value, "seed": seed})));
    }
    if let Some(d) = &cmd.disc {
        let v = pair(d, "--disc")?;
        if v.len() != 3 || v[2] <= 0.0 {
            return Err(Failure::Usage("--disc expects `cx,cy,radius` with radius > 0".into()));
        }
        return Ok((Region::disc([v[0], v[1]], v[2]), json!({"kind": "disc", "center": [v[0], v[1]], "radius": v[2]})));
    }
    if let Some(p) = &cmd.polygon {
        let verts = p
            .split(';')
            .map(|s| pair(s, "--polygon").and_then(|v| if v.len() == 2 { Ok([v[0], v[1]]) } else { Err(Failure::Usage("--polygon vertices are `x,y`".into())) }))
            .collect::<Result<Vec<_>, _>>()?;
        let region = Region::polygon(&verts).map_err(|e| Failure::Usage(e.to_string()))?;
        return Ok((region, json!({"kind": "polygon", "vertices": verts})));
    }
    Err(Failure::Usage("one of --level, --disc or --polygon is required".into()))
}

fn gauss_bonnet(cmd: &GaussBonnetCmd) -> Result<(), Failure> {
    let start = Instant::now();
    let (spec, params) = cmd.flow.build()?;
    let (region, desc) = region_from(cmd, &spec)?;
    let b = euler_number(&region, &spec)?;
    let mut m = Manifest::new("gauss-bonnet", &cmd.flow, &spec, &params);
    if cmd.out.timing {
        m.timing_s = Some(start.elapsed().as_secs_f64());
    }
    let report = json!({
        "chi": b.chi,
        "area_term": b.area_term,
        "boundary_term": b.boundary_term,
        "corner_term": b.corner_term,
        "region": desc,
        "manifest": m.to_value()?,
    });
    emit(&cmd.out, &format!("{}\n", serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.to_string()))?))
}

fn legendre(cmd: &LegendreCmd) -> Result<(), Failure> {
    let start = Instant::now();
    let (spec, params) = cmd.flow.build()?;
    if !spec.is_stream() || !spec.geometry.is_flat_cartesian() {
        return Err(Failure::Usage("legendre needs a stream flow on the flat plane".into()));
    }
    let (points, grid): (Vec<[f64; 2]>, Option<GridSpec>) = match (&cmd.points, &cmd.grid) {
        (Some(path), _) => {
            let table = parse_points_csv(&fs::read_to_string(path)?)?;
            let (ix, iy) = match (table.column("x"), table.column("y")) {
                (Some(ix), Some(iy)) => (ix, iy),
                _ if table.columns.len() >= 2 => (0, 1),
                _ => return Err(Failure::Usage("point file needs two columns".into())),
            };
            (table.rows.iter().map(|r| [r[ix], r[iy]]).collect(), None)
        }
        (None, Some(g)) => {
            let grid = parse_grid(g)?;
            if grid.axes.len() != 2 {
                return Err(Failure::Usage("legendre grids have two axes".into()));
            }
            ((0..grid.len()).map(|i| grid.point(i)).map(|p| [p[0], p[1]]).collect(), Some(grid))
        }
        (None, None) => unreachable!("clap requires one of --points, --grid"),
    };
    let rows = output::sweep(points.len(), cmd.out.jobs, |i| legendre_row(&spec, points[i]))?;
    let header = ["x", "y", "xd", "yd", "psi_dual", "det_hessian", "sheet", "ma_residual", "roundtrip", "flag"];
    let mut m = Manifest::new("legendre", &cmd.flow, &spec, &params);
    m.grid = grid.map(|g| g.to_string());
    m.points = cmd.points.clone();
    if cmd.out.timing {
        m.timing_s = Some(start.elapsed().as_secs_f64());
    }
    emit(&cmd.out, &Table { manifest: m, header: header.iter().map(|s| s.to_string()).collect(), rows }.render()?)
}

fn legendre_row(spec: &FlowSpec, p: [f64; 2]) -> Vec<String> {
    let mut cells = vec![Cell::Num(p[0]), Cell::Num(p[1])];
    let mut flags: Vec<&'static str> = Vec::new();
    let note = |e: Error, flags: &mut Vec<&'static str>| {
        if !flags.contains(&e.kind()) {
            flags.push(e.kind());
        }
    };
    match to_dual(spec, &p) {
        Ok(lp) => {
            cells.extend([lp.dual[0], lp.dual[1], lp.psi_dual, lp.det_hessian].map(Cell::Num));
            cells.push(Cell::Int(lp.sheet as i64));
            match dual_ma_residual(spec, &p) {
                Ok(r) => cells.push(Cell::Num(r)),
                Err(e) => {
                    note(e, &mut flags);
                    cells.push(Cell::Nan);
                }
            }
            match from_dual(spec, &lp.dual, lp.sheet, Some(&p)) {
                Ok(back) => cells.push(Cell::Num((back.primal[0] - p[0]).hypot(back.primal[1] - p[1]))),
                Err(e) => {
                    note(e, &mut flags);
                    cells.push(Cell::Nan);
                }
            }
        }
        Err(e) => {
            note(e, &mut flags);
            cells.extend(std::iter::repeat_n(Cell::Nan, 7));
        }
    }
    let mut row: Vec<String> = cells.iter().map(Cell::render).collect();
    row.push(flags.join(";"));
    row
}

fn list() -> Result<(), Failure> {
    let mut s = String::from("flows:\n");
    for name in flowgeom::flows::CATALOG {
        let defaults = flow::default_params(name);
        let d: Vec<String> = defaults.iter().map(|(k, v)| format!("{k}={}", format_float(*v))).collect();
        s += &format!("  {name:<16}{}\n", d.join(","));
    }
    for (title, reg) in [("diagnose", fields::diagnose()), ("sample", fields::sample()), ("reduce", fields::reduce())] {
        s += &format!("{title} fields:\n");
        for f in reg.iter() {
            s += &format!("  {:<10}{}\n", f.name, f.help);
        }
    }
    std::io::stdout().lock().write_all(s.as_bytes())?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Diagnose(c) => grid_command("diagnose", c),
        Command::Sample(c) => grid_command("sample", c),
        Command::Reduce(c) => grid_command("reduce", c),
        Command::GaussBonnet(c) => gauss_bonnet(c),
        Command::Legendre(c) => legendre(c),
        Command::Verify(c) => verify::run(c),
        Command::List => list(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("flowgeom: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
