//! CSV tables. Every file has a header row and units in the column names.
//! Numbers are written in Rust's shortest round-trip form, so identical
//! inputs give byte-identical files.

use std::io::{Read, Write};

use thiserror::Error;

use crate::coupling::CoupledSample;
use crate::doe::{CcDesign, DoeError, FactorSpec, LimitSurface, QuadraticModel, term_names};
use crate::kinematics::RigidTransform;
use crate::oscillation::RingdownSample;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed table: {0}")]
    Format(String),
    #[error(transparent)]
    Doe(#[from] DoeError),
}

fn format_err<T>(msg: impl Into<String>) -> Result<T, CsvError> {
    Err(CsvError::Format(msg.into()))
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn parse(field: &str, row: usize) -> Result<f64, CsvError> {
    field
        .trim()
        .parse()
        .map_err(|_| CsvError::Format(format!("row {row}: `{field}` is not a number")))
}

/// `t_s, tau_lm_i_Nm.., tau_total_i_Nm.., f_hobm_{x,y,z}_N`.
pub fn write_torques<W: Write>(out: W, samples: &[CoupledSample]) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    let n = samples.first().map_or(0, |s| s.tau_lm.len());
    let mut header = vec!["t_s".to_string()];
    header.extend((1..=n).map(|i| format!("tau_lm_{i}_Nm")));
    header.extend((1..=n).map(|i| format!("tau_total_{i}_Nm")));
    header.extend(["f_hobm_x_N", "f_hobm_y_N", "f_hobm_z_N"].map(String::from));
    w.write_record(&header)?;
    for s in samples {
        let mut row = vec![num(s.t)];
        row.extend(s.tau_lm.iter().copied().map(num));
        row.extend(s.tau_total.iter().copied().map(num));
        row.extend(s.f_hobm.force.iter().copied().map(num));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per frame: origin and row-major rotation.
pub fn write_frames<W: Write>(out: W, frames: &[RigidTransform]) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["frame", "x_m", "y_m", "z_m"];
    header.extend(["r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33"]);
    w.write_record(&header)?;
    for (i, f) in frames.iter().enumerate() {
        let r = f.rotation.to_rotation_matrix();
        let mut row = vec![i.to_string()];
        row.extend(f.translation.vector.iter().copied().map(num));
        for a in 0..3 {
            for b in 0..3 {
                row.push(num(r[(a, b)]));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub const RINGDOWN_HEADER: [&str; 9] = [
    "t_s",
    "phi1_rad",
    "phi2_rad",
    "phid1_radps",
    "phid2_radps",
    "fx_N",
    "fy_N",
    "fz_N",
    "energy_J",
];

pub fn write_ringdown<W: Write>(out: W, samples: &[RingdownSample]) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RINGDOWN_HEADER)?;
    for s in samples {
        let f = s.tip_force.force;
        let row = [s.t, s.phi[0], s.phi[1], s.phid[0], s.phid[1], f.x, f.y, f.z, s.mech_energy];
        w.write_record(row.map(num))?;
    }
    w.flush()?;
    Ok(())
}

/// A design read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignTable {
    pub factors: Vec<FactorSpec>,
    pub points: Vec<Vec<f64>>,
    pub responses: Vec<f64>,
    pub response_name: String,
}

/// `run, kind, coded_<name>.., <name>.., <response>`. Without responses the
/// last column is left empty.
pub fn write_design<W: Write>(
    out: W,
    design: &CcDesign,
    responses: Option<&[f64]>,
    response_name: &str,
) -> Result<(), CsvError> {
    if let Some(r) = responses {
        if r.len() != design.points.len() {
            return Err(DoeError::SizeMismatch {
                points: design.points.len(),
                responses: r.len(),
            }
            .into());
        }
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["run".to_string(), "kind".to_string()];
    header.extend(design.factors.iter().map(|f| format!("coded_{}", f.name)));
    header.extend(design.factors.iter().map(|f| f.name.clone()));
    header.push(response_name.to_string());
    w.write_record(&header)?;
    for (i, p) in design.points.iter().enumerate() {
        let mut row = vec![i.to_string(), design.point_kind(i).as_str().to_string()];
        row.extend(p.iter().copied().map(num));
        row.extend(design.decode(p).into_iter().map(num));
        row.push(responses.map(|r| num(r[i])).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a design table with responses. Factor coding is recovered from
/// the coded and physical columns.
pub fn read_design<R: Read>(input: R) -> Result<DesignTable, CsvError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let coded_cols: Vec<usize> = (0..header.len()).filter(|&i| header[i].starts_with("coded_")).collect();
    let k = coded_cols.len();
    if k == 0 {
        return format_err("no coded_* columns");
    }
    let names: Vec<String> = coded_cols.iter().map(|&i| header[i]["coded_".len()..].to_string()).collect();
    let mut phys_cols = Vec::with_capacity(k);
    for name in &names {
        match header.iter().position(|h| h == name) {
            Some(i) => phys_cols.push(i),
            None => return format_err(format!("no physical column for `{name}`")),
        }
    }
    let resp_col = header.len() - 1;
    if coded_cols.contains(&resp_col) || phys_cols.contains(&resp_col) {
        return format_err("last column must be the response");
    }

    let mut coded = Vec::new();
    let mut physical = Vec::new();
    let mut responses = Vec::new();
    for (row_no, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = row_no + 2;
        let field = |i: usize| rec.get(i).ok_or_else(|| CsvError::Format(format!("row {row}: too few fields")));
        coded.push(coded_cols.iter().map(|&i| parse(field(i)?, row)).collect::<Result<Vec<_>, _>>()?);
        physical.push(phys_cols.iter().map(|&i| parse(field(i)?, row)).collect::<Result<Vec<_>, _>>()?);
        let resp = field(resp_col)?;
        if resp.trim().is_empty() {
            return format_err(format!("row {row}: missing response"));
        }
        responses.push(parse(resp, row)?);
    }

    let mut factors = Vec::with_capacity(k);
    for (j, name) in names.iter().enumerate() {
        // physical = centre + half * coded; fit from the two most distant
        // coded values.
        let (lo, hi) = (0..coded.len()).fold((None::<usize>, None::<usize>), |(lo, hi), i| {
            let c = coded[i][j];
            let lo = match lo {
                Some(l) if coded[l][j] <= c => Some(l),
                _ => Some(i),
            };
            let hi = match hi {
                Some(h) if coded[h][j] >= c => Some(h),
                _ => Some(i),
            };
            (lo, hi)
        });
        let (Some(lo), Some(hi)) = (lo, hi) else {
            return format_err("design has no rows");
        };
        let dc = coded[hi][j] - coded[lo][j];
        if dc <= 0.0 {
            return format_err(format!("factor `{name}` never varies"));
        }
        let half = (physical[hi][j] - physical[lo][j]) / dc;
        let center = physical[lo][j] - half * coded[lo][j];
        factors.push(FactorSpec::new(name.clone(), center - half, center + half)?);
    }
    Ok(DesignTable {
        factors,
        points: coded,
        responses,
        response_name: header[resp_col].clone(),
    })
}

/// Flat coefficient table: `record, name, low, high, value`.
///
/// `factor` rows carry the coding (`low`/`high` map to -1/+1), in model
/// order. `coefficient` rows follow the basis order `intercept, x_i,
/// x_i*x_j (i<j), x_i^2`. `stat` rows hold `r_squared`, `max_residual` and
/// `coded_extent`.
pub fn write_model<W: Write>(out: W, model: &QuadraticModel) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["record", "name", "low", "high", "value"])?;
    for f in &model.factors {
        w.write_record(["factor", &f.name, &num(f.low), &num(f.high), ""])?;
    }
    for (name, c) in term_names(model.k()).iter().zip(&model.coefficients) {
        w.write_record(["coefficient", name, "", "", &num(*c)])?;
    }
    for (name, v) in [
        ("r_squared", model.r_squared),
        ("max_residual", model.max_residual),
        ("coded_extent", model.coded_extent),
    ] {
        w.write_record(["stat", name, "", "", &num(v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_model<R: Read>(input: R) -> Result<QuadraticModel, CsvError> {
    let mut r = csv::Reader::from_reader(input);
    let mut factors = Vec::new();
    let mut coefficients = Vec::new();
    let (mut r2, mut max_res, mut extent) = (None, None, None);
    for (row_no, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = row_no + 2;
        if rec.len() != 5 {
            return format_err(format!("row {row}: expected 5 fields"));
        }
        match &rec[0] {
            "factor" => factors.push(FactorSpec::new(&rec[1], parse(&rec[2], row)?, parse(&rec[3], row)?)?),
            "coefficient" => coefficients.push(parse(&rec[4], row)?),
            "stat" => {
                let v = Some(parse(&rec[4], row)?);
                match &rec[1] {
                    "r_squared" => r2 = v,
                    "max_residual" => max_res = v,
                    "coded_extent" => extent = v,
                    other => return format_err(format!("row {row}: unknown stat `{other}`")),
                }
            }
            other => return format_err(format!("row {row}: unknown record `{other}`")),
        }
    }
    let k = factors.len();
    if coefficients.len() != (k + 1) * (k + 2) / 2 {
        return format_err(format!("{} coefficients for {k} factors", coefficients.len()));
    }
    Ok(QuadraticModel {
        factors,
        coefficients,
        r_squared: r2.unwrap_or(f64::NAN),
        max_residual: max_res.unwrap_or(f64::NAN),
        coded_extent: extent.unwrap_or(1.0),
    })
}

/// `<friction>, <mass>, accel_limit_<unit>, status`. Infeasible cells leave
/// the limit empty.
pub fn write_limit_grid<W: Write>(out: W, surface: &LimitSurface) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    let limit_col = match surface.accel_factor.rsplit_once('_') {
        Some((_, unit)) => format!("accel_limit_{unit}"),
        None => "accel_limit".to_string(),
    };
    w.write_record([surface.friction_factor.as_str(), surface.mass_factor.as_str(), &limit_col, "status"])?;
    for (i, &f) in surface.friction_grid.iter().enumerate() {
        for (j, &m) in surface.mass_grid.iter().enumerate() {
            let cell = surface.cells[i][j];
            let value = cell.value().map(num).unwrap_or_default();
            w.write_record([num(f), num(m), value, cell.status().to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
