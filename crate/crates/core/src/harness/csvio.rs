//! Trajectory CSV: header `t,u,y[,x1,x2,…]`, one row per tick.
//!
//! Values are written with the shortest representation that parses back to
//! the same `f64`, so a write → load round trip is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::plant::Trajectory;

/// Relative deviation from the uniform grid tolerated in recorded logs.
pub const GRID_TOLERANCE: f64 = 1e-3;

pub fn load_csv(path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_csv(&text)
}

pub fn parse_csv(text: &str) -> Result<Trajectory> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Csv { line: 1, message: e.to_string() })?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (ti, ui, yi) = (
        col("t").ok_or_else(|| Error::MissingColumn("t".into()))?,
        col("u").ok_or_else(|| Error::MissingColumn("u".into()))?,
        col("y").ok_or_else(|| Error::MissingColumn("y".into()))?,
    );
    let mut states = Vec::new();
    for (k, h) in header.iter().enumerate() {
        match h {
            "t" | "u" | "y" => {}
            _ => match h.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()) {
                Some(i) if i >= 1 => states.push((i, k)),
                _ => return Err(Error::Csv { line: 1, message: format!("unknown column `{h}`") }),
            },
        }
    }
    states.sort();
    for (j, (i, _)) in states.iter().enumerate() {
        if *i != j + 1 {
            return Err(Error::MissingColumn(format!("x{}", j + 1)));
        }
    }
    if header.len() != 3 + states.len() {
        return Err(Error::Csv { line: 1, message: "duplicate column".into() });
    }

    let (mut t, mut u, mut y) = (Vec::new(), Vec::new(), Vec::new());
    let mut x: Vec<Vec<f64>> = vec![Vec::new(); states.len()];
    for rec in rdr.records() {
        let rec = rec
            .map_err(|e| Error::Csv { line: e.position().map_or(0, |p| p.line() as usize), message: e.to_string() })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |k: usize| -> Result<f64> {
            let s = rec.get(k).unwrap_or("");
            let v: f64 = s
                .parse()
                .map_err(|_| Error::Csv { line, message: format!("column `{}`: `{s}` is not a number", &header[k]) })?;
            if !v.is_finite() {
                return Err(Error::Csv { line, message: format!("column `{}` is not finite", &header[k]) });
            }
            Ok(v)
        };
        t.push(field(ti)?);
        u.push(field(ui)?);
        y.push(field(yi)?);
        for (j, (_, k)) in states.iter().enumerate() {
            x[j].push(field(*k)?);
        }
    }
    if t.len() < 2 {
        return Err(Error::Csv { line: t.len() + 1, message: "need at least two samples".into() });
    }
    let ts = t[1] - t[0];
    if !(ts > 0.0) {
        return Err(Error::NonUniformGrid { line: 3, expected: t[0], found: t[1] });
    }
    for (k, &tk) in t.iter().enumerate() {
        let expected = t[0] + k as f64 * ts;
        if (tk - expected).abs() > GRID_TOLERANCE * ts {
            return Err(Error::NonUniformGrid { line: k + 2, expected, found: tk });
        }
    }
    Ok(Trajectory { ts, t, u, y_clean: y.clone(), y, x, noise: None })
}

/// Renders `t,u,y` plus the recorded states.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut s = String::from("t,u,y");
    for i in 0..traj.x.len() {
        let _ = write!(s, ",x{}", i + 1);
    }
    s.push('\n');
    for k in 0..traj.len() {
        let _ = write!(s, "{},{},{}", traj.t[k], traj.u[k], traj.y[k]);
        for xi in &traj.x {
            let _ = write!(s, ",{}", xi[k]);
        }
        s.push('\n');
    }
    s
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    std::fs::write(path, trajectory_csv(traj)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
