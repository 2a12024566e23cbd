//! CSV export of trajectories, coarse-graining reports, Green tables, and
//! sampled paths. Formats are stable; every writer emits a header row.

use std::io::{self, Write};

use crate::coarse::{CoarseGrainReport, Score};
use crate::fk::FKPath;
use crate::lattice::norm2;
use crate::subordinator::SubordinatorPath;
use crate::walk::TrajectoryRecord;

/// `(k, y_0..y_{d-1}, e_k, S(k))` at the given stride (the final row is
/// always written). The mark on the last row is empty: `e_K` does not exist.
pub fn write_trajectory_csv<const D: usize>(
    out: &mut impl Write,
    traj: &TrajectoryRecord<D>,
    stride: usize,
) -> io::Result<()> {
    let stride = stride.max(1);
    write!(out, "k")?;
    for i in 0..D {
        write!(out, ",y{i}")?;
    }
    writeln!(out, ",e_k,clock")?;
    let last = traj.sites.len() - 1;
    for k in (0..=last).filter(|k| k % stride == 0 || *k == last) {
        write!(out, "{k}")?;
        for c in traj.sites[k] {
            write!(out, ",{c}")?;
        }
        if k < traj.marks.len() {
            writeln!(out, ",{},{}", traj.marks[k], traj.clock[k])?;
        } else {
            writeln!(out, ",,{}", traj.clock[k])?;
        }
    }
    Ok(())
}

/// One row per part: `(i, j_i, lambda_1, lambda_2, lambda_3, y_i, s_i, |r_i|)`.
/// Infinite quantities are written as `inf`, absent ones as empty fields.
pub fn write_coarse_report_csv<const D: usize>(
    out: &mut impl Write,
    report: &CoarseGrainReport<D>,
) -> io::Result<()> {
    writeln!(out, "i,j_i,lambda1,lambda2,lambda3,trap,score,displacement_norm")?;
    for part in &report.parts {
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_else(|| "inf".into());
        let trap = part
            .trap
            .map(|y| format!("\"{y:?}\""))
            .unwrap_or_default();
        let score = match part.score {
            Score::Finite(v) => v.to_string(),
            Score::Infinite => "inf".into(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            part.index,
            part.j_start,
            opt(part.lambda1),
            opt(part.lambda2),
            opt(part.lambda3),
            trap,
            score,
            (norm2(&part.displacement) as f64).sqrt()
        )?;
    }
    Ok(())
}

/// Green's function table rows `(x, y, value, method, tolerance)`.
pub struct GreenTableRow<const D: usize> {
    pub x: [i64; D],
    pub y: [i64; D],
    pub value: f64,
    pub method: &'static str,
    pub tolerance: f64,
}

pub fn write_green_table_csv<const D: usize>(
    out: &mut impl Write,
    rows: &[GreenTableRow<D>],
) -> io::Result<()> {
    writeln!(out, "x,y,value,method,tolerance")?;
    for r in rows {
        writeln!(
            out,
            "\"{:?}\",\"{:?}\",{},{},{}",
            r.x, r.y, r.value, r.method, r.tolerance
        )?;
    }
    Ok(())
}

/// `(t, V(t))` for a sampled subordinator path.
pub fn write_subordinator_csv(out: &mut impl Write, path: &SubordinatorPath) -> io::Result<()> {
    writeln!(out, "t,V")?;
    for (t, v) in path.times.iter().zip(path.values.iter()) {
        writeln!(out, "{t},{v}")?;
    }
    Ok(())
}

/// `(s, Z_0..Z_{d-1})` for a sampled fractional-kinetics path.
pub fn write_fk_path_csv<const D: usize>(out: &mut impl Write, path: &FKPath<D>) -> io::Result<()> {
    write!(out, "s")?;
    for i in 0..D {
        write!(out, ",z{i}")?;
    }
    writeln!(out)?;
    for (s, z) in path.s_grid.iter().zip(path.values.iter()) {
        write!(out, "{s}")?;
        for c in z {
            write!(out, ",{c}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// A generic numeric table with named columns (special-function tables,
/// statistic grids).
pub fn write_table_csv(
    out: &mut impl Write,
    columns: &[&str],
    rows: &[Vec<f64>],
) -> io::Result<()> {
    writeln!(out, "{}", columns.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Environment;
    use crate::rng::Stream;
    use crate::scales::scales;
    use crate::walk::{run_walk, StopRule};

    #[test]
    fn trajectory_csv_shape() {
        let sc = scales(8, 3, 0.5).unwrap();
        let env: Environment<3> = Environment::constant(1.0, 0, &sc, 2.0).unwrap();
        let mut s = Stream::new(1, "csv", 0);
        let traj = run_walk(&env, 100, StopRule::Steps(10), &mut s).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj, 2).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,y0,y1,y2,e_k,clock");
        // k = 0,2,4,6,8,10 -> 6 data rows
        assert_eq!(lines.len(), 7);
        assert!(lines[6].starts_with("10,"));
    }

    #[test]
    fn table_csv_round_trip() {
        let mut buf = Vec::new();
        write_table_csv(&mut buf, &["a", "b"], &[vec![1.0, 2.5], vec![-3.0, 0.125]]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "a,b\n1,2.5\n-3,0.125\n");
    }
}
