//! Result files: CSV at 12 significant digits, gnuplot scripts, atomic writes.

use anyhow::Context;
use kuramoto_core::bifurcation::{BifurcationDiagram, BifurcationEvent, DiagramRow, EventKind};
use kuramoto_core::pls::PlsStability;
use kuramoto_core::spectral::TrajectoryRecord;
use kuramoto_core::Complex64;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// 12 significant digits, scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Output directory; every file is written to a temporary sibling and
/// renamed into place.
#[derive(Debug, Clone)]
pub struct OutDir {
    path: PathBuf,
}

impl OutDir {
    pub fn create(path: impl Into<PathBuf>) -> Result<Self, CliError> {
        let path = path.into();
        std::fs::create_dir_all(&path)
            .with_context(|| format!("creating {}", path.display()))
            .map_err(CliError::Io)?;
        Ok(OutDir { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        write_atomic(&self.path.join(name), bytes)
    }

    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        self.write_bytes(name, &csv_bytes(header, rows).map_err(CliError::Io)?)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let run = || -> anyhow::Result<()> {
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(path)?;
        Ok(())
    };
    run().with_context(|| format!("writing {}", path.display())).map_err(CliError::Io)?;
    Ok(path.to_path_buf())
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(w.into_inner()?)
}

/// Rows of `t, re_r, im_r, abs_r[, norm]`.
pub fn trajectory_rows(rec: &TrajectoryRecord) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let mut header = vec!["t", "re_r", "im_r", "abs_r"];
    if rec.norms.is_some() {
        header.push("norm");
    }
    let rows = rec
        .times
        .iter()
        .zip(&rec.r_values)
        .enumerate()
        .map(|(i, (t, r))| {
            let mut row = vec![num(*t), num(r.re), num(r.im), num(r.norm())];
            if let Some(n) = &rec.norms {
                row.push(num(n[i]));
            }
            row
        })
        .collect();
    (header, rows)
}

pub const ROWS_HEADER: [&str; 7] = ["K", "branch", "r", "omega", "stability", "root_re", "root_im"];
pub const EVENTS_HEADER: [&str; 3] = ["kind", "K", "bracket"];

fn root_cols(z: Option<Complex64>) -> [String; 2] {
    [opt_num(z.map(|z| z.re)), opt_num(z.map(|z| z.im))]
}

/// Writes `rows.csv`, `events.csv` and `diagram.gp`.
pub fn emit_diagram(d: &BifurcationDiagram, out: &OutDir) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = d
        .rows
        .iter()
        .map(|r| {
            let [re, im] = root_cols(r.leading_root);
            vec![num(r.coupling), r.branch.to_string(), num(r.r), num(r.omega), r.stability.as_str().to_string(), re, im]
        })
        .collect();
    out.write_csv("rows.csv", &ROWS_HEADER, &rows)?;
    let events: Vec<Vec<String>> =
        d.events.iter().map(|e| vec![e.kind.as_str().to_string(), num(e.coupling), num(e.bracket)]).collect();
    out.write_csv("events.csv", &EVENTS_HEADER, &events)?;
    out.write_bytes("diagram.gp", DIAGRAM_GP.as_bytes())?;
    Ok(())
}

const DIAGRAM_GP: &str = r#"# gnuplot diagram.gp  ->  diagram.png
set datafile separator ','
set terminal pngcairo size 900,600
set output 'diagram.png'
set xlabel 'K'
set ylabel 'r'
set y2label 'Omega'
set y2tics
set key top left
plot 'rows.csv' skip 1 using 1:(strcol(5) eq 'stable' ? $3 : 1/0) with points pt 7 ps 0.5 lc rgb 'red' title 'stable', \
     'rows.csv' skip 1 using 1:(strcol(5) ne 'stable' ? $3 : 1/0) with points pt 7 ps 0.5 lc rgb 'blue' title 'unstable', \
     'rows.csv' skip 1 using 1:($2 > 0 ? $4 : 1/0) axes x1y2 with points pt 1 ps 0.4 lc rgb 'gray50' title 'Omega'
"#;

/// gnuplot script for a `t, ..., abs_r` trajectory CSV.
pub fn trajectory_gp(csv: &str, png: &str) -> String {
    format!(
        "# gnuplot {png_stem}.gp  ->  {png}\nset datafile separator ','\nset terminal pngcairo size 900,600\nset output '{png}'\nset xlabel 't'\nset ylabel '|r|'\nset logscale y\nplot '{csv}' skip 1 using 1:4 with lines title '|r(t)|'\n",
        png_stem = png.trim_end_matches(".png")
    )
}

fn parse_f(s: &str, what: &str) -> anyhow::Result<f64> {
    s.parse::<f64>().with_context(|| format!("bad {what} `{s}`"))
}

fn parse_opt(s: &str, what: &str) -> anyhow::Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_f(s, what).map(Some)
    }
}

/// Reads a `rows.csv` written by [`emit_diagram`].
pub fn read_rows(path: &Path) -> anyhow::Result<Vec<DiagramRow>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let re = parse_opt(&rec[5], "root_re")?;
        let im = parse_opt(&rec[6], "root_im")?;
        out.push(DiagramRow {
            coupling: parse_f(&rec[0], "K")?,
            branch: rec[1].parse()?,
            r: parse_f(&rec[2], "r")?,
            omega: parse_f(&rec[3], "omega")?,
            stability: PlsStability::parse(&rec[4]).with_context(|| format!("bad stability `{}`", &rec[4]))?,
            leading_root: re.zip(im).map(|(a, b)| Complex64::new(a, b)),
        });
    }
    Ok(out)
}

/// Reads an `events.csv` written by [`emit_diagram`].
pub fn read_events(path: &Path) -> anyhow::Result<Vec<BifurcationEvent>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.push(BifurcationEvent {
            kind: EventKind::parse(&rec[0]).with_context(|| format!("bad event kind `{}`", &rec[0]))?,
            coupling: parse_f(&rec[1], "K")?,
            bracket: parse_f(&rec[2], "bracket")?,
        });
    }
    Ok(out)
}
