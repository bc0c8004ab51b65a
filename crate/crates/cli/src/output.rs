//! CSV series, one file per observable family.
//!
//! Every file starts with a `step` column and has one row per step (or per
//! step and key). Floats use Rust's shortest round-trip formatting; an
//! undefined `g2` is an empty field.
//!
//! | file | columns |
//! |---|---|
//! | `reports.csv` | `step,raw_norm,norm,entries,effective_dimension` |
//! | `timing.csv` | `step,wall_seconds` |
//! | `densities.csv` | `step,n_1..n_M` |
//! | `moments.csv` | `step,q,v_1..v_M` |
//! | `g2.csv` | `step,g2_a_b` for `a, b` in `1..=M`, row-major |
//! | `counting.csv` | `step,vertex,series,n_0..n_N`; vertex `mean` is the vertex average, series is `histogram` or `weighted` |
//! | `phase_space.csv` | `step,mode,x,p,energy` |

use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use bosewalk_core::{CountingStatistics, ObservableRecord, StepReport};

use crate::error::{CliError, Result};

pub const REPORTS: &str = "reports.csv";
pub const TIMING: &str = "timing.csv";
pub const DENSITIES: &str = "densities.csv";
pub const MOMENTS: &str = "moments.csv";
pub const G2: &str = "g2.csv";
pub const COUNTING: &str = "counting.csv";
pub const PHASE_SPACE: &str = "phase_space.csv";

/// Files whose contents depend only on the configuration.
pub const DETERMINISTIC: [&str; 6] = [REPORTS, DENSITIES, MOMENTS, G2, COUNTING, PHASE_SPACE];

fn headers(vertices: usize, particles: u32) -> [(&'static str, String); 7] {
    let per_vertex = |prefix: &str| (1..=vertices).map(|a| format!(",{prefix}_{a}")).collect::<String>();
    let pairs: String = (1..=vertices).flat_map(|a| (1..=vertices).map(move |b| format!(",g2_{a}_{b}"))).collect();
    let occupations: String = (0..=particles).map(|n| format!(",n_{n}")).collect();
    [
        (REPORTS, "step,raw_norm,norm,entries,effective_dimension".into()),
        (TIMING, "step,wall_seconds".into()),
        (DENSITIES, format!("step{}", per_vertex("n"))),
        (MOMENTS, format!("step,q{}", per_vertex("v"))),
        (G2, format!("step{pairs}")),
        (COUNTING, format!("step,vertex,series{occupations}")),
        (PHASE_SPACE, "step,mode,x,p,energy".into()),
    ]
}

struct Series {
    name: &'static str,
    file: BufWriter<File>,
}

/// Appends rows to the series files of one output directory.
pub struct SeriesWriter {
    dir: PathBuf,
    series: Vec<Series>,
    line: String,
}

impl SeriesWriter {
    /// Starts fresh files, replacing any earlier contents.
    pub fn create(dir: &Path, vertices: usize, particles: u32) -> Result<Self> {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        let mut series = Vec::new();
        for (name, header) in headers(vertices, particles) {
            let path = dir.join(name);
            let mut file = BufWriter::new(File::create(&path).map_err(CliError::io(&path))?);
            writeln!(file, "{header}").map_err(CliError::io(&path))?;
            series.push(Series { name, file });
        }
        Ok(Self { dir: dir.to_owned(), series, line: String::new() })
    }

    /// Reopens existing files, dropping every row after `step`.
    pub fn resume(dir: &Path, vertices: usize, particles: u32, step: u64) -> Result<Self> {
        let mut series = Vec::new();
        for (name, header) in headers(vertices, particles) {
            let path = dir.join(name);
            let text = fs::read_to_string(&path).map_err(CliError::io(&path))?;
            let mut lines = text.lines();
            if lines.next() != Some(header.as_str()) {
                return Err(CliError::Mismatch(format!("{} has an unexpected header", path.display())));
            }
            let mut kept = header.clone();
            kept.push('\n');
            for line in lines {
                let row_step: u64 = line
                    .split(',')
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| CliError::Mismatch(format!("{}: malformed row {line:?}", path.display())))?;
                if row_step <= step {
                    kept.push_str(line);
                    kept.push('\n');
                }
            }
            fs::write(&path, kept).map_err(CliError::io(&path))?;
            let file = OpenOptions::new().append(true).open(&path).map_err(CliError::io(&path))?;
            series.push(Series { name, file: BufWriter::new(file) });
        }
        Ok(Self { dir: dir.to_owned(), series, line: String::new() })
    }

    fn emit(&mut self, name: &str) -> Result<()> {
        let series = self.series.iter_mut().find(|s| s.name == name).expect("known series");
        self.line.push('\n');
        let path = &self.dir;
        series.file.write_all(self.line.as_bytes()).map_err(CliError::io(path.join(name)))?;
        self.line.clear();
        Ok(())
    }

    pub fn report(&mut self, report: &StepReport) -> Result<()> {
        write!(
            self.line,
            "{},{},{},{},{}",
            report.step, report.raw_norm, report.norm, report.entries, report.effective_dimension
        )
        .unwrap();
        self.emit(REPORTS)?;
        if let Some(t) = report.wall_time {
            write!(self.line, "{},{}", report.step, t.as_secs_f64()).unwrap();
            self.emit(TIMING)?;
        }
        Ok(())
    }

    pub fn record(&mut self, record: &ObservableRecord) -> Result<()> {
        let step = record.step;
        write!(self.line, "{step}").unwrap();
        for v in &record.densities {
            write!(self.line, ",{v}").unwrap();
        }
        self.emit(DENSITIES)?;
        for (q, values) in &record.moments {
            write!(self.line, "{step},{q}").unwrap();
            for v in values {
                write!(self.line, ",{v}").unwrap();
            }
            self.emit(MOMENTS)?;
        }
        if !record.g2.is_empty() {
            write!(self.line, "{step}").unwrap();
            for g in &record.g2 {
                match g {
                    Some(v) => write!(self.line, ",{v}").unwrap(),
                    None => self.line.push(','),
                }
            }
            self.emit(G2)?;
        }
        let labelled = record.counting.iter().enumerate().map(|(a, s)| ((a + 1).to_string(), s));
        let rows: Vec<(String, &CountingStatistics)> =
            labelled.chain(record.counting_mean.iter().map(|s| ("mean".to_string(), s))).collect();
        for (vertex, stats) in rows {
            for (series, values) in [("histogram", &stats.histogram), ("weighted", &stats.weighted)] {
                write!(self.line, "{step},{vertex},{series}").unwrap();
                for v in values {
                    write!(self.line, ",{v}").unwrap();
                }
                self.emit(COUNTING)?;
            }
        }
        for (i, point) in record.phase_space.iter().enumerate() {
            write!(self.line, "{step},{},{},{},{}", i + 1, point.x, point.p, point.energy).unwrap();
            self.emit(PHASE_SPACE)?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        for s in &mut self.series {
            s.file.flush().map_err(CliError::io(self.dir.join(s.name)))?;
        }
        Ok(())
    }
}

/// `(step, effective_dimension)` rows of a `reports.csv`.
pub fn read_dimension_series(path: &Path) -> Result<Vec<(u64, u64)>> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    text.lines()
        .skip(1)
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            match (fields.first().map(|s| s.parse()), fields.get(4).map(|s| s.parse())) {
                (Some(Ok(step)), Some(Ok(dim))) => Ok((step, dim)),
                _ => Err(CliError::Mismatch(format!("{}: malformed row {line:?}", path.display()))),
            }
        })
        .collect()
}
