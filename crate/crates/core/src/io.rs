//! Run orchestration and on-disk artifacts.
//!
//! Every number is written with 17 significant digits so that two runs of the
//! same configuration and build can be compared byte for byte.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::config::{serialize_config, BuiltMesh, RunConfig};
use crate::diagnostics::{Sample, Sampler};
use crate::error::{Error, Result};
use crate::film::{self, Event, FilmMesh, FilmState, Observer, RunOutput, StopReason};
use crate::mesh::{IntervalMesh, P1Mesh, QuadrantMirror, TriMesh};
use crate::wetting::WettingParams;

pub const SERIES_FILE: &str = "series.csv";
pub const EVENTS_FILE: &str = "events.log";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const SNAPSHOT_INDEX_FILE: &str = "snapshots.csv";
pub const SERIES_HEADER: &str = "t,mass,energy,h_min,agglomerates,x_c";

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotFormat {
    /// `x h` per node of an interval mesh.
    Profile,
    /// Legacy VTK unstructured grid with `h` as point data.
    Vtk,
    /// `x y h` per node.
    Xyz,
    /// `x h` along the horizontal line through the domain centre.
    Midline,
    /// `s h` along the lower-left to upper-right diagonal, `s` measured from the centre.
    Diagonal,
}

impl SnapshotFormat {
    pub fn extension(self) -> &'static str {
        match self {
            SnapshotFormat::Profile => "txt",
            SnapshotFormat::Vtk => "vtk",
            SnapshotFormat::Xyz => "xyz",
            SnapshotFormat::Midline => "midline.txt",
            SnapshotFormat::Diagonal => "diagonal.txt",
        }
    }
}

/// Write `columns` row by row, space separated.
pub fn write_columns(path: &Path, columns: &[&[f64]]) -> Result<()> {
    let n = columns.first().map_or(0, |c| c.len());
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: c.len(),
        });
    }
    let mut w = create(path)?;
    let mut line = String::new();
    for i in 0..n {
        line.clear();
        for (k, c) in columns.iter().enumerate() {
            if k > 0 {
                line.push(' ');
            }
            line.push_str(&num(c[i]));
        }
        line.push('\n');
        w.write_all(line.as_bytes())
            .map_err(|e| Error::io(path, e))?;
    }
    finish(w, path)
}

/// Read whitespace-separated numeric columns, skipping blank and `#` lines.
pub fn read_columns(path: &Path) -> Result<Vec<Vec<f64>>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), ln + 1)))?;
        if cols.is_empty() {
            cols = vec![Vec::new(); vals.len()];
        }
        if vals.len() != cols.len() {
            return Err(Error::Config(format!(
                "{}:{}: ragged row",
                path.display(),
                ln + 1
            )));
        }
        for (c, v) in cols.iter_mut().zip(vals) {
            c.push(v);
        }
    }
    Ok(cols)
}

pub fn write_profile(mesh: &IntervalMesh, h: &[f64], path: &Path) -> Result<()> {
    write_columns(path, &[&mesh.nodes(), h])
}

pub fn write_vtk(mesh: &TriMesh, h: &[f64], path: &Path) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "film height");
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.n_nodes());
    for p in mesh.coords() {
        let _ = writeln!(s, "{} {} {}", num(p[0]), num(p[1]), num(0.0));
    }
    let nt = mesh.triangles().len();
    let _ = writeln!(s, "CELLS {} {}", nt, 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "POINT_DATA {}", mesh.n_nodes());
    let _ = writeln!(s, "SCALARS h double 1");
    let _ = writeln!(s, "LOOKUP_TABLE default");
    for v in h {
        let _ = writeln!(s, "{}", num(*v));
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Contents of a legacy VTK file written by [`write_vtk`].
#[derive(Debug, Clone, PartialEq)]
pub struct VtkData {
    pub points: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub h: Vec<f64>,
}

pub fn read_vtk(path: &Path) -> Result<VtkData> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::Config(format!("{}: {m}", path.display()));
    let mut tok = text.lines().skip(2).flat_map(str::split_whitespace);
    let mut expect = |w: &str| -> Result<()> {
        match tok.next() {
            Some(t) if t == w => Ok(()),
            _ => Err(bad(&format!("expected {w}"))),
        }
    };
    expect("ASCII")?;
    expect("DATASET")?;
    expect("UNSTRUCTURED_GRID")?;
    expect("POINTS")?;
    let mut next = || tok.next().ok_or_else(|| bad("unexpected end of file"));
    let count = |s: &str| s.parse::<usize>().map_err(|_| bad("bad count"));
    let real = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
    let np = count(next()?)?;
    next()?;
    let mut points = Vec::with_capacity(np);
    for _ in 0..np {
        points.push([real(next()?)?, real(next()?)?, real(next()?)?]);
    }
    if next()? != "CELLS" {
        return Err(bad("expected CELLS"));
    }
    let nc = count(next()?)?;
    next()?;
    let mut triangles = Vec::with_capacity(nc);
    for _ in 0..nc {
        if count(next()?)? != 3 {
            return Err(bad("only triangles are supported"));
        }
        triangles.push([count(next()?)?, count(next()?)?, count(next()?)?]);
    }
    if next()? != "CELL_TYPES" {
        return Err(bad("expected CELL_TYPES"));
    }
    for _ in 0..=nc {
        next()?;
    }
    for w in [
        "POINT_DATA",
        "",
        "SCALARS",
        "h",
        "double",
        "1",
        "LOOKUP_TABLE",
        "default",
    ] {
        let t = next()?;
        if !w.is_empty() && t != w {
            return Err(bad(&format!("expected {w}")));
        }
    }
    let mut h = Vec::with_capacity(np);
    for _ in 0..np {
        h.push(real(next()?)?);
    }
    Ok(VtkData {
        points,
        triangles,
        h,
    })
}

pub fn write_xyz(mesh: &TriMesh, h: &[f64], path: &Path) -> Result<()> {
    let x: Vec<f64> = mesh.coords().iter().map(|p| p[0]).collect();
    let y: Vec<f64> = mesh.coords().iter().map(|p| p[1]).collect();
    write_columns(path, &[&x, &y, h])
}

fn bbox(mesh: &TriMesh) -> [f64; 4] {
    mesh.coords().iter().fold(
        [
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        ],
        |b, p| {
            [
                b[0].min(p[0]),
                b[1].max(p[0]),
                b[2].min(p[1]),
                b[3].max(p[1]),
            ]
        },
    )
}

fn resolution(mesh: &TriMesh) -> usize {
    mesh.grid().map_or_else(
        || (mesh.n_nodes() as f64).sqrt().ceil() as usize,
        |g| g.nx.max(g.ny),
    )
}

/// `(x, h)` along `y = (ymin + ymax)/2`, sampled at the grid columns.
pub fn midline_section(mesh: &TriMesh, h: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let [a, b, c, d] = bbox(mesh);
    let n = mesh.grid().map_or_else(|| resolution(mesh), |g| g.nx);
    let y = 0.5 * (c + d);
    let xs: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let hs = xs
        .iter()
        .map(|&x| mesh.interpolate(h, x, y).unwrap_or(f64::NAN))
        .collect();
    (xs, hs)
}

/// `(s, h)` along the main diagonal, with `s` the signed distance from the centre.
pub fn diagonal_section(mesh: &TriMesh, h: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let [a, b, c, d] = bbox(mesh);
    let n = resolution(mesh);
    let half = 0.5 * (b - a).hypot(d - c);
    let mut ss = Vec::with_capacity(n + 1);
    let mut hs = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let f = i as f64 / n as f64;
        ss.push(-half + 2.0 * half * f);
        hs.push(
            mesh.interpolate(h, a + (b - a) * f, c + (d - c) * f)
                .unwrap_or(f64::NAN),
        );
    }
    (ss, hs)
}

/// Write one 3D snapshot file.
pub fn write_snapshot_3d(
    mesh: &TriMesh,
    h: &[f64],
    path: &Path,
    format: SnapshotFormat,
) -> Result<()> {
    if h.len() != mesh.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_nodes(),
            got: h.len(),
        });
    }
    match format {
        SnapshotFormat::Vtk => write_vtk(mesh, h, path),
        SnapshotFormat::Xyz => write_xyz(mesh, h, path),
        SnapshotFormat::Midline => {
            let (x, v) = midline_section(mesh, h);
            write_columns(path, &[&x, &v])
        }
        SnapshotFormat::Diagonal => {
            let (s, v) = diagonal_section(mesh, h);
            write_columns(path, &[&s, &v])
        }
        SnapshotFormat::Profile => Err(Error::InvalidParameter(
            "profile snapshots need an interval mesh".into(),
        )),
    }
}

/// One line of `series.csv`.
pub fn series_line(s: &Sample) -> String {
    let xc = s.x_c.map(num).unwrap_or_default();
    format!(
        "{},{},{},{},{},{}\n",
        num(s.t),
        num(s.mass),
        num(s.energy),
        num(s.h_min),
        s.agglomerates,
        xc
    )
}

pub fn event_line(e: &Event) -> String {
    let kind = serde_plain_kind(e);
    format!("{}\t{}\t{}\t{}\n", num(e.t), e.step, kind, e.detail)
}

fn serde_plain_kind(e: &Event) -> String {
    toml::Value::try_from(e.kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_else(|| format!("{:?}", e.kind))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Running,
    Completed,
    Failed,
}

/// Final diagnostics of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<StopReason>,
    pub t: f64,
    pub steps: usize,
    pub mass: f64,
    pub energy: f64,
    pub h_min: f64,
    pub agglomerates: usize,
    pub holes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_c: Option<f64>,
    pub max_mass_drift: f64,
    pub max_energy_increase: f64,
    pub events: usize,
}

/// Everything needed to re-run and to interpret a run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Summary>,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = if dir.is_dir() {
            dir.join(MANIFEST_FILE)
        } else {
            dir.to_path_buf()
        };
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: Manifest = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
        m.config.validate()?;
        Ok(m)
    }
}

/// Accept either a configuration or a run manifest.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let is_manifest = toml::from_str::<toml::Table>(&text)
        .is_ok_and(|t| t.contains_key("config") && t.contains_key("status"));
    if is_manifest {
        return Manifest::read(path).map(|m| m.config);
    }
    crate::config::parse_config(&text)
}

/// Outcome of one run directory.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub name: String,
    pub dir: PathBuf,
    pub failure: Option<String>,
}

/// Run every point of `cfg` (one point when it has no sweep). A single run
/// writes into `root`; sweep points write into `root/<name>`. Up to
/// `parallel` runs proceed at once on separate threads.
pub fn execute(cfg: &RunConfig, root: &Path, parallel: usize) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    let sweep = !cfg.sweep.is_empty();
    let points = cfg.expand_sweep()?;
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let jobs: Vec<(String, PathBuf, RunConfig)> = points
        .into_iter()
        .map(|(name, c)| {
            let dir = if sweep {
                root.join(&name)
            } else {
                root.to_path_buf()
            };
            (name, dir, c)
        })
        .collect();
    let results: Mutex<Vec<Option<RunResult>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let k = next.fetch_add(1, Ordering::SeqCst);
        let Some((name, dir, c)) = jobs.get(k) else {
            break;
        };
        log::info!("run {name} -> {}", dir.display());
        let failure = run_one(c, dir).err().map(|e| e.to_string());
        if let Some(f) = &failure {
            log::error!("run {name} failed: {f}");
        }
        results.lock().expect("no panics while holding the lock")[k] = Some(RunResult {
            name: name.clone(),
            dir: dir.clone(),
            failure,
        });
    };
    let threads = parallel.clamp(1, jobs.len().max(1));
    if threads == 1 {
        worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(worker);
            }
        });
    }
    Ok(results
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .flatten()
        .collect())
}

/// Execute a single configuration into `dir`, leaving a manifest that records
/// success or the failure cause.
pub fn run_one(cfg: &RunConfig, dir: &Path) -> Result<Summary> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        status: RunStatus::Running,
        failure: None,
        config: cfg.clone(),
        summary: None,
    };
    manifest.write(dir)?;
    fs::write(dir.join("config.toml"), serialize_config(cfg)?)
        .map_err(|e| Error::io(dir.join("config.toml"), e))?;
    let mut writer = RunWriter::new(dir, cfg.output.xyz)?;
    let outcome = simulate(cfg, &mut writer);
    let flushed = writer.close();
    match outcome.and_then(|s| flushed.map(|_| s)) {
        Ok(summary) => {
            manifest.status = RunStatus::Completed;
            manifest.summary = Some(summary.clone());
            manifest.write(dir)?;
            Ok(summary)
        }
        Err(e) => {
            manifest.status = RunStatus::Failed;
            manifest.failure = Some(e.to_string());
            manifest.summary = writer.partial_summary();
            manifest.write(dir)?;
            Err(e)
        }
    }
}

fn simulate(cfg: &RunConfig, writer: &mut RunWriter) -> Result<Summary> {
    let p = cfg.params()?;
    let opts = cfg.resolved_sim();
    let mut sampler = cfg.sampler();
    match cfg.build_mesh()? {
        BuiltMesh::Interval(m) => {
            crate::profiles::check_margin(&cfg.profile, [m.a, m.b, 0.0, 0.0], 1.0);
            let h = cfg.profile.sample(&m)?;
            let state = FilmState::new(Arc::new(m), h)?;
            let out = film::run(
                state,
                &p,
                &opts,
                &sampler,
                &mut Adapter {
                    w: writer,
                    mirror: None,
                },
            )?;
            Ok(summarize(&out, &sampler, &p))
        }
        BuiltMesh::Tri(m) => {
            let h = cfg.profile.sample(&m)?;
            let mirror = if cfg.domain.quarter {
                let q = Arc::new(QuadrantMirror::new(&m)?);
                sampler.mirror = Some(q.clone());
                Some(q)
            } else {
                None
            };
            let state = FilmState::new(Arc::new(m), h)?;
            let out = film::run(
                state,
                &p,
                &opts,
                &sampler,
                &mut Adapter { w: writer, mirror },
            )?;
            Ok(summarize(&out, &sampler, &p))
        }
    }
}

fn summarize<M: FilmMesh>(out: &RunOutput<M>, sampler: &Sampler, p: &WettingParams) -> Summary {
    let s = sampler.sample(
        &*out.state.mesh,
        &out.state.h,
        p,
        out.state.t,
        out.state.step,
    );
    let r = &out.record;
    Summary {
        stop: Some(out.stop),
        t: s.t,
        steps: r.steps,
        mass: s.mass,
        energy: s.energy,
        h_min: s.h_min,
        agglomerates: s.agglomerates,
        holes: s.holes,
        x_c: s.x_c,
        max_mass_drift: r.max_mass_drift,
        max_energy_increase: r.max_energy_increase,
        events: r.events.len(),
    }
}

/// Streams series, events and snapshots of one run to disk as they appear.
struct RunWriter {
    dir: PathBuf,
    xyz: bool,
    series: BufWriter<File>,
    events: BufWriter<File>,
    snapshots: BufWriter<File>,
    n_snapshots: usize,
    n_events: usize,
    last: Option<Sample>,
    error: Option<Error>,
}

impl RunWriter {
    fn new(dir: &Path, xyz: bool) -> Result<Self> {
        let mut series = create(&dir.join(SERIES_FILE))?;
        writeln!(series, "{SERIES_HEADER}").map_err(|e| Error::io(dir.join(SERIES_FILE), e))?;
        let mut snapshots = create(&dir.join(SNAPSHOT_INDEX_FILE))?;
        writeln!(snapshots, "index,t,step")
            .map_err(|e| Error::io(dir.join(SNAPSHOT_INDEX_FILE), e))?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            xyz,
            series,
            events: create(&dir.join(EVENTS_FILE))?,
            snapshots,
            n_snapshots: 0,
            n_events: 0,
            last: None,
            error: None,
        })
    }

    fn put(&mut self, which: &str, line: &str) {
        if self.error.is_some() {
            return;
        }
        let (w, name) = match which {
            "series" => (&mut self.series, SERIES_FILE),
            "events" => (&mut self.events, EVENTS_FILE),
            _ => (&mut self.snapshots, SNAPSHOT_INDEX_FILE),
        };
        if let Err(e) = w.write_all(line.as_bytes()).and_then(|_| w.flush()) {
            self.error = Some(Error::io(self.dir.join(name), e));
        }
    }

    fn close(&mut self) -> Result<()> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        for (w, name) in [
            (&mut self.series, SERIES_FILE),
            (&mut self.events, EVENTS_FILE),
            (&mut self.snapshots, SNAPSHOT_INDEX_FILE),
        ] {
            w.flush().map_err(|e| Error::io(self.dir.join(name), e))?;
        }
        Ok(())
    }

    fn partial_summary(&self) -> Option<Summary> {
        self.last.map(|s| Summary {
            stop: None,
            t: s.t,
            steps: s.step,
            mass: s.mass,
            energy: s.energy,
            h_min: s.h_min,
            agglomerates: s.agglomerates,
            holes: s.holes,
            x_c: s.x_c,
            max_mass_drift: f64::NAN,
            max_energy_increase: f64::NAN,
            events: self.n_events,
        })
    }

    fn snapshot_path(&self, ext: &str) -> PathBuf {
        self.dir
            .join(format!("snapshot_{:04}.{ext}", self.n_snapshots))
    }
}

/// Snapshot writing for each mesh type.
trait Snapshot: FilmMesh {
    fn write_snapshot(
        w: &RunWriter,
        mesh: &Self,
        h: &[f64],
        mirror: Option<&QuadrantMirror>,
    ) -> Result<()>;
}

impl Snapshot for IntervalMesh {
    fn write_snapshot(
        w: &RunWriter,
        mesh: &Self,
        h: &[f64],
        _: Option<&QuadrantMirror>,
    ) -> Result<()> {
        write_profile(
            mesh,
            h,
            &w.snapshot_path(SnapshotFormat::Profile.extension()),
        )
    }
}

impl Snapshot for TriMesh {
    fn write_snapshot(
        w: &RunWriter,
        mesh: &Self,
        h: &[f64],
        mirror: Option<&QuadrantMirror>,
    ) -> Result<()> {
        let full;
        let (mesh, h) = match mirror {
            Some(m) => {
                full = m.expand(h);
                (&m.full, full.as_slice())
            }
            None => (mesh, h),
        };
        let mut formats = vec![
            SnapshotFormat::Vtk,
            SnapshotFormat::Midline,
            SnapshotFormat::Diagonal,
        ];
        if w.xyz {
            formats.push(SnapshotFormat::Xyz);
        }
        for f in formats {
            write_snapshot_3d(mesh, h, &w.snapshot_path(f.extension()), f)?;
        }
        Ok(())
    }
}

struct Adapter<'a> {
    w: &'a mut RunWriter,
    mirror: Option<Arc<QuadrantMirror>>,
}

impl<M: Snapshot> Observer<M> for Adapter<'_> {
    fn on_sample(&mut self, _state: &FilmState<M>, sample: &Sample) -> ControlFlow<()> {
        self.w.last = Some(*sample);
        self.w.put("series", &series_line(sample));
        if self.w.error.is_some() {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    }

    fn on_event(&mut self, event: &Event) {
        self.w.n_events += 1;
        self.w.put("events", &event_line(event));
    }

    fn on_snapshot(&mut self, state: &FilmState<M>) -> Result<()> {
        M::write_snapshot(self.w, &state.mesh, &state.h, self.mirror.as_deref())?;
        let line = format!("{},{},{}\n", self.w.n_snapshots, num(state.t), state.step);
        self.w.put("snapshots", &line);
        self.w.n_snapshots += 1;
        match self.w.error.take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}
