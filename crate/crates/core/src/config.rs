//! Run configuration files.
//!
//! A configuration is a TOML document:
//!
//! ```toml
//! model = "2d"
//!
//! [wetting]
//! sigma = 0.5          # or theta_i (radians)
//! epsilon = 0.05
//!
//! [profile]
//! kind = "stepped"
//! x1 = -2.5
//! x2 = 2.5
//!
//! [mesh]
//! dx = 0.05
//!
//! [sim]
//! tau = 0.1
//! t_end = 100.0
//!
//! [sweep]
//! epsilon = [0.1, 0.05]
//! ```
//!
//! Unknown keys are rejected. Errors carry the line they refer to.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{ContactBand, Sampler, Window, DEFAULT_AGGLOMERATE_THRESHOLD};
use crate::error::{Error, Result};
use crate::film::SimOptions;
use crate::mesh::{build_rect_tri_mesh_with, IntervalMesh, TriMesh, TriPattern};
use crate::profiles::ProfileSpec;
use crate::wetting::WettingParams;

/// Clearance between the initial film and the domain edge when bounds are omitted.
pub const DEFAULT_MARGIN: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Model {
    /// Curves over an interval.
    #[default]
    #[serde(rename = "2d")]
    TwoD,
    /// Surfaces over a rectangle.
    #[serde(rename = "3d")]
    ThreeD,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WettingConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Young angle in radians, used when `sigma` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_i: Option<f64>,
    pub epsilon: f64,
    /// Defaults to `epsilon`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_bar: Option<f64>,
}

impl WettingConfig {
    pub fn params(&self) -> Result<WettingParams> {
        let sigma = match (self.sigma, self.theta_i) {
            (Some(s), None) => s,
            (None, Some(t)) => t.cos(),
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either sigma or theta_i, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config("one of sigma or theta_i is required".into()))
            }
        };
        WettingParams::with_h_bar(sigma, self.epsilon, self.h_bar.unwrap_or(self.epsilon))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// Defaults to the film extent padded by `DEFAULT_MARGIN`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<[f64; 2]>,
    /// 3D only: simulate the quadrant `[0, x1]×[0, y1]` of a film symmetric
    /// about both axes; diagnostics and snapshots use the mirrored field.
    #[serde(default, skip_serializing_if = "is_false")]
    pub quarter: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    /// Defaults to `dx`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    #[serde(default)]
    pub pattern: TriPattern,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Height separating film from wetting layer when counting agglomerates.
    pub threshold: f64,
    pub window: Window,
    /// Track the effective contact point (2D only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contact: Option<ContactBand>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            threshold: DEFAULT_AGGLOMERATE_THRESHOLD,
            window: Window::All,
            contact: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// Also write `(x, y, h)` text dumps of 3D snapshots.
    #[serde(skip_serializing_if = "is_false")]
    pub xyz: bool,
}

/// Lists of values; a sweep runs the cartesian product.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub epsilon: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sigma: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub theta_i: Vec<f64>,
    /// Island length along x, keeping the island centre.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub length: Vec<f64>,
}

impl SweepConfig {
    pub fn is_empty(&self) -> bool {
        self.epsilon.is_empty()
            && self.sigma.is_empty()
            && self.theta_i.is_empty()
            && self.length.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: Model,
    pub wetting: WettingConfig,
    pub profile: ProfileSpec,
    #[serde(default)]
    pub domain: DomainConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub sim: SimOptions,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "SweepConfig::is_empty")]
    pub sweep: SweepConfig,
}

/// Mesh built from a configuration.
#[derive(Debug, Clone)]
pub enum BuiltMesh {
    Interval(IntervalMesh),
    Tri(TriMesh),
}

/// Parse and validate a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start));
        config_error(line, e.message())
    })?;
    cfg.validate().map_err(|e| match e {
        Error::Config(m) | Error::InvalidParameter(m) => {
            let line = key_line(text, &m);
            config_error(line, &m)
        }
        other => other,
    })?;
    Ok(cfg)
}

pub fn serialize_config(cfg: &RunConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::Config(e.to_string()))
}

fn config_error(line: Option<usize>, msg: &str) -> Error {
    match line {
        Some(l) => Error::Config(format!("line {l}: {msg}")),
        None => Error::Config(msg.to_string()),
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Best-effort line of the first key named in a validation message.
fn key_line(text: &str, msg: &str) -> Option<usize> {
    let key = msg
        .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .find(|w| {
            !w.is_empty()
                && text.lines().any(|l| {
                    let l = l.trim_start();
                    l.starts_with(w) && l[w.len()..].trim_start().starts_with('=')
                })
        })?;
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.starts_with(key) && l[key.len()..].trim_start().starts_with('=')
        })
        .map(|i| i + 1)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.wetting.params()?;
        self.profile.validate()?;
        self.sim.validate()?;
        let planar = self.profile.is_planar();
        match self.model {
            Model::TwoD if planar => {
                return Err(Error::Config("profile kind needs model = \"3d\"".into()));
            }
            Model::ThreeD
                if matches!(
                    self.profile,
                    ProfileSpec::Stepped { .. } | ProfileSpec::SemiInfinite { .. }
                ) =>
            {
                return Err(Error::Config("profile kind needs model = \"2d\"".into()));
            }
            _ => {}
        }
        if self.model == Model::TwoD {
            if self.domain.y.is_some() || self.domain.quarter {
                return Err(Error::Config(
                    "domain y and quarter apply to 3d models only".into(),
                ));
            }
            if self.mesh.ny.is_some() || self.mesh.dy.is_some() {
                return Err(Error::Config(
                    "mesh ny and dy apply to 3d models only".into(),
                ));
            }
        } else if self.diagnostics.contact.is_some() {
            return Err(Error::Config(
                "contact tracking applies to 2d models only".into(),
            ));
        }
        if self.sim.semi_infinite && self.model == Model::ThreeD {
            return Err(Error::Config(
                "semi_infinite applies to 2d models only".into(),
            ));
        }
        if self.mesh.dx.is_some() == self.mesh.nx.is_some() {
            return Err(Error::Config("mesh needs exactly one of dx or nx".into()));
        }
        for (name, v) in [("dx", self.mesh.dx), ("dy", self.mesh.dy)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if self.mesh.nx == Some(0) || self.mesh.ny == Some(0) {
            return Err(Error::Config("nx and ny must be at least 1".into()));
        }
        if !(self.diagnostics.threshold > 0.0 && self.diagnostics.threshold.is_finite()) {
            return Err(Error::Config(format!(
                "threshold must be positive, got {}",
                self.diagnostics.threshold
            )));
        }
        if self.profile.extent().is_none()
            && (self.domain.x.is_none() || (self.model == Model::ThreeD && self.domain.y.is_none()))
        {
            return Err(Error::Config(
                "flat profiles need explicit domain bounds".into(),
            ));
        }
        if !self.sweep.sigma.is_empty() && !self.sweep.theta_i.is_empty() {
            return Err(Error::Config(
                "sweep over either sigma or theta_i, not both".into(),
            ));
        }
        if !self.sweep.length.is_empty() && self.profile.extent().is_none() {
            return Err(Error::Config("length sweeps need an island profile".into()));
        }
        self.bounds()?;
        Ok(())
    }

    /// Domain `[x0, x1, y0, y1]` after defaults (`y` is `[0, 0]` in 2D).
    pub fn bounds(&self) -> Result<[f64; 4]> {
        let e = self.profile.extent();
        let x = match (self.domain.x, e) {
            (Some(x), _) => x,
            (None, Some(e)) => match self.profile {
                ProfileSpec::SemiInfinite { x1, .. } => [x1 - DEFAULT_MARGIN, x1 + DEFAULT_MARGIN],
                _ => [e[0] - DEFAULT_MARGIN, e[1] + DEFAULT_MARGIN],
            },
            (None, None) => unreachable!("validated"),
        };
        let y = match self.model {
            Model::TwoD => [0.0, 0.0],
            Model::ThreeD => match (self.domain.y, e) {
                (Some(y), _) => y,
                (None, Some(e)) => [e[2] - DEFAULT_MARGIN, e[3] + DEFAULT_MARGIN],
                (None, None) => unreachable!("validated"),
            },
        };
        let (x, y) = if self.domain.quarter {
            let xs = if self.domain.x.is_some() {
                x
            } else {
                [0.0, x[1]]
            };
            let ys = if self.domain.y.is_some() {
                y
            } else {
                [0.0, y[1]]
            };
            (xs, ys)
        } else {
            (x, y)
        };
        if !(x[0] < x[1] && x.iter().all(|v| v.is_finite())) {
            return Err(Error::Config(format!(
                "domain x must be increasing, got {x:?}"
            )));
        }
        if self.model == Model::ThreeD && !(y[0] < y[1] && y.iter().all(|v| v.is_finite())) {
            return Err(Error::Config(format!(
                "domain y must be increasing, got {y:?}"
            )));
        }
        if self.domain.quarter && (x[0] != 0.0 || y[0] != 0.0) {
            return Err(Error::Config("quarter domains start at the origin".into()));
        }
        Ok([x[0], x[1], y[0], y[1]])
    }

    pub fn params(&self) -> Result<WettingParams> {
        self.wetting.params()
    }

    pub fn build_mesh(&self) -> Result<BuiltMesh> {
        let [a, b, c, d] = self.bounds()?;
        let cells = |len: f64, n: Option<usize>, h: Option<f64>| match (n, h) {
            (Some(n), _) => n,
            (None, Some(h)) => ((len / h).round() as usize).max(1),
            (None, None) => unreachable!("validated"),
        };
        let nx = cells(b - a, self.mesh.nx, self.mesh.dx);
        match self.model {
            Model::TwoD => Ok(BuiltMesh::Interval(IntervalMesh::new(a, b, nx)?)),
            Model::ThreeD => {
                let ny = match self.mesh.ny {
                    Some(n) => n,
                    None => {
                        let h = self.mesh.dy.or(self.mesh.dx).unwrap_or((b - a) / nx as f64);
                        ((d - c) / h).round().max(1.0) as usize
                    }
                };
                Ok(BuiltMesh::Tri(build_rect_tri_mesh_with(
                    a,
                    b,
                    c,
                    d,
                    nx,
                    ny,
                    self.mesh.pattern,
                )?))
            }
        }
    }

    /// Sampler for the diagnostics section (without the mirror, which needs the mesh).
    pub fn sampler(&self) -> Sampler {
        Sampler {
            threshold: self.diagnostics.threshold,
            window: self.diagnostics.window.clone(),
            contact: self.diagnostics.contact,
            mirror: None,
        }
    }

    /// Simulation options with the profile's implications applied.
    pub fn resolved_sim(&self) -> SimOptions {
        let mut s = self.sim.clone();
        if matches!(self.profile, ProfileSpec::SemiInfinite { .. }) {
            s.semi_infinite = true;
        }
        s
    }

    /// Add snapshot times every `dt` up to `t_end`.
    pub fn add_snapshot_every(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!(
                "snapshot interval must be positive, got {dt}"
            )));
        }
        let n = (self.sim.t_end / dt + 1e-9).floor() as usize;
        for k in 0..=n {
            let t = k as f64 * dt;
            if !self
                .sim
                .snapshot_times
                .iter()
                .any(|&s| (s - t).abs() <= 1e-9 * dt)
            {
                self.sim.snapshot_times.push(t);
            }
        }
        self.sim.snapshot_times.sort_by(f64::total_cmp);
        Ok(())
    }

    /// One configuration per point of the sweep product, each with an empty
    /// sweep and a directory name. A config without axes yields itself.
    pub fn expand_sweep(&self) -> Result<Vec<(String, RunConfig)>> {
        let s = &self.sweep;
        let axis = |v: &[f64]| -> Vec<Option<f64>> {
            if v.is_empty() {
                vec![None]
            } else {
                v.iter().copied().map(Some).collect()
            }
        };
        let mut out = Vec::new();
        for eps in axis(&s.epsilon) {
            for sig in axis(&s.sigma) {
                for th in axis(&s.theta_i) {
                    for len in axis(&s.length) {
                        let mut c = self.clone();
                        c.sweep = SweepConfig::default();
                        let mut name = Vec::new();
                        if let Some(e) = eps {
                            c.wetting.epsilon = e;
                            if c.wetting.h_bar.is_some() {
                                c.wetting.h_bar = Some(e);
                            }
                            name.push(format!("epsilon={e}"));
                        }
                        if let Some(v) = sig {
                            c.wetting.sigma = Some(v);
                            c.wetting.theta_i = None;
                            name.push(format!("sigma={v}"));
                        }
                        if let Some(v) = th {
                            c.wetting.theta_i = Some(v);
                            c.wetting.sigma = None;
                            name.push(format!("theta_i={v}"));
                        }
                        if let Some(l) = len {
                            c.profile = with_length(&c.profile, l)?;
                            name.push(format!("length={l}"));
                        }
                        c.validate()?;
                        let name = if name.is_empty() {
                            "run".to_string()
                        } else {
                            name.join("_")
                        };
                        out.push((name, c));
                    }
                }
            }
        }
        Ok(out)
    }
}

fn with_length(p: &ProfileSpec, l: f64) -> Result<ProfileSpec> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::Config(format!("length must be positive, got {l}")));
    }
    Ok(match p.clone() {
        ProfileSpec::Stepped { x1, x2 } => {
            let c = 0.5 * (x1 + x2);
            ProfileSpec::Stepped {
                x1: c - l / 2.0,
                x2: c + l / 2.0,
            }
        }
        ProfileSpec::Cuboid {
            center,
            size,
            floor,
            width,
        } => ProfileSpec::Cuboid {
            center,
            size: [l, size[1]],
            floor,
            width,
        },
        ProfileSpec::Cross {
            center,
            floor,
            width,
            ..
        } => ProfileSpec::Cross {
            center,
            limb: l,
            floor,
            width,
        },
        ProfileSpec::SquareRing {
            center,
            outer,
            inner,
            floor,
            width,
        } => ProfileSpec::SquareRing {
            center,
            outer: l,
            inner: inner * l / outer,
            floor,
            width,
        },
        other => {
            return Err(Error::Config(format!("cannot set a length on {other:?}")));
        }
    })
}
