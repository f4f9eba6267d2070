//! Initial height fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::P1Mesh;

pub const DEFAULT_FLOOR: f64 = 1e-5;
/// Right edge used for semi-infinite films.
pub const SEMI_INFINITE_X2: f64 = 1e5;

fn default_floor() -> f64 {
    DEFAULT_FLOOR
}

fn unit() -> f64 {
    1.0
}

fn default_far_edge() -> f64 {
    SEMI_INFINITE_X2
}

/// Geometry of an initial film.
///
/// 3D shapes are given by their centre and side lengths; each cuboid is the
/// tensor product of two logistic steps, clipped below at `floor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileSpec {
    Stepped {
        x1: f64,
        x2: f64,
    },
    SemiInfinite {
        x1: f64,
        #[serde(default = "default_far_edge")]
        x2: f64,
    },
    Cuboid {
        #[serde(default)]
        center: [f64; 2],
        size: [f64; 2],
        #[serde(default = "default_floor")]
        floor: f64,
        /// Transition width of the logistic edges.
        #[serde(default = "unit")]
        width: f64,
    },
    SquareRing {
        #[serde(default)]
        center: [f64; 2],
        outer: f64,
        inner: f64,
        #[serde(default = "default_floor")]
        floor: f64,
        /// Transition width of the logistic edges.
        #[serde(default = "unit")]
        width: f64,
    },
    /// Unit square hub with four `(1, limb)` arms.
    Cross {
        #[serde(default)]
        center: [f64; 2],
        limb: f64,
        #[serde(default = "default_floor")]
        floor: f64,
        /// Transition width of the logistic edges.
        #[serde(default = "unit")]
        width: f64,
    },
    Flat {
        value: f64,
    },
}

impl ProfileSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match *self {
            ProfileSpec::Stepped { x1, x2 } | ProfileSpec::SemiInfinite { x1, x2 } => {
                if !finite(&[x1, x2]) || x1 >= x2 {
                    return bad(format!("stepped profile needs x1 < x2, got {x1}, {x2}"));
                }
            }
            ProfileSpec::Cuboid {
                center,
                size,
                floor,
                width,
            } => {
                if !finite(&[center[0], center[1], size[0], size[1]])
                    || size[0] <= 0.0
                    || size[1] <= 0.0
                {
                    return bad(format!("cuboid sides must be positive, got {size:?}"));
                }
                check_floor(floor)?;
                check_width(width)?;
            }
            ProfileSpec::SquareRing {
                outer,
                inner,
                floor,
                width,
                ..
            } => {
                if !(inner > 0.0 && outer > inner && outer.is_finite()) {
                    return bad(format!(
                        "ring needs 0 < inner < outer, got inner {inner}, outer {outer}"
                    ));
                }
                check_floor(floor)?;
                check_width(width)?;
            }
            ProfileSpec::Cross {
                limb, floor, width, ..
            } => {
                if !(limb > 0.0 && limb.is_finite()) {
                    return bad(format!("cross limb must be positive, got {limb}"));
                }
                check_floor(floor)?;
                check_width(width)?;
            }
            ProfileSpec::Flat { value } => {
                if !(value >= 0.0 && value.is_finite()) {
                    return bad(format!("flat value must be non-negative, got {value}"));
                }
            }
        }
        Ok(())
    }

    pub fn is_planar(&self) -> bool {
        matches!(
            self,
            ProfileSpec::Cuboid { .. } | ProfileSpec::SquareRing { .. } | ProfileSpec::Cross { .. }
        )
    }

    /// Bounding box `[xmin, xmax, ymin, ymax]` of the film (x-range only for 1D shapes).
    pub fn extent(&self) -> Option<[f64; 4]> {
        match *self {
            ProfileSpec::Stepped { x1, x2 } | ProfileSpec::SemiInfinite { x1, x2 } => {
                Some([x1, x2, 0.0, 0.0])
            }
            ProfileSpec::Cuboid { center, size, .. } => {
                Some(boxed(center, size[0] / 2.0, size[1] / 2.0))
            }
            ProfileSpec::SquareRing { center, outer, .. } => {
                Some(boxed(center, outer / 2.0, outer / 2.0))
            }
            ProfileSpec::Cross { center, limb, .. } => Some(boxed(center, 0.5 + limb, 0.5 + limb)),
            ProfileSpec::Flat { .. } => None,
        }
    }

    /// Height at a point.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            ProfileSpec::Stepped { x1, x2 } | ProfileSpec::SemiInfinite { x1, x2 } => {
                step(x, x1, x2)
            }
            ProfileSpec::Cuboid {
                center,
                size,
                floor,
                width,
            } => cuboid(x, y, center, size, width).max(floor),
            ProfileSpec::SquareRing {
                center,
                outer,
                inner,
                floor,
                width,
            } => {
                let o = cuboid(x, y, center, [outer, outer], width);
                let i = cuboid(x, y, center, [inner, inner], width);
                (o - i).max(floor)
            }
            ProfileSpec::Cross {
                center,
                limb,
                floor,
                width,
            } => {
                let [cx, cy] = center;
                let arm = 0.5 + limb / 2.0;
                let parts = [
                    cuboid(x, y, center, [1.0, 1.0], width),
                    cuboid(x, y, [cx + arm, cy], [limb, 1.0], width),
                    cuboid(x, y, [cx - arm, cy], [limb, 1.0], width),
                    cuboid(x, y, [cx, cy + arm], [1.0, limb], width),
                    cuboid(x, y, [cx, cy - arm], [1.0, limb], width),
                ];
                parts.into_iter().fold(floor, f64::max)
            }
            ProfileSpec::Flat { value } => value,
        }
    }

    /// Sample at every mesh node.
    pub fn sample<M: P1Mesh + ?Sized>(&self, mesh: &M) -> Result<Vec<f64>> {
        self.validate()?;
        Ok((0..mesh.n_nodes())
            .map(|i| {
                let [x, y] = mesh.node(i);
                self.eval(x, y)
            })
            .collect())
    }
}

fn check_width(width: f64) -> Result<()> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "transition width must be positive, got {width}"
        )));
    }
    Ok(())
}

fn check_floor(floor: f64) -> Result<()> {
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "floor thickness must be positive, got {floor}"
        )));
    }
    Ok(())
}

fn boxed(c: [f64; 2], hx: f64, hy: f64) -> [f64; 4] {
    [c[0] - hx, c[0] + hx, c[1] - hy, c[1] + hy]
}

/// Logistic step `1/(e^{x1−x}+1) + 1/(e^{x−x2}+1) − 1`.
pub fn step(x: f64, x1: f64, x2: f64) -> f64 {
    1.0 / ((x1 - x).exp() + 1.0) + 1.0 / ((x - x2).exp() + 1.0) - 1.0
}

fn cuboid(x: f64, y: f64, c: [f64; 2], size: [f64; 2], w: f64) -> f64 {
    let (hx, hy) = (size[0] / 2.0, size[1] / 2.0);
    step(x / w, (c[0] - hx) / w, (c[0] + hx) / w) * step(y / w, (c[1] - hy) / w, (c[1] + hy) / w)
}

pub fn stepped_profile<M: P1Mesh + ?Sized>(x1: f64, x2: f64, mesh: &M) -> Result<Vec<f64>> {
    ProfileSpec::Stepped { x1, x2 }.sample(mesh)
}

pub fn island_3d<M: P1Mesh + ?Sized>(spec: &ProfileSpec, mesh: &M) -> Result<Vec<f64>> {
    if !spec.is_planar() {
        return Err(Error::InvalidParameter("not a 3D island shape".into()));
    }
    spec.sample(mesh)
}

pub fn flat_profile<M: P1Mesh + ?Sized>(c: f64, mesh: &M) -> Result<Vec<f64>> {
    ProfileSpec::Flat { value: c }.sample(mesh)
}

/// Warn when the film comes closer than `margin` to the domain edge.
pub fn check_margin(spec: &ProfileSpec, domain: [f64; 4], margin: f64) -> bool {
    let Some(e) = spec.extent() else { return true };
    let ok_x = e[0] - domain[0] >= margin
        && (domain[1] - e[1] >= margin || matches!(spec, ProfileSpec::SemiInfinite { .. }));
    let ok_y = !spec.is_planar() || (e[2] - domain[2] >= margin && domain[3] - e[3] >= margin);
    if !(ok_x && ok_y) {
        log::warn!("initial film lies within {margin} of the domain boundary");
    }
    ok_x && ok_y
}
