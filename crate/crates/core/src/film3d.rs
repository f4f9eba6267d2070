//! Film evolution over a triangulated rectangle (the graph-surface model).

use std::sync::Arc;

use crate::diagnostics::Sampler;
use crate::error::Result;
use crate::film::{self, FilmState, Observer, RunOutput, SimOptions};
use crate::mesh::TriMesh;
use crate::wetting::WettingParams;

pub type State3d = FilmState<TriMesh>;

pub fn initial_state(mesh: TriMesh, h: Vec<f64>) -> Result<State3d> {
    FilmState::new(Arc::new(mesh), h)
}

pub fn step3d(state: &State3d, p: &WettingParams, opts: &SimOptions) -> Result<State3d> {
    film::step(state, p, opts)
}

pub fn run3d(
    initial: State3d,
    p: &WettingParams,
    opts: &SimOptions,
    sampler: &Sampler,
    observer: &mut dyn Observer<TriMesh>,
) -> Result<RunOutput<TriMesh>> {
    film::run(initial, p, opts, sampler, observer)
}
