//! Film evolution on an interval (the two-dimensional model).

use std::sync::Arc;

use crate::diagnostics::Sampler;
use crate::error::Result;
use crate::film::{self, FilmState, Observer, RunOutput, SimOptions};
use crate::mesh::IntervalMesh;
use crate::wetting::WettingParams;

pub type State2d = FilmState<IntervalMesh>;

pub fn initial_state(mesh: IntervalMesh, h: Vec<f64>) -> Result<State2d> {
    FilmState::new(Arc::new(mesh), h)
}

pub fn step(state: &State2d, p: &WettingParams, opts: &SimOptions) -> Result<State2d> {
    film::step(state, p, opts)
}

pub fn run(
    initial: State2d,
    p: &WettingParams,
    opts: &SimOptions,
    sampler: &Sampler,
    observer: &mut dyn Observer<IntervalMesh>,
) -> Result<RunOutput<IntervalMesh>> {
    film::run(initial, p, opts, sampler, observer)
}

pub fn maybe_extend_domain(state: &mut State2d, opts: &SimOptions) -> Result<Option<f64>> {
    film::maybe_extend_domain(state, opts)
}
