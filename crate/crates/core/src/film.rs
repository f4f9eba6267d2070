//! Semi-implicit time stepping shared by the interval and triangle solvers.
//!
//! Unknowns are interleaved per node (`2i` ↦ `h_i`, `2i+1` ↦ `μ_i`). Each step
//! solves
//!
//! ```text
//! M h' + τ S(h) μ'              = M h
//! M μ' − (K_{γ/Q} + M_SI) h'    = r
//! ```
//!
//! with `S` the surface stiffness of the graph of `h`, `M_SI` the mass matrix
//! weighted by `(c1 + c2 h_e)·W/Q_e` on elements with `h_e ≤ h̄`, and `r` the
//! load `γ'(h_e)·W/Q_e` on the remaining elements. `W` is `1` for
//! [`WeakForm::Paper`] and `Q_e²` for [`WeakForm::Consistent`].

use std::ops::ControlFlow;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, Sample, Sampler};
use crate::error::{Error, Result};
use crate::fem::{element_load, element_mass, element_stiffness, element_surface_stiffness};
use crate::linalg::{ordering, DirectSolver, Method, SolveOptions, SolveStats};
use crate::mesh::{extend_interval_mesh, Element, IntervalMesh, P1Mesh, TriMesh};
use crate::sparse::CsrMatrix;
use crate::wetting::{
    gamma, gamma_prime, semi_implicit_with, zeta_coeffs, WettingParams, ZetaCoeffs,
};

/// Relative per-step energy increase tolerated before an event is logged.
pub const ENERGY_TOLERANCE: f64 = 1e-6;
/// Relative energy increase that triggers step halving when enabled.
pub const HALVING_TRIGGER: f64 = 1e-4;
/// Deepest subdivision tried by step halving.
pub const MAX_HALVINGS: u32 = 10;

/// Weight of the wetting term in the chemical-potential equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeakForm {
    /// Wetting load divided by `Q`.
    #[default]
    Paper,
    /// Wetting load multiplied by `Q`, the exact first variation of the discrete energy.
    Consistent,
}

impl WeakForm {
    pub fn load_factor(self, q: f64) -> f64 {
        match self {
            WeakForm::Paper => 1.0 / q,
            WeakForm::Consistent => q,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOptions {
    pub tau: f64,
    pub t_end: f64,
    pub weak_form: WeakForm,
    pub solver_rtol: f64,
    pub solver: Method,
    pub lumped_mass: bool,
    pub semi_infinite: bool,
    pub extension_trigger: f64,
    pub extension_unit: f64,
    /// Diagnostics cadence in time units; `0` samples every step.
    pub sample_interval: f64,
    pub snapshot_times: Vec<f64>,
    /// Minimum admissible height; `None` means `−ε`.
    pub unphysical_floor: Option<f64>,
    pub abort_on_unphysical: bool,
    /// Redo a step as two half steps when the energy rises by more than `halving_trigger`
    /// or the height drops below the floor, recursively down to `tau / 2^MAX_HALVINGS`.
    pub halve_on_energy_increase: bool,
    pub halving_trigger: f64,
    /// Stop once `|ΔW|/(τ|W|)` falls below this value.
    pub stationary_tol: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            tau: 0.1,
            t_end: 0.0,
            weak_form: WeakForm::Paper,
            solver_rtol: 1e-10,
            solver: Method::Auto,
            lumped_mass: false,
            semi_infinite: false,
            extension_trigger: 1e-6,
            extension_unit: 1.0,
            sample_interval: 1.0,
            snapshot_times: Vec::new(),
            unphysical_floor: None,
            abort_on_unphysical: true,
            halve_on_energy_increase: false,
            halving_trigger: HALVING_TRIGGER,
            stationary_tol: None,
        }
    }
}

impl SimOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if !(self.solver_rtol > 0.0 && self.solver_rtol <= 1e-4) {
            return bad(format!(
                "solver_rtol must lie in (0, 1e-4], got {}",
                self.solver_rtol
            ));
        }
        if !(self.extension_trigger > 0.0
            && self.extension_unit > 0.0
            && self.extension_unit.is_finite())
        {
            return bad("extension trigger and unit must be positive".into());
        }
        if !(self.sample_interval >= 0.0 && self.sample_interval.is_finite()) {
            return bad(format!(
                "sample_interval must be non-negative, got {}",
                self.sample_interval
            ));
        }
        if self
            .snapshot_times
            .iter()
            .any(|t| !(t.is_finite() && *t >= 0.0))
        {
            return bad("snapshot times must be finite and non-negative".into());
        }
        if !(self.halving_trigger >= 0.0 && self.halving_trigger.is_finite()) {
            return bad(format!(
                "halving_trigger must be non-negative, got {}",
                self.halving_trigger
            ));
        }
        if let Some(tol) = self.stationary_tol {
            if !(tol > 0.0) {
                return bad(format!("stationary_tol must be positive, got {tol}"));
            }
        }
        Ok(())
    }

    pub fn floor(&self, p: &WettingParams) -> f64 {
        self.unphysical_floor.unwrap_or(-p.epsilon)
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.tau - 1e-9).ceil().max(0.0) as usize
    }
}

/// Mesh capabilities needed by the stepper.
pub trait FilmMesh: P1Mesh + Clone + std::fmt::Debug + 'static {
    /// Fill-reducing ordering of the interleaved unknowns, if the natural one is poor.
    fn dof_ordering(&self) -> Option<Vec<usize>> {
        None
    }

    /// The mesh grown by `units` to the right, for semi-infinite films.
    fn extended_right(&self, _units: f64) -> Option<Result<Self>> {
        None
    }

    /// Node at the right end of the domain, if the mesh has one.
    fn right_end(&self) -> Option<usize> {
        None
    }
}

impl FilmMesh for IntervalMesh {
    fn extended_right(&self, units: f64) -> Option<Result<Self>> {
        Some(extend_interval_mesh(self, units))
    }

    fn right_end(&self) -> Option<usize> {
        Some(self.n_cells)
    }
}

impl FilmMesh for TriMesh {
    fn dof_ordering(&self) -> Option<Vec<usize>> {
        let nodes = ordering::nested_dissection(self.coords(), &self.adjacency());
        Some(ordering::expand_to_dofs(&nodes, 2))
    }
}

/// Height and chemical potential on a mesh at time `t`.
#[derive(Debug, Clone)]
pub struct FilmState<M> {
    pub mesh: Arc<M>,
    pub h: Vec<f64>,
    pub mu: Vec<f64>,
    pub t: f64,
    pub step: usize,
}

impl<M: P1Mesh> FilmState<M> {
    pub fn new(mesh: Arc<M>, h: Vec<f64>) -> Result<Self> {
        if h.len() != mesh.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_nodes(),
                got: h.len(),
            });
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("height field"));
        }
        let mu = vec![0.0; h.len()];
        Ok(FilmState {
            mesh,
            h,
            mu,
            t: 0.0,
            step: 0,
        })
    }

    pub fn mass(&self) -> f64 {
        diagnostics::mass(&*self.mesh, &self.h)
    }

    pub fn energy(&self, p: &WettingParams) -> f64 {
        diagnostics::energy(&*self.mesh, &self.h, p)
    }
}

type Local = [[f64; 3]; 3];

fn lump(m: Local, n: usize) -> Local {
    let mut d = [[0.0; 3]; 3];
    for i in 0..n {
        d[i][i] = m[i].iter().take(n).sum();
    }
    d
}

/// Builds and solves the per-step block system; keeps the sparsity pattern
/// and the symbolic factorization for its mesh.
#[derive(Debug, Clone)]
pub struct Stepper<M> {
    mesh: Arc<M>,
    params: WettingParams,
    zeta: ZetaCoeffs,
    pattern: CsrMatrix,
    /// For each element and local pair: value positions of `(2i, 2j)` and `(2i+1, 2j)`.
    slots: Vec<[[(usize, usize); 3]; 3]>,
    solver: DirectSolver,
}

impl<M: FilmMesh> Stepper<M> {
    pub fn new(mesh: Arc<M>, p: &WettingParams, method: Method) -> Result<Self> {
        p.validate()?;
        let n = mesh.n_nodes();
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for el in mesh.elements() {
            for &i in el.nodes() {
                cols[i].extend_from_slice(el.nodes());
            }
        }
        let mut row_ptr = vec![0usize];
        let mut col_idx = Vec::new();
        for c in &mut cols {
            c.sort_unstable();
            c.dedup();
        }
        for c in &cols {
            for _ in 0..2 {
                for &j in c {
                    col_idx.push(2 * j);
                    col_idx.push(2 * j + 1);
                }
                row_ptr.push(col_idx.len());
            }
        }
        let nnz = col_idx.len();
        let pattern = CsrMatrix::from_parts(2 * n, 2 * n, row_ptr, col_idx, vec![0.0; nnz])?;
        let slots = mesh
            .elements()
            .map(|el| {
                let mut s = [[(0, 0); 3]; 3];
                for a in 0..el.n {
                    for b in 0..el.n {
                        let (i, j) = (el.nodes[a], el.nodes[b]);
                        let top = pattern
                            .position(2 * i, 2 * j)
                            .expect("pattern covers element");
                        let bot = pattern
                            .position(2 * i + 1, 2 * j)
                            .expect("pattern covers element");
                        s[a][b] = (top, bot);
                    }
                }
                s
            })
            .collect();
        let mut solver = DirectSolver::new(method);
        if let Some(order) = mesh.dof_ordering() {
            solver = solver.with_ordering(order);
        }
        Ok(Stepper {
            mesh,
            params: *p,
            zeta: zeta_coeffs(p),
            pattern,
            slots,
            solver,
        })
    }

    pub fn mesh(&self) -> &Arc<M> {
        &self.mesh
    }

    /// Block matrix and right-hand side for one step from `h`.
    pub fn system(
        &self,
        h: &[f64],
        tau: f64,
        form: WeakForm,
        lumped: bool,
    ) -> Result<(CsrMatrix, Vec<f64>)> {
        crate::fem::check_field(&*self.mesh, h, "height field")?;
        let mut a = self.pattern.clone();
        let mut rhs = vec![0.0; a.n_rows()];
        let vals = a.values_mut();
        for (el, slots) in self.mesh.elements().zip(&self.slots) {
            let (mloc, sloc, kloc, msi, load) = self.element_blocks(&el, h, form, lumped);
            let n = el.n;
            for x in 0..n {
                let i = el.nodes[x];
                let mut mh = 0.0;
                for y in 0..n {
                    let (top, bot) = slots[x][y];
                    vals[top] += mloc[x][y];
                    vals[top + 1] += tau * sloc[x][y];
                    vals[bot] -= kloc[x][y] + msi[x][y];
                    vals[bot + 1] += mloc[x][y];
                    mh += mloc[x][y] * h[el.nodes[y]];
                }
                rhs[2 * i] += mh;
                rhs[2 * i + 1] += load[x];
            }
        }
        Ok((a, rhs))
    }

    #[allow(clippy::type_complexity)]
    fn element_blocks(
        &self,
        el: &Element,
        h: &[f64],
        form: WeakForm,
        lumped: bool,
    ) -> (Local, Local, Local, Local, [f64; 3]) {
        let p = &self.params;
        let g = el.gradient(h);
        let q = (1.0 + g[0] * g[0] + g[1] * g[1]).sqrt();
        let he = el.average(h);
        let mut mloc = element_mass(el, 1.0);
        let sloc = element_surface_stiffness(el, g);
        let kloc = element_stiffness(el, gamma(he, p) / q);
        let w = form.load_factor(q);
        let lin = semi_implicit_with(he, p, &self.zeta);
        let mut msi = element_mass(el, lin.coeff * w);
        let load = element_load(el, lin.offset * w);
        if lumped {
            mloc = lump(mloc, el.n);
            msi = lump(msi, el.n);
        }
        (mloc, sloc, kloc, msi, load)
    }

    /// Advance `h` by one step of size `tau`, returning `(h', μ')`.
    pub fn solve(
        &mut self,
        h: &[f64],
        tau: f64,
        form: WeakForm,
        lumped: bool,
        rtol: f64,
    ) -> Result<(Vec<f64>, Vec<f64>, SolveStats)> {
        let (a, rhs) = self.system(h, tau, form, lumped)?;
        let opts = SolveOptions {
            rtol,
            ..SolveOptions::default()
        };
        let (x, stats) = self.solver.solve(&a, &rhs, &opts)?;
        let n = h.len();
        let mut hn = Vec::with_capacity(n);
        let mut mu = Vec::with_capacity(n);
        for i in 0..n {
            hn.push(x[2 * i]);
            mu.push(x[2 * i + 1]);
        }
        if hn.iter().chain(&mu).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("step solution"));
        }
        Ok((hn, mu, stats))
    }
}

/// `Σ_e [γ(h_e)/Q_e ∫∇h·∇φi + γ'(h_e)·W(Q_e) ∫φi]`: the weak chemical
/// potential with the wetting derivative taken explicitly. For
/// [`WeakForm::Consistent`] this is the exact gradient of [`diagnostics::energy`].
pub fn weak_chemical_potential<M: P1Mesh + ?Sized>(
    mesh: &M,
    h: &[f64],
    p: &WettingParams,
    form: WeakForm,
) -> Vec<f64> {
    let mut r = vec![0.0; mesh.n_nodes()];
    for el in mesh.elements() {
        let g = el.gradient(h);
        let q = (1.0 + g[0] * g[0] + g[1] * g[1]).sqrt();
        let he = el.average(h);
        let k = element_stiffness(&el, gamma(he, p) / q);
        let l = element_load(&el, gamma_prime(he, p) * form.load_factor(q));
        for x in 0..el.n {
            let mut s = l[x];
            for y in 0..el.n {
                s += k[x][y] * h[el.nodes[y]];
            }
            r[el.nodes[x]] += s;
        }
    }
    r
}

/// One step from `state` with a throwaway stepper.
pub fn step<M: FilmMesh>(
    state: &FilmState<M>,
    p: &WettingParams,
    opts: &SimOptions,
) -> Result<FilmState<M>> {
    opts.validate()?;
    let mut st = Stepper::new(state.mesh.clone(), p, opts.solver)?;
    let (h, mu, _) = st.solve(
        &state.h,
        opts.tau,
        opts.weak_form,
        opts.lumped_mass,
        opts.solver_rtol,
    )?;
    let floor = opts.floor(p);
    let min_h = h.iter().copied().fold(f64::INFINITY, f64::min);
    if min_h < floor && opts.abort_on_unphysical {
        return Err(Error::Unphysical {
            t: state.t + opts.tau,
            min_h,
            floor,
        });
    }
    Ok(FilmState {
        mesh: state.mesh.clone(),
        h,
        mu,
        t: state.t + opts.tau,
        step: state.step + 1,
    })
}

/// Grow the domain when the far-field height has moved off 1. Returns the
/// added mass when an extension happened.
pub fn maybe_extend_domain<M: FilmMesh>(
    state: &mut FilmState<M>,
    opts: &SimOptions,
) -> Result<Option<f64>> {
    if !opts.semi_infinite {
        return Ok(None);
    }
    let Some(end) = state.mesh.right_end() else {
        return Ok(None);
    };
    if (state.h[end] - 1.0).abs() < opts.extension_trigger {
        return Ok(None);
    }
    let Some(grown) = state.mesh.extended_right(opts.extension_unit) else {
        return Ok(None);
    };
    let grown = Arc::new(grown?);
    let before = state.mass();
    let n_new = grown.n_nodes();
    let last_mu = *state.mu.last().unwrap_or(&0.0);
    state.h.resize(n_new, 1.0);
    state.mu.resize(n_new, last_mu);
    state.mesh = grown;
    Ok(Some(state.mass() - before))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    PinchOff,
    Absorption,
    HoleOpened,
    HoleClosed,
    DomainExtension,
    UnphysicalState,
    EnergyIncrease,
    TimeStepHalved,
    Stationary,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub step: usize,
    pub t: f64,
    pub kind: EventKind,
    pub detail: String,
}

/// Series and events of one run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunRecord {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub initial_mass: f64,
    /// Mass added by domain extensions.
    pub added_mass: f64,
    /// Largest `|A(t) − added − A(0)|/A(0)` over all steps.
    pub max_mass_drift: f64,
    /// Largest per-step `(W_{m+1} − W_m)/|W_m|`.
    pub max_energy_increase: f64,
    pub steps: usize,
    pub solver_iterations: usize,
}

impl RunRecord {
    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    EndTime,
    Stationary,
    Observer,
}

#[derive(Debug, Clone)]
pub struct RunOutput<M> {
    pub state: FilmState<M>,
    pub record: RunRecord,
    pub stop: StopReason,
}

/// Callbacks invoked while a run advances.
pub trait Observer<M> {
    fn on_sample(&mut self, _state: &FilmState<M>, _sample: &Sample) -> ControlFlow<()> {
        ControlFlow::Continue(())
    }

    fn on_event(&mut self, _event: &Event) {}

    fn on_snapshot(&mut self, _state: &FilmState<M>) -> Result<()> {
        Ok(())
    }
}

impl<M> Observer<M> for () {}

fn below(h: &[f64], floor: f64) -> bool {
    h.iter().any(|&v| v < floor)
}

/// Cover one step of length `tau` with two half steps, subdividing each again
/// while it raises the energy and the depth allows.
fn advance_halving<M: FilmMesh>(
    stepper: &mut Stepper<M>,
    h0: &[f64],
    e0: f64,
    p: &WettingParams,
    opts: &SimOptions,
    floor: f64,
    tau: f64,
    depth: u32,
) -> Result<(Vec<f64>, Vec<f64>, usize, f64)> {
    let half = tau / 2.0;
    let mut h = h0.to_vec();
    let mut mu = Vec::new();
    let mut e = e0;
    let mut iters = 0;
    let mut smallest = half;
    for _ in 0..2 {
        let (mut h1, mut mu1, stats) =
            stepper.solve(&h, half, opts.weak_form, opts.lumped_mass, opts.solver_rtol)?;
        iters += stats.iterations;
        let mut e1 = diagnostics::energy(&*stepper.mesh, &h1, p);
        if depth < MAX_HALVINGS && (e1 > e + opts.halving_trigger * e.abs() || below(&h1, floor)) {
            let (h2, mu2, it, sm) =
                advance_halving(stepper, &h, e, p, opts, floor, half, depth + 1)?;
            iters += it;
            smallest = smallest.min(sm);
            h1 = h2;
            mu1 = mu2;
            e1 = diagnostics::energy(&*stepper.mesh, &h1, p);
        }
        h = h1;
        mu = mu1;
        e = e1;
    }
    Ok((h, mu, iters, smallest))
}

/// Advance `initial` to `opts.t_end` with fixed step `opts.tau`.
///
/// Errors from the linear solver or an unphysical state (when aborting) are
/// returned after the events recorded so far have been passed to `observer`.
pub fn run<M: FilmMesh>(
    initial: FilmState<M>,
    p: &WettingParams,
    opts: &SimOptions,
    sampler: &Sampler,
    observer: &mut dyn Observer<M>,
) -> Result<RunOutput<M>> {
    opts.validate()?;
    p.validate()?;
    let mut state = initial;
    let mut stepper = Stepper::new(state.mesh.clone(), p, opts.solver)?;
    let mut record = RunRecord {
        initial_mass: state.mass(),
        ..RunRecord::default()
    };
    let floor = opts.floor(p);
    let t0 = state.t;
    let n_steps = opts.n_steps();
    let mut snapshots: Vec<f64> = opts.snapshot_times.clone();
    snapshots.sort_by(f64::total_cmp);
    let mut next_snap = 0;
    let emit = |record: &mut RunRecord, observer: &mut dyn Observer<M>, e: Event| {
        match e.kind {
            EventKind::EnergyIncrease | EventKind::Warning | EventKind::UnphysicalState => {
                log::warn!("t = {:.4}: {:?} {}", e.t, e.kind, e.detail)
            }
            _ => log::info!("t = {:.4}: {:?} {}", e.t, e.kind, e.detail),
        }
        observer.on_event(&e);
        record.events.push(e);
    };

    let first = sampler.sample(&*state.mesh, &state.h, p, state.t, state.step);
    let mut last_sample = first;
    record.samples.push(first);
    if observer.on_sample(&state, &first).is_break() {
        return Ok(RunOutput {
            state,
            record,
            stop: StopReason::Observer,
        });
    }
    while next_snap < snapshots.len() && snapshots[next_snap] <= state.t + 1e-9 * opts.tau {
        observer.on_snapshot(&state)?;
        next_snap += 1;
    }
    let mut energy = state.energy(p);
    let mut next_sample_t = t0 + opts.sample_interval;
    let mut stop = StopReason::EndTime;

    for k in 1..=n_steps {
        let t_new = t0 + k as f64 * opts.tau;
        let solved = stepper.solve(
            &state.h,
            opts.tau,
            opts.weak_form,
            opts.lumped_mass,
            opts.solver_rtol,
        );
        let (mut h, mut mu, stats) = match solved {
            Ok(v) => v,
            Err(e) => {
                emit(
                    &mut record,
                    observer,
                    Event {
                        step: state.step + 1,
                        t: t_new,
                        kind: EventKind::Warning,
                        detail: format!("step failed: {e}"),
                    },
                );
                return Err(e);
            }
        };
        record.solver_iterations += stats.iterations;
        let mut e_new = diagnostics::energy(&*state.mesh, &h, p);
        if opts.halve_on_energy_increase
            && (e_new > energy + opts.halving_trigger * energy.abs() || below(&h, floor))
        {
            let (h2, mu2, iters, smallest) =
                advance_halving(&mut stepper, &state.h, energy, p, opts, floor, opts.tau, 1)?;
            record.solver_iterations += iters;
            h = h2;
            mu = mu2;
            e_new = diagnostics::energy(&*state.mesh, &h, p);
            emit(
                &mut record,
                observer,
                Event {
                    step: state.step + 1,
                    t: t_new,
                    kind: EventKind::TimeStepHalved,
                    detail: format!("tau {} -> {}", opts.tau, smallest),
                },
            );
        }
        state.h = h;
        state.mu = mu;
        state.t = t_new;
        state.step += 1;
        record.steps += 1;

        let rise = (e_new - energy) / energy.abs().max(f64::MIN_POSITIVE);
        record.max_energy_increase = record.max_energy_increase.max(rise);
        if rise > ENERGY_TOLERANCE {
            emit(
                &mut record,
                observer,
                Event {
                    step: state.step,
                    t: state.t,
                    kind: EventKind::EnergyIncrease,
                    detail: format!("relative increase {rise:.3e}"),
                },
            );
        }
        let stationary = opts
            .stationary_tol
            .is_some_and(|tol| (e_new - energy).abs() / (opts.tau * energy.abs()) < tol);
        energy = e_new;

        let m = state.mass();
        let drift = (m - record.added_mass - record.initial_mass).abs()
            / record.initial_mass.abs().max(f64::MIN_POSITIVE);
        record.max_mass_drift = record.max_mass_drift.max(drift);

        let min_h = state.h.iter().copied().fold(f64::INFINITY, f64::min);
        if min_h < floor {
            emit(
                &mut record,
                observer,
                Event {
                    step: state.step,
                    t: state.t,
                    kind: EventKind::UnphysicalState,
                    detail: format!("min h = {min_h:.6e} below {floor:.6e}"),
                },
            );
            if opts.abort_on_unphysical {
                return Err(Error::Unphysical {
                    t: state.t,
                    min_h,
                    floor,
                });
            }
        }

        if let Some(added) = maybe_extend_domain(&mut state, opts)? {
            record.added_mass += added;
            energy = state.energy(p);
            stepper = Stepper::new(state.mesh.clone(), p, opts.solver)?;
            let b = state.mesh.node(state.mesh.n_nodes() - 1)[0];
            emit(
                &mut record,
                observer,
                Event {
                    step: state.step,
                    t: state.t,
                    kind: EventKind::DomainExtension,
                    detail: format!("right end now {b}"),
                },
            );
        }

        let last = k == n_steps || stationary;
        if state.t >= next_sample_t - 1e-9 * opts.tau || last {
            while next_sample_t <= state.t + 1e-9 * opts.tau {
                next_sample_t += opts.sample_interval.max(opts.tau);
            }
            let s = sampler.sample(&*state.mesh, &state.h, p, state.t, state.step);
            for ev in topology_events(&last_sample, &s) {
                emit(&mut record, observer, ev);
            }
            last_sample = s;
            record.samples.push(s);
            if observer.on_sample(&state, &s).is_break() {
                stop = StopReason::Observer;
            }
        }
        while next_snap < snapshots.len() && snapshots[next_snap] <= state.t + 1e-9 * opts.tau {
            observer.on_snapshot(&state)?;
            next_snap += 1;
        }
        if stop == StopReason::Observer {
            break;
        }
        if stationary {
            emit(
                &mut record,
                observer,
                Event {
                    step: state.step,
                    t: state.t,
                    kind: EventKind::Stationary,
                    detail: "energy stationary".into(),
                },
            );
            stop = StopReason::Stationary;
            break;
        }
    }
    Ok(RunOutput {
        state,
        record,
        stop,
    })
}

fn topology_events(prev: &Sample, cur: &Sample) -> Vec<Event> {
    let mut out = Vec::new();
    let mk = |kind, detail: String| Event {
        step: cur.step,
        t: cur.t,
        kind,
        detail,
    };
    if cur.agglomerates > prev.agglomerates {
        out.push(mk(
            EventKind::PinchOff,
            format!("agglomerates {} -> {}", prev.agglomerates, cur.agglomerates),
        ));
    } else if cur.agglomerates < prev.agglomerates {
        out.push(mk(
            EventKind::Absorption,
            format!("agglomerates {} -> {}", prev.agglomerates, cur.agglomerates),
        ));
    }
    if cur.holes > prev.holes {
        out.push(mk(
            EventKind::HoleOpened,
            format!("holes {} -> {}", prev.holes, cur.holes),
        ));
    } else if cur.holes < prev.holes {
        out.push(mk(
            EventKind::HoleClosed,
            format!("holes {} -> {}", prev.holes, cur.holes),
        ));
    }
    out
}
