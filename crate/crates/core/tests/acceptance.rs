//! Acceptance criteria 1–10.
//!
//! `cargo test -p dewetting --test acceptance -- --nocapture` runs the fast
//! criteria (1, 2, 4, 5, 10 and 3 over their runs). The figure-scale criteria
//! (6–9 and 3 over their runs) are ignored by default:
//!
//! ```text
//! cargo test --release -p dewetting --test acceptance -- --ignored --nocapture
//! ```
//!
//! `DEWET_ACCEPTANCE=6,9` restricts the long set to the listed criteria.

mod common;

use std::f64::consts::PI;
use std::ops::ControlFlow;
use std::sync::Arc;

use dewetting::diagnostics::{
    first_shedding_time, fit_contact_law, fit_power_law, shedding_threshold,
    wetting_layer_thickness, ContactBand, Sample, Sampler, Window,
};
use dewetting::fem::{assemble_surface_stiffness, element_surface_stiffness};
use dewetting::film::{
    self, EventKind, FilmMesh, FilmState, Observer, RunOutput, SimOptions, WeakForm,
};
use dewetting::mesh::{build_rect_tri_mesh, IntervalMesh, P1Mesh, QuadrantMirror, TriMesh};
use dewetting::profiles::{stepped_profile, ProfileSpec};
use dewetting::wetting::{gamma, gamma_prime, zeta_coeffs};
use dewetting::WettingParams;
use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::Law;

const IDENTITY_TOL: f64 = 1e-10;
const ORACLE_TOL: f64 = 1e-10;
const MASS_TOL: f64 = 1e-8;
const ENERGY_TOL: f64 = 1e-6;
const STATIONARY_TOL: f64 = 1e-10;
const CAP_CLIP: f64 = 0.1;
const H_STAR_SLOPE: (f64, f64) = (1.7, 2.3);
const T_C_EXPONENT: (f64, f64) = (-4.6, -3.4);
const CONTACT_R2: f64 = 0.99;
const Y_INVARIANCE_TOL: f64 = 1e-3;
const EVENT_FACTOR: f64 = 2.0;
const ABSORPTION_MARKS: [f64; 2] = [14710.0, 16340.0];
const TAU: f64 = 0.1;

struct Verdict {
    id: &'static str,
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(id: &'static str, pass: bool, detail: String) -> Self {
        println!(
            "criterion {id:>2}: {}  {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        Verdict { id, pass, detail }
    }
}

fn conclude(verdicts: &[Verdict]) {
    let failed: Vec<String> = verdicts
        .iter()
        .filter(|v| !v.pass)
        .map(|v| format!("{} ({})", v.id, v.detail))
        .collect();
    assert!(failed.is_empty(), "failed criteria: {}", failed.join("; "));
}

/// Worst mass drift and per-step energy rise over a set of runs.
#[derive(Default)]
struct Budget {
    runs: usize,
    drift: f64,
    rise: f64,
    operator: Vec<String>,
}

impl Budget {
    fn add<M>(&mut self, name: &str, out: &RunOutput<M>) {
        self.runs += 1;
        self.drift = self.drift.max(out.record.max_mass_drift);
        self.rise = self.rise.max(out.record.max_energy_increase);
        println!(
            "  {name}: t={:.1} steps={} drift={:.2e} rise={:.2e}",
            out.state.t,
            out.record.steps,
            out.record.max_mass_drift,
            out.record.max_energy_increase
        );
    }

    fn verdict(&self, which: &str) -> Verdict {
        let pass = self.operator.is_empty() && self.drift <= MASS_TOL && self.rise <= ENERGY_TOL;
        let mut detail = format!(
            "{} runs of {which}: max mass drift {:.2e} (≤ {MASS_TOL:.0e}), max step energy rise {:.2e} (≤ {ENERGY_TOL:.0e})",
            self.runs, self.drift, self.rise
        );
        if !self.operator.is_empty() {
            detail.push_str(&format!(", surface operator: {}", self.operator.join("; ")));
        }
        Verdict::new("3", pass, detail)
    }
}

/// S(h) symmetric, constants in its kernel, and positive semidefinite element by element.
fn check_surface_operator<M: P1Mesh + ?Sized>(mesh: &M, h: &[f64]) -> Result<(), String> {
    let s = assemble_surface_stiffness(mesh, h).map_err(|e| e.to_string())?;
    let scale = s.norm_inf();
    let asym = s.max_asymmetry();
    if asym > 1e-12 * scale {
        return Err(format!("asymmetry {asym:.2e}"));
    }
    let row = s.mul_vec(&vec![1.0; mesh.n_nodes()]);
    let kernel = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if kernel > 1e-12 * scale {
        return Err(format!("constant not in kernel ({kernel:.2e})"));
    }
    for el in mesh.elements() {
        let local = element_surface_stiffness(&el, el.gradient(h));
        let n = el.n;
        let m = DMatrix::from_fn(n, n, |i, j| local[i][j]);
        let low = m.symmetric_eigenvalues().min();
        if low < -1e-12 * m.norm() {
            return Err(format!("element eigenvalue {low:.2e}"));
        }
    }
    Ok(())
}

fn options(t_end: f64) -> SimOptions {
    SimOptions {
        tau: TAU,
        t_end,
        weak_form: WeakForm::Consistent,
        halve_on_energy_increase: true,
        halving_trigger: ENERGY_TOL,
        ..Default::default()
    }
}

fn simulate<M: FilmMesh>(
    mesh: M,
    h: Vec<f64>,
    p: &WettingParams,
    opts: &SimOptions,
    sampler: &Sampler,
    observer: &mut dyn Observer<M>,
    budget: &mut Budget,
    name: &str,
) -> RunOutput<M> {
    if let Err(e) = check_surface_operator(&mesh, &h) {
        budget.operator.push(format!("{name}: {e}"));
    }
    let state = FilmState::new(Arc::new(mesh), h).unwrap();
    let out =
        film::run(state, p, opts, sampler, observer).unwrap_or_else(|e| panic!("{name}: {e}"));
    budget.add(name, &out);
    out
}

// ---------------------------------------------------------------- criterion 1

fn criterion_1() -> Verdict {
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let sigma = rng.random_range(0.01..1.0);
        let eps = rng.random_range(0.005..0.3);
        let hb = eps * rng.random_range(0.3..3.0);
        let p = WettingParams::with_h_bar(sigma, eps, hb).unwrap();
        let law = Law::with_h_bar(sigma, eps, hb);
        let z = zeta_coeffs(&p);
        let errs = [
            gamma(0.0, &p) - sigma,
            gamma_prime(0.0, &p),
            gamma(60.0 * eps, &p) - 1.0,
            (z.eval(hb) - law.d1(hb)) / law.d1(hb).abs().max(1.0),
            (z.derivative(hb) - law.d2(hb)) / law.d2(hb).abs().max(1.0),
        ];
        worst = errs.iter().fold(worst, |m, e| m.max(e.abs()));
    }
    Verdict::new(
        "1",
        worst <= IDENTITY_TOL,
        format!("20 random (σ, ε, h̄): worst identity / C¹ matching error {worst:.2e} (≤ {IDENTITY_TOL:.0e})"),
    )
}

// ---------------------------------------------------------------- criterion 2

fn criterion_2() -> Verdict {
    let line = common::interval_cases(2, 50);
    let tri = common::triangle_cases(3, 50);
    Verdict::new(
        "2",
        line <= ORACLE_TOL && tri <= ORACLE_TOL,
        format!("50 states each: interval error {line:.2e}, triangle error {tri:.2e} (≤ {ORACLE_TOL:.0e})"),
    )
}

// ---------------------------------------------------------- criteria 4 and 5

struct Equilibrium {
    eps: f64,
    hausdorff: f64,
    h_star: f64,
}

fn small_island(eps: f64, budget: &mut Budget) -> Equilibrium {
    let p = WettingParams::new(0.5, eps).unwrap();
    let mesh = IntervalMesh::with_spacing(-22.5, 22.5, eps).unwrap();
    let h = stepped_profile(-2.5, 2.5, &mesh).unwrap();
    let opts = SimOptions {
        stationary_tol: Some(STATIONARY_TOL),
        sample_interval: 10.0,
        ..options(20_000.0)
    };
    let out = simulate(
        mesh,
        h,
        &p,
        &opts,
        &Sampler::default(),
        &mut (),
        budget,
        &format!("island ε={eps}"),
    );
    assert_eq!(
        out.stop,
        film::StopReason::Stationary,
        "ε={eps} did not reach stationarity"
    );
    let mesh = &*out.state.mesh;
    let h = &out.state.h;
    let h_star = wetting_layer_thickness(mesh, h, CAP_CLIP).unwrap();
    let x = mesh.nodes();
    Equilibrium {
        eps,
        hausdorff: cap_distance(&x, h, h_star),
        h_star,
    }
}

/// Hausdorff distance between the computed island and the circular cap of
/// contact angle π/3 with the same excess area, both clipped at `CAP_CLIP`.
fn cap_distance(x: &[f64], h: &[f64], h_star: f64) -> f64 {
    let dx = x[1] - x[0];
    let excess: f64 = h
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]) - h_star)
        .sum::<f64>()
        * dx;
    let centre = x.iter().zip(h).map(|(a, b)| a * (b - h_star)).sum::<f64>() * dx / excess;
    let th = PI / 3.0;
    let r = (excess / (th - th.sin() * th.cos())).sqrt();
    let half = r * th.sin();
    let cap = |s: f64| (r * r - s * s).max(0.0).sqrt() - r * th.cos() + h_star;
    let ours: Vec<[f64; 2]> = x
        .iter()
        .zip(h)
        .filter(|(_, &v)| v >= CAP_CLIP)
        .map(|(&a, &b)| [a, b])
        .collect();
    let reference: Vec<[f64; 2]> = (0..=20_000)
        .map(|k| -half + 2.0 * half * k as f64 / 20_000.0)
        .map(|s| [centre + s, cap(s)])
        .filter(|q| q[1] >= CAP_CLIP)
        .collect();
    let one_way = |a: &[[f64; 2]], b: &[[f64; 2]]| {
        a.iter()
            .map(|p| {
                b.iter()
                    .map(|q| (p[0] - q[0]).hypot(p[1] - q[1]))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_way(&ours, &reference).max(one_way(&reference, &ours))
}

fn criteria_4_5(budget: &mut Budget) -> [Verdict; 2] {
    let runs: Vec<Equilibrium> = [0.1, 0.05, 0.025, 0.0125]
        .into_iter()
        .map(|e| small_island(e, budget))
        .collect();
    let d: Vec<f64> = runs[..3].iter().map(|r| r.hausdorff).collect();
    let c4 = Verdict::new(
        "4",
        d.windows(2).all(|w| w[1] < w[0]),
        format!(
            "Hausdorff distance to the π/3 cap at ε = 0.1, 0.05, 0.025: {:.4}, {:.4}, {:.4} (strictly decreasing)",
            d[0], d[1], d[2]
        ),
    );
    let eps: Vec<f64> = runs.iter().map(|r| r.eps).collect();
    let hs: Vec<f64> = runs.iter().map(|r| r.h_star).collect();
    let slope = fit_power_law(&eps, &hs).unwrap().coefficients[1];
    let c5 = Verdict::new(
        "5",
        (H_STAR_SLOPE.0..=H_STAR_SLOPE.1).contains(&slope),
        format!(
            "h_* = {} at ε = 0.1 … 0.0125; log-log slope {slope:.3} (in [{}, {}])",
            hs.iter()
                .map(|v| format!("{v:.3e}"))
                .collect::<Vec<_>>()
                .join(", "),
            H_STAR_SLOPE.0,
            H_STAR_SLOPE.1
        ),
    );
    [c4, c5]
}

// --------------------------------------------------------------- criterion 10

fn criterion_10(budget: &mut Budget) -> Verdict {
    let (eps, dx, width) = (0.05, 0.05, 0.2);
    let p = WettingParams::new(0.5, eps).unwrap();
    let line = IntervalMesh::with_spacing(-6.0, 6.0, dx).unwrap();
    let h1 = stepped_profile(-2.5, 2.5, &line).unwrap();
    let opts = options(1.0);
    let out1 = simulate(
        line.clone(),
        h1,
        &p,
        &opts,
        &Sampler::default(),
        &mut (),
        budget,
        "line",
    );
    let nx = line.n_nodes() - 1;
    let sheet = build_rect_tri_mesh(-6.0, 6.0, 0.0, width, nx, 4).unwrap();
    let h2 = ProfileSpec::Stepped { x1: -2.5, x2: 2.5 }
        .sample(&sheet)
        .unwrap();
    let out2 = simulate(
        sheet,
        h2,
        &p,
        &opts,
        &Sampler::default(),
        &mut (),
        budget,
        "sheet",
    );
    let mut err: f64 = 0.0;
    for (k, &v) in out2.state.h.iter().enumerate() {
        err = err.max((v - out1.state.h[k % (nx + 1)]).abs());
    }
    Verdict::new(
        "10",
        err <= Y_INVARIANCE_TOL && (out1.state.t - 1.0).abs() < 1e-9,
        format!("y-invariant 3D vs 2D at t=1, dx=dy={dx}: max-norm difference {err:.2e} (≤ {Y_INVARIANCE_TOL:.0e})"),
    )
}

#[test]
fn fast_criteria() {
    let mut budget = Budget::default();
    let mut v = vec![criterion_1(), criterion_2()];
    v.extend(criteria_4_5(&mut budget));
    v.push(criterion_10(&mut budget));
    v.push(budget.verdict("criteria 4, 5, 10"));
    conclude(&v);
}

// ---------------------------------------------------------------- criterion 6

fn long_island(eps: f64, budget: &mut Budget) -> RunOutput<IntervalMesh> {
    let p = WettingParams::new(0.5, eps).unwrap();
    let mesh = IntervalMesh::with_spacing(-120.0, 120.0, eps).unwrap();
    let h = stepped_profile(-100.0, 100.0, &mesh).unwrap();
    let opts = SimOptions {
        sample_interval: 10.0,
        ..options(20_000.0)
    };
    let sampler = Sampler {
        window: Window::All,
        ..Default::default()
    };
    simulate(
        mesh,
        h,
        &p,
        &opts,
        &sampler,
        &mut (),
        budget,
        &format!("long island ε={eps}"),
    )
}

fn counts(samples: &[Sample]) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for s in samples {
        if out.last().map(|l| l.1) != Some(s.agglomerates) {
            out.push((s.t, s.agglomerates));
        }
    }
    out
}

fn criterion_6(budget: &mut Budget) -> Verdict {
    let coarse = long_island(0.05, budget);
    let fine = long_island(0.025, budget);
    let history = counts(&coarse.record.samples);
    let peak = history.iter().map(|c| c.1).max().unwrap_or(0);
    let reached_four = history.iter().find(|c| c.1 == 4).map(|c| c.0);
    let last = history.last().map_or(0, |c| c.1);
    let first_pinch = coarse
        .record
        .events_of(EventKind::PinchOff)
        .next()
        .map(|e| e.t);
    let absorptions: Vec<f64> = coarse
        .record
        .events_of(EventKind::Absorption)
        .map(|e| e.t)
        .collect();
    let ordered = match (first_pinch, absorptions.first()) {
        (Some(p), Some(&a)) => p < a,
        _ => false,
    };
    let timed = absorptions.len() >= 2
        && ABSORPTION_MARKS
            .iter()
            .zip(&absorptions)
            .all(|(&m, &t)| t >= m / EVENT_FACTOR && t <= m * EVENT_FACTOR);
    let fine_history = counts(&fine.record.samples);
    let fine_peak = fine_history.iter().map(|c| c.1).max().unwrap_or(0);
    let fine_last = fine_history.last().map_or(0, |c| c.1);
    let show = |h: &[(f64, usize)]| {
        h.iter()
            .map(|(t, c)| format!("{c}@{t:.0}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    Verdict::new(
        "6",
        reached_four.is_some() && peak == 4 && last == 2 && ordered && timed && fine_last == 2 && fine_peak < 4,
        format!(
            "ε=0.05 counts [{}], absorptions at {:?} (marks {:?} within ×{EVENT_FACTOR}); ε=0.025 counts [{}]",
            show(&history),
            absorptions.iter().map(|t| t.round()).collect::<Vec<_>>(),
            ABSORPTION_MARKS,
            show(&fine_history)
        ),
    )
}

// ---------------------------------------------------------- criteria 7 and 8

struct UntilShed(f64);

impl<M> Observer<M> for UntilShed {
    fn on_sample(&mut self, _: &FilmState<M>, s: &Sample) -> ControlFlow<()> {
        if s.h_min <= self.0 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    }
}

fn semi_infinite(theta: f64, dx: f64, budget: &mut Budget) -> RunOutput<IntervalMesh> {
    let eps = 0.05;
    let p = WettingParams::from_young_angle(theta, eps).unwrap();
    let mesh = IntervalMesh::with_spacing(-20.0, 20.0, dx).unwrap();
    let spec = ProfileSpec::SemiInfinite { x1: 0.0, x2: 1e5 };
    let h = spec.sample(&mesh).unwrap();
    let opts = SimOptions {
        semi_infinite: true,
        sample_interval: 1.0,
        ..options(1e6)
    };
    let sampler = Sampler {
        window: Window::RightOfPeak,
        contact: Some(ContactBand::default()),
        ..Default::default()
    };
    let name = format!("semi-infinite θ={theta:.4} dx={dx}");
    let out = simulate(
        mesh,
        h,
        &p,
        &opts,
        &sampler,
        &mut UntilShed(shedding_threshold(eps)),
        budget,
        &name,
    );
    assert_eq!(out.stop, film::StopReason::Observer, "{name} never shed");
    out
}

fn criterion_7(budget: &mut Budget) -> Verdict {
    let thetas = [PI / 6.0, PI / 4.0, PI / 3.0];
    let tc: Vec<f64> = thetas
        .iter()
        .map(|&th| {
            let out = semi_infinite(th, 0.05, budget);
            first_shedding_time(&out.record.samples, shedding_threshold(0.05)).unwrap()
        })
        .collect();
    let exponent = fit_power_law(&thetas, &tc).unwrap().coefficients[1];
    Verdict::new(
        "7",
        (T_C_EXPONENT.0..=T_C_EXPONENT.1).contains(&exponent),
        format!(
            "t_c = {:.0}, {:.0}, {:.0} at θ_i = π/6, π/4, π/3; exponent {exponent:.3} (in [{}, {}])",
            tc[0], tc[1], tc[2], T_C_EXPONENT.0, T_C_EXPONENT.1
        ),
    )
}

fn criterion_8(budget: &mut Budget) -> Verdict {
    let out = semi_infinite(PI / 3.0, 0.02, budget);
    let tc = first_shedding_time(&out.record.samples, shedding_threshold(0.05)).unwrap();
    let (t, s): (Vec<f64>, Vec<f64>) = out
        .record
        .samples
        .iter()
        .filter(|x| x.t > 0.0 && x.t <= tc)
        .filter_map(|x| x.x_c.map(|c| (x.t, c)))
        .unzip();
    let fit = fit_contact_law(&t, &s).unwrap();
    Verdict::new(
        "8",
        fit.r_squared >= CONTACT_R2,
        format!(
            "θ_i=π/3, dx=0.02: {} contact samples before t_c={tc:.0}, (c, a, b) = ({:.3}, {:.3}, {:.3}), R² {:.6} (≥ {CONTACT_R2})",
            t.len(),
            fit.coefficients[0],
            fit.coefficients[2],
            fit.coefficients[1],
            fit.r_squared
        ),
    )
}

// ---------------------------------------------------------------- criterion 9

const CUBOID_DX: f64 = 0.05;
const CUBOID_WIDTH: f64 = 0.05;
const SQUARE_SIDE: f64 = 40.0;
const SQUARE_DX: f64 = 0.2;
const SQUARE_WIDTH: f64 = 0.2;

/// Stops once a hole has opened and closed again.
#[derive(Default)]
struct UntilHoleCloses(bool);

impl<M> Observer<M> for UntilHoleCloses {
    fn on_sample(&mut self, _: &FilmState<M>, s: &Sample) -> ControlFlow<()> {
        self.0 |= s.holes > 0;
        if self.0 && s.holes == 0 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    }
}

struct Cuboid {
    size: [f64; 2],
    dx: f64,
    width: f64,
    margin: f64,
    t_end: f64,
    lumped_mass: bool,
}

fn cuboid(
    c: &Cuboid,
    observer: &mut dyn Observer<TriMesh>,
    budget: &mut Budget,
) -> RunOutput<TriMesh> {
    let p = WettingParams::from_young_angle(4.0 * PI / 9.0, 0.05).unwrap();
    let (bx, by) = (c.size[0] / 2.0 + c.margin, c.size[1] / 2.0 + c.margin);
    let (nx, ny) = ((bx / c.dx).round() as usize, (by / c.dx).round() as usize);
    let quarter = build_rect_tri_mesh(0.0, bx, 0.0, by, nx, ny).unwrap();
    let spec = ProfileSpec::Cuboid {
        center: [0.0, 0.0],
        size: c.size,
        floor: 1e-5,
        width: c.width,
    };
    let h = spec.sample(&quarter).unwrap();
    let sampler = Sampler {
        window: Window::Disk {
            center: [0.0, 0.0],
            radius: 0.5,
        },
        mirror: Some(Arc::new(QuadrantMirror::new(&quarter).unwrap())),
        ..Default::default()
    };
    let opts = SimOptions {
        sample_interval: 0.1,
        lumped_mass: c.lumped_mass,
        ..options(c.t_end)
    };
    let name = format!(
        "cuboid ({},{},1) dx={}{}",
        c.size[0],
        c.size[1],
        c.dx,
        if c.lumped_mass { " lumped" } else { "" }
    );
    simulate(quarter, h, &p, &opts, &sampler, observer, budget, &name)
}

fn criterion_9(budget: &mut Budget) -> Verdict {
    let elongated = |length: f64, t_end: f64| Cuboid {
        size: [1.0, length],
        dx: CUBOID_DX,
        width: CUBOID_WIDTH,
        margin: 2.0,
        t_end,
        lumped_mass: false,
    };
    let short = cuboid(&elongated(10.0, 50.0), &mut (), budget);
    let short_counts = counts(&short.record.samples);
    let short_ok = short_counts.last().map(|c| c.1) == Some(1);

    let long = cuboid(&elongated(16.0, 30.0), &mut (), budget);
    let long_counts = counts(&long.record.samples);
    let long_ok = long.record.events_of(EventKind::PinchOff).count() > 0
        && long_counts.last().map(|c| c.1) == Some(2);

    // The consistent mass matrix cannot carry the collapsing hole at this
    // resolution; the lumped one can.
    let square_shape = Cuboid {
        size: [SQUARE_SIDE, SQUARE_SIDE],
        dx: SQUARE_DX,
        width: SQUARE_WIDTH,
        margin: 3.0,
        t_end: 3000.0,
        lumped_mass: true,
    };
    let square = cuboid(&square_shape, &mut UntilHoleCloses::default(), budget);
    let s = &square.record.samples;
    let floor = shedding_threshold(0.05);
    let touched = s.iter().position(|x| x.h_min <= floor);
    let ring = touched.and_then(|k| {
        s[k..]
            .iter()
            .position(|x| x.holes > 0 && x.agglomerates == 1)
            .map(|j| k + j)
    });
    let closed = ring.and_then(|k| s[k..].iter().find(|x| x.holes == 0).map(|x| x.t));
    let last = s.last().unwrap();
    let square_ok = ring.is_some() && closed.is_some() && last.agglomerates == 1 && last.holes == 0;
    let show = |h: &[(f64, usize)]| {
        h.iter()
            .map(|(t, c)| format!("{c}@{t:.1}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    Verdict::new(
        "9",
        short_ok && long_ok && square_ok,
        format!(
            "(1,10,1) counts [{}]; (1,16,1) counts [{}]; ({SQUARE_SIDE},{SQUARE_SIDE},1) centre reaches {floor:.0e} at t={}, ring at t={}, hole closes at t={}, final count {} holes {}",
            show(&short_counts),
            show(&long_counts),
            touched.map_or("never".into(), |k| format!("{:.1}", s[k].t)),
            ring.map_or("never".into(), |k| format!("{:.1}", s[k].t)),
            closed.map_or("never".into(), |t| format!("{t:.1}")),
            last.agglomerates,
            last.holes
        ),
    )
}

fn selected(id: &str) -> bool {
    match std::env::var("DEWET_ACCEPTANCE") {
        Ok(list) => list.split(',').any(|s| s.trim() == id),
        Err(_) => true,
    }
}

#[test]
#[ignore = "figure-scale runs; about an hour in release mode"]
fn long_criteria() {
    let mut budget = Budget::default();
    let mut v = Vec::new();
    let mut ran = Vec::new();
    type Criterion = fn(&mut Budget) -> Verdict;
    let all: [(&str, Criterion); 4] = [
        ("9", criterion_9),
        ("8", criterion_8),
        ("7", criterion_7),
        ("6", criterion_6),
    ];
    for (id, f) in all {
        if selected(id) {
            v.push(f(&mut budget));
            ran.push(id);
        }
    }
    v.push(budget.verdict(&format!("criteria {}", ran.join(", "))));
    conclude(&v);
}
