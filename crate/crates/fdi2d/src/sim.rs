//! 2D grid simulation of FMII plants and detection filters.
//!
//! Grids are filled along antidiagonals i+j = const, the order induced
//! by the separation-set semantics of 2D initial conditions. Both
//! boundary formulations are supported: data on the rectangle edges
//! x(i,0) = h1(i), x(0,j) = h2(j), and data on the antidiagonal
//! separation set x(k,-k). Output noise, fault schedules, Monte-Carlo
//! threshold calibration and the alarm logic live here as well.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{DetectionFilter, FmiiModel};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("simulation needs a two-operator model, found k = {0}")]
    NotTwoDimensional(usize),
    #[error("scenario carries {got} fault schedules, model has {want} faults")]
    FaultScheduleCount { got: usize, want: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Dense plane of fixed-size vectors over the grid [0..=i_max] x [0..=j_max].
#[derive(Clone, Debug)]
pub struct Plane {
    i_len: usize,
    j_len: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn zeros(i_len: usize, j_len: usize, dim: usize) -> Self {
        Self {
            i_len,
            j_len,
            dim,
            data: vec![0.0; i_len * j_len * dim],
        }
    }

    pub fn i_len(&self) -> usize {
        self.i_len
    }

    pub fn j_len(&self) -> usize {
        self.j_len
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.i_len && j < self.j_len);
        (i * self.j_len + j) * self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        let o = self.offset(i, j);
        &self.data[o..o + self.dim]
    }

    pub fn set(&mut self, i: usize, j: usize, value: &[f64]) {
        let o = self.offset(i, j);
        self.data[o..o + self.dim].copy_from_slice(value);
    }

    pub fn vector(&self, i: usize, j: usize) -> DVector<f64> {
        DVector::from_column_slice(self.get(i, j))
    }

    pub fn scalar(&self, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.dim, 1);
        self.data[self.offset(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Plane) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Boolean plane of alarm flags.
#[derive(Clone, Debug)]
pub struct AlarmPlane {
    i_len: usize,
    j_len: usize,
    data: Vec<bool>,
}

impl AlarmPlane {
    pub fn i_len(&self) -> usize {
        self.i_len
    }

    pub fn j_len(&self) -> usize {
        self.j_len
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.j_len + j]
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }
}

/// Boundary signal along one rectangle edge.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum BoundarySignal {
    Zero,
    Constant(Vec<f64>),
    /// Explicit samples, zero-extended beyond the stored range.
    Samples(Vec<Vec<f64>>),
}

impl BoundarySignal {
    fn eval(&self, index: usize, dim: usize) -> DVector<f64> {
        match self {
            BoundarySignal::Zero => DVector::zeros(dim),
            BoundarySignal::Constant(v) => DVector::from_column_slice(v),
            BoundarySignal::Samples(rows) => rows
                .get(index)
                .map(|v| DVector::from_column_slice(v))
                .unwrap_or_else(|| DVector::zeros(dim)),
        }
    }
}

/// Initial data: either the rectangle-edge formulation or seeds on the
/// antidiagonal separation set i + j = 0.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum BoundaryData {
    Rectangle {
        /// x(i, 0) = h1(i)
        h1: BoundarySignal,
        /// x(0, j) = h2(j)
        h2: BoundarySignal,
    },
    Diagonal {
        /// x(k, -k) = value; unspecified cells are zero.
        seeds: Vec<(i64, Vec<f64>)>,
    },
}

/// Input schedule u(i,j).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum InputSchedule {
    Zero,
    Constant(Vec<f64>),
    /// u(i, j) = profile[j] for every i (boundary data distributed as an
    /// input, as in the heat-exchanger discretization).
    ColumnProfile(Vec<Vec<f64>>),
}

impl InputSchedule {
    pub fn eval_into(&self, i: i64, j: i64, out: &mut DVector<f64>) {
        match self {
            InputSchedule::Zero => out.fill(0.0),
            InputSchedule::Constant(v) => out.copy_from_slice(v),
            InputSchedule::ColumnProfile(profile) => {
                let _ = i;
                let row = if j < 0 {
                    None
                } else {
                    profile.get(j as usize).or(profile.last())
                };
                match row {
                    Some(v) => out.copy_from_slice(v),
                    None => out.fill(0.0),
                }
            }
        }
    }

    pub fn eval(&self, _i: i64, j: i64, dim: usize) -> DVector<f64> {
        match self {
            InputSchedule::Zero => DVector::zeros(dim),
            InputSchedule::Constant(v) => DVector::from_column_slice(v),
            InputSchedule::ColumnProfile(profile) => {
                if j < 0 {
                    return DVector::zeros(dim);
                }
                profile
                    .get(j as usize)
                    .map(|v| DVector::from_column_slice(v))
                    .unwrap_or_else(|| {
                        profile
                            .last()
                            .map(|v| DVector::from_column_slice(v))
                            .unwrap_or_else(|| DVector::zeros(dim))
                    })
            }
        }
    }
}

/// Scalar fault signal over the grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum FaultSchedule {
    Off,
    /// Constant severity on a rectangle of nodes; open-ended bounds are None.
    Step {
        i_min: usize,
        i_max: Option<usize>,
        j_min: usize,
        j_max: Option<usize>,
        severity: f64,
    },
    /// Single-node impulse.
    Pulse { i: usize, j: usize, severity: f64 },
}

impl FaultSchedule {
    pub fn eval(&self, i: i64, j: i64) -> f64 {
        if i < 0 || j < 0 {
            return 0.0;
        }
        let (i, j) = (i as usize, j as usize);
        match self {
            FaultSchedule::Off => 0.0,
            FaultSchedule::Step {
                i_min,
                i_max,
                j_min,
                j_max,
                severity,
            } => {
                let i_ok = i >= *i_min && i_max.map_or(true, |m| i <= m);
                let j_ok = j >= *j_min && j_max.map_or(true, |m| j <= m);
                if i_ok && j_ok {
                    *severity
                } else {
                    0.0
                }
            }
            FaultSchedule::Pulse { i: pi, j: pj, severity } => {
                if i == *pi && j == *pj {
                    *severity
                } else {
                    0.0
                }
            }
        }
    }
}

/// Full description of one simulation run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scenario {
    pub i_max: usize,
    pub j_max: usize,
    pub boundary: BoundaryData,
    pub input: InputSchedule,
    /// One schedule per model fault, in model order.
    pub faults: Vec<FaultSchedule>,
    /// Standard deviation of the additive Gaussian output noise.
    pub noise_std: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn quiet(i_max: usize, j_max: usize, fault_count: usize) -> Self {
        Self {
            i_max,
            j_max,
            boundary: BoundaryData::Rectangle {
                h1: BoundarySignal::Zero,
                h2: BoundarySignal::Zero,
            },
            input: InputSchedule::Zero,
            faults: vec![FaultSchedule::Off; fault_count],
            noise_std: 0.0,
            seed: 0,
        }
    }

    /// Copy with every fault switched off.
    pub fn fault_free(&self) -> Self {
        let mut s = self.clone();
        s.faults = vec![FaultSchedule::Off; s.faults.len()];
        s
    }
}

/// Plant trajectory plus the (noisy) output plane it produced.
pub struct PlantRun {
    pub states: Plane,
    pub outputs: Plane,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FillOrder {
    Antidiagonal,
    RowMajor,
}

/// Simulates the plant over the scenario rectangle with the canonical
/// antidiagonal sweep.
pub fn simulate_plant(model: &FmiiModel, scenario: &Scenario) -> Result<PlantRun, SimError> {
    simulate_plant_ordered(model, scenario, FillOrder::Antidiagonal)
}

/// Sweep-order-parametric variant; row-major and antidiagonal fills
/// agree because each node depends only on its west and south
/// neighbours.
pub fn simulate_plant_ordered(
    model: &FmiiModel,
    scenario: &Scenario,
    order: FillOrder,
) -> Result<PlantRun, SimError> {
    if model.order() != 2 {
        return Err(SimError::NotTwoDimensional(model.order()));
    }
    if scenario.faults.len() != model.fault_count() {
        return Err(SimError::FaultScheduleCount {
            got: scenario.faults.len(),
            want: model.fault_count(),
        });
    }
    let n = model.state_dim();
    let states = match &scenario.boundary {
        BoundaryData::Rectangle { h1, h2 } => {
            fill_rectangle(model, scenario, h1, h2, order)
        }
        BoundaryData::Diagonal { seeds } => fill_from_diagonal(model, scenario, seeds),
    };
    let _ = n;
    let outputs = emit_outputs(model, scenario, &states);
    Ok(PlantRun { states, outputs })
}

/// Reusable per-sweep state: precomputed fault push vectors and work
/// buffers, so the grid fill does not allocate per node.
struct NodeUpdater<'a> {
    model: &'a FmiiModel,
    scenario: &'a Scenario,
    /// Per fault, per slot: signature columns summed (an n-vector).
    fault_push: Vec<[DVector<f64>; 2]>,
    u_west: DVector<f64>,
    u_south: DVector<f64>,
    west_buf: Vec<f64>,
    south_buf: Vec<f64>,
    out: DVector<f64>,
}

impl<'a> NodeUpdater<'a> {
    fn new(model: &'a FmiiModel, scenario: &'a Scenario) -> Self {
        let n = model.state_dim();
        let m = model.input_dim();
        let fault_push = model
            .faults
            .iter()
            .map(|f| {
                let ones0 = DVector::from_element(f.maps[0].ncols(), 1.0);
                let ones1 = DVector::from_element(f.maps[1].ncols(), 1.0);
                [&f.maps[0] * ones0, &f.maps[1] * ones1]
            })
            .collect();
        Self {
            model,
            scenario,
            fault_push,
            u_west: DVector::zeros(m),
            u_south: DVector::zeros(m),
            west_buf: vec![0.0; n],
            south_buf: vec![0.0; n],
            out: DVector::zeros(n),
        }
    }

    fn load_parents(&mut self, west: &[f64], south: &[f64]) {
        self.west_buf.copy_from_slice(west);
        self.south_buf.copy_from_slice(south);
    }

    /// x(i,j) from the parents staged with [`Self::load_parents`]:
    /// west = x(i-1,j), south = x(i,j-1).
    fn update(&mut self, i: i64, j: i64) -> &[f64] {
        let n = self.model.state_dim();
        let m = self.model.input_dim();
        let west = nalgebra::DVectorView::from_slice(&self.west_buf, n);
        let south = nalgebra::DVectorView::from_slice(&self.south_buf, n);
        self.out.gemv(1.0, &self.model.shift_ops[0], &west, 0.0);
        self.out.gemv(1.0, &self.model.shift_ops[1], &south, 1.0);
        if m > 0 {
            self.scenario.input.eval_into(i - 1, j, &mut self.u_west);
            self.scenario.input.eval_into(i, j - 1, &mut self.u_south);
            self.out.gemv(1.0, &self.model.input_maps[0], &self.u_west, 1.0);
            self.out.gemv(1.0, &self.model.input_maps[1], &self.u_south, 1.0);
        }
        for (push, schedule) in self.fault_push.iter().zip(&self.scenario.faults) {
            let f_west = schedule.eval(i - 1, j);
            if f_west != 0.0 {
                self.out.axpy(f_west, &push[0], 1.0);
            }
            let f_south = schedule.eval(i, j - 1);
            if f_south != 0.0 {
                self.out.axpy(f_south, &push[1], 1.0);
            }
        }
        self.out.as_slice()
    }
}

fn fill_rectangle(
    model: &FmiiModel,
    scenario: &Scenario,
    h1: &BoundarySignal,
    h2: &BoundarySignal,
    order: FillOrder,
) -> Plane {
    let n = model.state_dim();
    let (il, jl) = (scenario.i_max + 1, scenario.j_max + 1);
    let mut plane = Plane::zeros(il, jl, n);
    for i in 0..il {
        let v = h1.eval(i, n);
        plane.set(i, 0, v.as_slice());
    }
    for j in 0..jl {
        let v = h2.eval(j, n);
        plane.set(0, j, v.as_slice());
    }
    let mut updater = NodeUpdater::new(model, scenario);
    fn step(plane: &mut Plane, updater: &mut NodeUpdater, i: usize, j: usize) {
        updater.load_parents(plane.get(i - 1, j), plane.get(i, j - 1));
        let off = plane.offset(i, j);
        let n = plane.dim();
        plane.data[off..off + n].copy_from_slice(updater.update(i as i64, j as i64));
    }
    match order {
        FillOrder::RowMajor => {
            for i in 1..il {
                for j in 1..jl {
                    step(&mut plane, &mut updater, i, j);
                }
            }
        }
        FillOrder::Antidiagonal => {
            for d in 2..(il + jl - 1) {
                let i_from = 1.max(d.saturating_sub(jl - 1));
                let i_to = (il - 1).min(d - 1);
                for i in i_from..=i_to {
                    let j = d - i;
                    if j < 1 || j > jl - 1 {
                        continue;
                    }
                    step(&mut plane, &mut updater, i, j);
                }
            }
        }
    }
    plane
}

/// Fills the quadrant from separation-set data x(k,-k). The recursion is
/// marched over the triangular skirt {i+j >= 1} that the seeds can
/// influence; cells outside every seed's cone are zero.
fn fill_from_diagonal(model: &FmiiModel, scenario: &Scenario, seeds: &[(i64, Vec<f64>)]) -> Plane {
    let n = model.state_dim();
    let i_hi = scenario.i_max as i64;
    let j_hi = scenario.j_max as i64;
    let k_min = seeds.iter().map(|(k, _)| *k).min().unwrap_or(0).min(0);
    let k_max = seeds.iter().map(|(k, _)| *k).max().unwrap_or(0).max(0);
    let i_lo = k_min.min(0);
    let j_lo = (-k_max).min(0);

    let iw = (i_hi - i_lo + 1) as usize;
    let jw = (j_hi - j_lo + 1) as usize;
    let mut skirt = Plane::zeros(iw, jw, n);
    let at = |i: i64, j: i64| -> (usize, usize) { ((i - i_lo) as usize, (j - j_lo) as usize) };

    let value_at = |plane: &Plane, i: i64, j: i64| -> DVector<f64> {
        if i + j < 0 {
            return DVector::zeros(n);
        }
        if i + j == 0 {
            return seeds
                .iter()
                .find(|(k, _)| *k == i)
                .map(|(_, v)| DVector::from_column_slice(v))
                .unwrap_or_else(|| DVector::zeros(n));
        }
        if i < i_lo || j < j_lo || i > i_hi || j > j_hi {
            return DVector::zeros(n);
        }
        let (a, b) = at(i, j);
        plane.vector(a, b)
    };

    let mut updater = NodeUpdater::new(model, scenario);
    for d in 1..=(i_hi + j_hi) {
        for i in i_lo..=i_hi {
            let j = d - i;
            if j < j_lo || j > j_hi {
                continue;
            }
            let west = value_at(&skirt, i - 1, j);
            let south = value_at(&skirt, i, j - 1);
            updater.load_parents(west.as_slice(), south.as_slice());
            let x = updater.update(i, j).to_vec();
            let (a, b) = at(i, j);
            skirt.set(a, b, &x);
        }
    }

    // Copy the quadrant out of the skirt, placing seed data on (0,0).
    let mut plane = Plane::zeros(scenario.i_max + 1, scenario.j_max + 1, n);
    for i in 0..=scenario.i_max {
        for j in 0..=scenario.j_max {
            let v = value_at(&skirt, i as i64, j as i64);
            plane.set(i, j, v.as_slice());
        }
    }
    plane
}

fn emit_outputs(model: &FmiiModel, scenario: &Scenario, states: &Plane) -> Plane {
    let q = model.output_dim();
    let (il, jl) = (states.i_len(), states.j_len());
    let mut outputs = Plane::zeros(il, jl, q);
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let n = model.state_dim();
    let mut y = DVector::zeros(q);
    // Noise is drawn in fixed row-major node order so that results do not
    // depend on the fill order of the state sweep.
    for i in 0..il {
        for j in 0..jl {
            let x = nalgebra::DVectorView::from_slice(states.get(i, j), n);
            y.gemv(1.0, &model.output_map, &x, 0.0);
            if scenario.noise_std > 0.0 {
                for v in y.iter_mut() {
                    *v += scenario.noise_std * standard_normal(&mut rng);
                }
            }
            outputs.set(i, j, y.as_slice());
        }
    }
    outputs
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; two uniforms per draw keep the stream layout simple.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Filter-side boundary data for the estimate plane.
#[derive(Clone, Debug, Default)]
pub enum FilterBoundary {
    /// w(i,0) = w(0,j) = 0 (the default; transients are absorbed by the
    /// threshold stage).
    #[default]
    Zero,
    /// Explicit boundary planes: `bottom[i]` seeds w(i,0), `left[j]`
    /// seeds w(0,j).
    Planes {
        bottom: Vec<Vec<f64>>,
        left: Vec<Vec<f64>>,
    },
}

/// Runs the detection filter over a recorded output plane and returns
/// the per-node Euclidean norm of the residual M w - H y.
pub fn simulate_filter(
    filter: &DetectionFilter,
    outputs: &Plane,
    input: &InputSchedule,
    boundary: &FilterBoundary,
) -> Result<Plane, SimError> {
    let o = filter.state_dim();
    let q = filter.h.ncols();
    if outputs.dim() != q {
        return Err(SimError::Dimension(format!(
            "output plane carries {} signals, filter expects {q}",
            outputs.dim()
        )));
    }
    let (il, jl) = (outputs.i_len(), outputs.j_len());
    let m_inputs = filter.k1.ncols();
    let mut w = Plane::zeros(il, jl, o);
    match boundary {
        FilterBoundary::Zero => {}
        FilterBoundary::Planes { bottom, left } => {
            for i in 0..il {
                if let Some(v) = bottom.get(i) {
                    w.set(i, 0, v);
                }
            }
            for j in 0..jl {
                if let Some(v) = left.get(j) {
                    w.set(0, j, v);
                }
            }
        }
    }
    let mut next = DVector::zeros(o);
    let mut u_west = DVector::zeros(m_inputs);
    let mut u_south = DVector::zeros(m_inputs);
    for d in 2..(il + jl - 1) {
        let i_from = 1.max(d.saturating_sub(jl - 1));
        let i_to = (il - 1).min(d - 1);
        for i in i_from..=i_to {
            let j = d - i;
            if j < 1 || j > jl - 1 {
                continue;
            }
            let w_west = nalgebra::DVectorView::from_slice(w.get(i - 1, j), o);
            let w_south = nalgebra::DVectorView::from_slice(w.get(i, j - 1), o);
            next.gemv(1.0, &filter.f1, &w_west, 0.0);
            next.gemv(1.0, &filter.f2, &w_south, 1.0);
            if m_inputs > 0 {
                input.eval_into(i as i64 - 1, j as i64, &mut u_west);
                input.eval_into(i as i64, j as i64 - 1, &mut u_south);
                next.gemv(1.0, &filter.k1, &u_west, 1.0);
                next.gemv(1.0, &filter.k2, &u_south, 1.0);
            }
            let y_west = nalgebra::DVectorView::from_slice(outputs.get(i - 1, j), q);
            let y_south = nalgebra::DVectorView::from_slice(outputs.get(i, j - 1), q);
            next.gemv(1.0, &filter.e1, &y_west, 1.0);
            next.gemv(1.0, &filter.e2, &y_south, 1.0);
            let off = w.offset(i, j);
            w.data[off..off + o].copy_from_slice(next.as_slice());
        }
    }
    let r_dim = filter.m.nrows();
    let mut r = DVector::zeros(r_dim);
    let mut residual = Plane::zeros(il, jl, 1);
    for i in 0..il {
        for j in 0..jl {
            let w_here = nalgebra::DVectorView::from_slice(w.get(i, j), o);
            let y_here = nalgebra::DVectorView::from_slice(outputs.get(i, j), q);
            r.gemv(1.0, &filter.m, &w_here, 0.0);
            r.gemv(-1.0, &filter.h, &y_here, 1.0);
            residual.set(i, j, &[r.norm()]);
        }
    }
    Ok(residual)
}

/// Monte-Carlo threshold calibration parameters and results.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThresholdSpec {
    /// Number of fault-free randomized runs.
    pub runs: usize,
    /// Horizon: nodes with i, j <= horizon participate in the maximum.
    pub horizon: usize,
    /// One threshold per filter, filled in by [`threshold_mc`].
    pub thresholds: Vec<f64>,
}

impl ThresholdSpec {
    pub fn new(runs: usize, horizon: usize) -> Self {
        Self {
            runs,
            horizon,
            thresholds: Vec::new(),
        }
    }
}

fn perturb_boundary(signal: &BoundarySignal, len: usize, dim: usize, std: f64, rng: &mut ChaCha8Rng) -> BoundarySignal {
    let mut rows = Vec::with_capacity(len);
    for idx in 0..len {
        let mut v = signal.eval(idx, dim);
        for e in v.iter_mut() {
            *e += std * standard_normal(rng);
        }
        rows.push(v.as_slice().to_vec());
    }
    BoundarySignal::Samples(rows)
}

/// Calibrates per-filter thresholds as the maximum residual norm over
/// `spec.runs` fault-free simulations with noisy outputs and perturbed
/// boundary data. Deterministic for a fixed seed.
pub fn threshold_mc(
    model: &FmiiModel,
    filters: &[DetectionFilter],
    base: &Scenario,
    spec: &ThresholdSpec,
    seed: u64,
) -> Result<ThresholdSpec, SimError> {
    let mut out = spec.clone();
    out.thresholds = vec![0.0; filters.len()];
    let n = model.state_dim();
    for run in 0..spec.runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run as u64 + 1);
        let mut scenario = base.fault_free();
        scenario.seed = seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(run as u64 + 1));
        // Boundary data jiggled by the same sigma as the output noise.
        scenario.boundary = match &scenario.boundary {
            BoundaryData::Rectangle { h1, h2 } => BoundaryData::Rectangle {
                h1: perturb_boundary(h1, scenario.i_max + 1, n, scenario.noise_std, &mut rng),
                h2: perturb_boundary(h2, scenario.j_max + 1, n, scenario.noise_std, &mut rng),
            },
            BoundaryData::Diagonal { seeds } => {
                let mut perturbed = Vec::with_capacity(seeds.len());
                for (k, v) in seeds {
                    let mut vv = v.clone();
                    for e in vv.iter_mut() {
                        *e += scenario.noise_std * standard_normal(&mut rng);
                    }
                    perturbed.push((*k, vv));
                }
                BoundaryData::Diagonal { seeds: perturbed }
            }
        };
        let plant = simulate_plant(model, &scenario)?;
        for (f_idx, filter) in filters.iter().enumerate() {
            let residual =
                simulate_filter(filter, &plant.outputs, &scenario.input, &FilterBoundary::Zero)?;
            let hi = spec.horizon.min(scenario.i_max);
            let hj = spec.horizon.min(scenario.j_max);
            for i in 0..=hi {
                for j in 0..=hj {
                    let r = residual.scalar(i, j);
                    if r > out.thresholds[f_idx] {
                        out.thresholds[f_idx] = r;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Applies the alarm logic: alarm_k(i,j) = r_k(i,j) > th_k.
pub fn fdi_decide(residuals: &[Plane], thresholds: &[f64]) -> Vec<AlarmPlane> {
    residuals
        .iter()
        .zip(thresholds)
        .map(|(plane, &th)| {
            let mut data = vec![false; plane.i_len() * plane.j_len()];
            for i in 0..plane.i_len() {
                for j in 0..plane.j_len() {
                    data[i * plane.j_len() + j] = plane.scalar(i, j) > th;
                }
            }
            AlarmPlane {
                i_len: plane.i_len(),
                j_len: plane.j_len(),
                data,
            }
        })
        .collect()
}
