//! Forward cellular-automaton kernel.
//!
//! One step computes, for every burnable cell next to the fire, the
//! normalized propagation probability from each burning Moore neighbor,
//! aggregates them into an ignition probability and compares it with a
//! counter-based uniform draw. Burning cells keep burning with probability
//! `p_continue`. The step reads only the previous state; all changes are
//! collected first and applied afterwards, so results do not depend on how
//! rows are split across workers.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{FireState, Landscape, ModelParams, WindField};
use crate::rng::{uniform_draw, Channel, DrawKey};

/// Default constant of the `tanh(c x)` probability normalization.
pub const DEFAULT_NORMALIZATION_C: f64 = 1.1486328125;

/// A Moore-neighborhood offset with its compass bearing (degrees
/// counterclockwise from East; row index grows southward).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborOffset {
    pub dr: isize,
    pub dc: isize,
    pub bearing_deg: f64,
}

impl NeighborOffset {
    /// Index of this offset in the flattened 3x3 slope block.
    #[inline]
    pub const fn slope_index(&self) -> usize {
        ((self.dr + 1) * 3 + (self.dc + 1)) as usize
    }

    pub const fn is_diagonal(&self) -> bool {
        self.dr != 0 && self.dc != 0
    }

    /// The offset pointing back toward the origin.
    pub const fn opposite(&self) -> NeighborOffset {
        MOORE[7 - self.order_index()]
    }

    const fn order_index(&self) -> usize {
        let i = self.slope_index();
        if i < 4 {
            i
        } else {
            i - 1
        }
    }
}

/// Fixed neighbor order: NW, N, NE, W, E, SW, S, SE (row-major).
pub const MOORE: [NeighborOffset; 8] = [
    NeighborOffset {
        dr: -1,
        dc: -1,
        bearing_deg: 135.0,
    },
    NeighborOffset {
        dr: -1,
        dc: 0,
        bearing_deg: 90.0,
    },
    NeighborOffset {
        dr: -1,
        dc: 1,
        bearing_deg: 45.0,
    },
    NeighborOffset {
        dr: 0,
        dc: -1,
        bearing_deg: 180.0,
    },
    NeighborOffset {
        dr: 0,
        dc: 1,
        bearing_deg: 0.0,
    },
    NeighborOffset {
        dr: 1,
        dc: -1,
        bearing_deg: 225.0,
    },
    NeighborOffset {
        dr: 1,
        dc: 0,
        bearing_deg: 270.0,
    },
    NeighborOffset {
        dr: 1,
        dc: 1,
        bearing_deg: 315.0,
    },
];

pub fn offset_between(from: (usize, usize), to: (usize, usize)) -> Option<NeighborOffset> {
    let dr = to.0 as isize - from.0 as isize;
    let dc = to.1 as isize - from.1 as isize;
    MOORE.iter().copied().find(|o| o.dr == dr && o.dc == dc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationConstant(f64);

impl NormalizationConstant {
    pub fn new(c: f64) -> Result<Self> {
        if c > 0.0 && c.is_finite() {
            Ok(Self(c))
        } else {
            Err(Error::InvalidArgument(format!(
                "normalization constant must be positive, got {c}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for NormalizationConstant {
    fn default() -> Self {
        Self(DEFAULT_NORMALIZATION_C)
    }
}

/// Cell whose vegetation and density factors enter the propagation product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FactorSite {
    Source,
    #[default]
    Target,
}

/// Unit of the stored slope raster. The slope factor always works in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SlopeUnits {
    #[default]
    Degrees,
    Radians,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KernelOptions {
    pub normalization: NormalizationConstant,
    pub factor_site: FactorSite,
    pub slope_units: SlopeUnits,
}

/// `exp(c1 V) * exp(c2 V (cos θ - 1))`, θ in degrees.
#[inline]
pub fn wind_factor(c1: f64, c2: f64, wind_speed: f64, theta_rel_deg: f64) -> f64 {
    let cos_minus_one = theta_rel_deg.to_radians().cos() - 1.0;
    (c1 * wind_speed).exp() * (c2 * wind_speed * cos_minus_one).exp()
}

/// `exp(a θ)`, θ in degrees.
#[inline]
pub fn slope_factor(a: f64, slope_deg: f64) -> f64 {
    (a * slope_deg).exp()
}

/// `tanh(c x)`.
#[inline]
pub fn normalize_prob(x: f64, c: NormalizationConstant) -> f64 {
    (c.0 * x).tanh()
}

/// `1 - Π (1 - p_i)`, accumulated in slice order as `q + p (1 - q)` so a
/// single neighbor yields its own probability exactly.
#[inline]
pub fn ignition_prob(neighbor_probs: &[f64]) -> f64 {
    let mut q = 0.0;
    for &p in neighbor_probs {
        q += p * (1.0 - q);
    }
    q
}

/// Cached factors of one source→target propagation, enough to rebuild the
/// probability and all four parameter derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborTerm {
    /// Normalized probability `f_p(p_propagate)`.
    pub f: f64,
    /// Raw `p_propagate`.
    pub raw: f64,
    /// `p_propagate / p_h`, evaluated as a product.
    pub base: f64,
    pub wind_speed: f64,
    /// `cos θ_rel - 1`.
    pub cos_minus_one: f64,
    pub slope_deg: f64,
    pub veg1: f64,
    pub den1: f64,
}

/// Read-only view of the rasters used by a step.
#[derive(Clone, Copy)]
struct Fields<'a> {
    height: usize,
    width: usize,
    wind_speed: &'a [f64],
    wind_direction: &'a [f64],
    slope: &'a [f64],
    canopy: &'a [f64],
    density: &'a [f64],
}

impl<'a> Fields<'a> {
    fn new(land: &'a Landscape, wind: Option<&'a WindField>) -> Self {
        let (height, width) = land.dims();
        let (ws, wd) = match wind {
            Some(w) => (w.speed.as_slice(), w.direction.as_slice()),
            None => (land.wind_speed.as_slice(), land.wind_direction.as_slice()),
        };
        Self {
            height,
            width,
            wind_speed: ws,
            wind_direction: wd,
            slope: land.slope.as_slice(),
            canopy: land.canopy.as_slice(),
            density: land.density.as_slice(),
        }
    }

    /// Terms of propagation from `src` toward its neighbor along `toward`.
    #[inline]
    fn term(
        &self,
        params: &ModelParams,
        opts: &KernelOptions,
        src: usize,
        dst: usize,
        toward: NeighborOffset,
    ) -> NeighborTerm {
        let site = match opts.factor_site {
            FactorSite::Source => src,
            FactorSite::Target => dst,
        };
        let veg1 = 1.0 + self.canopy[site];
        let den1 = 1.0 + self.density[site];
        let wind_speed = self.wind_speed[src];
        let cos_minus_one = (self.wind_direction[src] - toward.bearing_deg)
            .to_radians()
            .cos()
            - 1.0;
        let stored = self.slope[src * 9 + toward.slope_index()];
        let slope_deg = match opts.slope_units {
            SlopeUnits::Degrees => stored,
            SlopeUnits::Radians => stored.to_degrees(),
        };
        let p_w = (params.c1 * wind_speed).exp() * (params.c2 * wind_speed * cos_minus_one).exp();
        let p_s = (params.a * slope_deg).exp();
        let base = veg1 * den1 * p_w * p_s;
        let raw = params.p_h * base;
        NeighborTerm {
            f: normalize_prob(raw, opts.normalization),
            raw,
            base,
            wind_speed,
            cos_minus_one,
            slope_deg,
            veg1,
            den1,
        }
    }
}

/// Raw `p_propagate` from a burning cell to one of its Moore neighbors.
pub fn propagate_prob(
    params: &ModelParams,
    land: &Landscape,
    from: (usize, usize),
    to: (usize, usize),
    opts: &KernelOptions,
) -> Result<f64> {
    propagation_term(params, land, from, to, opts).map(|t| t.raw)
}

pub fn propagation_term(
    params: &ModelParams,
    land: &Landscape,
    from: (usize, usize),
    to: (usize, usize),
    opts: &KernelOptions,
) -> Result<NeighborTerm> {
    let (h, w) = land.dims();
    for &(row, col) in &[from, to] {
        if row >= h || col >= w {
            return Err(Error::OutOfBounds {
                row,
                col,
                height: h,
                width: w,
            });
        }
    }
    let toward = offset_between(from, to).ok_or_else(|| {
        Error::InvalidArgument(format!("{to:?} is not a Moore neighbor of {from:?}"))
    })?;
    let fields = Fields::new(land, None);
    Ok(fields.term(params, opts, from.0 * w + from.1, to.0 * w + to.1, toward))
}

/// A cell that ignited during a step.
#[derive(Debug, Clone, PartialEq)]
pub struct Ignition {
    pub row: usize,
    pub col: usize,
    pub p_ignite: f64,
    /// Per-burning-neighbor factors in fixed neighbor order; present only
    /// for attached steps.
    pub terms: Option<Vec<NeighborTerm>>,
}

/// What happened during one step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepReport {
    /// 1-based index of the step just computed.
    pub step: usize,
    pub attached: bool,
    pub ignitions: Vec<Ignition>,
    pub burned_out: usize,
}

enum Change {
    BurnOut(usize),
    Ignite(usize, f64, Option<Vec<NeighborTerm>>),
}

/// Inclusive bounding box `(r0, r1, c0, c1)`.
type BBox = (usize, usize, usize, usize);

/// Stateful stepping engine over one landscape.
pub struct Simulator<'a> {
    land: &'a Landscape,
    wind: Option<WindField>,
    params: ModelParams,
    opts: KernelOptions,
    seed: u64,
    state: FireState,
    active: Option<BBox>,
}

impl<'a> Simulator<'a> {
    pub fn new(
        land: &'a Landscape,
        params: ModelParams,
        opts: KernelOptions,
        seed: u64,
        state: FireState,
    ) -> Result<Self> {
        let (h, w) = land.dims();
        state.burning.ensure_shape(&[h, w])?;
        state.burned.ensure_shape(&[h, w])?;
        state.accumulator.ensure_shape(&[h, w])?;
        let mut sim = Self {
            land,
            wind: None,
            params,
            opts,
            seed,
            state,
            active: None,
        };
        sim.active = sim.scan_active((0, h.saturating_sub(1), 0, w.saturating_sub(1)));
        Ok(sim)
    }

    pub fn state(&self) -> &FireState {
        &self.state
    }

    pub fn into_state(self) -> FireState {
        self.state
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Overrides the landscape's wind rasters for subsequent steps.
    pub fn set_wind(&mut self, wind: WindField) -> Result<()> {
        let (h, w) = self.land.dims();
        wind.speed.ensure_shape(&[h, w])?;
        wind.direction.ensure_shape(&[h, w])?;
        self.wind = Some(wind);
        Ok(())
    }

    /// Marks burnable cells as burning with a constant accumulator of 1.0.
    /// Burned and already-burning cells are left alone.
    pub fn inject(&mut self, cells: &[(usize, usize)]) -> Result<()> {
        let (h, w) = self.state.dims();
        if let Some(&(row, col)) = cells.iter().find(|&&(r, c)| r >= h || c >= w) {
            return Err(Error::OutOfBounds {
                row,
                col,
                height: h,
                width: w,
            });
        }
        for &(r, c) in cells {
            if !self.state.burned.get2(r, c) && !self.state.burning.get2(r, c) {
                self.state.burning.set2(r, c, true);
                self.state.accumulator.set2(r, c, 1.0);
                self.active = Some(match self.active {
                    Some((r0, r1, c0, c1)) => (r0.min(r), r1.max(r), c0.min(c), c1.max(c)),
                    None => (r, r, c, c),
                });
            }
        }
        Ok(())
    }

    /// Advances one step. With `attach`, every ignition carries its
    /// per-neighbor factor cache for the backward pass.
    pub fn step(&mut self, attach: bool) -> StepReport {
        let step = self.state.step + 1;
        let mut report = StepReport {
            step,
            attached: attach,
            ..StepReport::default()
        };
        let Some((r0, r1, c0, c1)) = self.active else {
            self.state.step = step;
            return report;
        };
        let (h, w) = self.state.dims();
        let region = (
            r0.saturating_sub(1),
            (r1 + 1).min(h - 1),
            c0.saturating_sub(1),
            (c1 + 1).min(w - 1),
        );

        let fields = Fields::new(self.land, self.wind.as_ref());
        let ctx = StepContext {
            fields,
            params: &self.params,
            opts: &self.opts,
            seed: self.seed,
            step: step as u64,
            burning: self.state.burning.as_slice(),
            burned: self.state.burned.as_slice(),
            attach,
        };
        let rows: Vec<Vec<Change>> = (region.0..region.1 + 1)
            .into_par_iter()
            .with_min_len(4)
            .map(|r| ctx.row_changes(r, region.2, region.3))
            .collect();

        for change in rows.into_iter().flatten() {
            match change {
                Change::BurnOut(i) => {
                    self.state.burning.as_mut_slice()[i] = false;
                    self.state.burned.as_mut_slice()[i] = true;
                    report.burned_out += 1;
                }
                Change::Ignite(i, p, terms) => {
                    self.state.burning.as_mut_slice()[i] = true;
                    self.state.accumulator.as_mut_slice()[i] = p;
                    report.ignitions.push(Ignition {
                        row: i / w,
                        col: i % w,
                        p_ignite: p,
                        terms,
                    });
                }
            }
        }
        self.state.step = step;
        self.active = self.scan_active(region);
        report
    }

    fn scan_active(&self, (r0, r1, c0, c1): BBox) -> Option<BBox> {
        let (h, w) = self.state.dims();
        if h == 0 || w == 0 {
            return None;
        }
        let burning = self.state.burning.as_slice();
        let mut bbox: Option<BBox> = None;
        for r in r0..=r1 {
            let row = &burning[r * w + c0..=r * w + c1];
            let Some(first) = row.iter().position(|&b| b) else {
                continue;
            };
            let last = row.iter().rposition(|&b| b).unwrap_or(first);
            let (a, b) = (c0 + first, c0 + last);
            bbox = Some(match bbox {
                Some((br0, _, bc0, bc1)) => (br0, r, bc0.min(a), bc1.max(b)),
                None => (r, r, a, b),
            });
        }
        bbox
    }
}

struct StepContext<'s> {
    fields: Fields<'s>,
    params: &'s ModelParams,
    opts: &'s KernelOptions,
    seed: u64,
    step: u64,
    burning: &'s [bool],
    burned: &'s [bool],
    attach: bool,
}

impl StepContext<'_> {
    fn row_changes(&self, r: usize, c0: usize, c1: usize) -> Vec<Change> {
        let (h, w) = (self.fields.height, self.fields.width);
        let mut out = Vec::new();
        let mut probs = [0.0f64; 8];
        for c in c0..=c1 {
            let j = r * w + c;
            if self.burning[j] {
                let u = uniform_draw(DrawKey::new(self.seed, self.step, r, c, Channel::Continue));
                if u >= self.params.p_continue {
                    out.push(Change::BurnOut(j));
                }
                continue;
            }
            if self.burned[j] {
                continue;
            }
            let mut n = 0;
            let mut terms = Vec::new();
            for nb in MOORE {
                let (Some(sr), Some(sc)) =
                    (r.checked_add_signed(nb.dr), c.checked_add_signed(nb.dc))
                else {
                    continue;
                };
                if sr >= h || sc >= w {
                    continue;
                }
                let i = sr * w + sc;
                if !self.burning[i] {
                    continue;
                }
                let term = self
                    .fields
                    .term(self.params, self.opts, i, j, nb.opposite());
                probs[n] = term.f;
                n += 1;
                if self.attach {
                    terms.push(term);
                }
            }
            if n == 0 {
                continue;
            }
            let p = ignition_prob(&probs[..n]);
            let u = uniform_draw(DrawKey::new(self.seed, self.step, r, c, Channel::Ignite));
            if u < p {
                out.push(Change::Ignite(j, p, self.attach.then_some(terms)));
            }
        }
        out
    }
}

/// Single functional step: returns the next state and the step report.
pub fn step_forward(
    state: &FireState,
    land: &Landscape,
    params: &ModelParams,
    opts: &KernelOptions,
    seed: u64,
    attach: bool,
) -> Result<(FireState, StepReport)> {
    let mut sim = Simulator::new(land, *params, *opts, seed, state.clone())?;
    let report = sim.step(attach);
    Ok((sim.into_state(), report))
}

pub fn inject_ignitions(state: &FireState, cells: &[(usize, usize)]) -> Result<FireState> {
    let (h, w) = state.dims();
    let land = Landscape::uniform(h, w, 1.0);
    let mut sim = Simulator::new(
        &land,
        ModelParams::default(),
        KernelOptions::default(),
        0,
        state.clone(),
    )?;
    sim.inject(cells)?;
    Ok(sim.into_state())
}

/// Per-step cell counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepCounts {
    pub step: usize,
    pub burning: usize,
    pub burned: usize,
}

impl StepCounts {
    pub fn of(state: &FireState) -> Self {
        Self {
            step: state.step,
            burning: state.burning_count(),
            burned: state.burned_count(),
        }
    }

    pub fn affected(&self) -> usize {
        self.burning + self.burned
    }
}

/// Wind fields that take effect starting at a given 1-based step.
#[derive(Debug, Clone, PartialEq)]
pub struct WindUpdate {
    pub step: usize,
    pub wind: WindField,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub kernel: KernelOptions,
    pub wind_schedule: Vec<WindUpdate>,
    /// Keep a copy of the state after every `k`-th step.
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub final_state: FireState,
    pub snapshots: Vec<FireState>,
    /// Counts after each step, `series[k]` for step `k + 1`.
    pub series: Vec<StepCounts>,
}

pub fn run_simulation(
    land: &Landscape,
    params: &ModelParams,
    init: &Grid<bool>,
    steps: usize,
    seed: u64,
    options: &RunOptions,
) -> Result<SimulationOutput> {
    if let Some(bad) = options
        .wind_schedule
        .iter()
        .find(|u| u.step == 0 || u.step > steps.max(1))
    {
        return Err(Error::ScheduleOutOfRange {
            step: bad.step,
            steps,
        });
    }
    let state = crate::model::new_fire_state(land, init)?;
    let mut sim = Simulator::new(land, *params, options.kernel, seed, state)?;
    let mut schedule: Vec<&WindUpdate> = options.wind_schedule.iter().collect();
    schedule.sort_by_key(|u| u.step);
    let mut next_update = schedule.into_iter().peekable();

    let mut snapshots = Vec::new();
    let mut series = Vec::with_capacity(steps);
    for s in 1..=steps {
        while let Some(u) = next_update.next_if(|u| u.step == s) {
            sim.set_wind(u.wind.clone())?;
        }
        sim.step(false);
        series.push(StepCounts::of(sim.state()));
        if options.snapshot_every.is_some_and(|k| k > 0 && s % k == 0) {
            snapshots.push(sim.state().clone());
        }
    }
    Ok(SimulationOutput {
        final_state: sim.into_state(),
        snapshots,
        series,
    })
}
