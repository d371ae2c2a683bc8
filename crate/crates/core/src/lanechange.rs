//! Two-lane highway merge.
//!
//! The ego starts on the right lane and has to merge into a platoon on the
//! left lane within the time budget. Platoon vehicles follow the ACC model
//! (IDM blended with the constant-acceleration heuristic) with driver
//! parameters redrawn every step from a hidden per-trial box. The ego picks
//! among macro actions.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::behavior_space::{
    BehaviorSpace, BehaviorState, Dimension, Hypothesis, HypotheticalPolicy, Partition,
};
use crate::error::{DomainError, Error, Result};
use crate::search::Environment;
use crate::{outcome_reward, AgentId, Outcome};

pub const ACCEL_MIN: f64 = -5.0;
pub const ACCEL_MAX: f64 = 8.0;
const IDM_EXPONENT: i32 = 4;

fn clamp_accel(a: f64) -> f64 {
    a.clamp(ACCEL_MIN, ACCEL_MAX)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lane {
    Right,
    Left,
    /// Lateral progress toward the left lane, in `[0, 1)`.
    Changing(f64),
}

impl Lane {
    pub fn progress(self) -> f64 {
        match self {
            Lane::Right => 0.0,
            Lane::Left => 1.0,
            Lane::Changing(p) => p,
        }
    }

    /// Whether the vehicle already occupies the left lane for the purpose
    /// of leaders, followers and overlap checks.
    pub fn occupies_left(self) -> bool {
        self.progress() >= 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub lane: Lane,
    /// Front-bumper position (m).
    pub s: f64,
    pub v: f64,
    pub a_last: f64,
    pub length: f64,
}

impl VehicleState {
    pub fn new(lane: Lane, s: f64, v: f64, length: f64) -> Self {
        Self {
            lane,
            s,
            v: v.max(0.0),
            a_last: 0.0,
            length,
        }
    }

    /// Bumper-to-bumper distance to a vehicle ahead.
    pub fn gap_to(&self, leader: &VehicleState) -> f64 {
        leader.s - self.s - leader.length
    }

    /// Semi-implicit Euler step with acceleration `a`; speed stays nonnegative.
    pub fn integrate(&mut self, a: f64, dt: f64) {
        self.v = (self.v + a * dt).max(0.0);
        self.s += self.v * dt;
        self.a_last = a;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverParams {
    pub v_desired: f64,
    pub t_desired: f64,
    pub s_min: f64,
    pub a_factor: f64,
    pub b_comf: f64,
    pub coolness: f64,
}

/// The five varied driver parameters, in behavior-space axis order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverParam {
    VDesired,
    TDesired,
    SMin,
    AFactor,
    BComf,
}

impl DriverParam {
    pub const ALL: [DriverParam; 5] = [
        DriverParam::VDesired,
        DriverParam::TDesired,
        DriverParam::SMin,
        DriverParam::AFactor,
        DriverParam::BComf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DriverParam::VDesired => "v_desired",
            DriverParam::TDesired => "t_desired",
            DriverParam::SMin => "s_min",
            DriverParam::AFactor => "a_factor",
            DriverParam::BComf => "b_comf",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            DriverParam::VDesired => "m/s",
            DriverParam::TDesired => "s",
            DriverParam::SMin => "m",
            DriverParam::AFactor | DriverParam::BComf => "m/s^2",
        }
    }
}

impl DriverParams {
    pub fn get(&self, p: DriverParam) -> f64 {
        match p {
            DriverParam::VDesired => self.v_desired,
            DriverParam::TDesired => self.t_desired,
            DriverParam::SMin => self.s_min,
            DriverParam::AFactor => self.a_factor,
            DriverParam::BComf => self.b_comf,
        }
    }

    pub fn set(&mut self, p: DriverParam, value: f64) {
        match p {
            DriverParam::VDesired => self.v_desired = value,
            DriverParam::TDesired => self.t_desired = value,
            DriverParam::SMin => self.s_min = value,
            DriverParam::AFactor => self.a_factor = value,
            DriverParam::BComf => self.b_comf = value,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = DriverParam::ALL.iter().all(|&p| self.get(p) > 0.0 && self.get(p).is_finite());
        if !positive || !(0.0..=1.0).contains(&self.coolness) {
            return Err(Error::invalid(format!("invalid driver parameters {self:?}")));
        }
        Ok(())
    }
}

/// Full ranges of the varied driver parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriverRanges {
    pub v_desired: [f64; 2],
    pub t_desired: [f64; 2],
    pub s_min: [f64; 2],
    pub a_factor: [f64; 2],
    pub b_comf: [f64; 2],
    pub coolness: f64,
}

impl Default for DriverRanges {
    fn default() -> Self {
        Self {
            v_desired: [10.0, 20.0],
            t_desired: [0.5, 3.0],
            s_min: [0.5, 3.0],
            a_factor: [0.5, 3.0],
            b_comf: [0.5, 4.0],
            coolness: 0.99,
        }
    }
}

impl DriverRanges {
    pub fn range(&self, p: DriverParam) -> [f64; 2] {
        match p {
            DriverParam::VDesired => self.v_desired,
            DriverParam::TDesired => self.t_desired,
            DriverParam::SMin => self.s_min,
            DriverParam::AFactor => self.a_factor,
            DriverParam::BComf => self.b_comf,
        }
    }

    /// Parameters at the center of every range.
    pub fn centers(&self) -> DriverParams {
        let c = |r: [f64; 2]| 0.5 * (r[0] + r[1]);
        DriverParams {
            v_desired: c(self.v_desired),
            t_desired: c(self.t_desired),
            s_min: c(self.s_min),
            a_factor: c(self.a_factor),
            b_comf: c(self.b_comf),
            coolness: self.coolness,
        }
    }

    /// Behavior space over the given parameters.
    pub fn space(&self, params: &[DriverParam]) -> Result<BehaviorSpace> {
        BehaviorSpace::new(
            params
                .iter()
                .map(|&p| {
                    let [lo, hi] = self.range(p);
                    Dimension::new(p.name(), lo, hi, p.unit())
                })
                .collect(),
        )
    }

    /// The five-dimensional full space.
    pub fn full_space(&self) -> Result<BehaviorSpace> {
        self.space(&DriverParam::ALL)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for p in DriverParam::ALL {
            let [lo, hi] = self.range(p);
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                v.push(format!("{}: need 0 < lower < upper, got [{lo}, {hi}]", p.name()));
            }
        }
        if !(0.0..=1.0).contains(&self.coolness) {
            v.push(format!("coolness: {} not in [0, 1]", self.coolness));
        }
        v
    }
}

/// Intelligent Driver Model acceleration.
///
/// A nonpositive gap to the leader is an overlap; the step function reports
/// it as a collision, and the model answers with full braking.
pub fn idm_accel(follower: &VehicleState, leader: Option<&VehicleState>, p: &DriverParams) -> f64 {
    let v = follower.v;
    let free = 1.0 - (v / p.v_desired).powi(IDM_EXPONENT);
    let interaction = match leader {
        None => 0.0,
        Some(l) => {
            let gap = follower.gap_to(l);
            if gap <= 0.0 {
                return ACCEL_MIN;
            }
            let dv = v - l.v;
            let s_star = p.s_min + (v * p.t_desired + v * dv / (2.0 * (p.a_factor * p.b_comf).sqrt())).max(0.0);
            (s_star / gap).powi(2)
        }
    };
    clamp_accel(p.a_factor * (free - interaction))
}

/// Constant-acceleration heuristic. Needs a leader at positive gap.
pub fn cah_accel(follower: &VehicleState, leader: &VehicleState, p: &DriverParams) -> f64 {
    let gap = follower.gap_to(leader);
    if gap <= 0.0 {
        return ACCEL_MIN;
    }
    let (v, vl) = (follower.v, leader.v);
    let a_l = leader.a_last.min(p.a_factor);
    let denom = vl * vl - 2.0 * gap * a_l;
    let a = if vl * (v - vl) <= -2.0 * gap * a_l && denom != 0.0 {
        v * v * a_l / denom
    } else {
        let closing = if v > vl { (v - vl).powi(2) } else { 0.0 };
        a_l - closing / (2.0 * gap)
    };
    clamp_accel(a)
}

/// ACC: IDM blended with the CAH by the coolness factor.
pub fn acc_accel(follower: &VehicleState, leader: Option<&VehicleState>, p: &DriverParams) -> f64 {
    let a_idm = idm_accel(follower, leader, p);
    let Some(leader) = leader else {
        return a_idm;
    };
    let a_cah = cah_accel(follower, leader, p);
    if a_idm >= a_cah {
        return a_idm;
    }
    let c = p.coolness;
    let blended = (1.0 - c) * a_idm + c * (a_cah + p.b_comf * ((a_idm - a_cah) / p.b_comf).tanh());
    clamp_accel(blended)
}

/// Ego macro actions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EgoMacro {
    LaneChange,
    Keep(f64),
    GapKeepIdm,
}

impl fmt::Display for EgoMacro {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EgoMacro::LaneChange => f.write_str("LaneChange"),
            EgoMacro::Keep(a) => write!(f, "Keep({a})"),
            EgoMacro::GapKeepIdm => f.write_str("GapKeepIDM"),
        }
    }
}

/// Hypothesis spaces used by the planners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HypothesisKind {
    #[serde(rename = "1D_Velocity")]
    Velocity1D,
    #[serde(rename = "1D_Headway")]
    Headway1D,
    #[serde(rename = "2D")]
    TwoD,
}

impl HypothesisKind {
    pub fn params(self) -> &'static [DriverParam] {
        match self {
            HypothesisKind::Velocity1D => &[DriverParam::VDesired],
            HypothesisKind::Headway1D => &[DriverParam::TDesired],
            HypothesisKind::TwoD => &[DriverParam::VDesired, DriverParam::TDesired],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HypothesisKind::Velocity1D => "1D_Velocity",
            HypothesisKind::Headway1D => "1D_Headway",
            HypothesisKind::TwoD => "2D",
        }
    }

    /// Default equal split: 16 cells per varied axis.
    pub fn default_cells(self) -> Vec<usize> {
        vec![16; self.params().len()]
    }
}

impl fmt::Display for HypothesisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Hypothesis space of `kind` together with the policy pinning every other
/// parameter to its range center.
pub fn hypothesis_space(kind: HypothesisKind, ranges: &DriverRanges) -> Result<(BehaviorSpace, AccPolicy)> {
    let space = ranges.space(kind.params())?;
    Ok((space, AccPolicy::new(kind.params().to_vec(), ranges.centers())))
}

/// Equal-partition hypotheses for `kind` with `cells` splits per axis.
pub fn partition_hypotheses(
    kind: HypothesisKind,
    ranges: &DriverRanges,
    cells: &[usize],
) -> Result<Vec<Hypothesis<AccPolicy>>> {
    let (space, policy) = hypothesis_space(kind, ranges)?;
    Ok(Partition::equal(&space, cells)?.hypotheses(Arc::new(policy)))
}

/// Per-agent true box: every varied axis gets a width drawn from
/// `[Δmin, Δmax]` of its range, placed uniformly inside the full space.
pub fn behavior_space_5d<R: Rng + ?Sized>(
    ranges: &DriverRanges,
    delta_min: f64,
    delta_max: f64,
    rng: &mut R,
) -> Result<BehaviorSpace> {
    if !(delta_min > 0.0 && delta_min <= delta_max && delta_max <= 1.0) {
        return Err(Error::invalid(format!(
            "need 0 < delta_min <= delta_max <= 1, got {delta_min}, {delta_max}"
        )));
    }
    let dims = DriverParam::ALL
        .iter()
        .map(|&p| {
            let [lo, hi] = ranges.range(p);
            let range = hi - lo;
            let width = range * (delta_min + (delta_max - delta_min) * rng.random::<f64>());
            let start = lo + (range - width) * rng.random::<f64>();
            let end = if width >= range { hi } else { (start + width).min(hi) };
            Dimension::new(p.name(), start, end, p.unit())
        })
        .collect();
    BehaviorSpace::new(dims)
}

/// ACC as a hypothetical policy: `β` supplies the parameters listed in
/// `dims` (in order), the rest come from `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct AccPolicy {
    dims: Vec<DriverParam>,
    base: DriverParams,
}

impl AccPolicy {
    pub fn new(dims: Vec<DriverParam>, base: DriverParams) -> Self {
        Self { dims, base }
    }

    pub fn dims(&self) -> &[DriverParam] {
        &self.dims
    }

    pub fn base(&self) -> &DriverParams {
        &self.base
    }

    pub fn params_for(&self, beta: &BehaviorState) -> Result<DriverParams, DomainError> {
        if beta.len() != self.dims.len() {
            return Err(DomainError::BehaviorArity {
                expected: self.dims.len(),
                got: beta.len(),
            });
        }
        let mut p = self.base;
        for (&d, &x) in self.dims.iter().zip(beta.values()) {
            p.set(d, x);
        }
        Ok(p)
    }
}

impl HypotheticalPolicy<LaneChangeWorld> for AccPolicy {
    fn act(&self, world: &LaneChangeWorld, agent: AgentId, beta: &BehaviorState) -> Result<f64, DomainError> {
        let p = self.params_for(beta)?;
        world.other_accel(agent, &p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaneChangeParams {
    pub n_others: usize,
    pub gap_range: [f64; 2],
    pub speed_range: [f64; 2],
    pub dt: f64,
    pub change_duration: f64,
    pub vehicle_length: f64,
    pub time_budget: f64,
    pub keep_accels: Vec<f64>,
    pub driver_ranges: DriverRanges,
    pub delta_min: f64,
    pub delta_max: f64,
}

impl Default for LaneChangeParams {
    fn default() -> Self {
        Self {
            n_others: 4,
            gap_range: [8.0, 20.0],
            speed_range: [10.0, 15.0],
            dt: 0.2,
            change_duration: 1.0,
            vehicle_length: 5.0,
            time_budget: 7.5,
            keep_accels: vec![-5.0, -1.0, 0.0, 1.0, 4.0],
            driver_ranges: DriverRanges::default(),
            delta_min: 0.1,
            delta_max: 0.4,
        }
    }
}

impl LaneChangeParams {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.n_others == 0 {
            v.push("n_others: must be at least 1".into());
        }
        if !(self.gap_range[0] > 0.0 && self.gap_range[0] <= self.gap_range[1]) {
            v.push("gap_range: need 0 < lower <= upper".into());
        }
        if !(self.speed_range[0] >= 0.0 && self.speed_range[0] <= self.speed_range[1]) {
            v.push("speed_range: need 0 <= lower <= upper".into());
        }
        for (name, x) in [
            ("dt", self.dt),
            ("change_duration", self.change_duration),
            ("vehicle_length", self.vehicle_length),
            ("time_budget", self.time_budget),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                v.push(format!("{name}: must be positive"));
            }
        }
        if let Some(a) = self.keep_accels.iter().find(|a| !(ACCEL_MIN..=ACCEL_MAX).contains(*a)) {
            v.push(format!("keep_accels: {a} outside [{ACCEL_MIN}, {ACCEL_MAX}]"));
        }
        if !(self.delta_min > 0.0 && self.delta_min <= self.delta_max && self.delta_max <= 1.0) {
            v.push("delta_min/delta_max: need 0 < delta_min <= delta_max <= 1".into());
        }
        v.extend(self.driver_ranges.violations().into_iter().map(|m| format!("driver_ranges.{m}")));
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(v.join("; ")))
        }
    }

    /// Steps until timeout, `ceil(budget / dt)`.
    pub fn max_steps(&self) -> u32 {
        ((self.time_budget / self.dt) - 1e-9).ceil() as u32
    }

    /// Ego macro table: LaneChange, the Keep accelerations, GapKeepIDM.
    pub fn macros(&self) -> Vec<EgoMacro> {
        std::iter::once(EgoMacro::LaneChange)
            .chain(self.keep_accels.iter().map(|&a| EgoMacro::Keep(a)))
            .chain(std::iter::once(EgoMacro::GapKeepIdm))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaneChangeWorld {
    params: Arc<LaneChangeParams>,
    macros: Arc<[EgoMacro]>,
    ego_params: DriverParams,
    ego: VehicleState,
    /// Left-lane platoon, rear vehicle first.
    others: Vec<VehicleState>,
    step: u32,
    outcome: Outcome,
}

impl LaneChangeWorld {
    pub fn new(params: LaneChangeParams, ego: VehicleState, others: Vec<VehicleState>) -> Result<Self> {
        params.validate()?;
        if others.len() != params.n_others {
            return Err(Error::invalid(format!(
                "expected {} other vehicles, got {}",
                params.n_others,
                others.len()
            )));
        }
        let macros: Arc<[EgoMacro]> = params.macros().into();
        let ego_params = params.driver_ranges.centers();
        let mut w = Self {
            params: Arc::new(params),
            macros,
            ego_params,
            ego,
            others,
            step: 0,
            outcome: Outcome::Running,
        };
        if w.ego_overlaps() {
            w.outcome = Outcome::Collision;
        }
        Ok(w)
    }

    /// Draws the platoon and the ego start. The platoon's rear vehicle
    /// sits at `s = vehicle_length`; the ego starts anywhere between the
    /// rear and front vehicle on the right lane.
    pub fn sample<R: Rng + ?Sized>(params: LaneChangeParams, rng: &mut R) -> Result<Self> {
        params.validate()?;
        let len = params.vehicle_length;
        let uniform = |r: [f64; 2], rng: &mut R| r[0] + (r[1] - r[0]) * rng.random::<f64>();
        let mut others = Vec::with_capacity(params.n_others);
        let mut s = len;
        for i in 0..params.n_others {
            if i > 0 {
                s += uniform(params.gap_range, rng) + len;
            }
            let v = uniform(params.speed_range, rng);
            others.push(VehicleState::new(Lane::Left, s, v, len));
        }
        let rear = others[0].s;
        let front = others[params.n_others - 1].s;
        let ego_s = rear + (front - rear) * rng.random::<f64>();
        let ego_v = uniform(params.speed_range, rng);
        let ego = VehicleState::new(Lane::Right, ego_s, ego_v, len);
        Self::new(params, ego, others)
    }

    pub fn params(&self) -> &LaneChangeParams {
        &self.params
    }

    pub fn macros(&self) -> &[EgoMacro] {
        &self.macros
    }

    pub fn ego(&self) -> &VehicleState {
        &self.ego
    }

    pub fn others(&self) -> &[VehicleState] {
        &self.others
    }

    pub fn step_count(&self) -> u32 {
        self.step
    }

    pub fn ego_params(&self) -> &DriverParams {
        &self.ego_params
    }

    /// Nearest left-lane occupant strictly ahead of position `s`, excluding
    /// other vehicle `skip`.
    fn left_leader(&self, s: f64, skip: Option<usize>, include_ego: bool) -> Option<&VehicleState> {
        let ego = (include_ego && self.ego.lane.occupies_left()).then_some(&self.ego);
        self.others
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, v)| v)
            .chain(ego)
            .filter(|v| v.s > s)
            .min_by(|a, b| a.s.total_cmp(&b.s))
    }

    /// Leader of other vehicle `j`; the ego counts once it occupies the left lane.
    pub fn leader_of(&self, j: AgentId) -> Option<&VehicleState> {
        self.left_leader(self.others[j.0].s, Some(j.0), true)
    }

    /// ACC acceleration of other vehicle `j` under driver parameters `p`.
    pub fn other_accel(&self, j: AgentId, p: &DriverParams) -> Result<f64, DomainError> {
        let me = self.others.get(j.0).ok_or(DomainError::UnknownAgent(j.0))?;
        Ok(acc_accel(me, self.leader_of(j), p))
    }

    /// Left-lane vehicle the ego would follow after merging: the nearest one
    /// whose rear is ahead of the ego front.
    pub fn projected_leader(&self) -> Option<&VehicleState> {
        self.others
            .iter()
            .filter(|v| self.ego.gap_to(v) > 0.0)
            .min_by(|a, b| a.s.total_cmp(&b.s))
    }

    /// Ego longitudinal acceleration under `m`.
    pub fn ego_accel(&self, m: EgoMacro) -> f64 {
        match m {
            EgoMacro::Keep(a) => clamp_accel(a),
            EgoMacro::LaneChange | EgoMacro::GapKeepIdm => {
                idm_accel(&self.ego, self.projected_leader(), &self.ego_params)
            }
        }
    }

    /// Samples every other vehicle's acceleration with a fresh `β` from its
    /// true box. Consumes `dims` uniforms per vehicle.
    pub fn simulate_others<R: Rng + ?Sized>(&self, boxes: &[BehaviorSpace], rng: &mut R) -> Result<Vec<f64>> {
        if boxes.len() != self.others.len() {
            return Err(Error::invalid(format!(
                "{} behavior boxes for {} vehicles",
                boxes.len(),
                self.others.len()
            )));
        }
        let policy = AccPolicy::new(DriverParam::ALL.to_vec(), self.params.driver_ranges.centers());
        boxes
            .iter()
            .enumerate()
            .map(|(j, b)| {
                let beta = b.sample(rng);
                Ok(policy.act(self, AgentId(j), &beta)?)
            })
            .collect()
    }

    fn ego_overlaps(&self) -> bool {
        if !self.ego.lane.occupies_left() {
            return false;
        }
        self.others.iter().any(|o| {
            if o.s >= self.ego.s {
                self.ego.gap_to(o) <= 0.0
            } else {
                o.gap_to(&self.ego) <= 0.0
            }
        })
    }

    pub fn step_macro(&mut self, m: EgoMacro, others: &[f64]) -> Result<f64, DomainError> {
        if self.outcome.is_terminal() {
            return Err(DomainError::Other("episode already finished".into()));
        }
        if others.len() != self.others.len() {
            return Err(DomainError::JointActionArity {
                expected: self.others.len(),
                got: others.len(),
            });
        }
        if let Some(&a) = others.iter().find(|a| !(ACCEL_MIN..=ACCEL_MAX).contains(*a)) {
            return Err(DomainError::ActionOutOfRange {
                value: a,
                lower: ACCEL_MIN,
                upper: ACCEL_MAX,
            });
        }
        if m == EgoMacro::LaneChange && self.ego.lane == Lane::Left {
            return Err(DomainError::IllegalMacro("already on the left lane".into()));
        }
        let dt = self.params.dt;
        let a_ego = self.ego_accel(m);
        // Once started, the lane change runs to completion.
        let lateral = match (self.ego.lane, m) {
            (Lane::Right, EgoMacro::LaneChange) | (Lane::Changing(_), _) => {
                let p = self.ego.lane.progress() + dt / self.params.change_duration;
                if p >= 1.0 - 1e-9 {
                    Lane::Left
                } else {
                    Lane::Changing(p)
                }
            }
            (lane, _) => lane,
        };
        self.ego.integrate(a_ego, dt);
        self.ego.lane = lateral;
        for (v, &a) in self.others.iter_mut().zip(others) {
            v.integrate(a, dt);
        }
        self.step += 1;
        self.outcome = if self.ego_overlaps() {
            Outcome::Collision
        } else if self.ego.lane == Lane::Left {
            Outcome::Success
        } else if self.step >= self.params.max_steps() {
            Outcome::Timeout
        } else {
            Outcome::Running
        };
        Ok(outcome_reward(self.outcome))
    }
}

impl Environment for LaneChangeWorld {
    fn num_ego_actions(&self) -> usize {
        self.macros.len()
    }

    fn num_other_agents(&self) -> usize {
        self.others.len()
    }

    fn outcome(&self) -> Outcome {
        self.outcome
    }

    fn step(&mut self, ego_action: usize, others: &[f64]) -> Result<f64, DomainError> {
        let m = *self
            .macros
            .get(ego_action)
            .ok_or(DomainError::UnknownEgoAction(ego_action))?;
        self.step_macro(m, others)
    }
}
