//! Decision rules for the three agent roles.
//!
//! Students gate hide/run on Heaviside products of Manhattan distances,
//! the shooter attempts the nearest visible target with a kill probability
//! that falls off linearly with range, and the officer suppresses the shooter
//! or evacuates nearby students before falling back to movement. All
//! functions here are pure: state in, action out, with any randomness drawn
//! from the generator passed in.

use rand::Rng;
use thiserror::Error;

use crate::layout::{manhattan, Cell, ExitId, FloorLayout};
use crate::pathfind::{nearest_exit_id, DistanceField};

pub type AgentId = usize;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BehaviorParams {
    /// Hiding range α.
    pub alpha: f64,
    /// Hearing range β.
    pub beta: f64,
    /// Shooter visible range γ.
    pub gamma: f64,
    /// Officer visible range Γ.
    pub gamma_officer: f64,
    /// Officer hearing (evacuation) range σ.
    pub sigma: f64,
    /// Guards the officer risk ratio against a zero distance.
    pub epsilon: f64,
}

impl Default for BehaviorParams {
    fn default() -> Self {
        BehaviorParams {
            alpha: 5.0,
            beta: 20.0,
            gamma: 10.0,
            gamma_officer: 12.0,
            sigma: 8.0,
            epsilon: 1e-6,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("{name} must be finite and positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("hiding range ({alpha}) must be below hearing range ({beta})")]
    HideNotBelowHearing { alpha: f64, beta: f64 },
}

impl BehaviorParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, value) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("gamma_officer", self.gamma_officer),
            ("sigma", self.sigma),
            ("epsilon", self.epsilon),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ParamError::NotPositive { name, value });
            }
        }
        if self.alpha >= self.beta {
            return Err(ParamError::HideNotBelowHearing {
                alpha: self.alpha,
                beta: self.beta,
            });
        }
        Ok(())
    }
}

/// θ(x): 1 for x ≥ 0, else 0.
pub fn heaviside(x: f64) -> u8 {
    u8::from(x >= 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StudentMode {
    Unaware,
    Running,
    Hiding,
    Evacuated,
    Casualty,
}

impl StudentMode {
    pub fn is_terminal(self) -> bool {
        matches!(self, StudentMode::Evacuated | StudentMode::Casualty)
    }

    /// Hidden, evacuated and dead students cannot be shot.
    pub fn is_targetable(self) -> bool {
        matches!(self, StudentMode::Unaware | StudentMode::Running)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ShooterMode {
    Active,
    Suppressed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OfficerMode {
    Outside,
    Patrolling,
}

/// Outcome of a distance gate before an exit is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    Hide,
    Run,
    NoEffect,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StudentAction {
    Hide,
    Run(ExitId),
    NoEffect,
}

/// What a student can know about the shooting at decision time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShotContext {
    /// Where the first casualty fell. Unset until a shot connects.
    pub cfk: Option<Cell>,
    /// Shooter position.
    pub cs: Cell,
    pub first_shot_fired: bool,
    pub detector_enabled: bool,
}

impl ShotContext {
    /// Hiding is measured from the first kill; after a missed opening shot
    /// the shooter position stands in until someone is hit.
    pub fn hide_reference(&self) -> Cell {
        self.cfk.unwrap_or(self.cs)
    }
}

/// Without detection: `H·θ(α − dist_fk) + R·θ(dist_sh − α)·θ(β − dist_sh)`.
/// Hide wins when both products fire.
pub fn no_detector_gate(dist_fk: f64, dist_sh: f64, p: &BehaviorParams) -> Gate {
    let hide = heaviside(p.alpha - dist_fk);
    let run = heaviside(dist_sh - p.alpha) * heaviside(p.beta - dist_sh);
    if hide == 1 {
        Gate::Hide
    } else if run == 1 {
        Gate::Run
    } else {
        Gate::NoEffect
    }
}

/// With detection: `H·θ(α − dist) + R·θ(dist − α)`. At `dist = α` both fire
/// and Hide wins.
pub fn detector_gate(dist: f64, p: &BehaviorParams) -> Gate {
    if heaviside(p.alpha - dist) == 1 {
        Gate::Hide
    } else if heaviside(dist - p.alpha) == 1 {
        Gate::Run
    } else {
        Gate::NoEffect
    }
}

pub fn student_decide_no_detector(
    layout: &FloorLayout,
    student: Cell,
    ctx: &ShotContext,
    p: &BehaviorParams,
) -> StudentAction {
    if !ctx.first_shot_fired {
        return StudentAction::NoEffect;
    }
    let dist_fk = f64::from(manhattan(student, ctx.hide_reference()));
    let dist_sh = f64::from(manhattan(student, ctx.cs));
    match no_detector_gate(dist_fk, dist_sh, p) {
        Gate::Hide => StudentAction::Hide,
        Gate::Run => {
            nearest_exit_id(layout, student).map_or(StudentAction::NoEffect, StudentAction::Run)
        }
        Gate::NoEffect => StudentAction::NoEffect,
    }
}

pub fn student_decide_detector(
    layout: &FloorLayout,
    student: Cell,
    ctx: &ShotContext,
    p: &BehaviorParams,
) -> StudentAction {
    if !ctx.first_shot_fired {
        return StudentAction::NoEffect;
    }
    let dist = f64::from(manhattan(student, ctx.hide_reference()));
    match detector_gate(dist, p) {
        Gate::Hide => StudentAction::Hide,
        Gate::Run => safe_exit(layout, student, ctx.cs, p.gamma)
            .map_or(StudentAction::NoEffect, StudentAction::Run),
        Gate::NoEffect => StudentAction::NoEffect,
    }
}

/// Nearest exit whose route (after the first cell) never comes within
/// `gamma` of the shooter; the plain nearest exit when every route does.
pub fn safe_exit(layout: &FloorLayout, from: Cell, shooter: Cell, gamma: f64) -> Option<ExitId> {
    let mut ranked: Vec<(u32, ExitId)> = (0..layout.exits().len())
        .filter_map(|e| layout.exit_field(e).get(from).map(|d| (d, e)))
        .collect();
    ranked.sort_unstable();
    let exposed = |c: Cell| heaviside(gamma - f64::from(manhattan(c, shooter))) == 1;
    ranked
        .iter()
        .find(|&&(_, e)| {
            let field = layout.exit_field(e);
            let mut cur = from;
            while let Some(next) = field.next_step(cur) {
                if exposed(next) {
                    return false;
                }
                cur = next;
            }
            true
        })
        .or(ranked.first())
        .map(|&(_, e)| e)
}

/// `max(0, 1 − d/γ)`.
pub fn kill_probability(d: f64, gamma: f64) -> f64 {
    (1.0 - d / gamma).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StudentView {
    pub id: AgentId,
    pub cell: Cell,
    pub mode: StudentMode,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShooterAction {
    /// One shot at `victim`; `hit` is the outcome of the draw against `probability`.
    Kill {
        victim: AgentId,
        probability: f64,
        hit: bool,
    },
    Move(Cell),
}

/// Visit stamps for a sweeping patrol. Stamp 0 means never visited.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatrolMemory {
    width: usize,
    stamps: Vec<u64>,
    clock: u64,
}

impl PatrolMemory {
    pub fn new(layout: &FloorLayout) -> Self {
        PatrolMemory {
            width: layout.width(),
            stamps: vec![0; layout.width() * layout.height()],
            clock: 0,
        }
    }

    fn slot(&self, c: Cell) -> usize {
        c.y as usize * self.width + c.x as usize
    }

    pub fn visit(&mut self, c: Cell) {
        self.clock += 1;
        let i = self.slot(c);
        self.stamps[i] = self.clock;
    }

    pub fn stamp(&self, c: Cell) -> u64 {
        self.stamps[self.slot(c)]
    }

    pub fn visited(&self, c: Cell) -> bool {
        self.stamp(c) != 0
    }

    /// Plans `steps` moves: unvisited hallway neighbours first, otherwise the
    /// least recently visited one; ties follow up, right, down, left. Rooms
    /// are only used when no hallway neighbour exists.
    pub fn route(&self, layout: &FloorLayout, from: Cell, steps: u32) -> Vec<Cell> {
        let mut planned: Vec<(Cell, u64)> = Vec::with_capacity(steps as usize);
        let mut clock = self.clock;
        let mut cur = from;
        for _ in 0..steps {
            let stamp_of = |c: Cell| {
                planned
                    .iter()
                    .rev()
                    .find(|(pc, _)| *pc == c)
                    .map_or_else(|| self.stamp(c), |&(_, s)| s)
            };
            let hall: Vec<Cell> = layout
                .open_neighbors(cur)
                .filter(|n| layout.is_circulation(*n))
                .collect();
            let options = if hall.is_empty() {
                layout.open_neighbors(cur).collect()
            } else {
                hall
            };
            let Some(next) = options.into_iter().min_by_key(|c| stamp_of(*c)) else {
                break;
            };
            clock += 1;
            planned.push((next, clock));
            cur = next;
        }
        planned.into_iter().map(|(c, _)| c).collect()
    }
}

/// Shoots at the nearest visible student within γ (by walking cost, ties to
/// the lowest id), otherwise steps toward the nearest targetable student,
/// otherwise patrols the hallways.
pub fn shooter_decide<R: Rng + ?Sized>(
    layout: &FloorLayout,
    shooter: Cell,
    students: &[StudentView],
    p: &BehaviorParams,
    patrol: &PatrolMemory,
    rng: &mut R,
) -> ShooterAction {
    let from_shooter = DistanceField::from_source(layout, shooter);
    let reachable = || {
        students
            .iter()
            .filter(|s| s.mode.is_targetable())
            .filter_map(|s| from_shooter.get(s.cell).map(|cost| (cost, s)))
    };

    let in_sight = reachable()
        .filter(|(_, s)| {
            heaviside(p.gamma - f64::from(manhattan(shooter, s.cell))) == 1
                && layout.line_of_sight(shooter, s.cell)
        })
        .min_by_key(|(cost, s)| (*cost, s.id));
    if let Some((_, target)) = in_sight {
        let probability = kill_probability(f64::from(manhattan(shooter, target.cell)), p.gamma);
        let draw: f64 = rng.random();
        return ShooterAction::Kill {
            victim: target.id,
            probability,
            hit: draw < probability,
        };
    }

    if let Some((_, target)) = reachable().min_by_key(|(cost, s)| (*cost, s.id)) {
        let toward = DistanceField::from_source(layout, target.cell);
        if let Some(next) = toward.next_step(shooter) {
            return ShooterAction::Move(next);
        }
    }
    ShooterAction::Move(
        patrol
            .route(layout, shooter, 1)
            .first()
            .copied()
            .unwrap_or(shooter),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShooterView {
    pub id: AgentId,
    pub cell: Cell,
    pub mode: ShooterMode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OfficerAction {
    Wait,
    /// Spawns at the given exit cell.
    Enter(Cell),
    /// Cells stepped through this tick, in order.
    Patrol(Vec<Cell>),
    Suppress {
        shooter: AgentId,
        evacuate: Vec<AgentId>,
    },
    Evacuate(Vec<AgentId>),
}

/// Everything the officer rule reads.
#[derive(Clone, Copy, Debug)]
pub struct OfficerInputs<'a> {
    pub mode: OfficerMode,
    pub cell: Option<Cell>,
    pub patrol: &'a PatrolMemory,
    pub shooter: Option<ShooterView>,
    pub students: &'a [StudentView],
    pub elapsed: u32,
    pub entry_time: u32,
    pub speed: u32,
    pub detector_enabled: bool,
    /// Position of the most recent gunshot, as reported by the detector.
    pub last_known_shooter: Option<Cell>,
}

pub fn officer_decide(
    layout: &FloorLayout,
    input: &OfficerInputs<'_>,
    p: &BehaviorParams,
) -> OfficerAction {
    let cell = match (input.mode, input.cell) {
        (OfficerMode::Outside, _) | (_, None) => {
            return if input.elapsed < input.entry_time {
                OfficerAction::Wait
            } else {
                OfficerAction::Enter(layout.exits()[0])
            };
        }
        (OfficerMode::Patrolling, Some(cell)) => cell,
    };

    let evacuate: Vec<AgentId> = input
        .students
        .iter()
        .filter(|s| !s.mode.is_terminal())
        .filter(|s| heaviside(p.sigma - f64::from(manhattan(cell, s.cell))) == 1)
        .map(|s| s.id)
        .collect();

    if let Some(shooter) = input.shooter.filter(|s| s.mode == ShooterMode::Active) {
        let in_range = heaviside(p.gamma_officer - f64::from(manhattan(cell, shooter.cell))) == 1;
        if in_range && layout.line_of_sight(cell, shooter.cell) {
            return OfficerAction::Suppress {
                shooter: shooter.id,
                evacuate,
            };
        }
    }
    if !evacuate.is_empty() {
        return OfficerAction::Evacuate(evacuate);
    }

    let shooter_active = input.shooter.is_some_and(|s| s.mode == ShooterMode::Active);
    if input.detector_enabled && shooter_active {
        if let Some(target) = input.last_known_shooter.filter(|t| *t != cell) {
            let field = DistanceField::from_source(layout, target);
            let mut route = Vec::new();
            let mut cur = cell;
            for _ in 0..input.speed {
                match field.next_step(cur) {
                    Some(next) => {
                        route.push(next);
                        cur = next;
                    }
                    None => break,
                }
            }
            if !route.is_empty() {
                return OfficerAction::Patrol(route);
            }
        }
    }
    OfficerAction::Patrol(input.patrol.route(layout, cell, input.speed))
}

/// `Σ k_i·max(0, 1 − d_i/γ)` less the travel penalty `(t + d)/(1 + t + d)`.
/// Used for auditing policies; the live shooter is the greedy rule above.
pub fn shooter_objective(kills: &[(f64, f64)], t: f64, d: f64, gamma: f64) -> f64 {
    let reward: f64 = kills
        .iter()
        .map(|&(k, dist)| k * kill_probability(dist, gamma))
        .sum();
    reward - (t + d) / (1.0 + t + d)
}

/// `[suppressed] + evacuated − t_exposure / (d + ε)`.
pub fn officer_objective(
    suppressed: bool,
    evacuated_count: usize,
    t_exposure: f64,
    d_officer_shooter: f64,
    p: &BehaviorParams,
) -> f64 {
    f64::from(u8::from(suppressed)) + evacuated_count as f64
        - t_exposure / (d_officer_shooter + p.epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn open_room() -> FloorLayout {
        FloorLayout::parse(
            "12x5\n\
             ############\n\
             Eaaaaaaaaaa#\n\
             #aaaaaaaaaa#\n\
             #aaaaaaaaaa#\n\
             ############\n",
        )
        .unwrap()
    }

    fn ctx(cfk: Option<Cell>, cs: Cell) -> ShotContext {
        ShotContext {
            cfk,
            cs,
            first_shot_fired: true,
            detector_enabled: false,
        }
    }

    #[test]
    fn heaviside_values() {
        assert_eq!(heaviside(0.0), 1);
        assert_eq!(heaviside(-3.2), 0);
        assert_eq!(heaviside(7.0), 1);
        assert_eq!(heaviside(-0.0), 1);
    }

    #[test]
    fn params_validation() {
        assert!(BehaviorParams::default().validate().is_ok());
        let p = BehaviorParams {
            alpha: 20.0,
            ..Default::default()
        };
        assert!(matches!(
            p.validate(),
            Err(ParamError::HideNotBelowHearing { .. })
        ));
        let p = BehaviorParams {
            epsilon: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            p.validate(),
            Err(ParamError::NotPositive {
                name: "epsilon",
                ..
            })
        ));
    }

    #[test]
    fn gates_at_the_edges() {
        let p = BehaviorParams::default();
        assert_eq!(no_detector_gate(0.0, 0.0, &p), Gate::Hide);
        assert_eq!(
            no_detector_gate(p.alpha + 1.0, p.beta + 1.0, &p),
            Gate::NoEffect
        );
        assert_eq!(no_detector_gate(p.alpha + 1.0, p.beta, &p), Gate::Run);
        assert_eq!(detector_gate(p.alpha, &p), Gate::Hide);
        assert_eq!(detector_gate(p.alpha + 1.0, &p), Gate::Run);
    }

    #[test]
    fn students_before_first_shot_do_nothing() {
        let l = open_room();
        let mut c = ctx(None, Cell::new(5, 2));
        c.first_shot_fired = false;
        let p = BehaviorParams::default();
        assert_eq!(
            student_decide_no_detector(&l, Cell::new(5, 2), &c, &p),
            StudentAction::NoEffect
        );
        assert_eq!(
            student_decide_detector(&l, Cell::new(5, 2), &c, &p),
            StudentAction::NoEffect
        );
    }

    #[test]
    fn student_decisions_use_first_kill_for_hiding() {
        let l = open_room();
        let p = BehaviorParams::default();
        // shooter far right, first kill far left: a student next to the kill hides
        let c = ctx(Some(Cell::new(1, 1)), Cell::new(10, 3));
        assert_eq!(
            student_decide_no_detector(&l, Cell::new(2, 1), &c, &p),
            StudentAction::Hide
        );
        // 6 from the kill, 5 from the shooter: runs
        assert_eq!(
            student_decide_no_detector(&l, Cell::new(7, 1), &c, &p),
            StudentAction::Run(0)
        );
        // too close to the shooter to be in the running band, too far from the kill to hide
        assert_eq!(
            student_decide_no_detector(&l, Cell::new(9, 3), &c, &p),
            StudentAction::NoEffect
        );
        // missed opening shot: the shooter position stands in for hiding
        let c = ctx(None, Cell::new(10, 3));
        assert_eq!(
            student_decide_no_detector(&l, Cell::new(7, 1), &c, &p),
            StudentAction::Hide
        );
    }

    #[test]
    fn kill_probability_values() {
        assert_eq!(kill_probability(0.0, 10.0), 1.0);
        assert_eq!(kill_probability(10.0, 10.0), 0.0);
        assert_eq!(kill_probability(5.0, 10.0), 0.5);
        assert_eq!(kill_probability(25.0, 10.0), 0.0);
    }

    #[test]
    fn shooter_point_blank_always_hits() {
        let l = open_room();
        let p = BehaviorParams::default();
        let patrol = PatrolMemory::new(&l);
        let s = [StudentView {
            id: 0,
            cell: Cell::new(4, 2),
            mode: StudentMode::Unaware,
        }];
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(
                shooter_decide(&l, Cell::new(4, 2), &s, &p, &patrol, &mut rng),
                ShooterAction::Kill {
                    victim: 0,
                    probability: 1.0,
                    hit: true
                }
            );
        }
    }

    #[test]
    fn shooter_targets_lowest_cost_and_skips_hidden() {
        let l = open_room();
        let p = BehaviorParams::default();
        let patrol = PatrolMemory::new(&l);
        let shooter = Cell::new(5, 2);
        let mk = |id, x, y, mode| StudentView {
            id,
            cell: Cell::new(x, y),
            mode,
        };
        let students = [
            mk(0, 9, 2, StudentMode::Running), // cost 4
            mk(1, 1, 3, StudentMode::Unaware), // cost 5
            mk(2, 5, 1, StudentMode::Hiding),  // cost 1 but hidden
            mk(3, 7, 2, StudentMode::Unaware), // cost 2
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        match shooter_decide(&l, shooter, &students, &p, &patrol, &mut rng) {
            ShooterAction::Kill {
                victim,
                probability,
                ..
            } => {
                assert_eq!(victim, 3);
                assert_eq!(probability, 0.8);
            }
            other => panic!("expected a shot, got {other:?}"),
        }
    }

    #[test]
    fn shooter_moves_or_patrols_without_targets() {
        let l = open_room();
        let p = BehaviorParams {
            gamma: 2.0,
            ..Default::default()
        };
        let patrol = PatrolMemory::new(&l);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let far = [StudentView {
            id: 0,
            cell: Cell::new(10, 2),
            mode: StudentMode::Unaware,
        }];
        assert_eq!(
            shooter_decide(&l, Cell::new(2, 2), &far, &p, &patrol, &mut rng),
            ShooterAction::Move(Cell::new(3, 2))
        );
        assert!(matches!(
            shooter_decide(&l, Cell::new(2, 2), &[], &p, &patrol, &mut rng),
            ShooterAction::Move(_)
        ));
    }

    #[test]
    fn patrol_prefers_unvisited_then_least_recent() {
        let l = FloorLayout::parse("7x3\n#######\nE.....a\n#######\n").unwrap();
        let mut m = PatrolMemory::new(&l);
        m.visit(Cell::new(2, 1));
        m.visit(Cell::new(3, 1));
        // from (3,1): left neighbour visited, right not
        assert_eq!(m.route(&l, Cell::new(3, 1), 1), vec![Cell::new(4, 1)]);
        m.visit(Cell::new(4, 1));
        // both visited: (2,1) is older than (4,1)
        assert_eq!(m.route(&l, Cell::new(3, 1), 1), vec![Cell::new(2, 1)]);
        // dead end: the second planned step has to come back
        assert_eq!(
            m.route(&l, Cell::new(4, 1), 2),
            vec![Cell::new(5, 1), Cell::new(4, 1)]
        );
    }

    fn officer_inputs<'a>(
        patrol: &'a PatrolMemory,
        students: &'a [StudentView],
        cell: Cell,
        shooter: Cell,
    ) -> OfficerInputs<'a> {
        OfficerInputs {
            mode: OfficerMode::Patrolling,
            cell: Some(cell),
            patrol,
            shooter: Some(ShooterView {
                id: 99,
                cell: shooter,
                mode: ShooterMode::Active,
            }),
            students,
            elapsed: 400,
            entry_time: 300,
            speed: 2,
            detector_enabled: false,
            last_known_shooter: None,
        }
    }

    #[test]
    fn officer_waits_enters_and_suppresses() {
        let l = FloorLayout::parse(&format!(
            "20x3\n{}\nE{}#\n{}\n",
            "#".repeat(20),
            "a".repeat(18),
            "#".repeat(20)
        ))
        .unwrap();
        let p = BehaviorParams::default();
        let patrol = PatrolMemory::new(&l);
        let mut input = officer_inputs(&patrol, &[], Cell::new(1, 1), Cell::new(12, 1));
        input.mode = OfficerMode::Outside;
        input.cell = None;
        input.elapsed = 0;
        assert_eq!(officer_decide(&l, &input, &p), OfficerAction::Wait);
        input.elapsed = 299;
        assert_eq!(officer_decide(&l, &input, &p), OfficerAction::Wait);
        input.elapsed = 300;
        assert_eq!(
            officer_decide(&l, &input, &p),
            OfficerAction::Enter(Cell::new(0, 1))
        );

        // Γ − 1 = 11 cells away, clear sight
        let input = officer_inputs(&patrol, &[], Cell::new(1, 1), Cell::new(12, 1));
        assert_eq!(
            officer_decide(&l, &input, &p),
            OfficerAction::Suppress {
                shooter: 99,
                evacuate: vec![]
            }
        );
        // Γ + 1 away: patrols instead
        let input = officer_inputs(&patrol, &[], Cell::new(1, 1), Cell::new(14, 1));
        assert!(matches!(
            officer_decide(&l, &input, &p),
            OfficerAction::Patrol(_)
        ));
    }

    #[test]
    fn officer_evacuates_within_hearing_range() {
        let l = FloorLayout::parse(&format!(
            "30x3\n{}\nE{}#\n{}\n",
            "#".repeat(30),
            "a".repeat(28),
            "#".repeat(30)
        ))
        .unwrap();
        let p = BehaviorParams::default();
        let patrol = PatrolMemory::new(&l);
        let mk = |id, x, mode| StudentView {
            id,
            cell: Cell::new(x, 1),
            mode,
        };
        let students = [
            mk(0, 3, StudentMode::Hiding),
            mk(1, 9, StudentMode::Unaware),
            mk(2, 11, StudentMode::Running),
            mk(3, 4, StudentMode::Casualty),
        ];
        let input = officer_inputs(&patrol, &students, Cell::new(2, 1), Cell::new(28, 1));
        assert_eq!(
            officer_decide(&l, &input, &p),
            OfficerAction::Evacuate(vec![0, 1])
        );
    }

    #[test]
    fn officer_heads_for_reported_shot_with_detector() {
        let l = FloorLayout::parse(&format!(
            "30x3\n{}\nE{}#\n{}\n",
            "#".repeat(30),
            "a".repeat(28),
            "#".repeat(30)
        ))
        .unwrap();
        let p = BehaviorParams::default();
        let patrol = PatrolMemory::new(&l);
        let mut input = officer_inputs(&patrol, &[], Cell::new(1, 1), Cell::new(28, 1));
        input.detector_enabled = true;
        input.last_known_shooter = Some(Cell::new(20, 1));
        assert_eq!(
            officer_decide(&l, &input, &p),
            OfficerAction::Patrol(vec![Cell::new(2, 1), Cell::new(3, 1)])
        );
    }

    #[test]
    fn objectives() {
        assert_eq!(shooter_objective(&[], 0.0, 0.0, 10.0), 0.0);
        assert_eq!(shooter_objective(&[(1.0, 0.0)], 0.0, 0.0, 10.0), 1.0);
        let penalty = 9.0 / 10.0;
        assert_eq!(shooter_objective(&[], 4.0, 5.0, 10.0), -penalty);
        let p = BehaviorParams::default();
        assert_eq!(officer_objective(false, 0, 0.0, 0.0, &p), 0.0);
        let v = officer_objective(true, 3, 2.0, 0.0, &p);
        assert!(v.is_finite());
        assert_eq!(v, 4.0 - 2.0 / 1e-6);
    }

    #[test]
    fn safe_exit_avoids_the_shooter() {
        let l = FloorLayout::parse("9x3\n#########\nEaaaaaaaE\n#########\n").unwrap();
        // student at x=3 is nearer exit 0 (x=0), shooter sits at x=1
        assert_eq!(
            safe_exit(&l, Cell::new(3, 1), Cell::new(1, 1), 1.0),
            Some(1)
        );
        // every route is exposed: fall back to the nearest
        assert_eq!(
            safe_exit(&l, Cell::new(3, 1), Cell::new(4, 1), 10.0),
            Some(0)
        );
    }
}
