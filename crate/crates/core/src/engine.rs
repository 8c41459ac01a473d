//! The tick loop.
//!
//! Each tick runs three phases in a fixed order: the shooter acts, then the
//! students, then the officer. Every random draw comes from one seeded
//! ChaCha stream owned by the world state, so `(config, seed, placement_seed)`
//! fully determines the event log.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::behavior::{
    officer_decide, shooter_decide, student_decide_detector, student_decide_no_detector, AgentId,
    BehaviorParams, OfficerAction, OfficerInputs, OfficerMode, ParamError, PatrolMemory,
    ShooterAction, ShooterMode, ShooterView, ShotContext, StudentAction, StudentMode, StudentView,
};
use crate::layout::{Cell, ExitId, FloorLayout};
use crate::pathfind::nearest_exit_id;

/// Movement speeds in cells per tick.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Speeds {
    pub student: u32,
    pub shooter: u32,
    pub officer: u32,
}

impl Default for Speeds {
    fn default() -> Self {
        Speeds {
            student: 1,
            shooter: 1,
            officer: 2,
        }
    }
}

/// Seconds before the officer enters the building.
pub const DEFAULT_OFFICER_ENTRY: u32 = 300;

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub layout: Arc<FloorLayout>,
    pub student_count: usize,
    /// Seconds simulated.
    pub runtime: u32,
    /// Seconds per tick.
    pub tick: u32,
    pub detector_enabled: bool,
    /// Seconds after the start at which the officer enters. Values at or
    /// beyond `runtime` mean the officer never arrives.
    pub officer_entry: u32,
    pub speeds: Speeds,
    pub params: BehaviorParams,
    /// Seeds the behaviour stream (kill draws).
    pub seed: u64,
    /// Seeds initial placement; equal placement seeds give equal starts.
    pub placement_seed: u64,
}

impl SimConfig {
    pub fn new(layout: Arc<FloorLayout>, student_count: usize) -> Self {
        SimConfig {
            layout,
            student_count,
            runtime: 360,
            tick: 1,
            detector_enabled: false,
            officer_entry: DEFAULT_OFFICER_ENTRY,
            speeds: Speeds::default(),
            params: BehaviorParams::default(),
            seed: 0,
            placement_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.student_count == 0 {
            return Err(EngineError::InvalidConfig(
                "student_count must be positive".into(),
            ));
        }
        if self.tick == 0 {
            return Err(EngineError::InvalidConfig("tick must be positive".into()));
        }
        self.params.validate()?;
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid behaviour parameters: {0}")]
    Params(#[from] ParamError),
    #[error("layout has no room floor to place students on")]
    LayoutTooSmall,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Student {
    pub id: AgentId,
    pub cell: Cell,
    pub mode: StudentMode,
    pub exit: Option<ExitId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shooter {
    pub id: AgentId,
    pub cell: Cell,
    pub mode: ShooterMode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Officer {
    pub id: AgentId,
    pub cell: Option<Cell>,
    pub mode: OfficerMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    ShotFired,
    FirstKill,
    Kill,
    HideStart,
    RunStart,
    Evacuated,
    OfficerEntered,
    Suppressed,
}

impl EventKind {
    pub const ALL: [EventKind; 8] = [
        EventKind::ShotFired,
        EventKind::FirstKill,
        EventKind::Kill,
        EventKind::HideStart,
        EventKind::RunStart,
        EventKind::Evacuated,
        EventKind::OfficerEntered,
        EventKind::Suppressed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::ShotFired => "ShotFired",
            EventKind::FirstKill => "FirstKill",
            EventKind::Kill => "Kill",
            EventKind::HideStart => "HideStart",
            EventKind::RunStart => "RunStart",
            EventKind::Evacuated => "Evacuated",
            EventKind::OfficerEntered => "OfficerEntered",
            EventKind::Suppressed => "Suppressed",
        }
    }
}

/// One state change. Serialises as `time_s,kind,subject_id,x,y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TickEvent {
    pub time: u32,
    pub kind: EventKind,
    pub subject: AgentId,
    pub location: Cell,
}

impl fmt::Display for TickEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{}",
            self.time,
            self.kind.as_str(),
            self.subject,
            self.location.x,
            self.location.y
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("malformed event line {0:?}")]
pub struct EventParseError(pub String);

impl FromStr for TickEvent {
    type Err = EventParseError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let bad = || EventParseError(line.to_string());
        let fields: Vec<&str> = line.trim().split(',').collect();
        let [time, kind, subject, x, y] = fields[..] else {
            return Err(bad());
        };
        let kind = EventKind::ALL
            .into_iter()
            .find(|k| k.as_str() == kind)
            .ok_or_else(bad)?;
        Ok(TickEvent {
            time: time.parse().map_err(|_| bad())?,
            kind,
            subject: subject.parse().map_err(|_| bad())?,
            location: Cell::new(x.parse().map_err(|_| bad())?, y.parse().map_err(|_| bad())?),
        })
    }
}

/// Renders an event log, one event per line.
pub fn format_events(events: &[TickEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_string());
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub student_count: usize,
    pub casualties: usize,
    pub evacuated: usize,
    pub hiding: usize,
    /// Running or unaware at the end of the run.
    pub still_inside: usize,
    pub suppressed: bool,
    pub suppression_time: Option<u32>,
    pub casualty_pct: f64,
    pub evacuation_pct: f64,
}

impl RunOutcome {
    pub fn empty(student_count: usize) -> Self {
        RunOutcome {
            student_count,
            casualties: 0,
            evacuated: 0,
            hiding: 0,
            still_inside: student_count,
            suppressed: false,
            suppression_time: None,
            casualty_pct: 0.0,
            evacuation_pct: 0.0,
        }
    }
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "casualties={} evacuated={} hiding={} still_inside={} suppressed={} suppression_time={} casualty_pct={:.2} evacuation_pct={:.2}",
            self.casualties,
            self.evacuated,
            self.hiding,
            self.still_inside,
            self.suppressed,
            self.suppression_time
                .map_or_else(|| "none".to_string(), |t| t.to_string()),
            self.casualty_pct,
            self.evacuation_pct
        )
    }
}

/// Initial positions drawn from the placement seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placement {
    pub students: Vec<Cell>,
    pub shooter: Cell,
}

/// Students uniformly over room floor cells (several may share a cell),
/// shooter uniformly over hallway cells.
pub fn place_agents(
    layout: &FloorLayout,
    student_count: usize,
    placement_seed: u64,
) -> Result<Placement, EngineError> {
    let rooms = layout.room_cells();
    if rooms.is_empty() {
        return Err(EngineError::LayoutTooSmall);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(placement_seed);
    let students = (0..student_count)
        .map(|_| rooms[rng.random_range(0..rooms.len())])
        .collect();
    // maps without hallway floor fall back to room floor for the shooter
    let pool = if layout.hallway_cells().is_empty() {
        rooms
    } else {
        layout.hallway_cells()
    };
    let shooter = pool[rng.random_range(0..pool.len())];
    Ok(Placement { students, shooter })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepStatus {
    Advanced,
    Terminal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    pub layout: Arc<FloorLayout>,
    pub students: Vec<Student>,
    pub shooter: Shooter,
    pub officer: Officer,
    /// Seconds elapsed.
    pub clock: u32,
    pub first_shot_fired: bool,
    pub cfk: Option<Cell>,
    /// Where the most recent shot was fired from.
    pub last_shot: Option<Cell>,
    pub suppression_time: Option<u32>,
    pub events: Vec<TickEvent>,
    pub officer_patrol: PatrolMemory,
    pub shooter_patrol: PatrolMemory,
    rng: ChaCha8Rng,
}

impl WorldState {
    pub fn new(config: &SimConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let layout = Arc::clone(&config.layout);
        let placement = place_agents(&layout, config.student_count, config.placement_seed)?;
        let n = config.student_count;
        let students = placement
            .students
            .iter()
            .enumerate()
            .map(|(id, &cell)| Student {
                id,
                cell,
                mode: StudentMode::Unaware,
                exit: None,
            })
            .collect();
        let mut shooter_patrol = PatrolMemory::new(&layout);
        shooter_patrol.visit(placement.shooter);
        Ok(WorldState {
            officer_patrol: PatrolMemory::new(&layout),
            shooter_patrol,
            layout,
            students,
            shooter: Shooter {
                id: n,
                cell: placement.shooter,
                mode: ShooterMode::Active,
            },
            officer: Officer {
                id: n + 1,
                cell: None,
                mode: OfficerMode::Outside,
            },
            clock: 0,
            first_shot_fired: false,
            cfk: None,
            last_shot: None,
            suppression_time: None,
            events: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        })
    }

    pub fn count(&self, mode: StudentMode) -> usize {
        self.students.iter().filter(|s| s.mode == mode).count()
    }

    pub fn outcome(&self) -> RunOutcome {
        let n = self.students.len();
        let casualties = self.count(StudentMode::Casualty);
        let evacuated = self.count(StudentMode::Evacuated);
        let hiding = self.count(StudentMode::Hiding);
        let pct = |k: usize| 100.0 * k as f64 / n as f64;
        RunOutcome {
            student_count: n,
            casualties,
            evacuated,
            hiding,
            still_inside: n - casualties - evacuated - hiding,
            suppressed: self.shooter.mode == ShooterMode::Suppressed,
            suppression_time: self.suppression_time,
            casualty_pct: pct(casualties),
            evacuation_pct: pct(evacuated),
        }
    }

    fn emit(&mut self, kind: EventKind, subject: AgentId, location: Cell) {
        self.events.push(TickEvent {
            time: self.clock,
            kind,
            subject,
            location,
        });
    }

    /// Advances one tick, or reports `Terminal` once the clock reaches the runtime.
    pub fn step(&mut self, config: &SimConfig) -> StepStatus {
        if self.clock >= config.runtime {
            return StepStatus::Terminal;
        }
        let shot_this_tick = self.shooter_phase(config);
        self.student_phase(config, shot_this_tick);
        self.officer_phase(config);
        self.clock += config.tick;
        StepStatus::Advanced
    }

    fn shooter_phase(&mut self, config: &SimConfig) -> bool {
        if self.shooter.mode != ShooterMode::Active {
            return false;
        }
        let targets: Vec<StudentView> = self
            .students
            .iter()
            .filter(|s| s.mode.is_targetable())
            .map(|s| StudentView {
                id: s.id,
                cell: s.cell,
                mode: s.mode,
            })
            .collect();
        let layout = Arc::clone(&self.layout);
        let mut cell = self.shooter.cell;
        for _ in 0..config.speeds.shooter.max(1) {
            let action = shooter_decide(
                &layout,
                cell,
                &targets,
                &config.params,
                &self.shooter_patrol,
                &mut self.rng,
            );
            match action {
                ShooterAction::Kill { victim, hit, .. } => {
                    self.shooter.cell = cell;
                    self.emit(EventKind::ShotFired, self.shooter.id, cell);
                    self.first_shot_fired = true;
                    self.last_shot = Some(cell);
                    if hit {
                        let at = self.students[victim].cell;
                        self.students[victim].mode = StudentMode::Casualty;
                        if self.cfk.is_none() {
                            self.cfk = Some(at);
                            self.emit(EventKind::FirstKill, victim, at);
                        }
                        self.emit(EventKind::Kill, victim, at);
                    }
                    return true;
                }
                ShooterAction::Move(_) if config.speeds.shooter == 0 => break,
                ShooterAction::Move(next) => {
                    cell = next;
                    self.shooter_patrol.visit(next);
                }
            }
        }
        self.shooter.cell = cell;
        false
    }

    fn student_phase(&mut self, config: &SimConfig, shot_this_tick: bool) {
        let alert = self.first_shot_fired && (config.detector_enabled || shot_this_tick);
        let ctx = ShotContext {
            cfk: self.cfk,
            cs: self.shooter.cell,
            first_shot_fired: self.first_shot_fired,
            detector_enabled: config.detector_enabled,
        };
        let released = self.shooter.mode == ShooterMode::Suppressed;
        let layout = Arc::clone(&self.layout);
        for i in 0..self.students.len() {
            let s = &self.students[i];
            match s.mode {
                StudentMode::Unaware if alert => {
                    let action = if config.detector_enabled {
                        student_decide_detector(&layout, s.cell, &ctx, &config.params)
                    } else {
                        student_decide_no_detector(&layout, s.cell, &ctx, &config.params)
                    };
                    match action {
                        StudentAction::Hide => {
                            let at = s.cell;
                            self.students[i].mode = StudentMode::Hiding;
                            self.emit(EventKind::HideStart, i, at);
                        }
                        StudentAction::Run(exit) => self.start_running(i, exit, config),
                        StudentAction::NoEffect => {}
                    }
                }
                StudentMode::Running => self.advance_runner(i, config),
                StudentMode::Hiding if released => {
                    if let Some(exit) = nearest_exit_id(&layout, s.cell) {
                        self.start_running(i, exit, config);
                    }
                }
                _ => {}
            }
        }
    }

    fn start_running(&mut self, i: usize, exit: ExitId, config: &SimConfig) {
        let at = self.students[i].cell;
        self.students[i].mode = StudentMode::Running;
        self.students[i].exit = Some(exit);
        self.emit(EventKind::RunStart, i, at);
        self.advance_runner(i, config);
    }

    fn advance_runner(&mut self, i: usize, config: &SimConfig) {
        let Some(exit) = self.students[i].exit else {
            return;
        };
        let layout = Arc::clone(&self.layout);
        let field = layout.exit_field(exit);
        let mut cell = self.students[i].cell;
        for _ in 0..config.speeds.student {
            if layout.exit_at(cell).is_some() {
                break;
            }
            match field.next_step(cell) {
                Some(next) => cell = next,
                None => break,
            }
        }
        self.students[i].cell = cell;
        if layout.exit_at(cell).is_some() {
            self.students[i].mode = StudentMode::Evacuated;
            self.emit(EventKind::Evacuated, i, cell);
        }
    }

    fn officer_phase(&mut self, config: &SimConfig) {
        let views: Vec<StudentView> = self
            .students
            .iter()
            .map(|s| StudentView {
                id: s.id,
                cell: s.cell,
                mode: s.mode,
            })
            .collect();
        let input = OfficerInputs {
            mode: self.officer.mode,
            cell: self.officer.cell,
            patrol: &self.officer_patrol,
            shooter: Some(ShooterView {
                id: self.shooter.id,
                cell: self.shooter.cell,
                mode: self.shooter.mode,
            }),
            students: &views,
            elapsed: self.clock,
            entry_time: config.officer_entry,
            speed: config.speeds.officer,
            detector_enabled: config.detector_enabled,
            last_known_shooter: self.last_shot,
        };
        let action = officer_decide(&self.layout, &input, &config.params);
        match action {
            OfficerAction::Wait => {}
            OfficerAction::Enter(cell) => {
                self.officer.cell = Some(cell);
                self.officer.mode = OfficerMode::Patrolling;
                self.officer_patrol.visit(cell);
                self.emit(EventKind::OfficerEntered, self.officer.id, cell);
            }
            OfficerAction::Patrol(route) => {
                for &c in &route {
                    self.officer_patrol.visit(c);
                }
                if let Some(&last) = route.last() {
                    self.officer.cell = Some(last);
                }
            }
            OfficerAction::Suppress { evacuate, .. } => {
                self.shooter.mode = ShooterMode::Suppressed;
                self.suppression_time = Some(self.clock);
                self.emit(EventKind::Suppressed, self.shooter.id, self.shooter.cell);
                self.evacuate(&evacuate);
            }
            OfficerAction::Evacuate(ids) => self.evacuate(&ids),
        }
    }

    fn evacuate(&mut self, ids: &[AgentId]) {
        for &id in ids {
            let at = self.students[id].cell;
            self.students[id].mode = StudentMode::Evacuated;
            self.emit(EventKind::Evacuated, id, at);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub outcome: RunOutcome,
    pub events: Vec<TickEvent>,
}

/// Runs from placement to `config.runtime`.
pub fn run(config: &SimConfig) -> Result<RunResult, EngineError> {
    let mut state = WorldState::new(config)?;
    while state.step(config) == StepStatus::Advanced {}
    Ok(RunResult {
        outcome: state.outcome(),
        events: state.events,
    })
}

/// Runs once up to the largest horizon and snapshots the outcome at each
/// horizon; `config.runtime` is ignored. The snapshot at `h` equals
/// `run` with `runtime = h`, because nothing in a tick depends on the runtime.
pub fn run_horizons(config: &SimConfig, horizons: &[u32]) -> Result<Vec<RunOutcome>, EngineError> {
    let mut order: Vec<usize> = (0..horizons.len()).collect();
    order.sort_by_key(|&i| horizons[i]);
    let mut out = vec![None; horizons.len()];
    let mut state = WorldState::new(config)?;
    let mut cfg = config.clone();
    for i in order {
        cfg.runtime = horizons[i];
        while state.step(&cfg) == StepStatus::Advanced {}
        out[i] = Some(state.outcome());
    }
    Ok(out.into_iter().map(Option::unwrap).collect())
}
