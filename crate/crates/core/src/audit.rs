//! Replays an event log and checks it against the model's rules: mode
//! transitions, agent conservation, shot ranges and line of sight, officer
//! timing, and the final tallies.

use thiserror::Error;

use crate::behavior::{heaviside, StudentMode};
use crate::engine::{EventKind, RunOutcome, SimConfig, TickEvent};
use crate::layout::{manhattan, Cell};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuditViolation {
    #[error("event {index}: time {time} goes backwards")]
    TimeReversed { index: usize, time: u32 },
    #[error("event {index}: time {time} is at or past the runtime")]
    PastRuntime { index: usize, time: u32 },
    #[error("event {index}: subject {subject} is not a student")]
    UnknownStudent { index: usize, subject: usize },
    #[error("event {index}: student {subject} cannot go from {from:?} via {kind:?}")]
    BadTransition {
        index: usize,
        subject: usize,
        from: StudentMode,
        kind: EventKind,
    },
    #[error("event {index}: second FirstKill")]
    RepeatedFirstKill { index: usize },
    #[error("event {index}: kill without a shot in the same tick")]
    KillWithoutShot { index: usize },
    #[error("event {index}: kill at {distance} cells exceeds the visible range")]
    KillOutOfRange { index: usize, distance: u32 },
    #[error("event {index}: kill through a wall from {from} to {to}")]
    KillThroughWall { index: usize, from: Cell, to: Cell },
    #[error("event {index}: officer acts at {time} before entering")]
    OfficerTooEarly { index: usize, time: u32 },
    #[error("officer entered at {found:?}, expected {expected:?}")]
    WrongEntry {
        expected: Option<u32>,
        found: Option<u32>,
    },
    #[error("event {index}: {kind:?} after suppression")]
    AfterSuppression { index: usize, kind: EventKind },
    #[error("tally mismatch: log implies {implied}, outcome reports {reported}")]
    Tally { implied: String, reported: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuditSummary {
    pub ticks: usize,
    pub shots: usize,
    pub kills: usize,
    pub evacuations: usize,
}

/// Checks `events` produced by a run of `config`. When `outcome` is given
/// the final replayed tallies must match it.
pub fn audit_log(
    config: &SimConfig,
    events: &[TickEvent],
    outcome: Option<&RunOutcome>,
) -> Result<AuditSummary, AuditViolation> {
    let layout = &config.layout;
    let n = config.student_count;
    let shooter_id = n;
    let officer_id = n + 1;
    let mut modes = vec![StudentMode::Unaware; n];
    let mut summary = AuditSummary::default();
    let mut last_time = 0u32;
    let mut first_kill_seen = false;
    let mut shot: Option<(u32, Cell)> = None;
    let mut entered_at: Option<u32> = None;
    let mut suppressed = false;
    let mut ticks_seen = std::collections::BTreeSet::new();

    for (index, e) in events.iter().enumerate() {
        if e.time < last_time {
            return Err(AuditViolation::TimeReversed {
                index,
                time: e.time,
            });
        }
        if e.time >= config.runtime {
            return Err(AuditViolation::PastRuntime {
                index,
                time: e.time,
            });
        }
        last_time = e.time;
        ticks_seen.insert(e.time);

        if suppressed && !matches!(e.kind, EventKind::Evacuated | EventKind::RunStart) {
            return Err(AuditViolation::AfterSuppression {
                index,
                kind: e.kind,
            });
        }

        let student = |subject: usize| {
            if subject < n {
                Ok(subject)
            } else {
                Err(AuditViolation::UnknownStudent { index, subject })
            }
        };
        let transition = |modes: &mut Vec<StudentMode>, s: usize, allowed: &[StudentMode], to| {
            if allowed.contains(&modes[s]) {
                modes[s] = to;
                Ok(())
            } else {
                Err(AuditViolation::BadTransition {
                    index,
                    subject: s,
                    from: modes[s],
                    kind: e.kind,
                })
            }
        };

        match e.kind {
            EventKind::ShotFired => {
                summary.shots += 1;
                shot = Some((e.time, e.location));
            }
            EventKind::FirstKill => {
                if first_kill_seen {
                    return Err(AuditViolation::RepeatedFirstKill { index });
                }
                first_kill_seen = true;
                student(e.subject)?;
            }
            EventKind::Kill => {
                let s = student(e.subject)?;
                let Some((t, from)) = shot.filter(|(t, _)| *t == e.time) else {
                    return Err(AuditViolation::KillWithoutShot { index });
                };
                debug_assert_eq!(t, e.time);
                let distance = manhattan(from, e.location);
                if heaviside(config.params.gamma - f64::from(distance)) == 0 {
                    return Err(AuditViolation::KillOutOfRange { index, distance });
                }
                if !layout.line_of_sight(from, e.location) {
                    return Err(AuditViolation::KillThroughWall {
                        index,
                        from,
                        to: e.location,
                    });
                }
                transition(
                    &mut modes,
                    s,
                    &[StudentMode::Unaware, StudentMode::Running],
                    StudentMode::Casualty,
                )?;
                summary.kills += 1;
            }
            EventKind::HideStart => {
                let s = student(e.subject)?;
                transition(
                    &mut modes,
                    s,
                    &[StudentMode::Unaware, StudentMode::Running],
                    StudentMode::Hiding,
                )?;
            }
            EventKind::RunStart => {
                let s = student(e.subject)?;
                transition(
                    &mut modes,
                    s,
                    &[StudentMode::Unaware, StudentMode::Hiding],
                    StudentMode::Running,
                )?;
            }
            EventKind::Evacuated => {
                let s = student(e.subject)?;
                let at_exit = layout.exit_at(e.location).is_some();
                if at_exit {
                    transition(
                        &mut modes,
                        s,
                        &[StudentMode::Running],
                        StudentMode::Evacuated,
                    )?;
                } else {
                    // officer-assisted evacuation
                    if entered_at.is_none() {
                        return Err(AuditViolation::OfficerTooEarly {
                            index,
                            time: e.time,
                        });
                    }
                    transition(
                        &mut modes,
                        s,
                        &[
                            StudentMode::Unaware,
                            StudentMode::Running,
                            StudentMode::Hiding,
                        ],
                        StudentMode::Evacuated,
                    )?;
                }
                summary.evacuations += 1;
            }
            EventKind::OfficerEntered => {
                if e.subject != officer_id || entered_at.is_some() || e.time < config.officer_entry
                {
                    return Err(AuditViolation::OfficerTooEarly {
                        index,
                        time: e.time,
                    });
                }
                entered_at = Some(e.time);
            }
            EventKind::Suppressed => {
                if entered_at.is_none() || e.subject != shooter_id {
                    return Err(AuditViolation::OfficerTooEarly {
                        index,
                        time: e.time,
                    });
                }
                suppressed = true;
            }
        }
    }

    // first tick at or after the scheduled entry
    let expected_entry = {
        let tick = config.tick.max(1);
        let t = config.officer_entry.div_ceil(tick) * tick;
        (t < config.runtime).then_some(t)
    };
    if entered_at != expected_entry {
        return Err(AuditViolation::WrongEntry {
            expected: expected_entry,
            found: entered_at,
        });
    }

    if let Some(outcome) = outcome {
        let count = |m| modes.iter().filter(|x| **x == m).count();
        let implied = (
            count(StudentMode::Casualty),
            count(StudentMode::Evacuated),
            count(StudentMode::Hiding),
            count(StudentMode::Unaware) + count(StudentMode::Running),
            suppressed,
        );
        let reported = (
            outcome.casualties,
            outcome.evacuated,
            outcome.hiding,
            outcome.still_inside,
            outcome.suppressed,
        );
        if implied != reported || outcome.student_count != n {
            return Err(AuditViolation::Tally {
                implied: format!("{implied:?}"),
                reported: format!("{reported:?}"),
            });
        }
    }
    summary.ticks = ticks_seen.len();
    Ok(summary)
}
