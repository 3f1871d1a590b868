//! Team planning: robots plan one at a time in index order against a shared
//! table of door service reservations, then a single refinement pass lets each
//! robot replan against everyone else's final reservations.

use thiserror::Error;

use crate::constraints::{ConstraintSet, Reservation, TIME_EPS};
use crate::domain::{RobotSpec, SymbolicState, WorldMap};

use super::{plan_single_reserved, reservations, Goal, Plan, PlanError};

#[derive(Debug, Clone, PartialEq)]
pub struct TeamMember {
    pub robot: RobotSpec,
    pub state: SymbolicState,
    pub goal: Goal,
    /// When this robot can start its new plan.
    pub start: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TeamPlan {
    pub plans: Vec<Plan>,
    /// Estimated completion of each plan.
    pub finish: Vec<f64>,
    pub reservations: Vec<Vec<Reservation>>,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("robot {robot}: {source}")]
pub struct TeamError {
    pub robot: usize,
    pub source: PlanError,
}

pub fn plan_team(
    members: &[TeamMember],
    world: &WorldMap,
    constraints: &ConstraintSet,
) -> Result<TeamPlan, TeamError> {
    let mut team = TeamPlan::default();
    let mut table: Vec<Reservation> = Vec::new();
    for m in members {
        let out = plan_single_reserved(&m.state, &m.goal, &m.robot, world, constraints, &table, m.start)
            .map_err(|source| TeamError {
                robot: m.robot.id,
                source,
            })?;
        let claimed = reservations(world, &out.plan, m.start, constraints);
        table.extend(claimed.iter().copied());
        team.plans.push(out.plan);
        team.finish.push(out.finish);
        team.reservations.push(claimed);
    }

    for (i, m) in members.iter().enumerate() {
        let others: Vec<Reservation> = team
            .reservations
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, r)| r.iter().copied())
            .collect();
        let out = plan_single_reserved(&m.state, &m.goal, &m.robot, world, constraints, &others, m.start)
            .map_err(|source| TeamError {
                robot: m.robot.id,
                source,
            })?;
        if out.finish < team.finish[i] - TIME_EPS {
            team.reservations[i] = reservations(world, &out.plan, m.start, constraints);
            team.plans[i] = out.plan;
            team.finish[i] = out.finish;
        }
    }
    Ok(team)
}
