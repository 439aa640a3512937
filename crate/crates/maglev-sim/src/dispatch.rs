//! Routing and job assignment over a conveyor line.
//!
//! Routing finds minimal-ETA paths where a segment costs its
//! rest-to-rest traversal time scaled by a congestion multiplier.
//! Assignment builds mover schedules for released jobs three ways: a
//! greedy earliest-completion pass, a local search refining any seed,
//! and an exhaustive enumeration for small instances that serves as
//! the optimality oracle. Everything is deterministic; the local
//! search takes an explicit seed for its tie-shuffling RNG.

use crate::line::{self, route_by_cost, traversal_time, LineConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DispatchError {
    #[error("configuration invalid:\n  {}", diagnostics.join("\n  "))]
    InvalidConfig { diagnostics: Vec<String> },
    #[error("{what} must be finite and in range, got {value}")]
    InvalidParameter { what: &'static str, value: f64 },
    #[error("duplicate id {id}")]
    DuplicateId { id: String },
    #[error("node {id} does not exist on the line")]
    UnknownNode { id: String },
    #[error("job {job} references unknown station {station}")]
    UnknownStation { job: String, station: String },
    #[error("job {job} is unreachable by every mover")]
    UnreachableJob { job: String },
    #[error("no movers to assign jobs to")]
    NoMovers,
    #[error("instance too large for exhaustive search: {jobs} jobs, {movers} movers (limits 8, 4)")]
    TooLarge { jobs: usize, movers: usize },
    #[error("seed schedule does not cover the job set: {reason}")]
    BadSeed { reason: String },
}

/// One transport-and-process job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    /// Target station id.
    pub station: String,
    /// Processing time at the station [s].
    pub processing_time: f64,
    /// Earliest time processing may start [s].
    pub release_time: f64,
}

impl Job {
    pub fn new(
        id: &str,
        station: &str,
        processing_time: f64,
        release_time: f64,
    ) -> Result<Self, DispatchError> {
        let job = Job {
            id: id.into(),
            station: station.into(),
            processing_time,
            release_time,
        };
        job.validate()?;
        Ok(job)
    }

    pub fn validate(&self) -> Result<(), DispatchError> {
        if !(self.processing_time >= 0.0) || !self.processing_time.is_finite() {
            return Err(DispatchError::InvalidParameter {
                what: "processing_time",
                value: self.processing_time,
            });
        }
        if !(self.release_time >= 0.0) || !self.release_time.is_finite() {
            return Err(DispatchError::InvalidParameter {
                what: "release_time",
                value: self.release_time,
            });
        }
        Ok(())
    }
}

/// A mover available for dispatch, parked at a node at t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchMover {
    pub id: String,
    pub node: String,
}

/// Per-segment slowdown factors; segments not listed count as 1.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CongestionMap {
    pub multipliers: BTreeMap<String, f64>,
}

impl CongestionMap {
    pub fn validate(&self) -> Result<(), DispatchError> {
        for m in self.multipliers.values() {
            if !(*m >= 1.0) || !m.is_finite() {
                return Err(DispatchError::InvalidParameter {
                    what: "congestion multiplier",
                    value: *m,
                });
            }
        }
        Ok(())
    }

    pub fn factor(&self, segment_id: &str) -> f64 {
        self.multipliers.get(segment_id).copied().unwrap_or(1.0)
    }
}

/// A minimal-ETA path between two nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    /// Node ids from origin to destination inclusive.
    pub nodes: Vec<String>,
    /// Segment ids traversed, empty when origin equals destination.
    pub segments: Vec<String>,
    /// Total travel time [s].
    pub eta: f64,
}

/// One job placed on the timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledJob {
    pub job: String,
    pub mover: String,
    pub station: String,
    /// Processing start [s]; never before the job's release time.
    pub start: f64,
    /// Processing end [s].
    pub end: f64,
}

/// A complete assignment of jobs to movers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// Ordered job ids per mover; every mover appears, idle ones empty.
    pub assignments: BTreeMap<String, Vec<String>>,
    /// Placed jobs, sorted by job id.
    pub jobs: Vec<ScheduledJob>,
    /// Latest job end, 0 for an empty job set [s].
    pub makespan: f64,
}

/// Minimal-ETA route between two nodes, or None when no directed path
/// exists. Cost per segment is its rest-to-rest traversal time times
/// the congestion multiplier; exact ties pick the lexicographically
/// smallest node path.
pub fn route(
    config: &LineConfig,
    from: &str,
    to: &str,
    congestion: &CongestionMap,
) -> Result<Option<Route>, DispatchError> {
    check_config(config)?;
    congestion.validate()?;
    let nodes = line::node_set(&config.segments);
    for id in [from, to] {
        if !nodes.contains(id) {
            return Err(DispatchError::UnknownNode { id: id.into() });
        }
    }
    Ok(
        route_by_cost(&config.segments, from, to, |seg| {
            traversal_time(seg) * congestion.factor(&seg.id)
        })
        .map(|(eta, segments, nodes)| Route {
            nodes,
            segments,
            eta,
        }),
    )
}

fn check_config(config: &LineConfig) -> Result<(), DispatchError> {
    let diagnostics = line::validate(config);
    if diagnostics.is_empty() {
        Ok(())
    } else {
        Err(DispatchError::InvalidConfig { diagnostics })
    }
}

/// Travel times between every pair of relevant nodes, indexed densely.
struct EtaTable {
    index: BTreeMap<String, usize>,
    eta: Vec<Vec<Option<f64>>>,
}

impl EtaTable {
    fn build(config: &LineConfig, congestion: &CongestionMap) -> Self {
        let nodes: Vec<String> = line::node_set(&config.segments)
            .into_iter()
            .map(String::from)
            .collect();
        let index: BTreeMap<String, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let eta = nodes
            .iter()
            .map(|from| {
                nodes
                    .iter()
                    .map(|to| {
                        route_by_cost(&config.segments, from, to, |seg| {
                            traversal_time(seg) * congestion.factor(&seg.id)
                        })
                        .map(|(cost, _, _)| cost)
                    })
                    .collect()
            })
            .collect();
        EtaTable { index, eta }
    }

    fn node(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    fn between(&self, from: usize, to: usize) -> Option<f64> {
        self.eta[from][to]
    }
}

/// Validated, index-based view of one assignment problem.
struct Instance<'a> {
    movers: &'a [DispatchMover],
    jobs: &'a [Job],
    /// Node index each mover starts at.
    mover_node: Vec<usize>,
    /// Node index of each job's station.
    job_node: Vec<usize>,
    etas: EtaTable,
}

impl<'a> Instance<'a> {
    fn build(
        config: &LineConfig,
        movers: &'a [DispatchMover],
        jobs: &'a [Job],
        congestion: &CongestionMap,
    ) -> Result<Self, DispatchError> {
        check_config(config)?;
        congestion.validate()?;
        if movers.is_empty() && !jobs.is_empty() {
            return Err(DispatchError::NoMovers);
        }
        let mut seen = BTreeSet::new();
        for m in movers {
            if !seen.insert(m.id.as_str()) {
                return Err(DispatchError::DuplicateId { id: m.id.clone() });
            }
        }
        let mut seen = BTreeSet::new();
        for j in jobs {
            j.validate()?;
            if !seen.insert(j.id.as_str()) {
                return Err(DispatchError::DuplicateId { id: j.id.clone() });
            }
        }

        let etas = EtaTable::build(config, congestion);
        let stations: BTreeMap<&str, &str> = config
            .stations
            .iter()
            .map(|s| (s.id.as_str(), s.node.as_str()))
            .collect();
        let mover_node = movers
            .iter()
            .map(|m| {
                etas.node(&m.node).ok_or_else(|| DispatchError::UnknownNode {
                    id: m.node.clone(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let job_node = jobs
            .iter()
            .map(|j| {
                let node = stations.get(j.station.as_str()).ok_or_else(|| {
                    DispatchError::UnknownStation {
                        job: j.id.clone(),
                        station: j.station.clone(),
                    }
                })?;
                etas.node(node).ok_or_else(|| DispatchError::UnknownNode {
                    id: (*node).to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Instance {
            movers,
            jobs,
            mover_node,
            job_node,
            etas,
        })
    }

    /// Plays one ordered assignment forward. Returns per-job
    /// (start, end) and the makespan, or None if any leg is
    /// unreachable. `order[m]` lists job indices for mover m.
    fn replay(&self, order: &[Vec<usize>]) -> Option<(Vec<(f64, f64)>, f64)> {
        let mut times = vec![(0.0, 0.0); self.jobs.len()];
        let mut makespan: f64 = 0.0;
        for (m, sequence) in order.iter().enumerate() {
            let mut at = self.mover_node[m];
            let mut available = 0.0;
            for &j in sequence {
                let eta = self.etas.between(at, self.job_node[j])?;
                let job = &self.jobs[j];
                let start = (available + eta).max(job.release_time);
                let end = start + job.processing_time;
                times[j] = (start, end);
                makespan = makespan.max(end);
                at = self.job_node[j];
                available = end;
            }
        }
        Some((times, makespan))
    }

    fn to_schedule(&self, order: &[Vec<usize>]) -> Option<Schedule> {
        let (times, makespan) = self.replay(order)?;
        let mut assignments: BTreeMap<String, Vec<String>> = self
            .movers
            .iter()
            .map(|m| (m.id.clone(), Vec::new()))
            .collect();
        let mut placed: Vec<ScheduledJob> = Vec::new();
        for (m, sequence) in order.iter().enumerate() {
            let list = assignments
                .get_mut(&self.movers[m].id)
                .expect("mover registered");
            for &j in sequence {
                list.push(self.jobs[j].id.clone());
                placed.push(ScheduledJob {
                    job: self.jobs[j].id.clone(),
                    mover: self.movers[m].id.clone(),
                    station: self.jobs[j].station.clone(),
                    start: times[j].0,
                    end: times[j].1,
                });
            }
        }
        placed.sort_by(|a, b| a.job.cmp(&b.job));
        Some(Schedule {
            assignments,
            jobs: placed,
            makespan,
        })
    }

    /// Jobs in release order, ties by id.
    fn release_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.jobs.len()).collect();
        order.sort_by(|&a, &b| {
            self.jobs[a]
                .release_time
                .partial_cmp(&self.jobs[b].release_time)
                .expect("release times are finite")
                .then_with(|| self.jobs[a].id.cmp(&self.jobs[b].id))
        });
        order
    }

    /// Rebuilds the index-based order from a schedule's assignment
    /// lists, checking that it covers the job set exactly.
    fn order_from(&self, schedule: &Schedule) -> Result<Vec<Vec<usize>>, DispatchError> {
        let job_index: BTreeMap<&str, usize> = self
            .jobs
            .iter()
            .enumerate()
            .map(|(i, j)| (j.id.as_str(), i))
            .collect();
        let mut order = vec![Vec::new(); self.movers.len()];
        let mut seen = BTreeSet::new();
        for (m, mover) in self.movers.iter().enumerate() {
            let Some(list) = schedule.assignments.get(&mover.id) else {
                continue;
            };
            for id in list {
                let &j = job_index.get(id.as_str()).ok_or_else(|| DispatchError::BadSeed {
                    reason: format!("job {id} is not in the job set"),
                })?;
                if !seen.insert(j) {
                    return Err(DispatchError::BadSeed {
                        reason: format!("job {id} assigned twice"),
                    });
                }
                order[m].push(j);
            }
        }
        for mover_id in schedule.assignments.keys() {
            if !self.movers.iter().any(|m| &m.id == mover_id) {
                return Err(DispatchError::BadSeed {
                    reason: format!("mover {mover_id} is not in the mover set"),
                });
            }
        }
        if seen.len() != self.jobs.len() {
            return Err(DispatchError::BadSeed {
                reason: format!("{} of {} jobs assigned", seen.len(), self.jobs.len()),
            });
        }
        Ok(order)
    }
}

/// Greedy assignment: jobs in release order each go to the mover that
/// would finish them earliest, ties to the smallest mover id.
pub fn assign_greedy(
    config: &LineConfig,
    movers: &[DispatchMover],
    jobs: &[Job],
    congestion: &CongestionMap,
) -> Result<Schedule, DispatchError> {
    let instance = Instance::build(config, movers, jobs, congestion)?;
    let mut order: Vec<Vec<usize>> = vec![Vec::new(); movers.len()];

    for j in instance.release_order() {
        let mut best: Option<(f64, usize)> = None;
        for m in 0..movers.len() {
            order[m].push(j);
            let outcome = instance.replay(&order).map(|(times, _)| times[j].1);
            order[m].pop();
            let Some(end) = outcome else { continue };
            let better = match &best {
                None => true,
                Some((be, bm)) => {
                    end < *be || (end == *be && movers[m].id < movers[*bm].id)
                }
            };
            if better {
                best = Some((end, m));
            }
        }
        let (_, m) = best.ok_or_else(|| DispatchError::UnreachableJob {
            job: instance.jobs[j].id.clone(),
        })?;
        order[m].push(j);
    }
    Ok(instance.to_schedule(&order).expect("all legs reachable"))
}

/// One relocate or swap move on an assignment.
#[derive(Clone, Copy)]
enum Move {
    /// Take the job at `from` and insert it at `to` (mover, position).
    Relocate { from: (usize, usize), to: (usize, usize) },
    /// Exchange the jobs at two slots.
    Swap { a: (usize, usize), b: (usize, usize) },
}

fn apply_move(order: &[Vec<usize>], mv: Move) -> Vec<Vec<usize>> {
    let mut next = order.to_vec();
    match mv {
        Move::Relocate { from, to } => {
            let job = next[from.0].remove(from.1);
            next[to.0].insert(to.1, job);
        }
        Move::Swap { a, b } => {
            let (ja, jb) = (next[a.0][a.1], next[b.0][b.1]);
            next[a.0][a.1] = jb;
            next[b.0][b.1] = ja;
        }
    }
    next
}

/// Refines a seed schedule by best-improvement relocate and swap
/// moves, up to `iterations` applied moves. The RNG seed only
/// shuffles the order candidate moves are examined in, which settles
/// ties between equally good improvements; results never have a
/// larger makespan than the seed and are deterministic for a given
/// `rng_seed`.
pub fn assign_local_search(
    config: &LineConfig,
    movers: &[DispatchMover],
    jobs: &[Job],
    congestion: &CongestionMap,
    seed: &Schedule,
    iterations: u32,
    rng_seed: u64,
) -> Result<Schedule, DispatchError> {
    let instance = Instance::build(config, movers, jobs, congestion)?;
    let mut order = instance.order_from(seed)?;
    let (_, mut makespan) = instance
        .replay(&order)
        .ok_or_else(|| DispatchError::BadSeed {
            reason: "seed contains an unreachable leg".into(),
        })?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    for _ in 0..iterations {
        let mut moves: Vec<Move> = Vec::new();
        for fm in 0..order.len() {
            for fp in 0..order[fm].len() {
                for tm in 0..order.len() {
                    let slots = if tm == fm {
                        order[tm].len()
                    } else {
                        order[tm].len() + 1
                    };
                    for tp in 0..slots {
                        if tm == fm && tp == fp {
                            continue;
                        }
                        moves.push(Move::Relocate {
                            from: (fm, fp),
                            to: (tm, tp),
                        });
                    }
                }
                for bm in fm..order.len() {
                    let start = if bm == fm { fp + 1 } else { 0 };
                    for bp in start..order[bm].len() {
                        moves.push(Move::Swap {
                            a: (fm, fp),
                            b: (bm, bp),
                        });
                    }
                }
            }
        }
        moves.shuffle(&mut rng);

        let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
        for mv in moves {
            let candidate = apply_move(&order, mv);
            let Some((_, m)) = instance.replay(&candidate) else {
                continue;
            };
            if m < best.as_ref().map_or(makespan, |(bm, _)| *bm) {
                best = Some((m, candidate));
            }
        }
        match best {
            Some((m, next)) => {
                order = next;
                makespan = m;
            }
            None => break,
        }
    }
    Ok(instance.to_schedule(&order).expect("seed replayed"))
}

/// Exhaustive minimum-makespan search for small instances (at most
/// 8 jobs and 4 movers). Enumerates every assignment of jobs to
/// movers and every per-mover ordering; ties keep the first optimum
/// in enumeration order (jobs inserted in id order, movers and
/// insertion positions in ascending order).
pub fn brute_force(
    config: &LineConfig,
    movers: &[DispatchMover],
    jobs: &[Job],
    congestion: &CongestionMap,
) -> Result<Schedule, DispatchError> {
    if jobs.len() > 8 || movers.len() > 4 {
        return Err(DispatchError::TooLarge {
            jobs: jobs.len(),
            movers: movers.len(),
        });
    }
    let instance = Instance::build(config, movers, jobs, congestion)?;

    // insert jobs one at a time in id order: every ordered partition
    // is generated exactly once
    let mut ids: Vec<usize> = (0..jobs.len()).collect();
    ids.sort_by(|&a, &b| jobs[a].id.cmp(&jobs[b].id));

    fn descend(
        depth: usize,
        ids: &[usize],
        instance: &Instance,
        order: &mut Vec<Vec<usize>>,
        best: &mut Option<(f64, Vec<Vec<usize>>)>,
    ) {
        if depth == ids.len() {
            if let Some((_, makespan)) = instance.replay(order) {
                if best.as_ref().is_none_or(|(b, _)| makespan < *b) {
                    *best = Some((makespan, order.clone()));
                }
            }
            return;
        }
        for m in 0..order.len() {
            for pos in 0..=order[m].len() {
                order[m].insert(pos, ids[depth]);
                descend(depth + 1, ids, instance, order, best);
                order[m].remove(pos);
            }
        }
    }

    let mut best = None;
    let mut scratch = vec![Vec::new(); movers.len()];
    if jobs.is_empty() {
        return Ok(instance.to_schedule(&scratch).expect("empty schedule"));
    }
    descend(0, &ids, &instance, &mut scratch, &mut best);
    let (_, order) = best.ok_or_else(|| DispatchError::UnreachableJob {
        job: jobs[ids[0]].id.clone(),
    })?;
    Ok(instance.to_schedule(&order).expect("best is reachable"))
}

/// Structural check of a schedule against its inputs: every job
/// placed exactly once, starts respect release times, per-mover
/// timelines replay to exactly the recorded times, and the makespan
/// is the latest end. Returns one message per violation.
pub fn schedule_diagnostics(
    config: &LineConfig,
    movers: &[DispatchMover],
    jobs: &[Job],
    congestion: &CongestionMap,
    schedule: &Schedule,
) -> Result<Vec<String>, DispatchError> {
    let instance = Instance::build(config, movers, jobs, congestion)?;
    let mut diags = Vec::new();
    let order = match instance.order_from(schedule) {
        Ok(order) => order,
        Err(e) => return Ok(vec![e.to_string()]),
    };
    let Some((times, makespan)) = instance.replay(&order) else {
        return Ok(vec!["schedule contains an unreachable leg".into()]);
    };
    let by_id: BTreeMap<&str, &ScheduledJob> =
        schedule.jobs.iter().map(|s| (s.job.as_str(), s)).collect();
    if by_id.len() != jobs.len() || schedule.jobs.len() != jobs.len() {
        diags.push(format!(
            "schedule places {} jobs, expected {}",
            schedule.jobs.len(),
            jobs.len()
        ));
    }
    for (j, job) in instance.jobs.iter().enumerate() {
        let Some(placed) = by_id.get(job.id.as_str()) else {
            diags.push(format!("job {} missing from placed list", job.id));
            continue;
        };
        if placed.start < job.release_time {
            diags.push(format!(
                "job {} starts at {} before release {}",
                job.id, placed.start, job.release_time
            ));
        }
        if placed.start != times[j].0 || placed.end != times[j].1 {
            diags.push(format!(
                "job {} recorded at ({}, {}) but replays to ({}, {})",
                job.id, placed.start, placed.end, times[j].0, times[j].1
            ));
        }
    }
    if schedule.makespan != makespan {
        diags.push(format!(
            "makespan recorded {} but replays to {}",
            schedule.makespan, makespan
        ));
    }
    Ok(diags)
}
