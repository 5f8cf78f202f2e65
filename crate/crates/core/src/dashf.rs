//! Dinkelbach outer loop alternating the association/offloading step and
//! the resource step.

use std::time::Instant;

use crate::assignment::round_robin_association;
use crate::error::{Result, TcrError};
use crate::part1::solve_part1;
use crate::part2::solve_part2;
use crate::scenario::{evaluate, tcr, Allocation, Metrics, Scenario, Tolerances};

/// `y * (w_t T + w_e E) - V` with `T` the true total delay. Minimizing this
/// at `y = TCR(a)` finds a point with a ratio at least `y`.
pub fn dinkelbach_objective(sc: &Scenario, a: &Allocation, y: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(TcrError::InvalidAllocation(format!("non-finite ratio estimate {y}")));
    }
    let m = evaluate(sc, a)?;
    Ok(y * m.cost - m.v_trust)
}

/// Dinkelbach update: the ratio at the new point.
pub fn dinkelbach_update(sc: &Scenario, a: &Allocation) -> Result<f64> {
    tcr(sc, a)
}

/// One outer iteration. Iteration 0 is the initial point.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    /// Ratio estimate used during this iteration.
    pub y: f64,
    /// Ratio at the end of the iteration.
    pub tcr: f64,
    pub t_total: f64,
    pub e_total: f64,
    pub v_trust: f64,
    pub part1_outer: usize,
    pub part1_sdp_solves: usize,
    pub part2_iters: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    pub records: Vec<IterRecord>,
}

impl RunTrace {
    pub fn tcr_sequence(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.tcr).collect()
    }

    /// Ratio estimates `y^(k)`: the initial ratio followed by the ratio after
    /// every accepted outer iteration.
    pub fn y_sequence(&self) -> Vec<f64> {
        self.tcr_sequence()
    }

    /// Serializes as CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut s =
            String::from("iter,y,tcr,t_total,e_total,v_trust,part1_outer,part1_sdp_solves,part2_iters,wall_ms\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.iter,
                r.y,
                r.tcr,
                r.t_total,
                r.e_total,
                r.v_trust,
                r.part1_outer,
                r.part1_sdp_solves,
                r.part2_iters,
                r.wall_ms
            ));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub alloc: Allocation,
    pub metrics: Metrics,
    pub trace: RunTrace,
    /// True when the ratio settled before the iteration cap.
    pub converged: bool,
    /// True when an iteration lowered the ratio and the run kept the
    /// previous point.
    pub stopped_on_decrease: bool,
    pub iterations: usize,
}

/// Which steps an alternating run performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Steps {
    pub association: bool,
    pub resources: bool,
}

/// Starting point: round-robin association, half offloading, equal split.
pub fn initial_point(sc: &Scenario) -> Result<Allocation> {
    let x = round_robin_association(sc.n_users(), sc.n_servers());
    Allocation::equal_split(sc, &x, &vec![0.5; sc.n_users()])
}

fn record(sc: &Scenario, a: &Allocation, iter: usize, y: f64, started: Instant) -> Result<(IterRecord, Metrics)> {
    let m = evaluate(sc, a)?;
    Ok((
        IterRecord {
            iter,
            y,
            tcr: m.tcr,
            t_total: m.t_total,
            e_total: m.e_total,
            v_trust: m.v_trust,
            part1_outer: 0,
            part1_sdp_solves: 0,
            part2_iters: 0,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        },
        m,
    ))
}

/// Dinkelbach loop from `init` running the selected steps each iteration.
///
/// Stops when `|y_new / y - 1| <= eps`, at the iteration cap, or when an
/// iteration lowers the ratio (the previous point is kept).
pub fn run_alternating(sc: &Scenario, init: &Allocation, tols: &Tolerances, steps: Steps) -> Result<RunOutcome> {
    tols.validate()?;
    let started = Instant::now();
    let mut cur = init.clone();
    cur.refresh_t_aux(sc)?;
    let (mut rec0, mut metrics) = record(sc, &cur, 0, 0.0, started)?;
    rec0.y = rec0.tcr;
    let mut y = rec0.tcr;
    let mut trace = RunTrace { records: vec![rec0] };
    let mut converged = false;
    let mut stopped_on_decrease = false;
    let mut iterations = 0;
    for it in 1..=tols.max_outer {
        iterations = it;
        let mut next = cur.clone();
        let (mut p1_outer, mut p1_solves, mut p2_iters) = (0, 0, 0);
        if steps.association {
            let p1 = solve_part1(sc, &next, y, tols)
                .map_err(|e| e.context(format!("outer iteration {it}, association step")))?;
            p1_outer = p1.outer_passes;
            p1_solves = p1.sdp_solves;
            next = p1.alloc;
        }
        if steps.resources {
            let p2 =
                solve_part2(sc, &next, tols).map_err(|e| e.context(format!("outer iteration {it}, resource step")))?;
            p2_iters = p2.iterations;
            next = p2.alloc;
        }
        let y_new = dinkelbach_update(sc, &next)?;
        if y_new < y {
            stopped_on_decrease = true;
            break;
        }
        let (mut rec, m) = record(sc, &next, it, y, started)?;
        rec.part1_outer = p1_outer;
        rec.part1_sdp_solves = p1_solves;
        rec.part2_iters = p2_iters;
        trace.records.push(rec);
        cur = next;
        metrics = m;
        let done = (y_new / y - 1.0).abs() <= tols.eps;
        y = y_new;
        if done {
            converged = true;
            break;
        }
    }
    Ok(RunOutcome { alloc: cur, metrics, trace, converged, stopped_on_decrease, iterations })
}

/// Wraps a fixed allocation as a run with a single trace record.
pub fn fixed_outcome(sc: &Scenario, a: &Allocation) -> Result<RunOutcome> {
    let mut alloc = a.clone();
    alloc.refresh_t_aux(sc)?;
    let (mut rec, metrics) = record(sc, &alloc, 0, 0.0, Instant::now())?;
    rec.y = rec.tcr;
    Ok(RunOutcome {
        alloc,
        metrics,
        trace: RunTrace { records: vec![rec] },
        converged: true,
        stopped_on_decrease: false,
        iterations: 0,
    })
}

/// Full joint optimization from the round-robin starting point.
pub fn run_dashf(sc: &Scenario, tols: &Tolerances) -> Result<RunOutcome> {
    let init = initial_point(sc)?;
    run_alternating(sc, &init, tols, Steps { association: true, resources: true })
}
