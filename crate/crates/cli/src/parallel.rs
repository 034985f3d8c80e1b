//! Trial-parallel execution of capacity sweeps.
//!
//! Each trial is a pure function of the sweep spec and the trial index, so
//! trials can fan out over any number of worker threads.  The reduction into
//! grid points always consumes trials in ascending index order and is shared
//! with the serial path, which makes the output bytes independent of the
//! thread count.

use smmimo_core::capacity::{assemble_sweep, sweep_trial, CapacityPoint, SweepSpec};

/// Run the sweep on `threads` workers (1 = serial).
pub fn sweep_with_threads(spec: &SweepSpec, threads: usize) -> Vec<CapacityPoint> {
    let trials = spec.trials as usize;
    let threads = threads.max(1).min(trials.max(1));
    if threads == 1 {
        let per_trial: Vec<Vec<f64>> = (0..spec.trials).map(|t| sweep_trial(spec, t)).collect();
        return assemble_sweep(spec, &per_trial);
    }

    let mut per_trial: Vec<Option<Vec<f64>>> = vec![None; trials];
    std::thread::scope(|scope| {
        // Contiguous trial ranges, one per worker, carved out of the result
        // buffer so no locking is needed.
        let chunk = trials.div_ceil(threads);
        let mut rest: &mut [Option<Vec<f64>>] = &mut per_trial;
        let mut base = 0usize;
        while !rest.is_empty() {
            let take = chunk.min(rest.len());
            let (mine, tail) = rest.split_at_mut(take);
            rest = tail;
            let start = base;
            scope.spawn(move || {
                for (i, slot) in mine.iter_mut().enumerate() {
                    *slot = Some(sweep_trial(spec, (start + i) as u32));
                }
            });
            base += take;
        }
    });
    let per_trial: Vec<Vec<f64>> = per_trial
        .into_iter()
        .map(|t| t.expect("every trial range was assigned to a worker"))
        .collect();
    assemble_sweep(spec, &per_trial)
}
