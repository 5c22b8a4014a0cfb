//! The classical four-state jump process with rates `0 → k: x_k`, `k → 0: 1`.
//!
//! A trajectory sitting in state `k` carries the label `σ_k ρ0 σ_k`; the
//! ensemble average of labels is the mixture-map state.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use super::direction::pick_axis;
use super::random_unitary::state_from_mean_bloch;
use super::rng::parallel_moments;
use crate::integrators::{Method, TimeGrid, TrajectoryPoint, TrajectoryRecord};
use crate::qubit::{DensityMatrix, MixtureWeights, PauliChannelProbs};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpEvent {
    pub time: f64,
    pub from: usize,
    pub to: usize,
}

/// Exact simulation of the chain started in state 0, up to `t_end`.
pub fn gillespie<R: Rng + ?Sized>(
    x: &MixtureWeights,
    t_end: f64,
    rng: &mut R,
) -> Result<Vec<JumpEvent>> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_end must be positive, got {t_end}")));
    }
    let mut events = Vec::new();
    let mut t = 0.0;
    let mut state = 0;
    loop {
        // every state has total exit rate 1
        let hold: f64 = Exp1.sample(rng);
        t += hold;
        if t > t_end {
            return Ok(events);
        }
        let to = if state == 0 { pick_axis(x, rng) + 1 } else { 0 };
        events.push(JumpEvent { time: t, from: state, to });
        state = to;
    }
}

/// State occupied at time `t`.
pub fn state_at(events: &[JumpEvent], t: f64) -> usize {
    let n = events.partition_point(|e| e.time <= t);
    if n == 0 {
        0
    } else {
        events[n - 1].to
    }
}

/// Time spent in each state during `[0, t_end]`.
pub fn occupation_times(events: &[JumpEvent], t_end: f64) -> [f64; 4] {
    let mut occ = [0.0; 4];
    let mut t = 0.0;
    let mut state = 0;
    for e in events.iter().take_while(|e| e.time <= t_end) {
        occ[state] += e.time - t;
        t = e.time;
        state = e.to;
    }
    occ[state] += t_end - t;
    occ
}

/// Bloch vector of `σ_k ρ σ_k`: components other than `k` flip sign.
pub fn pauli_conjugated_bloch(b: [f64; 3], k: usize) -> [f64; 3] {
    if k == 0 {
        return b;
    }
    std::array::from_fn(|j| if j + 1 == k { b[j] } else { -b[j] })
}

/// Ensemble of `n_runs` jump trajectories observed on `grid`.
///
/// Each point carries the averaged state, the empirical occupation
/// probabilities and Bloch standard errors.
pub fn jump_ensemble(
    x: &MixtureWeights,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    n_runs: usize,
    seed: u64,
) -> Result<TrajectoryRecord> {
    if n_runs == 0 {
        return Err(Error::InvalidArgument("need at least one run".into()));
    }
    let b0 = rho0.to_bloch()?.components();
    let times = grid.times();
    let labels: [[f64; 3]; 4] = std::array::from_fn(|k| pauli_conjugated_bloch(b0, k));
    let width = 7;
    let moments = parallel_moments(seed, n_runs, width * times.len(), |rng, _, out| {
        let events = gillespie(x, grid.t1(), rng).expect("validated end time");
        for (m, &t) in times.iter().enumerate() {
            let s = state_at(&events, t);
            let o = &mut out[m * width..(m + 1) * width];
            o[s] = 1.0;
            o[4..].copy_from_slice(&labels[s]);
        }
    });
    let mut rec = TrajectoryRecord::new(Method::JumpProcess).with_sampling(seed, n_runs);
    for (m, &t) in times.iter().enumerate() {
        let col = |k: usize| m * width + k;
        let p: [f64; 4] = std::array::from_fn(|k| moments.mean(col(k)));
        let b: [f64; 3] = std::array::from_fn(|k| moments.mean(col(4 + k)));
        rec.push(TrajectoryPoint {
            t,
            state: state_from_mean_bloch(b)?,
            probs: PauliChannelProbs::new(p).ok(),
            bloch_stderr: Some(std::array::from_fn(|k| moments.stderr(col(4 + k)))),
        })?;
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic;
    use crate::qubit::BlochVector;
    use crate::stochastic::rng::stream_rng;

    #[test]
    fn vertex_alternates_between_zero_and_one() {
        let mut rng = stream_rng(1, 0);
        let ev = gillespie(&MixtureWeights::vertex(0), 50.0, &mut rng).unwrap();
        assert!(ev.len() > 10);
        for (i, e) in ev.iter().enumerate() {
            let (f, t) = if i % 2 == 0 { (0, 1) } else { (1, 0) };
            assert_eq!((e.from, e.to), (f, t));
        }
        assert!(ev.windows(2).all(|w| w[0].time < w[1].time));
    }

    #[test]
    fn transitions_only_through_zero() {
        let mut rng = stream_rng(2, 0);
        let x = MixtureWeights::new([0.2, 0.3, 0.5]).unwrap();
        let ev = gillespie(&x, 200.0, &mut rng).unwrap();
        for e in &ev {
            assert!(e.from == 0 || e.to == 0);
            assert_ne!(e.from, e.to);
        }
        let ev = gillespie(&MixtureWeights::enm(), 200.0, &mut rng).unwrap();
        assert!(ev.iter().all(|e| e.to != 3));
        assert!(gillespie(&x, 0.0, &mut rng).is_err());
    }

    #[test]
    fn long_run_fraction_in_ground_state() {
        let x = MixtureWeights::new([0.2, 0.3, 0.5]).unwrap();
        let t_end = 200.0;
        let m = parallel_moments(3, 2000, 1, |rng, _, out| {
            let ev = gillespie(&x, t_end, rng).unwrap();
            out[0] = occupation_times(&ev, t_end)[0] / t_end;
        });
        assert!((m.mean(0) - 0.5).abs() < 3.0 * m.stderr(0), "{}", m.mean(0));
    }

    #[test]
    fn empirical_generator_matches_rates() {
        let x = MixtureWeights::new([0.6, 0.3, 0.1]).unwrap();
        let t_end = 5000.0;
        let mut rng = stream_rng(4, 0);
        let ev = gillespie(&x, t_end, &mut rng).unwrap();
        let occ = occupation_times(&ev, t_end);
        for k in 1..=3 {
            let count = ev.iter().filter(|e| e.from == 0 && e.to == k).count() as f64;
            let rate = count / occ[0];
            // Poisson counting error
            let se = count.sqrt() / occ[0];
            assert!((rate - x.get(k - 1)).abs() < 3.0 * se, "0->{k}: {rate}");
            let back = ev.iter().filter(|e| e.from == k).count() as f64;
            let rate = back / occ[k];
            assert!((rate - 1.0).abs() < 3.0 * back.sqrt() / occ[k], "{k}->0: {rate}");
        }
    }

    #[test]
    fn occupation_matches_channel_probabilities() {
        let x = MixtureWeights::new([0.6, 0.3, 0.1]).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let rho0 = DensityMatrix::from_bloch(&BlochVector::new([0.6, 0.0, -0.7]).unwrap());
        let rec = jump_ensemble(&x, &rho0, &grid, 100_000, 5).unwrap();
        for pt in rec.points() {
            let p = analytic::channel_probs(&x, pt.t).unwrap().probs();
            let q = pt.probs.unwrap().probs();
            let n = 100_000.0;
            for k in 0..4 {
                let se = (q[k] * (1.0 - q[k]) / n).sqrt();
                assert!((p[k] - q[k]).abs() <= 3.0 * se + 1e-15, "t={} k={k}", pt.t);
            }
        }
    }

    #[test]
    fn maximally_mixed_stays() {
        let grid = TimeGrid::new(0.0, 2.0, 4).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        let rec = jump_ensemble(&MixtureWeights::symmetric(), &rho, &grid, 500, 1).unwrap();
        for p in rec.points() {
            assert_eq!(p.state.to_bloch().unwrap().components(), [0.0; 3]);
        }
    }

    #[test]
    fn symmetric_long_time_limit() {
        let x = MixtureWeights::symmetric();
        let b0 = [0.3, 0.4, 0.5];
        let rho0 = DensityMatrix::from_bloch(&BlochVector::new(b0).unwrap());
        let grid = TimeGrid::new(0.0, 12.0, 1).unwrap();
        let rec = jump_ensemble(&x, &rho0, &grid, 50_000, 6).unwrap();
        let last = rec.last().unwrap();
        // ½ρ0 + ⅙Σσ_kρ0σ_k has Bloch vector b0/3
        let b = last.state.to_bloch().unwrap().components();
        let se = last.bloch_stderr.unwrap();
        for k in 0..3 {
            assert!((b[k] - b0[k] / 3.0).abs() < 3.0 * se[k]);
        }
    }

    #[test]
    fn reproducible_events() {
        let x = MixtureWeights::symmetric();
        let a = gillespie(&x, 30.0, &mut stream_rng(8, 3)).unwrap();
        let b = gillespie(&x, 30.0, &mut stream_rng(8, 3)).unwrap();
        assert_eq!(a, b);
    }
}
