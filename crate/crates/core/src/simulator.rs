//! Discrete-event simulation of the queue, used as an independent oracle.
//!
//! Semantics: the service process runs only while the server is busy. Its
//! phase is frozen during a vacation and while the server is dormant (back
//! from vacation to an empty queue). A dormant server starts serving at the
//! next arrival in the frozen phase. Simultaneous events are ordered
//! departure, then vacation end, then arrival.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::QueueModel;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    /// Total arrivals to simulate, warmup included.
    pub arrivals: u64,
    /// Arrivals discarded before statistics are collected.
    pub warmup: u64,
    pub seed: u64,
    pub batch_count: usize,
    /// Levels kept in the censuses; higher levels share one overflow bin.
    pub census_levels: usize,
    /// Diagnostic only: a dormant server restarts service in a phase drawn
    /// from the stationary vector instead of the frozen one.
    pub restart_phase: bool,
}

impl SimConfig {
    pub fn new(arrivals: u64, seed: u64) -> Self {
        SimConfig {
            arrivals,
            warmup: arrivals / 10,
            seed,
            batch_count: 32,
            census_levels: 32,
            restart_phase: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.batch_count < 10 {
            return Err(Error::InvalidConfig(format!("batch_count {} is below 10", self.batch_count)));
        }
        if self.arrivals <= self.warmup {
            return Err(Error::InvalidConfig("arrivals must exceed warmup".into()));
        }
        if self.arrivals - self.warmup < self.batch_count as u64 {
            return Err(Error::InvalidConfig("fewer measured arrivals than batches".into()));
        }
        if self.census_levels == 0 {
            return Err(Error::InvalidConfig("census_levels must be positive".into()));
        }
        Ok(())
    }
}

/// Point estimate with a 95% batch-means half-width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
}

impl Estimate {
    /// Student-t interval from independent, identically distributed samples
    /// (at least two).
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        Estimate { mean, half_width: t_quantile_975(n - 1.0) * libm::sqrt(var / n) }
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.mean).abs() <= self.half_width
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }
}

/// Normalized frequencies by level (last bin = overflow), server block and phase.
#[derive(Clone, Debug, PartialEq)]
pub struct Census {
    pub levels: usize,
    pub blocks: usize,
    pub phases: usize,
    data: Vec<f64>,
}

impl Census {
    fn new(levels: usize, blocks: usize, phases: usize) -> Self {
        Census { levels, blocks, phases, data: vec![0.0; (levels + 1) * blocks * phases] }
    }

    fn add(&mut self, level: u64, block: usize, phase: usize, w: f64) {
        let l = (level as usize).min(self.levels);
        self.data[(l * self.blocks + block) * self.phases + phase] += w;
    }

    fn normalize(&mut self) {
        let s: f64 = self.data.iter().sum();
        if s > 0.0 {
            for x in &mut self.data {
                *x /= s;
            }
        }
    }

    /// Frequency of `(level, block, phase)`; `level == levels` is the overflow bin.
    pub fn get(&self, level: usize, block: usize, phase: usize) -> f64 {
        self.data[(level.min(self.levels) * self.blocks + block) * self.phases + phase]
    }

    pub fn block_mass(&self, block: usize) -> f64 {
        (0..=self.levels)
            .flat_map(|l| (0..self.phases).map(move |j| (l, j)))
            .map(|(l, j)| self.get(l, block, j))
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    /// Blocks: 0 = vacation, 1 = busy or dormant.
    pub pre_arrival: Census,
    /// Time-weighted, same blocks.
    pub arbitrary: Census,
    /// Level left behind and phase after the completion (single block).
    pub post_departure: Census,
    pub l_s: Estimate,
    pub w_s: Estimate,
    pub rho_prime: Estimate,
    pub e_b: Estimate,
    pub e_i: Estimate,
    /// Fraction of arrivals that find the server on vacation.
    pub vacation_mass: Estimate,
    pub lambda_hat: Estimate,
    /// Completions per unit of busy time.
    pub mu_star_hat: Estimate,
    pub arrivals: u64,
    pub departures: u64,
    pub in_system_at_end: u64,
    pub simulated_time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Server {
    Busy,
    Vacation,
    Dormant,
}

#[derive(Clone, Copy, Debug, Default)]
struct Batch {
    time: f64,
    area: f64,
    busy_time: f64,
    arrivals: u64,
    vacation_arrivals: u64,
    sojourn_sum: f64,
    sojourn_count: u64,
    busy_sum: f64,
    busy_count: u64,
    idle_sum: f64,
    idle_count: u64,
    completions: u64,
}

/// Per-phase holding rates and cumulative jump tables `(cum_prob, target, exits)`.
struct Jumps {
    rates: Vec<f64>,
    table: Vec<Vec<(f64, usize, bool)>>,
}

impl Jumps {
    fn build(rates: Vec<f64>, weights: impl Fn(usize) -> Vec<(f64, usize, bool)>) -> Self {
        let table = (0..rates.len())
            .map(|i| {
                let w = weights(i);
                let cum = cumulative(&w.iter().map(|x| x.0).collect::<Vec<_>>());
                w.iter().zip(cum).map(|(&(_, j, d), c)| (c, j, d)).collect()
            })
            .collect();
        Jumps { rates, table }
    }

    fn pick(&self, phase: usize, u: f64) -> (usize, bool) {
        let row = &self.table[phase];
        for &(c, j, d) in row {
            if u < c {
                return (j, d);
            }
        }
        let &(_, j, d) = row.last().expect("phase has a jump");
        (j, d)
    }
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w / total;
            acc
        })
        .collect()
}

fn draw_index(cum: &[f64], u: f64) -> usize {
    cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
}

fn exp_sample(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -libm::log(1.0 - u) / rate
}

/// Student t quantile `t_{0.975, ν}` by Cornish–Fisher expansion.
pub fn t_quantile_975(nu: f64) -> f64 {
    let z: f64 = 1.959_963_984_540_054;
    let z3 = z * z * z;
    let z5 = z3 * z * z;
    let z7 = z5 * z * z;
    let z9 = z7 * z * z;
    z + (z3 + z) / (4.0 * nu)
        + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * nu * nu)
        + (3.0 * z7 + 19.0 * z5 + 17.0 * z3 - 15.0 * z) / (384.0 * nu * nu * nu)
        + (79.0 * z9 + 776.0 * z7 + 1482.0 * z5 - 1920.0 * z3 - 945.0 * z) / (92160.0 * nu * nu * nu * nu)
}

pub fn simulate(model: &QueueModel, config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    if model.arrival.has_signed_exit() {
        return Err(Error::InvalidConfig(
            "the arrival law has a signed exit vector and cannot be sampled".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let m = model.m();
    let eta = model.eta();

    let t = model.arrival.generator();
    let exit = model.arrival.exit_vector();
    let alpha_cum = cumulative(model.arrival.alpha());
    let arrival_jumps = Jumps::build((0..eta).map(|i| -t[(i, i)]).collect(), |i| {
        let mut w: Vec<(f64, usize, bool)> =
            (0..eta).filter(|&j| j != i && t[(i, j)] > 0.0).map(|j| (t[(i, j)], j, false)).collect();
        if exit[i] > 0.0 {
            w.push((exit[i], 0, true));
        }
        w
    });
    let l0 = model.service.l0();
    let l1 = model.service.l1();
    let service_jumps = Jumps::build((0..m).map(|i| -l0[(i, i)]).collect(), |i| {
        let mut w: Vec<(f64, usize, bool)> =
            (0..m).filter(|&j| j != i && l0[(i, j)] > 0.0).map(|j| (l0[(i, j)], j, false)).collect();
        w.extend((0..m).filter(|&j| l1[(i, j)] > 0.0).map(|j| (l1[(i, j)], j, true)));
        w
    });
    let restart_cum = cumulative(model.service.stationary());
    let gamma = model.gamma;

    let sample_interarrival = |rng: &mut ChaCha8Rng| -> f64 {
        let mut phase = draw_index(&alpha_cum, rng.random());
        let mut total = 0.0;
        loop {
            total += exp_sample(rng, arrival_jumps.rates[phase]);
            let (j, done) = arrival_jumps.pick(phase, rng.random());
            if done {
                return total;
            }
            phase = j;
        }
    };

    let measured = config.arrivals - config.warmup;
    let batch_size = measured / config.batch_count as u64;
    let batch_of = |arrival_index: u64| -> Option<usize> {
        arrival_index.checked_sub(config.warmup).map(|k| ((k / batch_size) as usize).min(config.batch_count - 1))
    };

    let mut pre_arrival = Census::new(config.census_levels, 2, m);
    let mut arbitrary = Census::new(config.census_levels, 2, m);
    let mut post_departure = Census::new(config.census_levels, 1, m);
    let mut batches = vec![Batch::default(); config.batch_count];

    let mut now = 0.0;
    let mut n: u64 = 0;
    let mut server = Server::Dormant;
    let mut phase = 0usize;
    let mut queue: VecDeque<(f64, Option<usize>)> = VecDeque::new();
    let mut arrivals: u64 = 0;
    let mut departures: u64 = 0;
    // Batch of the most recent measured arrival; `None` during warmup.
    let mut current: Option<usize> = None;
    let mut busy_start = 0.0;
    let mut idle_start = 0.0;
    let mut idle_open = false;

    let mut next_arrival = sample_interarrival(&mut rng);
    let mut next_service = f64::INFINITY;
    let mut next_vacation_end = f64::INFINITY;

    loop {
        let (event, at) = if next_service <= next_vacation_end && next_service <= next_arrival {
            (Event::Service, next_service)
        } else if next_vacation_end <= next_arrival {
            (Event::VacationEnd, next_vacation_end)
        } else {
            (Event::Arrival, next_arrival)
        };
        let dt = at - now;
        if let Some(b) = current {
            let bt = &mut batches[b];
            bt.time += dt;
            bt.area += n as f64 * dt;
            if server == Server::Busy {
                bt.busy_time += dt;
            }
            arbitrary.add(n, usize::from(server != Server::Vacation), phase, dt);
        }
        now = at;

        match event {
            Event::Service => {
                let (j, departs) = service_jumps.pick(phase, rng.random());
                phase = j;
                if departs {
                    n -= 1;
                    departures += 1;
                    let (arrived, tag) = queue.pop_front().expect("customer in service");
                    if let Some(b) = tag {
                        batches[b].sojourn_sum += now - arrived;
                        batches[b].sojourn_count += 1;
                    }
                    if let Some(b) = current {
                        batches[b].completions += 1;
                        post_departure.add(n, 0, phase, 1.0);
                    }
                    if n == 0 {
                        if let Some(b) = current {
                            batches[b].busy_sum += now - busy_start;
                            batches[b].busy_count += 1;
                        }
                        server = Server::Vacation;
                        idle_start = now;
                        idle_open = current.is_some();
                        next_vacation_end = now + exp_sample(&mut rng, gamma);
                        next_service = f64::INFINITY;
                        continue;
                    }
                }
                next_service = now + exp_sample(&mut rng, service_jumps.rates[phase]);
            }
            Event::VacationEnd => {
                next_vacation_end = f64::INFINITY;
                if n > 0 {
                    server = Server::Busy;
                    close_idle(&mut batches, current, &mut idle_open, now - idle_start);
                    busy_start = now;
                    next_service = now + exp_sample(&mut rng, service_jumps.rates[phase]);
                } else {
                    server = Server::Dormant;
                }
            }
            Event::Arrival => {
                let tag = batch_of(arrivals);
                if let Some(b) = tag {
                    current = Some(b);
                    pre_arrival.add(n, usize::from(server != Server::Vacation), phase, 1.0);
                    batches[b].arrivals += 1;
                    if server == Server::Vacation {
                        batches[b].vacation_arrivals += 1;
                    }
                }
                arrivals += 1;
                n += 1;
                queue.push_back((now, tag));
                if server == Server::Dormant {
                    server = Server::Busy;
                    close_idle(&mut batches, current, &mut idle_open, now - idle_start);
                    busy_start = now;
                    if config.restart_phase {
                        phase = draw_index(&restart_cum, rng.random());
                    }
                    next_service = now + exp_sample(&mut rng, service_jumps.rates[phase]);
                }
                if arrivals == config.arrivals {
                    break;
                }
                next_arrival = now + sample_interarrival(&mut rng);
            }
        }
    }

    pre_arrival.normalize();
    arbitrary.normalize();
    post_departure.normalize();
    let per = |f: &dyn Fn(&Batch) -> f64| Estimate::from_samples(&batches.iter().map(f).collect::<Vec<_>>());
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    Ok(SimResult {
        pre_arrival,
        arbitrary,
        post_departure,
        l_s: per(&|b| ratio(b.area, b.time)),
        w_s: per(&|b| ratio(b.sojourn_sum, b.sojourn_count as f64)),
        rho_prime: per(&|b| ratio(b.busy_time, b.time)),
        e_b: per(&|b| ratio(b.busy_sum, b.busy_count as f64)),
        e_i: per(&|b| ratio(b.idle_sum, b.idle_count as f64)),
        vacation_mass: per(&|b| ratio(b.vacation_arrivals as f64, b.arrivals as f64)),
        lambda_hat: per(&|b| ratio(b.arrivals as f64, b.time)),
        mu_star_hat: per(&|b| ratio(b.completions as f64, b.busy_time)),
        arrivals,
        departures,
        in_system_at_end: n,
        simulated_time: now,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Event {
    Service,
    VacationEnd,
    Arrival,
}

fn close_idle(batches: &mut [Batch], current: Option<usize>, open: &mut bool, length: f64) {
    if let (Some(b), true) = (current, *open) {
        batches[b].idle_sum += length;
        batches[b].idle_count += 1;
    }
    *open = false;
}

/// Seed of replication `index` derived from a base seed (SplitMix64 step).
pub fn replication_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
