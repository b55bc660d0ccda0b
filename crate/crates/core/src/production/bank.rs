use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{Buffer, CultivationConfig, DistillationConfig, MechanismConfig, RzSynthConfig};
use crate::circuit_ir::angle::AngleKey;
use crate::rng::{bernoulli, unit_stream, Stream};

/// Running totals of one bank.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankStats {
    pub produced: u64,
    pub consumed: u64,
    /// Failed distillation rounds, cultivation attempts or Rz attempts.
    pub aborts: u64,
    /// Completed distillation rounds, cultivation attempts or Rz attempts.
    pub attempts: u64,
    /// Most Rz units busy at once.
    pub peak_busy_units: u32,
}

/// All production units of one trial and the states they have made.
#[derive(Debug, Clone)]
pub struct ProductionBank {
    inner: Inner,
    units: u32,
    handoff: u64,
    last_cycle: u64,
    stats: BankStats,
}

#[derive(Debug, Clone)]
enum Inner {
    Distillation(Distill),
    Cultivation(Cultivate),
    Rz(RzPool),
    /// Any number of states from `ready_at` on.
    Unlimited {
        ready_at: u64,
    },
}

impl ProductionBank {
    /// Cold-start bank of `units` producers. Each unit draws from its own
    /// stream keyed by `(trial_seed, unit index)`.
    pub fn new(cfg: &MechanismConfig, units: u32, trial_seed: u64, handoff: u32) -> Self {
        let inner = match cfg {
            MechanismConfig::Distillation(c) => {
                Inner::Distillation(Distill::new(c, units, trial_seed))
            }
            MechanismConfig::Cultivation(c) => {
                Inner::Cultivation(Cultivate::new(c, units, trial_seed))
            }
            MechanismConfig::Rz(c) => Inner::Rz(RzPool::new(c, Some(units), trial_seed)),
        };
        ProductionBank {
            inner,
            units,
            handoff: u64::from(handoff),
            last_cycle: 0,
            stats: BankStats::default(),
        }
    }

    /// Supply without a unit limit and without failures: distillation and
    /// cultivation deliver any number of states once the minimum latency has
    /// passed; Rz synthesis gets one unit per demand.
    pub fn unlimited(cfg: &MechanismConfig, handoff: u32) -> Self {
        let det = cfg.deterministic();
        let inner = match &det {
            MechanismConfig::Rz(c) => Inner::Rz(RzPool::new(c, None, 0)),
            other => Inner::Unlimited {
                ready_at: other.min_latency() + u64::from(handoff),
            },
        };
        ProductionBank {
            inner,
            units: u32::MAX,
            handoff: u64::from(handoff),
            last_cycle: 0,
            stats: BankStats::default(),
        }
    }

    pub fn units(&self) -> u32 {
        self.units
    }

    pub fn stats(&self) -> BankStats {
        self.stats
    }

    /// Start offsets of distillation factories.
    pub fn offsets(&self) -> Option<&[u64]> {
        match &self.inner {
            Inner::Distillation(d) => Some(&d.offsets),
            _ => None,
        }
    }

    pub fn buffer(&self) -> Option<&Buffer> {
        match &self.inner {
            Inner::Distillation(d) => Some(&d.buffer),
            Inner::Cultivation(c) => Some(&c.buffer),
            _ => None,
        }
    }

    /// Whether any state can still appear in the future.
    pub fn can_produce(&self) -> bool {
        match &self.inner {
            Inner::Distillation(d) => self.units > 0 && d.abort < 1.0,
            Inner::Cultivation(c) => self.units > 0 && c.s1 * c.s2 > 0.0,
            Inner::Rz(r) => r.budget != Some(0) && r.q < 1.0,
            Inner::Unlimited { .. } => true,
        }
    }

    /// Advances every unit through `cycle`. Cycles start at 1 and must be
    /// stepped in increasing order. Returns the states produced this cycle.
    pub fn step(&mut self, cycle: u64) -> Result<u64, String> {
        if cycle <= self.last_cycle {
            return Err(format!(
                "bank stepped at cycle {cycle} after cycle {}",
                self.last_cycle
            ));
        }
        self.last_cycle = cycle;
        let available_at = cycle + self.handoff;
        let before = self.stats.produced;
        match &mut self.inner {
            Inner::Distillation(d) => d.step(cycle, available_at, &mut self.stats),
            Inner::Cultivation(c) => c.step(cycle, available_at, &mut self.stats),
            Inner::Rz(r) => r.step(cycle, available_at, &mut self.stats),
            Inner::Unlimited { .. } => {}
        }
        Ok(self.stats.produced - before)
    }

    /// Grants up to `n` states consumable at `cycle`. `angle` selects the
    /// rotation for Rz synthesis and is ignored otherwise.
    pub fn request(&mut self, cycle: u64, n: u64, angle: Option<f64>) -> u64 {
        let granted = match &mut self.inner {
            Inner::Distillation(d) => d.buffer.take(cycle, n),
            Inner::Cultivation(c) => c.buffer.take(cycle, n),
            Inner::Rz(r) => {
                let key = AngleKey::of(angle.expect("Rz synthesis requests carry an angle"));
                r.take(cycle, n, key, &mut self.stats)
            }
            Inner::Unlimited { ready_at } => {
                if cycle >= *ready_at {
                    self.stats.produced += n;
                    n
                } else {
                    0
                }
            }
        };
        self.stats.consumed += granted;
        granted
    }

    /// Registers one future demand for `angle`. Returns whether a unit was
    /// assigned to it; otherwise the demand waits in the shared queue. A no-op
    /// returning `true` for other mechanisms.
    pub fn register_rz(&mut self, angle: f64, cycle: u64) -> bool {
        match &mut self.inner {
            Inner::Rz(r) => r.register(AngleKey::of(angle), cycle, &mut self.stats),
            _ => true,
        }
    }

    /// Conservation checks.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.stats.consumed > self.stats.produced {
            return Err(format!(
                "consumed {} states but produced only {}",
                self.stats.consumed, self.stats.produced
            ));
        }
        match &self.inner {
            Inner::Distillation(d) => {
                d.buffer.check()?;
                expect_eq(
                    "buffer production",
                    d.buffer.produced_total(),
                    self.stats.produced,
                )
            }
            Inner::Cultivation(c) => {
                c.buffer.check()?;
                expect_eq(
                    "buffer production",
                    c.buffer.produced_total(),
                    self.stats.produced,
                )
            }
            Inner::Rz(r) => {
                let held = r
                    .units
                    .iter()
                    .filter(|u| matches!(u.state, RzState::Holding { .. }))
                    .count();
                expect_eq(
                    "held Rz states",
                    held as u64,
                    self.stats.produced - self.stats.consumed,
                )?;
                let busy = r.units.len() - r.idle.len();
                if r.budget.is_some_and(|b| r.units.len() > b as usize) {
                    return Err("Rz units exceed the budget".into());
                }
                if !r.queue.is_empty() && (busy < r.units.len() || r.can_grow()) {
                    return Err("Rz demand queued while a unit is free".into());
                }
                Ok(())
            }
            Inner::Unlimited { .. } => Ok(()),
        }
    }
}

fn expect_eq(what: &str, got: u64, want: u64) -> Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: {got} != {want}"))
    }
}

#[derive(Debug, Clone)]
struct Distill {
    t_prod: u64,
    abort: f64,
    offsets: Vec<u64>,
    /// Units grouped by `offset % t_prod`.
    phases: Vec<Vec<u32>>,
    rngs: Vec<Stream>,
    buffer: Buffer,
}

impl Distill {
    fn new(c: &DistillationConfig, units: u32, seed: u64) -> Self {
        let t = u64::from(c.t_prod);
        let offsets: Vec<u64> = (0..u64::from(units))
            .map(|i| {
                if c.stagger {
                    i * t / u64::from(units)
                } else {
                    0
                }
            })
            .collect();
        let mut phases = vec![Vec::new(); t as usize];
        for (i, &o) in offsets.iter().enumerate() {
            phases[o as usize].push(i as u32);
        }
        Distill {
            t_prod: t,
            abort: c.abort_rate(),
            offsets,
            phases,
            rngs: (0..units).map(|u| unit_stream(seed, u)).collect(),
            buffer: Buffer::new(None),
        }
    }

    /// Unit `i` finishes rounds at cycles `offset + k·t_prod`, `k >= 1`.
    fn step(&mut self, cycle: u64, available_at: u64, stats: &mut BankStats) {
        let phase = (cycle % self.t_prod) as usize;
        for &u in &self.phases[phase] {
            if cycle <= self.offsets[u as usize] {
                continue;
            }
            stats.attempts += 1;
            if bernoulli(&mut self.rngs[u as usize], self.abort) {
                stats.aborts += 1;
            } else {
                self.buffer.deposit(available_at);
                stats.produced += 1;
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Cultivate {
    t_inject: u64,
    t_escape: u64,
    r1: u32,
    r2: u32,
    q1: f64,
    q2: f64,
    s1: f64,
    s2: f64,
    early_abort: bool,
    rngs: Vec<Stream>,
    /// Outcome of each unit's running attempt.
    success: Vec<bool>,
    /// `(last cycle of attempt, unit)`.
    events: BinaryHeap<Reverse<(u64, u32)>>,
    /// Units holding an accepted state, in arrival order.
    holding: VecDeque<u32>,
    buffer: Buffer,
}

impl Cultivate {
    fn new(c: &CultivationConfig, units: u32, seed: u64) -> Self {
        let mut this = Cultivate {
            t_inject: u64::from(c.t_inject),
            t_escape: u64::from(c.t_escape()),
            r1: c.r1,
            r2: c.r2,
            q1: c.q1(),
            q2: c.q2(),
            s1: c.s1(),
            s2: c.s2(),
            early_abort: c.early_abort,
            rngs: (0..units).map(|u| unit_stream(seed, u)).collect(),
            success: vec![false; units as usize],
            events: BinaryHeap::with_capacity(units as usize),
            holding: VecDeque::new(),
            buffer: Buffer::new(Some(u64::from(c.buffer_capacity(units)))),
        };
        for u in 0..units {
            this.start_attempt(u, 1);
        }
        this
    }

    /// Samples the attempt starting at `start` and schedules its end.
    fn start_attempt(&mut self, u: u32, start: u64) {
        let rng = &mut self.rngs[u as usize];
        let stage1 = self.t_inject + u64::from(self.r1);
        let stage2 = self.t_escape + u64::from(self.r2);
        let (len, ok) = if self.early_abort {
            match first_failure(rng, self.q1, self.r1) {
                Some(k) => (self.t_inject + k, false),
                None => match first_failure(rng, self.q2, self.r2) {
                    Some(k) => (stage1 + self.t_escape + k, false),
                    None => (stage1 + stage2, true),
                },
            }
        } else if !bernoulli(rng, self.s1) {
            (stage1, false)
        } else {
            (stage1 + stage2, bernoulli(rng, self.s2))
        };
        self.success[u as usize] = ok;
        self.events.push(Reverse((start + len - 1, u)));
    }

    fn step(&mut self, cycle: u64, available_at: u64, stats: &mut BankStats) {
        while self.buffer.free_slots() > 0 {
            let Some(u) = self.holding.pop_front() else {
                break;
            };
            self.buffer.deposit(available_at);
            stats.produced += 1;
            self.start_attempt(u, cycle + 1);
        }
        while let Some(&Reverse((end, u))) = self.events.peek() {
            if end > cycle {
                break;
            }
            debug_assert_eq!(end, cycle);
            self.events.pop();
            stats.attempts += 1;
            if !self.success[u as usize] {
                stats.aborts += 1;
                self.start_attempt(u, cycle + 1);
            } else if self.buffer.deposit(available_at) {
                stats.produced += 1;
                self.start_attempt(u, cycle + 1);
            } else {
                self.holding.push_back(u);
            }
        }
    }
}

/// 1-based index of the first failing round among `r`, each failing with
/// probability `q`.
fn first_failure(rng: &mut Stream, q: f64, r: u32) -> Option<u64> {
    (1..=u64::from(r)).find(|_| bernoulli(rng, q))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RzState {
    Idle,
    Preparing { key: AngleKey },
    Holding { key: AngleKey },
}

#[derive(Debug, Clone)]
struct RzUnit {
    state: RzState,
    rng: Stream,
}

#[derive(Debug, Clone)]
struct RzPool {
    budget: Option<u32>,
    t_attempt: u64,
    q: f64,
    seed: u64,
    units: Vec<RzUnit>,
    idle: BTreeSet<u32>,
    /// `(last cycle of attempt, unit)` for preparing units.
    events: BinaryHeap<Reverse<(u64, u32)>>,
    /// Holding units per angle as `(consumable from, unit)`, oldest first.
    held: BTreeMap<AngleKey, VecDeque<(u64, u32)>>,
    queue: VecDeque<AngleKey>,
}

impl RzPool {
    fn new(c: &RzSynthConfig, budget: Option<u32>, seed: u64) -> Self {
        RzPool {
            budget,
            t_attempt: u64::from(c.t_attempt()),
            q: c.q_round(),
            seed,
            units: Vec::new(),
            idle: BTreeSet::new(),
            events: BinaryHeap::new(),
            held: BTreeMap::new(),
            queue: VecDeque::new(),
        }
    }

    fn can_grow(&self) -> bool {
        self.budget
            .is_none_or(|b| (self.units.len() as u64) < u64::from(b))
    }

    fn busy(&self) -> u32 {
        (self.units.len() - self.idle.len()) as u32
    }

    /// Unit `u` prepares `key` from the cycle after `cycle`.
    fn assign(&mut self, u: u32, key: AngleKey, cycle: u64, stats: &mut BankStats) {
        self.units[u as usize].state = RzState::Preparing { key };
        self.events.push(Reverse((cycle + self.t_attempt, u)));
        stats.peak_busy_units = stats.peak_busy_units.max(self.busy());
    }

    fn register(&mut self, key: AngleKey, cycle: u64, stats: &mut BankStats) -> bool {
        let unit = if let Some(u) = self.idle.pop_first() {
            u
        } else if self.can_grow() {
            let u = self.units.len() as u32;
            self.units.push(RzUnit {
                state: RzState::Idle,
                rng: unit_stream(self.seed, u),
            });
            u
        } else {
            self.queue.push_back(key);
            return false;
        };
        self.assign(unit, key, cycle, stats);
        true
    }

    fn step(&mut self, cycle: u64, available_at: u64, stats: &mut BankStats) {
        while let Some(&Reverse((end, u))) = self.events.peek() {
            if end > cycle {
                break;
            }
            debug_assert_eq!(end, cycle);
            self.events.pop();
            stats.attempts += 1;
            let unit = &mut self.units[u as usize];
            let RzState::Preparing { key } = unit.state else {
                unreachable!("only preparing units have pending attempts")
            };
            if bernoulli(&mut unit.rng, self.q) {
                stats.aborts += 1;
                self.events.push(Reverse((cycle + self.t_attempt, u)));
            } else {
                unit.state = RzState::Holding { key };
                self.held
                    .entry(key)
                    .or_default()
                    .push_back((available_at, u));
                stats.produced += 1;
            }
        }
    }

    fn take(&mut self, cycle: u64, n: u64, key: AngleKey, stats: &mut BankStats) -> u64 {
        let mut granted = 0;
        while granted < n {
            let Some(list) = self.held.get_mut(&key) else {
                break;
            };
            match list.front() {
                Some(&(at, u)) if at <= cycle => {
                    list.pop_front();
                    if list.is_empty() {
                        self.held.remove(&key);
                    }
                    granted += 1;
                    match self.queue.pop_front() {
                        Some(next) => self.assign(u, next, cycle, stats),
                        None => {
                            self.units[u as usize].state = RzState::Idle;
                            self.idle.insert(u);
                        }
                    }
                }
                _ => break,
            }
        }
        granted
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn distill(units: u32, abort: f64) -> ProductionBank {
        let cfg = MechanismConfig::Distillation(DistillationConfig {
            abort_rate: Some(abort),
            ..Default::default()
        });
        ProductionBank::new(&cfg, units, 1, 1)
    }

    fn production_cycles(bank: &mut ProductionBank, until: u64) -> Vec<u64> {
        (1..=until).filter(|&c| bank.step(c).unwrap() > 0).collect()
    }

    #[test]
    fn staggered_offsets() {
        assert_eq!(distill(2, 0.0).offsets().unwrap(), &[0, 9]);
        assert_eq!(distill(3, 0.0).offsets().unwrap(), &[0, 6, 12]);
    }

    #[test]
    fn single_factory_period() {
        let mut b = distill(1, 0.0);
        assert_eq!(production_cycles(&mut b, 60), vec![18, 36, 54]);
        let mut dead = distill(1, 1.0);
        assert!(production_cycles(&mut dead, 200).is_empty());
    }

    #[test]
    fn zero_units_never_produce() {
        let mut b = distill(0, 0.0);
        assert!(!b.can_produce());
        assert!(production_cycles(&mut b, 100).is_empty());
    }

    #[test]
    fn out_of_order_step_is_an_error() {
        let mut b = distill(1, 0.0);
        b.step(3).unwrap();
        assert!(b.step(3).is_err());
        assert!(b.step(2).is_err());
    }

    #[test]
    fn handoff_of_one_cycle() {
        let mut b = distill(1, 0.0);
        for c in 1..=18 {
            b.step(c).unwrap();
            assert_eq!(b.request(c, 1, None), 0);
        }
        b.step(19).unwrap();
        assert_eq!(b.request(19, 2, None), 1);
        b.check_invariants().unwrap();
    }

    #[test]
    fn deterministic_cultivation_first_state_at_16() {
        let cfg = MechanismConfig::Cultivation(CultivationConfig::default()).deterministic();
        let mut b = ProductionBank::new(&cfg, 1, 9, 1);
        assert_eq!(production_cycles(&mut b, 16), vec![16]);
        assert_eq!(b.buffer().unwrap().capacity(), Some(1));
    }

    #[test]
    fn full_cultivation_buffer_holds_the_unit() {
        let cfg = MechanismConfig::Cultivation(CultivationConfig {
            buffer_capacity: Some(1),
            ..CultivationConfig::default()
        })
        .deterministic();
        let mut b = ProductionBank::new(&cfg, 1, 0, 1);
        assert_eq!(production_cycles(&mut b, 40), vec![16]);
        assert_eq!(b.request(41, 1, None), 1);
        assert_eq!(b.step(41).unwrap(), 1, "held state enters the freed slot");
        assert_eq!(b.step(42).unwrap(), 0);
        assert_eq!(b.request(42, 1, None), 1);
        let mut next = None;
        for c in 43..=80 {
            if b.step(c).unwrap() > 0 {
                next = Some(c);
                break;
            }
        }
        assert_eq!(next, Some(57));
        b.check_invariants().unwrap();
    }

    #[test]
    fn rz_budget_and_reassignment() {
        let cfg = MechanismConfig::Rz(RzSynthConfig::default()).deterministic();
        let (a, b2) = (PI / 8.0, PI / 4.0);

        let mut two = ProductionBank::new(&cfg, 2, 0, 1);
        assert!(two.register_rz(a, 1));
        assert!(two.register_rz(b2, 1));

        let mut one = ProductionBank::new(&cfg, 1, 0, 1);
        assert!(one.register_rz(a, 1));
        assert!(!one.register_rz(b2, 1));
        for c in 2..=4 {
            one.step(c).unwrap();
        }
        assert_eq!(one.request(4, 1, Some(a)), 0);
        one.step(5).unwrap();
        assert_eq!(one.request(5, 1, Some(b2)), 0, "angle mismatch");
        assert_eq!(one.request(5, 1, Some(a)), 1);
        // The freed unit starts on the queued angle at cycle 6.
        for c in 6..=7 {
            assert_eq!(one.step(c).unwrap(), 0);
        }
        assert_eq!(one.step(8).unwrap(), 1);
        one.step(9).unwrap();
        assert_eq!(one.request(9, 1, Some(b2)), 1);
        assert_eq!(one.stats().peak_busy_units, 1);
        one.check_invariants().unwrap();
    }

    #[test]
    fn unlimited_supply_after_latency() {
        let cfg = MechanismConfig::Distillation(Default::default());
        let mut b = ProductionBank::unlimited(&cfg, 1);
        assert_eq!(b.request(18, 5, None), 0);
        assert_eq!(b.request(19, 50, None), 50);
    }
}
