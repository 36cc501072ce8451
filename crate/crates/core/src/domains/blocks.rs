use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use crate::logic::text::parse_mode;
use crate::logic::{ActionDecl, GroundAtom, LanguageBias, State, Symbol};

use super::{object_index, object_name, Domain, DomainConfig, DomainError, InstanceSize, Phase, Step};

const FLOOR: usize = usize::MAX;
const FLOOR_NAME: &str = "floor";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlocksTask {
    /// Build a single tower.
    Stack,
    /// Put every block on the floor.
    Unstack,
    /// Put the second goal block directly on the first.
    On,
}

/// Blocks-world configuration: the support of each block and, for the On
/// task, the goal pair `(lower, upper)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Config {
    support: Vec<usize>,
    goal: Option<(usize, usize)>,
}

impl Config {
    fn n(&self) -> usize {
        self.support.len()
    }

    fn above(&self) -> Vec<Option<usize>> {
        let mut above = vec![None; self.n()];
        for (b, &s) in self.support.iter().enumerate() {
            if s != FLOOR {
                above[s] = Some(b);
            }
        }
        above
    }

    fn is_clear(&self, b: usize) -> bool {
        !self.support.contains(&b)
    }

    /// Position heights: a block on the floor has height 1.
    fn heights(&self) -> Vec<usize> {
        let mut h = vec![0; self.n()];
        for (b, slot) in h.iter_mut().enumerate() {
            let mut d = 1;
            let mut cur = self.support[b];
            while cur != FLOOR {
                d += 1;
                cur = self.support[cur];
            }
            *slot = d;
        }
        h
    }

    /// Towers bottom to top, ordered by their bottom block.
    fn towers(&self) -> Vec<Vec<usize>> {
        let above = self.above();
        let mut out = Vec::new();
        for b in 0..self.n() {
            if self.support[b] == FLOOR {
                let mut tower = vec![b];
                while let Some(next) = above[*tower.last().expect("non-empty")] {
                    tower.push(next);
                }
                out.push(tower);
            }
        }
        out
    }

    fn tower_of(&self, b: usize) -> Vec<usize> {
        self.towers()
            .into_iter()
            .find(|t| t.contains(&b))
            .expect("every block sits in a tower")
    }

    fn on_floor(&self) -> usize {
        self.support.iter().filter(|&&s| s == FLOOR).count()
    }

    fn is_forest(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        for &s in &self.support {
            if s != FLOOR {
                if s >= n || seen[s] {
                    return false;
                }
                seen[s] = true;
            }
        }
        // every chain must reach the floor within n hops
        (0..n).all(|b| {
            let mut cur = b;
            for _ in 0..=n {
                cur = self.support[cur];
                if cur == FLOOR {
                    return true;
                }
                if cur == b {
                    return false;
                }
            }
            false
        })
    }
}

pub struct Blocks {
    task: BlocksTask,
    name: &'static str,
    bias: LanguageBias,
    train: Vec<InstanceSize>,
    test: Vec<InstanceSize>,
    base_penalty: f64,
    offtower_penalty: f64,
    failure: f64,
}

impl Blocks {
    pub fn new(
        task: BlocksTask,
        train: Vec<InstanceSize>,
        test: Vec<InstanceSize>,
        cfg: &DomainConfig,
    ) -> Result<Blocks, DomainError> {
        for s in train.iter().chain(&test) {
            match *s {
                InstanceSize::Blocks(n) if n >= 2 => {}
                other => return Err(DomainError::InvalidSize(format!("blocks tasks need >= 2 blocks, got {other}"))),
            }
        }
        let mut modes = vec!["clear(+obj)", "on(+obj,-obj)", "heightlessthan(+obj,-obj)", "isFloor(+obj)"];
        if task == BlocksTask::On {
            modes.extend(["sametower(+obj,+obj)", "goalon(+obj,+obj)"]);
        }
        let modes = modes.iter().map(|m| parse_mode(m).expect("static mode")).collect();
        let bias = LanguageBias::new(modes, vec![ActionDecl::new("move", &["obj", "obj"])]).expect("distinct modes");
        let name = match task {
            BlocksTask::Stack => "stack",
            BlocksTask::Unstack => "unstack",
            BlocksTask::On => "on",
        };
        Ok(Blocks {
            task,
            name,
            bias,
            train,
            test,
            base_penalty: cfg.on_base_penalty,
            offtower_penalty: cfg.on_offtower_penalty,
            failure: cfg.action_failure,
        })
    }

    pub fn task(&self) -> BlocksTask {
        self.task
    }

    fn block_index(&self, sym: Symbol, n: usize) -> Option<usize> {
        if sym.as_str() == FLOOR_NAME {
            return Some(FLOOR);
        }
        object_index(sym, "b").filter(|&i| i < n)
    }

    pub(crate) fn decode(&self, state: &State) -> Result<Config, DomainError> {
        let on = Symbol::intern("on");
        let n = state.facts_with(on).count();
        let mut support = vec![None; n];
        for f in state.facts_with(on) {
            let bad = || DomainError::InvalidState(format!("unexpected fact {f}"));
            let b = self.block_index(f.args[0], n).filter(|&b| b != FLOOR).ok_or_else(bad)?;
            let s = self.block_index(f.args[1], n).ok_or_else(bad)?;
            if support[b].replace(s).is_some() {
                return Err(DomainError::InvalidState(format!("block b{} has two supports", b + 1)));
            }
        }
        let support: Vec<usize> = support
            .into_iter()
            .collect::<Option<_>>()
            .ok_or_else(|| DomainError::InvalidState("a block has no support".into()))?;
        let goal = match self.task {
            BlocksTask::On => {
                let g = state
                    .facts_with(Symbol::intern("goalon"))
                    .next()
                    .ok_or_else(|| DomainError::InvalidState("missing goalon fact".into()))?;
                let x = self.block_index(g.args[0], n).filter(|&b| b != FLOOR);
                let y = self.block_index(g.args[1], n).filter(|&b| b != FLOOR);
                match (x, y) {
                    (Some(x), Some(y)) if x != y => Some((x, y)),
                    _ => return Err(DomainError::InvalidState(format!("bad goal {g}"))),
                }
            }
            _ => None,
        };
        Ok(Config { support, goal })
    }

    pub(crate) fn encode(&self, cfg: &Config) -> State {
        let name = |b: usize| {
            if b == FLOOR {
                FLOOR_NAME.to_string()
            } else {
                object_name("b", b)
            }
        };
        let n = cfg.n();
        let mut s = State::new();
        s.insert(GroundAtom::new("isFloor", &[FLOOR_NAME]));
        s.insert(GroundAtom::new("clear", &[FLOOR_NAME]));
        for (b, &sup) in cfg.support.iter().enumerate() {
            s.insert(GroundAtom::new("on", &[&name(b), &name(sup)]));
        }
        for b in (0..n).filter(|&b| cfg.is_clear(b)) {
            s.insert(GroundAtom::new("clear", &[&name(b)]));
        }
        let heights = cfg.heights();
        let objects: Vec<(usize, usize)> = std::iter::once((FLOOR, 0))
            .chain(heights.iter().copied().enumerate())
            .collect();
        for &(x, hx) in &objects {
            for &(y, hy) in &objects {
                if hx < hy {
                    s.insert(GroundAtom::new("heightlessthan", &[&name(x), &name(y)]));
                }
            }
        }
        if let Some((gx, gy)) = cfg.goal {
            let towers = cfg.towers();
            for x in 0..n {
                for y in (0..n).filter(|&y| y != x) {
                    if towers.iter().any(|t| t.contains(&x) && t.contains(&y)) {
                        s.insert(GroundAtom::new("sametower", &[&name(x), &name(y)]));
                    }
                }
            }
            s.insert(GroundAtom::new("goalon", &[&name(gx), &name(gy)]));
        }
        s
    }

    fn goal_of(&self, cfg: &Config) -> bool {
        match self.task {
            BlocksTask::Stack => cfg.on_floor() == 1,
            BlocksTask::Unstack => cfg.on_floor() == cfg.n(),
            BlocksTask::On => {
                let (x, y) = cfg.goal.expect("On configurations carry a goal");
                cfg.support[y] == x
            }
        }
    }

    fn moves(&self, cfg: &Config) -> Vec<(usize, usize)> {
        if self.goal_of(cfg) {
            return Vec::new();
        }
        let n = cfg.n();
        let clear: Vec<bool> = (0..n).map(|b| cfg.is_clear(b)).collect();
        let mut out = Vec::new();
        for b in (0..n).filter(|&b| clear[b]) {
            if cfg.support[b] != FLOOR {
                out.push((b, FLOOR));
            }
            for d in (0..n).filter(|&d| d != b && clear[d]) {
                out.push((b, d));
            }
        }
        out
    }

    fn parse_move(&self, cfg: &Config, action: &GroundAtom) -> Result<(usize, usize), DomainError> {
        let illegal = |reason: &str| DomainError::IllegalAction {
            action: action.to_string(),
            reason: reason.to_string(),
        };
        if action.pred.as_str() != "move" || action.args.len() != 2 {
            return Err(illegal("not a move/2 action"));
        }
        let n = cfg.n();
        let b = self.block_index(action.args[0], n).filter(|&b| b != FLOOR).ok_or_else(|| illegal("unknown block"))?;
        let d = self.block_index(action.args[1], n).ok_or_else(|| illegal("unknown destination"))?;
        if self.goal_of(cfg) {
            return Err(illegal("state is a goal"));
        }
        if !cfg.is_clear(b) {
            return Err(illegal("block is not clear"));
        }
        if d == b {
            return Err(illegal("block cannot move onto itself"));
        }
        if d == FLOOR && cfg.support[b] == FLOOR {
            return Err(illegal("block is already on the floor"));
        }
        if d != FLOOR && !cfg.is_clear(d) {
            return Err(illegal("destination is not clear"));
        }
        Ok((b, d))
    }

    fn reward_of(&self, before: &Config, moved: usize, after: &Config) -> f64 {
        let goal = self.goal_of(after);
        match self.task {
            BlocksTask::Stack => {
                if goal {
                    2.0
                } else {
                    let h_max = after.heights().into_iter().max().unwrap_or(1);
                    -1.0 / h_max as f64
                }
            }
            BlocksTask::Unstack => {
                if goal {
                    10.0
                } else {
                    -(1.0 - after.on_floor() as f64 / after.n() as f64)
                }
            }
            BlocksTask::On => {
                if goal {
                    10.0
                } else {
                    let (x, y) = before.goal.expect("On configurations carry a goal");
                    let source = before.tower_of(moved);
                    if source.contains(&x) || source.contains(&y) {
                        -self.base_penalty
                    } else {
                        -self.offtower_penalty
                    }
                }
            }
        }
    }

    fn random_config(&self, n: usize, goal: Option<(usize, usize)>, rng: &mut dyn RngCore) -> Config {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut support = vec![FLOOR; n];
        let mut clear: Vec<usize> = Vec::new();
        for &b in &order {
            let choice = rng.gen_range(0..=clear.len());
            if choice < clear.len() {
                let d = clear.swap_remove(choice);
                support[b] = d;
            }
            clear.push(b);
            clear.sort_unstable();
        }
        Config { support, goal }
    }

    /// Canonical label-sequence key of the configuration. Blocks that are
    /// not goal blocks are interchangeable for every task.
    fn tower_key(&self, cfg: &Config) -> Vec<Vec<u8>> {
        let label = |b: usize| match cfg.goal {
            Some((x, _)) if x == b => 1,
            Some((_, y)) if y == b => 2,
            _ => 0,
        };
        let mut key: Vec<Vec<u8>> = cfg
            .towers()
            .into_iter()
            .map(|t| t.into_iter().map(label).collect())
            .collect();
        key.sort();
        key
    }

    fn key_is_goal(&self, key: &[Vec<u8>], n: usize) -> bool {
        match self.task {
            BlocksTask::Stack => key.len() == 1,
            BlocksTask::Unstack => key.len() == n,
            BlocksTask::On => key.iter().any(|t| t.windows(2).any(|w| w == [1, 2])),
        }
    }
}

fn key_successors(key: &[Vec<u8>]) -> Vec<Vec<Vec<u8>>> {
    let mut out = Vec::new();
    for i in 0..key.len() {
        let mut base = key.to_vec();
        let top = base[i].pop().expect("towers are non-empty");
        if !base[i].is_empty() {
            let mut k = base.clone();
            k.push(vec![top]);
            k.sort();
            out.push(k);
        }
        for j in (0..key.len()).filter(|&j| j != i) {
            let mut k = base.clone();
            k[j].push(top);
            k.retain(|t| !t.is_empty());
            k.sort();
            out.push(k);
        }
        base.clear();
    }
    out
}

impl Domain for Blocks {
    fn name(&self) -> &str {
        self.name
    }

    fn bias(&self) -> &LanguageBias {
        &self.bias
    }

    fn sizes(&self, phase: Phase) -> &[InstanceSize] {
        match phase {
            Phase::Train => &self.train,
            Phase::Test => &self.test,
        }
    }

    fn initial_state_for(&self, size: InstanceSize, rng: &mut dyn RngCore) -> Result<State, DomainError> {
        let InstanceSize::Blocks(n) = size else {
            return Err(DomainError::InvalidSize(format!("{size} is not a block count")));
        };
        if n < 2 {
            return Err(DomainError::InvalidSize(format!("need at least 2 blocks, got {n}")));
        }
        let goal = (self.task == BlocksTask::On).then(|| {
            let x = rng.gen_range(0..n);
            let mut y = rng.gen_range(0..n - 1);
            if y >= x {
                y += 1;
            }
            (x, y)
        });
        loop {
            let cfg = self.random_config(n, goal, rng);
            if !self.goal_of(&cfg) {
                return Ok(self.encode(&cfg));
            }
        }
    }

    fn legal_actions(&self, state: &State) -> Vec<GroundAtom> {
        let Ok(cfg) = self.decode(state) else {
            return Vec::new();
        };
        let name = |b: usize| {
            if b == FLOOR {
                FLOOR_NAME.to_string()
            } else {
                object_name("b", b)
            }
        };
        self.moves(&cfg)
            .into_iter()
            .map(|(b, d)| GroundAtom::new("move", &[&name(b), &name(d)]))
            .collect()
    }

    fn step(&self, state: &State, action: &GroundAtom) -> Result<Step, DomainError> {
        let cfg = self.decode(state)?;
        let (b, d) = self.parse_move(&cfg, action)?;
        let mut next = cfg.clone();
        next.support[b] = d;
        let reward = self.reward_of(&cfg, b, &next);
        let terminal = self.goal_of(&next);
        Ok(Step {
            next: self.encode(&next),
            reward,
            terminal,
        })
    }

    fn reward(&self, state: &State, action: &GroundAtom, next: &State) -> f64 {
        let (Ok(before), Ok(after)) = (self.decode(state), self.decode(next)) else {
            return 0.0;
        };
        let moved = self
            .block_index(action.args[0], before.n())
            .filter(|&b| b != FLOOR)
            .unwrap_or(0);
        self.reward_of(&before, moved, &after)
    }

    fn is_goal(&self, state: &State) -> bool {
        self.decode(state).is_ok_and(|c| self.goal_of(&c))
    }

    fn optimal_steps(&self, state: &State, budget: usize) -> Option<usize> {
        let cfg = self.decode(state).ok()?;
        let n = cfg.n();
        let start = self.tower_key(&cfg);
        if self.key_is_goal(&start, n) {
            return Some(0);
        }
        let mut seen = HashSet::from([start.clone()]);
        let mut queue = VecDeque::from([(start, 0)]);
        while let Some((key, d)) = queue.pop_front() {
            for next in key_successors(&key) {
                if self.key_is_goal(&next, n) {
                    return Some(d + 1);
                }
                if seen.insert(next.clone()) {
                    if seen.len() > budget {
                        return None;
                    }
                    queue.push_back((next, d + 1));
                }
            }
        }
        None
    }

    fn enumerate_states(&self, size: InstanceSize, budget: usize) -> Result<Vec<State>, DomainError> {
        let InstanceSize::Blocks(n) = size else {
            return Err(DomainError::InvalidSize(format!("{size} is not a block count")));
        };
        let mut configs = Vec::new();
        let mut support = vec![FLOOR; n];
        forests(0, &mut support, &mut configs, budget)?;
        let goals: Vec<Option<(usize, usize)>> = if self.task == BlocksTask::On {
            (0..n)
                .flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| Some((x, y))))
                .collect()
        } else {
            vec![None]
        };
        if configs.len() * goals.len() > budget {
            return Err(DomainError::BudgetExceeded(budget));
        }
        let mut out = Vec::with_capacity(configs.len() * goals.len());
        for goal in goals {
            for support in &configs {
                out.push(self.encode(&Config {
                    support: support.clone(),
                    goal,
                }));
            }
        }
        Ok(out)
    }

    fn check_invariants(&self, state: &State) -> Result<(), DomainError> {
        let cfg = self.decode(state)?;
        if !cfg.is_forest() {
            return Err(DomainError::InvalidState("blocks do not form a forest".into()));
        }
        if *state != self.encode(&cfg) {
            return Err(DomainError::InvalidState("derived facts are inconsistent".into()));
        }
        Ok(())
    }

    fn failure_prob(&self) -> f64 {
        self.failure
    }
}

fn forests(pos: usize, support: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, budget: usize) -> Result<(), DomainError> {
    let n = support.len();
    if pos == n {
        let cfg = Config {
            support: support.clone(),
            goal: None,
        };
        if cfg.is_forest() {
            if out.len() >= budget {
                return Err(DomainError::BudgetExceeded(budget));
            }
            out.push(cfg.support);
        }
        return Ok(());
    }
    for s in std::iter::once(FLOOR).chain(0..n) {
        if s == pos || (s != FLOOR && support[..pos].contains(&s)) {
            continue;
        }
        support[pos] = s;
        forests(pos + 1, support, out, budget)?;
    }
    support[pos] = FLOOR;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{domain_by_name, DomainConfig};
    use crate::logic::text::parse_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn domain(name: &str) -> Box<dyn Domain> {
        domain_by_name(name, &DomainConfig::default()).unwrap()
    }

    fn tower_abc() -> State {
        // b3 on b2 on b1
        parse_state("isFloor(floor)\nclear(floor)\non(b1,floor)\non(b2,b1)\non(b3,b2)\nclear(b3)").unwrap()
    }

    #[test]
    fn single_tower_only_top_moves_to_floor() {
        let d = domain("unstack");
        let acts: Vec<String> = d.legal_actions(&tower_abc()).iter().map(|a| a.to_string()).collect();
        assert_eq!(acts, ["move(b3,floor)"]);
    }

    #[test]
    fn move_to_floor_updates_facts() {
        let d = domain("unstack");
        let step = d.step(&tower_abc(), &GroundAtom::new("move", &["b3", "floor"])).unwrap();
        assert!(step.next.contains(&GroundAtom::new("on", &["b3", "floor"])));
        assert!(step.next.contains(&GroundAtom::new("clear", &["b2"])));
        assert!(!step.next.contains(&GroundAtom::new("on", &["b3", "b2"])));
        d.check_invariants(&step.next).unwrap();
    }

    #[test]
    fn all_on_floor_moves() {
        let d = domain("stack");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = Config { support: vec![FLOOR; 4], goal: None };
        let b = Blocks::new(BlocksTask::Stack, vec![], vec![], &DomainConfig::default()).unwrap();
        let s = b.encode(&cfg);
        assert_eq!(d.legal_actions(&s).len(), 4 * 3);
        let _ = d.initial_state(Phase::Train, &mut rng).unwrap();
    }

    #[test]
    fn illegal_moves_are_errors() {
        let d = domain("stack");
        let s = tower_abc();
        for (b, to) in [("b1", "floor"), ("b3", "b3"), ("b3", "b1"), ("b9", "floor")] {
            assert!(d.step(&s, &GroundAtom::new("move", &[b, to])).is_err(), "{b} -> {to}");
        }
    }

    #[test]
    fn three_block_space() {
        let d = domain("stack");
        let states = d.enumerate_states(InstanceSize::Blocks(3), 1000).unwrap();
        assert_eq!(states.len(), 13);
        assert_eq!(states.iter().filter(|s| d.is_goal(s)).count(), 6);
        let all_floor = states.iter().find(|s| d.legal_actions(s).len() == 6).unwrap();
        assert_eq!(d.optimal_steps(all_floor, 1000), Some(2));
    }

    #[test]
    fn unstack_tower_of_four() {
        let d = domain("unstack");
        let s = parse_state("on(b1,floor)\non(b2,b1)\non(b3,b2)\non(b4,b3)").unwrap();
        assert_eq!(d.optimal_steps(&s, 1000), Some(3));
    }

    #[test]
    fn on_start_is_never_a_goal() {
        let d = domain("on");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let s = d.initial_state(Phase::Test, &mut rng).unwrap();
            assert!(!d.is_goal(&s));
            d.check_invariants(&s).unwrap();
        }
    }
}
