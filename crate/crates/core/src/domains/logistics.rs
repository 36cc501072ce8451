use rand::{Rng, RngCore};

use crate::logic::text::parse_mode;
use crate::logic::{ActionDecl, GroundAtom, LanguageBias, State, Symbol};

use super::{object_index, object_name, Domain, DomainError, InstanceSize, Phase, Step};

const GOAL_REWARD: f64 = 1.0;
const STEP_REWARD: f64 = -0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Place {
    City(usize),
    Truck(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Config {
    cities: usize,
    dest: usize,
    trucks: Vec<usize>,
    boxes: Vec<Place>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Act {
    Load(usize, usize),
    Unload(usize, usize),
    Move(usize, usize),
}

impl Config {
    fn is_goal(&self) -> bool {
        self.boxes.contains(&Place::City(self.dest))
    }

    fn actions(&self) -> Vec<Act> {
        if self.is_goal() {
            return Vec::new();
        }
        let mut out = Vec::new();
        for (b, &p) in self.boxes.iter().enumerate() {
            if let Place::City(c) = p {
                for (t, &tc) in self.trucks.iter().enumerate() {
                    if tc == c {
                        out.push(Act::Load(b, t));
                    }
                }
            }
        }
        for (b, &p) in self.boxes.iter().enumerate() {
            if let Place::Truck(t) = p {
                out.push(Act::Unload(b, t));
            }
        }
        for (t, &tc) in self.trucks.iter().enumerate() {
            for c in (0..self.cities).filter(|&c| c != tc) {
                out.push(Act::Move(t, c));
            }
        }
        out
    }

    fn apply(&self, act: Act) -> Config {
        let mut next = self.clone();
        match act {
            Act::Load(b, t) => next.boxes[b] = Place::Truck(t),
            Act::Unload(b, t) => next.boxes[b] = Place::City(self.trucks[t]),
            Act::Move(t, c) => next.trucks[t] = c,
        }
        next
    }

    /// Exact distance to the nearest goal over the complete city graph: a
    /// box on a truck needs an unload, plus a move unless the truck is at
    /// the destination; a box in a city needs load, move and unload, plus a
    /// move if no truck is there.
    fn distance(&self) -> Option<usize> {
        if self.is_goal() {
            return Some(0);
        }
        if self.trucks.is_empty() {
            return None;
        }
        self.boxes
            .iter()
            .map(|&p| match p {
                Place::Truck(t) if self.trucks[t] == self.dest => 1,
                Place::Truck(_) => 2,
                Place::City(c) if self.trucks.contains(&c) => 3,
                Place::City(_) => 4,
            })
            .min()
    }
}

pub struct Logistics {
    bias: LanguageBias,
    train: Vec<InstanceSize>,
    test: Vec<InstanceSize>,
    failure: f64,
}

impl Logistics {
    pub fn new(train: Vec<InstanceSize>, test: Vec<InstanceSize>, failure: f64) -> Result<Logistics, DomainError> {
        for s in train.iter().chain(&test) {
            match *s {
                InstanceSize::Logistics { cities, trucks, boxes } if cities >= 2 && trucks >= 1 && boxes >= 1 => {}
                other => {
                    return Err(DomainError::InvalidSize(format!(
                        "logistics needs >= 2 cities, >= 1 truck and >= 1 box, got {other}"
                    )))
                }
            }
        }
        let modes = ["boxOn(-box,+truck)", "truckIn(+truck,-city)", "boxIn(-box,+city)", "destination(+city)"]
            .iter()
            .map(|m| parse_mode(m).expect("static mode"))
            .collect();
        let actions = vec![
            ActionDecl::new("load", &["box", "truck"]),
            ActionDecl::new("unload", &["box", "truck"]),
            ActionDecl::new("move", &["truck", "city"]),
        ];
        Ok(Logistics {
            bias: LanguageBias::new(modes, actions).expect("distinct modes"),
            train,
            test,
            failure,
        })
    }

    fn decode(&self, state: &State) -> Result<Config, DomainError> {
        let bad = |f: &GroundAtom| DomainError::InvalidState(format!("unexpected fact {f}"));
        let cities = state.facts_with(Symbol::intern("city")).count();
        let n_trucks = state.facts_with(Symbol::intern("truckIn")).count();
        let n_boxes =
            state.facts_with(Symbol::intern("boxIn")).count() + state.facts_with(Symbol::intern("boxOn")).count();
        let city = |s: Symbol| object_index(s, "city").filter(|&c| c < cities);
        let truck = |s: Symbol| object_index(s, "truck").filter(|&t| t < n_trucks);
        let boxi = |s: Symbol| object_index(s, "box").filter(|&b| b < n_boxes);
        let mut dests = state.facts_with(Symbol::intern("destination"));
        let dest = dests
            .next()
            .and_then(|f| city(f.args[0]))
            .ok_or_else(|| DomainError::InvalidState("missing or bad destination".into()))?;
        if dests.next().is_some() {
            return Err(DomainError::InvalidState("more than one destination".into()));
        }
        let mut trucks = vec![None; n_trucks];
        for f in state.facts_with(Symbol::intern("truckIn")) {
            let (t, c) = truck(f.args[0]).zip(city(f.args[1])).ok_or_else(|| bad(f))?;
            if trucks[t].replace(c).is_some() {
                return Err(DomainError::InvalidState(format!("truck{} is in two cities", t + 1)));
            }
        }
        let mut boxes = vec![None; n_boxes];
        for f in state.facts_with(Symbol::intern("boxIn")) {
            let (b, c) = boxi(f.args[0]).zip(city(f.args[1])).ok_or_else(|| bad(f))?;
            if boxes[b].replace(Place::City(c)).is_some() {
                return Err(DomainError::InvalidState(format!("box{} has two places", b + 1)));
            }
        }
        for f in state.facts_with(Symbol::intern("boxOn")) {
            let (b, t) = boxi(f.args[0]).zip(truck(f.args[1])).ok_or_else(|| bad(f))?;
            if boxes[b].replace(Place::Truck(t)).is_some() {
                return Err(DomainError::InvalidState(format!("box{} has two places", b + 1)));
            }
        }
        let missing = || DomainError::InvalidState("an object has no location".into());
        Ok(Config {
            cities,
            dest,
            trucks: trucks.into_iter().collect::<Option<_>>().ok_or_else(missing)?,
            boxes: boxes.into_iter().collect::<Option<_>>().ok_or_else(missing)?,
        })
    }

    fn encode(&self, cfg: &Config) -> State {
        let mut s = State::new();
        for c in 0..cfg.cities {
            s.insert(GroundAtom::new("city", &[&object_name("city", c)]));
        }
        s.insert(GroundAtom::new("destination", &[&object_name("city", cfg.dest)]));
        for (t, &c) in cfg.trucks.iter().enumerate() {
            s.insert(GroundAtom::new("truckIn", &[&object_name("truck", t), &object_name("city", c)]));
        }
        for (b, &p) in cfg.boxes.iter().enumerate() {
            let name = object_name("box", b);
            match p {
                Place::City(c) => s.insert(GroundAtom::new("boxIn", &[&name, &object_name("city", c)])),
                Place::Truck(t) => s.insert(GroundAtom::new("boxOn", &[&name, &object_name("truck", t)])),
            };
        }
        s
    }

    fn to_atom(act: Act) -> GroundAtom {
        match act {
            Act::Load(b, t) => GroundAtom::new("load", &[&object_name("box", b), &object_name("truck", t)]),
            Act::Unload(b, t) => GroundAtom::new("unload", &[&object_name("box", b), &object_name("truck", t)]),
            Act::Move(t, c) => GroundAtom::new("move", &[&object_name("truck", t), &object_name("city", c)]),
        }
    }

    fn parse_act(&self, cfg: &Config, action: &GroundAtom) -> Result<Act, DomainError> {
        let illegal = |reason: &str| DomainError::IllegalAction {
            action: action.to_string(),
            reason: reason.to_string(),
        };
        if action.args.len() != 2 {
            return Err(illegal("expected two arguments"));
        }
        let idx = |s: Symbol, prefix: &str, n: usize| object_index(s, prefix).filter(|&i| i < n);
        let (nb, nt) = (cfg.boxes.len(), cfg.trucks.len());
        let act = match action.pred.as_str() {
            "load" | "unload" => {
                let b = idx(action.args[0], "box", nb).ok_or_else(|| illegal("unknown box"))?;
                let t = idx(action.args[1], "truck", nt).ok_or_else(|| illegal("unknown truck"))?;
                if action.pred.as_str() == "load" {
                    Act::Load(b, t)
                } else {
                    Act::Unload(b, t)
                }
            }
            "move" => {
                let t = idx(action.args[0], "truck", nt).ok_or_else(|| illegal("unknown truck"))?;
                let c = idx(action.args[1], "city", cfg.cities).ok_or_else(|| illegal("unknown city"))?;
                Act::Move(t, c)
            }
            _ => return Err(illegal("unknown action type")),
        };
        if cfg.actions().contains(&act) {
            Ok(act)
        } else {
            Err(illegal("preconditions do not hold"))
        }
    }
}

fn reward_for(next: &Config) -> f64 {
    if next.is_goal() {
        GOAL_REWARD
    } else {
        STEP_REWARD
    }
}

impl Domain for Logistics {
    fn name(&self) -> &str {
        "logistics"
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
        let InstanceSize::Logistics { cities, trucks, boxes } = size else {
            return Err(DomainError::InvalidSize(format!("{size} is not a logistics size")));
        };
        if cities < 2 || trucks == 0 || boxes == 0 {
            return Err(DomainError::InvalidSize(size.to_string()));
        }
        let dest = rng.gen_range(0..cities);
        let elsewhere = |rng: &mut dyn RngCore| {
            let c = rng.gen_range(0..cities - 1);
            if c >= dest {
                c + 1
            } else {
                c
            }
        };
        let trucks = (0..trucks).map(|_| elsewhere(rng)).collect();
        let boxes = (0..boxes).map(|_| Place::City(elsewhere(rng))).collect();
        Ok(self.encode(&Config {
            cities,
            dest,
            trucks,
            boxes,
        }))
    }

    fn legal_actions(&self, state: &State) -> Vec<GroundAtom> {
        self.decode(state)
            .map(|cfg| cfg.actions().into_iter().map(Self::to_atom).collect())
            .unwrap_or_default()
    }

    fn step(&self, state: &State, action: &GroundAtom) -> Result<Step, DomainError> {
        let cfg = self.decode(state)?;
        let act = self.parse_act(&cfg, action)?;
        let next = cfg.apply(act);
        Ok(Step {
            reward: reward_for(&next),
            terminal: next.is_goal(),
            next: self.encode(&next),
        })
    }

    fn reward(&self, _state: &State, _action: &GroundAtom, next: &State) -> f64 {
        self.decode(next).map(|c| reward_for(&c)).unwrap_or(0.0)
    }

    fn is_goal(&self, state: &State) -> bool {
        self.decode(state).is_ok_and(|c| c.is_goal())
    }

    fn optimal_steps(&self, state: &State, _budget: usize) -> Option<usize> {
        self.decode(state).ok()?.distance()
    }

    fn enumerate_states(&self, size: InstanceSize, budget: usize) -> Result<Vec<State>, DomainError> {
        let InstanceSize::Logistics { cities, trucks, boxes } = size else {
            return Err(DomainError::InvalidSize(format!("{size} is not a logistics size")));
        };
        let places = cities + trucks;
        let total = (cities as u128)
            .saturating_mul((cities as u128).saturating_pow(trucks as u32))
            .saturating_mul((places as u128).saturating_pow(boxes as u32));
        if total > budget as u128 {
            return Err(DomainError::BudgetExceeded(budget));
        }
        let mut out = Vec::new();
        for dest in 0..cities {
            for tcode in 0..cities.pow(trucks as u32) {
                let truck_cities: Vec<usize> = digits(tcode, cities, trucks);
                for bcode in 0..places.pow(boxes as u32) {
                    let box_places = digits(bcode, places, boxes)
                        .into_iter()
                        .map(|p| if p < cities { Place::City(p) } else { Place::Truck(p - cities) })
                        .collect();
                    out.push(self.encode(&Config {
                        cities,
                        dest,
                        trucks: truck_cities.clone(),
                        boxes: box_places,
                    }));
                }
            }
        }
        Ok(out)
    }

    fn check_invariants(&self, state: &State) -> Result<(), DomainError> {
        let cfg = self.decode(state)?;
        let placements = state.facts_with(Symbol::intern("boxIn")).count()
            + state.facts_with(Symbol::intern("boxOn")).count()
            + state.facts_with(Symbol::intern("truckIn")).count();
        if placements != cfg.boxes.len() + cfg.trucks.len() {
            return Err(DomainError::InvalidState("placement facts are not conserved".into()));
        }
        if *state != self.encode(&cfg) {
            return Err(DomainError::InvalidState("unexpected facts".into()));
        }
        Ok(())
    }

    fn failure_prob(&self) -> f64 {
        self.failure
    }
}

/// Little-endian base-`base` digits of `code`, `len` of them.
fn digits(mut code: usize, base: usize, len: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(code % base);
        code /= base;
    }
    out
}
