//! Cyclic execution of an instantiated system with JSON traces.
//!
//! Each cycle runs four sub-steps in order: scripted guard updates, scripted
//! spontaneous events, one enforceable interaction, then internal
//! transitions until quiescence.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{self, Binding, DiagramError};
use crate::encoder;
use crate::logic::{self, LogicError, DEFAULT_UNIVERSE_BOUND};
use crate::model::{ArchitectureDiagram, ComponentType, InstanceId, Interaction, PortInstance, Transition, TransitionKind};

pub const TRACE_SCHEMA: u32 = 1;
pub const DEFAULT_MAX_CYCLES: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("diagram is not encodable under this binding; motif `{0}` has no unique configuration")]
    NotEncodable(String),
    #[error("component type `{0}` has no unique initial state")]
    NoInitialState(String),
    #[error("event script: {0}")]
    Script(String),
    #[error("livelock: {instance} keeps firing internal transitions in cycle {cycle}")]
    Livelock { instance: InstanceId, cycle: u64 },
    #[error("{requested} cycles requested, above the maximum of {max}")]
    TooManyCycles { requested: u64, max: u64 },
}

/// Portable 64-bit generator (splitmix64).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Index in `0..len`, by multiply-shift on one draw. `len` must be non-zero.
    pub fn pick(&mut self, len: usize) -> usize {
        ((self.next_u64() as u128 * len as u128) >> 64) as usize
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    #[default]
    UniformRandom,
    LexicographicFirst,
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::UniformRandom => "uniform-random",
            Policy::LexicographicFirst => "lexicographic-first",
        })
    }
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform-random" | "uniform" | "random" => Ok(Policy::UniformRandom),
            "lexicographic-first" | "lexicographic" | "first" => Ok(Policy::LexicographicFirst),
            other => Err(format!("unknown policy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineConfig {
    pub cycles: u64,
    pub seed: u64,
    pub policy: Policy,
    pub max_cycles: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { cycles: 10, seed: 0, policy: Policy::UniformRandom, max_cycles: DEFAULT_MAX_CYCLES }
    }
}

/// Where the allowed interactions come from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum AllowedSource {
    #[default]
    Diagram,
    Macros,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardUpdate {
    pub target: InstanceId,
    pub guard: String,
    pub value: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEvent {
    pub target: InstanceId,
    pub event: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptCycle {
    #[serde(default)]
    pub events: Vec<ScriptEvent>,
    #[serde(default)]
    pub guards: Vec<GuardUpdate>,
}

/// Scripted environment: entry `i` applies at cycle `i`; later cycles get nothing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EventScript {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial_guards: Vec<GuardUpdate>,
    #[serde(default)]
    pub cycles: Vec<ScriptCycle>,
}

impl Default for EventScript {
    fn default() -> Self {
        EventScript { schema: TRACE_SCHEMA, initial_guards: Vec::new(), cycles: Vec::new() }
    }
}

impl EventScript {
    pub fn from_json(text: &str) -> Result<EventScript, EngineError> {
        let script: EventScript = serde_json::from_str(text).map_err(|e| EngineError::Script(e.to_string()))?;
        if script.schema != TRACE_SCHEMA {
            return Err(EngineError::Script(format!("unsupported schema {}", script.schema)));
        }
        Ok(script)
    }

    /// Every target, event and guard must exist in the instantiated system.
    pub fn check(&self, d: &ArchitectureDiagram, s: &SystemState) -> Result<(), EngineError> {
        let owner = |id: &InstanceId| -> Result<&ComponentType, EngineError> {
            if !s.instances.contains_key(id) {
                return Err(EngineError::Script(format!("unknown instance {id}")));
            }
            d.component_type(&id.component_type).ok_or_else(|| EngineError::Script(format!("unknown instance {id}")))
        };
        let guards = self.initial_guards.iter().chain(self.cycles.iter().flat_map(|c| c.guards.iter()));
        for g in guards {
            if !owner(&g.target)?.guards.contains(&g.guard) {
                return Err(EngineError::Script(format!("{} has no guard `{}`", g.target, g.guard)));
            }
        }
        for e in self.cycles.iter().flat_map(|c| c.events.iter()) {
            if !owner(&e.target)?.events.contains(&e.event) {
                return Err(EngineError::Script(format!("{} has no spontaneous event `{}`", e.target, e.event)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceState {
    pub state: String,
    pub queue: VecDeque<String>,
    /// Covers every declared guard.
    pub guards: BTreeMap<String, bool>,
}

/// Ordered by component type name, then index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SystemState {
    pub instances: BTreeMap<InstanceId, InstanceState>,
}

impl SystemState {
    pub fn state_of(&self, id: &InstanceId) -> Option<&str> {
        self.instances.get(id).map(|s| s.state.as_str())
    }
}

/// Every instance at its initial state with empty queues; unlisted guards are false.
pub fn init_state(d: &ArchitectureDiagram, b: &Binding, initial_guards: &[GuardUpdate]) -> Result<SystemState, EngineError> {
    let counts = diagram::instance_counts(d, b)?;
    let mut s = SystemState::default();
    for ct in &d.component_types {
        let initial = ct.initial_state().ok_or_else(|| EngineError::NoInitialState(ct.name.clone()))?;
        for i in 1..=counts[&ct.name] {
            s.instances.insert(
                InstanceId::new(ct.name.clone(), i),
                InstanceState {
                    state: initial.to_string(),
                    queue: VecDeque::new(),
                    guards: ct.guards.iter().map(|g| (g.clone(), false)).collect(),
                },
            );
        }
    }
    apply_guards(&mut s, initial_guards)?;
    Ok(s)
}

fn apply_guards(s: &mut SystemState, updates: &[GuardUpdate]) -> Result<(), EngineError> {
    for u in updates {
        let inst = s.instances.get_mut(&u.target).ok_or_else(|| EngineError::Script(format!("unknown instance {}", u.target)))?;
        match inst.guards.get_mut(&u.guard) {
            Some(v) => *v = u.value,
            None => return Err(EngineError::Script(format!("{} has no guard `{}`", u.target, u.guard))),
        }
    }
    Ok(())
}

/// First transition of `kind` and `label` leaving the instance's state with a true guard.
fn enabled_transition<'a>(ct: &'a ComponentType, inst: &InstanceState, kind: TransitionKind, label: &str) -> Option<&'a Transition> {
    ct.transitions
        .iter()
        .find(|t| t.kind == kind && t.label == label && t.source == inst.state && t.guard_holds(&inst.guards))
}

/// Ports whose instance has an enabled enforceable transition with that label.
pub fn enabled_ports(s: &SystemState, d: &ArchitectureDiagram) -> BTreeSet<PortInstance> {
    let mut out = BTreeSet::new();
    for (id, inst) in &s.instances {
        let Some(ct) = d.component_type(&id.component_type) else { continue };
        for t in &ct.transitions {
            if t.kind == TransitionKind::Enforceable && t.source == inst.state && t.guard_holds(&inst.guards) {
                out.insert(id.port(t.label.clone()));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpontaneousFiring {
    pub instance: InstanceId,
    pub event: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortFiring {
    pub instance: InstanceId,
    pub port: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InternalFiring {
    pub instance: InstanceId,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceCycle {
    pub cycle: u64,
    pub spontaneous: Vec<SpontaneousFiring>,
    pub interaction: Option<Vec<PortFiring>>,
    pub internal: Vec<InternalFiring>,
    pub idle: bool,
}

impl TraceCycle {
    pub fn interaction_ports(&self) -> Option<Interaction> {
        let ports = self.interaction.as_ref()?.iter().map(|f| f.instance.port(f.port.clone())).collect();
        Interaction::new(ports)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub schema: u32,
    pub model: String,
    pub binding: BTreeMap<String, u64>,
    pub seed: u64,
    pub cycles: Vec<TraceCycle>,
}

impl Trace {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("trace always serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Trace, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn fired_interactions(&self) -> usize {
        self.cycles.iter().filter(|c| c.interaction.is_some()).count()
    }

    pub fn idle_cycles(&self) -> usize {
        self.cycles.iter().filter(|c| c.idle).count()
    }
}

fn one_port_per_instance(a: &Interaction) -> bool {
    let instances: BTreeSet<InstanceId> = a.iter().map(PortInstance::instance).collect();
    instances.len() == a.len()
}

fn fire(s: &mut SystemState, id: &InstanceId, t: &Transition) -> (String, String) {
    let inst = s.instances.get_mut(id).expect("instance exists");
    let from = std::mem::replace(&mut inst.state, t.destination.clone());
    (from, t.destination.clone())
}

/// Run one cycle in place.
#[allow(clippy::too_many_arguments)]
pub fn step_cycle(
    s: &mut SystemState,
    d: &ArchitectureDiagram,
    entry: Option<&ScriptCycle>,
    allowed: &BTreeSet<Interaction>,
    rng: &mut SplitMix64,
    policy: Policy,
    cycle: u64,
) -> Result<TraceCycle, EngineError> {
    let empty = ScriptCycle::default();
    let entry = entry.unwrap_or(&empty);
    apply_guards(s, &entry.guards)?;

    for e in &entry.events {
        let inst = s.instances.get_mut(&e.target).ok_or_else(|| EngineError::Script(format!("unknown instance {}", e.target)))?;
        inst.queue.push_back(e.event.clone());
    }
    let ids: Vec<InstanceId> = s.instances.keys().cloned().collect();
    let mut spontaneous = Vec::new();
    for id in &ids {
        let ct = d.component_type(&id.component_type).expect("instance of declared type");
        let inst = &s.instances[id];
        let Some(head) = inst.queue.front() else { continue };
        if let Some(t) = enabled_transition(ct, inst, TransitionKind::Spontaneous, head) {
            let event = t.label.clone();
            s.instances.get_mut(id).expect("instance exists").queue.pop_front();
            let (from, to) = fire(s, id, t);
            spontaneous.push(SpontaneousFiring { instance: id.clone(), event, from, to });
        }
    }

    let enabled = enabled_ports(s, d);
    let feasible: Vec<&Interaction> =
        allowed.iter().filter(|a| a.is_subset(&enabled) && one_port_per_instance(a)).collect();
    let chosen = match (feasible.is_empty(), policy) {
        (true, _) => None,
        (false, Policy::LexicographicFirst) => Some(feasible[0]),
        (false, Policy::UniformRandom) => Some(feasible[rng.pick(feasible.len())]),
    };
    let interaction = chosen.map(|a| {
        a.iter()
            .map(|p| {
                let id = p.instance();
                let ct = d.component_type(&id.component_type).expect("instance of declared type");
                let t = enabled_transition(ct, &s.instances[&id], TransitionKind::Enforceable, &p.port)
                    .expect("enabled port has a transition");
                let (from, to) = fire(s, &id, t);
                PortFiring { instance: id, port: p.port.clone(), from, to }
            })
            .collect::<Vec<_>>()
    });

    let mut internal = Vec::new();
    for id in &ids {
        let ct = d.component_type(&id.component_type).expect("instance of declared type");
        let budget = ct.states.len();
        let mut fired = 0;
        while let Some(t) = enabled_transition(ct, &s.instances[id], TransitionKind::Internal, "") {
            if fired == budget {
                return Err(EngineError::Livelock { instance: id.clone(), cycle });
            }
            let (from, to) = fire(s, id, t);
            internal.push(InternalFiring { instance: id.clone(), from, to });
            fired += 1;
        }
    }

    let idle = spontaneous.is_empty() && interaction.is_none() && internal.is_empty();
    Ok(TraceCycle { cycle, spontaneous, interaction, internal, idle })
}

/// Allowed interactions of the instantiated system from either source.
/// Both require the diagram to be encodable under `b`.
pub fn allowed_set(d: &ArchitectureDiagram, b: &Binding, source: AllowedSource) -> Result<BTreeSet<Interaction>, EngineError> {
    b.check_complete(d)?;
    let report = diagram::check_encodable(d, b)?;
    if let Some(m) = report.motifs.iter().find(|m| !m.unique()) {
        return Err(EngineError::NotEncodable(m.motif.clone()));
    }
    match source {
        AllowedSource::Diagram => Ok(diagram::diagram_interactions(d, b)?),
        AllowedSource::Macros => {
            let spec = encoder::encode_macros_with(d, b)?;
            let counts = diagram::instance_counts(d, b)?;
            let universe = diagram::motif_universe(d, b)?;
            Ok(logic::allowed_interactions(&spec.requires, &spec.accepts, &counts, &universe, DEFAULT_UNIVERSE_BOUND)?)
        }
    }
}

/// A run in progress.
pub struct Simulation<'a> {
    diagram: &'a ArchitectureDiagram,
    script: EventScript,
    allowed: BTreeSet<Interaction>,
    policy: Policy,
    rng: SplitMix64,
    state: SystemState,
    cycle: u64,
}

impl<'a> Simulation<'a> {
    pub fn new(
        d: &'a ArchitectureDiagram,
        b: &Binding,
        cfg: &EngineConfig,
        script: EventScript,
        allowed: BTreeSet<Interaction>,
    ) -> Result<Self, EngineError> {
        if cfg.cycles > cfg.max_cycles {
            return Err(EngineError::TooManyCycles { requested: cfg.cycles, max: cfg.max_cycles });
        }
        let state = init_state(d, b, &script.initial_guards)?;
        script.check(d, &state)?;
        Ok(Simulation { diagram: d, script, allowed, policy: cfg.policy, rng: SplitMix64::new(cfg.seed), state, cycle: 0 })
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn allowed(&self) -> &BTreeSet<Interaction> {
        &self.allowed
    }

    pub fn step(&mut self) -> Result<TraceCycle, EngineError> {
        let entry = self.script.cycles.get(self.cycle as usize);
        let out = step_cycle(&mut self.state, self.diagram, entry, &self.allowed, &mut self.rng, self.policy, self.cycle)?;
        self.cycle += 1;
        Ok(out)
    }
}

/// Run `cfg.cycles` cycles. Identical inputs give identical traces.
pub fn run(
    d: &ArchitectureDiagram,
    b: &Binding,
    cfg: &EngineConfig,
    script: &EventScript,
    source: AllowedSource,
) -> Result<Trace, EngineError> {
    let allowed = allowed_set(d, b, source)?;
    let mut sim = Simulation::new(d, b, cfg, script.clone(), allowed)?;
    let mut cycles = Vec::with_capacity(cfg.cycles as usize);
    for _ in 0..cfg.cycles {
        cycles.push(sim.step()?);
    }
    Ok(Trace { schema: TRACE_SCHEMA, model: d.name.clone(), binding: b.0.clone(), seed: cfg.seed, cycles })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cycle {cycle}: {reason}")]
pub struct ReplayError {
    pub cycle: u64,
    pub reason: String,
}

/// Re-derive every recorded firing from the model, the script and the
/// allowed set: each step must leave the current state by a declared,
/// enabled transition, and each interaction must be allowed and enabled.
pub fn replay(
    d: &ArchitectureDiagram,
    b: &Binding,
    trace: &Trace,
    script: &EventScript,
    allowed: &BTreeSet<Interaction>,
) -> Result<(), ReplayError> {
    let fail = |cycle: u64, reason: String| ReplayError { cycle, reason };
    let mut s = init_state(d, b, &script.initial_guards).map_err(|e| fail(0, e.to_string()))?;
    let ct_of = |id: &InstanceId| d.component_type(&id.component_type);

    for (expected, c) in trace.cycles.iter().enumerate() {
        let n = c.cycle;
        if n != expected as u64 {
            return Err(fail(n, format!("expected cycle number {expected}")));
        }
        let entry = script.cycles.get(expected).cloned().unwrap_or_default();
        apply_guards(&mut s, &entry.guards).map_err(|e| fail(n, e.to_string()))?;
        for e in &entry.events {
            let inst = s.instances.get_mut(&e.target).ok_or_else(|| fail(n, format!("unknown instance {}", e.target)))?;
            inst.queue.push_back(e.event.clone());
        }

        let mut touched = BTreeSet::new();
        for f in &c.spontaneous {
            let ct = ct_of(&f.instance).ok_or_else(|| fail(n, format!("unknown instance {}", f.instance)))?;
            let inst = s.instances.get_mut(&f.instance).ok_or_else(|| fail(n, format!("unknown instance {}", f.instance)))?;
            if !touched.insert(f.instance.clone()) {
                return Err(fail(n, format!("{} consumed two events", f.instance)));
            }
            if inst.queue.front() != Some(&f.event) {
                return Err(fail(n, format!("{} fired `{}` which is not at the head of its queue", f.instance, f.event)));
            }
            if inst.state != f.from {
                return Err(fail(n, format!("{} is in `{}`, not `{}`", f.instance, inst.state, f.from)));
            }
            let t = enabled_transition(ct, inst, TransitionKind::Spontaneous, &f.event)
                .ok_or_else(|| fail(n, format!("{} has no enabled `{}` transition", f.instance, f.event)))?;
            if t.destination != f.to {
                return Err(fail(n, format!("{} `{}` leads to `{}`, not `{}`", f.instance, f.event, t.destination, f.to)));
            }
            inst.queue.pop_front();
            inst.state = f.to.clone();
        }

        if let Some(firings) = &c.interaction {
            let a = c.interaction_ports().ok_or_else(|| fail(n, "empty interaction".into()))?;
            if a.len() != firings.len() {
                return Err(fail(n, "interaction lists a port twice".into()));
            }
            if !allowed.contains(&a) {
                return Err(fail(n, format!("interaction {a} is not allowed")));
            }
            let enabled = enabled_ports(&s, d);
            if !a.is_subset(&enabled) {
                return Err(fail(n, format!("interaction {a} is not enabled")));
            }
            for f in firings {
                let ct = ct_of(&f.instance).ok_or_else(|| fail(n, format!("unknown instance {}", f.instance)))?;
                let inst = s.instances.get_mut(&f.instance).expect("enabled port belongs to an instance");
                if inst.state != f.from {
                    return Err(fail(n, format!("{} is in `{}`, not `{}`", f.instance, inst.state, f.from)));
                }
                let t = enabled_transition(ct, inst, TransitionKind::Enforceable, &f.port)
                    .expect("enabled port has a transition");
                if t.destination != f.to {
                    return Err(fail(n, format!("{}.{} leads to `{}`, not `{}`", f.instance, f.port, t.destination, f.to)));
                }
                inst.state = f.to.clone();
            }
        }

        for f in &c.internal {
            let ct = ct_of(&f.instance).ok_or_else(|| fail(n, format!("unknown instance {}", f.instance)))?;
            let inst = s.instances.get_mut(&f.instance).ok_or_else(|| fail(n, format!("unknown instance {}", f.instance)))?;
            if inst.state != f.from {
                return Err(fail(n, format!("{} is in `{}`, not `{}`", f.instance, inst.state, f.from)));
            }
            let t = enabled_transition(ct, inst, TransitionKind::Internal, "")
                .ok_or_else(|| fail(n, format!("{} has no enabled internal transition", f.instance)))?;
            if t.destination != f.to {
                return Err(fail(n, format!("{} internal step leads to `{}`, not `{}`", f.instance, t.destination, f.to)));
            }
            inst.state = f.to.clone();
        }

        let idle = c.spontaneous.is_empty() && c.interaction.is_none() && c.internal.is_empty();
        if idle != c.idle {
            return Err(fail(n, format!("idle flag is {} but should be {idle}", c.idle)));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // Reference outputs of splitmix64 seeded with 1234567.
        let mut g = SplitMix64::new(1234567);
        let got: Vec<u64> = (0..5).map(|_| g.next_u64()).collect();
        assert_eq!(
            got,
            vec![
                6457827717110365317,
                3203168211198807973,
                9817491932198370423,
                4593380528125082431,
                16408922859458223821
            ]
        );
    }

    #[test]
    fn pick_stays_in_range() {
        let mut g = SplitMix64::new(7);
        for len in 1..50 {
            assert!(g.pick(len) < len);
        }
    }

    #[test]
    fn policy_names() {
        assert_eq!("uniform-random".parse::<Policy>().unwrap(), Policy::UniformRandom);
        assert_eq!(Policy::LexicographicFirst.to_string(), "lexicographic-first");
        assert!("fair".parse::<Policy>().is_err());
    }

    #[test]
    fn script_json_shape() {
        let text = r#"{"schema":1,"initialGuards":[{"target":"Route[1]","guard":"finished","value":true}],
            "cycles":[{"events":[{"target":"Route[2]","event":"end"}],"guards":[]}]}"#;
        let s = EventScript::from_json(text).unwrap();
        assert_eq!(s.initial_guards[0].target, InstanceId::new("Route", 1));
        assert_eq!(s.cycles[0].events[0].event, "end");
        assert!(EventScript::from_json(r#"{"schema":2,"cycles":[]}"#).is_err());
    }
}
