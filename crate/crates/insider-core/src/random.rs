//! Deterministic pseudo-random model generation.
//!
//! Everything here is seeded and reproducible: the same seed always yields
//! the same model. The generators produce structurally valid models by
//! construction; [`random_safety_model`] can additionally be asked to work
//! a number of discrepancies into the result (still a valid model, just
//! out of step with the system design), and [`evolve_system_model`]
//! replays a random edit session and reports the renames it performed.
//! Intended for stress tests and benchmarks rather than as modelling
//! input.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::ident::QualifiedName;
use crate::safety::{
    BasicEvent, BooleanExpr, ExprRef, FailureConnection, FailurePort, SafetyAnalysisModel,
    SamComponent,
};
use crate::sync::RenameHints;
use crate::system::{
    Component, Connection, Direction, Port, RenameEdit, SystemEdit, SystemModel,
};

/// splitmix64; small, seedable, good enough for shuffling test data.
struct Rng(u64);

impl Rng {
    fn new(seed: u64) -> Rng {
        Rng(seed)
    }

    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in `0..n`. `n` must be positive.
    fn below(&mut self, n: usize) -> usize {
        (self.next() % n as u64) as usize
    }

    fn chance(&mut self, percent: u64) -> bool {
        self.next() % 100 < percent
    }

    fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            xs.swap(i, self.below(i + 1));
        }
    }
}

/// A random valid system model with up to `max_components` components and
/// `max_ports` ports. Connection cycles between components may occur.
pub fn random_system_model(seed: u64, max_components: usize, max_ports: usize) -> SystemModel {
    build_system(&mut Rng::new(seed), max_components, max_ports, false)
}

/// Like [`random_system_model`], but connections only run from earlier to
/// later components, so failure propagation over any matching safety
/// model is guaranteed acyclic.
pub fn random_dag_system_model(seed: u64, max_components: usize, max_ports: usize) -> SystemModel {
    build_system(&mut Rng::new(seed), max_components, max_ports, true)
}

fn build_system(
    rng: &mut Rng,
    max_components: usize,
    max_ports: usize,
    forward_only: bool,
) -> SystemModel {
    assert!((1..=99).contains(&max_components) && max_ports <= 99);
    let n_components = 1 + rng.below(max_components);
    let components: Vec<Component> = (0..n_components)
        .map(|i| Component::new(format!("c{i:02}")))
        .collect();

    let n_ports = rng.below(max_ports + 1);
    let mut owner_index: BTreeMap<QualifiedName, usize> = BTreeMap::new();
    let mut ports = Vec::new();
    for k in 0..n_ports {
        let owner = rng.below(n_components);
        let direction = if rng.chance(50) {
            Direction::In
        } else {
            Direction::Out
        };
        let port = Port::new(components[owner].name.clone(), format!("p{k:02}"), direction);
        owner_index.insert(port.qualified(), owner);
        ports.push(port);
    }

    let mut candidates: Vec<(QualifiedName, QualifiedName)> = Vec::new();
    for source in ports.iter().filter(|p| p.direction == Direction::Out) {
        for target in ports.iter().filter(|p| p.direction == Direction::In) {
            let (si, ti) = (owner_index[&source.qualified()], owner_index[&target.qualified()]);
            if si == ti || (forward_only && si >= ti) {
                continue;
            }
            candidates.push((source.qualified(), target.qualified()));
        }
    }
    rng.shuffle(&mut candidates);
    let mut connections = Vec::new();
    let mut driven: Vec<QualifiedName> = Vec::new();
    for (source, target) in candidates {
        if driven.contains(&target) || !rng.chance(60) {
            continue;
        }
        driven.push(target.clone());
        connections.push(Connection::new(
            format!("con{:02}", connections.len()),
            source,
            target,
        ));
    }

    SystemModel::build(components, ports, connections).expect("generated system model is valid")
}

/// A random valid safety model shaped after `sm`: one component per
/// system component, one or two failure ports per system port, random
/// failure logic, and failure connections along every system connection.
/// With `damage == 0` the result is fully consistent with `sm`; each
/// damage step works in one random discrepancy (a missing element, a
/// dangling trace, a stray component or connection).
pub fn random_safety_model(sm: &SystemModel, seed: u64, damage: usize) -> SafetyAnalysisModel {
    let mut rng = Rng::new(seed);
    let mut components = Vec::new();
    for c in sm.components() {
        let mut sam_c = SamComponent::new(&c.name);
        for e in 0..1 + rng.below(2) {
            let name = format!("e{e}");
            sam_c.events.push(if rng.chance(70) {
                BasicEvent::with_probability(name, rng.unit())
            } else {
                BasicEvent::new(name)
            });
        }
        for p in sm.ports_of(&c.name) {
            sam_c.failure_ports.push(FailurePort::new(
                format!("{}_om", p.name),
                p.direction,
                p.qualified(),
            ));
            if rng.chance(35) {
                sam_c.failure_ports.push(
                    FailurePort::new(format!("{}_co", p.name), p.direction, p.qualified())
                        .with_mode("commission"),
                );
            }
        }
        let pool: Vec<BooleanExpr> = sam_c
            .events
            .iter()
            .map(|e| BooleanExpr::event(&e.name))
            .chain(sam_c.in_ports().map(|p| BooleanExpr::in_port(&p.name)))
            .collect();
        let outs: Vec<String> = sam_c.out_ports().map(|p| p.name.clone()).collect();
        for out in outs {
            if !pool.is_empty() && rng.chance(90) {
                let expr = random_expr(&mut rng, &pool, 2);
                sam_c.definitions.insert(out, Some(expr));
            }
        }
        components.push(sam_c);
    }

    let mut connections = Vec::new();
    for con in sm.connections() {
        for mode in ["omission", "commission"] {
            let find = |traced: &QualifiedName| {
                components
                    .iter()
                    .find(|c| c.name == *traced.component())
                    .and_then(|c| {
                        c.failure_ports
                            .iter()
                            .find(|p| p.traces_to == *traced && p.failure_mode == mode)
                    })
                    .map(|p| QualifiedName::new(traced.component(), &p.name).unwrap())
            };
            if let (Some(source), Some(target)) = (find(&con.source), find(&con.target)) {
                if mode == "omission" || rng.chance(80) {
                    connections.push(FailureConnection::new(
                        format!("fc{:02}", connections.len()),
                        source,
                        target,
                    ));
                }
            }
        }
    }

    for _ in 0..damage {
        perturb(&mut components, &mut connections, &mut rng);
    }

    SafetyAnalysisModel::build(components, connections).expect("generated safety model is valid")
}

fn random_expr(rng: &mut Rng, pool: &[BooleanExpr], depth: usize) -> BooleanExpr {
    if depth == 0 || rng.chance(40) {
        return pool[rng.below(pool.len())].clone();
    }
    match rng.below(5) {
        0 | 1 => BooleanExpr::and(
            (0..2 + rng.below(2))
                .map(|_| random_expr(rng, pool, depth - 1))
                .collect(),
        ),
        2 | 3 => BooleanExpr::or(
            (0..2 + rng.below(2))
                .map(|_| random_expr(rng, pool, depth - 1))
                .collect(),
        ),
        _ => BooleanExpr::not(random_expr(rng, pool, depth - 1)),
    }
}

/// One validity-preserving discrepancy.
fn perturb(
    components: &mut Vec<SamComponent>,
    connections: &mut Vec<FailureConnection>,
    rng: &mut Rng,
) {
    match rng.below(6) {
        0 => {
            if components.is_empty() {
                return;
            }
            let gone = components.remove(rng.below(components.len()));
            connections.retain(|c| {
                *c.source.component() != gone.name && *c.target.component() != gone.name
            });
        }
        1 => {
            let Some(ci) = pick_component_with_port(components, rng) else {
                return;
            };
            let c = &mut components[ci];
            let gone = c.failure_ports.remove(rng.below(c.failure_ports.len()));
            c.definitions.remove(&gone.name);
            for def in c.definitions.values_mut() {
                let refers = def.as_ref().is_some_and(|e| {
                    e.references()
                        .iter()
                        .any(|r| matches!(r, ExprRef::InPort(n) if *n == gone.name))
                });
                if refers {
                    *def = None;
                }
            }
            let q = QualifiedName::new(&c.name, &gone.name).unwrap();
            connections.retain(|con| con.source != q && con.target != q);
        }
        2 => {
            if !connections.is_empty() {
                connections.remove(rng.below(connections.len()));
            }
        }
        3 => {
            let Some(ci) = pick_component_with_port(components, rng) else {
                return;
            };
            let c = &mut components[ci];
            let dangled = QualifiedName::new("zz", "zz").unwrap();
            if c.failure_ports.iter().any(|p| p.traces_to == dangled) {
                return;
            }
            let pi = rng.below(c.failure_ports.len());
            let name = c.failure_ports[pi].name.clone();
            let q = QualifiedName::new(&c.name, &name).unwrap();
            if connections.iter().any(|con| con.source == q || con.target == q) {
                return;
            }
            c.failure_ports[pi].traces_to = dangled;
        }
        4 => {
            let name = format!("s{:02}", components.len());
            if components.iter().any(|c| c.name == name) {
                return;
            }
            let mut stray = SamComponent::new(name);
            stray.events.push(BasicEvent::new("e0"));
            stray.failure_ports.push(FailurePort::new(
                "stray_in",
                Direction::In,
                QualifiedName::new("zz", "zz").unwrap(),
            ));
            components.push(stray);
        }
        _ => {
            let mut pairs = Vec::new();
            for source_c in components.iter() {
                for source_p in source_c.out_ports() {
                    for target_c in components.iter().filter(|c| c.name != source_c.name) {
                        for target_p in target_c.in_ports() {
                            let target = QualifiedName::new(&target_c.name, &target_p.name).unwrap();
                            if connections.iter().any(|con| con.target == target) {
                                continue;
                            }
                            pairs.push((
                                QualifiedName::new(&source_c.name, &source_p.name).unwrap(),
                                target,
                            ));
                        }
                    }
                }
            }
            if pairs.is_empty() {
                return;
            }
            let (source, target) = pairs[rng.below(pairs.len())].clone();
            let mut i = connections.len();
            while connections.iter().any(|con| con.name == format!("stray{i:02}")) {
                i += 1;
            }
            connections.push(FailureConnection::new(format!("stray{i:02}"), source, target));
        }
    }
}

fn pick_component_with_port(components: &[SamComponent], rng: &mut Rng) -> Option<usize> {
    let with_ports: Vec<usize> = components
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.failure_ports.is_empty())
        .map(|(i, _)| i)
        .collect();
    if with_ports.is_empty() {
        None
    } else {
        Some(with_ports[rng.below(with_ports.len())])
    }
}

/// Replays a session of `edits` random valid edits on `sm` and returns
/// the evolved model together with rename hints that map every surviving
/// renamed element from its original name to its final one.
pub fn evolve_system_model(
    sm: &SystemModel,
    seed: u64,
    edits: usize,
) -> (SystemModel, RenameHints) {
    let mut rng = Rng::new(seed);
    let mut current = sm.clone();
    let mut component_names: BTreeMap<String, String> = sm
        .components()
        .iter()
        .map(|c| (c.name.clone(), c.name.clone()))
        .collect();
    let mut port_names: BTreeMap<QualifiedName, QualifiedName> = sm
        .ports()
        .iter()
        .map(|p| (p.qualified(), p.qualified()))
        .collect();
    let mut fresh = 0usize;

    for _ in 0..edits {
        let Some(edit) = propose_edit(&current, &mut rng, &mut fresh) else {
            continue;
        };
        let Ok(next) = current.apply_edit(&edit) else {
            continue;
        };
        match &edit {
            SystemEdit::RemoveComponent { name } => {
                component_names.retain(|_, cur| cur != name);
                port_names.retain(|_, cur| cur.component() != name);
            }
            SystemEdit::RemovePort { port } => {
                port_names.retain(|_, cur| cur != port);
            }
            SystemEdit::Rename(RenameEdit::Component { old, new }) => {
                for cur in component_names.values_mut() {
                    if cur == old {
                        *cur = new.clone();
                    }
                }
                for cur in port_names.values_mut() {
                    if cur.component() == old {
                        *cur = QualifiedName::new(new, cur.element()).unwrap();
                    }
                }
            }
            SystemEdit::Rename(RenameEdit::Port { old, new_name }) => {
                for cur in port_names.values_mut() {
                    if cur == old {
                        *cur = QualifiedName::new(old.component(), new_name).unwrap();
                    }
                }
            }
            _ => {}
        }
        current = next;
    }

    let hints = RenameHints {
        components: component_names
            .into_iter()
            .filter(|(old, cur)| old != cur)
            .collect(),
        ports: port_names
            .into_iter()
            .filter(|(old, cur)| old != cur)
            .collect(),
    };
    (current, hints)
}

fn propose_edit(sm: &SystemModel, rng: &mut Rng, fresh: &mut usize) -> Option<SystemEdit> {
    let pick_component = |rng: &mut Rng| {
        if sm.components().is_empty() {
            None
        } else {
            Some(sm.components()[rng.below(sm.components().len())].name.clone())
        }
    };
    let pick_port = |rng: &mut Rng| {
        if sm.ports().is_empty() {
            None
        } else {
            Some(sm.ports()[rng.below(sm.ports().len())].qualified())
        }
    };
    match rng.below(9) {
        0 => Some(SystemEdit::AddComponent {
            name: fresh_name(sm, "a", fresh),
        }),
        1 => pick_component(rng).map(|name| SystemEdit::RemoveComponent { name }),
        2 => pick_component(rng).map(|owner| {
            let direction = if rng.chance(50) {
                Direction::In
            } else {
                Direction::Out
            };
            SystemEdit::AddPort {
                port: Port::new(owner, fresh_name(sm, "q", fresh), direction),
            }
        }),
        3 => pick_port(rng).map(|port| SystemEdit::RemovePort { port }),
        4 => {
            let mut pairs = Vec::new();
            for source in sm.ports().iter().filter(|p| p.direction == Direction::Out) {
                for target in sm.ports().iter().filter(|p| p.direction == Direction::In) {
                    if source.owner == target.owner
                        || sm.incoming_connection(&target.qualified()).is_some()
                    {
                        continue;
                    }
                    pairs.push((source.qualified(), target.qualified()));
                }
            }
            if pairs.is_empty() {
                return None;
            }
            let (source, target) = pairs[rng.below(pairs.len())].clone();
            Some(SystemEdit::AddConnection {
                connection: Connection::new(fresh_name(sm, "w", fresh), source, target),
            })
        }
        5 => {
            if sm.connections().is_empty() {
                None
            } else {
                Some(SystemEdit::RemoveConnection {
                    name: sm.connections()[rng.below(sm.connections().len())].name.clone(),
                })
            }
        }
        6 => pick_component(rng).map(|old| {
            SystemEdit::Rename(RenameEdit::Component {
                new: fresh_name(sm, "r", fresh),
                old,
            })
        }),
        7 => pick_port(rng).map(|old| {
            SystemEdit::Rename(RenameEdit::Port {
                new_name: fresh_name(sm, "r", fresh),
                old,
            })
        }),
        _ => {
            if sm.connections().is_empty() {
                None
            } else {
                let old = sm.connections()[rng.below(sm.connections().len())].name.clone();
                Some(SystemEdit::Rename(RenameEdit::Connection {
                    new: fresh_name(sm, "r", fresh),
                    old,
                }))
            }
        }
    }
}

fn fresh_name(sm: &SystemModel, prefix: &str, fresh: &mut usize) -> String {
    loop {
        let name = format!("{prefix}{:02}", *fresh);
        *fresh += 1;
        let taken = sm.component(&name).is_some()
            || sm.connection(&name).is_some()
            || sm.ports().iter().any(|p| p.name == name);
        if !taken {
            return name;
        }
    }
}
