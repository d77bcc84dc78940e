//! A small three-component pipeline with a matching fault-tree model, used
//! across tests and documentation.
//!
//! The system is `c1 → c2` and `c1 → c3`: `c1` reads the boundary input
//! `in1` and feeds `c2.in2` (via `con1` from `out1`) and `c3.in3` (via
//! `con2` from `out2`). The safety model mirrors it with failure ports
//! `a…j` and basic events `w, x, y, z`.

use alloc::vec;

use crate::ident::QualifiedName;
use crate::safety::{
    BasicEvent, BooleanExpr, FailureConnection, FailurePort, SafetyAnalysisModel, SamComponent,
};
use crate::system::{Component, Connection, Direction, Port, SystemModel};

fn q(s: &str) -> QualifiedName {
    QualifiedName::parse(s).expect("sample names are well-formed")
}

/// The example system: three components, seven ports, two connections.
pub fn pipeline_system() -> SystemModel {
    SystemModel::build(
        vec![
            Component::new("c1"),
            Component::new("c2"),
            Component::new("c3"),
        ],
        vec![
            Port::new("c1", "in1", Direction::In),
            Port::new("c1", "out1", Direction::Out),
            Port::new("c1", "out2", Direction::Out),
            Port::new("c2", "in2", Direction::In),
            Port::new("c2", "out3", Direction::Out),
            Port::new("c3", "in3", Direction::In),
            Port::new("c3", "out4", Direction::Out),
        ],
        vec![
            Connection::new("con1", q("c1.out1"), q("c2.in2")),
            Connection::new("con2", q("c1.out2"), q("c3.in3")),
        ],
    )
    .expect("sample system is valid")
}

/// The matching fault-tree model.
///
/// * `c1`: events `w`, `x`; in port `a` (traces `in1`); out ports `b`, `c`
///   (both trace `out1`, modes omission/commission) and `d` (traces
///   `out2`); definitions `b = a & w`, `c = a`, `d = a | x`.
/// * `c2`: event `y`; in ports `e`, `f` (both trace `in2`); out ports `h`,
///   `i` (both trace `out3`); definitions `h = e | y`, `i = f`.
/// * `c3`: event `z`; in port `g` (traces `in3`); out port `j` (traces
///   `out4`); definition `j = g & z`.
/// * Propagation: `con1'` carries `b → e`, `con2'` carries `c → f`,
///   `con3'` carries `d → g`.
pub fn pipeline_safety() -> SafetyAnalysisModel {
    let mut c1 = SamComponent::new("c1");
    c1.events = vec![BasicEvent::new("w"), BasicEvent::new("x")];
    c1.failure_ports = vec![
        FailurePort::new("a", Direction::In, q("c1.in1")),
        FailurePort::new("b", Direction::Out, q("c1.out1")),
        FailurePort::new("c", Direction::Out, q("c1.out1")).with_mode("commission"),
        FailurePort::new("d", Direction::Out, q("c1.out2")),
    ];
    c1.definitions.insert(
        "b".into(),
        Some(BooleanExpr::and(vec![
            BooleanExpr::in_port("a"),
            BooleanExpr::event("w"),
        ])),
    );
    c1.definitions
        .insert("c".into(), Some(BooleanExpr::in_port("a")));
    c1.definitions.insert(
        "d".into(),
        Some(BooleanExpr::or(vec![
            BooleanExpr::in_port("a"),
            BooleanExpr::event("x"),
        ])),
    );

    let mut c2 = SamComponent::new("c2");
    c2.events = vec![BasicEvent::new("y")];
    c2.failure_ports = vec![
        FailurePort::new("e", Direction::In, q("c2.in2")),
        FailurePort::new("f", Direction::In, q("c2.in2")).with_mode("commission"),
        FailurePort::new("h", Direction::Out, q("c2.out3")),
        FailurePort::new("i", Direction::Out, q("c2.out3")).with_mode("commission"),
    ];
    c2.definitions.insert(
        "h".into(),
        Some(BooleanExpr::or(vec![
            BooleanExpr::in_port("e"),
            BooleanExpr::event("y"),
        ])),
    );
    c2.definitions
        .insert("i".into(), Some(BooleanExpr::in_port("f")));

    let mut c3 = SamComponent::new("c3");
    c3.events = vec![BasicEvent::new("z")];
    c3.failure_ports = vec![
        FailurePort::new("g", Direction::In, q("c3.in3")),
        FailurePort::new("j", Direction::Out, q("c3.out4")),
    ];
    c3.definitions.insert(
        "j".into(),
        Some(BooleanExpr::and(vec![
            BooleanExpr::in_port("g"),
            BooleanExpr::event("z"),
        ])),
    );

    SafetyAnalysisModel::build(
        vec![c1, c2, c3],
        vec![
            FailureConnection::new("con1'", q("c1.b"), q("c2.e")),
            FailureConnection::new("con2'", q("c1.c"), q("c2.f")),
            FailureConnection::new("con3'", q("c1.d"), q("c3.g")),
        ],
    )
    .expect("sample safety model is valid")
}
