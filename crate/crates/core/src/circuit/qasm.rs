//! OpenQASM 3 text export.

use std::fmt::Write;

use super::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};

const RZX_DEF: &str = "gate rzx(theta) a, b { h b; cx a, b; rz(theta) b; cx a, b; h b; }";
const ECR_DEF: &str = "gate ecr a, b { rzx(pi/4) a, b; x a; rzx(-pi/4) a, b; }";
const RZZ_DEF: &str = "gate rzz(theta) a, b { cx a, b; rz(theta) b; cx a, b; }";

fn statement(g: &Gate) -> Result<String> {
    let qs: Vec<String> = g.qubits.iter().map(|q| format!("q[{q}]")).collect();
    let args = qs.join(", ");
    Ok(match g.kind {
        GateKind::Unitary => return Err(Error::UnconvertibleGate(format!(
            "unitary on qubits {:?} must be synthesized before export",
            g.qubits
        ))),
        GateKind::Barrier => format!("barrier {args};"),
        kind if g.params.is_empty() => format!("{} {args};", kind.name()),
        kind => {
            let ps: Vec<String> = g.params.iter().map(|p| format!("{p}")).collect();
            format!("{}({}) {args};", kind.name(), ps.join(", "))
        }
    })
}

/// Serialise a circuit. X/Y measurements are lowered to explicit rotations first.
pub fn to_qasm3(circuit: &Circuit) -> Result<String> {
    let circ = circuit.lower_measurements();
    let uses = |k: GateKind| circ.gates().iter().any(|g| g.kind == k);
    let mut out = String::new();
    out.push_str("OPENQASM 3.0;\n");
    out.push_str("include \"stdgates.inc\";\n");
    if uses(GateKind::ECR) {
        writeln!(out, "{RZX_DEF}").unwrap();
        writeln!(out, "{ECR_DEF}").unwrap();
    }
    if uses(GateKind::RZZ) {
        writeln!(out, "{RZZ_DEF}").unwrap();
    }
    writeln!(out, "qubit[{}] q;", circ.n_qubits()).unwrap();
    if circ.n_clbits() > 0 {
        writeln!(out, "bit[{}] c;", circ.n_clbits()).unwrap();
    }
    for g in circ.gates() {
        out.push_str(&statement(g)?);
        out.push('\n');
    }
    for m in circ.measurements() {
        writeln!(out, "c[{}] = measure q[{}];", m.clbit, m.qubit).unwrap();
    }
    Ok(out)
}
