//! Plain-text LP export in the CPLEX `.lp` layout:
//!
//! ```text
//! \ optional comment
//! Maximize
//!  obj: 0.25 p_0 + 0.5 r_0_0_0
//! Subject To
//!  c0: r_0_0_0 + r_1_0_0 = 1
//! Bounds
//!  p_0 >= 0
//! End
//! ```
//!
//! Coefficients are written with `Display` of the scalar type; rationals
//! appear as `a/b` and are meant for reading, not re-import.

use std::fmt::Write;

use crate::lp::model::LpModel;
use crate::scalar::Scalar;

fn push_linear<T: Scalar>(out: &mut String, terms: impl Iterator<Item = (usize, T)>, names: &[String]) {
    let mut first = true;
    for (j, c) in terms {
        if c.is_zero() {
            continue;
        }
        let (sign, mag) = if c.is_negative() { ("-", -c) } else { ("+", c) };
        if first {
            if sign == "-" {
                out.push_str(" -");
            }
        } else {
            let _ = write!(out, " {sign}");
        }
        if mag.is_one() {
            let _ = write!(out, " {}", names[j]);
        } else {
            let _ = write!(out, " {mag} {}", names[j]);
        }
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
}

pub fn to_lp_format<T: Scalar>(model: &LpModel<T>, comment: Option<&str>) -> String {
    let names = model.var_names();
    let mut out = String::new();
    if let Some(c) = comment {
        for line in c.lines() {
            let _ = writeln!(out, "\\ {line}");
        }
    }
    out.push_str("Maximize\n obj:");
    push_linear(&mut out, model.objective().iter().cloned().enumerate(), names);
    out.push_str("\nSubject To\n");
    for (i, c) in model.constraints().iter().enumerate() {
        match &c.name {
            Some(n) => {
                let _ = write!(out, " {n}:");
            }
            None => {
                let _ = write!(out, " c{i}:");
            }
        }
        push_linear(&mut out, c.terms.iter().cloned(), names);
        let _ = writeln!(out, " {} {}", c.relation.symbol(), c.rhs);
    }
    out.push_str("Bounds\n");
    for (j, lb) in model.lower_bounds().iter().enumerate() {
        let _ = writeln!(out, " {} >= {lb}", names[j]);
    }
    out.push_str("End\n");
    out
}
