//! Table and CSV renderings. Numbers use nine significant digits; CSV is
//! unquoted with LF line endings.

use std::fmt::Write;

use cyberins::contract::Constraint;
use cyberins::scenario::{format_sig9 as n, write_sweep_csv};

use crate::report::{BgneOutput, PolicyOutput, SimulateOutput, SpeOutput, SweepOutput};

/// Left-aligned columns separated by two spaces, no trailing whitespace.
fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut l = String::new();
        for (cell, w) in cells.zip(&widths) {
            let _ = write!(l, "{cell:<w$}  ");
        }
        out.push_str(l.trim_end());
        out.push('\n');
    };
    line(&mut header.iter().copied());
    for row in rows {
        line(&mut row.iter().map(String::as_str));
    }
    out
}

fn kv(rows: Vec<(&str, String)>) -> String {
    let rows: Vec<Vec<String>> = rows
        .into_iter()
        .map(|(k, v)| vec![k.to_string(), v])
        .collect();
    table(&["quantity", "value"], &rows)
}

fn opt(x: Option<f64>) -> String {
    x.map(n).unwrap_or_default()
}

fn constraints(cs: &[Constraint]) -> String {
    cs.iter().map(|c| c.name()).collect::<Vec<_>>().join(";")
}

pub trait Render {
    fn table(&self) -> String;
    fn csv(&self) -> String;
}

impl Render for SpeOutput {
    fn table(&self) -> String {
        let r = &self.spe.report;
        let mut rows = vec![
            ("p_u*", n(r.actions.protection)),
            ("p_a*", n(r.actions.attack)),
            ("ratio p_a*/p_u*", opt(r.actions.ratio())),
            ("R*", n(r.risk)),
            ("E(X)", n(r.expected_direct_loss)),
            ("E(xi)", n(r.expected_effective_loss)),
            ("E(sX)", n(r.expected_payout)),
            ("s", n(r.policy.coverage)),
            ("T", n(r.policy.premium)),
            ("margin", n(r.margin)),
            ("feasible", r.feasible.to_string()),
            ("interior", r.interior.to_string()),
            ("near_boundary", r.near_boundary.to_string()),
            (
                "outside_interior_analysis",
                self.spe.outside_interior_analysis.to_string(),
            ),
        ];
        if let Some(num) = &self.spe.numerical {
            rows.push(("iterations", num.iterations.to_string()));
            rows.push(("damping", n(num.damping)));
        }
        kv(rows)
    }

    fn csv(&self) -> String {
        let r = &self.spe.report;
        format!(
            "p_u,p_a,ratio,risk,expected_direct_loss,expected_effective_loss,expected_payout,s,t,margin,feasible,interior,near_boundary,outside_interior_analysis\n\
             {},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            n(r.actions.protection),
            n(r.actions.attack),
            opt(r.actions.ratio()),
            n(r.risk),
            n(r.expected_direct_loss),
            n(r.expected_effective_loss),
            n(r.expected_payout),
            n(r.policy.coverage),
            n(r.policy.premium),
            n(r.margin),
            r.feasible,
            r.interior,
            r.near_boundary,
            self.spe.outside_interior_analysis,
        )
    }
}

impl Render for PolicyOutput {
    fn table(&self) -> String {
        let o = &self.optimum;
        let mut rows = vec![
            ("s*", n(o.policy.coverage)),
            ("T*", n(o.policy.premium)),
            ("J_i*", n(o.objective)),
            ("binding", constraints(&o.binding)),
        ];
        if let Some(g) = &self.given {
            let v = &g.verdict;
            rows.extend([
                ("given s", n(g.policy.coverage)),
                ("given T", n(g.policy.premium)),
                ("given J_i", n(g.objective)),
                ("IR-u", v.ir_user.to_string()),
                ("IC-u", v.ic_user.to_string()),
                ("IR-i", v.ir_insurer.to_string()),
                ("F-i", v.feasibility_insurer.to_string()),
                ("given binding", constraints(&v.binding)),
            ]);
        }
        kv(rows)
    }

    fn csv(&self) -> String {
        let o = &self.optimum;
        format!(
            "s_opt,t_opt,objective,binding\n{},{},{},{}\n",
            n(o.policy.coverage),
            n(o.policy.premium),
            n(o.objective),
            constraints(&o.binding)
        )
    }
}

impl Render for BgneOutput {
    fn table(&self) -> String {
        let b = &self.bgne;
        kv(vec![
            ("s*", n(b.policy.coverage)),
            ("T*", n(b.policy.premium)),
            ("p_u*", n(b.actions.protection)),
            ("p_a*", n(b.actions.attack)),
            ("R*", n(b.report.risk)),
            ("E(X)", n(b.report.expected_direct_loss)),
            ("E(xi)", n(b.report.expected_effective_loss)),
            ("E(sX)", n(b.report.expected_payout)),
            ("J_i*", n(b.insurer_objective)),
            ("K*", n(b.user_payoff)),
            ("T* - s*R*", n(b.zero_profit_check)),
        ])
    }

    fn csv(&self) -> String {
        let b = &self.bgne;
        format!(
            "s,t,p_u,p_a,risk,expected_direct_loss,expected_effective_loss,expected_payout,insurer_objective,user_payoff,zero_profit_check\n\
             {},{},{},{},{},{},{},{},{},{},{}\n",
            n(b.policy.coverage),
            n(b.policy.premium),
            n(b.actions.protection),
            n(b.actions.attack),
            n(b.report.risk),
            n(b.report.expected_direct_loss),
            n(b.report.expected_effective_loss),
            n(b.report.expected_payout),
            n(b.insurer_objective),
            n(b.user_payoff),
            n(b.zero_profit_check),
        )
    }
}

impl Render for SimulateOutput {
    fn table(&self) -> String {
        let mut out = format!(
            "risk {}  coverage {}  seed {}  insurable {}\n",
            n(self.risk),
            n(self.coverage),
            self.seed,
            self.insurable
        );
        if let Some(div) = &self.divergence {
            let rows: Vec<Vec<String>> = div
                .stages
                .iter()
                .map(|&(k, v)| vec![k.to_string(), n(v)])
                .collect();
            out.push_str(&table(&["samples", "running mean of e^{tX}"], &rows));
            let _ = writeln!(
                out,
                "growth {}  stabilized {}",
                n(div.growth),
                div.stabilized
            );
        } else {
            let rows: Vec<Vec<String>> = self
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.quantity.clone(),
                        n(r.analytic),
                        n(r.estimate.point),
                        n(r.estimate.half_width),
                        r.estimate.sample_count.to_string(),
                        r.verdict.name().to_string(),
                    ]
                })
                .collect();
            out.push_str(&table(
                &[
                    "quantity",
                    "analytic",
                    "estimate",
                    "ci_half_width",
                    "samples",
                    "verdict",
                ],
                &rows,
            ));
        }
        if let Some(a) = &self.advisory {
            let _ = writeln!(out, "advisory: {a}");
        }
        out
    }

    /// Comparison rows when insurable, the divergence stages otherwise.
    fn csv(&self) -> String {
        let mut out = String::new();
        if let Some(div) = &self.divergence {
            out.push_str("samples,running_mean\n");
            for &(k, v) in &div.stages {
                let _ = writeln!(out, "{k},{}", n(v));
            }
        } else {
            out.push_str("quantity,analytic,estimate,half_width,samples,verdict\n");
            for r in &self.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.quantity,
                    n(r.analytic),
                    n(r.estimate.point),
                    n(r.estimate.half_width),
                    r.estimate.sample_count,
                    r.verdict.name()
                );
            }
        }
        out
    }
}

impl Render for SweepOutput {
    fn table(&self) -> String {
        let csv = self.csv();
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
        let rows: Vec<Vec<String>> = lines
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect();
        table(&header, &rows)
    }

    fn csv(&self) -> String {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, self.param, &self.rows).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}
