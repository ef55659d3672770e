use std::fmt::Write as _;

use ppcsat::feasibility::FeasibilityReport;

use crate::output::fmt_sig;

/// Human-readable feasibility report, one aligned `label  value` per line.
pub fn render(report: &FeasibilityReport<f64>) -> String {
    let c = &report.constants;
    let pic = &report.pic;
    let ppc = &report.ppc;
    let verdict = if report.feasible() {
        "feasible"
    } else {
        "INFEASIBLE"
    };

    let sections: [(&str, Vec<(&str, String)>); 4] = [
        (
            "bound constants",
            vec![
                ("cbar1", fmt_sig(c.cbar1)),
                ("cbar2", fmt_sig(c.cbar2)),
                ("c1", fmt_sig(c.c1)),
                ("c2", fmt_sig(c.c2)),
                ("c3", fmt_sig(c.c3)),
                ("xd_bar", fmt_sig(report.xd_bar)),
            ],
        ),
        (
            "input constraint",
            vec![
                ("u_bar", fmt_sig(report.u_bar)),
                ("threshold", fmt_sig(pic.threshold)),
                ("margin", fmt_sig(pic.margin)),
                ("status", pic.status.label().to_string()),
            ],
        ),
        (
            "performance constraint",
            vec![
                ("r0", fmt_sig(report.r0)),
                ("psi0", fmt_sig(report.psi0)),
                (
                    "window",
                    format!("[{}, {}]", fmt_sig(ppc.lower), fmt_sig(ppc.upper)),
                ),
                ("margin lower", fmt_sig(ppc.margin_lower)),
                ("margin upper", fmt_sig(ppc.margin_upper)),
                ("status", ppc.status.label().to_string()),
            ],
        ),
        ("verdict", vec![("design", verdict.to_string())]),
    ];

    let width = sections
        .iter()
        .flat_map(|(_, rows)| rows.iter().map(|(k, _)| k.len()))
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    for (i, (title, rows)) in sections.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "{title}");
        for (k, v) in rows {
            let _ = writeln!(out, "  {k:<width$}  {v}");
        }
    }
    out
}
