//! CSV writers.
//!
//! Trajectory columns: `t,xi1,...,xin,xd,err,psi,r,psi_r,u,sat`, where `xd`
//! is the reference, `err = xi1 - xd`, and `sat` is 1 where the control law
//! clamped its argument. Reals are printed with 9 significant digits, rows end
//! in a bare LF.

use std::io::Write;

use ppcsat::feasibility::FeasibilityReport;
use ppcsat::sim::Trajectory;

/// Formats `x` like C's `%.9g`.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    // The exponent after rounding to DIGITS significant digits.
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn trajectory_header(order: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=order).map(|i| format!("xi{i}")));
    h.extend(["xd", "err", "psi", "r", "psi_r", "u", "sat"].map(String::from));
    h
}

pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory<f64>) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record(trajectory_header(traj.order))?;
    let mut row = Vec::with_capacity(traj.order + 8);
    for s in &traj.samples {
        row.clear();
        row.push(fmt_sig(s.t));
        row.extend(s.state.iter().map(|&x| fmt_sig(x)));
        for v in [s.xd[0], s.err[0], s.psi, s.r, s.psi_r, s.u] {
            row.push(fmt_sig(v));
        }
        row.push(if s.saturated { "1" } else { "0" }.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `key,value` rows for every figure in a feasibility report.
pub fn report_rows(report: &FeasibilityReport<f64>) -> Vec<(&'static str, String)> {
    let c = &report.constants;
    vec![
        ("cbar1", fmt_sig(c.cbar1)),
        ("cbar2", fmt_sig(c.cbar2)),
        ("c1", fmt_sig(c.c1)),
        ("c2", fmt_sig(c.c2)),
        ("c3", fmt_sig(c.c3)),
        ("xd_bar", fmt_sig(report.xd_bar)),
        ("u_bar", fmt_sig(report.u_bar)),
        ("pic_threshold", fmt_sig(report.pic.threshold)),
        ("pic_margin", fmt_sig(report.pic.margin)),
        ("pic_status", report.pic.status.label().to_string()),
        ("r0", fmt_sig(report.r0)),
        ("psi0", fmt_sig(report.psi0)),
        ("psi0_lower", fmt_sig(report.ppc.lower)),
        ("psi0_upper", fmt_sig(report.ppc.upper)),
        ("psi0_margin_lower", fmt_sig(report.ppc.margin_lower)),
        ("psi0_margin_upper", fmt_sig(report.ppc.margin_upper)),
        ("ppc_status", report.ppc.status.label().to_string()),
        ("feasible", u8::from(report.feasible()).to_string()),
    ]
}

pub fn write_report_csv<W: Write>(out: W, report: &FeasibilityReport<f64>) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record(["key", "value"])?;
    for (k, v) in report_rows(report) {
        w.write_record([k, v.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// One line of `verify-bounds` output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub margin: f64,
    pub pass: bool,
}

pub fn write_trials<W: Write>(out: W, rows: &[TrialRow]) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record(["trial", "margin", "pass"])?;
    for r in rows {
        w.write_record([
            r.trial.to_string(),
            fmt_sig(r.margin),
            u8::from(r.pass).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printf_g_compatibility() {
        let cases = [
            (1.0, "1"),
            (0.59, "0.59"),
            (-0.978049536835, "-0.978049537"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (9.9999999996, "10"),
            (999999999.6, "1e+09"),
            (1e-300, "1e-300"),
            (-2.5e10, "-2.5e+10"),
            (0.1 + 0.2, "0.3"),
            (std::f64::consts::PI, "3.14159265"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_sig(x), want, "{x:e}");
        }
        assert_eq!(fmt_sig(f64::NAN), "nan");
        assert_eq!(fmt_sig(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn nine_digits_round_trip_closely() {
        for &x in &[1.0 / 3.0, 2.0f64.sqrt(), 6.02214076e23, -1.602e-19] {
            let back: f64 = fmt_sig(x).parse().unwrap();
            assert!((back - x).abs() <= 5e-9 * x.abs());
        }
    }

    #[test]
    fn header_layout() {
        assert_eq!(
            trajectory_header(2).join(","),
            "t,xi1,xi2,xd,err,psi,r,psi_r,u,sat"
        );
    }

    #[test]
    fn trial_rows_use_lf() {
        let mut buf = Vec::new();
        let rows = [TrialRow {
            trial: 0,
            margin: -0.25,
            pass: true,
        }];
        write_trials(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "trial,margin,pass\n0,-0.25,1\n"
        );
    }
}
