//! Bound constants and the input/performance feasibility conditions.
//!
//! Both conditions are strict. A scenario whose input bound or initial
//! amplitude lands exactly on a threshold is reported as [`Status::Boundary`],
//! which counts as infeasible.

use crate::perfspec::{PerformanceSpec, VirtualSpec};
use crate::plant::PlantModel;
use crate::scalar::{powu, Real};

/// Outcome of one strict inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Satisfied,
    /// Equality: excluded by the strict inequality.
    Boundary,
    Violated,
}

impl Status {
    fn from_margin<T: Real>(margin: T) -> Self {
        if margin > T::zero() {
            Status::Satisfied
        } else if margin == T::zero() {
            Status::Boundary
        } else {
            Status::Violated
        }
    }

    pub fn ok(self) -> bool {
        self == Status::Satisfied
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Satisfied => "ok",
            Status::Boundary => "boundary (infeasible)",
            Status::Violated => "violated",
        }
    }
}

/// `cbar1 = (2a - mu_r)((3a - mu_r)^{n-1} - (2a - mu_r)^{n-1})`,
/// `cbar2 = 2a((3a)^{n-1} - (2a)^{n-1})`; both zero for `n = 1`.
pub fn compute_cbars<T: Real>(a: T, mu_r: T, n: usize) -> (T, T) {
    let m = (n.max(1) - 1) as u32;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let h1 = two * a - mu_r;
    let cbar1 = h1 * (powu(three * a - mu_r, m) - powu(h1, m));
    let h2 = two * a;
    let cbar2 = h2 * (powu(three * a, m) - powu(h2, m));
    (cbar1, cbar2)
}

/// Constants of the bound `|r'| < psi_r0 c1 + psi_r_inf c2 + xd_bar c3 + d_bar + g u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants<T> {
    pub cbar1: T,
    pub cbar2: T,
    pub c1: T,
    pub c2: T,
    pub c3: T,
}

pub fn compute_constants<T: Real>(model: &PlantModel<T>, a: T, mu_r: T) -> BoundConstants<T> {
    let n = model.order();
    let m = (n - 1) as u32;
    let b = model.bounds();
    let kn = b.k_l * b.p_star.norm_factor::<T>(n);
    let two = T::lit(2.0);
    let (cbar1, cbar2) = compute_cbars(a, mu_r, n);
    let c1 = (cbar1 + kn * powu(two * a - mu_r, m)) / powu(a - mu_r, m);
    let c2 = (cbar2 + kn * powu(two * a, m)) / powu(a, m);
    let c3 = kn + T::one();
    BoundConstants {
        cbar1,
        cbar2,
        c1,
        c2,
        c3,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicCheck<T> {
    /// Smallest admissible input bound (exclusive).
    pub threshold: T,
    /// `u_bar - threshold`.
    pub margin: T,
    pub status: Status,
}

/// Input feasibility: `u_bar > (psi_r_inf c2 + xd_bar c3 + d_bar) / g_lo`.
pub fn check_pic<T: Real>(
    model: &PlantModel<T>,
    vspec: &VirtualSpec<T>,
    xd_bar: T,
    u_bar: T,
) -> PicCheck<T> {
    let k = compute_constants(model, vspec.a(), vspec.mu_r());
    let b = model.bounds();
    let threshold = (vspec.psi_r_inf() * k.c2 + xd_bar * k.c3 + b.d_bar) / b.g_lo;
    let margin = u_bar - threshold;
    PicCheck {
        threshold,
        margin,
        status: Status::from_margin(margin),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpcCheck<T> {
    /// `|r(0)| (a - mu)^{1-n}`.
    pub lower: T,
    /// `(g_lo u_bar - psi_r_inf c2 - xd_bar c3 - d_bar) / ((c1 + mu)(a - mu)^{n-1})`.
    pub upper: T,
    /// `psi0 - lower`.
    pub margin_lower: T,
    /// `upper - psi0`.
    pub margin_upper: T,
    pub status: Status,
}

impl<T: Real> PpcCheck<T> {
    /// No `psi0` can satisfy the window.
    pub fn window_empty(&self) -> bool {
        self.upper <= self.lower
    }
}

/// Performance feasibility: `lower < psi0 < upper`.
pub fn check_ppc<T: Real>(
    model: &PlantModel<T>,
    pps: &PerformanceSpec<T>,
    vspec: &VirtualSpec<T>,
    xd_bar: T,
    u_bar: T,
    r0: T,
) -> PpcCheck<T> {
    let n = model.order();
    let m = (n - 1) as u32;
    let a = vspec.a();
    let mu = pps.mu;
    let k = compute_constants(model, a, vspec.mu_r());
    let b = model.bounds();
    let scale = powu(a - mu, m);
    let lower = r0.abs() / scale;
    let upper = (b.g_lo * u_bar - vspec.psi_r_inf() * k.c2 - xd_bar * k.c3 - b.d_bar)
        / ((k.c1 + mu) * scale);
    let margin_lower = pps.psi0 - lower;
    let margin_upper = upper - pps.psi0;
    let status = match (
        Status::from_margin(margin_lower),
        Status::from_margin(margin_upper),
    ) {
        (Status::Satisfied, Status::Satisfied) => Status::Satisfied,
        (Status::Violated, _) | (_, Status::Violated) => Status::Violated,
        _ => Status::Boundary,
    };
    PpcCheck {
        lower,
        upper,
        margin_lower,
        margin_upper,
        status,
    }
}

/// Everything needed to judge a design before simulating it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport<T> {
    pub constants: BoundConstants<T>,
    pub xd_bar: T,
    pub u_bar: T,
    pub psi0: T,
    pub r0: T,
    pub pic: PicCheck<T>,
    pub ppc: PpcCheck<T>,
}

impl<T: Real> FeasibilityReport<T> {
    pub fn pic_ok(&self) -> bool {
        self.pic.status.ok()
    }

    pub fn ppc_ok(&self) -> bool {
        self.ppc.status.ok()
    }

    pub fn feasible(&self) -> bool {
        self.pic_ok() && self.ppc_ok()
    }
}

/// Runs both conditions for a design with initial filtered error `r0`.
pub fn assess<T: Real>(
    model: &PlantModel<T>,
    pps: &PerformanceSpec<T>,
    vspec: &VirtualSpec<T>,
    xd_bar: T,
    u_bar: T,
    r0: T,
) -> FeasibilityReport<T> {
    FeasibilityReport {
        constants: compute_constants(model, vspec.a(), vspec.mu_r()),
        xd_bar,
        u_bar,
        psi0: pps.psi0,
        r0,
        pic: check_pic(model, vspec, xd_bar, u_bar),
        ppc: check_ppc(model, pps, vspec, xd_bar, u_bar, r0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::perfspec::derive_vpc;
    use crate::plant::{builtin_example, NormIndex, PlantBounds};

    fn example() -> (PlantModel<f64>, PerformanceSpec<f64>, VirtualSpec<f64>) {
        let (plant, _) = builtin_example();
        let pps = PerformanceSpec::new(1.0, 0.01, 1.0).unwrap();
        let vspec = derive_vpc(&pps, 2.0, 2).unwrap();
        (plant, pps, vspec)
    }

    fn linear_plant(n: usize, k_l: f64) -> PlantModel<f64> {
        PlantModel::new(
            n,
            parse("0").unwrap(),
            parse("1").unwrap(),
            parse("0").unwrap(),
            PlantBounds {
                k_l,
                p_star: NormIndex::One,
                g_lo: 1.0,
                g_hi: 1.0,
                d_bar: 0.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn cbars_second_order() {
        assert_eq!(compute_cbars(2.0f64, 1.0, 2), (6.0, 8.0));
    }

    #[test]
    fn cbars_first_order_vanish() {
        assert_eq!(compute_cbars(2.0f64, 1.0, 1), (0.0, 0.0));
    }

    #[test]
    fn cbars_third_order() {
        assert_eq!(compute_cbars(2.0f64, 1.0, 3), (48.0, 80.0));
    }

    #[test]
    fn example_constants() {
        let (plant, _, _) = example();
        let k = compute_constants(&plant, 2.0, 1.0);
        assert_eq!((k.c1, k.c2, k.c3), (9.0, 6.0, 2.0));
    }

    #[test]
    fn constants_without_nonlinearity() {
        let k = compute_constants(&linear_plant(1, 0.0), 2.0, 1.0);
        assert_eq!((k.c1, k.c2, k.c3), (0.0, 0.0, 1.0));
    }

    #[test]
    fn constants_unit_lipschitz_third_pole() {
        // cbar1 = 5 (8 - 5) = 15, cbar2 = 6 (9 - 6) = 18, k_l n^{1/p*} = 2
        let k = compute_constants(&linear_plant(2, 1.0), 3.0, 1.0);
        assert_eq!((k.cbar1, k.cbar2), (15.0, 18.0));
        assert_eq!((k.c1, k.c2, k.c3), (12.5, 10.0, 3.0));
    }

    #[test]
    fn example_input_threshold() {
        let (plant, _, vspec) = example();
        let pic = check_pic(&plant, &vspec, 0.5, 6.0);
        assert!((pic.threshold - 0.81).abs() < 1e-12, "{}", pic.threshold);
        assert_eq!(pic.status, Status::Satisfied);
        assert!((pic.margin - 5.19).abs() < 1e-12);
    }

    #[test]
    fn threshold_vanishes_without_demands() {
        let plant = linear_plant(2, 0.5);
        let pps = PerformanceSpec::new(1.0, 1e-300, 1.0).unwrap();
        let vspec = derive_vpc(&pps, 2.0, 2).unwrap();
        let pic = check_pic(&plant, &vspec, 0.0, 1e-9);
        assert!(pic.threshold < 1e-290);
        assert!(pic.status.ok());
    }

    #[test]
    fn doubling_gain_bound_halves_threshold() {
        let (plant, _, vspec) = example();
        let mut b = *plant.bounds();
        b.g_lo *= 2.0;
        b.g_hi *= 2.0;
        let doubled = PlantModel::new(
            2,
            plant.f_expr().clone(),
            plant.g_expr().clone(),
            plant.d_expr().clone(),
            b,
        )
        .unwrap();
        let t1 = check_pic(&plant, &vspec, 0.5, 6.0).threshold;
        let t2 = check_pic(&doubled, &vspec, 0.5, 6.0).threshold;
        assert_eq!(t2, t1 / 2.0);
    }

    #[test]
    fn example_window_first_initial_state() {
        let (plant, pps, vspec) = example();
        let ppc = check_ppc(&plant, &pps, &vspec, 0.5, 6.0, 0.59);
        assert!((ppc.lower - 0.59).abs() < 1e-15);
        assert!((ppc.upper - 1.038).abs() < 1e-12, "{}", ppc.upper);
        assert_eq!(ppc.status, Status::Satisfied);
    }

    #[test]
    fn example_window_second_initial_state() {
        let (plant, pps, vspec) = example();
        let ppc = check_ppc(&plant, &pps, &vspec, 0.5, 6.0, 0.99);
        assert!((ppc.lower - 0.99).abs() < 1e-15);
        assert!(ppc.status.ok());
        assert!(ppc.margin_lower < 0.011);
        // beyond x1(0) = 0.6 the lower end passes psi0
        let ppc = check_ppc(&plant, &pps, &vspec, 0.5, 6.0, 2.0 * 0.61 - 0.21);
        assert_eq!(ppc.status, Status::Violated);
    }

    #[test]
    fn zero_initial_filtered_error() {
        let (plant, pps, vspec) = example();
        let ppc = check_ppc(&plant, &pps, &vspec, 0.5, 6.0, 0.0);
        assert_eq!(ppc.lower, 0.0);
        assert!(ppc.status.ok());
    }

    #[test]
    fn equality_is_boundary() {
        let (plant, pps, vspec) = example();
        let threshold = check_pic(&plant, &vspec, 0.5, 6.0).threshold;
        let pic = check_pic(&plant, &vspec, 0.5, threshold);
        assert_eq!(pic.status, Status::Boundary);
        assert!(!pic.status.ok());
        let ppc = check_ppc(&plant, &pps, &vspec, 0.5, 6.0, 1.0);
        assert_eq!(ppc.status, Status::Boundary);
    }

    #[test]
    fn infeasible_input_empties_window() {
        let (plant, pps, vspec) = example();
        let report = assess(&plant, &pps, &vspec, 0.5, 0.5, 0.59);
        assert_eq!(report.pic.status, Status::Violated);
        assert!(report.ppc.upper <= 0.0);
        assert!(report.ppc.window_empty());
        assert!(!report.feasible());
    }

    #[test]
    fn report_for_example() {
        let (plant, pps, vspec) = example();
        let report = assess(&plant, &pps, &vspec, 0.5, 6.0, 0.59);
        assert!(report.feasible());
        assert_eq!(report.constants.c1, 9.0);
        assert_eq!(report, assess(&plant, &pps, &vspec, 0.5, 6.0, 0.59));
    }
}
