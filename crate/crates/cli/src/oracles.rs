//! Self-checks of the special functions and the rectenna model against
//! independent references.

use std::f64::consts::SQRT_2;
use std::fmt::Write;

use swipt_core::{
    bessel_i0, bessel_i1, delivered_power_metric, delivered_power_metric_gradient,
    invert_power_threshold, power_threshold, time_average_exponential, Complex64,
    ConstellationMetricInput, QuadratureSpec, RectennaParams,
};

/// Quadrature size at and above which the tight tolerance applies.
pub const FULL_POINTS: usize = 4096;
const TIGHT_TOL: f64 = 1e-8;
const COARSE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    pub points: usize,
    /// Relative fault injected into the closed-form `I0` reference.
    pub perturb_i0: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            points: FULL_POINTS,
            perturb_i0: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleCase {
    pub suite: &'static str,
    pub inputs: String,
    pub value: f64,
    pub reference: f64,
    pub tol: f64,
}

impl OracleCase {
    pub fn rel_err(&self) -> f64 {
        let diff = (self.value - self.reference).abs();
        if self.reference == 0.0 {
            diff
        } else {
            diff / self.reference.abs()
        }
    }

    pub fn passed(&self) -> bool {
        self.rel_err() <= self.tol
    }
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub cases: Vec<OracleCase>,
    pub quadrature_tol: f64,
    pub coarse: bool,
}

impl OracleReport {
    pub fn all_passed(&self) -> bool {
        self.cases.iter().all(OracleCase::passed)
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        if self.coarse {
            let _ = writeln!(
                out,
                "note: fewer than {FULL_POINTS} quadrature points, using looser tolerance {:.0e}",
                self.quadrature_tol
            );
        }
        let _ = writeln!(
            out,
            "{:<16} {:<34} {:>24} {:>24} {:>9} {:>7}  result",
            "suite", "inputs", "value", "reference", "rel_err", "tol"
        );
        for c in &self.cases {
            let _ = writeln!(
                out,
                "{:<16} {:<34} {:>24.16e} {:>24.16e} {:>9.1e} {:>7.0e}  {}",
                c.suite,
                c.inputs,
                c.value,
                c.reference,
                c.rel_err(),
                c.tol,
                if c.passed() { "PASS" } else { "FAIL" }
            );
        }
        let failed = self.cases.iter().filter(|c| !c.passed()).count();
        let _ = writeln!(out, "{} checks, {failed} failed", self.cases.len());
        out
    }
}

/// Arbitrary-precision values of I0 and I1.
const FROZEN: [(f64, f64, f64); 5] = [
    (1.0, 1.2660658777520084, 0.565159103992485),
    (10.0, 2815.7166284662544, 2670.9883037012547),
    (35.0, 107338818494514.06, 105794126051896.27),
    (50.0, 2.9325537838493363e20, 2.903078590103557e20),
    (0.0, 1.0, 0.0),
];

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

pub fn run_oracles(opts: &OracleOptions) -> Result<OracleReport, String> {
    let mut cases = Vec::new();

    for (x, i0, i1) in FROZEN {
        cases.push(OracleCase {
            suite: "bessel-frozen",
            inputs: format!("I0({x})"),
            value: bessel_i0(x).map_err(err)?,
            reference: i0,
            tol: 1e-12,
        });
        cases.push(OracleCase {
            suite: "bessel-frozen",
            inputs: format!("I1({x})"),
            value: bessel_i1(x).map_err(err)?,
            reference: i1,
            tol: 1e-12,
        });
    }

    let coarse = opts.points < FULL_POINTS;
    let quadrature_tol = if coarse { COARSE_TOL } else { TIGHT_TOL };
    let spec = QuadratureSpec::with_points(opts.points).map_err(err)?;
    let symbols = [
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.3, -0.4),
        Complex64::new(-2.0, 1.5),
        Complex64::new(3.0, 4.0),
    ];
    for x in symbols {
        for b in [0.5, 1.0, 2.0] {
            let closed = bessel_i0(SQRT_2 * b * x.norm()).map_err(err)? * (1.0 + opts.perturb_i0);
            cases.push(OracleCase {
                suite: "quadrature",
                inputs: format!("x={x:.2} B={b} n={}", opts.points),
                value: time_average_exponential(x, b, &spec).map_err(err)?,
                reference: closed,
                tol: quadrature_tol,
            });
        }
    }

    for x in [0.5, 3.0, 12.0, 40.0] {
        let h = 1e-5 * x;
        let fd = (bessel_i0(x + h).map_err(err)? - bessel_i0(x - h).map_err(err)?) / (2.0 * h);
        cases.push(OracleCase {
            suite: "dI0/dx=I1",
            inputs: format!("x={x} h={h:.0e}"),
            value: fd,
            reference: bessel_i1(x).map_err(err)?,
            tol: 1e-6,
        });
    }

    let rect = RectennaParams::default();
    let points = vec![
        Complex64::new(1.2, 0.1),
        Complex64::new(-0.3, 0.8),
        Complex64::new(0.05, -0.02),
        Complex64::new(-1.1, -0.7),
    ];
    let probs = vec![0.1, 0.2, 0.3, 0.4];
    let grad = delivered_power_metric_gradient(
        &ConstellationMetricInput::new(points.clone(), probs.clone()).map_err(err)?,
        &rect,
    )
    .map_err(err)?;
    let h = 1e-5;
    for (i, g) in grad.iter().enumerate() {
        for (axis, dir, analytic) in [
            ("re", Complex64::new(h, 0.0), g.re),
            ("im", Complex64::new(0.0, h), g.im),
        ] {
            // Single-term differences keep roundoff from the other symbols out.
            let term = |x: Complex64| -> Result<f64, String> {
                let input = ConstellationMetricInput::new(vec![x], vec![1.0]).map_err(err)?;
                Ok(probs[i] * delivered_power_metric(&input, &rect).map_err(err)?)
            };
            let fd = (term(points[i] + dir)? - term(points[i] - dir)?) / (2.0 * h);
            cases.push(OracleCase {
                suite: "metric-gradient",
                inputs: format!("symbol {i} d/d{axis}"),
                value: analytic,
                reference: fd,
                tol: 1e-6,
            });
        }
    }

    for p_d in [1e-12, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6] {
        let v = power_threshold(p_d, &rect).map_err(err)?;
        cases.push(OracleCase {
            suite: "threshold-trip",
            inputs: format!("p_d={p_d:.0e} W"),
            value: invert_power_threshold(v, &rect).map_err(err)?,
            reference: p_d,
            tol: 1e-9,
        });
    }

    Ok(OracleReport {
        cases,
        quadrature_tol,
        coarse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let report = run_oracles(&OracleOptions::default()).unwrap();
        assert!(report.all_passed(), "{}", report.table());
        assert!(!report.coarse);
    }

    #[test]
    fn perturbed_reference_fails_quadrature_only() {
        let report = run_oracles(&OracleOptions {
            perturb_i0: 1e-3,
            ..Default::default()
        })
        .unwrap();
        assert!(!report.all_passed());
        assert!(report
            .cases
            .iter()
            .filter(|c| !c.passed())
            .all(|c| c.suite == "quadrature"));
    }

    #[test]
    fn coarse_grid_uses_looser_tolerance() {
        let report = run_oracles(&OracleOptions {
            points: 64,
            ..Default::default()
        })
        .unwrap();
        assert!(report.coarse);
        assert_eq!(report.quadrature_tol, COARSE_TOL);
        assert!(report.table().contains("looser tolerance"));
    }
}
