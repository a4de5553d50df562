use serde::{Deserialize, Serialize};

/// Numerical thresholds used across the pipeline. Every field can be overridden from a
/// run configuration or the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative residual gate for Sylvester and Lyapunov solves.
    pub residual: f64,
    /// Relative pivot threshold for dense linear solves.
    pub pivot: f64,
    /// Relative pivot threshold for detecting overlapping spectra in Sylvester solves.
    pub overlap: f64,
    /// Largest Hermiticity defect accepted before extracting a magnetization vector.
    pub hermitian: f64,
    /// Above `z * min Re(a_j)` this value, the resolvent is inverted in its decaying form.
    pub stable_switch: f64,
    /// Minimum distance from a pole for transmission and Jost evaluations.
    pub pole: f64,
    /// Gate on `| |m| - 1 |`.
    pub norm: f64,
    /// Gate on `|m - e3|` at the decay boundary.
    pub boundary: f64,
    /// Gate on the finite-difference residual of the field equation.
    pub pde: f64,
    /// Gate on unimodularity and reflection defects of the scattering roundtrip.
    pub scatter: f64,
    /// Gate on the discretized Marchenko oracle against the closed form.
    pub oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-10,
            pivot: 1e-14,
            overlap: 1e-12,
            hermitian: 1e-6,
            stable_switch: 0.0,
            pole: 1e-8,
            norm: 1e-9,
            boundary: 1e-8,
            pde: 1e-3,
            scatter: 1e-4,
            oracle: 1e-5,
        }
    }
}

impl Tolerances {
    /// Names accepted by [`Tolerances::set`].
    pub const NAMES: [&'static str; 11] = [
        "residual",
        "pivot",
        "overlap",
        "hermitian",
        "stable_switch",
        "pole",
        "norm",
        "boundary",
        "pde",
        "scatter",
        "oracle",
    ];

    /// Sets a tolerance by name. Returns `false` for unknown names.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let slot = match name.replace('-', "_").as_str() {
            "residual" => &mut self.residual,
            "pivot" => &mut self.pivot,
            "overlap" => &mut self.overlap,
            "hermitian" => &mut self.hermitian,
            "stable_switch" => &mut self.stable_switch,
            "pole" => &mut self.pole,
            "norm" => &mut self.norm,
            "boundary" => &mut self.boundary,
            "pde" => &mut self.pde,
            "scatter" => &mut self.scatter,
            "oracle" => &mut self.oracle,
            _ => return false,
        };
        *slot = value;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_by_name() {
        let mut t = Tolerances::default();
        for name in Tolerances::NAMES {
            assert!(t.set(name, 0.5), "{name}");
        }
        assert!(t.set("stable-switch", 3.0));
        assert_eq!(t.stable_switch, 3.0);
        assert!(!t.set("nope", 1.0));
    }

    #[test]
    fn partial_json_keeps_defaults() {
        let t: Tolerances = serde_json::from_str(r#"{"pde": 0.01}"#).unwrap();
        assert_eq!(t.pde, 0.01);
        assert_eq!(t.norm, Tolerances::default().norm);
        assert!(serde_json::from_str::<Tolerances>(r#"{"bogus": 1}"#).is_err());
    }
}
