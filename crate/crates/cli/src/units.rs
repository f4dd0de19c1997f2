//! Energies with unit suffixes, normalized to MeV.

use compton_core::ELECTRON_MASS;
use serde::Deserialize;

/// An energy as written in a scenario: a bare number (MeV) or a string such
/// as `"180 keV"`, `"2.5eV"`, `"50 GeV"` or `"m"` (electron rest energy).
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum EnergySpec {
    Mev(f64),
    Text(String),
}

impl EnergySpec {
    pub fn mev(&self) -> Result<f64, String> {
        match self {
            EnergySpec::Mev(v) => Ok(*v),
            EnergySpec::Text(s) => parse_energy(s),
        }
    }
}

pub fn parse_energy(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if t == "m" || t == "m_e" {
        return Ok(ELECTRON_MASS);
    }
    let split = t.find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E').unwrap_or(t.len());
    // "eV" starts with an 'e' that the number scan skipped over
    let split = if t[..split].ends_with('e') && t[split..].starts_with('V') { split - 1 } else { split };
    let (num, unit) = t.split_at(split);
    let value: f64 = num.trim().parse().map_err(|_| format!("cannot read energy \"{s}\""))?;
    // divide for the small units so "2.5 eV" lands on the nearest double to 2.5e-6
    match unit.trim() {
        "" | "MeV" => Ok(value),
        "eV" => Ok(value / 1e6),
        "keV" => Ok(value / 1e3),
        "GeV" => Ok(value * 1e3),
        "TeV" => Ok(value * 1e6),
        "m" => Ok(value * ELECTRON_MASS),
        u => Err(format!("unknown energy unit \"{u}\" in \"{s}\"")),
    }
}

/// A photon threshold: an energy, or a fraction of the beam written as
/// `"omega0/50"` or `"e_i/100"`.
#[derive(Clone, Debug, PartialEq)]
pub enum CutoffSpec {
    Fixed(f64),
    OfOmega0(f64),
    OfElectron(f64),
}

impl CutoffSpec {
    pub fn parse(spec: &EnergySpec) -> Result<Self, String> {
        if let EnergySpec::Text(s) = spec {
            if let Some((name, den)) = s.split_once('/') {
                let den: f64 = den.trim().parse().map_err(|_| format!("cannot read divisor in \"{s}\""))?;
                if !(den > 0.0) {
                    return Err(format!("divisor must be positive in \"{s}\""));
                }
                return match name.trim() {
                    "omega0" => Ok(CutoffSpec::OfOmega0(den)),
                    "e_i" | "E_i" => Ok(CutoffSpec::OfElectron(den)),
                    other => Err(format!("cutoff can be a fraction of omega0 or e_i, not \"{other}\"")),
                };
            }
        }
        spec.mev().map(CutoffSpec::Fixed)
    }

    pub fn resolve(&self, omega0: f64, e_i: f64) -> f64 {
        match *self {
            CutoffSpec::Fixed(v) => v,
            CutoffSpec::OfOmega0(d) => omega0 / d,
            CutoffSpec::OfElectron(d) => e_i / d,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes() {
        assert_eq!(parse_energy("180 keV").unwrap(), 0.18);
        assert_eq!(parse_energy("2.5eV").unwrap(), 2.5e-6);
        assert_eq!(parse_energy("50 GeV").unwrap(), 5e4);
        assert_eq!(parse_energy("1e-2 MeV").unwrap(), 1e-2);
        assert_eq!(parse_energy("3.2").unwrap(), 3.2);
        assert_eq!(parse_energy("1e3eV").unwrap(), 1e-3);
        assert_eq!(parse_energy("m").unwrap(), ELECTRON_MASS);
        assert_eq!(parse_energy("2 m").unwrap(), 2.0 * ELECTRON_MASS);
        assert!(parse_energy("5 furlongs").is_err());
        assert!(parse_energy("keV").is_err());
    }

    #[test]
    fn cutoffs() {
        let c = CutoffSpec::parse(&EnergySpec::Text("omega0/50".into())).unwrap();
        assert_eq!(c.resolve(0.18, ELECTRON_MASS), 0.18 / 50.0);
        let c = CutoffSpec::parse(&EnergySpec::Text("e_i/100".into())).unwrap();
        assert_eq!(c.resolve(2.5e-6, 5e4), 500.0);
        let c = CutoffSpec::parse(&EnergySpec::Text("3.6 keV".into())).unwrap();
        assert_eq!(c, CutoffSpec::Fixed(3.6e-3));
        assert!(CutoffSpec::parse(&EnergySpec::Text("p/3".into())).is_err());
    }
}
