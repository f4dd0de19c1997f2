//! Physical constants in natural units (MeV).

/// Electron mass in MeV.
pub const ELECTRON_MASS: f64 = 0.510_998_95;

/// Fine-structure constant.
pub const ALPHA: f64 = 1.0 / 137.036;

/// (ħc)² in MeV²·barn: a cross section of 1 MeV⁻² equals this many barn.
pub const BARN_PER_INV_MEV2: f64 = 389.379_372;

/// Converts a cross section from MeV⁻² to barn.
#[inline]
pub fn to_barn(inv_mev2: f64) -> f64 {
    inv_mev2 * BARN_PER_INV_MEV2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barn_conversion_matches_quoted_value() {
        // 1 b ≈ 389.4⁻¹ MeV⁻², four significant figures
        assert!((BARN_PER_INV_MEV2 / 389.4 - 1.0).abs() < 1e-4);
    }
}
