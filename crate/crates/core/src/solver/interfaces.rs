//! Layer interface extraction from a final state.

use crate::error::{Error, Result};

use super::state::BasinState;

/// Interface elevations `[top, ..., bottom]` (youngest first): the seafloor,
/// each boundary between cells of different depositional layers, and the
/// basement. Fails unless exactly `expected_layers` layers are present.
pub fn extract_interfaces(state: &BasinState, expected_layers: usize) -> Result<Vec<f64>> {
    let n = state.cell_count();
    if n == 0 {
        return Err(Error::LayerCount {
            expected: expected_layers,
            found: 0,
        });
    }
    let mut out = vec![state.top()];
    for i in (1..n).rev() {
        if state.layer[i] != state.layer[i - 1] {
            out.push(state.z[i]);
        }
    }
    out.push(state.bottom());
    let found = out.len() - 1;
    if found != expected_layers {
        return Err(Error::LayerCount {
            expected: expected_layers,
            found,
        });
    }
    Ok(out)
}
