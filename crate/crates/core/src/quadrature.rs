//! Composite Gauss–Legendre rules on `[a, b]`.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

pub const NODES_PER_PANEL: usize = 64;

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(NODES_PER_PANEL).unwrap()))
}

/// Integrates `f` over `[a, b]` split into `panels` equal panels, each with
/// a 64-node Gauss–Legendre rule.
pub fn composite<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            rule().integrate(lo, lo + h, &mut f)
        })
        .sum()
}
