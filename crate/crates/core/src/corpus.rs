//! Databases and models shipped with the crate.

pub const PROP_MM: &str = include_str!("../data/prop.mm");
pub const MIU_MM: &str = include_str!("../data/miu.mm");
pub const MICRO_MM: &str = include_str!("../data/micro.mm");

pub const PROP_MODEL: &str = include_str!("../data/prop.model");
/// Negation constantly true: everything but ax-3 holds.
pub const AX3_INDEP_MODEL: &str = include_str!("../data/ax3-indep.model");
pub const MIU_MODEL: &str = include_str!("../data/miu.model");
/// Inequality as freshness over a finite universe; fails validation.
pub const INEQ_FRESH_MODEL: &str = include_str!("../data/ineq-fresh.model");

/// Bundled files by their file name.
pub const BUNDLED: [(&str, &str); 7] = [
    ("prop.mm", PROP_MM),
    ("miu.mm", MIU_MM),
    ("micro.mm", MICRO_MM),
    ("prop.model", PROP_MODEL),
    ("ax3-indep.model", AX3_INDEP_MODEL),
    ("miu.model", MIU_MODEL),
    ("ineq-fresh.model", INEQ_FRESH_MODEL),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
