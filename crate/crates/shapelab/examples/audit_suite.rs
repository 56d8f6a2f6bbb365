//! Explicit-inequality audit over a small seeded family of nearly circular
//! domains; prints the tightest margins per inequality.

use shapelab::inequality_audit::{audit_family, standard_family};
use std::collections::BTreeMap;

fn main() {
    let profiles = standard_family(8, 0.2, 7);
    let report = audit_family(&profiles, 6, 1).unwrap();

    // tightest margin per inequality id (instance suffix stripped)
    let mut tightest: BTreeMap<String, (f64, String)> = BTreeMap::new();
    for e in &report.entries {
        let id = e.inequality_id.split(':').next().unwrap().to_string();
        let margin = e.margin / e.rhs.abs().max(1e-30);
        if tightest.get(&id).map(|t| margin < t.0).unwrap_or(true) {
            tightest.insert(id, (margin, e.domain_id.clone()));
        }
    }
    println!("{} checks over {} domains, all satisfied: {}", report.entries.len(), profiles.len(), report.all_satisfied());
    println!("tightest relative margins:");
    for (id, (margin, dom)) in &tightest {
        println!("  {id:<32} {margin:+.4e}  ({dom})");
    }
}
