//! `bai complexity`: complexity measures of registered instances.

use std::fmt::Write as _;

use bai_core::instances::{instance_by_id, lookup, registry};
use bai_core::model::{h1, h2, h3, log_bar};

use crate::error::CliResult;

pub fn run(ids: &[String]) -> CliResult<String> {
    let ids: Vec<String> = if ids.is_empty() {
        registry().map(|s| s.id.to_string()).collect()
    } else {
        ids.to_vec()
    };
    let mut s = String::from("instance,k,budget,budget_published,h1,h2,h2_gaussian,h3,log_bar\n");
    for id in &ids {
        let spec = lookup(id)?;
        let inst = instance_by_id(id)?;
        let p = inst.means();
        writeln!(
            s,
            "{id},{},{},{},{},{},{},{},{}",
            inst.num_arms(),
            spec.suggested_budget,
            spec.budget_published,
            h1(p)?,
            h2(p, false)?,
            h2(p, true)?,
            h3(p)?,
            log_bar(inst.num_arms())
        )
        .expect("string write");
    }
    Ok(s)
}
