//! Communication time and transmitted information of the classical and
//! quantum protocols as n grows.

use coherent_fingerprint::resources::{crossover_search, report_for_rule, table1_orders};
use coherent_fingerprint::{CurveParams, KRule, Result};

fn main() -> Result<()> {
    let params = CurveParams::reference();
    let rule = KRule::reference();
    println!("{:>12} {:>12} {:>10} {:>10} {:>10} {:>10}", "n", "k", "T_cl", "T_cp", "T_qp", "I_qp");
    for e in (10..=40).step_by(5) {
        let n = 2f64.powi(e);
        let r = report_for_rule(&params, &rule, n)?;
        println!(
            "{:>12.3e} {:>12.3e} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e}",
            r.n, r.k, r.t_classical_lb, r.t_classical_best, r.t_quantum, r.i_quantum
        );
    }

    let c = crossover_search(&params, |n| rule.channels(&params, n).unwrap_or(f64::NAN), 60)?;
    println!("T_qp < T_cl from n = {:?}; also I_qp < T_cl from n = {:?}", c.n_time, c.n_both);

    let n = 2f64.powi(20);
    for row in table1_orders(&params, n, 2f64.powi(10))? {
        println!("{:<28} time {:<22} {:>10.3e}  info {:<18} {:>10.3e}", row.protocol, row.time_order, row.time_value, row.info_order, row.info_value);
    }
    Ok(())
}
