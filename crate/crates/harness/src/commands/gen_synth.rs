use std::path::Path;

use anyhow::Result;
use c3sim::{make_synthetic, CostSpec, ScenarioVariant, SyntheticSpec};

use crate::output::write_atomic;

/// Writes `population.csv` (`user,group,x_1..x_d`) and `creators.csv`
/// (`creator,lambda,init_1..init_d,center_1..center_d`, centers empty under
/// zero cost) for one synthetic instance.
pub fn gen_synth(spec: &SyntheticSpec, variant: ScenarioVariant, out: &Path) -> Result<()> {
    let scenario = make_synthetic(spec, variant)?;
    let game = &scenario.game;
    let pop = game.population();
    let d = game.dim();
    let labels = pop.group_labels().unwrap_or(&[]);

    write_atomic(&out.join("population.csv"), |buf| {
        let mut w = csv::Writer::from_writer(buf);
        let mut header = vec!["user".to_string(), "group".into()];
        header.extend((1..=d).map(|k| format!("x_{k}")));
        w.write_record(&header)?;
        for (j, x) in pop.users().iter().enumerate() {
            let mut rec = vec![j.to_string(), labels.get(j).map(|g| g.to_string()).unwrap_or_default()];
            rec.extend(x.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    })?;

    write_atomic(&out.join("creators.csv"), |buf| {
        let mut w = csv::Writer::from_writer(buf);
        let mut header = vec!["creator".to_string(), "lambda".into()];
        header.extend((1..=d).map(|k| format!("init_{k}")));
        header.extend((1..=d).map(|k| format!("center_{k}")));
        w.write_record(&header)?;
        for i in 0..game.n() {
            let init = game.action_vector(i, scenario.initial_profile.get(i));
            let (lambda, center) = match &game.costs()[i] {
                CostSpec::Zero => (0.0, vec![String::new(); d]),
                CostSpec::Quadratic { lambda, center } => {
                    (*lambda, center.iter().map(|v| v.to_string()).collect())
                }
            };
            let mut rec = vec![i.to_string(), lambda.to_string()];
            rec.extend(init.iter().map(|v| v.to_string()));
            rec.extend(center);
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    })
}
