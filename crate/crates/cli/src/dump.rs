//! `dump-graph`: write graph instances as edge lists, with optional weight
//! matrix and operator spectrum debug dumps.

use std::fs::File;
use std::io::BufWriter;

use anyhow::{Context, Result};
use consensus_core::spectral::phi_spectrum;
use consensus_core::WeightMatrix;

use crate::config::ExperimentConfig;
use crate::mse::oracle_operator;
use crate::report::ensure_dir;

pub fn run(cfg: &ExperimentConfig, dump_weights: bool, dump_spectrum: bool) -> Result<()> {
    ensure_dir(&cfg.out)?;
    for &n in &cfg.sizes {
        let g = cfg.instance(n, cfg.trial_seed(n, 0))?;
        let base = format!("{}_{}", cfg.topology.as_str(), n);

        let path = cfg.out.join(format!("{base}.edges"));
        let mut out =
            BufWriter::new(File::create(&path).with_context(|| path.display().to_string())?);
        g.write_edge_list(&mut out)?;
        println!("wrote {}", path.display());

        if dump_weights {
            let w = WeightMatrix::metropolis_hastings(&g);
            let path = cfg.out.join(format!("{base}_weights.csv"));
            let mut out =
                BufWriter::new(File::create(&path).with_context(|| path.display().to_string())?);
            w.write_csv(&mut out)?;
            println!("wrote {}", path.display());
        }

        if dump_spectrum {
            let (op, _, _) = oracle_operator(WeightMatrix::metropolis_hastings(&g), cfg.theta())?;
            let spectrum = phi_spectrum(op.spectrum(), op.params(), op.alpha());
            let path = cfg.out.join(format!("{base}_spectrum.csv"));
            let mut out =
                BufWriter::new(File::create(&path).with_context(|| path.display().to_string())?);
            spectrum.write_csv(&mut out)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
