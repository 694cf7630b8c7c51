use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use maxcons::config::{Scenario, ScenarioConfig};
use maxcons::core::adversary::{
    attack_mmse, collect, reconstruct_lenient, true_leakage, AdversaryConfig,
};
use maxcons::core::engine::{run, InitSpec};
use maxcons::core::graph::{augment, default_radius, generate_rgg, Graph};
use maxcons::core::privacy::{check_condition, nmi_curve, NmiConfig};
use maxcons::core::problem::{assemble, ProblemInstance};
use maxcons::experiments::{baseline_errors, private_data, Method};
use maxcons::io::{
    format_instance, format_topology, read_instance, read_topology, write_edge_csv, write_trace_csv,
};
use maxcons::manifest::{execute, rerun};

#[derive(Parser)]
#[command(
    name = "maxcons",
    version,
    about = "Privacy-preserving distributed maximum consensus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named scenario and write its CSVs, summary and manifest.
    Run {
        scenario: Scenario,
        /// JSON config; omitted keys take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reproduce a scenario from its manifest and verify every CSV hash.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the algorithm once and export the full trace.
    Simulate {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        init: InitArgs,
        #[arg(long, default_value_t = 5000)]
        t_max: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Estimated NMI between private data and its leakage term.
    MiCurve {
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma_s: f64,
        #[arg(long, default_value_t = 5000)]
        samples: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 11)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,1,10,100,1000")]
        grid: Vec<f64>,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct honest leakage terms from an adversary's view and attack
    /// them.
    Attack {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        init: InitArgs,
        #[arg(long, default_value_t = 2000)]
        t_max: usize,
        /// `all-but <i>` or a list of corrupt nodes.
        #[arg(long, num_args = 1.., required = true)]
        corrupt: Vec<String>,
        #[arg(long)]
        no_eavesdrop: bool,
        /// Hide the initial regular-edge auxiliaries from the eavesdropper.
        #[arg(long)]
        encrypted_init: bool,
        #[arg(long, default_value_t = 0.0)]
        prior_mean: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma_s: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Squared error against iterations for the proposed method and both
    /// baselines.
    Compare {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,1")]
        sigma: Vec<f64>,
        #[arg(long, default_value_t = 1000.0)]
        mu_z: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Monte Carlo seeds averaged for each baseline.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long, default_value_t = 5000)]
        t_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, conflicts_with_all = ["rgg_n", "instance_file"])]
    topology_file: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    rgg_n: usize,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 42)]
    graph_seed: u64,
    /// Seed of the standard normal private data.
    #[arg(long, default_value_t = 7)]
    s_seed: u64,
    /// Replay a dumped instance; overrides the topology, data, c and theta.
    #[arg(long)]
    instance_file: Option<PathBuf>,
}

impl InstanceArgs {
    fn build(&self) -> Result<(ProblemInstance, Graph)> {
        if let Some(path) = &self.instance_file {
            let p = read_instance(path).with_context(|| format!("reading {}", path.display()))?;
            let g = p.graph().base().clone();
            return Ok((p, g));
        }
        let g = match &self.topology_file {
            Some(path) => {
                read_topology(path).with_context(|| format!("reading {}", path.display()))?
            }
            None => {
                let r = self.radius.unwrap_or_else(|| default_radius(self.rgg_n));
                generate_rgg(self.rgg_n, r, self.graph_seed)?
            }
        };
        let s = private_data(g.node_count(), self.s_seed);
        Ok((assemble(augment(&g), s, self.c, self.theta)?, g))
    }
}

#[derive(Args)]
struct InitArgs {
    #[arg(long, default_value_t = 1000.0)]
    mu_z: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma_z: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl InitArgs {
    fn spec(&self) -> InitSpec {
        InitSpec::new(self.mu_z, self.sigma_z, self.seed)
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// 0-based corrupt set from `all-but <i>` or a list of 1-based nodes.
fn parse_corrupt(tokens: &[String], n: usize) -> Result<Vec<usize>> {
    let node = |t: &str| -> Result<usize> {
        let v: usize = t.parse().with_context(|| format!("bad node `{t}`"))?;
        if v == 0 || v > n {
            bail!("node {v} outside 1..={n}");
        }
        Ok(v - 1)
    };
    match tokens {
        [all_but, i] if all_but == "all-but" => {
            let honest = node(i)?;
            Ok((0..n).filter(|&j| j != honest).collect())
        }
        list => list
            .iter()
            .flat_map(|t| t.split(','))
            .filter(|t| !t.is_empty())
            .map(node)
            .collect(),
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            scenario,
            config,
            out,
        } => {
            let cfg = match config {
                Some(path) => ScenarioConfig::from_json(
                    &fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?,
                )
                .context("parsing config")?,
                None => ScenarioConfig::default(),
            };
            let m = execute(scenario, &cfg, &out)?;
            println!(
                "{} -> {} ({} files)",
                scenario,
                out.display(),
                m.files.len()
            );
        }
        Command::Rerun { manifest, out } => {
            let m = rerun(&manifest, &out)?;
            println!("{} reproduced: {} files match", m.scenario, m.files.len());
        }
        Command::Simulate {
            instance,
            init,
            t_max,
            out_dir,
        } => {
            let (p, g) = instance.build()?;
            let trace = run(&p, &init.spec(), t_max)?;
            fs::create_dir_all(&out_dir)?;
            fs::write(out_dir.join("topology.txt"), format_topology(&g))?;
            fs::write(out_dir.join("instance.txt"), format_instance(&p))?;
            let mut w = BufWriter::new(File::create(out_dir.join("trace.csv"))?);
            write_trace_csv(&trace, &mut w)?;
            w.flush()?;
            let mut w = BufWriter::new(File::create(out_dir.join("edges.csv"))?);
            write_edge_csv(&trace, &mut w)?;
            w.flush()?;
            let report = check_condition(&trace);
            println!(
                "final squared error {:e}; condition holds at {}/{} nodes",
                trace.final_squared_error(),
                report.holds_all_t.iter().filter(|&&h| h).count(),
                p.node_count()
            );
        }
        Command::MiCurve {
            c,
            sigma_s,
            samples,
            k,
            seed,
            grid,
            out,
        } => {
            let curve = nmi_curve(
                &NmiConfig {
                    c,
                    sigma_s,
                    samples,
                    k,
                    seed,
                },
                &grid,
            )?;
            let mut w = output(out.as_deref())?;
            writeln!(w, "sigma_z,mi_nats,mi_self_nats,nmi_raw,nmi_clamped")?;
            for p in curve {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    p.sigma_z,
                    p.mi_nats,
                    p.mi_self_nats,
                    p.nmi_raw,
                    p.nmi_clamped()
                )?;
            }
            w.flush()?;
        }
        Command::Attack {
            instance,
            init,
            t_max,
            corrupt,
            no_eavesdrop,
            encrypted_init,
            prior_mean,
            sigma_s,
            out,
        } => {
            let (p, _) = instance.build()?;
            let corrupt = parse_corrupt(&corrupt, p.node_count())?;
            let trace = run(&p, &init.spec(), t_max)?;
            let mut cfg = AdversaryConfig::new(corrupt, !no_eavesdrop);
            cfg.encrypted_init = encrypted_init;
            let obs = collect(&trace, &cfg)?;
            let result = reconstruct_lenient(&obs, p.public())?;
            let report = check_condition(&trace);
            let mut w = output(out.as_deref())?;
            writeln!(
                w,
                "node,honest,condition_held,L_recovered,L_true,abs_err,s_hat,attack_se"
            )?;
            for i in 0..p.node_count() {
                match result.recovery(i) {
                    Some(h) => {
                        let truth = true_leakage(&trace, i);
                        let est = attack_mmse(
                            h.leakage,
                            (prior_mean, sigma_s),
                            (init.mu_z, init.sigma_z),
                            p.c(),
                        );
                        writeln!(
                            w,
                            "{},true,{},{},{},{},{},{}",
                            i + 1,
                            h.violation.is_none() && report.holds_all_t[i],
                            h.leakage,
                            truth,
                            (h.leakage - truth).abs(),
                            est.estimate,
                            (est.estimate - p.s()[i]).powi(2)
                        )?;
                    }
                    None => writeln!(w, "{},false,{},,,,,", i + 1, report.holds_all_t[i])?,
                }
            }
            w.flush()?;
        }
        Command::Compare {
            instance,
            sigma,
            mu_z,
            seed,
            seeds,
            t_max,
            out,
        } => {
            let (p, g) = instance.build()?;
            let target = p.optimum();
            let mut w = output(out.as_deref())?;
            writeln!(w, "method,sigma,t,squared_error")?;
            for m in Method::COMPARED {
                for &s in &sigma {
                    let errors: Vec<f64> = match m {
                        Method::Baseline(b) => {
                            baseline_errors(b, &p, &g, s, seed..seed + seeds.max(1), t_max)?
                                .0
                                .squared
                        }
                        _ => {
                            let trace = run(&p, &InitSpec::new(mu_z, s, seed), t_max)?;
                            (1..=t_max)
                                .map(|t| maxcons::core::engine::squared_error(trace.x(t), target))
                                .collect()
                        }
                    };
                    for (k, e) in errors.iter().enumerate() {
                        writeln!(w, "{},{},{},{}", m.name(), s, k + 1, e)?;
                    }
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrupt_shorthand() {
        let all_but = ["all-but".to_string(), "2".to_string()];
        assert_eq!(parse_corrupt(&all_but, 4).unwrap(), vec![0, 2, 3]);
        assert_eq!(parse_corrupt(&["1,3".to_string()], 4).unwrap(), vec![0, 2]);
        assert!(parse_corrupt(&["0".to_string()], 4).is_err());
    }
}
