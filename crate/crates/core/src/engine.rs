//! Monte-Carlo runner: drops, aggregation, CDFs and CSV artifacts.
//!
//! Every drop depends only on `(master_seed, drop)`. Drops may run on the
//! rayon pool; results are merged in drop order and every sum runs in
//! ascending index order, so the output bytes do not depend on scheduling.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{ExperimentConfig, Scheme, Settings};
use crate::dacca::UeOutcome;
use crate::eicic::EicicScheme;
use crate::error::{Error, Result};
use crate::experiments::{
    carrier_drop, eicic_drop, ffr_drop, hotspot_learn_network, CarrierScheme, FemtoBandPolicy,
};
use crate::green::{
    check_sweep_grid, femto_dtx_drop, matched_throughput, sweep_point, DtxScheme, SweepRow,
};
use crate::learn::run_learning;
use crate::link::{db_to_lin, lin_to_db};

/// Empirical CDF: each distinct value with the fraction of samples at or
/// below it.
pub fn emit_cdf(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::invalid("CDF of an empty sample"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("CDF sample contains NaN"));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        if i + 1 < v.len() && v[i + 1] == x {
            continue;
        }
        out.push((x, (i + 1) as f64 / n));
    }
    Ok(out)
}

/// Free-form table with a fixed header.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: String,
    pub rows: Vec<String>,
}

impl Table {
    fn csv(&self) -> String {
        let mut s =
            String::with_capacity(self.rows.iter().map(|r| r.len() + 1).sum::<usize>() + 64);
        s.push_str(&self.header);
        s.push('\n');
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DropRecord {
    pub drop: u64,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub metric: &'static str,
    /// Drops with a finite value.
    pub n: usize,
    pub mean: f64,
    pub std_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CdfTable {
    pub name: &'static str,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KpiReport {
    pub metrics: Vec<&'static str>,
    pub completed_drops: u64,
    pub per_drop: Vec<DropRecord>,
    /// Drops whose layout could not be placed.
    pub skipped_drops: Vec<u64>,
    pub summary: Vec<SummaryRow>,
    pub cdfs: Vec<CdfTable>,
    /// Per-slot or per-epoch trace of the first completed drop.
    pub trace: Option<Table>,
    pub sweep: Vec<SweepRow>,
    /// One row of run means for the range-expansion schemes.
    pub kpi: Option<Table>,
}

impl KpiReport {
    pub fn summary_of(&self, metric: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.metric == metric)
    }

    /// `(file name, contents)` of every CSV artifact, in a fixed order.
    pub fn csv_files(&self) -> Vec<(String, String)> {
        let mut files = Vec::new();
        if !self.per_drop.is_empty() {
            let mut s = String::from("drop");
            for m in &self.metrics {
                s.push(',');
                s.push_str(m);
            }
            s.push('\n');
            for r in &self.per_drop {
                let _ = write!(s, "{}", r.drop);
                for v in &r.values {
                    let _ = write!(s, ",{v}");
                }
                s.push('\n');
            }
            files.push(("per_drop.csv".to_string(), s));
        }
        let mut s = String::from("metric,n,mean,std_err\n");
        for r in &self.summary {
            let _ = writeln!(s, "{},{},{},{}", r.metric, r.n, r.mean, r.std_err);
        }
        files.push(("summary.csv".to_string(), s));
        for c in &self.cdfs {
            let mut s = String::from("value,cumulative_fraction\n");
            for (x, f) in &c.points {
                let _ = writeln!(s, "{x},{f}");
            }
            files.push((format!("cdf_{}.csv", c.name), s));
        }
        if let Some(t) = &self.trace {
            files.push(("trace.csv".to_string(), t.csv()));
        }
        if let Some(t) = &self.kpi {
            files.push(("kpi.csv".to_string(), t.csv()));
        }
        if !self.sweep.is_empty() {
            let mut s = String::from("density,load,se,ee,ce\n");
            for r in &self.sweep {
                let _ = writeln!(s, "{},{},{},{},{}", r.density, r.load, r.se, r.ee, r.ce);
            }
            files.push(("sweep.csv".to_string(), s));
        }
        files
    }
}

/// Output of one drop before aggregation.
#[derive(Clone, Debug, Default)]
struct DropOutput {
    metrics: Vec<(&'static str, f64)>,
    samples: Vec<(&'static str, Vec<f64>)>,
    trace: Option<Table>,
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Effective SINR in dB of UEs holding at least one RB.
fn sinr_db(ues: &[UeOutcome]) -> Vec<f64> {
    ues.iter()
        .filter(|u| u.n_rb > 0 && u.effective_sinr > 0.0)
        .map(|u| lin_to_db(u.effective_sinr))
        .collect()
}

fn join(set: &std::collections::BTreeSet<usize>) -> String {
    set.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("|")
}

fn run_drop(
    s: &Settings,
    scheme: Scheme,
    master: u64,
    drop: u64,
    trace: bool,
) -> Result<DropOutput> {
    let mut out = DropOutput::default();
    match scheme {
        Scheme::Dacca | Scheme::Ffr1of4 | Scheme::Ffr2of4 => {
            let cs = match scheme {
                Scheme::Dacca => CarrierScheme::Dacca,
                Scheme::Ffr1of4 => CarrierScheme::Ffr1of4,
                _ => CarrierScheme::Ffr2of4,
            };
            let d = carrier_drop(&s.femto_grid, cs, master, drop)?;
            let th = db_to_lin(s.femto_grid.dacca.gamma_th_db);
            let sinr = sinr_db(&d.ues);
            let n = d.ues.len() as f64;
            out.metrics = vec![
                ("ues", n),
                ("scheduled_ues", sinr.len() as f64),
                (
                    "frac_sinr_ge_th",
                    d.ues.iter().filter(|u| u.effective_sinr >= th).count() as f64 / n,
                ),
                ("mean_sinr_db", mean(sinr.iter().copied())),
                (
                    "mean_capacity_bps",
                    mean(d.ues.iter().map(|u| u.throughput)),
                ),
                (
                    "fixed_point_slot",
                    d.fixed_point_slot.map_or(f64::NAN, |x| x as f64),
                ),
                ("blocked_transmissions", d.blocked_transmissions as f64),
                ("contention_events", d.contention_events as f64),
            ];
            out.samples = vec![
                ("sinr_db", sinr),
                ("capacity_bps", d.ues.iter().map(|u| u.throughput).collect()),
            ];
            if trace && !d.trace.is_empty() {
                let mut t = Table {
                    header: "slot,cell,pcc,scc,blocked,contention".into(),
                    rows: vec![],
                };
                for st in &d.trace {
                    for (c, cs) in st.states.iter().enumerate() {
                        t.rows.push(format!(
                            "{},{c},{},{},{},{}",
                            st.slot,
                            join(&cs.pcc),
                            join(&cs.scc),
                            join(&cs.blocked),
                            u8::from(cs.contention)
                        ));
                    }
                }
                out.trace = Some(t);
            }
        }
        Scheme::Upd | Scheme::UpdRp | Scheme::Corpa | Scheme::Abs => {
            let es = match scheme {
                Scheme::Upd => EicicScheme::Upd,
                Scheme::UpdRp => EicicScheme::UpdRp,
                Scheme::Corpa => EicicScheme::Corpa,
                _ => EicicScheme::Abs,
            };
            let r = eicic_drop(&s.hotspot, es, s.delta_er_db, master, drop)?;
            out.metrics = vec![
                ("ue_outages", r.kpi.ue_outages as f64),
                ("connected_ues", r.kpi.connected_ues),
                ("throughput_bps", r.kpi.network_throughput),
                ("capped_rbs", r.audit.capped_rbs as f64),
                ("cap_violations", r.audit.cap_violations as f64),
                ("protection_failures", r.audit.protection_failures as f64),
                ("infeasible_rbs", r.audit.infeasible_rbs as f64),
            ];
            out.samples = vec![("ue_rate_bps", r.final_service.rate.clone())];
        }
        Scheme::Ucb => {
            let net = hotspot_learn_network(&s.hotspot, s.delta_er_db, master, drop)?;
            let run = run_learning(&net, &s.learn, s.learn_epochs)?;
            let n_cells = net.real.layout.cells().len();
            let last = &run.trace[run.trace.len().saturating_sub(n_cells)..];
            out.metrics = vec![
                ("mean_reward", mean(run.trace.iter().map(|r| r.reward))),
                (
                    "cumulative_regret",
                    last.iter().map(|r| r.cumulative_regret).sum(),
                ),
            ];
            out.samples = vec![("reward", run.trace.iter().map(|r| r.reward).collect())];
            if trace {
                let mut t = Table {
                    header: "epoch,cell,arm,reward,cumulative_regret".into(),
                    rows: vec![],
                };
                for r in &run.trace {
                    t.rows.push(format!(
                        "{},{},{},{},{}",
                        r.epoch, r.cell, r.arm, r.reward, r.cumulative_regret
                    ));
                }
                out.trace = Some(t);
            }
        }
        Scheme::FfrMinInt | Scheme::FfrReuse1 => {
            let policy = if scheme == Scheme::FfrMinInt {
                FemtoBandPolicy::MinInterference
            } else {
                FemtoBandPolicy::Reuse1
            };
            let d = ffr_drop(&s.ffr, policy, master, drop)?;
            let (ms, fs) = (sinr_db(&d.macro_ues), sinr_db(&d.femto_ues));
            out.metrics = vec![
                ("macro_mean_sinr_db", mean(ms.iter().copied())),
                ("femto_mean_sinr_db", mean(fs.iter().copied())),
                (
                    "macro_mean_throughput_bps",
                    mean(d.macro_ues.iter().map(|u| u.throughput)),
                ),
                (
                    "femto_mean_throughput_bps",
                    mean(d.femto_ues.iter().map(|u| u.throughput)),
                ),
                ("fallbacks", d.fallbacks as f64),
            ];
            out.samples = vec![
                ("macro_sinr_db", ms),
                ("femto_sinr_db", fs),
                (
                    "macro_throughput_bps",
                    d.macro_ues.iter().map(|u| u.throughput).collect(),
                ),
                (
                    "femto_throughput_bps",
                    d.femto_ues.iter().map(|u| u.throughput).collect(),
                ),
            ];
        }
        Scheme::Dtx | Scheme::Edtx | Scheme::Mcdtx => {
            let ds = match scheme {
                Scheme::Dtx => DtxScheme::Classic,
                Scheme::Edtx => DtxScheme::Enhanced,
                _ => DtxScheme::MultiCell,
            };
            let o = femto_dtx_drop(&s.dtx, s.dtx_rho, ds, s.dtx_access, master, drop, trace)?;
            out.metrics = vec![
                ("cells", o.cells as f64),
                ("mean_power_w", o.mean_power_w),
                ("energy_j", o.energy_j),
                ("tx_slots", o.tx_slots as f64),
                ("sleep_slots", o.sleep_slots as f64),
                ("off_slots", o.off_slots as f64),
                ("delivered_packets", o.delivered_packets as f64),
                ("dropped_packets", o.dropped_packets as f64),
                ("unreachable_packets", o.unreachable_packets as f64),
                ("delivered_bytes", o.delivered_bytes),
            ];
            if trace {
                let mut t = Table {
                    header: "slot,cell,state,p_out,p_in,served_bytes,drops".into(),
                    rows: vec![],
                };
                for r in &o.trace {
                    t.rows.push(format!(
                        "{},{},{},{},{},{},{}",
                        r.slot,
                        r.cell,
                        r.state.name(),
                        r.p_out,
                        r.p_in,
                        r.served_bytes,
                        r.drops
                    ));
                }
                out.trace = Some(t);
            }
        }
        Scheme::Sweep | Scheme::Matched => {
            return Err(Error::Internal(
                "sweep schemes have no per-drop runner".into(),
            ))
        }
    }
    Ok(out)
}

fn summarise(metrics: &[&'static str], per_drop: &[DropRecord]) -> Vec<SummaryRow> {
    metrics
        .iter()
        .enumerate()
        .map(|(k, &metric)| {
            let xs: Vec<f64> = per_drop
                .iter()
                .map(|r| r.values[k])
                .filter(|x| x.is_finite())
                .collect();
            let n = xs.len();
            let m = mean(xs.iter().copied());
            let std_err = if n > 1 {
                let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
                (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                metric,
                n,
                mean: m,
                std_err,
            }
        })
        .collect()
}

fn map_drops<T: Send>(cfg: &ExperimentConfig, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    if cfg.parallel {
        (0..cfg.drops).into_par_iter().map(f).collect()
    } else {
        (0..cfg.drops).map(f).collect()
    }
}

fn run_sweep(cfg: &ExperimentConfig, s: &Settings) -> Result<KpiReport> {
    check_sweep_grid(&s.densities, &s.loads)?;
    let points: Vec<(f64, f64)> = s
        .loads
        .iter()
        .flat_map(|&l| s.densities.iter().map(move |&d| (d, l)))
        .collect();
    let one = |&(d, l): &(f64, f64)| sweep_point(&s.green, d, l, cfg.drops, cfg.master_seed);
    let rows: Vec<Result<SweepRow>> = if cfg.parallel {
        points.par_iter().map(one).collect()
    } else {
        points.iter().map(one).collect()
    };
    let sweep = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let metrics = vec!["se", "ee", "ce"];
    Ok(KpiReport {
        metrics,
        sweep,
        completed_drops: cfg.drops,
        ..Default::default()
    })
}

fn run_matched(cfg: &ExperimentConfig, s: &Settings) -> Result<KpiReport> {
    let m = matched_throughput(
        &s.green,
        s.green.matched_ref_density,
        s.green.matched_demand_bps_km2,
        &s.matched_candidates,
        cfg.drops,
        cfg.master_seed,
    )?;
    let metrics = vec!["small_density", "energy_saving", "cost_increase"];
    let per_drop: Vec<DropRecord> = (0..cfg.drops)
        .map(|d| DropRecord {
            drop: d,
            values: vec![
                m.small_density,
                m.energy_saving[d as usize],
                m.cost_increase[d as usize],
            ],
        })
        .collect();
    let summary = summarise(&metrics, &per_drop);
    let cdfs = vec![
        CdfTable {
            name: "energy_saving",
            points: emit_cdf(&m.energy_saving)?,
        },
        CdfTable {
            name: "cost_increase",
            points: emit_cdf(&m.cost_increase)?,
        },
    ];
    Ok(KpiReport {
        metrics,
        per_drop,
        summary,
        cdfs,
        completed_drops: cfg.drops,
        ..Default::default()
    })
}

/// Runs every drop of `cfg` and aggregates the KPIs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<KpiReport> {
    let s = cfg.settings()?;
    match cfg.scheme {
        Scheme::Sweep => return run_sweep(cfg, &s),
        Scheme::Matched => return run_matched(cfg, &s),
        _ => {}
    }
    let results = map_drops(cfg, |d| run_drop(&s, cfg.scheme, cfg.master_seed, d, false));
    let mut report = KpiReport::default();
    let mut pooled: Vec<(&'static str, Vec<f64>)> = Vec::new();
    let mut first_ok = None;
    for (d, r) in results.into_iter().enumerate() {
        let d = d as u64;
        let out = match r {
            Ok(o) => o,
            Err(Error::PlacementInfeasible { .. }) => {
                report.skipped_drops.push(d);
                continue;
            }
            Err(e) => return Err(e),
        };
        first_ok.get_or_insert(d);
        if report.metrics.is_empty() {
            report.metrics = out.metrics.iter().map(|(k, _)| *k).collect();
            pooled = out.samples.iter().map(|(k, _)| (*k, Vec::new())).collect();
        }
        report.per_drop.push(DropRecord {
            drop: d,
            values: out.metrics.iter().map(|(_, v)| *v).collect(),
        });
        for (slot, (_, xs)) in pooled.iter_mut().zip(out.samples) {
            slot.1.extend(xs);
        }
    }
    let Some(first) = first_ok else {
        return Err(Error::PlacementInfeasible {
            what: "no drop produced a layout".into(),
            attempts: cfg.drops as usize,
        });
    };
    report.completed_drops = report.per_drop.len() as u64;
    report.summary = summarise(&report.metrics, &report.per_drop);
    for (name, xs) in pooled {
        if !xs.is_empty() {
            report.cdfs.push(CdfTable {
                name,
                points: emit_cdf(&xs)?,
            });
        }
    }
    if matches!(
        cfg.scheme,
        Scheme::Upd | Scheme::UpdRp | Scheme::Corpa | Scheme::Abs
    ) {
        let m = |k: &str| report.summary_of(k).map_or(f64::NAN, |r| r.mean);
        report.kpi = Some(Table {
            header: "scheme,delta_er_db,outages,connected_mean,throughput_mbps".into(),
            rows: vec![format!(
                "{},{},{},{},{}",
                cfg.scheme.name(),
                s.delta_er_db,
                m("ue_outages"),
                m("connected_ues"),
                m("throughput_bps") / 1e6
            )],
        });
    }
    // The trace is recorded by re-running the first good drop; drops are pure
    // functions of their seed so this reproduces it exactly.
    report.trace = run_drop(&s, cfg.scheme, cfg.master_seed, first, true)?.trace;
    Ok(report)
}

/// Writes every CSV of `report` plus `manifest.txt` into `dir`.
pub fn write_outputs(
    cfg: &ExperimentConfig,
    report: &KpiReport,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, body) in report.csv_files() {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    let mut manifest = cfg.manifest()?;
    let skipped: Vec<String> = report.skipped_drops.iter().map(|d| d.to_string()).collect();
    // Results are comments so the manifest can be passed back as a config.
    let _ = writeln!(
        manifest,
        "# result.completed_drops = {}",
        report.completed_drops
    );
    let _ = writeln!(manifest, "# result.skipped_drops = {}", skipped.join(","));
    let path = dir.join("manifest.txt");
    fs::write(&path, manifest)?;
    written.push(path);
    Ok(written)
}
