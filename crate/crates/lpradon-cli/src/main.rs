use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lpradon::io::{
    read_csv_gather, read_event_specs, read_mute_polyline, read_rsg, render_pgm, write_rsg,
};
use lpradon::{
    direct_adjoint, direct_forward, ista, ista_masked, make_mask, mute_and_split, synth_gather,
    CmpGather, Error, IstaConfig, MaskPattern, MaskSpec, OperatorPlan, PlanOptions, RadonImage,
    RegularGrid2,
};

/// Fast hyperbolic Radon transform on CMP gathers: forward/adjoint
/// operators, sparse inversion, missing-trace interpolation, and
/// multiple attenuation. Fields are stored as RSG files (axis 1 = time
/// or intercept, fastest varying); logs go to stderr, data to files.
#[derive(Parser)]
#[command(name = "lpradon", version, max_term_width = 100)]
struct Cli {
    /// Worker thread count. The numerical core is single-threaded; the
    /// flag is accepted for script compatibility and values other than
    /// 1 are ignored with a note.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Logpolar,
    Direct,
}

#[derive(Args)]
struct RadonGridArgs {
    /// Number of intercept (τ) samples.
    #[arg(long)]
    ntau: usize,
    #[arg(long)]
    tau_min: f64,
    #[arg(long)]
    tau_max: f64,
    /// Number of slowness (q) samples.
    #[arg(long)]
    nq: usize,
    #[arg(long)]
    q_min: f64,
    #[arg(long)]
    q_max: f64,
}

impl RadonGridArgs {
    fn grid(&self) -> Result<RegularGrid2, Error> {
        if self.ntau < 2 || self.nq < 2 {
            return Err(Error::config("need at least 2 samples per Radon axis".to_string()));
        }
        if !(self.tau_max > self.tau_min) || !(self.q_max > self.q_min) {
            return Err(Error::config("empty Radon parameter range".to_string()));
        }
        RegularGrid2::new(
            self.ntau,
            self.nq,
            self.tau_min,
            (self.tau_max - self.tau_min) / (self.ntau - 1) as f64,
            self.q_min,
            (self.q_max - self.q_min) / (self.nq - 1) as f64,
        )
    }
}

#[derive(Args)]
struct SplitArgs {
    /// Extra time splits of the log-polar decomposition.
    #[arg(long, default_value_t = 1)]
    splits_t: usize,
    /// Extra slowness splits of the log-polar decomposition.
    #[arg(long, default_value_t = 1)]
    splits_q: usize,
    /// Directory for cached kernel spectra (safe to delete).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

impl SplitArgs {
    fn options(&self) -> PlanOptions {
        PlanOptions {
            n_splits_t: self.splits_t,
            n_splits_q: self.splits_q,
            cache_dir: self.cache_dir.clone(),
            ..PlanOptions::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic CMP gather from a hyperbolic event list.
    Synth {
        /// Event list: one "tau0 q0 amp freq" per line, '#' comments.
        #[arg(long)]
        events: PathBuf,
        #[arg(long, default_value_t = 512)]
        n1: usize,
        #[arg(long, default_value_t = 512)]
        n2: usize,
        #[arg(long, default_value_t = 1.0)]
        t_max: f64,
        #[arg(long, default_value_t = 1.0)]
        x_max: f64,
        /// White noise rms added to the gather.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Apply the forward transform R_h to a gather.
    Forward {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        radon: RadonGridArgs,
        #[command(flatten)]
        splits: SplitArgs,
        #[arg(long, value_enum, default_value_t = Method::Logpolar)]
        method: Method,
        /// Print per-stage timing statistics to stderr.
        #[arg(long)]
        stats: bool,
    },
    /// Apply the adjoint transform R_h* to a Radon panel.
    Adjoint {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Gather time samples.
        #[arg(long)]
        n1: usize,
        /// Gather traces.
        #[arg(long)]
        n2: usize,
        #[arg(long)]
        t_max: f64,
        #[arg(long)]
        x_max: f64,
        #[command(flatten)]
        splits: SplitArgs,
        #[arg(long, value_enum, default_value_t = Method::Logpolar)]
        method: Method,
        #[arg(long)]
        stats: bool,
    },
    /// Check that forward and adjoint are exact transposes.
    Dottest {
        #[arg(long, default_value_t = 64)]
        n1: usize,
        #[arg(long, default_value_t = 64)]
        n2: usize,
        #[command(flatten)]
        radon: RadonGridArgs,
        #[command(flatten)]
        splits: SplitArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Largest admissible relative dot-product gap.
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
    },
    /// Compare the log-polar forward against direct summation.
    Compare {
        #[arg(short, long)]
        input: PathBuf,
        #[command(flatten)]
        radon: RadonGridArgs,
        #[command(flatten)]
        splits: SplitArgs,
        /// Write the absolute error map to this RSG file.
        #[arg(long)]
        error_map: Option<PathBuf>,
        /// Largest admissible max error relative to the direct result.
        #[arg(long, default_value_t = 5e-3)]
        tolerance: f64,
    },
    /// Attenuate multiples: sparse Radon, mute split, subtraction.
    Demultiple {
        #[arg(short, long)]
        input: PathBuf,
        /// Mute boundary polyline: "tau q" per line, primaries below.
        #[arg(long)]
        mute: PathBuf,
        #[command(flatten)]
        radon: RadonGridArgs,
        #[command(flatten)]
        splits: SplitArgs,
        /// Sparsity weight; defaults to 0.05·max|R_h f|.
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long, default_value_t = 30)]
        iters: usize,
        /// Output gather with multiples subtracted.
        #[arg(short, long)]
        output: PathBuf,
        /// Optional sparse Radon panel output.
        #[arg(long)]
        radon_out: Option<PathBuf>,
        /// Optional modeled primaries gather output.
        #[arg(long)]
        primaries_out: Option<PathBuf>,
        /// Optional modeled multiples gather output.
        #[arg(long)]
        multiples_out: Option<PathBuf>,
    },
    /// Reconstruct missing traces through the sparse Radon model.
    Interpolate {
        #[arg(short, long)]
        input: PathBuf,
        #[command(flatten)]
        radon: RadonGridArgs,
        #[command(flatten)]
        splits: SplitArgs,
        /// Kill this fraction of traces before reconstructing; without
        /// it, all-zero traces of the input are treated as missing.
        #[arg(long)]
        mask_fraction: Option<f64>,
        #[arg(long, value_enum, default_value_t = PatternArg::Random)]
        pattern: PatternArg,
        #[arg(long, default_value_t = 1)]
        mask_seed: u64,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long, default_value_t = 50)]
        iters: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Time forward applications over a range of sizes; CSV to stdout.
    Bench {
        /// Comma-separated grid sizes (N gives an N×N gather).
        #[arg(long, value_delimiter = ',', default_value = "256,512,1024")]
        sizes: Vec<usize>,
        /// Largest size at which the direct method is also timed.
        #[arg(long, default_value_t = 512)]
        direct_max: usize,
        #[command(flatten)]
        splits: SplitArgs,
    },
    /// Render an RSG field as a 16-bit grayscale PGM image.
    Render {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Clip percentile of |amplitude| for the grayscale mapping.
        #[arg(long, default_value_t = 99.0)]
        clip: f64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PatternArg {
    Random,
    Regular,
}

fn read_gather(path: &Path) -> Result<CmpGather, Error> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        return read_csv_gather(path);
    }
    let (grid, data) = read_rsg(path)?;
    CmpGather::new(grid, data)
}

fn print_stats(stats: &lpradon::ApplyStats) {
    eprintln!(
        "stats: total={:.3}s gridding={:.3}s fft={:.3}s interp={:.3}s",
        stats.total_seconds, stats.gridding_seconds, stats.fft_seconds, stats.interp_seconds
    );
    let cells: usize = stats.lattice_sizes.iter().map(|&(m, n)| m * n).sum();
    eprintln!(
        "stats: {} lattice stages {:?}, {} cells, flop proxy {:.3e}",
        stats.lattice_sizes.len(),
        stats.lattice_sizes,
        cells,
        stats.flop_proxy
    );
}

fn default_mu(plan: &OperatorPlan, f: &CmpGather) -> Result<f64, Error> {
    let image = plan.forward(f)?;
    Ok(0.05 * image.data.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

fn run(cli: Cli) -> Result<(), Error> {
    if cli.threads != 1 {
        eprintln!("note: the numerical core is single-threaded; --threads {} ignored", cli.threads);
    }
    match cli.command {
        Command::Synth {
            events,
            n1,
            n2,
            t_max,
            x_max,
            noise,
            seed,
            output,
        } => {
            if n1 < 2 || n2 < 2 {
                return Err(Error::config("synthetic grid needs at least 2x2 samples".to_string()));
            }
            if !(t_max > 0.0 && x_max > 0.0) {
                return Err(Error::config("spans must be positive".to_string()));
            }
            let evs = read_event_specs(&events)?;
            if evs.is_empty() {
                return Err(Error::config(format!("{}: no events", events.display())));
            }
            let grid = RegularGrid2::new(
                n1,
                n2,
                0.0,
                t_max / (n1 - 1) as f64,
                0.0,
                x_max / (n2 - 1) as f64,
            )?;
            let g = synth_gather(grid, &evs, noise, seed)?;
            write_rsg(&output, &g.grid, &g.data)?;
            eprintln!("wrote {n1}x{n2} gather to {}", output.display());
        }
        Command::Forward {
            input,
            output,
            radon,
            splits,
            method,
            stats,
        } => {
            let gather = read_gather(&input)?;
            let rg = radon.grid()?;
            let image = match method {
                Method::Direct => {
                    let t0 = Instant::now();
                    let image = direct_forward(&gather, &rg)?;
                    if stats {
                        eprintln!("stats: direct total={:.3}s", t0.elapsed().as_secs_f64());
                    }
                    image
                }
                Method::Logpolar => {
                    let plan = OperatorPlan::plan(gather.grid, rg, splits.options())?;
                    if stats {
                        let (image, s) = plan.forward_with_stats(&gather)?;
                        print_stats(&s);
                        image
                    } else {
                        plan.forward(&gather)?
                    }
                }
            };
            write_rsg(&output, &image.grid, &image.data)?;
        }
        Command::Adjoint {
            input,
            output,
            n1,
            n2,
            t_max,
            x_max,
            splits,
            method,
            stats,
        } => {
            let (rg, data) = read_rsg(&input)?;
            let image = RadonImage::new(rg, data)?;
            if n1 < 2 || n2 < 2 || !(t_max > 0.0 && x_max > 0.0) {
                return Err(Error::config("bad gather grid parameters".to_string()));
            }
            let gg = RegularGrid2::new(
                n1,
                n2,
                0.0,
                t_max / (n1 - 1) as f64,
                0.0,
                x_max / (n2 - 1) as f64,
            )?;
            let gather = match method {
                Method::Direct => {
                    let t0 = Instant::now();
                    let g = direct_adjoint(&image, &gg)?;
                    if stats {
                        eprintln!("stats: direct total={:.3}s", t0.elapsed().as_secs_f64());
                    }
                    g
                }
                Method::Logpolar => {
                    let plan = OperatorPlan::plan(gg, rg, splits.options())?;
                    if stats {
                        let (g, s) = plan.adjoint_with_stats(&image)?;
                        print_stats(&s);
                        g
                    } else {
                        plan.adjoint(&image)?
                    }
                }
            };
            write_rsg(&output, &gather.grid, &gather.data)?;
        }
        Command::Dottest {
            n1,
            n2,
            radon,
            splits,
            seed,
            tolerance,
        } => {
            let gg = gather_grid_unit(n1, n2)?;
            let rg = radon.grid()?;
            let plan = OperatorPlan::plan(gg, rg, splits.options())?;
            let gap = dot_test_gap(&plan, seed)?;
            println!("dot-test gap: {gap:.3e}");
            if !(gap <= tolerance) {
                return Err(Error::numerical(format!(
                    "dot-test gap {gap:.3e} exceeds tolerance {tolerance:.1e}"
                )));
            }
        }
        Command::Compare {
            input,
            radon,
            splits,
            error_map,
            tolerance,
        } => {
            let gather = read_gather(&input)?;
            let rg = radon.grid()?;
            let plan = OperatorPlan::plan(gather.grid, rg, splits.options())?;
            let fast = plan.forward(&gather)?;
            let reference = direct_forward(&gather, &rg)?;
            let scale = reference.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut err = rg.zeros();
            let mut emax = 0.0f64;
            for ((e, &a), &b) in err.iter_mut().zip(fast.data.iter()).zip(reference.data.iter()) {
                *e = (a - b).abs();
                emax = emax.max(*e);
            }
            let rel = if scale > 0.0 { emax / scale } else { emax };
            println!("max error relative to direct peak: {rel:.3e}");
            if let Some(path) = error_map {
                write_rsg(&path, &rg, &err)?;
            }
            if !(rel <= tolerance) {
                return Err(Error::numerical(format!(
                    "comparison error {rel:.3e} exceeds tolerance {tolerance:.1e}"
                )));
            }
        }
        Command::Demultiple {
            input,
            mute,
            radon,
            splits,
            mu,
            iters,
            output,
            radon_out,
            primaries_out,
            multiples_out,
        } => {
            let gather = read_gather(&input)?;
            let boundary = read_mute_polyline(&mute)?;
            let rg = radon.grid()?;
            let plan = OperatorPlan::plan(gather.grid, rg, splits.options())?;
            let mu = match mu {
                Some(m) => m,
                None => default_mu(&plan, &gather)?,
            };
            let cfg = IstaConfig {
                mu,
                n_iters: iters,
                ..IstaConfig::default()
            };
            let (model, trace) = ista(&plan, &gather, &cfg)?;
            eprintln!(
                "ista: mu={mu:.3e}, {} iterations, final residual {:.3e}",
                iters,
                trace.residual_norm.last().copied().unwrap_or(f64::NAN)
            );
            let (primaries, multiples) = mute_and_split(&model, &boundary)?;
            let modeled_multiples = plan.adjoint(&multiples)?;
            let subtracted = CmpGather::new(gather.grid, &gather.data - &modeled_multiples.data)?;
            write_rsg(&output, &subtracted.grid, &subtracted.data)?;
            if let Some(p) = radon_out {
                write_rsg(&p, &model.grid, &model.data)?;
            }
            if let Some(p) = primaries_out {
                let modeled = plan.adjoint(&primaries)?;
                write_rsg(&p, &modeled.grid, &modeled.data)?;
            }
            if let Some(p) = multiples_out {
                write_rsg(&p, &modeled_multiples.grid, &modeled_multiples.data)?;
            }
        }
        Command::Interpolate {
            input,
            radon,
            splits,
            mask_fraction,
            pattern,
            mask_seed,
            mu,
            iters,
            output,
        } => {
            let mut gather = read_gather(&input)?;
            let rg = radon.grid()?;
            let mask = match mask_fraction {
                Some(fraction) => {
                    let spec = MaskSpec {
                        fraction,
                        seed: mask_seed,
                        pattern: match pattern {
                            PatternArg::Random => MaskPattern::RandomTraces,
                            PatternArg::Regular => MaskPattern::RegularDecimation,
                        },
                    };
                    let mask = make_mask(gather.grid, &spec)?;
                    for j in 0..gather.grid.n2 {
                        if !mask[(0, j)] {
                            for i in 0..gather.grid.n1 {
                                gather.data[(i, j)] = 0.0;
                            }
                        }
                    }
                    mask
                }
                None => {
                    let mut mask = ndarray::Array2::from_elem(gather.data.dim(), true);
                    for j in 0..gather.grid.n2 {
                        if gather.data.column(j).iter().all(|&v| v == 0.0) {
                            for i in 0..gather.grid.n1 {
                                mask[(i, j)] = false;
                            }
                        }
                    }
                    mask
                }
            };
            let dead = (0..gather.grid.n2).filter(|&j| !mask[(0, j)]).count();
            eprintln!("interpolating {dead} of {} traces", gather.grid.n2);
            let plan = OperatorPlan::plan(gather.grid, rg, splits.options())?;
            let mu = match mu {
                Some(m) => m,
                None => default_mu(&plan, &gather)?,
            };
            let cfg = IstaConfig {
                mu,
                n_iters: iters,
                mask: Some(mask.clone()),
                ..IstaConfig::default()
            };
            let (model, _) = ista_masked(&plan, &gather, &cfg)?;
            let modeled = plan.adjoint(&model)?;
            // Keep recorded samples, fill the dead traces from the model.
            let mut merged = gather.data.clone();
            ndarray::Zip::from(&mut merged)
                .and(&modeled.data)
                .and(&mask)
                .for_each(|out, &m, &live| {
                    if !live {
                        *out = m;
                    }
                });
            write_rsg(&output, &gather.grid, &merged)?;
        }
        Command::Bench { sizes, direct_max, splits } => {
            bench(&sizes, direct_max, &splits)?;
        }
        Command::Render { input, output, clip } => {
            let (_, data) = read_rsg(&input)?;
            render_pgm(&output, &data, clip)?;
        }
    }
    Ok(())
}

fn gather_grid_unit(n1: usize, n2: usize) -> Result<RegularGrid2, Error> {
    if n1 < 2 || n2 < 2 {
        return Err(Error::config("grid needs at least 2x2 samples".to_string()));
    }
    RegularGrid2::new(n1, n2, 0.0, 1.0 / (n1 - 1) as f64, 0.0, 1.0 / (n2 - 1) as f64)
}

fn dot_test_gap(plan: &OperatorPlan, seed: u64) -> Result<f64, Error> {
    // Deterministic pseudo-random test vectors.
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut u = CmpGather::zeros(plan.gather_grid);
    for v in u.data.iter_mut() {
        *v = next();
    }
    let mut w = RadonImage::zeros(plan.radon_grid);
    for v in w.data.iter_mut() {
        *v = next();
    }
    let ru = plan.forward(&u)?;
    let rtw = plan.adjoint(&w)?;
    let lhs: f64 = ru.data.iter().zip(w.data.iter()).map(|(a, b)| a * b).sum();
    let rhs: f64 = u.data.iter().zip(rtw.data.iter()).map(|(a, b)| a * b).sum();
    Ok((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE))
}

fn bench_gather(n: usize) -> Result<CmpGather, Error> {
    let grid = gather_grid_unit(n, n)?;
    let events = [
        lpradon::EventSpec::ricker(0.3, 0.35, 1.0, 12.0),
        lpradon::EventSpec::ricker(0.5, 0.55, 0.8, 12.0),
        lpradon::EventSpec::ricker(0.7, 0.45, -0.9, 12.0),
    ];
    synth_gather(grid, &events, 0.0, 7)
}

fn bench(sizes: &[usize], direct_max: usize, splits: &SplitArgs) -> Result<(), Error> {
    if sizes.is_empty() {
        return Err(Error::config("no bench sizes given".to_string()));
    }
    println!("N,method,seconds,ratio_vs_direct");
    for &n in sizes {
        let gather = bench_gather(n)?;
        let rg = RegularGrid2::new(
            n,
            n,
            0.15,
            0.85 / (n - 1) as f64,
            0.2,
            0.7 / (n - 1) as f64,
        )?;
        let direct_seconds = if n <= direct_max {
            let t0 = Instant::now();
            let _ = direct_forward(&gather, &rg)?;
            Some(t0.elapsed().as_secs_f64())
        } else {
            None
        };
        let plan = OperatorPlan::plan(gather.grid, rg, splits.options())?;
        let t0 = Instant::now();
        let _ = plan.forward(&gather)?;
        let logpolar_seconds = t0.elapsed().as_secs_f64();
        if let Some(ds) = direct_seconds {
            println!("{n},direct,{ds:.6},1.000");
            println!("{n},logpolar,{logpolar_seconds:.6},{:.3}", ds / logpolar_seconds);
        } else {
            println!("{n},logpolar,{logpolar_seconds:.6},");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) => 2,
                Error::Io(_) | Error::Format(_) => 3,
                Error::Numerical(_) => 4,
            };
            ExitCode::from(code)
        }
    }
}
