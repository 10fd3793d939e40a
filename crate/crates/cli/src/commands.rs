use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use msraft::equivalence::{check_instance, CheckConfig};
use msraft::flowcore::{FeatureMap, FlowField};
use msraft::flowio::{flow_to_color, load_luminance, mix_sampler, read_flow_file, write_flo, write_ppm, MixSpec};
use msraft::objective::{compute_metrics, improvement_pct};
use msraft::pipeline::{estimate_sequence, ArgmaxUpdater, FeatureConfig, SequenceConfig, UniformMasks};
use msraft::upsample::forward_warp;

use crate::options::{CheckCorrArgs, EstimateArgs, EvalArgs, MixPlanArgs, VizArgs, WarpArgs};
use crate::{Failure, Outcome};

/// Extends an image to the next multiple of `m` on both axes by repeating
/// its last row and column.
fn pad_replicate(img: &FeatureMap, m: usize) -> anyhow::Result<FeatureMap> {
    let (h, w) = img.dims();
    let (ph, pw) = (h.div_ceil(m) * m, w.div_ceil(m) * m);
    if (ph, pw) == (h, w) {
        return Ok(img.clone());
    }
    Ok(FeatureMap::from_fn(img.channels(), ph, pw, |c, y, x| {
        img.get(c, y.min(h - 1), x.min(w - 1))
    })?)
}

fn crop(flow: &FlowField, h: usize, w: usize) -> anyhow::Result<FlowField> {
    Ok(FlowField::from_fn(h, w, |y, x| flow.get(y, x))?)
}

struct PairPaths {
    flow: PathBuf,
    viz: PathBuf,
    init: PathBuf,
}

fn pair_paths(output: &Path, pairs: usize, k: usize) -> PairPaths {
    let flow = if pairs == 1 {
        output.to_path_buf()
    } else {
        output.join(format!("flow_{k:04}.flo"))
    };
    PairPaths {
        viz: flow.with_extension("ppm"),
        init: flow.with_extension("init.flo"),
        flow,
    }
}

pub fn estimate(args: EstimateArgs) -> Outcome {
    let frames = args
        .frames
        .iter()
        .map(|p| load_luminance(p).with_context(|| format!("reading {}", p.display())))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let (h, w) = frames[0].dims();
    for (p, f) in args.frames.iter().zip(&frames) {
        if f.dims() != (h, w) {
            return Err(anyhow!(
                "{} is {}x{}, first frame is {h}x{w}",
                p.display(),
                f.height(),
                f.width()
            )
            .into());
        }
    }
    let features = FeatureConfig {
        scales: args.schedule.scales(),
        levels: args.levels,
        ..FeatureConfig::default()
    };
    let multiple = 1usize << features.scales;
    let padded = frames
        .iter()
        .map(|f| pad_replicate(f, multiple))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let config = SequenceConfig {
        features,
        schedule: args.schedule.clone(),
        radius: args.radius,
        warm_start: args.warm_start,
    };
    let results = estimate_sequence(&padded, &config, &ArgmaxUpdater::default(), &UniformMasks)?;
    let pairs = results.len();
    if pairs > 1 {
        std::fs::create_dir_all(&args.output).with_context(|| format!("creating {}", args.output.display()))?;
    }
    for (k, pair) in results.iter().enumerate() {
        let paths = pair_paths(&args.output, pairs, k);
        let flow = crop(pair.flow(), h, w)?;
        write_flo(&paths.flow, &flow)?;
        if args.viz {
            write_ppm(&paths.viz, &flow_to_color(&flow, None))?;
        }
        if args.save_init {
            write_flo(&paths.init, &crop(&pair.init, h, w)?)?;
        }
        let init = match pair.warm_source {
            Some(src) => format!("warm:{src}"),
            None => "zero".to_string(),
        };
        println!(
            "pair {k} init={init} iterations={} -> {}",
            pair.trace.len(),
            paths.flow.display()
        );
    }
    Ok(())
}

pub fn eval(args: EvalArgs) -> Outcome {
    if args.improve.is_none() && args.flow.is_none() {
        return Err(anyhow!("give FLOW and GT files, or --improve OLD NEW").into());
    }
    if let Some(v) = &args.improve {
        println!("improvement {:+.1}", improvement_pct(v[0], v[1])?);
    }
    let Some(flow_path) = &args.flow else {
        return Ok(());
    };
    let gt_path = args.gt.as_ref().ok_or_else(|| anyhow!("missing ground-truth file"))?;
    let flow = read_flow_file(flow_path).with_context(|| format!("reading {}", flow_path.display()))?;
    let gt = read_flow_file(gt_path).with_context(|| format!("reading {}", gt_path.display()))?;
    let valid = gt.mask();
    let noc = match &args.noc {
        Some(p) => read_flow_file(p)
            .with_context(|| format!("reading {}", p.display()))?
            .mask(),
        None => valid.clone(),
    };
    let metrics = compute_metrics(&flow.flow, &gt.flow, &valid, &noc)?;
    print!("{metrics}");
    Ok(())
}

pub fn check_corr(args: CheckCorrArgs) -> Outcome {
    let config = CheckConfig {
        height: args.height,
        width: args.width,
        channels: args.channels,
        levels: args.levels,
        radius: args.radius,
        max_flow: args.max_flow,
        identical: args.identical,
        perturb: args.perturb,
    };
    let mut worst: Option<(u64, msraft::correlation::Deviation)> = None;
    let mut centre: f64 = 0.0;
    for i in 0..args.instances {
        let seed = args.seed.wrapping_add(i);
        let rep = check_instance(&config, seed)?;
        if worst.is_none_or(|(_, d)| rep.deviation.relative > d.relative) {
            worst = Some((seed, rep.deviation));
        }
        if let Some(c) = rep.centre_deviation {
            centre = centre.max(c);
        }
    }
    println!("instances {}", args.instances);
    let Some((seed, dev)) = worst else {
        return Ok(());
    };
    println!("max_rel_dev {:.3e}", dev.relative);
    if args.identical {
        println!("centre_rel_dev {centre:.3e}");
    }
    if dev.relative > args.tolerance || centre > args.tolerance {
        return Err(Failure::Verification(format!(
            "seed {seed}, pixel (y={}, x={}), level {}, offset (dx={}, dy={}): on-demand {} vs precomputed {}",
            dev.y, dev.x, dev.level, dev.offset.0, dev.offset.1, dev.left, dev.right
        )));
    }
    Ok(())
}

pub fn mix_plan(args: MixPlanArgs) -> Outcome {
    let spec = match &args.spec {
        Some(s) => s.parse::<MixSpec>()?,
        None => MixSpec::rvc_default(),
    };
    let draws = mix_sampler(&spec, args.seed, args.n);
    let mut out = String::new();
    for (i, d) in draws.iter().enumerate() {
        out.push_str(&format!("{i} {d}\n"));
    }
    out.push_str("proportions");
    for name in spec.names() {
        let count = draws.iter().filter(|d| d.as_str() == name).count();
        if args.n == 0 {
            out.push_str(&format!(" {name}=n/a"));
        } else {
            out.push_str(&format!(" {name}={:.4}", count as f64 / args.n as f64));
        }
    }
    println!("{out}");
    Ok(())
}

pub fn warp(args: WarpArgs) -> Outcome {
    let rec = read_flow_file(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    write_flo(&args.output, &forward_warp(&rec.flow))?;
    Ok(())
}

pub fn viz(args: VizArgs) -> Outcome {
    if let Some(m) = args.max_norm {
        if !(m > 0.0 && m.is_finite()) {
            return Err(anyhow!("--max-norm must be positive, got {m}").into());
        }
    }
    let rec = read_flow_file(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    write_ppm(&args.output, &flow_to_color(&rec.flow, args.max_norm))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding_repeats_edges_and_crop_undoes_it() {
        let img = FeatureMap::from_fn(1, 3, 5, |_, y, x| (y * 10 + x) as f64).unwrap();
        let p = pad_replicate(&img, 4).unwrap();
        assert_eq!(p.dims(), (4, 8));
        assert_eq!(p.get(0, 3, 7), img.get(0, 2, 4));
        assert_eq!(p.get(0, 1, 2), img.get(0, 1, 2));
        let f = FlowField::from_fn(4, 8, |y, x| (x as f64, y as f64)).unwrap();
        let c = crop(&f, 3, 5).unwrap();
        assert_eq!(c.dims(), (3, 5));
        assert_eq!(c.get(2, 4), (4.0, 2.0));
    }

    #[test]
    fn sequence_outputs_are_numbered() {
        let p = pair_paths(Path::new("out"), 3, 1);
        assert_eq!(p.flow, Path::new("out/flow_0001.flo"));
        assert_eq!(p.viz, Path::new("out/flow_0001.ppm"));
        assert_eq!(p.init, Path::new("out/flow_0001.init.flo"));
        assert_eq!(pair_paths(Path::new("a.flo"), 1, 0).flow, Path::new("a.flo"));
    }
}
