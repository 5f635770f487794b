//! Weight-level obfuscations of a leaked model.

use crate::error::{Error, Result};
use crate::model::{ClassifierHandle, LabeledDataset};
use crate::seed;
use crate::tinylearn::{fit, Mlp, TrainConfig, Targets};

fn mlp_of(h: &ClassifierHandle) -> Result<Mlp> {
    h.as_mlp()
        .cloned()
        .ok_or_else(|| Error::NotAnMlp(h.id().to_string()))
}

/// Zeroes the `floor(fraction · n)` smallest-magnitude weights across all
/// layers. Biases are left alone; ties go to the lower flat index.
pub fn prune(h: &ClassifierHandle, fraction: f64) -> Result<ClassifierHandle> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::DegeneratePrune(fraction));
    }
    let mut mlp = mlp_of(h)?;
    let mut flat: Vec<(f64, usize, usize)> = mlp
        .layers()
        .iter()
        .enumerate()
        .flat_map(|(l, layer)| layer.weights.iter().enumerate().map(move |(i, w)| (w.abs(), l, i)))
        .collect();
    let n_prune = (fraction * flat.len() as f64).floor() as usize;
    // Stable sort keeps flat order among equal magnitudes.
    flat.sort_by(|a, b| a.0.total_cmp(&b.0));
    let layers = mlp.layers_mut();
    for &(_, l, i) in &flat[..n_prune] {
        layers[l].weights[i] = 0.0;
    }
    Ok(ClassifierHandle::new(format!("{}+prune({fraction})", h.id()), mlp))
}

fn quantize_value(w: f64, step: f64, top: f64) -> f64 {
    let level = (w.abs() / step).floor().min(top);
    w.signum() * (level + 0.5) * step
}

/// Rounds each weight to the nearest of `2^bits` evenly spaced levels on
/// `[−w_max, w_max]`, where `w_max` is the layer's largest magnitude.
pub fn quantize(h: &ClassifierHandle, bits: u32) -> Result<ClassifierHandle> {
    if bits < 2 {
        return Err(Error::DegenerateQuantization(bits));
    }
    let mut mlp = mlp_of(h)?;
    // Beyond the f64 mantissa the grid is finer than the weights themselves.
    if bits < 53 {
        let levels = 2f64.powi(bits as i32);
        for layer in mlp.layers_mut() {
            let w_max = layer.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
            if w_max == 0.0 {
                continue;
            }
            let step = 2.0 * w_max / (levels - 1.0);
            let top = levels / 2.0 - 1.0;
            for w in &mut layer.weights {
                *w = quantize_value(*w, step, top);
            }
        }
    }
    Ok(ClassifierHandle::new(format!("{}+quantize({bits})", h.id()), mlp))
}

fn check_dim(h: &ClassifierHandle, data: &LabeledDataset) -> Result<()> {
    if data.dim() != h.input_dim() {
        return Err(Error::IncompatibleTask(format!(
            "model {} takes {} inputs, data has {}",
            h.id(),
            h.input_dim(),
            data.dim()
        )));
    }
    Ok(())
}

/// Continues training a copy of `h` on `data`.
pub fn finetune(h: &ClassifierHandle, data: &LabeledDataset, cfg: &TrainConfig, seed: u64) -> Result<ClassifierHandle> {
    check_dim(h, data)?;
    if data.num_classes() != h.num_classes() {
        return Err(Error::IncompatibleTask(format!(
            "model {} has {} classes, data has {}",
            h.id(),
            h.num_classes(),
            data.num_classes()
        )));
    }
    let mut mlp = mlp_of(h)?;
    fit(
        &mut mlp,
        data.points(),
        &Targets::Hard(data.labels().to_vec()),
        cfg,
        seed::derive(seed, &[seed::label("finetune")]),
    )?;
    Ok(ClassifierHandle::new(format!("{}+finetune", h.id()), mlp))
}

/// Reinitialises the output layer for `new_task`'s classes and trains on it.
pub fn transfer(h: &ClassifierHandle, new_task: &LabeledDataset, cfg: &TrainConfig, seed: u64) -> Result<ClassifierHandle> {
    check_dim(h, new_task)?;
    let mut mlp = mlp_of(h)?;
    mlp.reset_head(new_task.num_classes(), seed);
    fit(
        &mut mlp,
        new_task.points(),
        &Targets::Hard(new_task.labels().to_vec()),
        cfg,
        seed::derive(seed, &[seed::label("transfer")]),
    )?;
    Ok(ClassifierHandle::new(format!("{}+transfer", h.id()), mlp))
}
