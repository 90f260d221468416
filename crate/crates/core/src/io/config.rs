//! Flat `key = value` configuration files.
//!
//! Keys are the [`SimConfig`] field names plus `workers` and `batch_size`.
//! Missing keys keep their defaults; unknown keys are errors.

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::parallel::ParallelConfig;
use crate::sim::SimConfig;

fn value<T: FromStr>(key: &str, raw: &str) -> std::result::Result<T, String> {
    raw.parse::<T>()
        .map_err(|_| format!("`{key}` expects {}, got `{raw}`", std::any::type_name::<T>()))
}

fn vec3(key: &str, raw: &str) -> std::result::Result<Vec3, String> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("`{key}` expects `x,y,z`, got `{raw}`"));
    }
    Ok(Vec3::new(
        value(key, parts[0])?,
        value(key, parts[1])?,
        value(key, parts[2])?,
    ))
}

/// Set one field by name. Values are parsed but not range-checked.
pub fn apply_setting(
    sim: &mut SimConfig,
    par: &mut ParallelConfig,
    key: &str,
    raw: &str,
) -> std::result::Result<(), String> {
    let raw = raw.trim();
    match key {
        "r_ball_factor" => sim.r_ball_factor = value(key, raw)?,
        "collision_margin_factor" => sim.collision_margin_factor = value(key, raw)?,
        "l_max_factor" => sim.l_max_factor = value(key, raw)?,
        "p_random_spawn" => sim.p_random_spawn = value(key, raw)?,
        "max_steps_per_ball" => sim.max_steps_per_ball = value(key, raw)?,
        "max_collisions_per_ball" => sim.max_collisions_per_ball = value(key, raw)?,
        "max_balls" => sim.max_balls = value(key, raw)?,
        "dup_threshold" => sim.dup_threshold = value(key, raw)?,
        "dup_streak" => sim.dup_streak = value(key, raw)?,
        "max_spawn_points" => sim.max_spawn_points = value(key, raw)?,
        "spawn_min_separation_factor" => sim.spawn_min_separation_factor = value(key, raw)?,
        "probe_steps" => sim.probe_steps = value(key, raw)?,
        "spawn_nn_reject_factor" => sim.spawn_nn_reject_factor = value(key, raw)?,
        "escape_margin_factor" => sim.escape_margin_factor = value(key, raw)?,
        "perturb_angle" => sim.perturb_angle = value(key, raw)?,
        "seed" => sim.seed = value(key, raw)?,
        "escape_watertight_threshold" => sim.escape_watertight_threshold = value(key, raw)?,
        "initial_spawn" => sim.initial_spawn = Some(vec3(key, raw)?),
        "workers" => par.workers = value(key, raw)?,
        "batch_size" => par.batch_size = value(key, raw)?,
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

/// Parse configuration text on top of the defaults (serial, one worker) and validate.
pub fn parse_config(text: &str) -> Result<(SimConfig, ParallelConfig)> {
    let mut sim = SimConfig::default();
    let mut par = ParallelConfig {
        workers: 1,
        ..ParallelConfig::default()
    };
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let config_err = |message: String| Error::Config { line: i + 1, message };
        let (key, raw) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("expected `key = value`, got `{line}`")))?;
        apply_setting(&mut sim, &mut par, key.trim(), raw).map_err(config_err)?;
    }
    par.sim = sim.clone();
    par.validate()?;
    Ok((sim, par))
}

pub fn read_config(path: &Path) -> Result<(SimConfig, ParallelConfig)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}
