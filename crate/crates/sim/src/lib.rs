//! Headless stand-ins for the phone (placement) and headset (preview)
//! apps. They speak the same HTTP protocol as the real clients, so a script
//! run here exercises the service end to end.

// Error enums carry the offending keys for diagnostics; boxing them buys nothing here.
#![allow(clippy::result_large_err)]

mod client;
mod generate;

use std::collections::BTreeMap;
use std::thread;
use std::time::{Duration, Instant};

use layoutminer_core::script::{Action, SessionScript, Transcript, TranscriptEntry};
use layoutminer_core::{
    Applied, CropRegion, EventKind, Layout, ScenarioKey, ScreenshotId, WidgetId,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use client::{Changes, Client, SimError};
pub use generate::{random_script, ScriptShape};

/// A placement run stopped at `step` because the service refused it.
#[derive(Debug, Error)]
#[error("step {step} ({action}) failed: {error}")]
pub struct PlacementAbort {
    pub step: usize,
    pub action: &'static str,
    pub error: SimError,
    /// Steps completed before the failure.
    pub partial: Transcript,
}

#[derive(Debug, Clone)]
pub struct PlacementOptions {
    pub client_id: String,
    /// Sleep between steps so that `at_ms` offsets are honored in wall time.
    pub realtime: bool,
}

impl Default for PlacementOptions {
    fn default() -> Self {
        Self {
            client_id: "phone".into(),
            realtime: false,
        }
    }
}

/// Small deterministic PNG standing in for a phone screenshot.
pub fn synthetic_screenshot(alias: &str) -> Vec<u8> {
    let seed = alias
        .bytes()
        .fold(0u32, |h, b| h.wrapping_mul(31).wrapping_add(b as u32));
    let img = image::RgbImage::from_fn(36, 78, |x, y| {
        image::Rgb([
            (seed as u8) ^ (x as u8),
            (seed >> 8) as u8 ^ (y as u8),
            (seed >> 16) as u8,
        ])
    });
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png)
        .expect("png encodes");
    out.into_inner()
}

/// Executes `script` step by step as a placement client.
///
/// The scenario is registered first (a no-op if it exists). `place` and
/// `reselect` names resolve through aliases created earlier in the script,
/// falling back to the name itself as a widget id.
pub fn run_placement(
    script: &SessionScript,
    client: &Client,
    opts: &PlacementOptions,
) -> Result<Transcript, PlacementAbort> {
    let client = client.placement(&opts.client_id);
    let scenario = &script.scenario;
    let mut transcript = Transcript::default();
    let abort =
        |step: usize, action: &'static str, error: SimError, t: &Transcript| PlacementAbort {
            step,
            action,
            error,
            partial: t.clone(),
        };
    client
        .register_scenario(scenario)
        .map_err(|e| abort(0, "register_scenario", e, &transcript))?;

    let mut screenshots: BTreeMap<String, ScreenshotId> = BTreeMap::new();
    let mut last_placed: Option<WidgetId> = None;
    let start = Instant::now();
    let t0 = script.steps.first().map_or(0, |s| s.at_ms);

    for (i, step) in script.steps.iter().enumerate() {
        if opts.realtime {
            let due = Duration::from_millis(step.at_ms - t0);
            if let Some(wait) = due.checked_sub(start.elapsed()) {
                thread::sleep(wait);
            }
        }
        let name = step.action.name();
        let resolve = |alias: &str, t: &Transcript| {
            t.widget_ids
                .get(alias)
                .cloned()
                .unwrap_or_else(|| WidgetId::new(alias))
        };
        let mut entry = TranscriptEntry {
            step: i,
            action: name.to_owned(),
            widget_id: None,
            kind: None,
            pose: None,
            seq: None,
        };
        let result = match &step.action {
            Action::CreateWidget {
                widget,
                screenshot,
                crop,
            } => (|| {
                let shot_alias = screenshot
                    .clone()
                    .unwrap_or_else(|| format!("shot:{widget}"));
                let shot = match screenshots.get(&shot_alias) {
                    Some(id) => id.clone(),
                    None => {
                        let id = client.upload_screenshot(
                            scenario.participant_id(),
                            &synthetic_screenshot(&shot_alias),
                            None,
                            step.at_ms,
                        )?;
                        screenshots.insert(shot_alias, id.clone());
                        id
                    }
                };
                let id =
                    client.create_widget(&shot, crop.unwrap_or(CropRegion::FULL), step.at_ms)?;
                transcript.widget_ids.insert(widget.clone(), id.clone());
                entry.widget_id = Some(id);
                Ok(())
            })(),
            Action::Place { widget, pose } => {
                let id = resolve(widget, &transcript);
                client
                    .post_event(scenario, Some(&id), EventKind::Add, *pose, step.at_ms)
                    .map(|seq| {
                        entry.seq = Some(seq);
                        entry.kind = Some(EventKind::Add);
                        entry.pose = Some(*pose);
                        entry.widget_id = Some(id.clone());
                        last_placed = Some(id);
                    })
            }
            Action::AdjustLast { pose } => client
                .post_event(scenario, None, EventKind::Update, *pose, step.at_ms)
                .map(|seq| {
                    entry.seq = Some(seq);
                    entry.kind = Some(EventKind::Update);
                    entry.pose = Some(*pose);
                    entry.widget_id = last_placed.clone();
                }),
            Action::Reselect { widget, pose } => {
                let id = resolve(widget, &transcript);
                client
                    .post_event(scenario, Some(&id), EventKind::Update, *pose, step.at_ms)
                    .map(|seq| {
                        entry.seq = Some(seq);
                        entry.kind = Some(EventKind::Update);
                        entry.pose = Some(*pose);
                        entry.widget_id = Some(id);
                    })
            }
            Action::PoseSample { pose } => client.post_pose_sample(scenario, *pose, step.at_ms),
        };
        if let Err(e) = result {
            return Err(abort(i, name, e, &transcript));
        }
        transcript.entries.push(entry);
    }
    Ok(transcript)
}

/// Delivery faults a preview client can inject into its own feed handling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Faults {
    /// Apply every batch twice.
    pub duplicate: bool,
    /// Apply batches one event at a time, in chunks of at most two.
    pub split: bool,
    /// Re-request from a few seqs before the last one seen.
    pub overlap: bool,
}

#[derive(Debug, Clone)]
pub struct PreviewOptions {
    pub client_id: String,
    pub poll_interval: Duration,
    /// Stop after this many consecutive polls with nothing new.
    pub stop_after_quiet_polls: u32,
    /// Long-poll budget per request; 0 polls without waiting.
    pub wait_ms: u64,
    pub faults: Faults,
    /// Safety stop; `None` polls until quiet.
    pub max_polls: Option<u64>,
}

impl Default for PreviewOptions {
    fn default() -> Self {
        Self {
            client_id: "hmd".into(),
            poll_interval: Duration::from_millis(250),
            stop_after_quiet_polls: 3,
            wait_ms: 0,
            faults: Faults::default(),
            max_polls: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreviewOutcome {
    pub layout: Layout,
    pub polls: u64,
    pub events_received: u64,
    /// Events that were already applied when they arrived again.
    pub duplicates_ignored: u64,
}

/// Mirrors a scenario's layout by polling its change feed until it has
/// been quiet for `stop_after_quiet_polls` consecutive polls.
pub fn run_preview(
    scenario: &ScenarioKey,
    client: &Client,
    opts: &PreviewOptions,
) -> Result<PreviewOutcome, SimError> {
    let client = client.preview(&opts.client_id);
    let mut out = PreviewOutcome {
        layout: Layout::empty(scenario.clone()),
        polls: 0,
        events_received: 0,
        duplicates_ignored: 0,
    };
    let mut quiet = 0;
    loop {
        let since = if opts.faults.overlap {
            out.layout.as_of_seq.saturating_sub(2)
        } else {
            out.layout.as_of_seq
        };
        let batch = client.changes(scenario, since, opts.wait_ms)?;
        out.polls += 1;
        let before = out.layout.as_of_seq;
        out.events_received += batch.events.len() as u64;
        let rounds = if opts.faults.duplicate { 2 } else { 1 };
        for _ in 0..rounds {
            let chunk = if opts.faults.split {
                2
            } else {
                batch.events.len().max(1)
            };
            for part in batch.events.chunks(chunk) {
                for e in part {
                    match out.layout.apply(e) {
                        Ok(Applied::Applied) => {}
                        Ok(Applied::Duplicate) => out.duplicates_ignored += 1,
                        Err(e) => return Err(SimError::Decode(format!("feed out of order: {e}"))),
                    }
                }
            }
        }
        if out.layout.as_of_seq == before {
            quiet += 1;
            if quiet >= opts.stop_after_quiet_polls {
                return Ok(out);
            }
        } else {
            quiet = 0;
        }
        if opts.max_polls.is_some_and(|m| out.polls >= m) {
            return Ok(out);
        }
        thread::sleep(opts.poll_interval);
    }
}
