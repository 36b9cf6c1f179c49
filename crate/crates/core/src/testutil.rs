//! Builders shared by unit tests.

use crate::dataset::Dataset;
use crate::model::{
    Annotation, AnnotationBody, BlobHash, CropRegion, EventKind, Pose, ScenarioKey, Screenshot,
    UiType, Widget,
};

pub fn key(p: &str, env: &str, task: &str) -> ScenarioKey {
    ScenarioKey::new(p, env, task).unwrap()
}

pub struct Fixture {
    pub ds: Dataset,
}

impl Fixture {
    pub fn new() -> Self {
        Self {
            ds: Dataset::default(),
        }
    }

    pub fn shot(&mut self, id: &str, participant: &str) {
        self.ds.screenshots.insert(
            id.into(),
            Screenshot {
                id: id.into(),
                participant_id: participant.into(),
                image_ref: BlobHash::new(format!("{id}-hash")),
                app_hint: None,
                captured_at_ms: 0,
                redacted: false,
            },
        );
    }

    pub fn widget(&mut self, id: &str, shot: &str, crop: CropRegion) {
        self.ds.widgets.insert(
            id.into(),
            Widget {
                id: id.into(),
                screenshot_id: shot.into(),
                crop,
                image_ref: BlobHash::new(format!("{id}-crop")),
                created_at_ms: 0,
            },
        );
    }

    pub fn annotate(&mut self, id: &str, f: impl FnOnce(&mut AnnotationBody)) {
        let mut body = AnnotationBody {
            ui_types: [UiType::InformationalComponent].into(),
            category: "Productivity".into(),
            ..Default::default()
        };
        f(&mut body);
        self.ds.annotations.insert(
            id.into(),
            Annotation {
                widget_id: id.into(),
                body,
                version: 1,
            },
        );
    }

    pub fn place(&mut self, scenario: &ScenarioKey, id: &str, pos: [f64; 3]) {
        self.ds.push_event(
            scenario,
            id,
            EventKind::Add,
            Pose::at(pos[0], pos[1], pos[2]),
        );
    }

    /// A widget with its own screenshot, placed at `pos` and annotated.
    pub fn placed(
        &mut self,
        scenario: &ScenarioKey,
        id: &str,
        pos: [f64; 3],
        f: impl FnOnce(&mut AnnotationBody),
    ) {
        let shot = format!("s-{id}");
        self.shot(&shot, scenario.participant_id());
        self.widget(id, &shot, CropRegion::FULL);
        self.place(scenario, id, pos);
        self.annotate(id, f);
    }
}
