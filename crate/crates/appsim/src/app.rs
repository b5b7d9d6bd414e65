use empathd_core::impairments::AudioBuffer;
use empathd_core::{ColorImage, Rgb};
use empathd_wire::{TouchAction, TouchEvent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::font::{draw_text, draw_text_centred, text_size};
use crate::mapping::TouchMapping;

pub const RENDER_WIDTH: u32 = 1080;
pub const RENDER_HEIGHT: u32 = 1920;

const BACKGROUND: Rgb = [0.12, 0.12, 0.14];
const KEY: Rgb = [0.25, 0.27, 0.32];
const OPERATOR: Rgb = [0.85, 0.50, 0.15];
const TEXT: Rgb = [1.0, 1.0, 1.0];
pub const STIMULUS_COLOR: Rgb = [1.0, 0.85, 0.2];
const MAX_DISPLAY: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AppKind {
    /// Calculator-style key grid.
    Grid,
    /// Number search: tap the grid cell matching the stimulus.
    Pointing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x as f64
            && y >= self.y as f64
            && x < (self.x + self.w) as f64
            && y < (self.y + self.h) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Widget {
    pub id: String,
    pub rect: Rect,
    pub label: String,
    pub fill: Rgb,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "app", rename_all = "camelCase")]
pub enum AppState {
    Grid {
        display: String,
    },
    #[serde(rename_all = "camelCase")]
    Pointing {
        trial: u32,
        stimulus: String,
        correct: u32,
    },
}

/// One `up` event seen by the pointing task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TapRecord {
    pub trial: u32,
    pub stimulus: String,
    pub tapped: Option<String>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TouchOutcome {
    pub changed: bool,
    pub hit: Option<String>,
}

#[derive(Debug, Clone)]
pub struct AppScreen {
    pub kind: AppKind,
    pub widgets: Vec<Widget>,
    pub state: AppState,
    pub render_size: (u32, u32),
    pub mapping: TouchMapping,
    pub taps: Vec<TapRecord>,
    rng: ChaCha8Rng,
    audio: Vec<AudioBuffer>,
}

impl AppScreen {
    pub fn new(kind: AppKind, seed: u64) -> Self {
        match kind {
            AppKind::Grid => Self::grid(),
            AppKind::Pointing => Self::pointing(seed),
        }
    }

    pub fn grid() -> Self {
        let rows = [
            ["7", "8", "9", "+"],
            ["4", "5", "6", "-"],
            ["1", "2", "3", "*"],
            ["C", "0", "=", "/"],
        ];
        let mut widgets = Vec::new();
        let (x0, y0, cw, ch, gap) = (24u32, 640u32, 246u32, 300u32, 16u32);
        for (r, row) in rows.iter().enumerate() {
            for (c, label) in row.iter().enumerate() {
                let operator = !label.chars().all(|ch| ch.is_ascii_digit());
                widgets.push(Widget {
                    id: label.to_string(),
                    rect: Rect {
                        x: x0 + c as u32 * (cw + gap),
                        y: y0 + r as u32 * (ch + gap),
                        w: cw,
                        h: ch,
                    },
                    label: label.to_string(),
                    fill: if operator { OPERATOR } else { KEY },
                });
            }
        }
        AppScreen {
            kind: AppKind::Grid,
            widgets,
            state: AppState::Grid {
                display: "0".into(),
            },
            render_size: (RENDER_WIDTH, RENDER_HEIGHT),
            mapping: TouchMapping::identity(RENDER_WIDTH, RENDER_HEIGHT),
            taps: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(0),
            audio: Vec::new(),
        }
    }

    /// 5×6 grid of the numbers 1–30 under a stimulus banner.
    pub fn pointing(seed: u64) -> Self {
        let mut widgets = Vec::new();
        let (x0, y0, cw, ch, gap) = (30u32, 420u32, 192u32, 230u32, 12u32);
        for r in 0..6u32 {
            for c in 0..5u32 {
                let n = r * 5 + c + 1;
                widgets.push(Widget {
                    id: n.to_string(),
                    rect: Rect {
                        x: x0 + c * (cw + gap),
                        y: y0 + r * (ch + gap),
                        w: cw,
                        h: ch,
                    },
                    label: n.to_string(),
                    fill: KEY,
                });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stimulus = widgets[rng.gen_range(0..widgets.len())].id.clone();
        AppScreen {
            kind: AppKind::Pointing,
            widgets,
            state: AppState::Pointing {
                trial: 0,
                stimulus,
                correct: 0,
            },
            render_size: (RENDER_WIDTH, RENDER_HEIGHT),
            mapping: TouchMapping::identity(RENDER_WIDTH, RENDER_HEIGHT),
            taps: Vec::new(),
            rng,
            audio: Vec::new(),
        }
    }

    pub fn with_mapping(mut self, mapping: TouchMapping) -> Self {
        self.mapping = mapping;
        self
    }

    pub fn state_id(&self) -> String {
        match &self.state {
            AppState::Grid { display } => format!("grid:{display}"),
            AppState::Pointing {
                trial, stimulus, ..
            } => format!("pointing:{trial}:{stimulus}"),
        }
    }

    /// Widget under an app-space point.
    pub fn widget_at(&self, x: f64, y: f64) -> Option<&Widget> {
        self.widgets.iter().find(|w| w.rect.contains(x, y))
    }

    /// Applies one touch. Only `up` events act; they report the widget hit
    /// and whether the app state changed.
    pub fn handle_touch(&mut self, ev: &TouchEvent) -> TouchOutcome {
        if ev.action != TouchAction::Up {
            return TouchOutcome {
                changed: false,
                hit: None,
            };
        }
        let (x, y) = self.mapping.to_app(ev.x, ev.y);
        let hit = self.widget_at(x, y).map(|w| w.id.clone());
        let before = self.state.clone();
        match &mut self.state {
            AppState::Grid { display } => {
                if let Some(id) = &hit {
                    *display = press(display, id);
                }
            }
            AppState::Pointing {
                trial,
                stimulus,
                correct,
            } => {
                let ok = hit.as_deref() == Some(stimulus.as_str());
                self.taps.push(TapRecord {
                    trial: *trial,
                    stimulus: stimulus.clone(),
                    tapped: hit.clone(),
                    correct: ok,
                });
                if hit.is_some() {
                    *correct += u32::from(ok);
                    *trial += 1;
                    *stimulus = self.widgets[self.rng.gen_range(0..self.widgets.len())].id.clone();
                }
            }
        }
        let changed = self.state != before;
        if changed {
            self.audio.push(AudioBuffer::sine(48_000, 1200.0, 0.2, 1920));
        }
        TouchOutcome { changed, hit }
    }

    /// Audio produced since the last call.
    pub fn take_audio(&mut self) -> Vec<AudioBuffer> {
        std::mem::take(&mut self.audio)
    }

    pub fn accuracy(&self) -> f64 {
        if self.taps.is_empty() {
            return 0.0;
        }
        self.taps.iter().filter(|t| t.correct).count() as f64 / self.taps.len() as f64
    }

    /// Deterministic raster of the current state.
    pub fn render(&self) -> ColorImage {
        let (w, h) = self.render_size;
        let mut img = ColorImage::new(w, h, BACKGROUND);
        for wd in &self.widgets {
            fill_rect(&mut img, wd.rect, wd.fill);
            let cx = (wd.rect.x + wd.rect.w / 2) as i64;
            let cy = (wd.rect.y + wd.rect.h / 2) as i64;
            draw_text_centred(&mut img, &wd.label, cx, cy, 12, TEXT);
        }
        match &self.state {
            AppState::Grid { display } => {
                let scale = 10;
                let (tw, th) = text_size(display, scale);
                let x = w as i64 - 48 - tw as i64;
                draw_text(&mut img, display, x, 400 - th as i64, scale, TEXT);
            }
            AppState::Pointing {
                trial, stimulus, ..
            } => {
                draw_text(&mut img, &format!("TRIAL {}", trial + 1), 30, 40, 4, TEXT);
                draw_text_centred(&mut img, stimulus, (w / 2) as i64, STIMULUS_CENTRE_Y, 18, STIMULUS_COLOR);
            }
        }
        img
    }
}

/// Vertical centre of the pointing-task stimulus.
pub const STIMULUS_CENTRE_Y: i64 = 230;

pub fn fill_rect(img: &mut ColorImage, r: Rect, c: Rgb) {
    let x1 = (r.x + r.w).min(img.width);
    let y1 = (r.y + r.h).min(img.height);
    for y in r.y..y1 {
        let row = img.index(0, y);
        img.data[row + r.x as usize..row + x1 as usize].fill(c);
    }
}

/// Calculator key press on a display string.
fn press(display: &str, key: &str) -> String {
    match key {
        "C" => "0".into(),
        "=" => match evaluate(display) {
            Some(v) => v,
            None => display.to_string(),
        },
        k if k.chars().all(|c| c.is_ascii_digit()) => {
            if display == "ERR" || display == "0" {
                return k.to_string();
            }
            if display.len() >= MAX_DISPLAY {
                return display.to_string();
            }
            format!("{display}{k}")
        }
        op => {
            let ends_with_digit = display.chars().last().is_some_and(|c| c.is_ascii_digit());
            if !ends_with_digit || display.len() >= MAX_DISPLAY {
                return display.to_string();
            }
            format!("{display}{op}")
        }
    }
}

fn is_op(c: char) -> bool {
    "+-*/".contains(c)
}

/// Left-to-right integer evaluation; `None` when there is nothing to do.
fn evaluate(expr: &str) -> Option<String> {
    if !expr.contains(is_op) || !expr.ends_with(|c: char| c.is_ascii_digit()) {
        return None;
    }
    let mut acc = Some(0i64);
    let mut op = '+';
    for token in expr.split_inclusive(is_op) {
        let (num, next) = match token.chars().last() {
            Some(c) if is_op(c) => (&token[..token.len() - 1], c),
            _ => (token, '+'),
        };
        let n: i64 = num.parse().ok()?;
        acc = acc.and_then(|a| match op {
            '+' => a.checked_add(n),
            '-' => a.checked_sub(n),
            '*' => a.checked_mul(n),
            _ => a.checked_div(n),
        });
        op = next;
    }
    let s = acc.map_or_else(|| "ERR".to_string(), |v| v.to_string());
    Some(if s.len() > MAX_DISPLAY { "ERR".to_string() } else { s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use empathd_wire::digest;

    fn up(x: f64, y: f64) -> TouchEvent {
        TouchEvent {
            x,
            y,
            action: TouchAction::Up,
            t_micros: 0,
        }
    }

    fn centre(app: &AppScreen, id: &str) -> (f64, f64) {
        let r = app.widgets.iter().find(|w| w.id == id).unwrap().rect;
        ((r.x + r.w / 2) as f64, (r.y + r.h / 2) as f64)
    }

    #[test]
    fn calculator_arithmetic() {
        assert_eq!(evaluate("12+30*2"), Some("84".into()));
        assert_eq!(evaluate("7/0"), Some("ERR".into()));
        assert_eq!(evaluate("7"), None);
        assert_eq!(evaluate("7+"), None);
        assert_eq!(press("0", "0"), "0");
        assert_eq!(press("0", "4"), "4");
        assert_eq!(press("0", "+"), "0+");
        assert_eq!(press("12", "C"), "0");
        assert_eq!(press("3", "+"), "3+");
        assert_eq!(press("3+", "-"), "3+");
        assert_eq!(press("ERR", "5"), "5");
    }

    #[test]
    fn tap_outside_changes_nothing() {
        let mut app = AppScreen::grid();
        let out = app.handle_touch(&up(5.0, 5.0));
        assert_eq!(out, TouchOutcome { changed: false, hit: None });
    }

    #[test]
    fn tap_seven_advances_state() {
        let mut app = AppScreen::grid();
        let (x, y) = centre(&app, "7");
        let before = digest(&app.render());
        let down = TouchEvent {
            action: TouchAction::Down,
            ..up(x, y)
        };
        assert!(!app.handle_touch(&down).changed);
        let out = app.handle_touch(&up(x, y));
        assert_eq!(out.hit.as_deref(), Some("7"));
        assert!(out.changed);
        assert_eq!(app.state_id(), "grid:7");
        assert_ne!(digest(&app.render()), before);
        assert_eq!(app.take_audio().len(), 1);
        assert!(app.take_audio().is_empty());
    }

    #[test]
    fn clear_on_empty_display_is_not_a_change() {
        let mut app = AppScreen::grid();
        let (x, y) = centre(&app, "C");
        let out = app.handle_touch(&up(x, y));
        assert_eq!(out.hit.as_deref(), Some("C"));
        assert!(!out.changed);
    }

    #[test]
    fn state_changes_are_exactly_visible_changes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in [AppKind::Grid, AppKind::Pointing] {
            let mut app = AppScreen::new(kind, 1);
            let mut last = digest(&app.render());
            for _ in 0..150 {
                let out = app.handle_touch(&up(rng.gen_range(0.0..1080.0), rng.gen_range(0.0..1920.0)));
                let now = digest(&app.render());
                assert_eq!(out.changed, now != last, "{kind:?} {}", app.state_id());
                last = now;
            }
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let a = AppScreen::pointing(4);
        let b = AppScreen::pointing(4);
        assert_eq!(digest(&a.render()), digest(&b.render()));
        let g = AppScreen::grid();
        assert_eq!(g.render(), g.render());
        assert_eq!((g.render().width, g.render().height), (1080, 1920));
    }

    #[test]
    fn widgets_fit_the_render_size() {
        for app in [AppScreen::grid(), AppScreen::pointing(1)] {
            for w in &app.widgets {
                assert!(w.rect.x + w.rect.w <= RENDER_WIDTH);
                assert!(w.rect.y + w.rect.h <= RENDER_HEIGHT);
            }
        }
    }

    #[test]
    fn stimulus_region_has_ink() {
        let app = AppScreen::pointing(9);
        let img = app.render();
        let mut ink = 0;
        for y in 150..310 {
            for x in 300..780 {
                if img.get(x, y) == STIMULUS_COLOR {
                    ink += 1;
                }
            }
        }
        assert!(ink > 1000, "{ink}");
    }

    #[test]
    fn pointing_stimuli_cover_the_grid() {
        let mut app = AppScreen::pointing(123);
        let mut counts = std::collections::HashMap::new();
        let (x, y) = centre(&app, "1");
        for _ in 0..3000 {
            if let AppState::Pointing { stimulus, .. } = &app.state {
                *counts.entry(stimulus.clone()).or_insert(0) += 1;
            }
            app.handle_touch(&up(x, y));
        }
        assert_eq!(counts.len(), 30);
        assert!(counts.values().all(|&c| (50..=150).contains(&c)));
    }
}
