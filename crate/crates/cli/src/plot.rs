//! Static SVG charts from a campaign summary.

use std::fmt::Write;

use idionet::experiments::{TTest, WorldSummary};

const W: f64 = 640.0;
const H: f64 = 360.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const BAR: &str = "#4a78a8";
const STALL: &str = "#c8553d";
const MARK: &str = "#222";

/// `(file name, svg text)` for the three charts.
pub fn render_all(s: &WorldSummary) -> Vec<(&'static str, String)> {
    vec![
        ("fitness.svg", fitness_chart(s)),
        ("mu_rate.svg", mu_chart(s)),
        ("significance.svg", significance_table(s)),
    ]
}

fn open(svg: &mut String, w: f64, h: f64, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        w / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Rounds up to 1, 2 or 5 times a power of ten.
fn nice_max(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|&m| m >= v)
        .unwrap_or(10.0 * mag)
}

struct Axes {
    max: f64,
    n: usize,
}

impl Axes {
    fn slot(&self) -> f64 {
        (W - LEFT - RIGHT) / self.n as f64
    }
    fn x(&self, i: usize) -> f64 {
        LEFT + self.slot() * i as f64
    }
    fn y(&self, v: f64) -> f64 {
        H - BOTTOM - (H - TOP - BOTTOM) * (v / self.max).clamp(0.0, 1.0)
    }

    fn draw(&self, svg: &mut String, labels: &[String], unit: &str) {
        for k in 0..=4 {
            let v = self.max * k as f64 / 4.0;
            let y = self.y(v);
            let _ = writeln!(
                svg,
                r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##,
                W - RIGHT
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                y + 4.0,
                trim(v)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(unit)
        );
        for (i, label) in labels.iter().enumerate() {
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                self.x(i) + self.slot() / 2.0,
                H - BOTTOM + 16.0,
                escape(label)
            );
        }
    }
}

fn trim(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.1}")
    }
}

fn legend(svg: &mut String, items: &[(&str, &str)]) {
    let mut x = LEFT;
    for (color, text) in items {
        let _ = writeln!(
            svg,
            r#"<rect x="{x:.1}" y="{:.1}" width="10" height="10" fill="{color}"/>"#,
            H - 22.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            x + 14.0,
            H - 13.0,
            escape(text)
        );
        x += 30.0 + 7.0 * text.len() as f64;
    }
}

/// Mean F per controller; the darker lower segment is the stall share
/// ½·φ·σ̄.
pub fn fitness_chart(s: &WorldSummary) -> String {
    let mut svg = String::new();
    open(
        &mut svg,
        W,
        H,
        &format!("Mean fitness F, world {}", s.world),
    );
    let max = s
        .controllers
        .iter()
        .filter_map(|c| c.mean_f)
        .fold(0.0, f64::max);
    let ax = Axes {
        max: nice_max(max),
        n: s.controllers.len(),
    };
    let labels: Vec<String> = s
        .controllers
        .iter()
        .map(|c| c.controller.to_string())
        .collect();
    ax.draw(&mut svg, &labels, "F (s)");
    let bw = ax.slot() * 0.6;
    for (i, c) in s.controllers.iter().enumerate() {
        let x = ax.x(i) + (ax.slot() - bw) / 2.0;
        let Some(f) = c.mean_f else {
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">n/a</text>"#,
                x + bw / 2.0,
                ax.y(0.0) - 4.0
            );
            continue;
        };
        let _ = writeln!(
            svg,
            r#"<rect x="{x:.1}" y="{:.1}" width="{bw:.1}" height="{:.1}" fill="{BAR}"><title>{}: F {f:.1}</title></rect>"#,
            ax.y(f),
            ax.y(0.0) - ax.y(f),
            c.controller
        );
        if let (Some(phi), Some(sigma)) = (s.phi, c.mean_sigma) {
            let stall = (0.5 * phi * sigma).min(f);
            let _ = writeln!(
                svg,
                r#"<rect x="{x:.1}" y="{:.1}" width="{bw:.1}" height="{:.1}" fill="{STALL}"><title>stall share {stall:.1}</title></rect>"#,
                ax.y(stall),
                ax.y(0.0) - ax.y(stall)
            );
        }
    }
    legend(&mut svg, &[(BAR, "time share"), (STALL, "stall share")]);
    svg.push_str("</svg>\n");
    svg
}

/// Pooled μ rate per controller, with markers for the stalled and free
/// rates.
pub fn mu_chart(s: &WorldSummary) -> String {
    let mut svg = String::new();
    open(&mut svg, W, H, &format!("Mu rate, world {}", s.world));
    let top = s
        .controllers
        .iter()
        .flat_map(|c| [c.mu_rate, c.stalled_mu_rate, c.free_mu_rate])
        .fold(0.0, f64::max);
    let ax = Axes {
        max: nice_max(100.0 * top),
        n: s.controllers.len(),
    };
    let labels: Vec<String> = s
        .controllers
        .iter()
        .map(|c| c.controller.to_string())
        .collect();
    ax.draw(&mut svg, &labels, "mu rate (%)");
    let bw = ax.slot() * 0.6;
    for (i, c) in s.controllers.iter().enumerate() {
        let x = ax.x(i) + (ax.slot() - bw) / 2.0;
        let v = 100.0 * c.mu_rate;
        let _ = writeln!(
            svg,
            r#"<rect x="{x:.1}" y="{:.1}" width="{bw:.1}" height="{:.1}" fill="{BAR}"><title>{}: {v:.1}%</title></rect>"#,
            ax.y(v),
            ax.y(0.0) - ax.y(v),
            c.controller
        );
        for (rate, color) in [(c.stalled_mu_rate, STALL), (c.free_mu_rate, MARK)] {
            let y = ax.y(100.0 * rate);
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="3"/>"#,
                x + bw
            );
        }
    }
    legend(
        &mut svg,
        &[
            (BAR, "overall"),
            (STALL, "stalled ticks"),
            (MARK, "free ticks"),
        ],
    );
    svg.push_str("</svg>\n");
    svg
}

fn cell(t: &Option<TTest>) -> (&'static str, String) {
    match t {
        None => ("#eeeeee", "n/a".into()),
        Some(t) => {
            let color = match t.significant_at.last() {
                Some(&l) if l >= 99.9 => "#1a6e3a",
                Some(&l) if l >= 99.0 => "#3f9e5a",
                Some(_) => "#8fce9b",
                None => "#ffffff",
            };
            (color, format!("{:.1}", t.confidence))
        }
    }
}

/// Rows: rivals. Columns: T, σ, F. Cells show the confidence that I_D has
/// the lower mean, shaded by the highest level reached.
pub fn significance_table(s: &WorldSummary) -> String {
    let cw = 90.0;
    let rh = 24.0;
    let x0 = 70.0;
    let y0 = 50.0;
    let w = x0 + 3.0 * cw + 20.0;
    let h = y0 + rh * (s.significance.len() as f64 + 1.0) + 50.0;
    let mut svg = String::new();
    open(&mut svg, w, h, &format!("I_D vs rivals, world {}", s.world));
    for (k, name) in ["T", "sigma", "F"].iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-weight="bold">{name}</text>"#,
            x0 + cw * (k as f64 + 0.5),
            y0 + 16.0
        );
    }
    if s.significance.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">no comparisons</text>"#,
            w / 2.0,
            y0 + rh + 16.0
        );
    }
    for (r, row) in s.significance.iter().enumerate() {
        let y = y0 + rh * (r as f64 + 1.0);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            y + 16.0,
            row.controller
        );
        for (k, t) in [&row.time, &row.sigma, &row.fitness]
            .into_iter()
            .enumerate()
        {
            let (color, text) = cell(t);
            let x = x0 + cw * k as f64;
            let _ = writeln!(
                svg,
                r##"<rect x="{x:.1}" y="{y:.1}" width="{cw}" height="{rh}" fill="{color}" stroke="#999"/>"##
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{text}</text>"#,
                x + cw / 2.0,
                y + 16.0
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{x0}" y="{:.1}" font-size="11">confidence (%) that I_D has the lower mean; shaded at 95 / 99 / 99.9</text>"#,
        h - 18.0
    );
    svg.push_str("</svg>\n");
    svg
}
