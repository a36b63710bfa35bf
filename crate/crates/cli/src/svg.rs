//! Minimal hand-written SVG charts.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub fn palette(i: usize) -> String {
    PALETTE[i % PALETTE.len()].to_string()
}

/// Blue to red ramp for `t` in [0, 1].
pub fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (40.0 + 200.0 * t).round() as u8;
    let b = (220.0 - 180.0 * t).round() as u8;
    format!("#{r:02x}50{b:02x}")
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else if a >= 1.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.4}")
    }
}

fn nice_ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        esc(title)
    );
}

fn legend(out: &mut String, entries: &[(String, String)]) {
    let x = WIDTH - MARGIN_R + 15.0;
    for (i, (name, colour)) in entries.iter().enumerate() {
        let y = MARGIN_T + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{colour}\"/><text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            y - 10.0,
            x + 18.0,
            y,
            esc(name)
        );
    }
}

/// Plot area in pixels.
#[derive(Clone, Copy)]
struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool, zero: bool) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            lo = if log { 1e-3 } else { 0.0 };
            hi = 1.0;
        }
        if log {
            lo = 10f64.powf(lo.log10().floor());
            hi = 10f64.powf(hi.log10().ceil());
            if hi <= lo {
                hi = lo * 10.0;
            }
        } else {
            if zero {
                lo = lo.min(0.0);
                hi = hi.max(0.0);
            }
            if hi - lo < 1e-12 {
                hi = lo + 1.0;
            } else {
                let pad = 0.05 * (hi - lo);
                if !(zero && lo == 0.0) {
                    lo -= pad;
                }
                hi += pad;
            }
        }
        Axis { lo, hi, log }
    }

    fn frac(&self, v: f64) -> f64 {
        if self.log {
            (v.max(self.lo).log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        }
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let a = self.lo.log10().round() as i32;
            let b = self.hi.log10().round() as i32;
            let stride = ((b - a) / 6).max(1);
            (a..=b).step_by(stride as usize).map(|e| 10f64.powi(e)).collect()
        } else {
            nice_ticks(self.lo, self.hi, 5)
        }
    }
}

fn axes(out: &mut String, f: Frame, x: Option<&Axis>, y: &Axis, x_label: &str, y_label: &str, small: bool) {
    let _ = writeln!(
        out,
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"white\" stroke=\"black\"/>",
        f.x0, f.y0, f.w, f.h
    );
    let fs = if small { 9 } else { 11 };
    for t in y.ticks() {
        let py = f.y0 + f.h * (1.0 - y.frac(t));
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" stroke=\"#dddddd\"/><text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"{fs}\">{}</text>",
            f.x0,
            f.x0 + f.w,
            f.x0 - 4.0,
            py + 4.0,
            fmt_tick(t)
        );
    }
    if let Some(x) = x {
        for t in x.ticks() {
            let px = f.x0 + f.w * x.frac(t);
            let _ = writeln!(
                out,
                "<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"{fs}\">{}</text>",
                f.y0 + f.h + 14.0,
                fmt_tick(t)
            );
        }
    }
    if !x_label.is_empty() {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            f.x0 + f.w / 2.0,
            f.y0 + f.h + 34.0,
            esc(x_label)
        );
    }
    if !y_label.is_empty() {
        let (cx, cy) = (f.x0 - 52.0, f.y0 + f.h / 2.0);
        let _ = writeln!(
            out,
            "<text x=\"{cx:.1}\" y=\"{cy:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 {cx:.1} {cy:.1})\">{}</text>",
            esc(y_label)
        );
    }
}

pub struct BarSeries {
    pub name: String,
    pub colour: String,
    /// One value per group.
    pub values: Vec<f64>,
    pub errors: Option<Vec<f64>>,
}

/// Grouped bar chart, one cluster per group label.
pub fn bar_chart(title: &str, y_label: &str, groups: &[String], series: &[BarSeries], log_y: bool) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let f = Frame {
        x0: MARGIN_L,
        y0: MARGIN_T,
        w: WIDTH - MARGIN_L - MARGIN_R,
        h: HEIGHT - MARGIN_T - MARGIN_B,
    };
    let extent = series.iter().flat_map(|s| {
        s.values.iter().enumerate().flat_map(move |(i, v)| {
            let e = s.errors.as_ref().map_or(0.0, |e| e[i]);
            [v - e, v + e, *v]
        })
    });
    let y = Axis::new(extent, log_y, true);
    axes(&mut out, f, None, &y, "", y_label, false);
    let cluster = f.w / groups.len().max(1) as f64;
    let bar = 0.8 * cluster / series.len().max(1) as f64;
    let base = f.y0 + f.h * (1.0 - y.frac(if log_y { y.lo } else { 0f64.max(y.lo) }));
    for (g, label) in groups.iter().enumerate() {
        let cx = f.x0 + cluster * (g as f64 + 0.5);
        let _ = writeln!(
            out,
            "<text x=\"{cx:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            f.y0 + f.h + 16.0,
            esc(label)
        );
        for (s, ser) in series.iter().enumerate() {
            let v = ser.values[g];
            if !v.is_finite() {
                continue;
            }
            let x = f.x0 + cluster * g as f64 + 0.1 * cluster + bar * s as f64;
            let top = f.y0 + f.h * (1.0 - y.frac(v));
            let _ = writeln!(
                out,
                "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"{}\"/>",
                top.min(base),
                bar * 0.9,
                (base - top).abs(),
                ser.colour
            );
            if let Some(e) = ser.errors.as_ref().map(|e| e[g]).filter(|e| *e > 0.0) {
                let mid = x + bar * 0.45;
                let lo = f.y0 + f.h * (1.0 - y.frac(v - e));
                let hi = f.y0 + f.h * (1.0 - y.frac(v + e));
                let _ = writeln!(
                    out,
                    "<path d=\"M{mid:.1} {lo:.1}V{hi:.1}M{:.1} {lo:.1}H{:.1}M{:.1} {hi:.1}H{:.1}\" stroke=\"black\" fill=\"none\"/>",
                    mid - 3.0,
                    mid + 3.0,
                    mid - 3.0,
                    mid + 3.0
                );
            }
        }
    }
    let entries: Vec<(String, String)> = series.iter().map(|s| (s.name.clone(), s.colour.clone())).collect();
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

pub struct LineSeries {
    pub name: String,
    pub colour: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub errors: Option<Vec<f64>>,
    /// SVG `stroke-dasharray`, solid when `None`.
    pub dash: Option<String>,
}

fn draw_lines(out: &mut String, f: Frame, x: &Axis, y: &Axis, series: &[LineSeries], x_max: f64, markers: bool) {
    for s in series {
        let pts: Vec<(f64, f64)> = s
            .xs
            .iter()
            .zip(&s.ys)
            .filter(|(xv, yv)| **xv <= x_max && yv.is_finite())
            .map(|(&xv, &yv)| (f.x0 + f.w * x.frac(xv), f.y0 + f.h * (1.0 - y.frac(yv).clamp(0.0, 1.0))))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let mut d = String::new();
        for (i, (px, py)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{px:.1} {py:.1}", if i == 0 { "M" } else { "L" });
        }
        let dash = s
            .dash
            .as_ref()
            .map_or(String::new(), |d| format!(" stroke-dasharray=\"{d}\""));
        let _ = writeln!(
            out,
            "<path d=\"{d}\" stroke=\"{}\" stroke-width=\"1.5\" fill=\"none\"{dash}/>",
            s.colour
        );
        if markers {
            for (px, py) in &pts {
                let _ = writeln!(out, "<circle cx=\"{px:.1}\" cy=\"{py:.1}\" r=\"2.5\" fill=\"{}\"/>", s.colour);
            }
        }
        if let Some(errs) = &s.errors {
            for ((&xv, &yv), &e) in s.xs.iter().zip(&s.ys).zip(errs) {
                if xv > x_max || !(e > 0.0) {
                    continue;
                }
                let px = f.x0 + f.w * x.frac(xv);
                let lo = f.y0 + f.h * (1.0 - y.frac(yv - e).clamp(0.0, 1.0));
                let hi = f.y0 + f.h * (1.0 - y.frac(yv + e).clamp(0.0, 1.0));
                let _ = writeln!(
                    out,
                    "<path d=\"M{px:.1} {lo:.1}V{hi:.1}\" stroke=\"{}\" fill=\"none\"/>",
                    s.colour
                );
            }
        }
    }
}

/// Line chart. `inset_x_max` adds a zoomed panel covering `x <= inset_x_max`.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[LineSeries],
    log_y: bool,
    inset_x_max: Option<f64>,
) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let f = Frame {
        x0: MARGIN_L,
        y0: MARGIN_T,
        w: WIDTH - MARGIN_L - MARGIN_R,
        h: HEIGHT - MARGIN_T - MARGIN_B,
    };
    let x = Axis::new(series.iter().flat_map(|s| s.xs.iter().copied()), false, false);
    let x = Axis { lo: x.lo.max(series_min_x(series)), ..x };
    let ys = series.iter().flat_map(|s| {
        s.ys.iter().enumerate().flat_map(move |(i, v)| {
            let e = s.errors.as_ref().map_or(0.0, |e| e[i]);
            [v - e, v + e]
        })
    });
    let y = Axis::new(ys, log_y, false);
    axes(&mut out, f, Some(&x), &y, x_label, y_label, false);
    draw_lines(&mut out, f, &x, &y, series, f64::INFINITY, series.iter().all(|s| s.xs.len() <= 30));

    if let Some(xm) = inset_x_max {
        let inset = Frame {
            x0: f.x0 + 0.45 * f.w,
            y0: f.y0 + 0.08 * f.h,
            w: 0.5 * f.w,
            h: 0.4 * f.h,
        };
        let xi = Axis {
            lo: x.lo,
            hi: xm,
            log: false,
        };
        let yi = Axis::new(
            series.iter().flat_map(|s| s.xs.iter().zip(&s.ys).filter(|(xv, _)| **xv <= xm).map(|(_, y)| *y)),
            log_y,
            false,
        );
        axes(&mut out, inset, Some(&xi), &yi, "", "", true);
        draw_lines(&mut out, inset, &xi, &yi, series, xm, false);
    }

    let entries: Vec<(String, String)> = series.iter().map(|s| (s.name.clone(), s.colour.clone())).collect();
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

fn series_min_x(series: &[LineSeries]) -> f64 {
    series
        .iter()
        .flat_map(|s| s.xs.iter().copied())
        .fold(f64::INFINITY, f64::min)
}
