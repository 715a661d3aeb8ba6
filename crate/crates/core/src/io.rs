//! Text formats: curve files, `key = value` config, the CSV run report and
//! SVG frames.

use std::fmt::Write as _;
use std::io::{self, Write};

use serde_json::{Map, Value};

use crate::descent::{ClassTag, NormalFormClass, RunSummary};
use crate::error::{ElasticaError, Result};
use crate::geometry::{PolyCurve, Vec2};
use crate::DescentParams;

pub const CURVE_FILE_VERSION: u64 = 1;
pub const ENV_PREFIX: &str = "ELASTICA_";

fn parse_err(field: impl Into<String>, message: impl Into<String>) -> ElasticaError {
    ElasticaError::Parse {
        field: field.into(),
        message: message.into(),
    }
}

/// Contents of a curve file. Points may be a raw drawn trail of any length;
/// `into_curve` turns them into a polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFile {
    pub points: Vec<Vec2>,
    pub rest_lengths: Option<Vec<f64>>,
}

impl CurveFile {
    pub fn from_curve(curve: &PolyCurve) -> Self {
        CurveFile {
            points: curve.vertices().to_vec(),
            rest_lengths: Some(curve.rest_lengths().to_vec()),
        }
    }

    /// The stored polygon as is, with edge lengths as rest lengths when none
    /// are given.
    pub fn into_curve(self) -> Result<PolyCurve> {
        match self.rest_lengths {
            Some(rest) => PolyCurve::new(self.points, rest),
            None => PolyCurve::from_vertices(self.points),
        }
    }

    /// A polygon with `n` vertices: the stored one when it already has `n`
    /// points, otherwise an equal-chord resampling of the trail.
    pub fn to_polygon(&self, n: usize) -> Result<PolyCurve> {
        if self.points.len() == n {
            self.clone().into_curve()
        } else {
            crate::geometry::ingest(&self.points, n)
        }
    }
}

fn number(v: &Value, field: &str) -> Result<f64> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(parse_err(field, format!("expected a finite number, found {v}"))),
    }
}

pub fn parse_curve_file(text: &str) -> Result<CurveFile> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| parse_err("document", e.to_string()))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| parse_err("document", "expected an object"))?;
    match obj.get("version") {
        None => return Err(parse_err("version", "missing")),
        Some(v) if v.as_u64() == Some(CURVE_FILE_VERSION) => {}
        Some(v) => {
            return Err(parse_err(
                "version",
                format!("unsupported version {v}, expected {CURVE_FILE_VERSION}"),
            ))
        }
    }
    let raw_points = obj
        .get("points")
        .ok_or_else(|| parse_err("points", "missing"))?
        .as_array()
        .ok_or_else(|| parse_err("points", "expected an array of [x, y] pairs"))?;
    let mut points = Vec::with_capacity(raw_points.len());
    for (i, p) in raw_points.iter().enumerate() {
        let field = format!("points[{i}]");
        match p.as_array().map(Vec::as_slice) {
            Some([x, y]) => points.push(Vec2::new(number(x, &field)?, number(y, &field)?)),
            _ => return Err(parse_err(field, format!("expected [x, y], found {p}"))),
        }
    }
    if points.len() < 3 {
        return Err(parse_err(
            "points",
            format!("{} points, a closed curve needs at least 3", points.len()),
        ));
    }
    let rest_lengths = match obj.get("restLengths") {
        None | Some(Value::Null) => None,
        Some(Value::Array(items)) => {
            if items.len() != points.len() {
                return Err(parse_err(
                    "restLengths",
                    format!("{} entries for {} points", items.len(), points.len()),
                ));
            }
            let mut rest = Vec::with_capacity(items.len());
            for (i, d) in items.iter().enumerate() {
                let field = format!("restLengths[{i}]");
                let d = number(d, &field)?;
                if d <= 0.0 {
                    return Err(parse_err(field, "rest length must be positive"));
                }
                rest.push(d);
            }
            Some(rest)
        }
        Some(other) => {
            return Err(parse_err(
                "restLengths",
                format!("expected an array of numbers, found {other}"),
            ))
        }
    };
    Ok(CurveFile {
        points,
        rest_lengths,
    })
}

/// Pretty JSON; numbers use the shortest representation that reads back to
/// the same `f64`.
pub fn write_curve_file(file: &CurveFile) -> String {
    let mut obj = Map::new();
    obj.insert("version".into(), CURVE_FILE_VERSION.into());
    obj.insert(
        "points".into(),
        file.points.iter().map(|p| Value::from(vec![p.x, p.y])).collect(),
    );
    if let Some(rest) = &file.rest_lengths {
        obj.insert("restLengths".into(), rest.clone().into());
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("finite numbers");
    text.push('\n');
    text
}

pub fn curve_to_string(curve: &PolyCurve) -> String {
    write_curve_file(&CurveFile::from_curve(curve))
}

fn set_param(params: &DescentParams, key: &str, raw: &str, field: &str) -> Result<DescentParams> {
    let mut map = match serde_json::to_value(params) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("params serialize to an object"),
    };
    if !map.contains_key(key) {
        let known: Vec<&String> = map.keys().collect();
        return Err(parse_err(
            field,
            format!("unknown parameter {key:?}, expected one of {known:?}"),
        ));
    }
    let value: Value = serde_json::from_str(raw.trim())
        .map_err(|_| parse_err(field, format!("{raw:?} is not a number")))?;
    map.insert(key.to_string(), value);
    serde_json::from_value(Value::Object(map)).map_err(|e| parse_err(field, e.to_string()))
}

/// Applies `key = value` lines on top of `base`. Keys are the camelCase
/// parameter names; `#` starts a comment.
pub fn parse_config(text: &str, base: &DescentParams) -> Result<DescentParams> {
    let mut params = base.clone();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let field = format!("line {}", lineno + 1);
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(&field, format!("expected key = value, found {line:?}")))?;
        let key = key.trim();
        params = set_param(&params, key, value, &format!("{key} ({field})"))?;
    }
    Ok(params)
}

/// `FD_STEP` -> `fdStep`.
fn env_key_to_param(key: &str) -> String {
    let mut out = String::new();
    for (i, part) in key.split('_').filter(|p| !p.is_empty()).enumerate() {
        let lower = part.to_ascii_lowercase();
        if i == 0 {
            out.push_str(&lower);
        } else {
            let mut chars = lower.chars();
            if let Some(c) = chars.next() {
                out.push(c.to_ascii_uppercase());
                out.extend(chars);
            }
        }
    }
    out
}

/// Overrides from `ELASTICA_*` variables, e.g. `ELASTICA_C1=0.1` or
/// `ELASTICA_MAX_ITERS=5000`.
pub fn apply_env_overrides<I>(base: &DescentParams, vars: I) -> Result<DescentParams>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut params = base.clone();
    for (name, value) in vars {
        if let Some(rest) = name.strip_prefix(ENV_PREFIX) {
            params = set_param(&params, &env_key_to_param(rest), &value, &name)?;
        }
    }
    Ok(params)
}

/// `class=Circle k=2`, `class=FigureEight` or `class=Unconverged`.
pub fn class_label(tag: &ClassTag) -> String {
    match tag {
        ClassTag::Circle { k } => format!("class=Circle k={k}"),
        ClassTag::FigureEight => "class=FigureEight".into(),
        ClassTag::Unconverged => "class=Unconverged".into(),
    }
}

pub const REPORT_HEADER: &str = "iteration,energy,index,maxDisplacement";

/// Every recorded step as CSV, then one `# class=...` summary line.
pub fn write_report<W: Write>(mut w: W, summary: &RunSummary, class: &NormalFormClass) -> io::Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for r in &summary.records {
        writeln!(w, "{},{:e},{},{:e}", r.iteration, r.energy, r.index, r.max_displacement)?;
    }
    writeln!(
        w,
        "# {} index={} iterations={} energy={:e} quiescent={} lengthDrift={:e} curvatureCv={:e}",
        class_label(&class.tag),
        summary.last.index,
        summary.iterations(),
        summary.last.energy.discrete,
        summary.quiescent,
        summary.length_drift(),
        class.diagnostics.curvature_cv
    )?;
    w.flush()
}

/// The curve as a closed SVG path, fitted into its bounding box plus a 5%
/// margin, stroke width 1/400 of the viewport. `y` points up.
pub fn render_svg(curve: &PolyCurve) -> String {
    let v = curve.vertices();
    let (mut lo, mut hi) = (Vec2::new(f64::MAX, f64::MAX), Vec2::new(f64::MIN, f64::MIN));
    for p in v {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let extent = (hi.x - lo.x).max(hi.y - lo.y).max(f64::MIN_POSITIVE);
    let margin = 0.05 * extent;
    let (w, h) = (hi.x - lo.x + 2.0 * margin, hi.y - lo.y + 2.0 * margin);
    let (x0, y0) = (lo.x - margin, -hi.y - margin);
    let stroke = w.max(h) / 400.0;
    let mut d = String::new();
    for (i, p) in v.iter().enumerate() {
        let _ = write!(d, "{}{} {} ", if i == 0 { "M" } else { "L" }, p.x, -p.y);
    }
    d.push('Z');
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\" ",
            "width=\"800\" height=\"{:.0}\">\n",
            "<path d=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"{}\" ",
            "stroke-linejoin=\"round\"/>\n</svg>\n"
        ),
        x0,
        y0,
        w,
        h,
        800.0 * h / w,
        d,
        stroke
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::regular_polygon;

    #[test]
    fn missing_version_is_named() {
        let err = parse_curve_file(r#"{"points": [[0,0],[1,0],[0,1]]}"#).unwrap_err();
        assert!(matches!(err, ElasticaError::Parse { ref field, .. } if field == "version"));
    }

    #[test]
    fn bad_point_is_named() {
        let err = parse_curve_file(r#"{"version": 1, "points": [[0,0],[1,"a"],[0,1]]}"#).unwrap_err();
        assert_eq!(err.to_string(), "points[1]: expected a finite number, found \"a\"");
    }

    #[test]
    fn rest_length_count_mismatch() {
        let err = parse_curve_file(r#"{"version": 1, "points": [[0,0],[1,0],[0,1]], "restLengths": [1, 1]}"#)
            .unwrap_err();
        assert!(matches!(err, ElasticaError::Parse { ref field, .. } if field == "restLengths"));
    }

    #[test]
    fn curve_round_trip_is_exact() {
        let curve = PolyCurve::from_vertices(regular_polygon(37, 2, 3.3)).unwrap();
        let back = parse_curve_file(&curve_to_string(&curve)).unwrap().into_curve().unwrap();
        assert_eq!(back, curve);
    }

    #[test]
    fn config_lines_and_comments() {
        let p = parse_config("# tuned\nc1 = 0.1\n\nmaxIters=5000 # short\n", &DescentParams::default()).unwrap();
        assert_eq!(p.c1, 0.1);
        assert_eq!(p.max_iters, 5000);
        assert_eq!(p.c2, DescentParams::default().c2);
    }

    #[test]
    fn config_errors_name_the_key() {
        let d = DescentParams::default();
        assert!(parse_config("bogus = 1", &d).unwrap_err().to_string().starts_with("bogus (line 1)"));
        assert!(parse_config("n = 1.5", &d).unwrap_err().to_string().starts_with("n (line 1)"));
        assert!(parse_config("c1 0.1", &d).unwrap_err().to_string().starts_with("line 1"));
    }

    #[test]
    fn env_overrides_map_names() {
        assert_eq!(env_key_to_param("FD_STEP"), "fdStep");
        assert_eq!(env_key_to_param("N"), "n");
        let vars = vec![
            ("ELASTICA_QUIESCENCE_TOL".to_string(), "1e-7".to_string()),
            ("ELASTICA_N".to_string(), "64".to_string()),
            ("PATH".to_string(), "/bin".to_string()),
        ];
        let p = apply_env_overrides(&DescentParams::default(), vars).unwrap();
        assert_eq!(p.quiescence_tol, 1e-7);
        assert_eq!(p.n, 64);
    }

    #[test]
    fn svg_viewport_has_margin_and_stroke() {
        let curve = PolyCurve::from_vertices(regular_polygon(8, 1, 8.0)).unwrap();
        let svg = render_svg(&curve);
        let vb: Vec<f64> = svg.split("viewBox=\"").nth(1).unwrap().split('"').next().unwrap()
            .split(' ').map(|s| s.parse().unwrap()).collect();
        let span = |f: fn(&Vec2) -> f64| {
            let xs: Vec<f64> = curve.vertices().iter().map(f).collect();
            xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min)
        };
        let (w, h) = (span(|p| p.x), span(|p| p.y));
        assert!((vb[2] - (w + 0.1 * w.max(h))).abs() < 1e-12);
        assert!((vb[3] - (h + 0.1 * w.max(h))).abs() < 1e-12);
        let stroke: f64 = svg.split("stroke-width=\"").nth(1).unwrap().split('"').next().unwrap().parse().unwrap();
        assert!((stroke - vb[2].max(vb[3]) / 400.0).abs() < 1e-15);
    }
}
