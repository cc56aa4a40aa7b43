//! SVG drawing of the active elements, shaded by level.

use std::fmt::Write as _;
use std::io::Write;

use hdr_core::hierarchy::RefinementDomains;

use crate::args::PlotArgs;
use crate::{emit, load_checked, CliError, Status};

pub fn plot(a: &PlotArgs, out: &mut dyn Write, log: &mut dyn Write) -> Result<Status, CliError> {
    if !(a.size > 0.0 && a.size.is_finite()) {
        return Err(CliError::Invalid(format!("size must be positive, got {}", a.size)));
    }
    let (_, domains) = load_checked(&a.input, log)?;
    emit(a.out.as_deref(), &render_svg(&domains, a.size), out)?;
    Ok(Status::Clean)
}

/// Lighter for coarse levels, darker for fine ones.
fn shade(level: usize, top: usize) -> String {
    let t = if top == 0 { 0.0 } else { level as f64 / top as f64 };
    format!("hsl(210,55%,{:.0}%)", 92.0 - 52.0 * t)
}

/// One `<rect class="element">` per active element, with `y` pointing up.
pub fn render_svg(domains: &RefinementDomains, size: f64) -> String {
    let top = domains.max_level();
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    )
    .expect("string write");
    for l in 0..=top {
        let dims = domains.level(l).mesh().dims();
        let (w, h) = (size / dims[0] as f64, size / dims[1] as f64);
        let fill = shade(l, top);
        writeln!(s, r#"<g data-level="{l}" fill="{fill}" stroke="black" stroke-width="0.5">"#).expect("string write");
        for e in domains.active_elements(l).elements() {
            let x = (e.e1 - 1) as f64 * w;
            let y = size - e.e2 as f64 * h;
            writeln!(s, r#"<rect class="element" x="{x:.4}" y="{y:.4}" width="{w:.4}" height="{h:.4}"/>"#)
                .expect("string write");
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use hdr_core::univariate::BoundaryMode;

    #[test]
    fn uniform_mesh_has_one_rect_per_element() {
        let d = RefinementDomains::uniform([5, 3], [2, 2], BoundaryMode::Open).unwrap();
        let svg = render_svg(&d, 100.0);
        assert_eq!(svg.matches(r#"class="element""#).count(), 15);
        assert!(svg.contains(r#"x="80.0000" y="0.0000""#));
    }

    #[test]
    fn shading_darkens_with_level() {
        assert_eq!(shade(0, 0), "hsl(210,55%,92%)");
        assert_eq!(shade(2, 2), "hsl(210,55%,40%)");
    }
}
